//! CSV writers: per-step diagnostics, cross-solver comparison, and the
//! flow-derivative validation battery.

use crate::config::{FrechetCase, FrechetSection};
use crate::snapshot::Snapshot;
use anyhow::{bail, Context, Result};
use std::io::{BufWriter, Write};
use std::path::Path;
use torus_euler::field::{ScalarField, VectorField};
use torus_euler::frechet::{
    fd_gateaux, flow_displacement, flow_frechet_at_zero, labels_displacement,
    labels_frechet_at_zero, loglog_slope, LinearizationResult,
};
use torus_euler::grid::TorusGrid;
use torus_euler::initial::{fourier_scalar, Mode};
use torus_euler::lagrangian::Diagnostics;
use torus_euler::spectral::{bessel_norm, lp_norm};

pub fn write_diagnostics(path: &Path, diag: &Diagnostics) -> Result<()> {
    let file = std::fs::File::create(path)
        .with_context(|| format!("creating diagnostics {}", path.display()))?;
    let mut w = BufWriter::new(file);
    writeln!(
        w,
        "t,mass,rho_norm,u_norm,residual_norm,min_rho,min_det,picard_iters"
    )?;
    for r in &diag.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.t, r.mass, r.rho_norm, r.u_norm, r.residual_norm, r.min_rho, r.min_det,
            r.picard_iters
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn rel_l2(a: &ScalarField, b: &ScalarField) -> f64 {
    lp_norm(&a.sub(b), 2.0).unwrap() / lp_norm(b, 2.0).unwrap().max(1e-14)
}

fn rel_hbeta(a: &ScalarField, b: &ScalarField, beta: f64, p: f64) -> f64 {
    bessel_norm(&a.sub(b), beta, p).unwrap() / bessel_norm(b, beta, p).unwrap().max(1e-14)
}

/// One comparison row between matching snapshots.
pub struct ComparisonRow {
    pub t: f64,
    pub rel_l2_rho: f64,
    pub rel_l2_u: f64,
    pub rel_hbeta_rho: f64,
    pub rel_hbeta_u: f64,
}

/// Field-by-field comparison of two snapshots on the same grid.
pub fn compare_snapshots(a: &Snapshot, b: &Snapshot, beta: f64, p: f64) -> Result<ComparisonRow> {
    if a.grid != b.grid {
        bail!("snapshots live on different grids");
    }
    let field = |snap: &Snapshot, name: &str| -> Result<ScalarField> {
        snap.field(name)
            .cloned()
            .ok_or_else(|| anyhow::anyhow!("snapshot is missing field '{name}'"))
    };
    let rho_a = field(a, "rho")?;
    let rho_b = field(b, "rho")?;
    let mut l2_u_num = 0.0;
    let mut l2_u_den = 0.0;
    let mut hb_u_num = 0.0;
    let mut hb_u_den = 0.0;
    for name in ["u_x", "u_y"] {
        if a.field(name).is_none() {
            continue;
        }
        let ua = field(a, name)?;
        let ub = field(b, name)?;
        let d = lp_norm(&ua.sub(&ub), 2.0)?;
        let s = lp_norm(&ub, 2.0)?;
        l2_u_num += d * d;
        l2_u_den += s * s;
        let dh = bessel_norm(&ua.sub(&ub), beta, p)?;
        let sh = bessel_norm(&ub, beta, p)?;
        hb_u_num += dh * dh;
        hb_u_den += sh * sh;
    }
    Ok(ComparisonRow {
        t: a.t,
        rel_l2_rho: rel_l2(&rho_a, &rho_b),
        rel_l2_u: l2_u_num.sqrt() / l2_u_den.sqrt().max(1e-14),
        rel_hbeta_rho: rel_hbeta(&rho_a, &rho_b, beta, p),
        rel_hbeta_u: hb_u_num.sqrt() / hb_u_den.sqrt().max(1e-14),
    })
}

pub fn write_comparison_to(w: &mut dyn Write, rows: &[ComparisonRow]) -> Result<()> {
    writeln!(w, "t,rel_l2_rho,rel_l2_u,rel_hbeta_rho,rel_hbeta_u")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.t, r.rel_l2_rho, r.rel_l2_u, r.rel_hbeta_rho, r.rel_hbeta_u
        )?;
    }
    Ok(())
}

pub fn write_comparison(path: &Path, rows: &[ComparisonRow]) -> Result<()> {
    let file = std::fs::File::create(path)
        .with_context(|| format!("creating comparison {}", path.display()))?;
    let mut w = BufWriter::new(file);
    write_comparison_to(&mut w, rows)?;
    w.flush()?;
    Ok(())
}

fn case_field(grid: &TorusGrid, mean: f64, modes: &[crate::config::ModeSpec]) -> VectorField {
    let ms: Vec<Mode> = modes
        .iter()
        .map(|m| Mode {
            k: [
                m.k.first().copied().unwrap_or(0),
                m.k.get(1).copied().unwrap_or(0),
            ],
            cos_amp: m.cos,
            sin_amp: m.sin,
        })
        .collect();
    VectorField::new(vec![fourier_scalar(grid, mean, &ms)]).expect("1d field")
}

/// The built-in battery: base velocities {0, sin x, sin x + 0.3 cos 2x},
/// directions {1, cos x}, times {0.1, 0.3}.
pub fn default_battery() -> Vec<FrechetCase> {
    let mode = |k: i64, cos: f64, sin: f64| crate::config::ModeSpec {
        k: vec![k, 0],
        cos,
        sin,
    };
    let bases: Vec<(&str, f64, Vec<crate::config::ModeSpec>)> = vec![
        ("zero", 0.0, vec![]),
        ("sin", 0.0, vec![mode(1, 0.0, 1.0)]),
        ("sin+cos2", 0.0, vec![mode(1, 0.0, 1.0), mode(2, 0.3, 0.0)]),
    ];
    let dirs: Vec<(&str, f64, Vec<crate::config::ModeSpec>)> = vec![
        ("one", 1.0, vec![]),
        ("cos", 0.0, vec![mode(1, 1.0, 0.0)]),
    ];
    let mut cases = Vec::new();
    for (bn, bm, bmodes) in &bases {
        for (dn, dm, dmodes) in &dirs {
            for &t in &[0.1, 0.3] {
                cases.push(FrechetCase {
                    name: Some(format!("u0={bn} w={dn} t={t}")),
                    t,
                    u0_mean: *bm,
                    u0_modes: bmodes.clone(),
                    w_mean: *dm,
                    w_modes: dmodes.clone(),
                });
            }
        }
    }
    cases
}

/// Run the flow/labels derivative battery and emit one CSV row per
/// (case, map, delta), with the per-case log-log slope repeated on its rows.
pub fn run_frechet_report(
    grid: &TorusGrid,
    section: &FrechetSection,
    out: &mut dyn Write,
) -> Result<()> {
    if grid.dim() != 1 {
        bail!("the derivative battery is 1D; set grid.d = 1");
    }
    let cases = match &section.cases {
        Some(cases) if cases.is_empty() => bail!("no cases"),
        Some(cases) => cases.clone(),
        None => default_battery(),
    };
    writeln!(
        out,
        "case,map,t,delta,rel_error_l2,rel_error_max,slope"
    )?;
    let dt = section.dt;
    for (i, case) in cases.iter().enumerate() {
        let label = case
            .name
            .clone()
            .unwrap_or_else(|| format!("case{i}"));
        let u0 = case_field(grid, case.u0_mean, &case.u0_modes);
        let w = case_field(grid, case.w_mean, &case.w_modes);

        for map_kind in ["flow", "labels"] {
            let analytic = match map_kind {
                "flow" => flow_frechet_at_zero(&u0, &w, case.t, grid, dt)?,
                _ => labels_frechet_at_zero(&u0, &w, case.t, grid, dt)?,
            };
            let mut rows = Vec::new();
            for &delta in &section.deltas {
                let fd = match map_kind {
                    "flow" => {
                        fd_gateaux(|u| flow_displacement(u, case.t, grid, dt), &u0, &w, delta)?
                    }
                    _ => fd_gateaux(
                        |u| labels_displacement(u, case.t, grid, dt),
                        &u0,
                        &w,
                        delta,
                    )?,
                };
                let r = LinearizationResult::compare(analytic.clone(), fd, delta)?;
                rows.push(r);
            }
            let slope = loglog_slope(
                &rows
                    .iter()
                    .map(|r| (r.delta, r.rel_error_l2))
                    .collect::<Vec<_>>(),
            );
            for r in &rows {
                writeln!(
                    out,
                    "{label},{map_kind},{},{},{},{},{}",
                    case.t, r.delta, r.rel_error_l2, r.rel_error_max, slope
                )?;
            }
        }
    }
    Ok(())
}
