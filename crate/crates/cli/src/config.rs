//! TOML run configuration: schema, defaults, and load-time validation.
//!
//! Every section is optional; an empty file yields the documented defaults
//! (1D grid with n = 128, gamma law (1.0, 1.4), the `smooth-1d` preset,
//! Lagrangian solver, T = 0.2, dt = 1e-3, p = 2, beta = d/p + 1.5,
//! damping 1.0). Validation collects every violated field before failing.

use anyhow::{anyhow, Result};
use serde::Deserialize;
use std::path::Path;
use torus_euler::field::{ScalarField, VectorField};
use torus_euler::grid::TorusGrid;
use torus_euler::initial::{fourier_scalar, fourier_vector, preset, Mode};
use torus_euler::interp::InterpMethod;
use torus_euler::lagrangian::PicardConfig;
use torus_euler::thermo::PressureLaw;

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub law: LawSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub picard: PicardSection,
    #[serde(default)]
    pub frechet: Option<FrechetSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(default = "default_n")]
    pub n: usize,
}

fn default_d() -> usize {
    1
}
fn default_n() -> usize {
    128
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { d: 1, n: 128 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawSection {
    #[serde(default = "default_law_name")]
    pub name: String,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    pub rho_min: Option<f64>,
    /// (rho, p) samples for `name = "tabulated"`.
    pub points: Option<Vec<(f64, f64)>>,
}

fn default_law_name() -> String {
    "gamma".into()
}
fn default_kappa() -> f64 {
    1.0
}
fn default_gamma() -> f64 {
    1.4
}

impl Default for LawSection {
    fn default() -> Self {
        LawSection {
            name: "gamma".into(),
            kappa: 1.0,
            gamma: 1.4,
            rho_min: None,
            points: None,
        }
    }
}

/// One Fourier mode in the config file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub k: Vec<i64>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

impl ModeSpec {
    fn to_mode(&self) -> Mode {
        Mode {
            k: [
                self.k.first().copied().unwrap_or(0),
                self.k.get(1).copied().unwrap_or(0),
            ],
            cos_amp: self.cos,
            sin_amp: self.sin,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    /// Named preset; mutually exclusive with the mode lists below.
    pub preset: Option<String>,
    pub rho_mean: Option<f64>,
    pub rho_modes: Option<Vec<ModeSpec>>,
    pub u_means: Option<Vec<f64>>,
    /// One list of modes per velocity component.
    pub u_modes: Option<Vec<Vec<ModeSpec>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_solver")]
    pub solver: String,
    #[serde(default = "default_t_final")]
    pub t_final: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_out_dir")]
    pub out_dir: String,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
}

fn default_solver() -> String {
    "lagrangian".into()
}
fn default_t_final() -> f64 {
    0.2
}
fn default_dt() -> f64 {
    1e-3
}
fn default_out_dir() -> String {
    "out".into()
}
fn default_stride() -> usize {
    20
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            solver: default_solver(),
            t_final: default_t_final(),
            dt: default_dt(),
            out_dir: default_out_dir(),
            snapshot_stride: default_stride(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardSection {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    pub epsilon: Option<f64>,
    #[serde(default = "default_damping")]
    pub damping: f64,
    pub beta: Option<f64>,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_interp")]
    pub interp: String,
    #[serde(default)]
    pub global_iteration: bool,
}

fn default_tol() -> f64 {
    1e-9
}
fn default_max_iters() -> usize {
    60
}
fn default_damping() -> f64 {
    1.0
}
fn default_p() -> f64 {
    2.0
}
fn default_interp() -> String {
    "spectral".into()
}

impl Default for PicardSection {
    fn default() -> Self {
        PicardSection {
            tol: default_tol(),
            max_iters: default_max_iters(),
            epsilon: None,
            damping: default_damping(),
            beta: None,
            p: default_p(),
            interp: default_interp(),
            global_iteration: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrechetSection {
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    pub cases: Option<Vec<FrechetCase>>,
    #[serde(default = "default_frechet_dt")]
    pub dt: f64,
}

// Sweep deltas sized so the delta^2 truncation signal stays well above the
// finite-difference roundoff floor on every battery case.
fn default_deltas() -> Vec<f64> {
    vec![3e-2, 1e-2, 3e-3]
}
fn default_frechet_dt() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrechetCase {
    pub name: Option<String>,
    pub t: f64,
    #[serde(default)]
    pub u0_mean: f64,
    #[serde(default)]
    pub u0_modes: Vec<ModeSpec>,
    #[serde(default)]
    pub w_mean: f64,
    #[serde(default)]
    pub w_modes: Vec<ModeSpec>,
}

/// Which solver(s) a run drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    Lagrangian,
    Reference,
    Both,
}

impl SolverChoice {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "lagrangian" => Ok(SolverChoice::Lagrangian),
            "reference" => Ok(SolverChoice::Reference),
            "both" => Ok(SolverChoice::Both),
            other => Err(anyhow!(
                "run.solver: unknown solver '{other}' (expected lagrangian, reference or both)"
            )),
        }
    }
}

/// Fully validated configuration, ready to run.
pub struct RunConfig {
    pub grid: TorusGrid,
    pub law: PressureLaw,
    pub rho0: ScalarField,
    pub u0: VectorField,
    pub solver: SolverChoice,
    pub t_final: f64,
    pub dt: f64,
    pub out_dir: String,
    pub snapshot_stride: usize,
    pub picard: PicardConfig,
    pub frechet: Option<FrechetSection>,
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow!("cannot read config {}: {e}", path.display()))?;
    let raw: RawConfig =
        toml::from_str(&text).map_err(|e| anyhow!("config parse error: {e}"))?;
    validate(raw)
}

/// Turn a parsed file into a validated `RunConfig`, reporting every violated
/// field at once.
pub fn validate(raw: RawConfig) -> Result<RunConfig> {
    let mut violations: Vec<String> = Vec::new();

    let grid = match TorusGrid::new(raw.grid.d, raw.grid.n) {
        Ok(g) => Some(g),
        Err(e) => {
            violations.push(format!("grid: {e}"));
            None
        }
    };

    let law = build_law(&raw.law, &mut violations);

    // run section
    let solver = match SolverChoice::parse(&raw.run.solver) {
        Ok(s) => Some(s),
        Err(e) => {
            violations.push(e.to_string());
            None
        }
    };
    if raw.run.dt <= 0.0 {
        violations.push(format!("run.dt: need dt > 0, got {}", raw.run.dt));
    }
    if raw.run.t_final < 0.0 {
        violations.push(format!(
            "run.t_final: need t_final >= 0, got {}",
            raw.run.t_final
        ));
    }
    if raw.run.snapshot_stride == 0 {
        violations.push("run.snapshot_stride: need at least 1".into());
    }

    // picard section
    let interp = match raw.picard.interp.as_str() {
        "spectral" => Some(InterpMethod::Spectral),
        "spline" => Some(InterpMethod::CubicSpline),
        other => {
            violations.push(format!(
                "picard.interp: unknown method '{other}' (expected spectral or spline)"
            ));
            None
        }
    };

    // initial data needs the grid
    let data = if let Some(g) = &grid {
        build_initial(&raw.initial, g, &mut violations)
    } else {
        None
    };

    // min rho0 above the vacuum floor, checked at load
    if let (Some((rho0, _)), Some(law)) = (&data, &law) {
        if rho0.min() <= law.rho_min() {
            violations.push(format!(
                "initial.rho0: min rho0 = {:.3e} is not above the vacuum floor {:.1e}",
                rho0.min(),
                law.rho_min()
            ));
        }
    }

    let mut picard = PicardConfig::new(raw.run.dt);
    picard.picard_tol = raw.picard.tol;
    picard.max_iters = raw.picard.max_iters;
    picard.epsilon = raw.picard.epsilon;
    picard.damping = raw.picard.damping;
    picard.beta = raw.picard.beta;
    picard.p = raw.picard.p;
    picard.interp = interp.unwrap_or_default();
    picard.global_iteration = raw.picard.global_iteration;
    if let Some(g) = &grid {
        if raw.run.dt > 0.0 {
            if let Err(e) = picard.validate(g) {
                violations.push(format!("picard: {e}"));
            }
        }
    }

    if let Some(frechet) = &raw.frechet {
        if let Some(cases) = &frechet.cases {
            if cases.is_empty() {
                violations.push("frechet.cases: no cases".into());
            }
        }
        if frechet.deltas.is_empty() || frechet.deltas.iter().any(|&d| d <= 0.0) {
            violations.push("frechet.deltas: need a nonempty list of positive deltas".into());
        }
        if frechet.dt <= 0.0 {
            violations.push("frechet.dt: need dt > 0".into());
        }
    }

    if !violations.is_empty() {
        return Err(anyhow!(
            "invalid configuration:\n  - {}",
            violations.join("\n  - ")
        ));
    }
    let (rho0, u0) = data.unwrap();
    Ok(RunConfig {
        grid: grid.unwrap(),
        law: law.unwrap(),
        rho0,
        u0,
        solver: solver.unwrap(),
        t_final: raw.run.t_final,
        dt: raw.run.dt,
        out_dir: raw.run.out_dir,
        snapshot_stride: raw.run.snapshot_stride,
        picard,
        frechet: raw.frechet,
    })
}

fn build_law(section: &LawSection, violations: &mut Vec<String>) -> Option<PressureLaw> {
    let law = match section.name.as_str() {
        "gamma" => PressureLaw::gamma_law(section.kappa, section.gamma),
        "isothermal" => PressureLaw::isothermal_law(section.kappa),
        "tabulated" => match &section.points {
            Some(points) => PressureLaw::tabulated(points),
            None => {
                violations.push("law.points: tabulated law needs (rho, p) samples".into());
                return None;
            }
        },
        other => {
            violations.push(format!(
                "law.name: unknown law '{other}' (available: gamma, isothermal, tabulated)"
            ));
            return None;
        }
    };
    match law {
        Ok(l) => Some(match section.rho_min {
            Some(m) if m > 0.0 => l.with_rho_min(m),
            Some(m) => {
                violations.push(format!("law.rho_min: need rho_min > 0, got {m}"));
                return None;
            }
            None => l,
        }),
        Err(e) => {
            violations.push(format!("law: {e}"));
            None
        }
    }
}

fn build_initial(
    section: &InitialSection,
    grid: &TorusGrid,
    violations: &mut Vec<String>,
) -> Option<(ScalarField, VectorField)> {
    let has_modes = section.rho_modes.is_some() || section.u_modes.is_some();
    match (&section.preset, has_modes) {
        (Some(_), true) => {
            violations
                .push("initial: give either a preset or explicit mode lists, not both".into());
            None
        }
        (Some(name), false) => match preset(name, grid) {
            Ok(data) => Some((data.rho0, data.u0)),
            Err(e) => {
                violations.push(format!("initial.preset: {e}")); // lists available names
                None
            }
        },
        (None, _) => {
            if !has_modes && section.rho_mean.is_none() {
                // nothing specified at all: documented default preset
                return match preset(default_preset_for(grid), grid) {
                    Ok(data) => Some((data.rho0, data.u0)),
                    Err(e) => {
                        violations.push(format!("initial: {e}"));
                        None
                    }
                };
            }
            let rho_modes: Vec<Mode> = section
                .rho_modes
                .as_deref()
                .unwrap_or(&[])
                .iter()
                .map(ModeSpec::to_mode)
                .collect();
            let rho0 = fourier_scalar(grid, section.rho_mean.unwrap_or(1.0), &rho_modes);

            let d = grid.dim();
            let empty = vec![Vec::new(); d];
            let u_mode_specs = section.u_modes.as_ref().unwrap_or(&empty);
            if u_mode_specs.len() != d {
                violations.push(format!(
                    "initial.u_modes: need {d} component list(s), got {}",
                    u_mode_specs.len()
                ));
                return None;
            }
            let u_modes: Vec<Vec<Mode>> = u_mode_specs
                .iter()
                .map(|list| list.iter().map(ModeSpec::to_mode).collect())
                .collect();
            let means = section.u_means.clone().unwrap_or_else(|| vec![0.0; d]);
            if means.len() != d {
                violations.push(format!(
                    "initial.u_means: need {d} value(s), got {}",
                    means.len()
                ));
                return None;
            }
            let u0 = fourier_vector(grid, &means, &u_modes);
            Some((rho0, u0))
        }
    }
}

fn default_preset_for(grid: &TorusGrid) -> &'static str {
    if grid.dim() == 1 {
        "smooth-1d"
    } else {
        "smooth-2d"
    }
}
