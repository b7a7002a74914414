//! TOML run configuration with line-numbered diagnostics.
//!
//! ```toml
//! seed = 7
//! [grid]
//! cells = [128]
//! extent = [1.0]
//! [time]
//! horizon = 1.0
//! dt = 1e-3
//! [laws]
//! preset = "general-split"
//! [regularization]
//! delta = 0.01
//! [initial]
//! preset = "gaussian-bump"
//! velocity_amp = 0.5
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::constitutive::{validate_hypotheses, ConstitutiveSet, HSpec, HypothesisReport, SampleGrid, ScalarLaw};
use crate::continuation::{SweepBase, SweepParam};
use crate::degiorgi::DeGiorgiConfig;
use crate::diagnostics::{EnergyCheckOptions, PoincareHypotheses, RenormCheckOptions};
use crate::discretization::Grid;
use crate::error::{Error, Result};
use crate::initdata::{InitialData, InitialSpec, RegularizeOptions};
use crate::solver::{Forcing, RegularizationParams, TimeConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// One entry in 1D, two in 2D.
    pub cells: Vec<usize>,
    #[serde(default)]
    pub extent: Vec<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            cells: vec![128],
            extent: vec![1.0],
        }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid> {
        let extent = if self.extent.is_empty() {
            vec![1.0; self.cells.len()]
        } else {
            self.extent.clone()
        };
        match (self.cells.as_slice(), extent.as_slice()) {
            ([n], [l]) => Grid::new_1d(*n, *l),
            ([nx, ny], [lx, ly]) => Grid::new_2d(*nx, *ny, *lx, *ly),
            _ => Err(Error::InvalidInput(
                "grid.cells and grid.extent must both have one (1D) or two (2D) entries".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LawPreset {
    #[default]
    GeneralSplit,
    IdealLike,
}

/// Serializable scalar law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LawSpec {
    Constant { value: f64 },
    Affine { c0: f64, c1: f64 },
    Power { coeff: f64, exponent: f64 },
    Polynomial { coefficients: Vec<f64> },
}

impl LawSpec {
    pub fn build(&self) -> ScalarLaw {
        match self {
            LawSpec::Constant { value } => ScalarLaw::constant(*value),
            LawSpec::Affine { c0, c1 } => ScalarLaw::affine(*c0, *c1),
            LawSpec::Power { coeff, exponent } => ScalarLaw::power(*coeff, *exponent),
            LawSpec::Polynomial { coefficients } => ScalarLaw::Polynomial(coefficients.clone()),
        }
    }
}

/// Preset plus optional per-law and per-constant overrides.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LawsConfig {
    pub preset: LawPreset,
    pub p_e: Option<LawSpec>,
    pub p_theta: Option<LawSpec>,
    pub r_gas: Option<f64>,
    pub mu: Option<LawSpec>,
    pub lambda: Option<LawSpec>,
    pub nu: Option<LawSpec>,
    pub kappa: Option<LawSpec>,
    pub gamma: Option<f64>,
    pub a1: Option<f64>,
    pub a2: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub kappa_lo: Option<f64>,
    pub kappa_hi: Option<f64>,
    pub c_nu: Option<f64>,
}

impl LawsConfig {
    pub fn build(&self) -> ConstitutiveSet {
        let mut cs = match self.preset {
            LawPreset::GeneralSplit => ConstitutiveSet::general_split(),
            LawPreset::IdealLike => ConstitutiveSet::ideal_like(),
        };
        let set = |slot: &mut ScalarLaw, spec: &Option<LawSpec>| {
            if let Some(s) = spec {
                *slot = s.build();
            }
        };
        set(&mut cs.p_e, &self.p_e);
        set(&mut cs.p_theta, &self.p_theta);
        set(&mut cs.mu, &self.mu);
        set(&mut cs.lambda, &self.lambda);
        set(&mut cs.kappa, &self.kappa);
        if let Some(nu) = &self.nu {
            cs.nu = Some(nu.build());
        }
        let k = &mut cs.constants;
        for (slot, v) in [
            (&mut k.gamma, self.gamma),
            (&mut k.a1, self.a1),
            (&mut k.a2, self.a2),
            (&mut k.b, self.b),
            (&mut k.c, self.c),
            (&mut k.kappa_lo, self.kappa_lo),
            (&mut k.kappa_hi, self.kappa_hi),
            (&mut k.c_nu, self.c_nu),
        ] {
            if let Some(v) = v {
                *slot = v;
            }
        }
        if let Some(r) = self.r_gas {
            cs.r_gas = r;
        }
        cs
    }
}

/// Serializable renormalizing weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RenormSpec {
    InversePower { l: f64 },
    Xi { xi: f64 },
    Constant { value: f64 },
    TruncatedLog { omega: f64, cutoff: f64 },
}

impl RenormSpec {
    pub fn build(&self) -> HSpec {
        match *self {
            RenormSpec::InversePower { l } => HSpec::InversePower { l },
            RenormSpec::Xi { xi } => HSpec::Xi { xi },
            RenormSpec::Constant { value } => HSpec::Constant { value },
            RenormSpec::TruncatedLog { omega, cutoff } => HSpec::TruncatedLog { omega, cutoff },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsConfig {
    pub energy: bool,
    pub energy_check: EnergyCheckOptions,
    pub renorm: bool,
    pub renorm_check: RenormCheckOptions,
    pub renormalizers: Vec<RenormSpec>,
    /// Number of weighted Poincaré samples; 0 disables the check.
    pub poincare_samples: usize,
    pub poincare: PoincareHypotheses,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            energy: true,
            energy_check: EnergyCheckOptions::default(),
            renorm: true,
            renorm_check: RenormCheckOptions::default(),
            renormalizers: vec![
                RenormSpec::InversePower { l: 1.0 },
                RenormSpec::Xi { xi: 0.5 },
                RenormSpec::Constant { value: 1.0 },
            ],
            poincare_samples: 0,
            poincare: PoincareHypotheses {
                m1: 0.5,
                m2: 10.0,
                gamma: 2.0,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub param: SweepParam,
    pub levels: Vec<f64>,
    /// Density threshold of the low-density temperature probe.
    pub omega: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            param: SweepParam::Eta,
            levels: vec![1e-1, 1e-2, 1e-3],
            omega: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Write binary snapshots of `[ϱ, u, ϑ]`.
    pub snapshots: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            snapshots: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub grid: GridConfig,
    pub time: TimeConfig,
    pub laws: LawsConfig,
    pub regularization: RegularizationParams,
    pub initial: InitialSpec,
    pub regularize: RegularizeOptions,
    pub diagnostics: DiagnosticsConfig,
    pub degiorgi: DeGiorgiConfig,
    pub sweep: SweepConfig,
    pub forcing: Forcing,
    pub output: OutputConfig,
}

/// 1-based line of the first line whose trimmed text starts with `needle`, or 0.
fn line_of(text: &str, needle: &str) -> usize {
    text.lines()
        .position(|l| l.trim_start().starts_with(needle))
        .map_or(0, |i| i + 1)
}

fn config_error(text: &str, section: &str, e: Error) -> Error {
    Error::Config {
        line: line_of(text, &format!("[{section}")),
        message: format!("[{section}] {e}"),
    }
}

impl RunConfig {
    /// Parse and structurally validate. Hypothesis checks are separate
    /// (see [`RunConfig::hypotheses`]).
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map_or(0, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
            Error::Config {
                line,
                message: e.message().to_string(),
            }
        })?;
        cfg.grid.build().map_err(|e| config_error(text, "grid", e))?;
        cfg.time.validate().map_err(|e| config_error(text, "time", e))?;
        cfg.degiorgi.validate().map_err(|e| config_error(text, "degiorgi", e))?;
        cfg.build_initial().map_err(|e| config_error(text, "initial", e))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            line: 0,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn grid(&self) -> Result<Grid> {
        self.grid.build()
    }

    pub fn constitutive(&self) -> ConstitutiveSet {
        self.laws.build()
    }

    pub fn build_initial(&self) -> Result<InitialData> {
        self.initial.build(self.grid()?)
    }

    /// Structural hypotheses on the laws together with the `β` rule.
    pub fn hypotheses(&self) -> HypothesisReport {
        validate_hypotheses(&self.constitutive(), self.regularization.beta, SampleGrid::default())
    }

    /// Everything a run needs, with all hypotheses enforced.
    pub fn validated(&self) -> Result<()> {
        let rep = self.hypotheses();
        if let Some(f) = rep.failures().next() {
            return Err(Error::Hypothesis(format!("{} ({})", f.name, f.detail)));
        }
        self.regularization.validate(&self.constitutive())
    }

    pub fn sweep_base(&self) -> Result<SweepBase> {
        Ok(SweepBase {
            init: self.build_initial()?,
            cs: self.constitutive(),
            params: self.regularization,
            time: self.time,
            forcing: self.forcing,
            regularize: self.regularize,
            omega: self.sweep.omega,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        let back = RunConfig::parse(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn syntax_error_reports_line() {
        let text = "seed = 1\n[grid]\ncells = [128\n";
        match RunConfig::parse(text) {
            Err(Error::Config { line, .. }) => assert!(line >= 3, "line {line}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_key_reports_line() {
        let text = "seed = 1\n\n[time]\nhorizon = 1.0\nbogus = 3\n";
        match RunConfig::parse(text) {
            Err(Error::Config { line, message }) => {
                assert_eq!(line, 5);
                assert!(message.contains("bogus"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn semantic_error_points_to_section() {
        let text = "seed = 1\n[grid]\ncells = [4]\n";
        match RunConfig::parse(text) {
            Err(Error::Config { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ideal_like_preset_passes_and_beta_rule_fails() {
        let ok = RunConfig::parse("[laws]\npreset = \"ideal-like\"\n").unwrap();
        assert!(ok.validated().is_ok());
        let bad = RunConfig::parse("[regularization]\nbeta = 4.0\n").unwrap();
        match bad.validated() {
            Err(Error::Hypothesis(m)) => assert!(m.contains("β > max{4, γ}")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn law_overrides_apply() {
        let text = "[laws]\nmu = { kind = \"affine\", c0 = 0.2, c1 = 0.0 }\ngamma = 2.5\n";
        let c = RunConfig::parse(text).unwrap();
        let cs = c.constitutive();
        assert_eq!(cs.mu.eval(3.0), 0.2);
        assert_eq!(cs.constants.gamma, 2.5);
    }

    #[test]
    fn two_dimensional_grid() {
        let c = RunConfig::parse("[grid]\ncells = [16, 12]\nextent = [1.0, 0.75]\n").unwrap();
        let g = c.grid().unwrap();
        assert_eq!((g.dim, g.nx(), g.ny()), (2, 16, 12));
    }
}
