//! Run configuration: one TOML file, every field optional.

use dioph_core::adiabatic::{EvolveOptions, DEFAULT_LEVELS, DEFAULT_STEP_SCALE};
use dioph_core::hubbard::{MeanFieldOptions, DEFAULT_DAMPING, DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE};
use dioph_core::oracle::DEFAULT_BUDGET;
use dioph_core::stochastic::NoiseDistribution;
use dioph_core::verdict::DEFAULT_THRESHOLD;
use dioph_core::{Error, FockSpace, Polynomial, ProblemInstance, Result, ScheduleShape, SymmetryBreak};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub equation: String,
    /// Levels per mode. A single entry applies to every variable.
    pub cutoffs: Vec<usize>,
    /// Coherent displacement per mode as `[re, im]`; 1 when absent.
    pub alphas: Option<Vec<[f64; 2]>>,
    /// Symmetry-breaking strength; derived from the spectrum when absent.
    pub epsilon: Option<f64>,
    pub weights: Option<Vec<f64>>,
    pub schedule: ScheduleShape,
    pub t_ladder: Vec<f64>,
    /// Run every ladder entry instead of stopping at the first identification.
    pub full_ladder: bool,
    pub dt: Option<f64>,
    pub step_scale: f64,
    pub threshold: f64,
    pub g_theta: f64,
    pub seed: u64,
    /// Re-run at ε, ε/2, ε/4 and require the same verdict.
    pub epsilon_series: bool,
    pub flow: FlowConfig,
    pub stability: StabilityConfig,
    pub clt: CltConfig,
    pub hubbard: HubbardConfig,
    pub oracle: OracleConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            equation: String::new(),
            cutoffs: vec![16],
            alphas: None,
            epsilon: None,
            weights: None,
            schedule: ScheduleShape::Linear,
            t_ladder: vec![10.0, 20.0, 40.0, 80.0],
            full_ladder: false,
            dt: None,
            step_scale: DEFAULT_STEP_SCALE,
            threshold: DEFAULT_THRESHOLD,
            g_theta: 1.0,
            seed: 0,
            epsilon_series: false,
            flow: FlowConfig::default(),
            stability: StabilityConfig::default(),
            clt: CltConfig::default(),
            hubbard: HubbardConfig::default(),
            oracle: OracleConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    pub grid_points: usize,
    pub levels: usize,
    /// Adds the ground-state overlap of an evolution at this T to the CSV.
    pub overlap_time: Option<f64>,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig { grid_points: 21, levels: DEFAULT_LEVELS, overlap_time: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityConfig {
    /// Ascending cutoff ladder, applied to every mode.
    pub cutoffs: Vec<usize>,
    pub total_time: f64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig { cutoffs: vec![8, 12, 16], total_time: 20.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    #[default]
    Oracle,
    Adiabatic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CltConfig {
    pub n_values: Vec<usize>,
    pub batches: usize,
    /// σ for every coefficient, unless `sigmas` is given.
    pub sigma: f64,
    /// σ per monomial in canonical order (highest degree first).
    pub sigmas: Option<Vec<f64>>,
    pub distribution: NoiseDistribution,
    pub engine: EngineKind,
    /// Search box for the oracle engine; cutoffs − 1 when absent.
    pub bounds: Option<Vec<u64>>,
    /// Run time for the adiabatic engine.
    pub total_time: f64,
    pub keep_samples: bool,
}

impl Default for CltConfig {
    fn default() -> Self {
        CltConfig {
            n_values: vec![100, 400],
            batches: 40,
            sigma: 0.2,
            sigmas: None,
            distribution: NoiseDistribution::Gaussian,
            engine: EngineKind::Oracle,
            bounds: None,
            total_time: 10.0,
            keep_samples: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HubbardConfig {
    /// Exact diagonalization lattice.
    pub sites: usize,
    pub atoms: usize,
    /// Mean-field sweeps, one per filling.
    pub fillings: Vec<usize>,
    pub coordination: usize,
    /// Ascending U/J grid.
    pub ratios: Vec<f64>,
    pub alpha0: f64,
    pub cutoff: usize,
    pub damping: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for HubbardConfig {
    fn default() -> Self {
        HubbardConfig {
            sites: 2,
            atoms: 2,
            fillings: vec![1, 2],
            coordination: 2,
            ratios: (-2..=10).map(|k| 2f64.powi(k)).collect(),
            alpha0: 1.0,
            cutoff: 16,
            damping: DEFAULT_DAMPING,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

impl HubbardConfig {
    pub fn mean_field_options(&self) -> MeanFieldOptions {
        MeanFieldOptions {
            cutoff: self.cutoff,
            damping: self.damping,
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    /// Inclusive upper bounds; cutoffs − 1 when absent.
    pub bounds: Option<Vec<u64>>,
    pub budget: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { bounds: None, budget: DEFAULT_BUDGET as u64 }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn polynomial(&self) -> Result<Polynomial> {
        if self.equation.trim().is_empty() {
            return Err(Error::Config("no equation given".into()));
        }
        Polynomial::parse(&self.equation)
    }

    /// Cutoffs for `k` variables, broadcasting a single entry.
    pub fn cutoffs_for(&self, k: usize) -> Result<Vec<usize>> {
        match self.cutoffs.len() {
            1 => Ok(vec![self.cutoffs[0]; k]),
            n if n == k => Ok(self.cutoffs.clone()),
            n => Err(Error::Config(format!("{n} cutoffs given for {k} variables"))),
        }
    }

    pub fn space(&self, p: &Polynomial) -> Result<FockSpace> {
        FockSpace::new(self.cutoffs_for(p.num_vars())?)
    }

    /// The instance on the configured truncation, with α and symmetry
    /// breaking applied.
    pub fn instance(&self) -> Result<ProblemInstance> {
        let p = self.polynomial()?;
        let space = self.space(&p)?;
        self.instance_on(p, space)
    }

    pub fn instance_on(&self, p: Polynomial, space: FockSpace) -> Result<ProblemInstance> {
        let k = space.modes();
        let alphas = match &self.alphas {
            Some(list) => list.iter().map(|&[re, im]| Complex64::new(re, im)).collect(),
            None => vec![Complex64::new(1.0, 0.0); k],
        };
        let base = ProblemInstance::new(p, space)?.with_alphas(alphas)?;
        let mut sb = match self.epsilon {
            None => SymmetryBreak::default_for(&base.polynomial, &base.space)?,
            Some(epsilon) => SymmetryBreak { epsilon, weights: dioph_core::hamiltonian::default_weights(k) },
        };
        if let Some(w) = &self.weights {
            sb.weights = w.clone();
        }
        base.with_symmetry_break(sb)
    }

    pub fn evolve_options(&self) -> EvolveOptions {
        EvolveOptions { dt: self.dt, step_scale: self.step_scale, trace_samples: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_ladder.is_empty() || self.t_ladder.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::Config("t_ladder must hold positive run times".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Config(format!("threshold must lie in (0, 1), got {}", self.threshold)));
        }
        if !(self.step_scale.is_finite() && self.step_scale > 0.0) {
            return Err(Error::Config(format!("step_scale must be positive, got {}", self.step_scale)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn nested_blocks_parse() {
        let cfg = RunConfig::from_toml(
            r#"
            equation = "x^2 - 2*y^2"
            cutoffs = [8]
            epsilon = 0.0
            [clt]
            sigmas = [0.0, 0.2]
            distribution = "uniform"
            [hubbard]
            ratios = [1.0, 100.0]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.cutoffs_for(2).unwrap(), vec![8, 8]);
        assert_eq!(cfg.clt.distribution, NoiseDistribution::Uniform);
        assert_eq!(cfg.hubbard.ratios, vec![1.0, 100.0]);
        assert_eq!(cfg.instance().unwrap().symmetry_break.epsilon, 0.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_toml("equaton = \"x\"").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn cutoff_count_must_match() {
        let cfg = RunConfig { equation: "x*y".into(), cutoffs: vec![4, 4, 4], ..Default::default() };
        assert!(cfg.instance().is_err());
    }

    #[test]
    fn auto_epsilon_uses_spacing() {
        let cfg = RunConfig { equation: "x - 3".into(), ..Default::default() };
        let inst = cfg.instance().unwrap();
        // squares 0, 1, 4, ... have smallest spacing 1
        assert!((inst.symmetry_break.epsilon - 0.02).abs() < 1e-15);
    }
}
