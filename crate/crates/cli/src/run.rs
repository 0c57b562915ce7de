//! One pipeline per subcommand. Each returns a serializable section that
//! [`RunReport`] wraps together with the config that produced it.

use dioph_core::adiabatic::{
    bound_diagnostic, evolve, spectral_flow, truncation_stability, BoundDiagnostic, EvolveOptions, SpectralFlow,
    StabilityTable,
};
use dioph_core::hubbard::{
    self, ground_state, mean_field_solve, mott_state, superfluid_state, FixedNumberBasis, LatticeModel,
    SweepTable, DEFAULT_BASIS_BUDGET,
};
use dioph_core::oracle::{self, BoxSearchResult};
use dioph_core::stochastic::{run_clt, CltEngine, CltReport, NoiseModel};
use dioph_core::verdict::{cross_check, decide, identify, CrossCheck, Verdict, VerdictStatus};
use dioph_core::{Error, ProblemInstance, Result, Schedule, SymmetryBreak};
use num_complex::Complex64;
use serde::Serialize;

use crate::config::{EngineKind, RunConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct RunReport<T> {
    pub schema_version: u32,
    pub version: &'static str,
    pub command: &'static str,
    pub config: RunConfig,
    pub result: T,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Timing {
    pub seconds: f64,
}

impl<T: Serialize> RunReport<T> {
    pub fn new(command: &'static str, config: &RunConfig, result: T) -> Self {
        RunReport {
            schema_version: SCHEMA_VERSION,
            version: env!("CARGO_PKG_VERSION"),
            command,
            config: config.clone(),
            result,
            timing: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is serializable");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceSummary {
    pub variables: Vec<String>,
    pub canonical: String,
    pub cutoffs: Vec<usize>,
    pub dimension: usize,
    pub alphas: Vec<Complex64>,
    pub symmetry_break: SymmetryBreak,
}

impl InstanceSummary {
    fn of(inst: &ProblemInstance) -> Self {
        InstanceSummary {
            variables: inst.polynomial.variables().to_vec(),
            canonical: inst.polynomial.to_string(),
            cutoffs: inst.space.cutoffs().to_vec(),
            dimension: inst.space.dim(),
            alphas: inst.alphas.clone(),
            symmetry_break: inst.symmetry_break.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LadderRow {
    pub total_time: f64,
    pub steps: usize,
    pub dt: f64,
    pub norm_drift: f64,
    pub max_step_drift: f64,
    pub top_outcome: Vec<usize>,
    pub top_probability: f64,
    pub identified: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralSummary {
    pub grid_points: usize,
    pub min_gap: f64,
    pub min_gap_at: f64,
    /// E₁ − E₀ of the problem Hamiltonian.
    pub final_gap: f64,
}

impl SpectralSummary {
    fn of(flow: &SpectralFlow) -> Self {
        SpectralSummary {
            grid_points: flow.grid.len(),
            min_gap: flow.min_gap,
            min_gap_at: flow.min_gap_at,
            final_gap: *flow.gaps().last().expect("grid is non-empty"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsilonRow {
    pub epsilon: f64,
    pub top_outcome: Vec<usize>,
    pub top_probability: f64,
    pub status: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsilonSeries {
    pub total_time: f64,
    pub rows: Vec<EpsilonRow>,
    pub stable: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub instance: InstanceSummary,
    pub ladder: Vec<LadderRow>,
    pub verdict: Verdict,
    pub cross_check: CrossCheck,
    pub bound: BoundDiagnostic,
    pub spectral: SpectralSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_series: Option<EpsilonSeries>,
}

fn status_name(v: &Verdict) -> &'static str {
    match v.status {
        VerdictStatus::Solution { .. } => "solution",
        VerdictStatus::NoSolutionProbable { .. } => "no_solution_probable",
        VerdictStatus::Inconclusive { .. } => "inconclusive",
    }
}

fn run_once(inst: &ProblemInstance, cfg: &RunConfig, t: f64, opts: &EvolveOptions) -> Result<(LadderRow, Verdict)> {
    let schedule = Schedule::new(t, cfg.schedule)?;
    let result = evolve(inst, &schedule, opts)?;
    let ident = identify(&result.final_state, cfg.threshold);
    let verdict = decide(inst, &ident, cfg.threshold)?;
    let row = LadderRow {
        total_time: t,
        steps: result.steps,
        dt: result.dt,
        norm_drift: result.norm_drift,
        max_step_drift: result.max_step_drift,
        top_outcome: ident.top_outcome,
        top_probability: ident.top_probability,
        identified: ident.identified,
    };
    Ok((row, verdict))
}

/// parse → build → evolve along the T-ladder → verdict → oracle cross-check.
pub fn solve(cfg: &RunConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let inst = cfg.instance()?;
    let opts = cfg.evolve_options();

    let mut ladder = Vec::new();
    let mut verdicts = Vec::new();
    for &t in &cfg.t_ladder {
        let (row, verdict) = run_once(&inst, cfg, t, &opts)?;
        let identified = row.identified;
        ladder.push(row);
        verdicts.push(verdict);
        if identified && !cfg.full_ladder {
            break;
        }
    }
    // the verdict comes from the first identified run, else the last one
    let pick = ladder.iter().position(|r| r.identified).unwrap_or(ladder.len() - 1);
    let t_used = ladder[pick].total_time;
    let verdict = verdicts.swap_remove(pick);

    let bounds = oracle::box_for(&inst.space);
    let check = cross_check(&inst, &verdict, &bounds)?;
    let bound = bound_diagnostic(&inst, &Schedule::new(t_used, cfg.schedule)?, cfg.g_theta)?;
    let flow = spectral_flow(&inst, &Schedule::new(t_used, cfg.schedule)?, cfg.flow.grid_points, cfg.flow.levels)?;

    let epsilon_series = if cfg.epsilon_series {
        Some(epsilon_series(&inst, cfg, t_used, &opts)?)
    } else {
        None
    };

    Ok(SolveReport {
        instance: InstanceSummary::of(&inst),
        ladder,
        verdict,
        cross_check: check,
        bound,
        spectral: SpectralSummary::of(&flow),
        epsilon_series,
    })
}

/// Verdicts at ε, ε/2 and ε/4 for a fixed run time.
fn epsilon_series(inst: &ProblemInstance, cfg: &RunConfig, t: f64, opts: &EvolveOptions) -> Result<EpsilonSeries> {
    if inst.symmetry_break.epsilon == 0.0 {
        return Err(Error::Config("the epsilon series needs a positive epsilon".into()));
    }
    let mut rows = Vec::new();
    for factor in [1.0, 0.5, 0.25] {
        let scaled = inst.clone().with_symmetry_break(inst.symmetry_break.scaled(factor))?;
        let (row, verdict) = run_once(&scaled, cfg, t, opts)?;
        rows.push(EpsilonRow {
            epsilon: scaled.symmetry_break.epsilon,
            top_outcome: row.top_outcome,
            top_probability: row.top_probability,
            status: status_name(&verdict).into(),
        });
    }
    let stable = rows.windows(2).all(|w| w[0].status == w[1].status && w[0].top_outcome == w[1].top_outcome);
    Ok(EpsilonSeries { total_time: t, rows, stable })
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowReport {
    pub instance: InstanceSummary,
    #[serde(flatten)]
    pub summary: SpectralSummary,
    pub flow: SpectralFlow,
    #[serde(skip)]
    pub overlap: Option<Vec<f64>>,
}

impl FlowReport {
    pub fn to_csv(&self) -> String {
        self.flow.to_csv(self.overlap.as_deref())
    }
}

pub fn flow(cfg: &RunConfig) -> Result<FlowReport> {
    let inst = cfg.instance()?;
    let t = cfg.flow.overlap_time.unwrap_or(cfg.t_ladder.first().copied().unwrap_or(10.0));
    let schedule = Schedule::new(t, cfg.schedule)?;
    let flow = spectral_flow(&inst, &schedule, cfg.flow.grid_points, cfg.flow.levels)?;
    let overlap = match cfg.flow.overlap_time {
        None => None,
        Some(_) => {
            let opts = EvolveOptions { trace_samples: cfg.flow.grid_points, ..cfg.evolve_options() };
            let result = evolve(&inst, &schedule, &opts)?;
            Some(result.ground_overlap_trace.iter().map(|p| p.ground_overlap).collect())
        }
    };
    Ok(FlowReport { instance: InstanceSummary::of(&inst), summary: SpectralSummary::of(&flow), flow, overlap })
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub canonical: String,
    #[serde(flatten)]
    pub search: BoxSearchResult,
    /// Present when the box is the truncation box.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agrees_with_hp_diagonal: Option<bool>,
}

pub fn oracle(cfg: &RunConfig) -> Result<OracleReport> {
    let p = cfg.polynomial()?;
    let truncation = oracle::box_for(&cfg.space(&p)?);
    let bounds = cfg.oracle.bounds.clone().unwrap_or_else(|| truncation.clone());
    let search = oracle::search_box(&p, &bounds, cfg.oracle.budget as u128)?;
    let agrees = if bounds == truncation {
        Some(oracle::agrees_with_hp_diagonal(&p, &cfg.space(&p)?, &bounds)?)
    } else {
        None
    };
    Ok(OracleReport { canonical: p.to_string(), search, agrees_with_hp_diagonal: agrees })
}

pub fn stability(cfg: &RunConfig) -> Result<StabilityTable> {
    let inst = cfg.instance()?;
    let schedule = Schedule::new(cfg.stability.total_time, cfg.schedule)?;
    truncation_stability(&inst, &schedule, &cfg.stability.cutoffs, &cfg.evolve_options())
}

pub fn clt(cfg: &RunConfig) -> Result<CltReport> {
    let p = cfg.polynomial()?;
    let c = &cfg.clt;
    let noise = match &c.sigmas {
        Some(s) => NoiseModel::new(&p, s.clone(), c.distribution, cfg.seed)?,
        None => NoiseModel::uniform_sigma(&p, c.sigma, c.distribution, cfg.seed)?,
    };
    let cutoffs = cfg.cutoffs_for(p.num_vars())?;
    let engine = match c.engine {
        EngineKind::Oracle => CltEngine::Oracle {
            bounds: c.bounds.clone().unwrap_or_else(|| cutoffs.iter().map(|&n| n as u64 - 1).collect()),
        },
        EngineKind::Adiabatic => {
            let inst = cfg.instance_on(p.clone(), cfg.space(&p)?)?;
            CltEngine::Adiabatic {
                cutoffs,
                alphas: inst.alphas,
                schedule: Schedule::new(c.total_time, cfg.schedule)?,
                options: cfg.evolve_options(),
            }
        }
    };
    run_clt(&p, &noise, &c.n_values, c.batches, &engine, c.keep_samples)
}

#[derive(Debug, Clone, Serialize)]
pub struct ExactRow {
    pub tunneling: f64,
    pub interaction: f64,
    pub ground_energy: f64,
    pub mott_fidelity: Option<f64>,
    pub superfluid_fidelity: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HubbardReport {
    pub sites: usize,
    pub atoms: usize,
    pub basis_dimension: usize,
    /// Ground states at the two limits J = 0 and U = 0.
    pub exact: Vec<ExactRow>,
    pub sweeps: Vec<SweepTable>,
    /// Diophantine form x − m of each filling and the Mott occupation found
    /// in the strong-coupling end of its sweep.
    pub equations: Vec<MottEquation>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MottEquation {
    pub filling: usize,
    pub equation: String,
    pub oracle_solution: Vec<u64>,
    pub mott_occupation: usize,
}

impl HubbardReport {
    pub fn sweeps_csv(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.sweeps.iter().enumerate() {
            let csv = s.to_csv();
            let mut lines = csv.lines();
            let header = lines.next().unwrap_or_default();
            if i == 0 {
                out.push_str("filling,");
                out.push_str(header);
                out.push('\n');
            }
            for line in lines {
                out.push_str(&format!("{},{line}\n", s.filling));
            }
        }
        out
    }
}

pub fn hubbard(cfg: &RunConfig) -> Result<HubbardReport> {
    let h = &cfg.hubbard;
    if h.sites == 0 || h.atoms % h.sites != 0 {
        return Err(Error::Config(format!("{} atoms do not fill {} sites evenly", h.atoms, h.sites)));
    }
    let filling = (h.atoms / h.sites).max(1);
    let basis = FixedNumberBasis::new(h.sites, h.atoms, DEFAULT_BASIS_BUDGET)?;
    let mut exact = Vec::new();
    for (j, u) in [(0.0, 1.0), (1.0, 0.0)] {
        let model = LatticeModel::new(h.sites, h.atoms, j, u, filling)?;
        let (energy, ground) = ground_state(&model, &basis)?;
        let mott = mott_state(&model, &basis).ok().map(|m| m.fidelity(&ground));
        let sf = superfluid_state(&model, &basis).fidelity(&ground);
        exact.push(ExactRow { tunneling: j, interaction: u, ground_energy: energy, mott_fidelity: mott, superfluid_fidelity: sf });
    }

    let opts = h.mean_field_options();
    let alpha0 = Complex64::new(h.alpha0, 0.0);
    let mut sweeps = Vec::new();
    let mut equations = Vec::new();
    for &m in &h.fillings {
        let table = hubbard::sweep_transition(m, h.coordination, &h.ratios, alpha0, &opts)?;
        let p = hubbard::as_diophantine(m)?;
        let search = oracle::search_box(&p, &[opts.cutoff as u64 - 1], oracle::DEFAULT_BUDGET)?;
        let strong = mean_field_solve(1.0, *h.ratios.last().expect("non-empty grid"), m, h.coordination, alpha0, &opts)?;
        let occ = strong.occupation_distribution();
        let mott_occupation = (0..occ.len()).max_by(|&a, &b| occ[a].total_cmp(&occ[b])).unwrap_or(0);
        equations.push(MottEquation {
            filling: m,
            equation: p.to_string(),
            oracle_solution: search.minimizers[0].clone(),
            mott_occupation,
        });
        sweeps.push(table);
    }
    Ok(HubbardReport { sites: h.sites, atoms: h.atoms, basis_dimension: basis.len(), exact, sweeps, equations })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(eq: &str) -> RunConfig {
        RunConfig { equation: eq.into(), ..Default::default() }
    }

    #[test]
    fn solve_finds_linear_root() {
        let report = solve(&cfg("x - 3")).unwrap();
        assert_eq!(report.verdict.status, VerdictStatus::Solution { witness: vec![3] });
        assert_eq!(report.ladder.len(), 1);
        assert_eq!(report.cross_check.agreement, dioph_core::verdict::Agreement::Agree);
    }

    #[test]
    fn flow_rejects_coarse_grid() {
        let mut c = cfg("x - 1");
        c.flow.grid_points = 5;
        assert_eq!(flow(&c).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn oracle_report_layout() {
        let mut c = cfg("x^2-2*y^2");
        c.oracle.bounds = Some(vec![5, 5]);
        let json = serde_json::to_string(&oracle(&c).unwrap()).unwrap();
        assert_eq!(
            json,
            r#"{"canonical":"x^2 - 2*y^2","box":[5,5],"min_value":0,"minimizers":[[0,0]],"overflow":0}"#
        );
    }

    #[test]
    fn hubbard_csv_has_filling_column() {
        let mut c = RunConfig::default();
        c.hubbard.fillings = vec![1];
        c.hubbard.ratios = vec![1.0, 100.0];
        let r = hubbard(&c).unwrap();
        let csv = r.sweeps_csv();
        assert!(csv.starts_with("filling,ratio,alpha_abs,iterations,p0"));
        assert_eq!(csv.lines().count(), 3);
        assert_eq!(r.equations[0].mott_occupation, 1);
        assert_eq!(r.equations[0].oracle_solution, vec![1]);
    }
}
