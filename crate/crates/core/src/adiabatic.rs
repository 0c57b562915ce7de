//! Time evolution under H(t/T), spectral flow of the interpolated
//! Hamiltonian and the run-time lower-bound diagnostic.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fockspace::{FockSpace, QuantumState};
use crate::hamiltonian::{single_mode_hi_ground, ProblemInstance, Schedule, SplitHamiltonian};
use crate::linalg::hermitian_eigen;
use crate::oracle;
use crate::par;
use crate::verdict::{identify, Identification};

/// The step is capped at `step_scale / max|diag H|`.
pub const DEFAULT_STEP_SCALE: f64 = 0.1;
/// Minimum number of integration steps per run.
pub const MIN_STEPS: usize = 1000;
/// Accumulated renormalization beyond this fails the run.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;
pub const DEFAULT_LEVELS: usize = 6;
pub const MIN_GRID_POINTS: usize = 11;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolveOptions {
    /// Fixed step; derived from `step_scale` when absent.
    pub dt: Option<f64>,
    pub step_scale: f64,
    /// Number of evenly spaced points at which |⟨g(s)|ψ⟩|² is sampled.
    pub trace_samples: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions { dt: None, step_scale: DEFAULT_STEP_SCALE, trace_samples: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub s: f64,
    pub ground_overlap: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolutionResult {
    #[serde(skip)]
    pub final_state: QuantumState,
    /// Sum over steps of |1 − ‖ψ‖| removed by renormalization.
    pub norm_drift: f64,
    pub max_step_drift: f64,
    pub steps: usize,
    pub dt: f64,
    pub ground_overlap_trace: Vec<TracePoint>,
}

/// Ground state of the truncated H_I: the product of single-mode ground
/// vectors, each the truncated image of a coherent state.
pub fn initial_state(inst: &ProblemInstance) -> Result<QuantumState> {
    let factors = inst
        .alphas
        .iter()
        .zip(inst.space.cutoffs())
        .map(|(&a, &n)| single_mode_hi_ground(a, n).map(|(_, v)| v))
        .collect::<Result<Vec<_>>>()?;
    let mut state = QuantumState::product(&inst.space, &factors)?;
    state.normalize();
    Ok(state)
}

/// Step size rule: min(T/1000, step_scale / max|diag H|).
pub fn default_dt(split: &SplitHamiltonian, schedule: &Schedule, step_scale: f64) -> f64 {
    let cap = schedule.total_time / MIN_STEPS as f64;
    let scale = split.max_diagonal();
    if scale > 0.0 { cap.min(step_scale / scale) } else { cap }
}

/// Integrates i dψ/dt = H(t/T) ψ from the H_I ground state with fixed-step
/// RK4, renormalizing after every step.
pub fn evolve(inst: &ProblemInstance, schedule: &Schedule, opts: &EvolveOptions) -> Result<EvolutionResult> {
    let split = SplitHamiltonian::build(inst)?;
    let psi0 = initial_state(inst)?;
    evolve_split(&split, &inst.space, psi0, schedule, opts)
}

/// Evolution for an explicit Hamiltonian pair and start state.
pub fn evolve_split(
    split: &SplitHamiltonian,
    space: &FockSpace,
    psi0: QuantumState,
    schedule: &Schedule,
    opts: &EvolveOptions,
) -> Result<EvolutionResult> {
    let total = schedule.total_time;
    let dt_max = total / MIN_STEPS as f64;
    let dt_target = match opts.dt {
        Some(dt) if !(dt > 0.0 && dt.is_finite()) => {
            return Err(Error::precondition("adiabatic", format!("step {dt} must be positive")))
        }
        Some(dt) if dt > dt_max * (1.0 + 1e-12) => {
            return Err(Error::precondition("adiabatic", format!("step {dt} exceeds T/{MIN_STEPS} = {dt_max}")))
        }
        Some(dt) => dt,
        None => default_dt(split, schedule, opts.step_scale),
    };
    let steps = ((total / dt_target).ceil() as usize).max(MIN_STEPS);
    let dt = total / steps as f64;

    let n = split.dim();
    let zero = Complex64::new(0.0, 0.0);
    let mut psi = psi0.into_amplitudes();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n]);
    let mut tmp = vec![zero; n];
    let minus_i = Complex64::new(0.0, -1.0);

    // y = −i H(t/T) x
    let deriv = |t: f64, x: &[Complex64], y: &mut [Complex64]| {
        let s = (t / total).clamp(0.0, 1.0);
        split.apply_into(schedule.jtilde(s), schedule.utilde(s), x, y);
        for v in y.iter_mut() {
            *v *= minus_i;
        }
    };

    let sample_steps: Vec<usize> = match opts.trace_samples {
        0 => Vec::new(),
        1 => vec![steps],
        m => (0..m).map(|k| (k * steps + (m - 1) / 2) / (m - 1)).collect(),
    };
    let mut trace = Vec::with_capacity(sample_steps.len());
    let mut next_sample = 0;
    let mut record = |step: usize, psi: &[Complex64], trace: &mut Vec<TracePoint>| -> Result<()> {
        while next_sample < sample_steps.len() && sample_steps[next_sample] == step {
            let s = step as f64 / steps as f64;
            let (values, vectors) = hermitian_eigen(&split.dense_at(schedule.jtilde(s), schedule.utilde(s)))?;
            let overlap: Complex64 = vectors.column(0).iter().zip(psi).map(|(g, p)| g.conj() * p).sum();
            trace.push(TracePoint { s, ground_overlap: overlap.norm_sqr(), energy: values[0] });
            next_sample += 1;
        }
        Ok(())
    };
    record(0, &psi, &mut trace)?;

    let mut norm_drift = 0.0;
    let mut max_step_drift: f64 = 0.0;
    let half = 0.5 * dt;
    for step in 0..steps {
        let t = step as f64 * dt;
        deriv(t, &psi, &mut k1);
        for i in 0..n {
            tmp[i] = psi[i] + k1[i] * half;
        }
        deriv(t + half, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = psi[i] + k2[i] * half;
        }
        deriv(t + half, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = psi[i] + k3[i] * dt;
        }
        deriv(t + dt, &tmp, &mut k4);
        let sixth = dt / 6.0;
        let mut norm_sq = 0.0;
        for i in 0..n {
            psi[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * sixth;
            norm_sq += psi[i].norm_sqr();
        }
        if !norm_sq.is_finite() {
            return Err(Error::NonFinite { step });
        }
        let norm = norm_sq.sqrt();
        let drift = (1.0 - norm).abs();
        norm_drift += drift;
        max_step_drift = max_step_drift.max(drift);
        for v in psi.iter_mut() {
            *v /= norm;
        }
        record(step + 1, &psi, &mut trace)?;
    }
    if norm_drift > NORM_DRIFT_LIMIT {
        return Err(Error::NormDrift { drift: norm_drift, limit: NORM_DRIFT_LIMIT });
    }
    Ok(EvolutionResult {
        final_state: QuantumState::new(space, psi)?,
        norm_drift,
        max_step_drift,
        steps,
        dt,
        ground_overlap_trace: trace,
    })
}

/// Probability of the final state on the minimizing tuple of the H_P
/// diagonal (first one in index order on ties).
pub fn ground_probability(inst: &ProblemInstance, result: &EvolutionResult) -> Result<(Vec<usize>, f64)> {
    let diag = crate::hamiltonian::hp_diagonal(inst)?;
    let idx = diag
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("non-empty space");
    let p = result.final_state.amplitudes()[idx].norm_sqr();
    Ok((inst.space.occupations(idx), p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralFlow {
    pub grid: Vec<f64>,
    /// Lowest levels at each grid point, ascending.
    pub levels: Vec<Vec<f64>>,
    /// min over interior grid points of E₁ − E₀.
    pub min_gap: f64,
    pub min_gap_at: f64,
}

impl SpectralFlow {
    /// E₁ − E₀ at every grid point.
    pub fn gaps(&self) -> Vec<f64> {
        self.levels.iter().map(|l| if l.len() > 1 { l[1] - l[0] } else { f64::INFINITY }).collect()
    }

    /// `s,E0,...,E{L-1}[,ground_overlap]` rows.
    pub fn to_csv(&self, overlap: Option<&[f64]>) -> String {
        let width = self.levels.first().map_or(0, Vec::len);
        let mut out = String::from("s");
        for l in 0..width {
            out.push_str(&format!(",E{l}"));
        }
        if overlap.is_some() {
            out.push_str(",ground_overlap");
        }
        out.push('\n');
        for (row, (s, levels)) in self.grid.iter().zip(&self.levels).enumerate() {
            out.push_str(&format!("{s}"));
            for e in levels {
                out.push_str(&format!(",{e}"));
            }
            if let Some(o) = overlap {
                out.push_str(&format!(",{}", o.get(row).copied().unwrap_or(f64::NAN)));
            }
            out.push('\n');
        }
        out
    }
}

/// Lowest `levels` eigenvalues of H(s) on an even grid of `grid_points`
/// values covering [0, 1].
pub fn spectral_flow(
    inst: &ProblemInstance,
    schedule: &Schedule,
    grid_points: usize,
    levels: usize,
) -> Result<SpectralFlow> {
    if grid_points < MIN_GRID_POINTS {
        return Err(Error::Config(format!("grid needs at least {MIN_GRID_POINTS} points, got {grid_points}")));
    }
    if levels == 0 {
        return Err(Error::Config("at least one level must be tracked".into()));
    }
    let split = SplitHamiltonian::build(inst)?;
    let grid: Vec<f64> = (0..grid_points).map(|i| i as f64 / (grid_points - 1) as f64).collect();
    let rows = par::map(grid.clone(), |s| -> Result<Vec<f64>> {
        let m = split.dense_at(schedule.jtilde(s), schedule.utilde(s));
        let mut values = crate::linalg::hermitian_eigenvalues(&m)?;
        values.truncate(levels);
        Ok(values)
    });
    let levels: Vec<Vec<f64>> = rows.into_iter().collect::<Result<_>>()?;
    let mut flow = SpectralFlow { grid, levels, min_gap: f64::INFINITY, min_gap_at: f64::NAN };
    let gaps = flow.gaps();
    for i in 1..grid_points - 1 {
        if gaps[i] < flow.min_gap {
            flow.min_gap = gaps[i].max(0.0);
            flow.min_gap_at = flow.grid[i];
        }
    }
    Ok(flow)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundStatus {
    Satisfied,
    Unsatisfied,
    /// The start state is already an H_P eigenstate (Δ_I E = 0).
    DegenerateStart,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundDiagnostic {
    pub delta_ie: f64,
    pub g_theta: f64,
    pub total_time: f64,
    /// g(θ)·T·Δ_I E, compared against 4.
    pub product: f64,
    pub status: BoundStatus,
}

/// Energy spread of the start state measured with H_P, and the product
/// g(θ)·T·Δ_I E of the run-time lower bound 4 < g(θ)·T·Δ_I E.
pub fn bound_diagnostic(inst: &ProblemInstance, schedule: &Schedule, g_theta: f64) -> Result<BoundDiagnostic> {
    if !(g_theta.is_finite() && g_theta > 0.0) {
        return Err(Error::Config(format!("g_theta must be positive, got {g_theta}")));
    }
    let diag = crate::hamiltonian::hp_diagonal(inst)?;
    let psi = initial_state(inst)?;
    let (first, second) = energy_moments(&psi, &diag);
    let variance = (second - first * first).max(0.0);
    let delta_ie = variance.sqrt();
    let product = g_theta * schedule.total_time * delta_ie;
    let status = if delta_ie <= 1e-9 * first.abs().max(1.0) {
        BoundStatus::DegenerateStart
    } else if product > 4.0 {
        BoundStatus::Satisfied
    } else {
        BoundStatus::Unsatisfied
    };
    Ok(BoundDiagnostic { delta_ie, g_theta, total_time: schedule.total_time, product, status })
}

/// (⟨H⟩, ⟨H²⟩) for a diagonal H.
pub fn energy_moments(psi: &QuantumState, diagonal: &[f64]) -> (f64, f64) {
    psi.amplitudes().iter().zip(diagonal).fold((0.0, 0.0), |(m1, m2), (a, d)| {
        let p = a.norm_sqr();
        (m1 + p * d, m2 + p * d * d)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub cutoff: usize,
    pub top_outcome: Vec<usize>,
    pub top_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityTable {
    pub rows: Vec<StabilityRow>,
    /// Largest top-probability change between consecutive cutoffs.
    pub max_difference: f64,
    pub same_outcome: bool,
}

/// Repeats the run at each cutoff of an ascending ladder (applied to every
/// mode) and compares the most probable outcomes.
pub fn truncation_stability(
    inst: &ProblemInstance,
    schedule: &Schedule,
    ladder: &[usize],
    opts: &EvolveOptions,
) -> Result<StabilityTable> {
    if ladder.is_empty() || ladder.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::precondition("adiabatic", "cutoff ladder must be non-empty and strictly ascending"));
    }
    let k = inst.space.modes();
    let largest = FockSpace::uniform(k, *ladder.last().expect("non-empty"))?;
    let search = oracle::search_box(&inst.polynomial, &oracle::box_for(&largest), oracle::DEFAULT_BUDGET)?;
    let witness = &search.minimizers[0];
    if let Some(&w) = witness.iter().max() {
        if ladder[0] < w as usize + 2 {
            return Err(Error::precondition(
                "adiabatic",
                format!("smallest cutoff {} must exceed the expected witness {witness:?} by at least 2", ladder[0]),
            ));
        }
    }
    let runs = par::map(ladder.to_vec(), |cutoff| -> Result<StabilityRow> {
        let space = FockSpace::uniform(k, cutoff)?;
        let sized = inst.clone().with_space(space)?;
        let result = evolve(&sized, schedule, opts)?;
        let Identification { top_outcome, top_probability, .. } = identify(&result.final_state, 0.5);
        Ok(StabilityRow { cutoff, top_outcome, top_probability })
    });
    let rows: Vec<StabilityRow> = runs.into_iter().collect::<Result<_>>()?;
    let max_difference =
        rows.windows(2).map(|w| (w[0].top_probability - w[1].top_probability).abs()).fold(0.0, f64::max);
    let same_outcome = rows.windows(2).all(|w| w[0].top_outcome == w[1].top_outcome);
    Ok(StabilityTable { rows, max_difference, same_outcome })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_hi, SymmetryBreak};
    use crate::polynomial::Polynomial;

    fn inst(text: &str, cutoffs: Vec<usize>) -> ProblemInstance {
        ProblemInstance::new(Polynomial::parse(text).unwrap(), FockSpace::new(cutoffs).unwrap()).unwrap()
    }

    #[test]
    fn initial_state_is_hi_ground_state() {
        let p = inst("x", vec![24]);
        let psi = initial_state(&p).unwrap();
        let energy = psi.expectation(&build_hi(&p).unwrap()).re;
        assert!(energy.abs() < 1e-6, "{energy}");
        let coherent = p.space.coherent_state(&p.alphas).unwrap();
        assert!(psi.fidelity(&coherent) > 1.0 - 1e-6);
    }

    #[test]
    fn sudden_limit_keeps_state() {
        let p = inst("x - 3", vec![16]);
        let r = evolve(&p, &Schedule::linear(1e-3).unwrap(), &EvolveOptions::default()).unwrap();
        let psi0 = initial_state(&p).unwrap();
        assert!(r.final_state.fidelity(&psi0) > 0.99);
        assert!(r.steps >= MIN_STEPS);
    }

    #[test]
    fn step_precondition() {
        let p = inst("x", vec![8]);
        let opts = EvolveOptions { dt: Some(0.1), ..Default::default() };
        let err = evolve(&p, &Schedule::linear(10.0).unwrap(), &opts).unwrap_err();
        assert!(matches!(err, Error::Precondition { module: "adiabatic", .. }));
    }

    #[test]
    fn trace_starts_in_ground_state() {
        let p = inst("x - 1", vec![12]);
        let opts = EvolveOptions { trace_samples: 5, ..Default::default() };
        let r = evolve(&p, &Schedule::linear(2.0).unwrap(), &opts).unwrap();
        assert_eq!(r.ground_overlap_trace.len(), 5);
        assert_eq!(r.ground_overlap_trace[0].s, 0.0);
        assert_eq!(r.ground_overlap_trace[4].s, 1.0);
        assert!(r.ground_overlap_trace[0].ground_overlap > 1.0 - 1e-9);
    }

    #[test]
    fn flow_endpoint_levels() {
        let p = inst("x - 1", vec![10]);
        let flow = spectral_flow(&p, &Schedule::linear(1.0).unwrap(), 11, 3).unwrap();
        let last = flow.levels.last().unwrap();
        assert!(last[0].abs() < 1e-12);
        assert!((last[1] - 1.0).abs() < 1e-12 && (last[2] - 1.0).abs() < 1e-12);
        assert!(flow.min_gap > 0.0);
        assert!(flow.levels.iter().all(|l| l.windows(2).all(|w| w[0] <= w[1])));
        assert!(spectral_flow(&p, &Schedule::linear(1.0).unwrap(), 5, 3).is_err());
    }

    #[test]
    fn flow_csv_layout() {
        let p = inst("x", vec![6]);
        let flow = spectral_flow(&p, &Schedule::linear(1.0).unwrap(), 11, 2).unwrap();
        let csv = flow.to_csv(None);
        assert!(csv.starts_with("s,E0,E1\n0,"));
        assert_eq!(csv.lines().count(), 12);
    }

    #[test]
    fn degenerate_start_is_its_own_status() {
        let p = inst("x - 1", vec![8]).with_alphas(vec![Complex64::new(0.0, 0.0)]).unwrap();
        let b = bound_diagnostic(&p, &Schedule::linear(10.0).unwrap(), 1.0).unwrap();
        assert_eq!(b.delta_ie, 0.0);
        assert_eq!(b.status, BoundStatus::DegenerateStart);
    }

    #[test]
    fn bound_product_linear_in_time() {
        let p = inst("x", vec![24]);
        let b1 = bound_diagnostic(&p, &Schedule::linear(1.0).unwrap(), 1.0).unwrap();
        let b3 = bound_diagnostic(&p, &Schedule::linear(3.0).unwrap(), 1.0).unwrap();
        assert_eq!(b1.delta_ie, b3.delta_ie);
        assert!((b3.product - 3.0 * b1.product).abs() < 1e-12);
        assert_eq!(b1.status, BoundStatus::Unsatisfied);
        assert_eq!(b3.status, BoundStatus::Satisfied);
    }

    #[test]
    fn stability_precondition() {
        let p = inst("x - 3", vec![8]);
        let s = Schedule::linear(1.0).unwrap();
        assert!(truncation_stability(&p, &s, &[2, 8], &EvolveOptions::default()).is_err());
        assert!(truncation_stability(&p, &s, &[8, 8], &EvolveOptions::default()).is_err());
    }

    #[test]
    fn symmetry_break_gap_at_end() {
        let p = inst("(x-2)*(x-4)", vec![10])
            .with_symmetry_break(SymmetryBreak { epsilon: 0.01, weights: vec![1.0] })
            .unwrap();
        let flow = spectral_flow(&p, &Schedule::linear(1.0).unwrap(), 11, 2).unwrap();
        let gaps = flow.gaps();
        assert!((gaps.last().unwrap() - 0.02).abs() < 1e-9);
    }
}
