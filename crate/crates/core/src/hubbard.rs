//! Bose-Hubbard lattice with fixed atom number, its superfluid and Mott
//! reference states, and the single-site mean-field reduction
//!
//! ```text
//! H_site(α) = zJ (a† − α*)(a − α) + U (n − m)²
//! ```
//!
//! whose self-consistent order parameter α = ⟨a⟩ vanishes in the Mott phase,
//! leaving the ground state |m⟩: the solution of x − m = 0.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fockspace::{FockSpace, OperatorMatrix, QuantumState};
use crate::hamiltonian::displaced_number_entries;
use crate::linalg::hermitian_eigen;
use crate::par;
use crate::polynomial::Polynomial;

pub const DEFAULT_BASIS_BUDGET: usize = 20_000;
pub const DEFAULT_DAMPING: f64 = 0.5;
pub const DEFAULT_MAX_ITERATIONS: usize = 5000;
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
/// |α| below this counts as the Mott phase in a sweep.
pub const MOTT_THRESHOLD: f64 = 1e-3;
/// Allowed rise of |α| between consecutive sweep points.
pub const MONOTONE_TOLERANCE: f64 = 1e-6;

/// M sites on a ring (a single bond for M = 2) holding K atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeModel {
    pub sites: usize,
    pub atoms: usize,
    pub tunneling: f64,
    pub interaction: f64,
    pub filling: usize,
}

impl LatticeModel {
    pub fn new(sites: usize, atoms: usize, tunneling: f64, interaction: f64, filling: usize) -> Result<Self> {
        if sites < 2 {
            return Err(Error::Config("the lattice needs at least two sites".into()));
        }
        if filling == 0 {
            return Err(Error::Config("filling m must be a positive integer".into()));
        }
        if !(tunneling >= 0.0 && interaction >= 0.0 && tunneling.is_finite() && interaction.is_finite()) {
            return Err(Error::Config("J and U must be finite and non-negative".into()));
        }
        Ok(LatticeModel { sites, atoms, tunneling, interaction, filling })
    }

    /// Neighbours per site.
    pub fn coordination(&self) -> usize {
        if self.sites == 2 { 1 } else { 2 }
    }

    pub fn bonds(&self) -> Vec<(usize, usize)> {
        if self.sites == 2 {
            vec![(0, 1)]
        } else {
            (0..self.sites).map(|i| (i, (i + 1) % self.sites)).collect()
        }
    }

    /// C(K + M − 1, M − 1)
    pub fn basis_dimension(&self) -> BigInt {
        let (n, k) = (self.atoms + self.sites - 1, self.sites - 1);
        let mut c = BigInt::from(1);
        for i in 0..k {
            c = c * (n - i) / (i + 1);
        }
        c
    }
}

/// All occupation tuples with Σ nᵢ = K, first site descending.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedNumberBasis {
    states: Vec<Vec<usize>>,
    lookup: HashMap<Vec<usize>, usize>,
}

impl FixedNumberBasis {
    pub fn new(sites: usize, atoms: usize, budget: usize) -> Result<Self> {
        let mut states = Vec::new();
        let mut current = vec![0; sites];
        fill(&mut current, 0, atoms, &mut states, budget)?;
        let lookup = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(FixedNumberBasis { states, lookup })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[Vec<usize>] {
        &self.states
    }

    pub fn index(&self, occupations: &[usize]) -> Option<usize> {
        self.lookup.get(occupations).copied()
    }
}

fn fill(current: &mut Vec<usize>, site: usize, left: usize, out: &mut Vec<Vec<usize>>, budget: usize) -> Result<()> {
    if site == current.len() - 1 {
        current[site] = left;
        if out.len() == budget {
            return Err(Error::Budget { what: "fixed-number basis", size: budget as u128 + 1, budget: budget as u128 });
        }
        out.push(current.clone());
        return Ok(());
    }
    for n in (0..=left).rev() {
        current[site] = n;
        fill(current, site + 1, left - n, out, budget)?;
    }
    Ok(())
}

/// Amplitudes over a [`FixedNumberBasis`].
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    pub amplitudes: Vec<Complex64>,
}

impl LatticeState {
    pub fn fidelity(&self, other: &LatticeState) -> f64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum::<Complex64>().norm_sqr()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// −J Σ_⟨ij⟩ (aᵢ†aⱼ + aⱼ†aᵢ) + U Σᵢ nᵢ(nᵢ − m) on the fixed-K basis.
pub fn build_hb(model: &LatticeModel, basis: &FixedNumberBasis) -> OperatorMatrix {
    let j = model.tunneling;
    let u = model.interaction;
    let m = model.filling as f64;
    let mut triplets = Vec::new();
    for (col, state) in basis.states().iter().enumerate() {
        let onsite: f64 = state.iter().map(|&n| n as f64 * (n as f64 - m)).sum();
        triplets.push((col, col, Complex64::new(u * onsite, 0.0)));
        if j == 0.0 {
            continue;
        }
        for &(a, b) in &model.bonds() {
            for (to, from) in [(a, b), (b, a)] {
                if state[from] == 0 {
                    continue;
                }
                // a_to† a_from |…⟩ = √((n_to + 1) n_from) |…, n_to + 1, n_from − 1, …⟩
                let amp = ((state[to] + 1) as f64 * state[from] as f64).sqrt();
                let mut next = state.clone();
                next[to] += 1;
                next[from] -= 1;
                let row = basis.index(&next).expect("hopping conserves atom number");
                triplets.push((row, col, Complex64::new(-j * amp, 0.0)));
            }
        }
    }
    OperatorMatrix::from_triplets(basis.len(), triplets)
}

/// H_B on the full tensor-product Fock space with `cutoff` levels per site,
/// built from ladder matrices; used to check number conservation.
pub fn build_hb_fock(model: &LatticeModel, cutoff: usize) -> Result<OperatorMatrix> {
    let space = FockSpace::uniform(model.sites, cutoff)?;
    let m = model.filling as f64;
    let diag: Vec<f64> = space
        .basis()
        .map(|occ| model.interaction * occ.iter().map(|&n| n as f64 * (n as f64 - m)).sum::<f64>())
        .collect();
    let mut h = OperatorMatrix::from_real_diagonal(&diag);
    for (a, b) in model.bonds() {
        let hop = space.creation(a)?.matmul(&space.annihilation(b)?)?;
        let both = hop.add(&hop.adjoint())?;
        h = OperatorMatrix::linear_combination(1.0, &h, -model.tunneling, &both)?;
    }
    Ok(h)
}

/// Lowest eigenpair of H_B.
pub fn ground_state(model: &LatticeModel, basis: &FixedNumberBasis) -> Result<(f64, LatticeState)> {
    let h = build_hb(model, basis).to_dense();
    let (values, vectors) = hermitian_eigen(&h)?;
    let v = crate::linalg::fix_phase(vectors.column(0).iter().copied().collect());
    Ok((values[0], LatticeState { amplitudes: v }))
}

/// Full spectrum of H_B, ascending.
pub fn spectrum(model: &LatticeModel, basis: &FixedNumberBasis) -> Result<Vec<f64>> {
    crate::linalg::hermitian_eigenvalues(&build_hb(model, basis).to_dense())
}

/// Normalized (Σᵢ aᵢ†)^K |0⟩, whose amplitude on |n⟩ is ∝ K!/√(Πᵢ nᵢ!).
pub fn superfluid_state(model: &LatticeModel, basis: &FixedNumberBasis) -> LatticeState {
    let ln_fact = |n: usize| (1..=n).map(|k| (k as f64).ln()).sum::<f64>();
    let mut amps: Vec<Complex64> = basis
        .states()
        .iter()
        .map(|s| Complex64::new((-0.5 * s.iter().map(|&n| ln_fact(n)).sum::<f64>()).exp(), 0.0))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    debug_assert!(basis.states().iter().all(|s| s.len() == model.sites && s.iter().sum::<usize>() == model.atoms));
    LatticeState { amplitudes: amps }
}

/// Πᵢ (aᵢ†)^m |0⟩ normalized: every site holds m atoms.
pub fn mott_state(model: &LatticeModel, basis: &FixedNumberBasis) -> Result<LatticeState> {
    if model.atoms != model.filling * model.sites {
        return Err(Error::Filling { atoms: model.atoms, sites: model.sites, filling: model.filling });
    }
    let target = vec![model.filling; model.sites];
    let idx = basis.index(&target).expect("uniform filling is in the fixed-K basis");
    let mut amps = vec![Complex64::new(0.0, 0.0); basis.len()];
    amps[idx] = Complex64::new(1.0, 0.0);
    Ok(LatticeState { amplitudes: amps })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeanFieldOptions {
    pub cutoff: usize,
    pub damping: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for MeanFieldOptions {
    fn default() -> Self {
        MeanFieldOptions {
            cutoff: 16,
            damping: DEFAULT_DAMPING,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanFieldState {
    pub alpha: Complex64,
    #[serde(skip)]
    pub single_site_ground: QuantumState,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
}

impl MeanFieldState {
    pub fn occupation_distribution(&self) -> Vec<f64> {
        self.single_site_ground.probabilities()
    }
}

/// Ground state of zJ·(a† − α*)(a − α) + U·(n − m)² and its ⟨a⟩.
pub fn single_site_ground(
    jt: f64,
    ut: f64,
    filling: usize,
    alpha: Complex64,
    space: &FockSpace,
) -> Result<(QuantumState, Complex64)> {
    let cutoff = space.cutoffs()[0];
    let mut h = DMatrix::zeros(cutoff, cutoff);
    for (r, c, v) in displaced_number_entries(alpha, cutoff) {
        h[(r, c)] += v * jt;
    }
    for n in 0..cutoff {
        let d = n as f64 - filling as f64;
        h[(n, n)] += Complex64::new(ut * d * d, 0.0);
    }
    let (_, vectors) = hermitian_eigen(&h)?;
    let ground = QuantumState::new(space, vectors.column(0).iter().copied().collect())?;
    let mean_a: Complex64 = (1..cutoff)
        .map(|n| ground.amplitudes()[n - 1].conj() * ground.amplitudes()[n] * (n as f64).sqrt())
        .sum();
    Ok((ground, mean_a))
}

/// Damped fixed-point iteration α ← (1 − λ)α + λ⟨a⟩ with J̃ = zJ, Ũ = U.
pub fn mean_field_solve(
    tunneling: f64,
    interaction: f64,
    filling: usize,
    coordination: usize,
    alpha0: Complex64,
    opts: &MeanFieldOptions,
) -> Result<MeanFieldState> {
    if opts.cutoff < filling + 6 {
        return Err(Error::precondition(
            "hubbard",
            format!("single-site cutoff {} must be at least m + 6 = {}", opts.cutoff, filling + 6),
        ));
    }
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::Config(format!("damping must lie in (0, 1], got {}", opts.damping)));
    }
    let space = FockSpace::uniform(1, opts.cutoff)?;
    let jt = coordination as f64 * tunneling;
    if jt == 0.0 {
        // no hopping: the site decouples and α plays no role
        let (ground, _) = single_site_ground(0.0, interaction, filling, Complex64::new(0.0, 0.0), &space)?;
        return Ok(MeanFieldState {
            alpha: Complex64::new(0.0, 0.0),
            single_site_ground: ground,
            iterations: 1,
            converged: true,
            residual: 0.0,
        });
    }
    let mut alpha = alpha0;
    let mut residual = f64::INFINITY;
    for iteration in 1..=opts.max_iterations {
        let (ground, mean_a) = single_site_ground(jt, interaction, filling, alpha, &space)?;
        residual = (alpha - mean_a).norm();
        if residual < opts.tolerance {
            return Ok(MeanFieldState { alpha, single_site_ground: ground, iterations: iteration, converged: true, residual });
        }
        alpha = alpha * (1.0 - opts.damping) + mean_a * opts.damping;
    }
    Err(Error::NonConvergence { iterations: opts.max_iterations, residual })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub ratio: f64,
    pub alpha_abs: f64,
    pub iterations: usize,
    pub occupation: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub filling: usize,
    pub coordination: usize,
    pub rows: Vec<SweepRow>,
    pub monotone: bool,
    /// First ratio where |α| drops below [`MOTT_THRESHOLD`].
    pub transition_ratio: Option<f64>,
}

impl SweepTable {
    /// `ratio,alpha_abs,iterations,p0,p1,...` rows.
    pub fn to_csv(&self) -> String {
        let width = self.rows.first().map_or(0, |r| r.occupation.len());
        let mut out = String::from("ratio,alpha_abs,iterations");
        for n in 0..width {
            out.push_str(&format!(",p{n}"));
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{},{},{}", r.ratio, r.alpha_abs, r.iterations));
            for p in &r.occupation {
                out.push_str(&format!(",{p}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Mean-field |α| over an ascending grid of U/J with J = 1; every point
/// starts from `alpha0`.
pub fn sweep_transition(
    filling: usize,
    coordination: usize,
    ratios: &[f64],
    alpha0: Complex64,
    opts: &MeanFieldOptions,
) -> Result<SweepTable> {
    if ratios.is_empty() || ratios.windows(2).any(|w| w[0] >= w[1]) || ratios.iter().any(|r| !(*r >= 0.0)) {
        return Err(Error::precondition("hubbard", "ratio grid must be non-empty, non-negative and ascending"));
    }
    let results = par::map(ratios.to_vec(), |ratio| mean_field_solve(1.0, ratio, filling, coordination, alpha0, opts));
    let rows: Vec<SweepRow> = ratios
        .iter()
        .zip(results)
        .map(|(&ratio, r)| {
            r.map(|s| SweepRow {
                ratio,
                alpha_abs: s.alpha.norm(),
                iterations: s.iterations,
                occupation: s.occupation_distribution(),
            })
        })
        .collect::<Result<_>>()?;
    let monotone = rows.windows(2).all(|w| w[1].alpha_abs <= w[0].alpha_abs + MONOTONE_TOLERANCE);
    let transition_ratio = rows.iter().find(|r| r.alpha_abs < MOTT_THRESHOLD).map(|r| r.ratio);
    Ok(SweepTable { filling, coordination, rows, monotone, transition_ratio })
}

/// x − m, the equation whose unique solution is the Mott occupation.
pub fn as_diophantine(filling: usize) -> Result<Polynomial> {
    if filling == 0 {
        return Err(Error::Config("filling m must be at least 1".into()));
    }
    Polynomial::parse(&format!("x - {filling}"))
}
