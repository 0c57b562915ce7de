//! Initial and problem Hamiltonians and their interpolation.
//!
//! H_I = Σᵢ (aᵢ† − αᵢ*)(aᵢ − αᵢ) has the coherent state |α⟩ as ground state.
//! H_P is diagonal in the occupation basis with entries D(n)² + ε Σᵢ cᵢ nᵢ.
//! H(s) = J̃(s) H_I + Ũ(s) H_P.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fockspace::{FockSpace, OperatorMatrix};
use crate::polynomial::Polynomial;

/// Squared values above this lose integer exactness as `f64`.
pub const FLOAT_EXACT_LIMIT: u64 = 1 << 53;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleShape {
    #[default]
    Linear,
    /// Ũ(s) = 3s² − 2s³
    Smoothstep,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub total_time: f64,
    pub shape: ScheduleShape,
}

impl Schedule {
    pub fn new(total_time: f64, shape: ScheduleShape) -> Result<Self> {
        if !(total_time.is_finite() && total_time > 0.0) {
            return Err(Error::Config(format!("total time must be positive, got {total_time}")));
        }
        Ok(Schedule { total_time, shape })
    }

    pub fn linear(total_time: f64) -> Result<Self> {
        Self::new(total_time, ScheduleShape::Linear)
    }

    /// Weight of H_P.
    pub fn utilde(&self, s: f64) -> f64 {
        match self.shape {
            ScheduleShape::Linear => s,
            ScheduleShape::Smoothstep => s * s * (3.0 - 2.0 * s),
        }
    }

    /// Weight of H_I.
    pub fn jtilde(&self, s: f64) -> f64 {
        1.0 - self.utilde(s)
    }

    pub fn weights(&self, s: f64) -> Result<(f64, f64)> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::ScheduleRange(s));
        }
        Ok((self.jtilde(s), self.utilde(s)))
    }
}

/// Perturbation ε Σᵢ cᵢ nᵢ added to the problem Hamiltonian.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SymmetryBreak {
    pub epsilon: f64,
    pub weights: Vec<f64>,
}

impl SymmetryBreak {
    pub fn none(modes: usize) -> Self {
        SymmetryBreak { epsilon: 0.0, weights: vec![0.0; modes] }
    }

    /// ε = 0.01·(1 + smallest nonzero spacing between distinct D² values in
    /// the box), capped so that ε·Σ cᵢ(Nᵢ − 1) is at most half that spacing;
    /// cᵢ = √(i-th prime). Square roots of distinct primes are
    /// rationally independent, so Σ cᵢ nᵢ separates every pair of tuples.
    pub fn default_for(polynomial: &Polynomial, space: &FockSpace) -> Result<Self> {
        let mut values = exact_squares(polynomial, space)?;
        values.sort();
        values.dedup();
        let spacing = values
            .windows(2)
            .map(|w| &w[1] - &w[0])
            .min()
            .and_then(|d| d.to_f64())
            .unwrap_or(1.0);
        let weights = default_weights(space.modes());
        // the largest shift must stay below the spacing or the argmin moves
        let reach: f64 = weights.iter().zip(space.cutoffs()).map(|(c, &n)| c * (n - 1) as f64).sum();
        let epsilon = (1e-2 * (1.0 + spacing)).min(0.5 * spacing / reach.max(1.0));
        Ok(SymmetryBreak { epsilon, weights })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        SymmetryBreak { epsilon: self.epsilon * factor, weights: self.weights.clone() }
    }

    pub fn shift(&self, occupations: &[usize]) -> f64 {
        if self.epsilon == 0.0 {
            return 0.0;
        }
        self.epsilon * self.weights.iter().zip(occupations).map(|(c, &n)| c * n as f64).sum::<f64>()
    }
}

pub fn default_weights(modes: usize) -> Vec<f64> {
    primes(modes).into_iter().map(|p| (p as f64).sqrt()).collect()
}

fn primes(count: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    let mut candidate = 2;
    while out.len() < count {
        if out.iter().take_while(|&&p| p * p <= candidate).all(|&p| candidate % p != 0) {
            out.push(candidate);
        }
        candidate += 1;
    }
    out
}

/// Everything needed to build the Hamiltonians of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub polynomial: Polynomial,
    pub space: FockSpace,
    pub alphas: Vec<Complex64>,
    pub symmetry_break: SymmetryBreak,
}

impl ProblemInstance {
    /// α = 1 on every mode, no symmetry breaking.
    pub fn new(polynomial: Polynomial, space: FockSpace) -> Result<Self> {
        let k = space.modes();
        Self::with_parts(polynomial, space, vec![Complex64::new(1.0, 0.0); k], SymmetryBreak::none(k))
    }

    pub fn with_parts(
        polynomial: Polynomial,
        space: FockSpace,
        alphas: Vec<Complex64>,
        symmetry_break: SymmetryBreak,
    ) -> Result<Self> {
        let k = space.modes();
        if polynomial.num_vars() != k {
            return Err(Error::Config(format!(
                "polynomial has {} variables but the space has {k} modes",
                polynomial.num_vars()
            )));
        }
        if alphas.len() != k {
            return Err(Error::Dimension { expected: k, got: alphas.len() });
        }
        let sb = &symmetry_break;
        if !(sb.epsilon.is_finite() && sb.epsilon >= 0.0) {
            return Err(Error::Config(format!("epsilon must be non-negative, got {}", sb.epsilon)));
        }
        if sb.epsilon > 0.0 {
            if sb.weights.len() != k {
                return Err(Error::Dimension { expected: k, got: sb.weights.len() });
            }
            if sb.weights.iter().any(|&c| !(c.is_finite() && c > 0.0)) {
                return Err(Error::Config("symmetry-breaking weights must be positive".into()));
            }
            for (i, a) in sb.weights.iter().enumerate() {
                if sb.weights[i + 1..].contains(a) {
                    return Err(Error::Config("symmetry-breaking weights must be distinct".into()));
                }
            }
        }
        Ok(ProblemInstance { polynomial, space, alphas, symmetry_break })
    }

    pub fn with_alphas(self, alphas: Vec<Complex64>) -> Result<Self> {
        Self::with_parts(self.polynomial, self.space, alphas, self.symmetry_break)
    }

    pub fn with_symmetry_break(self, symmetry_break: SymmetryBreak) -> Result<Self> {
        Self::with_parts(self.polynomial, self.space, self.alphas, symmetry_break)
    }

    pub fn with_default_symmetry_break(self) -> Result<Self> {
        let sb = SymmetryBreak::default_for(&self.polynomial, &self.space)?;
        self.with_symmetry_break(sb)
    }

    /// Same instance on a different truncation.
    pub fn with_space(self, space: FockSpace) -> Result<Self> {
        Self::with_parts(self.polynomial, space, self.alphas, self.symmetry_break)
    }
}

/// Exact D(n)² for every basis tuple, in flat-index order.
pub fn exact_squares(polynomial: &Polynomial, space: &FockSpace) -> Result<Vec<BigInt>> {
    if polynomial.num_vars() != space.modes() {
        return Err(Error::Dimension { expected: space.modes(), got: polynomial.num_vars() });
    }
    space
        .basis()
        .map(|occ| {
            let d = polynomial.evaluate_occupations(&occ)?;
            Ok(&d * &d)
        })
        .collect()
}

/// Diagonal of H_P as floats.
pub fn hp_diagonal(inst: &ProblemInstance) -> Result<Vec<f64>> {
    let squares = exact_squares(&inst.polynomial, &inst.space)?;
    let limit = BigInt::from(FLOAT_EXACT_LIMIT);
    squares
        .iter()
        .enumerate()
        .map(|(i, sq)| {
            if sq.abs() > limit {
                return Err(Error::FloatBudget { value: sq.to_string() });
            }
            let base = sq.to_f64().expect("bounded by 2^53");
            Ok(base + inst.symmetry_break.shift(&inst.space.occupations(i)))
        })
        .collect()
}

pub fn build_hp(inst: &ProblemInstance) -> Result<OperatorMatrix> {
    Ok(OperatorMatrix::from_real_diagonal(&hp_diagonal(inst)?))
}

/// Single-mode (a† − α*)(a − α) = n − α a† − α* a + |α|² on `cutoff` levels.
pub fn displaced_number_entries(alpha: Complex64, cutoff: usize) -> Vec<(usize, usize, Complex64)> {
    let mut out = Vec::with_capacity(3 * cutoff);
    for n in 0..cutoff {
        out.push((n, n, Complex64::new(n as f64 + alpha.norm_sqr(), 0.0)));
        if n + 1 < cutoff {
            let s = ((n + 1) as f64).sqrt();
            // ⟨n+1|a†|n⟩ = √(n+1), ⟨n|a|n+1⟩ = √(n+1)
            out.push((n + 1, n, -alpha * s));
            out.push((n, n + 1, -alpha.conj() * s));
        }
    }
    out
}

pub fn build_hi(inst: &ProblemInstance) -> Result<OperatorMatrix> {
    let space = &inst.space;
    let mut total: Option<OperatorMatrix> = None;
    for (mode, (&alpha, &cut)) in inst.alphas.iter().zip(space.cutoffs()).enumerate() {
        let term = space.embed(mode, &displaced_number_entries(alpha, cut))?;
        total = Some(match total {
            None => term,
            Some(acc) => acc.add(&term)?,
        });
    }
    // zero modes: H_I vanishes on the one-dimensional space
    Ok(total.unwrap_or_else(|| OperatorMatrix::from_real_diagonal(&[0.0])))
}

/// Ground vector of the single-mode truncated H_I, phased so its largest
/// component is real and positive.
pub fn single_mode_hi_ground(alpha: Complex64, cutoff: usize) -> Result<(f64, Vec<Complex64>)> {
    let mut m = DMatrix::zeros(cutoff, cutoff);
    for (r, c, v) in displaced_number_entries(alpha, cutoff) {
        m[(r, c)] = v;
    }
    let (values, vectors) = crate::linalg::hermitian_eigen(&m)?;
    let v: Vec<Complex64> = vectors.column(0).iter().copied().collect();
    Ok((values[0], crate::linalg::fix_phase(v)))
}

/// J̃(s) H_I + Ũ(s) H_P as one matrix.
pub fn interpolate(inst: &ProblemInstance, schedule: &Schedule, s: f64) -> Result<OperatorMatrix> {
    let (j, u) = schedule.weights(s)?;
    let hi = build_hi(inst)?;
    let hp = build_hp(inst)?;
    OperatorMatrix::linear_combination(j, &hi, u, &hp)
}

/// H_I in sparse form with H_P kept as a plain diagonal: the representation
/// the integrator and the spectral sweeps work with.
#[derive(Debug, Clone)]
pub struct SplitHamiltonian {
    pub initial: OperatorMatrix,
    pub problem_diagonal: Vec<f64>,
}

impl SplitHamiltonian {
    pub fn build(inst: &ProblemInstance) -> Result<Self> {
        Ok(SplitHamiltonian { initial: build_hi(inst)?, problem_diagonal: hp_diagonal(inst)? })
    }

    pub fn dim(&self) -> usize {
        self.problem_diagonal.len()
    }

    /// y = (j H_I + u H_P) x
    pub fn apply_into(&self, j: f64, u: f64, x: &[Complex64], y: &mut [Complex64]) {
        self.initial.apply_into(x, y);
        for ((yi, xi), d) in y.iter_mut().zip(x).zip(&self.problem_diagonal) {
            *yi = *yi * j + xi * (u * d);
        }
    }

    pub fn dense_at(&self, j: f64, u: f64) -> DMatrix<Complex64> {
        let mut m = self.initial.to_dense() * Complex64::new(j, 0.0);
        for (i, d) in self.problem_diagonal.iter().enumerate() {
            m[(i, i)] += Complex64::new(u * d, 0.0);
        }
        m
    }

    /// Largest absolute diagonal entry over the whole schedule.
    pub fn max_diagonal(&self) -> f64 {
        let hi = self.initial.diagonal().iter().map(|v| v.norm()).fold(0.0, f64::max);
        let hp = self.problem_diagonal.iter().map(|v| v.abs()).fold(0.0, f64::max);
        hi.max(hp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(text: &str, cutoffs: Vec<usize>) -> ProblemInstance {
        ProblemInstance::new(Polynomial::parse(text).unwrap(), FockSpace::new(cutoffs).unwrap()).unwrap()
    }

    #[test]
    fn schedule_boundary_weights() {
        for shape in [ScheduleShape::Linear, ScheduleShape::Smoothstep] {
            let s = Schedule::new(1.0, shape).unwrap();
            assert_eq!(s.weights(0.0).unwrap(), (1.0, 0.0));
            assert_eq!(s.weights(1.0).unwrap(), (0.0, 1.0));
            let mut last = 0.0;
            for k in 0..=100 {
                let u = s.utilde(k as f64 / 100.0);
                assert!(u >= last);
                last = u;
            }
        }
        assert!(Schedule::linear(1.0).unwrap().weights(1.5).is_err());
        assert!(Schedule::linear(0.0).is_err());
    }

    #[test]
    fn hp_linear_root_on_diagonal() {
        let p = inst("x - 3", vec![8]);
        let d = hp_diagonal(&p).unwrap();
        assert_eq!(d, vec![9.0, 4.0, 1.0, 0.0, 1.0, 4.0, 9.0, 16.0]);
    }

    #[test]
    fn hp_matches_expanded_linear_form() {
        for m in 1..5i64 {
            let p = inst(&format!("x - {m}"), vec![12]);
            let d = hp_diagonal(&p).unwrap();
            for (n, v) in d.iter().enumerate() {
                let n = n as i64;
                assert_eq!(*v, (n * n - 2 * m * n + m * m) as f64);
            }
        }
    }

    #[test]
    fn symmetry_break_splits_double_root() {
        let p = inst("(x-2)*(x-4)", vec![10])
            .with_symmetry_break(SymmetryBreak { epsilon: 0.01, weights: vec![1.0] })
            .unwrap();
        let d = hp_diagonal(&p).unwrap();
        assert!((d[2] - 0.02).abs() < 1e-15);
        assert!((d[4] - 0.04).abs() < 1e-15);
        let min = d.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(d.iter().filter(|&&v| v == min).count(), 1);
        assert_eq!(d.iter().position(|&v| v == min), Some(2));
    }

    #[test]
    fn float_budget_is_reported() {
        let p = inst("x^20 - 1", vec![12]);
        assert!(matches!(hp_diagonal(&p), Err(Error::FloatBudget { .. })));
    }

    #[test]
    fn instance_validation() {
        let p = Polynomial::parse("x - y").unwrap();
        assert!(ProblemInstance::new(p.clone(), FockSpace::uniform(1, 4).unwrap()).is_err());
        let ok = ProblemInstance::new(p, FockSpace::uniform(2, 4).unwrap()).unwrap();
        let dup = SymmetryBreak { epsilon: 0.1, weights: vec![1.0, 1.0] };
        assert!(ok.clone().with_symmetry_break(dup).is_err());
        let neg = SymmetryBreak { epsilon: -0.1, weights: vec![1.0, 2.0] };
        assert!(ok.with_symmetry_break(neg).is_err());
    }

    #[test]
    fn default_symmetry_break() {
        let p = inst("x^2 - 2*y^2", vec![4, 4]);
        let sb = SymmetryBreak::default_for(&p.polynomial, &p.space).unwrap();
        assert!((sb.epsilon - 0.02).abs() < 1e-15);
        assert_eq!(sb.weights, vec![2f64.sqrt(), 3f64.sqrt()]);
        assert_eq!(primes(6), vec![2, 3, 5, 7, 11, 13]);
    }

    #[test]
    fn hi_with_zero_alpha_is_number_operator() {
        let p = inst("x - 1", vec![6]).with_alphas(vec![Complex64::new(0.0, 0.0)]).unwrap();
        let hi = build_hi(&p).unwrap();
        let n = p.space.number_operator(0).unwrap();
        assert!(hi.sub(&n).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn hi_is_hermitian_for_complex_alpha() {
        let p = inst("x + y", vec![5, 4])
            .with_alphas(vec![Complex64::new(0.7, -0.4), Complex64::new(-1.0, 0.2)])
            .unwrap();
        let hi = build_hi(&p).unwrap();
        assert!(hi.is_sparse());
        assert!(hi.hermiticity_defect() < 1e-12);
        // matches the operator product built from ladder matrices
        let mut expected: Option<OperatorMatrix> = None;
        for (mode, &a) in p.alphas.iter().enumerate() {
            let shift = OperatorMatrix::identity(p.space.dim()).scale(a);
            let lower = p.space.annihilation(mode).unwrap().sub(&shift).unwrap();
            let term = lower.adjoint().matmul(&lower).unwrap();
            expected = Some(match expected {
                None => term,
                Some(e) => e.add(&term).unwrap(),
            });
        }
        assert!(hi.sub(&expected.unwrap()).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn interpolation_endpoints_and_midpoint() {
        let p = inst("x^2 - 2*y^2", vec![4, 3]);
        let sched = Schedule::linear(1.0).unwrap();
        let hi = build_hi(&p).unwrap();
        let hp = build_hp(&p).unwrap();
        assert_eq!(interpolate(&p, &sched, 0.0).unwrap().to_dense(), hi.to_dense());
        assert_eq!(interpolate(&p, &sched, 1.0).unwrap().to_dense(), hp.to_dense());
        let mid = interpolate(&p, &sched, 0.5).unwrap().to_dense();
        let expected = (hi.to_dense() + hp.to_dense()) * Complex64::new(0.5, 0.0);
        assert!((mid - expected).camax() < 1e-15);
        assert!(matches!(interpolate(&p, &sched, -0.1), Err(Error::ScheduleRange(_))));
    }

    #[test]
    fn split_hamiltonian_matches_interpolation() {
        let p = inst("x*y - 2", vec![4, 5]);
        let split = SplitHamiltonian::build(&p).unwrap();
        let sched = Schedule::new(1.0, ScheduleShape::Smoothstep).unwrap();
        let (j, u) = sched.weights(0.3).unwrap();
        let full = interpolate(&p, &sched, 0.3).unwrap();
        assert!((split.dense_at(j, u) - full.to_dense()).camax() < 1e-12);
        let x: Vec<Complex64> = (0..split.dim()).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let mut y = vec![Complex64::new(0.0, 0.0); split.dim()];
        split.apply_into(j, u, &x, &mut y);
        let z = full.apply(&x);
        assert!(y.iter().zip(&z).all(|(a, b)| (a - b).norm() < 1e-10));
    }
}
