//! Truncated multi-mode bosonic Fock space.
//!
//! Mode `i` holds occupations `0..cutoffs[i]`; the top level is a hard wall.
//! Basis states are indexed row-major with the last mode varying fastest, so
//! ascending flat index is ascending lexicographic order of occupation tuples.

mod operator;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use operator::OperatorMatrix;

/// Largest tail weight a truncated coherent state may drop.
pub const COHERENT_TAIL_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SpaceDescriptor", into = "SpaceDescriptor")]
pub struct FockSpace {
    cutoffs: Vec<usize>,
    strides: Vec<usize>,
    dim: usize,
}

#[derive(Serialize, Deserialize)]
struct SpaceDescriptor {
    cutoffs: Vec<usize>,
}

impl TryFrom<SpaceDescriptor> for FockSpace {
    type Error = Error;
    fn try_from(d: SpaceDescriptor) -> Result<Self> {
        FockSpace::new(d.cutoffs)
    }
}

impl From<FockSpace> for SpaceDescriptor {
    fn from(s: FockSpace) -> Self {
        SpaceDescriptor { cutoffs: s.cutoffs }
    }
}

impl FockSpace {
    pub fn new(cutoffs: Vec<usize>) -> Result<Self> {
        if let Some(&n) = cutoffs.iter().find(|&&n| n < 2) {
            return Err(Error::InvalidSpace(format!("cutoff {n} below the minimum of 2")));
        }
        let mut dim: usize = 1;
        for &n in &cutoffs {
            dim = dim
                .checked_mul(n)
                .ok_or_else(|| Error::InvalidSpace("dimension overflows usize".into()))?;
        }
        let mut strides = vec![1; cutoffs.len()];
        for i in (0..cutoffs.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * cutoffs[i + 1];
        }
        Ok(FockSpace { cutoffs, strides, dim })
    }

    /// Same cutoff on each of `modes` modes.
    pub fn uniform(modes: usize, cutoff: usize) -> Result<Self> {
        Self::new(vec![cutoff; modes])
    }

    pub fn modes(&self) -> usize {
        self.cutoffs.len()
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn index(&self, occupations: &[usize]) -> Result<usize> {
        if occupations.len() != self.modes() {
            return Err(Error::Dimension { expected: self.modes(), got: occupations.len() });
        }
        let mut idx = 0;
        for ((&n, &cut), &stride) in occupations.iter().zip(&self.cutoffs).zip(&self.strides) {
            if n >= cut {
                return Err(Error::InvalidSpace(format!("occupation {n} not below cutoff {cut}")));
            }
            idx += n * stride;
        }
        Ok(idx)
    }

    pub fn occupations(&self, index: usize) -> Vec<usize> {
        assert!(index < self.dim, "basis index {index} out of range {}", self.dim);
        self.cutoffs
            .iter()
            .zip(&self.strides)
            .map(|(&cut, &stride)| (index / stride) % cut)
            .collect()
    }

    /// Occupation of one mode at a flat index.
    pub fn occupation(&self, index: usize, mode: usize) -> usize {
        (index / self.strides[mode]) % self.cutoffs[mode]
    }

    /// All occupation tuples in flat-index order.
    pub fn basis(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.dim).map(|i| self.occupations(i))
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.modes() {
            return Err(Error::ModeOutOfRange { mode, modes: self.modes() });
        }
        Ok(())
    }

    /// Lifts a single-mode matrix (given by its nonzero entries) to the full
    /// space, acting as the identity on every other mode. Single-mode spaces
    /// get dense storage, larger ones CSR.
    pub fn embed(&self, mode: usize, local: &[(usize, usize, Complex64)]) -> Result<OperatorMatrix> {
        self.check_mode(mode)?;
        let cut = self.cutoffs[mode];
        if self.modes() == 1 {
            let mut m = DMatrix::zeros(cut, cut);
            for &(r, c, v) in local {
                m[(r, c)] += v;
            }
            return Ok(OperatorMatrix::from_dense(m));
        }
        let stride = self.strides[mode];
        let mut triplets = Vec::with_capacity(local.len() * (self.dim / cut));
        for base in 0..self.dim {
            if self.occupation(base, mode) != 0 {
                continue;
            }
            for &(r, c, v) in local {
                triplets.push((base + r * stride, base + c * stride, v));
            }
        }
        Ok(OperatorMatrix::from_triplets(self.dim, triplets))
    }

    pub fn annihilation(&self, mode: usize) -> Result<OperatorMatrix> {
        self.check_mode(mode)?;
        self.embed(mode, &annihilation_entries(self.cutoffs[mode]))
    }

    pub fn creation(&self, mode: usize) -> Result<OperatorMatrix> {
        self.check_mode(mode)?;
        let entries: Vec<_> =
            annihilation_entries(self.cutoffs[mode]).into_iter().map(|(r, c, v)| (c, r, v)).collect();
        self.embed(mode, &entries)
    }

    pub fn number_operator(&self, mode: usize) -> Result<OperatorMatrix> {
        self.check_mode(mode)?;
        Ok(OperatorMatrix::from_diagonal(
            (0..self.dim).map(|i| Complex64::new(self.occupation(i, mode) as f64, 0.0)).collect(),
        ))
    }

    /// Total occupation Σᵢ nᵢ.
    pub fn total_number(&self) -> OperatorMatrix {
        OperatorMatrix::from_diagonal(
            self.basis().map(|occ| Complex64::new(occ.iter().sum::<usize>() as f64, 0.0)).collect(),
        )
    }

    /// Product coherent state Πᵢ |αᵢ⟩, truncated and renormalized.
    pub fn coherent_state(&self, alphas: &[Complex64]) -> Result<QuantumState> {
        if alphas.len() != self.modes() {
            return Err(Error::Dimension { expected: self.modes(), got: alphas.len() });
        }
        let factors: Vec<Vec<Complex64>> =
            alphas.iter().zip(&self.cutoffs).map(|(&a, &n)| coherent_amplitudes(a, n)).collect();
        let kept: f64 = factors.iter().map(|f| f.iter().map(|c| c.norm_sqr()).sum::<f64>()).product();
        let tail = 1.0 - kept;
        if tail > COHERENT_TAIL_LIMIT {
            return Err(Error::TailWeight { tail, limit: COHERENT_TAIL_LIMIT });
        }
        let mut state = QuantumState::product(self, &factors)?;
        state.normalize();
        Ok(state)
    }

    /// Deviation of the truncated [a, a†] from the identity. `interior` is the
    /// largest entry deviation over basis states whose `mode` occupation is at
    /// most N−2; `boundary` is the deviation on the top level N−1, which is N.
    pub fn commutator_defect(&self, mode: usize) -> Result<CommutatorDefect> {
        let a = self.annihilation(mode)?;
        let ad = self.creation(mode)?;
        let comm = a.commutator(&ad)?;
        let top = self.cutoffs[mode] - 1;
        let mut interior: f64 = 0.0;
        let mut boundary: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let expected = if i == j { 1.0 } else { 0.0 };
                let dev = (comm.get(i, j) - Complex64::new(expected, 0.0)).norm();
                if self.occupation(i, mode) < top && self.occupation(j, mode) < top {
                    interior = interior.max(dev);
                } else {
                    boundary = boundary.max(dev);
                }
            }
        }
        Ok(CommutatorDefect { interior, boundary })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CommutatorDefect {
    pub interior: f64,
    pub boundary: f64,
}

fn annihilation_entries(cutoff: usize) -> Vec<(usize, usize, Complex64)> {
    (1..cutoff).map(|n| (n - 1, n, Complex64::new((n as f64).sqrt(), 0.0))).collect()
}

/// Unnormalized coherent amplitudes e^{−|α|²/2} αⁿ/√n! for n < cutoff, via
/// log-factorials so large cutoffs do not overflow.
pub fn coherent_amplitudes(alpha: Complex64, cutoff: usize) -> Vec<Complex64> {
    let r = alpha.norm();
    let mut out = vec![Complex64::new(0.0, 0.0); cutoff];
    if r == 0.0 {
        out[0] = Complex64::new(1.0, 0.0);
        return out;
    }
    let phase = alpha.arg();
    let mut log_fact = 0.0;
    for (n, amp) in out.iter_mut().enumerate() {
        if n > 0 {
            log_fact += (n as f64).ln();
        }
        let log_mag = -0.5 * r * r + n as f64 * r.ln() - 0.5 * log_fact;
        *amp = Complex64::from_polar(log_mag.exp(), n as f64 * phase);
    }
    out
}

/// Complex amplitude vector over a Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    space: FockSpace,
    amplitudes: Vec<Complex64>,
}

impl QuantumState {
    pub fn new(space: &FockSpace, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::Dimension { expected: space.dim(), got: amplitudes.len() });
        }
        Ok(QuantumState { space: space.clone(), amplitudes })
    }

    pub fn basis_state(space: &FockSpace, occupations: &[usize]) -> Result<Self> {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); space.dim()];
        amplitudes[space.index(occupations)?] = Complex64::new(1.0, 0.0);
        Self::new(space, amplitudes)
    }

    /// Tensor product of per-mode amplitude vectors.
    pub fn product(space: &FockSpace, factors: &[Vec<Complex64>]) -> Result<Self> {
        if factors.len() != space.modes() {
            return Err(Error::Dimension { expected: space.modes(), got: factors.len() });
        }
        for (f, &n) in factors.iter().zip(space.cutoffs()) {
            if f.len() != n {
                return Err(Error::Dimension { expected: n, got: f.len() });
            }
        }
        let amplitudes = (0..space.dim())
            .map(|i| {
                factors
                    .iter()
                    .enumerate()
                    .map(|(mode, f)| f[space.occupation(i, mode)])
                    .product::<Complex64>()
            })
            .collect();
        Self::new(space, amplitudes)
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Rescales to unit norm and returns the norm it had before.
    pub fn normalize(&mut self) -> f64 {
        let norm = self.norm();
        if norm > 0.0 {
            for a in &mut self.amplitudes {
                *a /= norm;
            }
        }
        norm
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &QuantumState) -> Complex64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn fidelity(&self, other: &QuantumState) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn expectation(&self, op: &OperatorMatrix) -> Complex64 {
        op.expectation(&self.amplitudes)
    }

    /// Marginal occupation distribution of one mode.
    pub fn mode_distribution(&self, mode: usize) -> Result<Vec<f64>> {
        self.space.check_mode(mode)?;
        let mut dist = vec![0.0; self.space.cutoffs()[mode]];
        for (i, a) in self.amplitudes.iter().enumerate() {
            dist[self.space.occupation(i, mode)] += a.norm_sqr();
        }
        Ok(dist)
    }
}

#[derive(Serialize, Deserialize)]
struct StateJson {
    space: FockSpace,
    amplitudes: Vec<[f64; 2]>,
}

impl Serialize for QuantumState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StateJson {
            space: self.space.clone(),
            amplitudes: self.amplitudes.iter().map(|a| [a.re, a.im]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for QuantumState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = StateJson::deserialize(d)?;
        QuantumState::new(&raw.space, raw.amplitudes.iter().map(|[re, im]| Complex64::new(*re, *im)).collect())
            .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn rejects_small_cutoffs() {
        assert!(FockSpace::new(vec![4, 1]).is_err());
        assert!(FockSpace::new(vec![2]).is_ok());
    }

    #[test]
    fn index_round_trip() {
        let s = FockSpace::new(vec![3, 4, 2]).unwrap();
        assert_eq!(s.dim(), 24);
        for i in 0..s.dim() {
            assert_eq!(s.index(&s.occupations(i)).unwrap(), i);
        }
        assert_eq!(s.occupations(1), vec![0, 0, 1]);
        assert!(s.index(&[3, 0, 0]).is_err());
        assert!(s.index(&[0, 0]).is_err());
    }

    #[test]
    fn ladder_actions() {
        let s = FockSpace::uniform(1, 6).unwrap();
        let a = s.annihilation(0).unwrap();
        let vac = QuantumState::basis_state(&s, &[0]).unwrap();
        assert!(a.apply(vac.amplitudes()).iter().all(|v| v.norm() == 0.0));
        let one = QuantumState::basis_state(&s, &[1]).unwrap();
        assert_eq!(a.apply(one.amplitudes()), vac.amplitudes());
        let n = s.number_operator(0).unwrap();
        let five = QuantumState::basis_state(&s, &[5]).unwrap();
        assert_eq!(n.apply(five.amplitudes())[5], c(5.0));
        assert_eq!(n.apply(vac.amplitudes())[0], c(0.0));
        assert!(s.annihilation(1).is_err());
        assert!(matches!(s.number_operator(3), Err(Error::ModeOutOfRange { mode: 3, modes: 1 })));
    }

    #[test]
    fn number_operator_is_adag_a() {
        for space in [FockSpace::uniform(1, 9).unwrap(), FockSpace::new(vec![3, 5]).unwrap()] {
            for mode in 0..space.modes() {
                let a = space.annihilation(mode).unwrap();
                let ad = space.creation(mode).unwrap();
                let n = space.number_operator(mode).unwrap();
                let diff = ad.matmul(&a).unwrap().sub(&n).unwrap();
                assert!(diff.max_abs() < 1e-12);
                assert!(n.hermiticity_defect() < 1e-12);
                assert!(ad.sub(&a.adjoint()).unwrap().max_abs() < 1e-15);
            }
        }
    }

    #[test]
    fn multimode_storage_is_sparse() {
        let s = FockSpace::new(vec![4, 4]).unwrap();
        assert!(s.annihilation(0).unwrap().is_sparse());
        assert!(!FockSpace::uniform(1, 4).unwrap().annihilation(0).unwrap().is_sparse());
    }

    #[test]
    fn commutator_defect_interior_and_boundary() {
        for n in [2, 5, 8] {
            let s = FockSpace::uniform(1, n).unwrap();
            let d = s.commutator_defect(0).unwrap();
            assert!(d.interior < 1e-12, "N={n}: {}", d.interior);
            assert!((d.boundary - n as f64).abs() < 1e-12);
        }
        let s = FockSpace::new(vec![3, 4]).unwrap();
        let d = s.commutator_defect(1).unwrap();
        assert!(d.interior < 1e-12);
        assert!((d.boundary - 4.0).abs() < 1e-12);
    }

    #[test]
    fn coherent_vacuum_and_mean() {
        let s = FockSpace::uniform(1, 16).unwrap();
        let vac = s.coherent_state(&[c(0.0)]).unwrap();
        assert_eq!(vac, QuantumState::basis_state(&s, &[0]).unwrap());
        let one = s.coherent_state(&[c(1.0)]).unwrap();
        let mean = one.expectation(&s.number_operator(0).unwrap()).re;
        assert!((mean - 1.0).abs() < 1e-6);
        assert!((one.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coherent_tail_weight_error() {
        let s = FockSpace::uniform(1, 4).unwrap();
        assert!(matches!(s.coherent_state(&[c(3.0)]), Err(Error::TailWeight { .. })));
        assert!(s.coherent_state(&[c(1.0), c(1.0)]).is_err());
    }

    #[test]
    fn coherent_large_cutoff_does_not_overflow() {
        let s = FockSpace::uniform(1, 400).unwrap();
        let st = s.coherent_state(&[c(10.0)]).unwrap();
        assert!(st.amplitudes().iter().all(|a| a.re.is_finite()));
        let mean = st.expectation(&s.number_operator(0).unwrap()).re;
        assert!((mean - 100.0).abs() < 1e-8);
    }

    #[test]
    fn coherent_is_annihilation_eigenvector_below_boundary() {
        let alpha = Complex64::new(0.3, 0.4);
        let mut last = f64::INFINITY;
        for n in [8, 16, 32] {
            let s = FockSpace::uniform(1, n).unwrap();
            let st = s.coherent_state(&[alpha]).unwrap();
            let a_psi = s.annihilation(0).unwrap().apply(st.amplitudes());
            let residual = |levels: usize| -> f64 {
                (0..levels).map(|k| (a_psi[k] - alpha * st.amplitudes()[k]).norm_sqr()).sum::<f64>().sqrt()
            };
            assert!(residual(n - 2) < 1e-12);
            // the top level carries the whole truncation error
            let full = residual(n);
            assert!(full < last, "N={n}: {full} >= {last}");
            last = full;
        }
    }

    #[test]
    fn state_json_round_trip() {
        let s = FockSpace::new(vec![2, 3]).unwrap();
        let st = s.coherent_state(&[c(0.0), c(0.0)]).unwrap();
        let json = serde_json::to_string(&st).unwrap();
        assert!(json.starts_with(r#"{"space":{"cutoffs":[2,3]},"amplitudes":[[1.0,0.0],"#));
        let back: QuantumState = serde_json::from_str(&json).unwrap();
        assert_eq!(back, st);
        assert!(serde_json::from_str::<FockSpace>(r#"{"cutoffs":[1]}"#).is_err());
    }
}
