//! Noisy-coefficient experiment: draw real coefficients around the exact
//! integers, locate the ground state of each perturbed D², and check that the
//! spread of the averaged location shrinks like 1/√N.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::adiabatic::{evolve_split, initial_state, EvolveOptions};
use crate::error::{Error, Result};
use crate::fockspace::FockSpace;
use crate::hamiltonian::{build_hi, ProblemInstance, Schedule, SplitHamiltonian, SymmetryBreak};
use crate::par;
use crate::polynomial::Polynomial;
use crate::verdict::identify;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseDistribution {
    #[default]
    Gaussian,
    /// Uniform on [μ − √3σ, μ + √3σ], which has standard deviation σ.
    Uniform,
}

/// Independent noise on each coefficient; means are the exact integer
/// coefficients of the polynomial, in canonical monomial order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigmas: Vec<f64>,
    pub distribution: NoiseDistribution,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(p: &Polynomial, sigmas: Vec<f64>, distribution: NoiseDistribution, seed: u64) -> Result<Self> {
        if sigmas.len() != p.monomials().len() {
            return Err(Error::Dimension { expected: p.monomials().len(), got: sigmas.len() });
        }
        if sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::Config("noise standard deviations must be finite and non-negative".into()));
        }
        Ok(NoiseModel { sigmas, distribution, seed })
    }

    /// The same σ on every coefficient.
    pub fn uniform_sigma(p: &Polynomial, sigma: f64, distribution: NoiseDistribution, seed: u64) -> Result<Self> {
        Self::new(p, vec![sigma; p.monomials().len()], distribution, seed)
    }
}

/// A polynomial with real coefficients drawn from a [`NoiseModel`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbedPolynomial {
    pub coefficients: Vec<f64>,
    pub exponents: Vec<Vec<u32>>,
}

impl PerturbedPolynomial {
    pub fn exact(p: &Polynomial) -> Self {
        PerturbedPolynomial {
            coefficients: p.float_coefficients(),
            exponents: p.monomials().iter().map(|m| m.exponents.clone()).collect(),
        }
    }

    pub fn value(&self, point: &[u64]) -> f64 {
        self.coefficients
            .iter()
            .zip(&self.exponents)
            .map(|(c, exps)| c * point.iter().zip(exps).map(|(&x, &e)| (x as f64).powi(e as i32)).product::<f64>())
            .sum()
    }

    /// D(n)² over a Fock basis, in flat-index order.
    pub fn squared_diagonal(&self, space: &FockSpace) -> Vec<f64> {
        space
            .basis()
            .map(|occ| {
                let point: Vec<u64> = occ.iter().map(|&n| n as u64).collect();
                self.value(&point).powi(2)
            })
            .collect()
    }

    /// First minimizer of D² in lexicographic order over Π [0, boundsᵢ].
    pub fn argmin_in_box(&self, bounds: &[u64]) -> Vec<u64> {
        let mut point = vec![0u64; bounds.len()];
        let mut best = point.clone();
        let mut best_value = f64::INFINITY;
        loop {
            let v = self.value(&point).powi(2);
            if v < best_value {
                best_value = v;
                best.clone_from(&point);
            }
            // odometer increment, last variable fastest
            let mut i = bounds.len();
            loop {
                if i == 0 {
                    return best;
                }
                i -= 1;
                if point[i] < bounds[i] {
                    point[i] += 1;
                    break;
                }
                point[i] = 0;
            }
        }
    }
}

pub fn sample_instance<R: Rng + ?Sized>(p: &Polynomial, noise: &NoiseModel, rng: &mut R) -> PerturbedPolynomial {
    let mut out = PerturbedPolynomial::exact(p);
    for (c, &sigma) in out.coefficients.iter_mut().zip(&noise.sigmas) {
        let z: f64 = match noise.distribution {
            NoiseDistribution::Gaussian => rng.sample(StandardNormal),
            NoiseDistribution::Uniform => 3f64.sqrt() * rng.gen_range(-1.0..=1.0),
        };
        *c += sigma * z;
    }
    out
}

/// Independent stream for one batch of one sample count.
pub fn batch_rng(seed: u64, n_index: usize, batch: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((n_index as u64) << 32) | batch as u64);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CltEngine {
    /// Exact minimization over the box.
    Oracle { bounds: Vec<u64> },
    /// Full adiabatic run per sample; the top outcome is the sample's output.
    Adiabatic {
        cutoffs: Vec<usize>,
        alphas: Vec<Complex64>,
        schedule: Schedule,
        #[serde(default)]
        options: EvolveOptions,
    },
}

impl CltEngine {
    fn upper_bounds(&self) -> Vec<u64> {
        match self {
            CltEngine::Oracle { bounds } => bounds.clone(),
            CltEngine::Adiabatic { cutoffs, .. } => cutoffs.iter().map(|&n| n as u64 - 1).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltRow {
    pub n: usize,
    /// Mean over batches of the batch-mean output.
    pub mean_output: Vec<f64>,
    /// Standard deviation of the batch means, per variable.
    pub spread: Vec<f64>,
    /// Euclidean norm of `spread`.
    pub spread_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShrinkageRatio {
    pub from_n: usize,
    pub to_n: usize,
    /// spread(from_n) / spread(to_n); absent when the larger-N spread is 0.
    pub ratio: Option<f64>,
    /// √(to_n / from_n), what the 1/√N law predicts.
    pub expected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleOutput {
    pub n: usize,
    pub batch: usize,
    pub sample: usize,
    pub output: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub engine: CltEngine,
    pub noise: NoiseModel,
    pub n_values: Vec<usize>,
    pub batches: usize,
    pub rows: Vec<CltRow>,
    pub shrinkage_ratios: Vec<ShrinkageRatio>,
    /// Samples whose output sits on an upper face of the box.
    pub boundary_hits: u64,
    /// Set when any boundary hit occurred; shrinkage is then not meaningful.
    pub flagged: bool,
    #[serde(skip)]
    pub samples: Vec<SampleOutput>,
}

impl CltReport {
    /// `n,batch,sample,x1,...` rows of every recorded sample.
    pub fn samples_csv(&self, variables: &[String]) -> String {
        let mut out = String::from("n,batch,sample");
        for v in variables {
            out.push(',');
            out.push_str(v);
        }
        out.push('\n');
        for s in &self.samples {
            out.push_str(&format!("{},{},{}", s.n, s.batch, s.sample));
            for x in &s.output {
                out.push_str(&format!(",{x}"));
            }
            out.push('\n');
        }
        out
    }
}

fn sample_output(p: &Polynomial, sample: &PerturbedPolynomial, engine: &CltEngine) -> Result<Vec<u64>> {
    match engine {
        CltEngine::Oracle { bounds } => Ok(sample.argmin_in_box(bounds)),
        CltEngine::Adiabatic { cutoffs, alphas, schedule, options } => {
            let space = FockSpace::new(cutoffs.clone())?;
            let inst = ProblemInstance::with_parts(p.clone(), space.clone(), alphas.clone(), SymmetryBreak::none(cutoffs.len()))?;
            let split = SplitHamiltonian { initial: build_hi(&inst)?, problem_diagonal: sample.squared_diagonal(&space) };
            let result = evolve_split(&split, &space, initial_state(&inst)?, schedule, options)?;
            Ok(identify(&result.final_state, 0.5).top_outcome.into_iter().map(|n| n as u64).collect())
        }
    }
}

fn spread(values: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let k = values.first().map_or(0, Vec::len);
    let m = values.len() as f64;
    let mean: Vec<f64> = (0..k).map(|c| values.iter().map(|v| v[c]).sum::<f64>() / m).collect();
    let sd: Vec<f64> = (0..k)
        .map(|c| {
            if values.len() < 2 {
                return 0.0;
            }
            let ss: f64 = values.iter().map(|v| (v[c] - mean[c]).powi(2)).sum();
            (ss / (m - 1.0)).sqrt()
        })
        .collect();
    (mean, sd)
}

/// For every N, draws `batches` independent batches of N perturbed instances,
/// records each sample's ground-state location and reports the spread of the
/// batch means.
pub fn run_clt(
    p: &Polynomial,
    noise: &NoiseModel,
    n_values: &[usize],
    batches: usize,
    engine: &CltEngine,
    keep_samples: bool,
) -> Result<CltReport> {
    if n_values.is_empty() || n_values.contains(&0) {
        return Err(Error::Config("sample counts must be positive".into()));
    }
    if batches < 2 {
        return Err(Error::Config("at least two batches are needed to measure a spread".into()));
    }
    if noise.sigmas.len() != p.monomials().len() {
        return Err(Error::Dimension { expected: p.monomials().len(), got: noise.sigmas.len() });
    }
    let upper = engine.upper_bounds();
    if upper.len() != p.num_vars() {
        return Err(Error::Dimension { expected: p.num_vars(), got: upper.len() });
    }

    let jobs: Vec<(usize, usize)> =
        (0..n_values.len()).flat_map(|ni| (0..batches).map(move |b| (ni, b))).collect();
    let outputs = par::map(jobs, |(ni, b)| -> Result<Vec<Vec<u64>>> {
        let mut rng = batch_rng(noise.seed, ni, b);
        (0..n_values[ni]).map(|_| sample_output(p, &sample_instance(p, noise, &mut rng), engine)).collect()
    });

    let mut rows = Vec::with_capacity(n_values.len());
    let mut samples = Vec::new();
    let mut boundary_hits = 0;
    let mut outputs = outputs.into_iter();
    for &n in n_values {
        let mut batch_means = Vec::with_capacity(batches);
        for b in 0..batches {
            let batch = outputs.next().expect("one result per job")?;
            let k = upper.len();
            let mut mean = vec![0.0; k];
            for (i, out) in batch.iter().enumerate() {
                if out.iter().zip(&upper).any(|(x, u)| x >= u) {
                    boundary_hits += 1;
                }
                for (m, &x) in mean.iter_mut().zip(out) {
                    *m += x as f64;
                }
                if keep_samples {
                    samples.push(SampleOutput { n, batch: b, sample: i, output: out.clone() });
                }
            }
            mean.iter_mut().for_each(|m| *m /= n as f64);
            batch_means.push(mean);
        }
        let (mean_output, sd) = spread(&batch_means);
        let spread_norm = sd.iter().map(|s| s * s).sum::<f64>().sqrt();
        rows.push(CltRow { n, mean_output, spread: sd, spread_norm });
    }
    let shrinkage_ratios = rows
        .windows(2)
        .map(|w| ShrinkageRatio {
            from_n: w[0].n,
            to_n: w[1].n,
            ratio: (w[1].spread_norm > 0.0).then(|| w[0].spread_norm / w[1].spread_norm),
            expected: (w[1].n as f64 / w[0].n as f64).sqrt(),
        })
        .collect();
    Ok(CltReport {
        engine: engine.clone(),
        noise: noise.clone(),
        n_values: n_values.to_vec(),
        batches,
        rows,
        shrinkage_ratios,
        boundary_hits,
        flagged: boundary_hits > 0,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(text: &str) -> Polynomial {
        Polynomial::parse(text).unwrap()
    }

    #[test]
    fn zero_noise_reproduces_polynomial() {
        let p = poly("x^2 - 2*y^2");
        let noise = NoiseModel::uniform_sigma(&p, 0.0, NoiseDistribution::Gaussian, 1).unwrap();
        let s = sample_instance(&p, &noise, &mut batch_rng(1, 0, 0));
        assert_eq!(s, PerturbedPolynomial::exact(&p));
        assert_eq!(s.coefficients, vec![1.0, -2.0]);
        assert_eq!(s.value(&[3, 2]), 1.0);
    }

    #[test]
    fn perturbed_linear_minimizer_is_nearest_integer() {
        let p = poly("x - 3");
        let noise = NoiseModel::new(&p, vec![0.0, 0.2], NoiseDistribution::Gaussian, 11).unwrap();
        let mut rng = batch_rng(11, 0, 0);
        for _ in 0..200 {
            let s = sample_instance(&p, &noise, &mut rng);
            assert_eq!(s.coefficients[0], 1.0);
            let m = -s.coefficients[1];
            assert_eq!(s.argmin_in_box(&[15]), vec![m.round() as u64]);
        }
    }

    #[test]
    fn uniform_noise_has_requested_spread() {
        let p = poly("x - 3");
        let noise = NoiseModel::new(&p, vec![0.0, 0.5], NoiseDistribution::Uniform, 5).unwrap();
        let mut rng = batch_rng(5, 0, 0);
        let draws: Vec<f64> = (0..20000).map(|_| sample_instance(&p, &noise, &mut rng).coefficients[1]).collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        assert!((mean + 3.0).abs() < 0.02);
        assert!((var.sqrt() - 0.5).abs() < 0.02);
        assert!(draws.iter().all(|d| (d + 3.0).abs() <= 0.5 * 3f64.sqrt() + 1e-12));
    }

    #[test]
    fn zero_noise_gives_zero_spread() {
        let p = poly("x - 3");
        let noise = NoiseModel::uniform_sigma(&p, 0.0, NoiseDistribution::Gaussian, 3).unwrap();
        let engine = CltEngine::Oracle { bounds: vec![15] };
        let r = run_clt(&p, &noise, &[10, 40], 5, &engine, false).unwrap();
        for row in &r.rows {
            assert_eq!(row.mean_output, vec![3.0]);
            assert_eq!(row.spread_norm, 0.0);
        }
        assert_eq!(r.shrinkage_ratios[0].ratio, None);
        assert!(!r.flagged);
    }

    #[test]
    fn huge_noise_trips_boundary_flag() {
        let p = poly("x - 3");
        let noise = NoiseModel::new(&p, vec![0.0, 50.0], NoiseDistribution::Gaussian, 3).unwrap();
        let r = run_clt(&p, &noise, &[20], 4, &CltEngine::Oracle { bounds: vec![15] }, false).unwrap();
        assert!(r.flagged);
        assert!(r.boundary_hits > 0);
    }

    #[test]
    fn seeded_runs_are_identical() {
        let p = poly("x - 3");
        let noise = NoiseModel::new(&p, vec![0.0, 0.3], NoiseDistribution::Gaussian, 99).unwrap();
        let engine = CltEngine::Oracle { bounds: vec![15] };
        let a = run_clt(&p, &noise, &[25, 100], 8, &engine, true).unwrap();
        let b = run_clt(&p, &noise, &[25, 100], 8, &engine, true).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.samples.len(), 8 * 125);
        let csv = a.samples_csv(&["x".into()]);
        assert!(csv.starts_with("n,batch,sample,x\n25,0,0,"));
    }

    #[test]
    fn argmin_scans_whole_box() {
        let p = PerturbedPolynomial::exact(&poly("x*y - 6"));
        assert_eq!(p.argmin_in_box(&[4, 4]), vec![2, 3]);
        assert_eq!(p.argmin_in_box(&[1, 1]), vec![1, 1]);
    }

    #[test]
    fn rejects_bad_settings() {
        let p = poly("x - 3");
        let noise = NoiseModel::uniform_sigma(&p, 0.1, NoiseDistribution::Gaussian, 0).unwrap();
        let engine = CltEngine::Oracle { bounds: vec![15] };
        assert!(run_clt(&p, &noise, &[], 4, &engine, false).is_err());
        assert!(run_clt(&p, &noise, &[10], 1, &engine, false).is_err());
        assert!(run_clt(&p, &noise, &[10], 4, &CltEngine::Oracle { bounds: vec![3, 3] }, false).is_err());
        assert!(NoiseModel::new(&p, vec![0.1], NoiseDistribution::Gaussian, 0).is_err());
        assert!(NoiseModel::new(&p, vec![0.1, f64::NAN], NoiseDistribution::Gaussian, 0).is_err());
    }
}
