//! Exhaustive search of D² over a bounded box of non-negative integers.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fockspace::FockSpace;
use crate::hamiltonian::exact_squares;
use crate::par;
use crate::polynomial::{bigint_json, Polynomial};

pub const DEFAULT_BUDGET: u128 = 100_000_000;
pub const MINIMIZER_CAP: usize = 64;
const CHUNK: u128 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSearchResult {
    /// Inclusive upper bound per variable; lower bounds are 0.
    #[serde(rename = "box")]
    pub bounds: Vec<u64>,
    #[serde(with = "bigint_json")]
    pub min_value: BigInt,
    /// Minimizers in lexicographic order, at most [`MINIMIZER_CAP`].
    pub minimizers: Vec<Vec<u64>>,
    /// Minimizers found beyond the cap.
    pub overflow: u64,
}

impl BoxSearchResult {
    pub fn has_solution(&self) -> bool {
        self.min_value.is_zero()
    }

    pub fn minimizer_count(&self) -> u64 {
        self.minimizers.len() as u64 + self.overflow
    }
}

/// The box matching a Fock truncation: bounds = cutoffs − 1.
pub fn box_for(space: &FockSpace) -> Vec<u64> {
    space.cutoffs().iter().map(|&n| n as u64 - 1).collect()
}

/// Evaluator over i128 that reports overflow instead of wrapping.
struct SmallEvaluator {
    terms: Vec<(i128, Vec<u32>)>,
}

impl SmallEvaluator {
    fn new(p: &Polynomial) -> Option<Self> {
        let terms = p
            .monomials()
            .iter()
            .map(|m| m.coefficient.to_i128().map(|c| (c, m.exponents.clone())))
            .collect::<Option<Vec<_>>>()?;
        Some(SmallEvaluator { terms })
    }

    fn eval(&self, point: &[u64]) -> Option<i128> {
        let mut total: i128 = 0;
        for (c, exps) in &self.terms {
            let mut term = *c;
            for (&x, &e) in point.iter().zip(exps) {
                term = term.checked_mul((x as i128).checked_pow(e)?)?;
            }
            total = total.checked_add(term)?;
        }
        Some(total)
    }
}

struct ChunkResult {
    min_abs: Option<BigInt>,
    minimizers: Vec<Vec<u64>>,
    overflow: u64,
}

fn decode(index: u128, bounds: &[u64], point: &mut [u64]) {
    let mut rest = index;
    for (slot, &b) in point.iter_mut().zip(bounds).rev() {
        let base = b as u128 + 1;
        *slot = (rest % base) as u64;
        rest /= base;
    }
}

fn scan(p: &Polynomial, small: Option<&SmallEvaluator>, bounds: &[u64], range: std::ops::Range<u128>) -> Result<ChunkResult> {
    let mut point = vec![0u64; bounds.len()];
    let mut best: Option<BigInt> = None;
    let mut minimizers = Vec::new();
    let mut overflow = 0;
    for index in range {
        decode(index, bounds, &mut point);
        let value = match small.and_then(|s| s.eval(&point)) {
            Some(v) => BigInt::from(v.unsigned_abs()),
            None => p.evaluate(&point)?.abs(),
        };
        match best.as_ref().map(|b| value.cmp(b)) {
            Some(std::cmp::Ordering::Greater) => {}
            Some(std::cmp::Ordering::Equal) => {
                if minimizers.len() < MINIMIZER_CAP {
                    minimizers.push(point.clone());
                } else {
                    overflow += 1;
                }
            }
            _ => {
                best = Some(value);
                minimizers.clear();
                minimizers.push(point.clone());
                overflow = 0;
            }
        }
    }
    Ok(ChunkResult { min_abs: best, minimizers, overflow })
}

/// Minimum of D² and its minimizers over Π [0, boundsᵢ].
pub fn search_box(p: &Polynomial, bounds: &[u64], budget: u128) -> Result<BoxSearchResult> {
    if bounds.len() != p.num_vars() {
        return Err(Error::Dimension { expected: p.num_vars(), got: bounds.len() });
    }
    let mut total: u128 = 1;
    for &b in bounds {
        total = total.checked_mul(b as u128 + 1).unwrap_or(u128::MAX);
    }
    if total > budget {
        return Err(Error::Budget { what: "enumeration box", size: total, budget });
    }
    let small = SmallEvaluator::new(p);
    let ranges: Vec<std::ops::Range<u128>> =
        (0..total.div_ceil(CHUNK)).map(|c| c * CHUNK..((c + 1) * CHUNK).min(total)).collect();
    let chunks = par::map(ranges, |r| scan(p, small.as_ref(), bounds, r));

    let mut best: Option<BigInt> = None;
    let mut minimizers: Vec<Vec<u64>> = Vec::new();
    let mut overflow = 0;
    for chunk in chunks {
        let chunk = chunk?;
        let Some(value) = chunk.min_abs else { continue };
        match best.as_ref().map(|b| value.cmp(b)) {
            Some(std::cmp::Ordering::Greater) => continue,
            Some(std::cmp::Ordering::Less) | None => {
                best = Some(value);
                minimizers.clear();
                overflow = 0;
            }
            Some(std::cmp::Ordering::Equal) => {}
        }
        for m in chunk.minimizers {
            if minimizers.len() < MINIMIZER_CAP {
                minimizers.push(m);
            } else {
                overflow += 1;
            }
        }
        overflow += chunk.overflow;
    }
    let min_abs = best.expect("box has at least one point");
    Ok(BoxSearchResult { bounds: bounds.to_vec(), min_value: &min_abs * &min_abs, minimizers, overflow })
}

/// Checks that the ε = 0 diagonal of H_P has the same minimum and argmin
/// set as the oracle. `bounds` must equal the truncation box.
pub fn agrees_with_hp_diagonal(p: &Polynomial, space: &FockSpace, bounds: &[u64]) -> Result<bool> {
    if bounds != box_for(space).as_slice() {
        return Err(Error::precondition(
            "oracle",
            format!("box {bounds:?} does not match the truncation box {:?}", box_for(space)),
        ));
    }
    let search = search_box(p, bounds, DEFAULT_BUDGET)?;
    let squares = exact_squares(p, space)?;
    let min = squares.iter().min().expect("non-empty space");
    let argmin: Vec<Vec<u64>> = squares
        .iter()
        .enumerate()
        .filter(|(_, v)| *v == min)
        .map(|(i, _)| space.occupations(i).into_iter().map(|n| n as u64).collect())
        .collect();
    let sets_match = argmin.len() as u64 == search.minimizer_count()
        && argmin.iter().zip(&search.minimizers).all(|(a, b)| a == b);
    Ok(*min == search.min_value && sets_match)
}
