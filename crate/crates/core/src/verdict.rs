//! Reading a solvability verdict off the final state.
//!
//! The most probable basis outcome is identified when its probability
//! strictly exceeds the threshold. An identified outcome is substituted back
//! into D: a zero makes it a witness, anything else means the global minimum
//! of D² is positive and no solution is probable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fockspace::QuantumState;
use crate::hamiltonian::ProblemInstance;
use crate::oracle::{self, BoxSearchResult};

pub const DEFAULT_THRESHOLD: f64 = 0.5;
/// Probabilities this close to the maximum count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Identification {
    pub top_outcome: Vec<usize>,
    pub top_probability: f64,
    pub identified: bool,
    pub tied: bool,
}

pub fn identify(state: &QuantumState, threshold: f64) -> Identification {
    let probs = state.probabilities();
    let (idx, top) = probs
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bp), (i, &p)| if p > bp { (i, p) } else { (bi, bp) });
    let tied = probs.iter().enumerate().any(|(i, &p)| i != idx && (top - p).abs() <= TIE_TOLERANCE);
    Identification {
        top_outcome: state.space().occupations(idx),
        top_probability: top,
        identified: !tied && top > threshold,
        tied,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum VerdictStatus {
    Solution { witness: Vec<usize> },
    NoSolutionProbable { confidence: f64 },
    Inconclusive { top_probability: f64, advice: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    #[serde(flatten)]
    pub status: VerdictStatus,
    pub top_outcome: Vec<usize>,
    pub top_probability: f64,
    pub threshold: f64,
}

impl Verdict {
    pub fn is_solution(&self) -> bool {
        matches!(self.status, VerdictStatus::Solution { .. })
    }
}

/// Confidence is the measured top probability, kept strictly below one.
fn confidence(p: f64) -> f64 {
    p.min(1.0 - f64::EPSILON)
}

pub fn decide(inst: &ProblemInstance, ident: &Identification, threshold: f64) -> Result<Verdict> {
    let status = if !ident.identified {
        VerdictStatus::Inconclusive {
            top_probability: ident.top_probability,
            advice: "increase the run time T".into(),
        }
    } else if inst.polynomial.evaluate_occupations(&ident.top_outcome)?.eq(&0.into()) {
        VerdictStatus::Solution { witness: ident.top_outcome.clone() }
    } else {
        VerdictStatus::NoSolutionProbable { confidence: confidence(ident.top_probability) }
    };
    Ok(Verdict {
        status,
        top_outcome: ident.top_outcome.clone(),
        top_probability: ident.top_probability,
        threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Agreement {
    Agree,
    Mismatch,
    /// Inconclusive verdicts are not compared.
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub oracle: BoxSearchResult,
    pub agreement: Agreement,
    /// Whether the verdict's top outcome is among the oracle minimizers.
    pub outcome_is_minimizer: bool,
}

/// Compares a verdict against exhaustive search over `bounds`, which must
/// lie within the truncation box.
pub fn cross_check(inst: &ProblemInstance, verdict: &Verdict, bounds: &[u64]) -> Result<CrossCheck> {
    let full = oracle::box_for(&inst.space);
    if bounds.len() != full.len() || bounds.iter().zip(&full).any(|(b, f)| b > f) {
        return Err(Error::precondition("verdict", format!("box {bounds:?} exceeds the truncation box {full:?}")));
    }
    let search = oracle::search_box(&inst.polynomial, bounds, oracle::DEFAULT_BUDGET)?;
    let outcome: Vec<u64> = verdict.top_outcome.iter().map(|&n| n as u64).collect();
    let outcome_is_minimizer = search.minimizers.contains(&outcome);
    let agreement = match &verdict.status {
        VerdictStatus::Solution { .. } if search.has_solution() => Agreement::Agree,
        VerdictStatus::NoSolutionProbable { .. } if !search.has_solution() => Agreement::Agree,
        VerdictStatus::Inconclusive { .. } => Agreement::NotApplicable,
        _ => Agreement::Mismatch,
    };
    Ok(CrossCheck { oracle: search, agreement, outcome_is_minimizer })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::FockSpace;
    use crate::polynomial::Polynomial;
    use num_complex::Complex64;

    fn state_with(space: &FockSpace, entries: &[(usize, f64)]) -> QuantumState {
        let mut amps = vec![Complex64::new(0.0, 0.0); space.dim()];
        for &(i, a) in entries {
            amps[i] = Complex64::new(a, 0.0);
        }
        QuantumState::new(space, amps).unwrap()
    }

    fn inst(text: &str, cutoff: usize) -> ProblemInstance {
        ProblemInstance::new(Polynomial::parse(text).unwrap(), FockSpace::uniform(1, cutoff).unwrap()).unwrap()
    }

    #[test]
    fn concentrated_state_is_identified() {
        let s = FockSpace::uniform(1, 16).unwrap();
        let rest = (1.0f64 - 0.81).sqrt();
        let st = state_with(&s, &[(3, 0.9), (5, rest)]);
        let id = identify(&st, 0.5);
        assert!(id.identified);
        assert_eq!(id.top_outcome, vec![3]);
        assert!((id.top_probability - 0.81).abs() < 1e-12);
    }

    #[test]
    fn uniform_state_is_not_identified() {
        let s = FockSpace::uniform(2, 4).unwrap();
        let amps = vec![Complex64::new(0.25, 0.0); 16];
        let id = identify(&QuantumState::new(&s, amps).unwrap(), 0.5);
        assert!(!id.identified);
        assert!(id.tied);
        assert_eq!(id.top_outcome, vec![0, 0]);
        assert!((id.top_probability - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn threshold_is_strict() {
        let s = FockSpace::uniform(1, 4).unwrap();
        let amps = vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(0.5, 0.5),
            Complex64::new(0.5, 0.0),
            Complex64::new(0.0, 0.5),
        ];
        let id = identify(&QuantumState::new(&s, amps).unwrap(), 0.5);
        assert_eq!(id.top_probability, 0.5);
        assert!(!id.identified);
        let v = decide(&inst("x - 1", 4), &id, 0.5).unwrap();
        assert!(matches!(v.status, VerdictStatus::Inconclusive { .. }));
    }

    #[test]
    fn decide_by_substitution() {
        let solved = Identification { top_outcome: vec![3], top_probability: 0.7, identified: true, tied: false };
        let v = decide(&inst("x - 3", 16), &solved, 0.5).unwrap();
        assert_eq!(v.status, VerdictStatus::Solution { witness: vec![3] });

        let unsolved = Identification { top_outcome: vec![1], top_probability: 0.8, identified: true, tied: false };
        let v = decide(&inst("x^2 - 2", 16), &unsolved, 0.5).unwrap();
        assert_eq!(v.status, VerdictStatus::NoSolutionProbable { confidence: 0.8 });

        let sure = Identification { top_outcome: vec![1], top_probability: 1.0, identified: true, tied: false };
        match decide(&inst("x^2 - 2", 16), &sure, 0.5).unwrap().status {
            VerdictStatus::NoSolutionProbable { confidence } => assert!(confidence < 1.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cross_check_agreement() {
        let p = inst("x - 3", 16);
        let id = Identification { top_outcome: vec![3], top_probability: 0.9, identified: true, tied: false };
        let v = decide(&p, &id, 0.5).unwrap();
        let cc = cross_check(&p, &v, &[15]).unwrap();
        assert_eq!(cc.agreement, Agreement::Agree);
        assert!(cc.outcome_is_minimizer);

        let q = inst("x^2 - 2", 16);
        let id = Identification { top_outcome: vec![1], top_probability: 0.9, identified: true, tied: false };
        let v = decide(&q, &id, 0.5).unwrap();
        let cc = cross_check(&q, &v, &[15]).unwrap();
        assert_eq!(cc.agreement, Agreement::Agree);
        assert_eq!(cc.oracle.min_value, 1.into());

        // a wrong "no solution" verdict is flagged
        let id = Identification { top_outcome: vec![5], top_probability: 0.9, identified: true, tied: false };
        let v = decide(&p, &id, 0.5).unwrap();
        assert_eq!(cross_check(&p, &v, &[15]).unwrap().agreement, Agreement::Mismatch);
        assert!(cross_check(&p, &v, &[16]).is_err());
    }

    #[test]
    fn verdict_json_layout() {
        let p = inst("x - 3", 16);
        let id = Identification { top_outcome: vec![3], top_probability: 0.75, identified: true, tied: false };
        let json = serde_json::to_string(&decide(&p, &id, 0.5).unwrap()).unwrap();
        assert_eq!(json, r#"{"status":"solution","witness":[3],"top_outcome":[3],"top_probability":0.75,"threshold":0.5}"#);
    }
}
