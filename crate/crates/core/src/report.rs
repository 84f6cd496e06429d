//! Named residual checks aggregated over samples.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::point::SamplePoint;
use crate::tensor::Tensor;

/// One named check after aggregation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    /// Max over samples; `NaN` never passes.
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
    pub worst_sample: Option<SamplePoint>,
    /// Left- and right-hand component values where the residual peaked.
    pub worst_lhs: Option<f64>,
    pub worst_rhs: Option<f64>,
    pub samples: usize,
}

/// Per-sample observation of a check.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub name: String,
    pub residual: f64,
    pub lhs: f64,
    pub rhs: f64,
}

impl Observation {
    pub fn scalar(name: impl Into<String>, residual: f64) -> Self {
        Self { name: name.into(), residual, lhs: residual, rhs: 0.0 }
    }

    /// `max|lhs - rhs| / max(1, max|lhs|, max|rhs|)` with the values at the worst component.
    pub fn compare(name: impl Into<String>, lhs: &Tensor, rhs: &Tensor) -> Self {
        let scale = lhs.max_abs().max(rhs.max_abs()).max(1.0);
        let mut worst = (0.0f64, 0.0, 0.0);
        for (a, b) in lhs.data().iter().zip(rhs.data()) {
            let d = (a - b).abs();
            if !(d <= worst.0) {
                worst = (d, *a, *b);
            }
        }
        Self { name: name.into(), residual: worst.0 / scale, lhs: worst.1, rhs: worst.2 }
    }

    /// A tensor that should vanish.
    pub fn vanishing(name: impl Into<String>, t: &Tensor) -> Self {
        Self::compare(name, t, &Tensor::zeros(t.shape()))
    }
}

#[derive(Debug, Clone)]
struct Accumulator {
    name: String,
    tol: f64,
    max: f64,
    worst: Option<(SamplePoint, f64, f64)>,
    samples: usize,
}

impl Accumulator {
    fn observe(&mut self, s: &SamplePoint, o: &Observation) {
        self.samples += 1;
        if self.worst.is_none() || !(o.residual <= self.max) {
            if !self.max.is_nan() {
                self.max = o.residual;
                self.worst = Some((s.clone(), o.lhs, o.rhs));
            }
        }
    }

    fn finish(self) -> CheckResult {
        let (worst_sample, worst_lhs, worst_rhs) = match self.worst {
            Some((s, l, r)) => (Some(s), Some(l), Some(r)),
            None => (None, None, None),
        };
        CheckResult {
            pass: self.max < self.tol,
            name: self.name,
            residual: self.max,
            tol: self.tol,
            worst_sample,
            worst_lhs,
            worst_rhs,
            samples: self.samples,
        }
    }
}

/// Named checks, fitted scalars and free-form notes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
    pub scalars: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failing(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn push(&mut self, c: CheckResult) {
        self.checks.push(c);
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
        self.scalars.extend(other.scalars);
        self.notes.extend(other.notes);
    }

    pub fn single(name: impl Into<String>, residual: f64, tol: f64, worst: Option<SamplePoint>) -> CheckResult {
        CheckResult {
            name: name.into(),
            residual,
            tol,
            pass: residual < tol,
            worst_sample: worst,
            worst_lhs: None,
            worst_rhs: None,
            samples: 1,
        }
    }
}

/// Runs `per_sample` on every sample in parallel and folds the observations
/// in sample order, so the result does not depend on scheduling. Checks
/// appear in order of first observation.
pub fn aggregate<F>(samples: &[SamplePoint], tol: f64, per_sample: F) -> Result<VerificationReport>
where
    F: Fn(&SamplePoint) -> Result<Vec<Observation>> + Sync,
{
    let per: Vec<Vec<Observation>> = samples.par_iter().map(&per_sample).collect::<Result<_>>()?;
    let mut order: Vec<String> = Vec::new();
    let mut acc: BTreeMap<String, Accumulator> = BTreeMap::new();
    for (s, obs) in samples.iter().zip(&per) {
        for o in obs {
            let a = acc.entry(o.name.clone()).or_insert_with(|| {
                order.push(o.name.clone());
                Accumulator { name: o.name.clone(), tol, max: 0.0, worst: None, samples: 0 }
            });
            a.observe(s, o);
        }
    }
    let checks = order.into_iter().map(|n| acc.remove(&n).expect("registered").finish()).collect();
    Ok(VerificationReport { checks, ..Default::default() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_aggregation_keeps_worst_sample() {
        let samples: Vec<SamplePoint> =
            (0..5).map(|i| SamplePoint::new([i as f64], [1.0])).collect();
        let r = aggregate(&samples, 0.5, |s| Ok(vec![Observation::scalar("c", s.x[0] * 0.1)])).unwrap();
        let c = &r.checks[0];
        assert!((c.residual - 0.4).abs() < 1e-15);
        assert_eq!(c.worst_sample.as_ref().unwrap().x, vec![4.0]);
        assert!(c.pass);
    }

    #[test]
    fn nan_fails() {
        let samples = vec![SamplePoint::new([0.0], [1.0]), SamplePoint::new([1.0], [1.0])];
        let r = aggregate(&samples, 1.0, |s| Ok(vec![Observation::scalar("c", if s.x[0] == 0.0 { f64::NAN } else { 0.0 })]))
            .unwrap();
        assert!(!r.checks[0].pass);
        assert!(r.checks[0].residual.is_nan());
    }
}
