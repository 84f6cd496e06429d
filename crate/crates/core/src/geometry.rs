//! Metric-level objects at a sample: `g`, the Cartan tensor, the angular
//! metric and their contractions.

use serde::{Deserialize, Serialize};

use crate::dsl::ModelSpec;
use crate::error::Result;
use crate::jets::ScalarField;
use crate::local::LocalGeometry;
use crate::point::SamplePoint;
use crate::report::{aggregate, Observation, VerificationReport};
use crate::tensor::{indices, Tensor};

/// Absolute threshold for a vanishing tensor after normalizing `y` to unit length.
pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricData {
    pub l2: f64,
    /// `g_ij = 1/2 d^2 L^2 / dy^i dy^j`.
    pub g: Tensor,
    pub g_inv: Tensor,
    /// Energy `E = L^2 / 2`.
    pub energy: f64,
    /// `l_i = g_ij y^j / L`.
    pub ell: Vec<f64>,
    /// Angular metric `g_ij - l_i l_j`.
    pub hbar: Tensor,
    /// `C_ijk = 1/4 d^3 L^2`, indices down.
    pub c3: Tensor,
    /// `C_k = g^{ij} C_ijk`.
    pub c1: Vec<f64>,
    /// `C^i = g^{ik} C_k`.
    pub cvec: Vec<f64>,
    /// `C_k C^k`.
    pub c2norm: f64,
}

impl MetricData {
    pub fn from_local(lg: &LocalGeometry) -> Self {
        let n = lg.dim();
        let y = &lg.point.y;
        let l2 = lg.l2.value();
        let l = l2.sqrt();
        let g = lg.g.values();
        let g_inv = lg.ginv.values();
        let c3 = lg.cartan.values();
        let ell: Vec<f64> = (0..n).map(|i| (0..n).map(|j| g[[i, j]] * y[j]).sum::<f64>() / l).collect();
        let hbar = Tensor::from_fn(&[n, n], |i| g[[i[0], i[1]]] - ell[i[0]] * ell[i[1]]);
        let c1: Vec<f64> =
            (0..n).map(|k| (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| g_inv[[i, j]] * c3[[i, j, k]]).sum()).collect();
        let cvec: Vec<f64> = (0..n).map(|i| (0..n).map(|k| g_inv[[i, k]] * c1[k]).sum()).collect();
        let c2norm = c1.iter().zip(&cvec).map(|(a, b)| a * b).sum();
        Self { l2, g, g_inv, energy: 0.5 * l2, ell, hbar, c3, c1, cvec, c2norm }
    }
}

/// Metric data at one sample.
pub fn metric_at(model: &ModelSpec, s: &SamplePoint) -> Result<MetricData> {
    let lg = LocalGeometry::new(model, s, LocalGeometry::MIN_BUDGET)?;
    Ok(MetricData::from_local(&lg))
}

/// Relative homogeneity defects of `L^2`, `g` and `C_ijk` under `y -> lambda y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityResiduals {
    pub l2: f64,
    pub g: f64,
    pub c3: f64,
}

impl HomogeneityResiduals {
    pub fn max(&self) -> f64 {
        self.l2.max(self.g).max(self.c3)
    }
}

pub fn homogeneity_audit(model: &ModelSpec, s: &SamplePoint, lambda: f64) -> Result<HomogeneityResiduals> {
    assert!(lambda > 0.0, "lambda must be positive");
    let a = metric_at(model, s)?;
    let b = metric_at(model, &s.scaled(lambda))?;
    let l2_ref = lambda * lambda * a.l2;
    let g_scale = a.g.max_abs();
    let ynorm = s.y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let c_ref = a.c3.scale(1.0 / lambda);
    let c_scale = c_ref.max_abs().max(1e-12 * g_scale / (lambda * ynorm));
    Ok(HomogeneityResiduals {
        l2: (model.eval(&s.x, &s.scaled(lambda).y)? - l2_ref).abs() / l2_ref,
        g: b.g.max_abs_diff(&a.g) / g_scale,
        c3: b.c3.max_abs_diff(&c_ref) / c_scale,
    })
}

/// Sample with `y` rescaled to unit `L`.
pub fn normalized(model: &ModelSpec, s: &SamplePoint) -> Result<SamplePoint> {
    let l = model.eval(&s.x, &s.y)?.sqrt();
    Ok(s.scaled(1.0 / l))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiemannianTest {
    pub is_riemannian: bool,
    pub max_c3: f64,
    pub max_c1: f64,
    /// `max|C3| < tol` and `max|C1| < tol` agree.
    pub deicke_consistent: bool,
}

/// Vanishing of the Cartan tensor, and of its trace, over the samples.
pub fn riemannian_test(model: &ModelSpec, samples: &[SamplePoint], tol: f64) -> Result<RiemannianTest> {
    assert!(!samples.is_empty(), "riemannian_test needs at least one sample");
    let mut max_c3 = 0.0f64;
    let mut max_c1 = 0.0f64;
    for s in samples {
        let m = metric_at(model, &normalized(model, s)?)?;
        max_c3 = max_c3.max(m.c3.max_abs());
        max_c1 = max_c1.max(m.c1.iter().fold(0.0f64, |a, v| a.max(v.abs())));
    }
    let is_riemannian = max_c3 < tol;
    Ok(RiemannianTest { is_riemannian, max_c3, max_c1, deicke_consistent: is_riemannian == (max_c1 < tol) })
}

/// Pointwise invariants of the metric data and 2-homogeneity of `L^2`
/// as named checks.
pub fn metric_suite(model: &ModelSpec, samples: &[SamplePoint], tol: f64) -> Result<VerificationReport> {
    aggregate(samples, tol, |s| {
        let m = metric_at(model, s)?;
        let n = s.dim();
        let y = &s.y;
        let gyy: f64 = indices(&[n, n]).map(|i| m.g[[i[0], i[1]]] * y[i[0]] * y[i[1]]).sum();
        let ly: f64 = m.ell.iter().zip(y).map(|(a, b)| a * b).sum();
        let hy = Tensor::from_fn(&[n], |i| (0..n).map(|j| m.hbar[[i[0], j]] * y[j]).sum());
        let cy = Tensor::from_fn(&[n, n], |i| (0..n).map(|k| m.c3[[i[0], i[1], k]] * y[k]).sum());
        let sym = Tensor::from_fn(&[n, n], |i| m.g[[i[0], i[1]]] - m.g[[i[1], i[0]]]);
        let scale = m.l2.max(1.0);
        Ok(vec![
            Observation::scalar("metric: g(eta, eta) = L^2", (gyy - m.l2).abs() / scale),
            Observation::scalar("metric: l(eta) = L", (ly - m.l2.sqrt()).abs() / m.l2.sqrt().max(1.0)),
            Observation::vanishing("metric: g symmetric", &sym),
            Observation::vanishing("metric: hbar(eta, .) = 0", &hy),
            Observation::vanishing("metric: C(eta, ., .) = 0", &cy),
            Observation::scalar("metric: 2-homogeneity of L^2 (lambda = 2)", homogeneity_audit(model, s, 2.0)?.max()),
        ])
    })
}
