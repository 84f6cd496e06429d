//! Numeric predicates for special Finsler spaces and audits of the
//! implications a concurrent field forces between them.
//!
//! Each class is the residual of its defining tensor identity after a
//! per-sample least-squares fit of its free scalars or covectors. Samples
//! are rescaled to unit `L` first, so verdicts do not depend on the length
//! of `y`.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::concurrent::verify_concurrent;
use crate::connections::{
    connection_jets, contract_eta, covariant_derivative, lower_first, ConnectionKind, Direction, PiField, Slot,
};
use crate::curvature::{curvature_jets, deviation_from};
use crate::dsl::ModelSpec;
use crate::error::Result;
use crate::geometry::{normalized, MetricData};
use crate::jets::Budget;
use crate::local::LocalGeometry;
use crate::point::SamplePoint;
use crate::report::{CheckResult, VerificationReport};
use crate::tensor::{indices, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpecialClass {
    Riemannian,
    LocallyMinkowskian,
    Berwald,
    Landsberg,
    GeneralLandsberg,
    ChRecurrent,
    CvRecurrent,
    C0Recurrent,
    QuasiCReducible,
    SemiCReducible,
    CReducible,
    C2Like,
    TCondition,
    T0Condition,
    S3Like,
    P2Like,
    PReducible,
    HIsotropic,
    ScalarCurvature,
}

impl SpecialClass {
    pub const ALL: [SpecialClass; 19] = [
        SpecialClass::Riemannian,
        SpecialClass::LocallyMinkowskian,
        SpecialClass::Berwald,
        SpecialClass::Landsberg,
        SpecialClass::GeneralLandsberg,
        SpecialClass::ChRecurrent,
        SpecialClass::CvRecurrent,
        SpecialClass::C0Recurrent,
        SpecialClass::QuasiCReducible,
        SpecialClass::SemiCReducible,
        SpecialClass::CReducible,
        SpecialClass::C2Like,
        SpecialClass::TCondition,
        SpecialClass::T0Condition,
        SpecialClass::S3Like,
        SpecialClass::P2Like,
        SpecialClass::PReducible,
        SpecialClass::HIsotropic,
        SpecialClass::ScalarCurvature,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SpecialClass::Riemannian => "riemannian",
            SpecialClass::LocallyMinkowskian => "locally-minkowskian",
            SpecialClass::Berwald => "berwald",
            SpecialClass::Landsberg => "landsberg",
            SpecialClass::GeneralLandsberg => "general-landsberg",
            SpecialClass::ChRecurrent => "ch-recurrent",
            SpecialClass::CvRecurrent => "cv-recurrent",
            SpecialClass::C0Recurrent => "c0-recurrent",
            SpecialClass::QuasiCReducible => "quasi-c-reducible",
            SpecialClass::SemiCReducible => "semi-c-reducible",
            SpecialClass::CReducible => "c-reducible",
            SpecialClass::C2Like => "c2-like",
            SpecialClass::TCondition => "t-condition",
            SpecialClass::T0Condition => "t0-condition",
            SpecialClass::S3Like => "s3-like",
            SpecialClass::P2Like => "p2-like",
            SpecialClass::PReducible => "p-reducible",
            SpecialClass::HIsotropic => "h-isotropic",
            SpecialClass::ScalarCurvature => "scalar-curvature",
        }
    }

    /// Smallest dimension for which the class is defined.
    pub fn min_dim(self) -> usize {
        match self {
            SpecialClass::C2Like => 2,
            SpecialClass::QuasiCReducible
            | SpecialClass::SemiCReducible
            | SpecialClass::CReducible
            | SpecialClass::P2Like
            | SpecialClass::PReducible
            | SpecialClass::HIsotropic
            | SpecialClass::ScalarCurvature => 3,
            SpecialClass::S3Like => 4,
            _ => 1,
        }
    }
}

impl fmt::Display for SpecialClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassResult {
    pub class: SpecialClass,
    pub verdict: Verdict,
    /// Max over samples of the defect after fitting.
    pub residual: f64,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarSummary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub classes: Vec<ClassResult>,
    /// Fitted scalars per sample, summarized (`k0`, `k`, `mu`, `tau`, ...).
    pub fits: BTreeMap<String, ScalarSummary>,
    pub samples: usize,
    pub tol: f64,
}

impl ClassificationReport {
    pub fn get(&self, class: SpecialClass) -> &ClassResult {
        self.classes.iter().find(|c| c.class == class).expect("every class is evaluated")
    }

    pub fn verdict(&self, class: SpecialClass) -> Verdict {
        self.get(class).verdict
    }

    pub fn holds(&self, class: SpecialClass) -> bool {
        self.verdict(class) == Verdict::Holds
    }
}

/// Condition number above which a fit is not trusted.
pub const MAX_FIT_CONDITION: f64 = 1e6;

/// Relative singular-value cutoff for the least-squares fits.
const RANK_CUTOFF: f64 = 1e-10;

/// Least squares `min |A x - b|` by column-pivoted QR; returns
/// `(x, condition estimate)`.
///
/// Columns whose pivot falls below `RANK_CUTOFF` of the first are dropped
/// (basic solution, coefficient 0) and the estimate is then infinite.
/// nalgebra's SVD is not used here: on tall, nearly rank-deficient
/// matrices it returns inaccurate singular vectors.
fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, f64) {
    let cols = a.ncols();
    let qr = a.clone().col_piv_qr();
    let r = qr.r();
    let qtb = qr.q().transpose() * b;
    let d0 = r[(0, 0)].abs();
    let rank = (0..cols.min(r.nrows())).take_while(|&i| r[(i, i)].abs() > d0 * RANK_CUTOFF).count();
    let cond = if rank < cols { f64::INFINITY } else { d0 / r[(rank - 1, rank - 1)].abs() };
    let mut x = DVector::zeros(cols);
    if rank > 0 {
        let head = r.view((0, 0), (rank, rank)).into_owned();
        if let Some(sol) = head.solve_upper_triangular(&qtb.rows(0, rank).into_owned()) {
            x.rows_mut(0, rank).copy_from(&sol);
        }
    }
    qr.p().inv_permute_rows(&mut x);
    (x, cond)
}

/// `max|a - b| / max(1, max|a|, max|b|)`.
fn rel(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().chain(b).fold(1.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

/// Fits `target ~ sum_k coef_k basis_k` and returns `(coef, residual, cond)`.
fn fit(target: &[f64], basis: &[Vec<f64>]) -> (Vec<f64>, f64, f64) {
    let rows = target.len();
    let a = DMatrix::from_fn(rows, basis.len(), |r, c| basis[c][r]);
    let b = DVector::from_column_slice(target);
    let (x, cond) = lstsq(&a, &b);
    let fitted: Vec<f64> = (a * &x).iter().copied().collect();
    (x.iter().copied().collect(), rel(target, &fitted), cond)
}

const TINY: f64 = 1e-12;

/// Everything the predicates need at one normalized sample.
struct Facts {
    n: usize,
    m: MetricData,
    y: Vec<f64>,
    /// Cartan `T^i_ab` at `[i, a, b]` and lowered `C_abc`.
    t: Tensor,
    c3: Tensor,
    r: Tensor,
    p: Tensor,
    s: Tensor,
    phat: Tensor,
    /// Cartan derivatives of `T^i_ab`, new index last.
    dh_t: Tensor,
    dv_t: Tensor,
    /// Berwald vertical derivative of `T^i_ab` (plain `d/dy`).
    dv0_t: Tensor,
    /// Cartan vertical derivative of `C_abc`, new index last.
    dv_c3: Tensor,
    /// Derivatives of the trace `C_a` at `[a, k]`.
    dh_c1: Tensor,
    dv_c1: Tensor,
    /// Berwald h-curvature.
    r_berwald: Tensor,
    rfrak: Tensor,
}

const FACT_BUDGET: Budget = Budget::new(2, 5);

fn facts(model: &ModelSpec, s: &SamplePoint) -> Result<Facts> {
    let lg = LocalGeometry::new(model, s, FACT_BUDGET)?;
    let n = lg.dim();
    let m = MetricData::from_local(&lg);
    let rfrak_j = lg.barthel_curvature()?;
    let cartan = connection_jets(&lg, ConnectionKind::Cartan)?;
    let berwald = connection_jets(&lg, ConnectionKind::Berwald)?;
    let cj = curvature_jets(&lg, &cartan, &rfrak_j)?;
    let bj = curvature_jets(&lg, &berwald, &rfrak_j)?;

    let tj = Tensor::from_fn(&[n, n, n], |i| cartan.v[[i[0], i[2], i[1]]].clone());
    let t_field = PiField { slots: vec![Slot::Up, Slot::Down, Slot::Down], comps: tj.clone() };
    let c3_field = PiField { slots: vec![Slot::Down; 3], comps: lg.cartan.clone() };
    let mixed = lg.cartan_mixed();
    let c1j = Tensor::from_fn(&[n], |a| {
        (1..n).fold(mixed[[0, 0, a[0]]].clone(), |acc, i| acc + &mixed[[i, i, a[0]]])
    });
    let c1_field = PiField { slots: vec![Slot::Down], comps: c1j };
    let d = |f: &PiField, dir| -> Result<Tensor> { Ok(covariant_derivative(&lg, &cartan, f, dir)?.values()) };
    let p = cj.p.values();
    Ok(Facts {
        n,
        y: s.y.clone(),
        t: tj.values(),
        c3: m.c3.clone(),
        r: cj.r.values(),
        phat: contract_eta(&p, &s.y),
        p,
        s: cj.s.values(),
        dh_t: d(&t_field, Direction::Horizontal)?,
        dv_t: d(&t_field, Direction::Vertical)?,
        dv0_t: covariant_derivative(&lg, &berwald, &t_field, Direction::Vertical)?.values(),
        dv_c3: d(&c3_field, Direction::Vertical)?,
        dh_c1: d(&c1_field, Direction::Horizontal)?,
        dv_c1: d(&c1_field, Direction::Vertical)?,
        r_berwald: bj.r.values(),
        rfrak: rfrak_j.values(),
        m,
    })
}

/// One class evaluated at one sample.
#[derive(Debug, Clone, Default)]
struct Obs {
    residual: f64,
    fits: Vec<(String, f64)>,
    inconclusive: Option<String>,
    fails: Option<String>,
}

impl Obs {
    fn residual(r: f64) -> Self {
        Obs { residual: r, ..Default::default() }
    }

    fn with(mut self, name: impl Into<String>, v: f64) -> Self {
        self.fits.push((name.into(), v));
        self
    }
}

/// `T(X,Y,Z)` as a flat list over `[x, y, z]`.
fn flat(t: &Tensor) -> Vec<f64> {
    t.data().to_vec()
}

/// `sym3(A, C)[x,y,z] = A_xy C_z + A_yz C_x + A_zx C_y`.
fn sym3(a: &Tensor, c: &[f64]) -> Tensor {
    let n = c.len();
    Tensor::from_fn(&[n, n, n], |i| {
        let (x, y, z) = (i[0], i[1], i[2]);
        a[[x, y]] * c[z] + a[[y, z]] * c[x] + a[[z, x]] * c[y]
    })
}

/// Fits a per-direction recurrence factor `D T[.., k] = lambda_k T`.
fn recurrence(t: &Tensor, dt: &Tensor, n: usize) -> (Vec<f64>, f64) {
    let tt = flat(t);
    let norm2: f64 = tt.iter().map(|v| v * v).sum();
    let mut lambda = vec![0.0; n];
    let mut lhs = Vec::new();
    let mut rhs = Vec::new();
    for (k, lk) in lambda.iter_mut().enumerate() {
        let col: Vec<f64> = indices(t.shape())
            .map(|mut ix| {
                ix.push(k);
                *dt.get(&ix)
            })
            .collect();
        if norm2 > TINY * TINY {
            *lk = col.iter().zip(&tt).map(|(a, b)| a * b).sum::<f64>() / norm2;
        }
        rhs.extend(tt.iter().map(|v| *lk * v));
        lhs.extend(col);
    }
    (lambda, rel(&lhs, &rhs))
}

fn evaluate(class: SpecialClass, f: &Facts) -> Obs {
    let n = f.n;
    let m = &f.m;
    let c3 = flat(&f.c3);
    let c_norm = f.c3.max_abs();
    match class {
        SpecialClass::Riemannian => Obs::residual(c_norm),
        SpecialClass::LocallyMinkowskian => Obs::residual(f.dh_t.max_abs().max(f.r.max_abs())),
        SpecialClass::Berwald => Obs::residual(f.dh_t.max_abs()),
        SpecialClass::Landsberg => Obs::residual(f.phat.max_abs()),
        SpecialClass::GeneralLandsberg => {
            let trace: Vec<f64> = (0..n).map(|a| (0..n).map(|i| f.phat[[i, a, i]]).sum()).collect();
            // equivalent form (nabla_{beta eta} C)(X)
            let dc: Vec<f64> = (0..n).map(|a| (0..n).map(|k| f.dh_c1[[a, k]] * f.y[k]).sum()).collect();
            let r = trace.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            Obs::residual(r).with("general-landsberg: |nabla_{beta eta} C|", dc.iter().fold(0.0f64, |a, v| a.max(v.abs())))
        }
        SpecialClass::ChRecurrent | SpecialClass::CvRecurrent | SpecialClass::C0Recurrent => {
            let (dt, label) = match class {
                SpecialClass::ChRecurrent => (&f.dh_t, "ch"),
                SpecialClass::CvRecurrent => (&f.dv_t, "cv"),
                _ => (&f.dv0_t, "c0"),
            };
            let (lambda, r) = recurrence(&f.t, dt, n);
            let mut o = Obs::residual(r);
            for (k, l) in lambda.iter().enumerate() {
                o = o.with(format!("{label}-recurrent: lambda0[{k}]"), *l);
            }
            o
        }
        SpecialClass::QuasiCReducible => {
            if c_norm < TINY {
                return Obs::residual(0.0);
            }
            let (a, r, cond) = quasi_c_fit(f);
            let mut o = Obs::residual(r).with("quasi-c-reducible: condition number", cond);
            o.fits.push(("quasi-c-reducible: |A|".into(), a.max_abs()));
            if !(cond <= MAX_FIT_CONDITION) {
                o.inconclusive = Some(format!("fit condition number {cond:e} exceeds {MAX_FIT_CONDITION:e}"));
            }
            o
        }
        SpecialClass::CReducible | SpecialClass::SemiCReducible => {
            let hc = sym3(&m.hbar, &m.c1).scale(1.0 / (n as f64 + 1.0));
            if class == SpecialClass::CReducible {
                return Obs::residual(rel(&c3, &flat(&hc)));
            }
            if m.c2norm < TINY {
                return Obs { residual: c_norm, fails: Some("C^2 = 0".into()), ..Default::default() };
            }
            let ccc = Tensor::from_fn(&[n, n, n], |i| m.c1[i[0]] * m.c1[i[1]] * m.c1[i[2]] / m.c2norm);
            let (coef, r, cond) = fit(&c3, &[flat(&hc), flat(&ccc)]);
            let (mu, tau) = (coef[0], coef[1]);
            let mut o = Obs::residual(r.max((mu + tau - 1.0).abs()))
                .with("semi-c-reducible: mu", mu)
                .with("semi-c-reducible: tau", tau)
                .with("semi-c-reducible: mu + tau - 1", mu + tau - 1.0);
            if !(cond <= MAX_FIT_CONDITION) {
                o.inconclusive = Some(format!("(mu, tau) fit condition number {cond:e}"));
            }
            o
        }
        SpecialClass::C2Like => {
            if m.c2norm < TINY {
                return Obs { residual: c_norm, fails: Some("C^2 = 0".into()), ..Default::default() };
            }
            let ccc = Tensor::from_fn(&[n, n, n], |i| m.c1[i[0]] * m.c1[i[1]] * m.c1[i[2]] / m.c2norm);
            Obs::residual(rel(&c3, &flat(&ccc)))
        }
        SpecialClass::TCondition => {
            let l = m.l2.sqrt();
            let ell = &m.ell;
            let cyclic = Tensor::from_fn(&[n, n, n, n], |i| {
                let (x, y, z, w) = (i[0], i[1], i[2], i[3]);
                l * f.dv_c3[[y, z, w, x]] + ell[x] * f.c3[[y, z, w]] + ell[y] * f.c3[[z, w, x]] + ell[z] * f.c3[[w, x, y]]
                    + ell[w] * f.c3[[x, y, z]]
            });
            // full symmetrization over the four slots, normalized by the 3! symmetries of C
            let full = Tensor::from_fn(&[n, n, n, n], |i| {
                let args = [i[0], i[1], i[2], i[3]];
                let s: f64 = permutations4()
                    .iter()
                    .map(|p| ell[args[p[0]]] * f.c3[[args[p[1]], args[p[2]], args[p[3]]]])
                    .sum();
                l * f.dv_c3[[i[1], i[2], i[3], i[0]]] + s / 6.0
            });
            Obs::residual(cyclic.max_abs()).with("t-condition: full symmetrization residual", full.max_abs())
        }
        SpecialClass::T0Condition => {
            let l = m.l2.sqrt();
            let t0 = Tensor::from_fn(&[n, n], |i| {
                let (x, y) = (i[0], i[1]);
                l * f.dv_c1[[y, x]] + m.ell[x] * m.c1[y] + m.ell[y] * m.c1[x]
            });
            Obs::residual(t0.max_abs())
        }
        SpecialClass::S3Like => {
            // S(X,Y,Z,W) = g(S(X,Y)Z, W) is s4[w, z, x, y]
            let s4 = lower_first(&m.g, &f.s);
            let h = &m.hbar;
            let q = Tensor::from_fn(&[n, n, n, n], |i| {
                let (w, z, x, y) = (i[0], i[1], i[2], i[3]);
                h[[x, z]] * h[[y, w]] - h[[x, w]] * h[[y, z]]
            });
            let (coef, r, _) = fit(&flat(&s4), &[flat(&q)]);
            let scale = (n as f64 - 1.0) * (n as f64 - 2.0);
            Obs::residual(r).with("s3-like: Sc_v from fit", coef[0] * scale)
        }
        SpecialClass::P2Like => {
            // P(X,Y,Z,W) = p4[w, z, x, y] against omega(Z) T(X,Y,W) - omega(W) T(X,Y,Z)
            let p4 = lower_first(&m.g, &f.p);
            if c_norm < TINY {
                return Obs::residual(p4.max_abs());
            }
            let cols: Vec<Vec<f64>> = (0..n)
                .map(|k| {
                    let t = Tensor::from_fn(&[n, n, n, n], |i| {
                        let (w, z, x, y) = (i[0], i[1], i[2], i[3]);
                        let dz = if z == k { 1.0 } else { 0.0 };
                        let dw = if w == k { 1.0 } else { 0.0 };
                        dz * f.c3[[x, y, w]] - dw * f.c3[[x, y, z]]
                    });
                    flat(&t)
                })
                .collect();
            let (omega, r, _) = fit(&flat(&p4), &cols);
            let mut o = Obs::residual(r);
            for (k, w) in omega.iter().enumerate() {
                o = o.with(format!("p2-like: omega[{k}]"), *w);
            }
            o
        }
        SpecialClass::PReducible => {
            let phat3 = lower_first(&m.g, &f.phat);
            // phat3[z, x, y] = g(P^(X,Y), Z)
            let delta: Vec<f64> =
                (0..n).map(|a| (0..n).map(|k| f.dh_c1[[a, k]] * f.y[k]).sum::<f64>() / (n as f64 + 1.0)).collect();
            let rhs = Tensor::from_fn(&[n, n, n], |i| {
                let (z, x, y) = (i[0], i[1], i[2]);
                delta[x] * m.hbar[[y, z]] + delta[y] * m.hbar[[x, z]] + delta[z] * m.hbar[[x, y]]
            });
            let mut o = Obs::residual(rel(&flat(&phat3), &flat(&rhs)));
            for (k, d) in delta.iter().enumerate() {
                o = o.with(format!("p-reducible: delta[{k}]"), *d);
            }
            o
        }
        SpecialClass::HIsotropic => {
            // R[i, c, a, b] against k0 (g_ac delta^i_b - g_bc delta^i_a)
            let q = Tensor::from_fn(&[n, n, n, n], |ix| {
                let (i, c, a, b) = (ix[0], ix[1], ix[2], ix[3]);
                let d = |u: usize, v: usize| if u == v { 1.0 } else { 0.0 };
                m.g[[a, c]] * d(i, b) - m.g[[b, c]] * d(i, a)
            });
            let (coef, r, _) = fit(&flat(&f.r), &[flat(&q)]);
            Obs::residual(r).with("h-isotropic: k0", coef[0])
        }
        SpecialClass::ScalarCurvature => {
            // R(eta, X, eta, Y) = g(R(eta, X) eta, Y) = sum y^a y^c r4[Y, c, a, X]
            let r4 = lower_first(&m.g, &f.r);
            let lhs = Tensor::from_fn(&[n, n], |i| {
                let (x, yy) = (i[0], i[1]);
                (0..n).flat_map(|a| (0..n).map(move |c| (a, c))).map(|(a, c)| f.y[a] * f.y[c] * r4[[yy, c, a, x]]).sum()
            });
            let q = m.hbar.scale(m.l2);
            let (coef, r, _) = fit(&flat(&lhs), &[flat(&q)]);
            Obs::residual(r).with("scalar-curvature: k", coef[0])
        }
    }
}

/// Orthonormal basis of the null space of `a`.
fn complement_basis(a: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let cols = a.ncols();
    // null space of A = eigenvectors of A^T A with zero eigenvalue
    let ata = a.transpose() * a;
    let eig = ata.symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    (0..cols)
        .filter(|&k| eig.eigenvalues[k].abs() <= 1e-12 * scale)
        .map(|k| eig.eigenvectors.column(k).into_owned())
        .collect()
}

fn permutations4() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    if a != b && a != c && a != d && b != c && b != d && c != d {
                        out.push([a, b, c, d]);
                    }
                }
            }
        }
    }
    out
}

/// Evaluates every class on `samples` (rescaled to unit `L`).
pub fn classify(model: &ModelSpec, samples: &[SamplePoint], tol: f64) -> Result<ClassificationReport> {
    use rayon::prelude::*;
    let samples = samples.iter().map(|s| normalized(model, s)).collect::<Result<Vec<_>>>()?;
    let per: Vec<Vec<Obs>> = samples
        .par_iter()
        .map(|s| {
            let f = facts(model, s)?;
            Ok(SpecialClass::ALL.iter().map(|&c| evaluate(c, &f)).collect())
        })
        .collect::<Result<_>>()?;

    let mut fits: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut classes = Vec::new();
    for (ci, &class) in SpecialClass::ALL.iter().enumerate() {
        let mut residual = 0.0f64;
        let mut notes: Vec<String> = Vec::new();
        let mut inconclusive = false;
        let mut fails = false;
        for obs in per.iter().map(|p| &p[ci]) {
            if !(obs.residual <= residual) {
                residual = obs.residual;
            }
            if let Some(why) = &obs.inconclusive {
                inconclusive = true;
                if !notes.contains(why) {
                    notes.push(why.clone());
                }
            }
            if let Some(why) = &obs.fails {
                fails = true;
                if !notes.contains(why) {
                    notes.push(why.clone());
                }
            }
            for (k, v) in &obs.fits {
                fits.entry(k.clone()).or_default().push(*v);
            }
        }
        let mut holds = residual < tol && !fails;
        if class == SpecialClass::HIsotropic && holds {
            // k0 must be a single constant
            if let Some(k) = fits.get("h-isotropic: k0") {
                let (lo, hi) = k.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
                if hi - lo > tol * hi.abs().max(lo.abs()).max(1.0) {
                    holds = false;
                    notes.push(format!("k0 varies over [{lo:e}, {hi:e}]"));
                }
            }
        }
        let verdict = if model.dim < class.min_dim() {
            notes.push(format!("defined for dim >= {}", class.min_dim()));
            Verdict::Inconclusive
        } else if inconclusive && !fails {
            Verdict::Inconclusive
        } else if holds {
            Verdict::Holds
        } else {
            Verdict::Fails
        };
        classes.push(ClassResult { class, verdict, residual, notes });
    }
    let fits = fits
        .into_iter()
        .map(|(k, v)| {
            let (min, max) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            (k, ScalarSummary { min, max, mean })
        })
        .collect();
    Ok(ClassificationReport { classes, fits, samples: samples.len(), tol })
}

/// Outcome of the implication audit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditStatus {
    Audited,
    /// `zeta` failed verification; no implication was evaluated.
    NoConcurrentField,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub status: AuditStatus,
    pub report: VerificationReport,
    pub classification: Option<ClassificationReport>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.status == AuditStatus::Audited && self.report.passed()
    }
}

/// Residuals of the conclusions that are not class verdicts.
struct Conclusions {
    r: f64,
    s: f64,
    rhat: f64,
    deviation: f64,
    r_berwald: f64,
    /// `max |T-condition(X,Y,Z,zeta) - l(zeta) T(X,Y,Z)|`.
    t_condition_at_zeta: f64,
    lambda_zeta: [f64; 3],
    a_zeta_zeta: f64,
    omega_zeta: f64,
}

fn conclusions(model: &ModelSpec, s: &SamplePoint) -> Result<Conclusions> {
    let f = facts(model, s)?;
    let n = f.n;
    let m = &f.m;
    let zeta = model.zeta_at(&s.x).ok_or(crate::error::FinslerError::ZetaRequired)??;
    let dev = deviation_from(&contract_eta(&f.r, &f.y), &f.y);
    let l = m.l2.sqrt();
    let ell_z: f64 = m.ell.iter().zip(&zeta).map(|(a, b)| a * b).sum();
    let mut t_at_zeta = 0.0f64;
    for i in indices(&[n, n, n]) {
        let (x, y, z) = (i[0], i[1], i[2]);
        let w_sum = |g: &dyn Fn(usize) -> f64| -> f64 { (0..n).map(|w| g(w) * zeta[w]).sum() };
        let lhs = w_sum(&|w| {
            l * f.dv_c3[[y, z, w, x]] + m.ell[x] * f.c3[[y, z, w]] + m.ell[y] * f.c3[[z, w, x]]
                + m.ell[z] * f.c3[[w, x, y]]
                + m.ell[w] * f.c3[[x, y, z]]
        });
        t_at_zeta = t_at_zeta.max((lhs - ell_z * f.c3[[x, y, z]]).abs());
    }
    let lz = |dt: &Tensor| -> f64 {
        let (lambda, _) = recurrence(&f.t, dt, n);
        lambda.iter().zip(&zeta).map(|(a, b)| a * b).sum()
    };
    let omega_zeta = evaluate(SpecialClass::P2Like, &f)
        .fits
        .iter()
        .filter_map(|(k, v)| k.strip_prefix("p2-like: omega[").and_then(|r| r.trim_end_matches(']').parse::<usize>().ok()).map(|i| v * zeta[i]))
        .sum();
    let a_zeta_zeta = if f.c3.max_abs() < TINY {
        0.0
    } else {
        let (a, _, _) = quasi_c_fit(&f);
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| a[[i, j]] * zeta[i] * zeta[j]).sum()
    };
    Ok(Conclusions {
        r: f.r.max_abs(),
        s: f.s.max_abs(),
        rhat: f.rfrak.max_abs(),
        deviation: dev.max_abs(),
        r_berwald: f.r_berwald.max_abs(),
        t_condition_at_zeta: t_at_zeta,
        lambda_zeta: [lz(&f.dh_t), lz(&f.dv_t), lz(&f.dv0_t)],
        a_zeta_zeta,
        omega_zeta,
    })
}

/// Fits `C = sym(A, C_.)` with `A` symmetric and `A(., eta) = 0`;
/// returns `(A, residual, condition number)`.
fn quasi_c_fit(f: &Facts) -> (Tensor, f64, f64) {
    let n = f.n;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let unit = |p: (usize, usize)| Tensor::from_fn(&[n, n], |i| if (i[0], i[1]) == p || (i[1], i[0]) == p { 1.0 } else { 0.0 });
    let cons = DMatrix::from_fn(n, pairs.len(), |r, c| (0..n).map(|j| unit(pairs[c])[[r, j]] * f.y[j]).sum());
    let basis: Vec<Tensor> = complement_basis(&cons)
        .iter()
        .map(|v| pairs.iter().enumerate().fold(Tensor::zeros(&[n, n]), |acc, (c, p)| acc.add(&unit(*p).scale(v[c]))))
        .collect();
    let cols: Vec<Vec<f64>> = basis.iter().map(|a| flat(&sym3(a, &f.m.c1))).collect();
    let (coef, r, cond) = fit(&flat(&f.c3), &cols);
    (basis.iter().zip(&coef).fold(Tensor::zeros(&[n, n]), |acc, (b, k)| acc.add(&b.scale(*k))), r, cond)
}

fn implication(name: &str, hypothesis: bool, conclusion_residual: f64, tol: f64) -> CheckResult {
    let residual = if hypothesis { conclusion_residual } else { 0.0 };
    VerificationReport::single(name, residual, tol, None)
}

/// Checks every implication that a concurrent field forces between the
/// special classes. Skipped when `zeta` is not concurrent.
pub fn implication_audit(model: &ModelSpec, samples: &[SamplePoint], tol: f64) -> Result<AuditReport> {
    let conc = verify_concurrent(model, samples, tol)?;
    if !conc.passed() {
        let mut report = conc;
        report.notes.push("no concurrent field".into());
        return Ok(AuditReport { status: AuditStatus::NoConcurrentField, report, classification: None });
    }
    let cls = classify(model, samples, tol)?;
    use rayon::prelude::*;
    let norm = samples.iter().map(|s| normalized(model, s)).collect::<Result<Vec<_>>>()?;
    let per: Vec<Conclusions> = norm.par_iter().map(|s| conclusions(model, s)).collect::<Result<_>>()?;
    let max = |f: &dyn Fn(&Conclusions) -> f64| per.iter().map(f).fold(0.0f64, f64::max);
    let min_abs = |f: &dyn Fn(&Conclusions) -> f64| per.iter().map(|c| f(c).abs()).fold(f64::INFINITY, f64::min);
    let holds = |c: SpecialClass| cls.holds(c);
    let res = |c: SpecialClass| cls.get(c).residual;
    let riem = res(SpecialClass::Riemannian);
    let mut report = VerificationReport::default();

    use SpecialClass as C;
    let mut push = |name: &str, hyp: bool, concl: f64| report.push(implication(name, hyp, concl, tol));
    push("berwald => riemannian", holds(C::Berwald), riem);
    push("landsberg => riemannian", holds(C::Landsberg), riem);
    push("riemannian => berwald", holds(C::Riemannian), res(C::Berwald));
    push("berwald => landsberg", holds(C::Berwald), res(C::Landsberg));
    let lam = |k: usize| min_abs(&|c: &Conclusions| c.lambda_zeta[k]) > tol;
    push("ch-recurrent with lambda0(zeta) != 0 => riemannian", holds(C::ChRecurrent) && lam(0), riem);
    push("cv-recurrent with lambda0(zeta) != 0 => riemannian", holds(C::CvRecurrent) && lam(1), riem);
    push("c0-recurrent with lambda0(zeta) != 0 => riemannian", holds(C::C0Recurrent) && lam(2), riem);
    let a_nonzero = min_abs(&|c: &Conclusions| c.a_zeta_zeta) > tol;
    push("quasi-c-reducible with A(zeta,zeta) != 0 => riemannian", holds(C::QuasiCReducible) && a_nonzero, riem);
    push("c-reducible => riemannian", holds(C::CReducible), riem);
    push("semi-c-reducible => c2-like", holds(C::SemiCReducible), res(C::C2Like));
    push("t-condition => riemannian", holds(C::TCondition), riem);
    push("t0-condition => riemannian", holds(C::T0Condition), riem);
    push("s3-like => S = 0", holds(C::S3Like), max(&|c| c.s));
    let omega_ok = per.iter().all(|c| (c.omega_zeta + 1.0).abs() > tol);
    push("p2-like with omega(zeta) != -1 => riemannian", holds(C::P2Like) && omega_ok, riem);
    push("p-reducible => landsberg", holds(C::PReducible), res(C::Landsberg));
    push("h-isotropic => R = 0", holds(C::HIsotropic), max(&|c| c.r));
    let sc = holds(C::ScalarCurvature);
    let k = cls.fits.get("scalar-curvature: k").map_or(0.0, |s| s.min.abs().max(s.max.abs()));
    push("scalar curvature => k = 0", sc, k);
    push("scalar curvature => deviation tensor = 0", sc, max(&|c| c.deviation));
    push("scalar curvature => (v)h-torsion R^ = 0", sc, max(&|c| c.rhat));
    push("scalar curvature => Berwald h-curvature = 0", sc, max(&|c| c.r_berwald));
    push("t-condition at W = zeta reduces to l(zeta) T", true, max(&|c| c.t_condition_at_zeta));

    report.notes.extend(
        cls.classes
            .iter()
            .filter(|c| c.verdict == Verdict::Inconclusive)
            .map(|c| format!("{} inconclusive: hypothesis treated as not holding", c.class)),
    );
    Ok(AuditReport { status: AuditStatus::Audited, report, classification: Some(cls) })
}
