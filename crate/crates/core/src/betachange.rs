//! The energy beta-change `L~^2 = L^2 + B^2`, `B = g(zeta, eta)`, and the
//! transformation laws it induces on the metric, spray, Barthel connection
//! and the four linear connections with their curvatures.
//!
//! Every check compares two pipelines that share no state: the left side is
//! the full engine run on `L~`, the right side is the closed-form law
//! evaluated on quantities of `L`. Throughout, `c = 1 + p^2`,
//! `alpha_i = g_ij zeta^j` and `y_i = g_ij y^j`.

use serde::{Deserialize, Serialize};

use crate::concurrent::verify_concurrent;
use crate::connections::{connection_jets, contract_eta, lower_first, ConnectionJets, ConnectionKind};
use crate::curvature::curvature_jets;
use crate::dsl::{Lagrangian, ModelSpec};
use crate::error::{FinslerError, Result};
use crate::geometry::normalized;
use crate::jets::{Budget, Jet};
use crate::local::LocalGeometry;
use crate::point::SamplePoint;
use crate::report::{aggregate, CheckResult, Observation, VerificationReport};
use crate::tensor::Tensor;

/// A base model and its energy beta-change.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangedModel {
    pub base: ModelSpec,
    /// Carries the same `zeta` as the base so it can be re-verified.
    pub changed: ModelSpec,
}

/// Grid used to certify `zeta` before changing the metric.
const CERTIFY_GRID: usize = 2;
const CERTIFY_TOL: f64 = 1e-8;

/// Builds `L~` after checking that `zeta` is concurrent on a probe grid.
pub fn apply_change(model: &ModelSpec) -> Result<ChangedModel> {
    let report = verify_concurrent(model, &model.domain.grid(CERTIFY_GRID), CERTIFY_TOL)?;
    if !report.passed() {
        let worst = report.checks.iter().map(|c| c.residual).fold(0.0, f64::max);
        return Err(FinslerError::NotConcurrent(worst));
    }
    apply_change_unchecked(model)
}

/// Builds `L~` without certifying `zeta` (controls and the null change).
pub fn apply_change_unchecked(model: &ModelSpec) -> Result<ChangedModel> {
    let zeta = model.zeta.clone().ok_or(FinslerError::ZetaRequired)?;
    let changed = ModelSpec {
        name: format!("{}~", model.name),
        dim: model.dim,
        lagrangian: Lagrangian::EnergyBetaChange { base: Box::new(model.lagrangian.clone()), zeta: zeta.clone() },
        zeta: Some(zeta),
        domain: model.domain.clone(),
        source: None,
    };
    Ok(ChangedModel { base: model.clone(), changed })
}

/// Everything the theorems need from one model at one sample.
struct Side {
    lg: LocalGeometry,
    conns: Vec<ConnectionJets>,
    /// `(R, P, S)` per connection, in `ConnectionKind::ALL` order.
    curv: Vec<[Tensor; 3]>,
    rfrak: Tensor,
}

/// `L^2` budget for the curvature of every connection.
pub const SUITE_BUDGET: Budget = Budget::new(2, 5);

fn side(model: &ModelSpec, s: &SamplePoint) -> Result<Side> {
    let lg = LocalGeometry::new(model, s, SUITE_BUDGET)?;
    let rfrak_j = lg.barthel_curvature()?;
    let conns = ConnectionKind::ALL.iter().map(|&k| connection_jets(&lg, k)).collect::<Result<Vec<_>>>()?;
    let curv = conns
        .iter()
        .map(|c| {
            let cj = curvature_jets(&lg, c, &rfrak_j)?;
            Ok([cj.r.values(), cj.p.values(), cj.s.values()])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Side { rfrak: rfrak_j.values(), lg, conns, curv })
}

/// Base quantities that enter every law.
struct BaseData {
    n: usize,
    g: Tensor,
    zeta: Vec<f64>,
    alpha: Vec<f64>,
    y_low: Vec<f64>,
    l2: f64,
    c: f64,
}

fn base_data(base: &ModelSpec, lg: &LocalGeometry) -> Result<BaseData> {
    let n = lg.dim();
    let g = lg.g.values();
    let zeta = base.zeta_at(&lg.point.x).ok_or(FinslerError::ZetaRequired)??;
    let lowered = |v: &[f64]| -> Vec<f64> { (0..n).map(|i| (0..n).map(|j| g[[i, j]] * v[j]).sum()).collect() };
    let alpha = lowered(&zeta);
    let y_low = lowered(&lg.point.y);
    let p2: f64 = alpha.iter().zip(&zeta).map(|(a, z)| a * z).sum();
    Ok(BaseData { n, l2: lg.l2.value(), c: 1.0 + p2, g, zeta, alpha, y_low })
}

/// `Omega = dd_J f` on the coordinate frame `{d_x, d_y}` of `T(TM)`, as a
/// `2n x 2n` matrix. `f` needs one `x`- and two `y`-derivatives.
fn two_form(f: &Jet, n: usize) -> Result<Tensor> {
    let df: Vec<Jet> = (0..n).map(|i| f.dy(i)).collect::<Result<_>>()?;
    Tensor::try_from_fn(&[2 * n, 2 * n], |ix| {
        let (a, b) = (ix[0], ix[1]);
        Ok(match (a < n, b < n) {
            (true, true) => df[b].dx(a)?.value() - df[a].dx(b)?.value(),
            (false, true) => df[b].dy(a - n)?.value(),
            (true, false) => -df[a].dy(b - n)?.value(),
            (false, false) => 0.0,
        })
    })
}

/// Connection form `omega^i_j(E_A)` on the coordinate frame at `[i, j, A]`:
/// `omega(d_{x^k}) = H_k + V_m N^m_k`, `omega(d_{y^k}) = V_k`.
fn connection_form(conn: &ConnectionJets, lg: &LocalGeometry) -> Tensor {
    let n = lg.dim();
    let (h, v, nn) = (conn.h.values(), conn.v.values(), lg.barthel.values());
    Tensor::from_fn(&[n, n, 2 * n], |ix| {
        let (i, j, a) = (ix[0], ix[1], ix[2]);
        if a < n {
            h[[i, j, a]] + (0..n).map(|m| v[[i, j, m]] * nn[[m, a]]).sum::<f64>()
        } else {
            v[[i, j, a - n]]
        }
    })
}

/// Full curvature `K(E_A, E_B) d_c` on the coordinate frame at `[i, c, A, B]`,
/// assembled from `R`, `P`, `S` via `d_{x^a} = delta_a + N^m_a d_{y^m}`.
fn coordinate_curvature(curv: &[Tensor; 3], nn: &Tensor) -> Tensor {
    let n = nn.shape()[0];
    let [r, p, s] = curv;
    let adapted = |i: usize, c: usize, a: usize, b: usize| -> f64 {
        match (a < n, b < n) {
            (true, true) => r[[i, c, a, b]],
            (true, false) => p[[i, c, a, b - n]],
            (false, true) => -p[[i, c, b, a - n]],
            (false, false) => s[[i, c, a - n, b - n]],
        }
    };
    // E_A in the adapted frame
    let lam = |a: usize| -> Vec<(usize, f64)> {
        if a < n {
            std::iter::once((a, 1.0)).chain((0..n).map(|m| (n + m, nn[[m, a]]))).collect()
        } else {
            vec![(a, 1.0)]
        }
    };
    Tensor::from_fn(&[n, n, 2 * n, 2 * n], |ix| {
        let (i, c) = (ix[0], ix[1]);
        let (la, lb) = (lam(ix[2]), lam(ix[3]));
        la.iter().flat_map(|&(p, u)| lb.iter().map(move |&(q, w)| u * w * adapted(i, c, p, q))).sum()
    })
}

/// `U(X, Y) = g(X, Y) zeta/c - g(X, eta)/c V(., Y, zeta)` at `[i, j, k]`
/// with `X = d_k`, `Y = d_j`.
fn u_tensor(b: &BaseData, v: &Tensor) -> Tensor {
    let n = b.n;
    Tensor::from_fn(&[n, n, n], |ix| {
        let (i, j, k) = (ix[0], ix[1], ix[2]);
        let vz: f64 = (0..n).map(|m| v[[i, j, m]] * b.zeta[m]).sum();
        b.g[[k, j]] * b.zeta[i] / b.c - b.y_low[k] / b.c * vz
    })
}

/// `H(X, Y) Z = U_{X,Y} { g(X,Z) Y / c + g(Y,Z) g(X,zeta) zeta / c^2 }` at
/// `[i, c, a, b]` for `X = d_a`, `Y = d_b`, `Z = d_c`.
fn h_pi(b: &BaseData) -> Tensor {
    let n = b.n;
    let f = |i: usize, z: usize, x: usize, y: usize| -> f64 {
        let d = if i == y { 1.0 } else { 0.0 };
        b.g[[x, z]] * d / b.c + b.g[[y, z]] * b.alpha[x] * b.zeta[i] / (b.c * b.c)
    };
    Tensor::from_fn(&[n, n, n, n], |ix| f(ix[0], ix[1], ix[2], ix[3]) - f(ix[0], ix[1], ix[3], ix[2]))
}

/// `H` tensor of one connection on the coordinate frame of `T(TM)` at
/// `[i, c, A, B]`, using `rho(d_{x^a}) = d_a`, `rho(d_y) = 0`,
/// `K(d_{x^a}) = N^m_a d_m`, `K(d_{y^a}) = d_a`. For Chern and Berwald it
/// carries the extra `-U{g(rho X, T(K Y, Z)) zeta / c}`.
fn h_connection(kind: ConnectionKind, b: &BaseData, nn: &Tensor, t4: &Tensor) -> Tensor {
    let n = b.n;
    let hp = h_pi(b);
    let extra = matches!(kind, ConnectionKind::Chern | ConnectionKind::Berwald);
    let k_of = |a: usize, m: usize| -> f64 {
        if a < n {
            nn[[m, a]]
        } else if m == a - n {
            1.0
        } else {
            0.0
        }
    };
    // -g(rho E_A, T(K E_B, d_c)) zeta^i / c
    let term = |i: usize, c: usize, a: usize, bb: usize| -> f64 {
        if a >= n {
            return 0.0;
        }
        -(0..n).map(|m| k_of(bb, m) * t4[[a, m, c]]).sum::<f64>() * b.zeta[i] / b.c
    };
    Tensor::from_fn(&[n, n, 2 * n, 2 * n], |ix| {
        let (i, c, a, bb) = (ix[0], ix[1], ix[2], ix[3]);
        let mut v = if a < n && bb < n { hp[[i, c, a, bb]] } else { 0.0 };
        if extra {
            v += term(i, c, a, bb) - term(i, c, bb, a);
        }
        v
    })
}

/// Full torsion `T(E_A, E_B) = nabla_A rho E_B - nabla_B rho E_A` of the
/// connection form `omega` on the coordinate frame, at `[i, A, B]`.
fn full_torsion(omega: &Tensor, n: usize) -> Tensor {
    Tensor::from_fn(&[n, 2 * n, 2 * n], |ix| {
        let (i, a, b) = (ix[0], ix[1], ix[2]);
        let first = if b < n { omega[[i, b, a]] } else { 0.0 };
        let second = if a < n { omega[[i, a, b]] } else { 0.0 };
        first - second
    })
}

/// Knobs for negative controls.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteOptions {
    /// Use `+g(rho X, rho Y) zeta / c` in the connection laws.
    pub flip_connection_sign: bool,
}

/// Factor on the `g(T(Y,X),Z) zeta / c` term of the hv-curvature law.
pub fn hv_factor(kind: ConnectionKind) -> f64 {
    match kind {
        ConnectionKind::Cartan | ConnectionKind::Hashiguchi => 1.0,
        ConnectionKind::Chern | ConnectionKind::Berwald => 2.0,
    }
}

pub type TheoremReport = VerificationReport;

pub const NO_LONGER_CONCURRENT: &str = "no_longer_concurrent: zeta fails the concurrency test for L~";

/// Per-sample sums for the fitted hv factor of each connection.
type FactorSums = [(f64, f64); 4];

fn sample_observations(
    cm: &ChangedModel,
    s: &SamplePoint,
    opts: SuiteOptions,
) -> Result<(Vec<Observation>, FactorSums)> {
    let base = side(&cm.base, s)?;
    let tilde = side(&cm.changed, s)?;
    let b = base_data(&cm.base, &base.lg)?;
    let n = b.n;
    let mut out = Vec::new();
    let sign = if opts.flip_connection_sign { -1.0 } else { 1.0 };

    // metric
    let g_t = tilde.lg.g.values();
    let aa = Tensor::from_fn(&[n, n], |i| b.g[[i[0], i[1]]] + b.alpha[i[0]] * b.alpha[i[1]]);
    out.push(Observation::compare("metric: g~ = g + alpha alpha", &g_t, &aa));

    // fundamental 2-form, with B built from the base metric
    let yj: Vec<Jet> = (0..n).map(|i| base.lg.y_jet(i)).collect();
    let zj = cm.base.zeta_jets(&base.lg.point, base.lg.budget)?;
    let bj = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| &base.lg.g[[i, j]] * &(&zj[i] * &yj[j]))
        .reduce(|a, b| a + b)
        .expect("n >= 1");
    let omega_t = two_form(&tilde.lg.l2.scale(0.5), n)?;
    let omega = two_form(&base.lg.l2.scale(0.5), n)?.add(&two_form(&(&bj * &bj), n)?.scale(0.5));
    out.push(Observation::compare("two_form: Omega~ = Omega + 1/2 dd_J B^2", &omega_t, &omega));

    // spray and Barthel connection
    let spray_t = Tensor::from_fn(&[n], |i| tilde.lg.spray[i[0]].value());
    let spray = Tensor::from_fn(&[n], |i| base.lg.spray[i[0]].value() - b.l2 * b.zeta[i[0]] / (2.0 * b.c));
    out.push(Observation::compare("spray: G~ = G - L^2 zeta / (2(1+p^2))", &spray_t, &spray));
    let nn = base.lg.barthel.values();
    let nn_t = tilde.lg.barthel.values();
    let lfrak = lfrak_tensor(&b);
    out.push(Observation::compare("barthel: N~ = N + L", &nn_t, &nn.add(&lfrak)));

    // Barthel curvature
    let hh = hten_tensor(&b);
    let rf = Tensor::from_fn(&[n, n, n], |i| base.rfrak[[i[0], i[1], i[2]]] + hh[[i[0], i[1], i[2]]] - hh[[i[0], i[2], i[1]]]);
    out.push(Observation::compare("barthel_curvature: R~ = R + U{H}", &tilde.rfrak, &rf));

    // Cartan torsion of the base, used by every curvature law
    let cartan_v = base.conns[0].v.values();
    let t = Tensor::from_fn(&[n, n, n], |i| cartan_v[[i[0], i[2], i[1]]]);
    let t4 = lower_first(&b.g, &t);
    let omega_cartan = connection_form(&base.conns[0], &base.lg);
    let t_full = full_torsion(&omega_cartan, n);

    let mut sums: FactorSums = [(0.0, 0.0); 4];
    for (ki, &kind) in ConnectionKind::ALL.iter().enumerate() {
        let name = kind.name();
        let (cb, ct) = (&base.conns[ki], &tilde.conns[ki]);

        // omega~ = omega - g(rho X, rho Y) zeta / c on the coordinate frame
        let w_t = connection_form(ct, &tilde.lg);
        let w = connection_form(cb, &base.lg);
        let rhs = Tensor::from_fn(&[n, n, 2 * n], |ix| {
            let (i, j, a) = (ix[0], ix[1], ix[2]);
            let corr = if a < n { b.g[[j, a]] * b.zeta[i] / b.c } else { 0.0 };
            w[[i, j, a]] - sign * corr
        });
        out.push(Observation::compare(format!("{name}: connection law on T(TM)"), &w_t, &rhs));

        let (v, v_t) = (cb.v.values(), ct.v.values());
        out.push(Observation::compare(format!("{name}: vertical part invariant"), &v_t, &v));
        let u = u_tensor(&b, &v);
        let h_rhs = cb.h.values().sub(&u.scale(sign));
        out.push(Observation::compare(format!("{name}: horizontal part in the changed frame"), &ct.h.values(), &h_rhs));

        // curvature
        let [r, p, s_] = &base.curv[ki];
        let [r_t, p_t, s_t] = &tilde.curv[ki];
        let k_t = coordinate_curvature(&tilde.curv[ki], &nn_t);
        let k = coordinate_curvature(&base.curv[ki], &nn);
        let hc = h_connection(kind, &b, &nn, &t4);
        let k_rhs = Tensor::from_fn(k.shape(), |ix| {
            let (i, c, a, bb) = (ix[0], ix[1], ix[2], ix[3]);
            let gt: f64 = (0..n).map(|l| b.g[[l, c]] * t_full[[l, a, bb]]).sum();
            k[[i, c, a, bb]] + gt * b.zeta[i] / b.c + hc[[i, c, a, bb]]
        });
        out.push(Observation::compare(format!("{name}_curvature: K~ = K + g(T,Z) zeta/c + H"), &k_t, &k_rhs));
        out.push(Observation::compare(format!("{name}_curvature: S~ = S"), s_t, s_));
        let f = hv_factor(kind);
        let tz = Tensor::from_fn(&[n, n, n, n], |ix| t4[[ix[1], ix[3], ix[2]]] * b.zeta[ix[0]] / b.c);
        out.push(Observation::compare(
            format!("{name}_curvature: P~ = P - {f} g(T(Y,X),Z) zeta/c"),
            p_t,
            &p.sub(&tz.scale(f)),
        ));
        let dp = p.sub(p_t);
        sums[ki] = (
            dp.data().iter().zip(tz.data()).map(|(x, y)| x * y).sum(),
            tz.data().iter().map(|y| y * y).sum(),
        );
        out.push(Observation::compare(format!("{name}_curvature: R~ = R + H"), r_t, &r.add(&h_pi(&b))));
    }

    // invariance of S, P^ and T
    let y = &s.y;
    out.push(Observation::compare("invariance: S~ = S", &tilde.curv[0][2], &base.curv[0][2]));
    out.push(Observation::compare(
        "invariance: P^~ = P^",
        &contract_eta(&tilde.curv[0][1], y),
        &contract_eta(&base.curv[0][1], y),
    ));
    let t_t = Tensor::from_fn(&[n, n, n], |i| tilde.conns[0].v.values()[[i[0], i[2], i[1]]]);
    out.push(Observation::compare("invariance: T~ = T", &t_t, &t));
    Ok((out, sums))
}

/// `L(d_{x^j}) = -(y_j / c) zeta^i`, the change of the Barthel coefficients, at `[i, j]`.
fn lfrak_tensor(b: &BaseData) -> Tensor {
    Tensor::from_fn(&[b.n, b.n], |i| -b.y_low[i[1]] * b.zeta[i[0]] / b.c)
}

/// `H(d_a, d_b) = (y_b / c) d_a + (y_a alpha_b / c^2) zeta` at `[i, a, b]`.
fn hten_tensor(b: &BaseData) -> Tensor {
    Tensor::from_fn(&[b.n, b.n, b.n], |ix| {
        let (i, a, bb) = (ix[0], ix[1], ix[2]);
        let d = if i == a { 1.0 } else { 0.0 };
        b.y_low[bb] * d / b.c + b.y_low[a] * b.alpha[bb] * b.zeta[i] / (b.c * b.c)
    })
}

/// Runs every transformation law on `samples` (rescaled to unit base `L`).
pub fn theorem_suite(cm: &ChangedModel, samples: &[SamplePoint], tol: f64) -> Result<TheoremReport> {
    theorem_suite_with(cm, samples, tol, SuiteOptions::default())
}

pub fn theorem_suite_with(
    cm: &ChangedModel,
    samples: &[SamplePoint],
    tol: f64,
    opts: SuiteOptions,
) -> Result<TheoremReport> {
    let samples = samples.iter().map(|s| normalized(&cm.base, s)).collect::<Result<Vec<_>>>()?;
    use rayon::prelude::*;
    let per: Vec<(Vec<Observation>, FactorSums)> =
        samples.par_iter().map(|s| sample_observations(cm, s, opts)).collect::<Result<_>>()?;
    let mut report = aggregate(&samples, tol, |s| {
        let i = samples.iter().position(|p| std::ptr::eq(p, s)).expect("sample from the list");
        Ok(per[i].0.clone())
    })?;

    for (ki, kind) in ConnectionKind::ALL.iter().enumerate() {
        let (num, den) = per.iter().fold((0.0, 0.0), |acc, (_, f)| (acc.0 + f[ki].0, acc.1 + f[ki].1));
        if den > 1e-24 {
            report.scalars.insert(format!("{kind}: fitted hv factor"), num / den);
        }
    }

    let conc = verify_concurrent(&cm.changed, &samples, tol)?;
    let defect = conc.checks.iter().map(|c| c.residual).fold(0.0, f64::max);
    let worst = conc.checks.iter().max_by(|a, b| a.residual.total_cmp(&b.residual)).and_then(|c| c.worst_sample.clone());
    report.push(CheckResult {
        name: NO_LONGER_CONCURRENT.into(),
        residual: defect,
        tol,
        pass: defect > tol,
        worst_sample: worst,
        worst_lhs: None,
        worst_rhs: None,
        samples: samples.len(),
    });
    report.scalars.insert("concurrency defect of zeta for L~".into(), defect);
    Ok(report)
}

/// Correction tensors of the change at one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceTensors {
    /// Coefficients of `L(d_{x^j})` on `d_{y^i}` at `[i, j]`.
    pub lfrak: Tensor,
    /// `N~ - N` measured by the two pipelines, at `[i, j]`.
    pub barthel_difference: Tensor,
    /// `H(d_a, d_b)` at `[i, a, b]` (before antisymmetrization).
    pub hten: Tensor,
    /// Curvature corrections on the coordinate frame of `T(TM)` at `[i, c, A, B]`.
    pub h_cartan: Tensor,
    pub h_chern: Tensor,
    pub h_hashiguchi: Tensor,
    pub h_berwald: Tensor,
}

pub fn difference_tensors_at(cm: &ChangedModel, s: &SamplePoint) -> Result<DifferenceTensors> {
    let lg = LocalGeometry::new(&cm.base, s, Budget::new(1, 4))?;
    let lg_t = LocalGeometry::new(&cm.changed, s, LocalGeometry::MIN_BUDGET)?;
    let b = base_data(&cm.base, &lg)?;
    let n = b.n;
    let nn = lg.barthel.values();
    let cv = lg.cartan_mixed().values();
    let t = Tensor::from_fn(&[n, n, n], |i| cv[[i[0], i[2], i[1]]]);
    let t4 = lower_first(&b.g, &t);
    Ok(DifferenceTensors {
        lfrak: lfrak_tensor(&b),
        barthel_difference: lg_t.barthel.values().sub(&nn),
        hten: hten_tensor(&b),
        h_cartan: h_connection(ConnectionKind::Cartan, &b, &nn, &t4),
        h_chern: h_connection(ConnectionKind::Chern, &b, &nn, &t4),
        h_hashiguchi: h_connection(ConnectionKind::Hashiguchi, &b, &nn, &t4),
        h_berwald: h_connection(ConnectionKind::Berwald, &b, &nn, &t4),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn f0_lfrak_at_s1() {
        let cm = apply_change(&fixtures::f0()).unwrap();
        let d = difference_tensors_at(&cm, &SamplePoint::new([1.0, 0.0], [1.0, 1.0])).unwrap();
        let expect = Tensor::from_fn(&[2, 2], |i| if i[0] == 0 { 0.5 } else { 0.0 });
        assert!(d.lfrak.max_abs_diff(&expect) < 1e-15);
        assert!(d.barthel_difference.max_abs_diff(&expect) < 1e-12);
    }
}
