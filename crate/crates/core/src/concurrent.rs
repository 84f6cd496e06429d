//! Concurrent pi-vector fields: `nabla_{beta X} zeta = -X`,
//! `nabla_{gamma X} zeta = 0` for the Cartan connection, and the identities
//! such a field forces on `S`, `P`, `R`, `T`, `P^` and on `B = g(zeta, eta)`.

use serde::{Deserialize, Serialize};

use crate::connections::{
    connection_jets, contract_eta, covariant_derivative, lower_first, ConnectionJets, ConnectionKind, Direction,
    PiField, Slot,
};
use crate::curvature::curvature_jets;
use crate::dsl::ModelSpec;
use crate::error::{FinslerError, Result};
use crate::geometry::{normalized, DEFAULT_TOL};
use crate::jets::{Budget, Jet};
use crate::local::LocalGeometry;
use crate::point::SamplePoint;
use crate::report::{aggregate, Observation, VerificationReport};
use crate::tensor::Tensor;

pub const HORIZONTAL_CHECK: &str = "concurrent: nabla_h zeta + Id = 0";
pub const VERTICAL_CHECK: &str = "concurrent: nabla_v zeta = 0";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcurrentScalars {
    /// `B = g(zeta, eta)`.
    pub b: f64,
    /// `p^2 = g(zeta, zeta)`.
    pub p2: f64,
    /// `alpha_i = g_ij zeta^j`.
    pub alpha: Vec<f64>,
    /// `m^i = zeta^i - (B / L^2) y^i`.
    pub mbar: Vec<f64>,
    pub g_mbar_eta: f64,
    pub g_mbar_zeta: f64,
    pub g_mbar_mbar: f64,
    /// Angular metric on `(zeta, zeta)`.
    pub hbar_zeta_zeta: f64,
}

fn dot(g: &Tensor, a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| g[[i, j]] * a[i] * b[j]).sum()
}

/// Scalars built from `zeta` and the metric, without the non-vanishing guard.
pub fn scalars_unchecked(model: &ModelSpec, s: &SamplePoint) -> Result<ConcurrentScalars> {
    let zeta = model.zeta_at(&s.x).ok_or(FinslerError::ZetaRequired)??;
    let m = crate::geometry::metric_at(model, s)?;
    let n = s.dim();
    let y = &s.y;
    let b = dot(&m.g, &zeta, y);
    let p2 = dot(&m.g, &zeta, &zeta);
    let alpha: Vec<f64> = (0..n).map(|i| (0..n).map(|j| m.g[[i, j]] * zeta[j]).sum()).collect();
    let mbar: Vec<f64> = (0..n).map(|i| zeta[i] - b / m.l2 * y[i]).collect();
    Ok(ConcurrentScalars {
        g_mbar_eta: dot(&m.g, &mbar, y),
        g_mbar_zeta: dot(&m.g, &mbar, &zeta),
        g_mbar_mbar: dot(&m.g, &mbar, &mbar),
        hbar_zeta_zeta: dot(&m.hbar, &zeta, &zeta),
        b,
        p2,
        alpha,
        mbar,
    })
}

/// Concurrent scalars; a vanishing `B` is an error.
pub fn scalars_at(model: &ModelSpec, s: &SamplePoint) -> Result<ConcurrentScalars> {
    let sc = scalars_unchecked(model, s)?;
    let l = model.l2(s)?.sqrt();
    if sc.b.abs() <= 1e-12 * sc.p2.sqrt().max(1.0) * l {
        return Err(FinslerError::DegenerateB { x: s.x.clone(), y: s.y.clone() });
    }
    Ok(sc)
}

/// `||A||_g = sqrt(g_ik g^jl A^i_j A^k_l)` for a (1,1) tensor at `[i, j]`.
pub fn g_norm(a: &Tensor, g: &Tensor, g_inv: &Tensor) -> f64 {
    let n = g.shape()[0];
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    acc += g[[i, k]] * g_inv[[j, l]] * a[[i, j]] * a[[k, l]];
                }
            }
        }
    }
    acc.max(0.0).sqrt()
}

/// `(||nabla_h zeta + Id||_g, ||nabla_v zeta||_g)` at one sample.
pub fn concurrency_residuals(model: &ModelSpec, s: &SamplePoint) -> Result<(f64, f64)> {
    let lg = LocalGeometry::new(model, s, LocalGeometry::MIN_BUDGET)?;
    let conn = connection_jets(&lg, ConnectionKind::Cartan)?;
    let zeta = zeta_field(model, &lg)?;
    let h = covariant_derivative(&lg, &conn, &zeta, Direction::Horizontal)?.values();
    let v = covariant_derivative(&lg, &conn, &zeta, Direction::Vertical)?.values();
    let n = lg.dim();
    let plus_id = Tensor::from_fn(&[n, n], |i| h[[i[0], i[1]]] + if i[0] == i[1] { 1.0 } else { 0.0 });
    let (g, gi) = (lg.g.values(), lg.ginv.values());
    Ok((g_norm(&plus_id, &g, &gi), g_norm(&v, &g, &gi)))
}

fn zeta_field(model: &ModelSpec, lg: &LocalGeometry) -> Result<PiField> {
    let z = model.zeta_jets(&lg.point, lg.budget)?;
    let n = lg.dim();
    Ok(PiField { slots: vec![Slot::Up], comps: Tensor::from_fn(&[n], |i| z[i[0]].clone()) })
}

/// Both defining conditions, max over samples.
pub fn verify_concurrent(model: &ModelSpec, samples: &[SamplePoint], tol: f64) -> Result<VerificationReport> {
    if model.zeta.is_none() {
        return Err(FinslerError::ZetaRequired);
    }
    aggregate(samples, tol, |s| {
        let (h, v) = concurrency_residuals(model, s)?;
        Ok(vec![Observation::scalar(HORIZONTAL_CHECK, h), Observation::scalar(VERTICAL_CHECK, v)])
    })
}

/// Which reading of `(nabla_Z K)(X, Y, zeta)` a derivative identity uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Placement {
    /// `zeta` in the argument slot of the (1,3) tensor `K(X,Y)Z`.
    Argument,
    /// `zeta` in the last slot of the lowered `g(K(X,Y)Z, W)`.
    Lowered,
}

impl Placement {
    pub fn tag(self) -> &'static str {
        match self {
            Placement::Argument => "[argument]",
            Placement::Lowered => "[lowered]",
        }
    }
}

/// Budget for the identity suite: covariant derivatives of the Cartan h-curvature.
pub const SUITE_BUDGET: Budget = Budget::new(3, 6);

/// `sum_c t[.., c at slot, ..] z^c`.
fn contract(t: &Tensor, slot: usize, z: &[f64]) -> Tensor {
    let mut shape = t.shape().to_vec();
    shape.remove(slot);
    Tensor::from_fn(&shape, |idx| {
        let mut full = idx.to_vec();
        full.insert(slot, 0);
        (0..z.len())
            .map(|c| {
                full[slot] = c;
                t.get(&full) * z[c]
            })
            .sum()
    })
}

fn permute3(t: &Tensor, f: impl Fn(usize, usize, usize) -> [usize; 3]) -> Tensor {
    Tensor::from_fn(t.shape(), |i| t[f(i[0], i[1], i[2])])
}

fn permute4(t: &Tensor, f: impl Fn(usize, usize, usize, usize) -> [usize; 4]) -> Tensor {
    Tensor::from_fn(t.shape(), |i| t[f(i[0], i[1], i[2], i[3])])
}

struct SuiteData {
    zeta: Vec<f64>,
    s: Tensor,
    p: Tensor,
    r: Tensor,
    /// Derivatives at `[i, c, a, b, k]`.
    ds: [Tensor; 2],
    dp: [Tensor; 2],
    dr: [Tensor; 2],
    t: Tensor,
    /// `[i, a, b, k]`.
    dt: [Tensor; 2],
    g: Tensor,
    phat: Tensor,
}

fn derivatives(lg: &LocalGeometry, conn: &ConnectionJets, f: &PiField) -> Result<[Tensor; 2]> {
    Ok([
        covariant_derivative(lg, conn, f, Direction::Horizontal)?.values(),
        covariant_derivative(lg, conn, f, Direction::Vertical)?.values(),
    ])
}

fn suite_data(model: &ModelSpec, lg: &LocalGeometry) -> Result<SuiteData> {
    let n = lg.dim();
    let conn = connection_jets(lg, ConnectionKind::Cartan)?;
    let cj = curvature_jets(lg, &conn, &lg.barthel_curvature()?)?;
    let curv_slots = vec![Slot::Up, Slot::Down, Slot::Down, Slot::Down];
    let field = |t: &Tensor<Jet>| PiField { slots: curv_slots.clone(), comps: t.clone() };
    let tj = Tensor::from_fn(&[n, n, n], |i| conn.v[[i[0], i[2], i[1]]].clone());
    let tf = PiField { slots: vec![Slot::Up, Slot::Down, Slot::Down], comps: tj.clone() };
    let zeta = model.zeta_at(&lg.point.x).ok_or(FinslerError::ZetaRequired)??;
    let p = cj.p.values();
    Ok(SuiteData {
        zeta,
        s: cj.s.values(),
        phat: contract_eta(&p, &lg.point.y),
        p,
        r: cj.r.values(),
        ds: derivatives(lg, &conn, &field(&cj.s))?,
        dp: derivatives(lg, &conn, &field(&cj.p))?,
        dr: derivatives(lg, &conn, &field(&cj.r))?,
        t: tj.values(),
        dt: derivatives(lg, &conn, &tf)?,
        g: lg.g.values(),
    })
}

const H: usize = 0;
const V: usize = 1;

fn curvature_identities(d: &SuiteData, out: &mut Vec<Observation>) {
    let z = &d.zeta;
    let n = z.len();
    // T(Y, X) at [i, a, b] from t[i, a, b] = T(d_a, d_b)^i
    let t_swapped = permute3(&d.t, |i, a, b| [i, b, a]);
    let t4 = lower_first(&d.g, &d.t);

    // zeta in the argument slot
    for (name, k, dk) in [("S", &d.s, &d.ds), ("R", &d.r, &d.dr)] {
        out.push(Observation::vanishing(format!("{name}(X,Y)zeta = 0"), &contract(k, 1, z)));
        out.push(Observation::vanishing(format!("{name}(X,Y,Z,zeta) = 0"), &contract(&lower_first(&d.g, k), 0, z)));
        let v_arg = contract(&dk[V], 1, z);
        out.push(Observation::vanishing(format!("(nabla_v {name})(X,Y,zeta) = 0 {}", Placement::Argument.tag()), &v_arg));
        let h_arg = contract(&dk[H], 1, z);
        // K(X,Y)Z at [i, a, b, k] with Z = d_k
        let rhs = permute4(k, |i, a, b, kk| [i, kk, a, b]);
        out.push(Observation::compare(
            format!("(nabla_h {name})(X,Y,zeta) = {name}(X,Y)Z {}", Placement::Argument.tag()),
            &h_arg,
            &rhs,
        ));
        out.push(Observation::vanishing(format!("(nabla_h,zeta {name})(X,Y,zeta) = 0"), &contract(&h_arg, 3, z)));

        let k4 = lower_first(&d.g, k);
        let v_low = contract(&lower_first(&d.g, &dk[V]), 0, z);
        out.push(Observation::vanishing(format!("(nabla_v {name})(X,Y,W,zeta) = 0 {}", Placement::Lowered.tag()), &v_low));
        let h_low = contract(&lower_first(&d.g, &dk[H]), 0, z);
        // g(K(X,Y)W, Z) at [c, a, b, k]
        let rhs = Tensor::from_fn(&[n, n, n, n], |i| k4[[i[3], i[0], i[1], i[2]]]);
        out.push(Observation::compare(
            format!("(nabla_h {name})(X,Y,W,zeta) = {name}(X,Y,W,Z) {}", Placement::Lowered.tag()),
            &h_low,
            &rhs,
        ));
    }

    // hv-curvature
    out.push(Observation::compare("P(X,Y)zeta = -T(Y,X)", &contract(&d.p, 1, z), &t_swapped.scale(-1.0)));
    let p4 = lower_first(&d.g, &d.p);
    out.push(Observation::compare("P(X,Y,Z,zeta) = T(X,Y,Z)", &contract(&p4, 0, z), &t4));
    let dt_swapped = [0, 1].map(|dir| permute4(&d.dt[dir], |i, a, b, k| [i, b, a, k]));
    out.push(Observation::compare(
        format!("(nabla_v P)(X,Y,zeta) = -(nabla_v T)(Y,X) {}", Placement::Argument.tag()),
        &contract(&d.dp[V], 1, z),
        &dt_swapped[V].scale(-1.0),
    ));
    let p_z = permute4(&d.p, |i, a, b, k| [i, k, a, b]);
    let h_arg = contract(&d.dp[H], 1, z);
    out.push(Observation::compare(
        format!("(nabla_h P)(X,Y,zeta) = -(nabla_h T)(Y,X) + P(X,Y)Z {}", Placement::Argument.tag()),
        &h_arg,
        &dt_swapped[H].scale(-1.0).add(&p_z),
    ));
    out.push(Observation::compare(
        "(nabla_h,zeta P)(X,Y,zeta) = -(nabla_h,zeta T)(Y,X) - T(Y,X)",
        &contract(&h_arg, 3, z),
        &contract(&dt_swapped[H], 3, z).scale(-1.0).sub(&t_swapped),
    ));
    // lowered: g((nabla P)(X,Y)W, zeta) against g((nabla T)(X,Y), W) (+ g(P(X,Y)W, Z))
    let dt4 = [0, 1].map(|dir| lower_first(&d.g, &d.dt[dir]));
    out.push(Observation::compare(
        format!("(nabla_v P)(X,Y,W,zeta) = (nabla_v T)(X,Y,W) {}", Placement::Lowered.tag()),
        &contract(&lower_first(&d.g, &d.dp[V]), 0, z),
        &dt4[V],
    ));
    let p4_z = Tensor::from_fn(&[n, n, n, n], |i| p4[[i[3], i[0], i[1], i[2]]]);
    out.push(Observation::compare(
        format!("(nabla_h P)(X,Y,W,zeta) = (nabla_h T)(X,Y,W) + P(X,Y,W,Z) {}", Placement::Lowered.tag()),
        &contract(&lower_first(&d.g, &d.dp[H]), 0, z),
        &dt4[H].add(&p4_z),
    ));

    // torsion and hv-curvature with zeta inserted
    out.push(Observation::vanishing("T(X,zeta) = 0", &contract(&d.t, 2, z)));
    out.push(Observation::vanishing("T(zeta,X) = 0", &contract(&d.t, 1, z)));
    out.push(Observation::vanishing("P^(X,zeta) = 0", &contract(&d.phat, 2, z)));
    out.push(Observation::vanishing("P^(zeta,X) = 0", &contract(&d.phat, 1, z)));
    out.push(Observation::vanishing("P(X,zeta)Y = 0", &contract(&d.p, 3, z)));
    out.push(Observation::vanishing("P(zeta,X)Y = 0", &contract(&d.p, 2, z)));
}

fn b_identities(model: &ModelSpec, lg: &LocalGeometry, out: &mut Vec<Observation>, wedge: &mut (f64, f64)) -> Result<()> {
    let n = lg.dim();
    let zj = model.zeta_jets(&lg.point, lg.budget)?;
    let yj: Vec<Jet> = (0..n).map(|i| lg.y_jet(i)).collect();
    let sum = |f: &dyn Fn(usize) -> Jet| (1..n).fold(f(0), |acc, m| acc + f(m));
    let alpha: Vec<Jet> = (0..n).map(|i| sum(&|j| &lg.g[[i, j]] * &zj[j])).collect();
    let b = sum(&|i| &alpha[i] * &yj[i]);
    let y_low: Vec<Jet> = (0..n).map(|i| sum(&|j| &lg.g[[i, j]] * &yj[j])).collect();

    // y-independence of zeta and alpha
    let dz = Tensor::try_from_fn(&[n, n], |i| Ok(zj[i[0]].dy(i[1])?.value()))?;
    out.push(Observation::vanishing("d zeta / dy = 0", &dz));
    let da = Tensor::try_from_fn(&[n, n], |i| Ok(alpha[i[0]].dy(i[1])?.value()))?;
    out.push(Observation::vanishing("d alpha / dy = 0", &da));

    let vec_t = |v: Vec<f64>| Tensor::from_fn(&[v.len()], |i| v[i[0]]);
    let de: Vec<Jet> = (0..n).map(|i| lg.l2.dy(i).map(|j| j.scale(0.5))).collect::<Result<_>>()?;
    let b_from_e = sum(&|i| &zj[i] * &de[i]);
    out.push(Observation::compare("B = zeta . dE/dy", &vec_t(vec![b.value()]), &vec_t(vec![b_from_e.value()])));
    let dj_b = (0..n).map(|i| Ok(b.dy(i)?.value())).collect::<Result<Vec<_>>>()?;
    out.push(Observation::compare("d_J B = alpha", &vec_t(dj_b), &vec_t(alpha.iter().map(Jet::value).collect())));
    let dh_b = (0..n).map(|i| Ok(lg.delta(&b, i)?.value())).collect::<Result<Vec<_>>>()?;
    out.push(Observation::compare(
        "d_h B = -g(eta, .)",
        &vec_t(dh_b),
        &vec_t(y_low.iter().map(|v| -v.value()).collect()),
    ));

    let b2 = &b * &b;
    let djb2: Vec<Jet> = (0..n).map(|i| b2.dy(i)).collect::<Result<_>>()?;
    let vv = Tensor::try_from_fn(&[n, n], |i| Ok(djb2[i[1]].dy(i[0])?.value()))?;
    let aa = Tensor::from_fn(&[n, n], |i| 2.0 * alpha[i[0]].value() * alpha[i[1]].value());
    out.push(Observation::compare("dd_J B^2(gamma X, beta Y) = 2 alpha(X) alpha(Y)", &vv, &aa));
    // dd_J B^2 on two vertical arguments is zero because d_J kills vertical vectors
    let hh = Tensor::try_from_fn(&[n, n], |i| {
        Ok((lg.delta(&djb2[i[1]], i[0])? - lg.delta(&djb2[i[0]], i[1])?).value())
    })?;
    // determinant convention: (a ^ b)(X, Y) = a(X) b(Y) - a(Y) b(X)
    let wedge_det = Tensor::from_fn(&[n, n], |i| {
        2.0 * (alpha[i[0]].value() * y_low[i[1]].value() - alpha[i[1]].value() * y_low[i[0]].value())
    });
    out.push(Observation::compare("dd_J B^2(beta X, beta Y) = 2 (alpha ^ i_eta g)(X,Y)", &hh, &wedge_det));
    for (a, w) in hh.data().iter().zip(wedge_det.data()) {
        wedge.0 += a * w;
        wedge.1 += w * w;
    }
    Ok(())
}

/// The concurrency identities of the Chern, Hashiguchi and Berwald
/// connections, each with its own covariant derivative. Checks are prefixed
/// with the connection name.
fn other_connection_identities(model: &ModelSpec, lg: &LocalGeometry, out: &mut Vec<Observation>) -> Result<()> {
    let n = lg.dim();
    let rfrak = lg.barthel_curvature()?;
    let cartan = connection_jets(lg, ConnectionKind::Cartan)?;
    let tj = Tensor::from_fn(&[n, n, n], |i| cartan.v[[i[0], i[2], i[1]]].clone());
    let t_swapped = permute3(&tj.values(), |i, a, b| [i, b, a]);
    let z = model.zeta_at(&lg.point.x).ok_or(FinslerError::ZetaRequired)??;
    let zf = zeta_field(model, lg)?;
    for kind in [ConnectionKind::Chern, ConnectionKind::Hashiguchi, ConnectionKind::Berwald] {
        let name = kind.name();
        let conn = connection_jets(lg, kind)?;
        let [dzh, dzv] = derivatives(lg, &conn, &zf)?;
        let minus_id = Tensor::from_fn(&[n, n], |i| if i[0] == i[1] { -1.0 } else { 0.0 });
        out.push(Observation::compare(format!("{name}: D_h zeta = -Id"), &dzh, &minus_id));
        out.push(Observation::vanishing(format!("{name}: D_v zeta = 0"), &dzv));

        let cj = curvature_jets(lg, &conn, &rfrak)?;
        let slots = vec![Slot::Up, Slot::Down, Slot::Down, Slot::Down];
        let zero3 = Tensor::zeros(&[n, n, n]);
        let p = cj.p.values();
        let dp = derivatives(lg, &conn, &PiField { slots: slots.clone(), comps: cj.p.clone() })?;
        let p_z = permute4(&p, |i, a, b, k| [i, k, a, b]);
        // the T-terms appear only when the vertical part is the Cartan tensor
        let with_t = kind.cartan_vertical();
        let dt = if with_t {
            let tf = PiField { slots: vec![Slot::Up, Slot::Down, Slot::Down], comps: tj.clone() };
            Some(derivatives(lg, &conn, &tf)?.map(|d| permute4(&d, |i, a, b, k| [i, b, a, k])))
        } else {
            None
        };
        let p_zeta_rhs = if with_t { t_swapped.scale(-1.0) } else { zero3.clone() };
        out.push(Observation::compare(format!("{name}: P(X,Y)zeta"), &contract(&p, 1, &z), &p_zeta_rhs));
        out.push(Observation::vanishing(format!("{name}: P(X,zeta)Y = 0"), &contract(&p, 3, &z)));
        let (v_rhs, h_rhs) = match &dt {
            Some([dth, dtv]) => (dtv.scale(-1.0), dth.scale(-1.0).add(&p_z)),
            None => (Tensor::zeros(p_z.shape()), p_z.clone()),
        };
        out.push(Observation::compare(format!("{name}: (D_v P)(X,Y,zeta)"), &contract(&dp[V], 1, &z), &v_rhs));
        let h_arg = contract(&dp[H], 1, &z);
        out.push(Observation::compare(format!("{name}: (D_h P)(X,Y,zeta)"), &h_arg, &h_rhs));
        if !with_t {
            out.push(Observation::vanishing(format!("{name}: (D_h,zeta P)(X,Y,zeta) = 0"), &contract(&h_arg, 3, &z)));
        }

        let mut curvs = vec![("R", cj.r.clone())];
        if with_t {
            curvs.push(("S", cj.s.clone()));
        }
        for (label, kj) in curvs {
            let k = kj.values();
            let dk = derivatives(lg, &conn, &PiField { slots: slots.clone(), comps: kj })?;
            out.push(Observation::vanishing(format!("{name}: {label}(X,Y)zeta = 0"), &contract(&k, 1, &z)));
            out.push(Observation::vanishing(format!("{name}: (D_v {label})(X,Y,zeta) = 0"), &contract(&dk[V], 1, &z)));
            let rhs = permute4(&k, |i, a, b, kk| [i, kk, a, b]);
            out.push(Observation::compare(
                format!("{name}: (D_h {label})(X,Y,zeta) = {label}(X,Y)Z"),
                &contract(&dk[H], 1, &z),
                &rhs,
            ));
        }
    }
    Ok(())
}

fn lemma_scalars(model: &ModelSpec, s: &SamplePoint, out: &mut Vec<Observation>) -> Result<ConcurrentScalars> {
    let sc = scalars_unchecked(model, s)?;
    let scale = sc.p2.max(1.0);
    out.push(Observation::scalar("g(mbar, eta) = 0", sc.g_mbar_eta.abs() / scale));
    out.push(Observation::scalar("g(mbar, zeta) = g(mbar, mbar)", (sc.g_mbar_zeta - sc.g_mbar_mbar).abs() / scale));
    out.push(Observation::scalar("hbar(zeta, zeta) >= 0", (-sc.hbar_zeta_zeta).max(0.0) / scale));
    Ok(sc)
}

/// Every identity forced by a concurrent field, as named max-over-samples residuals.
///
/// Samples are rescaled to unit `L` first. Pointwise minima of `|B|`,
/// `hbar(zeta, zeta)` and `g(mbar, mbar)` are reported as scalars; they are
/// not checks because they can vanish at isolated samples (for instance
/// where `y` is parallel to `zeta`).
pub fn identity_suite(model: &ModelSpec, samples: &[SamplePoint], tol: f64) -> Result<VerificationReport> {
    if model.zeta.is_none() {
        return Err(FinslerError::ZetaRequired);
    }
    let normalized_samples = samples.iter().map(|s| normalized(model, s)).collect::<Result<Vec<_>>>()?;
    let per_sample = |s: &SamplePoint| -> Result<(Vec<Observation>, ConcurrentScalars, (f64, f64))> {
        let lg = LocalGeometry::new(model, s, SUITE_BUDGET)?;
        let mut out = Vec::new();
        curvature_identities(&suite_data(model, &lg)?, &mut out);
        other_connection_identities(model, &lg, &mut out)?;
        let mut wedge = (0.0, 0.0);
        b_identities(model, &lg, &mut out, &mut wedge)?;
        let sc = lemma_scalars(model, s, &mut out)?;
        Ok((out, sc, wedge))
    };
    use rayon::prelude::*;
    let results: Vec<_> = normalized_samples.par_iter().map(per_sample).collect::<Result<_>>()?;
    let mut report = aggregate(&normalized_samples, tol, |s| {
        let i = normalized_samples.iter().position(|p| std::ptr::eq(p, s)).expect("sample from the list");
        Ok(results[i].0.clone())
    })?;
    let mut min_b = f64::INFINITY;
    let mut min_h = f64::INFINITY;
    let mut min_m = f64::INFINITY;
    let (mut num, mut den) = (0.0, 0.0);
    for (_, sc, w) in &results {
        min_b = min_b.min(sc.b.abs());
        min_h = min_h.min(sc.hbar_zeta_zeta);
        min_m = min_m.min(sc.g_mbar_mbar);
        num += w.0;
        den += w.1;
    }
    report.scalars.insert("min |B|".into(), min_b);
    report.scalars.insert("min hbar(zeta,zeta)".into(), min_h);
    report.scalars.insert("min g(mbar,mbar)".into(), min_m);
    if den > 0.0 {
        report.scalars.insert("wedge factor (1 = determinant convention)".into(), num / den);
    }
    Ok(report)
}

/// Default tolerance used by the suites.
pub fn default_tol() -> f64 {
    DEFAULT_TOL
}
