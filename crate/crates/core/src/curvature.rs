//! h-, hv- and v-curvature from
//! `K(X,Y)Z = -D_X D_Y Z + D_Y D_X Z + D_[X,Y] Z`
//! on the frame `{delta_a, dot d_a}` with
//! `[delta_a, delta_b] = -R^m_ab dot d_m` and
//! `[delta_a, dot d_b] = (dot d_b N^m_a) dot d_m`.
//!
//! All three tensors are stored at `[i, c, a, b]`: component `i` of
//! `K(X_a, Y_b) d_c`, with `(X, Y) = (delta, delta)` for `R`,
//! `(delta, dot d)` for `P` and `(dot d, dot d)` for `S`.

use serde::{Deserialize, Serialize};

use crate::connections::{connection_jets, contract_eta, lower_first, ConnectionJets, ConnectionKind};
use crate::dsl::ModelSpec;
use crate::error::Result;
use crate::jets::{Budget, Jet};
use crate::local::LocalGeometry;
use crate::point::SamplePoint;
use crate::tensor::Tensor;

#[derive(Debug, Clone)]
pub struct CurvatureJets {
    pub r: Tensor<Jet>,
    pub p: Tensor<Jet>,
    pub s: Tensor<Jet>,
}

fn sum_m(n: usize, f: impl Fn(usize) -> Jet) -> Jet {
    (1..n).fold(f(0), |acc, m| acc + f(m))
}

/// Curvature jets of `conn`; `rfrak` is the Barthel curvature `[i, a, b]`.
pub fn curvature_jets(lg: &LocalGeometry, conn: &ConnectionJets, rfrak: &Tensor<Jet>) -> Result<CurvatureJets> {
    let n = lg.dim();
    let (h, v) = (&conn.h, &conn.v);
    let shape = [n, n, n, n];
    let zero = || Jet::constant(n, lg.budget, 0.0);

    let r = Tensor::try_from_fn(&shape, |ix| {
        let (i, c, a, b) = (ix[0], ix[1], ix[2], ix[3]);
        let first = lg.delta(&h[[i, c, b]], a)? + sum_m(n, |m| &h[[m, c, b]] * &h[[i, m, a]]);
        let second = lg.delta(&h[[i, c, a]], b)? + sum_m(n, |m| &h[[m, c, a]] * &h[[i, m, b]]);
        let mut acc = second - first;
        if !conn.v_is_zero {
            acc = acc - sum_m(n, |m| &rfrak[[m, a, b]] * &v[[i, c, m]]);
        }
        Ok(acc)
    })?;

    let p = Tensor::try_from_fn(&shape, |ix| {
        let (i, c, a, b) = (ix[0], ix[1], ix[2], ix[3]);
        let mut acc = h[[i, c, a]].dy(b)?;
        if !conn.v_is_zero {
            acc = acc - lg.delta(&v[[i, c, b]], a)? - sum_m(n, |m| &v[[m, c, b]] * &h[[i, m, a]])
                + sum_m(n, |m| &h[[m, c, a]] * &v[[i, m, b]]);
            let dn = (0..n).map(|m| lg.barthel[[m, a]].dy(b)).collect::<Result<Vec<_>>>()?;
            acc = acc + sum_m(n, |m| &dn[m] * &v[[i, c, m]]);
        }
        Ok(acc)
    })?;

    let s = if conn.v_is_zero {
        Tensor::from_fn(&shape, |_| zero())
    } else {
        Tensor::try_from_fn(&shape, |ix| {
            let (i, c, a, b) = (ix[0], ix[1], ix[2], ix[3]);
            let first = v[[i, c, b]].dy(a)? + sum_m(n, |m| &v[[m, c, b]] * &v[[i, m, a]]);
            let second = v[[i, c, a]].dy(b)? + sum_m(n, |m| &v[[m, c, a]] * &v[[i, m, b]]);
            Ok(second - first)
        })?
    };
    Ok(CurvatureJets { r, p, s })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureSet {
    pub kind: ConnectionKind,
    pub r: Tensor,
    pub p: Tensor,
    pub s: Tensor,
    /// Contractions with `eta` in the `Z` slot, at `[i, a, b]`.
    pub rhat: Tensor,
    pub phat: Tensor,
    pub shat: Tensor,
    /// `g(K(X_a, Y_b) d_c, d_w)` at `[w, c, a, b]`.
    pub r4: Tensor,
    pub p4: Tensor,
    pub s4: Tensor,
}

impl CurvatureSet {
    pub fn from_jets(kind: ConnectionKind, lg: &LocalGeometry, cj: &CurvatureJets) -> Self {
        let g = lg.g.values();
        let y = &lg.point.y;
        let (r, p, s) = (cj.r.values(), cj.p.values(), cj.s.values());
        Self {
            kind,
            rhat: contract_eta(&r, y),
            phat: contract_eta(&p, y),
            shat: contract_eta(&s, y),
            r4: lower_first(&g, &r),
            p4: lower_first(&g, &p),
            s4: lower_first(&g, &s),
            r,
            p,
            s,
        }
    }
}

pub fn curvature_at(model: &ModelSpec, kind: ConnectionKind, s: &SamplePoint) -> Result<CurvatureSet> {
    let lg = LocalGeometry::new(model, s, kind.curvature_budget())?;
    let conn = connection_jets(&lg, kind)?;
    let cj = curvature_jets(&lg, &conn, &lg.barthel_curvature()?)?;
    Ok(CurvatureSet::from_jets(kind, &lg, &cj))
}

/// Classical closed form `S_wcab = C_wam C^m_cb - C_wbm C^m_ca` (indices
/// as in `s4`), built from the Cartan tensor alone.
pub fn v_curvature_closed_form(c3: &Tensor, g_inv: &Tensor) -> Tensor {
    let n = g_inv.shape()[0];
    let mixed = Tensor::from_fn(&[n, n, n], |i| (0..n).map(|l| g_inv[[i[0], l]] * c3[[l, i[1], i[2]]]).sum::<f64>());
    Tensor::from_fn(&[n, n, n, n], |ix| {
        let (w, c, a, b) = (ix[0], ix[1], ix[2], ix[3]);
        (0..n).map(|m| c3[[w, a, m]] * mixed[[m, c, b]] - c3[[w, b, m]] * mixed[[m, c, a]]).sum()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerticalRicci {
    /// `Ric(d_x, d_y) = trace(Z -> S(d_x, Z) d_y)`.
    pub ric: Tensor,
    pub sc: f64,
}

pub fn vertical_ricci_from(s: &Tensor, g_inv: &Tensor) -> VerticalRicci {
    let n = g_inv.shape()[0];
    let ric = Tensor::from_fn(&[n, n], |ix| (0..n).map(|z| s[[z, ix[1], ix[0], z]]).sum());
    let sc = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).map(|(a, b)| g_inv[[a, b]] * ric[[a, b]]).sum();
    VerticalRicci { ric, sc }
}

/// Vertical Ricci tensor and scalar of the Cartan v-curvature.
pub fn vertical_ricci(model: &ModelSpec, s: &SamplePoint) -> Result<VerticalRicci> {
    let lg = LocalGeometry::new(model, s, Budget::new(1, 4))?;
    let conn = connection_jets(&lg, ConnectionKind::Cartan)?;
    // only the vertical block is needed
    let v = &conn.v;
    let n = lg.dim();
    let sj = Tensor::try_from_fn(&[n, n, n, n], |ix| {
        let (i, c, a, b) = (ix[0], ix[1], ix[2], ix[3]);
        let first = v[[i, c, b]].dy(a)? + sum_m(n, |m| &v[[m, c, b]] * &v[[i, m, a]]);
        let second = v[[i, c, a]].dy(b)? + sum_m(n, |m| &v[[m, c, a]] * &v[[i, m, b]]);
        Ok(second - first)
    })?;
    Ok(vertical_ricci_from(&sj.values(), &lg.ginv.values()))
}

/// Deviation tensor `H(X) = R^(eta, X)` at `[i, k]`, from the Cartan h-curvature.
pub fn deviation_from(rhat_curvature: &Tensor, y: &[f64]) -> Tensor {
    let n = y.len();
    Tensor::from_fn(&[n, n], |ix| (0..n).map(|a| y[a] * rhat_curvature[[ix[0], a, ix[1]]]).sum())
}

pub fn deviation_tensor(model: &ModelSpec, s: &SamplePoint) -> Result<Tensor> {
    let c = curvature_at(model, ConnectionKind::Cartan, s)?;
    Ok(deviation_from(&c.rhat, &s.y))
}

/// `R^i_ab = delta_a N^i_b - delta_b N^i_a` at `[i, a, b]`.
pub fn barthel_curvature(model: &ModelSpec, s: &SamplePoint) -> Result<Tensor> {
    let lg = LocalGeometry::new(model, s, Budget::new(2, 4))?;
    Ok(lg.barthel_curvature()?.values())
}
