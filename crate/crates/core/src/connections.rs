//! Spray, Barthel connection and the four linear connections on the
//! pullback bundle, with torsions and covariant derivatives.
//!
//! Coefficients are stored at `[i, j, k]` with
//! `D_{delta_k} d_j = H^i_jk d_i` and `D_{dot d_k} d_j = V^i_jk d_i`, where
//! `delta_k = d_{x^k} - N^m_k d_{y^m}` and `dot d_k = d_{y^k}`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::curvature::curvature_jets;
use crate::dsl::ModelSpec;
use crate::error::Result;
use crate::geometry::normalized;
use crate::jets::{Budget, Jet};
use crate::local::{raise_first, LocalGeometry};
use crate::point::SamplePoint;
use crate::report::{aggregate, Observation, VerificationReport};
use crate::tensor::{indices, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConnectionKind {
    Cartan,
    Berwald,
    Chern,
    Hashiguchi,
}

impl ConnectionKind {
    pub const ALL: [ConnectionKind; 4] =
        [ConnectionKind::Cartan, ConnectionKind::Berwald, ConnectionKind::Chern, ConnectionKind::Hashiguchi];

    pub fn name(self) -> &'static str {
        match self {
            ConnectionKind::Cartan => "cartan",
            ConnectionKind::Berwald => "berwald",
            ConnectionKind::Chern => "chern",
            ConnectionKind::Hashiguchi => "hashiguchi",
        }
    }

    /// Horizontal coefficients taken from the Berwald connection.
    pub fn berwald_horizontal(self) -> bool {
        matches!(self, ConnectionKind::Berwald | ConnectionKind::Hashiguchi)
    }

    /// Vertical coefficients taken from the Cartan tensor.
    pub fn cartan_vertical(self) -> bool {
        matches!(self, ConnectionKind::Cartan | ConnectionKind::Hashiguchi)
    }

    /// Budget on `L^2` needed for the three curvature tensors.
    pub fn curvature_budget(self) -> Budget {
        if self.berwald_horizontal() {
            Budget::new(2, 5)
        } else {
            Budget::new(2, 4)
        }
    }
}

impl fmt::Display for ConnectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Coefficient jets of one connection.
#[derive(Debug, Clone)]
pub struct ConnectionJets {
    pub kind: ConnectionKind,
    pub h: Tensor<Jet>,
    pub v: Tensor<Jet>,
    /// `V` vanishes identically.
    pub v_is_zero: bool,
}

/// Pointwise coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionCoefficients {
    pub kind: ConnectionKind,
    /// `N^i_j` at `[i, j]`.
    pub n: Tensor,
    pub h: Tensor,
    pub v: Tensor,
}

/// Cartan horizontal coefficients
/// `F^i_jk = 1/2 g^{is} (delta_j g_sk + delta_k g_js - delta_s g_jk)`.
pub fn cartan_horizontal(lg: &LocalGeometry) -> Result<Tensor<Jet>> {
    let n = lg.dim();
    // dg[k, a, b] = delta_k g_ab
    let dg = Tensor::try_from_fn(&[n, n, n], |i| lg.delta(&lg.g[[i[1], i[2]]], i[0]))?;
    let lower = Tensor::from_fn(&[n, n, n], |i| {
        let (s, j, k) = (i[0], i[1], i[2]);
        (&dg[[j, s, k]] + &dg[[k, j, s]] - &dg[[s, j, k]]).scale(0.5)
    });
    Ok(Tensor::from_fn(&[n, n, n], |i| raise_first(&lg.ginv, &lower, i[0], &[i[1], i[2]])))
}

/// Berwald horizontal coefficients `d N^i_j / d y^k`.
pub fn berwald_horizontal(lg: &LocalGeometry) -> Result<Tensor<Jet>> {
    let n = lg.dim();
    Tensor::try_from_fn(&[n, n, n], |i| lg.barthel[[i[0], i[1]]].dy(i[2]))
}

pub fn connection_jets(lg: &LocalGeometry, kind: ConnectionKind) -> Result<ConnectionJets> {
    let n = lg.dim();
    let h = if kind.berwald_horizontal() { berwald_horizontal(lg)? } else { cartan_horizontal(lg)? };
    let (v, v_is_zero) = if kind.cartan_vertical() {
        (lg.cartan_mixed(), false)
    } else {
        (Tensor::from_fn(&[n, n, n], |_| Jet::constant(n, lg.budget, 0.0)), true)
    };
    Ok(ConnectionJets { kind, h, v, v_is_zero })
}

impl ConnectionJets {
    pub fn values(&self, lg: &LocalGeometry) -> ConnectionCoefficients {
        ConnectionCoefficients { kind: self.kind, n: lg.barthel.values(), h: self.h.values(), v: self.v.values() }
    }
}

/// `G^i` at a sample.
pub fn spray_at(model: &ModelSpec, s: &SamplePoint) -> Result<Vec<f64>> {
    let lg = LocalGeometry::new(model, s, LocalGeometry::MIN_BUDGET)?;
    Ok(lg.spray.iter().map(Jet::value).collect())
}

/// `N^i_j = dG^i/dy^j` at a sample.
pub fn barthel_at(model: &ModelSpec, s: &SamplePoint) -> Result<Tensor> {
    let lg = LocalGeometry::new(model, s, LocalGeometry::MIN_BUDGET)?;
    Ok(lg.barthel.values())
}

pub fn connection_at(model: &ModelSpec, kind: ConnectionKind, s: &SamplePoint) -> Result<ConnectionCoefficients> {
    let lg = LocalGeometry::new(model, s, Budget::new(1, 4))?;
    Ok(connection_jets(&lg, kind)?.values(&lg))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Slot {
    Up,
    Down,
}

/// A pi-tensor field given by jets of its components.
#[derive(Debug, Clone)]
pub struct PiField {
    pub slots: Vec<Slot>,
    pub comps: Tensor<Jet>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Horizontal,
    Vertical,
}

/// Covariant derivative along `delta_k` or `dot d_k`; the new index `k` is last.
pub fn covariant_derivative(
    lg: &LocalGeometry,
    conn: &ConnectionJets,
    field: &PiField,
    dir: Direction,
) -> Result<Tensor<Jet>> {
    let n = lg.dim();
    let coef = match dir {
        Direction::Horizontal => &conn.h,
        Direction::Vertical => &conn.v,
    };
    let skip = dir == Direction::Vertical && conn.v_is_zero;
    let mut shape = field.comps.shape().to_vec();
    shape.push(n);
    Tensor::try_from_fn(&shape, |idx| {
        let (base, k) = (&idx[..idx.len() - 1], idx[idx.len() - 1]);
        let a = field.comps.get(base);
        let mut acc = match dir {
            Direction::Horizontal => lg.delta(a, k)?,
            Direction::Vertical => a.dy(k)?,
        };
        if skip {
            return Ok(acc);
        }
        let mut moved = base.to_vec();
        for (p, slot) in field.slots.iter().enumerate() {
            for m in 0..n {
                moved[p] = m;
                let term = match slot {
                    Slot::Up => coef[[base[p], m, k]].clone() * field.comps.get(&moved),
                    Slot::Down => -(coef[[m, base[p], k]].clone() * field.comps.get(&moved)),
                };
                acc = acc + term;
            }
            moved[p] = base[p];
        }
        Ok(acc)
    })
}

/// Named fields that can be differentiated from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldName {
    Metric,
    Eta,
    Length,
    Zeta,
    Cartan,
}

pub fn field_jets(model: &ModelSpec, lg: &LocalGeometry, name: FieldName) -> Result<PiField> {
    let n = lg.dim();
    Ok(match name {
        FieldName::Metric => PiField { slots: vec![Slot::Down, Slot::Down], comps: lg.g.clone() },
        FieldName::Eta => PiField { slots: vec![Slot::Up], comps: Tensor::from_fn(&[n], |i| lg.y_jet(i[0])) },
        FieldName::Length => PiField { slots: vec![], comps: Tensor::from_fn(&[], |_| lg.l2.clone()).try_map(Jet::sqrt)? },
        FieldName::Zeta => {
            let z = model.zeta_jets(&lg.point, lg.budget)?;
            PiField { slots: vec![Slot::Up], comps: Tensor::from_fn(&[n], |i| z[i[0]].clone()) }
        }
        FieldName::Cartan => PiField { slots: vec![Slot::Down; 3], comps: lg.cartan.clone() },
    })
}

/// Pointwise covariant derivative of a named field.
pub fn covariant_derivative_at(
    model: &ModelSpec,
    kind: ConnectionKind,
    name: FieldName,
    dir: Direction,
    s: &SamplePoint,
) -> Result<Tensor> {
    let lg = LocalGeometry::new(model, s, Budget::new(2, 4))?;
    let conn = connection_jets(&lg, kind)?;
    let field = field_jets(model, &lg, name)?;
    Ok(covariant_derivative(&lg, &conn, &field, dir)?.values())
}

/// Torsions of one connection at a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorsionSet {
    pub kind: ConnectionKind,
    /// (h)hv-torsion `T(d_a, d_b)^i = V^i_ba` at `[i, a, b]`.
    pub t: Tensor,
    /// `g(T(d_a, d_b), d_l)` at `[l, a, b]`.
    pub t_lowered: Tensor,
    /// (h)h-torsion `Q(d_a, d_b)^i = H^i_ba - H^i_ab`.
    pub q: Tensor,
    /// (v)h-torsion `delta_a N^i_b - delta_b N^i_a` at `[i, a, b]`.
    pub rhat: Tensor,
    /// `R(d_a, d_b) eta` from the h-curvature.
    pub rhat_curvature: Tensor,
    /// (v)hv-torsion `P(d_a, d_b) eta`.
    pub phat: Tensor,
    /// `(nabla_{beta eta} T)(d_a, d_b)` (cartan only).
    pub phat_dual: Option<Tensor>,
    /// (v)v-torsion `S(d_a, d_b) eta`.
    pub shat: Tensor,
}

/// Contraction `sum_c A[i, c, a, b] y^c`.
pub fn contract_eta(a: &Tensor, y: &[f64]) -> Tensor {
    let n = y.len();
    Tensor::from_fn(&[n, n, n], |i| (0..n).map(|c| a[[i[0], c, i[1], i[2]]] * y[c]).sum())
}

/// Lowers the first index with `g`.
pub fn lower_first(g: &Tensor, a: &Tensor) -> Tensor {
    let n = g.shape()[0];
    Tensor::from_fn(a.shape(), |idx| {
        let mut moved = idx.to_vec();
        (0..n)
            .map(|m| {
                moved[0] = m;
                g[[idx[0], m]] * a.get(&moved)
            })
            .sum()
    })
}

pub fn torsions_from(lg: &LocalGeometry, conn: &ConnectionJets) -> Result<TorsionSet> {
    let n = lg.dim();
    let h = conn.h.values();
    let v = conn.v.values();
    let g = lg.g.values();
    let y = &lg.point.y;
    let t = Tensor::from_fn(&[n, n, n], |i| v[[i[0], i[2], i[1]]]);
    let q = Tensor::from_fn(&[n, n, n], |i| h[[i[0], i[2], i[1]]] - h[[i[0], i[1], i[2]]]);
    let rfrak = lg.barthel_curvature()?;
    let curv = curvature_jets(lg, conn, &rfrak)?;
    let phat_dual = if conn.kind == ConnectionKind::Cartan {
        let tf = PiField {
            slots: vec![Slot::Up, Slot::Down, Slot::Down],
            comps: Tensor::from_fn(&[n, n, n], |i| conn.v[[i[0], i[2], i[1]]].clone()),
        };
        let d = covariant_derivative(lg, conn, &tf, Direction::Horizontal)?.values();
        Some(Tensor::from_fn(&[n, n, n], |i| (0..n).map(|k| d[[i[0], i[1], i[2], k]] * y[k]).sum()))
    } else {
        None
    };
    Ok(TorsionSet {
        kind: conn.kind,
        t_lowered: lower_first(&g, &t),
        t,
        q,
        rhat: rfrak.values(),
        rhat_curvature: contract_eta(&curv.r.values(), y),
        phat: contract_eta(&curv.p.values(), y),
        phat_dual,
        shat: contract_eta(&curv.s.values(), y),
    })
}

pub fn torsions_at(model: &ModelSpec, kind: ConnectionKind, s: &SamplePoint) -> Result<TorsionSet> {
    let lg = LocalGeometry::new(model, s, kind.curvature_budget())?;
    let conn = connection_jets(&lg, kind)?;
    torsions_from(&lg, &conn)
}

/// Largest componentwise residuals of the three difference identities
/// `D° = nabla + P^(rho.,.) - T(K.,.)`, `D◇ = nabla - T(K.,.)` and
/// `D* = nabla + P^(rho.,.)`, with `P^` and `T` taken from the Cartan
/// connection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifferenceIdentities {
    pub berwald: f64,
    pub chern: f64,
    pub hashiguchi: f64,
}

pub fn difference_identities_at(model: &ModelSpec, s: &SamplePoint) -> Result<DifferenceIdentities> {
    let lg = LocalGeometry::new(model, s, Budget::new(2, 4))?;
    let n = lg.dim();
    let cartan = connection_jets(&lg, ConnectionKind::Cartan)?;
    let tors = torsions_from(&lg, &cartan)?;
    let (f, c) = (cartan.h.values(), cartan.v.values());
    // D_{delta_k} d_j gains P^(d_k, d_j); D_{dot d_k} d_j loses T(d_k, d_j).
    let plus_p = Tensor::from_fn(&[n, n, n], |i| f[[i[0], i[1], i[2]]] + tors.phat[[i[0], i[2], i[1]]]);
    let minus_t = Tensor::from_fn(&[n, n, n], |i| c[[i[0], i[1], i[2]]] - tors.t[[i[0], i[2], i[1]]]);
    let residual = |kind: ConnectionKind, h: &Tensor, v: &Tensor| -> Result<f64> {
        let direct = connection_jets(&lg, kind)?.values(&lg);
        Ok(direct.h.max_abs_diff(h).max(direct.v.max_abs_diff(v)))
    };
    Ok(DifferenceIdentities {
        berwald: residual(ConnectionKind::Berwald, &plus_p, &minus_t)?,
        chern: residual(ConnectionKind::Chern, &f, &minus_t)?,
        hashiguchi: residual(ConnectionKind::Hashiguchi, &plus_p, &c)?,
    })
}

/// `max |nabla g|` over both directions for one connection.
pub fn metricity_defect(lg: &LocalGeometry, conn: &ConnectionJets) -> Result<f64> {
    let field = PiField { slots: vec![Slot::Down, Slot::Down], comps: lg.g.clone() };
    let h = covariant_derivative(lg, conn, &field, Direction::Horizontal)?.values().max_abs();
    let v = covariant_derivative(lg, conn, &field, Direction::Vertical)?.values().max_abs();
    Ok(h.max(v))
}

/// Largest defect of total symmetry of `g(T(X,Y),Z)`.
pub fn lowered_symmetry_defect(t_lowered: &Tensor) -> f64 {
    let mut worst = 0.0f64;
    for i in indices(t_lowered.shape()) {
        let (l, a, b) = (i[0], i[1], i[2]);
        let v = t_lowered[[l, a, b]];
        for w in [t_lowered[[a, l, b]], t_lowered[[b, a, l]], t_lowered[[l, b, a]]] {
            worst = worst.max((v - w).abs());
        }
    }
    worst
}

/// Cartan axioms, the three difference identities and the dual-path `P^`
/// agreement as named checks over `samples` (rescaled to unit `L`).
pub fn connection_suite(model: &ModelSpec, samples: &[SamplePoint], tol: f64) -> Result<VerificationReport> {
    let norm = samples.iter().map(|s| normalized(model, s)).collect::<Result<Vec<_>>>()?;
    aggregate(&norm, tol, |s| {
        let lg = LocalGeometry::new(model, s, Budget::new(2, 4))?;
        let cartan = connection_jets(&lg, ConnectionKind::Cartan)?;
        let tors = torsions_from(&lg, &cartan)?;
        let diff = difference_identities_at(model, s)?;
        let mut obs = vec![
            Observation::scalar("cartan: nabla g = 0", metricity_defect(&lg, &cartan)?),
            Observation::vanishing("cartan: Q = 0", &tors.q),
            Observation::scalar("cartan: g(T(X,Y),Z) totally symmetric", lowered_symmetry_defect(&tors.t_lowered)),
            Observation::scalar("berwald: D = nabla + P^ - T", diff.berwald),
            Observation::scalar("chern: D = nabla - T", diff.chern),
            Observation::scalar("hashiguchi: D = nabla + P^", diff.hashiguchi),
        ];
        if let Some(dual) = &tors.phat_dual {
            obs.push(Observation::compare("cartan: P^ = nabla_{beta eta} T", &tors.phat, dual));
        }
        for kind in [ConnectionKind::Berwald, ConnectionKind::Chern, ConnectionKind::Hashiguchi] {
            let h = connection_jets(&lg, kind)?.h.values();
            let q = Tensor::from_fn(&[lg.dim(); 3], |i| h[[i[0], i[2], i[1]]] - h[[i[0], i[1], i[2]]]);
            obs.push(Observation::vanishing(format!("{kind}: Q = 0"), &q));
        }
        Ok(obs)
    })
}
