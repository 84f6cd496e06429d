//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] holds the Taylor coefficients of a scalar field around a
//! sample point `(x0, y0)` in the shifted variables `(x - x0, y - y0)`.
//! Truncation is a box: total x-degree `<= budget.x` and total y-degree
//! `<= budget.y`. Derivatives taken from a jet are exact up to rounding.
//!
//! Monomials of each variable group are sorted by degree, then
//! lexicographically, so the table for a smaller degree is a prefix of the
//! table for a larger one. Coefficients are stored flat at `ix * ny + iy`.

use std::collections::HashMap;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Mutex;

use once_cell::sync::Lazy;
use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::point::SamplePoint;

/// Highest degree held by the cached monomial tables in either group.
pub const TABLE_DEGREE: usize = 8;

/// Orders of differentiation available in each variable group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Budget {
    pub x: usize,
    pub y: usize,
}

impl Budget {
    /// Enough for the h-curvature of the Cartan connection.
    pub const DEFAULT: Budget = Budget { x: 2, y: 4 };
    /// Largest budget accepted by [`jet_evaluate`].
    pub const ENGINE_MAX: Budget = Budget { x: 3, y: 6 };
    /// Largest combined order accepted by [`jet_evaluate`].
    pub const ENGINE_MAX_TOTAL: usize = 9;

    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    pub fn min(self, other: Budget) -> Budget {
        Budget::new(self.x.min(other.x), self.y.min(other.y))
    }

    pub fn contains(self, other: Budget) -> bool {
        other.x <= self.x && other.y <= self.y
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::DEFAULT
    }
}

impl std::fmt::Display for Budget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(x:{}, y:{})", self.x, self.y)
    }
}

/// Orders of a mixed partial derivative, one entry per coordinate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex {
    pub x_orders: Vec<u32>,
    pub y_orders: Vec<u32>,
}

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        Self { x_orders: vec![0; n], y_orders: vec![0; n] }
    }

    /// Builds the index of `∂_{x^i1} ∂_{x^i2} ... ∂_{y^j1} ...` from lists of
    /// (0-based) differentiation variables, in any order.
    pub fn from_vars(n: usize, xs: &[usize], ys: &[usize]) -> Self {
        let mut m = Self::zero(n);
        for &i in xs {
            m.x_orders[i] += 1;
        }
        for &j in ys {
            m.y_orders[j] += 1;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.x_orders.len()
    }

    pub fn x_total(&self) -> usize {
        self.x_orders.iter().map(|&v| v as usize).sum()
    }

    pub fn y_total(&self) -> usize {
        self.y_orders.iter().map(|&v| v as usize).sum()
    }

    pub fn total(&self) -> usize {
        self.x_total() + self.y_total()
    }
}

pub(crate) struct Table {
    n: usize,
    monos: Vec<Vec<u8>>,
    upto: Vec<usize>,
    index: HashMap<Vec<u8>, usize>,
    pairs: Vec<[u32; 3]>,
    pairs_upto: Vec<usize>,
    raise: Vec<Vec<u32>>,
    factorials: Vec<f64>,
}

const NONE: u32 = u32::MAX;

impl Table {
    fn build(n: usize, degree: usize) -> Table {
        let mut monos: Vec<Vec<u8>> = Vec::new();
        let mut upto = Vec::with_capacity(degree + 1);
        for d in 0..=degree {
            let mut level = Vec::new();
            compositions(n, d, &mut vec![0u8; n], 0, &mut level);
            level.sort();
            level.reverse();
            monos.extend(level);
            upto.push(monos.len());
        }
        let index: HashMap<Vec<u8>, usize> =
            monos.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        let deg = |m: &[u8]| m.iter().map(|&v| v as usize).sum::<usize>();

        let mut pairs = Vec::new();
        for (ia, a) in monos.iter().enumerate() {
            for (ib, b) in monos.iter().enumerate() {
                if deg(a) + deg(b) > degree {
                    continue;
                }
                let c: Vec<u8> = a.iter().zip(b).map(|(p, q)| p + q).collect();
                pairs.push([ia as u32, ib as u32, index[&c] as u32]);
            }
        }
        pairs.sort_by_key(|p| deg(&monos[p[2] as usize]));
        let mut pairs_upto = vec![0; degree + 1];
        for (d, slot) in pairs_upto.iter_mut().enumerate() {
            *slot = pairs.partition_point(|p| deg(&monos[p[2] as usize]) <= d);
        }

        let raise = (0..n)
            .map(|k| {
                monos
                    .iter()
                    .map(|m| {
                        let mut r = m.clone();
                        r[k] += 1;
                        index.get(&r).map_or(NONE, |&i| i as u32)
                    })
                    .collect()
            })
            .collect();
        let factorials = monos
            .iter()
            .map(|m| m.iter().map(|&a| factorial(a as usize)).product())
            .collect();
        Table { n, monos, upto, index, pairs, pairs_upto, raise, factorials }
    }

    fn get(n: usize) -> &'static Table {
        static TABLES: Lazy<Mutex<HashMap<usize, &'static Table>>> =
            Lazy::new(|| Mutex::new(HashMap::new()));
        let mut guard = TABLES.lock().expect("table cache poisoned");
        guard
            .entry(n)
            .or_insert_with(|| Box::leak(Box::new(Table::build(n, TABLE_DEGREE))))
    }
}

fn compositions(n: usize, d: usize, cur: &mut Vec<u8>, pos: usize, out: &mut Vec<Vec<u8>>) {
    if pos + 1 == n {
        cur[pos] = d as u8;
        out.push(cur.clone());
        return;
    }
    for v in 0..=d {
        cur[pos] = v as u8;
        compositions(n, d - v, cur, pos + 1, out);
    }
    cur[pos] = 0;
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// Truncated Taylor expansion of a scalar field around one point.
#[derive(Clone)]
pub struct Jet {
    table: &'static Table,
    bx: usize,
    by: usize,
    c: Vec<f64>,
}

impl std::fmt::Debug for Jet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Jet")
            .field("n", &self.table.n)
            .field("budget", &self.budget())
            .field("value", &self.value())
            .finish()
    }
}

impl Jet {
    fn zeros(n: usize, budget: Budget) -> Jet {
        assert!(
            budget.x <= TABLE_DEGREE && budget.y <= TABLE_DEGREE,
            "budget {budget} beyond table degree"
        );
        let table = Table::get(n);
        let len = table.upto[budget.x] * table.upto[budget.y];
        Jet { table, bx: budget.x, by: budget.y, c: vec![0.0; len] }
    }

    pub fn constant(n: usize, budget: Budget, v: f64) -> Jet {
        let mut j = Jet::zeros(n, budget);
        j.c[0] = v;
        j
    }

    /// The coordinate function `x^k` expanded around `x0`.
    pub fn var_x(n: usize, budget: Budget, x0: f64, k: usize) -> Jet {
        let mut j = Jet::constant(n, budget, x0);
        if budget.x >= 1 {
            let ny = j.ny();
            j.c[(1 + k) * ny] = 1.0;
        }
        j
    }

    /// The coordinate function `y^k` expanded around `y0`.
    pub fn var_y(n: usize, budget: Budget, y0: f64, k: usize) -> Jet {
        let mut j = Jet::constant(n, budget, y0);
        if budget.y >= 1 {
            j.c[1 + k] = 1.0;
        }
        j
    }

    pub fn dim(&self) -> usize {
        self.table.n
    }

    pub fn budget(&self) -> Budget {
        Budget::new(self.bx, self.by)
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    fn ny(&self) -> usize {
        self.table.upto[self.by]
    }

    fn nx(&self) -> usize {
        self.table.upto[self.bx]
    }

    fn locate(&self, m: &MultiIndex) -> Result<(usize, usize)> {
        if m.dim() != self.dim() {
            return Err(FinslerError::InvalidModel(format!(
                "multi-index of dimension {} applied to a jet of dimension {}",
                m.dim(),
                self.dim()
            )));
        }
        if m.x_total() > self.bx || m.y_total() > self.by {
            return Err(FinslerError::BudgetExceeded {
                requested: format!("(x:{}, y:{})", m.x_total(), m.y_total()),
                available: self.budget().to_string(),
            });
        }
        let key = |o: &[u32]| o.iter().map(|&v| v as u8).collect::<Vec<u8>>();
        Ok((self.table.index[&key(&m.x_orders)], self.table.index[&key(&m.y_orders)]))
    }

    /// Taylor coefficient at a multi-index.
    pub fn coeff(&self, m: &MultiIndex) -> Result<f64> {
        let (ix, iy) = self.locate(m)?;
        Ok(self.c[ix * self.ny() + iy])
    }

    /// Mixed partial derivative at the expansion point.
    pub fn partial(&self, m: &MultiIndex) -> Result<f64> {
        let (ix, iy) = self.locate(m)?;
        let w = self.table.factorials[ix] * self.table.factorials[iy];
        Ok(self.c[ix * self.ny() + iy] * w)
    }

    /// Restriction to a smaller budget.
    pub fn truncate(&self, budget: Budget) -> Jet {
        assert!(self.budget().contains(budget), "cannot widen a jet from {} to {budget}", self.budget());
        if budget == self.budget() {
            return self.clone();
        }
        let mut out = Jet::zeros(self.dim(), budget);
        let (ny_src, ny) = (self.ny(), out.ny());
        for ix in 0..out.nx() {
            out.c[ix * ny..(ix + 1) * ny]
                .copy_from_slice(&self.c[ix * ny_src..ix * ny_src + ny]);
        }
        out
    }

    /// Derivative with respect to `x^k`; the x-budget drops by one.
    pub fn dx(&self, k: usize) -> Result<Jet> {
        if self.bx == 0 {
            return Err(FinslerError::BudgetExceeded {
                requested: format!("d/dx{}", k + 1),
                available: self.budget().to_string(),
            });
        }
        let mut out = Jet::zeros(self.dim(), Budget::new(self.bx - 1, self.by));
        let ny = self.ny();
        let raise = &self.table.raise[k];
        for ix in 0..out.nx() {
            let src = raise[ix] as usize;
            let f = (self.table.monos[ix][k] + 1) as f64;
            for iy in 0..ny {
                out.c[ix * ny + iy] = self.c[src * ny + iy] * f;
            }
        }
        Ok(out)
    }

    /// Derivative with respect to `y^k`; the y-budget drops by one.
    pub fn dy(&self, k: usize) -> Result<Jet> {
        if self.by == 0 {
            return Err(FinslerError::BudgetExceeded {
                requested: format!("d/dy{}", k + 1),
                available: self.budget().to_string(),
            });
        }
        let mut out = Jet::zeros(self.dim(), Budget::new(self.bx, self.by - 1));
        let (ny_src, ny) = (self.ny(), out.ny());
        let raise = &self.table.raise[k];
        for ix in 0..out.nx() {
            for iy in 0..ny {
                let f = (self.table.monos[iy][k] + 1) as f64;
                out.c[ix * ny + iy] = self.c[ix * ny_src + raise[iy] as usize] * f;
            }
        }
        Ok(out)
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, s: f64) -> Jet {
        let mut out = self.clone();
        out.c.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn add_const(&self, s: f64) -> Jet {
        let mut out = self.clone();
        out.c[0] += s;
        out
    }

    fn aligned(&self, other: &Jet) -> (Jet, Jet) {
        let b = self.budget().min(other.budget());
        (self.truncate(b), other.truncate(b))
    }

    fn zip_with(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        assert_eq!(self.dim(), other.dim(), "jet dimension mismatch");
        if self.budget() == other.budget() {
            let mut out = self.clone();
            out.c.iter_mut().zip(&other.c).for_each(|(a, b)| *a = f(*a, *b));
            out
        } else {
            let (mut a, b) = self.aligned(other);
            a.c.iter_mut().zip(&b.c).for_each(|(p, q)| *p = f(*p, *q));
            a
        }
    }

    fn product(&self, other: &Jet) -> Jet {
        assert_eq!(self.dim(), other.dim(), "jet dimension mismatch");
        let b = self.budget().min(other.budget());
        let mut out = Jet::zeros(self.dim(), b);
        let t = self.table;
        let (nya, nyb, ny) = (self.ny(), other.ny(), out.ny());
        let ypairs = &t.pairs[..t.pairs_upto[b.y]];
        for &[xa, xb, xc] in &t.pairs[..t.pairs_upto[b.x]] {
            let ra = &self.c[xa as usize * nya..xa as usize * nya + nya];
            let rb = &other.c[xb as usize * nyb..xb as usize * nyb + nyb];
            if ra.iter().all(|v| *v == 0.0) || rb.iter().all(|v| *v == 0.0) {
                continue;
            }
            let rc = &mut out.c[xc as usize * ny..xc as usize * ny + ny];
            for &[ya, yb, yc] in ypairs {
                rc[yc as usize] += ra[ya as usize] * rb[yb as usize];
            }
        }
        out
    }

    /// Evaluates `sum_m f[m] (a - a0)^m` by Horner's rule, where `f` holds
    /// the Taylor coefficients of the outer function at `a0`.
    fn compose(&self, f: &[f64]) -> Jet {
        let mut shifted = self.clone();
        shifted.c[0] = 0.0;
        let mut r = Jet::constant(self.dim(), self.budget(), f[f.len() - 1]);
        for &fm in f[..f.len() - 1].iter().rev() {
            r = r.product(&shifted);
            r.c[0] += fm;
        }
        r
    }

    fn order(&self) -> usize {
        self.bx + self.by
    }

    fn checked(self, what: &str) -> Result<Jet> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(FinslerError::Domain(format!("{what} produced a non-finite value")))
        }
    }

    pub fn recip(&self) -> Result<Jet> {
        let a0 = self.value();
        if a0 == 0.0 || !a0.is_finite() {
            return Err(FinslerError::Domain(format!("reciprocal of {a0}")));
        }
        let f: Vec<f64> = (0..=self.order())
            .map(|m| if m % 2 == 0 { 1.0 } else { -1.0 } / a0.powi(m as i32 + 1))
            .collect();
        self.compose(&f).checked("reciprocal")
    }

    pub fn div(&self, other: &Jet) -> Result<Jet> {
        Ok(self.product(&other.recip()?))
    }

    pub fn powi(&self, k: i32) -> Result<Jet> {
        if k < 0 {
            return self.recip()?.powi(-k);
        }
        let mut result = Jet::constant(self.dim(), self.budget(), 1.0);
        let mut base = self.clone();
        let mut e = k as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = result.product(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.product(&base);
            }
        }
        result.checked("integer power")
    }

    pub fn powf(&self, p: f64) -> Result<Jet> {
        if p.fract() == 0.0 && p.abs() < 64.0 {
            return self.powi(p as i32);
        }
        let a0 = self.value();
        if a0 <= 0.0 || !a0.is_finite() {
            return Err(FinslerError::Domain(format!("real power {p} of {a0}")));
        }
        let mut f = Vec::with_capacity(self.order() + 1);
        let mut binom = 1.0;
        for m in 0..=self.order() {
            f.push(binom * a0.powf(p - m as f64));
            binom *= (p - m as f64) / (m as f64 + 1.0);
        }
        self.compose(&f).checked("real power")
    }

    pub fn sqrt(&self) -> Result<Jet> {
        self.powf(0.5)
    }

    pub fn exp(&self) -> Result<Jet> {
        let e = self.value().exp();
        let f: Vec<f64> = (0..=self.order()).map(|m| e / factorial(m)).collect();
        self.compose(&f).checked("exp")
    }

    pub fn ln(&self) -> Result<Jet> {
        let a0 = self.value();
        if a0 <= 0.0 || !a0.is_finite() {
            return Err(FinslerError::Domain(format!("logarithm of {a0}")));
        }
        let f: Vec<f64> = (0..=self.order())
            .map(|m| match m {
                0 => a0.ln(),
                _ => {
                    let s = if m % 2 == 1 { 1.0 } else { -1.0 };
                    s / (m as f64 * a0.powi(m as i32))
                }
            })
            .collect();
        self.compose(&f).checked("ln")
    }

    fn trig(&self, phase: usize) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        let f: Vec<f64> = (0..=self.order())
            .map(|m| cycle[(m + phase) % 4] / factorial(m))
            .collect();
        self.compose(&f)
    }

    pub fn sin(&self) -> Result<Jet> {
        self.trig(0).checked("sin")
    }

    pub fn cos(&self) -> Result<Jet> {
        self.trig(1).checked("cos")
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.product(rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

/// A scalar field on the slit tangent bundle of a chart.
pub trait ScalarField: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64>;
    fn eval_jet(&self, x: &[f64], y: &[f64], budget: Budget) -> Result<Jet>;
}

/// Jet of `field` at `point`, checked against the engine maximum.
pub fn jet_evaluate(field: &dyn ScalarField, point: &SamplePoint, budget: Budget) -> Result<Jet> {
    if !Budget::ENGINE_MAX.contains(budget) || budget.x + budget.y > Budget::ENGINE_MAX_TOTAL {
        return Err(FinslerError::BudgetExceeded {
            requested: budget.to_string(),
            available: format!("{} with combined order <= {}", Budget::ENGINE_MAX, Budget::ENGINE_MAX_TOTAL),
        });
    }
    if point.dim() != field.dim() {
        return Err(FinslerError::InvalidModel(format!(
            "point of dimension {} for a field of dimension {}",
            point.dim(),
            field.dim()
        )));
    }
    let j = field.eval_jet(&point.x, &point.y, budget)?;
    if !j.is_finite() {
        return Err(FinslerError::Domain(format!("non-finite jet at x = {:?}, y = {:?}", point.x, point.y)));
    }
    Ok(j)
}

/// Result of comparing a jet derivative with finite differences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdComparison {
    pub ad_value: f64,
    pub fd_value: f64,
    pub rel_residual: f64,
}

/// Compares one mixed partial from the jet engine against nested central
/// differences with two levels of Richardson extrapolation.
pub fn fd_crosscheck(field: &dyn ScalarField, point: &SamplePoint, index: &MultiIndex) -> Result<FdComparison> {
    let order = index.total();
    if order > 4 {
        return Err(FinslerError::BudgetExceeded {
            requested: format!("finite-difference order {order}"),
            available: "order <= 4".into(),
        });
    }
    let budget = Budget::new(index.x_total(), index.y_total());
    let ad_value = jet_evaluate(field, point, budget)?.partial(index)?;

    let n = point.dim();
    let ynorm = point.y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut h = 2.0 * f64::EPSILON.powf(1.0 / (order as f64 + 4.0));
    // keep every stencil node away from y = 0
    let reach = |h: f64| 0.5 * order.max(1) as f64 * h;
    while reach(h) > 0.5 * ynorm {
        h *= 0.5;
        if h < 1e-7 {
            return Err(FinslerError::StepUnderflow);
        }
    }
    let mut axes: Vec<(bool, usize, u32)> = Vec::new();
    for k in 0..n {
        if index.x_orders[k] > 0 {
            axes.push((false, k, index.x_orders[k]));
        }
        if index.y_orders[k] > 0 {
            axes.push((true, k, index.y_orders[k]));
        }
    }
    let d1 = central(field, point, &axes, h)?;
    let d2 = central(field, point, &axes, h / 2.0)?;
    let d3 = central(field, point, &axes, h / 4.0)?;
    let r1 = (4.0 * d2 - d1) / 3.0;
    let r2 = (4.0 * d3 - d2) / 3.0;
    let fd_value = (16.0 * r2 - r1) / 15.0;
    let rel_residual = (ad_value - fd_value).abs() / ad_value.abs().max(1.0);
    Ok(FdComparison { ad_value, fd_value, rel_residual })
}

fn central(field: &dyn ScalarField, point: &SamplePoint, axes: &[(bool, usize, u32)], h: f64) -> Result<f64> {
    fn rec(
        field: &dyn ScalarField,
        x: &mut Vec<f64>,
        y: &mut Vec<f64>,
        axes: &[(bool, usize, u32)],
        h: f64,
    ) -> Result<f64> {
        let Some(&(is_y, k, m)) = axes.first() else {
            let v = field.eval(x, y)?;
            return if v.is_finite() { Ok(v) } else { Err(FinslerError::Domain("non-finite value in stencil".into())) };
        };
        let mut acc = 0.0;
        let mut binom = 1.0;
        for j in 0..=m {
            let offset = (m as f64 / 2.0 - j as f64) * h;
            let coord = if is_y { &mut y[k] } else { &mut x[k] };
            let saved = *coord;
            *coord = saved + offset;
            let v = rec(field, x, y, &axes[1..], h);
            let coord = if is_y { &mut y[k] } else { &mut x[k] };
            *coord = saved;
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * binom * v?;
            binom = binom * (m - j) as f64 / (j + 1) as f64;
        }
        Ok(acc / h.powi(m as i32))
    }
    let (mut x, mut y) = (point.x.clone(), point.y.clone());
    rec(field, &mut x, &mut y, axes, h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_jet(b: Budget) -> (Jet, Jet, Jet, Jet) {
        (
            Jet::var_x(2, b, 2.0, 0),
            Jet::var_x(2, b, 0.5, 1),
            Jet::var_y(2, b, 1.0, 0),
            Jet::var_y(2, b, 1.0, 1),
        )
    }

    #[test]
    fn tables_are_degree_sorted_prefixes() {
        let t = Table::get(3);
        assert_eq!(t.upto[0], 1);
        assert_eq!(t.upto[1], 4);
        assert_eq!(t.upto[2], 10);
        for w in t.monos.windows(2) {
            let d0: u8 = w[0].iter().sum();
            let d1: u8 = w[1].iter().sum();
            assert!(d0 <= d1);
        }
    }

    #[test]
    fn polynomial_partials() {
        let b = Budget::new(2, 4);
        let (x1, _x2, y1, y2) = sample_jet(b);
        let f = &(&y1 * &y1) + &(&(&x1 * &x1) * &(&y2 * &y2));
        assert_eq!(f.value(), 5.0);
        assert_eq!(f.partial(&MultiIndex::from_vars(2, &[0], &[])).unwrap(), 4.0);
        assert_eq!(f.partial(&MultiIndex::from_vars(2, &[0, 0], &[1, 1])).unwrap(), 4.0);
        assert_eq!(f.partial(&MultiIndex::from_vars(2, &[0], &[1])).unwrap(), 8.0);
        assert_eq!(f.partial(&MultiIndex::from_vars(2, &[], &[0, 0])).unwrap(), 2.0);
    }

    #[test]
    fn derivative_matches_partial() {
        let b = Budget::new(2, 4);
        let (x1, x2, y1, y2) = sample_jet(b);
        let f = (&(&x1 * &y2) + &(&x2 * &y1)).sqrt().unwrap().exp().unwrap();
        let g = f.dy(1).unwrap().dx(0).unwrap();
        let direct = f.partial(&MultiIndex::from_vars(2, &[0], &[1])).unwrap();
        assert!((g.value() - direct).abs() < 1e-14 * direct.abs().max(1.0));
    }

    #[test]
    fn budget_overflow_is_an_error() {
        let j = Jet::var_y(2, Budget::new(0, 1), 1.0, 0);
        let d = j.dy(0).unwrap();
        assert!(matches!(d.dy(0), Err(FinslerError::BudgetExceeded { .. })));
        assert!(matches!(j.dx(0), Err(FinslerError::BudgetExceeded { .. })));
    }

    #[test]
    fn compositions_invert_each_other() {
        let b = Budget::new(2, 3);
        let (x1, _, y1, y2) = sample_jet(b);
        let a = &(&x1 * &y1) + &(&y2 * &y2);
        let back = a.ln().unwrap().exp().unwrap();
        assert!((&back - &a).max_abs() < 1e-13);
        let sq = a.sqrt().unwrap();
        assert!((&(&sq * &sq) - &a).max_abs() < 1e-13);
        let one = &a * &a.recip().unwrap();
        assert!((&one - &Jet::constant(2, b, 1.0)).max_abs() < 1e-13);
        let s = a.sin().unwrap();
        let c = a.cos().unwrap();
        assert!((&(&(&s * &s) + &(&c * &c)) - &Jet::constant(2, b, 1.0)).max_abs() < 1e-13);
        let p = a.powf(1.5).unwrap();
        assert!((&(&p * &p) - &a.powi(3).unwrap()).max_abs() < 1e-12);
    }

    #[test]
    fn domain_violation_reported() {
        let b = Budget::new(0, 2);
        let z = Jet::constant(2, b, 0.0);
        assert!(matches!(z.recip(), Err(FinslerError::Domain(_))));
        assert!(matches!(z.ln(), Err(FinslerError::Domain(_))));
        assert!(matches!(z.sqrt(), Err(FinslerError::Domain(_))));
    }

    #[test]
    fn truncation_and_mixed_budgets() {
        let (x1, _, y1, _) = sample_jet(Budget::new(2, 4));
        let small = Jet::var_y(2, Budget::new(1, 2), 1.0, 0);
        let p = &(&x1 * &y1) * &small;
        assert_eq!(p.budget(), Budget::new(1, 2));
        let full = &(&x1 * &y1) * &y1;
        assert_eq!(p.c, full.truncate(Budget::new(1, 2)).c);
    }
}
