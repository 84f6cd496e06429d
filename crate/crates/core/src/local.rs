//! Jets of the metric-level objects around one sample point.
//!
//! Everything downstream (connections, curvature, derivative identities) is
//! assembled from these jets, so every derivative is exact. Each step eats
//! part of the budget: with `L^2` at `(bx, by)` the metric is known to
//! `(bx, by-2)`, the spray to `(bx-1, by-2)` and the Barthel connection to
//! `(bx-1, by-3)`.

use nalgebra::DMatrix;

use crate::dsl::ModelSpec;
use crate::error::{FinslerError, Result};
use crate::jets::{jet_evaluate, Budget, Jet};
use crate::point::SamplePoint;
use crate::tensor::Tensor;

/// Condition-number guard on `g`.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct LocalGeometry {
    pub point: SamplePoint,
    pub budget: Budget,
    pub l2: Jet,
    /// `g_ij`.
    pub g: Tensor<Jet>,
    /// `g^ij`.
    pub ginv: Tensor<Jet>,
    /// `C_ijk`, all indices down.
    pub cartan: Tensor<Jet>,
    /// `G^i`.
    pub spray: Vec<Jet>,
    /// `N^i_j` at `[i, j]`.
    pub barthel: Tensor<Jet>,
}

/// Inverse of a matrix of jets by Gauss-Jordan elimination, pivoting on values.
pub fn invert(m: &Tensor<Jet>) -> Result<Tensor<Jet>> {
    let n = m.shape()[0];
    let budget = m.data()[0].budget();
    let mut a: Vec<Vec<Jet>> = (0..n).map(|i| (0..n).map(|j| m[[i, j]].clone()).collect()).collect();
    let mut inv: Vec<Vec<Jet>> = (0..n)
        .map(|i| (0..n).map(|j| Jet::constant(n, budget, if i == j { 1.0 } else { 0.0 })).collect())
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&p, &q| a[p][col].value().abs().total_cmp(&a[q][col].value().abs()))
            .unwrap_or(col);
        if a[piv][col].value() == 0.0 {
            return Err(FinslerError::SingularMetric(f64::INFINITY));
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let r = a[col][col].recip()?;
        for j in 0..n {
            a[col][j] = &a[col][j] * &r;
            inv[col][j] = &inv[col][j] * &r;
        }
        for row in 0..n {
            if row == col || a[row][col].max_abs() == 0.0 {
                continue;
            }
            let f = a[row][col].clone();
            for j in 0..n {
                a[row][j] = &a[row][j] - &(&f * &a[col][j]);
                inv[row][j] = &inv[row][j] - &(&f * &inv[col][j]);
            }
        }
    }
    Ok(Tensor::from_fn(&[n, n], |i| inv[i[0]][i[1]].clone()))
}

/// 2-norm condition number of a symmetric matrix.
pub fn condition_number(g: &Tensor) -> f64 {
    let n = g.shape()[0];
    let m = DMatrix::from_fn(n, n, |i, j| g[[i, j]]);
    let sv = m.singular_values();
    let (lo, hi) = (sv.min(), sv.max());
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

impl LocalGeometry {
    /// Smallest budget accepted: one x-derivative of the spray and three
    /// y-derivatives of `L^2`.
    pub const MIN_BUDGET: Budget = Budget::new(1, 3);

    pub fn new(model: &ModelSpec, s: &SamplePoint, budget: Budget) -> Result<Self> {
        if !budget.contains(Self::MIN_BUDGET) {
            return Err(FinslerError::BudgetExceeded {
                requested: Self::MIN_BUDGET.to_string(),
                available: budget.to_string(),
            });
        }
        if !s.is_valid() {
            return Err(FinslerError::Domain(format!("invalid sample x = {:?}, y = {:?}", s.x, s.y)));
        }
        let n = s.dim();
        let l2 = jet_evaluate(model, s, budget)?;
        if !(l2.value() > 0.0) {
            return Err(FinslerError::NonPositive { value: l2.value(), x: s.x.clone(), y: s.y.clone() });
        }
        let dl: Vec<Jet> = (0..n).map(|i| l2.dy(i)).collect::<Result<_>>()?;
        let g = Tensor::try_from_fn(&[n, n], |i| Ok(dl[i[0]].dy(i[1])?.scale(0.5)))?;
        let cond = condition_number(&g.values());
        if !(cond <= MAX_CONDITION) {
            return Err(FinslerError::SingularMetric(cond));
        }
        let ginv = invert(&g)?;
        let cartan = Tensor::try_from_fn(&[n, n, n], |i| Ok(g[[i[0], i[1]]].dy(i[2])?.scale(0.5)))?;

        // G^i = 1/4 g^{il} (y^k d_{x^k} d_{y^l} L^2 - d_{x^l} L^2)
        let by = budget.y;
        let yv: Vec<Jet> = (0..n).map(|k| Jet::var_y(n, budget, s.y[k], k)).collect();
        let mut rhs = Vec::with_capacity(n);
        for l in 0..n {
            let mut acc = -l2.dx(l)?;
            for (k, yk) in yv.iter().enumerate() {
                acc = acc + yk * &dl[l].dx(k)?;
            }
            rhs.push(acc.truncate(Budget::new(budget.x - 1, by - 2)));
        }
        let spray: Vec<Jet> = (0..n)
            .map(|i| {
                let mut acc = Jet::constant(n, Budget::new(budget.x - 1, by - 2), 0.0);
                for (l, r) in rhs.iter().enumerate() {
                    acc = acc + &ginv[[i, l]] * r;
                }
                acc.scale(0.25)
            })
            .collect();
        let barthel = Tensor::try_from_fn(&[n, n], |i| spray[i[0]].dy(i[1]))?;
        Ok(Self { point: s.clone(), budget, l2, g, ginv, cartan, spray, barthel })
    }

    pub fn dim(&self) -> usize {
        self.point.dim()
    }

    /// `y^k` as a jet.
    pub fn y_jet(&self, k: usize) -> Jet {
        Jet::var_y(self.dim(), self.budget, self.point.y[k], k)
    }

    /// `delta_k f = d_{x^k} f - N^m_k d_{y^m} f`.
    pub fn delta(&self, f: &Jet, k: usize) -> Result<Jet> {
        let mut acc = f.dx(k)?;
        for m in 0..self.dim() {
            acc = acc - &self.barthel[[m, k]] * &f.dy(m)?;
        }
        Ok(acc)
    }

    /// `C^i_jk = g^{il} C_ljk` at `[i, j, k]`.
    pub fn cartan_mixed(&self) -> Tensor<Jet> {
        let n = self.dim();
        Tensor::from_fn(&[n, n, n], |i| raise_first(&self.ginv, &self.cartan, i[0], &[i[1], i[2]]))
    }

    /// Barthel curvature `R^i_ab = delta_a N^i_b - delta_b N^i_a` at `[i, a, b]`.
    pub fn barthel_curvature(&self) -> Result<Tensor<Jet>> {
        let n = self.dim();
        Tensor::try_from_fn(&[n, n, n], |i| {
            let (c, a, b) = (i[0], i[1], i[2]);
            Ok(self.delta(&self.barthel[[c, b]], a)? - self.delta(&self.barthel[[c, a]], b)?)
        })
    }
}

/// `sum_l m[i,l] t[l, rest...]` for jets.
pub fn raise_first(m: &Tensor<Jet>, t: &Tensor<Jet>, i: usize, rest: &[usize]) -> Jet {
    let n = m.shape()[0];
    let mut idx = Vec::with_capacity(rest.len() + 1);
    let mut acc: Option<Jet> = None;
    for l in 0..n {
        idx.clear();
        idx.push(l);
        idx.extend_from_slice(rest);
        let term = &m[[i, l]] * t.get(&idx);
        acc = Some(match acc {
            None => term,
            Some(a) => a + term,
        });
    }
    acc.expect("dimension is positive")
}
