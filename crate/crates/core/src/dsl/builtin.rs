use nalgebra::{DMatrix, DVector};

use crate::dsl::ast::Expr;
use crate::dsl::model::{Domain, ModelSpec};
use crate::error::{FinslerError, Result};

/// Parameterized metric families expanded into an `L2` expression.
#[derive(Debug, Clone, PartialEq)]
pub enum BuiltinFamily {
    Euclidean { dim: usize },
    /// `L^2 = a_ij(x) y^i y^j`.
    Riemannian { a: Vec<Vec<Expr>> },
    /// `L = sqrt(a_ij y^i y^j) + b_i(x) y^i`.
    Randers { a: Vec<Vec<Expr>>, b: Vec<Expr> },
    /// `L^2 = sqrt(c_ijkl y^i y^j y^k y^l)`, coefficients flattened row-major (n^4 entries).
    Quartic { dim: usize, coeffs: Vec<f64> },
}

fn quadratic_form(a: &[Vec<Expr>]) -> Expr {
    let n = a.len();
    Expr::sum((0..n).flat_map(|i| {
        (0..n).map(move |j| Expr::mul(Expr::mul(a[i][j].clone(), Expr::y(i)), Expr::y(j)))
    }))
}

fn matrix_at(a: &[Vec<Expr>], x: &[f64]) -> Result<DMatrix<f64>> {
    let n = a.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = a[i][j].eval(x, &[])?;
        }
    }
    Ok(m)
}

fn check_riemannian(a: &[Vec<Expr>], domain: &Domain) -> Result<()> {
    let n = a.len();
    if a.iter().any(|r| r.len() != n) {
        return Err(FinslerError::InvalidModel("metric matrix must be square".into()));
    }
    for s in domain.probe_grid() {
        let m = matrix_at(a, &s.x)?;
        if (&m - m.transpose()).amax() > 1e-12 * m.amax().max(1.0) {
            return Err(FinslerError::Positivity(format!("metric matrix not symmetric at x = {:?}", s.x)));
        }
        if m.cholesky().is_none() {
            return Err(FinslerError::Positivity(format!("metric matrix not positive definite at x = {:?}", s.x)));
        }
    }
    Ok(())
}

fn is_x_only(e: &Expr) -> bool {
    let mut ok = true;
    e.for_each_var(&mut |v| ok &= matches!(v, crate::dsl::ast::Var::X(_)));
    ok
}

/// Expands a family into a validated model on the default domain.
pub fn builtin(family: &BuiltinFamily) -> Result<ModelSpec> {
    let (name, dim, l2) = match family {
        BuiltinFamily::Euclidean { dim } => {
            ("euclidean", *dim, Expr::sum((0..*dim).map(|i| Expr::pow(Expr::y(i), Expr::num(2.0)))))
        }
        BuiltinFamily::Riemannian { a } => {
            if !a.iter().flatten().all(is_x_only) {
                return Err(FinslerError::InvalidModel("metric entries must depend on x only".into()));
            }
            check_riemannian(a, &Domain::default_for(a.len()))?;
            ("riemannian", a.len(), quadratic_form(a))
        }
        BuiltinFamily::Randers { a, b } => {
            let n = a.len();
            if b.len() != n {
                return Err(FinslerError::InvalidModel("b must have one component per dimension".into()));
            }
            if !a.iter().flatten().chain(b).all(is_x_only) {
                return Err(FinslerError::InvalidModel("Randers data must depend on x only".into()));
            }
            let domain = Domain::default_for(n);
            check_riemannian(a, &domain)?;
            for s in domain.probe_grid() {
                let m = matrix_at(a, &s.x)?;
                let bv = DVector::from_iterator(n, b.iter().map(|e| e.eval(&s.x, &[])).collect::<Result<Vec<_>>>()?);
                let inv = m.try_inverse().ok_or_else(|| FinslerError::Positivity("singular metric matrix".into()))?;
                let norm2 = (bv.transpose() * inv * &bv)[(0, 0)];
                if !(norm2 < 1.0) {
                    return Err(FinslerError::Positivity(format!(
                        "|b|_a = {:.6} >= 1 at x = {:?}",
                        norm2.sqrt(),
                        s.x
                    )));
                }
            }
            let alpha = Expr::call(crate::dsl::ast::Func::Sqrt, quadratic_form(a));
            let beta = Expr::sum((0..n).map(|i| Expr::mul(b[i].clone(), Expr::y(i))));
            ("randers", n, Expr::pow(Expr::add(alpha, beta), Expr::num(2.0)))
        }
        BuiltinFamily::Quartic { dim, coeffs } => {
            let n = *dim;
            if coeffs.len() != n.pow(4) {
                return Err(FinslerError::InvalidModel(format!("quartic needs {} coefficients", n.pow(4))));
            }
            let mut terms = Vec::new();
            for (flat, c) in coeffs.iter().enumerate().filter(|(_, c)| **c != 0.0) {
                let idx = [flat / n.pow(3), (flat / n.pow(2)) % n, (flat / n) % n, flat % n];
                let mono = idx.iter().fold(Expr::num(*c), |acc, &k| Expr::mul(acc, Expr::y(k)));
                terms.push(mono);
            }
            ("quartic", n, Expr::call(crate::dsl::ast::Func::Sqrt, Expr::sum(terms)))
        }
    };
    if dim == 0 {
        return Err(FinslerError::InvalidModel("dimension must be positive".into()));
    }
    let spec = ModelSpec::from_expr(name, dim, l2);
    spec.validate().map_err(|e| match e {
        FinslerError::NonPositive { .. } => FinslerError::Positivity(e.to_string()),
        other => other,
    })?;
    Ok(spec)
}

/// Constant matrix entries.
pub fn constant_matrix(rows: &[&[f64]]) -> Vec<Vec<Expr>> {
    rows.iter().map(|r| r.iter().map(|v| Expr::num(*v)).collect()).collect()
}
