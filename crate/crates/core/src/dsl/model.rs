use serde::{Deserialize, Serialize};

use crate::dsl::ast::{Expr, Var};
use crate::error::{FinslerError, Result};
use crate::jets::{Budget, Jet, ScalarField};
use crate::point::SamplePoint;

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn excludes_zero(&self) -> bool {
        self.lo > 0.0 || self.hi < 0.0
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Sampling box for `x` and `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub x: Vec<Interval>,
    pub y: Vec<Interval>,
}

impl Domain {
    /// `x` in `[-1, 1]`, `y` in `[0.5, 2]` on every axis.
    pub fn default_for(n: usize) -> Self {
        Self { x: vec![Interval::new(-1.0, 1.0); n], y: vec![Interval::new(0.5, 2.0); n] }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn contains(&self, s: &SamplePoint) -> bool {
        s.x.iter().zip(&self.x).all(|(v, i)| i.contains(*v)) && s.y.iter().zip(&self.y).all(|(v, i)| i.contains(*v))
    }

    /// The box keeps `y` away from the zero vector as long as one
    /// y-interval excludes zero.
    pub fn excludes_zero_direction(&self) -> bool {
        self.y.iter().any(Interval::excludes_zero)
    }

    pub fn lo_corner(&self) -> SamplePoint {
        SamplePoint::new(
            self.x.iter().map(|i| i.lo).collect::<Vec<_>>(),
            self.y.iter().map(|i| i.lo).collect::<Vec<_>>(),
        )
    }

    pub fn hi_corner(&self) -> SamplePoint {
        SamplePoint::new(
            self.x.iter().map(|i| i.hi).collect::<Vec<_>>(),
            self.y.iter().map(|i| i.hi).collect::<Vec<_>>(),
        )
    }

    /// Tensor grid with `k` nodes per axis (endpoints included), `k^(2n)` points.
    pub fn grid(&self, k: usize) -> Vec<SamplePoint> {
        assert!(k >= 1);
        let axes: Vec<Interval> = self.x.iter().chain(&self.y).copied().collect();
        let node = |iv: &Interval, j: usize| {
            if k == 1 {
                iv.mid()
            } else {
                iv.lo + (iv.hi - iv.lo) * j as f64 / (k - 1) as f64
            }
        };
        let total = k.pow(axes.len() as u32);
        let n = self.dim();
        (0..total)
            .map(|mut code| {
                let coords: Vec<f64> = axes
                    .iter()
                    .map(|iv| {
                        let j = code % k;
                        code /= k;
                        node(iv, j)
                    })
                    .collect();
                SamplePoint::new(coords[..n].to_vec(), coords[n..].to_vec())
            })
            .collect()
    }

    /// The deterministic 3^(2n) validation grid.
    pub fn probe_grid(&self) -> Vec<SamplePoint> {
        self.grid(3)
    }
}

/// How `L^2` is defined.
#[derive(Debug, Clone, PartialEq)]
pub enum Lagrangian {
    Expr(Expr),
    /// `L^2 + B^2` with `B = 1/2 zeta^i dL^2/dy^i = g(zeta, eta)` of the base.
    EnergyBetaChange { base: Box<Lagrangian>, zeta: Vec<Expr> },
}

impl Lagrangian {
    pub fn eval_jet(&self, x: &[f64], y: &[f64], budget: Budget) -> Result<Jet> {
        match self {
            Lagrangian::Expr(e) => e.eval_jet(x, y, budget),
            Lagrangian::EnergyBetaChange { base, zeta } => {
                let wide = base.eval_jet(x, y, Budget::new(budget.x, budget.y + 1))?;
                let mut b = Jet::constant(x.len(), budget, 0.0);
                for (i, z) in zeta.iter().enumerate() {
                    let zi = z.eval_jet(x, y, budget)?;
                    b = b + zi * wide.dy(i)?;
                }
                let b = b.scale(0.5);
                Ok(wide.truncate(budget) + &b * &b)
            }
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        match self {
            Lagrangian::Expr(e) => e.eval(x, y),
            _ => Ok(self.eval_jet(x, y, Budget::new(0, 0))?.value()),
        }
    }
}

/// A model: dimension, `L^2`, optional field `zeta(x)` and a sampling box.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub name: String,
    pub dim: usize,
    pub lagrangian: Lagrangian,
    pub zeta: Option<Vec<Expr>>,
    pub domain: Domain,
    /// Source text when the model came from a file.
    pub source: Option<String>,
}

impl ScalarField for ModelSpec {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.lagrangian.eval(x, y)
    }

    fn eval_jet(&self, x: &[f64], y: &[f64], budget: Budget) -> Result<Jet> {
        self.lagrangian.eval_jet(x, y, budget)
    }
}

impl ModelSpec {
    pub fn from_expr(name: impl Into<String>, dim: usize, l2: Expr) -> Self {
        Self {
            name: name.into(),
            dim,
            lagrangian: Lagrangian::Expr(l2),
            zeta: None,
            domain: Domain::default_for(dim),
            source: None,
        }
    }

    pub fn with_zeta(mut self, zeta: Vec<Expr>) -> Self {
        self.zeta = Some(zeta);
        self
    }

    pub fn without_zeta(mut self) -> Self {
        self.zeta = None;
        self
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn l2(&self, s: &SamplePoint) -> Result<f64> {
        self.lagrangian.eval(&s.x, &s.y)
    }

    /// `zeta(x)`, if declared.
    pub fn zeta_at(&self, x: &[f64]) -> Option<Result<Vec<f64>>> {
        self.zeta.as_ref().map(|z| z.iter().map(|e| e.eval(x, &[])).collect())
    }

    /// Jets of the `zeta` components (x-dependent only).
    pub fn zeta_jets(&self, s: &SamplePoint, budget: Budget) -> Result<Vec<Jet>> {
        let z = self.zeta.as_ref().ok_or(FinslerError::ZetaRequired)?;
        z.iter().map(|e| e.eval_jet(&s.x, &s.y, budget)).collect()
    }

    fn check_vars(&self, e: &Expr, zeta_component: Option<usize>) -> Result<()> {
        let mut err = None;
        e.for_each_var(&mut |v| {
            if err.is_some() {
                return;
            }
            let i = match v {
                Var::X(i) | Var::Y(i) => i,
            };
            if i >= self.dim {
                err = Some(FinslerError::VariableOutOfRange { name: v.to_string(), dim: self.dim });
            } else if let (Some(c), Var::Y(_)) = (zeta_component, v) {
                err = Some(FinslerError::ZetaDependsOnY { component: c + 1, name: v.to_string() });
            }
        });
        err.map_or(Ok(()), Err)
    }

    fn check_lagrangian_vars(&self, l: &Lagrangian) -> Result<()> {
        match l {
            Lagrangian::Expr(e) => self.check_vars(e, None),
            Lagrangian::EnergyBetaChange { base, zeta } => {
                self.check_lagrangian_vars(base)?;
                zeta.iter().enumerate().try_for_each(|(i, z)| self.check_vars(z, Some(i)))
            }
        }
    }

    /// Structural checks plus positivity and 2-homogeneity on the probe grid.
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(FinslerError::InvalidModel("dimension must be positive".into()));
        }
        if self.domain.x.len() != self.dim || self.domain.y.len() != self.dim {
            return Err(FinslerError::InvalidModel("domain dimension mismatch".into()));
        }
        self.check_lagrangian_vars(&self.lagrangian)?;
        if let Some(z) = &self.zeta {
            if z.len() != self.dim {
                return Err(FinslerError::InvalidModel(format!(
                    "zeta has {} components, expected {}",
                    z.len(),
                    self.dim
                )));
            }
            for (i, e) in z.iter().enumerate() {
                self.check_vars(e, Some(i))?;
            }
        }
        if !self.domain.excludes_zero_direction() {
            return Err(FinslerError::InvalidModel(
                "the y-box contains the zero vector; bound at least one y-interval away from 0".into(),
            ));
        }
        for s in self.domain.probe_grid() {
            let v = self.l2(&s)?;
            if !(v > 0.0) || !v.is_finite() {
                return Err(FinslerError::NonPositive { value: v, x: s.x, y: s.y });
            }
            for lambda in [2.0, 0.5] {
                let w = self.l2(&s.scaled(lambda))?;
                let defect = (w - lambda * lambda * v).abs() / (lambda * lambda * v);
                if !(defect <= 1e-10) {
                    return Err(FinslerError::NotHomogeneous { defect, x: s.x, y: s.y });
                }
            }
            if let Some(z) = self.zeta_at(&s.x) {
                if z?.iter().any(|v| !v.is_finite()) {
                    return Err(FinslerError::Domain(format!("zeta is not finite at x = {:?}", s.x)));
                }
            }
        }
        Ok(())
    }

    /// Human-readable `L2 = ...` line (only for expression Lagrangians).
    pub fn l2_expr(&self) -> Option<&Expr> {
        match &self.lagrangian {
            Lagrangian::Expr(e) => Some(e),
            _ => None,
        }
    }

    /// Pretty-prints the model back into the file format.
    pub fn to_source(&self) -> Option<String> {
        let l2 = self.l2_expr()?;
        let mut s = format!("dim {}\nname \"{}\"\nL2 = {}\n", self.dim, self.name, l2);
        if let Some(z) = &self.zeta {
            let parts: Vec<String> = z.iter().map(|e| e.to_string()).collect();
            s.push_str(&format!("zeta = ({})\n", parts.join(", ")));
        }
        s.push_str("domain");
        for (i, iv) in self.domain.x.iter().enumerate() {
            s.push_str(&format!(" x{} in [{:?}, {:?}]", i + 1, iv.lo, iv.hi));
        }
        for (i, iv) in self.domain.y.iter().enumerate() {
            s.push_str(&format!(" y{} in [{:?}, {:?}]", i + 1, iv.lo, iv.hi));
        }
        s.push('\n');
        Some(s)
    }
}
