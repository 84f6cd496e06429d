//! Dense component arrays in a chart.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::jets::Jet;

/// Dense row-major array; the index order is documented where each tensor is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor<T = f64> {
    shape: Vec<usize>,
    data: Vec<T>,
}

fn offset(shape: &[usize], idx: &[usize]) -> usize {
    debug_assert_eq!(shape.len(), idx.len(), "rank mismatch");
    idx.iter().zip(shape).fold(0, |acc, (&i, &s)| {
        debug_assert!(i < s, "index {i} out of range {s}");
        acc * s + i
    })
}

/// All multi-indices of a shape in row-major order.
pub fn indices(shape: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let total: usize = shape.iter().product();
    (0..total).map(move |mut flat| {
        let mut idx = vec![0; shape.len()];
        for (slot, &s) in idx.iter_mut().zip(shape).rev() {
            *slot = flat % s;
            flat /= s;
        }
        idx
    })
}

impl<T> Tensor<T> {
    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> T) -> Self {
        let data = indices(shape).map(|i| f(&i)).collect();
        Self { shape: shape.to_vec(), data }
    }

    pub fn try_from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> Result<T>) -> Result<Self> {
        let data = indices(shape).map(|i| f(&i)).collect::<Result<Vec<_>>>()?;
        Ok(Self { shape: shape.to_vec(), data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn get(&self, idx: &[usize]) -> &T {
        &self.data[offset(&self.shape, idx)]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Tensor<U> {
        Tensor { shape: self.shape.clone(), data: self.data.iter().map(f).collect() }
    }

    pub fn try_map<U>(&self, f: impl FnMut(&T) -> Result<U>) -> Result<Tensor<U>> {
        Ok(Tensor { shape: self.shape.clone(), data: self.data.iter().map(f).collect::<Result<_>>()? })
    }

    pub fn iter_indexed(&self) -> impl Iterator<Item = (Vec<usize>, &T)> + '_ {
        indices(&self.shape).zip(&self.data)
    }
}

impl<T, const K: usize> Index<[usize; K]> for Tensor<T> {
    type Output = T;
    fn index(&self, idx: [usize; K]) -> &T {
        &self.data[offset(&self.shape, &idx)]
    }
}

impl<T, const K: usize> IndexMut<[usize; K]> for Tensor<T> {
    fn index_mut(&mut self, idx: [usize; K]) -> &mut T {
        let o = offset(&self.shape, &idx);
        &mut self.data[o]
    }
}

impl Tensor<f64> {
    pub fn zeros(shape: &[usize]) -> Self {
        Self { shape: shape.to_vec(), data: vec![0.0; shape.iter().product()] }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest componentwise difference.
    pub fn max_abs_diff(&self, other: &Tensor) -> f64 {
        assert_eq!(self.shape, other.shape, "shape mismatch");
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn zip_with(&self, other: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
        assert_eq!(self.shape, other.shape, "shape mismatch");
        Tensor { shape: self.shape.clone(), data: self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect() }
    }

    pub fn sub(&self, other: &Tensor) -> Tensor {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Tensor) -> Tensor {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scale(&self, s: f64) -> Tensor {
        self.map(|v| v * s)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Rows of a rank-2 tensor.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        assert_eq!(self.rank(), 2);
        self.data.chunks(self.shape[1]).map(<[f64]>::to_vec).collect()
    }
}

impl Tensor<Jet> {
    /// Values at the expansion point.
    pub fn values(&self) -> Tensor {
        self.map(Jet::value)
    }
}
