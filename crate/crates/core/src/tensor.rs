//! Dense hypermatrices over ℝ or ℂ.
//!
//! Entries are stored row-major (last index fastest) as complex numbers; a
//! `Field::Real` tensor keeps every imaginary part at exactly zero.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Matrix = DMatrix<C64>;
pub type Vector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

impl Field {
    pub fn join(self, other: Field) -> Field {
        if self == Field::Complex || other == Field::Complex {
            Field::Complex
        } else {
            Field::Real
        }
    }

    pub fn of_scalar(s: C64) -> Field {
        if s.im == 0.0 {
            Field::Real
        } else {
            Field::Complex
        }
    }

    pub fn of_slice(xs: &[C64]) -> Field {
        if xs.iter().all(|x| x.im == 0.0) {
            Field::Real
        } else {
            Field::Complex
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Field::Real => "real",
            Field::Complex => "complex",
        }
    }
}

impl std::fmt::Display for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(Field::Real),
            "complex" => Ok(Field::Complex),
            other => Err(Error::InvalidParameter(format!("unknown field `{other}`"))),
        }
    }
}

/// Dense order-d tensor in coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hypermatrix {
    shape: Vec<usize>,
    field: Field,
    data: Vec<C64>,
}

impl Hypermatrix {
    pub fn new(shape: Vec<usize>, field: Field, data: Vec<C64>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::Shape(format!("invalid shape {shape:?}")));
        }
        let len: usize = shape.iter().product();
        if data.len() != len {
            return Err(Error::Shape(format!(
                "shape {shape:?} needs {len} entries, got {}",
                data.len()
            )));
        }
        if field == Field::Real && data.iter().any(|x| x.im != 0.0) {
            return Err(Error::InvalidParameter(
                "real tensor with nonzero imaginary part".into(),
            ));
        }
        Ok(Self { shape, field, data })
    }

    pub fn zeros(shape: &[usize], field: Field) -> Self {
        let len = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            field,
            data: vec![ZERO; len],
        }
    }

    pub fn from_real(shape: &[usize], data: &[f64]) -> Result<Self> {
        Self::new(shape.to_vec(), Field::Real, data.iter().map(|&x| re(x)).collect())
    }

    /// Builds a tensor entry by entry; imaginary parts are dropped for `Field::Real`.
    pub fn from_fn(shape: &[usize], field: Field, mut f: impl FnMut(&[usize]) -> C64) -> Self {
        let len: usize = shape.iter().product();
        let mut idx = vec![0usize; shape.len()];
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f(&idx));
            increment(&mut idx, shape);
        }
        Self {
            shape: shape.to_vec(),
            field,
            data,
        }
        .sanitized()
    }

    /// Clears imaginary parts for real tensors.
    pub(crate) fn sanitized(mut self) -> Self {
        if self.field == Field::Real {
            for x in &mut self.data {
                x.im = 0.0;
            }
        }
        self
    }

    /// Reinterprets the tensor over `field`, dropping imaginary parts when narrowing.
    pub fn with_field(mut self, field: Field) -> Self {
        self.field = field;
        self.sanitized()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn get(&self, idx: &[usize]) -> C64 {
        self.data[self.offset(idx)]
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }

    pub(crate) fn ensure_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite)
        }
    }

    fn ensure_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::Shape(format!(
                "{:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            shape: self.shape.clone(),
            field: self.field.join(Field::of_scalar(s)),
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.ensure_same_shape(other)?;
        Ok(Self {
            shape: self.shape.clone(),
            field: self.field.join(other.field),
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.ensure_same_shape(other)?;
        Ok(Self {
            shape: self.shape.clone(),
            field: self.field.join(other.field),
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    /// `self += s * other`.
    pub fn add_scaled(&mut self, s: C64, other: &Self) -> Result<()> {
        self.ensure_same_shape(other)?;
        self.field = self.field.join(other.field).join(Field::of_scalar(s));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
        Ok(())
    }

    /// `(1 - t) a + t b`.
    pub fn lerp(a: &Self, b: &Self, t: f64) -> Result<Self> {
        a.ensure_same_shape(b)?;
        Ok(Self {
            shape: a.shape.clone(),
            field: a.field.join(b.field),
            data: a
                .data
                .iter()
                .zip(&b.data)
                .map(|(x, y)| x * (1.0 - t) + y * t)
                .collect(),
        })
    }

    /// Frobenius distance.
    pub fn dist(&self, other: &Self) -> Result<f64> {
        self.ensure_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    /// Distance relative to `‖self‖` (absolute when `self` is zero).
    pub fn rel_dist(&self, other: &Self) -> Result<f64> {
        let d = self.dist(other)?;
        let n = self.norm();
        Ok(if n > 0.0 { d / n } else { d })
    }

    pub fn conj(&self) -> Self {
        Self {
            shape: self.shape.clone(),
            field: self.field,
            data: self.data.iter().map(|x| x.conj()).collect(),
        }
    }

    /// Unfolding along `mode` (0-based): row `i` holds the entries with index
    /// `i` in slot `mode`; columns run row-major over the remaining modes in
    /// ascending order.
    pub fn flatten(&self, mode: usize) -> Result<Matrix> {
        let d = self.order();
        if mode >= d {
            return Err(Error::ModeOutOfRange { mode, order: d });
        }
        let n = self.shape[mode];
        let pre: usize = self.shape[..mode].iter().product();
        let post: usize = self.shape[mode + 1..].iter().product();
        let mut m = Matrix::zeros(n, pre * post);
        for p in 0..pre {
            for i in 0..n {
                let base = (p * n + i) * post;
                for q in 0..post {
                    m[(i, p * post + q)] = self.data[base + q];
                }
            }
        }
        Ok(m)
    }

    /// Inverse of [`flatten`](Self::flatten).
    pub fn fold(m: &Matrix, mode: usize, shape: &[usize], field: Field) -> Result<Self> {
        if mode >= shape.len() {
            return Err(Error::ModeOutOfRange {
                mode,
                order: shape.len(),
            });
        }
        let n = shape[mode];
        let pre: usize = shape[..mode].iter().product();
        let post: usize = shape[mode + 1..].iter().product();
        if m.nrows() != n || m.ncols() != pre * post {
            return Err(Error::Shape(format!(
                "cannot fold {}x{} into {shape:?} along mode {mode}",
                m.nrows(),
                m.ncols()
            )));
        }
        let mut data = vec![ZERO; n * pre * post];
        for p in 0..pre {
            for i in 0..n {
                let base = (p * n + i) * post;
                for q in 0..post {
                    data[base + q] = m[(i, p * post + q)];
                }
            }
        }
        Ok(Self {
            shape: shape.to_vec(),
            field,
            data,
        }
        .sanitized())
    }

    /// Multiplies mode `mode` by `m` (rows of `m` become the new mode size).
    pub fn mode_product(&self, mode: usize, m: &Matrix) -> Result<Self> {
        let flat = self.flatten(mode)?;
        if m.ncols() != flat.nrows() {
            return Err(Error::Shape(format!(
                "matrix with {} columns applied to mode of size {}",
                m.ncols(),
                flat.nrows()
            )));
        }
        let mut shape = self.shape.clone();
        shape[mode] = m.nrows();
        let field = self.field.join(Field::of_slice(m.as_slice()));
        Self::fold(&(m * flat), mode, &shape, field)
    }

    /// Applies one matrix per mode.
    pub fn multilinear(&self, mats: &[Matrix]) -> Result<Self> {
        if mats.len() != self.order() {
            return Err(Error::Shape(format!(
                "{} matrices for a tensor of order {}",
                mats.len(),
                self.order()
            )));
        }
        let mut out = self.clone();
        for (mode, m) in mats.iter().enumerate() {
            out = out.mode_product(mode, m)?;
        }
        Ok(out)
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Self> {
        Self::new(shape.to_vec(), self.field, self.data.clone())
    }

    /// Axis permutation: output axis `k` is input axis `perm[k]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let d = self.order();
        let mut seen = vec![false; d];
        if perm.len() != d || perm.iter().any(|&p| p >= d || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidParameter(format!("{perm:?} is not a permutation")));
        }
        let shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let mut src = vec![0usize; d];
        Ok(Self::from_fn(&shape, self.field, |idx| {
            for (k, &p) in perm.iter().enumerate() {
                src[p] = idx[k];
            }
            self.get(&src)
        }))
    }
}

/// Advances a row-major multi-index.
pub(crate) fn increment(idx: &mut [usize], shape: &[usize]) {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < shape[k] {
            return;
        }
        idx[k] = 0;
    }
}

/// A rank-one tensor `scalar · v₁ ⊗ ··· ⊗ v_d` with unit-norm factors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankOneFactors {
    pub scalar: C64,
    pub factors: Vec<Vector>,
}

impl RankOneFactors {
    /// Normalizes arbitrary nonzero factors, moving their norms into the scalar.
    pub fn new(scalar: C64, factors: Vec<Vector>) -> Result<Self> {
        if factors.len() < 2 {
            return Err(Error::InvalidParameter("rank-one tensor needs d >= 2".into()));
        }
        let mut scalar = scalar;
        let mut out = Vec::with_capacity(factors.len());
        for v in factors {
            let n = v.norm();
            if !n.is_finite() || n <= 0.0 {
                return Err(Error::InvalidParameter("zero or non-finite factor".into()));
            }
            scalar *= n;
            out.push(v.unscale(n));
        }
        Ok(Self {
            scalar,
            factors: out,
        })
    }

    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(|v| v.len()).collect()
    }

    pub fn field(&self) -> Field {
        self.factors
            .iter()
            .fold(Field::of_scalar(self.scalar), |f, v| f.join(Field::of_slice(v.as_slice())))
    }

    pub fn to_tensor(&self) -> Hypermatrix {
        outer_product(self.scalar, &self.factors, self.field())
    }
}

/// `scalar · v₁ ⊗ ··· ⊗ v_d`, evaluated entry by entry.
pub fn outer_product(scalar: C64, factors: &[Vector], field: Field) -> Hypermatrix {
    let shape: Vec<usize> = factors.iter().map(|v| v.len()).collect();
    Hypermatrix::from_fn(&shape, field, |idx| {
        idx.iter()
            .zip(factors)
            .fold(scalar, |acc, (&i, v)| acc * v[i])
    })
}

/// Unit basis vector `e_i` in dimension `n`.
pub fn basis_vector(n: usize, i: usize) -> Vector {
    let mut v = Vector::zeros(n);
    v[i] = ONE;
    v
}

/// Builds a complex vector from real entries.
pub fn real_vector(xs: &[f64]) -> Vector {
    Vector::from_iterator(xs.len(), xs.iter().map(|&x| re(x)))
}
