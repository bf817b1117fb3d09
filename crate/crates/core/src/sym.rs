//! Packed symmetric tensors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::inertia;
use crate::tensor::{increment, Field, Hypermatrix, Matrix, Vector, C64, ONE, ZERO};
use crate::tolerance::TolerancePolicy;

/// Number of nondecreasing sequences of length `len` over `m` symbols.
pub fn multiset_count(m: usize, len: usize) -> usize {
    if len == 0 {
        return 1;
    }
    if m == 0 {
        return 0;
    }
    binomial(m + len - 1, len)
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// Lexicographic position of a nondecreasing multi-index.
pub fn packed_index(n: usize, sorted: &[usize]) -> usize {
    let d = sorted.len();
    let mut pos = 0;
    let mut lo = 0;
    for (k, &ik) in sorted.iter().enumerate() {
        let rem = d - k - 1;
        for j in lo..ik {
            pos += multiset_count(n - j, rem);
        }
        lo = ik;
    }
    pos
}

/// All nondecreasing multi-indices in lexicographic order.
pub fn sorted_indices(n: usize, d: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(multiset_count(n, d));
    let mut idx = vec![0usize; d];
    loop {
        out.push(idx.clone());
        let mut k = d;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if idx[k] + 1 < n {
                idx[k] += 1;
                let v = idx[k];
                for x in &mut idx[k + 1..] {
                    *x = v;
                }
                break;
            }
        }
    }
}

/// Element of `Sᵈ(Fⁿ)` stored by its independent coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymTensor {
    dim: usize,
    order: usize,
    field: Field,
    packed: Vec<C64>,
}

impl SymTensor {
    pub fn new(dim: usize, order: usize, field: Field, packed: Vec<C64>) -> Result<Self> {
        if dim < 2 || order < 2 {
            return Err(Error::InvalidParameter(format!(
                "symmetric tensor needs n >= 2 and d >= 2, got n={dim}, d={order}"
            )));
        }
        let len = multiset_count(dim, order);
        if packed.len() != len {
            return Err(Error::Shape(format!(
                "S^{order}(F^{dim}) has {len} coefficients, got {}",
                packed.len()
            )));
        }
        if field == Field::Real && packed.iter().any(|x| x.im != 0.0) {
            return Err(Error::InvalidParameter(
                "real tensor with nonzero imaginary part".into(),
            ));
        }
        Ok(Self {
            dim,
            order,
            field,
            packed,
        })
    }

    pub fn zeros(dim: usize, order: usize, field: Field) -> Self {
        Self {
            dim,
            order,
            field,
            packed: vec![ZERO; multiset_count(dim, order)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn packed(&self) -> &[C64] {
        &self.packed
    }

    /// Entry at an arbitrary (unsorted) multi-index.
    pub fn get(&self, idx: &[usize]) -> C64 {
        let mut s = idx.to_vec();
        s.sort_unstable();
        self.packed[packed_index(self.dim, &s)]
    }

    pub fn shape(&self) -> Vec<usize> {
        vec![self.dim; self.order]
    }

    /// `Σ λ_k v_k^{⊗d}` accumulated into `self`.
    pub fn add_power(&mut self, lambda: C64, v: &Vector) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::Shape(format!(
                "vector of length {} for dimension {}",
                v.len(),
                self.dim
            )));
        }
        for (slot, idx) in self.packed.iter_mut().zip(sorted_indices(self.dim, self.order)) {
            *slot += idx.iter().fold(lambda, |acc, &i| acc * v[i]);
        }
        self.field = self
            .field
            .join(Field::of_scalar(lambda))
            .join(Field::of_slice(v.as_slice()));
        Ok(())
    }

    pub fn norm(&self) -> f64 {
        self.embed().norm()
    }

    pub fn embed(&self) -> Hypermatrix {
        sym_embed(self)
    }
}

/// `λ · v^{⊗d}`.
pub fn sym_power(v: &Vector, d: usize, lambda: C64) -> Result<SymTensor> {
    let field = Field::of_scalar(lambda).join(Field::of_slice(v.as_slice()));
    let mut s = SymTensor::zeros(v.len(), d, field);
    s.add_power(lambda, v)?;
    Ok(s)
}

pub fn sym_embed(s: &SymTensor) -> Hypermatrix {
    Hypermatrix::from_fn(&s.shape(), s.field, |idx| s.get(idx))
}

/// Largest deviation of `A` from its symmetrization.
pub fn asymmetry(a: &Hypermatrix) -> Result<f64> {
    let n = a.shape()[0];
    if a.shape().iter().any(|&m| m != n) {
        return Err(Error::Shape(format!("{:?} is not cubical", a.shape())));
    }
    let avg = symmetrize(a);
    let mut worst: f64 = 0.0;
    let mut idx = vec![0; a.order()];
    for x in a.data() {
        let mut s = idx.clone();
        s.sort_unstable();
        worst = worst.max((x - avg[packed_index(n, &s)]).norm());
        increment(&mut idx, a.shape());
    }
    Ok(worst)
}

fn symmetrize(a: &Hypermatrix) -> Vec<C64> {
    let n = a.shape()[0];
    let len = multiset_count(n, a.order());
    let mut sums = vec![ZERO; len];
    let mut counts = vec![0u32; len];
    let mut idx = vec![0; a.order()];
    for x in a.data() {
        let mut s = idx.clone();
        s.sort_unstable();
        let p = packed_index(n, &s);
        sums[p] += x;
        counts[p] += 1;
        increment(&mut idx, a.shape());
    }
    sums.iter()
        .zip(&counts)
        .map(|(s, &c)| s / c as f64)
        .collect()
}

/// Packs a symmetric hypermatrix, averaging each index orbit.
pub fn sym_extract(a: &Hypermatrix, tol: &TolerancePolicy) -> Result<SymTensor> {
    a.ensure_finite()?;
    let asym = asymmetry(a)?;
    let allowed = tol.eps_rel * a.norm();
    if asym > allowed {
        return Err(Error::NotSymmetric {
            asymmetry: asym,
            allowed,
        });
    }
    SymTensor::new(a.shape()[0], a.order(), a.field(), symmetrize(a))
}

/// Reshape of an even-order symmetric tensor into the square
/// `n^{d/2} × n^{d/2}` matrix pairing the first and last `d/2` slots.
pub fn middle_flattening(s: &SymTensor) -> Result<Matrix> {
    if !s.order.is_multiple_of(2) {
        return Err(Error::InvalidParameter("middle flattening needs even order".into()));
    }
    let side = s.dim.pow((s.order / 2) as u32);
    let full = s.embed();
    Ok(Matrix::from_row_slice(side, side, full.data()))
}

/// Signature `(positive, negative)` of an even-order real symmetric tensor read
/// from the inertia of its middle flattening, with the eigenvalue margin.
pub fn flattening_inertia(s: &SymTensor, tol: &TolerancePolicy) -> Result<(usize, usize, f64)> {
    if s.field != Field::Real {
        return Err(Error::InvalidParameter("signature is defined over the reals".into()));
    }
    Ok(inertia(&middle_flattening(s)?, tol))
}

/// Decomposition `Σ λ_k v_k^{⊗d}` with unit vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymRankDecomposition {
    pub dim: usize,
    pub order: usize,
    pub field: Field,
    pub terms: Vec<(C64, Vector)>,
}

impl SymRankDecomposition {
    /// Normalizes each vector to unit length, moving `‖v‖^d` into the coefficient.
    pub fn new(order: usize, field: Field, terms: Vec<(C64, Vector)>) -> Result<Self> {
        let dim = terms
            .first()
            .map(|(_, v)| v.len())
            .ok_or_else(|| Error::InvalidParameter("empty decomposition".into()))?;
        let mut out = Vec::with_capacity(terms.len());
        for (lambda, v) in terms {
            if v.len() != dim {
                return Err(Error::Shape("terms of different dimension".into()));
            }
            let n = v.norm();
            if n.is_nan() || n <= 0.0 {
                return Err(Error::InvalidParameter("zero vector in decomposition".into()));
            }
            out.push((lambda * n.powi(order as i32), v.unscale(n)));
        }
        let field = out.iter().fold(field, |f, (l, v)| {
            f.join(Field::of_scalar(*l)).join(Field::of_slice(v.as_slice()))
        });
        Ok(Self {
            dim,
            order,
            field,
            terms: out,
        })
    }

    pub fn rank(&self) -> usize {
        self.terms.len()
    }

    pub fn to_sym_tensor(&self) -> SymTensor {
        let mut s = SymTensor::zeros(self.dim, self.order, self.field);
        for (lambda, v) in &self.terms {
            s.add_power(*lambda, v).expect("dimensions checked at construction");
        }
        s.field = self.field;
        s
    }
}

/// `v^{⊗k}` flattened to a vector of length `n^k`, row-major.
pub fn tensor_power_vector(v: &Vector, k: usize) -> Vector {
    let mut out = Vector::from_element(1, ONE);
    for _ in 0..k {
        let n = out.len();
        out = Vector::from_fn(n * v.len(), |i, _| out[i / v.len()] * v[i % v.len()]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{re, real_vector};

    #[test]
    fn packed_lengths_and_order() {
        assert_eq!(multiset_count(4, 4), 35);
        let idx = sorted_indices(3, 2);
        assert_eq!(idx.len(), 6);
        assert_eq!(idx[1], vec![0, 1]);
        for (p, s) in idx.iter().enumerate() {
            assert_eq!(packed_index(3, s), p);
        }
        let idx = sorted_indices(4, 3);
        for (p, s) in idx.iter().enumerate() {
            assert_eq!(packed_index(4, s), p);
        }
    }

    #[test]
    fn all_ones_square() {
        let s = sym_power(&real_vector(&[1.0, 1.0]), 2, re(1.0)).unwrap();
        let a = s.embed();
        assert!(a.data().iter().all(|&x| x == re(1.0)));
    }

    #[test]
    fn embed_extract_round_trip() {
        let mut s = sym_power(&real_vector(&[1.0, -2.0, 0.5]), 3, re(2.0)).unwrap();
        s.add_power(re(-1.0), &real_vector(&[0.3, 0.1, 1.0])).unwrap();
        let a = s.embed();
        let back = sym_extract(&a, &TolerancePolicy::default()).unwrap();
        assert!(back.embed().dist(&a).unwrap() < 1e-15);
        assert_eq!(a.permute(&[2, 0, 1]).unwrap(), a);
    }

    #[test]
    fn extract_rejects_asymmetric() {
        let a = Hypermatrix::from_real(&[2, 2], &[1.0, 2.0, 0.0, 1.0]).unwrap();
        assert!(matches!(
            sym_extract(&a, &TolerancePolicy::default()),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn signature_from_inertia() {
        let d = SymRankDecomposition::new(
            4,
            Field::Real,
            vec![
                (re(1.0), real_vector(&[1.0, 0.0, 0.0])),
                (re(-1.0), real_vector(&[0.0, 1.0, 1.0])),
            ],
        )
        .unwrap();
        let (p, n, _) = flattening_inertia(&d.to_sym_tensor(), &TolerancePolicy::default()).unwrap();
        assert_eq!((p, n), (1, 1));
    }
}
