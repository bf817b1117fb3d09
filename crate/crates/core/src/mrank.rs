use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::numerical_rank;
use crate::tensor::Hypermatrix;
use crate::tolerance::TolerancePolicy;

/// The tuple of flattening ranks `(r₁, …, r_d)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultilinearRank(pub Vec<usize>);

impl MultilinearRank {
    pub fn new(ranks: Vec<usize>) -> Result<Self> {
        let m = Self(ranks);
        if m.0.len() < 2 {
            return Err(Error::InvalidParameter("multilinear rank needs d >= 2".into()));
        }
        if !m.is_admissible() {
            return Err(Error::InvalidParameter(format!(
                "multilinear rank {:?} is not admissible",
                m.0
            )));
        }
        Ok(m)
    }

    pub fn ranks(&self) -> &[usize] {
        &self.0
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    /// Product of all ranks except mode `i`.
    pub fn others(&self, i: usize) -> usize {
        self.0
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &r)| r)
            .product()
    }

    /// `r_i ≤ ∏_{j≠i} r_j` for every mode.
    pub fn is_admissible(&self) -> bool {
        (0..self.0.len()).all(|i| self.0[i] <= self.others(i))
    }

    pub fn fits(&self, shape: &[usize]) -> bool {
        shape.len() == self.0.len() && self.0.iter().zip(shape).all(|(r, n)| r <= n)
    }

    /// Modes whose core flattening is square: `r_i = ∏_{j≠i} r_j`.
    pub fn square_modes(&self) -> Vec<usize> {
        (0..self.0.len())
            .filter(|&i| self.0[i] == self.others(i))
            .collect()
    }
}

impl std::fmt::Display for MultilinearRank {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|r| r.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Flattening ranks together with their margins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MrankInfo {
    pub ranks: MultilinearRank,
    pub margins: Vec<f64>,
    /// False signals a tolerance problem: exact flattening ranks are always admissible.
    pub admissible: bool,
}

impl MrankInfo {
    pub fn min_margin(&self) -> f64 {
        self.margins.iter().copied().fold(1.0, f64::min)
    }
}

pub fn mrank(a: &Hypermatrix, tol: &TolerancePolicy) -> Result<MrankInfo> {
    a.ensure_finite()?;
    let mut ranks = Vec::with_capacity(a.order());
    let mut margins = Vec::with_capacity(a.order());
    for mode in 0..a.order() {
        let info = numerical_rank(&a.flatten(mode)?, tol)?;
        ranks.push(info.rank);
        margins.push(info.margin);
    }
    let ranks = MultilinearRank(ranks);
    Ok(MrankInfo {
        admissible: ranks.is_admissible(),
        ranks,
        margins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{basis_vector, outer_product, Field, ONE};

    #[test]
    fn rank_one_and_diagonal() {
        let e = |i| basis_vector(2, i);
        let a = outer_product(ONE, &[e(0), e(0), e(0)], Field::Real);
        let tol = TolerancePolicy::default();
        assert_eq!(mrank(&a, &tol).unwrap().ranks.0, vec![1, 1, 1]);
        let mut b = a.clone();
        b.add_scaled(ONE, &outer_product(ONE, &[e(1), e(1), e(1)], Field::Real))
            .unwrap();
        let info = mrank(&b, &tol).unwrap();
        assert_eq!(info.ranks.0, vec![2, 2, 2]);
        assert_eq!(info.min_margin(), 1.0);
    }

    #[test]
    fn zero_tensor() {
        let z = Hypermatrix::zeros(&[2, 3], Field::Real);
        let info = mrank(&z, &TolerancePolicy::default()).unwrap();
        assert_eq!(info.ranks.0, vec![0, 0]);
        assert!(info.admissible);
    }

    #[test]
    fn admissibility() {
        assert!(MultilinearRank::new(vec![4, 2, 2]).is_ok());
        assert!(MultilinearRank::new(vec![5, 2, 2]).is_err());
        assert_eq!(MultilinearRank(vec![4, 2, 2]).square_modes(), vec![0]);
        assert_eq!(MultilinearRank(vec![2, 2]).square_modes(), vec![0, 1]);
        assert!(MultilinearRank(vec![6, 2, 3]).square_modes() == vec![0]);
    }
}
