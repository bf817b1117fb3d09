//! Grassmannian points, principal angles, geodesics and Tucker coordinates.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{complement, eye, orthonormality_defect, orthonormalize, svd};
use crate::mrank::{mrank, MultilinearRank};
use crate::tensor::{re, Field, Hypermatrix, Matrix, Vector};
use crate::tolerance::TolerancePolicy;

/// A subspace of `Fⁿ` given by an orthonormal frame (`n × r`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrassmannPoint {
    frame: Matrix,
}

impl GrassmannPoint {
    pub fn new(frame: Matrix) -> Result<Self> {
        if frame.ncols() > frame.nrows() {
            return Err(Error::Shape(format!(
                "frame {}x{} has more columns than rows",
                frame.nrows(),
                frame.ncols()
            )));
        }
        let defect = orthonormality_defect(&frame);
        if defect > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "frame is not orthonormal (defect {defect:.3e})"
            )));
        }
        Ok(Self { frame })
    }

    /// Orthonormalizes an arbitrary full-column-rank basis.
    pub fn from_basis(basis: &Matrix) -> Result<Self> {
        let q = orthonormalize(basis);
        if q.ncols() != basis.ncols() {
            return Err(Error::Degenerate("basis is rank deficient".into()));
        }
        Ok(Self { frame: q })
    }

    pub fn frame(&self) -> &Matrix {
        &self.frame
    }

    pub fn ambient_dim(&self) -> usize {
        self.frame.nrows()
    }

    pub fn rank(&self) -> usize {
        self.frame.ncols()
    }

    pub fn field(&self) -> Field {
        Field::of_slice(self.frame.as_slice())
    }
}

fn check_compatible(u: &Matrix, v: &Matrix) -> Result<()> {
    if u.shape() != v.shape() {
        return Err(Error::Shape(format!(
            "subspaces {}x{} and {}x{}",
            u.nrows(),
            u.ncols(),
            v.nrows(),
            v.ncols()
        )));
    }
    Ok(())
}

/// Principal angles in ascending order (cosines nonincreasing).
pub fn principal_angles(u: &GrassmannPoint, v: &GrassmannPoint) -> Result<Vec<f64>> {
    let (u, v) = (u.frame(), v.frame());
    check_compatible(u, v)?;
    let r = u.ncols();
    if r == 0 {
        return Ok(Vec::new());
    }
    let cos = svd(&(u.adjoint() * v)).s;
    let resid = v - u * (u.adjoint() * v);
    let mut sin = svd(&resid).s;
    sin.reverse();
    Ok((0..r)
        .map(|k| {
            let c = cos[k].min(1.0);
            if c * c < 0.5 {
                c.acos()
            } else {
                sin[k].min(1.0).asin()
            }
        })
        .collect())
}

/// Geodesic `Y(t) = (U·P·cos Θt + Q·sin Θt)·Pᴴ` in a Grassmannian, with the
/// frame transported along it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geodesic {
    start: Matrix,
    p: Matrix,
    q: Matrix,
    angles: Vec<f64>,
    /// Change of basis with `frame_at(1) = end · w`.
    w: Matrix,
    end: Matrix,
}

impl Geodesic {
    /// Geodesic from `u` to `v`; the transported frame starts at `u`'s frame.
    pub fn between(u: &GrassmannPoint, v: &GrassmannPoint) -> Result<Self> {
        let (uf, vf) = (u.frame(), v.frame());
        check_compatible(uf, vf)?;
        let r = uf.ncols();
        let m = uf.adjoint() * vf;
        let d = svd(&m);
        let p = d.u;
        let rr = d.v;
        let raw = (vf - uf * &m) * &rr;
        let mut q = Matrix::zeros(uf.nrows(), r);
        let mut angles = Vec::with_capacity(r);
        for k in 0..r {
            let col = raw.column(k);
            let s = col.norm();
            let theta = s.atan2(d.s[k]);
            angles.push(theta);
            if s > 1e-14 {
                q.set_column(k, &col.unscale(s));
            }
        }
        let w = &rr * p.adjoint();
        Ok(Self {
            start: uf.clone(),
            p,
            q,
            angles,
            w,
            end: vf.clone(),
        })
    }

    /// Constant path at `u`.
    pub fn constant(u: &GrassmannPoint) -> Self {
        let r = u.rank();
        Self {
            start: u.frame().clone(),
            p: eye(r),
            q: Matrix::zeros(u.ambient_dim(), r),
            angles: vec![0.0; r],
            w: eye(r),
            end: u.frame().clone(),
        }
    }

    /// Closed loop at `u` that rotates column `col` through a complement
    /// direction by π, so the frame returns with that column negated.
    pub fn flip_loop(u: &GrassmannPoint, col: usize) -> Result<Self> {
        let (n, r) = (u.ambient_dim(), u.rank());
        if r >= n {
            return Err(Error::InvalidParameter(
                "orientation loop needs a proper subspace".into(),
            ));
        }
        if col >= r {
            return Err(Error::InvalidParameter(format!("column {col} out of range")));
        }
        let c = complement(u.frame());
        let mut q = Matrix::zeros(n, r);
        q.set_column(col, &c.column(0));
        let mut angles = vec![0.0; r];
        angles[col] = PI;
        let mut w = eye(r);
        w[(col, col)] = re(-1.0);
        Ok(Self {
            start: u.frame().clone(),
            p: eye(r),
            q,
            angles,
            w,
            end: u.frame().clone(),
        })
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// The change of basis `W` with `frame_at(1) = end_frame · W`.
    pub fn end_change_of_basis(&self) -> &Matrix {
        &self.w
    }

    pub fn end_frame(&self) -> &Matrix {
        &self.end
    }

    pub fn start_frame(&self) -> &Matrix {
        &self.start
    }

    pub fn frame_at(&self, t: f64) -> Matrix {
        let r = self.angles.len();
        let mut c = Matrix::zeros(r, r);
        let mut s = Matrix::zeros(r, r);
        for (k, &theta) in self.angles.iter().enumerate() {
            c[(k, k)] = re((theta * t).cos());
            s[(k, k)] = re((theta * t).sin());
        }
        (&self.start * &self.p * c + &self.q * s) * self.p.adjoint()
    }

    pub fn point_at(&self, t: f64) -> GrassmannPoint {
        GrassmannPoint {
            frame: self.frame_at(t),
        }
    }
}

/// Span of the top-`r` left singular vectors of the mode flattening.
pub fn dominant_subspace(
    a: &Hypermatrix,
    mode: usize,
    r: usize,
    tol: &TolerancePolicy,
) -> Result<GrassmannPoint> {
    a.ensure_finite()?;
    let flat = a.flatten(mode)?;
    let d = svd(&flat);
    if r == 0 || r > d.s.len() {
        return Err(Error::InvalidParameter(format!(
            "subspace dimension {r} for a mode of size {}",
            flat.nrows()
        )));
    }
    let s1 = d.s[0];
    let cut = s1 * flat.nrows().max(flat.ncols()) as f64 * tol.eps_rel;
    if s1 == 0.0 || d.s[r - 1] <= cut {
        return Err(Error::Tolerance(format!(
            "mode {mode} has numerical rank below {r}"
        )));
    }
    let next = d.s.get(r).copied().unwrap_or(0.0);
    if (d.s[r - 1] - next) / s1 < tol.gap_min {
        return Err(Error::Tolerance(format!(
            "mode {mode}: singular value gap at {r} below gap_min"
        )));
    }
    let u = d.u.columns(0, r).into_owned();
    let u = if a.field() == Field::Real {
        u.map(|x| re(x.re))
    } else {
        u
    };
    Ok(GrassmannPoint { frame: u })
}

/// Kempf–Weyman coordinates: frames plus a core of shape `(r₁,…,r_d)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuckerRep {
    pub frames: Vec<GrassmannPoint>,
    pub core: Hypermatrix,
}

impl TuckerRep {
    pub fn new(frames: Vec<GrassmannPoint>, core: Hypermatrix) -> Result<Self> {
        if frames.len() != core.order()
            || frames.iter().zip(core.shape()).any(|(f, &r)| f.rank() != r)
        {
            return Err(Error::Shape("frames do not match the core shape".into()));
        }
        Ok(Self { frames, core })
    }

    pub fn ranks(&self) -> MultilinearRank {
        MultilinearRank(self.core.shape().to_vec())
    }

    pub fn shape(&self) -> Vec<usize> {
        self.frames.iter().map(|f| f.ambient_dim()).collect()
    }

    pub fn field(&self) -> Field {
        self.frames
            .iter()
            .fold(self.core.field(), |f, g| f.join(g.field()))
    }

    pub fn expand(&self) -> Hypermatrix {
        tucker_expand(self)
    }
}

pub fn tucker_expand(t: &TuckerRep) -> Hypermatrix {
    let mats: Vec<Matrix> = t.frames.iter().map(|f| f.frame().clone()).collect();
    t.core
        .multilinear(&mats)
        .expect("frames match core shape")
        .with_field(t.field())
}

/// Projects `A` onto its dominant per-mode subspaces.
pub fn tucker_compress(a: &Hypermatrix, ranks: &[usize], tol: &TolerancePolicy) -> Result<TuckerRep> {
    let info = mrank(a, tol)?;
    if info.ranks.0 != ranks {
        return Err(Error::MrankMismatch {
            expected: ranks.to_vec(),
            found: info.ranks.0,
        });
    }
    if info.min_margin() < tol.gap_min {
        return Err(Error::Tolerance(format!(
            "flattening margin {:.3e} below gap_min",
            info.min_margin()
        )));
    }
    let frames = (0..a.order())
        .map(|mode| dominant_subspace(a, mode, ranks[mode], tol))
        .collect::<Result<Vec<_>>>()?;
    let adj: Vec<Matrix> = frames.iter().map(|f| f.frame().adjoint()).collect();
    let core = a.multilinear(&adj)?.with_field(a.field());
    Ok(TuckerRep { frames, core })
}

/// Symmetric compression: one frame from the mode-1 flattening shared by all modes.
pub fn sym_compress(a: &Hypermatrix, r: usize, tol: &TolerancePolicy) -> Result<TuckerRep> {
    let info = mrank(a, tol)?;
    let want = vec![r; a.order()];
    if info.ranks.0 != want {
        return Err(Error::MrankMismatch {
            expected: want,
            found: info.ranks.0,
        });
    }
    if info.min_margin() < tol.gap_min {
        return Err(Error::Tolerance(format!(
            "flattening margin {:.3e} below gap_min",
            info.min_margin()
        )));
    }
    let u = dominant_subspace(a, 0, r, tol)?;
    let adj = vec![u.frame().adjoint(); a.order()];
    let core = a.multilinear(&adj)?.with_field(a.field());
    Ok(TuckerRep {
        frames: vec![u; a.order()],
        core,
    })
}

/// Unit vector along one column of a frame.
pub fn frame_column(f: &GrassmannPoint, k: usize) -> Vector {
    f.frame().column(k).into_owned()
}

/// Returns true when every entry of a frame is real.
pub fn frame_is_real(m: &Matrix) -> bool {
    m.iter().all(|x| x.im == 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{gaussian_matrix, rng_from_seed};
    use crate::tensor::{basis_vector, outer_product, ONE};

    fn span(cols: &[Vector]) -> GrassmannPoint {
        GrassmannPoint::from_basis(&Matrix::from_columns(cols)).unwrap()
    }

    #[test]
    fn equal_subspaces_have_zero_angles() {
        let mut rng = rng_from_seed(1);
        let u = GrassmannPoint::from_basis(&gaussian_matrix(5, 2, Field::Real, &mut rng)).unwrap();
        let a = principal_angles(&u, &u).unwrap();
        assert!(a.iter().all(|&x| x < 1e-12));
        let g = Geodesic::between(&u, &u).unwrap();
        assert!((g.frame_at(0.5) - u.frame()).norm() < 1e-12);
    }

    #[test]
    fn right_angle_pair() {
        let u = span(&[basis_vector(3, 0), basis_vector(3, 1)]);
        let v = span(&[basis_vector(3, 0), basis_vector(3, 2)]);
        let a = principal_angles(&u, &v).unwrap();
        assert!(a[0].abs() < 1e-15);
        assert!((a[1] - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn midpoint_of_coordinate_lines() {
        let u = span(&[basis_vector(2, 0)]);
        let v = span(&[basis_vector(2, 1)]);
        let g = Geodesic::between(&u, &v).unwrap();
        let m = g.frame_at(0.5);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((m[(0, 0)].norm() - h).abs() < 1e-15);
        assert!((m[(1, 0)].norm() - h).abs() < 1e-15);
        assert!((m[(0, 0)] - m[(1, 0)]).norm() < 1e-15);
    }

    #[test]
    fn geodesic_end_matches_with_basis_change() {
        let mut rng = rng_from_seed(2);
        for field in [Field::Real, Field::Complex] {
            let u = GrassmannPoint::from_basis(&gaussian_matrix(6, 3, field, &mut rng)).unwrap();
            let v = GrassmannPoint::from_basis(&gaussian_matrix(6, 3, field, &mut rng)).unwrap();
            let g = Geodesic::between(&u, &v).unwrap();
            assert!((g.frame_at(0.0) - u.frame()).norm() < 1e-12);
            let end = g.frame_at(1.0);
            assert!((&end - v.frame() * g.end_change_of_basis()).norm() < 1e-12);
            assert!(orthonormality_defect(g.end_change_of_basis()) < 1e-12);
            for k in 0..=10 {
                assert!(orthonormality_defect(&g.frame_at(k as f64 / 10.0)) < 1e-12);
            }
            let a = principal_angles(&g.point_at(1.0), &v).unwrap();
            assert!(a.iter().all(|&x| x < 1e-10));
        }
    }

    #[test]
    fn flip_loop_negates_a_column() {
        let u = span(&[basis_vector(3, 0), basis_vector(3, 1)]);
        let g = Geodesic::flip_loop(&u, 1).unwrap();
        let end = g.frame_at(1.0);
        assert!((end.column(0) - u.frame().column(0)).norm() < 1e-15);
        assert!((end.column(1) + u.frame().column(1)).norm() < 1e-15);
        let a = principal_angles(&g.point_at(1.0), &u).unwrap();
        assert!(a.iter().all(|&x| x < 1e-12));
    }

    #[test]
    fn dominant_subspace_of_rank_one() {
        let e = |i| basis_vector(2, i);
        let a = outer_product(ONE, &[e(0), e(0), e(0)], Field::Real);
        let tol = TolerancePolicy::default();
        let u = dominant_subspace(&a, 0, 1, &tol).unwrap();
        assert!((u.frame()[(0, 0)].norm() - 1.0).abs() < 1e-15);
        assert!(dominant_subspace(&a, 0, 2, &tol).is_err());
    }

    #[test]
    fn compress_rank_one_to_scalar_core() {
        let e = |i| basis_vector(2, i);
        let a = outer_product(ONE, &[e(0), e(0), e(0)], Field::Real);
        let t = tucker_compress(&a, &[1, 1, 1], &TolerancePolicy::default()).unwrap();
        assert_eq!(t.core.shape(), &[1, 1, 1]);
        assert!((t.core.data()[0].norm() - 1.0).abs() < 1e-15);
        assert!(tucker_compress(&a, &[2, 1, 1], &TolerancePolicy::default()).is_err());
    }
}
