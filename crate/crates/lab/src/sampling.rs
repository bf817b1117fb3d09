//! One random point of a stratum.

use ttk_core::sample::{
    gaussian, sample_fixed_mrank, sample_rank_r, sample_sym_fixed_mrank, sample_sym_rank_r, TtkRng,
};
use ttk_core::stratum::{StratumDescriptor, StratumKind};
use ttk_core::{Field, Hypermatrix, Result, TolerancePolicy};

/// Draws a point of `s`. Real even-order symmetric ranks get independent
/// random coefficient signs, so every signature appears.
pub fn sample_point(s: &StratumDescriptor, rng: &mut TtkRng, tol: &TolerancePolicy) -> Result<Hypermatrix> {
    s.validate()?;
    let d = s.order();
    let n = s.dim();
    match &s.kind {
        StratumKind::Rank(r) | StratumKind::BorderRank(r) => Ok(sample_rank_r(&s.shape, *r, s.field, rng, tol)?.0),
        StratumKind::SymRank(r) | StratumKind::SymBorderRank(r) => {
            let signature = if s.field == Field::Real && d.is_multiple_of(2) {
                (0..*r).filter(|_| gaussian(rng) > 0.0).count()
            } else {
                0
            };
            Ok(sample_sym_rank_r(n, d, *r, signature, s.field, rng, tol)?.0.embed())
        }
        StratumKind::MultilinearRank(rs) => Ok(sample_fixed_mrank(&s.shape, rs, s.field, rng, tol)?.0),
        StratumKind::SymMultilinearRank(r) => Ok(sample_sym_fixed_mrank(n, d, *r, s.field, rng, tol)?.0.embed()),
    }
}
