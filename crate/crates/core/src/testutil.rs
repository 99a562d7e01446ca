use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::field::FieldDesc;
use crate::geometry::PointSet;

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform random subset of F_q^d of the given size.
pub(crate) fn random_set(field: &FieldDesc, dim: usize, size: usize, rng: &mut ChaCha8Rng) -> PointSet {
    let grid = (field.q() as u64).pow(dim as u32) as usize;
    let codes = sample(rng, grid, size.min(grid)).into_iter().map(|c| c as u64);
    PointSet::from_codes(field, dim, codes).unwrap()
}

pub(crate) fn field(p: u64, n: u32) -> FieldDesc {
    crate::field::make_field(p, n, None).unwrap()
}
