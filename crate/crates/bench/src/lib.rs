//! Shared inputs for the criterion benchmarks in `benches/`.

use morrey_core::corpus::{corpus_functions, CorpusSpec};
use morrey_core::cube::{enumerate_cubes, finest_scale};
use morrey_core::{CubeFamily, Domain, GridFunction};

pub const SEED: u64 = 42;

/// A grid on `[-8, 8]^n` with its full closed dyadic family from `J = -3`.
pub fn grid(n: usize, points: usize) -> (Domain, CubeFamily) {
    let d = Domain::new(n, 8.0, points).expect("valid grid");
    let fam = enumerate_cubes(&d, -3, finest_scale(&d)).expect("valid scales");
    (d, fam)
}

/// First nonzero member of a seeded corpus.
pub fn sample(d: &Domain) -> GridFunction {
    corpus_functions(&CorpusSpec::new(SEED, 4), d)
        .expect("corpus samples")
        .into_iter()
        .find(|f| !f.is_zero())
        .expect("nonzero member")
}
