//! Benchmark fixtures.

use std::sync::Arc;

use polyga::algebra::builtin;
use polyga::fields::{gamma_from_prescribed, RandomField};
use polyga::geodesics::{extremal_from_direction, second_order_start};
use polyga::h4::metric_connection;
use polyga::{ConnectionField, ExtremalState, FinslerConfig, GAPair, GeodesicState, Orientation, StructureConstants};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn algebra(name: &str) -> Arc<StructureConstants> {
    Arc::new(builtin(name).expect("known builtin"))
}

/// A prescribed-derivative pair with a fixed seed.
pub fn random_pair(s: Arc<StructureConstants>, seed: u64) -> GAPair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = s.n();
    let f = RandomField::sample(n, &mut rng).field();
    let fp = RandomField::sample(n, &mut rng).field();
    gamma_from_prescribed(&f, &fp, s).expect("dimensions agree")
}

pub struct GeodesicFixture {
    pub metric: FinslerConfig,
    pub connection: ConnectionField,
    pub extremal: ExtremalState,
    pub geodesic: GeodesicState,
}

pub fn gaussian_fixture() -> GeodesicFixture {
    let metric = FinslerConfig::gaussian(2.5, 1.0);
    let extremal =
        extremal_from_direction(&metric, &[0.1, 0.2, 0.15, 0.05], &[1.0, 0.8, 1.2, 0.9]).expect("inside the cone");
    let geodesic = second_order_start(&metric, &extremal).expect("inside the cone");
    let connection = metric_connection(&metric, Orientation::Transposed);
    GeodesicFixture { metric, connection, extremal, geodesic }
}
