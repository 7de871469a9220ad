#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sparse_fkrige::ofk::build_system;
use sparse_fkrige::{
    BasisDescriptor, FunctionalDataset, KrigingSystem, LocationSet, Site, VariogramFamily, VariogramModel,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_sites(rng: &mut ChaCha8Rng, n: usize, side: f64) -> LocationSet {
    let sites = (0..n)
        .map(|i| Site {
            id: format!("s{i}"),
            coords: vec![rng.random_range(0.0..side), rng.random_range(0.0..side)],
        })
        .collect();
    LocationSet::new(sites).unwrap()
}

/// Coefficient fields drawn independently per basis function from a
/// zero-mean Gaussian field with covariance `model.covariance`.
pub fn gaussian_dataset(
    rng: &mut ChaCha8Rng,
    locations: LocationSet,
    basis: BasisDescriptor,
    model: &VariogramModel,
) -> FunctionalDataset {
    let n = locations.len();
    let cov = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            model.sigma_tot()
        } else {
            model.covariance(sparse_fkrige::io::euclidean(locations.coords(i), locations.coords(j)))
        }
    });
    let l = cov.cholesky().expect("covariance is positive definite").l();
    let m = basis.size();
    let mut coefs = DMatrix::zeros(n, m);
    for k in 0..m {
        let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        coefs.set_column(k, &(&l * z));
    }
    FunctionalDataset::new(locations, basis, coefs).unwrap()
}

pub fn exponential(nugget: f64, psill: f64, range: f64) -> VariogramModel {
    VariogramModel::new(VariogramFamily::Exponential, nugget, psill, range).unwrap()
}

/// Random sites, a random exponential model and a random target.
pub fn random_system(rng: &mut ChaCha8Rng, n: usize) -> KrigingSystem {
    let locations = random_sites(rng, n, 10.0);
    let model = exponential(
        rng.random_range(0.0..0.2),
        rng.random_range(0.5..3.0),
        rng.random_range(0.5..8.0),
    );
    let s0 = [rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)];
    build_system(&model, &locations.coord_slices(), &s0).unwrap()
}
