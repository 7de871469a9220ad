use sparse_fkrige::basis::smooth;
use sparse_fkrige::io::euclidean;
use sparse_fkrige::simgen::{generate_coefficients, generate_longitudinal, SimulationDesign};

fn design(range: f64) -> SimulationDesign {
    SimulationDesign {
        range,
        seed: 5,
        ..SimulationDesign::default()
    }
}

#[test]
fn smoothing_residuals_have_noise_scale() {
    let d = design(5.0);
    let field = generate_coefficients(&d, 0).unwrap();
    let (locations, table) = generate_longitudinal(&field, &d, 0).unwrap();
    let basis = d.basis().unwrap();
    let data = smooth(&table, &locations, &basis, 0.0).unwrap();
    let (mut ss, mut count) = (0.0, 0usize);
    for i in 0..data.len() {
        let s = table.series(i);
        let fitted = data.evaluate_site(i, &s.times).unwrap();
        ss += s.values.iter().zip(&fitted).map(|(y, f)| (y - f).powi(2)).sum::<f64>();
        count += s.len();
    }
    let sd = (ss / count as f64).sqrt();
    assert!((0.2..=0.4).contains(&sd), "residual sd {sd}");
}

#[test]
fn observation_noise_has_requested_sd() {
    let d = design(5.0);
    let basis = d.basis().unwrap();
    let times = d.times();
    let (mut ss, mut count) = (0.0, 0usize);
    for rep in 0..4 {
        let field = generate_coefficients(&d, rep).unwrap();
        let (_, table) = generate_longitudinal(&field, &d, rep).unwrap();
        for (i, &site) in field.observed.iter().enumerate() {
            let w: Vec<f64> = field.truth.row(site).iter().copied().collect();
            let clean = basis.evaluate_function(&w, &times).unwrap();
            ss += table
                .series(i)
                .values
                .iter()
                .zip(&clean)
                .map(|(y, c)| (y - c).powi(2))
                .sum::<f64>();
            count += clean.len();
        }
    }
    let sd = (ss / count as f64).sqrt();
    assert!((sd - 0.3).abs() <= 0.05 * 0.3, "noise sd {sd}");
}

#[test]
fn vanishing_range_gives_independent_coefficients_with_sill_variance() {
    let d = design(1e-9);
    let (mut ss, mut count) = (0.0, 0usize);
    for rep in 0..200 {
        let field = generate_coefficients(&d, rep).unwrap();
        ss += field.truth.iter().map(|v| v * v).sum::<f64>();
        count += field.truth.len();
    }
    let var = ss / count as f64;
    assert!((var - 2.0).abs() <= 0.2, "variance {var}");
}

#[test]
fn trace_variogram_of_the_field_is_stationary_exponential() {
    let d = design(0.5);
    let gram = d.basis().unwrap().gram_matrix();
    let trace: f64 = gram.diagonal().sum();
    let step = 1.0 / (d.grid_side - 1) as f64;
    let field0 = generate_coefficients(&d, 0).unwrap();
    let locs = &field0.locations;
    for lag in [1usize, 3] {
        let r = lag as f64 * step;
        let pairs: Vec<(usize, usize)> = (0..locs.len())
            .flat_map(|i| (0..locs.len()).map(move |j| (i, j)))
            .filter(|&(i, j)| i < j && (euclidean(locs.coords(i), locs.coords(j)) - r).abs() < 1e-9)
            .collect();
        let mut total = 0.0;
        for rep in 0..100 {
            let field = generate_coefficients(&d, rep).unwrap();
            for &(i, j) in &pairs {
                let diff = (field.truth.row(i) - field.truth.row(j)).transpose();
                total += 0.5 * (diff.transpose() * &gram * &diff)[(0, 0)];
            }
        }
        let mean = total / (100 * pairs.len()) as f64;
        let expected = trace * d.sill * (1.0 - (-r / d.range).exp());
        assert!(
            (mean - expected).abs() <= 0.15 * expected,
            "lag {lag}: {mean} vs {expected}"
        );
    }
}
