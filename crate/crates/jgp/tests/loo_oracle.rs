//! Leave-one-out identities against a brute-force oracle that deletes each
//! real row, refits from scratch, and predicts the deleted point.

use jgp::{
    gp_fit, jgp_fit, loo_terms, pseudo_log_likelihood, Hyperparameters, SourceLabels,
};
use ndarray::prelude::*;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn random_dataset(
    rng: &mut ChaCha8Rng,
    n: usize,
    d: usize,
    num_sources: usize,
) -> (Array2<f64>, Array1<f64>, SourceLabels) {
    let x = Array2::from_shape_fn((n, d), |_| rng.random_range(-2.0..2.0));
    let y = Array1::from_shape_fn(n, |_| rng.random_range(-1.5..1.5));
    // At least two real rows; remaining rows get sources assigned so every
    // source in 1..=num_sources appears.
    let mut labels = vec![0usize; n];
    if num_sources > 0 {
        for (j, l) in labels.iter_mut().enumerate().skip(2) {
            *l = 1 + (j - 2) % num_sources;
        }
    }
    labels.shuffle(rng);
    // Keep at least 2 real rows after the shuffle (guaranteed by counts).
    (x, y, SourceLabels::new(labels).unwrap())
}

fn random_hp(rng: &mut ChaCha8Rng, num_sources: usize) -> Hyperparameters {
    Hyperparameters::new(
        rng.random_range(0.3..3.0),
        rng.random_range(0.05..1.0),
        (0..num_sources).map(|_| rng.random_range(0.05..20.0)).collect(),
    )
    .unwrap()
}

/// Delete row i, refit, predict at x_i: the oracle for Eq.-6-style terms.
fn brute_force_loo(
    x: &Array2<f64>,
    y: &Array1<f64>,
    labels: &SourceLabels,
    hp: &Hyperparameters,
) -> (Vec<f64>, Vec<f64>) {
    let n = x.nrows();
    let mut means = Vec::new();
    let mut vars = Vec::new();
    for i in labels.real_indices() {
        let keep: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let xk = x.select(Axis(0), &keep);
        let yk = y.select(Axis(0), &keep);
        let lk =
            SourceLabels::new(keep.iter().map(|&j| labels.as_slice()[j]).collect()).unwrap();
        let model = jgp_fit(&xk, &yk, &lk, hp.clone()).unwrap();
        let p = &model.predict(&x.select(Axis(0), &[i])).unwrap()[0];
        means.push(p.mean);
        vars.push(p.variance);
    }
    (means, vars)
}

#[test]
fn jgp_loo_matches_bruteforce_on_mixed_labels() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for trial in 0..30 {
        let n = rng.random_range(5..=14);
        let sources = rng.random_range(0..=2usize);
        let (x, y, labels) = random_dataset(&mut rng, n, 2, sources);
        if labels.real_count() < 2 {
            continue;
        }
        let hp = random_hp(&mut rng, labels.num_sources());
        let model = jgp_fit(&x, &y, &labels, hp.clone()).unwrap();
        let t = loo_terms(&model).unwrap();
        let (means, vars) = brute_force_loo(&x, &y, &labels, &hp);
        for k in 0..t.indices.len() {
            assert!(
                (t.means[k] - means[k]).abs() < 1e-8,
                "trial {trial} mean: {} vs {}",
                t.means[k],
                means[k]
            );
            assert!(
                (t.variances[k] - vars[k]).abs() < 1e-8,
                "trial {trial} var: {} vs {}",
                t.variances[k],
                vars[k]
            );
        }
    }
}

#[test]
fn pseudo_likelihood_matches_oracle_densities() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for _ in 0..10 {
        let (x, y, labels) = random_dataset(&mut rng, 8, 1, 1);
        if labels.real_count() < 2 {
            continue;
        }
        let hp = random_hp(&mut rng, labels.num_sources());
        let model = jgp_fit(&x, &y, &labels, hp.clone()).unwrap();
        let ll = pseudo_log_likelihood(&model).unwrap();
        let (means, vars) = brute_force_loo(&x, &y, &labels, &hp);
        let oracle: f64 = labels
            .real_indices()
            .iter()
            .zip(means.iter().zip(&vars))
            .map(|(&i, (&mu, &var))| {
                -0.5 * (2.0 * std::f64::consts::PI * var).ln()
                    - (y[i] - mu) * (y[i] - mu) / (2.0 * var)
            })
            .sum();
        assert!((ll - oracle).abs() < 1e-8, "{ll} vs {oracle}");
    }
}

#[test]
fn plain_gp_loo_matches_bruteforce() {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    for _ in 0..10 {
        let n = rng.random_range(4..=12);
        let x = Array2::from_shape_fn((n, 1), |_| rng.random_range(-2.0..2.0));
        let y = Array1::from_shape_fn(n, |_| rng.random_range(-1.0..1.0));
        let hp = Hyperparameters::plain(
            rng.random_range(0.3..2.0),
            rng.random_range(0.1..0.8),
        )
        .unwrap();
        let model = gp_fit(&x, &y, hp.clone()).unwrap();
        let t = loo_terms(&model).unwrap();
        for (k, &i) in t.indices.iter().enumerate() {
            let keep: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            let m = gp_fit(&x.select(Axis(0), &keep), &y.select(Axis(0), &keep), hp.clone())
                .unwrap();
            let p = &m.predict(&x.select(Axis(0), &[i])).unwrap()[0];
            assert!((t.means[k] - p.mean).abs() < 1e-8);
            assert!((t.variances[k] - p.variance).abs() < 1e-8);
        }
    }
}
