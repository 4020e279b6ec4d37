use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tensorucb::tensor_model::{ContextTensor, PosteriorConfig, SusceptibilityPosterior};

fn random_vec(rng: &mut ChaCha8Rng, d: usize) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0))
}

/// Materializes `Σ_r ∘_l w^{l,r}` as a flat row-major array.
fn dense_cp(factors: &[Vec<DVector<f64>>]) -> Vec<f64> {
    let mut total: Vec<f64> = Vec::new();
    for rank_term in factors {
        let mut t = vec![1.0];
        for w in rank_term {
            t = t.iter().flat_map(|&a| w.iter().map(move |&b| a * b)).collect();
        }
        if total.is_empty() {
            total = t;
        } else {
            total.iter_mut().zip(&t).for_each(|(a, b)| *a += b);
        }
    }
    total
}

fn dense_inner(post: &SusceptibilityPosterior, x: &ContextTensor) -> f64 {
    let factors: Vec<Vec<DVector<f64>>> = (0..post.rank())
        .map(|r| (0..post.order()).map(|l| post.factor(l, r).mean().clone()).collect())
        .collect();
    let w = dense_cp(&factors);
    let xt = dense_cp(&[x.modes().to_vec()]);
    w.iter().zip(&xt).map(|(a, b)| a * b).sum()
}

fn random_posterior(rng: &mut ChaCha8Rng, dims: &[usize], rank: usize) -> SusceptibilityPosterior {
    let mut post = SusceptibilityPosterior::new(&PosteriorConfig::new(dims.to_vec(), rank, 0.5).without_jitter()).unwrap();
    for (l, &d) in dims.iter().enumerate() {
        for r in 0..rank {
            post.set_mean(l, r, random_vec(rng, d)).unwrap();
        }
    }
    post
}

fn random_context(rng: &mut ChaCha8Rng, dims: &[usize]) -> ContextTensor {
    ContextTensor::new(dims.iter().map(|&d| random_vec(rng, d)).collect()).unwrap()
}

#[test]
fn inner_product_matches_dense_tensor() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (dims, rank) in [(vec![3, 4, 2], 3), (vec![5], 2), (vec![2, 2, 2, 3], 1)] {
        let post = random_posterior(&mut rng, &dims, rank);
        let x = random_context(&mut rng, &dims);
        assert_relative_eq!(post.inner_product(&x).unwrap(), dense_inner(&post, &x), epsilon = 1e-12);
    }
}

#[test]
fn beta_is_the_sensitivity_of_the_inner_product() {
    // <W, X> is linear in each factor, so moving w^{l,r} by tφ_l/‖φ_l‖²
    // changes the dense inner product by exactly tβ^{l,r}.
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let dims = [3, 4, 2];
    let post = random_posterior(&mut rng, &dims, 2);
    let x = random_context(&mut rng, &dims);
    let base = dense_inner(&post, &x);
    for l in 0..3 {
        for r in 0..2 {
            let phi = x.mode(l);
            let mut moved = post.clone();
            let shifted = post.factor(l, r).mean() + phi * (0.5 / phi.norm_squared());
            moved.set_mean(l, r, shifted).unwrap();
            let beta = post.beta(&x, l, r).unwrap();
            assert_relative_eq!((dense_inner(&moved, &x) - base) / 0.5, beta, epsilon = 1e-10);
        }
    }
}

#[test]
fn pseudo_response_removes_the_other_components() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let dims = [3, 2, 4];
    let post = random_posterior(&mut rng, &dims, 3);
    let x = random_context(&mut rng, &dims);
    let y = 0.7;
    for l in 0..3 {
        for r in 0..3 {
            // Dropping the whole rank-r component leaves the Σ_{r'≠r} terms.
            let mut others = post.clone();
            others.set_mean(0, r, DVector::zeros(dims[0])).unwrap();
            let expected = y - dense_inner(&others, &x);
            assert_relative_eq!(post.pseudo_response(&x, y, l, r).unwrap(), expected, epsilon = 1e-12);
        }
    }
}

#[test]
fn single_factor_variance_never_increases() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut post = SusceptibilityPosterior::new(&PosteriorConfig::new(vec![6], 1, 0.2).without_jitter()).unwrap();
    let probe = ContextTensor::new(vec![random_vec(&mut rng, 6)]).unwrap();
    let mut last = post.predict(&probe).unwrap().variance;
    for _ in 0..40 {
        let x = ContextTensor::new(vec![random_vec(&mut rng, 6)]).unwrap();
        post.absorb(&x, rng.random_range(-1.0..1.0)).unwrap();
        let v = post.predict(&probe).unwrap().variance;
        assert!(v <= last + 1e-15, "{v} > {last}");
        assert!(v >= 0.2);
        last = v;
    }
}

#[test]
fn snapshot_survives_a_file_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let dims = [3, 3, 2];
    let mut post = SusceptibilityPosterior::new(&PosteriorConfig::new(dims.to_vec(), 2, 0.1).with_seed(9)).unwrap();
    for _ in 0..10 {
        post.absorb(&random_context(&mut rng, &dims), 0.3).unwrap();
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("posterior.json");
    post.write_json(std::fs::File::create(&path).unwrap()).unwrap();
    let back = SusceptibilityPosterior::read_json(std::fs::File::open(&path).unwrap()).unwrap();
    let x = random_context(&mut rng, &dims);
    assert_eq!(back.predict(&x).unwrap(), post.predict(&x).unwrap());
    assert_eq!(back.snapshot(), post.snapshot());
}

fn samples_strategy() -> impl Strategy<Value = (Vec<usize>, usize, Vec<(Vec<Vec<f64>>, f64)>)> {
    (prop::collection::vec(1usize..4, 1..4), 1usize..3).prop_flat_map(|(dims, rank)| {
        let ctx = dims.iter().map(|&d| prop::collection::vec(-1.0f64..1.0, d)).collect::<Vec<_>>();
        let samples = prop::collection::vec((ctx, -1.0f64..1.0), 1..25);
        (Just(dims), Just(rank), samples)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn factor_invariants_hold_after_updates((dims, rank, samples) in samples_strategy(), sigma2 in 0.05f64..2.0) {
        let mut post = SusceptibilityPosterior::new(&PosteriorConfig::new(dims.clone(), rank, sigma2).with_seed(1)).unwrap();
        for (modes, y) in &samples {
            let x = ContextTensor::new(modes.iter().map(|m| DVector::from_vec(m.clone())).collect()).unwrap();
            for step in post.absorb(&x, *y).unwrap() {
                prop_assert!(step.update.kappa >= 0.0);
            }
        }
        for (_, _, f) in post.factors() {
            let cov: &DMatrix<f64> = f.covariance();
            prop_assert_eq!(cov, &cov.transpose());
            // Σ = (I + PSD)⁻¹ has its spectrum in (0, 1].
            for ev in SymmetricEigen::new(cov.clone()).eigenvalues.iter() {
                prop_assert!(*ev > 0.0 && *ev <= 1.0 + 1e-12, "eigenvalue {}", ev);
            }
            // Mean and accumulator stay coupled once any update landed.
            if f.update_count() > 0 {
                let coupled = cov * f.accumulator() / sigma2;
                prop_assert!((f.mean() - &coupled).amax() <= 1e-9 * (1.0 + coupled.amax()));
            }
            let ln_det = cov.clone().try_inverse().unwrap().determinant().ln();
            prop_assert!((f.log_det_precision() - ln_det).abs() <= 1e-8 * (1.0 + ln_det.abs()));
        }
    }
}
