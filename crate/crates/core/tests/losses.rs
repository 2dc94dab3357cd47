mod oracles;

use gausslabel::losses::{axis_cdf_gaps, slice_mean_kl};
use gausslabel::phantom::{generate_phantom, PhantomSpec};
use gausslabel::{
    combined_loss, kl_loss, mae_loss, recover_by_descent, softmax_map, wasserstein_loss, DistributionMode, LossWeights,
    Volume,
};
use oracles::{finite_difference, kl_direct, mae_direct, relative_error, softmax_direct, wasserstein_direct};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-3;
const TOLERANCE: f64 = 1e-4;

fn random(rng: &mut ChaCha8Rng, n: usize, spread: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-spread..spread)).collect()
}

/// Signs of every axis CDF gap, recomputed from scratch.
fn gap_signs(g: &[f64], x: &[f64], shape: (usize, usize, usize)) -> Vec<i8> {
    let (pg, px) = (softmax_direct(g), softmax_direct(x));
    let (d, h, w) = shape;
    let mut signs = Vec::new();
    for axis in 0..3 {
        let len = [d, h, w][axis];
        let mut diff = vec![0.0; len];
        for i in 0..g.len() {
            let idx = [i / (h * w), (i / w) % h, i % w][axis];
            diff[idx] += px[i] - pg[i];
        }
        let mut acc = 0.0;
        for v in &diff[..len - 1] {
            acc += v;
            signs.push(if acc.abs() < 1e-12 {
                0
            } else if acc > 0.0 {
                1
            } else {
                -1
            });
        }
    }
    signs
}

#[test]
fn softmax_matches_direct_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = random(&mut rng, 256, 3.0);
    let p = softmax_map(&x).unwrap();
    for (a, b) in p.values().iter().zip(softmax_direct(&x)) {
        assert!((a - b).abs() <= 1e-12);
    }
    assert!(p.values().iter().all(|&v| v > 0.0));
    assert!((p.values().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
}

#[test]
fn kl_value_and_gradient() {
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (g, x) = (random(&mut rng, 64, 2.0), random(&mut rng, 64, 2.0));
        let term = kl_loss(&g, &x).unwrap();
        assert!((term.value - kl_direct(&g, &x)).abs() <= 1e-12);
        let numeric = finite_difference(&|v| kl_direct(&g, v), &x, STEP);
        let err = relative_error(&term.grad, &numeric, &vec![true; x.len()]);
        assert!(err <= TOLERANCE, "seed {seed}: {err}");
    }
}

#[test]
fn wasserstein_value_and_gradient() {
    let shape = (4, 8, 8);
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let (g, x) = (random(&mut rng, 256, 2.0), random(&mut rng, 256, 2.0));
        let gv = Volume::new(4, 8, 8, g.clone()).unwrap();
        let xv = Volume::new(4, 8, 8, x.clone()).unwrap();
        let term = wasserstein_loss(&gv, &xv).unwrap();
        assert!((term.value - wasserstein_direct(&g, &x, shape)).abs() <= 1e-12);

        let base = gap_signs(&g, &x, shape);
        let mut probe = x.clone();
        let keep: Vec<bool> = (0..x.len())
            .map(|i| {
                let orig = probe[i];
                probe[i] = orig + STEP;
                let up = gap_signs(&g, &probe, shape);
                probe[i] = orig - STEP;
                let down = gap_signs(&g, &probe, shape);
                probe[i] = orig;
                up == base && down == base
            })
            .collect();
        assert!(keep.iter().filter(|k| **k).count() > x.len() / 2);
        let numeric = finite_difference(&|v| wasserstein_direct(&g, v, shape), &x, STEP);
        let err = relative_error(&term.grad, &numeric, &keep);
        assert!(err <= TOLERANCE, "seed {seed}: {err}");
    }
}

#[test]
fn mae_value_and_gradient() {
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
        let (g, x) = (random(&mut rng, 256, 1.0), random(&mut rng, 256, 1.0));
        let term = mae_loss(&g, &x).unwrap();
        assert!((term.value - mae_direct(&g, &x)).abs() <= 1e-12);
        let keep: Vec<bool> = g.iter().zip(&x).map(|(a, b)| (a - b).abs() > STEP).collect();
        let numeric = finite_difference(&|v| mae_direct(&g, v), &x, STEP);
        let err = relative_error(&term.grad, &numeric, &keep);
        assert!(err <= TOLERANCE, "seed {seed}: {err}");
    }
}

#[test]
fn wasserstein_of_shifted_point_masses() {
    let mut g = vec![0.0; 16];
    let mut x = vec![0.0; 16];
    g[10] = 60.0;
    x[14] = 60.0;
    let gv = Volume::new(1, 1, 16, g).unwrap();
    let xv = Volume::new(1, 1, 16, x).unwrap();
    let loss = wasserstein_loss(&gv, &xv).unwrap().value;
    assert!((loss - 4.0).abs() < 1e-9, "{loss}");
    let gaps = axis_cdf_gaps(&gv, &xv).unwrap();
    assert!(gaps[0].is_empty() && gaps[1].is_empty());
    assert_eq!(gaps[2].len(), 15);
}

fn small_phantom(depth: usize, size: usize) -> Volume {
    let spec = PhantomSpec {
        depth,
        size,
        axis_range: (6.0, 10.0),
        ..Default::default()
    };
    generate_phantom(&spec).unwrap().pseudo
}

#[test]
fn combined_loss_matches_term_wise_recomputation() {
    let g = small_phantom(4, 64);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noisy: Vec<f64> = g.data().iter().map(|v| v + rng.gen_range(0.0..0.1)).collect();
    let x = Volume::new(4, 64, 64, noisy.clone()).unwrap();
    let weights = LossWeights::new(1.0, 1.0).unwrap();

    let kl = (0..4)
        .map(|z| kl_direct(&g.data()[z * 4096..(z + 1) * 4096], &noisy[z * 4096..(z + 1) * 4096]))
        .sum::<f64>()
        / 4.0;
    let mae = mae_direct(g.data(), &noisy);
    let (v, _) = combined_loss(&g, &x, weights, DistributionMode::Kl2d).unwrap();
    assert!((v.total - (kl + mae)).abs() <= 1e-12);
    assert!((v.distribution_term - kl).abs() <= 1e-12);
    assert!((v.reconstruction_term - mae).abs() <= 1e-12);

    let wass = wasserstein_direct(g.data(), &noisy, (4, 64, 64));
    let (v, _) = combined_loss(&g, &x, weights, DistributionMode::Wasserstein3d).unwrap();
    assert!((v.total - (wass + mae)).abs() <= 1e-12);
}

#[test]
fn slice_mean_kl_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (g, x) = (random(&mut rng, 3 * 16, 2.0), random(&mut rng, 3 * 16, 2.0));
    let gv = Volume::new(3, 4, 4, g.clone()).unwrap();
    let xv = Volume::new(3, 4, 4, x.clone()).unwrap();
    let term = slice_mean_kl(&gv, &xv).unwrap();
    let f = |v: &[f64]| {
        (0..3)
            .map(|z| kl_direct(&g[z * 16..(z + 1) * 16], &v[z * 16..(z + 1) * 16]))
            .sum::<f64>()
            / 3.0
    };
    assert!((term.value - f(&x)).abs() <= 1e-12);
    let numeric = finite_difference(&f, &x, STEP);
    assert!(relative_error(&term.grad, &numeric, &vec![true; x.len()]) <= TOLERANCE);
}

#[test]
fn descent_recovers_a_phantom_target() {
    let g = small_phantom(1, 32);
    let r = recover_by_descent(&g, DistributionMode::Kl2d, LossWeights::default(), 2000, 0.5).unwrap();
    assert!(r.trace.windows(2).all(|p| p[1] <= p[0]));
    let mae = r.reconstruction_error(&g).unwrap();
    assert!(mae < 0.01, "{mae}");
}

#[test]
fn descent_with_wasserstein_decreases() {
    let g = small_phantom(2, 32);
    let r = recover_by_descent(&g, DistributionMode::Wasserstein3d, LossWeights::default(), 300, 0.5).unwrap();
    assert!(r.trace.windows(2).all(|p| p[1] <= p[0]));
    assert!(r.trace.last().unwrap() < &(0.5 * r.trace[0]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wasserstein_is_symmetric_and_non_negative(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Volume::new(2, 3, 5, random(&mut rng, 30, 2.0)).unwrap();
        let x = Volume::new(2, 3, 5, random(&mut rng, 30, 2.0)).unwrap();
        let ab = wasserstein_loss(&g, &x).unwrap().value;
        let ba = wasserstein_loss(&x, &g).unwrap().value;
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() <= 1e-12);
        prop_assert_eq!(wasserstein_loss(&g, &g).unwrap().value, 0.0);
    }

    #[test]
    fn combined_total_is_weighted_sum(seed in 0u64..10_000, w1 in 0.0..5.0f64, w2 in 0.01..5.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Volume::new(2, 4, 4, random(&mut rng, 32, 1.0)).unwrap();
        let x = Volume::new(2, 4, 4, random(&mut rng, 32, 1.0)).unwrap();
        for mode in [DistributionMode::Kl2d, DistributionMode::Wasserstein3d] {
            let (v, _) = combined_loss(&g, &x, LossWeights::new(w1, w2).unwrap(), mode).unwrap();
            prop_assert!((v.total - (w1 * v.distribution_term + w2 * v.reconstruction_term)).abs() <= 1e-12);
            prop_assert!(v.total >= 0.0);
        }
    }
}
