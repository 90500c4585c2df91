mod common;

use common::simpson;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::f64::consts::PI;
use vmfdp::noisechan::{
    average, clip, gaussian_perturb, normalize, vmf_log_density, vmf_sample, GradientVector,
    RandomSource,
};

const SAMPLES: usize = 100_000;

fn mean_cosine(p: usize, kappa: f64, seed: u64) -> f64 {
    let mean = GradientVector::axis(p, 0).unwrap();
    let mut rng = RandomSource::from_seed(seed);
    (0..SAMPLES)
        .map(|_| vmf_sample(&mean, kappa, &mut rng).unwrap().as_slice()[0])
        .sum::<f64>()
        / SAMPLES as f64
}

#[test]
fn mean_resultant_length() {
    // I_{p/2}(kappa) / I_{p/2-1}(kappa), 30-digit oracle values
    for &(p, kappa, want) in &[(3usize, 50.0, 0.98), (10, 100.0, 0.955_795_172_881_247_4)] {
        let got = mean_cosine(p, kappa, 17);
        assert!(
            ((got - want) / want).abs() <= 0.01,
            "p={p} kappa={kappa}: {got}"
        );
    }
}

#[test]
fn zero_concentration_is_uniform() {
    for &p in &[2usize, 3, 50] {
        let mean = GradientVector::axis(p, 1).unwrap();
        let mut rng = RandomSource::from_seed(23);
        let mut sum = vec![0.0; p];
        for _ in 0..SAMPLES {
            let y = vmf_sample(&mean, 0.0, &mut rng).unwrap();
            sum.iter_mut().zip(y.as_slice()).for_each(|(s, v)| *s += v);
        }
        let r = sum.iter().map(|s| s * s).sum::<f64>().sqrt() / SAMPLES as f64;
        // |mean| has second moment 1/n for a uniform law on the sphere
        assert!(r <= 3.0 / (SAMPLES as f64).sqrt(), "p={p}: {r}");
    }
}

#[test]
fn circle_angles_pass_chi_square() {
    let (kappa, bins) = (2.0, 36);
    let mean = GradientVector::axis(2, 0).unwrap();
    let mut rng = RandomSource::from_seed(29);
    let mut counts = vec![0usize; bins];
    let width = 2.0 * PI / bins as f64;
    for _ in 0..SAMPLES {
        let y = vmf_sample(&mean, kappa, &mut rng).unwrap();
        let t = y.as_slice()[1].atan2(y.as_slice()[0]).rem_euclid(2.0 * PI);
        counts[((t / width) as usize).min(bins - 1)] += 1;
    }
    let density = |t: f64| (kappa * t.cos()).exp();
    let total = simpson(density, 0.0, 2.0 * PI, 20_000);
    let stat: f64 = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let a = i as f64 * width;
            let e = SAMPLES as f64 * simpson(density, a, a + width, 200) / total;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    let p_value = 1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(stat);
    assert!(p_value > 1e-3, "chi2 = {stat}, p = {p_value}");
}

#[test]
fn log_density_normalises_on_the_circle() {
    let mean = GradientVector::axis(2, 0).unwrap();
    for &kappa in &[0.0, 0.5, 4.0, 40.0] {
        let f = |t: f64| {
            let y = GradientVector::new(vec![t.cos(), t.sin()]).unwrap();
            vmf_log_density(&mean, kappa, &y).unwrap().exp()
        };
        let mass = simpson(f, 0.0, 2.0 * PI, 4000);
        assert!((mass - 1.0).abs() <= 1e-8, "kappa={kappa}: {mass}");
    }
}

#[test]
fn gaussian_noise_has_the_right_scale() {
    let (sigma, bound, batch) = (2.0, 1.5, 3);
    let zero = GradientVector::new(vec![0.0; SAMPLES]).unwrap();
    let noisy =
        gaussian_perturb(&zero, sigma, bound, batch, &mut RandomSource::from_seed(31)).unwrap();
    let v = noisy.as_slice();
    let mean = v.iter().sum::<f64>() / SAMPLES as f64;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (SAMPLES - 1) as f64;
    let want = bound * sigma / batch as f64;
    assert!(
        (var.sqrt() / want - 1.0).abs() <= 0.01,
        "std {}",
        var.sqrt()
    );
}

#[test]
fn large_parameters_stay_on_the_sphere() {
    let mut rng = RandomSource::from_seed(37);
    for &(p, kappa) in &[
        (100_000usize, 1e4),
        (100_000, 1e-3),
        (2, 1e4),
        (13_700, 300.0),
    ] {
        let mean = GradientVector::axis(p, p - 1).unwrap();
        for _ in 0..5 {
            let y = vmf_sample(&mean, kappa, &mut rng).unwrap();
            assert!((y.norm() - 1.0).abs() <= 1e-10);
            assert!(y.as_slice().iter().all(|v| v.is_finite()));
        }
    }
}

#[test]
fn dp_sgd_step_pipeline() {
    let batch = [
        GradientVector::new(vec![3.0, 4.0, 0.0]).unwrap(),
        GradientVector::new(vec![0.1, 0.0, 0.0]).unwrap(),
    ];
    let clipped: Vec<_> = batch.iter().map(|g| clip(g, 1.0).unwrap()).collect();
    assert!(clipped.iter().all(|g| g.norm() <= 1.0 + 1e-15));
    let avg = average(&clipped).unwrap();
    let dir = normalize(&avg).unwrap();
    let a = vmf_sample(&dir, 10.0, &mut RandomSource::from_seed(41)).unwrap();
    let b = vmf_sample(&dir, 10.0, &mut RandomSource::from_seed(41)).unwrap();
    assert_eq!(a, b);
}
