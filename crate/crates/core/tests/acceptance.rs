//! One PASS/FAIL line per acceptance criterion; exits non-zero on any FAIL.

mod common;

use common::{
    cli_command_set, gaussian_capacity_quadrature, golden, log_circle_integral, log_err,
    random_channel, random_surjection, run_cli, vmf_brute_force_order, vmf_renyi_quadrature,
    ORDER_CASES,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::time::Instant;
use vmfdp::accountant::{best_epsilon, AccountOptions, AccountingScenario, Approach};
use vmfdp::dpconvert::{vmf_optimal_alpha, vmf_order_condition, OrderGrid, OrderSearch};
use vmfdp::noisechan::{gaussian_perturb, vmf_sample, GradientVector, RandomSource};
use vmfdp::qif::{
    bayes_capacity_channel, bayes_capacity_gaussian, bayes_capacity_vmf, leakage, Channel,
    GaussianCapacityForm, Prior,
};
use vmfdp::rdp::{
    vmf_rdp, vmf_rdp_multi, GaussParams, MechanismSpec, MultiVmfParams, RdpCurve, VmfParams,
};
use vmfdp::specfn::{
    log_bessel_i, log_bessel_i_regime, log_gamma, BESSEL_HANKEL_MIN_X, BESSEL_UNIFORM_MIN_ORDER,
};

const GAMMA: f64 = 128.0 / 60000.0;
const DELTA: f64 = 1.0 / 60000.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn table_scenario() -> AccountingScenario {
    AccountingScenario::epochs(GAMMA, 3, DELTA).unwrap()
}

fn criterion_1() -> Outcome {
    let rows = [
        (25.0, 0.0139, Approach::Approach1),
        (50.0, 0.0867, Approach::Approach1),
        (75.0, 0.49, Approach::Approach1),
        (100.0, 2.5, Approach::Approach2),
        (125.0, 4.6, Approach::Approach2),
        (150.0, 7.97, Approach::Approach2),
        (200.0, 10.9, Approach::Approach2),
        (300.0, 41.02, Approach::Approach2),
    ];
    let (mut within, mut winners, mut slowest) = (0, 0, 0.0f64);
    for (kappa, want, winner) in rows {
        let t = Instant::now();
        let r = best_epsilon(
            &MechanismSpec::vmf(13_700, kappa).unwrap(),
            &table_scenario(),
            &AccountOptions::default(),
        )
        .unwrap();
        slowest = slowest.max(t.elapsed().as_secs_f64());
        let rel = (r.epsilon_best - want).abs() / want;
        within += usize::from(rel <= 0.10);
        winners += usize::from(r.winner == winner);
        println!(
            "    kappa={kappa:>5}: A1={:.4} A2={:.4} best={:.4} (want {want}, rel {rel:.3}) winner={} (want {})",
            r.epsilon_approach1,
            r.epsilon_approach2,
            r.epsilon_best,
            r.winner.as_str(),
            winner.as_str()
        );
    }
    outcome(
        within == 8 && winners >= 7,
        format!("VMF table: {within}/8 rows within 10%, {winners}/8 winners (need 8/8 and >= 7/8), slowest row {slowest:.2}s"),
    )
}

fn criterion_2() -> Outcome {
    let rows = [
        (1.23, 0.49),
        (0.66, 2.48),
        (0.461, 7.97),
        (0.282, 41.02),
        (0.174, 173.0),
    ];
    let mut within = 0;
    let mut endpoints = true;
    for (i, (sigma, want)) in rows.into_iter().enumerate() {
        let r = best_epsilon(
            &MechanismSpec::gauss(13_700, sigma).unwrap(),
            &table_scenario(),
            &AccountOptions::default(),
        )
        .unwrap();
        let rel = (r.epsilon_best - want).abs() / want;
        let ok = rel <= 0.10;
        within += usize::from(ok);
        if i == 0 || i == rows.len() - 1 {
            endpoints &= ok;
        }
        println!(
            "    sigma={sigma:>5}: best={:.4} (want {want}, rel {rel:.3}) via {}",
            r.epsilon_best,
            r.winner.as_str()
        );
    }
    outcome(
        within == rows.len() && endpoints,
        format!(
            "Gaussian mapping: {within}/5 rows within 10%, endpoints {}",
            if endpoints { "ok" } else { "off" }
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut worst_gamma = 0.0f64;
    for row in golden("log_gamma.csv") {
        worst_gamma = worst_gamma.max(log_err(log_gamma(row[0]).unwrap().ln(), row[1]));
    }
    let bessel = golden("log_bessel_i.csv");
    let mut worst_bessel = 0.0f64;
    for row in &bessel {
        worst_bessel =
            worst_bessel.max(log_err(log_bessel_i(row[0], row[1]).unwrap().ln(), row[2]));
    }
    // regime hand-offs: series vs large argument, series vs uniform order
    let mut worst_join = 0.0f64;
    for nu in [0.0, 0.5, 1.0, 3.5, 10.0, 19.5] {
        let x = BESSEL_HANKEL_MIN_X;
        worst_join = worst_join.max(log_err(
            log_bessel_i_regime(nu, x, 0),
            log_bessel_i_regime(nu, x, 1),
        ));
    }
    for x in [1e-3, 0.1, 1.0, 10.0, 100.0, 499.0] {
        let nu = BESSEL_UNIFORM_MIN_ORDER;
        worst_join = worst_join.max(log_err(
            log_bessel_i_regime(nu, x, 2),
            log_bessel_i_regime(nu, x, 0),
        ));
    }
    // Stirling / recurrence boundary of log_gamma
    for x in [14.0, 14.5, 14.999_999, 15.0] {
        let step = log_gamma(x + 1.0).unwrap().ln() - log_gamma(x).unwrap().ln();
        worst_join = worst_join.max(log_err(step, f64::ln(x)));
    }
    outcome(
        worst_gamma <= 1e-10 && worst_bessel <= 1e-10 && worst_join <= 1e-8,
        format!(
            "special functions: log_gamma worst {worst_gamma:.1e}, log_bessel_i worst {worst_bessel:.1e} over {} points \
             (need 1e-10), regime continuity worst {worst_join:.1e} (need 1e-8)",
            bessel.len()
        ),
    )
}

fn tau(p: usize, kappa: f64, alpha: f64) -> f64 {
    vmf_rdp(&VmfParams::new(p, kappa).unwrap(), alpha).unwrap()
}

fn criterion_4() -> Outcome {
    let mut violations = 0;
    let kappas: Vec<f64> = (0..60).map(|i| 500f64.powf(i as f64 / 59.0)).collect();
    for &p in &[2usize, 100, 13_700] {
        for &a in &[1.5, 2.0, 8.0, 64.0] {
            let v: Vec<f64> = kappas.iter().map(|&k| tau(p, k, a)).collect();
            violations += v.windows(2).filter(|w| w[1] < w[0]).count();
        }
    }
    let dims = [2usize, 100, 13_700];
    for &k in &kappas {
        for &a in &[1.5, 2.0, 8.0, 64.0] {
            let v: Vec<f64> = dims.iter().map(|&p| tau(p, k, a)).collect();
            violations += v.windows(2).filter(|w| w[1] > w[0]).count();
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut flatten_fail = 0;
    for _ in 0..50 {
        let mut sizes = Vec::new();
        let mut left = 1000usize;
        while left > 0 {
            let s = if left <= 3 {
                left
            } else {
                rng.random_range(2..=left.min(400))
            };
            let s = if left - s == 1 { s + 1 } else { s };
            sizes.push(s);
            left -= s;
        }
        let kappa = rng.random_range(1.0..200.0);
        let split = MultiVmfParams::uniform(&sizes, kappa).unwrap();
        flatten_fail += [1.5, 2.0, 8.0]
            .iter()
            .filter(|&&a| vmf_rdp_multi(&split, a).unwrap() < tau(1000, kappa, a))
            .count();
    }
    let mut quad_worst = 0.0f64;
    for &p in &[2usize, 3] {
        for &k in &[0.5, 2.0, 5.0] {
            for &a in &[1.5, 2.0, 4.0] {
                let t = tau(p, k, a);
                quad_worst = quad_worst.max(((vmf_renyi_quadrature(p, k, a, PI) - t) / t).abs());
            }
        }
    }
    let mut antipodal_fail = 0;
    for i in 0..100 {
        let p = 2 + i % 2;
        let phi = rng.random_range(0.0..PI);
        let k = rng.random_range(0.2..4.0);
        let a = rng.random_range(1.2..4.0);
        antipodal_fail +=
            usize::from(vmf_renyi_quadrature(p, k, a, phi) > tau(p, k, a) * (1.0 + 1e-6));
    }
    outcome(
        violations == 0 && flatten_fail == 0 && quad_worst <= 1e-4 && antipodal_fail == 0,
        format!(
            "RDP properties: {violations} monotonicity violations, {flatten_fail} flatten failures on 50 partitions, \
             quadrature worst {quad_worst:.1e} (need 1e-4), {antipodal_fail}/100 antipodal failures"
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let grid = OrderGrid::standard();
    let (mut pairs, mut worst) = (0, 0.0f64);
    while pairs < 50 {
        let curve = if rng.random_bool(0.5) {
            let p = [2usize, 10, 100, 13_700][rng.random_range(0..4)];
            RdpCurve::Vmf(VmfParams::new(p, rng.random_range(0.5..300.0)).unwrap())
        } else {
            RdpCurve::Gaussian(GaussParams::new(rng.random_range(0.3..5.0)).unwrap())
        };
        let eps = rng.random_range(0.05..20.0);
        let search = OrderSearch::new(&curve, &grid);
        let d = search.delta_given_epsilon(eps).unwrap();
        if d.log_delta >= 0.0 {
            continue;
        }
        worst =
            worst.max((search.epsilon_given_log_delta(d.log_delta).unwrap().epsilon - eps).abs());
        pairs += 1;
    }
    let mut order_fail = 0;
    for &(p, kappa, eps) in ORDER_CASES {
        let params = VmfParams::new(p, kappa).unwrap();
        let a = vmf_optimal_alpha(&params, eps).unwrap();
        let g = |x: f64| vmf_order_condition(&params, eps, x).unwrap();
        let root = g(a).abs() <= 1e-9 || (g(a.next_down()) <= 0.0 && g(a.next_up()) >= 0.0);
        let (_, arg, step) = vmf_brute_force_order(&params, eps);
        order_fail += usize::from(!root || (a - arg).abs() > step);
    }
    outcome(
        worst <= 1e-6 && order_fail == 0,
        format!(
            "conversion: round trip worst {worst:.1e} over 50 pairs (need 1e-6), optimal order off the grid argmin \
             on {order_fail}/{} cases",
            ORDER_CASES.len()
        ),
    )
}

fn criterion_6() -> Outcome {
    const N: usize = 200;
    const TOL: f64 = 1e-12;
    let cap = |c: &Channel| bayes_capacity_channel(c).capacity;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut fails = [0usize; 5];
    for _ in 0..N {
        // Lemma 1: deterministic pre-processing without zero columns
        let (w, y) = (rng.random_range(1..6), rng.random_range(1..6));
        let d = random_channel(&mut rng, w, y);
        let n = rng.random_range(w..w + 5);
        let c = random_surjection(&mut rng, n, w);
        let cd = c.compose(&d).unwrap();
        fails[0] += usize::from((cap(&cd) - cap(&d)).abs() > TOL);
        // Theorem 5: uniform-prior leakage of the composition is the noise capacity
        let l = leakage(&Prior::uniform(n).unwrap(), &cd).unwrap();
        fails[4] += usize::from((l - cap(&d)).abs() > TOL);
        // Lemma 2: extremes
        let m = rng.random_range(1..10);
        let nothing = Channel::new(vec![vec![1.0]; m]).unwrap();
        fails[1] +=
            usize::from(cap(&nothing) != 1.0 || cap(&Channel::identity(m).unwrap()) != m as f64);
        // Corollary 1: restriction to a subset of secrets
        let full = random_channel(&mut rng, 5, 5);
        let mut subset: Vec<usize> = (0..5).filter(|_| rng.random_bool(0.5)).collect();
        if subset.is_empty() {
            subset.push(rng.random_range(0..5));
        }
        fails[2] += usize::from(cap(&full.restrict_rows(&subset).unwrap()) > cap(&full) + TOL);
        // Lemma 4: post-processing
        let (a, b, e) = (
            rng.random_range(1..7),
            rng.random_range(1..7),
            rng.random_range(1..7),
        );
        let c1 = random_channel(&mut rng, a, b);
        let c2 = random_channel(&mut rng, b, e);
        fails[3] += usize::from(cap(&c1.compose(&c2).unwrap()) > cap(&c1).min(cap(&c2)) + TOL);
    }
    outcome(
        fails.iter().all(|&f| f == 0),
        format!(
            "QIF lemmas on {N} channels each: failures pre-processing {}, extremes {}, restriction {}, \
             post-processing {}, leakage factorisation {}",
            fails[0], fails[1], fails[2], fails[3], fails[4]
        ),
    )
}

fn criterion_7() -> Outcome {
    let form = GaussianCapacityForm::Derivation;
    let mut gauss_worst = 0.0f64;
    for p in 1..=3 {
        for &sigma in &[0.5, 1.0, 2.0] {
            let got = bayes_capacity_gaussian(p, sigma, 1.0, form)
                .unwrap()
                .capacity;
            let want = gaussian_capacity_quadrature(p, sigma, 1.0);
            gauss_worst = gauss_worst.max(((got - want) / want).abs());
        }
    }
    let mut closed_worst = 0.0f64;
    for &sigma in &[0.1, 0.5, 1.0, 2.0, 10.0] {
        let want = 1.0 + (2.0 / PI).sqrt() / sigma;
        let got = bayes_capacity_gaussian(1, sigma, 1.0, form)
            .unwrap()
            .capacity;
        closed_worst = closed_worst.max(((got - want) / want).abs());
    }
    let (mut sphere_worst, mut circle_worst) = (0.0f64, 0.0f64);
    for &k in &[0.01f64, 0.5, 1.0, 5.0, 30.0, 300.0] {
        let want = k.ln() + k - k.sinh().ln();
        sphere_worst = sphere_worst.max(log_err(
            bayes_capacity_vmf(3, k).unwrap().log_capacity,
            want,
        ));
        let want = k + (2.0 * PI).ln() - log_circle_integral(|t| k * t.cos(), 4096);
        let got = bayes_capacity_vmf(2, k).unwrap().log_capacity;
        circle_worst = circle_worst.max(((got - want) / want).abs());
    }
    let mut violations = 0;
    let kappas: Vec<f64> = (0..50)
        .map(|i| 1e-2 * 1e5f64.powf(i as f64 / 49.0))
        .collect();
    let sigmas: Vec<f64> = (0..50)
        .map(|i| 1e-2 * 1e4f64.powf(i as f64 / 49.0))
        .collect();
    for &p in &[2usize, 3, 10, 1000, 13_700] {
        let c: Vec<f64> = kappas
            .iter()
            .map(|&k| bayes_capacity_vmf(p, k).unwrap().log_capacity)
            .collect();
        violations += c.windows(2).filter(|w| w[1] <= w[0]).count();
    }
    for &p in &[1usize, 2, 3, 100, 13_700] {
        let c: Vec<f64> = sigmas
            .iter()
            .map(|&s| {
                bayes_capacity_gaussian(p, s, 1.0, form)
                    .unwrap()
                    .log_capacity
            })
            .collect();
        violations += c.windows(2).filter(|w| w[1] >= w[0]).count();
    }
    outcome(
        gauss_worst <= 1e-4 && closed_worst <= 1e-10 && sphere_worst <= 1e-10 && circle_worst <= 1e-4 && violations == 0,
        format!(
            "capacities: Gaussian quadrature worst {gauss_worst:.1e} (1e-4), p=1 closed form {closed_worst:.1e} \
             (1e-10), VMF p=3 closed form {sphere_worst:.1e} (1e-10), p=2 quadrature {circle_worst:.1e} (1e-4), \
             {violations} monotonicity violations"
        ),
    )
}

fn criterion_8() -> Outcome {
    const SAMPLES: usize = 100_000;
    let mut worst_mrl = 0.0f64;
    // I_{p/2}(kappa) / I_{p/2-1}(kappa), 30-digit oracle values
    for &(p, kappa, want) in &[(3usize, 50.0, 0.98), (10, 100.0, 0.955_795_172_881_247_4)] {
        let mean = GradientVector::axis(p, 0).unwrap();
        let mut rng = RandomSource::from_seed(17);
        let got = (0..SAMPLES)
            .map(|_| vmf_sample(&mean, kappa, &mut rng).unwrap().as_slice()[0])
            .sum::<f64>()
            / SAMPLES as f64;
        worst_mrl = worst_mrl.max(((got - want) / want).abs());
    }
    let p = 3;
    let mean = GradientVector::axis(p, 0).unwrap();
    let mut rng = RandomSource::from_seed(23);
    let mut sum = vec![0.0; p];
    for _ in 0..SAMPLES {
        let y = vmf_sample(&mean, 0.0, &mut rng).unwrap();
        sum.iter_mut().zip(y.as_slice()).for_each(|(s, v)| *s += v);
    }
    let resultant = sum.iter().map(|s| s * s).sum::<f64>().sqrt() / SAMPLES as f64;
    let bound = 3.0 / (SAMPLES as f64).sqrt();
    let (sigma, clip, batch) = (2.0, 1.5, 3);
    let zero = GradientVector::new(vec![0.0; SAMPLES]).unwrap();
    let noisy =
        gaussian_perturb(&zero, sigma, clip, batch, &mut RandomSource::from_seed(31)).unwrap();
    let v = noisy.as_slice();
    let m = v.iter().sum::<f64>() / SAMPLES as f64;
    let std = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (SAMPLES - 1) as f64).sqrt();
    let std_err = (std / (clip * sigma / batch as f64) - 1.0).abs();
    outcome(
        worst_mrl <= 0.01 && resultant <= bound && std_err <= 0.01,
        format!(
            "sampler: mean resultant length worst rel {worst_mrl:.1e} (1%), uniform resultant {resultant:.1e} \
             (bound {bound:.1e}), Gaussian std rel {std_err:.1e} (1%)"
        ),
    )
}

fn criterion_9() -> Outcome {
    let dir = tempfile::TempDir::new().unwrap();
    let commands = cli_command_set(dir.path());
    let mut mismatched = Vec::new();
    for args in &commands {
        let a = run_cli(args);
        let b = run_cli(args);
        if !a.status.success()
            || a.stdout.is_empty()
            || a.stdout != b.stdout
            || a.status != b.status
        {
            mismatched.push(format!("{} --format {}", args[0], args[args.len() - 1]));
        }
    }
    outcome(
        mismatched.is_empty(),
        format!(
            "CLI determinism: {}/{} invocations byte-identical across repeats{}",
            commands.len() - mismatched.len(),
            commands.len(),
            if mismatched.is_empty() {
                String::new()
            } else {
                format!(" (differ: {})", mismatched.join(", "))
            }
        ),
    )
}

fn main() {
    let criteria: [fn() -> Outcome; 9] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
    ];
    let mut failed = 0;
    for (i, f) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = f();
        failed += usize::from(!o.pass);
        println!(
            "{} criterion {}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {}/9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
