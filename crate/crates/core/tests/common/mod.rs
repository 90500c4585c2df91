#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};
use vmfdp::qif::Channel;
use vmfdp::rdp::{vmf_rdp, VmfParams};

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("data")
        .join(name)
}

/// Rows of a golden CSV file, header skipped, every field parsed as `f64`.
pub fn golden(name: &str) -> Vec<Vec<f64>> {
    let text = std::fs::read_to_string(data_path(name)).expect("golden file");
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .map(|f| f.trim().parse::<f64>().expect("number"))
                .collect()
        })
        .collect()
}

/// Error of a logarithm: absolute below 1, relative above.
pub fn log_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1.0)
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + h * i as f64);
    }
    s * h / 3.0
}

/// `ln` of the integral of `exp(g)` on the circle, trapezoid rule (spectrally
/// accurate for periodic integrands).
pub fn log_circle_integral(g: impl Fn(f64) -> f64, n: usize) -> f64 {
    let h = 2.0 * std::f64::consts::PI / n as f64;
    let vals: Vec<f64> = (0..n).map(|i| g(h * i as f64)).collect();
    let m = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + (vals.iter().map(|v| (v - m).exp()).sum::<f64>() * h).ln()
}

/// Rényi divergence of order `alpha` between VMF densities with means at
/// angle `phi`, by direct quadrature of the defining integral. `p` is 2 or 3.
pub fn vmf_renyi_quadrature(p: usize, kappa: f64, alpha: f64, phi: f64) -> f64 {
    use std::f64::consts::PI;
    // exponent of p^alpha q^(1-alpha) up to the normaliser, which cancels:
    // D = [ln int exp(k(a m1 + (1-a) m2).y) dy - ln int exp(k m1.y) dy] / (a-1)
    match p {
        2 => {
            let num = log_circle_integral(
                |t| kappa * (alpha * t.cos() + (1.0 - alpha) * (t - phi).cos()),
                4096,
            );
            let den = log_circle_integral(|t| kappa * t.cos(), 4096);
            (num - den) / (alpha - 1.0)
        }
        3 => {
            // y = (sin th cos ph, sin th sin ph, cos th); m1 = e_z, m2 in the xz-plane
            let (s, c) = phi.sin_cos();
            let log_int = |w1: f64, w2: f64| {
                // shift by the maximum of the exponent over the sphere
                let shift = kappa * (w1 * w1 + w2 * w2 + 2.0 * w1 * w2 * c).sqrt();
                let inner = |t: f64| {
                    let st = (1.0 - t * t).max(0.0).sqrt();
                    let g = |ph: f64| kappa * (w1 * t + w2 * (s * st * ph.cos() + c * t)) - shift;
                    log_circle_integral(g, 512).exp()
                };
                shift + simpson(inner, -1.0, 1.0, 4000).ln()
            };
            let num = log_int(alpha, 1.0 - alpha);
            let den = (4.0 * PI * kappa.sinh() / kappa).ln();
            (num - den) / (alpha - 1.0)
        }
        _ => panic!("quadrature only for p = 2, 3"),
    }
}

/// Integral over `R^p` of the supremum Gaussian density over centres in the
/// radius-`r` ball, by radial Simpson quadrature split at the ball boundary.
pub fn gaussian_capacity_quadrature(p: usize, sigma: f64, r: f64) -> f64 {
    use std::f64::consts::PI;
    let pf = p as f64;
    let area = 2.0 * PI.powf(pf / 2.0) / statrs::function::gamma::gamma(pf / 2.0);
    let peak = (2.0 * PI * sigma * sigma).powf(-pf / 2.0);
    let inside = simpson(|t| t.powi(p as i32 - 1), 0.0, r, 2000);
    let outside = simpson(
        |t| t.powi(p as i32 - 1) * (-(t - r) * (t - r) / (2.0 * sigma * sigma)).exp(),
        r,
        r + 40.0 * sigma,
        200_000,
    );
    area * peak * (inside + outside)
}

/// `ln delta` certified by order `alpha` at `epsilon`.
pub fn log_delta_at(alpha: f64, tau: f64, eps: f64) -> f64 {
    (alpha - 1.0) * (tau - eps + (-1.0 / alpha).ln_1p()) - alpha.ln()
}

/// Brute-force minimiser of `ln delta_alpha` over `alpha - 1` log-spaced in
/// `[1e-8, 1e4]`; returns `(ln delta, alpha, local grid step)`.
pub fn vmf_brute_force_order(params: &VmfParams, eps: f64) -> (f64, f64, f64) {
    let n = 20_000;
    let (lo, hi) = (1e-8f64.ln(), 1e4f64.ln());
    let alpha = |i: usize| 1.0 + (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp();
    let (mut best, mut arg) = (f64::INFINITY, 0);
    for i in 0..n {
        let a = alpha(i);
        let v = log_delta_at(a, vmf_rdp(params, a).unwrap(), eps);
        if v < best {
            best = v;
            arg = i;
        }
    }
    (best, alpha(arg), alpha(arg + 1) - alpha(arg))
}

/// `(p, kappa, epsilon)` cases for the optimal-order checks.
pub const ORDER_CASES: &[(usize, f64, f64)] = &[
    (13_700, 25.0, 0.5),
    (13_700, 50.0, 1.0),
    (13_700, 100.0, 3.0),
    (13_700, 300.0, 20.0),
    (13_700, 500.0, 50.0),
    (1000, 10.0, 0.5),
    (1000, 100.0, 8.0),
    (100, 5.0, 1.0),
    (100, 30.0, 4.0),
    (10, 2.0, 0.5),
    (10, 20.0, 30.0),
    (3, 1.0, 0.3),
    (3, 10.0, 5.0),
    (2, 0.5, 0.2),
    (2, 4.0, 2.0),
    (50_000, 200.0, 2.0),
    (50_000, 1000.0, 30.0),
    (500, 50.0, 0.1),
    (500, 50.0, 60.0),
    (20, 8.0, 1.5),
];

pub fn random_channel(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Channel {
    let m = (0..rows)
        .map(|_| {
            let r: Vec<f64> = (0..cols).map(|_| rng.random_range(0.01..1.0)).collect();
            let s: f64 = r.iter().sum();
            r.into_iter().map(|v| v / s).collect()
        })
        .collect();
    Channel::new(m).unwrap()
}

/// A deterministic channel from `n` secrets onto all of `outputs`.
pub fn random_surjection(rng: &mut ChaCha8Rng, n: usize, outputs: usize) -> Channel {
    let mut f: Vec<usize> = (0..outputs).collect();
    f.extend((outputs..n).map(|_| rng.random_range(0..outputs)));
    f.shuffle(rng);
    Channel::deterministic(&f, outputs).unwrap()
}

pub const SWEEP_SPEC: &str = r#"
mechanism = "vmf"
p = 13700
kappa = [25.0, 150.0]
gamma = "128/60000"
epochs = 3
delta = "1/60000"
outputs = ["epsilon", "winner", "log_capacity"]
"#;

/// Writes the sweep, mean and channel fixtures into `dir`.
pub fn cli_fixtures(dir: &Path) -> (String, String, String) {
    let write = |name: &str, text: &str| {
        let path = dir.join(name);
        std::fs::write(&path, text).unwrap();
        path.to_str().unwrap().to_owned()
    };
    (
        write("sweep.toml", SWEEP_SPEC),
        write("mean.toml", "mean = [0.6, 0.8, 0.0]\n"),
        write(
            "channel.toml",
            "matrix = [[0.5, 0.5], [0.1, 0.9]]\nprior = [0.25, 0.75]\n",
        ),
    )
}

/// One invocation of every subcommand, using the fixtures in `dir`.
pub fn cli_command_set(dir: &Path) -> Vec<Vec<String>> {
    let (sweep, mean, channel) = cli_fixtures(dir);
    let sets: Vec<Vec<&str>> = vec![
        vec![
            "rdp",
            "--mechanism",
            "vmf",
            "--p",
            "13700",
            "--kappa",
            "75",
            "--alpha-grid",
            "1.01:64:20",
        ],
        vec![
            "rdp",
            "--mechanism",
            "gauss",
            "--p",
            "10",
            "--sigma",
            "1.23",
            "--alpha",
            "2,32",
        ],
        vec![
            "convert",
            "--mechanism",
            "vmf",
            "--p",
            "13700",
            "--kappa",
            "75",
            "--epsilon",
            "0.49",
        ],
        vec![
            "convert",
            "--mechanism",
            "gauss",
            "--p",
            "10",
            "--sigma",
            "1.23",
            "--delta",
            "1e-5",
        ],
        vec![
            "account",
            "--mechanism",
            "vmf",
            "--p",
            "13700",
            "--kappa",
            "75",
            "--gamma",
            "128/60000",
            "--epochs",
            "3",
            "--delta",
            "1/60000",
        ],
        vec![
            "capacity",
            "--mechanism",
            "vmf",
            "--p",
            "13700",
            "--kappa",
            "75",
        ],
        vec!["compare", "--p", "100", "--kappa", "10", "--sigma", "0.5"],
        vec!["sweep", &sweep],
        vec![
            "sample", "--p", "3", "--kappa", "20", "--count", "5", "--seed", "9", "--mean", &mean,
        ],
        vec!["channel-capacity", "--channel", &channel],
    ];
    let mut out = Vec::new();
    for set in sets {
        for format in ["csv", "json"] {
            let mut v: Vec<String> = set.iter().map(|s| s.to_string()).collect();
            v.extend(["--format".to_string(), format.to_string()]);
            out.push(v);
        }
    }
    out
}

pub fn run_cli<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> std::process::Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_vmfdp"))
        .args(args)
        .output()
        .expect("run vmfdp")
}
