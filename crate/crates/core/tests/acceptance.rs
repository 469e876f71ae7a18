//! One pass/fail line per acceptance criterion.

mod common;

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use gsep::frames::{build_gabor_frame, build_shearlet_frame, build_wavelet_frame, Frame};
use gsep::grid::Grid;
use gsep::multiscale::{decompose, reconstruct};
use gsep::pipeline::{self, ExperimentConfig, Report, SolveMode};
use gsep::solver::{LambdaSchedule, Regularizer};
use gsep::windows::GaborWindow;
use gsep::Complex64;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn config(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)).unwrap()
}

fn max_dev_from_one(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max((x - 1.0).abs()))
}

fn parseval() -> Outcome {
    let grid = Grid::new(256).unwrap();
    let frames: [(&str, Frame); 2] = [
        ("wavelet", build_wavelet_frame(grid, grid.j_max()).unwrap()),
        ("shearlet", build_shearlet_frame(grid, grid.j_max()).unwrap()),
    ];
    let mut detail = Vec::new();
    let mut pass = true;
    for (name, f) in &frames {
        let tiling = max_dev_from_one(&f.tiling());
        let worst = (0..10)
            .map(|s| {
                let img = common::random_image(grid, 100 + s);
                f.synthesize(&f.analyze(&img).unwrap()).unwrap().rel_err(&img)
            })
            .fold(0.0, f64::max);
        pass &= f.has_low_pass() && tiling <= 1e-12 && worst <= 1e-10;
        detail.push(format!("{name} tiling {tiling:.1e} round trip {worst:.1e}"));
    }
    let gabor = build_gabor_frame(grid, None, GaborWindow::Meyer).unwrap();
    let limit = grid.n() as i64 / 4;
    let worst = (0..10)
        .map(|s| {
            let spec = common::random_image(grid, 200 + s).spectrum();
            let img = common::from_spectrum(grid, |a, b| {
                if a.abs() < limit && b.abs() < limit {
                    spec.at_freq(a, b)
                } else {
                    Complex64::default()
                }
            });
            gabor.synthesize(&gabor.analyze(&img).unwrap()).unwrap().rel_err(&img)
        })
        .fold(0.0, f64::max);
    pass &= worst <= 1e-8;
    detail.push(format!("gabor round trip {worst:.1e}"));
    outcome(pass, detail.join(", "))
}

fn multiscale() -> Outcome {
    let grid = Grid::new(512).unwrap();
    let worst = (0..3)
        .map(|s| {
            let f = common::random_image(grid, 300 + s);
            reconstruct(&decompose(&f, grid.j_max()).unwrap()).unwrap().rel_err(&f)
        })
        .fold(0.0, f64::max);
    outcome(worst <= 1e-10, format!("rel err {worst:.1e}"))
}

fn oracle() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let (obj, lp) = common::toy::lp_instance(seed);
        worst = worst.max((obj - lp).abs() / lp.abs().max(1.0));
    }
    outcome(worst <= 1e-4, format!("20 instances, worst gap {worst:.1e}"))
}

/// Golden runs shared by the remaining criteria.
struct Runs {
    alg1: Report,
    alg2: Report,
    two: Report,
    noisy: Report,
    /// Wall time of each run, in the order above.
    secs: [f64; 4],
}

impl Runs {
    /// Time spent on the diagnostics of the constrained golden3 run.
    fn diagnostics_secs(&self) -> f64 {
        self.alg1.runtime.iter().filter(|(k, _)| k != "solve").map(|(_, v)| v).sum()
    }
}

fn golden_runs() -> Runs {
    let cfg1 = config("golden3.cfg");
    let mut cfg2 = cfg1.clone();
    cfg2.mode = SolveMode::Unconstrained;
    cfg2.regularizer = Regularizer::L1;
    cfg2.lambda = LambdaSchedule::Dyadic { base: 1.0 };
    let two = config("golden2.cfg");
    let mut noisy = two.clone();
    noisy.mode = SolveMode::Noisy;
    noisy.noise_level = 0.01;
    let mut secs = [0.0; 4];
    let mut run = |k: usize, c: &ExperimentConfig, label: &str| {
        let t = Instant::now();
        let r = pipeline::run(c).unwrap();
        secs[k] = t.elapsed().as_secs_f64();
        println!("  {label}: {:.0} s", secs[k]);
        for line in r.errors_csv().lines() {
            println!("    {line}");
        }
        r
    };
    let alg1 = run(0, &cfg1, "golden3 constrained");
    let alg2 = run(1, &cfg2, "golden3 unconstrained");
    let two_run = run(2, &two, "golden2 constrained");
    let noisy_run = run(3, &noisy, "golden2 noisy");
    Runs { alg1, alg2, two: two_run, noisy: noisy_run, secs }
}

fn trend_scales(r: &Report) -> Vec<&pipeline::ScaleDiagnostics> {
    (2..=4).map(|j| r.scale(j).unwrap().diagnostics.as_ref().unwrap()).collect()
}

fn coherence_decay(runs: &Runs) -> Outcome {
    let d = trend_scales(&runs.alg1);
    let mut failed = Vec::new();
    let mut worst = 0.0f64;
    for (k, p) in d[0].pairs.iter().enumerate() {
        for w in d.windows(2) {
            let ratio = w[1].pairs[k].mu / w[0].pairs[k].mu;
            worst = worst.max(ratio);
            if !(ratio <= 0.9) {
                failed.push(format!("{} j={} ratio {ratio:.3}", p.name, w[0].j));
            }
        }
    }
    let detail = if failed.is_empty() {
        format!("{} pairs, worst step ratio {worst:.3}", d[0].pairs.len())
    } else {
        failed.join("; ")
    };
    outcome(d[0].pairs.len() == 10 && failed.is_empty(), detail)
}

fn sparsity_decay(runs: &Runs) -> Outcome {
    let d = trend_scales(&runs.alg1);
    let mut pass = true;
    let mut detail = Vec::new();
    for m in 0..d[0].deltas.len() {
        let ratios: Vec<f64> = d.windows(2).map(|w| w[1].deltas[m] / w[0].deltas[m]).collect();
        pass &= ratios.iter().all(|r| *r <= 0.5);
        detail.push(format!("delta_{} ratios {:.2}, {:.2}", m + 1, ratios[0], ratios[1]));
    }
    outcome(pass, detail.join("; "))
}

fn certificates(runs: &Runs) -> Outcome {
    let (mut checked, mut held) = (0, 0);
    let mut detail = Vec::new();
    for (label, r) in [("golden3/alg1", &runs.alg1), ("golden3/alg2", &runs.alg2), ("golden2", &runs.two), ("golden2/noisy", &runs.noisy)] {
        for s in &r.scales {
            if let Some(ok) = s.certificate_holds() {
                checked += 1;
                held += ok as usize;
                let d = s.diagnostics.as_ref().unwrap();
                detail.push(format!(
                    "{label} j={}: {:.3} <= {:.3}",
                    s.band.label(),
                    s.errors.as_ref().unwrap().abs_sum,
                    d.certificate.bound.unwrap()
                ));
            }
        }
    }
    let noisy_checked = runs.noisy.scales.iter().any(|s| s.certificate_holds().is_some());
    detail.push(format!("{held}/{checked} hold"));
    outcome(checked > 0 && held == checked && noisy_checked, detail.join("; "))
}

fn lambda_condition(runs: &Runs) -> Outcome {
    let d = trend_scales(&runs.alg2);
    let pass = d.iter().all(|x| x.lambda.pass && x.lambda.lambda == 4f64.powi(x.j as i32));
    let detail = d
        .iter()
        .map(|x| format!("j={}: {:.2} <= {}", x.j, x.lambda.max_ratio, x.lambda.lambda))
        .collect::<Vec<_>>()
        .join("; ");
    outcome(pass, detail)
}

fn separation_trend(runs: &Runs) -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for (label, r) in [("alg1", &runs.alg1), ("alg2", &runs.alg2)] {
        let sums: Vec<f64> = (2..=4).map(|j| r.scale(j).unwrap().errors.as_ref().unwrap().sum).collect();
        pass &= sums[1] < sums[0] && sums[2] < sums[1] && sums[2] <= 0.2;
        detail.push(format!("{label} {:.3} > {:.3} > {:.3}", sums[0], sums[1], sums[2]));
    }
    outcome(pass, detail.join("; "))
}

fn kappa_sandwich(runs: &Runs) -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut count = 0;
    for r in [&runs.alg1, &runs.alg2, &runs.two, &runs.noisy] {
        for d in r.scales.iter().filter_map(|s| s.diagnostics.as_ref()) {
            worst = worst.max(d.kappa_lo - d.kappa.mu);
            count += 1;
        }
    }
    outcome(count > 0 && worst <= 1e-9, format!("{count} scales, max(kappa_lo - mu_cN) = {worst:.3}"))
}

/// Per-component relative errors of the constrained golden3 run, j = 1..4.
const GOLDEN3_ERRORS: [[f64; 3]; 4] = [
    [5.715537231e-1, 1.000669517e0, 8.016700890e-1],
    [4.303274488e-1, 1.000007027e0, 6.184484636e-1],
    [4.157696916e-1, 7.062600230e-1, 2.705154376e-1],
    [1.505931679e-2, 7.452249187e-2, 7.124796408e-2],
];

fn golden_table(runs: &Runs) -> Outcome {
    let mut worst = 0.0f64;
    for (j, row) in (1..=4).zip(GOLDEN3_ERRORS) {
        let e = &runs.alg1.scale(j).unwrap().errors.as_ref().unwrap().errors;
        for (got, want) in e.iter().zip(row) {
            worst = worst.max((got.unwrap() - want).abs() / want);
        }
    }
    outcome(worst <= 1e-6, format!("golden3 errors, worst relative deviation {worst:.1e}"))
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |id: &str, budget: Option<f64>, extra: f64, asserted: bool, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        let secs = t.elapsed().as_secs_f64() + extra;
        let status = match (o.pass, asserted) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "FAIL (reported, not asserted)",
        };
        let time = match budget {
            Some(b) => format!("{secs:.1} s / {b:.0} s"),
            None => format!("{secs:.1} s"),
        };
        println!("{id}: {status} [{time}] {}", o.detail);
        if asserted && (!o.pass || budget.is_some_and(|b| secs > b)) {
            failures += 1;
        }
    };
    report("criterion 1", Some(30.0), 0.0, true, &mut parseval);
    report("criterion 2", Some(10.0), 0.0, true, &mut multiscale);
    report("criterion 5", Some(60.0), 0.0, true, &mut oracle);
    let runs = golden_runs();
    let diag = runs.diagnostics_secs();
    report("criterion 3", Some(300.0), diag, true, &mut || coherence_decay(&runs));
    report("criterion 4", Some(120.0), diag, false, &mut || sparsity_decay(&runs));
    report("criterion 6", None, runs.secs.iter().sum(), true, &mut || certificates(&runs));
    report("criterion 7", Some(120.0), diag, true, &mut || lambda_condition(&runs));
    report("criterion 8", Some(1200.0), runs.secs[0] + runs.secs[1], true, &mut || separation_trend(&runs));
    report("criterion 9", None, 0.0, true, &mut || kappa_sandwich(&runs));
    report("golden error table", None, 0.0, true, &mut || golden_table(&runs));
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} check(s) failed");
        ExitCode::FAILURE
    }
}
