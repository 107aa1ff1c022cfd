//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use pulsedd::evolve::{convergence_check, evolve, EvolveOptions, QubitState, Trajectory};
use pulsedd::model::{params_from_tau, Axis, PhysicalParams, PulseEvent, PulseSchedule};
use pulsedd::oracle::{exact_dephasing_gamma, few_mode_evolve, golden_rule_rate, FewModeBath};
use pulsedd::quadrature::QuadratureSpec;
use pulsedd::rates::{gamma11, kernel_decay, kernel_dephasing, kernel_population};

const TAU_C: f64 = 0.4 * 2.0 * PI;
const OMEGA0: f64 = 0.1;
const BETA: f64 = 1000.0;
const RATIOS: [f64; 3] = [2.0, 5.0, 50.0];
const DT_EXPONENTS: [i32; 3] = [2, 3, 4];

struct Outcome {
    pass: bool,
    detail: String,
}

fn params(ratio: f64) -> PhysicalParams {
    let c = params_from_tau(TAU_C, ratio).unwrap();
    PhysicalParams::new(OMEGA0, BETA, c.g_theta, c.g_lambda).unwrap()
}

fn dt(exponent: i32) -> f64 {
    TAU_C * 2f64.powi(-exponent)
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Seq {
    None,
    Bb,
    Bp,
}

fn schedule(seq: Seq, exponent: i32, t_max: f64) -> PulseSchedule {
    match seq {
        Seq::None => PulseSchedule::empty(),
        Seq::Bb => PulseSchedule::bb(dt(exponent), t_max).unwrap(),
        Seq::Bp => PulseSchedule::bp(dt(exponent), t_max).unwrap(),
    }
}

fn run(ratio: f64, seq: Seq, exponent: i32) -> Trajectory {
    let t_max = 10.0 * TAU_C;
    evolve(
        &params(ratio),
        &schedule(seq, exponent, t_max),
        QubitState::plus_i(),
        t_max,
        &EvolveOptions::default(),
    )
    .unwrap()
}

fn dephasing_vs_oracle(seq: Seq, tolerance: f64, budget: Duration) -> Outcome {
    let start = Instant::now();
    let p = params(f64::INFINITY);
    let t_max = 10.0 * TAU_C;
    let s = schedule(seq, 3, t_max);
    let traj = evolve(&p, &s, QubitState::plus_i(), t_max, &EvolveOptions::default()).unwrap();
    let quad = QuadratureSpec::default();
    let mut worst: f64 = 0.0;
    for r in &traj.records {
        let gamma = exact_dephasing_gamma(r.t, &s, p.g_theta, p.beta, &quad).unwrap();
        let exact = 0.5 * (-gamma).exp();
        worst = worst.max((r.abs_rho10 - exact).abs() / exact);
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: worst < tolerance && elapsed < budget,
        detail: format!(
            "max relative error {worst:.3e} (limit {tolerance:e}) over {} samples, {:.2} s (limit {} s)",
            traj.records.len(),
            elapsed.as_secs_f64(),
            budget.as_secs()
        ),
    }
}

fn criterion_1() -> Outcome {
    dephasing_vs_oracle(Seq::None, 1e-4, Duration::from_secs(10))
}

fn criterion_2() -> Outcome {
    dephasing_vs_oracle(Seq::Bb, 1e-3, Duration::from_secs(30))
}

fn criterion_3() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for ratio in RATIOS {
        let p = params(ratio);
        let t_max = 0.2 * TAU_C;
        let opts = EvolveOptions {
            max_step: t_max / 64.0,
            ..EvolveOptions::default()
        };
        let traj = evolve(&p, &PulseSchedule::empty(), QubitState::plus_i(), t_max, &opts).unwrap();
        // Least squares of y = t^2 / tau^2 through the origin.
        let (mut num, mut den) = (0.0, 0.0);
        for r in traj.records.iter().skip(1) {
            let y = -(r.abs_rho10 / 0.5).ln();
            let x = r.t * r.t;
            num += x * y;
            den += x * x;
        }
        let tau = (den / num).sqrt();
        let rel = tau / TAU_C - 1.0;
        pass &= rel.abs() < 0.02;
        parts.push(format!("ratio {ratio}: tau/tau_c = {:.5} ({:+.2}%)", tau / TAU_C, 100.0 * rel));
    }
    Outcome {
        pass,
        detail: format!("{} (limit 2%)", parts.join(", ")),
    }
}

fn criterion_4() -> Outcome {
    let p = params(2.0);
    let rate = gamma11(50.0, &p, &PulseSchedule::empty(), &QuadratureSpec::default()).unwrap();
    let golden = golden_rule_rate(&p);
    let rel = rate / golden - 1.0;
    Outcome {
        pass: rel.abs() < 0.01,
        detail: format!("gamma11(50) = {rate:.8}, golden rule = {golden:.8}, deviation {:+.3}% (limit 1%)", 100.0 * rel),
    }
}

struct Grid {
    // (ratio, seq, exponent) -> trajectory; Seq::None stored with exponent 0.
    runs: Vec<((f64, Seq, i32), Trajectory)>,
    elapsed: Duration,
}

impl Grid {
    fn compute() -> Self {
        let mut jobs = Vec::new();
        for ratio in RATIOS {
            jobs.push((ratio, Seq::None, 0));
            for e in DT_EXPONENTS {
                jobs.push((ratio, Seq::Bb, e));
                jobs.push((ratio, Seq::Bp, e));
            }
        }
        let start = Instant::now();
        let runs = jobs
            .into_par_iter()
            .map(|(ratio, seq, e)| ((ratio, seq, e), run(ratio, seq, e)))
            .collect();
        Grid {
            runs,
            elapsed: start.elapsed(),
        }
    }

    fn get(&self, ratio: f64, seq: Seq, exponent: i32) -> &Trajectory {
        let exponent = if seq == Seq::None { 0 } else { exponent };
        &self
            .runs
            .iter()
            .find(|(k, _)| *k == (ratio, seq, exponent))
            .unwrap()
            .1
    }

    fn coherence(&self, ratio: f64, seq: Seq, exponent: i32, t: f64) -> f64 {
        self.get(ratio, seq, exponent).at(t).unwrap().abs_rho10
    }
}

fn criterion_5(grid: &Grid) -> (Outcome, Vec<String>) {
    let mut lines = Vec::new();
    let mut pass = true;
    let mut check = |label: String, ok: bool| {
        pass &= ok;
        lines.push(format!("    [{}] {label}", if ok { "ok" } else { "FAIL" }));
    };
    for t_units in [5.0, 10.0] {
        let t = t_units * TAU_C;
        let c = |ratio, seq, e| grid.coherence(ratio, seq, e, t);
        for e in DT_EXPONENTS {
            let (bb, bp) = (c(2.0, Seq::Bb, e), c(2.0, Seq::Bp, e));
            check(format!("t={t_units}tc ratio=2 dt=2^-{e}: C(bp) {bp:.5} > C(bb) {bb:.5}"), bp > bb);
        }
        for e in DT_EXPONENTS {
            let (bb, bp) = (c(5.0, Seq::Bb, e), c(5.0, Seq::Bp, e));
            if e == 2 {
                check(format!("t={t_units}tc ratio=5 dt=2^-{e}: C(bb) {bb:.5} > C(bp) {bp:.5}"), bb > bp);
            } else {
                check(format!("t={t_units}tc ratio=5 dt=2^-{e}: C(bp) {bp:.5} > C(bb) {bb:.5}"), bp > bb);
            }
        }
        for e in DT_EXPONENTS {
            let (bb, bp) = (c(50.0, Seq::Bb, e), c(50.0, Seq::Bp, e));
            if e == 4 {
                let rel = (bb - bp).abs() / bb;
                check(
                    format!("t={t_units}tc ratio=50 dt=2^-{e}: |C(bb) - C(bp)| / C(bb) = {rel:.2e} < 0.05"),
                    rel < 0.05,
                );
            } else {
                check(format!("t={t_units}tc ratio=50 dt=2^-{e}: C(bb) {bb:.5} > C(bp) {bp:.5}"), bb > bp);
            }
        }
        for ratio in RATIOS {
            let none = c(ratio, Seq::None, 0);
            for e in DT_EXPONENTS {
                for seq in [Seq::Bb, Seq::Bp] {
                    let v = c(ratio, seq, e);
                    check(
                        format!("t={t_units}tc ratio={ratio} dt=2^-{e} {seq:?}: C {v:.5} > no-pulse {none:.5}"),
                        v > none,
                    );
                }
            }
        }
    }
    let within = grid.elapsed < Duration::from_secs(600);
    check(format!("grid runtime {:.1} s < 600 s", grid.elapsed.as_secs_f64()), within);
    let failed = lines.iter().filter(|l| l.contains("[FAIL]")).count();
    (
        Outcome {
            pass,
            detail: format!("{} of {} ordering checks hold", lines.len() - failed, lines.len()),
        },
        lines,
    )
}

fn criterion_6(grid: &Grid) -> Outcome {
    let t = 10.0 * TAU_C;
    let none = grid.get(2.0, Seq::None, 0).at(t).unwrap().state.rho11;
    let mut pass = true;
    let mut parts = Vec::new();
    for e in [3, 4] {
        for seq in [Seq::Bb, Seq::Bp] {
            let v = grid.get(2.0, seq, e).at(t).unwrap().state.rho11;
            pass &= v > none;
            parts.push(format!("{seq:?} 2^-{e}: {v:.5}"));
        }
    }
    Outcome {
        pass,
        detail: format!("rho11(10tc) no-pulse {none:.5}; {}", parts.join(", ")),
    }
}

// Composite Simpson on [a, b] with n (even) panels.
fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> (f64, f64) {
    let h = (b - a) / n as f64;
    let (mut s, mut l1) = (f(a) + f(b), f(a).abs() + f(b).abs());
    for i in 1..n {
        let x = a + i as f64 * h;
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        let v = f(x);
        s += w * v;
        l1 += w * v.abs();
    }
    (s * h / 3.0, l1 * h / 3.0)
}

// Dense reference for all four kernels, integrating piecewise between events
// with the sign pattern read from the counters at each piece's midpoint.
fn brute_force_kernels(t: f64, omega: f64, s: &PulseSchedule) -> ([f64; 6], [f64; 6]) {
    let (nx_t, nz_t) = s.counters(t).unwrap();
    let sx_t = if nx_t % 2 == 0 { 1.0 } else { -1.0 };
    let mut cuts = vec![0.0];
    cuts.extend(s.events().iter().map(|e| e.time).filter(|&x| x < t));
    cuts.push(t);
    let mut value = [0.0; 6];
    let mut norm = [0.0; 6];
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (nx, nz) = s.counters(0.5 * (a + b)).unwrap();
        let px = if (nx + nx_t) % 2 == 0 { 1.0 } else { -1.0 };
        let pz = if (nz + nz_t) % 2 == 0 { 1.0 } else { -1.0 };
        let n = 4000;
        let pieces: [Box<dyn Fn(f64) -> f64>; 6] = [
            Box::new(move |t1| pz * 0.5 * (1.0 + px) * (omega * (t1 - t)).cos()),
            Box::new(move |t1| px * (omega * (t1 - t)).cos()),
            Box::new(move |t1| pz * px * (sx_t * omega * (t1 - t)).cos()),
            Box::new(move |t1| pz * px * (sx_t * omega * (t1 - t)).sin()),
            Box::new(move |t1| pz * (sx_t * omega * (t1 - t)).cos()),
            Box::new(move |t1| pz * (sx_t * omega * (t1 - t)).sin()),
        ];
        for (k, f) in pieces.iter().enumerate() {
            let (v, l1) = simpson(f, a, b, n);
            value[k] += v;
            norm[k] += l1;
        }
    }
    (value, norm)
}

fn criterion_7() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed_0007);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..200 {
        let count = rng.gen_range(0..=6);
        let mut times: Vec<f64> = (0..count).map(|_| rng.gen_range(0.0..10.0)).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let events = times
            .into_iter()
            .filter(|&x| x > 0.0)
            .map(|time| PulseEvent {
                time,
                axis: if rng.gen_bool(0.5) { Axis::X } else { Axis::Z },
            })
            .collect();
        let s = PulseSchedule::new(events).unwrap();
        let omega = rng.gen_range(-2.0..2.0);
        let t = 10.0 - rng.gen_range(0.0..10.0);
        let on = kernel_decay(t, omega, &s, true).unwrap();
        let off = kernel_decay(t, omega, &s, false).unwrap();
        let engine = [
            kernel_population(t, omega, &s).unwrap(),
            kernel_dephasing(t, omega, &s).unwrap(),
            on.re,
            on.im,
            off.re,
            off.im,
        ];
        let (reference, norm) = brute_force_kernels(t, omega, &s);
        for k in 0..6 {
            let scale = norm[k].max(reference[k].abs());
            if scale == 0.0 {
                continue;
            }
            let rel = (engine[k] - reference[k]).abs() / scale;
            worst = worst.max(rel);
            if rel >= 1e-6 {
                failures += 1;
            }
        }
    }
    Outcome {
        pass: failures == 0,
        detail: format!(
            "200 cases x 6 kernel components, max deviation {worst:.2e} relative to the integrand L1 norm (limit 1e-6), {failures} failures"
        ),
    }
}

fn criterion_8() -> Outcome {
    let p = params(2.0);
    let t_max = 10.0 * TAU_C;
    let s = schedule(Seq::Bp, 3, t_max);
    let base = EvolveOptions {
        steps_per_interval: 4,
        max_step: 0.2,
        ..EvolveOptions::default()
    };
    let runs: Vec<Trajectory> = [base, base.halved(), base.halved().halved()]
        .par_iter()
        .map(|o| evolve(&p, &s, QubitState::plus_i(), t_max, o).unwrap())
        .collect();
    let d1 = convergence_check(&runs[0], &runs[1]).unwrap();
    let d2 = convergence_check(&runs[1], &runs[2]).unwrap();
    let ratio = d1 / d2;
    Outcome {
        pass: (8.0..=32.0).contains(&ratio),
        detail: format!(
            "ratio 2, bp, dt = 2^-3 tc: dev(h, h/2) = {d1:.3e}, dev(h/2, h/4) = {d2:.3e}, ratio {ratio:.2} (limit [8, 32])"
        ),
    }
}

// Linear interpolation of |rho10| between neighbouring records.
fn interpolate(traj: &Trajectory, t: f64) -> f64 {
    let i = traj.records.partition_point(|r| r.t < t).clamp(1, traj.records.len() - 1);
    let (a, b) = (&traj.records[i - 1], &traj.records[i]);
    let w = (t - a.t) / (b.t - a.t);
    a.abs_rho10 + w * (b.abs_rho10 - a.abs_rho10)
}

fn criterion_9() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for ratio in RATIOS {
        let p = params(ratio);
        let bath = FewModeBath::discretize(&p, 5, 2, (0.0, 5.0 * OMEGA0), false).unwrap();
        let window = bath.recurrence_time().min(10.0 * TAU_C);
        let checked = 0.5 * window;
        let run = |s: &PulseSchedule| few_mode_evolve(&bath, &p, s, QubitState::plus_i(), window, 0.25).unwrap();
        let none = run(&PulseSchedule::empty());
        let bb = run(&schedule(Seq::Bb, 3, window));
        let mut ok = true;
        let mut first_crossing = None;
        for r in bb.records.iter().filter(|r| r.t > 0.0) {
            if r.abs_rho10 <= interpolate(&none, r.t) {
                first_crossing.get_or_insert(r.t);
                if r.t <= checked {
                    ok = false;
                }
            }
        }
        pass &= ok;
        parts.push(format!(
            "ratio {ratio}: bb above no-pulse on (0, {checked:.1}] {}{}",
            if ok { "yes" } else { "no" },
            match first_crossing {
                Some(t) => format!(" (first crossing t = {t:.2})"),
                None => format!(" (and on the full window {window:.1})"),
            }
        ));
    }
    Outcome {
        pass,
        detail: format!("5 modes on [0, 5 w0], n_max 2, dt = 2^-3 tc; {}", parts.join("; ")),
    }
}

fn main() {
    // `cargo test -- --list` enumerates tests; there are none to list here.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut failed = Vec::new();
    let mut report = |n: usize, name: &str, o: Outcome| {
        println!("criterion {n} {}: {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed.push(n);
        }
    };
    report(1, "pure-dephasing exactness", criterion_1());
    report(2, "echo-sequence exactness", criterion_2());
    report(3, "short-time Gaussian", criterion_3());
    report(4, "golden-rule plateau", criterion_4());
    let grid = Grid::compute();
    let (o5, lines) = criterion_5(&grid);
    report(5, "bb/bp ordering grid", o5);
    for l in lines {
        println!("{l}");
    }
    report(6, "population suppression", criterion_6(&grid));
    report(7, "kernel brute-force equivalence", criterion_7());
    report(8, "RK4 step-halving order", criterion_8());
    report(9, "few-mode trend", criterion_9());
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
