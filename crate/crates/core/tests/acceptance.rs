//! Acceptance criteria. Each test writes one `CRITERION n: PASS|FAIL` line
//! straight to stdout (bypassing the harness capture) before asserting.

use std::io::Write;
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use vaopt::adjoint::{reverse_sweep, TraceSeed};
use vaopt::assembly::{Assembler, MaterialParams, SystemMatrices};
use vaopt::cut::{element_quadrature, Phase};
use vaopt::design::{CellGrid, DesignChain};
use vaopt::linalg::{dot, norm, CsrMatrix};
use vaopt::mesh::{DuctLayout, Mesh};
use vaopt::newmark::{run_transient, NewmarkParams, State, Stepper, TransientOptions};
use vaopt::optimize::{run_optimization, OptimizationResult};
use vaopt::presets::preset;
use vaopt::scenario::harmonic_report;
use vaopt::signal::{derivative, SignalSpec};
use vaopt::spectrum::{dft, idft, outlet_weights, windowed_dft_transpose, windowed_spectrum};
use vaopt::{gradcheck, Execution, Problem, ScenarioConfig};

fn report(criterion: u32, title: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "CRITERION {criterion}: {verdict} | {title} | {detail}");
    let _ = out.flush();
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn coarse(name: &str) -> ScenarioConfig {
    let mut cfg = preset(name).unwrap();
    cfg.output.cache_dir = None;
    cfg
}

fn rel_max(a: &[Complex64], b: &[Complex64]) -> f64 {
    let scale = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

#[test]
fn criterion_01_gradient_exactness() {
    let problem = Problem::new(coarse("lowpass-coarse"), Execution::default()).unwrap();
    let (_, grad, rows) = gradcheck::run(&problem).unwrap();
    let per_constraint = |c: usize| rows.iter().filter(|r| r.constraint == c).count();
    let worst = rows.iter().fold(0.0_f64, |a, r| a.max(r.rel_error));
    let pass = per_constraint(0) == 20 && per_constraint(1) == 20 && worst < 1e-3;
    report(
        1,
        "adjoint vs central FD, coarse low-pass, 20 variables per constraint",
        pass,
        &format!(
            "max rel. error {worst:.3e} over {} checks (tol 1e-3), one-sided elements {}",
            rows.len(),
            grad.one_sided
        ),
    );
}

#[test]
fn criterion_02_quadrature_exactness() {
    let h = 2e-3;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(2);
    let mut worst_sum = 0.0_f64;
    let mut cut = 0;
    while cut < 10_000 {
        let phi: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let q = element_quadrature(&phi, h);
        if q.kind != vaopt::cut::ElementKind::Cut {
            continue;
        }
        cut += 1;
        let total: f64 = q.area.iter().map(|p| p.weight).sum();
        worst_sum = worst_sum.max((total - h * h).abs() / (h * h));
    }
    let solid = |phi: [f64; 4]| -> f64 {
        element_quadrature(&phi, h)
            .area
            .iter()
            .filter(|p| p.phase == Phase::Solid)
            .map(|p| p.weight)
            .sum::<f64>()
            / (h * h)
    };
    let mut worst_line = 0.0_f64;
    for _ in 0..10_000 {
        let c: f64 = rng.random_range(0.01..0.99);
        // horizontal φ = y − c, vertical φ = c − x, diagonal φ = x + y − c'
        worst_line = worst_line.max((solid([-c, -c, 1.0 - c, 1.0 - c]) - (1.0 - c)).abs());
        worst_line = worst_line.max((solid([c, c - 1.0, c - 1.0, c]) - c).abs());
        let d: f64 = rng.random_range(0.01..1.99);
        let exact = if d <= 1.0 { 1.0 - 0.5 * d * d } else { 0.5 * (2.0 - d) * (2.0 - d) };
        worst_line = worst_line.max((solid([-d, 1.0 - d, 2.0 - d, 1.0 - d]) - exact).abs());
    }
    report(
        2,
        "cut quadrature: phase areas and straight cuts",
        worst_sum < 1e-12 && worst_line < 1e-10,
        &format!("area-sum rel. error {worst_sum:.2e} (tol 1e-12), straight-cut error {worst_line:.2e} (tol 1e-10)"),
    );
}

#[test]
fn criterion_03_dft_oracle() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
    let mut worst_fwd = 0.0_f64;
    let mut worst_inv = 0.0_f64;
    for n in [8usize, 16, 1000] {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let brute: Vec<Complex64> = (0..n)
            .map(|m| {
                x.iter()
                    .enumerate()
                    .map(|(k, &v)| {
                        let th = -2.0 * std::f64::consts::PI * ((m * k) % n) as f64 / n as f64;
                        Complex64::new(v * th.cos(), v * th.sin())
                    })
                    .sum()
            })
            .collect();
        let fast = dft(&x);
        worst_fwd = worst_fwd.max(rel_max(&fast, &brute));
        let back = idft(&fast);
        let xc: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        worst_inv = worst_inv.max(rel_max(&back, &xc));
    }
    report(
        3,
        "DFT vs O(N^2) sum, N = 8, 16, 1000",
        worst_fwd < 1e-12 && worst_inv < 1e-12,
        &format!("forward {worst_fwd:.2e}, round trip {worst_inv:.2e} (tol 1e-12)"),
    );
}

fn scalar(v: f64) -> CsrMatrix {
    CsrMatrix::from_dense(&[vec![v]])
}

fn coarse_system(problem: &Problem) -> SystemMatrices {
    let phi = problem.level_set(&problem.initial_design()).unwrap();
    problem.assemble(&phi).unwrap()
}

#[test]
fn criterion_04_newmark_properties() {
    // undamped oscillator: the trapezoidal rule conserves energy
    let (m, k) = (2.0, (2.0 * std::f64::consts::PI * 50.0_f64).powi(2) * 2.0);
    let sdof = SystemMatrices {
        m: scalar(m),
        c: scalar(0.0),
        k: scalar(k),
        source: vec![1.0],
        clamped: vec![false],
    };
    let st = Stepper::new(&sdof, NewmarkParams::trapezoidal(1e-4), Execution::Sequential).unwrap();
    let mut s = st.initial(&[1.0]).unwrap();
    let energy = |s: &State| 0.5 * m * s.w[0] * s.w[0] + 0.5 * k * s.v[0] * s.v[0];
    let mut e0 = 0.0;
    let mut drift = 0.0_f64;
    for n in 1..=10_000 {
        let load = if n < 10 { 1.0 } else { 0.0 };
        s = st.step(&s, &[load]);
        if n == 10 {
            e0 = energy(&s);
        } else if n > 10 {
            drift = drift.max((energy(&s) - e0).abs() / e0);
        }
    }

    // coupled coarse system: step residuals
    let problem = Problem::new(coarse("lowpass-coarse"), Execution::default()).unwrap();
    let sys = coarse_system(&problem);
    let stepper = Stepper::new(&sys, problem.newmark, problem.exec).unwrap();
    let opts = TransientOptions {
        store_history: false,
        check_residuals: true,
    };
    let run = run_transient(&stepper, &problem.dp_in, &problem.weights, &opts).unwrap();
    let worst_res = run.residuals.iter().map(|r| r.max()).fold(0.0, f64::max);

    // boundedness over 1e4 steps of white noise
    let mut bounded = true;
    let mut ratios = Vec::new();
    for dt in [1e-5, 1e-4, 1e-3] {
        let st = Stepper::new(&sys, NewmarkParams::trapezoidal(dt), problem.exec).unwrap();
        let p = SignalSpec::WhiteNoise { seed: 11, amplitude: 1.0 }.sample(10_000, dt).unwrap();
        let pmax = p.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let dp = derivative(&p, dt);
        let mut s = st.initial(&sys.load(dp[0])).unwrap();
        let mut vmax = norm(&s.v);
        for &d in &dp[1..] {
            s = st.step(&s, &sys.load(d));
            vmax = vmax.max(norm(&s.v));
        }
        bounded &= vmax.is_finite() && vmax <= 1e3 * pmax;
        ratios.push(vmax / pmax);
    }
    report(
        4,
        "Newmark: energy, residuals, boundedness",
        drift < 1e-6 && worst_res < 1e-10 && run.residuals.len() == problem.dp_in.len() - 1 && bounded,
        &format!(
            "energy drift {drift:.2e} (tol 1e-6), max step residual {worst_res:.2e} over {} steps (tol 1e-10), \
             max |v|/max|p_in| for dt = 1e-5, 1e-4, 1e-3: {:.3e}, {:.3e}, {:.3e} (tol 1e3)",
            run.residuals.len(),
            ratios[0],
            ratios[1],
            ratios[2]
        ),
    );
}

#[test]
fn criterion_05_transmission_identities() {
    let empty = Problem::new(coarse("empty"), Execution::default()).unwrap();
    let e = empty.evaluate(&empty.initial_design()).unwrap();
    let n = e.transmission.len();
    let dev_empty = e.transmission[1..=n / 2].iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max);

    let base = coarse("lowpass-coarse");
    let mut loud = base.clone();
    loud.signal = SignalSpec::WhiteNoise { seed: 1, amplitude: 3.7 };
    let a = Problem::new(base, Execution::default()).unwrap();
    let b = Problem::new(loud, Execution::default()).unwrap();
    let x = a.initial_design();
    let (sa, sb) = (a.evaluate(&x).unwrap().transmission, b.evaluate(&x).unwrap().transmission);
    let active: Vec<usize> = a.pass_bins.iter().chain(&a.stop_bins).copied().collect();
    let dev_bands = active.iter().map(|&m| (sa[m] - sb[m]).abs() / sa[m]).fold(0.0, f64::max);
    // bins far above the mesh cutoff hold ~1e-8 of the peak energy, so the
    // whole-spectrum check is normwise: |ΔS| weighted by |P0| / max |P0|
    let p0 = &a.baseline.spectrum;
    let p0max = p0[1..=n / 2].iter().map(|z| z.norm()).fold(0.0, f64::max);
    let dev_norm = (1..=n / 2)
        .map(|m| (sa[m] - sb[m]).abs() * p0[m].norm() / p0max)
        .fold(0.0, f64::max);
    report(
        5,
        "empty duct S = 1, amplitude invariance",
        dev_empty < 1e-12 && dev_bands < 1e-10 && dev_norm < 1e-10,
        &format!(
            "empty max |S-1| {dev_empty:.2e} (tol 1e-12), x3.7 amplitude: band bins max rel. change {dev_bands:.2e}, \
             full spectrum normwise {dev_norm:.2e} (tol 1e-10)"
        ),
    );
}

#[test]
fn criterion_06_transport_delay() {
    let layout = DuctLayout {
        nx_inlet: 20,
        nx_design: 60,
        nx_outlet: 20,
        ny: 20,
        h: 0.005,
    };
    let mesh = Mesh::new(layout).unwrap();
    let weights = outlet_weights(&mesh);
    let n_nodes = mesh.n_nodes();
    let asm = Assembler::new(mesh, MaterialParams::default()).unwrap();
    let sys = asm.assemble(&vec![-0.5 * layout.h; n_nodes], Execution::default()).unwrap();
    let (dt, f, steps) = (2e-5, 2000.0, 400);
    let st = Stepper::new(&sys, NewmarkParams::trapezoidal(dt), Execution::default()).unwrap();
    let p = SignalSpec::Sine { frequency: f, amplitude: 1.0 }.sample(steps, dt).unwrap();
    let trace = run_transient(&st, &derivative(&p, dt), &weights, &TransientOptions::default())
        .unwrap()
        .trace;

    let peak = trace.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let onset = trace.iter().position(|v| v.abs() > 0.01 * peak).unwrap() as f64;
    // least-squares fit of A sin ωt + B cos ωt over the late window
    let w = 2.0 * std::f64::consts::PI * f;
    let start = (onset as usize + 50).min(steps - 100);
    let (mut ss, mut sc, mut cc, mut ys, mut yc) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (n, &y) in trace.iter().enumerate().skip(start) {
        let (s, c) = (w * n as f64 * dt).sin_cos();
        ss += s * s;
        sc += s * c;
        cc += c * c;
        ys += y * s;
        yc += y * c;
    }
    let det = ss * cc - sc * sc;
    let a = (ys * cc - yc * sc) / det;
    let b = (yc * ss - ys * sc) / det;
    let period = 1.0 / (f * dt);
    let phase_delay = (-b).atan2(a) / w / dt;
    let k = ((onset - phase_delay) / period).round();
    let measured = phase_delay + k * period;
    let expected = 0.5 / 343.0 / dt;
    report(
        6,
        "empty duct arrival delay at 2 kHz",
        (measured - expected).abs() <= 2.0,
        &format!(
            "measured {measured:.2} steps (onset {onset}), expected {expected:.2} steps, tol 2 steps"
        ),
    );
}

fn smoke_run() -> &'static (Problem, OptimizationResult) {
    static RUN: OnceLock<(Problem, OptimizationResult)> = OnceLock::new();
    RUN.get_or_init(|| {
        let cfg = coarse("lowpass-coarse");
        assert_eq!(cfg.optimizer.iterations, 100);
        assert_eq!(cfg.targets.stop, 1e-3);
        let problem = Problem::new(cfg, Execution::default()).unwrap();
        let x0 = problem.initial_design();
        let r = run_optimization(&problem, x0, 100, |_, _, _| Ok(())).unwrap();
        (problem, r)
    })
}

#[test]
fn criterion_07_optimization_smoke() {
    let (problem, r) = smoke_run();
    let again = run_optimization(problem, problem.initial_design(), 100, |_, _, _| Ok(())).unwrap();
    let identical = again.design == r.design
        && again
            .history
            .iter()
            .zip(&r.history)
            .all(|(a, b)| a.phi1.to_bits() == b.phi1.to_bits() && a.phi2.to_bits() == b.phi2.to_bits());
    let [p1_0, p2_0] = r.initial.constraints;
    let [p1, p2] = r.last.constraints;
    let feasible = r.design.iter().all(|v| (0.0..=1.0).contains(v));
    let drop2 = p2 <= 0.1 * p2_0;
    let keep1 = p1 <= 10.0 * p1_0;
    report(
        7,
        "coarse low-pass, 100 iterations, b = 1e-3",
        drop2 && keep1 && identical && feasible,
        &format!(
            "Phi2 {p2_0:.4e} -> {p2:.4e} (ratio {:.2e}, need <= 0.1: {}), Phi1 {p1_0:.4e} -> {p1:.4e} \
             (ratio {:.2e}, need <= 10: {}), deterministic rerun: {identical}",
            p2 / p2_0,
            if drop2 { "ok" } else { "no" },
            p1 / p1_0,
            if keep1 { "ok" } else { "no" },
        ),
    );
}

#[test]
#[ignore = "full-resolution run, several hours"]
fn criterion_08_full_resolution() {
    let mut cfg = preset("lowpass-paper").unwrap();
    cfg.targets.stop = 1e-2;
    cfg.output.cache_dir = None;
    let problem = Problem::new(cfg, Execution::default()).unwrap();
    let r = run_optimization(&problem, problem.initial_design(), 400, |_, _, _| Ok(())).unwrap();
    let mean = |bins: &[usize]| bins.iter().map(|&m| r.last.transmission[m]).sum::<f64>() / bins.len() as f64;
    let (pass_s, stop_s) = (mean(&problem.pass_bins), mean(&problem.stop_bins));
    let [p1, p2] = r.last.constraints;
    let within5 = |v: f64, target: f64| v <= 5.0 * target && v >= target / 5.0;
    report(
        8,
        "full-resolution low-pass, 400 iterations, b = 1e-2",
        (1e-3..=1e-1).contains(&stop_s)
            && (0.7..=1.1).contains(&pass_s)
            && within5(p1, 5.06428)
            && within5(p2, 4.99466),
        &format!("stop mean S {stop_s:.3e}, pass mean S {pass_s:.3}, Phi1 {p1:.4}, Phi2 {p2:.4}"),
    );
}

#[test]
fn criterion_09_harmonic_cross_check() {
    let (problem, r) = smoke_run();
    let h = harmonic_report(problem, &r.last).unwrap();
    let skipped = h.harmonic.iter().filter(|v| v.is_none()).count();
    report(
        9,
        "harmonic vs transient S on the optimized coarse design",
        h.pass_error < 0.2 && h.stop_harmonic < 10.0 * h.stop_transient,
        &format!(
            "pass mean |S_t - S_h| {:.4} (tol 0.2), stop mean S harmonic {:.3e} vs transient {:.3e} (need < 10x), \
             singular bins skipped {skipped}",
            h.pass_error, h.stop_harmonic, h.stop_transient
        ),
    );
}

#[test]
fn criterion_10_transpose_identities() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(10);
    let mut rv = |n: usize, lo: f64| -> Vec<f64> { (0..n).map(|_| rng.random_range(lo..1.0)).collect() };
    let rel = |a: f64, b: f64, scale: f64| (a - b).abs() / scale;

    // design chain: s ↦ s̄ is affine; its linear part against `transpose`
    let grid = CellGrid::new(20, 15);
    let chain = DesignChain::new(grid, 0.1 / 15.0, 8e-3).unwrap();
    let (x, y) = (rv(grid.n_nodes(), 0.0), rv(grid.n_nodes(), -1.0));
    let offset = chain.forward(&vec![0.0; grid.n_nodes()]).unwrap().s_bar;
    let jx: Vec<f64> = chain.forward(&x).unwrap().s_bar.iter().zip(&offset).map(|(a, b)| a - b).collect();
    let jty = chain.transpose(&y);
    let (l, r) = (dot(&jx, &y), dot(&x, &jty));
    let e_chain = rel(l, r, norm(&jx) * norm(&y));

    // windowed DFT restricted to bins, the linear core of the spectral seed
    let n = 200;
    let bins: Vec<usize> = (4..=16).collect();
    let t = rv(n, -1.0);
    let yc: Vec<Complex64> = bins.iter().map(|_| Complex64::new(rv(1, -1.0)[0], rv(1, -1.0)[0])).collect();
    let spec = windowed_spectrum(&t);
    let l: f64 = bins.iter().zip(&yc).map(|(&m, v)| spec[m].re * v.re + spec[m].im * v.im).sum();
    let back = windowed_dft_transpose(&yc, &bins, n);
    let r = dot(&t, &back);
    let e_dft = rel(l, r, norm(&t) * norm(&back));

    // reverse sweep on the coupled coarse system: ⟨g, trace(h)⟩ = −Σ λⁿ·hⁿ
    let problem = Problem::new(coarse("lowpass-coarse"), Execution::default()).unwrap();
    let sys = coarse_system(&problem);
    let st = Stepper::new(&sys, problem.newmark, problem.exec).unwrap();
    let steps = problem.dp_in.len();
    let loads = rv(steps, -1.0);
    let trace = run_transient(&st, &loads, &problem.weights, &TransientOptions::default())
        .unwrap()
        .trace;
    let g = rv(steps, -1.0);
    let seed = TraceSeed {
        trace_grad: &g,
        weights: &problem.weights,
    };
    let mut pairing = vec![0.0; steps];
    reverse_sweep(&st, steps, seed, |n, lam| {
        let h = sys.load(loads[n]);
        pairing[n] = if n == 0 { dot(&lam.ldd, &h) } else { dot(&lam.l, &h) };
    })
    .unwrap();
    let l = dot(&g, &trace);
    let r = -pairing.iter().sum::<f64>();
    let scale = g.iter().zip(&trace).map(|(a, b)| (a * b).abs()).sum::<f64>();
    let e_sweep = rel(l, r, scale);

    report(
        10,
        "dot-product tests: design chain, windowed DFT, reverse sweep",
        e_chain < 1e-12 && e_dft < 1e-12 && e_sweep < 1e-12,
        &format!("design chain {e_chain:.2e}, spectral seed {e_dft:.2e}, reverse sweep {e_sweep:.2e} (tol 1e-12)"),
    );
}
