//! Measurements shared by the integration tests and the acceptance runner:
//! each function drives the crate against an oracle from the parent module
//! and returns the figure of merit.

use mfc_aqm::controller::{Controller, ControllerConfig, ReferenceSample};
use mfc_aqm::estimators::{estimate_f, trend_and_slope, EstimatorConfig};
use mfc_aqm::plant::{build_plant, GainStrategy};
use mfc_aqm::signals::SlidingWindow;
use mfc_aqm::NetworkParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use super::{decay_rate, least_squares_line, LagCascadeOracle, UltraLocalTruth};

pub const TS: f64 = 0.01;
pub const ALPHA: f64 = -1e5;

/// Largest `|F_est - F̄|` over a 3 s open-loop run once the window is full.
pub fn f_recovery_error(fbar: f64) -> f64 {
    let cfg = EstimatorConfig {
        window: 0.2,
        forecast_window: 0.2,
        alpha: ALPHA,
        delay: 0.25,
        ts: TS,
        max_horizon: None,
    };
    let du = |t: f64| 1e-5 * (2.0 * PI * t).sin();
    let mut truth = UltraLocalTruth::new(ALPHA, cfg.delay, TS, 100, 0.0);
    let mut q = SlidingWindow::with_span(cfg.window, TS).unwrap();
    let mut u = SlidingWindow::with_span(cfg.window, TS).unwrap();
    let mut worst: f64 = 0.0;
    for k in 0..300 {
        let t = k as f64 * TS;
        q.push(t, truth.dq);
        u.push(t, du(t - cfg.delay));
        if q.is_full() {
            let f = estimate_f(&q, &u, &cfg).unwrap();
            worst = worst.max((f - fbar).abs());
        }
        truth.advance(|_| fbar, du);
    }
    worst
}

/// Worst relative disagreement `(mean, slope)` between the trend kernel and
/// an ordinary least-squares line over `n` random smooth windows.
///
/// Windows are `A + B·σ + C·sin(ω(t0 + σ) + φ)` with `ω ≤ 0.5 rad/s`, length
/// 0.1-1 s at 10 ms. The mean is compared at the newest sample relative to
/// `max(|LS mean|, max|x|)`, the slope relative to `max(|LS slope|, max|x|/T)`.
pub fn ls_disagreement(seed: u64, n: usize) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = (0.0f64, 0.0f64);
    for _ in 0..n {
        let len = rng.gen_range(11..=101);
        let (a, b, c) = (
            rng.gen_range(-10.0..10.0),
            rng.gen_range(-10.0..10.0),
            rng.gen_range(-10.0..10.0),
        );
        let omega = rng.gen_range(0.05..0.5);
        let phase = rng.gen_range(0.0..2.0 * PI);
        let t0: f64 = rng.gen_range(0.0..30.0);

        let sigma: Vec<f64> = (0..len).map(|i| i as f64 * TS).collect();
        let x: Vec<f64> = sigma
            .iter()
            .map(|s| a + b * s + c * (omega * (t0 + s) + phase).sin())
            .collect();
        let mut w = SlidingWindow::new(len, TS).unwrap();
        for (s, v) in sigma.iter().zip(&x) {
            w.push(t0 + s, *v);
        }
        let est = trend_and_slope(&w).unwrap();
        let span = sigma[len - 1];
        let (a0, a1) = least_squares_line(&sigma, &x);
        let ls_mean = a0 + a1 * span;
        let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        worst.0 = worst.0.max((est.mean - ls_mean).abs() / ls_mean.abs().max(peak));
        worst.1 = worst.1.max((est.slope - a1).abs() / a1.abs().max(peak / span));
    }
    worst
}

/// Closed loop of the library controller around the exact ultra-local
/// model with a known slowly varying `F`, zero reference and `δq(0) = 50`.
/// Returns the fitted decay rate of `|δq|` and the window it was fitted on.
pub fn closed_loop_decay(kp: f64) -> (f64, (f64, f64)) {
    let h = 0.25;
    let cfg = ControllerConfig {
        kp,
        estimator: EstimatorConfig {
            window: 0.3,
            forecast_window: 0.8,
            alpha: ALPHA,
            delay: h,
            ts: TS,
            max_horizon: None,
        },
        stability_check: true,
        command_limits: None,
    };
    let f = |t: f64| 2.0 + 0.5 * (0.2 * t).sin();
    let mut ctrl = Controller::new(cfg).unwrap();
    let mut truth = UltraLocalTruth::new(ALPHA, h, TS, 20, 50.0);
    let mut commands: Vec<f64> = Vec::new();
    let mut series = Vec::new();
    let zero = ReferenceSample { value: 0.0, rate: 0.0 };
    for k in 0..1000 {
        let t = k as f64 * TS;
        series.push((t, truth.dq));
        let out = ctrl.step(truth.dq, zero);
        commands.push(out.du);
        let held = |s: f64| {
            if s < 0.0 {
                0.0
            } else {
                commands.get((s / TS + 1e-9).floor() as usize).copied().unwrap_or(0.0)
            }
        };
        truth.advance(f, held);
    }
    // from the first step at which control acts on the plant, plus one
    // horizon, until the error reaches the numerical floor
    let start = (ctrl.warmup_steps() as f64) * TS + h + 0.5;
    let end = 9.0;
    let (t, e): (Vec<f64>, Vec<f64>) = series
        .iter()
        .filter(|(t, e)| *t >= start && *t <= end && e.abs() > 1e-3)
        .copied()
        .unzip();
    (decay_rate(&t, &e), (start, t.last().copied().unwrap_or(start)))
}

/// Sup-norm error of the discrete plant against the fine RK4 oracle on a
/// band-limited held input, relative to the oracle's peak.
pub fn plant_oracle_error(strategy: GainStrategy, delay: Option<f64>) -> f64 {
    let net = NetworkParams::nominal();
    let op = net.operating_point().unwrap();
    let mut plant = build_plant(&op, &net, TS, delay, strategy).unwrap();
    let p = *plant.params();
    let n = 6000;
    let input = |t: f64| 1e-3 * ((0.2 * t).sin() + 0.5 * (0.5 * t + 1.0).sin());
    let held = |t: f64| input((t / TS + 1e-9).floor() * TS);
    let oracle = LagCascadeOracle {
        gain: p.dc_gain(),
        tc1: p.tc1,
        tc2: p.tc2,
        delay: plant.realized_delay(),
    }
    .sampled_response(held, TS, n, 100);

    let mut state = plant.initial_state();
    let mut worst: f64 = 0.0;
    let mut peak: f64 = 0.0;
    for (k, want) in oracle.iter().enumerate() {
        worst = worst.max((state.unclamped_dq() - want).abs());
        peak = peak.max(want.abs());
        plant.step(&mut state, input(k as f64 * TS));
    }
    worst / peak
}

/// Settled `δq/δu` after a small input step held for `10·(tc1 + tc2)` plus
/// the delay.
pub fn settled_dc_gain(strategy: GainStrategy) -> f64 {
    let net = NetworkParams::nominal();
    let op = net.operating_point().unwrap();
    let mut plant = build_plant(&op, &net, TS, None, strategy).unwrap();
    let p = *plant.params();
    let settle = 10.0 * (p.tc1 + p.tc2) + plant.realized_delay();
    let step = 1e-3;
    let mut state = plant.initial_state();
    for _ in 0..(settle / TS).ceil() as usize {
        plant.step(&mut state, step);
    }
    state.unclamped_dq() / step
}
