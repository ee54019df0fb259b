//! Fixed-step sample buffers: a transport delay line and a sliding window
//! with trapezoidal quadrature.

use std::collections::VecDeque;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SignalError {
    #[error("window not full: {have} of {need} samples")]
    WindowNotFull { have: usize, need: usize },
    #[error("window length must be at least 2 samples, got {0}")]
    WindowTooShort(usize),
    #[error("sample period must be positive and finite, got {0}")]
    BadSamplePeriod(f64),
}

/// Converts a delay in seconds to a whole number of samples, rounding to
/// nearest with ties away from zero. Returns the sample count and the
/// realized delay in seconds.
pub fn delay_samples(delay_s: f64, ts: f64) -> (usize, f64) {
    let n = (delay_s / ts).round().max(0.0) as usize;
    (n, n as f64 * ts)
}

/// Pure transport delay of a fixed number of samples.
#[derive(Debug, Clone)]
pub struct DelayLine {
    buf: Vec<f64>,
    head: usize,
    init: f64,
}

impl DelayLine {
    pub fn new(capacity: usize, init: f64) -> Self {
        Self {
            buf: vec![init; capacity],
            head: 0,
            init,
        }
    }

    pub fn capacity(&self) -> usize {
        self.buf.len()
    }

    /// Pushes `x` and returns the value pushed `capacity` steps earlier (or the
    /// initial value while the line is still filling).
    pub fn step(&mut self, x: f64) -> f64 {
        if self.buf.is_empty() {
            return x;
        }
        let out = std::mem::replace(&mut self.buf[self.head], x);
        self.head = (self.head + 1) % self.buf.len();
        out
    }

    pub fn reset(&mut self) {
        self.buf.fill(self.init);
        self.head = 0;
    }
}

/// The last `M` samples of a uniformly sampled signal, oldest first.
#[derive(Debug, Clone)]
pub struct SlidingWindow {
    samples: VecDeque<(f64, f64)>,
    len: usize,
    ts: f64,
}

impl SlidingWindow {
    pub fn new(len: usize, ts: f64) -> Result<Self, SignalError> {
        if len < 2 {
            return Err(SignalError::WindowTooShort(len));
        }
        if !(ts > 0.0) || !ts.is_finite() {
            return Err(SignalError::BadSamplePeriod(ts));
        }
        Ok(Self {
            samples: VecDeque::with_capacity(len),
            len,
            ts,
        })
    }

    /// Window spanning `span` seconds: `round(span/ts) + 1` samples.
    pub fn with_span(span: f64, ts: f64) -> Result<Self, SignalError> {
        if !(ts > 0.0) || !ts.is_finite() {
            return Err(SignalError::BadSamplePeriod(ts));
        }
        Self::new((span / ts).round() as usize + 1, ts)
    }

    pub fn push(&mut self, t: f64, x: f64) {
        if self.samples.len() == self.len {
            self.samples.pop_front();
        }
        self.samples.push_back((t, x));
    }

    pub fn capacity(&self) -> usize {
        self.len
    }

    pub fn filled(&self) -> usize {
        self.samples.len()
    }

    pub fn is_full(&self) -> bool {
        self.samples.len() == self.len
    }

    pub fn ts(&self) -> f64 {
        self.ts
    }

    /// `T = (M - 1)·Ts`.
    pub fn span(&self) -> f64 {
        (self.len - 1) as f64 * self.ts
    }

    /// Sample times and values, oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.samples.iter().copied()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|&(_, x)| x)
    }

    pub fn latest(&self) -> Option<(f64, f64)> {
        self.samples.back().copied()
    }

    pub fn clear(&mut self) {
        self.samples.clear();
    }

    fn check_full(&self) -> Result<(), SignalError> {
        if self.is_full() {
            Ok(())
        } else {
            Err(SignalError::WindowNotFull {
                have: self.samples.len(),
                need: self.len,
            })
        }
    }

    /// Composite trapezoidal approximation of `∫₀ᵀ kernel(σ)·x(σ) dσ`, with the
    /// local time `σ` measured from the oldest sample.
    pub fn integral(&self, kernel: impl Fn(f64) -> f64) -> Result<f64, SignalError> {
        self.check_full()?;
        Ok(trapezoid(self.len, self.ts, |i, sigma| {
            kernel(sigma) * self.samples[i].1
        }))
    }
}

/// Composite trapezoid over `len` uniformly spaced nodes `σ_i = i·ts`.
/// `f` receives the node index and its local time.
pub fn trapezoid(len: usize, ts: f64, f: impl Fn(usize, f64) -> f64) -> f64 {
    debug_assert!(len >= 2);
    let last = len - 1;
    let mut acc = 0.5 * (f(0, 0.0) + f(last, last as f64 * ts));
    for i in 1..last {
        acc += f(i, i as f64 * ts);
    }
    acc * ts
}
