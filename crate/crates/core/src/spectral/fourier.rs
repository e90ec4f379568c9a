//! Periodic backend: real FFT plans and Fourier-multiplier operators.

use super::Grid;
use realfft::num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::rc::Rc;
use std::sync::Arc;

/// Forward/inverse real FFT pair for one grid size.
///
/// Coefficients are normalized so that `f(x_j) = Σ_k c_k e^{i k x_j}`;
/// only the `n/2 + 1` non-negative indices are stored.
pub struct FourierPlan {
    n: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
}

impl FourierPlan {
    pub fn new(n: usize) -> Self {
        let mut planner = RealFftPlanner::<f64>::new();
        Self { n, r2c: planner.plan_fft_forward(n), c2r: planner.plan_fft_inverse(n) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_modes(&self) -> usize {
        self.n / 2 + 1
    }

    /// Forward transform into `out` (length `n/2 + 1`). `input` is used as
    /// scratch and left unspecified.
    pub fn forward_in_place(&self, input: &mut [f64], out: &mut [Complex64]) {
        self.r2c.process(input, out).expect("buffer sizes fixed by the plan");
        let scale = 1.0 / self.n as f64;
        for c in out.iter_mut() {
            *c *= scale;
        }
    }

    /// Inverse transform of normalized coefficients. `coeffs` is used as
    /// scratch; the imaginary parts of the zero and Nyquist bins are dropped.
    pub fn inverse_in_place(&self, coeffs: &mut [Complex64], out: &mut [f64]) {
        coeffs[0].im = 0.0;
        let last = coeffs.len() - 1;
        coeffs[last].im = 0.0;
        self.c2r.process(coeffs, out).expect("buffer sizes fixed by the plan");
    }

    pub fn coefficients(&self, values: &[f64]) -> Vec<Complex64> {
        let mut input = values.to_vec();
        let mut out = vec![Complex64::new(0.0, 0.0); self.n_modes()];
        self.forward_in_place(&mut input, &mut out);
        out
    }

    pub fn synthesize(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut c = coeffs.to_vec();
        let mut out = vec![0.0; self.n];
        self.inverse_in_place(&mut c, &mut out);
        out
    }

    fn apply_multiplier(&self, values: &[f64], mult: impl Fn(usize) -> Complex64) -> Vec<f64> {
        let mut c = self.coefficients(values);
        for (m, cm) in c.iter_mut().enumerate() {
            *cm *= mult(m);
        }
        self.synthesize(&c)
    }

    /// Multiplier `-i sgn(k)`; zero and Nyquist modes are mapped to zero.
    pub fn hilbert(&self, _grid: &Grid, values: &[f64]) -> Vec<f64> {
        let nyq = self.n / 2;
        self.apply_multiplier(values, |m| {
            if m == 0 || m == nyq {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, -1.0)
            }
        })
    }

    pub fn derivative(&self, grid: &Grid, values: &[f64], order: usize) -> Vec<f64> {
        let nyq = self.n / 2;
        let k0 = 2.0 * PI / grid.length();
        self.apply_multiplier(values, |m| {
            if m == nyq && order % 2 == 1 {
                return Complex64::new(0.0, 0.0);
            }
            Complex64::new(0.0, k0 * m as f64).powu(order as u32)
        })
    }

    pub fn dealias(&self, values: &[f64]) -> Vec<f64> {
        let cutoff = self.n / 3;
        self.apply_multiplier(values, |m| {
            if m > cutoff {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(1.0, 0.0)
            }
        })
    }

    /// Band-limited evaluation of the trigonometric interpolant at `x`.
    pub fn evaluate(&self, grid: &Grid, coeffs: &[Complex64], x: f64) -> f64 {
        let nyq = self.n / 2;
        let theta = 2.0 * PI * x / grid.length();
        let step = Complex64::new(theta.cos(), theta.sin());
        let mut phase = step;
        let mut acc = 0.0;
        for c in &coeffs[1..nyq] {
            acc += c.re * phase.re - c.im * phase.im;
            phase *= step;
        }
        coeffs[0].re + 2.0 * acc + coeffs[nyq].re * (nyq as f64 * theta).cos()
    }
}

/// Energy fraction in modes `m > (2/3)·cutoff` relative to all modes `m >= 1`.
pub(crate) fn tail_fraction(coeffs: &[Complex64], cutoff: usize) -> f64 {
    let start = (2 * cutoff) / 3;
    let mut total = 0.0;
    let mut tail = 0.0;
    for (m, c) in coeffs.iter().enumerate().skip(1) {
        let e = c.norm_sqr();
        total += e;
        if m > start {
            tail += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        tail / total
    }
}

thread_local! {
    static PLANS: RefCell<HashMap<usize, Rc<FourierPlan>>> = RefCell::new(HashMap::new());
}

/// Run `f` with a cached plan for size `n` (one cache per thread).
pub(crate) fn with_plan<R>(n: usize, f: impl FnOnce(&FourierPlan) -> R) -> R {
    let plan = PLANS.with(|cache| {
        cache.borrow_mut().entry(n).or_insert_with(|| Rc::new(FourierPlan::new(n))).clone()
    });
    f(&plan)
}
