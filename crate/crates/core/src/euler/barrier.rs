use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::PrimeBand;
use crate::error::{contract, Result};
use crate::interval::cut_point;
use crate::model::{ModelKind, PrimeValues};

/// Constants and derived functions of the barrier events.
///
/// `log_2` below is the iterated logarithm `log log`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierParams {
    pub b: u32,
    pub c: f64,
    pub q: f64,
    pub theta: f64,
    pub x: f64,
}

impl BarrierParams {
    pub const DEFAULT_B: u32 = 2;
    pub const DEFAULT_C: f64 = 10.0;

    pub fn new(q: f64, theta: f64, x: f64) -> Result<Self> {
        Self::with_constants(Self::DEFAULT_B, Self::DEFAULT_C, q, theta, x)
    }

    pub fn with_constants(b: u32, c: f64, q: f64, theta: f64, x: f64) -> Result<Self> {
        if b < 2 {
            return contract("B must be an integer greater than 1");
        }
        if !(c > b as f64) {
            return contract("C must exceed B");
        }
        if !(q < 1.0) {
            return contract("q must be below 1");
        }
        if !(theta >= 0.0) {
            return contract("theta must be non-negative");
        }
        if !(x > std::f64::consts::E.exp()) {
            return contract("x must exceed e^e so that log log log x is defined");
        }
        Ok(BarrierParams { b, c, q, theta, x })
    }

    pub fn log_x(&self) -> f64 {
        self.x.ln()
    }

    pub fn log2_x(&self) -> f64 {
        self.x.ln().ln()
    }

    /// `delta = x / y = (log x)^theta`.
    pub fn delta(&self) -> f64 {
        self.log_x().powf(self.theta)
    }

    /// The open-closed range `(1/sqrt(log_2 x), delta^5]` on which `D(t)` is defined.
    pub fn t_range(&self) -> (f64, f64) {
        (1.0 / self.log2_x().sqrt(), self.delta().powi(5))
    }

    fn check_t(&self, t: f64) -> Result<()> {
        let (lo, hi) = self.t_range();
        if !(t.abs() > lo && t.abs() <= hi) {
            return contract(format!("|t| = {} is outside ({lo}, {hi}]", t.abs()));
        }
        Ok(())
    }

    /// `ceil(log(1/|t|)) + B + 1` for `|t| <= 1/2`, `B + 1` above.
    pub fn d(&self, t: f64) -> Result<i64> {
        self.check_t(t)?;
        Ok(self.d_unchecked(t))
    }

    fn d_unchecked(&self, t: f64) -> i64 {
        let b = self.b as i64;
        if t.abs() <= 0.5 {
            (1.0 / t.abs()).ln().ceil() as i64 + b + 1
        } else {
            b + 1
        }
    }

    /// `C/(1-q) + 5 theta log_2 x + D(t) + log(D(t) + 1)`.
    pub fn a_qt(&self, t: f64) -> Result<f64> {
        let d = self.d(t)? as f64;
        Ok(self.c / (1.0 - self.q) + 5.0 * self.theta * self.log2_x() + d + (d + 1.0).ln())
    }

    /// `j + a(q,t) + 2 log j` for `j >= 1`.
    pub fn a_j(&self, j: usize, t: f64) -> Result<f64> {
        if j == 0 {
            return contract("a_j is defined for j >= 1");
        }
        Ok(j as f64 + self.a_qt(t)? + 2.0 * (j as f64).ln())
    }

    /// `floor(log_2 x) - D(t)`.
    pub fn r(&self, t: f64) -> Result<i64> {
        Ok(self.log2_x().floor() as i64 - self.d(t)?)
    }

    /// `floor(log_2 x) - B`.
    pub fn s(&self) -> i64 {
        self.log2_x().floor() as i64 - self.b as i64
    }

    /// `R(t) - m`.
    pub fn u_m(&self, t: f64, m: i64) -> Result<i64> {
        Ok(self.r(t)? - m)
    }

    /// `x_r = x^{e^{-(r+1)}}`, so that `I_r` runs over `(x_{r+1}, x_r]`.
    pub fn x_r(&self, r: i64) -> f64 {
        cut_point(self.x, r)
    }

    /// `w(r)` from `w(-1) = t` by `w(r) = floor(w(r-1) L_r) / L_r` with
    /// `L_r = log x_r log_2 x_r`. Steps with `L_r <= 0` leave `w` unchanged.
    pub fn w(&self, t: f64, r: i64) -> f64 {
        let mut w = t;
        for step in 0..=r {
            let log_xr = self.log_x() * (-(step as f64) - 1.0).exp();
            let scale = log_xr * log_xr.ln();
            if scale > 0.0 {
                w = (w * scale).floor() / scale;
            }
        }
        w
    }

    /// `w(u_m(t))`.
    pub fn v_m(&self, t: f64, m: i64) -> Result<f64> {
        let u = self.u_m(t, m)?;
        Ok(self.w(t, u))
    }

    /// `min{sqrt(log_2 x), 1/(1-q) + (theta/4) log_2 x}`.
    pub fn a_qx(&self) -> f64 {
        let l = self.log2_x();
        l.sqrt().min(1.0 / (1.0 - self.q) + 0.25 * self.theta * l)
    }

    /// `k + a(q,x) + 2 log k`.
    pub fn a_k_x(&self, k: usize) -> f64 {
        k as f64 + self.a_qx() + 2.0 * (k as f64).ln()
    }
}

/// Whether every partial sum `S_j = inc[0] + ... + inc[j-1]` with
/// `max(k, 1) <= j <= inc.len()` satisfies `lower(j) <= S_j <= upper(j)`.
pub fn band_holds(
    increments: &[f64],
    k: usize,
    lower: impl Fn(usize) -> f64,
    upper: impl Fn(usize) -> f64,
) -> bool {
    let mut sum = 0.0;
    for (i, v) in increments.iter().enumerate() {
        sum += v;
        let j = i + 1;
        if j >= k && (sum < lower(j) || sum > upper(j)) {
            return false;
        }
    }
    true
}

/// The increments `I_{u_m}` for `m = 1..=len`, each evaluated at its own
/// shift, with prime bands sieved once.
#[derive(Debug, Clone)]
pub struct BarrierEvaluator {
    params: BarrierParams,
    k: usize,
    t: f64,
    shifts: Vec<Complex64>,
    bands: Vec<PrimeBand>,
    kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum EventKind {
    Upper,
    Lower,
}

impl BarrierEvaluator {
    fn build(params: BarrierParams, k: usize, t: f64, len: i64, r: i64, shift: impl Fn(i64) -> Result<Complex64>, kind: EventKind) -> Result<Self> {
        let mut shifts = Vec::new();
        let mut bands = Vec::new();
        for m in 1..=len {
            let u = r - m;
            let lo = params.x_r(u + 1).floor() as u64;
            let hi = params.x_r(u).floor() as u64;
            bands.push(PrimeBand::new(lo, hi.max(lo))?);
            shifts.push(shift(m)?);
        }
        Ok(BarrierEvaluator { params, k, t, shifts, bands, kind })
    }

    /// The event that for all `k <= j <= R(t)`,
    /// `|sum_{m <= j} log|I_{u_m}(k / log x, v_m)|| <= a_j(q,t)`.
    pub fn upper(params: BarrierParams, k: usize, t: f64) -> Result<Self> {
        let r = params.r(t)?;
        if k as i64 > r.max(0) {
            return contract(format!("k = {k} exceeds R(t) = {r}"));
        }
        let u = k as f64 / params.log_x();
        Self::build(params, k, t, r.max(0), r, |m| Ok(Complex64::new(u, params.v_m(t, m)?)), EventKind::Upper)
    }

    /// The event that for all `B + 2 <= k <= log_2 x - floor(log V) - 3`,
    /// `-B a_k(q,x) <= sum_{m <= k} log|I_{u_m}(4V / log x, t)| <= a_k(q,x)`.
    ///
    /// `D(t)` is frozen at its value on the boundary for `|t| <= 1/sqrt(log_2 x)`
    /// and at `B + 1` beyond `delta^5`, and `k` is capped at `R(t)` so that
    /// every `u_m` is a valid index.
    pub fn lower(params: BarrierParams, v: f64, t: f64) -> Result<Self> {
        if !(v >= 1.0) {
            return contract("V must be at least 1");
        }
        let (lo, _) = params.t_range();
        let d = params.d_unchecked(if t.abs() <= lo { lo } else { t });
        let r = params.log2_x().floor() as i64 - d;
        let top = (params.log2_x() - v.ln().floor() - 3.0).floor() as i64;
        let len = top.min(r).max(0);
        let u = 4.0 * v / params.log_x();
        let first = params.b as usize + 2;
        Self::build(params, first, t, len, r, |_| Ok(Complex64::new(u, t)), EventKind::Lower)
    }

    pub fn params(&self) -> &BarrierParams {
        &self.params
    }

    /// Number of increments checked.
    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    /// `log|I_{u_m}|` for `m = 1..=len`.
    pub fn log_increments<S: PrimeValues + ?Sized>(&self, f: &S) -> Result<Vec<f64>> {
        let model: ModelKind = f.model();
        self.bands
            .iter()
            .zip(&self.shifts)
            .map(|(band, &s)| band.log_modulus(model, s, &band.sample(f)))
            .collect()
    }

    /// Band check with the configured `C`.
    pub fn holds(&self, increments: &[f64]) -> bool {
        self.holds_with_c(increments, self.params.c)
    }

    /// Band check with `C` replaced, reusing increments from one stream.
    pub fn holds_with_c(&self, increments: &[f64], c: f64) -> bool {
        let p = BarrierParams { c, ..self.params };
        match self.kind {
            EventKind::Upper => {
                let Ok(a) = p.a_qt(self.t) else { return false };
                let bound = |j: usize| j as f64 + a + 2.0 * (j as f64).ln();
                band_holds(increments, self.k, |j| -bound(j), bound)
            }
            EventKind::Lower => {
                let b = p.b as f64;
                band_holds(increments, self.k, |j| -b * p.a_k_x(j), |j| p.a_k_x(j))
            }
        }
    }

    /// Evaluates the event for one stream.
    pub fn evaluate<S: PrimeValues + ?Sized>(&self, f: &S) -> Result<bool> {
        Ok(self.holds(&self.log_increments(f)?))
    }
}

/// Whether the upper barrier event holds at `(k, t)` for the stream `f`.
pub fn barrier_event_holds<S: PrimeValues + ?Sized>(params: &BarrierParams, k: usize, t: f64, f: &S) -> Result<bool> {
    BarrierEvaluator::upper(*params, k, t)?.evaluate(f)
}

/// Whether the lower barrier event `L(t)` holds with parameter `V`.
pub fn lower_event_holds<S: PrimeValues + ?Sized>(params: &BarrierParams, v: f64, t: f64, f: &S) -> Result<bool> {
    BarrierEvaluator::lower(*params, v, t)?.evaluate(f)
}
