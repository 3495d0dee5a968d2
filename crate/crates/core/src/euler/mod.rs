//! Random Euler products `prod_p (1 + a_f f(p) / p^{1/2 + s})^{a_f}` and the
//! quantities built from them.

mod barrier;
mod parseval;

pub use barrier::{band_holds, barrier_event_holds, lower_event_holds, BarrierEvaluator, BarrierParams};
pub use parseval::{parseval_check, ParsevalOptions, ParsevalResult};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::exec::McConfig;
use crate::model::{ModelKind, PrimeValueStream, PrimeValues};
use crate::sieve::for_each_prime_in;
use crate::stats::{ComplexSum, CompensatedSum, MomentEstimate};

/// A product over the primes in `(p_lo, p_hi]` evaluated at `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerProductSpec {
    pub p_lo: u64,
    pub p_hi: u64,
    pub s: Complex64,
    pub model: ModelKind,
}

/// Primes of a range with the per-prime constants every evaluation needs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PrimeBand {
    primes: Vec<u64>,
    log_p: Vec<f64>,
    inv_sqrt: Vec<f64>,
}

impl PrimeBand {
    /// Primes in `(lo, hi]`.
    pub fn new(lo: u64, hi: u64) -> Result<Self> {
        let mut band = PrimeBand::default();
        for_each_prime_in(lo, hi, |p| band.push(p))?;
        Ok(band)
    }

    pub fn from_primes(primes: &[u64]) -> Self {
        let mut band = PrimeBand::default();
        for &p in primes {
            band.push(p);
        }
        band
    }

    fn push(&mut self, p: u64) {
        let pf = p as f64;
        self.primes.push(p);
        self.log_p.push(pf.ln());
        self.inv_sqrt.push(1.0 / pf.sqrt());
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    /// `f(p)` for each prime of the band.
    pub fn sample<S: PrimeValues + ?Sized>(&self, f: &S) -> Vec<Complex64> {
        self.primes.iter().map(|&p| f.value(p)).collect()
    }

    /// `p^{-1/2 - s}` for the `i`-th prime.
    #[inline]
    fn twist(&self, i: usize, s: Complex64) -> Complex64 {
        let lp = self.log_p[i];
        let (sin, cos) = (-s.im * lp).sin_cos();
        let modulus = self.inv_sqrt[i] * if s.re == 0.0 { 1.0 } else { (-s.re * lp).exp() };
        Complex64::new(modulus * cos, modulus * sin)
    }

    /// A factor `1 + z` can only vanish when `|z| = p^{-1/2 - sigma} = 1`.
    #[inline]
    fn check_factor(&self, i: usize, s: Complex64, z: Complex64) -> Result<()> {
        if s.re == -0.5 && (z + 1.0).norm() <= 1e-12 {
            return Err(Error::Singularity { p: self.primes[i] });
        }
        Ok(())
    }

    /// `sum_p a_f log(1 + a_f f(p) p^{-1/2 - s})`, principal branch per factor,
    /// compensated. `vals` are the prime values from [`PrimeBand::sample`].
    pub fn log_product(&self, model: ModelKind, s: Complex64, vals: &[Complex64]) -> Result<Complex64> {
        let a = model.sign_f64();
        let mut sum = ComplexSum::default();
        for (i, &v) in vals.iter().enumerate() {
            let z = v * self.twist(i, s) * a;
            self.check_factor(i, s, z)?;
            sum.add(log1p_complex(z) * a);
        }
        Ok(sum.value())
    }

    /// `sum_p a_f log|1 + a_f f(p) p^{-1/2 - s}|`: the real part of
    /// [`PrimeBand::log_product`] without computing arguments.
    pub fn log_modulus(&self, model: ModelKind, s: Complex64, vals: &[Complex64]) -> Result<f64> {
        let a = model.sign_f64();
        let mut sum = CompensatedSum::default();
        for (i, &v) in vals.iter().enumerate() {
            let z = v * self.twist(i, s) * a;
            self.check_factor(i, s, z)?;
            let arg = 2.0 * z.re + z.norm_sqr();
            sum.add(0.5 * a * arg.ln_1p());
        }
        Ok(sum.value())
    }
}

/// `log(1 + z)` accurate for small `|z|`.
#[inline]
fn log1p_complex(z: Complex64) -> Complex64 {
    let re = 0.5 * (2.0 * z.re + z.norm_sqr()).ln_1p();
    let im = z.im.atan2(1.0 + z.re);
    Complex64::new(re, im)
}

/// `prod_{p_lo < p <= p_hi} (1 + a_f f(p) / p^{1/2 + s})^{a_f}`, computed as
/// the exponential of a compensated sum of logarithms. An empty range gives 1.
pub fn eval_euler_product<S: PrimeValues + ?Sized>(spec: &EulerProductSpec, f: &S) -> Result<Complex64> {
    if spec.model != f.model() {
        return contract("prime values come from a different model");
    }
    let band = PrimeBand::new(spec.p_lo, spec.p_hi)?;
    let vals = band.sample(f);
    Ok(band.log_product(spec.model, spec.s, &vals)?.exp())
}

/// Which expectation identity is being checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpectationForm {
    /// `E prod |1 + a_f f(p)/p^{1/2+sigma+it}|^{2 a_f} = prod (1 + a_f/p^{1+2 sigma})^{a_f}`.
    SquaredModulus,
    /// Steinhaus only: `E prod |1 - f(p)/p^{1/2+sigma}|^{-2} |1 - f(p)/p^{1/2+sigma+it}|^{-2}`
    /// against `exp(sum (2 + 2 cos(t log p)) / p^{1 + 2 sigma})`.
    TwoPoint,
}

impl std::str::FromStr for ExpectationForm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "squared-modulus" | "single" => Ok(ExpectationForm::SquaredModulus),
            "two-point" => Ok(ExpectationForm::TwoPoint),
            other => Err(format!("unknown expectation form '{other}'")),
        }
    }
}

/// A closed-form expectation and the size of the dropped `O(.)` term in the
/// exponent (zero for exact identities).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub value: f64,
    pub log_error_budget: f64,
}

impl ClosedForm {
    /// Distance from `v` to `[value e^{-budget}, value e^{budget}]`.
    pub fn distance(&self, v: f64) -> f64 {
        let lo = self.value * (-self.log_error_budget).exp();
        let hi = self.value * self.log_error_budget.exp();
        if v < lo {
            lo - v
        } else if v > hi {
            v - hi
        } else {
            0.0
        }
    }
}

/// Range and evaluation point of an expectation check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectationSpec {
    pub p_lo: u64,
    pub p_hi: u64,
    pub sigma: f64,
    pub t: f64,
    pub model: ModelKind,
    pub form: ExpectationForm,
}

fn check_expectation(spec: &ExpectationSpec) -> Result<()> {
    if spec.p_hi < spec.p_lo {
        return contract("empty or reversed prime range");
    }
    if spec.form == ExpectationForm::TwoPoint {
        if spec.model != ModelKind::Steinhaus {
            return contract("the two-point expectation is only available for the Steinhaus model");
        }
        if spec.p_lo <= 400 {
            return contract("the two-point expectation needs p_lo > 400");
        }
        if spec.sigma <= -1.0 / (spec.p_hi as f64).ln() {
            return contract("the two-point expectation needs sigma > -1/log p_hi");
        }
    }
    Ok(())
}

/// The right-hand side of the expectation identity selected by `spec.form`.
pub fn expected_sq_closed_form(spec: &ExpectationSpec) -> Result<ClosedForm> {
    check_expectation(spec)?;
    let a = spec.model.sign_f64();
    let mut log = CompensatedSum::default();
    match spec.form {
        ExpectationForm::SquaredModulus => {
            for_each_prime_in(spec.p_lo, spec.p_hi, |p| {
                log.add(a * (a * (p as f64).powf(-1.0 - 2.0 * spec.sigma)).ln_1p())
            })?;
            Ok(ClosedForm { value: log.value().exp(), log_error_budget: 0.0 })
        }
        ExpectationForm::TwoPoint => {
            for_each_prime_in(spec.p_lo, spec.p_hi, |p| {
                let pf = p as f64;
                log.add((2.0 + 2.0 * (spec.t * pf.ln()).cos()) * pf.powf(-1.0 - 2.0 * spec.sigma))
            })?;
            let x = spec.p_lo as f64;
            Ok(ClosedForm { value: log.value().exp(), log_error_budget: 1.0 / (x.sqrt() * x.ln()) })
        }
    }
}

/// The random product whose expectation [`expected_sq_closed_form`] gives,
/// for one sample of `f`.
pub fn expectation_sample(spec: &ExpectationSpec, band: &PrimeBand, vals: &[Complex64]) -> Result<f64> {
    let base = Complex64::new(spec.sigma, 0.0);
    let shifted = Complex64::new(spec.sigma, spec.t);
    let log = match spec.form {
        ExpectationForm::SquaredModulus => 2.0 * band.log_modulus(spec.model, shifted, vals)?,
        ExpectationForm::TwoPoint => {
            2.0 * (band.log_modulus(spec.model, base, vals)? + band.log_modulus(spec.model, shifted, vals)?)
        }
    };
    Ok(log.exp())
}

/// Monte Carlo estimate of the left-hand side of an expectation identity.
/// The returned normalization is the closed form.
pub fn mc_expected_sq(spec: &ExpectationSpec, mc: &McConfig) -> Result<MomentEstimate> {
    let closed = expected_sq_closed_form(spec)?;
    if mc.trials < 2 {
        return contract("at least two trials are needed for a standard error");
    }
    let band = PrimeBand::new(spec.p_lo, spec.p_hi)?;
    let samples = mc.exec.map(mc.trials, |t| {
        let stream = PrimeValueStream::new(spec.model, mc.seed, t);
        expectation_sample(spec, &band, &band.sample(&stream))
    });
    let samples = samples.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(MomentEstimate::from_samples(1.0, &samples, closed.value))
}

/// Discretization of `t` at spacing `1/K_P` over `|t| <= delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Prime cutoff of `F_P`.
    pub p: u64,
    /// `K_P = (log P)^{1.01}`.
    pub k_p: f64,
    pub delta: f64,
}

impl QuadratureSpec {
    pub fn new(p: u64, delta: f64) -> Result<Self> {
        if p < 2 {
            return contract("P must be at least 2 for K_P = (log P)^1.01 to be positive");
        }
        Self::with_spacing(p, (p as f64).ln().powf(1.01), delta)
    }

    /// Explicit spacing, e.g. for cutoffs below 2.
    pub fn with_spacing(p: u64, k_p: f64, delta: f64) -> Result<Self> {
        if !(k_p > 0.0 && delta > 0.0) {
            return contract("K_P and delta must be positive");
        }
        Ok(QuadratureSpec { p, k_p, delta })
    }

    /// `floor(delta K_P)`; the grid is `k / K_P` for `|k| <=` this.
    pub fn half_width(&self) -> i64 {
        (self.delta * self.k_p).floor() as i64
    }

    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        let h = self.half_width();
        (-h..=h).map(move |k| k as f64 / self.k_p)
    }

    pub fn band(&self) -> Result<PrimeBand> {
        PrimeBand::new(0, self.p)
    }
}

/// `(1/delta) (1/K_P) sum_{|k| <= delta K_P} |F_P(k_shift + ik/K_P)|^2`.
pub fn integral_avg_sq<S: PrimeValues + ?Sized>(q: &QuadratureSpec, k_shift: f64, f: &S) -> Result<f64> {
    let band = q.band()?;
    integral_avg_sq_band(q, &band, k_shift, f.model(), &band.sample(f))
}

pub fn integral_avg_sq_band(
    q: &QuadratureSpec,
    band: &PrimeBand,
    k_shift: f64,
    model: ModelKind,
    vals: &[Complex64],
) -> Result<f64> {
    let mut sum = CompensatedSum::default();
    for t in q.grid() {
        let lm = band.log_modulus(model, Complex64::new(k_shift, t), vals)?;
        sum.add((2.0 * lm).exp());
    }
    Ok(sum.value() / (q.delta * q.k_p))
}

/// Per-grid-point terms of the discretization defect
/// `(1/delta) int_{|u| <= 1/(2K_P)} |F_P(ik/K_P + iu) - F_P(ik/K_P)|^2 du`,
/// each inner integral by a 9-point midpoint rule.
pub fn perturbation_defect_terms<S: PrimeValues + ?Sized>(q: &QuadratureSpec, f: &S) -> Result<Vec<f64>> {
    let band = q.band()?;
    perturbation_defect_terms_band(q, &band, f.model(), &band.sample(f))
}

pub fn perturbation_defect_terms_band(
    q: &QuadratureSpec,
    band: &PrimeBand,
    model: ModelKind,
    vals: &[Complex64],
) -> Result<Vec<f64>> {
    const NODES: usize = 9;
    let h = 1.0 / (NODES as f64 * q.k_p);
    let start = -0.5 / q.k_p;
    q.grid()
        .map(|t| {
            let centre = band.log_product(model, Complex64::new(0.0, t), vals)?.exp();
            let mut acc = CompensatedSum::default();
            for i in 0..NODES {
                let u = start + (i as f64 + 0.5) * h;
                let v = band.log_product(model, Complex64::new(0.0, t + u), vals)?.exp();
                acc.add((v - centre).norm_sqr() * h);
            }
            Ok(acc.value() / q.delta)
        })
        .collect()
}

/// Sum of [`perturbation_defect_terms`].
pub fn perturbation_defect<S: PrimeValues + ?Sized>(q: &QuadratureSpec, f: &S) -> Result<f64> {
    Ok(perturbation_defect_terms(q, f)?.into_iter().collect::<CompensatedSum>().value())
}

/// Self-normalized estimate of the tilted probability
/// `E[1_A W_t] / E[W_t]` with `W_t = prod_{p <= x^{1/e}} |1 + a_f f(p)/p^{1/2+it}|^{2 a_f}`.
///
/// Weights are handled in log space and rescaled by their maximum; the
/// standard error is the delta-method one for a ratio estimator.
pub fn tilted_prob_estimate<E>(event: E, t: f64, x: f64, model: ModelKind, mc: &McConfig) -> Result<MomentEstimate>
where
    E: Fn(&PrimeValueStream) -> bool + Sync + Send,
{
    if mc.trials < 2 {
        return contract("at least two trials are needed for a standard error");
    }
    if !(x >= 1.0) {
        return contract("x must be at least 1");
    }
    let cutoff = x.powf((-1f64).exp()).floor() as u64;
    let band = PrimeBand::new(0, cutoff)?;
    let draws = mc.exec.map(mc.trials, |i| {
        let stream = PrimeValueStream::new(model, mc.seed, i);
        let lw = band.log_modulus(model, Complex64::new(0.0, t), &band.sample(&stream)).map(|v| 2.0 * v);
        (lw, event(&stream))
    });
    let mut logs = Vec::with_capacity(draws.len());
    let mut hits = Vec::with_capacity(draws.len());
    for (lw, hit) in draws {
        logs.push(lw?);
        hits.push(hit);
    }
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(Error::Numerical("tilting weights are not finite".into()));
    }
    let w: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let total: CompensatedSum = w.iter().copied().collect();
    let hit: CompensatedSum = w.iter().zip(&hits).map(|(&wi, &h)| if h { wi } else { 0.0 }).collect();
    let total = total.value();
    if !(total > 0.0) {
        return Err(Error::Numerical("tilting weights sum to zero".into()));
    }
    let ratio = hit.value() / total;
    let spread: CompensatedSum = w
        .iter()
        .zip(&hits)
        .map(|(&wi, &h)| {
            let d = wi * (if h { 1.0 } else { 0.0 } - ratio);
            d * d
        })
        .collect();
    let stderr = spread.value().sqrt() / total;
    Ok(MomentEstimate { q: 1.0, trials: mc.trials, mean: ratio, stderr, normalization: 1.0 })
}
