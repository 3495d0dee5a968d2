//! Sums of `f(n)` over short intervals `(x, x + y]`, their decomposition by
//! largest prime factor, and Monte Carlo estimates of `E|M|^{2q}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::exec::McConfig;
use crate::model::{evaluate_unchecked, ModelKind, PrimeValueStream, PrimeValues};
use crate::sieve::{factor_interval, squarefree_count, IntervalFactorization};
use crate::stats::{ComplexSum, MomentEstimate};

/// The interval `(x, x + y]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalSpec {
    pub x: u64,
    pub y: u64,
}

impl IntervalSpec {
    pub fn new(x: u64, y: u64) -> Self {
        IntervalSpec { x, y }
    }

    /// The interval with `x / y = (log x)^theta`, `y` rounded to an integer.
    /// `None` when the rounded length is zero.
    pub fn from_theta(x: u64, theta: f64) -> Option<Self> {
        let y = (x as f64 / (x as f64).ln().powf(theta)).round();
        if y.is_finite() && y >= 1.0 {
            Some(IntervalSpec { x, y: y as u64 })
        } else {
            None
        }
    }

    /// `delta = x / y`.
    pub fn delta(&self) -> f64 {
        self.x as f64 / self.y as f64
    }

    /// `theta = log(x / y) / log log x`, derived from the integer endpoints.
    pub fn theta(&self) -> f64 {
        let lx = (self.x as f64).ln();
        self.delta().ln() / lx.ln()
    }

    pub fn end(&self) -> u64 {
        self.x + self.y
    }
}

/// Cut points `x_k = x^{e^{-(k+1)}}` for `0 <= k <= K`, `K = floor(log log log x)`
/// clamped at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionSpec {
    x: f64,
    k_max: usize,
    cuts: Vec<f64>,
}

impl DecompositionSpec {
    pub fn new(x: u64) -> Self {
        let xf = x as f64;
        let lll = xf.ln().ln().ln();
        let k_max = if lll.is_finite() && lll >= 1.0 { lll.floor() as usize } else { 0 };
        let cuts = (0..=k_max).map(|k| cut_point(xf, k as i64)).collect();
        DecompositionSpec { x: xf, k_max, cuts }
    }

    /// `K`.
    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// `x_k` for `-1 <= k <= K`, with `x_{-1} = x`.
    pub fn cut(&self, k: i64) -> f64 {
        if k < 0 {
            self.x
        } else {
            self.cuts[k as usize]
        }
    }
}

/// `x^{e^{-(k+1)}}`.
pub fn cut_point(x: f64, k: i64) -> f64 {
    x.powf((-(k as f64) - 1.0).exp())
}

/// `G(x, theta, q) = min{theta sqrt(log log x) + 1 / ((1 - q) sqrt(log log x)), 1}`.
pub fn threshold_g(x: f64, theta: f64, q: f64) -> f64 {
    let s = x.ln().ln().sqrt();
    let g = theta * s + 1.0 / ((1.0 - q) * s);
    if g.is_nan() {
        1.0
    } else {
        g.min(1.0)
    }
}

/// `|m|^{2q}` with `|0|^{2q} = 0` for every `q`, including `q = 0`.
#[inline]
pub fn abs_pow_2q(modulus: f64, q: f64) -> f64 {
    if modulus == 0.0 {
        0.0
    } else if q == 0.0 {
        1.0
    } else if q == 1.0 {
        modulus * modulus
    } else if q == 0.5 {
        modulus
    } else {
        modulus.powf(2.0 * q)
    }
}

/// `A(x, y) = E|M(x, y; f)|^2`: the number of integers in the interval for
/// Steinhaus, the number of squarefree ones for Rademacher.
pub fn a_exact(spec: IntervalSpec, model: ModelKind) -> Result<f64> {
    match model {
        ModelKind::Steinhaus => Ok(spec.y as f64),
        ModelKind::Rademacher => Ok(squarefree_count(spec.x, spec.y)? as f64),
    }
}

/// `M`, split by largest prime factor.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub m: Complex64,
    /// `N_K`: terms with `P(n) <= x_K`.
    pub n_k: Complex64,
    /// `M_k` for `0 <= k <= K`: terms with `x_k < P(n) <= x_{k-1}`.
    pub m_k: Vec<Complex64>,
    /// `M^-(x, y, x)`: terms with `P(n) > x`.
    pub m_minus: Complex64,
}

impl Decomposition {
    /// `N_K + sum_k M_k + M^-`.
    pub fn recombined(&self) -> Complex64 {
        let mut s = ComplexSum::default();
        s.add(self.n_k);
        for &v in &self.m_k {
            s.add(v);
        }
        s.add(self.m_minus);
        s.value()
    }
}

/// An interval factored once and reused across many samples of `f`.
///
/// Primes occurring in the factorizations are re-indexed densely so a trial
/// only has to draw `f(p)` for those primes.
#[derive(Debug, Clone)]
pub struct PreparedInterval {
    spec: IntervalSpec,
    fact: Option<IntervalFactorization>,
    distinct: Vec<u64>,
    slots: Vec<u32>,
    decomposition: DecompositionSpec,
}

impl PreparedInterval {
    pub fn new(spec: IntervalSpec) -> Result<Self> {
        let decomposition = DecompositionSpec::new(spec.x);
        if spec.y == 0 {
            return Ok(PreparedInterval { spec, fact: None, distinct: Vec::new(), slots: Vec::new(), decomposition });
        }
        let fact = factor_interval(spec.x, spec.y)?;
        let (_, primes, _) = fact.csr();
        let mut distinct = primes.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        let slots = primes
            .iter()
            .map(|p| distinct.binary_search(p).expect("prime present") as u32)
            .collect();
        Ok(PreparedInterval { spec, fact: Some(fact), distinct, slots, decomposition })
    }

    pub fn spec(&self) -> IntervalSpec {
        self.spec
    }

    pub fn factorization(&self) -> Option<&IntervalFactorization> {
        self.fact.as_ref()
    }

    pub fn decomposition_spec(&self) -> &DecompositionSpec {
        &self.decomposition
    }

    /// Distinct primes dividing some member of the interval, ascending.
    pub fn distinct_primes(&self) -> &[u64] {
        &self.distinct
    }

    /// `f(n)` for every `n` in the interval, in order.
    pub fn values<S: PrimeValues + ?Sized>(&self, f: &S) -> Vec<Complex64> {
        match &self.fact {
            None => Vec::new(),
            Some(fact) => fact.entries().map(|e| evaluate_unchecked(&e, f)).collect(),
        }
    }

    /// `M(x, y; f)`, fast path for keyed streams.
    pub fn sum_m(&self, stream: &PrimeValueStream) -> Complex64 {
        let Some(fact) = &self.fact else {
            return Complex64::new(0.0, 0.0);
        };
        let (offsets, _, exps) = fact.csr();
        match stream.model() {
            ModelKind::Rademacher => {
                let signs: Vec<i8> = self.distinct.iter().map(|&p| stream.rademacher_sign(p)).collect();
                let sf = fact.squarefree_flags();
                let mut total: i64 = 0;
                for i in 0..fact.len() {
                    if !sf[i] {
                        continue;
                    }
                    let (a, b) = (offsets[i] as usize, offsets[i + 1] as usize);
                    let mut s = 1i8;
                    for &slot in &self.slots[a..b] {
                        s *= signs[slot as usize];
                    }
                    total += s as i64;
                }
                Complex64::new(total as f64, 0.0)
            }
            ModelKind::Steinhaus => {
                let vals: Vec<Complex64> = self.distinct.iter().map(|&p| stream.sample_f_prime(p)).collect();
                let mut sum = ComplexSum::default();
                for i in 0..fact.len() {
                    let (a, b) = (offsets[i] as usize, offsets[i + 1] as usize);
                    let mut acc = Complex64::new(1.0, 0.0);
                    for (&slot, &e) in self.slots[a..b].iter().zip(&exps[a..b]) {
                        let v = vals[slot as usize];
                        acc *= if e == 1 { v } else { v.powu(e as u32) };
                    }
                    sum.add(acc);
                }
                sum.value()
            }
        }
    }

    fn sum_where<S: PrimeValues + ?Sized>(&self, f: &S, keep: impl Fn(u64) -> bool) -> Complex64 {
        let Some(fact) = &self.fact else {
            return Complex64::new(0.0, 0.0);
        };
        fact.entries()
            .filter(|e| keep(e.largest_prime_factor()))
            .map(|e| evaluate_unchecked(&e, f))
            .collect::<ComplexSum>()
            .value()
    }

    /// `M^+(x, y, z; f)`: terms with `P(n) <= z`.
    pub fn sum_m_plus<S: PrimeValues + ?Sized>(&self, z: f64, f: &S) -> Complex64 {
        self.sum_where(f, |p| (p as f64) <= z)
    }

    /// `M^-(x, y, z; f)`: terms with `P(n) > z`.
    pub fn sum_m_minus<S: PrimeValues + ?Sized>(&self, z: f64, f: &S) -> Complex64 {
        self.sum_where(f, |p| (p as f64) > z)
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k > self.decomposition.k_max() {
            return contract(format!("k = {k} outside 0..={}", self.decomposition.k_max()));
        }
        Ok(())
    }

    /// `M_k(x, y; f)`: terms with `x_k < P(n) <= x_{k-1}`.
    pub fn sum_m_k<S: PrimeValues + ?Sized>(&self, k: usize, f: &S) -> Result<Complex64> {
        self.check_k(k)?;
        let lo = self.decomposition.cut(k as i64);
        let hi = self.decomposition.cut(k as i64 - 1);
        Ok(self.sum_where(f, |p| lo < p as f64 && p as f64 <= hi))
    }

    /// `N_k(x, y; f)`: terms with `P(n) <= x_k`.
    pub fn sum_n_k<S: PrimeValues + ?Sized>(&self, k: usize, f: &S) -> Result<Complex64> {
        self.check_k(k)?;
        let cut = self.decomposition.cut(k as i64);
        Ok(self.sum_where(f, |p| p as f64 <= cut))
    }

    /// All pieces of `M = N_K + sum_{0<=k<=K} M_k + M^-(x, y, x)` from one
    /// evaluation of `f` over the interval.
    pub fn decompose<S: PrimeValues + ?Sized>(&self, f: &S) -> Decomposition {
        let kk = self.decomposition.k_max();
        let mut m = ComplexSum::default();
        let mut n_k = ComplexSum::default();
        let mut m_k = vec![ComplexSum::default(); kk + 1];
        let mut m_minus = ComplexSum::default();
        if let Some(fact) = &self.fact {
            let x = self.decomposition.cut(-1);
            for e in fact.entries() {
                let v = evaluate_unchecked(&e, f);
                let p = e.largest_prime_factor() as f64;
                m.add(v);
                if p > x {
                    m_minus.add(v);
                } else if p <= self.decomposition.cut(kk as i64) {
                    n_k.add(v);
                } else {
                    let k = (0..=kk)
                        .find(|&k| self.decomposition.cut(k as i64) < p)
                        .expect("band exists");
                    m_k[k].add(v);
                }
            }
        }
        Decomposition {
            m: m.value(),
            n_k: n_k.value(),
            m_k: m_k.iter().map(|s| s.value()).collect(),
            m_minus: m_minus.value(),
        }
    }
}

/// `M(x, y; f)`.
pub fn sum_m(spec: IntervalSpec, stream: &PrimeValueStream) -> Result<Complex64> {
    Ok(PreparedInterval::new(spec)?.sum_m(stream))
}

/// `S_k(x, z; f) = sum_{x < n <= z, P(n) <= x_k} f(n)`.
pub fn sum_s_k<S: PrimeValues + ?Sized>(x: u64, z: u64, k: usize, f: &S) -> Result<Complex64> {
    let d = DecompositionSpec::new(x);
    if k > d.k_max() {
        return contract(format!("k = {k} outside 0..={}", d.k_max()));
    }
    if z <= x {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let cut = d.cut(k as i64);
    let fact = factor_interval(x, z - x)?;
    Ok(fact
        .entries()
        .filter(|e| e.largest_prime_factor() as f64 <= cut)
        .map(|e| evaluate_unchecked(&e, f))
        .collect::<ComplexSum>()
        .value())
}

/// Monte Carlo estimate of `E|M(x, y; f)|^{2q}` over trials `0..trials`.
pub fn estimate_moment(spec: IntervalSpec, q: f64, model: ModelKind, mc: &McConfig) -> Result<MomentEstimate> {
    let prepared = PreparedInterval::new(spec)?;
    estimate_moment_prepared(&prepared, q, model, mc)
}

pub fn estimate_moment_prepared(
    prepared: &PreparedInterval,
    q: f64,
    model: ModelKind,
    mc: &McConfig,
) -> Result<MomentEstimate> {
    if !(0.0..=1.0).contains(&q) {
        return contract(format!("q = {q} outside [0, 1]"));
    }
    if mc.trials < 2 {
        return contract("at least two trials are needed for a standard error");
    }
    let a = a_exact(prepared.spec(), model)?;
    let samples = mc.exec.map(mc.trials, |t| {
        let stream = PrimeValueStream::new(model, mc.seed, t);
        abs_pow_2q(prepared.sum_m(&stream).norm(), q)
    });
    Ok(MomentEstimate::from_samples(q, &samples, a))
}

/// One row of a theta scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaRow {
    pub theta: f64,
    pub y: u64,
    pub q: f64,
    pub trials: u64,
    pub mean: f64,
    pub stderr: f64,
    #[serde(rename = "A")]
    pub a: f64,
    /// `mean / A^q`.
    pub ratio: f64,
    #[serde(rename = "G")]
    pub g: f64,
    pub seed: u64,
}

impl ThetaRow {
    pub const COLUMNS: [&'static str; 10] = ["theta", "y", "q", "trials", "mean", "stderr", "A", "ratio", "G", "seed"];

    pub fn from_estimate(theta: f64, spec: IntervalSpec, est: &MomentEstimate, seed: u64) -> Self {
        let norm = est.normalization.powf(est.q);
        ThetaRow {
            theta,
            y: spec.y,
            q: est.q,
            trials: est.trials,
            mean: est.mean,
            stderr: est.stderr,
            a: est.normalization,
            ratio: if norm > 0.0 { est.mean / norm } else { 0.0 },
            g: threshold_g(spec.x as f64, theta, est.q),
            seed,
        }
    }

    /// Standard error of the ratio column.
    pub fn ratio_stderr(&self) -> f64 {
        let norm = self.a.powf(self.q);
        if norm > 0.0 {
            self.stderr / norm
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ThetaScan {
    pub rows: Vec<ThetaRow>,
    /// Grid values whose interval length rounded below one.
    pub skipped: Vec<f64>,
}

/// Moments along `x / y = (log x)^theta` for each `theta` in the grid.
pub fn theta_scan(x: u64, grid: &[f64], q: f64, model: ModelKind, mc: &McConfig) -> Result<ThetaScan> {
    let mut scan = ThetaScan::default();
    for &theta in grid {
        if theta < 0.0 || theta.is_nan() {
            return contract(format!("theta = {theta} must be nonnegative"));
        }
        let Some(spec) = IntervalSpec::from_theta(x, theta) else {
            scan.skipped.push(theta);
            continue;
        };
        let est = estimate_moment(spec, q, model, mc)?;
        scan.rows.push(ThetaRow::from_estimate(theta, spec, &est, mc.seed));
    }
    Ok(scan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Exec;
    use crate::model::FixedValues;
    use crate::sieve::generate_primes;

    fn st(t: u64) -> PrimeValueStream {
        PrimeValueStream::new(ModelKind::Steinhaus, 99, t)
    }

    #[test]
    fn theta_and_delta() {
        let s = IntervalSpec::new(1_000_000, 1_000);
        assert_eq!(s.delta(), 1000.0);
        let th = s.theta();
        assert!(((1e6f64).ln().powf(th) - 1000.0).abs() < 1e-9);
        assert_eq!(IntervalSpec::from_theta(1_000_000, 0.0).unwrap().y, 1_000_000);
        assert!(IntervalSpec::from_theta(100, 50.0).is_none());
    }

    #[test]
    fn decomposition_spec_cuts() {
        let d = DecompositionSpec::new(1_000_000);
        assert_eq!(d.k_max(), 0);
        assert!((d.cut(0) - 1e6f64.powf((-1f64).exp())).abs() < 1e-9);
        assert_eq!(d.cut(-1), 1e6);
        // log log log x >= 1 needs x >= e^{e^e} ~ 3.8e6.
        assert_eq!(DecompositionSpec::new(4_000_000).k_max(), 1);
        assert_eq!(DecompositionSpec::new(10).k_max(), 0);
        let d = DecompositionSpec::new(u64::MAX);
        assert!(d.cut(d.k_max() as i64) < d.cut(0));
    }

    #[test]
    fn g_bound() {
        assert_eq!(threshold_g(1e6, 0.0, 1.0), 1.0);
        let g = threshold_g(1e30, 0.01, 0.5);
        let s = (1e30f64).ln().ln().sqrt();
        assert!((g - (0.01 * s + 2.0 / s).min(1.0)).abs() < 1e-15);
        assert!(g > 0.0 && g <= 1.0);
    }

    #[test]
    fn empty_and_vanishing_sums() {
        let empty = PreparedInterval::new(IntervalSpec::new(10, 0)).unwrap();
        assert_eq!(empty.sum_m(&st(0)), Complex64::new(0.0, 0.0));
        assert_eq!(a_exact(IntervalSpec::new(10, 0), ModelKind::Steinhaus).unwrap(), 0.0);
        let rad = PrimeValueStream::new(ModelKind::Rademacher, 1, 1);
        assert_eq!(sum_m(IntervalSpec::new(48, 2), &rad).unwrap(), Complex64::new(0.0, 0.0));
        let m = sum_m(IntervalSpec::new(10, 4), &st(3)).unwrap();
        assert!(m.norm() <= 4.0);
        let s = st(3);
        let direct = s.value(11) + s.value(2) * s.value(2) * s.value(3) + s.value(13) + s.value(2) * s.value(7);
        assert!((m - direct).norm() < 1e-14);
    }

    #[test]
    fn fast_path_matches_generic_evaluation() {
        let p = PreparedInterval::new(IntervalSpec::new(50_000, 3_000)).unwrap();
        for model in [ModelKind::Steinhaus, ModelKind::Rademacher] {
            let s = PrimeValueStream::new(model, 8, 2);
            let generic: Complex64 = p.values(&s).into_iter().collect::<ComplexSum>().value();
            assert!((p.sum_m(&s) - generic).norm() < 1e-9);
        }
    }

    #[test]
    fn plus_minus_edge_cases() {
        let spec = IntervalSpec::new(0, 30);
        let p = PreparedInterval::new(spec).unwrap();
        let s = st(1);
        let m = p.sum_m(&s);
        assert!((p.sum_m_plus(30.0, &s) - m).norm() < 1e-14);
        assert_eq!(p.sum_m_minus(30.0, &s), Complex64::new(0.0, 0.0));
        assert_eq!(p.sum_m_plus(1.0, &s), Complex64::new(1.0, 0.0));
        let p2 = PreparedInterval::new(IntervalSpec::new(5, 30)).unwrap();
        assert_eq!(p2.sum_m_plus(1.0, &s), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn decomposition_identity_and_errors() {
        let p = PreparedInterval::new(IntervalSpec::new(4_000_000, 2_000)).unwrap();
        assert_eq!(p.decomposition_spec().k_max(), 1);
        let s = st(4);
        let d = p.decompose(&s);
        assert!((d.recombined() - d.m).norm() <= 1e-12 * d.m.norm().max(1.0));
        assert!((p.sum_m_k(1, &s).unwrap() - d.m_k[1]).norm() < 1e-12);
        assert!((p.sum_n_k(1, &s).unwrap() - d.n_k).norm() < 1e-12);
        assert!(matches!(p.sum_m_k(2, &s), Err(crate::Error::Contract(_))));
    }

    #[test]
    fn empty_band_vanishes() {
        // x = 4e6: x_0 ~ 268, x_1 ~ 49. Members of (4e6, 4e6 + 20] have P(n) in the
        // bands or above; pick values with only the middle band empty.
        let p = PreparedInterval::new(IntervalSpec::new(4_000_000, 3)).unwrap();
        let lpf = p.factorization().unwrap().largest_prime_factors().to_vec();
        let d = p.decomposition_spec().clone();
        let s = st(0);
        for k in 0..=d.k_max() {
            let occupied = lpf.iter().any(|&q| d.cut(k as i64) < q as f64 && q as f64 <= d.cut(k as i64 - 1));
            if !occupied {
                assert_eq!(p.sum_m_k(k, &s).unwrap(), Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn s_k_examples() {
        let s = st(2);
        assert_eq!(sum_s_k(1000, 1000, 0, &s).unwrap(), Complex64::new(0.0, 0.0));
        let cut = 1000f64.powf((-1f64).exp());
        let fact = factor_interval(1000, 500).unwrap();
        let direct: Complex64 = fact
            .entries()
            .filter(|e| (e.largest_prime_factor() as f64) <= cut)
            .map(|e| evaluate_unchecked(&e, &s))
            .sum();
        assert!((sum_s_k(1000, 1500, 0, &s).unwrap() - direct).norm() < 1e-12);
    }

    #[test]
    fn second_moment_is_interval_length() {
        let mc = McConfig::new(10_000, 7);
        let est = estimate_moment(IntervalSpec::new(10_000, 500), 1.0, ModelKind::Steinhaus, &mc).unwrap();
        assert_eq!(est.normalization, 500.0);
        assert!(est.z_score(500.0) <= 3.0, "{est:?}");
    }

    #[test]
    fn rademacher_normalization() {
        let mc = McConfig::new(100_000, 8);
        let est = estimate_moment(IntervalSpec::new(10, 10), 1.0, ModelKind::Rademacher, &mc).unwrap();
        assert_eq!(a_exact(IntervalSpec::new(10, 10), ModelKind::Rademacher).unwrap(), 6.0);
        assert!(est.z_score(6.0) <= 3.0, "{est:?}");
    }

    #[test]
    fn zeroth_moment_counts_nonzero_sums() {
        let mc = McConfig::new(2_000, 1);
        let est = estimate_moment(IntervalSpec::new(10, 10), 0.0, ModelKind::Rademacher, &mc).unwrap();
        assert!(est.mean <= 1.0 && est.mean > 0.0);
        let zeros = (0..2000)
            .filter(|&t| sum_m(IntervalSpec::new(10, 10), &PrimeValueStream::new(ModelKind::Rademacher, 1, t)).unwrap().norm() == 0.0)
            .count();
        assert_eq!(est.mean, 1.0 - zeros as f64 / 2000.0);
        let empty = estimate_moment(IntervalSpec::new(10, 0), 0.0, ModelKind::Steinhaus, &mc).unwrap();
        assert_eq!((empty.mean, empty.stderr), (0.0, 0.0));
    }

    #[test]
    fn rough_part_second_moment_counts_primes() {
        let x = 1_000_000u64;
        let y = (x as f64 / (x as f64).ln()) as u64;
        let p = PreparedInterval::new(IntervalSpec::new(x, y)).unwrap();
        let primes = generate_primes(x + y).unwrap();
        let count = (primes.pi(x + y) - primes.pi(x)) as f64;
        let trials = 2_000u64;
        let samples: Vec<f64> = Exec::Parallel.map(trials, |t| p.sum_m_minus(x as f64, &st(t)).norm_sqr());
        let est = MomentEstimate::from_samples(1.0, &samples, count);
        assert!(est.z_score(count) <= 3.0, "{est:?} vs {count}");
    }

    #[test]
    fn parallel_and_sequential_agree_bitwise() {
        let spec = IntervalSpec::new(100_000, 2_000);
        let a = estimate_moment(spec, 0.5, ModelKind::Steinhaus, &McConfig::new(300, 5).with_exec(Exec::Sequential)).unwrap();
        let b = estimate_moment(spec, 0.5, ModelKind::Steinhaus, &McConfig::new(300, 5).with_exec(Exec::Parallel)).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn theta_scan_rows() {
        let mc = McConfig::new(200, 3);
        let scan = theta_scan(10_000, &[0.0, 1.0, 40.0], 0.5, ModelKind::Steinhaus, &mc).unwrap();
        assert_eq!(scan.rows.len(), 2);
        assert_eq!(scan.skipped, vec![40.0]);
        assert_eq!(scan.rows[0].y, 10_000);
        let single = estimate_moment(IntervalSpec::new(10_000, scan.rows[1].y), 0.5, ModelKind::Steinhaus, &mc).unwrap();
        assert_eq!(single.mean, scan.rows[1].mean);
        assert!((scan.rows[1].ratio - single.mean / single.normalization.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn fixed_values_sum() {
        let f = FixedValues::constant(ModelKind::Rademacher, Complex64::new(1.0, 0.0));
        let p = PreparedInterval::new(IntervalSpec::new(10, 10)).unwrap();
        // All squarefree members contribute +1.
        assert_eq!(p.sum_m_plus(f64::INFINITY, &f), Complex64::new(6.0, 0.0));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(40))]

            #[test]
            fn partition_identity(x in 0u64..2_000_000, y in 1u64..3_000, z in 0f64..3e6, trial in 0u64..1000, rad in any::<bool>()) {
                let model = if rad { ModelKind::Rademacher } else { ModelKind::Steinhaus };
                let s = PrimeValueStream::new(model, 17, trial);
                let p = PreparedInterval::new(IntervalSpec::new(x, y)).unwrap();
                let m = p.sum_m(&s);
                let tol = 1e-12 * m.norm().max(1.0);
                prop_assert!((p.sum_m_plus(z, &s) + p.sum_m_minus(z, &s) - m).norm() <= tol);
                let d = p.decompose(&s);
                prop_assert!((d.recombined() - m).norm() <= tol);
            }
        }
    }
}
