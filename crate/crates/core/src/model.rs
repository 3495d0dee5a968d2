//! Rademacher and Steinhaus random multiplicative functions.

use std::collections::HashMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::rng::{tag, Substream};
use crate::sieve::FactorEntry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// `f(p) = +-1`, supported on squarefree integers.
    Rademacher,
    /// `f(p)` uniform on the unit circle, completely multiplicative.
    Steinhaus,
}

impl ModelKind {
    /// The sign `a_f`: `+1` for Rademacher, `-1` for Steinhaus.
    pub fn sign(self) -> i32 {
        match self {
            ModelKind::Rademacher => 1,
            ModelKind::Steinhaus => -1,
        }
    }

    pub fn sign_f64(self) -> f64 {
        self.sign() as f64
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Rademacher => "rademacher",
            ModelKind::Steinhaus => "steinhaus",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rademacher" | "rad" => Ok(ModelKind::Rademacher),
            "steinhaus" | "st" => Ok(ModelKind::Steinhaus),
            other => Err(format!("unknown model '{other}'")),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A source of prime values `p -> f(p)`; one source is one sample of `f`.
pub trait PrimeValues: Sync {
    fn model(&self) -> ModelKind;
    fn value(&self, p: u64) -> Complex64;
}

/// Lazily evaluated `f(p)` keyed by `(master_seed, trial_index, p)`.
///
/// Nothing is materialized: each query hashes its key, so repeated queries
/// return identical bits and concurrent readers need no synchronization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimeValueStream {
    model: ModelKind,
    master_seed: u64,
    trial_index: u64,
    sub: Substream,
}

impl PrimeValueStream {
    pub fn new(model: ModelKind, master_seed: u64, trial_index: u64) -> Self {
        PrimeValueStream {
            model,
            master_seed,
            trial_index,
            sub: Substream::new(master_seed, tag::PRIME_VALUES, trial_index),
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn trial_index(&self) -> u64 {
        self.trial_index
    }

    /// `f(p)`. Steinhaus values are `exp(2 pi i U)` with `U` on a 53-bit grid;
    /// Rademacher values are one keyed bit mapped to `+-1`.
    #[inline]
    pub fn sample_f_prime(&self, p: u64) -> Complex64 {
        match self.model {
            ModelKind::Steinhaus => {
                let (s, c) = (TAU * self.sub.uniform(p)).sin_cos();
                Complex64::new(c, s)
            }
            ModelKind::Rademacher => Complex64::new(self.rademacher_sign(p) as f64, 0.0),
        }
    }

    /// `f(p)` as `+-1` for the Rademacher model (valid under either model's key).
    #[inline]
    pub fn rademacher_sign(&self, p: u64) -> i8 {
        if self.sub.bits(p) >> 63 == 0 {
            1
        } else {
            -1
        }
    }
}

impl PrimeValues for PrimeValueStream {
    fn model(&self) -> ModelKind {
        self.model
    }

    #[inline]
    fn value(&self, p: u64) -> Complex64 {
        self.sample_f_prime(p)
    }
}

/// The conjugate function `n -> conj(f(n))`.
#[derive(Debug, Clone, Copy)]
pub struct Conjugated<S>(pub S);

impl<S: PrimeValues> PrimeValues for Conjugated<S> {
    fn model(&self) -> ModelKind {
        self.0.model()
    }

    fn value(&self, p: u64) -> Complex64 {
        self.0.value(p).conj()
    }
}

/// Explicit prime values, mostly for hand-checked examples. Primes not in
/// the map get `default`.
#[derive(Debug, Clone)]
pub struct FixedValues {
    pub model: ModelKind,
    pub values: HashMap<u64, Complex64>,
    pub default: Complex64,
}

impl FixedValues {
    pub fn constant(model: ModelKind, value: Complex64) -> Self {
        FixedValues { model, values: HashMap::new(), default: value }
    }
}

impl PrimeValues for FixedValues {
    fn model(&self) -> ModelKind {
        self.model
    }

    fn value(&self, p: u64) -> Complex64 {
        self.values.get(&p).copied().unwrap_or(self.default)
    }
}

/// `f(n)` from the factorization of `n`.
pub fn evaluate_f<S: PrimeValues + ?Sized>(n: u64, entry: &FactorEntry<'_>, values: &S) -> Result<Complex64> {
    if entry.n != n || entry.product() != Some(n) {
        return contract(format!("factorization does not belong to n = {n}"));
    }
    Ok(evaluate_unchecked(entry, values))
}

/// `f(n)` without verifying the factorization.
#[inline]
pub fn evaluate_unchecked<S: PrimeValues + ?Sized>(entry: &FactorEntry<'_>, values: &S) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    match values.model() {
        ModelKind::Rademacher => {
            if !entry.is_squarefree() {
                return Complex64::new(0.0, 0.0);
            }
            for &p in entry.primes {
                acc *= values.value(p);
            }
        }
        ModelKind::Steinhaus => {
            for (p, e) in entry.factors() {
                acc *= values.value(p).powu(e as u32);
            }
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sieve::{factor_interval, generate_primes};

    fn st(seed: u64, trial: u64) -> PrimeValueStream {
        PrimeValueStream::new(ModelKind::Steinhaus, seed, trial)
    }

    #[test]
    fn sign_convention() {
        assert_eq!(ModelKind::Rademacher.sign(), 1);
        assert_eq!(ModelKind::Steinhaus.sign(), -1);
        assert_eq!("Steinhaus".parse::<ModelKind>().unwrap(), ModelKind::Steinhaus);
        assert!("gauss".parse::<ModelKind>().is_err());
    }

    #[test]
    fn supports_and_determinism() {
        let primes = generate_primes(10_000).unwrap();
        let rad = PrimeValueStream::new(ModelKind::Rademacher, 9, 3);
        let s = st(9, 3);
        for &p in primes.primes() {
            let r = rad.sample_f_prime(p);
            assert!(r == Complex64::new(1.0, 0.0) || r == Complex64::new(-1.0, 0.0));
            let z = s.sample_f_prime(p);
            assert!((z.norm() - 1.0).abs() <= 2f64.powi(-50));
            assert_eq!(z, st(9, 3).sample_f_prime(p));
        }
    }

    #[test]
    fn rademacher_mean_is_balanced() {
        let primes = generate_primes(15_485_863).unwrap(); // the millionth prime
        assert_eq!(primes.len(), 1_000_000);
        let rad = PrimeValueStream::new(ModelKind::Rademacher, 2024, 0);
        let sum: i64 = primes.primes().iter().map(|&p| rad.rademacher_sign(p) as i64).sum();
        let mean = sum as f64 / 1e6;
        assert!(mean.abs() <= 4.0 / 1e3, "mean {mean}");
    }

    #[test]
    fn steinhaus_angles_pass_chi_square() {
        let primes = generate_primes(1_299_709).unwrap(); // 10^5 primes
        assert_eq!(primes.len(), 100_000);
        let s = st(77, 5);
        let bins = 50;
        let mut counts = vec![0f64; bins];
        for &p in primes.primes() {
            let z = s.sample_f_prime(p);
            let u = z.im.atan2(z.re).rem_euclid(TAU) / TAU;
            counts[((u * bins as f64) as usize).min(bins - 1)] += 1.0;
        }
        let expected = primes.len() as f64 / bins as f64;
        let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
        // 0.999 quantile of chi-square with 49 degrees of freedom.
        assert!(chi2 < 85.35, "chi2 = {chi2}");
    }

    #[test]
    fn evaluate_examples() {
        let f = factor_interval(0, 14).unwrap();
        let s = st(1, 1);
        let rad = PrimeValueStream::new(ModelKind::Rademacher, 1, 1);
        assert_eq!(evaluate_f(1, &f.entry(0), &s).unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(evaluate_f(12, &f.get(12).unwrap(), &rad).unwrap(), Complex64::new(0.0, 0.0));
        let six = evaluate_f(6, &f.get(6).unwrap(), &s).unwrap();
        assert_eq!(six, s.value(2) * s.value(3));
        let twelve = evaluate_f(12, &f.get(12).unwrap(), &s).unwrap();
        assert!((twelve - s.value(2) * s.value(2) * s.value(3)).norm() < 1e-15);
        assert!(matches!(evaluate_f(13, &f.get(12).unwrap(), &s), Err(crate::Error::Contract(_))));
    }

    #[test]
    fn complete_multiplicativity() {
        let f = factor_interval(0, 1_000_000).unwrap();
        let s = st(5, 0);
        let rad = PrimeValueStream::new(ModelKind::Rademacher, 5, 0);
        let val = |n: u64, v: &PrimeValueStream| evaluate_unchecked(&f.get(n).unwrap(), v);
        let aux = Substream::new(5, tag::AUXILIARY, 0);
        for i in 0..1000u64 {
            let m = 1 + aux.bits(2 * i) % 1000;
            let n = 1 + aux.bits(2 * i + 1) % 1000;
            assert!((val(m * n, &s) - val(m, &s) * val(n, &s)).norm() < 1e-12);
            let gcd = { let (mut a, mut b) = (m, n); while b != 0 { (a, b) = (b, a % b); } a };
            let both_sf = f.get(m).unwrap().is_squarefree() && f.get(n).unwrap().is_squarefree();
            if gcd == 1 && both_sf {
                assert_eq!(val(m * n, &rad), val(m, &rad) * val(n, &rad));
            }
        }
    }

    #[test]
    fn orthogonality_over_streams() {
        let f = factor_interval(0, 100).unwrap();
        let trials = 10_000u64;
        let pairs = [(6u64, 10u64), (12, 18), (7, 49), (30, 31)];
        for &(n, m) in &pairs {
            let mean: Complex64 = (0..trials)
                .map(|t| {
                    let s = st(11, t);
                    evaluate_unchecked(&f.get(n).unwrap(), &s) * evaluate_unchecked(&f.get(m).unwrap(), &s).conj()
                })
                .sum::<Complex64>()
                / trials as f64;
            assert!(mean.norm() <= 5.0 / (trials as f64).sqrt(), "({n},{m}) -> {mean}");
        }
        for n in 1..=100u64 {
            let s = st(11, n);
            let v = evaluate_unchecked(&f.get(n).unwrap(), &s);
            assert!(((v * v.conj()).re - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn conjugated_stream() {
        let s = st(3, 4);
        let c = Conjugated(s);
        assert_eq!(c.value(101), s.value(101).conj());
        assert_eq!(c.model(), ModelKind::Steinhaus);
    }
}
