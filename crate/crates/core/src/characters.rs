//! Dirichlet characters modulo a prime `r` through discrete logarithms:
//! `chi_j(n) = omega^{j ind(n)}` with `omega = e^{2 pi i/(r-1)}`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::exec::McConfig;
use crate::interval::{abs_pow_2q, estimate_moment, IntervalSpec};
use crate::model::ModelKind;
use crate::sieve::{for_each_prime_in, is_prime};
use crate::stats::{CompensatedSum, MomentEstimate};

pub const MAX_MODULUS: u64 = 1_000_000;

/// Discrete logarithms modulo a prime `r` to its smallest primitive root.
#[derive(Clone)]
pub struct CharacterTable {
    r: u64,
    g: u64,
    /// `ind[n]` for `1 <= n < r`; `ind[0]` is unused and set to `u32::MAX`.
    ind: Vec<u32>,
    /// `roots[k] = omega^k`.
    roots: Vec<Complex64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CharacterTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CharacterTable").field("r", &self.r).field("g", &self.g).finish_non_exhaustive()
    }
}

fn prime_divisors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc
}

/// Smallest primitive root of the prime `r`.
pub fn primitive_root(r: u64) -> u64 {
    let order = r - 1;
    let divisors = prime_divisors(order);
    (2..r)
        .find(|&g| divisors.iter().all(|&q| pow_mod(g, order / q, r) != 1))
        .unwrap_or(1)
}

/// Table for `3 <= r <= 10^6`, `r` prime.
pub fn build_character_table(r: u64) -> Result<CharacterTable> {
    if !(3..=MAX_MODULUS).contains(&r) {
        return contract(format!("modulus {r} is outside [3, {MAX_MODULUS}]"));
    }
    if !is_prime(r) {
        return contract(format!("modulus {r} is not prime"));
    }
    let g = primitive_root(r);
    let n = (r - 1) as usize;
    let mut ind = vec![u32::MAX; r as usize];
    let mut power = 1u64;
    for k in 0..n {
        ind[power as usize] = k as u32;
        power = power * g % r;
    }
    let roots = (0..n)
        .map(|k| Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / n as f64))
        .collect();
    let fft = FftPlanner::new().plan_fft_inverse(n);
    Ok(CharacterTable { r, g, ind, roots, fft })
}

impl CharacterTable {
    pub fn r(&self) -> u64 {
        self.r
    }

    pub fn g(&self) -> u64 {
        self.g
    }

    /// Number of characters, `r - 1`.
    pub fn order(&self) -> usize {
        (self.r - 1) as usize
    }

    /// Discrete logarithm of `n`, `None` when `r | n`.
    pub fn ind(&self, n: u64) -> Option<u32> {
        match self.ind[(n % self.r) as usize] {
            u32::MAX => None,
            k => Some(k),
        }
    }

    /// `chi_j(n)`.
    pub fn chi(&self, j: usize, n: u64) -> Complex64 {
        match self.ind(n) {
            None => Complex64::new(0.0, 0.0),
            Some(k) => self.roots[(j as u64 * k as u64 % (self.r - 1)) as usize],
        }
    }

    /// `entry j = sum_d h[d] omega^{jd}` for every `j`.
    pub fn transform(&self, h: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(h.len(), self.order());
        let mut buf = h.to_vec();
        self.fft.process(&mut buf);
        buf
    }

    /// `h[d] = #{x < n <= x + y : ind(n mod r) = d}`.
    pub fn log_histogram(&self, x: u64, y: u64) -> Vec<Complex64> {
        let r = self.r;
        let full = y / r;
        let mut h = vec![Complex64::new(full as f64, 0.0); self.order()];
        // the leftover y mod r residues after x + full r
        let start = (x + 1) % r;
        for i in 0..y % r {
            if let Some(k) = self.ind((start + i) % r) {
                h[k as usize] += 1.0;
            }
        }
        h
    }
}

/// `sum_{x < n <= x+y} chi_j(n)` for every `j`, from the histogram of
/// discrete logarithms and one transform of length `r - 1`.
pub fn char_sum_all(table: &CharacterTable, x: u64, y: u64) -> Result<Vec<Complex64>> {
    check_interval(x, y)?;
    Ok(table.transform(&table.log_histogram(x, y)))
}

/// [`char_sum_all`] by the double loop over characters and integers.
pub fn char_sum_all_naive(table: &CharacterTable, x: u64, y: u64) -> Result<Vec<Complex64>> {
    check_interval(x, y)?;
    let n = table.order() as u64;
    let inds: Vec<u64> = (x + 1..=x + y).filter_map(|m| table.ind(m)).map(u64::from).collect();
    Ok((0..n)
        .map(|j| {
            let mut acc = Complex64::new(0.0, 0.0);
            for &k in &inds {
                acc += table.roots[(j * k % n) as usize];
            }
            acc
        })
        .collect())
}

fn check_interval(x: u64, y: u64) -> Result<()> {
    if x.checked_add(y).is_none() {
        return contract("x + y overflows");
    }
    Ok(())
}

/// Average of `|M(x, y; chi)|^{2q}` over the characters modulo `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharAvgResult {
    pub r: u64,
    pub x: u64,
    pub y: u64,
    pub q: f64,
    pub average: f64,
    /// `min{x + y, r / (x + y)} + 3`.
    #[serde(rename = "L")]
    pub l: f64,
    /// `(y min{1, theta sqrt(log_2 x) + 1/((1-q) sqrt(log_2 L))})^q`.
    pub bound: f64,
    /// Whether `x + y > r`, where residues wrap around.
    pub wraps: bool,
}

impl CharAvgResult {
    pub const COLUMNS: [&'static str; 7] = ["r", "x", "y", "q", "average", "L", "bound"];
}

/// `min{x + y, r / (x + y)} + 3`.
pub fn l_parameter(r: u64, x: u64, y: u64) -> f64 {
    let s = (x + y) as f64;
    s.min(r as f64 / s) + 3.0
}

/// The right-hand side of the character moment bound with implied constant 1.
pub fn char_bound(x: u64, y: u64, q: f64, l: f64) -> f64 {
    if y == 0 {
        return 0.0;
    }
    let (xf, yf) = (x as f64, y as f64);
    let theta = (xf / yf).ln() / xf.ln().ln();
    let inner = theta * xf.ln().ln().sqrt() + 1.0 / ((1.0 - q) * l.ln().ln().sqrt());
    let m = if inner.is_nan() { 1.0 } else { inner.min(1.0) };
    (yf * m).powf(q)
}

pub fn char_avg_abs_power(table: &CharacterTable, x: u64, y: u64, q: f64) -> Result<CharAvgResult> {
    if !(0.0..=1.0).contains(&q) {
        return contract("q must lie in [0, 1]");
    }
    let sums = char_sum_all(table, x, y)?;
    let total: CompensatedSum = sums.iter().map(|s| abs_pow_2q(s.norm(), q)).collect();
    let average = total.value() / table.order() as f64;
    let l = l_parameter(table.r, x, y);
    Ok(CharAvgResult {
        r: table.r,
        x,
        y,
        q,
        average,
        l,
        bound: char_bound(x, y, q, l),
        wraps: x + y > table.r,
    })
}

/// The exact character average beside a Steinhaus estimate of the same
/// moment over the same interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharModelGap {
    pub char_avg: f64,
    pub model: MomentEstimate,
    /// `char_avg - model.mean`.
    pub gap: f64,
}

impl CharModelGap {
    /// `|gap| / model.stderr`.
    pub fn z_score(&self) -> f64 {
        self.model.z_score(self.char_avg)
    }
}

pub fn compare_to_steinhaus(table: &CharacterTable, x: u64, y: u64, q: f64, mc: &McConfig) -> Result<CharModelGap> {
    if x + y > table.r {
        return contract("the comparison needs x + y <= r");
    }
    let exact = char_avg_abs_power(table, x, y, q)?;
    let model = estimate_moment(IntervalSpec::new(x, y), q, ModelKind::Steinhaus, mc)?;
    Ok(CharModelGap { char_avg: exact.average, model, gap: exact.average - model.mean })
}

fn k_bound(p: u64) -> i64 {
    (p as f64).ln().powf(1.02).floor() as i64
}

fn check_s_k(p: u64, k: i64) -> Result<()> {
    if p >= 2 && k.abs() > k_bound(p) {
        return contract(format!("|k| = {} exceeds floor((log P)^1.02) = {}", k.abs(), k_bound(p)));
    }
    Ok(())
}

/// Per-prime weights `p^{-1/2 - ik/K}` and `p^{-1 - 2ik/K}`, `K = (log P)^{1.01}`.
fn s_k_terms(table: &CharacterTable, p_max: u64, k: i64) -> Result<Vec<(u64, Complex64, Complex64)>> {
    let mut out = Vec::new();
    if p_max < 2 {
        return Ok(out);
    }
    let scale = (p_max as f64).ln().powf(1.01);
    let t = k as f64 / scale;
    for_each_prime_in(0, p_max, |p| {
        if p % table.r != 0 {
            let lp = (p as f64).ln();
            let first = Complex64::from_polar((-0.5 * lp).exp(), -t * lp);
            let second = Complex64::from_polar((-lp).exp(), -2.0 * t * lp);
            out.push((p, first, second));
        }
    })?;
    Ok(out)
}

/// `Re sum_{p <= P} (chi(p) p^{-1/2 - ik/K} + chi(p)^2 p^{-1 - 2ik/K})` for
/// every character, `K = (log P)^{1.01}`.
pub fn s_k_chi(table: &CharacterTable, p_max: u64, k: i64) -> Result<Vec<f64>> {
    check_s_k(p_max, k)?;
    let n = table.order() as u64;
    let mut h = vec![Complex64::new(0.0, 0.0); n as usize];
    for (p, first, second) in s_k_terms(table, p_max, k)? {
        let d = table.ind(p).map(u64::from).unwrap_or_default();
        h[d as usize] += first;
        h[(2 * d % n) as usize] += second;
    }
    Ok(table.transform(&h).into_iter().map(|z| z.re).collect())
}

/// [`s_k_chi`] one character at a time.
pub fn s_k_chi_naive(table: &CharacterTable, p_max: u64, k: i64) -> Result<Vec<f64>> {
    check_s_k(p_max, k)?;
    let terms = s_k_terms(table, p_max, k)?;
    Ok((0..table.order())
        .map(|j| {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(p, first, second) in &terms {
                let c = table.chi(j, p);
                acc += c * first + c * c * second;
            }
            acc.re
        })
        .collect())
}
