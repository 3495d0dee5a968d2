//! Primes, interval factorization, smooth and squarefree counting.

use std::io::{self, Write};

use crate::error::{capacity, contract, Result};

/// Largest supported `limit` for [`generate_primes`].
pub const MAX_PRIME_LIMIT: u64 = 1 << 40;
/// Largest supported right endpoint `x + y` of a factored interval.
pub const MAX_INTERVAL_END: u64 = 1 << 48;
/// Largest supported interval length `y`.
pub const MAX_INTERVAL_LEN: u64 = 100_000_000;
/// Largest `x` accepted by [`psi_smooth_count`].
pub const MAX_PSI_X: u64 = 100_000_000;

const SEGMENT: u64 = 1 << 18;
// 2*3*5*...*37 > 2^48, so no n <= 2^48 has more than 12 distinct prime factors.
const MAX_DISTINCT: usize = 12;

/// All primes up to `limit`, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u64>,
}

impl PrimeTable {
    pub fn limit(&self) -> u64 {
        self.limit
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

    /// Primes in `(lo, hi]`, clipped to the table.
    pub fn range(&self, lo: u64, hi: u64) -> &[u64] {
        let a = self.primes.partition_point(|&p| p <= lo);
        let b = self.primes.partition_point(|&p| p <= hi);
        if a >= b {
            &[]
        } else {
            &self.primes[a..b]
        }
    }

    /// Number of primes `<= n` for `n` within the table.
    pub fn pi(&self, n: u64) -> usize {
        self.primes.partition_point(|&p| p <= n)
    }
}

fn small_primes(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Calls `visit` with every prime in `(lo, hi]`, ascending, using a
/// segmented sieve. Memory is `O(sqrt(hi) + SEGMENT)`.
pub fn for_each_prime_in(lo: u64, hi: u64, mut visit: impl FnMut(u64)) -> Result<()> {
    if hi > MAX_PRIME_LIMIT {
        return capacity(format!("prime range end {hi} exceeds 2^40"));
    }
    if hi <= lo || hi < 2 {
        return Ok(());
    }
    let base = small_primes(hi.isqrt());
    let mut seg_lo = (lo + 1).max(2);
    let mut marks = vec![false; SEGMENT as usize];
    while seg_lo <= hi {
        let seg_hi = (seg_lo + SEGMENT - 1).min(hi);
        let width = (seg_hi - seg_lo + 1) as usize;
        marks[..width].fill(false);
        for &p in &base {
            if p * p > seg_hi {
                break;
            }
            let mut m = (seg_lo.div_ceil(p) * p).max(p * p);
            while m <= seg_hi {
                marks[(m - seg_lo) as usize] = true;
                m += p;
            }
        }
        for (i, &c) in marks[..width].iter().enumerate() {
            if !c {
                visit(seg_lo + i as u64);
            }
        }
        seg_lo = seg_hi + 1;
    }
    Ok(())
}

/// Every prime `<= limit`.
pub fn generate_primes(limit: u64) -> Result<PrimeTable> {
    if !(2..=MAX_PRIME_LIMIT).contains(&limit) {
        return capacity(format!("prime limit {limit} outside [2, 2^40]"));
    }
    let mut primes = Vec::new();
    for_each_prime_in(0, limit, |p| primes.push(p))?;
    Ok(PrimeTable { limit, primes })
}

#[inline]
fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller-Rabin for all `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &p in &BASES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Factorization of a single interval member.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FactorEntry<'a> {
    pub n: u64,
    pub primes: &'a [u64],
    pub exponents: &'a [u8],
}

impl FactorEntry<'_> {
    /// `P(n)`, with `P(1) = 1`.
    pub fn largest_prime_factor(&self) -> u64 {
        self.primes.last().copied().unwrap_or(1)
    }

    pub fn is_squarefree(&self) -> bool {
        self.exponents.iter().all(|&e| e == 1)
    }

    pub fn factors(&self) -> impl Iterator<Item = (u64, u8)> + '_ {
        self.primes.iter().copied().zip(self.exponents.iter().copied())
    }

    /// Multiplies the factorization back out; `None` on overflow.
    pub fn product(&self) -> Option<u64> {
        self.factors()
            .try_fold(1u64, |acc, (p, e)| acc.checked_mul(p.checked_pow(e as u32)?))
    }
}

/// Complete factorizations of every `n` in `(x, x + y]`, stored compactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalFactorization {
    x: u64,
    y: u64,
    offsets: Vec<u32>,
    primes: Vec<u64>,
    exponents: Vec<u8>,
    largest: Vec<u64>,
    squarefree: Vec<bool>,
}

impl IntervalFactorization {
    pub fn x(&self) -> u64 {
        self.x
    }

    pub fn y(&self) -> u64 {
        self.y
    }

    pub fn len(&self) -> usize {
        self.largest.len()
    }

    pub fn is_empty(&self) -> bool {
        self.largest.is_empty()
    }

    /// Entry for the `i`-th member, `n = x + 1 + i`.
    pub fn entry(&self, i: usize) -> FactorEntry<'_> {
        let (a, b) = (self.offsets[i] as usize, self.offsets[i + 1] as usize);
        FactorEntry {
            n: self.x + 1 + i as u64,
            primes: &self.primes[a..b],
            exponents: &self.exponents[a..b],
        }
    }

    /// Entry for `n`, if `n` lies in the interval.
    pub fn get(&self, n: u64) -> Option<FactorEntry<'_>> {
        if n > self.x && n - self.x <= self.len() as u64 {
            Some(self.entry((n - self.x - 1) as usize))
        } else {
            None
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = FactorEntry<'_>> + '_ {
        (0..self.len()).map(|i| self.entry(i))
    }

    pub fn largest_prime_factors(&self) -> &[u64] {
        &self.largest
    }

    pub fn squarefree_flags(&self) -> &[bool] {
        &self.squarefree
    }

    /// Raw CSR view: `offsets` has `len() + 1` entries into `primes`/`exponents`.
    pub fn csr(&self) -> (&[u32], &[u64], &[u8]) {
        (&self.offsets, &self.primes, &self.exponents)
    }

    /// Dumps `n,prime,exponent` rows (no row for `n = 1`).
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "n,prime,exponent")?;
        for e in self.entries() {
            for (p, k) in e.factors() {
                writeln!(w, "{},{},{}", e.n, p, k)?;
            }
        }
        Ok(())
    }
}

fn check_interval(x: u64, y: u64) -> Result<u64> {
    let end = x.checked_add(y).filter(|&e| e <= MAX_INTERVAL_END);
    match end {
        None => capacity(format!("interval end x + y = {x} + {y} exceeds 2^48")),
        Some(_) if y > MAX_INTERVAL_LEN => capacity(format!("interval length {y} exceeds 10^8")),
        Some(e) => Ok(e),
    }
}

/// Factors every integer in `(x, x + y]` by sieving with the primes up to
/// `sqrt(x + y)`; whatever cofactor survives is a single prime.
pub fn factor_interval(x: u64, y: u64) -> Result<IntervalFactorization> {
    if y == 0 {
        return contract("interval length y must be at least 1");
    }
    let end = check_interval(x, y)?;
    let base = small_primes(end.isqrt());

    let len = y as usize;
    let mut out = IntervalFactorization {
        x,
        y,
        offsets: Vec::with_capacity(len + 1),
        primes: Vec::with_capacity(len * 3),
        exponents: Vec::with_capacity(len * 3),
        largest: Vec::with_capacity(len),
        squarefree: Vec::with_capacity(len),
    };
    out.offsets.push(0);

    let block = SEGMENT.min(y) as usize;
    let mut rem = vec![0u64; block];
    let mut count = vec![0u8; block];
    let mut fp = vec![[0u64; MAX_DISTINCT]; block];
    let mut fe = vec![[0u8; MAX_DISTINCT]; block];

    let mut lo = x + 1;
    while lo <= end {
        let hi = (lo + block as u64 - 1).min(end);
        let width = (hi - lo + 1) as usize;
        for (i, r) in rem[..width].iter_mut().enumerate() {
            *r = lo + i as u64;
        }
        count[..width].fill(0);

        for &p in &base {
            let mut m = lo.div_ceil(p) * p;
            while m <= hi {
                let i = (m - lo) as usize;
                let mut e = 0u8;
                while rem[i].is_multiple_of(p) {
                    rem[i] /= p;
                    e += 1;
                }
                let c = count[i] as usize;
                fp[i][c] = p;
                fe[i][c] = e;
                count[i] += 1;
                m += p;
            }
        }

        for i in 0..width {
            let c = count[i] as usize;
            out.primes.extend_from_slice(&fp[i][..c]);
            out.exponents.extend_from_slice(&fe[i][..c]);
            let sf = fe[i][..c].iter().all(|&e| e == 1);
            let mut largest = if c > 0 { fp[i][c - 1] } else { 1 };
            if rem[i] > 1 {
                debug_assert!(is_prime(rem[i]), "cofactor {} of {} is not prime", rem[i], lo + i as u64);
                out.primes.push(rem[i]);
                out.exponents.push(1);
                largest = rem[i];
            }
            out.largest.push(largest);
            out.squarefree.push(sf);
            out.offsets.push(out.primes.len() as u32);
        }
        lo = hi + 1;
    }
    Ok(out)
}

/// `Psi(x, z)`: the number of `n <= x` whose prime factors are all `<= z`.
pub fn psi_smooth_count(x: u64, z: u64) -> Result<u64> {
    if x == 0 {
        return contract("psi_smooth_count needs x >= 1");
    }
    if z >= x {
        return Ok(x);
    }
    if z < 2 {
        return Ok(1);
    }
    if x > MAX_PSI_X {
        return capacity(format!("psi_smooth_count limited to x <= 10^8, got {x}"));
    }
    let mut total = 0u64;
    let mut lo = 0u64;
    while lo < x {
        let y = (x - lo).min(1 << 20);
        let f = factor_interval(lo, y)?;
        total += f.largest_prime_factors().iter().filter(|&&p| p <= z).count() as u64;
        lo += y;
    }
    Ok(total)
}

/// Number of squarefree `n` in `(x, x + y]`.
pub fn squarefree_count(x: u64, y: u64) -> Result<u64> {
    if y == 0 {
        return Ok(0);
    }
    let end = check_interval(x, y)?;
    let base = small_primes(end.isqrt());
    let mut marks = vec![false; SEGMENT.min(y) as usize];
    let mut total = 0u64;
    let mut lo = x + 1;
    while lo <= end {
        let hi = (lo + marks.len() as u64 - 1).min(end);
        let width = (hi - lo + 1) as usize;
        marks[..width].fill(false);
        for &p in &base {
            let sq = p * p;
            if sq > hi {
                break;
            }
            let mut m = lo.div_ceil(sq) * sq;
            while m <= hi {
                marks[(m - lo) as usize] = true;
                m += sq;
            }
        }
        total += marks[..width].iter().filter(|&&c| !c).count() as u64;
        lo = hi + 1;
    }
    Ok(total)
}

/// `sum_{p <= x} 1/p`, accumulated in ascending order of `p`.
pub fn mertens_sum(x: u64) -> Result<f64> {
    if x < 2 {
        return contract("mertens_sum needs x >= 2");
    }
    let mut s = 0.0;
    for_each_prime_in(0, x, |p| s += 1.0 / p as f64)?;
    Ok(s)
}
