use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::stats::CompensatedSum;

/// Both sides of `int_1^inf |sum_{n<=x} a_n|^2 x^{-1-2 sigma} dx
/// = (1/2 pi) int |A(sigma+it) / (sigma+it)|^2 dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParsevalResult {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    /// Half-width of the window integrated numerically.
    pub window: f64,
    /// Bound on what the tail expansion leaves out, already divided by `2 pi`.
    pub tail_remainder: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParsevalOptions {
    /// Half-width `T`; chosen from the tolerance when `None`.
    pub window: Option<f64>,
    /// Target for the tail remainder and for the quadrature error estimate.
    pub tol: f64,
}

impl Default for ParsevalOptions {
    fn default() -> Self {
        ParsevalOptions { window: None, tol: 1e-9 }
    }
}

const MIN_WINDOW: f64 = 200.0;
const MAX_WINDOW: f64 = 2e5;

/// `coeffs[i]` is `a_{i+1}`.
pub fn parseval_check(coeffs: &[Complex64], sigma: f64, opts: &ParsevalOptions) -> Result<ParsevalResult> {
    if !(sigma > 0.0) {
        return contract("sigma must be positive");
    }
    if !(opts.tol > 0.0) {
        return contract("tolerance must be positive");
    }
    let n = coeffs.iter().rposition(|a| *a != Complex64::new(0.0, 0.0)).map_or(0, |i| i + 1);
    let coeffs = &coeffs[..n];
    if n == 0 {
        return Ok(ParsevalResult { lhs: 0.0, rhs: 0.0, gap: 0.0, window: 0.0, tail_remainder: 0.0 });
    }
    let lhs = parseval_lhs(coeffs, sigma);
    let dirichlet = Dirichlet::new(coeffs, sigma);
    let pairs = dirichlet.pairs();
    let window = match opts.window {
        Some(t) if t > 0.0 => t,
        Some(_) => return contract("window must be positive"),
        None => choose_window(&pairs, sigma, opts.tol),
    };
    let tail = tail_integral(&dirichlet, &pairs, sigma, window);
    if tail.remainder / (2.0 * PI) > opts.tol {
        return Err(Error::Window { bound: tail.remainder / (2.0 * PI), tol: opts.tol });
    }
    let body = integrate(|t| dirichlet.integrand(t), -window, window, opts.tol);
    let rhs = (body + tail.value) / (2.0 * PI);
    Ok(ParsevalResult { lhs, rhs, gap: (lhs - rhs).abs(), window, tail_remainder: tail.remainder / (2.0 * PI) })
}

/// The step function integrated piece by piece.
fn parseval_lhs(coeffs: &[Complex64], sigma: f64) -> f64 {
    let mut partial = Complex64::new(0.0, 0.0);
    let mut sum = CompensatedSum::default();
    let n = coeffs.len();
    for (i, a) in coeffs.iter().enumerate() {
        partial += a;
        let m = (i + 1) as f64;
        let piece = if i + 1 == n {
            m.powf(-2.0 * sigma)
        } else {
            // m^{-2s} - (m+1)^{-2s} without cancellation
            -m.powf(-2.0 * sigma) * (-2.0 * sigma * (1.0 / m).ln_1p()).exp_m1()
        };
        sum.add(partial.norm_sqr() * piece / (2.0 * sigma));
    }
    sum.value()
}

struct Dirichlet {
    /// `a_n n^{-sigma}` and `log n` for the nonzero terms.
    scaled: Vec<Complex64>,
    logs: Vec<f64>,
    sigma: f64,
}

/// `c = b_m conj(b_n)` and `lambda = log n - log m` for `m < n`.
struct Pair {
    c: Complex64,
    lambda: f64,
}

impl Dirichlet {
    fn new(coeffs: &[Complex64], sigma: f64) -> Self {
        let mut scaled = Vec::new();
        let mut logs = Vec::new();
        for (i, &a) in coeffs.iter().enumerate() {
            if a != Complex64::new(0.0, 0.0) {
                let ln = ((i + 1) as f64).ln();
                scaled.push(a * (-sigma * ln).exp());
                logs.push(ln);
            }
        }
        Dirichlet { scaled, logs, sigma }
    }

    fn integrand(&self, t: f64) -> f64 {
        let mut re = 0.0;
        let mut im = 0.0;
        for (b, l) in self.scaled.iter().zip(&self.logs) {
            let (s, c) = (-t * l).sin_cos();
            re += b.re * c - b.im * s;
            im += b.re * s + b.im * c;
        }
        (re * re + im * im) / (self.sigma * self.sigma + t * t)
    }

    fn diagonal(&self) -> f64 {
        self.scaled.iter().map(|b| b.norm_sqr()).sum()
    }

    fn pairs(&self) -> Vec<Pair> {
        let mut out = Vec::new();
        for i in 0..self.scaled.len() {
            for j in i + 1..self.scaled.len() {
                out.push(Pair { c: self.scaled[i] * self.scaled[j].conj(), lambda: self.logs[j] - self.logs[i] });
            }
        }
        out
    }
}

/// `g(t) = 1/(sigma^2 + t^2)` and its first two derivatives.
fn g_derivs(sigma: f64, t: f64) -> [f64; 3] {
    let d = sigma * sigma + t * t;
    [1.0 / d, -2.0 * t / (d * d), (6.0 * t * t - 2.0 * sigma * sigma) / (d * d * d)]
}

/// Smallest window (within bounds) for which the tail remainder is below `tol`.
fn choose_window(pairs: &[Pair], sigma: f64, tol: f64) -> f64 {
    let weight: f64 = pairs.iter().map(|p| 4.0 * p.c.norm() / p.lambda.powi(3)).sum();
    let target = tol * 2.0 * PI / 4.0;
    // g''(T) <= 6 / T^4
    let t = (6.0 * weight / target).powf(0.25);
    t.max(MIN_WINDOW).max(10.0 * sigma).min(MAX_WINDOW).ceil()
}

struct Tail {
    value: f64,
    remainder: f64,
}

/// `int_{|t| > T} |A(sigma+it)|^2 g(t) dt`: exact on the diagonal, three
/// terms of integration by parts for each cross term.
fn tail_integral(d: &Dirichlet, pairs: &[Pair], sigma: f64, window: f64) -> Tail {
    let mut value = CompensatedSum::default();
    value.add(d.diagonal() * 2.0 * (PI / 2.0 - (window / sigma).atan()) / sigma);
    let [g0, g1, g2] = g_derivs(sigma, window);
    let mut remainder = 0.0;
    for p in pairs {
        // int_T^inf e^{i lambda t} g dt
        //   = -e^{i lambda T} (g/(i lambda) - g'/(i lambda)^2 + g''/(i lambda)^3) + rem
        let il = Complex64::new(0.0, p.lambda);
        let e = Complex64::from_polar(1.0, p.lambda * window);
        let half = -e * (g0 / il - g1 / (il * il) + g2 / (il * il * il));
        // the pair (m, n) and (n, m) together, over both tails
        value.add(4.0 * p.c.re * half.re);
        remainder += 4.0 * p.c.norm() * g2.abs() / p.lambda.abs().powi(3);
    }
    Tail { value: value.value(), remainder }
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Kronrod 15-point value and the gap to the embedded 7-point Gauss rule.
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = GK_WEIGHTS[7] * fc;
    let mut gauss = GAUSS_WEIGHTS[3] * fc;
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let s = f(c - x) + f(c + x);
        kronrod += GK_WEIGHTS[i] * s;
        if i % 2 == 1 {
            gauss += GAUSS_WEIGHTS[i / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

fn adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32, out: &mut CompensatedSum) {
    let (v, err) = gk15(f, a, b);
    if err <= tol || depth == 0 {
        out.add(v);
    } else {
        let m = 0.5 * (a + b);
        adaptive(f, a, m, 0.5 * tol, depth - 1, out);
        adaptive(f, m, b, 0.5 * tol, depth - 1, out);
    }
}

/// Adaptive Gauss-Kronrod over unit panels.
fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let panels = (b - a).ceil().max(1.0) as usize;
    let width = (b - a) / panels as f64;
    let per_panel = tol / panels as f64;
    let mut out = CompensatedSum::default();
    for i in 0..panels {
        let lo = a + i as f64 * width;
        adaptive(&f, lo, lo + width, per_panel, 30, &mut out);
    }
    out.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_kronrod_polynomials() {
        let v = integrate(|t| t.powi(6) - 3.0 * t * t, -1.0, 2.0, 1e-14);
        let exact = (128.0 + 1.0) / 7.0 - (8.0 + 1.0);
        assert!((v - exact).abs() < 1e-12);
        let v = integrate(|t| 1.0 / (0.09 + t * t), -50.0, 50.0, 1e-12);
        let exact = 2.0 * (50.0f64 / 0.3).atan() / 0.3;
        assert!((v - exact).abs() < 1e-10, "{v} {exact}");
    }

    #[test]
    fn cross_term_tail_against_quadrature() {
        // int_T^{T'} cos(lambda t) g(t) dt by brute force vs the expansion
        let sigma = 0.5;
        let lambda = 2f64.ln();
        let window = 300.0;
        let far = 20_000.0;
        let direct = integrate(|t| (lambda * t).cos() / (sigma * sigma + t * t), window, far, 1e-14);
        let il = Complex64::new(0.0, lambda);
        let tail_from = |w: f64| {
            let [g0, g1, g2] = g_derivs(sigma, w);
            (-Complex64::from_polar(1.0, lambda * w) * (g0 / il - g1 / (il * il) + g2 / (il * il * il))).re
        };
        let expansion = tail_from(window) - tail_from(far);
        let bound = 2.0 * g_derivs(sigma, window)[2] / lambda.powi(3);
        assert!((direct - expansion).abs() <= bound, "{direct} {expansion}");
        assert!(bound < 1e-3 * expansion.abs());
    }
}
