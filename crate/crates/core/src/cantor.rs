//! Closed-form quantization errors for the dyadic Cantor measure κ.
//!
//! An optimal `N`-point support puts one point at the centre of each
//! terminal interval. The restriction of κ to a generation-`n` interval is
//! a copy of κ of mass `2^-n` and size `3^-n`, so each terminal interval
//! contributes `c₁^p 2^-n 3^-np`, where `c₁ = W_p(κ, δ_{1/2})`. Terminal
//! intervals span at most two consecutive generations: with
//! `n = ⌊log₂ N⌋`, `2^{n+1} - N` intervals of generation `n` and
//! `2(N - 2^n)` of generation `n + 1`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::format::g12;
use crate::measures::dyadic::CostIntegrator;
use crate::measures::CantorMeasure;
use crate::transport::check_exponent;

/// Rigorous enclosure of `c₁` after `generation` levels of refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct C1Bracket {
    pub generation: u32,
    pub lower: f64,
    pub upper: f64,
}

impl C1Bracket {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

const MAX_GENERATION: u32 = 24;

/// Bracket of `∫|x - ½|^p dκ` from the generation-`n` intervals. On each
/// interval the integrand is convex, so its integral lies between the value
/// at the centroid (the interval centre) and the mean of the end values,
/// and also between the min and max over the interval. Only the left half
/// is visited; the right half is its mirror image.
fn bracket_at(p: f64, n: u32) -> (f64, f64) {
    let f = |x: f64| (x - 0.5).abs().powf(p);
    if n == 0 {
        return (0.0, 0.5f64.powf(p));
    }
    let width = 3f64.powi(-(n as i32));
    let mass = 0.5f64.powi(n as i32);
    let count = 1u64 << (n - 1);
    let (mut lo, mut hi) = (0.0, 0.0);
    for code in 0..count {
        let mut a = 0.0;
        let mut scale = 1.0 / 3.0;
        // leading digit 0: left half of the set
        for bit in (0..n - 1).rev() {
            scale /= 3.0;
            if code >> bit & 1 == 1 {
                a += 2.0 * scale;
            }
        }
        let b = a + width;
        let (fa, fb) = (f(a), f(b));
        let jensen = f(0.5 * (a + b));
        let chord = 0.5 * (fa + fb);
        // the integrand is decreasing on the left half
        lo += mass * jensen.max(fb);
        hi += mass * chord.min(fa);
    }
    (2.0 * lo, 2.0 * hi)
}

/// Successive brackets of `c₁`, generation by generation, until the width
/// drops below `tol` (or the refinement limit is reached).
pub fn c1_brackets(p: f64, tol: f64) -> Result<Vec<C1Bracket>> {
    check_exponent(p)?;
    if !(tol > 0.0) {
        return Err(invalid!("tolerance must be positive, got {tol}"));
    }
    let mut out: Vec<C1Bracket> = Vec::new();
    for n in 0..=MAX_GENERATION {
        let (lo, hi) = bracket_at(p, n);
        let mut b = C1Bracket { generation: n, lower: lo.powf(1.0 / p), upper: hi.powf(1.0 / p) };
        if let Some(prev) = out.last() {
            // intersect with the previous enclosure so widths never grow
            b.lower = b.lower.max(prev.lower);
            b.upper = b.upper.min(prev.upper);
        }
        out.push(b);
        if b.width() < tol {
            break;
        }
    }
    Ok(out)
}

/// `c₁ = (∫|x - ½|^p dκ)^{1/p}`, the midpoint of a bracket narrower than `tol`.
pub fn c1(p: f64, tol: f64) -> Result<f64> {
    Ok(c1_brackets(p, tol)?.last().expect("at least one generation").midpoint())
}

/// `c₁` to working precision: moment expansion for integer `p`,
/// tightly bracketed recursion otherwise.
fn c1_precise(p: f64) -> f64 {
    CostIntegrator::new(p).cost(0.0, 1.0, 0.5).powf(1.0 / p)
}

fn split(n: u64) -> (u32, u64) {
    let g = 63 - n.leading_zeros();
    (g, n - (1u64 << g))
}

fn error_with(c1: f64, n: u64, p: f64) -> f64 {
    let (g, j) = split(n);
    let two_g = (1u64 << g) as f64;
    let t = 3f64.powf(-p);
    let coarse = ((2.0 * two_g - n as f64) / two_g) * t.powi(g as i32);
    let fine = (j as f64 / two_g) * t.powi(g as i32 + 1);
    c1 * (coarse + fine).powf(1.0 / p)
}

/// `W_p(κ, Δ_N)`.
pub fn exact_error(n: u64, p: f64) -> Result<f64> {
    check_exponent(p)?;
    if n == 0 {
        return Err(invalid!("N must be ≥ 1"));
    }
    Ok(error_with(c1_precise(p), n, p))
}

/// `W_p · N^{1/s}` at `N = 3·2^k` divided by its value at `N = 2^k`:
/// `((1 + 3^-p)/2)^{1/p} · 3^{log 3/log 2 - 1}`.
pub fn oscillation_ratio(p: f64) -> f64 {
    ((1.0 + 3f64.powf(-p)) / 2.0).powf(1.0 / p) * 3f64.powf(1.0 / CantorMeasure::dimension() - 1.0)
}

/// Centres of the terminal intervals of one optimal `N`-point support: the
/// first `N - 2^n` generation-`n` intervals (left to right) are split.
pub fn canonical_support(n: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(invalid!("N must be ≥ 1"));
    }
    let (g, j) = split(n);
    let mut out = Vec::with_capacity(n as usize);
    let left_end = |code: u64, gen: u32| {
        let mut a = 0.0;
        let mut scale = 1.0;
        for bit in (0..gen).rev() {
            scale /= 3.0;
            if code >> bit & 1 == 1 {
                a += 2.0 * scale;
            }
        }
        a
    };
    for code in 0..(1u64 << g) {
        if code < j {
            let w = 3f64.powi(-(g as i32 + 1));
            for child in [2 * code, 2 * code + 1] {
                out.push(left_end(child, g + 1) + 0.5 * w);
            }
        } else {
            out.push(left_end(code, g) + 0.5 * 3f64.powi(-(g as i32)));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CantorRow {
    #[serde(rename = "N")]
    pub n: u64,
    pub wp: f64,
    /// `W_p · N^{1/s}`.
    pub scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CantorErrorTable {
    pub p: f64,
    pub c1: f64,
    pub rows: Vec<CantorRow>,
    /// Range of `N` over which `sup` and `inf` are taken.
    pub window: (u64, u64),
    pub sup: f64,
    pub inf: f64,
    pub ratio: f64,
}

impl CantorErrorTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("N,W_p,scaled\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{}\n", r.n, g12(r.wp), g12(r.scaled)));
        }
        s
    }
}

/// Exact errors for `N = 1..=n_max`, with the extremes of the scaled values
/// over the last two full generations.
pub fn scan(n_max: u64, p: f64) -> Result<CantorErrorTable> {
    check_exponent(p)?;
    if n_max == 0 {
        return Err(invalid!("N max must be >= 1"));
    }
    let c1 = c1_precise(p);
    let inv_s = 1.0 / CantorMeasure::dimension();
    let rows: Vec<CantorRow> = (1..=n_max)
        .map(|n| {
            let wp = error_with(c1, n, p);
            CantorRow { n, wp, scaled: wp * (n as f64).powf(inv_s) }
        })
        .collect();
    let (top, _) = split(n_max);
    let window = if top >= 2 { (1u64 << (top - 2), 1u64 << top) } else { (1, n_max) };
    let inside = rows.iter().filter(|r| r.n >= window.0 && r.n <= window.1).map(|r| r.scaled);
    let (inf, sup) = inside.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    Ok(CantorErrorTable { p, c1, rows, window, sup, inf, ratio: sup / inf })
}
