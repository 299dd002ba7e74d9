//! Primitives for the dyadic middle-thirds Cantor measure on `[0, 1]`.
//!
//! Everything here exploits self-similarity: the restriction of the measure
//! to a generation-`n` interval `[lo, lo + 3^-n]` is a copy of the whole
//! measure with mass `2^-n`, so integrals over full intervals reduce to the
//! moments of the unit measure.

/// Width below which dyadic recursion stops.
pub const MIN_WIDTH: f64 = 1e-12;

/// Recursion depth matching [`MIN_WIDTH`]: `3^-26 < 1e-12`.
pub const MAX_DEPTH: u32 = 26;

/// Largest integer exponent handled through the moment expansion.
const MAX_MOMENT: usize = 24;

/// `κ([0, x])`.
pub fn cdf(x: f64) -> f64 {
    cdf_bounds(x).1
}

/// `(κ([0, x)), κ([0, x]))`. The two differ only by the mass of the residual
/// interval left after [`MAX_DEPTH`] levels, at most `2^-27`.
pub fn cdf_bounds(x: f64) -> (f64, f64) {
    if x < 0.0 {
        return (0.0, 0.0);
    }
    if x >= 1.0 {
        return (1.0, 1.0);
    }
    let mut x = x;
    let mut acc = 0.0;
    let mut weight = 1.0;
    for _ in 0..=MAX_DEPTH {
        weight *= 0.5;
        if x < 1.0 / 3.0 {
            x *= 3.0;
        } else if x <= 2.0 / 3.0 {
            return (acc + weight, acc + weight);
        } else {
            acc += weight;
            x = 3.0 * x - 2.0;
        }
    }
    // residual interval narrower than MIN_WIDTH: its mass belongs to closed
    // intervals ending at x only
    (acc, acc + weight)
}

/// `κ([a, b])` for `a <= b`. The measure has no atoms.
pub fn mass(a: f64, b: f64) -> f64 {
    if b < a {
        return 0.0;
    }
    (cdf_bounds(b).1 - cdf_bounds(a).0).max(0.0)
}

/// `∫_{[0, x]} t dκ(t)`.
pub fn first_moment_below(x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 0.5;
    }
    // G(x) = G(3x)/6 on the left third, 1/12 across the gap, and
    // 1/12 + (G(3x-2) + 2F(3x-2))/6 on the right third.
    let mut x = x;
    let mut acc = 0.0;
    let mut scale = 1.0;
    for _ in 0..=MAX_DEPTH {
        if x < 1.0 / 3.0 {
            scale /= 6.0;
            x *= 3.0;
        } else if x <= 2.0 / 3.0 {
            return acc + scale / 12.0;
        } else {
            let y = 3.0 * x - 2.0;
            acc += scale * (1.0 / 12.0 + cdf(y) / 3.0);
            scale /= 6.0;
            x = y;
        }
    }
    acc
}

/// `∫_{[a, b]} t dκ(t)`.
pub fn first_moment(a: f64, b: f64) -> f64 {
    if b < a {
        return 0.0;
    }
    first_moment_below(b) - first_moment_below(a)
}

/// Raw moments `E[Y^k]`, `k = 0..=max_k`, of `Y ~ κ`.
///
/// From the fixed-point equation
/// `m_k (1 - 3^-k) = 3^-k / 2 · Σ_{j<k} C(k, j) 2^{k-j} m_j`.
pub fn moments(max_k: usize) -> Vec<f64> {
    let mut m = vec![0.0; max_k + 1];
    m[0] = 1.0;
    for k in 1..=max_k {
        let mut s = 0.0;
        for (j, mj) in m.iter().enumerate().take(k) {
            s += binomial(k, j) * 2f64.powi((k - j) as i32) * mj;
        }
        let t = 3f64.powi(-(k as i32));
        m[k] = 0.5 * t * s / (1.0 - t);
    }
    m
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

fn integer_exponent(p: f64) -> Option<usize> {
    if p >= 0.0 && p.fract() == 0.0 && p <= MAX_MOMENT as f64 {
        Some(p as usize)
    } else {
        None
    }
}

/// Integrals `∫ |x - c|^p dκ` restricted to sub-boxes of `[0, 1]`.
#[derive(Debug, Clone)]
pub struct CostIntegrator {
    p: f64,
    moments: Option<Vec<f64>>,
}

impl CostIntegrator {
    pub fn new(p: f64) -> Self {
        let moments = integer_exponent(p).map(moments);
        Self { p, moments }
    }

    /// `E|lo + len·Y - c|^p` for `Y ~ κ`, with `c` outside `(lo, lo + len)`.
    fn full_interval(&self, lo: f64, len: f64, c: f64) -> f64 {
        let hi = lo + len;
        let gap = if c <= lo { lo - c } else { (c - hi).max(0.0) };
        match &self.moments {
            Some(m) => {
                // κ is symmetric, so the expansion is the same on both sides
                // of the interval; every term is nonnegative.
                let k_max = m.len() - 1;
                let mut s = 0.0;
                for (k, mk) in m.iter().enumerate() {
                    s += binomial(k_max, k)
                        * gap.powi((k_max - k) as i32)
                        * len.powi(k as i32)
                        * mk;
                }
                s
            }
            None => self.convex_bracket(gap, len, 0),
        }
    }

    /// Jensen (lower) and chord (upper) bounds on `E (gap + len·Y)^p`,
    /// refined until they agree to 1e-13 relative.
    fn convex_bracket(&self, gap: f64, len: f64, depth: u32) -> f64 {
        let f = |t: f64| t.powf(self.p);
        let lower = f(gap + 0.5 * len);
        let upper = 0.5 * (f(gap) + f(gap + len));
        if upper - lower <= 1e-13 * upper || depth >= MAX_DEPTH {
            return 0.5 * (lower + upper);
        }
        let third = len / 3.0;
        0.5 * (self.convex_bracket(gap, third, depth + 1)
            + self.convex_bracket(gap + 2.0 * third, third, depth + 1))
    }

    /// `∫_{[a, b]} |x - c|^p dκ(x)`.
    pub fn cost(&self, a: f64, b: f64, c: f64) -> f64 {
        if b < a {
            return 0.0;
        }
        self.recurse(0.0, 1.0, 1.0, a, b, c, 0)
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse(&self, lo: f64, len: f64, mass: f64, a: f64, b: f64, c: f64, depth: u32) -> f64 {
        let hi = lo + len;
        if hi < a || lo > b {
            return 0.0;
        }
        let full = a <= lo && hi <= b;
        if full && (c <= lo || c >= hi) {
            return mass * self.full_interval(lo, len, c);
        }
        if depth >= MAX_DEPTH {
            let mid = lo + 0.5 * len;
            return if (a..=b).contains(&mid) {
                mass * (mid - c).abs().powf(self.p)
            } else {
                0.0
            };
        }
        let third = len / 3.0;
        let half = 0.5 * mass;
        self.recurse(lo, third, half, a, b, c, depth + 1)
            + self.recurse(lo + 2.0 * third, third, half, a, b, c, depth + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cdf_on_dyadic_endpoints() {
        assert_abs_diff_eq!(cdf(1.0 / 3.0), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(cdf(0.5), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(cdf(1.0 / 9.0), 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(cdf(7.0 / 9.0), 0.75, epsilon = 1e-12);
        assert_eq!(cdf(-0.1), 0.0);
        assert_eq!(cdf(1.0), 1.0);
    }

    #[test]
    fn moments_match_known_values() {
        let m = moments(3);
        assert_abs_diff_eq!(m[1], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(m[2], 0.375, epsilon = 1e-15);
        // symmetry: E[(Y - 1/2)^3] = 0
        let c3 = m[3] - 1.5 * m[2] + 0.75 * m[1] - 0.125;
        assert_abs_diff_eq!(c3, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn first_moment_halves() {
        assert_abs_diff_eq!(first_moment_below(1.0 / 3.0), 1.0 / 12.0, epsilon = 1e-12);
        assert_abs_diff_eq!(first_moment(0.0, 1.0), 0.5, epsilon = 1e-15);
        // right third carries mass 1/2 with mean 5/6
        assert_abs_diff_eq!(first_moment(2.0 / 3.0, 1.0), 5.0 / 12.0, epsilon = 1e-12);
    }

    #[test]
    fn variance_about_half_is_one_eighth() {
        let integ = CostIntegrator::new(2.0);
        assert_abs_diff_eq!(integ.cost(0.0, 1.0, 0.5), 0.125, epsilon = 1e-14);
        let frac = CostIntegrator::new(2.0000000001);
        assert_abs_diff_eq!(frac.cost(0.0, 1.0, 0.5), 0.125, epsilon = 1e-9);
    }

    #[test]
    fn fractional_exponent_matches_integer_neighbour() {
        // p -> 1 limit of the bracket route agrees with the exact route
        let exact = CostIntegrator::new(1.0).cost(0.0, 1.0, 0.2);
        let approx = CostIntegrator::new(1.0 + 1e-9).cost(0.0, 1.0, 0.2);
        assert_abs_diff_eq!(exact, approx, epsilon = 1e-8);
    }
}
