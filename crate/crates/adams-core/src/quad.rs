//! Small quadrature toolbox: adaptive Simpson, Gauss–Legendre nodes, and
//! the AGM complete elliptic integral used by circle averages.

/// Adaptive Simpson quadrature on `[a, b]`.
///
/// `tol` is an absolute tolerance for the whole interval; it is split in
/// half on recursion, which keeps the final error near `tol`. Recursion is
/// capped so integrable endpoint singularities terminate; the cap is deep
/// enough that the remaining slice contributes below `tol` for the
/// log-type and power-type spikes this crate integrates.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on
/// the Legendre recurrence. Deterministic and accurate to ~1e-15 for the
/// orders used here (≤ 128).
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut out = Vec::with_capacity(n);
    let nf = n as f64;
    for i in 0..n {
        // Chebyshev-like initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_pair(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_pair(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((x, w));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Legendre polynomial P_n(x) and derivative P_n'(x).
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let dp = (n as f64) * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Integrate `f` on `[a, b]` with a fixed Gauss–Legendre rule.
pub fn gauss_integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rule: &[(f64, f64)]) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for &(x, w) in rule {
        s += w * f(c + h * x);
    }
    s * h
}

/// Complete elliptic integral of the first kind, K(k), modulus convention
/// (`k` is the modulus, K(k) = ∫₀^{π/2} (1 - k² sin²θ)^{-1/2} dθ), via the
/// arithmetic–geometric mean. Requires 0 ≤ k < 1.
pub fn elliptic_k(k: f64) -> f64 {
    debug_assert!((0.0..1.0).contains(&k));
    elliptic_ke(k, ((1.0 - k) * (1.0 + k)).sqrt()).0
}

/// K as a function of the complementary modulus k′ = √(1 − k²). Taking
/// k′ directly avoids the catastrophic cancellation in 1 − k² when the
/// modulus is close to 1, which is exactly where K is interesting
/// (K ~ ln(4/k′)). Returns +∞ at k′ = 0.
pub fn elliptic_k_complementary(kp: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&kp));
    elliptic_ke(((1.0 - kp) * (1.0 + kp)).sqrt(), kp).0
}

/// (K, E) from the modulus–complement pair (k, k′), k² + k′² = 1, both
/// supplied by the caller so each can be formed without cancellation.
/// Arithmetic–geometric mean with the classical correction sum
/// E = K (1 − Σ 2^{n−1} cₙ²), c₀ = k, cₙ₊₁ = (aₙ − bₙ)/2.
pub fn elliptic_ke(k: f64, kp: f64) -> (f64, f64) {
    debug_assert!((0.0..=1.0).contains(&kp) && (0.0..=1.0).contains(&k));
    if kp == 0.0 {
        return (f64::INFINITY, 1.0);
    }
    let mut a = 1.0f64;
    let mut b = kp;
    let mut sum = 0.5 * k * k;
    let mut pow = 0.5;
    for _ in 0..60 {
        if (a - b).abs() <= 1e-17 * a {
            break;
        }
        let an = 0.5 * (a + b);
        let c = 0.5 * (a - b);
        b = (a * b).sqrt();
        a = an;
        pow *= 2.0;
        sum += pow * c * c;
    }
    let big_k = std::f64::consts::FRAC_PI_2 / a;
    (big_k, big_k * (1.0 - sum))
}

/// Average of |x − y|^{-1} over the circle {|y| = b} ⊂ ℝ², for |x| = a:
/// (2/π) K(m) / (a + b) with modulus m = 2√(ab)/(a+b), evaluated through
/// the complementary modulus m′ = |a − b|/(a + b), which is exact in
/// floating point where m itself would round to 1. Diverges at a = b.
pub fn circle_mean_inv_dist(a: f64, b: f64) -> f64 {
    let kp = (a - b).abs() / (a + b);
    2.0 * elliptic_k_complementary(kp) / (std::f64::consts::PI * (a + b))
}
