//! Gamma-function-based geometric constants and the regularized
//! exponential.

use crate::{Error, Result};
use statrs::function::gamma::{gamma, ln_gamma};

/// Surface measure of the unit sphere S^{n-1} ⊂ ℝⁿ: ω_{n-1} = 2 π^{n/2} / Γ(n/2).
pub fn sphere_area(n: u32) -> f64 {
    assert!(n >= 1);
    let nf = n as f64;
    2.0 * std::f64::consts::PI.powf(nf / 2.0) / gamma(nf / 2.0)
}

/// Lebesgue volume of the unit ball in ℝⁿ: π^{n/2} / Γ(n/2 + 1) = ω_{n-1}/n.
pub fn euclidean_ball_volume(n: u32) -> f64 {
    assert!(n >= 1);
    let nf = n as f64;
    std::f64::consts::PI.powf(nf / 2.0) / gamma(nf / 2.0 + 1.0)
}

/// Haar volume of the unit ball of the Korányi norm |(z,t)| = (|z|⁴+t²)^{1/4}
/// on the Heisenberg group ℍⁿ (z ∈ ℂⁿ, t ∈ ℝ):
///
///   |B₁| = ω_{2n-1} · Γ(n/2) Γ(3/2) / (2 Γ((n+3)/2)),
///
/// obtained by slicing in t and substituting u = |z|² , v = u² in the
/// radial integral ∫₀¹ ρ^{2n-1} · 2√(1-ρ⁴) dρ.
pub fn heisenberg_ball_volume(n: u32) -> f64 {
    assert!(n >= 1);
    let nf = n as f64;
    sphere_area(2 * n) * gamma(nf / 2.0) * gamma(1.5) / (2.0 * gamma((nf + 3.0) / 2.0))
}

/// Γ(x) for x > 0.
pub fn gamma_fn(x: f64) -> f64 {
    gamma(x)
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma_fn(x: f64) -> f64 {
    ln_gamma(x)
}

/// Regularized exponential: exp_m(y) = e^y − Σ_{j=0}^{m} y^j / j!
/// (the truncation removes the Taylor polynomial *through* index m).
///
/// Nonnegative and increasing on [0, ∞); ~ y^{m+1}/(m+1)! as y → 0. For
/// y below m+1 the direct difference cancels catastrophically, so the
/// Taylor tail Σ_{j>m} y^j/j! is summed instead.
pub fn exp_truncated(m: u32, y: f64) -> Result<f64> {
    if y < 0.0 {
        return Err(Error::domain(format!(
            "exp_truncated requires y >= 0, got {y}"
        )));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    if y <= (m as f64) + 1.0 {
        // Tail series: term ratio y/j < 1 past j = m+1, so this converges
        // geometrically and every term is positive (no cancellation).
        let mut term = y.powi(m as i32 + 1);
        for j in 1..=(m + 1) {
            term /= j as f64;
        }
        let mut sum = term;
        let mut j = (m + 2) as f64;
        for _ in 0..200 {
            term *= y / j;
            sum += term;
            if term <= 1e-17 * sum {
                break;
            }
            j += 1.0;
        }
        Ok(sum)
    } else {
        let mut partial = 1.0;
        let mut term = 1.0;
        for j in 1..=m {
            term *= y / j as f64;
            partial += term;
        }
        if m == 0 {
            partial = 1.0;
        }
        Ok(y.exp() - partial)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn sphere_and_ball_constants() {
        // Gamma evaluation is correct to a few ulp; 5e-14 leaves headroom.
        assert!(rel(sphere_area(2), 2.0 * PI) < 5e-14);
        assert!(rel(sphere_area(3), 4.0 * PI) < 5e-14);
        assert!(rel(sphere_area(4), 2.0 * PI * PI) < 5e-14);
        assert!(rel(euclidean_ball_volume(2), PI) < 5e-14);
        assert!(rel(euclidean_ball_volume(3), 4.0 * PI / 3.0) < 5e-14);
        assert!(rel(euclidean_ball_volume(4), PI * PI / 2.0) < 5e-14);
    }

    #[test]
    fn heisenberg_ball_volume_matches_direct_quadrature() {
        // Oracle: |B₁| on ℍⁿ = ω_{2n-1} ∫₀¹ ρ^{2n-1} · 2√(1-ρ⁴) dρ by
        // adaptive quadrature, independent of the beta-function route.
        for n in 1..=3u32 {
            let oracle = sphere_area(2 * n)
                * crate::quad::adaptive_simpson(
                    &|rho: f64| rho.powi(2 * n as i32 - 1) * 2.0 * (1.0 - rho.powi(4)).sqrt(),
                    0.0,
                    1.0,
                    1e-12,
                );
            assert!(
                rel(heisenberg_ball_volume(n), oracle) < 1e-9,
                "n={n}: closed form {} vs quadrature {oracle}",
                heisenberg_ball_volume(n)
            );
        }
        // ℍ¹ value is π²/2 exactly.
        assert!(rel(heisenberg_ball_volume(1), PI * PI / 2.0) < 1e-14);
    }

    #[test]
    fn exp_truncated_small_and_moderate_arguments() {
        assert_eq!(exp_truncated(0, 0.0).unwrap(), 0.0);
        // m=1, y=1: e − 2.
        assert!(rel(exp_truncated(1, 1.0).unwrap(), std::f64::consts::E - 2.0) < 1e-14);
        // m=2, y=1e-3: compare against the Taylor tail through y⁶/720;
        // the first omitted term is ~1.4e-15 relative.
        let y = 1e-3f64;
        let lead = y.powi(3) / 6.0 * (1.0 + y / 4.0 + y * y / 20.0 + y.powi(3) / 120.0);
        assert!(rel(exp_truncated(2, y).unwrap(), lead) < 1e-12);
        // Cross-check both branches agree where they meet.
        for m in 0..=8u32 {
            let y = (m as f64) + 1.0;
            let tail = exp_truncated(m, y * (1.0 - 1e-12)).unwrap();
            let direct = exp_truncated(m, y * (1.0 + 1e-12)).unwrap();
            assert!(rel(tail, direct) < 1e-9, "branch mismatch at m={m}");
        }
        assert!(exp_truncated(0, -1.0).is_err());
    }

    #[test]
    fn exp_truncated_is_increasing_and_convex_on_a_grid() {
        for m in 0..=8u32 {
            let ys: Vec<f64> = (0..400).map(|i| i as f64 * 0.05).collect();
            let vals: Vec<f64> = ys.iter().map(|&y| exp_truncated(m, y).unwrap()).collect();
            for w in vals.windows(2) {
                assert!(w[1] >= w[0]);
            }
            for w in vals.windows(3) {
                assert!(w[2] - w[1] >= w[1] - w[0] - 1e-12 * w[2].abs());
            }
        }
    }
}
