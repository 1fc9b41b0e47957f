//! Geometric annulus decompositions around the pole: a volume ladder
//! R_j, integral-equation radii r_j (capped at R_j), and verification of
//! the volume-comparability and per-annulus integral bounds they satisfy.

use crate::kernel::{KernelSpec, NormalizationEstimate};
use crate::report::{Provenance, VerificationReport};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Decomposition of the support ball B(x₀, R) into annuli whose |k|^β
/// integrals are controlled: interior radii solve
/// ∫_{r_{j−1} ≤ d ≤ r} |k|^β dμ = β′·A (A the near or far growth slope),
/// capped at the volume-ladder radius R_j.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnuliDecomposition {
    pub tau: f64,
    pub support_radius: f64,
    /// Number of annuli N.
    pub n_annuli: usize,
    /// First index j with V(r_j) ≥ 1 (N when the volume never reaches 1).
    pub j1: usize,
    /// Ladder radii R_j = r(τ e^{β′ j}), j = 0..=N.
    pub big_radii: Vec<f64>,
    /// Radii r_j: r_0 = R_0, interior by the integral equation, r_N = R.
    pub radii: Vec<f64>,
    /// Per-annulus integrals ∫_{r_{j−1} ≤ d ≤ r_j} |k|^β dμ, j = 1..=N.
    pub integrals: Vec<f64>,
    /// Relative residual of the integral equation for each interior j
    /// that was not capped (index j−1 into this list, None when capped).
    pub residuals: Vec<Option<f64>>,
}

/// Lower constant of the volume-gap bound
/// Q₁ = min{ e^{β′} − 1, (β′ min{A₀,A∞}/B) e^{−B/A₀ − B/A∞} }
/// (the second branch is +∞ when B = 0, leaving e^{β′} − 1).
pub fn gap_lower_constant(a0: f64, a_inf: f64, b: f64, beta_prime: f64) -> f64 {
    let first = beta_prime.exp() - 1.0;
    let second = (beta_prime * a0.min(a_inf) / b) * (-b / a0 - b / a_inf).exp();
    if second.is_nan() {
        first
    } else {
        first.min(second)
    }
}

/// Upper bound for a single annulus integral:
/// Q₂ = max{A₀,A∞}·(2β′ + B/A₀ + B/A∞) + B.
pub fn annulus_integral_bound(a0: f64, a_inf: f64, b: f64, beta_prime: f64) -> f64 {
    a0.max(a_inf) * (2.0 * beta_prime + b / a0 + b / a_inf) + b
}

/// Number of annuli for support volume `v_r` at scale `tau`:
/// 0 when v_r ≤ τ, 1 when τ < v_r ≤ τe^{2β′}, ⌈(1/β′)ln(v_r/τ)⌉ − 1 after.
pub fn annulus_count(tau: f64, v_r: f64, beta_prime: f64) -> usize {
    if v_r <= tau {
        0
    } else if v_r <= tau * (2.0 * beta_prime).exp() {
        1
    } else {
        ((v_r / tau).ln() / beta_prime).ceil() as usize - 1
    }
}

/// Build the decomposition of B(x₀, `support_radius`) at scale `tau`.
///
/// Interior radii switch the integral-equation threshold from β′A₀ to
/// β′A∞ once the inner ball reaches unit volume; kernels whose far tail
/// is integrable (A∞ = 0) cannot run past that point and report an
/// infeasibility error instead of degenerating.
pub fn build_annuli(
    kernel: &KernelSpec,
    tau: f64,
    support_radius: f64,
) -> Result<AnnuliDecomposition> {
    let est = kernel.estimate_normalization()?;
    build_annuli_with(kernel, &est, tau, support_radius)
}

/// [`build_annuli`] with the growth estimate supplied by the caller, so
/// ladders of decompositions don't re-fit the kernel every time.
pub fn build_annuli_with(
    kernel: &KernelSpec,
    est: &NormalizationEstimate,
    tau: f64,
    support_radius: f64,
) -> Result<AnnuliDecomposition> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::domain(format!("scale must be > 0, got {tau}")));
    }
    if !(support_radius > 0.0) || !support_radius.is_finite() {
        return Err(Error::domain(format!(
            "support radius must be > 0, got {support_radius}"
        )));
    }
    let profile = kernel.profile();
    let bp = kernel.beta_prime();
    let v_r = profile.volume(support_radius)?;
    let n = annulus_count(tau, v_r, bp);

    let big_radii: Vec<f64> = (0..=n)
        .map(|j| profile.inverse_radius(tau * (bp * j as f64).exp()))
        .collect::<Result<_>>()?;

    if n == 0 {
        return Ok(AnnuliDecomposition {
            tau,
            support_radius,
            n_annuli: 0,
            j1: 0,
            big_radii,
            radii: vec![profile.inverse_radius(tau)?],
            integrals: vec![],
            residuals: vec![],
        });
    }

    let mut radii = vec![big_radii[0]];
    let mut integrals = Vec::new();
    let mut residuals = Vec::new();

    for j in 1..n {
        let prev = radii[j - 1];
        let v_prev = profile.volume(prev)?;
        let slope = if v_prev < 1.0 { est.a0 } else { est.a_inf };
        if !(slope > 0.0) {
            return Err(Error::Infeasible(format!(
                "annulus threshold vanishes at j={j} (far slope {}); the \
                 decomposition needs a positive far growth slope once the \
                 inner ball reaches unit volume",
                est.a_inf
            )));
        }
        let theta = bp * slope;
        let cap = big_radii[j];
        let at_cap = kernel.annulus_integral(prev, cap)?;
        if at_cap <= theta * (1.0 + 1e-12) {
            radii.push(cap);
            integrals.push(at_cap);
            residuals.push(None);
        } else {
            let r = solve_annulus_radius(kernel, prev, cap, theta)?;
            let got = kernel.annulus_integral(prev, r)?;
            radii.push(r);
            integrals.push(got);
            residuals.push(Some((got - theta).abs() / theta));
        }
    }

    // Last annulus always runs out to the support radius.
    integrals.push(kernel.annulus_integral(radii[n - 1], support_radius)?);
    radii.push(support_radius);

    let mut j1 = n;
    for (j, &r) in radii.iter().enumerate() {
        if profile.volume(r)? >= 1.0 {
            j1 = j;
            break;
        }
    }

    Ok(AnnuliDecomposition {
        tau,
        support_radius,
        n_annuli: n,
        j1,
        big_radii,
        radii,
        integrals,
        residuals,
    })
}

/// Bracketed root of ∫_{lo}^{r}|k|^β dμ = θ on (lo, hi), by the Illinois
/// variant of false position (robust across integrand kinks), to 1e-12
/// relative in r.
fn solve_annulus_radius(kernel: &KernelSpec, lo: f64, hi: f64, theta: f64) -> Result<f64> {
    let g = |r: f64| -> Result<f64> { Ok(kernel.annulus_integral(lo, r)? - theta) };
    let mut a = lo * (1.0 + 5e-16);
    let mut b = hi;
    let mut fa = -theta;
    let mut fb = g(b)?;
    if fb <= 0.0 {
        return Ok(b);
    }
    let mut side = 0i8;
    for _ in 0..200 {
        let mut m = (a * fb - b * fa) / (fb - fa);
        if !m.is_finite() || m <= a || m >= b {
            m = 0.5 * (a + b);
        }
        let fm = g(m)?;
        if fm > 0.0 {
            b = m;
            fb = fm;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        } else {
            a = m;
            fa = fm;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        }
        if (b - a) <= 1e-12 * b {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

impl AnnuliDecomposition {
    /// Measures V(r_j) of the nested balls D_j.
    pub fn ball_volumes(&self, kernel: &KernelSpec) -> Result<Vec<f64>> {
        self.radii
            .iter()
            .map(|&r| kernel.profile().volume(r))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Verify the structural invariants against the kernel's measured
    /// growth constants. The comparability bounds apply for N ≥ 2 (for
    /// N ≤ 1 the decomposition is degenerate and only the structural
    /// checks run).
    pub fn verify_invariants(
        &self,
        kernel: &KernelSpec,
        est: &NormalizationEstimate,
    ) -> VerificationReport {
        let mut rep = VerificationReport::new("annuli");
        let n = self.n_annuli;
        let bp = kernel.beta_prime();
        // f64 slack for bounds that the exactly-homogeneous kernels meet
        // with equality.
        let slack = 1e-9;

        let structural = self.radii.windows(2).all(|w| w[1] > w[0])
            && self.big_radii.windows(2).all(|w| w[1] > w[0]);
        rep.check_flag(
            "radii-strictly-increasing",
            structural,
            self.radii.len() as f64,
            self.radii.len() as f64,
            Provenance::Exact,
            "",
        );
        if n == 0 {
            return rep;
        }

        let capped = (0..n).all(|j| self.radii[j] <= self.big_radii[j] * (1.0 + 1e-12));
        rep.check_flag(
            "interior-radii-capped",
            capped,
            n as f64,
            n as f64,
            Provenance::Exact,
            "r_j ≤ R_j for j ≤ N−1",
        );
        rep.check_flag(
            "last-radius-is-support",
            self.radii[n] == self.support_radius,
            self.radii[n],
            self.support_radius,
            Provenance::Exact,
            "",
        );
        if n >= 2 {
            rep.check_flag(
                "support-beyond-ladder",
                self.support_radius > self.big_radii[n],
                self.support_radius,
                self.big_radii[n],
                Provenance::ClosedForm,
                "R > R_N",
            );
        }

        let worst_residual = self
            .residuals
            .iter()
            .flatten()
            .fold(0.0f64, |m, &r| m.max(r));
        rep.check_upper(
            "interior-equation-residual",
            worst_residual,
            1e-10,
            0.0,
            Provenance::Numeric,
            format!(
                "{} interior radii solved, {} capped",
                self.residuals.iter().filter(|r| r.is_some()).count(),
                self.residuals.iter().filter(|r| r.is_none()).count()
            ),
        );

        if n < 2 {
            return rep;
        }

        let vols_r: Vec<f64> = match self.ball_volumes(kernel) {
            Ok(v) => v,
            Err(e) => {
                rep.check_flag(
                    "volume-evaluation",
                    false,
                    f64::NAN,
                    0.0,
                    Provenance::Numeric,
                    e.to_string(),
                );
                return rep;
            }
        };
        let vols_big: Vec<f64> = self
            .big_radii
            .iter()
            .map(|&r| kernel.profile().volume(r).unwrap_or(f64::NAN))
            .collect();

        // Comparability of V(r_j) with V(R_j).
        let c_lo = (-est.b / est.a0 - est.b / est.a_inf).exp();
        let c_hi = bp.exp();
        let mut worst_lo = f64::INFINITY;
        let mut worst_hi: f64 = 0.0;
        for j in 0..=n {
            worst_lo = worst_lo.min(vols_r[j] / vols_big[j]);
            worst_hi = worst_hi.max(vols_r[j] / vols_big[j]);
        }
        rep.check_flag(
            "volume-comparability",
            worst_lo >= c_lo * (1.0 - slack) && worst_hi <= c_hi * (1.0 + slack),
            worst_lo,
            c_lo,
            Provenance::Numeric,
            format!("V(r_j)/V(R_j) ∈ [{worst_lo:.6e}, {worst_hi:.6e}], cap {c_hi:.6e}"),
        );

        // Gap bounds: Q₁ V(R_j) ≤ V(r_{j+1}) − V(r_j) ≤ e^{2β′} V(R_j).
        let q1 = gap_lower_constant(est.a0, est.a_inf, est.b, bp);
        let q_hi = (2.0 * bp).exp();
        let mut worst_gap_lo = f64::INFINITY;
        let mut worst_gap_hi: f64 = 0.0;
        for j in 0..n {
            let gap = (vols_r[j + 1] - vols_r[j]) / vols_big[j];
            worst_gap_lo = worst_gap_lo.min(gap);
            worst_gap_hi = worst_gap_hi.max(gap);
        }
        rep.check_flag(
            "volume-gap-bounds",
            worst_gap_lo >= q1 * (1.0 - slack) && worst_gap_hi <= q_hi * (1.0 + slack),
            worst_gap_lo,
            q1,
            Provenance::Numeric,
            format!(
                "(V(r_j+1)−V(r_j))/V(R_j) ∈ [{worst_gap_lo:.6e}, {worst_gap_hi:.6e}], cap {q_hi:.6e}"
            ),
        );

        // Per-annulus integral bound.
        let q2 = annulus_integral_bound(est.a0, est.a_inf, est.b, bp);
        let worst_int = self.integrals.iter().fold(0.0f64, |m, &v| m.max(v));
        rep.check_upper(
            "per-annulus-integral",
            worst_int,
            q2,
            slack * q2,
            Provenance::Numeric,
            format!("{} annuli", self.integrals.len()),
        );

        rep
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
    fn annulus_count_branches() {
        let bp = 2.0;
        assert_eq!(annulus_count(1.0, 0.5, bp), 0);
        assert_eq!(annulus_count(1.0, 1.0, bp), 0);
        assert_eq!(annulus_count(1.0, 3.0, bp), 1);
        assert_eq!(annulus_count(1.0, (2.0 * bp).exp(), bp), 1);
        // ln(v/τ)/β′ = 4 → N = 3.
        assert_eq!(annulus_count(1.0, (4.0 * bp).exp(), bp), 3);
        assert_eq!(annulus_count(1.0, (4.1 * bp).exp(), bp), 4);
    }

    #[test]
    fn riesz_ladder_decomposition_is_exact() {
        // β′ = 2; support volume τe^{4β′} gives N = 3. The pure kernel has
        // exact log growth, so every interior radius caps at R_j exactly
        // and the per-annulus integrals are exactly β′A₀ = 2π.
        let k = KernelSpec::riesz(2, 1.0).unwrap();
        let tau = PI;
        let r_support = k
            .profile()
            .inverse_radius(tau * (8.0f64).exp())
            .unwrap();
        let d = build_annuli(&k, tau, r_support).unwrap();
        assert_eq!(d.n_annuli, 3);
        assert_eq!(d.j1, 0); // V(r_0) = π ≥ 1
        assert_eq!(d.radii.len(), 4);
        assert_eq!(d.integrals.len(), 3);
        for j in 0..=2usize {
            assert!(rel(d.radii[j], d.big_radii[j]) < 1e-9, "j={j}");
        }
        assert_eq!(d.radii[3], r_support);
        for j in 1..=2 {
            assert!(rel(d.integrals[j - 1], k.beta_prime() * PI) < 1e-9);
        }
        // Last annulus: V(r_2) = τe⁴, V(R) = τe⁸ → integral π·ln(e⁴) = 4π.
        assert!(rel(d.integrals[2], 4.0 * PI) < 1e-9);

        let est = k.estimate_normalization().unwrap();
        let rep = d.verify_invariants(&k, &est);
        assert!(rep.passed(), "{}", rep.render());
    }

    #[test]
    fn small_support_cases_degenerate() {
        let k = KernelSpec::riesz(2, 1.0).unwrap();
        // V(R) ≤ τ → N = 0.
        let d = build_annuli(&k, 10.0 * PI, 1.0).unwrap();
        assert_eq!(d.n_annuli, 0);
        assert!(d.integrals.is_empty());
        // τ < V(R) ≤ τe^{2β′} → N = 1, r = [r(τ), R].
        let d = build_annuli(&k, PI, 1.5).unwrap();
        assert_eq!(d.n_annuli, 1);
        assert_eq!(d.radii.len(), 2);
        assert!(rel(d.radii[0], 1.0) < 1e-12);
        assert_eq!(d.radii[1], 1.5);
        assert_eq!(d.integrals.len(), 1);
        // ∫ over 1 ≤ |y| ≤ 1.5 of |y|^{-2}: 2π ln 1.5.
        assert!(rel(d.integrals[0], 2.0 * PI * 1.5f64.ln()) < 1e-12);
    }

    #[test]
    fn seeded_pairs_satisfy_volume_bounds() {
        use rand::{Rng, SeedableRng};
        let kernels = [
            KernelSpec::riesz(2, 1.0).unwrap(),
            KernelSpec::riesz(3, 1.0).unwrap(),
            KernelSpec::riesz_far_amplified(2, 1.0, 2.0, 2.0).unwrap(),
        ];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for k in &kernels {
            let est = k.estimate_normalization().unwrap();
            for _ in 0..12 {
                let tau = 10f64.powf(rng.gen_range(-4.0..1.0));
                let grow: f64 = rng.gen_range(2.5 * k.beta_prime()..9.0 * k.beta_prime());
                let v_r = tau * grow.exp();
                let r_support = k.profile().inverse_radius(v_r).unwrap();
                let d = build_annuli(k, tau, r_support).unwrap();
                assert!(d.n_annuli >= 2);
                let rep = d.verify_invariants(k, &est);
                assert!(rep.passed(), "τ={tau} R={r_support}\n{}", rep.render());
            }
        }
    }

    #[test]
    fn mixed_zone_thresholds_switch_at_unit_volume() {
        // Far-amplified kernel with τ small: the ladder crosses V = 1 and
        // the integral equation switches to the far slope there. j₁ marks
        // the crossing.
        let k = KernelSpec::riesz_far_amplified(2, 1.0, 2.0, 2.0).unwrap();
        let tau = 1e-4;
        let r_support = k.profile().inverse_radius(tau * (20.0f64).exp()).unwrap();
        let d = build_annuli(&k, tau, r_support).unwrap();
        assert!(d.j1 > 0 && d.j1 < d.n_annuli);
        let vols = d.ball_volumes(&k).unwrap();
        assert!(vols[d.j1] >= 1.0);
        assert!(vols[d.j1 - 1] < 1.0);
        let est = k.estimate_normalization().unwrap();
        let rep = d.verify_invariants(&k, &est);
        assert!(rep.passed(), "{}", rep.render());
    }

    #[test]
    fn integrable_far_tail_is_infeasible_past_unit_volume() {
        let k = KernelSpec::riesz_damped(2, 1.0, 1.0).unwrap();
        // Stays below unit volume: fine with the near slope only.
        let tau = 1e-6;
        let r_support = k.profile().inverse_radius(tau * (6.0f64).exp()).unwrap();
        assert!(build_annuli(&k, tau, r_support).is_ok());
        // Crosses unit volume: the far slope is 0 → infeasible.
        let r_big = k.profile().inverse_radius(tau * (40.0f64).exp()).unwrap();
        match build_annuli(&k, tau, r_big) {
            Err(crate::Error::Infeasible(_)) => {}
            other => panic!("expected infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn json_round_trip() {
        let k = KernelSpec::riesz(2, 1.0).unwrap();
        let d = build_annuli(&k, 0.3, 40.0).unwrap();
        let s = d.to_json().unwrap();
        let back = AnnuliDecomposition::from_json(&s).unwrap();
        assert_eq!(back.n_annuli, d.n_annuli);
        assert_eq!(back.radii, d.radii);
        assert_eq!(back.integrals, d.integrals);
    }
}
