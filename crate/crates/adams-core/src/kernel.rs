//! Riesz-like kernels on radial measure profiles.
//!
//! A kernel here is translation-invariant with a radial power law, an
//! angular profile, and a far-field modifier:
//! `k(x,y) = g(θ) · d(x,y)^hom · ff(d(x,y))` with `hom < 0`.
//!
//! The module certifies, numerically and on explicit ladders:
//! near/far log-growth of annulus integrals of |k|^β (with slope
//! estimates A₀, A∞ and intercept bound B), the pointwise volume bound
//! |k| ≤ B·V(d)^{−1/β}, x-regularity, and the equivalence between
//! annulus integrals and integrals of the rearranged profile k₁*.

use crate::quad::adaptive_simpson;
use crate::rearrange::RearrangedProfile;
use crate::report::{Provenance, VerificationReport};
use crate::space::{ProfileKind, VolumeProfile};
use crate::special::sphere_area;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// |g| as a function of the polar coordinate of the profile's unit sphere
/// (Euclidean: polar angle in [0, π]; group case: vertical angle in
/// [−π/2, π/2]).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngularProfile {
    Constant(f64),
    /// Piecewise-linear |g(θ)| through (θ, g) nodes.
    Tabulated(Vec<(f64, f64)>),
}

impl AngularProfile {
    fn eval(&self, theta: f64) -> f64 {
        match self {
            AngularProfile::Constant(c) => c.abs(),
            AngularProfile::Tabulated(pts) => {
                if theta <= pts[0].0 {
                    return pts[0].1.abs();
                }
                if theta >= pts[pts.len() - 1].0 {
                    return pts[pts.len() - 1].1.abs();
                }
                let i = pts.partition_point(|p| p.0 <= theta);
                let (t0, g0) = pts[i - 1];
                let (t1, g1) = pts[i];
                let w = (theta - t0) / (t1 - t0);
                (g0 + w * (g1 - g0)).abs()
            }
        }
    }

    fn max_abs(&self) -> f64 {
        match self {
            AngularProfile::Constant(c) => c.abs(),
            AngularProfile::Tabulated(pts) => {
                pts.iter().map(|p| p.1.abs()).fold(0.0, f64::max)
            }
        }
    }
}

/// Far-field modifier, equal to 1 near the origin.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FarfieldFactor {
    One,
    /// `factor` for d > `radius`, 1 otherwise (discontinuous amplifier).
    StepAmplify { radius: f64, factor: f64 },
    /// e^{−rate·d} (smooth damping; makes the far tail integrable).
    ExpDamp { rate: f64 },
}

impl FarfieldFactor {
    pub(crate) fn eval(&self, d: f64) -> f64 {
        match *self {
            FarfieldFactor::One => 1.0,
            FarfieldFactor::StepAmplify { radius, factor } => {
                if d > radius {
                    factor
                } else {
                    1.0
                }
            }
            FarfieldFactor::ExpDamp { rate } => (-rate * d).exp(),
        }
    }

    fn is_continuous(&self) -> bool {
        !matches!(self, FarfieldFactor::StepAmplify { .. })
    }
}

/// A Riesz-like kernel specification.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "KernelSpecRepr", into = "KernelSpecRepr")]
pub struct KernelSpec {
    profile: Arc<VolumeProfile>,
    beta: f64,
    homogeneity_exponent: f64,
    angular_profile: AngularProfile,
    farfield_factor: FarfieldFactor,
    /// x-regularity exponent η (1/Q for the power-law kernels here).
    eta: f64,
    /// Optional declared bound for the pointwise volume condition; when
    /// present, condition checks compare against it instead of merely
    /// reporting the smallest admissible constant.
    declared_bound: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct KernelSpecRepr {
    space: VolumeProfile,
    order_beta: f64,
    homogeneity_exponent: f64,
    angular_profile: AngularProfile,
    farfield_factor: FarfieldFactor,
    smoothness_eta: f64,
    #[serde(default)]
    declared_bound: Option<f64>,
}

impl From<KernelSpec> for KernelSpecRepr {
    fn from(k: KernelSpec) -> Self {
        KernelSpecRepr {
            space: (*k.profile).clone(),
            order_beta: k.beta,
            homogeneity_exponent: k.homogeneity_exponent,
            angular_profile: k.angular_profile,
            farfield_factor: k.farfield_factor,
            smoothness_eta: k.eta,
            declared_bound: k.declared_bound,
        }
    }
}

impl TryFrom<KernelSpecRepr> for KernelSpec {
    type Error = Error;
    fn try_from(r: KernelSpecRepr) -> Result<Self> {
        KernelSpec::new(
            r.space.into_arc(),
            r.order_beta,
            r.homogeneity_exponent,
            r.angular_profile,
            r.farfield_factor,
            r.smoothness_eta,
            r.declared_bound,
        )
    }
}

impl KernelSpec {
    pub fn new(
        profile: Arc<VolumeProfile>,
        beta: f64,
        homogeneity_exponent: f64,
        angular_profile: AngularProfile,
        farfield_factor: FarfieldFactor,
        eta: f64,
        declared_bound: Option<f64>,
    ) -> Result<Self> {
        if !(beta > 1.0) {
            return Err(Error::domain(format!("order must satisfy β > 1, got {beta}")));
        }
        if !(homogeneity_exponent < 0.0) {
            return Err(Error::domain(format!(
                "homogeneity exponent must be negative, got {homogeneity_exponent}"
            )));
        }
        if !(eta > 0.0) {
            return Err(Error::domain(format!("smoothness η must be > 0, got {eta}")));
        }
        match &angular_profile {
            AngularProfile::Constant(c) => {
                if !c.is_finite() || *c == 0.0 {
                    return Err(Error::domain("angular constant must be finite and nonzero"));
                }
            }
            AngularProfile::Tabulated(pts) => {
                if profile.kind() == ProfileKind::Custom {
                    return Err(Error::domain(
                        "tabulated angular profiles need a sphere decomposition; \
                         custom volume profiles have none",
                    ));
                }
                if pts.len() < 2 {
                    return Err(Error::domain("angular table needs at least 2 nodes"));
                }
                if pts.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::domain("angular table nodes must be increasing"));
                }
                if pts.iter().any(|p| !p.1.is_finite()) {
                    return Err(Error::domain("angular table values must be finite"));
                }
            }
        }
        match farfield_factor {
            FarfieldFactor::One => {}
            FarfieldFactor::StepAmplify { radius, factor } => {
                if !(radius > 0.0) || !(factor > 0.0) {
                    return Err(Error::domain("step modifier needs radius > 0, factor > 0"));
                }
            }
            FarfieldFactor::ExpDamp { rate } => {
                if !(rate > 0.0) {
                    return Err(Error::domain("damping rate must be > 0"));
                }
            }
        }
        Ok(KernelSpec {
            profile,
            beta,
            homogeneity_exponent,
            angular_profile,
            farfield_factor,
            eta,
            declared_bound,
        })
    }

    /// Pure Riesz kernel |x−y|^{α−n} on ℝⁿ, order β = n/(n−α).
    pub fn riesz(n: u32, alpha: f64) -> Result<Self> {
        let nf = n as f64;
        if !(alpha > 0.0 && alpha < nf) {
            return Err(Error::domain(format!("need 0 < α < n, got α={alpha}, n={n}")));
        }
        KernelSpec::new(
            VolumeProfile::euclidean(n).into_arc(),
            nf / (nf - alpha),
            alpha - nf,
            AngularProfile::Constant(1.0),
            FarfieldFactor::One,
            1.0 / nf,
            None,
        )
    }

    /// Riesz kernel amplified by `factor` beyond `radius` (far-field
    /// slope becomes factor^β · |B₁|).
    pub fn riesz_far_amplified(n: u32, alpha: f64, radius: f64, factor: f64) -> Result<Self> {
        let base = Self::riesz(n, alpha)?;
        KernelSpec::new(
            base.profile,
            base.beta,
            base.homogeneity_exponent,
            base.angular_profile,
            FarfieldFactor::StepAmplify { radius, factor },
            base.eta,
            None,
        )
    }

    /// Riesz kernel damped by e^{−rate·d}; the far tail of |k|^β is then
    /// integrable (critical integrability, far slope 0).
    pub fn riesz_damped(n: u32, alpha: f64, rate: f64) -> Result<Self> {
        let base = Self::riesz(n, alpha)?;
        KernelSpec::new(
            base.profile,
            base.beta,
            base.homogeneity_exponent,
            base.angular_profile,
            FarfieldFactor::ExpDamp { rate },
            base.eta,
            None,
        )
    }

    /// Constant-angular kernel c·d^{−2} of order Q/(Q−2) on the group
    /// profile of homogeneous dimension Q = 2n+2 (the inverse-sublaplacian
    /// kernel normalization).
    pub fn group_inverse_sublaplacian(n: u32, normalization: f64) -> Result<Self> {
        let q = (2 * n + 2) as f64;
        KernelSpec::new(
            VolumeProfile::heisenberg(n).into_arc(),
            q / (q - 2.0),
            -2.0,
            AngularProfile::Constant(normalization),
            FarfieldFactor::One,
            1.0 / q,
            None,
        )
    }

    /// Gradient-type kernel c·cos^{1/2}(θ)·d^{1−Q} of order Q/(Q−1) on the
    /// group profile (the |∇ of the fundamental solution| shape).
    pub fn group_gradient(n: u32, normalization: f64, theta_nodes: usize) -> Result<Self> {
        let q = (2 * n + 2) as f64;
        let pts: Vec<(f64, f64)> = (0..theta_nodes)
            .map(|i| {
                let th = -std::f64::consts::FRAC_PI_2
                    + std::f64::consts::PI * i as f64 / (theta_nodes - 1) as f64;
                (th, normalization * th.cos().sqrt())
            })
            .collect();
        KernelSpec::new(
            VolumeProfile::heisenberg(n).into_arc(),
            q / (q - 1.0),
            1.0 - q,
            AngularProfile::Tabulated(pts),
            FarfieldFactor::One,
            1.0 / q,
            None,
        )
    }

    pub fn with_declared_bound(mut self, b: f64) -> Self {
        self.declared_bound = Some(b);
        self
    }

    pub fn profile(&self) -> &Arc<VolumeProfile> {
        &self.profile
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn beta_prime(&self) -> f64 {
        self.beta / (self.beta - 1.0)
    }

    pub fn homogeneity_exponent(&self) -> f64 {
        self.homogeneity_exponent
    }

    pub fn farfield_factor(&self) -> &FarfieldFactor {
        &self.farfield_factor
    }

    /// The angular factor when it is a constant, `None` for tabulated
    /// profiles. Radial convolution formulas require a constant factor.
    pub fn angular_constant(&self) -> Option<f64> {
        match self.angular_profile {
            AngularProfile::Constant(c) => Some(c),
            AngularProfile::Tabulated(_) => None,
        }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// β·hom + Q: zero iff |k|^β scales like 1/volume (log-growth annuli).
    pub fn critical_defect(&self) -> f64 {
        self.beta * self.homogeneity_exponent + self.profile.homogeneous_dimension() as f64
    }

    /// |k| at distance `d` and polar coordinate `theta`.
    pub fn eval_at(&self, d: f64, theta: f64) -> Result<f64> {
        if !(d > 0.0) {
            return Err(Error::domain(format!(
                "kernel is singular on the diagonal; need distance > 0, got {d}"
            )));
        }
        Ok(self.angular_profile.eval(theta)
            * d.powf(self.homogeneity_exponent)
            * self.farfield_factor.eval(d))
    }

    /// |k| along the polar axis (θ at the axis node) — the 1-D profile
    /// used by collinear regularity probes and constant-angular formulas.
    pub(crate) fn axis_value(&self, d: f64) -> f64 {
        self.angular_profile.eval(0.0)
            * d.powf(self.homogeneity_exponent)
            * self.farfield_factor.eval(d)
    }

    /// G_β = ∫_sphere |g|^β dσ_w, the angular factor of ∫|k|^β over shells.
    pub fn angular_beta_integral(&self) -> Result<f64> {
        let b = self.beta;
        match (&self.angular_profile, self.profile.kind()) {
            (AngularProfile::Constant(c), ProfileKind::Custom) => {
                // Custom profiles carry total shell mass through dV itself;
                // report the constant's power and let annulus_integral use
                // the Stieltjes route.
                Ok(c.abs().powf(b))
            }
            (AngularProfile::Constant(c), _) => {
                let q = self.profile.homogeneous_dimension() as f64;
                Ok(c.abs().powf(b) * q * self.profile.unit_ball_volume())
            }
            (AngularProfile::Tabulated(_), ProfileKind::Euclidean) => {
                let n = self.profile.dimension();
                let w = sphere_area(n - 1); // area of the equatorial sphere
                let f = |th: f64| {
                    self.angular_profile.eval(th).powf(b) * th.sin().powi(n as i32 - 2)
                };
                // Tolerance scales with the peak so large-amplitude
                // profiles still terminate (the error stays ~1e-12 relative).
                let tol = 1e-12 * (1.0 + self.angular_profile.max_abs().powf(b));
                Ok(w * adaptive_simpson(&f, 0.0, std::f64::consts::PI, tol))
            }
            (AngularProfile::Tabulated(_), ProfileKind::Heisenberg) => {
                let n = self.profile.dimension();
                let w = sphere_area(2 * n);
                let f = |th: f64| {
                    self.angular_profile.eval(th).powf(b) * th.cos().powi(n as i32 - 1)
                };
                let tol = 1e-12 * (1.0 + self.angular_profile.max_abs().powf(b));
                Ok(w * adaptive_simpson(
                    &f,
                    -std::f64::consts::FRAC_PI_2,
                    std::f64::consts::FRAC_PI_2,
                    tol,
                ))
            }
            (AngularProfile::Tabulated(_), ProfileKind::Custom) => Err(Error::domain(
                "tabulated angular profile on a custom volume profile",
            )),
        }
    }

    /// ∫ ρ^{β·hom + Q − 1} ff(ρ)^β dρ on [r1, r2], exact for power pieces.
    fn radial_beta_integral(&self, r1: f64, r2: f64) -> f64 {
        let q = self.profile.homogeneous_dimension() as f64;
        let e = self.beta * self.homogeneity_exponent + q - 1.0;
        let power_piece = |a: f64, b: f64, scale: f64| -> f64 {
            if b <= a {
                return 0.0;
            }
            let p = e + 1.0;
            scale
                * if p.abs() < 1e-12 {
                    (b / a).ln()
                } else {
                    (b.powf(p) - a.powf(p)) / p
                }
        };
        match self.farfield_factor {
            FarfieldFactor::One => power_piece(r1, r2, 1.0),
            FarfieldFactor::StepAmplify { radius, factor } => {
                let fb = factor.powf(self.beta);
                if r2 <= radius {
                    power_piece(r1, r2, 1.0)
                } else if r1 >= radius {
                    power_piece(r1, r2, fb)
                } else {
                    power_piece(r1, radius, 1.0) + power_piece(radius, r2, fb)
                }
            }
            FarfieldFactor::ExpDamp { rate } => {
                // Smooth integrand; split geometrically so wide spans keep
                // per-chunk adaptive error small.
                let br = self.beta * rate;
                let f = |rho: f64| rho.powf(e) * (-br * rho).exp();
                let mut total = 0.0f64;
                let mut a = r1;
                while a < r2 {
                    let b = (a * 2.0).min(r2);
                    total += adaptive_simpson(&f, a, b, 1e-13 * (1.0 + total.abs()));
                    a = b;
                }
                total
            }
        }
    }

    /// ∫_{r1 ≤ d(x,y) ≤ r2} |k|^β dμ(y).
    pub fn annulus_integral(&self, r1: f64, r2: f64) -> Result<f64> {
        if !(r1 > 0.0 && r2 > r1) {
            return Err(Error::domain(format!(
                "annulus needs 0 < r1 < r2, got r1={r1}, r2={r2}"
            )));
        }
        if self.profile.is_homogeneous() {
            Ok(self.angular_beta_integral()? * self.radial_beta_integral(r1, r2))
        } else {
            // Custom profile, constant angular: midpoint Stieltjes against
            // the tabulated V on a geometric subdivision.
            let cpow = self.angular_beta_integral()?;
            let steps_per_octave = 64usize;
            let octaves = (r2 / r1).log2().max(1e-9);
            let steps = ((octaves * steps_per_octave as f64).ceil() as usize).clamp(16, 400_000);
            let ratio = (r2 / r1).powf(1.0 / steps as f64);
            let mut total = 0.0;
            let mut a = r1;
            for _ in 0..steps {
                let b = (a * ratio).min(r2);
                let mid = (a * b).sqrt();
                let kb = mid.powf(self.beta * self.homogeneity_exponent)
                    * self.farfield_factor.eval(mid).powf(self.beta);
                total += cpow * kb * self.profile.annulus_measure(a, b)?;
                a = b;
            }
            Ok(total)
        }
    }

    /// k₁*(t): decreasing rearrangement of |k(x,·)| in the measure
    /// variable. Closed form for constant angular profiles; tabulated
    /// profiles use `k1_star_profile`.
    pub fn k1_star(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::domain(format!("rearrangement needs t > 0, got {t}")));
        }
        let c = match self.angular_profile {
            AngularProfile::Constant(c) => c.abs(),
            AngularProfile::Tabulated(_) => {
                return Err(Error::domain(
                    "closed-form k₁* requires a constant angular profile",
                ))
            }
        };
        match self.farfield_factor {
            // |k| is radially decreasing: k₁*(t) = |k|(r(t)).
            FarfieldFactor::One | FarfieldFactor::ExpDamp { .. } => {
                let rho = self.profile.inverse_radius(t)?;
                Ok(c * rho.powf(self.homogeneity_exponent) * self.farfield_factor.eval(rho))
            }
            // Upward jump at `radius` makes |k| non-monotone; invert the
            // exact distribution function by bisection on the level.
            FarfieldFactor::StepAmplify { radius, factor } => {
                let h = self.homogeneity_exponent;
                let dist = |s: f64| -> f64 {
                    // μ{|k| > s}
                    let near_r = (s / c).powf(1.0 / h).min(radius);
                    let far_r = (s / (c * factor)).powf(1.0 / h);
                    let mut m = self.profile.volume(near_r).unwrap_or(f64::INFINITY);
                    if far_r > radius {
                        m += self.profile.volume(far_r).unwrap_or(f64::INFINITY)
                            - self.profile.volume(radius).unwrap_or(0.0);
                    }
                    m
                };
                let mut lo = 1e-300f64;
                let mut hi = 1e300f64;
                for _ in 0..2000 {
                    let mid = (lo.ln() + hi.ln()).mul_add(0.5, 0.0).exp();
                    if dist(mid) > t {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi / lo < 1.0 + 1e-15 {
                        break;
                    }
                }
                Ok(hi)
            }
        }
    }

    /// Numerical k₁* for arbitrary angular profiles: rearrange a fine
    /// (radius × angle) cell partition covering V ∈ [v_min, v_max].
    pub fn k1_star_profile(
        &self,
        v_min: f64,
        v_max: f64,
        radial_cells: usize,
        angular_cells: usize,
    ) -> Result<RearrangedProfile> {
        if !(v_min > 0.0 && v_max > v_min) {
            return Err(Error::domain("need 0 < v_min < v_max"));
        }
        let r_lo = self.profile.inverse_radius(v_min)?;
        let r_hi = self.profile.inverse_radius(v_max)?;
        let ratio = (r_hi / r_lo).powf(1.0 / radial_cells as f64);
        let (th_lo, th_hi, weight): (f64, f64, Box<dyn Fn(f64) -> f64>) =
            match self.profile.kind() {
                ProfileKind::Euclidean => {
                    let n = self.profile.dimension() as i32;
                    (
                        0.0,
                        std::f64::consts::PI,
                        Box::new(move |th: f64| th.sin().powi(n - 2)),
                    )
                }
                ProfileKind::Heisenberg => {
                    let n = self.profile.dimension() as i32;
                    (
                        -std::f64::consts::FRAC_PI_2,
                        std::f64::consts::FRAC_PI_2,
                        Box::new(move |th: f64| th.cos().powi(n - 1)),
                    )
                }
                ProfileKind::Custom => {
                    return Err(Error::domain(
                        "angular rearrangement needs a sphere decomposition",
                    ))
                }
            };
        // Total angular weight, to normalize cell fractions of shell mass.
        let wtot = adaptive_simpson(&|th| weight(th), th_lo, th_hi, 1e-12);
        let dth = (th_hi - th_lo) / angular_cells as f64;
        let mut cells = Vec::with_capacity(radial_cells * angular_cells);
        let mut a = r_lo;
        for _ in 0..radial_cells {
            let b = a * ratio;
            let shell = self.profile.annulus_measure(a, b)?;
            let rho = (a * b).sqrt();
            for j in 0..angular_cells {
                let t0 = th_lo + dth * j as f64;
                let t1 = t0 + dth;
                let wfrac = adaptive_simpson(&|th| weight(th), t0, t1, 1e-12) / wtot;
                let th_mid = 0.5 * (t0 + t1);
                cells.push((self.eval_at(rho, th_mid)?, shell * wfrac));
            }
            a = b;
        }
        Ok(RearrangedProfile::from_value_measure_cells(cells))
    }

    /// ∫_{t1}^{t2} k₁*(u)^β du via log-substitution (the integrand is a
    /// constant for critically homogeneous unmodified kernels, so the
    /// quadrature is exact there to machine precision).
    pub fn k1_star_beta_integral(&self, t1: f64, t2: f64) -> Result<f64> {
        if !(t1 > 0.0 && t2 > t1) {
            return Err(Error::domain(format!(
                "need 0 < t1 < t2, got t1={t1}, t2={t2}"
            )));
        }
        let b = self.beta;
        let f = |x: f64| -> f64 {
            let u = x.exp();
            self.k1_star(u).map(|v| v.powf(b) * u).unwrap_or(f64::NAN)
        };
        Ok(adaptive_simpson(&f, t1.ln(), t2.ln(), 1e-11))
    }

    /// |∫_{matching annulus} |k|^β dμ − ∫_{t1}^{t2} k₁*^β du|, the residual
    /// of the rearranged-equivalence identity. Bounded by B + B^β where B
    /// is the pointwise volume-bound constant.
    pub fn rearranged_equivalence_check(&self, t1: f64, t2: f64) -> Result<f64> {
        let r1 = self.profile.inverse_radius(t1)?;
        let r2 = self.profile.inverse_radius(t2)?;
        let lhs = self.annulus_integral(r1, r2)?;
        let rhs = self.k1_star_beta_integral(t1, t2)?;
        Ok((lhs - rhs).abs())
    }

    /// Geometric ladder of volumes resolving both growth regimes.
    pub(crate) fn volume_ladder(&self) -> Vec<f64> {
        self.volume_ladder_scaled(1.0)
    }

    /// Ladder with `density` × the default number of rungs per e-fold.
    fn volume_ladder_scaled(&self, density: f64) -> Vec<f64> {
        let ratio = (self.beta_prime() / (8.0 * density)).exp();
        let (lo, hi) = match self.profile.kind() {
            ProfileKind::Custom => {
                // Restrict to the tabulated range (leave one cell of slack).
                let vmax = self
                    .profile
                    .volume(self.profile_max_radius())
                    .unwrap_or(1e8);
                (1e-8_f64.max(vmax * 1e-12), vmax.min(1e8))
            }
            _ => (1e-8, 1e8),
        };
        let mut v = lo;
        let mut out = Vec::new();
        while v <= hi * (1.0 + 1e-12) {
            out.push(v);
            v *= ratio;
        }
        out
    }

    fn profile_max_radius(&self) -> f64 {
        // Homogeneous profiles are unbounded; custom ones stop at their
        // table. Probe by doubling until inversion fails.
        let mut r = 1.0;
        while self.profile.volume(r * 2.0).is_ok() && r < 1e12 {
            r *= 2.0;
        }
        r
    }

    /// Least-squares slope/intercept estimates for the near and far
    /// annulus-growth conditions; see `NormalizationEstimate`.
    pub fn estimate_normalization(&self) -> Result<NormalizationEstimate> {
        self.estimate_normalization_scaled(1.0)
    }

    /// Same estimate on a ladder with `density` × the default rung count
    /// (used to confirm the estimates are ladder-converged).
    pub fn estimate_normalization_scaled(&self, density: f64) -> Result<NormalizationEstimate> {
        let ladder = self.volume_ladder_scaled(density);
        let radii: Vec<f64> = ladder
            .iter()
            .map(|&v| self.profile.inverse_radius(v))
            .collect::<Result<_>>()?;
        // Cumulative integrals from the smallest radius; annulus integral
        // between ladder points is a difference (additivity).
        let mut cum = vec![0.0f64];
        for w in radii.windows(2) {
            let last = *cum.last().unwrap();
            cum.push(last + self.annulus_integral(w[0], w[1])?);
        }

        // Asymptotic fit windows: first quartile (in log-volume) of the
        // V ≤ 1 region, last quartile of the V ≥ 1 region — away from the
        // crossover so modified far fields don't contaminate the near fit.
        let near_idx: Vec<usize> = (0..ladder.len()).filter(|&i| ladder[i] <= 1.0).collect();
        let far_idx: Vec<usize> = (0..ladder.len()).filter(|&i| ladder[i] >= 1.0).collect();
        let quartile = |ids: &[usize], from_start: bool| -> Vec<usize> {
            let q = (ids.len() / 4).max(2);
            if from_start {
                ids[..q.min(ids.len())].to_vec()
            } else {
                ids[ids.len() - q.min(ids.len())..].to_vec()
            }
        };
        let fit = |ids: &[usize]| -> (f64, f64) {
            // least squares of y = cum against x = ln v
            let n = ids.len() as f64;
            let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
            for &i in ids {
                let x = ladder[i].ln();
                let y = cum[i];
                sx += x;
                sy += y;
                sxx += x * x;
                sxy += x * y;
            }
            let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
            let mut rms = 0.0;
            let icept = (sy - slope * sx) / n;
            for &i in ids {
                let r = cum[i] - (slope * ladder[i].ln() + icept);
                rms += r * r;
            }
            (slope, (rms / n).sqrt())
        };
        let (a0, near_rms) = fit(&quartile(&near_idx, true));

        // Critical integrability: compare the far tail to a half-way mark.
        let i_one = far_idx[0];
        let mid = far_idx[far_idx.len() / 2];
        let last = *far_idx.last().unwrap();
        let tail_half = cum[mid] - cum[i_one];
        let tail_full = cum[last] - cum[i_one];
        let critical = (tail_full - tail_half).abs() <= 1e-6 * (1.0 + tail_full.abs());

        let (a_inf_fit, far_rms) = fit(&quartile(&far_idx, false));
        let a_inf = if critical { 0.0 } else { a_inf_fit };

        // Intercept bound: sup over same-region ladder pairs of
        // I(r_i, r_j) − slope·log(V_j/V_i), via the cumulative trick.
        let region_b = |ids: &[usize], slope: f64| -> f64 {
            let g: Vec<f64> = ids.iter().map(|&i| cum[i] - slope * ladder[i].ln()).collect();
            let mut best = 0.0f64;
            let mut min_so_far = f64::INFINITY;
            for &gi in &g {
                min_so_far = min_so_far.min(gi);
                best = best.max(gi - min_so_far);
            }
            best
        };
        let b_near = region_b(&near_idx, a0);
        let b_far = if critical {
            // A∞ = 0: the bound is the whole remaining tail.
            tail_full
        } else {
            region_b(&far_idx, a_inf)
        };

        let diverges = !a0.is_finite()
            || a0 <= 0.0
            || (near_rms > 0.1 * a0.abs().max(1e-12) && self.critical_defect().abs() > 1e-9);

        Ok(NormalizationEstimate {
            a0,
            a_inf,
            b: b_near.max(b_far).max(0.0),
            critical_integrability: critical,
            near_rms,
            far_rms,
            diverges_near_diagonal: diverges,
        })
    }

    /// Certify the kernel conditions on ladders; failures are recorded in
    /// the report, never thrown.
    /// Measured pointwise constant: sup over the volume ladder (and the
    /// sphere, for tabulated angular factors) of |k|·V(d)^{1/β}.
    pub fn pointwise_volume_bound(&self) -> f64 {
        self.pointwise_volume_bound_witness().0
    }

    fn pointwise_volume_bound_witness(&self) -> (f64, f64) {
        let ladder = self.volume_ladder();
        let thetas: Vec<f64> = match (&self.angular_profile, self.profile.kind()) {
            (AngularProfile::Constant(_), _) => vec![0.0],
            (AngularProfile::Tabulated(_), ProfileKind::Euclidean) => {
                (0..65).map(|i| std::f64::consts::PI * i as f64 / 64.0).collect()
            }
            (AngularProfile::Tabulated(_), _) => (0..65)
                .map(|i| -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * i as f64 / 64.0)
                .collect(),
        };
        let mut sup = 0.0f64;
        let mut witness = 0.0f64;
        for &v in &ladder {
            if let Ok(rho) = self.profile.inverse_radius(v) {
                for &th in &thetas {
                    let val = self
                        .eval_at(rho, th)
                        .map(|k| k * v.powf(1.0 / self.beta))
                        .unwrap_or(f64::INFINITY);
                    if val > sup {
                        sup = val;
                        witness = rho;
                    }
                }
            }
        }
        (sup, witness)
    }

    pub fn check_conditions(&self) -> VerificationReport {
        let mut rep = VerificationReport::new("kernel");
        let est = match self.estimate_normalization() {
            Ok(e) => e,
            Err(e) => {
                rep.check_flag(
                    "normalization-estimate",
                    false,
                    f64::NAN,
                    0.0,
                    Provenance::Numeric,
                    format!("estimation failed: {e}"),
                );
                return rep;
            }
        };
        rep.check_flag(
            "near-slope-positive",
            est.a0.is_finite() && est.a0 > 0.0 && !est.diverges_near_diagonal,
            est.a0,
            est.a0,
            Provenance::Numeric,
            format!("near-window rms {:.3e}", est.near_rms),
        );
        rep.check_flag(
            "far-slope-nonnegative",
            est.a_inf.is_finite() && est.a_inf >= -1e-9,
            est.a_inf,
            est.a_inf,
            Provenance::Numeric,
            if est.critical_integrability {
                "far tail integrable: critical integrability".to_string()
            } else {
                format!("far-window rms {:.3e}", est.far_rms)
            },
        );

        // Pointwise volume bound: sup over ladder (and angle) of
        // |k|·V(d)^{1/β}; report the smallest admissible constant, or
        // compare with a declared one.
        let ladder = self.volume_ladder();
        let (sup, witness) = self.pointwise_volume_bound_witness();
        let (b_bound, b_pass) = match self.declared_bound {
            Some(b) => (b, sup <= b * (1.0 + 1e-9)),
            None => (sup, sup.is_finite()),
        };
        rep.check_flag(
            "pointwise-volume-bound",
            b_pass,
            sup,
            b_bound,
            Provenance::Numeric,
            format!("witness radius {witness:.6e}"),
        );

        // x-regularity. Pointwise probe for continuous kernels; the
        // discontinuous step amplifier genuinely fails the pointwise form
        // at its jump, so it is certified through the integrated form
        // (difference integral over the far region) instead.
        let rprimes: Vec<f64> = ladder
            .iter()
            .step_by(8)
            .filter_map(|&v| self.profile.inverse_radius(v).ok())
            .collect();
        let mut b_delta = 0.0f64;
        let mut bd_witness = (0.0, 0.0);
        if self.farfield_factor.is_continuous() {
            for &rp in &rprimes {
                let v_rp = match self.profile.volume(rp) {
                    Ok(v) => v,
                    Err(_) => continue,
                };
                for &v in &ladder {
                    if v < 2.0 * v_rp {
                        continue;
                    }
                    let rho = match self.profile.inverse_radius(v) {
                        Ok(r) => r,
                        Err(_) => continue,
                    };
                    for d in [rho - rp, rho + rp] {
                        if d <= 0.0 {
                            continue;
                        }
                        let diff = (self.axis_value(d) - self.axis_value(rho)).abs();
                        let val = diff * v_rp.powf(-self.eta) * v.powf(self.eta + 1.0 / self.beta);
                        if val > b_delta {
                            b_delta = val;
                            bd_witness = (rp, rho);
                        }
                    }
                }
            }
            rep.check_flag(
                "x-regularity",
                b_delta.is_finite(),
                b_delta,
                b_delta,
                Provenance::Numeric,
                format!(
                    "pointwise probe, witness (r'={:.3e}, d={:.3e})",
                    bd_witness.0, bd_witness.1
                ),
            );
        } else {
            // ∫_{V(d)≥2V(r')} |k(d−r') − k(d)|^β dμ along the axis, as a
            // midpoint Stieltjes sum against V (valid for every profile;
            // the integrand has jumps, which adaptive panels handle badly).
            let r_end = match self.profile.inverse_radius(*ladder.last().unwrap()) {
                Ok(r) => r,
                Err(_) => self.profile_max_radius(),
            };
            for &rp in &rprimes {
                let v_rp = match self.profile.volume(rp) {
                    Ok(v) => v,
                    Err(_) => continue,
                };
                let r_start = match self.profile.inverse_radius(2.0 * v_rp) {
                    Ok(r) => r,
                    Err(_) => continue,
                };
                if r_start >= r_end {
                    continue;
                }
                let octaves = (r_end / r_start).log2().max(1e-9);
                let steps = ((octaves * 96.0).ceil() as usize).clamp(32, 20_000);
                let ratio = (r_end / r_start).powf(1.0 / steps as f64);
                let mut total = 0.0;
                let mut a = r_start;
                for _ in 0..steps {
                    let b = (a * ratio).min(r_end);
                    let mid = (a * b).sqrt();
                    let diff = (self.axis_value(mid - rp) - self.axis_value(mid)).abs();
                    total += diff.powf(self.beta)
                        * self.profile.annulus_measure(a, b).unwrap_or(0.0);
                    a = b;
                }
                if total > b_delta {
                    b_delta = total;
                    bd_witness = (rp, r_start);
                }
            }
            rep.check_flag(
                "x-regularity",
                b_delta.is_finite(),
                b_delta,
                b_delta,
                Provenance::Numeric,
                format!(
                    "integrated probe (discontinuous far field), witness r'={:.3e}",
                    bd_witness.0
                ),
            );
        }

        // Rearranged asymptotics: t^{1/β} k₁*(t) approaches A₀^{1/β} as
        // t → 0 and A∞^{1/β} (or 0 under critical integrability) as t → ∞.
        if matches!(self.angular_profile, AngularProfile::Constant(_)) {
            let t_near = ladder[0];
            let near = self.k1_star(t_near).map(|k| k * t_near.powf(1.0 / self.beta));
            let a0_b = est.a0.powf(1.0 / self.beta);
            if let Ok(nv) = near {
                rep.check_close(
                    "rearranged-near-asymptote",
                    nv,
                    a0_b,
                    5e-2,
                    Provenance::Numeric,
                    format!("t = {t_near:.1e}"),
                );
            }
            let t_far = *ladder.last().unwrap();
            let far = self.k1_star(t_far).map(|k| k * t_far.powf(1.0 / self.beta));
            if let Ok(fv) = far {
                if est.critical_integrability {
                    rep.check_upper(
                        "rearranged-far-asymptote",
                        fv,
                        0.05 * a0_b,
                        0.0,
                        Provenance::Numeric,
                        "critical integrability: far profile must vanish",
                    );
                } else {
                    rep.check_close(
                        "rearranged-far-asymptote",
                        fv,
                        est.a_inf.powf(1.0 / self.beta),
                        5e-2,
                        Provenance::Numeric,
                        format!("t = {t_far:.1e}"),
                    );
                }
            }
        }
        rep
    }
}

/// Slope/intercept estimates for the annulus-growth conditions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalizationEstimate {
    /// Near-diagonal log-slope.
    pub a0: f64,
    /// Far-field log-slope (0 when the far tail is integrable).
    pub a_inf: f64,
    /// Intercept bound: sup over same-region ladder pairs of the excess
    /// over the fitted slope.
    pub b: f64,
    /// Far tail of ∫|k|^β converges.
    pub critical_integrability: bool,
    pub near_rms: f64,
    pub far_rms: f64,
    /// Near fit did not stabilize (supercritical singularity).
    pub diverges_near_diagonal: bool,
}
