//! Decreasing rearrangements, distribution functions, and level sets for
//! radial grid functions.
//!
//! Because grid functions are piecewise constant on annuli, every quantity
//! here is a finite exact sum of annulus measures: the rearrangement
//! pipeline introduces no quadrature error of its own.

use crate::gridfn::GridFunction;
use crate::{Error, Result};

/// The decreasing rearrangement f* of |f| as a right-continuous step
/// function on measure space: value `values[k]` on [breaks[k-1], breaks[k])
/// with breaks[-1] = 0, and 0 past the last break.
#[derive(Debug, Clone)]
pub struct RearrangedProfile {
    breaks: Vec<f64>,
    values: Vec<f64>,
    /// cums[k] = ∫₀^{breaks[k]} f*(u) du.
    cums: Vec<f64>,
}

impl RearrangedProfile {
    /// Build from (value, measure) cells of any measurable partition —
    /// used both for grid functions and for 2-D (radius × angle) kernel
    /// rearrangements.
    pub fn from_value_measure_cells(cells: Vec<(f64, f64)>) -> RearrangedProfile {
        Self::from_cells(
            cells
                .into_iter()
                .filter(|c| c.0 != 0.0)
                .map(|(v, m)| (v.abs(), m))
                .collect(),
        )
    }

    fn from_cells(mut cells: Vec<(f64, f64)>) -> RearrangedProfile {
        // cells: (|value|, measure), positive values only.
        cells.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut breaks = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut acc = 0.0;
        for (v, m) in cells {
            acc += m;
            if values.last() == Some(&v) {
                *breaks.last_mut().unwrap() = acc;
            } else {
                values.push(v);
                breaks.push(acc);
            }
        }
        let mut cums = Vec::with_capacity(breaks.len());
        let mut s = 0.0;
        let mut prev = 0.0;
        for (t, v) in breaks.iter().zip(values.iter()) {
            s += v * (t - prev);
            prev = *t;
            cums.push(s);
        }
        RearrangedProfile {
            breaks,
            values,
            cums,
        }
    }

    /// Measure breakpoints (strictly increasing).
    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    /// Step values (strictly decreasing).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// μ{|f| > 0}.
    pub fn total_measure(&self) -> f64 {
        self.breaks.last().copied().unwrap_or(0.0)
    }

    /// f*(t) = inf{s ≥ 0 : μ{|f| > s} ≤ t}. Right-continuous.
    pub fn star(&self, t: f64) -> f64 {
        if t < 0.0 {
            return self.values.first().copied().unwrap_or(0.0);
        }
        let k = self.breaks.partition_point(|&b| b <= t);
        self.values.get(k).copied().unwrap_or(0.0)
    }

    /// ∫₀ᵗ f*(u) du (t ≥ 0), exact for the step function.
    pub fn integral_to(&self, t: f64) -> f64 {
        if t <= 0.0 || self.breaks.is_empty() {
            return 0.0;
        }
        let k = self.breaks.partition_point(|&b| b <= t);
        if k == self.breaks.len() {
            return *self.cums.last().unwrap();
        }
        let base = if k == 0 { 0.0 } else { self.cums[k - 1] };
        let prev = if k == 0 { 0.0 } else { self.breaks[k - 1] };
        base + self.values[k] * (t - prev)
    }

    /// f**(t) = (1/t) ∫₀ᵗ f*.
    pub fn double_star(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::domain(format!("double_star needs t > 0, got {t}")));
        }
        Ok(self.integral_to(t) / t)
    }

    /// ∫ (f*)^p over the whole support.
    pub fn integral_pow(&self, p: f64) -> f64 {
        let mut s = 0.0;
        let mut prev = 0.0;
        for (t, v) in self.breaks.iter().zip(self.values.iter()) {
            s += v.powf(p) * (t - prev);
            prev = *t;
        }
        s
    }

    /// ∫₀ᵗ Φ(f*(u)) du, exact for the step function. Note Φ(0) weights the
    /// region past the support, so the integrand need not vanish there.
    pub fn integral_phi_to(&self, phi: impl Fn(f64) -> f64, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let mut s = 0.0;
        let mut prev = 0.0;
        for (b, v) in self.breaks.iter().zip(self.values.iter()) {
            if *b >= t {
                s += phi(*v) * (t - prev);
                return s;
            }
            s += phi(*v) * (b - prev);
            prev = *b;
        }
        s + phi(0.0) * (t - prev)
    }
}

/// Distribution function m_f(s) = μ{|f| > s}; exact sum of annulus measures.
pub fn distribution(f: &GridFunction, s: f64) -> Result<f64> {
    if s < 0.0 {
        return Err(Error::domain(format!("level must be >= 0, got {s}")));
    }
    let mut m = 0.0;
    for i in 0..f.cell_count() {
        if f.values()[i].abs() > s {
            m += f.cell_measure(i);
        }
    }
    Ok(m)
}

/// Decreasing rearrangement of |f|.
pub fn decreasing_rearrangement(f: &GridFunction) -> RearrangedProfile {
    let cells: Vec<(f64, f64)> = (0..f.cell_count())
        .filter(|&i| f.values()[i] != 0.0)
        .map(|i| (f.values()[i].abs(), f.cell_measure(i)))
        .collect();
    RearrangedProfile::from_cells(cells)
}

/// f**(t) for a rearranged profile (free-function form of the method).
pub fn double_star(p: &RearrangedProfile, t: f64) -> Result<f64> {
    p.double_star(t)
}

/// Radius of the centered-ball component that completes the level set F_τ.
///
/// F_τ is built as {|f| > s} ∪ (B(0, r) ∩ {|f| = s}) with s = f*(τ) and r
/// chosen so μ(F_τ) = τ; flat levels are resolved by the centered ball.
/// For radially nonincreasing |f| the resulting F_τ is the centered ball
/// of measure τ and the returned r satisfies V(r) = τ exactly.
pub fn level_set_radius(f: &GridFunction, tau: f64) -> Result<f64> {
    let fill = level_set_fill(f, tau)?;
    Ok(fill.ball_radius)
}

/// The computed pieces of the level set F_τ; shared by the identity check
/// and the truncated-potential machinery.
#[derive(Debug, Clone)]
pub(crate) struct LevelSetFill {
    /// Threshold s = f*(τ).
    pub level: f64,
    /// Measure of {|f| > s} (always inside F_τ).
    pub above_measure: f64,
    /// Measure drawn from the plateau {|f| = s}.
    pub plateau_fill: f64,
    /// Outer radius of the plateau fill (the prescription's ball radius).
    pub ball_radius: f64,
}

pub(crate) fn level_set_fill(f: &GridFunction, tau: f64) -> Result<LevelSetFill> {
    if !(tau > 0.0) {
        return Err(Error::domain(format!("level set needs τ > 0, got {tau}")));
    }
    let star = decreasing_rearrangement(f);
    let s = star.star(tau);
    let above = distribution(f, s)?;
    let mut rem = tau - above;
    debug_assert!(rem >= -1e-12 * tau);
    rem = rem.max(0.0);
    let profile = f.profile();

    // Plateau regions in increasing radius order: grid cells with |value|
    // exactly s, plus (when s = 0) the unbounded exterior of the grid.
    let mut first_inner: Option<f64> = None;
    for i in 0..f.cell_count() {
        if f.values()[i].abs() != s {
            continue;
        }
        let inner = f.cell_inner(i);
        if first_inner.is_none() {
            first_inner = Some(inner);
        }
        let cap = f.cell_measure(i);
        if rem <= cap * (1.0 + 1e-14) {
            let r = if rem == 0.0 {
                inner
            } else {
                profile.inverse_radius(profile.volume(inner)? + rem.min(cap))?
            };
            return Ok(LevelSetFill {
                level: s,
                above_measure: above,
                plateau_fill: tau - above,
                ball_radius: r,
            });
        }
        rem -= cap;
    }
    if s == 0.0 {
        // Fill continues into the ambient zero set beyond the grid.
        let edge = *f.radii().last().unwrap();
        let start = first_inner.unwrap_or(edge);
        let r = if rem == 0.0 {
            start
        } else {
            profile.inverse_radius(profile.volume(edge)? + rem)?
        };
        return Ok(LevelSetFill {
            level: 0.0,
            above_measure: above,
            plateau_fill: tau - above,
            ball_radius: r,
        });
    }
    Err(Error::range(format!(
        "τ = {tau} is not attainable for this function's level structure"
    )))
}

/// |∫_{F_τ} Φ(|f|) dμ − ∫₀^τ Φ(f*(u)) du|, both sides exact sums.
pub fn rearrangement_identity_check(
    f: &GridFunction,
    phi: impl Fn(f64) -> f64,
    tau: f64,
) -> Result<f64> {
    let fill = level_set_fill(f, tau)?;
    let mut lhs = 0.0;
    for i in 0..f.cell_count() {
        if f.values()[i].abs() > fill.level {
            lhs += phi(f.values()[i].abs()) * f.cell_measure(i);
        }
    }
    lhs += phi(fill.level) * fill.plateau_fill;
    let star = decreasing_rearrangement(f);
    let rhs = star.integral_phi_to(phi, tau);
    Ok((lhs - rhs).abs())
}

/// Log-spaced measure grid from 1e-8·total to total, for sampling
/// rearranged quantities across both the t → 0 regime and the tail.
pub fn log_measure_grid(total: f64, points: usize) -> Vec<f64> {
    assert!(total > 0.0 && points >= 2);
    let l0 = (1e-8 * total).ln();
    let l1 = total.ln();
    (0..points)
        .map(|i| (l0 + (l1 - l0) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::VolumeProfile;
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    fn indicator_of_measure_3() -> GridFunction {
        // χ over a centered ball of measure 3 on ℝ².
        let p = VolumeProfile::euclidean(2).into_arc();
        let r = p.inverse_radius(3.0).unwrap();
        GridFunction::new(p, vec![r], vec![1.0], None).unwrap()
    }

    #[test]
    fn indicator_distribution_and_star() {
        let f = indicator_of_measure_3();
        assert!(rel(distribution(&f, 0.5).unwrap(), 3.0) < 1e-14);
        assert_eq!(distribution(&f, 1.0).unwrap(), 0.0);
        assert!(distribution(&f, -0.1).is_err());
        let s = decreasing_rearrangement(&f);
        assert_eq!(s.star(0.0), 1.0);
        assert_eq!(s.star(2.999), 1.0);
        assert_eq!(s.star(3.0), 0.0);
        assert!(rel(s.double_star(3.0).unwrap(), 1.0) < 1e-14);
        assert!(rel(s.double_star(6.0).unwrap(), 0.5) < 1e-14);
        assert!(s.double_star(0.0).is_err());
    }

    /// Left-edge sampling of e^{-|x|} on ℝ²: at grid-aligned measures the
    /// sampled rearrangement has no discretization error at all, so the
    /// analytic m_f(s) = π ln²(1/s) and f*(t) = e^{-√(t/π)} are hit to
    /// machine precision.
    #[test]
    fn exponential_example_distribution_and_star() {
        let p = VolumeProfile::euclidean(2).into_arc();
        // Uniform radius grid containing ln 2 exactly.
        let ln2 = std::f64::consts::LN_2;
        let mut radii: Vec<f64> = (1..=4000).map(|i| i as f64 * 8.0 / 4000.0).collect();
        radii.push(ln2);
        radii.sort_by(f64::total_cmp);
        radii.dedup();
        let f = GridFunction::sample_left(p.clone(), radii, |r| (-r).exp()).unwrap();

        // m_f(1/2): the sampled function exceeds 1/2 exactly on B(0, ln 2).
        let m = distribution(&f, 0.5).unwrap();
        assert!(rel(m, PI * ln2 * ln2) < 1e-12, "m = {m}");

        // f* at aligned measure points t = V(r): equals e^{-r} exactly.
        let s = decreasing_rearrangement(&f);
        for r in [0.5, 1.0, ln2, 2.0, 3.0] {
            let t = PI * r * r;
            assert!(rel(s.star(t), (-r).exp()) < 1e-12, "r = {r}");
        }
    }

    /// Measure-averaged sampling preserves partial integrals, so f** at
    /// aligned points matches the closed form (1/t)∫₀ᵗ e^{-√(u/π)} du:
    /// at t = π the value is 2(1 - 2e^{-1}).
    #[test]
    fn exponential_example_double_star() {
        let p = VolumeProfile::euclidean(2).into_arc();
        let radii: Vec<f64> = (1..=6000).map(|i| i as f64 * 12.0 / 6000.0).collect();
        // ∫ e^{-ρ} over an annulus of ℝ²: 2π[(1+a)e^{-a} − (1+b)e^{-b}].
        let f = GridFunction::from_cell_averages(p.clone(), radii, |a, b| {
            let mass = 2.0 * PI * ((1.0 + a) * (-a).exp() - (1.0 + b) * (-b).exp());
            mass / (PI * (b * b - a * a))
        })
        .unwrap();
        let s = decreasing_rearrangement(&f);
        let expected = 2.0 * (1.0 - 2.0 / std::f64::consts::E);
        // The grid contains r = 1 (π·1² = π aligned), i = 500.
        let got = s.double_star(PI).unwrap();
        assert!(rel(got, expected) < 1e-9, "got {got}, want {expected}");
    }

    #[test]
    fn brute_force_sort_oracle_agrees_off_grid() {
        // Oracle: sample |f| on a fine independent grid, sort descending,
        // and read the rearrangement off the sorted prefix sums.
        let p = VolumeProfile::euclidean(2).into_arc();
        let radii: Vec<f64> = (1..=300).map(|i| i as f64 / 50.0).collect();
        let vals: Vec<f64> = (0..300)
            .map(|i| ((i as f64 * 0.7).sin() * 2.0).abs() + 0.1)
            .collect();
        let f = GridFunction::new(p.clone(), radii, vals, None).unwrap();
        let s = decreasing_rearrangement(&f);

        let fine: Vec<(f64, f64)> = (0..60000)
            .map(|i| {
                let a = 6.0 * i as f64 / 60000.0;
                let b = 6.0 * (i + 1) as f64 / 60000.0;
                let mid = 0.5 * (a + b);
                (f.eval(mid), PI * (b * b - a * a))
            })
            .collect();
        let oracle = RearrangedProfile::from_cells(
            fine.iter().filter(|c| c.0 != 0.0).copied().collect(),
        );
        for k in 1..40 {
            let t = 36.0 * PI * k as f64 / 41.0;
            let a = s.star(t);
            let b = oracle.star(t);
            assert!((a - b).abs() <= 0.12 * a.abs().max(0.1), "t={t}: {a} vs {b}");
        }
    }

    #[test]
    fn level_set_radius_examples() {
        let p = VolumeProfile::euclidean(2).into_arc();
        // Radially strictly decreasing (as a step function): τ = π → r = 1.
        let radii: Vec<f64> = (1..=40).map(|i| i as f64 / 10.0).collect();
        let f = GridFunction::sample_left(p.clone(), radii, |r| (-r).exp()).unwrap();
        let r = level_set_radius(&f, PI).unwrap();
        assert!(rel(r, 1.0) < 1e-12);

        // Flat level: χ_{B(0,2)}, τ = π → centered ball of area π, r = 1.
        let g = GridFunction::new(p.clone(), vec![2.0], vec![1.0], None).unwrap();
        assert!(rel(level_set_radius(&g, PI).unwrap(), 1.0) < 1e-14);

        // Plateau inside a decreasing profile: high value on B(0,1),
        // plateau on (1,2); τ inside the plateau keeps V(r) = τ.
        let h = GridFunction::new(p.clone(), vec![1.0, 2.0], vec![2.0, 1.0], None).unwrap();
        let tau = PI * 2.5;
        let r = level_set_radius(&h, tau).unwrap();
        assert!(rel(PI * r * r, tau) < 1e-12);
        // Oracle via the distribution function: μ{|f| > 1} = π, so the
        // plateau must contribute τ − π and π r² − π·1 = τ − π.
        let m_above = distribution(&h, 1.0).unwrap();
        assert!(rel(PI * r * r - m_above, tau - m_above) < 1e-12);

        // Monotone nondecreasing in τ.
        let mut prev = 0.0;
        for k in 1..=20 {
            let tau = PI * 4.0 * k as f64 / 20.0;
            let r = level_set_radius(&h, tau).unwrap();
            assert!(r >= prev);
            prev = r;
        }
    }

    #[test]
    fn level_set_radius_beyond_support_fills_the_zero_plateau() {
        let p = VolumeProfile::euclidean(2).into_arc();
        let g = GridFunction::new(p, vec![1.0], vec![1.0], None).unwrap();
        // τ = π exactly: F_τ is the support itself; ball component starts
        // at the support edge.
        assert!(rel(level_set_radius(&g, PI).unwrap(), 1.0) < 1e-14);
        // τ = 4π: fill π·r² = 4π into the ambient zero set.
        assert!(rel(level_set_radius(&g, 4.0 * PI).unwrap(), 2.0) < 1e-12);
    }

    #[test]
    fn rearrangement_identity_examples() {
        let p = VolumeProfile::euclidean(2).into_arc();
        let f = indicator_of_measure_3();
        assert!(rearrangement_identity_check(&f, |u| u, 2.0).unwrap() < 1e-12);

        let radii: Vec<f64> = (1..=200).map(|i| i as f64 / 50.0).collect();
        let g = GridFunction::sample_left(p.clone(), radii.clone(), |r| 1.0 / (1.0 + r * r))
            .unwrap();
        assert!(rearrangement_identity_check(&g, |u| u * u, PI).unwrap() < 1e-10);

        // Non-monotone values and a fractional power.
        let vals: Vec<f64> = (0..200).map(|i| ((i as f64 * 0.31).cos()).abs()).collect();
        let h = GridFunction::new(p, radii, vals, None).unwrap();
        assert!(rearrangement_identity_check(&h, |u| u.powf(1.5), 2.0).unwrap() < 1e-10);
    }

    #[test]
    fn equimeasurability_of_powers() {
        // ∫|f|^p dμ = ∫(f*)^p dt exactly, by construction.
        let p = VolumeProfile::euclidean(3).into_arc();
        let radii: Vec<f64> = (1..=100).map(|i| i as f64 / 20.0).collect();
        let vals: Vec<f64> = (0..100).map(|i| ((i as f64).sin() * 3.0).abs()).collect();
        let f = GridFunction::new(p, radii, vals, None).unwrap();
        let s = decreasing_rearrangement(&f);
        for pw in [1.0, 2.0, 3.5] {
            assert!(rel(f.integral_abs_pow(pw), s.integral_pow(pw)) < 1e-12);
        }
    }

    #[test]
    fn log_measure_grid_shape() {
        let g = log_measure_grid(10.0, 9);
        assert_eq!(g.len(), 9);
        assert!(rel(g[0], 1e-7) < 1e-12);
        assert!(rel(g[8], 10.0) < 1e-12);
    }
}
