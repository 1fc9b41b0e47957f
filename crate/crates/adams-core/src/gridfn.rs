//! Radial functions sampled on a log-spaced radius grid, interpreted as
//! piecewise constant on the annuli between consecutive radii.
//!
//! The first cell covers the punctured ball (0, radii[0]]; beyond the last
//! radius the function is zero. Piecewise constancy makes distribution
//! functions and rearrangements exactly computable (finite sums of annulus
//! measures), so the rearrangement pipeline adds no quadrature error.

use crate::space::VolumeProfile;
use crate::{Error, Result};
use std::path::Path;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct GridFunction {
    profile: Arc<VolumeProfile>,
    radii: Vec<f64>,
    values: Vec<f64>,
    support_radius: Option<f64>,
}

impl GridFunction {
    /// `values[i]` holds on the annulus (radii[i-1], radii[i]], with
    /// radii[-1] = 0; the function vanishes beyond the last radius.
    pub fn new(
        profile: Arc<VolumeProfile>,
        radii: Vec<f64>,
        values: Vec<f64>,
        support_radius: Option<f64>,
    ) -> Result<Self> {
        if radii.len() != values.len() || radii.is_empty() {
            return Err(Error::domain(
                "radii and values must be equal-length and non-empty",
            ));
        }
        if !(radii[0] > 0.0) {
            return Err(Error::domain("radii must be strictly positive"));
        }
        for w in radii.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::domain(format!(
                    "radii must be strictly increasing: {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("values must be finite"));
        }
        if let Some(s) = support_radius {
            if !(s > 0.0) {
                return Err(Error::domain("support radius must be positive"));
            }
            for (i, &v) in values.iter().enumerate() {
                let inner = if i == 0 { 0.0 } else { radii[i - 1] };
                if inner >= s && v != 0.0 {
                    return Err(Error::domain(format!(
                        "value {v} at radius > support radius {s}"
                    )));
                }
            }
        }
        // Fail fast if the grid leaves the profile's tabulated range.
        profile.volume(*radii.last().unwrap())?;
        Ok(GridFunction {
            profile,
            radii,
            values,
            support_radius,
        })
    }

    /// Sample a radial function at each cell's inner edge (left sampling).
    /// For nonincreasing radial data this makes the sampled rearrangement
    /// agree with the exact one at every grid measure point.
    pub fn sample_left(
        profile: Arc<VolumeProfile>,
        radii: Vec<f64>,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(radii.len());
        for (i, _r) in radii.iter().enumerate() {
            let left = if i == 0 { 0.0 } else { radii[i - 1] };
            values.push(f(left));
        }
        GridFunction::new(profile, radii, values, None)
    }

    /// Build from exact per-cell measure averages supplied by the caller:
    /// `avg(inner, outer)` must return (1/μ(annulus)) ∫_annulus f dμ.
    /// Cell averages preserve every partial integral ∫_{B(0,r_i)} f dμ.
    pub fn from_cell_averages(
        profile: Arc<VolumeProfile>,
        radii: Vec<f64>,
        avg: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(radii.len());
        for (i, &r) in radii.iter().enumerate() {
            let left = if i == 0 { 0.0 } else { radii[i - 1] };
            values.push(avg(left, r));
        }
        GridFunction::new(profile, radii, values, None)
    }

    pub fn profile(&self) -> &Arc<VolumeProfile> {
        &self.profile
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn support_radius(&self) -> Option<f64> {
        self.support_radius
    }

    /// Outer radius of the last cell with a nonzero value (0 if f ≡ 0).
    pub fn nonzero_radius(&self) -> f64 {
        for i in (0..self.values.len()).rev() {
            if self.values[i] != 0.0 {
                return self.radii[i];
            }
        }
        0.0
    }

    pub fn cell_count(&self) -> usize {
        self.values.len()
    }

    /// Inner edge of cell `i`.
    pub fn cell_inner(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.radii[i - 1]
        }
    }

    /// Measure of cell `i`'s annulus.
    pub fn cell_measure(&self, i: usize) -> f64 {
        let inner = self.cell_inner(i);
        self.profile
            .annulus_measure(inner, self.radii[i])
            .expect("grid validated at construction")
    }

    /// Value at radius r (0 beyond the last cell).
    pub fn eval(&self, r: f64) -> f64 {
        if r < 0.0 {
            return 0.0;
        }
        if r <= self.radii[0] {
            return self.values[0];
        }
        match self.radii.binary_search_by(|v| v.total_cmp(&r)) {
            Ok(i) => self.values[i],
            Err(i) if i < self.values.len() => self.values[i],
            _ => 0.0,
        }
    }

    /// ∫ |f|^p dμ, an exact sum over cells.
    pub fn integral_abs_pow(&self, p: f64) -> f64 {
        let mut s = 0.0;
        for i in 0..self.values.len() {
            let v = self.values[i].abs();
            if v > 0.0 {
                s += v.powf(p) * self.cell_measure(i);
            }
        }
        s
    }

    /// ∫ f dμ (signed), an exact sum over cells.
    pub fn integral(&self) -> f64 {
        (0..self.values.len())
            .map(|i| self.values[i] * self.cell_measure(i))
            .sum()
    }

    /// L^p norm, p ≥ 1.
    pub fn norm_p(&self, p: f64) -> f64 {
        self.integral_abs_pow(p).powf(1.0 / p)
    }

    /// μ{f ≠ 0}.
    pub fn support_measure(&self) -> f64 {
        (0..self.values.len())
            .filter(|&i| self.values[i] != 0.0)
            .map(|i| self.cell_measure(i))
            .sum()
    }

    /// Pointwise map of cell values (same grid).
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            profile: self.profile.clone(),
            radii: self.radii.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            support_radius: None,
        }
    }

    pub fn scale(&self, c: f64) -> GridFunction {
        self.map_values(|v| c * v)
    }

    /// f · χ_{B(0, r)ᶜ}: zero out every cell that intersects B(0, r);
    /// `r` must be a grid radius (or 0) so the cut is exact.
    pub fn restrict_outside(&self, r: f64) -> Result<GridFunction> {
        self.restricted(r, true)
    }

    /// f · χ_{B(0, r)}: keep only cells inside the ball; `r` must be a
    /// grid radius (or beyond the last cell) so the cut is exact.
    pub fn restrict_inside(&self, r: f64) -> Result<GridFunction> {
        self.restricted(r, false)
    }

    fn restricted(&self, r: f64, keep_outside: bool) -> Result<GridFunction> {
        if r > 0.0 && r < *self.radii.last().unwrap() {
            let on_grid = self
                .radii
                .iter()
                .any(|&g| (g - r).abs() <= 1e-12 * g.max(1.0));
            if !on_grid {
                return Err(Error::domain(format!(
                    "cut radius {r} is not a grid radius; restriction would not be exact"
                )));
            }
        }
        let mut values = self.values.clone();
        for i in 0..values.len() {
            let outer = self.radii[i];
            let keep = if keep_outside {
                outer > r * (1.0 + 1e-12)
            } else {
                outer <= r * (1.0 + 1e-12)
            };
            if !keep {
                values[i] = 0.0;
            }
        }
        GridFunction::new(self.profile.clone(), self.radii.clone(), values, None)
    }

    /// Insert `r` into the grid (splitting the cell containing it) so that
    /// later restrictions at `r` are exact. No-op if `r` is on the grid.
    pub fn with_grid_radius(&self, r: f64) -> Result<GridFunction> {
        if !(r > 0.0) {
            return Err(Error::domain("grid radius must be positive"));
        }
        if self
            .radii
            .iter()
            .any(|&g| (g - r).abs() <= 1e-12 * g.max(1.0))
        {
            return Ok(self.clone());
        }
        let mut radii = self.radii.clone();
        let mut values = self.values.clone();
        match radii.binary_search_by(|v| v.total_cmp(&r)) {
            Ok(_) => unreachable!("handled above"),
            Err(i) => {
                radii.insert(i, r);
                let v = if i < values.len() { values[i] } else { 0.0 };
                values.insert(i, v);
            }
        }
        GridFunction::new(
            self.profile.clone(),
            radii,
            values,
            self.support_radius.map(|s| s.max(r)),
        )
    }

    /// Export as two-column CSV with a header naming the profile.
    pub fn to_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(["radius", &format!("value:{}", self.profile.name())])
            .map_err(csv_err)?;
        for (r, v) in self.radii.iter().zip(self.values.iter()) {
            w.write_record([format!("{r:.17e}"), format!("{v:.17e}")])
                .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Import a CSV written by [`Self::to_csv`]. If `profile` is `None`
    /// the profile is reconstructed from the header name (homogeneous
    /// profiles only).
    pub fn from_csv(path: &Path, profile: Option<Arc<VolumeProfile>>) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
        let headers = rdr.headers().map_err(csv_err)?.clone();
        if headers.len() < 2 || !headers[1].starts_with("value:") {
            return Err(Error::Parse(
                "grid CSV header must be radius,value:<profile>".into(),
            ));
        }
        let name = headers[1].trim_start_matches("value:").to_string();
        let profile = match profile {
            Some(p) => {
                if p.name() != name {
                    return Err(Error::Parse(format!(
                        "profile mismatch: file has {name:?}, caller supplied {:?}",
                        p.name()
                    )));
                }
                p
            }
            None => Arc::new(VolumeProfile::from_name(&name)?),
        };
        let mut radii = Vec::new();
        let mut values = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            radii.push(
                rec[0]
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad radius {:?}", &rec[0])))?,
            );
            values.push(
                rec[1]
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad value {:?}", &rec[1])))?,
            );
        }
        GridFunction::new(profile, radii, values, None)
    }
}

/// A log-spaced radius grid covering ball volumes [v_min, v_max].
pub fn log_radius_grid(profile: &VolumeProfile, v_min: f64, v_max: f64, points: usize) -> Vec<f64> {
    assert!(v_min > 0.0 && v_max > v_min && points >= 2);
    let l0 = v_min.ln();
    let l1 = v_max.ln();
    (0..points)
        .map(|i| {
            let v = (l0 + (l1 - l0) * i as f64 / (points - 1) as f64).exp();
            profile
                .inverse_radius(v)
                .expect("volume inside profile range")
        })
        .collect()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(format!("csv: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn disk_indicator() -> GridFunction {
        let p = VolumeProfile::euclidean(2).into_arc();
        GridFunction::new(p, vec![1.0, 2.0], vec![1.0, 0.0], Some(1.0)).unwrap()
    }

    #[test]
    fn cell_measures_and_integrals_are_exact() {
        let f = disk_indicator();
        assert!((f.cell_measure(0) - PI).abs() < 1e-14);
        assert!((f.cell_measure(1) - 3.0 * PI).abs() < 1e-14);
        assert!((f.integral() - PI).abs() < 1e-14);
        assert!((f.norm_p(2.0) - PI.sqrt()).abs() < 1e-14);
        assert!((f.support_measure() - PI).abs() < 1e-14);
    }

    #[test]
    fn eval_uses_half_open_annuli() {
        let f = disk_indicator();
        assert_eq!(f.eval(0.5), 1.0);
        assert_eq!(f.eval(1.0), 1.0);
        assert_eq!(f.eval(1.5), 0.0);
        assert_eq!(f.eval(3.0), 0.0);
    }

    #[test]
    fn restriction_needs_grid_radius_and_is_exact() {
        let p = VolumeProfile::euclidean(2).into_arc();
        let f = GridFunction::new(p, vec![1.0, 2.0, 3.0], vec![3.0, 2.0, 1.0], None).unwrap();
        let outside = f.restrict_outside(2.0).unwrap();
        assert_eq!(outside.values(), &[0.0, 0.0, 1.0]);
        let inside = f.restrict_inside(2.0).unwrap();
        assert_eq!(inside.values(), &[3.0, 2.0, 0.0]);
        assert!(f.restrict_outside(1.5).is_err());
        let refined = f.with_grid_radius(1.5).unwrap();
        assert_eq!(refined.values(), &[3.0, 2.0, 2.0, 1.0]);
        assert!((refined.integral() - f.integral()).abs() < 1e-12);
        assert!(refined.restrict_outside(1.5).is_ok());
    }

    #[test]
    fn validation_errors() {
        let p = VolumeProfile::euclidean(2).into_arc();
        assert!(GridFunction::new(p.clone(), vec![1.0, 1.0], vec![1.0, 1.0], None).is_err());
        assert!(GridFunction::new(p.clone(), vec![0.0, 1.0], vec![1.0, 1.0], None).is_err());
        assert!(GridFunction::new(p.clone(), vec![1.0], vec![f64::NAN], None).is_err());
        // Nonzero value beyond the declared support radius.
        assert!(GridFunction::new(p, vec![1.0, 2.0], vec![1.0, 1.0], Some(1.0)).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = std::env::temp_dir().join("adams_core_gridfn_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("f.csv");
        let f = disk_indicator();
        f.to_csv(&path).unwrap();
        let back = GridFunction::from_csv(&path, None).unwrap();
        assert_eq!(back.radii(), f.radii());
        assert_eq!(back.values(), f.values());
        assert_eq!(back.profile().name(), "euclidean(2)");
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn log_grid_spans_requested_volumes() {
        let p = VolumeProfile::euclidean(2);
        let g = log_radius_grid(&p, 1e-8, 1e8, 65);
        assert_eq!(g.len(), 65);
        assert!((p.volume(g[0]).unwrap() - 1e-8).abs() < 1e-20);
        assert!((p.volume(g[64]).unwrap() - 1e8).abs() < 1e-4);
        for w in g.windows(2) {
            assert!(w[1] > w[0]);
        }
    }
}
