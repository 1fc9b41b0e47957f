//! Radial metric measure spaces represented through their ball-volume laws.

use crate::interp::MonotoneCubic;
use crate::{special, Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;

/// Which family a volume profile belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    Euclidean,
    Heisenberg,
    Custom,
}

/// A space's ball-volume law V(r) = μ(B(x, r)) and its inverse r(τ).
///
/// Euclidean and Heisenberg profiles are exactly homogeneous:
/// V(r) = |B₁| · r^Q with Q the (homogeneous) dimension. Custom profiles
/// interpolate a strictly increasing (radius, measure) table with a
/// monotone piecewise cubic, so the law stays strictly increasing.
#[derive(Debug, Clone, Serialize)]
#[serde(into = "ProfileRepr")]
pub struct VolumeProfile {
    kind: ProfileKind,
    n: u32,
    big_q: u32,
    unit_ball_volume: f64,
    table: Option<MonotoneCubic>,
    points: Option<Vec<(f64, f64)>>,
}

/// Serialized form: homogeneous profiles by (kind, n); custom ones by table.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ProfileRepr {
    kind: ProfileKind,
    n: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    points: Option<Vec<(f64, f64)>>,
}

impl From<VolumeProfile> for ProfileRepr {
    fn from(p: VolumeProfile) -> Self {
        ProfileRepr {
            kind: p.kind,
            n: p.n,
            points: p.points,
        }
    }
}

impl TryFrom<ProfileRepr> for VolumeProfile {
    type Error = Error;
    fn try_from(r: ProfileRepr) -> Result<Self> {
        match r.kind {
            ProfileKind::Euclidean => Ok(VolumeProfile::euclidean(r.n)),
            ProfileKind::Heisenberg => Ok(VolumeProfile::heisenberg(r.n)),
            ProfileKind::Custom => {
                let pts = r
                    .points
                    .ok_or_else(|| Error::Parse("custom profile needs points".into()))?;
                VolumeProfile::custom(pts)
            }
        }
    }
}

impl<'de> Deserialize<'de> for VolumeProfile {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = ProfileRepr::deserialize(d)?;
        VolumeProfile::try_from(repr).map_err(serde::de::Error::custom)
    }
}

impl VolumeProfile {
    /// ℝⁿ with Lebesgue measure; V(r) = |B₁| rⁿ.
    pub fn euclidean(n: u32) -> Self {
        assert!(n >= 1);
        VolumeProfile {
            kind: ProfileKind::Euclidean,
            n,
            big_q: n,
            unit_ball_volume: special::euclidean_ball_volume(n),
            table: None,
            points: None,
        }
    }

    /// ℍⁿ with Haar measure and the Korányi gauge; V(r) = |B₁| r^Q, Q = 2n+2.
    pub fn heisenberg(n: u32) -> Self {
        assert!(n >= 1);
        VolumeProfile {
            kind: ProfileKind::Heisenberg,
            n,
            big_q: 2 * n + 2,
            unit_ball_volume: special::heisenberg_ball_volume(n),
            table: None,
            points: None,
        }
    }

    /// A user-tabulated volume law. Rows must be strictly increasing in
    /// both columns; a (0, 0) anchor is prepended if absent so V(0) = 0.
    pub fn custom(mut points: Vec<(f64, f64)>) -> Result<Self> {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.first().map(|p| p.0 > 0.0).unwrap_or(false) {
            points.insert(0, (0.0, 0.0));
        }
        let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
        let table = MonotoneCubic::new(xs, ys)?;
        let unit_ball_volume = if table.x_min() <= 1.0 && table.x_max() >= 1.0 {
            table.eval(1.0)?
        } else {
            f64::NAN
        };
        Ok(VolumeProfile {
            kind: ProfileKind::Custom,
            n: 0,
            big_q: 0,
            unit_ball_volume,
            table: Some(table),
            points: Some(points),
        })
    }

    /// Load a custom profile from a two-column CSV (radius, measure) with
    /// a `radius,measure` header row.
    pub fn custom_from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
        let mut points = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            if rec.len() < 2 {
                return Err(Error::Parse("profile CSV rows need two columns".into()));
            }
            let r: f64 = rec[0]
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad radius {:?}", &rec[0])))?;
            let v: f64 = rec[1]
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad measure {:?}", &rec[1])))?;
            points.push((r, v));
        }
        VolumeProfile::custom(points)
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    /// Topological dimension n (0 for custom profiles).
    pub fn dimension(&self) -> u32 {
        self.n
    }

    /// Homogeneous dimension Q: n for Euclidean, 2n+2 for Heisenberg.
    pub fn homogeneous_dimension(&self) -> u32 {
        self.big_q
    }

    pub fn unit_ball_volume(&self) -> f64 {
        self.unit_ball_volume
    }

    pub fn is_homogeneous(&self) -> bool {
        self.table.is_none()
    }

    /// Short display name, used in CSV headers.
    pub fn name(&self) -> String {
        match self.kind {
            ProfileKind::Euclidean => format!("euclidean({})", self.n),
            ProfileKind::Heisenberg => format!("heisenberg({})", self.n),
            ProfileKind::Custom => "custom".to_string(),
        }
    }

    /// Build a profile from a display name produced by [`Self::name`].
    pub fn from_name(name: &str) -> Result<Self> {
        let parse_n = |s: &str, head: &str| -> Result<u32> {
            s.strip_prefix(head)
                .and_then(|t| t.strip_suffix(')'))
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse(format!("unrecognized profile name {name:?}")))
        };
        if name.starts_with("euclidean(") {
            Ok(VolumeProfile::euclidean(parse_n(name, "euclidean(")?))
        } else if name.starts_with("heisenberg(") {
            Ok(VolumeProfile::heisenberg(parse_n(name, "heisenberg(")?))
        } else {
            Err(Error::Parse(format!(
                "profile {name:?} is not reconstructible from its name"
            )))
        }
    }

    /// Ball volume V(r). Strictly increasing, V(0) = 0.
    pub fn volume(&self, r: f64) -> Result<f64> {
        if r < 0.0 || !r.is_finite() {
            return Err(Error::domain(format!("radius must be >= 0, got {r}")));
        }
        match &self.table {
            None => Ok(self.unit_ball_volume * r.powi(self.big_q as i32)),
            Some(t) => {
                if r > t.x_max() {
                    Err(Error::range(format!(
                        "radius {r} beyond tabulated range (max {})",
                        t.x_max()
                    )))
                } else {
                    t.eval(r)
                }
            }
        }
    }

    /// Smallest radius with V(r) = τ.
    pub fn inverse_radius(&self, tau: f64) -> Result<f64> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::domain(format!("measure must be > 0, got {tau}")));
        }
        match &self.table {
            None => Ok((tau / self.unit_ball_volume).powf(1.0 / self.big_q as f64)),
            Some(t) => {
                if tau > t.y_max() {
                    Err(Error::range(format!(
                        "measure {tau} beyond attainable range (max {})",
                        t.y_max()
                    )))
                } else {
                    t.inverse(tau)
                }
            }
        }
    }

    /// Measure of the annulus {r1 < d ≤ r2}.
    pub fn annulus_measure(&self, r1: f64, r2: f64) -> Result<f64> {
        Ok(self.volume(r2)? - self.volume(r1)?)
    }

    pub fn into_arc(self) -> Arc<VolumeProfile> {
        Arc::new(self)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(format!("csv: {e}"))
}
