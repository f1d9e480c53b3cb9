//! Lorentz-model hyperbolic geometry.
//!
//! Points live on the upper sheet of the hyperboloid
//!
//! ```text
//! H^n_K = { x in R^{n+1} : <x, x>_L = -1/K, x_0 > 0 },   K > 0
//! ```
//!
//! where `<x, y>_L = -x_0 y_0 + sum_{i>=1} x_i y_i` is the Lorentzian inner
//! product. The geodesic distance between two points is
//! `d(x, z) = arccosh(-K <x, z>_L) / sqrt(K)`; for the origin
//! `c_0 = (1/sqrt(K), 0, ..., 0)` this reduces to
//! `d(x, c_0) = arccosh(sqrt(K) x_0) / sqrt(K)`.
//!
//! Tangent vectors at the origin have time coordinate exactly `0`, so their
//! Lorentz norm coincides with the Euclidean norm of the spatial part. The
//! exponential map at the origin is a radial isometry:
//! `d(exp_0(v), c_0) = ||v||`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Constructed points satisfy `|<x,x>_L + 1/K| <= MANIFOLD_TOL_STRICT`.
pub const MANIFOLD_TOL_STRICT: f64 = 1e-9;
/// Ingested points (e.g. from embedding files) may be off-manifold by this much.
pub const MANIFOLD_TOL_INGEST: f64 = 1e-6;
/// `arccosh` arguments below `1 - ARCCOSH_SLACK` are a manifold violation;
/// arguments in `[1 - ARCCOSH_SLACK, 1)` are clamped to `1`.
pub const ARCCOSH_SLACK: f64 = 1e-6;
/// Tangent vectors shorter than this map to the origin exactly.
pub const EXP_ZERO_TOL: f64 = 1e-12;
/// Inner products over more than this many coordinates use compensated summation.
const COMPENSATED_SUM_THRESHOLD: usize = 4096;

/// Errors produced by geometry operations.
#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("ambient vectors need at least 2 coordinates, got {0}")]
    AmbientTooSmall(usize),
    #[error("curvature must be positive and finite, got {0}")]
    InvalidCurvature(f64),
    #[error("spatial dimension must be at least 1")]
    InvalidDimension,
    #[error("point is off the hyperboloid: residual {residual:.3e} exceeds {tol:.1e}")]
    OffManifold { residual: f64, tol: f64 },
    #[error("point is on the lower sheet or degenerate: time coordinate {0}")]
    NonPositiveTime(f64),
    #[error("arccosh argument {0} is below the clamping window; inputs are off-manifold")]
    ArccoshDomain(f64),
    #[error("non-finite coordinate encountered")]
    NonFinite,
    #[error("tangent vector has nonzero time coordinate {0}")]
    NonzeroTimeCoordinate(f64),
}

/// Curvature magnitude `K > 0` plus the spatial dimension `n` of the model.
///
/// The ambient representation has `n + 1` coordinates (time first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureParams {
    k: f64,
    dim: usize,
}

impl CurvatureParams {
    /// Validates `k > 0` (finite) and `dim >= 1`.
    pub fn new(k: f64, dim: usize) -> Result<Self, GeometryError> {
        if !(k.is_finite() && k > 0.0) {
            return Err(GeometryError::InvalidCurvature(k));
        }
        if dim == 0 {
            return Err(GeometryError::InvalidDimension);
        }
        Ok(Self { k, dim })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Spatial dimension `n`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Ambient dimension `n + 1`.
    pub fn ambient_dim(&self) -> usize {
        self.dim + 1
    }

    /// The origin `c_0 = (1/sqrt(K), 0, ..., 0)`.
    pub fn origin(&self) -> HyperbolicPoint {
        let mut coords = vec![0.0; self.ambient_dim()];
        coords[0] = 1.0 / self.k.sqrt();
        HyperbolicPoint { coords }
    }
}

impl Default for CurvatureParams {
    /// `K = 1`, `n = 16`.
    fn default() -> Self {
        Self { k: 1.0, dim: 16 }
    }
}

/// A point on the upper hyperboloid sheet, stored in ambient coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicPoint {
    coords: Vec<f64>,
}

impl HyperbolicPoint {
    /// Builds a point from ambient coordinates, validating the manifold
    /// constraint to within `tol` and `x_0 > 0`.
    pub fn from_coords(
        coords: Vec<f64>,
        c: &CurvatureParams,
        tol: f64,
    ) -> Result<Self, GeometryError> {
        if coords.len() != c.ambient_dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: c.ambient_dim(),
                actual: coords.len(),
            });
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if coords[0] <= 0.0 {
            return Err(GeometryError::NonPositiveTime(coords[0]));
        }
        let residual = (lorentz_inner(&coords, &coords)? + 1.0 / c.k()).abs();
        if residual > tol {
            return Err(GeometryError::OffManifold { residual, tol });
        }
        Ok(Self { coords })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Time coordinate `x_0`.
    pub fn time(&self) -> f64 {
        self.coords[0]
    }

    /// Spatial coordinates `x_1 ... x_n`.
    pub fn spatial(&self) -> &[f64] {
        &self.coords[1..]
    }

    /// Signed manifold residual `<x,x>_L + 1/K`.
    pub fn manifold_residual(&self, c: &CurvatureParams) -> f64 {
        lorentz_inner(&self.coords, &self.coords).expect("same length") + 1.0 / c.k()
    }
}

/// A tangent vector at the origin; the time coordinate is identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    coords: Vec<f64>,
}

impl TangentVector {
    /// Builds a tangent vector from its spatial part (time coordinate zeroed).
    pub fn from_spatial(spatial: &[f64]) -> Result<Self, GeometryError> {
        if spatial.is_empty() {
            return Err(GeometryError::InvalidDimension);
        }
        if spatial.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let mut coords = Vec::with_capacity(spatial.len() + 1);
        coords.push(0.0);
        coords.extend_from_slice(spatial);
        Ok(Self { coords })
    }

    /// Builds a tangent vector from ambient coordinates; the time coordinate
    /// must be exactly zero.
    pub fn from_coords(coords: Vec<f64>) -> Result<Self, GeometryError> {
        if coords.len() < 2 {
            return Err(GeometryError::AmbientTooSmall(coords.len()));
        }
        if coords[0] != 0.0 {
            return Err(GeometryError::NonzeroTimeCoordinate(coords[0]));
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        Ok(Self { coords })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn spatial(&self) -> &[f64] {
        &self.coords[1..]
    }

    /// Euclidean norm of the spatial part. For vectors tangent at the origin
    /// this equals the Lorentz norm.
    pub fn norm(&self) -> f64 {
        euclidean_norm(self.spatial())
    }
}

/// Lorentzian inner product `-x_0 y_0 + sum_{i>=1} x_i y_i`.
///
/// Both slices must have the same length of at least 2. Accumulation switches
/// to Neumaier-compensated summation for long vectors so ingested
/// high-dimensional embeddings do not lose precision.
pub fn lorentz_inner(x: &[f64], y: &[f64]) -> Result<f64, GeometryError> {
    if x.len() != y.len() {
        return Err(GeometryError::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(GeometryError::AmbientTooSmall(x.len()));
    }
    let spatial = if x.len() > COMPENSATED_SUM_THRESHOLD {
        compensated_dot(&x[1..], &y[1..])
    } else {
        x[1..].iter().zip(&y[1..]).map(|(a, b)| a * b).sum()
    };
    Ok(spatial - x[0] * y[0])
}

/// Geodesic distance `arccosh(-K <x, z>_L) / sqrt(K)`.
///
/// Arguments marginally below 1 (within [`ARCCOSH_SLACK`]) are clamped to 1;
/// anything lower is reported as a manifold violation rather than a NaN.
pub fn geodesic_distance(
    x: &HyperbolicPoint,
    z: &HyperbolicPoint,
    c: &CurvatureParams,
) -> Result<f64, GeometryError> {
    let arg = -c.k() * lorentz_inner(x.coords(), z.coords())?;
    Ok(checked_arccosh(arg)? / c.k().sqrt())
}

/// Distance to the origin, `arccosh(sqrt(K) x_0) / sqrt(K)`.
pub fn distance_to_origin(x: &HyperbolicPoint, c: &CurvatureParams) -> Result<f64, GeometryError> {
    let arg = c.k().sqrt() * x.time();
    Ok(checked_arccosh(arg)? / c.k().sqrt())
}

/// Exponential map at the origin:
///
/// ```text
/// exp_0(v) = cosh(sqrt(K) ||v||) c_0 + sinh(sqrt(K) ||v||) v / (sqrt(K) ||v||)
/// ```
///
/// Vectors with `||v|| < EXP_ZERO_TOL` map to the origin exactly.
pub fn exp_map_origin(v: &TangentVector, c: &CurvatureParams) -> Result<HyperbolicPoint, GeometryError> {
    if v.spatial().len() != c.dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: c.dim(),
            actual: v.spatial().len(),
        });
    }
    let r = v.norm();
    if !r.is_finite() {
        return Err(GeometryError::NonFinite);
    }
    if r < EXP_ZERO_TOL {
        return Ok(c.origin());
    }
    let sk = c.k().sqrt();
    let s = sk * r;
    let mut coords = Vec::with_capacity(c.ambient_dim());
    coords.push(s.cosh() / sk);
    let scale = s.sinh() / (sk * r);
    coords.extend(v.spatial().iter().map(|vi| scale * vi));
    Ok(HyperbolicPoint { coords })
}

/// Logarithmic map at the origin; inverse of [`exp_map_origin`] on the sheet.
///
/// The result has norm equal to `distance_to_origin(x)` and points along the
/// spatial part of `x`. The origin itself maps to the zero vector.
pub fn log_map_origin(x: &HyperbolicPoint, c: &CurvatureParams) -> Result<TangentVector, GeometryError> {
    if x.coords().len() != c.ambient_dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: c.ambient_dim(),
            actual: x.coords().len(),
        });
    }
    let d = distance_to_origin(x, c)?;
    let spatial_norm = euclidean_norm(x.spatial());
    let mut coords = vec![0.0; c.ambient_dim()];
    if d > 0.0 && spatial_norm > 0.0 {
        let scale = d / spatial_norm;
        for (out, xi) in coords[1..].iter_mut().zip(x.spatial()) {
            *out = scale * xi;
        }
    }
    TangentVector::from_coords(coords)
}

/// Lifts a spatial vector onto the sheet: `u -> (sqrt(1/K + ||u||^2), u)`.
pub fn lift_to_hyperboloid(u: &[f64], c: &CurvatureParams) -> Result<HyperbolicPoint, GeometryError> {
    if u.len() != c.dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: c.dim(),
            actual: u.len(),
        });
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    let norm_sq: f64 = u.iter().map(|v| v * v).sum();
    let mut coords = Vec::with_capacity(c.ambient_dim());
    coords.push((1.0 / c.k() + norm_sq).sqrt());
    coords.extend_from_slice(u);
    Ok(HyperbolicPoint { coords })
}

/// Cosine similarity of ambient coordinate vectors.
pub fn ambient_cosine(x: &HyperbolicPoint, z: &HyperbolicPoint) -> Result<f64, GeometryError> {
    if x.coords().len() != z.coords().len() {
        return Err(GeometryError::DimensionMismatch {
            expected: x.coords().len(),
            actual: z.coords().len(),
        });
    }
    let dot: f64 = x.coords().iter().zip(z.coords()).map(|(a, b)| a * b).sum();
    let nx = euclidean_norm(x.coords());
    let nz = euclidean_norm(z.coords());
    // Points on the sheet have x_0 >= 1/sqrt(K) > 0, so the norms never vanish.
    Ok(dot / (nx * nz))
}

/// Cosine similarity of log-mapped (tangent-space) representations.
/// Either point at the origin makes the tangent vector zero; the similarity
/// is undefined there and reported as an error.
pub fn tangent_cosine(
    x: &HyperbolicPoint,
    z: &HyperbolicPoint,
    c: &CurvatureParams,
) -> Result<f64, GeometryError> {
    let vx = log_map_origin(x, c)?;
    let vz = log_map_origin(z, c)?;
    let nx = vx.norm();
    let nz = vz.norm();
    if nx < EXP_ZERO_TOL || nz < EXP_ZERO_TOL {
        return Err(GeometryError::ArccoshDomain(f64::NAN));
    }
    let dot: f64 = vx.spatial().iter().zip(vz.spatial()).map(|(a, b)| a * b).sum();
    Ok(dot / (nx * nz))
}

/// `arccosh` with the documented clamping window.
fn checked_arccosh(arg: f64) -> Result<f64, GeometryError> {
    if !arg.is_finite() {
        return Err(GeometryError::NonFinite);
    }
    if arg < 1.0 - ARCCOSH_SLACK {
        return Err(GeometryError::ArccoshDomain(arg));
    }
    Ok(arg.max(1.0).acosh())
}

pub(crate) fn euclidean_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Neumaier-compensated dot product for long vectors.
fn compensated_dot(x: &[f64], y: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for (a, b) in x.iter().zip(y) {
        let term = a * b;
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
