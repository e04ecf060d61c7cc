//! Spherical geometry primitives: homogenization of Euclidean inequality
//! systems onto the unit sphere, violation, touching spheres of point sets,
//! (nearly) positively spanning tests, vertex diameter, cap-diameter bounds,
//! and the volume-distorting equator stretch.

use thiserror::Error;

use crate::numkit::{self, axpy, dot, norm, NumError, OrthoFactorization};
use crate::problems::EuclideanInstance;

/// Tolerance for the unit-norm invariant of [`UnitVector`].
pub const UNIT_TOL: f64 = 1e-10;

/// Threshold below which a deficiency or barycentric coefficient counts as
/// zero.
pub const TAU_ZERO: f64 = 1e-10;

/// Pole guard for dehomogenization: last coordinates at or below this are
/// treated as points at infinity.
pub const TAU_POLE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SphereError {
    #[error("vector is not unit (norm {0})")]
    NotUnit(f64),
    #[error("zero vector cannot be normalized")]
    ZeroVector,
    #[error("constraint {0} has zero normal and zero offset")]
    ZeroConstraint(usize),
    #[error("point at infinity: last coordinate {0} below pole guard")]
    AtInfinity(f64),
    #[error("points are affinely dependent")]
    AffinelyDependent,
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("instance has no constraints")]
    Empty,
    #[error(transparent)]
    Num(#[from] NumError),
}

/// A point of the unit sphere, kept normalized within [`UNIT_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector {
    coords: Vec<f64>,
}

impl UnitVector {
    pub fn new(coords: Vec<f64>) -> Result<Self, SphereError> {
        let n = norm(&coords);
        if !n.is_finite() || (n - 1.0).abs() > UNIT_TOL {
            return Err(SphereError::NotUnit(n));
        }
        Ok(UnitVector { coords })
    }

    /// Normalizes an arbitrary nonzero vector onto the sphere.
    pub fn normalized(coords: Vec<f64>) -> Result<Self, SphereError> {
        let n = norm(&coords);
        if !n.is_finite() || n <= 1e-300 {
            return Err(SphereError::ZeroVector);
        }
        Ok(UnitVector {
            coords: coords.iter().map(|x| x / n).collect(),
        })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn basis(dim: usize, axis: usize) -> Self {
        let mut c = vec![0.0; dim];
        c[axis] = 1.0;
        UnitVector { coords: c }
    }
}

/// Record of how a spherical instance was obtained from a Euclidean one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OriginMeta {
    /// Dimension of the original Euclidean problem.
    pub euclidean_dim: usize,
    /// When set, the last normal is the synthetic positivity guard
    /// `e_{d+1}^T x >= 0` that pins solutions to the upper hemisphere.
    pub side_constraint: bool,
}

/// Feasibility problem on the unit sphere: find `x` with `a_i^T x >= 0` for
/// all constraint normals `a_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalInstance {
    ambient: usize,
    normals: Vec<UnitVector>,
    origin_meta: Option<OriginMeta>,
}

impl SphericalInstance {
    pub fn new(normals: Vec<UnitVector>) -> Result<Self, SphereError> {
        Self::with_meta(normals, None)
    }

    pub fn with_meta(
        normals: Vec<UnitVector>,
        origin_meta: Option<OriginMeta>,
    ) -> Result<Self, SphereError> {
        let ambient = match normals.first() {
            Some(v) => v.dim(),
            None => return Err(SphereError::Empty),
        };
        for v in &normals {
            if v.dim() != ambient {
                return Err(SphereError::DimensionMismatch {
                    expected: ambient,
                    got: v.dim(),
                });
            }
        }
        Ok(SphericalInstance {
            ambient,
            normals,
            origin_meta,
        })
    }

    /// Convenience constructor normalizing raw direction vectors.
    pub fn from_raw(raw: Vec<Vec<f64>>) -> Result<Self, SphereError> {
        let normals = raw
            .into_iter()
            .map(UnitVector::normalized)
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(normals)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    /// Dimension of the sphere the problem lives on (`ambient - 1`).
    pub fn sphere_dim(&self) -> usize {
        self.ambient - 1
    }

    pub fn num_constraints(&self) -> usize {
        self.normals.len()
    }

    pub fn normal(&self, i: usize) -> &UnitVector {
        &self.normals[i]
    }

    pub fn normals(&self) -> &[UnitVector] {
        &self.normals
    }

    pub fn origin_meta(&self) -> Option<&OriginMeta> {
        self.origin_meta.as_ref()
    }

    /// Index of the synthetic positivity-guard normal, if present.
    pub fn side_constraint_index(&self) -> Option<usize> {
        match &self.origin_meta {
            Some(m) if m.side_constraint => Some(self.normals.len() - 1),
            _ => None,
        }
    }

    /// Violation `max(0, max_i -a_i^T x)` together with a most violated
    /// constraint index (lowest index on ties). The value is zero iff `x`
    /// is feasible; the index is the argmax of `-a_i^T x` either way.
    pub fn violation(&self, x: &[f64]) -> (f64, usize) {
        let mut best = f64::NEG_INFINITY;
        let mut idx = 0;
        for (i, a) in self.normals.iter().enumerate() {
            let v = -dot(a.coords(), x);
            if v > best {
                best = v;
                idx = i;
            }
        }
        (best.max(0.0), idx)
    }

    /// First constraint violated by more than `tol`, scanning in index
    /// order.
    pub fn first_violated(&self, x: &[f64], tol: f64) -> Option<(f64, usize)> {
        for (i, a) in self.normals.iter().enumerate() {
            let v = -dot(a.coords(), x);
            if v > tol {
                return Some((v, i));
            }
        }
        None
    }
}

/// Lifts a Euclidean inequality system onto the sphere: constraint
/// `a^T x >= b` becomes the half-sphere with normal `(a, -b)` normalized,
/// plus a final positivity guard `e_{d+1}^T x >= 0` so that sphere
/// solutions correspond to Euclidean solutions (or to recession directions
/// on the equator).
pub fn homogenize(inst: &EuclideanInstance) -> Result<SphericalInstance, SphereError> {
    let d = inst.dim();
    let mut normals = Vec::with_capacity(inst.len() + 1);
    for i in 0..inst.len() {
        let mut v = inst.normal(i).to_vec();
        v.push(-inst.offset(i));
        if norm(&v) <= 1e-300 {
            return Err(SphereError::ZeroConstraint(i));
        }
        normals.push(UnitVector::normalized(v)?);
    }
    normals.push(UnitVector::basis(d + 1, d));
    SphericalInstance::with_meta(
        normals,
        Some(OriginMeta {
            euclidean_dim: d,
            side_constraint: true,
        }),
    )
}

/// Maps a point of the upper hemisphere back to Euclidean coordinates by
/// dividing out the last coordinate.
pub fn dehomogenize(x: &UnitVector) -> Result<Vec<f64>, SphereError> {
    let c = x.coords();
    let last = c[c.len() - 1];
    if last <= TAU_POLE {
        return Err(SphereError::AtInfinity(last));
    }
    Ok(c[..c.len() - 1].iter().map(|v| v / last).collect())
}

/// The point of the sphere a Euclidean point lifts to.
pub fn homogenize_point(x: &[f64]) -> UnitVector {
    let mut v = x.to_vec();
    v.push(1.0);
    UnitVector::normalized(v).expect("lift of a finite point is nonzero")
}

/// The unique sphere centered in the affine hull of a point set and passing
/// through all its points. The center is the orthogonal projection of the
/// origin onto the affine hull; its distance to the origin is the
/// deficiency.
#[derive(Debug, Clone, PartialEq)]
pub struct TouchingSphere {
    pub center: Vec<f64>,
    pub radius: f64,
    /// Affine coefficients of the center over the generating set (sum 1).
    pub barycentric: Vec<f64>,
    /// True iff every barycentric coefficient is `>= -TAU_ZERO`.
    pub center_in_hull: bool,
    pub deficiency: f64,
}

/// Touching sphere of a set of affinely independent unit vectors.
///
/// Works through the translated basis `p_i - p_0`, so sets that are
/// linearly dependent but affinely independent (origin in the affine hull)
/// are handled.
pub fn touching_sphere(points: &[UnitVector]) -> Result<TouchingSphere, SphereError> {
    let k = points.len();
    if k == 0 {
        return Err(SphereError::Empty);
    }
    let ambient = points[0].dim();
    for p in points {
        if p.dim() != ambient {
            return Err(SphereError::DimensionMismatch {
                expected: ambient,
                got: p.dim(),
            });
        }
    }
    let p0 = points[0].coords();
    let mut fact = OrthoFactorization::empty(ambient);
    for p in &points[1..] {
        let q = numkit::sub(p.coords(), p0);
        fact = fact
            .append_column(&q)
            .map_err(|_| SphereError::AffinelyDependent)?;
    }
    let b: Vec<f64> = p0.iter().map(|x| -x).collect();
    let (beta, resid) = fact.least_squares(&b)?;
    // C = p0 + proj(-p0) = -(projection residual).
    let center: Vec<f64> = resid.iter().map(|x| -x).collect();
    let mut barycentric = Vec::with_capacity(k);
    barycentric.push(1.0 - beta.iter().sum::<f64>());
    barycentric.extend_from_slice(&beta);
    let deficiency = norm(&center);
    let radius = (1.0 - deficiency * deficiency).max(0.0).sqrt();
    let center_in_hull = barycentric.iter().all(|&m| m >= -TAU_ZERO);
    Ok(TouchingSphere {
        center,
        radius,
        barycentric,
        center_in_hull,
        deficiency,
    })
}

/// Touching sphere from an existing factorization of linearly independent
/// unit columns: solve `R^T z = 1`, `R w = z`, normalize `w` to affine
/// coefficients.
pub(crate) fn touching_sphere_from_factorization(
    f: &OrthoFactorization,
) -> Result<TouchingSphere, SphereError> {
    let k = f.num_cols();
    if k == 0 {
        return Err(SphereError::Empty);
    }
    let ones = vec![1.0; k];
    let z = f.solve_upper_transpose(&ones)?;
    let w = f.solve_upper(&z)?;
    let sum_w: f64 = w.iter().sum();
    if !(sum_w > 0.0) || !sum_w.is_finite() {
        return Err(SphereError::AffinelyDependent);
    }
    let barycentric: Vec<f64> = w.iter().map(|wi| wi / sum_w).collect();
    let mut center = vec![0.0; f.ambient_dim()];
    for (j, col) in f.columns().iter().enumerate() {
        axpy(barycentric[j], col, &mut center);
    }
    let deficiency = norm(&center);
    let radius = (1.0 - deficiency * deficiency).max(0.0).sqrt();
    let center_in_hull = barycentric.iter().all(|&m| m >= -TAU_ZERO);
    Ok(TouchingSphere {
        center,
        radius,
        barycentric,
        center_in_hull,
        deficiency,
    })
}

/// True iff the origin lies in the convex hull of the (affinely
/// independent) points.
pub fn is_positively_spanning(points: &[UnitVector]) -> Result<bool, SphereError> {
    let ts = touching_sphere(points)?;
    Ok(ts.center_in_hull && ts.deficiency <= TAU_ZERO)
}

/// True iff the projection of the origin onto the affine hull lies in the
/// convex hull; the second component is the deficiency (distance of that
/// projection to the origin).
pub fn is_nearly_positively_spanning(points: &[UnitVector]) -> Result<(bool, f64), SphereError> {
    let ts = touching_sphere(points)?;
    Ok((ts.center_in_hull, ts.deficiency))
}

/// Spherical distance between two unit vectors, with the dot product
/// clamped into `[-1, 1]` to avoid NaN at the poles.
pub fn spherical_angle(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b).clamp(-1.0, 1.0).acos()
}

/// Largest spherical distance from a vertex to the opposite-facet point on
/// the circle through the vertex and the circumcenter, together with the
/// witness vertex (lowest index on ties).
///
/// The opposite-facet point is computed from the barycentric coefficients:
/// dropping vertex `i` leaves `C - mu_i a_i`, renormalized.
pub fn vertex_diameter(points: &[UnitVector]) -> Result<(f64, usize), SphereError> {
    if points.len() < 2 {
        return Err(SphereError::PreconditionViolated(
            "vertex diameter needs at least two points".into(),
        ));
    }
    let ts = touching_sphere(points)?;
    if !ts.center_in_hull {
        return Err(SphereError::PreconditionViolated(
            "circumcenter outside the convex hull".into(),
        ));
    }
    if ts.barycentric.iter().any(|&m| m <= TAU_ZERO) {
        return Err(SphereError::PreconditionViolated(
            "zero barycentric coefficient".into(),
        ));
    }
    vertex_diameter_of(points, &ts).ok_or(SphereError::AffinelyDependent)
}

/// As [`vertex_diameter`] but for an already computed touching sphere and
/// without the positivity precondition; `None` only if an opposite-facet
/// point degenerates to zero.
pub(crate) fn vertex_diameter_of(
    points: &[UnitVector],
    ts: &TouchingSphere,
) -> Option<(f64, usize)> {
    let mut best = f64::NEG_INFINITY;
    let mut witness = 0;
    for (i, p) in points.iter().enumerate() {
        let mut opp = ts.center.clone();
        axpy(-ts.barycentric[i], p.coords(), &mut opp);
        let n = norm(&opp);
        if n <= 1e-300 {
            return None;
        }
        let angle = (dot(p.coords(), &opp) / n).clamp(-1.0, 1.0).acos();
        if angle > best {
            best = angle;
            witness = i;
        }
    }
    Some((best, witness))
}

/// `cos D_v` of the regular simplex on `S^d` with circumradius `R'` given
/// by `cos R'`.
pub fn regular_vertex_diameter(cos_r: f64, d: usize) -> f64 {
    let dd = d as f64;
    let c2 = cos_r * cos_r;
    ((dd + 1.0) * c2 - 1.0) / (1.0 + (dd - 1.0) * (dd + 1.0) * c2).sqrt()
}

/// Bounds on the cosine of the spherical diameter of a set with spherical
/// circumradius `R'`: always `cos 2R' <= cos D`, with a regime- and
/// parity-dependent upper bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SantaloBounds {
    pub cos_lower: f64,
    pub cos_upper: f64,
}

pub fn santalo_bounds(cos_r: f64, d: usize) -> SantaloBounds {
    let dd = d as f64;
    let c2 = cos_r * cos_r;
    let cos_lower = 2.0 * c2 - 1.0;
    let cos_upper = if cos_r >= 1.0 / (dd + 1.0).sqrt() {
        ((dd + 1.0) * c2 - 1.0) / dd
    } else if d % 2 == 1 {
        ((dd + 1.0) * c2 - 1.0) / (1.0 + (dd + 1.0) * c2)
    } else {
        ((dd + 1.0) * c2 - 1.0)
            / ((1.0 + (dd + 1.0) * c2).sqrt()
                * (1.0 + (dd + 1.0) * (dd - 2.0) / (dd + 2.0) * c2).sqrt())
    };
    SantaloBounds {
        cos_lower,
        cos_upper,
    }
}

/// Half-zone width bound `sin phi <= (d+1) cos R'`, capped at 1.
pub fn zone_width_bound(cos_r: f64, d: usize) -> f64 {
    ((d as f64 + 1.0) * cos_r).min(1.0)
}

/// Deficiency threshold that triggers the equator stretch in the
/// polynomial variant: `sqrt(((4/3)^(2/(d+2)) - 1) / 3)`.
pub fn flatness_threshold(d: usize) -> f64 {
    (((4.0f64 / 3.0).powf(2.0 / (d as f64 + 2.0)) - 1.0) / 3.0).sqrt()
}

/// Stretches the sphere along `pole` by factor `alpha` and renormalizes:
/// the pole and its equator are fixed, and volume near the equator scales
/// by [`local_volume_factor`].
pub fn equator_stretch(x: &UnitVector, alpha: f64, pole: &UnitVector) -> UnitVector {
    debug_assert!(alpha > 0.0);
    let beta = dot(pole.coords(), x.coords());
    let mut y = x.coords().to_vec();
    axpy((alpha - 1.0) * beta, pole.coords(), &mut y);
    UnitVector::normalized(y).expect("stretch of a unit vector is nonzero")
}

/// Local volume change of [`equator_stretch`] at pole-coordinate `beta`:
/// `alpha / (1 + beta^2 (alpha^2 - 1))^((d+1)/2)`.
pub fn local_volume_factor(beta: f64, alpha: f64, d: usize) -> f64 {
    alpha / (1.0 + beta * beta * (alpha * alpha - 1.0)).powf((d as f64 + 1.0) / 2.0)
}
