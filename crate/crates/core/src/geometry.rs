//! Convex admissible regions for a DMU's observation and the distance from
//! an interior point to their boundary along a direction.
//!
//! Box, ellipsoid, and rhombus sets are axis-aligned around a center with
//! per-coordinate semi-axes `w`. A coordinate with `w_l = 0` is known
//! exactly ("inactive"): the set is flat along it, so any direction with a
//! non-zero component there has a zero-length chord.
//!
//! Unless disabled, the non-negative orthant bounds `x_l ≥ 0` are appended
//! to every chord computation.

use thiserror::Error;

/// Slack allowed by [`UncertaintySet::contains`].
pub const MEMBERSHIP_TOL: f64 = 1e-9;
/// Direction components below this magnitude do not constrain a chord.
const DENOM_TOL: f64 = 1e-12;
/// Largest number of active rhombus coordinates (2^20 facets).
pub const MAX_RHOMBUS_DIM: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid uncertainty set: {0}")]
    Invalid(String),
    #[error("expected a {expected}-dimensional vector, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point {0:?} lies outside the set")]
    Outside(Vec<f64>),
    #[error("the set is unbounded along the chosen direction")]
    Unbounded,
    #[error("ellipsoid chord has negative discriminant {0}")]
    Discriminant(f64),
    #[error("rhombus with {0} active coordinates exceeds the supported {MAX_RHOMBUS_DIM}")]
    UnsupportedDimension(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// A single known observation.
    Point,
    /// `|x_l − c_l| ≤ w_l`.
    Box,
    /// `Σ ((x_l − c_l)/w_l)² ≤ 1` over active coordinates.
    Ellipsoid,
    /// `Σ |x_l − c_l|/w_l ≤ 1` over active coordinates.
    Rhombus,
    /// `a_q · x ≤ b_q` for every row `q`.
    Polytope { a: Vec<Vec<f64>>, b: Vec<f64> },
    /// `(|Δx/wx|^o1 + |Δy/wy|^o1)^(o2/o1) + |Δu/wu|^o2 ≤ 1` in three dimensions.
    Superellipsoid { o1: f64, o2: f64 },
}

impl Shape {
    pub fn name(&self) -> &'static str {
        match self {
            Shape::Point => "point",
            Shape::Box => "box",
            Shape::Ellipsoid => "ellipsoid",
            Shape::Rhombus => "rhombus",
            Shape::Polytope { .. } => "polytope",
            Shape::Superellipsoid { .. } => "superellipsoid",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintySet {
    shape: Shape,
    center: Vec<f64>,
    semi_axes: Vec<f64>,
    clip_orthant: bool,
}

impl UncertaintySet {
    pub fn point(center: Vec<f64>) -> Result<Self, GeometryError> {
        let z = center.len();
        Self::build(Shape::Point, center, vec![0.0; z])
    }

    pub fn hyper_box(center: Vec<f64>, half_widths: Vec<f64>) -> Result<Self, GeometryError> {
        Self::build(Shape::Box, center, half_widths)
    }

    /// Box `[lower, upper]` centered at the midpoint.
    pub fn from_bounds(lower: &[f64], upper: &[f64]) -> Result<Self, GeometryError> {
        if lower.len() != upper.len() {
            return Err(GeometryError::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.iter().zip(upper).any(|(l, u)| l > u) {
            return Err(GeometryError::Invalid("lower bound above upper bound".into()));
        }
        let center = lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)).collect();
        let w = lower.iter().zip(upper).map(|(l, u)| 0.5 * (u - l)).collect();
        Self::hyper_box(center, w)
    }

    pub fn ellipsoid(center: Vec<f64>, semi_axes: Vec<f64>) -> Result<Self, GeometryError> {
        Self::build(Shape::Ellipsoid, center, semi_axes)
    }

    pub fn rhombus(center: Vec<f64>, semi_axes: Vec<f64>) -> Result<Self, GeometryError> {
        let set = Self::build(Shape::Rhombus, center, semi_axes)?;
        let active = set.active_count();
        if active > MAX_RHOMBUS_DIM {
            return Err(GeometryError::UnsupportedDimension(active));
        }
        Ok(set)
    }

    /// `{x : a x ≤ b}` with `interior` as the starting point.
    pub fn polytope(
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        interior: Vec<f64>,
    ) -> Result<Self, GeometryError> {
        let z = interior.len();
        if a.len() != b.len() {
            return Err(GeometryError::Invalid(format!(
                "{} constraint rows but {} right-hand sides",
                a.len(),
                b.len()
            )));
        }
        for row in &a {
            if row.len() != z {
                return Err(GeometryError::DimensionMismatch {
                    expected: z,
                    got: row.len(),
                });
            }
        }
        Self::build(Shape::Polytope { a, b }, interior, vec![0.0; z])
    }

    /// Three-dimensional superellipsoid. Orders below 1 give non-convex
    /// sets and are rejected.
    pub fn superellipsoid(
        center: Vec<f64>,
        semi_axes: Vec<f64>,
        o1: f64,
        o2: f64,
    ) -> Result<Self, GeometryError> {
        if center.len() != 3 {
            return Err(GeometryError::Invalid(format!(
                "superellipsoids are three-dimensional, got {} coordinates",
                center.len()
            )));
        }
        if !(o1.is_finite() && o2.is_finite()) || o1 <= 0.0 || o2 <= 0.0 {
            return Err(GeometryError::Invalid(format!(
                "superellipsoid orders must be positive, got ({o1}, {o2})"
            )));
        }
        if o1 < 1.0 || o2 < 1.0 {
            return Err(GeometryError::Invalid(format!(
                "superellipsoid orders below 1 give a non-convex set, got ({o1}, {o2})"
            )));
        }
        if semi_axes.iter().any(|w| *w <= 0.0) {
            return Err(GeometryError::Invalid(
                "superellipsoid semi-axes must be strictly positive".into(),
            ));
        }
        Self::build(Shape::Superellipsoid { o1, o2 }, center, semi_axes)
    }

    fn build(shape: Shape, center: Vec<f64>, semi_axes: Vec<f64>) -> Result<Self, GeometryError> {
        if center.is_empty() {
            return Err(GeometryError::Invalid("empty center".into()));
        }
        if semi_axes.len() != center.len() {
            return Err(GeometryError::DimensionMismatch {
                expected: center.len(),
                got: semi_axes.len(),
            });
        }
        if center.iter().chain(&semi_axes).any(|v| !v.is_finite()) {
            return Err(GeometryError::Invalid("non-finite center or semi-axis".into()));
        }
        if semi_axes.iter().any(|w| *w < 0.0) {
            return Err(GeometryError::Invalid("negative semi-axis".into()));
        }
        let set = Self {
            shape,
            center,
            semi_axes,
            clip_orthant: true,
        };
        if !set.contains(&set.center) {
            return Err(GeometryError::Outside(set.center.clone()));
        }
        Ok(set)
    }

    /// Disables the `x ≥ 0` bounds (only meaningful for tests and for data
    /// that may legitimately be negative).
    pub fn without_orthant(mut self) -> Self {
        self.clip_orthant = false;
        self
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn semi_axes(&self) -> &[f64] {
        &self.semi_axes
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn clips_orthant(&self) -> bool {
        self.clip_orthant
    }

    /// True when the set is a single point.
    pub fn is_degenerate(&self) -> bool {
        match self.shape {
            Shape::Point => true,
            Shape::Box | Shape::Ellipsoid | Shape::Rhombus => {
                self.semi_axes.iter().all(|w| *w == 0.0)
            }
            Shape::Polytope { .. } | Shape::Superellipsoid { .. } => false,
        }
    }

    /// Coordinates the set can move along.
    pub fn active(&self) -> Vec<bool> {
        match self.shape {
            Shape::Polytope { .. } | Shape::Superellipsoid { .. } => vec![true; self.dim()],
            _ => self.semi_axes.iter().map(|w| *w > 0.0).collect(),
        }
    }

    fn active_count(&self) -> usize {
        self.active().iter().filter(|a| **a).count()
    }

    fn check_dim(&self, v: &[f64]) -> Result<(), GeometryError> {
        if v.len() != self.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(())
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        if p.len() != self.dim() || p.iter().any(|v| !v.is_finite()) {
            return false;
        }
        if self.clip_orthant && p.iter().any(|v| *v < -MEMBERSHIP_TOL) {
            return false;
        }
        let c = &self.center;
        let w = &self.semi_axes;
        // Inactive coordinates must match the center.
        let flat_ok = |l: usize| (p[l] - c[l]).abs() <= MEMBERSHIP_TOL * c[l].abs().max(1.0);
        match &self.shape {
            Shape::Point => (0..p.len()).all(flat_ok),
            Shape::Box => (0..p.len()).all(|l| {
                if w[l] == 0.0 {
                    flat_ok(l)
                } else {
                    (p[l] - c[l]).abs() <= w[l] + MEMBERSHIP_TOL
                }
            }),
            Shape::Ellipsoid | Shape::Rhombus => {
                let mut acc = 0.0;
                for l in 0..p.len() {
                    if w[l] == 0.0 {
                        if !flat_ok(l) {
                            return false;
                        }
                        continue;
                    }
                    let r = (p[l] - c[l]) / w[l];
                    acc += if self.shape == Shape::Ellipsoid {
                        r * r
                    } else {
                        r.abs()
                    };
                }
                acc <= 1.0 + MEMBERSHIP_TOL
            }
            Shape::Polytope { a, b } => a
                .iter()
                .zip(b)
                .all(|(row, bq)| dot(row, p) <= bq + MEMBERSHIP_TOL),
            Shape::Superellipsoid { o1, o2 } => {
                superellipsoid_level(p, c, w, *o1, *o2) <= 1.0 + MEMBERSHIP_TOL
            }
        }
    }

    /// Largest `λ ≥ 0` with `p + λ d` in the set.
    pub fn chord_length(&self, p: &[f64], d: &[f64]) -> Result<f64, GeometryError> {
        self.check_dim(p)?;
        self.check_dim(d)?;
        if !self.contains(p) {
            return Err(GeometryError::Outside(p.to_vec()));
        }
        let shape_len = match &self.shape {
            Shape::Point => return Ok(0.0),
            Shape::Box => box_chord(&self.center, &self.semi_axes, p, d),
            Shape::Ellipsoid => ellipsoid_chord(&self.center, &self.semi_axes, p, d)?,
            Shape::Rhombus => rhombus_chord(&self.center, &self.semi_axes, p, d)?,
            Shape::Polytope { a, b } => polytope_chord(a, b, p, d),
            Shape::Superellipsoid { o1, o2 } => superellipsoid_chord(self, *o1, *o2, p, d),
        };
        let len = if self.clip_orthant {
            shape_len.min(orthant_chord(p, d))
        } else {
            shape_len
        };
        if len.is_infinite() {
            return Err(GeometryError::Unbounded);
        }
        Ok(len)
    }

    /// Boundary point of a superellipsoid at longitude `psi ∈ [−π, π]` and
    /// latitude `phi ∈ [−π/2, π/2]`.
    pub fn superellipsoid_boundary_point(
        &self,
        psi: f64,
        phi: f64,
    ) -> Result<[f64; 3], GeometryError> {
        let Shape::Superellipsoid { o1, o2 } = self.shape else {
            return Err(GeometryError::Invalid(format!(
                "boundary parametrization needs a superellipsoid, got a {}",
                self.shape.name()
            )));
        };
        let c = &self.center;
        let w = &self.semi_axes;
        let e1 = 2.0 / o1;
        let e2 = 2.0 / o2;
        let lat = signed_pow(phi.cos(), e2);
        Ok([
            c[0] + w[0] * lat * signed_pow(psi.cos(), e1),
            c[1] + w[1] * lat * signed_pow(psi.sin(), e1),
            c[2] + w[2] * signed_pow(phi.sin(), e2),
        ])
    }

    /// Rows `(a, b)` of an explicit constraint system describing the same
    /// set as this box or rhombus (orthant bounds excluded). Inactive
    /// coordinates are pinned with a pair of opposite rows.
    pub fn explicit_constraints(&self) -> Result<(Vec<Vec<f64>>, Vec<f64>), GeometryError> {
        let z = self.dim();
        let c = &self.center;
        let w = &self.semi_axes;
        let unit = |l: usize, s: f64| {
            let mut row = vec![0.0; z];
            row[l] = s;
            row
        };
        let mut a = Vec::new();
        let mut b = Vec::new();
        match &self.shape {
            Shape::Box | Shape::Point => {
                for l in 0..z {
                    a.push(unit(l, 1.0));
                    b.push(c[l] + w[l]);
                    a.push(unit(l, -1.0));
                    b.push(-(c[l] - w[l]));
                }
            }
            Shape::Rhombus => {
                let act: Vec<usize> = (0..z).filter(|&l| w[l] > 0.0).collect();
                for l in (0..z).filter(|&l| w[l] == 0.0) {
                    a.push(unit(l, 1.0));
                    b.push(c[l]);
                    a.push(unit(l, -1.0));
                    b.push(-c[l]);
                }
                for mask in 0u64..(1u64 << act.len()) {
                    let mut row = vec![0.0; z];
                    let mut rhs = 1.0;
                    for (i, &l) in act.iter().enumerate() {
                        let s = if mask >> i & 1 == 1 { -1.0 } else { 1.0 };
                        row[l] = s / w[l];
                        rhs += s * c[l] / w[l];
                    }
                    a.push(row);
                    b.push(rhs);
                }
            }
            Shape::Polytope { a: pa, b: pb } => {
                a.clone_from(pa);
                b.clone_from(pb);
            }
            _ => {
                return Err(GeometryError::Invalid(format!(
                    "a {} has no finite linear description",
                    self.shape.name()
                )))
            }
        }
        Ok((a, b))
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// One-line description, e.g. `box center=5,5 semi_axes=3,2`.
impl std::fmt::Display for UncertaintySet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} center={}", self.shape.name(), join(&self.center))?;
        match &self.shape {
            Shape::Point => {}
            Shape::Box | Shape::Ellipsoid | Shape::Rhombus => {
                write!(f, " semi_axes={}", join(&self.semi_axes))?
            }
            Shape::Superellipsoid { o1, o2 } => {
                write!(f, " semi_axes={} orders={o1},{o2}", join(&self.semi_axes))?
            }
            Shape::Polytope { a, b } => {
                for (row, bq) in a.iter().zip(b) {
                    write!(f, " constraint={}:{bq}", join(row))?;
                }
            }
        }
        if !self.clip_orthant {
            f.write_str(" orthant=off")?;
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn signed_pow(v: f64, e: f64) -> f64 {
    v.signum() * v.abs().powf(e)
}

fn superellipsoid_level(p: &[f64], c: &[f64], w: &[f64], o1: f64, o2: f64) -> f64 {
    let r = |l: usize| ((p[l] - c[l]) / w[l]).abs();
    (r(0).powf(o1) + r(1).powf(o1)).powf(o2 / o1) + r(2).powf(o2)
}

/// Distance to the nearest face `a_q·x = b_q` ahead of `p`. Rows with
/// `a_q·d` at or below `1e-12` never bind.
pub fn polytope_chord(a: &[Vec<f64>], b: &[f64], p: &[f64], d: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for (row, bq) in a.iter().zip(b) {
        let ad = dot(row, d);
        if ad > DENOM_TOL {
            best = best.min(((bq - dot(row, p)) / ad).max(0.0));
        }
    }
    best
}

fn orthant_chord(p: &[f64], d: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for (pl, dl) in p.iter().zip(d) {
        if -dl > DENOM_TOL {
            best = best.min((pl / -dl).max(0.0));
        }
    }
    best
}

/// Returns zero when `d` leaves the flat of an inactive coordinate.
fn leaves_flat(w: &[f64], d: &[f64]) -> bool {
    w.iter().zip(d).any(|(wl, dl)| *wl == 0.0 && dl.abs() > DENOM_TOL)
}

pub fn box_chord(c: &[f64], w: &[f64], p: &[f64], d: &[f64]) -> f64 {
    if leaves_flat(w, d) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for l in 0..p.len() {
        if w[l] == 0.0 {
            continue;
        }
        if d[l] > DENOM_TOL {
            best = best.min(((c[l] + w[l] - p[l]) / d[l]).max(0.0));
        } else if d[l] < -DENOM_TOL {
            best = best.min(((c[l] - w[l] - p[l]) / d[l]).max(0.0));
        }
    }
    best
}

pub fn ellipsoid_chord(c: &[f64], w: &[f64], p: &[f64], d: &[f64]) -> Result<f64, GeometryError> {
    if leaves_flat(w, d) {
        return Ok(0.0);
    }
    let (mut qa, mut qb, mut qc) = (0.0, 0.0, -1.0);
    for l in 0..p.len() {
        if w[l] == 0.0 {
            continue;
        }
        let w2 = w[l] * w[l];
        let off = p[l] - c[l];
        qa += d[l] * d[l] / w2;
        qb += 2.0 * off * d[l] / w2;
        qc += off * off / w2;
    }
    if qa <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let mut disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        if disc < -1e-12 {
            return Err(GeometryError::Discriminant(disc));
        }
        disc = 0.0;
    }
    let sq = disc.sqrt();
    // Larger root of qa λ² + qb λ + qc, computed without cancellation.
    let root = if qb >= 0.0 {
        if qb + sq == 0.0 {
            0.0
        } else {
            -2.0 * qc / (qb + sq)
        }
    } else {
        (-qb + sq) / (2.0 * qa)
    };
    Ok(root.max(0.0))
}

pub fn rhombus_chord(c: &[f64], w: &[f64], p: &[f64], d: &[f64]) -> Result<f64, GeometryError> {
    if leaves_flat(w, d) {
        return Ok(0.0);
    }
    let act: Vec<usize> = (0..p.len()).filter(|&l| w[l] > 0.0).collect();
    if act.len() > MAX_RHOMBUS_DIM {
        return Err(GeometryError::UnsupportedDimension(act.len()));
    }
    let off: Vec<f64> = act.iter().map(|&l| (p[l] - c[l]) / w[l]).collect();
    let dir: Vec<f64> = act.iter().map(|&l| d[l] / w[l]).collect();
    let mut best = f64::INFINITY;
    for mask in 0u64..(1u64 << act.len()) {
        let (mut num, mut den) = (1.0, 0.0);
        for i in 0..act.len() {
            let s = if mask >> i & 1 == 1 { -1.0 } else { 1.0 };
            num -= s * off[i];
            den += s * dir[i];
        }
        if den > DENOM_TOL {
            best = best.min((num / den).max(0.0));
        }
    }
    Ok(best)
}

/// Ray-boundary distance by bisection on the level function; the set is
/// convex, so membership along the ray is an interval.
fn superellipsoid_chord(set: &UncertaintySet, o1: f64, o2: f64, p: &[f64], d: &[f64]) -> f64 {
    let c = set.center();
    let w = set.semi_axes();
    let inside = |t: f64| {
        let q: Vec<f64> = p.iter().zip(d).map(|(a, b)| a + t * b).collect();
        superellipsoid_level(&q, c, w, o1, o2) <= 1.0
    };
    let mut hi = 2.0 * w.iter().cloned().fold(0.0, f64::max);
    while inside(hi) {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    if !inside(lo) {
        return 0.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if inside(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
