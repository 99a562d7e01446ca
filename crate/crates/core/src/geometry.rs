//! Vectors and point sets in F_q^d, spheres, hyperplanes, and the lifting
//! `x -> (x, ||x||)` that turns spheres into hyperplanes one dimension up.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::{FieldDesc, Scalar};

/// Hard ceiling on `q^d` for anything that encodes points as integers.
pub const MAX_GRID: u64 = 1 << 40;

/// Enumeration and work budgets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    /// Largest `q^d` that may be enumerated point by point.
    pub grid: u64,
    /// Largest number of elementary steps a counting routine may take.
    pub work: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { grid: 1 << 24, work: 1 << 32 }
    }
}

/// `q^d`, or `GridTooLarge` if it exceeds `limit`.
pub fn grid_size(q: u32, d: usize, limit: u64) -> Result<u64> {
    let size = (q as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    if size > limit.min(MAX_GRID) as u128 {
        return Err(LabError::GridTooLarge { size, limit: limit.min(MAX_GRID) });
    }
    Ok(size as u64)
}

/// A point of F_q^d.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector {
    entries: Vec<Scalar>,
}

impl Vector {
    pub fn new(entries: Vec<Scalar>) -> Vector {
        Vector { entries }
    }

    pub fn zero(d: usize) -> Vector {
        Vector { entries: vec![Scalar::ZERO; d] }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Scalar] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|c| c.is_zero())
    }

    /// Integer encoding `sum_j code(x_j) * q^j`; fixes the canonical order.
    pub fn encode(&self, q: u32) -> u64 {
        self.entries.iter().rev().fold(0u64, |acc, c| acc * q as u64 + c.code() as u64)
    }

    pub fn decode(mut code: u64, q: u32, d: usize) -> Vector {
        let entries = (0..d)
            .map(|_| {
                let c = (code % q as u64) as u32;
                code /= q as u64;
                Scalar::from_code_unchecked(c)
            })
            .collect();
        Vector { entries }
    }

    /// Builds a vector from element codes, checking each lies in the field.
    pub fn from_codes(field: &FieldDesc, codes: &[u64]) -> Result<Vector> {
        let entries = codes.iter().map(|&c| field.element(c)).collect::<Result<Vec<_>>>()?;
        Ok(Vector { entries })
    }

    /// Parses `"(c1,...,cd)"`; parentheses are optional.
    pub fn parse(field: &FieldDesc, s: &str) -> Result<Vector> {
        let body = s.trim().trim_start_matches('(').trim_end_matches(')');
        if body.trim().is_empty() {
            return Err(LabError::Parse(format!("empty vector literal {s:?}")));
        }
        let entries = body.split(',').map(|c| field.parse_scalar(c)).collect::<Result<Vec<_>>>()?;
        Ok(Vector { entries })
    }

    /// Appends one coordinate.
    pub fn extended(&self, last: Scalar) -> Vector {
        let mut entries = self.entries.clone();
        entries.push(last);
        Vector { entries }
    }
}

impl fmt::Display for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(LabError::DimensionMismatch { expected, got });
    }
    Ok(())
}

pub(crate) fn add_unchecked(field: &FieldDesc, x: &Vector, y: &Vector) -> Vector {
    Vector { entries: x.entries.iter().zip(&y.entries).map(|(&a, &b)| field.add(a, b)).collect() }
}

pub(crate) fn sub_unchecked(field: &FieldDesc, x: &Vector, y: &Vector) -> Vector {
    Vector { entries: x.entries.iter().zip(&y.entries).map(|(&a, &b)| field.sub(a, b)).collect() }
}

pub(crate) fn scale(field: &FieldDesc, c: Scalar, x: &Vector) -> Vector {
    Vector { entries: x.entries.iter().map(|&a| field.mul(c, a)).collect() }
}

pub(crate) fn dot_unchecked(field: &FieldDesc, x: &Vector, y: &Vector) -> Scalar {
    x.entries.iter().zip(&y.entries).fold(Scalar::ZERO, |acc, (&a, &b)| field.add(acc, field.mul(a, b)))
}

pub fn add(field: &FieldDesc, x: &Vector, y: &Vector) -> Result<Vector> {
    check_dim(x.dim(), y.dim())?;
    Ok(add_unchecked(field, x, y))
}

pub fn sub(field: &FieldDesc, x: &Vector, y: &Vector) -> Result<Vector> {
    check_dim(x.dim(), y.dim())?;
    Ok(sub_unchecked(field, x, y))
}

/// `||x|| = x_1^2 + ... + x_d^2`.
pub fn quadratic_norm(field: &FieldDesc, x: &Vector) -> Scalar {
    x.entries.iter().fold(Scalar::ZERO, |acc, &a| field.add(acc, field.square(a)))
}

pub fn dot(field: &FieldDesc, x: &Vector, y: &Vector) -> Result<Scalar> {
    check_dim(x.dim(), y.dim())?;
    Ok(dot_unchecked(field, x, y))
}

/// `(x, ||x||)`.
pub fn lift_point(field: &FieldDesc, x: &Vector) -> Vector {
    x.extended(quadratic_norm(field, x))
}

/// A finite subset of F_q^d, deduplicated and sorted by [`Vector::encode`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointSet {
    field: FieldDesc,
    dim: usize,
    points: Vec<Vector>,
    codes: Vec<u64>,
}

impl PointSet {
    pub fn new(field: &FieldDesc, dim: usize, points: impl IntoIterator<Item = Vector>) -> Result<PointSet> {
        if dim == 0 {
            return Err(LabError::DimensionMismatch { expected: 1, got: 0 });
        }
        grid_size(field.q(), dim, MAX_GRID)?;
        let q = field.q();
        let mut keyed = Vec::new();
        for v in points {
            check_dim(dim, v.dim())?;
            if let Some(c) = v.entries.iter().find(|c| c.code() >= q) {
                return Err(LabError::InvalidElement { code: c.code() as u64, q: q as u64 });
            }
            keyed.push((v.encode(q), v));
        }
        keyed.sort_unstable_by_key(|(c, _)| *c);
        keyed.dedup_by_key(|(c, _)| *c);
        let (codes, points) = keyed.into_iter().unzip();
        Ok(PointSet { field: field.clone(), dim, points, codes })
    }

    /// From integer encodings; codes outside the grid are rejected.
    pub fn from_codes(field: &FieldDesc, dim: usize, codes: impl IntoIterator<Item = u64>) -> Result<PointSet> {
        let size = grid_size(field.q(), dim, MAX_GRID)?;
        let mut codes: Vec<u64> = codes.into_iter().collect();
        if let Some(&c) = codes.iter().find(|&&c| c >= size) {
            return Err(LabError::InvalidElement { code: c, q: size });
        }
        codes.sort_unstable();
        codes.dedup();
        let points = codes.iter().map(|&c| Vector::decode(c, field.q(), dim)).collect();
        Ok(PointSet { field: field.clone(), dim, points, codes })
    }

    pub fn empty(field: &FieldDesc, dim: usize) -> PointSet {
        PointSet { field: field.clone(), dim, points: Vec::new(), codes: Vec::new() }
    }

    /// All of F_q^d.
    pub fn full_grid(field: &FieldDesc, dim: usize, limit: u64) -> Result<PointSet> {
        let size = grid_size(field.q(), dim, limit)?;
        PointSet::from_codes(field, dim, 0..size)
    }

    /// Parses `"(1,2);(3,4)"`.
    pub fn parse(field: &FieldDesc, dim: usize, s: &str) -> Result<PointSet> {
        let pts = s
            .split(';')
            .filter(|t| !t.trim().is_empty())
            .map(|t| Vector::parse(field, t))
            .collect::<Result<Vec<_>>>()?;
        PointSet::new(field, dim, pts)
    }

    pub fn field(&self) -> &FieldDesc {
        &self.field
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vector] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Vector> {
        self.points.iter()
    }

    pub fn codes(&self) -> &[u64] {
        &self.codes
    }

    /// `q^d` as an exact integer.
    pub fn grid_size(&self) -> u64 {
        (self.field.q() as u64).pow(self.dim as u32)
    }

    pub fn contains(&self, v: &Vector) -> bool {
        v.dim() == self.dim && self.contains_code(v.encode(self.field.q()))
    }

    pub fn contains_code(&self, code: u64) -> bool {
        self.codes.binary_search(&code).is_ok()
    }
}

impl<'a> IntoIterator for &'a PointSet {
    type Item = &'a Vector;
    type IntoIter = std::slice::Iter<'a, Vector>;

    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}

#[derive(Serialize, Deserialize)]
struct PointSetWire {
    field: FieldDesc,
    dim: usize,
    points: Vec<Vec<u64>>,
}

impl Serialize for PointSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        PointSetWire {
            field: self.field.clone(),
            dim: self.dim,
            points: self.points.iter().map(|v| v.entries.iter().map(|c| c.code() as u64).collect()).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PointSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = PointSetWire::deserialize(deserializer)?;
        let pts = wire
            .points
            .iter()
            .map(|p| Vector::from_codes(&wire.field, p))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        PointSet::new(&wire.field, wire.dim, pts).map_err(serde::de::Error::custom)
    }
}

/// `{x : ||x - center|| = radius}`; zero radius is allowed.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sphere {
    pub center: Vector,
    pub radius: Scalar,
}

impl Sphere {
    pub fn new(center: Vector, radius: Scalar) -> Sphere {
        Sphere { center, radius }
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn is_zero_radius(&self) -> bool {
        self.radius.is_zero()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OffsetClass {
    NonzeroOffset,
    ZeroOffset,
}

/// `{x : normal . x = offset}` with a nonzero normal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Hyperplane {
    normal: Vector,
    offset: Scalar,
    offset_class: OffsetClass,
}

impl Hyperplane {
    pub fn new(normal: Vector, offset: Scalar) -> Result<Hyperplane> {
        if normal.is_zero() {
            return Err(LabError::ZeroNormal);
        }
        let offset_class = if offset.is_zero() { OffsetClass::ZeroOffset } else { OffsetClass::NonzeroOffset };
        Ok(Hyperplane { normal, offset, offset_class })
    }

    pub fn normal(&self) -> &Vector {
        &self.normal
    }

    pub fn offset(&self) -> Scalar {
        self.offset
    }

    pub fn offset_class(&self) -> OffsetClass {
        self.offset_class
    }

    pub fn dim(&self) -> usize {
        self.normal.dim()
    }
}

/// Either kind of incidence object.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GeomObject {
    Sphere(Sphere),
    Hyperplane(Hyperplane),
}

impl GeomObject {
    pub fn dim(&self) -> usize {
        match self {
            GeomObject::Sphere(s) => s.dim(),
            GeomObject::Hyperplane(h) => h.dim(),
        }
    }
}

impl From<Sphere> for GeomObject {
    fn from(s: Sphere) -> Self {
        GeomObject::Sphere(s)
    }
}

impl From<Hyperplane> for GeomObject {
    fn from(h: Hyperplane) -> Self {
        GeomObject::Hyperplane(h)
    }
}

pub(crate) fn sphere_contains(field: &FieldDesc, s: &Sphere, x: &Vector) -> bool {
    let norm = s
        .center
        .entries
        .iter()
        .zip(&x.entries)
        .fold(Scalar::ZERO, |acc, (&a, &b)| field.add(acc, field.square(field.sub(b, a))));
    norm == s.radius
}

pub(crate) fn hyperplane_contains(field: &FieldDesc, h: &Hyperplane, x: &Vector) -> bool {
    dot_unchecked(field, &h.normal, x) == h.offset
}

pub fn incident(field: &FieldDesc, obj: &GeomObject, x: &Vector) -> Result<bool> {
    check_dim(obj.dim(), x.dim())?;
    Ok(match obj {
        GeomObject::Sphere(s) => sphere_contains(field, s, x),
        GeomObject::Hyperplane(h) => hyperplane_contains(field, h, x),
    })
}

/// `{(x, ||x||) : x in P}` in dimension d+1.
pub fn lift_set(set: &PointSet) -> PointSet {
    let field = set.field();
    let lifted: Vec<Vector> = set.iter().map(|x| lift_point(field, x)).collect();
    PointSet::new(field, set.dim() + 1, lifted).expect("lifting preserves validity")
}

/// The hyperplane `(-2a, 1) . (x, t) = r - ||a||` in dimension d+1.
pub fn sphere_to_hyperplane(field: &FieldDesc, sphere: &Sphere) -> Hyperplane {
    let minus_two = field.from_int(-2);
    let normal = scale(field, minus_two, &sphere.center).extended(Scalar::ONE);
    let offset = field.sub(sphere.radius, quadratic_norm(field, &sphere.center));
    Hyperplane::new(normal, offset).expect("last coordinate of the normal is 1")
}

/// Splits by whether `r - ||a||` is nonzero (first part) or zero (second).
pub fn split_spheres(field: &FieldDesc, spheres: &[Sphere]) -> (Vec<Sphere>, Vec<Sphere>) {
    spheres
        .iter()
        .cloned()
        .partition(|s| field.sub(s.radius, quadratic_norm(field, &s.center)) != Scalar::ZERO)
}

/// Brute-force solution set of an object over the whole grid.
pub fn enumerate_object(field: &FieldDesc, obj: &GeomObject, limit: u64) -> Result<PointSet> {
    let d = obj.dim();
    let size = grid_size(field.q(), d, limit)?;
    let codes = (0..size).filter(|&c| {
        let x = Vector::decode(c, field.q(), d);
        match obj {
            GeomObject::Sphere(s) => sphere_contains(field, s, &x),
            GeomObject::Hyperplane(h) => hyperplane_contains(field, h, &x),
        }
    });
    PointSet::from_codes(field, d, codes)
}
