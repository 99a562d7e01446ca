//! Incidence counters (direct, lifted, pairwise, weighted), the unit-distance
//! counter and the bound sheet.

use std::cmp::Ordering;
use std::collections::HashMap;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::{BigRational, Ratio};
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::fourier_coefficient;
use crate::error::{LabError, Result};
use crate::exact::{compare_products, powf, PowerFactor, Rational, SValue};
use crate::field::{FieldDesc, Scalar};
use crate::geometry::{
    hyperplane_contains, lift_set, quadratic_norm, scale, sphere_contains, sphere_to_hyperplane, split_spheres,
    sub_unchecked, GeomObject, Hyperplane, Limits, OffsetClass, PointSet, Sphere, Vector,
};

/// Relative tolerance of the spectral cross-check on `D(a, b)`.
pub const SPECTRAL_TOLERANCE: f64 = 1e-6;

/// How each object's incidences are found.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountStrategy {
    /// Per object, whichever of the two below is cheaper.
    #[default]
    Auto,
    /// Test every point of `P` against the object.
    Membership,
    /// Solve for the object's points and look them up in `P`.
    Enumerate,
}

/// What kind of objects a report counted against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    Spheres,
    Hyperplanes,
    Mixed,
    Empty,
}

/// `N(a, b)` for one object and `D(a, b) = N(a, b) - |P|/q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectCount {
    pub index: usize,
    pub n: u64,
    pub d: Rational,
    /// `D(a, b)` recomputed from the character sum, when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectral: Option<f64>,
}

/// Intermediate counts of the lifted computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftBreakdown {
    /// Spheres with `r - ||a|| != 0`, counted as hyperplanes one dimension up.
    pub nonzero_offset_spheres: u64,
    /// Spheres with `r - ||a|| = 0`, counted through the scaled pairs.
    pub zero_offset_spheres: u64,
    pub hyperplane_incidences: u64,
    /// `N(P', T)` over all scalings `lambda` of the zero-offset normals.
    pub scaled_pairs: u64,
    /// `I(P, S_2)` counted directly, for the identity `N = (q-1) I(P, S_2)`.
    pub zero_offset_direct: u64,
    pub lifted_count: u64,
}

/// An exact incidence count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncidenceReport {
    pub schema: u32,
    pub q: u64,
    pub dim: usize,
    pub points: u64,
    pub objects: u64,
    pub object_kind: ObjectKind,
    /// True when every object is a hyperplane through the origin.
    pub all_zero_offset: bool,
    pub count: u64,
    /// `|P| |S| / q`.
    pub expected: Rational,
    /// `|I - |P| |S| / q|`.
    pub discrepancy: Rational,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_object: Option<Vec<ObjectCount>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lifted: Option<LiftBreakdown>,
}

fn ratio(num: u128, den: u64) -> Rational {
    Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
}

fn check_objects(p: &PointSet, objects: &[GeomObject]) -> Result<()> {
    let q = p.field().q();
    for obj in objects {
        if obj.dim() != p.dim() {
            return Err(LabError::DimensionMismatch { expected: p.dim(), got: obj.dim() });
        }
        let scalars: Vec<Scalar> = match obj {
            GeomObject::Sphere(s) => s.center.entries().iter().copied().chain([s.radius]).collect(),
            GeomObject::Hyperplane(h) => h.normal().entries().iter().copied().chain([h.offset()]).collect(),
        };
        if let Some(c) = scalars.iter().find(|c| c.code() >= q) {
            return Err(LabError::InvalidElement { code: c.code() as u64, q: q as u64 });
        }
    }
    Ok(())
}

fn contains(field: &FieldDesc, obj: &GeomObject, x: &Vector) -> bool {
    match obj {
        GeomObject::Sphere(s) => sphere_contains(field, s, x),
        GeomObject::Hyperplane(h) => hyperplane_contains(field, h, x),
    }
}

/// Calls `visit` with the code of every point of the object.
fn for_each_point(field: &FieldDesc, obj: &GeomObject, mut visit: impl FnMut(u64)) {
    let q = field.q();
    let d = obj.dim();
    let free = d - 1;
    let count = (q as u64).pow(free as u32);
    let encode = |x: &[Scalar]| x.iter().rev().fold(0u64, |acc, c| acc * q as u64 + c.code() as u64);
    let mut x = vec![Scalar::ZERO; d];
    match obj {
        GeomObject::Sphere(s) => {
            let a = s.center.entries();
            for code in 0..count {
                let y = Vector::decode(code, q, free);
                let partial = y.entries().iter().fold(Scalar::ZERO, |acc, &c| field.add(acc, field.square(c)));
                let rest = field.sub(s.radius, partial);
                let Some(root) = field.sqrt(rest) else { continue };
                for (j, &c) in y.entries().iter().enumerate() {
                    x[j] = field.add(a[j], c);
                }
                x[free] = field.add(a[free], root);
                visit(encode(&x));
                if !root.is_zero() {
                    x[free] = field.sub(a[free], root);
                    visit(encode(&x));
                }
            }
        }
        GeomObject::Hyperplane(h) => {
            let v = h.normal().entries();
            let j = v.iter().position(|c| !c.is_zero()).expect("hyperplane normals are nonzero");
            let inv = field.inv(v[j]).expect("nonzero scalar");
            for code in 0..count {
                let y = Vector::decode(code, q, free);
                let mut acc = h.offset();
                for (slot, (i, &c)) in (0..d).filter(|&i| i != j).zip(y.entries().iter().enumerate()) {
                    x[slot] = c;
                    acc = field.sub(acc, field.mul(v[slot], y.entries()[i]));
                }
                x[j] = field.mul(acc, inv);
                visit(encode(&x));
            }
        }
    }
}

fn count_one(p: &PointSet, obj: &GeomObject, strategy: CountStrategy) -> u64 {
    let field = p.field();
    let solve_cost = (field.q() as u64).saturating_pow(obj.dim() as u32 - 1);
    let enumerate = match strategy {
        CountStrategy::Auto => solve_cost < p.len() as u64,
        CountStrategy::Membership => false,
        CountStrategy::Enumerate => true,
    };
    if enumerate {
        let mut n = 0;
        for_each_point(field, obj, |c| n += u64::from(p.contains_code(c)));
        n
    } else {
        p.iter().filter(|x| contains(field, obj, x)).count() as u64
    }
}

fn object_kind(objects: &[GeomObject]) -> (ObjectKind, bool) {
    let spheres = objects.iter().filter(|o| matches!(o, GeomObject::Sphere(_))).count();
    let kind = match (spheres, objects.len()) {
        (_, 0) => ObjectKind::Empty,
        (s, n) if s == n => ObjectKind::Spheres,
        (0, _) => ObjectKind::Hyperplanes,
        _ => ObjectKind::Mixed,
    };
    let zero = !objects.is_empty()
        && objects
            .iter()
            .all(|o| matches!(o, GeomObject::Hyperplane(h) if h.offset_class() == OffsetClass::ZeroOffset));
    (kind, zero)
}

fn build_report(p: &PointSet, objects: &[GeomObject], counts: &[u64], per_object: bool) -> IncidenceReport {
    let q = p.field().q() as u64;
    let count: u64 = counts.iter().sum();
    let pts = p.len() as u64;
    let expected = ratio(pts as u128 * objects.len() as u128, q);
    let discrepancy = (&Rational::from_int(count as i128) - &expected).abs();
    let per_object = per_object.then(|| {
        let base = ratio(pts as u128, q);
        counts
            .iter()
            .enumerate()
            .map(|(index, &n)| ObjectCount { index, n, d: &Rational::from_int(n as i128) - &base, spectral: None })
            .collect()
    });
    let (object_kind, all_zero_offset) = object_kind(objects);
    IncidenceReport {
        schema: 1,
        q,
        dim: p.dim(),
        points: pts,
        objects: objects.len() as u64,
        object_kind,
        all_zero_offset,
        count,
        expected,
        discrepancy,
        per_object,
        lifted: None,
    }
}

fn per_object_counts(p: &PointSet, objects: &[GeomObject], strategy: CountStrategy, limits: &Limits) -> Result<Vec<u64>> {
    check_objects(p, objects)?;
    let per = (p.field().q() as u128).pow(p.dim() as u32 - 1).min(p.len() as u128).max(1);
    let work = per * objects.len() as u128 * p.dim() as u128;
    if work > limits.work as u128 {
        return Err(LabError::BudgetExceeded { work, budget: limits.work });
    }
    Ok(objects.par_iter().map(|o| count_one(p, o, strategy)).collect())
}

/// `I(P, objects)` with a chosen strategy.
pub fn count_incidences_with(
    p: &PointSet,
    objects: &[GeomObject],
    strategy: CountStrategy,
    per_object: bool,
    limits: &Limits,
) -> Result<IncidenceReport> {
    let counts = per_object_counts(p, objects, strategy, limits)?;
    Ok(build_report(p, objects, &counts, per_object))
}

/// `I(P, objects)`, the number of (point, object) pairs with the point on the object.
pub fn count_incidences(p: &PointSet, objects: &[GeomObject], limits: &Limits) -> Result<IncidenceReport> {
    count_incidences_with(p, objects, CountStrategy::Auto, false, limits)
}

pub fn spheres_as_objects(spheres: &[Sphere]) -> Vec<GeomObject> {
    spheres.iter().cloned().map(GeomObject::Sphere).collect()
}

pub fn hyperplanes_as_objects(planes: &[Hyperplane]) -> Vec<GeomObject> {
    planes.iter().cloned().map(GeomObject::Hyperplane).collect()
}

/// The scaled normals `lambda (-2a, 1)` with offset 0, one per `lambda != 0`.
pub fn scaled_zero_offset_planes(field: &FieldDesc, spheres: &[Sphere]) -> Vec<Hyperplane> {
    let minus_two = field.from_int(-2);
    let mut out = Vec::with_capacity(spheres.len() * (field.q() as usize - 1));
    for s in spheres {
        let base = scale(field, minus_two, &s.center).extended(Scalar::ONE);
        for lambda in field.elements().filter(|l| !l.is_zero()) {
            out.push(Hyperplane::new(scale(field, lambda, &base), Scalar::ZERO).expect("last coordinate is lambda"));
        }
    }
    out
}

/// `I(P, S)` through the lifting `x -> (x, ||x||)`.
///
/// Spheres with `r != ||a||` become hyperplanes in dimension d+1. The others
/// are counted through all `q - 1` scalings of their offset-zero hyperplane
/// and the pair count is divided by `q - 1`. The result must equal the direct
/// count; any disagreement is reported as `ReductionMismatch`.
pub fn count_incidences_lifted(p: &PointSet, spheres: &[Sphere], limits: &Limits) -> Result<IncidenceReport> {
    let field = p.field();
    let objects = spheres_as_objects(spheres);
    let direct = count_incidences(p, &objects, limits)?;
    let (s1, s2) = split_spheres(field, spheres);
    let lifted_points = lift_set(p);
    let h1: Vec<GeomObject> = s1.iter().map(|s| GeomObject::Hyperplane(sphere_to_hyperplane(field, s))).collect();
    let i1 = count_incidences(&lifted_points, &h1, limits)?.count;
    let t = hyperplanes_as_objects(&scaled_zero_offset_planes(field, &s2));
    let pairs = count_incidences(&lifted_points, &t, limits)?.count;
    let q1 = field.q() as u64 - 1;
    let zero_offset_direct = count_incidences(p, &spheres_as_objects(&s2), limits)?.count;
    let mismatch = |lifted| LabError::ReductionMismatch { direct: direct.count, lifted };
    if pairs % q1 != 0 {
        return Err(mismatch(i1 + pairs / q1));
    }
    let lifted_count = i1 + pairs / q1;
    if lifted_count != direct.count || pairs != q1 * zero_offset_direct {
        return Err(mismatch(lifted_count));
    }
    let mut report = direct;
    report.lifted = Some(LiftBreakdown {
        nonzero_offset_spheres: s1.len() as u64,
        zero_offset_spheres: s2.len() as u64,
        hyperplane_incidences: i1,
        scaled_pairs: pairs,
        zero_offset_direct,
        lifted_count,
    });
    Ok(report)
}

/// `N(U, T)` with per-pair discrepancies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairCount {
    pub schema: u32,
    pub n: u64,
    /// `|U| |T| / q`.
    pub expected: Rational,
    pub per_object: Vec<ObjectCount>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectral_max_error: Option<f64>,
}

/// `D(a, b) = q^{D-1} sum_{t != 0} chi(t b) U^(t a)` with `D` the ambient dimension.
pub fn spectral_discrepancy(u: &PointSet, normal: &Vector, offset: Scalar) -> Result<f64> {
    let field = u.field();
    let scale_factor = (field.q() as f64).powi(u.dim() as i32 - 1);
    let mut acc = Complex::new(0.0, 0.0);
    for t in field.elements().filter(|t| !t.is_zero()) {
        acc += field.character(field.mul(t, offset)) * fourier_coefficient(u, &scale(field, t, normal))?;
    }
    Ok(scale_factor * acc.re)
}

/// `N(U, T) = |{(x, (a, b)) : x in U, (a, b) in T, a . x = b}|`.
pub fn pair_count_n(u: &PointSet, t: &[(Vector, Scalar)], spectral_check: bool, limits: &Limits) -> Result<PairCount> {
    let planes = t
        .iter()
        .map(|(a, b)| Hyperplane::new(a.clone(), *b).map(GeomObject::Hyperplane))
        .collect::<Result<Vec<_>>>()?;
    let report = count_incidences_with(u, &planes, CountStrategy::Auto, true, limits)?;
    let mut per_object = report.per_object.expect("requested");
    let mut spectral_max_error = None;
    if spectral_check {
        let errors: Vec<(f64, f64)> = per_object
            .par_iter()
            .zip(t.par_iter())
            .map(|(obj, (a, b))| {
                let spec = spectral_discrepancy(u, a, *b)?;
                let comb = obj.d.to_f64();
                Ok((spec, (spec - comb).abs() / comb.abs().max(1.0)))
            })
            .collect::<Result<_>>()?;
        let worst = errors.iter().map(|e| e.1).fold(0.0, f64::max);
        for (obj, (spec, _)) in per_object.iter_mut().zip(&errors) {
            obj.spectral = Some(*spec);
        }
        if worst > SPECTRAL_TOLERANCE {
            return Err(LabError::HardAssertion(format!(
                "character-sum D(a,b) differs from the count by relative {worst:e}"
            )));
        }
        spectral_max_error = Some(worst);
    }
    Ok(PairCount { schema: 1, n: report.count, expected: report.expected, per_object, spectral_max_error })
}

/// `N_r(P) = |{(x, y) in P x P : ||x - y|| = r}|`, computed as `I(P, S)` with
/// `S` the radius-r spheres centered at `P`.
pub fn unit_distance_count(p: &PointSet, r: Scalar, limits: &Limits) -> Result<u64> {
    if r.is_zero() {
        return Err(LabError::ZeroRadius);
    }
    let field = p.field();
    if r.code() >= field.q() {
        return Err(LabError::InvalidElement { code: r.code() as u64, q: field.q() as u64 });
    }
    let spheres: Vec<GeomObject> = p.iter().map(|a| GeomObject::Sphere(Sphere::new(a.clone(), r))).collect();
    let count = count_incidences(p, &spheres, limits)?.count;
    if (p.len() as u128).pow(2) <= limits.work as u128 {
        let scan = unit_distance_bruteforce(p, r)?;
        if scan != count {
            return Err(LabError::HardAssertion(format!("unit distances: incidence count {count} != pair scan {scan}")));
        }
    }
    Ok(count)
}

/// Ordered pairs at distance `r` by a double loop over `P`.
pub fn unit_distance_bruteforce(p: &PointSet, r: Scalar) -> Result<u64> {
    if r.is_zero() {
        return Err(LabError::ZeroRadius);
    }
    let field = p.field();
    Ok(p.iter().map(|x| p.iter().filter(|y| quadratic_norm(field, &sub_unchecked(field, x, y)) == r).count() as u64).sum())
}

/// An exact complex rational weight.
pub type Weight = Complex<BigRational>;

pub fn real_weight(value: &Rational) -> Weight {
    Complex::new(value.0.clone(), BigRational::zero())
}

pub fn weight(re: &Rational, im: &Rational) -> Weight {
    Complex::new(re.0.clone(), im.0.clone())
}

fn weight_abs(w: &Weight) -> f64 {
    let re = w.re.to_f64().unwrap_or(f64::NAN);
    let im = w.im.to_f64().unwrap_or(f64::NAN);
    re.hypot(im)
}

/// Cached l^p norms of a weight function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightNorms {
    pub l1: f64,
    pub l2: f64,
    /// Norm at `r' = (2d + 8) / (d + 6)`.
    pub l_r_prime: f64,
    pub linf: f64,
    pub r_prime: f64,
}

/// `r' = (2d + 8) / (d + 6)`.
pub fn r_prime(d: usize) -> f64 {
    (2.0 * d as f64 + 8.0) / (d as f64 + 6.0)
}

/// Complex weights on spheres, with norms kept current.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMap {
    dim: usize,
    weights: HashMap<Sphere, Weight>,
    norms: WeightNorms,
}

impl WeightMap {
    pub fn new(dim: usize) -> WeightMap {
        let mut w = WeightMap { dim, weights: HashMap::new(), norms: WeightNorms { l1: 0.0, l2: 0.0, l_r_prime: 0.0, linf: 0.0, r_prime: r_prime(dim) } };
        w.refresh();
        w
    }

    /// Weight 1 on every sphere of the family.
    pub fn indicator(dim: usize, spheres: &[Sphere]) -> WeightMap {
        let one = real_weight(&Rational::from_int(1));
        let mut w = WeightMap::new(dim);
        w.weights = spheres.iter().map(|s| (s.clone(), one.clone())).collect();
        w.refresh();
        w
    }

    pub fn insert(&mut self, sphere: Sphere, w: Weight) -> Result<()> {
        if sphere.dim() != self.dim {
            return Err(LabError::DimensionMismatch { expected: self.dim, got: sphere.dim() });
        }
        self.weights.insert(sphere, w);
        self.refresh();
        Ok(())
    }

    pub fn remove(&mut self, sphere: &Sphere) -> Option<Weight> {
        let out = self.weights.remove(sphere);
        self.refresh();
        out
    }

    pub fn get(&self, sphere: &Sphere) -> Option<&Weight> {
        self.weights.get(sphere)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn norms(&self) -> WeightNorms {
        self.norms
    }

    /// `||w||_2 <= ||w||_{r'}` whenever `r' <= 2`.
    pub fn norms_consistent(&self) -> bool {
        self.norms.r_prime > 2.0 || self.norms.l2 <= self.norms.l_r_prime * (1.0 + 1e-12)
    }

    fn refresh(&mut self) {
        let r = r_prime(self.dim);
        let mut abs: Vec<f64> = self.weights.values().map(weight_abs).collect();
        abs.sort_by(f64::total_cmp);
        self.norms = WeightNorms {
            l1: abs.iter().sum(),
            l2: abs.iter().map(|a| a * a).sum::<f64>().sqrt(),
            l_r_prime: abs.iter().map(|a| a.powf(r)).sum::<f64>().powf(1.0 / r),
            linf: abs.last().copied().unwrap_or(0.0),
            r_prime: r,
        };
    }
}

/// `I_w(P, S) = sum_{p in P} sum_{sigma in S} w(sigma) 1_sigma(p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedIncidence {
    pub value: Weight,
    /// `sum_{sigma in S} w(sigma)`.
    pub total_weight: Weight,
    /// `|I_w - |P| sum w / q|`.
    pub discrepancy: f64,
    pub norms: WeightNorms,
}

pub fn weighted_incidences(p: &PointSet, spheres: &[Sphere], w: &WeightMap, limits: &Limits) -> Result<WeightedIncidence> {
    let weights = spheres.iter().map(|s| w.get(s).cloned().ok_or(LabError::MissingWeight)).collect::<Result<Vec<_>>>()?;
    let counts = per_object_counts(p, &spheres_as_objects(spheres), CountStrategy::Auto, limits)?;
    let zero = Complex::new(BigRational::zero(), BigRational::zero());
    let mut value = zero.clone();
    let mut total = zero;
    for (wt, &n) in weights.iter().zip(&counts) {
        let n = BigRational::from_integer(BigInt::from(n));
        value = value + Complex::new(&wt.re * &n, &wt.im * &n);
        total = total + wt.clone();
    }
    let share = BigRational::new(BigInt::from(p.len()), BigInt::from(p.field().q()));
    let centered = Complex::new(&value.re - &total.re * &share, &value.im - &total.im * &share);
    Ok(WeightedIncidence { value, total_weight: total, discrepancy: weight_abs(&centered), norms: w.norms() })
}

/// Case of the point-sphere bound with constant `q^{(d-1)/2}`, keyed on
/// `d mod 4`, `q mod 4` and the parity of `d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KlpCase {
    /// `d = 2 mod 4`, `q = 3 mod 4`; needs `|S| <= q^{d/2}`.
    CaseI,
    /// `d = 0 mod 4`, or `d` even and `q = 1 mod 4`; needs `|S| <= q^{(d-2)/2}`.
    CaseII,
    /// `d >= 3` odd; needs `|S| <= q^{(d-1)/2}`.
    CaseIII,
    NotApplicable,
}

impl KlpCase {
    pub fn classify(q: u64, d: usize) -> KlpCase {
        if d % 4 == 2 && q % 4 == 3 {
            KlpCase::CaseI
        } else if d % 4 == 0 || (d % 2 == 0 && q % 4 == 1) {
            KlpCase::CaseII
        } else if d >= 3 && d % 2 == 1 {
            KlpCase::CaseIII
        } else {
            KlpCase::NotApplicable
        }
    }

    /// Exponent `e` in the size condition `|S| <= q^e`.
    pub fn size_exponent(self, d: usize) -> Option<u32> {
        match self {
            KlpCase::CaseI => Some(d as u32 / 2),
            KlpCase::CaseII => Some((d as u32).saturating_sub(2) / 2),
            KlpCase::CaseIII => Some((d as u32 - 1) / 2),
            KlpCase::NotApplicable => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            KlpCase::CaseI => "case_i",
            KlpCase::CaseII => "case_ii",
            KlpCase::CaseIII => "case_iii",
            KlpCase::NotApplicable => "not_applicable",
        }
    }
}

/// A right-hand side and `discrepancy / rhs`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundEntry {
    pub rhs: f64,
    pub ratio: f64,
}

impl BoundEntry {
    fn new(discrepancy: f64, rhs: f64) -> BoundEntry {
        let ratio = if discrepancy == 0.0 { 0.0 } else { discrepancy / rhs };
        BoundEntry { rhs, ratio }
    }
}

/// Weighted input to the restriction-type bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedSummary {
    pub discrepancy: f64,
    pub norms: WeightNorms,
}

impl From<&WeightedIncidence> for WeightedSummary {
    fn from(w: &WeightedIncidence) -> Self {
        WeightedSummary { discrepancy: w.discrepancy, norms: w.norms }
    }
}

/// Every bound evaluated on one instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundSheet {
    pub schema: u32,
    pub q: u64,
    pub d: usize,
    pub s: SValue,
    pub u: u32,
    pub points: u64,
    pub objects: u64,
    pub count: u64,
    pub expected: Rational,
    pub discrepancy: Rational,
    /// `q^{d/2} |P|^{1/2} |S|^{1/2}`.
    pub general: BoundEntry,
    /// `(I q - |P||S|)^2 <= q^{d+2} |P| |S|`, decided in integers.
    pub general_holds: bool,
    /// `q^{(d-1)/2} |P|^{1/2} |S|^{1/2}`.
    pub klp: BoundEntry,
    pub klp_case: KlpCase,
    pub klp_size_condition: bool,
    /// `q^{d/4} |P|^{1-s} |S|^{3/4}`.
    pub salem: BoundEntry,
    pub salem_s_in_range: bool,
    /// `|H|^{1-1/u} q^{(d-1)/u} |P|^{1-s}`, for even `u >= 4`.
    pub us: Option<BoundEntry>,
    /// `|H|^{1-1/u} q^{d/u} |P|^{1-s}`.
    pub us_zero_offset: Option<BoundEntry>,
    /// `q^{d/u} |P|^{1-s} |S|^{1-1/u}`.
    pub sphere_us: Option<BoundEntry>,
    pub r_prime: f64,
    /// `q^{(d^2+3d-2)/(2d+8)} |P|^{1/2} ||w||_{r'}`.
    pub klp_weighted: BoundEntry,
    /// `q^{(d-1)/2} |P|^{1/2} ||w||_2`.
    pub klp_l2: BoundEntry,
    pub weighted: bool,
    /// `|S| <= q^d |P|^{4s-2}`.
    pub improves_general: bool,
    /// `|S| <= q^{d-2} |P|^{4s-2}`.
    pub improves_klp: bool,
    /// `q^d <= |S|^2 <= q^{d+2}`.
    pub klp_window: bool,
}

fn le(lhs: &[PowerFactor], rhs: &[PowerFactor]) -> bool {
    compare_products(lhs, rhs) != Ordering::Greater
}

fn int(v: i64) -> Ratio<i64> {
    Ratio::from_integer(v)
}

/// Exact check of `|I - |P||S|/q| <= q^{d/2} |P|^{1/2} |S|^{1/2}`.
pub fn general_bound_holds(q: u64, d: usize, points: u64, objects: u64, count: u64) -> bool {
    let q_big = BigInt::from(q);
    let ps = BigInt::from(points) * BigInt::from(objects);
    let dev = BigInt::from(count) * &q_big - &ps;
    &dev * &dev <= q_big.pow(d as u32 + 2) * ps
}

pub fn evaluate_bounds(report: &IncidenceReport, s: SValue, u: u32, weights: Option<&WeightedSummary>) -> BoundSheet {
    let (q, d) = (report.q, report.dim);
    let (pf, sf, qf) = (report.points as f64, report.objects as f64, q as f64);
    let disc = report.discrepancy.to_f64();
    let df = d as f64;
    let general = BoundEntry::new(disc, qf.powf(df / 2.0) * pf.sqrt() * sf.sqrt());
    let klp = BoundEntry::new(disc, qf.powf((df - 1.0) / 2.0) * pf.sqrt() * sf.sqrt());
    let klp_case = KlpCase::classify(q, d);
    let klp_size_condition =
        klp_case.size_exponent(d).is_some_and(|e| le(&[(report.objects, int(1))], &[(q, int(e as i64))]));
    let p_pow = powf(pf, s.affine(1, -1));
    let salem = BoundEntry::new(disc, qf.powf(df / 4.0) * p_pow * sf.powf(0.75));
    let salem_s_in_range = s.ratio() > Ratio::new(1, 4) && s.ratio() <= Ratio::new(1, 2);
    let even_u = u >= 4 && u % 2 == 0;
    let uf = u as f64;
    let us = even_u.then(|| BoundEntry::new(disc, sf.powf(1.0 - 1.0 / uf) * qf.powf((df - 1.0) / uf) * p_pow));
    let us_zero_offset = even_u.then(|| BoundEntry::new(disc, sf.powf(1.0 - 1.0 / uf) * qf.powf(df / uf) * p_pow));
    let sphere_us = even_u.then(|| BoundEntry::new(disc, qf.powf(df / uf) * p_pow * sf.powf(1.0 - 1.0 / uf)));
    let rp = r_prime(d);
    let (wdisc, lr, l2) = match weights {
        Some(w) => (w.discrepancy, w.norms.l_r_prime, w.norms.l2),
        None => (disc, sf.powf(1.0 / rp), sf.sqrt()),
    };
    let klp_weighted = BoundEntry::new(wdisc, qf.powf((df * df + 3.0 * df - 2.0) / (2.0 * df + 8.0)) * pf.sqrt() * lr);
    let klp_l2 = BoundEntry::new(wdisc, qf.powf((df - 1.0) / 2.0) * pf.sqrt() * l2);
    let improvement = |extra: i64| {
        report.points > 0
            && d as i64 + extra >= 0
            && le(&[(report.objects, int(1))], &[(q, int(d as i64 + extra)), (report.points, s.affine(-2, 4))])
    };
    let s2 = [(report.objects, int(2))];
    let klp_window = le(&[(q, int(d as i64))], &s2) && le(&s2, &[(q, int(d as i64 + 2))]);
    BoundSheet {
        schema: 1,
        q,
        d,
        s,
        u,
        points: report.points,
        objects: report.objects,
        count: report.count,
        expected: report.expected.clone(),
        discrepancy: report.discrepancy.clone(),
        general,
        general_holds: general_bound_holds(q, d, report.points, report.objects, report.count),
        klp,
        klp_case,
        klp_size_condition,
        salem,
        salem_s_in_range,
        us,
        us_zero_offset,
        sphere_us,
        r_prime: rp,
        klp_weighted,
        klp_l2,
        weighted: weights.is_some(),
        improves_general: improvement(0),
        improves_klp: improvement(-2),
        klp_window,
    }
}

impl IncidenceReport {
    /// `I - |P||S|/q`, signed.
    pub fn excess(&self) -> Rational {
        &Rational::from_int(self.count as i128) - &self.expected
    }

    pub fn is_nonnegative_excess(&self) -> bool {
        !self.excess().0.is_negative()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{isotropic_subspace, zero_radius_spheres};
    use crate::geometry::enumerate_object;
    use crate::testutil::{field, random_set, rng};
    use rand::Rng;

    fn lim() -> Limits {
        Limits::default()
    }

    fn random_spheres(f: &FieldDesc, d: usize, n: usize, r: &mut impl Rng) -> Vec<Sphere> {
        let q = f.q() as u64;
        (0..n)
            .map(|_| {
                let c = Vector::decode(r.gen_range(0..q.pow(d as u32)), f.q(), d);
                Sphere::new(c, f.element(r.gen_range(0..q)).unwrap())
            })
            .collect()
    }

    #[test]
    fn incidence_examples() {
        let f = field(5, 1);
        let w = isotropic_subspace(&f, 2, &lim()).unwrap();
        let s = spheres_as_objects(&zero_radius_spheres(&w));
        assert_eq!(count_incidences(&w.elements, &s, &lim()).unwrap().count, 25);
        let empty = PointSet::empty(&f, 2);
        assert_eq!(count_incidences(&empty, &s, &lim()).unwrap().count, 0);
        let f3 = field(3, 1);
        let grid = PointSet::full_grid(&f3, 2, 100).unwrap();
        let unit = GeomObject::Sphere(Sphere::new(Vector::zero(2), Scalar::ONE));
        let rep = count_incidences(&grid, std::slice::from_ref(&unit), &lim()).unwrap();
        assert_eq!(rep.count, 4);
        assert_eq!(rep.count as usize, enumerate_object(&f3, &unit, 100).unwrap().len());
        assert_eq!(rep.expected, Rational::new(9, 3));
        let bad = GeomObject::Sphere(Sphere::new(Vector::zero(3), Scalar::ONE));
        assert!(matches!(count_incidences(&grid, &[bad], &lim()), Err(LabError::DimensionMismatch { .. })));
    }

    #[test]
    fn strategies_agree_with_object_enumeration() {
        let mut r = rng(3);
        for i in 0..40 {
            let f = field([3, 5, 7][i % 3], 1 + u32::from(i % 4 == 0));
            let d = 2 + i % 2;
            if (f.q() as u64).pow(d as u32) > 1000 {
                continue;
            }
            let p = random_set(&f, d, r.gen_range(0..30), &mut r);
            let mut objs = spheres_as_objects(&random_spheres(&f, d, 6, &mut r));
            for _ in 0..4 {
                let n = Vector::decode(r.gen_range(1..(f.q() as u64).pow(d as u32)), f.q(), d);
                objs.push(GeomObject::Hyperplane(Hyperplane::new(n, f.element(r.gen_range(0..f.q() as u64)).unwrap()).unwrap()));
            }
            let a = count_incidences_with(&p, &objs, CountStrategy::Membership, true, &lim()).unwrap();
            let b = count_incidences_with(&p, &objs, CountStrategy::Enumerate, true, &lim()).unwrap();
            assert_eq!(a, b);
            let mut oracle = 0;
            for o in &objs {
                let pts = enumerate_object(&f, o, 1 << 20).unwrap();
                oracle += pts.codes().iter().filter(|&&c| p.contains_code(c)).count() as u64;
            }
            assert_eq!(a.count, oracle);
            let per: u64 = a.per_object.as_ref().unwrap().iter().map(|o| o.n).sum();
            assert_eq!(per, a.count);
            assert!(a.count <= p.len() as u64 * objs.len() as u64);
        }
    }

    #[test]
    fn lifted_matches_direct() {
        let mut r = rng(8);
        for i in 0..60 {
            let f = field([3, 5, 7][i % 3], 1);
            let d = 2 + i % 2;
            let p = random_set(&f, d, r.gen_range(0..25), &mut r);
            let spheres = random_spheres(&f, d, r.gen_range(0..8), &mut r);
            let direct = count_incidences(&p, &spheres_as_objects(&spheres), &lim()).unwrap();
            let lifted = count_incidences_lifted(&p, &spheres, &lim()).unwrap();
            assert_eq!(lifted.count, direct.count);
            let b = lifted.lifted.unwrap();
            assert_eq!(b.scaled_pairs, (f.q() as u64 - 1) * b.zero_offset_direct);
        }
        let f = field(5, 1);
        let w = isotropic_subspace(&f, 2, &lim()).unwrap();
        let zs = zero_radius_spheres(&w);
        let rep = count_incidences_lifted(&w.elements, &zs, &lim()).unwrap();
        assert_eq!(rep.count, 25);
        assert_eq!(rep.lifted.unwrap().nonzero_offset_spheres, 0);
        assert_eq!(count_incidences_lifted(&w.elements, &[], &lim()).unwrap().count, 0);
    }

    #[test]
    fn pair_count_identities() {
        let f = field(5, 1);
        let u = PointSet::full_grid(&f, 2, 100).unwrap();
        let empty = pair_count_n(&u, &[], false, &lim()).unwrap();
        assert_eq!(empty.n, 0);
        assert!(matches!(pair_count_n(&u, &[(Vector::zero(2), Scalar::ONE)], false, &lim()), Err(LabError::ZeroNormal)));
        let mut r = rng(21);
        for i in 0..50 {
            let f = field([3, 5, 7][i % 3], 1);
            let d = 2 + i % 2;
            let u = random_set(&f, d, r.gen_range(0..30), &mut r);
            let a = Vector::decode(r.gen_range(1..(f.q() as u64).pow(d as u32)), f.q(), d);
            let b = f.element(r.gen_range(0..f.q() as u64)).unwrap();
            let pc = pair_count_n(&u, &[(a, b)], true, &lim()).unwrap();
            assert!(pc.spectral_max_error.unwrap() < SPECTRAL_TOLERANCE);
            let total_d = pc.per_object.iter().fold(Rational::from_int(0), |acc, o| &acc + &o.d);
            assert_eq!(total_d, &Rational::from_int(pc.n as i128) - &pc.expected);
        }
    }

    #[test]
    fn scaled_pairs_give_q_minus_one_copies() {
        let mut r = rng(4);
        let f = field(7, 1);
        let p = random_set(&f, 2, 20, &mut r);
        let spheres: Vec<Sphere> = random_spheres(&f, 2, 10, &mut r)
            .into_iter()
            .map(|s| {
                let radius = quadratic_norm(&f, &s.center);
                Sphere::new(s.center, radius)
            })
            .collect();
        let t: Vec<(Vector, Scalar)> = scaled_zero_offset_planes(&f, &spheres)
            .into_iter()
            .map(|h| (h.normal().clone(), h.offset()))
            .collect();
        let n = pair_count_n(&lift_set(&p), &t, false, &lim()).unwrap().n;
        let direct = count_incidences(&p, &spheres_as_objects(&spheres), &lim()).unwrap().count;
        assert_eq!(n, 6 * direct);
    }

    #[test]
    fn unit_distance_examples() {
        let f = field(3, 1);
        let grid = PointSet::full_grid(&f, 2, 100).unwrap();
        assert_eq!(unit_distance_count(&grid, Scalar::ONE, &lim()).unwrap(), 36);
        let single = PointSet::parse(&f, 2, "(1,1)").unwrap();
        assert_eq!(unit_distance_count(&single, Scalar::ONE, &lim()).unwrap(), 0);
        assert!(matches!(unit_distance_count(&grid, Scalar::ZERO, &lim()), Err(LabError::ZeroRadius)));
        let mut r = rng(6);
        for i in 0..30 {
            let f = field([5, 7, 11][i % 3], 1);
            let p = random_set(&f, 2, r.gen_range(0..40), &mut r);
            let radius = f.element(r.gen_range(1..f.q() as u64)).unwrap();
            let n = unit_distance_count(&p, radius, &lim()).unwrap();
            assert_eq!(n, unit_distance_bruteforce(&p, radius).unwrap());
            assert_eq!(n % 2, 0);
        }
    }

    #[test]
    fn weighted_examples() {
        let mut r = rng(12);
        let f = field(5, 1);
        let p = random_set(&f, 2, 12, &mut r);
        let spheres = random_spheres(&f, 2, 8, &mut r);
        let ones = WeightMap::indicator(2, &spheres);
        let direct = count_incidences(&p, &spheres_as_objects(&spheres), &lim()).unwrap().count;
        let wi = weighted_incidences(&p, &spheres, &ones, &lim()).unwrap();
        assert_eq!(wi.value, real_weight(&Rational::from_int(direct as i128)));
        assert!(ones.norms_consistent());

        let mut zero = WeightMap::new(2);
        for s in &spheres {
            zero.insert(s.clone(), real_weight(&Rational::from_int(0))).unwrap();
        }
        assert!(weighted_incidences(&p, &spheres, &zero, &lim()).unwrap().value.is_zero());

        let mut w1 = WeightMap::new(2);
        let mut w2 = WeightMap::new(2);
        let mut sum = WeightMap::new(2);
        for (i, s) in spheres.iter().enumerate() {
            let a = weight(&Rational::new(i as i128, 3), &Rational::new(1, 2));
            let b = weight(&Rational::new(-1, 7), &Rational::new(i as i128, 5));
            sum.insert(s.clone(), a.clone() + b.clone()).unwrap();
            w1.insert(s.clone(), a).unwrap();
            w2.insert(s.clone(), b).unwrap();
        }
        let i1 = weighted_incidences(&p, &spheres, &w1, &lim()).unwrap().value;
        let i2 = weighted_incidences(&p, &spheres, &w2, &lim()).unwrap().value;
        assert_eq!(weighted_incidences(&p, &spheres, &sum, &lim()).unwrap().value, i1 + i2);
        assert!(w1.norms_consistent() && w2.norms_consistent());

        let sub = &spheres[..3];
        let indicator = WeightMap::indicator(2, sub);
        let mut partial = indicator.clone();
        for s in &spheres[3..] {
            partial.insert(s.clone(), real_weight(&Rational::from_int(0))).unwrap();
        }
        let sub_count = count_incidences(&p, &spheres_as_objects(sub), &lim()).unwrap().count;
        assert_eq!(weighted_incidences(&p, &spheres, &partial, &lim()).unwrap().value, real_weight(&Rational::from_int(sub_count as i128)));
        assert!(matches!(weighted_incidences(&p, &spheres, &indicator, &lim()), Err(LabError::MissingWeight)));
    }

    #[test]
    fn general_bound_holds_on_random_instances() {
        let mut r = rng(31);
        for (q, n) in [(3, 1), (5, 1), (7, 1), (3, 2)] {
            let f = field(q, n);
            for d in [2, 3] {
                for _ in 0..10 {
                    let p = random_set(&f, d, r.gen_range(0..40), &mut r);
                    let spheres = random_spheres(&f, d, r.gen_range(0..20), &mut r);
                    let rep = count_incidences(&p, &spheres_as_objects(&spheres), &lim()).unwrap();
                    let sheet = evaluate_bounds(&rep, SValue::half(), 4, None);
                    assert!(sheet.general_holds);
                    assert!(sheet.general.ratio <= 1.0 + 1e-9);
                }
            }
        }
    }

    #[test]
    fn klp_cases() {
        assert_eq!(KlpCase::classify(7, 2), KlpCase::CaseI);
        assert_eq!(KlpCase::classify(7, 6), KlpCase::CaseI);
        assert_eq!(KlpCase::classify(7, 4), KlpCase::CaseII);
        assert_eq!(KlpCase::classify(5, 2), KlpCase::CaseII);
        assert_eq!(KlpCase::classify(9, 6), KlpCase::CaseII);
        assert_eq!(KlpCase::classify(5, 3), KlpCase::CaseIII);
        assert_eq!(KlpCase::classify(7, 1), KlpCase::NotApplicable);
        assert_eq!(KlpCase::CaseI.size_exponent(6), Some(3));
        assert_eq!(KlpCase::CaseII.size_exponent(4), Some(1));
        assert_eq!(KlpCase::CaseIII.size_exponent(5), Some(2));
    }

    #[test]
    fn improvement_flags_are_exact() {
        let report = |q: u64, d: usize, points: u64, objects: u64| IncidenceReport {
            schema: 1,
            q,
            dim: d,
            points,
            objects,
            object_kind: ObjectKind::Spheres,
            all_zero_offset: false,
            count: 0,
            expected: ratio(points as u128 * objects as u128, q),
            discrepancy: ratio(points as u128 * objects as u128, q),
            per_object: None,
            lifted: None,
        };
        let sheet = evaluate_bounds(&report(5, 2, 5, 26), SValue::half(), 4, None);
        assert!(!sheet.improves_general);
        let sheet = evaluate_bounds(&report(5, 2, 5, 25), SValue::half(), 4, None);
        assert!(sheet.improves_general && !sheet.improves_klp && sheet.klp_window);
        let sheet = evaluate_bounds(&report(5, 2, 5, 126), SValue::half(), 4, None);
        assert!(!sheet.klp_window);
        let sheet = evaluate_bounds(&report(5, 2, 5, 4), SValue::new(3, 10), 2, None);
        assert!(sheet.us.is_none() && sheet.salem_s_in_range);
        assert!(sheet.general.rhs > 0.0 && sheet.salem.rhs > 0.0);
    }
}
