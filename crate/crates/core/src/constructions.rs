//! Explicit set constructions: isotropic subspaces, random Salem subsets,
//! zero-radius sphere families, the parabola Sidon set, the weak-not-strong
//! example, random s-Sidon sets and sum-product input sets.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use num_rational::Ratio;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{additive_energy, representation_counts, RepKind};
use crate::error::{LabError, Result};
use crate::exact::{compare_products, floor_pow, SValue};
use crate::field::{is_prime, make_field, FieldDesc, Scalar};
use crate::geometry::{dot_unchecked, grid_size, quadratic_norm, Limits, PointSet, Sphere, Vector};

/// Exhaustive isotropy audits stop at this many elements.
pub const AUDIT_EXHAUSTIVE_NORMS: u64 = 10_000;
/// Exhaustive pairwise audits stop at this many elements.
pub const AUDIT_EXHAUSTIVE_PAIRS: u64 = 1_000;
/// Random samples used above the exhaustive thresholds.
pub const AUDIT_SAMPLES: usize = 1_000;

pub const DEFAULT_SALEM_C: SValue = SValue::const_int(5);
pub const DEFAULT_MAX_ATTEMPTS: u32 = 64;

/// What a construction was.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstructionKind {
    IsotropicSubspace,
    RandomSalemSubset,
    ZeroRadiusSpheres,
    SidonParabola,
    WeakNotStrong,
    RandomSSidon,
    ArithSets,
    RandomSubset,
    FullGrid,
    Explicit,
}

impl ConstructionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ConstructionKind::IsotropicSubspace => "isotropic_subspace",
            ConstructionKind::RandomSalemSubset => "random_salem_subset",
            ConstructionKind::ZeroRadiusSpheres => "zero_radius_spheres",
            ConstructionKind::SidonParabola => "sidon_parabola",
            ConstructionKind::WeakNotStrong => "weak_not_strong",
            ConstructionKind::RandomSSidon => "random_s_sidon",
            ConstructionKind::ArithSets => "arith_sets",
            ConstructionKind::RandomSubset => "random_subset",
            ConstructionKind::FullGrid => "full_grid",
            ConstructionKind::Explicit => "explicit",
        }
    }
}

/// Reproducibility record attached to every constructed set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionRecipe {
    pub name: ConstructionKind,
    pub field: String,
    pub q: u64,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<SValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<SValue>,
    /// Real-valued size target before flooring.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_size: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attempts: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<u64>,
    /// How the set is built, in words.
    pub method: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ConstructionRecipe {
    pub fn new(name: ConstructionKind, field: &FieldDesc, dim: usize, method: impl Into<String>) -> Self {
        ConstructionRecipe {
            name,
            field: field.spec_string(),
            q: field.q() as u64,
            dim,
            s: None,
            seed: None,
            c: None,
            target_size: None,
            size: None,
            attempts: None,
            threshold: None,
            method: method.into(),
            notes: Vec::new(),
        }
    }
}

/// A point set together with its recipe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Construction {
    pub points: PointSet,
    pub recipe: ConstructionRecipe,
}

/// What the isotropy audit covered.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsotropyAudit {
    pub norms_checked: u64,
    pub pairs_checked: u64,
    pub norms_exhaustive: bool,
    pub pairs_exhaustive: bool,
}

/// A totally isotropic subspace `W` of F_q^d with `dim W = d/2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubspaceBasis {
    pub dim: usize,
    pub basis: Vec<Vector>,
    pub elements: PointSet,
    /// `sqrt(-1)` used for coordinate pairs, when `q = 1 mod 4`.
    pub sqrt_minus_one: Option<Scalar>,
    /// `(a, b)` with `a^2 + b^2 = -1`, used for blocks of four.
    pub block_params: Option<(Scalar, Scalar)>,
    pub audit: IsotropyAudit,
    pub recipe: ConstructionRecipe,
}

impl SubspaceBasis {
    pub fn field(&self) -> &FieldDesc {
        self.elements.field()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

fn unit_pair(d: usize, pos: usize, first: Scalar, second: Scalar) -> Vector {
    let mut v = vec![Scalar::ZERO; d];
    v[pos] = first;
    v[pos + 1] = second;
    Vector::new(v)
}

/// All `F_q`-linear combinations of `basis`.
fn span(field: &FieldDesc, dim: usize, basis: &[Vector], limits: &Limits) -> Result<PointSet> {
    let count = grid_size(field.q(), basis.len(), limits.grid)?;
    let q = field.q();
    let points = (0..count).map(|code| {
        let coeffs = Vector::decode(code, q, basis.len());
        let mut acc = vec![Scalar::ZERO; dim];
        for (c, b) in coeffs.entries().iter().zip(basis) {
            for (slot, &x) in acc.iter_mut().zip(b.entries()) {
                *slot = field.add(*slot, field.mul(*c, x));
            }
        }
        Vector::new(acc)
    });
    PointSet::new(field, dim, points)
}

/// Checks `||w|| = 0` and `w . w' = 0` on `W`.
///
/// Basis pairs are always checked, which already covers all of `W` by
/// bilinearity; small subspaces are additionally scanned exhaustively and
/// large ones are sampled.
pub fn audit_isotropy(field: &FieldDesc, basis: &[Vector], elements: &PointSet) -> Result<IsotropyAudit> {
    let fail = |what: String| Err(LabError::HardAssertion(format!("isotropy audit: {what}")));
    for (i, x) in basis.iter().enumerate() {
        for y in &basis[i..] {
            if !dot_unchecked(field, x, y).is_zero() {
                return fail(format!("basis dot {x} . {y} is nonzero"));
            }
        }
    }
    let pts = elements.points();
    let n = pts.len() as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let norms_exhaustive = n <= AUDIT_EXHAUSTIVE_NORMS;
    let norm_idx: Vec<usize> = if norms_exhaustive {
        (0..pts.len()).collect()
    } else {
        (0..AUDIT_SAMPLES).map(|_| rng.gen_range(0..pts.len())).collect()
    };
    for &i in &norm_idx {
        if !quadratic_norm(field, &pts[i]).is_zero() {
            return fail(format!("norm of {} is nonzero", pts[i]));
        }
    }
    let pairs_exhaustive = n <= AUDIT_EXHAUSTIVE_PAIRS;
    let pairs: Vec<(usize, usize)> = if pairs_exhaustive {
        (0..pts.len()).flat_map(|i| (i..pts.len()).map(move |j| (i, j))).collect()
    } else {
        (0..AUDIT_SAMPLES).map(|_| (rng.gen_range(0..pts.len()), rng.gen_range(0..pts.len()))).collect()
    };
    for &(i, j) in &pairs {
        if !dot_unchecked(field, &pts[i], &pts[j]).is_zero() {
            return fail(format!("dot {} . {} is nonzero", pts[i], pts[j]));
        }
    }
    Ok(IsotropyAudit {
        norms_checked: norm_idx.len() as u64,
        pairs_checked: pairs.len() as u64 + (basis.len() * (basis.len() + 1) / 2) as u64,
        norms_exhaustive,
        pairs_exhaustive,
    })
}

/// A totally isotropic subspace of dimension `d/2`.
///
/// For `q = 1 mod 4` the basis pairs coordinates as `e_{2l-1} + i e_{2l}` with
/// `i^2 = -1`. For `q = 3 mod 4` and `4 | d` each block of four coordinates
/// contributes `(1, 0, a, b)` and `(0, 1, b, -a)` with `a^2 + b^2 = -1`.
pub fn isotropic_subspace(field: &FieldDesc, d: usize, limits: &Limits) -> Result<SubspaceBasis> {
    if d == 0 || d % 2 == 1 {
        return Err(LabError::UnsupportedRegime(format!("d = {d} must be even and positive")));
    }
    let q = field.q();
    let mut recipe;
    let (basis, sqrt_minus_one, block_params) = if q % 4 == 1 {
        let i = field
            .sqrt_of_minus_one()
            .ok_or_else(|| LabError::HardAssertion(format!("F_{q} has no square root of -1")))?;
        recipe = ConstructionRecipe::new(
            ConstructionKind::IsotropicSubspace,
            field,
            d,
            "coordinate pairs (1, i) with i^2 = -1",
        );
        if d == 2 {
            recipe.notes.push("d = 2: a single coordinate pair".into());
        }
        let basis = (0..d / 2).map(|l| unit_pair(d, 2 * l, Scalar::ONE, i)).collect();
        (basis, Some(i), None)
    } else if d % 4 == 0 {
        let (a, b) = field.two_squares_minus_one();
        recipe = ConstructionRecipe::new(
            ConstructionKind::IsotropicSubspace,
            field,
            d,
            "blocks (1, 0, a, b), (0, 1, b, -a) with a^2 + b^2 = -1",
        );
        let mut basis = Vec::with_capacity(d / 2);
        for block in 0..d / 4 {
            let mut v = vec![Scalar::ZERO; d];
            let mut w = vec![Scalar::ZERO; d];
            let o = 4 * block;
            v[o] = Scalar::ONE;
            v[o + 2] = a;
            v[o + 3] = b;
            w[o + 1] = Scalar::ONE;
            w[o + 2] = b;
            w[o + 3] = field.neg(a);
            basis.push(Vector::new(v));
            basis.push(Vector::new(w));
        }
        (basis, None, Some((a, b)))
    } else {
        return Err(LabError::UnsupportedRegime(format!(
            "no isotropic construction for q = {q} = 3 mod 4 with d = {d} = 2 mod 4"
        )));
    };
    let elements = span(field, d, &basis, limits)?;
    let audit = audit_isotropy(field, &basis, &elements)?;
    recipe.size = Some(elements.len() as u64);
    Ok(SubspaceBasis { dim: d, basis, elements, sqrt_minus_one, block_params, audit, recipe })
}

fn check_attempts(max_attempts: u32) -> Result<()> {
    if max_attempts == 0 {
        return Err(LabError::OutOfRange("max attempts must be at least 1".into()));
    }
    Ok(())
}

/// `N = floor(q^{d/(8s)})`, the Salem subset size.
pub fn salem_subset_size(q: u32, d: usize, s: SValue) -> u64 {
    floor_pow(q as u64, Ratio::new(d as i64, 8) / s.ratio())
}

/// `Lambda_4 <= C N^{4-4s}`, decided exactly.
pub fn salem_acceptance(lambda4: u128, n: u64, s: SValue, c: SValue) -> bool {
    let Ok(lambda) = u64::try_from(lambda4) else { return false };
    let lhs = [(lambda, Ratio::from_integer(1)), (c.denom() as u64, Ratio::from_integer(1))];
    let rhs = [(c.numer() as u64, Ratio::from_integer(1)), (n, s.affine(4, -4))];
    compare_products(&lhs, &rhs) != Ordering::Greater
}

/// A uniformly random `N`-subset of `W`, redrawn until `Lambda_4 <= C N^{4-4s}`.
pub fn random_salem_subset(
    w: &SubspaceBasis,
    s: SValue,
    seed: u64,
    c: SValue,
    max_attempts: u32,
    limits: &Limits,
) -> Result<Construction> {
    if s.ratio() <= Ratio::new(1, 4) || s.ratio() > Ratio::new(1, 2) {
        return Err(LabError::OutOfRange(format!("s = {s} must lie in (1/4, 1/2]")));
    }
    if c.numer() <= 0 {
        return Err(LabError::OutOfRange(format!("C = {c} must be positive")));
    }
    check_attempts(max_attempts)?;
    let field = w.field();
    let n = salem_subset_size(field.q(), w.dim, s);
    if n > w.len() as u64 {
        return Err(LabError::OutOfRange(format!("N = {n} exceeds |W| = {}", w.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = w.elements.points();
    for attempt in 1..=max_attempts {
        let chosen = sample(&mut rng, pts.len(), n as usize).into_iter().map(|i| pts[i].clone());
        let set = PointSet::new(field, w.dim, chosen)?;
        let lambda = additive_energy(&set, 2, limits)?.lambda;
        if salem_acceptance(lambda, n, s, c) {
            let mut recipe = ConstructionRecipe::new(
                ConstructionKind::RandomSalemSubset,
                field,
                w.dim,
                "uniform N-subset of an isotropic subspace, rejection on Lambda_4 <= C N^(4-4s)",
            );
            recipe.s = Some(s);
            recipe.seed = Some(seed);
            recipe.c = Some(c);
            recipe.target_size = Some((field.q() as f64).powf(w.dim as f64 / (8.0 * s.to_f64())));
            recipe.size = Some(n);
            recipe.attempts = Some(attempt);
            recipe.notes.push(format!("subspace: {}", w.recipe.method));
            return Ok(Construction { points: set, recipe });
        }
    }
    Err(LabError::ExhaustedAttempts { attempts: max_attempts })
}

/// `{x : ||x - a|| = 0}` for every `a` in `W`.
pub fn zero_radius_spheres(w: &SubspaceBasis) -> Vec<Sphere> {
    w.elements.iter().map(|a| Sphere::new(a.clone(), Scalar::ZERO)).collect()
}

/// The parabola `{(t, t^2) : t in F_{q0}}` with `q0 = p^{nd/2}`, carried into
/// F_q^d (`q = p^n`) by concatenating the F_p-coefficient vectors of `t` and
/// `t^2` and regrouping them `n` at a time.
pub fn sidon_parabola(p: u64, n: u32, d: usize, limits: &Limits) -> Result<Construction> {
    if !is_prime(p) {
        return Err(LabError::NonPrime(p));
    }
    if p == 2 {
        return Err(LabError::EvenCharacteristic);
    }
    let nd = n * d as u32;
    if nd % 2 == 1 {
        return Err(LabError::OddProduct(nd));
    }
    let field = make_field(p, n, None)?;
    grid_size(field.q(), d, limits.grid.max(1))?;
    let half = make_field(p, nd / 2, None)?;
    let q0 = half.q() as u64;
    let codes = half.elements().map(|t| t.code() as u64 + q0 * half.square(t).code() as u64);
    let points = PointSet::from_codes(&field, d, codes)?;
    let mut recipe = ConstructionRecipe::new(
        ConstructionKind::SidonParabola,
        &field,
        d,
        format!("parabola (t, t^2) over {} mapped by coefficient concatenation", half.spec_string()),
    );
    recipe.size = Some(points.len() as u64);
    Ok(Construction { points, recipe })
}

/// `{x^2 : x^2 < q} U {x^2 + floor(q/4) : x^2 < q}` in F_q, q prime.
pub fn weak_not_strong_set(q: u64) -> Result<Construction> {
    if !is_prime(q) {
        return Err(LabError::NonPrime(q));
    }
    if q < 29 {
        return Err(LabError::OutOfRange(format!("q = {q} must be at least 29")));
    }
    let field = make_field(q, 1, None)?;
    let m = q / 4;
    let squares: Vec<u64> = (0u64..).take_while(|x| x * x < q).map(|x| x * x).collect();
    let codes = squares.iter().flat_map(|&sq| [sq % q, (sq + m) % q]);
    let points = PointSet::from_codes(&field, 1, codes)?;
    let mut recipe =
        ConstructionRecipe::new(ConstructionKind::WeakNotStrong, &field, 1, format!("squares below q and their shift by {m}"));
    recipe.size = Some(points.len() as u64);
    recipe.threshold = Some(m);
    Ok(Construction { points, recipe })
}

/// A uniform `N`-subset of F_q^d, `N = floor(q^{d/(4s)})`, redrawn until every
/// nonzero difference has at most `2 ceil(N^2 / q^d)` representations.
pub fn random_s_sidon(
    field: &FieldDesc,
    d: usize,
    s: SValue,
    seed: u64,
    max_attempts: u32,
    limits: &Limits,
) -> Result<Construction> {
    if s.ratio() < Ratio::new(1, 4) || s.ratio() >= Ratio::new(1, 2) {
        return Err(LabError::OutOfRange(format!("s = {s} must lie in [1/4, 1/2)")));
    }
    check_attempts(max_attempts)?;
    let grid = grid_size(field.q(), d, limits.grid)?;
    let n = floor_pow(field.q() as u64, Ratio::new(d as i64, 4) / s.ratio());
    if n > grid {
        return Err(LabError::OutOfRange(format!("N = {n} exceeds q^d = {grid}")));
    }
    let threshold = 2 * (n as u128 * n as u128).div_ceil(grid as u128) as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 1..=max_attempts {
        let codes = sample(&mut rng, grid as usize, n as usize).into_iter().map(|c| c as u64);
        let set = PointSet::from_codes(field, d, codes)?;
        let rep = representation_counts(&set, RepKind::Difference, limits)?;
        let m = rep.entries().iter().filter(|e| e.0 != 0).map(|e| e.1).max().unwrap_or(0);
        if m <= threshold {
            let mut recipe = ConstructionRecipe::new(
                ConstructionKind::RandomSSidon,
                field,
                d,
                "uniform N-subset, rejection on max nonzero difference count <= 2 ceil(N^2 / q^d)",
            );
            recipe.s = Some(s);
            recipe.seed = Some(seed);
            recipe.target_size = Some((field.q() as f64).powf(d as f64 / (4.0 * s.to_f64())));
            recipe.size = Some(n);
            recipe.attempts = Some(attempt);
            recipe.threshold = Some(threshold);
            return Ok(Construction { points: set, recipe });
        }
    }
    Err(LabError::ExhaustedAttempts { attempts: max_attempts })
}

/// A uniform random subset of F_q^d of the given size.
pub fn random_subset(field: &FieldDesc, d: usize, size: u64, seed: u64, limits: &Limits) -> Result<Construction> {
    let grid = grid_size(field.q(), d, limits.grid)?;
    if size > grid {
        return Err(LabError::OutOfRange(format!("size {size} exceeds q^d = {grid}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let codes = sample(&mut rng, grid as usize, size as usize).into_iter().map(|c| c as u64);
    let points = PointSet::from_codes(field, d, codes)?;
    let mut recipe = ConstructionRecipe::new(ConstructionKind::RandomSubset, field, d, "uniform random subset");
    recipe.seed = Some(seed);
    recipe.size = Some(size);
    Ok(Construction { points, recipe })
}

/// The sets built from a one-dimensional `A` for the sum-product experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArithSets {
    pub sumset: PointSet,
    pub squares: PointSet,
    /// `A^2 + ... + A^2` with `d` summands.
    pub d_squares: PointSet,
    /// `A^d` inside F_q^d.
    pub power: PointSet,
}

fn scalars(a: &PointSet) -> Vec<Scalar> {
    a.iter().map(|v| v.entries()[0]).collect()
}

fn line_set(field: &FieldDesc, values: impl IntoIterator<Item = Scalar>) -> Result<PointSet> {
    let codes: BTreeSet<u64> = values.into_iter().map(|x| x.code() as u64).collect();
    PointSet::from_codes(field, 1, codes)
}

pub fn arith_sets(a: &PointSet, d: usize, limits: &Limits) -> Result<ArithSets> {
    if a.dim() != 1 {
        return Err(LabError::DimensionMismatch { expected: 1, got: a.dim() });
    }
    if d == 0 {
        return Err(LabError::OutOfRange("d must be positive".into()));
    }
    let field = a.field();
    let xs = scalars(a);
    let power_size = (xs.len() as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    if power_size > limits.grid as u128 {
        return Err(LabError::BudgetExceeded { work: power_size, budget: limits.grid });
    }
    let sumset = line_set(field, xs.iter().flat_map(|&x| xs.iter().map(move |&y| field.add(x, y))))?;
    let squares = line_set(field, xs.iter().map(|&x| field.square(x)))?;
    let sq = scalars(&squares);
    let mut acc: BTreeSet<u32> = sq.iter().map(|x| x.code()).collect();
    for _ in 1..d {
        acc = acc
            .iter()
            .flat_map(|&t| sq.iter().map(move |&y| field.add(Scalar::from_code_unchecked(t), y).code()))
            .collect();
    }
    let d_squares = PointSet::from_codes(field, 1, acc.into_iter().map(u64::from))?;
    let q = field.q() as u64;
    let mut codes = vec![0u64];
    for _ in 0..d {
        codes = codes.iter().flat_map(|&c| xs.iter().map(move |x| c * q + x.code() as u64)).collect();
    }
    let power = PointSet::from_codes(field, d, codes)?;
    Ok(ArithSets { sumset, squares, d_squares, power })
}

/// One-dimensional base sets for the sum-product experiment:
/// `squares:N`, `interval:N`, `random:N`, or an explicit list such as `0,1,3`.
pub fn base_set(field: &FieldDesc, spec: &str, seed: u64) -> Result<PointSet> {
    let spec = spec.trim();
    let parse_n = |t: &str| -> Result<u64> {
        let n: u64 = t.trim().parse().map_err(|_| LabError::Parse(format!("set size {t:?}")))?;
        if n > field.q() as u64 {
            return Err(LabError::OutOfRange(format!("size {n} exceeds q = {}", field.q())));
        }
        Ok(n)
    };
    if let Some(n) = spec.strip_prefix("squares:") {
        let n = parse_n(n)?;
        return line_set(field, (0..n as i64).map(|x| field.square(field.from_int(x))));
    }
    if let Some(n) = spec.strip_prefix("interval:") {
        let n = parse_n(n)?;
        return line_set(field, (0..n as i64).map(|x| field.from_int(x)));
    }
    if let Some(n) = spec.strip_prefix("random:") {
        let n = parse_n(n)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let codes = sample(&mut rng, field.q() as usize, n as usize).into_iter().map(|c| c as u64);
        return PointSet::from_codes(field, 1, codes);
    }
    let values = spec
        .trim_matches(|c| c == '{' || c == '}')
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| field.parse_scalar(t))
        .collect::<Result<Vec<_>>>()?;
    line_set(field, values)
}
