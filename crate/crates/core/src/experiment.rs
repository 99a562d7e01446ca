//! Parameter sweeps and the two fixed experiments (sharpness, sum-product).

use std::cmp::Ordering;
use std::time::Instant;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constructions::{
    arith_sets, base_set, isotropic_subspace, random_s_sidon, random_salem_subset, random_subset,
    salem_subset_size, sidon_parabola, zero_radius_spheres, Construction, ConstructionKind, ConstructionRecipe,
    DEFAULT_MAX_ATTEMPTS, DEFAULT_SALEM_C,
};
use crate::energy::{additive_energy, salem_assess, SalemAssessment};
use crate::error::{LabError, Result};
use crate::exact::{compare_products, powf, Rational, SValue};
use crate::field::{FieldDesc, Scalar};
use crate::geometry::{Limits, PointSet, Sphere};
use crate::incidence::{count_incidences, count_incidences_lifted, evaluate_bounds, spheres_as_objects, BoundSheet, IncidenceReport};
use crate::report::OutputFormat;

/// Band in which the sharpness ratio is reported as comparable.
pub const SHARPNESS_BAND: (f64, f64) = (0.25, 4.0);

/// Constructions a sweep can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepRecipe {
    /// Random Salem subset of an isotropic subspace.
    SalemSubset,
    RandomSubset,
    SidonParabola,
    RandomSSidon,
}

impl SweepRecipe {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepRecipe::SalemSubset => "salem_subset",
            SweepRecipe::RandomSubset => "random_subset",
            SweepRecipe::SidonParabola => "sidon_parabola",
            SweepRecipe::RandomSSidon => "random_s_sidon",
        }
    }
}

/// The sphere family each point set is counted against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SphereFamily {
    /// `||x - a|| = 0` for every `a` in the isotropic subspace.
    ZeroRadius,
    /// `||x - a|| = 1` for every `a` in `P`.
    UnitAtPoints,
}

impl SphereFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            SphereFamily::ZeroRadius => "zero_radius",
            SphereFamily::UnitAtPoints => "unit_at_points",
        }
    }
}

/// One construction entry with optional overrides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SweepConstruction {
    pub name: SweepRecipe,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<SValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_attempts: Option<u32>,
    /// Set size for `random_subset`; defaults to `floor(q^{d/(8s)})`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spheres: Option<SphereFamily>,
}

impl SweepConstruction {
    pub fn new(name: SweepRecipe) -> SweepConstruction {
        SweepConstruction { name, c: None, max_attempts: None, size: None, spheres: None }
    }

    fn sphere_family(&self) -> SphereFamily {
        self.spheres.unwrap_or(match self.name {
            SweepRecipe::SalemSubset => SphereFamily::ZeroRadius,
            _ => SphereFamily::UnitAtPoints,
        })
    }
}

impl<'de> Deserialize<'de> for SweepEntry {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Wire {
            Name(SweepRecipe),
            Full(SweepConstruction),
        }
        Ok(SweepEntry(match Wire::deserialize(deserializer)? {
            Wire::Name(name) => SweepConstruction::new(name),
            Wire::Full(c) => c,
        }))
    }
}

/// A construction entry that also accepts a bare recipe name.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SweepEntry(pub SweepConstruction);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SeedConfig {
    pub master: u64,
    pub replicates: u32,
}

impl Default for SeedConfig {
    fn default() -> Self {
        SeedConfig { master: 1, replicates: 1 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

/// A parameter grid. Rows are produced for every
/// field x dim x s x u x construction x replicate, in that order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct SweepConfig {
    pub fields: Vec<String>,
    pub dims: Vec<usize>,
    pub s_values: Vec<SValue>,
    pub u_values: Vec<u32>,
    pub constructions: Vec<SweepEntry>,
    pub seeds: SeedConfig,
    pub limits: Limits,
    pub output: OutputConfig,
    /// Record wall-clock time per row. Off by default so output is reproducible.
    pub timing: bool,
}

impl Default for SweepConfig {
    /// Salem subsets against zero-radius spheres, `q <= 13`, `d in {2, 4}`,
    /// `s in {0.3, 0.4, 0.5}`.
    fn default() -> Self {
        SweepConfig {
            fields: ["3", "5", "7", "9", "11", "13"].map(String::from).to_vec(),
            dims: vec![2, 4],
            s_values: vec![SValue::new(3, 10), SValue::new(2, 5), SValue::half()],
            u_values: vec![4],
            constructions: vec![SweepEntry(SweepConstruction::new(SweepRecipe::SalemSubset))],
            seeds: SeedConfig::default(),
            limits: Limits::default(),
            output: OutputConfig::default(),
            timing: false,
        }
    }
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<SweepConfig> {
        serde_json::from_str(text).map_err(|e| LabError::Parse(format!("sweep config: {e}")))
    }

    /// Checks everything that would make the whole sweep meaningless.
    pub fn validate(&self) -> Result<Vec<FieldDesc>> {
        let empty = |what: &str| LabError::OutOfRange(format!("sweep config lists no {what}"));
        if self.fields.is_empty() {
            return Err(empty("fields"));
        }
        if self.dims.is_empty() {
            return Err(empty("dims"));
        }
        if self.s_values.is_empty() {
            return Err(empty("sValues"));
        }
        if self.u_values.is_empty() {
            return Err(empty("uValues"));
        }
        if self.constructions.is_empty() {
            return Err(empty("constructions"));
        }
        if self.seeds.replicates == 0 {
            return Err(LabError::OutOfRange("replicates must be at least 1".into()));
        }
        if let Some(&d) = self.dims.iter().find(|&&d| d == 0) {
            return Err(LabError::OutOfRange(format!("dimension {d}")));
        }
        if let Some(&u) = self.u_values.iter().find(|&&u| u < 2 || u % 2 == 1) {
            return Err(LabError::InvalidMoment(u.to_string()));
        }
        if let Some(s) = self.s_values.iter().find(|s| s.numer() <= 0 || s.ratio() > Ratio::from_integer(1)) {
            return Err(LabError::OutOfRange(format!("s = {s} must lie in (0, 1]")));
        }
        self.fields.iter().map(|f| FieldDesc::from_spec(f)).collect()
    }

    pub fn point_count(&self) -> u64 {
        (self.fields.len() * self.dims.len() * self.s_values.len() * self.u_values.len() * self.constructions.len())
            as u64
            * self.seeds.replicates as u64
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the grid point with canonical index `index`.
pub fn point_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Sweep,
    Sharpness,
    Sumproduct,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    /// A precondition failed; `reason` says which.
    Skipped,
    /// An exact identity was violated.
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyDigest {
    pub set_size: u64,
    pub lambda4: u128,
    /// `|P|^4 / q^d`.
    pub random_term: Rational,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncidenceDigest {
    pub spheres: String,
    pub points: u64,
    pub objects: u64,
    pub count: u64,
    pub expected: Rational,
    pub discrepancy: Rational,
    /// The same count obtained through the lifting.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lifted_count: Option<u64>,
}

impl IncidenceDigest {
    fn new(spheres: &str, report: &IncidenceReport) -> IncidenceDigest {
        IncidenceDigest {
            spheres: spheres.to_string(),
            points: report.points,
            objects: report.objects,
            count: report.count,
            expected: report.expected.clone(),
            discrepancy: report.discrepancy.clone(),
            lifted_count: report.lifted.map(|l| l.lifted_count),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpnessDigest {
    pub w_size: u64,
    pub norms_checked: u64,
    pub norms_exhaustive: bool,
    pub pairs_exhaustive: bool,
    /// `|P| |S|`, which the count must equal.
    pub product: u64,
    /// `|I - |P||S|/q| / (q^{d/4} |P|^{1-s} |S|^{3/4})`.
    pub ratio: f64,
    pub ratio_in_band: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumProductDigest {
    pub base: String,
    pub a_size: u64,
    pub sumset_size: u64,
    pub d_squares_size: u64,
    pub lambda4_a: u128,
    /// `|A|^{2d}`, the guaranteed number of incidences.
    pub lower_bound: u128,
    pub incidences: u64,
    /// `|A|^d |A+A|^d |dA^2| / q`.
    pub master_main: Rational,
    /// `q^{d/4} |A|^{d(1-s)} (|A+A|^d |dA^2|)^{3/4}`.
    pub master_unit: f64,
    /// Smallest `C_1` for which the master inequality holds on this instance.
    pub c1_required: f64,
    /// `(I - main) / unit`, the constant realised by the incidence bound.
    pub c1_incidence: f64,
    /// `|A+A|^d |dA^2| / (q |A|^d)`.
    pub case1_c: f64,
    /// `|A+A|^d |dA^2| / (q^{-d/3} |A|^{4d(1+s)/3})`.
    pub case2_c: f64,
    /// The case with the larger constant.
    pub dominant_case: u8,
    /// `|A|^{4s} <= q`.
    pub size_condition: bool,
}

/// One output row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub schema: u32,
    pub index: u64,
    pub experiment: Experiment,
    pub field: String,
    pub q: u64,
    pub d: usize,
    pub s: SValue,
    pub u: u32,
    pub construction: String,
    pub replicate: u32,
    pub seed: u64,
    pub status: RowStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recipe: Option<ConstructionRecipe>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<EnergyDigest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub salem: Option<SalemAssessment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub incidence: Option<IncidenceDigest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundSheet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sharpness: Option<SharpnessDigest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sumproduct: Option<SumProductDigest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<u64>,
}

impl ResultRow {
    fn blank(experiment: Experiment, field: &FieldDesc, d: usize, s: SValue, u: u32, construction: &str) -> ResultRow {
        ResultRow {
            schema: 1,
            index: 0,
            experiment,
            field: field.spec_string(),
            q: field.q() as u64,
            d,
            s,
            u,
            construction: construction.to_string(),
            replicate: 0,
            seed: 0,
            status: RowStatus::Ok,
            reason: None,
            message: None,
            recipe: None,
            energy: None,
            salem: None,
            incidence: None,
            bounds: None,
            sharpness: None,
            sumproduct: None,
            wall_ms: None,
        }
    }

    fn record_error(&mut self, e: &LabError) {
        self.status = if e.exit_code() == 1 { RowStatus::Error } else { RowStatus::Skipped };
        self.reason = Some(e.code().to_string());
        self.message = Some(e.to_string());
    }

    /// `discrepancy / salem rhs`, when the row has a bound sheet.
    pub fn salem_ratio(&self) -> Option<f64> {
        self.bounds.as_ref().map(|b| b.salem.ratio)
    }
}

struct Measured {
    recipe: ConstructionRecipe,
    energy: EnergyDigest,
    salem: SalemAssessment,
    incidence: IncidenceDigest,
    bounds: BoundSheet,
}

fn measure(points: &PointSet, spheres: &[Sphere], family: &str, recipe: ConstructionRecipe, s: SValue, u: u32, limits: &Limits) -> Result<Measured> {
    let energy = additive_energy(points, 2, limits)?;
    let salem = salem_assess(points, s, u / 2, limits)?;
    let report = count_incidences_lifted(points, spheres, limits)?;
    let bounds = evaluate_bounds(&report, s, u, None);
    Ok(Measured {
        recipe,
        energy: EnergyDigest { set_size: energy.set_size, lambda4: energy.lambda, random_term: energy.random_term },
        salem,
        incidence: IncidenceDigest::new(family, &report),
        bounds,
    })
}

fn unit_spheres(points: &PointSet) -> Vec<Sphere> {
    points.iter().map(|a| Sphere::new(a.clone(), Scalar::ONE)).collect()
}

fn run_point(field: &FieldDesc, d: usize, s: SValue, u: u32, entry: &SweepConstruction, seed: u64, limits: &Limits) -> Result<Measured> {
    let family = entry.sphere_family();
    let attempts = entry.max_attempts.unwrap_or(DEFAULT_MAX_ATTEMPTS);
    let (construction, w): (Construction, _) = match entry.name {
        SweepRecipe::SalemSubset => {
            let w = isotropic_subspace(field, d, limits)?;
            let c = random_salem_subset(&w, s, seed, entry.c.unwrap_or(DEFAULT_SALEM_C), attempts, limits)?;
            (c, Some(w))
        }
        SweepRecipe::RandomSubset => {
            let size = entry.size.unwrap_or_else(|| salem_subset_size(field.q(), d, s));
            (random_subset(field, d, size, seed, limits)?, None)
        }
        SweepRecipe::SidonParabola => {
            let c = sidon_parabola(field.p() as u64, field.n(), d, limits)?;
            if c.points.field() != field {
                return Err(LabError::UnsupportedRegime("the parabola uses the default modulus".into()));
            }
            (c, None)
        }
        SweepRecipe::RandomSSidon => (random_s_sidon(field, d, s, seed, attempts, limits)?, None),
    };
    let spheres = match (family, &w) {
        (SphereFamily::ZeroRadius, Some(w)) => zero_radius_spheres(w),
        (SphereFamily::ZeroRadius, None) => {
            return Err(LabError::UnsupportedRegime("zero-radius spheres need an isotropic subspace".into()))
        }
        (SphereFamily::UnitAtPoints, _) => unit_spheres(&construction.points),
    };
    measure(&construction.points, &spheres, family.as_str(), construction.recipe, s, u, limits)
}

fn timed<T>(timing: bool, f: impl FnOnce() -> T) -> (T, Option<u64>) {
    let start = Instant::now();
    let out = f();
    (out, timing.then(|| start.elapsed().as_millis() as u64))
}

fn fill(row: &mut ResultRow, measured: Result<Measured>) {
    match measured {
        Ok(m) => {
            row.recipe = Some(m.recipe);
            row.energy = Some(m.energy);
            row.salem = Some(m.salem);
            row.incidence = Some(m.incidence);
            row.bounds = Some(m.bounds);
        }
        Err(e) => row.record_error(&e),
    }
}

/// Runs every grid point. Per-row failures are recorded in the row; only an
/// invalid configuration is an error.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<ResultRow>> {
    let fields = config.validate()?;
    let mut points = Vec::new();
    for field in &fields {
        for &d in &config.dims {
            for &s in &config.s_values {
                for &u in &config.u_values {
                    for entry in &config.constructions {
                        for replicate in 0..config.seeds.replicates {
                            points.push((field, d, s, u, &entry.0, replicate));
                        }
                    }
                }
            }
        }
    }
    Ok(points
        .into_par_iter()
        .enumerate()
        .map(|(index, (field, d, s, u, entry, replicate))| {
            let seed = point_seed(config.seeds.master, index as u64);
            let mut row = ResultRow::blank(Experiment::Sweep, field, d, s, u, entry.name.as_str());
            row.index = index as u64;
            row.replicate = replicate;
            row.seed = seed;
            let (measured, ms) = timed(config.timing, || run_point(field, d, s, u, entry, seed, &config.limits));
            fill(&mut row, measured);
            row.wall_ms = ms;
            row
        })
        .collect())
}

/// Zero-radius spheres on an isotropic `W` against a random Salem subset of `W`.
///
/// Every point lies on every sphere, so `I = |P| |S|` is asserted exactly;
/// the ratio of the discrepancy to the Salem bound is reported.
pub fn sharpness_experiment(field: &FieldDesc, d: usize, s: SValue, seed: u64, limits: &Limits) -> Result<ResultRow> {
    if s.ratio() <= Ratio::new(1, 4) || s.ratio() > Ratio::new(1, 2) {
        return Err(LabError::OutOfRange(format!("s = {s} must lie in (1/4, 1/2]")));
    }
    let w = isotropic_subspace(field, d, limits)?;
    let c = random_salem_subset(&w, s, seed, DEFAULT_SALEM_C, DEFAULT_MAX_ATTEMPTS, limits)?;
    let spheres = zero_radius_spheres(&w);
    let m = measure(&c.points, &spheres, SphereFamily::ZeroRadius.as_str(), c.recipe, s, 4, limits)?;
    let product = m.incidence.points * m.incidence.objects;
    if m.incidence.count != product {
        return Err(LabError::HardAssertion(format!("I(P, S) = {} but |P||S| = {product}", m.incidence.count)));
    }
    let ratio = m.bounds.salem.ratio;
    let mut row = ResultRow::blank(Experiment::Sharpness, field, d, s, 4, ConstructionKind::RandomSalemSubset.as_str());
    row.seed = seed;
    row.sharpness = Some(SharpnessDigest {
        w_size: w.len() as u64,
        norms_checked: w.audit.norms_checked,
        norms_exhaustive: w.audit.norms_exhaustive,
        pairs_exhaustive: w.audit.pairs_exhaustive,
        product,
        ratio,
        ratio_in_band: (SHARPNESS_BAND.0..=SHARPNESS_BAND.1).contains(&ratio),
    });
    fill(&mut row, Ok(m));
    Ok(row)
}

/// Points `A^d` against spheres centered on `(A+A)^d` with radii in `dA^2`.
///
/// Each pair `(x, u)` in `A^d x A^d` gives the incidence `x` on the sphere
/// centered at `x + u` of radius `||u||`, so `I >= |A|^{2d}` is asserted.
pub fn sumproduct_experiment(a: &PointSet, base: &str, d: usize, s: SValue, limits: &Limits) -> Result<ResultRow> {
    if s.numer() <= 0 || s.ratio() > Ratio::from_integer(1) {
        return Err(LabError::OutOfRange(format!("s = {s} must lie in (0, 1]")));
    }
    let field = a.field();
    let sets = arith_sets(a, d, limits)?;
    let centers = arith_sets(&sets.sumset, d, limits)?.power;
    let radii: Vec<Scalar> = sets.d_squares.iter().map(|r| r.entries()[0]).collect();
    let sphere_count = centers.len() as u128 * radii.len() as u128;
    if sphere_count > limits.grid as u128 {
        return Err(LabError::BudgetExceeded { work: sphere_count, budget: limits.grid });
    }
    let spheres: Vec<Sphere> =
        centers.iter().flat_map(|c| radii.iter().map(move |&r| Sphere::new(c.clone(), r))).collect();
    let report = count_incidences(&sets.power, &spheres_as_objects(&spheres), limits)?;
    let a_size = a.len() as u64;
    let lower_bound = (a_size as u128).pow(2 * d as u32);
    if (report.count as u128) < lower_bound {
        return Err(LabError::HardAssertion(format!("I(P, S) = {} < |A|^(2d) = {lower_bound}", report.count)));
    }
    let q = field.q() as f64;
    let (af, sf, df) = (a_size as f64, spheres.len() as f64, d as f64);
    let unit = q.powf(df / 4.0) * powf(af, s.affine(1, -1) * d as i64) * sf.powf(0.75);
    let main = report.expected.clone();
    let excess = |v: f64| (v - main.to_f64()).max(0.0) / unit;
    let case1_c = sf / (q * af.powf(df));
    let case2_c = sf / (q.powf(-df / 3.0) * powf(af, s.affine(1, 1) * Ratio::new(4 * d as i64, 3)));
    let lambda4_a = additive_energy(a, 2, limits)?.lambda;
    let mut recipe = ConstructionRecipe::new(ConstructionKind::ArithSets, field, d, "P = A^d; spheres centered on (A+A)^d with radii in dA^2");
    recipe.size = Some(a_size);
    recipe.notes.push(format!("A = {base}"));
    let digest = SumProductDigest {
        base: base.to_string(),
        a_size,
        sumset_size: sets.sumset.len() as u64,
        d_squares_size: sets.d_squares.len() as u64,
        lambda4_a,
        lower_bound,
        incidences: report.count,
        master_main: main.clone(),
        master_unit: unit,
        c1_required: excess(lower_bound as f64),
        c1_incidence: excess(report.count as f64),
        case1_c,
        case2_c,
        dominant_case: if case1_c >= case2_c { 1 } else { 2 },
        size_condition: compare_products(&[(a_size, s.ratio() * 4)], &[(field.q() as u64, Ratio::from_integer(1))])
            != Ordering::Greater,
    };
    let energy = additive_energy(&sets.power, 2, limits)?;
    let mut row = ResultRow::blank(Experiment::Sumproduct, field, d, s, 4, "sumproduct");
    row.recipe = Some(recipe);
    row.energy = Some(EnergyDigest { set_size: energy.set_size, lambda4: energy.lambda, random_term: energy.random_term });
    row.incidence = Some(IncidenceDigest::new("sumproduct", &report));
    row.bounds = Some(evaluate_bounds(&report, s, 4, None));
    row.sumproduct = Some(digest);
    Ok(row)
}

/// Builds `A` from a generator spec and runs the sum-product experiment.
pub fn sumproduct_from_spec(field: &FieldDesc, spec: &str, d: usize, s: SValue, seed: u64, limits: &Limits) -> Result<ResultRow> {
    let a = base_set(field, spec, seed)?;
    let mut row = sumproduct_experiment(&a, spec, d, s, limits)?;
    row.seed = seed;
    Ok(row)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::field;

    fn config(fields: &[&str], dims: &[usize], s: &[SValue], replicates: u32) -> SweepConfig {
        SweepConfig {
            fields: fields.iter().map(|f| f.to_string()).collect(),
            dims: dims.to_vec(),
            s_values: s.to_vec(),
            seeds: SeedConfig { master: 7, replicates },
            ..SweepConfig::default()
        }
    }

    #[test]
    fn sweep_grid_arithmetic_and_skips() {
        let rows = run_sweep(&config(&["5", "13"], &[2], &[SValue::half()], 3)).unwrap();
        assert_eq!(rows.len(), 6);
        assert!(rows.iter().all(|r| r.status == RowStatus::Ok));
        assert_eq!(rows.iter().map(|r| r.index).collect::<Vec<_>>(), (0..6).collect::<Vec<_>>());
        let rows = run_sweep(&config(&["7"], &[2], &[SValue::half()], 1)).unwrap();
        assert_eq!(rows[0].status, RowStatus::Skipped);
        assert_eq!(rows[0].reason.as_deref(), Some("UnsupportedRegime"));
        assert!(rows[0].bounds.is_none());
    }

    #[test]
    fn sweep_is_deterministic() {
        let cfg = config(&["5", "9"], &[2, 4], &[SValue::new(3, 10), SValue::half()], 2);
        let a = run_sweep(&cfg).unwrap();
        let b = run_sweep(&cfg).unwrap();
        assert_eq!(a, b);
        let seeds: std::collections::BTreeSet<u64> = a.iter().map(|r| r.seed).collect();
        assert_eq!(seeds.len(), a.len());
    }

    #[test]
    fn sweep_config_errors() {
        let mut cfg = SweepConfig::default();
        cfg.fields = vec!["6".into()];
        assert!(matches!(run_sweep(&cfg), Err(LabError::NonPrime(6))));
        assert!(SweepConfig::from_json(r#"{"fields": ["5"], "bogus": 1}"#).is_err());
        let cfg = SweepConfig::from_json(
            r#"{"fields": ["5"], "dims": [2], "sValues": [0.5], "constructions": ["salem_subset", {"name": "random_subset", "size": 4}]}"#,
        )
        .unwrap();
        assert_eq!(cfg.constructions[1].0.size, Some(4));
        assert_eq!(cfg.point_count(), 2);
        let mut bad = cfg.clone();
        bad.u_values = vec![3];
        assert!(matches!(bad.validate(), Err(LabError::InvalidMoment(_))));
    }

    #[test]
    fn other_constructions_run() {
        let mut cfg = config(&["5", "3^2"], &[2], &[SValue::new(3, 10)], 1);
        cfg.constructions = [SweepRecipe::RandomSubset, SweepRecipe::SidonParabola, SweepRecipe::RandomSSidon]
            .map(|r| SweepEntry(SweepConstruction::new(r)))
            .to_vec();
        let rows = run_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 6);
        for r in &rows {
            assert_eq!(r.status, RowStatus::Ok, "{r:?}");
            let inc = r.incidence.as_ref().unwrap();
            assert_eq!(inc.lifted_count, Some(inc.count));
            assert!(r.bounds.as_ref().unwrap().general_holds);
        }
    }

    #[test]
    fn sharpness_examples() {
        let row = sharpness_experiment(&field(5, 1), 2, SValue::half(), 1, &Limits::default()).unwrap();
        let sh = row.sharpness.as_ref().unwrap();
        let inc = row.incidence.as_ref().unwrap();
        assert_eq!(inc.objects, 5);
        assert_eq!(inc.count, inc.points * 5);
        assert!(sh.ratio_in_band && sh.norms_exhaustive);
        let row = sharpness_experiment(&field(3, 1), 4, SValue::half(), 1, &Limits::default()).unwrap();
        let inc = row.incidence.unwrap();
        assert_eq!(inc.count, inc.points * 9);
        let err = sharpness_experiment(&field(7, 1), 2, SValue::half(), 1, &Limits::default()).unwrap_err();
        assert!(matches!(err, LabError::UnsupportedRegime(_)));
    }

    #[test]
    fn sumproduct_examples() {
        let f = field(5, 1);
        let a = PointSet::parse(&f, 1, "(0);(1)").unwrap();
        let row = sumproduct_experiment(&a, "0,1", 2, SValue::half(), &Limits::default()).unwrap();
        let sp = row.sumproduct.unwrap();
        assert_eq!((sp.sumset_size, sp.d_squares_size, sp.lower_bound), (3, 3, 16));
        assert!(sp.incidences >= 16);

        let full = PointSet::full_grid(&f, 1, 100).unwrap();
        let sp = sumproduct_experiment(&full, "all", 2, SValue::half(), &Limits::default()).unwrap().sumproduct.unwrap();
        assert_eq!(sp.sumset_size.pow(2) * sp.d_squares_size, 125);
        assert!(sp.case1_c >= 1.0);
        assert_eq!(sp.incidences, 625);

        let row = sumproduct_from_spec(&field(101, 1), "squares:101", 1, SValue::half(), 0, &Limits::default()).unwrap();
        assert_eq!(row.sumproduct.unwrap().a_size, 51);
    }
}
