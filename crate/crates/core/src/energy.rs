//! Representation functions, additive energies, Fourier coefficients of
//! indicator sets, L^u norms, Salem assessment and the s-Sidon profile.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::exact::{compare_products, Rational, SValue};
use crate::field::{FieldDesc, Scalar};
use crate::geometry::{add_unchecked, dot_unchecked, grid_size, Limits, PointSet, Vector};

/// Largest `|E|^{2k}` the brute-force oracle will enumerate.
pub const ORACLE_LIMIT: u128 = 100_000_000;

/// Addition on vector codes.
///
/// A vector code is a base-p numeral with `n*d` digits, so vector addition is
/// digit-wise addition mod p.
#[derive(Clone, Copy, Debug)]
pub(crate) struct CodeArith {
    p: u64,
    digits: u32,
}

impl CodeArith {
    pub(crate) fn new(field: &FieldDesc, dim: usize) -> CodeArith {
        CodeArith { p: field.p() as u64, digits: field.n() * dim as u32 }
    }

    #[inline]
    pub(crate) fn add(self, mut a: u64, mut b: u64) -> u64 {
        let (mut out, mut place) = (0u64, 1u64);
        for _ in 0..self.digits {
            let s = (a % self.p + b % self.p) % self.p;
            out += s * place;
            place *= self.p;
            a /= self.p;
            b /= self.p;
        }
        out
    }

    #[inline]
    pub(crate) fn neg(self, mut a: u64) -> u64 {
        let (mut out, mut place) = (0u64, 1u64);
        for _ in 0..self.digits {
            let c = a % self.p;
            out += ((self.p - c) % self.p) * place;
            place *= self.p;
            a /= self.p;
        }
        out
    }

    #[inline]
    pub(crate) fn sub(self, a: u64, b: u64) -> u64 {
        self.add(a, self.neg(b))
    }
}

/// Which representation function a [`RepMap`] holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "k")]
pub enum RepKind {
    /// `r(t) = |{(x, y) in E^2 : x - y = t}|`.
    Difference,
    /// `r(t) = |{(x_1..x_k) in E^k : x_1 + ... + x_k = t}|`.
    KFoldSum(u32),
}

/// Exact multiplicities of a representation function, keyed by vector code
/// and sorted by it. Only positive counts are stored.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepMap {
    kind: RepKind,
    field: FieldDesc,
    dim: usize,
    counts: Vec<(u64, u64)>,
}

impl RepMap {
    pub fn kind(&self) -> RepKind {
        self.kind
    }

    /// Number of `t` with a positive count.
    pub fn support_size(&self) -> usize {
        self.counts.len()
    }

    /// `(code, count)` pairs in code order.
    pub fn entries(&self) -> &[(u64, u64)] {
        &self.counts
    }

    pub fn get_code(&self, code: u64) -> u64 {
        self.counts.binary_search_by_key(&code, |e| e.0).map(|i| self.counts[i].1).unwrap_or(0)
    }

    pub fn get(&self, t: &Vector) -> u64 {
        if t.dim() != self.dim {
            return 0;
        }
        self.get_code(t.encode(self.field.q()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vector, u64)> + '_ {
        let q = self.field.q();
        self.counts.iter().map(move |&(c, n)| (Vector::decode(c, q, self.dim), n))
    }

    pub fn total(&self) -> u128 {
        self.counts.iter().map(|e| e.1 as u128).sum()
    }

    pub fn sum_of_squares(&self) -> u128 {
        self.counts.iter().map(|e| e.1 as u128 * e.1 as u128).sum()
    }
}

fn merge_counts(mut a: HashMap<u64, u64>, mut b: HashMap<u64, u64>) -> HashMap<u64, u64> {
    if a.len() < b.len() {
        std::mem::swap(&mut a, &mut b);
    }
    for (k, v) in b {
        *a.entry(k).or_insert(0) += v;
    }
    a
}

/// Convolves weighted codes with the set `e` under `op`, in parallel.
fn convolve<F>(items: &[(u64, u64)], e: &[u64], op: F) -> Vec<(u64, u64)>
where
    F: Fn(u64, u64) -> u64 + Sync,
{
    let chunk = (items.len() / (4 * rayon::current_num_threads()).max(1)).max(64);
    let map = items
        .par_chunks(chunk)
        .map(|part| {
            let mut local = HashMap::with_capacity(part.len() * e.len().min(64));
            for &(t, w) in part {
                for &x in e {
                    *local.entry(op(t, x)).or_insert(0) += w;
                }
            }
            local
        })
        .reduce(HashMap::new, merge_counts);
    let mut out: Vec<(u64, u64)> = map.into_iter().collect();
    out.sort_unstable_by_key(|e| e.0);
    out
}

fn check_work(work: u128, limits: &Limits) -> Result<()> {
    if work > limits.work as u128 {
        return Err(LabError::BudgetExceeded { work, budget: limits.work });
    }
    Ok(())
}

/// Work estimate for the k-fold convolution: sum of support sizes times `|E|`.
fn kfold_work(size: u128, grid: u128, k: u32) -> u128 {
    let mut support = 1u128;
    let mut work = 0u128;
    for _ in 1..k {
        support = (support.saturating_mul(size)).min(grid);
        work = work.saturating_add(support.saturating_mul(size));
    }
    work
}

/// Exact representation counts of `E - E` or of the k-fold sumset of `E`.
pub fn representation_counts(e: &PointSet, kind: RepKind, limits: &Limits) -> Result<RepMap> {
    let arith = CodeArith::new(e.field(), e.dim());
    let size = e.len() as u128;
    let grid = (e.field().q() as u128).pow(e.dim() as u32);
    let counts = match kind {
        RepKind::Difference => {
            check_work(size * size, limits)?;
            let items: Vec<(u64, u64)> = e.codes().iter().map(|&c| (c, 1)).collect();
            convolve(&items, e.codes(), |t, x| arith.sub(t, x))
        }
        RepKind::KFoldSum(k) => {
            if k == 0 {
                return Err(LabError::OutOfRange("k-fold sums need k >= 1".into()));
            }
            check_work(kfold_work(size, grid, k), limits)?;
            let mut acc: Vec<(u64, u64)> = e.codes().iter().map(|&c| (c, 1)).collect();
            for _ in 1..k {
                acc = convolve(&acc, e.codes(), |t, x| arith.add(t, x));
            }
            acc
        }
    };
    Ok(RepMap { kind, field: e.field().clone(), dim: e.dim(), counts })
}

/// `|A|^{2k(1-s)}` at one queried `s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructuredTerm {
    pub s: SValue,
    pub value: f64,
}

/// The 2k-fold additive energy of a set with its comparison terms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub schema: u32,
    pub k: u32,
    pub lambda: u128,
    pub set_size: u64,
    pub grid_size: u64,
    /// `|A|^{2k} / q^d`.
    pub random_term: Rational,
    pub structured_terms: Vec<StructuredTerm>,
}

impl EnergyReport {
    pub fn structured_term(&self, s: SValue) -> f64 {
        crate::exact::powf(self.set_size as f64, s.affine(1, -1) * (2 * self.k as i64))
    }

    pub fn with_structured_terms(mut self, s_values: &[SValue]) -> EnergyReport {
        self.structured_terms =
            s_values.iter().map(|&s| StructuredTerm { s, value: self.structured_term(s) }).collect();
        self
    }
}

/// `Lambda_{2k}(E)`, computed as the sum of squared k-fold representation counts.
pub fn additive_energy(e: &PointSet, k: u32, limits: &Limits) -> Result<EnergyReport> {
    if k < 1 {
        return Err(LabError::OutOfRange("energy needs k >= 1".into()));
    }
    let lambda = if e.is_empty() {
        0
    } else {
        representation_counts(e, RepKind::KFoldSum(k), limits)?.sum_of_squares()
    };
    let size = e.len() as u64;
    let grid = e.grid_size();
    let random_term = Rational(num_rational::BigRational::new(
        num_bigint::BigInt::from(size).pow(2 * k),
        num_bigint::BigInt::from(grid),
    ));
    Ok(EnergyReport {
        schema: 1,
        k,
        lambda,
        set_size: size,
        grid_size: grid,
        random_term,
        structured_terms: Vec::new(),
    })
}

/// Counts solutions of `x_1 + ... + x_k = x_{k+1} + ... + x_{2k}` over all
/// 2k-tuples of `E`, one tuple at a time, using field arithmetic.
pub fn additive_energy_oracle(e: &PointSet, k: u32) -> Result<u128> {
    if k < 1 {
        return Err(LabError::OutOfRange("energy needs k >= 1".into()));
    }
    let n = e.len();
    if n == 0 {
        return Ok(0);
    }
    let work = (n as u128).checked_pow(2 * k).unwrap_or(u128::MAX);
    if work > ORACLE_LIMIT {
        return Err(LabError::BudgetExceeded { work, budget: ORACLE_LIMIT as u64 });
    }
    let field = e.field();
    let pts = e.points();
    let zero = Vector::zero(e.dim());
    let k = k as usize;
    let mut idx = vec![0usize; 2 * k];
    let mut count = 0u128;
    loop {
        let left = idx[..k].iter().fold(zero.clone(), |acc, &i| add_unchecked(field, &acc, &pts[i]));
        let right = idx[k..].iter().fold(zero.clone(), |acc, &i| add_unchecked(field, &acc, &pts[i]));
        if left == right {
            count += 1;
        }
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                return Ok(count);
            }
            idx[pos] += 1;
            if idx[pos] < n {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// `m . y` reduced to the trace bucket `Tr(-m . y)`.
fn neg_dot_trace(field: &FieldDesc, m: &Vector, y: &Vector) -> u32 {
    field.trace(field.neg(dot_unchecked(field, m, y)))
}

/// `A^(m) = q^{-d} sum_{y in A} chi(-m . y)`.
pub fn fourier_coefficient(a: &PointSet, m: &Vector) -> Result<Complex64> {
    if m.dim() != a.dim() {
        return Err(LabError::DimensionMismatch { expected: a.dim(), got: m.dim() });
    }
    let field = a.field();
    if let Some(c) = m.entries().iter().find(|c| c.code() >= field.q()) {
        return Err(LabError::InvalidElement { code: c.code() as u64, q: field.q() as u64 });
    }
    let grid = (field.q() as f64).powi(a.dim() as i32);
    if m.is_zero() {
        return Ok(Complex64::new(a.len() as f64 / grid, 0.0));
    }
    Ok(coefficient_by_buckets(field, a, m) / grid)
}

fn coefficient_by_buckets(field: &FieldDesc, a: &PointSet, m: &Vector) -> Complex64 {
    let mut buckets = vec![0u64; field.p() as usize];
    for y in a {
        buckets[neg_dot_trace(field, m, y) as usize] += 1;
    }
    buckets
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(t, &c)| field.root_of_unity(t as u32) * c as f64)
        .sum()
}

/// The full Fourier transform of an indicator set, indexed by frequency code.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    q: u32,
    dim: usize,
    set_size: u64,
    values: Vec<Complex64>,
}

impl Spectrum {
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, m: &Vector) -> Complex64 {
        self.values[m.encode(self.q) as usize]
    }

    pub fn grid_size(&self) -> u64 {
        self.values.len() as u64
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn set_size(&self) -> u64 {
        self.set_size
    }

    /// `sum_{m} |A^(m)|^u` over the whole grid, zero frequency included.
    pub fn moment_sum(&self, u: u32) -> f64 {
        self.values.iter().map(|z| z.norm().powi(u as i32)).sum()
    }

    /// `Lambda_{2k}` recovered from the spectrum: `q^{(2k-1)d} sum_m |A^(m)|^{2k}`.
    pub fn energy(&self, k: u32) -> f64 {
        let g = self.values.len() as f64;
        g.powi(2 * k as i32 - 1) * self.moment_sum(2 * k)
    }

    /// Normalized L^u norm over nonzero frequencies.
    pub fn lu_norm(&self, u: Moment) -> f64 {
        let nonzero = self.values[1..].iter().map(|z| z.norm());
        match u {
            Moment::Infinity => nonzero.fold(0.0, f64::max),
            Moment::Even(u) => {
                let g = self.values.len() as f64;
                (nonzero.map(|r| r.powi(u as i32)).sum::<f64>() / g).powf(1.0 / u as f64)
            }
        }
    }
}

fn spectrum_grid(a: &PointSet, limits: &Limits) -> Result<u64> {
    grid_size(a.field().q(), a.dim(), limits.grid)
}

fn finish_spectrum(a: &PointSet, mut values: Vec<Complex64>) -> Spectrum {
    let g = values.len() as f64;
    for v in values.iter_mut() {
        *v /= g;
    }
    values[0] = Complex64::new(a.len() as f64 / g, 0.0);
    Spectrum { q: a.field().q(), dim: a.dim(), set_size: a.len() as u64, values }
}

/// Evaluates every coefficient by summing over the set.
pub fn spectrum_direct(a: &PointSet, limits: &Limits) -> Result<Spectrum> {
    let g = spectrum_grid(a, limits)?;
    check_work(g as u128 * a.len() as u128 * a.dim() as u128, limits)?;
    let field = a.field();
    let q = field.q();
    let values: Vec<Complex64> = (0..g)
        .into_par_iter()
        .map(|code| coefficient_by_buckets(field, a, &Vector::decode(code, q, a.dim())))
        .collect();
    Ok(finish_spectrum(a, values))
}

/// Transforms one coordinate axis at a time; cost `q^d * q * d`.
pub fn spectrum_separable(a: &PointSet, limits: &Limits) -> Result<Spectrum> {
    let g = spectrum_grid(a, limits)?;
    let field = a.field();
    let q = field.q() as usize;
    check_work(g as u128 * q as u128 * a.dim() as u128, limits)?;
    let table: Option<Vec<Complex64>> = (q <= 512).then(|| {
        let mut t = Vec::with_capacity(q * q);
        for m in 0..q {
            for y in 0..q {
                let prod = field.mul(Scalar::from_code_unchecked(m as u32), Scalar::from_code_unchecked(y as u32));
                t.push(field.character(field.neg(prod)));
            }
        }
        t
    });
    let kernel = |m: usize, y: usize| -> Complex64 {
        match &table {
            Some(t) => t[m * q + y],
            None => {
                let prod = field.mul(Scalar::from_code_unchecked(m as u32), Scalar::from_code_unchecked(y as u32));
                field.character(field.neg(prod))
            }
        }
    };
    let mut data = vec![Complex64::new(0.0, 0.0); g as usize];
    for &c in a.codes() {
        data[c as usize] = Complex64::new(1.0, 0.0);
    }
    let mut stride = 1usize;
    for _ in 0..a.dim() {
        let block = stride * q;
        data.par_chunks_mut(block).for_each(|chunk| {
            let mut line = vec![Complex64::new(0.0, 0.0); q];
            let mut out = vec![Complex64::new(0.0, 0.0); q];
            for inner in 0..stride {
                let mut any = false;
                for (y, slot) in line.iter_mut().enumerate() {
                    *slot = chunk[inner + y * stride];
                    any |= *slot != Complex64::new(0.0, 0.0);
                }
                if !any {
                    continue;
                }
                for (m, o) in out.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (y, v) in line.iter().enumerate() {
                        if *v != Complex64::new(0.0, 0.0) {
                            acc += v * kernel(m, y);
                        }
                    }
                    *o = acc;
                }
                for (m, o) in out.iter().enumerate() {
                    chunk[inner + m * stride] = *o;
                }
            }
        });
        stride = block;
    }
    Ok(finish_spectrum(a, data))
}

/// Full spectrum by whichever of the two methods is cheaper.
pub fn spectrum(a: &PointSet, limits: &Limits) -> Result<Spectrum> {
    if a.len() as u64 > a.field().q() as u64 {
        spectrum_separable(a, limits)
    } else {
        spectrum_direct(a, limits)
    }
}

/// Moment `u` of an L^u norm: an even integer or infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Moment {
    Even(u32),
    Infinity,
}

impl Moment {
    pub fn even(u: u32) -> Result<Moment> {
        if u == 0 || u % 2 == 1 {
            return Err(LabError::InvalidMoment(u.to_string()));
        }
        Ok(Moment::Even(u))
    }

    /// `u / 2` for even moments.
    pub fn half(self) -> Option<u32> {
        match self {
            Moment::Even(u) => Some(u / 2),
            Moment::Infinity => None,
        }
    }
}

impl FromStr for Moment {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Moment> {
        let t = s.trim();
        if matches!(t.to_ascii_lowercase().as_str(), "inf" | "infinity" | "∞") {
            return Ok(Moment::Infinity);
        }
        let u: u32 = t.parse().map_err(|_| LabError::InvalidMoment(s.to_string()))?;
        Moment::even(u)
    }
}

impl fmt::Display for Moment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Moment::Even(u) => write!(f, "{u}"),
            Moment::Infinity => write!(f, "inf"),
        }
    }
}

impl Serialize for Moment {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Moment {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Wire {
            Text(String),
            Number(u32),
        }
        match Wire::deserialize(deserializer)? {
            Wire::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Wire::Number(u) => Moment::even(u).map_err(serde::de::Error::custom),
        }
    }
}

/// `(q^{-d} sum_{m != 0} |A^(m)|^u)^{1/u}`, or the sup over `m != 0`.
pub fn lu_norm(a: &PointSet, u: Moment, limits: &Limits) -> Result<f64> {
    Ok(spectrum(a, limits)?.lu_norm(u))
}

/// Which side of the Salem energy bound is larger.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SalemRegime {
    StructuredTermDominates,
    RandomTermDominates,
}

/// Observed Salem constants of a set at one `(s, k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SalemAssessment {
    pub schema: u32,
    pub s: SValue,
    pub u: u32,
    pub set_size: u64,
    pub grid_size: u64,
    pub lambda: u128,
    /// `Lambda_{2k} / (|A|^{2k(1-s)} + |A|^{2k}/q^d)`.
    pub energy_constant: f64,
    /// `||A^||_u / (q^{-d} |A|^{1-s})`.
    pub fourier_constant: f64,
    pub regime: SalemRegime,
}

/// `StructuredTermDominates` iff `|A|^{2ks} <= q^d`, decided in integers.
pub fn salem_regime(set_size: u64, q: u32, dim: usize, s: SValue, k: u32) -> SalemRegime {
    let lhs = [(set_size, s.ratio() * (2 * k as i64))];
    let rhs = [(q as u64, Ratio::from_integer(dim as i64))];
    if compare_products(&lhs, &rhs) == Ordering::Greater {
        SalemRegime::RandomTermDominates
    } else {
        SalemRegime::StructuredTermDominates
    }
}

fn check_s(s: SValue) -> Result<()> {
    if s.numer() <= 0 || s.ratio() > Ratio::from_integer(1) {
        return Err(LabError::OutOfRange(format!("s = {s} must lie in (0, 1]")));
    }
    Ok(())
}

/// Energy and Fourier forms of the Salem constant. Never a verdict.
pub fn salem_assess(a: &PointSet, s: SValue, k: u32, limits: &Limits) -> Result<SalemAssessment> {
    check_s(s)?;
    if a.is_empty() {
        return Err(LabError::DivisionByZero("Salem constants of the empty set".into()));
    }
    let report = additive_energy(a, k, limits)?;
    let spec = spectrum(a, limits)?;
    let size = a.len() as f64;
    let grid = report.grid_size as f64;
    let energy_constant =
        report.lambda as f64 / (report.structured_term(s) + size.powi(2 * k as i32) / grid);
    let fourier_constant =
        spec.lu_norm(Moment::Even(2 * k)) / (crate::exact::powf(size, s.affine(1, -1)) / grid);
    Ok(SalemAssessment {
        schema: 1,
        s,
        u: 2 * k,
        set_size: report.set_size,
        grid_size: report.grid_size,
        lambda: report.lambda,
        energy_constant,
        fourier_constant,
        regime: salem_regime(report.set_size, a.field().q(), a.dim(), s, k),
    })
}

/// `|R_n|` at one threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RichCount {
    pub n: u64,
    pub count: u64,
}

/// How many nonzero differences have representation count `value`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub value: u64,
    pub count: u64,
}

/// An observed constant at one `s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SConstant {
    pub s: SValue,
    pub value: f64,
}

/// Results of the exact rich-difference inequalities on one set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SidonChecks {
    /// `n^2 |R_n| <= Lambda_4 - |E|^2` for every `n >= 1`.
    pub markov: bool,
    /// `|{t in E-E : |r(t) - mu| >= n sigma}| <= |E-E| / n^2` at every threshold.
    pub chebyshev: bool,
    /// `max_n n^2 |R_n| <= M |E|^2`, so strong with C implies weak with C.
    pub strong_implies_weak: bool,
}

/// Rich-difference statistics of a set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SidonProfile {
    pub schema: u32,
    pub set_size: u64,
    /// `max_{t != 0} r(t)`; 0 when there are no nonzero differences.
    pub m: u64,
    /// `|E - E|`, zero included.
    pub diff_support: u64,
    pub lambda4: u128,
    pub histogram: Vec<HistogramBin>,
    pub rich_counts: Vec<RichCount>,
    pub mean: f64,
    pub deviation: f64,
    pub strong: Vec<SConstant>,
    pub weak: Vec<SConstant>,
    pub checks: SidonChecks,
}

impl SidonProfile {
    /// `|R_n|`: nonzero `t` with `r(t) >= n`.
    pub fn rich_count(&self, n: u64) -> u64 {
        self.histogram.iter().filter(|b| b.value >= n).map(|b| b.count).sum()
    }

    /// `max_{1 <= n <= M} n^2 |R_n|`.
    pub fn weak_numerator(&self) -> u128 {
        (1..=self.m).map(|n| n as u128 * n as u128 * self.rich_count(n) as u128).max().unwrap_or(0)
    }

    /// Size of `{t in E-E : |r(t) - mu| >= n sigma}`, decided exactly as
    /// `(r D - |E|^2)^2 >= n^2 (D Lambda_4 - |E|^4)`. Empty when `sigma = 0`.
    pub fn chebyshev_count(&self, n: u64) -> u64 {
        let d = self.diff_support as i128;
        let e2 = self.set_size as i128 * self.set_size as i128;
        let var = d * self.lambda4 as i128 - e2 * e2;
        if var <= 0 {
            return 0;
        }
        let rhs = n as i128 * n as i128 * var;
        let hit = |r: u64| {
            let dev = r as i128 * d - e2;
            dev * dev >= rhs
        };
        let zero = u64::from(self.set_size > 0 && hit(self.set_size));
        zero + self.histogram.iter().filter(|b| hit(b.value)).map(|b| b.count).sum::<u64>()
    }

    pub fn strong_constant(&self, s: SValue) -> f64 {
        if self.set_size == 0 {
            return 0.0;
        }
        self.m as f64 / crate::exact::powf(self.set_size as f64, s.affine(2, -4))
    }

    pub fn weak_constant(&self, s: SValue) -> f64 {
        if self.set_size == 0 {
            return 0.0;
        }
        self.weak_numerator() as f64 / crate::exact::powf(self.set_size as f64, s.affine(4, -4))
    }
}

/// `1, 2, 4, ...` up to `m`.
pub fn geometric_thresholds(m: u64) -> Vec<u64> {
    std::iter::successors(Some(1u64), |n| n.checked_mul(2)).take_while(|&n| n <= m.max(1)).collect()
}

/// Full s-Sidon profile. Empty `thresholds` means the geometric grid up to M.
pub fn sidon_profile(e: &PointSet, thresholds: &[u64], s_queries: &[SValue], limits: &Limits) -> Result<SidonProfile> {
    let rep = representation_counts(e, RepKind::Difference, limits)?;
    let size = e.len() as u64;
    let mut hist: HashMap<u64, u64> = HashMap::new();
    for &(t, r) in rep.entries() {
        if t != 0 {
            *hist.entry(r).or_insert(0) += 1;
        }
    }
    let mut histogram: Vec<HistogramBin> = hist.into_iter().map(|(value, count)| HistogramBin { value, count }).collect();
    histogram.sort_unstable_by_key(|b| b.value);
    let m = histogram.last().map_or(0, |b| b.value);
    let lambda4 = rep.sum_of_squares();
    let diff_support = rep.support_size() as u64;
    let (mean, deviation) = if diff_support == 0 {
        (0.0, 0.0)
    } else {
        let d = diff_support as f64;
        let mu = (size as f64).powi(2) / d;
        (mu, (lambda4 as f64 / d - mu * mu).max(0.0).sqrt())
    };
    let thresholds = if thresholds.is_empty() { geometric_thresholds(m) } else { thresholds.to_vec() };
    let mut profile = SidonProfile {
        schema: 1,
        set_size: size,
        m,
        diff_support,
        lambda4,
        histogram,
        rich_counts: Vec::new(),
        mean,
        deviation,
        strong: Vec::new(),
        weak: Vec::new(),
        checks: SidonChecks { markov: true, chebyshev: true, strong_implies_weak: true },
    };
    profile.rich_counts = thresholds.iter().map(|&n| RichCount { n, count: profile.rich_count(n) }).collect();
    profile.strong = s_queries.iter().map(|&s| SConstant { s, value: profile.strong_constant(s) }).collect();
    profile.weak = s_queries.iter().map(|&s| SConstant { s, value: profile.weak_constant(s) }).collect();
    let off_diagonal = lambda4 - (size as u128).pow(2);
    let markov = (1..=m.max(1))
        .chain(thresholds.iter().copied().filter(|&n| n >= 1))
        .all(|n| (n as u128).pow(2) * profile.rich_count(n) as u128 <= off_diagonal);
    let chebyshev = (1..=m.max(1))
        .chain(thresholds.iter().copied().filter(|&n| n >= 1))
        .all(|n| profile.chebyshev_count(n) as u128 * (n as u128).pow(2) <= diff_support as u128);
    let strong_implies_weak = profile.weak_numerator() <= m as u128 * (size as u128).pow(2);
    profile.checks = SidonChecks { markov, chebyshev, strong_implies_weak };
    Ok(profile)
}

/// The observed constant `Lambda_4 / (M |E|^{2-2s} |E-E|^{1/2})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakTechReport {
    pub schema: u32,
    pub s: SValue,
    pub ratio: f64,
    pub lambda4: u128,
    /// `sum_t r_{E-E}(t)^2`, equal to `lambda4`.
    pub sum_r_squared: u128,
    pub m: u64,
    pub diff_support: u64,
    pub set_size: u64,
}

pub fn weak_tech_ratio(e: &PointSet, s: SValue, limits: &Limits) -> Result<WeakTechReport> {
    if e.len() <= 1 {
        return Err(LabError::DivisionByZero(format!("|E| = {} has no nonzero differences", e.len())));
    }
    let lambda4 = additive_energy(e, 2, limits)?.lambda;
    let rep = representation_counts(e, RepKind::Difference, limits)?;
    let sum_r_squared = rep.sum_of_squares();
    if lambda4 != sum_r_squared {
        return Err(LabError::HardAssertion(format!(
            "energy {lambda4} differs from sum of squared difference counts {sum_r_squared}"
        )));
    }
    let m = rep.entries().iter().filter(|e| e.0 != 0).map(|e| e.1).max().unwrap_or(0);
    let diff_support = rep.support_size() as u64;
    let size = e.len() as u64;
    let denom = m as f64 * crate::exact::powf(size as f64, s.affine(2, -2)) * (diff_support as f64).sqrt();
    Ok(WeakTechReport {
        schema: 1,
        s,
        ratio: lambda4 as f64 / denom,
        lambda4,
        sum_r_squared,
        m,
        diff_support,
        set_size: size,
    })
}
