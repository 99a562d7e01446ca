use proptest::prelude::*;

use salem_lab::constructions::{salem_acceptance, salem_subset_size};
use salem_lab::energy::{additive_energy, additive_energy_oracle, representation_counts, sidon_profile, spectrum, RepKind};
use salem_lab::exact::{floor_pow, Rational};
use salem_lab::geometry::{lift_set, quadratic_norm, sphere_to_hyperplane, split_spheres, GeomObject};
use salem_lab::incidence::{
    count_incidences, count_incidences_lifted, evaluate_bounds, pair_count_n, spheres_as_objects, unit_distance_count,
    weighted_incidences, WeightMap,
};
use salem_lab::{FieldDesc, Limits, PointSet, SValue, Scalar, Sphere, Vector};

const FIELDS: [&str; 6] = ["3", "5", "7", "9", "11", "25"];

fn field(i: usize) -> FieldDesc {
    FieldDesc::from_spec(FIELDS[i % FIELDS.len()]).unwrap()
}

/// A field index, a dimension with `q^d <= 1331`, and raw codes.
fn instance(max_points: usize) -> impl Strategy<Value = (usize, usize, Vec<u64>)> {
    (0..FIELDS.len(), 1usize..=3).prop_flat_map(move |(fi, d)| {
        let q = field(fi).q() as u64;
        let d = if q.pow(d as u32) > 1331 { 2 } else { d };
        let grid = q.pow(d as u32);
        (Just(fi), Just(d), prop::collection::vec(0..grid, 0..=max_points))
    })
}

fn points(fi: usize, d: usize, codes: &[u64]) -> PointSet {
    PointSet::from_codes(&field(fi), d, codes.iter().copied()).unwrap()
}

fn spheres(f: &FieldDesc, d: usize, raw: &[(u64, u64)]) -> Vec<Sphere> {
    let grid = (f.q() as u64).pow(d as u32);
    raw.iter()
        .map(|&(c, r)| Sphere::new(Vector::decode(c % grid, f.q(), d), f.element(r % f.q() as u64).unwrap()))
        .collect()
}

fn lim() -> Limits {
    Limits::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn field_axioms(fi in 0..FIELDS.len(), x in 0u64..1000, y in 0u64..1000, z in 0u64..1000) {
        let f = field(fi);
        let q = f.q() as u64;
        let (x, y, z) = (f.element(x % q).unwrap(), f.element(y % q).unwrap(), f.element(z % q).unwrap());
        prop_assert_eq!(f.add(f.add(x, y), z), f.add(x, f.add(y, z)));
        prop_assert_eq!(f.mul(f.mul(x, y), z), f.mul(x, f.mul(y, z)));
        prop_assert_eq!(f.mul(x, f.add(y, z)), f.add(f.mul(x, y), f.mul(x, z)));
        if !x.is_zero() {
            prop_assert_eq!(f.mul(x, f.inv(x).unwrap()), Scalar::ONE);
        }
        let prod = f.character(x) * f.character(f.neg(x));
        prop_assert!((prod.re - 1.0).abs() < 1e-12 && prod.im.abs() < 1e-12);
        prop_assert_eq!(f.trace(f.add(x, y)), (f.trace(x) + f.trace(y)) % f.p());
    }

    #[test]
    fn energy_matches_oracle((fi, d, codes) in instance(7), k in 2u32..=3) {
        let e = points(fi, d, &codes);
        prop_assert_eq!(additive_energy(&e, k, &lim()).unwrap().lambda, additive_energy_oracle(&e, k).unwrap());
    }

    #[test]
    fn energy_bounds_and_translation((fi, d, codes) in instance(30), shift in 0u64..1331) {
        let e = points(fi, d, &codes);
        let n = e.len() as u128;
        let lambda = additive_energy(&e, 2, &lim()).unwrap().lambda;
        prop_assert!(lambda >= n * n && lambda <= n * n * n);
        let rep = representation_counts(&e, RepKind::Difference, &lim()).unwrap();
        prop_assert_eq!(rep.total(), n * n);
        prop_assert_eq!(rep.sum_of_squares(), lambda);
        let f = e.field();
        let t = Vector::decode(shift % e.grid_size(), f.q(), d);
        let moved = PointSet::new(f, d, e.iter().map(|x| salem_lab::geometry::add(f, x, &t).unwrap())).unwrap();
        prop_assert_eq!(additive_energy(&moved, 2, &lim()).unwrap().lambda, lambda);
    }

    #[test]
    fn parseval_and_fourier_energy((fi, d, codes) in instance(25)) {
        let a = points(fi, d, &codes);
        let spec = spectrum(&a, &lim()).unwrap();
        let g = a.grid_size() as f64;
        let total: f64 = spec.values().iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((total - a.len() as f64 / g).abs() <= 1e-12 * (1.0 + a.len() as f64 / g));
        let lambda = additive_energy(&a, 2, &lim()).unwrap().lambda as f64;
        prop_assert!((spec.energy(2) - lambda).abs() <= 1e-6 * lambda.max(1.0));
    }

    #[test]
    fn sidon_profile_inequalities((fi, d, codes) in instance(40)) {
        let e = points(fi, d, &codes);
        let p = sidon_profile(&e, &[], &[SValue::new(1, 4), SValue::half()], &lim()).unwrap();
        prop_assert!(p.checks.markov && p.checks.chebyshev && p.checks.strong_implies_weak);
        if p.m == 1 {
            let n = e.len() as u128;
            prop_assert_eq!(p.lambda4, 2 * n * n - n);
        }
    }

    #[test]
    fn lifted_equals_direct((fi, d, codes) in instance(40), raw in prop::collection::vec((0u64..1331, 0u64..25), 0..15)) {
        let p = points(fi, d, &codes);
        let s = spheres(p.field(), d, &raw);
        let direct = count_incidences(&p, &spheres_as_objects(&s), &lim()).unwrap();
        let lifted = count_incidences_lifted(&p, &s, &lim()).unwrap();
        prop_assert_eq!(lifted.count, direct.count);
        prop_assert!(direct.count <= p.len() as u64 * s.len() as u64);
        prop_assert!(evaluate_bounds(&direct, SValue::half(), 4, None).general_holds);
        let (s1, s2) = split_spheres(p.field(), &s);
        prop_assert_eq!(s1.len() + s2.len(), s.len());
        let parts = count_incidences(&p, &spheres_as_objects(&s1), &lim()).unwrap().count
            + count_incidences(&p, &spheres_as_objects(&s2), &lim()).unwrap().count;
        prop_assert_eq!(parts, direct.count);
    }

    #[test]
    fn lifting_preserves_incidence((fi, d, codes) in instance(20), raw in prop::collection::vec((0u64..1331, 0u64..25), 1..5)) {
        let p = points(fi, d, &codes);
        let f = p.field();
        for s in spheres(f, d, &raw) {
            let h = GeomObject::Hyperplane(sphere_to_hyperplane(f, &s));
            let sphere = GeomObject::Sphere(s.clone());
            for x in p.iter() {
                let lifted = salem_lab::geometry::lift_point(f, x);
                prop_assert_eq!(
                    salem_lab::geometry::incident(f, &sphere, x).unwrap(),
                    salem_lab::geometry::incident(f, &h, &lifted).unwrap()
                );
            }
        }
        let before = additive_energy(&p, 2, &lim()).unwrap().lambda;
        prop_assert!(additive_energy(&lift_set(&p), 2, &lim()).unwrap().lambda <= before);
    }

    #[test]
    fn discrepancies_sum_to_total((fi, d, codes) in instance(30), raw in prop::collection::vec((1u64..1331, 0u64..25), 0..8)) {
        let u = points(fi, d, &codes);
        let f = u.field();
        let grid = u.grid_size();
        let t: Vec<(Vector, Scalar)> = raw
            .iter()
            .map(|&(a, b)| (Vector::decode(1 + a % (grid - 1), f.q(), d), f.element(b % f.q() as u64).unwrap()))
            .collect();
        let pc = pair_count_n(&u, &t, true, &lim()).unwrap();
        let total = pc.per_object.iter().fold(Rational::from_int(0), |acc, o| &acc + &o.d);
        prop_assert_eq!(total, &Rational::from_int(pc.n as i128) - &pc.expected);
    }

    #[test]
    fn unit_distances_are_symmetric((fi, d, codes) in instance(40), r in 1u64..25) {
        let p = points(fi, d, &codes);
        let f = p.field();
        let r = f.element(1 + r % (f.q() as u64 - 1)).unwrap();
        let n = unit_distance_count(&p, r, &lim()).unwrap();
        prop_assert_eq!(n % 2, 0);
        let mut scan = 0;
        for x in p.iter() {
            for y in p.iter() {
                scan += u64::from(quadratic_norm(f, &salem_lab::geometry::sub(f, x, y).unwrap()) == r);
            }
        }
        prop_assert_eq!(n, scan);
    }

    #[test]
    fn indicator_weights_count_subfamilies((fi, d, codes) in instance(30), raw in prop::collection::vec((0u64..1331, 0u64..25), 1..10), keep in 0usize..10) {
        let p = points(fi, d, &codes);
        let mut s = spheres(p.field(), d, &raw);
        s.sort_by_key(|x| (x.center.encode(p.field().q()), x.radius.code()));
        s.dedup();
        let keep = keep % (s.len() + 1);
        let mut w = WeightMap::indicator(d, &s[..keep]);
        for x in &s[keep..] {
            w.insert(x.clone(), salem_lab::incidence::real_weight(&Rational::from_int(0))).unwrap();
        }
        let sub = count_incidences(&p, &spheres_as_objects(&s[..keep]), &lim()).unwrap().count;
        let wi = weighted_incidences(&p, &s, &w, &lim()).unwrap();
        prop_assert_eq!(wi.value, salem_lab::incidence::real_weight(&Rational::from_int(sub as i128)));
        prop_assert!(w.norms_consistent());
    }

    #[test]
    fn salem_size_is_a_floor(qi in 0usize..6, d in 1usize..=6, num in 26i64..=50) {
        let q = field(qi).q();
        let s = SValue::new(num, 100);
        let n = salem_subset_size(q, d, s);
        let exp = num_rational::Ratio::new(d as i64, 8) / s.ratio();
        prop_assert_eq!(n, floor_pow(q as u64, exp));
        let target = (q as f64).powf(d as f64 * 100.0 / (8.0 * num as f64));
        prop_assert!((n as f64) <= target * (1.0 + 1e-9) && (n as f64 + 1.0) > target * (1.0 - 1e-9));
        prop_assert!(salem_acceptance(0, n.max(1), s, SValue::new(1, 1)));
    }

    #[test]
    fn svalue_round_trip(num in 1i64..1000, den in 1i64..1000) {
        let s = SValue::new(num, den);
        prop_assert_eq!(s.to_string().parse::<SValue>().unwrap(), s);
        let r = Rational::new(num as i128 - 500, den as i128);
        prop_assert_eq!(r.to_string().parse::<Rational>().unwrap(), r);
    }
}
