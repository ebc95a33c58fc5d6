use std::f64::consts::PI;

use proptest::prelude::*;
use zoll_core::graphs::*;
use zoll_core::setup::Setup;
use zoll_core::sphere::{equator_frame, HarmonicField, Parity};
use zoll_core::vec4::{self, dot, norm, V4};
use zoll_core::Error;

struct Lcg(u64);

impl Lcg {
    fn next(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((self.0 >> 11) as f64) / ((1u64 << 53) as f64) * 2.0 - 1.0
    }
    fn unit(&mut self, n: usize) -> V4 {
        let mut v = [0.0; 4];
        for c in v.iter_mut().take(n + 1) {
            *c = self.next();
        }
        vec4::normalize(&v)
    }
}

fn random_field(n: usize, lmax: usize, parity: Parity, amp: f64, rng: &mut Lcg) -> HarmonicField {
    let len = HarmonicField::zero(n, lmax).coeffs().len();
    let c: Vec<f64> = (0..len).map(|_| amp * rng.next()).collect();
    HarmonicField::with_parity(n, lmax, parity, c).unwrap()
}

/// Small smooth graph field with both even and odd `x` factors.
fn smooth_field(n: usize, amp: f64, seed: u64) -> SmoothGraphField {
    let mut rng = Lcg(seed);
    let terms = vec![
        (random_field(n, 3, Parity::Any, amp, &mut rng), random_field(n, 3, Parity::Odd, 1.0, &mut rng)),
        (random_field(n, 2, Parity::Even, amp, &mut rng), random_field(n, 1, Parity::Odd, 1.0, &mut rng)),
    ];
    SmoothGraphField::from_terms(n, &terms).unwrap()
}

struct ConstEq {
    v: V4,
    c: f64,
}

impl EquatorGraph for ConstEq {
    fn direction(&self) -> V4 {
        self.v
    }
    fn jet(&self, _x: &V4) -> (f64, V4) {
        (self.c, vec4::ZERO)
    }
}

fn close(a: &V4, b: &V4, tol: f64) -> bool {
    vec4::max_abs_diff(a, b) < tol
}

fn perp_unit(rng: &mut Lcg, n: usize, v: &V4) -> V4 {
    vec4::normalize(&vec4::reject(&rng.unit(n), v))
}

#[test]
fn graph_point_examples() {
    let v = [0.0, 0.0, 1.0, 0.0];
    let x = [0.6, 0.8, 0.0, 0.0];
    assert_eq!(graph_point(&v, &x, 0.0), x);
    let c: f64 = 0.2;
    let p = graph_point(&v, &x, c);
    assert!(close(&p, &[0.6 * c.cos(), 0.8 * c.cos(), c.sin(), 0.0], 1e-15));
    let frame = equator_frame(2, &v);
    for k in 0..50 {
        let th = 2.0 * PI * k as f64 / 50.0;
        let x = vec4::lin2(&frame[0], th.cos(), &frame[1], th.sin());
        let p = graph_point(&v, &x, 0.1 * th.cos());
        assert!((dot(&p, &p) - 1.0).abs() < 1e-14);
    }
}

#[test]
fn graph_normal_examples() {
    let v = [0.0, 0.0, 1.0, 0.0];
    let x = [1.0, 0.0, 0.0, 0.0];
    assert!(close(&graph_normal(&v, &x, 0.0, &vec4::ZERO), &v, 1e-15));
    let c: f64 = 0.25;
    let nrm = graph_normal(&v, &x, c, &vec4::ZERO);
    let expect = vec4::lin2(&x, -c.sin(), &v, c.cos());
    assert!(close(&nrm, &expect, 1e-15));
}

#[test]
fn normal_is_orthogonal_to_graph_tangents() {
    for n in [2usize, 3] {
        let f = smooth_field(n, 0.03, 11 + n as u64);
        let mut rng = Lcg(5);
        for _ in 0..50 {
            let v = rng.unit(n);
            let x = perp_unit(&mut rng, n, &v);
            let eq = f.equator(&v).unwrap();
            let (u, g) = eq.jet(&x);
            let p = graph_point(&v, &x, u);
            let nrm = graph_normal(&v, &x, u, &g);
            assert!((norm(&nrm) - 1.0).abs() < 1e-14);
            assert!(dot(&nrm, &v) > 0.0);
            assert!(dot(&nrm, &p).abs() < 1e-12);
            for a in orthogonal_complement(n, &[x, v]) {
                let t = graph_tangent(&v, &x, u, &g, &a);
                assert!(dot(&t, &nrm).abs() < 1e-10);
                assert!(dot(&t, &p).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn graph_tangent_matches_finite_difference() {
    let f = smooth_field(2, 0.05, 3);
    let v = vec4::normalize(&[0.3, -0.2, 0.9, 0.0]);
    let e = equator_frame(2, &v);
    let eq = f.equator(&v).unwrap();
    let th: f64 = 0.7;
    let at = |t: f64| vec4::lin2(&e[0], t.cos(), &e[1], t.sin());
    let x = at(th);
    let (u, g) = eq.jet(&x);
    let a = vec4::lin2(&e[0], -th.sin(), &e[1], th.cos());
    let t = graph_tangent(&v, &x, u, &g, &a);
    let h = 1e-5;
    let pp = graph_point(&v, &at(th + h), eq.value(&at(th + h)));
    let pm = graph_point(&v, &at(th - h), eq.value(&at(th - h)));
    let fd = vec4::scale(&vec4::sub(&pp, &pm), 0.5 / h);
    assert!(close(&t, &fd, 1e-8));
}

#[test]
fn jacobian_examples() {
    assert_eq!(graph_jacobian(2, 0.0, 0.0), 1.0);
    assert_eq!(graph_jacobian(3, 0.0, 0.0), 1.0);
    let c: f64 = 0.3;
    assert!((graph_jacobian(2, c, 0.0) - c.cos()).abs() < 1e-15);
    // Latitude circle at height c has length 2π cos c.
    let setup = Setup::new(2, 4, 6, 32).unwrap();
    let vals: Vec<f64> = (0..setup.template.node_count())
        .map(|_| graph_jacobian(2, c, 0.0))
        .collect();
    let len = setup.charts[0].integrate(&setup.template, &vals);
    assert!((len - 2.0 * PI * c.cos()).abs() < 1e-13);
}

#[test]
fn jacobian_equals_length_ratio() {
    let f = smooth_field(2, 0.05, 9);
    let v = vec4::normalize(&[0.1, 0.5, 0.8, 0.0]);
    let e = equator_frame(2, &v);
    let eq = f.equator(&v).unwrap();
    let th: f64 = 1.9;
    let x = vec4::lin2(&e[0], th.cos(), &e[1], th.sin());
    let (u, g) = eq.jet(&x);
    let a = vec4::lin2(&e[0], -th.sin(), &e[1], th.cos());
    let t = graph_tangent(&v, &x, u, &g, &a);
    assert!((norm(&t) - graph_jacobian(2, u, dot(&g, &g))).abs() < 1e-14);
}

#[test]
fn level_value_examples() {
    let v = vec4::normalize(&[1.0, 2.0, 2.0, 0.0]);
    let zero = ZeroGraph { n: 2 };
    let eq = zero.equator(&v).unwrap();
    let p = vec4::normalize(&[0.3, -0.4, 0.5, 0.0]);
    assert!((level_value(&*eq, &p).unwrap() - dot(&p, &v)).abs() < 1e-15);

    let c = 0.17;
    let ceq = ConstEq { v, c };
    let x = vec4::normalize(&vec4::reject(&[1.0, 0.0, 0.0, 0.0], &v));
    let t: f64 = 0.4;
    let p = vec4::lin2(&x, t.cos(), &v, t.sin());
    assert!((level_value(&ceq, &p).unwrap() - (t - c).sin()).abs() < 1e-14);

    let f = smooth_field(3, 0.04, 21);
    let mut rng = Lcg(8);
    for _ in 0..20 {
        let v = rng.unit(3);
        let x = perp_unit(&mut rng, 3, &v);
        let eq = f.equator(&v).unwrap();
        let p = graph_point(&v, &x, eq.value(&x));
        assert!(level_value(&*eq, &p).unwrap().abs() < 1e-12);
        let q = vec4::lin2(&p, 0.9, &v, 0.3);
        let q = vec4::normalize(&q);
        let neg = f.equator(&vec4::neg(&v)).unwrap();
        let a = level_value(&*eq, &q).unwrap();
        let b = level_value(&*neg, &q).unwrap();
        assert!(a > 0.0);
        assert!((a + b).abs() < 1e-14);
    }
    assert_eq!(level_value(&*zero.equator(&v).unwrap(), &v), Err(Error::NearPole));
}

#[test]
fn intersections_of_equators() {
    let z = ZeroGraph { n: 2 };
    let e3 = [0.0, 0.0, 1.0, 0.0];
    let e1 = [1.0, 0.0, 0.0, 0.0];
    let r = intersect_graphs(&z, &e3, &e1, 256).unwrap();
    assert_eq!(r.points.len(), 2);
    for p in &r.points {
        assert!((p[1].abs() - 1.0).abs() < 1e-12);
    }
    assert!(dot(&r.points[0], &r.points[1]) < -1.0 + 1e-12);

    let v = vec4::normalize(&[0.2, 0.7, -0.3, 0.0]);
    let u = vec4::normalize(&[-0.5, 0.1, 0.6, 0.0]);
    let c = vec4::normalize(&vec4::cross3(&v, &u));
    let r = intersect_graphs(&z, &v, &u, 256).unwrap();
    for p in &r.points {
        assert!(close(p, &c, 1e-12) || close(p, &vec4::neg(&c), 1e-12));
    }
    assert_eq!(
        intersect_graphs(&z, &v, &vec4::neg(&v), 64).unwrap_err(),
        Error::CoincidentDirections
    );
}

#[test]
fn intersections_lie_on_both_graphs() {
    for n in [2usize, 3] {
        let f = smooth_field(n, 0.04, 40 + n as u64);
        let mut rng = Lcg(77);
        for _ in 0..6 {
            let s = rng.unit(n);
            let t = rng.unit(n);
            let r = intersect_graphs(&f, &s, &t, 64).unwrap();
            let es = f.equator(&s).unwrap();
            let et = f.equator(&t).unwrap();
            for p in &r.points {
                let res = level_value(&*es, p).unwrap().abs() + level_value(&*et, p).unwrap().abs();
                assert!(res < 1e-10, "residual {res}");
            }
        }
    }
}

#[test]
fn intersection_converges_linearly_to_round_answer() {
    let v = vec4::normalize(&[0.2, 0.7, -0.3, 0.0]);
    let u = vec4::normalize(&[-0.5, 0.1, 0.6, 0.0]);
    let c = vec4::normalize(&vec4::cross3(&v, &u));
    let base = smooth_field(2, 0.05, 123);
    let dist = |s: f64| {
        let r = intersect_graphs(&base.scaled(s), &v, &u, 256).unwrap();
        r.points
            .iter()
            .map(|p| vec4::sin_angle(p, &c))
            .fold(0.0, f64::max)
    };
    let d1 = dist(0.02);
    let d2 = dist(0.01);
    assert!(d1 > 0.0);
    let ratio = d1 / d2;
    assert!((ratio - 2.0).abs() < 0.05, "ratio {ratio}");
}

#[test]
fn round_intersection_curve_is_a_great_circle() {
    let z = ZeroGraph { n: 3 };
    let s = vec4::normalize(&[0.1, 0.2, 0.3, 0.9]);
    let t = vec4::normalize(&[0.5, -0.2, 0.1, 0.3]);
    let r = intersect_graphs(&z, &s, &t, 32).unwrap();
    let len: f64 = r.weights.iter().sum();
    assert!((len - 2.0 * PI).abs() < 1e-12);
    for p in &r.points {
        assert!(dot(p, &s).abs() < 1e-12 && dot(p, &t).abs() < 1e-12);
    }
}

#[test]
fn gauss_map_round_trip() {
    for n in [2usize, 3] {
        let z = ZeroGraph { n };
        let mut rng = Lcg(3);
        let q = rng.unit(n);
        let w = perp_unit(&mut rng, n, &q);
        let (x, v) = gauss_map_inverse(&z, &q, &w, None).unwrap();
        assert!(close(&x, &q, 1e-15) && close(&v, &w, 1e-15));

        let f = smooth_field(n, 0.04, 500 + n as u64);
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let q = rng.unit(n);
            let w = perp_unit(&mut rng, n, &q);
            let (x, v) = gauss_map_inverse(&f, &q, &w, None).unwrap();
            let (y, nrm) = gauss_map(&f, &x, &v).unwrap();
            worst = worst.max(vec4::max_abs_diff(&y, &q)).max(vec4::max_abs_diff(&nrm, &w));
            let (xm, vm) = gauss_map_inverse(&f, &q, &vec4::neg(&w), None).unwrap();
            assert!(close(&xm, &x, 1e-10));
            assert!(close(&vm, &vec4::neg(&v), 1e-10));
        }
        assert!(worst < 1e-9, "n={n} worst {worst}");
    }
}

#[test]
fn gauss_map_is_injective_on_samples() {
    let f = smooth_field(2, 0.04, 17);
    let mut rng = Lcg(101);
    let mut imgs = Vec::new();
    for _ in 0..60 {
        let v = rng.unit(2);
        let x = perp_unit(&mut rng, 2, &v);
        let (y, nrm) = gauss_map(&f, &x, &v).unwrap();
        imgs.push((x, v, y, nrm));
    }
    for i in 0..imgs.len() {
        for j in 0..i {
            let same_src = close(&imgs[i].0, &imgs[j].0, 1e-9) && close(&imgs[i].1, &imgs[j].1, 1e-9);
            let same_img = close(&imgs[i].2, &imgs[j].2, 1e-6) && close(&imgs[i].3, &imgs[j].3, 1e-6);
            assert!(same_src || !same_img);
        }
    }
}

#[test]
fn dual_normal_examples() {
    for n in [2usize, 3] {
        let z = ZeroGraph { n };
        let mut rng = Lcg(44);
        let q = rng.unit(n);
        let w = perp_unit(&mut rng, n, &q);
        assert!(close(&dual_normal(&z, &q, &w).unwrap(), &q, 1e-12));

        let f = smooth_field(n, 0.04, 900 + n as u64);
        for _ in 0..5 {
            let q = rng.unit(n);
            let w = perp_unit(&mut rng, n, &q);
            let ns = dual_normal(&f, &q, &w).unwrap();
            let ns2 = dual_normal(&f, &q, &vec4::neg(&w)).unwrap();
            assert!(close(&ns, &ns2, 1e-10));
            assert!((norm(&ns) - 1.0).abs() < 1e-13);
            assert!(dot(&ns, &q) > 0.0);
            let (_, xi) = gauss_map_inverse(&f, &q, &w, None).unwrap();
            assert!(dot(&ns, &xi).abs() < 1e-12);
            // Independent tangent oracle: plain central differences.
            let h = 1e-5;
            for u in orthogonal_complement(n, &[q, w]) {
                let wp = vec4::normalize(&vec4::axpy(&w, h, &u));
                let wm = vec4::normalize(&vec4::axpy(&w, -h, &u));
                let (_, a) = gauss_map_inverse(&f, &q, &wp, None).unwrap();
                let (_, b) = gauss_map_inverse(&f, &q, &wm, None).unwrap();
                let tan = vec4::scale(&vec4::sub(&a, &b), 0.5 / h);
                assert!(dot(&tan, &ns).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn restriction_matches_pointwise_values() {
    for n in [2usize, 3] {
        let setup = Setup::new(n, 4, 6, if n == 2 { 24 } else { 20 }).unwrap();
        let f = smooth_field(n, 0.03, 7);
        let tf = f.restrict(&setup).unwrap();
        assert_eq!(tf.subspace, Subspace::StarOdd);
        let t = &setup.template;
        for i in [0, setup.reps() / 2, setup.reps() - 1] {
            let chart = &setup.charts[i];
            let vals = t.synthesize(tf.modes(i));
            for k in 0..t.node_count() {
                let exact = f.value(&chart.node(t, k), &chart.v);
                assert!((vals[k] - exact).abs() < 1e-12);
            }
        }
        assert!(tf.check_small(&setup).is_ok());
        assert!(matches!(tf.scaled(100.0).check_small(&setup), Err(Error::GraphTooLarge(_))));
    }
}

#[test]
fn even_position_factors_give_zero_linear_part() {
    let mut rng = Lcg(19);
    for n in [2usize, 3] {
        let setup = Setup::new(n, 4, 6, if n == 2 { 24 } else { 20 }).unwrap();
        let terms = vec![(
            random_field(n, 4, Parity::Even, 0.05, &mut rng),
            random_field(n, 3, Parity::Odd, 1.0, &mut rng),
        )];
        let f = SmoothGraphField::from_terms(n, &terms).unwrap();
        assert!(f.is_zero_odd());
        let raw = f.restrict(&setup).unwrap();
        assert_eq!(raw.subspace, Subspace::ZeroOdd);
        // The projection is a no-op up to rounding: compare with an
        // unprojected restriction built from node values.
        let t = &setup.template;
        let chart = &setup.charts[3];
        let vals: Vec<f64> = (0..t.node_count()).map(|k| f.value(&chart.node(t, k), &chart.v)).collect();
        let modes = t.analyze(&vals);
        for i in t.linear_modes() {
            assert!(modes[i].abs() < 1e-13);
        }
    }
}

#[test]
fn direction_factor_must_be_odd() {
    let n = 2;
    let even = HarmonicField::with_parity(n, 2, Parity::Even, vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
    let r = SmoothGraphField::from_terms(n, &[(even.clone(), even)]);
    assert!(matches!(r, Err(Error::InvalidParameter(_))));
}

#[test]
fn grid_graph_answers_only_on_grid() {
    let setup = Setup::new(2, 4, 6, 24).unwrap();
    let tf = smooth_field(2, 0.03, 2).restrict(&setup).unwrap();
    let g = tf.on(&setup);
    let off = vec4::normalize(&[0.123, 0.456, 0.789, 0.0]);
    assert!(matches!(g.equator(&off), Err(Error::NotOnGrid)));
    let v = setup.grid.reps[5];
    assert!(g.equator(&v).is_ok());
}

#[test]
fn sup_bound_is_an_upper_bound() {
    let f = smooth_field(3, 0.05, 31);
    let b = f.sup_bound();
    let mut rng = Lcg(12);
    for _ in 0..200 {
        let v = rng.unit(3);
        let x = perp_unit(&mut rng, 3, &v);
        assert!(f.value(&x, &v).abs() <= b);
    }
    let setup = Setup::new(3, 4, 6, 20).unwrap();
    let tf = f.restrict(&setup).unwrap();
    let g = tf.on(&setup);
    let gb = g.sup_bound();
    for i in 0..setup.reps() {
        for val in setup.template.synthesize(tf.modes(i)) {
            assert!(val.abs() <= gb);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn antipodal_graphs_coincide(rep in 0usize..60, node in 0usize..24, seed in 0u64..1000) {
        let setup = Setup::new(2, 4, 6, 24).unwrap();
        let tf = smooth_field(2, 0.03, seed).restrict(&setup).unwrap();
        let g = tf.on(&setup);
        let rep = rep % setup.reps();
        let v = setup.grid.reps[rep];
        let x = setup.charts[rep].node(&setup.template, node);
        let a = g.equator(&v).unwrap();
        let b = g.equator(&vec4::neg(&v)).unwrap();
        let pa = graph_point(&v, &x, a.value(&x));
        let pb = graph_point(&vec4::neg(&v), &x, b.value(&x));
        prop_assert!(close(&pa, &pb, 1e-12));
    }

    #[test]
    fn point_normal_tangent_orthogonal(seed in 0u64..10_000, th in 0.0f64..core::f64::consts::TAU) {
        let f = smooth_field(3, 0.05, seed % 7);
        let mut rng = Lcg(seed);
        let v = rng.unit(3);
        let e = orthogonal_complement(3, &[v]);
        let x = vec4::normalize(&vec4::lin2(&e[0], th.cos(), &e[1], th.sin()));
        let eq = f.equator(&v).unwrap();
        let (u, g) = eq.jet(&x);
        let p = graph_point(&v, &x, u);
        let nrm = graph_normal(&v, &x, u, &g);
        prop_assert!(dot(&p, &nrm).abs() < 1e-10);
        for a in orthogonal_complement(3, &[x, v]) {
            let t = graph_tangent(&v, &x, u, &g, &a);
            prop_assert!(dot(&t, &nrm).abs() < 1e-10);
            prop_assert!(dot(&t, &p).abs() < 1e-10);
        }
    }
}
