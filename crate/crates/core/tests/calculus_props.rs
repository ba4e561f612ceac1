mod common;

use plq_core::calculus::{
    elementary_representation, pa_maxmin_to_piecewise, pa_to_dc, AffineFn, BallExample, Extended, MaxMin, Piece,
    PlqFunction, Quadratic,
};
use plq_core::geometry::{Polyhedron, Sense};
use plq_core::linalg::{max_abs, Vector};
use plq_core::Settings;
use proptest::prelude::*;
use proptest::test_runner::RngSeed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn same(a: Extended, b: Extended) -> bool {
    match (a, b) {
        (Extended::Finite(x), Extended::Finite(y)) => (x - y).abs() <= 1e-9 * (1.0 + x.abs().max(y.abs())),
        (Extended::PlusInfinity, Extended::PlusInfinity) => true,
        _ => false,
    }
}

fn scale(e: Extended, t: f64) -> Extended {
    match e {
        Extended::Finite(x) => Extended::Finite(t * x),
        inf => inf,
    }
}

fn random_maxmin(r: &mut ChaCha8Rng, n: usize) -> MaxMin {
    let outer = r.gen_range(1..=3);
    let terms = (0..outer)
        .map(|_| {
            (0..r.gen_range(1..=2))
                .map(|_| AffineFn::new(uniform_vec(r, n, -1.0, 1.0), r.gen_range(-0.5..0.5)))
                .collect()
        })
        .collect();
    MaxMin::new(terms).unwrap()
}

fn random_quadratic(r: &mut ChaCha8Rng, n: usize) -> Quadratic {
    Quadratic::new(symmetric(r, n, -1.0, 1.0), uniform_vec(r, n, -1.0, 1.0), r.gen_range(-1.0..1.0)).unwrap()
}

/// `q` on `h ≤ 0` and `q + κh²` on `h ≥ 0`: the gradient jump `2κh∇h`
/// vanishes on the cut, so the function is C¹.
fn c1_pair(r: &mut ChaCha8Rng, n: usize) -> (PlqFunction, Vector, f64) {
    let a = uniform_vec(r, n, -1.0, 1.0).normalize();
    let beta = r.gen_range(-0.5..0.5);
    let kappa = r.gen_range(0.2..2.0);
    let q = random_quadratic(r, n);
    let bump = product(&a, -beta, &a, -beta).scaled(kappa);
    let row = a.iter().copied().collect::<Vec<_>>();
    let neg: Vec<f64> = row.iter().map(|v| -v).collect();
    let lo = Polyhedron::from_rows(&[(row, Sense::Le, beta)], n).unwrap();
    let hi = Polyhedron::from_rows(&[(neg, Sense::Le, -beta)], n).unwrap();
    let f = PlqFunction::new(vec![
        Piece { domain: lo, q: q.clone() },
        Piece { domain: hi, q: q.add(&bump) },
    ])
    .unwrap();
    (f, a, beta)
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 48,
        rng_seed: RngSeed::Fixed(202),
        ..ProptestConfig::default()
    })]

    #[test]
    fn directional_derivatives_are_positively_homogeneous(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(1..=3);
        let f = random_plq(&mut r, n, 3);
        let t = r.gen_range(0.1..10.0);
        for x in kink_points(&mut r, &f, 2) {
            let v = uniform_vec(&mut r, n, -1.0, 1.0);
            let tv = &v * t;
            prop_assert!(same(f.dir1(&x, &tv).unwrap(), scale(f.dir1(&x, &v).unwrap(), t)));
            prop_assert!(same(f.dir2(&x, &tv).unwrap(), scale(f.dir2(&x, &v).unwrap(), t * t)));
        }
    }

    #[test]
    fn difference_quotients_converge_inside_a_piece(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(1..=3);
        let f = random_plq(&mut r, n, 3);
        let x = uniform_vec(&mut r, n, -1.5, 1.5);
        let v = uniform_vec(&mut r, n, -1.0, 1.0);
        let act = f.active_pieces(&x);
        prop_assume!(act.len() == 1 && f.active_pieces(&(&x + &v * 1e-2)) == act);
        let q = f.pieces()[act[0]].q.q();
        let c = 1.0 + max_abs(q) * (n * n) as f64;
        let fx = f.eval(&x).unwrap();
        let d1 = f.dir1(&x, &v).unwrap().finite().unwrap();
        let d2 = f.dir2(&x, &v).unwrap().finite().unwrap();
        for k in 2..=6 {
            let tau = 10f64.powi(-k);
            let ft = f.eval(&(&x + &v * tau)).unwrap();
            prop_assert!((d1 - (ft - fx) / tau).abs() <= c * tau, "tau {tau}");
            if k <= 3 {
                let second = (ft - fx - tau * d1) / (tau * tau);
                prop_assert!((second - 0.5 * d2).abs() <= 1e-6, "tau {tau}: {second} vs {}", 0.5 * d2);
            }
        }
    }

    #[test]
    fn maxmin_conversions_agree_pointwise(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(1..=3);
        let g = random_maxmin(&mut r, n);
        let s = Settings::default();
        let (g1, g2) = pa_to_dc(&g, s.max_maxmin_terms).unwrap();
        let pw = pa_maxmin_to_piecewise(&g, s.max_pieces.max(s.max_maxmin_terms)).unwrap();
        for _ in 0..200 {
            let x = uniform_vec(&mut r, n, -3.0, 3.0);
            let want = g.eval(&x);
            prop_assert!((g1.eval(&x) - g2.eval(&x) - want).abs() <= 1e-8 * (1.0 + want.abs()));
            prop_assert!((pw.eval(&x).unwrap() - want).abs() <= 1e-8 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn elementary_representation_reproduces_the_source(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(1..=2);
        let f = random_plq(&mut r, n, 3);
        let s = Settings::default();
        let rep = elementary_representation(&f, s.max_pieces, s.max_rows_per_piece).unwrap();
        for _ in 0..200 {
            let x = uniform_vec(&mut r, n, -3.0, 3.0);
            let want = f.eval(&x).unwrap();
            prop_assert!((rep.eval(&x) - want).abs() <= 1e-8 * (1.0 + want.abs()), "at {x:?}");
        }
    }

    #[test]
    fn c1_functions_have_odd_first_derivatives(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(1..=3);
        let (f, a, beta) = c1_pair(&mut r, n);
        prop_assert!(f.gradient_pa_check().unwrap().is_c1);
        for i in 0..20 {
            let mut x = uniform_vec(&mut r, n, -1.5, 1.5);
            if i % 2 == 0 {
                x -= &a * (a.dot(&x) - beta);
            }
            let v = uniform_vec(&mut r, n, -1.0, 1.0);
            let plus = f.dir1(&x, &v).unwrap().finite().unwrap();
            let minus = f.dir1(&x, &(-&v)).unwrap().finite().unwrap();
            prop_assert!((plus + minus).abs() <= 1e-9 * (1.0 + plus.abs()));
        }
    }

    #[test]
    fn ball_second_derivative_jumps_by_the_squared_norm(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(2..=4);
        let b = BallExample::new(symmetric(&mut r, n, -1.0, 1.0)).unwrap();
        let x = uniform_vec(&mut r, n, -1.0, 1.0).normalize();
        let mut d = uniform_vec(&mut r, n, -1.0, 1.0);
        d -= &x * x.dot(&d);
        let eps = 1e-8;
        let jump = b.dir2(&x, &(&d + &x * eps)).unwrap() - b.dir2(&x, &(&d - &x * eps)).unwrap();
        prop_assert!((jump - d.norm_squared()).abs() <= 1e-6);
        // Away from the sphere the formula has no jump.
        let inside = &x * 0.5;
        let smooth = b.dir2(&inside, &(&d + &x * eps)).unwrap() - b.dir2(&inside, &(&d - &x * eps)).unwrap();
        prop_assert!(smooth.abs() <= 1e-6);
    }
}

#[test]
fn c1_pair_builder_is_continuous() {
    let mut r = rng(5);
    let (f, _, _) = c1_pair(&mut r, 2);
    assert!(f.validate().unwrap().continuous);
}
