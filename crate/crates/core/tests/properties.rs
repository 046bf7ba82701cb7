//! Property tests for the geometric identities, the resolvents and the
//! flow certificates.

use alexflow::flows::{
    envelope_closed_form, envelope_sequence, jensen_run, ppa, stochastic_ppa, FlowOptions,
    MeasureSpec,
};
use alexflow::functionals::{concavity_constant, Functional, FunctionalSpec};
use alexflow::resolvent::{check_estimate_lower, check_estimate_upper, prox_upper, step_lower};
use alexflow::schedules::StepSchedule;
use alexflow::spaces::sampling::BallChart;
use alexflow::spaces::{
    distance, exp_map, geodesic_point, log_map, GeodesicBall, Point, SpaceDescriptor,
};
use alexflow::Tolerances;
use proptest::prelude::*;

fn regions() -> Vec<GeodesicBall<f64>> {
    let e = SpaceDescriptor::euclidean(2).unwrap();
    let s = SpaceDescriptor::sphere(2, 1.0).unwrap();
    let h = SpaceDescriptor::hyperbolic(2, -1.0).unwrap();
    vec![
        GeodesicBall::new(e.origin(), 2.0).unwrap(),
        GeodesicBall::new(s.origin(), 0.7).unwrap(),
        GeodesicBall::new(h.origin(), 1.0).unwrap(),
    ]
}

fn unit2() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..1.0f64, 2)
}

fn at(region: &GeodesicBall<f64>, u: &[f64]) -> Point<f64> {
    BallChart::new(region).unwrap().from_unit(u).unwrap()
}

fn spec(anchor: Point<f64>, region: &GeodesicBall<f64>) -> FunctionalSpec<f64> {
    FunctionalSpec::new(Functional::squared_distance(anchor), region.clone()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn metric_axioms(which in 0..3usize, a in unit2(), b in unit2(), c in unit2()) {
        let g = &regions()[which];
        let (x, y, z) = (at(g, &a), at(g, &b), at(g, &c));
        let dxy = distance(&x, &y).unwrap();
        prop_assert!((dxy - distance(&y, &x).unwrap()).abs() <= 1e-12);
        prop_assert!(dxy <= distance(&x, &z).unwrap() + distance(&z, &y).unwrap() + 1e-12);
        prop_assert_eq!(distance(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn geodesics_are_reparametrized_by_arclength(which in 0..3usize, a in unit2(), b in unit2(), t in 0.0..1.0f64) {
        let g = &regions()[which];
        let (x, y) = (at(g, &a), at(g, &b));
        let m = geodesic_point(&x, &y, t).unwrap();
        let d = distance(&x, &y).unwrap();
        prop_assert!((distance(&x, &m).unwrap() - t * d).abs() <= 1e-10);
        prop_assert!((distance(&m, &y).unwrap() - (1.0 - t) * d).abs() <= 1e-10);
    }

    #[test]
    fn exp_inverts_log(which in 0..3usize, a in unit2(), b in unit2()) {
        let g = &regions()[which];
        let (x, y) = (at(g, &a), at(g, &b));
        let back = exp_map(&log_map(&x, &y).unwrap()).unwrap();
        prop_assert!(distance(&back, &y).unwrap() <= 1e-10);
    }

    #[test]
    fn spider_distance_is_tree_metric(l1 in 0..3usize, l2 in 0..3usize, r1 in 0.0..3.0f64, r2 in 0.0..3.0f64) {
        let s = SpaceDescriptor::<f64>::spider(3).unwrap();
        let d = distance(&s.leg_point(l1, r1).unwrap(), &s.leg_point(l2, r2).unwrap()).unwrap();
        let expected = if l1 == l2 { (r1 - r2).abs() } else { r1 + r2 };
        prop_assert!((d - expected).abs() <= 1e-15);
    }

    #[test]
    fn prox_beats_staying_put_and_satisfies_estimate(
        which in 0..3usize, a in unit2(), b in unit2(), c in unit2(), lambda in 0.01..5.0f64,
    ) {
        let g = &regions()[which];
        let f = spec(at(g, &a), g);
        let (x, y) = (at(g, &b), at(g, &c));
        let step = prox_upper(&f, lambda, &x, g).unwrap();
        let d = distance(&x, &step.output).unwrap();
        prop_assert!(step.f_value_out + d * d / (2.0 * lambda) <= step.f_value_in + 1e-8);
        prop_assert!(check_estimate_upper(&step, &f, &y).unwrap() >= -1e-7);
    }

    #[test]
    fn squared_distance_prox_is_a_geodesic_point(which in 0..3usize, a in unit2(), b in unit2(), lambda in 0.01..5.0f64) {
        let g = &regions()[which];
        let anchor = at(g, &a);
        let x = at(g, &b);
        let step = prox_upper(&spec(anchor.clone(), g), lambda, &x, g).unwrap();
        let closed = geodesic_point(&x, &anchor, 2.0 * lambda / (1.0 + 2.0 * lambda)).unwrap();
        prop_assert!(distance(&step.output, &closed).unwrap() <= 1e-12);
    }

    #[test]
    fn weighted_prox_on_spider_beats_staying_put(
        l1 in 0..3usize, l2 in 0..3usize, lx in 0..3usize,
        r1 in 0.0..1.0f64, r2 in 0.0..1.0f64, rx in 0.0..1.0f64, w in 0.05..0.95f64, lambda in 0.01..3.0f64,
    ) {
        let s = SpaceDescriptor::<f64>::spider(3).unwrap();
        let g = GeodesicBall::new(s.branch(), 1.0).unwrap();
        let f = FunctionalSpec::new(
            Functional::frechet(&[s.leg_point(l1, r1).unwrap(), s.leg_point(l2, r2).unwrap()], &[w, 1.0 - w]).unwrap(),
            g.clone(),
        )
        .unwrap();
        let x = s.leg_point(lx, rx).unwrap();
        let step = prox_upper(&f, lambda, &x, &g).unwrap();
        let d = distance(&x, &step.output).unwrap();
        prop_assert!(step.f_value_out + d * d / (2.0 * lambda) <= step.f_value_in + 1e-8);
        prop_assert!(g.contains(&step.output, 1e-12).unwrap());
    }

    #[test]
    fn gradient_step_contracts_and_satisfies_estimate(
        which in 0..3usize, a in unit2(), b in unit2(), c in unit2(), lambda in 0.001..0.2f64,
    ) {
        let g = &regions()[which];
        let f = spec(at(g, &a), g);
        let (x, y) = (at(g, &b), at(g, &c));
        let step = step_lower(&f, lambda, &x).unwrap();
        prop_assert!(step.certificate.step_gap >= -1e-10);
        prop_assert!(check_estimate_lower(&step, &f, &y, concavity_constant(g)).unwrap() >= -1e-7);
    }

    #[test]
    fn envelope_recursion_matches_product_formula(
        lambdas in prop::collection::vec(0.0..0.2f64, 0..60), k in 0.1..4.0f64, c in 0.0..10.0f64, a0 in 0.0..5.0f64,
    ) {
        let seq = envelope_sequence(&lambdas, k, c, a0);
        let closed = envelope_closed_form(&lambdas, k, c, a0).unwrap();
        let last = *seq.last().unwrap();
        prop_assert!((closed - last).abs() <= 1e-12 * last.abs().max(1.0));
    }

    #[test]
    fn ppa_suboptimality_bound_at_sampled_points(which in 0..3usize, a in unit2(), b in unit2(), y in unit2()) {
        let g = &regions()[which];
        let f = spec(at(g, &a), g);
        let opts = FlowOptions { reference: Some(at(g, &y)), stop_tol: None };
        let run = ppa(&f, &StepSchedule::harmonic(1.0).unwrap(), &at(g, &b), g, 30, &opts).unwrap();
        prop_assert!(run.first_violation(&Tolerances::default()).is_none());
    }

    #[test]
    fn strong_convexity_at_the_minimizer(which in 0..3usize, a in unit2(), x in unit2()) {
        let g = &regions()[which];
        let anchor = at(g, &a);
        let f = spec(anchor.clone(), g);
        let x = at(g, &x);
        let d = distance(&x, &anchor).unwrap();
        prop_assert!(f.modulus() / 2.0 * d * d <= f.value(&x).unwrap() - f.value(&anchor).unwrap() + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn stochastic_runs_replay_bitwise(seed in any::<u64>()) {
        let g = regions().remove(1);
        let anchors: Vec<_> = [[0.1, 0.2], [0.7, 0.3], [0.4, 0.9]].iter().map(|u| at(&g, u)).collect();
        let mu = MeasureSpec::squared_distances(&anchors, None, &g).unwrap();
        let sched = StepSchedule::harmonic(0.5).unwrap();
        let opts = FlowOptions { reference: None, stop_tol: None };
        let a = stochastic_ppa(&mu, &sched, g.center(), seed, 200, &opts).unwrap();
        let b = stochastic_ppa(&mu, &sched, g.center(), seed, 200, &opts).unwrap();
        prop_assert_eq!(a.to_csv_string().unwrap(), b.to_csv_string().unwrap());
    }

    #[test]
    fn jensen_holds_for_every_seed(seed in any::<u64>(), p in unit2()) {
        let g = regions().remove(1);
        let anchors: Vec<_> = [[0.1, 0.2], [0.7, 0.3], [0.4, 0.9]].iter().map(|u| at(&g, u)).collect();
        let mu = MeasureSpec::squared_distances(&anchors, None, &g).unwrap();
        let f = spec(at(&g, &p), &g);
        let opts = FlowOptions::with_reference(g.center().clone());
        let run = jensen_run(&mu, &f, seed, 300, &opts).unwrap();
        for row in &run.rows {
            prop_assert!(row.residuals.jensen.unwrap() >= -1e-8);
        }
    }
}
