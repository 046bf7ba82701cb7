//! Flow runs checked against reference values computed independently in
//! extended precision and frozen here.

use alexflow::flows::{
    cyclic_ppa, envelope_closed_form, envelope_kconvex, expectation_and_variance, inductive_mean,
    jensen_run, ppa, reference_minimizer, stochastic_ppa, FlowMode, FlowOptions, MeasureSpec,
};
use alexflow::functionals::{concavity_constant, Functional, FunctionalSpec};
use alexflow::oracle::{grid_minimize, GridResolution};
use alexflow::schedules::StepSchedule;
use alexflow::spaces::{distance, GeodesicBall, Point, SpaceDescriptor};
use alexflow::Tolerances;
use approx::assert_abs_diff_eq;

fn cap(radius: f64) -> (SpaceDescriptor<f64>, GeodesicBall<f64>) {
    let s = SpaceDescriptor::sphere(2, 1.0).unwrap();
    let g = GeodesicBall::for_upper_flows(s.point(&[0.0, 0.0, 1.0]).unwrap(), radius).unwrap();
    (s, g)
}

fn projected(s: &SpaceDescriptor<f64>, raw: &[[f64; 3]]) -> Vec<Point<f64>> {
    raw.iter().map(|c| s.project(c).unwrap()).collect()
}

const FIVE: [[f64; 3]; 5] = [
    [0.3, 0.0, 1.0],
    [0.0, 0.3, 1.0],
    [-0.25, 0.1, 1.0],
    [0.1, -0.3, 1.0],
    [-0.1, -0.2, 1.0],
];
// Fréchet mean of FIVE (uniform weights), Nelder–Mead on 40-digit distances
const FIVE_MEAN: [f64; 3] = [
    0.009234546773838701,
    -0.01983236122426772,
    0.9997606716580484,
];
const FIVE_VARIANCE: f64 = 0.07578095234364197;

#[test]
fn cyclic_two_anchor_line_terminal() {
    let e = SpaceDescriptor::<f64>::euclidean(1).unwrap();
    let g = GeodesicBall::new(e.point(&[1.0]).unwrap(), 3.0).unwrap();
    let fs: Vec<_> = [0.0, 2.0]
        .iter()
        .map(|a| {
            FunctionalSpec::new(
                Functional::squared_distance(e.point(&[*a]).unwrap()),
                g.clone(),
            )
            .unwrap()
        })
        .collect();
    let sched = StepSchedule::harmonic(0.5).unwrap();
    let opts = FlowOptions {
        reference: Some(e.point(&[1.0]).unwrap()),
        stop_tol: None,
    };
    let run = cyclic_ppa(
        &fs,
        &sched,
        &e.point(&[-1.0]).unwrap(),
        &g,
        FlowMode::Upper,
        10_000,
        &opts,
    )
    .unwrap();
    let last = run.last_point().to_vec()[0];
    assert_abs_diff_eq!(last, 1.000_099_960_006_999, epsilon = 1e-12);
    assert!((last - 1.0).abs() < 1e-3);
    assert!(run.first_violation(&Tolerances::default()).is_none());
}

#[test]
fn line_envelope_holds_for_ten_thousand_cycles() {
    let e = SpaceDescriptor::<f64>::euclidean(1).unwrap();
    let g = GeodesicBall::new(e.point(&[1.0]).unwrap(), 3.0).unwrap();
    let fs: Vec<_> = [0.0, 2.0]
        .iter()
        .map(|a| {
            FunctionalSpec::new(
                Functional::squared_distance(e.point(&[*a]).unwrap()),
                g.clone(),
            )
            .unwrap()
        })
        .collect();
    // K = 4 for the sum, so λ_0 K < 1 needs c < 1/4
    let sched = StepSchedule::harmonic(0.2).unwrap();
    let opts = FlowOptions {
        reference: Some(e.point(&[1.0]).unwrap()),
        stop_tol: None,
    };
    let mut run = cyclic_ppa(
        &fs,
        &sched,
        &e.point(&[-1.0]).unwrap(),
        &g,
        FlowMode::Upper,
        10_000,
        &opts,
    )
    .unwrap();
    let l = fs.iter().map(|f| f.lipschitz()).fold(0.0, f64::max);
    let seq = envelope_kconvex(&mut run, 4.0, l, 2, FlowMode::Upper, 2.0).unwrap();
    assert_eq!(seq.len(), 10_001);
    assert!(run.first_violation(&Tolerances::default()).is_none());
    let unsafe_sched = StepSchedule::harmonic(0.5).unwrap();
    let mut fast = cyclic_ppa(
        &fs,
        &unsafe_sched,
        &e.origin(),
        &g,
        FlowMode::Upper,
        10,
        &opts,
    )
    .unwrap();
    assert!(envelope_kconvex(&mut fast, 4.0, l, 2, FlowMode::Upper, 2.0).is_err());
}

#[test]
fn sphere_cap_five_anchor_cyclic_matches_grid_and_envelope() {
    let (s, g) = cap(0.5);
    let anchors = projected(&s, &FIVE);
    let fs: Vec<_> = anchors
        .iter()
        .map(|a| FunctionalSpec::new(Functional::squared_distance(a.clone()), g.clone()).unwrap())
        .collect();
    let sum =
        FunctionalSpec::new(Functional::frechet(&anchors, &[1.0; 5]).unwrap(), g.clone()).unwrap();
    let y = reference_minimizer(&sum).unwrap();
    let oracle = s.point(&FIVE_MEAN).unwrap();
    assert!(distance(&y.point, &oracle).unwrap() < 1e-6);
    assert_abs_diff_eq!(y.value, 5.0 * FIVE_VARIANCE, epsilon = 1e-10);

    let k = sum.modulus();
    let sched = StepSchedule::harmonic(0.9 / k).unwrap();
    let opts = FlowOptions {
        reference: Some(y.point.clone()),
        stop_tol: None,
    };
    let mut run = cyclic_ppa(
        &fs,
        &sched,
        &g.center().clone(),
        &g,
        FlowMode::Upper,
        10_000,
        &opts,
    )
    .unwrap();
    let grid = grid_minimize(&sum, &g, GridResolution::default_for(2).unwrap()).unwrap();
    assert!(distance(run.last_point(), &grid.point).unwrap() <= 2.0 * grid.coarse_spacing);
    let l = fs.iter().map(|f| f.lipschitz()).fold(0.0, f64::max);
    let seq = envelope_kconvex(&mut run, k, l, 5, FlowMode::Upper, concavity_constant(&g)).unwrap();
    let lambdas: Vec<f64> = run.cycle_lambdas.clone();
    for n in [1, 10, 100, 1000, 10_000] {
        let closed = envelope_closed_form(&lambdas[..n], k, 2.0 * l * l * 30.0, seq[0]).unwrap();
        assert_abs_diff_eq!(closed, seq[n], epsilon = 1e-12 * seq[n].max(1.0));
    }
    assert!(run.first_violation(&Tolerances::default()).is_none());
}

#[test]
fn ppa_on_weighted_sphere_sum_reaches_minimum() {
    let (s, g) = cap(0.5);
    let anchors = projected(&s, &[[0.2, 0.1, 1.0], [-0.2, 0.2, 1.0], [0.0, -0.25, 1.0]]);
    let f = FunctionalSpec::new(
        Functional::frechet(&anchors, &[0.5, 0.3, 0.2]).unwrap(),
        g.clone(),
    )
    .unwrap();
    let min = 0.05390557950841474;
    let sched = StepSchedule::constant(0.5).unwrap();
    let y = s
        .point(&[0.04029185000459805, 0.05924890169934927, 0.9974297641792267])
        .unwrap();
    let opts = FlowOptions {
        reference: Some(y),
        stop_tol: None,
    };
    let x0 = s.project(&[0.3, -0.3, 1.0]).unwrap();
    let run = ppa(&f, &sched, &x0, &g, 200, &opts).unwrap();
    assert!(run.rows[200].f - min < 1e-4);
    assert!(run.first_violation(&Tolerances::default()).is_none());
}

#[test]
fn hyperbolic_expectation_matches_reference() {
    let h = SpaceDescriptor::<f64>::hyperbolic(2, -1.0).unwrap();
    let g = GeodesicBall::new(h.origin(), 1.5).unwrap();
    let anchors: Vec<_> = [[0.5, 0.0], [-0.2, 0.6], [-0.3, -0.4]]
        .iter()
        .map(|c| h.project(&[0.0, c[0], c[1]]).unwrap())
        .collect();
    let mu = MeasureSpec::squared_distances(&anchors, None, &g).unwrap();
    let ex = expectation_and_variance(&mu, 1).unwrap();
    let oracle = h
        .project(&[0.0, 0.001246276165419725, 0.058102564025964545])
        .unwrap();
    assert!(distance(&ex.mean.point, &oracle).unwrap() < 1e-6);
    assert_abs_diff_eq!(ex.variance, 0.26946013496044235, epsilon = 1e-10);
    assert!(ex.variance_check.passed, "{:?}", ex.variance_check);
}

#[test]
fn sphere_expectation_variance_inequality() {
    let (s, g) = cap(0.5);
    let anchors = projected(&s, &FIVE[..3]);
    let mu = MeasureSpec::squared_distances(&anchors, None, &g).unwrap();
    let ex = expectation_and_variance(&mu, 4).unwrap();
    assert_eq!(ex.variance_check.samples, 1000);
    assert!(ex.variance_check.min_margin >= -1e-7);
}

#[test]
fn inductive_mean_alternating_pair_on_sphere() {
    let s = SpaceDescriptor::<f64>::sphere(2, 1.0).unwrap();
    let mid = s.project(&[1.0, 1.0, 0.0]).unwrap();
    let g = GeodesicBall::new(mid.clone(), std::f64::consts::FRAC_PI_4 + 0.01).unwrap();
    let anchors = [
        s.point(&[1.0, 0.0, 0.0]).unwrap(),
        s.point(&[0.0, 1.0, 0.0]).unwrap(),
    ];
    let f = FunctionalSpec::new(
        Functional::frechet(&anchors, &[0.5, 0.5]).unwrap(),
        g.clone(),
    )
    .unwrap();
    let grid = grid_minimize(&f, &g, GridResolution::default_for(2).unwrap()).unwrap();
    let run = inductive_mean(&anchors, None, &g, 0, 10_000, &FlowOptions::default()).unwrap();
    assert!(distance(run.last_point(), &grid.point).unwrap() < 1e-2);
    assert!(distance(run.last_point(), &mid).unwrap() < 1e-3);
}

#[test]
fn stochastic_single_atom_is_ppa() {
    let (s, g) = cap(0.4);
    let a = s.project(&[0.1, 0.2, 1.0]).unwrap();
    let f = FunctionalSpec::new(Functional::squared_distance(a.clone()), g.clone()).unwrap();
    let mu = MeasureSpec::new(vec![f.clone()], vec![1.0]).unwrap();
    let sched = StepSchedule::harmonic(0.3).unwrap();
    let opts = FlowOptions {
        reference: Some(a),
        stop_tol: None,
    };
    let x0 = s.project(&[-0.2, 0.0, 1.0]).unwrap();
    let st = stochastic_ppa(&mu, &sched, &x0, 17, 50, &opts).unwrap();
    let det = ppa(&f, &sched, &x0, &g, 50, &opts).unwrap();
    for (a, b) in st.rows.iter().zip(&det.rows) {
        assert_eq!(a.coords, b.coords);
    }
}

#[test]
fn jensen_on_sphere_cap_twenty_seeds() {
    let (s, g) = cap(0.5);
    let anchors = projected(&s, &FIVE[..3]);
    let mu = MeasureSpec::squared_distances(&anchors, None, &g).unwrap();
    let mean = expectation_and_variance(&mu, 0).unwrap().mean.point;
    let f = FunctionalSpec::new(
        Functional::squared_distance(s.project(&[0.05, 0.1, 1.0]).unwrap()),
        g,
    )
    .unwrap();
    let opts = FlowOptions::with_reference(mean);
    for seed in 0..20 {
        let run = jensen_run(&mu, &f, seed, 10_000, &opts).unwrap();
        assert!(
            run.first_violation(&Tolerances::default()).is_none(),
            "seed {seed}"
        );
    }
}

#[test]
fn euclidean_jensen_two_atoms() {
    let e = SpaceDescriptor::<f64>::euclidean(1).unwrap();
    let g = GeodesicBall::new(e.origin(), 2.0).unwrap();
    let mu = MeasureSpec::squared_distances(
        &[e.point(&[-1.0]).unwrap(), e.point(&[1.0]).unwrap()],
        None,
        &g,
    )
    .unwrap();
    let f = FunctionalSpec::new(Functional::squared_distance(e.origin()), g).unwrap();
    let run = jensen_run(&mu, &f, 3, 100, &FlowOptions::default()).unwrap();
    assert_abs_diff_eq!(run.extras["f_of_mean"], 0.0, epsilon = 1e-18);
    assert_abs_diff_eq!(run.extras["mean_of_f"], 1.0, epsilon = 1e-15);
}
