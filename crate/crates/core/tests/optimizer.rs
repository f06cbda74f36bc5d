use degengate::constructions::{onestep_cnot, CnotVariant};
use degengate::optimize::{optimize, DegeneracyConstraint, FreeVar, MatchMode, SearchSpec};
use degengate::purity::initial_purity_slope;
use degengate::*;

fn spec(target: &str, free: Vec<FreeVar>, base: Params) -> SearchSpec {
    SearchSpec {
        base,
        free,
        target: target.into(),
        match_mode: MatchMode::Exact,
        constraint: DegeneracyConstraint::None,
        coupling_norm: None,
        distance_weight: 1.0,
        purity_weight: 0.0,
        penalty_weight: 100.0,
        noise: Noise::default(),
        restarts: 16,
        max_iter: 3000,
        seed: 7,
        threshold: 1e-6,
    }
}

fn rate(p: &Params) -> f64 {
    let d = Dynamics::from_params(p, &Noise::default()).unwrap();
    initial_purity_slope(&d, &InitialStateSet::standard()).abs()
}

#[test]
fn recovers_single_degenerate_cnot() {
    let mut s = spec(
        "CNOT",
        vec![
            FreeVar::new(&["delta2"], 1.0, 2.0),
            FreeVar::new(&["eps1"], -0.5, 0.0),
            FreeVar::new(&["eps2"], -1.0, -0.4),
            FreeVar::new(&["jz"], -1.0, -0.4),
        ],
        Params::zero(),
    );
    s.constraint = DegeneracyConstraint::Single;
    let r = optimize(&s).unwrap();
    assert!(r.converged, "{r:?}");
    assert!(r.distance < 1e-6);
    let reference = rate(&onestep_cnot(CnotVariant::Refined).params);
    assert!((rate(&r.params) / reference - 1.0).abs() < 0.1);
}

#[test]
fn heisenberg_swap() {
    let s = spec("SWAP", vec![FreeVar::new(&["jx", "jy", "jz"], 0.0, 0.5)], Params::zero());
    let r = optimize(&s).unwrap();
    assert!(r.converged && r.distance < 1e-6, "{r:?}");
    assert!((r.params.jx - 0.25).abs() < 1e-6);
    assert_eq!(r.params.jx, r.params.jy);
    assert_eq!(r.params.jy, r.params.jz);
}

#[test]
fn sqrt_swap_conflicts_with_double_degeneracy() {
    let mut s = spec(
        "SQRT_SWAP",
        vec![
            FreeVar::new(&["delta1"], 0.0, 2.0),
            FreeVar::new(&["delta2"], 0.0, 2.0),
            FreeVar::new(&["jx"], -2.0, 2.0),
            FreeVar::new(&["jy"], -2.0, 2.0),
            FreeVar::new(&["jz"], -2.0, 2.0),
            FreeVar::new(&["t0"], 0.1, 2.0),
        ],
        Params::zero(),
    );
    s.match_mode = MatchMode::Class;
    s.constraint = DegeneracyConstraint::Double;
    s.restarts = 8;
    let r = optimize(&s).unwrap();
    assert!(!r.converged);
    assert!(r.invariant_gap >= 0.1, "{r:?}");
}

#[test]
fn rejects_bad_bounds() {
    let s = spec("CNOT", vec![FreeVar::new(&["jz"], 1.0, -1.0)], Params::zero());
    assert!(matches!(optimize(&s), Err(Error::Infeasible(_))));
    let s = spec("CNOT", vec![FreeVar::new(&["t0"], 0.0, 1.0)], Params::zero());
    assert!(optimize(&s).is_err());
}
