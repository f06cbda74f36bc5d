// Frozen reference values, computed independently with dense matrix
// exponentials of the Redfield generator (no RK4).

use degengate::constructions::{
    onestep_bgate, onestep_cnot, standard_cnot_protocol, target_gate, target_matrix, AmplitudeConvention, BGateVariant,
    CnotVariant,
};
use degengate::purity::{initial_purity_slope, sequence_purity};
use degengate::spectrum::classify_energies;
use degengate::*;

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs()
}

#[test]
fn refined_cnot_hits_target() {
    let c = onestep_cnot(CnotVariant::Refined);
    let x = target_matrix::<f64>("CNOT").unwrap();
    let (raw, opt) = gate_distance(&c.unitary().unwrap(), &x).unwrap();
    assert!(opt < 1e-10 && raw < 1e-10, "{raw} {opt}");
}

#[test]
fn printed_cnot_distance() {
    let c = onestep_cnot(CnotVariant::Printed);
    let x = target_matrix::<f64>("CNOT").unwrap();
    let (_, opt) = gate_distance(&c.unitary().unwrap(), &x).unwrap();
    assert!(close(opt, 8.445478548399851e-03, 1e-9), "{opt:e}");
}

#[test]
fn refined_cnot_purity_loss() {
    let c = onestep_cnot(CnotVariant::Refined);
    let tr = gate_purity(&c.params, &Noise::default(), 1.0, &PurityOptions::default()).unwrap();
    assert!(close(tr.loss(), 2.154234899998952e-02, 1e-7), "{:e}", tr.loss());
    assert!(close(tr.initial_slope, -1.556250461172417e-02, 1e-10), "{:e}", tr.initial_slope);
    assert_eq!(tr.times.len(), 101);
}

#[test]
fn five_step_purity_loss_unit_amplitude() {
    let seq = standard_cnot_protocol(AmplitudeConvention::Unit).unwrap();
    assert!((seq.total_duration() - 7.0 * std::f64::consts::PI / 4.0).abs() < 1e-14);
    let tr = sequence_purity(&seq.segments(), &Noise::default(), &PurityOptions::default()).unwrap();
    assert!(close(tr.loss(), 2.969033640513652e-02, 1e-7), "{:e}", tr.loss());
}

#[test]
fn five_step_purity_loss_equal_norm() {
    let seq = standard_cnot_protocol(AmplitudeConvention::EqualSpectralNorm).unwrap();
    let tr = sequence_purity(&seq.segments(), &Noise::default(), &PurityOptions::default()).unwrap();
    assert!(close(tr.loss(), 1.056856574707432e-02, 1e-7), "{:e}", tr.loss());
}

#[test]
fn five_step_is_cnot_up_to_phase() {
    let seq = standard_cnot_protocol(AmplitudeConvention::Unit).unwrap();
    let (_, d) = gate_distance(&seq.unitary(), &target_matrix("CNOT").unwrap()).unwrap();
    assert!(d < 1e-12);
}

#[test]
fn printed_bgate_invariants() {
    let b = onestep_bgate(BGateVariant::Printed).unwrap();
    let g = makhlin_invariants(&b.unitary().unwrap());
    assert!((g.g1.re - 0.04811167478687067).abs() < 1e-12 && g.g1.im.abs() < 1e-12);
    assert!((g.g2.re - 0.6581124036196131).abs() < 1e-12 && g.g2.im.abs() < 1e-12);
}

#[test]
fn optimized_bgate_reaches_class() {
    let b = onestep_bgate(BGateVariant::Optimized).unwrap();
    let g = makhlin_invariants(&b.unitary().unwrap());
    assert!(g.g1.norm() < 1e-8 && g.g2.norm() < 1e-8, "{g:?}");
    let rep = classify_energies(&eigensystem(&build_hamiltonian(&b.params).unwrap(), 1e-8).unwrap().energies, 1e-9);
    assert_eq!(rep.classification, Degeneracy::Double);
}

#[test]
fn doubly_degenerate_slope_at_zero_temperature() {
    let d = 0.48f64.sqrt();
    let p = Params { delta1: d, delta2: d, jy: 0.6, jz: 0.8, ..Params::zero() };
    let dyn_ = Dynamics::from_params(&p, &Noise::new(0.01, 0.0, 20.0)).unwrap();
    let s = initial_purity_slope(&dyn_, &InitialStateSet::standard());
    assert!(close(s, -1.199_999_999_999_99e-2, 1e-9), "{s:e}");
}

#[test]
fn generic_point_slope_and_loss() {
    let p = Params::from_array([0.3, -0.7, 0.2, 0.5, 0.1, -0.4, 0.9]);
    let nm = Noise::new(0.02, 0.3, 20.0);
    let s = initial_purity_slope(&Dynamics::from_params(&p, &nm).unwrap(), &InitialStateSet::standard());
    assert!(close(s, -2.312826689078589e-02, 1e-9), "{s:e}");
    let tr = gate_purity(&p, &nm, 1.7, &PurityOptions { dt: Some(1.0 / 4000.0), ..Default::default() }).unwrap();
    assert!(close(tr.loss(), 5.585986818734356e-02, 1e-7), "{:e}", tr.loss());
}

#[test]
fn noiseless_purity_is_one() {
    let c = onestep_cnot(CnotVariant::Refined);
    let tr = gate_purity(&c.params, &Noise::noiseless(), 1.0, &PurityOptions::default()).unwrap();
    assert!(tr.purity.iter().all(|&p| (p - 1.0).abs() < 1e-12));
}

#[test]
fn zero_hamiltonian_spectrum() {
    let h = build_hamiltonian(&Params::zero()).unwrap();
    let es = eigensystem(&h, 1e-8).unwrap();
    assert!(es.gaps().iter().all(|g| g.1 == 0.0));
}

#[test]
fn invariants_of_named_targets() {
    let inv = |n: &str| target_gate::<f64>(n).unwrap().invariants;
    let g = inv("CNOT");
    assert!(g.g1.norm() < 1e-14 && (g.g2.re - 1.0).abs() < 1e-14);
    let g = inv("IDENTITY");
    assert!((g.g1.re - 1.0).abs() < 1e-14 && (g.g2.re - 3.0).abs() < 1e-14);
    let g = inv("B");
    assert!(g.g1.norm() < 1e-14 && g.g2.norm() < 1e-14);
    let g = inv("SQRT_SWAP");
    assert!((g.g1.norm() - 0.25).abs() < 1e-14 && g.g1.re.abs() < 1e-14);
    // CNOT and the two-qubit Fourier transform are not in the same class
    assert!(inv("QFT").gap_sq(&inv("CNOT")) > 1e-3);
}

#[test]
fn unknown_target_is_rejected() {
    assert!(matches!(target_gate::<f64>("TOFFOLI"), Err(Error::UnknownGate(_))));
}

#[test]
fn f32_matches_f64_on_cnot() {
    let p = onestep_cnot(CnotVariant::Refined).params.cast::<f32>();
    let u = expm_hermitian(&build_hamiltonian(&p).unwrap(), std::f32::consts::PI);
    let g = makhlin_invariants(&u);
    assert!(g.g1.norm() < 1e-5 && (g.g2.re - 1.0).abs() < 1e-5);
}
