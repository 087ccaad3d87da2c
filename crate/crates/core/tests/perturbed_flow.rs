use num_complex::Complex64;

use nlsist::asymptotics::evolve_linear;
use nlsist::pde;
use nlsist::perturbation::{evolve_perturbed, EvolveOptions, PerturbationSpec, Profile};
use nlsist::scattering::direct_scattering;
use nlsist::{ComplexField, Grid1D, ReflectionData};

#[test]
fn rk4_converges_at_fourth_order() {
    let zg = Grid1D::from_range(-5.0, 5.0, 256).unwrap();
    let r = ReflectionData::new(
        ComplexField::from_fn(zg, |z| Complex64::from_polar(0.5 * (-z * z).exp(), 0.3 * z)).unwrap(),
    )
    .unwrap();
    let spec = PerturbationSpec::new(2.0, 4.0, Profile::Gaussian { scale: 1.0 }).unwrap();
    let opts = EvolveOptions { ygrid: Some(Grid1D::from_range(-5.3, 5.3, 96).unwrap()), ..Default::default() };
    let run = |steps| evolve_perturbed(&r, &spec, 0.4, steps, &opts).unwrap().last().clone();
    let (a, b, c) = (run(4), run(8), run(16));
    let d1 = a.r().sub(b.r()).unwrap().l2_norm();
    let d2 = b.r().sub(c.r()).unwrap().l2_norm();
    let order = (d1 / d2).log2();
    assert!(c.r().sub(r.r()).unwrap().l2_norm() > 1e3 * d2, "flow must move r well beyond the step error");
    assert!((order - 4.0).abs() < 0.6, "observed order {order} ({d1:.3e}, {d2:.3e})");
}

/// The change of r under the perturbed flow matches the change of ℛ(q) under
/// the perturbed PDE, with a strong perturbation so the change is resolved.
#[test]
fn perturbed_flow_matches_the_split_step_oracle() {
    let pg = Grid1D::periodic(-64.0, 64.0, 4096).unwrap();
    let q0 = ComplexField::from_real_fn(pg, |x| 0.3 / x.cosh()).unwrap();
    let zg = Grid1D::from_range(-10.0, 10.0, 512).unwrap();
    let spec = PerturbationSpec::new(1.0, 4.0, Profile::Gaussian { scale: 1.0 }).unwrap();
    let r0 = direct_scattering(&q0, &zg).unwrap();
    let r_ist = evolve_perturbed(&r0, &spec, 1.0, 8, &EvolveOptions::default()).unwrap().last().clone();
    let q1 = pde::run(&q0, &spec, 1.0, 1e-3).unwrap().state.q;
    let r_pde = evolve_linear(&direct_scattering(&q1, &zg).unwrap(), -1.0);
    let change = r_ist.r().sub(r0.r()).unwrap().l2_norm();
    let change_pde = r_pde.r().sub(r0.r()).unwrap().l2_norm();
    let diff = r_ist.r().sub(r_pde.r()).unwrap().l2_norm();
    assert!(change > 1e-3, "{change}");
    assert!((change / change_pde - 1.0).abs() < 0.01, "{change} vs {change_pde}");
    assert!(diff < 1e-2 * change, "{diff} vs {change}");
}
