use bhreduce::nlse::{continuum_residual, synthesize};
use bhreduce::*;

fn spec() -> PotentialSpec {
    make_potential(&PotentialFamily::Sin2 { v0: 8.0, a: 1.0 }).unwrap()
}

#[test]
fn one_hbar_end_to_end() {
    let spec = spec();
    let hbar = 0.16;
    let domain = CellDomain::new(&spec, 16, 64, hbar).unwrap();
    let wb = build_orthonormal_basis(&spec, &domain, &BasisOptions::default()).unwrap();
    let hm = h_matrix_elements(&wb, &domain).unwrap();
    let tb = TBParams::new(&wb, hm, 1.0, 0.0).unwrap().with_eta(-5.0).unwrap();
    assert!(tb.gamma < 0.0 && tb.beta > 0.0);

    let lattice = DnlsProblem::new(0.0, 1.0, 16, Boundary::Periodic).unwrap();
    let st = solve_anticontinuum(&lattice, 0, &[-50.0, -10.0, -5.0]).unwrap().states.pop().unwrap();
    assert_eq!(st.eta, -5.0);
    let cs = reconstruct_and_correct(&domain, &wb, &tb, &st, &ReconstructOptions::default()).unwrap();
    assert!(cs.h1_error < 1e-2);
    assert!((cs.lambda - (tb.lambda1 - tb.beta * st.e)).abs() < 1e-15);
    let r = continuum_residual(&domain, &cs.phi, cs.lambda, tb.gamma, 1.0);
    assert!(domain.grid.norm(&r) <= 1e-9 * cs.lambda);

    // The lattice picture alone already places the mass in the central well.
    let guess = synthesize(&wb, &st.f);
    let p = project_first_band(&wb, &guess);
    assert!(p.c.iter().zip(&st.f).all(|(a, b)| (a - b).abs() < 1e-8));
    let direct = direct_newton_oracle(&domain, cs.lambda, tb.gamma, 1.0, &guess).unwrap();
    let diff: Vec<f64> = direct.phi.iter().zip(&cs.phi).map(|(a, b)| a - b).collect();
    assert!(domain.grid.h1_norm(&diff) < 1e-7);
}

#[test]
fn configs_drive_the_library() {
    let cfg = RunConfig::from_toml(include_str!("../../../configs/reference.toml")).unwrap();
    assert!(SweepPlan::new(cfg.clone(), false).is_ok());
    let mut bad = cfg;
    bad.numerics.n_pw = 128;
    assert!(matches!(SweepPlan::new(bad, false), Err(Error::InvalidConfig(_))));
}
