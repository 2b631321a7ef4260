mod common;

use common::*;
use outage_core::descent::{solve_general, DescentConfig, SolveStatus};
use outage_core::model::{build_rci, build_zf};
use outage_core::quadratic::{cdf_quadrature, decompose};
use outage_core::zf::{
    coord_update_init, neg_q, residue_probability, single_user_power, solve_zf_coord_descent,
    solve_zf_coord_descent_from, solve_zf_coord_update, step_from_spectrum, zf_params, ResidueSpectrum, StepBranch,
    ZfConfig, DEFAULT_ETA_MULTIPLE,
};
use outage_core::{CVector, Error, GaussianQuadratic, QosSpec};
use rand::Rng;

fn quadrature_cdf(m: outage_core::CMatrix, t: f64) -> f64 {
    let z = CVector::zeros(m.nrows());
    let gq = GaussianQuadratic::new(m, z, t).unwrap();
    cdf_quadrature(&decompose(&gq), t, 1e-10).unwrap().value
}

#[test]
fn residue_matches_quadrature() {
    let qos = QosSpec::uniform_db(3, 5.0, 0.05).unwrap();
    let mut rng = rng(11);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for seed in 0..200 {
        let inst = scenario(3, 3, 0.002, 1000 + seed);
        let b = build_zf(inst.est_channels()).unwrap();
        let Ok(params) = zf_params(&inst, &b, &qos, DEFAULT_ETA_MULTIPLE) else { continue };
        let p: Vec<f64> = (0..3).map(|_| qos.gamma()[0] * 0.01 * rng.random_range(0.3..3.0)).collect();
        for k in 0..3 {
            let m = neg_q(&inst, &b, qos.gamma()[k], &p, k);
            let spec = match ResidueSpectrum::from_matrix(&m) {
                Ok(s) => s,
                Err(Error::DegenerateSpectrum) => continue,
                Err(e) => panic!("{e}"),
            };
            let res = residue_probability(&spec, p[k], params.gamma_prime[k], 0.01).unwrap();
            let t = params.v_prime(p[k], 0.01, k);
            let quad = quadrature_cdf(m, t);
            worst = worst.max((res - quad).abs());
            checked += 1;
        }
    }
    assert!(checked >= 200);
    assert!(worst <= 1e-6, "worst gap {worst:e}");
}

#[test]
fn two_mode_example_against_quadrature() {
    let spec = ResidueSpectrum::new(vec![1.0, -0.5]).unwrap();
    let res = spec.cdf(1.0).unwrap();
    let quad = quadrature_cdf(diag(&[1.0, -0.5]), 1.0);
    assert!((res - quad).abs() <= 1e-9, "{res} vs {quad}");
    let spec = ResidueSpectrum::new(vec![0.9, 0.3, -0.7]).unwrap();
    let left = spec.cdf(-1e-12).unwrap();
    let right = spec.cdf(0.0).unwrap();
    assert!((left - right).abs() <= 1e-9);
    assert!((right - quadrature_cdf(diag(&[0.9, 0.3, -0.7]), 0.0)).abs() <= 1e-9);
}

#[test]
fn residue_sign_structure() {
    let qos = QosSpec::uniform_db(4, 5.0, 0.05).unwrap();
    let mut rng = rng(3);
    let mut alternating = 0;
    let mut total = 0;
    for seed in 0..100 {
        let inst = scenario(4, 4, 0.002, 2000 + seed);
        let b = build_zf(inst.est_channels()).unwrap();
        let p: Vec<f64> = (0..4).map(|_| rng.random_range(0.01..0.1)).collect();
        for k in 0..4 {
            let spec = ResidueSpectrum::from_matrix(&neg_q(&inst, &b, qos.gamma()[k], &p, k)).unwrap();
            assert_eq!(spec.negative_count(), 1);
            assert!(spec.positive_count() <= 3);
            let t = rng.random_range(0.0..3.0) * spec.eigenvalues[0];
            let f = spec.positive_terms(t);
            if f.is_empty() {
                continue;
            }
            total += 1;
            assert!(f[0] < 0.0);
            assert!(f.windows(2).all(|w| w[1].abs() <= w[0].abs()), "{f:?}");
            if f.iter().enumerate().all(|(l, v)| *v == 0.0 || (l % 2 == 0) == (*v < 0.0)) {
                alternating += 1;
            }
        }
    }
    assert_eq!(alternating, total);
}

#[test]
fn eigen_count_with_spare_antennas() {
    let qos = QosSpec::uniform_db(3, 5.0, 0.05).unwrap();
    for seed in 0..20 {
        let inst = scenario(5, 3, 0.002, 3000 + seed);
        let b = build_zf(inst.est_channels()).unwrap();
        let p = [0.03, 0.05, 0.04];
        for k in 0..3 {
            let spec = ResidueSpectrum::from_matrix(&neg_q(&inst, &b, qos.gamma()[k], &p, k)).unwrap();
            assert_eq!(spec.negative_count(), 1);
            assert_eq!(spec.positive_count(), 2);
            assert_eq!(spec.zero_mask.iter().filter(|z| **z).count(), 2);
        }
    }
}

#[test]
fn tilde_branch_example() {
    let spec = ResidueSpectrum::new(vec![0.1, -0.05]).unwrap();
    let (gp, sigma2) = (2.0, 0.01);
    let step = step_from_spectrum(&spec, gp, 2.0, sigma2, 0.7, false).unwrap();
    assert_eq!(step.branch, StepBranch::Tilde);
    assert!((step.power - (0.02 + 2.0 * 0.05 * 0.9f64.ln())).abs() < 1e-15);
    let prob = residue_probability(&spec, step.power, gp, sigma2).unwrap();
    assert!(prob >= 0.3 && prob - 0.3 < 1e-12);

    let step = step_from_spectrum(&spec, gp, 2.0, sigma2, 0.6, false).unwrap();
    assert_eq!(step.branch, StepBranch::Breve);
    let t = step.power / gp - sigma2;
    assert!((-spec.residue_term(1, t) - 0.4).abs() > 1e-3);
}

#[test]
fn breve_branch_is_conservative() {
    let qos = QosSpec::uniform_db(3, 5.0, 0.05).unwrap();
    let mut checked = 0;
    for seed in 0..50 {
        let inst = scenario(3, 3, 0.002, 4000 + seed);
        let b = build_zf(inst.est_channels()).unwrap();
        let Ok(params) = zf_params(&inst, &b, &qos, DEFAULT_ETA_MULTIPLE) else { continue };
        let p = [0.04, 0.05, 0.06];
        for k in 0..3 {
            let spec = ResidueSpectrum::from_matrix(&neg_q(&inst, &b, qos.gamma()[k], &p, k)).unwrap();
            let step = step_from_spectrum(&spec, params.gamma_prime[k], qos.gamma()[k], 0.01, 0.05, false).unwrap();
            if step.branch != StepBranch::Breve {
                continue;
            }
            checked += 1;
            let prob = residue_probability(&spec, step.power, params.gamma_prime[k], 0.01).unwrap();
            assert!(prob >= 0.95 - 1e-12, "seed {seed} user {k}: {prob}");
        }
    }
    assert!(checked > 100);
}

#[test]
fn leading_term_limit() {
    let spec = ResidueSpectrum::new(vec![0.2, 1e-9, -1e-9]).unwrap();
    let step = step_from_spectrum(&spec, 3.0, 3.0, 0.01, 0.05, false).unwrap();
    let expect = 0.03 - 3.0 * 0.2 * 0.05f64.ln();
    assert!((step.power - expect).abs() < 1e-6 * expect);
}

#[test]
fn literal_gamma_switch() {
    let spec = ResidueSpectrum::new(vec![0.2, 0.05, -0.1]).unwrap();
    let a = step_from_spectrum(&spec, 3.5, 3.0, 0.01, 0.05, false).unwrap();
    let b = step_from_spectrum(&spec, 3.5, 3.0, 0.01, 0.05, true).unwrap();
    assert!((a.power / b.power - 3.5 / 3.0).abs() < 1e-12);
}

#[test]
fn zero_uncertainty_limit() {
    let qos = QosSpec::uniform_db(3, 5.0, 0.05).unwrap();
    let g = qos.gamma()[0];
    for seed in 0..5 {
        let inst = scenario(3, 3, 1e-12, seed);
        let b = build_zf(inst.est_channels()).unwrap();
        let cd = solve_zf_coord_descent(&inst, &b, &qos, &ZfConfig::default()).unwrap();
        let cu = solve_zf_coord_update(&inst, &b, &qos, &ZfConfig::default()).unwrap();
        assert_eq!(cd.status, SolveStatus::Solved);
        assert_eq!(cu.status, SolveStatus::Solved);
        assert_eq!(cu.cycles, 1);
        for r in [&cd, &cu] {
            for k in 0..3 {
                assert!((r.powers[k] - g * 0.01).abs() < 0.01 * g * 0.01, "seed {seed}: {:?}", r.powers);
            }
        }
    }
}

#[test]
fn single_user_closed_form() {
    let qos = QosSpec::uniform_db(1, 5.0, 0.05).unwrap();
    let inst = scenario(2, 1, 0.002, 9);
    let b = build_zf(inst.est_channels()).unwrap();
    let params = zf_params(&inst, &b, &qos, DEFAULT_ETA_MULTIPLE).unwrap();
    let r = solve_zf_coord_update(&inst, &b, &qos, &ZfConfig::default()).unwrap();
    assert_eq!(r.status, SolveStatus::Solved);
    let p = single_user_power(&params, qos.gamma()[0], 0.01, 0.05);
    assert_eq!(r.powers[0], p);
    let approx = r.approx_prob.unwrap()[0];
    assert!((approx - 0.95).abs() < 1e-9, "{approx}");
    let cd = solve_zf_coord_descent(&inst, &b, &qos, &ZfConfig::default()).unwrap();
    assert!(cd.powers[0] >= p * (1.0 - 1e-9) && cd.powers[0] <= p * 1.01);
}

#[test]
fn init_positive_and_monotone_in_epsilon() {
    let tight = QosSpec::uniform_db(3, 5.0, 0.05).unwrap();
    let loose = QosSpec::uniform_db(3, 5.0, 0.999).unwrap();
    for seed in 0..20 {
        let inst = scenario(3, 3, 0.002, 5000 + seed);
        let b = build_zf(inst.est_channels()).unwrap();
        let pt = zf_params(&inst, &b, &tight, DEFAULT_ETA_MULTIPLE).unwrap();
        let pl = zf_params(&inst, &b, &loose, DEFAULT_ETA_MULTIPLE).unwrap();
        let a = coord_update_init(&inst, &b, &tight, &pt).unwrap();
        let c = coord_update_init(&inst, &b, &loose, &pl).unwrap();
        assert!(a.fallback_users.is_empty() && c.fallback_users.is_empty());
        for k in 0..3 {
            assert!(a.powers[k].is_finite() && a.powers[k] > 0.0);
            assert!(c.powers[k] < a.powers[k]);
        }
    }
}

#[test]
fn inapplicable_approximation() {
    let qos = QosSpec::uniform_db(3, 5.0, 0.05).unwrap();
    let inst = scenario(3, 3, 0.25, 1);
    let b = build_zf(inst.est_channels()).unwrap();
    let err = solve_zf_coord_descent(&inst, &b, &qos, &ZfConfig::default()).unwrap_err();
    assert!(matches!(err, Error::ApproximationInapplicable { .. }));
    let rci = build_rci(inst.est_channels(), 0.03).unwrap();
    assert!(solve_zf_coord_update(&inst, &rci, &qos, &ZfConfig::default()).is_err());
}

#[test]
fn solvers_on_reference_scenario() {
    let qos = QosSpec::uniform_db(3, 5.0, 0.05).unwrap();
    let cfg = ZfConfig::default();
    let mut certified = 0;
    let mut approx_solved = 0;
    for seed in 0..30 {
        let inst = scenario(3, 3, 0.002, 6000 + seed);
        let b = build_zf(inst.est_channels()).unwrap();
        let Ok(cd) = solve_zf_coord_descent(&inst, &b, &qos, &cfg) else { continue };
        if cd.status != SolveStatus::Solved {
            continue;
        }
        approx_solved += 1;
        let approx = cd.approx_prob.as_ref().unwrap();
        assert!(approx.iter().all(|p| (0.95 - 1e-12..=0.951 + 1e-12).contains(p)));
        if cd.exactly_feasible(&qos) {
            certified += 1;
        }
        let general = solve_general(&inst, &b, &qos, &DescentConfig::default()).unwrap();
        if general.status == SolveStatus::Solved {
            assert!(general.total_power <= cd.total_power * (1.0 + 1e-6));
        }
    }
    assert!(approx_solved >= 25);
    assert!(certified as f64 >= 0.9 * approx_solved as f64, "{certified}/{approx_solved}");
}

#[test]
fn update_then_descent_does_not_increase_power() {
    let qos = QosSpec::uniform_db(3, 3.0, 0.05).unwrap();
    let cfg = ZfConfig::default();
    let mut chained = 0;
    for seed in 0..20 {
        let inst = scenario(3, 3, 0.002, 7000 + seed);
        let b = build_zf(inst.est_channels()).unwrap();
        let Ok(cu) = solve_zf_coord_update(&inst, &b, &qos, &cfg) else { continue };
        if cu.status != SolveStatus::Solved {
            continue;
        }
        chained += 1;
        let cd = solve_zf_coord_descent_from(&inst, &b, &qos, &cfg, &cu.powers).unwrap();
        assert_eq!(cd.doublings, 0);
        assert!(cd.total_power <= cu.total_power * (1.0 + 1e-12));
    }
    assert!(chained >= 15);
}

#[test]
fn eta_refinement_only_tightens() {
    let qos = QosSpec::uniform_db(3, 8.0, 0.05).unwrap();
    let plain = ZfConfig::default();
    let refined = ZfConfig { eta_refinement: true, ..Default::default() };
    for seed in 0..10 {
        let inst = scenario(3, 3, 0.002, 8000 + seed);
        let b = build_zf(inst.est_channels()).unwrap();
        let Ok(a) = solve_zf_coord_descent(&inst, &b, &qos, &plain) else { continue };
        let r = solve_zf_coord_descent(&inst, &b, &qos, &refined).unwrap();
        if a.exactly_feasible(&qos) {
            assert_eq!(a.powers, r.powers);
        } else if r.status == SolveStatus::Solved {
            assert!(r.total_power >= a.total_power * (1.0 - 2e-3));
        }
    }
}
