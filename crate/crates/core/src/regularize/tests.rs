use super::builder::verify_family;
use super::*;
use crate::model::{CoefficientSpec, ScalarField, SpatialGrid};
use crate::regularize::builder::{build_d_eps, build_w0j};

fn sqrt_abs() -> CoefficientSpec {
    CoefficientSpec::power_law(0.0, 0.5, 1.0).unwrap()
}

fn pow3(j: i32) -> f64 {
    3.0f64.powi(-j)
}

#[test]
fn constant_coefficient_member_is_shifted_constant() {
    let grid = SpatialGrid::new(0.0, 1.0, 40).unwrap();
    let d = CoefficientSpec::constant(1.0).unwrap();
    for j in [1, 2, 4] {
        let (field, derivative) = build_d_eps(&d, &grid, j).unwrap();
        let expected = 1.0 + 2.0 * pow3(j as i32);
        assert!(field.values().iter().all(|&v| (v - expected).abs() < 1e-14));
        assert!(derivative.values().iter().all(|&v| v == 0.0));
    }
}

#[test]
fn sqrt_abs_member_respects_sandwich() {
    let grid = SpatialGrid::new(-1.0, 1.0, 400).unwrap();
    let d = sqrt_abs();
    let (field, _) = build_d_eps(&d, &grid, 3).unwrap();
    for (&x, &v) in grid.centers().iter().zip(field.values()) {
        let gap = v - d.eval(x);
        assert!(
            gap >= pow3(3) && gap <= 3.0 * pow3(3),
            "x = {x}: gap/3^-3 = {}",
            gap / pow3(3)
        );
    }
}

#[test]
fn endpoint_derivative_vanishes() {
    let grid = SpatialGrid::new(-1.0, 1.0, 400).unwrap();
    let (_, derivative) = build_d_eps(&sqrt_abs(), &grid, 3).unwrap();
    let v = derivative.values();
    assert_eq!(v[0], 0.0);
    assert_eq!(v[v.len() - 1], 0.0);
}

#[test]
fn nondegenerate_cutoff_is_identity() {
    let grid = SpatialGrid::new(0.0, 1.0, 40).unwrap();
    let d = CoefficientSpec::constant(1.0).unwrap();
    let w0 = ScalarField::from_fn(&grid, |x| 1.0 + x).unwrap();
    for j in 1..=3 {
        let w0j = build_w0j(&w0, &d, &grid, j).unwrap();
        assert_eq!(w0j.values(), w0.values());
    }
}

#[test]
fn cutoff_vanishes_near_the_zero() {
    let grid = SpatialGrid::new(-1.0, 1.0, 400).unwrap();
    let d = sqrt_abs();
    let w0 = ScalarField::from_fn(&grid, |x| x.abs()).unwrap();
    let j = 5;
    let w0j = build_w0j(&w0, &d, &grid, j).unwrap();
    // interval index 2 (right of the zero) has the tighter sup-window
    // constraint sup d = (2 delta)^(1/2) <= 1/4, so delta = 1/32 there.
    let delta_right = 1.0 / 32.0;
    for (&x, &v) in grid.centers().iter().zip(w0j.values()) {
        if x.abs() < delta_right {
            assert_eq!(
                v, 0.0,
                "w0j must vanish within the ramp width of 0, x = {x}"
            );
        }
    }
    assert!(w0j.values().iter().any(|&v| v > 0.0));
}

#[test]
fn cutoff_monotone_in_j_and_below_w0() {
    let grid = SpatialGrid::new(-1.0, 1.0, 400).unwrap();
    let d = sqrt_abs();
    let w0 = ScalarField::from_fn(&grid, |x| x.abs()).unwrap();
    let mut prev: Option<ScalarField> = None;
    for j in 1..=6 {
        let cur = build_w0j(&w0, &d, &grid, j).unwrap();
        for (k, (&c, &w)) in cur.values().iter().zip(w0.values()).enumerate() {
            assert!(c <= w + 1e-15, "cell {k}: w0j exceeds w0");
            if let Some(p) = &prev {
                assert!(
                    p.values()[k] <= c + 1e-15,
                    "cell {k}: w0j not nondecreasing"
                );
            }
        }
        prev = Some(cur);
    }
}

#[test]
fn narrow_interval_is_rejected() {
    // zero at an interior face close to the right boundary leaves < 4 cells
    let grid = SpatialGrid::new(0.0, 1.0, 8).unwrap();
    let d = CoefficientSpec::tabulated(vec![(0.0, 1.0), (0.875, 0.0), (1.0, 1.0)]).unwrap();
    let w0 = ScalarField::constant(&grid, 0.0).unwrap();
    let err = build_w0j(&w0, &d, &grid, 1);
    assert!(matches!(
        err,
        Err(RegularizeError::IntervalTooNarrow { .. })
    ));
}

#[test]
fn epsilon_selection_constant_coefficient_first_member() {
    // all gradient integrals vanish, the halving targets pass at 1, so
    // eps_1 = min{1/2, 3^-4, 1} = 1/81
    let grid = SpatialGrid::new(0.0, 1.0, 40).unwrap();
    let d = CoefficientSpec::constant(1.0).unwrap();
    let w0 = ScalarField::constant(&grid, 1.0).unwrap();
    let mut b = FamilyBuilder::new(&d, &w0, &grid).unwrap();
    b.add_member().unwrap();
    let eps = b.select_epsilons().unwrap();
    assert_eq!(eps.len(), 1);
    assert!((eps[0] - 1.0 / 81.0).abs() < 1e-15);
    assert_eq!(super::builder::select_epsilons(&b).unwrap(), eps);
}

#[test]
fn epsilon_sequence_decays_fast_and_halves() {
    let grid = SpatialGrid::new(-1.0, 1.0, 400).unwrap();
    let d = sqrt_abs();
    let w0 = ScalarField::from_fn(&grid, |x| x.abs()).unwrap();
    let family = RegularizationFamily::build(&d, &w0, &grid, 4).unwrap();
    let eps = family.epsilons();
    for (idx, &e) in eps.iter().enumerate() {
        let j = idx + 1;
        assert!(e <= 3.0f64.powi(-4 * j as i32) + 1e-18, "eps_{j} > 3^(-4j)");
        // the floor bound then comes for free
        assert!(e.powf(0.25) <= pow3(j as i32) * (1.0 + 1e-12));
        if idx > 0 {
            assert!(e <= eps[idx - 1] / 2.0);
        }
    }
}

#[test]
fn constant_family_ledger_gradient_entries_vanish() {
    let grid = SpatialGrid::new(0.0, 1.0, 40).unwrap();
    let d = CoefficientSpec::constant(2.0).unwrap();
    let w0 = ScalarField::constant(&grid, 0.5).unwrap();
    let family = RegularizationFamily::build(&d, &w0, &grid, 3).unwrap();
    for row in &family.ledger().rows {
        assert_eq!(row.grad_sq_bound, 0.0);
        assert_eq!(row.grad_quartic_bound, 0.0);
        assert_eq!(row.log_slope_bound, 0.0);
        assert!(row.floor_bound <= 1.0);
        assert_eq!(row.w_energy, 0.0);
        assert_eq!(row.w_weight, 0.0);
    }
}

#[test]
fn sqrt_abs_family_passes_verification_with_bounded_ledger() {
    let grid = SpatialGrid::new(-1.0, 1.0, 400).unwrap();
    let d = sqrt_abs();
    let w0 = ScalarField::from_fn(&grid, |x| x.abs()).unwrap();
    let family = RegularizationFamily::build(&d, &w0, &grid, 6).unwrap();
    // frozen member values; construction is deterministic
    let pinned = [
        1.1437220311026234e-2,
        1.0769306208548604e-5,
        2.0595368024325299e-8,
        2.9373461193940833e-10,
        2.3039966811977956e-11,
        3.5407061614721497e-12,
    ];
    for (idx, &p) in pinned.iter().enumerate() {
        let got = family.epsilons()[idx];
        assert!(
            (got - p).abs() <= 1e-10 * p,
            "member {} value drifted: {got:e} vs pinned {p:e}",
            idx + 1
        );
    }
    let ledger = verify_family(&family).unwrap();
    for row in &ledger.rows {
        assert!(row.grad_sq_bound <= 1.0 + 1e-9);
        assert!(row.grad_quartic_bound <= 1.0 + 1e-9);
        assert!(row.floor_bound <= 1.0 + 1e-9);
        assert!(row.log_slope_bound <= 1.0 + 1e-9);
        // uniform convergence at rate 3^{-j}
        assert!(row.sup_dist <= 3.0 * pow3(row.j as i32));
        assert!(row.w_energy.is_finite() && row.w_weight.is_finite());
    }
    assert!(ledger.max_w_energy().is_finite());
    assert!(ledger.max_w_weight().is_finite());
}

#[test]
fn family_members_monotone_decreasing_in_j() {
    let grid = SpatialGrid::new(-1.0, 1.0, 400).unwrap();
    let d = sqrt_abs();
    let w0 = ScalarField::from_fn(&grid, |x| x.abs()).unwrap();
    let family = RegularizationFamily::build(&d, &w0, &grid, 5).unwrap();
    for j in 1..5 {
        let worst = family
            .d_eps(j + 1)
            .values()
            .iter()
            .zip(family.d_eps(j).values())
            .map(|(&next, &cur)| next - cur)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(worst <= 0.0, "member {} not below member {}", j + 1, j);
    }
}

#[test]
fn derivative_converges_on_compact_positivity_subsets() {
    let grid = SpatialGrid::new(-1.0, 1.0, 400).unwrap();
    let d = sqrt_abs();
    let w0 = ScalarField::from_fn(&grid, |x| x.abs()).unwrap();
    let family = RegularizationFamily::build(&d, &w0, &grid, 6).unwrap();
    let work = family.working_grid().clone();
    let errs: Vec<f64> = (1..=6)
        .map(|j| {
            work.centers()
                .iter()
                .enumerate()
                .filter(|(_, &x)| x.abs() >= 0.2)
                .map(|(k, _)| (family.phi_x_work(j)[k] - family.d_x_work()[k]).abs())
                .fold(0.0f64, f64::max)
        })
        .collect();
    // nonincreasing after a burn-in member
    for j in 2..6 {
        assert!(
            errs[j] <= errs[j - 1] * (1.0 + 1e-9),
            "derivative error grew between members {} and {}: {:?}",
            j,
            j + 1,
            errs
        );
    }
    assert!(errs[5] < errs[1]);
}

#[test]
fn cutoff_support_keeps_distance_to_zeros() {
    let grid = SpatialGrid::new(-1.0, 1.0, 400).unwrap();
    let d = sqrt_abs();
    let w0 = ScalarField::from_fn(&grid, |x| x.abs()).unwrap();
    let family = RegularizationFamily::build(&d, &w0, &grid, 5).unwrap();
    for j in 1..=5 {
        let widths = family.ramp_widths(j);
        for (&x, &v) in grid.centers().iter().zip(family.w0j(j).values()) {
            if v > 0.0 {
                assert!(d.eval(x) > 0.0);
                // distance to the zero at 0 is at least the ramp width of
                // the interval containing x
                let iv_idx = usize::from(x > 0.0);
                if iv_idx < j {
                    assert!(
                        x.abs() >= widths[iv_idx],
                        "member {j}: support too close to the zero at x = {x}"
                    );
                }
            }
        }
    }
}

#[test]
fn two_interior_zeros_use_two_sided_ramps() {
    // product coefficient with zeros at +-0.5: three positivity intervals,
    // the middle one ramped on both sides
    let grid = SpatialGrid::new(-1.0, 1.0, 400).unwrap();
    let d = CoefficientSpec::product_of_power_laws(vec![(-0.5, 0.4), (0.5, 0.4)], 1.0).unwrap();
    let w0 = ScalarField::from_fn(&grid, |x| (x * x - 0.25).abs()).unwrap();
    let family = RegularizationFamily::build(&d, &w0, &grid, 2).unwrap();
    assert_eq!(family.intervals().len(), 3);
    let mid = family.intervals()[1];
    assert!(mid.left_degenerate && mid.right_degenerate);
    let outer = family.intervals()[0];
    assert!(!outer.left_degenerate && outer.right_degenerate);

    // only the first j intervals contribute to member j's cutoff
    let w1 = family.w0j(1);
    for (&x, &v) in grid.centers().iter().zip(w1.values()) {
        if x > -0.5 {
            assert_eq!(v, 0.0, "member 1 must not cover interval 2+ at x = {x}");
        }
    }
    let w2 = family.w0j(2);
    assert!(
        grid.centers()
            .iter()
            .zip(w2.values())
            .any(|(&x, &v)| x > -0.5 && x < 0.5 && v > 0.0),
        "member 2 covers the middle interval"
    );
    for (&x, &v) in grid.centers().iter().zip(w2.values()) {
        if x > 0.5 {
            assert_eq!(
                v, 0.0,
                "member 2 must not cover the third interval at x = {x}"
            );
        }
        // support keeps the ramp distance on both sides of the middle interval
        if v > 0.0 && x > -0.5 && x < 0.5 {
            let delta = family.ramp_widths(2)[1];
            assert!(x + 0.5 >= delta && 0.5 - x >= delta);
        }
    }
    verify_family(&family).unwrap();

    // off-center zeros are displaced by the squeeze, so the boundary caps of
    // higher members fall below the working resolution of this grid
    let err = RegularizationFamily::build(&d, &w0, &grid, 3);
    assert!(matches!(
        err,
        Err(RegularizeError::CapTooNarrow { j: 3, .. })
    ));
}

#[test]
fn initial_energy_integral_stable_under_refinement() {
    let d = sqrt_abs();
    let c1_at = |n: usize| {
        let grid = SpatialGrid::new(-1.0, 1.0, n).unwrap();
        let w0 = ScalarField::from_fn(&grid, |x| x.abs()).unwrap();
        let family = RegularizationFamily::build(&d, &w0, &grid, 3).unwrap();
        // the ledger's w_energy column at the final shifts tracks the
        // uniform initial-data energy target
        family.ledger().max_w_energy()
    };
    let coarse = c1_at(400);
    let fine = c1_at(800);
    assert!(
        (fine - coarse).abs() <= 0.05 * coarse.abs().max(fine.abs()),
        "uniform energy bound unstable under refinement: {coarse} vs {fine}"
    );
}
