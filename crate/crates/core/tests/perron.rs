use hypermetric::closed_forms::hyperbolic_disk;
use hypermetric::perron::{perron_solve_with, DiskCover, PerronOptions, COVER_FRACTION};
use hypermetric::{curvature_estimate, Complex64, DomainSpec, NodeKind, RoundDisk};

fn two_holes() -> DomainSpec {
    DomainSpec::DiskMinusHoles {
        outer: RoundDisk::new(Complex64::new(0.0, 0.0), 1.0),
        holes: vec![
            RoundDisk::new(Complex64::new(-0.4, 0.1), 0.15),
            RoundDisk::new(Complex64::new(0.45, -0.2), 0.2),
        ],
    }
}

#[test]
fn two_hole_domain_dominates_disk_and_has_curvature_minus_one() {
    let g = two_holes();
    let h = 1.0 / 64.0;
    let cover = DiskCover::greedy(&g, h, COVER_FRACTION).unwrap();
    let mut opts = PerronOptions::new(1e-4, 300);
    opts.keep_snapshots = true;
    let (density, state) = perron_solve_with(&g, &cover, &opts).unwrap();
    assert!(state.converged, "{} sweeps", state.sweep_count);
    assert!(state.is_monotone());

    // every sweep raises every node: snapshots are nodewise nondecreasing
    for pair in state.snapshots.windows(2) {
        for (a, b) in pair[0].values().iter().zip(pair[1].values()) {
            assert!(b >= a);
        }
    }

    let grid = state.current.as_ref().unwrap().log_grid();
    let disk = hyperbolic_disk();
    for k in 0..grid.len() {
        if grid.mask()[k] != NodeKind::Outside {
            // exp(log x) may lose an ulp
            assert!(grid.values()[k].exp() >= disk.eval(grid.point_at(k)).unwrap() * (1.0 - 1e-12));
        }
    }

    // at this coarse spacing the patch-to-patch jumps of about 1e-5 in log λ,
    // divided by the squared stencil spacing, dominate the estimate
    let mut worst: f64 = 0.0;
    for j in 0..12 {
        for i in 0..12 {
            let z = Complex64::new(-0.9 + 0.15 * i as f64, -0.9 + 0.15 * j as f64);
            if g.boundary_distance(z) < 0.15 {
                continue;
            }
            let kappa = curvature_estimate(&density, z, 4.0 * h).unwrap();
            worst = worst.max((kappa + 1.0).abs());
        }
    }
    assert!(worst < 0.2, "max |kappa + 1| = {worst}");
}

#[test]
fn perron_state_serializes_without_the_grid() {
    let g = DomainSpec::unit_disk();
    let cover = DiskCover::greedy(&g, 1.0 / 16.0, COVER_FRACTION).unwrap();
    let (_, state) = perron_solve_with(&g, &cover, &PerronOptions::new(1e-2, 3)).unwrap();
    let json = serde_json::to_value(&state).unwrap();
    assert_eq!(json["sweep_count"], 1);
    assert!(json.get("current").is_none());
}
