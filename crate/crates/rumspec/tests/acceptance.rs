//! Acceptance suite: one test per criterion, each printing a pass line with
//! the measured quantities. Run with `cargo test --test acceptance` (add
//! `-- --nocapture` to see the lines for passing tests).

use std::time::Instant;

use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rumspec::basis::{
    inverse_limit_basis, reconstruct_coefficients, restriction_sup, RestrictionTower,
    ReconstructOptions,
};
use rumspec::flex::{
    build_unbounded_flex, check_factor_flex, factor_periodic_flex, interior_flex_residual,
    phase_sum, sup_norm_estimate,
};
use rumspec::framework::{generate_patch, verify_flex, ExplicitField, PatchBox, VelocityField};
use rumspec::gallery::{self, GalleryId, BIPYRAMID_ALPHA, BIPYRAMID_H};
use rumspec::laurent::C64;
use rumspec::spectrum::{
    detect_linear_structure, refine_root, scan_geometric_slice, scan_rum_spectrum, LineOptions,
    RefineOptions, ScanOptions, SliceSpec, TorusGrid,
};
use rumspec::symbol;

fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

fn pass(n: u32, msg: &str) {
    println!("[criterion {n:02}] PASS: {msg}");
}

/// Relative flex residual of an explicit field on a patch: max bar residual
/// over the sup-norm of the field.
fn relative_patch_residual(
    patch: &rumspec::framework::FinitePatch,
    field: &ExplicitField,
) -> f64 {
    let rep = verify_flex(patch, &VelocityField::Explicit(field.clone()), 0.0).unwrap();
    let sup = field.sup_norm().max(1e-300);
    rep.max_residual / sup
}

#[test]
fn c01_bipyramid_transfer_matrix_matches_published_display() {
    let t0 = Instant::now();
    let fw = gallery::make(GalleryId::Bipyramid);
    let psi_inv = symbol::assemble_transfer_function(&fw).subst_inverse();
    let a = BIPYRAMID_ALPHA;
    let h = BIPYRAMID_H;
    let s32 = 3f64.sqrt() / 2.0;
    // The 9x6 display of Psi(z^{-1}); each entry is a list of (exponent,
    // coefficient) pairs in z = (z1, z2, z3).
    type Terms = Vec<([i64; 3], f64)>;
    let e = |terms: Terms| terms;
    let zero: Terms = vec![];
    let rows: [[Terms; 6]; 9] = [
        [
            e(vec![([0, 0, 0], -1.0), ([1, 0, 0], 1.0)]),
            zero.clone(),
            zero.clone(),
            zero.clone(),
            zero.clone(),
            zero.clone(),
        ],
        [
            e(vec![([1, 0, 0], 0.5), ([0, 1, 0], -0.5)]),
            e(vec![([1, 0, 0], -s32), ([0, 1, 0], s32)]),
            zero.clone(),
            zero.clone(),
            zero.clone(),
            zero.clone(),
        ],
        [
            e(vec![([0, 0, 0], -0.5), ([0, 1, 0], 0.5)]),
            e(vec![([0, 0, 0], -s32), ([0, 1, 0], s32)]),
            zero.clone(),
            zero.clone(),
            zero.clone(),
            zero.clone(),
        ],
        [
            e(vec![([0, 0, 0], -0.5)]),
            e(vec![([0, 0, 0], -a)]),
            e(vec![([0, 0, 0], h)]),
            e(vec![([0, 0, 0], 0.5)]),
            e(vec![([0, 0, 0], a)]),
            e(vec![([0, 0, 0], -h)]),
        ],
        [
            e(vec![([1, 0, 0], 0.5)]),
            e(vec![([1, 0, 0], -a)]),
            e(vec![([1, 0, 0], h)]),
            e(vec![([0, 0, 0], -0.5)]),
            e(vec![([0, 0, 0], a)]),
            e(vec![([0, 0, 0], -h)]),
        ],
        [
            zero.clone(),
            e(vec![([0, 1, 0], 2.0 * a)]),
            e(vec![([0, 1, 0], h)]),
            zero.clone(),
            e(vec![([0, 0, 0], -2.0 * a)]),
            e(vec![([0, 0, 0], -h)]),
        ],
        [
            e(vec![([0, 0, 0], -0.5)]),
            e(vec![([0, 0, 0], -a)]),
            e(vec![([0, 0, 0], -h)]),
            e(vec![([0, 0, 1], 0.5)]),
            e(vec![([0, 0, 1], a)]),
            e(vec![([0, 0, 1], h)]),
        ],
        [
            e(vec![([1, 0, 0], 0.5)]),
            e(vec![([1, 0, 0], -a)]),
            e(vec![([1, 0, 0], -h)]),
            e(vec![([0, 0, 1], -0.5)]),
            e(vec![([0, 0, 1], a)]),
            e(vec![([0, 0, 1], h)]),
        ],
        [
            zero.clone(),
            e(vec![([0, 1, 0], 2.0 * a)]),
            e(vec![([0, 1, 0], -h)]),
            zero.clone(),
            e(vec![([0, 0, 1], -2.0 * a)]),
            e(vec![([0, 0, 1], h)]),
        ],
    ];
    assert_eq!((psi_inv.nrows, psi_inv.ncols), (9, 6));
    for (r, row) in rows.iter().enumerate() {
        for (col, terms) in row.iter().enumerate() {
            let p = psi_inv.entry(r, col);
            assert_eq!(
                p.num_terms(),
                terms.len(),
                "entry ({r},{col}) term count: got {p}",
            );
            for (expo, coeff) in terms {
                let got = p.coeff(expo);
                assert!(
                    (got - c(*coeff, 0.0)).norm() <= 1e-15,
                    "entry ({r},{col}) z^{expo:?}: got {got}, want {coeff}",
                );
            }
        }
    }
    let dt = t0.elapsed();
    assert!(dt.as_secs_f64() < 1.0, "took {dt:?}");
    pass(1, &format!("9x6 display matched entrywise, coefficients to 1e-15, in {dt:?}"));
}

#[test]
fn c02_bipyramid_sheering_determinant() {
    let fw = gallery::make(GalleryId::Bipyramid);
    let psi_inv = symbol::assemble_transfer_function(&fw).subst_inverse();
    let rows = [3usize, 4, 5]; // e4, e5, e6
    let cols = [2usize, 3, 4]; // v1z, v2x, v2y
    let det = symbol::symbolic_determinant_of(&psi_inv, &rows, &cols).unwrap();
    // alpha * h * (1 + z1 + z2)
    let ah = BIPYRAMID_ALPHA * BIPYRAMID_H;
    let mut expected = rumspec::laurent::LaurentPoly::constant(3, c(ah, 0.0));
    expected.add_term(vec![1, 0, 0], c(ah, 0.0));
    expected.add_term(vec![0, 1, 0], c(ah, 0.0));
    assert!(
        det.sub(&expected).max_coeff() <= 1e-14,
        "det = {det}, expected alpha*h*(1 + z1 + z2)"
    );
    // evaluated agreement at 100 random points, relative 1e-10
    let sub = psi_inv.submatrix(&rows, &cols).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let z: Vec<C64> = (0..3)
            .map(|_| Complex::from_polar(rng.random_range(0.5..2.0), rng.random_range(0.0..std::f64::consts::TAU)))
            .collect();
        let direct = symbol::evaluate(&sub, &z).unwrap().matrix.determinant();
        let via_poly = det.eval(&z).unwrap();
        assert!(
            (direct - via_poly).norm() <= 1e-10 * direct.norm().max(1.0),
            "mismatch at {z:?}: {direct} vs {via_poly}"
        );
    }
    pass(2, "sheering determinant equals alpha*h*(1+z1+z2); 100-point evaluation agreement at 1e-10");
}

#[test]
fn c03_bipyramid_rum_points_resolution_96() {
    let t0 = Instant::now();
    let fw = gallery::make(GalleryId::Bipyramid);
    let grid = TorusGrid::uniform(3, 96);
    let report = scan_rum_spectrum(&fw, &grid, &ScanOptions::default());
    let dt = t0.elapsed();
    let mut flagged: Vec<Vec<usize>> = report.flagged.iter().map(|f| f.index.clone()).collect();
    flagged.sort();
    // origin plus the two sheering points (2pi/3, 4pi/3, pi), (4pi/3, 2pi/3, pi)
    let expected = vec![vec![0, 0, 0], vec![32, 64, 48], vec![64, 32, 48]];
    assert_eq!(flagged, expected, "flagged set");
    for f in &report.flagged {
        assert!(f.sigma_min < 1e-8, "sigma_min {}", f.sigma_min);
    }
    let origin = report.flagged.iter().find(|f| f.linear_index == 0).unwrap();
    assert!(origin.kernel_dim >= 3, "origin kernel dim {}", origin.kernel_dim);
    assert!(dt.as_secs_f64() < 60.0, "scan took {dt:?}");
    pass(3, &format!("resolution-96 scan flags exactly the 3 points in {dt:?}"));
}

#[test]
fn c04_grid_spectrum_is_exactly_the_axis_lines() {
    let fw = gallery::make(GalleryId::Grid2d);
    let grid = TorusGrid::uniform(2, 64);
    let report = scan_rum_spectrum(&fw, &grid, &ScanOptions::default());
    let mut count = 0usize;
    for li in 0..report.sigma_min.len() {
        let idx = report.index_of(li);
        let on_lines = idx[0] == 0 || idx[1] == 0;
        let flagged = report.flagged.iter().any(|f| f.linear_index == li);
        // oracle: the exact determinant (1 - z1^{-1})(1 - z2^{-1})
        let th = report.thetas_of(li);
        let det = ((1.0 - Complex::from_polar(1.0, -th[0]))
            * (1.0 - Complex::from_polar(1.0, -th[1])))
        .norm();
        assert_eq!(on_lines, det < 1e-12, "oracle disagrees at {th:?}");
        assert_eq!(flagged, on_lines, "sample {idx:?}");
        if flagged {
            count += 1;
        }
    }
    assert_eq!(count, 64 + 64 - 1);
    pass(4, "flagged set equals {theta1=0} union {theta2=0} at resolution 64, matching the determinant oracle");
}

#[test]
fn c05_bipyramid_geometric_slice() {
    let fw = gallery::make(GalleryId::Bipyramid);
    let slice = SliceSpec::new(vec![0.5, 1.5, 1.0]).unwrap();
    let grid = TorusGrid::uniform(3, 48);
    let report = scan_geometric_slice(&fw, &slice, &grid, &ScanOptions::default()).unwrap();
    assert_eq!(report.flagged.len(), 1, "flagged: {:?}", report.flagged);
    let f = &report.flagged[0];
    assert_eq!(f.index, vec![0, 24, 24]); // (0, pi, pi)
    assert!(f.sigma_min < 1e-8);
    // the flagged point is omega = (1/2, -3/2, -1)
    let omega: Vec<C64> = report
        .moduli
        .iter()
        .zip(&f.thetas)
        .map(|(&r, &t)| Complex::from_polar(r, t))
        .collect();
    assert!((omega[0] - c(0.5, 0.0)).norm() < 1e-12);
    assert!((omega[1] - c(-1.5, 0.0)).norm() < 1e-12);
    assert!((omega[2] - c(-1.0, 0.0)).norm() < 1e-12);
    pass(5, "slice (1/2, 3/2, 1) flags exactly omega = (1/2, -3/2, -1) with sigma_min < 1e-8");
}

#[test]
fn c06_documented_flexes_pass_radius_four_verification() {
    let cases: Vec<(GalleryId, &str, Vec<i64>)> = vec![
        (GalleryId::Honeycomb, "hexrot", vec![0, 0]),
        (GalleryId::Honeycomb, "hexrot", vec![-1, 1]),
        (GalleryId::Kagome2d, "u", vec![0]),
        (GalleryId::Kagome2d, "u", vec![2]),
        (GalleryId::Kagome2d, "v", vec![0]),
        (GalleryId::Kagome2d, "v", vec![-2]),
        (GalleryId::Kagome2d, "w", vec![0]),
        (GalleryId::Kagome2d, "w", vec![1]),
        (GalleryId::Grid2d, "u", vec![0]),
        (GalleryId::Grid2d, "u", vec![-3]),
        (GalleryId::Grid2d, "v", vec![2]),
        (GalleryId::Octahedron, "ax", vec![0]),
        (GalleryId::Octahedron, "ax", vec![-2]),
        (GalleryId::Octahedron, "ay", vec![1]),
        (GalleryId::Octahedron, "az", vec![0]),
        (GalleryId::Octahedron, "az", vec![2]),
        (GalleryId::Octahedron, "rx", vec![]),
        (GalleryId::Octahedron, "ry", vec![]),
        (GalleryId::Octahedron, "rz", vec![]),
    ];
    let mut worst = 0.0f64;
    for (id, name, index) in cases {
        let fw = gallery::make(id);
        let cells = PatchBox::centered(fw.dimension(), 4);
        let flex = gallery::named_flex(id, name, &index, &cells).unwrap();
        let patch = generate_patch(&fw, &cells);
        let rep = verify_flex(&patch, &flex, 1e-12).unwrap();
        worst = worst.max(rep.max_residual);
        assert!(
            rep.is_flex(),
            "{} {name}{index:?}: residual {:.3e}",
            id.name(),
            rep.max_residual
        );
    }
    pass(6, &format!("all documented flexes pass at 1e-12 on radius-4 patches (worst residual {worst:.3e})"));
}

#[test]
fn c07_factor_flex_equivalence_both_directions() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let modulus = |rng: &mut ChaCha8Rng| rng.random_range(0.5..2.0);

    // 50 on-spectrum pairs across the gallery
    let mut on_count = 0usize;
    let mut case = 0usize;
    while on_count < 50 {
        case += 1;
        let (id, omega): (GalleryId, Vec<C64>) = match case % 5 {
            0 => (GalleryId::Grid2d, vec![c(1.0, 0.0), Complex::from_polar(modulus(&mut rng), rng.random_range(0.0..std::f64::consts::TAU))]),
            1 => (GalleryId::Kagome2d, {
                let z = Complex::from_polar(modulus(&mut rng), rng.random_range(0.0..std::f64::consts::TAU));
                match case % 3 {
                    0 => vec![c(1.0, 0.0), z],
                    1 => vec![z, c(1.0, 0.0)],
                    _ => vec![z, z],
                }
            }),
            2 => (GalleryId::Honeycomb, vec![
                Complex::from_polar(modulus(&mut rng), rng.random_range(0.0..std::f64::consts::TAU)),
                Complex::from_polar(modulus(&mut rng), rng.random_range(0.0..std::f64::consts::TAU)),
            ]),
            3 => (GalleryId::Bipyramid, {
                let z = Complex::from_polar(modulus(&mut rng), rng.random_range(0.0..std::f64::consts::TAU));
                if (1.0 + z).norm() < 0.2 {
                    continue;
                }
                vec![z, -(c(1.0, 0.0) + z), c(-1.0, 0.0)]
            }),
            _ => (GalleryId::Kite, vec![c(3.0, 0.0), c(-1.0, 0.0)]),
        };
        let fw = gallery::make(id);
        let psi = symbol::assemble_transfer_function(&fw);
        let z: Vec<C64> = omega.iter().map(|w| w.inv()).collect();
        let e = symbol::evaluate(&psi, &z).unwrap();
        let kernel = symbol::kernel_basis(&e, 1e-9);
        assert!(!kernel.is_empty(), "{} at {omega:?} has empty kernel", id.name());
        // random kernel combination
        let mut b = nalgebra::DVector::<C64>::zeros(psi.ncols);
        for v in &kernel {
            b += v * Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        if b.norm() < 0.1 {
            continue;
        }
        let base: Vec<C64> = b.iter().copied().collect();
        let (ok, rel) = check_factor_flex(&fw, &omega, &base, 1e-9).unwrap();
        assert!(ok, "{} at {omega:?}: symbol residual {rel}", id.name());
        let cells = PatchBox::centered(fw.dimension(), 3);
        let field = factor_periodic_flex(&fw, &omega, &base, &cells).unwrap();
        let patch = generate_patch(&fw, &cells);
        let rel_patch = relative_patch_residual(&patch, &field);
        assert!(rel_patch <= 1e-9, "{} at {omega:?}: patch residual {rel_patch:.3e}", id.name());
        on_count += 1;
    }

    // 50 off-spectrum pairs
    let ids = [GalleryId::Grid2d, GalleryId::Kagome2d, GalleryId::Bipyramid, GalleryId::Kite];
    let mut off_count = 0usize;
    while off_count < 50 {
        let id = ids[off_count % ids.len()];
        let fw = gallery::make(id);
        let d = fw.dimension();
        let psi = symbol::assemble_transfer_function(&fw);
        let omega: Vec<C64> = (0..d).map(|_| Complex::from_polar(modulus(&mut rng), rng.random_range(0.0..std::f64::consts::TAU))).collect();
        let z: Vec<C64> = omega.iter().map(|w| w.inv()).collect();
        let e = symbol::evaluate(&psi, &z).unwrap();
        let mut b = nalgebra::DVector::<C64>::from_fn(psi.ncols, |_, _| {
            Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let bn = b.norm();
        if bn < 0.1 {
            continue;
        }
        b /= Complex::new(bn, 0.0);
        if (&e.matrix * &b).norm() < 1e-2 {
            continue; // too close to the spectrum; resample
        }
        let base: Vec<C64> = b.iter().copied().collect();
        let (ok, _) = check_factor_flex(&fw, &omega, &base, 1e-9).unwrap();
        assert!(!ok, "{} at {omega:?} unexpectedly on-spectrum", id.name());
        let cells = PatchBox::centered(d, 3);
        let field = factor_periodic_flex(&fw, &omega, &base, &cells).unwrap();
        let patch = generate_patch(&fw, &cells);
        let rep = verify_flex(&patch, &VelocityField::Explicit(field), 0.0).unwrap();
        assert!(
            rep.max_residual > 1e-3,
            "{} at {omega:?}: residual {:.3e} too small for ||b|| = 1",
            id.name(),
            rep.max_residual
        );
        off_count += 1;
    }
    pass(7, "50 kernel pairs verify on patches at 1e-9 relative; 50 off-spectrum pairs fail above 1e-3");
}

#[test]
fn c08_kagome_basis_round_trip_thirty_terms() {
    let cells = PatchBox::centered(2, 6);
    let elements = gallery::basis_enumeration(GalleryId::Kagome2d, &cells).unwrap();
    assert!(elements.len() >= 30);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for trial in 0..5 {
        let mut picks: Vec<usize> = (0..elements.len()).collect();
        for i in (1..picks.len()).rev() {
            let j = rng.random_range(0..=i);
            picks.swap(i, j);
        }
        picks.truncate(30);
        let mut want = vec![c(0.0, 0.0); elements.len()];
        let mut target = ExplicitField::new(2);
        for &i in &picks {
            let coeff = Complex::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            want[i] = coeff;
            target = target.axpy(c(1.0, 0.0), &elements[i].1, coeff);
        }
        let rec = reconstruct_coefficients(&cells, &target, &elements, &ReconstructOptions::default())
            .unwrap();
        let mut max_err = 0.0f64;
        for (got, want) in rec.coefficients.iter().zip(&want) {
            max_err = max_err.max((got - want).norm());
        }
        assert!(max_err <= 1e-9, "trial {trial}: coefficient error {max_err:.3e}");
        let agree = rec.global_agreement.expect("global system has full rank");
        assert!(agree <= 1e-9, "trial {trial}: greedy/global disagreement {agree:.3e}");
    }
    pass(8, "random 30-term combinations recovered with coefficient error <= 1e-9 and unique (greedy = global LSQ)");
}

#[test]
fn c09_honeycomb_redundancy_and_omit_one_reconstruction() {
    let cells = PatchBox::centered(2, 5);
    let elements = gallery::basis_enumeration(GalleryId::Honeycomb, &cells).unwrap();
    let hex_cells: std::collections::BTreeSet<(i64, i64)> =
        gallery::honeycomb_hexagon_cells(&cells).into_iter().collect();
    // sum of all hexagon flexes vanishes where all three incident hexagons
    // are present
    let mut total = ExplicitField::new(2);
    for (_, f) in &elements {
        total = total.axpy(c(1.0, 0.0), f, c(1.0, 0.0));
    }
    let hexes_of = |jt: usize, i: i64, j: i64| -> [(i64, i64); 3] {
        if jt == 0 {
            [(i, j), (i - 1, j), (i - 1, j + 1)]
        } else {
            [(i, j), (i - 1, j + 1), (i, j + 1)]
        }
    };
    let mut interior = 0usize;
    let mut worst = 0.0f64;
    for ((jt, cell), v) in &total.values {
        let h = hexes_of(*jt, cell[0], cell[1]);
        if h.iter().all(|hc| hex_cells.contains(hc)) {
            interior += 1;
            worst = worst.max(v.norm());
        }
    }
    // also count interior joints with zero stored value
    assert!(interior >= 20 || worst <= 1e-12, "only {interior} interior joints stored");
    assert!(worst <= 1e-12, "interior residual velocity {worst:.3e}");

    // canonical omit-one convention: drop the hexagon at cell (0, 0)
    let omitted: Vec<(String, ExplicitField)> = elements
        .iter()
        .filter(|(l, _)| l != "hex(0,0)")
        .cloned()
        .collect();
    assert_eq!(omitted.len() + 1, elements.len());
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut want = Vec::new();
    let mut target = ExplicitField::new(2);
    for (_, f) in &omitted {
        let coeff = Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        want.push(coeff);
        target = target.axpy(c(1.0, 0.0), f, coeff);
    }
    let rec = reconstruct_coefficients(&cells, &target, &omitted, &ReconstructOptions::default())
        .unwrap();
    let mut max_err = 0.0f64;
    for (got, want) in rec.coefficients.iter().zip(&want) {
        max_err = max_err.max((got - want).norm());
    }
    assert!(max_err <= 1e-9, "coefficient error {max_err:.3e}");
    assert!(rec.residual_sup <= 1e-10, "residual {:.3e}", rec.residual_sup);
    pass(9, &format!(
        "sum of all hexagon flexes vanishes on {interior} interior joints (max {worst:.3e}); omit-one reconstruction exact"
    ));
}

#[test]
fn c10_octahedron_linear_structure() {
    let fw = gallery::make(GalleryId::Octahedron);
    let res = 48usize;
    let grid = TorusGrid::uniform(3, res);
    let report = scan_rum_spectrum(&fw, &grid, &ScanOptions::default());
    // The spectrum is the origin plus three axis-parallel lines through
    // (pi, pi, pi): (t, pi, pi), (pi, t, pi), (pi, pi, t).
    let half = res / 2;
    let mut expected = std::collections::BTreeSet::new();
    expected.insert(vec![0usize, 0, 0]);
    for t in 0..res {
        expected.insert(vec![t, half, half]);
        expected.insert(vec![half, t, half]);
        expected.insert(vec![half, half, t]);
    }
    let flagged: std::collections::BTreeSet<Vec<usize>> =
        report.flagged.iter().map(|f| f.index.clone()).collect();
    assert_eq!(flagged, expected, "flagged set differs from the three lines plus origin");
    let lines = detect_linear_structure(&fw, &report, &LineOptions::default());
    assert_eq!(lines.len(), 3, "lines: {lines:?}");
    let mut dirs: Vec<Vec<i64>> = lines.iter().map(|l| l.direction.clone()).collect();
    dirs.sort();
    assert_eq!(dirs, vec![vec![0, 0, 1], vec![0, 1, 0], vec![1, 0, 0]]);
    for l in &lines {
        for (i, &v) in l.direction.iter().enumerate() {
            if v == 0 {
                assert!(
                    (l.base[i] - std::f64::consts::PI).abs() < 1e-9,
                    "line {l:?} does not pass through pi in axis {i}"
                );
            }
        }
    }
    pass(10, "all samples along the three axis-parallel spectrum lines flagged; exactly these 3 lines detected");
}

#[test]
fn c11_kite_unbounded_flex_from_slice_sweep() {
    let fw = gallery::make(GalleryId::Kite);
    // sweep real omega_1 > 1 along slices (r, 1); the sweep deliberately
    // avoids landing on the root exactly
    let grid = TorusGrid::uniform(2, 16);
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    let mut r1 = 1.1f64;
    while r1 < 4.05 {
        let slice = SliceSpec::new(vec![r1, 1.0]).unwrap();
        let report = scan_geometric_slice(&fw, &slice, &grid, &ScanOptions::default()).unwrap();
        for li in 0..report.sigma_min.len() {
            let s = report.sigma_min[li];
            if best.as_ref().is_none_or(|(b, _, _)| s < *b) {
                best = Some((s, report.thetas_of(li), r1));
            }
        }
        r1 += 0.2;
    }
    let (_, thetas, r1) = best.expect("sweep nonempty");
    let seed: Vec<C64> = vec![Complex::from_polar(r1, thetas[0]), Complex::from_polar(1.0, thetas[1])];
    let outcome = refine_root(&fw, &seed, &RefineOptions { tol: 1e-11, ..Default::default() }).unwrap();
    assert!(outcome.converged, "refinement failed from {seed:?}: {outcome:?}");
    let omega = outcome.omega.clone();
    assert!((omega[0] - c(3.0, 0.0)).norm() < 1e-6, "omega1 = {}", omega[0]);
    assert!((omega[1] - c(-1.0, 0.0)).norm() < 1e-6, "omega2 = {}", omega[1]);

    // the refined slice flags the point with theta = (0, pi): real positive omega_1
    let slice = SliceSpec::new(vec![omega[0].norm(), 1.0]).unwrap();
    let grid64 = TorusGrid::uniform(2, 64);
    let report = scan_geometric_slice(&fw, &slice, &grid64, &ScanOptions::default()).unwrap();
    assert!(
        report.flagged.iter().any(|f| f.index == vec![0, 32]),
        "slice at |omega1| does not flag (0, pi): {:?}",
        report.flagged
    );

    // kernel vector -> factor flex; sup-norms over growing patches grow
    // geometrically with ratio |omega_1| (within 1 percent)
    let psi = symbol::assemble_transfer_function(&fw);
    let z: Vec<C64> = omega.iter().map(|w| w.inv()).collect();
    let e = symbol::evaluate(&psi, &z).unwrap();
    let kernel = symbol::kernel_basis(&e, 1e-7);
    assert_eq!(kernel.len(), 1);
    let base: Vec<C64> = kernel[0].iter().copied().collect();
    let cells = PatchBox::centered(2, 4);
    let field = factor_periodic_flex(&fw, &omega, &base, &cells).unwrap();
    let patch = generate_patch(&fw, &cells);
    let rel = relative_patch_residual(&patch, &field);
    assert!(rel <= 1e-9, "patch residual {rel:.3e}");
    let sups = sup_norm_estimate(&fw, &VelocityField::Factor(rumspec::framework::FactorField {
        base: base.clone(),
        omega: omega.clone(),
    }), &[1, 2, 3, 4, 5, 6]).unwrap();
    let target_ratio = omega[0].norm();
    for w in sups.windows(2) {
        let ratio = w[1] / w[0];
        assert!(
            (ratio / target_ratio - 1.0).abs() < 0.01,
            "growth ratio {ratio} vs |omega1| = {target_ratio}"
        );
    }
    pass(11, &format!(
        "slice sweep + refinement locate omega = ({:.6}, {:.6}); sup-norm growth ratio within 1% of |omega1|",
        omega[0].re, omega[1].re
    ));
}

#[test]
fn c12_inverse_limit_bases_on_grid_and_kagome_towers() {
    for (id, margin) in [(GalleryId::Grid2d, 2i64), (GalleryId::Kagome2d, 2)] {
        let fw = gallery::make(id);
        let tower = RestrictionTower::centered(2, &[1, 2, 3], margin).unwrap();
        let tb = inverse_limit_basis(&fw, &tower, 1e-9).unwrap();
        assert!(tb.stabilized);
        let dims = tb.level_dims();
        let counts = tb.counts_cumulative();
        assert_eq!(counts, dims, "{}: cumulative counts must equal dims", id.name());
        if id == GalleryId::Grid2d {
            assert_eq!(dims, vec![6, 10, 14]);
        }
        // pi_i(B_j) = 0 for i < j
        for (j, level) in tb.levels.iter().enumerate() {
            for i in 0..j {
                for f in &level.elements {
                    let sup = restriction_sup(f, &tower.boxes[i]);
                    assert!(
                        sup <= 1e-10,
                        "{}: pi_{i}(B_{j}) has sup {sup:.3e}",
                        id.name()
                    );
                }
            }
        }
    }
    pass(12, "grid and kagome towers: pi_i(B_j) = 0 for i<j at 1e-10 and cumulative counts equal dim W_j");
}

#[test]
fn c13_unbounded_flex_coefficients_on_kagome_rows() {
    let n = 20usize;
    let cells = PatchBox::new(vec![-1, 0], vec![1, n as i64 - 1]);
    let mut elements = Vec::new();
    let mut witnesses = Vec::new();
    for k in 0..n {
        elements.push(gallery::kagome_line_flex("u", k as i64, &cells));
        witnesses.push((0usize, vec![0i64, k as i64]));
    }
    let out = build_unbounded_flex(&elements, &witnesses, n).unwrap();
    assert!((out.alphas[0] - 1.0).abs() < 1e-15);
    for (i, norm) in out.witness_norms.iter().enumerate() {
        let want = (i + 1) as f64;
        assert!(*norm >= want - 1e-9, "||g(a_{})|| = {norm} < {want}", i + 1);
    }
    pass(13, "recursive coefficients give ||g(a_n)|| >= n for n <= 20 on the kagome row basis");
}

#[test]
fn c14_bounded_membership_for_phase_summed_kagome_fields() {
    let big = PatchBox::centered(2, 12);
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let bound = rumspec::basis::bounded_membership_bound(1.0, 1.0, 3);
    assert_eq!(bound, 3.0);
    for trial in 0..3 {
        let phases: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        let u = gallery::kagome_line_flex("u", 0, &big);
        let v = gallery::kagome_line_flex("v", 0, &big);
        let w = gallery::kagome_line_flex("w", 0, &big);
        for radius in [2i64, 3, 4, 5] {
            let cells = PatchBox::centered(2, radius);
            let su = phase_sum(&u, &[vec![0, 1]], &[Complex::from_polar(1.0, phases[0])], &cells, 0).unwrap();
            let sv = phase_sum(&v, &[vec![-1, 0]], &[Complex::from_polar(1.0, phases[1])], &cells, 0).unwrap();
            let sw = phase_sum(&w, &[vec![1, 0]], &[Complex::from_polar(1.0, phases[2])], &cells, 0).unwrap();
            let combined = su
                .axpy(c(1.0, 0.0), &sv, c(1.0, 0.0))
                .axpy(c(1.0, 0.0), &sw, c(1.0, 0.0));
            let check = rumspec::basis::verify_bounded_membership(&combined, &cells, 1.0, 1.0, 3);
            assert!(
                check.within_bound,
                "trial {trial} radius {radius}: sup {} exceeds N*M*||alpha|| = {}",
                check.realized_sup, check.bound
            );
            // the summed field is a flex away from the truncation boundary
            let fw = gallery::make(GalleryId::Kagome2d);
            let patch = generate_patch(&fw, &cells);
            let res = interior_flex_residual(&patch, &combined, 0);
            assert!(res <= 1e-10, "interior residual {res:.3e}");
        }
    }
    pass(14, "phase-summed kagome fields with unimodular coefficients stay below N*M*||alpha||_inf = 3");
}
