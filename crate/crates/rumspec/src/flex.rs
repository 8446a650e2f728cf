//! Construction and analysis of flexes: factor-periodic fields, geometric
//! directions, band structure, phase sums, unbounded-flex coefficients and
//! sup-norm growth.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Result, RumspecError};
use crate::framework::{CrystalFramework, ExplicitField, FactorField, FinitePatch, PatchBox, VelocityField};
use crate::laurent::C64;
use crate::linalg;
use crate::symbol;

/// A lattice translation under which a field is an eigenvector: the field
/// satisfies f(a + vector) = lambda * f(a) wherever both labels are inside
/// the tested box.
#[derive(Debug, Clone)]
pub struct GeometricDirection {
    pub vector: Vec<i64>,
    pub lambda: C64,
}

/// Support geometry of an explicit field: the rank of the integer lattice
/// generated by differences of its support cells, witness generators for
/// that lattice, and whether the field is band-limited (support within
/// bounded distance of a proper subspace; rank d means it is not).
#[derive(Debug, Clone)]
pub struct BandReport {
    pub support_rank: usize,
    pub band_limited: bool,
    pub generators: Vec<Vec<i64>>,
}

/// Realize the factor-periodic field u(kappa, k) = omega^k b_kappa on the
/// cells of a box.
pub fn factor_periodic_flex(
    fw: &CrystalFramework,
    omega: &[C64],
    base: &[C64],
    cells: &PatchBox,
) -> Result<ExplicitField> {
    let d = fw.dimension();
    if omega.len() != d {
        return Err(RumspecError::DimensionMismatch { expected: d, got: omega.len() });
    }
    for (i, w) in omega.iter().enumerate() {
        if w.norm_sqr() == 0.0 {
            return Err(RumspecError::ZeroComponent(i));
        }
    }
    if base.len() != d * fw.joint_count() {
        return Err(RumspecError::DimensionMismatch { expected: d * fw.joint_count(), got: base.len() });
    }
    let rule = FactorField { base: base.to_vec(), omega: omega.to_vec() };
    let mut out = ExplicitField::new(d);
    for cell in cells.cells() {
        let w = rule.omega_power(&cell);
        for jt in 0..fw.joint_count() {
            let v = DVector::from_fn(d, |i, _| rule.base[jt * d + i] * w);
            out.set(jt, cell.clone(), v);
        }
    }
    Ok(out)
}

/// Membership test for the factor-periodic flex criterion
/// Psi(omega^{-1}) b = 0: true when the normalized residual is at most
/// tol. Returns the relative residual.
pub fn check_factor_flex(fw: &CrystalFramework, omega: &[C64], base: &[C64], tol: f64) -> Result<(bool, f64)> {
    let d = fw.dimension();
    if omega.len() != d {
        return Err(RumspecError::DimensionMismatch { expected: d, got: omega.len() });
    }
    if base.len() != d * fw.joint_count() {
        return Err(RumspecError::DimensionMismatch { expected: d * fw.joint_count(), got: base.len() });
    }
    let psi = symbol::assemble_transfer_function(fw);
    let z: Vec<C64> = omega
        .iter()
        .enumerate()
        .map(|(i, w)| {
            if w.norm_sqr() == 0.0 {
                Err(RumspecError::ZeroComponent(i))
            } else {
                Ok(w.inv())
            }
        })
        .collect::<Result<_>>()?;
    let e = symbol::evaluate(&psi, &z)?;
    let b = DVector::from_vec(base.to_vec());
    let bnorm = b.norm();
    if bnorm == 0.0 {
        return Ok((true, 0.0));
    }
    let (_, smax) = linalg::sigma_extremes_complex(&e.matrix);
    let rel = (&e.matrix * &b).norm() / (smax.max(1.0) * bnorm);
    Ok((rel <= tol, rel))
}

/// All integer lattice vectors v with sup-norm at most `radius` such that a
/// single scalar lambda fits f(a + v) = lambda f(a) over every overlapping
/// pair of labels inside `cells`, to relative tolerance `tol`.
pub fn detect_geometric_directions(
    u: &ExplicitField,
    cells: &PatchBox,
    radius: i64,
    tol: f64,
) -> Vec<GeometricDirection> {
    let d = cells.dim();
    let mut out = Vec::new();
    let offsets = PatchBox::centered(d, radius).cells();
    for v in offsets {
        // least squares for lambda over overlapping joints
        let mut num = Complex::new(0.0, 0.0);
        let mut den = 0.0f64;
        let mut ynorm2 = 0.0f64;
        let mut pairs = Vec::new();
        for ((jt, cell), x) in &u.values {
            let target: Vec<i64> = cell.iter().zip(&v).map(|(c, o)| c + o).collect();
            if !cells.contains(cell) || !cells.contains(&target) {
                continue;
            }
            let y = u.at(*jt, &target);
            for i in 0..u.dim {
                num += x[i].conj() * y[i];
                den += x[i].norm_sqr();
                ynorm2 += y[i].norm_sqr();
            }
            pairs.push((x.clone(), y));
        }
        // also count support at the shifted position with zero source: those
        // force a mismatch and are caught by the residual below when the
        // source is inside the box
        for ((jt, cell), y) in &u.values {
            let source: Vec<i64> = cell.iter().zip(&v).map(|(c, o)| c - o).collect();
            if !cells.contains(cell) || !cells.contains(&source) {
                continue;
            }
            if u.values.contains_key(&(*jt, source.clone())) {
                continue; // already covered
            }
            let x = DVector::<C64>::zeros(u.dim);
            ynorm2 += y.norm_squared();
            pairs.push((x, y.clone()));
        }
        if den == 0.0 {
            continue;
        }
        let lambda = num / Complex::new(den, 0.0);
        if lambda.norm() == 0.0 {
            continue;
        }
        let mut res2 = 0.0f64;
        for (x, y) in &pairs {
            res2 += (y - x * lambda).norm_squared();
        }
        if res2.sqrt() <= tol * ynorm2.sqrt().max(1e-300) {
            out.push(GeometricDirection { vector: v, lambda });
        }
    }
    out
}

/// Support lattice rank and band flag of an explicit field.
pub fn band_report(u: &ExplicitField, d: usize) -> BandReport {
    let cells = u.support_cells();
    if cells.is_empty() {
        return BandReport { support_rank: 0, band_limited: true, generators: Vec::new() };
    }
    let base = &cells[0];
    let diffs: Vec<Vec<i64>> = cells.iter().skip(1).map(|c| c.iter().zip(base).map(|(a, b)| a - b).collect()).collect();
    let mut generators: Vec<Vec<i64>> = Vec::new();
    for diff in diffs {
        if diff.iter().all(|&x| x == 0) {
            continue;
        }
        let mut trial = generators.clone();
        trial.push(diff.clone());
        let m = DMatrix::<f64>::from_fn(d, trial.len(), |i, jx| trial[jx][i] as f64);
        let rank = m.svd(false, false).rank(1e-9);
        if rank == trial.len() {
            generators.push(diff);
        }
        if generators.len() == d {
            break;
        }
    }
    let t = generators.len();
    BandReport { support_rank: t, band_limited: t < d, generators }
}

/// Truncated phase sum of a band-limited field over the translates along
/// `transverse` lattice generators, weighted by powers of omega_star:
/// w = sum_{k'} omega_star^{k'} (T_{k'} u). All translates whose support
/// meets the box grown by `margin` are included; the result is exact on
/// every joint of the box when `u` covers its own band across the box.
pub fn phase_sum(
    u: &ExplicitField,
    transverse: &[Vec<i64>],
    omega_star: &[C64],
    cells: &PatchBox,
    margin: i64,
) -> Result<ExplicitField> {
    let d = cells.dim();
    if transverse.len() != omega_star.len() {
        return Err(RumspecError::DimensionMismatch { expected: transverse.len(), got: omega_star.len() });
    }
    if transverse.is_empty() {
        // rank-d support: nothing to sum over
        return Ok(u.clone());
    }
    for (i, w) in omega_star.iter().enumerate() {
        if w.norm_sqr() == 0.0 {
            return Err(RumspecError::ZeroComponent(i));
        }
    }
    let sup = u.support_cells();
    if sup.is_empty() {
        return Ok(ExplicitField::new(u.dim));
    }
    let grown = cells.grown(margin);
    // conservative per-generator range from box and support extents
    let extent = |cells: &[Vec<i64>], axis: usize| -> (i64, i64) {
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        for c in cells {
            lo = lo.min(c[axis]);
            hi = hi.max(c[axis]);
        }
        (lo, hi)
    };
    let mut bound = 0i64;
    for axis in 0..d {
        let (slo, shi) = extent(&sup, axis);
        bound = bound.max((grown.hi[axis] - slo).abs()).max((shi - grown.lo[axis]).abs());
    }
    let k_range = PatchBox::centered(transverse.len(), bound).cells();
    let mut out = ExplicitField::new(u.dim);
    for kp in k_range {
        let shift: Vec<i64> = (0..d)
            .map(|axis| kp.iter().zip(transverse).map(|(&ki, g)| ki * g[axis]).sum())
            .collect();
        // does the shifted support meet the grown box?
        let meets = sup.iter().any(|c| {
            let t: Vec<i64> = c.iter().zip(&shift).map(|(a, b)| a + b).collect();
            grown.contains(&t)
        });
        if !meets {
            continue;
        }
        let weight = kp
            .iter()
            .zip(omega_star)
            .fold(Complex::new(1.0, 0.0), |acc, (&k, w)| acc * w.powi(k as i32));
        for ((jt, cell), v) in &u.values {
            let t: Vec<i64> = cell.iter().zip(&shift).map(|(a, b)| a + b).collect();
            if grown.contains(&t) {
                out.add_to(*jt, t, &(v * weight));
            }
        }
    }
    Ok(out)
}

/// Coefficients and partial sum of an unbounded flex built from a witness
/// chain: alpha_1 = 1 and |alpha_n| = n + ||sum_{k<n} alpha_k h_k(a_n)||,
/// after normalizing each h_k so that ||h_k(a_k)|| = 1. The partial sum g
/// then satisfies ||g(a_n)|| >= n for every n up to the horizon.
#[derive(Debug, Clone)]
pub struct UnboundedFlex {
    pub alphas: Vec<f64>,
    pub partial_sum: ExplicitField,
    pub witness_norms: Vec<f64>,
}

pub fn build_unbounded_flex(
    elements: &[ExplicitField],
    witnesses: &[(usize, Vec<i64>)],
    horizon: usize,
) -> Result<UnboundedFlex> {
    if elements.len() < horizon || witnesses.len() < horizon {
        return Err(RumspecError::InvalidArgument(format!(
            "need at least {horizon} elements and witnesses"
        )));
    }
    let d = elements.first().map(|e| e.dim).unwrap_or(0);
    let mut normalized = Vec::with_capacity(horizon);
    for k in 0..horizon {
        let (jt, cell) = &witnesses[k];
        let v = elements[k].at(*jt, cell);
        let n = v.norm();
        if n == 0.0 {
            return Err(RumspecError::WitnessChain(k, "element vanishes at its own witness".into()));
        }
        for (jprev, w) in witnesses.iter().enumerate().take(k) {
            if elements[k].at(w.0, &w.1).norm() > 1e-12 {
                return Err(RumspecError::WitnessChain(
                    k,
                    format!("element {k} does not vanish at earlier witness {jprev}"),
                ));
            }
        }
        normalized.push(elements[k].scaled(Complex::new(1.0 / n, 0.0)));
    }
    let mut alphas = Vec::with_capacity(horizon);
    let mut partial = ExplicitField::new(d);
    for n in 0..horizon {
        let (jt, cell) = &witnesses[n];
        let alpha = if n == 0 {
            1.0
        } else {
            (n as f64 + 1.0) + partial.at(*jt, cell).norm()
        };
        alphas.push(alpha);
        partial = partial.axpy(Complex::new(1.0, 0.0), &normalized[n], Complex::new(alpha, 0.0));
    }
    let witness_norms: Vec<f64> = witnesses
        .iter()
        .take(horizon)
        .map(|(jt, cell)| partial.at(*jt, cell).norm())
        .collect();
    Ok(UnboundedFlex { alphas, partial_sum: partial, witness_norms })
}

/// Sup-norms of a field over the growing patches [-r, r]^d for each radius.
pub fn sup_norm_estimate(fw: &CrystalFramework, field: &VelocityField, radii: &[i64]) -> Result<Vec<f64>> {
    let d = fw.dimension();
    let mut out = Vec::with_capacity(radii.len());
    for &r in radii {
        let cells = PatchBox::centered(d, r);
        let mut sup = 0.0f64;
        match field {
            VelocityField::Explicit(f) => {
                for ((_, cell), v) in &f.values {
                    if cells.contains(cell) {
                        sup = sup.max(v.norm());
                    }
                }
            }
            VelocityField::Factor(f) => {
                for cell in cells.cells() {
                    let w = f.omega_power(&cell).norm();
                    for jt in 0..fw.joint_count() {
                        let b = DVector::from_fn(d, |i, _| f.base[jt * d + i]).norm();
                        sup = sup.max(w * b);
                    }
                }
            }
        }
        out.push(sup);
    }
    Ok(out)
}

/// Restrict an explicit field to the interior of a box (cells at least
/// `margin` away from every face).
pub fn restrict_to_interior(u: &ExplicitField, cells: &PatchBox, margin: i64) -> ExplicitField {
    let mut out = ExplicitField::new(u.dim);
    for ((jt, cell), v) in &u.values {
        if cells.is_interior(cell, margin) {
            out.set(*jt, cell.clone(), v.clone());
        }
    }
    out
}

/// Residual of the flex condition restricted to bars whose endpoints both
/// lie in the interior of the patch box.
pub fn interior_flex_residual(patch: &FinitePatch, u: &ExplicitField, margin: i64) -> f64 {
    let d = patch.dimension();
    let mut max_res = 0.0f64;
    for bar in &patch.bars {
        let ja = &patch.joints[bar.a];
        let jb = &patch.joints[bar.b];
        if !patch.cell_box.is_interior(&ja.cell, margin) || !patch.cell_box.is_interior(&jb.cell, margin) {
            continue;
        }
        let diff = u.at(ja.joint, &ja.cell) - u.at(jb.joint, &jb.cell);
        let mut r = Complex::new(0.0, 0.0);
        for i in 0..d {
            r += Complex::new(bar.vector[i], 0.0) * diff[i];
        }
        max_res = max_res.max(r.norm());
    }
    max_res
}
