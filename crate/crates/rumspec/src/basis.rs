//! Constructive free-basis machinery at finite truncation: restriction
//! towers, inverse-limit basis extraction, coefficient recovery against a
//! documented spanning set, strict-null and local-basis checks, and the
//! bounded-membership estimate.

use std::collections::BTreeMap;

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Result, RumspecError};
use crate::framework::{
    self, CrystalFramework, ExplicitField, FinitePatch, PatchBox, generate_patch,
};
use crate::laurent::C64;
use crate::linalg;

/// An increasing sequence of nested boxes, with the margin used to
/// approximate restrictions of the infinite flex space.
#[derive(Debug, Clone)]
pub struct RestrictionTower {
    pub boxes: Vec<PatchBox>,
    pub margin: i64,
}

impl RestrictionTower {
    pub fn new(boxes: Vec<PatchBox>, margin: i64) -> Result<Self> {
        if boxes.is_empty() {
            return Err(RumspecError::InvalidArgument("tower needs at least one box".into()));
        }
        for w in boxes.windows(2) {
            let inner = &w[0];
            let outer = &w[1];
            let nested = inner
                .lo
                .iter()
                .zip(&outer.lo)
                .all(|(a, b)| a >= b)
                && inner.hi.iter().zip(&outer.hi).all(|(a, b)| a <= b);
            let strict = inner.lo != outer.lo || inner.hi != outer.hi;
            if !nested || !strict {
                return Err(RumspecError::InvalidArgument("tower boxes must be strictly nested".into()));
            }
        }
        Ok(RestrictionTower { boxes, margin })
    }

    pub fn centered(dim: usize, radii: &[i64], margin: i64) -> Result<Self> {
        let boxes = radii.iter().map(|&r| PatchBox::centered(dim, r)).collect();
        Self::new(boxes, margin)
    }
}

/// One level of a truncated basis: the fields of B_j (stored on the top
/// box of the tower) and the dimension of the restricted space W_j.
#[derive(Debug, Clone)]
pub struct TowerLevel {
    pub cell_box: PatchBox,
    pub dimension: usize,
    pub elements: Vec<ExplicitField>,
}

#[derive(Debug, Clone)]
pub struct TruncatedBasis {
    pub levels: Vec<TowerLevel>,
    pub margin: i64,
    pub stabilized: bool,
}

impl TruncatedBasis {
    pub fn level_dims(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.dimension).collect()
    }

    pub fn counts_cumulative(&self) -> Vec<usize> {
        let mut acc = 0;
        self.levels
            .iter()
            .map(|l| {
                acc += l.elements.len();
                acc
            })
            .collect()
    }
}

/// Orthonormal basis of the margin-approximated restricted flex space
/// W_i = pi_i(flex space): the kernel of the rigidity matrix of the box
/// grown by `margin`, restricted to the box and re-orthonormalized.
/// Returns the fields, the dimension, and a stabilization flag (the
/// dimension is unchanged when the margin grows by one).
pub fn truncated_flex_space(
    fw: &CrystalFramework,
    cell_box: &PatchBox,
    margin: i64,
    rank_tol: f64,
) -> (Vec<ExplicitField>, usize, bool) {
    let dim_at = |m: i64| -> (Vec<ExplicitField>, usize) {
        let inner = generate_patch(fw, cell_box);
        if inner.joint_count() == 0 {
            return (Vec::new(), 0);
        }
        let outer = generate_patch(fw, &cell_box.grown(m));
        let kernel = framework::flex_space_fields(&outer, rank_tol);
        let restricted: Vec<DVector<C64>> = kernel
            .iter()
            .map(|f| framework::field_to_coordinate_vector(&inner, f))
            .collect();
        let ortho = linalg::orthonormal_span(&restricted, rank_tol);
        let fields = ortho
            .iter()
            .map(|v| framework::coordinate_vector_to_field(&inner, v))
            .collect::<Vec<_>>();
        let n = fields.len();
        (fields, n)
    };
    let (fields, dim) = dim_at(margin);
    let (_, dim_next) = dim_at(margin + 1);
    (fields, dim, dim == dim_next)
}

/// Inverse-limit basis construction over a tower: per level j, a set B_j of
/// fields with pi_i(B_j) = 0 for all i < j and pi_j(B_1 + ... + B_j) a
/// basis of W_j, so the cumulative counts equal dim W_j.
pub fn inverse_limit_basis(
    fw: &CrystalFramework,
    tower: &RestrictionTower,
    rank_tol: f64,
) -> Result<TruncatedBasis> {
    let top = tower.boxes.last().expect("nonempty tower");
    let build = |margin: i64| -> (Vec<usize>, Vec<Vec<DVector<C64>>>, FinitePatch) {
        let big_patch = generate_patch(fw, &top.grown(margin));
        let kernel = framework::flex_space_fields(&big_patch, rank_tol);
        let coords: Vec<DVector<f64>> = kernel
            .iter()
            .map(|f| framework::field_to_coordinate_vector(&big_patch, f).map(|z| z.re))
            .collect();
        let nw = coords.len();
        let ncoord = big_patch.dimension() * big_patch.joint_count();
        let k = DMatrix::<f64>::from_fn(ncoord, nw, |i, jx| coords[jx][i]);
        // restriction row selector per level
        let restrict_rows = |level_box: &PatchBox| -> Vec<usize> {
            let d = big_patch.dimension();
            let mut rows = Vec::new();
            for (slot, j) in big_patch.joints.iter().enumerate() {
                if level_box.contains(&j.cell) {
                    for i in 0..d {
                        rows.push(slot * d + i);
                    }
                }
            }
            rows
        };
        let mut dims = Vec::new();
        let mut coeff_sets: Vec<Vec<DVector<f64>>> = Vec::new();
        // null-space (in coefficient space) of restriction to the previous level
        let mut prev_null: Option<DMatrix<f64>> = None;
        for level_box in &tower.boxes {
            let rows = restrict_rows(level_box);
            let r = DMatrix::<f64>::from_fn(rows.len(), nw, |i, jx| k[(rows[i], jx)]);
            let d_j = r.clone().svd(false, false).rank(rank_tol.max(1e-10));
            dims.push(d_j);
            let effective = match &prev_null {
                None => r.clone(),
                Some(nmat) => &r * nmat,
            };
            // new directions: coefficient vectors whose restriction to this
            // level is independent
            let svd = effective.clone().svd(false, true);
            let vt = svd.v_t.expect("V^T");
            let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
            let thr = rank_tol.max(1e-10) * smax.max(1.0);
            let mut new_coeffs = Vec::new();
            for i in 0..svd.singular_values.len() {
                if svd.singular_values[i] > thr {
                    let c = vt.row(i).transpose().into_owned();
                    let full = match &prev_null {
                        None => c,
                        Some(nmat) => nmat * c,
                    };
                    new_coeffs.push(full);
                }
            }
            coeff_sets.push(new_coeffs);
            // update null space: coefficients killed by restriction to this level
            let nullvecs = linalg::kernel_real(&r, rank_tol.max(1e-10));
            prev_null = Some(DMatrix::<f64>::from_fn(nw, nullvecs.len(), |i, jx| nullvecs[jx][i]));
        }
        // turn coefficient vectors into fields on the top box
        let top_patch = generate_patch(fw, top);
        let fields: Vec<Vec<DVector<C64>>> = coeff_sets
            .iter()
            .map(|set| {
                set.iter()
                    .map(|cvec| {
                        let mut combo = DVector::<f64>::zeros(k.nrows());
                        for (jx, w) in cvec.iter().enumerate() {
                            combo += k.column(jx) * *w;
                        }
                        let f = framework::coordinate_vector_to_field(
                            &big_patch,
                            &combo.map(|x| Complex::new(x, 0.0)),
                        );
                        framework::field_to_coordinate_vector(&top_patch, &f)
                    })
                    .collect()
            })
            .collect();
        (dims, fields, top_patch)
    };

    let (dims, field_vecs, top_patch) = build(tower.margin);
    let (dims_next, _, _) = build(tower.margin + 1);
    if dims != dims_next {
        let i = dims.iter().zip(&dims_next).position(|(a, b)| a != b).unwrap_or(0);
        return Err(RumspecError::NotStabilized {
            margin: tower.margin as usize,
            dim_m: dims[i],
            dim_m1: dims_next[i],
        });
    }
    let mut levels = Vec::new();
    for (j, level_box) in tower.boxes.iter().enumerate() {
        let elements = field_vecs[j]
            .iter()
            .map(|v| framework::coordinate_vector_to_field(&top_patch, v))
            .collect::<Vec<_>>();
        levels.push(TowerLevel { cell_box: level_box.clone(), dimension: dims[j], elements });
    }
    // count consistency per the inverse-limit argument
    let mut acc = 0usize;
    for (j, level) in levels.iter().enumerate() {
        acc += level.elements.len();
        if acc != level.dimension {
            return Err(RumspecError::InvalidArgument(format!(
                "level {j}: cumulative count {acc} != dim W_{j} = {}",
                level.dimension
            )));
        }
    }
    Ok(TruncatedBasis { levels, margin: tower.margin, stabilized: true })
}

/// Sup-norm of the restriction of a field to a box.
pub fn restriction_sup(f: &ExplicitField, cell_box: &PatchBox) -> f64 {
    f.values
        .iter()
        .filter(|((_, cell), _)| cell_box.contains(cell))
        .map(|(_, v)| v.norm())
        .fold(0.0, f64::max)
}

/// Outcome of coefficient recovery.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub coefficients: Vec<C64>,
    /// Sup-norm of the final residual over the whole box.
    pub residual_sup: f64,
    /// Sup-norm of the final residual over the interior (margin 1).
    pub interior_residual_sup: f64,
    /// Largest coefficient difference against the global least-squares
    /// solve, when requested and the global system has full rank.
    pub global_agreement: Option<f64>,
    pub unresolved: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct ReconstructOptions {
    pub rank_tol: f64,
    /// Local consistency tolerance, relative to the joint residual.
    pub local_tol: f64,
    pub compare_global: bool,
    pub interior_margin: i64,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        ReconstructOptions { rank_tol: 1e-9, local_tol: 1e-8, compare_global: true, interior_margin: 1 }
    }
}

/// Greedy front-to-back coefficient recovery. Elements are processed in the
/// given enumeration order; at each pass every joint whose still-undetermined
/// supported elements have linearly independent velocity vectors is solved
/// exactly and the solved elements are subtracted. Joints where the local
/// values are dependent are left alone (and reported if nothing else
/// resolves an element). When `compare_global` is set, the result is checked
/// against the global least-squares solution over the whole box.
pub fn reconstruct_coefficients(
    cells: &PatchBox,
    target: &ExplicitField,
    elements: &[(String, ExplicitField)],
    opts: &ReconstructOptions,
) -> Result<Reconstruction> {
    let d = target.dim;
    let n = elements.len();
    let mut coeffs: Vec<Option<C64>> = vec![None; n];
    let mut residual = target.clone();

    // joint -> supported element indices (restricted to the box)
    let mut support: BTreeMap<(usize, Vec<i64>), Vec<usize>> = BTreeMap::new();
    for (idx, (_, f)) in elements.iter().enumerate() {
        for (jt, cell) in f.values.keys() {
            if cells.contains(cell) {
                support.entry((*jt, cell.clone())).or_default().push(idx);
            }
        }
    }

    let mut blocked_joint: Option<(usize, Vec<i64>)> = None;
    loop {
        let mut progress = false;
        for (key, elems) in &support {
            let active: Vec<usize> = elems.iter().copied().filter(|&i| coeffs[i].is_none()).collect();
            if active.is_empty() || active.len() > d {
                if active.len() > d && blocked_joint.is_none() {
                    blocked_joint = Some(key.clone());
                }
                continue;
            }
            let (jt, cell) = key;
            let mut v = DMatrix::<C64>::zeros(d, active.len());
            for (ci, &idx) in active.iter().enumerate() {
                let col = elements[idx].1.at(*jt, cell);
                for i in 0..d {
                    v[(i, ci)] = col[i];
                }
            }
            let rhs = residual.at(*jt, cell);
            let (x, res, smin, smax) = linalg::lstsq(&v, &rhs, opts.rank_tol);
            if smin <= opts.rank_tol * smax.max(1.0) {
                if blocked_joint.is_none() {
                    blocked_joint = Some(key.clone());
                }
                continue; // locally dependent: never guess here
            }
            if res > opts.local_tol * (1.0 + rhs.norm()) {
                continue; // inconsistent at this joint (boundary effect)
            }
            for (ci, &idx) in active.iter().enumerate() {
                coeffs[idx] = Some(x[ci]);
                let keys: Vec<(usize, Vec<i64>)> = elements[idx].1.values.keys().cloned().collect();
                for (jt2, cell2) in keys {
                    let sub = elements[idx].1.at(jt2, &cell2) * x[ci];
                    residual.add_to(jt2, cell2, &(-sub));
                }
            }
            progress = true;
        }
        if !progress {
            break;
        }
        blocked_joint = None;
    }

    let unresolved = coeffs.iter().filter(|c| c.is_none()).count();
    if unresolved > 0 {
        if let Some((jt, cell)) = blocked_joint {
            return Err(RumspecError::LocallyDependent { joint: jt, cell });
        }
        return Err(RumspecError::Undetermined(unresolved));
    }
    let final_coeffs: Vec<C64> = coeffs.into_iter().map(|c| c.unwrap()).collect();
    let residual_sup = restriction_sup(&residual, cells);
    let interior_residual_sup = residual
        .values
        .iter()
        .filter(|((_, cell), _)| cells.is_interior(cell, opts.interior_margin))
        .map(|(_, v)| v.norm())
        .fold(0.0, f64::max);

    let global_agreement = if opts.compare_global {
        global_least_squares(cells, target, elements, opts.rank_tol)
            .map(|g| {
                final_coeffs
                    .iter()
                    .zip(&g)
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max)
            })
    } else {
        None
    };

    Ok(Reconstruction {
        coefficients: final_coeffs,
        residual_sup,
        interior_residual_sup,
        global_agreement,
        unresolved: 0,
    })
}

/// Global least-squares coefficients over all joints of the box, or None if
/// the restricted elements are not linearly independent there.
pub fn global_least_squares(
    cells: &PatchBox,
    target: &ExplicitField,
    elements: &[(String, ExplicitField)],
    rank_tol: f64,
) -> Option<Vec<C64>> {
    let d = target.dim;
    // collect all joints touched by target or elements within the box
    let mut joints: Vec<(usize, Vec<i64>)> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (jt, cell) in target
        .values
        .keys()
        .chain(elements.iter().flat_map(|(_, f)| f.values.keys()))
    {
        if cells.contains(cell) && seen.insert((*jt, cell.clone())) {
            joints.push((*jt, cell.clone()));
        }
    }
    let nrows = joints.len() * d;
    let mut a = DMatrix::<C64>::zeros(nrows, elements.len());
    let mut b = DVector::<C64>::zeros(nrows);
    for (ji, (jt, cell)) in joints.iter().enumerate() {
        let t = target.at(*jt, cell);
        for i in 0..d {
            b[ji * d + i] = t[i];
        }
        for (ei, (_, f)) in elements.iter().enumerate() {
            let v = f.at(*jt, cell);
            for i in 0..d {
                a[(ji * d + i, ei)] = v[i];
            }
        }
    }
    let (x, _, smin, smax) = linalg::lstsq(&a, &b, rank_tol);
    if smin <= rank_tol * smax.max(1.0) {
        return None;
    }
    Some(x.iter().copied().collect())
}

/// Per-joint touch counts of an enumerated set, and whether they stay below
/// the declared bound (the finite-patch surrogate for tending to zero
/// strictly).
pub fn check_strictly_null(
    elements: &[(String, ExplicitField)],
    cells: &PatchBox,
    max_touch: usize,
) -> (bool, BTreeMap<(usize, Vec<i64>), usize>) {
    let mut counts: BTreeMap<(usize, Vec<i64>), usize> = BTreeMap::new();
    for (_, f) in elements {
        for (jt, cell) in f.values.keys() {
            if cells.contains(cell) {
                *counts.entry((*jt, cell.clone())).or_insert(0) += 1;
            }
        }
    }
    let ok = counts.values().all(|&c| c <= max_touch);
    (ok, counts)
}

/// Local basis property report: at every patch joint, the velocity vectors
/// of the elements supported there must span the ambient space; the strict
/// form additionally requires exactly d of them.
#[derive(Debug, Clone)]
pub struct LocalBasisReport {
    pub rank_ok: bool,
    pub count_exact: bool,
    pub min_rank: usize,
    pub max_count: usize,
    pub joints_checked: usize,
}

impl LocalBasisReport {
    pub fn holds(&self) -> bool {
        self.rank_ok && self.count_exact
    }
}

pub fn check_local_basis_property(
    patch: &FinitePatch,
    elements: &[(String, ExplicitField)],
    rank_tol: f64,
) -> LocalBasisReport {
    let d = patch.dimension();
    let mut min_rank = usize::MAX;
    let mut max_count = 0usize;
    let mut count_exact = true;
    for j in &patch.joints {
        let cols: Vec<DVector<C64>> = elements
            .iter()
            .map(|(_, f)| f.at(j.joint, &j.cell))
            .filter(|v| v.norm() > 0.0)
            .collect();
        max_count = max_count.max(cols.len());
        if cols.len() != d {
            count_exact = false;
        }
        let rank = if cols.is_empty() {
            0
        } else {
            let m = DMatrix::<C64>::from_fn(d, cols.len(), |i, jx| cols[jx][i]);
            linalg::rank_complex(&m, rank_tol)
        };
        min_rank = min_rank.min(rank);
    }
    if patch.joints.is_empty() {
        min_rank = 0;
    }
    LocalBasisReport {
        rank_ok: min_rank == d && !patch.joints.is_empty(),
        count_exact,
        min_rank: if min_rank == usize::MAX { 0 } else { min_rank },
        max_count,
        joints_checked: patch.joint_count(),
    }
}

/// The bounded-membership estimate N * M * ||alpha||_inf for a bounded
/// spanning set with sup-norm bound M and touch bound N.
pub fn bounded_membership_bound(alpha_sup: f64, set_bound_m: f64, touch_bound_n: usize) -> f64 {
    touch_bound_n as f64 * set_bound_m * alpha_sup
}

/// Outcome of checking a realized combination against the membership bound.
#[derive(Debug, Clone, Copy)]
pub struct MembershipCheck {
    pub bound: f64,
    pub realized_sup: f64,
    pub within_bound: bool,
}

/// Compute the bound and verify that the realized partial-sum field stays
/// below it on the box.
pub fn verify_bounded_membership(
    field: &ExplicitField,
    cells: &PatchBox,
    alpha_sup: f64,
    set_bound_m: f64,
    touch_bound_n: usize,
) -> MembershipCheck {
    let bound = bounded_membership_bound(alpha_sup, set_bound_m, touch_bound_n);
    let realized_sup = restriction_sup(field, cells);
    MembershipCheck { bound, realized_sup, within_bound: realized_sup <= bound + 1e-12 }
}
