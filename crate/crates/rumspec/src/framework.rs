//! Crystal frameworks, finite patches, rigidity matrices and the
//! infinitesimal flex condition.
//!
//! A crystal framework is a bar-joint framework invariant under a full-rank
//! lattice of translations with finitely many joint and bar orbits. It is
//! stored as a period lattice plus a motif: representative joints and edges,
//! each edge endpoint carrying an integer cell offset.

use std::collections::BTreeMap;

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Result, RumspecError};
use crate::laurent::C64;

/// Numerical rank threshold: sigma < rank_tol * max(1, sigma_max).
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

const LATTICE_DET_TOL: f64 = 1e-12;

/// Full-rank period lattice in R^d. Basis vectors are the columns of `basis`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodLattice {
    basis: DMatrix<f64>,
}

impl PeriodLattice {
    pub fn new(vectors: &[Vec<f64>]) -> Result<Self> {
        let d = vectors.len();
        for v in vectors {
            if v.len() != d {
                return Err(RumspecError::DimensionMismatch { expected: d, got: v.len() });
            }
        }
        let basis = DMatrix::from_fn(d, d, |i, j| vectors[j][i]);
        let det = basis.clone().lu().determinant();
        if det.abs() <= LATTICE_DET_TOL {
            return Err(RumspecError::DegenerateLattice(det.abs()));
        }
        Ok(PeriodLattice { basis })
    }

    pub fn dimension(&self) -> usize {
        self.basis.nrows()
    }

    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.basis.column(i).into_owned()
    }

    pub fn basis_matrix(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// The translation vector of an integer cell `k`: sum_i k_i b_i.
    pub fn translation(&self, cell: &[i64]) -> DVector<f64> {
        let mut t = DVector::zeros(self.dimension());
        for (i, &k) in cell.iter().enumerate() {
            t += self.basis.column(i) * (k as f64);
        }
        t
    }
}

/// One representative edge of the motif. `from`/`to` index motif joints and
/// each endpoint carries an integer cell offset, so the realized bar joins
/// p_{from} + T(from_offset) to p_{to} + T(to_offset).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MotifEdge {
    pub from: usize,
    pub to: usize,
    pub from_offset: Vec<i64>,
    pub to_offset: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Motif {
    pub joints: Vec<DVector<f64>>,
    pub edges: Vec<MotifEdge>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrystalFramework {
    pub name: String,
    pub lattice: PeriodLattice,
    pub motif: Motif,
}

impl CrystalFramework {
    pub fn new(name: impl Into<String>, lattice: PeriodLattice, motif: Motif) -> Result<Self> {
        let fw = CrystalFramework { name: name.into(), lattice, motif };
        fw.validate()?;
        Ok(fw)
    }

    fn validate(&self) -> Result<()> {
        let d = self.dimension();
        for (i, p) in self.motif.joints.iter().enumerate() {
            if p.len() != d {
                return Err(RumspecError::DimensionMismatch { expected: d, got: p.len() });
            }
            for (j, q) in self.motif.joints.iter().enumerate().skip(i + 1) {
                if (p - q).norm() == 0.0 {
                    return Err(RumspecError::CoincidentJoints(i, j));
                }
            }
        }
        let nj = self.motif.joints.len();
        for (idx, e) in self.motif.edges.iter().enumerate() {
            if e.from >= nj {
                return Err(RumspecError::JointOutOfRange(e.from, nj));
            }
            if e.to >= nj {
                return Err(RumspecError::JointOutOfRange(e.to, nj));
            }
            if e.from_offset.len() != d || e.to_offset.len() != d {
                return Err(RumspecError::DimensionMismatch { expected: d, got: e.from_offset.len() });
            }
            if e.from == e.to && e.from_offset == e.to_offset {
                return Err(RumspecError::SelfLoop(idx));
            }
            if self.edge_vector(idx)?.norm() <= 0.0 {
                return Err(RumspecError::ZeroLengthBar(idx));
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.lattice.dimension()
    }

    pub fn joint_count(&self) -> usize {
        self.motif.joints.len()
    }

    pub fn edge_count(&self) -> usize {
        self.motif.edges.len()
    }

    /// Position of the joint labelled (kappa, k): p_kappa + sum_i k_i b_i.
    pub fn joint_position(&self, joint: usize, cell: &[i64]) -> Result<DVector<f64>> {
        let p = self
            .motif
            .joints
            .get(joint)
            .ok_or(RumspecError::JointOutOfRange(joint, self.joint_count()))?;
        if cell.len() != self.dimension() {
            return Err(RumspecError::DimensionMismatch { expected: self.dimension(), got: cell.len() });
        }
        Ok(p + self.lattice.translation(cell))
    }

    /// The bar vector p(e) of a motif edge: the difference of its realized
    /// endpoints, offsets included.
    pub fn edge_vector(&self, edge: usize) -> Result<DVector<f64>> {
        let e = self
            .motif
            .edges
            .get(edge)
            .ok_or(RumspecError::EdgeOutOfRange(edge, self.edge_count()))?;
        Ok(self.joint_position(e.from, &e.from_offset)? - self.joint_position(e.to, &e.to_offset)?)
    }
}

/// An axis-aligned box of cells, inclusive on both ends. Any `lo > hi`
/// makes the box empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchBox {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
}

impl PatchBox {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        PatchBox { lo, hi }
    }

    /// The symmetric box [-r, r]^d.
    pub fn centered(dim: usize, radius: i64) -> Self {
        PatchBox { lo: vec![-radius; dim], hi: vec![radius; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(l, h)| l > h)
    }

    pub fn contains(&self, cell: &[i64]) -> bool {
        !self.is_empty()
            && cell.len() == self.dim()
            && cell.iter().zip(self.lo.iter().zip(&self.hi)).all(|(k, (l, h))| l <= k && k <= h)
    }

    /// Grow by `m` cells on every side.
    pub fn grown(&self, m: i64) -> Self {
        PatchBox {
            lo: self.lo.iter().map(|x| x - m).collect(),
            hi: self.hi.iter().map(|x| x + m).collect(),
        }
    }

    /// True if `cell` stays in the box after shrinking it by `m` on every side.
    pub fn is_interior(&self, cell: &[i64], m: i64) -> bool {
        cell.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(k, (l, h))| l + m <= *k && *k <= h - m)
    }

    pub fn cells(&self) -> Vec<Vec<i64>> {
        if self.is_empty() {
            return Vec::new();
        }
        let mut out = vec![Vec::new()];
        for (l, h) in self.lo.iter().zip(&self.hi) {
            let mut next = Vec::with_capacity(out.len() * ((h - l + 1) as usize));
            for prefix in &out {
                for k in *l..=*h {
                    let mut c = prefix.clone();
                    c.push(k);
                    next.push(c);
                }
            }
            out = next;
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct PatchJoint {
    pub joint: usize,
    pub cell: Vec<i64>,
    pub position: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct PatchBar {
    /// Slot of the `from` endpoint in `FinitePatch::joints`.
    pub a: usize,
    /// Slot of the `to` endpoint.
    pub b: usize,
    /// Bar vector p(e) = position(a) - position(b).
    pub vector: DVector<f64>,
    /// Motif edge orbit this bar belongs to.
    pub edge: usize,
    /// Translation cell of the orbit representative.
    pub cell: Vec<i64>,
}

/// A concrete finite bar-joint framework realized from a crystal framework
/// over a box of cells. A bar is included iff both endpoint labels lie in
/// the box, so every patch is a genuine subframework.
#[derive(Debug, Clone)]
pub struct FinitePatch {
    pub framework: CrystalFramework,
    pub cell_box: PatchBox,
    pub joints: Vec<PatchJoint>,
    pub bars: Vec<PatchBar>,
    index: BTreeMap<(usize, Vec<i64>), usize>,
}

/// Realize the patch of `fw` over `cell_box`.
pub fn generate_patch(fw: &CrystalFramework, cell_box: &PatchBox) -> FinitePatch {
    let mut joints = Vec::new();
    let mut index = BTreeMap::new();
    for cell in cell_box.cells() {
        for j in 0..fw.joint_count() {
            let position = fw.joint_position(j, &cell).expect("valid joint");
            index.insert((j, cell.clone()), joints.len());
            joints.push(PatchJoint { joint: j, cell: cell.clone(), position });
        }
    }
    let mut bars = Vec::new();
    for cell in cell_box.cells() {
        for (ei, e) in fw.motif.edges.iter().enumerate() {
            let ca: Vec<i64> = cell.iter().zip(&e.from_offset).map(|(k, o)| k + o).collect();
            let cb: Vec<i64> = cell.iter().zip(&e.to_offset).map(|(k, o)| k + o).collect();
            let (Some(&a), Some(&b)) = (index.get(&(e.from, ca)), index.get(&(e.to, cb))) else {
                continue;
            };
            let vector = &joints[a].position - &joints[b].position;
            bars.push(PatchBar { a, b, vector, edge: ei, cell: cell.clone() });
        }
    }
    FinitePatch { framework: fw.clone(), cell_box: cell_box.clone(), joints, bars, index }
}

impl FinitePatch {
    pub fn dimension(&self) -> usize {
        self.framework.dimension()
    }

    pub fn slot(&self, joint: usize, cell: &[i64]) -> Option<usize> {
        self.index.get(&(joint, cell.to_vec())).copied()
    }

    pub fn joint_count(&self) -> usize {
        self.joints.len()
    }

    pub fn bar_count(&self) -> usize {
        self.bars.len()
    }

    /// Slots whose cell survives shrinking the box by `m` on every side.
    pub fn interior_slots(&self, m: i64) -> Vec<usize> {
        (0..self.joints.len()).filter(|&s| self.cell_box.is_interior(&self.joints[s].cell, m)).collect()
    }
}

/// A velocity field: either explicit (finitely supported assignment of
/// complex d-vectors to labelled joints; absent labels read as zero) or a
/// factor-periodic rule u(kappa, k) = omega^k b_kappa.
#[derive(Debug, Clone)]
pub enum VelocityField {
    Explicit(ExplicitField),
    Factor(FactorField),
}

#[derive(Debug, Clone, Default)]
pub struct ExplicitField {
    pub dim: usize,
    pub values: BTreeMap<(usize, Vec<i64>), DVector<C64>>,
}

impl ExplicitField {
    pub fn new(dim: usize) -> Self {
        ExplicitField { dim, values: BTreeMap::new() }
    }

    pub fn set(&mut self, joint: usize, cell: Vec<i64>, v: DVector<C64>) {
        assert_eq!(v.len(), self.dim);
        if v.norm() == 0.0 {
            self.values.remove(&(joint, cell));
        } else {
            self.values.insert((joint, cell), v);
        }
    }

    pub fn add_to(&mut self, joint: usize, cell: Vec<i64>, v: &DVector<C64>) {
        let cur = self.at(joint, &cell);
        self.set(joint, cell, cur + v);
    }

    pub fn at(&self, joint: usize, cell: &[i64]) -> DVector<C64> {
        self.values
            .get(&(joint, cell.to_vec()))
            .cloned()
            .unwrap_or_else(|| DVector::zeros(self.dim))
    }

    pub fn from_real(dim: usize, values: BTreeMap<(usize, Vec<i64>), DVector<f64>>) -> Self {
        let mut f = ExplicitField::new(dim);
        for ((j, c), v) in values {
            f.set(j, c, v.map(|x| Complex::new(x, 0.0)));
        }
        f
    }

    /// Pointwise linear combination a*self + b*other.
    pub fn axpy(&self, a: C64, other: &ExplicitField, b: C64) -> ExplicitField {
        let mut out = ExplicitField::new(self.dim);
        for ((j, c), v) in &self.values {
            out.add_to(*j, c.clone(), &(v * a));
        }
        for ((j, c), v) in &other.values {
            out.add_to(*j, c.clone(), &(v * b));
        }
        out
    }

    pub fn scaled(&self, a: C64) -> ExplicitField {
        let mut out = ExplicitField::new(self.dim);
        for ((j, c), v) in &self.values {
            out.set(*j, c.clone(), v * a);
        }
        out
    }

    /// Sup-norm over the stored support.
    pub fn sup_norm(&self) -> f64 {
        self.values.values().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn support_cells(&self) -> Vec<Vec<i64>> {
        let mut cells: Vec<Vec<i64>> = self.values.keys().map(|(_, c)| c.clone()).collect();
        cells.sort();
        cells.dedup();
        cells
    }
}

#[derive(Debug, Clone)]
pub struct FactorField {
    /// Motif velocities, joint-major: (b_1x, b_1y, ..., b_2x, ...).
    pub base: Vec<C64>,
    /// Multifactor omega, one nonzero complex number per lattice direction.
    pub omega: Vec<C64>,
}

impl FactorField {
    pub fn omega_power(&self, cell: &[i64]) -> C64 {
        cell.iter()
            .zip(&self.omega)
            .fold(C64::new(1.0, 0.0), |acc, (&k, w)| acc * w.powi(k as i32))
    }
}

impl VelocityField {
    pub fn constant_translation(dim: usize, joints: usize, dir: usize) -> VelocityField {
        let mut base = vec![C64::new(0.0, 0.0); dim * joints];
        for j in 0..joints {
            base[j * dim + dir] = C64::new(1.0, 0.0);
        }
        VelocityField::Factor(FactorField { base, omega: vec![C64::new(1.0, 0.0); dim] })
    }

    /// Velocity at the labelled joint (kappa, cell).
    pub fn at(&self, fw: &CrystalFramework, joint: usize, cell: &[i64]) -> Result<DVector<C64>> {
        let d = fw.dimension();
        match self {
            VelocityField::Explicit(f) => {
                if f.dim != d {
                    return Err(RumspecError::DimensionMismatch { expected: d, got: f.dim });
                }
                Ok(f.at(joint, cell))
            }
            VelocityField::Factor(f) => {
                if f.base.len() != d * fw.joint_count() {
                    return Err(RumspecError::MissingJoint { joint, cell: cell.to_vec() });
                }
                if f.omega.len() != d {
                    return Err(RumspecError::DimensionMismatch { expected: d, got: f.omega.len() });
                }
                let w = f.omega_power(cell);
                Ok(DVector::from_fn(d, |i, _| f.base[joint * d + i] * w))
            }
        }
    }

    /// Realize the field as an explicit assignment on the joints of a patch.
    pub fn realize(&self, patch: &FinitePatch) -> Result<ExplicitField> {
        let mut out = ExplicitField::new(patch.dimension());
        for j in &patch.joints {
            let v = self.at(&patch.framework, j.joint, &j.cell)?;
            out.set(j.joint, j.cell.clone(), v);
        }
        Ok(out)
    }
}

/// Per-bar residual report for the first-order flex condition.
#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub worst_bar: Option<usize>,
    pub tol: f64,
}

impl ResidualReport {
    pub fn is_flex(&self) -> bool {
        self.max_residual <= self.tol
    }
}

/// Rigidity matrix of a patch: one row per bar, d columns per joint.
/// The row of bar (a, b) carries +p(e) in a's block and -p(e) in b's block,
/// so its kernel is exactly the flex space of the patch.
pub fn rigidity_matrix(patch: &FinitePatch) -> DMatrix<f64> {
    let d = patch.dimension();
    let mut m = DMatrix::zeros(patch.bars.len(), d * patch.joints.len());
    for (r, bar) in patch.bars.iter().enumerate() {
        for i in 0..d {
            m[(r, bar.a * d + i)] += bar.vector[i];
            m[(r, bar.b * d + i)] -= bar.vector[i];
        }
    }
    m
}

/// Orthonormal basis of the numerical kernel of the rigidity matrix,
/// returned as stacked coordinate vectors (d entries per joint slot).
pub fn flex_space_basis(patch: &FinitePatch, rank_tol: f64) -> Vec<DVector<f64>> {
    let ncols = patch.dimension() * patch.joints.len();
    if ncols == 0 {
        return Vec::new();
    }
    crate::linalg::kernel_real(&rigidity_matrix(patch), rank_tol)
}

/// Kernel vectors as explicit velocity fields on the patch.
pub fn flex_space_fields(patch: &FinitePatch, rank_tol: f64) -> Vec<ExplicitField> {
    flex_space_basis(patch, rank_tol)
        .into_iter()
        .map(|v| coordinate_vector_to_field(patch, &v.map(|x| Complex::new(x, 0.0))))
        .collect()
}

/// Reinterpret a stacked coordinate vector as an explicit field on the patch.
pub fn coordinate_vector_to_field(patch: &FinitePatch, v: &DVector<C64>) -> ExplicitField {
    let d = patch.dimension();
    let mut f = ExplicitField::new(d);
    for (s, j) in patch.joints.iter().enumerate() {
        let vel = DVector::from_fn(d, |i, _| v[s * d + i]);
        f.set(j.joint, j.cell.clone(), vel);
    }
    f
}

/// Restriction of an explicit field to patch joints, as a stacked vector.
pub fn field_to_coordinate_vector(patch: &FinitePatch, f: &ExplicitField) -> DVector<C64> {
    let d = patch.dimension();
    let mut v = DVector::zeros(d * patch.joints.len());
    for (s, j) in patch.joints.iter().enumerate() {
        let vel = f.at(j.joint, &j.cell);
        for i in 0..d {
            v[s * d + i] = vel[i];
        }
    }
    v
}

/// Check the flex condition <p(e), u(a) - u(b)> = 0 bar by bar.
pub fn verify_flex(patch: &FinitePatch, field: &VelocityField, tol: f64) -> Result<ResidualReport> {
    let d = patch.dimension();
    let mut residuals = Vec::with_capacity(patch.bars.len());
    let mut max_residual = 0.0f64;
    let mut worst_bar = None;
    let velocities: Vec<DVector<C64>> = patch
        .joints
        .iter()
        .map(|j| field.at(&patch.framework, j.joint, &j.cell))
        .collect::<Result<_>>()?;
    for (bi, bar) in patch.bars.iter().enumerate() {
        let diff = &velocities[bar.a] - &velocities[bar.b];
        let mut r = C64::new(0.0, 0.0);
        for i in 0..d {
            r += Complex::new(bar.vector[i], 0.0) * diff[i];
        }
        let rn = r.norm();
        residuals.push(rn);
        if rn > max_residual {
            max_residual = rn;
            worst_bar = Some(bi);
        }
    }
    Ok(ResidualReport { residuals, max_residual, worst_bar, tol })
}

/// The d translations plus d(d-1)/2 rotation generators about the origin,
/// realized on the patch. Only dimensions 2 and 3 are supported.
pub fn rigid_motion_flexes(patch: &FinitePatch) -> Result<Vec<ExplicitField>> {
    let d = patch.dimension();
    if d != 2 && d != 3 {
        return Err(RumspecError::UnsupportedDimension(d));
    }
    type Generator = Box<dyn Fn(&DVector<f64>) -> DVector<f64>>;
    let mut gens: Vec<Generator> = Vec::new();
    for i in 0..d {
        gens.push(Box::new(move |_p: &DVector<f64>| {
            let mut v = DVector::zeros(d);
            v[i] = 1.0;
            v
        }));
    }
    if d == 2 {
        gens.push(Box::new(|p: &DVector<f64>| DVector::from_vec(vec![-p[1], p[0]])));
    } else {
        gens.push(Box::new(|p: &DVector<f64>| DVector::from_vec(vec![0.0, -p[2], p[1]])));
        gens.push(Box::new(|p: &DVector<f64>| DVector::from_vec(vec![p[2], 0.0, -p[0]])));
        gens.push(Box::new(|p: &DVector<f64>| DVector::from_vec(vec![-p[1], p[0], 0.0])));
    }
    let mut out = Vec::new();
    for g in &gens {
        let mut f = ExplicitField::new(d);
        for j in &patch.joints {
            f.set(j.joint, j.cell.clone(), g(&j.position).map(|x| Complex::new(x, 0.0)));
        }
        out.push(f);
    }
    Ok(out)
}
