//! JSON schemas for frameworks, patches, velocity fields, Laurent matrices
//! and truncated bases. Serialization is canonical: struct field order is
//! fixed and map-like data is stored in sorted vectors, so exporting the
//! same value twice gives byte-identical text.

use nalgebra::{Complex, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::TruncatedBasis;
use crate::error::Result;
use crate::framework::{
    CrystalFramework, ExplicitField, FinitePatch, Motif, MotifEdge, PatchBox, PeriodLattice,
};
use crate::symbol::LaurentMatrix;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JointDto {
    pub id: usize,
    pub coords: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeDto {
    pub a: usize,
    pub b: usize,
    pub offset_a: Vec<i64>,
    pub offset_b: Vec<i64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameworkDto {
    pub name: String,
    pub dimension: usize,
    pub period_basis: Vec<Vec<f64>>,
    pub joints: Vec<JointDto>,
    pub edges: Vec<EdgeDto>,
}

impl FrameworkDto {
    pub fn from_framework(fw: &CrystalFramework) -> Self {
        let d = fw.dimension();
        FrameworkDto {
            name: fw.name.clone(),
            dimension: d,
            period_basis: (0..d).map(|i| fw.lattice.vector(i).iter().copied().collect()).collect(),
            joints: fw
                .motif
                .joints
                .iter()
                .enumerate()
                .map(|(i, p)| JointDto { id: i + 1, coords: p.iter().copied().collect() })
                .collect(),
            edges: fw
                .motif
                .edges
                .iter()
                .map(|e| EdgeDto {
                    a: e.from + 1,
                    b: e.to + 1,
                    offset_a: e.from_offset.clone(),
                    offset_b: e.to_offset.clone(),
                })
                .collect(),
        }
    }

    pub fn into_framework(self) -> Result<CrystalFramework> {
        let lattice = PeriodLattice::new(&self.period_basis)?;
        // joints are listed with 1-based ids in order
        let mut joints = vec![DVector::zeros(self.dimension); self.joints.len()];
        let mut seen = vec![false; self.joints.len()];
        for j in &self.joints {
            let idx = j.id.checked_sub(1).ok_or_else(|| {
                crate::error::RumspecError::InvalidArgument("joint ids are 1-based".into())
            })?;
            if idx >= joints.len() {
                return Err(crate::error::RumspecError::JointOutOfRange(idx, joints.len()));
            }
            if seen[idx] {
                return Err(crate::error::RumspecError::InvalidArgument(format!(
                    "duplicate joint id {}",
                    j.id
                )));
            }
            seen[idx] = true;
            joints[idx] = DVector::from_vec(j.coords.clone());
        }
        let edges = self
            .edges
            .iter()
            .map(|e| -> Result<MotifEdge> {
                let from = e.a.checked_sub(1).ok_or_else(|| {
                    crate::error::RumspecError::InvalidArgument("edge endpoints are 1-based".into())
                })?;
                let to = e.b.checked_sub(1).ok_or_else(|| {
                    crate::error::RumspecError::InvalidArgument("edge endpoints are 1-based".into())
                })?;
                Ok(MotifEdge {
                    from,
                    to,
                    from_offset: e.offset_a.clone(),
                    to_offset: e.offset_b.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        CrystalFramework::new(self.name, lattice, Motif { joints, edges })
    }
}

pub fn framework_to_json(fw: &CrystalFramework) -> String {
    serde_json::to_string_pretty(&FrameworkDto::from_framework(fw)).expect("serialize framework")
}

pub fn framework_from_json(text: &str) -> Result<CrystalFramework> {
    let dto: FrameworkDto = serde_json::from_str(text)?;
    dto.into_framework()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatchJointDto {
    pub joint: usize,
    pub cell: Vec<i64>,
    pub coords: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatchBarDto {
    pub a: usize,
    pub b: usize,
    pub vector: Vec<f64>,
    pub edge: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatchDto {
    pub framework: String,
    pub dimension: usize,
    pub box_lo: Vec<i64>,
    pub box_hi: Vec<i64>,
    pub joints: Vec<PatchJointDto>,
    pub bars: Vec<PatchBarDto>,
}

pub fn patch_to_json(patch: &FinitePatch) -> String {
    let dto = PatchDto {
        framework: patch.framework.name.clone(),
        dimension: patch.dimension(),
        box_lo: patch.cell_box.lo.clone(),
        box_hi: patch.cell_box.hi.clone(),
        joints: patch
            .joints
            .iter()
            .map(|j| PatchJointDto {
                joint: j.joint + 1,
                cell: j.cell.clone(),
                coords: j.position.iter().copied().collect(),
            })
            .collect(),
        bars: patch
            .bars
            .iter()
            .map(|b| PatchBarDto {
                a: b.a,
                b: b.b,
                vector: b.vector.iter().copied().collect(),
                edge: b.edge + 1,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&dto).expect("serialize patch")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldEntryDto {
    pub joint: usize,
    pub cell: Vec<i64>,
    pub velocity_re: Vec<f64>,
    pub velocity_im: Vec<f64>,
}

pub fn field_to_json(f: &ExplicitField) -> String {
    let entries: Vec<FieldEntryDto> = f
        .values
        .iter()
        .map(|((jt, cell), v)| FieldEntryDto {
            joint: jt + 1,
            cell: cell.clone(),
            velocity_re: v.iter().map(|z| z.re).collect(),
            velocity_im: v.iter().map(|z| z.im).collect(),
        })
        .collect();
    serde_json::to_string_pretty(&entries).expect("serialize field")
}

pub fn field_from_json(text: &str, dim: usize) -> Result<ExplicitField> {
    let entries: Vec<FieldEntryDto> = serde_json::from_str(text)?;
    let mut f = ExplicitField::new(dim);
    for e in entries {
        if e.velocity_re.len() != dim || e.velocity_im.len() != dim {
            return Err(crate::error::RumspecError::DimensionMismatch {
                expected: dim,
                got: e.velocity_re.len(),
            });
        }
        let joint = e.joint.checked_sub(1).ok_or_else(|| {
            crate::error::RumspecError::InvalidArgument("field joints are 1-based".into())
        })?;
        let v = DVector::from_vec(
            e.velocity_re
                .iter()
                .zip(&e.velocity_im)
                .map(|(&re, &im)| Complex::new(re, im))
                .collect(),
        );
        f.set(joint, e.cell, v);
    }
    Ok(f)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermDto {
    pub exponent: Vec<i64>,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LaurentMatrixDto {
    pub dimension: usize,
    pub nrows: usize,
    pub ncols: usize,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub entries: Vec<Vec<Vec<TermDto>>>,
}

pub fn laurent_matrix_to_json(m: &LaurentMatrix) -> String {
    let entries: Vec<Vec<Vec<TermDto>>> = (0..m.nrows)
        .map(|r| {
            (0..m.ncols)
                .map(|c| {
                    m.entry(r, c)
                        .terms()
                        .map(|(e, z)| TermDto { exponent: e.clone(), re: z.re, im: z.im })
                        .collect()
                })
                .collect()
        })
        .collect();
    let dto = LaurentMatrixDto {
        dimension: m.dim,
        nrows: m.nrows,
        ncols: m.ncols,
        row_labels: m.row_labels.clone(),
        col_labels: m.col_labels.clone(),
        entries,
    };
    serde_json::to_string_pretty(&dto).expect("serialize matrix")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TowerLevelDto {
    pub box_lo: Vec<i64>,
    pub box_hi: Vec<i64>,
    pub dimension: usize,
    pub elements: Vec<Vec<FieldEntryDto>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruncatedBasisDto {
    pub margin: i64,
    pub stabilized: bool,
    pub levels: Vec<TowerLevelDto>,
}

pub fn truncated_basis_to_json(tb: &TruncatedBasis) -> String {
    let levels = tb
        .levels
        .iter()
        .map(|l| TowerLevelDto {
            box_lo: l.cell_box.lo.clone(),
            box_hi: l.cell_box.hi.clone(),
            dimension: l.dimension,
            elements: l
                .elements
                .iter()
                .map(|f| {
                    f.values
                        .iter()
                        .map(|((jt, cell), v)| FieldEntryDto {
                            joint: jt + 1,
                            cell: cell.clone(),
                            velocity_re: v.iter().map(|z| z.re).collect(),
                            velocity_im: v.iter().map(|z| z.im).collect(),
                        })
                        .collect()
                })
                .collect(),
        })
        .collect();
    serde_json::to_string_pretty(&TruncatedBasisDto {
        margin: tb.margin,
        stabilized: tb.stabilized,
        levels,
    })
    .expect("serialize basis")
}

/// Convenience: parse a cell box "lo:hi,lo:hi,..." or a symmetric radius.
pub fn parse_box(spec: &str, dim: usize) -> Result<PatchBox> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != dim {
        return Err(crate::error::RumspecError::InvalidArgument(format!(
            "box spec {spec:?} has {} axes, framework has {dim}",
            parts.len()
        )));
    }
    let mut lo = Vec::with_capacity(dim);
    let mut hi = Vec::with_capacity(dim);
    for p in parts {
        let (l, h) = p.split_once(':').ok_or_else(|| {
            crate::error::RumspecError::InvalidArgument(format!("box axis {p:?} is not lo:hi"))
        })?;
        lo.push(l.trim().parse::<i64>().map_err(|_| {
            crate::error::RumspecError::InvalidArgument(format!("bad integer {l:?}"))
        })?);
        hi.push(h.trim().parse::<i64>().map_err(|_| {
            crate::error::RumspecError::InvalidArgument(format!("bad integer {h:?}"))
        })?);
    }
    Ok(PatchBox::new(lo, hi))
}
