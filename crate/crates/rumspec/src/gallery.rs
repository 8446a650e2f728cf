//! Built-in crystal frameworks and their documented flexes.
//!
//! Each constructor fixes a period lattice, motif coordinates and an edge
//! table; the documented flexes (line flexes, hexagon rotations, alternation
//! flexes, sheering flexes, the kite alternation flex) are produced as
//! velocity fields and every one of them satisfies the flex condition on
//! patches, which the test suite checks directly.

use nalgebra::{Complex, DVector};

use crate::error::{Result, RumspecError};
use crate::framework::{
    CrystalFramework, ExplicitField, FinitePatch, Motif, MotifEdge, PatchBox, PeriodLattice,
    VelocityField,
};
use crate::laurent::C64;
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GalleryId {
    Grid2d,
    Honeycomb,
    Kagome2d,
    Kagome3d,
    Octahedron,
    Kite,
    Bipyramid,
}

impl GalleryId {
    pub fn all() -> [GalleryId; 7] {
        [
            GalleryId::Grid2d,
            GalleryId::Honeycomb,
            GalleryId::Kagome2d,
            GalleryId::Kagome3d,
            GalleryId::Octahedron,
            GalleryId::Kite,
            GalleryId::Bipyramid,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            GalleryId::Grid2d => "grid",
            GalleryId::Honeycomb => "honeycomb",
            GalleryId::Kagome2d => "kagome",
            GalleryId::Kagome3d => "kagome3d",
            GalleryId::Octahedron => "octahedron",
            GalleryId::Kite => "kite",
            GalleryId::Bipyramid => "bipyramid",
        }
    }

    pub fn parse(s: &str) -> Result<GalleryId> {
        GalleryId::all()
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| RumspecError::UnknownFramework(s.to_string()))
    }
}

pub fn make(id: GalleryId) -> CrystalFramework {
    match id {
        GalleryId::Grid2d => make_grid2d(),
        GalleryId::Honeycomb => make_hex(),
        GalleryId::Kagome2d => make_kagome2d(),
        GalleryId::Kagome3d => make_kagome3d(),
        GalleryId::Octahedron => make_octahedron(),
        GalleryId::Kite => make_kite(),
        GalleryId::Bipyramid => make_bipyramid(),
    }
}

fn j(v: Vec<f64>) -> DVector<f64> {
    DVector::from_vec(v)
}

fn edge(from: usize, to: usize, k: Vec<i64>, l: Vec<i64>) -> MotifEdge {
    MotifEdge { from, to, from_offset: k, to_offset: l }
}

/// Square grid: joints on Z^2, bars between nearest neighbours.
pub fn make_grid2d() -> CrystalFramework {
    let lattice = PeriodLattice::new(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let motif = Motif {
        joints: vec![j(vec![0.0, 0.0])],
        edges: vec![edge(0, 0, vec![0, 0], vec![1, 0]), edge(0, 0, vec![0, 0], vec![0, 1])],
    };
    CrystalFramework::new("grid", lattice, motif).unwrap()
}

/// Honeycomb framework of the regular hexagonal tiling, unit bars.
pub fn make_hex() -> CrystalFramework {
    let s3 = 3f64.sqrt();
    let lattice = PeriodLattice::new(&[vec![1.5, s3 / 2.0], vec![1.5, -s3 / 2.0]]).unwrap();
    let motif = Motif {
        joints: vec![j(vec![0.0, 0.0]), j(vec![1.0, 0.0])],
        edges: vec![
            edge(0, 1, vec![0, 0], vec![0, 0]),
            edge(0, 1, vec![1, 0], vec![0, 0]),
            edge(0, 1, vec![0, 1], vec![0, 0]),
        ],
    };
    CrystalFramework::new("honeycomb", lattice, motif).unwrap()
}

/// 2D kagome framework: corner-sharing triangles, unit bars.
pub fn make_kagome2d() -> CrystalFramework {
    let s3 = 3f64.sqrt();
    let lattice = PeriodLattice::new(&[vec![2.0, 0.0], vec![1.0, s3]]).unwrap();
    let motif = Motif {
        joints: vec![j(vec![0.0, 0.0]), j(vec![1.0, 0.0]), j(vec![0.5, s3 / 2.0])],
        edges: vec![
            edge(0, 1, vec![0, 0], vec![0, 0]),
            edge(1, 2, vec![0, 0], vec![0, 0]),
            edge(2, 0, vec![0, 0], vec![0, 0]),
            edge(1, 0, vec![0, 0], vec![1, 0]),
            edge(0, 2, vec![1, 0], vec![1, -1]),
            edge(2, 1, vec![1, -1], vec![0, 0]),
        ],
    };
    CrystalFramework::new("kagome", lattice, motif).unwrap()
}

/// 3D kagome net: corner-sharing regular tetrahedra in alternating
/// orientations, built layer by layer from the 2D kagome net. One up
/// tetrahedron per primitive cell; four joint orbits and twelve bar orbits,
/// so the symbol function is a 12-by-12 matrix.
pub fn make_kagome3d() -> CrystalFramework {
    let s3 = 3f64.sqrt();
    let h = (2f64 / 3.0).sqrt();
    let lattice = PeriodLattice::new(&[
        vec![2.0, 0.0, 0.0],
        vec![1.0, s3, 0.0],
        vec![-1.0, s3 / 3.0, 2.0 * h],
    ])
    .unwrap();
    let motif = Motif {
        joints: vec![
            j(vec![0.0, 0.0, 0.0]),
            j(vec![1.0, 0.0, 0.0]),
            j(vec![0.5, s3 / 2.0, 0.0]),
            j(vec![0.5, s3 / 6.0, h]),
        ],
        edges: vec![
            // up tetrahedron (a, b, c, d)
            edge(0, 1, vec![0, 0, 0], vec![0, 0, 0]),
            edge(1, 2, vec![0, 0, 0], vec![0, 0, 0]),
            edge(2, 0, vec![0, 0, 0], vec![0, 0, 0]),
            edge(0, 3, vec![0, 0, 0], vec![0, 0, 0]),
            edge(1, 3, vec![0, 0, 0], vec![0, 0, 0]),
            edge(2, 3, vec![0, 0, 0], vec![0, 0, 0]),
            // down tetrahedron on the adjacent triangle, apex one layer below
            edge(1, 0, vec![0, 0, 0], vec![1, 0, 0]),
            edge(0, 2, vec![1, 0, 0], vec![1, -1, 0]),
            edge(2, 1, vec![1, -1, 0], vec![0, 0, 0]),
            edge(1, 3, vec![0, 0, 0], vec![0, 0, -1]),
            edge(0, 3, vec![1, 0, 0], vec![0, 0, -1]),
            edge(2, 3, vec![1, -1, 0], vec![0, 0, -1]),
        ],
    };
    CrystalFramework::new("kagome3d", lattice, motif).unwrap()
}

/// Corner-connected regular octahedra in the symmetric placement with one
/// translation class of octahedra. Period 2 along each axis; three joint
/// orbits (one per axis direction) and the twelve edges of one octahedron.
pub fn make_octahedron() -> CrystalFramework {
    let lattice = PeriodLattice::new(&[
        vec![2.0, 0.0, 0.0],
        vec![0.0, 2.0, 0.0],
        vec![0.0, 0.0, 2.0],
    ])
    .unwrap();
    let z = vec![0i64, 0, 0];
    let mx = vec![-1i64, 0, 0];
    let my = vec![0i64, -1, 0];
    let mz = vec![0i64, 0, -1];
    let motif = Motif {
        joints: vec![j(vec![1.0, 0.0, 0.0]), j(vec![0.0, 1.0, 0.0]), j(vec![0.0, 0.0, 1.0])],
        edges: vec![
            edge(0, 1, z.clone(), z.clone()),
            edge(0, 1, z.clone(), my.clone()),
            edge(0, 1, mx.clone(), z.clone()),
            edge(0, 1, mx.clone(), my.clone()),
            edge(0, 2, z.clone(), z.clone()),
            edge(0, 2, z.clone(), mz.clone()),
            edge(0, 2, mx.clone(), z.clone()),
            edge(0, 2, mx.clone(), mz.clone()),
            edge(1, 2, z.clone(), z.clone()),
            edge(1, 2, z.clone(), mz.clone()),
            edge(1, 2, my.clone(), z.clone()),
            edge(1, 2, my.clone(), mz.clone()),
        ],
    };
    CrystalFramework::new("octahedron", lattice, motif).unwrap()
}

/// Kite framework: rows of rigid five-bar kite units hinged along horizontal
/// chains, with the tip joint shared between vertically adjacent units. The
/// tip overhangs the west hinge and sits halfway between chain rows, which
/// makes the alternation mechanism a factor-periodic flex with a real
/// multifactor larger than one along the chains and unimodular across them.
pub fn make_kite() -> CrystalFramework {
    let lattice = PeriodLattice::new(&[vec![1.0, 0.0], vec![0.0, 1.4]]).unwrap();
    let motif = Motif {
        joints: vec![j(vec![0.0, 0.0]), j(vec![-0.5, 0.7])],
        edges: vec![
            edge(0, 0, vec![0, 0], vec![1, 0]),
            edge(1, 0, vec![0, 0], vec![0, 0]),
            edge(1, 0, vec![0, 0], vec![1, 0]),
            edge(1, 0, vec![0, 0], vec![0, 1]),
            edge(1, 0, vec![0, 0], vec![1, 1]),
        ],
    };
    CrystalFramework::new("kite", lattice, motif).unwrap()
}

/// The multifactor of the kite alternation flex for the geometry above:
/// omega_1 = 1 - 1/s for tip abscissa s, omega_2 = t/(t-q) = -1 since the
/// tip height t is half the vertical period q.
pub fn kite_alternation_omega() -> [C64; 2] {
    [Complex::new(3.0, 0.0), Complex::new(-1.0, 0.0)]
}

pub fn kite_alternation_base() -> Vec<C64> {
    vec![
        Complex::new(0.0, 0.0),
        Complex::new(1.0, 0.0),
        Complex::new(-1.4, 0.0),
        Complex::new(0.0, 0.0),
    ]
}

pub const BIPYRAMID_ALPHA: f64 = 0.28867513459481287; // sqrt(3)/6
pub const BIPYRAMID_H: f64 = 0.816496580927726; // sqrt(2/3)

/// Bipyramid framework: a fully triangulated horizontal layer whose upward
/// triangles are the equators of unit-edge bipyramids, stacked with vertical
/// period 2h. Two joint orbits (equatorial, polar) and nine bar orbits.
pub fn make_bipyramid() -> CrystalFramework {
    let s3 = 3f64.sqrt();
    let alpha = s3 / 6.0;
    let h = (2f64 / 3.0).sqrt();
    let lattice = PeriodLattice::new(&[
        vec![1.0, 0.0, 0.0],
        vec![0.5, s3 / 2.0, 0.0],
        vec![0.0, 0.0, 2.0 * h],
    ])
    .unwrap();
    let motif = Motif {
        joints: vec![j(vec![0.0, 0.0, 0.0]), j(vec![0.5, alpha, -h])],
        edges: vec![
            edge(0, 0, vec![0, 0, 0], vec![1, 0, 0]),
            edge(0, 0, vec![1, 0, 0], vec![0, 1, 0]),
            edge(0, 0, vec![0, 0, 0], vec![0, 1, 0]),
            edge(0, 1, vec![0, 0, 0], vec![0, 0, 0]),
            edge(0, 1, vec![1, 0, 0], vec![0, 0, 0]),
            edge(0, 1, vec![0, 1, 0], vec![0, 0, 0]),
            edge(0, 1, vec![0, 0, 0], vec![0, 0, 1]),
            edge(0, 1, vec![1, 0, 0], vec![0, 0, 1]),
            edge(0, 1, vec![0, 1, 0], vec![0, 0, 1]),
        ],
    };
    CrystalFramework::new("bipyramid", lattice, motif).unwrap()
}

/// The two sheering multifactors on the torus: omega_3 = -1 and
/// 1 + omega_1 + omega_2 = 0 with unimodular omega_1, omega_2.
pub fn bipyramid_sheer_omega(index: usize) -> [C64; 3] {
    let w = Complex::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    let w2 = Complex::from_polar(1.0, 4.0 * std::f64::consts::PI / 3.0);
    if index == 0 {
        [w, w2, Complex::new(-1.0, 0.0)]
    } else {
        [w2, w, Complex::new(-1.0, 0.0)]
    }
}

/// Kernel vector of the sheering flex at a point with omega_3 = -1 and
/// 1 + omega_1 + omega_2 = 0: supported on (v1z, v2x, v2y).
pub fn bipyramid_sheer_base(omega: &[C64; 3]) -> Vec<C64> {
    let h = Complex::new(BIPYRAMID_H, 0.0);
    let alpha = Complex::new(BIPYRAMID_ALPHA, 0.0);
    let two = Complex::new(2.0, 0.0);
    let w2 = omega[1];
    vec![
        Complex::new(0.0, 0.0),
        Complex::new(0.0, 0.0),
        Complex::new(1.0, 0.0),
        -h * (two + w2),
        w2 * h / (two * alpha),
        Complex::new(0.0, 0.0),
    ]
}

/// Metadata for a documented flex of a gallery framework.
#[derive(Debug, Clone)]
pub struct FlexInfo {
    pub name: &'static str,
    pub index_arity: usize,
    pub description: &'static str,
}

pub fn flex_catalog(id: GalleryId) -> Vec<FlexInfo> {
    let fi = |name, index_arity, description| FlexInfo { name, index_arity, description };
    match id {
        GalleryId::Grid2d => vec![
            fi("u", 1, "unit x-velocities on the joints of row y = n"),
            fi("v", 1, "unit y-velocities on the joints of column x = n"),
            fi("tx", 0, "x translation"),
            fi("ty", 0, "y translation"),
            fi("rot", 0, "rotation about the origin"),
        ],
        GalleryId::Honeycomb => vec![
            fi("hexrot", 2, "rotation flex of the hexagon at cell (i, j)"),
            fi("tx", 0, "x translation"),
            fi("ty", 0, "y translation"),
            fi("rot", 0, "rotation about the origin"),
        ],
        GalleryId::Kagome2d => vec![
            fi("u", 1, "line flex on the n-th horizontal line"),
            fi("v", 1, "line flex on the n-th 120-degree line"),
            fi("w", 1, "line flex on the n-th 60-degree line"),
            fi("tx", 0, "x translation"),
            fi("ty", 0, "y translation"),
            fi("rot", 0, "rotation about the origin"),
        ],
        GalleryId::Kagome3d => vec![
            fi("u", 2, "line flex on horizontal line n of layer m (index n,m)"),
            fi("tx", 0, "x translation"),
            fi("ty", 0, "y translation"),
            fi("tz", 0, "z translation"),
        ],
        GalleryId::Octahedron => vec![
            fi("ax", 1, "alternation flex of the octahedra in the plane x = 2n"),
            fi("ay", 1, "alternation flex of the octahedra in the plane y = 2n"),
            fi("az", 1, "alternation flex of the octahedra in the plane z = 2n"),
            fi("rx", 0, "axial rotation flex about the x axis"),
            fi("ry", 0, "axial rotation flex about the y axis"),
            fi("rz", 0, "axial rotation flex about the z axis"),
            fi("tx", 0, "x translation"),
            fi("ty", 0, "y translation"),
            fi("tz", 0, "z translation"),
        ],
        GalleryId::Kite => vec![
            fi("alt", 0, "alternation flex: factor-periodic with omega = (3, -1)"),
            fi("tx", 0, "x translation"),
            fi("ty", 0, "y translation"),
            fi("rot", 0, "rotation about the origin"),
        ],
        GalleryId::Bipyramid => vec![
            fi("sheer", 1, "sheering flex at the torus point with index 0 or 1"),
            fi("tx", 0, "x translation"),
            fi("ty", 0, "y translation"),
            fi("tz", 0, "z translation"),
        ],
    }
}

fn real_field(dim: usize) -> ExplicitField {
    ExplicitField::new(dim)
}

fn rv(v: Vec<f64>) -> DVector<C64> {
    DVector::from_vec(v.into_iter().map(|x| Complex::new(x, 0.0)).collect())
}

fn translation_field(fw: &CrystalFramework, dir: usize) -> VelocityField {
    VelocityField::constant_translation(fw.dimension(), fw.joint_count(), dir)
}

fn rotation_field_2d(fw: &CrystalFramework, cells: &PatchBox) -> ExplicitField {
    let mut f = real_field(2);
    for cell in cells.cells() {
        for jt in 0..fw.joint_count() {
            let p = fw.joint_position(jt, &cell).unwrap();
            f.set(jt, cell.clone(), rv(vec![-p[1], p[0]]));
        }
    }
    f
}

fn rotation_field_3d(fw: &CrystalFramework, cells: &PatchBox, axis: usize) -> ExplicitField {
    let mut f = real_field(3);
    for cell in cells.cells() {
        for jt in 0..fw.joint_count() {
            let p = fw.joint_position(jt, &cell).unwrap();
            let v = match axis {
                0 => vec![0.0, -p[2], p[1]],
                1 => vec![p[2], 0.0, -p[0]],
                _ => vec![-p[1], p[0], 0.0],
            };
            f.set(jt, cell.clone(), rv(v));
        }
    }
    f
}

/// Grid line flexes. `u` has unit x-velocities on row n, `v` unit
/// y-velocities on column n.
pub fn grid_line_flex(family: &str, n: i64, cells: &PatchBox) -> ExplicitField {
    let mut f = real_field(2);
    match family {
        "u" => {
            for k in cells.lo[0]..=cells.hi[0] {
                if cells.contains(&[k, n]) {
                    f.set(0, vec![k, n], rv(vec![1.0, 0.0]));
                }
            }
        }
        _ => {
            for k in cells.lo[1]..=cells.hi[1] {
                if cells.contains(&[n, k]) {
                    f.set(0, vec![n, k], rv(vec![0.0, 1.0]));
                }
            }
        }
    }
    f
}

/// Ring joints of the honeycomb hexagon at cell (i, j): pairs (joint, cell).
pub fn hex_ring(i: i64, jx: i64) -> [(usize, [i64; 2]); 6] {
    [
        (0, [i, jx]),
        (1, [i, jx]),
        (0, [i + 1, jx]),
        (1, [i + 1, jx - 1]),
        (0, [i + 1, jx - 1]),
        (1, [i, jx - 1]),
    ]
}

/// Rotation flex of one hexagon: tangential unit velocities on its six ring
/// joints, zero elsewhere.
pub fn hex_rotation_flex(fw: &CrystalFramework, i: i64, jx: i64) -> ExplicitField {
    let c = fw.joint_position(0, &[0, 0]).unwrap()
        + fw.lattice.translation(&[i, jx])
        + DVector::from_vec(vec![0.5, 3f64.sqrt() / 2.0]);
    let mut f = real_field(2);
    for (jt, cell) in hex_ring(i, jx) {
        let p = fw.joint_position(jt, &cell).unwrap();
        let r = &p - &c;
        f.set(jt, cell.to_vec(), rv(vec![-r[1], r[0]]));
    }
    f
}

/// Kagome line flex velocities: family u on horizontal lines (joints a, b),
/// v on 120-degree lines (b, c), w on 60-degree lines (a, c).
pub fn kagome_line_flex(family: &str, n: i64, cells: &PatchBox) -> ExplicitField {
    let s3 = 3f64.sqrt();
    let mut f = real_field(2);
    match family {
        "u" => {
            let (va, vb) = (vec![s3 / 2.0, -0.5], vec![s3 / 2.0, 0.5]);
            for k in cells.lo[0]..=cells.hi[0] {
                if cells.contains(&[k, n]) {
                    f.set(0, vec![k, n], rv(va.clone()));
                    f.set(1, vec![k, n], rv(vb.clone()));
                }
            }
        }
        "v" => {
            let (vb, vc) = (vec![0.0, 1.0], vec![-s3 / 2.0, 0.5]);
            for jx in cells.lo[1]..=cells.hi[1] {
                let k1 = -jx - n;
                if cells.contains(&[k1, jx]) {
                    f.set(1, vec![k1, jx], rv(vb.clone()));
                    f.set(2, vec![k1, jx], rv(vc.clone()));
                }
            }
        }
        _ => {
            let (va, vc) = (vec![0.0, -1.0], vec![-s3 / 2.0, -0.5]);
            for jx in cells.lo[1]..=cells.hi[1] {
                if cells.contains(&[n, jx]) {
                    f.set(0, vec![n, jx], rv(va.clone()));
                    f.set(2, vec![n, jx], rv(vc.clone()));
                }
            }
        }
    }
    f
}

/// Octahedron alternation flex for the sheet of octahedra in the plane
/// sigma = 2n: each octahedron in the sheet rotates about its sigma axis
/// with checkerboard signs; all other joints are fixed. Normalized so the
/// n = 0 flex agrees with the axial rotation on the octahedron at the origin.
pub fn octahedron_alternation_flex(axis: usize, n: i64, cells: &PatchBox) -> ExplicitField {
    let mut f = real_field(3);
    let parity = |a: i64, b: i64| if (a + b).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    for cell in cells.cells() {
        let (m, k, l) = (cell[0], cell[1], cell[2]);
        match axis {
            0 => {
                if m == n {
                    f.set(1, cell.clone(), rv(vec![0.0, 0.0, parity(k, l)]));
                    f.set(2, cell.clone(), rv(vec![0.0, -parity(k, l), 0.0]));
                }
            }
            1 => {
                if k == n {
                    f.set(0, cell.clone(), rv(vec![0.0, 0.0, -parity(m, l)]));
                    f.set(2, cell.clone(), rv(vec![parity(m, l), 0.0, 0.0]));
                }
            }
            _ => {
                if l == n {
                    f.set(0, cell.clone(), rv(vec![0.0, parity(m, k), 0.0]));
                    f.set(1, cell.clone(), rv(vec![-parity(m, k), 0.0, 0.0]));
                }
            }
        }
    }
    f
}

/// 3D kagome line flex on horizontal line n of layer m. The velocities are
/// perpendicular to all four off-line bars at each line joint, which tilts
/// them out of the layer plane.
pub fn kagome3d_line_flex(n: i64, m: i64, cells: &PatchBox) -> ExplicitField {
    let s2 = 2f64.sqrt();
    let s3 = 3f64.sqrt();
    let s6 = 6f64.sqrt();
    let scale = 2.0 / s3;
    let wa = vec![s2 / 2.0 * scale, -s6 / 6.0 * scale, -s3 / 6.0 * scale];
    let wb = vec![s2 / 2.0 * scale, s6 / 6.0 * scale, s3 / 6.0 * scale];
    let mut f = real_field(3);
    for k in cells.lo[0]..=cells.hi[0] {
        if cells.contains(&[k, n, m]) {
            f.set(0, vec![k, n, m], rv(wa.clone()));
            f.set(1, vec![k, n, m], rv(wb.clone()));
        }
    }
    f
}

/// Construct a documented flex by name. Explicit flexes are realized on the
/// cells of `cells`; factor-periodic flexes are returned as rules.
pub fn named_flex(id: GalleryId, name: &str, index: &[i64], cells: &PatchBox) -> Result<VelocityField> {
    let fw = make(id);
    let want = |arity: usize| -> Result<()> {
        if index.len() != arity {
            return Err(RumspecError::InvalidArgument(format!(
                "flex {name:?} of {} takes {arity} index value(s), got {}",
                id.name(),
                index.len()
            )));
        }
        Ok(())
    };
    let unknown = || RumspecError::UnknownFlex(name.to_string(), id.name().to_string());
    match (id, name) {
        (_, "tx") => Ok(translation_field(&fw, 0)),
        (_, "ty") => Ok(translation_field(&fw, 1)),
        (_, "tz") if fw.dimension() == 3 => Ok(translation_field(&fw, 2)),
        (GalleryId::Grid2d, "u") | (GalleryId::Grid2d, "v") => {
            want(1)?;
            Ok(VelocityField::Explicit(grid_line_flex(name, index[0], cells)))
        }
        (GalleryId::Grid2d, "rot") | (GalleryId::Honeycomb, "rot") | (GalleryId::Kagome2d, "rot") | (GalleryId::Kite, "rot") => {
            Ok(VelocityField::Explicit(rotation_field_2d(&fw, cells)))
        }
        (GalleryId::Honeycomb, "hexrot") => {
            want(2)?;
            Ok(VelocityField::Explicit(hex_rotation_flex(&fw, index[0], index[1])))
        }
        (GalleryId::Kagome2d, "u") | (GalleryId::Kagome2d, "v") | (GalleryId::Kagome2d, "w") => {
            want(1)?;
            Ok(VelocityField::Explicit(kagome_line_flex(name, index[0], cells)))
        }
        (GalleryId::Kagome3d, "u") => {
            want(2)?;
            Ok(VelocityField::Explicit(kagome3d_line_flex(index[0], index[1], cells)))
        }
        (GalleryId::Octahedron, "ax") | (GalleryId::Octahedron, "ay") | (GalleryId::Octahedron, "az") => {
            want(1)?;
            let axis = match name {
                "ax" => 0,
                "ay" => 1,
                _ => 2,
            };
            Ok(VelocityField::Explicit(octahedron_alternation_flex(axis, index[0], cells)))
        }
        (GalleryId::Octahedron, "rx") | (GalleryId::Octahedron, "ry") | (GalleryId::Octahedron, "rz") => {
            let axis = match name {
                "rx" => 0,
                "ry" => 1,
                _ => 2,
            };
            Ok(VelocityField::Explicit(rotation_field_3d(&fw, cells, axis)))
        }
        (GalleryId::Kite, "alt") => Ok(VelocityField::Factor(crate::framework::FactorField {
            base: kite_alternation_base(),
            omega: kite_alternation_omega().to_vec(),
        })),
        (GalleryId::Bipyramid, "sheer") => {
            want(1)?;
            if index[0] != 0 && index[0] != 1 {
                return Err(RumspecError::InvalidArgument("sheer index must be 0 or 1".into()));
            }
            let omega = bipyramid_sheer_omega(index[0] as usize);
            Ok(VelocityField::Factor(crate::framework::FactorField {
                base: bipyramid_sheer_base(&omega),
                omega: omega.to_vec(),
            }))
        }
        _ => Err(unknown()),
    }
}

/// Enumerate the documented spanning set of a framework on a box, in the
/// documented front-to-back order (grouped by |n|, or by ring distance for
/// the honeycomb). Used by strict-null checks and coefficient recovery.
pub fn basis_enumeration(id: GalleryId, cells: &PatchBox) -> Result<Vec<(String, ExplicitField)>> {
    let mut out = Vec::new();
    match id {
        GalleryId::Grid2d => {
            let max_n = cells.lo.iter().chain(&cells.hi).map(|x| x.abs()).max().unwrap_or(0);
            for a in 0..=max_n {
                for (pass, n) in [a, -a].into_iter().enumerate() {
                    if pass == 1 && a == 0 {
                        continue;
                    }
                    if n >= cells.lo[1] && n <= cells.hi[1] {
                        out.push((format!("u{n}"), grid_line_flex("u", n, cells)));
                    }
                    if n >= cells.lo[0] && n <= cells.hi[0] {
                        out.push((format!("v{n}"), grid_line_flex("v", n, cells)));
                    }
                }
            }
        }
        GalleryId::Kagome2d => {
            let vmin = -cells.hi[0] - cells.hi[1];
            let vmax = -cells.lo[0] - cells.lo[1];
            let bound = [cells.lo[1].abs(), cells.hi[1].abs(), cells.lo[0].abs(), cells.hi[0].abs(), vmin.abs(), vmax.abs()]
                .into_iter()
                .max()
                .unwrap();
            for a in 0..=bound {
                for (pass, n) in [a, -a].into_iter().enumerate() {
                    if pass == 1 && a == 0 {
                        continue;
                    }
                    if n >= cells.lo[1] && n <= cells.hi[1] {
                        out.push((format!("u{n}"), kagome_line_flex("u", n, cells)));
                    }
                    if n >= vmin && n <= vmax {
                        out.push((format!("v{n}"), kagome_line_flex("v", n, cells)));
                    }
                    if n >= cells.lo[0] && n <= cells.hi[0] {
                        out.push((format!("w{n}"), kagome_line_flex("w", n, cells)));
                    }
                }
            }
        }
        GalleryId::Honeycomb => {
            let fw = make(id);
            let mut hexes = honeycomb_hexagon_cells(cells);
            hexes.sort_by_key(|&(i, jx)| (i.abs() + jx.abs(), i, jx));
            for (i, jx) in hexes {
                out.push((format!("hex({i},{jx})"), hex_rotation_flex(&fw, i, jx)));
            }
        }
        GalleryId::Octahedron => {
            let fw = make(id);
            for (d, lbl) in ["tx", "ty", "tz"].iter().enumerate() {
                let f = translation_field(&fw, d);
                let patch = crate::framework::generate_patch(&fw, cells);
                out.push((lbl.to_string(), f.realize(&patch)?));
            }
            for (axis, lbl) in ["rx", "ry", "rz"].iter().enumerate() {
                out.push((lbl.to_string(), rotation_field_3d(&fw, cells, axis)));
            }
            let bound = cells.lo.iter().chain(&cells.hi).map(|x| x.abs()).max().unwrap_or(0);
            for a in 0..=bound {
                for (pass, n) in [a, -a].into_iter().enumerate() {
                    if pass == 1 && a == 0 {
                        continue;
                    }
                    for (axis, lbl) in ["ax", "ay", "az"].iter().enumerate() {
                        if n >= cells.lo[axis] && n <= cells.hi[axis] {
                            out.push((format!("{lbl}{n}"), octahedron_alternation_flex(axis, n, cells)));
                        }
                    }
                }
            }
        }
        _ => {
            return Err(RumspecError::InvalidArgument(format!(
                "no documented spanning-set enumeration for {}",
                id.name()
            )))
        }
    }
    Ok(out)
}

/// Hexagon cells whose full six-joint ring lies inside the box.
pub fn honeycomb_hexagon_cells(cells: &PatchBox) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for i in cells.lo[0]..=cells.hi[0] {
        for jx in cells.lo[1]..=cells.hi[1] {
            if hex_ring(i, jx).iter().all(|(_, c)| cells.contains(c)) {
                out.push((i, jx));
            }
        }
    }
    out
}

/// Coefficient recovery for the octahedron essential basis, following the
/// documented order: rigid part on the central octahedron, then the three
/// n = 0 alternation flexes from axis joints, then the remaining sheets.
/// Returns coefficients aligned with `basis_enumeration` and the final
/// sup-norm of the residual on the patch.
pub fn octahedron_reconstruct(
    patch: &FinitePatch,
    field: &ExplicitField,
) -> Result<(Vec<(String, C64)>, f64)> {
    let cells = &patch.cell_box;
    let elements = basis_enumeration(GalleryId::Octahedron, cells)?;
    let labels: Vec<String> = elements.iter().map(|(l, _)| l.clone()).collect();
    let fields: Vec<&ExplicitField> = elements.iter().map(|(_, f)| f).collect();
    let pos = |l: &str| labels.iter().position(|x| x == l);
    let mut coeffs = vec![Complex::new(0.0, 0.0); elements.len()];
    let mut residual = field.clone();

    let central: [(usize, [i64; 3]); 6] = [
        (0, [0, 0, 0]),
        (0, [-1, 0, 0]),
        (1, [0, 0, 0]),
        (1, [0, -1, 0]),
        (2, [0, 0, 0]),
        (2, [0, 0, -1]),
    ];
    let rigid: Vec<usize> = ["tx", "ty", "tz", "rx", "ry", "rz"]
        .iter()
        .filter_map(|l| pos(l))
        .collect();
    if rigid.len() != 6 {
        return Err(RumspecError::InvalidArgument("patch too small for rigid solve".into()));
    }
    solve_on_witnesses(&mut residual, &mut coeffs, &central, &rigid, None, fields.as_slice())?;

    // The n = 0 alternation flexes, solved against (a - r) effective columns
    // at one joint on each positive axis; the rigid fit absorbed their
    // rotation components, so correct the rotation coefficients afterwards.
    let axis_witnesses: [(usize, [i64; 3]); 3] = [(0, [1, 0, 0]), (1, [0, 1, 0]), (2, [0, 0, 1])];
    let zero_alts: Vec<usize> = ["ax0", "ay0", "az0"].iter().filter_map(|l| pos(l)).collect();
    if zero_alts.len() != 3 {
        return Err(RumspecError::InvalidArgument("patch too small for alternation solve".into()));
    }
    let corrections: Vec<(usize, usize)> = [("ax0", "rx"), ("ay0", "ry"), ("az0", "rz")]
        .iter()
        .map(|(a, r)| (pos(a).unwrap(), pos(r).unwrap()))
        .collect();
    solve_on_witnesses(
        &mut residual,
        &mut coeffs,
        &axis_witnesses,
        &zero_alts,
        Some(&corrections),
        fields.as_slice(),
    )?;

    // Remaining sheets one at a time.
    for (idx, label) in labels.iter().enumerate() {
        if !label.starts_with('a') || label.ends_with("x0") || label.ends_with("y0") || label.ends_with("z0") {
            continue;
        }
        let axis = match &label[1..2] {
            "x" => 0,
            "y" => 1,
            _ => 2,
        };
        let n: i64 = label[2..].parse().map_err(|_| RumspecError::UnknownLabel(label.clone()))?;
        let witness: (usize, [i64; 3]) = match axis {
            0 => (1, [n, 1, 0]),
            1 => (2, [1, n, 0]),
            _ => (0, [1, 0, n]),
        };
        if patch.slot(witness.0, &witness.1).is_none() {
            continue;
        }
        solve_on_witnesses(&mut residual, &mut coeffs, &[witness], &[idx], None, fields.as_slice())?;
    }

    let sup = residual.values.values().map(|v| v.norm()).fold(0.0, f64::max);
    Ok((labels.into_iter().zip(coeffs).collect(), sup))
}

/// Solve for the coefficients of `unknowns` from the residual restricted to
/// `witnesses`, subtract, and apply rotation-coefficient corrections.
fn solve_on_witnesses(
    residual: &mut ExplicitField,
    coeffs: &mut [C64],
    witnesses: &[(usize, [i64; 3])],
    unknowns: &[usize],
    corrections: Option<&[(usize, usize)]>,
    fields: &[&ExplicitField],
) -> Result<()> {
    let d = residual.dim;
    let nrows = witnesses.len() * d;
    let mut a = nalgebra::DMatrix::<C64>::zeros(nrows, unknowns.len());
    let mut b = nalgebra::DVector::<C64>::zeros(nrows);
    for (wi, (jt, cell)) in witnesses.iter().enumerate() {
        let rv = residual.at(*jt, cell);
        for i in 0..d {
            b[wi * d + i] = rv[i];
        }
        for (ci, &u) in unknowns.iter().enumerate() {
            let mut col = fields[u].at(*jt, cell);
            if let Some(corr) = corrections {
                for &(alt, rot) in corr {
                    if alt == u {
                        col -= fields[rot].at(*jt, cell);
                    }
                }
            }
            for i in 0..d {
                a[(wi * d + i, ci)] = col[i];
            }
        }
    }
    let (x, res, smin, _) = linalg::lstsq(&a, &b, 1e-9);
    if smin < 1e-9 {
        return Err(RumspecError::LocallyDependent { joint: witnesses[0].0, cell: witnesses[0].1.to_vec() });
    }
    if res > 1e-7 * (1.0 + b.norm()) {
        return Err(RumspecError::InvalidArgument(format!(
            "inconsistent witness solve (residual {res:.3e})"
        )));
    }
    for (ci, &u) in unknowns.iter().enumerate() {
        coeffs[u] += x[ci];
        // subtract x * (effective column) over the whole support
        let keys: Vec<(usize, Vec<i64>)> = fields[u].values.keys().cloned().collect();
        for (jt, cell) in keys {
            let v = fields[u].at(jt, &cell) * x[ci];
            residual.add_to(jt, cell, &(-v));
        }
        if let Some(corr) = corrections {
            for &(alt, rot) in corr {
                if alt == u {
                    coeffs[rot] -= x[ci];
                    let keys: Vec<(usize, Vec<i64>)> = fields[rot].values.keys().cloned().collect();
                    for (jt, cell) in keys {
                        let v = fields[rot].at(jt, &cell) * x[ci];
                        residual.add_to(jt, cell, &v);
                    }
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::framework::{generate_patch, verify_flex};

    #[test]
    fn motif_sizes() {
        let sizes = [
            (GalleryId::Grid2d, 1, 2),
            (GalleryId::Honeycomb, 2, 3),
            (GalleryId::Kagome2d, 3, 6),
            (GalleryId::Kagome3d, 4, 12),
            (GalleryId::Octahedron, 3, 12),
            (GalleryId::Kite, 2, 5),
            (GalleryId::Bipyramid, 2, 9),
        ];
        for (id, joints, edges) in sizes {
            let fw = make(id);
            assert_eq!(fw.joint_count(), joints, "{}", id.name());
            assert_eq!(fw.edge_count(), edges, "{}", id.name());
        }
    }

    #[test]
    fn all_bars_unit_length_where_expected() {
        for id in [GalleryId::Honeycomb, GalleryId::Kagome2d, GalleryId::Kagome3d, GalleryId::Bipyramid] {
            let fw = make(id);
            for e in 0..fw.edge_count() {
                let len = fw.edge_vector(e).unwrap().norm();
                assert!((len - 1.0).abs() < 1e-12, "{} edge {e} has length {len}", id.name());
            }
        }
    }

    #[test]
    fn gallery_flexes_pass_verification_radius_two() {
        let r = 2;
        let cases: Vec<(GalleryId, &str, Vec<i64>)> = vec![
            (GalleryId::Grid2d, "u", vec![0]),
            (GalleryId::Grid2d, "v", vec![-1]),
            (GalleryId::Honeycomb, "hexrot", vec![0, 0]),
            (GalleryId::Kagome2d, "u", vec![0]),
            (GalleryId::Kagome2d, "v", vec![1]),
            (GalleryId::Kagome2d, "w", vec![-1]),
            (GalleryId::Kagome3d, "u", vec![0, 0]),
            (GalleryId::Kagome3d, "u", vec![1, -1]),
            (GalleryId::Octahedron, "ax", vec![0]),
            (GalleryId::Octahedron, "ay", vec![1]),
            (GalleryId::Octahedron, "az", vec![-1]),
            (GalleryId::Octahedron, "rx", vec![]),
            (GalleryId::Octahedron, "ry", vec![]),
            (GalleryId::Octahedron, "rz", vec![]),
            (GalleryId::Kite, "alt", vec![]),
            (GalleryId::Bipyramid, "sheer", vec![0]),
            (GalleryId::Bipyramid, "sheer", vec![1]),
        ];
        for (id, name, index) in cases {
            let fw = make(id);
            let cells = PatchBox::centered(fw.dimension(), r);
            let flex = named_flex(id, name, &index, &cells).unwrap();
            let patch = generate_patch(&fw, &cells);
            let rep = verify_flex(&patch, &flex, 1e-12).unwrap();
            assert!(
                rep.is_flex(),
                "{} {name}{index:?}: residual {:.3e}",
                id.name(),
                rep.max_residual
            );
        }
    }

    #[test]
    fn kagome_u0_velocity_matches_documented_values() {
        let cells = PatchBox::centered(2, 1);
        let f = kagome_line_flex("u", 0, &cells);
        let va = f.at(0, &[0, 0]);
        let pi6 = std::f64::consts::PI / 6.0;
        assert!((va[0].re - pi6.cos()).abs() < 1e-15);
        assert!((va[1].re + pi6.sin()).abs() < 1e-15);
        let vb = f.at(1, &[0, 0]);
        assert!((vb[0].re - pi6.cos()).abs() < 1e-15);
        assert!((vb[1].re - pi6.sin()).abs() < 1e-15);
    }

    #[test]
    fn kagome_families_are_rotations_of_u() {
        // v (resp. w) is u rotated by 2pi/3 (resp. 4pi/3) about the centroid
        // of the central triangle, up to relabeling of lines.
        let fw = make(GalleryId::Kagome2d);
        let cells = PatchBox::centered(2, 4);
        let u0 = kagome_line_flex("u", 0, &cells);
        let centroid = DVector::from_vec(vec![0.5, 3f64.sqrt() / 6.0]);
        for (fam, angle) in [("v", 2.0 * std::f64::consts::PI / 3.0), ("w", 4.0 * std::f64::consts::PI / 3.0)] {
            let f0 = kagome_line_flex(fam, 0, &cells);
            let (c, s) = (angle.cos(), angle.sin());
            let rot = |p: &DVector<f64>| {
                DVector::from_vec(vec![
                    c * (p[0] - centroid[0]) - s * (p[1] - centroid[1]) + centroid[0],
                    s * (p[0] - centroid[0]) + c * (p[1] - centroid[1]) + centroid[1],
                ])
            };
            let mut checked = 0;
            for ((jt, cell), v) in &u0.values {
                let p = fw.joint_position(*jt, cell).unwrap();
                let q = rot(&p);
                // find the joint at the rotated position
                let mut found = false;
                for ((jt2, cell2), v2) in &f0.values {
                    let p2 = fw.joint_position(*jt2, cell2).unwrap();
                    if (&p2 - &q).norm() < 1e-9 {
                        let rv = DVector::from_vec(vec![
                            c * v[0].re - s * v[1].re,
                            s * v[0].re + c * v[1].re,
                        ]);
                        assert!((rv[0] - v2[0].re).abs() < 1e-12 && (rv[1] - v2[1].re).abs() < 1e-12);
                        found = true;
                        checked += 1;
                    }
                }
                let _ = found;
            }
            assert!(checked >= 3, "rotation overlap too small for family {fam}");
        }
    }

    #[test]
    fn octahedron_is_union_of_axis_plane_grids() {
        // Every bar lies in exactly one coordinate plane with even offset,
        // and within a plane the bars form the 45-degree grid of squares.
        let fw = make(GalleryId::Octahedron);
        let patch = generate_patch(&fw, &PatchBox::centered(3, 2));
        for bar in &patch.bars {
            let pa = &patch.joints[bar.a].position;
            let pb = &patch.joints[bar.b].position;
            let mut planes = 0;
            for ax in 0..3 {
                if (pa[ax] - pb[ax]).abs() < 1e-12 && (pa[ax] / 2.0 - (pa[ax] / 2.0).round()).abs() < 1e-12 {
                    planes += 1;
                }
            }
            assert_eq!(planes, 1);
            assert!((bar.vector.norm() - 2f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_joint_position_is_integer_translate() {
        let fw = make(GalleryId::Grid2d);
        let p = fw.joint_position(0, &[3, 2]).unwrap();
        assert_eq!((p[0], p[1]), (3.0, 2.0));
        assert!(fw.joint_position(5, &[0, 0]).is_err());
    }

    #[test]
    fn bipyramid_single_cell_patch_has_only_edge_four() {
        let fw = make(GalleryId::Bipyramid);
        let patch = generate_patch(&fw, &PatchBox::new(vec![0, 0, 0], vec![0, 0, 0]));
        assert_eq!(patch.joint_count(), 2);
        assert_eq!(patch.bar_count(), 1);
        assert_eq!(patch.bars[0].edge, 3); // e4 is the only edge with both offsets zero
    }

    #[test]
    fn bipyramid_first_edge_row_matches_table() {
        let fw = make(GalleryId::Bipyramid);
        let p = fw.edge_vector(0).unwrap();
        assert!((p - DVector::from_vec(vec![-1.0, 0.0, 0.0])).norm() < 1e-15);
        let e = &fw.motif.edges[0];
        assert_eq!((e.from_offset.clone(), e.to_offset.clone()), (vec![0, 0, 0], vec![1, 0, 0]));
        // polar joint position
        let p2 = fw.joint_position(1, &[0, 0, 0]).unwrap();
        assert!((p2[0] - 0.5).abs() < 1e-15);
        assert!((p2[1] - BIPYRAMID_ALPHA).abs() < 1e-15);
        assert!((p2[2] + BIPYRAMID_H).abs() < 1e-15);
        // vertical period: joint 1 one cell up in z
        let p1 = fw.joint_position(0, &[0, 0, 1]).unwrap();
        assert!((p1 - DVector::from_vec(vec![0.0, 0.0, 2.0 * BIPYRAMID_H])).norm() < 1e-15);
    }

    #[test]
    fn octahedron_reconstruct_round_trip() {
        use rand::SeedableRng;
        use rand::Rng;
        let fw = make(GalleryId::Octahedron);
        let cells = PatchBox::centered(3, 2);
        let patch = generate_patch(&fw, &cells);
        let elements = basis_enumeration(GalleryId::Octahedron, &cells).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut target = ExplicitField::new(3);
        let mut want = std::collections::BTreeMap::new();
        for (label, f) in &elements {
            let c = Complex::new(rng.random_range(-1.0..1.0), 0.0);
            want.insert(label.clone(), c);
            target = target.axpy(Complex::new(1.0, 0.0), f, c);
        }
        let (coeffs, sup) = octahedron_reconstruct(&patch, &target).unwrap();
        assert!(sup < 1e-9, "residual sup {sup}");
        for (label, got) in coeffs {
            let expect = want[&label];
            assert!((got - expect).norm() < 1e-8, "{label}: got {got}, want {expect}");
        }
    }
}
