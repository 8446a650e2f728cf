//! Transfer function assembly and evaluation.
//!
//! The transfer function of a crystal framework is a matrix of Laurent
//! polynomials on the punctured torus C_*^d. Rows are labelled by motif
//! edges; columns by (joint, coordinate) pairs in joint-major order (all
//! coordinates of joint 1, then joint 2, ...). For an edge e = (v,k)(w,l)
//! with v != w the row carries p(e) z^{-k} in v's block and -p(e) z^{-l}
//! in w's block; for v = w it carries p(e)(z^{-k} - z^{-l}). Here p(e) is
//! the realized bar vector, endpoint offsets included.
//!
//! The symbol function is the restriction of the transfer function to the
//! unit d-torus.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Result, RumspecError};
use crate::framework::CrystalFramework;
use crate::laurent::{C64, LaurentPoly};
use crate::linalg;

/// Matrix of Laurent polynomials. Entries are stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentMatrix {
    pub dim: usize,
    pub nrows: usize,
    pub ncols: usize,
    pub entries: Vec<LaurentPoly>,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
}

impl LaurentMatrix {
    pub fn zeros(dim: usize, nrows: usize, ncols: usize) -> Self {
        LaurentMatrix {
            dim,
            nrows,
            ncols,
            entries: vec![LaurentPoly::zero(dim); nrows * ncols],
            row_labels: (1..=nrows).map(|i| format!("e{i}")).collect(),
            col_labels: (1..=ncols).map(|i| format!("c{i}")).collect(),
        }
    }

    pub fn entry(&self, r: usize, c: usize) -> &LaurentPoly {
        &self.entries[r * self.ncols + c]
    }

    pub fn entry_mut(&mut self, r: usize, c: usize) -> &mut LaurentPoly {
        &mut self.entries[r * self.ncols + c]
    }

    /// Substitute z -> z^{-1} in every entry.
    pub fn subst_inverse(&self) -> Self {
        let mut out = self.clone();
        for e in &mut out.entries {
            *e = e.subst_inverse();
        }
        out
    }

    /// Row/column submatrix in the given order.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Result<LaurentMatrix> {
        for &r in rows {
            if r >= self.nrows {
                return Err(RumspecError::InvalidArgument(format!("row {r} out of range")));
            }
        }
        for &c in cols {
            if c >= self.ncols {
                return Err(RumspecError::InvalidArgument(format!("col {c} out of range")));
            }
        }
        let mut out = LaurentMatrix::zeros(self.dim, rows.len(), cols.len());
        out.row_labels = rows.iter().map(|&r| self.row_labels[r].clone()).collect();
        out.col_labels = cols.iter().map(|&c| self.col_labels[c].clone()).collect();
        for (ri, &r) in rows.iter().enumerate() {
            for (ci, &c) in cols.iter().enumerate() {
                *out.entry_mut(ri, ci) = self.entry(r, c).clone();
            }
        }
        Ok(out)
    }

    pub fn row_index(&self, label: &str) -> Result<usize> {
        self.row_labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| RumspecError::UnknownLabel(label.to_string()))
    }

    pub fn col_index(&self, label: &str) -> Result<usize> {
        self.col_labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| RumspecError::UnknownLabel(label.to_string()))
    }
}

/// A Laurent matrix evaluated at a point of C_*^d.
#[derive(Debug, Clone)]
pub struct EvaluatedMatrix {
    pub at: Vec<C64>,
    pub matrix: DMatrix<C64>,
}

/// Assemble the transfer function of a crystal framework.
pub fn assemble_transfer_function(fw: &CrystalFramework) -> LaurentMatrix {
    let d = fw.dimension();
    let nrows = fw.edge_count();
    let ncols = d * fw.joint_count();
    let mut m = LaurentMatrix::zeros(d, nrows, ncols);
    m.row_labels = (1..=nrows).map(|i| format!("e{i}")).collect();
    let axes = ["x", "y", "z", "w"];
    m.col_labels = (0..fw.joint_count())
        .flat_map(|j| {
            (0..d).map(move |i| {
                if i < axes.len() {
                    format!("v{}{}", j + 1, axes[i])
                } else {
                    format!("v{}c{}", j + 1, i)
                }
            })
        })
        .collect();
    for (r, e) in fw.motif.edges.iter().enumerate() {
        let p = fw.edge_vector(r).expect("validated edge");
        let neg_k: Vec<i64> = e.from_offset.iter().map(|x| -x).collect();
        let neg_l: Vec<i64> = e.to_offset.iter().map(|x| -x).collect();
        for i in 0..d {
            let c = Complex::new(p[i], 0.0);
            if c.norm_sqr() == 0.0 {
                continue;
            }
            m.entry_mut(r, e.from * d + i).add_term(neg_k.clone(), c);
            m.entry_mut(r, e.to * d + i).add_term(neg_l.clone(), -c);
        }
    }
    m
}

/// Entry-wise Laurent evaluation; every component of z must be nonzero.
pub fn evaluate(m: &LaurentMatrix, z: &[C64]) -> Result<EvaluatedMatrix> {
    if z.len() != m.dim {
        return Err(RumspecError::DimensionMismatch { expected: m.dim, got: z.len() });
    }
    for (i, zi) in z.iter().enumerate() {
        if zi.norm_sqr() == 0.0 {
            return Err(RumspecError::ZeroComponent(i));
        }
    }
    let mut out = DMatrix::zeros(m.nrows, m.ncols);
    for r in 0..m.nrows {
        for c in 0..m.ncols {
            out[(r, c)] = m.entry(r, c).eval(z)?;
        }
    }
    Ok(EvaluatedMatrix { at: z.to_vec(), matrix: out })
}

/// Restriction to the unit torus: evaluation at z = (e^{i theta_1}, ...).
pub fn restrict_to_torus(m: &LaurentMatrix, thetas: &[f64]) -> Result<EvaluatedMatrix> {
    let z: Vec<C64> = thetas.iter().map(|&t| Complex::from_polar(1.0, t)).collect();
    evaluate(m, &z)
}

pub fn min_singular_value(e: &EvaluatedMatrix) -> f64 {
    linalg::sigma_extremes_complex(&e.matrix).0
}

pub fn singular_extremes(e: &EvaluatedMatrix) -> (f64, f64) {
    linalg::sigma_extremes_complex(&e.matrix)
}

/// Orthonormal kernel vectors of the evaluated matrix.
pub fn kernel_basis(e: &EvaluatedMatrix, rank_tol: f64) -> Vec<DVector<C64>> {
    linalg::kernel_complex(&e.matrix, rank_tol)
}

/// Exact Laurent-polynomial determinant of a square matrix, by fraction-free
/// Bareiss elimination. Denominators are cleared first by pulling a monomial
/// out of each row, so intermediate entries are ordinary polynomials.
pub fn symbolic_determinant(m: &LaurentMatrix) -> Result<LaurentPoly> {
    if m.nrows != m.ncols {
        return Err(RumspecError::NonSquare { rows: m.nrows, cols: m.ncols });
    }
    let n = m.nrows;
    let dim = m.dim;
    if n == 0 {
        return Ok(LaurentPoly::one(dim));
    }
    // Clear denominators: multiply row i by z^{-m_i} with m_i the
    // componentwise minimum exponent of the row; restore z^{sum m_i} at the end.
    let mut cleared: Vec<LaurentPoly> = Vec::with_capacity(n * n);
    let mut restore = vec![0i64; dim];
    for r in 0..n {
        let mut row_min: Option<Vec<i64>> = None;
        for c in 0..n {
            if let Some(e) = m.entry(r, c).min_exponents() {
                row_min = Some(match row_min {
                    None => e,
                    Some(mut acc) => {
                        for (a, b) in acc.iter_mut().zip(&e) {
                            *a = (*a).min(*b);
                        }
                        acc
                    }
                });
            }
        }
        let shift: Vec<i64> = match &row_min {
            Some(mins) => mins.iter().map(|x| -x).collect(),
            None => return Ok(LaurentPoly::zero(dim)), // zero row
        };
        for (ri, s) in restore.iter_mut().zip(&shift) {
            *ri -= s;
        }
        for c in 0..n {
            cleared.push(m.entry(r, c).shift(&shift));
        }
    }
    let mut a = cleared;
    let at = |a: &Vec<LaurentPoly>, r: usize, c: usize| a[r * n + c].clone();
    let mut sign = 1.0f64;
    let mut prev = LaurentPoly::one(dim);
    for k in 0..n - 1 {
        if at(&a, k, k).is_zero() {
            let Some(swap) = (k + 1..n).find(|&r| !at(&a, r, k).is_zero()) else {
                return Ok(LaurentPoly::zero(dim));
            };
            for c in 0..n {
                a.swap(k * n + c, swap * n + c);
            }
            sign = -sign;
        }
        let pivot = at(&a, k, k);
        for r in k + 1..n {
            for c in k + 1..n {
                let num = at(&a, r, c).mul(&pivot).sub(&at(&a, r, k).mul(&at(&a, k, c)));
                a[r * n + c] = num.div_exact(&prev)?;
            }
            a[r * n + k] = LaurentPoly::zero(dim);
        }
        prev = pivot;
    }
    let det = at(&a, n - 1, n - 1).scale(Complex::new(sign, 0.0));
    Ok(det.shift(&restore))
}

/// Determinant of a row/column selection.
pub fn symbolic_determinant_of(m: &LaurentMatrix, rows: &[usize], cols: &[usize]) -> Result<LaurentPoly> {
    symbolic_determinant(&m.submatrix(rows, cols)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::framework::{CrystalFramework, Motif, MotifEdge, PeriodLattice};
    use nalgebra::DVector;

    fn grid2d() -> CrystalFramework {
        let lattice = PeriodLattice::new(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let motif = Motif {
            joints: vec![DVector::from_vec(vec![0.0, 0.0])],
            edges: vec![
                MotifEdge { from: 0, to: 0, from_offset: vec![0, 0], to_offset: vec![1, 0] },
                MotifEdge { from: 0, to: 0, from_offset: vec![0, 0], to_offset: vec![0, 1] },
            ],
        };
        CrystalFramework::new("grid", lattice, motif).unwrap()
    }

    #[test]
    fn grid_transfer_function_is_diagonal() {
        let psi = assemble_transfer_function(&grid2d());
        assert_eq!((psi.nrows, psi.ncols), (2, 2));
        // Row e1: -(1 - z1^{-1}) in column v1x.
        let p = psi.entry(0, 0);
        assert_eq!(p.coeff(&[0, 0]), Complex::new(-1.0, 0.0));
        assert_eq!(p.coeff(&[-1, 0]), Complex::new(1.0, 0.0));
        assert!(psi.entry(0, 1).is_zero());
        assert!(psi.entry(1, 0).is_zero());
        let q = psi.entry(1, 1);
        assert_eq!(q.coeff(&[0, 0]), Complex::new(-1.0, 0.0));
        assert_eq!(q.coeff(&[0, -1]), Complex::new(1.0, 0.0));
    }

    #[test]
    fn grid_evaluate_at_minus_one_one() {
        let psi = assemble_transfer_function(&grid2d());
        let e = evaluate(&psi, &[Complex::new(-1.0, 0.0), Complex::new(1.0, 0.0)]).unwrap();
        assert!((e.matrix[(0, 0)] - Complex::new(-2.0, 0.0)).norm() < 1e-15);
        assert!(e.matrix[(1, 1)].norm() < 1e-15);
        assert!(evaluate(&psi, &[Complex::new(0.0, 0.0), Complex::new(1.0, 0.0)]).is_err());
    }

    #[test]
    fn torus_restriction_matches_evaluate() {
        let psi = assemble_transfer_function(&grid2d());
        let a = restrict_to_torus(&psi, &[std::f64::consts::PI, 0.0]).unwrap();
        let b = evaluate(&psi, &[Complex::new(-1.0, 0.0), Complex::new(1.0, 0.0)]).unwrap();
        assert!((a.matrix - b.matrix).norm() < 1e-12);
    }

    #[test]
    fn grid_determinant_product_of_diagonal() {
        let psi = assemble_transfer_function(&grid2d());
        let det = symbolic_determinant(&psi).unwrap();
        // (1 - z1^{-1})(1 - z2^{-1})
        let mut expected = LaurentPoly::constant(2, Complex::new(1.0, 0.0));
        expected.add_term(vec![-1, 0], Complex::new(-1.0, 0.0));
        expected.add_term(vec![0, -1], Complex::new(-1.0, 0.0));
        expected.add_term(vec![-1, -1], Complex::new(1.0, 0.0));
        assert!(det.sub(&expected).max_coeff() < 1e-14, "det = {det}");
    }

    #[test]
    fn one_by_one_determinant_is_the_entry() {
        let mut m = LaurentMatrix::zeros(1, 1, 1);
        *m.entry_mut(0, 0) = LaurentPoly::monomial(1, vec![2], Complex::new(3.0, 1.0));
        let det = symbolic_determinant(&m).unwrap();
        assert_eq!(det.coeff(&[2]), Complex::new(3.0, 1.0));
    }

    #[test]
    fn zero_matrix_kernel_full_and_sigma_zero() {
        let e = EvaluatedMatrix { at: vec![], matrix: DMatrix::zeros(3, 2) };
        assert_eq!(min_singular_value(&e), 0.0);
        assert_eq!(kernel_basis(&e, 1e-9).len(), 2);
    }

    #[test]
    fn bipyramid_sheering_kernel_supported_on_three_coordinates() {
        let fw = crate::gallery::make(crate::gallery::GalleryId::Bipyramid);
        let psi = assemble_transfer_function(&fw);
        let omega = crate::gallery::bipyramid_sheer_omega(0);
        let z: Vec<C64> = omega.iter().map(|w| w.inv()).collect();
        let e = evaluate(&psi, &z).unwrap();
        assert!(min_singular_value(&e) < 1e-9);
        let kernel = kernel_basis(&e, 1e-9);
        assert_eq!(kernel.len(), 1);
        let v = &kernel[0];
        // supported on (v1z, v2x, v2y); zero on (v1x, v1y, v2z)
        for dead in [0usize, 1, 5] {
            assert!(v[dead].norm() < 1e-10, "component {dead} = {}", v[dead]);
        }
        assert!(v[2].norm() > 0.1);
    }

    #[test]
    fn random_full_rank_has_positive_sigma_min() {
        let mut state = 0x2545f4914f6cdd1du64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let m = DMatrix::from_fn(6, 6, |_, _| Complex::new(next(), next()));
        let e = EvaluatedMatrix { at: vec![], matrix: m };
        assert!(min_singular_value(&e) > 1e-6);
    }
}
