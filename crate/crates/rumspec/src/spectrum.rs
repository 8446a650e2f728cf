//! Rank-degeneracy scans of the transfer function over torus grids and
//! moduli slices, local root refinement, and detection of linear structure
//! in the flagged set.
//!
//! A point omega is flagged when sigma_min(Psi(omega^{-1})) is below
//! tol * max(1, sigma_max) at that point. On the unit torus this is the
//! rigid-unit-mode condition ker Phi(conj(omega)) != 0, since conj(omega) =
//! omega^{-1} there; off the torus it detects factor-periodic flexes with
//! geometrically growing or decaying profiles.

use nalgebra::Complex;
use rayon::prelude::*;

use crate::error::{Result, RumspecError};
use crate::framework::CrystalFramework;
use crate::laurent::C64;
use crate::linalg;
use crate::symbol::{self, LaurentMatrix};

/// Uniform sampling grid on the d-torus: theta_j = 2 pi j / resolution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TorusGrid {
    pub resolution: Vec<usize>,
}

impl TorusGrid {
    pub fn uniform(dim: usize, resolution: usize) -> Self {
        assert!(resolution > 0);
        TorusGrid { resolution: vec![resolution; dim] }
    }

    /// Default resolutions: 64 per axis in 2D, 48 per axis in 3D.
    pub fn default_for_dim(dim: usize) -> Self {
        Self::uniform(dim, if dim >= 3 { 48 } else { 64 })
    }

    pub fn dim(&self) -> usize {
        self.resolution.len()
    }

    pub fn total_points(&self) -> usize {
        self.resolution.iter().product()
    }
}

/// Moduli of a slice torus: the scan runs over (r_1 e^{i t_1}, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct SliceSpec {
    pub moduli: Vec<f64>,
}

impl SliceSpec {
    pub fn unit(dim: usize) -> Self {
        SliceSpec { moduli: vec![1.0; dim] }
    }

    pub fn new(moduli: Vec<f64>) -> Result<Self> {
        if moduli.iter().any(|&r| r <= 0.0 || !r.is_finite()) {
            return Err(RumspecError::InvalidArgument("slice moduli must be positive".into()));
        }
        Ok(SliceSpec { moduli })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ScanOptions {
    /// Flag threshold on sigma_min, normalized by max(1, sigma_max).
    pub tol: f64,
    /// Rank threshold for kernel dimensions at flagged points.
    pub rank_tol: f64,
    pub threads: Option<usize>,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { tol: 1e-8, rank_tol: 1e-9, threads: None }
    }
}

#[derive(Debug, Clone)]
pub struct FlaggedPoint {
    pub linear_index: usize,
    pub index: Vec<usize>,
    pub thetas: Vec<f64>,
    pub sigma_min: f64,
    pub kernel_dim: usize,
}

/// A line in phase space with rational direction, reported by a base point
/// (in radians) and an integer direction vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectedLine {
    pub base: Vec<f64>,
    pub direction: Vec<i64>,
}

#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub dimension: usize,
    pub resolution: Vec<usize>,
    pub moduli: Vec<f64>,
    pub tol: f64,
    /// sigma_min per sample, row-major in the grid index.
    pub sigma_min: Vec<f64>,
    pub flagged: Vec<FlaggedPoint>,
    pub lines: Vec<DetectedLine>,
}

impl SpectrumReport {
    pub fn linear_index(&self, index: &[usize]) -> usize {
        let mut li = 0;
        for (i, &ix) in index.iter().enumerate() {
            li = li * self.resolution[i] + ix;
        }
        li
    }

    pub fn index_of(&self, mut li: usize) -> Vec<usize> {
        let d = self.resolution.len();
        let mut idx = vec![0usize; d];
        for i in (0..d).rev() {
            idx[i] = li % self.resolution[i];
            li /= self.resolution[i];
        }
        idx
    }

    pub fn thetas_of(&self, li: usize) -> Vec<f64> {
        self.index_of(li)
            .iter()
            .zip(&self.resolution)
            .map(|(&j, &r)| 2.0 * std::f64::consts::PI * j as f64 / r as f64)
            .collect()
    }

    pub fn is_flagged_index(&self, index: &[usize]) -> bool {
        let li = self.linear_index(index);
        self.flagged.iter().any(|f| f.linear_index == li)
    }
}

/// The evaluation point of the transfer function for multifactor omega:
/// z = omega^{-1} componentwise.
pub fn inverse_point(moduli: &[f64], thetas: &[f64]) -> Vec<C64> {
    moduli
        .iter()
        .zip(thetas)
        .map(|(&r, &t)| Complex::from_polar(1.0 / r, -t))
        .collect()
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(f),
        _ => f(),
    }
}

fn scan_matrix(
    psi: &LaurentMatrix,
    grid: &TorusGrid,
    moduli: &[f64],
    opts: &ScanOptions,
) -> SpectrumReport {
    let d = grid.dim();
    assert_eq!(psi.dim, d);
    let total = grid.total_points();
    let res = grid.resolution.clone();
    let thetas_axis: Vec<Vec<f64>> = res
        .iter()
        .map(|&r| (0..r).map(|j| 2.0 * std::f64::consts::PI * j as f64 / r as f64).collect())
        .collect();
    let index_of = |mut li: usize| {
        let mut idx = vec![0usize; d];
        for i in (0..d).rev() {
            idx[i] = li % res[i];
            li /= res[i];
        }
        idx
    };
    let sigma: Vec<(f64, f64)> = with_pool(opts.threads, || {
        (0..total)
            .into_par_iter()
            .map(|li| {
                let idx = index_of(li);
                let th: Vec<f64> = idx.iter().enumerate().map(|(i, &j)| thetas_axis[i][j]).collect();
                let z = inverse_point(moduli, &th);
                let e = symbol::evaluate(psi, &z).expect("nonzero point");
                linalg::sigma_extremes_complex(&e.matrix)
            })
            .collect()
    });
    let mut report = SpectrumReport {
        dimension: d,
        resolution: res,
        moduli: moduli.to_vec(),
        tol: opts.tol,
        sigma_min: sigma.iter().map(|s| s.0).collect(),
        flagged: Vec::new(),
        lines: Vec::new(),
    };
    for (li, &(smin, smax)) in sigma.iter().enumerate() {
        if smin < opts.tol * smax.max(1.0) {
            let idx = report.index_of(li);
            let th = report.thetas_of(li);
            let z = inverse_point(moduli, &th);
            let e = symbol::evaluate(psi, &z).expect("nonzero point");
            let kernel_dim = linalg::kernel_complex(&e.matrix, opts.rank_tol.max(opts.tol)).len();
            report.flagged.push(FlaggedPoint {
                linear_index: li,
                index: idx,
                thetas: th,
                sigma_min: smin,
                kernel_dim,
            });
        }
    }
    report
}

/// Scan the RUM spectrum: unit moduli.
pub fn scan_rum_spectrum(fw: &CrystalFramework, grid: &TorusGrid, opts: &ScanOptions) -> SpectrumReport {
    let psi = symbol::assemble_transfer_function(fw);
    scan_matrix(&psi, grid, &vec![1.0; fw.dimension()], opts)
}

/// Scan a moduli slice of the geometric flex spectrum.
pub fn scan_geometric_slice(
    fw: &CrystalFramework,
    slice: &SliceSpec,
    grid: &TorusGrid,
    opts: &ScanOptions,
) -> Result<SpectrumReport> {
    if slice.moduli.len() != fw.dimension() {
        return Err(RumspecError::DimensionMismatch {
            expected: fw.dimension(),
            got: slice.moduli.len(),
        });
    }
    let psi = symbol::assemble_transfer_function(fw);
    Ok(scan_matrix(&psi, grid, &slice.moduli, opts))
}

#[derive(Debug, Clone)]
pub struct RefineOutcome {
    pub omega: Vec<C64>,
    pub sigma_min: f64,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct RefineOptions {
    pub tol: f64,
    /// Keep moduli fixed (search the slice torus only).
    pub lock_moduli: bool,
    /// Trust region: largest phase displacement from the seed, per axis.
    pub max_phase_move: f64,
    /// Trust region: largest |log r - log r_seed| per axis.
    pub max_log_modulus_move: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions { tol: 1e-9, lock_moduli: false, max_phase_move: 0.35, max_log_modulus_move: 0.5 }
    }
}

/// Local minimization of the normalized sigma_min by coordinate descent on
/// phases and (optionally) moduli, starting from `seed` and confined to a
/// trust region around it. Succeeds when the objective drops below tol;
/// reports failure if the steps bottom out while still above tol, so a seed
/// with no nearby rank degeneracy comes back unconverged instead of drifting
/// to a distant root.
pub fn refine_root(fw: &CrystalFramework, seed: &[C64], opts: &RefineOptions) -> Result<RefineOutcome> {
    let d = fw.dimension();
    if seed.len() != d {
        return Err(RumspecError::DimensionMismatch { expected: d, got: seed.len() });
    }
    for (i, z) in seed.iter().enumerate() {
        if z.norm_sqr() == 0.0 {
            return Err(RumspecError::ZeroComponent(i));
        }
    }
    let psi = symbol::assemble_transfer_function(fw);
    let seed_moduli: Vec<f64> = seed.iter().map(|z| z.norm()).collect();
    let seed_thetas: Vec<f64> = seed.iter().map(|z| z.arg()).collect();
    let mut moduli = seed_moduli.clone();
    let mut thetas = seed_thetas.clone();
    let objective = |moduli: &[f64], thetas: &[f64]| -> f64 {
        let z = inverse_point(moduli, thetas);
        let e = symbol::evaluate(&psi, &z).expect("nonzero");
        let (lo, hi) = linalg::sigma_extremes_complex(&e.matrix);
        lo / hi.max(1.0)
    };
    let mut best = objective(&moduli, &thetas);
    let mut theta_step = vec![0.05f64; d];
    let mut mod_step = vec![0.05f64; d];
    let mut iterations = 0usize;
    let max_sweeps = 4000;
    while best >= opts.tol && iterations < max_sweeps {
        iterations += 1;
        let mut improved = false;
        for i in 0..d {
            for dir in [-1.0, 1.0] {
                let mut cand = thetas.clone();
                cand[i] += dir * theta_step[i];
                if (cand[i] - seed_thetas[i]).abs() > opts.max_phase_move {
                    continue;
                }
                let v = objective(&moduli, &cand);
                if v < best {
                    best = v;
                    thetas = cand;
                    improved = true;
                }
            }
            if !opts.lock_moduli {
                for dir in [-1.0, 1.0] {
                    let mut cand = moduli.clone();
                    cand[i] *= 1.0 + dir * mod_step[i];
                    if cand[i] <= 1e-8
                        || (cand[i] / seed_moduli[i]).ln().abs() > opts.max_log_modulus_move
                    {
                        continue;
                    }
                    let v = objective(&cand, &thetas);
                    if v < best {
                        best = v;
                        moduli = cand;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            for s in theta_step.iter_mut().chain(mod_step.iter_mut()) {
                *s *= 0.5;
            }
            if theta_step[0] < 1e-12 {
                break;
            }
        }
    }
    let omega: Vec<C64> = moduli
        .iter()
        .zip(&thetas)
        .map(|(&r, &t)| Complex::from_polar(r, t))
        .collect();
    Ok(RefineOutcome { omega, sigma_min: best, converged: best < opts.tol, iterations })
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Options for line detection in a flagged set.
#[derive(Debug, Clone, Copy)]
pub struct LineOptions {
    /// Largest direction entry considered (rational directions with small
    /// denominator).
    pub max_denominator: i64,
    /// Number of fresh samples along a candidate line.
    pub traversal_samples: usize,
    /// Fraction of traversal samples that must be flagged.
    pub accept_fraction: f64,
    /// Hard cap on the number of reported lines; when the flagged set is
    /// (near-)dense every direction passes and the full list is meaningless.
    pub max_lines: usize,
}

impl Default for LineOptions {
    fn default() -> Self {
        LineOptions {
            max_denominator: 8,
            traversal_samples: 256,
            accept_fraction: 0.95,
            max_lines: 512,
        }
    }
}

/// All primitive integer direction vectors with entries bounded by
/// `max_denominator`, in canonical sign (first nonzero entry positive).
fn primitive_directions(dim: usize, max_denominator: i64) -> Vec<Vec<i64>> {
    let mut out = std::collections::BTreeSet::new();
    for v in crate::framework::PatchBox::centered(dim, max_denominator).cells() {
        let g = v.iter().fold(0i64, |acc, &x| gcd(acc, x));
        if g == 0 {
            continue;
        }
        let mut w: Vec<i64> = v.iter().map(|x| x / g).collect();
        if w.iter().find(|&&x| x != 0).copied().unwrap_or(0) < 0 {
            for x in w.iter_mut() {
                *x = -*x;
            }
        }
        out.insert(w);
    }
    out.into_iter().collect()
}

/// Detect full lines with rational directions inside the flagged set of a
/// scan. For every primitive direction with small entries, the flagged
/// points are partitioned into grid orbits; an orbit that is almost
/// entirely flagged is then confirmed by a dense fresh traversal with the
/// same sigma test the scan used. The number of reported lines is capped
/// by `LineOptions::max_lines`.
pub fn detect_linear_structure(
    fw: &CrystalFramework,
    report: &SpectrumReport,
    opts: &LineOptions,
) -> Vec<DetectedLine> {
    if report.flagged.is_empty() {
        return Vec::new();
    }
    let psi = symbol::assemble_transfer_function(fw);
    let res: Vec<i64> = report.resolution.iter().map(|&r| r as i64).collect();
    let mut flagged_set = std::collections::BTreeSet::new();
    for f in &report.flagged {
        flagged_set.insert(f.index.iter().map(|&x| x as i64).collect::<Vec<i64>>());
    }

    // Orbit of a grid point under stepping by v (indices mod resolution).
    let orbit = |p: &[i64], v: &[i64]| -> Vec<Vec<i64>> {
        let mut seen = std::collections::BTreeSet::new();
        let mut cur: Vec<i64> = p.to_vec();
        loop {
            if !seen.insert(cur.clone()) {
                break;
            }
            cur = cur.iter().zip(v).zip(&res).map(|((&c, &vi), &r)| (c + vi).rem_euclid(r)).collect();
        }
        seen.into_iter().collect()
    };

    let step: Vec<f64> = res.iter().map(|&r| 2.0 * std::f64::consts::PI / r as f64).collect();
    let mut lines = Vec::new();
    'directions: for v in primitive_directions(report.dimension, opts.max_denominator) {
        // partition flagged points into orbits of this direction
        let mut visited: std::collections::BTreeSet<Vec<i64>> = std::collections::BTreeSet::new();
        for p in &flagged_set {
            if visited.contains(p) {
                continue;
            }
            let orb = orbit(p, &v);
            for q in &orb {
                visited.insert(q.clone());
            }
            if orb.len() < 2 {
                continue;
            }
            let flagged_on_orbit = orb.iter().filter(|q| flagged_set.contains(*q)).count();
            if (flagged_on_orbit as f64) < opts.accept_fraction * orb.len() as f64 {
                continue;
            }
            // dense traversal with fresh sigma evaluations
            let base = orb.first().expect("nonempty orbit");
            let base_theta: Vec<f64> = base.iter().zip(&step).map(|(&b, &s)| b as f64 * s).collect();
            let n = opts.traversal_samples;
            let mut hits = 0usize;
            for k in 0..n {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                let th: Vec<f64> =
                    base_theta.iter().zip(&v).map(|(&b, &vi)| b + t * vi as f64).collect();
                let z = inverse_point(&report.moduli, &th);
                let e = symbol::evaluate(&psi, &z).expect("nonzero");
                let (lo, hi) = linalg::sigma_extremes_complex(&e.matrix);
                if lo < report.tol * hi.max(1.0) {
                    hits += 1;
                }
            }
            if hits as f64 >= opts.accept_fraction * n as f64 {
                lines.push(DetectedLine { base: base_theta, direction: v.clone() });
                if lines.len() >= opts.max_lines {
                    break 'directions;
                }
            }
        }
    }
    lines
}
