//! Command-line front end: gallery export, symbol evaluation and
//! determinants, spectrum scans with CSV/SVG output, flex construction and
//! verification, and basis building. Outputs are deterministic: fixed float
//! format, sorted ordering, and scan results independent of thread count.

use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::Complex;

use rumspec::error::{Result, RumspecError};
use rumspec::framework::{generate_patch, verify_flex, PatchBox, VelocityField};
use rumspec::gallery::{self, GalleryId};
use rumspec::json;
use rumspec::laurent::C64;
use rumspec::output::{fmt_e, spectrum_csv, spectrum_svg};
use rumspec::spectrum::{
    detect_linear_structure, refine_root, scan_geometric_slice, scan_rum_spectrum, LineOptions,
    RefineOptions, ScanOptions, SliceSpec, TorusGrid,
};
use rumspec::{basis, flex, symbol};

#[derive(Parser)]
#[command(name = "rumspec", version, about = "Crystal framework flex spectra and bases")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Built-in frameworks and their documented flexes.
    Gallery {
        #[command(subcommand)]
        cmd: GalleryCmd,
    },
    /// Patch realization.
    Patch {
        #[command(subcommand)]
        cmd: PatchCmd,
    },
    /// Transfer-function assembly, evaluation and determinants.
    Symbol {
        #[command(subcommand)]
        cmd: SymbolCmd,
    },
    /// Rank-degeneracy scans over torus grids and moduli slices.
    Spectrum {
        #[command(subcommand)]
        cmd: SpectrumCmd,
    },
    /// Flex construction and verification.
    Flex {
        #[command(subcommand)]
        cmd: FlexCmd,
    },
    /// Truncated basis machinery.
    Basis {
        #[command(subcommand)]
        cmd: BasisCmd,
    },
}

#[derive(Args)]
struct FrameworkArg {
    /// Gallery name (grid, honeycomb, kagome, kagome3d, octahedron, kite,
    /// bipyramid) or path to a framework JSON file.
    #[arg(long)]
    framework: String,
}

impl FrameworkArg {
    fn load(&self) -> Result<rumspec::framework::CrystalFramework> {
        if let Ok(id) = GalleryId::parse(&self.framework) {
            return Ok(gallery::make(id));
        }
        let path = std::path::Path::new(&self.framework);
        if path.exists() {
            return json::framework_from_json(&std::fs::read_to_string(path)?);
        }
        Err(RumspecError::UnknownFramework(self.framework.clone()))
    }
}

#[derive(Subcommand)]
enum GalleryCmd {
    /// List the built-in frameworks and their flex catalogs.
    List,
    /// Print a framework as canonical JSON.
    Export {
        name: String,
        #[arg(long)]
        out: Option<String>,
    },
    /// Emit a documented flex as a field JSON on a box of cells.
    Flex {
        name: String,
        flexname: String,
        /// Flex family index (comma separated when two-dimensional).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        index: Vec<i64>,
        #[arg(long, default_value_t = 4)]
        radius: i64,
        #[arg(long)]
        out: Option<String>,
    },
}

#[derive(Subcommand)]
enum PatchCmd {
    /// Realize a patch and print it as JSON.
    Export {
        #[command(flatten)]
        fw: FrameworkArg,
        /// Cell box as lo:hi per axis, comma separated.
        #[arg(long = "box")]
        cell_box: Option<String>,
        #[arg(long, default_value_t = 2)]
        radius: i64,
        #[arg(long)]
        out: Option<String>,
    },
}

#[derive(Subcommand)]
enum SymbolCmd {
    /// Evaluate the transfer function at a point and print the dense matrix.
    Eval {
        #[command(flatten)]
        fw: FrameworkArg,
        /// Torus phases theta_1,...,theta_d (radians).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        theta: Option<Vec<f64>>,
        /// Explicit complex point re:im,re:im,...
        #[arg(long)]
        z: Option<String>,
        /// Substitute z -> z^{-1} before evaluating.
        #[arg(long)]
        inverse: bool,
    },
    /// Laurent-polynomial determinant of a square (sub)matrix.
    Det {
        #[command(flatten)]
        fw: FrameworkArg,
        /// Row labels, e.g. e4,e5,e6 (defaults to all rows).
        #[arg(long, value_delimiter = ',')]
        rows: Option<Vec<String>>,
        /// Column labels, e.g. v1z,v2x,v2y (defaults to all columns).
        #[arg(long, value_delimiter = ',')]
        cols: Option<Vec<String>>,
        /// Substitute z -> z^{-1} before taking the determinant.
        #[arg(long)]
        inverse: bool,
    },
    /// Export the transfer function as JSON.
    Export {
        #[command(flatten)]
        fw: FrameworkArg,
        #[arg(long)]
        out: Option<String>,
    },
}

#[derive(Subcommand)]
enum SpectrumCmd {
    /// Scan the RUM spectrum (or a moduli slice) for rank degeneracy.
    Scan {
        #[command(flatten)]
        fw: FrameworkArg,
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Moduli r1,r2,... of a slice torus (default: unit moduli).
        #[arg(long, value_delimiter = ',')]
        slice: Option<Vec<f64>>,
        /// CSV output path (stdout if omitted).
        #[arg(long)]
        out: Option<String>,
        /// SVG heatmap path (2D scans, or 3D with --fix-axis).
        #[arg(long)]
        svg: Option<String>,
        /// Fix one axis of a 3D scan for the SVG: i=theta.
        #[arg(long)]
        fix_axis: Option<String>,
        /// Worker threads (default: RUMSPEC_THREADS or all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Detect and print lines in the flagged set.
        #[arg(long)]
        lines: bool,
    },
    /// Locally refine a rank-degeneracy point from a seed.
    Refine {
        #[command(flatten)]
        fw: FrameworkArg,
        /// Seed point re:im,re:im,... or use --theta/--moduli.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        theta: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        moduli: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Keep moduli fixed (search on the slice torus only).
        #[arg(long)]
        lock_moduli: bool,
    },
}

#[derive(Subcommand)]
enum FlexCmd {
    /// Build a factor-periodic flex from a kernel vector of the transfer
    /// function at omega and emit it as field JSON.
    Make {
        #[command(flatten)]
        fw: FrameworkArg,
        /// Multifactor omega as re:im per axis, comma separated.
        #[arg(long)]
        omega: String,
        #[arg(long, default_value_t = 0)]
        kernel_index: usize,
        #[arg(long, default_value_t = 4)]
        radius: i64,
        #[arg(long)]
        out: Option<String>,
    },
    /// Verify the flex condition for a field JSON on a patch.
    Verify {
        #[command(flatten)]
        fw: FrameworkArg,
        #[arg(long)]
        field: String,
        #[arg(long, default_value_t = 4)]
        radius: i64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Report support rank and band-limitedness of a field JSON.
    Band {
        #[command(flatten)]
        fw: FrameworkArg,
        #[arg(long)]
        field: String,
    },
}

#[derive(Subcommand)]
enum BasisCmd {
    /// Build an inverse-limit truncated basis over a tower of boxes.
    Build {
        #[command(flatten)]
        fw: FrameworkArg,
        #[arg(long, value_delimiter = ',')]
        radii: Vec<i64>,
        #[arg(long, default_value_t = 2)]
        margin: i64,
        #[arg(long)]
        out: Option<String>,
    },
    /// Expand a field JSON in a documented spanning set; emits CSV.
    Expand {
        #[command(flatten)]
        fw: FrameworkArg,
        #[arg(long)]
        field: String,
        /// Spanning set: grid, kagome, honeycomb or octahedron.
        #[arg(long)]
        set: String,
        #[arg(long, default_value_t = 4)]
        radius: i64,
        #[arg(long)]
        out: Option<String>,
    },
}

fn parse_complex_list(s: &str, dim: usize) -> Result<Vec<C64>> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != dim {
        return Err(RumspecError::InvalidArgument(format!(
            "expected {dim} components, got {}",
            parts.len()
        )));
    }
    parts
        .iter()
        .map(|p| {
            let (re, im) = p.split_once(':').unwrap_or((p.trim(), "0"));
            let re: f64 = re
                .trim()
                .parse()
                .map_err(|_| RumspecError::InvalidArgument(format!("bad number {re:?}")))?;
            let im: f64 = im
                .trim()
                .parse()
                .map_err(|_| RumspecError::InvalidArgument(format!("bad number {im:?}")))?;
            Ok(Complex::new(re, im))
        })
        .collect()
}

fn emit(out: &Option<String>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn print_matrix(m: &nalgebra::DMatrix<C64>, row_labels: &[String], col_labels: &[String]) {
    println!("# columns: {}", col_labels.join(","));
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|c| format!("{}{}{}i", fmt_e(m[(r, c)].re), if m[(r, c)].im < 0.0 { "" } else { "+" }, fmt_e(m[(r, c)].im)))
            .collect();
        println!("{} {}", row_labels[r], row.join(" "));
    }
}

fn env_threads() -> Option<usize> {
    std::env::var("RUMSPEC_THREADS").ok().and_then(|v| v.parse().ok())
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Gallery { cmd } => match cmd {
            GalleryCmd::List => {
                for id in GalleryId::all() {
                    let fw = gallery::make(id);
                    println!(
                        "{}: dimension {}, {} joints, {} edges",
                        id.name(),
                        fw.dimension(),
                        fw.joint_count(),
                        fw.edge_count()
                    );
                    for f in gallery::flex_catalog(id) {
                        println!("  flex {} (indices: {}): {}", f.name, f.index_arity, f.description);
                    }
                }
            }
            GalleryCmd::Export { name, out } => {
                let id = GalleryId::parse(&name)?;
                emit(&out, &json::framework_to_json(&gallery::make(id)))?;
            }
            GalleryCmd::Flex { name, flexname, index, radius, out } => {
                let id = GalleryId::parse(&name)?;
                let fw = gallery::make(id);
                let cells = PatchBox::centered(fw.dimension(), radius);
                let field = gallery::named_flex(id, &flexname, &index, &cells)?;
                let explicit = match field {
                    VelocityField::Explicit(f) => f,
                    rule => rule.realize(&generate_patch(&fw, &cells))?,
                };
                emit(&out, &json::field_to_json(&explicit))?;
            }
        },
        Command::Patch { cmd } => match cmd {
            PatchCmd::Export { fw, cell_box, radius, out } => {
                let framework = fw.load()?;
                let cells = match cell_box {
                    Some(spec) => json::parse_box(&spec, framework.dimension())?,
                    None => PatchBox::centered(framework.dimension(), radius),
                };
                emit(&out, &json::patch_to_json(&generate_patch(&framework, &cells)))?;
            }
        },
        Command::Symbol { cmd } => match cmd {
            SymbolCmd::Eval { fw, theta, z, inverse } => {
                let framework = fw.load()?;
                let mut psi = symbol::assemble_transfer_function(&framework);
                if inverse {
                    psi = psi.subst_inverse();
                }
                let point: Vec<C64> = match (theta, z) {
                    (Some(t), None) => t.iter().map(|&x| Complex::from_polar(1.0, x)).collect(),
                    (None, Some(s)) => parse_complex_list(&s, framework.dimension())?,
                    _ => {
                        return Err(RumspecError::InvalidArgument(
                            "give exactly one of --theta or --z".into(),
                        ))
                    }
                };
                let e = symbol::evaluate(&psi, &point)?;
                print_matrix(&e.matrix, &psi.row_labels, &psi.col_labels);
            }
            SymbolCmd::Det { fw, rows, cols, inverse } => {
                let framework = fw.load()?;
                let mut psi = symbol::assemble_transfer_function(&framework);
                if inverse {
                    psi = psi.subst_inverse();
                }
                let row_idx: Vec<usize> = match rows {
                    Some(labels) => labels
                        .iter()
                        .map(|l| psi.row_index(l))
                        .collect::<Result<_>>()?,
                    None => (0..psi.nrows).collect(),
                };
                let col_idx: Vec<usize> = match cols {
                    Some(labels) => labels
                        .iter()
                        .map(|l| psi.col_index(l))
                        .collect::<Result<_>>()?,
                    None => (0..psi.ncols).collect(),
                };
                let det = symbol::symbolic_determinant_of(&psi, &row_idx, &col_idx)?;
                println!("{det}");
            }
            SymbolCmd::Export { fw, out } => {
                let framework = fw.load()?;
                let psi = symbol::assemble_transfer_function(&framework);
                emit(&out, &json::laurent_matrix_to_json(&psi))?;
            }
        },
        Command::Spectrum { cmd } => match cmd {
            SpectrumCmd::Scan {
                fw,
                resolution,
                tol,
                slice,
                out,
                svg,
                fix_axis,
                threads,
                lines,
            } => {
                let framework = fw.load()?;
                let d = framework.dimension();
                let grid = match resolution {
                    Some(r) => TorusGrid::uniform(d, r),
                    None => TorusGrid::default_for_dim(d),
                };
                let opts = ScanOptions { tol, rank_tol: 1e-9, threads: threads.or_else(env_threads) };
                let mut report = match slice {
                    Some(moduli) => {
                        scan_geometric_slice(&framework, &SliceSpec::new(moduli)?, &grid, &opts)?
                    }
                    None => scan_rum_spectrum(&framework, &grid, &opts),
                };
                if lines {
                    report.lines =
                        detect_linear_structure(&framework, &report, &LineOptions::default());
                    for l in &report.lines {
                        let base: Vec<String> = l.base.iter().map(|&b| fmt_e(b)).collect();
                        let dir: Vec<String> = l.direction.iter().map(|v| v.to_string()).collect();
                        println!("line: base=({}) direction=({})", base.join(","), dir.join(","));
                    }
                }
                for f in &report.flagged {
                    let th: Vec<String> = f.thetas.iter().map(|&t| fmt_e(t)).collect();
                    println!(
                        "flagged: theta=({}) sigma_min={} kernel_dim={}",
                        th.join(","),
                        fmt_e(f.sigma_min),
                        f.kernel_dim
                    );
                }
                let csv = spectrum_csv(&report);
                match &out {
                    Some(path) => std::fs::write(path, &csv)?,
                    None => print!("{csv}"),
                }
                if let Some(path) = &svg {
                    let fixed = match &fix_axis {
                        Some(s) => {
                            let (i, t) = s.split_once('=').ok_or_else(|| {
                                RumspecError::InvalidArgument("fix-axis must be i=theta".into())
                            })?;
                            let axis: usize = i.trim().parse().map_err(|_| {
                                RumspecError::InvalidArgument(format!("bad axis {i:?}"))
                            })?;
                            let theta: f64 = t.trim().parse().map_err(|_| {
                                RumspecError::InvalidArgument(format!("bad angle {t:?}"))
                            })?;
                            Some((axis, theta))
                        }
                        None => None,
                    };
                    let svg_text = spectrum_svg(&report, fixed)
                        .map_err(RumspecError::InvalidArgument)?;
                    std::fs::write(path, svg_text)?;
                }
            }
            SpectrumCmd::Refine { fw, theta, moduli, tol, lock_moduli } => {
                let framework = fw.load()?;
                let d = framework.dimension();
                if theta.len() != d {
                    return Err(RumspecError::DimensionMismatch { expected: d, got: theta.len() });
                }
                let moduli = moduli.unwrap_or_else(|| vec![1.0; d]);
                let seed: Vec<C64> = moduli
                    .iter()
                    .zip(&theta)
                    .map(|(&r, &t)| Complex::from_polar(r, t))
                    .collect();
                let outcome = refine_root(
                    &framework,
                    &seed,
                    &RefineOptions { tol, lock_moduli, ..Default::default() },
                )?;
                println!("converged: {}", outcome.converged);
                println!("sigma_min: {}", fmt_e(outcome.sigma_min));
                for (i, w) in outcome.omega.iter().enumerate() {
                    println!(
                        "omega_{}: modulus={} phase={}",
                        i + 1,
                        fmt_e(w.norm()),
                        fmt_e(w.arg().rem_euclid(2.0 * std::f64::consts::PI))
                    );
                }
                if !outcome.converged {
                    return Err(RumspecError::InvalidArgument(
                        "refinement did not reach the tolerance".into(),
                    ));
                }
            }
        },
        Command::Flex { cmd } => match cmd {
            FlexCmd::Make { fw, omega, kernel_index, radius, out } => {
                let framework = fw.load()?;
                let d = framework.dimension();
                let omega = parse_complex_list(&omega, d)?;
                let psi = symbol::assemble_transfer_function(&framework);
                let z: Vec<C64> = omega.iter().map(|w| w.inv()).collect();
                let e = symbol::evaluate(&psi, &z)?;
                let kernel = symbol::kernel_basis(&e, 1e-7);
                if kernel_index >= kernel.len() {
                    return Err(RumspecError::InvalidArgument(format!(
                        "kernel at this point has dimension {}, index {kernel_index} out of range",
                        kernel.len()
                    )));
                }
                let base: Vec<C64> = kernel[kernel_index].iter().copied().collect();
                let cells = PatchBox::centered(d, radius);
                let field = flex::factor_periodic_flex(&framework, &omega, &base, &cells)?;
                emit(&out, &json::field_to_json(&field))?;
            }
            FlexCmd::Verify { fw, field, radius, tol } => {
                let framework = fw.load()?;
                let text = std::fs::read_to_string(&field)?;
                let f = json::field_from_json(&text, framework.dimension())?;
                let cells = PatchBox::centered(framework.dimension(), radius);
                let patch = generate_patch(&framework, &cells);
                let rep = verify_flex(&patch, &VelocityField::Explicit(f), tol)?;
                println!("max_residual: {}", fmt_e(rep.max_residual));
                println!("bars: {}", rep.residuals.len());
                println!("is_flex: {}", rep.is_flex());
                if !rep.is_flex() {
                    return Err(RumspecError::InvalidArgument(format!(
                        "field is not a flex at tolerance {tol:e}"
                    )));
                }
            }
            FlexCmd::Band { fw, field } => {
                let framework = fw.load()?;
                let text = std::fs::read_to_string(&field)?;
                let f = json::field_from_json(&text, framework.dimension())?;
                let report = flex::band_report(&f, framework.dimension());
                println!("support_rank: {}", report.support_rank);
                println!("band_limited: {}", report.band_limited);
                for g in &report.generators {
                    let s: Vec<String> = g.iter().map(|x| x.to_string()).collect();
                    println!("generator: ({})", s.join(","));
                }
            }
        },
        Command::Basis { cmd } => match cmd {
            BasisCmd::Build { fw, radii, margin, out } => {
                let framework = fw.load()?;
                let tower = basis::RestrictionTower::centered(framework.dimension(), &radii, margin)?;
                let tb = basis::inverse_limit_basis(&framework, &tower, 1e-9)?;
                emit(&out, &json::truncated_basis_to_json(&tb))?;
            }
            BasisCmd::Expand { fw, field, set, radius, out } => {
                let framework = fw.load()?;
                let text = std::fs::read_to_string(&field)?;
                let target = json::field_from_json(&text, framework.dimension())?;
                let id = GalleryId::parse(&set)?;
                let cells = PatchBox::centered(framework.dimension(), radius);
                let elements = gallery::basis_enumeration(id, &cells)?;
                let rec = basis::reconstruct_coefficients(
                    &cells,
                    &target,
                    &elements,
                    &basis::ReconstructOptions::default(),
                )?;
                let mut csv = String::from("element,coefficient_re,coefficient_im\n");
                for ((label, _), c) in elements.iter().zip(&rec.coefficients) {
                    csv.push_str(&format!("{label},{},{}\n", fmt_e(c.re), fmt_e(c.im)));
                }
                csv.push_str(&format!("# residual_sup,{},\n", fmt_e(rec.residual_sup)));
                emit(&out, &csv)?;
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
