//! Deterministic text output: fixed float formatting, CSV and SVG emitters.

use crate::spectrum::SpectrumReport;

/// C-style `%.12e` formatting with two-digit exponent, so identical inputs
/// produce byte-identical output everywhere.
pub fn fmt_e(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x }; // normalize -0.0
    let s = format!("{:.12e}", x);
    let (mant, exp) = s.split_once('e').expect("exponent");
    let e: i32 = exp.parse().expect("exponent digits");
    format!("{}e{}{:02}", mant, if e < 0 { "-" } else { "+" }, e.abs())
}

/// CSV for a spectrum scan: one row per sample, columns theta_1..theta_d,
/// sigma_min, flagged. '.' decimal, ',' separator, samples in grid order.
pub fn spectrum_csv(report: &SpectrumReport) -> String {
    let d = report.dimension;
    let mut out = String::new();
    for i in 1..=d {
        out.push_str(&format!("theta{i},"));
    }
    out.push_str("sigma_min,flagged\n");
    let mut flagged = vec![false; report.sigma_min.len()];
    for f in &report.flagged {
        flagged[f.linear_index] = true;
    }
    for (idx, sigma) in report.sigma_min.iter().enumerate() {
        let thetas = report.thetas_of(idx);
        for t in &thetas {
            out.push_str(&fmt_e(*t));
            out.push(',');
        }
        out.push_str(&fmt_e(*sigma));
        out.push(',');
        out.push_str(if flagged[idx] { "1" } else { "0" });
        out.push('\n');
    }
    out
}

/// Self-contained SVG heatmap of log10(sigma_min), for 2D scans or a fixed
/// 2D slice of a 3D scan. Cells are shaded from dark (deep minimum) to
/// light; flagged samples get a highlight dot; a legend strip is included.
pub fn spectrum_svg(report: &SpectrumReport, fixed_axis: Option<(usize, f64)>) -> Result<String, String> {
    let d = report.dimension;
    let (ax, ay, fixed_index) = match (d, fixed_axis) {
        (2, None) => (0usize, 1usize, None),
        (3, Some((axis, theta))) => {
            if axis >= 3 {
                return Err(format!("fix-axis index {axis} out of range"));
            }
            let res = report.resolution[axis];
            let step = 2.0 * std::f64::consts::PI / res as f64;
            let j = ((theta / step).round() as i64).rem_euclid(res as i64) as usize;
            let (ax, ay) = match axis {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            (ax, ay, Some((axis, j)))
        }
        (2, Some(_)) => return Err("fix-axis applies to 3D scans only".into()),
        _ => return Err("SVG output needs a 2D scan or a 3D scan with --fix-axis".into()),
    };
    let nx = report.resolution[ax];
    let ny = report.resolution[ay];
    let cell = 8usize;
    let legend_h = 28usize;
    let w = nx * cell;
    let h = ny * cell + legend_h;
    let lo_clip = -16.0f64;
    let hi_clip = 0.0f64;
    let mut flagged = vec![false; report.sigma_min.len()];
    for f in &report.flagged {
        flagged[f.linear_index] = true;
    }
    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    ));
    s.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"#ffffff\"/>\n"
    ));
    for jy in 0..ny {
        for jx in 0..nx {
            let mut index = vec![0usize; d];
            index[ax] = jx;
            index[ay] = jy;
            if let Some((axis, j)) = fixed_index {
                index[axis] = j;
            }
            let li = report.linear_index(&index);
            let v = report.sigma_min[li].max(1e-300).log10().clamp(lo_clip, hi_clip);
            let t = (v - lo_clip) / (hi_clip - lo_clip);
            let (r, g, b) = shade(t);
            // y axis points up
            let px = jx * cell;
            let py = (ny - 1 - jy) * cell;
            s.push_str(&format!(
                "<rect x=\"{px}\" y=\"{py}\" width=\"{cell}\" height=\"{cell}\" fill=\"rgb({r},{g},{b})\"/>\n"
            ));
            if flagged[li] {
                s.push_str(&format!(
                    "<circle cx=\"{}\" cy=\"{}\" r=\"2\" fill=\"#ff3030\"/>\n",
                    px + cell / 2,
                    py + cell / 2
                ));
            }
        }
    }
    // legend: gradient strip with endpoint labels
    let ly = ny * cell + 6;
    let steps = 64;
    let lw = w.saturating_sub(120).max(steps);
    for i in 0..steps {
        let t = i as f64 / (steps - 1) as f64;
        let (r, g, b) = shade(t);
        let x0 = i * lw / steps;
        let x1 = (i + 1) * lw / steps;
        s.push_str(&format!(
            "<rect x=\"{x0}\" y=\"{ly}\" width=\"{}\" height=\"10\" fill=\"rgb({r},{g},{b})\"/>\n",
            x1 - x0
        ));
    }
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"10\" fill=\"#000000\">log10(sigma_min): {} .. {}</text>\n",
        lw + 6,
        ly + 9,
        lo_clip,
        hi_clip
    ));
    s.push_str("</svg>\n");
    Ok(s)
}

fn shade(t: f64) -> (u8, u8, u8) {
    // dark blue (small sigma) to pale yellow (large sigma)
    let t = t.clamp(0.0, 1.0);
    let r = (20.0 + 235.0 * t) as u8;
    let g = (24.0 + 220.0 * t) as u8;
    let b = (90.0 + 80.0 * (1.0 - t)) as u8;
    (r, g, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt_e_matches_c_printf_style() {
        assert_eq!(fmt_e(0.0), "0.000000000000e+00");
        assert_eq!(fmt_e(-0.0), "0.000000000000e+00");
        assert_eq!(fmt_e(1.0), "1.000000000000e+00");
        assert_eq!(fmt_e(-2.5e-13), "-2.500000000000e-13");
        assert_eq!(fmt_e(6.02214076e23), "6.022140760000e+23");
    }
}
