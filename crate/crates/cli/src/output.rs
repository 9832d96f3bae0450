//! CSV and SVG artifacts.

use std::fs;
use std::io::Write;
use std::path::Path;

use geodisc::control::Obstacle;
use geodisc::hamiltonian::Trajectory;

/// Formats like C's `%.17g`.
pub fn format_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    const P: i32 = 17;
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..P).contains(&exp) {
        let fixed = format!("{:.*}", (P - 1 - exp) as usize, x);
        trim_zeros(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mantissa), sign, exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn trajectory_header(n: usize) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    for prefix in ["q", "qdot", "p0_", "p1_", "u"] {
        cols.extend((0..n).map(|i| format!("{prefix}{i}")));
    }
    cols.push("H".into());
    cols.push("clearance".into());
    cols
}

pub fn trajectory_csv(traj: &Trajectory, obstacle: Option<&Obstacle>) -> Result<Vec<u8>, String> {
    let n = traj.states[0].n();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(trajectory_header(n)).map_err(|e| e.to_string())?;
    for (k, s) in traj.states.iter().enumerate() {
        let mut row = vec![format_g17(traj.time(k))];
        for v in [&s.q, &s.qdot, &s.p0, &s.p1, &traj.controls[k]] {
            row.extend(v.iter().map(|&x| format_g17(x)));
        }
        row.push(format_g17(traj.hamiltonian[k]));
        row.push(obstacle.map(|o| format_g17(o.clearance(&s.q))).unwrap_or_default());
        w.write_record(&row).map_err(|e| e.to_string())?;
    }
    w.into_inner().map_err(|e| e.to_string())
}

/// Writes via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path.file_name().ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidInput, "output path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

/// Reads the `q0` and `q1` columns of a trajectory CSV.
pub fn read_xy(path: &Path) -> Result<Vec<(f64, f64)>, String> {
    let mut r = csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let headers = r.headers().map_err(|e| e.to_string())?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name).ok_or_else(|| format!("missing column '{name}'"));
    let (ix, iy) = (col("q0")?, col("q1")?);
    let mut pts = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let field = |i: usize| -> Result<f64, String> {
            let raw = rec.get(i).ok_or_else(|| format!("row {}: too few fields", line + 2))?;
            let v: f64 = raw.trim().parse().map_err(|_| format!("row {}: '{raw}' is not a number", line + 2))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("row {}: non-finite value", line + 2))
            }
        };
        pts.push((field(ix)?, field(iy)?));
    }
    if pts.is_empty() {
        return Err("no data rows".into());
    }
    Ok(pts)
}

/// SVG of the xy path, with the obstacle disc when given.
pub fn xy_svg(points: &[(f64, f64)], circle: Option<(f64, [f64; 2])>) -> String {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    let mut grow = |x: f64, y: f64| {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    };
    for &(x, y) in points {
        grow(x, y);
    }
    if let Some((r, [cx, cy])) = circle {
        grow(cx - r, cy - r);
        grow(cx + r, cy + r);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-9);
    let pad = 0.05 * span;
    let (w, h) = (x1 - x0 + 2.0 * pad, y1 - y0 + 2.0 * pad);
    let stroke = span / 300.0;
    // Flip y so that up is up.
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\" width=\"600\" height=\"{}\">\n<g transform=\"scale(1,-1)\">\n",
        format_g17(x0 - pad),
        format_g17(-(y1 + pad)),
        format_g17(w.max(1e-9)),
        format_g17(h.max(1e-9)),
        (600.0 * h / w.max(1e-9)).round().clamp(1.0, 6000.0)
    );
    if let Some((r, [cx, cy])) = circle {
        svg.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"#d8d8d8\" stroke=\"#555555\" stroke-width=\"{}\"/>\n",
            format_g17(cx),
            format_g17(cy),
            format_g17(r),
            format_g17(stroke)
        ));
    }
    let pts: Vec<String> = points.iter().map(|&(x, y)| format!("{},{}", format_g17(x), format_g17(y))).collect();
    svg.push_str(&format!(
        "<polyline fill=\"none\" stroke=\"#1f5fbf\" stroke-width=\"{}\" points=\"{}\"/>\n",
        format_g17(stroke),
        pts.join(" ")
    ));
    svg.push_str("</g>\n</svg>\n");
    svg
}
