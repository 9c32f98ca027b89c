use super::CliError;
use crate::flow::FlowDiagnostics;
use crate::sphere_grid::SphereGrid;
use std::fmt::Write as _;
use std::path::Path;

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn node_angles(grid: &SphereGrid, i: usize) -> (f64, f64) {
    if grid.n == 1 {
        (std::f64::consts::FRAC_PI_2, grid.phi[i])
    } else {
        (grid.theta[grid.row(i)], grid.phi[grid.col(i)])
    }
}

/// CSV with header `theta,phi,value`, one row per node in storage order,
/// 17 significant digits.
pub fn write_field_csv(path: &Path, grid: &SphereGrid, values: &[f64]) -> Result<(), CliError> {
    grid.check_field(values)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut s = String::from("theta,phi,value\n");
    for (i, v) in values.iter().enumerate() {
        let (t, p) = node_angles(grid, i);
        writeln!(s, "{t:.16e},{p:.16e},{v:.16e}").unwrap();
    }
    write_text(path, &s)
}

/// Reads the value column of a field CSV.
pub fn read_field_csv(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let bad = |message: String| CliError::Parse {
        path: path.into(),
        message,
    };
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("theta,phi,value") {
        return Err(bad("missing header theta,phi,value".into()));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| {
            let cols: Vec<&str> = l.split(',').collect();
            if cols.len() != 3 {
                return Err(bad(format!("line {}: expected 3 columns", k + 2)));
            }
            cols[2]
                .trim()
                .parse::<f64>()
                .map_err(|e| bad(format!("line {}: {e}", k + 2)))
        })
        .collect()
}

/// Triangle mesh over the structured grid; the polar caps are closed by fans
/// on the first and last rows. Circles (n = 1) are written as a closed polyline.
pub fn write_obj(path: &Path, grid: &SphereGrid, points: &[[f64; 3]]) -> Result<(), CliError> {
    grid.check_field(&vec![0.0; points.len()])
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut s = String::new();
    for p in points {
        writeln!(s, "v {:.16e} {:.16e} {:.16e}", p[0], p[1], p[2]).unwrap();
    }
    if grid.n == 1 {
        s.push('l');
        for i in 0..=grid.len() {
            write!(s, " {}", i % grid.len() + 1).unwrap();
        }
        s.push('\n');
        return write_text(path, &s);
    }
    let (nl, nf) = (grid.nlat, grid.nlon);
    let v = |j: usize, k: usize| grid.idx(j, k % nf) + 1;
    for k in 1..nf - 1 {
        writeln!(s, "f {} {} {}", v(0, 0), v(0, k + 1), v(0, k)).unwrap();
    }
    for j in 0..nl - 1 {
        for k in 0..nf {
            writeln!(s, "f {} {} {}", v(j, k), v(j, k + 1), v(j + 1, k + 1)).unwrap();
            writeln!(s, "f {} {} {}", v(j, k), v(j + 1, k + 1), v(j + 1, k)).unwrap();
        }
    }
    for k in 1..nf - 1 {
        writeln!(
            s,
            "f {} {} {}",
            v(nl - 1, 0),
            v(nl - 1, k),
            v(nl - 1, k + 1)
        )
        .unwrap();
    }
    write_text(path, &s)
}

/// One JSON object per accepted flow step.
pub fn write_diagnostics_jsonl(path: &Path, history: &[FlowDiagnostics]) -> Result<(), CliError> {
    let mut s = String::new();
    for d in history {
        s.push_str(&serde_json::to_string(d).expect("plain record"));
        s.push('\n');
    }
    write_text(path, &s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere_grid::build_grid;

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let grid = build_grid(2, &[8, 16], 2).unwrap();
        let u: Vec<f64> = (0..grid.len())
            .map(|i| (i as f64 * 0.37).sin() / 3.0 + 1e-300 * i as f64)
            .collect();
        let p = dir.path().join("u.csv");
        write_field_csv(&p, &grid, &u).unwrap();
        let back = read_field_csv(&p).unwrap();
        assert_eq!(back.len(), u.len());
        for (a, b) in u.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("theta,phi,value\n"));
    }

    #[test]
    fn obj_faces_close_the_sphere() {
        let dir = tempfile::tempdir().unwrap();
        let grid = build_grid(2, &[4, 8], 2).unwrap();
        let pts: Vec<[f64; 3]> = (0..grid.len()).map(|i| grid.xi(i)).collect();
        let p = dir.path().join("m.obj");
        write_obj(&p, &grid, &pts).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let faces = text.lines().filter(|l| l.starts_with("f ")).count();
        // Euler characteristic V − E + F = 2 for a closed triangulated sphere
        let v = grid.len() as i64;
        let f = faces as i64;
        assert_eq!(v - 3 * f / 2 + f, 2);
    }

    #[test]
    fn missing_file_names_path() {
        let e = read_field_csv(Path::new("/nonexistent/u.csv")).unwrap_err();
        assert!(e.to_string().contains("/nonexistent/u.csv"));
    }
}
