//! Text artifacts: CSV tables, legacy-VTK structured grids, run manifests.

use std::fmt::Write as _;
use std::path::Path;

use crate::cut::{classify, ElementKind};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::problem::{Evaluation, Problem};
use crate::spectrum::{dft, spl};

/// Scientific notation with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v:.16e}")
    }
}

pub fn csv_string<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.as_ref().iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    write_text(path, &csv_string(header, rows))
}

/// Reads back a numeric CSV with one header row.
pub fn read_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .map(|c| {
                    c.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Config(format!("{}: bad number {c:?}: {e}", path.display())))
                })
                .collect()
        })
        .collect()
}

/// `f_Hz, S, S_target, SPL_design_dB, SPL_empty_dB` for bins `0..=N/2`.
pub fn transmission_rows(problem: &Problem, eval: &Evaluation) -> Vec<[f64; 5]> {
    let n = eval.spectrum.len();
    let df = problem.config.time.df();
    let t = &problem.config.targets;
    (0..=n / 2)
        .map(|m| {
            let target = if problem.stop_bins.contains(&m) {
                t.stop
            } else if problem.pass_bins.contains(&m) {
                t.pass
            } else {
                f64::NAN
            };
            [
                m as f64 * df,
                eval.transmission[m],
                target,
                spl(eval.spectrum[m]),
                spl(problem.baseline.spectrum[m]),
            ]
        })
        .collect()
}

pub const TRANSMISSION_HEADER: &[&str] = &["f_Hz", "S", "S_target", "SPL_design_dB", "SPL_empty_dB"];

/// `f_Hz, magnitude, SPL_dB` of the raw input samples.
pub fn signal_spectrum_rows(p_in: &[f64], df: f64) -> Vec<[f64; 3]> {
    let spec = dft(p_in);
    (0..=p_in.len() / 2)
        .map(|m| [m as f64 * df, spec[m].norm(), spl(spec[m])])
        .collect()
}

/// Legacy VTK structured grid of `(nx+1) × (ny+1)` points with spacing `h`.
/// Point fields use column-major node order (`y` fastest), cell fields
/// likewise.
pub struct VtkGrid<'a> {
    pub title: &'a str,
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub origin: [f64; 2],
    pub point_fields: Vec<(&'a str, &'a [f64])>,
    pub cell_fields: Vec<(&'a str, Vec<f64>)>,
}

impl VtkGrid<'_> {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# vtk DataFile Version 3.0");
        let _ = writeln!(s, "{}", self.title);
        let _ = writeln!(s, "ASCII");
        let _ = writeln!(s, "DATASET STRUCTURED_POINTS");
        let _ = writeln!(s, "DIMENSIONS {} {} 1", self.nx + 1, self.ny + 1);
        let _ = writeln!(s, "ORIGIN {} {} 0", fmt_f64(self.origin[0]), fmt_f64(self.origin[1]));
        let _ = writeln!(s, "SPACING {} {} 1", fmt_f64(self.h), fmt_f64(self.h));
        if !self.point_fields.is_empty() {
            let _ = writeln!(s, "POINT_DATA {}", (self.nx + 1) * (self.ny + 1));
            for (name, values) in &self.point_fields {
                let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
                for j in 0..=self.ny {
                    for i in 0..=self.nx {
                        let _ = writeln!(s, "{}", fmt_f64(values[i * (self.ny + 1) + j]));
                    }
                }
            }
        }
        if !self.cell_fields.is_empty() {
            let _ = writeln!(s, "CELL_DATA {}", self.nx * self.ny);
            for (name, values) in &self.cell_fields {
                let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
                for j in 0..self.ny {
                    for i in 0..self.nx {
                        let _ = writeln!(s, "{}", fmt_f64(values[i * self.ny + j]));
                    }
                }
            }
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.render())
    }
}

/// Element classes as numbers: solid `1`, acoustic `0`, cut `0.5`.
pub fn classification(mesh: &Mesh, level_set: &[f64]) -> Vec<f64> {
    (0..mesh.n_elements())
        .map(|e| match classify(&mesh.corner_values(e, level_set)) {
            ElementKind::Solid => 1.0,
            ElementKind::Acoustic => 0.0,
            ElementKind::Cut => 0.5,
        })
        .collect()
}

/// Whole-duct snapshot of a level set and any extra nodal fields.
pub fn write_level_set_vtk(path: &Path, mesh: &Mesh, level_set: &[f64], extra: &[(&str, &[f64])]) -> Result<()> {
    let mut point_fields = vec![("level_set", level_set)];
    point_fields.extend_from_slice(extra);
    VtkGrid {
        title: "level set",
        nx: mesh.nx,
        ny: mesh.ny,
        h: mesh.h,
        origin: [0.0, 0.0],
        point_fields,
        cell_fields: vec![("classification", classification(mesh, level_set))],
    }
    .write(path)
}

/// `key = value` lines.
pub fn manifest(entries: &[(&str, String)]) -> String {
    entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}
