//! Gridded cavity-mode magnetic induction and its CSV format.
//!
//! ```text
//! # fieldmap v1 nx=<int> ny=<int> nz=<int>
//! # any further comment lines
//! x,y,z,Bx,By,Bz
//! ```
//!
//! Rows are SI values with `x` varying fastest, then `y`, then `z`. Floats
//! are written in shortest round-trip form, so a save/load cycle is exact.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Field values on a rectilinear grid of points.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldMap {
    xs: Vec<f64>,
    ys: Vec<f64>,
    zs: Vec<f64>,
    field: Vec<Vector3<f64>>,
}

fn check_axis(name: &str, axis: &[f64], errors: &mut Vec<String>) {
    if axis.is_empty() {
        errors.push(format!("{name} axis is empty"));
    }
    if axis.iter().any(|v| !v.is_finite()) {
        errors.push(format!("{name} axis has non-finite coordinates"));
    }
    if axis.windows(2).any(|w| w[1] <= w[0]) {
        errors.push(format!("{name} axis is not strictly increasing"));
    }
}

/// Width of the cell owned by each point: half-way to each neighbour, with
/// the end cells mirrored. A lone point owns a 1 m slab.
fn cell_widths(axis: &[f64]) -> Vec<f64> {
    let n = axis.len();
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| {
            let lo = if i == 0 { axis[1] - axis[0] } else { axis[i] - axis[i - 1] };
            let hi = if i == n - 1 { axis[n - 1] - axis[n - 2] } else { axis[i + 1] - axis[i] };
            0.5 * (lo + hi)
        })
        .collect()
}

impl FieldMap {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, zs: Vec<f64>, field: Vec<Vector3<f64>>) -> Result<Self> {
        let mut errors = Vec::new();
        check_axis("x", &xs, &mut errors);
        check_axis("y", &ys, &mut errors);
        check_axis("z", &zs, &mut errors);
        let n = xs.len() * ys.len() * zs.len();
        if field.len() != n {
            errors.push(format!("expected {n} field vectors, got {}", field.len()));
        }
        for (i, b) in field.iter().enumerate() {
            if !b.iter().all(|v| v.is_finite()) {
                errors.push(format!("row {}: non-finite field value", i + 1));
            }
        }
        if errors.is_empty() && field.iter().all(|b| b.norm_squared() == 0.0) {
            errors.push("field is identically zero".to_string());
        }
        if errors.is_empty() {
            Ok(Self { xs, ys, zs, field })
        } else {
            Err(Error::Validation(errors))
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.xs.len(), self.ys.len(), self.zs.len()]
    }

    pub fn len(&self) -> usize {
        self.field.len()
    }

    pub fn is_empty(&self) -> bool {
        self.field.is_empty()
    }

    pub fn axes(&self) -> [&[f64]; 3] {
        [&self.xs, &self.ys, &self.zs]
    }

    pub fn field(&self) -> &[Vector3<f64>] {
        &self.field
    }

    /// Flat index of grid point `(i, j, k)`.
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.xs.len() * (j + self.ys.len() * k)
    }

    pub fn unflatten(&self, idx: usize) -> [usize; 3] {
        let nx = self.xs.len();
        let ny = self.ys.len();
        [idx % nx, (idx / nx) % ny, idx / (nx * ny)]
    }

    pub fn position(&self, idx: usize) -> Vector3<f64> {
        let [i, j, k] = self.unflatten(idx);
        Vector3::new(self.xs[i], self.ys[j], self.zs[k])
    }

    /// Per-point cell volumes, m³, in flat order.
    pub fn cell_volumes(&self) -> Vec<f64> {
        let wx = cell_widths(&self.xs);
        let wy = cell_widths(&self.ys);
        let wz = cell_widths(&self.zs);
        (0..self.len())
            .map(|idx| {
                let [i, j, k] = self.unflatten(idx);
                wx[i] * wy[j] * wz[k]
            })
            .collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            field: self.field.iter().map(|b| b * factor).collect(),
            ..self.clone()
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W, comments: &[String]) -> Result<()> {
        let [nx, ny, nz] = self.dims();
        writeln!(out, "# fieldmap v1 nx={nx} ny={ny} nz={nz}")?;
        for c in comments {
            writeln!(out, "# {c}")?;
        }
        for (idx, b) in self.field.iter().enumerate() {
            let p = self.position(idx);
            writeln!(out, "{:e},{:e},{:e},{:e},{:e},{:e}", p.x, p.y, p.z, b.x, b.y, b.z)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path, comments: &[String]) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::from(e).with_context(path.display().to_string()))?;
        self.write_csv(BufWriter::new(file), comments)
    }
}

fn parse_header(line: &str) -> Option<[usize; 3]> {
    let rest = line.strip_prefix('#')?.trim();
    let mut words = rest.split_whitespace();
    if words.next()? != "fieldmap" || words.next()? != "v1" {
        return None;
    }
    let mut dims = [None; 3];
    for w in words {
        let (key, value) = w.split_once('=')?;
        let slot = match key {
            "nx" => 0,
            "ny" => 1,
            "nz" => 2,
            _ => return None,
        };
        dims[slot] = Some(value.parse::<usize>().ok()?);
    }
    Some([dims[0]?, dims[1]?, dims[2]?])
}

pub fn read_field_map<R: BufRead>(reader: R) -> Result<FieldMap> {
    let mut lines = reader.lines().enumerate();
    let (dims, mut line_no) = loop {
        match lines.next() {
            None => return Err(Error::Parse { line: 1, message: "missing fieldmap header".into() }),
            Some((i, line)) => {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let dims = parse_header(line.trim()).ok_or_else(|| Error::Parse {
                    line: i + 1,
                    message: "expected '# fieldmap v1 nx=<int> ny=<int> nz=<int>'".into(),
                })?;
                break (dims, i + 1);
            }
        }
    };
    let [nx, ny, nz] = dims;
    if nx == 0 || ny == 0 || nz == 0 {
        return Err(Error::Parse { line: line_no, message: format!("grid dimensions must be >= 1, got {nx}x{ny}x{nz}") });
    }
    let total = nx * ny * nz;
    let mut xs = vec![f64::NAN; nx];
    let mut ys = vec![f64::NAN; ny];
    let mut zs = vec![f64::NAN; nz];
    let mut field = Vec::with_capacity(total);
    let mut bad_rows = Vec::new();

    for (i, line) in lines {
        let line = line?;
        line_no = i + 1;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let row = field.len();
        if row == total {
            return Err(Error::Parse { line: line_no, message: format!("more than {total} data rows") });
        }
        let values: Vec<f64> = text
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse { line: line_no, message: format!("bad number: {e}") })?;
        if values.len() != 6 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 6 columns x,y,z,Bx,By,Bz, got {}", values.len()),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            bad_rows.push(format!("row {} (line {line_no}): non-finite value", row + 1));
        }
        let (ix, iy, iz) = (row % nx, (row / nx) % ny, row / (nx * ny));
        for (axis, idx, v, name) in [(&mut xs, ix, values[0], "x"), (&mut ys, iy, values[1], "y"), (&mut zs, iz, values[2], "z")] {
            if axis[idx].is_nan() {
                axis[idx] = v;
            } else if axis[idx].to_bits() != v.to_bits() && v.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("{name} = {v} breaks the rectilinear grid (expected {})", axis[idx]),
                });
            }
        }
        field.push(Vector3::new(values[3], values[4], values[5]));
    }
    if !bad_rows.is_empty() {
        return Err(Error::Validation(bad_rows));
    }
    if field.len() != total {
        return Err(Error::Parse {
            line: line_no,
            message: format!("expected {total} data rows, got {}", field.len()),
        });
    }
    FieldMap::new(xs, ys, zs, field)
}

pub fn load_field_map(path: &Path) -> Result<FieldMap> {
    let file = File::open(path).map_err(|e| Error::from(e).with_context(path.display().to_string()))?;
    read_field_map(BufReader::new(file)).map_err(|e| e.with_context(path.display().to_string()))
}
