//! Sparse design matrix linking observations to grid radiances.
//!
//! Each observation is a unit-sum weighted average of the pixels under
//! its footprint, so the design matrix has one kernel copy per row.
//! Storage is row-compressed with an explicit column index because the
//! local-estimator needs fast support queries in both directions: the
//! pixels a given observation sees, and the observations that see a
//! given pixel.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{linear_index, PixelIndex};
use crate::kernel::ResamplingKernel;

/// Tolerance on the unit-sum row invariant.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Row-compressed sparse design with a column index.
///
/// Invariants, enforced on construction and on load:
/// - every stored weight is strictly positive;
/// - every row sums to one within [`ROW_SUM_TOL`];
/// - no row and no column is empty;
/// - the column index is the exact transpose of the row storage.
#[derive(Debug, Clone)]
pub struct SparseDesign {
    n: usize,
    m: usize,
    rows: Vec<Vec<(usize, f64)>>,
    col_index: Vec<Vec<usize>>,
    obs_shape: Option<(usize, usize)>,
    field_shape: Option<(usize, usize)>,
    kernel_half_width: usize,
}

impl SparseDesign {
    /// Observation count (rows).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Pixel count (columns).
    pub fn m(&self) -> usize {
        self.m
    }

    /// Kernel half-width recorded with the design.
    pub fn kernel_half_width(&self) -> usize {
        self.kernel_half_width
    }

    /// Observation-grid shape; `None` for generic designs loaded from a
    /// file, which carry no raster geometry.
    pub fn obs_shape(&self) -> Option<(usize, usize)> {
        self.obs_shape
    }

    /// Field-grid shape; `None` for generic designs.
    pub fn field_shape(&self) -> Option<(usize, usize)> {
        self.field_shape
    }

    /// Sparse row `i` as `(column, weight)` pairs sorted by column.
    pub fn row(&self, i: usize) -> Result<&[(usize, f64)]> {
        self.rows.get(i).map(Vec::as_slice).ok_or(Error::IndexOutOfRange {
            what: "observation",
            index: i,
            len: self.n,
        })
    }

    /// Columns with a non-zero entry in row `i`, sorted ascending.
    pub fn row_support(&self, i: usize) -> Result<Vec<usize>> {
        Ok(self.row(i)?.iter().map(|&(j, _)| j).collect())
    }

    /// Rows with a non-zero entry in column `j`, sorted ascending.
    pub fn col_support(&self, j: usize) -> Result<&[usize]> {
        self.col_index
            .get(j)
            .map(Vec::as_slice)
            .ok_or(Error::IndexOutOfRange {
                what: "pixel",
                index: j,
                len: self.m,
            })
    }

    /// Weight `x[i, j]`, zero when the entry is not stored.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        match self.rows[i].binary_search_by_key(&j, |&(c, _)| c) {
            Ok(pos) => self.rows[i][pos].1,
            Err(_) => 0.0,
        }
    }

    /// Dense product `X * beta` (one value per observation).
    pub fn multiply(&self, beta: &[f64]) -> Result<Vec<f64>> {
        if beta.len() != self.m {
            return Err(Error::ShapeMismatch(format!(
                "design has {} columns but the vector has length {}",
                self.m,
                beta.len()
            )));
        }
        Ok(self
            .rows
            .iter()
            .map(|row| row.iter().map(|&(j, x)| x * beta[j]).sum())
            .collect())
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::InvalidArgument("design must have rows and columns".into()));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.is_empty() {
                return Err(Error::InvalidArgument(format!("row {i} is empty")));
            }
            let mut sum = 0.0;
            let mut prev: Option<usize> = None;
            for &(j, x) in row {
                if j >= self.m {
                    return Err(Error::IndexOutOfRange {
                        what: "pixel",
                        index: j,
                        len: self.m,
                    });
                }
                if prev.is_some_and(|p| p >= j) {
                    return Err(Error::InvalidArgument(format!(
                        "row {i} columns not strictly increasing at {j}"
                    )));
                }
                prev = Some(j);
                if !(x > 0.0) || !x.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "row {i} has non-positive or non-finite weight {x} at column {j}"
                    )));
                }
                sum += x;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidArgument(format!(
                    "row {i} sums to {sum}, violating the unit-sum invariant"
                )));
            }
        }
        for (j, col) in self.col_index.iter().enumerate() {
            if col.is_empty() {
                return Err(Error::InvalidArgument(format!("column {j} is empty")));
            }
        }
        Ok(())
    }

    fn from_rows(
        rows: Vec<Vec<(usize, f64)>>,
        m: usize,
        kernel_half_width: usize,
        obs_shape: Option<(usize, usize)>,
        field_shape: Option<(usize, usize)>,
    ) -> Result<Self> {
        let n = rows.len();
        let mut col_index = vec![Vec::new(); m];
        for (i, row) in rows.iter().enumerate() {
            for &(j, _) in row {
                if j >= m {
                    return Err(Error::IndexOutOfRange {
                        what: "pixel",
                        index: j,
                        len: m,
                    });
                }
                col_index[j].push(i);
            }
        }
        let d = SparseDesign {
            n,
            m,
            rows,
            col_index,
            obs_shape,
            field_shape,
            kernel_half_width,
        };
        d.validate()?;
        Ok(d)
    }
}

/// Assemble the design for a `field_rows x field_cols` grid scanned with
/// `kernel`. Observation centers range over pixels `[h, rows-h) x
/// [h, cols-h)` so every row is one complete, unit-sum kernel copy; the
/// border pixels without a fully contained footprint produce no
/// observations.
pub fn build_design(
    field_rows: usize,
    field_cols: usize,
    kernel: &ResamplingKernel,
) -> Result<SparseDesign> {
    let h = kernel.half_width();
    if field_rows <= 2 * h || field_cols <= 2 * h {
        return Err(Error::FieldTooSmall {
            rows: field_rows,
            cols: field_cols,
            half_width: h,
        });
    }
    let obs_rows = field_rows - 2 * h;
    let obs_cols = field_cols - 2 * h;
    let hi = h as isize;
    let mut rows = Vec::with_capacity(obs_rows * obs_cols);
    for or in 0..obs_rows {
        for oc in 0..obs_cols {
            let (cr, cc) = (or + h, oc + h);
            let mut row = Vec::with_capacity((2 * h + 1).pow(2));
            for dr in -hi..=hi {
                for dc in -hi..=hi {
                    let p = PixelIndex {
                        row: (cr as isize + dr) as usize,
                        col: (cc as isize + dc) as usize,
                    };
                    row.push((linear_index(p, field_cols), kernel.weight(dr, dc)));
                }
            }
            // Offsets enumerate in raster order over a window narrower
            // than the grid, so columns are already strictly increasing.
            rows.push(row);
        }
    }
    SparseDesign::from_rows(
        rows,
        field_rows * field_cols,
        h,
        Some((obs_rows, obs_cols)),
        Some((field_rows, field_cols)),
    )
}

/// Parse an RRDESIGN v1 file:
///
/// ```text
/// RRDESIGN 1
/// <n> <m> <h>
/// <count> (<col> <weight>)*     one line per row
/// ```
///
/// All design invariants are validated on load; rows failing the
/// unit-sum check are rejected.
pub fn read_design(path: impl AsRef<Path>) -> Result<SparseDesign> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();

    let (ln, header) = lines
        .next()
        .map(|(i, l)| (i + 1, l))
        .ok_or_else(|| Error::format(path, 1, "empty file"))?;
    match header.trim_end() {
        "RRDESIGN 1" => {}
        h if h.starts_with("RRDESIGN") => {
            return Err(Error::format(path, ln, format!("unsupported RRDESIGN version in header {h:?}")))
        }
        h => return Err(Error::format(path, ln, format!("malformed header {h:?}, expected \"RRDESIGN 1\""))),
    }

    let (ln, dims) = lines
        .next()
        .map(|(i, l)| (i + 1, l))
        .ok_or_else(|| Error::format(path, 2, "missing dimension line"))?;
    let parts: Vec<&str> = dims.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(Error::format(path, ln, format!("malformed dimension line {dims:?}, expected \"<n> <m> <h>\"")));
    }
    let parse_usize = |tok: &str| -> Result<usize> {
        tok.parse()
            .map_err(|_| Error::format(path, ln, format!("non-numeric token {tok:?}")))
    };
    let n = parse_usize(parts[0])?;
    let m = parse_usize(parts[1])?;
    let h = parse_usize(parts[2])?;

    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let (ln, line) = lines
            .next()
            .map(|(k, l)| (k + 1, l))
            .ok_or_else(|| Error::format(path, 3 + i, format!("missing row {i}")))?;
        let mut toks = line.split_whitespace();
        let count: usize = toks
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::format(path, ln, "malformed row: missing entry count"))?;
        let mut row = Vec::with_capacity(count);
        for _ in 0..count {
            let col: usize = toks
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::format(path, ln, "malformed row: missing column index"))?;
            let w: f64 = toks
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::format(path, ln, "malformed row: missing weight"))?;
            row.push((col, w));
        }
        if toks.next().is_some() {
            return Err(Error::format(path, ln, "trailing tokens after declared entries"));
        }
        rows.push(row);
    }

    SparseDesign::from_rows(rows, m, h, None, None)
}

/// Write a design in RRDESIGN v1 form; deterministic byte output.
pub fn write_design(d: &SparseDesign, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    out.push_str("RRDESIGN 1\n");
    let _ = writeln!(out, "{} {} {}", d.n, d.m, d.kernel_half_width);
    for row in &d.rows {
        let _ = write!(out, "{}", row.len());
        for &(j, x) in row {
            let _ = write!(out, " {j} {x}");
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
