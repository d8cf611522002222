//! Image container and the RRGRID text format.
//!
//! Grids are immutable row-major rasters of `f64` pixels. The top-left
//! pixel is `(0, 0)`; rows grow downward and columns grow to the right.
//! A grid carries a `kind` telling which pipeline stage produced it, and
//! observation/reconstruction grids additionally record the kernel
//! half-width they were produced with so downstream commands can validate
//! their inputs.
//!
//! The on-disk representation is RRGRID v1, a deterministic UTF-8 text
//! format with LF line endings:
//!
//! ```text
//! RRGRID 1
//! <rows> <cols>
//! kind <field|observations|reconstruction>
//! kernel_half_width <h>        (only when kind != field)
//! <cols space-separated values per row, rows lines>
//! ```
//!
//! Values are written in the shortest decimal form that parses back to
//! the identical `f64`, so write → read round-trips bit-exactly and two
//! writes of the same grid produce byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Which pipeline stage a grid belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    /// Ground-truth radiance field.
    Field,
    /// Kernel-averaged (and possibly noisy) observations.
    Observations,
    /// Output of the reconstruction pipeline.
    Reconstruction,
}

impl GridKind {
    fn as_str(self) -> &'static str {
        match self {
            GridKind::Field => "field",
            GridKind::Observations => "observations",
            GridKind::Reconstruction => "reconstruction",
        }
    }
}

/// Zero-based raster position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelIndex {
    pub row: usize,
    pub col: usize,
}

/// Row-major linear index of `p` on a grid with `cols` columns.
#[inline]
pub fn linear_index(p: PixelIndex, cols: usize) -> usize {
    p.row * cols + p.col
}

/// Immutable row-major image.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    rows: usize,
    cols: usize,
    kind: GridKind,
    kernel_half_width: Option<usize>,
    values: Vec<f64>,
}

impl ImageGrid {
    /// Build a grid, checking every container invariant: positive shape,
    /// `rows * cols` finite values, and kernel metadata present exactly
    /// when the kind requires it.
    pub fn new(
        rows: usize,
        cols: usize,
        kind: GridKind,
        kernel_half_width: Option<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "grid dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if values.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "expected {} values for a {rows}x{cols} grid, got {}",
                rows * cols,
                values.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite value {} at linear index {bad}",
                values[bad]
            )));
        }
        match (kind, kernel_half_width) {
            (GridKind::Field, None) => {}
            (GridKind::Field, Some(_)) => {
                return Err(Error::InvalidArgument(
                    "field grids carry no kernel half-width".into(),
                ))
            }
            (GridKind::Observations, Some(h)) if !(1..=3).contains(&h) => {
                return Err(Error::UnsupportedHalfWidth(h))
            }
            (GridKind::Observations | GridKind::Reconstruction, Some(_)) => {}
            (GridKind::Observations | GridKind::Reconstruction, None) => {
                return Err(Error::InvalidArgument(format!(
                    "{} grids require a kernel half-width",
                    kind.as_str()
                )))
            }
        }
        Ok(Self {
            rows,
            cols,
            kind,
            kernel_half_width,
            values,
        })
    }

    /// Convenience constructor for a truth field.
    pub fn field(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        Self::new(rows, cols, GridKind::Field, None, values)
    }

    /// Constant-valued field, useful in tests and examples.
    pub fn constant_field(rows: usize, cols: usize, value: f64) -> Result<Self> {
        Self::field(rows, cols, vec![value; rows * cols])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn kernel_half_width(&self) -> Option<usize> {
        self.kernel_half_width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at a raster position; panics on out-of-range positions the
    /// same way slice indexing does.
    #[inline]
    pub fn value(&self, p: PixelIndex) -> f64 {
        debug_assert!(p.row < self.rows && p.col < self.cols);
        self.values[linear_index(p, self.cols)]
    }
}

/// Parse an RRGRID v1 file.
///
/// Violations are reported with the 1-based line number where the parser
/// gave up: bad or unsupported header, malformed dimension line, missing
/// or unexpected metadata, non-numeric tokens, and row or value counts
/// that disagree with the declared shape.
pub fn read_grid(path: impl AsRef<Path>) -> Result<ImageGrid> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();

    let mut next_line = |expect: &str| -> Result<(usize, &str)> {
        lines
            .next()
            .map(|(i, l)| (i + 1, l))
            .ok_or_else(|| Error::format(path, text.lines().count() + 1, format!("unexpected end of file, expected {expect}")))
    };

    let (ln, header) = next_line("header")?;
    match header.trim_end() {
        "RRGRID 1" => {}
        h if h.starts_with("RRGRID") => {
            return Err(Error::format(path, ln, format!("unsupported RRGRID version in header {h:?}")))
        }
        h => return Err(Error::format(path, ln, format!("malformed header {h:?}, expected \"RRGRID 1\""))),
    }

    let (ln, dims) = next_line("dimensions")?;
    let mut it = dims.split_whitespace();
    let rows: usize = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::format(path, ln, format!("malformed dimension line {dims:?}")))?;
    let cols: usize = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::format(path, ln, format!("malformed dimension line {dims:?}")))?;
    if it.next().is_some() {
        return Err(Error::format(path, ln, "trailing tokens on dimension line"));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::format(path, ln, format!("dimensions must be positive, got {rows} {cols}")));
    }

    let (ln, kind_line) = next_line("kind line")?;
    let kind = match kind_line.trim_end() {
        "kind field" => GridKind::Field,
        "kind observations" => GridKind::Observations,
        "kind reconstruction" => GridKind::Reconstruction,
        other => return Err(Error::format(path, ln, format!("malformed kind line {other:?}"))),
    };

    let kernel_half_width = if kind == GridKind::Field {
        None
    } else {
        let (ln, hw_line) = next_line("kernel_half_width line")?;
        let h = hw_line
            .strip_prefix("kernel_half_width ")
            .and_then(|t| t.trim_end().parse::<usize>().ok())
            .ok_or_else(|| Error::format(path, ln, format!("malformed kernel_half_width line {hw_line:?}")))?;
        Some(h)
    };

    let mut values = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let (ln, row_line) = next_line("a row of values")?;
        let mut count = 0usize;
        for tok in row_line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::format(path, ln, format!("non-numeric token {tok:?}")))?;
            if !v.is_finite() {
                return Err(Error::format(path, ln, format!("non-finite value {tok:?}")));
            }
            values.push(v);
            count += 1;
        }
        if count != cols {
            return Err(Error::format(
                path,
                ln,
                format!("value count mismatch on row {r}: expected {cols} values, found {count}"),
            ));
        }
    }
    if let Some((i, l)) = lines.next() {
        if !l.trim().is_empty() {
            return Err(Error::format(path, i + 1, "trailing content after grid data"));
        }
    }

    ImageGrid::new(rows, cols, kind, kernel_half_width, values).map_err(|e| match e {
        Error::ShapeMismatch(m) => Error::format(path, 2, format!("dimension mismatch: {m}")),
        other => other,
    })
}

fn render_grid(g: &ImageGrid) -> String {
    let mut out = String::with_capacity(g.values.len() * 20 + 64);
    out.push_str("RRGRID 1\n");
    let _ = writeln!(out, "{} {}", g.rows, g.cols);
    let _ = writeln!(out, "kind {}", g.kind.as_str());
    if let Some(h) = g.kernel_half_width {
        let _ = writeln!(out, "kernel_half_width {h}");
    }
    for r in 0..g.rows {
        for c in 0..g.cols {
            if c > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{}", g.values[r * g.cols + c]);
        }
        out.push('\n');
    }
    out
}

/// Write `g` in RRGRID v1 form. Output bytes are a pure function of the
/// grid contents.
pub fn write_grid(g: &ImageGrid, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_grid(g)).map_err(|e| Error::io(path, e))
}

/// Export a 16-bit binary PGM for visual inspection. Pixel values are
/// linearly rescaled so the minimum maps to 0 and the maximum to 65535;
/// a constant grid maps to all zeros. Never used for metrics.
pub fn write_pgm(g: &ImageGrid, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in &g.values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let span = hi - lo;
    let mut bytes = Vec::with_capacity(32 + 2 * g.values.len());
    bytes.extend_from_slice(format!("P5\n{} {}\n65535\n", g.cols, g.rows).as_bytes());
    for &v in &g.values {
        let s = if span > 0.0 {
            ((v - lo) / span * 65535.0).round() as u16
        } else {
            0
        };
        bytes.extend_from_slice(&s.to_be_bytes());
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
