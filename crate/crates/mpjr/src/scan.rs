//! Gridded scan fields (height, adhesion, dissipation, modulus) and their
//! preprocessing: datum shift, downsampling, profile extraction, phase
//! segmentation and modulus homogenization.
//!
//! A [`ScanGrid`] is a uniform raster of one scalar field. The file format is
//! a plain ASCII matrix with a 4-line header:
//!
//! ```text
//! nx ny
//! dx dy
//! kind        # one of: height, peak_force, dissipation, modulus
//! unit        # free text, informational
//! <ny rows of nx whitespace-separated numbers, row 0 = y origin>
//! ```
//!
//! Height grids are datum-shifted on load so that the deepest valley sits at
//! exactly zero; all other fields are stored as given (times `unit_scale`).

use crate::error::{Error, Result};
use std::fmt;
use std::path::Path;

/// Which physical field a grid holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    /// Surface elevation. Datum-shifted so `min = 0`.
    Height,
    /// Peak adhesive traction `p_max` (force/area after unit conversion).
    PeakForce,
    /// Energy dissipation per unit area, used as the adhesion energy.
    Dissipation,
    /// Elastic modulus fitted per pixel.
    Modulus,
}

impl FieldKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FieldKind::Height => "height",
            FieldKind::PeakForce => "peak_force",
            FieldKind::Dissipation => "dissipation",
            FieldKind::Modulus => "modulus",
        }
    }

    pub fn parse(s: &str) -> Option<FieldKind> {
        match s {
            "height" => Some(FieldKind::Height),
            "peak_force" => Some(FieldKind::PeakForce),
            "dissipation" => Some(FieldKind::Dissipation),
            "modulus" => Some(FieldKind::Modulus),
            _ => None,
        }
    }
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Uniform raster of one scalar surface field.
///
/// Values are stored row-major: `values[j * nx + i]` is the sample at
/// `(x, y) = (i * dx, j * dy)`. Row 0 is the y origin.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanGrid {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub kind: FieldKind,
    /// Unit annotation from the file header; informational only.
    pub unit: String,
    values: Vec<f64>,
}

impl ScanGrid {
    /// Builds a grid from raw values, validating the type invariants.
    ///
    /// Height grids are datum-shifted so their minimum is exactly zero.
    pub fn from_values(
        nx: usize,
        ny: usize,
        dx: f64,
        dy: f64,
        kind: FieldKind,
        values: Vec<f64>,
    ) -> Result<ScanGrid> {
        if nx < 2 {
            return Err(Error::InvalidGrid(format!("nx = {nx}, need nx >= 2")));
        }
        if ny < 1 {
            return Err(Error::InvalidGrid("ny = 0".into()));
        }
        if !(dx > 0.0) || !(dy > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "grid spacing must be positive, got dx = {dx}, dy = {dy}"
            )));
        }
        if values.len() != nx * ny {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                nx * ny,
                values.len()
            )));
        }
        for j in 0..ny {
            for i in 0..nx {
                if !values[j * nx + i].is_finite() {
                    return Err(Error::NonFinite { i, j });
                }
            }
        }
        let mut grid = ScanGrid {
            nx,
            ny,
            dx,
            dy,
            kind,
            unit: String::new(),
            values,
        };
        match kind {
            FieldKind::Height => grid.shift_datum(),
            FieldKind::PeakForce | FieldKind::Dissipation => {
                if let Some((i, j)) = grid.find(|v| v < 0.0) {
                    return Err(Error::InvalidGrid(format!(
                        "{} value at ({i}, {j}) is negative",
                        kind.as_str()
                    )));
                }
            }
            FieldKind::Modulus => {
                if let Some((i, j)) = grid.find(|v| v <= 0.0) {
                    return Err(Error::InvalidGrid(format!(
                        "modulus value at ({i}, {j}) is not positive"
                    )));
                }
            }
        }
        Ok(grid)
    }

    fn find(&self, pred: impl Fn(f64) -> bool) -> Option<(usize, usize)> {
        for j in 0..self.ny {
            for i in 0..self.nx {
                if pred(self.values[j * self.nx + i]) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// Shifts all values so the minimum is exactly zero.
    fn shift_datum(&mut self) {
        let min = self.min();
        for v in &mut self.values {
            *v -= min;
        }
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.nx && j < self.ny);
        self.values[j * self.nx + i]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Root mean square of the stored values, `sqrt(mean(v^2))`.
    ///
    /// For height grids the values are already datum-shifted, so this is the
    /// rms elevation above the deepest valley.
    pub fn rms(&self) -> f64 {
        let ms = self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64;
        ms.sqrt()
    }

    /// Physical extent along x, `(nx - 1) * dx`.
    pub fn extent_x(&self) -> f64 {
        (self.nx - 1) as f64 * self.dx
    }

    /// Extracts a single row as a profile grid (`ny = 1`).
    ///
    /// Height profiles are re-shifted so the profile minimum is zero.
    pub fn extract_profile(&self, row_index: usize) -> Result<ScanGrid> {
        if row_index >= self.ny {
            return Err(Error::InvalidGrid(format!(
                "row index {row_index} out of range (ny = {})",
                self.ny
            )));
        }
        let row = self.values[row_index * self.nx..(row_index + 1) * self.nx].to_vec();
        let mut grid = ScanGrid::from_values(self.nx, 1, self.dx, self.dy, self.kind, row)?;
        grid.unit = self.unit.clone();
        Ok(grid)
    }

    /// Strided downsampling, keeping indices `0, factor, 2*factor, ...`.
    ///
    /// Samples past the last kept index are dropped (no averaging, no
    /// interpolation). Spacing scales by `factor`; height grids are
    /// re-datumed.
    pub fn downsample(&self, factor: usize) -> Result<ScanGrid> {
        if factor < 1 {
            return Err(Error::InvalidGrid("downsample factor must be >= 1".into()));
        }
        if factor == 1 {
            return Ok(self.clone());
        }
        let nx = (self.nx - 1) / factor + 1;
        let ny = (self.ny - 1) / factor + 1;
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                values.push(self.value(i * factor, j * factor));
            }
        }
        let mut grid = ScanGrid::from_values(
            nx,
            ny,
            self.dx * factor as f64,
            self.dy * factor as f64,
            self.kind,
            values,
        )?;
        grid.unit = self.unit.clone();
        Ok(grid)
    }

    /// Parses the ASCII grid format. `source` names the input in errors.
    pub fn parse(
        text: &str,
        source: &Path,
        kind: FieldKind,
        unit_scale: f64,
    ) -> Result<ScanGrid> {
        if !(unit_scale > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "unit_scale must be positive, got {unit_scale}"
            )));
        }
        let mut lines = text.lines().enumerate();
        let mut next_line = |what: &str| -> Result<(usize, &str)> {
            lines
                .next()
                .map(|(n, s)| (n + 1, s))
                .ok_or_else(|| Error::parse(source, 0, format!("unexpected end of file, expected {what}")))
        };

        let (n1, l1) = next_line("`nx ny`")?;
        let dims: Vec<&str> = l1.split_whitespace().collect();
        if dims.len() != 2 {
            return Err(Error::parse(source, n1, "expected `nx ny`"));
        }
        let nx: usize = dims[0]
            .parse()
            .map_err(|_| Error::parse(source, n1, format!("bad nx `{}`", dims[0])))?;
        let ny: usize = dims[1]
            .parse()
            .map_err(|_| Error::parse(source, n1, format!("bad ny `{}`", dims[1])))?;

        let (n2, l2) = next_line("`dx dy`")?;
        let sp: Vec<&str> = l2.split_whitespace().collect();
        if sp.len() != 2 {
            return Err(Error::parse(source, n2, "expected `dx dy`"));
        }
        let dx: f64 = sp[0]
            .parse()
            .map_err(|_| Error::parse(source, n2, format!("bad dx `{}`", sp[0])))?;
        let dy: f64 = sp[1]
            .parse()
            .map_err(|_| Error::parse(source, n2, format!("bad dy `{}`", sp[1])))?;

        let (n3, l3) = next_line("field kind")?;
        let file_kind = FieldKind::parse(l3.trim())
            .ok_or_else(|| Error::parse(source, n3, format!("unknown field kind `{}`", l3.trim())))?;
        if file_kind != kind {
            return Err(Error::parse(
                source,
                n3,
                format!("field kind is `{file_kind}`, expected `{kind}`"),
            ));
        }

        let (_n4, l4) = next_line("unit annotation")?;
        let unit = l4.trim().to_string();

        let mut values = vec![0.0; nx * ny];
        for j in 0..ny {
            let (nl, line) = next_line(&format!("data row {j}"))?;
            let mut count = 0;
            for (i, tok) in line.split_whitespace().enumerate() {
                if i >= nx {
                    return Err(Error::parse(
                        source,
                        nl,
                        format!("row {j} has more than nx = {nx} entries"),
                    ));
                }
                let v: f64 = tok
                    .parse()
                    .map_err(|_| Error::parse(source, nl, format!("bad number `{tok}`")))?;
                if !v.is_finite() {
                    return Err(Error::NonFinite { i, j });
                }
                values[j * nx + i] = v * unit_scale;
                count += 1;
            }
            if count != nx {
                return Err(Error::parse(
                    source,
                    nl,
                    format!("row {j} has {count} entries, expected nx = {nx}"),
                ));
            }
        }
        if let Some((n, l)) = lines.find(|(_, l)| !l.trim().is_empty()) {
            return Err(Error::parse(source, n + 1, format!("trailing content `{}`", l.trim())));
        }

        let mut grid = ScanGrid::from_values(nx, ny, dx, dy, kind, values)?;
        grid.unit = unit;
        Ok(grid)
    }

    /// Serializes in the ASCII grid format. `Display` formatting of `f64`
    /// round-trips exactly, so `parse(write(g)) == g` up to the datum shift
    /// already applied.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{} {}\n", self.nx, self.ny));
        out.push_str(&format!("{} {}\n", self.dx, self.dy));
        out.push_str(&format!("{}\n", self.kind));
        out.push_str(if self.unit.is_empty() { "-" } else { &self.unit });
        out.push('\n');
        for j in 0..self.ny {
            let row: Vec<String> = (0..self.nx)
                .map(|i| format!("{}", self.value(i, j)))
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    /// CSV export with `x,y,value` columns.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,value\n");
        for j in 0..self.ny {
            for i in 0..self.nx {
                out.push_str(&format!(
                    "{},{},{}\n",
                    i as f64 * self.dx,
                    j as f64 * self.dy,
                    self.value(i, j)
                ));
            }
        }
        out
    }
}

/// Loads a grid file, applying `unit_scale` and (for heights) the datum shift.
pub fn load_scan_grid(path: &Path, kind: FieldKind, unit_scale: f64) -> Result<ScanGrid> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ScanGrid::parse(&text, path, kind, unit_scale)
}

/// Binary phase labels over a grid: 0 = matrix, 1 = inclusion (softer phase).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMask {
    pub nx: usize,
    pub ny: usize,
    pub threshold: f64,
    labels: Vec<u8>,
}

impl PhaseMask {
    #[inline]
    pub fn label(&self, i: usize, j: usize) -> u8 {
        self.labels[j * self.nx + i]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }
}

/// Per-phase statistics produced by [`segment_phases`].
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSummary {
    pub inclusion_fraction: f64,
    pub matrix_fraction: f64,
    /// Mean modulus over inclusion pixels; `None` when the phase is empty.
    pub inclusion_mean_modulus: Option<f64>,
    pub matrix_mean_modulus: Option<f64>,
}

/// Splits a modulus grid into two phases by threshold.
///
/// Pixels with modulus strictly below the threshold are labeled 1 (inclusion,
/// softer phase), the rest 0 (matrix).
pub fn segment_phases(modulus: &ScanGrid, threshold: f64) -> Result<(PhaseMask, PhaseSummary)> {
    if modulus.kind != FieldKind::Modulus {
        return Err(Error::InvalidGrid(format!(
            "segmentation requires a modulus grid, got `{}`",
            modulus.kind
        )));
    }
    if !(threshold > 0.0) {
        return Err(Error::InvalidGrid(format!(
            "threshold must be positive, got {threshold}"
        )));
    }
    let n = modulus.nx * modulus.ny;
    let mut labels = Vec::with_capacity(n);
    let (mut n_inc, mut sum_inc, mut sum_mat) = (0usize, 0.0, 0.0);
    for v in modulus.values() {
        if *v < threshold {
            labels.push(1);
            n_inc += 1;
            sum_inc += v;
        } else {
            labels.push(0);
            sum_mat += v;
        }
    }
    let n_mat = n - n_inc;
    let summary = PhaseSummary {
        inclusion_fraction: n_inc as f64 / n as f64,
        matrix_fraction: n_mat as f64 / n as f64,
        inclusion_mean_modulus: (n_inc > 0).then(|| sum_inc / n_inc as f64),
        matrix_mean_modulus: (n_mat > 0).then(|| sum_mat / n_mat as f64),
    };
    let mask = PhaseMask {
        nx: modulus.nx,
        ny: modulus.ny,
        threshold,
        labels,
    };
    Ok((mask, summary))
}

/// Mixture-rule effective modulus `sum_i fraction_i * E_i`.
///
/// Fractions must be non-negative and sum to one within `1e-12`.
pub fn effective_modulus(phases: &[(f64, f64)]) -> Result<f64> {
    if phases.is_empty() {
        return Err(Error::Invalid("no phases given".into()));
    }
    let mut sum_f = 0.0;
    let mut e_eff = 0.0;
    for &(fraction, modulus) in phases {
        if fraction < 0.0 {
            return Err(Error::Invalid(format!("negative phase fraction {fraction}")));
        }
        if !(modulus > 0.0) {
            return Err(Error::Invalid(format!("non-positive phase modulus {modulus}")));
        }
        sum_f += fraction;
        e_eff += fraction * modulus;
    }
    if (sum_f - 1.0).abs() > 1e-12 {
        return Err(Error::Invalid(format!(
            "phase fractions sum to {sum_f}, expected 1 within 1e-12"
        )));
    }
    Ok(e_eff)
}
