use crate::error::{invalid, Result};
use crate::math::{abs, round};
use crate::raster::Grid;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self { train: 0.64, val: 0.20, test: 0.16 }
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|f| !(*f >= 0.0)) || abs(parts.iter().sum::<f64>() - 1.0) > 1e-9 {
            return Err(invalid("split fractions must be non-negative and sum to 1"));
        }
        Ok(())
    }
}

/// Split label of every cell of the non-overlapping patch grid.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SplitAssignment {
    /// Raster shape in pixels.
    pub raster: (usize, usize),
    pub patch: usize,
    /// Patch grid shape in cells.
    pub cells: (usize, usize),
    /// Row-major cell labels.
    pub labels: Vec<Split>,
    pub fractions: SplitFractions,
}

impl SplitAssignment {
    pub fn cell(&self, cell_row: usize, cell_col: usize) -> Split {
        self.labels[cell_row * self.cells.1 + cell_col]
    }

    /// Cell origins (pixel row, pixel col) with their labels.
    pub fn origins(&self) -> impl Iterator<Item = ((usize, usize), Split)> + '_ {
        let (p, cols) = (self.patch, self.cells.1);
        self.labels.iter().enumerate().map(move |(i, &s)| (((i / cols) * p, (i % cols) * p), s))
    }

    /// Per-pixel label; pixels beyond the last full cell are unassigned.
    pub fn pixel_labels(&self) -> Grid<Option<Split>> {
        let (rows, cols) = self.raster;
        let p = self.patch;
        Grid::from_fn(rows, cols, |r, c| {
            let (cr, cc) = (r / p, c / p);
            (cr < self.cells.0 && cc < self.cells.1).then(|| self.cell(cr, cc))
        })
    }

    /// `[train, val, test]` cell counts.
    pub fn counts(&self) -> [usize; 3] {
        let mut out = [0; 3];
        for s in &self.labels {
            out[*s as usize] += 1;
        }
        out
    }

    /// Achieved `[train, val, test]` fractions.
    pub fn achieved(&self) -> [f64; 3] {
        let counts = self.counts();
        let total = self.labels.len().max(1) as f64;
        counts.map(|c| c as f64 / total)
    }
}

/// Achieved fractions over several assignments (e.g. two headings).
pub fn joint_fractions(assignments: &[&SplitAssignment]) -> [f64; 3] {
    let mut counts = [0usize; 3];
    for a in assignments {
        for (acc, c) in counts.iter_mut().zip(a.counts()) {
            *acc += c;
        }
    }
    let total = counts.iter().sum::<usize>().max(1) as f64;
    counts.map(|c| c as f64 / total)
}

/// Band-based generalisation of a quadrant split.
///
/// The raster is tiled with non-overlapping `patch × patch` cells. Cell
/// counts are apportioned by nearest integer (`val = round(f_val·T)`,
/// `test = round(f_test·T)`, train takes the remainder). In row-major
/// (azimuth-major) order the cells form a leading train band, a middle
/// evaluation band and a trailing train band. The evaluation band starts on a
/// row boundary; its partial last row is right-aligned. Walking the
/// evaluation band column by column (increasing range), the first cells are
/// validation and the rest test, so both regions are contiguous.
pub fn quadrant_split(rows: usize, cols: usize, patch: usize, fractions: SplitFractions) -> Result<SplitAssignment> {
    fractions.validate()?;
    if patch == 0 {
        return Err(invalid("patch size must be positive"));
    }
    if rows < 2 * patch || cols < 2 * patch {
        return Err(invalid(format!(
            "raster {rows}x{cols} is too small for patch {patch}: need at least {0}x{0}",
            2 * patch
        )));
    }
    let (cr, cc) = (rows / patch, cols / patch);
    let total = cr * cc;
    let n_val = round(fractions.val * total as f64) as usize;
    let n_test = round(fractions.test * total as f64) as usize;
    let n_eval = n_val + n_test;
    if n_eval > total {
        return Err(invalid("evaluation fractions exceed the patch grid"));
    }
    let n_train = total - n_eval;

    let full_rows = n_eval / cc;
    let extra = n_eval % cc;
    let band_rows = full_rows + usize::from(extra > 0);
    let lead_rows = (round(n_train as f64 / 2.0 / cc as f64) as usize).min(cr - band_rows);

    let mut labels = vec![Split::Train; total];
    let mut eval_cells: Vec<(usize, usize)> = Vec::with_capacity(n_eval);
    for r in lead_rows..lead_rows + full_rows {
        for c in 0..cc {
            eval_cells.push((r, c));
        }
    }
    for c in cc - extra..cc {
        eval_cells.push((lead_rows + full_rows, c));
    }
    eval_cells.sort_by_key(|&(r, c)| (c, r));
    for (k, &(r, c)) in eval_cells.iter().enumerate() {
        labels[r * cc + c] = if k < n_val { Split::Val } else { Split::Test };
    }
    Ok(SplitAssignment { raster: (rows, cols), patch, cells: (cr, cc), labels, fractions })
}
