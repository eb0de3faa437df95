//! Strength-2 orthogonal arrays: construction and validation.
//!
//! An array here is an R x K matrix of 1-based level indices over L symbols.
//! Strength 2 means every ordered pair of symbols appears exactly R/L^2 times
//! in every pair of columns, which is what makes per-level group means of a
//! response balanced with respect to all other factors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf::GfTable;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrthogonalArray {
    name: String,
    levels: u32,
    matrix: Vec<Vec<u32>>,
}

impl OrthogonalArray {
    /// Wrap a matrix of 1-based level indices. Shape and symbol range are
    /// checked here; the statistical properties are checked by [`validate`].
    pub fn new(name: impl Into<String>, levels: u32, matrix: Vec<Vec<u32>>) -> Result<Self> {
        let name = name.into();
        if levels == 0 {
            return Err(Error::MalformedArray {
                reason: "level count must be positive".into(),
            });
        }
        if matrix.is_empty() || matrix[0].is_empty() {
            return Err(Error::MalformedArray {
                reason: "matrix must have at least one run and one column".into(),
            });
        }
        let columns = matrix[0].len();
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != columns {
                return Err(Error::MalformedArray {
                    reason: format!("row {i} has {} entries, expected {columns}", row.len()),
                });
            }
            if let Some(&bad) = row.iter().find(|&&v| v == 0 || v > levels) {
                return Err(Error::MalformedArray {
                    reason: format!("row {i} contains symbol {bad}, valid range is 1..={levels}"),
                });
            }
        }
        Ok(OrthogonalArray {
            name,
            levels,
            matrix,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn runs(&self) -> usize {
        self.matrix.len()
    }

    pub fn columns(&self) -> usize {
        self.matrix[0].len()
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.matrix
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.matrix[i]
    }

    /// Copy with only the first `columns` columns, dropped from the right.
    pub fn truncated(&self, columns: usize) -> Result<Self> {
        if columns == 0 || columns > self.columns() {
            return Err(Error::MalformedArray {
                reason: format!(
                    "cannot truncate {}-column array to {columns} columns",
                    self.columns()
                ),
            });
        }
        Ok(OrthogonalArray {
            name: self.name.clone(),
            levels: self.levels,
            matrix: self
                .matrix
                .iter()
                .map(|row| row[..columns].to_vec())
                .collect(),
        })
    }

    /// Check balance and the strength-2 property with exact integer counts.
    pub fn validate(&self) -> ValidationReport {
        let runs = self.runs();
        let l = self.levels as usize;
        let mut columns = Vec::new();
        for k in 0..self.columns() {
            let mut counts = vec![0usize; l];
            for row in &self.matrix {
                counts[(row[k] - 1) as usize] += 1;
            }
            let balanced = runs.is_multiple_of(l) && counts.iter().all(|&c| c == runs / l);
            columns.push(ColumnBalance {
                column: k,
                counts,
                balanced,
            });
        }

        let mut pairs = Vec::new();
        for a in 0..self.columns() {
            for b in (a + 1)..self.columns() {
                let mut counts = vec![vec![0usize; l]; l];
                for row in &self.matrix {
                    counts[(row[a] - 1) as usize][(row[b] - 1) as usize] += 1;
                }
                let expected = if runs.is_multiple_of(l * l) {
                    runs / (l * l)
                } else {
                    0
                };
                let flat =
                    expected > 0 && counts.iter().all(|row| row.iter().all(|&c| c == expected));
                pairs.push(PairCounts {
                    column_a: a,
                    column_b: b,
                    expected,
                    counts,
                    flat,
                });
            }
        }

        let ok = columns.iter().all(|c| c.balanced) && pairs.iter().all(|p| p.flat);
        ValidationReport { ok, columns, pairs }
    }
}

/// Per-column symbol counts; balanced when each symbol occurs R/L times.
#[derive(Debug, Clone, Serialize)]
pub struct ColumnBalance {
    pub column: usize,
    pub counts: Vec<usize>,
    pub balanced: bool,
}

/// Ordered-pair count histogram for one column pair; flat at R/L^2 when the
/// strength-2 property holds.
#[derive(Debug, Clone, Serialize)]
pub struct PairCounts {
    pub column_a: usize,
    pub column_b: usize,
    pub expected: usize,
    pub counts: Vec<Vec<usize>>,
    pub flat: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub columns: Vec<ColumnBalance>,
    pub pairs: Vec<PairCounts>,
}

impl ValidationReport {
    /// Column pairs whose histogram is not flat.
    pub fn offending_pairs(&self) -> Vec<(usize, usize)> {
        self.pairs
            .iter()
            .filter(|p| !p.flat)
            .map(|p| (p.column_a, p.column_b))
            .collect()
    }
}

/// Build OA(L^2, K, L, 2) for prime-power L and K <= L+1.
///
/// Rows are indexed by pairs (a, b) over GF(L) in row-major order; column j
/// for j < L carries a + c_j * b with c_j the j-th field element, and the
/// optional last column carries b. Any column subset keeps strength 2 because
/// each pair of column maps is a bijection on GF(L)^2.
pub fn gf_construct(levels: u32, columns: usize) -> Result<OrthogonalArray> {
    let max = (levels + 1) as usize;
    if columns == 0 || columns > max {
        return Err(Error::TooManyColumns {
            columns,
            levels,
            max,
        });
    }
    let gf = GfTable::new(levels)?;
    let runs = (levels * levels) as usize;
    let mut matrix = Vec::with_capacity(runs);
    for a in 0..levels {
        for b in 0..levels {
            let mut row = Vec::with_capacity(columns);
            for c in 0..columns.min(levels as usize) {
                row.push(gf.add(a, gf.mul(c as u32, b)) + 1);
            }
            if columns == max {
                row.push(b + 1);
            }
            matrix.push(row);
        }
    }
    OrthogonalArray::new(format!("constructed({levels}^{columns})"), levels, matrix)
}
