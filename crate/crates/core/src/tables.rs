//! Reference critical couplings and upper limits, and their recomputation.
//!
//! The reference values live in `data/reference.toml`, one cell per printed
//! number with its table, row and column labels. [`run_table`] recomputes
//! every cell of a table that has a tolerance and reports the relative
//! deviation of each.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{minimize_bound, BoundMethod, BoundRequest};
use crate::exec;
use crate::kernels::{KernelSpec, KernelVariant};
use crate::nystrom::{converge, ConvergeOptions};
use crate::potentials::{Builtin, Potential};

/// The embedded reference data file.
pub const REFERENCE_DATA: &str = include_str!("../data/reference.toml");

/// Coupling convention of every reference cell (two identical particles).
pub const REFERENCE_ALPHA: f64 = 2.0;

/// Ids accepted by [`run_table`]; table 0 holds values quoted in text.
pub const TABLE_IDS: [u32; 3] = [1, 2, 3];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TableError {
    #[error("unknown table {0}; valid ids are 1, 2 and 3")]
    UnknownTable(u32),
    #[error("reference data: {0}")]
    Reference(String),
}

/// What a reference cell measures, and so how it is recomputed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    Exact,
    Upper,
    UpperSimplified,
    LowerExternal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceCell {
    pub table: u32,
    pub row: String,
    pub column: String,
    pub potential: Builtin,
    pub quantity: Quantity,
    pub ell: u32,
    pub beta: f64,
    /// Fixed massive trial exponent.
    #[serde(default)]
    pub a: Option<f64>,
    pub value: f64,
    /// Relative; `None` marks a reference-only cell.
    #[serde(default)]
    pub tolerance: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReferenceFile {
    version: u32,
    cells: Vec<ReferenceCell>,
}

/// All reference cells in file order.
pub fn reference_cells() -> Result<Vec<ReferenceCell>, TableError> {
    let file: ReferenceFile = toml::from_str(REFERENCE_DATA).map_err(|e| TableError::Reference(e.to_string()))?;
    if file.version != 1 {
        return Err(TableError::Reference(format!("unsupported version {}", file.version)));
    }
    for c in &file.cells {
        let computable = c.quantity != Quantity::LowerExternal;
        if computable != c.tolerance.is_some() {
            return Err(TableError::Reference(format!(
                "table {} row `{}` column `{}`: tolerance must accompany exactly the recomputed cells",
                c.table, c.row, c.column
            )));
        }
        if !(c.value > 0.0 && c.beta >= 0.0) {
            return Err(TableError::Reference(format!("table {} row `{}`: bad value or beta", c.table, c.row)));
        }
    }
    Ok(file.cells)
}

/// The cells of one table (0 to 3) in file order.
pub fn table_cells(id: u32) -> Result<Vec<ReferenceCell>, TableError> {
    if id > 3 {
        return Err(TableError::UnknownTable(id));
    }
    Ok(reference_cells()?.into_iter().filter(|c| c.table == id).collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TableOptions {
    pub converge: ConvergeOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowStatus {
    Pass,
    Fail,
    OutOfScope,
    Error,
}

/// How a computed value was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CellDetail {
    Bound {
        method: BoundMethod,
        p_opt: f64,
        a_opt: Option<f64>,
        at_search_edge: bool,
    },
    Exact {
        n: usize,
        finest: f64,
        sequence: Vec<(usize, f64)>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub table: u32,
    pub row: String,
    pub column: String,
    pub potential: Builtin,
    pub quantity: Quantity,
    pub ell: u32,
    pub beta: f64,
    pub a: Option<f64>,
    pub reference: f64,
    pub computed: Option<f64>,
    pub relative_deviation: Option<f64>,
    pub tolerance: Option<f64>,
    /// Numerical error estimate of `computed`.
    pub error_estimate: Option<f64>,
    pub status: RowStatus,
    pub detail: Option<CellDetail>,
    pub message: Option<String>,
}

impl TableRow {
    fn blank(cell: &ReferenceCell, status: RowStatus) -> Self {
        Self {
            table: cell.table,
            row: cell.row.clone(),
            column: cell.column.clone(),
            potential: cell.potential,
            quantity: cell.quantity,
            ell: cell.ell,
            beta: cell.beta,
            a: cell.a,
            reference: cell.value,
            computed: None,
            relative_deviation: None,
            tolerance: cell.tolerance,
            error_estimate: None,
            status,
            detail: None,
            message: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableReport {
    pub id: u32,
    pub rows: Vec<TableRow>,
}

impl TableReport {
    /// True when no recomputed row failed or errored.
    pub fn passed(&self) -> bool {
        self.rows
            .iter()
            .all(|r| matches!(r.status, RowStatus::Pass | RowStatus::OutOfScope))
    }

    pub fn count(&self, status: RowStatus) -> usize {
        self.rows.iter().filter(|r| r.status == status).count()
    }
}

/// Recomputes one reference cell.
pub fn evaluate_cell(cell: &ReferenceCell, opts: &TableOptions) -> TableRow {
    let Some(tol) = cell.tolerance else {
        return TableRow::blank(cell, RowStatus::OutOfScope);
    };
    match compute(cell, opts) {
        Ok((value, error, detail)) => {
            let dev = (value - cell.value) / cell.value;
            TableRow {
                computed: Some(value),
                relative_deviation: Some(dev),
                error_estimate: Some(error),
                detail: Some(detail),
                ..TableRow::blank(cell, if dev.abs() <= tol { RowStatus::Pass } else { RowStatus::Fail })
            }
        }
        Err(message) => TableRow {
            message: Some(message),
            ..TableRow::blank(cell, RowStatus::Error)
        },
    }
}

fn compute(cell: &ReferenceCell, opts: &TableOptions) -> Result<(f64, f64, CellDetail), String> {
    let pot = Potential::from_builtin(cell.potential);
    match cell.quantity {
        Quantity::Exact => {
            let spec = if cell.beta == 0.0 {
                KernelSpec::massless(cell.ell)
            } else {
                KernelSpec::new(cell.ell, cell.beta, KernelVariant::MassiveExact)
            }
            .map_err(|e| e.to_string())?;
            let cc = converge(&spec, &pot, REFERENCE_ALPHA, &opts.converge).map_err(|e| e.to_string())?;
            let best = cc.best();
            Ok((
                best,
                (best - cc.values[0]).abs(),
                CellDetail::Exact {
                    n: cc.n,
                    finest: cc.values[0],
                    sequence: cc.sequence,
                },
            ))
        }
        Quantity::Upper | Quantity::UpperSimplified => {
            let method = match (cell.quantity, cell.beta == 0.0) {
                (Quantity::UpperSimplified, _) => BoundMethod::SimplifiedMassless,
                (_, true) => BoundMethod::VariationalMassless,
                (_, false) => BoundMethod::VariationalMassive,
            };
            let mut req = BoundRequest::new(pot, cell.ell, cell.beta, REFERENCE_ALPHA, method);
            if let Some(a) = cell.a {
                req = req.with_a(a);
            }
            let r = minimize_bound(&req).map_err(|e| e.to_string())?;
            Ok((
                r.value,
                r.integral_error,
                CellDetail::Bound {
                    method,
                    p_opt: r.p_opt,
                    a_opt: r.a_opt,
                    at_search_edge: r.boundary.any(),
                },
            ))
        }
        Quantity::LowerExternal => Err("reference-only cell".into()),
    }
}

/// Recomputes every cell of table `id` (0 to 3); cells run concurrently and
/// rows come back in file order.
pub fn run_table(id: u32, opts: &TableOptions) -> Result<TableReport, TableError> {
    let cells = table_cells(id)?;
    let rows = exec::map_indexed(cells.len(), |i| evaluate_cell(&cells[i], opts));
    Ok(TableReport { id, rows })
}
