//! CSV rows and atomic file output.

use std::io::Write;
use std::path::Path;

use cspmkt_core::sweep::SweepCell;
use cspmkt_core::{EquilibriumOutcome, Market, SweepGrid};

pub const CSV_HEADER: [&str; 18] = [
    "x_key",
    "x_value",
    "y_key",
    "y_value",
    "p_wb",
    "p_nb",
    "p_wc",
    "p_nc",
    "q_wb",
    "q_wc",
    "q_nb",
    "q_nc",
    "r_w",
    "r_n",
    "gap",
    "feasible",
    "cond_flags",
    "error",
];

fn num(v: f64) -> String {
    format!("{v}")
}

/// The twelve outcome columns `p_wb .. gap`; monopoly outcomes fill the W
/// columns and leave N blank.
fn outcome_columns(outcome: Option<&EquilibriumOutcome>) -> Vec<String> {
    let Some(o) = outcome else {
        return vec![String::new(); 11];
    };
    match &o.market {
        Market::Monopoly {
            prices,
            participation,
            profit,
        } => vec![
            num(prices.p_b),
            String::new(),
            num(prices.p_c),
            String::new(),
            num(participation.q_b),
            num(participation.q_c),
            String::new(),
            String::new(),
            num(*profit),
            String::new(),
            num(o.gap()),
        ],
        Market::Duopoly {
            prices,
            participation: q,
            profit_w,
            profit_n,
        } => vec![
            num(prices.p_wb),
            num(prices.p_nb),
            num(prices.p_wc),
            num(prices.p_nc),
            num(q.q_wb),
            num(q.q_wc),
            num(q.q_nb),
            num(q.q_nc),
            num(*profit_w),
            num(*profit_n),
            num(o.gap()),
        ],
    }
}

fn cell_row(grid: &SweepGrid, cell: &SweepCell) -> Vec<String> {
    let mut row = vec![
        grid.x.key.to_string(),
        num(cell.x_value),
        grid.y.key.to_string(),
        num(cell.y_value),
    ];
    row.extend(outcome_columns(cell.outcome.as_ref()));
    row.push(cell.feasible.map(|f| f.to_string()).unwrap_or_default());
    row.push(cell.cond_flags.clone());
    row.push(cell.error.as_ref().map(|e| e.code.clone()).unwrap_or_default());
    row
}

fn write_csv(rows: impl Iterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("writing to memory");
    for row in rows {
        w.write_record(&row).expect("writing to memory");
    }
    w.into_inner().expect("writing to memory")
}

pub fn sweep_csv(grid: &SweepGrid) -> Vec<u8> {
    write_csv(grid.cells.iter().map(|c| cell_row(grid, c)))
}

/// One row with blank axis columns.
pub fn outcome_csv(outcome: &EquilibriumOutcome, feasible: Option<bool>) -> Vec<u8> {
    let mut row = vec![String::new(); 4];
    row.extend(outcome_columns(Some(outcome)));
    row.push(feasible.map(|f| f.to_string()).unwrap_or_default());
    row.push(outcome.conditions.flags());
    row.push(String::new());
    write_csv(std::iter::once(row))
}

/// Writes `bytes` to `path` through a temporary file in the same directory,
/// or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> std::io::Result<()> {
    match path {
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(bytes)?;
            tmp.as_file().sync_all()?;
            tmp.persist(path).map_err(|e| e.error)?;
            Ok(())
        }
    }
}
