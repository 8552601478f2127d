//! Pure-state import and export as `index,re,im` CSV.

use std::path::Path;

use anyhow::{ensure, Context, Result};
use msd_core::{StateVector, C64};

use crate::table::{fmt_f64, Table};

pub const HEADER: [&str; 3] = ["index", "re", "im"];

/// Amplitudes as a table. Zero amplitudes are kept so the row count fixes
/// the dimension.
pub fn to_table(name: &str, psi: &StateVector) -> Table {
    let mut t = Table::new(name, &HEADER);
    for (i, a) in psi.amplitudes().iter().enumerate() {
        t.push(vec![i.to_string(), fmt_f64(a.re), fmt_f64(a.im)]);
    }
    t
}

/// Reads a state, normalizing it. Rows may come in any order; missing
/// indices are zero. The dimension is the next power of two above the
/// largest index.
pub fn read(path: &Path) -> Result<StateVector> {
    let t = Table::read_from(path)?;
    for h in HEADER {
        ensure!(t.column(h).is_some(), "{} lacks column {h}", path.display());
    }
    let idx = t.column("index").expect("checked");
    let indices: Vec<usize> = t
        .rows
        .iter()
        .map(|r| r[idx].parse::<usize>().with_context(|| format!("bad index {:?}", r[idx])))
        .collect::<Result<_>>()?;
    let re = t.floats("re")?;
    let im = t.floats("im")?;
    let top = indices.iter().copied().max().context("amplitude file is empty")?;
    let dim = (top + 1).next_power_of_two().max(2);
    let mut amps = vec![C64::new(0.0, 0.0); dim];
    for ((i, r), m) in indices.into_iter().zip(re).zip(im) {
        amps[i] = C64::new(r.unwrap_or(0.0), m.unwrap_or(0.0));
    }
    Ok(StateVector::normalized(amps)?)
}
