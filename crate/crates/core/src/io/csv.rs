//! Diagnostics and summary tables as CSV with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::functionals::DiagnosticsRecord;

/// `{:.16e}` keeps 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn diagnostics_header(n_species: usize) -> String {
    let mut cols = vec!["time", "E", "H", "H1", "H2", "E_R"]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
    cols.extend((1..=n_species).map(|i| format!("mass_{i}")));
    cols.extend(["D_relax", "D_visc", "D_lin", "D_quartic", "D_grad"].map(String::from));
    cols.extend((1..=n_species).map(|i| format!("D_bohm_{i}")));
    cols.push("clips".into());
    cols.join(",")
}

/// Render the full table, header first.
pub fn diagnostics_csv(records: &[DiagnosticsRecord], n_species: usize) -> Result<String> {
    let mut out = diagnostics_header(n_species);
    out.push('\n');
    for r in records {
        if r.masses.len() != n_species || r.d_bohm.len() != n_species {
            return Err(Error::ShapeMismatch(format!(
                "record at t = {} has {} species, table has {n_species}",
                r.time,
                r.masses.len()
            )));
        }
        let mut cells = vec![
            fmt_f64(r.time),
            fmt_f64(r.energy),
            fmt_f64(r.entropy),
            fmt_f64(r.h1),
            fmt_f64(r.h2),
            r.relative_energy.map(fmt_f64).unwrap_or_default(),
        ];
        cells.extend(r.masses.iter().map(|&m| fmt_f64(m)));
        cells.extend([r.d_relax, r.d_visc, r.d_lin, r.d_quartic, r.d_grad].map(fmt_f64));
        cells.extend(r.d_bohm.iter().map(|&d| fmt_f64(d)));
        cells.push(r.clips.to_string());
        writeln!(out, "{}", cells.join(",")).expect("write to String");
    }
    Ok(out)
}

pub fn write_diagnostics(records: &[DiagnosticsRecord], n_species: usize, path: &Path) -> Result<()> {
    fs::write(path, diagnostics_csv(records, n_species)?)?;
    Ok(())
}

fn parse_cell(cell: &str, line: usize, col: &str) -> Result<f64> {
    cell.parse::<f64>()
        .map_err(|_| Error::Format(format!("line {line}: column {col} is not a number: {cell:?}")))
}

/// Parse a diagnostics table produced by [`write_diagnostics`].
pub fn parse_diagnostics(text: &str) -> Result<Vec<DiagnosticsRecord>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty diagnostics file".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let n_species = cols.iter().filter(|c| c.starts_with("mass_")).count();
    if header != diagnostics_header(n_species) {
        return Err(Error::Format(format!("unexpected diagnostics header {header:?}")));
    }
    lines
        .enumerate()
        .map(|(j, line)| {
            let lineno = j + 2;
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != cols.len() {
                return Err(Error::Format(format!(
                    "line {lineno}: {} cells, header has {}",
                    cells.len(),
                    cols.len()
                )));
            }
            let num = |idx: usize| parse_cell(cells[idx], lineno, cols[idx]);
            let ns = n_species;
            Ok(DiagnosticsRecord {
                time: num(0)?,
                energy: num(1)?,
                entropy: num(2)?,
                h1: num(3)?,
                h2: num(4)?,
                relative_energy: if cells[5].is_empty() { None } else { Some(num(5)?) },
                masses: (6..6 + ns).map(num).collect::<Result<_>>()?,
                d_relax: num(6 + ns)?,
                d_visc: num(7 + ns)?,
                d_lin: num(8 + ns)?,
                d_quartic: num(9 + ns)?,
                d_grad: num(10 + ns)?,
                d_bohm: (11 + ns..11 + 2 * ns).map(num).collect::<Result<_>>()?,
                clips: cells[11 + 2 * ns].parse().map_err(|_| {
                    Error::Format(format!("line {lineno}: clips is not an integer"))
                })?,
            })
        })
        .collect()
}

pub fn read_diagnostics(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    parse_diagnostics(&fs::read_to_string(path)?)
}

/// A generic table: header plus rows of preformatted cells.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}
