//! Field snapshots: a short text header followed by little-endian `f64`
//! arrays, species by species (`ρ_i`, then each component of `u_i`), every
//! array in row-major order.
//!
//! ```text
//! BTRELAX-SNAPSHOT 1
//! dim 2
//! n 64
//! n_species 2
//! time 2.5000000000000000e-1
//! end
//! <binary payload>
//! ```

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField, VectorField};
use crate::state::{SpeciesState, SystemState};

pub const SNAPSHOT_MAGIC: &str = "BTRELAX-SNAPSHOT 1";

pub fn snapshot_header(state: &SystemState) -> String {
    let g = state.grid();
    format!(
        "{SNAPSHOT_MAGIC}\ndim {}\nn {}\nn_species {}\ntime {:.16e}\nend\n",
        g.dim(),
        g.n(),
        state.n_species(),
        state.time
    )
}

pub fn encode_snapshot(state: &SystemState) -> Vec<u8> {
    let g = state.grid();
    let mut out = snapshot_header(state).into_bytes();
    out.reserve(8 * state.n_species() * (1 + g.dim()) * g.len());
    for s in &state.species {
        for v in s.rho.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for c in s.u.components() {
            for v in c.values() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

pub fn write_snapshot(state: &SystemState, path: &Path) -> Result<()> {
    fs::write(path, encode_snapshot(state))?;
    Ok(())
}

fn header_value<'a>(line: Option<&'a str>, key: &str) -> Result<&'a str> {
    let line = line.ok_or_else(|| Error::Format(format!("snapshot header ends before {key}")))?;
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(' '))
        .ok_or_else(|| Error::Format(format!("snapshot header: expected {key:?}, found {line:?}")))
}

fn header_int(line: Option<&str>, key: &str) -> Result<usize> {
    let v = header_value(line, key)?;
    v.parse()
        .map_err(|_| Error::Format(format!("snapshot header: {key} is not an integer: {v:?}")))
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<SystemState> {
    let marker = b"\nend\n";
    let end = bytes
        .windows(marker.len())
        .position(|w| w == marker)
        .ok_or_else(|| Error::Format("snapshot header has no end line".into()))?
        + marker.len();
    let header = std::str::from_utf8(&bytes[..end])
        .map_err(|_| Error::Format("snapshot header is not UTF-8".into()))?;
    let mut lines = header.lines();
    if lines.next() != Some(SNAPSHOT_MAGIC) {
        return Err(Error::Format(format!("snapshot does not start with {SNAPSHOT_MAGIC:?}")));
    }
    let dim = header_int(lines.next(), "dim")?;
    let n = header_int(lines.next(), "n")?;
    let n_species = header_int(lines.next(), "n_species")?;
    let tv = header_value(lines.next(), "time")?;
    let time: f64 = tv
        .parse()
        .map_err(|_| Error::Format(format!("snapshot header: time is not a number: {tv:?}")))?;
    let grid = GridSpec::new(dim, n).map_err(|e| Error::Format(format!("snapshot header: {e}")))?;
    if n_species == 0 {
        return Err(Error::Format("snapshot header: n_species must be ≥ 1".into()));
    }
    let payload = &bytes[end..];
    let expected = 8 * n_species * (1 + dim) * grid.len();
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "snapshot payload has {} bytes, header implies {expected}",
            payload.len()
        )));
    }
    let mut chunks = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
    let mut next_field = || -> Result<ScalarField> {
        let values: Vec<f64> = chunks.by_ref().take(grid.len()).collect();
        ScalarField::from_values(grid, values).map_err(|e| Error::Format(format!("snapshot payload: {e}")))
    };
    let species = (0..n_species)
        .map(|_| {
            let rho = next_field()?;
            let comps = (0..dim).map(|_| next_field()).collect::<Result<Vec<_>>>()?;
            Ok(SpeciesState {
                rho,
                u: VectorField::from_components(grid, comps)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    SystemState::new(time, species)
}

pub fn read_snapshot(path: &Path) -> Result<SystemState> {
    decode_snapshot(&fs::read(path)?)
}
