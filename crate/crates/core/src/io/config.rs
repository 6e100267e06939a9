//! TOML run configuration. Every key is checked; unknown keys are errors.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use toml::{Table, Value};

use crate::bt::{BtConfig, BtMode};
use crate::error::{Error, Result};
use crate::experiments::mms::{MmsStudy, Refinement};
use crate::grid::{GridSpec, TWO_THIRDS};
use crate::nsk::{NskConfig, Scheme};
use crate::state::{
    default_delta, CoefficientMatrix, DensitySpec, FourierMode, InitialConditionSpec, Params,
    SpeciesModes, VelocityModes, VelocityPolicy, DEFAULT_RHO_FLOOR,
};

#[derive(Clone, Debug, PartialEq)]
pub struct SolverSettings {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub diag_every: usize,
    pub clip_count_limit: u64,
    pub bt_mode: BtMode,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputSettings {
    pub dir: Option<PathBuf>,
    /// Write a field snapshot every this many diagnostics rows; 0 writes only
    /// the initial and final states.
    pub snapshot_every: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSettings {
    pub eps: Vec<f64>,
    pub t_end: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InequalitySettings {
    pub samples: usize,
    /// Also run at `2n` and report the change of the minimum.
    pub refine: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MmsStudyKind {
    NskImex1Temporal,
    NskImex2Temporal,
    NskSpatial,
    BtTemporal,
}

impl MmsStudyKind {
    pub const ALL: [MmsStudyKind; 4] = [
        MmsStudyKind::NskImex1Temporal,
        MmsStudyKind::NskImex2Temporal,
        MmsStudyKind::NskSpatial,
        MmsStudyKind::BtTemporal,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MmsStudyKind::NskImex1Temporal => "nsk_imex1_temporal",
            MmsStudyKind::NskImex2Temporal => "nsk_imex2_temporal",
            MmsStudyKind::NskSpatial => "nsk_spatial",
            MmsStudyKind::BtTemporal => "bt_temporal",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn default_study(&self) -> MmsStudy {
        match self {
            MmsStudyKind::NskImex1Temporal => MmsStudy::nsk_temporal(Scheme::Imex1),
            MmsStudyKind::NskImex2Temporal => MmsStudy::nsk_temporal(Scheme::Imex2),
            MmsStudyKind::NskSpatial => MmsStudy::nsk_spatial(),
            MmsStudyKind::BtTemporal => MmsStudy::bt_temporal(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MmsSettings {
    pub studies: Vec<MmsStudyKind>,
    /// Replaces the time steps of temporal studies.
    pub dts: Option<Vec<f64>>,
    /// Replaces the resolutions of spatial studies.
    pub ns: Option<Vec<usize>>,
}

impl MmsSettings {
    pub fn studies(&self) -> Vec<(MmsStudyKind, MmsStudy)> {
        self.studies
            .iter()
            .map(|kind| {
                let mut s = kind.default_study();
                match &mut s.refinement {
                    Refinement::Temporal { dts, .. } => {
                        if let Some(d) = &self.dts {
                            *dts = d.clone();
                        }
                    }
                    Refinement::Spatial { ns, .. } => {
                        if let Some(n) = &self.ns {
                            *ns = n.clone();
                        }
                    }
                }
                (kind.clone(), s)
            })
            .collect()
    }
}

impl Default for MmsSettings {
    fn default() -> Self {
        Self {
            studies: MmsStudyKind::ALL.to_vec(),
            dts: None,
            ns: None,
        }
    }
}

/// Validated contents of a configuration file.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub params: Params,
    pub ic: InitialConditionSpec,
    pub solver: SolverSettings,
    pub output: OutputSettings,
    pub sweep: Option<SweepSettings>,
    pub mms: Option<MmsSettings>,
    pub inequality: Option<InequalitySettings>,
}

impl RunConfig {
    pub fn nsk_config(&self) -> NskConfig {
        NskConfig {
            scheme: self.solver.scheme,
            diag_every: self.solver.diag_every,
            clip_count_limit: self.solver.clip_count_limit,
            ..NskConfig::new(self.grid, self.params.clone(), self.solver.dt, self.solver.t_end)
        }
    }

    pub fn bt_config(&self) -> BtConfig {
        BtConfig {
            mode: self.solver.bt_mode,
            diag_every: self.solver.diag_every,
            clip_count_limit: self.solver.clip_count_limit,
            ..BtConfig::new(self.grid, self.params.clone(), self.solver.dt, self.solver.t_end)
        }
    }
}

/// A table whose keys must all be consumed.
struct Section<'a> {
    name: String,
    table: &'a Table,
    used: BTreeSet<String>,
}

impl<'a> Section<'a> {
    fn new(name: impl Into<String>, table: &'a Table) -> Self {
        Self {
            name: name.into(),
            table,
            used: BTreeSet::new(),
        }
    }

    fn key(&self, k: &str) -> String {
        format!("{}.{k}", self.name)
    }

    fn raw(&mut self, k: &str) -> Option<&'a Value> {
        self.used.insert(k.to_string());
        self.table.get(k)
    }

    fn missing(&self, k: &str) -> Error {
        Error::Config(format!("missing required key {}", self.key(k)))
    }

    fn mismatch(&self, k: &str, expected: &str) -> Error {
        Error::Config(format!("type mismatch: {} must be {expected}", self.key(k)))
    }

    fn f64_opt(&mut self, k: &str) -> Result<Option<f64>> {
        match self.raw(k) {
            None => Ok(None),
            Some(v) => as_f64(v).map(Some).ok_or_else(|| self.mismatch(k, "a number")),
        }
    }

    fn f64_req(&mut self, k: &str) -> Result<f64> {
        self.f64_opt(k)?.ok_or_else(|| self.missing(k))
    }

    fn int_opt(&mut self, k: &str) -> Result<Option<i64>> {
        match self.raw(k) {
            None => Ok(None),
            Some(v) => v
                .as_integer()
                .map(Some)
                .ok_or_else(|| self.mismatch(k, "an integer")),
        }
    }

    fn usize_opt(&mut self, k: &str) -> Result<Option<usize>> {
        match self.int_opt(k)? {
            None => Ok(None),
            Some(v) if v >= 0 => Ok(Some(v as usize)),
            Some(v) => Err(Error::Config(format!("{} must be ≥ 0 (got {v})", self.key(k)))),
        }
    }

    fn usize_req(&mut self, k: &str) -> Result<usize> {
        self.usize_opt(k)?.ok_or_else(|| self.missing(k))
    }

    fn bool_opt(&mut self, k: &str) -> Result<Option<bool>> {
        match self.raw(k) {
            None => Ok(None),
            Some(v) => v.as_bool().map(Some).ok_or_else(|| self.mismatch(k, "a boolean")),
        }
    }

    fn str_opt(&mut self, k: &str) -> Result<Option<&'a str>> {
        match self.raw(k) {
            None => Ok(None),
            Some(v) => v.as_str().map(Some).ok_or_else(|| self.mismatch(k, "a string")),
        }
    }

    fn f64_list_opt(&mut self, k: &str) -> Result<Option<Vec<f64>>> {
        match self.raw(k) {
            None => Ok(None),
            Some(v) => {
                let arr = v.as_array().ok_or_else(|| self.mismatch(k, "an array of numbers"))?;
                arr.iter()
                    .map(|x| as_f64(x).ok_or_else(|| self.mismatch(k, "an array of numbers")))
                    .collect::<Result<Vec<_>>>()
                    .map(Some)
            }
        }
    }

    fn f64_list_req(&mut self, k: &str) -> Result<Vec<f64>> {
        self.f64_list_opt(k)?.ok_or_else(|| self.missing(k))
    }

    fn int_list_opt(&mut self, k: &str) -> Result<Option<Vec<i64>>> {
        match self.raw(k) {
            None => Ok(None),
            Some(v) => {
                let arr = v.as_array().ok_or_else(|| self.mismatch(k, "an array of integers"))?;
                arr.iter()
                    .map(|x| x.as_integer().ok_or_else(|| self.mismatch(k, "an array of integers")))
                    .collect::<Result<Vec<_>>>()
                    .map(Some)
            }
        }
    }

    fn tables(&mut self, k: &str) -> Result<Option<Vec<&'a Table>>> {
        match self.raw(k) {
            None => Ok(None),
            Some(v) => {
                let arr = v.as_array().ok_or_else(|| self.mismatch(k, "an array of tables"))?;
                arr.iter()
                    .map(|x| x.as_table().ok_or_else(|| self.mismatch(k, "an array of tables")))
                    .collect::<Result<Vec<_>>>()
                    .map(Some)
            }
        }
    }

    fn finish(self) -> Result<()> {
        for k in self.table.keys() {
            if !self.used.contains(k) {
                return Err(Error::Config(format!("unknown key {}", self.key(k))));
            }
        }
        Ok(())
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn constraint(key: &str, what: &str, got: impl std::fmt::Display) -> Error {
    Error::Config(format!("{key} must be {what} (got {got})"))
}

fn section<'a>(root: &'a Table, used: &mut BTreeSet<String>, name: &str) -> Result<Option<&'a Table>> {
    used.insert(name.to_string());
    match root.get(name) {
        None => Ok(None),
        Some(Value::Table(t)) => Ok(Some(t)),
        Some(_) => Err(Error::Config(format!("type mismatch: [{name}] must be a table"))),
    }
}

fn parse_grid(t: Option<&Table>) -> Result<GridSpec> {
    let empty = Table::new();
    let mut s = Section::new("grid", t.unwrap_or(&empty));
    let dim = s.usize_req("dim")?;
    let n = s.usize_req("n")?;
    let frac = s.f64_opt("dealias_fraction")?.unwrap_or(TWO_THIRDS);
    s.finish()?;
    if !(1..=3).contains(&dim) {
        return Err(constraint("grid.dim", "1, 2 or 3", dim));
    }
    if n < 8 || n % 2 != 0 {
        return Err(constraint("grid.n", "even and ≥ 8", n));
    }
    if !(frac > 0.0 && frac <= 1.0) {
        return Err(constraint("grid.dealias_fraction", "in (0, 1]", frac));
    }
    GridSpec::new(dim, n)?.with_dealias_fraction(frac)
}

fn parse_params(t: Option<&Table>) -> Result<Params> {
    let empty = Table::new();
    let mut s = Section::new("params", t.unwrap_or(&empty));
    let eps = s.f64_req("eps")?;
    let k = s.f64_list_req("k")?;
    let delta = s.f64_opt("delta")?;
    let rho_floor = s.f64_opt("rho_floor")?.unwrap_or(DEFAULT_RHO_FLOOR);
    let rows = match s.raw("a_matrix") {
        None => None,
        Some(v) => {
            let bad = || Error::Config("type mismatch: params.a_matrix must be an array of number arrays".into());
            let arr = v.as_array().ok_or_else(bad)?;
            Some(
                arr.iter()
                    .map(|r| {
                        r.as_array()
                            .ok_or_else(bad)?
                            .iter()
                            .map(|x| as_f64(x).ok_or_else(bad))
                            .collect::<Result<Vec<f64>>>()
                    })
                    .collect::<Result<Vec<_>>>()?,
            )
        }
    };
    s.finish()?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(constraint("params.eps", "> 0", eps));
    }
    if k.is_empty() {
        return Err(Error::Config("params.k must list at least one species".into()));
    }
    if let Some(bad) = k.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(constraint("params.k", "> 0 in every entry", bad));
    }
    let delta = delta.unwrap_or_else(|| default_delta(eps));
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(constraint("params.delta", "≥ 0", delta));
    }
    if !(rho_floor > 0.0 && rho_floor.is_finite()) {
        return Err(constraint("params.rho_floor", "> 0", rho_floor));
    }
    let a_matrix = match rows {
        None => None,
        Some(r) => Some(
            CoefficientMatrix::from_rows(&r).map_err(|e| Error::Config(format!("params.a_matrix: {e}")))?,
        ),
    };
    let p = Params {
        eps,
        delta,
        k,
        a_matrix,
        rho_floor,
    };
    p.validate().map_err(|e| Error::Config(format!("params: {e}")))?;
    Ok(p)
}

fn parse_modes(owner: &str, t: &Table) -> Result<Vec<FourierMode>> {
    let mut s = Section::new(owner, t);
    let list = s.tables("modes")?.unwrap_or_default();
    s.finish()?;
    list.into_iter()
        .enumerate()
        .map(|(j, m)| {
            let mut ms = Section::new(format!("{owner}.modes[{j}]"), m);
            let wavevector = ms.int_list_opt("k")?.ok_or_else(|| ms.missing("k"))?;
            let cos_amp = ms.f64_opt("cos")?.unwrap_or(0.0);
            let sin_amp = ms.f64_opt("sin")?.unwrap_or(0.0);
            ms.finish()?;
            Ok(FourierMode {
                wavevector,
                cos_amp,
                sin_amp,
            })
        })
        .collect()
}

fn parse_ic(t: Option<&Table>, n_species: usize) -> Result<InitialConditionSpec> {
    let empty = Table::new();
    let mut s = Section::new("ic", t.unwrap_or(&empty));
    let kind = s.str_opt("kind")?.unwrap_or("cosine");
    let velocity = match s.str_opt("velocity")?.unwrap_or("well_prepared") {
        "zero" => VelocityPolicy::Zero,
        "well_prepared" => VelocityPolicy::WellPrepared,
        "explicit" => VelocityPolicy::Explicit,
        other => return Err(constraint("ic.velocity", "zero, well_prepared or explicit", other)),
    };
    let levels = s.f64_list_opt("levels")?.unwrap_or_else(|| vec![1.0; n_species]);
    let amplitude = s.f64_opt("amplitude")?;
    let species_tables = s.tables("species")?;
    let vel_tables = s.tables("velocity_modes")?;
    s.finish()?;

    let density = match kind {
        "constant" => DensitySpec::Constant { levels },
        "cosine" => DensitySpec::Cosine {
            levels,
            amplitude: amplitude.unwrap_or(0.3),
        },
        "modes" => {
            let tables = species_tables.ok_or_else(|| {
                Error::Config("missing required key ic.species (needed for kind = \"modes\")".into())
            })?;
            DensitySpec::Modes(
                tables
                    .into_iter()
                    .enumerate()
                    .map(|(i, st)| {
                        let name = format!("ic.species[{i}]");
                        let mut ss = Section::new(name.clone(), st);
                        let mean = ss.f64_opt("mean")?.ok_or_else(|| ss.missing("mean"))?;
                        ss.raw("modes");
                        ss.finish()?;
                        let mut only_modes = st.clone();
                        only_modes.remove("mean");
                        Ok(SpeciesModes {
                            mean,
                            modes: parse_modes(&name, &only_modes)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
            )
        }
        other => return Err(constraint("ic.kind", "constant, cosine or modes", other)),
    };
    let velocity_modes = match vel_tables {
        None => Vec::new(),
        Some(tables) => tables
            .into_iter()
            .enumerate()
            .map(|(i, vt)| {
                let name = format!("ic.velocity_modes[{i}]");
                let mut vs = Section::new(name.clone(), vt);
                let species = vs.usize_opt("species")?.ok_or_else(|| vs.missing("species"))?;
                let component = vs.usize_opt("component")?.unwrap_or(0);
                vs.raw("modes");
                vs.finish()?;
                if species == 0 {
                    return Err(constraint(&format!("{name}.species"), "≥ 1", 0));
                }
                let mut only_modes = vt.clone();
                only_modes.remove("species");
                only_modes.remove("component");
                Ok(VelocityModes {
                    species: species - 1,
                    component,
                    modes: parse_modes(&name, &only_modes)?,
                })
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let spec = InitialConditionSpec {
        density,
        velocity,
        velocity_modes,
    };
    if spec.n_species() != n_species {
        return Err(Error::Config(format!(
            "ic describes {} species but params.k has {n_species}",
            spec.n_species()
        )));
    }
    Ok(spec)
}

fn parse_solver(t: Option<&Table>) -> Result<SolverSettings> {
    let empty = Table::new();
    let mut s = Section::new("solver", t.unwrap_or(&empty));
    let dt = s.f64_req("dt")?;
    let t_end = s.f64_req("t_end")?;
    let scheme = match s.str_opt("scheme")?.unwrap_or("imex1") {
        "imex1" => Scheme::Imex1,
        "imex2" => Scheme::Imex2,
        other => return Err(constraint("solver.scheme", "imex1 or imex2", other)),
    };
    let bt_mode = match s.str_opt("mode")?.unwrap_or("rank_one") {
        "rank_one" => BtMode::RankOne,
        "general_matrix" => BtMode::GeneralMatrix,
        other => return Err(constraint("solver.mode", "rank_one or general_matrix", other)),
    };
    let diag_every = s.usize_opt("diag_every")?.unwrap_or(1);
    let clip_count_limit = s.usize_opt("clip_count_limit")?.unwrap_or(1000) as u64;
    s.finish()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(constraint("solver.dt", "> 0", dt));
    }
    if !(t_end >= dt && t_end.is_finite()) {
        return Err(constraint("solver.t_end", "≥ solver.dt", t_end));
    }
    if diag_every == 0 {
        return Err(constraint("solver.diag_every", "≥ 1", 0));
    }
    Ok(SolverSettings {
        dt,
        t_end,
        scheme,
        diag_every,
        clip_count_limit,
        bt_mode,
    })
}

fn parse_output(t: Option<&Table>) -> Result<OutputSettings> {
    let empty = Table::new();
    let mut s = Section::new("output", t.unwrap_or(&empty));
    let dir = s.str_opt("dir")?.map(PathBuf::from);
    let snapshot_every = s.usize_opt("snapshot_every")?.unwrap_or(0);
    let seed = s.usize_opt("seed")?.unwrap_or(0) as u64;
    s.finish()?;
    Ok(OutputSettings {
        dir,
        snapshot_every,
        seed,
    })
}

fn parse_sweep(t: &Table, default_t_end: f64) -> Result<SweepSettings> {
    let mut s = Section::new("sweep", t);
    let eps = s.f64_list_req("eps")?;
    let t_end = s.f64_opt("t_end")?.unwrap_or(default_t_end);
    s.finish()?;
    if eps.len() < 2 {
        return Err(constraint("sweep.eps", "a list of ≥ 2 values", eps.len()));
    }
    if eps.iter().any(|&e| !(e > 0.0)) || eps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Config(
            "sweep.eps must be positive and strictly decreasing".into(),
        ));
    }
    if !(t_end > 0.0) {
        return Err(constraint("sweep.t_end", "> 0", t_end));
    }
    Ok(SweepSettings { eps, t_end })
}

fn parse_mms(t: &Table) -> Result<MmsSettings> {
    let mut s = Section::new("mms", t);
    let studies = match s.raw("studies") {
        None => MmsStudyKind::ALL.to_vec(),
        Some(v) => {
            let bad = || Error::Config("type mismatch: mms.studies must be an array of strings".into());
            v.as_array()
                .ok_or_else(bad)?
                .iter()
                .map(|x| {
                    let name = x.as_str().ok_or_else(bad)?;
                    MmsStudyKind::parse(name).ok_or_else(|| {
                        constraint(
                            "mms.studies",
                            "drawn from nsk_imex1_temporal, nsk_imex2_temporal, nsk_spatial, bt_temporal",
                            name,
                        )
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    let dts = s.f64_list_opt("dts")?;
    let ns = match s.int_list_opt("ns")? {
        None => None,
        Some(v) => Some(
            v.into_iter()
                .map(|n| {
                    if n >= 8 && n % 2 == 0 {
                        Ok(n as usize)
                    } else {
                        Err(constraint("mms.ns", "even and ≥ 8 in every entry", n))
                    }
                })
                .collect::<Result<Vec<_>>>()?,
        ),
    };
    s.finish()?;
    if let Some(d) = &dts {
        if d.len() < 2 || d.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::Config("mms.dts must list ≥ 2 positive steps".into()));
        }
    }
    if let Some(n) = &ns {
        if n.len() < 2 {
            return Err(Error::Config("mms.ns must list ≥ 2 resolutions".into()));
        }
    }
    Ok(MmsSettings { studies, dts, ns })
}

fn parse_inequality(t: &Table) -> Result<InequalitySettings> {
    let mut s = Section::new("inequality", t);
    let samples = s.usize_opt("samples")?.unwrap_or(100);
    let refine = s.bool_opt("refine")?.unwrap_or(true);
    s.finish()?;
    if samples == 0 {
        return Err(constraint("inequality.samples", "≥ 1", 0));
    }
    Ok(InequalitySettings { samples, refine })
}

/// Parse configuration text.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let root: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(format!("malformed TOML: {e}")))?;
    let mut used = BTreeSet::new();
    let grid = parse_grid(section(&root, &mut used, "grid")?)?;
    let params = parse_params(section(&root, &mut used, "params")?)?;
    let ic = parse_ic(section(&root, &mut used, "ic")?, params.n_species())?;
    let solver = parse_solver(section(&root, &mut used, "solver")?)?;
    let output = parse_output(section(&root, &mut used, "output")?)?;
    let sweep = section(&root, &mut used, "sweep")?
        .map(|t| parse_sweep(t, solver.t_end))
        .transpose()?;
    let mms = section(&root, &mut used, "mms")?.map(parse_mms).transpose()?;
    let inequality = section(&root, &mut used, "inequality")?
        .map(parse_inequality)
        .transpose()?;
    for k in root.keys() {
        if !used.contains(k) {
            return Err(Error::Config(format!("unknown key {k}")));
        }
    }
    Ok(RunConfig {
        grid,
        params,
        ic,
        solver,
        output,
        sweep,
        mms,
        inequality,
    })
}

/// Read and parse a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Config(format!("cannot read {}: {e}", path.display()))
    })?;
    parse_config_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "
[grid]
dim = 1
n = 64
[params]
eps = 0.1
k = [1, 1]
[solver]
dt = 1e-3
t_end = 0.1
";

    #[test]
    fn minimal_file_fills_defaults() {
        let c = parse_config_str(MINIMAL).unwrap();
        assert_eq!(c.grid.n(), 64);
        assert_eq!(c.params.delta, 1e-3);
        assert_eq!(c.params.rho_floor, 1e-10);
        assert_eq!(c.solver.scheme, Scheme::Imex1);
        assert_eq!(c.ic.velocity, VelocityPolicy::WellPrepared);
        assert!(c.sweep.is_none());
    }

    #[test]
    fn negative_eps_names_key() {
        let err = parse_config_str(&MINIMAL.replace("eps = 0.1", "eps = -1"))
            .unwrap_err()
            .to_string();
        assert!(err.contains("params.eps must be > 0"), "{err}");
    }

    #[test]
    fn unknown_key_rejected() {
        let err = parse_config_str(&MINIMAL.replace("dt = 1e-3", "dt = 1e-3\ndtt = 2"))
            .unwrap_err()
            .to_string();
        assert!(err.contains("unknown key solver.dtt"), "{err}");
        let err = parse_config_str(&format!("{MINIMAL}\n[extra]\nx = 1\n"))
            .unwrap_err()
            .to_string();
        assert!(err.contains("unknown key extra"), "{err}");
    }

    #[test]
    fn missing_and_mistyped_keys() {
        let err = parse_config_str(&MINIMAL.replace("n = 64", "")).unwrap_err().to_string();
        assert!(err.contains("missing required key grid.n"), "{err}");
        let err = parse_config_str(&MINIMAL.replace("dt = 1e-3", "dt = \"x\""))
            .unwrap_err()
            .to_string();
        assert!(err.contains("solver.dt must be a number"), "{err}");
    }

    #[test]
    fn modes_and_sections() {
        let text = format!(
            "{MINIMAL}
[ic]
kind = \"modes\"
velocity = \"explicit\"
[[ic.species]]
mean = 1.0
modes = [{{ k = [1], cos = 0.2 }}]
[[ic.species]]
mean = 2.0
[[ic.velocity_modes]]
species = 2
modes = [{{ k = [2], sin = 0.1 }}]
[sweep]
eps = [0.2, 0.1]
[mms]
studies = [\"bt_temporal\"]
dts = [0.01, 0.005]
[inequality]
samples = 5
"
        );
        let c = parse_config_str(&text).unwrap();
        match &c.ic.density {
            DensitySpec::Modes(m) => {
                assert_eq!(m.len(), 2);
                assert_eq!(m[0].modes[0].cos_amp, 0.2);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(c.ic.velocity_modes[0].species, 1);
        assert_eq!(c.sweep.unwrap().t_end, 0.1);
        let mms = c.mms.unwrap();
        assert_eq!(mms.studies, vec![MmsStudyKind::BtTemporal]);
        assert_eq!(c.inequality.unwrap().samples, 5);
        let bad = text.replace("cos = 0.2", "cos = 0.2, phase = 1");
        assert!(parse_config_str(&bad).unwrap_err().to_string().contains("unknown key"));
    }
}
