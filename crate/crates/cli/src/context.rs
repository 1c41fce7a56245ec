//! Shared run state: the merged configuration, global knobs, and helpers
//! that turn config keys and flags into core objects. Precedence everywhere
//! is command-line flag, then environment (output directory and threads
//! only), then config file, then the built-in default.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use strichartz_core::{
    initial_field, read_field, Bump, EvolutionPlan, Geometry, InitKind, Lattice, Scenario, Sign,
    SpectralField, Symbol, TimeWindow, RNG_ID,
};

use crate::config::{parse_list, Config};
use crate::report::{Format, Report};

pub const OUT_ENV: &str = "STRICHARTZ_OUT_DIR";
pub const THREADS_ENV: &str = "STRICHARTZ_THREADS";

pub struct Ctx {
    pub cfg: Config,
    pub seed: u64,
    pub out: PathBuf,
    pub format: Format,
    pub threads: Option<usize>,
}

impl Ctx {
    pub fn new(
        config: Option<&Path>,
        seed: Option<u64>,
        out: Option<PathBuf>,
        threads: Option<usize>,
        format: Option<&str>,
    ) -> Result<Ctx> {
        let cfg = match config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        let seed = match seed {
            Some(s) => s,
            None => cfg.u64("run", "seed")?.unwrap_or(7),
        };
        let out = match out.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from)) {
            Some(p) => p,
            None => cfg.get("run", "out").map(PathBuf::from).unwrap_or_else(|| "reports".into()),
        };
        let threads = match threads {
            Some(t) => Some(t),
            None => match std::env::var(THREADS_ENV) {
                Ok(v) => {
                    Some(v.parse().with_context(|| format!("{THREADS_ENV} = {v:?}"))?)
                }
                Err(_) => cfg.usize("run", "threads")?,
            },
        };
        let format = match format.map(str::parse).transpose()? {
            Some(f) => f,
            None => cfg.get("run", "format").map(str::parse).transpose()?.unwrap_or(Format::Csv),
        };
        // fold the resolved globals back so the sidecar echo is re-runnable;
        // the output directory stays out since it does not shape results
        let mut cfg = cfg;
        cfg.set("run", "seed", seed);
        cfg.set("run", "format", if format == Format::Csv { "csv" } else { "json" });
        Ok(Ctx { cfg, seed, out, format, threads })
    }

    /// Report primed with the metadata every run carries; `reproducible from
    /// config + seed` is the contract, so both are echoed, the config both
    /// structured and as re-parseable text.
    pub fn report(&self, name: &str, columns: &[&str]) -> Report {
        let mut r = Report::new(name, columns);
        r.meta("command", name);
        r.meta("rng", RNG_ID);
        r.meta("seed", self.seed);
        r.meta("config", self.cfg.as_json());
        r.meta("configText", self.cfg.serialize());
        r
    }

    pub fn lambda(&self, flag: Option<f64>) -> Result<f64> {
        Ok(match flag {
            Some(l) => l,
            None => self.cfg.f64("lattice", "lambda")?.unwrap_or(1.0),
        })
    }

    pub fn len_x1(&self, flag: Option<f64>, lambda: f64) -> Result<f64> {
        Ok(match flag {
            Some(l) => l,
            None => self.cfg.f64("lattice", "len")?.unwrap_or(8.0 * lambda.max(1.0)),
        })
    }

    /// Cutoff list from a flag like `8,16` / `8..64` or `[lattice] n`.
    pub fn n_list(&self, flag: Option<&str>, default: &[f64]) -> Result<Vec<f64>> {
        match flag {
            Some(text) => parse_list(text).with_context(|| format!("--N {text:?}")),
            None => Ok(self.cfg.list_f64("lattice", "n")?.unwrap_or_else(|| default.to_vec())),
        }
    }

    /// Single cutoff commands reject accidental lists.
    pub fn n_single(&self, flag: Option<&str>, default: f64) -> Result<f64> {
        let ns = self.n_list(flag, &[default])?;
        match ns[..] {
            [n] => Ok(n),
            _ => bail!("expected one cutoff, got {ns:?}"),
        }
    }

    pub fn lattice(&self, n: f64, lambda: Option<f64>, len: Option<f64>, geometry: Geometry) -> Result<Lattice> {
        let lambda = self.lambda(lambda)?;
        let len = self.len_x1(len, lambda)?;
        Ok(Lattice::new(lambda, len, n, geometry)?)
    }

    pub fn scenario(&self, flag: Option<&str>) -> Result<Scenario> {
        let id = match flag {
            Some(s) => s.to_string(),
            None => self
                .cfg
                .get("run", "scenario")
                .unwrap_or("rt-hyperbolic")
                .to_string(),
        };
        id.parse().map_err(anyhow::Error::msg)
    }

    pub fn window(&self, t0: Option<f64>, t1: Option<f64>, defaults: (f64, f64)) -> Result<(f64, f64, Bump)> {
        let t0 = match t0 {
            Some(t) => t,
            None => self.cfg.f64("window", "t0")?.unwrap_or(defaults.0),
        };
        let t1 = match t1 {
            Some(t) => t,
            None => self.cfg.f64("window", "t1")?.unwrap_or(defaults.1),
        };
        let bump = match self.cfg.get("window", "bump") {
            Some(b) => parse_bump(b)?,
            None => Bump::Sharp,
        };
        Ok((t0, t1, bump))
    }

    /// Full-density plan over the window, respecting the sampling floor.
    pub fn plan(&self, lattice: Lattice, symbol: Symbol, t0: f64, t1: f64, bump: Bump) -> Result<EvolutionPlan> {
        Ok(EvolutionPlan::auto(lattice, symbol, t0, t1, bump)?)
    }

    /// Coarse plan for search loops; node count from config, default 257.
    pub fn coarse_plan(
        &self,
        lattice: Lattice,
        symbol: Symbol,
        t0: f64,
        t1: f64,
        samples: Option<usize>,
    ) -> Result<EvolutionPlan> {
        let samples = match samples {
            Some(s) => s,
            None => self.cfg.usize("window", "samples")?.unwrap_or(257),
        };
        let window = TimeWindow::sharp(t0, t1, samples)?;
        Ok(EvolutionPlan::coarse(lattice, symbol, window)?)
    }

    /// Initial data: an explicit field file wins over generated data. The
    /// file's own lattice is used, so lattice flags are rejected alongside
    /// `--in` rather than silently ignored.
    pub fn field_input(
        &self,
        input: Option<&Path>,
        lattice: Option<Lattice>,
        symbol: Symbol,
        init: Option<&str>,
        norm: Option<f64>,
    ) -> Result<SpectralField> {
        if let Some(path) = input {
            let field = read_field(path)?;
            if lattice.is_some_and(|l| l != *field.lattice()) {
                bail!("--in carries its own lattice; drop the lattice flags");
            }
            return Ok(field);
        }
        let lattice = lattice.expect("generated data needs a lattice");
        let kind = match init {
            Some(k) => parse_init(k)?,
            None => match self.cfg.get("init", "kind") {
                Some(k) => parse_init(k)?,
                None => InitKind::Gaussian,
            },
        };
        let mut field = initial_field(&lattice, symbol, lattice.cutoff(), kind, self.seed)?;
        let norm = match norm {
            Some(n) => n,
            None => self.cfg.f64("init", "norm")?.unwrap_or(1.0),
        };
        field.normalize(norm)?;
        Ok(field)
    }

    pub fn checks(&self) -> CheckSet {
        CheckSet { entries: self.cfg.section("check"), used: Vec::new() }
    }
}

pub fn parse_bump(s: &str) -> Result<Bump> {
    match s {
        "sharp" => Ok(Bump::Sharp),
        "smooth" => Ok(Bump::Smooth),
        other => bail!("unknown bump {other:?}, expected sharp or smooth"),
    }
}

pub fn parse_sign(s: &str) -> Result<Sign> {
    match s {
        "focusing" => Ok(Sign::Focusing),
        "defocusing" => Ok(Sign::Defocusing),
        other => bail!("unknown sign {other:?}, expected focusing or defocusing"),
    }
}

pub fn parse_init(s: &str) -> Result<InitKind> {
    match s {
        "gaussian" => Ok(InitKind::Gaussian),
        "row" => Ok(InitKind::RowProfile),
        "resonant" => Ok(InitKind::ResonantBand),
        other => bail!("unknown init {other:?}, expected gaussian, row or resonant"),
    }
}

/// The `[check]` section: requested acceptance bounds. Commands consume the
/// keys they understand; anything left over is a config error, so a typo
/// cannot silently disable a check.
pub struct CheckSet {
    entries: BTreeMap<String, String>,
    used: Vec<String>,
}

impl CheckSet {
    pub fn f64(&mut self, key: &str) -> Result<Option<f64>> {
        let Some(v) = self.entries.get(key) else { return Ok(None) };
        let parsed = v.parse().with_context(|| format!("[check] {key} = {v:?}: not a number"))?;
        self.used.push(key.to_string());
        Ok(Some(parsed))
    }

    pub fn flag(&mut self, key: &str) -> Result<bool> {
        let Some(v) = self.entries.get(key) else { return Ok(false) };
        let parsed = match v.as_str() {
            "true" | "yes" | "1" => true,
            "false" | "no" | "0" => false,
            other => bail!("[check] {key} = {other:?}: not a boolean"),
        };
        self.used.push(key.to_string());
        Ok(parsed)
    }

    /// Errors on unconsumed keys, then stamps the verdict on the report.
    pub fn finish(self, report: &mut Report, failures: &[String]) -> Result<bool> {
        let leftover: Vec<&String> =
            self.entries.keys().filter(|k| !self.used.contains(k)).collect();
        if !leftover.is_empty() {
            bail!("unknown [check] keys for this command: {leftover:?}");
        }
        report.meta("failures", failures);
        for f in failures {
            eprintln!("check failed: {f}");
        }
        Ok(failures.is_empty())
    }
}
