//! Trajectory commands: the linear flow with its space-time norm, the
//! split-step cubic solve with field checkpoints, and the Picard tower.

use std::path::PathBuf;

use anyhow::{bail, Result};
use strichartz_core::{
    default_dt, evolve, l4_space_time_norm, picard_iterate, split_step, strichartz_ratio,
    write_field, EvolutionPlan, Geometry, GridEngine, MassSample, PicardOptions, Sign, Symbol,
    TimeWindow,
};

use crate::context::{parse_sign, Ctx};
use crate::report::cell;

fn parse_geometry(ctx: &Ctx) -> Result<Geometry> {
    match ctx.cfg.get("lattice", "geometry") {
        Some(g) => g.parse().map_err(anyhow::Error::msg),
        None => Ok(Geometry::Rt),
    }
}

#[derive(clap::Args)]
pub struct EvolveArgs {
    /// Phase symbol: hyperbolic, elliptic or mixed
    #[arg(long)]
    pub symbol: Option<String>,
    /// Frequency cutoff
    #[arg(long = "N")]
    pub n: Option<String>,
    /// Circle circumference; second-axis frequencies land on (1/lambda)Z
    #[arg(long)]
    pub lambda: Option<f64>,
    /// First-axis box length (default 8 * max(lambda, 1))
    #[arg(long)]
    pub len: Option<f64>,
    /// Window start (default 0)
    #[arg(long)]
    pub t0: Option<f64>,
    /// Window end (default 1)
    #[arg(long)]
    pub t1: Option<f64>,
    /// Initial data from a field file (lattice flags must be absent)
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Generated data shape: gaussian, row or resonant
    #[arg(long)]
    pub init: Option<String>,
    /// Initial L2 norm after rescaling
    #[arg(long)]
    pub norm: Option<f64>,
    /// Report every stride-th node
    #[arg(long)]
    pub stride: Option<usize>,
}

pub fn evolve_cmd(ctx: &Ctx, args: &EvolveArgs) -> Result<bool> {
    let symbol: Symbol = match args.symbol.as_deref().or(ctx.cfg.get("run", "symbol")) {
        Some(s) => s.parse().map_err(anyhow::Error::msg)?,
        None => Symbol::Hyperbolic,
    };
    let lattice = if args.input.is_some() {
        None
    } else {
        let n = ctx.n_single(args.n.as_deref(), 8.0)?;
        Some(ctx.lattice(n, args.lambda, args.len, parse_geometry(ctx)?)?)
    };
    let field =
        ctx.field_input(args.input.as_deref(), lattice, symbol, args.init.as_deref(), args.norm)?;
    let lattice = *field.lattice();

    let (t0, t1, bump) = ctx.window(args.t0, args.t1, (0.0, 1.0))?;
    let plan = ctx.plan(lattice, symbol, t0, t1, bump)?;
    let window = *plan.window();
    let stride = match args.stride {
        Some(s) => s.max(1),
        None => (window.samples() / 64).max(1),
    };

    let mut report = ctx.report("evolve", &["node", "t", "mass", "l4Slice"]);
    report.meta("symbol", symbol.to_string());
    report.meta("samples", window.samples());

    let area = lattice.box_area();
    let mut eng = GridEngine::for_lattice(lattice);
    let (m1, m2) = eng.dims();
    let slice_scale = area * area * area * (m1 * m2) as f64;
    for i in (0..window.samples()).step_by(stride) {
        let t = window.node(i);
        let ut = evolve(&field, symbol, t);
        eng.synth(ut.coef());
        let l4 = (eng.quartic_sum() / slice_scale).powf(0.25);
        let mass = ut.l2_norm().powi(2);
        report.row(vec![cell(i), cell(t), cell(mass), cell(l4)]);
    }

    let l4 = l4_space_time_norm(&plan, &field)?;
    let ratio = strichartz_ratio(&plan, &field)?;
    report.meta("l4SpaceTime", l4);
    report.meta("ratio", ratio);

    std::fs::create_dir_all(&ctx.out)?;
    let final_path = ctx.out.join("evolve-final.field");
    write_field(&final_path, &evolve(&field, symbol, t1))?;
    report.meta("finalField", final_path.display().to_string());

    let mut checks = ctx.checks();
    let mut failures = Vec::new();
    if let Some(hi) = checks.f64("max_ratio")? {
        if ratio > hi {
            failures.push(format!("ratio {ratio} above {hi}"));
        }
    }
    if let Some(lo) = checks.f64("min_ratio")? {
        if ratio < lo {
            failures.push(format!("ratio {ratio} below {lo}"));
        }
    }
    let ok = checks.finish(&mut report, &failures)?;
    report.write(&ctx.out, ctx.format)?;
    Ok(ok)
}

#[derive(clap::Args)]
pub struct NlsArgs {
    /// focusing or defocusing
    #[arg(long)]
    pub sign: Option<String>,
    /// Frequency cutoff
    #[arg(long = "N")]
    pub n: Option<String>,
    /// Circle circumference; second-axis frequencies land on (1/lambda)Z
    #[arg(long)]
    pub lambda: Option<f64>,
    /// First-axis box length (default 8 * max(lambda, 1))
    #[arg(long)]
    pub len: Option<f64>,
    /// Initial L2 norm after rescaling
    #[arg(long)]
    pub norm: Option<f64>,
    /// Total integration time
    #[arg(long)]
    pub duration: Option<f64>,
    /// Step cap; the default ties it to the fastest linear phase
    #[arg(long)]
    pub dt: Option<f64>,
    /// Mass-series stride in steps
    #[arg(long)]
    pub stride: Option<usize>,
    /// Write a field checkpoint every this many steps (0 = off)
    #[arg(long)]
    pub checkpoint: Option<usize>,
    /// Initial data from a field file (lattice flags must be absent)
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Generated data shape: gaussian, row or resonant
    #[arg(long)]
    pub init: Option<String>,
}

/// The solver steps by `dt` regardless of window nodes, so segments carry
/// minimal two-node windows; `coarse` skips the linear sampling floor.
fn segment_plan(lattice: strichartz_core::Lattice, symbol: Symbol, t0: f64, t1: f64) -> Result<EvolutionPlan> {
    Ok(EvolutionPlan::coarse(lattice, symbol, TimeWindow::sharp(t0, t1, 2)?)?)
}

pub fn nls_cmd(ctx: &Ctx, args: &NlsArgs) -> Result<bool> {
    let sign = match args.sign.as_deref().or(ctx.cfg.get("nls", "sign")) {
        Some(s) => parse_sign(s)?,
        None => Sign::Defocusing,
    };
    let symbol = Symbol::Hyperbolic;
    let lattice = if args.input.is_some() {
        None
    } else {
        let n = ctx.n_single(args.n.as_deref(), 16.0)?;
        Some(ctx.lattice(n, args.lambda, args.len, parse_geometry(ctx)?)?)
    };
    let norm = match args.norm {
        Some(x) => Some(x),
        None => ctx.cfg.f64("nls", "norm")?.or(Some(0.1)),
    };
    let phi = ctx.field_input(args.input.as_deref(), lattice, symbol, args.init.as_deref(), norm)?;
    let lattice = *phi.lattice();

    let duration = match args.duration {
        Some(d) => d,
        None => ctx.cfg.f64("nls", "duration")?.unwrap_or(1.0),
    };
    if !(duration > 0.0 && duration.is_finite()) {
        bail!("duration must be positive, got {duration}");
    }
    let cap = default_dt(&lattice);
    let req = match args.dt {
        Some(d) => d,
        None => ctx.cfg.f64("nls", "dt")?.unwrap_or(cap),
    };
    let steps = ((duration / req - 1e-9).ceil() as usize).max(1);
    let dt = duration / steps as f64;
    let checkpoint = match args.checkpoint {
        Some(c) => c,
        None => ctx.cfg.usize("nls", "checkpoint")?.unwrap_or(0),
    };
    let stride = match args.stride {
        Some(s) => Some(s.max(1)),
        None => ctx.cfg.usize("nls", "stride")?,
    };

    let mut report = ctx.report("nls", &["step", "t", "mass", "drift"]);
    report.meta("sign", if sign == Sign::Focusing { "focusing" } else { "defocusing" });
    report.meta("dt", dt);
    report.meta("steps", steps);
    report.meta("scheme", "strang");
    std::fs::create_dir_all(&ctx.out)?;

    // segment boundaries in steps; one segment when checkpoints are off
    let seg = if checkpoint == 0 { steps } else { checkpoint };
    let mut state = phi;
    let mut samples: Vec<MassSample> = Vec::new();
    let mut l4_fourth = 0.0;
    let mut max_drift = 0.0f64;
    let mut aborted = false;
    let mut checkpoints = Vec::new();
    let mut done = 0;
    while done < steps && !aborted {
        let take = seg.min(steps - done);
        let (a, b) = (done as f64 * dt, (done + take) as f64 * dt);
        let plan = segment_plan(lattice, symbol, a, b)?;
        let run = split_step(&plan, sign, &state, Some(dt * (1.0 + 1e-12)), stride)?;
        for s in &run.mass_series {
            if samples.last().is_none_or(|p| s.time > p.time) {
                samples.push(*s);
            }
        }
        if let Some(l4) = run.l4_window {
            l4_fourth += l4.powi(4);
        }
        max_drift = max_drift.max(run.max_drift);
        aborted = run.aborted;
        state = run.final_field;
        done += run.completed.min(take);
        if aborted {
            break;
        }
        if checkpoint > 0 {
            let path = ctx.out.join(format!("nls-checkpoint-{done:06}.field"));
            write_field(&path, &state)?;
            checkpoints.push(path.display().to_string());
        }
    }

    let mass0 = samples.first().map_or(0.0, |s| s.mass);
    for s in &samples {
        let drift = if mass0 > 0.0 { (s.mass - mass0) / mass0 } else { 0.0 };
        let step = (s.time / dt).round() as i64;
        report.row(vec![cell(step), cell(s.time), cell(s.mass), cell(drift)]);
    }
    report.meta("maxDrift", max_drift);
    report.meta("l4Window", (!aborted).then(|| l4_fourth.powf(0.25)));
    report.meta("aborted", aborted);
    report.meta("checkpoints", &checkpoints);

    let final_path = ctx.out.join("nls-final.field");
    write_field(&final_path, &state)?;
    report.meta("finalField", final_path.display().to_string());

    let mut checks = ctx.checks();
    let mut failures = Vec::new();
    if aborted {
        failures.push(format!("blow-up guard tripped after {done} steps"));
    }
    if let Some(bound) = checks.f64("max_mass_drift")? {
        if max_drift > bound {
            failures.push(format!("mass drift {max_drift} exceeds {bound}"));
        }
    }
    let ok = checks.finish(&mut report, &failures)?;
    report.write(&ctx.out, ctx.format)?;
    Ok(ok)
}

#[derive(clap::Args)]
pub struct PicardArgs {
    /// Frequency cutoff
    #[arg(long = "N")]
    pub n: Option<String>,
    /// Circle circumference; second-axis frequencies land on (1/lambda)Z
    #[arg(long)]
    pub lambda: Option<f64>,
    /// First-axis box length (default 8 * max(lambda, 1))
    #[arg(long)]
    pub len: Option<f64>,
    /// Initial L2 norm after rescaling
    #[arg(long)]
    pub norm: Option<f64>,
    /// focusing or defocusing
    #[arg(long)]
    pub sign: Option<String>,
    /// Tower depth
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Smallness gate on the initial norm
    #[arg(long)]
    pub delta: Option<f64>,
    /// Time nodes of the window
    #[arg(long)]
    pub samples: Option<usize>,
    /// Skip the split-step comparison run
    #[arg(long)]
    pub no_split: bool,
}

pub fn picard_cmd(ctx: &Ctx, args: &PicardArgs) -> Result<bool> {
    let sign = match args.sign.as_deref().or(ctx.cfg.get("nls", "sign")) {
        Some(s) => parse_sign(s)?,
        None => Sign::Defocusing,
    };
    let symbol = Symbol::Hyperbolic;
    let n = ctx.n_single(args.n.as_deref(), 16.0)?;
    let lattice = ctx.lattice(n, args.lambda, args.len, parse_geometry(ctx)?)?;
    let norm = match args.norm {
        Some(x) => Some(x),
        None => ctx.cfg.f64("picard", "norm")?.or(Some(0.05)),
    };
    let phi = ctx.field_input(None, Some(lattice), symbol, None, norm)?;

    let (t0, t1, _) = ctx.window(None, None, (-0.5, 0.5))?;
    let samples = match args.samples {
        Some(s) => s,
        None => ctx.cfg.usize("picard", "samples")?.unwrap_or(513),
    };
    let plan = EvolutionPlan::coarse(lattice, symbol, TimeWindow::sharp(t0, t1, samples)?)?;

    let opts = PicardOptions {
        max_iter: match args.max_iter {
            Some(i) => i,
            None => ctx.cfg.usize("picard", "max_iter")?.unwrap_or(8),
        },
        delta: match args.delta {
            Some(d) => d,
            None => ctx.cfg.f64("picard", "delta")?.unwrap_or(0.1),
        },
        compare_split: !args.no_split,
        ..Default::default()
    };
    let rec = picard_iterate(&plan, sign, &phi, &opts)?;

    let mut report = ctx.report("picard", &["iter", "diff", "factor"]);
    report.meta("iterates", rec.iterates);
    report.meta("firstL4", rec.first_l4);
    report.meta("floor", rec.floor);
    report.meta("converged", rec.converged);
    report.meta("diverged", rec.diverged);
    report.meta("splitGap", rec.split_gap);
    for (i, d) in rec.diffs.iter().enumerate() {
        let factor = (i > 0)
            .then(|| rec.factors.get(i - 1).map(|f| cell(f)))
            .flatten()
            .unwrap_or_default();
        report.row(vec![cell(i + 1), cell(d), factor]);
    }

    let mut checks = ctx.checks();
    let mut failures = Vec::new();
    if checks.flag("require_converged")? && !rec.converged {
        failures.push("iteration did not converge".to_string());
    }
    if let Some(bound) = checks.f64("max_late_factor")? {
        for (i, f) in rec.factors.iter().enumerate().skip(2) {
            if *f > bound {
                failures.push(format!("contraction factor {f} at step {i} exceeds {bound}"));
            }
        }
    }
    if let Some(bound) = checks.f64("max_split_gap")? {
        match rec.split_gap {
            Some(g) if g <= bound => {}
            Some(g) => failures.push(format!("split-step gap {g} exceeds {bound}")),
            None => failures.push("split-step comparison unavailable".to_string()),
        }
    }
    let ok = checks.finish(&mut report, &failures)?;
    report.write(&ctx.out, ctx.format)?;
    Ok(ok)
}
