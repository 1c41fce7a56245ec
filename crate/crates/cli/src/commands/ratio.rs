//! Ratio-side commands: the cutoff sweep with its ensemble and refinement
//! stages, a single extremizer run, and the box-doubling gate.

use anyhow::Result;
use strichartz_core::{
    double_box_gate, extremize, initial_field, ratio_sweep, write_field, ExtremizeOptions,
    SweepBudget,
};

use crate::context::{parse_init, Ctx};
use crate::report::cell;

#[derive(clap::Args)]
pub struct RatioSweepArgs {
    /// rt-hyperbolic, rt-mixed, rt-elliptic, tt-hyperbolic or tt-elliptic
    #[arg(long)]
    pub scenario: Option<String>,
    /// Cutoffs, e.g. `8,16,32,64` or `8..64`
    #[arg(long = "N")]
    pub n: Option<String>,
    /// Circle circumference; second-axis frequencies land on (1/lambda)Z
    #[arg(long)]
    pub lambda: Option<f64>,
    /// First-axis box length (default 8 * max(lambda, 1))
    #[arg(long)]
    pub len: Option<f64>,
    /// Random starts per cutoff
    #[arg(long)]
    pub ensemble: Option<usize>,
    /// Smoke-test budget: coarser search, no full-density finals
    #[arg(long)]
    pub quick: bool,
}

fn budget(ctx: &Ctx, quick: bool) -> Result<SweepBudget> {
    let mut b = if quick { SweepBudget::quick() } else { SweepBudget::default() };
    if let Some(s) = ctx.cfg.usize("sweep", "search_samples")? {
        b.search_samples = s;
    }
    if let Some(i) = ctx.cfg.usize("sweep", "max_iter")? {
        b.max_iter = i;
    }
    if let Some(t) = ctx.cfg.f64("sweep", "tol")? {
        b.tol = t;
    }
    if let Some(s) = ctx.cfg.usize("sweep", "settle")? {
        b.settle = s;
    }
    if let Some(f) = ctx.cfg.bool("sweep", "full_final")? {
        b.full_final = f;
    }
    Ok(b)
}

pub fn ratio_sweep_cmd(ctx: &Ctx, args: &RatioSweepArgs) -> Result<bool> {
    let scenario = ctx.scenario(args.scenario.as_deref())?;
    let lambda = ctx.lambda(args.lambda)?;
    let len = ctx.len_x1(args.len, lambda)?;
    let ns = ctx.n_list(args.n.as_deref(), &[8.0, 16.0, 32.0, 64.0])?;
    let ensemble = match args.ensemble {
        Some(e) => e,
        None => ctx.cfg.usize("ensemble", "size")?.unwrap_or(16),
    };
    let budget = budget(ctx, args.quick)?;

    let sweep = ratio_sweep(scenario, lambda, len, &ns, ensemble, ctx.seed, &budget)?;

    let mut report = ctx.report("ratio-sweep", &["N", "ensembleMax", "extremized", "fitExponent"]);
    report.meta("scenario", scenario.id());
    report.meta("lambda", lambda);
    report.meta("len", len);
    report.meta("ensemble", ensemble);
    report.meta("fit", sweep.fit);
    let exponent = sweep.fit.map(|f| f.power_exponent);
    for p in &sweep.points {
        report.row(vec![
            cell(p.n),
            cell(p.ensemble_max),
            cell(p.extremized),
            exponent.map(cell).unwrap_or_default(),
        ]);
    }

    let mut checks = ctx.checks();
    let mut failures = Vec::new();
    if let Some(lo) = checks.f64("min_fit_exponent")? {
        match exponent {
            Some(e) if e >= lo => {}
            Some(e) => failures.push(format!("fit exponent {e} below {lo}")),
            None => failures.push("growth fit unavailable".to_string()),
        }
    }
    if let Some(hi) = checks.f64("max_fit_exponent")? {
        match exponent {
            Some(e) if e <= hi => {}
            Some(e) => failures.push(format!("fit exponent {e} above {hi}")),
            None => failures.push("growth fit unavailable".to_string()),
        }
    }
    if let Some(bound) = checks.f64("max_growth")? {
        let (first, last) = (sweep.points.first(), sweep.points.last());
        if let (Some(a), Some(b)) = (first, last) {
            let growth = b.extremized / a.extremized;
            if growth > bound {
                failures.push(format!(
                    "extremized ratio grew {growth} from N={} to N={}, above {bound}",
                    a.n, b.n
                ));
            }
        }
    }
    let ok = checks.finish(&mut report, &failures)?;
    report.write(&ctx.out, ctx.format)?;
    Ok(ok)
}

#[derive(clap::Args)]
pub struct ExtremizeArgs {
    /// rt-hyperbolic, rt-mixed, rt-elliptic, tt-hyperbolic or tt-elliptic
    #[arg(long)]
    pub scenario: Option<String>,
    /// Frequency cutoff
    #[arg(long = "N")]
    pub n: Option<String>,
    /// Circle circumference; second-axis frequencies land on (1/lambda)Z
    #[arg(long)]
    pub lambda: Option<f64>,
    /// First-axis box length (default 8 * max(lambda, 1))
    #[arg(long)]
    pub len: Option<f64>,
    /// Start shape: gaussian, row or resonant
    #[arg(long)]
    pub init: Option<String>,
    /// Ascent step budget
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Time nodes of the search plan
    #[arg(long)]
    pub samples: Option<usize>,
}

pub fn extremize_cmd(ctx: &Ctx, args: &ExtremizeArgs) -> Result<bool> {
    let scenario = ctx.scenario(args.scenario.as_deref())?;
    let n = ctx.n_single(args.n.as_deref(), 8.0)?;
    let lattice = ctx.lattice(n, args.lambda, args.len, scenario.geometry())?;
    let plan = ctx.coarse_plan(lattice, scenario.symbol(), 0.0, 1.0, args.samples)?;

    let kind = match args.init.as_deref().or(ctx.cfg.get("init", "kind")) {
        Some(k) => parse_init(k)?,
        None => strichartz_core::InitKind::Gaussian,
    };
    let init = initial_field(&lattice, scenario.symbol(), n, kind, ctx.seed)?;

    let opts = ExtremizeOptions {
        max_iter: match args.max_iter {
            Some(i) => i,
            None => ctx.cfg.usize("extremize", "max_iter")?.unwrap_or(200),
        },
        tol: ctx.cfg.f64("extremize", "tol")?.unwrap_or(1e-4),
        settle: ctx.cfg.usize("extremize", "settle")?.unwrap_or(5),
        reproject: scenario.projection(),
    };
    let trace = extremize(&plan, n, &init, opts)?;

    let mut report = ctx.report("extremize", &["iter", "ratio", "accepted", "halvings"]);
    report.meta("scenario", scenario.id());
    report.meta("n", n);
    report.meta("initialRatio", trace.initial_ratio);
    report.meta("ratio", trace.ratio);
    report.meta("band", trace.band);
    report.meta("stop", trace.stop);
    for (i, s) in trace.steps.iter().enumerate() {
        report.row(vec![cell(i), cell(s.ratio), cell(s.accepted), cell(s.halvings)]);
    }

    std::fs::create_dir_all(&ctx.out)?;
    let field_path = ctx.out.join("extremize-field.field");
    write_field(&field_path, &trace.field)?;
    report.meta("field", field_path.display().to_string());

    let mut checks = ctx.checks();
    let mut failures = Vec::new();
    if let Some(lo) = checks.f64("min_ratio")? {
        if trace.ratio < lo {
            failures.push(format!("ratio {} below {lo}", trace.ratio));
        }
    }
    let ok = checks.finish(&mut report, &failures)?;
    report.write(&ctx.out, ctx.format)?;
    Ok(ok)
}

#[derive(clap::Args)]
pub struct GateArgs {
    /// rt-hyperbolic, rt-mixed, rt-elliptic, tt-hyperbolic or tt-elliptic
    #[arg(long)]
    pub scenario: Option<String>,
    /// Frequency cutoff
    #[arg(long = "N")]
    pub n: Option<String>,
    /// Circle circumference; second-axis frequencies land on (1/lambda)Z
    #[arg(long)]
    pub lambda: Option<f64>,
    /// First-axis box length (default 8 * max(lambda, 1))
    #[arg(long)]
    pub len: Option<f64>,
    /// Ensemble members behind each statistic
    #[arg(long)]
    pub members: Option<usize>,
}

pub fn gate_cmd(ctx: &Ctx, args: &GateArgs) -> Result<bool> {
    let scenario = ctx.scenario(args.scenario.as_deref())?;
    let lambda = ctx.lambda(args.lambda)?;
    let len = ctx.len_x1(args.len, lambda)?;
    let n = ctx.n_single(args.n.as_deref(), 16.0)?;
    let members = match args.members {
        Some(m) => m,
        None => ctx.cfg.usize("gate", "members")?.unwrap_or(6),
    };

    let rep = double_box_gate(scenario, lambda, len, n, members, ctx.seed)?;

    let mut report = ctx.report(
        "gate",
        &[
            "scenario",
            "N",
            "baseStat",
            "doubledStat",
            "relChange",
            "pass",
            "modeInvariance",
            "crampedChange",
            "crampedFlagged",
        ],
    );
    report.row(vec![
        scenario.id().to_string(),
        cell(n),
        cell(rep.base_stat),
        cell(rep.doubled_stat),
        cell(rep.rel_change),
        cell(rep.pass),
        cell(rep.mode_invariance),
        cell(rep.cramped_change),
        cell(rep.cramped_flagged),
    ]);
    report.meta("record", rep);

    // the gate is itself the requested check: headline stat stable, the
    // single-mode control exact, and the cramped probe flagged
    let mut checks = ctx.checks();
    let mode_tol = checks.f64("mode_tol")?.unwrap_or(1e-9);
    let mut failures = Vec::new();
    if !rep.pass {
        failures.push(format!("box doubling moved the statistic by {}", rep.rel_change));
    }
    if rep.mode_invariance > mode_tol {
        failures.push(format!("single-mode control moved by {}", rep.mode_invariance));
    }
    if !rep.cramped_flagged {
        failures.push("cramped probe failed to trip the gate".to_string());
    }
    let ok = checks.finish(&mut report, &failures)?;
    report.write(&ctx.out, ctx.format)?;
    Ok(ok)
}
