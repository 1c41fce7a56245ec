//! Bilinear commands: the frozen two-regime scaling study and the measure
//! quotient grid for separated dyadic shells.

use anyhow::Result;
use strichartz_core::{eab_grid, run_scaling_study};

use crate::context::Ctx;
use crate::report::cell;

pub fn bilinear_sweep(ctx: &Ctx) -> Result<bool> {
    let study = run_scaling_study(ctx.seed)?;

    let mut report = ctx.report("bilinear-sweep", &["n1", "n2", "lambda", "stat"]);
    report.meta("fit", study.fit);
    for p in &study.points {
        report.row(vec![cell(p.n1), cell(p.n2), cell(p.lambda), cell(p.stat)]);
    }

    let mut checks = ctx.checks();
    let mut failures = Vec::new();
    let exponents =
        [("ratio", study.fit.ratio_exponent), ("lambda", study.fit.lambda_exponent)];
    if let Some(lo) = checks.f64("min_exponent")? {
        for (name, e) in exponents {
            if e < lo {
                failures.push(format!("{name} exponent {e} below {lo}"));
            }
        }
    }
    if let Some(hi) = checks.f64("max_exponent")? {
        for (name, e) in exponents {
            if e > hi {
                failures.push(format!("{name} exponent {e} above {hi}"));
            }
        }
    }
    let ok = checks.finish(&mut report, &failures)?;
    report.write(&ctx.out, ctx.format)?;
    Ok(ok)
}

#[derive(clap::Args)]
pub struct EabArgs {
    /// Coarse shell cutoffs, e.g. `16,64,256`
    #[arg(long)]
    pub n1: Option<String>,
    /// Fine shell cutoffs
    #[arg(long)]
    pub n2: Option<String>,
    /// Circle circumferences
    #[arg(long)]
    pub lambda: Option<String>,
    /// Center draws per grid cell
    #[arg(long)]
    pub draws: Option<usize>,
}

pub fn eab_cmd(ctx: &Ctx, args: &EabArgs) -> Result<bool> {
    let list = |flag: &Option<String>, key, default: &[f64]| -> Result<Vec<f64>> {
        match flag {
            Some(text) => crate::config::parse_list(text),
            None => Ok(ctx.cfg.list_f64("bilinear", key)?.unwrap_or_else(|| default.to_vec())),
        }
    };
    let n1s = list(&args.n1, "n1", &[16.0, 64.0, 256.0])?;
    let n2s = list(&args.n2, "n2", &[1.0, 2.0, 4.0, 8.0])?;
    let lambdas = list(&args.lambda, "lambda", &[1.0, 4.0, 16.0])?;
    let draws = match args.draws {
        Some(d) => d,
        None => ctx.cfg.usize("bilinear", "draws")?.unwrap_or(32),
    };

    let cells = eab_grid(&n1s, &n2s, &lambdas, draws, ctx.seed)?;

    let mut report =
        ctx.report("eab", &["n1", "n2", "lambda", "worst", "envelope", "quotient"]);
    report.meta("draws", draws);
    let mut worst_q = 0.0f64;
    for c in &cells {
        worst_q = worst_q.max(c.quotient);
        report.row(vec![
            cell(c.n1),
            cell(c.n2),
            cell(c.lambda),
            cell(c.worst),
            cell(c.envelope),
            cell(c.quotient),
        ]);
    }
    report.meta("worstQuotient", worst_q);

    let mut checks = ctx.checks();
    let mut failures = Vec::new();
    if let Some(bound) = checks.f64("max_quotient")? {
        if worst_q > bound {
            failures.push(format!("measure quotient {worst_q} exceeds {bound}"));
        }
    }
    let ok = checks.finish(&mut report, &failures)?;
    report.write(&ctx.out, ctx.format)?;
    Ok(ok)
}
