//! Measure-side commands: annulus sweeps, the random set corpus, section
//! suprema, and the quadrilinear form.

use anyhow::{bail, Result};
use strichartz_core::measure::catalog::{hyperbolic_annulus, saddle_annulus};
use strichartz_core::measure::{lemma_check, prop_check, standard_v_samples, PropKind};
use strichartz_core::{quad_form, DetRng, Lattice, QuadWeight, Restriction, Symbol};

use crate::context::Ctx;
use crate::report::cell;

/// Least squares for `y = c ln n + d`; returns `(c, d, rel_residual)` with
/// the rms residual relative to the mean of `y`.
pub fn log_law_fit(points: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let m = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(n, y) in points {
        let x = n.ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let det = m * sxx - sx * sx;
    if det.abs() < 1e-12 {
        return None;
    }
    let c = (m * sxy - sx * sy) / det;
    let d = (sy - c * sx) / m;
    let mean = sy / m;
    let rss: f64 = points.iter().map(|&(n, y)| (y - c * n.ln() - d).powi(2)).sum();
    let rel = (rss / m).sqrt() / mean.abs().max(f64::MIN_POSITIVE);
    Some((c, d, rel))
}

#[derive(clap::Args)]
pub struct MeasureArgs {
    /// hyperbolic-annulus or saddle-annulus
    #[arg(long)]
    pub set: Option<String>,
    /// Annulus center level
    #[arg(long = "C0")]
    pub c0: Option<f64>,
    /// Band edges, one report row each, e.g. `8,16,32` or `8..512`
    #[arg(long = "N")]
    pub n: Option<String>,
    /// Slice-counting density: rows count the (1/lambda)Z lattice
    #[arg(long)]
    pub lambda: Option<f64>,
}

pub fn measure(ctx: &Ctx, args: &MeasureArgs) -> Result<bool> {
    let set_id = match &args.set {
        Some(s) => s.clone(),
        None => ctx.cfg.get("measure", "set").unwrap_or("hyperbolic-annulus").to_string(),
    };
    let c0 = match args.c0 {
        Some(c) => c,
        None => ctx.cfg.f64("measure", "c0")?.unwrap_or(0.0),
    };
    let lambda = ctx.lambda(args.lambda)?;
    let ns = ctx.n_list(args.n.as_deref(), &[8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0])?;

    let mut report = ctx.report("measure", &["N", "euclid", "rz", "maxSlice", "impliedC"]);
    report.meta("set", &set_id);
    report.meta("c0", c0);
    report.meta("lambda", lambda);

    let mut rz_points = Vec::new();
    let mut worst_c = 0.0f64;
    let mut slice_exact = true;
    for &n in &ns {
        let set = match set_id.as_str() {
            "hyperbolic-annulus" => hyperbolic_annulus(c0, n)?,
            "saddle-annulus" => saddle_annulus(c0, n)?,
            other => bail!("unknown set {other:?}, expected hyperbolic-annulus or saddle-annulus"),
        };
        let rec = lemma_check(&set, lambda)?;
        rz_points.push((n, rec.lhs));
        worst_c = worst_c.max(rec.implied_c);
        slice_exact &= rec.max_slice == 2.0 * n;
        report.row(vec![
            cell(n),
            cell(rec.area),
            cell(rec.lhs),
            cell(rec.max_slice),
            cell(rec.implied_c),
        ]);
    }

    let fit = log_law_fit(&rz_points);
    if let Some((c, d, rel)) = fit {
        report.meta("logCoefficient", c);
        report.meta("logIntercept", d);
        report.meta("logResidual", rel);
    }
    report.meta("worstImpliedC", worst_c);

    let mut checks = ctx.checks();
    let mut failures = Vec::new();
    if let Some(bound) = checks.f64("max_implied_c")? {
        if worst_c > bound {
            failures.push(format!("impliedC {worst_c} exceeds {bound}"));
        }
    }
    if let Some(bound) = checks.f64("max_log_residual")? {
        match fit {
            Some((_, _, rel)) if rel <= bound => {}
            Some((_, _, rel)) => failures.push(format!("log fit residual {rel} exceeds {bound}")),
            None => failures.push("log fit unavailable (need 2 distinct points)".to_string()),
        }
    }
    if checks.flag("exact_saddle_slice")? && !slice_exact {
        failures.push("maxSlice deviates from 2N".to_string());
    }
    let ok = checks.finish(&mut report, &failures)?;
    report.write(&ctx.out, ctx.format)?;
    Ok(ok)
}

#[derive(clap::Args)]
pub struct LemmaCorpusArgs {
    /// Number of random sets
    #[arg(long)]
    pub count: Option<usize>,
    /// Lattice densities, e.g. `1,2,4`
    #[arg(long)]
    pub lambda: Option<String>,
}

pub fn lemma_corpus(ctx: &Ctx, args: &LemmaCorpusArgs) -> Result<bool> {
    let count = match args.count {
        Some(c) => c,
        None => ctx.cfg.usize("measure", "count")?.unwrap_or(50),
    };
    let lambdas = match &args.lambda {
        Some(text) => crate::config::parse_list(text)?,
        None => ctx.cfg.list_f64("measure", "lambda")?.unwrap_or_else(|| vec![1.0, 2.0, 4.0]),
    };

    let mut rng = DetRng::new(ctx.seed);
    let sets = strichartz_core::measure::catalog::lemma_corpus(&mut rng, count);

    let mut report = ctx.report(
        "lemma-corpus",
        &["index", "name", "lambda", "rz", "area", "maxSlice", "impliedC", "impliedCDoubled", "relChange"],
    );
    report.meta("count", count);
    report.meta("lambdas", &lambdas);

    let mut worst_c = 0.0f64;
    let mut worst_change = 0.0f64;
    for (idx, set) in sets.iter().enumerate() {
        for &lambda in &lambdas {
            let rec = lemma_check(set, lambda)?;
            let wide = lemma_check(&set.with_bbox_scale(2.0), lambda)?;
            let change = (wide.implied_c - rec.implied_c).abs()
                / rec.implied_c.abs().max(f64::MIN_POSITIVE);
            worst_c = worst_c.max(rec.implied_c);
            worst_change = worst_change.max(change);
            report.row(vec![
                cell(idx),
                set.name().to_string(),
                cell(lambda),
                cell(rec.lhs),
                cell(rec.area),
                cell(rec.max_slice),
                cell(rec.implied_c),
                cell(wide.implied_c),
                cell(change),
            ]);
        }
    }
    report.meta("worstImpliedC", worst_c);
    report.meta("worstBboxChange", worst_change);

    let mut checks = ctx.checks();
    let mut failures = Vec::new();
    if let Some(bound) = checks.f64("max_implied_c")? {
        if worst_c > bound {
            failures.push(format!("impliedC {worst_c} exceeds {bound}"));
        }
    }
    if let Some(bound) = checks.f64("max_bbox_change")? {
        if worst_change > bound {
            failures.push(format!("bbox doubling moved impliedC by {worst_change}, above {bound}"));
        }
    }
    let ok = checks.finish(&mut report, &failures)?;
    report.write(&ctx.out, ctx.format)?;
    Ok(ok)
}

#[derive(clap::Args)]
pub struct PropCheckArgs {
    /// a1, a2plain, a2refined or all
    #[arg(long)]
    pub section: Option<String>,
    /// Slice-counting density: suprema use the (1/lambda)Z lattice
    #[arg(long)]
    pub lambda: Option<f64>,
}

const OCTANTS: [[i8; 3]; 8] = [
    [1, 1, 1],
    [1, 1, -1],
    [1, -1, 1],
    [1, -1, -1],
    [-1, 1, 1],
    [-1, 1, -1],
    [-1, -1, 1],
    [-1, -1, -1],
];

fn octant_label(j: [i8; 3]) -> String {
    j.iter().map(|&s| if s > 0 { '+' } else { '-' }).collect()
}

pub fn prop_check_cmd(ctx: &Ctx, args: &PropCheckArgs) -> Result<bool> {
    let which = match &args.section {
        Some(s) => s.clone(),
        None => ctx.cfg.get("measure", "section").unwrap_or("all").to_string(),
    };
    let lambda = ctx.lambda(args.lambda)?;
    let samples = standard_v_samples(lambda);

    // (label, bounded) pairs; the plain complement is report-only
    let mut kinds: Vec<(PropKind, String, bool)> = Vec::new();
    match which.as_str() {
        "a1" => kinds.push((PropKind::A1, "a1".into(), true)),
        "a2plain" => kinds.push((PropKind::A2Plain, "a2plain".into(), false)),
        "a2refined" => {
            for j in OCTANTS {
                kinds.push((PropKind::A2Refined(j), format!("a2refined {}", octant_label(j)), true));
            }
        }
        "all" => {
            kinds.push((PropKind::A1, "a1".into(), true));
            kinds.push((PropKind::A2Plain, "a2plain".into(), false));
            for j in OCTANTS {
                kinds.push((PropKind::A2Refined(j), format!("a2refined {}", octant_label(j)), true));
            }
        }
        other => bail!("unknown section {other:?}, expected a1, a2plain, a2refined or all"),
    }

    let mut report = ctx.report(
        "prop-check",
        &["section", "bounded", "supRz", "supMaxSlice", "argmaxV1", "argmaxV2"],
    );
    report.meta("lambda", lambda);
    report.meta("samples", samples.len());

    let mut worst_bounded = 0.0f64;
    for (kind, label, bounded) in kinds {
        let rep = prop_check(kind, &samples, lambda)?;
        if bounded {
            worst_bounded = worst_bounded.max(rep.sup_rz);
        }
        report.row(vec![
            label,
            cell(bounded),
            cell(rep.sup_rz),
            cell(rep.sup_max_slice),
            cell(rep.argmax_v.0),
            cell(rep.argmax_v.1),
        ]);
    }
    report.meta("supBounded", worst_bounded);

    let mut checks = ctx.checks();
    let mut failures = Vec::new();
    if let Some(bound) = checks.f64("max_sup")? {
        if worst_bounded > bound {
            failures.push(format!("bounded-section supremum {worst_bounded} exceeds {bound}"));
        }
    }
    let ok = checks.finish(&mut report, &failures)?;
    report.write(&ctx.out, ctx.format)?;
    Ok(ok)
}

#[derive(clap::Args)]
pub struct QuadformArgs {
    /// Number of random weight draws
    #[arg(long)]
    pub count: Option<usize>,
    /// Largest support size per random field
    #[arg(long)]
    pub support: Option<usize>,
    /// Window half-width in the symbol gap
    #[arg(long)]
    pub theta: Option<f64>,
    /// Window kind: indicator or smooth
    #[arg(long)]
    pub weight: Option<String>,
    /// Pair restriction: none, a1 or a2plain
    #[arg(long)]
    pub restriction: Option<String>,
    /// hyperbolic, elliptic or mixed
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
    /// Evaluate on the magnitudes of a field file instead
    #[arg(long = "in")]
    pub input: Option<std::path::PathBuf>,
}

fn quad_weight(ctx: &Ctx, args: &QuadformArgs) -> Result<QuadWeight> {
    let theta = match args.theta {
        Some(t) => t,
        None => ctx.cfg.f64("quadform", "theta")?.unwrap_or(1.0),
    };
    let kind = args.weight.as_deref().or(ctx.cfg.get("quadform", "weight")).unwrap_or("indicator");
    let mut w = match kind {
        "indicator" => QuadWeight::indicator(theta),
        "smooth" => QuadWeight::smooth(theta),
        other => bail!("unknown weight {other:?}, expected indicator or smooth"),
    };
    let restriction =
        args.restriction.as_deref().or(ctx.cfg.get("quadform", "restriction")).unwrap_or("none");
    w.restriction = match restriction {
        "none" => Restriction::None,
        "a1" => Restriction::A1,
        "a2plain" => Restriction::A2Plain,
        other => bail!("unknown restriction {other:?}, expected none, a1 or a2plain"),
    };
    if let Some(c) = ctx.cfg.f64("quadform", "c_a")? {
        w.c_a = c;
    }
    Ok(w)
}

/// Sparse nonnegative weights: `support` distinct lattice points with
/// uniform weights in `(0, 1]`.
pub fn sparse_weights(lattice: &Lattice, support: usize, rng: &mut DetRng) -> Vec<f64> {
    let mut f = vec![0.0; lattice.len()];
    let mut placed = 0;
    while placed < support.min(lattice.len()) {
        let idx = (rng.uniform() * lattice.len() as f64) as usize;
        if f[idx] == 0.0 {
            f[idx] = 1.0 - rng.uniform();
            placed += 1;
        }
    }
    f
}

pub fn quadform(ctx: &Ctx, args: &QuadformArgs) -> Result<bool> {
    let symbol: Symbol = match args.symbol.as_deref().or(ctx.cfg.get("quadform", "symbol")) {
        Some(s) => s.parse().map_err(anyhow::Error::msg)?,
        None => Symbol::Hyperbolic,
    };
    let weight = quad_weight(ctx, args)?;

    let mut report = ctx.report("quadform", &["index", "support", "value"]);
    report.meta("symbol", symbol.to_string());
    report.meta("theta", weight.theta);

    if let Some(path) = &args.input {
        let field = strichartz_core::read_field(path)?;
        let f: Vec<f64> = field.coef().iter().map(|c| c.norm()).collect();
        let support = f.iter().filter(|&&x| x > 0.0).count();
        let value = quad_form(field.lattice(), &f, symbol, &weight)?;
        report.meta("input", path.display().to_string());
        report.row(vec![cell(0), cell(support), cell(value)]);
    } else {
        let n = ctx.n_single(args.n.as_deref(), 8.0)?;
        let lattice = ctx.lattice(n, args.lambda, args.len, strichartz_core::Geometry::Rt)?;
        let count = match args.count {
            Some(c) => c,
            None => ctx.cfg.usize("quadform", "count")?.unwrap_or(100),
        };
        let max_support = match args.support {
            Some(s) => s,
            None => ctx.cfg.usize("quadform", "support")?.unwrap_or(30),
        };
        for k in 0..count {
            let mut rng = DetRng::member(ctx.seed, k as u64);
            let support = 1 + (rng.uniform() * max_support as f64) as usize;
            let f = sparse_weights(&lattice, support, &mut rng);
            let value = quad_form(&lattice, &f, symbol, &weight)?;
            report.row(vec![cell(k), cell(support), cell(value)]);
        }
    }

    let checks = ctx.checks();
    let ok = checks.finish(&mut report, &[])?;
    report.write(&ctx.out, ctx.format)?;
    Ok(ok)
}
