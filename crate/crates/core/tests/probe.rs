use strichartz_core::bilinear;

#[test]
#[ignore]
fn probe_regime_grids() {
    let t0 = std::time::Instant::now();
    let study = bilinear::run_scaling_study(2026).unwrap();
    for p in &study.points {
        println!(
            "n1 {:6} n2 {:3} lambda {:5}  stat {:.6e}  stat/env {:.4}",
            p.n1,
            p.n2,
            p.lambda,
            p.stat,
            p.stat / (1.0 / p.lambda + p.n2 / p.n1).sqrt()
        );
    }
    println!("fit: {:?}", study.fit);
    println!("elapsed {:?}", t0.elapsed());
}

#[test]
#[ignore]
fn probe_crossover() {
    let t0 = std::time::Instant::now();
    let pts = bilinear::crossover_study(64.0, 2.0, &[1.0, 4.0, 16.0, 64.0], 6, 29).unwrap();
    for p in &pts {
        println!("lambda {:5}  stat {:.6e}  stat/env {:.4}", p.lambda, p.stat, p.stat_to_envelope);
    }
    println!("elapsed {:?}", t0.elapsed());
}

#[test]
#[ignore]
fn probe_eab_grid() {
    let t0 = std::time::Instant::now();
    let n1s = [16.0, 32.0, 64.0, 128.0, 256.0];
    let n2s = [1.0, 2.0, 4.0, 8.0];
    let lambdas = [1.0, 2.0, 4.0, 8.0, 16.0];
    let cells = bilinear::eab_grid(&n1s, &n2s, &lambdas, 8, 2026).unwrap();
    let mut sorted: Vec<_> = cells.iter().collect();
    sorted.sort_by(|a, b| b.quotient.total_cmp(&a.quotient));
    for c in sorted.iter().take(10) {
        println!(
            "n1 {:5} n2 {:3} lambda {:4}  worst {:.4}  env {:.4}  quotient {:.3}",
            c.n1, c.n2, c.lambda, c.worst, c.envelope, c.quotient
        );
    }
    println!("cells {}", cells.len());
    println!("elapsed {:?}", t0.elapsed());
}

#[test]
#[ignore]
fn probe_gate_stats() {
    use strichartz_core::*;
    let n = 8.0;
    for len in [2.0f64, 4.0, 8.0, 16.0, 32.0] {
        let lat = Lattice::cramped(1.0, len, n, Geometry::Rt).unwrap();
        let full = EvolutionPlan::auto(lat, Symbol::Hyperbolic, 0.0, 1.0, Bump::Sharp).unwrap();
        let coarse = EvolutionPlan::coarse(
            lat,
            Symbol::Hyperbolic,
            TimeWindow::sharp(0.0, 1.0, 257).unwrap(),
        )
        .unwrap();
        let mut mean = 0.0;
        let mut best: Option<(f64, SpectralField)> = None;
        for k in 0..6u64 {
            let mut rng = DetRng::member(5, k);
            let mut f = rng::gaussian_field(lat, &mut rng);
            f.project(Projection::MeanZeroX2);
            f.normalize(1.0).unwrap();
            let r = strichartz_ratio(&full, &f).unwrap();
            mean += r / 6.0;
            let rc = strichartz_ratio(&coarse, &f).unwrap();
            if best.as_ref().is_none_or(|(b, _)| rc > *b) {
                best = Some((rc, f));
            }
        }
        let opts = ExtremizeOptions {
            max_iter: 25,
            tol: 1e-3,
            settle: 3,
            reproject: Some(Projection::MeanZeroX2),
        };
        let tr = extremize(&coarse, n, &best.unwrap().1, opts).unwrap();
        println!(
            "L={len:5} normalized_mean={:10.6} extremized_coarse={:10.6}",
            mean * lat.box_area().powf(0.25),
            tr.ratio
        );
    }
}

#[test]
#[ignore]
fn probe_gate_lambda8() {
    use strichartz_core::*;
    let n = 4.0;
    for len in [8.0f64, 16.0, 32.0, 64.0, 128.0] {
        let lat = Lattice::cramped(8.0, len, n, Geometry::Rt).unwrap();
        let full = EvolutionPlan::auto(lat, Symbol::Hyperbolic, 0.0, 1.0, Bump::Sharp).unwrap();
        let mut mean = 0.0;
        for k in 0..6u64 {
            let mut rng = DetRng::member(5, k);
            let mut f = rng::gaussian_field(lat, &mut rng);
            f.project(Projection::MeanZeroX2);
            f.normalize(1.0).unwrap();
            mean += strichartz_ratio(&full, &f).unwrap() / 6.0;
        }
        println!();
        println!("L={len:5} normalized_mean={:10.6}", mean * lat.box_area().powf(0.25));
    }
}

#[test]
#[ignore]
fn probe_gate_extremized_lambda8() {
    use strichartz_core::*;
    let n = 4.0;
    for len in [8.0f64, 16.0, 32.0, 64.0] {
        let lat = Lattice::cramped(8.0, len, n, Geometry::Rt).unwrap();
        let coarse = EvolutionPlan::coarse(
            lat,
            Symbol::Hyperbolic,
            TimeWindow::sharp(0.0, 1.0, 257).unwrap(),
        )
        .unwrap();
        let mut best: Option<(f64, SpectralField)> = None;
        for k in 0..6u64 {
            let mut rng = DetRng::member(5, k);
            let mut f = rng::gaussian_field(lat, &mut rng);
            f.project(Projection::MeanZeroX2);
            f.normalize(1.0).unwrap();
            let rc = strichartz_ratio(&coarse, &f).unwrap();
            if best.as_ref().is_none_or(|(b, _)| rc > *b) {
                best = Some((rc, f));
            }
        }
        let opts = ExtremizeOptions {
            max_iter: 25,
            tol: 1e-3,
            settle: 3,
            reproject: Some(Projection::MeanZeroX2),
        };
        let tr = extremize(&coarse, n, &best.unwrap().1, opts).unwrap();
        println!();
        println!("L={len:5} extremized={:10.6}", tr.ratio);
    }
}

#[test]
#[ignore]
fn probe_gate_mixed_row() {
    use strichartz_core::*;
    for n in [8.0f64, 16.0] {
        for len in [2.0f64, 4.0, 8.0, 16.0, 32.0] {
            let lat = Lattice::cramped(1.0, len, n, Geometry::Rt).unwrap();
            let coarse = EvolutionPlan::coarse(
                lat,
                Symbol::Hyperbolic,
                TimeWindow::sharp(0.0, 1.0, 257).unwrap(),
            )
            .unwrap();
            let row = initial_field(&lat, Symbol::Hyperbolic, n, InitKind::RowProfile, 0).unwrap();
            let opts =
                ExtremizeOptions { max_iter: 25, tol: 1e-3, settle: 3, reproject: None };
            let tr = extremize(&coarse, n, &row, opts).unwrap();
            println!();
            println!("N={n:3} L={len:5} row_extremized={:10.6}", tr.ratio);
        }
    }
}

#[test]
#[ignore]
fn probe_est_products() {
    use strichartz_core::measure::catalog::{est11_set, est21_set};
    use strichartz_core::measure::{MeasureError, SemiAlgebraicSet};
    type Maker = fn(f64, f64) -> Result<SemiAlgebraicSet, MeasureError>;
    for (name, maker) in [("est11", est11_set as Maker), ("est21", est21_set as Maker)] {
        for cd in [1.0f64, 10.0, 100.0, 1000.0] {
            let set = maker(cd, 1.0).unwrap();
            let m = set.euclid_measure();
            println!(
                "{name} cd={cd:6}: value {:.6e} product {:.4} converged {}",
                m.value,
                m.value * cd,
                m.converged
            );
        }
    }
}

#[test]
#[ignore]
fn probe_corpus_fifty() {
    use strichartz_core::measure::catalog::lemma_corpus;
    use strichartz_core::{lemma_check, DetRng};
    let t0 = std::time::Instant::now();
    let mut rng = DetRng::new(7);
    let corpus = lemma_corpus(&mut rng, 50);
    let mut worst_c = 0.0f64;
    let mut worst_change = 0.0f64;
    for set in &corpus {
        for lambda in [1.0, 2.0, 4.0] {
            let rec = lemma_check(set, lambda).unwrap();
            let doubled = lemma_check(&set.with_bbox_scale(2.0), lambda).unwrap();
            let change = (doubled.implied_c - rec.implied_c).abs() / rec.implied_c.max(1e-12);
            if rec.implied_c > worst_c {
                worst_c = rec.implied_c;
            }
            if change > worst_change {
                worst_change = change;
                println!("change {change:.3e} for {} at lambda {lambda}", set.name());
            }
        }
    }
    println!("worst impliedC {worst_c:.4} worst bbox change {worst_change:.4e}");
    println!("elapsed {:?}", t0.elapsed());
}

#[test]
#[ignore]
fn probe_a2_sweeps() {
    use strichartz_core::{double_box_gate, ratio_sweep, Scenario, SweepBudget};
    let t0 = std::time::Instant::now();
    for scenario in [Scenario::RtHyperbolic, Scenario::RtMixed] {
        let gate = double_box_gate(scenario, 1.0, 8.0, 16.0, 6, 5).unwrap();
        println!(
            "{scenario:?} gate: pass {} rel {:.3e} mode {:.3e} cramped {:.3e} elapsed {:?}",
            gate.pass, gate.rel_change, gate.mode_invariance, gate.cramped_change, t0.elapsed()
        );
        let sweep = ratio_sweep(
            scenario,
            1.0,
            8.0,
            &[8.0, 16.0, 32.0, 64.0],
            16,
            7,
            &SweepBudget::default(),
        )
        .unwrap();
        for p in &sweep.points {
            println!("  N {:3}: ensembleMax {:.6} extremized {:.6}", p.n, p.ensemble_max, p.extremized);
        }
        let fit = sweep.fit.unwrap();
        println!(
            "{scenario:?} exponent {:.4} residual {:.3e} growth {:.4} elapsed {:?}",
            fit.power_exponent,
            fit.power_residual,
            sweep.points.last().unwrap().extremized / sweep.points[0].extremized,
            t0.elapsed()
        );
    }
}
