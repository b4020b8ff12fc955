//! Acceptance gate: twelve criteria tying the formula layer, the exact
//! landscape oracle, the path constructions, the samplers, and the CLI
//! together. One test per criterion; each prints a single summary line.

use potts::config::Configuration;
use potts::dynamics::{
    batch_hits, batch_tunnels, metropolis_step, stream_rng, ChainParams, Method, Target,
};
use potts::exact::LandscapeIndex;
use potts::geometry;
use potts::lattice::{Boundary, GridSpec};
use potts::paths::{self, BridgeSpec};
use potts::stats::{self, HittingSummary};

fn grid(k: usize, l: usize, q: u8, boundary: Boundary) -> GridSpec {
    GridSpec::new(k, l, q, boundary).unwrap()
}

#[test]
fn criterion_01_gamma_formula_equals_exact_minimax() {
    let mut checked = 0;
    for q in [2u8, 3] {
        for (k, l) in [(2usize, 3usize), (3, 3)] {
            for boundary in [Boundary::Open, Boundary::Periodic] {
                let spec = grid(k, l, q, boundary);
                let ix = LandscapeIndex::new(spec).unwrap();
                let gamma = spec.gamma();
                assert!(gamma.hypothesis_met && !gamma.conjectured);
                let stables = ix.stable_states();
                for i in 0..stables.len() {
                    for j in i + 1..stables.len() {
                        let phi = ix.communication_energy(stables[i], stables[j]).unwrap();
                        let slack = phi - ix.energy(stables[i]);
                        assert_eq!(
                            slack, gamma.value,
                            "q={q} {k}x{l} {boundary}: pair slack {slack} != {}",
                            gamma.value
                        );
                        checked += 1;
                    }
                }
            }
        }
    }
    println!("criterion 01 PASS: formula matches brute-force minimax on {checked} stable pairs");
}

#[test]
fn criterion_02_no_deep_wells() {
    let cases = [
        (2u8, 3usize, 3usize, Boundary::Periodic),
        (2, 3, 3, Boundary::Open),
        (3, 2, 3, Boundary::Open),
    ];
    let mut lines = Vec::new();
    for (q, k, l, boundary) in cases {
        let ix = LandscapeIndex::new(grid(k, l, q, boundary)).unwrap();
        let audit = ix.deep_well_audit();
        assert!(
            audit.holds && audit.max_slack < audit.gamma,
            "q={q} {k}x{l} {boundary}: max slack {} vs gamma {}",
            audit.max_slack,
            audit.gamma
        );
        lines.push(format!("q={q} {k}x{l} {boundary}: {} < {}", audit.max_slack, audit.gamma));
    }
    println!("criterion 02 PASS: no deep wells ({})", lines.join("; "));
}

#[test]
fn criterion_03_reference_paths_attain_the_barrier() {
    let mut checked = 0;
    for boundary in [Boundary::Open, Boundary::Periodic] {
        for k in 2..=6usize {
            for l in 2..=6usize {
                if k.max(l) < 3 {
                    continue;
                }
                for q in [2u8, 3] {
                    let spec = grid(k, l, q, boundary);
                    let gamma = spec.gamma().value;
                    for c in 1..=q {
                        for d in 1..=q {
                            if c == d {
                                continue;
                            }
                            let path = paths::reference_path(spec, c, d).unwrap();
                            assert_eq!(path.first(), &Configuration::stable(spec, c).unwrap());
                            assert_eq!(path.last(), &Configuration::stable(spec, d).unwrap());
                            assert_eq!(
                                path.slack(),
                                gamma,
                                "q={q} {k}x{l} {boundary} {c}->{d}"
                            );
                            checked += 1;
                        }
                    }
                }
            }
        }
    }
    println!("criterion 03 PASS: {checked} reference paths reach height H(c) + Gamma exactly");
}

#[test]
fn criterion_04_expansion_and_reduction_bounds_exhaustively() {
    let cases = [(2u8, 3usize, 3usize, Boundary::Periodic), (3, 2, 3, Boundary::Open)];
    let mut expanded = 0usize;
    let mut reduced = 0usize;
    for (q, k, l, boundary) in cases {
        let spec = grid(k, l, q, boundary);
        let ix = LandscapeIndex::new(spec).unwrap();
        let gamma = spec.gamma().value;
        let bound = paths::expansion_bound(boundary);
        for state in 0..ix.num_states() {
            let cfg = ix.decode(state);
            let found = geometry::bridges(&cfg);
            for &(row, color) in &found.horizontal {
                let path = paths::expansion_path(
                    &cfg,
                    BridgeSpec { orientation: geometry::Orientation::Horizontal, index: row, color },
                )
                .unwrap();
                assert!(path.last().is_stable());
                assert!(
                    path.slack() <= bound,
                    "q={q} {boundary} state {state} row {row}: slack {} > {bound}",
                    path.slack()
                );
                expanded += 1;
            }
            for &(col, color) in &found.vertical {
                let path = paths::expansion_path(
                    &cfg,
                    BridgeSpec { orientation: geometry::Orientation::Vertical, index: col, color },
                )
                .unwrap();
                assert!(path.last().is_stable());
                assert!(
                    path.slack() <= bound,
                    "q={q} {boundary} state {state} col {col}: slack {} > {bound}",
                    path.slack()
                );
                expanded += 1;
            }
            if !cfg.is_stable() {
                let (path, color) = paths::reduction_path(&cfg).unwrap();
                assert_eq!(path.last(), &Configuration::stable(spec, color).unwrap());
                assert!(
                    path.slack() < gamma,
                    "q={q} {boundary} state {state}: reduction slack {} >= {gamma}",
                    path.slack()
                );
                reduced += 1;
            }
        }
    }
    println!(
        "criterion 04 PASS: {expanded} expansions within bound, {reduced} reductions below Gamma"
    );
}

#[test]
fn criterion_05_bridge_lemmas_exhaustively() {
    let spec = grid(3, 3, 2, Boundary::Periodic);
    let ix = LandscapeIndex::new(spec).unwrap();
    let mut updates = 0usize;
    for state in 0..ix.num_states() {
        let cfg = ix.decode(state);
        let found = geometry::bridges(&cfg);

        // a horizontal bridge of one color and a vertical bridge of a
        // different color cannot coexist
        for &(_, hk) in &found.horizontal {
            for &(_, vk) in &found.vertical {
                assert_eq!(hk, vk, "state {state}: crossed bridges of different colors");
            }
        }

        // zero-gap lemma, parts (a) and (b): gap on a line vanishes iff the
        // line is a bridge; parts (c), (d): on periodic grids a bridge-less
        // line has gap at least 2
        for r in 0..spec.k {
            let gap = geometry::row_gap(&cfg, r).unwrap();
            let is_bridge = found.horizontal.iter().any(|&(row, _)| row == r);
            assert_eq!(gap == 0, is_bridge, "state {state} row {r}");
            if !is_bridge {
                assert!(gap >= 2, "state {state} row {r}: periodic gap {gap} < 2");
            }
        }
        for c in 0..spec.l {
            let gap = geometry::col_gap(&cfg, c).unwrap();
            let is_bridge = found.vertical.iter().any(|&(col, _)| col == c);
            assert_eq!(gap == 0, is_bridge, "state {state} col {c}");
            if !is_bridge {
                assert!(gap >= 2, "state {state} col {c}: periodic gap {gap} < 2");
            }
        }

        // bridge-count increments under every single-spin update lie in
        // {-2..2}, and +2 happens exactly when the update completes a new
        // cross of that color
        for col in 0..spec.l {
            for row in 0..spec.k {
                for k in 1..=spec.q {
                    let report = geometry::bridge_delta_check(&cfg, (col, row), k).unwrap();
                    assert!(report.ok(), "state {state} ({col},{row})->{k}: {:?}", report.violations);
                    let after = cfg.updated((col, row), k).unwrap();
                    for &(color, delta) in &report.deltas {
                        // +2 means the update completed both lines through
                        // the vertex at once: a cross new at that vertex
                        if delta == 2 {
                            let now = geometry::bridges(&after);
                            let row_new = now.horizontal.contains(&(row, color))
                                && !found.horizontal.contains(&(row, color));
                            let col_new = now.vertical.contains(&(col, color))
                                && !found.vertical.contains(&(col, color));
                            assert!(
                                row_new && col_new,
                                "state {state} ({col},{row})->{k} color {color}"
                            );
                        }
                    }
                    if cfg.spin_at(spec.index((col, row))) == k {
                        assert!(report.deltas.iter().all(|&(_, d)| d == 0));
                    }
                    updates += 1;
                }
            }
        }
    }
    println!("criterion 05 PASS: cross, zero-gap, and increment lemmas hold over {updates} updates");
}

#[test]
fn criterion_06_kernel_matches_exact_rows() {
    let spec = grid(2, 3, 2, Boundary::Open);
    let ix = LandscapeIndex::new(spec).unwrap();
    let beta = 1.0;
    let p = ix.transition_matrix(beta).unwrap();

    // detailed balance of the exact matrix, relative to 1e-12
    let mu = ix.gibbs(beta).unwrap();
    for a in 0..ix.num_states() as usize {
        for b in 0..ix.num_states() as usize {
            let lhs = mu[a] * p[(a, b)];
            let rhs = mu[b] * p[(b, a)];
            assert!(
                (lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1e-300),
                "detailed balance broken at ({a}, {b})"
            );
        }
    }

    let starts = [
        "1 1 1\n1 1 1\n",
        "1 1 1\n1 2 1\n",
        "1 1 2\n1 1 2\n",
        "1 2 1\n2 1 2\n",
        "2 1 2\n1 1 2\n",
    ];
    let n = 1_000_000usize;
    let mut rng = stream_rng(601, 0);
    for (si, text) in starts.iter().enumerate() {
        let from = Configuration::parse(spec, text).unwrap();
        let row = ix.encode(&from).unwrap() as usize;
        let mut counts = vec![0u32; ix.num_states() as usize];
        let mut cfg = from.clone();
        for _ in 0..n {
            cfg.clone_from(&from);
            metropolis_step(&mut cfg, beta, &mut rng);
            counts[ix.encode(&cfg).unwrap() as usize] += 1;
        }
        for s in 0..ix.num_states() as usize {
            let prob = p[(row, s)];
            if prob == 0.0 {
                assert_eq!(counts[s], 0, "start {si}: unreachable state {s} was reached");
                continue;
            }
            let expect = prob * n as f64;
            let sigma = (n as f64 * prob * (1.0 - prob)).sqrt();
            assert!(
                (counts[s] as f64 - expect).abs() <= 3.0 * sigma,
                "start {si} state {s}: count {} expect {expect:.1} sigma {sigma:.1}",
                counts[s]
            );
        }
    }
    println!(
        "criterion 06 PASS: 5 x 10^6 draws inside 3-sigma bands; detailed balance at 1e-12"
    );
}

#[test]
fn criterion_07_spectral_gap_exponent() {
    let ix = LandscapeIndex::new(grid(2, 3, 2, Boundary::Open)).unwrap();
    let rho3 = ix.spectral_gap(3.0).unwrap().rho;
    let rho4 = ix.spectral_gap(4.0).unwrap().rho;
    let rho5 = ix.spectral_gap(5.0).unwrap().rho;
    let slopes = [
        (rho3.ln() - rho5.ln()) / 2.0,
        rho3.ln() - rho4.ln(),
        rho4.ln() - rho5.ln(),
    ];
    for (i, slope) in slopes.iter().enumerate() {
        assert!(
            (2.7..=3.3).contains(slope),
            "slope {i} of -log rho is {slope}, outside 3 +/- 10%"
        );
    }
    println!(
        "criterion 07 PASS: -log rho slope {:.4} over beta in [3, 5] (Gamma = 3)",
        slopes[0]
    );
}

#[test]
fn criterion_08_mixing_time_exponent() {
    let ix = LandscapeIndex::new(grid(2, 3, 2, Boundary::Open)).unwrap();
    let mix = ix.mixing_time(4.0, 0.25).unwrap();
    assert!(mix.converged);
    let exponent = (mix.t_mix as f64).ln() / 4.0;
    assert!(
        (2.55..=3.45).contains(&exponent),
        "log t_mix / beta = {exponent}, outside 3 +/- 15%"
    );
    println!(
        "criterion 08 PASS: t_mix(0.25) = {} at beta 4, exponent {exponent:.4}",
        mix.t_mix
    );
}

#[test]
fn criterion_09_hitting_time_exponent() {
    let spec = grid(2, 3, 2, Boundary::Open);
    let start = Configuration::stable(spec, 1).unwrap();
    let goal = Configuration::stable(spec, 2).unwrap();
    let target = Target::Explicit(vec![goal]);
    let mut points = Vec::new();
    for beta in [1.5, 2.0, 2.5, 3.0] {
        let params = ChainParams::new(spec, beta, 1009).unwrap();
        let samples =
            batch_hits(&start, &target, &params, 2000, 1, Method::RejectionFree).unwrap();
        points.push((beta, HittingSummary::from_samples(&samples).unwrap()));
    }
    let fit = stats::fit_exponent_from_summaries(&points).unwrap();
    assert!(
        (2.55..=3.45).contains(&fit.gamma_hat),
        "fitted exponent {} outside [2.55, 3.45]",
        fit.gamma_hat
    );
    println!(
        "criterion 09 PASS: fitted exponent {:.4} (stderr {:.4}) from 4 x 2000 samples",
        fit.gamma_hat, fit.stderr
    );
}

#[test]
fn criterion_10_tunneling_times_are_exponential() {
    let spec = grid(2, 3, 2, Boundary::Open);
    let start = Configuration::stable(spec, 1).unwrap();
    let goal = Configuration::stable(spec, 2).unwrap();
    let target = Target::Explicit(vec![goal]);
    let run = |seed: u64| {
        let params = ChainParams::new(spec, 3.0, seed).unwrap();
        let samples =
            batch_hits(&start, &target, &params, 2000, 1, Method::RejectionFree).unwrap();
        let summary = HittingSummary::from_samples(&samples).unwrap();
        assert_eq!(summary.censored_count, 0);
        let rescaled: Vec<f64> =
            samples.iter().map(|s| s.steps as f64 / summary.mean).collect();
        stats::test_exp1(&rescaled).unwrap()
    };
    // fixed-seed policy: one re-run with a second fixed seed, both recorded
    let first = run(1010);
    if first.pass {
        println!(
            "criterion 10 PASS: KS p = {:.4} at beta 3 (seed 1010, no re-run needed)",
            first.p_value
        );
        return;
    }
    let second = run(2010);
    assert!(
        second.pass,
        "KS failed twice: p = {} (seed 1010), p = {} (seed 2010)",
        first.p_value, second.p_value
    );
    println!(
        "criterion 10 PASS: KS p = {:.4} (seed 1010, failed) then p = {:.4} (seed 2010)",
        first.p_value, second.p_value
    );
}

#[test]
fn criterion_11_exit_uniformity_and_wald_identity() {
    let spec = grid(2, 3, 3, Boundary::Open);
    let start = Configuration::stable(spec, 1).unwrap();
    let n = 2000;
    let beta = 2.5;

    // arm 1: tunneling to the specific color 2
    let one_params = ChainParams::new(spec, beta, 1111).unwrap();
    let goal = Configuration::stable(spec, 2).unwrap();
    let one = batch_hits(&start, &Target::Explicit(vec![goal]), &one_params, n, 1,
        Method::RejectionFree)
    .unwrap();
    let one_summary = HittingSummary::from_samples(&one).unwrap();

    // arm 2 (independent seed): first hit of any other stable color
    let any_params = ChainParams::new(spec, beta, 1112).unwrap();
    let any = batch_hits(&start, &Target::StablesExcept(1), &any_params, n, 1,
        Method::RejectionFree)
    .unwrap();
    let any_summary = HittingSummary::from_samples(&any).unwrap();

    let exits: Vec<u8> = any.iter().map(|s| s.exit_spin().unwrap()).collect();
    let uniform = stats::test_exit_uniform(&exits, 1, spec.q).unwrap();
    assert!(uniform.pass, "exit uniformity rejected: p = {}", uniform.p_value);

    let wald = stats::test_wald(&any_summary, &one_summary, spec.q).unwrap();
    assert!(wald.pass, "Wald identity rejected: {} (p = {})", wald.note, wald.p_value);

    // renewal legs of full tunneling runs are geometric with success 1/2
    let renew_params = ChainParams::new(spec, beta, 1113).unwrap();
    let runs = batch_tunnels(1, 2, &renew_params, n, 1, Method::RejectionFree).unwrap();
    assert!(runs.iter().all(|r| !r.censored));
    let legs: Vec<u32> = runs.iter().map(|r| r.legs).collect();
    let renewal = stats::test_renewal_geometric(&legs, spec.q).unwrap();
    assert!(renewal.pass, "renewal count off: {}", renewal.note);

    println!(
        "criterion 11 PASS: chi2 p = {:.4}; {}; renewal {}",
        uniform.p_value, wald.note, renewal.note
    );
}

#[test]
fn criterion_12_sample_files_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.conf");
    std::fs::write(
        &config,
        "q = 2\nk = 2\nl = 3\nboundary = open\nbeta = 1.5\nn = 300\nseed = 777\n\
         method = rejection_free\n",
    )
    .unwrap();
    let mut outputs: Vec<(Vec<u8>, Vec<u8>)> = Vec::new();
    for workers in [1usize, 4, 8] {
        let jsonl = dir.path().join(format!("samples-w{workers}.jsonl"));
        let csv = dir.path().join(format!("samples-w{workers}.csv"));
        let summary = dir.path().join(format!("summary-w{workers}.json"));
        for (out, format) in [(&jsonl, "jsonl"), (&csv, "csv")] {
            let status = std::process::Command::new(env!("CARGO_BIN_EXE_potts"))
                .args([
                    "simulate",
                    "--config",
                    config.to_str().unwrap(),
                    "--workers",
                    &workers.to_string(),
                    "--format",
                    format,
                    "--out",
                    out.to_str().unwrap(),
                    "--summary-out",
                    summary.to_str().unwrap(),
                ])
                .status()
                .unwrap();
            assert!(status.success());
        }
        outputs.push((std::fs::read(&jsonl).unwrap(), std::fs::read(&csv).unwrap()));
    }
    assert!(!outputs[0].0.is_empty() && !outputs[0].1.is_empty());
    for (jsonl, csv) in &outputs[1..] {
        assert_eq!(jsonl, &outputs[0].0, "JSONL output differs across worker counts");
        assert_eq!(csv, &outputs[0].1, "CSV output differs across worker counts");
    }
    println!(
        "criterion 12 PASS: byte-identical JSONL and CSV files for workers 1, 4, 8 ({} bytes)",
        outputs[0].0.len()
    );
}
