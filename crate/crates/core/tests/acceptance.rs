//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the run fails if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use fuzzgrain::channels::{fuzzy_random_with, realization_rng};
use fuzzgrain::spectral::{ansatz_log_volume, random_fixed_point, UNIT_TOL};
use fuzzgrain::symmetry::binomial;
use fuzzgrain::xxchain::{ImpurityState, DEFAULT_P};
use fuzzgrain::*;
use rand::seq::SliceRandom;
use rand::Rng;

type Outcome = std::result::Result<String, String>;

fn shape(n: usize, d: usize) -> SystemShape {
    SystemShape::new(n, d).unwrap()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_channel(n: usize, seed: u64, index: u64) -> FuzzyChannel {
    let mut rng = realization_rng(seed, index);
    let model = RandomModel::ALL[(index as usize) % 3];
    let model = if n < 2 { RandomModel::General } else { model };
    let p = rng.random_range(0.05..0.95);
    fuzzy_random_with(shape(n, 2), p, model, SimplexSampling::default(), &mut rng).unwrap()
}

fn unit_counts() -> Outcome {
    let mut seen = Vec::new();
    for n in 2..=6 {
        let ch = fuzzy_random(shape(n, 2), 0.4, RandomModel::General, 100 + n as u64).map_err(|e| e.to_string())?;
        ensure(ch.is_generic(), || format!("n={n}: channel is not generic"))?;
        let report = full_spectrum(&ch).map_err(|e| e.to_string())?;
        let want = binomial(n as u64 + 3, n as u64) as usize;
        ensure(report.unit_count == want, || format!("n={n}: {} unit eigenvalues, expected {want}", report.unit_count))?;
        seen.push(report.unit_count.to_string());
    }
    Ok(format!("unit counts for n=2..6: {}", seen.join(", ")))
}

fn block_completeness() -> Outcome {
    for n in 1..=4 {
        let s = shape(n, 2);
        let mut seen = vec![false; 1 << (2 * n)];
        for gamma in enumerate_sectors(s) {
            for kb in sector_basis(&gamma, s).map_err(|e| e.to_string())? {
                let (r, c) = kb.position(s);
                let k = r * s.hilbert_dim() + c;
                ensure(!seen[k], || format!("n={n}: ket-bra {kb:?} in two sectors"))?;
                seen[k] = true;
            }
        }
        ensure(seen.iter().all(|&b| b), || format!("n={n}: sectors miss a ket-bra"))?;
    }
    let mut worst = 0.0f64;
    for k in 0..20u64 {
        let n = 2 + (k as usize % 3);
        let ch = random_channel(n, 7, k);
        let rho = random_density(shape(n, 2), 1000 + k);
        let dense = ch.apply(&rho).map_err(|e| e.to_string())?;
        let blockwise = apply_blockwise(&ch, &rho).map_err(|e| e.to_string())?;
        worst = worst.max(dense.max_abs_diff(&blockwise));
    }
    ensure(worst <= 1e-10, || format!("blockwise application differs by {worst:e}"))?;
    Ok(format!("sectors partition 4^n for n<=4; 20 channels, max deviation {worst:.1e}"))
}

fn volume_contraction() -> Outcome {
    let p = 0.5;
    let rows = volume_scan(RandomModel::General, 2, p, 3..=6, 11).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for row in &rows {
        let rel = (row.log_ratio_empirical - row.log_ratio_measured).abs() / row.log_ratio_measured.abs();
        println!(
            "      n={} measured={:.4} ansatz={:.4} empirical={:.4} rel={:.4}",
            row.n, row.log_ratio_measured, row.log_ratio_ansatz, row.log_ratio_empirical, rel
        );
        let expected = ansatz_log_volume(2, row.n, p).map_err(|e| e.to_string())?;
        ensure(expected == row.log_ratio_ansatz, || "ansatz column mismatch".into())?;
        worst = worst.max(rel);
    }
    ensure(worst < 0.10, || format!("relative deviation {worst:.4} >= 0.10"))?;
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.log_ratio_measured.abs().ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let target = 2.0 * 2f64.ln();
    ensure((slope - target).abs() <= 0.2 * target, || format!("slope {slope:.4} vs {target:.4}"))?;
    Ok(format!("p={p}: max relative deviation {worst:.4}, slope {slope:.4} (2 ln 2 = {target:.4})"))
}

fn ensemble_self_averaging() -> Outcome {
    let gamma = GammaSignature::diagonal(&[5, 1]).unwrap();
    let p = 0.5;
    let run = |model| ensemble_spectrum(model, shape(6, 2), p, &gamma, 1000, 2024).map_err(|e| e.to_string());
    let general = run(RandomModel::General)?;
    let two_body = run(RandomModel::TwoBody)?;
    let chain = run(RandomModel::Chain)?;
    ensure(general.std < two_body.std && general.std < chain.std, || {
        format!("std general {:.4}, two-body {:.4}, chain {:.4}", general.std, two_body.std, chain.std)
    })?;
    let imag = chain.max_abs_imag();
    ensure(imag <= 1e-9, || format!("chain spectrum has imaginary part {imag:e}"))?;
    Ok(format!(
        "p={p}: std general {:.4} < two-body {:.4}, chain {:.4}; chain max |Im| {imag:.1e}",
        general.std, two_body.std, chain.std
    ))
}

fn connecting_permutations() -> Outcome {
    let mut pairs = 0usize;
    for n in 1..=5 {
        let s = shape(n, 2);
        for gamma in enumerate_sectors(s) {
            let basis = sector_basis(&gamma, s).map_err(|e| e.to_string())?;
            for a in &basis {
                for b in &basis {
                    let p = connecting_permutation(a, b, 2).map_err(|e| format!("{a:?} -> {b:?}: {e}"))?;
                    ensure(&a.permuted(&p) == b, || format!("{a:?} does not map to {b:?}"))?;
                    if n <= 3 {
                        let conj = permute_particles(&a.to_operator(s), &p).map_err(|e| e.to_string())?;
                        ensure(conj == b.to_operator(s), || format!("operator conjugation fails for {a:?}"))?;
                    }
                    pairs += 1;
                }
            }
        }
    }
    Ok(format!("{pairs} same-sector pairs connected for d=2, n<=5"))
}

fn fixed_point_symmetry() -> Outcome {
    let mut checked = 0;
    let mut worst = 0.0f64;
    let mut rng = realization_rng(5, 0);
    for n in [3usize, 4] {
        let s = shape(n, 2);
        let chain_pairs: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
        let star_pairs: Vec<(usize, usize)> = (1..n).map(|i| (0, i)).collect();
        let all_pairs: Vec<(usize, usize)> = uniform_pairs(n).into_iter().map(|(pair, _)| pair).collect();
        for pairs in [chain_pairs, star_pairs, all_pairs] {
            let weighted: Vec<((usize, usize), f64)> =
                pairs.iter().map(|&pair| (pair, rng.random_range(0.1..1.0))).collect();
            let ch = fuzzy_two_body(s, rng.random_range(0.1..0.9), &weighted).map_err(|e| e.to_string())?;
            for k in 0..3 {
                let delta = random_fixed_point(&ch, 100 * n as u64 + k).map_err(|e| e.to_string())?;
                let outcome = check_group_invariance(&ch, &delta).map_err(|e| e.to_string())?;
                ensure(outcome.fixed, || format!("n={n}: constructed operator is not fixed"))?;
                for _ in 0..50 {
                    let mut image: Vec<usize> = (0..n).collect();
                    image.shuffle(&mut rng);
                    let p = Permutation::new(image).unwrap();
                    let moved = permute_particles(&delta, &p).map_err(|e| e.to_string())?;
                    worst = worst.max(moved.max_abs_diff(&delta));
                    checked += 1;
                }
            }
        }
    }
    ensure(worst <= 1e-10, || format!("fixed point moves by {worst:e} under a permutation"))?;
    Ok(format!("{checked} permutation checks on fixed points, max deviation {worst:.1e}"))
}

fn invariant_states() -> Outcome {
    let mut worst = 0.0f64;
    let mut blocks = 0;
    for n in 1..=4 {
        let s = shape(n, 2);
        for seed in 0..3u64 {
            let ch = fuzzy_random(s, 0.3, RandomModel::General, 40 + seed).map_err(|e| e.to_string())?;
            for gamma in enumerate_sectors(s) {
                let st = invariant_state(&gamma, s).map_err(|e| e.to_string())?;
                worst = worst.max(ch.apply(&st).map_err(|e| e.to_string())?.max_abs_diff(&st));
                let ev = block(&ch, &gamma).and_then(|b| b.eigenvalues()).map_err(|e| e.to_string())?;
                let top = ev.iter().filter(|z| z.norm() >= 1.0 - UNIT_TOL).count();
                ensure(top == 1, || format!("n={n}, sector {gamma}: {top} eigenvalues of unit modulus"))?;
                blocks += 1;
            }
        }
    }
    ensure(worst <= 1e-12, || format!("invariant state moves by {worst:e}"))?;
    Ok(format!("{blocks} generic blocks with a unique unit-modulus eigenvalue; max deviation {worst:.1e}"))
}

fn majorization() -> Outcome {
    let s = shape(3, 2);
    let mut violations = 0;
    for k in 0..1000u64 {
        let ch = random_channel(3, 99, k);
        let rho = random_density(s, 5000 + k);
        let r = majorization_check(&ch, &rho).map_err(|e| e.to_string())?;
        if !r.majorized || !r.entropy_nondecreasing() {
            violations += 1;
        }
    }
    ensure(violations == 0, || format!("{violations} violations"))?;
    Ok("1000 random (state, channel) pairs, no violations".into())
}

fn entanglement_waves() -> Outcome {
    let mut worst = 0.0f64;
    for t in [2.0, 4.0, 6.0] {
        let map = concurrence_map(t, Scheme::Exact, None).map_err(|e| e.to_string())?;
        let state = ImpurityState::at_time(t, map.window).map_err(|e| e.to_string())?;
        for (i, j, c) in map.pairs() {
            worst = worst.max((c - 2.0 * (state.amplitude(i) * state.amplitude(j)).norm()).abs());
        }
    }
    ensure(worst <= 1e-10, || format!("closed form deviates by {worst:e}"))?;
    let t = 6.0;
    let exact = concurrence_map(t, Scheme::Exact, None).map_err(|e| e.to_string())?;
    let fuzzy = concurrence_map(t, Scheme::Fuzzy { p: DEFAULT_P }, None).map_err(|e| e.to_string())?;
    let cg2 = concurrence_map(t, Scheme::Grouped { size: 2 }, None).map_err(|e| e.to_string())?;
    let cg4 = concurrence_map(t, Scheme::Grouped { size: 4 }, None).map_err(|e| e.to_string())?;
    ensure(fuzzy.max() < exact.max(), || format!("fuzzy max {} >= exact max {}", fuzzy.max(), exact.max()))?;
    ensure(cg2.max() >= cg4.max(), || format!("cg2 max {} < cg4 max {}", cg2.max(), cg4.max()))?;
    for map in [&exact, &fuzzy, &cg2, &cg4] {
        let defect = map.mirror_defect();
        ensure(defect <= 1e-12, || format!("{} map mirror defect {defect:e}", map.scheme))?;
    }
    Ok(format!(
        "closed form to {worst:.1e}; t=6 maxima exact {:.4}, fuzzy(p={DEFAULT_P}) {:.4}, cg2 {:.4}, cg4 {:.4}",
        exact.max(),
        fuzzy.max(),
        cg2.max(),
        cg4.max()
    ))
}

fn rescaling_identity() -> Outcome {
    let mut rng = realization_rng(3, 1);
    for k in 0..20u64 {
        let n = 1 + (k as usize % 4);
        let ch = random_channel(n, 21, k);
        let p = rng.random_range(0.0..1.0);
        let ok = rescaled_spectrum_identity_check(&ch, p).map_err(|e| e.to_string())?;
        ensure(ok, || format!("channel {k} (n={n}), p={p}: spectra differ"))?;
    }
    Ok("20 random channels, n<=4".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("unit-eigenvalue count", unit_counts),
        ("block completeness", block_completeness),
        ("volume contraction", volume_contraction),
        ("ensemble self-averaging", ensemble_self_averaging),
        ("connecting permutations", connecting_permutations),
        ("fixed-point symmetry", fixed_point_symmetry),
        ("invariant states and ergodicity", invariant_states),
        ("majorization", majorization),
        ("entanglement waves", entanglement_waves),
        ("spectrum rescaling identity", rescaling_identity),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1}s]", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{secs:.1}s]", k + 1);
            }
        }
    }
    println!("{} of {} acceptance criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
