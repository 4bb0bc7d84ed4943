//! Acceptance criteria, run sequentially so the timing checks do not compete
//! with each other. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use symcum::cli_io::stats::{std_bound_tensor, SAFETY_FACTOR};
use symcum::cli_io::{generate, Covariance, Distribution, GeneratorSpec};
use symcum::moments::{moment, moment_block_parallel, moment_parallel};
use symcum::oracle::{dense_cumulant4_direct, dense_cumulants_upto};
use symcum::partitions::{
    bell, count_f, enumerate_partitions, enumerate_partitions_min2, mult_count_n, stirling2,
    stirling2_min2, stirling2_min2_formula,
};
use symcum::symtensor::BlockLayout;
use symcum::tolerance::worst_ratio;
use symcum::{center, cumulants_upto, BlockSymTensor, DataMatrix, TensorIndex};

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn data(dist: Distribution, n: usize, t: usize, seed: u64) -> DataMatrix {
    generate(&GeneratorSpec { dist, n, t, seed }).expect("generator")
}

fn bits(t: &BlockSymTensor) -> Vec<u64> {
    t.blocks()
        .iter()
        .flat_map(|b| b.data().iter().map(|v| v.to_bits()))
        .collect()
}

fn oracle_equivalence() -> Outcome {
    let dists = [
        Distribution::Gaussian(Covariance::Random),
        Distribution::Uniform,
        Distribution::Exponential,
    ];
    let mut cases = 0;
    let mut worst = 0.0f64;
    for n in 2..=5 {
        for t in [100, 1000] {
            for dist in &dists {
                for seed in 0..3u64 {
                    let x = data(dist.clone(), n, t, 1000 * n as u64 + seed);
                    let dense = dense_cumulants_upto(&x, 6).map_err(|e| e.to_string())?;
                    let b = 1 + seed as usize;
                    let set = cumulants_upto(&x, 6, b).map_err(|e| e.to_string())?;
                    let (r, _) = worst_ratio(set.mean(), dense[0].data(), 1e-9, 1e-12);
                    worst = worst.max(r);
                    for m in 2..=6 {
                        let block = set.tensor(m).expect("order present");
                        let got = block.to_dense().map_err(|e| e.to_string())?;
                        let (r, at) = worst_ratio(got.data(), dense[m - 1].data(), 1e-9, 1e-12);
                        worst = worst.max(r);
                        ensure(r <= 1.0, || {
                            format!("n={n} m={m} t={t} {dist:?} seed={seed}: ratio {r:.3} at {at}")
                        })?;
                        cases += 1;
                    }
                }
            }
        }
    }
    Ok(format!("{cases} cases, worst tolerance ratio {worst:.3}"))
}

fn combinatorial_tables() -> Outcome {
    let e = |x: symcum::Result<u64>| x.map_err(|e| e.to_string());
    for (m, s, want) in [(4, 2, 3), (5, 2, 10), (6, 2, 25), (6, 3, 15)] {
        let got = e(stirling2_min2(m, s))?;
        ensure(got == want, || {
            format!("S'({m},{s}) = {got}, expected {want}")
        })?;
    }
    for (m, want) in [(4, 3), (5, 10), (6, 55)] {
        let got = e(mult_count_n(m))?;
        ensure(got == want, || format!("N({m}) = {got}, expected {want}"))?;
    }
    for m in [2, 3] {
        let got = e(count_f(m))?;
        ensure(got == 1, || format!("F({m}) = {got}, expected 1"))?;
    }
    for m in 1..=10 {
        let mut all = 0;
        let mut min2 = 0;
        for s in 1..=m {
            let p = enumerate_partitions(m, s).map_err(|e| e.to_string())?.len() as u64;
            let want = e(stirling2(m, s))?;
            ensure(p == want, || {
                format!("S({m},{s}): enumerated {p}, formula {want}")
            })?;
            let q = enumerate_partitions_min2(m, s)
                .map_err(|e| e.to_string())?
                .len() as u64;
            let want = e(stirling2_min2_formula(m, s))?;
            ensure(q == want, || {
                format!("S'({m},{s}): enumerated {q}, formula {want}")
            })?;
            all += p;
            min2 += q;
        }
        ensure(all == e(bell(m))?, || format!("Bell({m}) mismatch"))?;
        ensure(min2 == e(count_f(m))?, || format!("F({m}) mismatch"))?;
    }
    Ok("S', N, F and enumeration counts for m <= 10".into())
}

fn low_order_specializations() -> Outcome {
    let mut checked = 0;
    for n in 1..=5 {
        for seed in 0..3u64 {
            let x = data(
                Distribution::Gaussian(Covariance::Random),
                n,
                500,
                50 + seed,
            );
            let b = 1 + seed as usize;
            let set = cumulants_upto(&x, 4, b).map_err(|e| e.to_string())?;
            let xc = center(&x);
            for m in [2, 3] {
                let mom = moment(&xc, m, b).map_err(|e| e.to_string())?;
                ensure(bits(set.tensor(m).expect("order")) == bits(&mom), || {
                    format!("C{m} differs from the central moment at n={n} seed={seed}")
                })?;
            }
            let direct = dense_cumulant4_direct(&x).map_err(|e| e.to_string())?;
            let got = set
                .tensor(4)
                .expect("order")
                .to_dense()
                .map_err(|e| e.to_string())?;
            let (r, at) = worst_ratio(got.data(), direct.data(), 1e-10, 1e-12);
            ensure(r <= 1.0, || {
                format!("C4 at n={n} seed={seed}: ratio {r:.3} at {at}")
            })?;
            checked += 1;
        }
    }
    Ok(format!(
        "{checked} datasets, C2/C3 bitwise, C4 within 1e-10"
    ))
}

fn gaussian_vanishing() -> Outcome {
    let (n, t, b) = (3, 1_000_000, 2);
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let x = data(
            Distribution::Gaussian(Covariance::Random),
            n,
            t,
            7000 + seed,
        );
        let set = cumulants_upto(&x, 4, b).map_err(|e| e.to_string())?;
        let xc = center(&x);
        let mut ok = true;
        for m in [3, 4] {
            let c = set.tensor(m).expect("order");
            let sd = std_bound_tensor(&xc, m, b).map_err(|e| e.to_string())?;
            for (cb, sb) in c.blocks().iter().zip(sd.blocks()) {
                for (&v, &s) in cb.data().iter().zip(sb.data()) {
                    let r = v.abs() / (SAFETY_FACTOR * s);
                    worst = worst.max(r);
                    ok &= r < 1.0;
                }
            }
        }
        if !ok {
            failures.push(seed);
        }
    }
    ensure(failures.len() <= 1, || {
        format!(
            "{} of 20 runs exceed the bound (seeds {failures:?})",
            failures.len()
        )
    })?;
    Ok(format!(
        "{} of 20 runs exceed 5 sd, largest |C|/(5 sd) {worst:.3}",
        failures.len()
    ))
}

fn parallel_consistency() -> Outcome {
    let x = center(&data(Distribution::Exponential, 6, 10_007, 11));
    let mut worst = 0.0f64;
    for m in [2, 3, 4] {
        let serial = moment(&x, m, 2).map_err(|e| e.to_string())?;
        for p in [1, 2, 3, 4, 7] {
            let par = moment_parallel(&x, m, 2, p).map_err(|e| e.to_string())?;
            if p == 1 {
                ensure(bits(&par) == bits(&serial), || {
                    format!("p=1 not bitwise at m={m}")
                })?;
            }
            let (r, at) = worst_ratio(&flat(&par), &flat(&serial), 1e-12, 0.0);
            worst = worst.max(r);
            ensure(r <= 1.0, || {
                format!("samples p={p} m={m}: ratio {r:.3} at {at}")
            })?;
            let blocks = moment_block_parallel(&x, m, 2, p).map_err(|e| e.to_string())?;
            ensure(bits(&blocks) == bits(&serial), || {
                format!("block split p={p} m={m} differs from serial")
            })?;
        }
    }
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    Ok(format!(
        "t=10007, worst tolerance ratio {worst:.3}, {threads} hardware thread(s)"
    ))
}

fn flat(t: &BlockSymTensor) -> Vec<f64> {
    t.blocks().iter().flat_map(|b| b.data().to_vec()).collect()
}

fn best_ms(reps: usize, mut f: impl FnMut()) -> f64 {
    (0..reps)
        .map(|_| {
            let s = Instant::now();
            f();
            s.elapsed().as_secs_f64() * 1e3
        })
        .fold(f64::INFINITY, f64::min)
}

fn speedup() -> Outcome {
    let (n, m, t, b) = (40, 4, 100_000, 2);
    let x = data(Distribution::Gaussian(Covariance::Identity), n, t, 3);
    let block = best_ms(3, || {
        std::hint::black_box(cumulants_upto(&x, m, b).expect("block"));
    });
    let naive = best_ms(1, || {
        std::hint::black_box(dense_cumulant4_direct(&x).expect("naive"));
    });
    let stored = BlockLayout::new(n, m, b)
        .map_err(|e| e.to_string())?
        .stored_len();
    let storage = n.pow(m as u32) as f64 / stored as f64;
    let ratio = naive / block;
    let detail = format!(
        "block {block:.0} ms, naive4 {naive:.0} ms, speedup {ratio:.1}x, storage ratio {storage:.2}"
    );
    ensure(ratio >= 5.0 && storage >= 15.0, || detail.clone())?;
    Ok(detail)
}

fn supersymmetry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut total = 0;
    for m in 2..=6 {
        let tensors: Vec<BlockSymTensor> = (0..10)
            .map(|k| {
                let n = rng.random_range(1..=7);
                let b = rng.random_range(1..=4);
                let x = data(Distribution::Exponential, n, 40, 100 * m as u64 + k);
                moment(&x, m, b).expect("moment")
            })
            .collect();
        for _ in 0..1000 {
            let tensor = &tensors[rng.random_range(0..tensors.len())];
            let n = tensor.n();
            let idx: Vec<usize> = (0..m).map(|_| rng.random_range(1..=n)).collect();
            let mut perm = idx.clone();
            perm.shuffle(&mut rng);
            let a = tensor.get(&TensorIndex::new(idx.clone(), n).map_err(|e| e.to_string())?);
            let b = tensor.get(&TensorIndex::new(perm.clone(), n).map_err(|e| e.to_string())?);
            let (a, b) = (a.map_err(|e| e.to_string())?, b.map_err(|e| e.to_string())?);
            ensure(a.to_bits() == b.to_bits(), || {
                format!("m={m}: get({idx:?}) = {a} but get({perm:?}) = {b}")
            })?;
            total += 1;
        }
    }
    Ok(format!("{total} triples"))
}

fn block_size_study() -> Outcome {
    let (n, m, t) = (48, 4, 10_000);
    let sizes = [1, 2, 3, 4, 6];
    let x = data(Distribution::Gaussian(Covariance::Identity), n, t, 5);
    let mut best = [f64::INFINITY; 5];
    // interleave the sizes so drift in machine load affects them alike
    for _ in 0..5 {
        for (k, &b) in sizes.iter().enumerate() {
            let ms = best_ms(1, || {
                std::hint::black_box(cumulants_upto(&x, m, b).expect("block"));
            });
            best[k] = best[k].min(ms);
        }
    }
    let fastest = best.iter().copied().fold(f64::INFINITY, f64::min);
    let rel = best[1] / fastest;
    let table: Vec<String> = sizes
        .iter()
        .zip(&best)
        .map(|(b, ms)| format!("b={b}:{ms:.0}ms"))
        .collect();
    let detail = format!("{}, b=2 at {rel:.3} of fastest", table.join(" "));
    ensure(rel <= 1.10, || detail.clone())?;
    Ok(detail)
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 8] = [
        ("1 oracle equivalence", oracle_equivalence),
        ("2 combinatorial tables", combinatorial_tables),
        ("3 order-2/3/4 specializations", low_order_specializations),
        ("4 gaussian vanishing", gaussian_vanishing),
        ("5 parallel consistency", parallel_consistency),
        ("6 speedup and storage", speedup),
        ("7 super-symmetry", supersymmetry),
        ("8 block-size study", block_size_study),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} ({secs:.1}s)"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail} ({secs:.1}s)");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
