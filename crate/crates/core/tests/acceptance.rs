//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits nonzero if any failed. Pass criterion numbers as arguments to
//! run a subset, e.g. `cargo test --test acceptance -- 3 7`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use ldp_core::audit::{
    audit_counter_sensitivity, audit_protocol_stream_discrepancy, measure_alpha_obs,
};
use ldp_core::counting::{bt_error_bound, tree_height};
use ldp_core::experiment::{log_squared_fit, median, run_sweep, ExperimentSpec, Family, Protocol};
use ldp_core::*;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use common::*;

type Check = std::result::Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Check,
}

fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

/// Random graph from one of the three test families, `n` in `lo..=hi`.
fn mixed_graph(r: &mut Xoshiro256PlusPlus, i: usize, lo: usize, hi: usize) -> Graph {
    let n = r.random_range(lo..=hi);
    let seed = r.random();
    match i % 3 {
        0 => gen_gnp(n, r.random_range(0.02..0.5), seed).unwrap(),
        1 => {
            let d = r.random_range(1..=6.min(n - 1));
            let n = if n * d % 2 == 1 { n + 1 } else { n };
            gen_regular(n, d, seed).unwrap()
        }
        _ => gen_path(n).unwrap(),
    }
}

fn c1_oracle_equivalence() -> Check {
    let mut r = rng(1);
    for i in 0..200 {
        let g = mixed_graph(&mut r, i, 1, 64);
        let n = g.vertex_count();
        let truth = naive_coreness(&g);
        ensure!(
            exact_coreness(&g) == truth,
            "graph {i}: bucket peeler disagrees with naive oracle"
        );
        let run = run_exact_core(&g, &RunConfig::noiseless()).map_err(|e| e.to_string())?;
        let got: Vec<usize> = run.estimates.values.iter().map(|&x| x as usize).collect();
        ensure!(
            run.estimates.values.iter().all(|x| x.fract() == 0.0) && got == truth,
            "graph {i} (n={n}): estimates differ from oracle"
        );
        ensure!(
            run.rounds() <= n,
            "graph {i}: {} rounds for n={n}",
            run.rounds()
        );
    }
    Ok("200 graphs, estimates equal oracle, rounds <= n".into())
}

fn c2_robustness_chain() -> Check {
    let mut worst_gap = f64::INFINITY;
    for trial in 0..50u64 {
        let g = gen_gnp(256, 8.0 / 256.0, 1000 + trial).unwrap();
        let cfg = RunConfig::default().with_seed(trial);
        let run = run_exact_core(&g, &cfg).map_err(|e| e.to_string())?;
        let k = naive_coreness(&g);
        let alpha = measure_alpha_obs(&run.transcript, &g).map_err(|e| e.to_string())?;
        let est = &run.estimates.values;
        let err = est
            .iter()
            .zip(&k)
            .map(|(e, &k)| (e - k as f64).abs())
            .fold(0.0, f64::max);
        ensure!(
            err <= alpha,
            "trial {trial}: max error {err} > alpha_obs {alpha}"
        );
        worst_gap = worst_gap.min(alpha - err);
        for v in g.vertices() {
            let members: Vec<bool> = est.iter().map(|&e| e >= est[v]).collect();
            let min_deg = induced_min_degree(&g, &members).unwrap() as f64;
            ensure!(
                min_deg >= est[v] - alpha,
                "trial {trial}, vertex {v}: G[U] min degree {min_deg} < {} - {alpha}",
                est[v]
            );
        }
    }
    Ok(format!(
        "50 runs, smallest alpha_obs - max_err = {worst_gap:.2}"
    ))
}

fn c3_error_scaling() -> Check {
    let sizes = vec![1 << 8, 1 << 10, 1 << 12, 1 << 14];
    let mut spec = ExperimentSpec {
        sizes: sizes.clone(),
        family: Family::Regular { degree: 8 },
        epsilons: vec![1.0],
        eta: 1.0,
        counter: CounterKind::BinaryTree,
        memory: MemoryMode::Memoryful,
        protocols: vec![Protocol::Exact],
        trials: 20,
        seed: 3,
        noise: NoiseMode::Laplace,
        timing: false,
    };
    let bt = run_sweep(&spec).map_err(|e| e.to_string())?;
    let medians: Vec<(usize, f64)> = sizes
        .iter()
        .map(|&n| {
            let errs: Vec<f64> = bt.iter().filter(|r| r.n == n).map(|r| r.max_err).collect();
            (n, median(&errs).unwrap())
        })
        .collect();
    let (c, r2) = log_squared_fit(&medians);
    let alpha_medians: Vec<(usize, f64)> = sizes
        .iter()
        .map(|&n| {
            let a: Vec<f64> = bt
                .iter()
                .filter(|r| r.n == n)
                .map(|r| r.alpha_obs)
                .collect();
            (n, median(&a).unwrap())
        })
        .collect();
    let (_, alpha_r2) = log_squared_fit(&alpha_medians);
    let shown: Vec<String> = medians.iter().map(|(n, m)| format!("{n}:{m:.1}")).collect();

    spec.sizes = vec![1 << 14];
    spec.counter = CounterKind::SparseVector;
    spec.trials = 5;
    let sv = run_sweep(&spec).map_err(|e| e.to_string())?;
    let sv_median = median(&sv.iter().map(|r| r.max_err).collect::<Vec<_>>()).unwrap();
    let bt_median = medians.last().unwrap().1;

    let detail = format!(
        "bt medians [{}], fit c={c:.3} R^2={r2:.3} (alpha_obs medians R^2={alpha_r2:.3}); \
         n=2^14 sv median {sv_median:.1} vs bt {bt_median:.1}",
        shown.join(" ")
    );
    ensure!(r2 >= 0.8, "{detail}: R^2 below 0.8");
    ensure!(
        sv_median < bt_median,
        "{detail}: sparse-vector not below binary tree"
    );
    Ok(detail)
}

fn c4_approx_sandwich() -> Check {
    let mut r = rng(4);
    let mut max_rounds_used = 0.0f64;
    for eta in [0.5, 1.0] {
        let c = 2.0 + eta;
        for i in 0..100 {
            let n = r.random_range(16..=512usize);
            let seed = r.random();
            let g = match i % 3 {
                0 => gen_gnp(n, r.random_range(1.0..20.0) / n as f64, seed).unwrap(),
                1 => {
                    let d = r.random_range(2..=10usize);
                    gen_regular(n + n * d % 2, d, seed).unwrap()
                }
                _ => gen_gnp(n, r.random_range(0.02..0.3), seed).unwrap(),
            };
            let n = g.vertex_count();
            let run = run_approx_core(&g, &RunConfig::noiseless().with_eta(eta))
                .map_err(|e| e.to_string())?;
            let sched = &run.schedule;
            let mut phases = 1;
            while (2.0 + eta).powi(phases - 1) < n as f64 {
                phases += 1;
            }
            ensure!(
                sched.phases == phases as usize,
                "n={n} eta={eta}: {} phases, expected {phases}",
                sched.phases
            );
            ensure!(
                run.rounds() <= sched.phases * sched.rounds_per_phase,
                "n={n} eta={eta}: {} rounds > Phi*R",
                run.rounds()
            );
            max_rounds_used =
                max_rounds_used.max(run.rounds() as f64 / sched.total_rounds() as f64);
            let labels: Vec<f64> = (1..=sched.phases as i32)
                .map(|p| (2.0 + eta).powi(p))
                .collect();
            let k = naive_coreness(&g);
            for v in g.vertices() {
                let (e, kv) = (run.estimates.values[v], k[v] as f64);
                ensure!(
                    kv <= e && e <= (2.0 + eta) * kv + c,
                    "eta={eta} graph {i} vertex {v}: k={kv}, k~={e}"
                );
                ensure!(
                    labels.contains(&e),
                    "eta={eta} graph {i}: {e} is not a label"
                );
            }
        }
    }
    Ok(format!(
        "200 runs, C = 2+eta, at most {:.0}% of Phi*R rounds used",
        100.0 * max_rounds_used
    ))
}

fn c5_densest() -> Check {
    let mut r = rng(5);
    let eta = 1.0;
    let mut done = 0;
    while done < 500 {
        let n = r.random_range(2..=12usize);
        let g = gen_gnp(n, r.random_range(0.2..0.9), r.random()).unwrap();
        if !is_connected(&g) {
            continue;
        }
        done += 1;
        let (e_star, v_star) = naive_max_density(&g);
        let rho = Ratio::new(e_star, v_star);
        ensure!(
            brute_force_densest(&g).unwrap().1 == rho,
            "graph {done}: brute force disagrees"
        );
        let k_star = *naive_coreness(&g).iter().max().unwrap() as u64;
        ensure!(
            rho <= Ratio::from_integer(k_star),
            "graph {done}: rho* {rho} > k* {k_star}"
        );

        let cfg = RunConfig::noiseless().with_eta(eta);
        let ex = run_densest(&g, &cfg, DensestMode::Exact).map_err(|e| e.to_string())?;
        let ap = run_densest(&g, &cfg, DensestMode::Approx).map_err(|e| e.to_string())?;
        for (res, name) in [(&ex, "exact"), (&ap, "approx")] {
            let mask = res.subset.iter().fold(0u32, |m, &v| m | 1 << v);
            let own = Ratio::new(edges_in_mask(&g, mask), res.subset.len() as u64);
            ensure!(
                own == res.achieved_density,
                "graph {done}: {name} density mismatch"
            );
        }
        ensure!(
            ex.achieved_density * 2 >= rho,
            "graph {done}: exact density {} < {rho}/2",
            ex.achieved_density
        );
        ensure!(
            ap.achieved_density * 6 >= rho,
            "graph {done}: approx density {} < {rho}/(2(2+eta))",
            ap.achieved_density
        );
    }
    Ok("500 connected graphs, exact >= rho*/2, approx >= rho*/6, rho* <= k*".into())
}

fn c6_query_graph() -> Check {
    let mut r = rng(6);
    let half = 16;
    let bits =
        |r: &mut Xoshiro256PlusPlus| (0..half).map(|_| r.random_bool(0.5)).collect::<Vec<bool>>();
    let mut plus_one = 0;
    for trial in 0..1000 {
        let spec = QueryGraphSpec::new(bits(&mut r), bits(&mut r)).unwrap();
        let g = gen_query_graph(&spec).unwrap();
        let ip = spec.inner_product();
        let kx = naive_coreness(&g)[spec.x_vertex()];
        ensure!(
            kx == ip || kx == ip + 1,
            "trial {trial}: coreness(x) = {kx}, <Q,X> = {ip}"
        );
        plus_one += usize::from(kx == ip + 1);

        let other_q = QueryGraphSpec::new(spec.secret.clone(), bits(&mut r)).unwrap();
        let other_x = QueryGraphSpec::new(bits(&mut r), spec.query.clone()).unwrap();
        let (gq, gx) = (
            gen_query_graph(&other_q).unwrap(),
            gen_query_graph(&other_x).unwrap(),
        );
        ensure!(
            g.neighbors(0) == gq.neighbors(0),
            "trial {trial}: N(x) depends on Q"
        );
        for b in spec.b_vertices() {
            ensure!(
                g.neighbors(b) == gx.neighbors(b),
                "trial {trial}: N(b) depends on X"
            );
        }
        for i in 0..half {
            let a = spec.a_vertex(i);
            let base: Vec<usize> = if spec.secret[i] { vec![0] } else { vec![] };
            let with_b: Vec<usize> = base.iter().copied().chain(spec.b_vertices()).collect();
            for h in [&g, &gq] {
                let nb = h.neighbors(a);
                ensure!(
                    nb == base || nb == with_b,
                    "trial {trial}: a_{i} has a third neighborhood"
                );
            }
        }
    }
    Ok(format!(
        "1000 pairs, coreness(x) = <Q,X>+1 in {plus_one}, structure checks hold"
    ))
}

fn c7_counting() -> Check {
    let mut r = rng(7);
    let off = NoiseSource::disabled();
    for s in 0..10_000u64 {
        let len = r.random_range(1..=256usize);
        let sparse = r.random_bool(0.5);
        let xs: Vec<u64> = (0..len)
            .map(|_| {
                if sparse && r.random_bool(0.8) {
                    0
                } else {
                    r.random_range(0..=4)
                }
            })
            .collect();
        let truth = prefix_sums(&xs);
        for kind in [CounterKind::BinaryTree, CounterKind::SparseVector] {
            let cfg = CounterConfig::new(kind, len, 1.0).unwrap();
            let mut c = AdaptiveCounter::new(&cfg, s as usize).unwrap();
            for (t, &x) in xs.iter().enumerate() {
                let got = c.insert(x, &off).map_err(|e| e.to_string())?.sum;
                ensure!(
                    got == truth[t] as f64,
                    "{kind:?} stream {s}: step {t} released {got}, expected {}",
                    truth[t]
                );
            }
        }
    }

    let horizon = 1 << 10;
    let h = tree_height(horizon) as usize;
    let cfg = CounterConfig::new(CounterKind::BinaryTree, horizon, 1.0).unwrap();
    let report = audit_counter_sensitivity(&cfg, horizon, 1000, 7).map_err(|e| e.to_string())?;
    ensure!(report.pass, "sensitivity audit failed: {}", report.details);
    for pair in 0..1000 {
        let a: Vec<u64> = (0..horizon).map(|_| r.random_range(0..=4)).collect();
        let mut b = a.clone();
        let s = r.random_range(0..horizon);
        b[s] += 1;
        let (pa, pb) = (prefix_sums(&a), prefix_sums(&b));
        let block = |p: &[u64], t: usize| {
            p[t - 1]
                - if t > (t & t.wrapping_neg()) {
                    p[t - (t & t.wrapping_neg()) - 1]
                } else {
                    0
                }
        };
        let diffs: Vec<u64> = (1..=horizon)
            .map(|t| block(&pb, t) - block(&pa, t))
            .filter(|&d| d != 0)
            .collect();
        ensure!(
            diffs.len() <= h + 1 && diffs.iter().all(|&d| d == 1),
            "pair {pair}: node differences {diffs:?}"
        );
    }

    let big = 1 << 14;
    let beta = 0.01;
    let bound = bt_error_bound(big, beta / big as f64, 1.0);
    let cfg = CounterConfig::new(CounterKind::BinaryTree, big, 1.0).unwrap();
    let mut worst: Vec<f64> = (0..500u64)
        .map(|s| {
            let noise = NoiseSource::laplace(7_000 + s);
            let mut c = AdaptiveCounter::new(&cfg, 0).unwrap();
            let mut acc = 0u64;
            (0..big).fold(0.0f64, |m, _| {
                let x = r.random_range(0..=4);
                acc += x;
                m.max((c.insert(x, &noise).unwrap().sum - acc as f64).abs())
            })
        })
        .collect();
    worst.sort_by(f64::total_cmp);
    let p99 = worst[(worst.len() * 99).div_ceil(100) - 1];
    ensure!(
        p99 <= bound,
        "99th percentile error {p99:.1} above bound {bound:.1}"
    );
    Ok(format!(
        "10^4 zero-noise streams exact, 1000 neighboring pairs within h+1 = {} nodes, p99 max error {p99:.1} <= {bound:.1}",
        h + 1
    ))
}

fn c8_memoryless() -> Check {
    let mut r = rng(8);
    for i in 0..50 {
        let g = mixed_graph(&mut r, i, 2, 128);
        let truth = exact_coreness(&g);
        let base = RunConfig::default().with_seed(r.random());
        let [ful, less] =
            [MemoryMode::Memoryful, MemoryMode::Memoryless].map(|m| base.clone().with_memory(m));
        let (a, b) = (
            run_exact_core(&g, &ful).unwrap(),
            run_exact_core(&g, &less).unwrap(),
        );
        ensure!(
            a.transcript.to_jsonl() == b.transcript.to_jsonl(),
            "graph {i}: exact transcripts differ"
        );
        ensure!(
            a.estimates.to_csv(&truth) == b.estimates.to_csv(&truth),
            "graph {i}: exact CSV differs"
        );
        let (a, b) = (
            run_approx_core(&g, &ful).unwrap(),
            run_approx_core(&g, &less).unwrap(),
        );
        ensure!(
            a.transcript.to_jsonl() == b.transcript.to_jsonl(),
            "graph {i}: approx transcripts differ"
        );
        ensure!(
            a.estimates.to_csv(&truth) == b.estimates.to_csv(&truth),
            "graph {i}: approx CSV differs"
        );
    }
    Ok("50 graphs, exact and approx transcripts and CSV byte-identical".into())
}

fn c9_protocol_sensitivity() -> Check {
    let mut r = rng(9);
    let mut added = 0;
    for i in 0..100 {
        let g = gen_gnp(64, r.random_range(2.0..10.0) / 64.0, r.random()).unwrap();
        let u = r.random_range(0..64);
        let w = (u + r.random_range(1..64)) % 64;
        added += usize::from(!g.has_edge(u, w));
        let cfg = RunConfig::default().with_seed(r.random());
        let report =
            audit_protocol_stream_discrepancy(&g, (u, w), &cfg).map_err(|e| e.to_string())?;
        ensure!(report.pass, "pair {i} edge ({u},{w}): {}", report.details);

        let h = g.toggle_edge(u, w).unwrap();
        let (a, b) = (
            run_exact_core(&g, &cfg).unwrap(),
            run_exact_core(&h, &cfg).unwrap(),
        );
        let (ma, mb) = (
            &a.transcript.rounds()[0].msgs,
            &b.transcript.rounds()[0].msgs,
        );
        for v in g.vertices() {
            let diff = (ma[v] - mb[v]).abs();
            let expected = if v == u || v == w { 1.0 } else { 0.0 };
            ensure!(
                (diff - expected).abs() < 1e-9,
                "pair {i}: round-1 message of {v} moved by {diff}"
            );
        }
    }
    Ok(format!(
        "100 pairs ({added} additions, {} removals) pass",
        100 - added
    ))
}

fn main() {
    let criteria = [
        Criterion {
            id: 1,
            name: "oracle equivalence",
            budget: Duration::from_secs(10),
            run: c1_oracle_equivalence,
        },
        Criterion {
            id: 2,
            name: "robustness chain",
            budget: Duration::from_secs(30),
            run: c2_robustness_chain,
        },
        Criterion {
            id: 3,
            name: "error scaling",
            budget: Duration::from_secs(600),
            run: c3_error_scaling,
        },
        Criterion {
            id: 4,
            name: "approximate sandwich",
            budget: Duration::from_secs(60),
            run: c4_approx_sandwich,
        },
        Criterion {
            id: 5,
            name: "densest subgraph",
            budget: Duration::from_secs(120),
            run: c5_densest,
        },
        Criterion {
            id: 6,
            name: "query graph",
            budget: Duration::from_secs(10),
            run: c6_query_graph,
        },
        Criterion {
            id: 7,
            name: "counting mechanism",
            budget: Duration::from_secs(120),
            run: c7_counting,
        },
        Criterion {
            id: 8,
            name: "memoryless equivalence",
            budget: Duration::from_secs(30),
            run: c8_memoryless,
        },
        Criterion {
            id: 9,
            name: "protocol sensitivity",
            budget: Duration::from_secs(60),
            run: c9_protocol_sensitivity,
        },
    ];
    let only: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for c in criteria
        .iter()
        .filter(|c| only.is_empty() || only.contains(&c.id))
    {
        let start = Instant::now();
        let outcome =
            catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(_) if took > c.budget => Err(format!("took {took:.1?}, budget {:?}", c.budget)),
            other => other,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!(
            "criterion {} ({}): {tag} [{took:.1?}] {detail}",
            c.id, c.name
        );
        failed += usize::from(outcome.is_err());
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
