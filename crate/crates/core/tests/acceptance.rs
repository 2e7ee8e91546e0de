//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use fast_core::aki::AkiIndex;
use fast_core::baselines::{Okt, Ranking, Ril};
use fast_core::bench::{
    gen_objects, gen_queries, mc_replication_at_min_level, run_bench, run_sweep, BenchConfig,
    IndexKind, QueryItem, Sweep, WorkloadSpec,
};
use fast_core::costmodel::{
    expected_replication, expected_replication_uniform, mp_aki, mp_okt, region_probabilities,
    CostParams,
};
use fast_core::index::{FastConfig, FastIndex, MatchStats, MatchTrace};
use fast_core::model::{text_contains, ContinuousQuery, Keyword, MatchResult, Mbr, QueryId};
use fast_core::oracle::{oracle_match, QueryCorpus};
use fast_core::pyramid::PyramidConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const REPLICATION_CLOSED_TOL: f64 = 0.001;
const REPLICATION_MC_TOL: f64 = 0.05;
const REPLICATION_UNIFORM_TOL: f64 = 0.01;
const MODEL_TOL: f64 = 1e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn feed(idx: &mut FastIndex, q: &QueryItem) {
    match q {
        QueryItem::Plain(p) => idx.insert(p.clone()).unwrap(),
        QueryItem::Dnf(d) => idx.insert_dnf(d.clone()).unwrap(),
    }
}

fn corpus_of(items: &[QueryItem]) -> QueryCorpus {
    let mut c = QueryCorpus::new();
    for q in items {
        match q {
            QueryItem::Plain(p) => c.add(p.clone()),
            QueryItem::Dnf(d) => c.add_dnf(d.clone()),
        }
    }
    c
}

/// Criteria 1 and 7 share their workloads.
fn oracle_and_invariants() -> (Outcome, Outcome) {
    let thetas = [2, 5, 10];
    let grans = [8, 64, 512];
    let (mut checked, mut mismatches, mut violations, mut traced) =
        (0u64, Vec::new(), Vec::new(), 0u64);
    for w in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + w);
        let spec = WorkloadSpec {
            n_queries: rng.gen_range(1_000..=10_000),
            n_objects: 1_000,
            vocabulary_size: rng.gen_range(30..=3_000),
            keywords_per_query: rng.gen_range(1..=3),
            keywords_per_object: rng.gen_range(6..=12),
            range_fraction: rng.gen_range(0.005..0.25),
            lifetime: (1, 2_000),
            dnf_fraction: 0.1,
            rect_object_fraction: 0.3,
            rng_seed: w,
            ..Default::default()
        };
        let cfg = FastConfig {
            theta: thetas[(w % 3) as usize],
            gran_max: grans[((w / 3) % 3) as usize],
            clean_interval: rng.gen_range(1..=50),
            descent_trigger: None,
        };
        let queries = gen_queries(&spec).unwrap();
        let objects = gen_objects(&spec).unwrap();
        let mut corpus = corpus_of(&queries);
        let mut idx = FastIndex::new(cfg).unwrap();
        for q in &queries {
            feed(&mut idx, q);
        }
        let audit = |idx: &FastIndex, at: &str| {
            idx.audit().err().map(|e| format!("workload {w} {at}: {e}"))
        };
        violations.extend(audit(&idx, "after ingest"));
        for (j, o) in objects.iter().enumerate() {
            idx.advance_clock(1);
            if rng.gen_bool(0.02) {
                let qid = QueryId(rng.gen_range(0..spec.n_queries as u64));
                if idx.contains(qid) {
                    idx.remove(qid).unwrap();
                    corpus.remove(qid);
                }
            }
            let mut trace = MatchTrace::new();
            let got = idx.match_with_stats(
                o,
                &mut MatchStats::default(),
                o.rect.is_none().then_some(&mut trace),
            );
            let want = oracle_match(&corpus, o, idx.clock());
            checked += 1;
            if got != want && mismatches.len() < 5 {
                mismatches.push(format!(
                    "workload {w} object {}: {:?} vs {:?}",
                    o.oid,
                    got.ids(),
                    want.ids()
                ));
            }
            if let Some(first) = trace.first() {
                traced += 1;
                let monotone = text_contains(&o.text, &first.1)
                    && trace.windows(2).all(|p| text_contains(&p[0].1, &p[1].1));
                if !monotone {
                    violations.push(format!(
                        "workload {w} object {}: keyword set grew while descending",
                        o.oid
                    ));
                }
            }
            if j % 250 == 249 {
                violations.extend(audit(&idx, &format!("after object {j}")));
            }
        }
    }
    let c1 = outcome(
        mismatches.is_empty(),
        if mismatches.is_empty() {
            format!("50 workloads, {checked} objects equal to the oracle")
        } else {
            mismatches.join("; ")
        },
    );
    violations.truncate(5);
    let c7 = outcome(
        violations.is_empty(),
        if violations.is_empty() {
            format!("audits clean across criterion-1 workloads, {traced} point traces monotone")
        } else {
            violations.join("; ")
        },
    );
    (c1, c7)
}

fn cross_index() -> Outcome {
    let mut disagreements = Vec::new();
    let mut compared = 0u64;
    for w in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + w);
        let spec = WorkloadSpec {
            n_queries: 2_000,
            n_objects: 300,
            vocabulary_size: rng.gen_range(20..=500),
            keywords_per_query: rng.gen_range(1..=4),
            keywords_per_object: rng.gen_range(4..=12),
            rng_seed: w,
            ..Default::default()
        };
        let theta = rng.gen_range(1..=10);
        let queries: Vec<ContinuousQuery> = gen_queries(&spec)
            .unwrap()
            .into_iter()
            .map(|q| match q {
                QueryItem::Plain(mut p) => {
                    p.mbr = Mbr::unit();
                    p
                }
                QueryItem::Dnf(_) => unreachable!("no DNF requested"),
            })
            .collect();
        let mut ril = Ril::new(Ranking::Live);
        let mut okt = Okt::new();
        let mut aki = AkiIndex::new(theta).unwrap();
        let mut fast = FastIndex::new(FastConfig {
            theta,
            gran_max: 64,
            ..Default::default()
        })
        .unwrap();
        for q in &queries {
            ril.insert(q);
            okt.insert(q);
            aki.insert(q);
            fast.insert(q.clone()).unwrap();
        }
        for o in gen_objects(&spec).unwrap() {
            let ids = |slots: Vec<u32>, f: &dyn Fn(u32) -> QueryId| {
                MatchResult::from_unsorted(slots.into_iter().map(f).collect())
            };
            let a = ids(ril.verified_search(&o.text), &|s| ril.query_id(s));
            let b = ids(okt.search(&o.text).0, &|s| okt.query_id(s));
            let c = ids(aki.search(&o.text).0, &|s| aki.query_id(s));
            let d = fast.match_object(&o);
            compared += 1;
            if !(a == b && b == c && c == d) && disagreements.len() < 5 {
                disagreements.push(format!("workload {w} object {}", o.oid));
            }
        }
    }
    outcome(
        disagreements.is_empty(),
        if disagreements.is_empty() {
            format!("RIL, OKT, AKI and FAST agree on {compared} objects over 20 workloads")
        } else {
            disagreements.join("; ")
        },
    )
}

fn replication() -> Outcome {
    let closed = expected_replication(0);
    let mc = mc_replication_at_min_level(100_000, 42);
    let uniform = expected_replication_uniform(9).unwrap();
    let ok = [
        (closed - 3.083).abs() <= REPLICATION_CLOSED_TOL,
        (mc - 3.08).abs() <= REPLICATION_MC_TOL,
        (uniform - 1.27).abs() <= REPLICATION_UNIFORM_TOL,
    ];
    outcome(
        ok.iter().all(|&b| b),
        format!(
            "closed form {closed:.4} [{}], Monte-Carlo {mc:.4} [{}], nine-level mean {uniform:.4} vs 1.27 [{}]",
            pf(ok[0]),
            pf(ok[1]),
            pf(ok[2])
        ),
    )
}

fn theta_trend() -> Outcome {
    let spec = WorkloadSpec {
        n_queries: 10_000,
        n_objects: 1_000,
        ..Default::default()
    };
    let thetas = vec![1, 2, 5, 10, 20, 50];
    let rows = run_sweep(
        &spec,
        IndexKind::Fast,
        &BenchConfig::default(),
        &Sweep::Theta(thetas),
    )
    .unwrap();
    let visited: Vec<f64> = rows.iter().map(|r| r.match_queries_mean).collect();
    let nodes: Vec<usize> = rows.iter().map(|r| r.textual_nodes).collect();
    let up = visited.windows(2).all(|w| w[0] <= w[1]);
    let down = nodes.windows(2).all(|w| w[0] >= w[1]);
    let cfg = BenchConfig {
        fast: FastConfig {
            theta: 5,
            ..Default::default()
        },
        ..Default::default()
    };
    let aki = run_bench(&spec, IndexKind::Aki, &cfg)
        .unwrap()
        .textual_nodes;
    let okt = run_bench(&spec, IndexKind::Okt, &cfg)
        .unwrap()
        .textual_nodes;
    let visited_s: Vec<String> = visited.iter().map(|v| format!("{v:.2}")).collect();
    outcome(
        up && down && aki <= okt,
        format!("visited queries {visited_s:?}, textual nodes {nodes:?}, AKI {aki} vs OKT {okt} nodes at theta 5"),
    )
}

fn pyramid_math() -> Outcome {
    let mut errors = Vec::new();
    let mut cells = 0usize;
    for gm in [2u32, 4, 8, 16] {
        let c = PyramidConfig::new(gm).unwrap();
        let mut seen = HashSet::new();
        for level in 0..=c.top_level() {
            let g = c.gran(level).unwrap();
            let side = c.side_len(level).unwrap();
            for y in 0..g {
                for x in 0..g {
                    cells += 1;
                    let a = c.node_address(level, x, y).unwrap();
                    if !seen.insert(a) {
                        errors.push(format!("gran_max {gm}: address {a} repeated"));
                    }
                    if c.decode_address(a).unwrap() != (level, x, y) {
                        errors.push(format!("gran_max {gm}: address {a} does not decode"));
                    }
                    let centre = fast_core::model::Point::new(
                        (x as f64 + 0.5) * side,
                        (y as f64 + 0.5) * side,
                    );
                    if c.cell_coords(centre, level).unwrap() != (x, y) {
                        errors.push(format!(
                            "gran_max {gm}: cell ({x}, {y}) at level {level} does not round-trip"
                        ));
                    }
                }
            }
        }
    }
    let worked = PyramidConfig::new(2)
        .unwrap()
        .node_address(0, 1, 0)
        .unwrap();
    if worked != 1 {
        errors.push(format!("node_address(0, 1, 0) = {worked}"));
    }
    errors.truncate(3);
    outcome(
        errors.is_empty(),
        if errors.is_empty() {
            format!("{cells} cells injective and round-trip, node_address(0, 1, 0) = 1")
        } else {
            errors.join("; ")
        },
    )
}

fn cleaning() -> Outcome {
    let spec = WorkloadSpec {
        n_queries: 5_000,
        vocabulary_size: 100,
        range_fraction: 0.2,
        lifetime: (1, 500),
        dnf_fraction: 0.1,
        ..Default::default()
    };
    let mut idx = FastIndex::new(FastConfig {
        theta: 2,
        gran_max: 64,
        clean_interval: 1,
        descent_trigger: None,
    })
    .unwrap();
    for q in gen_queries(&spec).unwrap() {
        feed(&mut idx, &q);
    }
    let built = idx.store().len();
    idx.set_clock(500);
    let mut passes = 0;
    while idx.clean_queue_len() > 0 && passes < 10 {
        idx.clean_all();
        passes += 1;
    }
    let drained = idx.store().is_empty() && idx.frequencies().is_empty() && idx.live_queries() == 0;

    // A tiny query on the centre corner descends into the four level-2 cells.
    let mut idx = FastIndex::new(FastConfig {
        theta: 5,
        gran_max: 8,
        clean_interval: 1,
        descent_trigger: None,
    })
    .unwrap();
    for i in 0..20u64 {
        let s = 0.001 * (i + 1) as f64;
        idx.insert(
            ContinuousQuery::new(i, Mbr::new(0.1, 0.1, 0.1 + s, 0.1 + s), ["a", "b"], 100).unwrap(),
        )
        .unwrap();
    }
    idx.insert(
        ContinuousQuery::new(99, Mbr::new(0.499, 0.499, 0.5005, 0.5005), ["a", "b"], 3).unwrap(),
    )
    .unwrap();
    let k = idx.placements(QueryId(99)).len();
    idx.set_clock(3);
    let mut counts = vec![(idx.frequencies().count("a"), idx.frequencies().count("b"))];
    for _ in 0..idx.clean_queue_len() {
        idx.clean_step();
        counts.push((idx.frequencies().count("a"), idx.frequencies().count("b")));
    }
    let once = counts.first() == Some(&(21, 21))
        && counts.last() == Some(&(20, 20))
        && counts
            .windows(2)
            .all(|w| w[0].0 >= w[1].0 && w[0].1 >= w[1].1);
    outcome(
        drained && once && k == 4,
        format!(
            "{built} nodes drained in {passes} passes [{}]; query in {k} cells decremented once [{}]",
            pf(drained),
            pf(once && k == 4)
        ),
    )
}

fn cost_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(0..7);
        let words: Vec<Keyword> = (0..n).map(|i| Keyword::new(&format!("s{i}"))).collect();
        let mut p = CostParams {
            theta: rng.gen_range(0..20),
            max_depth: rng.gen_range(1..6),
            ..Default::default()
        };
        for level in 1..=6u32 {
            for w in &words {
                p.alpha.insert((level, w.clone()), rng.gen_range(0.0..=1.0));
            }
        }
        worst = worst.max((mp_aki(1, &words, &p, true) - mp_okt(1, &words, &p)).abs());
    }
    let mut sum_err = 0.0f64;
    for _ in 0..100 {
        let r: f64 = rng.gen_range(0.0..=1.0);
        sum_err = sum_err.max((region_probabilities(r).iter().sum::<f64>() - 1.0).abs());
    }
    outcome(
        worst <= MODEL_TOL && sum_err <= MODEL_TOL,
        format!("max |mp_aki - mp_okt| = {worst:e}, max |sum - 1| = {sum_err:e}"),
    )
}

fn pf(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "off"
    }
}

fn timed(f: impl FnOnce() -> Outcome, limit: Duration) -> (Outcome, Duration) {
    let t = Instant::now();
    let mut o = f();
    let el = t.elapsed();
    if el > limit {
        o.pass = false;
        o.detail = format!("{} (over the {:?} budget)", o.detail, limit);
    }
    (o, el)
}

fn main() {
    let t = Instant::now();
    let (c1, c7) = oracle_and_invariants();
    let shared = t.elapsed();
    let c1 = if shared > Duration::from_secs(300) {
        outcome(false, format!("{} (over budget)", c1.detail))
    } else {
        c1
    };
    let mut rows = vec![(1, "oracle equivalence", c1, shared)];
    let mut add = |n, name, f: fn() -> Outcome, secs| {
        let (o, el) = timed(f, Duration::from_secs(secs));
        rows.push((n, name, o, el));
    };
    add(2, "cross-index equivalence", cross_index, 60);
    add(3, "replication", replication, 30);
    add(4, "theta trend", theta_trend, 120);
    add(5, "pyramid math", pyramid_math, 5);
    add(6, "cleaning", cleaning, 10);
    add(8, "cost-model identities", cost_identities, 5);
    rows.push((7, "invariant suite", c7, shared));
    rows.sort_by_key(|r| r.0);
    let mut failed = 0;
    for (n, name, o, el) in &rows {
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} criterion {n} {name} ({:.1}s): {}",
            if o.pass { "PASS" } else { "FAIL" },
            el.as_secs_f64(),
            o.detail
        );
    }
    println!("{} of {} criteria passed", rows.len() - failed, rows.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
