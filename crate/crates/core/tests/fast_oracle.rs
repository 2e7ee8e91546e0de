use fast_core::bench::{gen_objects, gen_queries, QueryItem, WorkloadSpec};
use fast_core::index::{FastConfig, FastIndex, MatchTrace};
use fast_core::model::{text_contains, Mbr, QueryId, SpatioTextualObject};
use fast_core::oracle::{oracle_match, QueryCorpus};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

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

fn feed(idx: &mut FastIndex, q: &QueryItem) {
    match q {
        QueryItem::Plain(p) => idx.insert(p.clone()).unwrap(),
        QueryItem::Dnf(d) => idx.insert_dnf(d.clone()).unwrap(),
    }
}

/// Streams objects against `idx`, stepping the clock and removing some
/// queries eagerly, and checks every result and every invariant.
fn drive(seed: u64, theta: usize, gran_max: u32, n_queries: usize, n_objects: usize) {
    let spec = WorkloadSpec {
        n_queries,
        n_objects,
        vocabulary_size: 40,
        keywords_per_query: 2,
        keywords_per_object: 6,
        range_fraction: 0.3,
        lifetime: (5, 3 * n_objects as u64),
        dnf_fraction: 0.1,
        rect_object_fraction: 0.3,
        rng_seed: seed,
        ..Default::default()
    };
    let queries = gen_queries(&spec).unwrap();
    let objects = gen_objects(&spec).unwrap();
    let cfg = FastConfig {
        theta,
        gran_max,
        clean_interval: 3,
        descent_trigger: None,
    };
    let mut idx = FastIndex::new(cfg).unwrap();
    let mut corpus = corpus_of(&queries);
    for q in &queries {
        feed(&mut idx, q);
    }
    idx.audit().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for o in &objects {
        idx.advance_clock(1);
        if rng.gen_bool(0.05) {
            let qid = QueryId(rng.gen_range(0..n_queries as u64));
            if idx.contains(qid) {
                idx.remove(qid).unwrap();
                corpus.remove(qid);
            }
        }
        let got = idx.match_object(o);
        assert_eq!(
            got,
            oracle_match(&corpus, o, idx.clock()),
            "object {} seed {seed}",
            o.oid
        );
        if o.rect.is_none() {
            let mut trace = MatchTrace::new();
            let mut st = Default::default();
            idx.match_with_stats(o, &mut st, Some(&mut trace));
            for w in trace.windows(2) {
                assert!(text_contains(&w[0].1, &w[1].1));
            }
            if let Some(first) = trace.first() {
                assert!(text_contains(&o.text, &first.1));
            }
        }
    }
    idx.audit().unwrap();
}

#[test]
fn small_pyramids() {
    for seed in 0..6 {
        drive(seed, 2, 8, 400, 300);
    }
}

#[test]
fn larger_theta() {
    drive(11, 5, 64, 1500, 300);
    drive(12, 10, 512, 1500, 300);
}

#[test]
fn drains_after_expiry() {
    let spec = WorkloadSpec {
        n_queries: 800,
        vocabulary_size: 30,
        range_fraction: 0.4,
        lifetime: (1, 50),
        dnf_fraction: 0.1,
        ..Default::default()
    };
    let mut idx = FastIndex::new(FastConfig {
        theta: 2,
        gran_max: 16,
        clean_interval: 1,
        descent_trigger: None,
    })
    .unwrap();
    for q in gen_queries(&spec).unwrap() {
        feed(&mut idx, &q);
    }
    idx.set_clock(50);
    for _ in 0..4 {
        idx.clean_all();
    }
    assert!(idx.store().is_empty(), "{} nodes left", idx.store().len());
    assert!(idx.frequencies().is_empty());
    assert_eq!(idx.live_queries(), 0);
    idx.audit().unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_workloads(seed in any::<u64>(), theta in 1usize..6, g in 1u32..6) {
        drive(seed, theta, 1 << g, 200, 120);
    }

    #[test]
    fn degenerate_rect_equals_point(seed in any::<u64>(), x in 0.0f64..=1.0, y in 0.0f64..=1.0) {
        let spec = WorkloadSpec { n_queries: 300, vocabulary_size: 20, range_fraction: 0.3, rng_seed: seed, ..Default::default() };
        let mut idx = FastIndex::new(FastConfig { theta: 2, gran_max: 16, ..Default::default() }).unwrap();
        for q in gen_queries(&spec).unwrap() {
            feed(&mut idx, &q);
        }
        let words: Vec<String> = (1..8).map(|i| format!("w{i}")).collect();
        let p = SpatioTextualObject::point(1, x, y, &words).unwrap();
        let r = SpatioTextualObject::rect(1, Mbr::new(x, y, x, y), &words).unwrap();
        prop_assert_eq!(idx.match_object(&p), idx.match_object(&r));
    }
}
