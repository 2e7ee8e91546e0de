use std::collections::HashMap;

use fast_core::bench::{cost_model_report, gen_objects, gen_queries, WorkloadSpec};

fn report(seed: u64) -> HashMap<String, f64> {
    let spec = WorkloadSpec {
        n_queries: 4000,
        n_objects: 300,
        vocabulary_size: 2000,
        rng_seed: seed,
        ..Default::default()
    };
    let rows = cost_model_report(
        &gen_queries(&spec).unwrap(),
        &gen_objects(&spec).unwrap(),
        5,
        64,
    )
    .unwrap();
    rows.into_iter().collect()
}

#[test]
fn ril_model_is_exact() {
    let r = report(3);
    assert!(
        (r["mp_ril"] - r["ril_visited"]).abs() < 1e-9,
        "{} vs {}",
        r["mp_ril"],
        r["ril_visited"]
    );
}

#[test]
fn okt_model_tracks_lookups() {
    for seed in [1, 2] {
        let r = report(seed);
        let ratio = r["mp_okt"] / r["okt_lookups"];
        assert!((0.5..=2.0).contains(&ratio), "seed {seed}: ratio {ratio}");
    }
}

#[test]
fn frequent_nodes_bound_infrequent_cost() {
    let r = report(4);
    assert!(r["mp_aki_infrequent"] <= r["mp_okt"] + 1e-9);
    assert!(5.0 <= r["theta_bound"], "theta bound {}", r["theta_bound"]);
    assert!(r["mp_fast"] > 0.0);
}

#[test]
fn replication_rows_decrease_to_one() {
    let r = report(5);
    let mut prev = f64::INFINITY;
    for i in 0..6 {
        let e = r[&format!("expected_replication_{i}")];
        assert!(e >= 1.0 && e <= prev, "level {i}: {e}");
        prev = e;
    }
}
