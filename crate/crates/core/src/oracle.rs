//! Brute-force matcher that defines the expected results.
//!
//! It relies only on the predicates in [`crate::model`], never on index code.

use crate::model::{
    mbr_contains, mbr_overlaps, text_contains, ContinuousQuery, DnfQuery, MatchResult, QueryId,
    SpatioTextualObject,
};

/// Flat collection of registered queries.
#[derive(Clone, Debug, Default)]
pub struct QueryCorpus {
    plain: Vec<ContinuousQuery>,
    dnf: Vec<DnfQuery>,
}

impl QueryCorpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, q: ContinuousQuery) {
        self.plain.push(q);
    }

    pub fn add_dnf(&mut self, d: DnfQuery) {
        self.dnf.push(d);
    }

    /// Drops every query registered under `qid`.
    pub fn remove(&mut self, qid: QueryId) -> bool {
        let before = self.len();
        self.plain.retain(|q| q.reported_id() != qid);
        self.dnf.retain(|d| d.qid != qid);
        self.len() != before
    }

    pub fn len(&self) -> usize {
        self.plain.len() + self.dnf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn plain(&self) -> &[ContinuousQuery] {
        &self.plain
    }

    pub fn dnf(&self) -> &[DnfQuery] {
        &self.dnf
    }
}

fn spatial_hit(mbr: &crate::model::Mbr, o: &SpatioTextualObject) -> bool {
    match &o.rect {
        Some(r) => mbr_overlaps(mbr, r),
        None => mbr_contains(mbr, o.loc),
    }
}

/// Queries live at `now` whose region and keywords both match `o`.
pub fn oracle_match(corpus: &QueryCorpus, o: &SpatioTextualObject, now: u64) -> MatchResult {
    let mut hits = Vec::new();
    for q in &corpus.plain {
        if q.t_exp > now && spatial_hit(&q.mbr, o) && text_contains(&o.text, &q.text) {
            hits.push(q.reported_id());
        }
    }
    for d in &corpus.dnf {
        if d.t_exp > now
            && spatial_hit(&d.mbr, o)
            && d.clauses.iter().any(|c| text_contains(&o.text, c))
        {
            hits.push(d.qid);
        }
    }
    MatchResult::from_unsorted(hits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{dnf_expand, Mbr};
    use proptest::prelude::*;

    #[test]
    fn expiry_and_boundary() {
        let mut c = QueryCorpus::new();
        c.add(ContinuousQuery::new(1, Mbr::new(0.0, 0.0, 0.4, 0.4), ["a", "b"], 10).unwrap());
        c.add(ContinuousQuery::new(2, Mbr::new(0.0, 0.0, 0.4, 0.4), ["a"], 5).unwrap());
        let o = SpatioTextualObject::point(7, 0.4, 0.4, ["a", "b"]).unwrap();
        assert_eq!(oracle_match(&c, &o, 5).ids(), vec![1]);
        assert_eq!(oracle_match(&c, &o, 4).ids(), vec![1, 2]);
        assert!(oracle_match(&QueryCorpus::new(), &o, 0).is_empty());
    }

    fn strategy() -> impl Strategy<Value = (Vec<Vec<u8>>, Vec<u8>, (f64, f64))> {
        (
            prop::collection::vec(prop::collection::vec(0u8..6, 1..3), 1..4),
            prop::collection::vec(0u8..6, 1..5),
            (0.0f64..1.0, 0.0f64..1.0),
        )
    }

    proptest! {
        #[test]
        fn dnf_expansion_preserves_matches((clauses, otext, (x, y)) in strategy()) {
            let words = |v: &Vec<u8>| v.iter().map(|i| format!("w{i}")).collect::<Vec<_>>();
            let mbr = Mbr::new(0.2, 0.2, 0.7, 0.7);
            let d = DnfQuery::new(1, mbr, clauses.iter().map(words), 10).unwrap();
            let o = SpatioTextualObject::point(1, x, y, words(&otext)).unwrap();
            let mut a = QueryCorpus::new();
            a.add_dnf(d.clone());
            let mut b = QueryCorpus::new();
            for sub in dnf_expand(&d, |i| 100 + i as u64).unwrap() {
                b.add(sub);
            }
            prop_assert_eq!(oracle_match(&a, &o, 0), oracle_match(&b, &o, 0));
            // Duplicated clauses do not change the outcome.
            let mut dup_clauses: Vec<Vec<String>> = clauses.iter().map(words).collect();
            dup_clauses.extend(clauses.iter().map(words));
            let mut c = QueryCorpus::new();
            c.add_dnf(DnfQuery::new(1, mbr, dup_clauses, 10).unwrap());
            prop_assert_eq!(oracle_match(&a, &o, 0), oracle_match(&c, &o, 0));
        }

        #[test]
        fn order_independent(perm in Just(()).prop_perturb(|_, mut rng| {
            let mut v: Vec<u64> = (0..8).collect();
            for i in (1..v.len()).rev() { v.swap(i, (rng.next_u32() as usize) % (i + 1)); }
            v
        })) {
            let make = |i: u64| ContinuousQuery::new(i, Mbr::new(0.0, 0.0, 0.1 * (i as f64 + 1.0), 0.9), [format!("k{}", i % 3)], 10).unwrap();
            let mut a = QueryCorpus::new();
            let mut b = QueryCorpus::new();
            for i in 0..8 { a.add(make(i)); }
            for &i in &perm { b.add(make(i)); }
            let o = SpatioTextualObject::point(1, 0.35, 0.5, ["k0", "k1"]).unwrap();
            prop_assert_eq!(oracle_match(&a, &o, 0), oracle_match(&b, &o, 0));
        }
    }
}
