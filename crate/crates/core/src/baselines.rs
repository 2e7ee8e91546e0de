//! Text-only reference indexes: a ranked-keyword inverted list and an
//! ordered-keyword trie.

use std::collections::{BTreeMap, HashMap};

use crate::aki::{FrequenciesMap, Slot};
use crate::model::{text_contains, ContinuousQuery, Keyword, QueryId};

/// How the inverted list picks the posting keyword of a new query.
#[derive(Clone, Debug)]
pub enum Ranking {
    /// Least frequent keyword according to the live counts, this query included.
    Live,
    /// Least frequent keyword according to a fixed table.
    Static(HashMap<Keyword, u64>),
}

/// Ranked-keyword inverted list.
#[derive(Debug)]
pub struct Ril {
    postings: HashMap<Keyword, Vec<Slot>>,
    texts: Vec<Vec<Keyword>>,
    ids: Vec<QueryId>,
    fm: FrequenciesMap,
    ranking: Ranking,
}

impl Ril {
    pub fn new(ranking: Ranking) -> Self {
        Ril {
            postings: HashMap::new(),
            texts: Vec::new(),
            ids: Vec::new(),
            fm: FrequenciesMap::new(),
            ranking,
        }
    }

    pub fn insert(&mut self, q: &ContinuousQuery) -> Slot {
        let slot = self.texts.len() as Slot;
        self.fm.add(&q.text);
        let key = match &self.ranking {
            Ranking::Live => self.fm.least_frequent(&q.text).clone(),
            Ranking::Static(table) => {
                let rank = |k: &Keyword| table.get(k).copied().unwrap_or(0);
                q.text
                    .iter()
                    .min_by(|a, b| rank(a).cmp(&rank(b)).then(a.cmp(b)))
                    .expect("non-empty text")
                    .clone()
            }
        };
        self.postings.entry(key).or_default().push(slot);
        self.texts.push(q.text.clone());
        self.ids.push(q.reported_id());
        slot
    }

    /// Unverified union of the posting lists of `s` and the number of
    /// entries visited.
    pub fn search(&self, s: &[Keyword]) -> (Vec<Slot>, u64) {
        let mut out = Vec::new();
        for k in s {
            if let Some(p) = self.postings.get(k) {
                out.extend_from_slice(p);
            }
        }
        let visited = out.len() as u64;
        (out, visited)
    }

    /// Candidates whose text is contained in `s`, sorted.
    pub fn verified_search(&self, s: &[Keyword]) -> Vec<Slot> {
        let (cands, _) = self.search(s);
        let mut out: Vec<Slot> = cands
            .into_iter()
            .filter(|&c| text_contains(s, &self.texts[c as usize]))
            .collect();
        out.sort_unstable();
        out
    }

    pub fn posting_len(&self, k: &str) -> usize {
        self.postings.get(k).map_or(0, Vec::len)
    }

    pub fn posting_lengths(&self) -> HashMap<Keyword, u64> {
        self.postings
            .iter()
            .map(|(k, v)| (k.clone(), v.len() as u64))
            .collect()
    }

    pub fn posting_keyword(&self, slot: Slot) -> Option<&Keyword> {
        self.postings
            .iter()
            .find(|(_, v)| v.contains(&slot))
            .map(|(k, _)| k)
    }

    pub fn frequencies(&self) -> &FrequenciesMap {
        &self.fm
    }

    pub fn query_id(&self, slot: Slot) -> QueryId {
        self.ids[slot as usize]
    }

    pub fn text(&self, slot: Slot) -> &[Keyword] {
        &self.texts[slot as usize]
    }

    pub fn len(&self) -> usize {
        self.texts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.texts.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.postings.len()
    }
}

#[derive(Debug, Default)]
struct OktNode {
    children: BTreeMap<Keyword, usize>,
    queries: Vec<Slot>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OktProbe {
    /// Trie nodes entered, the root included.
    pub nodes: u64,
    /// Child lookups performed.
    pub lookups: u64,
}

/// Ordered-keyword trie.
#[derive(Debug)]
pub struct Okt {
    nodes: Vec<OktNode>,
    ids: Vec<QueryId>,
    texts: Vec<Vec<Keyword>>,
}

impl Default for Okt {
    fn default() -> Self {
        Okt {
            nodes: vec![OktNode::default()],
            ids: Vec::new(),
            texts: Vec::new(),
        }
    }
}

impl Okt {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, q: &ContinuousQuery) -> Slot {
        let slot = self.ids.len() as Slot;
        let mut cur = 0;
        for k in &q.text {
            cur = match self.nodes[cur].children.get(k) {
                Some(&c) => c,
                None => {
                    let c = self.nodes.len();
                    self.nodes.push(OktNode::default());
                    self.nodes[cur].children.insert(k.clone(), c);
                    c
                }
            };
        }
        self.nodes[cur].queries.push(slot);
        self.ids.push(q.reported_id());
        self.texts.push(q.text.clone());
        slot
    }

    /// Every query whose text is a subset of `s`, sorted.
    pub fn search(&self, s: &[Keyword]) -> (Vec<Slot>, OktProbe) {
        let mut out = Vec::new();
        let mut probe = OktProbe::default();
        self.walk(0, 0, s, 0, &mut out, &mut probe, &mut |_, _, _| {});
        out.sort_unstable();
        (out, probe)
    }

    /// Like [`search`](Self::search), reporting each child lookup as
    /// `(trie level, keyword, found)`. The root's children are at level 1.
    pub fn search_observed(
        &self,
        s: &[Keyword],
        observe: &mut dyn FnMut(u32, &Keyword, bool),
    ) -> (Vec<Slot>, OktProbe) {
        let mut out = Vec::new();
        let mut probe = OktProbe::default();
        self.walk(0, 0, s, 0, &mut out, &mut probe, observe);
        out.sort_unstable();
        (out, probe)
    }

    #[allow(clippy::too_many_arguments)]
    fn walk(
        &self,
        node: usize,
        depth: u32,
        s: &[Keyword],
        from: usize,
        out: &mut Vec<Slot>,
        probe: &mut OktProbe,
        observe: &mut dyn FnMut(u32, &Keyword, bool),
    ) {
        probe.nodes += 1;
        let n = &self.nodes[node];
        out.extend_from_slice(&n.queries);
        if n.children.is_empty() {
            return;
        }
        for j in from..s.len() {
            probe.lookups += 1;
            let child = n.children.get(&s[j]);
            observe(depth + 1, &s[j], child.is_some());
            if let Some(&c) = child {
                self.walk(c, depth + 1, s, j + 1, out, probe, observe);
            }
        }
    }

    /// Keyword nodes, the root excluded.
    pub fn node_count(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn max_depth(&self) -> usize {
        self.texts.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn query_id(&self, slot: Slot) -> QueryId {
        self.ids[slot as usize]
    }

    pub fn text(&self, slot: Slot) -> &[Keyword] {
        &self.texts[slot as usize]
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}
