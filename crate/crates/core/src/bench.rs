//! Workload generation, TSV datasets and the benchmark driver.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Zipf};
use serde::Serialize;

use crate::aki::{AkiIndex, Slot};
use crate::baselines::{Okt, Ranking, Ril};
use crate::costmodel::{
    estimate_alpha, expected_replication, expected_replication_uniform, mp_aki, mp_fast, mp_okt,
    mp_ril, theta_bound, CostParams,
};
use crate::error::{Error, Result};
use crate::index::{FastConfig, FastIndex, MatchStats};
use crate::model::{
    dnf_expand, mbr_contains, mbr_overlaps, ContinuousQuery, DnfQuery, Keyword, MatchResult, Mbr,
    Point, QueryId, SpatioTextualObject,
};
use crate::oracle::{oracle_match, QueryCorpus};
use crate::pyramid::PyramidConfig;

#[derive(Clone, Debug, PartialEq)]
pub enum SpatialDist {
    Uniform,
    Gaussian {
        mean: (f64, f64),
        sigma: f64,
    },
    /// Locations drawn with replacement from a fixed sample.
    Points(Vec<Point>),
}

impl SpatialDist {
    fn sample(&self, rng: &mut impl Rng) -> Point {
        match self {
            SpatialDist::Uniform => Point::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)),
            SpatialDist::Gaussian { mean, sigma } => {
                let nx = Normal::new(mean.0, *sigma).expect("finite sigma");
                let ny = Normal::new(mean.1, *sigma).expect("finite sigma");
                for _ in 0..64 {
                    let p = Point::new(nx.sample(rng), ny.sample(rng));
                    if p.in_space() {
                        return p;
                    }
                }
                Point::new(mean.0.clamp(0.0, 1.0), mean.1.clamp(0.0, 1.0))
            }
            SpatialDist::Points(pts) => *pts.choose(rng).expect("non-empty sample"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorkloadSpec {
    pub n_queries: usize,
    pub n_objects: usize,
    pub zipf_exponent: f64,
    pub vocabulary_size: u64,
    pub keywords_per_query: usize,
    pub keywords_per_object: usize,
    pub query_dist: SpatialDist,
    pub object_dist: SpatialDist,
    /// Query sides are drawn uniformly from (0, range_fraction].
    pub range_fraction: f64,
    /// Query lifetimes are drawn uniformly from this inclusive range.
    pub lifetime: (u64, u64),
    pub dnf_fraction: f64,
    pub rect_object_fraction: f64,
    pub rng_seed: u64,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        WorkloadSpec {
            n_queries: 5_000,
            n_objects: 1_000,
            zipf_exponent: 1.0,
            vocabulary_size: 10_000,
            keywords_per_query: 3,
            keywords_per_object: 8,
            query_dist: SpatialDist::Uniform,
            object_dist: SpatialDist::Uniform,
            range_fraction: 0.01,
            lifetime: (1, u64::MAX / 2),
            dnf_fraction: 0.0,
            rect_object_fraction: 0.0,
            rng_seed: 1,
        }
    }
}

impl WorkloadSpec {
    /// Objects follow the query distribution (`shifted = false`) or a copy
    /// of it moved away from the query hot spot.
    pub fn skewed(mut self, shifted: bool) -> Self {
        self.query_dist = SpatialDist::Gaussian {
            mean: (0.3, 0.3),
            sigma: 0.1,
        };
        self.object_dist = if shifted {
            SpatialDist::Gaussian {
                mean: (0.7, 0.7),
                sigma: 0.1,
            }
        } else {
            self.query_dist.clone()
        };
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.n_queries == 0 || self.n_objects == 0 {
            return bad("query and object counts must be positive");
        }
        if self.vocabulary_size == 0
            || self.keywords_per_query == 0
            || self.keywords_per_object == 0
        {
            return bad("vocabulary and keyword counts must be positive");
        }
        if self.keywords_per_query as u64 > self.vocabulary_size {
            return bad("more keywords per query than vocabulary entries");
        }
        if !(self.range_fraction > 0.0 && self.range_fraction <= 1.0) {
            return bad("range fraction must lie in (0, 1]");
        }
        if self.zipf_exponent.is_nan() || self.zipf_exponent < 0.0 {
            return bad("zipf exponent must be non-negative");
        }
        if self.lifetime.0 == 0 || self.lifetime.0 > self.lifetime.1 {
            return bad("lifetime range must be positive and ordered");
        }
        if !(0.0..=1.0).contains(&self.dnf_fraction)
            || !(0.0..=1.0).contains(&self.rect_object_fraction)
        {
            return bad("fractions must lie in [0, 1]");
        }
        if let SpatialDist::Points(p) = &self.query_dist {
            if p.is_empty() {
                return bad("empty location sample");
            }
        }
        Ok(())
    }
}

/// One line of a query file.
#[derive(Clone, Debug, PartialEq)]
pub enum QueryItem {
    Plain(ContinuousQuery),
    Dnf(DnfQuery),
}

impl QueryItem {
    pub fn qid(&self) -> QueryId {
        match self {
            QueryItem::Plain(q) => q.reported_id(),
            QueryItem::Dnf(d) => d.qid,
        }
    }

    pub fn t_exp(&self) -> u64 {
        match self {
            QueryItem::Plain(q) => q.t_exp,
            QueryItem::Dnf(d) => d.t_exp,
        }
    }

    /// The item as plain queries reporting under the item's id.
    pub fn expand(&self) -> Vec<ContinuousQuery> {
        match self {
            QueryItem::Plain(q) => vec![q.clone()],
            QueryItem::Dnf(d) => dnf_expand(d, |i| i as u64).expect("validated query"),
        }
    }
}

struct KeywordSampler {
    zipf: Zipf<f64>,
}

impl KeywordSampler {
    fn new(spec: &WorkloadSpec) -> Result<Self> {
        let zipf = Zipf::new(spec.vocabulary_size, spec.zipf_exponent)
            .map_err(|e| Error::InvalidConfig(format!("zipf: {e}")))?;
        Ok(KeywordSampler { zipf })
    }

    fn rank(&self, rng: &mut impl Rng) -> u64 {
        self.zipf.sample(rng) as u64
    }

    fn distinct(&self, n: usize, rng: &mut impl Rng) -> Vec<String> {
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(n);
        let mut tries = 0;
        while out.len() < n && tries < 64 * n {
            tries += 1;
            let r = self.rank(rng);
            if seen.insert(r) {
                out.push(keyword_name(r));
            }
        }
        out
    }
}

pub fn keyword_name(rank: u64) -> String {
    format!("w{rank}")
}

fn query_mbr(center: Point, spec: &WorkloadSpec, rng: &mut impl Rng) -> Mbr {
    let f = spec.range_fraction;
    let w = f - rng.gen_range(0.0..f);
    let h = f - rng.gen_range(0.0..f);
    Mbr::new(
        (center.x - w / 2.0).max(0.0),
        (center.y - h / 2.0).max(0.0),
        (center.x + w / 2.0).min(1.0),
        (center.y + h / 2.0).min(1.0),
    )
}

/// Query stream with ids `0..n_queries`; deterministic for a given spec.
pub fn gen_queries(spec: &WorkloadSpec) -> Result<Vec<QueryItem>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let words = KeywordSampler::new(spec)?;
    let mut out = Vec::with_capacity(spec.n_queries);
    for id in 0..spec.n_queries as u64 {
        let mbr = query_mbr(spec.query_dist.sample(&mut rng), spec, &mut rng);
        let t_exp = rng.gen_range(spec.lifetime.0..=spec.lifetime.1);
        if rng.gen_bool(spec.dnf_fraction) {
            let n = rng.gen_range(2..=3);
            let clauses: Vec<Vec<String>> = (0..n)
                .map(|_| words.distinct(spec.keywords_per_query, &mut rng))
                .collect();
            out.push(QueryItem::Dnf(DnfQuery::new(id, mbr, clauses, t_exp)?));
        } else {
            let text = words.distinct(spec.keywords_per_query, &mut rng);
            out.push(QueryItem::Plain(ContinuousQuery::new(
                id, mbr, text, t_exp,
            )?));
        }
    }
    Ok(out)
}

/// Object stream with ids `0..n_objects`, drawn from a seed derived from the
/// spec's so that it does not depend on the query stream.
pub fn gen_objects(spec: &WorkloadSpec) -> Result<Vec<SpatioTextualObject>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed ^ 0x9e37_79b9_7f4a_7c15);
    let words = KeywordSampler::new(spec)?;
    let mut out = Vec::with_capacity(spec.n_objects);
    for oid in 0..spec.n_objects as u64 {
        let p = spec.object_dist.sample(&mut rng);
        let text = words.distinct(spec.keywords_per_object, &mut rng);
        if rng.gen_bool(spec.rect_object_fraction) {
            out.push(SpatioTextualObject::rect(
                oid,
                query_mbr(p, spec, &mut rng),
                text,
            )?);
        } else {
            out.push(SpatioTextualObject::point(oid, p.x, p.y, text)?);
        }
    }
    Ok(out)
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn field<T: std::str::FromStr>(fields: &[&str], i: usize, name: &str, line: usize) -> Result<T> {
    let raw = fields
        .get(i)
        .ok_or_else(|| parse_err(line, format!("missing {name}")))?;
    raw.trim()
        .parse()
        .map_err(|_| parse_err(line, format!("bad {name} {raw:?}")))
}

fn words(raw: &str) -> Vec<&str> {
    raw.split(' ').filter(|w| !w.is_empty()).collect()
}

/// Parses query lines `id x y x2 y2 keywords t_exp`. DNF clauses are
/// separated by `|` inside the keyword field.
pub fn parse_queries(text: &str) -> Result<Vec<QueryItem>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = raw.split('\t').collect();
        if f.len() != 7 {
            return Err(parse_err(
                line,
                format!("expected 7 fields, found {}", f.len()),
            ));
        }
        let id: u64 = field(&f, 0, "id", line)?;
        let c: Vec<f64> = (1..5)
            .map(|j| field(&f, j, "coordinate", line))
            .collect::<Result<_>>()?;
        let t_exp: u64 = field(&f, 6, "expiry", line)?;
        let mbr = Mbr::new(c[0], c[1], c[2], c[3]);
        let wrap = |e: Error| parse_err(line, e.to_string());
        let item = if f[5].contains('|') {
            let clauses: Vec<Vec<&str>> = f[5].split('|').map(words).collect();
            QueryItem::Dnf(DnfQuery::new(id, mbr, clauses, t_exp).map_err(wrap)?)
        } else {
            QueryItem::Plain(ContinuousQuery::new(id, mbr, words(f[5]), t_exp).map_err(wrap)?)
        };
        out.push(item);
    }
    Ok(out)
}

/// Parses object lines `id x y keywords`, or `id x y x2 y2 keywords` for
/// rectangular objects.
pub fn parse_objects(text: &str) -> Result<Vec<SpatioTextualObject>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = raw.split('\t').collect();
        let id: u64 = field(&f, 0, "id", line)?;
        let wrap = |e: Error| parse_err(line, e.to_string());
        let o = match f.len() {
            4 => SpatioTextualObject::point(
                id,
                field(&f, 1, "x", line)?,
                field(&f, 2, "y", line)?,
                words(f[3]),
            ),
            6 => {
                let c: Vec<f64> = (1..5)
                    .map(|j| field(&f, j, "coordinate", line))
                    .collect::<Result<_>>()?;
                SpatioTextualObject::rect(id, Mbr::new(c[0], c[1], c[2], c[3]), words(f[5]))
            }
            n => {
                return Err(parse_err(
                    line,
                    format!("expected 4 or 6 fields, found {n}"),
                ))
            }
        };
        out.push(o.map_err(wrap)?);
    }
    Ok(out)
}

fn join(text: &[Keyword]) -> String {
    text.iter()
        .map(Keyword::as_str)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn format_queries(items: &[QueryItem]) -> String {
    let mut s = String::new();
    for item in items {
        let (id, m, kw, t) = match item {
            QueryItem::Plain(q) => (q.reported_id().0, q.mbr, join(&q.text), q.t_exp),
            QueryItem::Dnf(d) => (
                d.qid.0,
                d.mbr,
                d.clauses
                    .iter()
                    .map(|c| join(c))
                    .collect::<Vec<_>>()
                    .join("|"),
                d.t_exp,
            ),
        };
        writeln!(
            s,
            "{id}\t{}\t{}\t{}\t{}\t{kw}\t{t}",
            m.x_min, m.y_min, m.x_max, m.y_max
        )
        .expect("string write");
    }
    s
}

pub fn format_objects(objects: &[SpatioTextualObject]) -> String {
    let mut s = String::new();
    for o in objects {
        match &o.rect {
            None => writeln!(s, "{}\t{}\t{}\t{}", o.oid, o.loc.x, o.loc.y, join(&o.text)),
            Some(m) => writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}",
                o.oid,
                m.x_min,
                m.y_min,
                m.x_max,
                m.y_max,
                join(&o.text)
            ),
        }
        .expect("string write");
    }
    s
}

pub fn load_queries(path: &Path) -> Result<Vec<QueryItem>> {
    parse_queries(&std::fs::read_to_string(path)?)
}

pub fn load_objects(path: &Path) -> Result<Vec<SpatioTextualObject>> {
    parse_objects(&std::fs::read_to_string(path)?)
}

pub fn save_queries(path: &Path, items: &[QueryItem]) -> Result<()> {
    Ok(std::fs::write(path, format_queries(items))?)
}

pub fn save_objects(path: &Path, objects: &[SpatioTextualObject]) -> Result<()> {
    Ok(std::fs::write(path, format_objects(objects))?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IndexKind {
    Fast,
    Ril,
    Okt,
    Aki,
}

impl IndexKind {
    pub fn name(self) -> &'static str {
        match self {
            IndexKind::Fast => "fast",
            IndexKind::Ril => "ril",
            IndexKind::Okt => "okt",
            IndexKind::Aki => "aki",
        }
    }
}

impl std::str::FromStr for IndexKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(IndexKind::Fast),
            "ril" => Ok(IndexKind::Ril),
            "okt" => Ok(IndexKind::Okt),
            "aki" => Ok(IndexKind::Aki),
            other => Err(Error::InvalidConfig(format!(
                "unknown index kind {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchConfig {
    pub fast: FastConfig,
    /// Fraction of objects whose results are re-checked by the oracle.
    pub oracle_sample: f64,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            fast: FastConfig::default(),
            oracle_sample: 0.01,
            seed: 7,
        }
    }
}

/// One CSV row. Counts are exact; `*_us` fields are wall time.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct BenchMetrics {
    pub index: String,
    pub sweep: String,
    pub value: String,
    pub theta: usize,
    pub gran_max: u32,
    pub clean_interval: u64,
    pub n_queries: usize,
    pub n_objects: usize,
    pub insert_us_mean: f64,
    pub insert_us_p99: f64,
    pub match_us_mean: f64,
    pub match_us_p99: f64,
    pub match_pyramid_nodes_mean: f64,
    pub match_textual_nodes_mean: f64,
    pub match_queries_mean: f64,
    pub results_mean: f64,
    pub pyramid_nodes: usize,
    pub textual_nodes: usize,
    pub list_entries: usize,
    pub mean_replication: f64,
    pub clean_steps: u64,
    pub clean_removed: u64,
    pub clean_us_per_step: f64,
    pub oracle_checked: usize,
}

fn percentile(v: &mut [f64], p: f64) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    v[((v.len() - 1) as f64 * p).round() as usize]
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn micros(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e6
}

/// A plain query kept by the text-only indexes for spatial and expiry checks.
struct Flat {
    qid: QueryId,
    mbr: Mbr,
    t_exp: u64,
}

enum TextIndex {
    Ril(Ril),
    Okt(Okt),
    Aki(AkiIndex),
}

impl TextIndex {
    fn insert(&mut self, q: &ContinuousQuery) {
        match self {
            TextIndex::Ril(i) => {
                i.insert(q);
            }
            TextIndex::Okt(i) => {
                i.insert(q);
            }
            TextIndex::Aki(i) => {
                i.insert(q);
            }
        }
    }

    /// Verified slots plus (textual nodes, queries) visited.
    fn search(&self, s: &[Keyword]) -> (Vec<Slot>, u64, u64) {
        match self {
            TextIndex::Ril(i) => {
                let (_, visited) = i.search(s);
                (i.verified_search(s), s.len() as u64, visited)
            }
            TextIndex::Okt(i) => {
                let (hits, probe) = i.search(s);
                let n = hits.len() as u64;
                (hits, probe.nodes, n)
            }
            TextIndex::Aki(i) => {
                let (hits, st) = i.search(s);
                (hits, st.textual_nodes, st.queries)
            }
        }
    }

    fn structure(&self) -> (usize, usize) {
        match self {
            TextIndex::Ril(i) => (i.node_count(), i.len()),
            TextIndex::Okt(i) => (i.node_count(), i.len()),
            TextIndex::Aki(i) => {
                let st = i.aki().stats();
                (
                    st.textual_nodes,
                    st.own_entries
                        + i.arena()
                            .iter()
                            .map(|(_, l)| l.queries.len())
                            .sum::<usize>(),
                )
            }
        }
    }
}

fn corpus_of(queries: &[QueryItem]) -> QueryCorpus {
    let mut c = QueryCorpus::new();
    for q in queries {
        match q {
            QueryItem::Plain(p) => c.add(p.clone()),
            QueryItem::Dnf(d) => c.add_dnf(d.clone()),
        }
    }
    c
}

/// Inserts every query at time 0, then streams objects advancing the clock
/// by one per object, re-checking a sample of results against the oracle.
pub fn run_workload(
    queries: &[QueryItem],
    objects: &[SpatioTextualObject],
    kind: IndexKind,
    cfg: &BenchConfig,
) -> Result<BenchMetrics> {
    let corpus = corpus_of(queries);
    let mut sampler = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut m = BenchMetrics {
        index: kind.name().into(),
        theta: cfg.fast.theta,
        gran_max: cfg.fast.gran_max,
        clean_interval: cfg.fast.clean_interval,
        n_queries: queries.len(),
        n_objects: objects.len(),
        ..Default::default()
    };
    let mut insert_us = Vec::with_capacity(queries.len());
    let mut match_us = Vec::with_capacity(objects.len());
    let (mut pn, mut tn, mut vq, mut res) = (0u64, 0u64, 0u64, 0u64);
    let check = |o: &SpatioTextualObject,
                 got: &MatchResult,
                 now: u64,
                 rng: &mut ChaCha8Rng|
     -> Result<bool> {
        if !rng.gen_bool(cfg.oracle_sample.clamp(0.0, 1.0)) {
            return Ok(false);
        }
        let want = oracle_match(&corpus, o, now);
        if &want != got {
            return Err(Error::OracleMismatch {
                oid: o.oid,
                index: got.ids(),
                oracle: want.ids(),
            });
        }
        Ok(true)
    };

    if kind == IndexKind::Fast {
        let mut idx = FastIndex::new(cfg.fast)?;
        for q in queries {
            let t = Instant::now();
            match q {
                QueryItem::Plain(p) => idx.insert(p.clone())?,
                QueryItem::Dnf(d) => idx.insert_dnf(d.clone())?,
            }
            insert_us.push(micros(t));
        }
        let mut clean_us = 0.0;
        for o in objects {
            let before = idx.clock() / cfg.fast.clean_interval;
            let t = Instant::now();
            let cr = idx.advance_clock(1);
            let steps = idx.clock() / cfg.fast.clean_interval - before;
            if steps > 0 {
                clean_us += micros(t);
                m.clean_steps += steps;
                m.clean_removed += cr.removed as u64;
            }
            let mut st = MatchStats::default();
            let t = Instant::now();
            let got = idx.match_with_stats(o, &mut st, None);
            match_us.push(micros(t));
            pn += st.pyramid_nodes;
            tn += st.search.textual_nodes;
            vq += st.search.queries;
            res += got.len() as u64;
            m.oracle_checked += check(o, &got, idx.clock(), &mut sampler)? as usize;
        }
        let s = idx.stats();
        m.pyramid_nodes = s.pyramid_nodes;
        m.textual_nodes = s.textual_nodes;
        m.list_entries = s.list_entries;
        m.mean_replication = s.mean_replication;
        m.clean_us_per_step = if m.clean_steps > 0 {
            clean_us / m.clean_steps as f64
        } else {
            0.0
        };
    } else {
        let mut idx = match kind {
            IndexKind::Ril => TextIndex::Ril(Ril::new(Ranking::Live)),
            IndexKind::Okt => TextIndex::Okt(Okt::new()),
            _ => TextIndex::Aki(AkiIndex::new(cfg.fast.theta)?),
        };
        let mut flat = Vec::new();
        for q in queries {
            let t = Instant::now();
            for sub in q.expand() {
                idx.insert(&sub);
                flat.push(Flat {
                    qid: q.qid(),
                    mbr: sub.mbr,
                    t_exp: sub.t_exp,
                });
            }
            insert_us.push(micros(t));
        }
        for (now, o) in (1u64..).zip(objects) {
            let t = Instant::now();
            let (slots, nodes, visited) = idx.search(&o.text);
            let hits: Vec<QueryId> = slots
                .into_iter()
                .map(|s| &flat[s as usize])
                .filter(|f| {
                    f.t_exp > now
                        && match &o.rect {
                            None => mbr_contains(&f.mbr, o.loc),
                            Some(r) => mbr_overlaps(&f.mbr, r),
                        }
                })
                .map(|f| f.qid)
                .collect();
            let got = MatchResult::from_unsorted(hits);
            match_us.push(micros(t));
            tn += nodes;
            vq += visited;
            res += got.len() as u64;
            m.oracle_checked += check(o, &got, now, &mut sampler)? as usize;
        }
        let (nodes, entries) = idx.structure();
        m.textual_nodes = nodes;
        m.list_entries = entries;
        m.mean_replication = 1.0;
    }
    let n = objects.len().max(1) as f64;
    m.insert_us_mean = mean(&insert_us);
    m.insert_us_p99 = percentile(&mut insert_us, 0.99);
    m.match_us_mean = mean(&match_us);
    m.match_us_p99 = percentile(&mut match_us, 0.99);
    m.match_pyramid_nodes_mean = pn as f64 / n;
    m.match_textual_nodes_mean = tn as f64 / n;
    m.match_queries_mean = vq as f64 / n;
    m.results_mean = res as f64 / n;
    Ok(m)
}

pub fn run_bench(spec: &WorkloadSpec, kind: IndexKind, cfg: &BenchConfig) -> Result<BenchMetrics> {
    run_workload(&gen_queries(spec)?, &gen_objects(spec)?, kind, cfg)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Sweep {
    Theta(Vec<usize>),
    GranMax(Vec<u32>),
    CleanInterval(Vec<u64>),
}

impl Sweep {
    pub fn name(&self) -> &'static str {
        match self {
            Sweep::Theta(_) => "theta",
            Sweep::GranMax(_) => "gran_max",
            Sweep::CleanInterval(_) => "clean_interval",
        }
    }

    /// Parses `theta=1,2,5`, `gran_max=8,64` or `clean_interval=10,100`.
    pub fn parse(s: &str) -> Result<Self> {
        let (name, values) = s
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("bad sweep {s:?}")))?;
        fn list<T: std::str::FromStr>(v: &str) -> Result<Vec<T>> {
            v.split(',')
                .map(|x| {
                    x.trim()
                        .parse()
                        .map_err(|_| Error::InvalidConfig(format!("bad sweep value {x:?}")))
                })
                .collect()
        }
        match name {
            "theta" => Ok(Sweep::Theta(list(values)?)),
            "gran_max" | "gran-max" => Ok(Sweep::GranMax(list(values)?)),
            "clean_interval" | "clean-interval" => Ok(Sweep::CleanInterval(list(values)?)),
            _ => Err(Error::InvalidConfig(format!("unknown sweep {name:?}"))),
        }
    }
}

/// Runs one workload per sweep point on the same generated streams.
pub fn run_sweep(
    spec: &WorkloadSpec,
    kind: IndexKind,
    base: &BenchConfig,
    sweep: &Sweep,
) -> Result<Vec<BenchMetrics>> {
    let queries = gen_queries(spec)?;
    let objects = gen_objects(spec)?;
    let points: Vec<(String, BenchConfig)> = match sweep {
        Sweep::Theta(v) => v
            .iter()
            .map(|&t| {
                (
                    t.to_string(),
                    BenchConfig {
                        fast: FastConfig {
                            theta: t,
                            ..base.fast
                        },
                        ..*base
                    },
                )
            })
            .collect(),
        Sweep::GranMax(v) => v
            .iter()
            .map(|&g| {
                (
                    g.to_string(),
                    BenchConfig {
                        fast: FastConfig {
                            gran_max: g,
                            ..base.fast
                        },
                        ..*base
                    },
                )
            })
            .collect(),
        Sweep::CleanInterval(v) => v
            .iter()
            .map(|&i| {
                (
                    i.to_string(),
                    BenchConfig {
                        fast: FastConfig {
                            clean_interval: i,
                            ..base.fast
                        },
                        ..*base
                    },
                )
            })
            .collect(),
    };
    let mut rows = Vec::with_capacity(points.len());
    for (value, cfg) in points {
        let mut m = run_workload(&queries, &objects, kind, &cfg)?;
        m.sweep = sweep.name().into();
        m.value = value;
        rows.push(m);
    }
    Ok(rows)
}

pub fn write_csv<W: Write>(out: W, rows: &[BenchMetrics]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Mean number of cells overlapped at a query's lowest admissible level,
/// for sides uniform in (1/2, 1) of that level's cell side.
pub fn mc_replication_at_min_level(samples: usize, seed: u64) -> f64 {
    mc_replication(samples, 1, seed)
}

/// Like [`mc_replication_at_min_level`] with the storage level drawn
/// uniformly from the `levels` levels starting at the lowest admissible one.
pub fn mc_replication(samples: usize, levels: u32, seed: u64) -> f64 {
    let gran_max = 1u32 << 10.max(levels + 1);
    let cfg = PyramidConfig::new(gran_max).expect("power of two");
    let base = cfg.side_len_min();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0usize;
    for _ in 0..samples {
        let side = base * rng.gen_range(0.5..1.0);
        let (x, y) = (rng.gen_range(0.0..0.5), rng.gen_range(0.0..0.5));
        let mbr = Mbr::new(x, y, x + side, y + side);
        let level = cfg.min_level(&mbr) + rng.gen_range(0..levels);
        total += cfg
            .cells_overlapping(&mbr, level)
            .expect("level below top")
            .len();
    }
    total as f64 / samples as f64
}

/// Model predictions next to measured counts for one workload, keyed by
/// metric name. Object texts serve as the search keyword sets.
pub fn cost_model_report(
    queries: &[QueryItem],
    objects: &[SpatioTextualObject],
    theta: usize,
    gran_max: u32,
) -> Result<Vec<(String, f64)>> {
    let mut ril = Ril::new(Ranking::Live);
    let mut okt = Okt::new();
    for q in queries {
        for sub in q.expand() {
            ril.insert(&sub);
            okt.insert(&sub);
        }
    }
    let probes: Vec<Vec<Keyword>> = objects.iter().map(|o| o.text.clone()).collect();
    let mut lengths = ril.posting_lengths();
    for p in &probes {
        for k in p {
            lengths.entry(k.clone()).or_insert(0);
        }
    }
    let params = CostParams {
        alpha: estimate_alpha(&okt, &probes),
        posting_lengths: lengths,
        theta,
        max_depth: okt.max_depth().max(1) as u32,
        gran_max,
    };
    params.validate()?;
    let n = probes.len().max(1) as f64;
    let (mut ril_model, mut ril_seen, mut okt_model, mut okt_seen, mut s_len) =
        (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut aki_model, mut fast_model) = (0.0, 0.0);
    for s in &probes {
        ril_model += mp_ril(s, &params.posting_lengths)? as f64;
        ril_seen += ril.search(s).1 as f64;
        okt_model += mp_okt(1, s, &params);
        okt_seen += okt.search(s).1.lookups as f64;
        aki_model += mp_aki(1, s, &params, false);
        fast_model += mp_fast(s, &params, false)?;
        s_len += s.len() as f64;
    }
    let mut rows = vec![
        ("mp_ril".to_string(), ril_model / n),
        ("ril_visited".to_string(), ril_seen / n),
        ("mp_okt".to_string(), okt_model / n),
        ("okt_lookups".to_string(), okt_seen / n),
        ("mp_aki_infrequent".to_string(), aki_model / n),
        (
            "theta_bound".to_string(),
            theta_bound(okt_model / n, (s_len / n).round().max(1.0) as usize)?,
        ),
        ("mp_fast".to_string(), fast_model / n),
    ];
    for i in 0..PyramidConfig::new(gran_max)?.top_level() {
        rows.push((format!("expected_replication_{i}"), expected_replication(i)));
    }
    let levels = PyramidConfig::new(gran_max)?.top_level();
    rows.push((
        format!("expected_replication_uniform_{levels}"),
        expected_replication_uniform(levels)?,
    ));
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn small() -> WorkloadSpec {
        WorkloadSpec {
            n_queries: 300,
            n_objects: 200,
            vocabulary_size: 50,
            range_fraction: 0.2,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_streams() {
        let s = WorkloadSpec {
            dnf_fraction: 0.2,
            rect_object_fraction: 0.3,
            ..small()
        };
        assert_eq!(
            format_queries(&gen_queries(&s).unwrap()),
            format_queries(&gen_queries(&s).unwrap())
        );
        assert_eq!(
            format_objects(&gen_objects(&s).unwrap()),
            format_objects(&gen_objects(&s).unwrap())
        );
        let other = WorkloadSpec {
            rng_seed: 2,
            ..s.clone()
        };
        assert_ne!(
            format_queries(&gen_queries(&s).unwrap()),
            format_queries(&gen_queries(&other).unwrap())
        );
    }

    #[test]
    fn one_keyword_queries() {
        let s = WorkloadSpec {
            keywords_per_query: 1,
            ..small()
        };
        for q in gen_queries(&s).unwrap() {
            let QueryItem::Plain(q) = q else {
                panic!("no DNF requested")
            };
            assert_eq!(q.text.len(), 1);
        }
    }

    #[test]
    fn zipf_rank_ratio() {
        let s = WorkloadSpec {
            vocabulary_size: 10_000,
            ..Default::default()
        };
        let w = KeywordSampler::new(&s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut counts: HashMap<u64, u64> = HashMap::new();
        for _ in 0..100_000 {
            *counts.entry(w.rank(&mut rng)).or_default() += 1;
        }
        let ratio = counts[&1] as f64 / counts[&100] as f64;
        assert!((ratio - 100.0).abs() <= 20.0, "ratio {ratio}");
    }

    #[test]
    fn tsv_round_trip() {
        let s = WorkloadSpec {
            dnf_fraction: 0.3,
            rect_object_fraction: 0.5,
            ..small()
        };
        let q = gen_queries(&s).unwrap();
        let o = gen_objects(&s).unwrap();
        assert_eq!(parse_queries(&format_queries(&q)).unwrap(), q);
        assert_eq!(parse_objects(&format_objects(&o)).unwrap(), o);
    }

    #[test]
    fn parse_errors_carry_line() {
        let text = "1\t0.1\t0.1\t0.2\t0.2\ta b\t10\n2\t0.1\tnope\t0.2\t0.2\ta\t10\n";
        assert!(matches!(
            parse_queries(text),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_objects("1\t0.1\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_objects("# c\n1\t0.5\t1.5\ta\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn every_kind_passes_the_oracle() {
        let s = WorkloadSpec {
            dnf_fraction: 0.1,
            rect_object_fraction: 0.2,
            lifetime: (50, 400),
            ..small()
        };
        let cfg = BenchConfig {
            oracle_sample: 1.0,
            fast: FastConfig {
                theta: 2,
                gran_max: 16,
                clean_interval: 10,
                ..Default::default()
            },
            ..Default::default()
        };
        for kind in [
            IndexKind::Fast,
            IndexKind::Ril,
            IndexKind::Okt,
            IndexKind::Aki,
        ] {
            let m = run_bench(&s, kind, &cfg).unwrap();
            assert_eq!(m.oracle_checked, s.n_objects, "{kind:?}");
        }
    }

    #[test]
    fn sweep_csv() {
        let rows = run_sweep(
            &small(),
            IndexKind::Fast,
            &BenchConfig::default(),
            &Sweep::parse("theta=2,5").unwrap(),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("index,sweep,value,theta"));
        assert_eq!(text.lines().count(), 3);
        assert!(Sweep::parse("bogus=1").is_err());
    }

    #[test]
    fn replication_simulation() {
        let m = mc_replication_at_min_level(20_000, 5);
        assert!((m - 3.083).abs() < 0.05, "{m}");
        assert!(mc_replication(20_000, 3, 6) < m);
    }
}
