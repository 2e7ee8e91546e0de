//! The integrated index: one AKI per instantiated pyramid cell, queries
//! entering at the top level and moving down where lists of textually
//! identical queries grow long, and a lazy cleaner that retires expired
//! queries one cell at a time.

use std::collections::{HashMap, VecDeque};

use crate::aki::{
    Aki, AkiCtx, FrequenciesMap, ListArena, QuerySource, SearchStats, Slot, DEFAULT_THETA,
};
use crate::error::{Error, Result};
use crate::model::{
    dnf_expand, mbr_contains, mbr_overlaps, text_contains, ContinuousQuery, DnfQuery, Keyword,
    MatchResult, Mbr, QueryId, SpatioTextualObject,
};
use crate::pyramid::{NodeStore, PyramidConfig, DEFAULT_GRAN_MAX};

pub const DEFAULT_CLEAN_INTERVAL: u64 = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FastConfig {
    pub theta: usize,
    pub gran_max: u32,
    /// Logical time units between two cleaning steps.
    pub clean_interval: u64,
    /// List length above which a frequent node sheds queries to the level
    /// below. `None` means four times `theta`.
    pub descent_trigger: Option<usize>,
}

impl Default for FastConfig {
    fn default() -> Self {
        FastConfig {
            theta: DEFAULT_THETA,
            gran_max: DEFAULT_GRAN_MAX,
            clean_interval: DEFAULT_CLEAN_INTERVAL,
            descent_trigger: None,
        }
    }
}

impl FastConfig {
    pub fn trigger(&self) -> usize {
        self.descent_trigger.unwrap_or(4 * self.theta)
    }
}

#[derive(Clone, Debug)]
struct Record {
    report: u32,
    mbr: Mbr,
    text: Vec<Keyword>,
    t_exp: u64,
    area: f64,
    min_level: u32,
    deleted: bool,
    placements: Vec<u64>,
    origins: Vec<u64>,
}

#[derive(Clone, Debug)]
struct Report {
    qid: QueryId,
    flag: bool,
    slots: Vec<Slot>,
    live: u32,
}

struct Texts<'a>(&'a [Record]);

impl QuerySource for Texts<'_> {
    fn text(&self, slot: Slot) -> &[Keyword] {
        &self.0[slot as usize].text
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CleanReport {
    pub removed: usize,
    pub demoted: usize,
    pub nodes_deleted: usize,
}

impl CleanReport {
    fn merge(&mut self, o: CleanReport) {
        self.removed += o.removed;
        self.demoted += o.demoted;
        self.nodes_deleted += o.nodes_deleted;
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MatchStats {
    pub pyramid_nodes: u64,
    pub search: SearchStats,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IndexStats {
    pub pyramid_nodes: usize,
    pub textual_nodes: usize,
    pub frequent_nodes: usize,
    pub list_entries: usize,
    pub shared_lists: usize,
    pub live_queries: usize,
    pub descents: u64,
    /// Mean number of cells holding a live query.
    pub mean_replication: f64,
}

/// Keyword set searched at each visited level during one point match.
pub type MatchTrace = Vec<(u32, Vec<Keyword>)>;

#[derive(Debug)]
pub struct FastIndex {
    cfg: FastConfig,
    pyramid: PyramidConfig,
    store: NodeStore<Aki>,
    fm: FrequenciesMap,
    arena: ListArena,
    records: Vec<Record>,
    reports: Vec<Report>,
    by_qid: HashMap<QueryId, u32>,
    clean_queue: VecDeque<u64>,
    clock: u64,
    descents: u64,
}

impl FastIndex {
    pub fn new(cfg: FastConfig) -> Result<Self> {
        if cfg.theta == 0 {
            return Err(Error::InvalidConfig("theta must be at least 1".into()));
        }
        if cfg.clean_interval == 0 {
            return Err(Error::InvalidConfig(
                "clean interval must be at least 1".into(),
            ));
        }
        Ok(FastIndex {
            pyramid: PyramidConfig::new(cfg.gran_max)?,
            cfg,
            store: NodeStore::new(),
            fm: FrequenciesMap::new(),
            arena: ListArena::new(),
            records: Vec::new(),
            reports: Vec::new(),
            by_qid: HashMap::new(),
            clean_queue: VecDeque::new(),
            clock: 0,
            descents: 0,
        })
    }

    pub fn config(&self) -> &FastConfig {
        &self.cfg
    }

    pub fn pyramid(&self) -> &PyramidConfig {
        &self.pyramid
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn frequencies(&self) -> &FrequenciesMap {
        &self.fm
    }

    pub fn store(&self) -> &NodeStore<Aki> {
        &self.store
    }

    pub fn arena(&self) -> &ListArena {
        &self.arena
    }

    pub fn clean_queue_len(&self) -> usize {
        self.clean_queue.len()
    }

    pub fn live_queries(&self) -> usize {
        self.by_qid.len()
    }

    pub fn contains(&self, qid: QueryId) -> bool {
        self.by_qid.contains_key(&qid)
    }

    pub fn insert(&mut self, q: ContinuousQuery) -> Result<()> {
        q.validate()?;
        let qid = q.reported_id();
        self.admit(qid, q.t_exp)?;
        let report = self.new_report(qid);
        let slot = self.new_record(report, q.mbr, q.text, q.t_exp);
        self.insert_at(slot, self.pyramid.top_level(), None);
        Ok(())
    }

    pub fn insert_dnf(&mut self, d: DnfQuery) -> Result<()> {
        let subs = dnf_expand(&d, |i| i as u64)?;
        d.mbr.validate()?;
        self.admit(d.qid, d.t_exp)?;
        let report = self.new_report(d.qid);
        for sub in subs {
            let slot = self.new_record(report, sub.mbr, sub.text, sub.t_exp);
            self.insert_at(slot, self.pyramid.top_level(), None);
        }
        Ok(())
    }

    fn admit(&self, qid: QueryId, t_exp: u64) -> Result<()> {
        if t_exp <= self.clock {
            return Err(Error::Expired {
                t_exp,
                now: self.clock,
            });
        }
        if self.by_qid.contains_key(&qid) {
            return Err(Error::DuplicateQuery(qid.0));
        }
        Ok(())
    }

    fn new_report(&mut self, qid: QueryId) -> u32 {
        let r = self.reports.len() as u32;
        self.reports.push(Report {
            qid,
            flag: false,
            slots: Vec::new(),
            live: 0,
        });
        self.by_qid.insert(qid, r);
        r
    }

    fn new_record(&mut self, report: u32, mbr: Mbr, text: Vec<Keyword>, t_exp: u64) -> Slot {
        let slot = self.records.len() as Slot;
        self.fm.add(&text);
        self.records.push(Record {
            report,
            mbr,
            area: mbr.area(),
            min_level: self.pyramid.min_level(&mbr),
            text,
            t_exp,
            deleted: false,
            placements: Vec::new(),
            origins: Vec::new(),
        });
        let rep = &mut self.reports[report as usize];
        rep.slots.push(slot);
        rep.live += 1;
        slot
    }

    /// Files `slot` into every cell of `level` it overlaps, restricted to the
    /// children of `parent` when given.
    fn insert_at(&mut self, slot: Slot, level: u32, parent: Option<(u32, u32)>) {
        let pyramid = self.pyramid;
        let mbr = self.records[slot as usize].mbr;
        let mut cells = pyramid
            .cells_overlapping(&mbr, level)
            .expect("validated query");
        if let Some((px, py)) = parent {
            cells.retain(|&(x, y)| PyramidConfig::is_child(x, y, px, py));
        }
        let kmin = self
            .fm
            .least_frequent(&self.records[slot as usize].text)
            .clone();
        let theta = self.cfg.theta;
        let trigger = Some(self.cfg.trigger());
        let mut shared: Option<u64> = None;
        let mut overflows = Vec::new();

        for (x, y) in cells {
            let shared_len = shared.map(|a| {
                self.store
                    .get(a)
                    .expect("live node")
                    .aki
                    .top_len(&kmin, &self.arena)
            });
            let (node, created) = self
                .store
                .get_or_create(&pyramid, level, x, y, Aki::new)
                .expect("coordinates from the pyramid");
            let addr = node.address;
            if created {
                self.clean_queue.push_back(addr);
            }
            self.records[slot as usize].placements.push(addr);
            if node.aki.top_contains(&kmin, slot, &self.arena) {
                shared = Some(addr);
                continue;
            }
            if let (Some(sa), Some(sl)) = (shared, shared_len) {
                let here = &node.aki;
                if !here.top_is_frequent(&kmin) && here.top_len(&kmin, &self.arena) + sl < theta {
                    let id = self
                        .store
                        .get_mut(sa)
                        .expect("live node")
                        .aki
                        .share_top(&kmin, &mut self.arena, level)
                        .expect("sharing source is infrequent");
                    self.store
                        .get_mut(addr)
                        .expect("just created")
                        .aki
                        .adopt_shared(&kmin, id, &mut self.arena);
                    continue;
                }
            }
            let cell = pyramid
                .cell_rect(level, x, y)
                .expect("coordinates from the pyramid");
            let records = &self.records;
            let keep = |s: Slot| mbr_overlaps(&records[s as usize].mbr, &cell);
            let src = Texts(records);
            let node = self.store.get_mut(addr).expect("just created");
            let mut ctx = AkiCtx {
                theta,
                descent_trigger: trigger,
                fm: &self.fm,
                src: &src,
                arena: &mut self.arena,
                keep: &keep,
            };
            let out = node.aki.insert(slot, &mut ctx);
            overflows.extend(out.overflows.into_iter().map(|p| (addr, p)));
            if node.aki.top_contains(&kmin, slot, &self.arena) {
                shared = Some(addr);
            }
        }
        for (addr, path) in overflows {
            self.descend(addr, &path, level);
        }
    }

    /// Moves the smaller-area half of the frequent list at `path` one level down.
    fn descend(&mut self, addr: u64, path: &[Keyword], level: u32) {
        if level == 0 {
            return;
        }
        let to = level - 1;
        let Some(node) = self.store.get(addr) else {
            return;
        };
        let Some(list) = node.aki.frequent_list(path) else {
            return;
        };
        if list.len() <= self.cfg.trigger() {
            return;
        }
        let mut areas: Vec<f64> = list
            .iter()
            .map(|&s| self.records[s as usize].area)
            .collect();
        areas.sort_by(f64::total_cmp);
        let median = areas[areas.len() / 2];
        let movers: Vec<Slot> = list
            .iter()
            .copied()
            .filter(|&s| {
                let r = &self.records[s as usize];
                r.area < median
                    && r.min_level <= to
                    && r.text.iter().all(|k| node.aki.top_is_frequent(k))
            })
            .collect();
        if movers.is_empty() {
            return;
        }
        let (x, y) = (node.x, node.y);
        let node = self.store.get_mut(addr).expect("checked above");
        for &s in &movers {
            node.aki.detach_from_frequent(path, s);
            let r = &mut self.records[s as usize];
            for k in &r.text {
                node.aki.pin(k);
            }
            r.origins.push(addr);
            if let Some(i) = r.placements.iter().position(|&a| a == addr) {
                r.placements.swap_remove(i);
            }
        }
        self.descents += movers.len() as u64;
        for s in movers {
            self.insert_at(s, to, Some((x, y)));
        }
    }

    fn is_live(&self, r: &Record) -> bool {
        !r.deleted && r.t_exp > self.clock
    }

    pub fn match_object(&mut self, o: &SpatioTextualObject) -> MatchResult {
        let mut stats = MatchStats::default();
        self.match_with_stats(o, &mut stats, None)
    }

    pub fn match_point(&mut self, o: &SpatioTextualObject) -> MatchResult {
        let mut stats = MatchStats::default();
        self.match_with_stats(
            &SpatioTextualObject {
                rect: None,
                ..o.clone()
            },
            &mut stats,
            None,
        )
    }

    pub fn match_rect(&mut self, o: &SpatioTextualObject, rect: Mbr) -> MatchResult {
        let mut stats = MatchStats::default();
        self.match_with_stats(
            &SpatioTextualObject {
                rect: Some(rect),
                ..o.clone()
            },
            &mut stats,
            None,
        )
    }

    /// Matches `o` by point or rectangle depending on `o.rect`, accumulating
    /// cost counters and, for points, the keyword set searched per level.
    pub fn match_with_stats(
        &mut self,
        o: &SpatioTextualObject,
        stats: &mut MatchStats,
        trace: Option<&mut MatchTrace>,
    ) -> MatchResult {
        let mut hits: Vec<u32> = Vec::new();
        match o.rect {
            None => self.walk_point(o, stats, trace, &mut hits),
            Some(rect) => self.walk_rect(o, rect, stats, &mut hits),
        }
        let mut qids = Vec::with_capacity(hits.len());
        for h in hits {
            let rep = &mut self.reports[h as usize];
            rep.flag = false;
            qids.push(rep.qid);
        }
        MatchResult::from_unsorted(qids)
    }

    fn search_cell(
        &mut self,
        addr: u64,
        keywords: &[Keyword],
        o: &SpatioTextualObject,
        stats: &mut MatchStats,
        hits: &mut Vec<u32>,
    ) -> Option<Vec<Keyword>> {
        let node = self.store.get(addr)?;
        stats.pyramid_nodes += 1;
        let clock = self.clock;
        let records = &self.records;
        let reports = &mut self.reports;
        let mut visit = |s: Slot, verify: bool| {
            let r = &records[s as usize];
            if r.deleted || r.t_exp <= clock {
                return;
            }
            let spatial = match &o.rect {
                None => mbr_contains(&r.mbr, o.loc),
                Some(rect) => mbr_overlaps(&r.mbr, rect),
            };
            if !spatial || (verify && !text_contains(&o.text, &r.text)) {
                return;
            }
            let rep = &mut reports[r.report as usize];
            if !rep.flag {
                rep.flag = true;
                hits.push(r.report);
            }
        };
        Some(
            node.aki
                .search(keywords, &self.arena, &mut stats.search, &mut visit),
        )
    }

    fn walk_point(
        &mut self,
        o: &SpatioTextualObject,
        stats: &mut MatchStats,
        mut trace: Option<&mut MatchTrace>,
        hits: &mut Vec<u32>,
    ) {
        let mut keywords = o.text.clone();
        for level in (0..=self.pyramid.top_level()).rev() {
            if keywords.is_empty() {
                break;
            }
            if let Some(t) = trace.as_deref_mut() {
                t.push((level, keywords.clone()));
            }
            let Ok((x, y)) = self.pyramid.cell_coords(o.loc, level) else {
                return;
            };
            let addr = self
                .pyramid
                .node_address(level, x, y)
                .expect("cell from the pyramid");
            if let Some(next) = self.search_cell(addr, &keywords, o, stats, hits) {
                keywords = next;
            }
        }
    }

    fn walk_rect(
        &mut self,
        o: &SpatioTextualObject,
        rect: Mbr,
        stats: &mut MatchStats,
        hits: &mut Vec<u32>,
    ) {
        let top = self.pyramid.top_level();
        let mut carried: HashMap<(u32, u32), Vec<Keyword>> = HashMap::new();
        for level in (0..=top).rev() {
            let Ok(cells) = self.pyramid.cells_overlapping(&rect, level) else {
                return;
            };
            let mut next = HashMap::new();
            for (x, y) in cells {
                let keywords = if level == top {
                    o.text.clone()
                } else {
                    match carried.get(&(x / 2, y / 2)) {
                        Some(k) => k.clone(),
                        None => continue,
                    }
                };
                if keywords.is_empty() {
                    continue;
                }
                let addr = self
                    .pyramid
                    .node_address(level, x, y)
                    .expect("cell from the pyramid");
                let out = self
                    .search_cell(addr, &keywords, o, stats, hits)
                    .unwrap_or(keywords);
                next.insert((x, y), out);
            }
            carried = next;
        }
    }

    /// Moves the clock forward, running one cleaning step per elapsed interval.
    pub fn advance_clock(&mut self, dt: u64) -> CleanReport {
        let before = self.clock / self.cfg.clean_interval;
        self.clock += dt;
        let after = self.clock / self.cfg.clean_interval;
        let mut total = CleanReport::default();
        for _ in before..after {
            total.merge(self.clean_step());
        }
        total
    }

    /// Sets the clock without cleaning.
    pub fn set_clock(&mut self, now: u64) {
        self.clock = now;
    }

    /// Visits the next queued cell and retires its dead queries.
    pub fn clean_step(&mut self) -> CleanReport {
        let mut report = CleanReport::default();
        let addr = loop {
            match self.clean_queue.pop_front() {
                None => return report,
                Some(a) if self.store.get(a).is_some() => break a,
                Some(_) => continue,
            }
        };
        let clock = self.clock;
        let mut removed = Vec::new();
        {
            let records = &self.records;
            let is_dead = |s: Slot| {
                let r = &records[s as usize];
                r.deleted || r.t_exp <= clock
            };
            let node = self.store.get_mut(addr).expect("checked above");
            node.aki
                .remove_dead(&mut self.arena, &is_dead, &mut removed);
        }
        removed.sort_unstable();
        removed.dedup();
        report.removed = removed.len();
        let mut zeroed = Vec::new();
        for &s in &removed {
            let r = &mut self.records[s as usize];
            if let Some(i) = r.placements.iter().position(|&a| a == addr) {
                r.placements.swap_remove(i);
            }
            if !r.deleted {
                zeroed.extend(self.retire(s));
            }
        }
        let node = self.store.get_mut(addr).expect("checked above");
        for k in &zeroed {
            node.aki.drop_keyword(k, &mut self.arena);
        }
        report.demoted = node.aki.demote_all(self.cfg.theta, &self.arena);
        node.aki.prune_empty(&mut self.arena);
        if node.aki.is_empty() {
            self.store.remove(addr);
            report.nodes_deleted = 1;
        } else {
            self.clean_queue.push_back(addr);
        }
        report
    }

    /// Runs cleaning steps until every queued cell has been visited once.
    pub fn clean_all(&mut self) -> CleanReport {
        let mut total = CleanReport::default();
        for _ in 0..self.clean_queue.len() {
            total.merge(self.clean_step());
        }
        total
    }

    /// Marks a slot deleted and updates counts and pins. Returns keywords
    /// whose count dropped to zero.
    fn retire(&mut self, s: Slot) -> Vec<Keyword> {
        let r = &mut self.records[s as usize];
        r.deleted = true;
        let zeroed = self.fm.remove(&r.text).expect("live query counted once");
        for &origin in &r.origins {
            if let Some(n) = self.store.get_mut(origin) {
                for k in &r.text {
                    n.aki.unpin(k);
                }
            }
        }
        let rep = &mut self.reports[r.report as usize];
        rep.live -= 1;
        if rep.live == 0 {
            self.by_qid.remove(&rep.qid);
        }
        zeroed
    }

    /// Removes a query (or every sub-query of a DNF query) immediately.
    pub fn remove(&mut self, qid: QueryId) -> Result<()> {
        let report = *self.by_qid.get(&qid).ok_or(Error::UnknownQuery(qid.0))?;
        let slots = self.reports[report as usize].slots.clone();
        for s in slots {
            if self.records[s as usize].deleted {
                continue;
            }
            let placements = std::mem::take(&mut self.records[s as usize].placements);
            let text = self.records[s as usize].text.clone();
            for addr in placements {
                if let Some(n) = self.store.get_mut(addr) {
                    n.aki.remove(s, &text, &mut self.arena);
                }
            }
            self.retire(s);
        }
        Ok(())
    }

    pub fn stats(&self) -> IndexStats {
        let mut st = IndexStats {
            pyramid_nodes: self.store.len(),
            shared_lists: self.arena.len(),
            live_queries: self.by_qid.len(),
            descents: self.descents,
            ..Default::default()
        };
        for n in self.store.iter() {
            let a = n.aki.stats();
            st.textual_nodes += a.textual_nodes;
            st.frequent_nodes += a.frequent_nodes;
            st.list_entries += a.own_entries;
        }
        st.list_entries += self
            .arena
            .iter()
            .map(|(_, l)| l.queries.len())
            .sum::<usize>();
        let live: Vec<&Record> = self.records.iter().filter(|r| self.is_live(r)).collect();
        if !live.is_empty() {
            st.mean_replication =
                live.iter().map(|r| r.placements.len()).sum::<usize>() as f64 / live.len() as f64;
        }
        st
    }

    /// Levels and addresses holding the live sub-queries of `qid`.
    pub fn placements(&self, qid: QueryId) -> Vec<(u32, u64)> {
        let Some(&rep) = self.by_qid.get(&qid) else {
            return Vec::new();
        };
        let mut out: Vec<(u32, u64)> = self.reports[rep as usize]
            .slots
            .iter()
            .flat_map(|&s| self.records[s as usize].placements.iter())
            .map(|&a| (self.pyramid.decode_address(a).expect("stored address").0, a))
            .collect();
        out.sort_unstable();
        out
    }

    /// Checks every structural invariant; the error names the first violation.
    pub fn audit(&self) -> std::result::Result<(), String> {
        let theta = self.cfg.theta;
        let src = Texts(&self.records);
        let mut refs: HashMap<u64, u32> = HashMap::new();
        let mut holders: HashMap<(Slot, u32), Vec<u64>> = HashMap::new();
        for n in self.store.iter() {
            n.aki
                .audit(theta, &src, &self.arena)
                .map_err(|e| format!("node {}: {e}", n.address))?;
            for (k, id) in n.aki.shared_ids() {
                *refs.entry(id).or_insert(0) += 1;
                let l = self.arena.get(id);
                if l.keyword != k || l.level != n.level {
                    return Err(format!(
                        "shared list {id} referenced under {k} at level {}",
                        n.level
                    ));
                }
            }
            let cell = self
                .pyramid
                .cell_rect(n.level, n.x, n.y)
                .map_err(|e| e.to_string())?;
            let mut slots = n.aki.all_slots(&self.arena);
            slots.sort_unstable();
            slots.dedup();
            for s in slots {
                let r = &self.records[s as usize];
                if !r.deleted && mbr_overlaps(&r.mbr, &cell) {
                    holders.entry((s, n.level)).or_default().push(n.address);
                }
            }
        }
        for (id, l) in self.arena.iter() {
            if l.queries.len() > theta {
                return Err(format!(
                    "shared list {id} holds {} queries",
                    l.queries.len()
                ));
            }
            if refs.get(&id).copied().unwrap_or(0) != l.refs {
                return Err(format!(
                    "shared list {id} has {} refs, {:?} found",
                    l.refs,
                    refs.get(&id)
                ));
            }
        }
        for ((s, level), cells) in &holders {
            let r = &self.records[*s as usize];
            if cells.len() > 4 {
                return Err(format!(
                    "slot {s} held by {} cells at level {level}",
                    cells.len()
                ));
            }
            if *level < r.min_level {
                return Err(format!(
                    "slot {s} stored at level {level} below its min level {}",
                    r.min_level
                ));
            }
        }
        let mut fm = FrequenciesMap::new();
        let mut pins: HashMap<(u64, Keyword), u32> = HashMap::new();
        for (s, r) in self.records.iter().enumerate() {
            if r.deleted {
                continue;
            }
            fm.add(&r.text);
            for &p in &r.placements {
                let n = self
                    .store
                    .get(p)
                    .ok_or_else(|| format!("slot {s} placed in missing node {p}"))?;
                if !n.aki.all_slots(&self.arena).contains(&(s as Slot)) {
                    return Err(format!("slot {s} missing from its node {p}"));
                }
            }
            for &origin in &r.origins {
                let n = self
                    .store
                    .get(origin)
                    .ok_or_else(|| format!("slot {s} descended from missing node"))?;
                for k in &r.text {
                    if !n.aki.top_is_frequent(k) {
                        return Err(format!(
                            "slot {s} descended from node {origin} where {k} is not frequent"
                        ));
                    }
                    *pins.entry((origin, k.clone())).or_insert(0) += 1;
                }
            }
        }
        if fm != self.fm {
            return Err("frequencies map differs from a recount".into());
        }
        for n in self.store.iter() {
            for (k, _, _) in n
                .aki
                .layout(&self.arena)
                .into_iter()
                .filter(|(p, _, _)| p.len() == 1)
                .map(|(p, f, s)| (p[0].clone(), f, s))
            {
                let have = n.aki.top(&k).map_or(0, |t| t.pins());
                let want = pins.get(&(n.address, k.clone())).copied().unwrap_or(0);
                if have != want {
                    return Err(format!(
                        "node {} keyword {k}: {have} pins, {want} expected",
                        n.address
                    ));
                }
            }
        }
        if let Some(r) = self.reports.iter().find(|r| r.flag) {
            return Err(format!("result flag left set on {}", r.qid));
        }
        Ok(())
    }
}
