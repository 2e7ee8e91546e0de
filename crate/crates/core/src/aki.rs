//! Adaptive keyword index.
//!
//! Each query lives in exactly one textual node of an AKI. Infrequent
//! top-level nodes behave like bounded posting lists: a query is filed under
//! one of its keywords and must be verified textually when retrieved. Frequent
//! nodes split their queries by the sorted keyword sequence, so a query on a
//! frequent node has exactly the node's path as its text and needs no textual
//! check. Deep infrequent nodes hold queries whose text starts with the path.
//!
//! Queries are referenced by [`Slot`], an index into a table owned by the
//! caller and exposed through [`QuerySource`].

use std::collections::{BTreeMap, HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::model::{text_contains, ContinuousQuery, Keyword, QueryId};

pub const DEFAULT_THETA: usize = 5;

pub type Slot = u32;
pub type ListId = u64;

pub trait QuerySource {
    fn text(&self, slot: Slot) -> &[Keyword];
}

impl QuerySource for Vec<Vec<Keyword>> {
    fn text(&self, slot: Slot) -> &[Keyword] {
        &self[slot as usize]
    }
}

/// Live number of queries per keyword, counted once per query.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FrequenciesMap {
    counts: HashMap<Keyword, u64>,
}

impl FrequenciesMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, text: &[Keyword]) {
        for k in text {
            *self.counts.entry(k.clone()).or_insert(0) += 1;
        }
    }

    /// Decrements every keyword of `text` and returns those that reached zero.
    /// Nothing changes if any count would underflow.
    pub fn remove(&mut self, text: &[Keyword]) -> Result<Vec<Keyword>> {
        if let Some(k) = text.iter().find(|k| self.count(k) == 0) {
            return Err(Error::UnderflowViolation(k.to_string()));
        }
        let mut zeroed = Vec::new();
        for k in text {
            let c = self.counts.get_mut(k.as_str()).expect("checked above");
            *c -= 1;
            if *c == 0 {
                self.counts.remove(k.as_str());
                zeroed.push(k.clone());
            }
        }
        Ok(zeroed)
    }

    pub fn count(&self, k: &str) -> u64 {
        self.counts.get(k).copied().unwrap_or(0)
    }

    /// The keyword of `text` with the smallest count; ties go to the
    /// lexicographically smallest keyword.
    pub fn least_frequent<'t>(&self, text: &'t [Keyword]) -> &'t Keyword {
        let mut best = &text[0];
        let mut best_count = self.count(best);
        for k in &text[1..] {
            let c = self.count(k);
            if c < best_count || (c == best_count && k < best) {
                best = k;
                best_count = c;
            }
        }
        best
    }

    /// Keywords with a positive count.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Keyword, u64)> {
        self.counts.iter().map(|(k, c)| (k, *c))
    }
}

/// A query list referenced by several cells of the same pyramid level.
#[derive(Clone, Debug)]
pub struct SharedList {
    pub queries: Vec<Slot>,
    pub refs: u32,
    pub keyword: Keyword,
    pub level: u32,
}

#[derive(Debug, Default)]
pub struct ListArena {
    lists: HashMap<ListId, SharedList>,
    next: ListId,
}

impl ListArena {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn create(&mut self, queries: Vec<Slot>, keyword: Keyword, level: u32) -> ListId {
        let id = self.next;
        self.next += 1;
        self.lists.insert(
            id,
            SharedList {
                queries,
                refs: 1,
                keyword,
                level,
            },
        );
        id
    }

    pub fn get(&self, id: ListId) -> &SharedList {
        &self.lists[&id]
    }

    fn get_mut(&mut self, id: ListId) -> &mut SharedList {
        self.lists.get_mut(&id).expect("dangling shared list")
    }

    fn retain(&mut self, id: ListId) {
        self.get_mut(id).refs += 1;
    }

    fn release(&mut self, id: ListId) {
        let l = self.get_mut(id);
        l.refs -= 1;
        if l.refs == 0 {
            self.lists.remove(&id);
        }
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ListId, &SharedList)> {
        self.lists.iter().map(|(id, l)| (*id, l))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum QueryList {
    Own(Vec<Slot>),
    Shared(ListId),
}

#[derive(Clone, Debug)]
pub struct TextualNode {
    frequent: bool,
    list: QueryList,
    children: BTreeMap<Keyword, TextualNode>,
    pins: u32,
}

impl TextualNode {
    fn infrequent() -> Self {
        TextualNode {
            frequent: false,
            list: QueryList::Own(Vec::new()),
            children: BTreeMap::new(),
            pins: 0,
        }
    }

    pub fn is_frequent(&self) -> bool {
        self.frequent
    }

    pub fn pins(&self) -> u32 {
        self.pins
    }

    fn slots<'a>(&'a self, arena: &'a ListArena) -> &'a [Slot] {
        match &self.list {
            QueryList::Own(v) => v,
            QueryList::Shared(id) => &arena.get(*id).queries,
        }
    }

    fn len(&self, arena: &ListArena) -> usize {
        self.slots(arena).len()
    }

    fn own_mut(&mut self) -> &mut Vec<Slot> {
        match &mut self.list {
            QueryList::Own(v) => v,
            QueryList::Shared(_) => panic!("frequent or deep node with a shared list"),
        }
    }

    fn push(&mut self, slot: Slot, arena: &mut ListArena) {
        match &mut self.list {
            QueryList::Own(v) => v.push(slot),
            QueryList::Shared(id) => arena.get_mut(*id).queries.push(slot),
        }
    }

    fn remove_slot(&mut self, slot: Slot, arena: &mut ListArena) -> bool {
        let v = match &mut self.list {
            QueryList::Own(v) => v,
            QueryList::Shared(id) => &mut arena.get_mut(*id).queries,
        };
        match v.iter().position(|&s| s == slot) {
            Some(i) => {
                v.remove(i);
                true
            }
            None => false,
        }
    }

    /// Replaces a shared list with a private copy of the members `keep` accepts.
    fn privatize(&mut self, arena: &mut ListArena, keep: &dyn Fn(Slot) -> bool) {
        if let QueryList::Shared(id) = self.list {
            let own: Vec<Slot> = arena
                .get(id)
                .queries
                .iter()
                .copied()
                .filter(|&s| keep(s))
                .collect();
            arena.release(id);
            self.list = QueryList::Own(own);
        }
    }

    fn release(&mut self, arena: &mut ListArena) {
        if let QueryList::Shared(id) = self.list {
            arena.release(id);
            self.list = QueryList::Own(Vec::new());
        }
        for c in self.children.values_mut() {
            c.release(arena);
        }
    }

    fn prunable(&self, arena: &ListArena) -> bool {
        self.pins == 0 && self.children.is_empty() && self.len(arena) == 0
    }

    fn subtree_count(&self, arena: &ListArena) -> usize {
        self.len(arena)
            + self
                .children
                .values()
                .map(|c| c.subtree_count(arena))
                .sum::<usize>()
    }

    fn collect(&self, arena: &ListArena, out: &mut Vec<Slot>) {
        out.extend_from_slice(self.slots(arena));
        for c in self.children.values() {
            c.collect(arena, out);
        }
    }

    fn count_nodes(&self) -> usize {
        1 + self
            .children
            .values()
            .map(|c| c.count_nodes())
            .sum::<usize>()
    }
}

/// Per-call parameters and shared state for [`Aki::insert`].
pub struct AkiCtx<'a> {
    pub theta: usize,
    /// A frequent node with more queries than this is reported as overflowing.
    pub descent_trigger: Option<usize>,
    pub fm: &'a FrequenciesMap,
    pub src: &'a dyn QuerySource,
    pub arena: &'a mut ListArena,
    /// Decides which members of a shared list stay when the list is made private.
    pub keep: &'a dyn Fn(Slot) -> bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InsertOutcome {
    /// Paths of frequent nodes whose lists exceed the descent trigger.
    pub overflows: Vec<Vec<Keyword>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub textual_nodes: u64,
    pub queries: u64,
}

impl SearchStats {
    pub fn merge(&mut self, other: SearchStats) {
        self.textual_nodes += other.textual_nodes;
        self.queries += other.queries;
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AkiStats {
    pub textual_nodes: usize,
    pub frequent_nodes: usize,
    pub own_entries: usize,
    pub shared_refs: usize,
}

#[derive(PartialEq)]
enum Added {
    Present,
    Inserted,
    Overflow,
}

/// One row of [`Aki::layout`]: path, frequent flag and sorted members.
pub type LayoutRow = (Vec<Keyword>, bool, Vec<Slot>);

#[derive(Debug, Default)]
pub struct Aki {
    top: HashMap<Keyword, TextualNode>,
}

impl Aki {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.top.is_empty()
    }

    pub fn top(&self, k: &str) -> Option<&TextualNode> {
        self.top.get(k)
    }

    pub fn top_is_frequent(&self, k: &str) -> bool {
        self.top.get(k).is_some_and(|n| n.frequent)
    }

    pub fn top_len(&self, k: &str, arena: &ListArena) -> usize {
        self.top.get(k).map_or(0, |n| n.len(arena))
    }

    pub fn top_contains(&self, k: &str, slot: Slot, arena: &ListArena) -> bool {
        self.top
            .get(k)
            .is_some_and(|n| !n.frequent && n.slots(arena).contains(&slot))
    }

    pub fn top_shared_id(&self, k: &str) -> Option<ListId> {
        match self.top.get(k).map(|n| &n.list) {
            Some(QueryList::Shared(id)) => Some(*id),
            _ => None,
        }
    }

    /// Files `slot` and redistributes displaced queries until no node
    /// overflows. Returns frequent nodes whose lists exceed the trigger.
    pub fn insert(&mut self, slot: Slot, ctx: &mut AkiCtx<'_>) -> InsertOutcome {
        let src = ctx.src;
        let text = src.text(slot);
        let kmin = ctx.fm.least_frequent(text).clone();
        let mut out = InsertOutcome::default();
        let mut queue = VecDeque::new();
        if self.top_is_frequent(&kmin) {
            queue.push_back(slot);
        } else if self.add_top(&kmin, slot, ctx) == Added::Overflow {
            self.mark_top_frequent(&kmin, ctx, &mut queue);
        }
        while let Some(s) = queue.pop_front() {
            self.place_displaced(s, ctx, &mut queue, &mut out);
        }
        out.overflows.sort();
        out.overflows.dedup();
        out
    }

    fn add_top(&mut self, k: &Keyword, slot: Slot, ctx: &mut AkiCtx<'_>) -> Added {
        let node = self
            .top
            .entry(k.clone())
            .or_insert_with(TextualNode::infrequent);
        if node.slots(ctx.arena).contains(&slot) {
            return Added::Present;
        }
        if let QueryList::Shared(id) = node.list {
            if ctx.arena.get(id).queries.len() < ctx.theta {
                ctx.arena.get_mut(id).queries.push(slot);
                return Added::Inserted;
            }
            node.privatize(ctx.arena, ctx.keep);
        }
        let v = node.own_mut();
        v.push(slot);
        if v.len() > ctx.theta {
            Added::Overflow
        } else {
            Added::Inserted
        }
    }

    /// Files `slot` under `k` if that top node is absent or infrequent with room.
    fn try_relocate(&mut self, k: &Keyword, slot: Slot, ctx: &mut AkiCtx<'_>) -> bool {
        let node = match self.top.get_mut(k) {
            None => {
                let mut n = TextualNode::infrequent();
                n.own_mut().push(slot);
                self.top.insert(k.clone(), n);
                return true;
            }
            Some(n) if n.frequent => return false,
            Some(n) => n,
        };
        if node.slots(ctx.arena).contains(&slot) {
            return true;
        }
        if node.len(ctx.arena) >= ctx.theta {
            node.privatize(ctx.arena, ctx.keep);
        }
        if node.len(ctx.arena) < ctx.theta {
            node.push(slot, ctx.arena);
            return true;
        }
        false
    }

    fn mark_top_frequent(&mut self, k: &Keyword, ctx: &mut AkiCtx<'_>, queue: &mut VecDeque<Slot>) {
        let node = self.top.get_mut(k).expect("marked node exists");
        node.privatize(ctx.arena, ctx.keep);
        node.frequent = true;
        queue.extend(std::mem::take(node.own_mut()));
    }

    fn place_displaced(
        &mut self,
        s: Slot,
        ctx: &mut AkiCtx<'_>,
        queue: &mut VecDeque<Slot>,
        out: &mut InsertOutcome,
    ) {
        let src = ctx.src;
        let text = src.text(s);
        for k in text {
            if self.try_relocate(k, s, ctx) {
                return;
            }
        }
        // Every keyword is frequent or saturated; the saturated ones turn
        // frequent so the query can be filed along its own keyword path.
        for k in text {
            if !self.top_is_frequent(k) {
                self.mark_top_frequent(k, ctx, queue);
            }
        }
        self.walk_insert(s, text, ctx, out);
    }

    fn walk_insert(
        &mut self,
        s: Slot,
        text: &[Keyword],
        ctx: &mut AkiCtx<'_>,
        out: &mut InsertOutcome,
    ) {
        let mut path = vec![text[0].clone()];
        let mut node = self
            .top
            .get_mut(&text[0])
            .expect("first keyword is frequent");
        let mut i = 1;
        while node.frequent && i < text.len() {
            node = node
                .children
                .entry(text[i].clone())
                .or_insert_with(TextualNode::infrequent);
            path.push(text[i].clone());
            i += 1;
        }
        node.own_mut().push(s);
        if node.frequent {
            check_trigger(node, &path, ctx.descent_trigger, out);
        } else if node.own_mut().len() > ctx.theta {
            split(
                node,
                &mut path,
                ctx.theta,
                ctx.descent_trigger,
                ctx.src,
                out,
            );
        }
    }

    /// Calls `visit(slot, needs_text_check)` for every candidate and returns
    /// the searched keywords whose top node is frequent.
    pub fn search(
        &self,
        keywords: &[Keyword],
        arena: &ListArena,
        stats: &mut SearchStats,
        visit: &mut dyn FnMut(Slot, bool),
    ) -> Vec<Keyword> {
        let mut frequent = Vec::new();
        for (i, k) in keywords.iter().enumerate() {
            let Some(node) = self.top.get(k) else {
                continue;
            };
            if node.frequent {
                frequent.push(k.clone());
            }
            search_node(node, i, keywords, arena, stats, visit);
        }
        frequent
    }

    /// Detaches `slot` from every node it can occupy given its text and
    /// prunes nodes left empty.
    pub fn remove(&mut self, slot: Slot, text: &[Keyword], arena: &mut ListArena) -> bool {
        let mut found = false;
        for k in text {
            if let Some(n) = self.top.get_mut(k) {
                if !n.frequent {
                    found |= n.remove_slot(slot, arena);
                }
            }
        }
        if let Some(n) = self.top.get_mut(&text[0]) {
            if n.frequent {
                found |= remove_on_path(n, text, 1, slot, arena);
            }
        }
        for k in text {
            self.prune_top(k, arena);
        }
        found
    }

    fn prune_top(&mut self, k: &str, arena: &mut ListArena) {
        if let Some(n) = self.top.get_mut(k) {
            if n.prunable(arena) {
                n.release(arena);
                self.top.remove(k);
            }
        }
    }

    fn node_at_mut(&mut self, path: &[Keyword]) -> Option<&mut TextualNode> {
        let mut node = self.top.get_mut(&path[0])?;
        for k in &path[1..] {
            node = node.children.get_mut(k)?;
        }
        Some(node)
    }

    fn node_at(&self, path: &[Keyword]) -> Option<&TextualNode> {
        let mut node = self.top.get(&path[0])?;
        for k in &path[1..] {
            node = node.children.get(k)?;
        }
        Some(node)
    }

    /// Members of the frequent node at `path`, if it exists.
    pub fn frequent_list(&self, path: &[Keyword]) -> Option<&[Slot]> {
        match self.node_at(path) {
            Some(n) if n.frequent => match &n.list {
                QueryList::Own(v) => Some(v),
                QueryList::Shared(_) => None,
            },
            _ => None,
        }
    }

    /// Removes `slot` from the list of the frequent node at `path`.
    pub fn detach_from_frequent(&mut self, path: &[Keyword], slot: Slot) -> bool {
        match self.node_at_mut(path) {
            Some(n) if n.frequent => {
                let v = n.own_mut();
                match v.iter().position(|&s| s == slot) {
                    Some(i) => {
                        v.remove(i);
                        true
                    }
                    None => false,
                }
            }
            _ => false,
        }
    }

    pub fn pin(&mut self, k: &str) {
        if let Some(n) = self.top.get_mut(k) {
            n.pins += 1;
        }
    }

    pub fn unpin(&mut self, k: &str) {
        if let Some(n) = self.top.get_mut(k) {
            n.pins = n.pins.saturating_sub(1);
        }
    }

    /// Drops every member for which `is_dead` holds; removed slots are
    /// appended to `removed`.
    pub fn remove_dead(
        &mut self,
        arena: &mut ListArena,
        is_dead: &dyn Fn(Slot) -> bool,
        removed: &mut Vec<Slot>,
    ) {
        fn walk(
            n: &mut TextualNode,
            arena: &mut ListArena,
            is_dead: &dyn Fn(Slot) -> bool,
            removed: &mut Vec<Slot>,
        ) {
            let v = match &mut n.list {
                QueryList::Own(v) => v,
                QueryList::Shared(id) => &mut arena.get_mut(*id).queries,
            };
            v.retain(|&s| {
                let dead = is_dead(s);
                if dead {
                    removed.push(s);
                }
                !dead
            });
            for c in n.children.values_mut() {
                walk(c, arena, is_dead, removed);
            }
        }
        for n in self.top.values_mut() {
            walk(n, arena, is_dead, removed);
        }
    }

    /// Removes the whole subtree under `k` unless it is pinned.
    pub fn drop_keyword(&mut self, k: &str, arena: &mut ListArena) -> bool {
        match self.top.get_mut(k) {
            Some(n) if n.pins == 0 => {
                n.release(arena);
                self.top.remove(k);
                true
            }
            _ => false,
        }
    }

    /// Removes empty, unpinned nodes bottom-up.
    pub fn prune_empty(&mut self, arena: &mut ListArena) -> usize {
        fn walk(n: &mut TextualNode, arena: &mut ListArena) -> usize {
            let mut pruned = 0;
            let keys: Vec<Keyword> = n.children.keys().cloned().collect();
            for k in keys {
                let c = n.children.get_mut(&k).expect("key listed");
                pruned += walk(c, arena);
                if c.prunable(arena) {
                    n.children.remove(&k);
                    pruned += 1;
                }
            }
            pruned
        }
        let mut pruned = 0;
        let keys: Vec<Keyword> = self.top.keys().cloned().collect();
        for k in keys {
            let n = self.top.get_mut(&k).expect("key listed");
            pruned += walk(n, arena);
            if n.prunable(arena) {
                n.release(arena);
                self.top.remove(&k);
                pruned += 1;
            }
        }
        pruned
    }

    /// Collapses the frequent node at `path` into one infrequent node when its
    /// subtree holds at most `theta` queries. Pinned nodes are left alone.
    pub fn demote_if_infrequent(
        &mut self,
        path: &[Keyword],
        theta: usize,
        arena: &ListArena,
    ) -> bool {
        match self.node_at_mut(path) {
            Some(n) => try_collapse(n, theta, arena),
            None => false,
        }
    }

    /// Offers every frequent node to demotion, highest first.
    pub fn demote_all(&mut self, theta: usize, arena: &ListArena) -> usize {
        fn walk(n: &mut TextualNode, theta: usize, arena: &ListArena) -> usize {
            if !n.frequent {
                return 0;
            }
            if try_collapse(n, theta, arena) {
                return 1;
            }
            n.children.values_mut().map(|c| walk(c, theta, arena)).sum()
        }
        self.top.values_mut().map(|n| walk(n, theta, arena)).sum()
    }

    pub fn stats(&self) -> AkiStats {
        fn walk(n: &TextualNode, s: &mut AkiStats) {
            s.textual_nodes += 1;
            if n.frequent {
                s.frequent_nodes += 1;
            }
            match &n.list {
                QueryList::Own(v) => s.own_entries += v.len(),
                QueryList::Shared(_) => s.shared_refs += 1,
            }
            for c in n.children.values() {
                walk(c, s);
            }
        }
        let mut s = AkiStats::default();
        for n in self.top.values() {
            walk(n, &mut s);
        }
        s
    }

    pub fn node_count(&self) -> usize {
        self.top.values().map(|n| n.count_nodes()).sum()
    }

    /// Every stored member, with repetitions if a slot is referenced twice.
    pub fn all_slots(&self, arena: &ListArena) -> Vec<Slot> {
        let mut out = Vec::new();
        for n in self.top.values() {
            n.collect(arena, &mut out);
        }
        out
    }

    /// Shared lists referenced by this AKI.
    pub fn shared_ids(&self) -> Vec<(Keyword, ListId)> {
        self.top
            .iter()
            .filter_map(|(k, n)| match n.list {
                QueryList::Shared(id) => Some((k.clone(), id)),
                QueryList::Own(_) => None,
            })
            .collect()
    }

    /// Every node as (path, frequent, sorted members), ordered by path.
    pub fn layout(&self, arena: &ListArena) -> Vec<LayoutRow> {
        fn walk(
            n: &TextualNode,
            path: &mut Vec<Keyword>,
            arena: &ListArena,
            out: &mut Vec<LayoutRow>,
        ) {
            let mut slots = n.slots(arena).to_vec();
            slots.sort_unstable();
            out.push((path.clone(), n.frequent, slots));
            for (k, c) in &n.children {
                path.push(k.clone());
                walk(c, path, arena, out);
                path.pop();
            }
        }
        let mut out = Vec::new();
        for (k, n) in &self.top {
            walk(n, &mut vec![k.clone()], arena, &mut out);
        }
        out.sort();
        out
    }

    /// Makes the infrequent list under `k` shareable and returns its id.
    pub fn share_top(&mut self, k: &Keyword, arena: &mut ListArena, level: u32) -> Option<ListId> {
        let n = self.top.get_mut(k)?;
        if n.frequent {
            return None;
        }
        match &mut n.list {
            QueryList::Shared(id) => Some(*id),
            QueryList::Own(v) => {
                let id = arena.create(std::mem::take(v), k.clone(), level);
                n.list = QueryList::Shared(id);
                Some(id)
            }
        }
    }

    /// Points the infrequent node under `k` at shared list `id`, merging the
    /// node's current members into it.
    pub fn adopt_shared(&mut self, k: &Keyword, id: ListId, arena: &mut ListArena) {
        let n = self
            .top
            .entry(k.clone())
            .or_insert_with(TextualNode::infrequent);
        debug_assert!(!n.frequent);
        if n.list == QueryList::Shared(id) {
            return;
        }
        let old = n.slots(arena).to_vec();
        if let QueryList::Shared(prev) = n.list {
            arena.release(prev);
        }
        let target = &mut arena.get_mut(id).queries;
        for s in old {
            if !target.contains(&s) {
                target.push(s);
            }
        }
        arena.retain(id);
        n.list = QueryList::Shared(id);
    }

    /// Checks the structural invariants; the error names the first violation.
    pub fn audit(
        &self,
        theta: usize,
        src: &dyn QuerySource,
        arena: &ListArena,
    ) -> std::result::Result<(), String> {
        fn walk(
            n: &TextualNode,
            path: &mut Vec<Keyword>,
            theta: usize,
            src: &dyn QuerySource,
            arena: &ListArena,
        ) -> std::result::Result<(), String> {
            let slots = n.slots(arena);
            let top = path.len() == 1;
            if matches!(n.list, QueryList::Shared(_)) && (!top || n.frequent) {
                return Err(format!(
                    "{path:?}: shared list below the top level or on a frequent node"
                ));
            }
            if !top && n.pins > 0 {
                return Err(format!("{path:?}: pinned deep node"));
            }
            if n.frequent {
                for &s in slots {
                    if src.text(s) != path.as_slice() {
                        return Err(format!(
                            "{path:?}: slot {s} text {:?} differs from frequent path",
                            src.text(s)
                        ));
                    }
                }
            } else {
                if !n.children.is_empty() {
                    return Err(format!("{path:?}: infrequent node with children"));
                }
                let mut distinct = slots.to_vec();
                distinct.sort_unstable();
                distinct.dedup();
                if distinct.len() > theta {
                    return Err(format!(
                        "{path:?}: {} queries on an infrequent node (theta {theta})",
                        distinct.len()
                    ));
                }
                for &s in slots {
                    let t = src.text(s);
                    let ok = if top {
                        t.contains(&path[0])
                    } else {
                        t.starts_with(path)
                    };
                    if !ok {
                        return Err(format!(
                            "{path:?}: slot {s} text {t:?} not reachable through path"
                        ));
                    }
                }
            }
            for (k, c) in &n.children {
                if k <= path.last().expect("non-empty path") {
                    return Err(format!("{path:?}: child key {k} out of order"));
                }
                path.push(k.clone());
                walk(c, path, theta, src, arena)?;
                path.pop();
            }
            Ok(())
        }
        for (k, n) in &self.top {
            walk(n, &mut vec![k.clone()], theta, src, arena)?;
        }
        Ok(())
    }
}

fn check_trigger(
    node: &TextualNode,
    path: &[Keyword],
    trigger: Option<usize>,
    out: &mut InsertOutcome,
) {
    if let (Some(t), QueryList::Own(v)) = (trigger, &node.list) {
        if v.len() > t {
            out.overflows.push(path.to_vec());
        }
    }
}

/// Turns an overfull deep infrequent node frequent and spreads its members one
/// keyword further down.
fn split(
    node: &mut TextualNode,
    path: &mut Vec<Keyword>,
    theta: usize,
    trigger: Option<usize>,
    src: &dyn QuerySource,
    out: &mut InsertOutcome,
) {
    let depth = path.len();
    node.frequent = true;
    let members = std::mem::take(node.own_mut());
    let mut stay = Vec::new();
    for m in members {
        let t = src.text(m);
        if t.len() == depth {
            stay.push(m);
        } else {
            node.children
                .entry(t[depth].clone())
                .or_insert_with(TextualNode::infrequent)
                .own_mut()
                .push(m);
        }
    }
    node.list = QueryList::Own(stay);
    for (k, c) in node.children.iter_mut() {
        if !c.frequent && c.own_mut().len() > theta {
            path.push(k.clone());
            split(c, path, theta, trigger, src, out);
            path.pop();
        }
    }
    check_trigger(node, path, trigger, out);
}

fn search_node(
    node: &TextualNode,
    i: usize,
    keywords: &[Keyword],
    arena: &ListArena,
    stats: &mut SearchStats,
    visit: &mut dyn FnMut(Slot, bool),
) {
    stats.textual_nodes += 1;
    let slots = node.slots(arena);
    stats.queries += slots.len() as u64;
    for &s in slots {
        visit(s, !node.frequent);
    }
    if !node.frequent || node.children.is_empty() {
        return;
    }
    for j in i + 1..keywords.len() {
        if let Some(c) = node.children.get(&keywords[j]) {
            search_node(c, j, keywords, arena, stats, visit);
        }
    }
}

fn remove_on_path(
    n: &mut TextualNode,
    text: &[Keyword],
    i: usize,
    slot: Slot,
    arena: &mut ListArena,
) -> bool {
    if !n.frequent || i == text.len() {
        return n.remove_slot(slot, arena);
    }
    let Some(c) = n.children.get_mut(&text[i]) else {
        return false;
    };
    let found = remove_on_path(c, text, i + 1, slot, arena);
    if c.prunable(arena) {
        n.children.remove(&text[i]);
    }
    found
}

fn try_collapse(n: &mut TextualNode, theta: usize, arena: &ListArena) -> bool {
    if !n.frequent || n.pins > 0 || n.subtree_count(arena) > theta {
        return false;
    }
    let mut all = Vec::new();
    n.collect(arena, &mut all);
    n.children.clear();
    n.frequent = false;
    n.list = QueryList::Own(all);
    true
}

/// A standalone text-only AKI over its own query table.
#[derive(Debug)]
pub struct AkiIndex {
    aki: Aki,
    fm: FrequenciesMap,
    arena: ListArena,
    texts: Vec<Vec<Keyword>>,
    ids: Vec<QueryId>,
    theta: usize,
}

impl AkiIndex {
    pub fn new(theta: usize) -> Result<Self> {
        if theta == 0 {
            return Err(Error::InvalidConfig("theta must be at least 1".into()));
        }
        Ok(AkiIndex {
            aki: Aki::new(),
            fm: FrequenciesMap::new(),
            arena: ListArena::new(),
            texts: Vec::new(),
            ids: Vec::new(),
            theta,
        })
    }

    pub fn insert(&mut self, q: &ContinuousQuery) -> Slot {
        let slot = self.texts.len() as Slot;
        self.texts.push(q.text.clone());
        self.ids.push(q.reported_id());
        self.fm.add(&q.text);
        let keep = |_: Slot| true;
        let mut ctx = AkiCtx {
            theta: self.theta,
            descent_trigger: None,
            fm: &self.fm,
            src: &self.texts,
            arena: &mut self.arena,
            keep: &keep,
        };
        self.aki.insert(slot, &mut ctx);
        slot
    }

    /// Removes a previously inserted slot.
    pub fn remove(&mut self, slot: Slot) -> Result<bool> {
        let text = self.texts[slot as usize].clone();
        let found = self.aki.remove(slot, &text, &mut self.arena);
        if found {
            self.fm.remove(&text)?;
        }
        Ok(found)
    }

    /// Slots whose text is contained in `keywords`, sorted.
    pub fn search(&self, keywords: &[Keyword]) -> (Vec<Slot>, SearchStats) {
        let mut stats = SearchStats::default();
        let (hits, _) = self.search_raw(keywords, &mut stats);
        let mut out: Vec<Slot> = hits
            .into_iter()
            .filter(|&(s, verify)| !verify || text_contains(keywords, &self.texts[s as usize]))
            .map(|(s, _)| s)
            .collect();
        out.sort_unstable();
        out.dedup();
        (out, stats)
    }

    /// Unverified candidates with their needs-text-check flag, plus the
    /// frequent keywords.
    pub fn search_raw(
        &self,
        keywords: &[Keyword],
        stats: &mut SearchStats,
    ) -> (Vec<(Slot, bool)>, Vec<Keyword>) {
        let mut hits = Vec::new();
        let freq = self
            .aki
            .search(keywords, &self.arena, stats, &mut |s, v| hits.push((s, v)));
        (hits, freq)
    }

    pub fn query_id(&self, slot: Slot) -> QueryId {
        self.ids[slot as usize]
    }

    pub fn text(&self, slot: Slot) -> &[Keyword] {
        &self.texts[slot as usize]
    }

    pub fn aki(&self) -> &Aki {
        &self.aki
    }

    pub fn arena(&self) -> &ListArena {
        &self.arena
    }

    pub fn frequencies(&self) -> &FrequenciesMap {
        &self.fm
    }

    pub fn theta(&self) -> usize {
        self.theta
    }

    pub fn node_count(&self) -> usize {
        self.aki.node_count()
    }

    pub fn demote_all(&mut self) -> usize {
        let n = self.aki.demote_all(self.theta, &self.arena);
        self.aki.prune_empty(&mut self.arena);
        n
    }

    pub fn audit(&self) -> std::result::Result<(), String> {
        self.aki.audit(self.theta, &self.texts, &self.arena)
    }
}
