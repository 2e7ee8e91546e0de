//! Domain types shared by every index: keywords, points, rectangles, streamed
//! objects and continuous queries, plus the geometric and textual predicates
//! that define a match.
//!
//! Coordinates live in the normalized space `[0, 1]²`. Rectangles are closed on
//! every edge, so a point on a query's border is inside the query.

use std::borrow::Borrow;
use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use crate::error::{Error, Result};

/// An interned, lowercase keyword. Cloning is a reference-count bump.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Keyword(Arc<str>);

impl Keyword {
    pub fn new(s: &str) -> Self {
        Keyword(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl Deref for Keyword {
    type Target = str;
    fn deref(&self) -> &str {
        &self.0
    }
}

impl Borrow<str> for Keyword {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Keyword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl fmt::Display for Keyword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Keyword {
    fn from(s: &str) -> Self {
        Keyword::new(s)
    }
}

/// External identifier of a continuous query (or of a DNF parent query).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QueryId(pub u64);

impl fmt::Display for QueryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn in_space(&self) -> bool {
        in_unit(self.x) && in_unit(self.y)
    }
}

fn in_unit(v: f64) -> bool {
    (0.0..=1.0).contains(&v)
}

/// Minimum bounding rectangle, closed on all edges.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mbr {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Mbr {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Mbr {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }

    /// The whole indexed space.
    pub fn unit() -> Self {
        Mbr::new(0.0, 0.0, 1.0, 1.0)
    }

    pub fn from_point(p: Point) -> Self {
        Mbr::new(p.x, p.y, p.x, p.y)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn is_point(&self) -> bool {
        self.x_min == self.x_max && self.y_min == self.y_max
    }

    /// Checks ordering of the corners and containment in the indexed space.
    pub fn validate(&self) -> Result<()> {
        let ordered = self.x_min <= self.x_max && self.y_min <= self.y_max;
        let finite = [self.x_min, self.y_min, self.x_max, self.y_max]
            .iter()
            .all(|v| v.is_finite());
        if !ordered || !finite {
            return Err(Error::InvalidMbr {
                x_min: self.x_min,
                y_min: self.y_min,
                x_max: self.x_max,
                y_max: self.y_max,
            });
        }
        if !(in_unit(self.x_min)
            && in_unit(self.y_min)
            && in_unit(self.x_max)
            && in_unit(self.y_max))
        {
            return Err(Error::OutOfSpace {
                x: self.x_max,
                y: self.y_max,
            });
        }
        Ok(())
    }
}

/// True iff `p` lies in the closed rectangle `mbr`.
pub fn mbr_contains(mbr: &Mbr, p: Point) -> bool {
    mbr.x_min <= p.x && p.x <= mbr.x_max && mbr.y_min <= p.y && p.y <= mbr.y_max
}

/// True iff the closed rectangles share at least one point.
pub fn mbr_overlaps(a: &Mbr, b: &Mbr) -> bool {
    a.x_min <= b.x_max && b.x_min <= a.x_max && a.y_min <= b.y_max && b.y_min <= a.y_max
}

/// The larger of the two side lengths of the query rectangle.
pub fn query_side_length(q: &ContinuousQuery) -> f64 {
    mbr_side_length(&q.mbr)
}

pub fn mbr_side_length(mbr: &Mbr) -> f64 {
    mbr.width().max(mbr.height())
}

/// Lowercases, deduplicates and sorts raw keywords. Blank entries are dropped.
pub fn normalize_text<I, S>(raw: I) -> Result<Vec<Keyword>>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut words: Vec<String> = raw
        .into_iter()
        .map(|s| s.as_ref().trim().to_lowercase())
        .filter(|s| !s.is_empty())
        .collect();
    words.sort_unstable();
    words.dedup();
    if words.is_empty() {
        return Err(Error::EmptyText);
    }
    Ok(words.iter().map(|w| Keyword::new(w)).collect())
}

fn is_normalized(text: &[Keyword]) -> bool {
    !text.is_empty()
        && text.windows(2).all(|w| w[0] < w[1])
        && text
            .iter()
            .all(|k| !k.is_empty() && k.chars().all(|c| !c.is_uppercase()))
}

/// Subset test on two sorted, duplicate-free keyword lists.
pub fn text_contains(haystack: &[Keyword], needle: &[Keyword]) -> bool {
    if needle.len() > haystack.len() {
        return false;
    }
    let mut hay = haystack.iter();
    'outer: for k in needle {
        for h in hay.by_ref() {
            match h.cmp(k) {
                std::cmp::Ordering::Less => continue,
                std::cmp::Ordering::Equal => continue 'outer,
                std::cmp::Ordering::Greater => return false,
            }
        }
        return false;
    }
    true
}

/// A streamed data item. `rect` is set for rectangle objects; `loc` is then
/// the rectangle's lower corner and is not used for matching.
#[derive(Clone, Debug, PartialEq)]
pub struct SpatioTextualObject {
    pub oid: u64,
    pub loc: Point,
    pub rect: Option<Mbr>,
    pub text: Vec<Keyword>,
}

impl SpatioTextualObject {
    pub fn point<I, S>(oid: u64, x: f64, y: f64, raw: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let obj = SpatioTextualObject {
            oid,
            loc: Point::new(x, y),
            rect: None,
            text: normalize_text(raw)?,
        };
        obj.validate()?;
        Ok(obj)
    }

    pub fn rect<I, S>(oid: u64, rect: Mbr, raw: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let obj = SpatioTextualObject {
            oid,
            loc: Point::new(rect.x_min, rect.y_min),
            rect: Some(rect),
            text: normalize_text(raw)?,
        };
        obj.validate()?;
        Ok(obj)
    }

    pub fn validate(&self) -> Result<()> {
        if !is_normalized(&self.text) {
            return Err(Error::EmptyText);
        }
        match &self.rect {
            Some(r) => r.validate(),
            None if self.loc.in_space() => Ok(()),
            None => Err(Error::OutOfSpace {
                x: self.loc.x,
                y: self.loc.y,
            }),
        }
    }

    /// The object's extent as a rectangle (degenerate for point objects).
    pub fn extent(&self) -> Mbr {
        self.rect.unwrap_or_else(|| Mbr::from_point(self.loc))
    }
}

/// A standing subscription: one keyword conjunction inside a rectangle, live
/// until `t_exp`. Sub-queries produced from a DNF query carry the parent id.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuousQuery {
    pub qid: QueryId,
    pub mbr: Mbr,
    pub text: Vec<Keyword>,
    pub t_exp: u64,
    pub parent_qid: Option<QueryId>,
}

impl ContinuousQuery {
    pub fn new<I, S>(qid: u64, mbr: Mbr, raw: I, t_exp: u64) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let q = ContinuousQuery {
            qid: QueryId(qid),
            mbr,
            text: normalize_text(raw)?,
            t_exp,
            parent_qid: None,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !is_normalized(&self.text) {
            return Err(Error::EmptyText);
        }
        self.mbr.validate()
    }

    /// The identifier reported when this query matches.
    pub fn reported_id(&self) -> QueryId {
        self.parent_qid.unwrap_or(self.qid)
    }
}

/// A query whose textual condition is a disjunction of keyword conjunctions.
#[derive(Clone, Debug, PartialEq)]
pub struct DnfQuery {
    pub qid: QueryId,
    pub mbr: Mbr,
    pub clauses: Vec<Vec<Keyword>>,
    pub t_exp: u64,
}

impl DnfQuery {
    pub fn new<C, I, S>(qid: u64, mbr: Mbr, clauses: C, t_exp: u64) -> Result<Self>
    where
        C: IntoIterator<Item = I>,
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut normalized = Vec::new();
        for (i, clause) in clauses.into_iter().enumerate() {
            let text = normalize_text(clause).map_err(|_| Error::EmptyClause(i))?;
            if !normalized.contains(&text) {
                normalized.push(text);
            }
        }
        if normalized.is_empty() {
            return Err(Error::NoClauses);
        }
        mbr.validate()?;
        Ok(DnfQuery {
            qid: QueryId(qid),
            mbr,
            clauses: normalized,
            t_exp,
        })
    }
}

/// Splits a DNF query into one conjunctive sub-query per distinct clause.
/// Sub-query ids are assigned by the caller through `sub_id`.
pub fn dnf_expand(
    d: &DnfQuery,
    mut sub_id: impl FnMut(usize) -> u64,
) -> Result<Vec<ContinuousQuery>> {
    if d.clauses.is_empty() {
        return Err(Error::NoClauses);
    }
    let mut seen: Vec<&[Keyword]> = Vec::new();
    let mut out = Vec::with_capacity(d.clauses.len());
    for (i, clause) in d.clauses.iter().enumerate() {
        if !is_normalized(clause) {
            return Err(Error::EmptyClause(i));
        }
        if seen.contains(&clause.as_slice()) {
            continue;
        }
        seen.push(clause);
        out.push(ContinuousQuery {
            qid: QueryId(sub_id(out.len())),
            mbr: d.mbr,
            text: clause.clone(),
            t_exp: d.t_exp,
            parent_qid: Some(d.qid),
        });
    }
    Ok(out)
}

/// Query ids matched by one object, sorted and duplicate-free.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MatchResult {
    pub qids: Vec<QueryId>,
}

impl MatchResult {
    pub fn from_unsorted(mut qids: Vec<QueryId>) -> Self {
        qids.sort_unstable();
        qids.dedup();
        MatchResult { qids }
    }

    pub fn len(&self) -> usize {
        self.qids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qids.is_empty()
    }

    pub fn contains(&self, qid: QueryId) -> bool {
        self.qids.binary_search(&qid).is_ok()
    }

    pub fn ids(&self) -> Vec<u64> {
        self.qids.iter().map(|q| q.0).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kw(words: &[&str]) -> Vec<Keyword> {
        words.iter().map(|w| Keyword::new(w)).collect()
    }

    #[test]
    fn normalize_sorts_and_dedups() {
        assert_eq!(normalize_text(["b", "a", "a"]).unwrap(), kw(&["a", "b"]));
        assert_eq!(normalize_text(["K1"]).unwrap(), kw(&["k1"]));
        assert_eq!(normalize_text([""]), Err(Error::EmptyText));
        assert_eq!(normalize_text(Vec::<String>::new()), Err(Error::EmptyText));
    }

    #[test]
    fn containment_is_closed() {
        let unit = Mbr::new(0.0, 0.0, 1.0, 1.0);
        assert!(mbr_contains(&unit, Point::new(0.5, 0.5)));
        let small = Mbr::new(0.0, 0.0, 0.4, 0.4);
        assert!(mbr_contains(&small, Point::new(0.4, 0.4)));
        assert!(!mbr_contains(&small, Point::new(0.5, 0.1)));
    }

    #[test]
    fn overlap_is_closed() {
        let a = Mbr::new(0.0, 0.0, 0.5, 0.5);
        let b = Mbr::new(0.5, 0.5, 1.0, 1.0);
        assert!(mbr_overlaps(&a, &b));
        assert!(!mbr_overlaps(
            &Mbr::new(0.0, 0.0, 0.4, 0.4),
            &Mbr::new(0.6, 0.6, 1.0, 1.0)
        ));
        assert!(mbr_overlaps(&Mbr::new(0.2, 0.2, 0.3, 0.3), &Mbr::unit()));
    }

    #[test]
    fn side_length() {
        let q = |m: Mbr| ContinuousQuery::new(1, m, ["a"], 10).unwrap();
        let r = query_side_length(&q(Mbr::new(0.1, 0.2, 0.4, 0.6)));
        assert!((r - 0.4).abs() < 1e-12);
        assert_eq!(query_side_length(&q(Mbr::new(0.3, 0.3, 0.3, 0.3))), 0.0);
        assert_eq!(query_side_length(&q(Mbr::new(0.0, 0.0, 0.2, 0.2))), 0.2);
    }

    #[test]
    fn subset_on_sorted_lists() {
        assert!(text_contains(&kw(&["a", "b", "c"]), &kw(&["a", "c"])));
        assert!(!text_contains(&kw(&["a", "c"]), &kw(&["b"])));
        assert!(text_contains(&kw(&["a"]), &kw(&["a"])));
        assert!(!text_contains(&kw(&["a"]), &kw(&["a", "b"])));
        assert!(!text_contains(&kw(&["b", "c"]), &kw(&["d"])));
    }

    #[test]
    fn dnf_expansion() {
        let d = DnfQuery::new(
            7,
            Mbr::unit(),
            vec![vec!["k1", "k2"], vec!["k3", "k4"]],
            100,
        )
        .unwrap();
        let subs = dnf_expand(&d, |i| 1000 + i as u64).unwrap();
        assert_eq!(subs.len(), 2);
        assert_eq!(subs[0].text, kw(&["k1", "k2"]));
        assert_eq!(subs[1].text, kw(&["k3", "k4"]));
        assert!(subs
            .iter()
            .all(|s| s.parent_qid == Some(QueryId(7)) && s.t_exp == 100 && s.mbr == d.mbr));

        let single = DnfQuery::new(8, Mbr::unit(), vec![vec!["x"]], 5).unwrap();
        let subs = dnf_expand(&single, |_| 9).unwrap();
        assert_eq!(subs.len(), 1);
        assert_eq!(subs[0].text, kw(&["x"]));

        let dup = DnfQuery::new(9, Mbr::unit(), vec![vec!["k1"], vec!["K1"]], 5).unwrap();
        assert_eq!(dnf_expand(&dup, |i| i as u64).unwrap().len(), 1);

        assert_eq!(
            DnfQuery::new(10, Mbr::unit(), vec![vec!["a"], vec![""]], 5),
            Err(Error::EmptyClause(1))
        );
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(ContinuousQuery::new(1, Mbr::new(0.5, 0.0, 0.4, 0.1), ["a"], 1).is_err());
        assert!(ContinuousQuery::new(1, Mbr::new(0.0, 0.0, 1.5, 0.1), ["a"], 1).is_err());
        assert!(SpatioTextualObject::point(1, -0.1, 0.0, ["a"]).is_err());
    }
}
