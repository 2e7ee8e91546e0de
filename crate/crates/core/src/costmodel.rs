//! Analytical matching-cost model and expected query replication.
//!
//! Trie levels are numbered from 1 at the top, so `mp_okt(1, s, ..)` is the
//! cost of a full search.

use std::collections::HashMap;

use crate::baselines::Okt;
use crate::error::{Error, Result};
use crate::model::Keyword;

#[derive(Clone, Debug, Default)]
pub struct CostParams {
    pub posting_lengths: HashMap<Keyword, u64>,
    /// Probability that a keyword has a child node at a given trie level.
    pub alpha: HashMap<(u32, Keyword), f64>,
    pub theta: usize,
    pub max_depth: u32,
    pub gran_max: u32,
}

impl CostParams {
    pub fn alpha(&self, level: u32, k: &Keyword) -> f64 {
        self.alpha.get(&(level, k.clone())).copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_depth < 1 {
            return Err(Error::InvalidConfig("max_depth must be at least 1".into()));
        }
        if let Some(((l, k), a)) = self.alpha.iter().find(|(_, a)| !(0.0..=1.0).contains(*a)) {
            return Err(Error::InvalidConfig(format!(
                "alpha({l}, {k}) = {a} outside [0, 1]"
            )));
        }
        Ok(())
    }
}

/// Entries visited by an inverted-list search over `s`.
pub fn mp_ril(s: &[Keyword], posting_lengths: &HashMap<Keyword, u64>) -> Result<u64> {
    s.iter()
        .map(|k| {
            posting_lengths
                .get(k)
                .copied()
                .ok_or_else(|| Error::UnknownKeyword(k.to_string()))
        })
        .sum()
}

/// Expected lookups of a trie search for `s` starting at trie level `i`.
pub fn mp_okt(i: u32, s: &[Keyword], params: &CostParams) -> f64 {
    let mut memo = HashMap::new();
    okt_rec(i, s, 0, params, &mut memo)
}

fn okt_rec(
    i: u32,
    s: &[Keyword],
    from: usize,
    params: &CostParams,
    memo: &mut HashMap<(u32, usize), f64>,
) -> f64 {
    let rest = s.len() - from;
    if rest == 0 || i >= params.max_depth {
        return rest as f64;
    }
    if let Some(&v) = memo.get(&(i, from)) {
        return v;
    }
    let mut total = rest as f64;
    for j in from..s.len() {
        let a = params.alpha(i, &s[j]);
        if a > 0.0 {
            total += a * okt_rec(i + 1, s, j + 1, params, memo);
        }
    }
    memo.insert((i, from), total);
    total
}

/// Expected cost of an AKI search: bounded posting lists when infrequent,
/// the trie recurrence when frequent.
pub fn mp_aki(i: u32, s: &[Keyword], params: &CostParams, frequent: bool) -> f64 {
    if frequent {
        mp_okt(i, s, params)
    } else {
        (s.len() * params.theta) as f64
    }
}

/// Largest threshold for which infrequent nodes cost no more than a trie.
pub fn theta_bound(mp_okt_value: f64, s_size: usize) -> Result<f64> {
    if s_size == 0 {
        return Err(Error::DivideByZero);
    }
    Ok(mp_okt_value / s_size as f64)
}

/// Worst case over the whole pyramid: one AKI search per level.
pub fn mp_fast(s: &[Keyword], params: &CostParams, frequent: bool) -> Result<f64> {
    if params.gran_max < 2 || !params.gran_max.is_power_of_two() {
        return Err(Error::InvalidConfig(format!(
            "gran_max {} is not a power of two",
            params.gran_max
        )));
    }
    Ok(params.gran_max.trailing_zeros() as f64 * mp_aki(1, s, params, frequent))
}

/// Expected number of cells covering a query `i` levels above its lowest
/// admissible level, with the side drawn uniformly from (1/2, 1] of a cell.
pub fn expected_replication(i: u32) -> f64 {
    let p = 2f64.powi(i as i32);
    let anti = |r: f64| (p + r).powi(3) / 3.0;
    2.0 / (p * p) * (anti(1.0) - anti(0.5))
}

/// Mean of [`expected_replication`] over the first `n` levels.
pub fn expected_replication_uniform(n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::DivideByZero);
    }
    Ok((0..n).map(expected_replication).sum::<f64>() / n as f64)
}

/// Probabilities that the query corner falls in the one-, two- (twice) and
/// four-cell regions of its cell, for side `r` of a unit cell.
pub fn region_probabilities(r: f64) -> [f64; 4] {
    [(1.0 - r) * (1.0 - r), r * (1.0 - r), r * (1.0 - r), r * r]
}

/// Replication expected for side `r`, weighting the regions by their cell counts.
pub fn region_replication(r: f64) -> f64 {
    let p = region_probabilities(r);
    p[0] + 2.0 * p[1] + 2.0 * p[2] + 4.0 * p[3]
}

/// Estimates per-level keyword presence from lookups made while searching
/// `probes` in `okt`: hits divided by lookups for each (level, keyword).
pub fn estimate_alpha(okt: &Okt, probes: &[Vec<Keyword>]) -> HashMap<(u32, Keyword), f64> {
    let mut counts: HashMap<(u32, Keyword), (u64, u64)> = HashMap::new();
    for s in probes {
        okt.search_observed(s, &mut |level, k, found| {
            let e = counts.entry((level, k.clone())).or_insert((0, 0));
            e.1 += 1;
            if found {
                e.0 += 1;
            }
        });
    }
    counts
        .into_iter()
        .map(|(key, (hit, total))| (key, hit as f64 / total as f64))
        .collect()
}
