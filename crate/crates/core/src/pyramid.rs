//! Grid-pyramid arithmetic and the sparse store of instantiated cells.
//!
//! Level 0 is the finest grid with `gran_max` cells per side; each level up
//! halves the granularity until the single top cell covers the unit square.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{Mbr, Point};

pub const DEFAULT_GRAN_MAX: u32 = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PyramidConfig {
    gran_max: u32,
    top_level: u32,
}

impl Default for PyramidConfig {
    fn default() -> Self {
        PyramidConfig::new(DEFAULT_GRAN_MAX).expect("default granularity is a power of two")
    }
}

impl PyramidConfig {
    pub fn new(gran_max: u32) -> Result<Self> {
        if gran_max < 2 || !gran_max.is_power_of_two() {
            return Err(Error::InvalidConfig(format!(
                "gran_max must be a power of two >= 2, got {gran_max}"
            )));
        }
        Ok(PyramidConfig {
            gran_max,
            top_level: gran_max.trailing_zeros(),
        })
    }

    pub fn gran_max(&self) -> u32 {
        self.gran_max
    }

    pub fn top_level(&self) -> u32 {
        self.top_level
    }

    pub fn side_len_min(&self) -> f64 {
        1.0 / self.gran_max as f64
    }

    fn check_level(&self, level: u32) -> Result<()> {
        if level > self.top_level {
            return Err(Error::InvalidLevel {
                level,
                top: self.top_level,
            });
        }
        Ok(())
    }

    /// Cells per dimension at `level`.
    pub fn gran(&self, level: u32) -> Result<u32> {
        self.check_level(level)?;
        Ok(self.gran_max >> level)
    }

    /// Side length of a cell at `level`.
    pub fn side_len(&self, level: u32) -> Result<f64> {
        self.check_level(level)?;
        Ok((1u64 << level) as f64 / self.gran_max as f64)
    }

    /// Grid coordinates of the cell containing `p`. A coordinate equal to 1.0
    /// falls into the last cell of its row or column.
    pub fn cell_coords(&self, p: Point, level: u32) -> Result<(u32, u32)> {
        let g = self.gran(level)?;
        if !p.in_space() {
            return Err(Error::OutOfSpace { x: p.x, y: p.y });
        }
        Ok((axis_cell(p.x, g), axis_cell(p.y, g)))
    }

    pub fn node_address(&self, level: u32, x: u32, y: u32) -> Result<u64> {
        let g = self.gran(level)?;
        if x >= g || y >= g {
            return Err(Error::InvalidCoords { level, x, y });
        }
        let gm = self.gran_max as u64;
        Ok(level as u64 * gm * gm + y as u64 * g as u64 + x as u64)
    }

    /// Inverse of [`node_address`](Self::node_address).
    pub fn decode_address(&self, address: u64) -> Result<(u32, u32, u32)> {
        let gm = self.gran_max as u64;
        let level = (address / (gm * gm)) as u32;
        let g = self.gran(level)? as u64;
        let rest = address % (gm * gm);
        let (y, x) = (rest / g, rest % g);
        if y >= g {
            return Err(Error::InvalidCoords {
                level,
                x: x as u32,
                y: y as u32,
            });
        }
        Ok((level, x as u32, y as u32))
    }

    /// The finest level whose cell side strictly exceeds `side`, or the top
    /// level when no level qualifies.
    pub fn min_level_for_side(&self, side: f64) -> u32 {
        (0..=self.top_level)
            .find(|&i| ((1u64 << i) as f64 / self.gran_max as f64) > side)
            .unwrap_or(self.top_level)
    }

    pub fn min_level(&self, mbr: &Mbr) -> u32 {
        self.min_level_for_side(crate::model::mbr_side_length(mbr))
    }

    /// Inclusive ranges of cell coordinates at `level` overlapping `mbr`.
    pub fn cell_range(&self, mbr: &Mbr, level: u32) -> Result<((u32, u32), (u32, u32))> {
        let g = self.gran(level)?;
        mbr.validate()?;
        Ok((
            (axis_cell(mbr.x_min, g), axis_cell(mbr.x_max, g)),
            (axis_cell(mbr.y_min, g), axis_cell(mbr.y_max, g)),
        ))
    }

    /// Coordinates of every cell at `level` overlapping `mbr`, row-major.
    pub fn cells_overlapping(&self, mbr: &Mbr, level: u32) -> Result<Vec<(u32, u32)>> {
        let ((x0, x1), (y0, y1)) = self.cell_range(mbr, level)?;
        let mut out = Vec::with_capacity(((x1 - x0 + 1) * (y1 - y0 + 1)) as usize);
        for y in y0..=y1 {
            for x in x0..=x1 {
                out.push((x, y));
            }
        }
        Ok(out)
    }

    /// The closed rectangle covered by a cell.
    pub fn cell_rect(&self, level: u32, x: u32, y: u32) -> Result<Mbr> {
        let s = self.side_len(level)?;
        let g = self.gran(level)?;
        if x >= g || y >= g {
            return Err(Error::InvalidCoords { level, x, y });
        }
        Ok(Mbr::new(
            x as f64 * s,
            y as f64 * s,
            (x + 1) as f64 * s,
            (y + 1) as f64 * s,
        ))
    }

    /// Whether cell `(x, y)` at `level` lies inside cell `(px, py)` at `level + 1`.
    pub fn is_child(x: u32, y: u32, px: u32, py: u32) -> bool {
        x / 2 == px && y / 2 == py
    }
}

fn axis_cell(v: f64, g: u32) -> u32 {
    // `g` is a power of two, so the product is exact.
    ((v * g as f64).floor() as u32).min(g - 1)
}

#[derive(Debug)]
pub struct PyramidNode<T> {
    pub address: u64,
    pub level: u32,
    pub x: u32,
    pub y: u32,
    pub aki: T,
}

/// Sparse map from node address to instantiated cell.
#[derive(Debug)]
pub struct NodeStore<T> {
    nodes: HashMap<u64, PyramidNode<T>>,
}

impl<T> Default for NodeStore<T> {
    fn default() -> Self {
        NodeStore {
            nodes: HashMap::new(),
        }
    }
}

impl<T> NodeStore<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, address: u64) -> Option<&PyramidNode<T>> {
        self.nodes.get(&address)
    }

    pub fn get_mut(&mut self, address: u64) -> Option<&mut PyramidNode<T>> {
        self.nodes.get_mut(&address)
    }

    /// Returns the node and whether it was created by this call.
    pub fn get_or_create(
        &mut self,
        cfg: &PyramidConfig,
        level: u32,
        x: u32,
        y: u32,
        make: impl FnOnce() -> T,
    ) -> Result<(&mut PyramidNode<T>, bool)> {
        let address = cfg.node_address(level, x, y)?;
        let mut created = false;
        let node = self.nodes.entry(address).or_insert_with(|| {
            created = true;
            PyramidNode {
                address,
                level,
                x,
                y,
                aki: make(),
            }
        });
        Ok((node, created))
    }

    /// Addresses of nodes at `level` whose cells overlap `mbr`. With `create`,
    /// missing nodes are instantiated; the second vector lists those.
    pub fn relevant_nodes(
        &mut self,
        cfg: &PyramidConfig,
        mbr: &Mbr,
        level: u32,
        create: bool,
        mut make: impl FnMut() -> T,
    ) -> Result<(Vec<u64>, Vec<u64>)> {
        let mut found = Vec::new();
        let mut created = Vec::new();
        for (x, y) in cfg.cells_overlapping(mbr, level)? {
            let address = cfg.node_address(level, x, y)?;
            if create {
                let (_, fresh) = self.get_or_create(cfg, level, x, y, &mut make)?;
                if fresh {
                    created.push(address);
                }
                found.push(address);
            } else if self.nodes.contains_key(&address) {
                found.push(address);
            }
        }
        Ok((found, created))
    }

    pub fn remove(&mut self, address: u64) -> Option<PyramidNode<T>> {
        self.nodes.remove(&address)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PyramidNode<T>> {
        self.nodes.values()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut PyramidNode<T>> {
        self.nodes.values_mut()
    }

    pub fn addresses(&self) -> Vec<u64> {
        let mut a: Vec<u64> = self.nodes.keys().copied().collect();
        a.sort_unstable();
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn cfg(g: u32) -> PyramidConfig {
        PyramidConfig::new(g).unwrap()
    }

    /// Closed-form min level from the binary exponent of `side / side_len_min`.
    fn min_level_closed_form(c: &PyramidConfig, side: f64) -> u32 {
        let ratio = side * c.gran_max() as f64;
        if ratio < 1.0 {
            return 0;
        }
        let exp = ((ratio.to_bits() >> 52) & 0x7ff) as i64 - 1023;
        ((exp + 1) as u32).min(c.top_level())
    }

    #[test]
    fn granularity_and_side() {
        let c = cfg(512);
        assert_eq!(c.gran(0).unwrap(), 512);
        assert_eq!(c.gran(9).unwrap(), 1);
        assert_eq!(cfg(2).gran(1).unwrap(), 1);
        assert_eq!(cfg(2).top_level(), 1);
        assert_eq!(c.side_len(0).unwrap(), 1.0 / 512.0);
        assert_eq!(c.side_len(9).unwrap(), 1.0);
        assert_eq!(cfg(4).side_len(1).unwrap(), 0.5);
        assert_eq!(c.gran(10), Err(Error::InvalidLevel { level: 10, top: 9 }));
        assert!(PyramidConfig::new(3).is_err());
        assert!(PyramidConfig::new(1).is_err());
    }

    #[test]
    fn coordinates() {
        let c = cfg(4);
        assert_eq!(c.cell_coords(Point::new(0.6, 0.2), 0).unwrap(), (2, 0));
        assert_eq!(c.cell_coords(Point::new(0.0, 0.0), 1).unwrap(), (0, 0));
        assert_eq!(
            cfg(512).cell_coords(Point::new(0.999, 0.999), 0).unwrap(),
            (511, 511)
        );
        assert_eq!(c.cell_coords(Point::new(1.0, 1.0), 0).unwrap(), (3, 3));
        assert!(c.cell_coords(Point::new(1.2, 0.0), 0).is_err());
    }

    #[test]
    fn addresses() {
        let c = cfg(2);
        assert_eq!(c.node_address(0, 1, 0).unwrap(), 1);
        assert_eq!(c.node_address(0, 0, 0).unwrap(), 0);
        assert_eq!(c.node_address(1, 0, 0).unwrap(), 4);
        assert!(c.node_address(1, 1, 0).is_err());
    }

    #[test]
    fn address_injectivity() {
        for g in [2u32, 4, 8, 16] {
            let c = cfg(g);
            let mut seen = HashSet::new();
            for level in 0..=c.top_level() {
                let n = c.gran(level).unwrap();
                for y in 0..n {
                    for x in 0..n {
                        let a = c.node_address(level, x, y).unwrap();
                        assert!(seen.insert(a));
                        assert_eq!(c.decode_address(a).unwrap(), (level, x, y));
                    }
                }
            }
        }
    }

    #[test]
    fn min_levels() {
        let c = cfg(512);
        assert_eq!(c.min_level_for_side(3.0 / 512.0), 2);
        assert_eq!(c.min_level_for_side(4.0 / 512.0), 3);
        assert_eq!(c.min_level_for_side(0.0), 0);
        assert_eq!(c.min_level_for_side(1.0), 9);
        assert_eq!(c.min_level_for_side(0.75), 9);
    }

    #[test]
    fn relevant_nodes_counts() {
        let c = cfg(8);
        let mut store: NodeStore<()> = NodeStore::new();
        let (all, created) = store
            .relevant_nodes(&c, &Mbr::unit(), 3, true, || ())
            .unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!(created.len(), 1);
        let inside = Mbr::new(0.01, 0.01, 0.02, 0.02);
        assert_eq!(
            store
                .relevant_nodes(&c, &inside, 0, false, || ())
                .unwrap()
                .0
                .len(),
            0
        );
        assert_eq!(
            store
                .relevant_nodes(&c, &inside, 0, true, || ())
                .unwrap()
                .0
                .len(),
            1
        );
    }

    #[test]
    fn store_lookup() {
        let c = cfg(4);
        let mut store: NodeStore<u8> = NodeStore::new();
        assert!(store.get(5).is_none());
        let a = {
            let (n, fresh) = store.get_or_create(&c, 0, 1, 1, || 7).unwrap();
            assert!(fresh);
            n.address
        };
        let (n, fresh) = store.get_or_create(&c, 0, 1, 1, || 9).unwrap();
        assert!(!fresh);
        assert_eq!(n.aki, 7);
        assert_eq!(store.len(), 1);
        assert_eq!(store.get(a).unwrap().x, 1);
    }

    proptest! {
        #[test]
        fn min_level_matches_closed_form(side in 0.0f64..1.0, gexp in 1u32..10) {
            let c = cfg(1 << gexp);
            prop_assert_eq!(c.min_level_for_side(side), min_level_closed_form(&c, side));
        }

        #[test]
        fn at_most_four_cells_at_min_level(
            x in 0.0f64..1.0, y in 0.0f64..1.0, w in 0.0f64..1.0, h in 0.0f64..1.0, gexp in 1u32..10,
        ) {
            let c = cfg(1 << gexp);
            let m = Mbr::new(x, y, (x + w).min(1.0), (y + h).min(1.0));
            let lmin = c.min_level(&m);
            for level in lmin..=c.top_level() {
                prop_assert!(c.cells_overlapping(&m, level).unwrap().len() <= 4);
            }
        }

        #[test]
        fn point_maps_to_containing_cell(x in 0.0f64..=1.0, y in 0.0f64..=1.0, gexp in 1u32..10) {
            let c = cfg(1 << gexp);
            let p = Point::new(x, y);
            for level in 0..=c.top_level() {
                let (cx, cy) = c.cell_coords(p, level).unwrap();
                let r = c.cell_rect(level, cx, cy).unwrap();
                prop_assert!(crate::model::mbr_contains(&r, p));
                let hits = c.cells_overlapping(&Mbr::from_point(p), level).unwrap();
                prop_assert_eq!(hits, vec![(cx, cy)]);
            }
        }

        #[test]
        fn levels_double(gexp in 1u32..12) {
            let c = cfg(1 << gexp);
            for i in 1..=c.top_level() {
                prop_assert_eq!(c.side_len(i).unwrap(), 2.0 * c.side_len(i - 1).unwrap());
                prop_assert_eq!(c.gran(i).unwrap() * 2, c.gran(i - 1).unwrap());
            }
            prop_assert_eq!(c.gran(c.top_level()).unwrap(), 1);
            prop_assert_eq!(c.side_len_min() * c.gran_max() as f64, 1.0);
        }
    }
}
