use std::collections::HashMap;

use crate::geometry::Vec3;

/// Uniform bucket grid for fixed-radius neighbour queries.
#[derive(Clone, Debug)]
pub struct CellList {
    cell: f64,
    buckets: HashMap<[i64; 3], Vec<usize>>,
}

impl CellList {
    pub fn new(points: &[Vec3], cell: f64) -> Self {
        let mut buckets: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets.entry(Self::key(p, cell)).or_default().push(i);
        }
        CellList { cell, buckets }
    }

    fn key(p: &Vec3, cell: f64) -> [i64; 3] {
        [
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        ]
    }

    /// Calls `f` with the index of every point in the buckets touching the
    /// ball of radius `cell` around `p`. Callers filter by exact distance.
    pub fn for_each_candidate<F: FnMut(usize)>(&self, p: &Vec3, mut f: F) {
        let k = Self::key(p, self.cell);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(b) = self.buckets.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        for &j in b {
                            f(j);
                        }
                    }
                }
            }
        }
    }
}
