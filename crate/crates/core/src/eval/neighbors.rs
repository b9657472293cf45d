//! Uniform-grid spatial hash for nearest-neighbor and radius queries.

use std::collections::HashMap;

use crate::Point3;

/// Beyond this many rings, a nearest query falls back to a linear scan.
const MAX_RINGS: i64 = 24;

type Cell = [i64; 3];

#[derive(Debug, Clone)]
pub struct SpatialHash<'a> {
    points: &'a [Point3],
    cell_size: f64,
    cells: HashMap<Cell, Vec<usize>>,
    lo: Cell,
    hi: Cell,
}

impl<'a> SpatialHash<'a> {
    /// `cell_size` must be positive and finite.
    pub fn new(points: &'a [Point3], cell_size: f64) -> Self {
        assert!(cell_size > 0.0 && cell_size.is_finite(), "cell size must be positive");
        let mut cells: HashMap<Cell, Vec<usize>> = HashMap::new();
        let mut lo = [i64::MAX; 3];
        let mut hi = [i64::MIN; 3];
        for (i, p) in points.iter().enumerate() {
            let c = cell_of(p, cell_size);
            for a in 0..3 {
                lo[a] = lo[a].min(c[a]);
                hi[a] = hi[a].max(c[a]);
            }
            cells.entry(c).or_default().push(i);
        }
        Self {
            points,
            cell_size,
            cells,
            lo,
            hi,
        }
    }

    pub fn points(&self) -> &'a [Point3] {
        self.points
    }

    /// Is some indexed point strictly closer than `radius` to `q`?
    /// Requires `radius <= cell_size`.
    pub fn any_within(&self, q: &Point3, radius: f64) -> bool {
        debug_assert!(radius <= self.cell_size);
        let r2 = radius * radius;
        let c = cell_of(q, self.cell_size);
        for dz in -1..=1 {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if let Some(ids) = self.cells.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                        if ids.iter().any(|&i| (self.points[i] - q).norm_squared() < r2) {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }

    /// Nearest indexed point as `(index, squared distance)`; the lowest index
    /// wins exact ties. `None` when the index is empty.
    pub fn nearest(&self, q: &Point3) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let c = cell_of(q, self.cell_size);
        // farthest ring that can still contain points
        let reach = (0..3)
            .map(|a| (c[a] - self.lo[a]).abs().max((self.hi[a] - c[a]).abs()))
            .max()
            .unwrap_or(0);
        if reach > MAX_RINGS {
            return nearest_linear(self.points, q);
        }
        let mut best: Option<(usize, f64)> = None;
        for r in 0..=reach {
            self.visit_ring(c, r, |i| {
                let d = (self.points[i] - q).norm_squared();
                if best.is_none_or(|(bi, bd)| d < bd || (d == bd && i < bi)) {
                    best = Some((i, d));
                }
            });
            if let Some((_, bd)) = best {
                let bound = r as f64 * self.cell_size;
                if bd < bound * bound {
                    break;
                }
            }
        }
        best
    }

    fn visit_ring(&self, c: Cell, r: i64, mut f: impl FnMut(usize)) {
        for dz in -r..=r {
            for dy in -r..=r {
                for dx in -r..=r {
                    if dx.abs().max(dy.abs()).max(dz.abs()) != r {
                        continue;
                    }
                    if let Some(ids) = self.cells.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                        ids.iter().for_each(|&i| f(i));
                    }
                }
            }
        }
    }
}

fn cell_of(p: &Point3, size: f64) -> Cell {
    [
        (p.x / size).floor() as i64,
        (p.y / size).floor() as i64,
        (p.z / size).floor() as i64,
    ]
}

pub(crate) fn nearest_linear(points: &[Point3], q: &Point3) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in points.iter().enumerate() {
        let d = (p - q).norm_squared();
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<Point3> {
        (0..n)
            .map(|_| {
                Point3::new(
                    rng.random_range(-scale..scale),
                    rng.random_range(-scale..scale),
                    rng.random_range(-scale..scale),
                )
            })
            .collect()
    }

    #[test]
    fn nearest_matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for cell in [0.01, 0.05, 0.3] {
            let pts = cloud(&mut rng, 400, 0.2);
            let hash = SpatialHash::new(&pts, cell);
            for q in cloud(&mut rng, 200, 0.4) {
                assert_eq!(hash.nearest(&q), nearest_linear(&pts, &q));
            }
        }
    }

    #[test]
    fn radius_query_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts = cloud(&mut rng, 300, 0.1);
        let tau = 0.015;
        let hash = SpatialHash::new(&pts, tau);
        for q in cloud(&mut rng, 300, 0.12) {
            let want = pts.iter().any(|p| (p - q).norm_squared() < tau * tau);
            assert_eq!(hash.any_within(&q, tau), want);
        }
    }

    #[test]
    fn far_queries_and_empty() {
        let pts = vec![Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0)];
        let hash = SpatialHash::new(&pts, 0.01);
        assert_eq!(hash.nearest(&Point3::new(100.0, 0.0, 0.0)).unwrap().0, 1);
        assert_eq!(SpatialHash::new(&[], 0.1).nearest(&Point3::origin()), None);
    }
}
