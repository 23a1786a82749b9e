//! Cell-list broad phase with cell edges >= d.
//!
//! Particles in non-neighbouring cells are farther apart than d, so contact
//! prediction only needs the 27-cell neighbourhood. Boxes narrower than three
//! cells on any axis collapse to a single cell (all pairs are neighbours);
//! periodic single-cell grids still emit boundary crossings so that stale
//! minimum images are re-predicted and positions stay wrapped.

use crate::dynamics::geometry::DomainGeometry;
use crate::vec3::Vec3;

const NONE: i32 = -1;

pub(crate) struct CellGrid {
    pub dims: [usize; 3],
    edges: [f64; 3],
    periodic: bool,
    /// First particle in each cell, chained through `next`.
    head: Vec<i32>,
    next: Vec<i32>,
    prev: Vec<i32>,
    cell_of: Vec<usize>,
}

impl CellGrid {
    pub fn new(geometry: &DomainGeometry, d: f64, n_particles: usize) -> Self {
        let mut dims = [1usize; 3];
        for k in 0..3 {
            dims[k] = (geometry.lengths[k] / d).floor() as usize;
        }
        if dims.iter().any(|&n| n < 3) {
            dims = [1, 1, 1];
        }
        // keep the grid from dwarfing the particle count
        let cap = (4 * n_particles.max(64)) as f64;
        while (dims[0] * dims[1] * dims[2]) as f64 > cap && dims.iter().all(|&n| n >= 6) {
            for v in dims.iter_mut() {
                *v /= 2;
            }
        }
        let edges = [
            geometry.lengths[0] / dims[0] as f64,
            geometry.lengths[1] / dims[1] as f64,
            geometry.lengths[2] / dims[2] as f64,
        ];
        let cells = dims[0] * dims[1] * dims[2];
        CellGrid {
            dims,
            edges,
            periodic: geometry.is_periodic(),
            head: vec![NONE; cells],
            next: vec![NONE; n_particles],
            prev: vec![NONE; n_particles],
            cell_of: vec![usize::MAX; n_particles],
        }
    }

    pub fn single_cell(&self) -> bool {
        self.dims == [1, 1, 1]
    }

    pub fn cell_count(&self) -> usize {
        self.head.len()
    }

    pub fn coords_of(&self, cell: usize) -> [usize; 3] {
        let z = cell % self.dims[2];
        let y = (cell / self.dims[2]) % self.dims[1];
        let x = cell / (self.dims[2] * self.dims[1]);
        [x, y, z]
    }

    pub fn index_of(&self, c: [usize; 3]) -> usize {
        (c[0] * self.dims[1] + c[1]) * self.dims[2] + c[2]
    }

    pub fn cell_for_position(&self, r: Vec3) -> usize {
        let mut c = [0usize; 3];
        for k in 0..3 {
            let i = (r[k] / self.edges[k]).floor() as i64;
            c[k] = i.clamp(0, self.dims[k] as i64 - 1) as usize;
        }
        self.index_of(c)
    }

    pub fn cell_of(&self, i: usize) -> usize {
        self.cell_of[i]
    }

    pub fn insert(&mut self, i: usize, cell: usize) {
        let old_head = self.head[cell];
        self.head[cell] = i as i32;
        self.next[i] = old_head;
        self.prev[i] = NONE;
        if old_head != NONE {
            self.prev[old_head as usize] = i as i32;
        }
        self.cell_of[i] = cell;
    }

    pub fn remove(&mut self, i: usize) {
        let (p, n) = (self.prev[i], self.next[i]);
        if p != NONE {
            self.next[p as usize] = n;
        } else {
            self.head[self.cell_of[i]] = n;
        }
        if n != NONE {
            self.prev[n as usize] = p;
        }
        self.next[i] = NONE;
        self.prev[i] = NONE;
        self.cell_of[i] = usize::MAX;
    }

    pub fn move_to(&mut self, i: usize, cell: usize) {
        self.remove(i);
        self.insert(i, cell);
    }

    /// Neighbouring cell indices (including `cell` itself), deduplicated.
    pub fn neighbor_cells(&self, cell: usize) -> Vec<usize> {
        if self.single_cell() {
            return vec![0];
        }
        let c = self.coords_of(cell);
        let mut out = Vec::with_capacity(27);
        for dx in -1i64..=1 {
            for dy in -1i64..=1 {
                for dz in -1i64..=1 {
                    let mut q = [0usize; 3];
                    let mut ok = true;
                    for (k, delta) in [dx, dy, dz].iter().enumerate() {
                        let raw = c[k] as i64 + delta;
                        let n = self.dims[k] as i64;
                        let w = if self.periodic {
                            raw.rem_euclid(n)
                        } else if (0..n).contains(&raw) {
                            raw
                        } else {
                            ok = false;
                            break;
                        };
                        q[k] = w as usize;
                    }
                    if ok {
                        out.push(self.index_of(q));
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Visit every particle in the neighbourhood of `cell`.
    pub fn for_each_in_neighborhood(&self, cell: usize, mut f: impl FnMut(usize)) {
        for nc in self.neighbor_cells(cell) {
            let mut cur = self.head[nc];
            while cur != NONE {
                f(cur as usize);
                cur = self.next[cur as usize];
            }
        }
    }

    /// Visit every particle in one cell.
    pub fn for_each_in_cell(&self, cell: usize, mut f: impl FnMut(usize)) {
        let mut cur = self.head[cell];
        while cur != NONE {
            f(cur as usize);
            cur = self.next[cur as usize];
        }
    }

    /// Earliest boundary crossing of the tracked cell for a particle at `r`
    /// (valid at `t_now`) with velocity `v`. Returns (absolute time, axis,
    /// direction) with direction 0 = low face, 1 = high face.
    pub fn crossing_event(
        &self,
        cell: usize,
        r: Vec3,
        v: Vec3,
        t_now: f64,
    ) -> Option<(f64, usize, usize)> {
        let c = self.coords_of(cell);
        let mut best: Option<(f64, usize, usize)> = None;
        for k in 0..3 {
            if v[k] == 0.0 {
                continue;
            }
            let (plane, dir) = if v[k] > 0.0 {
                ((c[k] + 1) as f64 * self.edges[k], 1)
            } else {
                (c[k] as f64 * self.edges[k], 0)
            };
            let mut s = (plane - r[k]) / v[k];
            if s < 0.0 {
                // fp jitter can leave the position a hair outside the cell
                s = 0.0;
            }
            let t = t_now + s;
            if best.map_or(true, |(bt, _, _)| t < bt) {
                best = Some((t, k, dir));
            }
        }
        best
    }

    /// Apply a crossing: returns the new cell and whether the position must be
    /// shifted by ±L along `axis` (periodic wrap at the outermost face).
    pub fn crossed_cell(&self, cell: usize, axis: usize, dir: usize) -> (usize, f64) {
        let mut c = self.coords_of(cell);
        let n = self.dims[axis];
        let mut shift = 0.0;
        if dir == 1 {
            if c[axis] + 1 >= n {
                c[axis] = 0;
                shift = -1.0;
            } else {
                c[axis] += 1;
            }
        } else if c[axis] == 0 {
            c[axis] = n - 1;
            shift = 1.0;
        } else {
            c[axis] -= 1;
        }
        (self.index_of(c), shift)
    }
}

/// Visit every unordered pair with centre distance strictly below `d`,
/// using a transient grid over `positions`.
pub(crate) fn for_each_close_pair(
    positions: &[Vec3],
    d: f64,
    geometry: &DomainGeometry,
    mut f: impl FnMut(usize, usize, f64),
) {
    let n = positions.len();
    let d2 = d * d;
    let mut grid = CellGrid::new(geometry, d, n);
    if grid.single_cell() {
        for i in 0..n {
            for j in (i + 1)..n {
                let w = geometry.displacement(positions[i], positions[j]);
                let r2 = w.norm_sq();
                if r2 < d2 {
                    f(i, j, r2.sqrt());
                }
            }
        }
        return;
    }
    for (i, &r) in positions.iter().enumerate() {
        let cell = grid.cell_for_position(geometry.wrap(r));
        grid.insert(i, cell);
    }
    for i in 0..n {
        let mut hits: Vec<usize> = Vec::new();
        grid.for_each_in_neighborhood(grid.cell_of(i), |j| {
            if j > i {
                hits.push(j);
            }
        });
        for j in hits {
            let w = geometry.displacement(positions[i], positions[j]);
            let r2 = w.norm_sq();
            if r2 < d2 {
                f(i, j, r2.sqrt());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::geometry::BoundaryKind;

    #[test]
    fn narrow_box_collapses_to_single_cell() {
        let g = DomainGeometry::cube(BoundaryKind::PeriodicBox, 1.0).unwrap();
        let grid = CellGrid::new(&g, 0.4, 8);
        assert!(grid.single_cell());
    }

    #[test]
    fn neighborhood_covers_wrap() {
        let g = DomainGeometry::cube(BoundaryKind::PeriodicBox, 1.0).unwrap();
        let grid = CellGrid::new(&g, 0.2, 8); // 5x5x5
        let corner = grid.index_of([0, 0, 0]);
        let n = grid.neighbor_cells(corner);
        assert_eq!(n.len(), 27);
        assert!(n.contains(&grid.index_of([4, 4, 4])));
    }

    #[test]
    fn specular_corner_has_eight_neighbors() {
        let g = DomainGeometry::cube(BoundaryKind::SpecularBox, 1.0).unwrap();
        let grid = CellGrid::new(&g, 0.2, 8);
        let corner = grid.index_of([0, 0, 0]);
        assert_eq!(grid.neighbor_cells(corner).len(), 8);
    }

    #[test]
    fn close_pairs_match_brute_force() {
        use rand::Rng;
        let g = DomainGeometry::cube(BoundaryKind::PeriodicBox, 1.0).unwrap();
        let mut rng = crate::rng::stream(11, &[0]);
        let positions: Vec<Vec3> = (0..200)
            .map(|_| Vec3::new(rng.random(), rng.random(), rng.random()))
            .collect();
        let d = 0.11;
        let mut fast = Vec::new();
        for_each_close_pair(&positions, d, &g, |i, j, _| fast.push((i, j)));
        let mut brute = Vec::new();
        for i in 0..positions.len() {
            for j in (i + 1)..positions.len() {
                if g.distance(positions[i], positions[j]) < d {
                    brute.push((i, j));
                }
            }
        }
        fast.sort_unstable();
        brute.sort_unstable();
        assert_eq!(fast, brute);
    }

    #[test]
    fn crossing_and_wrap() {
        let g = DomainGeometry::cube(BoundaryKind::PeriodicBox, 1.0).unwrap();
        let mut grid = CellGrid::new(&g, 0.2, 2); // 5 cells per axis
        let r = Vec3::new(0.95, 0.5, 0.5);
        let cell = grid.cell_for_position(r);
        grid.insert(0, cell);
        let (t, axis, dir) = grid
            .crossing_event(cell, r, Vec3::new(1.0, 0.0, 0.0), 0.0)
            .unwrap();
        assert_eq!((axis, dir), (0, 1));
        assert!((t - 0.05).abs() < 1e-12);
        let (new_cell, shift) = grid.crossed_cell(cell, axis, dir);
        assert_eq!(grid.coords_of(new_cell)[0], 0);
        assert_eq!(shift, -1.0);
    }
}
