//! Weighted quadrature nodes for measures in dimension two and up, and the
//! bucket grid used for nearest-center queries.

use rayon::prelude::*;

use super::{QuadMode, QuadratureSpec};
use crate::error::{invalid, Result};
use crate::measures::{GriddedDensity, Measure};

#[derive(Debug, Clone)]
pub(crate) struct NodeSet {
    pub dim: usize,
    pub coords: Vec<f64>,
    pub weights: Vec<f64>,
}

impl NodeSet {
    pub(crate) fn build(measure: &Measure, quad: &QuadratureSpec) -> Result<Self> {
        let dim = measure.dim();
        let mut set = NodeSet { dim, coords: Vec::new(), weights: Vec::new() };
        match quad.mode {
            QuadMode::Grid => set.push_grid(measure, quad.nodes, 1.0)?,
            QuadMode::MonteCarlo => {
                // atoms stay exact, everything else is sampled
                if let Measure::Discrete(m) = measure {
                    set.coords = m.coords().to_vec();
                    set.weights = m.masses().to_vec();
                } else {
                    set.coords = measure.sample_flat(quad.nodes, quad.seed)?;
                    set.weights = vec![measure.total_mass() / quad.nodes as f64; quad.nodes];
                }
            }
        }
        Ok(set)
    }

    fn push_grid(&mut self, measure: &Measure, per_axis: usize, weight: f64) -> Result<()> {
        match measure {
            Measure::Discrete(m) => {
                self.coords.extend_from_slice(m.coords());
                self.weights.extend(m.masses().iter().map(|w| w * weight));
            }
            Measure::Gridded(g) => self.push_gridded(g, per_axis, weight),
            Measure::Cantor(_) => {
                return Err(invalid!("the Cantor measure is one-dimensional and integrates exactly"));
            }
            Measure::Mixture(mix) => {
                for (w, c) in mix.components() {
                    self.push_grid(c, per_axis, weight * w)?;
                }
            }
        }
        Ok(())
    }

    /// Nodes at the centres of a `per_axis^d` grid over the density's box,
    /// each carrying the exact mass of its quadrature cell.
    fn push_gridded(&mut self, g: &GriddedDensity, per_axis: usize, weight: f64) {
        let d = g.dim();
        // per axis: for each quadrature slab, overlapping density cells and lengths
        let overlaps: Vec<Vec<Vec<(usize, f64)>>> = (0..d)
            .map(|axis| {
                let [a, b] = g.bounds()[axis];
                let h = (b - a) / per_axis as f64;
                (0..per_axis)
                    .map(|q| {
                        let (lo, hi) = (a + q as f64 * h, if q + 1 == per_axis { b } else { a + (q + 1) as f64 * h });
                        let res = g.resolution()[axis];
                        let w = g.cell_width(axis);
                        let first = (((lo - a) / w) as usize).min(res - 1);
                        let mut out = Vec::new();
                        for i in first.saturating_sub(1)..res {
                            let [cl, ch] = g.cell_interval(axis, i);
                            if cl >= hi {
                                break;
                            }
                            let len = ch.min(hi) - cl.max(lo);
                            if len > 0.0 {
                                out.push((i, len));
                            }
                        }
                        out
                    })
                    .collect()
            })
            .collect();
        let total = per_axis.pow(d as u32);
        self.coords.reserve(total * d);
        self.weights.reserve(total);
        let mut q = vec![0usize; d];
        let mut multi = vec![0usize; d];
        for _ in 0..total {
            let mut mass = 0.0;
            let mut cursor = vec![0usize; d];
            'cells: loop {
                let mut vol = 1.0;
                for axis in 0..d {
                    let (i, len) = overlaps[axis][q[axis]][cursor[axis]];
                    multi[axis] = i;
                    vol *= len;
                }
                mass += g.values()[g.flat_index(&multi)] * vol;
                let mut axis = d;
                loop {
                    if axis == 0 {
                        break 'cells;
                    }
                    axis -= 1;
                    cursor[axis] += 1;
                    if cursor[axis] < overlaps[axis][q[axis]].len() {
                        break;
                    }
                    cursor[axis] = 0;
                }
            }
            if mass > 0.0 {
                for axis in 0..d {
                    let [a, b] = g.bounds()[axis];
                    self.coords.push(a + (q[axis] as f64 + 0.5) * (b - a) / per_axis as f64);
                }
                self.weights.push(mass * weight);
            }
            for axis in (0..d).rev() {
                q[axis] += 1;
                if q[axis] < per_axis {
                    break;
                }
                q[axis] = 0;
            }
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.weights.len()
    }

    pub(crate) fn node(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Nearest center (lowest index on ties) and squared distance per node.
    pub(crate) fn assign(&self, centers: &[f64]) -> (Vec<u32>, Vec<f64>) {
        let index = CenterIndex::new(self.dim, centers);
        let chunk = 4096;
        let parts: Vec<(Vec<u32>, Vec<f64>)> = self
            .coords
            .par_chunks(chunk * self.dim)
            .map(|block| {
                let mut owner = Vec::with_capacity(chunk);
                let mut dist = Vec::with_capacity(chunk);
                for q in block.chunks_exact(self.dim) {
                    let (i, d2) = index.nearest(q);
                    owner.push(i as u32);
                    dist.push(d2);
                }
                (owner, dist)
            })
            .collect();
        let mut owner = Vec::with_capacity(self.len());
        let mut dist = Vec::with_capacity(self.len());
        for (o, d) in parts {
            owner.extend(o);
            dist.extend(d);
        }
        (owner, dist)
    }
}

/// Uniform bucket grid over the centers' bounding box.
pub(crate) struct CenterIndex<'a> {
    dim: usize,
    centers: &'a [f64],
    lo: Vec<f64>,
    width: Vec<f64>,
    res: Vec<usize>,
    starts: Vec<u32>,
    items: Vec<u32>,
    min_width: f64,
    brute: bool,
}

impl<'a> CenterIndex<'a> {
    pub(crate) fn new(dim: usize, centers: &'a [f64]) -> Self {
        let n = centers.len() / dim;
        let brute = dim > 3 || n <= 8;
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for c in centers.chunks_exact(dim) {
            for k in 0..dim {
                lo[k] = lo[k].min(c[k]);
                hi[k] = hi[k].max(c[k]);
            }
        }
        let extents: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| b - a).collect();
        let positive: Vec<f64> = extents.iter().copied().filter(|&e| e > 0.0).collect();
        let mut res = vec![1usize; dim];
        let mut width = vec![f64::INFINITY; dim];
        if !brute && !positive.is_empty() {
            let vol: f64 = positive.iter().product();
            let h = (vol / n as f64).powf(1.0 / positive.len() as f64);
            for k in 0..dim {
                if extents[k] > 0.0 {
                    res[k] = ((extents[k] / h).ceil() as usize).clamp(1, 4 * n);
                    width[k] = extents[k] / res[k] as f64;
                }
            }
        }
        let min_width = (0..dim).filter(|&k| res[k] > 1).map(|k| width[k]).fold(f64::INFINITY, f64::min);
        let cells: usize = res.iter().product();
        let mut counts = vec![0u32; cells + 1];
        let mut slot = Vec::with_capacity(n);
        for c in centers.chunks_exact(dim) {
            let cell = Self::cell_of(&lo, &width, &res, c);
            counts[cell + 1] += 1;
            slot.push(cell);
        }
        for i in 0..cells {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; n];
        for (i, &cell) in slot.iter().enumerate() {
            items[fill[cell] as usize] = i as u32;
            fill[cell] += 1;
        }
        Self { dim, centers, lo, width, res, starts: counts, items, min_width, brute }
    }

    fn axis_index(lo: f64, width: f64, res: usize, x: f64) -> usize {
        if res == 1 {
            return 0;
        }
        let t = ((x - lo) / width).floor();
        if t <= 0.0 {
            0
        } else {
            (t as usize).min(res - 1)
        }
    }

    fn cell_of(lo: &[f64], width: &[f64], res: &[usize], x: &[f64]) -> usize {
        let mut cell = 0;
        for k in 0..lo.len() {
            cell = cell * res[k] + Self::axis_index(lo[k], width[k], res[k], x[k]);
        }
        cell
    }

    fn center(&self, i: usize) -> &[f64] {
        &self.centers[i * self.dim..(i + 1) * self.dim]
    }

    fn consider(&self, q: &[f64], i: usize, best: &mut (usize, f64)) {
        let d2: f64 = self.center(i).iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
        if d2 < best.1 || (d2 == best.1 && i < best.0) {
            *best = (i, d2);
        }
    }

    fn scan_cell(&self, q: &[f64], cell: usize, best: &mut (usize, f64)) {
        for &i in &self.items[self.starts[cell] as usize..self.starts[cell + 1] as usize] {
            self.consider(q, i as usize, best);
        }
    }

    /// Visits the cells at Chebyshev distance `ring` from `home`.
    fn scan_shell(&self, q: &[f64], home: &[i64; 3], ring: i64, best: &mut (usize, f64)) {
        let res = |k: usize| self.res[k] as i64;
        match self.dim {
            1 => {
                for c in [home[0] - ring, home[0] + ring] {
                    if (0..res(0)).contains(&c) {
                        self.scan_cell(q, c as usize, best);
                    }
                    if ring == 0 {
                        break;
                    }
                }
            }
            2 => {
                for di in -ring..=ring {
                    let i = home[0] + di;
                    if !(0..res(0)).contains(&i) {
                        continue;
                    }
                    let row = i as usize * self.res[1];
                    if di.abs() == ring {
                        let (a, b) = ((home[1] - ring).max(0), (home[1] + ring).min(res(1) - 1));
                        for j in a..=b {
                            self.scan_cell(q, row + j as usize, best);
                        }
                    } else {
                        for j in [home[1] - ring, home[1] + ring] {
                            if (0..res(1)).contains(&j) {
                                self.scan_cell(q, row + j as usize, best);
                            }
                        }
                    }
                }
            }
            _ => {
                for di in -ring..=ring {
                    for dj in -ring..=ring {
                        for dk in -ring..=ring {
                            if di.abs().max(dj.abs()).max(dk.abs()) != ring {
                                continue;
                            }
                            let (i, j, k) = (home[0] + di, home[1] + dj, home[2] + dk);
                            if (0..res(0)).contains(&i) && (0..res(1)).contains(&j) && (0..res(2)).contains(&k) {
                                let cell = (i as usize * self.res[1] + j as usize) * self.res[2] + k as usize;
                                self.scan_cell(q, cell, best);
                            }
                        }
                    }
                }
            }
        }
    }

    pub(crate) fn nearest(&self, q: &[f64]) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        if self.brute {
            for i in 0..self.centers.len() / self.dim {
                self.consider(q, i, &mut best);
            }
            return best;
        }
        let mut home = [0i64; 3];
        // distance from q to the nearest face of its home cell along split axes
        let mut gap = f64::INFINITY;
        for k in 0..self.dim {
            let h = Self::axis_index(self.lo[k], self.width[k], self.res[k], q[k]);
            home[k] = h as i64;
            if self.res[k] > 1 {
                let a = self.lo[k] + h as f64 * self.width[k];
                gap = gap.min((q[k] - a).min(a + self.width[k] - q[k]).max(0.0));
            }
        }
        let max_ring = self.res.iter().map(|&r| r as i64 - 1).max().unwrap_or(0);
        for ring in 0..=max_ring {
            if ring > 0 {
                // every center in this ring or beyond is at least this far
                let bound = gap + (ring - 1) as f64 * self.min_width;
                if best.1 < bound * bound {
                    break;
                }
            }
            self.scan_shell(q, &home, ring, &mut best);
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn bucket_search_matches_brute_force() {
        let mut rng = crate::measures::rng_from_seed(17);
        for &(dim, n) in &[(2usize, 50usize), (3, 200), (2, 1000), (2, 9)] {
            let centers: Vec<f64> = (0..n * dim).map(|_| rng.gen::<f64>()).collect();
            let index = CenterIndex::new(dim, &centers);
            for _ in 0..2000 {
                let q: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() * 1.4 - 0.2).collect();
                let mut best = (usize::MAX, f64::INFINITY);
                for i in 0..n {
                    index.consider(&q, i, &mut best);
                }
                assert_eq!(index.nearest(&q), best);
            }
        }
    }

    #[test]
    fn grid_nodes_carry_exact_mass() {
        let g = GriddedDensity::new(vec![[0.0, 1.0], [0.0, 2.0]], vec![3, 5], (1..=15).map(f64::from).collect()).unwrap();
        let nodes = NodeSet::build(&g.clone().into(), &QuadratureSpec::grid(16)).unwrap();
        let total: f64 = nodes.weights.iter().sum();
        assert!((total - g.total_mass()).abs() < 1e-12 * g.total_mass());
    }
}
