use super::{Cube, GridSpec};

/// Nested dyadic partitions of the box: level `j` has `2^j` cubes per axis of
/// side `2L·2^{-j}`. The depth is limited by the powers of two dividing `N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DyadicLattice {
    spec: GridSpec,
    depth: usize,
}

impl DyadicLattice {
    /// Deepest lattice the grid supports.
    pub fn new(spec: GridSpec) -> Self {
        Self {
            spec,
            depth: spec.points_per_axis.trailing_zeros() as usize,
        }
    }

    pub fn with_depth(spec: GridSpec, depth: usize) -> crate::Result<Self> {
        let max = Self::new(spec).depth;
        if depth > max {
            return Err(crate::error::invalid(
                "depth",
                format!("grid with N={} supports depth <= {max}", spec.points_per_axis),
            ));
        }
        Ok(Self { spec, depth })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Cells per axis of a level-`j` cube.
    pub fn block(&self, j: usize) -> usize {
        self.spec.points_per_axis >> j
    }

    pub fn per_axis(&self, j: usize) -> usize {
        1 << j
    }

    pub fn count(&self, j: usize) -> usize {
        self.per_axis(j).pow(self.spec.dim as u32)
    }

    pub fn side(&self, j: usize) -> f64 {
        2.0 * self.spec.half_width / self.per_axis(j) as f64
    }

    pub fn unravel(&self, j: usize, mut k: usize) -> Vec<usize> {
        let m = self.per_axis(j);
        let mut out = vec![0; self.spec.dim];
        for d in (0..self.spec.dim).rev() {
            out[d] = k % m;
            k /= m;
        }
        out
    }

    pub fn ravel(&self, j: usize, ix: &[usize]) -> usize {
        let m = self.per_axis(j);
        ix.iter().fold(0, |acc, &i| acc * m + i)
    }

    pub fn cube(&self, j: usize, k: usize) -> Cube {
        let b = self.block(j);
        Cube::new(
            self.unravel(j, k).iter().map(|&i| (i * b) as isize).collect(),
            b,
        )
    }

    pub fn cubes_at(&self, j: usize) -> Vec<Cube> {
        (0..self.count(j)).map(|k| self.cube(j, k)).collect()
    }

    /// Index at level `j` of the cube containing cell `ix`.
    pub fn containing(&self, j: usize, ix: &[usize]) -> usize {
        let b = self.block(j);
        let m = self.per_axis(j);
        ix.iter().fold(0, |acc, &i| acc * m + i / b)
    }

    pub fn parent(&self, j: usize, k: usize) -> usize {
        assert!(j > 0);
        let ix: Vec<usize> = self.unravel(j, k).iter().map(|i| i / 2).collect();
        self.ravel(j - 1, &ix)
    }

    pub fn children(&self, j: usize, k: usize) -> Vec<usize> {
        let ix = self.unravel(j, k);
        let dim = self.spec.dim;
        (0..1usize << dim)
            .map(|mask| {
                let c: Vec<usize> = (0..dim).map(|d| 2 * ix[d] + (mask >> d & 1)).collect();
                self.ravel(j + 1, &c)
            })
            .collect()
    }
}

/// Per-level sums of a nonnegative field (and optionally maxima of a second
/// field) over every dyadic cube, aggregated bottom-up.
#[derive(Clone, Debug)]
pub struct DyadicTree {
    lattice: DyadicLattice,
    sums: Vec<Vec<f64>>,
    maxima: Option<Vec<Vec<f64>>>,
}

impl DyadicTree {
    pub fn build(lattice: DyadicLattice, values: &[f64], max_of: Option<&[f64]>) -> Self {
        let spec = lattice.spec;
        let depth = lattice.depth;
        let mut fine = vec![0.0; lattice.count(depth)];
        let mut fine_max = max_of.map(|_| vec![f64::NEG_INFINITY; lattice.count(depth)]);
        let mut ix = vec![0; spec.dim];
        for (flat, &v) in values.iter().enumerate() {
            spec.unravel(flat, &mut ix);
            let k = lattice.containing(depth, &ix);
            fine[k] += v;
            if let (Some(m), Some(src)) = (fine_max.as_mut(), max_of) {
                m[k] = m[k].max(src[flat]);
            }
        }
        let mut sums = vec![fine];
        let mut maxima = fine_max.map(|m| vec![m]);
        for j in (0..depth).rev() {
            let child = sums.last().unwrap();
            let mut s = vec![0.0; lattice.count(j)];
            for (k, &v) in child.iter().enumerate() {
                s[lattice.parent(j + 1, k)] += v;
            }
            if let Some(ms) = maxima.as_mut() {
                let cm = ms.last().unwrap();
                let mut m = vec![f64::NEG_INFINITY; lattice.count(j)];
                for (k, &v) in cm.iter().enumerate() {
                    let p = lattice.parent(j + 1, k);
                    m[p] = m[p].max(v);
                }
                ms.push(m);
            }
            sums.push(s);
        }
        sums.reverse();
        if let Some(ms) = maxima.as_mut() {
            ms.reverse();
        }
        Self {
            lattice,
            sums,
            maxima,
        }
    }

    pub fn lattice(&self) -> &DyadicLattice {
        &self.lattice
    }

    /// Sum of samples over cube `k` of level `j`.
    pub fn sum(&self, j: usize, k: usize) -> f64 {
        self.sums[j][k]
    }

    pub fn max(&self, j: usize, k: usize) -> Option<f64> {
        self.maxima.as_ref().map(|m| m[j][k])
    }

    /// Plain mean of the samples over cube `k` of level `j`.
    pub fn mean(&self, j: usize, k: usize) -> f64 {
        self.sums[j][k] / (self.lattice.block(j).pow(self.lattice.spec.dim as u32)) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels_partition_the_box() {
        let spec = GridSpec::new(2, 24, 1.5).unwrap();
        let lat = DyadicLattice::new(spec);
        assert_eq!(lat.depth(), 3);
        for j in 0..=lat.depth() {
            let vol: f64 = lat
                .cubes_at(j)
                .iter()
                .map(|q| q.side(&spec).powi(2))
                .sum();
            assert!((vol - spec.domain_volume()).abs() < 1e-12);
            assert_eq!(lat.cubes_at(j).iter().map(|q| q.clipped_cells(&spec)).sum::<usize>(), spec.len());
        }
    }

    #[test]
    fn tree_sums_agree_across_levels() {
        let spec = GridSpec::new(3, 8, 1.0).unwrap();
        let lat = DyadicLattice::new(spec);
        let vals: Vec<f64> = (0..spec.len()).map(|i| (i % 7) as f64).collect();
        let t = DyadicTree::build(lat, &vals, Some(&vals));
        let total: f64 = vals.iter().sum();
        assert_eq!(t.sum(0, 0), total);
        assert_eq!(t.max(0, 0), Some(6.0));
        for j in 0..lat.depth() {
            for k in 0..lat.count(j) {
                let s: f64 = lat.children(j, k).iter().map(|&c| t.sum(j + 1, c)).sum();
                assert!((s - t.sum(j, k)).abs() < 1e-9);
                for c in lat.children(j, k) {
                    assert_eq!(lat.parent(j + 1, c), k);
                }
            }
        }
    }
}
