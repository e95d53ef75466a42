use super::{strides_of, Cube, GridSpec};

/// Summed-area table over an n-dimensional grid: `O(2^n)` box sums.
#[derive(Clone, Debug)]
pub struct PrefixSum {
    dim: usize,
    strides: Vec<usize>,
    table: Vec<f64>,
}

impl PrefixSum {
    pub fn new(spec: &GridSpec, values: &[f64]) -> Self {
        assert_eq!(values.len(), spec.len());
        let dim = spec.dim;
        let n1 = spec.points_per_axis + 1;
        let dims = vec![n1; dim];
        let strides = strides_of(&dims);
        let mut table = vec![0.0; n1.pow(dim as u32)];
        let mut ix = vec![0; dim];
        for (flat, &v) in values.iter().enumerate() {
            spec.unravel(flat, &mut ix);
            let t: usize = ix.iter().zip(&strides).map(|(i, s)| (i + 1) * s).sum();
            table[t] = v;
        }
        for d in 0..dim {
            let s = strides[d];
            for t in 0..table.len() {
                if (t / s) % n1 != 0 {
                    table[t] += table[t - s];
                }
            }
        }
        Self {
            dim,
            strides,
            table,
        }
    }

    /// Sum over the half-open index box `lo..hi` (already inside the grid).
    #[inline]
    pub fn box_sum(&self, lo: &[usize], hi: &[usize]) -> f64 {
        let mut total = 0.0;
        for mask in 0..(1usize << self.dim) {
            let mut idx = 0;
            let mut lows = 0;
            for d in 0..self.dim {
                if mask >> d & 1 == 1 {
                    idx += hi[d] * self.strides[d];
                } else {
                    idx += lo[d] * self.strides[d];
                    lows += 1;
                }
            }
            if lows % 2 == 0 {
                total += self.table[idx];
            } else {
                total -= self.table[idx];
            }
        }
        total
    }

    /// Sum and clipped cell count of a cube, `None` if it misses the box.
    pub fn cube_sum(&self, spec: &GridSpec, cube: &Cube) -> Option<(f64, usize)> {
        let (lo, hi) = cube.clipped(spec)?;
        let count = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
        Some((self.box_sum(&lo, &hi), count))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{sum_box, GridFunction};

    #[test]
    fn matches_direct_sums_3d() {
        let spec = GridSpec::new(3, 6, 1.0).unwrap();
        let f = GridFunction::from_fn(spec, |x| (3.0 * x[0]).sin() + x[1] * x[2] + 2.0);
        let p = PrefixSum::new(&spec, f.samples());
        for (lo, hi) in [
            (vec![0, 0, 0], vec![6, 6, 6]),
            (vec![1, 2, 3], vec![4, 5, 6]),
            (vec![2, 2, 2], vec![3, 3, 3]),
        ] {
            let direct = sum_box(&f, &lo, &hi);
            assert!((p.box_sum(&lo, &hi) - direct).abs() < 1e-12 * direct.abs().max(1.0));
        }
    }
}
