//! Sliding-window scans: every cube of a fixed side that contains a cell is
//! enumerated by its corner, averages come from a summed-area table, and the
//! max over corners is a separable window max.

use crate::grid::{window_max, GridSpec, PrefixSum};
use crate::par;

/// For side `k` (cells), the value attached to each corner `c` in the
/// extended range `[-(k-1), N-1]^n`, then maximised over the `k^n` corners
/// whose cube contains each cell. `value(e, corner, lo, hi)` receives the
/// flat extended index, the unclipped corner and the clipped half-open box.
pub(crate) fn corner_scan<F>(spec: &GridSpec, k: usize, value: F) -> Vec<f64>
where
    F: Fn(usize, &[isize], &[usize], &[usize]) -> f64 + Sync + Send,
{
    let n = spec.points_per_axis;
    let dim = spec.dim;
    let m = n + k - 1;
    let total = m.pow(dim as u32);
    let vals = par::map_range(total, |e| {
        let mut corner = [0isize; crate::grid::MAX_DIM];
        let mut lo = [0usize; crate::grid::MAX_DIM];
        let mut hi = [0usize; crate::grid::MAX_DIM];
        let mut rest = e;
        for d in (0..dim).rev() {
            let c = (rest % m) as isize - (k as isize - 1);
            rest /= m;
            corner[d] = c;
            lo[d] = c.max(0) as usize;
            hi[d] = ((c + k as isize) as usize).min(n);
        }
        value(e, &corner[..dim], &lo[..dim], &hi[..dim])
    });
    window_max(vals, &vec![m; dim], k).0
}

/// Mean of the tabulated field over the clipped box.
#[inline]
pub(crate) fn box_mean(t: &PrefixSum, lo: &[usize], hi: &[usize]) -> f64 {
    let count: usize = lo.iter().zip(hi).map(|(a, b)| b - a).product();
    t.box_sum(lo, hi) / count as f64
}

/// Mean oscillation `|Q|^{-1} ∫_Q |f − f_Q|` over a clipped box, by direct
/// summation.
pub(crate) fn box_oscillation(f: &crate::grid::GridFunction, t: &PrefixSum, lo: &[usize], hi: &[usize]) -> f64 {
    let mean = box_mean(t, lo, hi);
    let count: usize = lo.iter().zip(hi).map(|(a, b)| b - a).product();
    crate::grid::sum_box_map(f, lo, hi, |v| (v - mean).abs()) / count as f64
}
