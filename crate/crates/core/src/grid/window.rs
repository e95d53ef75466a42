//! Separable sliding-window maxima (van Herk / Gil-Werman) over n-d arrays.

use crate::par;

/// Max over all windows `x .. x + w` (every axis) of a row-major array with
/// shape `dims`. Output shape is `dims[d] - w + 1` on every axis.
pub(crate) fn window_max(mut data: Vec<f64>, dims: &[usize], w: usize) -> (Vec<f64>, Vec<usize>) {
    let mut dims = dims.to_vec();
    if w <= 1 {
        return (data, dims);
    }
    // last axis first: more independent lines while the array is largest
    for axis in (0..dims.len()).rev() {
        data = window_max_axis(&data, &dims, axis, w);
        dims[axis] -= w - 1;
    }
    (data, dims)
}

/// Pads a field of shape `n^dim` with `pad` by `w - 1` on each side, then
/// takes window maxima. Result index `e` along an axis corresponds to the
/// window of cells `e - (w-1) .. e + 1`, i.e. cube corner `e - (w - 1)`.
pub(crate) fn window_max_padded(field: &[f64], n: usize, dim: usize, w: usize, pad: f64) -> Vec<f64> {
    let m = n + 2 * (w - 1);
    let total = m.pow(dim as u32);
    let mut padded = vec![pad; total];
    let mut ix = vec![0usize; dim];
    for (flat, &v) in field.iter().enumerate() {
        let mut f = flat;
        for d in (0..dim).rev() {
            ix[d] = f % n;
            f /= n;
        }
        let t = ix.iter().fold(0, |acc, &i| acc * m + i + w - 1);
        padded[t] = v;
    }
    window_max(padded, &vec![m; dim], w).0
}

fn window_max_axis(data: &[f64], dims: &[usize], axis: usize, w: usize) -> Vec<f64> {
    let outer: usize = dims[..axis].iter().product();
    let len = dims[axis];
    let inner: usize = dims[axis + 1..].iter().product();
    assert!(len >= w, "window longer than axis");
    let out_len = len - w + 1;
    let mut out = vec![0.0; outer * out_len * inner];
    par::for_each_chunk_mut(&mut out, out_len * inner, |o, chunk| {
        let src = &data[o * len * inner..(o + 1) * len * inner];
        let mut fwd = vec![0.0; len * inner];
        let mut bwd = vec![0.0; len * inner];
        for t in 0..len {
            let row = &src[t * inner..(t + 1) * inner];
            if t % w == 0 {
                fwd[t * inner..(t + 1) * inner].copy_from_slice(row);
            } else {
                for i in 0..inner {
                    fwd[t * inner + i] = fwd[(t - 1) * inner + i].max(row[i]);
                }
            }
        }
        for t in (0..len).rev() {
            let row = &src[t * inner..(t + 1) * inner];
            if t % w == w - 1 || t == len - 1 {
                bwd[t * inner..(t + 1) * inner].copy_from_slice(row);
            } else {
                for i in 0..inner {
                    bwd[t * inner + i] = bwd[(t + 1) * inner + i].max(row[i]);
                }
            }
        }
        for t in 0..out_len {
            for i in 0..inner {
                chunk[t * inner + i] = bwd[t * inner + i].max(fwd[(t + w - 1) * inner + i]);
            }
        }
    });
    out
}
