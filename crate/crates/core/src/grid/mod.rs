//! Uniform cell-centred lattices on the box `[-L, L]^n`, grid functions, cubes,
//! dyadic lattices, Riemann-sum integration and the (weighted, weak) norms.
//!
//! Functions are piecewise constant on cells and vanish outside the box.
//! Cubes are stored in cell units and clipped to the box; averages use the
//! clipped volume.

mod cube;
mod dyadic;
pub mod gfd;
mod prefix;
mod window;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::weights::Weight;

pub use cube::{Cube, CubeDescriptor, CubeFamily, RadiiLadder};
pub use dyadic::{DyadicLattice, DyadicTree};
pub use prefix::PrefixSum;
pub(crate) use window::{window_max, window_max_padded};

/// Largest supported dimension; box sums touch `2^n` prefix corners.
pub const MAX_DIM: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub points_per_axis: usize,
    pub half_width: f64,
}

impl GridSpec {
    pub fn new(dim: usize, points_per_axis: usize, half_width: f64) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(invalid("dim", format!("must be in 1..={MAX_DIM}, got {dim}")));
        }
        if points_per_axis < 4 || points_per_axis % 2 != 0 {
            return Err(invalid(
                "points_per_axis",
                format!("must be an even integer >= 4, got {points_per_axis}"),
            ));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(invalid("half_width", format!("must be positive, got {half_width}")));
        }
        let len = points_per_axis
            .checked_pow(dim as u32)
            .ok_or_else(|| invalid("points_per_axis", "grid too large"))?;
        if len > 1 << 28 {
            return Err(invalid("points_per_axis", "grid too large"));
        }
        Ok(Self {
            dim,
            points_per_axis,
            half_width,
        })
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points_per_axis as f64
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn domain_volume(&self) -> f64 {
        (2.0 * self.half_width).powi(self.dim as i32)
    }

    /// Euclidean diameter `2L√n` of the box.
    pub fn diameter(&self) -> f64 {
        2.0 * self.half_width * (self.dim as f64).sqrt()
    }

    /// Row-major strides, axis 0 slowest.
    pub fn strides(&self) -> Vec<usize> {
        strides_of(&vec![self.points_per_axis; self.dim])
    }

    #[inline]
    pub fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        let n = self.points_per_axis;
        for d in (0..self.dim).rev() {
            out[d] = flat % n;
            flat /= n;
        }
    }

    #[inline]
    pub fn ravel(&self, ix: &[usize]) -> usize {
        ix.iter()
            .fold(0, |acc, &i| acc * self.points_per_axis + i)
    }

    /// Centre coordinate of cell `i` along any axis.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.spacing()
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut ix = vec![0; self.dim];
        self.unravel(flat, &mut ix);
        ix.iter().map(|&i| self.coord(i)).collect()
    }

    /// Index of the cell whose centre is nearest to `x`, clamped into the box.
    pub fn nearest_index(&self, x: &[f64]) -> Vec<usize> {
        let h = self.spacing();
        x.iter()
            .map(|&xi| {
                let u = ((xi + self.half_width) / h - 0.5).round();
                u.clamp(0.0, (self.points_per_axis - 1) as f64) as usize
            })
            .collect()
    }

    pub fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

pub(crate) fn strides_of(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for d in (0..dims.len().saturating_sub(1)).rev() {
        s[d] = s[d + 1] * dims[d + 1];
    }
    s
}

/// Real samples on the cells of a [`GridSpec`], row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    spec: GridSpec,
    samples: Vec<f64>,
}

impl GridFunction {
    pub fn new(spec: GridSpec, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != spec.len() {
            return Err(Error::InvalidData(format!(
                "expected {} samples, got {}",
                spec.len(),
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!("non-finite sample at {i}")));
        }
        Ok(Self { spec, samples })
    }

    /// Skips validation; callers guarantee length and finiteness.
    pub(crate) fn from_raw(spec: GridSpec, samples: Vec<f64>) -> Self {
        debug_assert_eq!(samples.len(), spec.len());
        Self { spec, samples }
    }

    pub fn constant(spec: GridSpec, c: f64) -> Self {
        Self::from_raw(spec, vec![c; spec.len()])
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self::constant(spec, 0.0)
    }

    /// Samples `f` at every cell centre.
    pub fn from_fn(spec: GridSpec, f: impl Fn(&[f64]) -> f64 + Sync + Send) -> Self {
        let samples = crate::par::map_range(spec.len(), |i| f(&spec.point(i)));
        Self::from_raw(spec, samples)
    }

    /// Indicator of the cells of `cube` (clipped).
    pub fn indicator(spec: GridSpec, cube: &Cube) -> Self {
        let mut ix = vec![0; spec.dim];
        let samples = (0..spec.len())
            .map(|i| {
                spec.unravel(i, &mut ix);
                if cube.contains(&ix) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        Self::from_raw(spec, samples)
    }

    #[inline]
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    #[inline]
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    #[inline]
    pub fn get(&self, flat: usize) -> f64 {
        self.samples[flat]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(self.spec, self.samples.iter().map(|&v| f(v)).collect())
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.spec.check_same(&other.spec)?;
        Ok(Self::from_raw(
            self.spec,
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// An ordered, nonempty family of grid functions on a common grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorGridFunction {
    components: Vec<GridFunction>,
}

impl VectorGridFunction {
    pub fn new(components: Vec<GridFunction>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidData("vector grid function needs a component".into()))?;
        for c in &components[1..] {
            first.spec.check_same(&c.spec)?;
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[GridFunction] {
        &self.components
    }

    pub fn spec(&self) -> &GridSpec {
        &self.components[0].spec
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

impl From<GridFunction> for VectorGridFunction {
    fn from(f: GridFunction) -> Self {
        Self {
            components: vec![f],
        }
    }
}

/// Region of integration.
#[derive(Clone, Copy, Debug)]
pub enum Region<'a> {
    Domain,
    Cube(&'a Cube),
}

/// Cell-centred Riemann sum `h^n Σ f` over the (clipped) region.
pub fn integrate(f: &GridFunction, region: Region<'_>) -> Result<f64> {
    let spec = f.spec();
    match region {
        Region::Domain => Ok(spec.cell_volume() * f.samples.iter().sum::<f64>()),
        Region::Cube(q) => {
            let (lo, hi) = q.clipped(spec).ok_or(Error::EmptyRegion)?;
            Ok(spec.cell_volume() * sum_box(f, &lo, &hi))
        }
    }
}

/// Direct (no prefix table) sum of samples over `lo..hi`.
pub(crate) fn sum_box(f: &GridFunction, lo: &[usize], hi: &[usize]) -> f64 {
    sum_box_map(f, lo, hi, |v| v)
}

pub(crate) fn sum_box_map(f: &GridFunction, lo: &[usize], hi: &[usize], mut g: impl FnMut(f64) -> f64) -> f64 {
    let spec = f.spec();
    let dim = spec.dim;
    if (0..dim).any(|d| lo[d] >= hi[d]) {
        return 0.0;
    }
    let mut ix = lo.to_vec();
    let mut total = 0.0;
    loop {
        total += g(f.samples[spec.ravel(&ix)]);
        let mut d = dim;
        loop {
            if d == 0 {
                return total;
            }
            d -= 1;
            ix[d] += 1;
            if ix[d] < hi[d] {
                break;
            }
            ix[d] = lo[d];
        }
    }
}

/// Max of samples over `lo..hi` (nonempty).
pub(crate) fn box_max(f: &GridFunction, lo: &[usize], hi: &[usize]) -> f64 {
    let mut m = f64::NEG_INFINITY;
    sum_box_map(f, lo, hi, |v| {
        m = m.max(v);
        0.0
    });
    m
}

/// Mean of `|f|` over the clipped cube.
pub fn cube_average(f: &GridFunction, q: &Cube) -> Result<f64> {
    let spec = f.spec();
    let (lo, hi) = q.clipped(spec).ok_or(Error::EmptyRegion)?;
    let count: usize = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
    Ok(sum_box_map(f, &lo, &hi, f64::abs) / count as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormMode {
    Strong,
    Weak,
}

/// `L^p(ω)` norm (strong) or `L^{p,∞}(ω)` quasi-norm (weak). `p` may be
/// `f64::INFINITY` in which case both modes return `max |f|`.
///
/// The weak quasi-norm `sup_λ λ ω({|f|>λ})^{1/p}` is evaluated exactly: on grid
/// data the supremum is attained as `λ` approaches a sample magnitude `v` from
/// below, giving `v · ω({|f| ≥ v})^{1/p}`.
pub fn norm(f: &GridFunction, p: f64, weight: Option<&Weight>, mode: NormMode) -> Result<f64> {
    if !(p > 0.0) {
        return Err(invalid("p", format!("norm exponent must be > 0, got {p}")));
    }
    let spec = f.spec();
    if let Some(w) = weight {
        spec.check_same(w.spec())?;
    }
    let cell = spec.cell_volume();
    let w_at = |i: usize| weight.map_or(1.0, |w| w.values().get(i)) * cell;
    if p.is_infinite() {
        return Ok(f.max_abs());
    }
    match mode {
        NormMode::Strong => {
            let s: f64 = f
                .samples
                .iter()
                .enumerate()
                .map(|(i, v)| v.abs().powf(p) * w_at(i))
                .sum();
            Ok(s.powf(1.0 / p))
        }
        NormMode::Weak => {
            let mut order: Vec<usize> = (0..f.samples.len()).collect();
            let mag = |i: usize| f.samples[i].abs();
            order.sort_by(|&a, &b| mag(b).total_cmp(&mag(a)).then(a.cmp(&b)));
            let mut best = 0.0f64;
            let mut mass = 0.0;
            let mut k = 0;
            while k < order.len() {
                let v = mag(order[k]);
                if v == 0.0 {
                    break;
                }
                while k < order.len() && mag(order[k]) == v {
                    mass += w_at(order[k]);
                    k += 1;
                }
                best = best.max(v * mass.powf(1.0 / p));
            }
            Ok(best)
        }
    }
}

/// Pointwise `ℓ^r` norm across components; `r = ∞` gives the pointwise max.
pub fn vector_norm_pointwise(f: &VectorGridFunction, r: f64) -> Result<GridFunction> {
    if !(r > 0.0) {
        return Err(invalid("r", format!("must be > 0, got {r}")));
    }
    let spec = *f.spec();
    let comps = f.components();
    let samples = (0..spec.len())
        .map(|i| {
            if r.is_infinite() {
                comps.iter().fold(0.0, |m: f64, c| m.max(c.samples[i].abs()))
            } else if comps.len() == 1 {
                comps[0].samples[i].abs()
            } else {
                let scale = comps.iter().fold(0.0, |m: f64, c| m.max(c.samples[i].abs()));
                if scale == 0.0 {
                    return 0.0;
                }
                let s: f64 = comps
                    .iter()
                    .map(|c| (c.samples[i].abs() / scale).powf(r))
                    .sum();
                scale * s.powf(1.0 / r)
            }
        })
        .collect();
    Ok(GridFunction::from_raw(spec, samples))
}
