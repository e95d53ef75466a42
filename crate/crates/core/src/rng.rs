//! Seeded random streams. Every random suite draws from ChaCha8 keyed by the
//! run seed with a per-suite stream id, so results do not depend on platform,
//! thread count, or the order in which suites run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{GridFunction, GridSpec};

pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(id);
    r
}

/// Smooth random field: a positive offset plus a sum of Gaussian bumps with
/// centres in the inner half of the box. Sampled analytically, so the same
/// field can be evaluated on refined grids.
#[derive(Clone, Debug)]
pub struct RandomField {
    pub offset: f64,
    pub bumps: Vec<(Vec<f64>, f64, f64)>, // centre, width, amplitude
}

impl RandomField {
    pub fn draw(rng: &mut impl Rng, dim: usize, half_width: f64, bumps: usize) -> Self {
        let bumps = (0..bumps)
            .map(|_| {
                let c = (0..dim)
                    .map(|_| rng.gen_range(-0.5..0.5) * half_width)
                    .collect();
                let w = rng.gen_range(0.05..0.3) * half_width;
                let a = rng.gen_range(0.1..2.0);
                (c, w, a)
            })
            .collect();
        Self {
            offset: 0.0,
            bumps,
        }
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.offset
            + self
                .bumps
                .iter()
                .map(|(c, w, a)| {
                    let d2: f64 = x.iter().zip(c).map(|(xi, ci)| (xi - ci).powi(2)).sum();
                    a * (-d2 / (2.0 * w * w)).exp()
                })
                .sum::<f64>()
    }

    pub fn sample(&self, spec: GridSpec) -> GridFunction {
        GridFunction::from_fn(spec, |x| self.eval(x))
    }
}

/// Independent uniform samples in `[lo, hi)` per cell.
pub fn uniform_cells(rng: &mut impl Rng, spec: GridSpec, lo: f64, hi: f64) -> GridFunction {
    let s = (0..spec.len()).map(|_| rng.gen_range(lo..hi)).collect();
    GridFunction::new(spec, s).expect("finite samples")
}

/// Sparse nonnegative data: uniform noise on a random subset of cells.
pub fn sparse_cells(rng: &mut impl Rng, spec: GridSpec, density: f64) -> GridFunction {
    let s = (0..spec.len())
        .map(|_| {
            if rng.gen_bool(density) {
                rng.gen_range(0.0..1.0)
            } else {
                0.0
            }
        })
        .collect();
    GridFunction::new(spec, s).expect("finite samples")
}
