use serde::{Deserialize, Serialize};

use super::{DyadicLattice, GridSpec};

/// Axis-parallel cube in cell units: cells `lo[d] .. lo[d] + cells` on every
/// axis. `lo` may be negative or run past the box; use [`Cube::clipped`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cube {
    pub lo: Vec<isize>,
    pub cells: usize,
}

/// Human/JSON-facing description of a cube in physical units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeDescriptor {
    pub center: Vec<f64>,
    pub side: f64,
    pub lo: Vec<isize>,
    pub cells: usize,
}

impl Cube {
    pub fn new(lo: Vec<isize>, cells: usize) -> Self {
        assert!(cells > 0, "cube must have positive side");
        Self { lo, cells }
    }

    /// Cube of `cells` (odd) cells centred on cell `center`.
    pub fn centered(center: &[usize], cells: usize) -> Self {
        let half = (cells as isize - 1) / 2;
        Self::new(center.iter().map(|&c| c as isize - half).collect(), cells)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn side(&self, spec: &GridSpec) -> f64 {
        self.cells as f64 * spec.spacing()
    }

    /// Half-open index ranges of the part inside the box, or `None` if empty.
    pub fn clipped(&self, spec: &GridSpec) -> Option<(Vec<usize>, Vec<usize>)> {
        let n = spec.points_per_axis as isize;
        let mut lo = Vec::with_capacity(self.dim());
        let mut hi = Vec::with_capacity(self.dim());
        for &l in &self.lo {
            let a = l.max(0);
            let b = (l + self.cells as isize).min(n);
            if a >= b {
                return None;
            }
            lo.push(a as usize);
            hi.push(b as usize);
        }
        Some((lo, hi))
    }

    pub fn clipped_cells(&self, spec: &GridSpec) -> usize {
        self.clipped(spec)
            .map(|(lo, hi)| lo.iter().zip(&hi).map(|(a, b)| b - a).product())
            .unwrap_or(0)
    }

    pub fn contains(&self, ix: &[usize]) -> bool {
        self.lo
            .iter()
            .zip(ix)
            .all(|(&l, &i)| (i as isize) >= l && (i as isize) < l + self.cells as isize)
    }

    pub fn center_point(&self, spec: &GridSpec) -> Vec<f64> {
        let h = spec.spacing();
        self.lo
            .iter()
            .map(|&l| -spec.half_width + (l as f64 + self.cells as f64 / 2.0) * h)
            .collect()
    }

    /// Cell used to read point-valued fields at the cube centre: the centre
    /// cell for odd sides, the upper of the two middle cells for even sides,
    /// clamped into the box.
    pub fn center_cell(&self, spec: &GridSpec) -> Vec<usize> {
        let top = spec.points_per_axis as isize - 1;
        self.lo
            .iter()
            .map(|&l| (l + self.cells as isize / 2).clamp(0, top) as usize)
            .collect()
    }

    /// Centre-preserving dilation by an integer factor. Membership is decided
    /// by cell centres lying in the closed dilated cube, so `2Q` of a single
    /// cell is its 3^n neighbourhood.
    pub fn dilate(&self, factor: usize) -> Cube {
        let k = self.cells as isize;
        let f = factor as isize;
        // half-cell units: centre 2 lo + k, half width f k, cell i centre 2 i + 1
        let c2 = |l: isize| 2 * l + k;
        let lo: Vec<isize> = self
            .lo
            .iter()
            .map(|&l| (c2(l) - f * k).div_euclid(2))
            .collect();
        let hi0 = (c2(self.lo[0]) + f * k - 1).div_euclid(2);
        let cells = (hi0 - lo[0] + 1) as usize;
        Cube::new(lo, cells)
    }

    pub fn descriptor(&self, spec: &GridSpec) -> CubeDescriptor {
        CubeDescriptor {
            center: self.center_point(spec),
            side: self.side(spec),
            lo: self.lo.clone(),
            cells: self.cells,
        }
    }
}

/// Geometric ladder of radii (used as cube side lengths for cube families).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiiLadder {
    pub radii: Vec<f64>,
}

impl RadiiLadder {
    pub const RATIO: f64 = 1.189_207_115_002_721; // 2^(1/4)

    /// `h, h·2^{1/4}, …` up to and including the box diameter `2L√n`.
    pub fn standard(spec: &GridSpec) -> Self {
        Self::geometric(spec.spacing(), spec.diameter(), Self::RATIO)
    }

    pub fn geometric(start: f64, stop: f64, ratio: f64) -> Self {
        assert!(start > 0.0 && ratio > 1.0);
        let mut radii = vec![];
        let mut r = start;
        while r < stop * (1.0 - 1e-12) {
            radii.push(r);
            r *= ratio;
        }
        radii.push(stop.max(start));
        Self { radii }
    }

    /// Cube sides in cells: each radius rounded to the nearest positive
    /// integer number of cells, deduplicated.
    pub fn cube_sides(&self, spec: &GridSpec) -> Vec<usize> {
        let h = spec.spacing();
        let mut s: Vec<usize> = self
            .radii
            .iter()
            .map(|r| ((r / h).round() as usize).max(1))
            .collect();
        s.dedup();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Like [`cube_sides`](Self::cube_sides) but snapped to odd counts so the
    /// cube can be centred on a cell.
    pub fn odd_cube_sides(&self, spec: &GridSpec) -> Vec<usize> {
        let h = spec.spacing();
        let mut s: Vec<usize> = self
            .radii
            .iter()
            .map(|r| {
                let k = (r / h - 1.0) / 2.0;
                2 * (k.round().max(0.0) as usize) + 1
            })
            .collect();
        s.sort_unstable();
        s.dedup();
        s
    }
}

/// Explicit finite family of cubes over which suprema are taken.
#[derive(Clone, Debug)]
pub struct CubeFamily {
    pub cubes: Vec<Cube>,
    pub descriptor: String,
    /// Whether the `r → 0` limit inside each cell is part of the family.
    pub subcell: bool,
}

impl CubeFamily {
    /// Odd-sided cubes centred at every `stride`-th cell along each axis.
    pub fn centered(spec: &GridSpec, sides: &[usize], stride: usize) -> Self {
        let stride = stride.max(1);
        let mut cubes = vec![];
        let mut ix = vec![0; spec.dim];
        for flat in 0..spec.len() {
            spec.unravel(flat, &mut ix);
            if ix.iter().any(|i| i % stride != 0) {
                continue;
            }
            for &k in sides {
                debug_assert!(k % 2 == 1);
                cubes.push(Cube::centered(&ix, k));
            }
        }
        Self {
            cubes,
            descriptor: format!("centered(stride={stride},sides={sides:?})"),
            subcell: true,
        }
    }

    pub fn dyadic(lattice: &DyadicLattice) -> Self {
        let mut cubes = vec![];
        for j in 0..=lattice.depth() {
            cubes.extend(lattice.cubes_at(j));
        }
        Self {
            cubes,
            descriptor: format!("dyadic(depth={})", lattice.depth()),
            subcell: true,
        }
    }

    /// All dyadic cubes plus standard-ladder cubes centred at every 4th cell.
    pub fn standard(spec: &GridSpec) -> Self {
        let lattice = DyadicLattice::new(*spec);
        let sides = RadiiLadder::standard(spec).odd_cube_sides(spec);
        Self::dyadic(&lattice).union(Self::centered(spec, &sides, 4))
    }

    pub fn union(mut self, other: CubeFamily) -> Self {
        self.cubes.extend(other.cubes);
        self.descriptor = format!("{} + {}", self.descriptor, other.descriptor);
        self.subcell |= other.subcell;
        self
    }

    pub fn without_subcell(mut self) -> Self {
        self.subcell = false;
        self
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }
}
