//! Torus geometry: points on `[-1/2, 1/2)^d`, the wrap-around metric,
//! Poisson cloud sampling, and a periodic cell index for short-range
//! neighbor queries.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use thiserror::Error;

/// Supported spatial dimensions.
pub const MAX_DIM: usize = 3;

/// Total cell budget for a [`CellIndex`]; small query radii are handled by
/// capping the grid, never by refusing to build.
const MAX_CELLS: usize = 1 << 21;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("dimension {0} not in 1..=3")]
    BadDimension(usize),
    #[error("coordinate {0} outside [-1/2, 1/2)")]
    CoordOutOfRange(f64),
    #[error("intensity must be positive and finite, got {0}")]
    BadIntensity(f64),
    #[error("query radius {r} exceeds cell size {cell_size}")]
    RadiusExceedsCell { r: f64, cell_size: f64 },
    #[error("point id {0} not in index")]
    UnknownPoint(u32),
}

/// A location on the unit torus. Unused coordinates stay zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusPoint {
    coords: [f64; MAX_DIM],
}

impl TorusPoint {
    pub fn new(coords: &[f64]) -> Result<Self, GeometryError> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(GeometryError::BadDimension(coords.len()));
        }
        let mut c = [0.0; MAX_DIM];
        for (i, &x) in coords.iter().enumerate() {
            if !(-0.5..0.5).contains(&x) {
                return Err(GeometryError::CoordOutOfRange(x));
            }
            c[i] = x;
        }
        Ok(TorusPoint { coords: c })
    }

    pub fn coord(&self, k: usize) -> f64 {
        self.coords[k]
    }
}

/// Signed representative of `x` in `[-1/2, 1/2)`.
#[inline]
pub fn wrap(x: f64) -> f64 {
    let y = x - x.round();
    // x.round() ties away from zero, so y can land exactly on 0.5.
    if y >= 0.5 {
        y - 1.0
    } else if y < -0.5 {
        y + 1.0
    } else {
        y
    }
}

/// Euclidean distance on the torus in the first `d` coordinates.
#[inline]
pub fn torus_distance(a: &TorusPoint, b: &TorusPoint, d: usize) -> f64 {
    let mut s = 0.0;
    for k in 0..d {
        let dx = wrap(a.coords[k] - b.coords[k]);
        s += dx * dx;
    }
    s.sqrt()
}

/// Sample a Poisson(`n`) number of independent uniform points.
pub fn sample_poisson_points(
    n: f64,
    d: usize,
    rng: &mut impl Rng,
) -> Result<Vec<TorusPoint>, GeometryError> {
    if d == 0 || d > MAX_DIM {
        return Err(GeometryError::BadDimension(d));
    }
    if !(n.is_finite() && n > 0.0) {
        return Err(GeometryError::BadIntensity(n));
    }
    let count = Poisson::new(n).map_err(|_| GeometryError::BadIntensity(n))?;
    let k = count.sample(rng) as usize;
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        let mut c = [0.0; MAX_DIM];
        for ck in c.iter_mut().take(d) {
            *ck = rng.gen::<f64>() - 0.5;
        }
        out.push(TorusPoint { coords: c });
    }
    Ok(out)
}

/// Periodic uniform grid over the torus holding point ids per cell.
///
/// Queries with radius at most one cell width scan the 3^d neighboring
/// cells, which is exhaustive because the grid wraps like the torus does.
pub struct CellIndex {
    d: usize,
    grid: usize,
    cell_size: f64,
    cells: Vec<Vec<u32>>,
    points: Vec<TorusPoint>,
}

impl CellIndex {
    /// Build an index whose cells are at least `min_cell_size` wide. The
    /// actual cell size may be larger when the budget caps the grid.
    pub fn build(
        points: &[TorusPoint],
        d: usize,
        min_cell_size: f64,
    ) -> Result<CellIndex, GeometryError> {
        if d == 0 || d > MAX_DIM {
            return Err(GeometryError::BadDimension(d));
        }
        if !(min_cell_size.is_finite() && min_cell_size > 0.0) {
            return Err(GeometryError::BadIntensity(min_cell_size));
        }
        let cap = match d {
            1 => MAX_CELLS,
            2 => (MAX_CELLS as f64).sqrt() as usize,
            _ => (MAX_CELLS as f64).cbrt() as usize,
        };
        let grid = ((1.0 / min_cell_size).floor() as usize).clamp(1, cap);
        let cell_size = 1.0 / grid as f64;
        let mut cells = vec![Vec::new(); grid.pow(d as u32)];
        for (id, p) in points.iter().enumerate() {
            cells[Self::cell_of(p, d, grid)].push(id as u32);
        }
        Ok(CellIndex {
            d,
            grid,
            cell_size,
            cells,
            points: points.to_vec(),
        })
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    fn cell_of(p: &TorusPoint, d: usize, grid: usize) -> usize {
        let mut idx = 0usize;
        for k in 0..d {
            let c = (((p.coords[k] + 0.5) * grid as f64).floor() as usize).min(grid - 1);
            idx = idx * grid + c;
        }
        idx
    }

    fn cell_coords(p: &TorusPoint, d: usize, grid: usize) -> [isize; MAX_DIM] {
        let mut c = [0isize; MAX_DIM];
        for k in 0..d {
            c[k] = (((p.coords[k] + 0.5) * grid as f64).floor() as isize).min(grid as isize - 1);
        }
        c
    }

    /// Ids of indexed points at torus distance `<= r` from `x`, ascending.
    /// A point co-located with `x` is included; use [`Self::neighbors_of`]
    /// to query around an indexed point without returning it.
    pub fn neighbors_within(&self, x: &TorusPoint, r: f64) -> Result<Vec<u32>, GeometryError> {
        if r > self.cell_size {
            return Err(GeometryError::RadiusExceedsCell {
                r,
                cell_size: self.cell_size,
            });
        }
        let grid = self.grid as isize;
        let base = Self::cell_coords(x, self.d, self.grid);
        let mut cell_ids: Vec<usize> = Vec::with_capacity(3usize.pow(self.d as u32));
        let mut offsets = [0isize; MAX_DIM];
        self.collect_cells(&base, &mut offsets, 0, grid, &mut cell_ids);
        cell_ids.sort_unstable();
        cell_ids.dedup();
        let mut out = Vec::new();
        for cid in cell_ids {
            for &id in &self.cells[cid] {
                if torus_distance(&self.points[id as usize], x, self.d) <= r {
                    out.push(id);
                }
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    fn collect_cells(
        &self,
        base: &[isize; MAX_DIM],
        offsets: &mut [isize; MAX_DIM],
        k: usize,
        grid: isize,
        out: &mut Vec<usize>,
    ) {
        if k == self.d {
            let mut idx = 0isize;
            for k in 0..self.d {
                idx = idx * grid + (base[k] + offsets[k]).rem_euclid(grid);
            }
            out.push(idx as usize);
            return;
        }
        for off in [-1, 0, 1] {
            offsets[k] = off;
            self.collect_cells(base, offsets, k + 1, grid, out);
        }
    }

    /// Neighbors of an indexed point, excluding the point itself.
    pub fn neighbors_of(&self, id: u32, r: f64) -> Result<Vec<u32>, GeometryError> {
        let p = self
            .points
            .get(id as usize)
            .ok_or(GeometryError::UnknownPoint(id))?;
        let mut out = self.neighbors_within(&p.clone(), r)?;
        out.retain(|&j| j != id);
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn pt(coords: &[f64]) -> TorusPoint {
        TorusPoint::new(coords).unwrap()
    }

    #[test]
    fn distance_wraps_across_faces() {
        assert_relative_eq!(torus_distance(&pt(&[0.4]), &pt(&[-0.4]), 1), 0.2, epsilon = 1e-12);
        assert_relative_eq!(
            torus_distance(&pt(&[-0.49, 0.1]), &pt(&[0.49, 0.1]), 2),
            0.02,
            epsilon = 1e-12
        );
        assert_relative_eq!(torus_distance(&pt(&[0.25]), &pt(&[0.0]), 1), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn distance_is_bounded_by_half_diagonal() {
        let mut rng = stream_rng(1, &[99]);
        for _ in 0..2000 {
            let d = rng.gen_range(1..=3usize);
            let a = pt(&(0..d).map(|_| rng.gen::<f64>() - 0.5).collect::<Vec<_>>());
            let b = pt(&(0..d).map(|_| rng.gen::<f64>() - 0.5).collect::<Vec<_>>());
            let dist = torus_distance(&a, &b, d);
            assert!(dist <= (d as f64).sqrt() / 2.0 + 1e-12);
            assert_eq!(dist, torus_distance(&b, &a, d));
        }
    }

    proptest! {
        #[test]
        fn triangle_inequality_holds(
            xs in proptest::collection::vec(-0.5f64..0.5, 9)
        ) {
            for d in 1..=3usize {
                let a = pt(&xs[0..d]);
                let b = pt(&xs[3..3 + d]);
                let c = pt(&xs[6..6 + d]);
                let ab = torus_distance(&a, &b, d);
                let bc = torus_distance(&b, &c, d);
                let ac = torus_distance(&a, &c, d);
                prop_assert!(ac <= ab + bc + 1e-12);
            }
        }
    }

    #[test]
    fn poisson_counts_match_intensity() {
        // Mean of 10^4 Poisson(50) draws: SE = sqrt(50/10^4) ~ 0.0707.
        let mut rng = stream_rng(2, &[1]);
        let reps = 10_000;
        let mut total = 0usize;
        for _ in 0..reps {
            let pts = sample_poisson_points(50.0, 2, &mut rng).unwrap();
            for p in &pts {
                for k in 0..2 {
                    assert!((-0.5..0.5).contains(&p.coord(k)));
                }
            }
            total += pts.len();
        }
        let mean = total as f64 / reps as f64;
        assert!((mean - 50.0).abs() < 3.0 * 0.0707, "mean {mean}");
    }

    #[test]
    fn sampling_is_deterministic_per_stream() {
        let a = sample_poisson_points(20.0, 3, &mut stream_rng(7, &[5])).unwrap();
        let b = sample_poisson_points(20.0, 3, &mut stream_rng(7, &[5])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cell_index_agrees_with_brute_force() {
        let mut rng = stream_rng(3, &[1]);
        for d in 1..=3usize {
            let pts = sample_poisson_points(300.0, d, &mut rng).unwrap();
            let index = CellIndex::build(&pts, d, 0.09).unwrap();
            for _ in 0..100 {
                let x = pt(&(0..d).map(|_| rng.gen::<f64>() - 0.5).collect::<Vec<_>>());
                let r = rng.gen::<f64>() * index.cell_size();
                let got = index.neighbors_within(&x, r).unwrap();
                let want: Vec<u32> = (0..pts.len() as u32)
                    .filter(|&i| torus_distance(&pts[i as usize], &x, d) <= r)
                    .collect();
                assert_eq!(got, want);
            }
        }
    }

    #[test]
    fn cell_index_handles_small_grids_and_zero_radius() {
        // grid = 1 and grid = 2 make neighbor cells alias; dedup must hold.
        let pts = vec![pt(&[-0.3, -0.3]), pt(&[0.3, 0.3]), pt(&[0.3, -0.3])];
        for cell in [0.6, 0.4] {
            let index = CellIndex::build(&pts, 2, cell).unwrap();
            let got = index.neighbors_within(&pt(&[0.0, 0.0]), index.cell_size()).unwrap();
            let want: Vec<u32> = (0..3)
                .filter(|&i| torus_distance(&pts[i as usize], &pt(&[0.0, 0.0]), 2) <= index.cell_size())
                .collect();
            assert_eq!(got, want);
        }

        // r = 0 returns co-located points only.
        let dup = vec![pt(&[0.1]), pt(&[0.1]), pt(&[0.2])];
        let index = CellIndex::build(&dup, 1, 0.05).unwrap();
        assert_eq!(index.neighbors_within(&pt(&[0.1]), 0.0).unwrap(), vec![0, 1]);
        assert_eq!(index.neighbors_of(0, 0.0).unwrap(), vec![1]);
    }

    #[test]
    fn cell_index_guards() {
        let pts = vec![pt(&[0.0])];
        let index = CellIndex::build(&pts, 1, 0.25).unwrap();
        assert!(matches!(
            index.neighbors_within(&pt(&[0.0]), 0.3),
            Err(GeometryError::RadiusExceedsCell { .. })
        ));
        let empty = CellIndex::build(&[], 1, 0.25).unwrap();
        assert!(empty.neighbors_within(&pt(&[0.0]), 0.2).unwrap().is_empty());
        // A tiny requested cell size is capped, not rejected.
        let capped = CellIndex::build(&pts, 3, 1e-9).unwrap();
        assert!(capped.cell_size() >= 1e-9);
    }
}
