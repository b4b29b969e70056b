//! Subgraph counting over a potential graph with per-point activity. A
//! pattern on q vertices is counted as the number of injective vertex maps
//! whose pattern edges land on visible edges, divided by the pattern's
//! automorphism count; extra host edges among the image are allowed.

use crate::dynamics::{EventTimeline, Trajectory};
use crate::graphs::SmallGraph;
use crate::rcm::PotentialGraph;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CountError {
    #[error("activity vector has {got} entries for {want} points")]
    StateLength { got: usize, want: usize },
    #[error("need one trajectory per point: {got} trajectories, {want} points")]
    TrajectoryCount { got: usize, want: usize },
    #[error("grid must be finite, sorted, and inside [0, {horizon}]")]
    BadGrid { horizon: f64 },
    #[error("ordered embedding total {total} not divisible by automorphism count {aut}")]
    Divisibility { total: u64, aut: u64 },
    #[error("series index {0} out of range")]
    BadSeries(usize),
    #[error("input lengths disagree: {0}")]
    LengthMismatch(&'static str),
}

/// Count ordered embeddings extending a partial assignment. `order` is a
/// connectivity-respecting visit order of the pattern vertices, `image` the
/// host ids chosen so far.
fn extend(
    pattern: &SmallGraph,
    potential: &PotentialGraph,
    is_active: &impl Fn(u32) -> bool,
    order: &[usize],
    image: &mut Vec<u32>,
    assigned: &mut [Option<u32>],
) -> u64 {
    let pos = image.len();
    if pos == order.len() {
        return 1;
    }
    let v = order[pos];
    // Candidates come from the visible neighborhood of the first already
    // placed pattern neighbor; remaining pattern edges are checked directly.
    let anchor = pattern
        .neighbors(v)
        .find_map(|u| assigned[u])
        .expect("search order keeps patterns connected");
    let mut total = 0;
    for &cand in &potential.neighbors[anchor as usize] {
        if !is_active(cand) || image.contains(&cand) {
            continue;
        }
        let ok = pattern.neighbors(v).all(|u| match assigned[u] {
            Some(host) => potential.has_edge(host, cand),
            None => true,
        });
        if !ok {
            continue;
        }
        image.push(cand);
        assigned[v] = Some(cand);
        total += extend(pattern, potential, is_active, order, image, assigned);
        assigned[v] = None;
        image.pop();
    }
    total
}

/// Ordered embeddings that map pattern vertex `order[0]` to `root`.
fn embeddings_rooted(
    pattern: &SmallGraph,
    potential: &PotentialGraph,
    is_active: &impl Fn(u32) -> bool,
    order: &[usize],
    root: u32,
) -> u64 {
    let mut image = vec![root];
    let mut assigned = [None; 8];
    assigned[order[0]] = Some(root);
    extend(pattern, potential, is_active, order, &mut image, &mut assigned)
}

fn div_by_aut(total: u64, pattern: &SmallGraph) -> Result<f64, CountError> {
    let aut = pattern.automorphism_count();
    if total % aut != 0 {
        return Err(CountError::Divisibility { total, aut });
    }
    Ok((total / aut) as f64)
}

/// Pattern count under the given activity states.
pub fn count_static(
    pattern: &SmallGraph,
    potential: &PotentialGraph,
    active: &[bool],
) -> Result<f64, CountError> {
    if active.len() != potential.n_points() {
        return Err(CountError::StateLength {
            got: active.len(),
            want: potential.n_points(),
        });
    }
    let is_active = |id: u32| active[id as usize];
    let order = pattern.search_order(0);
    let mut total = 0u64;
    for root in 0..potential.n_points() as u32 {
        if is_active(root) {
            total += embeddings_rooted(pattern, potential, &is_active, &order, root);
        }
    }
    div_by_aut(total, pattern)
}

/// Count, in pattern units, of embeddings whose image contains `point`,
/// treating `point` as active and every other point per `active`. This is
/// exactly the jump size of the count when `point` toggles.
pub fn count_through_point(
    pattern: &SmallGraph,
    potential: &PotentialGraph,
    active: &[bool],
    point: u32,
) -> Result<f64, CountError> {
    if active.len() != potential.n_points() {
        return Err(CountError::StateLength {
            got: active.len(),
            want: potential.n_points(),
        });
    }
    let is_active = |id: u32| id == point || active[id as usize];
    // Each embedding through `point` maps exactly one pattern vertex there,
    // so rooting the search at every pattern vertex counts it once.
    let mut total = 0u64;
    for v in 0..pattern.q() {
        let order = pattern.search_order(v);
        total += embeddings_rooted(pattern, potential, &is_active, &order, point);
    }
    div_by_aut(total, pattern)
}

/// Pattern counts sampled on a time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CountProcess {
    pub grid: Vec<f64>,
    /// `values[pattern][grid index]`.
    pub values: Vec<Vec<f64>>,
}

impl CountProcess {
    pub fn series(&self, pattern: usize) -> Result<&[f64], CountError> {
        self.values
            .get(pattern)
            .map(|v| v.as_slice())
            .ok_or(CountError::BadSeries(pattern))
    }
}

fn check_grid(grid: &[f64], horizon: f64) -> Result<(), CountError> {
    let ok = !grid.is_empty()
        && grid.iter().all(|t| t.is_finite() && *t >= 0.0 && *t <= horizon)
        && grid.windows(2).all(|w| w[0] <= w[1]);
    if ok {
        Ok(())
    } else {
        Err(CountError::BadGrid { horizon })
    }
}

/// Evaluate all pattern counts along the grid by replaying toggle events and
/// applying the jump of each toggle, instead of recounting from scratch.
pub fn run_count_process(
    patterns: &[SmallGraph],
    potential: &PotentialGraph,
    trajectories: &[Trajectory],
    grid: &[f64],
) -> Result<CountProcess, CountError> {
    if trajectories.len() != potential.n_points() {
        return Err(CountError::TrajectoryCount {
            got: trajectories.len(),
            want: potential.n_points(),
        });
    }
    let horizon = trajectories
        .iter()
        .map(|t| t.horizon)
        .fold(f64::INFINITY, f64::min)
        .min(f64::INFINITY);
    let horizon = if trajectories.is_empty() { 0.0 } else { horizon };
    check_grid(grid, horizon)?;

    let mut active: Vec<bool> = trajectories.iter().map(|t| t.initial).collect();
    let mut current: Vec<f64> = patterns
        .iter()
        .map(|p| count_static(p, potential, &active))
        .collect::<Result<_, _>>()?;
    let timeline = EventTimeline::from_trajectories(trajectories);

    let mut values = vec![Vec::with_capacity(grid.len()); patterns.len()];
    let mut cursor = 0usize;
    for &t in grid {
        while cursor < timeline.events.len() && timeline.events[cursor].time <= t {
            let e = timeline.events[cursor];
            cursor += 1;
            if active[e.point as usize] == e.active {
                continue;
            }
            for (k, pattern) in patterns.iter().enumerate() {
                let jump = count_through_point(pattern, potential, &active, e.point)?;
                current[k] += if e.active { jump } else { -jump };
            }
            active[e.point as usize] = e.active;
        }
        for (k, v) in values.iter_mut().enumerate() {
            v.push(current[k]);
        }
    }
    Ok(CountProcess {
        grid: grid.to_vec(),
        values,
    })
}

/// Same result as `run_count_process` by recounting from scratch at each grid
/// time; kept as the slow cross-check.
pub fn run_count_process_recount(
    patterns: &[SmallGraph],
    potential: &PotentialGraph,
    trajectories: &[Trajectory],
    grid: &[f64],
) -> Result<CountProcess, CountError> {
    if trajectories.len() != potential.n_points() {
        return Err(CountError::TrajectoryCount {
            got: trajectories.len(),
            want: potential.n_points(),
        });
    }
    let horizon = trajectories
        .iter()
        .map(|t| t.horizon)
        .fold(f64::INFINITY, f64::min);
    let horizon = if trajectories.is_empty() { 0.0 } else { horizon };
    check_grid(grid, horizon)?;
    let mut values = vec![Vec::with_capacity(grid.len()); patterns.len()];
    for &t in grid {
        let active: Vec<bool> = trajectories.iter().map(|tr| tr.state_at(t)).collect();
        for (k, pattern) in patterns.iter().enumerate() {
            values[k].push(count_static(pattern, potential, &active)?);
        }
    }
    Ok(CountProcess {
        grid: grid.to_vec(),
        values,
    })
}

/// Center and scale each series: `(value - mean) / scale`.
pub fn normalize_process(
    process: &CountProcess,
    means: &[f64],
    scales: &[f64],
) -> Result<CountProcess, CountError> {
    if means.len() != process.values.len() || scales.len() != process.values.len() {
        return Err(CountError::LengthMismatch("means/scales vs series"));
    }
    if scales.iter().any(|s| !s.is_finite() || *s <= 0.0) {
        return Err(CountError::LengthMismatch("scales must be positive"));
    }
    let values = process
        .values
        .iter()
        .zip(means.iter().zip(scales))
        .map(|(series, (&m, &s))| series.iter().map(|v| (v - m) / s).collect())
        .collect();
    Ok(CountProcess {
        grid: process.grid.clone(),
        values,
    })
}

/// Pointwise ratio of two series. Grid points where the denominator vanishes
/// yield NaN and set the degenerate flag.
pub fn ratio_process(
    process: &CountProcess,
    numerator: usize,
    denominator: usize,
) -> Result<(Vec<f64>, bool), CountError> {
    let num = process.series(numerator)?;
    let den = process.series(denominator)?;
    let mut degenerate = false;
    let ratio = num
        .iter()
        .zip(den)
        .map(|(&a, &b)| {
            if b == 0.0 {
                degenerate = true;
                f64::NAN
            } else {
                a / b
            }
        })
        .collect();
    Ok((ratio, degenerate))
}
