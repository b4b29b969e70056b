//! Per-point on/off dynamics: reversible two-state Markov processes started
//! from their stationary law, their exact first and second moments, and the
//! merged event timelines consumed by the counting engine.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("rates must be positive and finite: mu={mu}, lambda={lambda}")]
    BadRates { mu: f64, lambda: f64 },
    #[error("horizon must be nonnegative and finite, got {0}")]
    BadHorizon(f64),
}

/// Rates of the two-state chain: `mu` switches off to on, `lambda` switches
/// on to off. The stationary on-probability is `mu / (mu + lambda)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OnOffParams {
    mu: f64,
    lambda: f64,
}

impl OnOffParams {
    pub fn new(mu: f64, lambda: f64) -> Result<Self, DynamicsError> {
        if !(mu.is_finite() && lambda.is_finite() && mu > 0.0 && lambda > 0.0) {
            return Err(DynamicsError::BadRates { mu, lambda });
        }
        Ok(OnOffParams { mu, lambda })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Stationary probability of being on.
    pub fn rho(&self) -> f64 {
        self.mu / (self.mu + self.lambda)
    }

    /// Time-correlation factor: `Z(t) = 1 + (lambda/mu) exp(-(lambda+mu)|t|)`.
    /// `Z(0) = 1/rho` and `Z(t) -> 1` as the gap grows.
    pub fn z(&self, t: f64) -> f64 {
        1.0 + self.lambda / self.mu * (-(self.lambda + self.mu) * t.abs()).exp()
    }

    /// `E[A(s) A(t)] = rho^2 Z(|t-s|)` for one stationary chain.
    pub fn pair_moment(&self, s: f64, t: f64) -> f64 {
        let rho = self.rho();
        rho * rho * self.z(t - s)
    }

    /// Exact mismatch probability `P(A(r) != A(s)) = 2(rho - rho^2 Z(s-r))`.
    pub fn flip_probability(&self, gap: f64) -> f64 {
        let rho = self.rho();
        2.0 * (rho - rho * rho * self.z(gap))
    }
}

/// One sampled on/off path on `[0, horizon]`, right-continuous.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub initial: bool,
    /// Strictly increasing toggle times in `(0, horizon]`.
    pub toggles: Vec<f64>,
    pub horizon: f64,
}

impl Trajectory {
    /// State at time `t`; a toggle at exactly `t` has already happened.
    pub fn state_at(&self, t: f64) -> bool {
        let flips = self.toggles.partition_point(|&x| x <= t);
        self.initial ^ (flips % 2 == 1)
    }
}

/// Sample a stationary trajectory: Bernoulli(rho) start, then alternating
/// exponential holding times.
pub fn sample_trajectory(
    params: &OnOffParams,
    horizon: f64,
    rng: &mut impl Rng,
) -> Result<Trajectory, DynamicsError> {
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(DynamicsError::BadHorizon(horizon));
    }
    let initial = rng.gen::<f64>() < params.rho();
    let mut state = initial;
    let mut toggles = Vec::new();
    let mut t = 0.0;
    loop {
        let rate = if state { params.lambda } else { params.mu };
        t += Exp::new(rate).expect("positive rate").sample(rng);
        if t > horizon {
            break;
        }
        toggles.push(t);
        state = !state;
    }
    Ok(Trajectory {
        initial,
        toggles,
        horizon,
    })
}

/// A single activation change of one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Event {
    pub time: f64,
    pub point: u32,
    /// State of the point from `time` on.
    pub active: bool,
}

/// All toggle events of a population, ordered by `(time, point)`.
#[derive(Clone, Debug, Default)]
pub struct EventTimeline {
    pub events: Vec<Event>,
}

impl EventTimeline {
    pub fn from_trajectories(trajectories: &[Trajectory]) -> EventTimeline {
        let mut events = Vec::new();
        for (id, traj) in trajectories.iter().enumerate() {
            for (k, &time) in traj.toggles.iter().enumerate() {
                events.push(Event {
                    time,
                    point: id as u32,
                    active: traj.initial ^ (k % 2 == 0),
                });
            }
        }
        events.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.point.cmp(&b.point)));
        EventTimeline { events }
    }
}

/// Monte Carlo summary of short-gap switching behavior: the single-switch
/// probability scales linearly in the gap and the double-switch probability
/// quadratically, so the fitted ratios stay bounded as gaps shrink.
#[derive(Clone, Debug)]
pub struct SwitchingBounds {
    pub gaps: Vec<f64>,
    pub flip_mc: Vec<f64>,
    pub flip_exact: Vec<f64>,
    pub flip_ratio: Vec<f64>,
    pub double_mc: Vec<f64>,
    pub double_ratio: Vec<f64>,
    /// Largest observed `P(A(0) != A(h)) / h`.
    pub c1_hat: f64,
    /// Largest observed `P(switch in [0,h] and in [h,2h]) / (2h)^2`.
    pub c2_hat: f64,
}

/// Estimate switching probabilities on a dyadic ladder of gaps
/// `base_gap / 2^level` and fit the linear and quadratic ratios.
pub fn switching_bounds_check(
    params: &OnOffParams,
    base_gap: f64,
    levels: usize,
    reps: usize,
    rng: &mut impl Rng,
) -> Result<SwitchingBounds, DynamicsError> {
    if !(base_gap.is_finite() && base_gap > 0.0) {
        return Err(DynamicsError::BadHorizon(base_gap));
    }
    let mut out = SwitchingBounds {
        gaps: Vec::new(),
        flip_mc: Vec::new(),
        flip_exact: Vec::new(),
        flip_ratio: Vec::new(),
        double_mc: Vec::new(),
        double_ratio: Vec::new(),
        c1_hat: 0.0,
        c2_hat: 0.0,
    };
    for level in 0..levels {
        let h = base_gap / (1u64 << level) as f64;
        let mut flips = 0usize;
        let mut doubles = 0usize;
        for _ in 0..reps {
            let traj = sample_trajectory(params, 2.0 * h, rng)?;
            if traj.state_at(0.0) != traj.state_at(h) {
                flips += 1;
            }
            let in_first = traj.toggles.iter().any(|&t| t <= h);
            let in_second = traj.toggles.iter().any(|&t| t > h && t <= 2.0 * h);
            if in_first && in_second {
                doubles += 1;
            }
        }
        let flip_p = flips as f64 / reps as f64;
        let double_p = doubles as f64 / reps as f64;
        out.gaps.push(h);
        out.flip_mc.push(flip_p);
        out.flip_exact.push(params.flip_probability(h));
        out.flip_ratio.push(flip_p / h);
        out.double_mc.push(double_p);
        out.double_ratio.push(double_p / (2.0 * h * 2.0 * h));
        out.c1_hat = out.c1_hat.max(flip_p / h);
        out.c2_hat = out.c2_hat.max(double_p / (2.0 * h * 2.0 * h));
    }
    Ok(out)
}
