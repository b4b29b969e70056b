//! Connection profiles and potential-edge sampling. A profile maps the
//! rescaled distance `|x-y|^d / nu` to a connection probability; it is
//! normalized to integrate to one on the half line so that `nu` alone
//! carries the interaction range.

use crate::geometry::{sample_poisson_points, torus_distance, CellIndex, GeometryError, TorusPoint};
use crate::rng::pair_uniform;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RcmError {
    #[error("profile values must lie in [0,1], found {0}")]
    ValueOutOfRange(f64),
    #[error("profile must integrate to 1, got {0}")]
    NotNormalized(f64),
    #[error("exponential rate must lie in (0,1], got {0}")]
    BadRate(f64),
    #[error("table needs increasing bin edges starting at 0 and one value per bin")]
    BadTable,
    #[error("model parameters must be positive and finite: n={n}, nu={nu}")]
    BadModel { n: f64, nu: f64 },
    #[error("dimension must be 1..=3, got {0}")]
    BadDimension(usize),
    #[error("one-hop interaction radius {radius} reaches half the torus width")]
    RangeTooLarge { radius: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Normalized connection profile `phi: [0, inf) -> [0, 1]` with unit integral.
#[derive(Clone, Debug, PartialEq)]
pub enum Profile {
    /// `phi(u) = 1` on `[0, 1]`, zero beyond.
    Indicator,
    /// `phi(u) = rate * exp(-rate * u)`; `rate <= 1` keeps values in range.
    Exponential { rate: f64 },
    /// Piecewise constant on `[edges[k], edges[k+1])`, zero past the last edge.
    Table { edges: Vec<f64>, values: Vec<f64> },
}

impl Profile {
    pub fn exponential(rate: f64) -> Result<Profile, RcmError> {
        if !(rate.is_finite() && rate > 0.0 && rate <= 1.0) {
            return Err(RcmError::BadRate(rate));
        }
        Ok(Profile::Exponential { rate })
    }

    pub fn table(edges: Vec<f64>, values: Vec<f64>) -> Result<Profile, RcmError> {
        if edges.len() != values.len() + 1
            || edges.is_empty()
            || edges[0] != 0.0
            || edges.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite())
        {
            return Err(RcmError::BadTable);
        }
        let mut mass = 0.0;
        for (k, &v) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(RcmError::ValueOutOfRange(v));
            }
            mass += v * (edges[k + 1] - edges[k]);
        }
        if (mass - 1.0).abs() > 1e-9 {
            return Err(RcmError::NotNormalized(mass));
        }
        Ok(Profile::Table { edges, values })
    }

    /// Connection probability at rescaled distance `u >= 0`.
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Profile::Indicator => {
                if u <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Profile::Exponential { rate } => rate * (-rate * u).exp(),
            Profile::Table { edges, values } => {
                if u < 0.0 || u >= *edges.last().unwrap() {
                    return 0.0;
                }
                let bin = edges.partition_point(|&e| e <= u) - 1;
                values[bin.min(values.len() - 1)]
            }
        }
    }

    /// End of the support for compactly supported profiles.
    pub fn compact_support(&self) -> Option<f64> {
        match self {
            Profile::Indicator => Some(1.0),
            Profile::Exponential { .. } => None,
            Profile::Table { edges, .. } => Some(*edges.last().unwrap()),
        }
    }

    /// Rescaled distance beyond which `phi <= eps`; the exact support end
    /// for compact profiles.
    pub fn support(&self, eps: f64) -> f64 {
        match self {
            Profile::Indicator | Profile::Table { .. } => self.compact_support().unwrap(),
            Profile::Exponential { rate } => {
                if eps >= *rate {
                    0.0
                } else {
                    (rate / eps).ln() / rate
                }
            }
        }
    }

    /// Jump locations of `phi`, used as quadrature panel breakpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Profile::Indicator => vec![1.0],
            Profile::Exponential { .. } => vec![],
            Profile::Table { edges, .. } => edges[1..].to_vec(),
        }
    }
}

/// Potential-edge structure over a fixed point cloud: edges are sampled once
/// and visibility is decided later by the endpoint states.
#[derive(Clone, Debug)]
pub struct PotentialGraph {
    /// Sorted neighbor lists, symmetric.
    pub neighbors: Vec<Vec<u32>>,
}

impl PotentialGraph {
    pub fn n_points(&self) -> usize {
        self.neighbors.len()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(|v| v.len()).sum::<usize>() / 2
    }

    pub fn has_edge(&self, a: u32, b: u32) -> bool {
        self.neighbors[a as usize].binary_search(&b).is_ok()
    }
}

/// A dynamic random connection model instance: Poisson intensity, scale
/// parameter, dimension, and connection profile.
#[derive(Clone, Debug)]
pub struct ConnectionModel {
    pub intensity: f64,
    pub nu: f64,
    pub dim: usize,
    pub profile: Profile,
}

impl ConnectionModel {
    pub fn new(intensity: f64, nu: f64, dim: usize, profile: Profile) -> Result<Self, RcmError> {
        if !(intensity.is_finite() && intensity > 0.0 && nu.is_finite() && nu > 0.0) {
            return Err(RcmError::BadModel { n: intensity, nu });
        }
        if !(1..=3).contains(&dim) {
            return Err(RcmError::BadDimension(dim));
        }
        Ok(ConnectionModel {
            intensity,
            nu,
            dim,
            profile,
        })
    }

    /// `phi(|x-y|^d / nu)`.
    pub fn pair_probability(&self, dist: f64) -> f64 {
        self.profile.eval(dist.powi(self.dim as i32) / self.nu)
    }

    /// Distance beyond which pairs are ignored during sampling. For compact
    /// profiles nothing is lost; otherwise the neglected pairs all have
    /// `phi <= eps`.
    pub fn cutoff_radius(&self, eps: f64) -> f64 {
        let u_max = self.profile.support(eps);
        (self.nu * u_max).powf(1.0 / self.dim as f64)
    }

    pub fn sample_points(&self, rng: &mut impl Rng) -> Result<Vec<TorusPoint>, RcmError> {
        Ok(sample_poisson_points(self.intensity, self.dim, rng)?)
    }

    /// Sample every potential edge with one uniform per unordered pair keyed
    /// by `(edge_seed, id, id)`, so the outcome does not depend on discovery
    /// order and couples monotonically across `nu` for monotone profiles.
    pub fn sample_potential_edges(
        &self,
        points: &[TorusPoint],
        edge_seed: u64,
        eps_cut: f64,
    ) -> Result<PotentialGraph, RcmError> {
        let mut neighbors: Vec<Vec<u32>> = vec![Vec::new(); points.len()];
        let radius = self.cutoff_radius(eps_cut);
        // The scaling regime keeps interactions local; a one-hop range
        // reaching half the torus width has no meaningful continuum analogue.
        if radius >= 0.5 {
            return Err(RcmError::RangeTooLarge { radius });
        }
        if points.is_empty() {
            return Ok(PotentialGraph { neighbors });
        }
        let index = CellIndex::build(points, self.dim, radius.max(1e-9))?;
        for a in 0..points.len() as u32 {
            for b in index.neighbors_of(a, radius)? {
                if b <= a {
                    continue;
                }
                let dist = torus_distance(&points[a as usize], &points[b as usize], self.dim);
                let p = self.pair_probability(dist);
                if p > 0.0 && pair_uniform(edge_seed, a as u64, b as u64) < p {
                    neighbors[a as usize].push(b);
                    neighbors[b as usize].push(a);
                }
            }
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Ok(PotentialGraph { neighbors })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, tag};
    use approx::assert_relative_eq;

    #[test]
    fn profiles_validate_and_evaluate() {
        assert!(Profile::exponential(1.5).is_err());
        assert!(Profile::exponential(0.0).is_err());
        let exp = Profile::exponential(0.5).unwrap();
        assert_relative_eq!(exp.eval(0.0), 0.5);
        assert_relative_eq!(exp.eval(2.0), 0.5 * (-1.0f64).exp());

        let ind = Profile::Indicator;
        assert_relative_eq!(ind.eval(1.0), 1.0);
        assert_relative_eq!(ind.eval(1.000001), 0.0);
        assert_eq!(ind.compact_support(), Some(1.0));

        // Two bins of width 1 and 3 with masses 0.7 and 0.3.
        let tab = Profile::table(vec![0.0, 1.0, 4.0], vec![0.7, 0.1]).unwrap();
        assert_relative_eq!(tab.eval(0.5), 0.7);
        assert_relative_eq!(tab.eval(1.0), 0.1);
        assert_relative_eq!(tab.eval(3.9999), 0.1);
        assert_relative_eq!(tab.eval(4.0), 0.0);
        assert_eq!(tab.breakpoints(), vec![1.0, 4.0]);

        assert!(Profile::table(vec![0.0, 1.0], vec![0.5]).is_err());
        assert!(Profile::table(vec![0.0, 0.5, 0.5], vec![1.0, 1.0]).is_err());
        assert!(Profile::table(vec![0.0, 0.5], vec![2.0]).is_err());
    }

    #[test]
    fn support_covers_the_tail() {
        let exp = Profile::exponential(1.0).unwrap();
        let s = exp.support(1e-6);
        assert_relative_eq!(exp.eval(s), 1e-6, max_relative = 1e-9);
        assert_eq!(Profile::Indicator.support(1e-12), 1.0);
    }

    #[test]
    fn pair_probability_rescales_distance() {
        let m = ConnectionModel::new(100.0, 0.04, 2, Profile::Indicator).unwrap();
        // d=2: connect iff dist^2 <= nu, radius 0.2.
        assert_relative_eq!(m.pair_probability(0.19), 1.0);
        assert_relative_eq!(m.pair_probability(0.21), 0.0);
        assert_relative_eq!(m.cutoff_radius(1e-6), 0.2);
    }

    #[test]
    fn model_parameters_are_validated() {
        assert!(ConnectionModel::new(0.0, 0.1, 1, Profile::Indicator).is_err());
        assert!(ConnectionModel::new(10.0, -0.1, 1, Profile::Indicator).is_err());
        assert!(ConnectionModel::new(10.0, 0.1, 4, Profile::Indicator).is_err());
    }

    #[test]
    fn edge_count_matches_first_moment() {
        // d=1 indicator: each ordered pair connects iff dist <= nu, so the
        // expected number of unordered potential edges is n^2 * nu.
        let m = ConnectionModel::new(300.0, 0.001, 1, Profile::Indicator).unwrap();
        let mut rng = stream_rng(21, &[tag::POINTS]);
        let reps = 60;
        let mut total = 0.0;
        for rep in 0..reps {
            let pts = m.sample_points(&mut rng).unwrap();
            let g = m.sample_potential_edges(&pts, 1000 + rep, 1e-6).unwrap();
            total += g.edge_count() as f64;
        }
        let mean = total / reps as f64;
        let want = 300.0f64.powi(2) * 0.001;
        assert!((mean - want).abs() < 0.12 * want, "mean {mean} want {want}");
    }

    #[test]
    fn soft_profile_matches_distance_law() {
        // Bin pairs by distance and compare the realized edge indicator sums
        // with their Poisson-binomial moments, pooled into a chi-square.
        let m = ConnectionModel::new(400.0, 0.02, 1, Profile::exponential(1.0).unwrap()).unwrap();
        let mut rng = stream_rng(22, &[tag::POINTS]);
        let pts = m.sample_points(&mut rng).unwrap();
        let g = m.sample_potential_edges(&pts, 77, 1e-9).unwrap();
        // Bin only the first few interaction lengths so every bin keeps a
        // healthy expected count.
        let span = 5.0 * m.nu;
        let bins = 5;
        let mut expect = vec![0.0; bins];
        let mut var = vec![0.0; bins];
        let mut seen = vec![0.0; bins];
        for a in 0..pts.len() {
            for b in (a + 1)..pts.len() {
                let dist = torus_distance(&pts[a], &pts[b], 1);
                if dist > span {
                    continue;
                }
                let k = ((dist / span) * bins as f64) as usize;
                let k = k.min(bins - 1);
                let p = m.pair_probability(dist);
                expect[k] += p;
                var[k] += p * (1.0 - p);
                if g.has_edge(a as u32, b as u32) {
                    seen[k] += 1.0;
                }
            }
        }
        let mut chi2 = 0.0;
        for k in 0..bins {
            assert!(expect[k] > 10.0, "bin {k} too thin: {}", expect[k]);
            chi2 += (seen[k] - expect[k]).powi(2) / var[k];
        }
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let crit = ChiSquared::new(bins as f64).unwrap().inverse_cdf(0.999);
        assert!(chi2 < crit, "chi2 {chi2} crit {crit}");
    }

    #[test]
    fn edges_are_monotone_in_nu_under_shared_seed() {
        let mut rng = stream_rng(23, &[tag::POINTS]);
        let base = ConnectionModel::new(500.0, 0.002, 1, Profile::Indicator).unwrap();
        let pts = base.sample_points(&mut rng).unwrap();
        let mut prev: Option<PotentialGraph> = None;
        for &nu in &[0.001, 0.002, 0.004, 0.008] {
            let m = ConnectionModel::new(500.0, nu, 1, Profile::Indicator).unwrap();
            let g = m.sample_potential_edges(&pts, 400, 1e-6).unwrap();
            if let Some(small) = &prev {
                for (a, list) in small.neighbors.iter().enumerate() {
                    for &b in list {
                        assert!(g.has_edge(a as u32, b), "lost edge {a}-{b} at nu={nu}");
                    }
                }
                assert!(g.edge_count() >= small.edge_count());
            }
            prev = Some(g);
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let m = ConnectionModel::new(200.0, 0.01, 2, Profile::exponential(0.8).unwrap()).unwrap();
        let mut rng = stream_rng(24, &[tag::POINTS]);
        let pts = m.sample_points(&mut rng).unwrap();
        let g1 = m.sample_potential_edges(&pts, 5, 1e-6).unwrap();
        let g2 = m.sample_potential_edges(&pts, 5, 1e-6).unwrap();
        assert_eq!(g1.neighbors, g2.neighbors);
        let g3 = m.sample_potential_edges(&pts, 6, 1e-6).unwrap();
        assert_ne!(g1.neighbors, g3.neighbors);
    }

    #[test]
    fn empty_cloud_yields_empty_graph() {
        let m = ConnectionModel::new(1.0, 0.01, 1, Profile::Indicator).unwrap();
        let g = m.sample_potential_edges(&[], 1, 1e-6).unwrap();
        assert_eq!(g.n_points(), 0);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn torus_scale_interactions_are_rejected() {
        let m = ConnectionModel::new(50.0, 0.5, 1, Profile::Indicator).unwrap();
        let mut rng = stream_rng(25, &[tag::POINTS]);
        let pts = m.sample_points(&mut rng).unwrap();
        assert!(matches!(
            m.sample_potential_edges(&pts, 1, 1e-6),
            Err(RcmError::RangeTooLarge { .. })
        ));
    }
}
