//! Closed-form engine: profile integrals over motif unions, exact finite-n
//! means and covariances of the count process, the limiting covariance
//! matrices in both regimes, normalization scales, and the ratio-statistic
//! limit covariance.

use crate::dynamics::OnOffParams;
use crate::graphs::{overlap_pairs, GraphError, SmallGraph};
use crate::rcm::Profile;
use crate::rng::{stream_rng, tag};
use rand::Rng;
use std::cell::RefCell;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TheoryError {
    #[error("dimension must be 1..=3, got {0}")]
    BadDimension(usize),
    #[error("parameters must be positive and finite: n={n}, nu={nu}")]
    BadParams { n: f64, nu: f64 },
    #[error("exponent {gamma} violates -q/(q-1) < gamma < 0 for q={q}")]
    BadExponent { gamma: f64, q: usize },
    #[error("exponent -1 sits on the regime boundary; pick a side explicitly")]
    BoundaryExponent,
    #[error("one-hop interaction radius {radius} reaches half the torus width")]
    SupportViolation { radius: f64 },
    #[error("ratio statistic needs equal orders, got {0} and {1}")]
    OrderMismatch(usize, usize),
    #[error("ratio statistic needs one motif to span the other")]
    NoContainment,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Unit-ball volumes for d = 1, 2, 3.
pub fn ball_volume(dim: usize) -> Result<f64, TheoryError> {
    match dim {
        1 => Ok(2.0),
        2 => Ok(std::f64::consts::PI),
        3 => Ok(4.0 * std::f64::consts::PI / 3.0),
        _ => Err(TheoryError::BadDimension(dim)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum IntegralMethod {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

/// Value of a motif-union integral, with a standard error when sampled.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MotifIntegral {
    pub value: f64,
    pub std_error: f64,
    pub method: IntegralMethod,
}

/// Asymptotic regime of a `nu_n` sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    Dense,
    Sparse,
}

/// One point of a `nu_n = c * n^gamma` sequence together with its regime.
/// A single `(n, nu)` pair has no regime by itself, so the regime is either
/// derived from the exponent or set explicitly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegimeSpec {
    pub n: f64,
    pub nu: f64,
    pub gamma: Option<f64>,
    pub regime: Regime,
}

impl RegimeSpec {
    /// Build from `nu = c * n^gamma`, validating the admissible exponent
    /// window `-q/(q-1) < gamma < 0` for every motif order.
    pub fn from_gamma(
        n: f64,
        c: f64,
        gamma: f64,
        motifs: &[SmallGraph],
    ) -> Result<Self, TheoryError> {
        let nu = c * n.powf(gamma);
        if !(n.is_finite() && n > 0.0 && nu.is_finite() && nu > 0.0) {
            return Err(TheoryError::BadParams { n, nu });
        }
        if gamma == -1.0 {
            return Err(TheoryError::BoundaryExponent);
        }
        for g in motifs {
            let q = g.q();
            if q >= 2 && !(-(q as f64) / (q as f64 - 1.0) < gamma && gamma < 0.0) {
                return Err(TheoryError::BadExponent { gamma, q });
            }
        }
        let regime = if gamma > -1.0 {
            Regime::Dense
        } else {
            Regime::Sparse
        };
        Ok(RegimeSpec {
            n,
            nu,
            gamma: Some(gamma),
            regime,
        })
    }

    pub fn explicit(n: f64, nu: f64, regime: Regime) -> Result<Self, TheoryError> {
        if !(n.is_finite() && n > 0.0 && nu.is_finite() && nu > 0.0) {
            return Err(TheoryError::BadParams { n, nu });
        }
        Ok(RegimeSpec {
            n,
            nu,
            gamma: None,
            regime,
        })
    }

    /// Centering scale for a motif of order `q`.
    pub fn psi(&self, q: usize, params: &OnOffParams) -> f64 {
        let rho_q = params.rho().powi(q as i32);
        match self.regime {
            Regime::Dense => rho_q * self.n.powf(q as f64 - 0.5) * self.nu.powi(q as i32 - 1),
            Regime::Sparse => {
                rho_q * (self.n.powi(q as i32) * self.nu.powi(q as i32 - 1)).sqrt()
            }
        }
    }

    /// Scale of the centered ratio statistic; carries no occupancy factor.
    pub fn zeta(&self, q: usize) -> f64 {
        match self.regime {
            Regime::Dense => self.n.sqrt(),
            Regime::Sparse => (self.n.powi(q as i32) * self.nu.powi(q as i32 - 1)).sqrt(),
        }
    }
}

/// Adaptive Simpson on `[a, b]`.
fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(
        f: &impl Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
            + rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
    }
    if b <= a {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, fa, b, fb, m, fm, whole, tol, 28)
}

/// Integrate with panel splits at the listed interior breakpoints, so jump
/// discontinuities never sit inside a Simpson panel.
fn integrate_piecewise(f: &impl Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64], tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|x| *x > a && *x < b).collect();
    cuts.push(a);
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        if w[1] - w[0] > 1e-14 {
            total += simpson(f, w[0], w[1], tol * (w[1] - w[0]) / (b - a));
        }
    }
    total
}

/// Draw the rescaled interaction variable from the profile viewed as a
/// density on the half line.
fn sample_radial(profile: &Profile, rng: &mut impl Rng) -> f64 {
    match profile {
        Profile::Indicator => rng.gen::<f64>(),
        Profile::Exponential { rate } => {
            use rand_distr::Distribution;
            rand_distr::Exp::new(*rate).expect("positive rate").sample(rng)
        }
        Profile::Table { edges, values } => {
            let mut u = rng.gen::<f64>();
            for (k, &v) in values.iter().enumerate() {
                let mass = v * (edges[k + 1] - edges[k]);
                if u < mass || k == values.len() - 1 {
                    return edges[k] + (u / v.max(1e-300)).min(edges[k + 1] - edges[k]);
                }
                u -= mass;
            }
            unreachable!("profile masses sum to one")
        }
    }
}

fn unit_direction(dim: usize, rng: &mut impl Rng) -> [f64; 3] {
    use rand_distr::Distribution;
    match dim {
        1 => [if rng.gen_bool(0.5) { 1.0 } else { -1.0 }, 0.0, 0.0],
        2 => {
            let [x, y]: [f64; 2] = rand_distr::UnitCircle.sample(rng);
            [x, y, 0.0]
        }
        _ => rand_distr::UnitSphere.sample(rng),
    }
}

fn euclid(a: &[f64; 3], b: &[f64; 3], dim: usize) -> f64 {
    let mut s = 0.0;
    for k in 0..dim {
        s += (a[k] - b[k]) * (a[k] - b[k]);
    }
    s.sqrt()
}

/// Numerical engine for one `(profile, dimension)` pair. Values of the
/// translation-reduced union integrals are cached by canonical graph key.
pub struct Engine {
    pub profile: Profile,
    pub dim: usize,
    pub mc_samples: usize,
    pub mc_seed: u64,
    pub quad_tol: f64,
    cache: RefCell<HashMap<u64, MotifIntegral>>,
}

impl Engine {
    pub fn new(profile: Profile, dim: usize) -> Result<Engine, TheoryError> {
        if !(1..=3).contains(&dim) {
            return Err(TheoryError::BadDimension(dim));
        }
        Ok(Engine {
            profile,
            dim,
            mc_samples: 200_000,
            mc_seed: 0xF00D,
            quad_tol: 1e-10,
            cache: RefCell::new(HashMap::new()),
        })
    }

    /// Effective end of the rescaled support used for truncation and
    /// quadrature limits.
    fn t_eff(&self) -> f64 {
        self.profile
            .compact_support()
            .unwrap_or_else(|| self.profile.support(1e-12))
    }

    /// Translation-reduced integral of the profile product over the edges of
    /// a connected graph, with one vertex pinned at the origin. Factorizes
    /// over the biconnected blocks of the graph.
    pub fn f_of(&self, h: &SmallGraph) -> Result<MotifIntegral, TheoryError> {
        let key = h.canonical_key();
        if let Some(hit) = self.cache.borrow().get(&key) {
            return Ok(*hit);
        }
        let mut value = 1.0;
        let mut rel_var = 0.0;
        let mut method = IntegralMethod::ClosedForm;
        for block in h.blocks() {
            let part = self.f_of_block(&block)?;
            value *= part.value;
            if part.value != 0.0 {
                rel_var += (part.std_error / part.value) * (part.std_error / part.value);
            }
            method = match (method, part.method) {
                (_, IntegralMethod::MonteCarlo) | (IntegralMethod::MonteCarlo, _) => {
                    IntegralMethod::MonteCarlo
                }
                (_, IntegralMethod::Quadrature) | (IntegralMethod::Quadrature, _) => {
                    IntegralMethod::Quadrature
                }
                _ => IntegralMethod::ClosedForm,
            };
        }
        let out = MotifIntegral {
            value,
            std_error: value.abs() * rel_var.sqrt(),
            method,
        };
        self.cache.borrow_mut().insert(key, out);
        Ok(out)
    }

    fn f_of_block(&self, block: &SmallGraph) -> Result<MotifIntegral, TheoryError> {
        if block.q() == 1 {
            return Ok(MotifIntegral {
                value: 1.0,
                std_error: 0.0,
                method: IntegralMethod::ClosedForm,
            });
        }
        // A single edge integrates to the unit-ball volume for any
        // normalized profile.
        if block.q() == 2 {
            return Ok(MotifIntegral {
                value: ball_volume(self.dim)?,
                std_error: 0.0,
                method: IntegralMethod::ClosedForm,
            });
        }
        if self.dim == 1 && block.q() <= 4 {
            return Ok(MotifIntegral {
                value: self.quad_block_d1(block),
                std_error: 0.0,
                method: IntegralMethod::Quadrature,
            });
        }
        self.mc_block(block)
    }

    /// Nested quadrature for d = 1: variables appear in a search order so
    /// every new variable has an already placed neighbor bounding its range;
    /// panels split at the profile's jump lines.
    fn quad_block_d1(&self, block: &SmallGraph) -> f64 {
        let order = block.search_order(0);
        let t = self.t_eff();
        let jumps = self.profile.breakpoints();
        let mut placed = [false; 8];
        placed[order[0]] = true;
        self.quad_rec(block, &order, 1, [0.0; 8], placed, t, &jumps)
    }

    #[allow(clippy::too_many_arguments)]
    fn quad_rec(
        &self,
        block: &SmallGraph,
        order: &[usize],
        idx: usize,
        ys: [f64; 8],
        placed: [bool; 8],
        t: f64,
        jumps: &[f64],
    ) -> f64 {
        if idx == order.len() {
            return 1.0;
        }
        let v = order[idx];
        let fixed: Vec<usize> = block.neighbors(v).filter(|&u| placed[u]).collect();
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        let mut breaks = Vec::new();
        for &u in &fixed {
            lo = lo.max(ys[u] - t);
            hi = hi.min(ys[u] + t);
            breaks.push(ys[u]);
            for &b in jumps {
                breaks.push(ys[u] + b);
                breaks.push(ys[u] - b);
            }
        }
        if hi <= lo {
            return 0.0;
        }
        let f = |y: f64| -> f64 {
            let mut w = 1.0;
            for &u in &fixed {
                w *= self.profile.eval((y - ys[u]).abs());
                if w == 0.0 {
                    return 0.0;
                }
            }
            let mut next_ys = ys;
            let mut next_placed = placed;
            next_ys[v] = y;
            next_placed[v] = true;
            w * self.quad_rec(block, order, idx + 1, next_ys, next_placed, t, jumps)
        };
        integrate_piecewise(&f, lo, hi, &breaks, self.quad_tol)
    }

    /// Spanning-tree importance sampler: tree displacements are drawn from
    /// the profile's radial law, leaving the product over non-tree edges as
    /// the integrand; each tree edge contributes one ball volume.
    fn mc_block(&self, block: &SmallGraph) -> Result<MotifIntegral, TheoryError> {
        let q = block.q();
        let order = block.search_order(0);
        // Tree edge per vertex: its first placed neighbor in search order.
        let mut parent = vec![usize::MAX; q];
        let mut seen = vec![false; q];
        seen[order[0]] = true;
        let mut tree_edges = Vec::new();
        for &v in &order[1..] {
            let p = block
                .neighbors(v)
                .find(|&u| seen[u])
                .expect("search order keeps blocks connected");
            parent[v] = p;
            seen[v] = true;
            tree_edges.push((p, v));
        }
        let non_tree: Vec<(usize, usize)> = block
            .edges()
            .into_iter()
            .filter(|&(u, v)| parent[v] != u && parent[u] != v)
            .collect();
        let kappa = ball_volume(self.dim)?;
        let scale = kappa.powi(q as i32 - 1);
        let mut rng = stream_rng(self.mc_seed, &[tag::MONTE_CARLO, block.canonical_key()]);
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        let mut pos = [[0.0f64; 3]; 8];
        for _ in 0..self.mc_samples {
            pos[order[0]] = [0.0; 3];
            for &(p, v) in &tree_edges {
                let r = sample_radial(&self.profile, &mut rng).powf(1.0 / self.dim as f64);
                let dir = unit_direction(self.dim, &mut rng);
                for k in 0..3 {
                    pos[v][k] = pos[p][k] + r * dir[k];
                }
            }
            let mut w = 1.0;
            for &(u, v) in &non_tree {
                w *= self
                    .profile
                    .eval(euclid(&pos[u], &pos[v], self.dim).powi(self.dim as i32));
                if w == 0.0 {
                    break;
                }
            }
            sum += w;
            sum2 += w * w;
        }
        let m = self.mc_samples as f64;
        let mean = sum / m;
        let var = (sum2 / m - mean * mean).max(0.0) / (m - 1.0);
        Ok(MotifIntegral {
            value: scale * mean,
            std_error: scale * var.sqrt(),
            method: IntegralMethod::MonteCarlo,
        })
    }

    /// One-hop interaction radius at scale `nu`.
    pub fn cutoff_radius(&self, nu: f64) -> f64 {
        (nu * self.t_eff()).powf(1.0 / self.dim as f64)
    }

    /// Torus version of the union integral at scale `nu`. When the motif
    /// diameter times the one-hop radius stays under half the torus width,
    /// the wrapped and unwrapped integrals agree and the value is
    /// `nu^(q-1) * F`; otherwise plain Monte Carlo on the torus is used.
    pub fn f_n_of(&self, h: &SmallGraph, nu: f64) -> Result<f64, TheoryError> {
        let q = h.q();
        let radius = self.cutoff_radius(nu);
        if radius >= 0.5 {
            return Err(TheoryError::SupportViolation { radius });
        }
        if (q as f64 - 1.0) * radius < 0.5 {
            return Ok(nu.powi(q as i32 - 1) * self.f_of(h)?.value);
        }
        // Wraparound matters: estimate on the torus directly.
        use crate::geometry::{torus_distance, TorusPoint};
        let mut rng = stream_rng(self.mc_seed, &[tag::MONTE_CARLO, h.canonical_key(), 1]);
        let mut sum = 0.0;
        let mut pts: Vec<TorusPoint> = Vec::with_capacity(q);
        for _ in 0..self.mc_samples {
            pts.clear();
            let mut coords = [0.0f64; 3];
            pts.push(TorusPoint::new(&coords[..self.dim]).expect("origin"));
            for _ in 1..q {
                for c in coords.iter_mut().take(self.dim) {
                    *c = rng.gen::<f64>() - 0.5;
                }
                pts.push(TorusPoint::new(&coords[..self.dim]).expect("uniform"));
            }
            let mut w = 1.0;
            for (u, v) in h.edges() {
                let dist = torus_distance(&pts[u], &pts[v], self.dim);
                w *= self.profile.eval(dist.powi(self.dim as i32) / nu);
                if w == 0.0 {
                    break;
                }
            }
            sum += w;
        }
        Ok(sum / self.mc_samples as f64)
    }

    /// Exact stationary mean of the count of `motif`.
    pub fn expected_count(
        &self,
        n: f64,
        nu: f64,
        motif: &SmallGraph,
        params: &OnOffParams,
    ) -> Result<f64, TheoryError> {
        let q = motif.q() as i32;
        let fn_val = self.f_n_of(motif, nu)?;
        Ok(fn_val * (params.rho() * n).powi(q) / motif.automorphism_count() as f64)
    }

    /// Exact two-time covariance of the counts of `gi` at time `t` and `gj`
    /// at time `s`: a sum over shared-point multiplicities of union-graph
    /// integrals weighted by the shared activity moment.
    pub fn covariance_counts(
        &self,
        n: f64,
        nu: f64,
        s: f64,
        t: f64,
        gi: &SmallGraph,
        gj: &SmallGraph,
        params: &OnOffParams,
    ) -> Result<f64, TheoryError> {
        let (qi, qj) = (gi.q(), gj.q());
        let rho = params.rho();
        let z = params.z(t - s);
        let mut total = 0.0;
        for m in 1..=qi.min(qj) {
            let mut f_sum = 0.0;
            for pair in overlap_pairs(gi, gj, m)? {
                f_sum += self.f_n_of(&pair.union, nu)?;
            }
            let mut weight = n.powi((qi + qj - m) as i32)
                * rho.powi((qi + qj) as i32)
                * z.powi(m as i32);
            weight /= factorial(m) * factorial(qi - m) * factorial(qj - m);
            total += weight * f_sum;
        }
        Ok(total)
    }

    /// Dense-regime structure constant: one-vertex overlaps.
    pub fn f_plus(&self, gi: &SmallGraph, gj: &SmallGraph) -> Result<f64, TheoryError> {
        let mut sum = 0.0;
        for pair in overlap_pairs(gi, gj, 1)? {
            sum += self.f_of(&pair.union)?.value;
        }
        Ok(sum / (factorial(gi.q() - 1) * factorial(gj.q() - 1)))
    }

    /// Sparse-regime structure constant: maximal overlaps.
    pub fn f_minus(&self, gi: &SmallGraph, gj: &SmallGraph) -> Result<f64, TheoryError> {
        let m = gi.q().min(gj.q());
        let mut sum = 0.0;
        for pair in overlap_pairs(gi, gj, m)? {
            sum += self.f_of(&pair.union)?.value;
        }
        Ok(sum / factorial(m))
    }

    /// Limiting covariance of the normalized counts.
    pub fn limit_sigma(
        &self,
        gi: &SmallGraph,
        gj: &SmallGraph,
        s: f64,
        t: f64,
        params: &OnOffParams,
        regime: Regime,
    ) -> Result<f64, TheoryError> {
        let z = params.z(t - s);
        match regime {
            Regime::Dense => Ok(z * self.f_plus(gi, gj)?),
            Regime::Sparse => {
                if gi.q() != gj.q() {
                    return Ok(0.0);
                }
                Ok(z.powi(gi.q() as i32) * self.f_minus(gi, gj)?)
            }
        }
    }

    /// Limit covariance of the centered, `zeta`-scaled ratio statistic of
    /// two equal-order motifs, one spanning the other: the delta-method
    /// composition of the limit matrix with the mean-derived direction.
    pub fn sigma_c(
        &self,
        g1: &SmallGraph,
        g2: &SmallGraph,
        s: f64,
        t: f64,
        params: &OnOffParams,
        regime: Regime,
    ) -> Result<f64, TheoryError> {
        if g1.q() != g2.q() {
            return Err(TheoryError::OrderMismatch(g1.q(), g2.q()));
        }
        if !(g1.contains_spanning(g2) || g2.contains_spanning(g1)) {
            return Err(TheoryError::NoContainment);
        }
        let a1 = g1.automorphism_count() as f64;
        let a2 = g2.automorphism_count() as f64;
        let f1 = self.f_of(g1)?.value;
        let f2 = self.f_of(g2)?.value;
        let s11 = self.limit_sigma(g1, g1, s, t, params, regime)?;
        let s12 = self.limit_sigma(g1, g2, s, t, params, regime)?;
        let s22 = self.limit_sigma(g2, g2, s, t, params, regime)?;
        Ok(a1 * a1 / (f2 * f2) * s11 - 2.0 * a1 * a2 * f1 / (f2 * f2 * f2) * s12
            + a2 * a2 * f1 * f1 / (f2 * f2 * f2 * f2) * s22)
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}
