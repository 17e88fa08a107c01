//! Continuous-time simulation of the exclusion process generated by `t_m L_m`.
//!
//! Every oriented edge `e` carries an exponential clock of rate `t_m c(e, η)`;
//! when it rings the endpoint values are exchanged. Exchanges between equal
//! values do not move the state, so by default such clocks are switched off
//! (rate 0) and never scheduled. The next event is found with a binary sum
//! tree over edge rates, and after an exchange only the rates of edges whose
//! window contains one of the two endpoints are recomputed.

use std::io::Write;
use std::ops::ControlFlow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::Serialize;

use crate::bundle::JumpRate;
use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::field::{CompiledField, FieldState, TheoremFunctional};
use crate::stats::{wilson_interval, Z95};
use crate::tower::QuotientGraph;

/// The generator for replica `k` of a run seeded with `seed`: the ChaCha8
/// stream `k` of the 64-bit seed.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// Check `t_m > 0` and `√t_m ≤ 2 diam X_m`.
pub fn validate_time_scale(graph: &QuotientGraph, t_m: f64) -> Result<()> {
    if !(t_m > 0.0 && t_m.is_finite()) {
        return Err(Error::InvalidTimeScale(format!("t_m = {t_m} is not a positive number")));
    }
    let bound = 2.0 * graph.diameter() as f64;
    if t_m.sqrt() > bound {
        return Err(Error::InvalidTimeScale(format!(
            "sqrt(t_m) = {} exceeds 2 diam X_{} = {bound}",
            t_m.sqrt(),
            graph.level()
        )));
    }
    Ok(())
}

/// A time schedule `t_m` for a list of levels.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimeScale {
    levels: Vec<u32>,
    values: Vec<f64>,
    diameters: Vec<u32>,
}

impl TimeScale {
    /// `t_m = (diam X_m)^2`.
    pub fn diffusive(graphs: &[QuotientGraph]) -> Result<Self> {
        let values = graphs.iter().map(|g| (g.diameter() as f64).powi(2)).collect();
        Self::custom(graphs, values)
    }

    /// Explicit values, one per graph, validated to be strictly increasing in
    /// the level and to satisfy `√t_m ≤ 2 diam X_m`.
    pub fn custom(graphs: &[QuotientGraph], values: Vec<f64>) -> Result<Self> {
        if values.len() != graphs.len() {
            return Err(Error::InvalidTimeScale(format!(
                "{} values for {} levels",
                values.len(),
                graphs.len()
            )));
        }
        let mut order: Vec<usize> = (0..graphs.len()).collect();
        order.sort_by_key(|&k| graphs[k].level());
        for w in order.windows(2) {
            let (a, b) = (w[0], w[1]);
            if graphs[a].level() == graphs[b].level() {
                return Err(Error::InvalidTimeScale(format!("level {} listed twice", graphs[a].level())));
            }
            if values[a] >= values[b] {
                return Err(Error::InvalidTimeScale(format!(
                    "t_{} = {} is not below t_{} = {}",
                    graphs[a].level(),
                    values[a],
                    graphs[b].level(),
                    values[b]
                )));
            }
        }
        for (g, t) in graphs.iter().zip(&values) {
            validate_time_scale(g, *t)?;
        }
        Ok(Self {
            levels: graphs.iter().map(|g| g.level()).collect(),
            values,
            diameters: graphs.iter().map(|g| g.diameter()).collect(),
        })
    }

    pub fn get(&self, level: u32) -> Option<f64> {
        self.levels.iter().position(|l| *l == level).map(|k| self.values[k])
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn diameters(&self) -> &[u32] {
        &self.diameters
    }
}

/// Binary tree of partial sums over a fixed number of non-negative leaves.
/// Parents are always recomputed from their children, so no rounding drift
/// accumulates.
#[derive(Clone, Debug)]
struct SumTree {
    size: usize,
    tree: Vec<f64>,
}

impl SumTree {
    fn new(n: usize) -> Self {
        let size = n.next_power_of_two().max(1);
        Self {
            size,
            tree: vec![0.0; 2 * size],
        }
    }

    fn rebuild(&mut self, leaves: impl Iterator<Item = f64>) {
        self.tree.fill(0.0);
        for (k, v) in leaves.enumerate() {
            self.tree[self.size + k] = v;
        }
        for p in (1..self.size).rev() {
            self.tree[p] = self.tree[2 * p] + self.tree[2 * p + 1];
        }
    }

    #[inline]
    fn set(&mut self, k: usize, v: f64) {
        let mut p = self.size + k;
        if self.tree[p] == v {
            return;
        }
        self.tree[p] = v;
        p >>= 1;
        while p >= 1 {
            self.tree[p] = self.tree[2 * p] + self.tree[2 * p + 1];
            p >>= 1;
        }
    }

    #[inline]
    fn total(&self) -> f64 {
        self.tree[1]
    }

    /// Leaf `k` with `Σ_{j<k} w_j ≤ u < Σ_{j≤k} w_j`, never a zero-weight leaf.
    #[inline]
    fn find(&self, mut u: f64) -> usize {
        let mut p = 1;
        while p < self.size {
            let left = self.tree[2 * p];
            if u < left || self.tree[2 * p + 1] <= 0.0 {
                p *= 2;
            } else {
                u -= left;
                p = 2 * p + 1;
            }
        }
        p - self.size
    }
}

/// Receives the piecewise-constant path as it is generated.
pub trait PathObserver {
    /// The path stays at `eta` for `duration`. Returning `Break` ends the run.
    fn hold(&mut self, eta: &Configuration, duration: f64) -> ControlFlow<()>;

    /// The values at `x` and `y` were exchanged along edge `edge` at `time`;
    /// `eta` is the new configuration.
    fn jump(&mut self, _time: f64, _eta: &Configuration, _edge: usize, _x: usize, _y: usize) {}
}

/// Counters and end state of one simulated path.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    /// Exchanges that changed the configuration.
    pub events: u64,
    /// Clock rings on edges with equal endpoint values (only without thinning).
    pub idle_rings: u64,
    /// Time at which the run ended: the horizon, or earlier if stopped.
    pub end_time: f64,
    pub stopped_early: bool,
    pub final_configuration: Configuration,
}

/// The exclusion process on one quotient with a fixed rate and time scale.
/// Immutable; per-path state lives inside [`ExclusionProcess::run`].
#[derive(Clone, Debug)]
pub struct ExclusionProcess<'a> {
    graph: &'a QuotientGraph,
    rate: &'a JumpRate,
    t_m: f64,
    thinning: bool,
    /// Window vertices of each oriented edge.
    edge_offsets: Vec<u32>,
    edge_sites: Vec<u32>,
    /// Edges whose window contains each vertex.
    reader_offsets: Vec<u32>,
    readers: Vec<u32>,
}

impl<'a> ExclusionProcess<'a> {
    pub fn new(graph: &'a QuotientGraph, rate: &'a JumpRate, t_m: f64) -> Result<Self> {
        validate_time_scale(graph, t_m)?;
        if rate.bundle().spec() != graph.spec() {
            return Err(Error::InvalidArgument("jump rate and graph belong to different groups".into()));
        }
        rate.check_on(graph)?;
        let n = graph.num_vertices();
        let ne = graph.num_edges();
        let mut edge_offsets = Vec::with_capacity(ne + 1);
        let mut edge_sites = Vec::new();
        let mut lists: Vec<Vec<u32>> = vec![Vec::new(); n];
        edge_offsets.push(0);
        for e in 0..ne {
            let edge = graph.edge(e);
            for w in rate.bundle().window(edge.label) {
                let z = graph.right_mul(edge.origin, w);
                edge_sites.push(z as u32);
                if lists[z].last() != Some(&(e as u32)) {
                    lists[z].push(e as u32);
                }
            }
            edge_offsets.push(edge_sites.len() as u32);
        }
        let mut reader_offsets = Vec::with_capacity(n + 1);
        let mut readers = Vec::new();
        reader_offsets.push(0);
        for l in lists {
            readers.extend(l);
            reader_offsets.push(readers.len() as u32);
        }
        Ok(Self {
            graph,
            rate,
            t_m,
            thinning: true,
            edge_offsets,
            edge_sites,
            reader_offsets,
            readers,
        })
    }

    /// Keep clocks running on edges with equal endpoint values. The state path
    /// has the same law; only the number of idle rings differs.
    pub fn without_thinning(mut self) -> Self {
        self.thinning = false;
        self
    }

    pub fn graph(&self) -> &QuotientGraph {
        self.graph
    }

    pub fn rate(&self) -> &JumpRate {
        self.rate
    }

    pub fn time_scale(&self) -> f64 {
        self.t_m
    }

    #[inline]
    fn edge_rate(&self, e: usize, eta: &Configuration) -> f64 {
        let d = self.graph.degree();
        let (x, s) = (e / d, e % d);
        let y = self.graph.neighbor(x, s);
        if self.thinning && eta.get(x) == eta.get(y) {
            return 0.0;
        }
        let sites = &self.edge_sites[self.edge_offsets[e] as usize..self.edge_offsets[e + 1] as usize];
        let mut p = 0;
        for (j, &z) in sites.iter().enumerate() {
            if eta.get(z as usize) {
                p |= 1 << j;
            }
        }
        self.t_m * self.rate.bundle().value(s, p)
    }

    /// Simulate on `[0, horizon]` from `init`, reporting the path to `observer`.
    pub fn run<R: Rng + ?Sized, O: PathObserver>(
        &self,
        init: &Configuration,
        horizon: f64,
        rng: &mut R,
        observer: &mut O,
    ) -> Result<RunSummary> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!("horizon {horizon} must be positive")));
        }
        if init.len() != self.graph.num_vertices() {
            return Err(Error::InvalidArgument("initial configuration has the wrong size".into()));
        }
        let mut eta = init.clone();
        let mut tree = SumTree::new(self.graph.num_edges());
        tree.rebuild((0..self.graph.num_edges()).map(|e| self.edge_rate(e, &eta)));
        let mut summary = RunSummary {
            events: 0,
            idle_rings: 0,
            end_time: 0.0,
            stopped_early: false,
            final_configuration: Configuration::empty(0),
        };
        let mut t = 0.0;
        loop {
            let total = tree.total();
            let dt = if total > 0.0 {
                let draw: f64 = Exp1.sample(rng);
                draw / total
            } else {
                f64::INFINITY
            };
            if t + dt >= horizon {
                let flow = observer.hold(&eta, horizon - t);
                summary.end_time = horizon;
                summary.stopped_early = flow.is_break();
                summary.final_configuration = eta;
                return Ok(summary);
            }
            if observer.hold(&eta, dt).is_break() {
                summary.end_time = t + dt;
                summary.stopped_early = true;
                summary.final_configuration = eta;
                return Ok(summary);
            }
            t += dt;
            let e = tree.find(rng.random::<f64>() * total);
            let d = self.graph.degree();
            let x = e / d;
            let y = self.graph.neighbor(x, e % d);
            if eta.get(x) == eta.get(y) {
                summary.idle_rings += 1;
                continue;
            }
            eta.swap_sites(x, y);
            summary.events += 1;
            for z in [x, y] {
                for &f in &self.readers[self.reader_offsets[z] as usize..self.reader_offsets[z + 1] as usize] {
                    tree.set(f as usize, self.edge_rate(f as usize, &eta));
                }
            }
            observer.jump(t, &eta, e, x, y);
        }
    }

    /// Record the full trajectory.
    pub fn simulate<R: Rng + ?Sized>(&self, init: &Configuration, horizon: f64, rng: &mut R) -> Result<Trajectory> {
        let mut rec = Recorder { events: Vec::new() };
        self.run(init, horizon, rng, &mut rec)?;
        Ok(Trajectory {
            level: self.graph.level(),
            initial: init.clone(),
            events: rec.events,
            horizon,
        })
    }

    /// `∫_0^T V(η(t)) dt` for one path from `init`; with `stop_at` the run ends
    /// as soon as the integral reaches that value.
    pub fn integrate_field<R: Rng + ?Sized>(
        &self,
        field: &CompiledField,
        init: &Configuration,
        horizon: f64,
        stop_at: Option<f64>,
        rng: &mut R,
    ) -> Result<(f64, RunSummary)> {
        let mut obs = FieldIntegrator {
            field,
            state: field.state(init),
            integral: 0.0,
            stop_at,
        };
        let summary = self.run(init, horizon, rng, &mut obs)?;
        Ok((obs.integral, summary))
    }
}

struct Recorder {
    events: Vec<Event>,
}

impl PathObserver for Recorder {
    fn hold(&mut self, _eta: &Configuration, _duration: f64) -> ControlFlow<()> {
        ControlFlow::Continue(())
    }

    fn jump(&mut self, time: f64, _eta: &Configuration, edge: usize, x: usize, y: usize) {
        self.events.push(Event {
            time,
            edge,
            origin: x,
            terminus: y,
        });
    }
}

struct FieldIntegrator<'f> {
    field: &'f CompiledField,
    state: FieldState,
    integral: f64,
    stop_at: Option<f64>,
}

impl PathObserver for FieldIntegrator<'_> {
    fn hold(&mut self, _eta: &Configuration, duration: f64) -> ControlFlow<()> {
        self.integral += self.state.value() * duration;
        match self.stop_at {
            Some(c) if self.integral >= c => ControlFlow::Break(()),
            _ => ControlFlow::Continue(()),
        }
    }

    fn jump(&mut self, _time: f64, eta: &Configuration, _edge: usize, x: usize, y: usize) {
        self.state.apply_swap(self.field, eta, x, y);
    }
}

/// One exchange along a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Event {
    pub time: f64,
    pub edge: usize,
    pub origin: usize,
    pub terminus: usize,
}

/// A piecewise-constant path on `[0, T]` with exact event times.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub level: u32,
    pub initial: Configuration,
    pub events: Vec<Event>,
    pub horizon: f64,
}

impl Trajectory {
    /// Visit each constant piece as `(start, end, configuration)`.
    pub fn for_each_piece(&self, mut visit: impl FnMut(f64, f64, &Configuration)) {
        let mut eta = self.initial.clone();
        let mut t = 0.0;
        for ev in &self.events {
            visit(t, ev.time, &eta);
            eta.swap_sites(ev.origin, ev.terminus);
            t = ev.time;
        }
        visit(t, self.horizon, &eta);
    }

    /// Exact `∫_0^T G(η(t)) dt`.
    pub fn integrate(&self, mut g: impl FnMut(&Configuration) -> f64) -> f64 {
        let mut acc = 0.0;
        self.for_each_piece(|a, b, eta| acc += (b - a) * g(eta));
        acc
    }

    /// `η(t)` for the right-continuous path.
    pub fn configuration_at(&self, time: f64) -> Configuration {
        let mut eta = self.initial.clone();
        for ev in self.events.iter().take_while(|ev| ev.time <= time) {
            eta.swap_sites(ev.origin, ev.terminus);
        }
        eta
    }

    pub fn final_configuration(&self) -> Configuration {
        self.configuration_at(self.horizon)
    }

    /// CSV with columns `time,origin,terminus`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time", "origin", "terminus"])?;
        for ev in &self.events {
            w.write_record([ev.time.to_string(), ev.origin.to_string(), ev.terminus.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Initial law of each replica.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialLaw {
    Bernoulli(f64),
}

impl InitialLaw {
    fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Configuration {
        match *self {
            InitialLaw::Bernoulli(rho) => Configuration::random(n, rho, rng),
        }
    }
}

/// `∫_0^T V dt` for `replicas` independent paths started from `law`, in
/// replica order. Replica `k` uses [`replica_rng`]`(seed, k)` both for its
/// initial configuration and its path.
pub fn sample_integrals(
    process: &ExclusionProcess<'_>,
    field: &CompiledField,
    law: InitialLaw,
    horizon: f64,
    replicas: u64,
    seed: u64,
    stop_at: Option<f64>,
) -> Result<Vec<f64>> {
    let n = process.graph().num_vertices();
    (0..replicas)
        .into_par_iter()
        .map(|k| {
            let mut rng = replica_rng(seed, k);
            let init = law.sample(n, &mut rng);
            process.integrate_field(field, &init, horizon, stop_at, &mut rng).map(|(v, _)| v)
        })
        .collect()
}

/// Monte Carlo estimate of `P(|V_m|^{-1} ∫_0^T V dt ≥ δ)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExceedanceEstimate {
    pub replicas: u64,
    pub hits: u64,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// `|V_m|^{-1} log p̂`; with no hits, the upper bound `|V_m|^{-1} log ci_hi`.
    pub log_rate: f64,
    pub log_rate_lo: f64,
    pub log_rate_hi: f64,
    /// No hits were observed, so only an upper bound is available.
    pub censored: bool,
    /// Decided without simulation (`δ ≤ 0` or `δ > C(f) T`).
    pub deterministic: bool,
}

/// Estimate the exceedance probability of the time-integrated functional from
/// the product Bernoulli(1/2) start.
pub fn estimate_exceedance(
    process: &ExclusionProcess<'_>,
    functional: &TheoremFunctional,
    delta: f64,
    horizon: f64,
    replicas: u64,
    seed: u64,
) -> Result<ExceedanceEstimate> {
    if replicas == 0 {
        return Err(Error::InvalidArgument("at least one replica is needed".into()));
    }
    let graph = process.graph();
    let n = graph.num_vertices() as f64;
    let exact = |p: f64| {
        let lr = p.ln() / n;
        ExceedanceEstimate {
            replicas,
            hits: (p * replicas as f64) as u64,
            p_hat: p,
            ci_lo: p,
            ci_hi: p,
            log_rate: lr,
            log_rate_lo: lr,
            log_rate_hi: lr,
            censored: false,
            deterministic: true,
        }
    };
    if delta <= 0.0 {
        return Ok(exact(1.0));
    }
    if delta > functional.bundle().c_f() * horizon {
        return Ok(exact(0.0));
    }
    let field = CompiledField::new(functional, graph);
    let threshold = delta * n;
    let integrals = sample_integrals(process, &field, InitialLaw::Bernoulli(0.5), horizon, replicas, seed, Some(threshold))?;
    let hits = integrals.iter().filter(|v| **v >= threshold).count() as u64;
    Ok(summarize_hits(hits, replicas, n))
}

/// Point estimate, Wilson interval and normalised log-rate for `hits` out of `replicas`.
pub fn summarize_hits(hits: u64, replicas: u64, sites: f64) -> ExceedanceEstimate {
    let p_hat = hits as f64 / replicas as f64;
    let (ci_lo, ci_hi) = wilson_interval(hits, replicas, Z95);
    let censored = hits == 0;
    let log_rate_hi = ci_hi.ln() / sites;
    let log_rate_lo = ci_lo.ln() / sites;
    let log_rate = if censored { log_rate_hi } else { p_hat.ln() / sites };
    ExceedanceEstimate {
        replicas,
        hits,
        p_hat,
        ci_lo,
        ci_hi,
        log_rate,
        log_rate_lo,
        log_rate_hi,
        censored,
        deterministic: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_tree_sampling_skips_zero_leaves() {
        let mut t = SumTree::new(5);
        t.rebuild([1.0, 0.0, 2.0, 0.0, 1.0].into_iter());
        assert_eq!(t.total(), 4.0);
        assert_eq!(t.find(0.5), 0);
        assert_eq!(t.find(1.0), 2);
        assert_eq!(t.find(2.999), 2);
        assert_eq!(t.find(3.5), 4);
        assert_eq!(t.find(4.0), 4);
        t.set(4, 0.0);
        assert_eq!(t.find(3.0), 2);
    }
}
