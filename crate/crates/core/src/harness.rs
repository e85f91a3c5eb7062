//! End-to-end experiment runs: compile, optimize the angles, read out the
//! final distribution and score it against the exhaustive oracles.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::optimizer::{minimize, OptimizationTrace, OptimizerConfig, Termination};
use crate::qaoa::{
    evolve, marginalize_dense, marginalize_vertices, sampled_expectation, AngleSchedule,
    VertexDistribution, BETA_MAX, GAMMA_MAX,
};
use crate::qubo::{compile_tdp_qubo, default_penalty};
use crate::spin::build_energy_table;

pub const DEFAULT_SHOTS: u64 = 100_000;
pub const DEFAULT_TOP_K: usize = 10;

/// Linear-ramp start: `gamma_k = (k - 1/2)/q * gamma_scale` rising and
/// `beta_k = (1 - (k - 1/2)/q) * beta_scale` falling, clamped to the angle box.
pub fn initial_angles(layers: usize, gamma_scale: f64, beta_scale: f64) -> Result<AngleSchedule> {
    if layers == 0 {
        return Err(Error::domain("layer count must be at least 1"));
    }
    let q = layers as f64;
    let frac = |k: usize| (k as f64 + 0.5) / q;
    let gammas = (0..layers).map(|k| (frac(k) * gamma_scale).clamp(0.0, GAMMA_MAX)).collect();
    let betas = (0..layers).map(|k| ((1.0 - frac(k)) * beta_scale).clamp(0.0, BETA_MAX)).collect();
    AngleSchedule::new(gammas, betas)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum PenaltySpec {
    Absolute(f64),
    /// Multiplier of the vertex count.
    PerVertex(f64),
}

impl PenaltySpec {
    pub fn resolve(self, n_vertices: usize) -> f64 {
        match self {
            PenaltySpec::Absolute(p) => p,
            PenaltySpec::PerVertex(m) => m * n_vertices as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    /// File path or `builtin:paper6`.
    pub graph_source: String,
    pub layers: usize,
    /// `None` means 1.5 times the vertex count.
    pub penalty: Option<PenaltySpec>,
    pub max_iterations: usize,
    pub shots: u64,
    pub seed: u64,
    /// Score exact marginal probabilities instead of shot frequencies.
    pub exact_metrics: bool,
    pub gamma_scale: f64,
    pub beta_scale: f64,
    /// Half-width of the seeded uniform perturbation added to the ramp.
    pub init_jitter: f64,
    pub function_tolerance: f64,
    /// Estimate the objective from this many shots instead of exactly.
    pub objective_shots: Option<u64>,
    pub top_k: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            graph_source: crate::io::BUILTIN_EXAMPLE.to_string(),
            layers: 5,
            penalty: None,
            max_iterations: 500,
            shots: DEFAULT_SHOTS,
            seed: 0,
            exact_metrics: true,
            gamma_scale: 1.0,
            beta_scale: 1.0,
            init_jitter: 0.1,
            function_tolerance: 1e-8,
            objective_shots: None,
            top_k: DEFAULT_TOP_K,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(Error::domain("layer count must be at least 1"));
        }
        if self.max_iterations == 0 || self.shots == 0 {
            return Err(Error::domain("iteration budget and shots must be positive"));
        }
        if let Some(p) = self.penalty {
            let value = match p {
                PenaltySpec::Absolute(v) | PenaltySpec::PerVertex(v) => v,
            };
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::domain(format!("penalty must be positive, got {value}")));
            }
        }
        if !(self.init_jitter >= 0.0) || !(self.function_tolerance > 0.0) {
            return Err(Error::domain("jitter must be non-negative and tolerance positive"));
        }
        Ok(())
    }

    pub fn resolved_penalty(&self, g: &Graph) -> f64 {
        self.penalty.map_or_else(|| default_penalty(g), |p| p.resolve(g.n_vertices()))
    }
}

/// A graph with its ground-truth minimum total dominating sets.
#[derive(Debug, Clone)]
pub struct Instance {
    pub graph: Graph,
    pub min_tds_size: usize,
}

impl Instance {
    pub fn new(graph: Graph) -> Result<Self> {
        let min_tds_size = graph.minimum_tds_bruteforce()?.size;
        Ok(Instance { graph, min_tds_size })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub correct_probability: f64,
    pub optimal_probability: f64,
    pub z_star: String,
    pub z_star_probability: f64,
    pub z_star_is_tds: bool,
    pub z_star_is_minimal_tds: bool,
}

/// Scores a vertex distribution: mass on total dominating sets, mass on
/// minimum ones, and the most probable string (smallest label on ties).
pub fn compute_metrics(dist: &VertexDistribution, g: &Graph) -> Result<Metrics> {
    let min_size = g.minimum_tds_bruteforce()?.size;
    compute_metrics_with(dist, g, min_size)
}

pub fn compute_metrics_with(dist: &VertexDistribution, g: &Graph, min_tds_size: usize) -> Result<Metrics> {
    let n = g.n_vertices();
    if dist.n_vertices() != n {
        return Err(Error::domain(format!(
            "distribution covers {} vertices, graph has {n}",
            dist.n_vertices()
        )));
    }
    let total = dist.total();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::domain(format!("distribution sums to {total}, expected 1")));
    }
    let masks = g.neighbor_masks();
    // index bit n-1-i is vertex i; convert to a vertex bitmask
    let to_mask = |k: usize| (0..n).filter(|i| (k >> (n - 1 - i)) & 1 == 1).fold(0u64, |m, i| m | 1 << i);
    let mut correct = 0.0;
    let mut optimal = 0.0;
    let mut z_index = 0;
    for (k, &p) in dist.probs().iter().enumerate() {
        let mask = to_mask(k);
        if crate::graph::tds_mask(&masks, mask) {
            correct += p;
            if mask.count_ones() as usize == min_tds_size {
                optimal += p;
            }
        }
        if p > dist.probs()[z_index] {
            z_index = k;
        }
    }
    let z_mask = to_mask(z_index);
    let z_star_is_tds = crate::graph::tds_mask(&masks, z_mask);
    Ok(Metrics {
        correct_probability: correct,
        optimal_probability: optimal,
        z_star: dist.label(z_index),
        z_star_probability: dist.probs()[z_index],
        z_star_is_tds,
        z_star_is_minimal_tds: z_star_is_tds && z_mask.count_ones() as usize == min_tds_size,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceSummary {
    pub evaluations: usize,
    pub initial_value: f64,
    pub best_value: f64,
    pub termination: Termination,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub config: RunConfig,
    pub penalty: f64,
    pub n_qubits: usize,
    pub initial_schedule: AngleSchedule,
    pub optimized_schedule: AngleSchedule,
    pub trace: TraceSummary,
    /// Exact expectation of the cost Hamiltonian at the optimized angles.
    pub final_cost: f64,
    pub z_star: String,
    pub z_star_probability: f64,
    pub z_star_is_tds: bool,
    pub z_star_is_minimal_tds: bool,
    pub correct_probability: f64,
    pub optimal_probability: f64,
    pub min_tds_size: usize,
    pub top_k: Vec<(String, f64)>,
    pub runtime_ms: u64,
}

/// Everything a run produces, for writing artifacts.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub result: RunResult,
    pub trace: OptimizationTrace,
    /// Distribution the metrics were computed from.
    pub distribution: VertexDistribution,
    /// Sampled shot counts per vertex string.
    pub vertex_counts: Vec<u64>,
}

/// Derives an independent stream seed from a base seed and a salt.
pub fn mix_seed(base: u64, salt: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = base ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const SALT_INIT: u64 = 1;
const SALT_OPTIMIZER: u64 = 2;
const SALT_SAMPLING: u64 = 3;
const SALT_OBJECTIVE: u64 = 4;

pub fn run_single(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let graph = crate::io::load_graph(&config.graph_source)?;
    let instance = Instance::new(graph)?;
    run_on_instance(&instance, config)
}

pub fn run_on_instance(instance: &Instance, config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let started = Instant::now();
    let g = &instance.graph;
    let penalty = config.resolved_penalty(g);
    let model = compile_tdp_qubo(g, penalty)?;
    let table = build_energy_table(&model)?;

    let ramp = initial_angles(config.layers, config.gamma_scale, config.beta_scale)?;
    let bounds = AngleSchedule::param_bounds(config.layers);
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, SALT_INIT));
    let x0: Vec<f64> = ramp
        .to_params()
        .iter()
        .zip(&bounds)
        .map(|(&a, &(lo, hi))| {
            let jitter = if config.init_jitter > 0.0 {
                rng.gen_range(-config.init_jitter..=config.init_jitter)
            } else {
                0.0
            };
            (a + jitter).clamp(lo, hi)
        })
        .collect();
    let initial_schedule = AngleSchedule::from_params(&x0)?;

    let opt_config = OptimizerConfig {
        max_evaluations: config.max_iterations,
        function_tolerance: config.function_tolerance,
        bounds,
        seed: mix_seed(config.seed, SALT_OPTIMIZER),
    };
    let mut eval_count = 0u64;
    let objective = |params: &[f64]| -> f64 {
        eval_count += 1;
        let state = AngleSchedule::from_params(params).and_then(|s| evolve(&table, &s));
        let value = match (state, config.objective_shots) {
            (Ok(state), None) => state.expectation(&table),
            (Ok(state), Some(shots)) => {
                sampled_expectation(&state, &table, shots, mix_seed(config.seed ^ eval_count, SALT_OBJECTIVE))
            }
            (Err(e), _) => Err(e),
        };
        value.unwrap_or(f64::NAN)
    };
    let trace = minimize(objective, &x0, &opt_config)?;

    let optimized_schedule = AngleSchedule::from_params(&trace.best_point)?;
    let state = evolve(&table, &optimized_schedule)?;
    let final_cost = state.expectation(&table)?;
    let probs = state.probabilities();
    let n_vertices = g.n_vertices();
    let exact = marginalize_dense(&probs, n_vertices)?;
    let counts = state.sample(config.shots, mix_seed(config.seed, SALT_SAMPLING))?;
    let mut vertex_counts = vec![0u64; 1 << n_vertices];
    let shift = model.n_vars - n_vertices;
    for (&k, &c) in &counts {
        vertex_counts[(k >> shift) as usize] += c;
    }
    let distribution = if config.exact_metrics {
        exact
    } else {
        marginalize_vertices(&counts, model.n_vars, n_vertices)?
    };
    let metrics = compute_metrics_with(&distribution, g, instance.min_tds_size)?;
    let top_k = distribution.ranked().into_iter().take(config.top_k).collect();

    let result = RunResult {
        config: config.clone(),
        penalty,
        n_qubits: model.n_vars,
        initial_schedule,
        optimized_schedule,
        trace: TraceSummary {
            evaluations: trace.evaluations.len(),
            initial_value: trace.evaluations[0].value,
            best_value: trace.best_value,
            termination: trace.termination,
        },
        final_cost,
        z_star: metrics.z_star,
        z_star_probability: metrics.z_star_probability,
        z_star_is_tds: metrics.z_star_is_tds,
        z_star_is_minimal_tds: metrics.z_star_is_minimal_tds,
        correct_probability: metrics.correct_probability,
        optimal_probability: metrics.optimal_probability,
        min_tds_size: instance.min_tds_size,
        top_k,
        runtime_ms: started.elapsed().as_millis() as u64,
    };
    Ok(RunOutcome {
        result,
        trace,
        distribution,
        vertex_counts,
    })
}

/// Cartesian grid over layer counts, penalties and iteration budgets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepGrid {
    pub layers: Vec<usize>,
    pub penalties: Vec<PenaltySpec>,
    pub max_iterations: Vec<usize>,
}

impl SweepGrid {
    /// `q in {2,5,10,20}`, `P in {4.8, ..., 9.0}`, budgets `{50,100,200,500}`.
    pub fn standard() -> Self {
        SweepGrid {
            layers: vec![2, 5, 10, 20],
            penalties: [4.8, 5.4, 6.0, 6.6, 7.2, 7.8, 8.4, 9.0]
                .into_iter()
                .map(PenaltySpec::Absolute)
                .collect(),
            max_iterations: vec![50, 100, 200, 500],
        }
    }

    pub fn cells(&self) -> Vec<(usize, PenaltySpec, usize)> {
        let mut out = Vec::new();
        for &q in &self.layers {
            for &p in &self.penalties {
                for &m in &self.max_iterations {
                    out.push((q, p, m));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub q: usize,
    #[serde(rename = "P")]
    pub penalty: f64,
    pub maxiter: usize,
    pub seed: u64,
    pub z_star: String,
    pub is_tds: bool,
    pub is_min_tds: bool,
    pub correct_prob: f64,
    pub optimal_prob: f64,
    pub final_cost: f64,
    pub evals: usize,
    pub runtime_ms: u64,
    /// Set when the cell failed; the numeric fields are then NaN/zero.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub q: usize,
    #[serde(rename = "P")]
    pub penalty: f64,
    pub maxiter: usize,
    pub runs: usize,
    pub failures: usize,
    pub tds_runs: usize,
    pub min_tds_runs: usize,
    pub median_correct_prob: f64,
    pub median_optimal_prob: f64,
    pub median_final_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub summaries: Vec<CellSummary>,
}

impl SweepTable {
    /// Rows whose `z_star` is a total dominating set.
    pub fn tds_count(&self) -> usize {
        self.rows.iter().filter(|r| r.is_tds).count()
    }

    pub fn min_tds_count(&self) -> usize {
        self.rows.iter().filter(|r| r.is_min_tds).count()
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    let mut finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return f64::NAN;
    }
    finite.sort_by(f64::total_cmp);
    let m = finite.len() / 2;
    if finite.len() % 2 == 1 {
        finite[m]
    } else {
        0.5 * (finite[m - 1] + finite[m])
    }
}

/// Runs every grid cell for `replicates` seeds on up to `workers` threads.
/// Per-run seeds are derived from `template.seed` and the cell coordinates.
pub fn run_sweep(
    instance: &Instance,
    grid: &SweepGrid,
    replicates: usize,
    template: &RunConfig,
    workers: usize,
) -> Result<SweepTable> {
    let cells = grid.cells();
    let jobs: Vec<(usize, PenaltySpec, usize, usize)> = cells
        .iter()
        .flat_map(|&(q, p, m)| (0..replicates).map(move |r| (q, p, m, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Resource(format!("thread pool: {e}")))?;
    let n = instance.graph.n_vertices();
    let rows: Vec<SweepRow> = pool.install(|| {
        jobs.par_iter()
            .map(|&(q, p, m, r)| {
                let penalty = p.resolve(n);
                let seed = cell_seed(template.seed, q, penalty, m, r);
                let config = RunConfig {
                    layers: q,
                    penalty: Some(p),
                    max_iterations: m,
                    seed,
                    ..template.clone()
                };
                match run_on_instance(instance, &config) {
                    Ok(out) => {
                        let res = out.result;
                        SweepRow {
                            q,
                            penalty,
                            maxiter: m,
                            seed,
                            z_star: res.z_star,
                            is_tds: res.z_star_is_tds,
                            is_min_tds: res.z_star_is_minimal_tds,
                            correct_prob: res.correct_probability,
                            optimal_prob: res.optimal_probability,
                            final_cost: res.final_cost,
                            evals: res.trace.evaluations,
                            runtime_ms: res.runtime_ms,
                            error: None,
                        }
                    }
                    Err(e) => SweepRow {
                        q,
                        penalty,
                        maxiter: m,
                        seed,
                        z_star: String::new(),
                        is_tds: false,
                        is_min_tds: false,
                        correct_prob: f64::NAN,
                        optimal_prob: f64::NAN,
                        final_cost: f64::NAN,
                        evals: 0,
                        runtime_ms: 0,
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect()
    });

    let mut groups: BTreeMap<usize, Vec<&SweepRow>> = BTreeMap::new();
    for (i, row) in rows.iter().enumerate() {
        groups.entry(i / replicates.max(1)).or_default().push(row);
    }
    let summaries = groups
        .into_values()
        .map(|rs| {
            let pick = |f: fn(&SweepRow) -> f64| median(&mut rs.iter().map(|r| f(r)).collect::<Vec<_>>());
            CellSummary {
                q: rs[0].q,
                penalty: rs[0].penalty,
                maxiter: rs[0].maxiter,
                runs: rs.len(),
                failures: rs.iter().filter(|r| r.error.is_some()).count(),
                tds_runs: rs.iter().filter(|r| r.is_tds).count(),
                min_tds_runs: rs.iter().filter(|r| r.is_min_tds).count(),
                median_correct_prob: pick(|r| r.correct_prob),
                median_optimal_prob: pick(|r| r.optimal_prob),
                median_final_cost: pick(|r| r.final_cost),
            }
        })
        .collect();
    Ok(SweepTable { rows, summaries })
}

/// Seed for one `(cell, replicate)`.
pub fn cell_seed(base: u64, q: usize, penalty: f64, maxiter: usize, replicate: usize) -> u64 {
    [q as u64, penalty.to_bits(), maxiter as u64, replicate as u64]
        .into_iter()
        .fold(base, mix_seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_examples() {
        let s = initial_angles(1, 1.0, 1.0).unwrap();
        assert_eq!((s.gammas(), s.betas()), (&[0.5][..], &[0.5][..]));
        let s = initial_angles(2, 1.0, 1.0).unwrap();
        assert_eq!(s.gammas(), &[0.25, 0.75]);
        assert_eq!(s.betas(), &[0.75, 0.25]);
        let s = initial_angles(7, 2.0, 0.8).unwrap();
        assert!(s.gammas().windows(2).all(|w| w[0] <= w[1]));
        assert!(s.betas().windows(2).all(|w| w[0] >= w[1]));
        assert!(initial_angles(0, 1.0, 1.0).is_err());
    }

    #[test]
    fn metrics_point_masses() {
        let g = Graph::six_vertex_example();
        let m = compute_metrics(&VertexDistribution::point("100011").unwrap(), &g).unwrap();
        assert_eq!((m.correct_probability, m.optimal_probability), (1.0, 1.0));
        assert!(m.z_star_is_tds && m.z_star_is_minimal_tds);
        assert_eq!(m.z_star, "100011");

        let m = compute_metrics(&VertexDistribution::point("111111").unwrap(), &g).unwrap();
        assert_eq!((m.correct_probability, m.optimal_probability), (1.0, 0.0));
        assert!(m.z_star_is_tds && !m.z_star_is_minimal_tds);
    }

    #[test]
    fn metrics_uniform_counts_tds_subsets() {
        let g = Graph::six_vertex_example();
        let n_tds = (0..64usize)
            .filter(|&m| {
                let d: Vec<usize> = (0..6).filter(|i| m & (1 << i) != 0).collect();
                g.is_total_dominating_set(&d).unwrap()
            })
            .count();
        let d = VertexDistribution::new(6, vec![1.0 / 64.0; 64]).unwrap();
        let m = compute_metrics(&d, &g).unwrap();
        assert!((m.correct_probability - n_tds as f64 / 64.0).abs() < 1e-12);
        assert!((m.optimal_probability - 4.0 / 64.0).abs() < 1e-12);
        // every string ties; the smallest label wins
        assert_eq!(m.z_star, "000000");
    }

    #[test]
    fn metrics_reject_unnormalized() {
        let g = Graph::six_vertex_example();
        let d = VertexDistribution::new(6, vec![0.5 / 64.0; 64]).unwrap();
        assert!(compute_metrics(&d, &g).is_err());
    }

    #[test]
    fn seeds_are_distinct_per_cell() {
        let a = cell_seed(0, 2, 4.8, 50, 0);
        assert_ne!(a, cell_seed(0, 2, 4.8, 50, 1));
        assert_ne!(a, cell_seed(0, 5, 4.8, 50, 0));
        assert_ne!(a, cell_seed(1, 2, 4.8, 50, 0));
        assert_eq!(a, cell_seed(0, 2, 4.8, 50, 0));
    }

    #[test]
    fn medians() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&mut []).is_nan());
        assert_eq!(median(&mut [f64::NAN, 1.0]), 1.0);
    }

    #[test]
    fn standard_grid_has_128_cells() {
        assert_eq!(SweepGrid::standard().cells().len(), 128);
    }
}
