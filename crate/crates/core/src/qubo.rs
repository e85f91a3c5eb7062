//! Compilation of the total domination 0-1 program into a QUBO.
//!
//! Every covering constraint `sum_{j in N(i)} x_j >= 1` becomes a quadratic
//! penalty scaled by `P`:
//!
//! * `|N(i)| = 1`: `P (x_j - 1)^2`
//! * `|N(i)| = 2`: `P (1 - x_j - x_k + x_j x_k)`
//! * `|N(i)| >= 3`: `P (sum x_j - S_i - 1)^2`, where the slack
//!   `S_i in [0, |N(i)| - 1]` is expanded over fresh binary variables using
//!   [`slack_coefficients`].
//!
//! The objective `sum x_i` is added on top. Vertex variables take indices
//! `0..n`, slack variables follow, grouped by ascending constraint vertex.

use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Largest model accepted by the exhaustive minimizer.
pub const MAX_BRUTEFORCE_VARS: usize = 24;

/// `floor(log2(x))` for `x >= 1`.
pub(crate) fn floor_log2(x: u64) -> u32 {
    debug_assert!(x >= 1);
    63 - x.leading_zeros()
}

/// Binary-expansion weights for a slack ranging over `0..=n-1`.
///
/// With `L = floor(log2(n-1)) + 1` the weights are `1, 2, ..., 2^(L-2)`
/// followed by a final weight that tops the sum up to exactly `n - 1`, so
/// the reachable subset sums are exactly `0..=n-1`.
pub fn slack_coefficients(n: usize) -> Result<Vec<u64>> {
    if n < 3 {
        return Err(Error::domain(format!(
            "slack encoding needs a neighborhood of size >= 3, got {n}"
        )));
    }
    let top = (n - 1) as u64;
    let len = floor_log2(top) as usize + 1;
    let mut coeffs: Vec<u64> = (0..len - 1).map(|i| 1u64 << i).collect();
    let head: u64 = coeffs.iter().sum();
    coeffs.push(top - head);
    Ok(coeffs)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlackGroup {
    /// Vertex whose covering constraint this slack belongs to.
    pub vertex: usize,
    pub indices: Range<usize>,
    pub coefficients: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VariableRegistry {
    pub n_vertex_vars: usize,
    pub slack_groups: Vec<SlackGroup>,
}

impl VariableRegistry {
    pub fn total_vars(&self) -> usize {
        self.slack_groups
            .last()
            .map_or(self.n_vertex_vars, |g| g.indices.end)
    }

    pub fn n_slack_vars(&self) -> usize {
        self.total_vars() - self.n_vertex_vars
    }
}

/// One constraint's penalty before expansion.
#[derive(Debug, Clone, PartialEq)]
pub enum PenaltyTerm {
    /// `P (x_j - 1)^2` for a degree-1 vertex.
    Single { vertex: usize, j: usize },
    /// `P (1 - x_j - x_k + x_j x_k)` for a degree-2 vertex.
    Pair { vertex: usize, j: usize, k: usize },
    /// `P (sum_{j in N} x_j - sum_s c_s y_s - 1)^2`.
    Slack {
        vertex: usize,
        neighbors: Vec<usize>,
        slack: Vec<(usize, u64)>,
    },
}

impl PenaltyTerm {
    /// Unscaled penalty value (multiply by `P` for the model contribution).
    pub fn value(&self, x: &[bool]) -> f64 {
        let b = |i: usize| -> f64 { if x[i] { 1.0 } else { 0.0 } };
        match self {
            PenaltyTerm::Single { j, .. } => (b(*j) - 1.0).powi(2),
            PenaltyTerm::Pair { j, k, .. } => 1.0 - b(*j) - b(*k) + b(*j) * b(*k),
            PenaltyTerm::Slack { neighbors, slack, .. } => {
                let cover: f64 = neighbors.iter().map(|&j| b(j)).sum();
                let s: f64 = slack.iter().map(|&(i, c)| c as f64 * b(i)).sum();
                (cover - s - 1.0).powi(2)
            }
        }
    }

    pub fn vertex(&self) -> usize {
        match self {
            PenaltyTerm::Single { vertex, .. }
            | PenaltyTerm::Pair { vertex, .. }
            | PenaltyTerm::Slack { vertex, .. } => *vertex,
        }
    }
}

/// Penalty terms for every vertex in ascending vertex order, plus the
/// registry describing where slack variables live.
pub fn penalty_terms(g: &Graph) -> Result<(Vec<PenaltyTerm>, VariableRegistry)> {
    g.require_tds_feasible()?;
    let n = g.n_vertices();
    let mut registry = VariableRegistry {
        n_vertex_vars: n,
        slack_groups: Vec::new(),
    };
    let mut next_var = n;
    let mut terms = Vec::with_capacity(n);
    for (vertex, nbrs) in g.adjacency().iter().enumerate() {
        let term = match nbrs.as_slice() {
            [] => unreachable!("isolated vertices rejected above"),
            &[j] => PenaltyTerm::Single { vertex, j },
            &[j, k] => PenaltyTerm::Pair { vertex, j, k },
            _ => {
                let coefficients = slack_coefficients(nbrs.len())?;
                let indices = next_var..next_var + coefficients.len();
                next_var = indices.end;
                let slack = indices.clone().zip(coefficients.iter().copied()).collect();
                registry.slack_groups.push(SlackGroup {
                    vertex,
                    indices,
                    coefficients,
                });
                PenaltyTerm::Slack {
                    vertex,
                    neighbors: nbrs.clone(),
                    slack,
                }
            }
        };
        terms.push(term);
    }
    Ok((terms, registry))
}

/// Quadratic pseudo-boolean polynomial with `x^2` folded to `x`.
#[derive(Debug, Clone, Default)]
struct Polynomial {
    constant: f64,
    linear: BTreeMap<usize, f64>,
    quadratic: BTreeMap<(usize, usize), f64>,
}

impl Polynomial {
    fn add_constant(&mut self, c: f64) {
        self.constant += c;
    }

    fn add_linear(&mut self, i: usize, c: f64) {
        *self.linear.entry(i).or_insert(0.0) += c;
    }

    fn add_quadratic(&mut self, i: usize, j: usize, c: f64) {
        if i == j {
            self.add_linear(i, c);
        } else {
            *self.quadratic.entry((i.min(j), i.max(j))).or_insert(0.0) += c;
        }
    }

    /// Adds `scale * (offset + sum_k a_k y_k)^2`.
    fn add_square(&mut self, scale: f64, offset: f64, terms: &[(usize, f64)]) {
        self.add_constant(scale * offset * offset);
        for (k, &(i, a)) in terms.iter().enumerate() {
            self.add_linear(i, scale * (2.0 * offset * a + a * a));
            for &(j, b) in &terms[k + 1..] {
                self.add_quadratic(i, j, scale * 2.0 * a * b);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuboModel {
    pub n_vars: usize,
    pub constant: f64,
    pub linear: BTreeMap<usize, f64>,
    /// Keys are `(i, j)` with `i < j`.
    pub quadratic: BTreeMap<(usize, usize), f64>,
    pub penalty: f64,
    pub registry: VariableRegistry,
}

/// Compiles the total domination problem on `g` with penalty weight `p`.
///
/// `p = 0` is accepted and yields the bare objective.
pub fn compile_tdp_qubo(g: &Graph, p: f64) -> Result<QuboModel> {
    if !(p.is_finite() && p >= 0.0) {
        return Err(Error::domain(format!("penalty must be finite and non-negative, got {p}")));
    }
    let (terms, registry) = penalty_terms(g)?;
    let mut poly = Polynomial::default();
    for i in 0..g.n_vertices() {
        poly.add_linear(i, 1.0);
    }
    for term in &terms {
        match term {
            PenaltyTerm::Single { j, .. } => poly.add_square(p, -1.0, &[(*j, 1.0)]),
            PenaltyTerm::Pair { j, k, .. } => {
                poly.add_constant(p);
                poly.add_linear(*j, -p);
                poly.add_linear(*k, -p);
                poly.add_quadratic(*j, *k, p);
            }
            PenaltyTerm::Slack { neighbors, slack, .. } => {
                let vars: Vec<(usize, f64)> = neighbors
                    .iter()
                    .map(|&j| (j, 1.0))
                    .chain(slack.iter().map(|&(i, c)| (i, -(c as f64))))
                    .collect();
                poly.add_square(p, -1.0, &vars);
            }
        }
    }
    Ok(QuboModel {
        n_vars: registry.total_vars(),
        constant: poly.constant,
        linear: poly.linear,
        quadratic: poly.quadratic,
        penalty: p,
        registry,
    })
}

/// Default penalty weight: 1.5 times the vertex count.
pub fn default_penalty(g: &Graph) -> f64 {
    1.5 * g.n_vertices() as f64
}

impl QuboModel {
    pub fn evaluate(&self, x: &[bool]) -> Result<f64> {
        if x.len() != self.n_vars {
            return Err(Error::domain(format!(
                "assignment has length {}, model has {} variables",
                x.len(),
                self.n_vars
            )));
        }
        Ok(self.evaluate_unchecked(|i| x[i]))
    }

    /// Energy of computational basis state `index`, where variable `i` is
    /// bit `n_vars - 1 - i` (variable 0 is the leftmost character).
    pub fn evaluate_index(&self, index: u64) -> f64 {
        let n = self.n_vars;
        self.evaluate_unchecked(|i| (index >> (n - 1 - i)) & 1 == 1)
    }

    fn evaluate_unchecked(&self, bit: impl Fn(usize) -> bool) -> f64 {
        let mut total = self.constant;
        for (&i, &c) in &self.linear {
            if bit(i) {
                total += c;
            }
        }
        for (&(i, j), &c) in &self.quadratic {
            if bit(i) && bit(j) {
                total += c;
            }
        }
        total
    }

    /// Exhaustive minimum and every assignment within `1e-9` (relative) of it.
    pub fn min_bruteforce(&self) -> Result<(f64, Vec<Vec<bool>>)> {
        if self.n_vars > MAX_BRUTEFORCE_VARS {
            return Err(Error::Resource(format!(
                "exhaustive search limited to {MAX_BRUTEFORCE_VARS} variables, got {}",
                self.n_vars
            )));
        }
        let values: Vec<f64> = (0..1u64 << self.n_vars).map(|k| self.evaluate_index(k)).collect();
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let tol = 1e-9 * min.abs().max(1.0);
        let argmins = values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v - min <= tol)
            .map(|(k, _)| index_to_bits(k as u64, self.n_vars))
            .collect();
        Ok((min, argmins))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&QuboJson::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: QuboJson = serde_json::from_str(s)?;
        raw.try_into()
    }
}

/// Bits of basis index `k` in variable order (variable 0 first).
pub fn index_to_bits(k: u64, n: usize) -> Vec<bool> {
    (0..n).map(|i| (k >> (n - 1 - i)) & 1 == 1).collect()
}

pub fn bits_to_index(bits: &[bool]) -> u64 {
    bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
}

/// Variable-0-first `0`/`1` string.
pub fn bits_to_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

pub fn parse_bitstring(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::domain(format!("invalid bit character {other:?}"))),
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct SlackGroupJson {
    vertex: usize,
    indices: Vec<usize>,
    coefficients: Vec<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct QuboJson {
    n_vars: usize,
    constant: f64,
    linear: Vec<(usize, f64)>,
    quadratic: Vec<(usize, usize, f64)>,
    penalty: f64,
    n_vertex_vars: usize,
    slack_groups: Vec<SlackGroupJson>,
}

impl From<&QuboModel> for QuboJson {
    fn from(m: &QuboModel) -> Self {
        QuboJson {
            n_vars: m.n_vars,
            constant: m.constant,
            linear: m.linear.iter().map(|(&i, &c)| (i, c)).collect(),
            quadratic: m.quadratic.iter().map(|(&(i, j), &c)| (i, j, c)).collect(),
            penalty: m.penalty,
            n_vertex_vars: m.registry.n_vertex_vars,
            slack_groups: m
                .registry
                .slack_groups
                .iter()
                .map(|g| SlackGroupJson {
                    vertex: g.vertex,
                    indices: g.indices.clone().collect(),
                    coefficients: g.coefficients.clone(),
                })
                .collect(),
        }
    }
}

impl TryFrom<QuboJson> for QuboModel {
    type Error = Error;

    fn try_from(raw: QuboJson) -> Result<Self> {
        let mut slack_groups = Vec::with_capacity(raw.slack_groups.len());
        for g in raw.slack_groups {
            let start = g.indices.first().copied().unwrap_or(0);
            let contiguous = g.indices.iter().enumerate().all(|(k, &i)| i == start + k);
            if !contiguous || g.indices.len() != g.coefficients.len() {
                return Err(Error::domain(format!(
                    "slack group for vertex {} is not a contiguous index range matching its coefficients",
                    g.vertex
                )));
            }
            slack_groups.push(SlackGroup {
                vertex: g.vertex,
                indices: start..start + g.indices.len(),
                coefficients: g.coefficients,
            });
        }
        let in_range = raw.linear.iter().all(|&(i, _)| i < raw.n_vars)
            && raw.quadratic.iter().all(|&(i, j, _)| i < j && j < raw.n_vars);
        if !in_range {
            return Err(Error::domain("term index out of range or unordered pair"));
        }
        Ok(QuboModel {
            n_vars: raw.n_vars,
            constant: raw.constant,
            linear: raw.linear.into_iter().collect(),
            quadratic: raw.quadratic.into_iter().map(|(i, j, c)| ((i, j), c)).collect(),
            penalty: raw.penalty,
            registry: VariableRegistry {
                n_vertex_vars: raw.n_vertex_vars,
                slack_groups,
            },
        })
    }
}

/// Qubit counts for the total domination and plain domination encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QubitCounts {
    pub q_tdp: usize,
    pub q_dp: usize,
    pub gap: usize,
}

pub fn qubit_counts(g: &Graph) -> QubitCounts {
    let part = g.degree_partition();
    let n = g.n_vertices();
    let degrees: Vec<u64> = part.v_ge3.iter().map(|&v| g.adjacency()[v].len() as u64).collect();
    let q_tdp = n + degrees.iter().map(|&d| floor_log2(d - 1) as usize + 1).sum::<usize>();
    let q_dp = n + 2 * part.v2.len() + degrees.iter().map(|&d| floor_log2(d) as usize + 1).sum::<usize>();
    QubitCounts {
        q_tdp,
        q_dp,
        gap: q_dp - q_tdp,
    }
}

/// `2|V| + |V| log2(2|E|/|V| - 1)`. Only defined for graphs whose minimum
/// degree is at least 2.
pub fn qubit_upper_bound(g: &Graph) -> Result<f64> {
    let n = g.n_vertices();
    if n == 0 {
        return Err(Error::domain("bound undefined for the empty graph"));
    }
    if let Some(v) = (0..n).find(|&v| g.adjacency()[v].len() < 2) {
        return Err(Error::domain(format!(
            "bound requires minimum degree >= 2, vertex {v} has degree {}",
            g.adjacency()[v].len()
        )));
    }
    let nf = n as f64;
    let ratio = 2.0 * g.n_edges() as f64 / nf;
    if ratio <= 1.0 {
        return Err(Error::domain("2|E|/|V| must exceed 1"));
    }
    Ok(2.0 * nf + nf * (ratio - 1.0).log2())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reachable_sums(coeffs: &[u64]) -> Vec<u64> {
        let mut sums: Vec<u64> = (0..1u32 << coeffs.len())
            .map(|m| {
                coeffs
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| m & (1 << i) != 0)
                    .map(|(_, c)| c)
                    .sum()
            })
            .collect();
        sums.sort_unstable();
        sums.dedup();
        sums
    }

    #[test]
    fn slack_coefficient_examples() {
        assert_eq!(slack_coefficients(3).unwrap(), vec![1, 1]);
        assert_eq!(slack_coefficients(4).unwrap(), vec![1, 2]);
        assert_eq!(slack_coefficients(5).unwrap(), vec![1, 2, 1]);
        assert_eq!(reachable_sums(&[1, 2]), vec![0, 1, 2, 3]);
        assert_eq!(reachable_sums(&[1, 2, 1]), vec![0, 1, 2, 3, 4]);
        assert!(slack_coefficients(2).is_err());
        assert!(slack_coefficients(0).is_err());
    }

    #[test]
    fn slack_coefficients_cover_range_exactly() {
        for n in 3..200usize {
            let c = slack_coefficients(n).unwrap();
            assert_eq!(c.len(), floor_log2(n as u64 - 1) as usize + 1);
            assert_eq!(c.iter().sum::<u64>(), n as u64 - 1);
            assert!(c.iter().all(|&x| x > 0));
            if n < 40 {
                assert_eq!(reachable_sums(&c), (0..n as u64).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn six_vertex_example_layout() {
        let m = compile_tdp_qubo(&Graph::six_vertex_example(), 9.0).unwrap();
        assert_eq!(m.n_vars, 10);
        let groups = &m.registry.slack_groups;
        assert_eq!(groups.len(), 2);
        assert_eq!((groups[0].vertex, groups[0].indices.clone()), (2, 6..8));
        assert_eq!((groups[1].vertex, groups[1].indices.clone()), (4, 8..10));
        assert_eq!(groups[0].coefficients, vec![1, 1]);
    }

    #[test]
    fn six_vertex_example_values() {
        let m = compile_tdp_qubo(&Graph::six_vertex_example(), 9.0).unwrap();
        let x = parse_bitstring("1000110000").unwrap();
        assert_eq!(m.evaluate(&x).unwrap(), 3.0);
        assert_eq!(m.evaluate(&[false; 10]).unwrap(), 54.0);
        assert!(m.evaluate(&[false; 9]).is_err());
    }

    #[test]
    fn single_edge_model() {
        let g = Graph::new(2, [(0, 1)]).unwrap();
        let p = 3.0;
        let m = compile_tdp_qubo(&g, p).unwrap();
        assert_eq!(m.n_vars, 2);
        // x0 + x1 + P(x1-1)^2 + P(x0-1)^2 = 2P + (1-P)(x0 + x1)
        assert_eq!(m.constant, 2.0 * p);
        assert_eq!(m.linear.get(&0), Some(&(1.0 - p)));
        assert!(m.quadratic.is_empty());
        let (min, argmins) = m.min_bruteforce().unwrap();
        assert_eq!(min, 2.0);
        assert_eq!(argmins, vec![vec![true, true]]);
    }

    #[test]
    fn triangle_has_no_slack() {
        let g = Graph::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let m = compile_tdp_qubo(&g, 2.5).unwrap();
        assert_eq!(m.n_vars, 3);
        assert!(m.registry.slack_groups.is_empty());
    }

    #[test]
    fn compile_rejects_isolated_and_bad_penalty() {
        let g = Graph::new(3, [(0, 1)]).unwrap();
        assert!(matches!(compile_tdp_qubo(&g, 1.0), Err(Error::Infeasible { vertex: 2 })));
        let g = Graph::six_vertex_example();
        assert!(compile_tdp_qubo(&g, -1.0).is_err());
        assert!(compile_tdp_qubo(&g, f64::NAN).is_err());
    }

    #[test]
    fn zero_penalty_minimum_is_empty_set() {
        let m = compile_tdp_qubo(&Graph::six_vertex_example(), 0.0).unwrap();
        let (min, argmins) = m.min_bruteforce().unwrap();
        assert_eq!(min, 0.0);
        // slack bits are free when P = 0
        assert!(argmins.iter().all(|x| x[..6].iter().all(|b| !b)));
        assert!(argmins.contains(&vec![false; 10]));
    }

    #[test]
    fn six_vertex_example_argmins_project_to_minimal_tds() {
        let g = Graph::six_vertex_example();
        let m = compile_tdp_qubo(&g, 9.0).unwrap();
        let (min, argmins) = m.min_bruteforce().unwrap();
        assert_eq!(min, 3.0);
        // {1,2,4} and {2,4,5} each admit two zero-penalty slack settings
        assert_eq!(argmins.len(), 6);
        let mut strings: Vec<String> = argmins.iter().map(|x| bits_to_string(&x[..6])).collect();
        strings.sort();
        strings.dedup();
        assert_eq!(strings, ["001011", "011010", "100011", "111000"]);
    }

    #[test]
    fn qubit_counts_examples() {
        let c = qubit_counts(&Graph::six_vertex_example());
        assert_eq!(c, QubitCounts { q_tdp: 10, q_dp: 18, gap: 8 });
        let matching = Graph::new(4, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(qubit_counts(&matching), QubitCounts { q_tdp: 4, q_dp: 4, gap: 0 });
    }

    #[test]
    fn upper_bound_examples() {
        let b = qubit_upper_bound(&Graph::six_vertex_example()).unwrap();
        assert!((b - (12.0 + 6.0 * (4.0f64 / 3.0).log2())).abs() < 1e-12);
        assert!((b - 14.49).abs() < 0.005);
        let c5 = Graph::new(5, (0..5).map(|i| (i, (i + 1) % 5))).unwrap();
        assert_eq!(qubit_upper_bound(&c5).unwrap(), 10.0);
        let k4 = Graph::new(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        assert_eq!(qubit_upper_bound(&k4).unwrap(), 12.0);
        let path = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        assert!(qubit_upper_bound(&path).is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = compile_tdp_qubo(&Graph::six_vertex_example(), 4.8).unwrap();
        let s = m.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["n_vars"], 10);
        assert_eq!(v["slack_groups"][1]["indices"], serde_json::json!([8, 9]));
        assert_eq!(QuboModel::from_json(&s).unwrap(), m);
    }
}
