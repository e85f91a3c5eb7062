//! Dense statevector simulation of the layered QAOA circuit.
//!
//! Basis index `k` holds variable `i` in bit `n - 1 - i`, matching
//! [`EnergyTable`]. The cost unitary `exp(-i gamma H_c)` is a diagonal phase
//! read off the energy table; the mixer `exp(-i beta sum_j X_j)` factorizes
//! into one `[[cos b, -i sin b], [-i sin b, cos b]]` rotation per qubit.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::qubo::{bits_to_string, index_to_bits};
use crate::spin::{EnergyTable, MAX_QUBITS};

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `H^{(x)n} |0...0>`: every amplitude equals `2^{-n/2}`.
    pub fn uniform(n: usize) -> Result<Self> {
        check_register(n)?;
        let dim = 1usize << n;
        let amp = Complex64::new((dim as f64).sqrt().recip(), 0.0);
        Ok(StateVector {
            n_qubits: n,
            amplitudes: vec![amp; dim],
        })
    }

    /// Computational basis state `|k>`.
    pub fn basis(n: usize, k: usize) -> Result<Self> {
        check_register(n)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n];
        *amplitudes
            .get_mut(k)
            .ok_or_else(|| Error::domain(format!("basis index {k} out of range for {n} qubits")))? =
            Complex64::new(1.0, 0.0);
        Ok(StateVector { n_qubits: n, amplitudes })
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if !len.is_power_of_two() {
            return Err(Error::domain(format!("amplitude count {len} is not a power of two")));
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_register(n_qubits)?;
        Ok(StateVector { n_qubits, amplitudes })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(Complex64::norm_sqr).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(Complex64::norm_sqr).collect()
    }

    fn check_table(&self, table: &EnergyTable) -> Result<()> {
        if table.n_vars() != self.n_qubits {
            return Err(Error::domain(format!(
                "energy table has {} variables, state has {} qubits",
                table.n_vars(),
                self.n_qubits
            )));
        }
        Ok(())
    }

    /// `amplitude[k] *= exp(-i gamma E_k)`.
    pub fn apply_cost_layer(&mut self, table: &EnergyTable, gamma: f64) -> Result<()> {
        self.check_table(table)?;
        if gamma == 0.0 {
            return Ok(());
        }
        for (amp, &e) in self.amplitudes.iter_mut().zip(table.energies()) {
            *amp *= Complex64::from_polar(1.0, -gamma * e);
        }
        Ok(())
    }

    /// `exp(-i beta X)` on every qubit.
    pub fn apply_mixer_layer(&mut self, beta: f64) {
        if beta == 0.0 {
            return;
        }
        let (s, c) = beta.sin_cos();
        let mis = Complex64::new(0.0, -s);
        let dim = self.amplitudes.len();
        for q in 0..self.n_qubits {
            let stride = 1usize << q;
            for block in (0..dim).step_by(stride << 1) {
                for lo in block..block + stride {
                    let hi = lo + stride;
                    let a = self.amplitudes[lo];
                    let b = self.amplitudes[hi];
                    self.amplitudes[lo] = a * c + b * mis;
                    self.amplitudes[hi] = a * mis + b * c;
                }
            }
        }
    }

    /// `<psi| H_c |psi>`.
    pub fn expectation(&self, table: &EnergyTable) -> Result<f64> {
        self.check_table(table)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(table.energies())
            .map(|(a, &e)| a.norm_sqr() * e)
            .sum())
    }

    /// Multinomial draw of `shots` measurements.
    pub fn sample(&self, shots: u64, seed: u64) -> Result<BTreeMap<u64, u64>> {
        sample_probabilities(&self.probabilities(), shots, seed)
    }
}

fn check_register(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("register needs at least one qubit"));
    }
    if n > MAX_QUBITS {
        return Err(Error::Resource(format!("{n} qubits exceeds the simulator limit of {MAX_QUBITS}")));
    }
    Ok(())
}

/// Per-layer angles. Gammas live in `[0, 2 pi]`, betas in `[0, pi]`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AngleSchedule {
    gammas: Vec<f64>,
    betas: Vec<f64>,
}

pub const GAMMA_MAX: f64 = 2.0 * PI;
pub const BETA_MAX: f64 = PI;

impl AngleSchedule {
    pub fn new(gammas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        if gammas.is_empty() || gammas.len() != betas.len() {
            return Err(Error::domain(format!(
                "schedule needs equal, nonzero layer counts (got {} gammas, {} betas)",
                gammas.len(),
                betas.len()
            )));
        }
        let in_range = |v: &[f64], hi: f64| v.iter().all(|&a| (0.0..=hi).contains(&a));
        if !in_range(&gammas, GAMMA_MAX) || !in_range(&betas, BETA_MAX) {
            return Err(Error::domain("angles must satisfy gamma in [0, 2pi] and beta in [0, pi]"));
        }
        Ok(AngleSchedule { gammas, betas })
    }

    /// Inverse of [`AngleSchedule::to_params`].
    pub fn from_params(params: &[f64]) -> Result<Self> {
        if !params.len().is_multiple_of(2) {
            return Err(Error::domain("parameter vector must have even length"));
        }
        let (g, b) = params.split_at(params.len() / 2);
        AngleSchedule::new(g.to_vec(), b.to_vec())
    }

    /// `[gamma_1, ..., gamma_q, beta_1, ..., beta_q]`.
    pub fn to_params(&self) -> Vec<f64> {
        self.gammas.iter().chain(&self.betas).copied().collect()
    }

    /// Box bounds matching the [`AngleSchedule::to_params`] layout.
    pub fn param_bounds(layers: usize) -> Vec<(f64, f64)> {
        let mut b = vec![(0.0, GAMMA_MAX); layers];
        b.extend(std::iter::repeat_n((0.0, BETA_MAX), layers));
        b
    }

    pub fn layers(&self) -> usize {
        self.gammas.len()
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    /// Appends a layer.
    pub fn extended(&self, gamma: f64, beta: f64) -> Result<Self> {
        let mut gammas = self.gammas.clone();
        let mut betas = self.betas.clone();
        gammas.push(gamma);
        betas.push(beta);
        AngleSchedule::new(gammas, betas)
    }
}

/// Runs the circuit from the uniform superposition, cost layer first within
/// each layer.
pub fn evolve(table: &EnergyTable, schedule: &AngleSchedule) -> Result<StateVector> {
    let mut state = StateVector::uniform(table.n_vars())?;
    for (&gamma, &beta) in schedule.gammas.iter().zip(&schedule.betas) {
        state.apply_cost_layer(table, gamma)?;
        state.apply_mixer_layer(beta);
    }
    Ok(state)
}

pub fn sample_probabilities(probs: &[f64], shots: u64, seed: u64) -> Result<BTreeMap<u64, u64>> {
    if shots == 0 {
        return Err(Error::domain("shots must be positive"));
    }
    let dist = WeightedIndex::new(probs).map_err(|e| Error::domain(format!("bad distribution: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = BTreeMap::new();
    for _ in 0..shots {
        *counts.entry(dist.sample(&mut rng) as u64).or_insert(0) += 1;
    }
    Ok(counts)
}

/// Sample mean of the energy over `shots` measurements.
pub fn sampled_expectation(state: &StateVector, table: &EnergyTable, shots: u64, seed: u64) -> Result<f64> {
    state.check_table(table)?;
    let counts = state.sample(shots, seed)?;
    let total: f64 = counts
        .iter()
        .map(|(&k, &c)| c as f64 * table.energies()[k as usize])
        .sum();
    Ok(total / shots as f64)
}

/// Probability over vertex assignments, slack bits summed out. Entry `v` is
/// the vertex prefix whose bit `n_vertices - 1 - i` is vertex `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexDistribution {
    n_vertices: usize,
    probs: Vec<f64>,
}

impl VertexDistribution {
    pub fn new(n_vertices: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != 1usize << n_vertices {
            return Err(Error::domain(format!(
                "expected {} entries for {n_vertices} vertices, got {}",
                1usize << n_vertices,
                probs.len()
            )));
        }
        Ok(VertexDistribution { n_vertices, probs })
    }

    /// Point mass on one vertex string.
    pub fn point(bits: &str) -> Result<Self> {
        let x = crate::qubo::parse_bitstring(bits)?;
        let mut probs = vec![0.0; 1 << x.len()];
        probs[crate::qubo::bits_to_index(&x) as usize] = 1.0;
        VertexDistribution::new(x.len(), probs)
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn prob_of(&self, bits: &str) -> Result<f64> {
        let x = crate::qubo::parse_bitstring(bits)?;
        if x.len() != self.n_vertices {
            return Err(Error::domain("bit string length does not match vertex count"));
        }
        Ok(self.probs[crate::qubo::bits_to_index(&x) as usize])
    }

    pub fn bits(&self, index: usize) -> Vec<bool> {
        index_to_bits(index as u64, self.n_vertices)
    }

    pub fn label(&self, index: usize) -> String {
        bits_to_string(&self.bits(index))
    }

    /// `(label, probability)` sorted by descending probability, ties by label.
    pub fn ranked(&self) -> Vec<(String, f64)> {
        let mut order: Vec<usize> = (0..self.probs.len()).collect();
        order.sort_by(|&a, &b| self.probs[b].total_cmp(&self.probs[a]).then(a.cmp(&b)));
        order.into_iter().map(|k| (self.label(k), self.probs[k])).collect()
    }

    /// Total-variation distance to another distribution on the same vertices.
    pub fn total_variation(&self, other: &VertexDistribution) -> Result<f64> {
        if self.n_vertices != other.n_vertices {
            return Err(Error::domain("distributions have different supports"));
        }
        Ok(0.5 * self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).sum::<f64>())
    }
}

/// Probability or shot count attached to a basis state.
pub trait Weight: Copy {
    fn weight(self) -> f64;
}

impl Weight for f64 {
    fn weight(self) -> f64 {
        self
    }
}

impl Weight for u64 {
    fn weight(self) -> f64 {
        self as f64
    }
}

/// Sums weights over all slack completions of each vertex prefix and
/// normalizes. `dist` maps basis index to probability or count.
pub fn marginalize_vertices<W: Weight>(
    dist: &BTreeMap<u64, W>,
    n_qubits: usize,
    n_vertex_vars: usize,
) -> Result<VertexDistribution> {
    if n_vertex_vars > n_qubits {
        return Err(Error::domain(format!(
            "{n_vertex_vars} vertex variables exceed {n_qubits} qubits"
        )));
    }
    let shift = n_qubits - n_vertex_vars;
    let mut probs = vec![0.0; 1 << n_vertex_vars];
    for (&k, &w) in dist {
        if k >> n_qubits != 0 {
            return Err(Error::domain(format!("basis index {k} out of range")));
        }
        probs[(k >> shift) as usize] += w.weight();
    }
    normalize(n_vertex_vars, probs)
}

/// Dense counterpart of [`marginalize_vertices`] for exact probabilities.
pub fn marginalize_dense(probs: &[f64], n_vertex_vars: usize) -> Result<VertexDistribution> {
    let n_qubits = probs.len().trailing_zeros() as usize;
    if !probs.len().is_power_of_two() || n_vertex_vars > n_qubits {
        return Err(Error::domain("dense distribution does not cover the vertex register"));
    }
    let block = 1usize << (n_qubits - n_vertex_vars);
    let out = probs.chunks(block).map(|c| c.iter().sum()).collect();
    normalize(n_vertex_vars, out)
}

fn normalize(n: usize, mut probs: Vec<f64>) -> Result<VertexDistribution> {
    let total: f64 = probs.iter().sum();
    if !(total > 0.0) {
        return Err(Error::domain("distribution has no mass"));
    }
    probs.iter_mut().for_each(|p| *p /= total);
    VertexDistribution::new(n, probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn uniform_states() {
        let s = StateVector::uniform(1).unwrap();
        assert!(s.amplitudes().iter().all(|a| close(*a, Complex64::new(FRAC_1_SQRT_2, 0.0))));
        let s = StateVector::uniform(2).unwrap();
        assert!(s.amplitudes().iter().all(|a| close(*a, Complex64::new(0.5, 0.0))));
        let s = StateVector::uniform(10).unwrap();
        assert!(s.probabilities().iter().all(|p| (p - 1.0 / 1024.0).abs() < 1e-15));
        assert!(StateVector::uniform(0).is_err());
        assert!(matches!(StateVector::uniform(MAX_QUBITS + 1), Err(Error::Resource(_))));
    }

    #[test]
    fn cost_layer_phases() {
        let table = EnergyTable::from_energies(vec![0.0, 1.0]).unwrap();
        let mut s = StateVector::uniform(1).unwrap();
        let before = s.clone();
        s.apply_cost_layer(&table, 0.0).unwrap();
        assert_eq!(s, before);
        s.apply_cost_layer(&table, PI).unwrap();
        assert!(close(s.amplitudes()[0], before.amplitudes()[0]));
        assert!(close(s.amplitudes()[1], -before.amplitudes()[1]));
        let wrong = EnergyTable::from_energies(vec![0.0; 4]).unwrap();
        assert!(s.apply_cost_layer(&wrong, 1.0).is_err());
    }

    #[test]
    fn mixer_layer_rotations() {
        let mut s = StateVector::basis(1, 0).unwrap();
        s.apply_mixer_layer(0.0);
        assert_eq!(s, StateVector::basis(1, 0).unwrap());
        s.apply_mixer_layer(PI / 2.0);
        assert!(close(s.amplitudes()[0], Complex64::new(0.0, 0.0)));
        assert!(close(s.amplitudes()[1], Complex64::new(0.0, -1.0)));

        let mut u = StateVector::uniform(4).unwrap();
        u.apply_mixer_layer(0.77);
        assert!(u.probabilities().iter().all(|p| (p - 1.0 / 16.0).abs() < 1e-14));
        // global phase exp(-i n beta)
        let phase = Complex64::from_polar(0.25, -4.0 * 0.77);
        assert!(u.amplitudes().iter().all(|a| close(*a, phase)));
    }

    #[test]
    fn zero_schedule_is_uniform() {
        let table = EnergyTable::from_energies((0..8).map(f64::from).collect()).unwrap();
        let sched = AngleSchedule::new(vec![0.0; 3], vec![0.0; 3]).unwrap();
        let s = evolve(&table, &sched).unwrap();
        assert!(s.probabilities().iter().all(|p| (p - 0.125).abs() < 1e-15));
    }

    #[test]
    fn expectation_examples() {
        let table = EnergyTable::from_energies(vec![3.0, 1.0, 4.0, 1.5]).unwrap();
        let u = StateVector::uniform(2).unwrap();
        assert!((u.expectation(&table).unwrap() - table.mean()).abs() < 1e-15);
        for k in 0..4 {
            let b = StateVector::basis(2, k).unwrap();
            assert_eq!(b.expectation(&table).unwrap(), table.energies()[k]);
        }
    }

    #[test]
    fn schedule_validation() {
        assert!(AngleSchedule::new(vec![], vec![]).is_err());
        assert!(AngleSchedule::new(vec![0.1], vec![0.1, 0.2]).is_err());
        assert!(AngleSchedule::new(vec![7.0], vec![0.1]).is_err());
        assert!(AngleSchedule::new(vec![0.1], vec![3.5]).is_err());
        let s = AngleSchedule::new(vec![0.1, 0.2], vec![0.3, 0.4]).unwrap();
        assert_eq!(s.to_params(), vec![0.1, 0.2, 0.3, 0.4]);
        assert_eq!(AngleSchedule::from_params(&s.to_params()).unwrap(), s);
        assert_eq!(s.extended(0.0, 0.0).unwrap().layers(), 3);
    }

    #[test]
    fn sampling_basis_state_and_determinism() {
        let s = StateVector::basis(3, 5).unwrap();
        let counts = s.sample(1000, 1).unwrap();
        assert_eq!(counts.into_iter().collect::<Vec<_>>(), vec![(5, 1000)]);

        let u = StateVector::uniform(4).unwrap();
        assert_eq!(u.sample(5000, 42).unwrap(), u.sample(5000, 42).unwrap());
        assert_ne!(u.sample(5000, 42).unwrap(), u.sample(5000, 43).unwrap());
        assert_eq!(u.sample(5000, 42).unwrap().values().sum::<u64>(), 5000);
        assert!(u.sample(0, 1).is_err());
    }

    #[test]
    fn uniform_sampling_chi_square() {
        let u = StateVector::uniform(4).unwrap();
        let shots = 160_000u64;
        let counts = u.sample(shots, 9).unwrap();
        let expected = shots as f64 / 16.0;
        let chi2: f64 = (0..16u64)
            .map(|k| {
                let c = counts.get(&k).copied().unwrap_or(0) as f64;
                (c - expected).powi(2) / expected
            })
            .sum();
        // 15 degrees of freedom; 0.999 quantile is about 37.7
        assert!(chi2 < 37.7, "chi2 = {chi2}");
    }

    #[test]
    fn marginalization() {
        let point: BTreeMap<u64, f64> = [(0b1000110000u64, 1.0)].into();
        let d = marginalize_vertices(&point, 10, 6).unwrap();
        assert_eq!(d.prob_of("100011").unwrap(), 1.0);

        let counts: BTreeMap<u64, u64> = [(0, 3), (1, 1), (2, 4)].into();
        let d = marginalize_vertices(&counts, 2, 2).unwrap();
        assert_eq!(d.probs(), &[0.375, 0.125, 0.5, 0.0]);

        let u = StateVector::uniform(10).unwrap();
        let d = marginalize_dense(&u.probabilities(), 6).unwrap();
        assert!((d.prob_of("100011").unwrap() - 16.0 / 1024.0).abs() < 1e-15);
        assert!((d.total() - 1.0).abs() < 1e-12);
        assert!(marginalize_dense(&u.probabilities(), 11).is_err());
    }

    #[test]
    fn ranking_breaks_ties_by_label() {
        let d = VertexDistribution::new(2, vec![0.25, 0.25, 0.4, 0.1]).unwrap();
        let r = d.ranked();
        assert_eq!(r[0].0, "10");
        assert_eq!(r[1].0, "00");
        assert_eq!(r[2].0, "01");
    }
}
