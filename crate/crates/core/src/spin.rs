//! Ising form of a QUBO and the diagonal cost Hamiltonian as an energy table.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::qubo::QuboModel;

/// Largest register the simulator will materialize.
pub const MAX_QUBITS: usize = 24;

/// `E(s) = offset + sum_i h_i s_i + sum_{i<j} J_ij s_i s_j` over `s_i = +-1`,
/// obtained from a QUBO by substituting `x_i = (s_i + 1) / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinModel {
    pub n_vars: usize,
    pub offset: f64,
    pub fields: BTreeMap<usize, f64>,
    pub couplings: BTreeMap<(usize, usize), f64>,
}

pub fn qubo_to_spin(m: &QuboModel) -> SpinModel {
    let mut offset = m.constant;
    let mut fields: BTreeMap<usize, f64> = BTreeMap::new();
    let mut couplings = BTreeMap::new();
    for (&i, &a) in &m.linear {
        offset += a / 2.0;
        *fields.entry(i).or_insert(0.0) += a / 2.0;
    }
    for (&(i, j), &b) in &m.quadratic {
        let q = b / 4.0;
        offset += q;
        *fields.entry(i).or_insert(0.0) += q;
        *fields.entry(j).or_insert(0.0) += q;
        couplings.insert((i, j), q);
    }
    SpinModel {
        n_vars: m.n_vars,
        offset,
        fields,
        couplings,
    }
}

impl SpinModel {
    pub fn energy(&self, spins: &[i8]) -> Result<f64> {
        if spins.len() != self.n_vars {
            return Err(Error::domain(format!(
                "spin vector has length {}, model has {} spins",
                spins.len(),
                self.n_vars
            )));
        }
        let s = |i: usize| f64::from(spins[i]);
        let mut e = self.offset;
        e += self.fields.iter().map(|(&i, &h)| h * s(i)).sum::<f64>();
        e += self.couplings.iter().map(|(&(i, j), &c)| c * s(i) * s(j)).sum::<f64>();
        Ok(e)
    }

    /// Energy at the spin configuration `s_i = 2 x_i - 1`.
    pub fn energy_of_bits(&self, x: &[bool]) -> Result<f64> {
        let spins: Vec<i8> = x.iter().map(|&b| if b { 1 } else { -1 }).collect();
        self.energy(&spins)
    }
}

/// Diagonal of the cost Hamiltonian: `energies[k]` is the QUBO value of basis
/// state `k`, variable 0 being the most significant bit.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTable {
    n_vars: usize,
    energies: Vec<f64>,
}

impl EnergyTable {
    pub fn from_energies(energies: Vec<f64>) -> Result<Self> {
        let len = energies.len();
        if !len.is_power_of_two() {
            return Err(Error::domain(format!("table length {len} is not a power of two")));
        }
        let n_vars = len.trailing_zeros() as usize;
        check_qubits(n_vars)?;
        Ok(EnergyTable { n_vars, energies })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.energies.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        self.energies.iter().sum::<f64>() / self.energies.len() as f64
    }
}

fn check_qubits(n: usize) -> Result<()> {
    if n > MAX_QUBITS {
        Err(Error::Resource(format!("{n} qubits exceeds the simulator limit of {MAX_QUBITS}")))
    } else {
        Ok(())
    }
}

/// Evaluates the model on every basis state.
pub fn build_energy_table(m: &QuboModel) -> Result<EnergyTable> {
    check_qubits(m.n_vars)?;
    let size = 1u64 << m.n_vars;
    let energies = if m.n_vars >= 14 {
        (0..size).into_par_iter().map(|k| m.evaluate_index(k)).collect()
    } else {
        (0..size).map(|k| m.evaluate_index(k)).collect()
    };
    Ok(EnergyTable {
        n_vars: m.n_vars,
        energies,
    })
}

/// Same table built by walking the Gray code, updating the energy by the
/// single-bit flip delta at each step.
pub fn build_energy_table_gray(m: &QuboModel) -> Result<EnergyTable> {
    check_qubits(m.n_vars)?;
    let n = m.n_vars;
    let mut couplings: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (&(i, j), &c) in &m.quadratic {
        couplings[i].push((j, c));
        couplings[j].push((i, c));
    }
    let linear: Vec<f64> = (0..n).map(|i| m.linear.get(&i).copied().unwrap_or(0.0)).collect();

    let size = 1usize << n;
    let mut energies = vec![0.0; size];
    let mut x = vec![false; n];
    let mut e = m.constant;
    energies[0] = e;
    for step in 1..size {
        // the Gray code flips bit position trailing_zeros(step)
        let var = n - 1 - step.trailing_zeros() as usize;
        let field = linear[var]
            + couplings[var]
                .iter()
                .filter(|&&(j, _)| x[j])
                .map(|&(_, c)| c)
                .sum::<f64>();
        x[var] = !x[var];
        e += if x[var] { field } else { -field };
        let gray = step ^ (step >> 1);
        energies[gray] = e;
    }
    Ok(EnergyTable { n_vars: n, energies })
}
