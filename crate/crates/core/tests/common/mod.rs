#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use tds_qaoa::{EnergyTable, Graph};

/// Graph on `lo..=hi` vertices with each pair present independently.
pub fn arb_graph(lo: usize, hi: usize) -> impl Strategy<Value = Graph> {
    (lo..=hi).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        proptest::collection::vec(any::<bool>(), pairs).prop_map(move |mask| {
            let mut edges = Vec::new();
            let mut k = 0;
            for u in 0..n {
                for v in u + 1..n {
                    if mask[k] {
                        edges.push((u, v));
                    }
                    k += 1;
                }
            }
            Graph::new(n, edges).unwrap()
        })
    })
}

/// Same, restricted to graphs without isolated vertices.
pub fn arb_feasible_graph(lo: usize, hi: usize) -> impl Strategy<Value = Graph> {
    arb_graph(lo, hi).prop_filter("isolated vertex", |g| g.isolated_vertex().is_none())
}

/// Random connected graph with minimum degree >= 2: a Hamiltonian cycle over
/// a shuffled vertex order plus extra edges with probability `p`.
pub fn random_min_degree_two(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Graph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges: Vec<(usize, usize)> = (0..n)
        .map(|i| {
            let (a, b) = (order[i], order[(i + 1) % n]);
            (a.min(b), a.max(b))
        })
        .collect();
    for u in 0..n {
        for v in u + 1..n {
            if !edges.contains(&(u, v)) && rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::new(n, edges).unwrap()
}

/// Arbitrary graph on `n` vertices with edge probability `p`.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::new(n, edges).unwrap()
}

fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a.kronecker(b)
}

/// `exp(-i beta X)` on every qubit as one dense matrix.
pub fn dense_mixer(n: usize, beta: f64) -> DMatrix<Complex64> {
    let (s, c) = beta.sin_cos();
    let one = DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(c, 0.0),
            Complex64::new(0.0, -s),
            Complex64::new(0.0, -s),
            Complex64::new(c, 0.0),
        ],
    );
    let mut m = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
    for _ in 0..n {
        m = kron(&m, &one);
    }
    m
}

/// `exp(-i gamma H)` for the diagonal Hamiltonian `H = diag(energies)`.
pub fn dense_cost(table: &EnergyTable, gamma: f64) -> DMatrix<Complex64> {
    let d = table.len();
    let mut m = DMatrix::zeros(d, d);
    for (k, &e) in table.energies().iter().enumerate() {
        m[(k, k)] = Complex64::from_polar(1.0, -gamma * e);
    }
    m
}

/// Mixer built from the spectral decomposition of `B = sum_j X_j`:
/// `exp(-i beta B) = V exp(-i beta Lambda) V^T`, independent of the
/// per-qubit factorization used by the simulator.
pub fn dense_mixer_eigen(n: usize, beta: f64) -> DMatrix<Complex64> {
    let d = 1usize << n;
    let mut b = DMatrix::<f64>::zeros(d, d);
    for k in 0..d {
        for j in 0..n {
            b[(k, k ^ (1 << j))] += 1.0;
        }
    }
    let eig = nalgebra::SymmetricEigen::new(b);
    let v = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex64::from_polar(1.0, -beta * l)));
    &v * phases * v.transpose()
}

/// Dense reference evolution of the uniform state.
pub fn dense_evolve(table: &EnergyTable, gammas: &[f64], betas: &[f64], eigen_mixer: bool) -> Vec<Complex64> {
    let n = table.n_vars();
    let d = 1usize << n;
    let mut psi = nalgebra::DVector::from_element(d, Complex64::new((d as f64).sqrt().recip(), 0.0));
    for (&g, &b) in gammas.iter().zip(betas) {
        psi = dense_cost(table, g) * psi;
        let mixer = if eigen_mixer { dense_mixer_eigen(n, b) } else { dense_mixer(n, b) };
        psi = mixer * psi;
    }
    psi.iter().copied().collect()
}
