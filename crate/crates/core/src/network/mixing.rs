use nalgebra::DMatrix;

use super::Digraph;

/// A round graph with its row-stochastic decision weights `A` and
/// column-stochastic tracker weights `B`.
#[derive(Debug, Clone)]
pub struct MixingPair {
    pub t: usize,
    pub graph: Digraph,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub a_min: f64,
    pub b_min: f64,
}

/// Uniform neighbour weights: `A[i][j] = 1/(indeg(i)+1)` over in-neighbours
/// of `i` and itself, `B[j][i] = 1/(outdeg(i)+1)` over out-neighbours of `i`
/// and itself.
pub fn build_mixing_pair(g: &Digraph, t: usize) -> MixingPair {
    let n = g.n();
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, n);
    for i in 0..n {
        let w = 1.0 / (g.in_neighbors(i).len() + 1) as f64;
        a[(i, i)] = w;
        for &j in g.in_neighbors(i) {
            a[(i, j)] = w;
        }
        let w = 1.0 / (g.out_neighbors(i).len() + 1) as f64;
        b[(i, i)] = w;
        for &j in g.out_neighbors(i) {
            b[(j, i)] = w;
        }
    }
    let a_min = min_positive(&a);
    let b_min = min_positive(&b);
    MixingPair {
        t,
        graph: g.clone(),
        a,
        b,
        a_min,
        b_min,
    }
}

/// `W = (1/n) 1 1ᵀ`, the doubly stochastic weights of a complete graph.
pub fn uniform_complete_weights(n: usize) -> DMatrix<f64> {
    DMatrix::from_element(n, n, 1.0 / n as f64)
}

fn min_positive(m: &DMatrix<f64>) -> f64 {
    m.iter().copied().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min)
}
