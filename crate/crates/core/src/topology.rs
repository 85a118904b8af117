//! Per-round P2P communication graph and its connectivity test.
//!
//! The round topology is an undirected graph on the client set. A round is
//! valid only if the graph is connected, which is checked spectrally: the
//! second-smallest eigenvalue of the Laplacian `L = D - A` is positive if and
//! only if the graph is connected.

use crate::linalg::{symmetric_eigenvalues, EigenError, SquareMatrix};
use thiserror::Error;

/// λ2 values above this count as "connected". Floating-point eigensolvers
/// return tiny non-zero values for the null eigenvalue.
pub const CONNECTIVITY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("node {index} out of range for a graph on {num_nodes} nodes")]
    NodeOutOfRange { index: usize, num_nodes: usize },
    #[error("self-loop on node {0} is not allowed")]
    SelfLoop(usize),
    #[error("selection must contain at least one client")]
    EmptySelection,
    #[error("eigensolver failed on the Laplacian: {0}")]
    Eigen(#[from] EigenError),
}

/// Undirected graph as a symmetric binary adjacency matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    num_nodes: usize,
    adjacency: Vec<bool>,
}

impl Graph {
    /// Graph on `num_nodes` nodes with no edges.
    pub fn new(num_nodes: usize) -> Self {
        Self {
            num_nodes,
            adjacency: vec![false; num_nodes * num_nodes],
        }
    }

    pub fn from_edges(num_nodes: usize, edges: &[(usize, usize)]) -> Result<Self, TopologyError> {
        let mut g = Self::new(num_nodes);
        for &(i, j) in edges {
            g.add_edge(i, j)?;
        }
        Ok(g)
    }

    /// Adds the undirected edge i–j, keeping the matrix symmetric.
    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<(), TopologyError> {
        let n = self.num_nodes;
        for &k in &[i, j] {
            if k >= n {
                return Err(TopologyError::NodeOutOfRange {
                    index: k,
                    num_nodes: n,
                });
            }
        }
        if i == j {
            return Err(TopologyError::SelfLoop(i));
        }
        self.adjacency[i * n + j] = true;
        self.adjacency[j * n + i] = true;
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.num_nodes + j]
    }

    pub fn degree(&self, i: usize) -> usize {
        (0..self.num_nodes).filter(|&j| self.has_edge(i, j)).count()
    }

    /// The adjacency matrix A as reals.
    pub fn adjacency_matrix(&self) -> SquareMatrix {
        let n = self.num_nodes;
        let mut a = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                if self.has_edge(i, j) {
                    a.set(i, j, 1.0);
                }
            }
        }
        a
    }
}

/// Diagonal degree matrix D: `D[i][i]` is the number of neighbors of node i.
pub fn degree_matrix(g: &Graph) -> SquareMatrix {
    let n = g.num_nodes();
    let mut d = SquareMatrix::zeros(n);
    for i in 0..n {
        d.set(i, i, g.degree(i) as f64);
    }
    d
}

/// Graph Laplacian L = D - A. Every row sums to zero.
pub fn laplacian(g: &Graph) -> SquareMatrix {
    let n = g.num_nodes();
    let mut l = degree_matrix(g);
    for i in 0..n {
        for j in 0..n {
            if g.has_edge(i, j) {
                l.set(i, j, l.get(i, j) - 1.0);
            }
        }
    }
    l
}

/// Second-smallest Laplacian eigenvalue λ2 (algebraic connectivity).
///
/// Positive exactly when the graph is connected. A single-node graph has only
/// one eigenvalue, so λ2 is defined as 0 there.
pub fn algebraic_connectivity(g: &Graph) -> Result<f64, TopologyError> {
    if g.num_nodes() <= 1 {
        return Ok(0.0);
    }
    let eig = symmetric_eigenvalues(&laplacian(g))?;
    // The Laplacian is positive semidefinite; clip solver noise below zero.
    Ok(eig[1].max(0.0))
}

/// Spectral connectivity test: λ2 above [`CONNECTIVITY_TOL`].
///
/// A graph on zero or one nodes is trivially connected even though its λ2 is
/// defined as 0.
pub fn is_connected(g: &Graph) -> Result<bool, TopologyError> {
    if g.num_nodes() <= 1 {
        return Ok(true);
    }
    Ok(algebraic_connectivity(g)? > CONNECTIVITY_TOL)
}

/// Builds the round topology for a selected training set: the selected clients
/// form a complete subgraph and every unselected client attaches to one
/// designated selected hub (the lowest-indexed selected client), so the new
/// block can reach every client.
///
/// The result is connected whenever `num_nodes >= 2`.
pub fn induced_topology(selected: &[usize], num_nodes: usize) -> Result<Graph, TopologyError> {
    if selected.is_empty() {
        return Err(TopologyError::EmptySelection);
    }
    let mut members: Vec<usize> = selected.to_vec();
    members.sort_unstable();
    members.dedup();
    for &i in &members {
        if i >= num_nodes {
            return Err(TopologyError::NodeOutOfRange {
                index: i,
                num_nodes,
            });
        }
    }
    let mut g = Graph::new(num_nodes);
    for (a, &i) in members.iter().enumerate() {
        for &j in &members[a + 1..] {
            g.add_edge(i, j)?;
        }
    }
    let hub = members[0];
    for j in 0..num_nodes {
        if !members.contains(&j) {
            g.add_edge(hub, j)?;
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path3() -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap()
    }

    fn complete(n: usize) -> Graph {
        let mut g = Graph::new(n);
        for i in 0..n {
            for j in (i + 1)..n {
                g.add_edge(i, j).unwrap();
            }
        }
        g
    }

    #[test]
    fn degree_matrix_examples() {
        let d = degree_matrix(&path3());
        assert_eq!([d.get(0, 0), d.get(1, 1), d.get(2, 2)], [1.0, 2.0, 1.0]);
        assert_eq!(d.get(0, 1), 0.0);

        let empty = degree_matrix(&Graph::new(2));
        assert_eq!([empty.get(0, 0), empty.get(1, 1)], [0.0, 0.0]);

        let k3 = degree_matrix(&complete(3));
        assert_eq!([k3.get(0, 0), k3.get(1, 1), k3.get(2, 2)], [2.0, 2.0, 2.0]);
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn laplacian_examples() {
        let l = laplacian(&complete(3));
        let expect = [[2.0, -1.0, -1.0], [-1.0, 2.0, -1.0], [-1.0, -1.0, 2.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(l.get(i, j), expect[i][j]);
            }
        }

        let single = laplacian(&Graph::new(1));
        assert_eq!(single.get(0, 0), 0.0);

        let lp = laplacian(&path3());
        let expect = [[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(lp.get(i, j), expect[i][j]);
            }
        }
    }

    #[test]
    fn connectivity_examples() {
        // Two isolated nodes: the zero eigenvalue repeats.
        assert!(algebraic_connectivity(&Graph::new(2)).unwrap().abs() < 1e-12);

        // K3: Laplacian spectrum is {0, 3, 3}.
        let k3 = algebraic_connectivity(&complete(3)).unwrap();
        assert!((k3 - 3.0).abs() < 1e-9, "λ2(K3) = {k3}");

        // 3-node path: det(L - λI) = -λ(λ-1)(λ-3), so λ2 = 1.
        let p3 = algebraic_connectivity(&path3()).unwrap();
        assert!((p3 - 1.0).abs() < 1e-9, "λ2(P3) = {p3}");
    }

    /// Independent check of the two frozen λ2 values: the characteristic
    /// polynomial must vanish at λ2, evaluated through a 3×3 determinant
    /// rather than the eigensolver.
    #[test]
    fn frozen_lambda2_values_are_roots_of_char_poly() {
        fn det3_shifted(l: &SquareMatrix, lambda: f64) -> f64 {
            let m = |i: usize, j: usize| l.get(i, j) - if i == j { lambda } else { 0.0 };
            m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
                - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
                + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
        }
        assert!(det3_shifted(&laplacian(&complete(3)), 3.0).abs() < 1e-9);
        assert!(det3_shifted(&laplacian(&path3()), 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_node_lambda2_is_zero_but_connected() {
        let g = Graph::new(1);
        assert_eq!(algebraic_connectivity(&g).unwrap(), 0.0);
        assert!(is_connected(&g).unwrap());
    }

    #[test]
    fn induced_topology_examples() {
        let g = induced_topology(&[0, 1], 2).unwrap();
        assert!(g.has_edge(0, 1));
        assert_eq!(g.degree(0), 1);

        // A single selected client becomes the hub of a star.
        let star = induced_topology(&[0], 3).unwrap();
        assert!(star.has_edge(0, 1) && star.has_edge(0, 2) && !star.has_edge(1, 2));

        // K3 on {0,1,2} plus the hub edge 0–3.
        let g = induced_topology(&[0, 1, 2], 4).unwrap();
        for (i, j) in [(0, 1), (0, 2), (1, 2), (0, 3)] {
            assert!(g.has_edge(i, j), "missing edge {i}-{j}");
        }
        assert!(!g.has_edge(1, 3) && !g.has_edge(2, 3));

        assert!(matches!(
            induced_topology(&[], 3),
            Err(TopologyError::EmptySelection)
        ));
    }

    #[test]
    fn induced_topology_is_always_connected() {
        for num_nodes in 2..=8usize {
            for mask in 1u32..(1 << num_nodes) {
                let selected: Vec<usize> =
                    (0..num_nodes).filter(|&i| mask & (1 << i) != 0).collect();
                let g = induced_topology(&selected, num_nodes).unwrap();
                let l2 = algebraic_connectivity(&g).unwrap();
                assert!(l2 > CONNECTIVITY_TOL, "λ2={l2} for selected={selected:?}");
            }
        }
    }

    #[allow(clippy::needless_range_loop)]
    fn bfs_connected(g: &Graph) -> bool {
        let n = g.num_nodes();
        if n <= 1 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            if seen[i] {
                continue;
            }
            seen[i] = true;
            for j in 0..n {
                if g.has_edge(i, j) && !seen[j] {
                    stack.push(j);
                }
            }
        }
        seen.iter().all(|&v| v)
    }

    /// λ2 > tol must agree with BFS connectivity on every graph with up to six
    /// nodes (exhaustive over all edge subsets).
    #[test]
    fn spectral_test_agrees_with_bfs_exhaustively() {
        for n in 1..=6usize {
            let pairs: Vec<(usize, usize)> = (0..n)
                .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                .collect();
            for mask in 0u64..(1 << pairs.len()) {
                let edges: Vec<(usize, usize)> = pairs
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| mask & (1 << k) != 0)
                    .map(|(_, &e)| e)
                    .collect();
                let g = Graph::from_edges(n, &edges).unwrap();
                assert_eq!(
                    is_connected(&g).unwrap(),
                    bfs_connected(&g),
                    "disagreement at n={n} mask={mask:b}"
                );
            }
        }
    }

    proptest! {
        #[test]
        fn laplacian_rows_sum_to_zero_and_degrees_match(
            n in 1usize..12,
            edge_bits in prop::collection::vec(any::<bool>(), 0..66),
        ) {
            let mut g = Graph::new(n);
            let mut k = 0;
            for i in 0..n {
                for j in (i + 1)..n {
                    if *edge_bits.get(k).unwrap_or(&false) {
                        g.add_edge(i, j).unwrap();
                    }
                    k += 1;
                }
            }
            let l = laplacian(&g);
            let d = degree_matrix(&g);
            for i in 0..n {
                let row_sum: f64 = l.row(i).iter().sum();
                prop_assert!(row_sum.abs() < 1e-12);
                prop_assert_eq!(d.get(i, i) as usize, g.degree(i));
            }
        }
    }
}
