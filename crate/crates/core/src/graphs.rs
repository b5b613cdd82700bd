//! Simple graphs, exact classical parameters, the local-solution graph of a
//! linear system, and the certificate transports between BCS strategies,
//! isomorphism-game strategies and quantum independence certificates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::{BinaryLinearSystem, SignVector};

mod certificates;
pub use certificates::*;

/// Vertex cap for the exact independence / clique solvers.
pub const MAX_CLIQUE_VERTICES: usize = 40;
/// Vertex cap for the exact chromatic number solver.
pub const MAX_CHROMATIC_VERTICES: usize = 20;
/// Cap on the number of vertices `graph_from_system` will materialize.
pub const MAX_SYSTEM_GRAPH_VERTICES: usize = 1 << 16;

/// A finite loopless undirected graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<bool>>,
    labels: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    n: usize,
    edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph {
            adj: vec![vec![false; n]; n],
            labels: None,
        }
    }

    /// `K_n`.
    pub fn complete(n: usize) -> Self {
        let mut g = Self::empty(n);
        for v in 0..n {
            for w in 0..n {
                g.adj[v][w] = v != w;
            }
        }
        g
    }

    pub fn cycle(n: usize) -> Self {
        let mut g = Self::empty(n);
        for v in 0..n {
            g.add_edge(v, (v + 1) % n).expect("cycle needs n >= 3");
        }
        g
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(n);
        for &(v, w) in edges {
            g.add_edge(v, w)?;
        }
        Ok(g)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n() {
            return Err(Error::Validation(format!(
                "{} labels for {} vertices",
                labels.len(),
                self.n()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn add_edge(&mut self, v: usize, w: usize) -> Result<()> {
        let n = self.n();
        if v >= n || w >= n {
            return Err(Error::Validation(format!("edge ({v},{w}) out of range for n = {n}")));
        }
        if v == w {
            return Err(Error::Validation(format!("loop at vertex {v}")));
        }
        self.adj[v][w] = true;
        self.adj[w][v] = true;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn adjacent(&self, v: usize, w: usize) -> bool {
        self.adj[v][w]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].iter().filter(|&&e| e).count()
    }

    pub fn label(&self, v: usize) -> String {
        match &self.labels {
            Some(l) => l[v].clone(),
            None => v.to_string(),
        }
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Edges `(v, w)` with `v < w` in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        let mut out = Vec::new();
        for v in 0..n {
            for w in v + 1..n {
                if self.adj[v][w] {
                    out.push((v, w));
                }
            }
        }
        out
    }

    pub fn complement(&self) -> Graph {
        let n = self.n();
        let mut g = Graph::empty(n);
        for v in 0..n {
            for w in 0..n {
                g.adj[v][w] = v != w && !self.adj[v][w];
            }
        }
        g.labels = self.labels.clone();
        g
    }

    pub fn is_independent(&self, set: &[usize]) -> bool {
        set.iter()
            .enumerate()
            .all(|(k, &v)| set[k + 1..].iter().all(|&w| v != w && !self.adj[v][w]))
    }

    pub fn is_clique(&self, set: &[usize]) -> bool {
        set.iter()
            .enumerate()
            .all(|(k, &v)| set[k + 1..].iter().all(|&w| self.adj[v][w]))
    }

    pub fn is_proper_colouring(&self, colour: &[usize]) -> bool {
        colour.len() == self.n() && self.edges().iter().all(|&(v, w)| colour[v] != colour[w])
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: GraphJson = serde_json::from_str(text)?;
        let edges: Vec<_> = raw.edges.iter().map(|e| (e[0], e[1])).collect();
        let g = Self::from_edges(raw.n, &edges)?;
        match raw.labels {
            Some(l) => g.with_labels(l),
            None => Ok(g),
        }
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let raw = GraphJson {
            n: self.n(),
            edges: self.edges().into_iter().map(|(v, w)| [v, w]).collect(),
            labels: self.labels.clone(),
        };
        serde_json::to_value(raw).expect("graph serializes")
    }

    fn masks(&self) -> Vec<u64> {
        self.adj
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, &e)| e)
                    .fold(0u64, |m, (w, _)| m | 1 << w)
            })
            .collect()
    }
}

/// Vertex caps for the exact solvers.
#[derive(Debug, Clone, Copy)]
pub struct SolverLimits {
    pub clique_vertices: usize,
    pub chromatic_vertices: usize,
}

impl Default for SolverLimits {
    fn default() -> Self {
        SolverLimits {
            clique_vertices: MAX_CLIQUE_VERTICES,
            chromatic_vertices: MAX_CHROMATIC_VERTICES,
        }
    }
}

fn check_cap(g: &Graph, cap: usize, what: &str) -> Result<()> {
    if g.n() > cap || g.n() > 64 {
        Err(Error::Budget(format!(
            "{what} solver refuses graphs above {} vertices (got {})",
            cap.min(64),
            g.n()
        )))
    } else {
        Ok(())
    }
}

/// A maximum clique, by branch and bound with greedy-colouring bounds.
pub fn max_clique(g: &Graph, limits: SolverLimits) -> Result<Vec<usize>> {
    check_cap(g, limits.clique_vertices, "clique")?;
    let n = g.n();
    let adj = g.masks();
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut best = Vec::new();
    let mut current = Vec::new();
    expand_clique(&adj, all, &mut current, &mut best);
    best.sort_unstable();
    Ok(best)
}

fn colour_order(adj: &[u64], p: u64) -> Vec<(usize, usize)> {
    let mut order = Vec::with_capacity(p.count_ones() as usize);
    let mut uncoloured = p;
    let mut colour = 0;
    while uncoloured != 0 {
        colour += 1;
        let mut candidates = uncoloured;
        while candidates != 0 {
            let v = candidates.trailing_zeros() as usize;
            candidates &= !(1 << v) & !adj[v];
            uncoloured &= !(1 << v);
            order.push((v, colour));
        }
    }
    order
}

fn expand_clique(adj: &[u64], mut p: u64, current: &mut Vec<usize>, best: &mut Vec<usize>) {
    let order = colour_order(adj, p);
    for &(v, colour) in order.iter().rev() {
        if current.len() + colour <= best.len() {
            return;
        }
        current.push(v);
        let next = p & adj[v];
        if next == 0 {
            if current.len() > best.len() {
                *best = current.clone();
            }
        } else {
            expand_clique(adj, next, current, best);
        }
        current.pop();
        p &= !(1 << v);
    }
}

/// Clique number `omega(G)`.
pub fn omega(g: &Graph) -> Result<usize> {
    omega_with(g, SolverLimits::default())
}

pub fn omega_with(g: &Graph, limits: SolverLimits) -> Result<usize> {
    Ok(max_clique(g, limits)?.len())
}

/// A maximum independent set.
pub fn max_independent_set(g: &Graph, limits: SolverLimits) -> Result<Vec<usize>> {
    max_clique(&g.complement(), limits)
}

/// Independence number `alpha(G) = omega(complement(G))`.
pub fn alpha(g: &Graph) -> Result<usize> {
    alpha_with(g, SolverLimits::default())
}

pub fn alpha_with(g: &Graph, limits: SolverLimits) -> Result<usize> {
    Ok(max_independent_set(g, limits)?.len())
}

/// Chromatic number, testing `k`-colourability for ascending `k` starting
/// from the clique number.
pub fn chi(g: &Graph) -> Result<usize> {
    chi_with(g, SolverLimits::default())
}

pub fn chi_with(g: &Graph, limits: SolverLimits) -> Result<usize> {
    Ok(optimal_colouring(g, limits)?
        .iter()
        .max()
        .map_or(0, |&c| c + 1))
}

/// A proper colouring with `chi(G)` colours, labelled `0..chi`.
pub fn optimal_colouring(g: &Graph, limits: SolverLimits) -> Result<Vec<usize>> {
    check_cap(g, limits.chromatic_vertices, "chromatic")?;
    let n = g.n();
    if n == 0 {
        return Ok(Vec::new());
    }
    let lower = max_clique(
        g,
        SolverLimits {
            clique_vertices: 64,
            ..limits
        },
    )?
    .len()
    .max(1);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| std::cmp::Reverse(g.degree(v)));
    for k in lower..=n {
        let mut colour = vec![usize::MAX; n];
        if colour_rec(g, &order, 0, k, 0, &mut colour) {
            return Ok(colour);
        }
    }
    unreachable!("every graph is n-colourable")
}

fn colour_rec(
    g: &Graph,
    order: &[usize],
    pos: usize,
    k: usize,
    used: usize,
    colour: &mut [usize],
) -> bool {
    if pos == order.len() {
        return true;
    }
    let v = order[pos];
    // new colours are interchangeable, so only one fresh colour is tried
    for c in 0..k.min(used + 1) {
        let clash = (0..g.n()).any(|w| g.adjacent(v, w) && colour[w] == c);
        if clash {
            continue;
        }
        colour[v] = c;
        if colour_rec(g, order, pos + 1, k, used.max(c + 1), colour) {
            return true;
        }
        colour[v] = usize::MAX;
    }
    false
}

/// Vertex of the local-solution graph: equation index and local solution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolutionVertex {
    pub equation: usize,
    pub solution: SignVector,
}

/// The graph `G_{A,b}` (or `G_{A,0}`) with its canonical vertex table.
#[derive(Debug, Clone)]
pub struct SystemGraph {
    pub graph: Graph,
    pub vertices: Vec<SolutionVertex>,
    /// True when built from `b`; false for the homogeneous system.
    pub uses_b: bool,
}

impl SystemGraph {
    /// Index of `(i, x)`, if it is a vertex.
    pub fn index_of(&self, equation: usize, solution: &SignVector) -> Option<usize> {
        self.vertices
            .iter()
            .position(|v| v.equation == equation && &v.solution == solution)
    }
}

/// Vertices `(i, x)` with `x in S_i`, ordered equation-major then
/// lexicographically; distinct vertices are adjacent iff the solutions
/// disagree on a shared variable.
pub fn graph_from_system(sys: &BinaryLinearSystem, use_b: bool) -> Result<SystemGraph> {
    if sys.n() > 64 {
        return Err(Error::Budget(format!(
            "local-solution graph supports at most 64 variables (got {})",
            sys.n()
        )));
    }
    let target = if use_b { sys.clone() } else { sys.homogeneous() };
    let total: usize = (0..sys.m())
        .map(|i| target.local_solution_count(i))
        .sum();
    if total > MAX_SYSTEM_GRAPH_VERTICES {
        return Err(Error::Budget(format!(
            "local-solution graph would have {total} vertices"
        )));
    }
    let mut vertices = Vec::with_capacity(total);
    for i in 0..sys.m() {
        for x in target.local_solutions(i)? {
            vertices.push(SolutionVertex {
                equation: i,
                solution: x,
            });
        }
    }
    let masks: Vec<u64> = vertices.iter().map(|v| v.solution.to_mask()).collect();
    let supports: Vec<u64> = (0..sys.m())
        .map(|i| sys.support(i).iter().fold(0u64, |m, &j| m | 1 << j))
        .collect();
    let n = vertices.len();
    let mut graph = Graph::empty(n);
    for a in 0..n {
        for c in a + 1..n {
            let (va, vc) = (&vertices[a], &vertices[c]);
            let shared = supports[va.equation] & supports[vc.equation];
            if (masks[a] ^ masks[c]) & shared != 0 {
                graph.adj[a][c] = true;
                graph.adj[c][a] = true;
            }
        }
    }
    let labels = vertices
        .iter()
        .map(|v| format!("({},{})", v.equation + 1, v.solution))
        .collect();
    let graph = graph.with_labels(labels)?;
    Ok(SystemGraph {
        graph,
        vertices,
        uses_b: use_b,
    })
}

/// The two classical certificates behind `alpha(G_{A,0}) = m`.
#[derive(Debug, Clone, Serialize)]
pub struct HomogeneousCertificates {
    /// `(i, x) -> i`, a proper colouring of the complement of `G_{A,0}`.
    pub colouring: Vec<usize>,
    /// The vertices `(i, (1,...,1))`, an independent set of size `m` in `G_{A,0}`.
    pub independent_set: Vec<usize>,
}

/// Colours the complement of `G_{A,0}` by equation index and exhibits the
/// all-ones independent set; both are verified before returning.
pub fn complement_colouring_ga0(sys: &BinaryLinearSystem) -> Result<HomogeneousCertificates> {
    let g0 = graph_from_system(sys, false)?;
    let colouring: Vec<usize> = g0.vertices.iter().map(|v| v.equation).collect();
    if !g0.graph.complement().is_proper_colouring(&colouring) {
        return Err(Error::verification("equation colouring of complement(G_A0)", 1.0, 0.0));
    }
    let ones = SignVector::ones(sys.n());
    let independent_set = (0..sys.m())
        .map(|i| {
            g0.index_of(i, &ones)
                .ok_or_else(|| Error::Validation(format!("all-ones missing from S_{}", i + 1)))
        })
        .collect::<Result<Vec<_>>>()?;
    if !g0.graph.is_independent(&independent_set) {
        return Err(Error::verification("all-ones independent set in G_A0", 1.0, 0.0));
    }
    Ok(HomogeneousCertificates {
        colouring,
        independent_set,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_graph_parameters() {
        for n in 1..=8 {
            let k = Graph::complete(n);
            assert_eq!(alpha(&k).unwrap(), 1);
            assert_eq!(omega(&k).unwrap(), n);
            assert_eq!(chi(&k).unwrap(), n);
        }
    }

    #[test]
    fn five_cycle() {
        let c5 = Graph::cycle(5);
        assert_eq!(alpha(&c5).unwrap(), 2);
        assert_eq!(omega(&c5).unwrap(), 2);
        assert_eq!(chi(&c5).unwrap(), 3);
    }

    #[test]
    fn empty_graph() {
        let g = Graph::empty(6);
        assert_eq!(alpha(&g).unwrap(), 6);
        assert_eq!(chi(&g).unwrap(), 1);
        assert_eq!(chi(&Graph::empty(0)).unwrap(), 0);
    }

    #[test]
    fn solver_caps() {
        assert!(matches!(alpha(&Graph::empty(41)), Err(Error::Budget(_))));
        assert!(matches!(chi(&Graph::empty(21)), Err(Error::Budget(_))));
    }

    #[test]
    fn graph_validation_and_json() {
        let mut g = Graph::empty(3);
        assert!(g.add_edge(1, 1).is_err());
        assert!(g.add_edge(0, 3).is_err());
        let g = Graph::from_json(r#"{"n":3,"edges":[[0,1],[2,1]]}"#).unwrap();
        assert!(g.adjacent(1, 2) && g.adjacent(2, 1) && !g.adjacent(0, 2));
        assert_eq!(
            g.to_json_value().to_string(),
            r#"{"edges":[[0,1],[1,2]],"n":3}"#
        );
    }

    #[test]
    fn magic_square_graph_shape() {
        let sys = BinaryLinearSystem::magic_square();
        let sg = graph_from_system(&sys, true).unwrap();
        assert_eq!(sg.graph.n(), 24);
        // same-equation vertices form cliques
        for i in 0..6 {
            let block: Vec<usize> = (0..24).filter(|&v| sg.vertices[v].equation == i).collect();
            assert_eq!(block.len(), 4);
            assert!(sg.graph.is_clique(&block));
        }
        // rows 1 and 2 share no variable
        for a in 0..4 {
            for c in 4..8 {
                assert!(!sg.graph.adjacent(a, c));
            }
        }
    }

    #[test]
    fn homogeneous_certificates() {
        let sys = BinaryLinearSystem::magic_square();
        let cert = complement_colouring_ga0(&sys).unwrap();
        assert_eq!(cert.independent_set.len(), 6);
        let single = BinaryLinearSystem::new(2, vec![vec![0, 1]], vec![true]).unwrap();
        let cert = complement_colouring_ga0(&single).unwrap();
        assert!(cert.colouring.iter().all(|&c| c == 0));
    }

    #[test]
    fn magic_square_homogeneous_chromatic_number() {
        let sys = BinaryLinearSystem::magic_square();
        let g0 = graph_from_system(&sys, false).unwrap();
        let limits = SolverLimits {
            chromatic_vertices: 24,
            ..Default::default()
        };
        assert_eq!(chi_with(&g0.graph.complement(), limits).unwrap(), 6);
        assert_eq!(alpha(&g0.graph).unwrap(), 6);
    }
}
