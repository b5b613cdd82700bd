//! Quantum certificates on graphs: independence certificates, the
//! isomorphism `G_{A,b} ≅ G_{A,0}` built from a synBCS strategy, transport of
//! independence certificates along an isomorphism strategy, and the
//! recovery of a solution-group representation from an independence
//! certificate of value `m`.

use serde::{Deserialize, Serialize};

use super::{graph_from_system, Graph, SystemGraph};
use crate::error::{Error, Result};
use crate::games::{check_game_algebra_relations, RelationReport, SyncGame};
use crate::gf2::BinaryLinearSystem;
use crate::matops::{kron, CMatrix};
use crate::solutiongroup::{rep_from_strategy, GroupRep};
use crate::strategies::OperatorStrategy;

/// A strategy for the homomorphism game `K_c -> complement(target)`,
/// witnessing a quantum independent set of size `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndependenceCertificate {
    pub target: Graph,
    pub c: usize,
    pub strategy: OperatorStrategy,
}

#[derive(Serialize, Deserialize)]
struct CertificateJson {
    graph: serde_json::Value,
    c: usize,
    strategy: serde_json::Value,
}

impl IndependenceCertificate {
    pub fn new(target: Graph, c: usize, strategy: OperatorStrategy) -> Result<Self> {
        if strategy.n_inputs() != c || strategy.n_outputs() != target.n() {
            return Err(Error::DimensionMismatch(format!(
                "certificate strategy has {} inputs / {} outputs; expected {c} / {}",
                strategy.n_inputs(),
                strategy.n_outputs(),
                target.n()
            )));
        }
        Ok(IndependenceCertificate {
            target,
            c,
            strategy,
        })
    }

    /// The `d = 1` certificate `i -> set[i]` of a classical independent set.
    pub fn from_independent_set(target: &Graph, set: &[usize]) -> Result<Self> {
        if !target.is_independent(set) || set.iter().any(|&v| v >= target.n()) {
            return Err(Error::Validation("vertex set is not independent".into()));
        }
        let mut sorted = set.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != set.len() {
            return Err(Error::Validation("independent set repeats a vertex".into()));
        }
        Self::new(
            target.clone(),
            set.len(),
            OperatorStrategy::deterministic(set, target.n()),
        )
    }

    pub fn game(&self) -> SyncGame {
        SyncGame::hom(&Graph::complete(self.c), &self.target.complement())
    }

    pub fn check(&self, tol: f64) -> Result<RelationReport> {
        check_game_algebra_relations(&self.game(), &self.strategy, tol)
    }

    pub fn verify(&self, tol: f64) -> Result<RelationReport> {
        let report = self.check(tol)?;
        if !report.pass {
            return Err(Error::verification(
                format!("independence certificate of value {}", self.c),
                report.max_residual(),
                tol,
            ));
        }
        Ok(report)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(CertificateJson {
            graph: self.target.to_json_value(),
            c: self.c,
            strategy: self.strategy.to_json_value(),
        })
        .expect("certificate serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: CertificateJson = serde_json::from_str(text)?;
        Self::new(
            Graph::from_json(&raw.graph.to_string())?,
            raw.c,
            OperatorStrategy::from_json(&raw.strategy.to_string())?,
        )
    }
}

fn same_graph(a: &Graph, b: &Graph) -> bool {
    a.n() == b.n() && a.edges() == b.edges()
}

/// Describes why an isomorphism-game tuple loses.
fn iso_case(g: &Graph, h: &Graph, t: [usize; 4]) -> String {
    let ng = g.n();
    let [x, y, a, b] = t;
    if (x < ng) == (a < ng) || (y < ng) == (b < ng) {
        return "answer of the same type as the question".into();
    }
    let split = |i: usize, o: usize| if i < ng { (i, o - ng) } else { (o, i - ng) };
    let (ga, ha) = split(x, a);
    let (gb, hb) = split(y, b);
    let describe = |gr: &Graph, v: usize, w: usize| {
        if v == w {
            "equal"
        } else if gr.adjacent(v, w) {
            "adjacent"
        } else {
            "distinct non-adjacent"
        }
    };
    format!(
        "rel({}, {}) is {} but rel({}, {}) is {}",
        g.label(ga),
        g.label(gb),
        describe(g, ga, gb),
        h.label(ha),
        h.label(hb),
        describe(h, ha, hb)
    )
}

/// Isomorphism strategy between `G_{A,b}` and `G_{A,0}` from a perfect
/// synBCS strategy `e`: the pair `(i,x)`, `(i,y)` gets `e_{i,xy}` and pairs
/// from different equations get `0`.
pub fn iso_strategy_from_bcs(
    s: &OperatorStrategy,
    sys: &BinaryLinearSystem,
    tol: f64,
) -> Result<(OperatorStrategy, SystemGraph, SystemGraph)> {
    let game = SyncGame::synbcs(sys)?;
    let rel = check_game_algebra_relations(&game, s, tol)?;
    if !rel.pass {
        return Err(Error::verification(
            "game-algebra relations of the synBCS strategy",
            rel.max_residual(),
            tol,
        ));
    }
    let gb = graph_from_system(sys, true)?;
    let g0 = graph_from_system(sys, false)?;
    let (nb, n0) = (gb.vertices.len(), g0.vertices.len());
    let mut iso = OperatorStrategy::new(s.dim(), nb + n0, nb + n0);
    for (u, vb) in gb.vertices.iter().enumerate() {
        for (w, v0) in g0.vertices.iter().enumerate() {
            if vb.equation != v0.equation {
                continue;
            }
            let xy = vb.solution.mul(&v0.solution);
            if let Some(e) = s.get(vb.equation, xy.to_mask() as usize) {
                iso.set(u, nb + w, e.clone());
                iso.set(nb + w, u, e.clone());
            }
        }
    }
    let iso_game = SyncGame::iso(&gb.graph, &g0.graph);
    let report = check_game_algebra_relations(&iso_game, &iso, tol)?;
    if !report.pass {
        let case = report
            .worst_losing_tuple
            .filter(|_| report.losing_product >= report.completeness_defect)
            .map(|t| iso_case(&gb.graph, &g0.graph, t))
            .unwrap_or_else(|| "row sums".into());
        return Err(Error::verification(
            format!("isomorphism certificate ({case})"),
            report.max_residual(),
            tol,
        ));
    }
    Ok((iso, gb, g0))
}

/// The same strategy read as one for the `(H, G)` isomorphism game.
pub fn reverse_iso(iso: &OperatorStrategy, n_g: usize) -> OperatorStrategy {
    let n = iso.n_inputs();
    let n_h = n - n_g;
    let swap = |v: usize| if v < n_g { v + n_h } else { v - n_g };
    let mut out = OperatorStrategy::new(iso.dim(), n, iso.n_outputs());
    for x in 0..n {
        for (a, e) in iso.row(x) {
            out.set(swap(x), swap(a), e.clone());
        }
    }
    out
}

/// Moves an independence certificate for `G` to `H` along a strategy for
/// the `(G, H)` isomorphism game: `f_{i,x} = sum_v e_{i,v} (x) q_{v,x}`.
pub fn transport_independence(
    cert: &IndependenceCertificate,
    iso: &OperatorStrategy,
    h: &Graph,
    tol: f64,
) -> Result<IndependenceCertificate> {
    let g = &cert.target;
    let (ng, nh) = (g.n(), h.n());
    if iso.n_inputs() != ng + nh || iso.n_outputs() != ng + nh {
        return Err(Error::DimensionMismatch(format!(
            "isomorphism strategy has {} inputs, expected {}",
            iso.n_inputs(),
            ng + nh
        )));
    }
    cert.verify(tol)?;
    let iso_report = check_game_algebra_relations(&SyncGame::iso(g, h), iso, tol)?;
    if !iso_report.pass {
        return Err(Error::verification(
            "isomorphism certificate",
            iso_report.max_residual(),
            tol,
        ));
    }
    let dim = cert.strategy.dim() * iso.dim();
    let mut f = OperatorStrategy::new(dim, cert.c, nh);
    for i in 0..cert.c {
        let mut row: Vec<Option<CMatrix>> = vec![None; nh];
        for (v, e) in cert.strategy.row(i) {
            for (a, q) in iso.row(v) {
                let x = a - ng;
                let term = kron(e, q);
                row[x] = Some(match row[x].take() {
                    Some(acc) => &acc + &term,
                    None => term,
                });
            }
        }
        for (x, m) in row.into_iter().enumerate() {
            if let Some(m) = m {
                f.set(i, x, m);
            }
        }
    }
    let out = IndependenceCertificate::new(h.clone(), cert.c, f)?;
    out.verify(tol)?;
    Ok(out)
}

/// A solution-group representation with `J = -I` from an independence
/// certificate of value `m` on `G_{A,b}`.
///
/// The certificate is first folded over its inputs,
/// `e'_{k,x} = sum_i e_{i,(k,x)}`, which is a perfect synBCS strategy; the
/// group images are then read off as `w_j = sum_{x in S_k} x_j e'_{k,x}`,
/// with agreement across every equation containing `j` certified.
pub fn rep_from_independence(
    cert: &IndependenceCertificate,
    sys: &BinaryLinearSystem,
    tol: f64,
) -> Result<GroupRep> {
    if cert.c != sys.m() {
        return Err(Error::Validation(format!(
            "certificate value {} differs from the equation count {}",
            cert.c,
            sys.m()
        )));
    }
    let gb = graph_from_system(sys, true)?;
    if !same_graph(&gb.graph, &cert.target) {
        return Err(Error::Validation(
            "certificate graph is not the local-solution graph of the system".into(),
        ));
    }
    cert.verify(tol)?;
    let game = SyncGame::synbcs(sys)?;
    let d = cert.strategy.dim();
    let mut folded = OperatorStrategy::new(d, sys.m(), game.n_outputs());
    for (v, vertex) in gb.vertices.iter().enumerate() {
        let sum = (0..cert.c)
            .filter_map(|i| cert.strategy.get(i, v))
            .fold(CMatrix::zeros(d), |acc, e| &acc + e);
        folded.set(vertex.equation, vertex.solution.to_mask() as usize, sum);
    }
    let report = check_game_algebra_relations(&game, &folded, 10.0 * tol)?;
    if !report.pass {
        return Err(Error::verification(
            "folded certificate as a synBCS strategy",
            report.max_residual(),
            10.0 * tol,
        ));
    }
    rep_from_strategy(&folded, sys, 10.0 * tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::SignVector;
    use crate::graphs::{alpha, complement_colouring_ga0};
    use crate::solutiongroup::{magic_square_pauli_rep, strategy_from_rep, verify_rep};

    #[test]
    fn classical_iso_from_solution() {
        let sys = BinaryLinearSystem::from_one_based(3, &[vec![1, 2], vec![2, 3]], &[1, 1]).unwrap();
        let x = sys.solve().unwrap();
        let s = strategy_from_rep(&GroupRep::from_solution(&x), &sys, 1e-9).unwrap();
        let (iso, gb, g0) = iso_strategy_from_bcs(&s, &sys, 1e-9).unwrap();
        assert_eq!(iso.dim(), 1);
        // (i, y) -> (i, y * x) restricted to V_i
        let nb = gb.vertices.len();
        for (u, v) in gb.vertices.iter().enumerate() {
            let mut local = v.solution.mul(&x);
            let restricted: Vec<i8> = (0..sys.n())
                .map(|j| if sys.support(v.equation).contains(&j) { local.get(j) } else { 1 })
                .collect();
            local = SignVector::new(restricted).unwrap();
            let w = g0.index_of(v.equation, &local).unwrap();
            assert_eq!(iso.get(u, nb + w), Some(&CMatrix::identity(1)));
        }
    }

    #[test]
    fn identity_transport() {
        let g = Graph::cycle(5);
        let cert = IndependenceCertificate::from_independent_set(&g, &[0, 2]).unwrap();
        let mut iso = OperatorStrategy::new(1, 10, 10);
        for v in 0..5 {
            iso.set(v, v + 5, CMatrix::identity(1));
            iso.set(v + 5, v, CMatrix::identity(1));
        }
        let out = transport_independence(&cert, &iso, &g, 1e-9).unwrap();
        assert_eq!(out.strategy, cert.strategy);
    }

    #[test]
    fn classical_transport_maps_set() {
        let g = Graph::from_edges(3, &[(0, 1)]).unwrap();
        let h = Graph::from_edges(3, &[(1, 2)]).unwrap();
        // bijection 0->2, 1->1, 2->0
        let perm = [2, 1, 0];
        let mut iso = OperatorStrategy::new(1, 6, 6);
        for (v, &w) in perm.iter().enumerate() {
            iso.set(v, 3 + w, CMatrix::identity(1));
            iso.set(3 + w, v, CMatrix::identity(1));
        }
        let cert = IndependenceCertificate::from_independent_set(&g, &[0, 2]).unwrap();
        let out = transport_independence(&cert, &iso, &h, 1e-9).unwrap();
        assert_eq!(out.strategy, OperatorStrategy::deterministic(&[2, 0], 3));
    }

    #[test]
    fn magic_square_triangle() {
        let sys = BinaryLinearSystem::magic_square();
        let s = strategy_from_rep(&magic_square_pauli_rep(), &sys, 1e-9).unwrap();
        let (iso, gb, g0) = iso_strategy_from_bcs(&s, &sys, 1e-9).unwrap();
        let classical = complement_colouring_ga0(&sys).unwrap();
        let cert0 = IndependenceCertificate::from_independent_set(&g0.graph, &classical.independent_set).unwrap();
        let back = reverse_iso(&iso, gb.vertices.len());
        let cert_b = transport_independence(&cert0, &back, &gb.graph, 1e-9).unwrap();
        assert_eq!(cert_b.c, 6);
        assert_eq!(cert_b.strategy.dim(), 4);
        assert_eq!(alpha(&gb.graph).unwrap(), 5);
        let rep = rep_from_independence(&cert_b, &sys, 1e-9).unwrap();
        assert!(verify_rep(&rep, &sys, 1e-8).unwrap().pass);
    }

    #[test]
    fn homogeneous_certificate_gives_trivial_signs() {
        let sys = BinaryLinearSystem::magic_square().homogeneous();
        let g0 = graph_from_system(&sys, true).unwrap();
        let set = complement_colouring_ga0(&sys).unwrap().independent_set;
        let cert = IndependenceCertificate::from_independent_set(&g0.graph, &set).unwrap();
        let rep = rep_from_independence(&cert, &sys, 1e-9).unwrap();
        for w in &rep.images {
            assert_eq!(w, &CMatrix::identity(1));
        }
    }

    #[test]
    fn rejects_non_independent_set() {
        let g = Graph::complete(3);
        assert!(IndependenceCertificate::from_independent_set(&g, &[0, 1]).is_err());
    }

    #[test]
    fn broken_iso_is_diagnosed() {
        let sys = BinaryLinearSystem::magic_square();
        let s = strategy_from_rep(&magic_square_pauli_rep(), &sys, 1e-9).unwrap();
        let (mut iso, gb, g0) = iso_strategy_from_bcs(&s, &sys, 1e-9).unwrap();
        // swap the images of two G_{A,b} vertices from different equations
        let nb = gb.vertices.len();
        let (r0, r4) = (
            iso.row(0).map(|(a, e)| (a, e.clone())).collect::<Vec<_>>(),
            iso.row(4).map(|(a, e)| (a, e.clone())).collect::<Vec<_>>(),
        );
        for (a, _) in &r0 {
            iso.set(0, *a, CMatrix::zeros(4));
        }
        for (a, _) in &r4 {
            iso.set(4, *a, CMatrix::zeros(4));
        }
        for (a, e) in r0 {
            iso.set(4, a, e);
        }
        for (a, e) in r4 {
            iso.set(0, a, e);
        }
        let r = check_game_algebra_relations(&SyncGame::iso(&gb.graph, &g0.graph), &iso, 1e-9).unwrap();
        assert!(!r.pass);
        let case = iso_case(&gb.graph, &g0.graph, r.worst_losing_tuple.unwrap());
        assert!(case.contains("rel("), "{case}");
        assert!(nb == 24);
    }

    #[test]
    fn certificate_json_roundtrip() {
        let g = Graph::cycle(5);
        let cert = IndependenceCertificate::from_independent_set(&g, &[1, 3]).unwrap();
        let back = IndependenceCertificate::from_json(&cert.to_json_value().to_string()).unwrap();
        assert_eq!(back, cert);
    }
}
