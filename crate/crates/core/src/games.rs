//! Synchronous games, their constructors, classical deterministic search and
//! the game-algebra relation checker.
//!
//! Inputs and outputs are 0-based indices. Generated games (synBCS, graph
//! homomorphism, graph isomorphism) evaluate their predicate from the
//! underlying structure; games read from an explicit losing list keep that
//! list. Every game loses on `(x, x, a, b)` with `a != b`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::{BinaryLinearSystem, SignVector};
use crate::graphs::Graph;
use crate::matops::{self, norm2, CMatrix};
use crate::strategies::OperatorStrategy;

/// Largest variable count accepted by [`SyncGame::synbcs`]; the output set
/// is `{+1,-1}^n`.
pub const MAX_SYNBCS_VARIABLES: usize = 20;

/// Largest `|I|^2 |O|^2` accepted when materializing an explicit game.
pub const MAX_EXPLICIT_TUPLES: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
enum Rule {
    Explicit {
        inputs: Vec<String>,
        outputs: Vec<String>,
        losing: HashSet<[usize; 4]>,
    },
    SynBcs {
        system: BinaryLinearSystem,
        supports: Vec<u64>,
    },
    Hom {
        g: Graph,
        h: Graph,
    },
    Iso {
        g: Graph,
        h: Graph,
    },
}

/// A finite synchronous game `(I, O, V)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncGame {
    rule: Rule,
}

/// Relation of two vertices in one graph, as used by the isomorphism game.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Rel {
    Equal,
    Edge,
    NonEdge,
}

fn rel(g: &Graph, v: usize, w: usize) -> Rel {
    if v == w {
        Rel::Equal
    } else if g.adjacent(v, w) {
        Rel::Edge
    } else {
        Rel::NonEdge
    }
}

impl SyncGame {
    /// The synBCS game of a system: input `i` is an equation, output `a`
    /// encodes the sign vector whose bit `j` is set iff `x_j = -1`.
    pub fn synbcs(system: &BinaryLinearSystem) -> Result<Self> {
        if system.n() > MAX_SYNBCS_VARIABLES {
            return Err(Error::Budget(format!(
                "synBCS game output set {{+1,-1}}^{} exceeds the cap of {} variables",
                system.n(),
                MAX_SYNBCS_VARIABLES
            )));
        }
        let supports = (0..system.m())
            .map(|i| system.support(i).iter().fold(0u64, |m, &j| m | 1 << j))
            .collect();
        Ok(SyncGame {
            rule: Rule::SynBcs {
                system: system.clone(),
                supports,
            },
        })
    }

    /// The graph homomorphism game `G -> H`.
    pub fn hom(g: &Graph, h: &Graph) -> Self {
        SyncGame {
            rule: Rule::Hom {
                g: g.clone(),
                h: h.clone(),
            },
        }
    }

    /// The `(G, H)` isomorphism game on `V(G) ⊔ V(H)`, `G` vertices first.
    pub fn iso(g: &Graph, h: &Graph) -> Self {
        SyncGame {
            rule: Rule::Iso {
                g: g.clone(),
                h: h.clone(),
            },
        }
    }

    /// A game given by its losing tuples `[x, y, a, b]`. Diagonal
    /// mismatches `(x, x, a, b)` with `a != b` lose whether listed or not.
    pub fn explicit(
        inputs: Vec<String>,
        outputs: Vec<String>,
        losing: impl IntoIterator<Item = [usize; 4]>,
    ) -> Result<Self> {
        let (n, m) = (inputs.len(), outputs.len());
        if n.saturating_mul(n).saturating_mul(m).saturating_mul(m) > MAX_EXPLICIT_TUPLES {
            return Err(Error::Budget(format!(
                "explicit game with {n} inputs and {m} outputs is too large"
            )));
        }
        let mut set = HashSet::new();
        for t in losing {
            let [x, y, a, b] = t;
            if x >= n || y >= n || a >= m || b >= m {
                return Err(Error::Validation(format!(
                    "losing tuple [{x},{y},{a},{b}] out of range"
                )));
            }
            set.insert(t);
        }
        Ok(SyncGame {
            rule: Rule::Explicit {
                inputs,
                outputs,
                losing: set,
            },
        })
    }

    pub fn n_inputs(&self) -> usize {
        match &self.rule {
            Rule::Explicit { inputs, .. } => inputs.len(),
            Rule::SynBcs { system, .. } => system.m(),
            Rule::Hom { g, .. } => g.n(),
            Rule::Iso { g, h } => g.n() + h.n(),
        }
    }

    pub fn n_outputs(&self) -> usize {
        match &self.rule {
            Rule::Explicit { outputs, .. } => outputs.len(),
            Rule::SynBcs { system, .. } => 1 << system.n(),
            Rule::Hom { h, .. } => h.n(),
            Rule::Iso { g, h } => g.n() + h.n(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.rule {
            Rule::Explicit { .. } => "explicit",
            Rule::SynBcs { .. } => "synbcs",
            Rule::Hom { .. } => "hom",
            Rule::Iso { .. } => "iso",
        }
    }

    /// The system behind a synBCS game.
    pub fn system(&self) -> Option<&BinaryLinearSystem> {
        match &self.rule {
            Rule::SynBcs { system, .. } => Some(system),
            _ => None,
        }
    }

    pub fn input_label(&self, x: usize) -> String {
        match &self.rule {
            Rule::Explicit { inputs, .. } => inputs[x].clone(),
            Rule::SynBcs { .. } => (x + 1).to_string(),
            Rule::Hom { g, .. } => g.label(x),
            Rule::Iso { g, h } => iso_label(g, h, x),
        }
    }

    pub fn output_label(&self, a: usize) -> String {
        match &self.rule {
            Rule::Explicit { outputs, .. } => outputs[a].clone(),
            Rule::SynBcs { system, .. } => SignVector::from_mask(a as u64, system.n()).to_string(),
            Rule::Hom { h, .. } => h.label(a),
            Rule::Iso { g, h } => iso_label(g, h, a),
        }
    }

    /// `V(x, y, a, b)`.
    pub fn wins(&self, x: usize, y: usize, a: usize, b: usize) -> bool {
        if x == y && a != b {
            return false;
        }
        match &self.rule {
            Rule::Explicit { losing, .. } => !losing.contains(&[x, y, a, b]),
            Rule::SynBcs { system, supports } => {
                let (a, b) = (a as u64, b as u64);
                local_solution(system, supports, x, a)
                    && local_solution(system, supports, y, b)
                    && (a ^ b) & supports[x] & supports[y] == 0
            }
            Rule::Hom { g, h } => !g.adjacent(x, y) || h.adjacent(a, b),
            Rule::Iso { g, h } => {
                let ng = g.n();
                let in_g = |v: usize| v < ng;
                if in_g(x) == in_g(a) || in_g(y) == in_g(b) {
                    return false;
                }
                let split = |i: usize, o: usize| if in_g(i) { (i, o - ng) } else { (o, i - ng) };
                let (ga, ha) = split(x, a);
                let (gb, hb) = split(y, b);
                rel(g, ga, gb) == rel(h, ha, hb)
            }
        }
    }

    /// Outputs `a` with `V(x, x, a, a) = 1`, ascending.
    pub fn candidates(&self, x: usize) -> Vec<usize> {
        match &self.rule {
            Rule::SynBcs { system, supports } => {
                // enumerate subsets of the support with the right parity
                let supp = supports[x];
                let parity = system.rhs(x);
                let mut out = Vec::with_capacity(1 << (system.support(x).len() - 1));
                let mut sub = 0u64;
                loop {
                    if (sub.count_ones() % 2 == 1) == parity {
                        out.push(sub as usize);
                    }
                    if sub == supp {
                        break;
                    }
                    sub = (sub.wrapping_sub(supp)) & supp;
                }
                out.sort_unstable();
                out
            }
            _ => (0..self.n_outputs())
                .filter(|&a| self.wins(x, x, a, a))
                .collect(),
        }
    }

    /// True when some output pair can lose on inputs `(x, y)`, `x != y`.
    pub fn interacts(&self, x: usize, y: usize) -> bool {
        match &self.rule {
            Rule::Explicit { losing, .. } => losing
                .iter()
                .any(|t| (t[0] == x && t[1] == y) || (t[0] == y && t[1] == x)),
            Rule::SynBcs { supports, .. } => supports[x] & supports[y] != 0,
            Rule::Hom { g, .. } => g.adjacent(x, y),
            Rule::Iso { .. } => true,
        }
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        match &self.rule {
            Rule::Explicit {
                inputs,
                outputs,
                losing,
            } => {
                let mut tuples: Vec<[usize; 4]> = losing.iter().copied().collect();
                tuples.sort_unstable();
                serde_json::json!({ "inputs": inputs, "outputs": outputs, "losing": tuples })
            }
            Rule::SynBcs { system, .. } => {
                serde_json::json!({ "kind": "synbcs", "system": system.to_json_value() })
            }
            Rule::Hom { g, h } => {
                serde_json::json!({ "kind": "hom", "g": g.to_json_value(), "h": h.to_json_value() })
            }
            Rule::Iso { g, h } => {
                serde_json::json!({ "kind": "iso", "g": g.to_json_value(), "h": h.to_json_value() })
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        let graph = |key: &str| -> Result<Graph> {
            let g = v
                .get(key)
                .ok_or_else(|| Error::Validation(format!("game is missing \"{key}\"")))?;
            Graph::from_json(&g.to_string())
        };
        match v.get("kind").and_then(|k| k.as_str()) {
            Some("synbcs") => {
                let s = v
                    .get("system")
                    .ok_or_else(|| Error::Validation("synbcs game is missing \"system\"".into()))?;
                Self::synbcs(&BinaryLinearSystem::from_json(&s.to_string())?)
            }
            Some("hom") => Ok(Self::hom(&graph("g")?, &graph("h")?)),
            Some("iso") => Ok(Self::iso(&graph("g")?, &graph("h")?)),
            Some(other) => Err(Error::Validation(format!("unknown game kind \"{other}\""))),
            None => {
                #[derive(Deserialize)]
                struct Raw {
                    inputs: Vec<String>,
                    outputs: Vec<String>,
                    losing: Vec<[usize; 4]>,
                }
                let raw: Raw = serde_json::from_value(v)?;
                Self::explicit(raw.inputs, raw.outputs, raw.losing)
            }
        }
    }
}

fn iso_label(g: &Graph, h: &Graph, v: usize) -> String {
    if v < g.n() {
        format!("G:{}", g.label(v))
    } else {
        format!("H:{}", h.label(v - g.n()))
    }
}

fn local_solution(system: &BinaryLinearSystem, supports: &[u64], i: usize, x: u64) -> bool {
    x & !supports[i] == 0 && (x.count_ones() % 2 == 1) == system.rhs(i)
}

/// A classical synchronous strategy: both players answer `assignment[x]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterministicStrategy {
    pub assignment: Vec<usize>,
}

impl DeterministicStrategy {
    pub fn is_perfect_for(&self, game: &SyncGame) -> bool {
        let f = &self.assignment;
        f.len() == game.n_inputs()
            && (0..f.len()).all(|x| (0..f.len()).all(|y| game.wins(x, y, f[x], f[y])))
    }

    /// The `d = 1` operator strategy.
    pub fn to_operator(&self, n_outputs: usize) -> OperatorStrategy {
        OperatorStrategy::deterministic(&self.assignment, n_outputs)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SearchBudget {
    /// Refuse when `|I| * log2|O|` exceeds this.
    pub max_bits: f64,
    /// Give up after this many search nodes.
    pub max_nodes: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_bits: 200.0,
            max_nodes: 5_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SearchOutcome {
    Found(DeterministicStrategy),
    /// The search space was exhausted.
    NoneExists,
    Undecided(String),
}

impl SearchOutcome {
    pub fn found(&self) -> Option<&DeterministicStrategy> {
        match self {
            SearchOutcome::Found(s) => Some(s),
            _ => None,
        }
    }
}

pub fn find_deterministic_perfect(game: &SyncGame) -> SearchOutcome {
    find_deterministic_perfect_with(game, SearchBudget::default())
}

/// Backtracking over inputs with forward checking of pairwise constraints.
pub fn find_deterministic_perfect_with(game: &SyncGame, budget: SearchBudget) -> SearchOutcome {
    let n = game.n_inputs();
    let bits = n as f64 * (game.n_outputs().max(1) as f64).log2();
    if bits > budget.max_bits {
        return SearchOutcome::Undecided(format!(
            "search space of {bits:.1} bits exceeds the budget of {} bits",
            budget.max_bits
        ));
    }
    let neighbours: Vec<Vec<usize>> = (0..n)
        .map(|x| (0..n).filter(|&y| y != x && game.interacts(x, y)).collect())
        .collect();
    let domains: Vec<Vec<usize>> = (0..n).map(|x| game.candidates(x)).collect();
    let mut search = Search {
        game,
        neighbours: &neighbours,
        assignment: vec![None; n],
        nodes: 0,
        max_nodes: budget.max_nodes,
    };
    match search.run(domains) {
        Ok(true) => {
            let assignment = search.assignment.iter().map(|a| a.unwrap()).collect();
            let s = DeterministicStrategy { assignment };
            debug_assert!(s.is_perfect_for(game));
            SearchOutcome::Found(s)
        }
        Ok(false) => SearchOutcome::NoneExists,
        Err(()) => SearchOutcome::Undecided(format!(
            "node budget of {} exhausted",
            budget.max_nodes
        )),
    }
}

struct Search<'a> {
    game: &'a SyncGame,
    neighbours: &'a [Vec<usize>],
    assignment: Vec<Option<usize>>,
    nodes: u64,
    max_nodes: u64,
}

impl Search<'_> {
    fn run(&mut self, domains: Vec<Vec<usize>>) -> std::result::Result<bool, ()> {
        // smallest domain first, ties to the most constrained input
        let Some(x) = (0..domains.len())
            .filter(|&x| self.assignment[x].is_none())
            .min_by_key(|&x| (domains[x].len(), usize::MAX - self.neighbours[x].len()))
        else {
            return Ok(true);
        };
        for &a in &domains[x] {
            self.nodes += 1;
            if self.nodes > self.max_nodes {
                return Err(());
            }
            let mut next = domains.clone();
            next[x] = vec![a];
            let mut dead = false;
            for &y in &self.neighbours[x] {
                if self.assignment[y].is_some() {
                    continue;
                }
                next[y].retain(|&b| self.game.wins(x, y, a, b) && self.game.wins(y, x, b, a));
                if next[y].is_empty() {
                    dead = true;
                    break;
                }
            }
            if dead {
                continue;
            }
            self.assignment[x] = Some(a);
            if self.run(next)? {
                return Ok(true);
            }
            self.assignment[x] = None;
        }
        Ok(false)
    }
}

/// Residuals of the game-algebra relations for a concrete PVM family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelationReport {
    /// `max |E - E^2|_2`.
    pub idempotence_defect: f64,
    /// `max |E - E*|_2`.
    pub hermitian_defect: f64,
    /// `max_x |sum_a E_{x,a} - I|_2`.
    pub completeness_defect: f64,
    /// `max |E_{x,a} E_{y,b}|_2` over losing tuples.
    pub losing_product: f64,
    pub worst_losing_tuple: Option<[usize; 4]>,
    pub losing_pairs_checked: usize,
    pub tol: f64,
    pub pass: bool,
}

impl RelationReport {
    pub fn max_residual(&self) -> f64 {
        self.idempotence_defect
            .max(self.hermitian_defect)
            .max(self.completeness_defect)
            .max(self.losing_product)
    }
}

pub fn check_game_algebra_relations(
    game: &SyncGame,
    s: &OperatorStrategy,
    tol: f64,
) -> Result<RelationReport> {
    check_game_algebra_relations_par(game, s, tol, 1)
}

/// Same as [`check_game_algebra_relations`], splitting the losing-product
/// scan over `jobs` threads.
pub fn check_game_algebra_relations_par(
    game: &SyncGame,
    s: &OperatorStrategy,
    tol: f64,
    jobs: usize,
) -> Result<RelationReport> {
    if s.n_inputs() != game.n_inputs() || s.n_outputs() != game.n_outputs() {
        return Err(Error::DimensionMismatch(format!(
            "strategy has {} inputs / {} outputs, game has {} / {}",
            s.n_inputs(),
            s.n_outputs(),
            game.n_inputs(),
            game.n_outputs()
        )));
    }
    let mut idempotence_defect = 0.0f64;
    let mut hermitian_defect = 0.0f64;
    let mut completeness_defect = 0.0f64;
    let id = CMatrix::identity(s.dim());
    for x in 0..s.n_inputs() {
        for (_, e) in s.row(x) {
            idempotence_defect = idempotence_defect.max(norm2(&(e - &(e * e))));
            hermitian_defect = hermitian_defect.max(norm2(&(e - &e.adjoint())));
        }
        completeness_defect = completeness_defect.max(norm2(&(&s.row_sum(x) - &id)));
    }

    let gens: Vec<(usize, usize, &CMatrix)> = (0..s.n_inputs())
        .flat_map(|x| s.row(x).map(move |(a, e)| (x, a, e)))
        .collect();
    let scan = |range: std::ops::Range<usize>| {
        let mut worst = (0.0f64, None, 0usize);
        for i in range {
            let (x, a, e) = gens[i];
            for &(y, b, f) in &gens[i..] {
                let tuple = if !game.wins(x, y, a, b) {
                    [x, y, a, b]
                } else if !game.wins(y, x, b, a) {
                    [y, x, b, a]
                } else {
                    continue;
                };
                worst.2 += 1;
                // |EF|_2 = |FE|_2 for self-adjoint E, F
                let r = norm2(&(e * f));
                if worst.1.is_none() || r > worst.0 {
                    worst.0 = r;
                    worst.1 = Some(tuple);
                }
            }
        }
        worst
    };
    let jobs = jobs.max(1).min(gens.len().max(1));
    let parts: Vec<(f64, Option<[usize; 4]>, usize)> = if jobs == 1 {
        vec![scan(0..gens.len())]
    } else {
        let chunk = gens.len().div_ceil(jobs);
        std::thread::scope(|sc| {
            let handles: Vec<_> = (0..jobs)
                .map(|j| {
                    let lo = (j * chunk).min(gens.len());
                    let hi = ((j + 1) * chunk).min(gens.len());
                    let scan = &scan;
                    sc.spawn(move || scan(lo..hi))
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        })
    };
    let mut losing_product = 0.0f64;
    let mut worst_losing_tuple = None;
    let mut losing_pairs_checked = 0;
    for (r, t, c) in parts {
        losing_pairs_checked += c;
        if t.is_some() && (worst_losing_tuple.is_none() || r > losing_product) {
            losing_product = r;
            worst_losing_tuple = t;
        }
    }
    let mut report = RelationReport {
        idempotence_defect,
        hermitian_defect,
        completeness_defect,
        losing_product,
        worst_losing_tuple,
        losing_pairs_checked,
        tol,
        pass: false,
    };
    report.pass = report.max_residual() <= tol;
    Ok(report)
}

/// Projection defect of each generator, for diagnostics.
pub fn generator_defects(s: &OperatorStrategy) -> Vec<(usize, usize, f64)> {
    (0..s.n_inputs())
        .flat_map(|x| s.row(x).map(move |(a, e)| (x, a, matops::projection_defect(e))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::solve_exhaustive;
    use crate::graphs::{chi_with, SolverLimits};
    use crate::matops::pauli;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mask(signs: &[i8]) -> usize {
        SignVector::new(signs.to_vec()).unwrap().to_mask() as usize
    }

    fn full_scan_synchronous(g: &SyncGame) -> bool {
        let (n, m) = (g.n_inputs(), g.n_outputs());
        (0..n).all(|x| (0..m).all(|a| (0..m).all(|b| a == b || !g.wins(x, x, a, b))))
    }

    #[test]
    fn single_equation_predicate() {
        let sys = BinaryLinearSystem::from_one_based(1, &[vec![1]], &[1]).unwrap();
        let g = SyncGame::synbcs(&sys).unwrap();
        let minus = mask(&[-1]);
        let plus = mask(&[1]);
        assert!(g.wins(0, 0, minus, minus));
        assert!(!g.wins(0, 0, plus, plus));
        assert_eq!(g.candidates(0), vec![minus]);
    }

    #[test]
    fn magic_square_game_shape() {
        let g = SyncGame::synbcs(&BinaryLinearSystem::magic_square()).unwrap();
        assert_eq!(g.n_inputs(), 6);
        assert_eq!(g.n_outputs(), 512);
        for x in 0..6 {
            let winners = (0..512).filter(|&a| g.wins(x, x, a, a)).count();
            assert_eq!(winners, 4);
            assert_eq!(g.candidates(x).len(), 4);
        }
        assert!(full_scan_synchronous(&g));
        assert_eq!(find_deterministic_perfect(&g), SearchOutcome::NoneExists);
    }

    #[test]
    fn synbcs_refuses_large_n() {
        let sys = BinaryLinearSystem::from_one_based(21, &[(1..=21).collect()], &[0]).unwrap();
        assert!(matches!(SyncGame::synbcs(&sys), Err(Error::Budget(_))));
    }

    #[test]
    fn hom_game_examples() {
        let k2 = Graph::complete(2);
        let g = SyncGame::hom(&k2, &k2);
        assert!(full_scan_synchronous(&g));
        let id = DeterministicStrategy {
            assignment: vec![0, 1],
        };
        assert!(id.is_perfect_for(&g));
        let k3 = Graph::complete(3);
        assert_eq!(
            find_deterministic_perfect(&SyncGame::hom(&k3, &k2)),
            SearchOutcome::NoneExists
        );
        for n in 1..=6 {
            let kn = Graph::complete(n);
            assert!(find_deterministic_perfect(&SyncGame::hom(&kn, &kn))
                .found()
                .is_some());
        }
    }

    #[test]
    fn iso_game_examples() {
        let k1 = Graph::complete(1);
        let g = SyncGame::iso(&k1, &k1);
        assert!(full_scan_synchronous(&g));
        assert!(find_deterministic_perfect(&g).found().is_some());

        let k2 = Graph::complete(2);
        let e2 = Graph::empty(2);
        assert!(full_scan_synchronous(&SyncGame::iso(&k2, &e2)));
        assert_eq!(
            find_deterministic_perfect(&SyncGame::iso(&k2, &e2)),
            SearchOutcome::NoneExists
        );

        let c5 = Graph::cycle(5);
        let g = SyncGame::iso(&c5, &c5);
        // identity bijection: g_v -> h_v and h_v -> g_v
        let assignment: Vec<usize> = (0..10).map(|v| (v + 5) % 10).collect();
        assert!(DeterministicStrategy { assignment }.is_perfect_for(&g));
    }

    #[test]
    fn iso_game_detects_nonisomorphic() {
        let path = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let tri = Graph::complete(3);
        assert_eq!(
            find_deterministic_perfect(&SyncGame::iso(&path, &tri)),
            SearchOutcome::NoneExists
        );
        let path2 = Graph::from_edges(3, &[(0, 2), (2, 1)]).unwrap();
        let found = find_deterministic_perfect(&SyncGame::iso(&path, &path2));
        assert!(found.found().is_some());
    }

    #[test]
    fn deterministic_search_matches_gf2() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..60 {
            let n = rng.gen_range(1..=8);
            let m = rng.gen_range(1..=5);
            let rows: Vec<Vec<usize>> = (0..m)
                .map(|_| {
                    let mut r: Vec<usize> = (1..=n).filter(|_| rng.gen_bool(0.4)).collect();
                    if r.is_empty() {
                        r.push(rng.gen_range(1..=n));
                    }
                    r
                })
                .collect();
            let b: Vec<u8> = (0..m).map(|_| rng.gen_range(0..2)).collect();
            let sys = BinaryLinearSystem::from_one_based(n, &rows, &b).unwrap();
            let game = SyncGame::synbcs(&sys).unwrap();
            let outcome = find_deterministic_perfect(&game);
            assert_eq!(outcome.found().is_some(), solve_exhaustive(&sys).is_some());
            if let Some(f) = outcome.found() {
                assert!(f.is_perfect_for(&game));
            }
        }
    }

    #[test]
    fn hom_to_complete_matches_chromatic_number() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..25 {
            let n = rng.gen_range(1..=9);
            let mut g = Graph::empty(n);
            for v in 0..n {
                for w in v + 1..n {
                    if rng.gen_bool(0.45) {
                        g.add_edge(v, w).unwrap();
                    }
                }
            }
            let chi = chi_with(&g, SolverLimits::default()).unwrap();
            for c in 1..=n {
                let found = find_deterministic_perfect(&SyncGame::hom(&g, &Graph::complete(c)));
                assert_eq!(found.found().is_some(), chi <= c, "n={n} c={c} chi={chi}");
            }
        }
    }

    #[test]
    fn search_budget_reports_undecided() {
        let budget = SearchBudget {
            max_bits: 1.0,
            max_nodes: 10,
        };
        let g = SyncGame::hom(&Graph::complete(4), &Graph::complete(4));
        assert!(matches!(
            find_deterministic_perfect_with(&g, budget),
            SearchOutcome::Undecided(_)
        ));
    }

    #[test]
    fn explicit_json_roundtrip() {
        let g = SyncGame::explicit(
            vec!["x".into()],
            vec!["a".into(), "b".into()],
            [[0, 0, 1, 1]],
        )
        .unwrap();
        assert!(g.wins(0, 0, 0, 0));
        assert!(!g.wins(0, 0, 1, 1));
        assert!(!g.wins(0, 0, 0, 1));
        let back = SyncGame::from_json(&g.to_json_value().to_string()).unwrap();
        assert_eq!(back, g);
        let sys = SyncGame::synbcs(&BinaryLinearSystem::magic_square()).unwrap();
        assert_eq!(SyncGame::from_json(&sys.to_json_value().to_string()).unwrap(), sys);
        assert!(SyncGame::explicit(vec!["x".into()], vec!["a".into()], [[0, 0, 1, 0]]).is_err());
    }

    #[test]
    fn trivial_relations() {
        let g = SyncGame::explicit(vec!["x".into()], vec!["a".into()], []).unwrap();
        let s = OperatorStrategy::deterministic(&[0], 1);
        let r = check_game_algebra_relations(&g, &s, 0.0).unwrap();
        assert!(r.pass);
        assert_eq!(r.max_residual(), 0.0);
    }

    #[test]
    fn relation_checker_sees_losing_products() {
        // two mutually unbiased PVMs on a game forcing equal answers
        let g = SyncGame::hom(&Graph::complete(2), &Graph::empty(2));
        let mut s = OperatorStrategy::new(2, 2, 2);
        let half = |sign: f64| (&pauli::i2() + &pauli::x().scale_re(sign)).scale_re(0.5);
        s.set(0, 0, CMatrix::from_real_diag(&[1.0, 0.0]));
        s.set(0, 1, CMatrix::from_real_diag(&[0.0, 1.0]));
        s.set(1, 0, half(1.0));
        s.set(1, 1, half(-1.0));
        let r = check_game_algebra_relations(&g, &s, 1e-9).unwrap();
        assert!(!r.pass);
        assert!((r.losing_product - 0.5).abs() < 1e-12);
        let par = check_game_algebra_relations_par(&g, &s, 1e-9, 3).unwrap();
        assert_eq!(par.losing_product, r.losing_product);
        assert_eq!(par.losing_pairs_checked, r.losing_pairs_checked);
    }

    #[test]
    fn relation_checker_shape_mismatch() {
        let g = SyncGame::hom(&Graph::complete(2), &Graph::complete(2));
        let s = OperatorStrategy::deterministic(&[0], 2);
        assert!(check_game_algebra_relations(&g, &s, 1e-9).is_err());
    }
}
