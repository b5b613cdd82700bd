//! Solution groups of GF(2) systems and their finite-dimensional
//! representations.
//!
//! The solution group of `Ax = b` has involutive generators `u_1..u_n` and a
//! central involution `J`; equation-mates commute and each equation's
//! product equals `J^{b_i}`. A representation with `J = -I` yields a perfect
//! strategy for the synBCS game and vice versa.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::{check_game_algebra_relations, SyncGame};
use crate::gf2::BinaryLinearSystem;
use crate::matops::{self, kron, norm2, pauli, CMatrix};
use crate::strategies::{correlation_from_tracial, is_synchronous, losing_mass, OperatorStrategy};

/// A generator: `u_j` (0-based `j`) or `J`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Letter {
    U(usize),
    J,
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Letter::U(j) => write!(f, "u{}", j + 1),
            Letter::J => write!(f, "J"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelatorKind {
    /// `u_j^2`.
    Involution(usize),
    /// `J^2`.
    JInvolution,
    /// `[u_j, u_k]` for `j < k` sharing equation `i`.
    Commutator { equation: usize, j: usize, k: usize },
    /// `[u_j, J]`.
    JCommutator(usize),
    /// `prod_{j in V_i} u_j * J^{b_i}`.
    Product(usize),
}

impl fmt::Display for RelatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            RelatorKind::Involution(j) => write!(f, "u{}^2", j + 1),
            RelatorKind::JInvolution => write!(f, "J^2"),
            RelatorKind::Commutator { equation, j, k } => {
                write!(f, "[u{},u{}] (equation {})", j + 1, k + 1, equation + 1)
            }
            RelatorKind::JCommutator(j) => write!(f, "[u{},J]", j + 1),
            RelatorKind::Product(i) => write!(f, "product of equation {}", i + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relator {
    pub kind: RelatorKind,
    pub word: Vec<Letter>,
}

impl fmt::Display for Relator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.word.iter().map(|l| l.to_string()).collect();
        write!(f, "{}", parts.join("*"))
    }
}

/// The presentation of `Gamma(A, b)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupPresentation {
    pub n: usize,
    pub relators: Vec<Relator>,
}

impl GroupPresentation {
    /// Plain text: a generators line, then one relator word per line.
    /// Every generator is an involution, so no inverse letters appear.
    pub fn to_text(&self) -> String {
        let mut out = String::from("generators:");
        for j in 0..self.n {
            out.push_str(&format!(" u{}", j + 1));
        }
        out.push_str(" J\n");
        for r in &self.relators {
            out.push_str(&r.to_string());
            out.push('\n');
        }
        out
    }
}

/// Relators in order: `u_j^2`, `J^2`, equation-mate commutators (by
/// equation, then `j < k`), `[u_j, J]`, and the equation products.
pub fn presentation(sys: &BinaryLinearSystem) -> GroupPresentation {
    let n = sys.n();
    let mut relators = Vec::new();
    for j in 0..n {
        relators.push(Relator {
            kind: RelatorKind::Involution(j),
            word: vec![Letter::U(j), Letter::U(j)],
        });
    }
    relators.push(Relator {
        kind: RelatorKind::JInvolution,
        word: vec![Letter::J, Letter::J],
    });
    for i in 0..sys.m() {
        let support = sys.support(i);
        for (t, &j) in support.iter().enumerate() {
            for &k in &support[t + 1..] {
                relators.push(Relator {
                    kind: RelatorKind::Commutator { equation: i, j, k },
                    word: vec![Letter::U(j), Letter::U(k), Letter::U(j), Letter::U(k)],
                });
            }
        }
    }
    for j in 0..n {
        relators.push(Relator {
            kind: RelatorKind::JCommutator(j),
            word: vec![Letter::U(j), Letter::J, Letter::U(j), Letter::J],
        });
    }
    for i in 0..sys.m() {
        let mut word: Vec<Letter> = sys.support(i).iter().map(|&j| Letter::U(j)).collect();
        if sys.rhs(i) {
            word.push(Letter::J);
        }
        relators.push(Relator {
            kind: RelatorKind::Product(i),
            word,
        });
    }
    GroupPresentation { n, relators }
}

/// Images of `u_1..u_n` and `J` on `C^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupRep {
    pub dim: usize,
    pub images: Vec<CMatrix>,
    pub j_image: CMatrix,
}

#[derive(Serialize, Deserialize)]
struct RepJson {
    dim: usize,
    generators: Vec<CMatrix>,
    #[serde(rename = "J")]
    j: CMatrix,
}

impl GroupRep {
    pub fn new(images: Vec<CMatrix>, j_image: CMatrix) -> Result<Self> {
        let dim = j_image.dim();
        if let Some(bad) = images.iter().find(|w| w.dim() != dim) {
            return Err(Error::DimensionMismatch(format!(
                "generator image of dimension {} in a {dim}-dimensional representation",
                bad.dim()
            )));
        }
        Ok(GroupRep {
            dim,
            images,
            j_image,
        })
    }

    /// The scalar representation `u_j -> x_j`, `J -> -1` of a classical
    /// solution.
    pub fn from_solution(x: &crate::gf2::SignVector) -> Self {
        GroupRep {
            dim: 1,
            images: x
                .entries()
                .iter()
                .map(|&s| CMatrix::scalar(1, (s as f64).into()))
                .collect(),
            j_image: CMatrix::scalar(1, (-1.0).into()),
        }
    }

    pub fn direct_sum(&self, other: &GroupRep) -> Result<GroupRep> {
        if self.images.len() != other.images.len() {
            return Err(Error::DimensionMismatch(
                "representations have different generator counts".into(),
            ));
        }
        GroupRep::new(
            self.images
                .iter()
                .zip(&other.images)
                .map(|(a, b)| a.direct_sum(b))
                .collect(),
            self.j_image.direct_sum(&other.j_image),
        )
    }

    fn image(&self, l: Letter) -> &CMatrix {
        match l {
            Letter::U(j) => &self.images[j],
            Letter::J => &self.j_image,
        }
    }

    pub fn evaluate(&self, word: &[Letter]) -> CMatrix {
        word.iter()
            .fold(CMatrix::identity(self.dim), |acc, &l| &acc * self.image(l))
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(RepJson {
            dim: self.dim,
            generators: self.images.clone(),
            j: self.j_image.clone(),
        })
        .expect("representation serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RepJson = serde_json::from_str(text)?;
        let rep = GroupRep::new(raw.generators, raw.j)?;
        if rep.dim != raw.dim {
            return Err(Error::DimensionMismatch(format!(
                "declared dim {} but matrices are {}-dimensional",
                raw.dim, rep.dim
            )));
        }
        Ok(rep)
    }
}

/// The two-qubit Pauli representation of the magic square, variables
/// numbered row by row:
///
/// ```text
/// XI  IX  XX
/// IZ  ZI  ZZ
/// XZ  ZX  YY
/// ```
pub fn magic_square_pauli_rep() -> GroupRep {
    let (i, x, y, z) = (pauli::i2(), pauli::x(), pauli::y(), pauli::z());
    let images = vec![
        kron(&x, &i),
        kron(&i, &x),
        kron(&x, &x),
        kron(&i, &z),
        kron(&z, &i),
        kron(&z, &z),
        kron(&x, &z),
        kron(&z, &x),
        kron(&y, &y),
    ];
    GroupRep {
        dim: 4,
        images,
        j_image: CMatrix::scalar(4, (-1.0).into()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelatorResidual {
    pub relator: String,
    pub word: String,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepReport {
    /// `max_j |w_j* w_j - I|_2`, including `J`.
    pub unitarity: f64,
    pub involution: f64,
    pub j_involution: f64,
    pub commutator: f64,
    pub j_commutator: f64,
    /// `|prod_{j in V_i} w_j - J^{b_i}|_2` per equation.
    pub products: Vec<f64>,
    pub relators: Vec<RelatorResidual>,
    /// `|J - I|_2 > tol`.
    pub j_nontrivial: bool,
    pub tol: f64,
    pub pass: bool,
}

impl RepReport {
    pub fn max_residual(&self) -> f64 {
        self.relators
            .iter()
            .map(|r| r.residual)
            .fold(self.unitarity, f64::max)
    }

    pub fn failing(&self) -> Vec<&RelatorResidual> {
        self.relators.iter().filter(|r| r.residual > self.tol).collect()
    }
}

pub fn verify_rep(rep: &GroupRep, sys: &BinaryLinearSystem, tol: f64) -> Result<RepReport> {
    if rep.images.len() != sys.n() {
        return Err(Error::DimensionMismatch(format!(
            "representation has {} generators but the system has {} variables",
            rep.images.len(),
            sys.n()
        )));
    }
    let id = CMatrix::identity(rep.dim);
    let unitarity = rep
        .images
        .iter()
        .chain(std::iter::once(&rep.j_image))
        .map(|w| norm2(&(&(&w.adjoint() * w) - &id)))
        .fold(0.0, f64::max);
    let mut report = RepReport {
        unitarity,
        involution: 0.0,
        j_involution: 0.0,
        commutator: 0.0,
        j_commutator: 0.0,
        products: vec![0.0; sys.m()],
        relators: Vec::new(),
        j_nontrivial: norm2(&(&rep.j_image - &id)) > tol,
        tol,
        pass: false,
    };
    for r in presentation(sys).relators {
        let residual = match r.kind {
            // a product relator reads prod w_j = J^{b_i}
            RelatorKind::Product(i) => {
                let lhs = sys
                    .support(i)
                    .iter()
                    .fold(id.clone(), |acc, &j| &acc * &rep.images[j]);
                let rhs = if sys.rhs(i) { rep.j_image.clone() } else { id.clone() };
                norm2(&(&lhs - &rhs))
            }
            _ => norm2(&(&rep.evaluate(&r.word) - &id)),
        };
        let slot = match r.kind {
            RelatorKind::Involution(_) => &mut report.involution,
            RelatorKind::JInvolution => &mut report.j_involution,
            RelatorKind::Commutator { .. } => &mut report.commutator,
            RelatorKind::JCommutator(_) => &mut report.j_commutator,
            RelatorKind::Product(i) => &mut report.products[i],
        };
        *slot = slot.max(residual);
        report.relators.push(RelatorResidual {
            relator: r.kind.to_string(),
            word: r.to_string(),
            residual,
        });
    }
    report.pass = report.max_residual() <= tol;
    Ok(report)
}

fn require_passing(rep: &GroupRep, sys: &BinaryLinearSystem, tol: f64) -> Result<RepReport> {
    let report = verify_rep(rep, sys, tol)?;
    if !report.pass {
        let worst = report
            .relators
            .iter()
            .max_by(|a, b| a.residual.total_cmp(&b.residual))
            .map(|r| r.relator.clone())
            .unwrap_or_else(|| "unitarity".into());
        return Err(Error::verification(
            format!("representation relator {worst}"),
            report.max_residual(),
            tol,
        ));
    }
    Ok(report)
}

/// Compresses a representation to the `-1` eigenspace of `J`.
pub fn normalize_j(rep: &GroupRep, sys: &BinaryLinearSystem, tol: f64) -> Result<GroupRep> {
    require_passing(rep, sys, tol)?;
    let d = rep.dim;
    let q = (&CMatrix::identity(d) - &rep.j_image).scale_re(0.5).hermitian_part();
    let comm = rep
        .images
        .iter()
        .map(|w| norm2(&q.commutator(w)))
        .fold(0.0, f64::max);
    if comm > tol {
        return Err(Error::verification("[(I - J)/2, w_j] = 0", comm, tol));
    }
    let basis = matops::spectral_basis(&q, &matops::Window::values(&[1.0], 1e-6), 0.0)?;
    if basis.is_empty() {
        return Err(Error::Infeasible(
            "J has no -1 eigenspace; nothing to compress to".into(),
        ));
    }
    let k = basis.len();
    let out = GroupRep {
        dim: k,
        images: rep.images.iter().map(|w| w.compress(&basis)).collect(),
        j_image: CMatrix::scalar(k, (-1.0).into()),
    };
    require_passing(&out, sys, 10.0 * tol)?;
    Ok(out)
}

/// `E_{i,x} = prod_{j in V_i} (I + x_j w_j) / 2` for `x in S_i`.
pub fn strategy_from_rep(rep: &GroupRep, sys: &BinaryLinearSystem, tol: f64) -> Result<OperatorStrategy> {
    sys.require_full_columns()?;
    require_passing(rep, sys, tol)?;
    let d = rep.dim;
    let id = CMatrix::identity(d);
    let j_defect = norm2(&(&rep.j_image + &id));
    if j_defect > tol {
        return Err(Error::verification("J = -I", j_defect, tol));
    }
    let game = SyncGame::synbcs(sys)?;
    let mut s = OperatorStrategy::new(d, sys.m(), game.n_outputs());
    let chi = |w: &CMatrix, sign: i8| (&id + &w.scale_re(sign as f64)).scale_re(0.5);
    let mut order_defect = 0.0f64;
    for i in 0..sys.m() {
        for x in sys.local_solutions(i)? {
            let factors: Vec<CMatrix> = sys
                .support(i)
                .iter()
                .map(|&j| chi(&rep.images[j], x.get(j)))
                .collect();
            let forward = factors.iter().fold(id.clone(), |acc, f| &acc * f);
            let backward = factors.iter().rev().fold(id.clone(), |acc, f| &acc * f);
            order_defect = order_defect.max(norm2(&(&forward - &backward)));
            s.set(i, x.to_mask() as usize, forward);
        }
    }
    let check_tol = 10.0 * tol;
    if order_defect > check_tol {
        return Err(Error::verification(
            "spectral projection products commute",
            order_defect,
            check_tol,
        ));
    }
    let relations = check_game_algebra_relations(&game, &s, check_tol)?;
    if !relations.pass {
        return Err(Error::verification(
            "game-algebra relations of the synBCS strategy",
            relations.max_residual(),
            check_tol,
        ));
    }
    let c = correlation_from_tracial(&s, check_tol)?;
    let lose = losing_mass(&c, &game)?;
    if lose > check_tol || !is_synchronous(&c, check_tol) {
        return Err(Error::verification("perfect synchronous correlation", lose, check_tol));
    }
    Ok(s)
}

/// Recovers `w_k = sum_{x in S_i} x_k E_{i,x}`, checking that every
/// equation containing `k` gives the same operator.
pub fn rep_from_strategy(s: &OperatorStrategy, sys: &BinaryLinearSystem, tol: f64) -> Result<GroupRep> {
    sys.require_full_columns()?;
    let game = SyncGame::synbcs(sys)?;
    let relations = check_game_algebra_relations(&game, s, tol)?;
    if !relations.pass {
        return Err(Error::verification(
            "game-algebra relations of the input strategy",
            relations.max_residual(),
            tol,
        ));
    }
    let d = s.dim();
    let observable = |i: usize, k: usize| -> CMatrix {
        s.row(i).fold(CMatrix::zeros(d), |acc, (a, e)| {
            let sign = if a >> k & 1 == 1 { -1.0 } else { 1.0 };
            &acc + &e.scale_re(sign)
        })
    };
    let threshold = 10.0 * tol;
    let mut images = Vec::with_capacity(sys.n());
    for k in 0..sys.n() {
        let eqs: Vec<usize> = (0..sys.m())
            .filter(|&i| sys.support(i).binary_search(&k).is_ok())
            .collect();
        let candidates: Vec<CMatrix> = eqs.iter().map(|&i| observable(i, k)).collect();
        for a in 0..candidates.len() {
            for b in a + 1..candidates.len() {
                let diff = norm2(&(&candidates[a] - &candidates[b]));
                if diff > threshold {
                    return Err(Error::Verification {
                        check: format!(
                            "u{} is not independent of the equation: equations {} and {} disagree",
                            k + 1,
                            eqs[a] + 1,
                            eqs[b] + 1
                        ),
                        residual: diff,
                        threshold,
                    });
                }
            }
        }
        images.push(candidates.into_iter().next().expect("full columns"));
    }
    let rep = GroupRep {
        dim: d,
        images,
        j_image: CMatrix::scalar(d, (-1.0).into()),
    };
    require_passing(&rep, sys, threshold)?;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::SignVector;

    fn single_minus() -> BinaryLinearSystem {
        BinaryLinearSystem::from_one_based(1, &[vec![1]], &[1]).unwrap()
    }

    #[test]
    fn single_equation_presentation() {
        let p = presentation(&single_minus());
        let words: Vec<String> = p.relators.iter().map(|r| r.to_string()).collect();
        assert_eq!(words, vec!["u1*u1", "J*J", "u1*J*u1*J", "u1*J"]);
        assert_eq!(p.to_text(), "generators: u1 J\nu1*u1\nJ*J\nu1*J*u1*J\nu1*J\n");
    }

    #[test]
    fn magic_square_relator_count() {
        let sys = BinaryLinearSystem::magic_square();
        let p = presentation(&sys);
        let count = |f: fn(&RelatorKind) -> bool| p.relators.iter().filter(|r| f(&r.kind)).count();
        assert_eq!(count(|k| matches!(k, RelatorKind::Involution(_) | RelatorKind::JInvolution)), 10);
        assert_eq!(count(|k| matches!(k, RelatorKind::Commutator { .. })), 18);
        assert_eq!(count(|k| matches!(k, RelatorKind::JCommutator(_))), 9);
        assert_eq!(count(|k| matches!(k, RelatorKind::Product(_))), 6);
        let homog = presentation(&sys.homogeneous());
        assert!(homog
            .relators
            .iter()
            .filter(|r| matches!(r.kind, RelatorKind::Product(_)))
            .all(|r| !r.word.contains(&Letter::J)));
    }

    #[test]
    fn pauli_rep_verifies() {
        let sys = BinaryLinearSystem::magic_square();
        let rep = magic_square_pauli_rep();
        let r = verify_rep(&rep, &sys, 1e-12).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.j_nontrivial);
    }

    #[test]
    fn trivial_rep_of_homogeneous_system() {
        let sys = BinaryLinearSystem::magic_square().homogeneous();
        let rep = GroupRep::new(vec![CMatrix::identity(2); 9], CMatrix::identity(2)).unwrap();
        let r = verify_rep(&rep, &sys, 1e-12).unwrap();
        assert!(r.pass);
        assert!(!r.j_nontrivial);
        assert!(normalize_j(&rep, &sys, 1e-9).is_err());
    }

    #[test]
    fn sign_flip_breaks_one_product() {
        let sys = BinaryLinearSystem::magic_square();
        let mut rep = magic_square_pauli_rep();
        rep.j_image = CMatrix::identity(4);
        let r = verify_rep(&rep, &sys, 1e-12).unwrap();
        let failing = r.failing();
        assert_eq!(failing.len(), 1);
        assert!((failing[0].residual - 2.0).abs() < 1e-12);
        assert!(failing[0].relator.contains("equation 6"));
    }

    #[test]
    fn normalize_recovers_pauli_block() {
        let sys = BinaryLinearSystem::magic_square();
        let pauli = magic_square_pauli_rep();
        assert_eq!(normalize_j(&pauli, &sys, 1e-9).unwrap(), pauli);
        let trivial = GroupRep::new(vec![CMatrix::identity(1); 9], CMatrix::identity(1)).unwrap();
        assert!(verify_rep(&trivial, &sys, 1e-12).unwrap().pass);
        let mixed = trivial.direct_sum(&pauli).unwrap();
        let out = normalize_j(&mixed, &sys, 1e-9).unwrap();
        assert_eq!(out.dim, 4);
        assert!(verify_rep(&out, &sys, 1e-12).unwrap().pass);
        // the compressed images are unitarily equivalent to the Paulis
        for (w, p) in out.images.iter().zip(&pauli.images) {
            assert!((w.trace() - p.trace()).norm() < 1e-12);
        }
    }

    #[test]
    fn strategy_from_pauli_rep() {
        let sys = BinaryLinearSystem::magic_square();
        let s = strategy_from_rep(&magic_square_pauli_rep(), &sys, 1e-9).unwrap();
        for i in 0..6 {
            let row: Vec<_> = s.row(i).collect();
            assert_eq!(row.len(), 4);
            for (_, e) in row {
                assert!((e.trace().re - 1.0).abs() < 1e-12);
            }
        }
        let back = rep_from_strategy(&s, &sys, 1e-9).unwrap();
        assert!(verify_rep(&back, &sys, 1e-8).unwrap().pass);
    }

    #[test]
    fn single_equation_scalar_rep() {
        let sys = single_minus();
        let rep = GroupRep::from_solution(&SignVector::new(vec![-1]).unwrap());
        let s = strategy_from_rep(&rep, &sys, 1e-9).unwrap();
        assert_eq!(s.get(0, 1), Some(&CMatrix::identity(1)));
        assert_eq!(s.row(0).count(), 1);
    }

    #[test]
    fn classical_solution_roundtrip() {
        let sys = BinaryLinearSystem::from_one_based(3, &[vec![1, 2], vec![2, 3]], &[1, 0]).unwrap();
        let x = sys.solve().unwrap();
        let s = strategy_from_rep(&GroupRep::from_solution(&x), &sys, 1e-9).unwrap();
        let rep = rep_from_strategy(&s, &sys, 1e-9).unwrap();
        for (j, w) in rep.images.iter().enumerate() {
            assert_eq!(w[(0, 0)].re, x.get(j) as f64);
        }
    }

    #[test]
    fn perturbed_strategy_rejected() {
        let sys = BinaryLinearSystem::magic_square();
        let s = strategy_from_rep(&magic_square_pauli_rep(), &sys, 1e-9).unwrap();
        let mut noise = CMatrix::zeros(4);
        noise[(0, 1)] = 1e-3.into();
        noise[(1, 0)] = 1e-3.into();
        let (a, e) = s.row(0).next().map(|(a, e)| (a, e.clone())).unwrap();
        let mut bad = s.clone();
        bad.set(0, a, &e + &noise);
        assert!(rep_from_strategy(&bad, &sys, 1e-9).is_err());
    }

    #[test]
    fn rep_json_roundtrip() {
        let rep = magic_square_pauli_rep();
        let back = GroupRep::from_json(&rep.to_json_value().to_string()).unwrap();
        assert_eq!(back, rep);
    }
}
