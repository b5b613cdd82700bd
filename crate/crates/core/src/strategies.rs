//! Finite-dimensional synchronous strategies and the correlations they
//! produce.
//!
//! An [`OperatorStrategy`] is a tracial strategy: one PVM per input on a
//! single `d`-dimensional space, with correlation `tr(E_{x,a} E_{y,b}) / d`.
//! A [`BipartiteStrategy`] is the tensor-product model with a shared state.
//! [`decompose_qs`] splits a synchronous bipartite strategy into a convex
//! combination of tracial ones along the level sets of its Schmidt
//! coefficients.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::SyncGame;
use crate::matops::{self, inner, kron_vec, norm2, vec_norm, CMatrix, ONE, ZERO};

/// Default Schmidt-coefficient clustering tolerance.
pub const SCHMIDT_CLUSTER_TOL: f64 = 1e-7;

/// A family of PVMs `E_{x,a}` on `C^d`, stored sparsely: absent entries are
/// the zero projection.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorStrategy {
    dim: usize,
    n_outputs: usize,
    pvms: Vec<BTreeMap<usize, CMatrix>>,
}

#[derive(Serialize, Deserialize)]
struct PvmEntryJson {
    input: usize,
    output: usize,
    matrix: CMatrix,
}

#[derive(Serialize, Deserialize)]
struct StrategyJson {
    dim: usize,
    inputs: usize,
    outputs: usize,
    pvms: Vec<PvmEntryJson>,
}

impl OperatorStrategy {
    pub fn new(dim: usize, n_inputs: usize, n_outputs: usize) -> Self {
        OperatorStrategy {
            dim,
            n_outputs,
            pvms: vec![BTreeMap::new(); n_inputs],
        }
    }

    /// The `d = 1` strategy answering `assignment[x]` on input `x`.
    pub fn deterministic(assignment: &[usize], n_outputs: usize) -> Self {
        let mut s = Self::new(1, assignment.len(), n_outputs);
        for (x, &a) in assignment.iter().enumerate() {
            s.set(x, a, CMatrix::identity(1));
        }
        s
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_inputs(&self) -> usize {
        self.pvms.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    /// Stores `E_{x,a}`; an exactly zero matrix clears the slot.
    pub fn set(&mut self, x: usize, a: usize, m: CMatrix) {
        assert!(a < self.n_outputs, "output {a} out of range");
        assert_eq!(m.dim(), self.dim, "projection dimension mismatch");
        if m.is_zero() {
            self.pvms[x].remove(&a);
        } else {
            self.pvms[x].insert(a, m);
        }
    }

    pub fn get(&self, x: usize, a: usize) -> Option<&CMatrix> {
        self.pvms[x].get(&a)
    }

    /// `E_{x,a}`, materializing zero for absent entries.
    pub fn get_or_zero(&self, x: usize, a: usize) -> CMatrix {
        self.get(x, a)
            .cloned()
            .unwrap_or_else(|| CMatrix::zeros(self.dim))
    }

    /// Nonzero projections of input `x`, by ascending output.
    pub fn row(&self, x: usize) -> impl Iterator<Item = (usize, &CMatrix)> {
        self.pvms[x].iter().map(|(&a, m)| (a, m))
    }

    pub fn row_sum(&self, x: usize) -> CMatrix {
        self.pvms[x]
            .values()
            .fold(CMatrix::zeros(self.dim), |acc, m| &acc + m)
    }

    /// Largest projection defect over all generators and largest
    /// completeness defect `|sum_a E_{x,a} - I|_2` over inputs.
    pub fn pvm_defects(&self) -> (f64, f64) {
        let proj = self
            .pvms
            .iter()
            .flat_map(|row| row.values())
            .map(matops::projection_defect)
            .fold(0.0, f64::max);
        let id = CMatrix::identity(self.dim);
        let comp = (0..self.n_inputs())
            .map(|x| norm2(&(&self.row_sum(x) - &id)))
            .fold(0.0, f64::max);
        (proj, comp)
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let (proj, comp) = self.pvm_defects();
        if proj > tol {
            return Err(Error::verification("strategy projection defect", proj, tol));
        }
        if comp > tol {
            return Err(Error::verification("strategy completeness", comp, tol));
        }
        Ok(())
    }

    /// Applies `f` to every stored projection.
    pub fn map_matrices(&self, dim: usize, f: impl Fn(&CMatrix) -> CMatrix) -> Self {
        let mut out = Self::new(dim, self.n_inputs(), self.n_outputs);
        for (x, row) in self.pvms.iter().enumerate() {
            for (&a, m) in row {
                out.set(x, a, f(m));
            }
        }
        out
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let pvms = self
            .pvms
            .iter()
            .enumerate()
            .flat_map(|(x, row)| {
                row.iter().map(move |(&a, m)| PvmEntryJson {
                    input: x,
                    output: a,
                    matrix: m.clone(),
                })
            })
            .collect();
        serde_json::to_value(StrategyJson {
            dim: self.dim,
            inputs: self.n_inputs(),
            outputs: self.n_outputs,
            pvms,
        })
        .expect("strategy serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: StrategyJson = serde_json::from_str(text)?;
        let mut s = Self::new(raw.dim, raw.inputs, raw.outputs);
        for e in raw.pvms {
            if e.input >= raw.inputs || e.output >= raw.outputs {
                return Err(Error::Validation(format!(
                    "pvm entry ({}, {}) out of range",
                    e.input, e.output
                )));
            }
            if e.matrix.dim() != raw.dim {
                return Err(Error::DimensionMismatch(format!(
                    "pvm entry ({}, {}) has dimension {} but strategy dim is {}",
                    e.input,
                    e.output,
                    e.matrix.dim(),
                    raw.dim
                )));
            }
            s.set(e.input, e.output, e.matrix);
        }
        Ok(s)
    }
}

/// `p(a,b|x,y)`, stored sparsely per input pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Correlation {
    n_inputs: usize,
    n_outputs: usize,
    p: Vec<Vec<BTreeMap<(usize, usize), f64>>>,
}

/// Largest `n^2 m^2` written in the dense JSON layout.
const DENSE_JSON_LIMIT: usize = 1_000_000;

impl Correlation {
    pub fn zeros(n_inputs: usize, n_outputs: usize) -> Self {
        Correlation {
            n_inputs,
            n_outputs,
            p: vec![vec![BTreeMap::new(); n_inputs]; n_inputs],
        }
    }

    /// The correlation of a deterministic synchronous strategy.
    pub fn deterministic(assignment: &[usize], n_outputs: usize) -> Self {
        let mut c = Self::zeros(assignment.len(), n_outputs);
        for (x, &a) in assignment.iter().enumerate() {
            for (y, &b) in assignment.iter().enumerate() {
                c.set(x, y, a, b, 1.0);
            }
        }
        c
    }

    pub fn uniform(n_inputs: usize, n_outputs: usize) -> Self {
        let mut c = Self::zeros(n_inputs, n_outputs);
        let v = 1.0 / (n_outputs * n_outputs) as f64;
        for x in 0..n_inputs {
            for y in 0..n_inputs {
                for a in 0..n_outputs {
                    for b in 0..n_outputs {
                        c.set(x, y, a, b, v);
                    }
                }
            }
        }
        c
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    pub fn set(&mut self, x: usize, y: usize, a: usize, b: usize, v: f64) {
        if v == 0.0 {
            self.p[x][y].remove(&(a, b));
        } else {
            self.p[x][y].insert((a, b), v);
        }
    }

    pub fn get(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.p[x][y].get(&(a, b)).copied().unwrap_or(0.0)
    }

    /// Nonzero entries `(x, y, a, b, p)` in lexicographic order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, usize, usize, f64)> + '_ {
        self.p.iter().enumerate().flat_map(|(x, row)| {
            row.iter()
                .enumerate()
                .flat_map(move |(y, m)| m.iter().map(move |(&(a, b), &v)| (x, y, a, b, v)))
        })
    }

    /// Largest violation of `p in [0, 1]` and of per-pair normalization.
    pub fn invariant_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for x in 0..self.n_inputs {
            for y in 0..self.n_inputs {
                let mut total = 0.0;
                for &v in self.p[x][y].values() {
                    worst = worst.max(-v).max(v - 1.0);
                    total += v;
                }
                worst = worst.max((total - 1.0).abs());
            }
        }
        worst
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let d = self.invariant_defect();
        if d > tol {
            Err(Error::verification("correlation invariants", d, tol))
        } else {
            Ok(())
        }
    }

    /// Largest entrywise difference.
    pub fn max_diff(&self, other: &Correlation) -> Result<f64> {
        self.check_shape(other.n_inputs, other.n_outputs)?;
        let mut worst = 0.0f64;
        for x in 0..self.n_inputs {
            for y in 0..self.n_inputs {
                for (&k, &v) in &self.p[x][y] {
                    let w = other.p[x][y].get(&k).copied().unwrap_or(0.0);
                    worst = worst.max((v - w).abs());
                }
                for (&k, &w) in &other.p[x][y] {
                    if !self.p[x][y].contains_key(&k) {
                        worst = worst.max(w.abs());
                    }
                }
            }
        }
        Ok(worst)
    }

    /// `sum_l t_l p_l`.
    pub fn convex_combination(parts: &[(f64, Correlation)]) -> Result<Correlation> {
        let Some((_, first)) = parts.first() else {
            return Err(Error::Validation("empty convex combination".into()));
        };
        let mut out = Correlation::zeros(first.n_inputs, first.n_outputs);
        for (t, c) in parts {
            c.check_shape(first.n_inputs, first.n_outputs)?;
            for (x, y, a, b, v) in c.entries() {
                let cur = out.get(x, y, a, b);
                out.set(x, y, a, b, cur + t * v);
            }
        }
        Ok(out)
    }

    fn check_shape(&self, n: usize, m: usize) -> Result<()> {
        if self.n_inputs != n || self.n_outputs != m {
            Err(Error::DimensionMismatch(format!(
                "correlation shape ({}, {}) vs ({n}, {m})",
                self.n_inputs, self.n_outputs
            )))
        } else {
            Ok(())
        }
    }

    /// Dense `{"n","m","p"}` indexed `[x][y][a][b]` when small; otherwise
    /// `{"n","m","sparse":[[x,y,a,b,p],...]}`.
    pub fn to_json_value(&self) -> serde_json::Value {
        let (n, m) = (self.n_inputs, self.n_outputs);
        if n * n * m * m <= DENSE_JSON_LIMIT {
            let p: Vec<Vec<Vec<Vec<f64>>>> = (0..n)
                .map(|x| {
                    (0..n)
                        .map(|y| {
                            (0..m)
                                .map(|a| (0..m).map(|b| self.get(x, y, a, b) + 0.0).collect())
                                .collect()
                        })
                        .collect()
                })
                .collect();
            serde_json::json!({ "n": n, "m": m, "p": p })
        } else {
            let sparse: Vec<serde_json::Value> = self
                .entries()
                .map(|(x, y, a, b, v)| serde_json::json!([x, y, a, b, v]))
                .collect();
            serde_json::json!({ "n": n, "m": m, "sparse": sparse })
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            n: usize,
            m: usize,
            p: Option<Vec<Vec<Vec<Vec<f64>>>>>,
            sparse: Option<Vec<(usize, usize, usize, usize, f64)>>,
        }
        let raw: Raw = serde_json::from_str(text)?;
        let mut c = Correlation::zeros(raw.n, raw.m);
        match (raw.p, raw.sparse) {
            (Some(p), None) => {
                let bad = || Error::Validation("dense correlation has the wrong shape".into());
                if p.len() != raw.n {
                    return Err(bad());
                }
                for (x, px) in p.iter().enumerate() {
                    if px.len() != raw.n {
                        return Err(bad());
                    }
                    for (y, pxy) in px.iter().enumerate() {
                        if pxy.len() != raw.m || pxy.iter().any(|r| r.len() != raw.m) {
                            return Err(bad());
                        }
                        for (a, row) in pxy.iter().enumerate() {
                            for (b, &v) in row.iter().enumerate() {
                                c.set(x, y, a, b, v);
                            }
                        }
                    }
                }
            }
            (None, Some(entries)) => {
                for (x, y, a, b, v) in entries {
                    if x >= raw.n || y >= raw.n || a >= raw.m || b >= raw.m {
                        return Err(Error::Validation(format!(
                            "sparse entry ({x},{y},{a},{b}) out of range"
                        )));
                    }
                    c.set(x, y, a, b, v);
                }
            }
            _ => {
                return Err(Error::Validation(
                    "correlation needs exactly one of \"p\" or \"sparse\"".into(),
                ))
            }
        }
        Ok(c)
    }
}

/// Tracial correlation `p(a,b|x,y) = tr(E_{x,a} E_{y,b}) / d`.
pub fn correlation_from_tracial(s: &OperatorStrategy, tol: f64) -> Result<Correlation> {
    s.validate(tol)?;
    let n = s.n_inputs();
    let d = s.dim() as f64;
    let mut c = Correlation::zeros(n, s.n_outputs());
    for x in 0..n {
        for y in 0..n {
            for (a, e) in s.row(x) {
                for (b, f) in s.row(y) {
                    // tr(EF) = sum_{r,c} E_{rc} F_{cr}
                    let mut t = ZERO;
                    let dim = s.dim();
                    for r in 0..dim {
                        for col in 0..dim {
                            t += e[(r, col)] * f[(col, r)];
                        }
                    }
                    let v = t.re / d;
                    if v.abs() > 1e-15 {
                        c.set(x, y, a, b, v);
                    }
                }
            }
        }
    }
    Ok(c)
}

/// `p(a,b|x,y) = max over x, a != b of p(a,b|x,x) <= tol`.
pub fn is_synchronous(c: &Correlation, tol: f64) -> bool {
    synchronicity_defect(c) <= tol
}

pub fn synchronicity_defect(c: &Correlation) -> f64 {
    (0..c.n_inputs())
        .flat_map(|x| {
            c.p[x][x]
                .iter()
                .filter(|((a, b), _)| a != b)
                .map(|(_, &v)| v)
        })
        .fold(0.0, f64::max)
}

/// Largest probability of a losing tuple.
pub fn losing_mass(c: &Correlation, g: &SyncGame) -> Result<f64> {
    if c.n_inputs() != g.n_inputs() || c.n_outputs() != g.n_outputs() {
        return Err(Error::DimensionMismatch(format!(
            "correlation shape ({}, {}) vs game ({}, {})",
            c.n_inputs(),
            c.n_outputs(),
            g.n_inputs(),
            g.n_outputs()
        )));
    }
    Ok(c.entries()
        .filter(|&(x, y, a, b, _)| !g.wins(x, y, a, b))
        .map(|(.., v)| v)
        .fold(0.0, f64::max))
}

pub fn is_perfect(c: &Correlation, g: &SyncGame, eps: f64) -> Result<bool> {
    Ok(losing_mass(c, g)? <= eps)
}

/// `omega_m^k` with `omega_m = exp(2 pi i / m)`.
fn root_of_unity(m: usize, k: i64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * (k as f64) / (m as f64))
}

/// `u = sum_a omega_m^{a+1} E_a`: the 0-based output `a` sits at spectral
/// value `omega_m^{a+1}`, so outputs `1..m` in 1-based numbering map to
/// `omega_m^1 .. omega_m^m = 1`.
pub fn pvm_to_unitary(row: &[CMatrix], tol: f64) -> Result<CMatrix> {
    let m = row.len();
    let Some(first) = row.first() else {
        return Err(Error::Validation("empty PVM row".into()));
    };
    let d = first.dim();
    check_pvm_row(row, tol)?;
    Ok(row
        .iter()
        .enumerate()
        .fold(CMatrix::zeros(d), |acc, (a, e)| {
            &acc + &e.scale(root_of_unity(m, a as i64 + 1))
        }))
}

fn check_pvm_row(row: &[CMatrix], tol: f64) -> Result<()> {
    let d = row[0].dim();
    if row.iter().any(|e| e.dim() != d) {
        return Err(Error::DimensionMismatch("PVM row mixes dimensions".into()));
    }
    let proj = row.iter().map(matops::projection_defect).fold(0.0, f64::max);
    if proj > tol {
        return Err(Error::verification("PVM projection defect", proj, tol));
    }
    let sum = row.iter().fold(CMatrix::zeros(d), |acc, e| &acc + e);
    let comp = norm2(&(&sum - &CMatrix::identity(d)));
    if comp > tol {
        return Err(Error::verification("PVM completeness", comp, tol));
    }
    Ok(())
}

/// Recovers the spectral projections of an order-`m` unitary by averaging
/// `e_a = (1/m) sum_k omega^{-(a+1)k} u^k`.
pub fn unitary_to_pvm(u: &CMatrix, m: usize, tol: f64) -> Result<Vec<CMatrix>> {
    if m == 0 {
        return Err(Error::Validation("m must be positive".into()));
    }
    let d = u.dim();
    let mut powers = Vec::with_capacity(m + 1);
    powers.push(CMatrix::identity(d));
    for k in 1..=m {
        let next = &powers[k - 1] * u;
        powers.push(next);
    }
    let order_defect = norm2(&(&powers[m] - &CMatrix::identity(d)));
    if order_defect > tol {
        return Err(Error::verification("u^m = I", order_defect, tol));
    }
    let unitary_defect = norm2(&(&(&u.adjoint() * u) - &CMatrix::identity(d)));
    if unitary_defect > tol {
        return Err(Error::verification("u unitary", unitary_defect, tol));
    }
    Ok((0..m)
        .map(|a| {
            powers[..m]
                .iter()
                .enumerate()
                .fold(CMatrix::zeros(d), |acc, (k, uk)| {
                    let w = root_of_unity(m, -((a as i64 + 1) * k as i64));
                    &acc + &uk.scale(w)
                })
                .scale_re(1.0 / m as f64)
        })
        .collect())
}

/// The tensor-product model: Alice's and Bob's PVM families plus a unit
/// vector `psi` in `C^{dA} (x) C^{dB}` (index `a * dB + b`).
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteStrategy {
    pub alice: OperatorStrategy,
    pub bob: OperatorStrategy,
    pub state: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct BipartiteJson {
    alice: serde_json::Value,
    bob: serde_json::Value,
    state: Vec<[f64; 2]>,
}

impl BipartiteStrategy {
    pub fn new(alice: OperatorStrategy, bob: OperatorStrategy, state: Vec<Complex64>) -> Result<Self> {
        let s = BipartiteStrategy { alice, bob, state };
        s.check_shapes()?;
        Ok(s)
    }

    fn check_shapes(&self) -> Result<()> {
        if self.alice.n_inputs() != self.bob.n_inputs()
            || self.alice.n_outputs() != self.bob.n_outputs()
        {
            return Err(Error::DimensionMismatch(
                "Alice and Bob have different input/output sets".into(),
            ));
        }
        if self.state.len() != self.alice.dim() * self.bob.dim() {
            return Err(Error::DimensionMismatch(format!(
                "state has length {} but dA * dB = {}",
                self.state.len(),
                self.alice.dim() * self.bob.dim()
            )));
        }
        Ok(())
    }

    pub fn dim_a(&self) -> usize {
        self.alice.dim()
    }

    pub fn dim_b(&self) -> usize {
        self.bob.dim()
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        self.check_shapes()?;
        self.alice.validate(tol)?;
        self.bob.validate(tol)?;
        let norm_defect = (vec_norm(&self.state) - 1.0).abs();
        if norm_defect > 1e-12_f64.max(tol) {
            return Err(Error::verification("state norm", norm_defect, tol));
        }
        Ok(())
    }

    /// `(E (x) I) psi`.
    fn apply_alice(&self, e: &CMatrix) -> Vec<Complex64> {
        let (da, db) = (self.dim_a(), self.dim_b());
        let mut out = vec![ZERO; da * db];
        for r in 0..da {
            for c in 0..da {
                let w = e[(r, c)];
                if w == ZERO {
                    continue;
                }
                for b in 0..db {
                    out[r * db + b] += w * self.state[c * db + b];
                }
            }
        }
        out
    }

    /// `(I (x) F) psi`.
    fn apply_bob(&self, f: &CMatrix) -> Vec<Complex64> {
        let (da, db) = (self.dim_a(), self.dim_b());
        let mut out = vec![ZERO; da * db];
        for a in 0..da {
            let chunk = &self.state[a * db..(a + 1) * db];
            let img = f.apply(chunk);
            out[a * db..(a + 1) * db].copy_from_slice(&img);
        }
        out
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(BipartiteJson {
            alice: self.alice.to_json_value(),
            bob: self.bob.to_json_value(),
            state: self.state.iter().map(|z| [z.re + 0.0, z.im + 0.0]).collect(),
        })
        .expect("bipartite strategy serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: BipartiteJson = serde_json::from_str(text)?;
        let alice = OperatorStrategy::from_json(&raw.alice.to_string())?;
        let bob = OperatorStrategy::from_json(&raw.bob.to_string())?;
        let state = raw
            .state
            .into_iter()
            .map(|[re, im]| Complex64::new(re, im))
            .collect();
        Self::new(alice, bob, state)
    }
}

/// `p(a,b|x,y) = <(E_{x,a} (x) F_{y,b}) psi, psi>`.
pub fn correlation_from_bipartite(s: &BipartiteStrategy, tol: f64) -> Result<Correlation> {
    s.validate(tol)?;
    let n = s.alice.n_inputs();
    let mut c = Correlation::zeros(n, s.alice.n_outputs());
    let alice_images: Vec<Vec<(usize, Vec<Complex64>)>> = (0..n)
        .map(|x| s.alice.row(x).map(|(a, e)| (a, s.apply_alice(e))).collect())
        .collect();
    let bob_images: Vec<Vec<(usize, Vec<Complex64>)>> = (0..n)
        .map(|y| s.bob.row(y).map(|(b, f)| (b, s.apply_bob(f))).collect())
        .collect();
    // <(E (x) F) psi, psi> = <(I (x) F) psi, (E (x) I) psi> since both are self-adjoint
    for x in 0..n {
        for y in 0..n {
            for (a, ea) in &alice_images[x] {
                for (b, fb) in &bob_images[y] {
                    let v = inner(ea, fb).re;
                    if v.abs() > 1e-15 {
                        c.set(x, y, *a, *b, v);
                    }
                }
            }
        }
    }
    let defect = c.invariant_defect();
    if defect > 1e-10_f64.max(tol) {
        return Err(Error::verification("bipartite correlation normalization", defect, tol));
    }
    Ok(c)
}

/// `max_{x,a} |(E_{x,a} (x) I) psi - (I (x) F_{x,a}) psi|`.
pub fn sync_vector_defect(s: &BipartiteStrategy) -> Result<f64> {
    s.check_shapes()?;
    let mut worst = 0.0f64;
    for x in 0..s.alice.n_inputs() {
        for a in 0..s.alice.n_outputs() {
            let (e, f) = (s.alice.get(x, a), s.bob.get(x, a));
            if e.is_none() && f.is_none() {
                continue;
            }
            let lhs = e
                .map(|e| s.apply_alice(e))
                .unwrap_or_else(|| vec![ZERO; s.state.len()]);
            let rhs = f
                .map(|f| s.apply_bob(f))
                .unwrap_or_else(|| vec![ZERO; s.state.len()]);
            let diff: Vec<Complex64> = lhs.iter().zip(&rhs).map(|(l, r)| l - r).collect();
            worst = worst.max(vec_norm(&diff));
        }
    }
    Ok(worst)
}

/// One block of a Schmidt-level decomposition.
#[derive(Debug, Clone)]
pub struct QsBlock {
    /// `t_l = r_l^2 * d_l`.
    pub weight: f64,
    /// The shared Schmidt coefficient `r_l`.
    pub schmidt_coefficient: f64,
    /// Alice's PVMs compressed to the block.
    pub strategy: OperatorStrategy,
    pub correlation: Correlation,
    /// `max_v |(I - P_l) A_v P_l|_2` over Alice's order-m unitaries.
    pub reduction_residual: f64,
    /// Same for Bob's side.
    pub bob_reduction_residual: f64,
}

#[derive(Debug, Clone)]
pub struct QsDecomposition {
    pub blocks: Vec<QsBlock>,
    pub sync_defect: f64,
    /// `max |sum_l t_l p_l - p|`.
    pub recombination_error: f64,
    /// Largest synchronicity defect among block correlations.
    pub block_sync_defect: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct QsOptions {
    pub tol: f64,
    pub cluster_tol: f64,
}

impl Default for QsOptions {
    fn default() -> Self {
        QsOptions {
            tol: matops::DEFAULT_TOL,
            cluster_tol: SCHMIDT_CLUSTER_TOL,
        }
    }
}

/// Pads the smaller side so `dA = dB`: the first projection of every input
/// absorbs the identity on the new summand, the rest are extended by zero.
pub fn pad_to_square(s: &BipartiteStrategy) -> BipartiteStrategy {
    let (da, db) = (s.dim_a(), s.dim_b());
    if da == db {
        return s.clone();
    }
    let pad = |strategy: &OperatorStrategy, extra: usize| -> OperatorStrategy {
        let d = strategy.dim() + extra;
        let mut out = OperatorStrategy::new(d, strategy.n_inputs(), strategy.n_outputs());
        for x in 0..strategy.n_inputs() {
            let first = strategy.row(x).next().map(|(a, _)| a);
            for (a, e) in strategy.row(x) {
                let block = if Some(a) == first {
                    CMatrix::identity(extra)
                } else {
                    CMatrix::zeros(extra)
                };
                out.set(x, a, e.direct_sum(&block));
            }
        }
        out
    };
    if da < db {
        let alice = pad(&s.alice, db - da);
        // psi lives in the first dA rows of the dB x dB coefficient matrix
        let mut state = s.state.clone();
        state.resize(db * db, ZERO);
        BipartiteStrategy {
            alice,
            bob: s.bob.clone(),
            state,
        }
    } else {
        let bob = pad(&s.bob, da - db);
        let mut state = vec![ZERO; da * da];
        for a in 0..da {
            for b in 0..db {
                state[a * da + b] = s.state[a * db + b];
            }
        }
        BipartiteStrategy {
            alice: s.alice.clone(),
            bob,
            state,
        }
    }
}

/// Splits a synchronous bipartite strategy into tracial blocks, one per
/// distinct nonzero Schmidt coefficient of the state.
pub fn decompose_qs(s: &BipartiteStrategy, opts: QsOptions) -> Result<QsDecomposition> {
    let tol = opts.tol;
    s.validate(tol)?;
    let sync_defect = sync_vector_defect(s)?;
    if sync_defect > tol {
        return Err(Error::verification("synchronous state condition", sync_defect, tol));
    }
    let target = correlation_from_bipartite(s, tol)?;
    let s = pad_to_square(s);
    let d = s.dim_a();

    // Schmidt decomposition from the reduced density matrix on Alice's side:
    // rho_A = M M* with M the d x d coefficient matrix of psi.
    let coeff = CMatrix::from_vec(d, s.state.clone())?;
    let rho = &coeff * &coeff.adjoint();
    let eig = matops::hermitian_eig(&rho)?;
    let mut levels: Vec<(f64, Vec<Complex64>)> = (0..d)
        .rev()
        .map(|k| (eig.eigenvalues[k].max(0.0).sqrt(), eig.column(k)))
        .filter(|(alpha, _)| *alpha > opts.cluster_tol)
        .collect();
    levels.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut clusters: Vec<Vec<(f64, Vec<Complex64>)>> = Vec::new();
    for level in levels {
        match clusters.last_mut() {
            Some(c) if (c[0].0 - level.0).abs() <= opts.cluster_tol => c.push(level),
            _ => clusters.push(vec![level]),
        }
    }

    let unitaries = |strategy: &OperatorStrategy| -> Result<Vec<CMatrix>> {
        (0..strategy.n_inputs())
            .map(|x| {
                let row: Vec<CMatrix> = (0..strategy.n_outputs())
                    .map(|a| strategy.get_or_zero(x, a))
                    .collect();
                pvm_to_unitary(&row, tol)
            })
            .collect()
    };
    let alice_u = unitaries(&s.alice)?;
    let bob_u = unitaries(&s.bob)?;
    let coeff_t = coeff.transpose();

    let mut blocks = Vec::with_capacity(clusters.len());
    for cluster in clusters {
        let r = cluster.iter().map(|(a, _)| a).sum::<f64>() / cluster.len() as f64;
        let e_basis: Vec<Vec<Complex64>> = cluster.iter().map(|(_, v)| v.clone()).collect();
        // f_k = M^T conj(e_k) / alpha_k
        let f_basis: Vec<Vec<Complex64>> = cluster
            .iter()
            .map(|(alpha, e)| {
                let conj: Vec<Complex64> = e.iter().map(|z| z.conj()).collect();
                coeff_t.apply(&conj).into_iter().map(|z| z / alpha).collect()
            })
            .collect();
        let pa = matops::projector(d, &e_basis);
        let pb = matops::projector(d, &f_basis);
        let leak = |u: &CMatrix, p: &CMatrix| {
            let q = &CMatrix::identity(d) - p;
            norm2(&(&(&q * u) * p))
        };
        let reduction_residual = alice_u.iter().map(|u| leak(u, &pa)).fold(0.0, f64::max);
        let bob_reduction_residual = bob_u.iter().map(|u| leak(u, &pb)).fold(0.0, f64::max);
        if reduction_residual > tol || bob_reduction_residual > tol {
            return Err(Error::Verification {
                check: format!(
                    "Schmidt level r = {r:.6e} (multiplicity {}) does not reduce the strategy; cluster ambiguous",
                    cluster.len()
                ),
                residual: reduction_residual.max(bob_reduction_residual),
                threshold: tol,
            });
        }
        let strategy = s.alice.map_matrices(e_basis.len(), |m| m.compress(&e_basis));
        let correlation = correlation_from_tracial(&strategy, 10.0 * tol)?;
        blocks.push(QsBlock {
            weight: r * r * e_basis.len() as f64,
            schmidt_coefficient: r,
            strategy,
            correlation,
            reduction_residual,
            bob_reduction_residual,
        });
    }

    let parts: Vec<(f64, Correlation)> = blocks
        .iter()
        .map(|b| (b.weight, b.correlation.clone()))
        .collect();
    let recombined = Correlation::convex_combination(&parts)?;
    let recombination_error = recombined.max_diff(&target)?;
    let block_sync_defect = blocks
        .iter()
        .map(|b| synchronicity_defect(&b.correlation))
        .fold(0.0, f64::max);
    if recombination_error > 10.0 * tol {
        return Err(Error::verification(
            "convex recombination of Schmidt blocks",
            recombination_error,
            10.0 * tol,
        ));
    }
    Ok(QsDecomposition {
        blocks,
        sync_defect,
        recombination_error,
        block_sync_defect,
    })
}

/// The maximally entangled state `sum_k e_k (x) e_k / sqrt(d)`.
pub fn maximally_entangled(d: usize) -> Vec<Complex64> {
    let mut psi = vec![ZERO; d * d];
    let amp = ONE / (d as f64).sqrt();
    for k in 0..d {
        psi[k * d + k] = amp;
    }
    psi
}

/// The bipartite strategy `(E, conj(E), maximally entangled)` realizing a
/// tracial strategy; its correlation equals the tracial one.
pub fn bipartite_from_tracial(s: &OperatorStrategy) -> BipartiteStrategy {
    BipartiteStrategy {
        alice: s.clone(),
        bob: s.map_matrices(s.dim(), |m| m.transpose()),
        state: maximally_entangled(s.dim()),
    }
}

/// Product state `e (x) f`.
pub fn product_state(e: &[Complex64], f: &[Complex64]) -> Vec<Complex64> {
    kron_vec(e, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matops::pauli;

    fn x_eigenprojectors() -> Vec<CMatrix> {
        let plus = CMatrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]).unwrap();
        let minus = CMatrix::from_real_rows(&[&[0.5, -0.5], &[-0.5, 0.5]]).unwrap();
        vec![plus, minus]
    }

    fn mub_strategy() -> OperatorStrategy {
        let mut s = OperatorStrategy::new(2, 2, 2);
        s.set(0, 0, CMatrix::from_real_diag(&[1.0, 0.0]));
        s.set(0, 1, CMatrix::from_real_diag(&[0.0, 1.0]));
        for (a, p) in x_eigenprojectors().into_iter().enumerate() {
            s.set(1, a, p);
        }
        s
    }

    #[test]
    fn tracial_single_input() {
        let s = OperatorStrategy::deterministic(&[0], 2);
        let c = correlation_from_tracial(&s, 1e-9).unwrap();
        assert_eq!(c.get(0, 0, 0, 0), 1.0);
        assert_eq!(c.entries().count(), 1);
    }

    #[test]
    fn tracial_mutually_unbiased() {
        let c = correlation_from_tracial(&mub_strategy(), 1e-9).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                assert!((c.get(0, 1, a, b) - 0.25).abs() < 1e-15);
            }
        }
        assert!(is_synchronous(&c, 1e-12));
    }

    #[test]
    fn tracial_rejects_invalid() {
        let mut s = OperatorStrategy::new(2, 1, 2);
        s.set(0, 0, CMatrix::from_real_diag(&[1.0, 0.0]));
        assert!(correlation_from_tracial(&s, 1e-9).is_err());
    }

    #[test]
    fn bipartite_product_state_deterministic() {
        let alice = OperatorStrategy::deterministic(&[1, 0], 2);
        let bob = OperatorStrategy::deterministic(&[0, 0], 2);
        let s = BipartiteStrategy::new(alice, bob, vec![ONE]).unwrap();
        let c = correlation_from_bipartite(&s, 1e-9).unwrap();
        assert_eq!(c.get(0, 1, 1, 0), 1.0);
        assert_eq!(c.get(1, 0, 0, 0), 1.0);
        assert!(sync_vector_defect(&s).unwrap() > 0.5);
    }

    #[test]
    fn maximally_entangled_matches_tracial() {
        let s = mub_strategy();
        let bip = bipartite_from_tracial(&s);
        let c1 = correlation_from_bipartite(&bip, 1e-9).unwrap();
        let c2 = correlation_from_tracial(&s, 1e-9).unwrap();
        assert!(c1.max_diff(&c2).unwrap() < 1e-12);
        assert!(sync_vector_defect(&bip).unwrap() <= 1e-12);
    }

    #[test]
    fn mismatched_state_length() {
        let a = OperatorStrategy::deterministic(&[0], 1);
        assert!(BipartiteStrategy::new(a.clone(), a, vec![ONE, ZERO]).is_err());
    }

    #[test]
    fn pvm_unitary_two_outcomes() {
        let row = vec![
            CMatrix::from_real_diag(&[1.0, 0.0]),
            CMatrix::from_real_diag(&[0.0, 1.0]),
        ];
        let u = pvm_to_unitary(&row, 1e-9).unwrap();
        assert!((&u - &CMatrix::from_real_diag(&[-1.0, 1.0])).max_abs() < 1e-15);
        let back = unitary_to_pvm(&u, 2, 1e-9).unwrap();
        for (p, q) in back.iter().zip(&row) {
            assert!((p - q).max_abs() < 1e-15);
        }
    }

    #[test]
    fn pvm_unitary_three_outcomes() {
        let row: Vec<CMatrix> = (0..3)
            .map(|a| {
                let mut d = [0.0; 3];
                d[a] = 1.0;
                CMatrix::from_real_diag(&d)
            })
            .collect();
        let u = pvm_to_unitary(&row, 1e-9).unwrap();
        let w = root_of_unity(3, 1);
        let want = CMatrix::from_diag(&[w, w * w, ONE]);
        assert!((&u - &want).max_abs() < 1e-15);
    }

    #[test]
    fn unitary_to_pvm_rejects_wrong_order() {
        assert!(unitary_to_pvm(&pauli::z(), 3, 1e-9).is_err());
        assert!(unitary_to_pvm(&pauli::z(), 2, 1e-9).is_ok());
    }

    #[test]
    fn perfect_and_uniform() {
        let g = SyncGame::hom(&crate::graphs::Graph::complete(2), &crate::graphs::Graph::complete(2));
        let c = Correlation::deterministic(&[0, 1], 2);
        assert!(is_perfect(&c, &g, 0.0).unwrap());
        assert!(is_synchronous(&c, 0.0));
        let u = Correlation::uniform(2, 2);
        assert!(!is_perfect(&u, &g, 0.2).unwrap());
    }

    #[test]
    fn correlation_json_dense_and_sparse() {
        let c = Correlation::deterministic(&[0, 1], 2);
        let text = c.to_json_value().to_string();
        assert_eq!(Correlation::from_json(&text).unwrap(), c);
        let sparse = r#"{"n":2,"m":2,"sparse":[[0,0,0,0,1.0],[0,1,0,1,1.0],[1,0,1,0,1.0],[1,1,1,1,1.0]]}"#;
        assert_eq!(Correlation::from_json(sparse).unwrap(), c);
        assert!(Correlation::from_json(r#"{"n":1,"m":1}"#).is_err());
    }

    #[test]
    fn decompose_single_block() {
        let s = mub_strategy();
        let dec = decompose_qs(&bipartite_from_tracial(&s), QsOptions::default()).unwrap();
        assert_eq!(dec.blocks.len(), 1);
        assert!((dec.blocks[0].weight - 1.0).abs() < 1e-12);
        let want = correlation_from_tracial(&s, 1e-9).unwrap();
        assert!(dec.blocks[0].correlation.max_diff(&want).unwrap() < 1e-12);
    }

    #[test]
    fn decompose_product_state() {
        let alice = OperatorStrategy::deterministic(&[1, 0], 2);
        let s = BipartiteStrategy::new(alice.clone(), alice, vec![ONE]).unwrap();
        let dec = decompose_qs(&s, QsOptions::default()).unwrap();
        assert_eq!(dec.blocks.len(), 1);
        assert_eq!(dec.blocks[0].strategy.dim(), 1);
        assert_eq!(dec.blocks[0].correlation, Correlation::deterministic(&[1, 0], 2));
    }

    #[test]
    fn decompose_pads_unequal_dimensions() {
        // Alice on C^2, Bob on C^1, product state e_0 (x) f
        let alice = OperatorStrategy::deterministic(&[0], 2).map_matrices(2, |_| CMatrix::identity(2));
        let bob = OperatorStrategy::deterministic(&[0], 2);
        let s = BipartiteStrategy::new(alice, bob, vec![ONE, ZERO]).unwrap();
        let padded = pad_to_square(&s);
        assert_eq!(padded.dim_b(), 2);
        let c1 = correlation_from_bipartite(&s, 1e-9).unwrap();
        let c2 = correlation_from_bipartite(&padded, 1e-9).unwrap();
        assert_eq!(c1, c2);
        let dec = decompose_qs(&s, QsOptions::default()).unwrap();
        assert_eq!(dec.blocks.len(), 1);
    }

    #[test]
    fn decompose_rejects_unsynchronized_state() {
        let alice = OperatorStrategy::deterministic(&[0], 2);
        let bob = OperatorStrategy::deterministic(&[1], 2);
        let s = BipartiteStrategy::new(alice, bob, vec![ONE]).unwrap();
        assert!(decompose_qs(&s, QsOptions::default()).is_err());
    }

    #[test]
    fn strategy_json_roundtrip() {
        let s = mub_strategy();
        let text = s.to_json_value().to_string();
        assert_eq!(OperatorStrategy::from_json(&text).unwrap(), s);
        let bip = bipartite_from_tracial(&s);
        let text = bip.to_json_value().to_string();
        assert_eq!(BipartiteStrategy::from_json(&text).unwrap(), bip);
    }
}
