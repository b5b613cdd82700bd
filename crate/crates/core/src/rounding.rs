//! Rounding near-projections to exact ones.
//!
//! [`round_contraction`] replaces a positive contraction by its spectral
//! projection for `[1/2, 1]`. [`orthogonalize_family`] rounds a family of
//! almost orthogonal near-projections one at a time, each inside the
//! orthogonal complement of those already emitted, optionally absorbing the
//! leftover space into the first member so the output sums to `I`.
//!
//! Outputs are rebuilt from explicit orthonormal vectors, so idempotence and
//! orthogonality hold to machine precision.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matops::{self, inner, norm2, projector, vec_norm, CMatrix};

/// Residual allowed on the exactness of rounded outputs.
pub const EXACT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub struct RoundingOptions {
    /// Hermiticity and spectral-range tolerance on the input.
    pub tol: f64,
    /// Eigenvalues closer than this to `1/2` are ambiguous.
    pub margin: f64,
    /// Round ambiguous eigenvalues up instead of failing.
    pub allow_boundary: bool,
}

impl Default for RoundingOptions {
    fn default() -> Self {
        RoundingOptions {
            tol: matops::DEFAULT_TOL,
            margin: matops::DEFAULT_MARGIN,
            allow_boundary: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionReport {
    /// `|p - p^2|_2`.
    pub defect: f64,
    /// `|p - q|_2`.
    pub distance: f64,
    /// `2 sqrt(2) |p - p^2|_2`.
    pub bound: f64,
    pub bound_holds: bool,
}

/// Checks that `p` is Hermitian with spectrum in `[-tol, 1 + tol]`.
fn check_contraction(p: &CMatrix, tol: f64, what: &str) -> Result<matops::EigResult> {
    let herm = p.hermitian_defect();
    if herm > tol {
        return Err(Error::NotHermitian(herm));
    }
    let eig = matops::hermitian_eig(&p.hermitian_part())?;
    let (lo, hi) = (
        eig.eigenvalues.first().copied().unwrap_or(0.0),
        eig.eigenvalues.last().copied().unwrap_or(0.0),
    );
    if lo < -tol || hi > 1.0 + tol {
        return Err(Error::Validation(format!(
            "{what} is not a positive contraction: spectrum spans [{lo:.3e}, {hi:.3e}]"
        )));
    }
    Ok(eig)
}

/// Eigenvectors of `eig` with eigenvalue above `1/2`.
fn upper_vectors(eig: &matops::EigResult, opts: &RoundingOptions) -> Result<Vec<Vec<Complex64>>> {
    let mut out = Vec::new();
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if !opts.allow_boundary && (lambda - 0.5).abs() < opts.margin {
            return Err(Error::BoundaryAmbiguity {
                eigenvalue: lambda,
                boundary: 0.5,
                margin: opts.margin,
            });
        }
        if lambda >= 0.5 {
            out.push(eig.column(k));
        }
    }
    Ok(out)
}

/// Spectral projection of `p` for `[1/2, 1]`.
pub fn round_contraction(p: &CMatrix, opts: RoundingOptions) -> Result<(CMatrix, ContractionReport)> {
    let eig = check_contraction(p, opts.tol, "input")?;
    let q = projector(p.dim(), &upper_vectors(&eig, &opts)?);
    let defect = norm2(&(p - &(p * p)));
    let distance = norm2(&(p - &q));
    let bound = 2.0 * 2f64.sqrt() * defect;
    Ok((
        q,
        ContractionReport {
            defect,
            distance,
            bound,
            bound_holds: distance <= bound + EXACT_TOL,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundingReport {
    /// `|p_i - p_i^2|_2` per element.
    pub input_defects: Vec<f64>,
    /// `(i, j, |p_i p_j|_2)` for `i < j`.
    pub overlaps: Vec<(usize, usize, f64)>,
    /// `|p_i - q_i|_2` per element.
    pub distances: Vec<f64>,
    /// `|sum p_i - I|_2`.
    pub sum_defect_before: f64,
    /// `|sum q_i - I|_2`.
    pub sum_defect_after: f64,
    /// Largest input defect: idempotence, overlap, and (with `sum_one`)
    /// the sum defect.
    pub max_input_defect: f64,
    /// `(40 m + 3)` times the largest input defect.
    pub distance_budget: f64,
    pub within_budget: bool,
    /// Largest of `|q - q^2|_2`, `|q - q*|_2` and `|q_i q_j|_2`.
    pub exactness_residual: f64,
    pub sum_one: bool,
}

impl RoundingReport {
    pub fn max_distance(&self) -> f64 {
        self.distances.iter().copied().fold(0.0, f64::max)
    }
}

/// Rounds `ps` to mutually orthogonal projections; the dimension is taken
/// from the first element (`0` for an empty family).
pub fn orthogonalize_family(
    ps: &[CMatrix],
    sum_one: bool,
    opts: RoundingOptions,
) -> Result<(Vec<CMatrix>, RoundingReport)> {
    let dim = ps.first().map(|p| p.dim()).unwrap_or(0);
    orthogonalize_family_in(dim, ps, sum_one, opts)
}

/// As [`orthogonalize_family`] with an explicit ambient dimension.
pub fn orthogonalize_family_in(
    dim: usize,
    ps: &[CMatrix],
    sum_one: bool,
    opts: RoundingOptions,
) -> Result<(Vec<CMatrix>, RoundingReport)> {
    let m = ps.len();
    if let Some(p) = ps.iter().find(|p| p.dim() != dim) {
        return Err(Error::DimensionMismatch(format!(
            "family element has dimension {} but the family is {dim}-dimensional",
            p.dim()
        )));
    }
    if m == 0 && sum_one && dim > 0 {
        return Err(Error::Infeasible(format!(
            "an empty family cannot sum to the identity on C^{dim}"
        )));
    }
    for (i, p) in ps.iter().enumerate() {
        check_contraction(p, opts.tol, &format!("element {}", i + 1))?;
    }

    let id = CMatrix::identity(dim);
    let mut emitted: Vec<Vec<Complex64>> = Vec::new();
    let mut blocks: Vec<Vec<Vec<Complex64>>> = Vec::with_capacity(m);
    for p in ps {
        let r = &id - &projector(dim, &emitted);
        let h = (&(&r * p) * &r).hermitian_part();
        let eig = matops::hermitian_eig(&h)?;
        let block = orthonormalize_against(upper_vectors(&eig, &opts)?, &emitted);
        emitted.extend(block.iter().cloned());
        blocks.push(block);
    }

    if sum_one && m > 0 {
        // the rest of the space goes to the first element
        let rest = &id - &projector(dim, &emitted);
        let eig = matops::hermitian_eig(&rest.hermitian_part())?;
        if let Some(&bad) = eig
            .eigenvalues
            .iter()
            .find(|&&l| (l - 0.5).abs() < 0.25)
        {
            return Err(Error::Infeasible(format!(
                "remainder I - sum q_i is not a projection (eigenvalue {bad:.3e})"
            )));
        }
        let complement: Vec<Vec<Complex64>> = (0..dim)
            .filter(|&k| eig.eigenvalues[k] > 0.5)
            .map(|k| eig.column(k))
            .collect();
        let complement = orthonormalize_against(complement, &emitted);
        blocks[0].extend(complement);
    }

    let qs: Vec<CMatrix> = blocks.iter().map(|b| projector(dim, b)).collect();
    let report = family_report(ps, &qs, dim, sum_one);
    if report.exactness_residual > EXACT_TOL {
        return Err(Error::verification(
            "exactness of rounded family",
            report.exactness_residual,
            EXACT_TOL,
        ));
    }
    if sum_one && report.sum_defect_after > EXACT_TOL {
        return Err(Error::verification(
            "rounded family sums to identity",
            report.sum_defect_after,
            EXACT_TOL,
        ));
    }
    Ok((qs, report))
}

/// Modified Gram-Schmidt (two passes) of `vectors` against `basis` and
/// each other; near-null results are dropped.
fn orthonormalize_against(
    vectors: Vec<Vec<Complex64>>,
    basis: &[Vec<Complex64>],
) -> Vec<Vec<Complex64>> {
    let mut out: Vec<Vec<Complex64>> = Vec::with_capacity(vectors.len());
    for mut v in vectors {
        for _ in 0..2 {
            for u in basis.iter().chain(out.iter()) {
                let c = inner(u, &v);
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= c * ui;
                }
            }
        }
        let norm = vec_norm(&v);
        if norm > 1e-6 {
            out.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    out
}

fn family_report(ps: &[CMatrix], qs: &[CMatrix], dim: usize, sum_one: bool) -> RoundingReport {
    let m = ps.len();
    let input_defects: Vec<f64> = ps.iter().map(|p| norm2(&(p - &(p * p)))).collect();
    let mut overlaps = Vec::new();
    let mut exactness_residual = 0.0f64;
    for i in 0..m {
        for j in i + 1..m {
            overlaps.push((i, j, norm2(&(&ps[i] * &ps[j]))));
            exactness_residual = exactness_residual.max(norm2(&(&qs[i] * &qs[j])));
        }
        exactness_residual = exactness_residual
            .max(norm2(&(&qs[i] - &(&qs[i] * &qs[i]))))
            .max(norm2(&(&qs[i] - &qs[i].adjoint())));
    }
    let id = CMatrix::identity(dim);
    let sum = |ms: &[CMatrix]| ms.iter().fold(CMatrix::zeros(dim), |acc, x| &acc + x);
    let sum_defect_before = norm2(&(&sum(ps) - &id));
    let sum_defect_after = norm2(&(&sum(qs) - &id));
    let distances: Vec<f64> = ps.iter().zip(qs).map(|(p, q)| norm2(&(p - q))).collect();
    let mut max_input_defect = input_defects
        .iter()
        .chain(overlaps.iter().map(|(_, _, o)| o))
        .copied()
        .fold(0.0, f64::max);
    if sum_one {
        max_input_defect = max_input_defect.max(sum_defect_before);
    }
    let distance_budget = (40.0 * m as f64 + 3.0) * max_input_defect;
    let within_budget = distances
        .iter()
        .all(|&d| d <= distance_budget + EXACT_TOL);
    RoundingReport {
        input_defects,
        overlaps,
        distances,
        sum_defect_before,
        sum_defect_after,
        max_input_defect,
        distance_budget,
        within_budget,
        exactness_residual,
        sum_one,
    }
}
