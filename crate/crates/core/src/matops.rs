//! Dense complex matrices: arithmetic, Hermitian eigendecomposition by cyclic
//! Jacobi rotations, spectral projections, normalized-trace norms and
//! Kronecker products.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Default verification tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default margin for spectral window boundaries.
pub const DEFAULT_MARGIN: f64 = 1e-6;
/// Default dimension cap for the eigensolver.
pub const DEFAULT_MAX_DIM: usize = 512;
/// Maximum `|h - h*|` entry accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

const JACOBI_REL_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// A square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix({}x{})", self.dim, self.dim)?;
        for r in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|c| {
                    let z = self[(r, c)];
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.dim + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.dim + c]
    }
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        CMatrix {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn scalar(dim: usize, z: Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = z;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    pub fn from_diag(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds from row-major entries; `data.len()` must be a perfect square.
    pub fn from_vec(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {dim}x{dim} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Validation("matrix has non-finite entries".into()));
        }
        Ok(CMatrix { dim, data })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.len();
        let data = rows
            .iter()
            .flat_map(|r| r.iter().map(|&v| Complex64::new(v, 0.0)))
            .collect();
        Self::from_vec(dim, data)
    }

    pub fn from_rows(rows: &[&[Complex64]]) -> Result<Self> {
        let dim = rows.len();
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::from_vec(dim, data)
    }

    /// `v v*`.
    pub fn outer(v: &[Complex64]) -> Self {
        let d = v.len();
        let mut m = Self::zeros(d);
        for r in 0..d {
            for c in 0..d {
                m[(r, c)] = v[r] * v[c].conj();
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim;
        let mut m = Self::zeros(d);
        for r in 0..d {
            for c in 0..d {
                m[(c, r)] = self[(r, c)].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let d = self.dim;
        let mut m = Self::zeros(d);
        for r in 0..d {
            for c in 0..d {
                m[(c, r)] = self[(r, c)];
            }
        }
        m
    }

    pub fn conj(&self) -> Self {
        CMatrix {
            dim: self.dim,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        CMatrix {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        CMatrix {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// `tr(a) / d`.
    pub fn normalized_trace(&self) -> Complex64 {
        if self.dim == 0 {
            ZERO
        } else {
            self.trace() / self.dim as f64
        }
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entry of `|h - h*|`.
    pub fn hermitian_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in r..d {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// `(h + h*) / 2`.
    pub fn hermitian_part(&self) -> Self {
        (self + &self.adjoint()).scale_re(0.5)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn pow(&self, k: usize) -> Self {
        let mut acc = Self::identity(self.dim);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// `ab - ba`.
    pub fn commutator(&self, other: &CMatrix) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let d = self.dim;
        (0..d)
            .map(|r| (0..d).map(|c| self[(r, c)] * v[c]).sum())
            .collect()
    }

    /// `V* self V` for a `d x k` isometry given by its `k` columns.
    pub fn compress(&self, columns: &[Vec<Complex64>]) -> Self {
        let k = columns.len();
        let images: Vec<Vec<Complex64>> = columns.iter().map(|c| self.apply(c)).collect();
        let mut m = Self::zeros(k);
        for r in 0..k {
            for c in 0..k {
                m[(r, c)] = inner(&columns[r], &images[c]);
            }
        }
        m
    }

    /// Block-diagonal direct sum.
    pub fn direct_sum(&self, other: &CMatrix) -> Self {
        let (a, b) = (self.dim, other.dim);
        let mut m = Self::zeros(a + b);
        for r in 0..a {
            for c in 0..a {
                m[(r, c)] = self[(r, c)];
            }
        }
        for r in 0..b {
            for c in 0..b {
                m[(a + r, a + c)] = other[(r, c)];
            }
        }
        m
    }

    fn check_same_dim(&self, other: &CMatrix) {
        assert_eq!(
            self.dim, other.dim,
            "matrix dimension mismatch: {} vs {}",
            self.dim, other.dim
        );
    }
}

/// `<a, b>` conjugate-linear in the first argument.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        self.check_same_dim(rhs);
        CMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        self.check_same_dim(rhs);
        CMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale_re(-1.0)
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.check_same_dim(rhs);
        let d = self.dim;
        let mut out = CMatrix::zeros(d);
        for r in 0..d {
            for k in 0..d {
                let a = self.data[r * d + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let row = &rhs.data[k * d..(k + 1) * d];
                let dst = &mut out.data[r * d..(r + 1) * d];
                for (o, b) in dst.iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

impl std::iter::Sum<CMatrix> for Option<CMatrix> {
    fn sum<I: Iterator<Item = CMatrix>>(iter: I) -> Self {
        iter.reduce(|a, b| &a + &b)
    }
}

/// Tracial 2-norm with respect to the normalized trace:
/// `sqrt(tr(a* a) / d)`.
pub fn norm2(a: &CMatrix) -> f64 {
    if a.dim == 0 {
        return 0.0;
    }
    a.frobenius() / (a.dim as f64).sqrt()
}

/// Kronecker product in row-major block order.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (da, db) = (a.dim, b.dim);
    let d = da * db;
    let mut m = CMatrix::zeros(d);
    for ar in 0..da {
        for ac in 0..da {
            let s = a[(ar, ac)];
            if s.re == 0.0 && s.im == 0.0 {
                continue;
            }
            for br in 0..db {
                for bc in 0..db {
                    m[(ar * db + br, ac * db + bc)] = s * b[(br, bc)];
                }
            }
        }
    }
    m
}

pub fn kron_vec(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct EigResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Columns are orthonormal eigenvectors matching `eigenvalues`.
    pub eigenvectors: CMatrix,
}

impl EigResult {
    pub fn column(&self, k: usize) -> Vec<Complex64> {
        let d = self.eigenvectors.dim;
        (0..d).map(|r| self.eigenvectors[(r, k)]).collect()
    }

    /// `U diag(lambda) U*`.
    pub fn reconstruct(&self) -> CMatrix {
        let u = &self.eigenvectors;
        let diag = CMatrix::from_real_diag(&self.eigenvalues);
        &(u * &diag) * &u.adjoint()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EigOptions {
    pub hermitian_tol: f64,
    pub max_dim: usize,
}

impl Default for EigOptions {
    fn default() -> Self {
        EigOptions {
            hermitian_tol: HERMITIAN_TOL,
            max_dim: DEFAULT_MAX_DIM,
        }
    }
}

pub fn hermitian_eig(h: &CMatrix) -> Result<EigResult> {
    hermitian_eig_with(h, EigOptions::default())
}

/// Cyclic Jacobi eigensolver for complex Hermitian matrices.
///
/// Each rotation first removes the phase of the pivot `a_pq` with a diagonal
/// unitary and then applies the real symmetric Jacobi rotation, so the
/// combined unitary `U` zeroes `a_pq` in `U* A U`. Sweeps stop once the
/// off-diagonal Frobenius mass drops below `1e-12 * |h|_F`.
pub fn hermitian_eig_with(h: &CMatrix, opts: EigOptions) -> Result<EigResult> {
    let d = h.dim;
    if d > opts.max_dim {
        return Err(Error::Budget(format!(
            "dimension {d} exceeds eigensolver cap {}",
            opts.max_dim
        )));
    }
    let defect = h.hermitian_defect();
    if defect > opts.hermitian_tol {
        return Err(Error::NotHermitian(defect));
    }
    let mut a = h.hermitian_part();
    let mut v = CMatrix::identity(d);
    let scale = a.frobenius();
    let threshold = JACOBI_REL_TOL * scale;

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_mass(&a) <= threshold {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r <= f64::MIN_POSITIVE || r <= 1e-300 * scale {
                    continue;
                }
                rotate(&mut a, &mut v, p, q, apq);
            }
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut eigenvectors = CMatrix::zeros(d);
    for (new_c, &old_c) in order.iter().enumerate() {
        for r in 0..d {
            eigenvectors[(r, new_c)] = v[(r, old_c)];
        }
    }
    Ok(EigResult {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_mass(a: &CMatrix) -> f64 {
    let d = a.dim;
    let mut s = 0.0;
    for r in 0..d {
        for c in 0..d {
            if r != c {
                s += a[(r, c)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize, apq: Complex64) {
    let d = a.dim;
    let r = apq.norm();
    let phase = apq / r; // e^{i phi}
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = (aqq - app) / (2.0 * r);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let e_minus = phase.conj();

    // A <- A U on columns p, q
    for k in 0..d {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c - akq * e_minus * s;
        a[(k, q)] = akp * s + akq * e_minus * c;
    }
    // A <- U* A on rows p, q
    for k in 0..d {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c - aqk * phase * s;
        a[(q, k)] = apk * s + aqk * phase * c;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = Complex64::new(app - t * r, 0.0);
    a[(q, q)] = Complex64::new(aqq + t * r, 0.0);
    for k in 0..d {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * e_minus * s;
        v[(k, q)] = vkp * s + vkq * e_minus * c;
    }
}

/// Endpoint of a spectral interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    /// A genuine cut through the spectrum; eigenvalues within the margin of
    /// it are ambiguous.
    Cut(f64),
    /// The natural edge of the admissible spectrum (e.g. `1` for a
    /// contraction); eigenvalues up to `margin` beyond it still count as
    /// inside and never raise ambiguity.
    Edge(f64),
}

impl Bound {
    fn value(self) -> f64 {
        match self {
            Bound::Cut(v) | Bound::Edge(v) => v,
        }
    }
}

/// Which eigenvalues a spectral projection keeps.
#[derive(Debug, Clone, PartialEq)]
pub enum Window {
    Interval { lo: Bound, hi: Bound },
    /// Eigenvalues within `tol` of one of the listed values.
    Values { values: Vec<f64>, tol: f64 },
}

impl Window {
    /// `[lo, hi]` with both endpoints treated as cuts.
    pub fn interval(lo: f64, hi: f64) -> Self {
        Window::Interval {
            lo: Bound::Cut(lo),
            hi: Bound::Cut(hi),
        }
    }

    /// `[1/2, 1]` for positive contractions.
    pub fn upper_half() -> Self {
        Window::Interval {
            lo: Bound::Cut(0.5),
            hi: Bound::Edge(1.0),
        }
    }

    pub fn values(values: &[f64], tol: f64) -> Self {
        Window::Values {
            values: values.to_vec(),
            tol,
        }
    }

    fn classify(&self, lambda: f64, margin: f64) -> Result<bool> {
        match self {
            Window::Interval { lo, hi } => {
                for b in [lo, hi] {
                    if let Bound::Cut(v) = *b {
                        if (lambda - v).abs() < margin {
                            return Err(Error::BoundaryAmbiguity {
                                eigenvalue: lambda,
                                boundary: v,
                                margin,
                            });
                        }
                    }
                }
                let lo_ok = match *lo {
                    Bound::Cut(v) => lambda >= v,
                    Bound::Edge(v) => lambda >= v - margin,
                };
                let hi_ok = match *hi {
                    Bound::Cut(v) => lambda <= v,
                    Bound::Edge(v) => lambda <= v + margin,
                };
                debug_assert!(lo.value() <= hi.value());
                Ok(lo_ok && hi_ok)
            }
            Window::Values { values, tol } => {
                Ok(values.iter().any(|v| (lambda - v).abs() <= *tol))
            }
        }
    }
}

/// Orthonormal eigenvectors of `h` whose eigenvalues fall in `window`.
pub fn spectral_basis(h: &CMatrix, window: &Window, margin: f64) -> Result<Vec<Vec<Complex64>>> {
    let eig = hermitian_eig(h)?;
    let mut basis = Vec::new();
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if window.classify(lambda, margin)? {
            basis.push(eig.column(k));
        }
    }
    Ok(basis)
}

/// Same as [`spectral_basis`] but never fails on boundary ambiguity;
/// eigenvalues exactly at a cut are kept (closed interval).
pub fn spectral_basis_unchecked(h: &CMatrix, window: &Window) -> Result<Vec<Vec<Complex64>>> {
    spectral_basis(h, window, 0.0)
}

/// Orthogonal projection onto the eigenvectors of `h` with eigenvalues in
/// `window`.
pub fn spectral_projection(h: &CMatrix, window: &Window, margin: f64) -> Result<CMatrix> {
    let basis = spectral_basis(h, window, margin)?;
    Ok(projector(h.dim, &basis))
}

/// `sum_k v_k v_k*` for a list of vectors.
pub fn projector(dim: usize, vectors: &[Vec<Complex64>]) -> CMatrix {
    let mut p = CMatrix::zeros(dim);
    for v in vectors {
        for r in 0..dim {
            if v[r].re == 0.0 && v[r].im == 0.0 {
                continue;
            }
            for c in 0..dim {
                p[(r, c)] += v[r] * v[c].conj();
            }
        }
    }
    p
}

/// Max of the projection defects `|p - p*|_2` and `|p - p^2|_2`.
pub fn projection_defect(p: &CMatrix) -> f64 {
    norm2(&(p - &p.adjoint())).max(norm2(&(p - &(p * p))))
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    dim: usize,
    entries: Vec<Vec<[f64; 2]>>,
}

impl Serialize for CMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let entries = (0..self.dim)
            .map(|r| {
                (0..self.dim)
                    .map(|c| {
                        let z = self[(r, c)];
                        // normalize -0.0 so output is byte-stable
                        [z.re + 0.0, z.im + 0.0]
                    })
                    .collect()
            })
            .collect();
        MatrixJson {
            dim: self.dim,
            entries,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = MatrixJson::deserialize(d)?;
        if raw.entries.len() != raw.dim || raw.entries.iter().any(|r| r.len() != raw.dim) {
            return Err(serde::de::Error::custom(format!(
                "entries do not form a {0}x{0} array",
                raw.dim
            )));
        }
        let data = raw
            .entries
            .into_iter()
            .flatten()
            .map(|[re, im]| Complex64::new(re, im))
            .collect();
        CMatrix::from_vec(raw.dim, data).map_err(serde::de::Error::custom)
    }
}

/// `exp(i t h)` for Hermitian `h`.
pub fn expi(h: &CMatrix, t: f64) -> Result<CMatrix> {
    let eig = hermitian_eig(h)?;
    let phases: Vec<Complex64> = eig
        .eigenvalues
        .iter()
        .map(|&l| Complex64::from_polar(1.0, t * l))
        .collect();
    let u = &eig.eigenvectors;
    Ok(&(u * &CMatrix::from_diag(&phases)) * &u.adjoint())
}

/// Pauli matrices, used by fixtures throughout.
pub mod pauli {
    use super::*;

    pub fn i2() -> CMatrix {
        CMatrix::identity(2)
    }

    pub fn x() -> CMatrix {
        CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
    }

    pub fn y() -> CMatrix {
        let i = Complex64::new(0.0, 1.0);
        CMatrix::from_rows(&[&[ZERO, -i], &[i, ZERO]]).unwrap()
    }

    pub fn z() -> CMatrix {
        CMatrix::from_real_diag(&[1.0, -1.0])
    }
}
