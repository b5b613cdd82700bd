//! Linear systems over GF(2) written multiplicatively.
//!
//! Equation `i` reads `prod_{j in V_i} x_j = (-1)^{b_i}` with `x_j in {+1, -1}`.
//! Variables and equations are 0-based in the Rust API; the JSON format uses
//! 1-based variable indices.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest support size for which local solution sets are materialized.
pub const MAX_SUPPORT: usize = 20;

/// An `m x n` system `Ax = b` over GF(2), stored by equation supports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryLinearSystem {
    n: usize,
    rows: Vec<Vec<usize>>,
    b: Vec<bool>,
    untouched: Vec<usize>,
}

/// A vector in `{+1, -1}^n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignVector(Vec<i8>);

impl SignVector {
    pub fn ones(n: usize) -> Self {
        SignVector(vec![1; n])
    }

    pub fn new(entries: Vec<i8>) -> Result<Self> {
        if let Some(bad) = entries.iter().find(|&&e| e != 1 && e != -1) {
            return Err(Error::Validation(format!("sign entry {bad} is not +1 or -1")));
        }
        Ok(SignVector(entries))
    }

    /// Decodes an output index: bit `j` set means `x_j = -1`.
    pub fn from_mask(mask: u64, n: usize) -> Self {
        SignVector((0..n).map(|j| if mask >> j & 1 == 1 { -1 } else { 1 }).collect())
    }

    pub fn to_mask(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &e)| e == -1)
            .fold(0u64, |acc, (j, _)| acc | 1 << j)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[i8] {
        &self.0
    }

    pub fn get(&self, j: usize) -> i8 {
        self.0[j]
    }

    /// Pointwise product.
    pub fn mul(&self, other: &SignVector) -> SignVector {
        SignVector(self.0.iter().zip(&other.0).map(|(a, b)| a * b).collect())
    }
}

impl fmt::Display for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &e in &self.0 {
            f.write_str(if e == 1 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

impl Serialize for SignVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SignVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<i8>::deserialize(d)?;
        SignVector::new(raw).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct SystemJson {
    m: usize,
    n: usize,
    rows: Vec<Vec<usize>>,
    b: Vec<u8>,
}

impl BinaryLinearSystem {
    /// Builds a system from 0-based supports. Duplicate indices within a row
    /// are rejected since they would cancel over GF(2).
    pub fn new(n: usize, rows: Vec<Vec<usize>>, b: Vec<bool>) -> Result<Self> {
        if rows.len() != b.len() {
            return Err(Error::Validation(format!(
                "{} equations but {} right-hand-side bits",
                rows.len(),
                b.len()
            )));
        }
        let mut covered = vec![false; n];
        let mut sorted_rows = Vec::with_capacity(rows.len());
        for (i, row) in rows.into_iter().enumerate() {
            if row.is_empty() {
                return Err(Error::Validation(format!("equation {} has empty support", i + 1)));
            }
            let mut row = row;
            row.sort_unstable();
            if row.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Validation(format!(
                    "equation {} repeats a variable",
                    i + 1
                )));
            }
            if let Some(&j) = row.iter().find(|&&j| j >= n) {
                return Err(Error::Validation(format!(
                    "equation {} references variable {} but n = {n}",
                    i + 1,
                    j + 1
                )));
            }
            for &j in &row {
                covered[j] = true;
            }
            sorted_rows.push(row);
        }
        let untouched = (0..n).filter(|&j| !covered[j]).collect();
        Ok(BinaryLinearSystem {
            n,
            rows: sorted_rows,
            b,
            untouched,
        })
    }

    /// Builds a system from 1-based supports and 0/1 right-hand sides.
    pub fn from_one_based(n: usize, rows: &[Vec<usize>], b: &[u8]) -> Result<Self> {
        let rows = rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.iter()
                    .map(|&j| {
                        if j == 0 {
                            Err(Error::Validation(format!(
                                "equation {} uses index 0; indices are 1-based",
                                i + 1
                            )))
                        } else {
                            Ok(j - 1)
                        }
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let b = b
            .iter()
            .map(|&v| match v {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::Validation(format!("right-hand side bit {other} is not 0/1"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, rows, b)
    }

    /// The 3x3 magic square: rows then columns of a 3x3 grid of variables
    /// numbered row-major, with odd parity on the last column only.
    pub fn magic_square() -> Self {
        let rows = vec![
            vec![0, 1, 2],
            vec![3, 4, 5],
            vec![6, 7, 8],
            vec![0, 3, 6],
            vec![1, 4, 7],
            vec![2, 5, 8],
        ];
        let b = vec![false, false, false, false, false, true];
        Self::new(9, rows, b).expect("magic square is well formed")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: SystemJson = serde_json::from_str(text)?;
        if raw.m != raw.rows.len() {
            return Err(Error::Validation(format!(
                "m = {} but {} rows given",
                raw.m,
                raw.rows.len()
            )));
        }
        Self::from_one_based(raw.n, &raw.rows, &raw.b)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let raw = SystemJson {
            m: self.m(),
            n: self.n,
            rows: self.rows.iter().map(|r| r.iter().map(|j| j + 1).collect()).collect(),
            b: self.b.iter().map(|&v| v as u8).collect(),
        };
        serde_json::to_value(raw).expect("system serializes")
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Sorted 0-based support `V_i`.
    pub fn support(&self, i: usize) -> &[usize] {
        &self.rows[i]
    }

    pub fn rhs(&self, i: usize) -> bool {
        self.b[i]
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    /// Variables appearing in no equation.
    pub fn untouched(&self) -> &[usize] {
        &self.untouched
    }

    /// True when every column of `A` has a nonzero entry.
    pub fn every_column_nonzero(&self) -> bool {
        self.untouched.is_empty()
    }

    pub(crate) fn require_full_columns(&self) -> Result<()> {
        if self.every_column_nonzero() {
            Ok(())
        } else {
            Err(Error::Validation(format!(
                "variables {:?} appear in no equation",
                self.untouched.iter().map(|j| j + 1).collect::<Vec<_>>()
            )))
        }
    }

    /// The same supports with `b = 0`.
    pub fn homogeneous(&self) -> Self {
        BinaryLinearSystem {
            n: self.n,
            rows: self.rows.clone(),
            b: vec![false; self.rows.len()],
            untouched: self.untouched.clone(),
        }
    }

    /// Variables shared by equations `i` and `j`.
    pub fn shared(&self, i: usize, j: usize) -> Vec<usize> {
        let (a, b) = (&self.rows[i], &self.rows[j]);
        a.iter().copied().filter(|k| b.binary_search(k).is_ok()).collect()
    }

    fn check_equation(&self, i: usize) -> Result<()> {
        if i >= self.m() {
            Err(Error::Validation(format!(
                "equation index {} out of range 1..={}",
                i + 1,
                self.m()
            )))
        } else {
            Ok(())
        }
    }

    /// True when `x` satisfies equation `i` (ignores off-support entries).
    pub fn satisfies_equation(&self, i: usize, x: &SignVector) -> bool {
        let neg = self.rows[i].iter().filter(|&&j| x.get(j) == -1).count();
        (neg % 2 == 1) == self.b[i]
    }

    /// Membership in `S_i`: satisfies equation `i` and is `+1` off `V_i`.
    pub fn in_local_solutions(&self, i: usize, x: &SignVector) -> bool {
        if x.len() != self.n || !self.satisfies_equation(i, x) {
            return false;
        }
        let support = &self.rows[i];
        (0..self.n).all(|j| support.binary_search(&j).is_ok() || x.get(j) == 1)
    }

    pub fn is_global_solution(&self, x: &SignVector) -> bool {
        x.len() == self.n && (0..self.m()).all(|i| self.satisfies_equation(i, x))
    }

    /// Decides solvability of `Ax = b` by Gaussian elimination over GF(2).
    pub fn solve(&self) -> Option<SignVector> {
        let n = self.n;
        let words = (n + 1).div_ceil(64);
        let rhs_bit = n;
        let mut mat: Vec<Vec<u64>> = self
            .rows
            .iter()
            .zip(&self.b)
            .map(|(row, &bi)| {
                let mut w = vec![0u64; words];
                for &j in row {
                    w[j / 64] |= 1 << (j % 64);
                }
                if bi {
                    w[rhs_bit / 64] |= 1 << (rhs_bit % 64);
                }
                w
            })
            .collect();
        let bit = |row: &[u64], j: usize| row[j / 64] >> (j % 64) & 1 == 1;

        let mut pivots = Vec::new();
        let mut r = 0;
        for col in 0..n {
            let Some(p) = (r..mat.len()).find(|&k| bit(&mat[k], col)) else {
                continue;
            };
            mat.swap(r, p);
            let pivot_row = mat[r].clone();
            for (k, row) in mat.iter_mut().enumerate() {
                if k != r && bit(row, col) {
                    for (a, b) in row.iter_mut().zip(&pivot_row) {
                        *a ^= b;
                    }
                }
            }
            pivots.push(col);
            r += 1;
            if r == mat.len() {
                break;
            }
        }
        // a zero row with rhs 1 means 0 = 1
        if mat[r..].iter().any(|row| bit(row, rhs_bit)) {
            return None;
        }
        let mut x = vec![1i8; n];
        for (k, &col) in pivots.iter().enumerate() {
            if bit(&mat[k], rhs_bit) {
                x[col] = -1;
            }
        }
        let x = SignVector(x);
        // free variables are +1, so each pivot row reads x_col = rhs
        debug_assert!(self.is_global_solution(&x));
        if self.is_global_solution(&x) {
            Some(x)
        } else {
            None
        }
    }

    /// Enumerates `S_i` in lexicographic order with `+1 < -1`.
    pub fn local_solutions(&self, i: usize) -> Result<Vec<SignVector>> {
        self.check_equation(i)?;
        local_solutions_for(&self.rows[i], self.b[i], self.n)
    }

    /// `|S_i| = 2^{|V_i| - 1}`.
    pub fn local_solution_count(&self, i: usize) -> usize {
        1 << (self.rows[i].len() - 1)
    }
}

fn local_solutions_for(support: &[usize], parity: bool, n: usize) -> Result<Vec<SignVector>> {
    let k = support.len();
    if k > MAX_SUPPORT {
        return Err(Error::Budget(format!(
            "equation support of size {k} exceeds the enumeration cap {MAX_SUPPORT}"
        )));
    }
    let mut out = Vec::with_capacity(1 << (k - 1));
    for mask in 0u32..(1 << k) {
        if (mask.count_ones() % 2 == 1) != parity {
            continue;
        }
        let mut x = vec![1i8; n];
        for (t, &j) in support.iter().enumerate() {
            if mask >> (k - 1 - t) & 1 == 1 {
                x[j] = -1;
            }
        }
        out.push(SignVector(x));
    }
    Ok(out)
}

/// Brute-force solvability over all `2^n` sign vectors. Test oracle.
pub fn solve_exhaustive(sys: &BinaryLinearSystem) -> Option<SignVector> {
    assert!(sys.n() <= 24, "exhaustive scan limited to n <= 24");
    (0u64..1 << sys.n())
        .map(|mask| SignVector::from_mask(mask, sys.n()))
        .find(|x| sys.is_global_solution(x))
}
