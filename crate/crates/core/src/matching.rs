//! Overlap (matching) matrices of pattern collections.
//!
//! `M[i][j] = Σ_{l=0}^{n-1} ε_l(A_i, A_j) / 2^l`, where `ε_l(a, b)` is 1 when
//! the first `n - l` steps of `a` equal the last `n - l` steps of `b`.
//! Entries are dyadic, so they are stored as integer numerators over the
//! common denominator `2^(n-1)`.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::IntMatrix;
use crate::lattice::{binomial, lambda_n, positive_walk_count, LatticePath, PatternClass, PatternCollection};

/// Largest collection for which a dense matrix is built.
pub const MATRIX_CAP: usize = 4096;

/// `ε_l(a, b)`.
pub fn overlap_indicator(a: &LatticePath, b: &LatticePath, l: usize) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { expected: a.len(), actual: b.len() });
    }
    if l >= a.len() {
        return Err(Error::param(format!("shift {l} out of range for length {}", a.len())));
    }
    Ok(overlaps(a, b, l))
}

#[inline]
pub(crate) fn overlaps(a: &LatticePath, b: &LatticePath, l: usize) -> bool {
    let n = a.len();
    let span = n - l;
    if let (Some(x), Some(y)) = (a.bits(), b.bits()) {
        let mask = if span == 64 { u64::MAX } else { (1u64 << span) - 1 };
        return x & mask == (y >> l) & mask;
    }
    let mut off = 0;
    while off < span {
        let c = (span - off).min(64);
        if a.bit_chunk(off, c) != b.bit_chunk(l + off, c) {
            return false;
        }
        off += c;
    }
    true
}

#[derive(Clone, Debug, PartialEq)]
enum Numerators {
    Small(Vec<u64>),
    Big(Vec<BigUint>),
}

/// Exact matching matrix of a collection.
#[derive(Clone, Debug, PartialEq)]
pub struct MatchingMatrix {
    k: usize,
    n: usize,
    class: PatternClass,
    nums: Numerators,
}

impl MatchingMatrix {
    pub fn build(collection: &PatternCollection) -> Result<Self> {
        let k = collection.len();
        if k > MATRIX_CAP {
            return Err(Error::CapExceeded {
                what: "matching matrix dimension",
                size: k.to_string(),
                cap: MATRIX_CAP.to_string(),
            });
        }
        let n = collection.n();
        let paths = collection.paths();
        let nums = if n <= 64 {
            let rows: Vec<Vec<u64>> = paths
                .par_iter()
                .map(|a| {
                    let x = a.bits().unwrap_or_default();
                    paths
                        .iter()
                        .map(|b| {
                            let y = b.bits().unwrap_or_default();
                            let mut acc = 0u64;
                            for l in 0..n {
                                let span = n - l;
                                let mask = if span == 64 { u64::MAX } else { (1u64 << span) - 1 };
                                if x & mask == (y >> l) & mask {
                                    acc |= 1 << (n - 1 - l);
                                }
                            }
                            acc
                        })
                        .collect()
                })
                .collect();
            Numerators::Small(rows.concat())
        } else {
            let rows: Vec<Vec<BigUint>> = paths
                .par_iter()
                .map(|a| {
                    paths
                        .iter()
                        .map(|b| {
                            let mut acc = BigUint::zero();
                            for l in 0..n {
                                if overlaps(a, b, l) {
                                    acc.set_bit((n - 1 - l) as u64, true);
                                }
                            }
                            acc
                        })
                        .collect()
                })
                .collect();
            Numerators::Big(rows.concat())
        };
        Ok(MatchingMatrix { k, n, class: collection.class().clone(), nums })
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn pattern_len(&self) -> usize {
        self.n
    }

    /// Class of the source collection.
    pub fn class(&self) -> &PatternClass {
        &self.class
    }

    /// `2^(n-1)`, the common denominator of all entries.
    pub fn denominator(&self) -> BigUint {
        BigUint::one() << (self.n - 1)
    }

    pub fn numerator(&self, i: usize, j: usize) -> BigUint {
        match &self.nums {
            Numerators::Small(v) => BigUint::from(v[i * self.k + j]),
            Numerators::Big(v) => v[i * self.k + j].clone(),
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> BigRational {
        BigRational::new(self.numerator(i, j).into(), self.denominator().into())
    }

    /// Entry as a float (exact for `n <= 53`).
    pub fn entry_f64(&self, i: usize, j: usize) -> f64 {
        match &self.nums {
            Numerators::Small(v) => v[i * self.k + j] as f64 / 2f64.powi(self.n as i32 - 1),
            Numerators::Big(_) => self.entry(i, j).to_f64().unwrap_or(f64::NAN),
        }
    }

    /// `2^(n-1) M` as an integer matrix.
    pub fn scaled_integer_matrix(&self) -> IntMatrix {
        IntMatrix::from_fn(self.k, |i, j| BigInt::from(self.numerator(i, j)))
    }

    fn sum_numerators(&self, along_rows: bool) -> Vec<BigRational> {
        let den = BigInt::from(self.denominator());
        (0..self.k)
            .map(|a| {
                let total: BigUint = (0..self.k)
                    .map(|b| if along_rows { self.numerator(a, b) } else { self.numerator(b, a) })
                    .sum();
                BigRational::new(total.into(), den.clone())
            })
            .collect()
    }

    pub fn row_sums(&self) -> Vec<BigRational> {
        self.sum_numerators(true)
    }

    pub fn column_sums(&self) -> Vec<BigRational> {
        self.sum_numerators(false)
    }

    /// CSV of `p/q` strings, one matrix row per line.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.k {
            let row: Vec<String> = (0..self.k).map(|j| rational_string(&self.entry(i, j))).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// JSON with `[numerator, denominator]` string pairs.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Export {
            collection: String,
            n: usize,
            k: usize,
            entries: Vec<Vec<[String; 2]>>,
        }
        let entries = (0..self.k)
            .map(|i| {
                (0..self.k)
                    .map(|j| {
                        let e = self.entry(i, j);
                        [e.numer().to_string(), e.denom().to_string()]
                    })
                    .collect()
            })
            .collect();
        serde_json::to_value(Export { collection: self.class.label(), n: self.n, k: self.k, entries })
            .expect("matrix export serializes")
    }
}

/// Always `p/q`, even for integers.
pub fn rational_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Common row sum of the positive-walk matching matrix of length `2 n_half + 1`:
/// `1 + Σ_{l=1}^{2 n_half} k(M^l) / 2^l`.
pub fn positive_walk_multiplicity(n_half: usize) -> Result<BigRational> {
    if n_half == 0 {
        return Err(Error::param("n_half must be at least 1"));
    }
    let top = 2 * n_half;
    // put everything over 2^top
    let mut num = BigUint::one() << top;
    for l in 1..=top {
        num += positive_walk_count(l) << (top - l);
    }
    Ok(BigRational::new(num.into(), (BigUint::one() << top).into()))
}

/// Upper bound on column sums of the bridge matrix of length `len`:
/// `1 + Σ_{l=1}^{len-1} C(l, ⌊l/2⌋) / 2^l`.
pub fn bridge_column_bound(len: usize) -> BigRational {
    let top = len.saturating_sub(1);
    let mut num = BigUint::one() << top;
    for l in 1..=top {
        num += binomial(l as u64, (l / 2) as u64) << (top - l);
    }
    BigRational::new(num.into(), (BigUint::one() << top).into())
}

/// Column sum of a bridge pattern in its class matrix, from the prefix heights:
/// `1 + Σ_{l=1}^{n-1} C(l, (l + s_l)/2) / 2^l`, with `s_l` the height after `l` steps.
pub fn bridge_column_sum(path: &LatticePath) -> BigRational {
    let n = path.len();
    let top = n - 1;
    let mut num = BigUint::one() << top;
    for l in 1..n {
        let s = path.height_at(l);
        let up = (l as i64 + s) / 2;
        num += binomial(l as u64, up as u64) << (top - l);
    }
    BigRational::new(num.into(), (BigUint::one() << top).into())
}

/// Column sum of a first-passage pattern in its class matrix:
/// `1 + Σ_{l=1}^{n-1} 1{s_l < 0} (|s_l| / l) C(l, (l + s_l)/2) / 2^l`.
pub fn first_passage_column_sum(path: &LatticePath) -> BigRational {
    let n = path.len();
    let mut total = BigRational::one();
    for l in 1..n {
        let s = path.height_at(l);
        if s < 0 {
            let depth = s.unsigned_abs();
            let count = binomial(l as u64, (l as u64 - depth) / 2) * depth;
            total += BigRational::new(count.into(), (BigUint::from(l) << l).into());
        }
    }
    total
}

/// The first-passage pattern whose column sum dominates: down for the first
/// `|λ_n| - 1` steps, then alternating up/down, and a final down step.
pub fn extreme_first_passage_pattern(lambda: f64, n: usize) -> Result<LatticePath> {
    if !(lambda < 0.0) || n == 0 {
        return Err(Error::param("extreme pattern needs λ < 0 and n >= 1"));
    }
    let end = lambda_n(lambda, n);
    if end >= 0 || end.unsigned_abs() as usize > n {
        return Err(Error::param(format!("λ_n = {end} is not a reachable negative level for n = {n}")));
    }
    let depth = end.unsigned_abs() as usize;
    let ups: Vec<bool> = (1..=n)
        .map(|k| {
            let down = k < depth || k == n || (k >= depth && (k - depth) % 2 == 1);
            !down
        })
        .collect();
    Ok(LatticePath::from_ups(&ups))
}
