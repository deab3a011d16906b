//! Exact solution of square integer linear systems.
//!
//! Small systems go through fraction-free (Bareiss) elimination over big
//! integers. Larger ones use p-adic lifting: one LU factorisation modulo a
//! 31-bit prime, repeated lifting of the residual, rational reconstruction,
//! and an exact residual check before anything is returned.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Systems up to this size use Bareiss elimination.
pub const BAREISS_MAX: usize = 48;

const PRIMES: [u64; 6] = [2147483647, 2147483629, 2147483587, 2147483579, 2147483563, 2147483549];

/// Row-major dense integer matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct IntMatrix {
    n: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(n: usize) -> Self {
        IntMatrix { n, data: vec![BigInt::zero(); n * n] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> BigInt) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        IntMatrix { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.n + j] = v;
    }

    fn to_i128(&self) -> Option<Vec<i128>> {
        self.data.iter().map(|v| v.to_i128().filter(|x| x.unsigned_abs() < 1u128 << 80)).collect()
    }
}

/// `x_i = numerators[i] / denominator`, denominator positive, overall gcd 1.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalSolution {
    pub numerators: Vec<BigInt>,
    pub denominator: BigInt,
}

impl RationalSolution {
    fn normalized(mut numerators: Vec<BigInt>, mut denominator: BigInt) -> Self {
        if denominator.is_negative() {
            denominator = -denominator;
            for v in &mut numerators {
                *v = -&*v;
            }
        }
        let g = numerators.iter().fold(denominator.clone(), |g, v| g.gcd(v));
        if !g.is_one() && !g.is_zero() {
            for v in &mut numerators {
                *v /= &g;
            }
            denominator /= &g;
        }
        RationalSolution { numerators, denominator }
    }

    pub fn value(&self, i: usize) -> BigRational {
        BigRational::new(self.numerators[i].clone(), self.denominator.clone())
    }

    pub fn values(&self) -> Vec<BigRational> {
        (0..self.numerators.len()).map(|i| self.value(i)).collect()
    }
}

/// Solve `a x = b` exactly.
pub fn solve(a: &IntMatrix, b: &[BigInt]) -> Result<RationalSolution> {
    if b.len() != a.n {
        return Err(Error::LengthMismatch { expected: a.n, actual: b.len() });
    }
    if a.n == 0 {
        return Ok(RationalSolution { numerators: Vec::new(), denominator: BigInt::one() });
    }
    if a.n <= BAREISS_MAX {
        return solve_bareiss(a, b);
    }
    match (a.to_i128(), b.iter().map(|v| v.to_i128()).collect::<Option<Vec<_>>>()) {
        (Some(ai), Some(bi)) if a.n <= 1 << 14 => solve_dixon(&ai, &bi, a.n),
        _ => solve_bareiss(a, b),
    }
}

/// Solve `a x = b` for a row-major matrix with machine-sized entries,
/// skipping the big-integer copy for large systems.
pub fn solve_i64(n: usize, a: &[i64], b: &[i64]) -> Result<RationalSolution> {
    if a.len() != n * n {
        return Err(Error::LengthMismatch { expected: n * n, actual: a.len() });
    }
    if b.len() != n {
        return Err(Error::LengthMismatch { expected: n, actual: b.len() });
    }
    if n <= BAREISS_MAX {
        let m = IntMatrix::from_fn(n, |i, j| BigInt::from(a[i * n + j]));
        let rhs: Vec<BigInt> = b.iter().map(|&v| BigInt::from(v)).collect();
        return solve(&m, &rhs);
    }
    let ai: Vec<i128> = a.iter().map(|&v| v as i128).collect();
    let bi: Vec<i128> = b.iter().map(|&v| v as i128).collect();
    solve_dixon(&ai, &bi, n)
}

/// Fraction-free Gaussian elimination with row pivoting on the largest magnitude.
pub fn solve_bareiss(a: &IntMatrix, b: &[BigInt]) -> Result<RationalSolution> {
    let n = a.n;
    let w = n + 1;
    let mut m: Vec<BigInt> = Vec::with_capacity(n * w);
    for i in 0..n {
        m.extend(a.data[i * n..(i + 1) * n].iter().cloned());
        m.push(b[i].clone());
    }
    let mut prev = BigInt::one();
    for k in 0..n {
        let pivot_row = (k..n)
            .filter(|&r| !m[r * w + k].is_zero())
            .max_by(|&r, &s| m[r * w + k].magnitude().cmp(m[s * w + k].magnitude()))
            .ok_or_else(|| Error::Singular(format!("no pivot in column {k}")))?;
        if pivot_row != k {
            for j in 0..w {
                m.swap(k * w + j, pivot_row * w + j);
            }
        }
        let pivot = m[k * w + k].clone();
        for i in k + 1..n {
            let factor = m[i * w + k].clone();
            for j in k + 1..w {
                let v = (&m[i * w + j] * &pivot - &factor * &m[k * w + j]) / &prev;
                m[i * w + j] = v;
            }
            m[i * w + k] = BigInt::zero();
        }
        prev = pivot;
    }
    // back substitution over the rationals
    let mut x: Vec<BigRational> = vec![BigRational::zero(); n];
    for i in (0..n).rev() {
        let mut acc = BigRational::from_integer(m[i * w + n].clone());
        for j in i + 1..n {
            acc -= BigRational::from_integer(m[i * w + j].clone()) * &x[j];
        }
        x[i] = acc / BigRational::from_integer(m[i * w + i].clone());
    }
    let den = x.iter().fold(BigInt::one(), |l, v| l.lcm(v.denom()));
    let nums = x.iter().map(|v| v.numer() * (&den / v.denom())).collect();
    Ok(RationalSolution::normalized(nums, den))
}

#[inline]
fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    a * b % p
}

fn powmod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a, p);
        }
        a = mulmod(a, a, p);
        e >>= 1;
    }
    r
}

fn to_mod(v: i128, p: u64) -> u64 {
    v.rem_euclid(p as i128) as u64
}

/// LU factorisation with row permutation modulo a prime.
/// Barrett reduction for a fixed modulus below 2^32.
#[derive(Clone, Copy)]
struct Barrett {
    p: u64,
    m: u64,
}

impl Barrett {
    fn new(p: u64) -> Self {
        Barrett { p, m: u64::MAX / p }
    }

    #[inline(always)]
    fn reduce(self, x: u64) -> u64 {
        let q = ((x as u128 * self.m as u128) >> 64) as u64;
        let mut r = x - q * self.p;
        // the quotient estimate is short by at most two
        while r >= self.p {
            r -= self.p;
        }
        r
    }
}

struct ModLu {
    n: usize,
    p: u64,
    lu: Vec<u64>,
    perm: Vec<usize>,
    inv_diag: Vec<u64>,
}

impl ModLu {
    fn factor(a: &[i128], n: usize, p: u64) -> Option<Self> {
        let mut lu: Vec<u64> = a.iter().map(|&v| to_mod(v, p)).collect();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut inv_diag = vec![0u64; n];
        let red = Barrett::new(p);
        for k in 0..n {
            let piv = (k..n).find(|&r| lu[r * n + k] != 0)?;
            if piv != k {
                for j in 0..n {
                    lu.swap(k * n + j, piv * n + j);
                }
                perm.swap(k, piv);
            }
            let inv = powmod(lu[k * n + k], p - 2, p);
            inv_diag[k] = inv;
            let (top, bottom) = lu.split_at_mut((k + 1) * n);
            let pivot_row = &top[k * n + k + 1..(k + 1) * n];
            for row in bottom.chunks_exact_mut(n) {
                if row[k] == 0 {
                    continue;
                }
                let f = mulmod(row[k], inv, p);
                row[k] = f;
                let neg = p - f;
                for (x, &y) in row[k + 1..].iter_mut().zip(pivot_row) {
                    *x = red.reduce(*x + neg * y);
                }
            }
        }
        Some(ModLu { n, p, lu, perm, inv_diag })
    }

    fn solve(&self, rhs: &[u64]) -> Vec<u64> {
        let (n, p) = (self.n, self.p);
        let mut y: Vec<u64> = self.perm.iter().map(|&i| rhs[i]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let mut acc = y[i];
            for (j, &l) in row.iter().enumerate() {
                acc = (acc + (p - l) * y[j] % p) % p;
            }
            y[i] = acc;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n..(i + 1) * n];
            let mut acc = y[i];
            for j in i + 1..n {
                acc = (acc + (p - row[j]) * y[j] % p) % p;
            }
            y[i] = mulmod(acc, self.inv_diag[i], p);
        }
        y
    }
}

/// Reconstruct `a / b` from `u mod m` with `|a|, b <= bound`.
fn rational_reconstruct(u: &BigInt, m: &BigInt, bound: &BigInt) -> Option<(BigInt, BigInt)> {
    let (mut r0, mut r1) = (m.clone(), u.mod_floor(m));
    let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
    while &r1 > bound {
        let (q, r) = r0.div_rem(&r1);
        r0 = std::mem::replace(&mut r1, r);
        let t = &t0 - &q * &t1;
        t0 = std::mem::replace(&mut t1, t);
    }
    if t1.is_zero() || t1.abs() > *bound {
        return None;
    }
    if t1.is_negative() {
        Some((-r1, -t1))
    } else {
        Some((r1, t1))
    }
}

fn symmetric(v: BigInt, m: &BigInt) -> BigInt {
    let v = v.mod_floor(m);
    if &v * 2 > *m {
        v - m
    } else {
        v
    }
}

/// log2 of a Hadamard-type bound on every Cramer numerator and the determinant.
fn cramer_bits(a: &[i128], b: &[i128], n: usize) -> f64 {
    let mut bits = 0.0;
    let mut min_row = f64::INFINITY;
    for i in 0..n {
        let norm2: f64 = a[i * n..(i + 1) * n].iter().map(|&v| (v as f64).powi(2)).sum();
        let l = 0.5 * norm2.max(1.0).log2();
        bits += l;
        min_row = min_row.min(l);
    }
    let bnorm: f64 = b.iter().map(|&v| (v as f64).powi(2)).sum::<f64>().max(1.0).log2() * 0.5;
    bits + (bnorm - min_row).max(0.0) + 2.0
}

fn solve_dixon(a: &[i128], b: &[i128], n: usize) -> Result<RationalSolution> {
    let (p, lu) = PRIMES
        .iter()
        .find_map(|&p| ModLu::factor(a, n, p).map(|lu| (p, lu)))
        .ok_or_else(|| Error::Singular(format!("{n}x{n} system singular modulo every trial prime")))?;

    let needed_bits = 2.0 * cramer_bits(a, b, n) + 2.0;
    let pbig = BigInt::from(p);
    let half_p = (p / 2) as i128;
    let mut residual: Vec<i128> = b.to_vec();
    let mut digits: Vec<Vec<i128>> = Vec::new();
    let mut next_attempt = 4usize;

    loop {
        let rhs: Vec<u64> = residual.iter().map(|&v| to_mod(v, p)).collect();
        let d: Vec<i128> = lu
            .solve(&rhs)
            .into_iter()
            .map(|v| if v as i128 > half_p { v as i128 - p as i128 } else { v as i128 })
            .collect();
        for i in 0..n {
            let row = &a[i * n..(i + 1) * n];
            let ad: i128 = row.iter().zip(&d).map(|(&x, &y)| x * y).sum();
            let diff = residual[i] - ad;
            debug_assert_eq!(diff % p as i128, 0);
            residual[i] = diff / p as i128;
        }
        digits.push(d);

        let steps = digits.len();
        let have_bits = steps as f64 * (p as f64).log2();
        let exhausted = have_bits > needed_bits;
        if steps < next_attempt && !exhausted {
            continue;
        }
        next_attempt *= 2;

        let modulus = num_traits::pow(pbig.clone(), steps);
        let lifted: Vec<BigInt> = (0..n)
            .map(|i| {
                let mut acc = BigInt::zero();
                for step in digits.iter().rev() {
                    acc = acc * &pbig + step[i];
                }
                acc
            })
            .collect();
        if let Some(sol) = reconstruct_all(&lifted, &modulus) {
            if verify(a, b, n, &sol) {
                return Ok(RationalSolution::normalized(sol.numerators, sol.denominator));
            }
        }
        if exhausted {
            return Err(Error::Singular(format!(
                "{n}x{n} system: lifting exceeded the determinant bound without a verified solution"
            )));
        }
        if residual.iter().all(|&r| r == 0) {
            // the expansion terminated, so the lifted vector is an exact integer solution
            let sol = RationalSolution { numerators: lifted, denominator: BigInt::one() };
            if verify(a, b, n, &sol) {
                return Ok(sol);
            }
        }
    }
}

fn reconstruct_all(lifted: &[BigInt], modulus: &BigInt) -> Option<RationalSolution> {
    let bound = (modulus / 2u32).sqrt();
    let mut den = BigInt::one();
    let mut nums: Vec<BigInt> = Vec::with_capacity(lifted.len());
    for u in lifted {
        let scaled = symmetric(u * &den, modulus);
        if scaled.abs() <= bound {
            nums.push(scaled);
            continue;
        }
        let (a, b) = rational_reconstruct(&(u * &den), modulus, &bound)?;
        for v in &mut nums {
            *v *= &b;
        }
        den *= &b;
        nums.push(a);
        if den > bound {
            return None;
        }
    }
    Some(RationalSolution { numerators: nums, denominator: den })
}

fn verify(a: &[i128], b: &[i128], n: usize, sol: &RationalSolution) -> bool {
    (0..n).all(|i| {
        let row = &a[i * n..(i + 1) * n];
        let mut acc = BigInt::zero();
        for (j, &v) in row.iter().enumerate() {
            if v != 0 {
                acc += &sol.numerators[j] * BigInt::from(v);
            }
        }
        acc == &sol.denominator * BigInt::from(b[i])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn is_prime(p: u64) -> bool {
        p > 1 && (2..).take_while(|d| d * d <= p).all(|d| p % d != 0)
    }

    #[test]
    fn barrett_matches_remainder() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &p in &PRIMES {
            let red = Barrett::new(p);
            for x in [0, 1, p - 1, p, u64::MAX, (p - 1) * (p - 1) + p - 1] {
                assert_eq!(red.reduce(x), x % p);
            }
            for _ in 0..10_000 {
                let x: u64 = rng.random();
                assert_eq!(red.reduce(x), x % p);
            }
        }
    }

    #[test]
    fn trial_primes_are_prime() {
        assert!(PRIMES.iter().all(|&p| is_prime(p)));
    }

    fn random_matrix(n: usize, rng: &mut ChaCha8Rng, spread: i64) -> IntMatrix {
        IntMatrix::from_fn(n, |i, j| {
            let base = if i == j { 3 * spread } else { 0 };
            BigInt::from(base + rng.random_range(-spread..=spread))
        })
    }

    fn check(a: &IntMatrix, b: &[BigInt], sol: &RationalSolution) {
        for i in 0..a.dim() {
            let lhs: BigInt = (0..a.dim()).map(|j| a.get(i, j) * &sol.numerators[j]).sum();
            assert_eq!(lhs, &b[i] * &sol.denominator);
        }
    }

    #[test]
    fn bareiss_small_known_system() {
        // [[2,1],[1,3]] x = [1,2] -> x = (1/5, 3/5)
        let a = IntMatrix::from_fn(2, |i, j| BigInt::from([[2, 1], [1, 3]][i][j]));
        let b = [BigInt::from(1), BigInt::from(2)];
        let s = solve_bareiss(&a, &b).unwrap();
        assert_eq!(s.numerators, vec![BigInt::from(1), BigInt::from(3)]);
        assert_eq!(s.denominator, BigInt::from(5));
    }

    #[test]
    fn bareiss_needs_pivoting() {
        let a = IntMatrix::from_fn(2, |i, j| BigInt::from([[0, 1], [1, 0]][i][j]));
        let b = [BigInt::from(4), BigInt::from(7)];
        let s = solve_bareiss(&a, &b).unwrap();
        assert_eq!(s.values(), vec![BigRational::from_integer(7.into()), BigRational::from_integer(4.into())]);
    }

    #[test]
    fn singular_detected() {
        let a = IntMatrix::from_fn(3, |i, j| BigInt::from((i + 1) * (j + 1)));
        let b = vec![BigInt::one(); 3];
        assert!(matches!(solve_bareiss(&a, &b), Err(Error::Singular(_))));
        let big = IntMatrix::from_fn(60, |i, j| BigInt::from((i % 3) * (j + 1)));
        assert!(matches!(solve(&big, &vec![BigInt::one(); 60]), Err(Error::Singular(_))));
    }

    #[test]
    fn dixon_matches_bareiss() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &(n, spread) in &[(5usize, 3i64), (20, 1000), (40, 1 << 40)] {
            let a = random_matrix(n, &mut rng, spread);
            let b: Vec<BigInt> = (0..n).map(|_| BigInt::from(rng.random_range(-50..50))).collect();
            let ai = a.to_i128().unwrap();
            let bi: Vec<i128> = b.iter().map(|v| v.to_i128().unwrap()).collect();
            let d = solve_dixon(&ai, &bi, n).unwrap();
            let r = solve_bareiss(&a, &b).unwrap();
            assert_eq!(d, r);
            check(&a, &b, &d);
        }
    }

    #[test]
    fn dixon_large_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_matrix(150, &mut rng, 1 << 20);
        let b = vec![BigInt::one(); 150];
        let s = solve(&a, &b).unwrap();
        check(&a, &b, &s);
    }

    #[test]
    fn integer_solutions_terminate() {
        let n = 60;
        let a = IntMatrix::from_fn(n, |i, j| BigInt::from(if i == j { 1 } else { 0 }));
        let b: Vec<BigInt> = (0..n).map(|i| BigInt::from(i as i64 - 30)).collect();
        let s = solve(&a, &b).unwrap();
        assert_eq!(s.denominator, BigInt::one());
        assert_eq!(s.numerators, b);
    }
}
