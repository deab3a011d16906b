//! Exact expected waiting times.
//!
//! With `M` the matching matrix of a collection of length-`n` patterns, solve
//! `M x = 2^{-n} 1`. Then `x_i / Σx` is the probability that pattern `i` is
//! the first to occur, `1/x_i` is reported as its per-pattern wait and
//! `1/Σx` is the expected wait for the whole collection.

use std::collections::VecDeque;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde_json::json;

use crate::error::{Error, Result};
use crate::exact;
use crate::lattice::{binomial, PatternClass, PatternCollection, PatternKind};
use crate::matching::{positive_walk_multiplicity, rational_string, MatchingMatrix};

/// Largest pattern length accepted by [`brute_force_oracle`].
pub const ORACLE_MAX_LEN: usize = 14;

#[derive(Clone, Debug, PartialEq)]
pub struct WaitReport {
    pub class: PatternClass,
    pub n: usize,
    pub count: usize,
    pub per_pattern: Vec<BigRational>,
    pub collection: BigRational,
    pub per_pattern_f64: Vec<f64>,
    pub collection_f64: f64,
    /// Leading growth term for the class, when one is known.
    pub predicted_order: Option<f64>,
    pub asymptotic_ratio: Option<f64>,
}

impl WaitReport {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "class": self.class.label(),
            "n": self.n,
            "count": self.count,
            "collection_wait": rational_string(&self.collection),
            "collection_wait_float": self.collection_f64,
            "per_pattern": self.per_pattern.iter().map(rational_string).collect::<Vec<_>>(),
            "predicted_order": self.predicted_order,
            "ratio": self.asymptotic_ratio,
        })
    }
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Leading-order growth of the expected wait:
/// `4√π m^{3/2}` for excursions of length `2m`, `4m` for positive walks of
/// length `2m+1`, and `n` for bridges and first-passage walks.
pub fn predicted_growth(class: &PatternClass) -> Option<f64> {
    let n = class.len() as f64;
    match class.kind() {
        PatternKind::Excursion => Some(4.0 * std::f64::consts::PI.sqrt() * (n / 2.0).powf(1.5)),
        PatternKind::Positive => Some(4.0 * ((n - 1.0) / 2.0)),
        PatternKind::Bridge | PatternKind::FirstPassage => Some(n),
        PatternKind::Custom => None,
    }
}

pub fn solve_expected_waits(m: &MatchingMatrix) -> Result<WaitReport> {
    let k = m.dim();
    if k == 0 {
        return Err(Error::param("empty collection"));
    }
    // 2^{n-1} M z = 1 with x = z / 2
    let sol = exact::solve(&m.scaled_integer_matrix(), &vec![BigInt::one(); k])?;
    let two_d: BigInt = &sol.denominator * 2;
    let mut per_pattern = Vec::with_capacity(k);
    for (i, z) in sol.numerators.iter().enumerate() {
        if z.is_zero() || z.sign() != sol.denominator.sign() {
            return Err(Error::Singular(format!("non-positive occurrence weight for pattern {i}")));
        }
        per_pattern.push(BigRational::new(two_d.clone(), z.clone()));
    }
    let total: BigInt = sol.numerators.iter().sum();
    let collection = BigRational::new(two_d, total);
    let collection_f64 = to_f64(&collection);
    let predicted_order = predicted_growth(m.class());
    Ok(WaitReport {
        class: m.class().clone(),
        n: m.pattern_len(),
        count: k,
        per_pattern_f64: per_pattern.iter().map(to_f64).collect(),
        per_pattern,
        collection,
        collection_f64,
        predicted_order,
        asymptotic_ratio: predicted_order.map(|p| collection_f64 / p),
    })
}

/// Build the matching matrix and solve it.
pub fn expected_waits(collection: &PatternCollection) -> Result<WaitReport> {
    solve_expected_waits(&MatchingMatrix::build(collection)?)
}

/// `2^{2m} / k(E^{2m})`.
pub fn closed_form_excursion_wait(n_half: usize) -> Result<BigRational> {
    if n_half == 0 {
        return Err(Error::param("n_half must be at least 1"));
    }
    let m = n_half as u64;
    let count = binomial(2 * m - 2, m - 1) / m;
    Ok(BigRational::new((BigUint::one() << (2 * n_half)).into(), count.into()))
}

/// `2^{2m+1} · multiplicity / k(M^{2m+1})`.
pub fn closed_form_positive_wait(n_half: usize) -> Result<BigRational> {
    let mult = positive_walk_multiplicity(n_half)?;
    let m = n_half as u64;
    let count = binomial(2 * m, m);
    let scale = BigRational::new((BigUint::one() << (2 * n_half + 1)).into(), count.into());
    Ok(scale * mult)
}

const NONE: usize = usize::MAX;

/// Pattern-matching automaton over `{+, -}`: trie with failure transitions.
struct Automaton {
    delta: Vec<[usize; 2]>,
    terminal: Vec<bool>,
}

impl Automaton {
    fn build(collection: &PatternCollection) -> Self {
        let n = collection.n();
        let mut child: Vec<[usize; 2]> = vec![[NONE; 2]];
        let mut depth = vec![0usize];
        for path in collection.paths() {
            let mut node = 0;
            for i in 0..n {
                let c = path.is_up(i) as usize;
                if child[node][c] == NONE {
                    child[node][c] = child.len();
                    child.push([NONE; 2]);
                    depth.push(depth[node] + 1);
                }
                node = child[node][c];
            }
        }
        let size = child.len();
        let terminal: Vec<bool> = depth.iter().map(|&d| d == n).collect();
        let mut delta = vec![[NONE; 2]; size];
        let mut fail = vec![0usize; size];
        let mut queue = VecDeque::new();
        for c in 0..2 {
            match child[0][c] {
                NONE => delta[0][c] = 0,
                v => {
                    delta[0][c] = v;
                    queue.push_back(v);
                }
            }
        }
        while let Some(u) = queue.pop_front() {
            if terminal[u] {
                continue;
            }
            for c in 0..2 {
                match child[u][c] {
                    NONE => delta[u][c] = delta[fail[u]][c],
                    v => {
                        fail[v] = delta[fail[u]][c];
                        delta[u][c] = v;
                        queue.push_back(v);
                    }
                }
            }
        }
        Automaton { delta, terminal }
    }
}

/// Expected absorption time of the walk's pattern automaton, by first-step
/// analysis solved exactly.
pub fn brute_force_oracle(collection: &PatternCollection) -> Result<BigRational> {
    let n = collection.n();
    if collection.is_empty() {
        return Err(Error::param("empty collection"));
    }
    if n > ORACLE_MAX_LEN {
        return Err(Error::CapExceeded {
            what: "oracle pattern length",
            size: n.to_string(),
            cap: ORACLE_MAX_LEN.to_string(),
        });
    }
    let auto = Automaton::build(collection);
    let mut index = vec![NONE; auto.terminal.len()];
    let mut live = 0;
    for (s, &t) in auto.terminal.iter().enumerate() {
        if !t {
            index[s] = live;
            live += 1;
        }
    }
    // 2 h(s) - h(δ(s,+)) - h(δ(s,-)) = 2, h = 0 on terminal states
    let mut a = vec![0i64; live * live];
    for (s, &row) in index.iter().enumerate() {
        if row == NONE {
            continue;
        }
        a[row * live + row] += 2;
        for &t in &auto.delta[s] {
            if index[t] != NONE {
                a[row * live + index[t]] -= 1;
            }
        }
    }
    let sol = exact::solve_i64(live, &a, &vec![2; live])?;
    Ok(sol.value(index[0]))
}

/// Consecutive-pair exponent estimates `log(w₂/w₁) / log(n₂/n₁)`.
pub fn exponent_fit(values: &[(f64, f64)]) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::param("exponent fit needs at least two points"));
    }
    if values.iter().any(|&(n, w)| !(n > 0.0) || !(w > 0.0) || !n.is_finite() || !w.is_finite()) {
        return Err(Error::param("exponent fit needs positive finite sizes and waits"));
    }
    values
        .windows(2)
        .map(|w| {
            let ((n1, t1), (n2, t2)) = (w[0], w[1]);
            if n2 <= n1 {
                return Err(Error::param("sizes must be strictly increasing"));
            }
            Ok((t2 / t1).ln() / (n2 / n1).ln())
        })
        .collect()
}
