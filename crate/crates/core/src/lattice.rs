//! Lattice paths, the four built-in pattern classes and their counts.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::OnceLock;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Refuse to enumerate classes with more members than this.
pub const ENUMERATION_CAP: u64 = 10_000_000;

/// A finite walk with ±1 increments, packed one bit per step (1 = up).
pub struct LatticePath {
    words: Vec<u64>,
    len: usize,
    heights: OnceLock<Vec<i64>>,
}

impl LatticePath {
    pub fn from_steps(steps: &[i8]) -> Result<Self> {
        let mut words = vec![0u64; steps.len().div_ceil(64)];
        for (i, &s) in steps.iter().enumerate() {
            match s {
                1 => words[i / 64] |= 1 << (i % 64),
                -1 => {}
                other => return Err(Error::param(format!("increment {other} is not ±1"))),
            }
        }
        Ok(Self::from_words(words, steps.len()))
    }

    pub fn from_ups(ups: &[bool]) -> Self {
        let mut words = vec![0u64; ups.len().div_ceil(64)];
        for (i, &u) in ups.iter().enumerate() {
            if u {
                words[i / 64] |= 1 << (i % 64);
            }
        }
        Self::from_words(words, ups.len())
    }

    /// Build from the low `len` bits of `bits` (bit `i` is step `i`, set = up).
    pub fn from_bits(bits: u64, len: usize) -> Self {
        assert!(len <= 64, "from_bits supports at most 64 steps");
        let bits = if len == 64 { bits } else { bits & ((1u64 << len) - 1) };
        let words = if len == 0 { Vec::new() } else { vec![bits] };
        Self::from_words(words, len)
    }

    fn from_words(words: Vec<u64>, len: usize) -> Self {
        LatticePath { words, len, heights: OnceLock::new() }
    }

    /// Parse a string of `+` and `-` characters.
    pub fn parse(s: &str) -> Result<Self> {
        let mut ups = Vec::with_capacity(s.len());
        for (col, c) in s.chars().enumerate() {
            match c {
                '+' => ups.push(true),
                '-' => ups.push(false),
                other => {
                    return Err(Error::param(format!(
                        "illegal character {other:?} at column {}",
                        col + 1
                    )))
                }
            }
        }
        Ok(Self::from_ups(&ups))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn is_up(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn step(&self, i: usize) -> i8 {
        if self.is_up(i) {
            1
        } else {
            -1
        }
    }

    pub fn steps(&self) -> impl Iterator<Item = i8> + '_ {
        (0..self.len).map(move |i| self.step(i))
    }

    /// Packed bits for paths of at most 64 steps.
    pub fn bits(&self) -> Option<u64> {
        match self.len {
            0 => Some(0),
            1..=64 => Some(self.words[0]),
            _ => None,
        }
    }

    /// Bits `start..start + count` as the low bits of a word (`count <= 64`).
    #[inline]
    pub(crate) fn bit_chunk(&self, start: usize, count: usize) -> u64 {
        debug_assert!(count <= 64 && start + count <= self.len);
        if count == 0 {
            return 0;
        }
        let w = start / 64;
        let off = start % 64;
        let mut v = self.words[w] >> off;
        if off != 0 && w + 1 < self.words.len() {
            v |= self.words[w + 1] << (64 - off);
        }
        if count < 64 {
            v &= (1u64 << count) - 1;
        }
        v
    }

    /// Heights after each step: `heights()[k]` is the sum of the first `k + 1` increments.
    pub fn heights(&self) -> &[i64] {
        self.heights.get_or_init(|| {
            let mut h = 0i64;
            self.steps()
                .map(|s| {
                    h += s as i64;
                    h
                })
                .collect()
        })
    }

    /// Height after `k` steps, with `height_at(0) == 0`.
    pub fn height_at(&self, k: usize) -> i64 {
        if k == 0 {
            0
        } else {
            self.heights()[k - 1]
        }
    }

    pub fn final_height(&self) -> i64 {
        self.height_at(self.len)
    }
}

impl Clone for LatticePath {
    fn clone(&self) -> Self {
        LatticePath::from_words(self.words.clone(), self.len)
    }
}

impl PartialEq for LatticePath {
    fn eq(&self, other: &Self) -> bool {
        self.len == other.len && self.words == other.words
    }
}

impl Eq for LatticePath {}

impl Hash for LatticePath {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.len.hash(state);
        self.words.hash(state);
    }
}

/// Lexicographic on steps with `-` before `+`; a proper prefix sorts first.
impl Ord for LatticePath {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.words.iter().zip(&other.words) {
            let diff = a ^ b;
            if diff != 0 {
                let pos = diff.trailing_zeros();
                return if (a >> pos) & 1 == 1 { Ordering::Greater } else { Ordering::Less };
            }
        }
        self.len.cmp(&other.len)
    }
}

impl PartialOrd for LatticePath {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for LatticePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.is_up(i) { "+" } else { "-" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for LatticePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LatticePath({self})")
    }
}

/// Endpoint level for bridges and first-passage walks: `⌊λ√n⌋`, bumped by one
/// when its parity differs from that of `n`.
pub fn lambda_n(lambda: f64, n: usize) -> i64 {
    let base = (lambda * (n as f64).sqrt()).floor() as i64;
    if (base - n as i64).rem_euclid(2) == 0 {
        base
    } else {
        base + 1
    }
}

/// Binomial coefficient as an exact big integer; zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Number of walks of length `len` that stay strictly positive at steps `1..=len`.
pub fn positive_walk_count(len: usize) -> BigUint {
    if len == 0 {
        return BigUint::one();
    }
    let m = (len - 1) as u64;
    binomial(m, m / 2)
}

/// Number of walks of length `len` ending at `-depth` and staying strictly
/// above `-depth` beforehand (`depth >= 1`).
pub fn first_passage_count(len: usize, depth: u64) -> BigUint {
    let n = len as u64;
    if depth == 0 || depth > n || (n - depth) % 2 != 0 {
        return BigUint::zero();
    }
    binomial(n, (n - depth) / 2) * depth / n
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PatternKind {
    Excursion,
    Positive,
    Bridge,
    FirstPassage,
    Custom,
}

impl PatternKind {
    pub fn name(self) -> &'static str {
        match self {
            PatternKind::Excursion => "excursion",
            PatternKind::Positive => "positive",
            PatternKind::Bridge => "bridge",
            PatternKind::FirstPassage => "fp",
            PatternKind::Custom => "custom",
        }
    }
}

/// A family of length-`n` patterns.
#[derive(Clone, Debug, PartialEq)]
pub enum PatternClass {
    /// Strictly positive on the interior, back at 0 at the end. Even length.
    Excursion { len: usize },
    /// Strictly positive after time 0. Odd length.
    Positive { len: usize },
    /// Ends at `lambda_n(level, len)`.
    Bridge { level: f64, len: usize },
    /// Ends at `lambda_n(level, len) < 0`, strictly above it before the end.
    FirstPassage { level: f64, len: usize },
    /// Explicit, sorted, duplicate-free set of equal-length paths.
    Custom { len: usize, paths: Vec<LatticePath> },
}

impl PatternClass {
    pub fn excursion(len: usize) -> Result<Self> {
        let c = PatternClass::Excursion { len };
        c.validate()?;
        Ok(c)
    }

    pub fn positive(len: usize) -> Result<Self> {
        let c = PatternClass::Positive { len };
        c.validate()?;
        Ok(c)
    }

    pub fn bridge(level: f64, len: usize) -> Result<Self> {
        let c = PatternClass::Bridge { level, len };
        c.validate()?;
        Ok(c)
    }

    pub fn first_passage(level: f64, len: usize) -> Result<Self> {
        let c = PatternClass::FirstPassage { level, len };
        c.validate()?;
        Ok(c)
    }

    /// Sorts and validates an explicit pattern set.
    pub fn custom(mut paths: Vec<LatticePath>) -> Result<Self> {
        let len = paths.first().map(LatticePath::len).ok_or_else(|| Error::param("empty pattern set"))?;
        paths.sort();
        let c = PatternClass::Custom { len, paths };
        c.validate()?;
        Ok(c)
    }

    pub fn kind(&self) -> PatternKind {
        match self {
            PatternClass::Excursion { .. } => PatternKind::Excursion,
            PatternClass::Positive { .. } => PatternKind::Positive,
            PatternClass::Bridge { .. } => PatternKind::Bridge,
            PatternClass::FirstPassage { .. } => PatternKind::FirstPassage,
            PatternClass::Custom { .. } => PatternKind::Custom,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            PatternClass::Excursion { len }
            | PatternClass::Positive { len }
            | PatternClass::Bridge { len, .. }
            | PatternClass::FirstPassage { len, .. }
            | PatternClass::Custom { len, .. } => *len,
        }
    }

    pub fn level(&self) -> Option<f64> {
        match self {
            PatternClass::Bridge { level, .. } | PatternClass::FirstPassage { level, .. } => Some(*level),
            _ => None,
        }
    }

    /// The integer endpoint for bridges and first-passage walks.
    pub fn endpoint(&self) -> Option<i64> {
        self.level().map(|l| lambda_n(l, self.len()))
    }

    /// Same family at a different length (built-in classes only).
    pub fn with_len(&self, len: usize) -> Result<Self> {
        let c = match self {
            PatternClass::Excursion { .. } => PatternClass::Excursion { len },
            PatternClass::Positive { .. } => PatternClass::Positive { len },
            PatternClass::Bridge { level, .. } => PatternClass::Bridge { level: *level, len },
            PatternClass::FirstPassage { level, .. } => PatternClass::FirstPassage { level: *level, len },
            PatternClass::Custom { .. } => {
                return Err(Error::param("custom classes have a fixed length"));
            }
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if n == 0 {
            return Err(Error::param("pattern length must be positive"));
        }
        match self {
            PatternClass::Excursion { len } if len % 2 != 0 => {
                Err(Error::param(format!("excursion length must be even, got {len}")))
            }
            PatternClass::Positive { len } if len % 2 == 0 => {
                Err(Error::param(format!("positive-walk length must be odd, got {len}")))
            }
            PatternClass::Bridge { level, .. } => {
                if !level.is_finite() {
                    return Err(Error::param("bridge level must be finite"));
                }
                let end = lambda_n(*level, n);
                if end.unsigned_abs() > n as u64 {
                    return Err(Error::param(format!("bridge endpoint {end} unreachable in {n} steps")));
                }
                Ok(())
            }
            PatternClass::FirstPassage { level, .. } => {
                if !(level.is_finite() && *level < 0.0) {
                    return Err(Error::param(format!("first-passage level must be negative, got {level}")));
                }
                let end = lambda_n(*level, n);
                if end >= 0 {
                    return Err(Error::param(format!(
                        "first-passage endpoint λ_n = {end} is not negative at n = {n}"
                    )));
                }
                if end.unsigned_abs() > n as u64 {
                    return Err(Error::param(format!("endpoint {end} unreachable in {n} steps")));
                }
                Ok(())
            }
            PatternClass::Custom { len, paths } => {
                if paths.is_empty() {
                    return Err(Error::param("empty pattern set"));
                }
                for p in paths {
                    if p.len() != *len {
                        return Err(Error::LengthMismatch { expected: *len, actual: p.len() });
                    }
                }
                if paths.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::param("custom paths must be sorted and distinct"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Short label used in reports, e.g. `fp(-1)` or `excursion`.
    pub fn label(&self) -> String {
        match self {
            PatternClass::Bridge { level, .. } => format!("bridge({level})"),
            PatternClass::FirstPassage { level, .. } => format!("fp({level})"),
            other => other.kind().name().to_string(),
        }
    }
}

/// Class membership test.
pub fn is_member(path: &LatticePath, class: &PatternClass) -> Result<bool> {
    let n = class.len();
    if path.len() != n {
        return Err(Error::LengthMismatch { expected: n, actual: path.len() });
    }
    let h = path.heights();
    Ok(match class {
        PatternClass::Excursion { .. } => h[n - 1] == 0 && h[..n - 1].iter().all(|&x| x > 0),
        PatternClass::Positive { .. } => h.iter().all(|&x| x > 0),
        PatternClass::Bridge { .. } => h[n - 1] == class.endpoint().unwrap_or_default(),
        PatternClass::FirstPassage { .. } => {
            let end = class.endpoint().unwrap_or_default();
            end < 0 && h[n - 1] == end && h[..n - 1].iter().all(|&x| x > end)
        }
        PatternClass::Custom { paths, .. } => paths.binary_search(path).is_ok(),
    })
}

/// Closed-form class size.
pub fn count_class(class: &PatternClass) -> Result<BigUint> {
    class.validate()?;
    let n = class.len() as u64;
    Ok(match class {
        PatternClass::Excursion { .. } => {
            let half = n / 2;
            binomial(2 * half - 2, half - 1) / half
        }
        PatternClass::Positive { .. } => positive_walk_count(n as usize),
        PatternClass::Bridge { .. } => {
            let end = class.endpoint().unwrap_or_default();
            binomial(n, ((n as i64 + end) / 2) as u64)
        }
        PatternClass::FirstPassage { .. } => {
            let depth = class.endpoint().unwrap_or_default().unsigned_abs();
            first_passage_count(n as usize, depth)
        }
        PatternClass::Custom { paths, .. } => BigUint::from(paths.len()),
    })
}

/// A named, sorted, duplicate-free set of equal-length patterns.
#[derive(Clone, Debug, PartialEq)]
pub struct PatternCollection {
    class: PatternClass,
    paths: Vec<LatticePath>,
}

impl PatternCollection {
    pub fn class(&self) -> &PatternClass {
        &self.class
    }

    pub fn paths(&self) -> &[LatticePath] {
        &self.paths
    }

    pub fn n(&self) -> usize {
        self.class.len()
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn label(&self) -> String {
        self.class.label()
    }

    /// Collection made of explicit paths.
    pub fn custom(paths: Vec<LatticePath>) -> Result<Self> {
        let class = PatternClass::custom(paths)?;
        enumerate_class(&class)
    }

    /// Parse the pattern file format: one `+`/`-` line per pattern, `#`
    /// comments and blank lines ignored, all lines of equal length.
    pub fn parse_pattern_file(text: &str) -> Result<Self> {
        let mut paths = Vec::new();
        let mut seen = HashSet::new();
        let mut len = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let path = LatticePath::parse(line)
                .map_err(|e| Error::PatternFormat { line: line_no, reason: e.to_string() })?;
            match len {
                None => len = Some(path.len()),
                Some(l) if l != path.len() => {
                    return Err(Error::PatternFormat {
                        line: line_no,
                        reason: format!("unequal lengths: expected {l}, got {}", path.len()),
                    })
                }
                _ => {}
            }
            if !seen.insert(path.clone()) {
                return Err(Error::PatternFormat { line: line_no, reason: format!("duplicate pattern {line}") });
            }
            paths.push(path);
        }
        if paths.is_empty() {
            return Err(Error::PatternFormat { line: 0, reason: "no patterns found".into() });
        }
        Self::custom(paths)
    }

    /// Render in the pattern file format.
    pub fn to_pattern_file(&self) -> String {
        let mut out = format!("# {} n={} count={}\n", self.label(), self.n(), self.len());
        for p in &self.paths {
            out.push_str(&p.to_string());
            out.push('\n');
        }
        out
    }
}

/// Enumerate a class in lexicographic order (`-` before `+`).
pub fn enumerate_class(class: &PatternClass) -> Result<PatternCollection> {
    class.validate()?;
    if let PatternClass::Custom { paths, .. } = class {
        return Ok(PatternCollection { class: class.clone(), paths: paths.clone() });
    }
    let count = count_class(class)?;
    if count > BigUint::from(ENUMERATION_CAP) {
        return Err(Error::CapExceeded {
            what: "class size",
            size: count.to_string(),
            cap: ENUMERATION_CAP.to_string(),
        });
    }
    let expected = count.to_usize().unwrap_or(0);
    let mut walker = Enumerator::new(class);
    let mut out = Vec::with_capacity(expected);
    walker.descend(0, 0, &mut out);
    debug_assert_eq!(out.len(), expected);
    Ok(PatternCollection { class: class.clone(), paths: out })
}

struct Enumerator {
    kind: PatternKind,
    n: usize,
    end: i64,
    ups: Vec<bool>,
}

impl Enumerator {
    fn new(class: &PatternClass) -> Self {
        let n = class.len();
        Enumerator { kind: class.kind(), n, end: class.endpoint().unwrap_or(0), ups: Vec::with_capacity(n) }
    }

    /// Can a walk at height `h` after `i` steps still become a member?
    fn viable(&self, i: usize, h: i64) -> bool {
        let rem = (self.n - i) as i64;
        match self.kind {
            PatternKind::Excursion => {
                if i == self.n {
                    h == 0
                } else {
                    h > 0 && h <= rem
                }
            }
            PatternKind::Positive => h > 0,
            PatternKind::Bridge => (self.end - h).abs() <= rem,
            PatternKind::FirstPassage => {
                if i == self.n {
                    h == self.end
                } else {
                    h > self.end && h - self.end <= rem
                }
            }
            PatternKind::Custom => unreachable!(),
        }
    }

    fn descend(&mut self, i: usize, h: i64, out: &mut Vec<LatticePath>) {
        if i == self.n {
            out.push(LatticePath::from_ups(&self.ups));
            return;
        }
        for (up, dh) in [(false, -1i64), (true, 1)] {
            let nh = h + dh;
            if self.viable(i + 1, nh) {
                self.ups.push(up);
                self.descend(i + 1, nh, out);
                self.ups.pop();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> LatticePath {
        LatticePath::parse(s).unwrap()
    }

    fn all_walks(n: usize) -> impl Iterator<Item = LatticePath> {
        (0..1u64 << n).map(move |b| LatticePath::from_bits(b, n))
    }

    #[test]
    fn lambda_n_examples() {
        assert_eq!(lambda_n(-1.0, 100), -10);
        assert_eq!(lambda_n(-1.0, 200), -14);
        assert_eq!(lambda_n(0.0, 6), 0);
        assert_eq!(lambda_n(0.0, 7), 1);
        assert_eq!(lambda_n(-1.0, 3), -1);
    }

    #[test]
    fn lambda_n_parity_and_distance() {
        for n in 1..300usize {
            for &l in &[-2.5, -1.0, -0.3, 0.0, 0.7, 1.9] {
                let v = lambda_n(l, n);
                assert_eq!((v - n as i64).rem_euclid(2), 0);
                assert!((v as f64 - l * (n as f64).sqrt()).abs() < 2.0);
            }
        }
    }

    #[test]
    fn heights_are_prefix_sums() {
        let w = p("++-+--");
        assert_eq!(w.heights(), &[1, 2, 1, 2, 1, 0]);
        assert_eq!(w.height_at(0), 0);
        assert_eq!(w.final_height(), 0);
        assert!(LatticePath::from_steps(&[1, 0]).is_err());
    }

    #[test]
    fn membership_examples() {
        let e4 = PatternClass::excursion(4).unwrap();
        assert!(is_member(&p("++--"), &e4).unwrap());
        assert!(!is_member(&p("+-+-"), &e4).unwrap());
        let fp = PatternClass::first_passage(-1.0, 3).unwrap();
        let members: Vec<_> = all_walks(3).filter(|w| is_member(w, &fp).unwrap()).collect();
        assert_eq!(members, vec![p("+--")]);
        assert!(is_member(&p("++"), &e4).is_err());
    }

    #[test]
    fn enumerate_examples() {
        let e4 = enumerate_class(&PatternClass::excursion(4).unwrap()).unwrap();
        assert_eq!(e4.paths(), &[p("++--")]);
        let m3 = enumerate_class(&PatternClass::positive(3).unwrap()).unwrap();
        assert_eq!(m3.paths(), &[p("++-"), p("+++")]);
        let e6 = enumerate_class(&PatternClass::excursion(6).unwrap()).unwrap();
        assert_eq!(e6.len(), 2);
    }

    #[test]
    fn count_examples() {
        assert_eq!(count_class(&PatternClass::excursion(4).unwrap()).unwrap(), BigUint::from(1u32));
        assert_eq!(count_class(&PatternClass::positive(3).unwrap()).unwrap(), BigUint::from(2u32));
        assert_eq!(count_class(&PatternClass::first_passage(-1.0, 3).unwrap()).unwrap(), BigUint::from(1u32));
    }

    #[test]
    fn invalid_classes_rejected() {
        assert!(PatternClass::excursion(5).is_err());
        assert!(PatternClass::positive(4).is_err());
        assert!(PatternClass::first_passage(1.0, 9).is_err());
        assert!(PatternClass::first_passage(-0.01, 4).is_err());
        assert!(PatternClass::bridge(5.0, 4).is_err());
    }

    fn builtin_classes(n: usize) -> Vec<PatternClass> {
        let mut v = Vec::new();
        if n % 2 == 0 {
            v.push(PatternClass::Excursion { len: n });
        } else {
            v.push(PatternClass::Positive { len: n });
        }
        for l in [0.0, 0.5, -1.0] {
            v.push(PatternClass::Bridge { level: l, len: n });
        }
        for l in [-1.0, -2.0] {
            v.push(PatternClass::FirstPassage { level: l, len: n });
        }
        v.into_iter().filter(|c| c.validate().is_ok()).collect()
    }

    #[test]
    fn enumeration_matches_exhaustive_scan() {
        for n in 1..=12 {
            for class in builtin_classes(n) {
                let coll = enumerate_class(&class).unwrap();
                let brute: Vec<_> = {
                    let mut v: Vec<_> = all_walks(n).filter(|w| is_member(w, &class).unwrap()).collect();
                    v.sort();
                    v
                };
                assert_eq!(coll.paths(), brute.as_slice(), "{class:?}");
            }
        }
    }

    #[test]
    fn counts_match_enumeration_up_to_16() {
        for n in 1..=16 {
            for class in builtin_classes(n) {
                let coll = enumerate_class(&class).unwrap();
                assert_eq!(count_class(&class).unwrap(), BigUint::from(coll.len()), "{class:?}");
                assert!(coll.paths().windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn catalan_asymptotic_at_50() {
        let half = 50u64;
        let k = count_class(&PatternClass::excursion(100).unwrap()).unwrap();
        let ratio = k.to_f64().unwrap() * 4.0 * std::f64::consts::PI.sqrt() * (half as f64).powf(1.5)
            / 2f64.powi(100);
        assert!((ratio - 1.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn enumeration_cap() {
        let big = PatternClass::bridge(0.0, 40).unwrap();
        assert!(matches!(enumerate_class(&big), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn ordering_minus_before_plus() {
        assert!(p("-+") < p("+-"));
        assert!(p("--") < p("-+"));
        let long_a = LatticePath::parse(&"-".repeat(70)).unwrap();
        let mut s = "-".repeat(69);
        s.push('+');
        let long_b = LatticePath::parse(&s).unwrap();
        assert!(long_a < long_b);
        assert_eq!(long_b.to_string(), s);
    }

    #[test]
    fn pattern_file_parsing() {
        let c = PatternCollection::parse_pattern_file("++\n+-\n").unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.n(), 2);
        assert!(PatternCollection::parse_pattern_file("++\n+++\n").is_err());
        assert!(PatternCollection::parse_pattern_file("++\n++\n").is_err());
        assert!(PatternCollection::parse_pattern_file("+x\n").is_err());
        assert!(PatternCollection::parse_pattern_file("# nothing\n\n").is_err());
        let c = PatternCollection::parse_pattern_file("# c\n\n-+\n").unwrap();
        assert_eq!(c.paths(), &[p("-+")]);
    }

    #[test]
    fn bit_chunk_across_words() {
        let s: String = (0..130).map(|i| if i % 3 == 0 { '+' } else { '-' }).collect();
        let w = p(&s);
        for start in [0, 5, 60, 63, 64, 100] {
            let count = 30.min(130 - start);
            let chunk = w.bit_chunk(start, count);
            for j in 0..count {
                assert_eq!((chunk >> j) & 1 == 1, w.is_up(start + j));
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn pattern_file_round_trip(bits in proptest::collection::btree_set(0u64..256, 1..20)) {
            let paths: Vec<_> = bits.iter().map(|&b| LatticePath::from_bits(b, 8)).collect();
            let c = PatternCollection::custom(paths).unwrap();
            let back = PatternCollection::parse_pattern_file(&c.to_pattern_file()).unwrap();
            proptest::prop_assert_eq!(back, c);
        }
    }
}
