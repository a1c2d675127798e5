//! Integer partitions, symmetric-group characters and permutation helpers.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::shannon_bits;

/// Largest `n` for which factorials and class sizes fit in `u64`.
pub const MAX_N: usize = 20;

pub fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Young diagram `λ ⊢ n` with weakly decreasing positive rows.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Partition {
    parts: Vec<usize>,
}

impl Partition {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Parameter("a partition needs at least one row".into()));
        }
        if parts.contains(&0) {
            return Err(Error::Parameter(format!("partition {parts:?} has a zero row")));
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Parameter(format!("partition {parts:?} is not weakly decreasing")));
        }
        Ok(Partition { parts })
    }

    /// Sorts and drops zero entries.
    pub fn from_unsorted(mut parts: Vec<usize>) -> Result<Self> {
        parts.retain(|&x| x > 0);
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Self::new(parts)
    }

    /// The one-row diagram `(n)`.
    pub fn trivial(n: usize) -> Self {
        Partition { parts: vec![n] }
    }

    /// The one-column diagram `(1^n)`.
    pub fn sign(n: usize) -> Self {
        Partition { parts: vec![1; n] }
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn n(&self) -> usize {
        self.parts.iter().sum()
    }

    pub fn rows(&self) -> usize {
        self.parts.len()
    }

    /// Row `i` (0-based), zero past the last row.
    pub fn row(&self, i: usize) -> usize {
        self.parts.get(i).copied().unwrap_or(0)
    }

    /// Rows divided by `n`.
    pub fn normalized(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.parts.iter().map(|&x| x as f64 / n).collect()
    }

    pub fn conjugate(&self) -> Partition {
        let parts = (1..=self.parts[0]).map(|c| self.parts.iter().filter(|&&r| r >= c).count()).collect();
        Partition { parts }
    }
}

impl TryFrom<Vec<usize>> for Partition {
    type Error = Error;
    fn try_from(parts: Vec<usize>) -> Result<Self> {
        Partition::new(parts)
    }
}

impl From<Partition> for Vec<usize> {
    fn from(p: Partition) -> Self {
        p.parts
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self.parts.iter().map(usize::to_string).collect();
        write!(f, "({})", rows.join(","))
    }
}

impl FromStr for Partition {
    type Err = Error;

    /// Accepts `"2,1,1"` or `"(2,1,1)"`.
    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
        let mut parts = Vec::new();
        let mut pos = s.find(inner).unwrap_or(0);
        for item in inner.split(',') {
            let v = item.trim().parse().map_err(|_| Error::Parse { pos, msg: format!("invalid row `{}`", item.trim()) })?;
            parts.push(v);
            pos += item.len() + 1;
        }
        Partition::new(parts).map_err(|e| Error::Parse { pos: 0, msg: e.to_string() })
    }
}

/// Conjugacy class of `S_n`, labelled by its cycle lengths.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CycleType {
    parts: Vec<usize>,
    class_size: u64,
}

impl CycleType {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        let p = Partition::from_unsorted(parts)?;
        if p.n() > MAX_N {
            return Err(Error::Parameter(format!("n = {} exceeds {MAX_N}", p.n())));
        }
        let mut denom: u64 = 1;
        let mut i = 0;
        let parts = p.parts;
        while i < parts.len() {
            let j = parts[i];
            let m = parts[i..].iter().take_while(|&&x| x == j).count();
            denom *= (j as u64).pow(m as u32) * factorial(m);
            i += m;
        }
        let class_size = factorial(parts.iter().sum()) / denom;
        Ok(CycleType { parts, class_size })
    }

    pub fn identity(n: usize) -> Self {
        CycleType::new(vec![1; n]).expect("identity class")
    }

    /// Cycle type of a permutation in one-line notation.
    pub fn of(perm: &[usize]) -> Self {
        let mut seen = vec![false; perm.len()];
        let mut parts = Vec::new();
        for start in 0..perm.len() {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = perm[i];
                len += 1;
            }
            parts.push(len);
        }
        CycleType::new(parts).expect("permutation cycle type")
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn n(&self) -> usize {
        self.parts.iter().sum()
    }

    pub fn class_size(&self) -> u64 {
        self.class_size
    }

    /// `(-1)^{n - #cycles}`.
    pub fn sign(&self) -> i64 {
        if (self.n() - self.parts.len()) % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// All classes of `S_n`, in the order of [`enumerate_partitions`].
    pub fn all(n: usize) -> Vec<CycleType> {
        enumerate_partitions(n, n).into_iter().map(|p| CycleType::new(p.parts).expect("valid class")).collect()
    }
}

/// All `λ ⊢ n` with at most `max_rows` rows, reverse-lexicographic.
pub fn enumerate_partitions(n: usize, max_rows: usize) -> Vec<Partition> {
    fn rec(rest: usize, cap: usize, rows_left: usize, cur: &mut Vec<usize>, out: &mut Vec<Partition>) {
        if rest == 0 {
            out.push(Partition { parts: cur.clone() });
            return;
        }
        if rows_left == 0 {
            return;
        }
        for first in (1..=rest.min(cap)).rev() {
            cur.push(first);
            rec(rest - first, first, rows_left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        rec(n, n, max_rows, &mut Vec::new(), &mut out);
    }
    out
}

type CharKey = (Vec<usize>, Vec<usize>);

fn char_cache() -> &'static RwLock<HashMap<CharKey, i64>> {
    static CACHE: OnceLock<RwLock<HashMap<CharKey, i64>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// `χ_λ(c)` by Murnaghan–Nakayama on beta-sets, memoized.
pub fn character(lambda: &Partition, c: &CycleType) -> Result<i64> {
    if lambda.n() != c.n() {
        return Err(Error::SizeMismatch { left: lambda.n(), right: c.n() });
    }
    Ok(mn(&lambda.parts, &c.parts))
}

fn mn(lambda: &[usize], mu: &[usize]) -> i64 {
    if mu.is_empty() {
        return 1;
    }
    let key = (lambda.to_vec(), mu.to_vec());
    if let Some(&v) = char_cache().read().expect("character cache").get(&key) {
        return v;
    }
    let r = mu[0];
    let rest = &mu[1..];
    let len = lambda.len();
    let beads: Vec<usize> = lambda.iter().enumerate().map(|(i, &x)| x + len - 1 - i).collect();
    let mut total = 0;
    for (i, &b) in beads.iter().enumerate() {
        if b < r || beads.contains(&(b - r)) {
            continue;
        }
        let target = b - r;
        let between = beads.iter().filter(|&&x| x > target && x < b).count();
        let mut moved = beads.clone();
        moved[i] = target;
        moved.sort_unstable_by(|a, b| b.cmp(a));
        let shape: Vec<usize> = moved.iter().enumerate().map(|(j, &x)| x + j + 1 - len).filter(|&x| x > 0).collect();
        let sign = if between % 2 == 0 { 1 } else { -1 };
        total += sign * mn(&shape, rest);
    }
    char_cache().write().expect("character cache").insert(key, total);
    total
}

/// `dim [λ]` by the hook-length formula.
pub fn irrep_dimension(lambda: &Partition) -> u64 {
    let conj = lambda.conjugate();
    let mut num: u128 = (1..=lambda.n() as u128).product();
    let mut hooks: u128 = 1;
    for (i, &row) in lambda.parts.iter().enumerate() {
        for j in 0..row {
            hooks *= (row - j + conj.parts[j] - i - 1) as u128;
        }
    }
    num /= hooks;
    num as u64
}

/// Shannon entropy in bits of the normalized rows.
pub fn diagram_entropy(lambda: &Partition) -> f64 {
    shannon_bits(&lambda.normalized())
}

/// `ν₁ ≤ Σ_i min(λ_i, μ_i)`, a necessary condition for the Kronecker
/// coefficient `g_{λμν}` to be nonzero.
pub fn row_bound_check(nu: &Partition, mu: &Partition, lambda: &Partition) -> Result<bool> {
    if nu.n() != mu.n() || mu.n() != lambda.n() {
        return Err(Error::SizeMismatch { left: nu.n(), right: if nu.n() != mu.n() { mu.n() } else { lambda.n() } });
    }
    let overlap: usize = mu.parts.iter().zip(&lambda.parts).map(|(&a, &b)| a.min(b)).sum();
    Ok(nu.parts[0] <= overlap)
}

/// Lexicographic iterator over permutations of `0..n` in one-line notation.
pub struct Permutations {
    next: Option<Vec<usize>>,
}

impl Permutations {
    pub fn new(n: usize) -> Self {
        Permutations { next: Some((0..n).collect()) }
    }
}

impl Iterator for Permutations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let cur = self.next.take()?;
        let mut p = cur.clone();
        if let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) {
            let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).expect("successor exists");
            p.swap(i - 1, j);
            p[i..].reverse();
            self.next = Some(p);
        }
        Some(cur)
    }
}

/// `(-1)^{inversions}`.
pub fn permutation_sign(perm: &[usize]) -> i64 {
    CycleType::of(perm).sign()
}

pub fn permutation_inverse(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

/// `a ∘ b`, i.e. `i ↦ a[b[i]]`.
pub fn permutation_compose(a: &[usize], b: &[usize]) -> Vec<usize> {
    b.iter().map(|&i| a[i]).collect()
}
