//! Generating functions for limit cycles.
//!
//! A [`CyclePolynomial`] is a formal sum `Σ a_m·C_m` where `a_m` counts the
//! limit cycles of length `m`. Running two systems side by side multiplies
//! their polynomials under `C_s·C_t = gcd(s,t)·C_lcm(s,t)`.
//!
//! This module also holds the topology-only predictions built on that
//! product: exact structures of strongly connected networks, the disjoint
//! union of components, the regular-cycle lower bound, the admissible-cycle
//! upper bound, the exact fixed-point count and the height bounds.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::ser::{Serialize, SerializeMap, Serializer};
use thiserror::Error;

use crate::graph::{CondensationPoset, GraphError, DEFAULT_ANTICHAIN_CAP};

/// Largest poset the admissible-cycle sum is evaluated on.
pub const DEFAULT_UPPER_BOUND_CAP: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("{m} does not divide the loop number {c}")]
    NotADivisor { m: u64, c: u64 },
    #[error("cycle length and loop number must be positive")]
    NonPositive,
    #[error("loop number 0: component is trivial")]
    TrivialComponent,
    #[error("{got} component structures for a poset of size {expected}")]
    StructureCount { expected: usize, got: usize },
    #[error("upper bound needs at most {cap} components, got {t}")]
    UpperBoundCap { t: usize, cap: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("internal error: {0} produced a negative coefficient")]
    NegativeCoefficient(&'static str),
    #[error("cannot parse cycle polynomial: {0}")]
    Parse(String),
}

/// `Σ a_m·C_m` with arbitrary-precision signed coefficients; zero terms are
/// never stored.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct CyclePolynomial {
    terms: BTreeMap<u64, BigInt>,
}

impl CyclePolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `1·C_1`, the multiplicative identity.
    pub fn one() -> Self {
        Self::term(1, 1)
    }

    pub fn term(length: u64, coefficient: impl Into<BigInt>) -> Self {
        let mut p = Self::zero();
        p.add_term(length, coefficient.into());
        p
    }

    pub fn from_terms<I, C>(terms: I) -> Self
    where
        I: IntoIterator<Item = (u64, C)>,
        C: Into<BigInt>,
    {
        let mut p = Self::zero();
        for (m, c) in terms {
            p.add_term(m, c.into());
        }
        p
    }

    pub fn add_term(&mut self, length: u64, coefficient: BigInt) {
        assert!(length > 0, "cycle lengths are positive");
        if coefficient.is_zero() {
            return;
        }
        let entry = self.terms.entry(length).or_default();
        *entry += coefficient;
        if entry.is_zero() {
            self.terms.remove(&length);
        }
    }

    pub fn coefficient(&self, length: u64) -> BigInt {
        self.terms.get(&length).cloned().unwrap_or_default()
    }

    /// `(length, coefficient)` pairs in increasing length.
    pub fn terms(&self) -> impl Iterator<Item = (u64, &BigInt)> {
        self.terms.iter().map(|(&m, c)| (m, c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.terms.values().all(|c| c.sign() != Sign::Minus)
    }

    /// Coefficient-wise `self <= other`.
    pub fn dominated_by(&self, other: &CyclePolynomial) -> bool {
        self.terms
            .keys()
            .chain(other.terms.keys())
            .all(|&m| self.coefficient(m) <= other.coefficient(m))
    }

    pub fn scale(&self, factor: &BigInt) -> CyclePolynomial {
        CyclePolynomial::from_terms(self.terms.iter().map(|(&m, c)| (m, c * factor)))
    }

    /// Number of cycles, `Σ a_m`.
    pub fn total_cycles(&self) -> BigInt {
        self.terms.values().sum()
    }

    /// Number of periodic points, `Σ m·a_m`.
    pub fn periodic_points(&self) -> BigInt {
        self.terms.iter().map(|(&m, c)| c * BigInt::from(m)).sum()
    }

    /// lcm of the lengths present (1 for the zero polynomial).
    pub fn period(&self) -> u64 {
        self.terms.keys().fold(1u64, |acc, &m| acc.lcm(&m))
    }

    pub fn max_length(&self) -> Option<u64> {
        self.terms.keys().next_back().copied()
    }
}

impl Add for &CyclePolynomial {
    type Output = CyclePolynomial;

    fn add(self, rhs: &CyclePolynomial) -> CyclePolynomial {
        let mut out = self.clone();
        for (&m, c) in &rhs.terms {
            out.add_term(m, c.clone());
        }
        out
    }
}

impl Sub for &CyclePolynomial {
    type Output = CyclePolynomial;

    fn sub(self, rhs: &CyclePolynomial) -> CyclePolynomial {
        let mut out = self.clone();
        for (&m, c) in &rhs.terms {
            out.add_term(m, -c);
        }
        out
    }
}

impl Neg for &CyclePolynomial {
    type Output = CyclePolynomial;

    fn neg(self) -> CyclePolynomial {
        CyclePolynomial::from_terms(self.terms.iter().map(|(&m, c)| (m, -c)))
    }
}

impl Mul for &CyclePolynomial {
    type Output = CyclePolynomial;

    fn mul(self, rhs: &CyclePolynomial) -> CyclePolynomial {
        cp_mul(self, rhs)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr for CyclePolynomial {
            type Output = CyclePolynomial;

            fn $method(self, rhs: CyclePolynomial) -> CyclePolynomial {
                (&self).$method(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// Bilinear product with `C_s·C_t = gcd(s,t)·C_lcm(s,t)`.
pub fn cp_mul(a: &CyclePolynomial, b: &CyclePolynomial) -> CyclePolynomial {
    let mut out = CyclePolynomial::zero();
    for (&s, x) in &a.terms {
        for (&t, y) in &b.terms {
            let (g, l) = (s.gcd(&t), s.lcm(&t));
            out.add_term(l, x * y * BigInt::from(g));
        }
    }
    out
}

impl fmt::Display for CyclePolynomial {
    /// `a1*C1 + a2*C2 + ...`, increasing length; `0` when empty.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            match (i, c.is_negative()) {
                (0, false) => write!(f, "{c}*C{m}")?,
                (0, true) => write!(f, "-{}*C{m}", c.abs())?,
                (_, false) => write!(f, " + {c}*C{m}")?,
                (_, true) => write!(f, " - {}*C{m}", c.abs())?,
            }
        }
        Ok(())
    }
}

impl FromStr for CyclePolynomial {
    type Err = AlgebraError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact == "0" {
            return Ok(CyclePolynomial::zero());
        }
        if compact.is_empty() {
            return Err(AlgebraError::Parse("empty input".into()));
        }
        let mut out = CyclePolynomial::zero();
        let mut rest = compact.as_str();
        while !rest.is_empty() {
            let (negative, body) = match rest.as_bytes()[0] {
                b'+' => (false, &rest[1..]),
                b'-' => (true, &rest[1..]),
                _ => (false, rest),
            };
            let end = body[1.min(body.len())..]
                .find(['+', '-'])
                .map_or(body.len(), |p| p + 1);
            let (term, tail) = body.split_at(end);
            let (coeff, length) = match term.split_once('C') {
                Some(("", len)) => (BigInt::one(), len),
                Some((c, len)) => {
                    let c = c.strip_suffix('*').unwrap_or(c);
                    let c: BigInt = c
                        .parse()
                        .map_err(|_| AlgebraError::Parse(format!("bad coefficient `{c}`")))?;
                    (c, len)
                }
                None => {
                    return Err(AlgebraError::Parse(format!(
                        "term `{term}` has no C<length>"
                    )))
                }
            };
            let length: u64 = length
                .parse()
                .ok()
                .filter(|&m| m > 0)
                .ok_or_else(|| AlgebraError::Parse(format!("bad cycle length `{length}`")))?;
            out.add_term(length, if negative { -coeff } else { coeff });
            rest = tail;
        }
        Ok(out)
    }
}

impl Serialize for CyclePolynomial {
    /// `{"<length>": count}`; counts beyond 64 bits become decimal strings.
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.terms.len()))?;
        for (m, c) in &self.terms {
            let key = m.to_string();
            match c.to_i64() {
                Some(v) => map.serialize_entry(&key, &v)?,
                None => map.serialize_entry(&key, &c.to_string())?,
            }
        }
        map.end()
    }
}

/// `|A(m)|`: the number of periodic points of exact period `m` in a
/// strongly connected conjunctive network with loop number `c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodicPointCount {
    pub m: u64,
    pub count: BigUint,
}

/// Distinct prime factors with multiplicity, by trial division.
pub fn factorize(mut m: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= m {
        if m.is_multiple_of(p) {
            let mut k = 0;
            while m.is_multiple_of(p) {
                m /= p;
                k += 1;
            }
            out.push((p, k));
        }
        p += 1;
    }
    if m > 1 {
        out.push((m, 1));
    }
    out
}

pub fn divisors(c: u64) -> Vec<u64> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1u64;
    while d * d <= c {
        if c.is_multiple_of(d) {
            small.push(d);
            if d * d != c {
                large.push(c / d);
            }
        }
        d += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

/// Inclusion-exclusion over the prime divisors of `m`:
/// `|A(m)| = Σ_{S ⊆ primes(m)} (-1)^|S| 2^(m / Π S)`.
pub fn count_periodic(m: u64, c: u64) -> Result<PeriodicPointCount, AlgebraError> {
    if m == 0 || c == 0 {
        return Err(AlgebraError::NonPositive);
    }
    if !c.is_multiple_of(m) {
        return Err(AlgebraError::NotADivisor { m, c });
    }
    let primes: Vec<u64> = factorize(m).into_iter().map(|(p, _)| p).collect();
    let mut total = BigInt::zero();
    for subset in 0u32..(1 << primes.len()) {
        let divisor: u64 = primes
            .iter()
            .enumerate()
            .filter(|(i, _)| subset >> i & 1 == 1)
            .map(|(_, &p)| p)
            .product();
        let term = BigInt::one() << (m / divisor) as usize;
        if subset.count_ones() % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    }
    let count = total.to_biguint().expect("|A(m)| is non-negative");
    debug_assert!((&count % m).is_zero());
    Ok(PeriodicPointCount { m, count })
}

/// Exact cycle structure of a strongly connected conjunctive network with
/// loop number `c`: `Σ_{m | c} (|A(m)| / m)·C_m`.
pub fn scc_cycle_structure(c: u64) -> Result<CyclePolynomial, AlgebraError> {
    if c == 0 {
        return Err(AlgebraError::TrivialComponent);
    }
    let mut out = CyclePolynomial::zero();
    for m in divisors(c) {
        let a = count_periodic(m, c)?.count;
        let (q, r) = a.div_rem(&BigUint::from(m));
        debug_assert!(r.is_zero());
        out.add_term(m, BigInt::from(q));
    }
    Ok(out)
}

/// Cycle structure of the system running every component independently.
pub fn disjoint_union_structure(structures: &[CyclePolynomial]) -> CyclePolynomial {
    structures
        .iter()
        .fold(CyclePolynomial::one(), |acc, s| cp_mul(&acc, s))
}

/// Limits on the exponential sums below.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundCaps {
    pub antichain_components: usize,
    pub upper_bound_components: usize,
}

impl Default for BoundCaps {
    fn default() -> Self {
        BoundCaps {
            antichain_components: DEFAULT_ANTICHAIN_CAP,
            upper_bound_components: DEFAULT_UPPER_BOUND_CAP,
        }
    }
}

type Mask = u64;

fn mask_of(set: &[usize]) -> Mask {
    set.iter().fold(0, |m, &i| m | (1 << i))
}

/// Signed weight of every intersection `∩𝒥` over non-empty `𝒥 ⊆ Ω`:
/// `w(S) = Σ_{∅≠𝒥, ∩𝒥 = S} (-1)^(|𝒥|+1)`.
fn antichain_intersection_weights(
    poset: &CondensationPoset,
    cap: usize,
) -> Result<BTreeMap<Mask, i64>, AlgebraError> {
    let omega = poset.maximal_antichains(cap)?;
    let mut weights: HashMap<Mask, i64> = HashMap::new();
    for antichain in &omega {
        let a = mask_of(antichain);
        let snapshot: Vec<(Mask, i64)> = weights.iter().map(|(&s, &w)| (s, w)).collect();
        for (s, w) in snapshot {
            *weights.entry(s & a).or_default() -= w;
        }
        *weights.entry(a).or_default() += 1;
    }
    Ok(weights.into_iter().filter(|&(_, w)| w != 0).collect())
}

/// `Π_{k ∈ set} C(h_k)` with memoisation; the empty product is `1·C_1`.
struct ProductCache<'a> {
    structures: &'a [CyclePolynomial],
    memo: HashMap<Mask, CyclePolynomial>,
}

impl<'a> ProductCache<'a> {
    fn new(structures: &'a [CyclePolynomial]) -> Self {
        let mut memo = HashMap::new();
        memo.insert(0, CyclePolynomial::one());
        ProductCache { structures, memo }
    }

    fn get(&mut self, set: Mask) -> CyclePolynomial {
        if let Some(p) = self.memo.get(&set) {
            return p.clone();
        }
        let low = set.trailing_zeros() as usize;
        let rest = self.get(set & (set - 1));
        let p = cp_mul(&rest, &self.structures[low]);
        self.memo.insert(set, p.clone());
        p
    }
}

fn check_inputs(
    poset: &CondensationPoset,
    structures: &[CyclePolynomial],
) -> Result<(), AlgebraError> {
    if structures.len() != poset.size() {
        return Err(AlgebraError::StructureCount {
            expected: poset.size(),
            got: structures.len(),
        });
    }
    if structures.iter().any(CyclePolynomial::is_zero) {
        return Err(AlgebraError::TrivialComponent);
    }
    Ok(())
}

/// Cycle structure of the regular limit cycles,
/// `ℒ = Σ_{∅≠𝒥⊆Ω} (-1)^(|𝒥|+1) Π_{j ∈ ∩𝒥} C(h_j)`.
pub fn lower_bound(
    poset: &CondensationPoset,
    structures: &[CyclePolynomial],
) -> Result<CyclePolynomial, AlgebraError> {
    lower_bound_with(poset, structures, BoundCaps::default())
}

pub fn lower_bound_with(
    poset: &CondensationPoset,
    structures: &[CyclePolynomial],
    caps: BoundCaps,
) -> Result<CyclePolynomial, AlgebraError> {
    check_inputs(poset, structures)?;
    let weights = antichain_intersection_weights(poset, caps.antichain_components)?;
    let mut products = ProductCache::new(structures);
    let mut out = CyclePolynomial::zero();
    for (set, w) in weights {
        out = &out + &products.get(set).scale(&BigInt::from(w));
    }
    if !out.is_nonnegative() {
        return Err(AlgebraError::NegativeCoefficient("lower bound"));
    }
    Ok(out)
}

/// Exact number of fixed points, `Σ_{∅≠𝒥⊆Ω} (-1)^(|𝒥|+1) 2^|∩𝒥|`.
pub fn fixed_point_count(poset: &CondensationPoset) -> Result<BigUint, AlgebraError> {
    fixed_point_count_with(poset, BoundCaps::default())
}

pub fn fixed_point_count_with(
    poset: &CondensationPoset,
    caps: BoundCaps,
) -> Result<BigUint, AlgebraError> {
    let weights = antichain_intersection_weights(poset, caps.antichain_components)?;
    let total: BigInt = weights
        .into_iter()
        .map(|(set, w)| BigInt::from(w) << set.count_ones() as usize)
        .sum();
    total
        .to_biguint()
        .ok_or(AlgebraError::NegativeCoefficient("fixed-point count"))
}

/// Cycle structure of the admissible limit cycles,
/// `𝒰 = Σ_{I⊆N⊆[t], J⊆M⊆[t]} (-1)^(|N|+|M|+|I|+|J|) φ(I^⪰ ∪ N, J^⪯ ∪ M)`
/// with `φ(K, L) = 0` when `K ∩ L ≠ ∅` and `Π_{k ∉ K∪L} C(h_k)` otherwise.
///
/// The `9^t` terms are folded in two passes: first the signed multiplicity
/// of each `K = I^⪰ ∪ N` and each `L = J^⪯ ∪ M` (`3^t` pairs each), then a
/// sum over disjoint `(K, L)` keyed by the complement of `K ∪ L`.
pub fn upper_bound(
    poset: &CondensationPoset,
    structures: &[CyclePolynomial],
) -> Result<CyclePolynomial, AlgebraError> {
    upper_bound_with(poset, structures, BoundCaps::default())
}

pub fn upper_bound_with(
    poset: &CondensationPoset,
    structures: &[CyclePolynomial],
    caps: BoundCaps,
) -> Result<CyclePolynomial, AlgebraError> {
    check_inputs(poset, structures)?;
    let t = poset.size();
    if t > caps.upper_bound_components || t > 30 {
        return Err(AlgebraError::UpperBoundCap {
            t,
            cap: caps.upper_bound_components.min(30),
        });
    }
    let full: Mask = (1 << t) - 1;
    let below_one: Vec<Mask> = (0..t)
        .map(|i| {
            (0..t)
                .filter(|&k| poset.leq(k, i))
                .fold(0, |m, k| m | 1 << k)
        })
        .collect();
    let above_one: Vec<Mask> = (0..t)
        .map(|i| {
            (0..t)
                .filter(|&k| poset.leq(i, k))
                .fold(0, |m, k| m | 1 << k)
        })
        .collect();

    let zero_sets = closure_multiplicities(t, &below_one);
    let one_sets = closure_multiplicities(t, &above_one);

    let mut by_free: HashMap<Mask, i64> = HashMap::new();
    for (k, &wk) in zero_sets.iter().enumerate() {
        if wk == 0 {
            continue;
        }
        let k = k as Mask;
        let room = full & !k;
        let mut l = room;
        loop {
            let wl = one_sets[l as usize];
            if wl != 0 {
                *by_free.entry(full & !(k | l)).or_default() += wk * wl;
            }
            if l == 0 {
                break;
            }
            l = (l - 1) & room;
        }
    }

    let mut products = ProductCache::new(structures);
    let mut free: Vec<(Mask, i64)> = by_free.into_iter().filter(|&(_, w)| w != 0).collect();
    free.sort_unstable();
    let mut out = CyclePolynomial::zero();
    for (set, w) in free {
        out = &out + &products.get(set).scale(&BigInt::from(w));
    }
    if !out.is_nonnegative() {
        return Err(AlgebraError::NegativeCoefficient("upper bound"));
    }
    Ok(out)
}

/// `w[K] = Σ_{I⊆N⊆[t], N ∪ closure(I) = K} (-1)^(|N|+|I|)` where
/// `closure(I)` is the union of `single[i]` over `i ∈ I`.
fn closure_multiplicities(t: usize, single: &[Mask]) -> Vec<i64> {
    let size = 1usize << t;
    let mut closure = vec![0 as Mask; size];
    for s in 1..size {
        let low = s.trailing_zeros() as usize;
        closure[s] = closure[s & (s - 1)] | single[low];
    }
    let mut w = vec![0i64; size];
    for n in 0..size {
        let mut i = n;
        loop {
            let sign = if (n.count_ones() + i.count_ones()) % 2 == 0 {
                1
            } else {
                -1
            };
            w[n | closure[i] as usize] += sign;
            if i == 0 {
                break;
            }
            i = (i - 1) & n;
        }
    }
    w
}

/// Upper bound on the height (transient length) of a conjunctive network.
///
/// Strongly connected with loop number `c`: `(n-1)^2 + 1` when `c = 1`,
/// otherwise `⌊max{n-1, (n^2-1)/2 + n^2/c - 3n + 2c}⌋`. Any network:
/// `2n^2 - 3n + 2`.
pub fn height_upper_bound(n: u64, c: u64, strongly_connected: bool) -> u64 {
    let n128 = n as i128;
    if !strongly_connected {
        return (2 * n128 * n128 - 3 * n128 + 2) as u64;
    }
    if c <= 1 {
        let d = n128 - 1;
        return (d * d + 1) as u64;
    }
    let c128 = c as i128;
    // (n^2-1)/2 + n^2/c - 3n + 2c over the common denominator 2c
    let numerator = c128 * (n128 * n128 - 1) + 2 * n128 * n128 - 6 * n128 * c128 + 4 * c128 * c128;
    let value = numerator.div_euclid(2 * c128);
    value.max(n128 - 1).max(0) as u64
}
