//! Exact counts for the four matching families.
//!
//! A rectangular ℓ-matching is an injection `σ: I ↪ {1..m}` with
//! `I ⊆ {1..n}` and `|I| = ℓ`; a fixed point is a pair `(i, i)`. Permutations
//! (`ℓ = n = m`), injections (`ℓ = n`) and partial ℓ-matchings (`m = n`) are
//! the special cases. Every count is an arbitrary-precision [`Count`].

use std::collections::HashMap;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul};
use std::str::FromStr;
use std::sync::{LazyLock, RwLock};

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// A nonnegative cardinality of arbitrary size.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Count(BigUint);

impl Count {
    pub fn zero() -> Self {
        Count(BigUint::zero())
    }

    pub fn one() -> Self {
        Count(BigUint::one())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn as_biguint(&self) -> &BigUint {
        &self.0
    }

    pub fn into_biguint(self) -> BigUint {
        self.0
    }

    pub fn to_u64(&self) -> Option<u64> {
        self.0.to_u64()
    }

    /// Narrows a signed accumulator. Alternating sums in this module are
    /// nonnegative counts once complete; a negative value is a bug.
    fn from_signed(acc: BigInt) -> Self {
        match acc.sign() {
            Sign::Minus => panic!("alternating sum ended negative: {acc}"),
            _ => Count(acc.magnitude().clone()),
        }
    }
}

impl From<BigUint> for Count {
    fn from(v: BigUint) -> Self {
        Count(v)
    }
}

impl From<u64> for Count {
    fn from(v: u64) -> Self {
        Count(BigUint::from(v))
    }
}

impl From<usize> for Count {
    fn from(v: usize) -> Self {
        Count(BigUint::from(v))
    }
}

impl From<u32> for Count {
    fn from(v: u32) -> Self {
        Count(BigUint::from(v))
    }
}

impl PartialEq<u64> for Count {
    fn eq(&self, other: &u64) -> bool {
        self.0 == BigUint::from(*other)
    }
}

impl fmt::Display for Count {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl FromStr for Count {
    type Err = num_bigint::ParseBigIntError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        BigUint::from_str(s).map(Count)
    }
}

impl Add for Count {
    type Output = Count;
    fn add(self, rhs: Count) -> Count {
        Count(self.0 + rhs.0)
    }
}

impl<'a> Add<&'a Count> for &'a Count {
    type Output = Count;
    fn add(self, rhs: &Count) -> Count {
        Count(&self.0 + &rhs.0)
    }
}

impl AddAssign<&Count> for Count {
    fn add_assign(&mut self, rhs: &Count) {
        self.0 += &rhs.0;
    }
}

impl Mul for Count {
    type Output = Count;
    fn mul(self, rhs: Count) -> Count {
        Count(self.0 * rhs.0)
    }
}

impl<'a> Mul<&'a Count> for &'a Count {
    type Output = Count;
    fn mul(self, rhs: &Count) -> Count {
        Count(&self.0 * &rhs.0)
    }
}

impl Sum for Count {
    fn sum<I: Iterator<Item = Count>>(iter: I) -> Count {
        Count(iter.map(|c| c.0).sum())
    }
}

impl<'a> Sum<&'a Count> for Count {
    fn sum<I: Iterator<Item = &'a Count>>(iter: I) -> Count {
        iter.fold(Count::zero(), |mut acc, c| {
            acc += c;
            acc
        })
    }
}

/// The triple `(n, m, ℓ)`: `n` people, `m` hats, `ℓ` of the people matched.
///
/// Always satisfies `ℓ ≤ n ≤ m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MatchShape {
    n: usize,
    m: usize,
    l: usize,
}

impl MatchShape {
    pub fn new(n: usize, m: usize, l: usize) -> Result<Self> {
        let reason = if n > m {
            "requires n <= m"
        } else if l > n {
            "requires l <= n"
        } else {
            return Ok(MatchShape { n, m, l });
        };
        Err(Error::InvalidShape { n, m, l, reason })
    }

    /// Full permutations of `{1..n}`.
    pub fn permutation(n: usize) -> Self {
        MatchShape { n, m: n, l: n }
    }

    /// Injections `{1..n} ↪ {1..m}`.
    pub fn rectangular(n: usize, m: usize) -> Result<Self> {
        Self::new(n, m, n)
    }

    /// Partial ℓ-matchings of `{1..n}` into itself.
    pub fn partial(n: usize, l: usize) -> Result<Self> {
        Self::new(n, n, l)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn l(&self) -> usize {
        self.l
    }

    /// The shape left after pinning `k` diagonal pairs: `(n−k, m−k, ℓ−k)`.
    pub fn without_fixed(&self, k: usize) -> Result<Self> {
        if k > self.l {
            return Err(Error::domain(format!(
                "k = {k} fixed points exceeds l = {} for shape {self}",
                self.l
            )));
        }
        Ok(MatchShape {
            n: self.n - k,
            m: self.m - k,
            l: self.l - k,
        })
    }

    /// Every shape with `ℓ ≤ n ≤ m ≤ max_m`, ordered by `(m, n, ℓ)`.
    pub fn all_up_to(max_m: usize) -> impl Iterator<Item = MatchShape> {
        (0..=max_m)
            .flat_map(|m| (0..=m).flat_map(move |n| (0..=n).map(move |l| MatchShape { n, m, l })))
    }
}

impl fmt::Display for MatchShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.n, self.m, self.l)
    }
}

/// The four matching families; each pins some of the shape parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// `ℓ = n = m`
    Permutation,
    /// `ℓ = n`
    Rectangular,
    /// `m = n`
    Partial,
    Unified,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Permutation => "perm",
            Family::Rectangular => "rect",
            Family::Partial => "partial",
            Family::Unified => "unified",
        }
    }

    pub fn admits(&self, shape: MatchShape) -> bool {
        match self {
            Family::Permutation => shape.l == shape.n && shape.n == shape.m,
            Family::Rectangular => shape.l == shape.n,
            Family::Partial => shape.m == shape.n,
            Family::Unified => true,
        }
    }

    fn check(&self, shape: MatchShape) -> Result<()> {
        if self.admits(shape) {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "shape {shape} is not in the {} family",
                self.name()
            )))
        }
    }

    /// Size of the family at `shape`, through the family's own formula.
    pub fn total(&self, shape: MatchShape) -> Result<Count> {
        self.check(shape)?;
        Ok(match self {
            Family::Permutation => factorial(shape.n),
            Family::Rectangular => arrangements_count(shape.n, shape.m)?,
            Family::Partial => partial_count(shape.n, shape.l)?,
            Family::Unified => unified_count(shape),
        })
    }

    /// Fixed-point-free members of the family at `shape`.
    pub fn derangements(&self, shape: MatchShape) -> Result<Count> {
        self.check(shape)?;
        Ok(match self {
            Family::Permutation => derangements(shape.n),
            Family::Rectangular => rect_derangements(shape.n, shape.m)?,
            Family::Partial => partial_derangements(shape.n, shape.l)?,
            Family::Unified => unified_derangements(shape),
        })
    }

    /// Members with exactly `k` fixed points.
    pub fn rencontres(&self, shape: MatchShape, k: usize) -> Result<Count> {
        self.check(shape)?;
        match self {
            Family::Permutation => rencontres(shape.n, k),
            Family::Rectangular => rect_rencontres(shape.n, shape.m, k),
            Family::Partial => partial_rencontres(shape.n, shape.l, k),
            Family::Unified => unified_rencontres(shape, k),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "perm" | "permutation" => Ok(Family::Permutation),
            "rect" | "rectangular" => Ok(Family::Rectangular),
            "partial" => Ok(Family::Partial),
            "unified" => Ok(Family::Unified),
            other => Err(Error::domain(format!("unknown family {other:?}"))),
        }
    }
}

static FACTORIALS: LazyLock<RwLock<Vec<BigUint>>> =
    LazyLock::new(|| RwLock::new(vec![BigUint::one()]));

static DERANGEMENTS: LazyLock<RwLock<HashMap<usize, Count>>> =
    LazyLock::new(|| RwLock::new(HashMap::new()));

/// `n!`, served from a shared prefix table.
pub fn factorial(n: usize) -> Count {
    if let Some(v) = FACTORIALS.read().unwrap().get(n) {
        return Count(v.clone());
    }
    let mut table = FACTORIALS.write().unwrap();
    while table.len() <= n {
        let next = table.last().unwrap() * BigUint::from(table.len());
        table.push(next);
    }
    Count(table[n].clone())
}

/// `hi! / lo!` as the product `(lo+1)···hi`; 1 when `lo >= hi`.
fn falling(hi: usize, lo: usize) -> BigUint {
    (lo + 1..=hi).fold(BigUint::one(), |acc, x| acc * BigUint::from(x))
}

fn binom(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= BigUint::from(n - i);
        acc /= BigUint::from(i + 1);
    }
    acc
}

/// `C(n, k)`, zero outside `0 ≤ k ≤ n`.
pub fn binomial(n: usize, k: i64) -> Count {
    match usize::try_from(k) {
        Ok(k) => Count(binom(n, k)),
        Err(_) => Count::zero(),
    }
}

fn signed_add(acc: &mut BigInt, sign_index: usize, term: BigUint) {
    let term = BigInt::from(term);
    if sign_index.is_multiple_of(2) {
        *acc += term;
    } else {
        *acc -= term;
    }
}

/// The subfactorial `!n = Σ_{k=0..n} (−1)^k n!/k!`.
pub fn derangements(n: usize) -> Count {
    if let Some(v) = DERANGEMENTS.read().unwrap().get(&n) {
        return v.clone();
    }
    let mut acc = BigInt::zero();
    // term = n!/k!, walked from k = n down to k = 0
    let mut term = BigUint::one();
    for k in (0..=n).rev() {
        signed_add(&mut acc, k, term.clone());
        term *= BigUint::from(k.max(1));
    }
    let value = Count::from_signed(acc);
    DERANGEMENTS.write().unwrap().insert(n, value.clone());
    value
}

/// `!n` through `!n = (n−1)(!(n−1) + !(n−2))`, `!0 = 1`, `!1 = 0`.
pub fn derangements_via_pair_recurrence(n: usize) -> Count {
    let (mut prev, mut cur) = (BigUint::one(), BigUint::zero());
    if n == 0 {
        return Count(prev);
    }
    for i in 2..=n {
        let next = BigUint::from(i - 1) * (&cur + &prev);
        prev = cur;
        cur = next;
    }
    Count(cur)
}

/// `!n` through `!n = n·!(n−1) + (−1)^n`.
pub fn derangements_via_sign_recurrence(n: usize) -> Count {
    let mut cur = BigInt::one();
    for i in 1..=n {
        cur *= BigInt::from(i);
        if i % 2 == 0 {
            cur += 1;
        } else {
            cur -= 1;
        }
    }
    Count::from_signed(cur)
}

/// Permutations of `{1..n}` with exactly `k` fixed points: `C(n,k)·!(n−k)`.
pub fn rencontres(n: usize, k: usize) -> Result<Count> {
    if k > n {
        return Err(Error::domain(format!(
            "rencontres needs k <= n, got n={n}, k={k}"
        )));
    }
    Ok(Count(binom(n, k) * derangements(n - k).0))
}

fn require_n_le_m(n: usize, m: usize) -> Result<()> {
    if n > m {
        return Err(Error::InvalidShape {
            n,
            m,
            l: n,
            reason: "requires n <= m",
        });
    }
    Ok(())
}

/// Injections `{1..n} ↪ {1..m}`: `m!/(m−n)!`.
pub fn arrangements_count(n: usize, m: usize) -> Result<Count> {
    require_n_le_m(n, m)?;
    Ok(Count(falling(m, m - n)))
}

/// Fixed-point-free injections:
/// `Σ_{k=0..n} (−1)^k C(n,k) (m−k)!/(m−n)!`.
pub fn rect_derangements(n: usize, m: usize) -> Result<Count> {
    require_n_le_m(n, m)?;
    let mut acc = BigInt::zero();
    // tail = (m−k)!/(m−n)!, binomial = C(n,k); both walked from k = n down
    let mut tail = BigUint::one();
    let mut choose = BigUint::one();
    for k in (0..=n).rev() {
        signed_add(&mut acc, k, &choose * &tail);
        if k > 0 {
            tail *= BigUint::from(m - k + 1);
            choose = choose * BigUint::from(k) / BigUint::from(n - k + 1);
        }
    }
    Ok(Count::from_signed(acc))
}

/// Injections with exactly `k` fixed points: `C(n,k)·D(n−k, m−k)`.
pub fn rect_rencontres(n: usize, m: usize, k: usize) -> Result<Count> {
    require_n_le_m(n, m)?;
    if k > n {
        return Err(Error::domain(format!(
            "rect_rencontres needs k <= n, got n={n}, k={k}"
        )));
    }
    Ok(Count(binom(n, k) * rect_derangements(n - k, m - k)?.0))
}

fn require_l_le_n(n: usize, l: usize) -> Result<()> {
    if l > n {
        return Err(Error::InvalidShape {
            n,
            m: n,
            l,
            reason: "requires l <= n",
        });
    }
    Ok(())
}

/// Partial ℓ-matchings of `{1..n}`: `C(n,ℓ)²·ℓ!`.
pub fn partial_count(n: usize, l: usize) -> Result<Count> {
    require_l_le_n(n, l)?;
    let c = binom(n, l);
    Ok(Count(&c * &c * factorial(l).0))
}

/// Fixed-point-free ℓ-matchings:
/// `Σ_{j=0..ℓ} (−1)^j C(n,j) C(n−j,ℓ−j)² (ℓ−j)!`.
pub fn partial_derangements(n: usize, l: usize) -> Result<Count> {
    require_l_le_n(n, l)?;
    let mut acc = BigInt::zero();
    for j in 0..=l {
        let inner = binom(n - j, l - j);
        signed_add(
            &mut acc,
            j,
            binom(n, j) * &inner * &inner * factorial(l - j).0,
        );
    }
    Ok(Count::from_signed(acc))
}

/// ℓ-matchings with exactly `k` fixed points: `C(n,k)·PD(n−k, ℓ−k)`.
pub fn partial_rencontres(n: usize, l: usize, k: usize) -> Result<Count> {
    require_l_le_n(n, l)?;
    if k > l {
        return Err(Error::domain(format!(
            "partial_rencontres needs k <= l, got l={l}, k={k}"
        )));
    }
    Ok(Count(binom(n, k) * partial_derangements(n - k, l - k)?.0))
}

/// Rectangular ℓ-matchings: `C(n,ℓ)·C(m,ℓ)·ℓ!`.
pub fn unified_count(shape: MatchShape) -> Count {
    let MatchShape { n, m, l } = shape;
    Count(binom(n, l) * binom(m, l) * factorial(l).0)
}

/// Fixed-point-free rectangular ℓ-matchings:
/// `Σ_{j=0..ℓ} (−1)^j C(n,j) C(n−j,ℓ−j) C(m−j,ℓ−j) (ℓ−j)!`.
pub fn unified_derangements(shape: MatchShape) -> Count {
    let MatchShape { n, m, l } = shape;
    let mut acc = BigInt::zero();
    for j in 0..=l {
        signed_add(
            &mut acc,
            j,
            binom(n, j) * binom(n - j, l - j) * binom(m - j, l - j) * factorial(l - j).0,
        );
    }
    Count::from_signed(acc)
}

/// Rectangular ℓ-matchings with exactly `k` fixed points:
/// `C(n,k)` choices of the diagonal pairs times the fixed-point-free count of
/// the `(n−k, m−k, ℓ−k)` shape left over.
pub fn unified_rencontres(shape: MatchShape, k: usize) -> Result<Count> {
    let rest = shape.without_fixed(k)?;
    Ok(Count(binom(shape.n, k) * unified_derangements(rest).0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: u64) -> Count {
        Count::from(v)
    }

    #[test]
    fn factorial_small_and_wide() {
        assert_eq!(factorial(0), 1);
        assert_eq!(factorial(5), 120);
        assert!(factorial(25).as_biguint() > &(BigUint::one() << 64u32));
        // product from scratch, independent of the table
        let direct: BigUint = (1..=25u32).map(BigUint::from).product();
        assert_eq!(factorial(25).into_biguint(), direct);
    }

    #[test]
    fn binomial_edges() {
        for n in 0..8 {
            assert_eq!(binomial(n, 0), 1);
        }
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(3, -1), 0);
    }

    #[test]
    fn binomial_matches_pascal_triangle() {
        let mut row = vec![1u64];
        for n in 0..40usize {
            for (k, v) in row.iter().enumerate() {
                assert_eq!(binomial(n, k as i64), *v, "C({n},{k})");
            }
            let mut next = vec![1u64; n + 2];
            for k in 1..=n {
                next[k] = row[k - 1] + row[k];
            }
            row = next;
        }
    }

    #[test]
    fn derangement_initial_values() {
        assert_eq!(derangements(0), 1);
        assert_eq!(derangements(1), 0);
        assert_eq!(derangements(4), 9);
        assert_eq!(derangements(5), 44);
    }

    #[test]
    fn recurrences_small_values() {
        assert_eq!(derangements_via_pair_recurrence(2), 1);
        assert_eq!(derangements_via_pair_recurrence(3), 2);
        assert_eq!(derangements_via_pair_recurrence(10), derangements(10));
        assert_eq!(derangements_via_sign_recurrence(1), 0);
        assert_eq!(derangements_via_sign_recurrence(4), 9);
        assert_eq!(derangements_via_sign_recurrence(50), derangements(50));
    }

    #[test]
    fn rencontres_special_values() {
        for n in 0..15 {
            assert_eq!(rencontres(n, n).unwrap(), 1);
            if n >= 1 {
                assert_eq!(rencontres(n, n - 1).unwrap(), 0);
            }
        }
        assert_eq!(rencontres(4, 0).unwrap(), 9);
        assert!(rencontres(3, 4).is_err());
    }

    #[test]
    fn arrangements() {
        assert_eq!(arrangements_count(2, 3).unwrap(), 6);
        assert_eq!(arrangements_count(0, 7).unwrap(), 1);
        assert_eq!(arrangements_count(6, 6).unwrap(), factorial(6));
        assert!(arrangements_count(4, 3).is_err());
    }

    #[test]
    fn rectangular_values() {
        assert_eq!(rect_derangements(2, 3).unwrap(), 3);
        assert_eq!(rect_derangements(0, 5).unwrap(), 1);
        for n in 0..12 {
            assert_eq!(rect_derangements(n, n).unwrap(), derangements(n));
        }
        assert!(rect_derangements(3, 2).is_err());
        assert_eq!(rect_rencontres(2, 3, 0).unwrap(), 3);
        for m in 1..10 {
            for n in 1..=m {
                assert_eq!(rect_rencontres(n, m, n).unwrap(), 1);
                assert_eq!(
                    rect_rencontres(n, m, n - 1).unwrap(),
                    c((n * (m - n)) as u64)
                );
            }
        }
        assert!(rect_rencontres(2, 3, 3).is_err());
    }

    #[test]
    fn partial_values() {
        assert_eq!(partial_count(3, 2).unwrap(), 18);
        assert_eq!(partial_count(6, 0).unwrap(), 1);
        assert_eq!(partial_count(6, 6).unwrap(), factorial(6));
        assert_eq!(partial_derangements(3, 2).unwrap(), 9);
        assert_eq!(partial_derangements(2, 1).unwrap(), 2);
        for n in 0..12 {
            assert_eq!(partial_derangements(n, n).unwrap(), derangements(n));
        }
        assert_eq!(partial_rencontres(3, 2, 0).unwrap(), 9);
        assert!(partial_count(2, 3).is_err());
        assert!(partial_rencontres(4, 2, 3).is_err());
    }

    #[test]
    fn unified_values() {
        let fig = MatchShape::new(5, 7, 3).unwrap();
        assert_eq!(unified_count(fig), 2100);
        let small = MatchShape::new(2, 3, 1).unwrap();
        assert_eq!(unified_derangements(small), 4);
        assert_eq!(unified_rencontres(small, 0).unwrap(), 4);
        assert_eq!(unified_rencontres(small, 1).unwrap(), 2);
        assert_eq!(unified_count(MatchShape::new(4, 9, 0).unwrap()), 1);
        assert!(unified_rencontres(small, 2).is_err());
    }

    #[test]
    fn shape_validation() {
        assert!(MatchShape::new(3, 2, 1).is_err());
        assert!(MatchShape::new(2, 3, 3).is_err());
        assert!(MatchShape::new(0, 0, 0).is_ok());
        assert_eq!(MatchShape::all_up_to(2).count(), 1 + 3 + 6);
    }

    #[test]
    fn family_dispatch_rejects_foreign_shapes() {
        let s = MatchShape::new(2, 3, 1).unwrap();
        assert!(Family::Permutation.total(s).is_err());
        assert!(Family::Rectangular.total(s).is_err());
        assert!(Family::Partial.total(s).is_err());
        assert_eq!(Family::Unified.total(s).unwrap(), 6);
        assert_eq!("rect".parse::<Family>().unwrap(), Family::Rectangular);
    }

    #[test]
    fn memo_is_shared_across_threads() {
        let handles: Vec<_> = (0..8)
            .map(|t| std::thread::spawn(move || (derangements(60 + t), factorial(80 + t))))
            .collect();
        for (t, h) in handles.into_iter().enumerate() {
            let (d, f) = h.join().unwrap();
            assert_eq!(d, derangements_via_pair_recurrence(60 + t));
            let direct: BigUint = (1..=80 + t).map(BigUint::from).product();
            assert_eq!(f.into_biguint(), direct);
        }
    }
}
