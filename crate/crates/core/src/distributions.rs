//! Exact fixed-point laws and their Poisson limits.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::counting::{
    derangements, factorial, unified_count, unified_derangements, unified_rencontres, Count,
    Family, MatchShape,
};
use crate::error::{Error, Result};
use crate::real::{format_decimal, Real};

/// An exact probability in lowest terms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactProb(BigRational);

fn ratio(num: &Count, den: &Count) -> BigRational {
    BigRational::new(
        BigInt::from(num.as_biguint().clone()),
        BigInt::from(den.as_biguint().clone()),
    )
}

fn fact(n: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(factorial(n).into_biguint()))
}

impl ExactProb {
    /// `num / den`; fails unless `den > 0` and `num <= den`.
    pub fn new(num: &Count, den: &Count) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::domain("probability with zero denominator"));
        }
        Self::try_from_ratio(ratio(num, den))
    }

    pub fn try_from_ratio(r: BigRational) -> Result<Self> {
        if r.is_negative() || r > BigRational::one() {
            return Err(Error::domain(format!("{r} is not a probability")));
        }
        Ok(ExactProb(r))
    }

    pub fn zero() -> Self {
        ExactProb(BigRational::zero())
    }

    pub fn one() -> Self {
        ExactProb(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn to_real(&self) -> Real {
        Real::from_ratio(&self.0)
    }

    /// Decimal approximation with `digits` significant digits.
    pub fn to_decimal(&self, digits: usize) -> String {
        format_decimal(self.numer(), self.denom(), digits)
    }
}

/// Always `numerator/denominator`, including `0/1` and `1/1`.
impl fmt::Display for ExactProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl FromStr for ExactProb {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::domain(format!("cannot parse probability {s:?}"));
        let (n, d) = s.split_once('/').ok_or_else(bad)?;
        let n: BigInt = n.parse().map_err(|_| bad())?;
        let d: BigInt = d.parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        Self::try_from_ratio(BigRational::new(n, d))
    }
}

/// Exact law of the number of fixed points `K` of a uniform matching.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointPmf {
    shape: MatchShape,
    total: Count,
    counts: Vec<Count>,
    probs: Vec<ExactProb>,
}

impl FixedPointPmf {
    pub fn shape(&self) -> MatchShape {
        self.shape
    }

    /// Size of the matching set.
    pub fn total(&self) -> &Count {
        &self.total
    }

    /// Rencontres counts `N(k)` for `k = 0..=ℓ`.
    pub fn counts(&self) -> &[Count] {
        &self.counts
    }

    /// `P(K = k)` for `k = 0..=ℓ`.
    pub fn probs(&self) -> &[ExactProb] {
        &self.probs
    }

    pub fn mean(&self) -> BigRational {
        self.probs
            .iter()
            .enumerate()
            .map(|(k, p)| p.as_ratio() * BigRational::from_integer(BigInt::from(k)))
            .fold(BigRational::zero(), |a, b| a + b)
    }
}

/// `P(K = 0)`: fixed-point-free matchings over all matchings.
pub fn prob_no_fixed_point(shape: MatchShape) -> ExactProb {
    ExactProb::new(&unified_derangements(shape), &unified_count(shape))
        .expect("derangements never exceed the total")
}

/// Materializes `P(K = k) = N(k) / total` for every `k`.
///
/// Panics if the rencontres counts fail to add up to the total, which would
/// mean the counting formulas are broken.
pub fn fixed_point_pmf(shape: MatchShape) -> FixedPointPmf {
    let total = unified_count(shape);
    let counts: Vec<Count> = (0..=shape.l())
        .map(|k| unified_rencontres(shape, k).expect("k <= l"))
        .collect();
    let sum: Count = counts.iter().sum();
    assert_eq!(
        sum, total,
        "rencontres counts of {shape} do not partition the total"
    );
    let probs = counts
        .iter()
        .map(|c| ExactProb::new(c, &total).expect("N(k) <= total"))
        .collect();
    FixedPointPmf {
        shape,
        total,
        counts,
        probs,
    }
}

fn alternating(terms: impl Iterator<Item = (usize, BigRational)>) -> BigRational {
    terms.fold(BigRational::zero(), |acc, (j, t)| {
        if j % 2 == 0 {
            acc + t
        } else {
            acc - t
        }
    })
}

/// `P(K = k)` from the simplified per-family closed forms, evaluated in
/// rational arithmetic without going through the rencontres counts.
///
/// * permutation: `(1/k!) Σ_{j=0..n−k} (−1)^j/j!`
/// * rectangular: `(n!/m!)(1/k!) Σ_{j=0..n−k} (−1)^j/j! · (m−k−j)!/(n−k−j)!`
/// * partial: `(ℓ!/n!)(1/k!) Σ_{j=0..ℓ−k} (−1)^j/j! · (n−k−j)!/(ℓ−k−j)!`
///
/// No simplified form is provided for the unified family.
pub fn pmf_closed_form(family: Family, shape: MatchShape, k: usize) -> Result<ExactProb> {
    if !family.admits(shape) {
        return Err(Error::domain(format!(
            "shape {shape} is not in the {} family",
            family.name()
        )));
    }
    if k > shape.l() {
        return Err(Error::domain(format!(
            "k = {k} out of range 0..={} for shape {shape}",
            shape.l()
        )));
    }
    let (n, m, l) = (shape.n(), shape.m(), shape.l());
    let value = match family {
        Family::Permutation => alternating((0..=n - k).map(|j| (j, fact(j).recip()))) / fact(k),
        Family::Rectangular => {
            let sum = alternating(
                (0..=n - k).map(|j| (j, fact(m - k - j) / (fact(j) * fact(n - k - j)))),
            );
            fact(n) / fact(m) / fact(k) * sum
        }
        Family::Partial => {
            let sum = alternating(
                (0..=l - k).map(|j| (j, fact(n - k - j) / (fact(j) * fact(l - k - j)))),
            );
            fact(l) / fact(n) / fact(k) * sum
        }
        Family::Unified => {
            return Err(Error::domain(
                "no simplified closed form for the unified family; use fixed_point_pmf",
            ))
        }
    };
    ExactProb::try_from_ratio(value)
}

/// Rational enclosure `lower < e < upper` from `Σ_{k=0..terms} 1/k!`.
#[derive(Debug, Clone, PartialEq)]
pub struct EEnclosure {
    pub lower: BigRational,
    pub upper: BigRational,
    pub terms: usize,
}

/// Partial sum through `1/terms!`; the tail is below `(N+2)/((N+1)!(N+1))`.
pub fn e_enclosure(terms: usize) -> EEnclosure {
    let mut lower = BigRational::zero();
    let mut term = BigRational::one();
    for k in 0..=terms {
        if k > 0 {
            term /= BigRational::from_integer(BigInt::from(k));
        }
        lower += &term;
    }
    let next = (terms + 1) as i64;
    // term is now 1/terms!
    let tail = &term / BigRational::from_integer(BigInt::from(next))
        * BigRational::new(BigInt::from(next + 1), BigInt::from(next));
    let upper = &lower + tail;
    EEnclosure {
        lower,
        upper,
        terms,
    }
}

/// Evidence that `!n` is the integer nearest `n!/e`.
#[derive(Debug, Clone)]
pub struct NearestIntegerWitness {
    pub n: usize,
    pub derangements: Count,
    /// Certified enclosure `[lower, upper]` of `n!/e`.
    pub lower: BigRational,
    pub upper: BigRational,
    /// `1/(n+1)`, the alternating-series bound on `|!n − n!/e|`.
    pub tail_bound: BigRational,
    pub e_terms: usize,
    /// The enclosure lies within `tail_bound` of `!n`.
    pub within_tail_bound: bool,
    /// The enclosure lies strictly within `1/2` of `!n`.
    pub holds: bool,
}

fn adaptive<T>(
    start: usize,
    cap: usize,
    mut attempt: impl FnMut(&EEnclosure) -> Option<T>,
) -> (EEnclosure, Option<T>) {
    let mut terms = start;
    loop {
        let enc = e_enclosure(terms);
        if let Some(found) = attempt(&enc) {
            return (enc, Some(found));
        }
        if terms >= cap {
            return (enc, None);
        }
        terms = (terms * 2).min(cap);
    }
}

/// Certifies `!n = ⌊n!/e⌉` in rational interval arithmetic.
///
/// The e-enclosure is refined until the interval around `n!/e` sits inside
/// the rounding window of `!n`. `n = 0` is rejected: `0!/e` rounds to 0
/// while `!0 = 1`.
pub fn nearest_integer_identity(n: usize) -> Result<NearestIntegerWitness> {
    if n == 0 {
        return Err(Error::domain(
            "nearest-integer identity needs n >= 1 (0!/e rounds to 0, but !0 = 1)",
        ));
    }
    let d = BigRational::from_integer(BigInt::from(derangements(n).into_biguint()));
    let nf = fact(n);
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let tail_bound = BigRational::new(BigInt::one(), BigInt::from(n + 1));
    let inside = |lo: &BigRational, hi: &BigRational, radius: &BigRational| {
        lo >= &(&d - radius) && hi <= &(&d + radius)
    };
    let (enc, _) = adaptive(n + 4, 8 * n + 64, |enc| {
        let lo = &nf / &enc.upper;
        let hi = &nf / &enc.lower;
        (inside(&lo, &hi, &tail_bound) && lo > &d - &half && hi < &d + &half).then_some(())
    });
    let lower = &nf / &enc.upper;
    let upper = &nf / &enc.lower;
    Ok(NearestIntegerWitness {
        n,
        derangements: derangements(n),
        within_tail_bound: inside(&lower, &upper, &tail_bound),
        holds: lower > &d - &half && upper < &d + &half,
        lower,
        upper,
        tail_bound,
        e_terms: enc.terms,
    })
}

/// Evidence for `|P_n − 1/e| <= 1/(n+1)!` with `P_n` the permutation
/// no-fixed-point probability.
#[derive(Debug, Clone)]
pub struct LimitGapWitness {
    pub n: usize,
    pub probability: ExactProb,
    /// Largest `|P_n − x|` over the enclosure of `1/e`.
    pub worst_gap: BigRational,
    pub bound: BigRational,
    pub e_terms: usize,
    pub holds: bool,
}

pub fn certify_limit_gap(n: usize) -> LimitGapWitness {
    let p = prob_no_fixed_point(MatchShape::permutation(n));
    let bound = fact(n + 1).recip();
    let gap = |enc: &EEnclosure| {
        let a = (p.as_ratio() - enc.upper.recip()).abs();
        let b = (p.as_ratio() - enc.lower.recip()).abs();
        a.max(b)
    };
    let (enc, _) = adaptive(n + 4, 8 * n + 64, |enc| (gap(enc) <= bound).then_some(()));
    let worst_gap = gap(&enc);
    LimitGapWitness {
        n,
        holds: worst_gap <= bound,
        probability: p,
        worst_gap,
        bound,
        e_terms: enc.terms,
    }
}

/// A Poisson law with an exact rational rate.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonLimit {
    rate: BigRational,
}

impl PoissonLimit {
    pub fn new(rate: BigRational) -> Result<Self> {
        if rate.is_negative() {
            return Err(Error::domain(format!("negative Poisson rate {rate}")));
        }
        Ok(PoissonLimit { rate })
    }

    pub fn rate(&self) -> &BigRational {
        &self.rate
    }

    pub fn pmf(&self, k: usize) -> Real {
        poisson_pmf(&self.rate, k)
    }
}

/// Limiting rate `λ = ℓ/m` of the fixed-point count.
///
/// This is the exact mean of `K` for every shape; it equals 1 for
/// permutations, `n/m` for injections and `ℓ/n` for partial matchings.
pub fn poisson_rate(shape: MatchShape) -> Result<PoissonLimit> {
    if shape.m() == 0 {
        return Err(Error::domain("Poisson rate undefined for m = 0"));
    }
    PoissonLimit::new(BigRational::new(
        BigInt::from(shape.l()),
        BigInt::from(shape.m()),
    ))
}

/// `e^{−λ} λ^k / k!` to [`crate::real::PRECISION_BITS`] bits.
///
/// Panics on a negative rate.
pub fn poisson_pmf(rate: &BigRational, k: usize) -> Real {
    assert!(!rate.is_negative(), "negative Poisson rate {rate}");
    let weight = num_traits::pow(rate.clone(), k) / fact(k);
    let decay = Real::from_ratio(&-rate.clone()).exp();
    &Real::from_ratio(&weight) * &decay
}

/// `½ Σ_k |p_k − q_k|` over finitely supported sequences (missing entries
/// count as zero).
pub fn total_variation(p: &[Real], q: &[Real]) -> Real {
    let zero = Real::zero();
    let len = p.len().max(q.len());
    let sum: Real = (0..len)
        .map(|k| (p.get(k).unwrap_or(&zero) - q.get(k).unwrap_or(&zero)).abs())
        .sum();
    &sum * &Real::from_ratio(&BigRational::new(BigInt::one(), BigInt::from(2)))
}

/// Total variation between an exact PMF and a Poisson law; the Poisson mass
/// beyond the PMF's support enters as one lump `1 − Σ_{k≤ℓ} q_k`.
pub fn tv_distance(pmf: &FixedPointPmf, limit: &PoissonLimit) -> Real {
    let p: Vec<Real> = pmf.probs().iter().map(ExactProb::to_real).collect();
    let q: Vec<Real> = (0..p.len()).map(|k| limit.pmf(k)).collect();
    let head: Real = q.iter().cloned().sum();
    let tail = &Real::one() - &head;
    let within = total_variation(&p, &q);
    let half_tail = &tail * &Real::from_ratio(&BigRational::new(BigInt::one(), BigInt::from(2)));
    &within + &half_tail
}

/// Total variation between the fixed-point law of `shape` and
/// Poisson(`ℓ/m`).
pub fn tv_distance_to_poisson(shape: MatchShape) -> Result<Real> {
    let limit = poisson_rate(shape)?;
    Ok(tv_distance(&fixed_point_pmf(shape), &limit))
}
