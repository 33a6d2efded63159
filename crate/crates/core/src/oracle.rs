//! Brute-force ground truth: explicit enumeration of rectangular ℓ-matchings
//! and a literal inclusion–exclusion sieve over explicit sets.
//!
//! Nothing here uses the closed forms from [`crate::counting`] except to size
//! the enumeration budget.

use std::thread;

use crate::counting::{unified_count, Count, Family, MatchShape};
use crate::error::{Error, Result};

/// Default cap on the number of matchings a single enumeration may visit.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Most events [`sieve_union_count`] accepts (`2^20` subset terms).
pub const MAX_SIEVE_EVENTS: usize = 20;

/// One rectangular ℓ-matching, as `(person, hat)` pairs sorted by person.
/// Indices are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PartialInjection {
    pairs: Vec<(usize, usize)>,
}

impl PartialInjection {
    /// Validates strictly increasing persons and pairwise distinct hats.
    pub fn new(pairs: Vec<(usize, usize)>) -> Result<Self> {
        if pairs.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::domain("person indices must be strictly increasing"));
        }
        let mut hats: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        hats.sort_unstable();
        if hats.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::domain("hat indices must be pairwise distinct"));
        }
        if pairs.iter().any(|&(i, j)| i == 0 || j == 0) {
            return Err(Error::domain("indices are 1-based"));
        }
        Ok(PartialInjection { pairs })
    }

    pub(crate) fn from_sorted(pairs: Vec<(usize, usize)>) -> Self {
        debug_assert!(PartialInjection::new(pairs.clone()).is_ok());
        PartialInjection { pairs }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Number of diagonal pairs `(i, i)`.
    pub fn fixed_points(&self) -> usize {
        self.pairs.iter().filter(|(i, j)| i == j).count()
    }

    /// True when every person lies in `1..=n` and every hat in `1..=m`.
    pub fn fits(&self, shape: MatchShape) -> bool {
        self.pairs.len() == shape.l()
            && self
                .pairs
                .iter()
                .all(|&(i, j)| i <= shape.n() && j <= shape.m())
    }
}

fn check_budget(shape: MatchShape, budget: u64) -> Result<()> {
    let requested = unified_count(shape);
    match requested.to_u64() {
        Some(c) if c <= budget => Ok(()),
        _ => Err(Error::BudgetExceeded { requested, budget }),
    }
}

/// Advances `comb` (strictly increasing values in `1..=n`) to the next
/// combination in lexicographic order.
fn next_combination(comb: &mut [usize], n: usize) -> bool {
    let k = comb.len();
    for i in (0..k).rev() {
        if comb[i] < n - (k - 1 - i) {
            comb[i] += 1;
            for j in i + 1..k {
                comb[j] = comb[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Advances `seq` (distinct values in `1..=m`) to the next arrangement in
/// lexicographic order. `used[v]` tracks membership.
fn next_arrangement(seq: &mut [usize], used: &mut [bool], m: usize) -> bool {
    let k = seq.len();
    for i in (0..k).rev() {
        used[seq[i]] = false;
        if let Some(v) = (seq[i] + 1..=m).find(|&v| !used[v]) {
            seq[i] = v;
            used[v] = true;
            let mut next = 1;
            for slot in seq.iter_mut().skip(i + 1) {
                while used[next] {
                    next += 1;
                }
                *slot = next;
                used[next] = true;
            }
            return true;
        }
    }
    false
}

/// Lexicographic stream over every rectangular ℓ-matching of a shape: domain
/// subsets in lexicographic order, and for each one the image tuples in
/// lexicographic order.
#[derive(Debug)]
pub struct Matchings {
    shape: MatchShape,
    domain: Vec<usize>,
    image: Vec<usize>,
    used: Vec<bool>,
    started: bool,
    done: bool,
}

impl Matchings {
    fn new(shape: MatchShape) -> Self {
        let l = shape.l();
        let mut used = vec![false; shape.m() + 1];
        used[1..=l].fill(true);
        Matchings {
            shape,
            domain: (1..=l).collect(),
            image: (1..=l).collect(),
            used,
            started: false,
            done: false,
        }
    }

    fn advance(&mut self) -> bool {
        if next_arrangement(&mut self.image, &mut self.used, self.shape.m()) {
            return true;
        }
        if !next_combination(&mut self.domain, self.shape.n()) {
            return false;
        }
        // next_arrangement left `used` cleared; restart at the first tuple
        for (slot, v) in self.image.iter_mut().zip(1..) {
            *slot = v;
            self.used[v] = true;
        }
        true
    }
}

impl Iterator for Matchings {
    type Item = PartialInjection;

    fn next(&mut self) -> Option<PartialInjection> {
        if self.done {
            return None;
        }
        if self.started && !self.advance() {
            self.done = true;
            return None;
        }
        self.started = true;
        let pairs = self
            .domain
            .iter()
            .copied()
            .zip(self.image.iter().copied())
            .collect();
        Some(PartialInjection::from_sorted(pairs))
    }
}

/// Every element of the matching set of `shape`, each exactly once.
///
/// Fails with [`Error::BudgetExceeded`] when the set is larger than `budget`.
pub fn enumerate_matchings(shape: MatchShape, budget: u64) -> Result<Matchings> {
    check_budget(shape, budget)?;
    Ok(Matchings::new(shape))
}

/// Census over the image tuples of one fixed domain.
fn census_for_domain(domain: &[usize], m: usize, census: &mut [u64]) {
    let l = domain.len();
    let mut image: Vec<usize> = (1..=l).collect();
    let mut used = vec![false; m + 1];
    for &v in &image {
        used[v] = true;
    }
    loop {
        let k = domain.iter().zip(&image).filter(|(i, j)| i == j).count();
        census[k] += 1;
        if !next_arrangement(&mut image, &mut used, m) {
            break;
        }
    }
}

fn all_domains(n: usize, l: usize) -> Vec<Vec<usize>> {
    let mut comb: Vec<usize> = (1..=l).collect();
    let mut out = vec![comb.clone()];
    while next_combination(&mut comb, n) {
        out.push(comb.clone());
    }
    out
}

/// `census[k]` = number of matchings with exactly `k` diagonal pairs.
pub fn fixed_point_census(shape: MatchShape, budget: u64) -> Result<Vec<Count>> {
    fixed_point_census_parallel(shape, budget, 1)
}

/// As [`fixed_point_census`], splitting the domain subsets across `workers`
/// threads. The result does not depend on `workers`.
pub fn fixed_point_census_parallel(
    shape: MatchShape,
    budget: u64,
    workers: usize,
) -> Result<Vec<Count>> {
    check_budget(shape, budget)?;
    let width = shape.l() + 1;
    let domains = all_domains(shape.n(), shape.l());
    let workers = workers.clamp(1, domains.len());
    let chunk = domains.len().div_ceil(workers);
    let partials: Vec<Vec<u64>> = thread::scope(|s| {
        let handles: Vec<_> = domains
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    let mut census = vec![0u64; width];
                    for d in part {
                        census_for_domain(d, shape.m(), &mut census);
                    }
                    census
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    Ok((0..width)
        .map(|k| Count::from(partials.iter().map(|p| p[k]).sum::<u64>()))
        .collect())
}

/// A finite family of explicit subsets of `{0, …, universe−1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventFamily {
    universe: usize,
    events: Vec<Vec<usize>>,
}

impl EventFamily {
    pub fn new(universe: usize, events: Vec<Vec<usize>>) -> Result<Self> {
        if universe == 0 {
            return Err(Error::domain("event universe must be nonempty"));
        }
        for (event, members) in events.iter().enumerate() {
            if let Some(&member) = members.iter().find(|&&x| x >= universe) {
                return Err(Error::MemberOutsideUniverse {
                    event,
                    member,
                    universe,
                });
            }
        }
        Ok(EventFamily { universe, events })
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn events(&self) -> &[Vec<usize>] {
        &self.events
    }

    fn bitsets(&self) -> Vec<Vec<u64>> {
        let words = self.universe.div_ceil(64);
        self.events
            .iter()
            .map(|ev| {
                let mut bits = vec![0u64; words];
                for &x in ev {
                    bits[x / 64] |= 1 << (x % 64);
                }
                bits
            })
            .collect()
    }
}

/// The events `A_i = {σ : σ(i) = i}` over the permutations of `{1..n}`, the
/// universe indexed by the lexicographic enumeration of those permutations.
pub fn hat_event_family(n: usize) -> Result<EventFamily> {
    let perms = enumerate_matchings(MatchShape::permutation(n), DEFAULT_BUDGET)?;
    let mut events = vec![Vec::new(); n];
    let mut universe = 0;
    for (idx, sigma) in perms.enumerate() {
        for &(i, j) in sigma.pairs() {
            if i == j {
                events[i - 1].push(idx);
            }
        }
        universe += 1;
    }
    EventFamily::new(universe, events)
}

/// `|A_1 ∪ … ∪ A_r|` as `Σ_{∅≠S} (−1)^{|S|+1} |∩_{i∈S} A_i|`, summed
/// literally over all nonempty subsets `S`.
pub fn sieve_union_count(family: &EventFamily) -> Result<Count> {
    let r = family.events.len();
    if r > MAX_SIEVE_EVENTS {
        return Err(Error::TooManyEvents {
            events: r,
            limit: MAX_SIEVE_EVENTS,
        });
    }
    let sets = family.bitsets();
    let words = family.universe.div_ceil(64);
    let mut acc: i64 = 0;
    for mask in 1u32..(1 << r) {
        let mut meet = vec![u64::MAX; words];
        for (i, set) in sets.iter().enumerate() {
            if mask & (1 << i) != 0 {
                for (w, s) in meet.iter_mut().zip(set) {
                    *w &= s;
                }
            }
        }
        let size: i64 = meet.iter().map(|w| w.count_ones() as i64).sum();
        if mask.count_ones() % 2 == 1 {
            acc += size;
        } else {
            acc -= size;
        }
    }
    Ok(Count::from(
        u64::try_from(acc).expect("union size is nonnegative"),
    ))
}

/// `|A_1 ∪ … ∪ A_r|` by marking members directly.
pub fn direct_union_count(family: &EventFamily) -> Count {
    let mut seen = vec![false; family.universe];
    for ev in &family.events {
        for &x in ev {
            seen[x] = true;
        }
    }
    Count::from(seen.iter().filter(|&&b| b).count())
}

/// One disagreement found by [`verify_formulas`].
#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub family: Family,
    pub shape: MatchShape,
    /// `None` for the family total, `Some(k)` for the count with `k` fixed
    /// points.
    pub k: Option<usize>,
    pub expected: Count,
    pub computed: Count,
}

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub shapes_checked: usize,
    pub values_checked: usize,
    pub mismatches: Vec<Mismatch>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Compares every family's totals and rencontres counts with the
/// brute-force census, for all shapes with `m <= max_m`.
///
/// `formula(family, shape, k)` supplies the values under test; `k = None`
/// asks for the family total.
pub fn verify_formulas<F>(max_m: usize, budget: u64, formula: F) -> Result<VerifyReport>
where
    F: Fn(Family, MatchShape, Option<usize>) -> Result<Count>,
{
    let mut report = VerifyReport::default();
    for shape in MatchShape::all_up_to(max_m) {
        let census = fixed_point_census(shape, budget)?;
        let total: Count = census.iter().sum();
        report.shapes_checked += 1;
        let families = [
            Family::Permutation,
            Family::Rectangular,
            Family::Partial,
            Family::Unified,
        ];
        for family in families.into_iter().filter(|f| f.admits(shape)) {
            let mut check = |k: Option<usize>, expected: &Count| -> Result<()> {
                let computed = formula(family, shape, k)?;
                report.values_checked += 1;
                if &computed != expected {
                    report.mismatches.push(Mismatch {
                        family,
                        shape,
                        k,
                        expected: expected.clone(),
                        computed,
                    });
                }
                Ok(())
            };
            check(None, &total)?;
            for (k, expected) in census.iter().enumerate() {
                check(Some(k), expected)?;
            }
        }
    }
    Ok(report)
}

/// [`verify_formulas`] against the library's own counting formulas.
pub fn verify_library(max_m: usize, budget: u64) -> Result<VerifyReport> {
    verify_formulas(max_m, budget, |family, shape, k| match k {
        None => family.total(shape),
        Some(k) => family.rencontres(shape, k),
    })
}
