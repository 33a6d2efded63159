//! Seeded uniform sampling of rectangular ℓ-matchings.
//!
//! Streams come from ChaCha20 ([`RNG_ALGORITHM`]). A run of `trials` draws
//! is cut into blocks of [`BLOCK_TRIALS`]; block `b` draws from the ChaCha20
//! stream seeded by `seed_from_u64(seed)` with stream id `b`. Results are
//! therefore identical for any number of worker threads.

use std::thread;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::counting::{unified_derangements, MatchShape};
use crate::error::{Error, Result};
use crate::oracle::PartialInjection;

/// Identifier recorded in every [`SampleStats`].
pub const RNG_ALGORITHM: &str = "chacha20/rand-0.9/block-4096";

/// Trials per independent stream block.
pub const BLOCK_TRIALS: u64 = 4096;

/// Rejection sampling gives up after this many draws.
pub const REJECTION_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleStats {
    pub shape: MatchShape,
    pub trials: u64,
    pub seed: u64,
    pub rng_algorithm: &'static str,
    /// Observed frequency of `K = k` for `k = 0..=ℓ`.
    pub counts: Vec<u64>,
    /// Total draws spent by conditional (fixed-point-free) runs; 0 otherwise.
    pub rejection_iterations: u64,
}

/// Generator for stream block `block` of a run seeded with `seed`.
pub fn block_rng(seed: u64, block: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// Moves a uniform `take`-subset of `items` into its first `take` slots, in
/// uniformly random order.
fn partial_shuffle<R: Rng + ?Sized>(items: &mut [usize], take: usize, rng: &mut R) {
    for i in 0..take {
        let j = rng.random_range(i..items.len());
        items.swap(i, j);
    }
}

/// Draws a uniform element of the matching set of `shape`.
///
/// A partial shuffle picks the ℓ people, a second picks an ordered ℓ-tuple
/// of distinct hats; the sorted people are paired with the tuple in order.
pub fn sample_matching<R: Rng + ?Sized>(shape: MatchShape, rng: &mut R) -> PartialInjection {
    let l = shape.l();
    let mut people: Vec<usize> = (1..=shape.n()).collect();
    partial_shuffle(&mut people, l, rng);
    let mut hats: Vec<usize> = (1..=shape.m()).collect();
    partial_shuffle(&mut hats, l, rng);
    let mut domain = people[..l].to_vec();
    domain.sort_unstable();
    PartialInjection::from_sorted(domain.into_iter().zip(hats[..l].iter().copied()).collect())
}

pub fn count_fixed_points(matching: &PartialInjection) -> usize {
    matching.fixed_points()
}

/// Draws uniformly from the fixed-point-free matchings by rejection.
/// Returns the matching and the number of draws it took.
pub fn sample_fixed_point_free<R: Rng + ?Sized>(
    shape: MatchShape,
    rng: &mut R,
) -> Result<(PartialInjection, u64)> {
    if unified_derangements(shape).is_zero() {
        return Err(Error::ImpossibleEvent(shape));
    }
    for iteration in 1..=REJECTION_CAP {
        let m = sample_matching(shape, rng);
        if m.fixed_points() == 0 {
            return Ok((m, iteration));
        }
    }
    Err(Error::RejectionCap(REJECTION_CAP))
}

fn blocks(trials: u64) -> Vec<(u64, u64)> {
    let n = trials.div_ceil(BLOCK_TRIALS);
    (0..n)
        .map(|b| (b, BLOCK_TRIALS.min(trials - b * BLOCK_TRIALS)))
        .collect()
}

fn run_blocks<F>(trials: u64, workers: usize, width: usize, body: F) -> Result<(Vec<u64>, u64)>
where
    F: Fn(u64, u64, &mut [u64]) -> Result<u64> + Sync,
{
    let all = blocks(trials);
    let workers = workers.clamp(1, all.len().max(1));
    let partials: Vec<Result<(Vec<u64>, u64)>> = thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let all = &all;
                let body = &body;
                s.spawn(move || {
                    let mut counts = vec![0u64; width];
                    let mut extra = 0;
                    for &(block, size) in all.iter().skip(w).step_by(workers) {
                        extra += body(block, size, &mut counts)?;
                    }
                    Ok((counts, extra))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut counts = vec![0u64; width];
    let mut extra = 0;
    for part in partials {
        let (c, e) = part?;
        for (acc, v) in counts.iter_mut().zip(c) {
            *acc += v;
        }
        extra += e;
    }
    Ok((counts, extra))
}

/// Histogram of the fixed-point count over `trials` i.i.d. uniform draws.
pub fn empirical_pmf(shape: MatchShape, trials: u64, seed: u64) -> Result<SampleStats> {
    empirical_pmf_parallel(shape, trials, seed, 1)
}

/// [`empirical_pmf`] spread over `workers` threads; same output for any
/// worker count.
pub fn empirical_pmf_parallel(
    shape: MatchShape,
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<SampleStats> {
    if trials == 0 {
        return Err(Error::domain("trials must be at least 1"));
    }
    let (counts, _) = run_blocks(trials, workers, shape.l() + 1, |block, size, counts| {
        let mut rng = block_rng(seed, block);
        for _ in 0..size {
            counts[sample_matching(shape, &mut rng).fixed_points()] += 1;
        }
        Ok(0)
    })?;
    Ok(SampleStats {
        shape,
        trials,
        seed,
        rng_algorithm: RNG_ALGORITHM,
        counts,
        rejection_iterations: 0,
    })
}

/// `trials` fixed-point-free draws by rejection; every count lands at
/// `k = 0` and `rejection_iterations` sums the draws spent.
pub fn empirical_fixed_point_free(
    shape: MatchShape,
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<SampleStats> {
    if trials == 0 {
        return Err(Error::domain("trials must be at least 1"));
    }
    if unified_derangements(shape).is_zero() {
        return Err(Error::ImpossibleEvent(shape));
    }
    let (counts, iterations) =
        run_blocks(trials, workers, shape.l() + 1, |block, size, counts| {
            let mut rng = block_rng(seed, block);
            let mut spent = 0;
            for _ in 0..size {
                let (m, it) = sample_fixed_point_free(shape, &mut rng)?;
                counts[m.fixed_points()] += 1;
                spent += it;
            }
            Ok(spent)
        })?;
    Ok(SampleStats {
        shape,
        trials,
        seed,
        rng_algorithm: RNG_ALGORITHM,
        counts,
        rejection_iterations: iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(n: usize, m: usize, l: usize) -> MatchShape {
        MatchShape::new(n, m, l).unwrap()
    }

    #[test]
    fn single_identity() {
        let mut rng = block_rng(7, 0);
        for _ in 0..20 {
            let m = sample_matching(shape(1, 1, 1), &mut rng);
            assert_eq!(m.pairs(), &[(1, 1)]);
        }
    }

    #[test]
    fn deterministic_for_a_seed() {
        let s = shape(6, 9, 4);
        let a: Vec<_> = {
            let mut rng = block_rng(42, 0);
            (0..50).map(|_| sample_matching(s, &mut rng)).collect()
        };
        let mut rng = block_rng(42, 0);
        let b: Vec<_> = (0..50).map(|_| sample_matching(s, &mut rng)).collect();
        assert_eq!(a, b);
        for m in &a {
            assert!(m.fits(s));
            assert!(PartialInjection::new(m.pairs().to_vec()).is_ok());
        }
    }

    #[test]
    fn counting_fixed_points() {
        let id = PartialInjection::new((1..=5).map(|i| (i, i)).collect()).unwrap();
        assert_eq!(count_fixed_points(&id), 5);
        let swap = PartialInjection::new(vec![(1, 2), (2, 1)]).unwrap();
        assert_eq!(count_fixed_points(&swap), 0);
        let one = PartialInjection::new(vec![(1, 1), (3, 2)]).unwrap();
        assert_eq!(count_fixed_points(&one), 1);
    }

    #[test]
    fn single_trial_has_one_count() {
        let st = empirical_pmf(shape(5, 5, 5), 1, 3).unwrap();
        assert_eq!(st.counts.iter().sum::<u64>(), 1);
        assert_eq!(st.counts.iter().filter(|&&c| c > 0).count(), 1);
        assert!(empirical_pmf(shape(5, 5, 5), 0, 3).is_err());
    }

    #[test]
    fn stats_independent_of_workers() {
        let s = shape(7, 9, 5);
        let base = empirical_pmf(s, 20_000, 11).unwrap();
        assert_eq!(base.counts.iter().sum::<u64>(), 20_000);
        for w in [2, 3, 8] {
            assert_eq!(empirical_pmf_parallel(s, 20_000, 11, w).unwrap(), base);
        }
        let f1 = empirical_fixed_point_free(s, 9000, 5, 1).unwrap();
        let f4 = empirical_fixed_point_free(s, 9000, 5, 4).unwrap();
        assert_eq!(f1, f4);
        assert_eq!(f1.counts[0], 9000);
        assert!(f1.rejection_iterations >= 9000);
    }

    #[test]
    fn unique_derangement_of_two() {
        let mut rng = block_rng(1, 0);
        for _ in 0..20 {
            let (m, _) = sample_fixed_point_free(shape(2, 2, 2), &mut rng).unwrap();
            assert_eq!(m.pairs(), &[(1, 2), (2, 1)]);
        }
    }

    #[test]
    fn impossible_conditioning() {
        let mut rng = block_rng(1, 0);
        assert!(matches!(
            sample_fixed_point_free(shape(1, 1, 1), &mut rng),
            Err(Error::ImpossibleEvent(_))
        ));
        assert!(empirical_fixed_point_free(shape(1, 1, 1), 5, 0, 1).is_err());
    }
}
