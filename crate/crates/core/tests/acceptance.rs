//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test -p montmort --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use montmort::counting::*;
use montmort::distributions::*;
use montmort::oeis::{check_sequence, MappingConfig, MappingStatus, OeisClient, OeisId};
use montmort::oracle::{
    direct_union_count, fixed_point_census_parallel, hat_event_family, sieve_union_count,
    verify_library, EventFamily, DEFAULT_BUDGET,
};
use montmort::sampler::{block_rng, empirical_fixed_point_free, empirical_pmf_parallel};
use montmort::Error;
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;

type Outcome = Result<String, String>;

/// Name, time budget, check.
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn oracle_equivalence() -> Outcome {
    let mut shapes = 0;
    for shape in MatchShape::all_up_to(8) {
        let census = fixed_point_census_parallel(shape, DEFAULT_BUDGET, workers())
            .map_err(|e| e.to_string())?;
        let total: Count = census.iter().sum();
        ensure(unified_count(shape) == total, || format!("{shape}: total"))?;
        ensure(unified_derangements(shape) == census[0], || {
            format!("{shape}: k=0")
        })?;
        for (k, c) in census.iter().enumerate() {
            let r = unified_rencontres(shape, k).map_err(|e| e.to_string())?;
            ensure(&r == c, || format!("{shape}: k={k} gives {r}, census {c}"))?;
        }
        shapes += 1;
    }
    let report = verify_library(8, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    ensure(report.passed(), || {
        format!("{:?}", report.mismatches.first())
    })?;
    Ok(format!(
        "{shapes} shapes, {} family values",
        report.values_checked
    ))
}

fn reductions() -> Outcome {
    let e = |e: Error| e.to_string();
    let mut checks = 0;
    for m in 0..=30usize {
        for n in 0..=m {
            for l in 0..=n {
                let shape = MatchShape::new(n, m, l).map_err(e)?;
                if m == n {
                    ensure(
                        unified_count(shape) == partial_count(n, l).map_err(e)?,
                        || format!("{shape}: partial total"),
                    )?;
                    for k in 0..=l {
                        ensure(
                            unified_rencontres(shape, k).map_err(e)?
                                == partial_rencontres(n, l, k).map_err(e)?,
                            || format!("{shape}: partial k={k}"),
                        )?;
                    }
                    checks += 1;
                }
                if l == n {
                    ensure(
                        unified_count(shape) == arrangements_count(n, m).map_err(e)?,
                        || format!("{shape}: arrangements"),
                    )?;
                    for k in 0..=n {
                        ensure(
                            unified_rencontres(shape, k).map_err(e)?
                                == rect_rencontres(n, m, k).map_err(e)?,
                            || format!("{shape}: rect k={k}"),
                        )?;
                    }
                    checks += 1;
                }
                if l == n && m == n {
                    ensure(unified_count(shape) == factorial(n), || {
                        format!("{shape}: n!")
                    })?;
                    for k in 0..=n {
                        ensure(
                            unified_rencontres(shape, k).map_err(e)?
                                == rencontres(n, k).map_err(e)?,
                            || format!("{shape}: perm k={k}"),
                        )?;
                    }
                }
                ensure(
                    unified_derangements(shape) == unified_rencontres(shape, 0).map_err(e)?,
                    || format!("{shape}: k=0"),
                )?;
            }
        }
    }
    Ok(format!("{checks} reduced shapes"))
}

fn classical_limit() -> Outcome {
    // P_n rounds to 0.3679 iff 0.36785 <= P_n < 0.36795
    let (lo, hi) = (ratio(36785, 100_000), ratio(36795, 100_000));
    for n in 8..=30 {
        let p = prob_no_fixed_point(MatchShape::permutation(n));
        let p = p.as_ratio();
        ensure(&lo <= p && p < &hi, || {
            format!("P_{n} = {p} does not round to 0.3679")
        })?;
    }
    for n in 1..=30 {
        let w = certify_limit_gap(n);
        ensure(w.holds, || {
            format!("n={n}: gap {} > bound {}", w.worst_gap, w.bound)
        })?;
    }
    Ok("rounding for 8..=30, certified gap for 1..=30".into())
}

fn nearest_integer() -> Outcome {
    for n in 1..=200 {
        let w = nearest_integer_identity(n).map_err(|e| e.to_string())?;
        ensure(w.holds && w.within_tail_bound, || format!("n={n} fails"))?;
    }
    ensure(
        matches!(nearest_integer_identity(0), Err(Error::Domain(_))),
        || "n=0 not rejected as a domain error".into(),
    )?;
    Ok("1..=200 hold, n=0 rejected".into())
}

fn three_way() -> Outcome {
    for n in 0..=500 {
        let d = derangements(n);
        ensure(d == derangements_via_pair_recurrence(n), || {
            format!("pair recurrence at {n}")
        })?;
        ensure(d == derangements_via_sign_recurrence(n), || {
            format!("sign recurrence at {n}")
        })?;
    }
    Ok("n = 0..=500".into())
}

fn special_values() -> Outcome {
    let e = |e: Error| e.to_string();
    let mut checked = 0usize;
    for n in 0..=30usize {
        ensure(rencontres(n, n).map_err(e)? == 1u64, || {
            format!("N_{n}({n})")
        })?;
        if n >= 1 {
            ensure(rencontres(n, n - 1).map_err(e)?.is_zero(), || {
                format!("N_{n}({})", n - 1)
            })?;
        }
        let sum: Count = (0..=n).map(|k| rencontres(n, k).unwrap()).sum();
        ensure(sum == factorial(n), || format!("perm sum at {n}"))?;
        checked += 1;
        for m in n..=30usize {
            if n >= 1 {
                let got = rect_rencontres(n, m, n - 1).map_err(e)?;
                ensure(got == (n * (m - n)) as u64, || {
                    format!("N_{n}^{m}({})", n - 1)
                })?;
            }
            let sum: Count = (0..=n).map(|k| rect_rencontres(n, m, k).unwrap()).sum();
            ensure(sum == arrangements_count(n, m).map_err(e)?, || {
                format!("rect sum {n},{m}")
            })?;
            checked += 1;
            for l in 0..=n {
                let shape = MatchShape::new(n, m, l).map_err(e)?;
                let sum: Count = (0..=l).map(|k| unified_rencontres(shape, k).unwrap()).sum();
                ensure(sum == unified_count(shape), || {
                    format!("unified sum {shape}")
                })?;
                checked += 1;
            }
        }
        for l in 0..=n {
            let top = partial_rencontres(n, l, l).map_err(e)?;
            ensure(top == binomial(n, l as i64), || {
                format!("N_{{{n},{l}}}({l})")
            })?;
            if l >= 1 {
                let expect = binomial(n, l as i64 - 1) * Count::from((n - l + 1) * (n - l));
                ensure(
                    partial_rencontres(n, l, l - 1).map_err(e)? == expect,
                    || format!("N_{{{n},{l}}}({})", l - 1),
                )?;
            }
            let sum: Count = (0..=l).map(|k| partial_rencontres(n, l, k).unwrap()).sum();
            ensure(sum == partial_count(n, l).map_err(e)?, || {
                format!("partial sum {n},{l}")
            })?;
            checked += 1;
        }
    }
    Ok(format!("{checked} parameter sets"))
}

/// Reference values from an independent high-precision computation.
const TV_REFERENCE: [(usize, f64); 4] = [
    (5, 0.012_376_204_535_217_68),
    (10, 0.005_934_377_128_639_241),
    (20, 0.002_904_540_966_760_273),
    (40, 0.001_436_826_573_605_113),
];

fn poisson_diagnostics() -> Outcome {
    let mut tvs = Vec::new();
    for (n, reference) in TV_REFERENCE {
        let shape = MatchShape::new(n, 2 * n, n).map_err(|e| e.to_string())?;
        let tv = tv_distance_to_poisson(shape).map_err(|e| e.to_string())?;
        let got = tv.to_f64();
        ensure((got - reference).abs() <= 1e-15, || {
            format!("TV(n={n}) = {got:e}, reference {reference:e}")
        })?;
        tvs.push(tv);
    }
    ensure(tvs.windows(2).all(|w| w[1] < w[0]), || {
        "TV not strictly decreasing".into()
    })?;
    let first = tvs[0].to_f64();
    let last = tvs[3].to_f64();
    ensure(last * 2.0 <= first, || {
        format!("TV(40) = {last:e} not <= TV(5)/2")
    })?;
    Ok(format!(
        "TV(5) = {first:.6e}, TV(40) = {last:.6e}, ratio {:.2}",
        first / last
    ))
}

fn monte_carlo() -> Outcome {
    let shape = MatchShape::permutation(10);
    let p10 = prob_no_fixed_point(shape).to_f64();
    let stats =
        empirical_pmf_parallel(shape, 200_000, 20_240_601, workers()).map_err(|e| e.to_string())?;
    let freq = stats.counts[0] as f64 / stats.trials as f64;
    ensure((freq - p10).abs() <= 0.005, || {
        format!("freq {freq} vs P10 {p10}")
    })?;

    let cond = empirical_fixed_point_free(shape, 10_000, 20_240_602, workers())
        .map_err(|e| e.to_string())?;
    ensure(cond.counts[0] == cond.trials, || {
        "conditional draw with a fixed point".into()
    })?;
    let mean_iter = cond.rejection_iterations as f64 / cond.trials as f64;
    let target = 1.0 / p10;
    ensure((mean_iter - target).abs() <= 0.05 * target, || {
        format!("mean iterations {mean_iter} vs 1/P10 {target}")
    })?;
    Ok(format!(
        "freq(K=0) = {freq:.5} vs {p10:.5}; mean iterations {mean_iter:.4} vs {target:.4}"
    ))
}

fn oeis_regression() -> Outcome {
    let config = MappingConfig::builtin();
    let client = OeisClient::offline(None);
    let derangement_id: OeisId = "A000166".parse().map_err(|e: Error| e.to_string())?;
    let mut notes = Vec::new();
    let mut derangements_ok = false;
    for spec in &config.sequences {
        let label = format!("{}/{}", spec.id, spec.name);
        match check_sequence(&client, spec, 26) {
            Ok(report) => {
                let full = match spec.status {
                    MappingStatus::Verified => report.passed(),
                    MappingStatus::OpenMismatch => !report.passed(),
                    MappingStatus::Unverified => true,
                };
                ensure(full, || {
                    format!(
                        "{label} is {} but check passed={}",
                        spec.status.as_str(),
                        report.passed()
                    )
                })?;
                if spec.id == derangement_id && report.passed() && report.terms_checked >= 26 {
                    derangements_ok = true;
                }
                notes.push(format!(
                    "{label} {}",
                    if report.passed() {
                        "pass"
                    } else {
                        "open-mismatch"
                    }
                ));
            }
            Err(Error::MissingSnapshot(_)) if spec.status != MappingStatus::Verified => {
                notes.push(format!("{label} no-snapshot"));
            }
            Err(err) => return Err(format!("{label}: {err}")),
        }
    }
    ensure(derangements_ok, || "A000166 did not pass 26 terms".into())?;
    Ok(notes.join(", "))
}

fn sieve_validation() -> Outcome {
    let mut rng = block_rng(7, 0);
    for trial in 0..200 {
        let universe = rng.random_range(1..=12usize);
        let count = rng.random_range(0..=6usize);
        let events: Vec<Vec<usize>> = (0..count)
            .map(|_| (0..universe).filter(|_| rng.random_bool(0.4)).collect())
            .collect();
        let family = EventFamily::new(universe, events).map_err(|e| e.to_string())?;
        let sieve = sieve_union_count(&family).map_err(|e| e.to_string())?;
        let direct = direct_union_count(&family);
        ensure(sieve == direct, || {
            format!("family #{trial}: sieve {sieve}, direct {direct}")
        })?;
    }
    for n in 0..=7 {
        let family = hat_event_family(n).map_err(|e| e.to_string())?;
        let sieve = sieve_union_count(&family).map_err(|e| e.to_string())?;
        ensure(sieve == direct_union_count(&family), || {
            format!("hats n={n}")
        })?;
        let expect = Count::from(factorial(n).into_biguint() - derangements(n).into_biguint());
        ensure(sieve == expect, || {
            format!("hats n={n}: {sieve} != n! - !n")
        })?;
    }
    Ok("200 random families, hat families n <= 7".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (
            "oracle equivalence, m <= 8",
            Duration::from_secs(60),
            oracle_equivalence,
        ),
        (
            "reduction identities, m <= 30",
            Duration::from_secs(10),
            reductions,
        ),
        (
            "classical limit 1/e",
            Duration::from_secs(1),
            classical_limit,
        ),
        (
            "nearest-integer identity",
            Duration::from_secs(5),
            nearest_integer,
        ),
        (
            "three-way derangement agreement",
            Duration::from_secs(1),
            three_way,
        ),
        (
            "special values and partition sums",
            Duration::from_secs(10),
            special_values,
        ),
        (
            "Poisson total variation",
            Duration::from_secs(5),
            poisson_diagnostics,
        ),
        (
            "Monte Carlo consistency",
            Duration::from_secs(30),
            monte_carlo,
        ),
        (
            "OEIS regression, offline",
            Duration::from_secs(1),
            oeis_regression,
        ),
        ("sieve validation", Duration::from_secs(5), sieve_validation),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (tag, detail) = match outcome {
            Ok(_) if elapsed > budget => {
                failed += 1;
                ("FAIL", format!("exceeded the {}s budget", budget.as_secs()))
            }
            Ok(detail) => ("PASS", detail),
            Err(detail) => {
                failed += 1;
                ("FAIL", detail)
            }
        };
        let timing = format!("{:.2}s", elapsed.as_secs_f64());
        println!("[{tag}] AC{:<2} {name} ({timing}): {detail}", i + 1);
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
