use montmort::counting::{
    unified_count, unified_derangements, unified_rencontres, Count, Family, MatchShape,
};
use montmort::distributions::{
    fixed_point_pmf, poisson_rate, prob_no_fixed_point, tv_distance, ExactProb,
};
use montmort::oeis::{
    check_sequence, resolve_cache_dir, Mapping, MappingConfig, OeisClient, OeisId, SequenceSpec,
};
use montmort::oracle::{verify_library, VerifyReport};
use montmort::real::format_decimal;
use montmort::sampler::{empirical_fixed_point_free, empirical_pmf_parallel, RNG_ALGORITHM};
use serde_json::Value;

use crate::record::{Obj, OutputRecord};
use crate::{ranges, Command, Failure, ShapeArgs};

/// Significant digits of every decimal approximation.
const DIGITS: usize = 12;

type Outcome = Result<OutputRecord, Failure>;

pub fn run(command: &Command) -> Outcome {
    match command {
        Command::Count {
            shape,
            fixed_points,
        } => count(*shape, *fixed_points),
        Command::Prob { shape } => prob(*shape),
        Command::Pmf { shape } => pmf(*shape),
        Command::Table { family, ranges } => table(family, ranges),
        Command::Sample {
            shape,
            trials,
            seed,
            fpf,
            workers,
        } => sample(*shape, *trials, *seed, *fpf, *workers),
        Command::Verify { max_m, budget } => verify(*max_m, *budget),
        Command::OeisCheck {
            id,
            terms,
            offline,
            data_dir,
            mapping,
            config,
        } => oeis_check(
            id,
            *terms,
            *offline,
            data_dir.clone(),
            mapping.as_deref(),
            config.as_deref(),
        ),
    }
}

fn resolve(args: ShapeArgs) -> Result<MatchShape, Failure> {
    let m = args.m.unwrap_or(args.n);
    let l = args.l.unwrap_or(args.n);
    Ok(MatchShape::new(args.n, m, l)?)
}

fn echo_shape(record: &mut OutputRecord, shape: MatchShape) {
    record.request("n", shape.n());
    record.request("m", shape.m());
    record.request("l", shape.l());
}

fn decimal(p: &ExactProb) -> String {
    p.to_decimal(DIGITS)
}

fn count(args: ShapeArgs, fixed_points: Option<usize>) -> Outcome {
    let shape = resolve(args)?;
    let mut record = OutputRecord::new("count");
    echo_shape(&mut record, shape);
    if let Some(k) = fixed_points {
        record.request("fixed_points", k);
    }
    record.result("total", unified_count(shape).to_string());
    record.result("fixed_point_free", unified_derangements(shape).to_string());
    if let Some(k) = fixed_points {
        record.result("exactly_k", unified_rencontres(shape, k)?.to_string());
    }
    Ok(record)
}

fn prob(args: ShapeArgs) -> Outcome {
    let shape = resolve(args)?;
    let mut record = OutputRecord::new("prob");
    echo_shape(&mut record, shape);
    let p = prob_no_fixed_point(shape);
    record.result("probability", p.to_string());
    record.result("decimal", decimal(&p));
    Ok(record)
}

fn pmf_row(k: usize, count: &Count, p: &ExactProb) -> Value {
    Obj::new()
        .put("k", k)
        .text("count", count)
        .text("probability", p)
        .put("decimal", decimal(p))
        .into()
}

fn pmf(args: ShapeArgs) -> Outcome {
    let shape = resolve(args)?;
    let mut record = OutputRecord::new("pmf");
    echo_shape(&mut record, shape);
    let law = fixed_point_pmf(shape);
    record.result("total", law.total().to_string());
    let rows: Vec<Value> = law
        .counts()
        .iter()
        .zip(law.probs())
        .enumerate()
        .map(|(k, (c, p))| pmf_row(k, c, p))
        .collect();
    record.result("rows", rows);
    record.result("mean", law.mean().to_string());
    match poisson_rate(shape) {
        Ok(limit) => {
            let poisson: Vec<Value> = (0..=shape.l())
                .map(|k| {
                    Obj::new()
                        .put("k", k)
                        .put("decimal", limit.pmf(k).to_decimal(DIGITS))
                        .into()
                })
                .collect();
            record.result("poisson_rate", limit.rate().to_string());
            record.result("poisson", poisson);
            record.result(
                "total_variation",
                tv_distance(&law, &limit).to_decimal(DIGITS),
            );
        }
        // no hats: K = 0 surely and there is no limiting rate
        Err(_) => {
            record.result("poisson_rate", Value::Null);
            record.result("total_variation", Value::Null);
        }
    }
    Ok(record)
}

/// The shapes a family table covers, in output order.
fn grid(family: Family, spec: &ranges::Ranges) -> Result<Vec<MatchShape>, Failure> {
    let forbid = |present: bool, key: &str| {
        if present {
            Err(Failure::Invalid(format!(
                "the {} family takes no `{key}` range",
                family.name()
            )))
        } else {
            Ok(())
        }
    };
    match family {
        Family::Permutation => {
            forbid(spec.m.is_some(), "m")?;
            forbid(spec.l.is_some(), "l")?;
        }
        Family::Rectangular => forbid(spec.l.is_some(), "l")?,
        Family::Partial => forbid(spec.m.is_some(), "m")?,
        Family::Unified => {}
    }
    let mut shapes = Vec::new();
    for n in spec.n.clone().expect("parser requires n") {
        let ms = spec.m.clone().unwrap_or(n..=n);
        for m in ms.filter(|&m| m >= n) {
            let ls = match family {
                Family::Permutation | Family::Rectangular => n..=n,
                _ => spec.l.clone().unwrap_or(0..=n),
            };
            for l in ls.filter(|&l| l <= n) {
                shapes.push(MatchShape::new(n, m, l)?);
            }
        }
    }
    Ok(shapes)
}

fn table(family: &str, spec: &str) -> Outcome {
    let family: Family = family.parse()?;
    let parsed = ranges::parse(spec).map_err(Failure::Invalid)?;
    let shapes = grid(family, &parsed)?;
    let mut record = OutputRecord::new("table");
    record.request("family", family.name());
    record.request("ranges", spec);
    let mut rows: Vec<Value> = Vec::new();
    for shape in &shapes {
        let total = family.total(*shape)?;
        for k in 0..=shape.l() {
            let c = family.rencontres(*shape, k)?;
            let p = ExactProb::new(&c, &total)?;
            rows.push(
                Obj::new()
                    .put("n", shape.n())
                    .put("m", shape.m())
                    .put("l", shape.l())
                    .put("k", k)
                    .text("count", &c)
                    .text("probability", &p)
                    .put("decimal", decimal(&p))
                    .into(),
            );
        }
    }
    record.result("shapes", shapes.len());
    record.result("rows", rows);
    Ok(record)
}

fn sample(args: ShapeArgs, trials: u64, seed: u64, fpf: bool, workers: Option<usize>) -> Outcome {
    let shape = resolve(args)?;
    let workers = workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);
    let mut record = OutputRecord::new("sample");
    echo_shape(&mut record, shape);
    record.request("trials", trials.to_string());
    record.request("seed", seed.to_string());
    record.request("fpf", fpf);
    let stats = if fpf {
        empirical_fixed_point_free(shape, trials, seed, workers)?
    } else {
        empirical_pmf_parallel(shape, trials, seed, workers)?
    };
    let exact = fixed_point_pmf(shape);
    let n_trials = Count::from(stats.trials);
    let mut rows: Vec<Value> = Vec::new();
    for (k, &c) in stats.counts.iter().enumerate() {
        let freq = ExactProb::new(&Count::from(c), &n_trials)?;
        let mut row = Obj::new()
            .put("k", k)
            .text("count", c)
            .text("frequency", &freq)
            .put("decimal", decimal(&freq));
        if !fpf {
            row = row.put("exact", decimal(&exact.probs()[k]));
        }
        rows.push(row.into());
    }
    record.result("rows", rows);
    if fpf {
        let iterations = Count::from(stats.rejection_iterations);
        record.result("rejection_iterations", iterations.to_string());
        // each accepted draw costs at least one iteration, so trials/iterations is in (0, 1]
        let acceptance = ExactProb::new(&n_trials, &iterations)?;
        record.result("mean_iterations", reciprocal(&acceptance));
        record.result("expected_iterations", reciprocal(&exact.probs()[0]));
    }
    record.meta("seed", seed.to_string());
    record.meta("rng_algorithm", stats.rng_algorithm);
    debug_assert_eq!(stats.rng_algorithm, RNG_ALGORITHM);
    Ok(record)
}

fn reciprocal(p: &ExactProb) -> String {
    format_decimal(p.denom(), p.numer(), DIGITS)
}

fn verify(max_m: usize, budget: u64) -> Outcome {
    let mut record = OutputRecord::new("verify");
    record.request("max_m", max_m);
    record.request("budget", budget.to_string());
    let report = verify_library(max_m, budget)?;
    verify_record(record, &report)
}

fn verify_record(mut record: OutputRecord, report: &VerifyReport) -> Outcome {
    record.result("shapes_checked", report.shapes_checked);
    record.result("values_checked", report.values_checked);
    record.result("mismatch_count", report.mismatches.len());
    let mismatches: Vec<Value> = report
        .mismatches
        .iter()
        .map(|m| {
            Obj::new()
                .put("family", m.family.name())
                .text("shape", m.shape)
                .put("k", m.k.map_or(Value::Null, Value::from))
                .text("expected", &m.expected)
                .text("computed", &m.computed)
                .into()
        })
        .collect();
    record.result("mismatches", mismatches);
    record.result("passed", report.passed());
    if report.passed() {
        Ok(record)
    } else {
        let msg = format!(
            "{} formula values disagree with enumeration",
            report.mismatches.len()
        );
        Err(Failure::Mismatch(Box::new(record), msg))
    }
}

fn select_specs(
    config: &MappingConfig,
    id: &OeisId,
    mapping: Option<&str>,
) -> Result<Vec<SequenceSpec>, Failure> {
    let configured: Vec<SequenceSpec> = config.specs_for(id).cloned().collect();
    match mapping {
        Some(name) => {
            if let Some(spec) = configured.iter().find(|s| s.name == name) {
                return Ok(vec![spec.clone()]);
            }
            let kind: Mapping = name.parse().map_err(|_| {
                Failure::Invalid(format!(
                    "`{name}` is neither a configured mapping for {id} nor a mapping kind"
                ))
            })?;
            Ok(vec![SequenceSpec::new(id.clone(), name, kind, 0)])
        }
        None if configured.is_empty() => Err(Failure::Invalid(format!(
            "no mapping configured for {id}; pass --mapping"
        ))),
        None => Ok(configured),
    }
}

fn oeis_check(
    id: &str,
    terms: usize,
    offline: bool,
    data_dir: Option<std::path::PathBuf>,
    mapping: Option<&str>,
    config_path: Option<&std::path::Path>,
) -> Outcome {
    let id: OeisId = id.parse()?;
    let config = match config_path {
        Some(path) => MappingConfig::load(path)?,
        None => MappingConfig::builtin(),
    };
    let specs = select_specs(&config, &id, mapping)?;
    let cache = resolve_cache_dir(data_dir);
    let client = if offline {
        OeisClient::offline(cache.clone())
    } else {
        OeisClient::online(cache.clone())
    };

    let mut record = OutputRecord::new("oeis-check");
    record.request("id", id.as_str());
    record.request("terms", terms);
    record.request("offline", offline);
    record.request(
        "data_dir",
        cache.map_or(Value::Null, |p| Value::from(p.display().to_string())),
    );
    if let Some(name) = mapping {
        record.request("mapping", name);
    }

    let mut reports: Vec<Value> = Vec::new();
    let mut mismatches: Vec<Value> = Vec::new();
    let mut failing = Vec::new();
    for spec in &specs {
        let report = check_sequence(&client, spec, terms)?;
        if !report.passed() {
            failing.push(spec.name.clone());
        }
        reports.push(
            Obj::new()
                .put("mapping", spec.name.as_str())
                .put("kind", spec.mapping.name())
                .put("status", spec.status.as_str())
                .put("terms_checked", report.terms_checked)
                .put("source", report.source.as_str())
                .put("mismatch_count", report.mismatches.len())
                .put("passed", report.passed())
                .into(),
        );
        for m in &report.mismatches {
            mismatches.push(
                Obj::new()
                    .put("mapping", spec.name.as_str())
                    .put("index", m.index.to_string())
                    .text("expected", &m.expected)
                    .text("computed", &m.computed)
                    .into(),
            );
        }
    }
    record.result("reports", reports);
    record.result("mismatches", mismatches);
    if failing.is_empty() {
        Ok(record)
    } else {
        let msg = format!("{id}: mismatches under {}", failing.join(", "));
        Err(Failure::Mismatch(Box::new(record), msg))
    }
}
