use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use fimopt::harness::{train, TrainOptions};
use fimopt::optim::{memory_estimate, OptimizerKind};
use fimopt::verify::{run_verification, Tier, VerifyOptions};

use crate::config::{check_relative, load, CompareConfig, RunConfig};

pub const EXIT_DIVERGED: u8 = 2;
pub const EXIT_VERIFY_FAILED: u8 = 3;

pub const SUMMARY_HEADER: &str = "optimizer,final_loss,steps_to_threshold,memory_estimate,status";

fn write_record(path: &Path, record: &fimopt::harness::RunRecord) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let mut w = BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    );
    record.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn run(config: &Path, out: &Path) -> Result<u8> {
    let cfg: RunConfig = load(config)?;
    cfg.validate()?;
    let problem = cfg.problem.build(cfg.seed)?;
    let schedule = cfg.schedule.build(cfg.steps, None)?;
    let opts = TrainOptions {
        record_time: cfg.record_time,
        ..TrainOptions::new(cfg.steps, cfg.seed)
    };
    let outcome = train(&problem, &cfg.optimizer, &schedule, &opts)?;
    let path = out.join(check_relative(&cfg.output)?);
    write_record(&path, &outcome.record)?;
    match outcome.record.diverged_at {
        Some(step) => {
            eprintln!("diverged at step {step}; partial log in {}", path.display());
            Ok(EXIT_DIVERGED)
        }
        None => {
            eprintln!(
                "final loss {:e} after {} steps -> {}",
                outcome.record.final_loss,
                cfg.steps,
                path.display()
            );
            Ok(0)
        }
    }
}

struct Row {
    name: String,
    final_loss: Option<f64>,
    steps_to_threshold: Option<u64>,
    memory: Option<u64>,
    status: String,
}

pub fn compare(config: &Path, out: &Path) -> Result<u8> {
    let cfg: CompareConfig = load(config)?;
    cfg.validate()?;
    let problem = cfg.problem.build(cfg.seed)?;
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let rows: Vec<Row> = std::thread::scope(|scope| {
        let handles: Vec<_> = cfg
            .runs
            .iter()
            .map(|entry| {
                let problem = &problem;
                let cfg = &cfg;
                scope.spawn(move || {
                    let attempt = || -> Result<Row> {
                        let schedule = cfg.schedule.build(cfg.steps, entry.lr)?;
                        let opts = TrainOptions {
                            record_time: cfg.record_time,
                            ..TrainOptions::new(cfg.steps, cfg.seed)
                        };
                        let outcome = train(problem, &entry.optimizer, &schedule, &opts)?;
                        write_record(&out.join(format!("{}.csv", entry.name)), &outcome.record)?;
                        let rec = &outcome.record;
                        Ok(Row {
                            name: entry.name.clone(),
                            final_loss: Some(rec.final_loss),
                            steps_to_threshold: rec.steps_to_fraction(cfg.threshold),
                            memory: Some(outcome.memory_floats),
                            status: match rec.diverged_at {
                                Some(s) => format!("diverged at step {s}"),
                                None => "ok".into(),
                            },
                        })
                    };
                    attempt().unwrap_or_else(|e| Row {
                        name: entry.name.clone(),
                        final_loss: None,
                        steps_to_threshold: None,
                        memory: None,
                        status: format!("error: {e:#}").replace(',', ";"),
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });

    let path = out.join("summary.csv");
    let mut w = BufWriter::new(
        File::create(&path).with_context(|| format!("cannot create {}", path.display()))?,
    );
    writeln!(w, "{SUMMARY_HEADER}")?;
    let opt = |x: Option<String>| x.unwrap_or_default();
    for r in &rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.name,
            opt(r.final_loss.map(|x| format!("{x:e}"))),
            opt(r.steps_to_threshold.map(|x| x.to_string())),
            opt(r.memory.map(|x| x.to_string())),
            r.status
        )?;
    }
    w.flush()?;
    for r in &rows {
        eprintln!("{:<24} {}", r.name, r.status);
    }
    if rows.iter().all(|r| r.status != "ok") {
        bail!("every run failed");
    }
    Ok(0)
}

pub fn verify(seed: u64, tier: Tier, fault: Option<String>) -> Result<u8> {
    let opts = VerifyOptions {
        fault,
        ..VerifyOptions::new(seed, tier)
    };
    let report = run_verification(&opts)?;
    println!("{report}");
    if report.all_passed() {
        Ok(0)
    } else {
        eprintln!("certification failed: {}", report.failing().join(", "));
        Ok(EXIT_VERIFY_FAILED)
    }
}

pub fn memory(m: u64, n: u64, r: Option<u64>) -> Result<u8> {
    if m == 0 || n == 0 || r == Some(0) {
        bail!("dimensions must be positive");
    }
    match r {
        Some(r) => println!("memory in floats for a {m}x{n} parameter, rank {r}"),
        None => println!("memory in floats for a {m}x{n} parameter"),
    }
    for kind in OptimizerKind::ALL {
        let cell = if kind.needs_rank() && r.is_none() {
            "requires r".to_string()
        } else {
            memory_estimate(kind, m, n, r)?.to_string()
        };
        println!("{:<10} {cell}", kind.name());
    }
    Ok(0)
}
