use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use wbmult::corpus::{
    completeness, load_case, load_corpus, load_tables, verify_case, verify_corpus, verify_tables, CellStatus, VerifyOptions,
};
use wbmult::numeric::{rearrangement_stress, singular_extremes, truncate_matrix, StressStrategy};
use wbmult::sequence::{classify_sequence, SequenceSpec};

#[derive(Parser)]
#[command(name = "wbmult", version, about = "Multipliers of weighted-basis sequences")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Classify a sequence file.
    Classify { seqfile: PathBuf },
    /// Analyze one case and check it against its expectations.
    Analyze {
        case: PathBuf,
        /// Skip the floating point cross-checks.
        #[arg(long)]
        exact_only: bool,
    },
    /// Verify every case and every table cell.
    VerifyTables {
        #[arg(long, default_value = "corpus")]
        corpus: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        probes: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the N x N section of a case's multiplier.
    Truncate {
        case: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        budget: i64,
        #[arg(long)]
        export_matrix: Option<PathBuf>,
    },
    /// Partial sums of the positive rearrangement.
    Stress {
        case: PathBuf,
        #[arg(long)]
        blocks: i64,
    },
}

enum Fail {
    Usage(String),
    Check(String),
}

impl<E: std::fmt::Display> From<E> for Fail {
    fn from(e: E) -> Self {
        Fail::Usage(e.to_string())
    }
}

fn classify(path: &Path) -> Result<(), Fail> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {}", path.display(), e))?;
    let spec = SequenceSpec::parse(&text)?;
    println!("{}", classify_sequence(&spec)?);
    Ok(())
}

fn analyze(path: &Path, exact_only: bool) -> Result<(), Fail> {
    let case = load_case(path)?;
    let opts = VerifyOptions { numeric: !exact_only, ..VerifyOptions::default() };
    let report = verify_case(&case, &opts);
    println!("{}  {}", report.id, report.cell);
    for a in report.forward.iter().chain(report.reverse.iter()) {
        println!("  uc {}, {}, operator {}", a.uc, a.inv, a.operator);
        for c in &a.certificates {
            println!("    {}", c);
        }
    }
    for c in &report.checks {
        println!("  [{}] {}: expected {}, got {}", if c.pass { "ok" } else { "FAIL" }, c.what, c.expected, c.got);
    }
    if report.pass {
        Ok(())
    } else {
        Err(Fail::Check(format!("{} fails", report.id)))
    }
}

fn verify(dir: &Path, json: Option<&Path>, probes: usize, seed: Option<u64>) -> Result<(), Fail> {
    let cases = load_corpus(dir)?;
    let rows = load_tables(&dir.join("tables.toml"))?;
    let mut opts = VerifyOptions { probes, ..VerifyOptions::default() };
    if let Some(s) = seed {
        opts.seed = s;
    }
    let missing = completeness(&rows, &cases);
    let reports = verify_corpus(&cases, &opts);
    let (cells, summary) = verify_tables(&rows, &cases, &reports, &opts);
    for r in reports.iter().filter(|r| !r.pass) {
        println!("case {} FAILS", r.id);
        for c in r.checks.iter().filter(|c| !c.pass) {
            println!("  {}: expected {}, got {}", c.what, c.expected, c.got);
        }
    }
    for c in cells.iter().filter(|c| c.status != CellStatus::Confirmed) {
        println!("{} {}: {}", c.cell, c.claim, c.status);
    }
    for id in &missing {
        println!("missing case {}", id);
    }
    println!(
        "{} tables, {} cells: {} confirmed, {} violated, {} uncovered; {}/{} cases pass",
        summary.tables, summary.cells, summary.confirmed, summary.violated, summary.uncovered, summary.cases_passed, summary.cases
    );
    if let Some(out) = json {
        let doc = serde_json::json!({ "summary": summary, "missing": missing, "cases": reports, "cells": cells });
        std::fs::write(out, serde_json::to_string_pretty(&doc)? + "\n").map_err(|e| format!("{}: {}", out.display(), e))?;
    }
    let ok = missing.is_empty() && summary.confirmed == summary.cells && summary.cases_passed == summary.cases;
    if ok {
        Ok(())
    } else {
        Err(Fail::Check("verification failed".into()))
    }
}

fn truncate(path: &Path, n: usize, budget: i64, export: Option<&Path>) -> Result<(), Fail> {
    let case = load_case(path)?;
    let t = truncate_matrix(&case.m, &case.phi, &case.psi, n, budget)?;
    let (lo, hi) = singular_extremes(&t)?;
    println!("N={} entries={} smin={:.16e} smax={:.16e}", t.n, t.entries_used, lo, hi);
    match t.tail_bound {
        Some(b) => println!("tail bound {:e}", b),
        None => println!("tail bound unavailable"),
    }
    if let Some(p) = export {
        t.write_csv(p)?;
    }
    Ok(())
}

fn stress(path: &Path, blocks: i64) -> Result<(), Fail> {
    let case = load_case(path)?;
    let f = case.stress.as_ref().ok_or_else(|| format!("{}: case has no stress coordinates", path.display()))?;
    for strategy in [StressStrategy::PositiveOnly, StressStrategy::AlternatingWorst] {
        let v = rearrangement_stress(&case.m, &case.phi, &case.psi, f, strategy, blocks)?;
        println!("{:?} T={}: {:.12}", strategy, blocks, v);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = match &cli.cmd {
        Cmd::Classify { seqfile } => classify(seqfile),
        Cmd::Analyze { case, exact_only } => analyze(case, *exact_only),
        Cmd::VerifyTables { corpus, json, probes, seed } => verify(corpus, json.as_deref(), *probes, *seed),
        Cmd::Truncate { case, n, budget, export_matrix } => truncate(case, *n, *budget, export_matrix.as_deref()),
        Cmd::Stress { case, blocks } => stress(case, *blocks),
    };
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail::Check(msg)) => {
            eprintln!("{}", msg);
            ExitCode::from(1)
        }
        Err(Fail::Usage(msg)) => {
            eprintln!("error: {}", msg);
            ExitCode::from(2)
        }
    }
}
