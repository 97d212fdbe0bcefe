mod config;
mod run;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use daha_core::macpoly::MacCalc;
use daha_core::rootdata::{build_root_datum, wt, Family, LatticeChoice};

use config::{Format, RootSystemCfg, RunConfig, Task};

#[derive(Parser)]
#[command(name = "whittaker-daha", version, about = "Macdonald polynomials, global q-Whittaker functions and identity checks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the tasks of a configuration and write a report.
    Run {
        /// JSON run configuration; the flags below override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        task: Option<Task>,
        /// Root system family (A–G).
        #[arg(long = "type")]
        family: Option<Family>,
        #[arg(long)]
        rank: Option<usize>,
        /// Lattice B: P or Q.
        #[arg(long)]
        lattice: Option<LatticeChoice>,
        /// Truncation order in v = q^{1/(2m̃)}.
        #[arg(long)]
        cutoff: Option<i32>,
        #[arg(long = "box")]
        sweep_box: Option<i32>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
        #[arg(long)]
        threads: Option<usize>,
        /// Record wall-clock times per check.
        #[arg(long)]
        timing: bool,
    },
    /// Print one polynomial in canonical text form.
    Poly {
        #[arg(long, value_enum)]
        kind: PolyKind,
        /// Weight in fundamental-weight coordinates, e.g. -1,-1.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        weight: Vec<i32>,
        #[arg(long = "type", default_value = "A")]
        family: Family,
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long, default_value = "P")]
        lattice: LatticeChoice,
        /// Coordinate bound for accepted weights.
        #[arg(long = "box", default_value_t = 8)]
        sweep_box: i32,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PolyKind {
    #[value(name = "E")]
    E,
    #[value(name = "P")]
    P,
    #[value(name = "barE")]
    BarE,
    #[value(name = "barP")]
    BarP,
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<bool> {
    match Cli::parse().cmd {
        Cmd::Run { config, task, family, rank, lattice, cutoff, sweep_box, out, format, threads, timing } => {
            let mut cfg = match &config {
                Some(p) => RunConfig::load(p)?,
                None => {
                    let (Some(family), Some(rank), Some(task)) = (family, rank, task) else {
                        bail!("without --config, --type, --rank and --task are required");
                    };
                    RunConfig {
                        root_system: RootSystemCfg { family, rank, lattice: lattice.unwrap_or(LatticeChoice::P) },
                        task,
                        sweep_box: 2,
                        cutoff: None,
                        numeric: None,
                        output: Default::default(),
                        parallelism: None,
                        record_timing: false,
                    }
                }
            };
            if let Some(t) = task {
                cfg.task = t;
            }
            if let Some(f) = family {
                cfg.root_system.family = f;
            }
            if let Some(r) = rank {
                cfg.root_system.rank = r;
            }
            if let Some(l) = lattice {
                cfg.root_system.lattice = l;
            }
            if cutoff.is_some() {
                cfg.cutoff = cutoff;
            }
            if let Some(b) = sweep_box {
                cfg.sweep_box = b;
            }
            if out.is_some() {
                cfg.output.path = out;
            }
            if let Some(f) = format {
                cfg.output.format = f;
            }
            if threads.is_some() {
                cfg.parallelism = threads;
            }
            cfg.record_timing |= timing;
            cfg.validate()?;
            let report = run::run(&cfg)?;
            let text = render(&report, cfg.output.format)?;
            match &cfg.output.path {
                Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
                None => std::io::stdout().write_all(text.as_bytes())?,
            }
            Ok(report.summary.failed == 0)
        }
        Cmd::Poly { kind, weight, family, rank, lattice, sweep_box } => {
            let rank = rank.unwrap_or(weight.len());
            if weight.len() != rank {
                bail!("weight has {} coordinates, rank is {rank}", weight.len());
            }
            if weight.iter().any(|c| c.abs() > sweep_box) {
                bail!("weight {weight:?} lies outside the box of size {sweep_box}");
            }
            let rd = build_root_datum(family, rank, lattice)?;
            let mc = MacCalc::new(&rd);
            let b = wt(&weight);
            let p = match kind {
                PolyKind::E => mc.nonsym_e_intertwiner(&b),
                PolyKind::P => mc.sym_p(&b),
                PolyKind::BarE => mc.bar_e_chain(&b),
                PolyKind::BarP => mc.bar_p(&b),
            }?;
            println!("{}", p.to_text(&rd));
            Ok(true)
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn render(r: &run::Report, f: Format) -> Result<String> {
    Ok(match f {
        Format::Json => serde_json::to_string_pretty(r)? + "\n",
        Format::Csv => {
            let mut s = String::from("identity_id,paper_anchor,status,cases,first_mismatch\n");
            for e in &r.entries {
                s += &format!(
                    "{},{},{},{},{}\n",
                    e.identity_id,
                    e.paper_anchor,
                    csv_field(&e.status),
                    e.cases,
                    csv_field(e.first_mismatch.as_deref().unwrap_or(""))
                );
            }
            for p in &r.polynomials {
                s += &format!("{},polynomial,{:?},,{}\n", p.kind, p.weight, csv_field(&p.text));
            }
            s
        }
        Format::Text => {
            let mut s = String::new();
            for e in &r.entries {
                s += &format!("{:<22} {:<14} {} ({} cases)", e.identity_id, e.paper_anchor, e.status, e.cases);
                if let Some(m) = &e.first_mismatch {
                    s += &format!(": {m}");
                }
                s.push('\n');
            }
            for p in &r.polynomials {
                s += &format!("{} {:?}: {}\n", p.kind, p.weight, p.text);
            }
            s += &format!("passed {}, failed {}, skipped {}\n", r.summary.passed, r.summary.failed, r.summary.skipped);
            s
        }
    })
}
