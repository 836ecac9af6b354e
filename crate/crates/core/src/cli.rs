use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{PromptStyle, RunConfig};
use crate::edoal::repair;
use crate::eval::{evaluate_manifest, load_manifest, report_table, reports_to_json};
use crate::gateway::{BackendKind, Gateway, GatewayError};
use crate::pipeline::{run_match, source_modules, write_artifacts, PipelineError};
use crate::rdf::load_ontology;
use crate::synthesis::{build_corpus, split_total, CorpusOptions, SynthesisError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_EMPTY: i32 = 2;
pub const EXIT_UNREPAIRABLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ontomatch", version, about = "LLM-assisted complex ontology matching toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Generation seed, also sent to the model backend.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Match prompt template: base or patterns.
    #[arg(long, global = true)]
    pub prompt_style: Option<PromptStyle>,
    /// Model backend: http or mock.
    #[arg(long, global = true)]
    pub backend: Option<BackendKind>,
    /// Mock fixture file (prompt hash to response).
    #[arg(long, global = true)]
    pub fixtures: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Match two ontologies and write final.edoal and report.json.
    Match { source: PathBuf, target: PathBuf },
    /// Generate a synthetic fine-tuning corpus.
    GenData {
        /// Total records, split in the default positive:empty ratio.
        #[arg(long, conflicts_with_all = ["n_pos", "n_neg"])]
        total: Option<usize>,
        /// Positive (matching) pairs.
        #[arg(long, requires = "n_neg")]
        n_pos: Option<usize>,
        /// Empty (disjoint) pairs.
        #[arg(long, requires = "n_pos")]
        n_neg: Option<usize>,
    },
    /// Repair an alignment document.
    Repair {
        input: PathBuf,
        /// Write the repaired document here instead of stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Score system alignments against references listed in a JSON manifest.
    Eval { manifest: PathBuf },
    /// Extract one module per anchor of an ontology.
    Modules { ontology: PathBuf },
}

fn load_config(g: &GlobalOpts) -> Result<RunConfig, String> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p).map_err(|e| e.to_string())?,
        None => RunConfig::default(),
    };
    cfg.gateway.apply_env();
    if let Some(s) = g.seed {
        cfg.seed = s;
        cfg.gateway.seed = Some(s);
    }
    if let Some(p) = g.prompt_style {
        cfg.prompt_style = p;
    }
    if let Some(b) = g.backend {
        cfg.gateway.backend = b;
    }
    if let Some(f) = &g.fixtures {
        cfg.gateway.fixtures = Some(f.clone());
    }
    cfg.check().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn fail(msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    EXIT_INPUT
}

fn gateway_message(e: &GatewayError) -> String {
    match e {
        GatewayError::NoFixture(hash) => format!("no mock fixture for prompt hash {hash}"),
        other => other.to_string(),
    }
}

pub fn run(cli: Cli) -> i32 {
    let cfg = match load_config(&cli.global) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let out = cli.global.out.as_path();
    match cli.command {
        Command::Match { source, target } => cmd_match(&source, &target, &cfg, out),
        Command::GenData { total, n_pos, n_neg } => {
            let (p, n) = match (total, n_pos, n_neg) {
                (_, Some(p), Some(n)) => (p, n),
                (t, _, _) => split_total(t.unwrap_or(10)),
            };
            cmd_gen_data(p, n, &cfg, out)
        }
        Command::Repair { input, output } => cmd_repair(&input, output.as_deref()),
        Command::Eval { manifest } => cmd_eval(&manifest, out),
        Command::Modules { ontology } => cmd_modules(&ontology, &cfg, out),
    }
}

fn gateway(cfg: &RunConfig) -> Result<Gateway, i32> {
    Gateway::from_config(cfg.gateway.clone()).map_err(|e| fail(gateway_message(&e)))
}

pub fn cmd_match(source: &Path, target: &Path, cfg: &RunConfig, out: &Path) -> i32 {
    let (src, tgt) = match (load_ontology(source), load_ontology(target)) {
        (Ok(s), Ok(t)) => (s, t),
        (Err(e), _) => return fail(format!("{}: {e}", source.display())),
        (_, Err(e)) => return fail(format!("{}: {e}", target.display())),
    };
    let gw = match gateway(cfg) {
        Ok(g) => g,
        Err(code) => return code,
    };
    let result = match run_match(&src, &tgt, cfg, &gw) {
        Ok(r) => r,
        Err(PipelineError::Gateway(e)) => return fail(gateway_message(&e)),
        Err(e) => return fail(e),
    };
    let run_dir = match write_artifacts(out, &result) {
        Ok(d) => d,
        Err(e) => return fail(e),
    };
    let r = &result.report;
    println!(
        "{} tasks, {} repaired, {} invalid, {} dropped; {} cells ({} duplicates removed); transcripts in {}",
        r.tasks,
        r.repaired,
        r.invalid,
        r.dropped_tasks,
        r.final_cells,
        r.duplicates_removed,
        run_dir.display()
    );
    if result.outcomes.iter().all(|o| o.alignment.is_none()) {
        eprintln!("no valid partial alignment");
        return EXIT_EMPTY;
    }
    EXIT_OK
}

pub fn cmd_gen_data(n_pos: usize, n_neg: usize, cfg: &RunConfig, out: &Path) -> i32 {
    let gw = match gateway(cfg) {
        Ok(g) => g,
        Err(code) => return code,
    };
    let opts = CorpusOptions { n_pos, n_neg, seed0: cfg.seed, max_depth: cfg.max_depth };
    match build_corpus(&opts, &gw, out) {
        Ok(m) => {
            println!(
                "{} records requested ({} positive, {} empty); {} written, {} rejected; valid rate {:.3}",
                m.total, m.positives, m.empties, m.emitted, m.rejected, m.valid_rate
            );
            EXIT_OK
        }
        Err(SynthesisError::Gateway(e)) => fail(gateway_message(&e)),
        Err(e) => fail(e),
    }
}

pub fn cmd_repair(input: &Path, output: Option<&Path>) -> i32 {
    let text = match std::fs::read_to_string(input) {
        Ok(t) => t,
        Err(e) => return fail(format!("{}: {e}", input.display())),
    };
    let (fixed, report) = repair(&text);
    let report_json = serde_json::to_string_pretty(&report).unwrap_or_default();
    match output {
        Some(p) => {
            if let Err(e) = std::fs::write(p, &fixed) {
                return fail(format!("{}: {e}", p.display()));
            }
            println!("{report_json}");
        }
        None => {
            print!("{fixed}");
            eprintln!("{report_json}");
        }
    }
    if report.valid_after {
        EXIT_OK
    } else {
        eprintln!("document could not be repaired");
        EXIT_UNREPAIRABLE
    }
}

pub fn cmd_eval(manifest: &Path, out: &Path) -> i32 {
    let reports = match load_manifest(manifest).and_then(|m| evaluate_manifest(&m)) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let table = report_table(&reports);
    if let Err(e) = std::fs::create_dir_all(out)
        .and_then(|_| std::fs::write(out.join("eval.txt"), &table))
        .and_then(|_| std::fs::write(out.join("eval.json"), reports_to_json(&reports)))
    {
        return fail(format!("{}: {e}", out.display()));
    }
    print!("{table}");
    EXIT_OK
}

pub fn cmd_modules(ontology: &Path, cfg: &RunConfig, out: &Path) -> i32 {
    let graph = match load_ontology(ontology) {
        Ok(g) => g,
        Err(e) => return fail(format!("{}: {e}", ontology.display())),
    };
    let modules = match source_modules(&graph, cfg) {
        Ok(m) => m,
        Err(e) => return fail(e),
    };
    if let Err(e) = std::fs::create_dir_all(out) {
        return fail(format!("{}: {e}", out.display()));
    }
    for (i, m) in modules.iter().enumerate() {
        let p = out.join(m.file_name(i));
        if let Err(e) = std::fs::write(&p, m.to_turtle()) {
            return fail(format!("{}: {e}", p.display()));
        }
    }
    println!("{} modules written to {}", modules.len(), out.display());
    EXIT_OK
}
