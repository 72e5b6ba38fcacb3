use anyhow::{anyhow, bail, Context, Result};
use bestguess::io::{DistSpec, InstanceSpec, LpResultJson, MechSpec, OutcomeJson};
use bestguess::mech::TieRule;
use bestguess::oracle;
use bestguess::product::DiscreteKd;
use bestguess::rng;
use bestguess_cli::config::{default_out_dir, ExperimentConfig, SUITES};
use bestguess_cli::{gen, report, suites};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "bg",
    about = "Auction mechanism toolkit: oracles, simulations and verification suites"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance corpus
    Gen(GenArgs),
    /// Exact revenue oracles on an instance
    Oracle(OracleArgs),
    /// Run a mechanism on one bid matrix
    Mech(MechArgs),
    /// Monte Carlo estimation
    Mc(McArgs),
    /// Parameter sweeps
    Sweep(SweepArgs),
    /// Run a verification suite and emit its report
    Verify(VerifyArgs),
    /// Summarize previously emitted suite reports
    Report(ReportArgs),
}

#[derive(Args)]
struct CommonConfig {
    /// Config file (JSON or TOML)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root seed (required here or in the config file)
    #[arg(long)]
    seed: Option<u64>,
    /// Number of instances (overrides the suite default)
    #[arg(long)]
    instances: Option<usize>,
    /// Output directory (default: $BG_OUT_DIR or ./out)
    #[arg(long)]
    out: Option<PathBuf>,
}

impl CommonConfig {
    fn resolve(&self, suite: &str) -> Result<(bestguess_cli::config::ResolvedConfig, PathBuf)> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => {
                let seed = self
                    .seed
                    .ok_or_else(|| anyhow!("--seed is required when no config file is given"))?;
                ExperimentConfig::new(suite, seed)
            }
        };
        if !suite.is_empty() {
            cfg.suite = suite.to_string();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(n) = self.instances {
            cfg.n_instances = Some(n);
        }
        let out = self
            .out
            .clone()
            .or(cfg.out_dir.clone())
            .unwrap_or_else(default_out_dir);
        Ok((cfg.resolve()?, out))
    }
}

#[derive(Args)]
struct GenArgs {
    /// Suite whose corpus shape to generate
    #[arg(long, default_value = "theorem2")]
    suite: String,
    #[command(flatten)]
    common: CommonConfig,
}

#[derive(Args)]
struct OracleArgs {
    /// rev | revx | reva | dsic | bic | drev
    kind: String,
    /// Instance file (JSON or TOML)
    #[arg(long)]
    instance: PathBuf,
    /// Comma-separated exclusion thresholds for revx/reva
    #[arg(long)]
    beta: Option<String>,
}

#[derive(Args)]
struct MechArgs {
    /// run
    action: String,
    /// Mechanism descriptor JSON, e.g. '{"mech":"spb","w":1.5}'
    #[arg(long)]
    mech: String,
    /// Instance file
    #[arg(long)]
    instance: PathBuf,
    /// Bid matrix JSON, e.g. '[[3,1],[2,4]]'
    #[arg(long)]
    matrix: String,
    /// Seed for tie randomness
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct McArgs {
    /// estimate
    action: String,
    #[arg(long)]
    mech: String,
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long)]
    seed: u64,
    /// Write a CSV row (mech,w,mean,stderr,n,seed) here instead of stdout JSON
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// spb
    family: String,
    /// Distribution spec file or inline JSON
    #[arg(long)]
    dist: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    /// Comma-separated surcharge grid; default: 64 log-spaced points around
    /// the chosen surcharge
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite name
    suite: String,
    /// Read the corpus from this directory instead of generating it
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[command(flatten)]
    common: CommonConfig,
}

#[derive(Args)]
struct ReportArgs {
    /// Suite summary JSON files
    #[arg(long, required = true, num_args = 1..)]
    from: Vec<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(10);
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Mech(args) => cmd_mech(args),
        Command::Mc(args) => cmd_mc(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Report(args) => cmd_report(args),
    }
}

fn cmd_gen(args: GenArgs) -> Result<i32> {
    let (cfg, out) = args.common.resolve(&args.suite)?;
    let corpus = gen::gen_corpus(&cfg)?;
    let dir = out.join(format!("corpus-{}", cfg.suite));
    std::fs::create_dir_all(&dir)?;
    for spec in &corpus {
        let path = dir.join(format!("{}.json", spec.name));
        std::fs::write(&path, serde_json::to_string_pretty(spec)?)?;
    }
    println!(
        "wrote {} instances to {} (hash {})",
        corpus.len(),
        dir.display(),
        gen::corpus_hash(&corpus)
    );
    Ok(0)
}

fn load_instance(path: &PathBuf) -> Result<bestguess::io::Instance> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    Ok(InstanceSpec::from_str_auto(&text)?.build()?)
}

fn parse_beta(beta: &Option<String>, k: usize) -> Result<Vec<f64>> {
    match beta {
        None => Ok(vec![0.0; k]),
        Some(text) => {
            let v: Vec<f64> = text
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .context("parsing --beta")?;
            if v.len() != k {
                bail!("beta has {} entries, instance has {} items", v.len(), k);
            }
            Ok(v)
        }
    }
}

fn one_bidder_kd(inst: &bestguess::io::Instance) -> Result<DiscreteKd> {
    if inst.joint.n() != 1 {
        bail!("this oracle needs a 1-bidder instance");
    }
    Ok(inst.joint.conditional(0, &[])?)
}

fn cmd_oracle(args: OracleArgs) -> Result<i32> {
    let inst = load_instance(&args.instance)?;
    let k = inst.joint.k();
    let result: LpResultJson = match args.kind.as_str() {
        "rev" => (&oracle::rev_1bidder(&one_bidder_kd(&inst)?)?.lp).into(),
        "revx" => {
            let beta = parse_beta(&args.beta, k)?;
            (&oracle::rev_x(&one_bidder_kd(&inst)?, &beta)?.lp).into()
        }
        "reva" => {
            let beta = parse_beta(&args.beta, k)?;
            (&oracle::rev_a(&one_bidder_kd(&inst)?, &beta)?.lp).into()
        }
        "dsic" => (&oracle::rev_dsic(&inst.joint)?.lp).into(),
        "bic" => (&oracle::rev_bic(&inst.joint)?.lp).into(),
        "drev" => {
            let value = oracle::drev_1bidder(&one_bidder_kd(&inst)?)?;
            LpResultJson {
                value,
                status: "optimal".into(),
                tolerance: 0.0,
                max_residual: 0.0,
            }
        }
        other => bail!("unknown oracle '{other}' (rev|revx|reva|dsic|bic|drev)"),
    };
    println!("{}", serde_json::to_string_pretty(&result)?);
    Ok(0)
}

fn cmd_mech(args: MechArgs) -> Result<i32> {
    if args.action != "run" {
        bail!("unknown mech action '{}' (expected: run)", args.action);
    }
    let spec: MechSpec = serde_json::from_str(&args.mech).context("parsing --mech")?;
    let inst = load_instance(&args.instance)?;
    let rows: Vec<Vec<f64>> = serde_json::from_str(&args.matrix).context("parsing --matrix")?;
    let x = bestguess::ValuationMatrix::new(rows)?;
    let prep = bestguess::PreparedMech::prepare(&spec.build(), &inst.joint)?;
    let mut stream = rng::root(args.seed);
    let outcome = prep.run(&x, &mut stream)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&OutcomeJson::from(&outcome))?
    );
    Ok(0)
}

fn mc_csv_row(mech: &MechSpec, est: &bestguess::Estimate) -> String {
    let w = mech
        .build()
        .w()
        .map_or(String::new(), |w| format!("{w}"));
    format!(
        "{},{},{:.12},{:.12},{},{}\n",
        serde_json::to_string(mech).unwrap().replace(',', ";"),
        w,
        est.mean,
        est.stderr,
        est.n_samples,
        est.seed
    )
}

fn cmd_mc(args: McArgs) -> Result<i32> {
    if args.action != "estimate" {
        bail!("unknown mc action '{}' (expected: estimate)", args.action);
    }
    let spec: MechSpec = serde_json::from_str(&args.mech).context("parsing --mech")?;
    let inst = load_instance(&args.instance)?;
    let est = bestguess::estimate_revenue(&spec.build(), &inst.joint, args.samples, args.seed)?;
    match &args.csv {
        Some(path) => {
            let mut text = String::from("mech,w,mean,stderr,n,seed\n");
            text.push_str(&mc_csv_row(&spec, &est));
            std::fs::write(path, text)?;
            println!("wrote {}", path.display());
        }
        None => println!(
            "{}",
            serde_json::to_string_pretty(&serde_json::json!({
                "mean": est.mean,
                "stderr": est.stderr,
                "n_samples": est.n_samples,
                "seed": est.seed,
            }))?
        ),
    }
    Ok(0)
}

fn cmd_sweep(args: SweepArgs) -> Result<i32> {
    if args.family != "spb" {
        bail!("unknown sweep family '{}' (expected: spb)", args.family);
    }
    let text = if args.dist.trim_start().starts_with('{') {
        args.dist.clone()
    } else {
        std::fs::read_to_string(&args.dist)
            .with_context(|| format!("reading {}", args.dist))?
    };
    let spec: DistSpec = serde_json::from_str(&text)
        .or_else(|_| toml::from_str(&text))
        .context("parsing distribution spec")?;
    let f = spec.build()?;
    let grid: Vec<f64> = match &args.grid {
        Some(g) => g
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .context("parsing --grid")?,
        None => bestguess::mc::spb_w_grid(&f, args.n as u32, args.k as u32)?,
    };
    let sweep = bestguess::spb_sweep(
        &f,
        args.n,
        args.k,
        &grid,
        TieRule::UniformRandom,
        args.samples,
        args.seed,
    )?;
    let mut csv = String::from("mech,w,mean,stderr,n,seed\n");
    for r in &sweep.rows {
        csv.push_str(&format!(
            "spb,{},{:.12},{:.12},{},{}\n",
            r.w, r.estimate.mean, r.estimate.stderr, r.estimate.n_samples, r.estimate.seed
        ));
    }
    match &args.csv {
        Some(path) => {
            std::fs::write(path, &csv)?;
            println!("wrote {}", path.display());
        }
        None => print!("{csv}"),
    }
    let best = &sweep.rows[sweep.argmax];
    eprintln!(
        "argmax: w={} mean={:.6} stderr={:.2e}",
        best.w, best.estimate.mean, best.estimate.stderr
    );
    Ok(0)
}

fn cmd_verify(args: VerifyArgs) -> Result<i32> {
    let (cfg, out) = args.common.resolve(&args.suite)?;
    if !SUITES.contains(&cfg.suite.as_str()) {
        bail!("unknown suite {}", cfg.suite);
    }
    let corpus = match &args.corpus {
        None => None,
        Some(dir) => {
            let mut specs = Vec::new();
            let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("json"))
                .collect();
            paths.sort();
            for p in paths {
                let text = std::fs::read_to_string(&p)?;
                specs.push(InstanceSpec::from_str_auto(&text)?);
            }
            Some(specs)
        }
    };
    let outcome = suites::run(&cfg, corpus)?;
    let (csv_path, json_path) = report::emit(&outcome, &out)?;
    println!("{}", report::summary_line(&outcome));
    println!("report: {} {}", csv_path.display(), json_path.display());
    for v in outcome.violations.iter().take(20) {
        eprintln!("violation: {v}");
    }
    Ok(report::exit_code(&outcome))
}

fn cmd_report(args: ReportArgs) -> Result<i32> {
    let mut worst = 0i32;
    for path in &args.from {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        let outcome: suites::SuiteOutcome = serde_json::from_str(&text)
            .with_context(|| format!("parsing {}", path.display()))?;
        println!("{}", report::summary_line(&outcome));
        worst = worst.max(report::exit_code(&outcome));
    }
    Ok(worst)
}
