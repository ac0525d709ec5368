use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use attonet_core::arch::{bind_channels, validate, NetworkSpec, TensorShape};
use attonet_core::complexity::analyze;
use attonet_core::dot::to_dot;
use attonet_core::engine::io::{load_tensor, load_weights};
use attonet_core::engine::{forward, init_weights};
use attonet_core::explorer::{
    emit_family, explore, AccuracyEvaluator, CommandEvaluator, ExplorationState, Generator, Memoized, StepConfig,
    SyntheticEvaluator,
};
use attonet_core::netscore::{netscore, MetricConfig, MetricInputs};
use attonet_core::zoo::{build_attonet, build_prototype, PrototypeConfig, Variant};

#[derive(Parser)]
#[command(
    name = "attonet",
    version,
    about = "Build, analyze, score, run, and explore AttoNet-style networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct Output {
    /// Emit machine-readable JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Write a network spec: attonet-a..d or prototype.
    Build {
        #[arg(long)]
        network: String,
        /// Destination file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Print parameter and mult-add counts.
    Analyze {
        spec: PathBuf,
        /// Square input side; the head pool is resized to stay global.
        #[arg(long)]
        input: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// NetScore from raw counts.
    Score {
        /// Top-1 accuracy in percent.
        #[arg(long)]
        accuracy: f64,
        /// Parameter count.
        #[arg(long)]
        params: u64,
        /// Mult-add count.
        #[arg(long)]
        macs: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Class distribution for one input tensor.
    Infer {
        spec: PathBuf,
        #[arg(long, conflicts_with = "random_seed", required_unless_present = "random_seed")]
        weights: Option<PathBuf>,
        #[arg(long)]
        random_seed: Option<u64>,
        /// Tensor file.
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Seeded search over module widths; one JSON log line per generation.
    Explore {
        #[arg(long)]
        base: PathBuf,
        #[arg(long, default_value_t = 20)]
        generations: usize,
        #[arg(long, default_value_t = 16)]
        seeds: usize,
        #[arg(long, default_value_t = 0)]
        rng: u64,
        /// `synthetic` or `command:<path>`.
        #[arg(long, default_value = "synthetic")]
        evaluator: String,
        #[arg(long, default_value_t = 0.2)]
        scale: f64,
        #[arg(long, default_value_t = 0.5)]
        pressure: f64,
        #[arg(long, default_value_t = 0.25)]
        survivors: f64,
        /// Write this many explored networks, decreasing in size.
        #[arg(long, requires = "out_dir")]
        family: Option<usize>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Graphviz digraph with one node per layer.
    ExportDot {
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
}

fn load_spec(path: &Path) -> Result<NetworkSpec> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let net = NetworkSpec::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    let report = validate(&net);
    for issue in &report.issues {
        eprintln!("{issue}");
    }
    if !report.is_valid() {
        bail!("{} failed validation", path.display());
    }
    Ok(net)
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn build(network: &str, out: Option<&Path>, output: Output) -> Result<()> {
    let net = if network.eq_ignore_ascii_case("prototype") {
        build_prototype(&PrototypeConfig::default())
    } else {
        build_attonet(network.parse::<Variant>().map_err(anyhow::Error::msg)?)
    };
    let text = net.to_json() + "\n";
    match (out, output.json) {
        (Some(path), true) => {
            write_or_print(Some(path), &text)?;
            println!("{}", json!({ "name": net.name, "path": path, "digest": net.digest() }));
            Ok(())
        }
        _ => write_or_print(out, &text),
    }
}

fn millions(n: u64) -> String {
    format!("{:.1}", n as f64 / 1e6)
}

fn analyze_cmd(spec: &Path, input: Option<usize>, output: Output) -> Result<()> {
    let mut net = load_spec(spec)?;
    if let Some(side) = input {
        net = net.at_input(TensorShape::new(net.input_shape.channels, side, side))?;
    }
    let report = analyze(&net)?;
    if output.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
        return Ok(());
    }
    let mut out = io::stdout().lock();
    writeln!(out, "{} @ {}", net.name, report.input_shape)?;
    writeln!(out, "{:<18} {:>12} {:>14}", "layer", "params", "mult-adds")?;
    for c in &report.per_layer {
        writeln!(out, "{:<18} {:>12} {:>14}", c.layer.to_string(), c.params, c.mult_adds)?;
    }
    writeln!(
        out,
        "total params     {} ({} M)",
        report.total_params,
        millions(report.total_params)
    )?;
    writeln!(
        out,
        "total mult-adds  {} ({} M)",
        report.total_mult_adds,
        millions(report.total_mult_adds)
    )?;
    Ok(())
}

fn score(accuracy: f64, params: u64, macs: u64, output: Output) -> Result<()> {
    let u = netscore(
        &MetricInputs::from_counts(accuracy, params, macs),
        &MetricConfig::default(),
    )?;
    if output.json {
        println!(
            "{}",
            json!({ "netscore": u, "accuracy": accuracy, "params": params, "macs": macs })
        );
    } else {
        println!("{u:.2}");
    }
    Ok(())
}

fn infer(spec: &Path, weights: Option<&Path>, seed: Option<u64>, input: &Path, output: Output) -> Result<()> {
    let net = load_spec(spec)?;
    let bound = bind_channels(&net)?;
    let store = match (weights, seed) {
        (Some(path), _) => load_weights(path).with_context(|| format!("loading {}", path.display()))?,
        (None, Some(seed)) => init_weights(&bound, seed),
        (None, None) => bail!("either --weights or --random-seed is required"),
    };
    let x = load_tensor(input).with_context(|| format!("loading {}", input.display()))?;
    let probs = forward(&bound, &store, &x)?;
    if output.json {
        println!("{}", json!({ "probabilities": probs.data() }));
    } else {
        let mut out = io::stdout().lock();
        for p in probs.data() {
            writeln!(out, "{p}")?;
        }
    }
    Ok(())
}

enum Evaluator {
    Synthetic(SyntheticEvaluator),
    Command(Memoized<CommandEvaluator>),
}

impl Evaluator {
    fn parse(s: &str) -> Result<Self> {
        if s == "synthetic" {
            Ok(Evaluator::Synthetic(SyntheticEvaluator))
        } else if let Some(path) = s.strip_prefix("command:") {
            Ok(Evaluator::Command(Memoized::new(CommandEvaluator::new(path))))
        } else {
            bail!("unknown evaluator `{s}`; expected `synthetic` or `command:<path>`")
        }
    }

    fn get(&self) -> &(dyn AccuracyEvaluator + Sync) {
        match self {
            Evaluator::Synthetic(e) => e,
            Evaluator::Command(e) => e,
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn explore_cmd(
    base: &Path,
    generations: usize,
    seeds: usize,
    rng: u64,
    evaluator: &str,
    scale: f64,
    pressure: f64,
    survivors: f64,
    family: Option<usize>,
    out_dir: Option<&Path>,
) -> Result<()> {
    if !(survivors > 0.0 && survivors <= 1.0) {
        bail!("--survivors must be in (0, 1]");
    }
    let net = load_spec(base)?;
    let evaluator = Evaluator::parse(evaluator)?;
    let generator = Generator::from_network(&net, scale, pressure)?;
    let cfg = StepConfig {
        seeds_per_generation: seeds,
        survivor_fraction: survivors,
        ..Default::default()
    };
    let mut out = io::stdout().lock();
    let mut log_err = None;
    let state = explore(
        ExplorationState::new(generator, rng),
        evaluator.get(),
        &cfg,
        generations,
        |h| {
            let line = serde_json::to_string(&h.log_line()).expect("log line serializes");
            if let Err(e) = writeln!(out, "{line}").and_then(|_| out.flush()) {
                log_err.get_or_insert(e);
            }
        },
    )?;
    if let Some(e) = log_err {
        return Err(e.into());
    }
    if let (Some(count), Some(dir)) = (family, out_dir) {
        let nets = emit_family(&state, count)?;
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (i, n) in nets.iter().enumerate() {
            let path = dir.join(format!("{}-{}.json", i + 1, n.name));
            fs::write(&path, n.to_json() + "\n").with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn export_dot(spec: &Path, out: Option<&Path>, output: Output) -> Result<()> {
    let net = load_spec(spec)?;
    let text = to_dot(&bind_channels(&net)?);
    if output.json {
        if let Some(path) = out {
            write_or_print(Some(path), &text)?;
        }
        println!("{}", json!({ "dot": text, "nodes": net.layers().len() }));
        return Ok(());
    }
    write_or_print(out, &text)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Build { network, out, output } => build(&network, out.as_deref(), output),
        Command::Analyze { spec, input, output } => analyze_cmd(&spec, input, output),
        Command::Score {
            accuracy,
            params,
            macs,
            output,
        } => score(accuracy, params, macs, output),
        Command::Infer {
            spec,
            weights,
            random_seed,
            input,
            output,
        } => infer(&spec, weights.as_deref(), random_seed, &input, output),
        Command::Explore {
            base,
            generations,
            seeds,
            rng,
            evaluator,
            scale,
            pressure,
            survivors,
            family,
            out_dir,
            output: _,
        } => explore_cmd(
            &base,
            generations,
            seeds,
            rng,
            &evaluator,
            scale,
            pressure,
            survivors,
            family,
            out_dir.as_deref(),
        ),
        Command::ExportDot { spec, out, output } => export_dot(&spec, out.as_deref(), output),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
