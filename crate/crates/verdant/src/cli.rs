//! Command-line front end: `gen-multipliers`, `evaluate`, `optimize`.
//!
//! Every artifact embeds a run manifest; re-running a command with the
//! manifest's arguments reproduces the numeric body byte for byte. Exit
//! codes: 0 success, 2 infeasible, 1 any other error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::approxmul::library::{load_library, write_library, VariantLibrary, VariantRecord};
use crate::approxmul::metrics::ErrorMetrics;
use crate::approxmul::netlist::{build_exact_multiplier, GateAreaTable};
use crate::approxmul::search::{pareto_search, Provenance, SearchParams};
use crate::accuracy::accuracy_drop;
use crate::carbon::embodied_carbon;
use crate::config::{resolve_workload, Config, NodeConfig};
use crate::error::{Error, Result};
use crate::manifest::RunManifest;
use crate::optimizer::{
    exhaustive_search, optimize, Chromosome, Constraints, EvalContext, EvalResult, GaParams,
    EXHAUSTIVE_BUDGET,
};
use crate::perf::{accelerator_area, workload_latency, AcceleratorConfig, LayerShape, PerfResult};

#[derive(Debug, Parser)]
#[command(name = "verdant", version, about = "Carbon-aware DNN accelerator design exploration")]
pub struct Cli {
    /// Technology config TOML (default: $VERDANT_CONFIG/tech.toml, else built-in).
    #[arg(long, global = true)]
    pub tech: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search approximate multipliers; write an (area, MRED) Pareto library.
    GenMultipliers(GenMultipliersArgs),
    /// Sweep PE counts x variants; write a plot-ready CSV.
    Evaluate(EvaluateArgs),
    /// Find the minimum-CDP design under FPS and accuracy constraints.
    Optimize(OptimizeArgs),
}

#[derive(Debug, Args)]
pub struct GenMultipliersArgs {
    /// Operand bitwidth of the multipliers.
    #[arg(long, default_value_t = 8)]
    pub bitwidth: u32,
    /// Population size of the multi-objective search.
    #[arg(long, default_value_t = 64)]
    pub pop: usize,
    /// Generations of the multi-objective search.
    #[arg(long, default_value_t = 50)]
    pub gens: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output library path (JSON).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Built-in network (vgg16, vgg19, resnet50, resnet152) or workload TOML.
    #[arg(long)]
    pub workload: String,
    /// Technology node in nm.
    #[arg(long, default_value_t = 7)]
    pub node: u32,
    /// Variant library JSON; defaults to an exact-only 8-bit library.
    #[arg(long)]
    pub variants: Option<PathBuf>,
    /// Restrict rows to one variant id (e.g. "exact", "v003").
    #[arg(long)]
    pub variant: Option<String>,
    /// Comma-separated PE counts; defaults to the config's pe_sizes.
    #[arg(long)]
    pub sweep: Option<String>,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// Built-in network (vgg16, vgg19, resnet50, resnet152) or workload TOML.
    #[arg(long)]
    pub workload: String,
    /// Technology node in nm.
    #[arg(long, default_value_t = 7)]
    pub node: u32,
    /// Variant library JSON; defaults to an exact-only 8-bit library.
    #[arg(long)]
    pub variants: Option<PathBuf>,
    /// Minimum frames per second.
    #[arg(long, default_value_t = 30.0)]
    pub fps_min: f64,
    /// Maximum tolerated top-1 accuracy drop, percentage points.
    #[arg(long, default_value_t = 1.0)]
    pub drop_max: f64,
    /// GA population size.
    #[arg(long, default_value_t = 48)]
    pub pop: usize,
    /// GA generations.
    #[arg(long, default_value_t = 40)]
    pub gens: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Scan the whole space instead of running the GA.
    #[arg(long)]
    pub exhaustive: bool,
    /// Output report path (text).
    #[arg(long)]
    pub out: PathBuf,
}

/// Runs a parsed command line; returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let tech = cli.tech.as_deref();
    let outcome = match &cli.command {
        Command::GenMultipliers(args) => cmd_gen_multipliers(tech, args),
        Command::Evaluate(args) => cmd_evaluate(tech, args),
        Command::Optimize(args) => cmd_optimize(tech, args),
    };
    match outcome {
        Ok(()) => 0,
        Err(err @ Error::Infeasible(_)) => {
            eprintln!("error: {err}");
            2
        }
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    }
}

fn tech_flag(tech: Option<&Path>) -> String {
    match tech {
        Some(path) => format!(" --tech {}", path.display()),
        None => String::new(),
    }
}

pub fn cmd_gen_multipliers(tech: Option<&Path>, args: &GenMultipliersArgs) -> Result<()> {
    let (config, tech_source) = Config::resolve(tech)?;
    let base = build_exact_multiplier(args.bitwidth)?;
    let params = SearchParams {
        population: args.pop,
        generations: args.gens,
        crossover_p: 0.9,
        mutation_p: None,
        seed: args.seed,
    };
    let front = pareto_search(&base, &config.gate_area, &params)?;
    let library = VariantLibrary::from_front(args.bitwidth, &front);

    let command = format!(
        "gen-multipliers --bitwidth {} --pop {} --gens {} --seed {} --out {}{}",
        args.bitwidth,
        args.pop,
        args.gens,
        args.seed,
        args.out.display(),
        tech_flag(tech),
    );
    let manifest = RunManifest::new(command, Some(args.seed), vec![tech_source]);
    write_library(&args.out, &manifest, &library)?;

    let areas: Vec<f64> = library.variants.iter().map(|v| v.area).collect();
    let mreds: Vec<f64> = library.variants.iter().map(|v| v.error.mred).collect();
    let min = |xs: &[f64]| xs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |xs: &[f64]| xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    println!(
        "wrote {} variants to {} (area {}..{} GE, MRED {}..{})",
        library.variants.len(),
        args.out.display(),
        min(&areas),
        max(&areas),
        min(&mreds),
        max(&mreds),
    );
    Ok(())
}

/// Loads the given library, or synthesizes one holding only the exact
/// multiplier at the default bitwidth.
fn load_or_default_library(
    path: Option<&Path>,
    gate_area: &GateAreaTable,
) -> Result<(VariantLibrary, Option<String>)> {
    match path {
        Some(path) => {
            let (_, library) = load_library(path)?;
            Ok((library, Some(path.display().to_string())))
        }
        None => {
            let netlist = build_exact_multiplier(8)?;
            let record = VariantRecord {
                id: "exact".to_string(),
                area: netlist.area(gate_area),
                error: ErrorMetrics::ZERO,
                provenance: Provenance::exact(),
                netlist: netlist.to_text(),
            };
            Ok((VariantLibrary { bitwidth: 8, variants: vec![record] }, None))
        }
    }
}

fn parse_sweep(sweep: &str) -> Result<Vec<u64>> {
    let mut sizes = Vec::new();
    for token in sweep.split(',') {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        let pes: u64 = token
            .parse()
            .map_err(|e| Error::InvalidArgument(format!("bad PE count {token:?}: {e}")))?;
        sizes.push(pes);
    }
    if sizes.is_empty() {
        return Err(Error::InvalidArgument("--sweep lists no PE counts".into()));
    }
    Ok(sizes)
}

/// Cycle-optimal grid for `pes` PEs at baseline memory provisioning.
fn best_grid(
    layers: &[LayerShape],
    config: &Config,
    node: &NodeConfig,
    pes: u64,
) -> Result<Option<(AcceleratorConfig, PerfResult)>> {
    let mut best: Option<(AcceleratorConfig, PerfResult)> = None;
    for (pe_width, pe_height) in
        crate::perf::aspect_pairs(pes, config.accelerator.max_aspect_ratio)
    {
        let cfg = AcceleratorConfig {
            pe_width,
            pe_height,
            regfile_bytes_per_pe: config.accelerator.regfile_base_bytes_per_pe,
            global_buffer_bytes: config.accelerator.gbuf_base_bytes_per_pe * pes,
            dram_bw_bytes_per_cycle: node.perf.dram_bw_bytes_per_cycle,
            clock_hz: node.perf.clock_hz,
        };
        match workload_latency(layers, &cfg) {
            Ok(perf) => {
                if best.as_ref().is_none_or(|(_, b)| perf.cycles < b.cycles) {
                    best = Some((cfg, perf));
                }
            }
            Err(Error::InfeasibleMapping(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(best)
}

pub fn cmd_evaluate(tech: Option<&Path>, args: &EvaluateArgs) -> Result<()> {
    let (config, tech_source) = Config::resolve(tech)?;
    let (network, layers) = resolve_workload(&args.workload)?;
    let node = config.node(args.node)?;
    let (library, library_path) = load_or_default_library(args.variants.as_deref(), &config.gate_area)?;
    let accuracy = config.accuracy_model()?;

    let selected: Vec<&VariantRecord> = match &args.variant {
        Some(id) => vec![library.find(id)?],
        None => library.variants.iter().collect(),
    };
    let sweep = match &args.sweep {
        Some(s) => parse_sweep(s)?,
        None => config.accelerator.pe_sizes.clone(),
    };

    let mut command = format!(
        "evaluate --workload {} --node {} --out {}",
        args.workload,
        args.node,
        args.out.display()
    );
    if let Some(path) = &args.variants {
        write!(command, " --variants {}", path.display()).unwrap();
    }
    if let Some(id) = &args.variant {
        write!(command, " --variant {id}").unwrap();
    }
    if let Some(sweep) = &args.sweep {
        write!(command, " --sweep {sweep}").unwrap();
    }
    command.push_str(&tech_flag(tech));
    let mut inputs = vec![tech_source];
    inputs.extend(library_path);
    if Path::new(&args.workload).exists() {
        inputs.push(args.workload.clone());
    }
    let manifest = RunManifest::new(command, None, inputs);

    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record(["pes", "area_mm2", "embodied_g", "fps", "latency_s", "drop_pct", "cdp", "variant"])
        .map_err(|e| Error::Parse(format!("csv: {e}")))?;
    let mut rows = 0usize;
    for &pes in &sweep {
        let Some((cfg, perf)) = best_grid(&layers, &config, node, pes)? else {
            eprintln!("note: skipping {pes} PEs (no feasible layer mapping)");
            continue;
        };
        for variant in &selected {
            let die = accelerator_area(&cfg, variant.area, &node.area)?;
            let carbon = embodied_carbon(die, &node.tech())?;
            let drop = accuracy_drop(variant, &network, &accuracy)?;
            let cdp = carbon.embodied * perf.latency_s;
            csv.write_record([
                pes.to_string(),
                die.to_string(),
                carbon.embodied.to_string(),
                perf.fps.to_string(),
                perf.latency_s.to_string(),
                drop.to_string(),
                cdp.to_string(),
                variant.id.clone(),
            ])
            .map_err(|e| Error::Parse(format!("csv: {e}")))?;
            rows += 1;
        }
    }
    if rows == 0 {
        return Err(Error::InfeasibleMapping(
            "no swept PE count can map the workload".into(),
        ));
    }
    let body = csv
        .into_inner()
        .map_err(|e| Error::Parse(format!("csv: {e}")))?;
    let mut out = manifest.comment_block().into_bytes();
    out.extend_from_slice(&body);
    fs::write(&args.out, out).map_err(Error::Io)?;
    println!("wrote {rows} rows to {}", args.out.display());
    Ok(())
}

pub fn cmd_optimize(tech: Option<&Path>, args: &OptimizeArgs) -> Result<()> {
    let (config, tech_source) = Config::resolve(tech)?;
    let (network, layers) = resolve_workload(&args.workload)?;
    let node = config.node(args.node)?;
    let (library, library_path) = load_or_default_library(args.variants.as_deref(), &config.gate_area)?;
    let accuracy = config.accuracy_model()?;
    let tech_params = node.tech();
    let constraints = Constraints { fps_min: args.fps_min, drop_max: args.drop_max };
    let ctx = EvalContext::new(
        &layers,
        &network,
        &tech_params,
        &node.area,
        config.accelerator_base(node),
        &library.variants,
        &accuracy,
        constraints,
        config.search_space(),
    )?;

    let mut command = format!(
        "optimize --workload {} --node {} --fps-min {} --drop-max {} --pop {} --gens {} --seed {} --out {}",
        args.workload,
        args.node,
        args.fps_min,
        args.drop_max,
        args.pop,
        args.gens,
        args.seed,
        args.out.display()
    );
    if let Some(path) = &args.variants {
        write!(command, " --variants {}", path.display()).unwrap();
    }
    if args.exhaustive {
        command.push_str(" --exhaustive");
    }
    command.push_str(&tech_flag(tech));
    let mut inputs = vec![tech_source];
    inputs.extend(library_path);
    if Path::new(&args.workload).exists() {
        inputs.push(args.workload.clone());
    }
    let manifest = RunManifest::new(command, Some(args.seed), inputs);

    let searched = if args.exhaustive {
        exhaustive_search(&ctx, EXHAUSTIVE_BUDGET).map(|best| (best, Vec::new()))
    } else {
        let params = GaParams {
            population: args.pop,
            generations: args.gens,
            seed: args.seed,
            ..GaParams::default()
        };
        optimize(&ctx, &params).map(|outcome| (outcome.best, outcome.history))
    };

    match searched {
        Ok(((chromosome, eval), history)) => {
            let report =
                render_report(&manifest, args, &network, node, &ctx, &chromosome, &eval, &history)?;
            fs::write(&args.out, report.as_bytes()).map_err(Error::Io)?;
            println!(
                "best design: {} PEs, variant {}, embodied {} g, cdp {} g*s ({})",
                ctx.space.pe_sizes[chromosome.pe_size_idx],
                ctx.variants[chromosome.variant_idx].id,
                eval.embodied_g,
                eval.cdp,
                args.out.display()
            );
            Ok(())
        }
        Err(err @ Error::Infeasible(_)) => {
            // The report file documents the failed search too.
            let mut text = manifest.comment_block();
            let _ = write!(
                text,
                "result: infeasible\nnetwork: {network}\nnode: {}nm\nconstraints: fps_min={} drop_max={}\n{err}\n",
                node.node_nm, args.fps_min, args.drop_max
            );
            fs::write(&args.out, text.as_bytes()).map_err(Error::Io)?;
            Err(err)
        }
        Err(err) => Err(err),
    }
}

/// The search-independent reference point: the best exact-multiplier,
/// baseline-memory design meeting `fps_min`, by CDP.
fn exact_reference(
    ctx: &EvalContext,
) -> Result<Option<(Chromosome, EvalResult)>> {
    let mut best: Option<(Chromosome, EvalResult)> = None;
    let exact_idx = match ctx.variants.iter().position(|v| v.is_exact()) {
        Some(idx) => idx,
        None => return Ok(None),
    };
    for pe_size_idx in 0..ctx.space.pe_sizes.len() {
        let n_aspects = ctx.space.aspects(ctx.space.pe_sizes[pe_size_idx]).len();
        let template = ctx.baseline(pe_size_idx)?;
        for aspect_idx in 0..n_aspects {
            let ch = Chromosome { aspect_idx, variant_idx: exact_idx, ..template };
            let ev = ctx.evaluate(&ch)?;
            if ev.fps >= ctx.constraints.fps_min
                && best.as_ref().is_none_or(|(_, b)| ev.cdp < b.cdp)
            {
                best = Some((ch, ev));
            }
        }
    }
    Ok(best)
}

#[allow(clippy::too_many_arguments)]
fn render_report(
    manifest: &RunManifest,
    args: &OptimizeArgs,
    network: &str,
    node: &NodeConfig,
    ctx: &EvalContext,
    chromosome: &Chromosome,
    eval: &EvalResult,
    history: &[f64],
) -> Result<String> {
    let (cfg, variant) = ctx.decode(chromosome)?;
    let mut text = manifest.comment_block();
    let out = &mut text;
    let _ = writeln!(out, "result: feasible");
    let _ = writeln!(out, "network: {network}");
    let _ = writeln!(out, "node: {}nm", node.node_nm);
    let _ = writeln!(out, "constraints: fps_min={} drop_max={}", args.fps_min, args.drop_max);
    let _ = writeln!(out, "design:");
    let _ = writeln!(out, "  pes: {}", cfg.pes());
    let _ = writeln!(out, "  grid: {}x{}", cfg.pe_width, cfg.pe_height);
    let _ = writeln!(out, "  regfile_bytes_per_pe: {}", cfg.regfile_bytes_per_pe);
    let _ = writeln!(out, "  global_buffer_bytes: {}", cfg.global_buffer_bytes);
    let _ = writeln!(out, "  variant: {}", variant.id);
    let _ = writeln!(out, "  multiplier_area_ge: {}", variant.area);
    let _ = writeln!(out, "metrics:");
    let _ = writeln!(out, "  die_area_mm2: {}", eval.area_mm2);
    let _ = writeln!(out, "  embodied_g: {}", eval.embodied_g);
    if let Some(cycles) = eval.cycles {
        let _ = writeln!(out, "  cycles: {cycles}");
    }
    let _ = writeln!(out, "  latency_s: {}", eval.latency_s);
    let _ = writeln!(out, "  fps: {}", eval.fps);
    let _ = writeln!(out, "  drop_pct: {}", eval.drop_pct);
    let _ = writeln!(out, "  cdp_g_s: {}", eval.cdp);
    match exact_reference(ctx)? {
        Some((ref_ch, ref_ev)) => {
            let (ref_cfg, _) = ctx.decode(&ref_ch)?;
            let embodied_cut = (1.0 - eval.embodied_g / ref_ev.embodied_g) * 100.0;
            let cdp_cut = (1.0 - eval.cdp / ref_ev.cdp) * 100.0;
            let _ = writeln!(out, "baseline:");
            let _ = writeln!(
                out,
                "  description: best exact fixed architecture meeting fps_min"
            );
            let _ = writeln!(out, "  pes: {}", ref_cfg.pes());
            let _ = writeln!(out, "  grid: {}x{}", ref_cfg.pe_width, ref_cfg.pe_height);
            let _ = writeln!(out, "  embodied_g: {}", ref_ev.embodied_g);
            let _ = writeln!(out, "  cdp_g_s: {}", ref_ev.cdp);
            let _ = writeln!(out, "  embodied_reduction_pct: {embodied_cut}");
            let _ = writeln!(out, "  cdp_reduction_pct: {cdp_cut}");
        }
        None => {
            let _ = writeln!(out, "baseline: none (no exact design meets fps_min)");
        }
    }
    if !history.is_empty() {
        let _ = writeln!(out, "history:");
        let _ = writeln!(out, "  gen,best_cdp");
        for (gen, cdp) in history.iter().enumerate() {
            let _ = writeln!(out, "  {gen},{cdp}");
        }
    }
    Ok(text)
}
