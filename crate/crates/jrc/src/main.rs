use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use jrc::channel::{apply_channel, sample_channel, NoiseSpec};
use jrc::equalizer::{
    build_ci_matrix, equalize_reconstruct, sample_matched_at_instants, select_demod_path,
    DemodDecision,
};
use jrc::framing::{assemble_frame, random_bits, FrameSpec};
use jrc::harness::{
    emit_results, run_invariance_with_context, run_pd_with_context, run_ser_with_context,
    CsiMode, CurveResult, EmitFormats, ExperimentContext, PairKind, SimConfig,
};
use jrc::receiver::{joint_detect, radar_process, CfarConfig};
use jrc::seqdesign::{can_design, save_pair};

/// Bistatic joint radar-communication baseband simulator.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// JSON configuration file; omitted fields take built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for result files.
    #[arg(long, global = true, default_value = "results")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Monte-Carlo trials per grid point (overrides the config).
    #[arg(long)]
    trials: Option<u64>,

    /// Comma-separated multipath path counts, e.g. `1,5,10`.
    #[arg(long, value_delimiter = ',')]
    paths: Option<Vec<usize>>,

    /// Comma-separated SNR grid in dB.
    #[arg(long = "snr-db", value_delimiter = ',')]
    snr_db: Option<Vec<f64>>,

    /// CSI source for the equalizer: `ideal` or `detected`.
    #[arg(long)]
    csi: Option<String>,

    /// Also write the detection report of one example trial as JSON.
    #[arg(long)]
    dump_csi: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Design the orthogonal sequence pair and save it with its metrics.
    Design,
    /// Symbol-error-rate study over the per-bit SNR grid.
    Ser(RunArgs),
    /// Detection-probability study: proposed chain vs matched filter.
    Pd(RunArgs),
    /// Information-invariance study of the radar output.
    Invariance {
        /// Number of random bit vectors to compare.
        #[arg(long, default_value_t = 100)]
        vectors: usize,
    },
    /// Single end-to-end noisy frame with printed intermediate results.
    Demo(RunArgs),
}

fn load_config(cli: &Cli, args: Option<&RunArgs>) -> Result<SimConfig> {
    let mut cfg: SimConfig = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("parsing config {}", path.display()))?
        }
        None => SimConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    if let Some(args) = args {
        if let Some(trials) = args.trials {
            cfg.trials = trials;
        }
        if let Some(paths) = &args.paths {
            cfg.path_counts = paths.clone();
        }
        if let Some(grid) = &args.snr_db {
            cfg.snr_grid_db = grid.clone();
        }
        if let Some(csi) = &args.csi {
            cfg.csi_mode = match csi.as_str() {
                "ideal" => CsiMode::Ideal,
                "detected" => CsiMode::Detected,
                other => anyhow::bail!("unknown CSI mode `{other}` (ideal|detected)"),
            };
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn build_context(cfg: &SimConfig) -> Result<ExperimentContext> {
    eprintln!(
        "designing pair: L={}, seed={}, tol={}",
        cfg.l, cfg.master_seed, cfg.can_tol
    );
    let ctx = cfg.build_context()?;
    let m = ctx.pair.metrics();
    eprintln!(
        "pair ready: E_s={:.1}, PSL={:.3}, cross peak={:.3}, ISL={:.1}",
        m.e_s, m.psl_auto, m.cross_peak, m.isl
    );
    Ok(ctx)
}

/// One example trial at the first grid point, reported as CSI JSON.
fn dump_example_csi(cfg: &SimConfig, ctx: &ExperimentContext, out_dir: &PathBuf) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.master_seed);
    let rb = 10f64.powf(cfg.snr_grid_db[0] / 10.0);
    let noise = NoiseSpec::from_sigma2(ctx.e_s / rb)?;
    let bits = random_bits(ctx.n_symbols, &mut rng);
    let spec = FrameSpec::new(bits, ctx.phases.clone(), ctx.t_s)?;
    let frame = assemble_frame(&ctx.pair, &spec)?;
    let ch = sample_channel(cfg.path_counts[0], ctx.t_s, &mut rng)?;
    let r = apply_channel(&frame, &ch, &noise, &mut rng)?;
    let out = radar_process(&r, &ctx.pair, &ctx.phases)?;
    let det = CfarConfig::cell_averaging(cfg.cfar_m_ref, cfg.cfar_guard, cfg.p_fa)?;
    let report = joint_detect(&out, &det)?;
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join("csi.json");
    fs::write(&path, report.to_json())?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn print_curves(curves: &[CurveResult]) {
    for curve in curves {
        for p in &curve.points {
            eprintln!(
                "{}: x={:.2} dB  y={:.6}  ({}/{} trials, {} misses)",
                curve.label, p.x_db, p.y, p.count, p.trials, p.misses
            );
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Design => {
            let cfg = load_config(&cli, None)?;
            let design = can_design(cfg.l, cfg.master_seed, cfg.can_max_iters, cfg.can_tol)?;
            eprintln!(
                "converged={} after {} iterations, final ISL={:.3}",
                design.converged,
                design.iterations,
                design.final_isl()
            );
            fs::create_dir_all(&cli.out_dir)?;
            let pair_path = cli.out_dir.join("pair.txt");
            save_pair(&design.pair, &pair_path)?;
            let hist_path = cli.out_dir.join("isl_history.csv");
            let mut body = String::from("iteration,isl\n");
            for (i, isl) in design.isl_history.iter().enumerate() {
                body.push_str(&format!("{i},{isl}\n"));
            }
            fs::write(&hist_path, body)?;
            let m = design.pair.metrics();
            println!(
                "L={} E_s={:.1} PSL={:.4} cross_peak={:.4} ISL={:.4}",
                cfg.l, m.e_s, m.psl_auto, m.cross_peak, m.isl
            );
            eprintln!("wrote {} and {}", pair_path.display(), hist_path.display());
        }
        Command::Ser(args) => {
            let cfg = load_config(&cli, Some(args))?;
            let ctx = build_context(&cfg)?;
            let curves = run_ser_with_context(&cfg, &ctx)?;
            print_curves(&curves);
            let manifest =
                emit_results(&curves, &cli.out_dir, EmitFormats { csv: true, svg: true })?;
            if args.dump_csi {
                dump_example_csi(&cfg, &ctx, &cli.out_dir)?;
            }
            println!(
                "ser: wrote {} files to {} (fingerprint {})",
                manifest.files.len(),
                cli.out_dir.display(),
                manifest.fingerprint
            );
        }
        Command::Pd(args) => {
            let cfg = load_config(&cli, Some(args))?;
            let ctx = build_context(&cfg)?;
            let (prop, base) = run_pd_with_context(&cfg, &ctx)?;
            let curves = vec![prop, base];
            print_curves(&curves);
            let manifest =
                emit_results(&curves, &cli.out_dir, EmitFormats { csv: true, svg: true })?;
            if args.dump_csi {
                dump_example_csi(&cfg, &ctx, &cli.out_dir)?;
            }
            println!(
                "pd: wrote {} files to {} (fingerprint {})",
                manifest.files.len(),
                cli.out_dir.display(),
                manifest.fingerprint
            );
        }
        Command::Invariance { vectors } => {
            let cfg = load_config(&cli, None)?;
            let ctx = build_context(&cfg)?;
            let designed = run_invariance_with_context(&cfg, &ctx, *vectors, PairKind::Designed)?;
            let ideal = run_invariance_with_context(&cfg, &ctx, *vectors, PairKind::Ideal)?;
            fs::create_dir_all(&cli.out_dir)?;
            let path = cli.out_dir.join("invariance.json");
            let json = serde_json::json!({ "designed": designed, "ideal": ideal });
            fs::write(&path, serde_json::to_string_pretty(&json)?)?;
            println!(
                "designed pair: max diff {:.4} vs PSL {:.4} ({:.1}% below), ideal pair: max diff {:.4}",
                designed.max_diff,
                designed.psl,
                100.0 * designed.frac_below_psl,
                ideal.max_diff
            );
            eprintln!("wrote {}", path.display());
        }
        Command::Demo(args) => {
            let cfg = load_config(&cli, Some(args))?;
            let ctx = build_context(&cfg)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.master_seed);
            let rb = 10f64.powf(cfg.snr_grid_db[0] / 10.0);
            let noise = NoiseSpec::from_sigma2(ctx.e_s / rb)?;
            let bits = random_bits(ctx.n_symbols, &mut rng);
            let spec = FrameSpec::new(bits.clone(), ctx.phases.clone(), ctx.t_s)?;
            let frame = assemble_frame(&ctx.pair, &spec)?;
            let ch = sample_channel(cfg.path_counts[0], ctx.t_s, &mut rng)?;
            let r = apply_channel(&frame, &ch, &noise, &mut rng)?;
            println!("channel truth:\n{}", ch.to_json_lines());

            let out = radar_process(&r, &ctx.pair, &ctx.phases)?;
            let det = CfarConfig::cell_averaging(cfg.cfar_m_ref, cfg.cfar_guard, cfg.p_fa)?;
            let report = joint_detect(&out, &det)?;
            println!("detection report:\n{}", report.to_json());

            if let Some(main) = report.main_peak() {
                let (r1_s, r2_s) =
                    sample_matched_at_instants(&r, &ctx.pair, main.delay, ctx.n_symbols)?;
                let ci = build_ci_matrix(&report, ctx.t_s, cfg.tau)?;
                let decision = select_demod_path(&report, &ci);
                let interferers = match &decision {
                    DemodDecision::PlainJudgement => &[][..],
                    DemodDecision::Reconstruct { interferers } => interferers,
                };
                println!(
                    "demod path: {}",
                    if interferers.is_empty() {
                        "plain judgement".to_string()
                    } else {
                        format!("reconstruction with {} interferer(s)", interferers.len())
                    }
                );
                let (_, bits_hat) = equalize_reconstruct(
                    &r1_s,
                    &r2_s,
                    &report,
                    interferers,
                    &ctx.phases,
                    ctx.t_s,
                    cfg.judgement,
                    None,
                )?;
                let errors = bits.iter().zip(&bits_hat).filter(|(a, b)| a != b).count();
                println!("bits sent:    {bits:?}");
                println!("bits decoded: {bits_hat:?}");
                println!("symbol errors: {errors}/{}", ctx.n_symbols);
            } else {
                println!("missed detection: no peaks above threshold");
            }
            if args.dump_csi {
                fs::create_dir_all(&cli.out_dir)?;
                let path = cli.out_dir.join("csi.json");
                fs::write(&path, report.to_json())?;
                eprintln!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}
