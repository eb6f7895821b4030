//! `svf`: filter, decompose, recompose and compare images.
//!
//! Exit codes: 0 success, 1 usage, 2 IO or decode failure, 3 invalid
//! parameters.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use svf_core::imageio::{
    load_decomposition, load_image, save_decomposition, save_image, AlphaPolicy, Encoding,
    ValueEncoding,
};
use svf_core::metrics::{max_abs_diff_image, psnr_image, ssim_image, SsimParams};
use svf_core::{
    decompose, default_schedule, filter_image, recompose, ColorMode, Error, FilterParams, Schedule,
    Weights,
};

#[derive(Parser)]
#[command(
    name = "svf",
    version,
    about = "Sub-window variance filtering and detail decomposition"
)]
struct Cli {
    /// Worker threads; defaults to one per core.
    #[arg(long, env = "SVF_THREADS", global = true)]
    threads: Option<usize>,

    /// Discard an alpha channel instead of rejecting the input.
    #[arg(long, global = true)]
    drop_alpha: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter an image once.
    Filter {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, default_value_t = 2)]
        radius: usize,
        #[arg(long, default_value_t = 0.015)]
        epsilon: f64,
        #[arg(long, default_value_t = ColorMode::PerChannel)]
        color_mode: ColorMode,
        #[arg(long, value_enum)]
        encoding: Option<OutputEncoding>,
    },
    /// Split an image into a base layer and detail layers.
    Decompose {
        input: PathBuf,
        out_dir: PathBuf,
        #[command(flatten)]
        schedule: ScheduleArgs,
        #[arg(long, default_value_t = ColorMode::PerChannel)]
        color_mode: ColorMode,
        #[arg(long, value_enum, default_value_t = LayerEncoding::Float)]
        encoding: LayerEncoding,
    },
    /// Weighted sum of the layers in a decomposition directory.
    Recompose {
        layers: PathBuf,
        output: PathBuf,
        /// One weight per detail layer.
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        weights: Vec<f64>,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        base_weight: f64,
        #[arg(long, value_enum)]
        encoding: Option<OutputEncoding>,
    },
    /// Compare two images; prints key=value lines.
    Metrics {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        ssim: bool,
        #[arg(long)]
        psnr: bool,
        #[arg(long)]
        max_diff: bool,
    },
    /// Run the HTTP session service.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value_t = 4096 * 4096)]
        max_image_pixels: usize,
        /// Idle seconds before a session expires.
        #[arg(long, default_value_t = 1800)]
        session_ttl: u64,
        #[arg(long, default_value_t = 32)]
        max_sessions: usize,
        /// Allowed CORS origin; any origin when omitted.
        #[arg(long)]
        cors_origin: Option<String>,
    },
}

#[derive(Args)]
#[group(required = true, multiple = true)]
struct ScheduleArgs {
    /// Per-level radii, e.g. 2,4,8.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["levels", "radius"])]
    radii: Option<Vec<usize>>,
    /// Level count; radii double from --radius.
    #[arg(long, requires = "radius")]
    levels: Option<usize>,
    #[arg(long, requires = "levels")]
    radius: Option<usize>,
    /// One epsilon for all levels, or one per level.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.015",
        allow_hyphen_values = true
    )]
    epsilon: Vec<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputEncoding {
    Png8,
    Png16,
    Pfm,
}

#[derive(Clone, Copy, ValueEnum)]
enum LayerEncoding {
    Float,
    #[value(name = "offset-8bit")]
    Offset8Bit,
}

enum Failure {
    Usage(String),
    Io(String),
    Param(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::DegenerateWindow { .. } => {
                Failure::Param(e.to_string())
            }
            Error::Decode(_) | Error::Integrity(_) | Error::Io { .. } => Failure::Io(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, msg) = match f {
                Failure::Usage(m) => (1, m),
                Failure::Io(m) => (2, m),
                Failure::Param(m) => (3, m),
            };
            eprintln!("svf: {msg}");
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Usage("SVF_THREADS must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let alpha = if cli.drop_alpha {
        AlphaPolicy::Drop
    } else {
        AlphaPolicy::Reject
    };

    match cli.command {
        Command::Filter {
            input,
            output,
            radius,
            epsilon,
            color_mode,
            encoding,
        } => {
            let params = FilterParams::new(radius, epsilon)?;
            let image = load_image(&input, alpha)?;
            let start = Instant::now();
            let filtered = filter_image(&image, params, color_mode)?;
            let elapsed = start.elapsed();
            save_image(&filtered, &output, output_encoding(encoding, &output))?;
            println!(
                "width={} height={} channels={}",
                image.width(),
                image.height(),
                image.channels()
            );
            println!("elapsed_ms={:.3}", ms(elapsed));
        }
        Command::Decompose {
            input,
            out_dir,
            schedule,
            color_mode,
            encoding,
        } => {
            let schedule = build_schedule(&schedule)?;
            let image = load_image(&input, alpha)?;
            let start = Instant::now();
            let d = decompose(&image, &schedule, color_mode)?;
            let elapsed = start.elapsed();
            let encoding = match encoding {
                LayerEncoding::Float => ValueEncoding::Float,
                LayerEncoding::Offset8Bit => ValueEncoding::Offset8Bit,
            };
            save_decomposition(&d, &out_dir, encoding, Some(&input))?;
            for (k, (layer, p)) in d.details().iter().zip(schedule.levels()).enumerate() {
                println!(
                    "level={} radius={} epsilon={} min={:.6} max={:.6} mean={:.6}",
                    k + 1,
                    p.radius(),
                    p.epsilon(),
                    layer.min(),
                    layer.max(),
                    layer.mean()
                );
            }
            println!("elapsed_ms={:.3}", ms(elapsed));
        }
        Command::Recompose {
            layers,
            output,
            weights,
            base_weight,
            encoding,
        } => {
            let d = load_decomposition(&layers)?;
            let image = recompose(&d, &Weights::new(weights, base_weight))?;
            save_image(&image, &output, output_encoding(encoding, &output))?;
        }
        Command::Metrics {
            a,
            b,
            ssim,
            psnr,
            max_diff,
        } => {
            let all = !(ssim || psnr || max_diff);
            let a = load_image(&a, alpha)?;
            let b = load_image(&b, alpha)?;
            if a.dimensions() != b.dimensions() || a.channels() != b.channels() {
                return Err(Failure::Param(format!(
                    "images differ in shape: {}x{}x{} vs {}x{}x{}",
                    a.width(),
                    a.height(),
                    a.channels(),
                    b.width(),
                    b.height(),
                    b.channels()
                )));
            }
            if ssim || all {
                println!("ssim={}", ssim_image(&a, &b, &SsimParams::default())?);
            }
            if psnr || all {
                println!("psnr={}", psnr_image(&a, &b)?);
            }
            if max_diff || all {
                println!("max_abs_diff={}", max_abs_diff_image(&a, &b)?);
            }
        }
        Command::Serve {
            host,
            port,
            max_image_pixels,
            session_ttl,
            max_sessions,
            cors_origin,
        } => {
            let config = svf_service::Config {
                max_image_pixels,
                session_ttl: Duration::from_secs(session_ttl),
                max_sessions,
                cors_origin,
            };
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Io(e.to_string()))?;
            runtime
                .block_on(async {
                    let addr = SocketAddr::new(host, port);
                    let listener = svf_service::bind(addr).await?;
                    println!("listening on http://{}", listener.local_addr()?);
                    svf_service::serve(listener, config).await
                })
                .map_err(|e| Failure::Io(e.to_string()))?;
        }
    }
    Ok(())
}

fn build_schedule(args: &ScheduleArgs) -> Result<Schedule, Failure> {
    match (&args.radii, args.levels, args.radius) {
        (Some(radii), _, _) => Ok(Schedule::from_lists(radii, &args.epsilon)?),
        (None, Some(levels), Some(radius)) => {
            if args.epsilon.len() == 1 {
                Ok(default_schedule(levels, radius, args.epsilon[0])?)
            } else {
                let radii = default_schedule(levels, radius, 1.0)?
                    .levels()
                    .iter()
                    .map(|p| p.radius())
                    .collect::<Vec<_>>();
                Ok(Schedule::from_lists(&radii, &args.epsilon)?)
            }
        }
        _ => Err(Failure::Usage(
            "give --radii, or --levels with --radius".into(),
        )),
    }
}

fn output_encoding(explicit: Option<OutputEncoding>, path: &Path) -> Encoding {
    match explicit {
        Some(OutputEncoding::Png8) => Encoding::Png8,
        Some(OutputEncoding::Png16) => Encoding::Png16,
        Some(OutputEncoding::Pfm) => Encoding::Pfm,
        None => Encoding::from_path(path),
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}
