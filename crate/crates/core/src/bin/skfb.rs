use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use skfb_core::experiments::{
    export_slice_pgm, run_convergence, run_mse_table, run_roi_table, ConvergenceConfig,
    ConvergenceKind, FilterScope, KantorovichMode, MseTableConfig, RoiTableConfig, TableResult,
};
use skfb_core::phantom::{phantom_volume, Contrast, PhantomVolumeConfig};
use skfb_core::{load_vol1, mid_slice, save_vol1, Error, GrayRange, OperatorConfig, Result};

#[derive(Parser)]
#[command(
    name = "skfb",
    version,
    about = "Smoothing operators, phantom and metric experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ContrastArg {
    Modified,
    Original,
}

#[derive(Clone, Copy, ValueEnum)]
enum RangeArg {
    /// Map the slice's own [min, max] to 0..255.
    Auto,
    /// Map [0, 1] to 0..255, clipping outside values.
    Unit,
}

#[derive(Subcommand)]
enum Command {
    /// Render the Shepp-Logan phantom volume to a VOL1 file.
    Phantom {
        #[arg(long, default_value_t = 128)]
        size: usize,
        #[arg(long, default_value_t = 64)]
        depth: usize,
        /// Raster size before the bicubic resize.
        #[arg(long, default_value_t = 400)]
        source_size: usize,
        #[arg(long, value_enum, default_value_t = ContrastArg::Modified)]
        contrast: ContrastArg,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Apply one operator, given as JSON or @file, to a VOL1 volume.
    Filter {
        #[arg(long)]
        op: String,
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// MSE of each operator on sin(pi x) sin(pi y) sin(pi z) across resolutions.
    MseTable {
        #[arg(long, value_delimiter = ',', default_value = "16,32,64")]
        resolutions: Vec<usize>,
        /// Output path (.json for JSON, CSV otherwise); stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Speckle metrics of the phantom slice for every ROI and operator.
    RoiTable {
        #[arg(long, default_value = "surrogate")]
        kantorovich: String,
        #[arg(long, default_value = "slice")]
        filter_scope: String,
        /// Append an identity-operator control row per ROI.
        #[arg(long)]
        with_identity: bool,
        #[arg(long, default_value_t = 32)]
        slice: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Error sequence of one operator family as its parameter is refined.
    Convergence {
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 513)]
        nodes: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Extract a slice along axis 0 as PGM (or VOL1 for a .vol path).
    Slice {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, default_value_t = 32)]
        index: usize,
        #[arg(long, value_enum, default_value_t = RangeArg::Auto)]
        range: RangeArg,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn emit(table: &TableResult, output: Option<&Path>) -> Result<()> {
    for note in &table.notes {
        eprintln!("warning: {note}");
    }
    match output {
        Some(path) => table.save(path),
        None => {
            std::io::stdout().write_all(table.to_csv().as_bytes())?;
            Ok(())
        }
    }
}

fn read_op(arg: &str) -> Result<OperatorConfig> {
    match arg.strip_prefix('@') {
        Some(path) => OperatorConfig::parse(&std::fs::read_to_string(path)?),
        None => OperatorConfig::parse(arg),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Phantom {
            size,
            depth,
            source_size,
            contrast,
            output,
        } => {
            let cfg = PhantomVolumeConfig {
                source_size,
                size,
                depth,
                contrast: match contrast {
                    ContrastArg::Modified => Contrast::Modified,
                    ContrastArg::Original => Contrast::Original,
                },
            };
            save_vol1(output, &phantom_volume(&cfg)?)
        }
        Command::Filter { op, input, output } => {
            let op = read_op(&op)?;
            let v = load_vol1(input)?;
            let (out, resolved) = op.apply(&v)?;
            eprintln!("applied {}", resolved.to_json());
            save_vol1(output, &out)
        }
        Command::MseTable {
            resolutions,
            output,
        } => {
            let cfg = MseTableConfig {
                resolutions,
                ..Default::default()
            };
            emit(&run_mse_table(&cfg)?.table(), output.as_deref())
        }
        Command::RoiTable {
            kantorovich,
            filter_scope,
            with_identity,
            slice,
            output,
        } => {
            let cfg = RoiTableConfig {
                kantorovich: kantorovich.parse::<KantorovichMode>()?,
                filter_scope: filter_scope.parse::<FilterScope>()?,
                with_identity,
                slice_index: slice,
                ..Default::default()
            };
            emit(&run_roi_table(&cfg)?.table(), output.as_deref())
        }
        Command::Convergence {
            kind,
            nodes,
            output,
        } => {
            let mut cfg = ConvergenceConfig::new(kind.parse::<ConvergenceKind>()?);
            cfg.nodes = nodes;
            emit(&run_convergence(&cfg)?.table(), output.as_deref())
        }
        Command::Slice {
            input,
            index,
            range,
            output,
        } => {
            let v = load_vol1(input)?;
            let s = mid_slice(&v, index)?;
            if output.extension().and_then(|e| e.to_str()) == Some("vol") {
                return save_vol1(output, &s);
            }
            let range = match range {
                RangeArg::Auto => GrayRange::Auto,
                RangeArg::Unit => GrayRange::Fixed(0.0, 1.0),
            };
            export_slice_pgm(&s, output, range)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> ExitCode {
    ExitCode::from(e.exit_code() as u8)
}
