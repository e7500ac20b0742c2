//! The `pem` command-line tool.
//!
//! Exit codes: 0 success, 1 I/O or other failure, 2 capacity exceeded,
//! 3 malformed stego image or mismatched parameters, 64 usage error.
//! Diagnostics go to stderr, results to stdout (or `--out` for CSV).

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::bitstream::BitStream;
use crate::codec::{decode, encode, estimate_capacity, StegoParams};
use crate::error::Error;
use crate::imaging::{read_pgm, write_pgm, PixelPlane};
use crate::metrics::{analyze_image, rd_curve, ssim, psnr};
use crate::overflow::Theta;
use crate::predictor::{InitStrategy, Predictor};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CAPACITY: i32 = 2;
pub const EXIT_MALFORMED: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

pub const CSV_HEADER: &str = "image,predictor,theta,bpp,psnr_db,ssim,entropy_bits,variance,p95,gini";

#[derive(Debug, Parser)]
#[command(name = "pem", version, about = "Reversible steganography by prediction-error modulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Embed a message file into a cover PGM.
    Embed {
        #[arg(long)]
        cover: PathBuf,
        #[arg(long)]
        message: PathBuf,
        /// Stego PGM to write.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Extract the message and restore the cover from a stego PGM.
    Extract {
        #[arg(long)]
        stego: PathBuf,
        /// Restored cover PGM to write.
        #[arg(long)]
        out: PathBuf,
        /// Message file to write.
        #[arg(long)]
        message: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Print the conservative capacity of a cover.
    Capacity {
        #[arg(long)]
        cover: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Prediction accuracy and error statistics per image and predictor, as CSV.
    Analyze {
        /// PGM files or directories of PGM files.
        #[arg(long, required = true, num_args = 1..)]
        cover: Vec<PathBuf>,
        #[arg(long, default_value = "1", value_parser = parse_theta)]
        theta: Theta,
        /// May be repeated.
        #[arg(long, default_values = ["lmi"], num_args = 1..)]
        predictor: Vec<String>,
        #[arg(long, default_value = "zero", value_parser = parse_init)]
        init: InitStrategy,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rate-distortion sweep per image, predictor and θ, as CSV.
    Rdcurve {
        #[arg(long, required = true, num_args = 1..)]
        cover: Vec<PathBuf>,
        #[arg(long, default_value = "1,2,3", value_delimiter = ',', value_parser = parse_theta)]
        thetas: Vec<Theta>,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        #[arg(long, default_values = ["lmi"], num_args = 1..)]
        predictor: Vec<String>,
        #[arg(long, default_value = "zero", value_parser = parse_init)]
        init: InitStrategy,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Flags that must match between `embed` and `extract`.
#[derive(Debug, Args)]
pub struct ParamArgs {
    #[arg(long, default_value = "1", value_parser = parse_theta)]
    pub theta: Theta,
    /// `lmi`, `nn:<weights>` or `nn:<first-layer>,<second-layer>`.
    #[arg(long, default_value = "lmi")]
    pub predictor: String,
    #[arg(long, default_value = "zero", value_parser = parse_init)]
    pub init: InitStrategy,
}

fn parse_theta(s: &str) -> Result<Theta, String> {
    let v: u32 = s.trim().parse().map_err(|e| format!("{e}"))?;
    Theta::new(v).map_err(|e| e.to_string())
}

fn parse_init(s: &str) -> Result<InitStrategy, String> {
    s.parse()
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::CapacityExceeded { .. } => EXIT_CAPACITY,
            Error::MalformedPayload(_) | Error::RegisterLengthMismatch { .. } => EXIT_MALFORMED,
            Error::InvalidTheta(_) => EXIT_USAGE,
            _ => EXIT_FAILURE,
        };
        let message = match e {
            Error::CapacityExceeded { shortfall, .. } => format!("capacity exceeded by {shortfall} bits"),
            other => other.to_string(),
        };
        CliError { code, message }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Parses a predictor flag into first- and second-layer predictors.
pub fn parse_predictor(spec: &str) -> CliResult<(Predictor, Predictor)> {
    if spec == "lmi" {
        return Ok((Predictor::Lmi, Predictor::Lmi));
    }
    let files = spec
        .strip_prefix("nn:")
        .ok_or_else(|| CliError::usage(format!("unknown predictor {spec:?}; use lmi or nn:<weights>[,<weights>]")))?;
    let load = |path: &str| {
        if path.is_empty() {
            return Err(CliError::usage("empty weight file path"));
        }
        Predictor::load(path).map_err(|e| CliError::usage(format!("cannot load weight file {path}: {e}")))
    };
    match files.split_once(',') {
        None => {
            let p = load(files)?;
            Ok((p.clone(), p))
        }
        Some((first, second)) => Ok((load(first)?, load(second)?)),
    }
}

impl ParamArgs {
    fn to_params(&self) -> CliResult<StegoParams> {
        let (first, second) = parse_predictor(&self.predictor)?;
        Ok(StegoParams::new(self.theta, first)
            .with_second_predictor(second)
            .with_init(self.init))
    }
}

fn read_cover(path: &Path) -> CliResult<PixelPlane> {
    read_pgm(path).map_err(|e| CliError {
        code: EXIT_FAILURE,
        message: format!("{}: {e}", path.display()),
    })
}

fn fmt_real(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.6}")
    }
}

/// Expands directories into the PGM files they contain, sorted.
fn collect_images(inputs: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| CliError {
                    code: EXIT_FAILURE,
                    message: format!("{}: {e}", p.display()),
                })?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x.eq_ignore_ascii_case("pgm")))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn image_label(p: &Path) -> String {
    p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn with_thread_cap<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    match std::env::var("PEM_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}

struct CsvRow {
    image: String,
    predictor: String,
    theta: Theta,
    fields: String,
}

fn emit_csv(rows: Vec<CsvRow>, seed: u64, out: Option<&Path>, stdout: &mut dyn Write) -> CliResult<()> {
    let mut rows = rows;
    rows.sort_by(|a, b| (&a.image, &a.predictor, a.theta).cmp(&(&b.image, &b.predictor, b.theta)));
    let mut text = format!("# pem-codec v1, seed={seed}\n{CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(text, "{},{},{},{}", r.image, r.predictor, r.theta, r.fields);
    }
    let io_err = |e: std::io::Error| CliError {
        code: EXIT_FAILURE,
        message: e.to_string(),
    };
    match out {
        Some(path) => fs::write(path, text).map_err(io_err),
        None => stdout.write_all(text.as_bytes()).map_err(io_err),
    }
}

fn cmd_embed(cover: &Path, message: &Path, out: &Path, params: &ParamArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let params = params.to_params()?;
    let x = read_cover(cover)?;
    let bytes = fs::read(message).map_err(|e| CliError {
        code: EXIT_FAILURE,
        message: format!("{}: {e}", message.display()),
    })?;
    let m = BitStream::from_bytes(&bytes);
    let stego = encode(&x, &m, &params)?;
    write_pgm(&stego, out)?;
    let _ = writeln!(stdout, "bits_embedded={}", m.len());
    let _ = writeln!(stdout, "bpp={}", fmt_real(m.len() as f64 / x.len() as f64));
    let _ = writeln!(stdout, "psnr_db={}", fmt_real(psnr(&x, &stego)?));
    if x.width() >= 11 && x.height() >= 11 {
        let _ = writeln!(stdout, "ssim={}", fmt_real(ssim(&x, &stego)?));
    }
    Ok(())
}

fn cmd_extract(stego: &Path, out: &Path, message: &Path, params: &ParamArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let params = params.to_params()?;
    let s = read_cover(stego)?;
    let (cover, m) = decode(&s, &params)?;
    write_pgm(&cover, out)?;
    fs::write(message, m.to_bytes()).map_err(Error::from)?;
    let _ = writeln!(stdout, "bits_extracted={}", m.len());
    Ok(())
}

fn cmd_capacity(cover: &Path, params: &ParamArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let params = params.to_params()?;
    let x = read_cover(cover)?;
    let cap = estimate_capacity(&x, &params)?;
    let _ = writeln!(stdout, "capacity_bits={}", cap.message_bits);
    let _ = writeln!(stdout, "bpp={}", fmt_real(cap.bpp()));
    let _ = writeln!(stdout, "register_bits={}", cap.register_bits);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_analyze(
    covers: &[PathBuf],
    theta: Theta,
    predictors: &[String],
    init: InitStrategy,
    seed: u64,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> CliResult<()> {
    let images = collect_images(covers)?;
    let specs = predictors
        .iter()
        .map(|s| parse_predictor(s).map(|(a, b)| (s.clone(), a, b)))
        .collect::<CliResult<Vec<_>>>()?;
    let jobs: Vec<_> = images.iter().flat_map(|img| specs.iter().map(move |s| (img, s))).collect();
    let rows = with_thread_cap(|| {
        jobs.par_iter()
            .map(|(path, (label, first, second))| {
                let x = read_cover(path)?;
                let params = StegoParams::new(theta, first.clone())
                    .with_second_predictor(second.clone())
                    .with_init(init);
                let a = analyze_image(&x, &params)?;
                Ok(CsvRow {
                    image: image_label(path),
                    predictor: label.clone(),
                    theta,
                    fields: format!(
                        "{},{},{},{},{},{},{}",
                        fmt_real(a.capacity_bpp),
                        fmt_real(a.predicted_psnr),
                        fmt_real(a.predicted_ssim),
                        fmt_real(a.stats.entropy),
                        fmt_real(a.stats.variance),
                        a.stats.p95,
                        fmt_real(a.stats.gini)
                    ),
                })
            })
            .collect::<CliResult<Vec<_>>>()
    })?;
    emit_csv(rows, seed, out, stdout)
}

#[allow(clippy::too_many_arguments)]
fn cmd_rdcurve(
    covers: &[PathBuf],
    thetas: &[Theta],
    steps: usize,
    predictors: &[String],
    init: InitStrategy,
    seed: u64,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> CliResult<()> {
    if steps == 0 {
        return Err(CliError::usage("--steps must be at least 1"));
    }
    let images = collect_images(covers)?;
    let specs = predictors
        .iter()
        .map(|s| parse_predictor(s).map(|(a, b)| (s.clone(), a, b)))
        .collect::<CliResult<Vec<_>>>()?;
    let jobs: Vec<_> = images.iter().flat_map(|img| specs.iter().map(move |s| (img, s))).collect();
    let rows = with_thread_cap(|| {
        jobs.par_iter()
            .map(|(path, (label, first, second))| {
                let x = read_cover(path)?;
                let params = StegoParams::new(thetas[0], first.clone())
                    .with_second_predictor(second.clone())
                    .with_init(init);
                let mut rows = Vec::new();
                for &theta in thetas {
                    let params = StegoParams { theta, ..params.clone() };
                    let stats = crate::metrics::error_stats(&crate::metrics::first_layer_errors(&x, &params)?)?;
                    for r in rd_curve(&x, &[theta], &params, steps, seed)? {
                        rows.push(CsvRow {
                            image: image_label(path),
                            predictor: label.clone(),
                            theta,
                            fields: format!(
                                "{},{},{},{},{},{},{}",
                                fmt_real(r.bpp),
                                fmt_real(r.psnr),
                                fmt_real(r.ssim),
                                fmt_real(stats.entropy),
                                fmt_real(stats.variance),
                                stats.p95,
                                fmt_real(stats.gini)
                            ),
                        });
                    }
                }
                Ok(rows)
            })
            .collect::<CliResult<Vec<Vec<_>>>>()
    })?;
    // the sort in emit_csv is stable, so each sweep keeps its bpp order
    emit_csv(rows.into_iter().flatten().collect(), seed, out, stdout)
}

pub fn execute(cli: Cli, stdout: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Embed { cover, message, out, params } => cmd_embed(&cover, &message, &out, &params, stdout),
        Command::Extract { stego, out, message, params } => cmd_extract(&stego, &out, &message, &params, stdout),
        Command::Capacity { cover, params } => cmd_capacity(&cover, &params, stdout),
        Command::Analyze { cover, theta, predictor, init, seed, out } => {
            cmd_analyze(&cover, theta, &predictor, init, seed, out.as_deref(), stdout)
        }
        Command::Rdcurve { cover, thetas, steps, predictor, init, seed, out } => {
            cmd_rdcurve(&cover, &thetas, steps, &predictor, init, seed, out.as_deref(), stdout)
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "pem: {}", e.message);
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("pem").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn theta_zero_is_a_usage_error() {
        let (code, _, err) = run_args(&["capacity", "--cover", "x.pgm", "--theta", "0"]);
        assert_eq!(code, EXIT_USAGE, "{err}");
    }

    #[test]
    fn help_exits_cleanly() {
        assert_eq!(run_args(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn missing_weight_file_is_a_usage_error() {
        let (code, _, err) = run_args(&["capacity", "--cover", "x.pgm", "--predictor", "nn:/no/such/file.nnpw"]);
        assert_eq!(code, EXIT_USAGE, "{err}");
        let (code, _, _) = run_args(&["capacity", "--cover", "x.pgm", "--predictor", "cnn"]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn real_formatting() {
        assert_eq!(fmt_real(f64::INFINITY), "inf");
        assert_eq!(fmt_real(1.0 / 3.0), "0.333333");
        assert_eq!(fmt_real(48.0), "48.000000");
    }
}
