use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use volrank::bench::{format_f64, plotdata, sweep, Curve, SweepConfig};
use volrank::exec::threads_from_env;
use volrank::io::{encode_volume, Dtype, ModelFile};
use volrank::synth::{gen_synthetic, SynthKind, SynthParams};
use volrank::{
    cpd_decompose, decompose, read_model, read_volume, tucker_decompose, write_model, CpOptions, Error, Method,
    mse, psnr, rel_err, Result, Tensor3, TuckerOptions,
};

/// Low-rank volume decomposition and benchmarking
#[derive(Parser, Debug)]
#[command(name = "volrank", version, about)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a seeded synthetic volume
    Gen(GenArgs),
    /// Fit a model to a volume and write it to a model file
    Decompose(DecomposeArgs),
    /// Rebuild a volume from a model file
    Reconstruct(ReconstructArgs),
    /// Compare a reconstruction against the original volume
    Metrics(MetricsArgs),
    /// Quality and timing over a list of truncation levels, as CSV
    Sweep(SweepArgs),
    /// Two-column `k value` data from a sweep CSV
    Plotdata(PlotArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    /// multirank, blobs or blobs_noisy
    #[arg(long)]
    kind: String,
    /// Extents n1,n2,n3
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    dims: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Multilinear rank of a multirank volume
    #[arg(long, default_value_t = 4)]
    rank: usize,
    /// Number of blobs
    #[arg(long, default_value_t = 32)]
    blobs: usize,
    /// Uniform noise amplitude for blobs_noisy
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    /// Spherical, axis-aligned blobs
    #[arg(long)]
    isotropic: bool,
    /// Payload scalar type, f32 or f64
    #[arg(long, default_value = "f64")]
    dtype: String,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct DecomposeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    method: String,
    #[arg(long)]
    rank: usize,
    /// CPD initialization seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct ReconstructArgs {
    /// Model file
    #[arg(long)]
    input: PathBuf,
    /// Truncation level; defaults to the stored rank
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    output: PathBuf,
    /// Mode-3 slice indices to dump as text matrices next to the output
    #[arg(long, value_delimiter = ',')]
    slices: Vec<usize>,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    /// Original volume
    #[arg(long)]
    input: PathBuf,
    /// Reconstructed volume
    #[arg(long)]
    reconstruction: PathBuf,
    /// Write the CSV here instead of stdout
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    input: PathBuf,
    /// Methods to run, in row order
    #[arg(long, value_delimiter = ',', default_value = "s3dsvd,tucker,cpd")]
    method: Vec<String>,
    /// Strictly increasing truncation levels
    #[arg(long, value_delimiter = ',', required = true)]
    ks: Vec<usize>,
    /// CPD seeds: a list `a,b,c` or a range `a..b`
    #[arg(long, default_value = "0..10")]
    seeds: String,
    /// Write the CSV here instead of stdout
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Omit the time_s and time_ci columns
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// Sweep CSV
    #[arg(long)]
    csv: PathBuf,
    /// per or psnr
    #[arg(long, default_value = "per")]
    curve: String,
    /// Rows to plot
    #[arg(long, default_value = "s3dsvd")]
    method: String,
    /// Write here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(a) => gen(a),
        Command::Decompose(a) => decompose_cmd(a),
        Command::Reconstruct(a) => reconstruct(a),
        Command::Metrics(a) => metrics(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::Plotdata(a) => plot(a),
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn parse_dims(dims: &[usize]) -> Result<[usize; 3]> {
    <[usize; 3]>::try_from(dims).map_err(|_| Error::Argument(format!("--dims needs three extents, got {}", dims.len())))
}

fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    let bad = || Error::Argument(format!("cannot parse seeds `{spec}`"));
    if let Some((a, b)) = spec.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        return Ok((a..b).collect());
    }
    spec.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
}

fn gen(a: GenArgs) -> Result<()> {
    let kind: SynthKind = a.kind.parse()?;
    let dims = parse_dims(&a.dims)?;
    let dtype = match a.dtype.as_str() {
        "f32" => Dtype::F32,
        "f64" => Dtype::F64,
        other => return Err(Error::Argument(format!("unknown dtype `{other}` (expected f32 or f64)"))),
    };
    let params = SynthParams { rank: a.rank, blobs: a.blobs, noise: a.noise, isotropic: a.isotropic };
    let x = gen_synthetic(kind, dims, &params, a.seed)?;
    fs::write(&a.output, encode_volume(&x, dtype)?)?;
    Ok(())
}

fn decompose_cmd(a: DecomposeArgs) -> Result<()> {
    let method: Method = a.method.parse()?;
    let x = read_volume(&a.input)?;
    let start = Instant::now();
    let model: ModelFile = match method {
        Method::S3dSvd => decompose(&x, a.rank)?.into(),
        Method::Tucker => {
            let m = tucker_decompose(&x, a.rank, &TuckerOptions::default())?;
            eprintln!("sweeps={}", m.sweeps());
            (&m).into()
        }
        Method::Cpd => {
            let m = cpd_decompose(&x, a.rank, a.seed, &CpOptions::default())?;
            eprintln!("iterations={} converged={} regularized={}", m.iterations_run, m.converged, m.regularized);
            (&m).into()
        }
    };
    eprintln!("elapsed_s={}", format_f64(start.elapsed().as_secs_f64()));
    write_model(&a.output, &model)
}

fn reconstruct(a: ReconstructArgs) -> Result<()> {
    let model = read_model(&a.input)?;
    let k = match (model.method(), a.k) {
        (Method::Cpd, Some(k)) => {
            eprintln!("warning: k={k} ignored, cpd models reconstruct at their fitted rank {}", model.rank());
            None
        }
        (_, k) => k,
    };
    let x = model.reconstruct(k)?;
    let n3 = x.dims()[2];
    if let Some(&bad) = a.slices.iter().find(|&&s| s >= n3) {
        return Err(Error::Argument(format!("slice {bad} out of range 0..{n3}")));
    }
    fs::write(&a.output, encode_volume(&x, Dtype::F64)?)?;
    for &s in &a.slices {
        fs::write(slice_path(&a.output, s), slice_text(&x, s))?;
    }
    Ok(())
}

fn slice_path(output: &Path, s: usize) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(format!(".slice{s}.txt"));
    PathBuf::from(name)
}

/// Frontal slice `s` as `n1` lines of `n2` space-separated values.
fn slice_text(x: &Tensor3<f64>, s: usize) -> String {
    let [n1, n2, _] = x.dims();
    let mut out = String::new();
    for i in 0..n1 {
        let row: Vec<String> = (0..n2).map(|j| format_f64(x[(i, j, s)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

fn metrics(a: MetricsArgs) -> Result<()> {
    let x = read_volume(&a.input)?;
    let xhat = read_volume(&a.reconstruction)?;
    let text = format!(
        "psnr_db,mse,rel_err\n{},{},{}\n",
        format_f64(psnr(&x, &xhat)?),
        format_f64(mse(&x, &xhat)?),
        format_f64(rel_err(&x, &xhat)?)
    );
    emit(a.csv.as_deref(), &text)
}

fn sweep_cmd(a: SweepArgs) -> Result<()> {
    let methods = a.method.iter().map(|m| m.parse()).collect::<Result<Vec<Method>>>()?;
    let seeds = parse_seeds(&a.seeds)?;
    let x = read_volume(&a.input)?;
    let mut cfg = SweepConfig::new(methods, a.ks, seeds);
    cfg.threads = threads_from_env();
    let result = sweep(&x, &cfg)?;
    if let Some(k) = result.per_threshold_rank {
        eprintln!("per_0.99_rank={k}");
    }
    emit(a.csv.as_deref(), &result.to_csv(!a.no_timing)?)
}

fn plot(a: PlotArgs) -> Result<()> {
    let curve: Curve = a.curve.parse()?;
    let method: Method = a.method.parse()?;
    let text = plotdata(&fs::read_to_string(&a.csv)?, curve, method)?;
    emit(a.output.as_deref(), &text)
}
