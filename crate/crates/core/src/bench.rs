//! Metric sweeps over truncation levels, their CSV form, and two-column
//! plot data derived from that CSV.
//!
//! A sweep decomposes with Structured 3D-SVD once at the largest requested
//! level and truncates that model for every smaller one; Tucker and CPD are
//! refitted per level. CPD rows are means over the seed list, with 95%
//! confidence half-widths in the `*_ci` columns.

use std::collections::HashMap;
use std::time::Instant;

use crate::baselines::{cpd_study_parallel, tucker_decompose, CpOptions, TuckerOptions};
use crate::error::{Error, ParseErrorKind, Result};
use crate::exec::map_indexed;
use crate::metrics::{per_curve, select_rank_from_qsigma, Method, MetricsReport};
use crate::s3dsvd::decompose;
use crate::tensor::Tensor3;

/// Energy fraction whose first crossing is reported by sweeps and plots.
pub const PER_THRESHOLD: f64 = 0.99;

pub const CSV_COLUMNS: [&str; 11] = [
    "method", "k", "psnr_db", "mse", "rel_err", "per", "time_s", "psnr_ci", "mse_ci", "relerr_ci", "time_ci",
];
const TIMING_COLUMNS: [&str; 2] = ["time_s", "time_ci"];

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub methods: Vec<Method>,
    pub ks: Vec<usize>,
    /// CPD seeds; each CPD row summarizes one run per seed.
    pub seeds: Vec<u64>,
    pub tucker: TuckerOptions,
    pub cpd: CpOptions,
    pub threads: usize,
}

impl SweepConfig {
    pub fn new(methods: Vec<Method>, ks: Vec<usize>, seeds: Vec<u64>) -> Self {
        SweepConfig {
            methods,
            ks,
            seeds,
            tucker: TuckerOptions::default(),
            cpd: CpOptions::default(),
            threads: 1,
        }
    }

    fn validate(&self, dims: [usize; 3]) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::arg("sweep needs at least one method"));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(Error::arg(format!("method {m} listed twice")));
            }
        }
        if self.ks.is_empty() {
            return Err(Error::arg("sweep needs at least one truncation level"));
        }
        if self.ks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::arg(format!("truncation levels {:?} must be strictly increasing", self.ks)));
        }
        let limit = dims.iter().copied().min().unwrap_or(0);
        let (lo, hi) = (self.ks[0], self.ks[self.ks.len() - 1]);
        if lo == 0 || hi > limit {
            return Err(Error::arg(format!("truncation levels must lie in 1..={limit} (min of dims {dims:?})")));
        }
        if self.methods.contains(&Method::Cpd) && self.seeds.is_empty() {
            return Err(Error::arg("cpd sweep needs at least one seed"));
        }
        Ok(())
    }
}

/// Confidence half-widths of a CPD study row; `None` for a single seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyCi {
    pub psnr: Option<f64>,
    pub mse: Option<f64>,
    pub rel_err: Option<f64>,
    pub time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub report: MetricsReport,
    pub ci: Option<StudyCi>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// One row per requested `(method, k)`, methods in request order.
    pub rows: Vec<SweepRow>,
    /// Smallest level whose PER reaches [`PER_THRESHOLD`], from the
    /// Structured 3D-SVD model at the largest level.
    pub per_threshold_rank: Option<usize>,
}

pub fn sweep(x: &Tensor3<f64>, cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate(x.dims())?;
    let mut rows = Vec::with_capacity(cfg.methods.len() * cfg.ks.len());
    let mut per_threshold_rank = None;
    for &method in &cfg.methods {
        match method {
            Method::S3dSvd => {
                let (method_rows, rank) = sweep_s3dsvd(x, cfg)?;
                per_threshold_rank = Some(rank);
                rows.extend(method_rows);
            }
            Method::Tucker => {
                let cells = map_indexed(cfg.threads, cfg.ks.len(), |i| {
                    let k = cfg.ks[i];
                    let start = Instant::now();
                    let model = tucker_decompose(x, k, &cfg.tucker)?;
                    let xhat = model.reconstruct()?;
                    let elapsed = start.elapsed().as_secs_f64();
                    MetricsReport::evaluate(Method::Tucker, k, x, &xhat, elapsed)
                });
                for report in cells {
                    rows.push(SweepRow { report: report?, ci: None });
                }
            }
            Method::Cpd => {
                for &k in &cfg.ks {
                    let study = cpd_study_parallel(x, k, &cfg.seeds, &cfg.cpd, cfg.threads)?;
                    let ci = StudyCi {
                        psnr: study.psnr.ci_half_width,
                        mse: study.mse.ci_half_width,
                        rel_err: study.rel_err.ci_half_width,
                        time: study.time.ci_half_width,
                    };
                    rows.push(SweepRow { report: study.mean_report(), ci: Some(ci) });
                }
            }
        }
    }
    Ok(SweepResult { rows, per_threshold_rank })
}

fn sweep_s3dsvd(x: &Tensor3<f64>, cfg: &SweepConfig) -> Result<(Vec<SweepRow>, usize)> {
    let r = *cfg.ks.last().expect("validated non-empty");
    let start = Instant::now();
    let model = decompose(x, r)?;
    let amortized = start.elapsed().as_secs_f64() / cfg.ks.len() as f64;
    let curve = per_curve(model.qsigma())?;
    let rank = select_rank_from_qsigma(model.qsigma(), PER_THRESHOLD)?;
    let cells = map_indexed(cfg.threads, cfg.ks.len(), |i| {
        let k = cfg.ks[i];
        let start = Instant::now();
        let xhat = model.reconstruct(k)?;
        let elapsed = amortized + start.elapsed().as_secs_f64();
        let mut report = MetricsReport::evaluate(Method::S3dSvd, k, x, &xhat, elapsed)?;
        report.per = Some(curve[k - 1]);
        Ok(SweepRow { report, ci: None })
    });
    Ok((cells.into_iter().collect::<Result<Vec<_>>>()?, rank))
}

/// Shortest decimal that parses back to the same `f64`; `inf` for +∞.
pub fn format_f64(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{v:?}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

impl SweepResult {
    /// Header, then one line per row. `timing = false` drops `time_s` and
    /// `time_ci`, leaving output that depends only on inputs and seeds.
    pub fn to_csv(&self, timing: bool) -> Result<String> {
        let keep: Vec<bool> = CSV_COLUMNS.iter().map(|c| timing || !TIMING_COLUMNS.contains(c)).collect();
        let mut w = csv::Writer::from_writer(Vec::new());
        let write = |w: &mut csv::Writer<Vec<u8>>, cells: Vec<String>| -> Result<()> {
            let kept = cells.into_iter().zip(&keep).filter(|(_, &k)| k).map(|(c, _)| c);
            w.write_record(kept).map_err(csv_err)
        };
        write(&mut w, CSV_COLUMNS.iter().map(|c| c.to_string()).collect())?;
        for row in &self.rows {
            let r = &row.report;
            let ci = row.ci.unwrap_or(StudyCi { psnr: None, mse: None, rel_err: None, time: None });
            write(
                &mut w,
                vec![
                    r.method.to_string(),
                    r.k.to_string(),
                    format_f64(r.psnr_db),
                    format_f64(r.mse),
                    format_f64(r.rel_err),
                    opt(r.per),
                    format_f64(r.elapsed_seconds),
                    opt(ci.psnr),
                    opt(ci.mse),
                    opt(ci.rel_err),
                    opt(ci.time),
                ],
            )?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn csv_err(e: csv::Error) -> Error {
    let offset = e.position().map_or(0, |p| p.byte());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::parse(offset, ParseErrorKind::Csv(format!("{other:?}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Curve {
    Per,
    Psnr,
}

impl Curve {
    fn column(self) -> &'static str {
        match self {
            Curve::Per => "per",
            Curve::Psnr => "psnr_db",
        }
    }
}

impl std::str::FromStr for Curve {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per" => Ok(Curve::Per),
            "psnr" => Ok(Curve::Psnr),
            _ => Err(Error::arg(format!("unknown curve `{s}` (expected per or psnr)"))),
        }
    }
}

/// `k value` lines for the rows of `method` in a sweep CSV, followed by a
/// `#` comment naming the first level whose PER reaches [`PER_THRESHOLD`]
/// when the CSV has such a row.
pub fn plotdata(sweep_csv: &str, curve: Curve, method: Method) -> Result<String> {
    let mut rdr = csv::Reader::from_reader(sweep_csv.as_bytes());
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let index: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let column = |name: &str| {
        index
            .get(name)
            .copied()
            .ok_or_else(|| Error::parse(0, ParseErrorKind::MissingColumn(name.to_string())))
    };
    let (method_col, k_col, value_col) = (column("method")?, column("k")?, column(curve.column())?);
    let per_col = index.get("per").copied();

    let mut out = String::new();
    let mut crossing = None;
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let offset = record.position().map_or(0, |p| p.byte());
        let field = |i: usize| record.get(i).unwrap_or("");
        if field(method_col) != method.as_str() {
            continue;
        }
        let bad = |what: &str, v: &str| Error::parse(offset, ParseErrorKind::Csv(format!("bad {what} `{v}`")));
        let k: usize = field(k_col).parse().map_err(|_| bad("k", field(k_col)))?;
        let value: f64 = field(value_col).parse().map_err(|_| bad(curve.column(), field(value_col)))?;
        out.push_str(&format!("{k} {}\n", format_f64(value)));
        if crossing.is_none() {
            if let Some(p) = per_col.map(field).filter(|p| !p.is_empty()) {
                let p: f64 = p.parse().map_err(|_| bad("per", p))?;
                if p >= PER_THRESHOLD {
                    crossing = Some(k);
                }
            }
        }
    }
    if let Some(k) = crossing {
        out.push_str(&format!("# per >= {PER_THRESHOLD} first at k={k}\n"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{gen_synthetic, SynthKind, SynthParams};

    fn blobs() -> Tensor3<f64> {
        gen_synthetic(SynthKind::Blobs, [10, 11, 12], &SynthParams::default(), 2).unwrap()
    }

    #[test]
    fn float_formatting_roundtrips() {
        for v in [0.1, 1.0, 1e-20, 29.6, 1.0 / 3.0, 123456789.125] {
            assert_eq!(format_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_f64(f64::INFINITY), "inf");
        assert_eq!(format_f64(0.5), "0.5");
    }

    #[test]
    fn rejects_bad_level_lists() {
        let x = blobs();
        for ks in [vec![], vec![3, 3], vec![4, 2], vec![0, 2], vec![2, 11]] {
            let cfg = SweepConfig::new(vec![Method::S3dSvd], ks, vec![]);
            assert!(matches!(sweep(&x, &cfg), Err(Error::Argument(_))));
        }
        let cfg = SweepConfig::new(vec![Method::Cpd], vec![2], vec![]);
        assert!(matches!(sweep(&x, &cfg), Err(Error::Argument(_))));
    }

    #[test]
    fn csv_layout() {
        let x = blobs();
        let cfg = SweepConfig::new(Method::ALL.to_vec(), vec![2, 4], vec![0, 1, 2]);
        let res = sweep(&x, &cfg).unwrap();
        assert_eq!(res.rows.len(), 6);
        let csv = res.to_csv(true).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_COLUMNS.join(","));
        assert_eq!(lines.len(), 7);
        assert!(lines[1].starts_with("s3dsvd,2,"));
        assert!(lines[3].starts_with("tucker,2,"));
        assert!(lines[6].starts_with("cpd,4,"));
        assert!(lines.iter().all(|l| l.split(',').count() == 11));

        let quiet = res.to_csv(false).unwrap();
        assert_eq!(quiet.lines().next().unwrap(), "method,k,psnr_db,mse,rel_err,per,psnr_ci,mse_ci,relerr_ci");
    }

    #[test]
    fn plotdata_lines_and_threshold() {
        let csv = "method,k,psnr_db,per\ns3dsvd,10,20.5,0.95\ns3dsvd,20,30,0.995\ntucker,10,21,\n";
        assert_eq!(plotdata(csv, Curve::Per, Method::S3dSvd).unwrap(), "10 0.95\n20 0.995\n# per >= 0.99 first at k=20\n");
        assert_eq!(plotdata(csv, Curve::Psnr, Method::Tucker).unwrap(), "10 21.0\n");
        let low = "method,k,psnr_db,per\ns3dsvd,10,20.5,0.5\n";
        assert_eq!(plotdata(low, Curve::Per, Method::S3dSvd).unwrap(), "10 0.5\n");
        let missing = "method,k,psnr_db\ns3dsvd,10,20.5\n";
        assert!(matches!(
            plotdata(missing, Curve::Per, Method::S3dSvd),
            Err(Error::Parse { kind: ParseErrorKind::MissingColumn(_), .. })
        ));
    }
}
