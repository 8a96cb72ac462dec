//! CSV and JSON formats. Floats are written with 17 significant digits so
//! every value reads back bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::externality::{Line, MuNormalization, SegmentedFit, SweepPoint};
use crate::game::{Conditions, EquilibriumOutcome, MarketRow, Regime, SharesSolution, SupportConvention};
use crate::harness::HarnessError;
use crate::netsim::{Band, RateSample};

pub const NETSIM_HEADER: [&str; 3] = ["drop", "ue_id", "throughput_bps"];
pub const SWEEP_HEADER: [&str; 4] = ["n", "rate5_bps", "ci_lo_bps", "ci_hi_bps"];
pub const MARKET_HEADER: [&str; 20] = [
    "omega_hat", "q_hat", "mu", "regime", "convention", "q1", "q2", "p1", "p2", "n1", "n2",
    "omega_over", "omega_under", "profit1", "profit2", "cs", "eq8_ok", "eq9_ok",
    "prefers_sharing_1", "prefers_sharing_2",
];

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn create_parent(path: &Path) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    Ok(())
}

fn write_rows(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<(), HarnessError> {
    create_parent(path)?;
    let csv_err = |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>, HarnessError> {
    let csv_err = |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let found = r.headers().map_err(csv_err)?;
    if found.iter().ne(header.iter().copied()) {
        return Err(HarnessError::Format {
            path: path.to_path_buf(),
            reason: format!("header {found:?}, expected {header:?}"),
        });
    }
    r.records().map(|rec| rec.map_err(csv_err)).collect()
}

struct Fields<'a> {
    path: &'a Path,
    line: usize,
    rec: &'a csv::StringRecord,
}

impl Fields<'_> {
    fn err(&self, col: usize, what: &str) -> HarnessError {
        HarnessError::Format {
            path: self.path.to_path_buf(),
            reason: format!("row {}, column {}: {what}", self.line, col + 1),
        }
    }

    fn str(&self, col: usize) -> Result<&str, HarnessError> {
        self.rec.get(col).ok_or_else(|| self.err(col, "missing field"))
    }

    fn parse<T: std::str::FromStr>(&self, col: usize) -> Result<T, HarnessError> {
        let s = self.str(col)?;
        s.parse().map_err(|_| self.err(col, &format!("cannot parse '{s}'")))
    }

    fn opt<T: std::str::FromStr>(&self, col: usize) -> Result<Option<T>, HarnessError> {
        if self.str(col)?.is_empty() {
            Ok(None)
        } else {
            self.parse(col).map(Some)
        }
    }
}

fn each_record<T>(
    path: &Path,
    header: &[&str],
    mut f: impl FnMut(&Fields) -> Result<T, HarnessError>,
) -> Result<Vec<T>, HarnessError> {
    let records = read_rows(path, header)?;
    records
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            f(&Fields {
                path,
                line: i + 2,
                rec,
            })
        })
        .collect()
}

pub fn write_netsim_csv(path: &Path, samples: &[RateSample]) -> Result<(), HarnessError> {
    let rows = samples
        .iter()
        .map(|s| vec![s.drop.to_string(), s.ue_id.to_string(), fmt_f64(s.throughput_bps)]);
    write_rows(path, &NETSIM_HEADER, rows)
}

pub fn read_netsim_csv(path: &Path) -> Result<Vec<RateSample>, HarnessError> {
    each_record(path, &NETSIM_HEADER, |f| {
        Ok(RateSample {
            drop: f.parse(0)?,
            ue_id: f.parse(1)?,
            throughput_bps: f.parse(2)?,
        })
    })
}

pub fn write_sweep_csv(path: &Path, points: &[SweepPoint]) -> Result<(), HarnessError> {
    let rows = points.iter().map(|p| {
        vec![fmt_f64(p.n), fmt_f64(p.rate5_bps), fmt_f64(p.ci_lo_bps), fmt_f64(p.ci_hi_bps)]
    });
    write_rows(path, &SWEEP_HEADER, rows)
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepPoint>, HarnessError> {
    each_record(path, &SWEEP_HEADER, |f| {
        Ok(SweepPoint {
            n: f.parse(0)?,
            rate5_bps: f.parse(1)?,
            ci_lo_bps: f.parse(2)?,
            ci_hi_bps: f.parse(3)?,
        })
    })
}

fn opt_f64(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn opt_bool(x: Option<bool>) -> String {
    x.map(|b| b.to_string()).unwrap_or_default()
}

/// Rows without an outcome leave every outcome column empty.
pub fn write_market_csv(path: &Path, rows: &[MarketRow]) -> Result<(), HarnessError> {
    let records = rows.iter().map(|r| {
        let o = r.outcome.as_ref();
        let num = |f: fn(&EquilibriumOutcome) -> f64| opt_f64(o.map(f));
        vec![
            fmt_f64(r.omega_hat),
            fmt_f64(r.q_hat),
            fmt_f64(r.mu),
            r.regime.to_string(),
            r.convention.to_string(),
            num(|o| o.q1),
            num(|o| o.q2),
            num(|o| o.p1),
            num(|o| o.p2),
            num(|o| o.shares.n1),
            num(|o| o.shares.n2),
            num(|o| o.shares.omega_over),
            num(|o| o.shares.omega_under),
            num(|o| o.profit1),
            num(|o| o.profit2),
            num(|o| o.consumer_surplus),
            opt_bool(o.map(|o| o.conditions.eq8_ok)),
            opt_bool(o.map(|o| o.conditions.eq9_ok)),
            opt_bool(r.prefers_sharing_1),
            opt_bool(r.prefers_sharing_2),
        ]
    });
    write_rows(path, &MARKET_HEADER, records)
}

/// Inverse of [`write_market_csv`]. The `valid` share flag is restored from
/// the interiority column; rows without an outcome come back with a
/// placeholder error message.
pub fn read_market_csv(path: &Path) -> Result<Vec<MarketRow>, HarnessError> {
    each_record(path, &MARKET_HEADER, |f| {
        let regime: Regime = f.str(3)?.parse().map_err(|e: String| f.err(3, &e))?;
        let convention: SupportConvention = f.str(4)?.parse().map_err(|e: String| f.err(4, &e))?;
        let outcome = match f.opt::<f64>(5)? {
            None => None,
            Some(q1) => {
                let eq9_ok: bool = f.parse(17)?;
                Some(EquilibriumOutcome {
                    regime,
                    q1,
                    q2: f.parse(6)?,
                    p1: f.parse(7)?,
                    p2: f.parse(8)?,
                    shares: SharesSolution {
                        n1: f.parse(9)?,
                        n2: f.parse(10)?,
                        omega_over: f.parse(11)?,
                        omega_under: f.parse(12)?,
                        valid: eq9_ok,
                    },
                    profit1: f.parse(13)?,
                    profit2: f.parse(14)?,
                    consumer_surplus: f.parse(15)?,
                    conditions: Conditions {
                        eq8_ok: f.parse(16)?,
                        eq9_ok,
                    },
                })
            }
        };
        let error = outcome.is_none().then(|| "no outcome recorded".to_string());
        Ok(MarketRow {
            omega_hat: f.parse(0)?,
            q_hat: f.parse(1)?,
            mu: f.parse(2)?,
            regime,
            convention,
            outcome,
            error,
            prefers_sharing_1: f.opt(18)?,
            prefers_sharing_2: f.opt(19)?,
        })
    })
}

/// Fit summary for one band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub band: Band,
    pub breakpoint: Option<f64>,
    pub left: Line,
    pub right: Line,
    pub sse: f64,
    pub line_sse: f64,
    pub hinge_sse: Option<f64>,
    pub normalization: MuNormalization,
    pub mu: Option<f64>,
    pub mu_error: Option<String>,
}

impl FitReport {
    pub fn new(band: Band, fit: &SegmentedFit, normalization: MuNormalization) -> Self {
        let (mu, mu_error) = match crate::externality::extract_mu(fit, normalization) {
            Ok(mu) => (Some(mu), None),
            Err(e) => (None, Some(e.to_string())),
        };
        Self {
            band,
            breakpoint: fit.breakpoint,
            left: fit.left,
            right: fit.right,
            sse: fit.sse,
            line_sse: fit.line_sse,
            hinge_sse: fit.hinge_sse,
            normalization,
            mu,
            mu_error,
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    create_parent(path)?;
    let mut text = serde_json::to_string_pretty(value).map_err(|source| HarnessError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, HarnessError> {
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| HarnessError::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    create_parent(path)?;
    fs::write(path, text).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}
