//! CSV and JSON artifacts.
//!
//! Numbers are written in scientific notation with 17 significant digits so
//! that every `f64` survives a write/read cycle bit for bit. Masked phases are
//! written as `NaN`. Metadata lives in `# key: value` lines above the header.

use std::collections::BTreeMap;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{Spectrum, SweepResult};
use crate::echo::{phase_trace, EchoSignal, SignalMeta};

pub const SIGNAL_COLUMNS: [&str; 6] = ["tau_s", "t_total_s", "I", "Q", "Lambda", "Phi_rad"];
pub const SPECTRUM_COLUMNS: [&str; 7] = ["frequency_hz", "I_re", "I_im", "Q_re", "Q_im", "I_abs", "Q_abs"];
pub const SWEEP_COLUMNS: [&str; 8] = [
    "B_gauss",
    "n",
    "P",
    "median_varpi_rads",
    "median_C",
    "n_realizations",
    "iqr_varpi",
    "iqr_C",
];

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("missing metadata field `{0}`")]
    MissingMeta(&'static str),
    #[error("expected columns {expected:?}, found {found:?}")]
    Columns { expected: Vec<String>, found: Vec<String> },
    #[error("no data rows")]
    Empty,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Formats with 17 significant digits.
pub fn format_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn write_rows<W: Write>(
    out: W,
    meta: &[(String, String)],
    columns: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<(), CsvError> {
    let mut out = out;
    for (k, v) in meta {
        writeln!(out, "# {k}: {v}")?;
    }
    let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    writer.write_record(columns)?;
    for row in rows {
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Metadata lines and data rows of a CSV artifact.
struct Table {
    meta: BTreeMap<String, Vec<String>>,
    /// (1-based line number, fields)
    rows: Vec<(usize, Vec<String>)>,
}

fn read_table(text: &str, columns: &[&str]) -> Result<Table, CsvError> {
    let mut meta: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut body_start = None;
    for (i, line) in text.lines().enumerate() {
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once(':') {
                meta.entry(k.trim().to_string()).or_default().push(v.trim().to_string());
            }
        } else if !line.trim().is_empty() {
            body_start = Some(i);
            break;
        }
    }
    let start = body_start.ok_or(CsvError::Empty)?;
    let body: String = text.lines().skip(start).map(|l| format!("{l}\n")).collect();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(body.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != columns {
        return Err(CsvError::Columns {
            expected: columns.iter().map(|c| c.to_string()).collect(),
            found: header,
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = start + record.position().map_or(0, |p| p.line() as usize);
        if record.len() != columns.len() {
            return Err(CsvError::Malformed {
                line,
                message: format!("expected {} fields, found {}", columns.len(), record.len()),
            });
        }
        rows.push((line, record.iter().map(str::to_string).collect()));
    }
    if rows.is_empty() {
        return Err(CsvError::Empty);
    }
    Ok(Table { meta, rows })
}

impl Table {
    fn first(&self, key: &'static str) -> Result<&str, CsvError> {
        self.meta
            .get(key)
            .and_then(|v| v.first())
            .map(String::as_str)
            .ok_or(CsvError::MissingMeta(key))
    }

    fn parse_meta<T: std::str::FromStr>(&self, key: &'static str) -> Result<T, CsvError> {
        let raw = self.first(key)?;
        raw.parse().map_err(|_| CsvError::Malformed {
            line: 0,
            message: format!("metadata `{key}` has unparsable value `{raw}`"),
        })
    }
}

fn parse_field(line: usize, column: &str, raw: &str) -> Result<f64, CsvError> {
    raw.parse::<f64>().map_err(|_| CsvError::Malformed {
        line,
        message: format!("column {column}: `{raw}` is not a number"),
    })
}

/// Writes an echo signal with its amplitude and unwrapped phase.
pub fn write_signal_csv<W: Write>(signal: &EchoSignal, out: W) -> Result<(), CsvError> {
    let trace = phase_trace(signal);
    let mut meta = vec![
        ("format".to_string(), "echoq-signal-v1".to_string()),
        ("config_hash".to_string(), signal.meta.config_hash.clone()),
        ("seed".to_string(), signal.meta.seed.to_string()),
        ("realization".to_string(), signal.meta.realization.to_string()),
        ("omega0_rad_s".to_string(), format_f64(signal.meta.omega0)),
    ];
    meta.extend(signal.meta.warnings.iter().map(|w| ("warning".to_string(), w.clone())));
    let rows = (0..signal.len()).map(|i| {
        vec![
            format_f64(signal.tau[i]),
            format_f64(2.0 * signal.tau[i]),
            format_f64(signal.s[i].re),
            format_f64(signal.s[i].im),
            format_f64(trace.lambda[i]),
            format_f64(trace.phi[i]),
        ]
    });
    write_rows(out, &meta, &SIGNAL_COLUMNS, rows)
}

pub fn signal_to_csv(signal: &EchoSignal) -> String {
    let mut buf = Vec::new();
    write_signal_csv(signal, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

/// Reads a signal written by [`write_signal_csv`]. `I` and `Q` are
/// authoritative; the derived columns are checked for being numeric only.
pub fn parse_signal_csv(text: &str) -> Result<EchoSignal, CsvError> {
    let table = read_table(text, &SIGNAL_COLUMNS)?;
    let mut tau = Vec::with_capacity(table.rows.len());
    let mut s = Vec::with_capacity(table.rows.len());
    for (line, fields) in &table.rows {
        let values: Vec<f64> = fields
            .iter()
            .zip(SIGNAL_COLUMNS)
            .map(|(raw, col)| parse_field(*line, col, raw))
            .collect::<Result<_, _>>()?;
        if !(values[0].is_finite() && values[2].is_finite() && values[3].is_finite()) {
            return Err(CsvError::Malformed {
                line: *line,
                message: "tau, I and Q must be finite".into(),
            });
        }
        if tau.last().is_some_and(|&t: &f64| values[0] <= t) {
            return Err(CsvError::Malformed {
                line: *line,
                message: "tau must be strictly increasing".into(),
            });
        }
        tau.push(values[0]);
        s.push(Complex64::new(values[2], values[3]));
    }
    let meta = SignalMeta {
        config_hash: table.first("config_hash")?.to_string(),
        seed: table.parse_meta("seed")?,
        realization: table.parse_meta("realization")?,
        omega0: table.parse_meta("omega0_rad_s")?,
        warnings: table.meta.get("warning").cloned().unwrap_or_default(),
    };
    Ok(EchoSignal { tau, s, meta })
}

pub fn write_spectrum_csv<W: Write>(spectrum: &Spectrum, config_hash: &str, out: W) -> Result<(), CsvError> {
    let meta = vec![
        ("format".to_string(), "echoq-spectrum-v1".to_string()),
        ("config_hash".to_string(), config_hash.to_string()),
        ("window".to_string(), spectrum.window.name().to_string()),
        ("dtau_s".to_string(), format_f64(spectrum.dtau)),
        ("df_hz".to_string(), format_f64(spectrum.df())),
    ];
    let rows = (0..spectrum.frequency_hz.len()).map(|k| {
        let (i, q) = (spectrum.i[k], spectrum.q[k]);
        vec![
            format_f64(spectrum.frequency_hz[k]),
            format_f64(i.re),
            format_f64(i.im),
            format_f64(q.re),
            format_f64(q.im),
            format_f64(i.norm()),
            format_f64(q.norm()),
        ]
    });
    write_rows(out, &meta, &SPECTRUM_COLUMNS, rows)
}

/// One row per cell in sweep grid order. Failed fits count as zero
/// contrast in `median_C` and are left out of `median_varpi_rads`.
pub fn write_sweep_csv<W: Write>(result: &SweepResult, out: W) -> Result<(), CsvError> {
    let meta = vec![
        ("format".to_string(), "echoq-sweep-v1".to_string()),
        ("config_hash".to_string(), result.spec.hash()),
        ("seed".to_string(), result.spec.seed.to_string()),
        ("realizations".to_string(), result.spec.realizations.to_string()),
    ];
    let rows = result.cells.iter().map(|c| {
        vec![
            format_f64(c.b_gauss),
            format_f64(c.abundance),
            format_f64(c.polarization),
            format_f64(c.median_varpi),
            format_f64(c.median_contrast),
            c.n_realizations.to_string(),
            format_f64(c.iqr_varpi),
            format_f64(c.iqr_contrast),
        ]
    });
    write_rows(out, &meta, &SWEEP_COLUMNS, rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub b_gauss: f64,
    pub abundance: f64,
    pub polarization: f64,
    pub median_varpi: f64,
    pub median_contrast: f64,
    pub n_realizations: usize,
    pub iqr_varpi: f64,
    pub iqr_contrast: f64,
}

pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepRow>, CsvError> {
    let table = read_table(text, &SWEEP_COLUMNS)?;
    table
        .rows
        .iter()
        .map(|(line, f)| {
            let num = |k: usize| parse_field(*line, SWEEP_COLUMNS[k], &f[k]);
            Ok(SweepRow {
                b_gauss: num(0)?,
                abundance: num(1)?,
                polarization: num(2)?,
                median_varpi: num(3)?,
                median_contrast: num(4)?,
                n_realizations: f[5].parse().map_err(|_| CsvError::Malformed {
                    line: *line,
                    message: format!("n_realizations: `{}` is not a count", f[5]),
                })?,
                iqr_varpi: num(6)?,
                iqr_contrast: num(7)?,
            })
        })
        .collect()
}

/// Provenance record written next to every artifact. The timestamp lives
/// here and nowhere else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub created_unix_s: u64,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
    #[serde(default)]
    pub details: serde_json::Value,
}

impl RunManifest {
    pub fn new(command: &str, config: &impl Serialize, config_hash: String, seed: u64) -> Self {
        let created_unix_s = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        Self {
            tool: "echoq".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_hash,
            seed,
            created_unix_s,
            config: serde_json::to_value(config).expect("config serializes"),
            outputs: Vec::new(),
            details: serde_json::Value::Null,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{spectrum, Window};
    use crate::echo::uniform_grid;

    fn sample() -> EchoSignal {
        let tau = uniform_grid(0.0, 1e-4, 64);
        let s = tau
            .iter()
            .enumerate()
            .map(|(i, t)| {
                if i == 10 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::from_polar((-t * 1e4).exp(), 1e5 * t + 0.1)
                }
            })
            .collect();
        EchoSignal {
            tau,
            s,
            meta: SignalMeta {
                config_hash: "0123456789abcdef".into(),
                seed: u64::MAX,
                realization: 3,
                omega0: 2.0 * std::f64::consts::PI * 1.0705e4,
                warnings: vec!["under-resolved grid".into()],
            },
        }
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, f64::MAX] {
            assert_eq!(format_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(format_f64(f64::NAN), "NaN");
    }

    #[test]
    fn signal_round_trips_bit_exact() {
        let sig = sample();
        let text = signal_to_csv(&sig);
        assert!(text.contains("# config_hash: 0123456789abcdef"));
        assert!(text.contains("tau_s,t_total_s,I,Q,Lambda,Phi_rad"));
        let back = parse_signal_csv(&text).unwrap();
        assert_eq!(back, sig);
        // masked phase at the zero sample
        let row = text.lines().filter(|l| !l.starts_with('#')).nth(11).unwrap();
        assert!(row.ends_with("NaN"), "{row}");
    }

    #[test]
    fn malformed_inputs_are_errors() {
        let good = signal_to_csv(&sample());
        assert!(matches!(parse_signal_csv(""), Err(CsvError::Empty)));
        let header_only: String = good.lines().take(7).map(|l| format!("{l}\n")).collect();
        assert!(matches!(parse_signal_csv(&header_only), Err(CsvError::Empty)));
        assert!(matches!(
            parse_signal_csv(&good.replace("Lambda", "Amp")),
            Err(CsvError::Columns { .. })
        ));
        let broken = good.replacen("e-5,", "e-5,oops", 1);
        assert!(matches!(parse_signal_csv(&broken), Err(CsvError::Malformed { .. })));
        let no_seed: String = good.lines().filter(|l| !l.starts_with("# seed")).map(|l| format!("{l}\n")).collect();
        assert!(matches!(parse_signal_csv(&no_seed), Err(CsvError::MissingMeta("seed"))));
        let short = format!("{}\n1.0,2.0\n", good.trim_end());
        assert!(parse_signal_csv(&short).is_err());
    }

    #[test]
    fn spectrum_csv_has_one_row_per_bin() {
        let sp = spectrum(&sample(), Window::Hann).unwrap();
        let mut buf = Vec::new();
        write_spectrum_csv(&sp, "abc", &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("# window: hann"));
        let rows = text.lines().filter(|l| !l.starts_with('#')).count();
        assert_eq!(rows, sp.frequency_hz.len() + 1);
    }

    #[test]
    fn manifest_carries_config() {
        let m = RunManifest::new("bath", &serde_json::json!({"b": 5.0}), "h".into(), 9);
        let back: RunManifest = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.config["b"], 5.0);
    }
}
