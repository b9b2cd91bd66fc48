//! Runs a configured protocol over its time grid and writes the results.

use std::path::{Path, PathBuf};

use rand::RngCore;
use serde::Serialize;

use crate::config::{ExperimentConfig, ProtocolKind, Reversal, RunMode};
use crate::dynamics::Spectrum;
use crate::error::{Error, Result};
use crate::linalg::tensor;
use crate::observables::{pauli, Pauli};
use crate::protocols::{
    otoc, toc, trial_rng, ClockPropagator, CorrelatorEstimate, Evolution, Mode, Part,
};

pub const CSV_HEADER: [&str; 9] = [
    "t", "re_value", "im_value", "re_stderr", "im_stderr", "rms_bound", "mode", "trials", "seed",
];

/// One line of the results table. Parts that were not requested are NaN.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub t: f64,
    pub re_value: f64,
    pub im_value: f64,
    pub re_stderr: f64,
    pub im_stderr: f64,
    pub rms_bound: f64,
    pub mode: RunMode,
    pub trials: u64,
    pub seed: u64,
}

/// Process exit status for a failed run.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Invariant { .. }
        | Error::NotUnitary { .. }
        | Error::NotHermitian { .. }
        | Error::NotInvolution { .. } => 2,
        _ => 1,
    }
}

/// Seed handed to the sampler for time index `row` and `part`.
fn row_seed(seed: u64, row: usize, part: Part) -> u64 {
    let stream = 2 * row as u64 + u64::from(part == Part::Imag);
    trial_rng(seed, stream).next_u64()
}

/// Evaluates every time point of a resolved config.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let n = cfg.system_size;
    let rho = cfg.initial_state.density(n)?;
    let h = cfg.hamiltonian.build(n)?.matrix();
    let clock = cfg.protocol == ProtocolKind::Otoc && cfg.reversal == Reversal::ClockAncilla;
    let spectrum = if clock {
        Spectrum::new(&tensor(&h, &pauli(Pauli::Z)))?
    } else {
        Spectrum::new(&h)?
    };

    let mut rows = Vec::with_capacity(cfg.times.len());
    for (k, &t) in cfg.times.iter().enumerate() {
        let u = spectrum.propagator(t).matrix;
        let evolution = if clock {
            Evolution::Clock(ClockPropagator {
                joint: u.clone(),
                n_system: n,
                duration: t,
            })
        } else {
            Evolution::Direct(u.clone())
        };
        let mut row = ResultRow {
            t,
            re_value: f64::NAN,
            im_value: f64::NAN,
            re_stderr: f64::NAN,
            im_stderr: f64::NAN,
            rms_bound: 0.0,
            mode: cfg.mode,
            trials: if cfg.mode == RunMode::Sampled { cfg.trials } else { 0 },
            seed: cfg.seed,
        };
        for &part in &cfg.parts {
            let mode = match cfg.mode {
                RunMode::Exact => Mode::Exact,
                RunMode::Sampled => Mode::Sampled {
                    trials: cfg.trials,
                    seed: row_seed(cfg.seed, k, part),
                },
            };
            let est: CorrelatorEstimate = match cfg.protocol {
                ProtocolKind::Toc => {
                    toc(&rho, &cfg.observable_a, &cfg.observable_b, &u, part, [cfg.phis[0], cfg.phis[1]], mode)?
                }
                ProtocolKind::Otoc => {
                    let phis = [cfg.phis[0], cfg.phis[1], cfg.phis[2], cfg.phis[3]];
                    otoc(&rho, &cfg.observable_a, &cfg.observable_b, &evolution, part, phis, mode)?
                }
            };
            match part {
                Part::Real => {
                    row.re_value = est.value.re;
                    row.re_stderr = est.stderr;
                }
                Part::Imag => {
                    row.im_value = est.value.im;
                    row.im_stderr = est.stderr;
                }
            }
            row.rms_bound = row.rms_bound.max(est.rms_bound);
        }
        rows.push(row);
    }
    Ok(rows)
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serializes rows as CSV with 17 significant digits.
pub fn write_csv<W: std::io::Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let io = |e: csv::Error| Error::InvalidArgument(format!("writing results: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        let mode = match r.mode {
            RunMode::Exact => "exact",
            RunMode::Sampled => "sampled",
        };
        w.write_record([
            fmt_f64(r.t),
            fmt_f64(r.re_value),
            fmt_f64(r.im_value),
            fmt_f64(r.re_stderr),
            fmt_f64(r.im_stderr),
            fmt_f64(r.rms_bound),
            mode.to_string(),
            r.trials.to_string(),
            r.seed.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::InvalidArgument(format!("writing results: {e}")))?;
    Ok(())
}

/// `<stem>.resolved.json` next to the CSV.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
    out.with_file_name(format!("{stem}.resolved.json"))
}

/// Default CSV location for a config file: same directory and stem.
pub fn default_output(config: &Path) -> PathBuf {
    config.with_extension("csv")
}

/// Runs `cfg` and writes the CSV plus the resolved-config sidecar.
pub fn run_to_files(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<ResultRow>> {
    let rows = run_experiment(cfg)?;
    let io = |e: std::io::Error| Error::InvalidArgument(format!("{}: {e}", out.display()));
    let file = std::fs::File::create(out).map_err(io)?;
    write_csv(&rows, std::io::BufWriter::new(file))?;
    let side = sidecar_path(out);
    std::fs::write(&side, cfg.to_json() + "\n")
        .map_err(|e| Error::InvalidArgument(format!("{}: {e}", side.display())))?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::oracle_otoc;

    fn config(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(text).unwrap().resolve().unwrap()
    }

    #[test]
    fn otoc_at_zero_for_disjoint_support() {
        let cfg = config(
            r#"{"system_size": 3, "observable_a": "ZII", "observable_b": "IIX",
                "times": [0.0, 0.7, 1.9], "phis": [0.3, 0.6, 0.9, 1.2]}"#,
        );
        let rows = run_experiment(&cfg).unwrap();
        assert!((rows[0].re_value - 1.0).abs() < 1e-10);
        assert!(rows[0].im_value.abs() < 1e-10);
        assert!(rows.iter().all(|r| r.re_stderr == 0.0 && r.im_stderr == 0.0));

        let h = cfg.hamiltonian.build(3).unwrap();
        for r in &rows {
            let u = crate::dynamics::propagator(&h, r.t).unwrap().matrix;
            let f = oracle_otoc(
                cfg.initial_state.density(3).unwrap().matrix(),
                &cfg.observable_a.matrix(),
                &cfg.observable_b.matrix(),
                &u,
            )
            .unwrap();
            assert!((r.re_value - f.re).abs() < 1e-10);
            assert!((r.im_value - f.im).abs() < 1e-10);
        }
    }

    #[test]
    fn clock_and_direct_reversal_agree() {
        let base = r#"{"system_size": 2, "observable_a": "ZI", "observable_b": "IZ",
                       "initial_state": "01", "times": [0.4, 1.3], "reversal": "#;
        let direct = run_experiment(&config(&format!("{base}\"direct-dagger\"}}"))).unwrap();
        let clock = run_experiment(&config(&format!("{base}\"clock-ancilla\"}}"))).unwrap();
        for (d, c) in direct.iter().zip(&clock) {
            assert!((d.re_value - c.re_value).abs() < 1e-9);
            assert!((d.im_value - c.im_value).abs() < 1e-9);
        }
    }

    #[test]
    fn toc_identity_evolution() {
        let cfg = config(
            r#"{"system_size": 2, "observable_a": "ZI", "observable_b": "ZI", "initial_state": "00",
                "hamiltonian": {"model": "terms", "terms": [[0.0, "II"]]},
                "times": [0.0, 2.0], "protocol": "toc"}"#,
        );
        for r in run_experiment(&cfg).unwrap() {
            assert!((r.re_value - 1.0).abs() < 1e-12);
            assert!(r.im_value.abs() < 1e-12);
        }
    }

    #[test]
    fn csv_layout() {
        let cfg = config(
            r#"{"system_size": 2, "observable_a": "ZI", "observable_b": "IX", "times": [0.0], "parts": ["real"]}"#,
        );
        let mut buf = Vec::new();
        write_csv(&run_experiment(&cfg).unwrap(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields[0], "0.0000000000000000e0");
        assert!((fields[1].parse::<f64>().unwrap() - 1.0).abs() < 1e-10);
        assert_eq!(fields[2], "NaN");
        assert_eq!(&fields[6..], &["exact", "0", "2026"]);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Invariant { name: "x", residual: 1.0 }), 2);
        assert_eq!(exit_code(&Error::PhiOutOfRange(3.0)), 1);
        assert_eq!(sidecar_path(Path::new("/a/b/run.csv")), Path::new("/a/b/run.resolved.json"));
        assert_eq!(default_output(Path::new("/a/exp.json")), Path::new("/a/exp.csv"));
    }
}
