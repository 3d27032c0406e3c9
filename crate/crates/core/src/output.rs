//! CSV tables and the JSON run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::process::Command;

use serde::Serialize;

use crate::error::Result;
use crate::experiments::{BenchTable, OptimalityTable, RhoSweepTable};

/// Round-trip formatting: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn line(out: &mut String, fields: &[String]) {
    out.push_str(&fields.join(","));
    out.push('\n');
}

pub const RHO_SWEEP_HEADER: &str = "rho,delta_rho,sigma,scaled_sqrt_sigma";

pub fn rho_sweep_csv(t: &RhoSweepTable) -> String {
    let mut out = format!("{RHO_SWEEP_HEADER}\n");
    for r in &t.rows {
        line(
            &mut out,
            &[r.rho.to_string(), fmt_f64(r.delta_rho), fmt_f64(r.sigma), fmt_f64(r.scaled_sqrt_sigma)],
        );
    }
    out
}

pub fn rho_sweep_timing_csv(t: &RhoSweepTable) -> String {
    let mut out = String::from("rho,score_wall_s\n");
    for (r, d) in t.rows.iter().zip(&t.timings) {
        let _ = writeln!(out, "{},{}", r.rho, fmt_f64(d.as_secs_f64()));
    }
    out
}

pub fn optimality_header(n: usize) -> String {
    let mut h = String::from("srf,delta,trials_ok,trials_failed");
    for stat in ["kx_mean", "ka_mean", "kx_median", "ka_median"] {
        for j in 1..=n {
            let _ = write!(h, ",{stat}_{j}");
        }
    }
    h
}

pub fn optimality_csv(t: &OptimalityTable) -> String {
    let mut out = optimality_header(t.n);
    out.push('\n');
    for r in &t.rows {
        let mut f = vec![fmt_f64(r.srf), fmt_f64(r.delta), r.trials_ok.to_string(), r.trials_failed.to_string()];
        for col in [&r.mean_kx, &r.mean_ka, &r.median_kx, &r.median_ka] {
            f.extend(col.iter().map(|v| fmt_f64(*v)));
        }
        line(&mut out, &f);
    }
    out
}

pub const BENCH_HEADER: &str = "method,srf,delta,trials_ok,trials_failed,mean_err_x1,median_err_x1";

pub fn bench_csv(t: &BenchTable) -> String {
    let mut out = format!("{BENCH_HEADER}\n");
    for r in &t.rows {
        line(
            &mut out,
            &[
                r.method.name().to_string(),
                fmt_f64(r.srf),
                fmt_f64(r.delta),
                r.trials_ok.to_string(),
                r.trials_failed.to_string(),
                fmt_f64(r.mean_err_x1),
                fmt_f64(r.median_err_x1),
            ],
        );
    }
    out
}

pub fn bench_timing_csv(t: &BenchTable) -> String {
    let mut out = String::from("method,srf,mean_wall_s\n");
    for r in &t.timings {
        line(&mut out, &[r.method.name().to_string(), fmt_f64(r.srf), fmt_f64(r.mean_wall_s)]);
    }
    out
}

pub fn complexity_timing_csv(t: &BenchTable) -> String {
    let mut out = String::from("omega,candidates,edp_wall_s\n");
    for r in &t.complexity {
        line(&mut out, &[fmt_f64(r.omega), r.candidates.to_string(), fmt_f64(r.edp_wall_s)]);
    }
    out
}

/// `git describe` of the working tree, when available.
pub fn git_describe() -> Option<String> {
    let out = Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()?;
    out.status
        .success()
        .then(|| String::from_utf8_lossy(&out.stdout).trim().to_string())
}

/// Manifest written next to every data file.
#[derive(Debug, Serialize)]
pub struct Manifest<'a, S: Serialize, R: Serialize> {
    pub command: &'a str,
    pub spec: &'a S,
    pub git_describe: Option<String>,
    pub seed: u64,
    pub summary: &'a R,
    pub files: Vec<String>,
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_file(dir, name, &s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_f64(f64::NAN), "nan");
        assert_eq!(fmt_f64(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn optimality_header_layout() {
        assert_eq!(
            optimality_header(2),
            "srf,delta,trials_ok,trials_failed,kx_mean_1,kx_mean_2,ka_mean_1,ka_mean_2,kx_median_1,kx_median_2,ka_median_1,ka_median_2"
        );
    }
}
