//! Report assembly and rendering for the command-line tool.
//!
//! Every report is a plain serde struct; JSON output is the struct itself,
//! and the text and CSV renderings are derived from the same fields.

use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::benford::{benford_probs, chi_square_stat, proportions};
use crate::digits::{count_digits, parse_records, DigitCounts, DigitSystem, ParseOptions, SkipReport};
use crate::error::{Error, Result};
use crate::mc::SimulationReport;
use crate::severity::{
    chi_square_severity, default_delta_star, n_min_for, run_test, severity_of_acceptance,
    severity_of_rejection, CalibrationConfig, SeverityResult, DEFAULT_MIN_EXPECTED,
};
use crate::specialfn::{central_chi2_sf, Probability};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DigitRow {
    pub digit: u32,
    pub count: u64,
    pub observed: f64,
    pub benford: f64,
}

/// Full result of analysing one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub label: String,
    pub system: DigitSystem,
    pub digits: u8,
    pub k: usize,
    pub n: u64,
    pub skipped: SkipReport,
    pub mad: f64,
    pub expected_mad: f64,
    pub sd_mad: f64,
    pub excess_delta: f64,
    pub tilde_delta: f64,
    pub p_value: Probability,
    pub delta_star: f64,
    pub severity_exceeds: SeverityResult,
    pub severity_at_most: SeverityResult,
    pub chi_square: f64,
    pub chi_square_df: u32,
    pub chi_square_p_value: Probability,
    pub chi_square_severity: Option<SeverityResult>,
    pub digit_table: Vec<DigitRow>,
    pub warnings: Vec<String>,
}

/// Runs the full test and severity pipeline on tallied counts.
///
/// `delta_star` defaults to the digit system's benchmark; the chi-square
/// severity is only computed when `psi_star` is supplied.
pub fn analyze_counts(
    label: &str,
    counts: &DigitCounts,
    delta_star: Option<f64>,
    psi_star: Option<f64>,
) -> Result<AnalysisReport> {
    let system = counts.system;
    let outcome = run_test(counts)?;
    let delta_star = delta_star.unwrap_or_else(|| default_delta_star(system));
    let severity_exceeds = severity_of_rejection(outcome.tilde_delta, delta_star, outcome.n, system)?;
    let severity_at_most = severity_of_acceptance(outcome.tilde_delta, delta_star, outcome.n, system)?;

    let b = benford_probs(system);
    let chi_square = chi_square_stat(counts, &b)?;
    let chi_square_df = (system.k() - 1) as u32;
    let chi_square_p_value = central_chi2_sf(chi_square, chi_square_df)?;
    let chi_square_severity = psi_star.map(|psi| chi_square_severity(chi_square, psi, system)).transpose()?;

    let p = proportions(counts)?;
    let digit_table = (0..system.k())
        .map(|i| DigitRow {
            digit: system.label_at(i),
            count: counts.counts[i],
            observed: p.p[i],
            benford: b.b[i],
        })
        .collect();

    let mut warnings = Vec::new();
    if outcome.small_sample {
        let n_min = n_min_for(system, DEFAULT_MIN_EXPECTED)?;
        warnings.push(format!(
            "small sample: n = {} is below {n_min}, the minimum giving at least {DEFAULT_MIN_EXPECTED} expected records per digit; the normal approximation may be poor",
            outcome.n
        ));
    }
    if counts.skipped.total() > 0 {
        let s = &counts.skipped;
        warnings.push(format!(
            "{} records skipped (empty: {}, non-numeric: {}, zero: {})",
            s.total(),
            s.empty,
            s.non_numeric,
            s.zero
        ));
    }

    Ok(AnalysisReport {
        label: label.to_string(),
        system,
        digits: system.width(),
        k: system.k(),
        n: outcome.n,
        skipped: counts.skipped,
        mad: outcome.mad,
        expected_mad: outcome.expected_mad,
        sd_mad: outcome.sd_mad,
        excess_delta: outcome.excess_delta,
        tilde_delta: outcome.tilde_delta,
        p_value: outcome.p_value,
        delta_star,
        severity_exceeds,
        severity_at_most,
        chi_square,
        chi_square_df,
        chi_square_p_value,
        chi_square_severity,
        digit_table,
        warnings,
    })
}

/// Reads, tallies and analyses one source. Skips found while parsing are
/// merged into the counts' skip report.
pub fn load_counts<R: Read>(source: R, options: &ParseOptions, system: DigitSystem) -> Result<DigitCounts> {
    let parsed = parse_records(source, options)?;
    let mut counts = count_digits(&parsed.tokens, system);
    counts.skipped.merge(&parsed.skipped);
    Ok(counts)
}

/// Formats a number with eight significant digits, switching to scientific
/// notation outside `[1e-4, 1e7)`.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs();
    if (1e-4..1e7).contains(&mag) {
        let decimals = (7 - mag.log10().floor() as i32).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.7e}")
    }
}

impl AnalysisReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dataset: {}", self.label);
        let _ = writeln!(s, "digits: {} (k = {})", self.system, self.k);
        let _ = writeln!(s, "n: {}  skipped: {}", self.n, self.skipped.total());
        let _ = writeln!(s);
        let _ = writeln!(s, "MAD            {}", fmt_num(self.mad));
        let _ = writeln!(s, "E(MAD)         {}", fmt_num(self.expected_mad));
        let _ = writeln!(s, "SD(MAD)        {}", fmt_num(self.sd_mad));
        let _ = writeln!(s, "excess δ       {}", fmt_num(self.excess_delta));
        let _ = writeln!(s, "δ̃              {}", fmt_num(self.tilde_delta));
        let _ = writeln!(s, "p-value        {}", fmt_num(self.p_value.get()));
        let _ = writeln!(s, "δ*             {}", fmt_num(self.delta_star));
        for sev in [&self.severity_exceeds, &self.severity_at_most] {
            let _ = writeln!(s, "SEV({})    {}", sev.claim_text(), fmt_num(sev.severity.get()));
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "chi-square     {} (df = {})", fmt_num(self.chi_square), self.chi_square_df);
        let _ = writeln!(s, "chi-square p   {}", fmt_num(self.chi_square_p_value.get()));
        if let Some(sev) = &self.chi_square_severity {
            let _ = writeln!(s, "ψ*             {}", fmt_num(sev.delta_star));
            let _ = writeln!(s, "SEV({})    {}", sev.claim_text(), fmt_num(sev.severity.get()));
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "{:>5} {:>10} {:>12} {:>12}", "digit", "count", "observed", "benford");
        for row in &self.digit_table {
            let _ = writeln!(
                s,
                "{:>5} {:>10} {:>12.8} {:>12.8}",
                row.digit, row.count, row.observed, row.benford
            );
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        s
    }

    pub const CSV_HEADER: [&'static str; 19] = [
        "label",
        "digits",
        "k",
        "n",
        "skipped",
        "mad",
        "expected_mad",
        "sd_mad",
        "excess_delta",
        "tilde_delta",
        "p_value",
        "delta_star",
        "severity_exceeds",
        "severity_at_most",
        "chi_square",
        "chi_square_df",
        "chi_square_p_value",
        "psi_star",
        "chi_square_severity",
    ];

    /// One header row and one data row, numbers at full precision.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(Self::CSV_HEADER)?;
        let (psi, chi_sev) = match &self.chi_square_severity {
            Some(s) => (s.delta_star.to_string(), s.severity.to_string()),
            None => (String::new(), String::new()),
        };
        w.write_record([
            self.label.clone(),
            self.digits.to_string(),
            self.k.to_string(),
            self.n.to_string(),
            self.skipped.total().to_string(),
            self.mad.to_string(),
            self.expected_mad.to_string(),
            self.sd_mad.to_string(),
            self.excess_delta.to_string(),
            self.tilde_delta.to_string(),
            self.p_value.to_string(),
            self.delta_star.to_string(),
            self.severity_exceeds.severity.to_string(),
            self.severity_at_most.severity.to_string(),
            self.chi_square.to_string(),
            self.chi_square_df.to_string(),
            self.chi_square_p_value.to_string(),
            psi,
            chi_sev,
        ])?;
        finish_csv(w)
    }
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits UTF-8"))
}

/// Observed vs Benford frequency per digit, for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub digit: u32,
    pub observed: f64,
    pub benford: f64,
}

pub fn plot_rows(counts: &DigitCounts) -> Result<Vec<PlotRow>> {
    let p = proportions(counts)?;
    let b = benford_probs(counts.system);
    Ok((0..counts.system.k())
        .map(|i| PlotRow { digit: counts.system.label_at(i), observed: p.p[i], benford: b.b[i] })
        .collect())
}

/// Writes plot rows as CSV with header `digit,observed,benford`.
pub fn write_plot_csv<W: Write>(rows: &[PlotRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub delta_star: f64,
    pub noncentrality: f64,
    pub severity_exceeds: f64,
    pub severity_at_most: f64,
}

/// Severity of both claim directions at each benchmark in `grid`.
pub fn severity_curve(system: DigitSystem, n: u64, tilde_delta: f64, grid: &[f64]) -> Result<Vec<CurvePoint>> {
    grid.iter()
        .map(|&ds| {
            let r = severity_of_rejection(tilde_delta, ds, n, system)?;
            let a = severity_of_acceptance(tilde_delta, ds, n, system)?;
            Ok(CurvePoint {
                delta_star: ds,
                noncentrality: r.noncentrality,
                severity_exceeds: r.severity.get(),
                severity_at_most: a.severity.get(),
            })
        })
        .collect()
}

/// Parses `start:end:points` into an evenly spaced grid.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("grid must look like start:end:points, got {spec:?}"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, end, points] = parts[..] else {
        return Err(bad());
    };
    let start: f64 = start.trim().parse().map_err(|_| bad())?;
    let end: f64 = end.trim().parse().map_err(|_| bad())?;
    let points: usize = points.trim().parse().map_err(|_| bad())?;
    if points == 0 || !start.is_finite() || !end.is_finite() {
        return Err(bad());
    }
    if points == 1 {
        return Ok(vec![start]);
    }
    let step = (end - start) / (points - 1) as f64;
    Ok((0..points).map(|i| if i == points - 1 { end } else { start + step * i as f64 }).collect())
}

pub fn curve_to_csv(points: &[CurvePoint]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in points {
        w.serialize(p)?;
    }
    finish_csv(w)
}

pub fn curve_to_text(system: DigitSystem, n: u64, tilde_delta: f64, points: &[CurvePoint]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "digits: {system}  n: {n}  δ̃: {}", fmt_num(tilde_delta));
    let _ = writeln!(s, "{:>14} {:>14} {:>14} {:>14}", "δ*", "ncp", "SEV(δ > δ*)", "SEV(δ ≤ δ*)");
    for p in points {
        let _ = writeln!(
            s,
            "{:>14} {:>14} {:>14} {:>14}",
            fmt_num(p.delta_star),
            fmt_num(p.noncentrality),
            fmt_num(p.severity_exceeds),
            fmt_num(p.severity_at_most)
        );
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub config: CalibrationConfig,
    pub digits: u8,
    pub delta_star: f64,
    pub warnings: Vec<String>,
}

impl CalibrationReport {
    pub fn new(config: CalibrationConfig, delta_star: f64) -> Self {
        let mut warnings = Vec::new();
        if delta_star < 0.0 {
            warnings.push(format!(
                "negative δ*: threshold {} lies below the average null E(MAD) over n in [{}, {}]",
                config.threshold, config.n_min, config.n_max
            ));
        }
        CalibrationReport { digits: config.system.width(), config, delta_star, warnings }
    }

    pub fn to_text(&self) -> String {
        let c = &self.config;
        let mut s = String::new();
        let _ = writeln!(s, "digits: {} (k = {})", c.system, c.system.k());
        let _ = writeln!(s, "threshold t: {}", c.threshold);
        let _ = writeln!(s, "n range: [{}, {}]", c.n_min, c.n_max);
        let _ = writeln!(s, "δ*: {}", fmt_num(self.delta_star));
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        s
    }

    pub fn to_csv(&self) -> Result<String> {
        let c = &self.config;
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["digits", "threshold", "n_min", "n_max", "delta_star"])?;
        w.write_record([
            self.digits.to_string(),
            c.threshold.to_string(),
            c.n_min.to_string(),
            c.n_max.to_string(),
            self.delta_star.to_string(),
        ])?;
        finish_csv(w)
    }
}

pub fn simulation_to_text(r: &SimulationReport) -> String {
    let mut s = String::new();
    let spec = &r.spec;
    let _ = writeln!(s, "digits: {}  n: {}  reps: {}  seed: {}", spec.system, spec.n, spec.reps, spec.seed);
    let _ = writeln!(s, "{:<18} {:>14} {:>14} {:>12} {:>10}", "", "empirical", "theoretical", "MC s.e.", "ratio");
    let _ = writeln!(
        s,
        "{:<18} {:>14} {:>14} {:>12} {:>10}",
        "MAD mean",
        fmt_num(r.empirical_mad_mean),
        fmt_num(r.theoretical_mad_mean),
        fmt_num(r.mad_mean_se),
        format!("{:.5}", r.mad_mean_ratio())
    );
    let _ = writeln!(
        s,
        "{:<18} {:>14} {:>14} {:>12} {:>10}",
        "MAD sd",
        fmt_num(r.empirical_mad_sd),
        fmt_num(r.theoretical_mad_sd),
        fmt_num(r.mad_sd_se),
        format!("{:.5}", r.mad_sd_ratio())
    );
    let _ = writeln!(s, "{:<18} {:>14} {:>14} {:>12}", "δ̃ mean", fmt_num(r.tilde_delta_mean), "0", fmt_num(r.tilde_delta_mean_se));
    let _ = writeln!(s, "{:<18} {:>14} {:>14}", "δ̃ sd", fmt_num(r.tilde_delta_sd), "1");
    let _ = writeln!(s, "folded means (limit {}):", fmt_num(r.folded_target));
    for (i, (m, se)) in r.folded_means.iter().zip(&r.folded_mean_se).enumerate() {
        let _ = writeln!(s, "  {:>3} {:>12} ± {}", spec.system.label_at(i), fmt_num(*m), fmt_num(*se));
    }
    s
}

pub fn simulation_to_csv(r: &SimulationReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["quantity", "empirical", "theoretical", "se"])?;
    let rows = [
        ("mad_mean", r.empirical_mad_mean, r.theoretical_mad_mean, r.mad_mean_se),
        ("mad_sd", r.empirical_mad_sd, r.theoretical_mad_sd, r.mad_sd_se),
        ("tilde_delta_mean", r.tilde_delta_mean, 0.0, r.tilde_delta_mean_se),
        ("tilde_delta_sd", r.tilde_delta_sd, 1.0, f64::NAN),
    ];
    for (name, e, t, se) in rows {
        w.write_record([name.to_string(), e.to_string(), t.to_string(), se.to_string()])?;
    }
    for (i, (m, se)) in r.folded_means.iter().zip(&r.folded_mean_se).enumerate() {
        w.write_record([
            format!("folded_{}", r.spec.system.label_at(i)),
            m.to_string(),
            r.folded_target.to_string(),
            se.to_string(),
        ])?;
    }
    finish_csv(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn benford_counts(system: DigitSystem, n: u64) -> DigitCounts {
        let b = benford_probs(system);
        DigitCounts::from_counts(system, b.b.iter().map(|b| (b * n as f64).round() as u64).collect()).unwrap()
    }

    #[test]
    fn fmt_num_keeps_eight_significant_digits() {
        assert_eq!(fmt_num(0.41628123456), "0.41628123");
        assert_eq!(fmt_num(6.621), "6.6210000");
        assert_eq!(fmt_num(0.00008), "8.0000000e-5");
        assert_eq!(fmt_num(0.00012), "0.00012000000");
        assert_eq!(fmt_num(3.2e-9), "3.2000000e-9");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(-293.7), "-293.70000");
    }

    #[test]
    fn exact_benford_data_accepts() {
        let counts = benford_counts(DigitSystem::FirstDigit, 100_000);
        let r = analyze_counts("synthetic", &counts, None, Some(5.0)).unwrap();
        assert!(r.tilde_delta < 0.0);
        assert!(r.severity_at_most.severity.get() > 0.999);
        assert_eq!(r.delta_star, 0.00321);
        assert!(r.chi_square_severity.is_some());
        assert!(r.warnings.is_empty());
        let total: f64 = r.digit_table.iter().map(|d| d.observed).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn small_two_digit_sample_warns() {
        let counts = DigitCounts::from_counts(DigitSystem::FirstTwoDigits, vec![2; 90]).unwrap();
        let r = analyze_counts("small", &counts, Some(0.001), None).unwrap();
        assert_eq!(r.n, 180);
        assert!(r.warnings.iter().any(|w| w.contains("small sample") && w.contains("1146")));
        assert_eq!(r.delta_star, 0.001);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let counts = DigitCounts::from_counts(DigitSystem::FirstDigit, vec![301, 170, 130, 99, 80, 66, 57, 52, 45]).unwrap();
        let r = analyze_counts("rt", &counts, None, Some(2.5)).unwrap();
        let back = AnalysisReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.tilde_delta.to_bits(), r.tilde_delta.to_bits());
    }

    #[test]
    fn csv_carries_the_same_numbers() {
        let counts = DigitCounts::from_counts(DigitSystem::FirstDigit, vec![301, 170, 130, 99, 80, 66, 57, 52, 45]).unwrap();
        let r = analyze_counts("csv", &counts, None, None).unwrap();
        let text = r.to_csv().unwrap();
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let headers = rdr.headers().unwrap().clone();
        let row = rdr.records().next().unwrap().unwrap();
        let get = |name: &str| row.get(headers.iter().position(|h| h == name).unwrap()).unwrap().to_string();
        assert_eq!(get("tilde_delta").parse::<f64>().unwrap(), r.tilde_delta);
        assert_eq!(get("severity_exceeds").parse::<f64>().unwrap(), r.severity_exceeds.severity.get());
        assert_eq!(get("psi_star"), "");
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0:0.004:5").unwrap(), vec![0.0, 0.001, 0.002, 0.003, 0.004]);
        assert_eq!(parse_grid("0.5:1:1").unwrap(), vec![0.5]);
        for bad in ["", "0:1", "a:1:2", "0:1:0", "0:1:2:3"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn curve_is_monotone_and_starts_at_p_complement() {
        let grid = parse_grid("0:0.008:41").unwrap();
        let pts = severity_curve(DigitSystem::FirstDigit, 19_451, 6.621, &grid).unwrap();
        let p = crate::specialfn::std_normal_sf(6.621).get();
        assert!((pts[0].severity_exceeds - (1.0 - p)).abs() < 1e-15);
        assert!(pts.windows(2).all(|w| w[1].severity_exceeds <= w[0].severity_exceeds));
    }

    #[test]
    fn plot_rows_need_data() {
        assert!(matches!(plot_rows(&DigitCounts::empty(DigitSystem::FirstDigit)), Err(Error::EmptySample)));
        let rows = plot_rows(&benford_counts(DigitSystem::FirstTwoDigits, 5000)).unwrap();
        let mut buf = Vec::new();
        write_plot_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("digit,observed,benford\n10,"));
        assert_eq!(text.lines().count(), 91);
    }

    #[test]
    fn calibration_report_warns_on_negative() {
        let mut cfg = CalibrationConfig::default_for(DigitSystem::FirstDigit);
        cfg.threshold = 1e-4;
        let ds = crate::severity::delta_star(&cfg).unwrap();
        let r = CalibrationReport::new(cfg, ds);
        assert_eq!(r.warnings.len(), 1);
    }
}
