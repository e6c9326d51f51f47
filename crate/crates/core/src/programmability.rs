//! Programmability coefficient: how strongly a system's compressed behavior
//! responds to single-bit changes of its input, and how that response evolves
//! with runtime.
//!
//! Inputs are taken in binary-reflected Gray order, so consecutive inputs
//! differ in one cell. For each sampled runtime `t` the variability is
//!
//! ```text
//! d(t) = sum_j |C(M_t(i_{j+1})) - C(M_t(i_j))| / (t * (n - 1))
//! ```
//!
//! with `C` the compressed size in bits of the rows the automaton produced
//! (rows `1..=t`; the input row itself is excluded so that a system which
//! ignores its input scores exactly zero). The coefficient is the least-squares
//! slope of `d` against `t`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compress::{compressed_size_bits, CompressorId};
use crate::eca::{evolve, gray_enumeration, Configuration, Rule};
use crate::error::{domain, Result};
use crate::stats::{coefficient_of_variation, mean, std_dev};

pub use crate::stats::{fit_line, LineFit};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariabilityPoint {
    pub t: usize,
    pub d: f64,
    /// Sum of absolute consecutive differences in bits, `d * t * (n - 1)`.
    #[serde(skip)]
    pub diff_sum: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariabilitySeries {
    pub rule: Rule,
    pub width: usize,
    pub n: usize,
    pub compressor: CompressorId,
    pub points: Vec<VariabilityPoint>,
}

/// Compressed sizes of the produced rows for each input at each sampled time.
///
/// Returns one row per input, one column per entry of `times`.
pub fn response_bits(
    rule: &Rule,
    inputs: &[Configuration],
    times: &[usize],
    id: CompressorId,
) -> Vec<Vec<u64>> {
    let t_max = times.iter().copied().max().unwrap_or(0);
    inputs
        .par_iter()
        .map(|input| {
            let ascii = evolve(rule, input, t_max).to_ascii();
            let row = input.width() + 1;
            times
                .iter()
                .map(|&t| compressed_size_bits(&ascii[row..row * (t + 1)], id))
                .collect()
        })
        .collect()
}

fn sample_times(t_max: usize, t_step: usize) -> Result<Vec<usize>> {
    if t_step == 0 || t_max < t_step {
        return domain(format!("need 1 <= t_step <= t_max, got {t_step}, {t_max}"));
    }
    Ok((1..=t_max / t_step).map(|k| k * t_step).collect())
}

fn gray_inputs(width: usize, n: usize) -> Result<Vec<Configuration>> {
    if n < 2 {
        return domain(format!("need at least 2 inputs to take differences, got {n}"));
    }
    gray_enumeration(width, n as u64)
}

pub fn variability_series(
    rule: &Rule,
    width: usize,
    n: usize,
    t_max: usize,
    t_step: usize,
    id: CompressorId,
) -> Result<VariabilitySeries> {
    let inputs = gray_inputs(width, n)?;
    let times = sample_times(t_max, t_step)?;
    let bits = response_bits(rule, &inputs, &times, id);
    let points = times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let diff_sum: u64 = bits.windows(2).map(|w| w[1][k].abs_diff(w[0][k])).sum();
            VariabilityPoint {
                t,
                d: diff_sum as f64 / (t * (n - 1)) as f64,
                diff_sum,
            }
        })
        .collect();
    Ok(VariabilitySeries {
        rule: *rule,
        width,
        n,
        compressor: id,
        points,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProgrammabilityReport {
    pub series: VariabilitySeries,
    pub t_max: usize,
    pub t_step: usize,
    /// The coefficient: fitted derivative of `d` with respect to time.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl ProgrammabilityReport {
    pub fn mean_d(&self) -> f64 {
        mean(&self.series.points.iter().map(|p| p.d).collect::<Vec<_>>())
    }

    pub fn to_record(&self) -> ReportRecord {
        ReportRecord {
            rule: self.series.rule.number(),
            width: self.series.width,
            n: self.series.n,
            t_max: self.t_max,
            t_step: self.t_step,
            compressor: self.series.compressor,
            points: self
                .series
                .points
                .iter()
                .map(|p| PointRecord { t: p.t, d: p.d })
                .collect(),
            slope: self.slope,
            intercept: self.intercept,
            r2: self.r_squared,
        }
    }

    /// `t,d` rows mirroring the JSON points.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,d\n");
        for p in &self.series.points {
            out.push_str(&format!("{},{}\n", p.t, p.d));
        }
        out
    }
}

/// Serialized form of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub rule: u8,
    pub width: usize,
    pub n: usize,
    pub t_max: usize,
    pub t_step: usize,
    pub compressor: CompressorId,
    pub points: Vec<PointRecord>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub t: usize,
    pub d: f64,
}

pub fn programmability_coefficient(
    rule: &Rule,
    width: usize,
    n: usize,
    t_max: usize,
    t_step: usize,
    id: CompressorId,
) -> Result<ProgrammabilityReport> {
    let series = variability_series(rule, width, n, t_max, t_step, id)?;
    let pts: Vec<(f64, f64)> = series.points.iter().map(|p| (p.t as f64, p.d)).collect();
    let (slope, intercept, r_squared) = if pts.len() < 2 {
        // a single sample carries no derivative
        (0.0, pts[0].1, 1.0)
    } else {
        let fit = fit_line(&pts)?;
        (fit.slope, fit.intercept, fit.r_squared)
    };
    Ok(ProgrammabilityReport {
        series,
        t_max,
        t_step,
        slope,
        intercept,
        r_squared,
    })
}

/// Coefficient of variation of the compressed responses after `t` steps
/// across the first `n` Gray-ordered inputs.
pub fn input_variability(
    rule: &Rule,
    width: usize,
    n: usize,
    t: usize,
    id: CompressorId,
) -> Result<f64> {
    if t == 0 {
        return domain("input variability needs t >= 1");
    }
    let inputs = gray_inputs(width, n)?;
    let bits: Vec<f64> = response_bits(rule, &inputs, &[t], id)
        .into_iter()
        .map(|row| row[0] as f64)
        .collect();
    Ok(coefficient_of_variation(&bits))
}

/// Indices `j` where `|lengths[j+1] - lengths[j]|` exceeds `z` standard
/// deviations of all consecutive absolute differences.
pub fn detect_transitions(lengths: &[u64], z: f64) -> Result<Vec<usize>> {
    if lengths.len() < 3 {
        return domain(format!("need at least 3 lengths, got {}", lengths.len()));
    }
    if z.is_nan() || z <= 0.0 {
        return domain(format!("z must be positive, got {z}"));
    }
    let diffs: Vec<f64> = lengths
        .windows(2)
        .map(|w| w[1].abs_diff(w[0]) as f64)
        .collect();
    let sigma = std_dev(&diffs);
    if sigma == 0.0 {
        return Ok(Vec::new());
    }
    Ok(diffs
        .iter()
        .enumerate()
        .filter(|(_, &d)| d > z * sigma)
        .map(|(j, _)| j)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lz() -> CompressorId {
        CompressorId::builtin_lzss()
    }

    #[test]
    fn zero_rule_has_no_variability() {
        for n in [2, 5, 16] {
            let s = variability_series(&Rule::from_u8(0), 12, n, 100, 10, lz()).unwrap();
            for p in &s.points {
                assert_eq!(p.d, 0.0);
                assert!(p.diff_sum <= 8 * (n as u64 - 1));
            }
        }
        let r = programmability_coefficient(&Rule::from_u8(0), 12, 16, 200, 20, lz()).unwrap();
        assert!(r.slope.abs() < 1e-4);
    }

    #[test]
    fn identity_rule_normalization_dominates() {
        let s = variability_series(&Rule::from_u8(204), 8, 8, 100, 10, lz()).unwrap();
        let first = s.points[0].d;
        assert!(first > 0.0);
        for p in &s.points[1..] {
            assert!(p.d <= first, "{} > {first} at t={}", p.d, p.t);
        }
    }

    #[test]
    fn rule_30_always_varies() {
        let s = variability_series(&Rule::from_u8(30), 12, 16, 200, 20, lz()).unwrap();
        assert!(s.points.iter().all(|p| p.d > 0.0));
    }

    #[test]
    fn series_uses_gray_order() {
        // an independent reference: Gray code k ^ (k >> 1) as a 12-bit string
        let rule = Rule::from_u8(110);
        let n = 16;
        let inputs: Vec<Configuration> = (0u32..n)
            .map(|k| Configuration::parse(&format!("{:012b}", k ^ (k >> 1))).unwrap())
            .collect();
        let series = variability_series(&rule, 12, n as usize, 60, 20, lz()).unwrap();
        for p in &series.points {
            let bits: Vec<u64> = inputs
                .iter()
                .map(|c| {
                    let d = evolve(&rule, c, p.t);
                    compressed_size_bits(&crate::eca::ascii_rows(&d.rows()[1..]), lz())
                })
                .collect();
            let expected: u64 = bits.windows(2).map(|w| w[0].abs_diff(w[1])).sum();
            assert_eq!(p.diff_sum, expected);
            assert_eq!(p.d, expected as f64 / (p.t as f64 * (n as f64 - 1.0)));
        }
    }

    #[test]
    fn argument_errors() {
        assert!(variability_series(&Rule::from_u8(30), 12, 1, 10, 1, lz()).is_err());
        assert!(variability_series(&Rule::from_u8(30), 3, 9, 10, 1, lz()).is_err());
        assert!(variability_series(&Rule::from_u8(30), 12, 4, 10, 0, lz()).is_err());
        assert!(input_variability(&Rule::from_u8(30), 12, 1, 10, lz()).is_err());
    }

    #[test]
    fn report_is_deterministic_and_self_consistent() {
        let a = programmability_coefficient(&Rule::from_u8(22), 12, 16, 200, 20, lz()).unwrap();
        let b = programmability_coefficient(&Rule::from_u8(22), 12, 16, 200, 20, lz()).unwrap();
        assert_eq!(a, b);
        let pts: Vec<(f64, f64)> = a.series.points.iter().map(|p| (p.t as f64, p.d)).collect();
        let fit = fit_line(&pts).unwrap();
        assert_eq!((a.slope, a.intercept, a.r_squared), (fit.slope, fit.intercept, fit.r_squared));
        let rec = a.to_record();
        assert_eq!(rec.points.len(), 10);
        assert_eq!(a.to_csv().lines().count(), 11);
    }

    #[test]
    fn input_variability_examples() {
        let zero = input_variability(&Rule::from_u8(0), 12, 16, 200, lz()).unwrap();
        assert_eq!(zero, 0.0);
        let r110 = input_variability(&Rule::from_u8(110), 12, 16, 200, lz()).unwrap();
        assert!(r110 > zero);
        let alias = CompressorId::from_name("lzss").unwrap();
        assert_eq!(
            input_variability(&Rule::from_u8(110), 12, 16, 200, alias).unwrap(),
            r110
        );
    }

    #[test]
    fn transitions() {
        assert!(detect_transitions(&[5, 5, 5, 5], 1.0).unwrap().is_empty());
        assert_eq!(detect_transitions(&[100, 100, 100, 400, 400], 2.0).unwrap(), [2]);
        // identical consecutive diffs: sigma is zero
        assert!(detect_transitions(&[1, 3, 5, 7, 9], 0.5).unwrap().is_empty());
        assert!(detect_transitions(&[1, 2], 1.0).is_err());
        assert!(detect_transitions(&[1, 2, 3], 0.0).is_err());
    }

    proptest! {
        #[test]
        fn diff_sums_are_integral(rule in 0u8..=255, n in 2usize..12) {
            let s = variability_series(&Rule::from_u8(rule), 10, n, 30, 10, lz()).unwrap();
            for p in &s.points {
                prop_assert!(p.d >= 0.0);
                let scaled = p.d * (p.t * (n - 1)) as f64;
                prop_assert!((scaled - p.diff_sum as f64).abs() < 1e-6);
            }
        }
    }
}
