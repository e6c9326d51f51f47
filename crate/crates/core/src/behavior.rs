//! Compression curves of space-time evolutions and Wolfram-class estimates.
//!
//! A rule whose evolutions stay compressible as they grow is simple; one whose
//! compressed length keeps pace with the uncompressed length is complex. The
//! class estimate combines the terminal compression ratio, the compression
//! ratio of the late rows alone (which separates homogeneous end states from
//! periodic ones, whose whole-diagram ratios coincide once the transient is
//! amortized) and how much the compressed length varies across random initial
//! conditions.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{self, ClassThresholds};
use crate::compress::{compressed_size_bits, CompressorId};
use crate::eca::{ascii_rows, evolve, random_config, Configuration, Rule, SpaceTimeDiagram};
use crate::error::{domain, Error, Result};
use crate::stats::{coefficient_of_variation, fit_line, mean};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: usize,
    pub c_bits: u64,
    /// Uncompressed ascii size of the same prefix, in bits.
    pub u_bits: u64,
}

impl CurvePoint {
    pub fn ratio(&self) -> f64 {
        self.c_bits as f64 / self.u_bits as f64
    }
}

/// Compressed length of the cumulative evolution prefix against runtime.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressionCurve {
    pub rule: Rule,
    pub input: Configuration,
    pub compressor: CompressorId,
    pub points: Vec<CurvePoint>,
}

impl CompressionCurve {
    /// The curve restricted to its latter half (at least two points).
    pub fn tail(&self) -> CompressionCurve {
        let skip = (self.points.len() / 2).min(self.points.len().saturating_sub(2));
        CompressionCurve {
            points: self.points[skip..].to_vec(),
            ..self.clone()
        }
    }

    /// CSV rows `rule,width,seed,t,c_bits,u_bits,ratio` without header.
    pub fn csv_rows(&self, seed: u64) -> String {
        let mut out = String::new();
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{},{:.6}\n",
                self.rule.number(),
                self.input.width(),
                seed,
                p.t,
                p.c_bits,
                p.u_bits,
                p.ratio()
            ));
        }
        out
    }
}

pub const CURVE_CSV_HEADER: &str = "rule,width,seed,t,c_bits,u_bits,ratio\n";

/// Samples the curve at `t_step, 2*t_step, ..., t_max`.
///
/// The rule is evolved once and prefixes of the ascii serialization are
/// compressed; a prefix of the text form is the text form of the prefix.
pub fn compression_curve(
    rule: &Rule,
    init: &Configuration,
    t_max: usize,
    t_step: usize,
    id: CompressorId,
) -> Result<CompressionCurve> {
    if t_step == 0 || t_max < t_step {
        return domain(format!("need 1 <= t_step <= t_max, got {t_step}, {t_max}"));
    }
    let ascii = evolve(rule, init, t_max).to_ascii();
    let row = init.width() + 1;
    let points = (1..=t_max / t_step)
        .map(|k| {
            let t = k * t_step;
            let prefix = &ascii[..row * (t + 1)];
            CurvePoint {
                t,
                c_bits: compressed_size_bits(prefix, id),
                u_bits: 8 * prefix.len() as u64,
            }
        })
        .collect();
    Ok(CompressionCurve {
        rule: *rule,
        input: init.clone(),
        compressor: id,
        points,
    })
}

/// Compressed bits over uncompressed ascii bits.
pub fn compression_ratio(diagram: &SpaceTimeDiagram, id: CompressorId) -> f64 {
    let ascii = diagram.to_ascii();
    compressed_size_bits(&ascii, id) as f64 / (8 * ascii.len()) as f64
}

/// Least-squares slope of compressed bits against time, in bits per step.
pub fn asymptotic_slope(curve: &CompressionCurve) -> Result<f64> {
    if curve.points.len() < 2 {
        return domain(format!(
            "slope needs at least 2 curve points, got {}",
            curve.points.len()
        ));
    }
    let pts: Vec<(f64, f64)> = curve
        .points
        .iter()
        .map(|p| (p.t as f64, p.c_bits as f64))
        .collect();
    Ok(fit_line(&pts)?.slope)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WolframClass {
    Class1,
    Class2,
    Class3,
    Class4,
}

impl WolframClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            WolframClass::Class1 => "class1",
            WolframClass::Class2 => "class2",
            WolframClass::Class3 => "class3",
            WolframClass::Class4 => "class4",
        }
    }
}

impl fmt::Display for WolframClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WolframClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "class1" => Ok(WolframClass::Class1),
            "class2" => Ok(WolframClass::Class2),
            "class3" => Ok(WolframClass::Class3),
            "class4" => Ok(WolframClass::Class4),
            other => domain(format!("unknown class {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassEstimate {
    pub label: WolframClass,
    pub terminal_ratio: f64,
    /// Mean compression ratio of the last `classify_step(t_max)` rows.
    pub attractor_ratio: f64,
    pub slope_bits_per_step: f64,
    pub input_variability: f64,
}

/// Decision tree over the class features.
pub fn label_for(
    terminal_ratio: f64,
    attractor_ratio: f64,
    input_variability: f64,
    th: &ClassThresholds,
) -> WolframClass {
    let steady = input_variability < th.variability_ceiling;
    if attractor_ratio < th.attractor_homogeneous {
        WolframClass::Class1
    } else if terminal_ratio < th.ratio_periodic && steady {
        WolframClass::Class2
    } else if terminal_ratio >= th.ratio_random && steady {
        WolframClass::Class3
    } else {
        WolframClass::Class4
    }
}

/// Parameters of a classification run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifyParams {
    pub width: usize,
    pub t_max: usize,
    pub n_inputs: usize,
    pub seed: u64,
    pub compressor: CompressorId,
}

impl Default for ClassifyParams {
    fn default() -> Self {
        ClassifyParams {
            width: 100,
            t_max: 100,
            n_inputs: 10,
            seed: DEFAULT_SEED,
            compressor: CompressorId::builtin_lzss(),
        }
    }
}

/// Seed used by the bundled classification run.
pub const DEFAULT_SEED: u64 = 1;

/// Seeds of the `n` random initial conditions drawn for `seed`.
pub fn input_seeds(seed: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen()).collect()
}

/// Curve sampling step used by classification: ten points per curve.
pub fn classify_step(t_max: usize) -> usize {
    (t_max / 10).max(1)
}

pub fn classify_rule(
    rule: &Rule,
    width: usize,
    t_max: usize,
    n_inputs: usize,
    seed: u64,
    id: CompressorId,
) -> Result<ClassEstimate> {
    classify_with(
        rule,
        &ClassifyParams {
            width,
            t_max,
            n_inputs,
            seed,
            compressor: id,
        },
        &calibration::frozen().classification,
    )
}

pub fn classify_with(
    rule: &Rule,
    params: &ClassifyParams,
    thresholds: &ClassThresholds,
) -> Result<ClassEstimate> {
    if params.width == 0 || params.t_max == 0 || params.n_inputs == 0 {
        return domain("classification parameters must be positive");
    }
    let t_step = classify_step(params.t_max);
    let curves = input_seeds(params.seed, params.n_inputs)
        .into_par_iter()
        .map(|s| {
            let init = random_config(params.width, 0.5, s)?;
            compression_curve(rule, &init, params.t_max, t_step, params.compressor)
        })
        .collect::<Result<Vec<_>>>()?;

    let window = t_step.min(params.t_max);
    let attractor: Vec<f64> = curves
        .iter()
        .map(|c| {
            let d = evolve(rule, &c.input, params.t_max);
            let tail = ascii_rows(&d.rows()[d.rows().len() - window..]);
            compressed_size_bits(&tail, params.compressor) as f64 / (8 * tail.len()) as f64
        })
        .collect();
    let terminal: Vec<&CurvePoint> = curves
        .iter()
        .map(|c| c.points.last().expect("t_max >= t_step"))
        .collect();
    let ratios: Vec<f64> = terminal.iter().map(|p| p.ratio()).collect();
    let bits: Vec<f64> = terminal.iter().map(|p| p.c_bits as f64).collect();
    let slopes = curves
        .iter()
        .map(|c| {
            let tail = c.tail();
            if tail.points.len() < 2 {
                Ok(0.0)
            } else {
                asymptotic_slope(&tail)
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let terminal_ratio = mean(&ratios);
    let attractor_ratio = mean(&attractor);
    let input_variability = coefficient_of_variation(&bits);
    Ok(ClassEstimate {
        label: label_for(terminal_ratio, attractor_ratio, input_variability, thresholds),
        terminal_ratio,
        attractor_ratio,
        slope_bits_per_step: mean(&slopes),
        input_variability,
    })
}
