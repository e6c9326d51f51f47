//! Stimulus-driven agents in a work envelope.
//!
//! An agent is a three-joint arm (base yaw, shoulder pitch, elbow pitch)
//! whose joint angles move in integer ticks. Each step it reads a small
//! integer stimulus vector and updates its joints:
//!
//! - `periodic` ignores the stimulus and replays a fixed cycle of poses,
//! - `random` moves by seeded noise that is independent of the stimulus,
//! - `reactive` moves each joint by `gain` times the matching stimulus
//!   component.
//!
//! Joints are clamped to `±JOINT_LIMIT` ticks. End-effector positions are
//! quantized to integers in `[-1000, 1000]` (1000 = the envelope radius, the
//! summed segment lengths) and projected onto the XY, XZ and YZ planes, giving
//! a 6-coordinate phase-space point per step. Complexity is read off the
//! compressed phase-space text; variability and controllability come from
//! normalized compression distances.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calibration::{self, AssessmentThresholds};
use crate::compress::{compressed_size_bits, CompressorId};
use crate::error::{domain, Error, Result};
use crate::lattice::{bdm_with, CodingTable, Lattice};

pub const JOINT_LIMIT: i32 = 96;
/// Joint ticks per full turn.
pub const TICKS_PER_TURN: f64 = 256.0;
/// Quantized radius of the work envelope.
pub const ENVELOPE_RADIUS: i32 = 1000;
pub const STIMULUS_MAX: i8 = 2;
pub const DEFAULT_GRID: usize = 64;
pub const DEFAULT_SEGMENTS: [f64; 3] = [4.0, 3.0, 2.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Periodic,
    Random,
    Reactive,
}

impl AgentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            AgentKind::Periodic => "periodic",
            AgentKind::Random => "random",
            AgentKind::Reactive => "reactive",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic" => Ok(AgentKind::Periodic),
            "random" => Ok(AgentKind::Random),
            "reactive" => Ok(AgentKind::Reactive),
            other => domain(format!("unknown agent kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub kind: AgentKind,
    /// Cycle length of the periodic agent.
    pub period: usize,
    /// Noise seed of the random agent.
    pub seed: u64,
    /// Ticks per stimulus unit of the reactive agent.
    pub gain: i32,
    pub segments: Vec<f64>,
}

impl AgentSpec {
    pub fn periodic(period: usize) -> Self {
        AgentSpec {
            kind: AgentKind::Periodic,
            period,
            seed: 0,
            gain: 0,
            segments: DEFAULT_SEGMENTS.to_vec(),
        }
    }

    pub fn random(seed: u64) -> Self {
        AgentSpec {
            kind: AgentKind::Random,
            period: 0,
            seed,
            gain: 0,
            segments: DEFAULT_SEGMENTS.to_vec(),
        }
    }

    pub fn reactive(gain: i32) -> Self {
        AgentSpec {
            kind: AgentKind::Reactive,
            period: 0,
            seed: 0,
            gain,
            segments: DEFAULT_SEGMENTS.to_vec(),
        }
    }

    /// The reference agent of each kind.
    pub fn reference(kind: AgentKind) -> Self {
        match kind {
            AgentKind::Periodic => Self::periodic(8),
            AgentKind::Random => Self::random(11),
            AgentKind::Reactive => Self::reactive(1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() || self.segments.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return domain("segment lengths must be positive and finite");
        }
        match self.kind {
            AgentKind::Periodic if self.period == 0 => domain("periodic agent needs period >= 1"),
            AgentKind::Reactive if self.gain <= 0 => domain("reactive agent needs gain >= 1"),
            _ => Ok(()),
        }
    }

    fn reach(&self) -> f64 {
        self.segments.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum StimulusKind {
    Constant,
    Periodic { period: usize },
    Random,
}

/// Recipe for a stimulus stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StimulusSpec {
    pub kind: StimulusKind,
    pub seed: u64,
}

impl StimulusSpec {
    pub fn constant(seed: u64) -> Self {
        StimulusSpec {
            kind: StimulusKind::Constant,
            seed,
        }
    }

    pub fn periodic(period: usize, seed: u64) -> Self {
        StimulusSpec {
            kind: StimulusKind::Periodic { period },
            seed,
        }
    }

    pub fn random(seed: u64) -> Self {
        StimulusSpec {
            kind: StimulusKind::Random,
            seed,
        }
    }

    /// Identifier distinguishing streams of different kind, period or seed.
    pub fn stream_id(&self) -> u64 {
        let (tag, period) = match self.kind {
            StimulusKind::Constant => (0u64, 0u64),
            StimulusKind::Periodic { period } => (1, period as u64),
            StimulusKind::Random => (2, 0),
        };
        let mut h = self.seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ period.rotate_left(32);
        h = (h ^ (h >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h ^ (h >> 31)
    }

    /// Generates `len` stimulus vectors with components in `[-2, 2]`.
    ///
    /// A periodic stream repeats a cycle whose second half negates the first,
    /// so a reactive agent returns to its starting pose after every cycle.
    pub fn generate(&self, len: usize) -> Result<StimulusStream> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut draw = || -> [i8; 3] {
            std::array::from_fn(|_| rng.gen_range(-STIMULUS_MAX..=STIMULUS_MAX))
        };
        let values = match self.kind {
            StimulusKind::Constant => vec![draw(); len],
            StimulusKind::Periodic { period } => {
                if period < 2 {
                    return domain(format!("stimulus period {period} below 2"));
                }
                let half: Vec<[i8; 3]> = (0..period / 2).map(|_| draw()).collect();
                let mut cycle = half.clone();
                if period % 2 == 1 {
                    cycle.push([0; 3]);
                }
                cycle.extend(half.iter().map(|v| v.map(|x| -x)));
                cycle.iter().copied().cycle().take(len).collect()
            }
            StimulusKind::Random => (0..len).map(|_| draw()).collect(),
        };
        Ok(StimulusStream { spec: *self, values })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StimulusStream {
    pub spec: StimulusSpec,
    pub values: Vec<[i8; 3]>,
}

impl StimulusStream {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Per-step signs of the components, `-`, `0` or `+`, one line per step.
    pub fn sign_text(&self) -> Vec<u8> {
        sign_text(self.values.iter().map(|v| v.map(i32::from)))
    }
}

fn sign_text(rows: impl Iterator<Item = [i32; 3]>) -> Vec<u8> {
    let mut out = Vec::new();
    for row in rows {
        out.extend(row.iter().map(|v| match v.signum() {
            -1 => b'-',
            0 => b'0',
            _ => b'+',
        }));
        out.push(b'\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub steps: usize,
    /// Quantized end-effector positions, one per step.
    pub positions: Vec<[i32; 3]>,
    /// Joint angles in ticks after each step.
    pub joints: Vec<[i32; 3]>,
    pub stimuli: StimulusStream,
}

impl Trajectory {
    /// Signs of the executed joint movements, one line per step; the
    /// movement of step 0 is taken from the rest pose.
    pub fn movement_text(&self) -> Vec<u8> {
        let mut prev = [0i32; 3];
        sign_text(self.joints.iter().map(|j| {
            let d = [j[0] - prev[0], j[1] - prev[1], j[2] - prev[2]];
            prev = *j;
            d
        }))
    }

    /// CSV `step,x,y,z,s1,s2,s3`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,x,y,z,s1,s2,s3\n");
        for (k, (p, s)) in self.positions.iter().zip(&self.stimuli.values).enumerate() {
            out.push_str(&format!(
                "{k},{},{},{},{},{},{}\n",
                p[0], p[1], p[2], s[0], s[1], s[2]
            ));
        }
        out
    }
}

fn clamp_joint(v: i32) -> i32 {
    v.clamp(-JOINT_LIMIT, JOINT_LIMIT)
}

/// Forward kinematics, quantized toward zero so the envelope bound holds.
fn end_effector(spec: &AgentSpec, joints: [i32; 3]) -> [i32; 3] {
    let angle = |t: i32| f64::from(t) * TAU / TICKS_PER_TURN;
    let (yaw, shoulder, elbow) = (angle(joints[0]), angle(joints[1]), angle(joints[2]));
    let (mut r, mut z) = (0.0, 0.0);
    for (i, &l) in spec.segments.iter().enumerate() {
        let pitch = shoulder + i as f64 * elbow;
        r += l * pitch.cos();
        z += l * pitch.sin();
    }
    let scale = f64::from(ENVELOPE_RADIUS) / spec.reach();
    let q = |v: f64| (v * scale).trunc() as i32;
    [q(r * yaw.cos()), q(r * yaw.sin()), q(z)]
}

fn periodic_pose(phase: usize, period: usize) -> [i32; 3] {
    let theta = TAU * phase as f64 / period as f64;
    std::array::from_fn(|j| clamp_joint((48.0 * (theta + j as f64).sin()).round() as i32))
}

pub fn simulate_agent(spec: &AgentSpec, stimuli: &StimulusStream, steps: usize) -> Result<Trajectory> {
    spec.validate()?;
    if steps == 0 {
        return domain("simulation needs at least one step");
    }
    if stimuli.len() < steps {
        return domain(format!(
            "stimulus stream of {} values shorter than {steps} steps",
            stimuli.len()
        ));
    }
    let mut noise = ChaCha8Rng::seed_from_u64(spec.seed);
    // noise differs per stimulus stream but never depends on its values
    noise.set_stream(stimuli.spec.stream_id());
    let mut joints = [0i32; 3];
    let mut trace = Vec::with_capacity(steps);
    for (k, s) in stimuli.values.iter().take(steps).enumerate() {
        joints = match spec.kind {
            AgentKind::Periodic => periodic_pose(k % spec.period, spec.period),
            AgentKind::Random => std::array::from_fn(|j| {
                clamp_joint(joints[j] + noise.gen_range(-i32::from(STIMULUS_MAX)..=i32::from(STIMULUS_MAX)))
            }),
            AgentKind::Reactive => {
                std::array::from_fn(|j| clamp_joint(joints[j] + spec.gain * i32::from(s[j])))
            }
        };
        trace.push(joints);
    }
    Ok(Trajectory {
        steps,
        positions: trace.iter().map(|&j| end_effector(spec, j)).collect(),
        joints: trace,
        stimuli: StimulusStream {
            spec: stimuli.spec,
            values: stimuli.values[..steps].to_vec(),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Plane {
    XY,
    XZ,
    YZ,
}

/// Per-step `(x, y, x, z, y, z)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseSpaceSeries {
    pub points: Vec<[i32; 6]>,
}

impl PhaseSpaceSeries {
    pub fn plane(&self, plane: Plane) -> impl Iterator<Item = (i32, i32)> + '_ {
        let (a, b) = match plane {
            Plane::XY => (0, 1),
            Plane::XZ => (2, 3),
            Plane::YZ => (4, 5),
        };
        self.points.iter().map(move |p| (p[a], p[b]))
    }

    /// Positions from the coordinates of two distinct planes.
    pub fn reconstruct(&self, first: Plane, second: Plane) -> Result<Vec<[i32; 3]>> {
        if first == second {
            return domain("reconstruction needs two distinct planes");
        }
        Ok(self
            .points
            .iter()
            .map(|p| {
                let mut pos = [None; 3];
                for plane in [first, second] {
                    let (axes, coords) = match plane {
                        Plane::XY => ([0, 1], [p[0], p[1]]),
                        Plane::XZ => ([0, 2], [p[2], p[3]]),
                        Plane::YZ => ([1, 2], [p[4], p[5]]),
                    };
                    for (a, c) in axes.into_iter().zip(coords) {
                        pos[a] = Some(c);
                    }
                }
                pos.map(|c| c.expect("two planes cover three axes"))
            })
            .collect())
    }

    /// Canonical text: six comma-separated decimals per step, newline-terminated.
    pub fn to_text(&self) -> Vec<u8> {
        let mut out = String::new();
        for p in &self.points {
            out.push_str(&format!("{},{},{},{},{},{}\n", p[0], p[1], p[2], p[3], p[4], p[5]));
        }
        out.into_bytes()
    }
}

pub fn project(trajectory: &Trajectory) -> PhaseSpaceSeries {
    PhaseSpaceSeries {
        points: trajectory
            .positions
            .iter()
            .map(|&[x, y, z]| [x, y, x, z, y, z])
            .collect(),
    }
}

/// Marks visited cells of each plane after mapping its bounding box onto a
/// `grid x grid` lattice. Returns the XY, XZ and YZ lattices.
pub fn rasterize(series: &PhaseSpaceSeries, grid: usize) -> Result<[Lattice; 3]> {
    if grid < 2 {
        return domain(format!("grid {grid} below 2"));
    }
    let raster = |plane: Plane| -> Result<Lattice> {
        let pts: Vec<(i32, i32)> = series.plane(plane).collect();
        let mut lattice = Lattice::zeros(grid, grid)?;
        if pts.is_empty() {
            return Ok(lattice);
        }
        let bounds = |f: fn(&(i32, i32)) -> i32| {
            let lo = pts.iter().map(f).min().expect("nonempty");
            let hi = pts.iter().map(f).max().expect("nonempty");
            (i64::from(lo), i64::from(hi))
        };
        let (ulo, uhi) = bounds(|p| p.0);
        let (vlo, vhi) = bounds(|p| p.1);
        let cell = |v: i32, lo: i64, hi: i64| -> usize {
            if hi == lo {
                0
            } else {
                ((i64::from(v) - lo) * (grid as i64 - 1) / (hi - lo)) as usize
            }
        };
        for &(u, v) in &pts {
            lattice.set(cell(v, vlo, vhi), cell(u, ulo, uhi), true);
        }
        Ok(lattice)
    };
    Ok([raster(Plane::XY)?, raster(Plane::XZ)?, raster(Plane::YZ)?])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BehavioralComplexity {
    pub c_bits: u64,
    pub bdm3: f64,
}

/// Compressed phase-space text and the summed block decomposition of the
/// three rasterized planes (grid [`DEFAULT_GRID`]).
pub fn behavioral_complexity(
    trajectory: &Trajectory,
    id: CompressorId,
    table: &CodingTable,
) -> Result<BehavioralComplexity> {
    let series = project(trajectory);
    let c_bits = compressed_size_bits(&series.to_text(), id);
    let bdm3 = rasterize(&series, DEFAULT_GRID)?
        .iter()
        .map(|l| bdm_with(l, table, id).value)
        .sum();
    Ok(BehavioralComplexity { c_bits, bdm3 })
}

/// Compressed size of the phase-space text only.
pub fn phase_space_bits(trajectory: &Trajectory, id: CompressorId) -> u64 {
    compressed_size_bits(&project(trajectory).to_text(), id)
}

/// Normalized compression distance.
pub fn ncd(a: &[u8], b: &[u8], id: CompressorId) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return domain("ncd of an empty sequence");
    }
    let ca = compressed_size_bits(a, id) as f64;
    let cb = compressed_size_bits(b, id) as f64;
    let cab = compressed_size_bits(&[a, b].concat(), id) as f64;
    Ok((cab - ca.min(cb)) / ca.max(cb))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BehaviorLabel {
    Inert,
    RandomUncontrollable,
    Enveloped,
    Programmable,
}

impl BehaviorLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            BehaviorLabel::Inert => "inert",
            BehaviorLabel::RandomUncontrollable => "random-uncontrollable",
            BehaviorLabel::Enveloped => "enveloped",
            BehaviorLabel::Programmable => "programmable",
        }
    }
}

impl fmt::Display for BehaviorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Position in the variability/controllability plane.
pub fn label_for(variability: f64, controllability: f64, th: &AssessmentThresholds) -> BehaviorLabel {
    let varies = variability >= th.variability_floor;
    let controlled = controllability >= th.controllability_floor;
    match (varies, controlled) {
        (false, false) => BehaviorLabel::Inert,
        (false, true) => BehaviorLabel::Enveloped,
        (true, false) => BehaviorLabel::RandomUncontrollable,
        (true, true) if (variability - controllability).abs() < th.diagonal_band => {
            BehaviorLabel::Programmable
        }
        (true, true) if variability > controllability => BehaviorLabel::RandomUncontrollable,
        (true, true) => BehaviorLabel::Enveloped,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorAssessment {
    pub agent: AgentKind,
    pub variability: f64,
    pub controllability: f64,
    pub label: BehaviorLabel,
    pub per_stream_c_bits: Vec<u64>,
}

/// Period of the periodic stream used by [`assess`].
pub const ASSESS_STIMULUS_PERIOD: usize = 16;

/// The constant, periodic and random streams probed for each seed.
pub fn assessment_streams(seeds: &[u64]) -> Vec<StimulusSpec> {
    seeds
        .iter()
        .flat_map(|&s| {
            [
                StimulusSpec::constant(s),
                StimulusSpec::periodic(ASSESS_STIMULUS_PERIOD, s),
                StimulusSpec::random(s),
            ]
        })
        .collect()
}

/// Seed of the independent stream that anchors the uncorrelated end of the
/// controllability scale.
fn reference_seed(seed: u64) -> u64 {
    seed ^ 0x5DEE_CE66_D1CE_4E5B
}

pub fn assess(spec: &AgentSpec, steps: usize, seeds: &[u64], id: CompressorId) -> Result<BehaviorAssessment> {
    assess_with(spec, steps, seeds, id, &calibration::frozen().assessment)
}

/// Variability is the mean pairwise distance between the phase-space texts
/// produced under different streams, rescaled so that identical behavior
/// scores 0. Controllability under each random stream is
/// `1 - (ncd(S, M) - ncd(S, S)) / (ncd(S, S') - ncd(S, S))`, clamped to
/// `[0, 1]`, with `S` the stimulus sign text, `M` the movement sign text and
/// `S'` an independent random stream: 1 when movements mirror the stimuli,
/// 0 when they share no more than unrelated stimuli would.
pub fn assess_with(
    spec: &AgentSpec,
    steps: usize,
    seeds: &[u64],
    id: CompressorId,
    th: &AssessmentThresholds,
) -> Result<BehaviorAssessment> {
    if seeds.is_empty() {
        return domain("assessment needs at least one stream seed");
    }
    let streams = assessment_streams(seeds);
    let runs = streams
        .iter()
        .map(|s| simulate_agent(spec, &s.generate(steps)?, steps))
        .collect::<Result<Vec<_>>>()?;
    let texts: Vec<Vec<u8>> = runs.iter().map(|t| project(t).to_text()).collect();
    let per_stream_c_bits = texts.iter().map(|t| compressed_size_bits(t, id)).collect();

    let floors = texts.iter().map(|t| ncd(t, t, id)).collect::<Result<Vec<_>>>()?;
    let mut spread = Vec::new();
    for i in 0..texts.len() {
        for j in i + 1..texts.len() {
            let floor = floors[i].max(floors[j]);
            let d = ncd(&texts[i], &texts[j], id)?;
            spread.push(((d - floor) / (1.0 - floor)).clamp(0.0, 1.0));
        }
    }
    let variability = crate::stats::mean(&spread);

    let mut control = Vec::new();
    for (stream, run) in streams.iter().zip(&runs) {
        if stream.kind != StimulusKind::Random {
            continue;
        }
        let s = run.stimuli.sign_text();
        let other = StimulusSpec::random(reference_seed(stream.seed)).generate(steps)?;
        let lo = ncd(&s, &s, id)?;
        let hi = ncd(&s, &other.sign_text(), id)?;
        let d = ncd(&s, &run.movement_text(), id)?;
        control.push(if hi > lo {
            1.0 - ((d - lo) / (hi - lo)).clamp(0.0, 1.0)
        } else {
            0.0
        });
    }
    let controllability = crate::stats::mean(&control);

    Ok(BehaviorAssessment {
        agent: spec.kind,
        variability,
        controllability,
        label: label_for(variability, controllability, th),
        per_stream_c_bits,
    })
}

/// Periods of the periodic environments between the constant and the random
/// one, in increasing order of stimulus entropy.
pub const ENVIRONMENT_PERIODS: [usize; 3] = [192, 384, 768];

/// Constant, periodic with growing period, then random.
pub fn entropy_ordered_environments(seed: u64) -> Vec<StimulusSpec> {
    let mut envs = vec![StimulusSpec::constant(seed)];
    envs.extend(ENVIRONMENT_PERIODS.iter().map(|&p| StimulusSpec::periodic(p, seed)));
    envs.push(StimulusSpec::random(seed));
    envs
}

/// Phase-space compressed size of the agent in each environment, in order.
pub fn environment_sweep(spec: &AgentSpec, environments: &[StimulusSpec], steps: usize) -> Result<Vec<u64>> {
    environment_sweep_with(spec, environments, steps, CompressorId::builtin_lzss())
}

pub fn environment_sweep_with(
    spec: &AgentSpec,
    environments: &[StimulusSpec],
    steps: usize,
    id: CompressorId,
) -> Result<Vec<u64>> {
    environments
        .iter()
        .map(|e| Ok(phase_space_bits(&simulate_agent(spec, &e.generate(steps)?, steps)?, id)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lz() -> CompressorId {
        CompressorId::builtin_lzss()
    }

    fn run(spec: &AgentSpec, stream: StimulusSpec, steps: usize) -> Trajectory {
        simulate_agent(spec, &stream.generate(steps).unwrap(), steps).unwrap()
    }

    #[test]
    fn periodic_agent_repeats() {
        for p in [1, 3, 8, 13] {
            let t = run(&AgentSpec::periodic(p), StimulusSpec::random(5), 200);
            for k in 0..200 - p {
                assert_eq!(t.positions[k], t.positions[k + p]);
            }
        }
    }

    #[test]
    fn reactive_agent_settles_under_constant_stimulus() {
        let t = run(&AgentSpec::reactive(1), StimulusSpec::constant(3), 400);
        let tail = &t.positions[300..];
        assert!(tail.iter().all(|p| *p == tail[0]));
        for (j, &s) in t.stimuli.values[0].iter().enumerate() {
            let last = t.joints.last().unwrap()[j];
            match s.signum() {
                0 => assert_eq!(last, 0),
                sign => assert_eq!(last, i32::from(sign) * JOINT_LIMIT),
            }
        }
    }

    #[test]
    fn simulation_is_reproducible() {
        for spec in [AgentSpec::periodic(8), AgentSpec::random(4), AgentSpec::reactive(2)] {
            let a = run(&spec, StimulusSpec::random(9), 300);
            let b = run(&spec, StimulusSpec::random(9), 300);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn simulation_errors() {
        let short = StimulusSpec::random(1).generate(5).unwrap();
        assert!(simulate_agent(&AgentSpec::reactive(1), &short, 6).is_err());
        assert!(simulate_agent(&AgentSpec::reactive(1), &short, 0).is_err());
        assert!(simulate_agent(&AgentSpec::periodic(0), &short, 5).is_err());
        assert!(simulate_agent(&AgentSpec::reactive(0), &short, 5).is_err());
        let mut bad = AgentSpec::random(1);
        bad.segments = vec![1.0, -2.0];
        assert!(simulate_agent(&bad, &short, 5).is_err());
        assert!(StimulusSpec::periodic(1, 1).generate(5).is_err());
    }

    #[test]
    fn stimulus_streams() {
        let c = StimulusSpec::constant(4).generate(50).unwrap();
        assert!(c.values.iter().all(|v| *v == c.values[0]));
        for period in [2, 7, 16] {
            let p = StimulusSpec::periodic(period, 4).generate(100).unwrap();
            for k in 0..100 - period {
                assert_eq!(p.values[k], p.values[k + period]);
            }
            let sum: [i32; 3] = std::array::from_fn(|j| {
                p.values[..period].iter().map(|v| i32::from(v[j])).sum()
            });
            assert_eq!(sum, [0, 0, 0]);
        }
        let r = StimulusSpec::random(4).generate(1000).unwrap();
        assert!(r.values.iter().flatten().all(|&x| (-2..=2).contains(&x)));
        assert_eq!(r, StimulusSpec::random(4).generate(1000).unwrap());
    }

    #[test]
    fn projection_examples() {
        let t = Trajectory {
            steps: 2,
            positions: vec![[1, 2, 3], [1, 2, 3]],
            joints: vec![[0; 3]; 2],
            stimuli: StimulusSpec::constant(0).generate(2).unwrap(),
        };
        let s = project(&t);
        assert_eq!(s.points, vec![[1, 2, 1, 3, 2, 3]; 2]);
        assert_eq!(s.to_text(), b"1,2,1,3,2,3\n1,2,1,3,2,3\n");
        for (a, b) in [(Plane::XY, Plane::XZ), (Plane::XY, Plane::YZ), (Plane::XZ, Plane::YZ)] {
            assert_eq!(s.reconstruct(a, b).unwrap(), t.positions);
        }
        assert!(s.reconstruct(Plane::XY, Plane::XY).is_err());
    }

    #[test]
    fn rasterize_examples() {
        let t = run(&AgentSpec::periodic(1), StimulusSpec::constant(0), 10);
        let planes = rasterize(&project(&t), 8).unwrap();
        assert!(planes.iter().all(|l| l.count_ones() == 1));
        assert!(rasterize(&project(&t), 1).is_err());

        let periodic = run(&AgentSpec::periodic(8), StimulusSpec::random(1), 1000);
        let random = run(&AgentSpec::random(1), StimulusSpec::random(1), 1000);
        let pc: usize = rasterize(&project(&periodic), 64).unwrap().iter().map(|l| l.count_ones()).sum();
        let rc: usize = rasterize(&project(&random), 64).unwrap().iter().map(|l| l.count_ones()).sum();
        assert!(pc <= 3 * 8);
        assert!(pc < rc);
    }

    #[test]
    fn ncd_examples() {
        let mut r1 = ChaCha8Rng::seed_from_u64(1);
        let mut r2 = ChaCha8Rng::seed_from_u64(2);
        let a: Vec<u8> = (0..4096).map(|_| rand::Rng::gen(&mut r1)).collect();
        let b: Vec<u8> = (0..4096).map(|_| rand::Rng::gen(&mut r2)).collect();
        assert!(ncd(&a, &a, lz()).unwrap() < 0.2);
        let rule = crate::eca::rule_table(30).unwrap();
        let x = crate::eca::evolve(&rule, &crate::eca::single_cell_config(101).unwrap(), 100).to_ascii();
        assert!(ncd(&x, &x, lz()).unwrap() < 0.2);
        assert!(ncd(&a, &b, lz()).unwrap() > 0.8);
        assert!(ncd(&[], &b, lz()).is_err());
    }

    #[test]
    fn assessment_labels() {
        let th = AssessmentThresholds {
            variability_floor: 0.15,
            controllability_floor: 0.5,
            diagonal_band: 0.35,
        };
        assert_eq!(label_for(0.0, 0.0, &th), BehaviorLabel::Inert);
        assert_eq!(label_for(0.05, 0.7, &th), BehaviorLabel::Enveloped);
        assert_eq!(label_for(0.9, 0.1, &th), BehaviorLabel::RandomUncontrollable);
        assert_eq!(label_for(0.8, 0.9, &th), BehaviorLabel::Programmable);
        assert_eq!(label_for(1.0, 0.55, &th), BehaviorLabel::RandomUncontrollable);
        assert_eq!(label_for(0.2, 0.9, &th), BehaviorLabel::Enveloped);
    }

    #[test]
    fn sweep_preserves_order_and_length() {
        let envs = entropy_ordered_environments(3);
        let spec = AgentSpec::periodic(8);
        let v = environment_sweep(&spec, &envs, 300).unwrap();
        assert_eq!(v.len(), envs.len());
        let single = environment_sweep(&spec, &envs[..1], 300).unwrap();
        assert_eq!(single, v[..1]);
    }

    #[test]
    fn ncd_is_nearly_symmetric() {
        for seed in 0..20u64 {
            let a = project(&run(&AgentSpec::reactive(1), StimulusSpec::random(seed), 300)).to_text();
            let b = project(&run(&AgentSpec::random(seed), StimulusSpec::random(seed), 300)).to_text();
            let d = ncd(&a, &b, lz()).unwrap() - ncd(&b, &a, lz()).unwrap();
            assert!(d.abs() < 0.05, "seed {seed}: {d}");
        }
    }

    proptest! {
        #[test]
        fn positions_stay_in_envelope(kind in 0usize..3, seed in any::<u64>(), gain in 1i32..5) {
            let spec = match kind {
                0 => AgentSpec::periodic(seed as usize % 20 + 1),
                1 => AgentSpec::random(seed),
                _ => AgentSpec::reactive(gain),
            };
            let t = run(&spec, StimulusSpec::random(seed), 200);
            prop_assert_eq!(t.positions.len(), 200);
            for p in &t.positions {
                let norm2: i64 = p.iter().map(|&c| i64::from(c) * i64::from(c)).sum();
                prop_assert!(norm2 <= i64::from(ENVELOPE_RADIUS).pow(2));
            }
            let series = project(&t);
            prop_assert_eq!(series.reconstruct(Plane::XZ, Plane::YZ).unwrap(), t.positions.clone());
            for l in rasterize(&series, 16).unwrap() {
                prop_assert!(l.count_ones() <= 200);
            }
        }
    }
}
