//! Two-dimensional complexity of binary lattices.
//!
//! Block complexities come from the coding theorem `K(x) = -log2 p(x)`, with
//! `p` estimated by how often each `b x b` block occurs in the space-time
//! diagrams of a seeded ensemble of random elementary CA runs. A lattice is
//! scored by the block decomposition method: tile it into non-overlapping
//! blocks and sum, over distinct blocks, the block complexity plus `log2` of
//! its multiplicity.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compress::{compressed_size_bits, CompressorId};
use crate::eca::{evolve, pack_bits, random_config, Rule, SpaceTimeDiagram};
use crate::error::{domain, format, Result};

/// A binary matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Lattice {
    height: usize,
    width: usize,
    cells: Vec<bool>,
}

impl Lattice {
    pub fn new(height: usize, width: usize, cells: Vec<bool>) -> Result<Self> {
        if height == 0 || width == 0 {
            return domain(format!("lattice dimensions {height}x{width} must be positive"));
        }
        if cells.len() != height * width {
            return domain(format!(
                "{} cells for a {height}x{width} lattice",
                cells.len()
            ));
        }
        Ok(Lattice {
            height,
            width,
            cells,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        Self::new(height, width, vec![false; height * width])
    }

    pub fn from_fn(height: usize, width: usize, f: impl Fn(usize, usize) -> bool) -> Result<Self> {
        let cells = (0..height)
            .flat_map(|r| (0..width).map(move |c| (r, c)))
            .map(|(r, c)| f(r, c))
            .collect();
        Self::new(height, width, cells)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.cells[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.cells[row * self.width + col] = value;
    }

    pub fn count_ones(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// Parses the diagram text format: `'0'`/`'1'` rows, one per line.
    pub fn parse_text(text: &str) -> Result<Self> {
        let rows: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        let Some(first) = rows.first() else {
            return format("empty lattice file");
        };
        let width = first.trim_end().len();
        let mut cells = Vec::with_capacity(rows.len() * width);
        for (i, row) in rows.iter().enumerate() {
            let row = row.trim_end();
            if row.len() != width {
                return format(format!("row {i} has {} cells, expected {width}", row.len()));
            }
            for ch in row.chars() {
                match ch {
                    '0' => cells.push(false),
                    '1' => cells.push(true),
                    other => return format(format!("invalid cell {other:?} in row {i}")),
                }
            }
        }
        Self::new(rows.len(), width, cells)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for row in self.cells.chunks(self.width) {
            out.extend(row.iter().map(|&c| if c { '1' } else { '0' }));
            out.push('\n');
        }
        out
    }

    /// Same layout as the binary diagram format: `width` and `height - 1` as
    /// little-endian `u32`, then MSB-first bits.
    pub fn to_packed(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&(self.width as u32).to_le_bytes());
        out.extend_from_slice(&((self.height - 1) as u32).to_le_bytes());
        out.extend(pack_bits(self.cells.iter().copied()));
        out
    }

    pub fn parse_packed(data: &[u8]) -> Result<Self> {
        if data.len() < 8 {
            return format("packed lattice shorter than its header");
        }
        let width = u32::from_le_bytes(data[0..4].try_into().expect("4 bytes")) as usize;
        let height = u32::from_le_bytes(data[4..8].try_into().expect("4 bytes")) as usize + 1;
        let n = width
            .checked_mul(height)
            .ok_or_else(|| crate::Error::Format("lattice dimensions overflow".into()))?;
        let body = &data[8..];
        if body.len() != n.div_ceil(8) {
            return format(format!(
                "packed body has {} bytes, {width}x{height} needs {}",
                body.len(),
                n.div_ceil(8)
            ));
        }
        let cells = (0..n).map(|i| (body[i / 8] >> (7 - i % 8)) & 1 == 1).collect();
        Self::new(height, width, cells)
    }

    /// The `b x b` block with top-left corner `(row, col)` as a `b*b`-bit
    /// integer, row-major with the first cell in the most significant bit.
    /// Cells outside the lattice read as 0.
    pub fn block_pattern(&self, row: usize, col: usize, b: usize) -> u32 {
        let mut pattern = 0u32;
        for r in row..row + b {
            for c in col..col + b {
                let bit = r < self.height && c < self.width && self.get(r, c);
                pattern = (pattern << 1) | u32::from(bit);
            }
        }
        pattern
    }

    /// Non-overlapping `b x b` tiling after zero-padding right and bottom.
    /// Returns the tile patterns and whether padding was needed.
    pub fn tiles(&self, b: usize) -> (Vec<u32>, bool) {
        let rows = self.height.div_ceil(b);
        let cols = self.width.div_ceil(b);
        let padded = !self.height.is_multiple_of(b) || !self.width.is_multiple_of(b);
        let tiles = (0..rows)
            .flat_map(|i| (0..cols).map(move |j| (i, j)))
            .map(|(i, j)| self.block_pattern(i * b, j * b, b))
            .collect();
        (tiles, padded)
    }

    pub fn block_from_pattern(pattern: u32, b: usize) -> Self {
        let n = b * b;
        let cells = (0..n).map(|i| (pattern >> (n - 1 - i)) & 1 == 1).collect();
        Lattice {
            height: b,
            width: b,
            cells,
        }
    }
}

impl From<&SpaceTimeDiagram> for Lattice {
    fn from(d: &SpaceTimeDiagram) -> Self {
        let cells = d.rows().iter().flat_map(|r| r.cells().iter().copied()).collect();
        Lattice {
            height: d.rows().len(),
            width: d.width(),
            cells,
        }
    }
}

pub const TABLE_WIDTH: usize = 32;
pub const TABLE_STEPS: usize = 32;
pub const DEFAULT_BLOCK_SIZE: usize = 3;
pub const DEFAULT_SAMPLES: usize = 20_000;
pub const DEFAULT_TABLE_SEED: u64 = 20_240_601;

const TABLE_MAGIC: &str = "kprobe-coding-table";
const TABLE_VERSION: u32 = 1;

/// Empirical block frequencies and their coding-theorem complexities.
#[derive(Debug, Clone, PartialEq)]
pub struct CodingTable {
    block_size: usize,
    counts: BTreeMap<u32, u64>,
    total: u64,
    k_values: BTreeMap<u32, f64>,
}

impl CodingTable {
    pub fn from_counts(block_size: usize, counts: BTreeMap<u32, u64>) -> Result<Self> {
        check_block_size(block_size)?;
        let limit = 1u64 << (block_size * block_size);
        if let Some((&p, _)) = counts.iter().find(|(&p, _)| u64::from(p) >= limit) {
            return domain(format!("pattern {p} does not fit a {block_size}x{block_size} block"));
        }
        let counts: BTreeMap<u32, u64> = counts.into_iter().filter(|&(_, c)| c > 0).collect();
        let total: u64 = counts.values().sum();
        if total == 0 {
            return domain("coding table has no observations");
        }
        let k_values = counts
            .iter()
            .map(|(&p, &c)| (p, (total as f64 / c as f64).log2()))
            .collect();
        Ok(CodingTable {
            block_size,
            counts,
            total,
            k_values,
        })
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn counts(&self) -> &BTreeMap<u32, u64> {
        &self.counts
    }

    pub fn k_values(&self) -> &BTreeMap<u32, f64> {
        &self.k_values
    }

    pub fn k(&self, pattern: u32) -> Option<f64> {
        self.k_values.get(&pattern).copied()
    }

    /// The observed block of least complexity, ties going to the smaller pattern.
    pub fn simplest(&self) -> (u32, f64) {
        self.k_values
            .iter()
            .map(|(&p, &k)| (p, k))
            .fold((u32::MAX, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
    }

    /// Text file: versioned header, block size, total, then `pattern count`
    /// lines sorted by pattern.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{TABLE_MAGIC} {TABLE_VERSION}\nblock_size {}\ntotal {}\n",
            self.block_size, self.total
        );
        for (p, c) in &self.counts {
            writeln!(out, "{p} {c}").expect("write to String");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        match header.split_whitespace().collect::<Vec<_>>()[..] {
            [TABLE_MAGIC, v] if v == TABLE_VERSION.to_string() => {}
            _ => return format(format!("unrecognized table header {header:?}")),
        }
        let block_size = keyed(lines.next(), "block_size")? as usize;
        let total = keyed(lines.next(), "total")?;
        let mut counts = BTreeMap::new();
        let mut last = None;
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let mut it = line.split_whitespace();
            let (Some(p), Some(c), None) = (it.next(), it.next(), it.next()) else {
                return format(format!("malformed table line {line:?}"));
            };
            let p: u32 = p.parse().map_err(|_| crate::Error::Format(format!("bad pattern {p:?}")))?;
            let c: u64 = c.parse().map_err(|_| crate::Error::Format(format!("bad count {c:?}")))?;
            if last.is_some_and(|l| l >= p) {
                return format("table patterns must be strictly increasing");
            }
            last = Some(p);
            counts.insert(p, c);
        }
        let table = Self::from_counts(block_size, counts)
            .map_err(|e| crate::Error::Format(e.to_string()))?;
        if table.total != total {
            return format(format!("counts sum to {}, header says {total}", table.total));
        }
        Ok(table)
    }
}

fn keyed(line: Option<&str>, key: &str) -> Result<u64> {
    let line = line.unwrap_or_default();
    match line.split_whitespace().collect::<Vec<_>>()[..] {
        [k, v] if k == key => v
            .parse()
            .map_err(|_| crate::Error::Format(format!("bad {key} value {v:?}"))),
        _ => format(format!("expected `{key} <n>`, got {line:?}")),
    }
}

fn check_block_size(b: usize) -> Result<()> {
    if (2..=4).contains(&b) {
        Ok(())
    } else {
        domain(format!("block size {b} outside 2..=4"))
    }
}

/// Rules the ensemble draws from: the 128 quiescent rules (`000 -> 0`),
/// under which a blank lattice stays blank.
pub fn ensemble_rule(draw: u8) -> Rule {
    Rule::from_u8(draw & 0xFE)
}

/// Tiles `samples` random quiescent-rule evolutions (width 32, density 0.5,
/// 32 steps) into `b x b` blocks and counts them. Tiles are truncated to the
/// diagram, so each sample yields `floor(32/b) * floor(33/b)` blocks.
pub fn build_coding_table(b: usize, samples: usize, seed: u64) -> Result<CodingTable> {
    check_block_size(b)?;
    if samples < 1000 {
        return domain(format!("need at least 1000 samples, got {samples}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<(u8, u64)> = (0..samples).map(|_| (rng.gen(), rng.gen())).collect();
    let size = 1usize << (b * b);
    let counts = draws
        .par_chunks(256)
        .map(|chunk| {
            let mut local = vec![0u64; size];
            for &(rule, init_seed) in chunk {
                let init = random_config(TABLE_WIDTH, 0.5, init_seed).expect("valid width");
                let lattice = Lattice::from(&evolve(&ensemble_rule(rule), &init, TABLE_STEPS));
                for i in 0..lattice.height / b {
                    for j in 0..lattice.width / b {
                        local[lattice.block_pattern(i * b, j * b, b) as usize] += 1;
                    }
                }
            }
            local
        })
        .reduce(
            || vec![0u64; size],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let counts = counts
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c > 0)
        .map(|(p, c)| (p as u32, c))
        .collect();
    CodingTable::from_counts(b, counts)
}

/// Complexity of one block and whether it came from the compression fallback.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockComplexity {
    pub value: f64,
    pub fallback: bool,
}

/// Table complexity for an observed `b x b` block; otherwise the compressed
/// size of the block's packed serialization.
pub fn block_complexity(block: &Lattice, table: &CodingTable, id: CompressorId) -> BlockComplexity {
    let b = table.block_size;
    if block.height == b && block.width == b {
        if let Some(k) = table.k(block.block_pattern(0, 0, b)) {
            return BlockComplexity {
                value: k,
                fallback: false,
            };
        }
    }
    BlockComplexity {
        value: compressed_size_bits(&block.to_packed(), id) as f64,
        fallback: true,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BdmResult {
    pub value: f64,
    pub height: usize,
    pub width: usize,
    pub block_size: usize,
    pub tiles: usize,
    pub distinct_blocks: usize,
    pub padded: bool,
    /// Distinct blocks scored by the compression fallback.
    pub fallback_blocks: usize,
}

/// Block decomposition with the default compressor as fallback.
pub fn bdm(lattice: &Lattice, table: &CodingTable) -> BdmResult {
    bdm_with(lattice, table, CompressorId::builtin_lzss())
}

pub fn bdm_with(lattice: &Lattice, table: &CodingTable, id: CompressorId) -> BdmResult {
    let b = table.block_size;
    let (tiles, padded) = lattice.tiles(b);
    let (value, distinct_blocks, fallback_blocks) = score_tiles(&tiles, table, id);
    BdmResult {
        value,
        height: lattice.height,
        width: lattice.width,
        block_size: b,
        tiles: tiles.len(),
        distinct_blocks,
        padded,
        fallback_blocks,
    }
}

/// Block decomposition of a tile multiset given as patterns.
pub fn bdm_tiles(tiles: &[u32], table: &CodingTable, id: CompressorId) -> f64 {
    score_tiles(tiles, table, id).0
}

fn score_tiles(tiles: &[u32], table: &CodingTable, id: CompressorId) -> (f64, usize, usize) {
    let b = table.block_size;
    let mut multiplicity: BTreeMap<u32, u64> = BTreeMap::new();
    for &t in tiles {
        *multiplicity.entry(t).or_default() += 1;
    }
    let mut value = 0.0;
    let mut fallback_blocks = 0;
    for (&pattern, &m) in &multiplicity {
        let bc = block_complexity(&Lattice::block_from_pattern(pattern, b), table, id);
        fallback_blocks += usize::from(bc.fallback);
        value += bc.value + (m as f64).log2();
    }
    (value, multiplicity.len(), fallback_blocks)
}
