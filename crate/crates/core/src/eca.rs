//! Elementary cellular automata on a cyclic lattice.
//!
//! A rule maps the neighborhood `(left, center, right)` to the bit of its
//! Wolfram number at index `4*left + 2*center + right`. Every row of a
//! [`SpaceTimeDiagram`] is derived from the previous one by [`step`], with the
//! leftmost and rightmost cells treated as neighbors.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Smallest lattice width for which every cell has two distinct neighbors.
pub const MIN_WIDTH: usize = 3;

/// An elementary CA local update function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", from = "u8")]
pub struct Rule {
    number: u8,
    table: [bool; 8],
}

impl Rule {
    pub fn from_u8(number: u8) -> Self {
        let mut table = [false; 8];
        for (v, out) in table.iter_mut().enumerate() {
            *out = (number >> v) & 1 == 1;
        }
        Rule { number, table }
    }

    pub fn number(&self) -> u8 {
        self.number
    }

    /// Output bits indexed by neighborhood value.
    pub fn table(&self) -> [bool; 8] {
        self.table
    }

    #[inline]
    pub fn apply(&self, left: bool, center: bool, right: bool) -> bool {
        self.table[(usize::from(left) << 2) | (usize::from(center) << 1) | usize::from(right)]
    }

    /// Rules whose all-zero neighborhood maps to zero.
    pub fn is_quiescent(&self) -> bool {
        !self.table[0]
    }
}

impl From<Rule> for u8 {
    fn from(rule: Rule) -> u8 {
        rule.number
    }
}

impl From<u8> for Rule {
    fn from(number: u8) -> Rule {
        Rule::from_u8(number)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule {}", self.number)
    }
}

/// Decodes a Wolfram rule number.
pub fn rule_table(number: i64) -> Result<Rule> {
    match u8::try_from(number) {
        Ok(n) => Ok(Rule::from_u8(n)),
        Err(_) => domain(format!("rule number {number} outside 0..=255")),
    }
}

/// One row of the lattice.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    cells: Vec<bool>,
}

impl Configuration {
    pub fn new(cells: Vec<bool>) -> Result<Self> {
        if cells.len() < MIN_WIDTH {
            return domain(format!(
                "configuration width {} below minimum {MIN_WIDTH}",
                cells.len()
            ));
        }
        Ok(Configuration { cells })
    }

    pub fn zeros(width: usize) -> Result<Self> {
        Self::new(vec![false; width])
    }

    /// Parses a string of `'0'` and `'1'` characters.
    pub fn parse(text: &str) -> Result<Self> {
        let cells = text
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => domain(format!("invalid cell character {other:?}")),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(cells)
    }

    pub fn width(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn get(&self, i: usize) -> bool {
        self.cells[i]
    }

    pub fn count_ones(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// Cyclic rotation to the right by `k` cells.
    pub fn rotate(&self, k: usize) -> Self {
        let mut cells = self.cells.clone();
        let w = cells.len();
        cells.rotate_right(k % w);
        Configuration { cells }
    }

    pub fn hamming(&self, other: &Configuration) -> usize {
        self.cells
            .iter()
            .zip(&other.cells)
            .filter(|(a, b)| a != b)
            .count()
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &c in &self.cells {
            f.write_str(if c { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Synchronous update of every cell with cyclic boundaries.
pub fn step(rule: &Rule, config: &Configuration) -> Configuration {
    let cells = &config.cells;
    let w = cells.len();
    let next = (0..w)
        .map(|i| {
            let left = cells[(i + w - 1) % w];
            let right = cells[(i + 1) % w];
            rule.apply(left, cells[i], right)
        })
        .collect();
    Configuration { cells: next }
}

/// The `(steps + 1) x width` evolution lattice, row 0 being the initial condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpaceTimeDiagram {
    rule: Rule,
    rows: Vec<Configuration>,
}

impl SpaceTimeDiagram {
    pub fn rule(&self) -> Rule {
        self.rule
    }

    pub fn rows(&self) -> &[Configuration] {
        &self.rows
    }

    pub fn steps(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn width(&self) -> usize {
        self.rows[0].width()
    }

    /// The diagram truncated after `t` steps.
    pub fn prefix(&self, t: usize) -> Result<SpaceTimeDiagram> {
        if t > self.steps() {
            return domain(format!("prefix {t} exceeds {} steps", self.steps()));
        }
        Ok(SpaceTimeDiagram {
            rule: self.rule,
            rows: self.rows[..=t].to_vec(),
        })
    }

    /// Text format: one `'0'`/`'1'` row per line, each newline-terminated.
    pub fn to_ascii(&self) -> Vec<u8> {
        ascii_rows(&self.rows)
    }

    /// Binary format: `width` and `steps` as little-endian `u32`, then the
    /// rows packed MSB-first with no per-row padding.
    pub fn to_packed(&self) -> Vec<u8> {
        let width = self.width();
        let mut out = Vec::with_capacity(8 + (width * self.rows.len()).div_ceil(8));
        out.extend_from_slice(&(width as u32).to_le_bytes());
        out.extend_from_slice(&(self.steps() as u32).to_le_bytes());
        out.extend(pack_bits(self.rows.iter().flat_map(|r| r.cells.iter().copied())));
        out
    }
}

/// Concatenated text rows.
pub fn ascii_rows(rows: &[Configuration]) -> Vec<u8> {
    let mut out = Vec::with_capacity(rows.iter().map(|r| r.width() + 1).sum());
    for row in rows {
        out.extend(row.cells.iter().map(|&c| if c { b'1' } else { b'0' }));
        out.push(b'\n');
    }
    out
}

/// Packs bits MSB-first, zero-filling the final byte.
pub fn pack_bits(bits: impl IntoIterator<Item = bool>) -> Vec<u8> {
    let mut out = Vec::new();
    let mut acc = 0u8;
    let mut n = 0;
    for bit in bits {
        acc = (acc << 1) | u8::from(bit);
        n += 1;
        if n == 8 {
            out.push(acc);
            acc = 0;
            n = 0;
        }
    }
    if n > 0 {
        out.push(acc << (8 - n));
    }
    out
}

pub fn evolve(rule: &Rule, init: &Configuration, t: usize) -> SpaceTimeDiagram {
    let mut rows = Vec::with_capacity(t + 1);
    rows.push(init.clone());
    for k in 0..t {
        let next = step(rule, &rows[k]);
        rows.push(next);
    }
    SpaceTimeDiagram { rule: *rule, rows }
}

/// Each cell is independently 1 with probability `density`.
pub fn random_config(width: usize, density: f64, seed: u64) -> Result<Configuration> {
    if !(0.0..=1.0).contains(&density) {
        return domain(format!("density {density} outside [0, 1]"));
    }
    if width < MIN_WIDTH {
        return domain(format!("width {width} below minimum {MIN_WIDTH}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = (0..width).map(|_| rng.gen_bool(density)).collect();
    Configuration::new(cells)
}

/// A single 1 at index `width / 2`.
pub fn single_cell_config(width: usize) -> Result<Configuration> {
    let mut cells = vec![false; width];
    if width >= MIN_WIDTH {
        cells[width / 2] = true;
    }
    Configuration::new(cells)
}

/// The first `n` binary-reflected Gray codes as `width`-bit rows, most
/// significant bit in cell 0.
pub fn gray_enumeration(width: usize, n: u64) -> Result<Vec<Configuration>> {
    if width < MIN_WIDTH {
        return domain(format!("width {width} below minimum {MIN_WIDTH}"));
    }
    let too_many = width < 64 && n > (1u64 << width);
    if n == 0 || too_many {
        return domain(format!("cannot enumerate {n} inputs of width {width}"));
    }
    Ok((0..n)
        .map(|k| {
            let code = k ^ (k >> 1);
            let cells = (0..width)
                .map(|i| {
                    let bit = width - 1 - i;
                    bit < 64 && (code >> bit) & 1 == 1
                })
                .collect();
            Configuration { cells }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(s: &str) -> Configuration {
        Configuration::parse(s).unwrap()
    }

    #[test]
    fn rule_table_examples() {
        assert_eq!(rule_table(0).unwrap().table(), [false; 8]);
        let identity = rule_table(204).unwrap();
        for v in 0..8usize {
            assert_eq!(identity.table()[v], (v >> 1) & 1 == 1);
        }
        let r30 = rule_table(30).unwrap();
        assert!(r30.apply(true, false, false));
        assert!(!r30.apply(true, true, true));
        assert!(rule_table(256).is_err());
        assert!(rule_table(-1).is_err());
    }

    #[test]
    fn step_examples() {
        let c = cfg("0110100");
        assert_eq!(step(&Rule::from_u8(0), &c), cfg("0000000"));
        assert_eq!(step(&Rule::from_u8(204), &c), c);
        assert_eq!(step(&Rule::from_u8(30), &cfg("0001000")), cfg("0011100"));
    }

    #[test]
    fn boundary_wraps() {
        // the single cell at index 0 has its left neighbor at the far end
        assert_eq!(step(&Rule::from_u8(30), &cfg("10000")), cfg("11001"));
    }

    #[test]
    fn evolve_examples() {
        let init = random_config(100, 0.5, 3).unwrap();
        let d = evolve(&Rule::from_u8(0), &init, 100);
        assert_eq!(d.rows().len(), 101);
        assert!(d.rows()[1..].iter().all(|r| r.count_ones() == 0));

        let d = evolve(&Rule::from_u8(204), &init, 7);
        assert!(d.rows().iter().all(|r| *r == init));

        let d = evolve(&Rule::from_u8(30), &single_cell_config(101).unwrap(), 2);
        let row2 = &d.rows()[2];
        let centered: String = row2.to_string()[48..53].to_string();
        assert_eq!(centered, "11001");
        assert_eq!(row2.count_ones(), 3);

        assert_eq!(evolve(&Rule::from_u8(30), &init, 0).rows(), &[init]);
    }

    #[test]
    fn random_config_contract() {
        assert_eq!(random_config(100, 0.0, 9).unwrap().count_ones(), 0);
        assert_eq!(random_config(100, 1.0, 9).unwrap().count_ones(), 100);
        assert_eq!(
            random_config(100, 0.5, 42).unwrap(),
            random_config(100, 0.5, 42).unwrap()
        );
        assert!(random_config(100, 1.5, 1).is_err());
        assert!(random_config(100, f64::NAN, 1).is_err());
    }

    #[test]
    fn single_cell_examples() {
        assert_eq!(single_cell_config(3).unwrap(), cfg("010"));
        assert_eq!(single_cell_config(5).unwrap(), cfg("00100"));
        assert_eq!(single_cell_config(4).unwrap(), cfg("0010"));
        assert!(single_cell_config(2).is_err());
    }

    #[test]
    fn gray_examples() {
        let g = gray_enumeration(3, 4).unwrap();
        let s: Vec<String> = g.iter().map(|c| c.to_string()).collect();
        assert_eq!(s, ["000", "001", "011", "010"]);
        assert_eq!(gray_enumeration(12, 1).unwrap()[0].count_ones(), 0);
        assert_eq!(gray_enumeration(3, 8).unwrap().len(), 8);
        assert!(gray_enumeration(3, 9).is_err());
        assert!(gray_enumeration(3, 0).is_err());
    }

    #[test]
    fn gray_adjacency_all_small_widths() {
        for width in 3..=16 {
            let all = gray_enumeration(width, 1 << width).unwrap();
            for pair in all.windows(2) {
                assert_eq!(pair[0].hamming(&pair[1]), 1);
            }
        }
    }

    #[test]
    fn packed_and_ascii_formats() {
        let d = evolve(&Rule::from_u8(0), &cfg("0000"), 1);
        assert_eq!(d.to_ascii(), b"0000\n0000\n");
        let ones = evolve(&Rule::from_u8(255), &cfg("11111111"), 0);
        assert_eq!(ones.to_packed(), [8, 0, 0, 0, 0, 0, 0, 0, 0xFF]);
        // 3 rows of width 3 = 9 bits, no per-row padding
        let d = evolve(&Rule::from_u8(204), &cfg("101"), 2);
        assert_eq!(&d.to_packed()[8..], [0b1011_0110, 0b1000_0000]);
    }

    #[test]
    fn complement_rule_is_involution() {
        let r51 = Rule::from_u8(51);
        for seed in 0..20 {
            let c = random_config(37, 0.5, seed).unwrap();
            assert_eq!(step(&r51, &step(&r51, &c)), c);
        }
    }

    proptest! {
        #[test]
        fn rows_chain(rule in 0u8..=255, seed in any::<u64>(), width in 3usize..40, t in 0usize..30) {
            let rule = Rule::from_u8(rule);
            let d = evolve(&rule, &random_config(width, 0.5, seed).unwrap(), t);
            prop_assert_eq!(d.rows().len(), t + 1);
            for pair in d.rows().windows(2) {
                prop_assert_eq!(&step(&rule, &pair[0]), &pair[1]);
            }
            prop_assert_eq!(d.to_ascii().len(), (width + 1) * (t + 1));
        }

        #[test]
        fn shift_equivariance(rule in 0u8..=255, seed in any::<u64>(), width in 3usize..50, k in 0usize..60) {
            let rule = Rule::from_u8(rule);
            let c = random_config(width, 0.5, seed).unwrap();
            prop_assert_eq!(step(&rule, &c.rotate(k)), step(&rule, &c).rotate(k));
        }

        #[test]
        fn table_matches_bits(number in 0u8..=255) {
            let rule = Rule::from_u8(number);
            for v in 0..8 {
                prop_assert_eq!(rule.table()[v], (number >> v) & 1 == 1);
            }
        }
    }
}
