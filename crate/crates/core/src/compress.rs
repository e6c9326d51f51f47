//! Deterministic lossless compressors used as the complexity observer.
//!
//! Every stream starts with a 13-byte header:
//!
//! | bytes | content                                             |
//! |-------|-----------------------------------------------------|
//! | 0..4  | magic `KPRB`                                        |
//! | 4     | compressor code, high bit set for a stored payload  |
//! | 5..13 | original length, `u64` little-endian                |
//!
//! followed by the token stream. When the token stream would be longer than
//! the input, the input is stored verbatim instead, so a compressed stream is
//! never more than [`HEADER_LEN`] bytes longer than its input.
//!
//! The LZSS token stream is a big-endian bit stream: a `0` flag followed by an
//! 8-bit literal, or a `1` flag followed by a 15-bit `offset - 1` and an 8-bit
//! `length - 3`. Parsing is greedy; among equally long matches the nearest
//! one wins. The final byte is zero-padded.
//!
//! The RLE token stream is a sequence of `(run length, byte)` pairs with run
//! lengths in `1..=255`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::eca::SpaceTimeDiagram;
use crate::error::{domain, format, Error, Result};

pub const MAGIC: [u8; 4] = *b"KPRB";
pub const HEADER_LEN: usize = 13;
const STORED_FLAG: u8 = 0x80;

pub const LZSS_WINDOW: usize = 1 << 15;
pub const LZSS_MIN_MATCH: usize = 3;
pub const LZSS_MAX_MATCH: usize = 258;

const HASH_BITS: u32 = 15;
const NO_POS: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompressorKind {
    BuiltinLzss,
    Rle,
}

/// A compressor and its fixed parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CompressorId {
    kind: CompressorKind,
}

impl CompressorId {
    pub const fn builtin_lzss() -> Self {
        CompressorId {
            kind: CompressorKind::BuiltinLzss,
        }
    }

    pub const fn rle() -> Self {
        CompressorId {
            kind: CompressorKind::Rle,
        }
    }

    /// Every registered compressor.
    pub fn all() -> [CompressorId; 2] {
        [Self::builtin_lzss(), Self::rle()]
    }

    /// Registry lookup. `lzss` is accepted as an alias of `builtin-lzss`.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "builtin-lzss" | "lzss" => Ok(Self::builtin_lzss()),
            "rle" => Ok(Self::rle()),
            other => domain(format!("unknown compressor {other:?}")),
        }
    }

    pub fn kind(&self) -> CompressorKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            CompressorKind::BuiltinLzss => "builtin-lzss",
            CompressorKind::Rle => "rle",
        }
    }

    /// Sliding window in bytes (0 when the compressor has no window).
    pub fn window(&self) -> usize {
        match self.kind {
            CompressorKind::BuiltinLzss => LZSS_WINDOW,
            CompressorKind::Rle => 0,
        }
    }

    /// Shortest repeat the compressor encodes as a reference.
    pub fn min_match(&self) -> usize {
        match self.kind {
            CompressorKind::BuiltinLzss => LZSS_MIN_MATCH,
            CompressorKind::Rle => 1,
        }
    }

    fn code(&self) -> u8 {
        match self.kind {
            CompressorKind::BuiltinLzss => 1,
            CompressorKind::Rle => 2,
        }
    }
}

impl Default for CompressorId {
    fn default() -> Self {
        Self::builtin_lzss()
    }
}

impl fmt::Display for CompressorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CompressorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_name(s)
    }
}

impl Serialize for CompressorId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for CompressorId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        Self::from_name(&name).map_err(serde::de::Error::custom)
    }
}

pub fn compress(data: &[u8], id: CompressorId) -> Vec<u8> {
    let tokens = match id.kind {
        CompressorKind::BuiltinLzss => lzss_encode(data),
        CompressorKind::Rle => rle_encode(data),
    };
    let stored = tokens.len() > data.len();
    let payload = if stored { data } else { &tokens[..] };
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(&MAGIC);
    out.push(if stored { id.code() | STORED_FLAG } else { id.code() });
    out.extend_from_slice(&(data.len() as u64).to_le_bytes());
    out.extend_from_slice(payload);
    out
}

pub fn decompress(data: &[u8], id: CompressorId) -> Result<Vec<u8>> {
    if data.len() < HEADER_LEN {
        return format(format!("stream of {} bytes shorter than header", data.len()));
    }
    if data[..4] != MAGIC {
        return format("bad magic");
    }
    let code = data[4];
    if code & !STORED_FLAG != id.code() {
        return format(format!(
            "stream written by compressor code {}, expected {} ({})",
            code & !STORED_FLAG,
            id.code(),
            id.name()
        ));
    }
    let len = u64::from_le_bytes(data[5..13].try_into().expect("8 header bytes"));
    let len = usize::try_from(len).map_err(|_| Error::Format("length overflows".into()))?;
    let payload = &data[HEADER_LEN..];
    if code & STORED_FLAG != 0 {
        if payload.len() != len {
            return format(format!(
                "stored payload has {} bytes, header says {len}",
                payload.len()
            ));
        }
        return Ok(payload.to_vec());
    }
    match id.kind {
        CompressorKind::BuiltinLzss => lzss_decode(payload, len),
        CompressorKind::Rle => rle_decode(payload, len),
    }
}

/// Size of the compressed stream in bits.
pub fn compressed_size_bits(data: &[u8], id: CompressorId) -> u64 {
    8 * compress(data, id).len() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SerializationMode {
    #[default]
    Ascii,
    Packed,
}

impl FromStr for SerializationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ascii" => Ok(SerializationMode::Ascii),
            "packed" => Ok(SerializationMode::Packed),
            other => domain(format!("unknown serialization mode {other:?}")),
        }
    }
}

pub fn serialize_diagram(diagram: &SpaceTimeDiagram, mode: SerializationMode) -> Vec<u8> {
    match mode {
        SerializationMode::Ascii => diagram.to_ascii(),
        SerializationMode::Packed => diagram.to_packed(),
    }
}

struct BitWriter {
    bytes: Vec<u8>,
    acc: u32,
    filled: u32,
}

impl BitWriter {
    fn new() -> Self {
        BitWriter {
            bytes: Vec::new(),
            acc: 0,
            filled: 0,
        }
    }

    fn put(&mut self, value: u32, bits: u32) {
        debug_assert!(bits <= 16 && value < (1 << bits));
        self.acc = (self.acc << bits) | value;
        self.filled += bits;
        while self.filled >= 8 {
            self.filled -= 8;
            self.bytes.push((self.acc >> self.filled) as u8);
        }
        self.acc &= (1 << self.filled) - 1;
    }

    fn finish(mut self) -> Vec<u8> {
        if self.filled > 0 {
            self.bytes.push((self.acc << (8 - self.filled)) as u8);
        }
        self.bytes
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        BitReader { bytes, pos: 0 }
    }

    fn remaining(&self) -> usize {
        self.bytes.len() * 8 - self.pos
    }

    fn get(&mut self, bits: u32) -> Result<u32> {
        if self.remaining() < bits as usize {
            return format("token stream truncated");
        }
        let mut v = 0u32;
        for _ in 0..bits {
            let bit = (self.bytes[self.pos / 8] >> (7 - self.pos % 8)) & 1;
            v = (v << 1) | u32::from(bit);
            self.pos += 1;
        }
        Ok(v)
    }
}

#[inline]
fn hash3(data: &[u8], pos: usize) -> usize {
    let key = (u32::from(data[pos]) << 16) | (u32::from(data[pos + 1]) << 8) | u32::from(data[pos + 2]);
    (key.wrapping_mul(0x9E37_79B1) >> (32 - HASH_BITS)) as usize
}

/// Greedy longest-match LZSS over hash chains of 3-byte prefixes.
fn lzss_encode(data: &[u8]) -> Vec<u8> {
    let n = data.len();
    let mut head = vec![NO_POS; 1 << HASH_BITS];
    let mut prev = vec![NO_POS; n];
    let mut out = BitWriter::new();

    let insert = |pos: usize, head: &mut [u32], prev: &mut [u32]| {
        if pos + LZSS_MIN_MATCH <= n {
            let h = hash3(data, pos);
            prev[pos] = head[h];
            head[h] = pos as u32;
        }
    };

    let mut pos = 0;
    while pos < n {
        let (mut best_len, mut best_off) = (0usize, 0usize);
        if pos + LZSS_MIN_MATCH <= n {
            let limit = (n - pos).min(LZSS_MAX_MATCH);
            let mut cand = head[hash3(data, pos)];
            while cand != NO_POS {
                let c = cand as usize;
                let off = pos - c;
                if off > LZSS_WINDOW {
                    break;
                }
                // only a candidate agreeing at index best_len can beat best_len
                if best_len < limit && data[c + best_len] == data[pos + best_len] {
                    let len = data[c..]
                        .iter()
                        .zip(&data[pos..pos + limit])
                        .take_while(|(a, b)| a == b)
                        .count();
                    if len > best_len {
                        best_len = len;
                        best_off = off;
                        if len == limit {
                            break;
                        }
                    }
                }
                cand = prev[c];
            }
        }
        if best_len >= LZSS_MIN_MATCH {
            out.put(1, 1);
            out.put((best_off - 1) as u32, 15);
            out.put((best_len - LZSS_MIN_MATCH) as u32, 8);
            for p in pos..pos + best_len {
                insert(p, &mut head, &mut prev);
            }
            pos += best_len;
        } else {
            out.put(0, 1);
            out.put(u32::from(data[pos]), 8);
            insert(pos, &mut head, &mut prev);
            pos += 1;
        }
    }
    out.finish()
}

fn lzss_decode(payload: &[u8], len: usize) -> Result<Vec<u8>> {
    // a 24-bit match token expands to at most 258 bytes
    let mut out = Vec::with_capacity(len.min(payload.len().saturating_mul(LZSS_MAX_MATCH)));
    let mut reader = BitReader::new(payload);
    while out.len() < len {
        if reader.get(1)? == 0 {
            out.push(reader.get(8)? as u8);
        } else {
            let off = reader.get(15)? as usize + 1;
            let mlen = reader.get(8)? as usize + LZSS_MIN_MATCH;
            if off > out.len() {
                return format(format!(
                    "match offset {off} reaches before start (at {})",
                    out.len()
                ));
            }
            if out.len() + mlen > len {
                return format("match overruns declared length");
            }
            let start = out.len() - off;
            for i in 0..mlen {
                let b = out[start + i];
                out.push(b);
            }
        }
    }
    let rest = reader.remaining();
    if rest >= 8 || (rest > 0 && reader.get(rest as u32)? != 0) {
        return format("trailing data after token stream");
    }
    Ok(out)
}

fn rle_encode(data: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < data.len() {
        let b = data[i];
        let run = data[i..]
            .iter()
            .take(u8::MAX as usize)
            .take_while(|&&x| x == b)
            .count();
        out.push(run as u8);
        out.push(b);
        i += run;
    }
    out
}

fn rle_decode(payload: &[u8], len: usize) -> Result<Vec<u8>> {
    if !payload.len().is_multiple_of(2) {
        return format("odd-length run stream");
    }
    let mut out = Vec::with_capacity(len.min(payload.len() / 2 * 255));
    for pair in payload.chunks_exact(2) {
        let run = pair[0] as usize;
        if run == 0 {
            return format("zero-length run");
        }
        if out.len() + run > len {
            return format("run overruns declared length");
        }
        out.extend(std::iter::repeat_n(pair[1], run));
    }
    if out.len() != len {
        return format(format!("decoded {} bytes, header says {len}", out.len()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eca::{evolve, Configuration, Rule};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_bytes(len: usize, seed: u64) -> Vec<u8> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| rng.gen()).collect()
    }

    #[test]
    fn empty_input_is_header_only() {
        for id in CompressorId::all() {
            let c = compress(b"", id);
            assert_eq!(c.len(), HEADER_LEN);
            assert_eq!(compressed_size_bits(b"", id), 8 * HEADER_LEN as u64);
            assert_eq!(decompress(&c, id).unwrap(), b"");
        }
    }

    #[test]
    fn hand_encoded_vectors() {
        // literals alone never pay off: "abc" is stored verbatim
        let c = compress(b"abc", CompressorId::builtin_lzss());
        assert_eq!(&c[..4], b"KPRB");
        assert_eq!(c[4], 1 | 0x80);
        assert_eq!(&c[5..13], &3u64.to_le_bytes());
        assert_eq!(&c[13..], b"abc");

        // "abcabcabc": literals a, b, c then match (offset 3, length 6)
        // 0 01100001 0 01100010 0 01100011 | 1 000000000000010 00000011 | 00000
        let c = compress(b"abcabcabc", CompressorId::builtin_lzss());
        assert_eq!(c[4], 1);
        assert_eq!(&c[13..], [0x30, 0x98, 0x8C, 0x70, 0x00, 0x40, 0x60]);

        // "aaaaaa": literal 'a' then match (offset 1, length 5)
        // 0 01100001 | 1 000000000000000 00000010 | 0000000
        let c = compress(b"aaaaaa", CompressorId::builtin_lzss());
        assert_eq!(&c[13..], [0x30, 0xC0, 0x00, 0x01, 0x00]);

        // RLE: "aaab" -> (3,'a') (1,'b'), stored since 4 > 4 is false
        let c = compress(b"aaab", CompressorId::rle());
        assert_eq!(c[4], 2);
        assert_eq!(&c[13..], [3, b'a', 1, b'b']);
        // "ab" -> 4 token bytes > 2, stored
        let c = compress(b"ab", CompressorId::rle());
        assert_eq!(c[4], 2 | 0x80);
        assert_eq!(&c[13..], b"ab");
    }

    #[test]
    fn round_trip_examples() {
        for id in CompressorId::all() {
            assert_eq!(decompress(&compress(b"abc", id), id).unwrap(), b"abc");
        }
    }

    #[test]
    fn constant_and_random_extremes() {
        let lz = CompressorId::builtin_lzss();
        let ones = vec![b'1'; 10_000];
        assert!(compress(&ones, lz).len() * 20 < ones.len());
        let noise = random_bytes(10_000, 7);
        assert!(compress(&noise, lz).len() * 100 >= noise.len() * 95);
    }

    #[test]
    fn self_concatenation_is_cheaper() {
        let lz = CompressorId::builtin_lzss();
        for seed in 0..20 {
            let x = random_bytes(10 + seed as usize * 37, seed);
            let xx = [x.clone(), x.clone()].concat();
            assert!(compressed_size_bits(&xx, lz) < 2 * compressed_size_bits(&x, lz));
        }
    }

    #[test]
    fn ones_beat_noise_at_length_100() {
        let lz = CompressorId::builtin_lzss();
        let ones = vec![b'1'; 100];
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        let noise: Vec<u8> = (0..100).map(|_| if rng.gen() { b'1' } else { b'0' }).collect();
        assert!(compressed_size_bits(&ones, lz) < compressed_size_bits(&noise, lz));
    }

    #[test]
    fn monotone_discrimination() {
        for id in CompressorId::all() {
            for len in [1000, 4000] {
                let constant = vec![b'a'; len];
                let period: Vec<u8> = (0..len).map(|i| b'a' + (i % 16) as u8).collect();
                let noise = random_bytes(len, len as u64);
                let (c, p, r) = (
                    compressed_size_bits(&constant, id),
                    compressed_size_bits(&period, id),
                    compressed_size_bits(&noise, id),
                );
                if id.kind() == CompressorKind::BuiltinLzss {
                    assert!(c < p && p < r, "{id} {len}: {c} {p} {r}");
                } else {
                    // runs of length one: RLE cannot see the period
                    assert!(c < p && p <= r, "{id} {len}: {c} {p} {r}");
                }
            }
        }
    }

    #[test]
    fn corrupted_streams_are_rejected() {
        let lz = CompressorId::builtin_lzss();
        let data = b"the quick brown fox jumps over the quick brown dog".to_vec();
        let c = compress(&data, lz);
        assert!(decompress(&c[..c.len() - 1], lz).is_err());
        assert!(decompress(&c[..5], lz).is_err());
        let mut extra = c.clone();
        extra.push(0);
        assert!(decompress(&extra, lz).is_err());
        let mut bad_magic = c.clone();
        bad_magic[0] = b'X';
        assert!(decompress(&bad_magic, lz).is_err());
        assert!(decompress(&c, CompressorId::rle()).is_err());
        let mut longer = c.clone();
        longer[5] += 1;
        assert!(decompress(&longer, lz).is_err());

        // a match pointing before the start of output
        let mut bogus = compress(b"", lz);
        bogus[5] = 4;
        bogus.extend_from_slice(&[0xFF, 0xFF, 0xFF]);
        assert!(matches!(decompress(&bogus, lz), Err(Error::Format(_))));

        let r = compress(b"aaaabbbb", CompressorId::rle());
        let mut zero_run = r.clone();
        zero_run[13] = 0;
        assert!(decompress(&zero_run, CompressorId::rle()).is_err());
    }

    #[test]
    fn registry_is_total() {
        for id in CompressorId::all() {
            assert_eq!(CompressorId::from_name(id.name()).unwrap(), id);
        }
        assert_eq!(CompressorId::from_name("lzss").unwrap(), CompressorId::builtin_lzss());
        assert!(CompressorId::from_name("gzip").is_err());
    }

    #[test]
    fn serialization_modes() {
        let d = evolve(&Rule::from_u8(0), &Configuration::parse("0000").unwrap(), 1);
        assert_eq!(serialize_diagram(&d, SerializationMode::default()), b"0000\n0000\n");
        let ones = evolve(&Rule::from_u8(255), &Configuration::parse("11111111").unwrap(), 0);
        let packed = serialize_diagram(&ones, SerializationMode::Packed);
        assert_eq!(packed.len(), 9);
        assert_eq!(packed[8], 0xFF);
    }

    #[test]
    fn long_overlapping_and_distant_matches() {
        let lz = CompressorId::builtin_lzss();
        let block = random_bytes(300, 1);
        // second copy beyond the window is not reachable, third copy is
        let mut data = block.clone();
        data.extend(random_bytes(LZSS_WINDOW + 100, 2));
        data.extend_from_slice(&block);
        data.extend(vec![b'z'; 1000]);
        assert_eq!(decompress(&compress(&data, lz), lz).unwrap(), data);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn round_trip_arbitrary(data in proptest::collection::vec(any::<u8>(), 0..2048)) {
            for id in CompressorId::all() {
                let c = compress(&data, id);
                prop_assert_eq!(&decompress(&c, id).unwrap(), &data);
                prop_assert!(c.len() <= data.len() + HEADER_LEN);
                prop_assert_eq!(&compress(&data, id), &c);
            }
        }

        #[test]
        fn round_trip_low_entropy(data in proptest::collection::vec(prop_oneof![Just(b'0'), Just(b'1'), Just(b'\n')], 0..4096)) {
            for id in CompressorId::all() {
                prop_assert_eq!(&decompress(&compress(&data, id), id).unwrap(), &data);
            }
        }
    }
}
