//! Feature-map codec: average-pool downsampling, channel truncation and
//! per-channel affine quantization, with nearest-neighbour upsampling on decode.
//!
//! Wire format (little-endian):
//!
//! ```text
//! "CFTR" | u16 version | u16 H | u16 W | u16 C_orig | u16 C_kept
//!        | u8 pool_h | u8 pool_w | u8 bits
//!        | C_kept x (f32 scale, f32 offset) | payload | u32 CRC-32
//! ```
//!
//! The payload holds `ceil(H/pool_h) * ceil(W/pool_w) * C_kept` codes of `bits`
//! bits each, packed LSB-first and padded to a whole byte. With `bits == 32`
//! codes are raw IEEE-754 values and scale/offset are ignored.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perception::features::{channel, BevFeatureMap, GridConfig};

pub const BLOB_VERSION: u16 = 1;
const BLOB_MAGIC: &[u8; 4] = b"CFTR";
const FIXED_HEADER: usize = 4 + 2 + 8 + 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Codec {
    pub pool: [u8; 2],
    pub keep_channels: u16,
    pub bits: u8,
}

impl Default for Codec {
    /// 8-bit quantization of all pillar channels at full resolution (4x).
    fn default() -> Self {
        Self {
            pool: [1, 1],
            keep_channels: channel::COUNT as u16,
            bits: 8,
        }
    }
}

impl Codec {
    /// Lossless: no pooling, all channels, raw f32.
    pub fn identity(channels: u16) -> Self {
        Self {
            pool: [1, 1],
            keep_channels: channels,
            bits: 32,
        }
    }

    pub fn validate(&self, channels: usize) -> Result<()> {
        if self.keep_channels == 0 {
            return Err(Error::Codec("channel keep-count must be positive".into()));
        }
        if self.keep_channels as usize > channels {
            return Err(Error::Codec(format!(
                "keep-count {} exceeds {channels} channels",
                self.keep_channels
            )));
        }
        if self.pool[0] == 0 || self.pool[1] == 0 {
            return Err(Error::Codec("pool factors must be positive".into()));
        }
        if !(1..=16).contains(&self.bits) && self.bits != 32 {
            return Err(Error::Codec(format!("unsupported bit width {}", self.bits)));
        }
        Ok(())
    }

    /// Rate this codec achieves on a map whose dimensions the pool factors divide.
    pub fn nominal_rate(&self, channels: usize) -> f64 {
        self.pool[0] as f64
            * self.pool[1] as f64
            * (channels as f64 / self.keep_channels as f64)
            * (32.0 / self.bits as f64)
    }

    /// Ladder codec for a power-of-two `rate` between 1 and 32768: bit depth
    /// halves first (32 down to 1 bit covers 1x to 32x), then pooling doubles,
    /// rows before columns. All channels are kept.
    pub fn for_nominal_rate(rate: u32, channels: u16) -> Result<Self> {
        if !rate.is_power_of_two() || rate > 1 << 15 {
            return Err(Error::Codec(format!(
                "ladder rate {rate} is not a power of two up to 32768"
            )));
        }
        let steps = rate.trailing_zeros();
        let bits = 32u8 >> steps.min(5);
        let pool_steps = steps.saturating_sub(5);
        Ok(Self {
            pool: [1 << pool_steps.div_ceil(2), 1 << (pool_steps / 2)],
            keep_channels: channels,
            bits,
        })
    }

    pub fn label(&self) -> String {
        format!(
            "pool{}x{}-c{}-b{}",
            self.pool[0], self.pool[1], self.keep_channels, self.bits
        )
    }
}

/// Parses a comma-separated ladder. Items are rates (`64`, `64x`) or codec
/// labels (`pool2x1-c5-b1`).
pub fn parse_ladder(spec: &str, channels: u16) -> Result<Vec<Codec>> {
    let bad = |item: &str| Error::InvalidInput(format!("bad codec ladder item '{item}'"));
    let mut out = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let codec = if let Some(rest) = item.strip_prefix("pool") {
            let nums: Vec<u32> = rest
                .split(['x', '-', 'c', 'b'])
                .filter(|s| !s.is_empty())
                .map(|s| s.parse().map_err(|_| bad(item)))
                .collect::<Result<_>>()?;
            let [ph, pw, keep, bits] = nums[..] else {
                return Err(bad(item));
            };
            let narrow = |v: u32| u8::try_from(v).map_err(|_| bad(item));
            Codec {
                pool: [narrow(ph)?, narrow(pw)?],
                keep_channels: u16::try_from(keep).map_err(|_| bad(item))?,
                bits: narrow(bits)?,
            }
        } else {
            let rate: u32 = item
                .trim_end_matches(['x', 'X', '×'])
                .parse()
                .map_err(|_| bad(item))?;
            Codec::for_nominal_rate(rate, channels)?
        };
        codec.validate(channels as usize)?;
        out.push(codec);
    }
    if out.is_empty() {
        return Err(Error::InvalidInput("codec ladder is empty".into()));
    }
    Ok(out)
}

/// Powers of two from 1x to 4096x.
pub fn default_ladder(channels: u16) -> Vec<Codec> {
    (0..=12)
        .map(|k| Codec::for_nominal_rate(1 << k, channels).expect("power of two"))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodecDescriptor {
    pub rows: u16,
    pub cols: u16,
    pub channels: u16,
    pub kept: u16,
    pub pool: [u8; 2],
    pub bits: u8,
    pub scale: Vec<f32>,
    pub offset: Vec<f32>,
}

impl CodecDescriptor {
    pub fn pooled_shape(&self) -> (usize, usize) {
        (
            (self.rows as usize).div_ceil(self.pool[0] as usize),
            (self.cols as usize).div_ceil(self.pool[1] as usize),
        )
    }

    pub fn payload_len(&self) -> usize {
        let (ph, pw) = self.pooled_shape();
        (ph * pw * self.kept as usize * self.bits as usize).div_ceil(8)
    }

    pub fn wire_len(&self) -> usize {
        FIXED_HEADER + 8 * self.kept as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressedBlob {
    pub descriptor: CodecDescriptor,
    pub payload: Vec<u8>,
    /// Spatial layout shared by sender and receiver; not transmitted.
    pub grid: GridConfig,
}

impl CompressedBlob {
    pub fn payload_bytes(&self) -> usize {
        self.payload.len()
    }

    /// Bytes on the wire: header, descriptor, payload and CRC.
    pub fn wire_bytes(&self) -> usize {
        self.descriptor.wire_len() + self.payload.len() + 4
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let d = &self.descriptor;
        let mut out = Vec::with_capacity(self.wire_bytes());
        out.extend_from_slice(BLOB_MAGIC);
        out.extend_from_slice(&BLOB_VERSION.to_le_bytes());
        for v in [d.rows, d.cols, d.channels, d.kept] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&[d.pool[0], d.pool[1], d.bits]);
        for (s, o) in d.scale.iter().zip(&d.offset) {
            out.extend_from_slice(&s.to_le_bytes());
            out.extend_from_slice(&o.to_le_bytes());
        }
        out.extend_from_slice(&self.payload);
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8], grid: GridConfig) -> Result<Self> {
        if bytes.len() < FIXED_HEADER + 4 || &bytes[..4] != BLOB_MAGIC {
            return Err(Error::Codec("not a feature blob".into()));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        if crc32fast::hash(body) != u32::from_le_bytes(tail.try_into().expect("4 bytes")) {
            return Err(Error::Codec("blob checksum mismatch".into()));
        }
        let u16_at = |o: usize| u16::from_le_bytes([body[o], body[o + 1]]);
        let version = u16_at(4);
        if version != BLOB_VERSION {
            return Err(Error::Codec(format!("unsupported blob version {version}")));
        }
        let kept = u16_at(12);
        let mut d = CodecDescriptor {
            rows: u16_at(6),
            cols: u16_at(8),
            channels: u16_at(10),
            kept,
            pool: [body[14], body[15]],
            bits: body[16],
            scale: Vec::with_capacity(kept as usize),
            offset: Vec::with_capacity(kept as usize),
        };
        if body.len() < d.wire_len() {
            return Err(Error::Codec("descriptor truncated".into()));
        }
        for k in 0..kept as usize {
            let o = FIXED_HEADER + 8 * k;
            let f = |o: usize| f32::from_le_bytes(body[o..o + 4].try_into().expect("4 bytes"));
            d.scale.push(f(o));
            d.offset.push(f(o + 4));
        }
        let payload = body[d.wire_len()..].to_vec();
        Ok(Self {
            descriptor: d,
            payload,
            grid,
        })
    }
}

struct BitWriter {
    buf: Vec<u8>,
    acc: u64,
    filled: u32,
}

impl BitWriter {
    fn new(capacity: usize) -> Self {
        Self {
            buf: Vec::with_capacity(capacity),
            acc: 0,
            filled: 0,
        }
    }

    fn push(&mut self, value: u32, bits: u32) {
        self.acc |= (value as u64) << self.filled;
        self.filled += bits;
        while self.filled >= 8 {
            self.buf.push(self.acc as u8);
            self.acc >>= 8;
            self.filled -= 8;
        }
    }

    fn finish(mut self) -> Vec<u8> {
        if self.filled > 0 {
            self.buf.push(self.acc as u8);
        }
        self.buf
    }
}

struct BitReader<'a> {
    buf: &'a [u8],
    pos: usize,
    acc: u64,
    filled: u32,
}

impl<'a> BitReader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self {
            buf,
            pos: 0,
            acc: 0,
            filled: 0,
        }
    }

    fn pull(&mut self, bits: u32) -> u32 {
        while self.filled < bits {
            self.acc |= (self.buf[self.pos] as u64) << self.filled;
            self.pos += 1;
            self.filled += 8;
        }
        let mask = if bits == 32 {
            u32::MAX as u64
        } else {
            (1u64 << bits) - 1
        };
        let v = (self.acc & mask) as u32;
        self.acc >>= bits;
        self.filled -= bits;
        v
    }
}

/// Average-pools the first `keep` channels; padded cells count as zeros.
fn pool_map(map: &BevFeatureMap, pool: [usize; 2], keep: usize) -> Vec<f64> {
    let (ph, pw) = (map.rows.div_ceil(pool[0]), map.cols.div_ceil(pool[1]));
    let mut out = vec![0.0f64; ph * pw * keep];
    for i in 0..map.rows {
        for j in 0..map.cols {
            let cell = map.cell(i, j);
            let o = ((i / pool[0]) * pw + j / pool[1]) * keep;
            for c in 0..keep {
                out[o + c] += cell[c] as f64;
            }
        }
    }
    let area = (pool[0] * pool[1]) as f64;
    out.iter_mut().for_each(|v| *v /= area);
    out
}

pub fn encode_features(map: &BevFeatureMap, codec: &Codec) -> Result<CompressedBlob> {
    codec.validate(map.channels)?;
    let too_big = |n: usize| n > u16::MAX as usize;
    if too_big(map.rows) || too_big(map.cols) || too_big(map.channels) {
        return Err(Error::Codec(
            "map dimensions exceed the u16 descriptor".into(),
        ));
    }
    let keep = codec.keep_channels as usize;
    let pool = [codec.pool[0] as usize, codec.pool[1] as usize];
    let pooled = if pool == [1, 1] {
        // Exact copy keeps the identity codec lossless.
        let mut v = Vec::with_capacity(map.cells() * keep);
        for k in 0..map.cells() {
            v.extend(
                map.data[k * map.channels..k * map.channels + keep]
                    .iter()
                    .map(|x| *x as f64),
            );
        }
        v
    } else {
        pool_map(map, pool, keep)
    };

    let bits = codec.bits as u32;
    let mut scale = vec![1.0f32; keep];
    let mut offset = vec![0.0f32; keep];
    if bits != 32 {
        let levels = ((1u64 << bits) - 1) as f64;
        for c in 0..keep {
            let (lo, hi) = pooled
                .iter()
                .skip(c)
                .step_by(keep)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(*v), hi.max(*v))
                });
            if hi > lo {
                // Zero sits exactly on the grid so empty cells decode to zero.
                let (lo, hi) = (lo.min(0.0), hi.max(0.0));
                scale[c] = ((hi - lo) / levels) as f32;
                let zero_point = (-lo / scale[c] as f64).round().clamp(0.0, levels) as f32;
                offset[c] = -(zero_point * scale[c]);
            } else {
                offset[c] = lo as f32;
                scale[c] = 0.0;
            }
        }
    }
    let descriptor = CodecDescriptor {
        rows: map.rows as u16,
        cols: map.cols as u16,
        channels: map.channels as u16,
        kept: keep as u16,
        pool: codec.pool,
        bits: codec.bits,
        scale,
        offset,
    };
    let mut writer = BitWriter::new(descriptor.payload_len());
    for (k, v) in pooled.iter().enumerate() {
        let code = if bits == 32 {
            (*v as f32).to_bits()
        } else {
            let c = k % keep;
            let levels = ((1u64 << bits) - 1) as f64;
            let s = descriptor.scale[c] as f64;
            if s > 0.0 {
                ((v - descriptor.offset[c] as f64) / s)
                    .round()
                    .clamp(0.0, levels) as u32
            } else {
                0
            }
        };
        writer.push(code, bits);
    }
    let payload = writer.finish();
    debug_assert_eq!(payload.len(), descriptor.payload_len());
    Ok(CompressedBlob {
        descriptor,
        payload,
        grid: map.grid,
    })
}

pub fn decode_features(blob: &CompressedBlob) -> Result<BevFeatureMap> {
    let d = &blob.descriptor;
    if d.kept == 0 || d.kept > d.channels || d.pool[0] == 0 || d.pool[1] == 0 {
        return Err(Error::Codec("invalid descriptor".into()));
    }
    if !(1..=16).contains(&d.bits) && d.bits != 32 {
        return Err(Error::Codec(format!("unsupported bit width {}", d.bits)));
    }
    if d.scale.len() != d.kept as usize || d.offset.len() != d.kept as usize {
        return Err(Error::Codec(
            "descriptor scale/offset count mismatch".into(),
        ));
    }
    if blob.payload.len() != d.payload_len() {
        return Err(Error::Codec(format!(
            "payload is {} bytes, descriptor implies {}",
            blob.payload.len(),
            d.payload_len()
        )));
    }
    if blob.grid.rows() != d.rows as usize || blob.grid.cols() != d.cols as usize {
        return Err(Error::ShapeMismatch(
            "blob shape does not match the grid".into(),
        ));
    }
    let keep = d.kept as usize;
    let (ph, pw) = d.pooled_shape();
    let bits = d.bits as u32;
    let mut reader = BitReader::new(&blob.payload);
    let mut pooled = vec![0.0f32; ph * pw * keep];
    for (k, slot) in pooled.iter_mut().enumerate() {
        let code = reader.pull(bits);
        *slot = if bits == 32 {
            f32::from_bits(code)
        } else {
            let c = k % keep;
            // In f32, so the zero point cancels exactly.
            code as f32 * d.scale[c] + d.offset[c]
        };
    }
    let mut map = BevFeatureMap::zeros(blob.grid, d.channels as usize);
    let (p0, p1) = (d.pool[0] as usize, d.pool[1] as usize);
    for i in 0..map.rows {
        for j in 0..map.cols {
            let src = ((i / p0) * pw + j / p1) * keep;
            map.cell_mut(i, j)[..keep].copy_from_slice(&pooled[src..src + keep]);
        }
    }
    Ok(map)
}

/// Original dense bytes over transmitted payload bytes.
pub fn compression_rate(original: &BevFeatureMap, blob: &CompressedBlob) -> f64 {
    original.byte_size() as f64 / blob.payload_bytes() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(rows: usize, cols: usize) -> GridConfig {
        GridConfig {
            x_range: [0.0, rows as f64],
            y_range: [0.0, cols as f64],
            cell_size: 1.0,
        }
    }

    fn random_map(rows: usize, cols: usize, channels: usize, seed: u64) -> BevFeatureMap {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * cols * channels)
            .map(|_| rng.random_range(-3.0f32..5.0))
            .collect();
        BevFeatureMap::from_data(grid(rows, cols), channels, data).unwrap()
    }

    #[test]
    fn identity_codec_is_lossless() {
        let m = random_map(13, 7, 5, 1);
        let blob = encode_features(&m, &Codec::identity(5)).unwrap();
        assert_eq!(decode_features(&blob).unwrap(), m);
        assert_eq!(compression_rate(&m, &blob), 1.0);
    }

    #[test]
    fn constant_map_is_exact_under_any_codec() {
        let m = BevFeatureMap::from_data(grid(9, 6), 3, vec![2.75; 9 * 6 * 3]).unwrap();
        for codec in [
            Codec {
                pool: [4, 4],
                keep_channels: 3,
                bits: 8,
            },
            Codec {
                pool: [2, 3],
                keep_channels: 3,
                bits: 1,
            },
            Codec {
                pool: [1, 1],
                keep_channels: 3,
                bits: 5,
            },
        ] {
            let out = decode_features(&encode_features(&m, &codec).unwrap()).unwrap();
            // Padded border blocks average in zeros, so compare where pools divide evenly.
            let (p0, p1) = (codec.pool[0] as usize, codec.pool[1] as usize);
            for i in 0..(9 / p0) * p0 {
                for j in 0..(6 / p1) * p1 {
                    assert_eq!(out.cell(i, j), m.cell(i, j), "{codec:?}");
                }
            }
        }
    }

    #[test]
    fn payload_arithmetic_64x() {
        let m = random_map(64, 64, 8, 2);
        let codec = Codec {
            pool: [4, 4],
            keep_channels: 8,
            bits: 8,
        };
        let blob = encode_features(&m, &codec).unwrap();
        assert_eq!(blob.payload_bytes(), 2048);
        assert_eq!(m.byte_size(), 131_072);
        assert_eq!(compression_rate(&m, &blob), 64.0);
        assert_eq!(codec.nominal_rate(8), 64.0);
    }

    #[test]
    fn eight_bit_error_bound() {
        let m = random_map(20, 20, 4, 3);
        let blob = encode_features(
            &m,
            &Codec {
                pool: [1, 1],
                keep_channels: 4,
                bits: 8,
            },
        )
        .unwrap();
        let out = decode_features(&blob).unwrap();
        for c in 0..4 {
            let vals: Vec<f32> = m.data.iter().skip(c).step_by(4).copied().collect();
            let range = vals.iter().fold(f32::MIN, |a, b| a.max(*b))
                - vals.iter().fold(f32::MAX, |a, b| a.min(*b));
            for (a, b) in out.data.iter().skip(c).step_by(4).zip(&vals) {
                assert!((a - b).abs() as f64 <= range as f64 / 255.0);
            }
        }
    }

    #[test]
    fn ladder_rates() {
        for k in 0..=15 {
            let c = Codec::for_nominal_rate(1 << k, 5).unwrap();
            assert_eq!(c.nominal_rate(5), (1u32 << k) as f64, "{c:?}");
            c.validate(5).unwrap();
        }
        assert_eq!(Codec::for_nominal_rate(1, 5).unwrap(), Codec::identity(5));
        assert_eq!(Codec::for_nominal_rate(64, 5).unwrap().pool, [2, 1]);
        assert_eq!(Codec::for_nominal_rate(4096, 5).unwrap().pool, [16, 8]);
        assert!(Codec::for_nominal_rate(48, 5).is_err());
        assert!(Codec::for_nominal_rate(0, 5).is_err());
    }

    #[test]
    fn ladder_parsing() {
        let l = parse_ladder("1x, 64,4096×,pool2x2-c3-b4", 5).unwrap();
        assert_eq!(l.len(), 4);
        assert_eq!(
            l[3],
            Codec {
                pool: [2, 2],
                keep_channels: 3,
                bits: 4
            }
        );
        assert_eq!(l[1], Codec::for_nominal_rate(64, 5).unwrap());
        for bad in ["", "3", "abc", "pool2x2-c9-b4", "pool2x2-c3"] {
            assert!(parse_ladder(bad, 5).is_err(), "{bad}");
        }
        assert_eq!(default_ladder(5).len(), 13);
    }

    #[test]
    fn zero_survives_quantization() {
        let mut m = random_map(16, 16, 3, 9);
        for k in (0..m.cells()).step_by(3) {
            m.cell_mut(k / 16, k % 16).fill(0.0);
        }
        for bits in [1, 2, 3, 8, 13] {
            let out = decode_features(
                &encode_features(
                    &m,
                    &Codec {
                        pool: [1, 1],
                        keep_channels: 3,
                        bits,
                    },
                )
                .unwrap(),
            )
            .unwrap();
            for k in (0..m.cells()).step_by(3) {
                assert!(
                    out.cell(k / 16, k % 16).iter().all(|v| *v == 0.0),
                    "bits {bits}"
                );
            }
        }
    }

    #[test]
    fn dropped_channels_decode_to_zero() {
        let m = random_map(4, 4, 5, 4);
        let out = decode_features(
            &encode_features(
                &m,
                &Codec {
                    pool: [1, 1],
                    keep_channels: 2,
                    bits: 32,
                },
            )
            .unwrap(),
        )
        .unwrap();
        for k in 0..16 {
            assert_eq!(&out.data[k * 5..k * 5 + 2], &m.data[k * 5..k * 5 + 2]);
            assert!(out.data[k * 5 + 2..k * 5 + 5].iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn zero_keep_count_is_rejected() {
        let m = random_map(4, 4, 5, 5);
        assert!(encode_features(
            &m,
            &Codec {
                pool: [1, 1],
                keep_channels: 0,
                bits: 8
            }
        )
        .is_err());
    }

    #[test]
    fn payload_length_mismatch_is_rejected() {
        let m = random_map(8, 8, 2, 6);
        let mut blob = encode_features(
            &m,
            &Codec {
                pool: [2, 2],
                keep_channels: 2,
                bits: 4,
            },
        )
        .unwrap();
        blob.payload.pop();
        assert!(matches!(decode_features(&blob), Err(Error::Codec(_))));
    }

    #[test]
    fn wire_round_trip_and_layout() {
        let m = random_map(10, 6, 5, 7);
        let blob = encode_features(
            &m,
            &Codec {
                pool: [2, 2],
                keep_channels: 3,
                bits: 6,
            },
        )
        .unwrap();
        let bytes = blob.to_bytes();
        assert_eq!(&bytes[..4], b"CFTR");
        assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), BLOB_VERSION);
        assert_eq!(u16::from_le_bytes([bytes[6], bytes[7]]), 10);
        assert_eq!(u16::from_le_bytes([bytes[12], bytes[13]]), 3);
        assert_eq!(&bytes[14..17], &[2, 2, 6]);
        assert_eq!(bytes.len(), blob.wire_bytes());
        assert_eq!(CompressedBlob::from_bytes(&bytes, m.grid).unwrap(), blob);
        let mut bad = bytes.clone();
        bad[30] ^= 1;
        assert!(CompressedBlob::from_bytes(&bad, m.grid).is_err());
    }

    #[test]
    fn rate_grows_with_pooling_and_fewer_bits() {
        let m = random_map(32, 32, 5, 8);
        let rate = |c: Codec| compression_rate(&m, &encode_features(&m, &c).unwrap());
        let mut last = 0.0;
        for pool in [1u8, 2, 4, 8] {
            let r = rate(Codec {
                pool: [pool, pool],
                keep_channels: 5,
                bits: 8,
            });
            assert!(r > last);
            last = r;
        }
        let mut last = 0.0;
        for bits in [32u8, 16, 8, 4, 2, 1] {
            let r = rate(Codec {
                pool: [1, 1],
                keep_channels: 5,
                bits,
            });
            assert!(r > last);
            last = r;
        }
    }
}
