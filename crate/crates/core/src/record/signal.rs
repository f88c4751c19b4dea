//! Format 212 and format 16 sample decoding.

/// De-interleaved samples plus the number of trailing bytes that could not
/// form a complete sample group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedSignal {
    pub channels: Vec<Vec<i32>>,
    pub dropped_bytes: usize,
}

fn sign_extend_12(v: u16) -> i32 {
    let v = i32::from(v & 0x0FFF);
    if v & 0x0800 != 0 {
        v - 0x1000
    } else {
        v
    }
}

fn deinterleave(stream: Vec<i32>, n_channels: usize) -> Vec<Vec<i32>> {
    let n_channels = n_channels.max(1);
    let frames = stream.len() / n_channels;
    let mut channels = vec![Vec::with_capacity(frames); n_channels];
    for frame in stream.chunks_exact(n_channels) {
        for (ch, &v) in channels.iter_mut().zip(frame) {
            ch.push(v);
        }
    }
    channels
}

/// Decode format 212: each 3-byte group packs two 12-bit two's-complement
/// samples. The first sample takes byte 0 plus the low nibble of byte 1;
/// the second takes byte 2 plus the high nibble of byte 1.
pub fn decode_signal_212(bytes: &[u8], n_channels: usize) -> DecodedSignal {
    let dropped_bytes = bytes.len() % 3;
    if dropped_bytes != 0 {
        log::warn!("format 212 stream has {dropped_bytes} trailing bytes; dropped");
    }
    let mut stream = Vec::with_capacity(bytes.len() / 3 * 2);
    for t in bytes.chunks_exact(3) {
        let (b0, b1, b2) = (u16::from(t[0]), u16::from(t[1]), u16::from(t[2]));
        stream.push(sign_extend_12(b0 | ((b1 & 0x0F) << 8)));
        stream.push(sign_extend_12(b2 | ((b1 & 0xF0) << 4)));
    }
    DecodedSignal {
        channels: deinterleave(stream, n_channels),
        dropped_bytes,
    }
}

/// Decode format 16: little-endian 16-bit two's-complement samples.
pub fn decode_signal_16(bytes: &[u8], n_channels: usize) -> DecodedSignal {
    let dropped_bytes = bytes.len() % 2;
    if dropped_bytes != 0 {
        log::warn!("format 16 stream has a trailing odd byte; dropped");
    }
    let stream = bytes
        .chunks_exact(2)
        .map(|p| i32::from(i16::from_le_bytes([p[0], p[1]])))
        .collect();
    DecodedSignal {
        channels: deinterleave(stream, n_channels),
        dropped_bytes,
    }
}

/// Interleave channels and pack them as format 212. An odd sample count is
/// padded with a zero sample. Values are truncated to 12 bits.
pub fn encode_signal_212(channels: &[Vec<i32>]) -> Vec<u8> {
    let frames = channels.iter().map(Vec::len).min().unwrap_or(0);
    let mut stream: Vec<i32> = Vec::with_capacity(frames * channels.len() + 1);
    for i in 0..frames {
        stream.extend(channels.iter().map(|c| c[i]));
    }
    if stream.len() % 2 == 1 {
        stream.push(0);
    }
    let mut out = Vec::with_capacity(stream.len() / 2 * 3);
    for pair in stream.chunks_exact(2) {
        let a = (pair[0] & 0x0FFF) as u16;
        let b = (pair[1] & 0x0FFF) as u16;
        out.push((a & 0xFF) as u8);
        out.push((((a >> 8) & 0x0F) | (((b >> 8) & 0x0F) << 4)) as u8);
        out.push((b & 0xFF) as u8);
    }
    out
}
