//! MIT-format binary annotation files.
//!
//! Each entry is a little-endian 16-bit word: the top 6 bits hold the type
//! code, the low 10 bits a time delta (or a pseudo-code argument). Pseudo
//! codes 59-63 are SKIP, NUM, SUB, CHN and AUX.

use super::BeatSymbol;

const SKIP: u16 = 59;
const NUM: u16 = 60;
const SUB: u16 = 61;
const CHN: u16 = 62;
const AUX: u16 = 63;
/// Highest code defined by the standard annotation table.
const LAST_STANDARD_CODE: u16 = 41;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BeatAnnotation {
    pub sample_index: usize,
    pub symbol: BeatSymbol,
}

/// Parsed annotation stream.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnnotationSet {
    /// Annotations whose code maps onto the sixteen tracked symbols, sorted.
    pub annotations: Vec<BeatAnnotation>,
    /// Annotation records with any other code (rhythm changes, noise, ...).
    pub skipped: usize,
    /// `(sample, code)` of records whose code is not in the standard table.
    pub unknown_codes: Vec<(usize, u16)>,
}

impl AnnotationSet {
    /// Number of annotation records (pseudo codes excluded) in the stream.
    pub fn total_records(&self) -> usize {
        self.annotations.len() + self.skipped
    }
}

pub fn parse_annotations(bytes: &[u8]) -> AnnotationSet {
    let mut set = AnnotationSet::default();
    let mut time: i64 = 0;
    let mut pos = 0;
    let word_at = |p: usize| -> Option<u16> {
        bytes.get(p..p + 2).map(|w| u16::from_le_bytes([w[0], w[1]]))
    };
    while let Some(word) = word_at(pos) {
        pos += 2;
        let code = word >> 10;
        let arg = word & 0x03FF;
        match code {
            0 if arg == 0 => break,
            SKIP => {
                let (Some(hi), Some(lo)) = (word_at(pos), word_at(pos + 2)) else {
                    log::warn!("annotation stream truncated inside SKIP");
                    break;
                };
                pos += 4;
                let interval = ((u32::from(hi) << 16) | u32::from(lo)) as i32;
                time += i64::from(interval);
            }
            NUM | SUB | CHN => {}
            AUX => pos += (usize::from(arg) + 1) & !1,
            _ => {
                time += i64::from(arg);
                let sample = time.max(0) as usize;
                match BeatSymbol::from_mit_code(code) {
                    Some(symbol) => set.annotations.push(BeatAnnotation {
                        sample_index: sample,
                        symbol,
                    }),
                    None => {
                        set.skipped += 1;
                        if code > LAST_STANDARD_CODE {
                            log::warn!("unknown annotation code {code} at sample {sample}");
                            set.unknown_codes.push((sample, code));
                        }
                    }
                }
            }
        }
    }
    set.annotations.sort_by_key(|a| a.sample_index);
    set
}

/// Encode annotations (which must be sorted) as an MIT annotation stream.
pub fn encode_annotations(annotations: &[BeatAnnotation]) -> Vec<u8> {
    let mut out = Vec::with_capacity(annotations.len() * 2 + 2);
    let mut push = |w: u16| out.extend_from_slice(&w.to_le_bytes());
    let mut time = 0usize;
    for a in annotations {
        let delta = a.sample_index.saturating_sub(time);
        time = a.sample_index.max(time);
        if delta > 0x03FF {
            push(SKIP << 10);
            let d = delta as u32;
            push((d >> 16) as u16);
            push((d & 0xFFFF) as u16);
            push(a.symbol.mit_code() << 10);
        } else {
            push((a.symbol.mit_code() << 10) | delta as u16);
        }
    }
    push(0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ann(sample_index: usize, c: char) -> BeatAnnotation {
        BeatAnnotation {
            sample_index,
            symbol: BeatSymbol::from_char(c).unwrap(),
        }
    }

    #[test]
    fn empty_stream() {
        assert_eq!(parse_annotations(&[]), AnnotationSet::default());
        assert_eq!(parse_annotations(&[0, 0]), AnnotationSet::default());
    }

    #[test]
    fn deltas_accumulate() {
        // N at 100, V at 400 (delta 300)
        let bytes = [
            (1u16 << 10 | 100).to_le_bytes(),
            (5u16 << 10 | 300).to_le_bytes(),
            [0, 0],
        ]
        .concat();
        let set = parse_annotations(&bytes);
        assert_eq!(set.annotations, vec![ann(100, 'N'), ann(400, 'V')]);
        assert_eq!(set.skipped, 0);
    }

    #[test]
    fn skip_aux_and_rhythm_records() {
        let mut bytes = Vec::new();
        // SKIP 100000 samples, then N with delta 5
        bytes.extend((SKIP << 10).to_le_bytes());
        bytes.extend(1u16.to_le_bytes()); // high word of 100000 = 0x0001_86A0
        bytes.extend(0x86A0u16.to_le_bytes());
        bytes.extend((1u16 << 10 | 5).to_le_bytes());
        // rhythm change '+' (28) with aux string "(N" (odd length 3 -> padded)
        bytes.extend((28u16 << 10 | 10).to_le_bytes());
        bytes.extend((AUX << 10 | 3).to_le_bytes());
        bytes.extend(b"(N\0\0");
        // unknown code 45
        bytes.extend((45u16 << 10 | 1).to_le_bytes());
        bytes.extend([0, 0]);
        let set = parse_annotations(&bytes);
        assert_eq!(set.annotations, vec![ann(100005, 'N')]);
        assert_eq!(set.skipped, 2);
        assert_eq!(set.unknown_codes, vec![(100016, 45)]);
        assert_eq!(set.total_records(), 3);
    }

    // Oracle: render the stream as text lines "time code" by a separate
    // delta-accumulating reader, then count beat lines.
    fn text_dump(bytes: &[u8]) -> Vec<String> {
        let words: Vec<u16> = bytes
            .chunks_exact(2)
            .map(|w| u16::from(w[0]) | (u16::from(w[1]) << 8))
            .collect();
        let mut lines = Vec::new();
        let mut t = 0i64;
        let mut i = 0;
        while i < words.len() {
            let (a, d) = (words[i] / 1024, words[i] % 1024);
            i += 1;
            if a == 0 && d == 0 {
                break;
            } else if a == 59 {
                t += i64::from((u32::from(words[i]) * 65536 + u32::from(words[i + 1])) as i32);
                i += 2;
            } else if a == 63 {
                i += usize::from(d).div_ceil(2);
            } else if a < 59 {
                t += i64::from(d);
                lines.push(format!("{t} {a}"));
            }
        }
        lines
    }

    #[test]
    fn encode_parse_agrees_with_text_oracle() {
        let mut anns = Vec::new();
        let mut t = 0;
        for k in 0..500usize {
            t += 50 + (k * 37) % 2000;
            let c = ['N', 'V', 'A', '|', 'x', 'L'][k % 6];
            anns.push(ann(t, c));
        }
        let bytes = encode_annotations(&anns);
        let set = parse_annotations(&bytes);
        assert_eq!(set.annotations, anns);
        let oracle = text_dump(&bytes);
        assert_eq!(oracle.len(), set.total_records());
        for (line, a) in oracle.iter().zip(&anns) {
            assert_eq!(line, &format!("{} {}", a.sample_index, a.symbol.mit_code()));
        }
    }
}
