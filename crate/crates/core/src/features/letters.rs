//! Letter-stream encoding of delineated beats and its repair.
//!
//! A complete beat reads `(p)(N)(t)`: each wave is an opening bracket at
//! its onset, a peak letter, and a closing bracket at its offset. The QRS
//! peak letter is the beat's annotation symbol.

use std::fmt;

use crate::mpta::FiducialSet;
use crate::record::BeatSymbol;

/// Nominal half-widths used when a bracket has to be imputed, seconds.
const P_HALF_WIDTH_S: f64 = 0.06;
const QRS_HALF_WIDTH_S: f64 = 0.045;
const T_HALF_WIDTH_S: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Letter {
    pub symbol: char,
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationStream {
    pub letters: Vec<Letter>,
    pub sampling_rate: f64,
}

impl AnnotationStream {
    pub fn new(sampling_rate: f64) -> Self {
        Self {
            letters: Vec::new(),
            sampling_rate,
        }
    }

    fn push(&mut self, symbol: char, position: usize) {
        self.letters.push(Letter { symbol, position });
    }

    pub fn text(&self) -> String {
        self.letters.iter().map(|l| l.symbol).collect()
    }
}

impl fmt::Display for AnnotationStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}

fn emit_wave(out: &mut AnnotationStream, open: Option<usize>, peak: Option<(char, usize)>, close: Option<usize>) {
    if let Some(o) = open {
        out.push('(', o);
    }
    if let Some((c, p)) = peak {
        out.push(c, p);
    }
    if let Some(c) = close {
        out.push(')', c);
    }
}

/// Encode each beat as letters. Points that are missing emit nothing.
pub fn fiducials_to_letters(
    fiducials: &[FiducialSet],
    symbols: &[BeatSymbol],
    sampling_rate: f64,
) -> AnnotationStream {
    let mut out = AnnotationStream::new(sampling_rate);
    for (f, s) in fiducials.iter().zip(symbols) {
        emit_wave(&mut out, f.ps, f.p.map(|p| ('p', p)), f.pe);
        emit_wave(&mut out, f.q, Some((s.as_char(), f.r)), f.s);
        emit_wave(&mut out, f.ts, f.t.map(|t| ('t', t)), f.te);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum WaveKind {
    P,
    Qrs(BeatSymbol),
    T,
    /// Brackets without a recognised peak letter.
    Empty,
}

#[derive(Debug, Clone, Copy, Default)]
struct Group {
    open: Option<usize>,
    peak: Option<(char, usize)>,
    close: Option<usize>,
}

impl Group {
    fn is_empty(&self) -> bool {
        self.open.is_none() && self.peak.is_none() && self.close.is_none()
    }

    fn kind(&self) -> WaveKind {
        match self.peak {
            Some(('p', _)) => WaveKind::P,
            Some(('t', _)) => WaveKind::T,
            Some((c, _)) => match BeatSymbol::from_char(c) {
                Ok(s) if s.is_beat() => WaveKind::Qrs(s),
                _ => WaveKind::Empty,
            },
            None => WaveKind::Empty,
        }
    }
}

fn groups(stream: &AnnotationStream) -> Vec<Group> {
    let mut out = Vec::new();
    let mut cur = Group::default();
    for l in &stream.letters {
        match l.symbol {
            '(' => {
                if !cur.is_empty() {
                    out.push(cur);
                    cur = Group::default();
                }
                cur.open = Some(l.position);
            }
            ')' => {
                cur.close = Some(l.position);
                out.push(cur);
                cur = Group::default();
            }
            c => {
                if cur.peak.is_some() {
                    out.push(cur);
                    cur = Group::default();
                }
                cur.peak = Some((c, l.position));
            }
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

#[derive(Default)]
struct BeatGroups {
    p: Option<Group>,
    qrs: Option<(BeatSymbol, Group)>,
    t: Option<Group>,
    touched: bool,
}

/// Split a letter stream into beats. Beats without a QRS peak letter are
/// returned in the second element as a count.
fn beats(stream: &AnnotationStream) -> (Vec<BeatGroups>, usize) {
    let mut kept = Vec::new();
    let mut dropped = 0;
    let mut cur = BeatGroups::default();
    let mut close = |cur: &mut BeatGroups, kept: &mut Vec<BeatGroups>| {
        let done = std::mem::take(cur);
        if done.qrs.is_some() {
            kept.push(done);
        } else if done.touched {
            dropped += 1;
        }
    };
    for g in groups(stream) {
        match g.kind() {
            WaveKind::P => {
                if cur.p.is_some() || cur.qrs.is_some() || cur.t.is_some() {
                    close(&mut cur, &mut kept);
                }
                cur.p = Some(g);
            }
            WaveKind::Qrs(sym) => {
                if cur.qrs.is_some() || cur.t.is_some() {
                    close(&mut cur, &mut kept);
                }
                cur.qrs = Some((sym, g));
            }
            WaveKind::T => {
                if cur.t.is_some() {
                    close(&mut cur, &mut kept);
                }
                cur.t = Some(g);
            }
            WaveKind::Empty => {}
        }
        cur.touched = true;
    }
    close(&mut cur, &mut kept);
    (kept, dropped)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RepairStats {
    /// Beats removed because no QRS peak letter was found.
    pub dropped_beats: usize,
    /// Brackets inserted at nominal half-widths.
    pub imputed_brackets: usize,
}

/// Close unbalanced brackets at the nominal half-width around each peak
/// and drop beats that lack a QRS peak letter. Valid streams pass through
/// unchanged, and the result is always valid.
pub fn repair_stream(stream: &AnnotationStream) -> (AnnotationStream, RepairStats) {
    let rate = stream.sampling_rate;
    let (kept, dropped) = beats(stream);
    let mut stats = RepairStats {
        dropped_beats: dropped,
        imputed_brackets: 0,
    };

    // (half width, group, peak letter) in output order
    let mut waves: Vec<(f64, Group, char, usize)> = Vec::new();
    for b in &kept {
        if let Some(g) = b.p {
            let (c, p) = g.peak.expect("P group has a peak");
            waves.push((P_HALF_WIDTH_S, g, c, p));
        }
        let (sym, g) = b.qrs.expect("kept beats have a QRS");
        waves.push((QRS_HALF_WIDTH_S, g, sym.as_char(), g.peak.unwrap().1));
        if let Some(g) = b.t {
            let (c, p) = g.peak.expect("T group has a peak");
            waves.push((T_HALF_WIDTH_S, g, c, p));
        }
    }

    let mut out = AnnotationStream::new(rate);
    let mut last = 0;
    for i in 0..waves.len() {
        let (half, g, c, peak) = waves[i];
        let half = (half * rate).round() as usize;
        // the next wave's opening bracket (or peak) bounds this wave's close
        let ceil = waves
            .get(i + 1)
            .map_or(usize::MAX, |w| w.1.open.filter(|&o| o <= w.3).unwrap_or(w.3));
        let open = g.open.filter(|&o| o <= peak).unwrap_or_else(|| {
            stats.imputed_brackets += 1;
            peak.saturating_sub(half).max(last).min(peak)
        });
        let close = g.close.filter(|&e| e >= peak).unwrap_or_else(|| {
            stats.imputed_brackets += 1;
            peak.saturating_add(half).min(ceil).max(peak)
        });
        emit_wave(&mut out, Some(open), Some((c, peak)), Some(close));
        last = close;
    }
    (out, stats)
}

/// Read a (repaired) stream back into per-beat fiducials and symbols.
pub fn stream_to_fiducials(stream: &AnnotationStream) -> (Vec<FiducialSet>, Vec<BeatSymbol>) {
    let (kept, _) = beats(stream);
    let mut fiducials = Vec::with_capacity(kept.len());
    let mut symbols = Vec::with_capacity(kept.len());
    for (i, b) in kept.iter().enumerate() {
        let (sym, q) = b.qrs.expect("kept beats have a QRS");
        let peak = |g: &Option<Group>| g.and_then(|g| g.peak.map(|p| p.1));
        fiducials.push(FiducialSet {
            beat_index: i,
            ps: b.p.and_then(|g| g.open),
            p: peak(&b.p),
            pe: b.p.and_then(|g| g.close),
            q: q.open,
            r: q.peak.unwrap().1,
            s: q.close,
            ts: b.t.and_then(|g| g.open),
            t: peak(&b.t),
            te: b.t.and_then(|g| g.close),
        });
        symbols.push(sym);
    }
    (fiducials, symbols)
}
