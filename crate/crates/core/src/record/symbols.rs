//! PhysioNet beat symbols and the normal/abnormal mapping.

use std::fmt;

use super::RecordError;

/// The sixteen annotation symbols that occur in the studied MIT-BIH records.
///
/// Twelve of them mark a heartbeat. The remaining four (`[`, `]`, `|`, `x`)
/// mark flutter boundaries, artifacts and blocked P waves; they are counted
/// but never classified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BeatSymbol {
    Normal,
    LeftBundle,
    Pvc,
    Paced,
    FlutterWave,
    AtrialPremature,
    PacedFusion,
    BlockedApb,
    RightBundle,
    Artifact,
    VentricularFusion,
    AberratedApc,
    VentricularEscape,
    AtrialEscape,
    FlutterStart,
    FlutterEnd,
}

impl BeatSymbol {
    pub const ALL: [BeatSymbol; 16] = [
        BeatSymbol::Normal,
        BeatSymbol::LeftBundle,
        BeatSymbol::Pvc,
        BeatSymbol::Paced,
        BeatSymbol::FlutterWave,
        BeatSymbol::AtrialPremature,
        BeatSymbol::PacedFusion,
        BeatSymbol::BlockedApb,
        BeatSymbol::RightBundle,
        BeatSymbol::Artifact,
        BeatSymbol::VentricularFusion,
        BeatSymbol::AberratedApc,
        BeatSymbol::VentricularEscape,
        BeatSymbol::AtrialEscape,
        BeatSymbol::FlutterStart,
        BeatSymbol::FlutterEnd,
    ];

    pub fn from_char(c: char) -> Result<Self, RecordError> {
        Ok(match c {
            'N' => BeatSymbol::Normal,
            'L' => BeatSymbol::LeftBundle,
            'V' => BeatSymbol::Pvc,
            '/' => BeatSymbol::Paced,
            '!' => BeatSymbol::FlutterWave,
            'A' => BeatSymbol::AtrialPremature,
            'f' => BeatSymbol::PacedFusion,
            'x' => BeatSymbol::BlockedApb,
            'R' => BeatSymbol::RightBundle,
            '|' => BeatSymbol::Artifact,
            'F' => BeatSymbol::VentricularFusion,
            'a' => BeatSymbol::AberratedApc,
            'E' => BeatSymbol::VentricularEscape,
            'e' => BeatSymbol::AtrialEscape,
            '[' => BeatSymbol::FlutterStart,
            ']' => BeatSymbol::FlutterEnd,
            other => return Err(RecordError::UnknownSymbol(other)),
        })
    }

    pub fn as_char(self) -> char {
        match self {
            BeatSymbol::Normal => 'N',
            BeatSymbol::LeftBundle => 'L',
            BeatSymbol::Pvc => 'V',
            BeatSymbol::Paced => '/',
            BeatSymbol::FlutterWave => '!',
            BeatSymbol::AtrialPremature => 'A',
            BeatSymbol::PacedFusion => 'f',
            BeatSymbol::BlockedApb => 'x',
            BeatSymbol::RightBundle => 'R',
            BeatSymbol::Artifact => '|',
            BeatSymbol::VentricularFusion => 'F',
            BeatSymbol::AberratedApc => 'a',
            BeatSymbol::VentricularEscape => 'E',
            BeatSymbol::AtrialEscape => 'e',
            BeatSymbol::FlutterStart => '[',
            BeatSymbol::FlutterEnd => ']',
        }
    }

    /// MIT annotation type code for this symbol.
    pub fn mit_code(self) -> u16 {
        match self {
            BeatSymbol::Normal => 1,
            BeatSymbol::LeftBundle => 2,
            BeatSymbol::RightBundle => 3,
            BeatSymbol::AberratedApc => 4,
            BeatSymbol::Pvc => 5,
            BeatSymbol::VentricularFusion => 6,
            BeatSymbol::AtrialPremature => 8,
            BeatSymbol::VentricularEscape => 10,
            BeatSymbol::Paced => 12,
            BeatSymbol::Artifact => 16,
            BeatSymbol::FlutterWave => 31,
            BeatSymbol::FlutterStart => 32,
            BeatSymbol::FlutterEnd => 33,
            BeatSymbol::AtrialEscape => 34,
            BeatSymbol::BlockedApb => 37,
            BeatSymbol::PacedFusion => 38,
        }
    }

    pub fn from_mit_code(code: u16) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.mit_code() == code)
    }

    /// Whether the symbol marks a heartbeat that enters classification.
    pub fn is_beat(self) -> bool {
        !matches!(
            self,
            BeatSymbol::FlutterStart
                | BeatSymbol::FlutterEnd
                | BeatSymbol::Artifact
                | BeatSymbol::BlockedApb
        )
    }

    /// Binary label, or `None` for the non-beat symbols.
    pub fn label(self) -> Option<BinaryLabel> {
        if !self.is_beat() {
            None
        } else if self == BeatSymbol::Normal {
            Some(BinaryLabel::Normal)
        } else {
            Some(BinaryLabel::Abnormal)
        }
    }
}

impl fmt::Display for BeatSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BinaryLabel {
    Normal,
    Abnormal,
}

impl BinaryLabel {
    /// SVM target: Normal is the positive class.
    pub fn sign(self) -> f64 {
        match self {
            BinaryLabel::Normal => 1.0,
            BinaryLabel::Abnormal => -1.0,
        }
    }

    pub fn from_score(score: f64) -> Self {
        if score >= 0.0 {
            BinaryLabel::Normal
        } else {
            BinaryLabel::Abnormal
        }
    }

    pub fn as_char(self) -> char {
        match self {
            BinaryLabel::Normal => 'N',
            BinaryLabel::Abnormal => 'A',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'N' => Some(BinaryLabel::Normal),
            'A' => Some(BinaryLabel::Abnormal),
            _ => None,
        }
    }
}

/// Map an annotation character to its binary label.
///
/// Returns `Ok(None)` for non-beat symbols, which are excluded from the
/// classification population.
pub fn map_to_binary(symbol: char) -> Result<Option<BinaryLabel>, RecordError> {
    Ok(BeatSymbol::from_char(symbol)?.label())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_and_pvc() {
        assert_eq!(map_to_binary('N').unwrap(), Some(BinaryLabel::Normal));
        assert_eq!(map_to_binary('V').unwrap(), Some(BinaryLabel::Abnormal));
    }

    #[test]
    fn unknown_symbol_rejected() {
        assert!(matches!(
            map_to_binary('?'),
            Err(RecordError::UnknownSymbol('?'))
        ));
    }

    #[test]
    fn non_beats_excluded() {
        for c in ['[', ']', '|', 'x'] {
            assert_eq!(map_to_binary(c).unwrap(), None, "{c}");
        }
    }

    #[test]
    fn total_and_surjective_on_beats() {
        let beats: Vec<_> = BeatSymbol::ALL.iter().filter(|s| s.is_beat()).collect();
        assert_eq!(beats.len(), 12);
        let labels: Vec<_> = beats.iter().map(|s| s.label().unwrap()).collect();
        assert!(labels.contains(&BinaryLabel::Normal));
        assert!(labels.contains(&BinaryLabel::Abnormal));
        assert_eq!(
            labels.iter().filter(|l| **l == BinaryLabel::Normal).count(),
            1
        );
    }

    #[test]
    fn char_and_code_tables_agree() {
        for s in BeatSymbol::ALL {
            assert_eq!(BeatSymbol::from_char(s.as_char()).unwrap(), s);
            assert_eq!(BeatSymbol::from_mit_code(s.mit_code()), Some(s));
        }
    }
}
