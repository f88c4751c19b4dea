//! Record to feature matrix: detection, annotation matching, delineation,
//! letter-stream repair and feature extraction.

use crate::features::{
    extract_features, fiducials_to_letters, repair_stream, stream_to_fiducials, AnnotationStream,
    FeatureError, FeatureVector, RepairStats,
};
use crate::mpta::{delineate, pair_peaks, run_chain, FiducialSet, MptaError, MptaOutput};
use crate::pipeline::derive_seed;
use crate::record::{BaselineWander, BeatSymbol, EcgRecord, SynthSpec};

/// Detections further than this from every annotation are discarded.
pub const MATCH_TOLERANCE_S: f64 = 0.05;

#[derive(Debug, thiserror::Error)]
pub enum WorkflowError {
    #[error("record {0} has no beat annotations to label detections with")]
    NoAnnotations(String),
    #[error("record has no channel {0}")]
    MissingChannel(usize),
    #[error(transparent)]
    Detection(#[from] MptaError),
    #[error(transparent)]
    Features(#[from] FeatureError),
}

/// How detections were reconciled with the reference annotations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MatchStats {
    pub detected: usize,
    pub annotated_beats: usize,
    /// Detections paired with a heartbeat annotation.
    pub matched: usize,
    /// Detections paired with a non-beat annotation.
    pub excluded: usize,
    /// Detections with no annotation within the tolerance.
    pub unmatched: usize,
}

/// Everything produced on the way from a record to its feature rows.
#[derive(Debug, Clone)]
pub struct RecordFeatures {
    pub chain: MptaOutput,
    /// Fiducials of the labelled beats after stream repair.
    pub fiducials: Vec<FiducialSet>,
    pub symbols: Vec<BeatSymbol>,
    pub stream: AnnotationStream,
    pub repair: RepairStats,
    pub matching: MatchStats,
    pub features: Vec<FeatureVector>,
}

/// Run the whole front end on one channel of a record.
pub fn process_record(record: &EcgRecord, channel: usize) -> Result<RecordFeatures, WorkflowError> {
    if channel >= record.channels.len() {
        return Err(WorkflowError::MissingChannel(channel));
    }
    let rate = record.rate();
    let signal = record.channel_mv(channel);
    let chain = run_chain(&signal, rate)?;

    let reference: Vec<usize> = record.annotations.iter().map(|a| a.sample_index).collect();
    let annotated_beats = record.annotations.iter().filter(|a| a.symbol.is_beat()).count();
    if annotated_beats == 0 {
        return Err(WorkflowError::NoAnnotations(record.record_id.clone()));
    }
    let tolerance = (MATCH_TOLERANCE_S * rate).round() as usize;
    let pairs = pair_peaks(&chain.r_peaks, &reference, tolerance);

    // delineate every detection so neighbour windows stay realistic
    let all_fids = delineate(&signal, &chain.r_peaks, rate);
    let mut matching = MatchStats {
        detected: chain.r_peaks.len(),
        annotated_beats,
        ..Default::default()
    };
    let mut kept = Vec::new();
    let mut symbols = Vec::new();
    for (fid, pair) in all_fids.iter().zip(&pairs) {
        match pair {
            Some(ri) if record.annotations[*ri].symbol.label().is_some() => {
                matching.matched += 1;
                kept.push(*fid);
                symbols.push(record.annotations[*ri].symbol);
            }
            Some(_) => matching.excluded += 1,
            None => matching.unmatched += 1,
        }
    }

    let stream = fiducials_to_letters(&kept, &symbols, rate);
    let (stream, repair) = repair_stream(&stream);
    let (fiducials, symbols) = stream_to_fiducials(&stream);
    let features = extract_features(&fiducials, rate, &symbols)?;
    Ok(RecordFeatures {
        chain,
        fiducials,
        symbols,
        stream,
        repair,
        matching,
        features,
    })
}

/// Synthetic stand-in for a patient record, derived from `seed` and the
/// patient id. Heart rate and ectopic share vary between patients.
pub fn synthetic_patient(patient: &str, seed: u64, duration_s: f64) -> SynthSpec {
    let s = derive_seed(seed, &format!("synthetic/{patient}"));
    let unit = |k: u32| ((s.rotate_left(k * 16) & 0xffff) as f64) / 65535.0;
    let mut spec = SynthSpec::new(60.0 + 30.0 * unit(0), duration_s);
    spec.record_id = patient.to_string();
    spec.noise_mv = 0.02 + 0.03 * unit(1);
    spec.baseline_wander = Some(BaselineWander {
        frequency_hz: 0.15 + 0.15 * unit(2),
        amplitude_mv: 0.1,
    });
    spec.ectopic_fraction = 0.15 + 0.15 * unit(3);
    spec.rr_jitter = 0.03;
    spec.seed = s;
    spec
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::{synthesize_record, BeatAnnotation};

    #[test]
    fn synthetic_record_yields_one_row_per_beat() {
        let mut spec = SynthSpec::new(72.0, 30.0);
        spec.ectopic_fraction = 0.2;
        spec.seed = 3;
        let syn = synthesize_record(&spec).unwrap();
        let out = process_record(&syn.record, 0).unwrap();
        let beats = syn.record.annotations.iter().filter(|a| a.symbol.is_beat()).count();
        assert_eq!(out.matching.annotated_beats, beats);
        assert!(out.features.len() + 1 >= beats, "{} of {beats}", out.features.len());
        assert_eq!(out.features.len(), out.symbols.len());
        assert_eq!(out.repair.dropped_beats, 0);
        assert!(out.features.iter().any(|f| f.symbol == BeatSymbol::Pvc));
    }

    #[test]
    fn non_beat_annotations_are_excluded() {
        let syn = synthesize_record(&SynthSpec::new(60.0, 20.0)).unwrap();
        let mut record = syn.record.clone();
        // relabel the third beat as an artifact
        record.annotations[2] = BeatAnnotation {
            symbol: BeatSymbol::Artifact,
            ..record.annotations[2]
        };
        let out = process_record(&record, 0).unwrap();
        assert_eq!(out.matching.excluded, 1);
        assert!(out.symbols.iter().all(|s| *s != BeatSymbol::Artifact));
    }

    #[test]
    fn unannotated_record_is_rejected() {
        let mut record = synthesize_record(&SynthSpec::new(60.0, 10.0)).unwrap().record;
        record.annotations.clear();
        assert!(matches!(process_record(&record, 0), Err(WorkflowError::NoAnnotations(_))));
        assert!(matches!(process_record(&record, 5), Err(WorkflowError::MissingChannel(5))));
    }

    #[test]
    fn synthetic_patients_differ_but_repeat() {
        let a = synthetic_patient("221", 0, 60.0);
        assert_eq!(a, synthetic_patient("221", 0, 60.0));
        assert_ne!(a.seed, synthetic_patient("205", 0, 60.0).seed);
        assert!((60.0..=90.0).contains(&a.heart_rate_bpm));
    }
}
