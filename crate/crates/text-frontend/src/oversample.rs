//! Duration balancing: duplicate whole utterances so every speaker
//! contributes about as much audio as the largest one.
//!
//! Per speaker, the record list is repeated a whole number of times — the
//! ceiling of (max total / own total). When that whole-round total would
//! overshoot 1.2× the maximum, one fewer full round is used and records are
//! appended in order until the total first reaches the maximum.

use std::collections::BTreeMap;

use crate::error::FrontendError;
use crate::manifest::UtteranceRecord;

pub fn oversample(records: &[UtteranceRecord]) -> Result<Vec<UtteranceRecord>, FrontendError> {
    if records.is_empty() {
        return Err(FrontendError::EmptyCorpus);
    }

    let mut by_speaker: BTreeMap<usize, Vec<&UtteranceRecord>> = BTreeMap::new();
    for rec in records {
        by_speaker.entry(rec.speaker_id).or_default().push(rec);
    }

    let totals: BTreeMap<usize, f64> = by_speaker
        .iter()
        .map(|(s, recs)| (*s, recs.iter().map(|r| r.duration_s).sum()))
        .collect();
    let max_total = totals.values().cloned().fold(0.0, f64::max);

    let mut out = Vec::new();
    for (speaker, recs) in &by_speaker {
        let total = totals[speaker];
        let rounds = (max_total / total).ceil().max(1.0) as usize;
        if rounds as f64 * total <= 1.2 * max_total {
            for _ in 0..rounds {
                out.extend(recs.iter().map(|r| (*r).clone()));
            }
        } else {
            // One fewer full round, then top up record by record.
            let mut acc = 0.0;
            for _ in 0..rounds - 1 {
                out.extend(recs.iter().map(|r| (*r).clone()));
                acc += total;
            }
            let mut i = 0;
            while acc < max_total {
                let rec = recs[i % recs.len()];
                out.push(rec.clone());
                acc += rec.duration_s;
                i += 1;
            }
        }
    }
    Ok(out)
}
