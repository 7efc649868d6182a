//! Recomputes the reference segmentation comparison from its raw counts and
//! checks every stated figure.

use std::fmt::Write as _;

use nlpkit::metrics::{percent_round, seg_precision_recall, SegCounts};

/// Counts of the reference comparison: (correct, output, gold).
pub const BASELINE: (usize, usize, usize) = (435, 604, 510);
pub const IMPROVED: (usize, usize, usize) = (454, 557, 510);
/// Stated percentages: baseline P, R, improved P, R.
pub const STATED_PERCENTS: [u32; 4] = [72, 85, 82, 89];
/// Stated improvements in percentage points: precision, recall.
pub const STATED_DELTAS: (i64, i64) = (10, 4);

#[derive(Debug, Clone, PartialEq)]
pub struct SimvalOutcome {
    pub baseline: SegCounts,
    pub improved: SegCounts,
    /// Raw ratios: baseline P, R, improved P, R.
    pub ratios: [f64; 4],
    pub percents: [u32; 4],
    pub deltas: (i64, i64),
    /// One entry per failed check; empty when everything matches.
    pub mismatches: Vec<String>,
}

impl SimvalOutcome {
    pub fn ok(&self) -> bool {
        self.mismatches.is_empty()
    }

    pub fn summary(&self) -> String {
        let [bp, br, ip, ir] = self.percents;
        let mut s = format!(
            "P: {bp}→{ip} ({:+}), R: {br}→{ir} ({:+}), ",
            self.deltas.0, self.deltas.1
        );
        if self.ok() {
            s.push_str("OK");
        } else {
            let _ = write!(s, "MISMATCH ({})", self.mismatches.join("; "));
        }
        s
    }
}

fn triple(c: &SegCounts) -> (usize, usize, usize) {
    (c.correct, c.output, c.gold)
}

/// Checks the counts against the reference record, then the four rounded
/// percentages and the two deltas derived from them.
pub fn simval(baseline: SegCounts, improved: SegCounts) -> Result<SimvalOutcome, nlpkit::metrics::MetricsError> {
    let (bp, br) = seg_precision_recall(baseline)?;
    let (ip, ir) = seg_precision_recall(improved)?;
    let ratios = [bp, br, ip, ir];
    let mut percents = [0u32; 4];
    for (p, r) in percents.iter_mut().zip(ratios) {
        *p = percent_round(r)?;
    }
    let deltas = (
        i64::from(percents[2]) - i64::from(percents[0]),
        i64::from(percents[3]) - i64::from(percents[1]),
    );
    let mut mismatches = Vec::new();
    for (name, got, want) in [
        ("baseline", triple(&baseline), BASELINE),
        ("improved", triple(&improved), IMPROVED),
    ] {
        if got != want {
            mismatches.push(format!(
                "{name} counts n={} N={} M={} differ from n={} N={} M={}",
                got.0, got.1, got.2, want.0, want.1, want.2
            ));
        }
    }
    let names = ["baseline P", "baseline R", "improved P", "improved R"];
    for ((name, got), want) in names.iter().zip(percents).zip(STATED_PERCENTS) {
        if got != want {
            mismatches.push(format!("{name} {got}% != {want}%"));
        }
    }
    if deltas != STATED_DELTAS {
        mismatches.push(format!(
            "deltas {:+}/{:+} != {:+}/{:+}",
            deltas.0, deltas.1, STATED_DELTAS.0, STATED_DELTAS.1
        ));
    }
    Ok(SimvalOutcome {
        baseline,
        improved,
        ratios,
        percents,
        deltas,
        mismatches,
    })
}

pub fn reference_counts() -> (SegCounts, SegCounts) {
    let mk = |(n, big_n, m): (usize, usize, usize)| SegCounts::new(n, big_n, m).expect("reference counts are valid");
    (mk(BASELINE), mk(IMPROVED))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_figures_reproduce() {
        let (b, i) = reference_counts();
        let out = simval(b, i).unwrap();
        assert_eq!(out.percents, [72, 85, 82, 89]);
        assert_eq!(out.deltas, (10, 4));
        assert!(out.ok());
        assert_eq!(out.summary(), "P: 72→82 (+10), R: 85→89 (+4), OK");
    }

    #[test]
    fn perturbed_count_is_flagged() {
        let (_, i) = reference_counts();
        let out = simval(SegCounts::new(436, 604, 510).unwrap(), i).unwrap();
        // the rounded figures survive this perturbation; the count check does not
        assert_eq!(out.percents, [72, 85, 82, 89]);
        assert!(!out.ok());
        assert!(out.summary().contains("MISMATCH"));
    }

    #[test]
    fn percent_shift_is_flagged() {
        let (b, _) = reference_counts();
        let out = simval(b, SegCounts::new(440, 557, 510).unwrap()).unwrap();
        assert_eq!(out.percents[2], 79);
        assert!(out.mismatches.iter().any(|m| m.contains("improved P")));
        assert!(out.mismatches.iter().any(|m| m.contains("deltas")));
    }

    #[test]
    fn stable_across_runs() {
        let (b, i) = reference_counts();
        assert_eq!(simval(b, i).unwrap(), simval(b, i).unwrap());
    }
}
