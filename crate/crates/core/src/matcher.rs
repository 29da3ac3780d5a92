//! Template gallery and minimum-distance identification.
//!
//! Identification is 1:N against per-image templates under Euclidean
//! distance; ties break toward the earlier enrollment. Galleries are
//! immutable during matching and safe to share across threads.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::features::ReducedVector;

#[derive(Debug, Clone, PartialEq)]
pub struct GalleryEntry {
    pub subject: String,
    pub template: Vec<f64>,
}

/// Enrolled templates bound to one PCA model by fingerprint.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gallery {
    fingerprint: Option<[u8; 16]>,
    entries: Vec<GalleryEntry>,
}

impl Gallery {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(fingerprint: [u8; 16], entries: Vec<GalleryEntry>) -> Result<Self> {
        let mut gallery = Gallery {
            fingerprint: Some(fingerprint),
            entries: Vec::new(),
        };
        for e in entries {
            gallery.push_entry(e)?;
        }
        Ok(gallery)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[GalleryEntry] {
        &self.entries
    }

    pub fn fingerprint(&self) -> Option<[u8; 16]> {
        self.fingerprint
    }

    /// Template dimensionality, fixed by the first enrollment.
    pub fn dim(&self) -> Option<usize> {
        self.entries.first().map(|e| e.template.len())
    }

    pub fn subjects(&self) -> std::collections::BTreeSet<&str> {
        self.entries.iter().map(|e| e.subject.as_str()).collect()
    }

    /// Appends one template. Multiple templates per subject are expected;
    /// the first enrollment fixes the fingerprint and dimension.
    pub fn enroll(&mut self, subject: impl Into<String>, template: &ReducedVector) -> Result<()> {
        match self.fingerprint {
            None => self.fingerprint = Some(template.fingerprint()),
            Some(fp) if fp != template.fingerprint() => return Err(Error::FingerprintMismatch),
            _ => {}
        }
        self.push_entry(GalleryEntry {
            subject: subject.into(),
            template: template.values().to_vec(),
        })
    }

    fn push_entry(&mut self, entry: GalleryEntry) -> Result<()> {
        if let Some(dim) = self.dim() {
            if entry.template.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: entry.template.len(),
                });
            }
        }
        self.entries.push(entry);
        Ok(())
    }
}

/// Outcome of one identification.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub subject: String,
    pub distance: f64,
    /// Best distance among the remaining entries, absent for single-entry
    /// galleries.
    pub runner_up: Option<f64>,
}

/// Nearest enrolled template under Euclidean distance.
pub fn identify(gallery: &Gallery, probe: &ReducedVector) -> Result<MatchResult> {
    check_probe(gallery, probe)?;
    let dim = gallery.dim().expect("nonempty gallery has a dimension");
    if probe.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: probe.len(),
        });
    }
    Ok(best_match(gallery, probe.values(), dim))
}

/// All gallery distances, ascending; ties keep enrollment order.
pub fn ranked_distances(gallery: &Gallery, probe: &ReducedVector) -> Result<Vec<(String, f64)>> {
    check_probe(gallery, probe)?;
    let dim = gallery.dim().expect("nonempty gallery has a dimension");
    if probe.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: probe.len(),
        });
    }
    let mut ranked: Vec<(usize, String, f64)> = gallery
        .entries()
        .iter()
        .enumerate()
        .map(|(i, e)| {
            (
                i,
                e.subject.clone(),
                distance_sq(&e.template, probe.values(), dim),
            )
        })
        .collect();
    ranked.sort_by(|a, b| {
        a.2.partial_cmp(&b.2)
            .expect("finite distances")
            .then(a.0.cmp(&b.0))
    });
    Ok(ranked
        .into_iter()
        .map(|(_, s, d2)| (s, d2.sqrt()))
        .collect())
}

fn check_probe(gallery: &Gallery, probe: &ReducedVector) -> Result<()> {
    if gallery.is_empty() {
        return Err(Error::EmptyGallery);
    }
    if gallery.fingerprint() != Some(probe.fingerprint()) {
        return Err(Error::FingerprintMismatch);
    }
    Ok(())
}

/// Search restricted to the leading `k` template components; valid because
/// PCA components are nested.
fn best_match(gallery: &Gallery, probe: &[f64], k: usize) -> MatchResult {
    let mut best_idx = 0usize;
    let mut best = f64::INFINITY;
    let mut runner = f64::INFINITY;
    for (idx, entry) in gallery.entries().iter().enumerate() {
        let d2 = distance_sq(&entry.template, probe, k);
        if d2 < best {
            runner = best;
            best = d2;
            best_idx = idx;
        } else if d2 < runner {
            runner = d2;
        }
    }
    MatchResult {
        subject: gallery.entries()[best_idx].subject.clone(),
        distance: best.sqrt(),
        runner_up: runner.is_finite().then(|| runner.sqrt()),
    }
}

fn distance_sq(template: &[f64], probe: &[f64], k: usize) -> f64 {
    template[..k]
        .iter()
        .zip(&probe[..k])
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// Accuracy figures of one evaluation run.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct EvalReport {
    /// Fraction of probes whose nearest template carries the true identity,
    /// at the full template dimension.
    pub rank1_accuracy: f64,
    /// `(k, accuracy)` over the requested truncation grid, `k` ascending.
    pub curve: Vec<(usize, f64)>,
    /// Nonzero cells of the (actual, predicted) confusion table.
    pub confusion: Vec<ConfusionCell>,
    pub probe_count: usize,
    pub mean_match_latency_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ConfusionCell {
    pub actual: String,
    pub predicted: String,
    pub count: u64,
}

/// Evaluates labelled probes against the gallery: rank-1 accuracy at the
/// full dimension plus an accuracy-vs-k curve over `k_grid` truncations.
pub fn evaluate(
    gallery: &Gallery,
    probes: &[(String, ReducedVector)],
    k_grid: &[usize],
) -> Result<EvalReport> {
    if probes.is_empty() {
        return Err(Error::EmptyProbeSet);
    }
    if gallery.is_empty() {
        return Err(Error::EmptyGallery);
    }
    let dim = gallery.dim().expect("nonempty gallery has a dimension");
    for k in k_grid {
        if *k == 0 || *k > dim {
            return Err(Error::BadK { k: *k, max: dim });
        }
    }
    for w in k_grid.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::BadConfig(
                "k grid must be strictly increasing".into(),
            ));
        }
    }
    for (_, probe) in probes {
        check_probe(gallery, probe)?;
        if probe.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: probe.len(),
            });
        }
    }

    let mut confusion: std::collections::BTreeMap<(String, String), u64> =
        std::collections::BTreeMap::new();
    let mut hits = 0usize;
    let started = Instant::now();
    for (truth, probe) in probes {
        let result = best_match(gallery, probe.values(), dim);
        if result.subject == *truth {
            hits += 1;
        }
        *confusion
            .entry((truth.clone(), result.subject))
            .or_insert(0) += 1;
    }
    let elapsed_ms = started.elapsed().as_secs_f64() * 1e3;

    let mut curve = Vec::with_capacity(k_grid.len());
    for &k in k_grid {
        let mut k_hits = 0usize;
        for (truth, probe) in probes {
            if best_match(gallery, probe.values(), k).subject == *truth {
                k_hits += 1;
            }
        }
        curve.push((k, k_hits as f64 / probes.len() as f64));
    }

    Ok(EvalReport {
        rank1_accuracy: hits as f64 / probes.len() as f64,
        curve,
        confusion: confusion
            .into_iter()
            .map(|((actual, predicted), count)| ConfusionCell {
                actual,
                predicted,
                count,
            })
            .collect(),
        probe_count: probes.len(),
        mean_match_latency_ms: elapsed_ms / probes.len() as f64,
    })
}

/// `K,accuracy` rows for plotting the accuracy-vs-components curve.
pub fn eval_curve_csv(report: &EvalReport) -> String {
    let mut out = String::from("K,accuracy\n");
    for (k, acc) in &report.curve {
        out.push_str(&format!("{k},{acc}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reduced(values: &[f64], tag: u8) -> ReducedVector {
        ReducedVector::new(values.to_vec(), [tag; 16])
    }

    fn two_entry_gallery() -> Gallery {
        let mut g = Gallery::new();
        g.enroll("A", &reduced(&[0.0, 0.0], 1)).unwrap();
        g.enroll("B", &reduced(&[3.0, 4.0], 1)).unwrap();
        g
    }

    #[test]
    fn enrollment_grows_the_gallery() {
        let mut g = Gallery::new();
        assert!(g.is_empty());
        g.enroll("A", &reduced(&[1.0], 1)).unwrap();
        assert_eq!(g.len(), 1);
        g.enroll("A", &reduced(&[2.0], 1)).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.subjects().len(), 1);
    }

    #[test]
    fn enrollment_guards_fingerprint_and_dimension() {
        let mut g = Gallery::new();
        g.enroll("A", &reduced(&[1.0, 2.0], 1)).unwrap();
        assert!(matches!(
            g.enroll("B", &reduced(&[1.0, 2.0], 2)),
            Err(Error::FingerprintMismatch)
        ));
        assert!(matches!(
            g.enroll("B", &reduced(&[1.0], 1)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn identify_matches_hand_computed_distances() {
        // gallery {A: (0,0), B: (3,4)}, probe (1,0):
        // d(A) = 1, d(B) = sqrt(4 + 16) = sqrt(20)
        let g = two_entry_gallery();
        let r = identify(&g, &reduced(&[1.0, 0.0], 1)).unwrap();
        assert_eq!(r.subject, "A");
        assert!((r.distance - 1.0).abs() < 1e-12);
        assert!((r.runner_up.unwrap() - 20.0f64.sqrt()).abs() < 1e-12);
        assert!(r.distance <= r.runner_up.unwrap());
    }

    #[test]
    fn exact_template_matches_with_zero_distance() {
        let g = two_entry_gallery();
        let r = identify(&g, &reduced(&[3.0, 4.0], 1)).unwrap();
        assert_eq!(r.subject, "B");
        assert!(r.distance <= 1e-12);
    }

    #[test]
    fn ties_break_toward_earlier_enrollment() {
        let mut g = Gallery::new();
        g.enroll("first", &reduced(&[1.0], 1)).unwrap();
        g.enroll("second", &reduced(&[-1.0], 1)).unwrap();
        let r = identify(&g, &reduced(&[0.0], 1)).unwrap();
        assert_eq!(r.subject, "first");
    }

    #[test]
    fn identify_is_deterministic() {
        let g = two_entry_gallery();
        let probe = reduced(&[0.7, 0.1], 1);
        let a = identify(&g, &probe).unwrap();
        let b = identify(&g, &probe).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn identify_guards_inputs() {
        let g = Gallery::new();
        assert!(matches!(
            identify(&g, &reduced(&[1.0], 1)),
            Err(Error::EmptyGallery)
        ));
        let g = two_entry_gallery();
        assert!(matches!(
            identify(&g, &reduced(&[1.0, 0.0], 9)),
            Err(Error::FingerprintMismatch)
        ));
        assert!(matches!(
            identify(&g, &reduced(&[1.0], 1)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn orthogonal_transforms_preserve_the_decision() {
        // rotation by 0.77 rad in the plane
        let (c, s) = (0.77f64.cos(), 0.77f64.sin());
        let rot = |v: &[f64]| vec![c * v[0] - s * v[1], s * v[0] + c * v[1]];
        let mut g = Gallery::new();
        let mut gr = Gallery::new();
        let templates = [
            ("A", vec![0.2, -1.0]),
            ("B", vec![1.5, 0.3]),
            ("C", vec![-0.4, 0.9]),
        ];
        for (name, t) in &templates {
            g.enroll(*name, &reduced(t, 1)).unwrap();
            gr.enroll(*name, &reduced(&rot(t), 1)).unwrap();
        }
        let probe = vec![0.9, 0.4];
        let plain = identify(&g, &reduced(&probe, 1)).unwrap();
        let rotated = identify(&gr, &reduced(&rot(&probe), 1)).unwrap();
        assert_eq!(plain.subject, rotated.subject);
        assert!((plain.distance - rotated.distance).abs() < 1e-9);
    }

    #[test]
    fn ranked_distances_are_sorted() {
        let g = two_entry_gallery();
        let ranked = ranked_distances(&g, &reduced(&[1.0, 0.0], 1)).unwrap();
        assert_eq!(ranked.len(), 2);
        assert_eq!(ranked[0].0, "A");
        assert!(ranked[0].1 <= ranked[1].1);
    }

    #[test]
    fn evaluate_scores_self_probes_perfectly() {
        let g = two_entry_gallery();
        let probes = vec![
            ("A".to_string(), reduced(&[0.0, 0.0], 1)),
            ("B".to_string(), reduced(&[3.0, 4.0], 1)),
        ];
        let report = evaluate(&g, &probes, &[1, 2]).unwrap();
        assert_eq!(report.rank1_accuracy, 1.0);
        assert_eq!(report.probe_count, 2);
        assert_eq!(report.curve.len(), 2);
        assert!(report.mean_match_latency_ms >= 0.0);
        assert_eq!(report.confusion.len(), 2);
    }

    #[test]
    fn evaluate_scores_a_wrong_label_as_zero() {
        let g = two_entry_gallery();
        let probes = vec![("B".to_string(), reduced(&[0.1, 0.0], 1))];
        let report = evaluate(&g, &probes, &[2]).unwrap();
        assert_eq!(report.rank1_accuracy, 0.0);
        let cell = &report.confusion[0];
        assert_eq!(cell.actual, "B");
        assert_eq!(cell.predicted, "A");
    }

    #[test]
    fn evaluate_validates_the_grid() {
        let g = two_entry_gallery();
        let probes = vec![("A".to_string(), reduced(&[0.0, 0.0], 1))];
        assert!(matches!(
            evaluate(&g, &probes, &[1, 1]),
            Err(Error::BadConfig(_))
        ));
        assert!(matches!(
            evaluate(&g, &probes, &[3]),
            Err(Error::BadK { .. })
        ));
        assert!(matches!(evaluate(&g, &[], &[1]), Err(Error::EmptyProbeSet)));
    }

    #[test]
    fn curve_csv_has_expected_shape() {
        let report = EvalReport {
            rank1_accuracy: 1.0,
            curve: vec![(1, 0.5), (5, 0.9), (10, 1.0)],
            confusion: vec![],
            probe_count: 10,
            mean_match_latency_ms: 0.1,
        };
        let csv = eval_curve_csv(&report);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "K,accuracy");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "1,0.5");
    }
}
