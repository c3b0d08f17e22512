//! Threshold metrics and average precision.
//!
//! An item is predicted CNN-generated when its score is strictly above the
//! threshold. Average precision is the non-interpolated sum
//! `Σ_j (R_j − R_{j−1})·P_j`, with one `(R, P)` point per distinct score so
//! that tied items never depend on input order.

use std::fmt;

use crate::error::{Error, Result};

/// Default decision threshold.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    /// Camera image.
    Real = 0,
    /// CNN-generated image.
    Generated = 1,
}

impl Label {
    pub fn from_u8(v: u8) -> Result<Self> {
        match v {
            0 => Ok(Self::Real),
            1 => Ok(Self::Generated),
            other => Err(Error::Format(format!("label must be 0 or 1, got {other}"))),
        }
    }

    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn is_positive(self) -> bool {
        self == Self::Generated
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredLabel {
    pub score: f64,
    pub label: Label,
}

impl ScoredLabel {
    pub fn new(score: f64, label: Label) -> Result<Self> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::Domain(format!("score {score} is outside [0, 1]")));
        }
        Ok(Self { score, label })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

pub fn confusion_at(data: &[ScoredLabel], th: f64) -> Confusion {
    let mut c = Confusion::default();
    for item in data {
        match (item.label.is_positive(), item.score > th) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fn_ += 1,
        }
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
}

/// `F = 2RP / (R + P)`, zero when `R + P = 0`.
pub fn harmonic_f(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * recall * precision / (recall + precision)
    }
}

pub fn prf_from_confusion(c: &Confusion) -> Result<Prf> {
    let positives = c.tp + c.fn_;
    if positives == 0 {
        return Err(Error::UndefinedMetric(
            "recall needs at least one positive label".into(),
        ));
    }
    let predicted = c.tp + c.fp;
    let precision = if predicted == 0 {
        0.0
    } else {
        c.tp as f64 / predicted as f64
    };
    let recall = c.tp as f64 / positives as f64;
    Ok(Prf {
        precision,
        recall,
        f_score: harmonic_f(precision, recall),
    })
}

pub fn f_score(data: &[ScoredLabel], th: f64) -> Result<Prf> {
    prf_from_confusion(&confusion_at(data, th))
}

/// `(recall, precision)` after each distinct score, from highest to lowest.
pub fn pr_curve(data: &[ScoredLabel]) -> Result<Vec<(f64, f64)>> {
    let positives = data.iter().filter(|d| d.label.is_positive()).count();
    if positives == 0 {
        return Err(Error::UndefinedMetric(
            "average precision needs at least one positive label".into(),
        ));
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    // Stable sort keeps ties in input order.
    order.sort_by(|&a, &b| data[b].score.total_cmp(&data[a].score));
    let mut points = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut k = 0;
    while k < order.len() {
        let score = data[order[k]].score;
        while k < order.len() && data[order[k]].score == score {
            if data[order[k]].label.is_positive() {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        points.push((tp as f64 / positives as f64, tp as f64 / (tp + fp) as f64));
    }
    Ok(points)
}

pub fn average_precision(data: &[ScoredLabel]) -> Result<f64> {
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (recall, precision) in pr_curve(data)? {
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(ap)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    pub ap: f64,
    pub threshold: f64,
    pub counts: Confusion,
    pub pr_points: Vec<(f64, f64)>,
}

pub fn evaluate(data: &[ScoredLabel], th: f64) -> Result<EvalReport> {
    let counts = confusion_at(data, th);
    let prf = prf_from_confusion(&counts)?;
    let pr_points = pr_curve(data)?;
    let ap = average_precision(data)?;
    Ok(EvalReport {
        precision: prf.precision,
        recall: prf.recall,
        f_score: prf.f_score,
        ap,
        threshold: th,
        counts,
        pr_points,
    })
}

impl EvalReport {
    /// `recall,precision` rows with a header.
    pub fn pr_csv(&self) -> String {
        let mut out = String::from("recall,precision\n");
        for (r, p) in &self.pr_points {
            out.push_str(&format!("{r:.6},{p:.6}\n"));
        }
        out
    }

    /// Human summary in percent.
    pub fn percent_summary(&self) -> String {
        format!(
            "P {:.2}%  R {:.2}%  F {:.2}%  AP {:.2}%",
            100.0 * self.precision,
            100.0 * self.recall,
            100.0 * self.f_score,
            100.0 * self.ap
        )
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "precision={:.6} recall={:.6} f={:.6} ap={:.6} th={:.6} tp={} fp={} tn={} fn={}",
            self.precision,
            self.recall,
            self.f_score,
            self.ap,
            self.threshold,
            self.counts.tp,
            self.counts.fp,
            self.counts.tn,
            self.counts.fn_
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use proptest::prelude::*;

    fn data(items: &[(f64, u8)]) -> Vec<ScoredLabel> {
        items
            .iter()
            .map(|&(s, l)| ScoredLabel::new(s, Label::from_u8(l).unwrap()).unwrap())
            .collect()
    }

    /// Sweeps every distinct score as an inclusive threshold and sums the
    /// steps directly.
    fn brute_force_ap(d: &[ScoredLabel]) -> f64 {
        let positives = d.iter().filter(|x| x.label.is_positive()).count() as f64;
        let mut thresholds: Vec<f64> = d.iter().map(|x| x.score).collect();
        thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
        thresholds.dedup();
        let mut ap = 0.0;
        let mut prev = 0.0;
        for t in thresholds {
            let tp = d
                .iter()
                .filter(|x| x.score >= t && x.label.is_positive())
                .count() as f64;
            let predicted = d.iter().filter(|x| x.score >= t).count() as f64;
            let r = tp / positives;
            ap += (r - prev) * (tp / predicted);
            prev = r;
        }
        ap
    }

    fn random_data(rng: &mut SplitMix64, n: usize, levels: u64) -> Vec<ScoredLabel> {
        let mut d: Vec<ScoredLabel> = (0..n)
            .map(|_| ScoredLabel {
                score: rng.below(levels) as f64 / (levels - 1) as f64,
                label: if rng.below(2) == 1 {
                    Label::Generated
                } else {
                    Label::Real
                },
            })
            .collect();
        d[0].label = Label::Generated;
        d
    }

    #[test]
    fn confusion_examples() {
        assert_eq!(
            confusion_at(&data(&[(0.9, 1), (0.1, 0)]), 0.5),
            Confusion {
                tp: 1,
                fp: 0,
                tn: 1,
                fn_: 0
            }
        );
        assert_eq!(
            confusion_at(&data(&[(0.5, 1)]), 0.5),
            Confusion {
                tp: 0,
                fp: 0,
                tn: 0,
                fn_: 1
            }
        );
    }

    #[test]
    fn confusion_matches_recount() {
        let mut rng = SplitMix64::new(31);
        let d = random_data(&mut rng, 200, 21);
        let c = confusion_at(&d, 0.5);
        let tp = d
            .iter()
            .filter(|x| x.label == Label::Generated && x.score > 0.5)
            .count();
        let fp = d
            .iter()
            .filter(|x| x.label == Label::Real && x.score > 0.5)
            .count();
        let pos = d.iter().filter(|x| x.label == Label::Generated).count();
        assert_eq!(
            (c.tp, c.fp, c.fn_, c.tn),
            (tp, fp, pos - tp, 200 - pos - fp)
        );
    }

    #[test]
    fn f_score_examples() {
        let perfect = f_score(&data(&[(0.9, 1), (0.8, 1), (0.2, 0), (0.1, 0)]), 0.5).unwrap();
        assert_eq!(
            (perfect.precision, perfect.recall, perfect.f_score),
            (1.0, 1.0, 1.0)
        );

        let mixed = f_score(
            &data(&[(0.9, 1), (0.8, 1), (0.7, 0), (0.2, 1), (0.1, 0)]),
            0.5,
        )
        .unwrap();
        assert!((mixed.precision - 2.0 / 3.0).abs() < 1e-15);
        assert!((mixed.recall - 2.0 / 3.0).abs() < 1e-15);
        assert!((mixed.f_score - 2.0 / 3.0).abs() < 1e-15);

        let none = f_score(&data(&[(0.2, 1), (0.1, 0)]), 0.5).unwrap();
        assert_eq!((none.precision, none.recall, none.f_score), (0.0, 0.0, 0.0));

        assert!(matches!(
            f_score(&data(&[(0.9, 0)]), 0.5),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn ap_examples() {
        assert_eq!(
            average_precision(&data(&[(0.9, 1), (0.8, 1), (0.3, 0)])).unwrap(),
            1.0
        );
        let d = data(&[(0.9, 0), (0.1, 1)]);
        assert_eq!(average_precision(&d).unwrap(), 0.5);
        assert_eq!(brute_force_ap(&d), 0.5);
        assert!(matches!(
            average_precision(&data(&[(0.4, 0)])),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn ties_are_grouped() {
        // One positive and one negative at the same score: single point at P = 1/2.
        let d = data(&[(0.7, 0), (0.7, 1)]);
        assert_eq!(average_precision(&d).unwrap(), 0.5);
        assert_eq!(
            average_precision(&data(&[(0.7, 1), (0.7, 0)])).unwrap(),
            0.5
        );
    }

    #[test]
    fn ap_matches_threshold_sweep() {
        let mut rng = SplitMix64::new(77);
        for _ in 0..200 {
            let n = 1 + rng.below(500) as usize;
            let levels = 2 + rng.below(40);
            let d = random_data(&mut rng, n, levels);
            let got = average_precision(&d).unwrap();
            assert!((got - brute_force_ap(&d)).abs() <= 1e-12);
        }
    }

    #[test]
    fn report_line_format() {
        let r = evaluate(&data(&[(0.9, 1), (0.1, 0)]), 0.5).unwrap();
        assert_eq!(
            r.to_string(),
            "precision=1.000000 recall=1.000000 f=1.000000 ap=1.000000 th=0.500000 tp=1 fp=0 tn=1 fn=0"
        );
        assert_eq!(
            r.pr_csv(),
            "recall,precision\n1.000000,1.000000\n1.000000,0.500000\n"
        );
    }

    proptest! {
        #[test]
        fn ap_is_bounded_and_monotone_invariant(seed in any::<u64>(), n in 1usize..80) {
            let mut rng = SplitMix64::new(seed);
            let d = random_data(&mut rng, n, 10);
            let ap = average_precision(&d).unwrap();
            prop_assert!((0.0..=1.0).contains(&ap));
            let squashed: Vec<ScoredLabel> = d.iter().map(|x| ScoredLabel { score: x.score.powi(3) * 0.5 + 0.1, ..*x }).collect();
            prop_assert_eq!(average_precision(&squashed).unwrap(), ap);
        }

        #[test]
        fn ap_is_order_independent(seed in any::<u64>(), n in 1usize..80) {
            let mut rng = SplitMix64::new(seed);
            let d = random_data(&mut rng, n, 5);
            let mut shuffled = d.clone();
            rng.shuffle(&mut shuffled);
            prop_assert_eq!(average_precision(&shuffled).unwrap(), average_precision(&d).unwrap());
            prop_assert_eq!(f_score(&shuffled, 0.5).unwrap(), f_score(&d, 0.5).unwrap());
        }

        #[test]
        fn perfect_ranking_iff_ap_one(seed in any::<u64>(), n in 2usize..60) {
            let mut rng = SplitMix64::new(seed);
            let d = random_data(&mut rng, n, 7);
            let min_pos = d.iter().filter(|x| x.label.is_positive()).map(|x| x.score).fold(f64::INFINITY, f64::min);
            let max_neg = d.iter().filter(|x| !x.label.is_positive()).map(|x| x.score).fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(average_precision(&d).unwrap() == 1.0, min_pos > max_neg);
        }

        #[test]
        fn counts_cover_dataset(seed in any::<u64>(), n in 0usize..100, th in 0.0f64..1.0) {
            let mut rng = SplitMix64::new(seed);
            let d = if n == 0 { Vec::new() } else { random_data(&mut rng, n, 11) };
            prop_assert_eq!(confusion_at(&d, th).total(), n);
        }
    }
}
