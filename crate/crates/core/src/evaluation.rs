//! Identification and verification metrics.
//!
//! Rates are percentages. Closed-set runs produce a cumulative match curve;
//! verification runs accept a probe when its score against the claimed class
//! template is at most the threshold.

use std::fmt::Write as _;

use crate::classifier::{classify, score, Measure};
use crate::error::{Error, Result};
use crate::kdcv::CommonVectors;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn new(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        Self { tp, fp, tn, fn_ }
    }

    pub fn genuine(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn impostor(&self) -> usize {
        self.fp + self.tn
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub sensitivity: f64,
    pub specificity: f64,
    pub accuracy: f64,
    pub fpr: f64,
    pub fnr: f64,
}

pub fn metrics(counts: &ConfusionCounts) -> Result<Rates> {
    let (genuine, impostor) = (counts.genuine(), counts.impostor());
    if genuine == 0 || impostor == 0 {
        return Err(Error::Dataset(format!(
            "rates need both genuine and impostor probes (got {genuine} genuine, {impostor} impostor)"
        )));
    }
    let pct = |num: usize, den: usize| 100.0 * num as f64 / den as f64;
    Ok(Rates {
        sensitivity: pct(counts.tp, genuine),
        specificity: pct(counts.tn, impostor),
        accuracy: pct(counts.tp + counts.tn, genuine + impostor),
        fpr: pct(counts.fp, impostor),
        fnr: pct(counts.fn_, genuine),
    })
}

/// Discriminant vector with its true (or claimed) class.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledProbe {
    pub y: Vec<f64>,
    pub class: usize,
}

impl LabeledProbe {
    pub fn new(y: Vec<f64>, class: usize) -> Self {
        Self { y, class }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub measure: Measure,
    pub num_probes: usize,
    pub counts: Option<ConfusionCounts>,
    pub rates: Option<Rates>,
    /// `cmc[k - 1]` is the rank-k identification rate.
    pub cmc: Vec<f64>,
    pub threshold: Option<f64>,
}

impl EvalReport {
    pub fn rank1(&self) -> Option<f64> {
        self.cmc.first().copied()
    }

    /// `metric,value` lines.
    pub fn metrics_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        let _ = writeln!(out, "probes,{}", self.num_probes);
        if let Some(t) = self.threshold {
            let _ = writeln!(out, "threshold,{t}");
        }
        if let Some(c) = self.counts {
            let _ = writeln!(out, "tp,{}\nfp,{}\ntn,{}\nfn,{}", c.tp, c.fp, c.tn, c.fn_);
        }
        if let Some(r) = self.rates {
            let _ = writeln!(
                out,
                "sensitivity,{:.3}\nspecificity,{:.3}\naccuracy,{:.3}\nfpr,{:.3}\nfnr,{:.3}",
                r.sensitivity, r.specificity, r.accuracy, r.fpr, r.fnr
            );
        }
        if let Some(r1) = self.rank1() {
            let _ = writeln!(out, "rank1,{r1:.3}");
        }
        out
    }

    pub fn cmc_csv(&self) -> String {
        let mut out = String::from("rank,rate\n");
        for (k, rate) in self.cmc.iter().enumerate() {
            let _ = writeln!(out, "{},{:.3}", k + 1, rate);
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = format!("measure: {}\nprobes: {}\n", self.measure, self.num_probes);
        if let Some(t) = self.threshold {
            let _ = writeln!(out, "threshold: {t}");
        }
        if let Some(c) = self.counts {
            let _ = writeln!(out, "TP={} FP={} TN={} FN={}", c.tp, c.fp, c.tn, c.fn_);
        }
        if let Some(r) = self.rates {
            let _ = writeln!(
                out,
                "sensitivity {:.3}%  specificity {:.3}%  accuracy {:.3}%\nFPR {:.3}%  FNR {:.3}%",
                r.sensitivity, r.specificity, r.accuracy, r.fpr, r.fnr
            );
        }
        if !self.cmc.is_empty() {
            let _ = writeln!(out, "rank-1 identification: {:.3}%", self.cmc[0]);
            let shown: Vec<String> = self.cmc.iter().take(10).map(|r| format!("{r:.1}")).collect();
            let _ = writeln!(out, "CMC (first {}): {}", shown.len(), shown.join(" "));
        }
        out
    }
}

fn check_class(templates: &CommonVectors, class: usize) -> Result<()> {
    if class >= templates.num_classes() {
        return Err(Error::Dataset(format!(
            "probe label {class} is not one of the model's {} classes",
            templates.num_classes()
        )));
    }
    Ok(())
}

pub fn closed_set_eval(
    templates: &CommonVectors,
    probes: &[LabeledProbe],
    measure: Measure,
) -> Result<EvalReport> {
    if probes.is_empty() {
        return Err(Error::Dataset("no probes to evaluate".into()));
    }
    let classes = templates.num_classes();
    let mut hits_at = vec![0usize; classes];
    for probe in probes {
        check_class(templates, probe.class)?;
        let ranking = classify(templates, &probe.y, measure)?;
        let rank = ranking.rank_of(probe.class).expect("ranking covers every class");
        hits_at[rank] += 1;
    }
    let mut cumulative = 0;
    let cmc = hits_at
        .iter()
        .map(|&h| {
            cumulative += h;
            100.0 * cumulative as f64 / probes.len() as f64
        })
        .collect();
    Ok(EvalReport {
        measure,
        num_probes: probes.len(),
        counts: None,
        rates: None,
        cmc,
        threshold: None,
    })
}

/// Claimed-class scores of genuine and impostor probes, computed once so a
/// threshold sweep does not rescore.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationScores {
    pub measure: Measure,
    pub genuine: Vec<f64>,
    pub impostor: Vec<f64>,
}

impl VerificationScores {
    pub fn compute(
        templates: &CommonVectors,
        genuine: &[LabeledProbe],
        impostor: &[LabeledProbe],
        measure: Measure,
    ) -> Result<Self> {
        let claimed = |probes: &[LabeledProbe]| -> Result<Vec<f64>> {
            probes
                .iter()
                .map(|p| {
                    check_class(templates, p.class)?;
                    score(measure, &p.y, templates.row(p.class))
                })
                .collect()
        };
        Ok(Self {
            measure,
            genuine: claimed(genuine)?,
            impostor: claimed(impostor)?,
        })
    }

    pub fn counts_at(&self, tau: f64) -> ConfusionCounts {
        let tp = self.genuine.iter().filter(|&&s| s <= tau).count();
        let fp = self.impostor.iter().filter(|&&s| s <= tau).count();
        ConfusionCounts {
            tp,
            fn_: self.genuine.len() - tp,
            fp,
            tn: self.impostor.len() - fp,
        }
    }

    pub fn report_at(&self, tau: f64) -> Result<EvalReport> {
        if tau.is_nan() {
            return Err(Error::InvalidParameter("threshold is NaN".into()));
        }
        let counts = self.counts_at(tau);
        Ok(EvalReport {
            measure: self.measure,
            num_probes: self.genuine.len() + self.impostor.len(),
            counts: Some(counts),
            rates: Some(metrics(&counts)?),
            cmc: Vec::new(),
            threshold: Some(tau),
        })
    }

    pub fn sweep(&self, taus: &[f64]) -> Result<ThresholdSweep> {
        let points = taus
            .iter()
            .map(|&tau| {
                let rates = metrics(&self.counts_at(tau))?;
                Ok(SweepPoint {
                    tau,
                    sensitivity: rates.sensitivity,
                    specificity: rates.specificity,
                })
            })
            .collect::<Result<_>>()?;
        Ok(ThresholdSweep { points })
    }
}

pub fn verification_eval(
    templates: &CommonVectors,
    genuine: &[LabeledProbe],
    impostor: &[LabeledProbe],
    measure: Measure,
    tau: f64,
) -> Result<EvalReport> {
    VerificationScores::compute(templates, genuine, impostor, measure)?.report_at(tau)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub tau: f64,
    pub sensitivity: f64,
    pub specificity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSweep {
    pub points: Vec<SweepPoint>,
}

impl ThresholdSweep {
    /// `steps` evenly spaced thresholds from `lo` to `hi` inclusive.
    pub fn grid(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) || steps < 2 {
            return Err(Error::InvalidParameter(format!(
                "threshold sweep needs finite lo <= hi and at least 2 steps, got {lo}:{hi}:{steps}"
            )));
        }
        Ok((0..steps)
            .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
            .collect())
    }

    /// Point where the false accept and false reject rates are closest.
    pub fn equal_error_point(&self) -> Option<SweepPoint> {
        self.points.iter().copied().min_by(|a, b| {
            let gap = |p: &SweepPoint| ((100.0 - p.specificity) - (100.0 - p.sensitivity)).abs();
            gap(a).partial_cmp(&gap(b)).unwrap_or(std::cmp::Ordering::Equal)
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau,sensitivity,specificity\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{:.3},{:.3}", p.tau, p.sensitivity, p.specificity);
        }
        out
    }
}
