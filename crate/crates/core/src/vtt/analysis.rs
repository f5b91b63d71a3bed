use serde::{Deserialize, Serialize};

use super::{Label, VttStudy};
use crate::error::{Error, Result};
use crate::stats::{ks_two_sample, two_sample_t_test, Alternative, TTestVariant, TestResult};

pub const DEFAULT_VTT_ALPHA: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub alpha_t: f64,
    pub alpha_ks: f64,
    pub variant: TTestVariant,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            alpha_t: DEFAULT_VTT_ALPHA,
            alpha_ks: DEFAULT_VTT_ALPHA,
            variant: TTestVariant::Pooled,
        }
    }
}

/// Rates are percentages in [0, 100].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantRates {
    pub participant: String,
    pub fpr: f64,
    pub tpr: f64,
    pub mean_likert_real: f64,
    pub mean_likert_generated: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub fpr: f64,
    pub fnr: f64,
    pub per_participant: Vec<ParticipantRates>,
}

/// `result` is `None` when the participant has fewer than two responses in a class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantTest {
    pub participant: String,
    pub result: Option<TestResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VttStats {
    pub study_id: String,
    pub fpr: f64,
    pub fnr: f64,
    pub per_participant: Vec<ParticipantRates>,
    pub likert_diff: f64,
    /// `None` for a single-participant study.
    pub group_test: Option<TestResult>,
    pub ks_test: TestResult,
    pub participant_tests: Vec<ParticipantTest>,
}

struct ClassSamples {
    guesses: Vec<f64>,
    likert: Vec<f64>,
}

fn class_samples(study: &VttStudy, participant: &str, truth: Label) -> ClassSamples {
    let mut out = ClassSamples {
        guesses: Vec::new(),
        likert: Vec::new(),
    };
    for r in study.responses_of(participant).filter(|r| r.truth == truth) {
        out.guesses.push(r.guess.indicator());
        out.likert.push(f64::from(r.likert.get()));
    }
    out
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Share of 1s as a percentage; scaling the integer count first keeps whole percents exact.
fn percent(indicators: &[f64]) -> f64 {
    100.0 * indicators.iter().sum::<f64>() / indicators.len() as f64
}

fn missing_class(participant: &str, truth: Label) -> Error {
    Error::InvalidInput(format!(
        "participant {participant} has no responses for {truth} images"
    ))
}

fn participant_rates(study: &VttStudy, participant: &str) -> Result<ParticipantRates> {
    let real = class_samples(study, participant, Label::Real);
    let gen = class_samples(study, participant, Label::Generated);
    if real.guesses.is_empty() {
        return Err(missing_class(participant, Label::Real));
    }
    if gen.guesses.is_empty() {
        return Err(missing_class(participant, Label::Generated));
    }
    Ok(ParticipantRates {
        participant: participant.to_string(),
        fpr: percent(&gen.guesses),
        tpr: percent(&real.guesses),
        mean_likert_real: mean(&real.likert),
        mean_likert_generated: mean(&gen.likert),
    })
}

/// Study FPR and FNR as unweighted means over participants.
pub fn rates(study: &VttStudy) -> Result<Rates> {
    let per_participant = study
        .participants()
        .iter()
        .map(|p| participant_rates(study, p))
        .collect::<Result<Vec<_>>>()?;
    let fprs: Vec<f64> = per_participant.iter().map(|p| p.fpr).collect();
    let tprs: Vec<f64> = per_participant.iter().map(|p| p.tpr).collect();
    Ok(Rates {
        fpr: mean(&fprs),
        fnr: 100.0 - mean(&tprs),
        per_participant,
    })
}

/// Mean over participants of (mean real rating − mean generated rating).
pub fn likert_difference(study: &VttStudy) -> Result<f64> {
    let r = rates(study)?;
    let diffs: Vec<f64> = r
        .per_participant
        .iter()
        .map(|p| p.mean_likert_real - p.mean_likert_generated)
        .collect();
    Ok(mean(&diffs))
}

pub fn participant_hypothesis_test(
    study: &VttStudy,
    participant: &str,
    alpha: f64,
) -> Result<TestResult> {
    participant_hypothesis_test_with(study, participant, alpha, TTestVariant::Pooled)
}

/// Two-sided two-sample t-test of the participant's predictions on generated
/// images against those on real images.
pub fn participant_hypothesis_test_with(
    study: &VttStudy,
    participant: &str,
    alpha: f64,
    variant: TTestVariant,
) -> Result<TestResult> {
    let gen = class_samples(study, participant, Label::Generated).guesses;
    let real = class_samples(study, participant, Label::Real).guesses;
    if gen.len() < 2 || real.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "participant {participant} needs at least 2 responses per class, has {} generated and {} real",
            gen.len(),
            real.len()
        )));
    }
    two_sample_t_test(&gen, &real, Alternative::TwoSided, alpha, variant)
}

/// Two-sided two-sample t-test of participant FPRs against participant TPRs.
pub fn group_hypothesis_test(
    study: &VttStudy,
    alpha: f64,
    variant: TTestVariant,
) -> Result<TestResult> {
    let r = rates(study)?;
    if r.per_participant.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "group test needs at least 2 participants, study {} has {}",
            study.study_id(),
            r.per_participant.len()
        )));
    }
    let fprs: Vec<f64> = r.per_participant.iter().map(|p| p.fpr / 100.0).collect();
    let tprs: Vec<f64> = r.per_participant.iter().map(|p| p.tpr / 100.0).collect();
    two_sample_t_test(&fprs, &tprs, Alternative::TwoSided, alpha, variant)
}

/// KS test on pooled ratings of real images against pooled ratings of generated images.
pub fn likert_ks(study: &VttStudy, alpha: f64) -> Result<TestResult> {
    let pooled = |truth: Label| -> Vec<f64> {
        study
            .responses()
            .iter()
            .filter(|r| r.truth == truth)
            .map(|r| f64::from(r.likert.get()))
            .collect()
    };
    let real = pooled(Label::Real);
    let gen = pooled(Label::Generated);
    if real.is_empty() || gen.is_empty() {
        return Err(Error::InvalidInput(format!(
            "study {} has no ratings for one of the classes",
            study.study_id()
        )));
    }
    ks_two_sample(&real, &gen, alpha)
}

pub fn analyze_study(study: &VttStudy) -> Result<VttStats> {
    analyze_study_with(study, &AnalysisOptions::default())
}

pub fn analyze_study_with(study: &VttStudy, options: &AnalysisOptions) -> Result<VttStats> {
    let r = rates(study)?;
    let likert_diff = likert_difference(study)?;
    // One FPR and one TPR carry no variance estimate.
    let group_test = if r.per_participant.len() >= 2 {
        Some(group_hypothesis_test(study, options.alpha_t, options.variant)?)
    } else {
        None
    };
    let ks_test = likert_ks(study, options.alpha_ks)?;
    let participant_tests = study
        .participants()
        .into_iter()
        .map(|p| {
            let result =
                participant_hypothesis_test_with(study, &p, options.alpha_t, options.variant).ok();
            ParticipantTest {
                participant: p,
                result,
            }
        })
        .collect();
    Ok(VttStats {
        study_id: study.study_id().to_string(),
        fpr: r.fpr,
        fnr: r.fnr,
        per_participant: r.per_participant,
        likert_diff,
        group_test,
        ks_test,
        participant_tests,
    })
}
