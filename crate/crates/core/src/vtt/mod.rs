//! Visual Turing test responses and the statistics computed from them.
//!
//! Guesses are encoded as 1 = "real", 0 = "generated", so a sample mean is
//! the probability that a participant calls an image real.

mod analysis;
mod csv_io;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use analysis::{
    analyze_study, analyze_study_with, group_hypothesis_test, likert_difference, likert_ks,
    participant_hypothesis_test, participant_hypothesis_test_with, rates, AnalysisOptions,
    ParticipantRates, ParticipantTest, Rates, VttStats, DEFAULT_VTT_ALPHA,
};
pub use csv_io::{read_study_csv, read_study_file, write_study_csv, RESPONSE_CSV_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Real,
    Generated,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Real => "real",
            Label::Generated => "generated",
        }
    }

    /// 1 for "real", 0 for "generated".
    pub fn indicator(self) -> f64 {
        match self {
            Label::Real => 1.0,
            Label::Generated => 0.0,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(Label::Real),
            "generated" => Ok(Label::Generated),
            other => Err(Error::InvalidInput(format!(
                "expected \"real\" or \"generated\", got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Likert(u8);

impl Likert {
    pub fn new(value: u8) -> Result<Self> {
        if (1..=3).contains(&value) {
            Ok(Likert(value))
        } else {
            Err(Error::InvalidInput(format!(
                "Likert rating must be 1, 2 or 3, got {value}"
            )))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

impl TryFrom<u8> for Likert {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        Likert::new(v)
    }
}

impl From<Likert> for u8 {
    fn from(l: Likert) -> u8 {
        l.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VttResponse {
    pub participant: String,
    pub image: String,
    pub truth: Label,
    pub guess: Label,
    pub likert: Likert,
    #[serde(default)]
    pub timestamp: String,
}

/// All responses of one visual Turing test (one generative model).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VttStudy {
    study_id: String,
    responses: Vec<VttResponse>,
}

impl VttStudy {
    /// Validates uniqueness of (participant, image), one truth label per
    /// image, and that every participant saw both classes.
    pub fn new(study_id: impl Into<String>, responses: Vec<VttResponse>) -> Result<Self> {
        let study = VttStudy {
            study_id: study_id.into(),
            responses,
        };
        study.validate()?;
        Ok(study)
    }

    fn validate(&self) -> Result<()> {
        if self.responses.is_empty() {
            return Err(Error::InvalidInput(format!(
                "study {} has no responses",
                self.study_id
            )));
        }
        let mut pairs = BTreeSet::new();
        let mut truth_of: BTreeMap<&str, Label> = BTreeMap::new();
        for r in &self.responses {
            if !pairs.insert((&r.participant, &r.image)) {
                return Err(Error::InvalidInput(format!(
                    "participant {} answered image {} more than once",
                    r.participant, r.image
                )));
            }
            if let Some(prev) = truth_of.insert(&r.image, r.truth) {
                if prev != r.truth {
                    return Err(Error::InvalidInput(format!(
                        "image {} carries both truth labels",
                        r.image
                    )));
                }
            }
        }
        for p in self.participants() {
            let seen: BTreeSet<Label> = self.responses_of(&p).map(|r| r.truth).collect();
            if seen.len() < 2 {
                return Err(Error::InvalidInput(format!(
                    "participant {p} did not see both real and generated images"
                )));
            }
        }
        Ok(())
    }

    pub fn study_id(&self) -> &str {
        &self.study_id
    }

    pub fn responses(&self) -> &[VttResponse] {
        &self.responses
    }

    /// Participants in sorted order.
    pub fn participants(&self) -> Vec<String> {
        self.responses
            .iter()
            .map(|r| r.participant.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn responses_of<'a>(&'a self, participant: &'a str) -> impl Iterator<Item = &'a VttResponse> {
        self.responses
            .iter()
            .filter(move |r| r.participant == participant)
    }

    /// `(dataset, augmentation)` from a `dataset/augmentation` study id.
    pub fn dataset_and_augmentation(&self) -> (String, String) {
        split_study_id(&self.study_id)
    }
}

pub fn split_study_id(id: &str) -> (String, String) {
    match id.split_once('/') {
        Some((d, a)) => (d.to_string(), a.to_string()),
        None => (id.to_string(), String::new()),
    }
}
