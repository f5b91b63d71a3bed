//! The frozen scipy/mpmath corpus in `fixtures/stats_reference.json`.

use genimg_eval::stats::Alternative;
use serde::Deserialize;

#[derive(Deserialize)]
pub struct Corpus {
    pub paired_t: Vec<Paired>,
    pub two_sample_t: Vec<TwoSample>,
    pub ks: Vec<Ks>,
    pub ks_exact: Vec<Ks>,
    pub pearson: Vec<Pearson>,
}

#[derive(Deserialize)]
pub struct Paired {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub alternative: Alternative,
    pub statistic: f64,
    pub p_value: f64,
    pub df: f64,
}

#[derive(Deserialize)]
pub struct Expected {
    pub statistic: f64,
    pub p_value: f64,
    pub df: f64,
}

#[derive(Deserialize)]
pub struct TwoSample {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub alternative: Alternative,
    pub pooled: Expected,
    pub welch: Expected,
}

#[derive(Deserialize)]
pub struct Ks {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub statistic: f64,
    pub p_value: f64,
}

#[derive(Deserialize)]
pub struct Pearson {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub r: f64,
    pub p_value: f64,
}

pub fn corpus() -> Corpus {
    serde_json::from_str(include_str!("../fixtures/stats_reference.json")).unwrap()
}

