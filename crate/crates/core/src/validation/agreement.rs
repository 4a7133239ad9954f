use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use super::JudgeVerdict;
use crate::corpus::BloomLevel;

const K: usize = BloomLevel::ALL.len();

/// Cohen's kappa, or `NotDefined` when chance agreement is 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kappa {
    Value(f64),
    NotDefined,
}

impl Kappa {
    pub fn value(self) -> Option<f64> {
        match self {
            Kappa::Value(v) => Some(v),
            Kappa::NotDefined => None,
        }
    }
}

impl Serialize for Kappa {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Kappa::Value(v) => s.serialize_f64(*v),
            Kappa::NotDefined => s.serialize_str("NotDefined"),
        }
    }
}

impl<'de> Deserialize<'de> for Kappa {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Kappa::Value(v)),
            Raw::Text(t) if t == "NotDefined" => Ok(Kappa::NotDefined),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("bad kappa {t:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    /// Rows are source levels, columns judged levels, both in Bloom order.
    pub confusion: [[u64; K]; K],
    pub accuracy: f64,
    pub kappa: Kappa,
    pub n: u64,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum AgreementError {
    #[error("no verdicts to summarise")]
    EmptyVerdictSet,
}

pub fn agreement_report(verdicts: &[JudgeVerdict]) -> Result<AgreementReport, AgreementError> {
    let mut confusion = [[0u64; K]; K];
    for v in verdicts {
        confusion[v.source_bloom.index()][v.judged_bloom.index()] += 1;
    }
    agreement_from_confusion(confusion)
}

/// Accuracy and unweighted kappa with marginal-product chance agreement.
/// Computed in integers as (n·trace − Σ rᵢcᵢ) / (n² − Σ rᵢcᵢ).
pub fn agreement_from_confusion(confusion: [[u64; K]; K]) -> Result<AgreementReport, AgreementError> {
    let n: u64 = confusion.iter().flatten().sum();
    if n == 0 {
        return Err(AgreementError::EmptyVerdictSet);
    }
    let trace: u64 = (0..K).map(|i| confusion[i][i]).sum();
    let rows: Vec<u128> = (0..K).map(|i| confusion[i].iter().map(|&c| c as u128).sum()).collect();
    let cols: Vec<u128> = (0..K).map(|j| (0..K).map(|i| confusion[i][j] as u128).sum()).collect();
    let chance: u128 = rows.iter().zip(&cols).map(|(r, c)| r * c).sum();
    let n2 = (n as u128) * (n as u128);
    let kappa = if chance == n2 {
        Kappa::NotDefined
    } else {
        let num = (n as u128 * trace as u128) as f64 - chance as f64;
        Kappa::Value(num / (n2 - chance) as f64)
    };
    Ok(AgreementReport {
        confusion,
        accuracy: trace as f64 / n as f64,
        kappa,
        n,
    })
}
