use serde::{Deserialize, Serialize};

use crate::{Error, Result, Stance};

/// Confusion counts with +1 as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub confusion: Confusion,
    /// FN / (FN + TP); 0 when there are no positive gold labels.
    pub false_negative_rate: f64,
    /// FP / (FP + TN); 0 when there are no negative gold labels.
    pub false_positive_rate: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn evaluate(predictions: &[Stance], gold: &[Stance]) -> Result<EvalReport> {
    if predictions.len() != gold.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} gold labels",
            predictions.len(),
            gold.len()
        )));
    }
    if gold.is_empty() {
        return Err(Error::invalid("nothing to evaluate"));
    }
    let mut c = Confusion::default();
    for (&p, &g) in predictions.iter().zip(gold) {
        match (p, g) {
            (Stance::Positive, Stance::Positive) => c.tp += 1,
            (Stance::Positive, Stance::Negative) => c.fp += 1,
            (Stance::Negative, Stance::Positive) => c.fn_ += 1,
            (Stance::Negative, Stance::Negative) => c.tn += 1,
        }
    }
    Ok(EvalReport {
        accuracy: ratio(c.tp + c.tn, c.total()),
        confusion: c,
        false_negative_rate: ratio(c.fn_, c.fn_ + c.tp),
        false_positive_rate: ratio(c.fp, c.fp + c.tn),
    })
}

/// One row of the accuracy table, e.g. `Unigram SVM 86.6% / 74.6%`.
pub fn format_table_row(method: &str, validation: f64, test: Option<f64>) -> String {
    let test = test.map_or_else(|| "n/a".to_string(), |t| format!("{:.1}%", 100.0 * t));
    format!("{method} {:.1}% / {test}", 100.0 * validation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Stance::{Negative as N, Positive as P};

    #[test]
    fn direct_counting() {
        let r = evaluate(&[P, N, P, P], &[P, N, N, P]).unwrap();
        assert_eq!(r.accuracy, 0.75);
        assert_eq!(r.false_negative_rate, 0.0);
        assert_eq!(r.false_positive_rate, 0.5);
        assert_eq!(r.confusion, Confusion { tp: 2, fp: 1, fn_: 0, tn: 1 });
    }

    #[test]
    fn perfect() {
        let r = evaluate(&[P, N, N], &[P, N, N]).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!((r.confusion.fp, r.confusion.fn_), (0, 0));
    }

    #[test]
    fn mismatch_and_empty() {
        assert!(evaluate(&[P], &[P, N]).is_err());
        assert!(evaluate(&[], &[]).is_err());
    }

    #[test]
    fn row_format() {
        assert_eq!(format_table_row("Unigram SVM", 0.866, Some(0.746)), "Unigram SVM 86.6% / 74.6%");
        assert_eq!(format_table_row("Tokenizer RNN", 0.887, None), "Tokenizer RNN 88.7% / n/a");
    }
}
