//! Labeled argument precision, recall and F1.
//!
//! A prediction is correct when its (predicate, token, label) triple matches
//! a gold triple. Predicate senses are not scored, so these numbers are
//! argument-only F1.

use std::fmt;

use crate::decoder::ArgumentSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub predicted: usize,
    pub gold: usize,
    pub correct: usize,
}

impl EvalReport {
    /// Ratios from counts. 0/0 is 0, except that an empty prediction against
    /// an empty gold scores 1 everywhere.
    pub fn from_counts(predicted: usize, gold: usize, correct: usize) -> Self {
        if predicted == 0 && gold == 0 {
            return EvalReport {
                precision: 1.0,
                recall: 1.0,
                f1: 1.0,
                predicted,
                gold,
                correct,
            };
        }
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(correct, predicted);
        let recall = ratio(correct, gold);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        EvalReport {
            precision,
            recall,
            f1,
            predicted,
            gold,
            correct,
        }
    }

    pub fn key_values(&self) -> String {
        format!(
            "precision={:.6}\nrecall={:.6}\nf1={:.6}\npredicted={}\ngold={}\ncorrect={}\n",
            self.precision, self.recall, self.f1, self.predicted, self.gold, self.correct
        )
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<10} {:>9} {:>9} {:>9}", "", "P", "R", "F1")?;
        writeln!(
            f,
            "{:<10} {:>9.3} {:>9.3} {:>9.3}",
            "args",
            self.precision,
            self.recall,
            self.f1
        )?;
        write!(
            f,
            "predicted={} gold={} correct={}",
            self.predicted, self.gold, self.correct
        )
    }
}

/// Scores aligned lists of argument sets.
pub fn evaluate(pred: &[ArgumentSet], gold: &[ArgumentSet]) -> Result<EvalReport> {
    if pred.len() != gold.len() {
        return Err(Error::Invalid(format!(
            "{} predicted instances vs {} gold instances",
            pred.len(),
            gold.len()
        )));
    }
    let mut predicted = 0;
    let mut total_gold = 0;
    let mut correct = 0;
    for (p, g) in pred.iter().zip(gold) {
        if (p.sentence_id, p.predicate_index) != (g.sentence_id, g.predicate_index) {
            return Err(Error::Invalid(format!(
                "instance mismatch: predicted ({}, {}) vs gold ({}, {})",
                p.sentence_id, p.predicate_index, g.sentence_id, g.predicate_index
            )));
        }
        predicted += p.len();
        total_gold += g.len();
        correct += p
            .args
            .iter()
            .filter(|(i, l)| g.args.get(i) == Some(l))
            .count();
    }
    Ok(EvalReport::from_counts(predicted, total_gold, correct))
}
