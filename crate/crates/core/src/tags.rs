//! Argument boundary tags.
//!
//! For each predicate the argument window is the smallest contiguous span
//! holding the predicate and all of its arguments. `<BOA>` is written on the
//! token just before the window and `<EOA>` on the token just after it; a
//! window touching a sentence edge gets no tag on that side.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::conll::PredicateInstance;
use crate::error::{Error, Result};

pub const NULL_LABEL: &str = "_";
pub const BOA: &str = "<BOA>";
pub const EOA: &str = "<EOA>";

/// True for labels that denote an actual argument.
pub fn is_argument(label: &str) -> bool {
    label != NULL_LABEL && label != BOA && label != EOA
}

pub fn is_boundary(label: &str) -> bool {
    label == BOA || label == EOA
}

/// Ordered label inventory. `_`, `<BOA>` and `<EOA>` always occupy indices
/// 0, 1 and 2; argument labels follow in sorted order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct LabelSet {
    labels: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl LabelSet {
    pub const NULL: usize = 0;
    pub const BOA: usize = 1;
    pub const EOA: usize = 2;

    /// Builds the closure of `observed` plus the three reserved labels.
    pub fn from_labels<I, S>(observed: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut args: Vec<String> = observed
            .into_iter()
            .filter(|l| is_argument(l.as_ref()))
            .map(|l| l.as_ref().to_string())
            .collect();
        args.sort();
        args.dedup();
        let labels: Vec<String> = [NULL_LABEL, BOA, EOA]
            .iter()
            .map(|s| s.to_string())
            .chain(args)
            .collect();
        let index = labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
        LabelSet { labels, index }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Argument labels only.
    pub fn arguments(&self) -> &[String] {
        &self.labels[3..]
    }

    pub fn contains(&self, label: &str) -> bool {
        self.index.contains_key(label)
    }

    pub fn encode(&self, labels: &[String]) -> Result<Vec<usize>> {
        labels
            .iter()
            .map(|l| {
                self.index_of(l)
                    .ok_or_else(|| Error::Labels(format!("label {} not in inventory", l)))
            })
            .collect()
    }
}

impl TryFrom<Vec<String>> for LabelSet {
    type Error = Error;

    fn try_from(labels: Vec<String>) -> Result<Self> {
        if labels.len() < 3 || labels[0] != NULL_LABEL || labels[1] != BOA || labels[2] != EOA {
            return Err(Error::Labels("label list must start with _, <BOA>, <EOA>".into()));
        }
        let set = LabelSet::from_labels(&labels[3..]);
        if set.labels != labels {
            return Err(Error::Labels("argument labels must be sorted and unique".into()));
        }
        Ok(set)
    }
}

impl From<LabelSet> for Vec<String> {
    fn from(set: LabelSet) -> Self {
        set.labels
    }
}

/// Inclusive span `[min, max]` over the predicate and every argument.
pub fn argument_window(labels: &[String], predicate: usize) -> (usize, usize) {
    let mut lo = predicate;
    let mut hi = predicate;
    for (i, l) in labels.iter().enumerate() {
        if is_argument(l) {
            lo = lo.min(i);
            hi = hi.max(i);
        }
    }
    (lo, hi)
}

/// The argument window widened by one token on each side, clipped to the
/// sentence. For an augmented instance these are the tag positions.
pub fn tagged_span(labels: &[String], predicate: usize) -> (usize, usize) {
    let (lo, hi) = argument_window(labels, predicate);
    (lo.saturating_sub(1), (hi + 1).min(labels.len() - 1))
}

/// Inserts `<BOA>`/`<EOA>` around the argument window.
pub fn augment_labels(instance: &PredicateInstance) -> Result<PredicateInstance> {
    if instance.gold_labels.iter().any(|l| is_boundary(l)) {
        return Err(Error::Labels(format!(
            "instance for predicate {} of sentence {} is already augmented",
            instance.predicate_index, instance.sentence_id
        )));
    }
    let mut out = instance.clone();
    let n = out.gold_labels.len();
    let (lo, hi) = argument_window(&out.gold_labels, out.predicate_index);
    if lo > 0 {
        debug_assert_eq!(out.gold_labels[lo - 1], NULL_LABEL);
        out.gold_labels[lo - 1] = BOA.to_string();
    }
    if hi + 1 < n {
        debug_assert_eq!(out.gold_labels[hi + 1], NULL_LABEL);
        out.gold_labels[hi + 1] = EOA.to_string();
    }
    Ok(out)
}

/// Replaces every boundary tag with `_`.
pub fn strip_tags(instance: &PredicateInstance) -> PredicateInstance {
    let mut out = instance.clone();
    strip_label_tags(&mut out.gold_labels);
    out
}

pub fn strip_label_tags(labels: &mut [String]) {
    for l in labels.iter_mut() {
        if is_boundary(l) {
            *l = NULL_LABEL.to_string();
        }
    }
}

/// Which positions [`compute_label_stats`] counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatsScope {
    FullSequence,
    WindowOnly,
}

impl StatsScope {
    pub fn name(self) -> &'static str {
        match self {
            StatsScope::FullSequence => "full_sequence",
            StatsScope::WindowOnly => "window_only",
        }
    }
}

impl std::str::FromStr for StatsScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full_sequence" | "full" => Ok(StatsScope::FullSequence),
            "window_only" | "window" => Ok(StatsScope::WindowOnly),
            other => Err(Error::Config(format!("unknown scope {}", other))),
        }
    }
}

/// Argument / non-argument label proportions.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelStats {
    pub scope: StatsScope,
    pub args: usize,
    pub nonargs: usize,
    pub arg_fraction: f64,
    pub nonarg_fraction: f64,
}

impl LabelStats {
    /// `1:x` with x = non-arguments per argument.
    pub fn ratio_string(&self) -> String {
        if self.args == 0 {
            return "1:inf".to_string();
        }
        let x = self.nonargs as f64 / self.args as f64;
        if x >= 10.0 {
            format!("1:{:.0}", x)
        } else {
            format!("1:{:.1}", x)
        }
    }

    /// Machine-readable `key=value` lines.
    pub fn key_values(&self) -> String {
        let s = self.scope.name();
        format!(
            "{s}.args={}\n{s}.nonargs={}\n{s}.arg_pct={:.2}\n{s}.nonarg_pct={:.2}\n{s}.ratio={}\n",
            self.args,
            self.nonargs,
            100.0 * self.arg_fraction,
            100.0 * self.nonarg_fraction,
            self.ratio_string()
        )
    }
}

impl fmt::Display for LabelStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<14} {:>8.2} {:>8.2} {:>8}",
            self.scope.name(),
            100.0 * self.arg_fraction,
            100.0 * self.nonarg_fraction,
            self.ratio_string()
        )
    }
}

/// Counts argument vs non-argument labels. `WindowOnly` restricts counting
/// to the tagged span of each instance, tags included as non-arguments.
pub fn compute_label_stats(instances: &[PredicateInstance], scope: StatsScope) -> Result<LabelStats> {
    if instances.is_empty() {
        return Err(Error::Invalid("label statistics over zero instances".into()));
    }
    let mut args = 0usize;
    let mut total = 0usize;
    for inst in instances {
        let labels = &inst.gold_labels;
        let (lo, hi) = match scope {
            StatsScope::FullSequence => (0, labels.len() - 1),
            StatsScope::WindowOnly => tagged_span(labels, inst.predicate_index),
        };
        args += labels[lo..=hi].iter().filter(|l| is_argument(l)).count();
        total += hi - lo + 1;
    }
    let nonargs = total - args;
    let arg_fraction = args as f64 / total as f64;
    Ok(LabelStats {
        scope,
        args,
        nonargs,
        arg_fraction,
        nonarg_fraction: 1.0 - arg_fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conll::tests::drops_instance;

    fn labels(s: &[&str]) -> Vec<String> {
        s.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn augment_drops_example() {
        let inst = drops_instance();
        let aug = augment_labels(&inst).unwrap();
        assert_eq!(aug.gold_labels, labels(&["_", "<BOA>", "A1", "_", "A3", "<EOA>", "_"]));
        assert_eq!(strip_tags(&aug), inst);
    }

    #[test]
    fn augment_twice_fails() {
        let aug = augment_labels(&drops_instance()).unwrap();
        assert!(matches!(augment_labels(&aug), Err(Error::Labels(_))));
    }

    #[test]
    fn zero_arguments_hug_predicate() {
        let mut inst = drops_instance();
        inst.gold_labels = labels(&["_"; 5]);
        inst.predicate_index = 2;
        let aug = augment_labels(&inst).unwrap();
        assert_eq!(aug.gold_labels, labels(&["_", "<BOA>", "_", "<EOA>", "_"]));
    }

    #[test]
    fn edge_argument_clips_boa() {
        let mut inst = drops_instance();
        inst.gold_labels = labels(&["A0", "_", "_", "_", "_"]);
        inst.predicate_index = 2;
        let aug = augment_labels(&inst).unwrap();
        assert_eq!(aug.gold_labels, labels(&["A0", "_", "_", "<EOA>", "_"]));
    }

    #[test]
    fn strip_without_tags_is_identity() {
        let inst = drops_instance();
        assert_eq!(strip_tags(&inst), inst);
    }

    #[test]
    fn window_stats_on_example() {
        let aug = augment_labels(&drops_instance()).unwrap();
        let w = compute_label_stats(std::slice::from_ref(&aug), StatsScope::WindowOnly).unwrap();
        assert_eq!((w.args, w.nonargs), (2, 3));
        assert!((w.arg_fraction - 0.4).abs() < 1e-12);
        let f = compute_label_stats(&[aug], StatsScope::FullSequence).unwrap();
        assert_eq!((f.args, f.nonargs), (2, 5));
        assert!(w.arg_fraction > f.arg_fraction);
    }

    #[test]
    fn stats_need_instances() {
        assert!(compute_label_stats(&[], StatsScope::FullSequence).is_err());
    }

    #[test]
    fn ratio_strings() {
        let mk = |args, nonargs| LabelStats {
            scope: StatsScope::FullSequence,
            args,
            nonargs,
            arg_fraction: 0.0,
            nonarg_fraction: 0.0,
        };
        assert_eq!(mk(4381, 5619).ratio_string(), "1:1.3");
        assert_eq!(mk(735, 9265).ratio_string(), "1:13");
    }

    #[test]
    fn label_set_reserved_first() {
        let set = LabelSet::from_labels(["A1", "_", "A0", "A1", "<BOA>"]);
        assert_eq!(set.labels(), &labels(&["_", "<BOA>", "<EOA>", "A0", "A1"]));
        assert_eq!(set.index_of("A0"), Some(3));
        assert_eq!(set.arguments(), &labels(&["A0", "A1"]));
        let json = serde_json::to_string(&set).unwrap();
        let back: LabelSet = serde_json::from_str(&json).unwrap();
        assert_eq!(back, set);
        assert!(serde_json::from_str::<LabelSet>(r#"["A0","_","<BOA>","<EOA>"]"#).is_err());
    }
}
