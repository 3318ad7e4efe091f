//! Seeded synthetic corpora with local predicate-argument structure.
//!
//! Every argument lies within `window` tokens of its predicate and is owned
//! by its nearest predicate. Arguments are always noun tokens whose word
//! determines the label; label choice leans towards the first half of the
//! alphabet left of the predicate and the second half to the right. Other
//! tokens inside a predicate's window are function words, so argumenthood
//! is learnable from the sentence alone.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use crate::conll::{Corpus, Sentence, Token};
use crate::error::{Error, Result};
use crate::numerics::rng::{derive_rng, SeedRng};
use crate::tags::{is_argument, NULL_LABEL};

const FILLER_POS: [&str; 4] = ["DT", "IN", "JJ", "RB"];

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub sentences: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub min_predicates: usize,
    pub max_predicates: usize,
    pub min_args: usize,
    pub max_args: usize,
    /// Maximum distance between a predicate and its arguments.
    pub window: usize,
    /// Distinct stems per word class (nouns, verbs, function words).
    pub vocab_size: usize,
    pub labels: Vec<String>,
    /// Probability that an argument's label comes from its side's half.
    pub position_bias: f64,
    /// Probability that a token outside every window is a noun.
    pub distractor_rate: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            sentences: 100,
            min_len: 6,
            max_len: 16,
            min_predicates: 1,
            max_predicates: 2,
            min_args: 1,
            max_args: 3,
            window: 3,
            vocab_size: 12,
            labels: ["A0", "A1", "A2", "AM-TMP"].iter().map(|s| s.to_string()).collect(),
            position_bias: 0.8,
            distractor_rate: 0.3,
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if self.min_len == 0 || self.min_len > self.max_len {
            return bad("length range must satisfy 1 <= min_len <= max_len");
        }
        if self.min_predicates > self.max_predicates || self.max_predicates > self.min_len {
            return bad("predicate range must satisfy min <= max <= min_len");
        }
        if self.min_args > self.max_args {
            return bad("argument range must satisfy min <= max");
        }
        if self.max_args > 2 * self.window {
            return Err(Error::Config(format!(
                "{} arguments cannot fit in the {} slots around a predicate with window {}",
                self.max_args,
                2 * self.window,
                self.window
            )));
        }
        if self.labels.is_empty() || self.labels.iter().any(|l| !is_argument(l) || l.split_whitespace().count() != 1) {
            return bad("labels must be non-empty, whitespace-free and not reserved");
        }
        if self.vocab_size < self.labels.len() {
            return bad("vocab_size must be at least the number of labels");
        }
        if !(0.0..=1.0).contains(&self.position_bias) || !(0.0..=1.0).contains(&self.distractor_rate) {
            return bad("probabilities must lie in [0, 1]");
        }
        Ok(())
    }

    /// Expected argument share of all labeled positions, from the sampling
    /// distribution itself. Only defined for one predicate per sentence.
    pub fn expected_arg_fraction(&self) -> Option<f64> {
        if self.max_predicates != 1 || self.min_predicates != 1 {
            return None;
        }
        let mut args = 0.0;
        let mut positions = 0.0;
        let lens = self.max_len - self.min_len + 1;
        let counts = self.max_args - self.min_args + 1;
        for n in self.min_len..=self.max_len {
            let mut per_len = 0.0;
            for pos in 0..n {
                let slots = pos.min(self.window) + (n - 1 - pos).min(self.window);
                let mean: f64 = (self.min_args..=self.max_args).map(|a| a.min(slots) as f64).sum::<f64>() / counts as f64;
                per_len += mean / n as f64;
            }
            args += per_len / lens as f64;
            positions += n as f64 / lens as f64;
        }
        Some(args / positions)
    }
}

struct Lexicon<'a> {
    config: &'a GenConfig,
}

impl Lexicon<'_> {
    fn noun(&self, label: usize, rng: &mut SeedRng) -> Token {
        let classes = self.config.labels.len();
        let per_class = self.config.vocab_size.div_ceil(classes);
        let stem = loop {
            let k = rng.random_range(0..per_class) * classes + label;
            if k < self.config.vocab_size {
                break k;
            }
        };
        let plural = rng.random_bool(0.5);
        let lemma = format!("nom{}", stem);
        let form = if plural { format!("{}s", lemma) } else { lemma.clone() };
        Token::new(&form, &lemma, if plural { "NNS" } else { "NN" })
    }

    fn verb(&self, rng: &mut SeedRng) -> Token {
        let lemma = format!("vrb{}", rng.random_range(0..self.config.vocab_size));
        let (suffix, pos) = *[("", "VB"), ("s", "VBZ"), ("ed", "VBD")].choose(rng).expect("non-empty");
        let mut t = Token::new(&format!("{}{}", lemma, suffix), &lemma, pos);
        t.is_predicate = true;
        t.sense = format!("{}.01", lemma);
        t
    }

    fn filler(&self, rng: &mut SeedRng) -> Token {
        let stem = rng.random_range(0..self.config.vocab_size);
        let form = format!("fil{}", stem);
        Token::new(&form, &form, FILLER_POS[stem % FILLER_POS.len()])
    }
}

fn generate_sentence(config: &GenConfig, rng: &mut SeedRng) -> Result<Sentence> {
    let lex = Lexicon { config };
    let n = rng.random_range(config.min_len..=config.max_len);
    let p = rng.random_range(config.min_predicates..=config.max_predicates);
    let mut predicates: Vec<usize> = (0..n).collect::<Vec<_>>().choose_multiple(rng, p).copied().collect();
    predicates.sort_unstable();

    // Nearest predicate (ties to the left) and its distance.
    let owner: Vec<Option<(usize, usize)>> = (0..n)
        .map(|j| {
            predicates
                .iter()
                .enumerate()
                .map(|(k, &q)| (j.abs_diff(q), k))
                .min()
                .map(|(dist, k)| (k, dist))
        })
        .collect();

    let half = config.labels.len().div_ceil(2);
    let mut frames = vec![vec![NULL_LABEL.to_string(); n]; p];
    let mut arg_label: Vec<Option<usize>> = vec![None; n];
    for (k, &q) in predicates.iter().enumerate() {
        let mut candidates: Vec<usize> = (0..n)
            .filter(|&j| j != q && !predicates.contains(&j))
            .filter(|&j| matches!(owner[j], Some((o, d)) if o == k && d <= config.window))
            .collect();
        candidates.shuffle(rng);
        let wanted = rng.random_range(config.min_args..=config.max_args);
        for &j in candidates.iter().take(wanted) {
            let (lo, hi) = if j < q { (0, half) } else { (half.min(config.labels.len() - 1), config.labels.len()) };
            let label = if rng.random_bool(config.position_bias) {
                rng.random_range(lo..hi)
            } else {
                rng.random_range(0..config.labels.len())
            };
            arg_label[j] = Some(label);
            frames[k][j] = config.labels[label].clone();
        }
    }

    let mut tokens = Vec::with_capacity(n);
    for j in 0..n {
        let token = if predicates.contains(&j) {
            lex.verb(rng)
        } else if let Some(label) = arg_label[j] {
            lex.noun(label, rng)
        } else if owner[j].is_none_or(|(_, d)| d > config.window) && rng.random_bool(config.distractor_rate) {
            let label = rng.random_range(0..config.labels.len());
            lex.noun(label, rng)
        } else {
            lex.filler(rng)
        };
        tokens.push(token);
    }
    for (j, token) in tokens.iter_mut().enumerate() {
        token.arg_labels = frames.iter().map(|f| f[j].clone()).collect();
    }
    Sentence::new(tokens)
}

/// Generates `config.sentences` sentences; sentence `i` uses its own stream
/// derived from the seed.
pub fn generate(config: &GenConfig) -> Result<Corpus> {
    config.validate()?;
    let sentences = (0..config.sentences)
        .map(|i| generate_sentence(config, &mut derive_rng(config.seed, &[i as u64])))
        .collect::<Result<Vec<_>>>()?;
    Ok(Corpus::new(sentences))
}
