//! Reading and writing CoNLL-2009 style tabular corpora.
//!
//! One token per line, whitespace separated columns, blank line between
//! sentences. Which column holds which field is set by [`FormatConfig`], so
//! the full CoNLL-2009 layout and a compact `form lemma pos pred apred...`
//! layout are handled by the same code.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::tags::{LabelSet, NULL_LABEL};

pub const DEFAULT_MAX_LEN: usize = 200;

/// Column roles of a tabular corpus (0-based indices).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormatConfig {
    /// Token number column, rewritten as 1-based positions on output.
    pub id: Option<usize>,
    pub form: usize,
    pub lemma: usize,
    pub pos: usize,
    /// Column holding `Y` for predicates.
    pub fillpred: Option<usize>,
    /// Predicate sense column; kept verbatim.
    pub sense: Option<usize>,
    /// First argument column; every column from here on is one predicate.
    pub apred: usize,
    pub max_len: usize,
}

impl FormatConfig {
    /// `ID FORM LEMMA PLEMMA POS PPOS FEAT PFEAT HEAD PHEAD DEPREL PDEPREL FILLPRED PRED APRED...`
    pub fn conll2009() -> Self {
        FormatConfig {
            id: Some(0),
            form: 1,
            lemma: 2,
            pos: 4,
            fillpred: Some(12),
            sense: Some(13),
            apred: 14,
            max_len: DEFAULT_MAX_LEN,
        }
    }

    /// `FORM LEMMA POS PRED APRED...`; a token is a predicate when PRED is
    /// not `_`.
    pub fn simple() -> Self {
        FormatConfig {
            id: None,
            form: 0,
            lemma: 1,
            pos: 2,
            fillpred: None,
            sense: Some(3),
            apred: 4,
            max_len: DEFAULT_MAX_LEN,
        }
    }

    /// Parses `key=index` lines, starting from the simple layout. Keys:
    /// `id form lemma pos fillpred sense apred max_len`; `none` unsets an
    /// optional column.
    pub fn parse_mapping(text: &str) -> Result<Self> {
        let mut cfg = FormatConfig::simple();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |m: String| Error::Parse {
                line: lineno + 1,
                message: m,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=index, got {:?}", line)))?;
            let value = value.trim();
            let optional = || -> Result<Option<usize>> {
                if value == "none" {
                    Ok(None)
                } else {
                    value
                        .parse()
                        .map(Some)
                        .map_err(|_| err(format!("bad column index {:?}", value)))
                }
            };
            let required = || -> Result<usize> {
                value
                    .parse()
                    .map_err(|_| err(format!("bad column index {:?}", value)))
            };
            match key.trim() {
                "id" => cfg.id = optional()?,
                "form" => cfg.form = required()?,
                "lemma" => cfg.lemma = required()?,
                "pos" => cfg.pos = required()?,
                "fillpred" => cfg.fillpred = optional()?,
                "sense" | "pred" => cfg.sense = optional()?,
                "apred" => cfg.apred = required()?,
                "max_len" => cfg.max_len = required()?,
                other => return Err(err(format!("unknown column role {:?}", other))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_name_or_file(spec: &str) -> Result<Self> {
        let mut cfg = match spec {
            "simple" => FormatConfig::simple(),
            "conll2009" | "conll09" => FormatConfig::conll2009(),
            path => FormatConfig::parse_mapping(&std::fs::read_to_string(path)?)?,
        };
        cfg.validate()?;
        if cfg.max_len == 0 {
            cfg.max_len = DEFAULT_MAX_LEN;
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.fillpred.is_none() && self.sense.is_none() {
            return Err(Error::Config("either fillpred or sense column is required".into()));
        }
        let mut fixed = vec![self.form, self.lemma, self.pos];
        fixed.extend(self.id);
        fixed.extend(self.fillpred);
        fixed.extend(self.sense);
        if fixed.iter().any(|&c| c >= self.apred) {
            return Err(Error::Config("all fixed columns must precede the apred columns".into()));
        }
        let mut sorted = fixed.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != fixed.len() {
            return Err(Error::Config("two column roles share an index".into()));
        }
        if self.max_len == 0 {
            return Err(Error::Config("max_len must be positive".into()));
        }
        Ok(())
    }
}

impl Default for FormatConfig {
    fn default() -> Self {
        FormatConfig::simple()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub form: String,
    pub lemma: String,
    pub pos: String,
    pub is_predicate: bool,
    /// Predicate sense, `_` for non-predicates. Never interpreted.
    pub sense: String,
    /// One label per predicate of the sentence, `_` for no relation.
    pub arg_labels: Vec<String>,
    /// Columns with no role, by index, written back unchanged.
    pub extra: BTreeMap<usize, String>,
}

impl Token {
    pub fn new(form: &str, lemma: &str, pos: &str) -> Self {
        Token {
            form: form.to_string(),
            lemma: lemma.to_string(),
            pos: pos.to_string(),
            is_predicate: false,
            sense: NULL_LABEL.to_string(),
            arg_labels: Vec::new(),
            extra: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<Token>,
    pub predicate_indices: Vec<usize>,
}

impl Sentence {
    /// Builds a sentence, deriving predicate indices from the token flags and
    /// checking that every token has one label per predicate.
    pub fn new(tokens: Vec<Token>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::Structure("empty sentence".into()));
        }
        let predicate_indices: Vec<usize> = tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| t.is_predicate)
            .map(|(i, _)| i)
            .collect();
        for (i, t) in tokens.iter().enumerate() {
            if t.arg_labels.len() != predicate_indices.len() {
                return Err(Error::Structure(format!(
                    "token {} has {} argument columns for {} predicates",
                    i + 1,
                    t.arg_labels.len(),
                    predicate_indices.len()
                )));
            }
            if t.form.is_empty() || t.lemma.is_empty() || t.pos.is_empty() {
                return Err(Error::Structure(format!("token {} has an empty field", i + 1)));
            }
        }
        Ok(Sentence {
            tokens,
            predicate_indices,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Labels of predicate column `frame` for every token.
    pub fn frame_labels(&self, frame: usize) -> Vec<String> {
        self.tokens.iter().map(|t| t.arg_labels[frame].clone()).collect()
    }

    pub fn set_frame_labels(&mut self, frame: usize, labels: &[String]) {
        for (t, l) in self.tokens.iter_mut().zip(labels) {
            t.arg_labels[frame] = l.clone();
        }
    }
}

/// One (sentence, predicate) labeling problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateInstance {
    pub sentence_id: usize,
    pub sentence: Arc<Sentence>,
    /// Position of the predicate's column among the sentence's predicates.
    pub frame: usize,
    pub predicate_index: usize,
    pub gold_labels: Vec<String>,
}

impl PredicateInstance {
    pub fn len(&self) -> usize {
        self.gold_labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gold_labels.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub sentences: Vec<Sentence>,
    pub label_inventory: LabelSet,
}

impl Corpus {
    pub fn new(sentences: Vec<Sentence>) -> Self {
        let label_inventory = LabelSet::from_labels(
            sentences
                .iter()
                .flat_map(|s| s.tokens.iter())
                .flat_map(|t| t.arg_labels.iter()),
        );
        Corpus {
            sentences,
            label_inventory,
        }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn predicate_count(&self) -> usize {
        self.sentences.iter().map(|s| s.predicate_indices.len()).sum()
    }

    pub fn from_path(path: &Path, format: &FormatConfig) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        parse_corpus(std::io::BufReader::new(file), format)
    }
}

fn parse_sentence(
    rows: &[(usize, Vec<String>)],
    format: &FormatConfig,
) -> Result<Sentence> {
    let first_line = rows[0].0;
    if rows.len() > format.max_len {
        return Err(Error::Parse {
            line: first_line,
            message: format!(
                "sentence has {} tokens, more than the maximum of {}",
                rows.len(),
                format.max_len
            ),
        });
    }
    let width = rows[0].1.len();
    let mut tokens = Vec::with_capacity(rows.len());
    for (line, cols) in rows {
        if cols.len() != width {
            return Err(Error::Parse {
                line: *line,
                message: format!("expected {} columns, found {}", width, cols.len()),
            });
        }
        if cols.len() < format.apred {
            return Err(Error::Parse {
                line: *line,
                message: format!("expected at least {} columns, found {}", format.apred, cols.len()),
            });
        }
        let is_predicate = match (format.fillpred, format.sense) {
            (Some(c), _) => cols[c] == "Y",
            (None, Some(c)) => cols[c] != NULL_LABEL,
            (None, None) => false,
        };
        let mut extra = BTreeMap::new();
        for (i, value) in cols[..format.apred].iter().enumerate() {
            let mapped = i == format.form
                || i == format.lemma
                || i == format.pos
                || Some(i) == format.id
                || Some(i) == format.fillpred
                || Some(i) == format.sense;
            if !mapped && value != NULL_LABEL {
                extra.insert(i, value.clone());
            }
        }
        tokens.push(Token {
            form: cols[format.form].clone(),
            lemma: cols[format.lemma].clone(),
            pos: cols[format.pos].clone(),
            is_predicate,
            sense: format
                .sense
                .map_or_else(|| NULL_LABEL.to_string(), |c| cols[c].clone()),
            arg_labels: cols[format.apred..].to_vec(),
            extra,
        });
    }
    let predicates = tokens.iter().filter(|t| t.is_predicate).count();
    let apreds = width - format.apred;
    if predicates != apreds {
        return Err(Error::Structure(format!(
            "sentence starting at line {}: {} predicates but {} argument columns",
            first_line, predicates, apreds
        )));
    }
    Sentence::new(tokens)
}

/// Parses a whole corpus. Empty input yields an empty corpus.
pub fn parse_corpus<R: BufRead>(input: R, format: &FormatConfig) -> Result<Corpus> {
    format.validate()?;
    let mut sentences = Vec::new();
    let mut rows: Vec<(usize, Vec<String>)> = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            if !rows.is_empty() {
                sentences.push(parse_sentence(&rows, format)?);
                rows.clear();
            }
            continue;
        }
        rows.push((i + 1, trimmed.split_whitespace().map(str::to_string).collect()));
    }
    if !rows.is_empty() {
        sentences.push(parse_sentence(&rows, format)?);
    }
    Ok(Corpus::new(sentences))
}

pub fn parse_str(text: &str, format: &FormatConfig) -> Result<Corpus> {
    parse_corpus(text.as_bytes(), format)
}

/// Tab-separated output, one blank line after every sentence.
pub fn serialize_corpus(corpus: &Corpus, format: &FormatConfig) -> String {
    let mut out = String::new();
    for sentence in &corpus.sentences {
        for (i, token) in sentence.tokens.iter().enumerate() {
            let mut cols = vec![NULL_LABEL.to_string(); format.apred];
            for (&c, v) in &token.extra {
                if c < cols.len() {
                    cols[c] = v.clone();
                }
            }
            if let Some(c) = format.id {
                cols[c] = (i + 1).to_string();
            }
            cols[format.form] = token.form.clone();
            cols[format.lemma] = token.lemma.clone();
            cols[format.pos] = token.pos.clone();
            if let Some(c) = format.fillpred {
                cols[c] = if token.is_predicate { "Y" } else { NULL_LABEL }.to_string();
            }
            if let Some(c) = format.sense {
                cols[c] = if token.is_predicate && token.sense == NULL_LABEL && format.fillpred.is_none() {
                    // A sense column is the only predicate marker here.
                    format!("{}.01", token.lemma)
                } else {
                    token.sense.clone()
                };
            }
            cols.extend(token.arg_labels.iter().cloned());
            let _ = writeln!(out, "{}", cols.join("\t"));
        }
        out.push('\n');
    }
    out
}

/// One instance per (sentence, predicate), in corpus order.
pub fn extract_instances(corpus: &Corpus) -> Vec<PredicateInstance> {
    let mut out = Vec::with_capacity(corpus.predicate_count());
    for (sid, sentence) in corpus.sentences.iter().enumerate() {
        if sentence.predicate_indices.is_empty() {
            continue;
        }
        let shared = Arc::new(sentence.clone());
        for (frame, &p) in sentence.predicate_indices.iter().enumerate() {
            out.push(PredicateInstance {
                sentence_id: sid,
                sentence: Arc::clone(&shared),
                frame,
                predicate_index: p,
                gold_labels: sentence.frame_labels(frame),
            });
        }
    }
    out
}
