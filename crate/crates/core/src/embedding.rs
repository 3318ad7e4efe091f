//! Token input vectors.
//!
//! Each token is represented by the concatenation, in this order, of a
//! trainable word embedding, a frozen pretrained word vector, a lemma
//! embedding, a POS embedding, a two-row predicate indicator embedding and,
//! optionally, a precomputed external contextual vector.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::conll::{Corpus, Sentence};
use crate::error::{Error, Result};
use crate::numerics::{BoundParams, ParamId, ParamStore, Tape, Tensor, Var};

pub const UNK: &str = "<unk>";

/// Width of each embedding block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingDims {
    pub word: usize,
    pub pretrained: usize,
    pub lemma: usize,
    pub pos: usize,
    pub indicator: usize,
    /// External vector width; 0 disables the block.
    pub external: usize,
}

impl EmbeddingDims {
    pub fn total(&self) -> usize {
        self.word + self.pretrained + self.lemma + self.pos + self.indicator + self.external
    }
}

impl Default for EmbeddingDims {
    fn default() -> Self {
        EmbeddingDims {
            word: 100,
            pretrained: 100,
            lemma: 100,
            pos: 32,
            indicator: 16,
            external: 0,
        }
    }
}

/// String to row index, row 0 reserved for unknown entries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    items: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    pub fn build<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut items = vec![UNK.to_string()];
        let mut index = HashMap::new();
        index.insert(UNK.to_string(), 0);
        for e in entries {
            let e = e.as_ref();
            if !index.contains_key(e) {
                index.insert(e.to_string(), items.len());
                items.push(e.to_string());
            }
        }
        Vocab { items, index }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Row for `entry`, 0 when unknown.
    pub fn get(&self, entry: &str) -> usize {
        self.index.get(entry).copied().unwrap_or(0)
    }

    pub fn contains(&self, entry: &str) -> bool {
        self.index.contains_key(entry)
    }
}

impl From<Vec<String>> for Vocab {
    fn from(items: Vec<String>) -> Self {
        Vocab::build(items.into_iter().skip(1))
    }
}

impl From<Vocab> for Vec<String> {
    fn from(v: Vocab) -> Self {
        v.items
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabMaps {
    pub words: Vocab,
    pub lemmas: Vocab,
    pub pos: Vocab,
}

impl VocabMaps {
    /// Collects every form, lemma and POS tag of the corpora, in first-seen
    /// order.
    pub fn from_corpora(corpora: &[&Corpus]) -> Self {
        let tokens = || corpora.iter().flat_map(|c| &c.sentences).flat_map(|s| &s.tokens);
        VocabMaps {
            words: Vocab::build(tokens().map(|t| t.form.as_str())),
            lemmas: Vocab::build(tokens().map(|t| t.lemma.as_str())),
            pos: Vocab::build(tokens().map(|t| t.pos.as_str())),
        }
    }
}

/// Pretrained word vectors read from a GloVe-style text file.
#[derive(Debug, Clone, PartialEq)]
pub struct PretrainedVectors {
    pub index: HashMap<String, usize>,
    pub table: Tensor,
}

impl PretrainedVectors {
    pub fn dim(&self) -> usize {
        self.table.cols()
    }

    pub fn empty(dim: usize) -> Self {
        PretrainedVectors {
            index: HashMap::new(),
            table: Tensor::zeros(&[0, dim]),
        }
    }

    /// Vector for `word` (lowercased), `None` if out of vocabulary.
    pub fn lookup(&self, word: &str) -> Option<&[f64]> {
        self.index.get(&word.to_lowercase()).map(|&i| self.table.row(i))
    }
}

/// Reads `word v1 ... v_dim` lines. Later duplicates of a word are ignored.
pub fn load_pretrained<R: BufRead>(input: R, dim: usize) -> Result<PretrainedVectors> {
    let mut index = HashMap::new();
    let mut data = Vec::new();
    let mut rows = 0;
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let mut parts = line.split_whitespace();
        let Some(word) = parts.next() else { continue };
        let values: Vec<f64> = parts
            .map(|p| {
                p.parse::<f64>().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    message: format!("bad vector component {:?}", p),
                })
            })
            .collect::<Result<_>>()?;
        if values.len() != dim {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("expected {} components, found {}", dim, values.len()),
            });
        }
        let key = word.to_lowercase();
        if index.contains_key(&key) {
            continue;
        }
        index.insert(key, rows);
        data.extend(values);
        rows += 1;
    }
    Ok(PretrainedVectors {
        index,
        table: Tensor::new(vec![rows, dim], data)?,
    })
}

/// Precomputed per-token vectors keyed by sentence id.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalVectors {
    dim: usize,
    by_sentence: HashMap<usize, Tensor>,
}

impl ExternalVectors {
    pub fn new(dim: usize) -> Self {
        ExternalVectors {
            dim,
            by_sentence: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn insert(&mut self, sentence_id: usize, vectors: Tensor) -> Result<()> {
        if vectors.rank() != 2 || vectors.cols() != self.dim {
            return Err(Error::Shape(format!(
                "external vectors of shape {:?}, expected width {}",
                vectors.shape(),
                self.dim
            )));
        }
        self.by_sentence.insert(sentence_id, vectors);
        Ok(())
    }

    pub fn get(&self, sentence_id: usize) -> Option<&Tensor> {
        self.by_sentence.get(&sentence_id)
    }

    fn index_path(path: &Path) -> PathBuf {
        let mut p = path.as_os_str().to_owned();
        p.push(".idx");
        PathBuf::from(p)
    }

    /// Writes the binary records `(id u64, tokens u64, tokens*dim f64)` in
    /// ascending id order, little-endian, and a text sidecar `<path>.idx`
    /// with `dim=<d>` followed by `id offset tokens` lines.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut ids: Vec<_> = self.by_sentence.keys().copied().collect();
        ids.sort_unstable();
        let mut data = BufWriter::new(File::create(path)?);
        let mut index = format!("dim={}\n", self.dim);
        let mut offset = 0u64;
        for id in ids {
            let t = &self.by_sentence[&id];
            data.write_all(&(id as u64).to_le_bytes())?;
            data.write_all(&(t.rows() as u64).to_le_bytes())?;
            for v in t.data() {
                data.write_all(&v.to_le_bytes())?;
            }
            index.push_str(&format!("{} {} {}\n", id, offset, t.rows()));
            offset += 16 + 8 * t.len() as u64;
        }
        data.flush()?;
        std::fs::write(Self::index_path(path), index)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let index_text = std::fs::read_to_string(Self::index_path(path))?;
        let mut lines = index_text.lines().enumerate();
        let dim = lines
            .next()
            .and_then(|(_, l)| l.strip_prefix("dim="))
            .and_then(|d| d.trim().parse::<usize>().ok())
            .ok_or_else(|| Error::Parse {
                line: 1,
                message: "external index must start with dim=<n>".into(),
            })?;
        let mut file = BufReader::new(File::open(path)?);
        let mut out = ExternalVectors::new(dim);
        for (lineno, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let err = || Error::Parse {
                line: lineno + 1,
                message: format!("bad index entry {:?}", line),
            };
            let nums: Vec<u64> = line
                .split_whitespace()
                .map(|p| p.parse().map_err(|_| err()))
                .collect::<Result<_>>()?;
            let [id, offset, tokens] = nums[..] else { return Err(err()) };
            file.seek(SeekFrom::Start(offset))?;
            let mut head = [0u8; 16];
            file.read_exact(&mut head)?;
            let rid = u64::from_le_bytes(head[..8].try_into().expect("8 bytes"));
            let rtok = u64::from_le_bytes(head[8..].try_into().expect("8 bytes"));
            if rid != id || rtok != tokens {
                return Err(Error::Invalid(format!(
                    "external record at offset {} is ({}, {}), index says ({}, {})",
                    offset, rid, rtok, id, tokens
                )));
            }
            let mut bytes = vec![0u8; tokens as usize * dim * 8];
            file.read_exact(&mut bytes)?;
            let data = bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            out.insert(id as usize, Tensor::new(vec![tokens as usize, dim], data)?)?;
        }
        Ok(out)
    }
}

/// Embedding tables registered in a [`ParamStore`] plus the lookups that
/// index them.
#[derive(Debug, Clone)]
pub struct EmbeddingLayer {
    pub dims: EmbeddingDims,
    pub vocabs: VocabMaps,
    pub pretrained_index: HashMap<String, usize>,
    pub word: ParamId,
    pub pretrained: ParamId,
    pub lemma: ParamId,
    pub pos: ParamId,
    pub indicator: ParamId,
}

pub const INIT_BOUND: f64 = 0.1;

impl EmbeddingLayer {
    pub fn new<R: Rng + ?Sized>(
        dims: EmbeddingDims,
        vocabs: VocabMaps,
        pretrained: Option<&PretrainedVectors>,
        store: &mut ParamStore,
        rng: &mut R,
    ) -> Result<Self> {
        let (pretrained_index, table) = match pretrained {
            Some(p) => {
                if p.dim() != dims.pretrained {
                    return Err(Error::Config(format!(
                        "pretrained vectors have width {}, configured {}",
                        p.dim(),
                        dims.pretrained
                    )));
                }
                (p.index.clone(), p.table.clone())
            }
            None => (HashMap::new(), Tensor::zeros(&[0, dims.pretrained])),
        };
        let word = store.add("embed.word", Tensor::uniform(&[vocabs.words.len(), dims.word], INIT_BOUND, rng), true);
        let pretrained = store.add("embed.pretrained", table, false);
        let lemma = store.add("embed.lemma", Tensor::uniform(&[vocabs.lemmas.len(), dims.lemma], INIT_BOUND, rng), true);
        let pos = store.add("embed.pos", Tensor::uniform(&[vocabs.pos.len(), dims.pos], INIT_BOUND, rng), true);
        let indicator = store.add("embed.indicator", Tensor::uniform(&[2, dims.indicator], INIT_BOUND, rng), true);
        Ok(EmbeddingLayer {
            dims,
            vocabs,
            pretrained_index,
            word,
            pretrained,
            lemma,
            pos,
            indicator,
        })
    }

    /// Input matrix `n x D` for one predicate of a sentence.
    #[allow(clippy::too_many_arguments)]
    pub fn embed(
        &self,
        tape: &mut Tape<'_>,
        bound: &BoundParams,
        store: &ParamStore,
        sentence: &Sentence,
        sentence_id: usize,
        predicate_index: usize,
        external: Option<&ExternalVectors>,
    ) -> Result<Var> {
        let n = sentence.len();
        if predicate_index >= n {
            return Err(Error::Invalid(format!("predicate {} outside a {}-token sentence", predicate_index, n)));
        }
        let toks = &sentence.tokens;
        let word_ids: Vec<usize> = toks.iter().map(|t| self.vocabs.words.get(&t.form)).collect();
        let lemma_ids: Vec<usize> = toks.iter().map(|t| self.vocabs.lemmas.get(&t.lemma)).collect();
        let pos_ids: Vec<usize> = toks.iter().map(|t| self.vocabs.pos.get(&t.pos)).collect();
        let flags: Vec<usize> = (0..n).map(|i| usize::from(i == predicate_index)).collect();

        let mut blocks = Vec::with_capacity(6);
        blocks.push(tape.select_rows(bound.var(self.word), &word_ids)?);

        let table = store.get(self.pretrained);
        let dp = self.dims.pretrained;
        let mut pre = Vec::with_capacity(n * dp);
        for t in toks {
            match self.pretrained_index.get(&t.form.to_lowercase()) {
                Some(&row) => pre.extend_from_slice(table.row(row)),
                None => pre.extend(std::iter::repeat(0.0).take(dp)),
            }
        }
        blocks.push(tape.constant(Tensor::new(vec![n, dp], pre)?));

        blocks.push(tape.select_rows(bound.var(self.lemma), &lemma_ids)?);
        blocks.push(tape.select_rows(bound.var(self.pos), &pos_ids)?);
        blocks.push(tape.select_rows(bound.var(self.indicator), &flags)?);

        if self.dims.external > 0 {
            let ext = external
                .and_then(|e| e.get(sentence_id))
                .ok_or_else(|| Error::Invalid(format!("no external vectors for sentence {}", sentence_id)))?;
            if ext.rows() != n || ext.cols() != self.dims.external {
                return Err(Error::Shape(format!(
                    "external vectors for sentence {} have shape {:?}, expected [{}, {}]",
                    sentence_id,
                    ext.shape(),
                    n,
                    self.dims.external
                )));
            }
            blocks.push(tape.constant(ext.clone()));
        }
        tape.concat(&blocks, 1)
    }
}
