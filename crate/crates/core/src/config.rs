//! Model and training configuration.
//!
//! Files are flat `key=value` text; `#` starts a comment. Every field of
//! [`TrainConfig`] is addressable by its name.

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingDims;
use crate::error::{Error, Result};
use crate::tags::StatsScope;

/// Positions that contribute to the training loss.
pub type LossWindow = StatsScope;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub keep_prob: f64,
    /// LSTM hidden units per direction (d).
    pub hidden: usize,
    pub layers: usize,
    /// Attention hops (r).
    pub hops: usize,
    /// Attention projection width (k); `None` means k = d.
    pub attn_dim: Option<usize>,
    pub loss_window: LossWindow,
    pub use_aux_tags: bool,
    pub use_attention: bool,
    pub seed: u64,
    pub dims: EmbeddingDims,
    /// Global gradient norm cap; `None` disables clipping.
    pub clip_norm: Option<f64>,
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.001,
            batch_size: 64,
            max_epochs: 20,
            keep_prob: 0.9,
            hidden: 512,
            layers: 4,
            hops: 10,
            attn_dim: None,
            loss_window: LossWindow::FullSequence,
            use_aux_tags: true,
            use_attention: true,
            seed: 0,
            dims: EmbeddingDims::default(),
            clip_norm: None,
            workers: 1,
        }
    }
}

impl TrainConfig {
    /// Small model that trains on synthetic data in minutes.
    pub fn desk() -> Self {
        TrainConfig {
            lr: 0.005,
            batch_size: 8,
            max_epochs: 60,
            keep_prob: 0.5,
            hidden: 32,
            layers: 2,
            hops: 2,
            dims: EmbeddingDims {
                word: 16,
                pretrained: 0,
                lemma: 16,
                pos: 8,
                indicator: 8,
                external: 0,
            },
            ..TrainConfig::default()
        }
    }

    /// Tiny model for finite-difference gradient checks.
    pub fn toy() -> Self {
        TrainConfig {
            batch_size: 1,
            max_epochs: 1,
            hidden: 4,
            layers: 1,
            hops: 2,
            dims: EmbeddingDims {
                word: 4,
                pretrained: 3,
                lemma: 3,
                pos: 2,
                indicator: 2,
                external: 2,
            },
            ..TrainConfig::default()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "default" | "full" => Ok(TrainConfig::default()),
            "desk" => Ok(TrainConfig::desk()),
            "toy" => Ok(TrainConfig::toy()),
            other => Err(Error::Config(format!("unknown preset {:?}", other))),
        }
    }

    pub fn attn_dim(&self) -> usize {
        self.attn_dim.unwrap_or(self.hidden)
    }

    /// Assigns one field from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad value {:?} for {}", value, key)))
        }
        fn parse_bool(key: &str, value: &str) -> Result<bool> {
            match value.trim() {
                "true" | "1" | "yes" | "on" => Ok(true),
                "false" | "0" | "no" | "off" => Ok(false),
                _ => Err(Error::Config(format!("bad boolean {:?} for {}", value, key))),
            }
        }
        let v = value.trim();
        match key.trim() {
            "lr" => self.lr = parse(key, v)?,
            "batch_size" => self.batch_size = parse(key, v)?,
            "max_epochs" | "epochs" => self.max_epochs = parse(key, v)?,
            "keep_prob" => self.keep_prob = parse(key, v)?,
            "hidden" | "d" => self.hidden = parse(key, v)?,
            "layers" => self.layers = parse(key, v)?,
            "hops" | "r" => self.hops = parse(key, v)?,
            "attn_dim" | "k" => {
                self.attn_dim = if v == "d" || v == "none" { None } else { Some(parse(key, v)?) }
            }
            "loss_window" => self.loss_window = v.parse()?,
            "use_aux_tags" => self.use_aux_tags = parse_bool(key, v)?,
            "use_attention" => self.use_attention = parse_bool(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "word_dim" => self.dims.word = parse(key, v)?,
            "pretrained_dim" => self.dims.pretrained = parse(key, v)?,
            "lemma_dim" => self.dims.lemma = parse(key, v)?,
            "pos_dim" => self.dims.pos = parse(key, v)?,
            "indicator_dim" => self.dims.indicator = parse(key, v)?,
            "external_dim" => self.dims.external = parse(key, v)?,
            "clip_norm" => {
                self.clip_norm = if v == "none" { None } else { Some(parse(key, v)?) }
            }
            "workers" => self.workers = parse(key, v)?,
            other => return Err(Error::Config(format!("unknown config key {:?}", other))),
        }
        Ok(())
    }

    /// Applies every `key=value` line of `text`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: lineno + 1,
                message: format!("expected key=value, got {:?}", line),
            })?;
            self.set(k, v).map_err(|e| Error::Parse {
                line: lineno + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let d = &self.dims;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        };
        kv("lr", self.lr.to_string());
        kv("batch_size", self.batch_size.to_string());
        kv("max_epochs", self.max_epochs.to_string());
        kv("keep_prob", self.keep_prob.to_string());
        kv("hidden", self.hidden.to_string());
        kv("layers", self.layers.to_string());
        kv("hops", self.hops.to_string());
        kv("attn_dim", self.attn_dim.map_or("d".into(), |k| k.to_string()));
        kv("loss_window", self.loss_window.name().into());
        kv("use_aux_tags", self.use_aux_tags.to_string());
        kv("use_attention", self.use_attention.to_string());
        kv("seed", self.seed.to_string());
        kv("word_dim", d.word.to_string());
        kv("pretrained_dim", d.pretrained.to_string());
        kv("lemma_dim", d.lemma.to_string());
        kv("pos_dim", d.pos.to_string());
        kv("indicator_dim", d.indicator.to_string());
        kv("external_dim", d.external.to_string());
        kv("clip_norm", self.clip_norm.map_or("none".into(), |c| c.to_string()));
        kv("workers", self.workers.to_string());
        out
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("batch_size", self.batch_size),
            ("hidden", self.hidden),
            ("layers", self.layers),
            ("hops", self.hops),
            ("attn_dim", self.attn_dim()),
            ("word_dim", self.dims.word),
            ("lemma_dim", self.dims.lemma),
            ("pos_dim", self.dims.pos),
            ("indicator_dim", self.dims.indicator),
            ("workers", self.workers),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{} must be positive", name)));
            }
        }
        if self.attn_dim() > 1 << 16 {
            return Err(Error::Config("attn_dim is unreasonably large".into()));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be finite and non-negative", self.lr)));
        }
        crate::numerics::tape::check_keep_prob(self.keep_prob)?;
        if let Some(c) = self.clip_norm {
            if c <= 0.0 {
                return Err(Error::Config("clip_norm must be positive".into()));
            }
        }
        Ok(())
    }
}
