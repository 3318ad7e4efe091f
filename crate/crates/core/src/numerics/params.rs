use std::collections::HashMap;

use super::tape::{Tape, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Index of a tensor inside a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Named model tensors, each either trainable or frozen.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    values: Vec<Tensor>,
    trainable: Vec<bool>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor, trainable: bool) -> ParamId {
        let name = name.into();
        debug_assert!(!self.names.contains(&name), "duplicate parameter {}", name);
        self.names.push(name);
        self.values.push(value);
        self.trainable.push(trainable);
        ParamId(self.values.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.values[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.values[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn is_trainable(&self, id: ParamId) -> bool {
        self.trainable[id.0]
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.values.len()).map(ParamId)
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(&self.values)
    }

    /// Records every tensor as a tape leaf; frozen ones as constants.
    pub fn bind<'a>(&'a self, tape: &mut Tape<'a>) -> BoundParams {
        let vars = self
            .values
            .iter()
            .zip(&self.trainable)
            .map(|(v, &t)| if t { tape.param(v) } else { tape.constant_ref(v) })
            .collect();
        BoundParams { vars }
    }

    /// Replaces values from a name-keyed map; every stored name must be
    /// present with the same shape.
    pub fn load_values(&mut self, mut loaded: HashMap<String, Tensor>) -> Result<()> {
        for (name, slot) in self.names.iter().zip(self.values.iter_mut()) {
            let value = loaded
                .remove(name)
                .ok_or_else(|| Error::Checkpoint(format!("missing parameter {}", name)))?;
            if value.shape() != slot.shape() {
                return Err(Error::Checkpoint(format!(
                    "parameter {} has shape {:?}, expected {:?}",
                    name,
                    value.shape(),
                    slot.shape()
                )));
            }
            *slot = value;
        }
        if let Some(extra) = loaded.keys().next() {
            return Err(Error::Checkpoint(format!("unexpected parameter {}", extra)));
        }
        Ok(())
    }
}

/// Tape handles for every parameter of a store, in store order.
#[derive(Debug, Clone)]
pub struct BoundParams {
    vars: Vec<Var>,
}

impl BoundParams {
    pub fn var(&self, id: ParamId) -> Var {
        self.vars[id.0]
    }

    /// Collects the gradients a backward pass left on the bound leaves.
    pub fn gradients(&self, tape: &Tape<'_>, store: &ParamStore) -> Gradients {
        let grads = self
            .vars
            .iter()
            .zip(&store.trainable)
            .map(|(&v, &t)| if t { tape.grad(v).cloned() } else { None })
            .collect();
        Gradients { grads }
    }
}

/// Per-parameter gradients aligned with a [`ParamStore`]; `None` means no
/// gradient reached that tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn zeros_like(store: &ParamStore) -> Self {
        Gradients {
            grads: vec![None; store.len()],
        }
    }

    pub fn get(&self, id: ParamId) -> Option<&Tensor> {
        self.grads[id.0].as_ref()
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    /// Adds `other` scaled by `weight`.
    pub fn add_scaled(&mut self, other: &Gradients, weight: f64) -> Result<()> {
        if other.grads.len() != self.grads.len() {
            return Err(Error::Shape("gradient sets of different sizes".into()));
        }
        for (mine, theirs) in self.grads.iter_mut().zip(&other.grads) {
            let Some(theirs) = theirs else { continue };
            let mut scaled = theirs.clone();
            scaled.scale(weight);
            match mine {
                Some(m) => m.add_assign(&scaled)?,
                None => *mine = Some(scaled),
            }
        }
        Ok(())
    }

    pub fn global_norm(&self) -> f64 {
        self.grads.iter().flatten().map(Tensor::sq_norm).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        for g in self.grads.iter_mut().flatten() {
            g.scale(factor);
        }
    }

    /// Rescales so the global norm does not exceed `max_norm`.
    pub fn clip_global_norm(&mut self, max_norm: f64) {
        let norm = self.global_norm();
        if norm > max_norm && norm > 0.0 {
            self.scale(max_norm / norm);
        }
    }
}
