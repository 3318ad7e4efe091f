use super::params::{Gradients, ParamStore};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment accumulators and the step counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    step: u64,
    first: Vec<Tensor>,
    second: Vec<Tensor>,
}

impl AdamState {
    pub fn new(store: &ParamStore) -> Self {
        let zeros: Vec<Tensor> = store.ids().map(|id| Tensor::zeros(store.get(id).shape())).collect();
        AdamState {
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update applied in place to every trainable
/// parameter. Parameters without a gradient are treated as having a zero
/// gradient.
pub fn adam_step(
    params: &mut ParamStore,
    grads: &Gradients,
    state: &mut AdamState,
    config: &AdamConfig,
) -> Result<()> {
    if grads.len() != params.len() || state.first.len() != params.len() {
        return Err(Error::Shape(format!(
            "adam: {} params, {} grads, {} state slots",
            params.len(),
            grads.len(),
            state.first.len()
        )));
    }
    for id in params.ids() {
        let shape = params.get(id).shape();
        if state.first[id.index()].shape() != shape {
            return Err(Error::Shape(format!("adam state shape mismatch for {}", params.name(id))));
        }
        if let Some(g) = grads.get(id) {
            if g.shape() != shape {
                return Err(Error::Shape(format!(
                    "gradient for {} has shape {:?}, parameter {:?}",
                    params.name(id),
                    g.shape(),
                    shape
                )));
            }
        }
    }

    state.step += 1;
    let t = state.step as i32;
    let AdamConfig { lr, beta1, beta2, eps } = *config;
    let bc1 = 1.0 - beta1.powi(t);
    let bc2 = 1.0 - beta2.powi(t);

    let ids: Vec<_> = params.ids().collect();
    for id in ids {
        if !params.is_trainable(id) {
            continue;
        }
        let i = id.index();
        let m = state.first[i].data_mut();
        let v = state.second[i].data_mut();
        let p = params.get_mut(id).data_mut();
        let g = grads.get(id).map(Tensor::data);
        for j in 0..p.len() {
            let gj = g.map_or(0.0, |g| g[j]);
            m[j] = beta1 * m[j] + (1.0 - beta1) * gj;
            v[j] = beta2 * v[j] + (1.0 - beta2) * gj * gj;
            let m_hat = m[j] / bc1;
            let v_hat = v[j] / bc2;
            p[j] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::tape::Tape;

    fn scalar_store(value: f64) -> ParamStore {
        let mut store = ParamStore::new();
        store.add("w", Tensor::new(vec![1], vec![value]).unwrap(), true);
        store
    }

    fn grads_for(store: &ParamStore, g: f64) -> Gradients {
        let mut tape = Tape::new();
        let bound = store.bind(&mut tape);
        let id = store.ids().next().unwrap();
        let scaled = tape.scale(bound.var(id), g).unwrap();
        let loss = tape.sum(scaled).unwrap();
        tape.backward(loss).unwrap();
        bound.gradients(&tape, store)
    }

    #[test]
    fn zero_gradient_leaves_param() {
        let mut store = scalar_store(1.0);
        let mut state = AdamState::new(&store);
        let grads = grads_for(&store, 0.0);
        adam_step(&mut store, &grads, &mut state, &AdamConfig::default()).unwrap();
        assert_eq!(store.get(store.ids().next().unwrap()).data(), &[1.0]);
    }

    #[test]
    fn first_step_moves_by_lr() {
        // m_hat = 0.5, v_hat = 0.25, so the step is lr * 0.5 / (0.5 + 1e-8).
        let mut store = scalar_store(1.0);
        let mut state = AdamState::new(&store);
        let grads = grads_for(&store, 0.5);
        adam_step(&mut store, &grads, &mut state, &AdamConfig::default()).unwrap();
        let w = store.get(store.ids().next().unwrap()).data()[0];
        let expected = 1.0 - 0.001 * 0.5 / (0.5 + 1e-8);
        assert!((w - expected).abs() < 1e-15);
        assert!((w - 0.999).abs() < 1e-10);
    }

    #[test]
    fn quadratic_descends() {
        // f(w) = w^2. At lr 0.001 the same recurrence ends at |w| = 0.9017, so use 0.01.
        let mut store = scalar_store(1.0);
        let id = store.ids().next().unwrap();
        let mut state = AdamState::new(&store);
        let config = AdamConfig {
            lr: 0.01,
            ..AdamConfig::default()
        };
        let mut prev = 1.0f64;
        for step in 0..100 {
            let w = store.get(id).data()[0];
            let grads = grads_for(&store, 2.0 * w);
            adam_step(&mut store, &grads, &mut state, &config).unwrap();
            let now = store.get(id).data()[0].abs();
            if step >= 5 {
                assert!(now < prev, "step {}: {} !< {}", step, now, prev);
            }
            prev = now;
        }
        assert!(prev < 0.9);
        assert_eq!(state.step_count(), 100);
    }

    #[test]
    fn shape_mismatch_is_error() {
        let mut store = scalar_store(1.0);
        let other = {
            let mut s = ParamStore::new();
            s.add("w", Tensor::zeros(&[2]), true);
            s
        };
        let mut state = AdamState::new(&other);
        let grads = Gradients::zeros_like(&store);
        assert!(adam_step(&mut store, &grads, &mut state, &AdamConfig::default()).is_err());
    }
}
