//! Stacked BiLSTM, multi-hop self-attention and fusion.

use rand::Rng;

use crate::embedding::INIT_BOUND;
use crate::error::{Error, Result};
use crate::numerics::{BoundParams, ParamId, ParamStore, Tape, Tensor, Var};

/// Forget-gate bias at initialization.
pub const FORGET_BIAS: f64 = 1.0;

/// One LSTM direction. Gate blocks are laid out `[input, forget, output,
/// candidate]` along the columns of both weight matrices and the bias.
#[derive(Debug, Clone)]
pub struct LstmCell {
    pub input_weights: ParamId,
    pub recurrent_weights: ParamId,
    pub bias: ParamId,
    pub hidden: usize,
    pub input_width: usize,
}

impl LstmCell {
    pub fn new<R: Rng + ?Sized>(
        name: &str,
        input_width: usize,
        hidden: usize,
        store: &mut ParamStore,
        rng: &mut R,
    ) -> Self {
        let input_weights = store.add(
            format!("{}.w_x", name),
            Tensor::uniform(&[input_width, 4 * hidden], INIT_BOUND, rng),
            true,
        );
        let recurrent_weights = store.add(
            format!("{}.w_h", name),
            Tensor::uniform(&[hidden, 4 * hidden], INIT_BOUND, rng),
            true,
        );
        let mut b = Tensor::zeros(&[4 * hidden]);
        b.data_mut()[hidden..2 * hidden].fill(FORGET_BIAS);
        let bias = store.add(format!("{}.b", name), b, true);
        LstmCell {
            input_weights,
            recurrent_weights,
            bias,
            hidden,
            input_width,
        }
    }

    /// Runs the recurrence over the rows of `input` (`n x input_width`) from
    /// zero initial states, last row first when `reverse`. Row `t` of the
    /// result is the hidden state at position `t`.
    pub fn run(&self, tape: &mut Tape<'_>, bound: &BoundParams, input: Var, reverse: bool) -> Result<Var> {
        let n = tape.value(input).rows();
        let d = self.hidden;
        let projected = tape.matmul(input, bound.var(self.input_weights))?;
        let projected = tape.add_row(projected, bound.var(self.bias))?;
        let wh = bound.var(self.recurrent_weights);

        let mut states: Vec<Option<Var>> = vec![None; n];
        let mut prev: Option<(Var, Var)> = None;
        let order: Box<dyn Iterator<Item = usize>> = if reverse {
            Box::new((0..n).rev())
        } else {
            Box::new(0..n)
        };
        for t in order {
            let mut gates = tape.select_rows(projected, &[t])?;
            if let Some((h_prev, _)) = prev {
                let rec = tape.matmul(h_prev, wh)?;
                gates = tape.add(gates, rec)?;
            }
            let sig_in = tape.slice_cols(gates, 0, 3 * d)?;
            let sig = tape.sigmoid(sig_in)?;
            let i = tape.slice_cols(sig, 0, d)?;
            let f = tape.slice_cols(sig, d, 2 * d)?;
            let o = tape.slice_cols(sig, 2 * d, 3 * d)?;
            let g_in = tape.slice_cols(gates, 3 * d, 4 * d)?;
            let g = tape.tanh(g_in)?;
            let mut c = tape.mul(i, g)?;
            if let Some((_, c_prev)) = prev {
                let kept = tape.mul(f, c_prev)?;
                c = tape.add(kept, c)?;
            }
            let c_act = tape.tanh(c)?;
            let h = tape.mul(o, c_act)?;
            states[t] = Some(h);
            prev = Some((h, c));
        }
        let rows: Vec<Var> = states.into_iter().map(|s| s.expect("every step visited")).collect();
        tape.concat(&rows, 0)
    }
}

/// Stack of bidirectional layers.
#[derive(Debug, Clone)]
pub struct BiLstmStack {
    pub layers: Vec<(LstmCell, LstmCell)>,
    pub hidden: usize,
    pub keep_prob: f64,
}

impl BiLstmStack {
    pub fn new<R: Rng + ?Sized>(
        input_width: usize,
        hidden: usize,
        layers: usize,
        keep_prob: f64,
        store: &mut ParamStore,
        rng: &mut R,
    ) -> Result<Self> {
        if hidden == 0 || layers == 0 {
            return Err(Error::Config("BiLSTM needs at least one layer and one hidden unit".into()));
        }
        crate::numerics::tape::check_keep_prob(keep_prob)?;
        let layers = (0..layers)
            .map(|l| {
                let width = if l == 0 { input_width } else { 2 * hidden };
                let fwd = LstmCell::new(&format!("lstm.{}.fwd", l), width, hidden, store, rng);
                let bwd = LstmCell::new(&format!("lstm.{}.bwd", l), width, hidden, store, rng);
                (fwd, bwd)
            })
            .collect();
        Ok(BiLstmStack {
            layers,
            hidden,
            keep_prob,
        })
    }

    pub fn output_width(&self) -> usize {
        2 * self.hidden
    }
}

/// Encodes `n x D` embeddings into `n x 2d` states `[forward, backward]`.
///
/// In training mode a fresh dropout mask is applied to every layer's input
/// (hence to each cell input at every timestep) and to the top layer's
/// output.
pub fn bilstm_encode<R: Rng + ?Sized>(
    tape: &mut Tape<'_>,
    bound: &BoundParams,
    stack: &BiLstmStack,
    embeddings: Var,
    rng: &mut R,
    training: bool,
) -> Result<Var> {
    let (n, width) = tape.value(embeddings).dims2()?;
    if n == 0 {
        return Err(Error::Shape("cannot encode an empty sequence".into()));
    }
    let expected = stack.layers[0].0.input_width;
    if width != expected {
        return Err(Error::Shape(format!("embedding width {} but the stack expects {}", width, expected)));
    }
    let mut x = embeddings;
    for (fwd, bwd) in &stack.layers {
        let dropped = tape.dropout(x, stack.keep_prob, rng, training)?;
        let hf = fwd.run(tape, bound, dropped, false)?;
        let hb = bwd.run(tape, bound, dropped, true)?;
        x = tape.concat(&[hf, hb], 1)?;
    }
    tape.dropout(x, stack.keep_prob, rng, training)
}

/// `W1: k x 2d` and `W2: r x k`.
#[derive(Debug, Clone)]
pub struct AttentionParams {
    pub w1: ParamId,
    pub w2: ParamId,
    pub hops: usize,
    pub k: usize,
}

impl AttentionParams {
    pub fn new<R: Rng + ?Sized>(
        state_width: usize,
        k: usize,
        hops: usize,
        store: &mut ParamStore,
        rng: &mut R,
    ) -> Result<Self> {
        if k == 0 || hops == 0 {
            return Err(Error::Config("attention needs k >= 1 and r >= 1".into()));
        }
        let w1 = store.add("attn.w1", Tensor::uniform(&[k, state_width], INIT_BOUND, rng), true);
        let w2 = store.add("attn.w2", Tensor::uniform(&[hops, k], INIT_BOUND, rng), true);
        Ok(AttentionParams { w1, w2, hops, k })
    }
}

/// Returns `(M, S)`: `M = softmax_rows(W2 tanh(W1 H^T))` (`r x n`) and
/// `S = M H` (`r x 2d`).
pub fn attend(tape: &mut Tape<'_>, bound: &BoundParams, params: &AttentionParams, states: Var) -> Result<(Var, Var)> {
    if tape.value(states).rows() == 0 {
        return Err(Error::Shape("attention over an empty sequence".into()));
    }
    let ht = tape.transpose(states)?;
    let proj = tape.matmul(bound.var(params.w1), ht)?;
    let act = tape.tanh(proj)?;
    let scores = tape.matmul(bound.var(params.w2), act)?;
    let weights = tape.softmax_rows(scores)?;
    let summary = tape.matmul(weights, states)?;
    Ok((weights, summary))
}

/// Appends the hop-major flattening of `summary` to every row of `states`.
pub fn fuse(tape: &mut Tape<'_>, states: Var, summary: Var) -> Result<Var> {
    let n = tape.value(states).rows();
    let width = tape.value(summary).len();
    let flat = tape.reshape(summary, vec![1, width])?;
    let tiled = tape.repeat_rows(flat, n)?;
    tape.concat(&[states, tiled], 1)
}
