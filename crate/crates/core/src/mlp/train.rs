//! Loss, gradients, Adam and the training loop.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use super::gemm;
use super::{MlpConfig, MlpModel, ScalingMode, ScalingPlan, Standardizer};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

/// `(1/n) sum_i |pred_i - target_i|^2` over row-major batches of width `dim`.
pub fn loss_mse(pred: &[f64], target: &[f64], dim: usize) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::DimensionMismatch {
            expected: target.len(),
            got: pred.len(),
        });
    }
    if pred.is_empty() || dim == 0 || pred.len() % dim != 0 {
        return Err(Error::EmptyInput);
    }
    let n = (pred.len() / dim) as f64;
    Ok(pred
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / n)
}

/// Per-layer activations kept for the backward pass.
struct Workspace {
    n: usize,
    /// `acts[0]` is the input; `acts[k + 1]` the output of layer `k`.
    acts: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl Workspace {
    fn new(model: &MlpModel, n: usize) -> Self {
        let mut acts = vec![vec![0.0; n * model.input_dim()]];
        let mut pre = Vec::new();
        for l in &model.layers {
            acts.push(vec![0.0; n * l.outputs]);
            pre.push(vec![0.0; n * l.outputs]);
        }
        let widest = model
            .layers
            .iter()
            .map(|l| l.outputs.max(l.inputs))
            .max()
            .unwrap_or(0);
        Workspace {
            n,
            acts,
            pre,
            delta: vec![0.0; n * widest],
            delta_prev: vec![0.0; n * widest],
        }
    }

    fn resize(&mut self, model: &MlpModel, n: usize) {
        if n > self.n {
            *self = Workspace::new(model, n);
        }
    }
}

fn forward_batch(model: &MlpModel, ws: &mut Workspace, x: &[f64], n: usize) {
    ws.acts[0][..x.len()].copy_from_slice(x);
    for (k, l) in model.layers.iter().enumerate() {
        let m = n * l.outputs;
        let z = &mut ws.pre[k][..m];
        for row in z.chunks_exact_mut(l.outputs) {
            row.copy_from_slice(&l.bias);
        }
        gemm::a_bt(n, l.inputs, l.outputs, &ws.acts[k], &l.weights, 1.0, z);
        let (head, tail) = ws.acts.split_at_mut(k + 1);
        let _ = head;
        for (a, z) in tail[0][..m].iter_mut().zip(z.iter()) {
            *a = l.activation.apply(*z);
        }
    }
}

/// Loss and gradient on standardized data. `grad` has the layout of
/// [`MlpModel::parameters`].
/// `periods[j]` > 0 wraps output `j`'s residual into [-period/2, period/2].
fn residual(p: f64, t: f64, period: f64) -> f64 {
    let r = p - t;
    if period > 0.0 {
        r - period * (r / period).round()
    } else {
        r
    }
}

fn loss_and_grad(
    model: &MlpModel,
    ws: &mut Workspace,
    x: &[f64],
    y: &[f64],
    n: usize,
    periods: &[f64],
    grad: &mut [f64],
) -> f64 {
    forward_batch(model, ws, x, n);
    let nl = model.layers.len();
    let out_dim = model.output_dim();
    let pred = &ws.acts[nl][..n * out_dim];
    let scale = 2.0 / n as f64;
    let mut loss = 0.0;
    for (i, (d, (p, t))) in ws.delta.iter_mut().zip(pred.iter().zip(y)).enumerate() {
        let r = residual(*p, *t, periods[i % out_dim]);
        loss += r * r;
        *d = scale * r;
    }
    loss /= n as f64;

    let mut end = grad.len();
    for k in (0..nl).rev() {
        let l = &model.layers[k];
        let m = n * l.outputs;
        // Through the activation.
        for ((d, z), a) in ws.delta[..m]
            .iter_mut()
            .zip(&ws.pre[k][..m])
            .zip(&ws.acts[k + 1][..m])
        {
            *d *= l.activation.derivative(*z, *a);
        }
        let nb = l.bias.len();
        let nw = l.weights.len();
        let (gw, gb) = grad[end - nb - nw..end].split_at_mut(nw);
        gb.fill(0.0);
        for row in ws.delta[..m].chunks_exact(l.outputs) {
            for (g, d) in gb.iter_mut().zip(row) {
                *g += d;
            }
        }
        gemm::at_b(
            l.outputs,
            n,
            l.inputs,
            &ws.delta[..m],
            &ws.acts[k][..n * l.inputs],
            0.0,
            gw,
        );
        end -= nb + nw;
        if k > 0 {
            gemm::a_b(
                n,
                l.outputs,
                l.inputs,
                &ws.delta[..m],
                &l.weights,
                0.0,
                &mut ws.delta_prev[..n * l.inputs],
            );
            core::mem::swap(&mut ws.delta, &mut ws.delta_prev);
        }
    }
    loss
}

/// Loss and exact gradient of the standardized-output MSE for a raw batch
/// (row-major `inputs` and `targets`).
pub fn backward(model: &MlpModel, inputs: &[f64], targets: &[f64]) -> Result<(f64, Vec<f64>)> {
    model.validate()?;
    let (di, do_) = (model.input_dim(), model.output_dim());
    if inputs.is_empty() || inputs.len() % di != 0 {
        return Err(Error::EmptyInput);
    }
    let n = inputs.len() / di;
    if targets.len() != n * do_ {
        return Err(Error::DimensionMismatch {
            expected: n * do_,
            got: targets.len(),
        });
    }
    let mut x = inputs.to_vec();
    model.input_scaling.apply(&mut x);
    let mut y = targets.to_vec();
    model.output_scaling.apply(&mut y);
    let mut ws = Workspace::new(model, n);
    let mut grad = vec![0.0; model.param_count()];
    let loss = loss_and_grad(model, &mut ws, &x, &y, n, &vec![0.0; do_], &mut grad);
    Ok((loss, grad))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub t: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState {
            t: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }
}

/// One bias-corrected Adam step on `params`.
pub fn adam_update(
    state: &mut AdamState,
    params: &mut [f64],
    grads: &[f64],
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) {
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g;
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g;
        let mh = state.m[i] / c1;
        let vh = state.v[i] / c2;
        params[i] -= lr * mh / (vh.sqrt() + eps);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub shuffle_seed: u64,
    pub validation_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            max_epochs: 10_000,
            batch_size: 256,
            shuffle_seed: 0,
            validation_fraction: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Domain("learning rate must be positive".into()));
        }
        if self.max_epochs == 0 || self.batch_size == 0 {
            return Err(Error::Domain(
                "epochs and batch size must be at least 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::Domain(
                "validation fraction must be in [0, 1)".into(),
            ));
        }
        if !((0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0)
        {
            return Err(Error::Domain("invalid Adam parameters".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub train_mse: Vec<f64>,
    /// Empty when no validation split is held out.
    pub val_mse: Vec<f64>,
    /// Epoch (0-based) of the returned model.
    pub best_epoch: usize,
    pub batch_size: usize,
    pub train_samples: usize,
    pub val_samples: usize,
}

impl TrainHistory {
    pub fn final_train_mse(&self) -> Option<f64> {
        self.train_mse.last().copied()
    }

    pub fn best_val_mse(&self) -> Option<f64> {
        self.val_mse.get(self.best_epoch).copied()
    }
}

/// Training error with the history recorded up to the failure.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainFailure {
    pub error: Error,
    pub history: TrainHistory,
}

impl fmt::Display for TrainFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.error, f)
    }
}

impl From<Error> for TrainFailure {
    fn from(error: Error) -> Self {
        TrainFailure {
            error,
            history: TrainHistory::default(),
        }
    }
}

fn gather(src: &[f64], dim: usize, idx: &[usize], out: &mut Vec<f64>) {
    out.clear();
    for &i in idx {
        out.extend_from_slice(&src[i * dim..(i + 1) * dim]);
    }
}

fn eval_mse(
    model: &MlpModel,
    ws: &mut Workspace,
    x: &[f64],
    y: &[f64],
    periods: &[f64],
    chunk: usize,
) -> f64 {
    let (di, d_out) = (model.input_dim(), model.output_dim());
    let n = x.len() / di;
    let nl = model.layers.len();
    let mut total = 0.0;
    let mut start = 0;
    while start < n {
        let b = chunk.min(n - start);
        forward_batch(model, ws, &x[start * di..(start + b) * di], b);
        let pred = &ws.acts[nl][..b * d_out];
        total += pred
            .iter()
            .zip(&y[start * d_out..(start + b) * d_out])
            .enumerate()
            .map(|(i, (p, t))| residual(*p, *t, periods[i % d_out]).powi(2))
            .sum::<f64>();
        start += b;
    }
    total / n as f64
}

/// [`train_scaled`] without log-scaled columns.
pub fn train(
    cfg: &MlpConfig,
    tcfg: &TrainConfig,
    inputs: &[f64],
    targets: &[f64],
) -> core::result::Result<(MlpModel, TrainHistory), TrainFailure> {
    train_scaled(cfg, tcfg, &ScalingPlan::default(), inputs, targets)
}

/// Trains from `cfg`'s initial weights on row-major raw `inputs`/`targets`.
///
/// Inputs are z-scored and outputs scaled into the output activation's range,
/// both fitted on the training split, after log scaling of the wide-range
/// columns in `plan`. Returns the model of the epoch with the lowest
/// validation MSE (training MSE without a validation split).
pub fn train_scaled(
    cfg: &MlpConfig,
    tcfg: &TrainConfig,
    plan: &ScalingPlan,
    inputs: &[f64],
    targets: &[f64],
) -> core::result::Result<(MlpModel, TrainHistory), TrainFailure> {
    tcfg.validate()?;
    let mut model = MlpModel::new(cfg)?;
    let (di, d_out) = (cfg.input_dim, cfg.output_dim);
    if inputs.is_empty() || inputs.len() % di != 0 {
        return Err(Error::EmptyInput.into());
    }
    let n = inputs.len() / di;
    if targets.len() != n * d_out {
        return Err(Error::DimensionMismatch {
            expected: n * d_out,
            got: targets.len(),
        }
        .into());
    }

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng_from_seed(derive_seed(tcfg.shuffle_seed, 0));
    order.shuffle(&mut rng);
    let n_val = if n >= 2 {
        ((tcfg.validation_fraction * n as f64).round() as usize).min(n - 1)
    } else {
        0
    };
    let (val_idx, train_idx) = order.split_at(n_val);
    let mut train_idx = train_idx.to_vec();
    train_idx.sort_unstable();

    let mut xt = Vec::new();
    let mut yt = Vec::new();
    gather(inputs, di, &train_idx, &mut xt);
    gather(targets, d_out, &train_idx, &mut yt);
    model.input_scaling =
        Standardizer::fit_with_log(&xt, di, ScalingMode::ZScore, &plan.log_inputs)?;
    model.output_scaling = Standardizer::fit_with_log(
        &yt,
        d_out,
        ScalingMode::for_output(cfg.output_activation),
        &plan.log_outputs,
    )?;
    model.input_scaling.apply(&mut xt);
    model.output_scaling.apply(&mut yt);
    let mut periods = vec![0.0; d_out];
    for &j in &plan.periodic_outputs {
        if j >= d_out || model.output_scaling.log[j] {
            return Err(Error::Domain(format!("output {j} cannot be periodic")).into());
        }
        periods[j] = core::f64::consts::TAU / model.output_scaling.scale[j];
    }
    let mut xv = Vec::new();
    let mut yv = Vec::new();
    gather(inputs, di, val_idx, &mut xv);
    gather(targets, d_out, val_idx, &mut yv);
    model.input_scaling.apply(&mut xv);
    model.output_scaling.apply(&mut yv);

    let nt = train_idx.len();
    let bs = tcfg.batch_size.min(nt);
    let mut history = TrainHistory {
        batch_size: bs,
        train_samples: nt,
        val_samples: n_val,
        ..TrainHistory::default()
    };
    let mut ws = Workspace::new(&model, bs);
    let mut params = model.parameters();
    let mut grad = vec![0.0; params.len()];
    let mut adam = AdamState::new(params.len());
    let mut best = (f64::INFINITY, params.clone());
    let mut perm: Vec<usize> = (0..nt).collect();
    let mut bx = Vec::with_capacity(bs * di);
    let mut by = Vec::with_capacity(bs * d_out);

    for epoch in 0..tcfg.max_epochs {
        perm.shuffle(&mut rng);
        let mut sum = 0.0;
        for chunk in perm.chunks(bs) {
            gather(&xt, di, chunk, &mut bx);
            gather(&yt, d_out, chunk, &mut by);
            let loss = loss_and_grad(&model, &mut ws, &bx, &by, chunk.len(), &periods, &mut grad);
            sum += loss * chunk.len() as f64;
            adam_update(
                &mut adam,
                &mut params,
                &grad,
                tcfg.learning_rate,
                tcfg.beta1,
                tcfg.beta2,
                tcfg.epsilon,
            );
            model.set_parameters(&params)?;
        }
        let train_mse = sum / nt as f64;
        history.train_mse.push(train_mse);
        let score = if n_val > 0 {
            ws.resize(&model, bs);
            let v = eval_mse(&model, &mut ws, &xv, &yv, &periods, bs);
            history.val_mse.push(v);
            v
        } else {
            train_mse
        };
        if !(train_mse.is_finite() && score.is_finite()) {
            return Err(TrainFailure {
                error: Error::Diverged { epoch },
                history,
            });
        }
        if score < best.0 {
            best = (score, params.clone());
            history.best_epoch = epoch;
        }
    }
    model.set_parameters(&best.1)?;
    Ok((model, history))
}
