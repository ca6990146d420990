//! Fully connected network with hand-written forward and backward passes.

mod format;
mod train;

pub use format::{model_from_text, model_to_text, FORMAT_TAG};
pub use train::{
    adam_update, backward, loss_mse, train, train_scaled, AdamState, TrainConfig, TrainFailure,
    TrainHistory,
};

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

pub const MAX_HIDDEN_LAYERS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Tanh,
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    /// Derivative at pre-activation `z` with output `a`. Relu uses 0 at `z = 0`.
    #[inline]
    pub fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            "identity" | "linear" => Ok(Activation::Identity),
            _ => Err(Error::Domain(format!("unknown activation '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub output_dim: usize,
    pub hidden_layers: Vec<usize>,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
    pub init_seed: u64,
}

impl MlpConfig {
    /// `depth` hidden layers of `width` tanh neurons.
    pub fn uniform(
        input_dim: usize,
        output_dim: usize,
        depth: usize,
        width: usize,
        output_activation: Activation,
    ) -> Self {
        MlpConfig {
            input_dim,
            output_dim,
            hidden_layers: vec![width; depth],
            hidden_activation: Activation::Tanh,
            output_activation,
            init_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(Error::Domain(String::from(
                "layer dimensions must be positive",
            )));
        }
        if self.hidden_layers.is_empty() || self.hidden_layers.len() > MAX_HIDDEN_LAYERS {
            return Err(Error::Domain(format!(
                "hidden layer count must be in [1, {MAX_HIDDEN_LAYERS}]"
            )));
        }
        if self.hidden_layers.contains(&0) {
            return Err(Error::Domain(String::from(
                "hidden widths must be positive",
            )));
        }
        if self.hidden_activation == Activation::Identity {
            return Err(Error::Domain(String::from(
                "hidden activation must be tanh or relu",
            )));
        }
        Ok(())
    }
}

/// Affine map of one layer: `a = f(W x + b)` with `W` stored row-major as
/// `outputs x inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Layer {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
            activation,
        }
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    fn forward_one(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for j in 0..self.outputs {
            let row = &self.weights[j * self.inputs..(j + 1) * self.inputs];
            let z = row.iter().zip(x).fold(self.bias[j], |s, (w, v)| s + w * v);
            out.push(self.activation.apply(z));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingMode {
    /// Zero mean, unit population deviation.
    ZScore,
    /// Training range mapped to `[0, 1]`.
    MinMaxUnit,
    /// Training range mapped to `[-1, 1]`.
    MinMaxSymmetric,
}

impl ScalingMode {
    /// Output scaling whose target range the output activation can reach.
    pub fn for_output(act: Activation) -> Self {
        match act {
            Activation::Identity => ScalingMode::ZScore,
            Activation::Tanh => ScalingMode::MinMaxSymmetric,
            Activation::Relu => ScalingMode::MinMaxUnit,
        }
    }
}

/// Columns whose positive values span more than this many decades
/// (magnitude difference coefficient) are log-scaled when eligible.
pub const LOG_RHO_THRESHOLD: f64 = 2.0;

/// Per-component `z = (t(x) - offset) / scale`, where `t` is `ln` for
/// log-scaled components and the identity otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub offset: Vec<f64>,
    pub scale: Vec<f64>,
    pub log: Vec<bool>,
}

/// Column treatment during training: indices eligible for log scaling
/// (strictly positive magnitudes) and angle outputs whose residual is taken
/// modulo a full turn.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ScalingPlan {
    pub log_inputs: Vec<usize>,
    pub log_outputs: Vec<usize>,
    pub periodic_outputs: Vec<usize>,
}

impl Standardizer {
    pub fn identity(dim: usize) -> Self {
        Standardizer {
            offset: vec![0.0; dim],
            scale: vec![1.0; dim],
            log: vec![false; dim],
        }
    }

    /// Fits to row-major `rows` of width `dim` without log scaling.
    pub fn fit(rows: &[f64], dim: usize, mode: ScalingMode) -> Result<Self> {
        Self::fit_with_log(rows, dim, mode, &[])
    }

    /// Fits to row-major `rows` of width `dim`. A column listed in
    /// `log_candidates` is log-scaled when all its values are positive and
    /// span more than [`LOG_RHO_THRESHOLD`] decades. Constant components get
    /// scale 1.
    pub fn fit_with_log(
        rows: &[f64],
        dim: usize,
        mode: ScalingMode,
        log_candidates: &[usize],
    ) -> Result<Self> {
        if dim == 0 || rows.is_empty() || rows.len() % dim != 0 {
            return Err(Error::EmptyInput);
        }
        let n = (rows.len() / dim) as f64;
        let mut out = Standardizer::identity(dim);
        for j in 0..dim {
            let col = rows.iter().skip(j).step_by(dim).copied();
            if log_candidates.contains(&j) {
                let lo = col.clone().fold(f64::INFINITY, f64::min);
                let hi = col.clone().fold(f64::NEG_INFINITY, f64::max);
                out.log[j] = lo > 0.0 && (hi / lo).log10() > LOG_RHO_THRESHOLD;
            }
            let lg = out.log[j];
            let col = col.map(|x| if lg { x.ln() } else { x });
            let (o, s) = match mode {
                ScalingMode::ZScore => {
                    let mean = col.clone().sum::<f64>() / n;
                    let var = col.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
                    (mean, var.sqrt())
                }
                ScalingMode::MinMaxUnit | ScalingMode::MinMaxSymmetric => {
                    let lo = col.clone().fold(f64::INFINITY, f64::min);
                    let hi = col.fold(f64::NEG_INFINITY, f64::max);
                    if mode == ScalingMode::MinMaxUnit {
                        (lo, hi - lo)
                    } else {
                        (0.5 * (lo + hi), 0.5 * (hi - lo))
                    }
                }
            };
            out.offset[j] = o;
            if s > 1e-12 * o.abs().max(1e-300) && s.is_finite() {
                out.scale[j] = s;
            }
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.offset.len() != self.scale.len() || self.log.len() != self.scale.len() {
            return Err(Error::ModelLayout(String::from(
                "standardizer vectors differ in length",
            )));
        }
        if !self.scale.iter().all(|s| *s > 0.0 && s.is_finite())
            || !self.offset.iter().all(|o| o.is_finite())
        {
            return Err(Error::ModelLayout(String::from(
                "standardizer scales must be positive",
            )));
        }
        Ok(())
    }

    pub fn apply(&self, x: &mut [f64]) {
        let d = self.dim();
        for (i, v) in x.iter_mut().enumerate() {
            let j = i % d;
            let t = if self.log[j] { v.ln() } else { *v };
            *v = (t - self.offset[j]) / self.scale[j];
        }
    }

    pub fn invert(&self, z: &mut [f64]) {
        let d = self.dim();
        for (i, v) in z.iter_mut().enumerate() {
            let j = i % d;
            let t = *v * self.scale[j] + self.offset[j];
            *v = if self.log[j] { t.exp() } else { t };
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub layers: Vec<Layer>,
    pub input_scaling: Standardizer,
    pub output_scaling: Standardizer,
}

fn init_limit(act: Activation, fan_in: usize, fan_out: usize) -> f64 {
    match act {
        Activation::Relu => (6.0 / fan_in as f64).sqrt(),
        _ => (6.0 / (fan_in + fan_out) as f64).sqrt(),
    }
}

impl MlpModel {
    /// Random initial weights (Glorot-uniform for tanh and identity layers,
    /// He-uniform for relu), zero biases, identity standardizers.
    pub fn new(cfg: &MlpConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = rng_from_seed(cfg.init_seed);
        let mut dims = vec![cfg.input_dim];
        dims.extend(&cfg.hidden_layers);
        dims.push(cfg.output_dim);
        let n = dims.len() - 1;
        let mut layers = Vec::with_capacity(n);
        for k in 0..n {
            let act = if k + 1 == n {
                cfg.output_activation
            } else {
                cfg.hidden_activation
            };
            let mut layer = Layer::zeros(dims[k], dims[k + 1], act);
            let lim = init_limit(act, dims[k], dims[k + 1]);
            for w in &mut layer.weights {
                *w = rng.gen_range(-lim..lim);
            }
            layers.push(layer);
        }
        Ok(MlpModel {
            layers,
            input_scaling: Standardizer::identity(cfg.input_dim),
            output_scaling: Standardizer::identity(cfg.output_dim),
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers[..self.layers.len().saturating_sub(1)]
            .iter()
            .map(|l| l.outputs)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::ModelLayout(String::from("no layers")));
        }
        for (k, l) in self.layers.iter().enumerate() {
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(Error::ModelLayout(format!(
                    "layer {k} has inconsistent shape"
                )));
            }
            if k > 0 && self.layers[k - 1].outputs != l.inputs {
                return Err(Error::ModelLayout(format!(
                    "layer {k} does not chain with layer {}",
                    k - 1
                )));
            }
        }
        self.input_scaling.validate()?;
        self.output_scaling.validate()?;
        if self.input_scaling.dim() != self.input_dim()
            || self.output_scaling.dim() != self.output_dim()
        {
            return Err(Error::ModelLayout(String::from(
                "standardizer width does not match layers",
            )));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// All parameters, layer by layer, weights before biases.
    pub fn parameters(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            p.extend(&l.weights);
            p.extend(&l.bias);
        }
        p
    }

    pub fn set_parameters(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                expected: self.param_count(),
                got: p.len(),
            });
        }
        let mut at = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&p[at..at + nw]);
            at += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&p[at..at + nb]);
            at += nb;
        }
        Ok(())
    }

    /// Network output on already standardized input, still in standardized
    /// output units.
    pub fn forward_standardized(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: z.len(),
            });
        }
        let mut a = z.to_vec();
        let mut next = Vec::new();
        for l in &self.layers {
            l.forward_one(&a, &mut next);
            core::mem::swap(&mut a, &mut next);
        }
        Ok(a)
    }

    /// Raw input to raw output.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut z = x.to_vec();
        if z.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: z.len(),
            });
        }
        self.input_scaling.apply(&mut z);
        let mut y = self.forward_standardized(&z)?;
        self.output_scaling.invert(&mut y);
        Ok(y)
    }
}

pub(crate) mod gemm {
    /// `c = a * b^T + c * beta` for row-major `a (m x k)`, `b (n x k)`,
    /// `c (m x n)`.
    pub fn a_bt(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], beta: f64, c: &mut [f64]) {
        debug_assert!(a.len() >= m * k && b.len() >= n * k && c.len() >= m * n);
        // SAFETY: the slices cover the strided extents asserted above.
        unsafe {
            matrixmultiply::dgemm(
                m,
                k,
                n,
                1.0,
                a.as_ptr(),
                k as isize,
                1,
                b.as_ptr(),
                1,
                k as isize,
                beta,
                c.as_mut_ptr(),
                n as isize,
                1,
            );
        }
    }

    /// `c = a^T * b + c * beta` for row-major `a (k x m)`, `b (k x n)`.
    pub fn at_b(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], beta: f64, c: &mut [f64]) {
        debug_assert!(a.len() >= m * k && b.len() >= n * k && c.len() >= m * n);
        // SAFETY: as above.
        unsafe {
            matrixmultiply::dgemm(
                m,
                k,
                n,
                1.0,
                a.as_ptr(),
                1,
                m as isize,
                b.as_ptr(),
                n as isize,
                1,
                beta,
                c.as_mut_ptr(),
                n as isize,
                1,
            );
        }
    }

    /// `c = a * b + c * beta` for row-major `a (m x k)`, `b (k x n)`.
    pub fn a_b(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], beta: f64, c: &mut [f64]) {
        debug_assert!(a.len() >= m * k && b.len() >= n * k && c.len() >= m * n);
        // SAFETY: as above.
        unsafe {
            matrixmultiply::dgemm(
                m,
                k,
                n,
                1.0,
                a.as_ptr(),
                k as isize,
                1,
                b.as_ptr(),
                n as isize,
                1,
                beta,
                c.as_mut_ptr(),
                n as isize,
                1,
            );
        }
    }
}
