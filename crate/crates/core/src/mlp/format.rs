//! Versioned plain-text model format.
//!
//! ```text
//! j2lambert-mlp 1
//! input_dim 10
//! output_dim 3
//! hidden 50 50
//! hidden_activation tanh
//! output_activation relu
//! input_offset ...
//! input_scale ...
//! input_log 0 0 1 ...
//! output_offset ...
//! output_scale ...
//! output_log 1 0 0
//! layer 0 10 50 tanh
//! w ...            (one line per output neuron)
//! b ...
//! end
//! ```
//!
//! Numbers are written with 17 significant digits.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use super::{Activation, Layer, MlpModel, Standardizer};
use crate::error::{Error, Result};

pub const FORMAT_TAG: &str = "j2lambert-mlp";
const VERSION: u32 = 1;

fn push_flags(out: &mut String, key: &str, xs: &[bool]) {
    out.push_str(key);
    for x in xs {
        out.push_str(if *x { " 1" } else { " 0" });
    }
    out.push('\n');
}

fn push_row(out: &mut String, key: &str, xs: &[f64]) {
    out.push_str(key);
    for x in xs {
        let _ = write!(out, " {x:.16e}");
    }
    out.push('\n');
}

pub fn model_to_text(model: &MlpModel) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{FORMAT_TAG} {VERSION}");
    let _ = writeln!(s, "input_dim {}", model.input_dim());
    let _ = writeln!(s, "output_dim {}", model.output_dim());
    s.push_str("hidden");
    for w in model.hidden_widths() {
        let _ = write!(s, " {w}");
    }
    s.push('\n');
    let nl = model.layers.len();
    let hidden_act = if nl > 1 {
        model.layers[0].activation
    } else {
        Activation::Identity
    };
    let _ = writeln!(s, "hidden_activation {hidden_act}");
    let _ = writeln!(s, "output_activation {}", model.layers[nl - 1].activation);
    push_row(&mut s, "input_offset", &model.input_scaling.offset);
    push_row(&mut s, "input_scale", &model.input_scaling.scale);
    push_flags(&mut s, "input_log", &model.input_scaling.log);
    push_row(&mut s, "output_offset", &model.output_scaling.offset);
    push_row(&mut s, "output_scale", &model.output_scaling.scale);
    push_flags(&mut s, "output_log", &model.output_scaling.log);
    for (k, l) in model.layers.iter().enumerate() {
        let _ = writeln!(s, "layer {k} {} {} {}", l.inputs, l.outputs, l.activation);
        for row in l.weights.chunks(l.inputs) {
            push_row(&mut s, "w", row);
        }
        push_row(&mut s, "b", &l.bias);
    }
    s.push_str("end\n");
    s
}

struct Lines<'a> {
    text: &'a str,
    pos: usize,
    line: usize,
    /// Start of the most recently returned line.
    last: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, message: impl ToString) -> Error {
        Error::Parse {
            line: self.line,
            offset: self.pos,
            message: message.to_string(),
        }
    }

    /// Next non-empty line, split into its key and remaining fields.
    fn next(&mut self) -> Result<(&'a str, Vec<&'a str>)> {
        loop {
            if self.pos >= self.text.len() {
                return Err(self.err("unexpected end of file"));
            }
            let rest = &self.text[self.pos..];
            let len = rest.find('\n').map_or(rest.len(), |i| i + 1);
            let line = rest[..len].trim();
            self.line += 1;
            if line.is_empty() {
                self.pos += len;
                continue;
            }
            let mut it = line.split_ascii_whitespace();
            let key = it.next().unwrap_or("");
            let fields = it.collect();
            self.last = self.pos;
            self.pos += len;
            return Ok((key, fields));
        }
    }

    fn expect(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let (k, f) = self.next()?;
        if k != key {
            return Err(self.err_last(format!("expected '{key}', found '{k}'")));
        }
        Ok(f)
    }

    fn err_last(&self, message: impl ToString) -> Error {
        Error::Parse {
            line: self.line,
            offset: self.last,
            message: message.to_string(),
        }
    }

    fn usize_field(&self, f: &[&str], i: usize) -> Result<usize> {
        f.get(i)
            .ok_or_else(|| self.err_last("missing field"))?
            .parse()
            .map_err(|_| self.err_last(format!("invalid integer '{}'", f[i])))
    }

    fn floats(&self, f: &[&str], n: usize) -> Result<Vec<f64>> {
        if f.len() != n {
            return Err(self.err_last(format!("expected {n} values, found {}", f.len())));
        }
        f.iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| self.err_last(format!("invalid number '{s}'")))
            })
            .collect()
    }

    fn flags(&self, f: &[&str], n: usize) -> Result<Vec<bool>> {
        if f.len() != n {
            return Err(self.err_last(format!("expected {n} flags, found {}", f.len())));
        }
        f.iter()
            .map(|s| match *s {
                "0" => Ok(false),
                "1" => Ok(true),
                _ => Err(self.err_last(format!("invalid flag '{s}'"))),
            })
            .collect()
    }

    fn activation(&self, s: Option<&&str>) -> Result<Activation> {
        s.ok_or_else(|| self.err_last("missing activation"))?
            .parse()
            .map_err(|_| self.err_last("unknown activation"))
    }
}

pub fn model_from_text(text: &str) -> Result<MlpModel> {
    let mut p = Lines {
        text,
        pos: 0,
        line: 0,
        last: 0,
    };
    let head = p.expect(FORMAT_TAG)?;
    let version = p.usize_field(&head, 0)?;
    if version != VERSION as usize {
        return Err(p.err_last(format!("unsupported format version {version}")));
    }
    let f = p.expect("input_dim")?;
    let di = p.usize_field(&f, 0)?;
    let f = p.expect("output_dim")?;
    let d_out = p.usize_field(&f, 0)?;
    let f = p.expect("hidden")?;
    let hidden = (0..f.len())
        .map(|i| p.usize_field(&f, i))
        .collect::<Result<Vec<_>>>()?;
    let f = p.expect("hidden_activation")?;
    p.activation(f.first())?;
    let f = p.expect("output_activation")?;
    p.activation(f.first())?;
    let f = p.expect("input_offset")?;
    let in_off = p.floats(&f, di)?;
    let f = p.expect("input_scale")?;
    let in_scale = p.floats(&f, di)?;
    let f = p.expect("input_log")?;
    let in_log = p.flags(&f, di)?;
    let f = p.expect("output_offset")?;
    let out_off = p.floats(&f, d_out)?;
    let f = p.expect("output_scale")?;
    let out_scale = p.floats(&f, d_out)?;
    let f = p.expect("output_log")?;
    let out_log = p.flags(&f, d_out)?;

    let mut dims = alloc::vec![di];
    dims.extend(&hidden);
    dims.push(d_out);
    let mut layers = Vec::with_capacity(dims.len() - 1);
    for k in 0..dims.len() - 1 {
        let f = p.expect("layer")?;
        let (idx, ni, no) = (
            p.usize_field(&f, 0)?,
            p.usize_field(&f, 1)?,
            p.usize_field(&f, 2)?,
        );
        if idx != k || ni != dims[k] || no != dims[k + 1] {
            return Err(p.err_last("layer header does not match the declared shape"));
        }
        let act = p.activation(f.get(3))?;
        let mut layer = Layer::zeros(ni, no, act);
        for j in 0..no {
            let f = p.expect("w")?;
            let row = p.floats(&f, ni)?;
            layer.weights[j * ni..(j + 1) * ni].copy_from_slice(&row);
        }
        let f = p.expect("b")?;
        layer.bias = p.floats(&f, no)?;
        layers.push(layer);
    }
    p.expect("end")?;
    let model = MlpModel {
        layers,
        input_scaling: Standardizer {
            offset: in_off,
            scale: in_scale,
            log: in_log,
        },
        output_scaling: Standardizer {
            offset: out_off,
            scale: out_scale,
            log: out_log,
        },
    };
    model.validate().map_err(|e| p.err_last(e))?;
    Ok(model)
}
