//! Model files and training-history CSV.

use std::io::Write;
use std::path::Path;

use j2lambert_core::mlp::{model_from_text, model_to_text, MlpModel, TrainHistory};

use crate::dataset::fmt_f64;
use crate::error::{Error, Result};

pub fn save_model(path: &Path, model: &MlpModel) -> Result<()> {
    std::fs::write(path, model_to_text(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<MlpModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_text(&text).map_err(|source| Error::Model {
        path: path.to_path_buf(),
        source,
    })
}

/// `epoch,train_mse,val_mse`; `val_mse` is empty without a validation split.
pub fn write_history<W: Write>(mut out: W, history: &TrainHistory) -> std::io::Result<()> {
    writeln!(out, "epoch,train_mse,val_mse")?;
    for (i, t) in history.train_mse.iter().enumerate() {
        let v = history
            .val_mse
            .get(i)
            .map(|v| fmt_f64(*v))
            .unwrap_or_default();
        writeln!(out, "{i},{},{v}", fmt_f64(*t))?;
    }
    Ok(())
}

pub fn save_history(path: &Path, history: &TrainHistory) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_history(&mut w, history)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}
