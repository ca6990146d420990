//! Per-variable summaries and input/output correlation screening of sample
//! forms.

use alloc::string::String;
use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::sample::{project_form_with_radius, SampleForm, SampleRecord};

/// Rows whose entries all fall below this magnitude are flagged as weak.
pub const WEAK_CORRELATION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnStats {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    /// `log10(max|X| / min nonzero |X|)`; `None` for an all-zero column.
    pub rho: Option<f64>,
    pub n: usize,
}

/// Like [`summary_stats`] but reports an all-zero column with `rho = None`.
pub fn column_stats(xs: &[f64]) -> Result<ColumnStats> {
    if xs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let max = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let min = xs
        .iter()
        .map(|x| x.abs())
        .filter(|&a| a > 0.0)
        .fold(f64::INFINITY, f64::min);
    let rho = if max > 0.0 {
        Some((max / min).log10())
    } else {
        None
    };
    Ok(ColumnStats {
        mean,
        std: var.sqrt(),
        rho,
        n: xs.len(),
    })
}

pub fn summary_stats(xs: &[f64]) -> Result<ColumnStats> {
    let s = column_stats(xs)?;
    if s.rho.is_none() {
        return Err(Error::UndefinedRho);
    }
    Ok(s)
}

fn column(rows: &[Vec<f64>], j: usize) -> Vec<f64> {
    rows.iter().map(|r| r[j]).collect()
}

fn check_rows(rows: &[Vec<f64>]) -> Result<usize> {
    let p = rows.first().map(|r| r.len()).ok_or(Error::EmptyInput)?;
    for r in rows {
        if r.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: r.len(),
            });
        }
    }
    Ok(p)
}

/// Population Pearson coefficients, `q x p` for `n x p` inputs and `n x q`
/// outputs (row-major samples). Entries involving a zero-variance column are
/// `None`.
pub fn pearson_matrix(inputs: &[Vec<f64>], outputs: &[Vec<f64>]) -> Result<Vec<Vec<Option<f64>>>> {
    if inputs.len() != outputs.len() {
        return Err(Error::DimensionMismatch {
            expected: inputs.len(),
            got: outputs.len(),
        });
    }
    if inputs.len() < 2 {
        return Err(Error::EmptyInput);
    }
    let p = check_rows(inputs)?;
    let q = check_rows(outputs)?;
    let n = inputs.len() as f64;

    let centered = |rows: &[Vec<f64>], j: usize| {
        let c = column(rows, j);
        let mean = c.iter().sum::<f64>() / n;
        let c: Vec<f64> = c.into_iter().map(|x| x - mean).collect();
        let sd = (c.iter().map(|x| x * x).sum::<f64>() / n).sqrt();
        (c, sd)
    };
    let xs: Vec<_> = (0..p).map(|j| centered(inputs, j)).collect();
    let ys: Vec<_> = (0..q).map(|j| centered(outputs, j)).collect();

    let mut out = Vec::with_capacity(q);
    for (y, sy) in &ys {
        let mut row = Vec::with_capacity(p);
        for (x, sx) in &xs {
            if *sx == 0.0 || *sy == 0.0 {
                row.push(None);
                continue;
            }
            let cov = x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / n;
            row.push(Some((cov / (sx * sy)).clamp(-1.0, 1.0)));
        }
        out.push(row);
    }
    Ok(out)
}

/// True when every defined entry of the row is below the weak threshold.
pub fn is_weak_row(row: &[Option<f64>], threshold: f64) -> bool {
    row.iter().flatten().all(|r| r.abs() < threshold)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub form: SampleForm,
    pub input_names: Vec<String>,
    pub output_names: Vec<String>,
    /// Outputs by inputs.
    pub matrix: Vec<Vec<Option<f64>>>,
    /// Per output row: all `|R|` below [`WEAK_CORRELATION`].
    pub weak_rows: Vec<bool>,
}

impl CorrelationReport {
    pub fn weak_count(&self) -> usize {
        self.weak_rows.iter().filter(|w| **w).count()
    }

    /// Diagonal dominance of the 3x3 block starting at input column `start`:
    /// the mean over rows of `|R_ii|` minus the largest off-diagonal `|R_ij|`.
    pub fn block_dominance(&self, start: usize) -> Option<f64> {
        let mut total = 0.0;
        for i in 0..3 {
            let row = self.matrix.get(i)?;
            let diag = row.get(start + i)?.map(f64::abs)?;
            let mut off = 0.0f64;
            for j in 0..3 {
                if j != i {
                    off = off.max(row.get(start + j)?.map_or(0.0, f64::abs));
                }
            }
            total += diag - off;
        }
        Some(total / 3.0)
    }

    /// Best dominance among the velocity and terminal-difference blocks.
    pub fn dominance(&self) -> Option<f64> {
        dominance_blocks(self.form)
            .iter()
            .filter_map(|&s| self.block_dominance(s))
            .fold(None, |m: Option<f64>, d| Some(m.map_or(d, |m| m.max(d))))
    }

    /// Sum of the positive block dominances.
    pub fn total_dominance(&self) -> f64 {
        dominance_blocks(self.form)
            .iter()
            .filter_map(|&s| self.block_dominance(s))
            .map(|d| d.max(0.0))
            .sum()
    }
}

/// Input column offsets of the `v_d` and `Δr_f` blocks of a form.
pub fn dominance_blocks(form: SampleForm) -> &'static [usize] {
    match form {
        SampleForm::VCar | SampleForm::VSph => &[],
        SampleForm::Dv1Car | SampleForm::Dv1Sph => &[3],
        SampleForm::Dv2Car | SampleForm::Dv2Sph => &[3, 6],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FormScreening {
    pub input_stats: Vec<ColumnStats>,
    pub output_stats: Vec<ColumnStats>,
    pub correlation: CorrelationReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScreeningReport {
    pub forms: Vec<FormScreening>,
    /// Indices into `forms`, best first.
    pub ranking: Vec<usize>,
}

impl ScreeningReport {
    pub fn ranked_forms(&self) -> Vec<SampleForm> {
        self.ranking
            .iter()
            .map(|&i| self.forms[i].correlation.form)
            .collect()
    }

    pub fn get(&self, form: SampleForm) -> Option<&FormScreening> {
        self.forms.iter().find(|f| f.correlation.form == form)
    }
}

pub fn correlation_report(
    form: SampleForm,
    inputs: &[Vec<f64>],
    outputs: &[Vec<f64>],
) -> Result<CorrelationReport> {
    let matrix = pearson_matrix(inputs, outputs)?;
    let weak_rows = matrix
        .iter()
        .map(|r| is_weak_row(r, WEAK_CORRELATION))
        .collect();
    Ok(CorrelationReport {
        form,
        input_names: form.input_names(),
        output_names: form.output_names(),
        matrix,
        weak_rows,
    })
}

/// Orders forms by fewest weak output rows, then by highest block dominance
/// (forms without a block last), then by summed dominance, then by form order.
pub fn rank_forms(reports: &[CorrelationReport]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..reports.len()).collect();
    idx.sort_by(|&a, &b| {
        let (ra, rb) = (&reports[a], &reports[b]);
        ra.weak_count()
            .cmp(&rb.weak_count())
            .then_with(|| {
                let da = ra.dominance().unwrap_or(f64::NEG_INFINITY);
                let db = rb.dominance().unwrap_or(f64::NEG_INFINITY);
                db.total_cmp(&da)
            })
            .then_with(|| rb.total_dominance().total_cmp(&ra.total_dominance()))
            .then_with(|| ra.form.cmp(&rb.form))
    });
    idx
}

pub fn form_screening_report(
    records: &[SampleRecord],
    forms: &[SampleForm],
    body_radius: f64,
) -> Result<ScreeningReport> {
    if records.is_empty() || forms.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut out = Vec::with_capacity(forms.len());
    for &form in forms {
        let (inputs, outputs): (Vec<Vec<f64>>, Vec<Vec<f64>>) = records
            .iter()
            .map(|r| {
                let (x, y) = project_form_with_radius(r, form, body_radius);
                (x, y.to_vec())
            })
            .unzip();
        let input_stats = (0..form.input_dim())
            .map(|j| column_stats(&column(&inputs, j)))
            .collect::<Result<_>>()?;
        let output_stats = (0..form.output_dim())
            .map(|j| column_stats(&column(&outputs, j)))
            .collect::<Result<_>>()?;
        let correlation = if records.len() >= 2 {
            correlation_report(form, &inputs, &outputs)?
        } else {
            let matrix = alloc::vec![alloc::vec![None; form.input_dim()]; form.output_dim()];
            CorrelationReport {
                form,
                input_names: form.input_names(),
                output_names: form.output_names(),
                weak_rows: alloc::vec![true; form.output_dim()],
                matrix,
            }
        };
        out.push(FormScreening {
            input_stats,
            output_stats,
            correlation,
        });
    }
    let reports: Vec<CorrelationReport> = out.iter().map(|f| f.correlation.clone()).collect();
    let ranking = rank_forms(&reports);
    Ok(ScreeningReport {
        forms: out,
        ranking,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn small_columns() {
        let s = summary_stats(&[1.0, 10.0, 100.0]).unwrap();
        assert!((s.mean - 37.0).abs() < 1e-12);
        assert!((s.std - (5994.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((s.rho.unwrap() - 2.0).abs() < 1e-15);
        let s = summary_stats(&[5.0, 5.0]).unwrap();
        assert_eq!((s.std, s.rho), (0.0, Some(0.0)));
        assert_eq!(summary_stats(&[0.0, 0.0]), Err(Error::UndefinedRho));
        assert_eq!(summary_stats(&[]), Err(Error::EmptyInput));
    }

    #[test]
    fn perfect_correlations() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 3.0]).collect();
        let y: Vec<Vec<f64>> = x.iter().map(|r| vec![2.0 * r[0], -r[0]]).collect();
        let m = pearson_matrix(&x, &y).unwrap();
        assert!((m[0][0].unwrap() - 1.0).abs() < 1e-15);
        assert!((m[1][0].unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(m[0][1], None);
    }
}
