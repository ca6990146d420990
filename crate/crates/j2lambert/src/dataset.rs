//! Sample records as CSV: one record per row, fixed columns, LF endings,
//! floats with 17 significant digits.

use std::io::{Read, Write};
use std::path::Path;

use j2lambert_core::sample::SampleRecord;
use j2lambert_core::Vec3;

use crate::error::{Error, Result};

const VECTORS: [&str; 8] = ["r0", "v0", "rf", "vf", "vd", "rfd", "dv0", "drf"];

/// Header row in column order.
pub fn columns() -> Vec<String> {
    let mut cols = vec!["seed".to_string(), "revs".to_string(), "tof_s".to_string()];
    for v in VECTORS {
        for axis in ["x", "y", "z"] {
            cols.push(format!("{v}_{axis}"));
        }
    }
    cols
}

pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn vectors(rec: &SampleRecord) -> [Vec3; 8] {
    [
        rec.r0,
        rec.v0,
        rec.rf,
        rec.vf,
        rec.v_d,
        rec.r_fd,
        rec.delta_v0,
        rec.delta_rf,
    ]
}

pub fn write_records<W: Write>(out: W, records: &[SampleRecord]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(columns())?;
    let mut row = Vec::with_capacity(27);
    for rec in records {
        row.clear();
        row.push(rec.seed.to_string());
        row.push(rec.revs.to_string());
        row.push(fmt_f64(rec.tof));
        for v in vectors(rec) {
            row.extend(v.iter().map(|c| fmt_f64(*c)));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `origin` only labels errors.
pub fn read_records<R: Read>(input: R, origin: &Path) -> Result<Vec<SampleRecord>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header = r
        .headers()
        .map_err(|e| Error::format(origin, 1, e.to_string()))?
        .clone();
    let expected = columns();
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::format(origin, 1, "unexpected header"));
    }
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::format(origin, line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let bad = |field: &str| Error::format(origin, line, format!("bad value `{field}`"));
        let seed: u64 = row[0].parse().map_err(|_| bad(&row[0]))?;
        let revs: u32 = row[1].parse().map_err(|_| bad(&row[1]))?;
        let mut nums = [0.0f64; 25];
        for (slot, field) in nums.iter_mut().zip(row.iter().skip(2)) {
            *slot = field.parse().map_err(|_| bad(field))?;
        }
        let v = |k: usize| Vec3::new(nums[1 + 3 * k], nums[2 + 3 * k], nums[3 + 3 * k]);
        out.push(SampleRecord {
            seed,
            revs,
            tof: nums[0],
            r0: v(0),
            v0: v(1),
            rf: v(2),
            vf: v(3),
            v_d: v(4),
            r_fd: v(5),
            delta_v0: v(6),
            delta_rf: v(7),
        });
    }
    Ok(out)
}

pub fn save_dataset(path: &Path, records: &[SampleRecord]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_records(std::io::BufWriter::new(file), records).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format(path, 0, format!("{other:?}")),
    })
}

pub fn load_dataset(path: &Path) -> Result<Vec<SampleRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_records(std::io::BufReader::new(file), path)
}
