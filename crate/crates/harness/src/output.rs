//! Result files: trajectory CSV, verdict JSON and file digests.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use sobodecay::fit::{ClaimResult, NormTrajectory, SampleFlag};

pub const CSV_HEADER: &str = "t,quantity,label,value,flag";

/// 17 significant digits in scientific notation, locale independent.
pub fn format_value(x: f64) -> String {
    format!("{x:.16e}")
}

/// Appends trajectory rows to a CSV file, flushing after every trajectory so
/// a crashed run leaves every completed trajectory on disk.
pub struct CsvSink {
    out: BufWriter<File>,
    rows: usize,
}

impl CsvSink {
    pub fn create(path: &Path) -> io::Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        out.write_all(CSV_HEADER.as_bytes())?;
        out.write_all(b"\n")?;
        out.flush()?;
        Ok(Self { out, rows: 0 })
    }

    pub fn write(&mut self, traj: &NormTrajectory) -> io::Result<()> {
        for s in traj.samples() {
            writeln!(
                self.out,
                "{},{},{},{},{}",
                format_value(s.t),
                csv_field(&traj.quantity),
                csv_field(&traj.label),
                format_value(s.value),
                s.flag.as_str()
            )?;
            self.rows += 1;
        }
        self.out.flush()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn split_csv_line(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' if quoted && chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            '"' => quoted = !quoted,
            ',' if !quoted => fields.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    fields.push(cur);
    fields
}

fn parse_flag(s: &str) -> Option<SampleFlag> {
    [SampleFlag::Ok, SampleFlag::Window, SampleFlag::Quality]
        .into_iter()
        .find(|f| f.as_str() == s)
}

/// Reads a trajectory CSV back, one trajectory per `(quantity, label)` in
/// order of first appearance.
pub fn read_trajectories(path: &Path) -> Result<Vec<NormTrajectory>, String> {
    let file = File::open(path).map_err(|e| format!("cannot open {}: {e}", path.display()))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .transpose()
        .map_err(|e| e.to_string())?
        .ok_or_else(|| format!("{} is empty", path.display()))?;
    if header.trim_end() != CSV_HEADER {
        return Err(format!("{}: header must be `{CSV_HEADER}`", path.display()));
    }
    let mut out: Vec<NormTrajectory> = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        let n = i + 2;
        if line.is_empty() {
            continue;
        }
        let f = split_csv_line(&line);
        if f.len() != 5 {
            return Err(format!("{}:{n}: expected 5 fields, found {}", path.display(), f.len()));
        }
        let bad = |what: &str| format!("{}:{n}: invalid {what}", path.display());
        let t: f64 = f[0].parse().map_err(|_| bad("time"))?;
        let v: f64 = f[3].parse().map_err(|_| bad("value"))?;
        let flag = parse_flag(&f[4]).ok_or_else(|| bad("flag"))?;
        let pos = out.iter().position(|tr| tr.quantity == f[1] && tr.label == f[2]);
        let traj = match pos {
            Some(p) => &mut out[p],
            None => {
                out.push(NormTrajectory::new(f[1].clone(), f[2].clone()));
                out.last_mut().expect("just pushed")
            }
        };
        traj.push(t, v, flag).map_err(|e| format!("{}:{n}: {e}", path.display()))?;
    }
    Ok(out)
}

fn number(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

/// One verdict object per claim.
pub fn verdicts_json(claims: &[ClaimResult]) -> Value {
    Value::Array(
        claims
            .iter()
            .map(|c| {
                json!({
                    "claim_id": c.claim_id,
                    "paper_ref": c.reference,
                    "mode": c.mode,
                    "predicted": number(c.predicted),
                    "measured": number(c.measured),
                    "tol": number(c.tol),
                    "verdict": c.verdict.as_str(),
                })
            })
            .collect(),
    )
}

pub fn json_number(x: f64) -> Value {
    number(x)
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json(path: &Path, value: &Value) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    std::fs::write(path, text)
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_format_has_seventeen_digits() {
        assert_eq!(format_value(0.1), "1.0000000000000001e-1");
        assert_eq!(format_value(-2.5), "-2.5000000000000000e0");
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut a = NormTrajectory::new("grad_norm[ell=0]", "x,y");
        a.push(0.0, 1.0, SampleFlag::Ok).unwrap();
        a.push(2.0, f64::NAN, SampleFlag::Ok).unwrap();
        let b = NormTrajectory::from_samples("mass", "x,y", [(1.0, 3.0)]).unwrap();
        let mut sink = CsvSink::create(&path).unwrap();
        sink.write(&a).unwrap();
        sink.write(&b).unwrap();
        assert_eq!(sink.rows(), 3);
        drop(sink);
        let back = read_trajectories(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].label, "x,y");
        assert_eq!(back[0].samples()[1].flag, SampleFlag::Quality);
        assert_eq!(back[1].samples()[0].value, 3.0);
    }

    #[test]
    fn non_finite_numbers_become_null() {
        let c = ClaimResult::upper_bound("a", "b", 1.0, f64::NAN, 0.0);
        let v = verdicts_json(&[c]);
        assert_eq!(v[0]["measured"], Value::Null);
        assert_eq!(v[0]["verdict"], "fail");
    }
}
