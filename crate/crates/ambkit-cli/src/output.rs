use anyhow::{Context, Result};
use serde::Serialize;
use std::path::{Path, PathBuf};

/// `%.12g`: twelve significant digits, trailing zeros dropped.
pub fn g12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.11e}", x);
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}{:02}", trim(mant.to_string()), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim(s: String) -> String {
    if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        if t == "-0" {
            "0".into()
        } else {
            t.to_string()
        }
    } else {
        s
    }
}

pub fn join(v: &[f64]) -> String {
    v.iter().map(|x| g12(*x)).collect::<Vec<_>>().join(";")
}

/// A header plus string rows, written as CSV to a file or to stdout.
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&'static str]) -> Self {
        Table { name: name.to_string(), header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<String>,
    pub seed: u64,
    pub tol: f64,
    pub jobs: usize,
    pub out: Option<String>,
    pub artifacts: Vec<String>,
    pub version: &'static str,
}

/// Writes each table to `out/<name>.csv`, or prints it when no directory
/// is given; then writes the manifest next to them (stderr without `out`).
pub fn emit(out: Option<&Path>, tables: &[Table], mut manifest: RunManifest) -> Result<()> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            for t in tables {
                let path: PathBuf = dir.join(format!("{}.csv", t.name));
                std::fs::write(&path, t.to_csv()?).with_context(|| format!("writing {}", path.display()))?;
                manifest.artifacts.push(path.display().to_string());
            }
            let path = dir.join("manifest.json");
            std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
                .with_context(|| format!("writing {}", path.display()))?;
        }
        None => {
            for t in tables {
                print!("{}", t.to_csv()?);
                manifest.artifacts.push(format!("stdout:{}", t.name));
            }
            eprintln!("{}", serde_json::to_string(&manifest)?);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::g12;

    #[test]
    fn twelve_digits() {
        assert_eq!(g12(90.0), "90");
        assert_eq!(g12(1.0 / 3.0), "0.333333333333");
        assert_eq!(g12(-720.0000000001), "-720");
        assert_eq!(g12(1.5e-7), "1.5e-07");
        assert_eq!(g12(123456789012345.0), "1.23456789012e+14");
        assert_eq!(g12(-1e-20), "-1e-20");
        assert_eq!(g12(0.1 + 0.2), "0.3");
    }
}
