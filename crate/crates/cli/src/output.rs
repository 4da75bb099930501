//! Output files. Every file carries the config hash, library version and
//! seed: JSON files in a `meta` object, CSV files in a leading `#` line.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct Meta {
    pub command: &'static str,
    pub config_hash: String,
    pub version: &'static str,
    pub seed: u64,
}

/// `%.12g`.
pub fn fmt_g(x: f64) -> String {
    const P: i32 = 12;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        // also for -0, which empty float sums produce
        return "0".into();
    }
    // the exponent after rounding to P significant digits
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= P {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        strip_zeros(&format!("{:.*}", (P - 1 - exp) as usize, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Blank for a missing value.
pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_g).unwrap_or_default()
}

pub struct OutDir {
    dir: PathBuf,
    meta: Meta,
    written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(dir: &Path, meta: Meta) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(OutDir {
            dir: dir.to_path_buf(),
            meta,
            written: Vec::new(),
        })
    }

    pub fn json<T: Serialize>(&mut self, name: &str, body: &T) -> std::io::Result<()> {
        #[derive(Serialize)]
        struct Doc<'a, T> {
            meta: &'a Meta,
            #[serde(flatten)]
            body: &'a T,
        }
        let text = serde_json::to_string_pretty(&Doc { meta: &self.meta, body }).map_err(std::io::Error::other)?;
        self.write(name, text + "\n")
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> std::io::Result<()> {
        let mut text = String::new();
        let meta = serde_json::to_string(&self.meta).map_err(std::io::Error::other)?;
        writeln!(text, "# {meta}").expect("string write");
        writeln!(text, "{}", header.join(",")).expect("string write");
        for r in rows {
            writeln!(text, "{}", r.join(",")).expect("string write");
        }
        self.write(name, text)
    }

    fn write(&mut self, name: &str, text: String) -> std::io::Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, text)?;
        self.written.push(path);
        Ok(())
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

#[cfg(test)]
mod tests {
    use super::fmt_g;

    #[test]
    fn matches_printf_g() {
        let cases = [
            (0.0, "0"),
            (-0.0, "0"),
            (1.0, "1"),
            (-0.169899036795, "-0.169899036795"),
            (2f64.ln(), "0.69314718056"),
            (1e-5, "1e-05"),
            (1.5e-5, "1.5e-05"),
            (123456789012.0, "123456789012"),
            (1234567890123.0, "1.23456789012e+12"),
            (0.0001, "0.0001"),
            (f64::NEG_INFINITY, "-inf"),
            (99.99999999999999, "100"),
        ];
        for (x, s) in cases {
            assert_eq!(fmt_g(x), s, "{x}");
        }
    }
}
