use std::path::{Path, PathBuf};

use serde_json::{Number, Value};

use crate::error::{CliError, CliResult};

/// A real with 17 significant digits; non-finite values become `null`.
pub fn real(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(fmt_real(x).parse::<Number>().expect("scientific notation is valid JSON"))
    } else {
        Value::Null
    }
}

pub fn reals(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|x| real(*x)).collect())
}

pub fn fmt_real(x: f64) -> String {
    // Adding zero turns -0.0 into 0.0.
    format!("{:.16e}", x + 0.0)
}

pub fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

/// One header line and one line per row, comma separated, LF endings.
pub fn csv_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> CliResult<PathBuf> {
    let io = |path: &Path, source| CliError::Io { path: path.display().to_string(), source };
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for x in [std::f64::consts::PI, 1.0 / 3.0, -2.5e-300, 0.0, 8.0 * std::f64::consts::PI] {
            let text = serde_json::to_string(&real(x)).unwrap();
            assert_eq!(text.parse::<f64>().unwrap(), x);
            let digits: String = text.split('e').next().unwrap().chars().filter(char::is_ascii_digit).collect();
            assert_eq!(digits.len(), 17);
        }
        assert_eq!(real(f64::NAN), Value::Null);
    }

    #[test]
    fn csv_uses_lf() {
        let t = csv_text(&["a", "b"], &[vec!["1".into(), "2".into()]]);
        assert_eq!(t, "a,b\n1,2\n");
    }
}
