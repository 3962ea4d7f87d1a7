//! `epsharm mobius`: singular value decomposition of one matrix.

use epsharm::mobius::{is_rotation, su2_to_so3, svd, MobiusMatrix};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{real, reals};

pub const ROTATION_TOL: f64 = 1e-10;

pub fn run(cfg: &RunConfig) -> CliResult<Value> {
    let entries = cfg.matrix.ok_or_else(|| CliError::Config("no matrix given".into()))?;
    let m = MobiusMatrix::from_reals(entries).map_err(|e| CliError::Config(e.to_string()))?;
    let dec = svd(&m);
    let rotation = if is_rotation(&m, ROTATION_TOL) {
        let r = su2_to_so3(&m)?;
        let rows: Vec<Value> = r.matrix().row_iter().map(|row| reals(&[row[0], row[1], row[2]])).collect();
        Value::Array(rows)
    } else {
        Value::Null
    };
    Ok(json!({
        "command": "mobius",
        "input": reals(&entries),
        "normalized": reals(&m.to_reals()),
        "lambda": real(dec.lambda),
        "u": reals(&dec.u.to_reals()),
        "v": reals(&dec.v.to_reals()),
        "is_rotation": rotation != Value::Null,
        "rotation": rotation,
    }))
}
