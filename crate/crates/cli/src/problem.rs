//! Problem files: JSON descriptions of state families, operator families
//! and channel families.
//!
//! ```json
//! {
//!   "schema_version": "1",
//!   "kind": "states",
//!   "matrices": [[[[1, 0], [0, 0]], [[0, 0], [0, 0]]], ...],
//!   "priors": [0.5, 0.5],
//!   "params": { "eta": [0, 0.3], "alpha": 2 }
//! }
//! ```
//!
//! Complex entries are `[re, im]` pairs, matrices are row-major. Channel
//! files use `"channels"` instead of `"matrices"`, each entry either
//! `{"dim_in": .., "dim_out": .., "kraus": [matrix, ...]}` or a named qubit
//! channel `{"name": "depolarizing" | "bit_flip" | "identity", "param": ..}`.

use revud_core::channelgame::Channel;
use revud_core::linalg::{c64, CMatrix};
use revud_core::{DensityMatrix, HermitianOperator};
use serde_json::{Map, Value};

use crate::CliError;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FileParams {
    pub eta: Option<Vec<f64>>,
    pub alpha: Option<f64>,
    pub l: Option<u32>,
    pub n: Option<Vec<usize>>,
    pub eps: Option<f64>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
}

#[derive(Clone, Debug)]
pub enum Payload {
    States(Vec<DensityMatrix>),
    Operators(Vec<HermitianOperator>),
    Channels(Vec<Channel>),
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::States(_) => "states",
            Payload::Operators(_) => "operators",
            Payload::Channels(_) => "channels",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Payload::States(s) => s.len(),
            Payload::Operators(s) => s.len(),
            Payload::Channels(s) => s.len(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Problem {
    pub payload: Payload,
    pub priors: Option<Vec<f64>>,
    pub params: FileParams,
}

fn input_err(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{path}: {msg}"))
}

fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, CliError> {
    v.as_array().ok_or_else(|| input_err(path, "expected an array"))
}

fn as_f64(v: &Value, path: &str) -> Result<f64, CliError> {
    let x = v.as_f64().ok_or_else(|| input_err(path, "expected a number"))?;
    if !x.is_finite() {
        return Err(input_err(path, "expected a finite number"));
    }
    Ok(x)
}

fn as_usize(v: &Value, path: &str) -> Result<usize, CliError> {
    v.as_u64().map(|x| x as usize).ok_or_else(|| input_err(path, "expected a nonnegative integer"))
}

/// Numbers or lists of numbers.
fn f64_list(v: &Value, path: &str) -> Result<Vec<f64>, CliError> {
    match v {
        Value::Array(a) => a.iter().enumerate().map(|(i, x)| as_f64(x, &format!("{path}[{i}]"))).collect(),
        _ => Ok(vec![as_f64(v, path)?]),
    }
}

fn usize_list(v: &Value, path: &str) -> Result<Vec<usize>, CliError> {
    match v {
        Value::Array(a) => a.iter().enumerate().map(|(i, x)| as_usize(x, &format!("{path}[{i}]"))).collect(),
        _ => Ok(vec![as_usize(v, path)?]),
    }
}

pub fn parse_matrix(v: &Value, path: &str) -> Result<CMatrix, CliError> {
    let rows = as_array(v, path)?;
    let nr = rows.len();
    if nr == 0 {
        return Err(input_err(path, "empty matrix"));
    }
    let mut nc = None;
    let mut data = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let rp = format!("{path}[{i}]");
        let row = as_array(row, &rp)?;
        match nc {
            None => nc = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(input_err(&rp, format!("row has {} entries, expected {c}", row.len())))
            }
            _ => {}
        }
        for (j, z) in row.iter().enumerate() {
            let zp = format!("{rp}[{j}]");
            let pair =
                z.as_array().filter(|p| p.len() == 2).ok_or_else(|| input_err(&zp, "expected an [re, im] pair"))?;
            data.push(c64(as_f64(&pair[0], &format!("{zp}[0]"))?, as_f64(&pair[1], &format!("{zp}[1]"))?));
        }
    }
    let nc = nc.unwrap_or(0);
    if nc == 0 {
        return Err(input_err(path, "empty matrix"));
    }
    Ok(CMatrix::from_row_slice(nr, nc, &data))
}

fn parse_hermitian(v: &Value, path: &str) -> Result<HermitianOperator, CliError> {
    let m = parse_matrix(v, path)?;
    if m.nrows() != m.ncols() {
        return Err(input_err(path, format!("matrix is {}x{}, expected square", m.nrows(), m.ncols())));
    }
    HermitianOperator::new(m).map_err(|e| input_err(path, e))
}

fn parse_channel(v: &Value, path: &str) -> Result<Channel, CliError> {
    let obj = v.as_object().ok_or_else(|| input_err(path, "expected an object"))?;
    if let Some(name) = obj.get("name") {
        let name = name.as_str().ok_or_else(|| input_err(&format!("{path}.name"), "expected a string"))?;
        let param = obj.get("param").map(|p| as_f64(p, &format!("{path}.param"))).transpose()?;
        let need = |p: Option<f64>| p.ok_or_else(|| input_err(&format!("{path}.param"), "missing"));
        let ch = match name {
            "identity" => Ok(Channel::identity(2)),
            "depolarizing" => Channel::depolarizing(need(param)?),
            "bit_flip" => Channel::bit_flip(need(param)?),
            other => return Err(input_err(&format!("{path}.name"), format!("unknown channel '{other}'"))),
        };
        return ch.map_err(|e| input_err(path, e));
    }
    let dim_in = as_usize(
        obj.get("dim_in").ok_or_else(|| input_err(&format!("{path}.dim_in"), "missing"))?,
        &format!("{path}.dim_in"),
    )?;
    let dim_out = as_usize(
        obj.get("dim_out").ok_or_else(|| input_err(&format!("{path}.dim_out"), "missing"))?,
        &format!("{path}.dim_out"),
    )?;
    let kp = format!("{path}.kraus");
    let kraus = as_array(obj.get("kraus").ok_or_else(|| input_err(&kp, "missing"))?, &kp)?;
    let mut ks = Vec::with_capacity(kraus.len());
    for (i, k) in kraus.iter().enumerate() {
        let p = format!("{kp}[{i}]");
        let m = parse_matrix(k, &p)?;
        if m.nrows() != dim_out || m.ncols() != dim_in {
            return Err(input_err(
                &p,
                format!("Kraus operator is {}x{}, expected {dim_out}x{dim_in}", m.nrows(), m.ncols()),
            ));
        }
        ks.push(m);
    }
    Channel::new(dim_in, dim_out, ks).map_err(|e| input_err(path, e))
}

fn parse_params(v: &Value) -> Result<FileParams, CliError> {
    let obj = v.as_object().ok_or_else(|| input_err("params", "expected an object"))?;
    let mut p = FileParams::default();
    for (k, x) in obj {
        let path = format!("params.{k}");
        match k.as_str() {
            "eta" => p.eta = Some(f64_list(x, &path)?),
            "alpha" => p.alpha = Some(as_f64(x, &path)?),
            "l" => p.l = Some(as_usize(x, &path)? as u32),
            "n" => p.n = Some(usize_list(x, &path)?),
            "eps" => p.eps = Some(as_f64(x, &path)?),
            "seed" => p.seed = Some(x.as_u64().ok_or_else(|| input_err(&path, "expected a nonnegative integer"))?),
            "tol" => p.tol = Some(as_f64(x, &path)?),
            _ => return Err(input_err(&path, "unknown parameter")),
        }
    }
    Ok(p)
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value, CliError> {
    obj.get(key).ok_or_else(|| input_err(key, "missing"))
}

pub fn parse_problem(text: &str) -> Result<Problem, CliError> {
    let v: Value = serde_json::from_str(text).map_err(|e| CliError::Input(format!("invalid JSON: {e}")))?;
    let obj = v.as_object().ok_or_else(|| input_err("$", "expected an object"))?;
    for k in obj.keys() {
        if !["schema_version", "kind", "matrices", "channels", "priors", "params"].contains(&k.as_str()) {
            return Err(input_err(k, "unknown field"));
        }
    }
    let version =
        field(obj, "schema_version")?.as_str().ok_or_else(|| input_err("schema_version", "expected a string"))?;
    if version != SCHEMA_VERSION {
        return Err(input_err(
            "schema_version",
            format!("unsupported version '{version}', expected '{SCHEMA_VERSION}'"),
        ));
    }
    let kind = field(obj, "kind")?.as_str().ok_or_else(|| input_err("kind", "expected a string"))?;
    let payload = match kind {
        "states" | "operators" => {
            let ms = as_array(field(obj, "matrices")?, "matrices")?;
            if ms.is_empty() {
                return Err(input_err("matrices", "empty list"));
            }
            let hs: Vec<HermitianOperator> = ms
                .iter()
                .enumerate()
                .map(|(i, m)| parse_hermitian(m, &format!("matrices[{i}]")))
                .collect::<Result<_, _>>()?;
            let d = hs[0].dim();
            if let Some((i, h)) = hs.iter().enumerate().find(|(_, h)| h.dim() != d) {
                return Err(input_err(&format!("matrices[{i}]"), format!("dimension {} differs from {d}", h.dim())));
            }
            if kind == "states" {
                let states = hs
                    .into_iter()
                    .enumerate()
                    .map(|(i, h)| DensityMatrix::new(h).map_err(|e| input_err(&format!("matrices[{i}]"), e)))
                    .collect::<Result<_, _>>()?;
                Payload::States(states)
            } else {
                for (i, h) in hs.iter().enumerate() {
                    if !h.is_psd(1e-9) {
                        return Err(input_err(&format!("matrices[{i}]"), "operator is not positive semidefinite"));
                    }
                }
                Payload::Operators(hs)
            }
        }
        "channels" => {
            let cs = as_array(field(obj, "channels")?, "channels")?;
            if cs.is_empty() {
                return Err(input_err("channels", "empty list"));
            }
            let chans: Vec<Channel> = cs
                .iter()
                .enumerate()
                .map(|(i, c)| parse_channel(c, &format!("channels[{i}]")))
                .collect::<Result<_, _>>()?;
            let (a, b) = (chans[0].dim_in(), chans[0].dim_out());
            if let Some((i, _)) = chans.iter().enumerate().find(|(_, c)| c.dim_in() != a || c.dim_out() != b) {
                return Err(input_err(&format!("channels[{i}]"), "dimensions differ from channels[0]"));
            }
            Payload::Channels(chans)
        }
        other => return Err(input_err("kind", format!("expected states, operators or channels, got '{other}'"))),
    };
    let priors = match obj.get("priors") {
        None | Some(Value::Null) => None,
        Some(v) => {
            let p = f64_list(v, "priors")?;
            if p.len() != payload.len() {
                return Err(input_err("priors", format!("{} priors for {} entries", p.len(), payload.len())));
            }
            if p.iter().any(|&x| x <= 0.0) {
                return Err(input_err("priors", "priors must be positive"));
            }
            let s: f64 = p.iter().sum();
            if (s - 1.0).abs() > 1e-10 {
                return Err(input_err("priors", format!("priors sum to {s}, expected 1")));
            }
            Some(p)
        }
    };
    let params = match obj.get("params") {
        None | Some(Value::Null) => FileParams::default(),
        Some(v) => parse_params(v)?,
    };
    Ok(Problem { payload, priors, params })
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAIR: &str = r#"{
        "schema_version": "1", "kind": "states",
        "matrices": [
            [[[1,0],[0,0]],[[0,0],[0,0]]],
            [[[0.5,0],[0.5,0]],[[0.5,0],[0.5,0]]]
        ],
        "params": {"eta": [0, 0.5], "alpha": 2}
    }"#;

    #[test]
    fn parses_state_pair() {
        let p = parse_problem(PAIR).unwrap();
        assert_eq!(p.payload.len(), 2);
        assert_eq!(p.params.eta, Some(vec![0.0, 0.5]));
        assert!(p.priors.is_none());
    }

    fn err(text: &str) -> String {
        match parse_problem(text) {
            Err(CliError::Input(m)) => m,
            other => panic!("expected input error, got {other:?}"),
        }
    }

    #[test]
    fn errors_name_the_field() {
        let bad = PAIR.replace("[0.5,0],[0.5,0]],[[0.5,0],[0.5,0]]", "[0.5,0],[0.5,0]],[[0.5,0],[0.5]]");
        assert!(err(&bad).starts_with("matrices[1][1][1]"), "{}", err(&bad));
        let bad = PAIR.replace("\"params\"", "\"priors\": [0.5, 0.6], \"params\"");
        assert!(err(&bad).starts_with("priors"));
        let bad = PAIR.replace("\"1\"", "\"7\"");
        assert!(err(&bad).starts_with("schema_version"));
        // non-Hermitian input is rejected rather than symmetrized
        let bad = PAIR.replace("[[[1,0],[0,0]],[[0,0],[0,0]]]", "[[[1,0],[0.3,0]],[[0,0],[0,0]]]");
        assert!(err(&bad).starts_with("matrices[0]"));
        assert!(err("{").starts_with("invalid JSON"));
    }

    #[test]
    fn parses_channels() {
        let text = r#"{"schema_version": "1", "kind": "channels", "channels": [
            {"name": "depolarizing", "param": 0.2},
            {"dim_in": 2, "dim_out": 2, "kraus": [[[[1,0],[0,0]],[[0,0],[1,0]]]]}
        ]}"#;
        let p = parse_problem(text).unwrap();
        assert_eq!(p.payload.kind(), "channels");
    }
}
