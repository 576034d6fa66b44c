//! JSON file formats for matrices, states, channels and distortion
//! observables.
//!
//! Matrix: `{"labels": [...], "dims": [...], "re": [...], "im": [...]}`, row
//! major. A state file may hold a ket (`re`/`im` of length `Π dims`) or a
//! density matrix. Channel: `{"kind": "kraus" | "choi", "input_dims",
//! "output_dims", ...}`. Observable: `{"kind": "dense" | "ent_fid" |
//! "classical", ...}`. Floats are written in shortest round-trip form.

use std::fs;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::distortion::DistortionObservable;
use crate::error::{Error, Result};
use crate::linalg::{c, CMat, CVec};
use crate::quantum::{DensityOperator, PureState, QuantumChannel, SystemDims};

/// JSON number, or `"inf"`/`"-inf"`/`"nan"` for non-finite values (which
/// JSON cannot represent).
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub(crate) fn ser_f64<S: serde::Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::Serialize;
    num(*x).serialize(s)
}

pub(crate) fn ser_opt_pair<S: serde::Serializer>(x: &Option<(f64, f64)>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::Serialize;
    x.map(|(a, b)| [num(a), num(b)]).serialize(s)
}

pub(crate) fn ser_f64_map<S: serde::Serializer>(
    m: &std::collections::BTreeMap<String, f64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut out = s.serialize_map(Some(m.len()))?;
    for (k, v) in m {
        out.serialize_entry(k, &num(*v))?;
    }
    out.end()
}

fn malformed(path: &str, field: &str, detail: impl Into<String>) -> Error {
    Error::Malformed {
        path: path.to_string(),
        field: field.to_string(),
        detail: detail.into(),
    }
}

fn object<'a>(v: &'a Value, path: &str, field: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| malformed(path, field, "expected a JSON object"))
}

fn get<'a>(o: &'a Map<String, Value>, path: &str, field: &str) -> Result<&'a Value> {
    o.get(field).ok_or_else(|| malformed(path, field, "missing"))
}

fn reals(o: &Map<String, Value>, path: &str, field: &str) -> Result<Vec<f64>> {
    let arr = get(o, path, field)?.as_array().ok_or_else(|| malformed(path, field, "expected an array of numbers"))?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| x.as_f64().ok_or_else(|| malformed(path, &format!("{field}[{i}]"), format!("not a number: {x}"))))
        .collect()
}

fn string(o: &Map<String, Value>, path: &str, field: &str) -> Result<String> {
    get(o, path, field)?
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| malformed(path, field, "expected a string"))
}

fn dims_from(o: &Map<String, Value>, path: &str, prefix: &str) -> Result<SystemDims> {
    let lf = format!("{prefix}labels");
    let df = format!("{prefix}dims");
    let labels = get(o, path, &lf)?
        .as_array()
        .ok_or_else(|| malformed(path, &lf, "expected an array of strings"))?
        .iter()
        .enumerate()
        .map(|(i, l)| l.as_str().map(str::to_string).ok_or_else(|| malformed(path, &format!("{lf}[{i}]"), "not a string")))
        .collect::<Result<Vec<_>>>()?;
    let dims = get(o, path, &df)?
        .as_array()
        .ok_or_else(|| malformed(path, &df, "expected an array of positive integers"))?
        .iter()
        .enumerate()
        .map(|(i, d)| match d.as_u64() {
            Some(d) if d > 0 => Ok(d as usize),
            _ => Err(malformed(path, &format!("{df}[{i}]"), format!("not a positive integer: {d}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    SystemDims::new(labels, dims).map_err(|e| malformed(path, &lf, e.to_string()))
}

fn dims_json(d: &SystemDims) -> Value {
    json!({ "labels": d.labels(), "dims": d.dims() })
}

fn nested_dims(o: &Map<String, Value>, path: &str, field: &str) -> Result<SystemDims> {
    let inner = object(get(o, path, field)?, path, field)?;
    dims_from(inner, &format!("{path}:{field}"), "")
}

/// Complex entries from `re`/`im`; `im` may be omitted for real data.
fn entries(o: &Map<String, Value>, path: &str) -> Result<Vec<crate::linalg::C64>> {
    let re = reals(o, path, "re")?;
    let im = if o.contains_key("im") { reals(o, path, "im")? } else { vec![0.0; re.len()] };
    if im.len() != re.len() {
        return Err(malformed(path, "im", format!("length {} differs from re length {}", im.len(), re.len())));
    }
    Ok(re.into_iter().zip(im).map(|(r, i)| c(r, i)).collect())
}

fn square(o: &Map<String, Value>, path: &str, dim: usize) -> Result<CMat> {
    let e = entries(o, path)?;
    if e.len() != dim * dim {
        return Err(malformed(path, "re", format!("expected {} entries for a {dim}x{dim} matrix, found {}", dim * dim, e.len())));
    }
    Ok(CMat::from_row_slice(dim, dim, &e))
}

fn matrix_fields(m: &CMat) -> (Vec<f64>, Vec<f64>) {
    let mut re = Vec::with_capacity(m.len());
    let mut im = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            re.push(m[(i, j)].re);
            im.push(m[(i, j)].im);
        }
    }
    (re, im)
}

pub fn matrix_json(m: &CMat, dims: &SystemDims) -> Value {
    let (re, im) = matrix_fields(m);
    json!({ "labels": dims.labels(), "dims": dims.dims(), "re": re, "im": im })
}

fn parse(text: &str, path: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| malformed(path, "<document>", e.to_string()))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| malformed(&path.display().to_string(), "<file>", e.to_string()))
}

fn write_text(path: &Path, v: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v).expect("JSON values serialize");
    fs::write(path, text + "\n").map_err(|e| malformed(&path.display().to_string(), "<file>", e.to_string()))
}

/// Matrix (or ket, when `re` has `Π dims` entries) with its labels.
pub enum StateData {
    Ket(PureState),
    Density(DensityOperator),
}

impl StateData {
    pub fn density(&self) -> DensityOperator {
        match self {
            StateData::Ket(p) => p.density(),
            StateData::Density(d) => d.clone(),
        }
    }
}

pub fn state_from_value(v: &Value, path: &str) -> Result<StateData> {
    let o = object(v, path, "<document>")?;
    let dims = dims_from(o, path, "")?;
    let n = dims.total();
    let e = entries(o, path)?;
    if e.len() == n && n > 1 {
        let ket = PureState::new(CVec::from_vec(e), dims).map_err(|err| malformed(path, "re", err.to_string()))?;
        return Ok(StateData::Ket(ket));
    }
    if e.len() != n * n {
        return Err(malformed(path, "re", format!("expected {n} (ket) or {} (matrix) entries, found {}", n * n, e.len())));
    }
    let m = CMat::from_row_slice(n, n, &e);
    DensityOperator::new(m, dims).map(StateData::Density).map_err(|err| malformed(path, "re", err.to_string()))
}

pub fn state_from_str(text: &str, path: &str) -> Result<StateData> {
    state_from_value(&parse(text, path)?, path)
}

pub fn read_state(path: &Path) -> Result<StateData> {
    state_from_str(&read_text(path)?, &path.display().to_string())
}

pub fn density_json(rho: &DensityOperator) -> Value {
    matrix_json(rho.matrix(), rho.dims())
}

pub fn pure_json(phi: &PureState) -> Value {
    let v = phi.vector();
    json!({
        "labels": phi.dims().labels(),
        "dims": phi.dims().dims(),
        "re": v.iter().map(|z| z.re).collect::<Vec<_>>(),
        "im": v.iter().map(|z| z.im).collect::<Vec<_>>(),
    })
}

pub fn write_density(path: &Path, rho: &DensityOperator) -> Result<()> {
    write_text(path, &density_json(rho))
}

pub fn write_pure(path: &Path, phi: &PureState) -> Result<()> {
    write_text(path, &pure_json(phi))
}

pub fn channel_json(ch: &QuantumChannel) -> Value {
    let kraus: Vec<Value> = ch
        .kraus()
        .iter()
        .map(|k| {
            let (re, im) = matrix_fields(k);
            json!({ "re": re, "im": im })
        })
        .collect();
    json!({
        "kind": "kraus",
        "input_dims": dims_json(ch.input_dims()),
        "output_dims": dims_json(ch.output_dims()),
        "kraus": kraus,
    })
}

pub fn channel_choi_json(ch: &QuantumChannel) -> Value {
    let (re, im) = matrix_fields(ch.choi());
    json!({
        "kind": "choi",
        "input_dims": dims_json(ch.input_dims()),
        "output_dims": dims_json(ch.output_dims()),
        "re": re,
        "im": im,
    })
}

pub fn channel_from_value(v: &Value, path: &str) -> Result<QuantumChannel> {
    let o = object(v, path, "<document>")?;
    let input = nested_dims(o, path, "input_dims")?;
    let output = nested_dims(o, path, "output_dims")?;
    let (din, dout) = (input.total(), output.total());
    match string(o, path, "kind")?.as_str() {
        "kraus" => {
            let list = get(o, path, "kraus")?.as_array().ok_or_else(|| malformed(path, "kraus", "expected an array of matrices"))?;
            let mut ks = Vec::with_capacity(list.len());
            for (i, k) in list.iter().enumerate() {
                let field = format!("kraus[{i}]");
                let ko = object(k, path, &field)?;
                let e = entries(ko, &format!("{path}:{field}"))?;
                if e.len() != din * dout {
                    return Err(malformed(path, &field, format!("expected {dout}x{din} = {} entries, found {}", din * dout, e.len())));
                }
                ks.push(CMat::from_row_slice(dout, din, &e));
            }
            QuantumChannel::from_kraus(ks, input, output).map_err(|e| malformed(path, "kraus", e.to_string()))
        }
        "choi" => {
            let m = square(o, path, din * dout)?;
            QuantumChannel::from_choi(m, input, output).map_err(|e| malformed(path, "re", e.to_string()))
        }
        other => Err(malformed(path, "kind", format!("unknown channel kind `{other}` (expected kraus or choi)"))),
    }
}

pub fn channel_from_str(text: &str, path: &str) -> Result<QuantumChannel> {
    channel_from_value(&parse(text, path)?, path)
}

pub fn read_channel(path: &Path) -> Result<QuantumChannel> {
    channel_from_str(&read_text(path)?, &path.display().to_string())
}

pub fn write_channel(path: &Path, ch: &QuantumChannel) -> Result<()> {
    write_text(path, &channel_json(ch))
}

/// Observables are written in dense form.
pub fn observable_json(delta: &DistortionObservable) -> Value {
    let mut v = matrix_json(delta.operator(), delta.dims());
    v["kind"] = json!("dense");
    v
}

pub fn observable_from_value(v: &Value, path: &str) -> Result<DistortionObservable> {
    let o = object(v, path, "<document>")?;
    match string(o, path, "kind")?.as_str() {
        "dense" => {
            let dims = dims_from(o, path, "")?;
            let m = square(o, path, dims.total())?;
            DistortionObservable::new(m, dims).map_err(|e| malformed(path, "re", e.to_string()))
        }
        "ent_fid" => {
            let inner = format!("{path}:purification");
            let phi = match state_from_value(get(o, path, "purification")?, &inner)? {
                StateData::Ket(p) => p,
                StateData::Density(_) => return Err(malformed(path, "purification", "expected a ket")),
            };
            let out = if o.contains_key("output") { string(o, path, "output")? } else { "B".to_string() };
            DistortionObservable::entanglement_fidelity(&phi, &out).map_err(|e| malformed(path, "purification", e.to_string()))
        }
        "classical" => {
            let rows = get(o, path, "d")?.as_array().ok_or_else(|| malformed(path, "d", "expected a matrix of numbers"))?;
            let d = rows
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let field = format!("d[{i}]");
                    r.as_array()
                        .ok_or_else(|| malformed(path, &field, "expected an array"))?
                        .iter()
                        .map(|x| x.as_f64().ok_or_else(|| malformed(path, &field, format!("not a number: {x}"))))
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            DistortionObservable::classical(&d, None).map_err(|e| malformed(path, "d", e.to_string()))
        }
        other => Err(malformed(path, "kind", format!("unknown observable kind `{other}` (expected dense, ent_fid or classical)"))),
    }
}

pub fn observable_from_str(text: &str, path: &str) -> Result<DistortionObservable> {
    observable_from_value(&parse(text, path)?, path)
}

pub fn read_observable(path: &Path) -> Result<DistortionObservable> {
    observable_from_str(&read_text(path)?, &path.display().to_string())
}

pub fn write_observable(path: &Path, delta: &DistortionObservable) -> Result<()> {
    write_text(path, &observable_json(delta))
}
