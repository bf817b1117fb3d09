//! Tensor, Tucker and path files.
//!
//! Dense tensors are written as `{"shape":[…],"field":"real"|"complex","data":[…]}`
//! with row-major data, complex entries as `[re,im]` and every number printed with
//! 17 significant digits, so a write/read cycle is bit-exact.

use std::fmt::Write as _;

use serde::Deserialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::path::TensorPath;
use crate::subspace::{GrassmannPoint, TuckerRep};
use crate::sym::SymTensor;
use crate::tensor::{Field, Hypermatrix, Matrix, C64};

/// `x` with 17 significant digits; fails on NaN and infinities.
pub fn format_f64(x: f64) -> Result<String> {
    if !x.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(format!("{x:.16e}"))
}

fn write_entries(out: &mut String, xs: &[C64], field: Field) -> Result<()> {
    out.push('[');
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        match field {
            Field::Real => out.push_str(&format_f64(x.re)?),
            Field::Complex => {
                let _ = write!(out, "[{},{}]", format_f64(x.re)?, format_f64(x.im)?);
            }
        }
    }
    out.push(']');
    Ok(())
}

fn write_usizes(out: &mut String, xs: &[usize]) {
    out.push('[');
    let parts: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
    out.push_str(&parts.join(","));
    out.push(']');
}

fn dense_body(a: &Hypermatrix) -> Result<String> {
    let mut out = String::from("{\"shape\":");
    write_usizes(&mut out, a.shape());
    let _ = write!(out, ",\"field\":\"{}\",\"data\":", a.field());
    write_entries(&mut out, a.data(), a.field())?;
    out.push('}');
    Ok(out)
}

pub fn tensor_to_json(a: &Hypermatrix) -> Result<String> {
    Ok(dense_body(a)? + "\n")
}

pub fn sym_to_json(s: &SymTensor) -> Result<String> {
    let mut out = format!(
        "{{\"symmetric\":true,\"dim\":{},\"order\":{},\"field\":\"{}\",\"packed\":",
        s.dim(),
        s.order(),
        s.field()
    );
    write_entries(&mut out, s.packed(), s.field())?;
    out.push_str("}\n");
    Ok(out)
}

fn matrix_tensor(m: &Matrix) -> Result<Hypermatrix> {
    let field = Field::of_slice(m.as_slice());
    Hypermatrix::new(vec![m.nrows(), m.ncols()], field, m.transpose().as_slice().to_vec())
}

pub fn tucker_to_json(t: &TuckerRep) -> Result<String> {
    let mut out = String::from("{\"frames\":[");
    for (i, f) in t.frames.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&dense_body(&matrix_tensor(f.frame())?)?);
    }
    out.push_str("],\"core\":");
    out.push_str(&dense_body(&t.core)?);
    out.push_str("}\n");
    Ok(out)
}

pub fn path_to_json(p: &TensorPath) -> Result<String> {
    Ok(serde_json::to_string_pretty(p)? + "\n")
}

pub fn path_from_json(text: &str) -> Result<TensorPath> {
    serde_json::from_str(text).map_err(|e| json_error(text, &e))
}

/// A tensor file: dense or packed symmetric.
#[derive(Clone, Debug, PartialEq)]
pub enum TensorFile {
    Dense(Hypermatrix),
    Symmetric(SymTensor),
}

impl TensorFile {
    pub fn into_dense(self) -> Hypermatrix {
        match self {
            TensorFile::Dense(a) => a,
            TensorFile::Symmetric(s) => s.embed(),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DenseRaw {
    shape: Vec<usize>,
    field: Field,
    data: Vec<Entry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SymRaw {
    #[allow(dead_code)]
    symmetric: bool,
    dim: usize,
    order: usize,
    field: Field,
    packed: Vec<Entry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TuckerRaw {
    frames: Vec<DenseRaw>,
    core: DenseRaw,
}

/// Byte offset of a 1-based line and column.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let start: usize = text.split_inclusive('\n').take(line.saturating_sub(1)).map(str::len).sum();
    (start + column.saturating_sub(1)).min(text.len())
}

fn json_error(text: &str, e: &serde_json::Error) -> Error {
    let msg = e.to_string();
    let msg = match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg,
    };
    Error::Parse {
        pos: byte_offset(text, e.line(), e.column()),
        msg,
    }
}

fn key_pos(text: &str, key: &str) -> usize {
    text.find(&format!("\"{key}\"")).unwrap_or(0)
}

fn entries(text: &str, key: &str, xs: Vec<Entry>, field: Field) -> Result<Vec<C64>> {
    xs.into_iter()
        .enumerate()
        .map(|(i, e)| match (e, field) {
            (Entry::Real(x), _) => Ok(C64::new(x, 0.0)),
            (Entry::Complex([x, y]), Field::Complex) => Ok(C64::new(x, y)),
            (Entry::Complex(_), Field::Real) => Err(Error::Parse {
                pos: key_pos(text, key),
                msg: format!("entry {i} of `{key}` is a complex pair in a real tensor"),
            }),
        })
        .collect()
}

fn located(text: &str, key: &str, e: Error) -> Error {
    match e {
        Error::Parse { .. } => e,
        other => Error::Parse {
            pos: key_pos(text, key),
            msg: other.to_string(),
        },
    }
}

fn dense_from_raw(text: &str, raw: DenseRaw) -> Result<Hypermatrix> {
    let data = entries(text, "data", raw.data, raw.field)?;
    Hypermatrix::new(raw.shape, raw.field, data).map_err(|e| located(text, "data", e))
}

pub fn parse_tensor_json(text: &str) -> Result<TensorFile> {
    let v: Value = serde_json::from_str(text).map_err(|e| json_error(text, &e))?;
    let symmetric = match v.get("symmetric") {
        None => false,
        Some(Value::Bool(b)) => *b,
        Some(_) => {
            return Err(Error::Parse {
                pos: key_pos(text, "symmetric"),
                msg: "`symmetric` must be a boolean".into(),
            })
        }
    };
    if symmetric {
        let raw: SymRaw = serde_json::from_str(text).map_err(|e| json_error(text, &e))?;
        let packed = entries(text, "packed", raw.packed, raw.field)?;
        let s = SymTensor::new(raw.dim, raw.order, raw.field, packed).map_err(|e| located(text, "packed", e))?;
        Ok(TensorFile::Symmetric(s))
    } else {
        let raw: DenseRaw = serde_json::from_str(text).map_err(|e| json_error(text, &e))?;
        Ok(TensorFile::Dense(dense_from_raw(text, raw)?))
    }
}

pub fn parse_tucker_json(text: &str) -> Result<TuckerRep> {
    let raw: TuckerRaw = serde_json::from_str(text).map_err(|e| json_error(text, &e))?;
    let mut frames = Vec::with_capacity(raw.frames.len());
    for f in raw.frames {
        let t = dense_from_raw(text, f)?;
        if t.order() != 2 {
            return Err(Error::Parse {
                pos: key_pos(text, "frames"),
                msg: format!("frame of shape {:?} is not a matrix", t.shape()),
            });
        }
        let (n, r) = (t.shape()[0], t.shape()[1]);
        let m = Matrix::from_row_slice(n, r, t.data());
        frames.push(GrassmannPoint::new(m).map_err(|e| located(text, "frames", e))?);
    }
    let core = dense_from_raw(text, raw.core)?;
    TuckerRep::new(frames, core).map_err(|e| located(text, "core", e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{gaussian_tensor, rng_from_seed, sample_fixed_mrank};
    use crate::tolerance::TolerancePolicy;

    #[test]
    fn dense_round_trip_is_bit_exact() {
        let mut rng = rng_from_seed(4);
        for field in [Field::Real, Field::Complex] {
            let a = gaussian_tensor(&[2, 3, 2], field, &mut rng);
            let text = tensor_to_json(&a).unwrap();
            let back = parse_tensor_json(&text).unwrap().into_dense();
            assert_eq!(back, a);
            assert_eq!(tensor_to_json(&back).unwrap(), text);
        }
    }

    #[test]
    fn real_layout() {
        let a = Hypermatrix::from_real(&[2, 1], &[0.1, -2.0]).unwrap();
        assert_eq!(
            tensor_to_json(&a).unwrap(),
            "{\"shape\":[2,1],\"field\":\"real\",\"data\":[1.0000000000000001e-1,-2.0000000000000000e0]}\n"
        );
    }

    #[test]
    fn symmetric_file_embeds() {
        let text = r#"{"symmetric":true,"dim":2,"order":2,"field":"real","packed":[1,2,3]}"#;
        let TensorFile::Symmetric(s) = parse_tensor_json(text).unwrap() else {
            panic!("expected a symmetric file")
        };
        let a = s.embed();
        assert_eq!(a.get(&[0, 1]).re, 2.0);
        assert_eq!(a.get(&[1, 0]).re, 2.0);
        assert_eq!(parse_tensor_json(&sym_to_json(&s).unwrap()).unwrap(), TensorFile::Symmetric(s));
    }

    #[test]
    fn diagnostics_carry_positions() {
        let text = "{\"shape\":[2,2],\n \"field\":\"real\",\n \"data\":[1,2,3]}";
        match parse_tensor_json(text) {
            Err(Error::Parse { pos, msg }) => {
                assert_eq!(pos, text.find("\"data\"").unwrap());
                assert!(msg.contains("needs 4 entries"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
        let bad = "{\"shape\":[2],\"field\":\"reel\",\"data\":[1,2]}";
        match parse_tensor_json(bad) {
            Err(Error::Parse { pos, .. }) => assert!(pos > 20 && pos <= bad.len()),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_tensor_json("{\"shape\":[1],"), Err(Error::Parse { .. })));
    }

    #[test]
    fn tucker_round_trip() {
        let mut rng = rng_from_seed(9);
        let tol = TolerancePolicy::default();
        let (_, t) = sample_fixed_mrank(&[3, 3, 2], &[2, 2, 2], Field::Real, &mut rng, &tol).unwrap();
        let text = tucker_to_json(&t).unwrap();
        let back = parse_tucker_json(&text).unwrap();
        assert!(back.expand().rel_dist(&t.expand()).unwrap() < 1e-14);
    }
}
