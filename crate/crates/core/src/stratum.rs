//! Stratum descriptors and their textual form
//! `kind:key=value;key=value`, e.g. `rank:r=2;shape=3,3,3;field=real`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mrank::MultilinearRank;
use crate::tensor::Field;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum StratumKind {
    Rank(usize),
    BorderRank(usize),
    SymRank(usize),
    SymBorderRank(usize),
    MultilinearRank(Vec<usize>),
    SymMultilinearRank(usize),
}

impl StratumKind {
    pub fn keyword(&self) -> &'static str {
        match self {
            StratumKind::Rank(_) => "rank",
            StratumKind::BorderRank(_) => "brank",
            StratumKind::SymRank(_) => "sym-rank",
            StratumKind::SymBorderRank(_) => "sym-brank",
            StratumKind::MultilinearRank(_) => "mrank",
            StratumKind::SymMultilinearRank(_) => "sym-mrank",
        }
    }

    pub fn is_symmetric(&self) -> bool {
        matches!(
            self,
            StratumKind::SymRank(_) | StratumKind::SymBorderRank(_) | StratumKind::SymMultilinearRank(_)
        )
    }
}

/// Which stratum a computation targets, with its ambient space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StratumDescriptor {
    pub kind: StratumKind,
    pub field: Field,
    /// Tensor shape; `[n; d]` for symmetric kinds.
    pub shape: Vec<usize>,
}

impl StratumDescriptor {
    pub fn new(kind: StratumKind, field: Field, shape: Vec<usize>) -> Result<Self> {
        let s = Self { kind, field, shape };
        s.validate()?;
        Ok(s)
    }

    pub fn rank(r: usize, shape: &[usize], field: Field) -> Result<Self> {
        Self::new(StratumKind::Rank(r), field, shape.to_vec())
    }

    pub fn border_rank(r: usize, shape: &[usize], field: Field) -> Result<Self> {
        Self::new(StratumKind::BorderRank(r), field, shape.to_vec())
    }

    pub fn mrank(r: &[usize], shape: &[usize], field: Field) -> Result<Self> {
        Self::new(StratumKind::MultilinearRank(r.to_vec()), field, shape.to_vec())
    }

    pub fn sym_rank(r: usize, n: usize, d: usize, field: Field) -> Result<Self> {
        Self::new(StratumKind::SymRank(r), field, vec![n; d])
    }

    pub fn sym_border_rank(r: usize, n: usize, d: usize, field: Field) -> Result<Self> {
        Self::new(StratumKind::SymBorderRank(r), field, vec![n; d])
    }

    pub fn sym_mrank(r: usize, n: usize, d: usize, field: Field) -> Result<Self> {
        Self::new(StratumKind::SymMultilinearRank(r), field, vec![n; d])
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    /// `n` for symmetric kinds.
    pub fn dim(&self) -> usize {
        self.shape[0]
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.shape.len() < 2 || self.shape.iter().any(|&n| n < 2) {
            return bad(format!(
                "shape {:?} needs at least two modes, each of size >= 2",
                self.shape
            ));
        }
        if self.kind.is_symmetric() && self.shape.iter().any(|&n| n != self.shape[0]) {
            return bad("symmetric strata need a cubical shape".into());
        }
        let total: usize = self.shape.iter().product();
        let largest = *self.shape.iter().max().expect("nonempty");
        match &self.kind {
            StratumKind::Rank(r) | StratumKind::BorderRank(r) => {
                if *r == 0 || *r > total / largest {
                    return bad(format!("rank {r} is outside 1..={}", total / largest));
                }
            }
            StratumKind::SymRank(r) | StratumKind::SymBorderRank(r) => {
                if *r == 0 {
                    return bad("symmetric rank must be positive".into());
                }
            }
            StratumKind::SymMultilinearRank(r) => {
                if *r == 0 || *r > self.shape[0] {
                    return bad(format!("symmetric multilinear rank {r} outside 1..={}", self.shape[0]));
                }
            }
            StratumKind::MultilinearRank(rs) => {
                let m = MultilinearRank(rs.clone());
                if rs.len() != self.shape.len() || rs.contains(&0) || !m.fits(&self.shape) {
                    return bad(format!(
                        "multilinear rank {rs:?} does not fit shape {:?}",
                        self.shape
                    ));
                }
                if !m.is_admissible() {
                    return bad(format!("multilinear rank {rs:?} is not admissible"));
                }
            }
        }
        Ok(())
    }
}

fn join(xs: &[usize]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl fmt::Display for StratumDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kw = self.kind.keyword();
        match &self.kind {
            StratumKind::Rank(r) | StratumKind::BorderRank(r) => {
                write!(f, "{kw}:r={r};shape={};field={}", join(&self.shape), self.field)
            }
            StratumKind::MultilinearRank(rs) => write!(
                f,
                "{kw}:r={};shape={};field={}",
                join(rs),
                join(&self.shape),
                self.field
            ),
            StratumKind::SymRank(r)
            | StratumKind::SymBorderRank(r)
            | StratumKind::SymMultilinearRank(r) => write!(
                f,
                "{kw}:d={};n={};r={r};field={}",
                self.order(),
                self.dim(),
                self.field
            ),
        }
    }
}

struct Param<'a> {
    key: &'a str,
    value: &'a str,
    key_pos: usize,
    value_pos: usize,
}

fn parse_list(p: &Param<'_>) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    let mut offset = 0;
    for part in p.value.split(',') {
        let v = part.trim().parse::<usize>().map_err(|_| Error::Parse {
            pos: p.value_pos + offset,
            msg: format!("expected a nonnegative integer for `{}`, found `{part}`", p.key),
        })?;
        out.push(v);
        offset += part.len() + 1;
    }
    Ok(out)
}

fn parse_one(p: &Param<'_>) -> Result<usize> {
    let v = parse_list(p)?;
    if v.len() != 1 {
        return Err(Error::Parse {
            pos: p.value_pos,
            msg: format!("`{}` takes a single integer", p.key),
        });
    }
    Ok(v[0])
}

impl FromStr for StratumDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let colon = s.find(':').ok_or_else(|| Error::Parse {
            pos: s.len(),
            msg: "expected `kind:` prefix".into(),
        })?;
        let kind_str = &s[..colon];
        let symmetric = match kind_str {
            "rank" | "brank" | "mrank" => false,
            "sym-rank" | "sym-brank" | "sym-mrank" => true,
            other => {
                return Err(Error::Parse {
                    pos: 0,
                    msg: format!(
                        "unknown stratum kind `{other}` (expected rank, brank, sym-rank, sym-brank, mrank or sym-mrank)"
                    ),
                })
            }
        };
        let mut params: Vec<Param<'_>> = Vec::new();
        let mut pos = colon + 1;
        for item in s[colon + 1..].split(';') {
            let start = pos;
            pos += item.len() + 1;
            if item.is_empty() {
                continue;
            }
            let eq = item.find('=').ok_or_else(|| Error::Parse {
                pos: start,
                msg: format!("expected `key=value`, found `{item}`"),
            })?;
            let key = item[..eq].trim();
            let allowed: &[&str] = if symmetric {
                &["d", "n", "r", "field"]
            } else {
                &["r", "shape", "field"]
            };
            if !allowed.contains(&key) {
                return Err(Error::Parse {
                    pos: start,
                    msg: format!("unknown key `{key}` for `{kind_str}`"),
                });
            }
            if params.iter().any(|p| p.key == key) {
                return Err(Error::Parse {
                    pos: start,
                    msg: format!("duplicate key `{key}`"),
                });
            }
            params.push(Param {
                key,
                value: &item[eq + 1..],
                key_pos: start,
                value_pos: start + eq + 1,
            });
        }
        let get = |key: &str| -> Result<&Param<'_>> {
            params.iter().find(|p| p.key == key).ok_or_else(|| Error::Parse {
                pos: s.len(),
                msg: format!("missing `{key}=` parameter"),
            })
        };
        let field = match params.iter().find(|p| p.key == "field") {
            None => Field::Real,
            Some(p) => p.value.trim().parse::<Field>().map_err(|_| Error::Parse {
                pos: p.value_pos,
                msg: format!("field must be `real` or `complex`, found `{}`", p.value),
            })?,
        };
        let r = get("r")?;
        let (kind, shape, anchor) = if symmetric {
            let d = parse_one(get("d")?)?;
            let n = parse_one(get("n")?)?;
            let rv = parse_one(r)?;
            let kind = match kind_str {
                "sym-rank" => StratumKind::SymRank(rv),
                "sym-brank" => StratumKind::SymBorderRank(rv),
                _ => StratumKind::SymMultilinearRank(rv),
            };
            (kind, vec![n; d], r.key_pos)
        } else {
            let shape = parse_list(get("shape")?)?;
            let kind = match kind_str {
                "rank" => StratumKind::Rank(parse_one(r)?),
                "brank" => StratumKind::BorderRank(parse_one(r)?),
                _ => StratumKind::MultilinearRank(parse_list(r)?),
            };
            (kind, shape, r.key_pos)
        };
        let desc = StratumDescriptor { kind, field, shape };
        desc.validate().map_err(|e| Error::Parse {
            pos: anchor,
            msg: e.to_string(),
        })?;
        Ok(desc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_examples_round_trip() {
        for s in [
            "rank:r=2;shape=3,3,3;field=real",
            "mrank:r=2,2,2;shape=3,3,3;field=complex",
            "sym-rank:d=4;n=4;r=2;field=real",
            "brank:r=3;shape=2,2,2;field=real",
            "sym-mrank:d=3;n=4;r=2;field=real",
        ] {
            let d: StratumDescriptor = s.parse().unwrap();
            assert_eq!(d.to_string(), s);
        }
    }

    #[test]
    fn field_defaults_to_real_and_order_is_free() {
        let d: StratumDescriptor = "sym-rank:r=2;n=4;d=4".parse().unwrap();
        assert_eq!(d, StratumDescriptor::sym_rank(2, 4, 4, Field::Real).unwrap());
    }

    #[test]
    fn diagnostics_carry_positions() {
        match "rank:r=x;shape=2,2".parse::<StratumDescriptor>() {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 7),
            other => panic!("{other:?}"),
        }
        match "tensor:r=1".parse::<StratumDescriptor>() {
            Err(Error::Parse { pos, msg }) => {
                assert_eq!(pos, 0);
                assert!(msg.contains("tensor"));
            }
            other => panic!("{other:?}"),
        }
        match "mrank:r=5,1,1;shape=5,2,2".parse::<StratumDescriptor>() {
            Err(Error::Parse { msg, .. }) => assert!(msg.contains("admissible")),
            other => panic!("{other:?}"),
        }
        assert!("rank:r=1;shape=2,2;bogus=1".parse::<StratumDescriptor>().is_err());
        assert!("rank:r=1".parse::<StratumDescriptor>().is_err());
        assert!("rank:r=1;shape=2,2;field=quaternion".parse::<StratumDescriptor>().is_err());
    }
}
