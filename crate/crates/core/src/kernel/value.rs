use std::fmt;

use serde::{Deserialize, Serialize};

/// Request arguments and responses. `Absent` is the refusal symbol and is an
/// ordinary value, not an error.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Value {
    #[default]
    Absent,
    Int(i64),
    Sym(String),
    Bytes(#[serde(with = "hex_bytes")] Vec<u8>),
    Field(u64),
    Bools(Vec<bool>),
    List(Vec<Value>),
}

impl Value {
    pub fn sym(s: &str) -> Value {
        Value::Sym(s.to_string())
    }

    pub fn is_absent(&self) -> bool {
        matches!(self, Value::Absent)
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            Value::Field(f) => i64::try_from(*f).ok(),
            _ => None,
        }
    }

    pub fn as_bytes(&self) -> Option<&[u8]> {
        match self {
            Value::Bytes(b) => Some(b),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bools(b) if b.len() == 1 => Some(b[0]),
            _ => None,
        }
    }

    pub fn as_bools(&self) -> Option<&[bool]> {
        match self {
            Value::Bools(b) => Some(b),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Value]> {
        match self {
            Value::List(l) => Some(l),
            _ => None,
        }
    }

    pub fn as_sym(&self) -> Option<&str> {
        match self {
            Value::Sym(s) => Some(s),
            _ => None,
        }
    }

    pub fn bool(b: bool) -> Value {
        Value::Bools(vec![b])
    }

    pub fn fields(xs: &[u64]) -> Value {
        Value::List(xs.iter().map(|&x| Value::Field(x)).collect())
    }

    /// Field vector view of a `List` of `Field`s.
    pub fn as_fields(&self) -> Option<Vec<u64>> {
        self.as_list()?
            .iter()
            .map(|v| match v {
                Value::Field(f) => Some(*f),
                _ => None,
            })
            .collect()
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Absent => write!(f, "⊥"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Sym(s) => write!(f, "{s}"),
            Value::Bytes(b) => write!(f, "0x{}", hex::encode(b)),
            Value::Field(x) => write!(f, "{x}"),
            Value::Bools(b) => {
                let s: String = b.iter().map(|&x| if x { '1' } else { '0' }).collect();
                write!(f, "b{s}")
            }
            Value::List(l) => {
                write!(f, "(")?;
                for (i, v) in l.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, ")")
            }
        }
    }
}

mod hex_bytes {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(b: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(b))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(s.trim()).map_err(D::Error::custom)
    }
}

/// 1-based slot argument. `None` when missing or mistyped.
pub fn arg_index(args: &[Value], pos: usize) -> Option<i64> {
    args.get(pos)?.as_int()
}

pub fn arg_bytes(args: &[Value], pos: usize) -> Option<&[u8]> {
    args.get(pos)?.as_bytes()
}
