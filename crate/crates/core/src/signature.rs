//! Monoidal signatures: named generators with an arity and a coarity.

use std::collections::BTreeMap;
use std::fmt;

/// Name of the copy generator of a Cartesian signature.
pub const DUP: &str = "dup";
/// Name of the delete generator of a Cartesian signature.
pub const DEL: &str = "del";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generator {
    pub name: String,
    pub arity: usize,
    pub coarity: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    generators: BTreeMap<String, Generator>,
    cartesian: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SignatureError {
    #[error("duplicate generator {0}")]
    Duplicate(String),
    #[error("generator {0} has type 0 -> 0")]
    Nullary(String),
    #[error("generator name {0} is reserved for Cartesian signatures")]
    Reserved(String),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, arity: usize, coarity: usize) -> Result<(), SignatureError> {
        if arity == 0 && coarity == 0 {
            return Err(SignatureError::Nullary(name.to_string()));
        }
        if name == DUP || name == DEL {
            return Err(SignatureError::Reserved(name.to_string()));
        }
        if self.generators.contains_key(name) {
            return Err(SignatureError::Duplicate(name.to_string()));
        }
        self.generators.insert(
            name.to_string(),
            Generator {
                name: name.to_string(),
                arity,
                coarity,
            },
        );
        Ok(())
    }

    /// Turns on copy (`dup : 1 -> 2`) and delete (`del : 1 -> 0`).
    pub fn make_cartesian(&mut self) {
        self.cartesian = true;
        for (name, coarity) in [(DUP, 2), (DEL, 0)] {
            self.generators.insert(
                name.to_string(),
                Generator {
                    name: name.to_string(),
                    arity: 1,
                    coarity,
                },
            );
        }
    }

    pub fn cartesian(mut self) -> Self {
        self.make_cartesian();
        self
    }

    pub fn is_cartesian(&self) -> bool {
        self.cartesian
    }

    pub fn get(&self, name: &str) -> Option<&Generator> {
        self.generators.get(name)
    }

    pub fn generators(&self) -> impl Iterator<Item = &Generator> {
        self.generators.values()
    }

    /// Parses lines of the form `name : n -> m`; a line reading `cartesian`
    /// enables copy and delete. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, SignatureError> {
        let mut sig = Signature::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line == "cartesian" {
                sig.make_cartesian();
                continue;
            }
            let syntax = |message: &str| SignatureError::Syntax {
                line: i + 1,
                message: message.to_string(),
            };
            let (name, ty) = line.split_once(':').ok_or_else(|| syntax("expected `name : n -> m`"))?;
            let (n, m) = ty.split_once("->").ok_or_else(|| syntax("expected `->`"))?;
            let name = name.trim();
            if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') {
                return Err(syntax("bad generator name"));
            }
            let n: usize = n.trim().parse().map_err(|_| syntax("bad arity"))?;
            let m: usize = m.trim().parse().map_err(|_| syntax("bad coarity"))?;
            sig.add(name, n, m)?;
        }
        Ok(sig)
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.cartesian {
            writeln!(f, "cartesian")?;
        }
        for g in self.generators.values() {
            if self.cartesian && (g.name == DUP || g.name == DEL) {
                continue;
            }
            writeln!(f, "{} : {} -> {}", g.name, g.arity, g.coarity)?;
        }
        Ok(())
    }
}
