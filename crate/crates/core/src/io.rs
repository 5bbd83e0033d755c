//! JSON problem files.
//!
//! ```json
//! {
//!   "name": "example",
//!   "sense": "min",
//!   "n": 1,
//!   "objective": [{ "beta": [1], "gamma": [1], "re": 1.0 }],
//!   "ineqs": [],
//!   "eqs": [[{ "beta": [1], "gamma": [1], "re": 1.0 }, { "beta": [0], "gamma": [0], "re": -1.0 }]]
//! }
//! ```
//!
//! `im` defaults to zero. Optional fields: `transform` (`identity` or `sqrt`, applied to the
//! reported bound) and `conjectured_optimum`.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::{CPoly, CpopInstance, ExponentPair, Monomial, PolyError, Sense, ValueTransform};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
    #[error("{location}: {msg}")]
    Term { location: String, msg: String },
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermRecord {
    pub beta: Vec<u8>,
    pub gamma: Vec<u8>,
    pub re: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub im: f64,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

fn default_sense() -> Sense {
    Sense::Min
}

fn is_identity(t: &ValueTransform) -> bool {
    *t == ValueTransform::Identity
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub name: String,
    #[serde(default = "default_sense")]
    pub sense: Sense,
    pub n: usize,
    pub objective: Vec<TermRecord>,
    #[serde(default)]
    pub ineqs: Vec<Vec<TermRecord>>,
    #[serde(default)]
    pub eqs: Vec<Vec<TermRecord>>,
    #[serde(default, skip_serializing_if = "is_identity")]
    pub transform: ValueTransform,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conjectured_optimum: Option<f64>,
}

fn records(p: &CPoly) -> Vec<TermRecord> {
    p.terms()
        .map(|(k, c)| TermRecord { beta: k.beta.exps().to_vec(), gamma: k.gamma.exps().to_vec(), re: c.re, im: c.im })
        .collect()
}

fn poly(n: usize, terms: &[TermRecord], what: &str) -> Result<CPoly, IoError> {
    let mut out = Vec::with_capacity(terms.len());
    for (i, t) in terms.iter().enumerate() {
        if t.beta.len() != n || t.gamma.len() != n {
            return Err(IoError::Term {
                location: format!("{what}, term {i}"),
                msg: format!("exponent vectors must have length {n}"),
            });
        }
        if !t.re.is_finite() || !t.im.is_finite() {
            return Err(IoError::Term { location: format!("{what}, term {i}"), msg: "coefficient is not finite".into() });
        }
        let pair = ExponentPair::new(Monomial::from_slice(&t.beta), Monomial::from_slice(&t.gamma));
        out.push((pair, Complex64::new(t.re, t.im)));
    }
    Ok(CPoly::from_terms(n, out)?)
}

impl ProblemFile {
    pub fn from_instance(inst: &CpopInstance) -> Self {
        Self {
            name: inst.name.clone(),
            sense: inst.sense,
            n: inst.n,
            objective: records(&inst.objective),
            ineqs: inst.ineqs.iter().map(records).collect(),
            eqs: inst.eqs.iter().map(records).collect(),
            transform: inst.transform,
            conjectured_optimum: None,
        }
    }

    /// Validates term shapes and self-conjugacy.
    pub fn to_instance(&self) -> Result<CpopInstance, IoError> {
        if self.n == 0 {
            return Err(IoError::Term { location: "n".into(), msg: "at least one variable is required".into() });
        }
        let objective = poly(self.n, &self.objective, "objective")?;
        let ineqs = self
            .ineqs
            .iter()
            .enumerate()
            .map(|(i, t)| poly(self.n, t, &format!("inequality {i}")))
            .collect::<Result<_, _>>()?;
        let eqs = self
            .eqs
            .iter()
            .enumerate()
            .map(|(i, t)| poly(self.n, t, &format!("equality {i}")))
            .collect::<Result<_, _>>()?;
        // Arity of an all-zero objective comes from `n`.
        let inst = CpopInstance {
            name: self.name.clone(),
            n: self.n,
            sense: self.sense,
            objective,
            ineqs,
            eqs,
            transform: self.transform,
        };
        inst.validate()?;
        Ok(inst)
    }
}

pub fn parse(text: &str) -> Result<ProblemFile, IoError> {
    serde_json::from_str(text).map_err(|e| IoError::Parse { line: e.line(), column: e.column(), msg: e.to_string() })
}

pub fn render(file: &ProblemFile) -> String {
    let mut s = serde_json::to_string_pretty(file).expect("problem files serialize");
    s.push('\n');
    s
}

pub fn load(path: &Path) -> Result<CpopInstance, IoError> {
    load_file(path)?.to_instance()
}

pub fn load_file(path: &Path) -> Result<ProblemFile, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::Io { path: path.to_path_buf(), source })?;
    parse(&text)
}

pub fn save(inst: &CpopInstance, path: &Path) -> Result<(), IoError> {
    fs::write(path, render(&ProblemFile::from_instance(inst)))
        .map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}
