use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ast::{Expr, ExprKind, Span};
use super::parser::ParseError;
use crate::cpmap::{self, CPMap, CPMapRecord};
use crate::error::Error;
use crate::tensor::{CMatrix, Tolerance};

#[derive(Debug, Clone, PartialEq)]
pub enum DslError {
    Parse(ParseError),
    UnboundName {
        name: String,
        span: Span,
    },
    WrongBindingKind {
        name: String,
        span: Span,
        expected: &'static str,
    },
    DimensionMismatch {
        span: Span,
        expected: String,
        found: String,
    },
    InvalidBindingName(String),
    Numeric {
        span: Span,
        source: Error,
    },
}

impl fmt::Display for DslError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DslError::Parse(e) => write!(f, "{e}"),
            DslError::UnboundName { name, span } => write!(f, "unbound name `{name}` at {span}"),
            DslError::WrongBindingKind { name, span, expected } => {
                write!(f, "`{name}` at {span} is not bound to a {expected}")
            }
            DslError::DimensionMismatch { span, expected, found } => {
                write!(f, "dimension mismatch at {span}: expected {expected}, found {found}")
            }
            DslError::InvalidBindingName(name) => write!(f, "invalid binding name `{name}`"),
            DslError::Numeric { span, source } => write!(f, "at {span}: {source}"),
        }
    }
}

impl std::error::Error for DslError {}

impl From<ParseError> for DslError {
    fn from(e: ParseError) -> Self {
        DslError::Parse(e)
    }
}

#[derive(Debug, Clone)]
pub enum Binding {
    /// Operator consumed by `double(name)`.
    Matrix(CMatrix),
    /// CP map consumed by a bare `name`.
    Map(CPMap),
}

/// Named bindings for evaluation.
#[derive(Debug, Clone, Default)]
pub struct Environment {
    bindings: BTreeMap<String, Binding>,
}

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Environment file entry: `{"matrix": Matrix}` or `{"cpmap": CPMap}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BindingRecord {
    Matrix(CMatrix),
    Cpmap(CPMapRecord),
}

impl Environment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, binding: Binding) -> Result<(), DslError> {
        if !valid_name(name) {
            return Err(DslError::InvalidBindingName(name.to_string()));
        }
        self.bindings.insert(name.to_string(), binding);
        Ok(())
    }

    pub fn with_matrix(mut self, name: &str, m: CMatrix) -> Result<Self, DslError> {
        self.insert(name, Binding::Matrix(m))?;
        Ok(self)
    }

    pub fn with_map(mut self, name: &str, f: CPMap) -> Result<Self, DslError> {
        self.insert(name, Binding::Map(f))?;
        Ok(self)
    }

    pub fn get(&self, name: &str) -> Option<&Binding> {
        self.bindings.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.bindings.keys().map(String::as_str)
    }

    pub fn from_records(records: BTreeMap<String, BindingRecord>, tol: Tolerance) -> Result<Self, DslError> {
        let mut env = Self::new();
        for (name, rec) in records {
            let binding = match rec {
                BindingRecord::Matrix(m) => Binding::Matrix(m),
                BindingRecord::Cpmap(r) => {
                    Binding::Map(CPMap::from_record(r, tol).map_err(|source| DslError::Numeric {
                        span: Span::default(),
                        source,
                    })?)
                }
            };
            env.insert(&name, binding)?;
        }
        Ok(env)
    }

    pub fn to_records(&self) -> BTreeMap<String, BindingRecord> {
        self.bindings
            .iter()
            .map(|(k, b)| {
                let rec = match b {
                    Binding::Matrix(m) => BindingRecord::Matrix(m.clone()),
                    Binding::Map(f) => BindingRecord::Cpmap(f.to_record()),
                };
                (k.clone(), rec)
            })
            .collect()
    }
}

fn numeric(span: Span) -> impl FnOnce(Error) -> DslError {
    move |source| DslError::Numeric { span, source }
}

/// Denotation of an expression as a CP map.
pub fn evaluate(expr: &Expr, env: &Environment) -> Result<CPMap, DslError> {
    let span = expr.span;
    match &expr.kind {
        ExprKind::Id(n) => cpmap::identity(*n).map_err(numeric(span)),
        ExprKind::Discard(n) => cpmap::discard(*n).map_err(numeric(span)),
        ExprKind::Prepare(n) => cpmap::prepare(*n).map_err(numeric(span)),
        ExprKind::Double(name) => match env.get(name) {
            Some(Binding::Matrix(m)) => Ok(cpmap::double(m)),
            Some(Binding::Map(_)) => Err(DslError::WrongBindingKind {
                name: name.clone(),
                span,
                expected: "matrix",
            }),
            None => Err(DslError::UnboundName {
                name: name.clone(),
                span,
            }),
        },
        ExprKind::Ref(name) => match env.get(name) {
            Some(Binding::Map(f)) => Ok(f.clone()),
            Some(Binding::Matrix(_)) => Err(DslError::WrongBindingKind {
                name: name.clone(),
                span,
                expected: "CP map",
            }),
            None => Err(DslError::UnboundName {
                name: name.clone(),
                span,
            }),
        },
        ExprKind::Dagger(child) => Ok(cpmap::dagger(&evaluate(child, env)?)),
        ExprKind::Tensor(a, b) => Ok(cpmap::tensor(&evaluate(a, env)?, &evaluate(b, env)?)),
        ExprKind::Seq(first, then) => {
            let f = evaluate(first, env)?;
            let g = evaluate(then, env)?;
            if f.out_dim() != g.in_dim() {
                return Err(DslError::DimensionMismatch {
                    span: then.span,
                    expected: format!("input dimension {}", f.out_dim()),
                    found: format!("input dimension {}", g.in_dim()),
                });
            }
            cpmap::compose(&g, &f).map_err(numeric(span))
        }
        ExprKind::Scale(c, child) => evaluate(child, env)?.scale(*c).map_err(numeric(span)),
    }
}

/// Outcome of comparing two diagrams.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquationCheck {
    pub holds: bool,
    pub residual: f64,
    pub bound: f64,
}

/// Choi distance between the two sides against `atol · max(1, ||choi(lhs)||_F)`.
pub fn check_equation(lhs: &str, rhs: &str, env: &Environment, tol: Tolerance) -> Result<EquationCheck, DslError> {
    let le = super::parse(lhs)?;
    let re = super::parse(rhs)?;
    let lm = evaluate(&le, env)?;
    let rm = evaluate(&re, env)?;
    if (lm.in_dim(), lm.out_dim()) != (rm.in_dim(), rm.out_dim()) {
        return Err(DslError::DimensionMismatch {
            span: re.span,
            expected: format!("{} -> {}", lm.in_dim(), lm.out_dim()),
            found: format!("{} -> {}", rm.in_dim(), rm.out_dim()),
        });
    }
    let residual = cpmap::choi_distance(&lm, &rm).map_err(numeric(re.span))?;
    let bound = tol.atol * lm.choi_norm().max(1.0);
    Ok(EquationCheck {
        holds: residual <= bound,
        residual,
        bound,
    })
}
