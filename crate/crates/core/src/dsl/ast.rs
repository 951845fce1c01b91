use std::fmt;

/// Source location: byte range plus the 1-based line/column of its start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

/// A diagram expression. Equality ignores spans.
#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Id(usize),
    Discard(usize),
    Prepare(usize),
    Double(String),
    Ref(String),
    Dagger(Box<Expr>),
    Tensor(Box<Expr>, Box<Expr>),
    /// `first >> then`, i.e. `then ∘ first`.
    Seq(Box<Expr>, Box<Expr>),
    Scale(f64, Box<Expr>),
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Expr {
    pub fn new(kind: ExprKind) -> Self {
        Self {
            kind,
            span: Span::default(),
        }
    }

    pub fn id(n: usize) -> Self {
        Self::new(ExprKind::Id(n))
    }

    pub fn discard(n: usize) -> Self {
        Self::new(ExprKind::Discard(n))
    }

    pub fn prepare(n: usize) -> Self {
        Self::new(ExprKind::Prepare(n))
    }

    pub fn double(name: impl Into<String>) -> Self {
        Self::new(ExprKind::Double(name.into()))
    }

    pub fn reference(name: impl Into<String>) -> Self {
        Self::new(ExprKind::Ref(name.into()))
    }

    pub fn dagger(self) -> Self {
        Self::new(ExprKind::Dagger(Box::new(self)))
    }

    pub fn tensor(self, rhs: Expr) -> Self {
        Self::new(ExprKind::Tensor(Box::new(self), Box::new(rhs)))
    }

    pub fn then(self, next: Expr) -> Self {
        Self::new(ExprKind::Seq(Box::new(self), Box::new(next)))
    }

    pub fn scale(c: f64, child: Expr) -> Self {
        Self::new(ExprKind::Scale(c, Box::new(child)))
    }

    fn precedence(&self) -> u8 {
        match self.kind {
            ExprKind::Seq(..) => 0,
            ExprKind::Tensor(..) => 1,
            ExprKind::Dagger(..) => 2,
            _ => 3,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            write!(f, "(")?;
            self.write_at(f, 0)?;
            return write!(f, ")");
        }
        match &self.kind {
            ExprKind::Id(n) => write!(f, "id({n})"),
            ExprKind::Discard(n) => write!(f, "discard({n})"),
            ExprKind::Prepare(n) => write!(f, "prepare({n})"),
            ExprKind::Double(name) => write!(f, "double({name})"),
            ExprKind::Ref(name) => write!(f, "{name}"),
            ExprKind::Dagger(child) => {
                child.write_at(f, 2)?;
                write!(f, "'")
            }
            // Both binary operators are left-associative.
            ExprKind::Tensor(a, b) => {
                a.write_at(f, 1)?;
                write!(f, " * ")?;
                b.write_at(f, 2)
            }
            ExprKind::Seq(a, b) => {
                a.write_at(f, 0)?;
                write!(f, " >> ")?;
                b.write_at(f, 1)
            }
            ExprKind::Scale(c, child) => {
                write!(f, "scale({c}, ")?;
                child.write_at(f, 0)?;
                write!(f, ")")
            }
        }
    }
}

/// Pretty-printing with minimal parentheses; `parse` inverts it.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}
