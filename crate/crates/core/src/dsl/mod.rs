//! A small expression language for string diagrams of CP maps.
//!
//! `a >> b` composes left to right (`b ∘ a`), `a * b` is the tensor
//! product, a postfix `'` takes the dagger. Scalars are non-negative reals.
//!
//! ```
//! use cpmkit::dsl::{check_equation, Environment};
//! use cpmkit::frobenius::classical_operators;
//! use cpmkit::{CMatrix, Tolerance};
//!
//! let (d, e) = classical_operators(&CMatrix::identity(2));
//! let env = Environment::new().with_matrix("d", d).unwrap().with_matrix("e", e).unwrap();
//! let left_unit = check_equation("double(d) >> (double(e) * id(2))", "id(2)", &env, Tolerance::default()).unwrap();
//! assert!(left_unit.holds);
//! ```

mod ast;
mod eval;
mod parser;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use ast::{Expr, ExprKind, Span};
pub use eval::{check_equation, evaluate, Binding, BindingRecord, DslError, Environment, EquationCheck};
pub use parser::{parse, ParseError};

use crate::frobenius::ComonoidCPM;

/// Equation file: `{"lhs": text, "rhs": text}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquationFile {
    pub lhs: String,
    pub rhs: String,
}

/// Environment binding a comonoid as `delta` and `epsilon`.
pub fn comonoid_environment(c: &ComonoidCPM) -> Environment {
    Environment::new()
        .with_map("delta", c.delta.clone())
        .and_then(|env| env.with_map("epsilon", c.epsilon.clone()))
        .expect("fixed names are valid")
}

/// The comonoid and isometry laws over `delta`/`epsilon`, named as in
/// [`crate::frobenius::LawResiduals`].
pub fn comonoid_law_equations(dim: usize) -> Vec<(&'static str, EquationFile)> {
    let eq = |lhs: String, rhs: String| EquationFile { lhs, rhs };
    vec![
        (
            "coassoc",
            eq(
                format!("delta >> (delta * id({dim}))"),
                format!("delta >> (id({dim}) * delta)"),
            ),
        ),
        (
            "counit_left",
            eq(format!("delta >> (epsilon * id({dim}))"), format!("id({dim})")),
        ),
        (
            "counit_right",
            eq(format!("delta >> (id({dim}) * epsilon)"), format!("id({dim})")),
        ),
        ("isometry", eq("delta >> delta'".into(), format!("id({dim})"))),
    ]
}

/// Random untyped expression of depth at most `depth` over the given names.
///
/// Used for print/parse round-trip checks; the result need not type-check.
pub fn random_expr<R: Rng + ?Sized>(rng: &mut R, depth: usize, names: &[&str]) -> Expr {
    let leaf = depth == 0 || rng.random_bool(0.3);
    if leaf {
        let n = rng.random_range(1..=4);
        let name = names[rng.random_range(0..names.len())];
        return match rng.random_range(0..5) {
            0 => Expr::id(n),
            1 => Expr::discard(n),
            2 => Expr::prepare(n),
            3 => Expr::double(name),
            _ => Expr::reference(name),
        };
    }
    match rng.random_range(0..4) {
        0 => random_expr(rng, depth - 1, names).dagger(),
        1 => random_expr(rng, depth - 1, names).tensor(random_expr(rng, depth - 1, names)),
        2 => random_expr(rng, depth - 1, names).then(random_expr(rng, depth - 1, names)),
        _ => {
            let c = rng.random_range(0.0..4.0);
            Expr::scale(c, random_expr(rng, depth - 1, names))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpmap::{choi_distance, identity};
    use crate::frobenius::{classical_operators, classical_structure, law_residuals};
    use crate::tensor::{CMatrix, Tolerance};

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn standard_env() -> Environment {
        let (d, e) = classical_operators(&CMatrix::identity(2));
        Environment::new()
            .with_matrix("d", d)
            .unwrap()
            .with_matrix("e", e)
            .unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let env = standard_env();
        let f = evaluate(&parse("id(2) * id(2)").unwrap(), &env).unwrap();
        assert!(choi_distance(&f, &identity(4).unwrap()).unwrap() <= 1e-15);

        let left = evaluate(&parse("double(d) >> (double(e) * id(2))").unwrap(), &env).unwrap();
        assert!(choi_distance(&left, &identity(2).unwrap()).unwrap() <= 1e-12);

        let iso = evaluate(&parse("double(d) >> double(d)'").unwrap(), &env).unwrap();
        assert!(choi_distance(&iso, &identity(2).unwrap()).unwrap() <= 1e-12);
    }

    #[test]
    fn evaluation_errors() {
        let env = standard_env();
        match evaluate(&parse("id(2) >> double(zz)").unwrap(), &env) {
            Err(DslError::UnboundName { name, span }) => {
                assert_eq!(name, "zz");
                assert_eq!(span.column, 10);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            evaluate(&parse("id(3) >> double(d)").unwrap(), &env),
            Err(DslError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            evaluate(&parse("d").unwrap(), &env),
            Err(DslError::WrongBindingKind { .. })
        ));
        assert!(matches!(
            evaluate(&parse("id(0)").unwrap(), &env),
            Err(DslError::Numeric { .. })
        ));
        assert!(Environment::new().with_matrix("9x", CMatrix::identity(1)).is_err());
    }

    #[test]
    fn check_equation_examples() {
        let env = standard_env();
        let c = check_equation(
            "double(d) >> (double(d) * id(2))",
            "double(d) >> (id(2) * double(d))",
            &env,
            tol(),
        )
        .unwrap();
        assert!(c.holds && c.residual <= 1e-10);

        // discard(2) has Choi I_2 (norm sqrt 2); scaling by 1.5 leaves a gap of 0.5 sqrt 2.
        let c = check_equation("discard(2)", "discard(2) >> scale(1.5, id(1))", &env, tol()).unwrap();
        assert!(!c.holds);
        assert!((c.residual - 0.5 * 2f64.sqrt()).abs() <= 1e-12);

        assert!(matches!(
            check_equation("id(2)", "id(3)", &env, tol()),
            Err(DslError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn law_equations_match_law_residuals() {
        let c = classical_structure(&CMatrix::identity(3), tol()).unwrap();
        let env = comonoid_environment(&c);
        let laws = law_residuals(&c, tol()).unwrap();
        let expected = [laws.coassoc, laws.counit_left, laws.counit_right, laws.isometry];
        for ((name, eq), want) in comonoid_law_equations(3).iter().zip(expected) {
            let got = check_equation(&eq.lhs, &eq.rhs, &env, tol()).unwrap();
            assert!((got.residual - want).abs() <= 1e-12, "{name}");
            assert!(got.holds, "{name}");
        }
    }
}
