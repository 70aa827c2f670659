// SPDX-License-Identifier: Apache-2.0

//! Lexer, parser and pretty-printer for the `.mjl` source language.
//!
//! The accepted subset is a small Julia-like language:
//!
//! ```text
//! function power(x, n)
//!     result = 1
//!     while n > 0
//!         result = result * x
//!         n = n - 1
//!     end
//!     return result
//! end
//! ```
//!
//! Parameters may carry `::Int64`, `::Float64` or `::Bool` annotations.
//! Statements end at a newline or `;`, and `#` starts a comment.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod printer;

use thiserror::Error;

pub use ast::*;
pub use lexer::{tokenize, LexError, Token, TokenKind};
pub use parser::{assigned_vars, parse, ParseError};
pub use printer::{print_expr, print_function, print_program};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrontendError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

impl FrontendError {
    pub fn pos(&self) -> Pos {
        match self {
            FrontendError::Lex(e) => e.pos,
            FrontendError::Parse(e) => e.pos(),
        }
    }
}

/// Tokenizes and parses `text`.
pub fn parse_source(text: &str) -> Result<SourceProgram, FrontendError> {
    let tokens = tokenize(text)?;
    Ok(parse(&tokens)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn only_function(text: &str) -> FunctionDef {
        let mut p = parse_source(text).unwrap();
        assert_eq!(p.functions.len(), 1);
        p.functions.remove(0)
    }

    #[test]
    fn identity_on_one_line() {
        let f = only_function("function id(x) return x end");
        assert_eq!(f.name, "id");
        assert_eq!(f.body.len(), 1);
        assert!(
            matches!(&f.body[0].kind, StmtKind::Return(e) if e.kind == ExprKind::Var("x".into()))
        );
    }

    #[test]
    fn if_else_corpus_has_one_elif_and_an_else() {
        let f = only_function(corpus::IF_ELSE);
        let ifs: Vec<_> = f
            .body
            .iter()
            .filter_map(|s| match &s.kind {
                StmtKind::If {
                    then_body,
                    elifs,
                    else_body,
                    ..
                } => Some((then_body, elifs, else_body)),
                _ => None,
            })
            .collect();
        assert_eq!(ifs.len(), 1);
        let (then_body, elifs, else_body) = ifs[0];
        assert_eq!(elifs.len(), 1);
        let else_body = else_body.as_ref().expect("else arm");
        let returns = [then_body, &elifs[0].1, else_body]
            .iter()
            .filter(|b| matches!(b.last().map(|s| &s.kind), Some(StmtKind::Return(_))))
            .count();
        assert_eq!(returns, 3);
    }

    #[test]
    fn power_corpus_multiplies_an_accumulator_in_one_loop() {
        let f = only_function(corpus::POWER);
        let loops: Vec<_> = f
            .body
            .iter()
            .filter_map(|s| match &s.kind {
                StmtKind::While { body, .. } => Some(body),
                _ => None,
            })
            .collect();
        assert_eq!(loops.len(), 1);
        let multiplies_self = loops[0].iter().any(|s| match &s.kind {
            StmtKind::Assign { target, value } => matches!(
                &value.kind,
                ExprKind::Binary(BinOp::Mul, lhs, _) if lhs.kind == ExprKind::Var(target.clone())
            ),
            _ => false,
        });
        assert!(multiplies_self);
    }

    #[test]
    fn annotations_and_precedence() {
        let f =
            only_function("function f(a::Int64, b::Float64)\n return a + b * 2 < 3 && !true\nend");
        assert_eq!(f.params[0].ty, Some(TypeName::Int64));
        assert_eq!(f.params[1].ty, Some(TypeName::Float64));
        let StmtKind::Return(e) = &f.body[0].kind else {
            panic!()
        };
        assert_eq!(print_expr(e), "a + b * 2 < 3 && !true");
        let ExprKind::Binary(BinOp::And, lhs, _) = &e.kind else {
            panic!("{e:?}")
        };
        assert!(matches!(lhs.kind, ExprKind::Binary(BinOp::Lt, _, _)));
    }

    #[test]
    fn syntax_errors_carry_positions_and_expectations() {
        let err = parse_source("function f(x)\n  y = \nend").unwrap_err();
        match err {
            FrontendError::Parse(ParseError::Syntax { pos, expected, .. }) => {
                assert_eq!(pos, Pos::new(2, 7));
                assert_eq!(expected, vec!["expression".to_string()]);
            }
            other => panic!("{other:?}"),
        }
        let err = parse_source("function f(x) return x").unwrap_err();
        assert!(matches!(
            err,
            FrontendError::Parse(ParseError::Syntax { .. })
        ));
        assert!(err.to_string().contains("1:"));
    }

    #[test]
    fn missing_return_is_rejected() {
        let err = parse_source("function f(x)\n if x > 0\n return 1\n end\nend").unwrap_err();
        assert!(matches!(
            err,
            FrontendError::Parse(ParseError::MissingReturn { ref function, .. }) if function == "f"
        ));
        let err = parse_source("function f(x)\n while x > 0\n return 1\n end\nend").unwrap_err();
        assert!(matches!(
            err,
            FrontendError::Parse(ParseError::MissingReturn { .. })
        ));
        // Every arm returns, so nothing follows.
        only_function("function f(x)\n if x > 0\n return 1\n else\n return 2\n end\nend");
    }

    type Case = (&'static str, fn(&ParseError) -> bool);

    #[test]
    fn structural_rejects() {
        let cases: [Case; 5] = [
            (
                "function f(x)\n return x\n y = 1\nend",
                |e| matches!(e, ParseError::UnreachableCode { pos } if *pos == Pos::new(3, 2)),
            ),
            ("function f(x, x) return x end", |e| {
                matches!(e, ParseError::DuplicateParam { .. })
            }),
            (
                "function f(x) return x end\nfunction f(y) return y end",
                |e| matches!(e, ParseError::DuplicateFunction { .. }),
            ),
            ("function f(x::Int32) return x end", |e| {
                matches!(e, ParseError::UnknownType { .. })
            }),
            ("# nothing here\n", |e| {
                matches!(e, ParseError::NoFunctions { .. })
            }),
        ];
        for (text, check) in cases {
            match parse_source(text) {
                Err(FrontendError::Parse(e)) => assert!(check(&e), "{text:?}: {e:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn corpus_round_trips_through_printer() {
        for (name, text) in corpus::ALL {
            let first = parse_source(text).unwrap();
            let printed = print_program(&first);
            let second =
                parse_source(&printed).unwrap_or_else(|e| panic!("{name}: {e}\n{printed}"));
            assert_eq!(first, second, "{name}");
        }
    }
}
