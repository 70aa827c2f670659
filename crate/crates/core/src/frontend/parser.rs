// SPDX-License-Identifier: Apache-2.0

//! Recursive-descent parser.

use std::collections::BTreeSet;

use thiserror::Error;

use super::ast::*;
use super::lexer::{Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("{pos}: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        pos: Pos,
        expected: Vec<String>,
        found: String,
    },
    #[error("{pos}: function `{function}` has a control path that does not end in `return`")]
    MissingReturn { function: String, pos: Pos },
    #[error("{pos}: unreachable statement after `return`")]
    UnreachableCode { pos: Pos },
    #[error("{pos}: duplicate function `{name}`")]
    DuplicateFunction { name: String, pos: Pos },
    #[error("{pos}: duplicate parameter `{name}`")]
    DuplicateParam { name: String, pos: Pos },
    #[error("{pos}: unknown type `{name}` (expected Int64, Float64 or Bool)")]
    UnknownType { name: String, pos: Pos },
    #[error("{pos}: function `{function}` has an empty body")]
    EmptyBody { function: String, pos: Pos },
    #[error("{pos}: program contains no functions")]
    NoFunctions { pos: Pos },
}

impl ParseError {
    pub fn pos(&self) -> Pos {
        match self {
            ParseError::Syntax { pos, .. }
            | ParseError::MissingReturn { pos, .. }
            | ParseError::UnreachableCode { pos }
            | ParseError::DuplicateFunction { pos, .. }
            | ParseError::DuplicateParam { pos, .. }
            | ParseError::UnknownType { pos, .. }
            | ParseError::EmptyBody { pos, .. }
            | ParseError::NoFunctions { pos } => *pos,
        }
    }
}

type PResult<T> = Result<T, ParseError>;

pub fn parse(tokens: &[Token]) -> PResult<SourceProgram> {
    let mut p = Parser { tokens, idx: 0 };
    let program = p.program()?;
    for f in &program.functions {
        check_function(f)?;
    }
    Ok(program)
}

struct Parser<'t> {
    tokens: &'t [Token],
    idx: usize,
}

/// Tokens that end a statement list.
fn is_block_end(kind: &TokenKind) -> bool {
    matches!(kind, TokenKind::End | TokenKind::Else | TokenKind::ElseIf)
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.idx)
    }

    fn peek_kind(&self) -> Option<&'t TokenKind> {
        self.peek().map(|t| &t.kind)
    }

    fn pos(&self) -> Pos {
        match self.peek() {
            Some(t) => t.pos,
            None => self
                .tokens
                .last()
                .map(|t| Pos::new(t.pos.line, t.pos.col + 1))
                .unwrap_or(Pos::new(1, 1)),
        }
    }

    fn found(&self) -> String {
        self.peek()
            .map(|t| t.kind.to_string())
            .unwrap_or_else(|| "end of input".to_string())
    }

    fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        Err(ParseError::Syntax {
            pos: self.pos(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.found(),
        })
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek_kind() == Some(kind) {
            self.idx += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind) -> PResult<Pos> {
        let pos = self.pos();
        if self.eat(&kind) {
            Ok(pos)
        } else {
            self.error(&[&kind.to_string()])
        }
    }

    fn ident(&mut self) -> PResult<(String, Pos)> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::Ident(name),
                pos,
            }) => {
                self.idx += 1;
                Ok((name.clone(), *pos))
            }
            _ => self.error(&["identifier"]),
        }
    }

    fn skip_separators(&mut self) {
        while matches!(
            self.peek_kind(),
            Some(TokenKind::Newline | TokenKind::Semicolon)
        ) {
            self.idx += 1;
        }
    }

    fn skip_newlines(&mut self) {
        while self.peek_kind() == Some(&TokenKind::Newline) {
            self.idx += 1;
        }
    }

    fn program(&mut self) -> PResult<SourceProgram> {
        let mut functions: Vec<FunctionDef> = Vec::new();
        self.skip_separators();
        while self.peek().is_some() {
            let f = self.function()?;
            if functions.iter().any(|g| g.name == f.name) {
                return Err(ParseError::DuplicateFunction {
                    name: f.name,
                    pos: f.pos,
                });
            }
            functions.push(f);
            self.skip_separators();
        }
        if functions.is_empty() {
            return Err(ParseError::NoFunctions { pos: self.pos() });
        }
        Ok(SourceProgram { functions })
    }

    fn function(&mut self) -> PResult<FunctionDef> {
        let pos = self.expect(TokenKind::Function)?;
        let (name, _) = self.ident()?;
        self.expect(TokenKind::LParen)?;
        let mut params: Vec<Param> = Vec::new();
        if !self.eat(&TokenKind::RParen) {
            loop {
                let (pname, ppos) = self.ident()?;
                let ty = if self.eat(&TokenKind::ColonColon) {
                    let (tname, tpos) = self.ident()?;
                    Some(TypeName::from_ident(&tname).ok_or(ParseError::UnknownType {
                        name: tname,
                        pos: tpos,
                    })?)
                } else {
                    None
                };
                if params.iter().any(|p| p.name == pname) {
                    return Err(ParseError::DuplicateParam {
                        name: pname,
                        pos: ppos,
                    });
                }
                params.push(Param {
                    name: pname,
                    ty,
                    pos: ppos,
                });
                if self.eat(&TokenKind::RParen) {
                    break;
                }
                if !self.eat(&TokenKind::Comma) {
                    return self.error(&["`,`", "`)`"]);
                }
            }
        }
        let body = self.block()?;
        self.expect(TokenKind::End)?;
        if body.is_empty() {
            return Err(ParseError::EmptyBody {
                function: name,
                pos,
            });
        }
        Ok(FunctionDef {
            name,
            params,
            body,
            pos,
        })
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        let mut stmts = Vec::new();
        loop {
            self.skip_separators();
            match self.peek_kind() {
                None => return self.error(&["`end`"]),
                Some(k) if is_block_end(k) => return Ok(stmts),
                Some(_) => {}
            }
            stmts.push(self.statement()?);
            match self.peek_kind() {
                Some(TokenKind::Newline | TokenKind::Semicolon) => {}
                Some(k) if is_block_end(k) => {}
                _ => return self.error(&["newline", "`;`", "`end`"]),
            }
        }
    }

    fn statement(&mut self) -> PResult<Stmt> {
        let pos = self.pos();
        let kind = match self.peek_kind() {
            Some(TokenKind::If) => {
                self.idx += 1;
                let cond = self.expr()?;
                let then_body = self.block()?;
                let mut elifs = Vec::new();
                let mut else_body = None;
                loop {
                    if self.eat(&TokenKind::ElseIf) {
                        let c = self.expr()?;
                        let b = self.block()?;
                        elifs.push((c, b));
                    } else if self.eat(&TokenKind::Else) {
                        else_body = Some(self.block()?);
                        self.expect(TokenKind::End)?;
                        break;
                    } else {
                        self.expect(TokenKind::End)?;
                        break;
                    }
                }
                StmtKind::If {
                    cond,
                    then_body,
                    elifs,
                    else_body,
                }
            }
            Some(TokenKind::While) => {
                self.idx += 1;
                let cond = self.expr()?;
                let body = self.block()?;
                self.expect(TokenKind::End)?;
                StmtKind::While { cond, body }
            }
            Some(TokenKind::Return) => {
                self.idx += 1;
                StmtKind::Return(self.expr()?)
            }
            Some(TokenKind::Ident(_)) => {
                let (target, _) = self.ident()?;
                self.expect(TokenKind::Assign)?;
                let value = self.expr()?;
                StmtKind::Assign { target, value }
            }
            _ => return self.error(&["statement"]),
        };
        Ok(Stmt { kind, pos })
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binary_op(&self) -> Option<BinOp> {
        Some(match self.peek_kind()? {
            TokenKind::Plus => BinOp::Add,
            TokenKind::Minus => BinOp::Sub,
            TokenKind::Star => BinOp::Mul,
            TokenKind::Slash => BinOp::Div,
            TokenKind::Percent => BinOp::Rem,
            TokenKind::Lt => BinOp::Lt,
            TokenKind::Le => BinOp::Le,
            TokenKind::Gt => BinOp::Gt,
            TokenKind::Ge => BinOp::Ge,
            TokenKind::EqEq => BinOp::Eq,
            TokenKind::Ne => BinOp::Ne,
            TokenKind::AndAnd => BinOp::And,
            TokenKind::OrOr => BinOp::Or,
            _ => return None,
        })
    }

    /// Precedence climbing; a trailing operator continues the expression
    /// onto the next line.
    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binary_op() {
            if op.precedence() < min_prec {
                break;
            }
            let pos = lhs.pos;
            self.idx += 1;
            self.skip_newlines();
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), pos);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        let op = match self.peek_kind() {
            Some(TokenKind::Minus) => UnOp::Neg,
            Some(TokenKind::Bang) => UnOp::Not,
            _ => return self.primary(),
        };
        self.idx += 1;
        let operand = self.unary()?;
        Ok(Expr::new(ExprKind::Unary(op, Box::new(operand)), pos))
    }

    fn primary(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        let kind = match self.peek_kind() {
            Some(TokenKind::Int(v)) => ExprKind::Int(*v),
            Some(TokenKind::Float(v)) => ExprKind::Float(FloatLit(*v)),
            Some(TokenKind::True) => ExprKind::Bool(true),
            Some(TokenKind::False) => ExprKind::Bool(false),
            Some(TokenKind::Ident(name)) => ExprKind::Var(name.clone()),
            Some(TokenKind::LParen) => {
                self.idx += 1;
                let inner = self.expr()?;
                self.expect(TokenKind::RParen)?;
                return Ok(inner);
            }
            _ => return self.error(&["expression"]),
        };
        self.idx += 1;
        Ok(Expr::new(kind, pos))
    }
}

/// Rejects functions with a path that falls off the end, or with
/// statements that follow an unconditional return.
fn check_function(f: &FunctionDef) -> PResult<()> {
    if !always_returns(&f.body)? {
        return Err(ParseError::MissingReturn {
            function: f.name.clone(),
            pos: f.pos,
        });
    }
    Ok(())
}

fn always_returns(body: &[Stmt]) -> PResult<bool> {
    let mut returned = false;
    for stmt in body {
        if returned {
            return Err(ParseError::UnreachableCode { pos: stmt.pos });
        }
        returned = match &stmt.kind {
            StmtKind::Return(_) => true,
            StmtKind::Assign { .. } => false,
            StmtKind::While { body, .. } => {
                // The loop may run zero times, but its body is still checked.
                always_returns(body)?;
                false
            }
            StmtKind::If {
                then_body,
                elifs,
                else_body,
                ..
            } => {
                let mut all = always_returns(then_body)?;
                for (_, b) in elifs {
                    all &= always_returns(b)?;
                }
                match else_body {
                    Some(b) => all & always_returns(b)?,
                    None => false,
                }
            }
        };
    }
    Ok(returned)
}

/// Names assigned anywhere inside `body`, including nested blocks.
pub fn assigned_vars(body: &[Stmt]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_assigned(body, &mut out);
    out
}

fn collect_assigned(body: &[Stmt], out: &mut BTreeSet<String>) {
    for stmt in body {
        match &stmt.kind {
            StmtKind::Assign { target, .. } => {
                out.insert(target.clone());
            }
            StmtKind::If {
                then_body,
                elifs,
                else_body,
                ..
            } => {
                collect_assigned(then_body, out);
                for (_, b) in elifs {
                    collect_assigned(b, out);
                }
                if let Some(b) = else_body {
                    collect_assigned(b, out);
                }
            }
            StmtKind::While { body, .. } => collect_assigned(body, out),
            StmtKind::Return(_) => {}
        }
    }
}
