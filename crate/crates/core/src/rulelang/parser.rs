use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::ast::*;
use super::lexer::{tokenize, unescape, LexError, Token, TokenKind};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    /// What the parser was looking for, when known.
    pub expected: Option<String>,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)?;
        if let Some(exp) = &self.expected {
            write!(f, " (expected {exp})")?;
        }
        Ok(())
    }
}

impl From<LexError> for SyntaxError {
    fn from(e: LexError) -> Self {
        SyntaxError {
            line: e.line,
            column: e.column,
            message: e.message,
            expected: None,
        }
    }
}

/// Parses a complete program.
pub fn parse_program(source: &str) -> Result<Program, SyntaxError> {
    let tokens = tokenize(source)?;
    let eof = eof_position(source, &tokens);
    let mut p = Parser {
        tokens,
        pos: 0,
        eof,
    };
    p.program()
}

fn eof_position(source: &str, tokens: &[Token]) -> Span {
    match tokens.last() {
        None => Span::new(1, 1),
        Some(t) => {
            let text = &source[t.start..t.end];
            let newlines = text.matches('\n').count();
            if newlines == 0 {
                Span::new(t.line, t.column + text.chars().count())
            } else {
                let tail = text.rsplit('\n').next().unwrap_or("");
                Span::new(t.line + newlines, tail.chars().count() + 1)
            }
        }
    }
}

pub(crate) fn is_predicate_name(s: &str) -> bool {
    s.starts_with(|c: char| c.is_ascii_uppercase())
}

pub(crate) fn is_variable_name(s: &str) -> bool {
    s.starts_with(|c: char| c.is_ascii_lowercase() || c == '_')
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    eof: Span,
}

type PResult<T> = Result<T, SyntaxError>;

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&Token> {
        self.tokens.get(self.pos + n)
    }

    fn here(&self) -> Span {
        self.peek()
            .map_or(self.eof, |t| Span::new(t.line, t.column))
    }

    fn error_here(&self, message: impl Into<String>, expected: &str) -> SyntaxError {
        let at = self.here();
        let found = self
            .peek()
            .map_or_else(|| "end of input".to_string(), |t| format!("`{}`", t.text));
        SyntaxError {
            line: at.line,
            column: at.column,
            message: format!("{}, found {found}", message.into()),
            expected: Some(expected.to_string()),
        }
    }

    fn at_punct(&self, p: &str) -> bool {
        self.peek().is_some_and(|t| t.is_punct(p))
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.at_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.error_here("unexpected token", &format!("`{p}`")))
        }
    }

    fn identifier(&mut self, what: &str) -> PResult<(String, Span)> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => {
                let out = (t.text.clone(), Span::new(t.line, t.column));
                self.pos += 1;
                Ok(out)
            }
            _ => Err(self.error_here("unexpected token", what)),
        }
    }

    fn program(&mut self) -> PResult<Program> {
        let mut rules = Vec::new();
        while self.peek().is_some() {
            rules.push(self.rule()?);
            if !self.eat_punct(";") && self.peek().is_some() {
                return Err(self.error_here("unexpected token after rule", "`;`"));
            }
        }
        Ok(Program { rules })
    }

    fn rule(&mut self) -> PResult<Rule> {
        let span = self.here();
        let (predicate, pspan) = self.identifier("a predicate name")?;
        if !is_predicate_name(&predicate) {
            return Err(SyntaxError {
                line: pspan.line,
                column: pspan.column,
                message: format!("predicate names start with an uppercase letter: `{predicate}`"),
                expected: Some("a predicate name".into()),
            });
        }
        self.expect_punct("(")?;
        let args = self.args(")")?;
        let form = if self.eat_punct("=") {
            HeadForm::Functional(self.expr()?)
        } else if self.peek().is_some_and(|t| t.kind == TokenKind::Identifier)
            && self.peek_at(1).is_some_and(|t| t.is_punct("="))
        {
            let (aggregation, _) = self.identifier("an aggregation name")?;
            self.expect_punct("=")?;
            HeadForm::Aggregating {
                aggregation,
                term: self.agg_term()?,
            }
        } else {
            HeadForm::Relational
        };
        let body = if self.eat_punct(":-") {
            Some(self.body()?)
        } else {
            None
        };
        Ok(Rule {
            head: HeadAtom {
                predicate,
                args,
                form,
            },
            body,
            span,
        })
    }

    fn agg_term(&mut self) -> PResult<AggTerm> {
        let first = self.expr()?;
        if self.eat_punct("->") {
            Ok(AggTerm {
                lhs: Some(first),
                rhs: self.expr()?,
            })
        } else {
            Ok(AggTerm {
                lhs: None,
                rhs: first,
            })
        }
    }

    /// Argument list up to and including `close`. Positional arguments must
    /// precede named ones.
    fn args(&mut self, close: &str) -> PResult<Args> {
        let mut args: Args = Vec::new();
        let mut seen_named = false;
        if self.eat_punct(close) {
            return Ok(args);
        }
        loop {
            let start = self.here();
            let is_named = self.peek().is_some_and(|t| t.kind == TokenKind::Identifier)
                && self.peek_at(1).is_some_and(|t| t.is_punct(":"));
            let (name, value) = if is_named {
                let (name, _) = self.identifier("a field name")?;
                self.expect_punct(":")?;
                seen_named = true;
                let value = if self.at_punct(",") || self.at_punct(close) {
                    if !is_variable_name(&name) {
                        return Err(SyntaxError {
                            line: start.line,
                            column: start.column,
                            message: format!("shorthand `{name}:` needs a variable-style name"),
                            expected: Some("an expression".into()),
                        });
                    }
                    Expr::Var(name.clone())
                } else {
                    self.expr()?
                };
                (name, value)
            } else {
                if seen_named {
                    return Err(self.error_here(
                        "positional argument after named argument",
                        "a named argument",
                    ));
                }
                (positional_name(args.len()), self.expr()?)
            };
            if args.iter().any(|(n, _)| *n == name) {
                return Err(SyntaxError {
                    line: start.line,
                    column: start.column,
                    message: format!("duplicate argument `{name}`"),
                    expected: None,
                });
            }
            args.push((name, value));
            if self.eat_punct(",") {
                continue;
            }
            self.expect_punct(close)?;
            return Ok(args);
        }
    }

    fn body(&mut self) -> PResult<Body> {
        let mut disjuncts = alloc::vec![self.conjunction()?];
        while self.eat_punct("|") {
            disjuncts.push(self.conjunction()?);
        }
        Ok(Body { disjuncts })
    }

    fn conjunction(&mut self) -> PResult<Conjunction> {
        let mut lits = alloc::vec![self.literal()?];
        while self.eat_punct(",") {
            lits.push(self.literal()?);
        }
        Ok(lits)
    }

    fn literal(&mut self) -> PResult<Literal> {
        let span = self.here();
        let lhs = self.expr()?;
        if self.eat_punct("=") {
            let rhs = self.expr()?;
            return Ok(Literal::Eq {
                op: EqOp::Assign,
                lhs,
                rhs,
                span,
            });
        }
        if self.peek().is_some_and(|t| t.is_keyword("in")) {
            self.pos += 1;
            let list = self.expr()?;
            return Ok(Literal::In {
                element: lhs,
                list,
                span,
            });
        }
        Ok(match lhs {
            Expr::Binary(BinOp::Eq, a, b) => Literal::Eq {
                op: EqOp::Equal,
                lhs: *a,
                rhs: *b,
                span,
            },
            Expr::Call { name, args } => Literal::Atom {
                predicate: name,
                args,
                span,
            },
            expr => Literal::Guard { expr, span },
        })
    }

    fn expr(&mut self) -> PResult<Expr> {
        let lhs = self.additive()?;
        let op = match self.peek() {
            Some(t) if t.kind == TokenKind::Punctuation => match t.text.as_str() {
                "==" => Some(BinOp::Eq),
                "!=" => Some(BinOp::Ne),
                "<" => Some(BinOp::Lt),
                "<=" => Some(BinOp::Le),
                ">" => Some(BinOp::Gt),
                ">=" => Some(BinOp::Ge),
                _ => None,
            },
            _ => None,
        };
        match op {
            None => Ok(lhs),
            Some(op) => {
                self.pos += 1;
                let rhs = self.additive()?;
                Ok(Expr::binary(op, lhs, rhs))
            }
        }
    }

    fn additive(&mut self) -> PResult<Expr> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = if self.eat_punct("+") {
                BinOp::Add
            } else if self.eat_punct("-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.multiplicative()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat_punct("*") {
                BinOp::Mul
            } else if self.eat_punct("/") {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat_punct("-") {
            // A sign directly on a number literal folds into the constant.
            let literal = self.peek().is_some_and(|t| t.kind == TokenKind::Number);
            return Ok(match self.unary()? {
                Expr::Const(Value::Number(n)) if literal => Expr::Const(Value::Number(-n)),
                e => Expr::Neg(Box::new(e)),
            });
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        while self.eat_punct(".") {
            let (field, _) = self.identifier("a field name")?;
            e = Expr::Field(Box::new(e), field);
        }
        Ok(e)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error_here("unexpected end of input", "an expression"));
        };
        match tok.kind {
            TokenKind::Number => {
                self.pos += 1;
                let n: f64 = tok.text.parse().map_err(|_| SyntaxError {
                    line: tok.line,
                    column: tok.column,
                    message: format!("invalid number `{}`", tok.text),
                    expected: None,
                })?;
                if !n.is_finite() {
                    return Err(SyntaxError {
                        line: tok.line,
                        column: tok.column,
                        message: format!("number out of range `{}`", tok.text),
                        expected: None,
                    });
                }
                Ok(Expr::Const(Value::Number(n)))
            }
            TokenKind::String => {
                self.pos += 1;
                Ok(Expr::Const(Value::from(unescape(&tok.text))))
            }
            TokenKind::Keyword => {
                self.pos += 1;
                match tok.text.as_str() {
                    "null" => Ok(Expr::Const(Value::Null)),
                    "true" => Ok(Expr::Const(Value::Bool(true))),
                    "false" => Ok(Expr::Const(Value::Bool(false))),
                    _ => {
                        self.pos -= 1;
                        Err(self.error_here("unexpected keyword", "an expression"))
                    }
                }
            }
            TokenKind::Identifier => {
                self.pos += 1;
                if is_predicate_name(&tok.text) {
                    if self.eat_punct("(") {
                        let args = self.args(")")?;
                        Ok(Expr::Call {
                            name: tok.text,
                            args,
                        })
                    } else if self.eat_punct("{") {
                        self.aggregate(tok.text)
                    } else {
                        Err(self
                            .error_here("expected call or aggregation after name", "`(` or `{`"))
                    }
                } else if self.at_punct("(") {
                    Err(SyntaxError {
                        line: tok.line,
                        column: tok.column,
                        message: format!(
                            "predicate names start with an uppercase letter: `{}`",
                            tok.text
                        ),
                        expected: None,
                    })
                } else {
                    Ok(Expr::Var(tok.text))
                }
            }
            TokenKind::Punctuation => match tok.text.as_str() {
                "(" => {
                    self.pos += 1;
                    let e = self.expr()?;
                    self.expect_punct(")")?;
                    Ok(e)
                }
                "[" => {
                    self.pos += 1;
                    let mut items = Vec::new();
                    while !self.eat_punct("]") {
                        items.push(self.expr()?);
                        if !self.eat_punct(",") {
                            self.expect_punct("]")?;
                            break;
                        }
                    }
                    Ok(Expr::List(items))
                }
                "{" => {
                    self.pos += 1;
                    self.record()
                }
                _ => Err(self.error_here("unexpected token", "an expression")),
            },
        }
    }

    fn record(&mut self) -> PResult<Expr> {
        let mut fields: Vec<(String, Expr)> = Vec::new();
        while !self.eat_punct("}") {
            let start = self.here();
            let (name, _) = self.identifier("a field name")?;
            self.expect_punct(":")?;
            let value = if self.at_punct(",") || self.at_punct("}") {
                Expr::Var(name.clone())
            } else {
                self.expr()?
            };
            if fields.iter().any(|(n, _)| *n == name) {
                return Err(SyntaxError {
                    line: start.line,
                    column: start.column,
                    message: format!("duplicate field `{name}`"),
                    expected: None,
                });
            }
            fields.push((name, value));
            if !self.eat_punct(",") {
                self.expect_punct("}")?;
                break;
            }
        }
        Ok(Expr::Record(fields))
    }

    fn aggregate(&mut self, aggregation: String) -> PResult<Expr> {
        let term = self.agg_term()?;
        self.expect_punct(":-")?;
        let body = self.body()?;
        self.expect_punct("}")?;
        Ok(Expr::Aggregate(Box::new(AggregateExpr {
            aggregation,
            term,
            body,
        })))
    }
}
