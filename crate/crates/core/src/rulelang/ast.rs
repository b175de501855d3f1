use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::value::Value;

/// A source position. Spans never take part in AST equality, so a program
/// and its pretty-printed re-parse compare equal.
#[derive(Debug, Clone, Copy, Default, Eq)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

impl Span {
    pub fn new(line: usize, column: usize) -> Self {
        Span { line, column }
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

/// Named arguments in source order. Positional arguments are stored under
/// `arg0`, `arg1`, ...
pub type Args = Vec<(String, Expr)>;

pub fn positional_name(index: usize) -> String {
    alloc::format!("arg{index}")
}

/// Result field of functional and aggregating predicates.
pub const VALUE_FIELD: &str = "value";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Program {
    pub rules: Vec<Rule>,
}

impl Program {
    /// Rules defining `predicate`, in source order.
    pub fn rules_for<'a, 'b>(
        &'a self,
        predicate: &'b str,
    ) -> impl Iterator<Item = &'a Rule> + use<'a, 'b> {
        self.rules
            .iter()
            .filter(move |r| r.head.predicate == predicate)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub head: HeadAtom,
    pub body: Option<Body>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadAtom {
    pub predicate: String,
    pub args: Args,
    pub form: HeadForm,
}

#[derive(Debug, Clone, PartialEq)]
pub enum HeadForm {
    /// `P(args)`
    Relational,
    /// `F(args) = expr`
    Functional(Expr),
    /// `P(args) Agg= term`
    Aggregating { aggregation: String, term: AggTerm },
}

/// The folded expression of an aggregation: `lhs -> rhs` or just `rhs`.
///
/// For `WeightedAverage` the left side is the weight; for `ArgMin`/`ArgMax`
/// the left side is the returned value and the right side orders it.
#[derive(Debug, Clone, PartialEq)]
pub struct AggTerm {
    pub lhs: Option<Expr>,
    pub rhs: Expr,
}

/// Disjunction of conjunctions, in source order.
#[derive(Debug, Clone, PartialEq)]
pub struct Body {
    pub disjuncts: Vec<Conjunction>,
}

pub type Conjunction = Vec<Literal>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EqOp {
    /// `=`
    Assign,
    /// `==`
    Equal,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Atom {
        predicate: String,
        args: Args,
        span: Span,
    },
    Eq {
        op: EqOp,
        lhs: Expr,
        rhs: Expr,
        span: Span,
    },
    In {
        element: Expr,
        list: Expr,
        span: Span,
    },
    Guard {
        expr: Expr,
        span: Span,
    },
}

impl Literal {
    pub fn span(&self) -> Span {
        match self {
            Literal::Atom { span, .. }
            | Literal::Eq { span, .. }
            | Literal::In { span, .. }
            | Literal::Guard { span, .. } => *span,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Mul,
    Div,
    Add,
    Sub,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
        }
    }

    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Mul | BinOp::Div => 4,
            BinOp::Add | BinOp::Sub => 3,
            _ => 2,
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(Value),
    Var(String),
    Field(Box<Expr>, String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Record(Vec<(String, Expr)>),
    List(Vec<Expr>),
    /// Builtin or predicate call in expression position.
    Call {
        name: String,
        args: Args,
    },
    Aggregate(Box<AggregateExpr>),
}

/// `Agg { lhs -> rhs :- body }`
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateExpr {
    pub aggregation: String,
    pub term: AggTerm,
    pub body: Body,
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.into())
    }

    pub fn num(n: f64) -> Expr {
        Expr::Const(Value::Number(n))
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    /// Variables occurring free in the expression (aggregate bodies are
    /// their own scope, but may read outer variables).
    pub fn visit_vars<'a>(&'a self, f: &mut dyn FnMut(&'a str)) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => f(v),
            Expr::Field(e, _) | Expr::Neg(e) => e.visit_vars(f),
            Expr::Binary(_, a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
            Expr::Record(fields) | Expr::Call { args: fields, .. } => {
                fields.iter().for_each(|(_, e)| e.visit_vars(f))
            }
            Expr::List(items) => items.iter().for_each(|e| e.visit_vars(f)),
            Expr::Aggregate(agg) => {
                if let Some(l) = &agg.term.lhs {
                    l.visit_vars(f);
                }
                agg.term.rhs.visit_vars(f);
                for conj in &agg.body.disjuncts {
                    for lit in conj {
                        lit.visit_exprs(&mut |e| e.visit_vars(f));
                    }
                }
            }
        }
    }

    /// Every call (builtin or predicate) in the expression, including calls
    /// inside aggregate bodies.
    pub fn visit_calls<'a>(&'a self, f: &mut dyn FnMut(&'a str, &'a Args)) {
        match self {
            Expr::Const(_) | Expr::Var(_) => {}
            Expr::Field(e, _) | Expr::Neg(e) => e.visit_calls(f),
            Expr::Binary(_, a, b) => {
                a.visit_calls(f);
                b.visit_calls(f);
            }
            Expr::Record(fields) => fields.iter().for_each(|(_, e)| e.visit_calls(f)),
            Expr::Call { name, args } => {
                f(name, args);
                args.iter().for_each(|(_, e)| e.visit_calls(f));
            }
            Expr::List(items) => items.iter().for_each(|e| e.visit_calls(f)),
            Expr::Aggregate(agg) => {
                if let Some(l) = &agg.term.lhs {
                    l.visit_calls(f);
                }
                agg.term.rhs.visit_calls(f);
                agg.body.visit_calls(f);
            }
        }
    }
}

impl Literal {
    pub fn visit_exprs<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        match self {
            Literal::Atom { args, .. } => args.iter().for_each(|(_, e)| f(e)),
            Literal::Eq { lhs, rhs, .. } => {
                f(lhs);
                f(rhs);
            }
            Literal::In { element, list, .. } => {
                f(element);
                f(list);
            }
            Literal::Guard { expr, .. } => f(expr),
        }
    }
}

impl Body {
    /// Calls and atoms anywhere in the body; atoms are reported as calls.
    pub fn visit_calls<'a>(&'a self, f: &mut dyn FnMut(&'a str, &'a Args)) {
        for conj in &self.disjuncts {
            for lit in conj {
                if let Literal::Atom {
                    predicate, args, ..
                } = lit
                {
                    f(predicate, args);
                }
                lit.visit_exprs(&mut |e| e.visit_calls(f));
            }
        }
    }
}

impl Rule {
    pub fn is_fact(&self) -> bool {
        self.body.is_none()
    }

    /// Every call in the head and body, atoms included.
    pub fn visit_calls<'a>(&'a self, f: &mut dyn FnMut(&'a str, &'a Args)) {
        for (_, e) in &self.head.args {
            e.visit_calls(f);
        }
        match &self.head.form {
            HeadForm::Relational => {}
            HeadForm::Functional(e) => e.visit_calls(f),
            HeadForm::Aggregating { term, .. } => {
                if let Some(l) = &term.lhs {
                    l.visit_calls(f);
                }
                term.rhs.visit_calls(f);
            }
        }
        if let Some(body) = &self.body {
            body.visit_calls(f);
        }
    }
}
