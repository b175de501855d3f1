use alloc::string::String;
use core::fmt::Write;

use super::ast::*;
use super::parser::is_variable_name;
use crate::value::Value;

const PREC_UNARY: u8 = 5;
const PREC_ATOM: u8 = 6;

/// Canonical source text for `program`. Re-parsing the output yields an
/// equal AST.
pub fn format_program(program: &Program) -> String {
    let mut out = String::new();
    for (i, rule) in program.rules.iter().enumerate() {
        if i > 0 {
            out.push_str("\n\n");
        }
        write_rule(&mut out, rule);
    }
    out
}

pub fn format_rule(rule: &Rule) -> String {
    let mut out = String::new();
    write_rule(&mut out, rule);
    out
}

pub fn format_expr(expr: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, expr, 0);
    out
}

fn write_rule(out: &mut String, rule: &Rule) {
    out.push_str(&rule.head.predicate);
    write_args(out, &rule.head.args);
    match &rule.head.form {
        HeadForm::Relational => {}
        HeadForm::Functional(e) => {
            out.push_str(" = ");
            write_expr(out, e, 0);
        }
        HeadForm::Aggregating { aggregation, term } => {
            out.push(' ');
            out.push_str(aggregation);
            out.push_str("= ");
            write_term(out, term);
        }
    }
    if let Some(body) = &rule.body {
        out.push_str(" :-\n  ");
        write_body(out, body, " |\n  ", ",\n  ");
    }
    out.push(';');
}

fn write_body(out: &mut String, body: &Body, or_sep: &str, and_sep: &str) {
    for (i, conj) in body.disjuncts.iter().enumerate() {
        if i > 0 {
            out.push_str(or_sep);
        }
        for (j, lit) in conj.iter().enumerate() {
            if j > 0 {
                out.push_str(and_sep);
            }
            write_literal(out, lit);
        }
    }
}

fn write_literal(out: &mut String, lit: &Literal) {
    match lit {
        Literal::Atom {
            predicate, args, ..
        } => {
            out.push_str(predicate);
            write_args(out, args);
        }
        Literal::Eq { op, lhs, rhs, .. } => {
            write_expr(out, lhs, 3);
            out.push_str(match op {
                EqOp::Assign => " = ",
                EqOp::Equal => " == ",
            });
            write_expr(out, rhs, 3);
        }
        Literal::In { element, list, .. } => {
            write_expr(out, element, 3);
            out.push_str(" in ");
            write_expr(out, list, 3);
        }
        Literal::Guard { expr, .. } => write_expr(out, expr, 0),
    }
}

fn write_term(out: &mut String, term: &AggTerm) {
    if let Some(lhs) = &term.lhs {
        write_expr(out, lhs, 0);
        out.push_str(" -> ");
    }
    write_expr(out, &term.rhs, 0);
}

fn write_args(out: &mut String, args: &Args) {
    out.push('(');
    let mut positional = true;
    for (i, (name, value)) in args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        positional = positional && *name == positional_name(i);
        if positional {
            write_expr(out, value, 0);
        } else {
            write_field(out, name, value);
        }
    }
    out.push(')');
}

fn write_field(out: &mut String, name: &str, value: &Expr) {
    out.push_str(name);
    out.push(':');
    if matches!(value, Expr::Var(v) if v == name && is_variable_name(name)) {
        return;
    }
    out.push(' ');
    write_expr(out, value, 0);
}

fn precedence(expr: &Expr) -> u8 {
    match expr {
        Expr::Binary(op, ..) => op.precedence(),
        Expr::Neg(_) => PREC_UNARY,
        Expr::Const(Value::Number(n)) if n.is_sign_negative() => PREC_UNARY,
        _ => PREC_ATOM,
    }
}

fn write_expr(out: &mut String, expr: &Expr, min_prec: u8) {
    let parens = precedence(expr) < min_prec;
    if parens {
        out.push('(');
    }
    match expr {
        Expr::Const(v) => {
            let _ = write!(out, "{v}");
        }
        Expr::Var(name) => out.push_str(name),
        Expr::Field(inner, field) => {
            write_expr(out, inner, PREC_ATOM);
            out.push('.');
            out.push_str(field);
        }
        Expr::Neg(inner) => {
            out.push('-');
            // `-(3)` stays a negation; `-3` would re-parse as a constant.
            let min = match **inner {
                Expr::Const(Value::Number(_)) => PREC_ATOM + 1,
                _ => PREC_UNARY,
            };
            write_expr(out, inner, min);
        }
        Expr::Binary(op, lhs, rhs) => {
            let p = op.precedence();
            let left_min = if op.is_comparison() { p + 1 } else { p };
            write_expr(out, lhs, left_min);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_expr(out, rhs, p + 1);
        }
        Expr::Record(fields) => {
            out.push('{');
            for (i, (name, value)) in fields.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_field(out, name, value);
            }
            out.push('}');
        }
        Expr::List(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, item, 0);
            }
            out.push(']');
        }
        Expr::Call { name, args } => {
            out.push_str(name);
            write_args(out, args);
        }
        Expr::Aggregate(agg) => {
            out.push_str(&agg.aggregation);
            out.push('{');
            write_term(out, &agg.term);
            out.push_str(" :- ");
            write_body(out, &agg.body, " | ", ", ");
            out.push('}');
        }
    }
    if parens {
        out.push(')');
    }
}
