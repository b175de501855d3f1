use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use smallvec::{smallvec, SmallVec};

use super::aggregate::{aggregate, AggItem, Aggregation};
use super::builtins::{self, call_builtin};
use crate::rulelang::{
    analyze, parse_program, Args, Body, Diagnostic, Expr, HeadForm, Literal, Program, ProgramInfo,
    Rule, Span, SyntaxError, VALUE_FIELD,
};
use crate::value::{Record, Value};

/// A row of some relation: named fields.
pub type Row = Record;

/// One fact: a predicate and its row.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Fact {
    pub predicate: String,
    pub row: Row,
}

impl Fact {
    pub fn new(predicate: impl Into<String>, row: Row) -> Self {
        Fact {
            predicate: predicate.into(),
            row,
        }
    }
}

/// Relations keyed by predicate. Rows are deduplicated and always iterate
/// in the canonical value order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FactSet {
    relations: BTreeMap<String, BTreeSet<Row>>,
}

impl FactSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a row; returns false if it was already present.
    pub fn insert(&mut self, predicate: &str, row: Row) -> bool {
        match self.relations.get_mut(predicate) {
            Some(rows) => rows.insert(row),
            None => {
                self.relations
                    .insert(predicate.to_string(), BTreeSet::from([row]));
                true
            }
        }
    }

    pub fn insert_fact(&mut self, fact: Fact) -> bool {
        self.insert(&fact.predicate, fact.row)
    }

    pub fn rows<'a>(&'a self, predicate: &str) -> impl Iterator<Item = &'a Row> + 'a {
        self.relations.get(predicate).into_iter().flatten()
    }

    pub fn count(&self, predicate: &str) -> usize {
        self.relations.get(predicate).map_or(0, BTreeSet::len)
    }

    pub fn predicates(&self) -> impl Iterator<Item = &str> {
        self.relations.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.relations.values().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Row)> {
        self.relations
            .iter()
            .flat_map(|(p, rows)| rows.iter().map(move |r| (p.as_str(), r)))
    }
}

impl FromIterator<Fact> for FactSet {
    fn from_iter<I: IntoIterator<Item = Fact>>(iter: I) -> Self {
        let mut fs = FactSet::new();
        for f in iter {
            fs.insert_fact(f);
        }
        fs
    }
}

/// A runtime failure while deriving `predicate` in the rule at `span`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalError {
    pub predicate: String,
    pub span: Span,
    pub message: String,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: in `{}`: {}",
            self.span.line, self.span.column, self.predicate, self.message
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompileError {
    Syntax(SyntaxError),
    Invalid(Vec<Diagnostic>),
}

impl fmt::Display for CompileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompileError::Syntax(e) => write!(f, "syntax error at {e}"),
            CompileError::Invalid(diags) => {
                for (i, d) in diags.iter().enumerate() {
                    if i > 0 {
                        f.write_str("\n")?;
                    }
                    write!(f, "{d}")?;
                }
                Ok(())
            }
        }
    }
}

/// A validated program ready for evaluation.
#[derive(Debug, Clone)]
pub struct CompiledProgram {
    program: Program,
    info: ProgramInfo,
}

impl CompiledProgram {
    pub fn new(program: Program) -> Result<Self, Vec<Diagnostic>> {
        let (info, diags) = analyze(&program);
        if diags.is_empty() {
            Ok(CompiledProgram { program, info })
        } else {
            Err(diags)
        }
    }

    pub fn from_source(source: &str) -> Result<Self, CompileError> {
        let program = parse_program(source).map_err(CompileError::Syntax)?;
        Self::new(program).map_err(CompileError::Invalid)
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    /// Derives every relation of the program from `inputs`.
    pub fn evaluate(&self, inputs: &FactSet) -> Result<FactSet, EvalError> {
        let mut ev = Evaluator {
            program: &self.program,
            info: &self.info,
            facts: inputs.clone(),
            memo: BTreeMap::new(),
            ctx: (String::new(), Span::default()),
        };
        for predicate in &self.info.order {
            if self.info.functions.contains(predicate) {
                continue;
            }
            ev.derive(predicate)?;
        }
        Ok(ev.facts)
    }
}

/// Evaluates `program` bottom up over `inputs`.
///
/// The program must validate; otherwise the diagnostics are reported as an
/// error at the first offending rule.
pub fn evaluate(program: &Program, inputs: &FactSet) -> Result<FactSet, EvalError> {
    let compiled = CompiledProgram::new(program.clone()).map_err(|diags| EvalError {
        predicate: String::new(),
        span: diags
            .first()
            .map_or(Span::default(), |d| Span::new(d.line, d.column)),
        message: format!("program does not validate: {}", diags[0].message),
    })?;
    compiled.evaluate(inputs)
}

/// Variable bindings. Names borrow from the program; environments stay small,
/// so a vector is cheaper to clone and search than a map.
type Env<'p> = Vec<(&'p str, Value)>;
/// Alternative results of an expression; `None` means the environment is unchanged.
type Alts<'p> = SmallVec<[(Value, Option<Env<'p>>); 1]>;
/// Value tuples of several expressions, one per combination of alternatives.
type Tuples<'p> = SmallVec<[(SmallVec<[Value; 4]>, Option<Env<'p>>); 1]>;
type Res<T> = Result<T, String>;

struct Evaluator<'p> {
    program: &'p Program,
    info: &'p ProgramInfo,
    facts: FactSet,
    memo: BTreeMap<(String, Row), Vec<Value>>,
    ctx: (String, Span),
}

fn lookup<'a>(env: &'a Env<'_>, var: &str) -> Option<&'a Value> {
    env.iter().find(|(name, _)| *name == var).map(|(_, v)| v)
}

fn is_bound(env: &Env<'_>, var: &str) -> bool {
    env.iter().any(|(name, _)| *name == var)
}

fn bind_or_check<'p>(env: &mut Env<'p>, var: &'p str, value: Value) -> bool {
    match lookup(env, var) {
        Some(existing) => *existing == value,
        None => {
            env.push((var, value));
            true
        }
    }
}

fn finite(x: f64) -> Res<Value> {
    if x.is_finite() {
        Ok(Value::Number(x))
    } else {
        Err("arithmetic produced a non-finite number".into())
    }
}

fn binary(op: crate::rulelang::BinOp, a: &Value, b: &Value) -> Res<Value> {
    use crate::rulelang::BinOp::*;
    match op {
        Eq => return Ok(Value::Bool(a == b)),
        Ne => return Ok(Value::Bool(a != b)),
        Lt | Le | Gt | Ge => {
            let comparable = matches!(
                (a, b),
                (Value::Number(_), Value::Number(_)) | (Value::Str(_), Value::Str(_))
            );
            if !comparable {
                return Err(format!(
                    "cannot compare {} with {} using `{}`",
                    a.type_name(),
                    b.type_name(),
                    op.symbol()
                ));
            }
            let ord = a.cmp(b);
            return Ok(Value::Bool(match op {
                Lt => ord.is_lt(),
                Le => ord.is_le(),
                Gt => ord.is_gt(),
                _ => ord.is_ge(),
            }));
        }
        _ => {}
    }
    let (Value::Number(x), Value::Number(y)) = (a, b) else {
        return Err(format!(
            "arithmetic `{}` on {} and {}",
            op.symbol(),
            a.type_name(),
            b.type_name()
        ));
    };
    match op {
        Add => finite(x + y),
        Sub => finite(x - y),
        Mul => finite(x * y),
        Div => {
            if *y == 0.0 {
                Err("division by zero".into())
            } else {
                finite(x / y)
            }
        }
        _ => unreachable!(),
    }
}

impl<'p> Evaluator<'p> {
    fn fail(&self, message: String) -> EvalError {
        EvalError {
            predicate: self.ctx.0.clone(),
            span: self.ctx.1,
            message,
        }
    }

    fn derive(&mut self, predicate: &str) -> Result<(), EvalError> {
        let program = self.program;
        let mut groups: BTreeMap<Row, Vec<AggItem>> = BTreeMap::new();
        let mut aggregation = None;
        for rule in program.rules_for(predicate) {
            self.ctx = (predicate.to_string(), rule.span);
            if let HeadForm::Aggregating {
                aggregation: name, ..
            } = &rule.head.form
            {
                aggregation = Some(name.parse::<Aggregation>().map_err(|e| self.fail(e.0))?);
            }
            self.derive_rule(rule, &mut groups)
                .map_err(|m| self.fail(m))?;
        }
        if let Some(agg) = aggregation {
            // Without group-by arguments there is exactly one group, even if empty.
            if program.rules_for(predicate).all(|r| r.head.args.is_empty()) {
                groups.entry(Row::new()).or_default();
            }
            for (key, items) in &groups {
                let folded = aggregate(agg, items).map_err(|e| self.fail(e.0))?;
                if let Some(v) = folded {
                    let mut row = key.clone();
                    row.insert(VALUE_FIELD.into(), v);
                    self.facts.insert(predicate, row);
                }
            }
        }
        Ok(())
    }

    fn derive_rule(&mut self, rule: &'p Rule, groups: &mut BTreeMap<Row, Vec<AggItem>>) -> Res<()> {
        let envs = match &rule.body {
            Some(body) => self.solve_body(body, &Env::new())?,
            None => vec![Env::new()],
        };
        let mut exprs: Vec<&'p Expr> = rule.head.args.iter().map(|(_, e)| e).collect();
        let nargs = exprs.len();
        match &rule.head.form {
            HeadForm::Relational => {}
            HeadForm::Functional(e) => exprs.push(e),
            HeadForm::Aggregating { term, .. } => {
                exprs.extend(term.lhs.as_ref());
                exprs.push(&term.rhs);
            }
        }
        for env in envs {
            for (vals, _) in self.eval_all(&exprs, &env)? {
                let mut vals = vals.into_iter();
                let row: Row = rule
                    .head
                    .args
                    .iter()
                    .map(|(name, _)| name.clone())
                    .zip(vals.by_ref().take(nargs))
                    .collect();
                match &rule.head.form {
                    HeadForm::Relational => {
                        self.facts.insert(&rule.head.predicate, row);
                    }
                    HeadForm::Functional(_) => {
                        let mut row = row;
                        row.insert(VALUE_FIELD.into(), vals.next().unwrap_or_default());
                        self.facts.insert(&rule.head.predicate, row);
                    }
                    HeadForm::Aggregating { term, .. } => {
                        let item = if term.lhs.is_some() {
                            let lhs = vals.next().unwrap_or_default();
                            let rhs = vals.next().unwrap_or_default();
                            pair_item(&rule.head.form, lhs, rhs)
                        } else {
                            AggItem::plain(vals.next().unwrap_or_default())
                        };
                        groups.entry(row).or_default().push(item);
                    }
                }
            }
        }
        Ok(())
    }

    // -- bodies ------------------------------------------------------------

    fn solve_body(&mut self, body: &'p Body, env: &Env<'p>) -> Res<Vec<Env<'p>>> {
        let mut out = Vec::new();
        for conj in &body.disjuncts {
            let mut envs = vec![env.clone()];
            for lit in conj {
                let mut next = Vec::new();
                for e in envs {
                    next.extend(self.solve_literal(lit, e)?);
                }
                envs = next;
                if envs.is_empty() {
                    break;
                }
            }
            out.extend(envs);
        }
        Ok(out)
    }

    fn solve_literal(&mut self, lit: &'p Literal, env: Env<'p>) -> Res<Vec<Env<'p>>> {
        match lit {
            Literal::Atom {
                predicate, args, ..
            } => Ok(self
                .match_call(predicate, args, &env)?
                .into_iter()
                .map(|(e, _)| e)
                .collect()),
            Literal::Eq { lhs, rhs, .. } => {
                let unbound = |e: &Expr| matches!(e, Expr::Var(v) if !is_bound(&env, v));
                let target = if unbound(lhs) {
                    Some((lhs, rhs))
                } else if unbound(rhs) {
                    Some((rhs, lhs))
                } else {
                    None
                };
                if let Some((Expr::Var(var), other)) = target {
                    let mut out = Vec::new();
                    for (v, e2) in self.eval(other, &env)? {
                        let mut e = e2.unwrap_or_else(|| env.clone());
                        if bind_or_check(&mut e, var, v) {
                            out.push(e);
                        }
                    }
                    return Ok(out);
                }
                Ok(self
                    .eval_all(&[lhs, rhs], &env)?
                    .into_iter()
                    .filter(|(vals, _)| vals[0] == vals[1])
                    .map(|(_, e)| e.unwrap_or_else(|| env.clone()))
                    .collect())
            }
            Literal::In { element, list, .. } => {
                let mut out = Vec::new();
                for (lv, e1) in self.eval(list, &env)? {
                    let base = e1.unwrap_or_else(|| env.clone());
                    let Value::List(items) = lv else {
                        return Err(format!("`in` expects a list, got {}", lv.type_name()));
                    };
                    match element {
                        Expr::Var(v) if !is_bound(&base, v) => {
                            for item in items.iter() {
                                let mut e = base.clone();
                                e.push((v.as_str(), item.clone()));
                                out.push(e);
                            }
                        }
                        _ => {
                            for (ev, e2) in self.eval(element, &base)? {
                                if items.contains(&ev) {
                                    out.push(e2.unwrap_or_else(|| base.clone()));
                                }
                            }
                        }
                    }
                }
                Ok(out)
            }
            Literal::Guard { expr, .. } => {
                let mut out = Vec::new();
                for (v, e2) in self.eval(expr, &env)? {
                    match v {
                        Value::Bool(true) => out.push(e2.unwrap_or_else(|| env.clone())),
                        Value::Bool(false) => {}
                        other => {
                            return Err(format!(
                                "condition must be a bool, got {} `{other}`",
                                other.type_name()
                            ))
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    /// Matches `predicate(args)` against its rows (or calls it, for
    /// functions). Returns the extended environments and each matched row's
    /// `value` field.
    fn match_call(
        &mut self,
        predicate: &str,
        args: &'p Args,
        env: &Env<'p>,
    ) -> Res<Vec<(Env<'p>, Value)>> {
        // Plain unbound variables are bound by the match; everything else is
        // evaluated up front and compared.
        let binder = |e: &'p Expr| match e {
            Expr::Var(v) if !is_bound(env, v) => Some(v.as_str()),
            _ => None,
        };
        let binders: Vec<Option<&'p str>> = args.iter().map(|(_, e)| binder(e)).collect();
        let given: Vec<&'p Expr> = args
            .iter()
            .zip(&binders)
            .filter(|(_, b)| b.is_none())
            .map(|((_, e), _)| e)
            .collect();

        let is_function = self.info.functions.contains(predicate);
        let mut out = Vec::new();
        for (vals, e1) in self.eval_all(&given, env)? {
            let base = e1.unwrap_or_else(|| env.clone());
            let mut vals = vals.into_iter();
            let mut expected: Vec<(&str, Value)> = Vec::new();
            let mut to_bind: Vec<(&str, &'p str)> = Vec::new();
            for ((field, _), b) in args.iter().zip(&binders) {
                match b {
                    Some(var) => to_bind.push((field, var)),
                    None => expected.push((field, vals.next().unwrap_or_default())),
                }
            }
            if is_function {
                if let Some((field, var)) = to_bind.iter().find(|(f, _)| *f != VALUE_FIELD) {
                    return Err(format!(
                        "argument `{field}` of function `{predicate}` is the unbound variable `{var}`"
                    ));
                }
                let call_args: Row = expected
                    .iter()
                    .filter(|(f, _)| *f != VALUE_FIELD)
                    .map(|(f, v)| (f.to_string(), v.clone()))
                    .collect();
                let want = expected
                    .iter()
                    .find(|(f, _)| *f == VALUE_FIELD)
                    .map(|(_, v)| v);
                let bind_value = to_bind.first().map(|(_, var)| *var);
                for result in self.call_function(predicate, call_args)? {
                    if want.is_some_and(|w| *w != result) {
                        continue;
                    }
                    let mut e = base.clone();
                    if let Some(var) = bind_value {
                        if !bind_or_check(&mut e, var, result.clone()) {
                            continue;
                        }
                    }
                    out.push((e, result));
                }
                continue;
            }
            'rows: for row in self.facts.rows(predicate) {
                for (field, v) in &expected {
                    if row.get(*field) != Some(v) {
                        continue 'rows;
                    }
                }
                let mut e = base.clone();
                for (field, var) in &to_bind {
                    match row.get(*field) {
                        Some(v) if bind_or_check(&mut e, var, v.clone()) => {}
                        _ => continue 'rows,
                    }
                }
                out.push((e, row.get(VALUE_FIELD).cloned().unwrap_or_default()));
            }
        }
        Ok(out)
    }

    /// Evaluates a parameterized function for one argument record.
    fn call_function(&mut self, predicate: &str, call_args: Row) -> Res<Vec<Value>> {
        let key = (predicate.to_string(), call_args);
        if let Some(v) = self.memo.get(&key) {
            return Ok(v.clone());
        }
        let call_args = &key.1;
        let saved = self.ctx.clone();
        let program = self.program;
        let mut results = BTreeSet::new();
        for rule in program.rules_for(predicate) {
            self.ctx = (predicate.to_string(), rule.span);
            let HeadForm::Functional(value_expr) = &rule.head.form else {
                return Err(format!("`{predicate}` is not a function"));
            };
            for field in call_args.keys() {
                if !rule.head.args.iter().any(|(f, _)| f == field) {
                    return Err(format!("`{predicate}` has no argument `{field}`"));
                }
            }
            let mut env = Env::new();
            let mut patterns = Vec::new();
            let mut applies = true;
            for (field, e) in &rule.head.args {
                let Some(v) = call_args.get(field) else {
                    return Err(format!(
                        "missing argument `{field}` in call to `{predicate}`"
                    ));
                };
                match e {
                    Expr::Var(var) => applies &= bind_or_check(&mut env, var, v.clone()),
                    other => patterns.push((other, v)),
                }
            }
            if !applies {
                continue;
            }
            let envs = match &rule.body {
                Some(body) => self.solve_body(body, &env)?,
                None => vec![env],
            };
            for env in envs {
                let mut matches = true;
                for (pat, v) in &patterns {
                    matches &= self.eval(pat, &env)?.iter().any(|(pv, _)| pv == *v);
                }
                if matches {
                    for (v, _) in self.eval(value_expr, &env)? {
                        results.insert(v);
                    }
                }
            }
        }
        self.ctx = saved;
        let results: Vec<Value> = results.into_iter().collect();
        for v in &results {
            let mut row = key.1.clone();
            row.insert(VALUE_FIELD.into(), v.clone());
            self.facts.insert(predicate, row);
        }
        self.memo.insert(key, results.clone());
        Ok(results)
    }

    // -- expressions -------------------------------------------------------

    fn eval_all(&mut self, exprs: &[&'p Expr], env: &Env<'p>) -> Res<Tuples<'p>> {
        let mut acc: Tuples<'p> = smallvec![(SmallVec::new(), None)];
        for e in exprs {
            let mut next = Tuples::with_capacity(acc.len());
            for (vals, env_opt) in acc {
                let alts = self.eval(e, env_opt.as_ref().unwrap_or(env))?;
                if alts.len() == 1 {
                    let (v, e2) = alts.into_iter().next().unwrap();
                    let mut vals = vals;
                    vals.push(v);
                    next.push((vals, e2.or(env_opt)));
                } else {
                    for (v, e2) in alts {
                        let mut vals = vals.clone();
                        vals.push(v);
                        next.push((vals, e2.or_else(|| env_opt.clone())));
                    }
                }
            }
            acc = next;
        }
        Ok(acc)
    }

    fn eval(&mut self, expr: &'p Expr, env: &Env<'p>) -> Res<Alts<'p>> {
        match expr {
            Expr::Const(v) => Ok(smallvec![(v.clone(), None)]),
            Expr::Var(name) => match lookup(env, name) {
                Some(v) => Ok(smallvec![(v.clone(), None)]),
                None => Err(format!("variable `{name}` is not bound")),
            },
            Expr::Field(inner, field) => self
                .eval(inner, env)?
                .into_iter()
                .map(|(v, e)| match v {
                    Value::Record(r) => match r.get(field) {
                        Some(fv) => Ok((fv.clone(), e)),
                        None => Err(format!("record has no field `{field}`")),
                    },
                    other => Err(format!(
                        "field access `.{field}` on {} `{other}`",
                        other.type_name()
                    )),
                })
                .collect(),
            Expr::Neg(inner) => self
                .eval(inner, env)?
                .into_iter()
                .map(|(v, e)| match v {
                    Value::Number(x) => Ok((Value::Number(-x), e)),
                    other => Err(format!("cannot negate {}", other.type_name())),
                })
                .collect(),
            Expr::Binary(op, a, b) => self
                .eval_all(&[a, b], env)?
                .into_iter()
                .map(|(vals, e)| Ok((binary(*op, &vals[0], &vals[1])?, e)))
                .collect(),
            Expr::Record(fields) => {
                let exprs: Vec<&'p Expr> = fields.iter().map(|(_, e)| e).collect();
                Ok(self
                    .eval_all(&exprs, env)?
                    .into_iter()
                    .map(|(vals, e)| {
                        let rec: Record = fields.iter().map(|(f, _)| f.clone()).zip(vals).collect();
                        (Value::from(rec), e)
                    })
                    .collect())
            }
            Expr::List(items) => {
                let exprs: Vec<&'p Expr> = items.iter().collect();
                Ok(self
                    .eval_all(&exprs, env)?
                    .into_iter()
                    .map(|(vals, e)| (Value::from(vals.into_vec()), e))
                    .collect())
            }
            Expr::Call { name, args } => {
                if builtins::lookup(name).is_some() {
                    let exprs: Vec<&'p Expr> = args.iter().map(|(_, e)| e).collect();
                    self.eval_all(&exprs, env)?
                        .into_iter()
                        .map(|(vals, e)| call_builtin(name, &vals).map(|v| (v, e)).map_err(|e| e.0))
                        .collect()
                } else {
                    Ok(self
                        .match_call(name, args, env)?
                        .into_iter()
                        .map(|(e, v)| (v, Some(e)))
                        .collect())
                }
            }
            Expr::Aggregate(agg_expr) => {
                let agg: Aggregation = agg_expr
                    .aggregation
                    .parse()
                    .map_err(|e: super::aggregate::AggregateError| e.0)?;
                let mut items = Vec::new();
                let term = &agg_expr.term;
                for inner in self.solve_body(&agg_expr.body, env)? {
                    match &term.lhs {
                        Some(lhs) => {
                            for (vals, _) in self.eval_all(&[lhs, &term.rhs], &inner)? {
                                let mut vals = vals.into_iter();
                                let (l, r) = (vals.next().unwrap(), vals.next().unwrap());
                                items.push(pair_item_for(agg, l, r));
                            }
                        }
                        None => {
                            for (v, _) in self.eval(&term.rhs, &inner)? {
                                items.push(AggItem::plain(v));
                            }
                        }
                    }
                }
                Ok(aggregate(agg, &items)
                    .map_err(|e| e.0)?
                    .map(|v| (v, None))
                    .into_iter()
                    .collect())
            }
        }
    }
}

fn pair_item(form: &HeadForm, lhs: Value, rhs: Value) -> AggItem {
    match form {
        HeadForm::Aggregating { aggregation, .. } => match aggregation.parse() {
            Ok(agg) => pair_item_for(agg, lhs, rhs),
            Err(_) => AggItem {
                weight: Some(lhs),
                value: rhs,
            },
        },
        _ => unreachable!(),
    }
}

/// `lhs -> rhs`: for WeightedAverage lhs weighs rhs; for ArgMin/ArgMax rhs
/// orders lhs.
fn pair_item_for(agg: Aggregation, lhs: Value, rhs: Value) -> AggItem {
    match agg {
        Aggregation::ArgMin | Aggregation::ArgMax => AggItem {
            weight: Some(rhs),
            value: lhs,
        },
        _ => AggItem {
            weight: Some(lhs),
            value: rhs,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rulelang::listings::LISTING_2;
    use alloc::vec;

    fn run(src: &str, inputs: &FactSet) -> Result<FactSet, EvalError> {
        CompiledProgram::from_source(src).unwrap().evaluate(inputs)
    }

    fn row(fields: &[(&str, Value)]) -> Row {
        fields
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect()
    }

    fn n(x: f64) -> Value {
        Value::Number(x)
    }

    #[test]
    fn disjunction_contributes_rows() {
        let out = run("P(x: y) :- y == 1 | y == 2;", &FactSet::new()).unwrap();
        let rows: Vec<_> = out.rows("P").cloned().collect();
        assert_eq!(rows, vec![row(&[("x", n(1.0))]), row(&[("x", n(2.0))])]);
    }

    #[test]
    fn listing_two_relaxation() {
        let mut inputs = FactSet::new();
        inputs.insert(
            "HomeDistance",
            row(&[("arg0", Value::str("A")), ("value", n(1.0))]),
        );
        inputs.insert(
            "HomeDistance",
            row(&[("arg0", Value::str("B")), ("value", n(5.0))]),
        );
        inputs.insert(
            "D",
            row(&[
                ("arg0", Value::str("A")),
                ("arg1", Value::str("B")),
                ("value", n(2.0)),
            ]),
        );
        let out = run(LISTING_2, &inputs).unwrap();
        let got: BTreeMap<Value, Value> = out
            .rows("PosteriorHomeDistance")
            .map(|r| (r["arg0"].clone(), r["value"].clone()))
            .collect();
        let want = BTreeMap::from([
            (Value::str("A"), n(1.0)),
            (Value::str("B"), n(3.0)),
            (Value::str("Home"), n(0.0)),
        ]);
        assert_eq!(got, want);
    }

    #[test]
    fn joins_and_functional_lookup() {
        let src = r#"
            Edge(a: "x", b: "y");
            Edge(a: "y", b: "z");
            Weight(a: "x") = 2;
            Weight(a: "y") = 3;
            Path(from: a, to: c, w:) :- Edge(a:, b:), Edge(a: b, b: c), w = Weight(a:) + Weight(a: b);
        "#;
        let out = run(src, &FactSet::new()).unwrap();
        let rows: Vec<_> = out.rows("Path").cloned().collect();
        assert_eq!(
            rows,
            vec![row(&[
                ("from", Value::str("x")),
                ("to", Value::str("z")),
                ("w", n(5.0))
            ])]
        );
    }

    #[test]
    fn parameterized_function_records_its_calls() {
        let src = r#"
            Double(x) = 2 * x;
            Item(v: 1);
            Item(v: 4);
            Out(v:, d:) :- Item(v:), d = Double(v);
        "#;
        let out = run(src, &FactSet::new()).unwrap();
        assert_eq!(out.count("Out"), 2);
        let calls: Vec<_> = out.rows("Double").cloned().collect();
        assert_eq!(
            calls,
            vec![
                row(&[("arg0", n(1.0)), ("value", n(2.0))]),
                row(&[("arg0", n(4.0)), ("value", n(8.0))]),
            ]
        );
    }

    #[test]
    fn aggregating_heads_group_by_arguments() {
        let src = r#"
            Score(team: "a", s: 1);
            Score(team: "a", s: 5);
            Score(team: "b", s: 2);
            Total(team:) Sum= s :- Score(team:, s:);
            Best() ArgMax= team -> s :- Score(team:, s:);
            Teams() List= team :- Score(team:);
        "#;
        let out = run(src, &FactSet::new()).unwrap();
        let totals: Vec<_> = out.rows("Total").cloned().collect();
        assert_eq!(
            totals,
            vec![
                row(&[("team", Value::str("a")), ("value", n(6.0))]),
                row(&[("team", Value::str("b")), ("value", n(2.0))]),
            ]
        );
        assert_eq!(out.rows("Best").next().unwrap()["value"], Value::str("a"));
        assert_eq!(
            out.rows("Teams").next().unwrap()["value"],
            Value::list([Value::str("a"), Value::str("a"), Value::str("b")])
        );
    }

    #[test]
    fn aggregate_expressions_see_outer_bindings() {
        let src = r#"
            N(v: 1);
            N(v: 2);
            N(v: 3);
            Above(v:, count: c) :- N(v:), c = Count{ w :- N(v: w), w > v };
        "#;
        let out = run(src, &FactSet::new()).unwrap();
        let counts: BTreeMap<Value, Value> = out
            .rows("Above")
            .map(|r| (r["v"].clone(), r["count"].clone()))
            .collect();
        assert_eq!(
            counts,
            BTreeMap::from([(n(1.0), n(2.0)), (n(2.0), n(1.0)), (n(3.0), n(0.0))])
        );
    }

    #[test]
    fn empty_min_group_yields_no_row() {
        let out = run("M() Min= x :- x in [];", &FactSet::new()).unwrap();
        assert_eq!(out.count("M"), 0);
        let out = run("S() Sum= x :- x in [];", &FactSet::new()).unwrap();
        assert_eq!(out.rows("S").next().unwrap()["value"], n(0.0));
    }

    #[test]
    fn runtime_errors_carry_predicate_and_span() {
        let err = run("A(x: 1);\nB(y:) :- A(x:), y = x.field;", &FactSet::new()).unwrap_err();
        assert_eq!(err.predicate, "B");
        assert_eq!((err.span.line, err.span.column), (2, 1));
        assert!(err.message.contains("field access"));

        let err = run("C(y:) :- y = 1 / 0;", &FactSet::new()).unwrap_err();
        assert!(err.message.contains("division by zero"));
        let err = run(r#"C(y:) :- y = "a" + 1;"#, &FactSet::new()).unwrap_err();
        assert!(err.message.contains("arithmetic"));
    }

    #[test]
    fn evaluation_is_deterministic() {
        let src = r#"
            P(k: x) :- x in [3, 1, 2];
            Q(k:, s:) :- P(k:), s = Sum{ v :- P(k: v) };
        "#;
        let a = run(src, &FactSet::new()).unwrap();
        let b = run(src, &FactSet::new()).unwrap();
        assert_eq!(a, b);
        let keys: Vec<_> = a.iter().map(|(p, r)| (p.to_string(), r.clone())).collect();
        let keys_b: Vec<_> = b.iter().map(|(p, r)| (p.to_string(), r.clone())).collect();
        assert_eq!(keys, keys_b);
    }
}
