use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::ast::*;
use crate::engine::builtins;
use crate::engine::Aggregation;

/// Predicates supplied by the simulator every round.
pub const INPUT_PREDICATES: &[&str] = &["Sensor", "Memory"];

pub const AGGREGATIONS: &[&str] = &[
    "Min",
    "Max",
    "Sum",
    "Count",
    "Avg",
    "List",
    "ArgMin",
    "ArgMax",
    "WeightedAverage",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub line: usize,
    pub column: usize,
}

impl Diagnostic {
    fn error(span: Span, message: String) -> Self {
        Diagnostic {
            severity: Severity::Error,
            message,
            line: span.line.max(1),
            column: span.column.max(1),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {sev}: {}", self.line, self.column, self.message)
    }
}

/// Static facts about a program the evaluator relies on.
#[derive(Debug, Clone, Default)]
pub(crate) struct ProgramInfo {
    /// Predicates defined by rule heads, in topological (dependency-first) order.
    pub order: Vec<String>,
    /// Predicates evaluated on demand because some rule takes parameters.
    pub functions: BTreeSet<String>,
}

/// Checks a parsed program. An empty result means the program is valid.
///
/// Rejected: recursion among rule-defined predicates, unknown aggregations,
/// undefined predicates, and variables used or exported before being bound.
/// A predicate that is never defined but only called in expression position
/// (`HomeDistance(b) + 1`) is an external table supplied with the inputs.
pub fn validate(program: &Program) -> Vec<Diagnostic> {
    analyze(program).1
}

pub(crate) fn analyze(program: &Program) -> (ProgramInfo, Vec<Diagnostic>) {
    let mut diags = Vec::new();
    if program.rules.is_empty() {
        diags.push(Diagnostic::error(
            Span::new(1, 1),
            "program has no rules".to_string(),
        ));
        return (ProgramInfo::default(), diags);
    }

    let defined: BTreeSet<&str> = program
        .rules
        .iter()
        .map(|r| r.head.predicate.as_str())
        .collect();

    check_heads(program, &mut diags);
    check_references(program, &defined, &mut diags);

    let functions = parameterized_predicates(program);
    let ctx = BindCtx {
        functions: &functions,
    };
    for rule in &program.rules {
        check_bindings(rule, &ctx, &mut diags);
    }

    let order = dependency_order(program, &defined, &mut diags);
    diags.sort_by_key(|d| (d.line, d.column));
    diags.dedup();
    (ProgramInfo { order, functions }, diags)
}

fn head_kind(form: &HeadForm) -> String {
    match form {
        HeadForm::Relational => "relational".into(),
        HeadForm::Functional(_) => "functional".into(),
        HeadForm::Aggregating { aggregation, .. } => format!("{aggregation}="),
    }
}

fn check_heads(program: &Program, diags: &mut Vec<Diagnostic>) {
    let mut first_form: BTreeMap<&str, String> = BTreeMap::new();
    for rule in &program.rules {
        let name = rule.head.predicate.as_str();
        if INPUT_PREDICATES.contains(&name) {
            diags.push(Diagnostic::error(
                rule.span,
                format!("`{name}` is an input predicate and cannot be defined by rules"),
            ));
        }
        if builtins::lookup(name).is_some() {
            diags.push(Diagnostic::error(
                rule.span,
                format!("`{name}` is a builtin function and cannot be redefined"),
            ));
        }
        if let HeadForm::Aggregating { aggregation, term } = &rule.head.form {
            check_aggregation(aggregation, term, rule.span, diags);
        }
        if rule.head.args.iter().any(|(n, _)| n == VALUE_FIELD)
            && !matches!(rule.head.form, HeadForm::Relational)
        {
            diags.push(Diagnostic::error(
                rule.span,
                format!("`{VALUE_FIELD}` is reserved for the result of `{name}`"),
            ));
        }
        let kind = head_kind(&rule.head.form);
        match first_form.get(name) {
            None => {
                first_form.insert(name, kind);
            }
            Some(prev) if *prev != kind => diags.push(Diagnostic::error(
                rule.span,
                format!("`{name}` is defined as {prev} elsewhere but as {kind} here"),
            )),
            Some(_) => {}
        }
    }
}

fn check_aggregation(name: &str, term: &AggTerm, span: Span, diags: &mut Vec<Diagnostic>) {
    let Ok(agg) = name.parse::<Aggregation>() else {
        diags.push(Diagnostic::error(
            span,
            format!("unknown aggregation `{name}`"),
        ));
        return;
    };
    match (agg.takes_pairs(), term.lhs.is_some()) {
        (true, false) => diags.push(Diagnostic::error(
            span,
            format!("{name} needs a `lhs -> rhs` pair"),
        )),
        (false, true) => diags.push(Diagnostic::error(
            span,
            format!("{name} takes a single value, not a `lhs -> rhs` pair"),
        )),
        _ => {}
    }
}

fn check_references(program: &Program, defined: &BTreeSet<&str>, diags: &mut Vec<Diagnostic>) {
    for rule in &program.rules {
        let visit_expr = |e: &Expr, span: Span, diags: &mut Vec<Diagnostic>| {
            walk_expr(e, &mut |e| match e {
                Expr::Aggregate(agg) => check_aggregation(&agg.aggregation, &agg.term, span, diags),
                Expr::Call { name, args } => {
                    if let Some(b) = builtins::lookup(name) {
                        if args
                            .iter()
                            .enumerate()
                            .any(|(i, (n, _))| *n != positional_name(i))
                        {
                            diags.push(Diagnostic::error(
                                span,
                                format!("builtin `{name}` takes positional arguments only"),
                            ));
                        } else if !b.arity.accepts(args.len()) {
                            diags.push(Diagnostic::error(
                                span,
                                format!(
                                    "builtin `{name}` expects {} argument(s), got {}",
                                    b.arity,
                                    args.len()
                                ),
                            ));
                        }
                    }
                    // Undefined names in call position are external tables.
                }
                _ => {}
            });
        };
        for (_, e) in &rule.head.args {
            visit_expr(e, rule.span, diags);
        }
        match &rule.head.form {
            HeadForm::Relational => {}
            HeadForm::Functional(e) => visit_expr(e, rule.span, diags),
            HeadForm::Aggregating { term, .. } => {
                if let Some(l) = &term.lhs {
                    visit_expr(l, rule.span, diags);
                }
                visit_expr(&term.rhs, rule.span, diags);
            }
        }
        if let Some(body) = &rule.body {
            walk_literals(body, &mut |lit| {
                if let Literal::Atom {
                    predicate, span, ..
                } = lit
                {
                    if builtins::lookup(predicate).is_some() {
                        diags.push(Diagnostic::error(
                            *span,
                            format!("builtin `{predicate}` cannot be used as a relation"),
                        ));
                    } else if !defined.contains(predicate.as_str())
                        && !INPUT_PREDICATES.contains(&predicate.as_str())
                    {
                        diags.push(Diagnostic::error(
                            *span,
                            format!("undefined predicate `{predicate}`"),
                        ));
                    }
                }
                lit.visit_exprs(&mut |e| visit_expr(e, lit.span(), diags));
            });
        }
    }
}

/// Visits `e` and every sub-expression, descending into aggregate bodies.
fn walk_expr<'a>(e: &'a Expr, f: &mut dyn FnMut(&'a Expr)) {
    f(e);
    match e {
        Expr::Const(_) | Expr::Var(_) => {}
        Expr::Field(inner, _) | Expr::Neg(inner) => walk_expr(inner, f),
        Expr::Binary(_, a, b) => {
            walk_expr(a, f);
            walk_expr(b, f);
        }
        Expr::Record(fields) | Expr::Call { args: fields, .. } => {
            fields.iter().for_each(|(_, e)| walk_expr(e, f))
        }
        Expr::List(items) => items.iter().for_each(|e| walk_expr(e, f)),
        Expr::Aggregate(agg) => {
            if let Some(l) = &agg.term.lhs {
                walk_expr(l, f);
            }
            walk_expr(&agg.term.rhs, f);
            for conj in &agg.body.disjuncts {
                for lit in conj {
                    lit.visit_exprs(&mut |e| walk_expr(e, f));
                }
            }
        }
    }
}

/// Visits every literal of `body`, including literals of nested aggregate bodies.
fn walk_literals<'a>(body: &'a Body, f: &mut dyn FnMut(&'a Literal)) {
    for conj in &body.disjuncts {
        for lit in conj {
            f(lit);
            lit.visit_exprs(&mut |e| {
                walk_expr(e, &mut |e| {
                    if let Expr::Aggregate(agg) = e {
                        walk_literals(&agg.body, &mut *f);
                    }
                })
            });
        }
    }
}

// ---------------------------------------------------------------------------
// Binding analysis. Mirrors the evaluator: literals run left to right, calls
// inside a literal run before it (innermost first), and a bare unbound
// variable in argument position is bound by enumerating the called relation.

struct BindCtx<'a> {
    functions: &'a BTreeSet<String>,
}

type Bound = BTreeSet<String>;

struct Analysis<'a> {
    ctx: &'a BindCtx<'a>,
    diags: Option<&'a mut Vec<Diagnostic>>,
    ok: bool,
}

impl Analysis<'_> {
    fn unbound(&mut self, span: Span, message: String) {
        self.ok = false;
        if let Some(d) = self.diags.as_deref_mut() {
            d.push(Diagnostic::error(span, message));
        }
    }

    fn expr(&mut self, e: &Expr, bound: &mut Bound, span: Span) {
        match e {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                if !bound.contains(v) {
                    self.unbound(span, format!("variable `{v}` is used before it is bound"));
                }
            }
            Expr::Field(inner, _) | Expr::Neg(inner) => self.expr(inner, bound, span),
            Expr::Binary(_, a, b) => {
                self.expr(a, bound, span);
                self.expr(b, bound, span);
            }
            Expr::Record(fields) => fields.iter().for_each(|(_, e)| self.expr(e, bound, span)),
            Expr::List(items) => items.iter().for_each(|e| self.expr(e, bound, span)),
            Expr::Call { name, args } => self.call(name, args, bound, span),
            Expr::Aggregate(agg) => {
                let mut inner = bound.clone();
                self.body_then(&agg.body, &mut inner, &mut |a, b| {
                    if let Some(l) = &agg.term.lhs {
                        a.expr(l, b, span);
                    }
                    a.expr(&agg.term.rhs, b, span);
                });
            }
        }
    }

    fn call(&mut self, name: &str, args: &Args, bound: &mut Bound, span: Span) {
        let is_function = self.ctx.functions.contains(name);
        let is_builtin = builtins::lookup(name).is_some();
        for (_, arg) in args {
            match arg {
                Expr::Var(v) if !bound.contains(v) && !is_builtin => {
                    if is_function {
                        self.unbound(
                            span,
                            format!(
                                "argument `{v}` of function `{name}` must be bound before the call"
                            ),
                        );
                    } else {
                        bound.insert(v.clone());
                    }
                }
                e => self.expr(e, bound, span),
            }
        }
    }

    fn literal(&mut self, lit: &Literal, bound: &mut Bound) {
        let span = lit.span();
        match lit {
            Literal::Atom {
                predicate, args, ..
            } => self.call(predicate, args, bound, span),
            Literal::Eq { lhs, rhs, .. } => match (lhs, rhs) {
                (Expr::Var(v), other) if !bound.contains(v) => {
                    self.expr(other, bound, span);
                    bound.insert(v.clone());
                }
                (other, Expr::Var(v)) if !bound.contains(v) => {
                    self.expr(other, bound, span);
                    bound.insert(v.clone());
                }
                _ => {
                    self.expr(lhs, bound, span);
                    self.expr(rhs, bound, span);
                }
            },
            Literal::In { element, list, .. } => {
                self.expr(list, bound, span);
                match element {
                    Expr::Var(v) if !bound.contains(v) => {
                        bound.insert(v.clone());
                    }
                    e => self.expr(e, bound, span),
                }
            }
            Literal::Guard { expr, .. } => self.expr(expr, bound, span),
        }
    }

    /// Runs `then` once per disjunct with that disjunct's bindings.
    fn body_then(
        &mut self,
        body: &Body,
        bound: &mut Bound,
        then: &mut dyn FnMut(&mut Self, &mut Bound),
    ) {
        for conj in &body.disjuncts {
            let mut b = bound.clone();
            for lit in conj {
                self.literal(lit, &mut b);
            }
            then(self, &mut b);
        }
    }

    fn rule(&mut self, rule: &Rule, initial: &Bound) {
        let mut bound = initial.clone();
        let span = rule.span;
        let mut head = |a: &mut Self, b: &mut Bound| {
            for (_, e) in &rule.head.args {
                a.expr(e, b, span);
            }
            match &rule.head.form {
                HeadForm::Relational => {}
                HeadForm::Functional(e) => a.expr(e, b, span),
                HeadForm::Aggregating { term, .. } => {
                    if let Some(l) = &term.lhs {
                        a.expr(l, b, span);
                    }
                    a.expr(&term.rhs, b, span);
                }
            }
        };
        match &rule.body {
            Some(body) => self.body_then(body, &mut bound, &mut head),
            None => head(self, &mut bound),
        }
    }
}

/// Head arguments that are plain variables.
fn head_params(rule: &Rule) -> Bound {
    rule.head
        .args
        .iter()
        .filter_map(|(_, e)| match e {
            Expr::Var(v) => Some(v.clone()),
            _ => None,
        })
        .collect()
}

/// A functional rule is parameterized when its body alone does not bind all
/// of its head variables; the caller supplies them.
fn is_parameterized(rule: &Rule, ctx: &BindCtx<'_>) -> bool {
    if !matches!(rule.head.form, HeadForm::Functional(_)) {
        return false;
    }
    let mut a = Analysis {
        ctx,
        diags: None,
        ok: true,
    };
    a.rule(rule, &Bound::new());
    !a.ok && !head_params(rule).is_empty()
}

fn parameterized_predicates(program: &Program) -> BTreeSet<String> {
    let none = BTreeSet::new();
    let ctx = BindCtx { functions: &none };
    program
        .rules
        .iter()
        .filter(|r| is_parameterized(r, &ctx))
        .map(|r| r.head.predicate.clone())
        .collect()
}

fn check_bindings(rule: &Rule, ctx: &BindCtx<'_>, diags: &mut Vec<Diagnostic>) {
    let initial = if ctx.functions.contains(&rule.head.predicate) {
        head_params(rule)
    } else {
        Bound::new()
    };
    let mut a = Analysis {
        ctx,
        diags: Some(diags),
        ok: true,
    };
    a.rule(rule, &initial);
}

// ---------------------------------------------------------------------------

/// Topological order of rule-defined predicates; reports every cycle.
fn dependency_order(
    program: &Program,
    defined: &BTreeSet<&str>,
    diags: &mut Vec<Diagnostic>,
) -> Vec<String> {
    let mut deps: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut first_span: BTreeMap<&str, Span> = BTreeMap::new();
    for rule in &program.rules {
        let head = rule.head.predicate.as_str();
        first_span.entry(head).or_insert(rule.span);
        let entry = deps.entry(head).or_default();
        rule.visit_calls(&mut |name, _| {
            if defined.contains(name) {
                entry.insert(name);
            }
        });
    }

    // Tarjan's strongly connected components; emitted dependencies-first.
    struct Tarjan<'a> {
        deps: &'a BTreeMap<&'a str, BTreeSet<&'a str>>,
        index: BTreeMap<&'a str, usize>,
        low: BTreeMap<&'a str, usize>,
        stack: Vec<&'a str>,
        on_stack: BTreeSet<&'a str>,
        next: usize,
        sccs: Vec<Vec<&'a str>>,
    }
    impl<'a> Tarjan<'a> {
        fn visit(&mut self, v: &'a str) {
            self.index.insert(v, self.next);
            self.low.insert(v, self.next);
            self.next += 1;
            self.stack.push(v);
            self.on_stack.insert(v);
            let deps = self.deps;
            for &w in deps.get(v).into_iter().flatten() {
                if !self.index.contains_key(w) {
                    self.visit(w);
                    let lw = self.low[w];
                    let lv = self.low.get_mut(v).unwrap();
                    *lv = (*lv).min(lw);
                } else if self.on_stack.contains(w) {
                    let iw = self.index[w];
                    let lv = self.low.get_mut(v).unwrap();
                    *lv = (*lv).min(iw);
                }
            }
            if self.low[v] == self.index[v] {
                let mut scc = Vec::new();
                while let Some(w) = self.stack.pop() {
                    self.on_stack.remove(w);
                    scc.push(w);
                    if w == v {
                        break;
                    }
                }
                scc.sort_unstable();
                self.sccs.push(scc);
            }
        }
    }
    let mut t = Tarjan {
        deps: &deps,
        index: BTreeMap::new(),
        low: BTreeMap::new(),
        stack: Vec::new(),
        on_stack: BTreeSet::new(),
        next: 0,
        sccs: Vec::new(),
    };
    for &v in deps.keys() {
        if !t.index.contains_key(v) {
            t.visit(v);
        }
    }
    let mut order = Vec::new();
    for scc in &t.sccs {
        let recursive = scc.len() > 1 || deps[scc[0]].contains(scc[0]);
        if recursive {
            let names: Vec<String> = scc.iter().map(|n| format!("`{n}`")).collect();
            diags.push(Diagnostic::error(
                first_span[scc[0]],
                format!(
                    "recursion within one program is not supported: {} (carry state across rounds through memory instead)",
                    names.join(" -> ")
                ),
            ));
        }
        order.extend(scc.iter().map(|s| s.to_string()));
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rulelang::listings::{LISTING_1, LISTING_2};
    use crate::rulelang::parse_program;

    fn diags(src: &str) -> Vec<Diagnostic> {
        validate(&parse_program(src).unwrap())
    }

    #[test]
    fn listings_are_clean() {
        assert_eq!(diags(LISTING_1), []);
        assert_eq!(diags(LISTING_2), []);
    }

    #[test]
    fn self_recursion_is_named() {
        let d = diags("P(x: y) :- P(x: y);");
        assert_eq!(d.len(), 1, "{d:?}");
        assert!(d[0].message.contains("recursion") && d[0].message.contains("`P`"));
    }

    #[test]
    fn mutual_recursion_is_reported() {
        let d = diags("P(x:) :- Q(x:); Q(x:) :- P(x:);");
        assert!(d.iter().any(|d| d.message.contains("`P` -> `Q`")), "{d:?}");
    }

    #[test]
    fn undefined_relation() {
        let d = diags("Q(a: z) :- R(a: z);");
        assert_eq!(d.len(), 1);
        assert!(d[0].message.contains("undefined predicate `R`"));
    }

    #[test]
    fn unknown_aggregation() {
        let d = diags("P(x:) Median= y :- Sensor(robot_name: x, sensor: y);");
        assert!(d[0].message.contains("unknown aggregation `Median`"));
        let d = diags("P(x: Median{y :- y in [1]});");
        assert!(d[0].message.contains("unknown aggregation `Median`"));
    }

    #[test]
    fn pair_form_must_match_aggregation() {
        let d = diags("P() WeightedAverage= y :- y in [1];");
        assert!(d[0].message.contains("needs a `lhs -> rhs` pair"), "{d:?}");
        let d = diags("P() Sum= y -> y :- y in [1];");
        assert!(d[0].message.contains("single value"), "{d:?}");
        assert_eq!(diags("P() ArgMin= y -> y :- y in [1];"), []);
    }

    #[test]
    fn unbound_head_variable() {
        let d = diags("P(x: y) :- Sensor(robot_name: x);");
        assert!(d.iter().any(|d| d.message.contains("`y`")), "{d:?}");
        let d = diags("P(x: y);");
        assert!(d.iter().any(|d| d.message.contains("`y`")), "{d:?}");
    }

    #[test]
    fn head_variable_must_be_bound_in_every_disjunct() {
        let d = diags("P(x:) :- x = 1 | Sensor(robot_name: y);");
        assert!(d.iter().any(|d| d.message.contains("`x`")), "{d:?}");
        assert_eq!(diags("P(x:) :- x = 1 | x = 2;"), []);
    }

    #[test]
    fn parameterized_function_arguments_must_be_bound() {
        let d = diags("F(a) = a * 2; P(x:) :- y = F(x), x = y;");
        assert!(
            d.iter().any(|d| d.message.contains("function `F`")),
            "{d:?}"
        );
        assert_eq!(diags("F(a) = a * 2; P(x:) :- x = F(3);"), []);
    }

    #[test]
    fn guard_before_binding() {
        let d = diags("P(x:) :- x > 1, x = 2;");
        assert!(d[0].message.contains("before it is bound"), "{d:?}");
    }

    #[test]
    fn builtin_arity_and_redefinition() {
        let d = diags("P(x:) :- x = Sqrt(1, 2);");
        assert!(d[0].message.contains("Sqrt"), "{d:?}");
        let d = diags("Sqrt(a) = a;");
        assert!(d.iter().any(|d| d.message.contains("builtin")), "{d:?}");
    }

    #[test]
    fn empty_program() {
        let d = validate(&Program::default());
        assert_eq!(d.len(), 1);
        assert!(d[0].message.contains("no rules"));
    }

    #[test]
    fn mixed_forms_are_rejected() {
        let d = diags("P(x: 1); P(x: 2) = 3;");
        assert!(d.iter().any(|d| d.message.contains("defined as")), "{d:?}");
    }

    #[test]
    fn aggregate_scope_does_not_leak() {
        let d = diags("P(n:, x:) :- n = Count{x :- x in [1, 2]};");
        assert!(d.iter().any(|d| d.message.contains("`x`")), "{d:?}");
    }

    #[test]
    fn order_is_dependencies_first() {
        let (info, d) =
            analyze(&parse_program("C(x:) :- B(x:); B(x:) :- A(x:); A(x: 1);").unwrap());
        assert!(d.is_empty());
        assert_eq!(info.order, ["A", "B", "C"]);
    }
}
