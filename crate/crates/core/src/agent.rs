//! Bach agents, procedure environments and the structural rewrites on them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::term::{classify_ident, IdentClass, SiTerm};

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Primitive {
    Tell,
    Ask,
    Get,
    Nask,
}

impl Primitive {
    pub const ALL: [Primitive; 4] = [
        Primitive::Tell,
        Primitive::Ask,
        Primitive::Get,
        Primitive::Nask,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            Primitive::Tell => "tell",
            Primitive::Ask => "ask",
            Primitive::Get => "get",
            Primitive::Nask => "nask",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Primitive> {
        Primitive::ALL.into_iter().find(|p| p.keyword() == word)
    }
}

impl fmt::Display for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Agent {
    Prim(Primitive, SiTerm),
    Seq(Arc<Agent>, Arc<Agent>),
    Par(Arc<Agent>, Arc<Agent>),
    Choice(Arc<Agent>, Arc<Agent>),
    /// Generalized sum: a choice over `body[binder := d]` for each `d` in `domain`.
    Sum {
        binder: Arc<str>,
        domain: Arc<[SiTerm]>,
        body: Arc<Agent>,
    },
    Call {
        name: Arc<str>,
        args: Arc<[SiTerm]>,
    },
    /// The terminated agent `E`.
    Empty,
}

impl Agent {
    pub fn tell(t: SiTerm) -> Agent {
        Agent::Prim(Primitive::Tell, t)
    }

    pub fn ask(t: SiTerm) -> Agent {
        Agent::Prim(Primitive::Ask, t)
    }

    pub fn get(t: SiTerm) -> Agent {
        Agent::Prim(Primitive::Get, t)
    }

    pub fn nask(t: SiTerm) -> Agent {
        Agent::Prim(Primitive::Nask, t)
    }

    pub fn seq(a: Agent, b: Agent) -> Agent {
        Agent::Seq(Arc::new(a), Arc::new(b))
    }

    pub fn par(a: Agent, b: Agent) -> Agent {
        Agent::Par(Arc::new(a), Arc::new(b))
    }

    pub fn choice(a: Agent, b: Agent) -> Agent {
        Agent::Choice(Arc::new(a), Arc::new(b))
    }

    /// Left-nested sequence `a1 ; a2 ; ... ; an`, as the parser builds it.
    /// Panics on an empty list.
    pub fn seq_all(items: impl IntoIterator<Item = Agent>) -> Agent {
        left_fold(items, Agent::seq)
    }

    pub fn par_all(items: impl IntoIterator<Item = Agent>) -> Agent {
        left_fold(items, Agent::par)
    }

    pub fn choice_all(items: impl IntoIterator<Item = Agent>) -> Agent {
        left_fold(items, Agent::choice)
    }

    pub fn sum(binder: &str, domain: Vec<SiTerm>, body: Agent) -> Agent {
        Agent::Sum {
            binder: binder.into(),
            domain: domain.into(),
            body: Arc::new(body),
        }
    }

    /// A generalized sum whose alternatives need host computation on the bound
    /// value. Each case is built eagerly by `body` and the cases are joined in
    /// a right-nested choice, the same shape `expand_gsum` produces.
    pub fn sum_cases(domain: &[SiTerm], body: impl Fn(&SiTerm) -> Agent) -> Agent {
        let cases: Vec<Agent> = domain.iter().map(body).collect();
        right_nested_choice(cases).expect("sum_cases needs a nonempty domain")
    }

    pub fn call(name: &str, args: Vec<SiTerm>) -> Agent {
        Agent::Call {
            name: name.into(),
            args: args.into(),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Agent::Empty)
    }

    /// Replaces the free occurrences of `var` in every term of the agent.
    pub fn substitute(&self, var: &str, value: &SiTerm) -> Agent {
        let mut bindings = BTreeMap::new();
        bindings.insert(Arc::<str>::from(var), value.clone());
        self.substitute_all(&bindings)
    }

    /// Simultaneous substitution. Sums rebinding one of the variables hide it
    /// from their body.
    pub fn substitute_all(&self, bindings: &BTreeMap<Arc<str>, SiTerm>) -> Agent {
        if bindings.is_empty() {
            return self.clone();
        }
        match self {
            Agent::Prim(p, t) => Agent::Prim(*p, t.substitute_all(bindings)),
            Agent::Seq(a, b) => Agent::seq(a.substitute_all(bindings), b.substitute_all(bindings)),
            Agent::Par(a, b) => Agent::par(a.substitute_all(bindings), b.substitute_all(bindings)),
            Agent::Choice(a, b) => {
                Agent::choice(a.substitute_all(bindings), b.substitute_all(bindings))
            }
            Agent::Sum {
                binder,
                domain,
                body,
            } => {
                let body = if bindings.contains_key(binder) {
                    let mut inner = bindings.clone();
                    inner.remove(binder);
                    body.substitute_all(&inner)
                } else {
                    body.substitute_all(bindings)
                };
                Agent::Sum {
                    binder: binder.clone(),
                    domain: domain.iter().map(|d| d.substitute_all(bindings)).collect(),
                    body: Arc::new(body),
                }
            }
            Agent::Call { name, args } => Agent::Call {
                name: name.clone(),
                args: args.iter().map(|a| a.substitute_all(bindings)).collect(),
            },
            Agent::Empty => Agent::Empty,
        }
    }

    /// Expands a generalized sum into the right-nested choice of its
    /// instantiated bodies, in domain order. Other agents are returned as is.
    pub fn expand_gsum(&self) -> Result<Agent> {
        match self {
            Agent::Sum {
                binder,
                domain,
                body,
            } => {
                let cases = domain.iter().map(|d| body.substitute(binder, d)).collect();
                right_nested_choice(cases).ok_or_else(|| Error::EmptyDomain(binder.to_string()))
            }
            other => Ok(other.clone()),
        }
    }

    /// Applies `E ; A -> A`, `E || A -> A` and `A || E -> A` bottom-up.
    pub fn normalize(&self) -> Agent {
        match self {
            Agent::Seq(a, b) => seq_normalized(a.normalize(), b.normalize()),
            Agent::Par(a, b) => par_normalized(a.normalize(), b.normalize()),
            Agent::Choice(a, b) => Agent::choice(a.normalize(), b.normalize()),
            Agent::Sum {
                binder,
                domain,
                body,
            } => Agent::Sum {
                binder: binder.clone(),
                domain: domain.clone(),
                body: Arc::new(body.normalize()),
            },
            _ => self.clone(),
        }
    }

    /// Number of leaves on the top-level choice spine.
    pub fn choice_width(&self) -> usize {
        match self {
            Agent::Choice(a, b) => a.choice_width() + b.choice_width(),
            _ => 1,
        }
    }

    /// Names of procedures this agent may call before executing any primitive.
    fn unguarded_calls<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Agent::Prim(..) | Agent::Empty => {}
            Agent::Seq(a, _) => a.unguarded_calls(out),
            Agent::Par(a, b) | Agent::Choice(a, b) => {
                a.unguarded_calls(out);
                b.unguarded_calls(out);
            }
            Agent::Sum { body, .. } => body.unguarded_calls(out),
            Agent::Call { name, .. } => {
                out.insert(name);
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Agent::Choice(..) => 0,
            Agent::Par(..) => 1,
            Agent::Seq(..) => 2,
            _ => 3,
        }
    }

    /// Surface-syntax rendering; `indent` is the column of the enclosing block.
    pub fn pretty(&self, indent: usize) -> String {
        let mut out = String::new();
        self.write_pretty(&mut out, indent);
        out
    }

    fn write_operand(&self, out: &mut String, indent: usize, min_prec: u8) {
        if self.precedence() < min_prec {
            out.push('(');
            self.write_pretty(out, indent);
            out.push(')');
        } else {
            self.write_pretty(out, indent);
        }
    }

    fn write_pretty(&self, out: &mut String, indent: usize) {
        match self {
            Agent::Prim(p, t) => out.push_str(&format!("{p}({t})")),
            Agent::Choice(a, b) => {
                a.write_operand(out, indent, 0);
                out.push_str(" + ");
                b.write_operand(out, indent, 1);
            }
            Agent::Par(a, b) => {
                a.write_operand(out, indent, 1);
                out.push_str(" || ");
                b.write_operand(out, indent, 2);
            }
            Agent::Seq(a, b) => {
                a.write_operand(out, indent, 2);
                out.push_str(" ; ");
                b.write_operand(out, indent, 3);
            }
            Agent::Sum {
                binder,
                domain,
                body,
            } => {
                out.push_str(&format!("sum {binder} in [{}] {{\n", join_terms(domain)));
                out.push_str(&" ".repeat(indent + 2));
                body.write_pretty(out, indent + 2);
                out.push('\n');
                out.push_str(&" ".repeat(indent));
                out.push('}');
            }
            Agent::Call { name, args } => {
                out.push_str(name);
                if !args.is_empty() {
                    out.push_str(&format!("({})", join_terms(args)));
                }
            }
            Agent::Empty => out.push('E'),
        }
    }
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pretty(0))
    }
}

pub(crate) fn join_terms(terms: &[SiTerm]) -> String {
    terms
        .iter()
        .map(SiTerm::render)
        .collect::<Vec<_>>()
        .join(",")
}

fn left_fold(items: impl IntoIterator<Item = Agent>, op: fn(Agent, Agent) -> Agent) -> Agent {
    let mut iter = items.into_iter();
    let first = iter.next().expect("at least one agent");
    iter.fold(first, op)
}

fn right_nested_choice(mut cases: Vec<Agent>) -> Option<Agent> {
    let mut acc = cases.pop()?;
    while let Some(case) = cases.pop() {
        acc = Agent::choice(case, acc);
    }
    Some(acc)
}

/// `a ; b` with the `E ; A -> A` rewrite applied at the root.
pub(crate) fn seq_normalized(a: Agent, b: Agent) -> Agent {
    if a.is_empty() {
        b
    } else {
        Agent::seq(a, b)
    }
}

/// `a || b` with the `E || A -> A` and `A || E -> A` rewrites at the root.
pub(crate) fn par_normalized(a: Agent, b: Agent) -> Agent {
    if a.is_empty() {
        b
    } else if b.is_empty() {
        a
    } else {
        Agent::par(a, b)
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ProcDef {
    pub params: Vec<Arc<str>>,
    pub body: Agent,
}

/// Procedure definitions, kept in declaration order. Equality ignores order.
#[derive(Clone, Default, PartialEq, Eq, Debug)]
pub struct ProcEnv {
    defs: IndexMap<Arc<str>, ProcDef>,
}

impl ProcEnv {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a definition. Checks the name, the parameters and binder scoping;
    /// call resolution and guardedness are checked by [`ProcEnv::validate`].
    pub fn define(&mut self, name: &str, params: &[&str], body: Agent) -> Result<()> {
        if classify_ident(name).is_none() || name.starts_with(|c: char| c.is_ascii_digit()) {
            return Err(Error::InvalidIdentifier(name.to_string()));
        }
        if self.defs.contains_key(name) {
            return Err(Error::DuplicateDefinition(name.to_string()));
        }
        let mut scope: Vec<&str> = Vec::new();
        for p in params {
            if classify_ident(p) != Some(IdentClass::Upper) {
                return Err(Error::InvalidIdentifier(p.to_string()));
            }
            if scope.contains(p) {
                return Err(Error::BinderClash {
                    binder: p.to_string(),
                    context: name.to_string(),
                });
            }
            scope.push(p);
        }
        check_scoping(&body, &mut scope, name)?;
        self.defs.insert(
            name.into(),
            ProcDef {
                params: params.iter().map(|p| Arc::from(*p)).collect(),
                body,
            },
        );
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&ProcDef> {
        self.defs.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.defs.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &ProcDef)> {
        self.defs.iter().map(|(k, v)| (&**k, v))
    }

    /// Body of `name` with its formals replaced by `args` (rule Pc).
    pub fn resolve_call(&self, name: &str, args: &[SiTerm]) -> Result<Agent> {
        let def = self
            .defs
            .get(name)
            .ok_or_else(|| Error::UnknownProcedure(name.to_string()))?;
        if def.params.len() != args.len() {
            return Err(Error::Arity {
                name: name.to_string(),
                expected: def.params.len(),
                found: args.len(),
            });
        }
        let bindings: BTreeMap<Arc<str>, SiTerm> = def
            .params
            .iter()
            .cloned()
            .zip(args.iter().cloned())
            .collect();
        Ok(def.body.substitute_all(&bindings).normalize())
    }

    /// Every call names a defined procedure with the right arity, and every
    /// agent passed to `extra` does too.
    pub fn check_calls<'a>(&self, extra: impl IntoIterator<Item = &'a Agent>) -> Result<()> {
        for def in self.defs.values() {
            self.check_calls_in(&def.body)?;
        }
        for agent in extra {
            self.check_calls_in(agent)?;
        }
        Ok(())
    }

    fn check_calls_in(&self, agent: &Agent) -> Result<()> {
        match agent {
            Agent::Prim(..) | Agent::Empty => Ok(()),
            Agent::Seq(a, b) | Agent::Par(a, b) | Agent::Choice(a, b) => {
                self.check_calls_in(a)?;
                self.check_calls_in(b)
            }
            Agent::Sum {
                binder,
                domain,
                body,
            } => {
                if domain.is_empty() {
                    return Err(Error::EmptyDomain(binder.to_string()));
                }
                self.check_calls_in(body)
            }
            Agent::Call { name, args } => {
                let def = self
                    .defs
                    .get(&**name)
                    .ok_or_else(|| Error::UnknownProcedure(name.to_string()))?;
                if def.params.len() != args.len() {
                    return Err(Error::Arity {
                        name: name.to_string(),
                        expected: def.params.len(),
                        found: args.len(),
                    });
                }
                Ok(())
            }
        }
    }

    /// Every cycle of procedure calls passes through a primitive.
    pub fn check_guarded(&self) -> Result<()> {
        let graph: IndexMap<&str, BTreeSet<&str>> = self
            .defs
            .iter()
            .map(|(name, def)| {
                let mut calls = BTreeSet::new();
                def.body.unguarded_calls(&mut calls);
                (&**name, calls)
            })
            .collect();
        match find_cycle(&graph) {
            Some(name) => Err(Error::UnguardedRecursion(name.to_string())),
            None => Ok(()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.check_calls(std::iter::empty())?;
        self.check_guarded()
    }
}

/// Free variables must be bound by a parameter or an enclosing sum, binders
/// never shadow a name already in scope, and sum domains are ground.
fn check_scoping<'a>(agent: &'a Agent, scope: &mut Vec<&'a str>, context: &str) -> Result<()> {
    let check_term = |t: &SiTerm, scope: &Vec<&str>| -> Result<()> {
        let mut vars = Vec::new();
        t.vars(&mut vars);
        match vars.into_iter().find(|v| !scope.contains(v)) {
            Some(v) => Err(Error::UnboundVariable {
                var: v.to_string(),
                context: context.to_string(),
            }),
            None => Ok(()),
        }
    };
    match agent {
        Agent::Prim(_, t) => check_term(t, scope),
        Agent::Empty => Ok(()),
        Agent::Seq(a, b) | Agent::Par(a, b) | Agent::Choice(a, b) => {
            check_scoping(a, scope, context)?;
            check_scoping(b, scope, context)
        }
        Agent::Call { args, .. } => args.iter().try_for_each(|a| check_term(a, scope)),
        Agent::Sum {
            binder,
            domain,
            body,
        } => {
            if classify_ident(binder) != Some(IdentClass::Upper) {
                return Err(Error::InvalidIdentifier(binder.to_string()));
            }
            if scope.contains(&&**binder) {
                return Err(Error::BinderClash {
                    binder: binder.to_string(),
                    context: context.to_string(),
                });
            }
            if domain.is_empty() {
                return Err(Error::EmptyDomain(binder.to_string()));
            }
            for d in domain.iter() {
                d.ensure_ground()?;
            }
            scope.push(binder);
            let res = check_scoping(body, scope, context);
            scope.pop();
            res
        }
    }
}

/// Returns a node lying on a cycle of `graph`, scanning roots in order.
pub(crate) fn find_cycle<'a>(graph: &IndexMap<&'a str, BTreeSet<&'a str>>) -> Option<&'a str> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Unvisited,
        OnStack,
        Done,
    }
    fn visit<'a>(
        node: &'a str,
        graph: &IndexMap<&'a str, BTreeSet<&'a str>>,
        marks: &mut BTreeMap<&'a str, Mark>,
    ) -> Option<&'a str> {
        match marks.get(node).copied().unwrap_or(Mark::Unvisited) {
            Mark::OnStack => return Some(node),
            Mark::Done => return None,
            Mark::Unvisited => {}
        }
        marks.insert(node, Mark::OnStack);
        if let Some(succ) = graph.get(node) {
            for next in succ {
                if let Some(hit) = visit(next, graph, marks) {
                    return Some(hit);
                }
            }
        }
        marks.insert(node, Mark::Done);
        None
    }
    let mut marks = BTreeMap::new();
    graph.keys().find_map(|root| visit(root, graph, &mut marks))
}
