//! Basic formulae over a single store and bsL formulae over sequences of
//! stores.
//!
//! A bsL formula is discharged one store at a time: `derive` returns every
//! residual left after the first basic formula is met on the given store. The
//! residual `Epsilon` means nothing remains to be established.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;

use crate::agent::find_cycle;
use crate::error::{Error, Result};
use crate::store::Store;
use crate::term::SiTerm;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum BasicFormula {
    Bf(SiTerm),
    Not(Arc<BasicFormula>),
    And(Arc<BasicFormula>, Arc<BasicFormula>),
    Or(Arc<BasicFormula>, Arc<BasicFormula>),
}

impl BasicFormula {
    pub fn bf(t: SiTerm) -> Self {
        BasicFormula::Bf(t)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(b: BasicFormula) -> Self {
        BasicFormula::Not(Arc::new(b))
    }

    pub fn and(a: BasicFormula, b: BasicFormula) -> Self {
        BasicFormula::And(Arc::new(a), Arc::new(b))
    }

    pub fn or(a: BasicFormula, b: BasicFormula) -> Self {
        BasicFormula::Or(Arc::new(a), Arc::new(b))
    }

    pub fn is_ground(&self) -> bool {
        match self {
            BasicFormula::Bf(t) => t.is_ground(),
            BasicFormula::Not(b) => b.is_ground(),
            BasicFormula::And(a, b) | BasicFormula::Or(a, b) => a.is_ground() && b.is_ground(),
        }
    }

    fn first_non_ground(&self) -> Option<&SiTerm> {
        match self {
            BasicFormula::Bf(t) => (!t.is_ground()).then_some(t),
            BasicFormula::Not(b) => b.first_non_ground(),
            BasicFormula::And(a, b) | BasicFormula::Or(a, b) => {
                a.first_non_ground().or_else(|| b.first_non_ground())
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            BasicFormula::Or(..) => 0,
            BasicFormula::And(..) => 1,
            _ => 2,
        }
    }

    fn write_operand(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for BasicFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasicFormula::Bf(t) => write!(f, "bf({t})"),
            BasicFormula::Not(b) => {
                f.write_str("!")?;
                b.write_operand(f, 2)
            }
            BasicFormula::And(a, b) => {
                a.write_operand(f, 1)?;
                f.write_str(" & ")?;
                b.write_operand(f, 2)
            }
            BasicFormula::Or(a, b) => {
                a.write_operand(f, 0)?;
                f.write_str(" | ")?;
                b.write_operand(f, 1)
            }
        }
    }
}

/// Truth of a basic formula on a store: `bf(t)` holds iff `t` is present,
/// connectives are classical.
pub fn sat_basic(store: &Store, b: &BasicFormula) -> bool {
    match b {
        BasicFormula::Bf(t) => store.count(t) >= 1,
        BasicFormula::Not(x) => !sat_basic(store, x),
        BasicFormula::And(x, y) => sat_basic(store, x) && sat_basic(store, y),
        BasicFormula::Or(x, y) => sat_basic(store, x) || sat_basic(store, y),
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum BslFormula {
    Basic(BasicFormula),
    Var(Arc<str>),
    Choice(Arc<BslFormula>, Arc<BslFormula>),
    Seq(Arc<BslFormula>, Arc<BslFormula>),
    /// Satisfied marker. Only ever produced as a residual.
    Epsilon,
}

impl BslFormula {
    pub fn basic(b: BasicFormula) -> Self {
        BslFormula::Basic(b)
    }

    pub fn var(name: &str) -> Self {
        BslFormula::Var(name.into())
    }

    pub fn choice(a: BslFormula, b: BslFormula) -> Self {
        BslFormula::Choice(Arc::new(a), Arc::new(b))
    }

    pub fn seq(a: BslFormula, b: BslFormula) -> Self {
        BslFormula::Seq(Arc::new(a), Arc::new(b))
    }

    /// `first ; rest` with `ε ; g` rewritten to `g`.
    fn seq_normalized(first: BslFormula, rest: &Arc<BslFormula>) -> BslFormula {
        if first.is_satisfied() {
            (**rest).clone()
        } else {
            BslFormula::Seq(Arc::new(first), rest.clone())
        }
    }

    pub fn is_satisfied(&self) -> bool {
        matches!(self, BslFormula::Epsilon)
    }

    fn unguarded_vars<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            BslFormula::Basic(_) | BslFormula::Epsilon => {}
            BslFormula::Var(name) => {
                out.insert(name);
            }
            BslFormula::Choice(a, b) => {
                a.unguarded_vars(out);
                b.unguarded_vars(out);
            }
            // the right operand only starts after the left one consumed a step
            BslFormula::Seq(a, _) => a.unguarded_vars(out),
        }
    }

    fn visit_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            BslFormula::Basic(_) | BslFormula::Epsilon => {}
            BslFormula::Var(name) => out.push(name),
            BslFormula::Choice(a, b) | BslFormula::Seq(a, b) => {
                a.visit_vars(out);
                b.visit_vars(out);
            }
        }
    }

    fn check_ground(&self) -> Result<()> {
        match self {
            BslFormula::Basic(b) => match b.first_non_ground() {
                Some(t) => Err(Error::NonGround(t.to_string())),
                None => Ok(()),
            },
            BslFormula::Var(_) | BslFormula::Epsilon => Ok(()),
            BslFormula::Choice(a, b) | BslFormula::Seq(a, b) => {
                a.check_ground()?;
                b.check_ground()
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            BslFormula::Choice(..) => 0,
            BslFormula::Seq(..) => 1,
            _ => 2,
        }
    }

    fn write_operand(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for BslFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BslFormula::Basic(b) => write!(f, "{b}"),
            BslFormula::Var(name) => f.write_str(name),
            BslFormula::Epsilon => f.write_str("ε"),
            BslFormula::Choice(a, b) => {
                a.write_operand(f, 0)?;
                f.write_str(" + ")?;
                b.write_operand(f, 1)
            }
            BslFormula::Seq(a, b) => {
                a.write_operand(f, 1)?;
                f.write_str(" ; ")?;
                b.write_operand(f, 2)
            }
        }
    }
}

/// Named formula definitions `P = f`, in declaration order.
#[derive(Clone, Default, PartialEq, Eq, Debug)]
pub struct FormulaEnv {
    defs: IndexMap<Arc<str>, BslFormula>,
}

impl FormulaEnv {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `name = f`. Rejects duplicates, `ε` inside user formulae, non-ground
    /// terms and definitions that close an unguarded cycle. Names that are not
    /// yet defined are allowed here; see [`FormulaEnv::validate`].
    pub fn define(&mut self, name: &str, f: BslFormula) -> Result<()> {
        if crate::term::classify_ident(name).is_none()
            || name.starts_with(|c: char| c.is_ascii_digit())
        {
            return Err(Error::InvalidIdentifier(name.to_string()));
        }
        if self.defs.contains_key(name) {
            return Err(Error::DuplicateDefinition(name.to_string()));
        }
        if contains_epsilon(&f) {
            return Err(Error::EpsilonInFormula);
        }
        f.check_ground()?;
        self.defs.insert(name.into(), f);
        if let Err(e) = self.check_guarded() {
            self.defs.shift_remove(name);
            return Err(e);
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&BslFormula> {
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

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BslFormula)> {
        self.defs.iter().map(|(k, v)| (&**k, v))
    }

    /// Every recursive use of a variable is preceded by a basic formula.
    pub fn check_guarded(&self) -> Result<()> {
        let graph: IndexMap<&str, BTreeSet<&str>> = self
            .defs
            .iter()
            .map(|(name, f)| {
                let mut vars = BTreeSet::new();
                f.unguarded_vars(&mut vars);
                (&**name, vars)
            })
            .collect();
        match find_cycle(&graph) {
            Some(name) => Err(Error::UnguardedFormula(name.to_string())),
            None => Ok(()),
        }
    }

    /// Every variable used in the environment or in `extra` is defined.
    pub fn check_resolved<'a>(
        &self,
        extra: impl IntoIterator<Item = &'a BslFormula>,
    ) -> Result<()> {
        let mut vars = Vec::new();
        for f in self.defs.values() {
            f.visit_vars(&mut vars);
        }
        for f in extra {
            f.visit_vars(&mut vars);
        }
        match vars.into_iter().find(|v| !self.defs.contains_key(*v)) {
            Some(v) => Err(Error::UnknownFormulaVariable(v.to_string())),
            None => Ok(()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.check_resolved(std::iter::empty())?;
        self.check_guarded()
    }
}

fn contains_epsilon(f: &BslFormula) -> bool {
    match f {
        BslFormula::Epsilon => true,
        BslFormula::Basic(_) | BslFormula::Var(_) => false,
        BslFormula::Choice(a, b) | BslFormula::Seq(a, b) => {
            contains_epsilon(a) || contains_epsilon(b)
        }
    }
}

/// All residuals `f'` with `store ⊢ f → f'`, without duplicates, in rule order
/// (left alternative first). `ε` has nothing left to discharge and yields none.
pub fn derive(store: &Store, f: &BslFormula, env: &FormulaEnv) -> Result<Vec<BslFormula>> {
    let mut out = Vec::new();
    derive_into(store, f, env, &mut out, 0)?;
    Ok(out)
}

fn push_unique(out: &mut Vec<BslFormula>, f: BslFormula) {
    if !out.contains(&f) {
        out.push(f);
    }
}

fn derive_into(
    store: &Store,
    f: &BslFormula,
    env: &FormulaEnv,
    out: &mut Vec<BslFormula>,
    unfoldings: usize,
) -> Result<()> {
    match f {
        BslFormula::Epsilon => {}
        BslFormula::Basic(b) => {
            if sat_basic(store, b) {
                push_unique(out, BslFormula::Epsilon);
            }
        }
        BslFormula::Var(name) => {
            let body = env
                .get(name)
                .ok_or_else(|| Error::UnknownFormulaVariable(name.to_string()))?;
            // a guarded environment never unfolds more than once per definition
            if unfoldings > env.len() {
                return Err(Error::UnguardedFormula(name.to_string()));
            }
            derive_into(store, body, env, out, unfoldings + 1)?;
        }
        BslFormula::Choice(a, b) => {
            derive_into(store, a, env, out, unfoldings)?;
            derive_into(store, b, env, out, unfoldings)?;
        }
        BslFormula::Seq(first, rest) => {
            let mut heads = Vec::new();
            derive_into(store, first, env, &mut heads, unfoldings)?;
            for head in heads {
                push_unique(out, BslFormula::seq_normalized(head, rest));
            }
        }
    }
    Ok(())
}

pub fn is_satisfied(f: &BslFormula) -> bool {
    f.is_satisfied()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{app, tok};

    fn bf(name: &str) -> BasicFormula {
        BasicFormula::bf(tok(name))
    }

    fn bf1(functor: &str, arg: &str) -> BasicFormula {
        BasicFormula::bf(app(functor, vec![tok(arg)]))
    }

    fn store_of(terms: &[SiTerm]) -> Store {
        Store::from_terms(terms).unwrap()
    }

    fn ns_env() -> FormulaEnv {
        let mut env = FormulaEnv::new();
        let inproper_init = BasicFormula::not(BasicFormula::or(
            bf1("a_running", "bob"),
            bf1("b_running", "alice"),
        ));
        env.define("inproper_init", BslFormula::basic(inproper_init))
            .unwrap();
        env.define("end_session", BslFormula::basic(bf1("b_commit", "alice")))
            .unwrap();
        env.define(
            "F",
            BslFormula::choice(
                BslFormula::seq(BslFormula::var("inproper_init"), BslFormula::var("F")),
                BslFormula::var("end_session"),
            ),
        )
        .unwrap();
        env
    }

    #[test]
    fn sat_basic_examples() {
        let s = store_of(&[app("a_running", vec![tok("mallory")])]);
        assert!(sat_basic(&s, &bf1("a_running", "mallory")));
        assert!(sat_basic(&Store::new(), &BasicFormula::not(bf("x"))));
        let s = store_of(&[app("b_running", vec![tok("alice")])]);
        let inproper_init = BasicFormula::not(BasicFormula::or(
            bf1("a_running", "bob"),
            bf1("b_running", "alice"),
        ));
        assert!(!sat_basic(&s, &inproper_init));
        assert!(sat_basic(&Store::new(), &inproper_init));
    }

    #[test]
    fn derive_basic() {
        let env = FormulaEnv::new();
        let f = BslFormula::basic(bf("a"));
        assert_eq!(
            derive(&store_of(&[tok("a")]), &f, &env).unwrap(),
            vec![BslFormula::Epsilon]
        );
        assert!(derive(&Store::new(), &f, &env).unwrap().is_empty());
        assert!(derive(&Store::new(), &BslFormula::Epsilon, &env)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn derive_recursive_formula_on_commit_store() {
        // Hand derivation: F unfolds (PF) to a choice (CF). Left: SF over
        // inproper_init, which holds (BF) -> ε ; F -> F. Right: end_session
        // holds (PF, BF) -> ε.
        let env = ns_env();
        let s = store_of(&[app("b_commit", vec![tok("alice")])]);
        let got = derive(&s, &BslFormula::var("F"), &env).unwrap();
        assert_eq!(got, vec![BslFormula::var("F"), BslFormula::Epsilon]);
    }

    #[test]
    fn derive_blocks_bad_session() {
        let env = ns_env();
        let s = store_of(&[app("a_running", vec![tok("bob")])]);
        assert!(derive(&s, &BslFormula::var("F"), &env).unwrap().is_empty());
        let s = store_of(&[
            app("a_running", vec![tok("bob")]),
            app("b_commit", vec![tok("alice")]),
        ]);
        assert_eq!(
            derive(&s, &BslFormula::var("F"), &env).unwrap(),
            vec![BslFormula::Epsilon]
        );
    }

    #[test]
    fn derive_sequence_keeps_tail() {
        let env = FormulaEnv::new();
        let f = BslFormula::seq(
            BslFormula::seq(BslFormula::basic(bf("a")), BslFormula::basic(bf("b"))),
            BslFormula::basic(bf("c")),
        );
        let got = derive(&store_of(&[tok("a")]), &f, &env).unwrap();
        assert_eq!(
            got,
            vec![BslFormula::seq(
                BslFormula::basic(bf("b")),
                BslFormula::basic(bf("c"))
            )]
        );
    }

    #[test]
    fn unknown_variable() {
        let env = FormulaEnv::new();
        assert_eq!(
            derive(&Store::new(), &BslFormula::var("G"), &env),
            Err(Error::UnknownFormulaVariable("G".into()))
        );
    }

    #[test]
    fn define_formula_guardedness() {
        let mut env = FormulaEnv::new();
        env.define(
            "F",
            BslFormula::choice(
                BslFormula::seq(BslFormula::basic(bf("b")), BslFormula::var("F")),
                BslFormula::basic(bf("c")),
            ),
        )
        .unwrap();

        assert_eq!(
            env.define(
                "G",
                BslFormula::choice(BslFormula::var("G"), BslFormula::basic(bf("b")))
            ),
            Err(Error::UnguardedFormula("G".into()))
        );
        assert!(!env.contains("G"));

        env.define(
            "H",
            BslFormula::seq(
                BslFormula::basic(bf("b")),
                BslFormula::choice(BslFormula::var("H"), BslFormula::basic(bf("c"))),
            ),
        )
        .unwrap();

        // mutual unguarded recursion is caught when the cycle closes
        env.define("J", BslFormula::var("K")).unwrap();
        assert_eq!(
            env.define(
                "K",
                BslFormula::choice(BslFormula::var("J"), BslFormula::basic(bf("a")))
            ),
            Err(Error::UnguardedFormula("J".into()))
        );
        assert_eq!(
            env.validate(),
            Err(Error::UnknownFormulaVariable("K".into()))
        );
    }

    #[test]
    fn satisfied_marker() {
        assert!(is_satisfied(&BslFormula::Epsilon));
        assert!(!is_satisfied(&BslFormula::var("F")));
        assert!(!is_satisfied(&BslFormula::seq(
            BslFormula::basic(bf("b")),
            BslFormula::var("F")
        )));
    }

    #[test]
    fn display() {
        let b = BasicFormula::not(BasicFormula::or(
            bf("a"),
            BasicFormula::and(bf("b"), bf("c")),
        ));
        assert_eq!(b.to_string(), "!(bf(a) | bf(b) & bf(c))");
        let f = BslFormula::choice(
            BslFormula::seq(BslFormula::basic(b), BslFormula::var("F")),
            BslFormula::var("G"),
        );
        assert_eq!(f.to_string(), "!(bf(a) | bf(b) & bf(c)) ; F + G");
        let f = BslFormula::seq(
            BslFormula::choice(BslFormula::var("A"), BslFormula::var("B")),
            BslFormula::seq(BslFormula::var("C"), BslFormula::var("D")),
        );
        assert_eq!(f.to_string(), "(A + B) ; (C ; D)");
    }
}
