//! Structured pieces of information (si-terms).
//!
//! A si-term is a token, a functor applied to a nonempty list of si-terms, or
//! a binder variable. Variables only live inside templates (procedure bodies
//! and generalized-sum bodies) and are eliminated before a primitive runs.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum SiTerm {
    Token(Arc<str>),
    Compound {
        functor: Arc<str>,
        args: Arc<[SiTerm]>,
    },
    Var(Arc<str>),
}

/// What kind of name an identifier may stand for.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum IdentClass {
    /// Lowercase-initial identifier or an unsigned decimal literal.
    Lower,
    /// Uppercase-initial identifier.
    Upper,
}

/// Classifies `name`, or returns `None` if it is not a valid identifier.
pub fn classify_ident(name: &str) -> Option<IdentClass> {
    let mut chars = name.chars();
    let first = chars.next()?;
    if first.is_ascii_digit() {
        return name
            .chars()
            .all(|c| c.is_ascii_digit())
            .then_some(IdentClass::Lower);
    }
    if !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return None;
    }
    if first.is_ascii_lowercase() {
        Some(IdentClass::Lower)
    } else if first.is_ascii_uppercase() {
        Some(IdentClass::Upper)
    } else {
        None
    }
}

fn expect_class(name: &str, class: IdentClass) -> Result<()> {
    match classify_ident(name) {
        Some(c) if c == class => Ok(()),
        _ => Err(Error::InvalidIdentifier(name.to_string())),
    }
}

impl SiTerm {
    pub fn token(name: &str) -> Result<SiTerm> {
        expect_class(name, IdentClass::Lower)?;
        Ok(SiTerm::Token(name.into()))
    }

    pub fn compound(functor: &str, args: Vec<SiTerm>) -> Result<SiTerm> {
        if functor.starts_with(|c: char| c.is_ascii_digit()) {
            return Err(Error::InvalidIdentifier(functor.to_string()));
        }
        expect_class(functor, IdentClass::Lower)?;
        if args.is_empty() {
            return Err(Error::EmptyArguments(functor.to_string()));
        }
        Ok(SiTerm::Compound {
            functor: functor.into(),
            args: args.into(),
        })
    }

    pub fn var(name: &str) -> Result<SiTerm> {
        expect_class(name, IdentClass::Upper)?;
        Ok(SiTerm::Var(name.into()))
    }

    pub fn is_ground(&self) -> bool {
        match self {
            SiTerm::Token(_) => true,
            SiTerm::Var(_) => false,
            SiTerm::Compound { args, .. } => args.iter().all(SiTerm::is_ground),
        }
    }

    /// Returns `Err(NonGround)` unless the term is ground.
    pub fn ensure_ground(&self) -> Result<()> {
        if self.is_ground() {
            Ok(())
        } else {
            Err(Error::NonGround(self.to_string()))
        }
    }

    pub fn occurs(&self, var: &str) -> bool {
        match self {
            SiTerm::Token(_) => false,
            SiTerm::Var(v) => &**v == var,
            SiTerm::Compound { args, .. } => args.iter().any(|a| a.occurs(var)),
        }
    }

    /// Collects the names of every variable in the term.
    pub fn vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            SiTerm::Token(_) => {}
            SiTerm::Var(v) => out.push(v),
            SiTerm::Compound { args, .. } => args.iter().for_each(|a| a.vars(out)),
        }
    }

    /// Replaces every `Var(var)` by `value`.
    pub fn substitute(&self, var: &str, value: &SiTerm) -> SiTerm {
        match self {
            SiTerm::Var(v) if &**v == var => value.clone(),
            SiTerm::Token(_) | SiTerm::Var(_) => self.clone(),
            SiTerm::Compound { functor, args } => {
                if !self.occurs(var) {
                    return self.clone();
                }
                SiTerm::Compound {
                    functor: functor.clone(),
                    args: args.iter().map(|a| a.substitute(var, value)).collect(),
                }
            }
        }
    }

    /// Simultaneous substitution of several variables.
    pub fn substitute_all(&self, bindings: &BTreeMap<Arc<str>, SiTerm>) -> SiTerm {
        match self {
            SiTerm::Var(v) => bindings.get(v).cloned().unwrap_or_else(|| self.clone()),
            SiTerm::Token(_) => self.clone(),
            SiTerm::Compound { functor, args } => SiTerm::Compound {
                functor: functor.clone(),
                args: args.iter().map(|a| a.substitute_all(bindings)).collect(),
            },
        }
    }

    /// Canonical rendering: tokens as bare names, compounds as
    /// `functor(arg1,arg2,...)`, no whitespace.
    pub fn render(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for SiTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SiTerm::Token(name) | SiTerm::Var(name) => f.write_str(name),
            SiTerm::Compound { functor, args } => {
                write!(f, "{functor}(")?;
                for (i, arg) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{arg}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Shorthand for trusted, statically known names. Panics on a bad identifier.
pub(crate) fn tok(name: &str) -> SiTerm {
    SiTerm::token(name).expect("valid token name")
}

pub(crate) fn var(name: &str) -> SiTerm {
    SiTerm::var(name).expect("valid variable name")
}

pub(crate) fn app(functor: &str, args: Vec<SiTerm>) -> SiTerm {
    SiTerm::compound(functor, args).expect("valid compound term")
}
