//! The shared space: a multiset of ground si-terms.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::Result;
use crate::term::SiTerm;

/// Multiset of ground si-terms. Absent terms have no entry; every count is at
/// least one.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Store {
    occurrences: BTreeMap<SiTerm, usize>,
}

impl Store {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a store by telling each term once, in order.
    pub fn from_terms<'a>(terms: impl IntoIterator<Item = &'a SiTerm>) -> Result<Self> {
        let mut store = Store::new();
        for t in terms {
            store.tell(t)?;
        }
        Ok(store)
    }

    /// Adds one occurrence of `t`.
    pub fn tell(&mut self, t: &SiTerm) -> Result<()> {
        t.ensure_ground()?;
        *self.occurrences.entry(t.clone()).or_insert(0) += 1;
        Ok(())
    }

    pub fn ask(&self, t: &SiTerm) -> Result<bool> {
        t.ensure_ground()?;
        Ok(self.occurrences.contains_key(t))
    }

    /// Removes one occurrence of `t`. Returns `false`, leaving the store
    /// untouched, when `t` is absent: the get cannot be executed.
    pub fn get(&mut self, t: &SiTerm) -> Result<bool> {
        t.ensure_ground()?;
        match self.occurrences.get_mut(t) {
            None => Ok(false),
            Some(n) if *n > 1 => {
                *n -= 1;
                Ok(true)
            }
            Some(_) => {
                self.occurrences.remove(t);
                Ok(true)
            }
        }
    }

    pub fn nask(&self, t: &SiTerm) -> Result<bool> {
        self.ask(t).map(|present| !present)
    }

    pub fn count(&self, t: &SiTerm) -> usize {
        self.occurrences.get(t).copied().unwrap_or(0)
    }

    /// Non-mutating tell.
    pub fn told(&self, t: &SiTerm) -> Result<Store> {
        let mut next = self.clone();
        next.tell(t)?;
        Ok(next)
    }

    /// Non-mutating get; `None` when the get is not executable.
    pub fn taken(&self, t: &SiTerm) -> Result<Option<Store>> {
        let mut next = self.clone();
        Ok(next.get(t)?.then_some(next))
    }

    pub fn is_empty(&self) -> bool {
        self.occurrences.is_empty()
    }

    /// Number of distinct terms.
    pub fn len(&self) -> usize {
        self.occurrences.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SiTerm, usize)> {
        self.occurrences.iter().map(|(t, n)| (t, *n))
    }

    /// `(render, count)` pairs sorted by render string.
    pub fn sorted_entries(&self) -> Vec<(String, usize)> {
        let mut entries: Vec<_> = self.iter().map(|(t, n)| (t.render(), n)).collect();
        entries.sort();
        entries
    }

    /// Debug dump: one `term : count` line per entry, sorted by render string.
    pub fn dump_lines(&self) -> Vec<String> {
        self.sorted_entries()
            .into_iter()
            .map(|(t, n)| format!("{t} : {n}"))
            .collect()
    }

    pub fn dump(&self) -> String {
        let mut out = String::new();
        for line in self.dump_lines() {
            out.push_str(&line);
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for Store {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (t, n)) in self.sorted_entries().into_iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            if n == 1 {
                write!(f, "{t}")?;
            } else {
                write!(f, "{t}:{n}")?;
            }
        }
        f.write_str("}")
    }
}
