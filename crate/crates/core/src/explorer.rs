//! Bounded depth-first search over the constrained transition system.
//!
//! The random runner commits to every step it takes and can fail late; the
//! explorer backtracks instead, so it finds a witness whenever one exists
//! within the depth bound. Successors are visited in the deterministic order
//! of [`constrained_successors`], so the reported witness only depends on the
//! inputs.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use crate::agent::{Agent, ProcEnv};
use crate::error::Result;
use crate::interpreter::{
    agent_transitions, constrained_successors, Configuration, StepLabel, TraceStep,
};
use crate::logic::{BslFormula, FormulaEnv};
use crate::store::Store;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SearchStatus {
    Witness,
    /// The whole reachable space was explored without a witness.
    Exhausted,
    /// No witness found, but some branch was cut by the depth bound.
    DepthLimit,
}

impl fmt::Display for SearchStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SearchStatus::Witness => "witness",
            SearchStatus::Exhausted => "exhausted",
            SearchStatus::DepthLimit => "depth limit",
        })
    }
}

#[derive(Clone, Copy, Default, PartialEq, Eq, Debug)]
pub struct SearchStats {
    pub states_explored: usize,
    pub max_depth_reached: usize,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Witness {
    pub steps: Vec<TraceStep>,
    pub last: Configuration,
}

impl Witness {
    pub fn trace(&self) -> &[StepLabel] {
        &self.last.trace
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SearchResult {
    pub status: SearchStatus,
    /// At most one witness unless all witnesses were requested.
    pub witnesses: Vec<Witness>,
    pub stats: SearchStats,
}

impl SearchResult {
    pub fn witness(&self) -> Option<&Witness> {
        self.witnesses.first()
    }
}

/// A configuration without its trace; the unit of memoization.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct SearchState {
    pub agent: Agent,
    pub store: Store,
    pub formula: BslFormula,
}

pub struct Explorer<'a> {
    procs: &'a ProcEnv,
    formulas: &'a FormulaEnv,
    max_depth: usize,
    all: bool,
}

struct Frame {
    state: SearchState,
    successors: std::vec::IntoIter<(StepLabel, SearchState)>,
    remaining: usize,
    cut: bool,
    found: usize,
    /// Some successor was skipped because it lies on the current path.
    path_pruned: bool,
}

impl<'a> Explorer<'a> {
    pub fn new(procs: &'a ProcEnv, formulas: &'a FormulaEnv, max_depth: usize) -> Self {
        Explorer {
            procs,
            formulas,
            max_depth,
            all: false,
        }
    }

    /// Collect every witness up to the depth bound instead of stopping at the
    /// first one. Traces that revisit a state of their own path are skipped.
    pub fn all_witnesses(mut self, all: bool) -> Self {
        self.all = all;
        self
    }

    pub fn search(&self, agent: &Agent, formula: &BslFormula) -> Result<SearchResult> {
        self.search_observed(agent, formula, |_| {})
    }

    /// Like [`Explorer::search`], calling `observe` on every state entered.
    pub fn search_observed(
        &self,
        agent: &Agent,
        formula: &BslFormula,
        mut observe: impl FnMut(&SearchState),
    ) -> Result<SearchResult> {
        let root = SearchState {
            agent: agent.normalize(),
            store: Store::new(),
            formula: formula.clone(),
        };
        let mut stats = SearchStats::default();
        let mut witnesses = Vec::new();
        let mut any_cut = false;
        // states whose subtree, explored with this much depth left, had no witness
        let mut dead: HashMap<SearchState, usize> = HashMap::new();
        let mut on_path: HashSet<SearchState> = HashSet::new();
        let mut path: Vec<TraceStep> = Vec::new();
        let mut stack: Vec<Frame> = Vec::new();

        // Entering a state either resolves it immediately (witness, dead end,
        // cut) or pushes a frame for its successors.
        let mut pending = Some(root);
        loop {
            if let Some(state) = pending.take() {
                let depth = path.len();
                let remaining = self.max_depth - depth;
                stats.states_explored += 1;
                stats.max_depth_reached = stats.max_depth_reached.max(depth);
                observe(&state);

                let mut resolved: Option<(bool, usize)> = None; // (cut, witnesses found)
                if state.formula.is_satisfied() {
                    witnesses.push(self.witness_from(&path, &state));
                    resolved = Some((false, 1));
                } else if state.agent.is_empty() {
                    resolved = Some((false, 0));
                } else {
                    let successors = constrained_successors(
                        &state.agent,
                        &state.store,
                        &state.formula,
                        self.procs,
                        self.formulas,
                    )?;
                    if successors.is_empty() {
                        resolved = Some((false, 0));
                    } else if remaining == 0 {
                        resolved = Some((true, 0));
                    } else {
                        let successors: Vec<_> = successors
                            .into_iter()
                            .map(|s| {
                                (
                                    s.label,
                                    SearchState {
                                        agent: s.agent,
                                        store: s.store,
                                        formula: s.formula,
                                    },
                                )
                            })
                            .collect();
                        on_path.insert(state.clone());
                        stack.push(Frame {
                            state,
                            successors: successors.into_iter(),
                            remaining,
                            cut: false,
                            found: 0,
                            path_pruned: false,
                        });
                    }
                }
                if let Some((cut, found)) = resolved {
                    any_cut |= cut;
                    if !self.all && found > 0 {
                        break;
                    }
                    if let Some(parent) = stack.last_mut() {
                        parent.cut |= cut;
                        parent.found += found;
                    }
                    path.pop();
                }
                continue;
            }

            let Some(frame) = stack.last_mut() else { break };
            match frame.successors.next() {
                Some((label, next)) => {
                    let child_remaining = frame.remaining - 1;
                    if on_path.contains(&next) {
                        frame.path_pruned = true;
                        continue;
                    }
                    if let Some(&r) = dead.get(&next) {
                        if r >= child_remaining {
                            frame.cut |= r != usize::MAX;
                            any_cut |= r != usize::MAX;
                            continue;
                        }
                    }
                    path.push(TraceStep {
                        label,
                        store: next.store.clone(),
                        formula: next.formula.clone(),
                    });
                    pending = Some(next);
                }
                None => {
                    let frame = stack.pop().expect("frame");
                    on_path.remove(&frame.state);
                    // In all-witness mode a subtree pruned by the path is only
                    // dead relative to that path.
                    if frame.found == 0 && !(self.all && frame.path_pruned) {
                        let r = if frame.cut {
                            frame.remaining
                        } else {
                            usize::MAX
                        };
                        let entry = dead.entry(frame.state).or_insert(0);
                        *entry = (*entry).max(r);
                    }
                    if let Some(parent) = stack.last_mut() {
                        parent.cut |= frame.cut;
                        parent.found += frame.found;
                        parent.path_pruned |= frame.path_pruned;
                    }
                    path.pop();
                }
            }
        }

        let status = if !witnesses.is_empty() {
            SearchStatus::Witness
        } else if any_cut {
            SearchStatus::DepthLimit
        } else {
            SearchStatus::Exhausted
        };
        Ok(SearchResult {
            status,
            witnesses,
            stats,
        })
    }

    fn witness_from(&self, path: &[TraceStep], state: &SearchState) -> Witness {
        Witness {
            steps: path.to_vec(),
            last: Configuration {
                agent: state.agent.clone(),
                store: state.store.clone(),
                formula: state.formula.clone(),
                trace: path.iter().map(|s| s.label.clone()).collect(),
            },
        }
    }
}

/// First witness within `max_depth` constrained steps.
pub fn search(
    agent: &Agent,
    formula: &BslFormula,
    procs: &ProcEnv,
    formulas: &FormulaEnv,
    max_depth: usize,
) -> Result<SearchResult> {
    Explorer::new(procs, formulas, max_depth).search(agent, formula)
}

/// Every witness within `max_depth` constrained steps.
pub fn search_all(
    agent: &Agent,
    formula: &BslFormula,
    procs: &ProcEnv,
    formulas: &FormulaEnv,
    max_depth: usize,
) -> Result<SearchResult> {
    Explorer::new(procs, formulas, max_depth)
        .all_witnesses(true)
        .search(agent, formula)
}

/// Stores of every maximal configuration (terminated, or without enabled
/// step) reachable from `<agent, store>` within `max_depth` unconstrained steps.
pub fn reachable_stores(
    agent: &Agent,
    store: &Store,
    procs: &ProcEnv,
    max_depth: usize,
) -> Result<BTreeSet<Store>> {
    let mut out = BTreeSet::new();
    let mut seen: HashMap<(Agent, Store), usize> = HashMap::new();
    let mut stack = vec![(agent.normalize(), store.clone(), max_depth)];
    while let Some((agent, store, remaining)) = stack.pop() {
        let key = (agent, store);
        if let Some(&r) = seen.get(&key) {
            if r >= remaining {
                continue;
            }
        }
        seen.insert(key.clone(), remaining);
        let (agent, store) = key;
        let transitions = agent_transitions(&agent, &store, procs)?;
        if transitions.is_empty() {
            out.insert(store);
        } else if remaining > 0 {
            for tr in transitions.into_iter().rev() {
                stack.push((tr.agent, tr.store, remaining - 1));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::Primitive;
    use crate::logic::BasicFormula;
    use crate::term::{app, tok};

    fn t(name: &str) -> Agent {
        Agent::tell(tok(name))
    }

    fn bf(name: &str) -> BslFormula {
        BslFormula::basic(BasicFormula::bf(tok(name)))
    }

    fn stores(sets: &[&[SiTermName]]) -> BTreeSet<Store> {
        sets.iter()
            .map(|names| {
                let terms: Vec<_> = names.iter().map(|n| n.term()).collect();
                Store::from_terms(&terms).unwrap()
            })
            .collect()
    }

    enum SiTermName {
        Tok(&'static str),
        App(&'static str, &'static [&'static str]),
    }

    impl SiTermName {
        fn term(&self) -> crate::term::SiTerm {
            match self {
                SiTermName::Tok(n) => tok(n),
                SiTermName::App(f, args) => app(f, args.iter().map(|a| tok(a)).collect()),
            }
        }
    }

    use SiTermName::{App, Tok};

    #[test]
    fn search_picks_satisfying_branch() {
        let env = ProcEnv::new();
        let fenv = FormulaEnv::new();
        let res = search(&Agent::choice(t("a"), t("b")), &bf("b"), &env, &fenv, 5).unwrap();
        assert_eq!(res.status, SearchStatus::Witness);
        let w = res.witness().unwrap();
        assert_eq!(w.trace().len(), 1);
        assert_eq!(w.trace()[0].kind, Primitive::Tell);
        assert_eq!(w.trace()[0].term, tok("b"));
        assert!(w.last.formula.is_satisfied());
    }

    #[test]
    fn search_exhausted() {
        let env = ProcEnv::new();
        let fenv = FormulaEnv::new();
        let res = search(&Agent::ask(tok("a")), &bf("a"), &env, &fenv, 5).unwrap();
        assert_eq!(res.status, SearchStatus::Exhausted);
        assert!(res.witness().is_none());
    }

    #[test]
    fn search_depth_limit() {
        let mut env = ProcEnv::new();
        env.define("P", &[], Agent::seq(t("a"), Agent::call("P", vec![])))
            .unwrap();
        let mut fenv = FormulaEnv::new();
        fenv.define(
            "G",
            BslFormula::choice(BslFormula::seq(bf("a"), BslFormula::var("G")), bf("zzz")),
        )
        .unwrap();
        let res = search(
            &Agent::call("P", vec![]),
            &BslFormula::var("G"),
            &env,
            &fenv,
            4,
        )
        .unwrap();
        assert_eq!(res.status, SearchStatus::DepthLimit);
        assert_eq!(res.stats.max_depth_reached, 4);

        let seq = Agent::seq_all([t("a"), t("a"), t("a"), t("b")]);
        let goal = BslFormula::choice(BslFormula::seq(bf("a"), BslFormula::var("G")), bf("b"));
        let mut fenv = FormulaEnv::new();
        fenv.define("G", goal).unwrap();
        let g = BslFormula::var("G");
        let res = search(&seq, &g, &env, &fenv, 3).unwrap();
        assert_eq!(res.status, SearchStatus::DepthLimit);
        let res = search(&seq, &g, &env, &fenv, 4).unwrap();
        assert_eq!(res.status, SearchStatus::Witness);
        assert_eq!(res.witness().unwrap().len(), 4);
    }

    #[test]
    fn search_all_collects_each_trace() {
        let env = ProcEnv::new();
        let fenv = FormulaEnv::new();
        let goal = BslFormula::seq(
            BslFormula::basic(BasicFormula::or(
                BasicFormula::bf(tok("a")),
                BasicFormula::bf(tok("b")),
            )),
            BslFormula::basic(BasicFormula::and(
                BasicFormula::bf(tok("a")),
                BasicFormula::bf(tok("b")),
            )),
        );
        let res = search_all(&Agent::par(t("a"), t("b")), &goal, &env, &fenv, 5).unwrap();
        assert_eq!(res.witnesses.len(), 2);
        assert_eq!(res.witnesses[0].trace()[0].term, tok("a"));
        assert_eq!(res.witnesses[1].trace()[0].term, tok("b"));
    }

    #[test]
    fn reachable_store_examples() {
        let env = ProcEnv::new();
        // (tell(a) + tell(b)) || tell(c): case split on the choice
        let a = Agent::par(Agent::choice(t("a"), t("b")), t("c"));
        assert_eq!(
            reachable_stores(&a, &Store::new(), &env, 10).unwrap(),
            stores(&[&[Tok("a"), Tok("c")], &[Tok("b"), Tok("c")]])
        );

        let f12 = App("f", &["1", "2"]);
        let g3 = App("g", &["3"]);
        let a = Agent::par(
            Agent::choice(Agent::tell(f12.term()), Agent::tell(g3.term())),
            Agent::choice(t("a"), t("b")),
        );
        assert_eq!(
            reachable_stores(&a, &Store::new(), &env, 10).unwrap(),
            stores(&[
                &[App("f", &["1", "2"]), Tok("a")],
                &[App("f", &["1", "2"]), Tok("b")],
                &[App("g", &["3"]), Tok("a")],
                &[App("g", &["3"]), Tok("b")],
            ])
        );

        let a = Agent::seq(t("a"), Agent::get(tok("a")));
        assert_eq!(
            reachable_stores(&a, &Store::new(), &env, 10).unwrap(),
            stores(&[&[]])
        );
    }

    #[test]
    fn reachable_stores_respects_depth() {
        let env = ProcEnv::new();
        let a = Agent::seq(t("a"), t("b"));
        assert!(reachable_stores(&a, &Store::new(), &env, 1)
            .unwrap()
            .is_empty());
        assert_eq!(
            reachable_stores(&a, &Store::new(), &env, 2).unwrap().len(),
            1
        );
    }
}
