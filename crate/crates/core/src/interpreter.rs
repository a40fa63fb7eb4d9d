//! Small-step execution of agents, optionally constrained by a bsL formula.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::agent::{par_normalized, seq_normalized, Agent, Primitive, ProcEnv};
use crate::error::{Error, Result};
use crate::logic::{derive, BslFormula, FormulaEnv};
use crate::store::Store;
use crate::term::SiTerm;

/// One executed primitive. Renders as `kind(term)`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct StepLabel {
    pub kind: Primitive,
    pub term: SiTerm,
}

impl fmt::Display for StepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.kind, self.term)
    }
}

/// An unconstrained one-step successor.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Transition {
    pub label: StepLabel,
    pub agent: Agent,
    pub store: Store,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Configuration {
    pub agent: Agent,
    pub store: Store,
    /// Residual formula; `ε` when running unconstrained.
    pub formula: BslFormula,
    pub trace: Vec<StepLabel>,
}

impl Configuration {
    /// Initial configuration on the empty store.
    pub fn new(agent: Agent, formula: BslFormula) -> Self {
        Self::with_store(agent, Store::new(), formula)
    }

    pub fn with_store(agent: Agent, store: Store, formula: BslFormula) -> Self {
        Configuration {
            agent: agent.normalize(),
            store,
            formula,
            trace: Vec::new(),
        }
    }

    pub fn unconstrained(agent: Agent, store: Store) -> Self {
        Self::with_store(agent, store, BslFormula::Epsilon)
    }

    fn advance(&self, label: StepLabel, agent: Agent, store: Store, formula: BslFormula) -> Self {
        let mut trace = self.trace.clone();
        trace.push(label);
        Configuration {
            agent,
            store,
            formula,
            trace,
        }
    }
}

/// A step together with the store and residual it produced.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TraceStep {
    pub label: StepLabel,
    pub store: Store,
    pub formula: BslFormula,
}

/// Machine-readable step record, one per line in structured output.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct StepRecord {
    pub index: usize,
    pub kind: String,
    pub term: String,
    pub store_after: Vec<String>,
    pub formula_residual: String,
}

impl TraceStep {
    pub fn record(&self, index: usize) -> StepRecord {
        StepRecord {
            index,
            kind: self.label.kind.keyword().to_string(),
            term: self.label.term.render(),
            store_after: self.store.dump_lines(),
            formula_residual: self.formula.to_string(),
        }
    }
}

/// Trace line `(n)  kind(term)`, 1-based.
pub fn trace_line(index: usize, label: &StepLabel) -> String {
    format!("({index})  {label}")
}

pub fn format_trace<'a>(labels: impl IntoIterator<Item = &'a StepLabel>) -> String {
    let mut out = String::new();
    for (i, label) in labels.into_iter().enumerate() {
        out.push_str(&trace_line(i + 1, label));
        out.push('\n');
    }
    out
}

/// Executes a primitive on a copy of the store, `None` when not enabled.
fn fire(kind: Primitive, t: &SiTerm, store: &Store) -> Result<Option<Store>> {
    Ok(match kind {
        Primitive::Tell => Some(store.told(t)?),
        Primitive::Ask => store.ask(t)?.then(|| store.clone()),
        Primitive::Get => store.taken(t)?,
        Primitive::Nask => store.nask(t)?.then(|| store.clone()),
    })
}

/// Procedure names unfolded since the last primitive; a repeat means the
/// environment was never checked for guardedness.
struct Unfolding(Vec<Arc<str>>);

impl Unfolding {
    fn enter(&mut self, name: &Arc<str>) -> Result<()> {
        if self.0.contains(name) {
            return Err(Error::UnguardedRecursion(name.to_string()));
        }
        self.0.push(name.clone());
        Ok(())
    }
}

/// Every one-step successor of `agent` on `store`, left to right.
pub fn agent_transitions(agent: &Agent, store: &Store, env: &ProcEnv) -> Result<Vec<Transition>> {
    let mut out = Vec::new();
    collect_transitions(agent, store, env, &mut Unfolding(Vec::new()), &mut out)?;
    Ok(out)
}

fn collect_transitions(
    agent: &Agent,
    store: &Store,
    env: &ProcEnv,
    unfolding: &mut Unfolding,
    out: &mut Vec<Transition>,
) -> Result<()> {
    match agent {
        Agent::Empty => {}
        Agent::Prim(kind, t) => {
            if let Some(next) = fire(*kind, t, store)? {
                out.push(Transition {
                    label: StepLabel {
                        kind: *kind,
                        term: t.clone(),
                    },
                    agent: Agent::Empty,
                    store: next,
                });
            }
        }
        Agent::Seq(a, b) => {
            let start = out.len();
            collect_transitions(a, store, env, unfolding, out)?;
            for tr in &mut out[start..] {
                tr.agent = seq_normalized(
                    std::mem::replace(&mut tr.agent, Agent::Empty),
                    (**b).clone(),
                );
            }
        }
        Agent::Par(a, b) => {
            let start = out.len();
            collect_transitions(a, store, env, unfolding, out)?;
            for tr in &mut out[start..] {
                tr.agent = par_normalized(
                    std::mem::replace(&mut tr.agent, Agent::Empty),
                    (**b).clone(),
                );
            }
            let mid = out.len();
            collect_transitions(b, store, env, unfolding, out)?;
            for tr in &mut out[mid..] {
                tr.agent = par_normalized(
                    (**a).clone(),
                    std::mem::replace(&mut tr.agent, Agent::Empty),
                );
            }
        }
        Agent::Choice(a, b) => {
            collect_transitions(a, store, env, unfolding, out)?;
            collect_transitions(b, store, env, unfolding, out)?;
        }
        Agent::Sum { .. } => {
            let expanded = agent.expand_gsum()?;
            collect_transitions(&expanded, store, env, unfolding, out)?;
        }
        Agent::Call { name, args } => {
            let body = env.resolve_call(name, args)?;
            let depth = unfolding.0.len();
            unfolding.enter(name)?;
            let res = collect_transitions(&body, store, env, unfolding, out);
            unfolding.0.truncate(depth);
            res?;
        }
    }
    Ok(())
}

/// One step by the randomized recursive strategy: at each parallel or choice
/// node a random bit picks the side tried first, the other side is tried on
/// failure. Returns `(false, c)` unchanged when no step is possible.
pub fn run_one<R: Rng + ?Sized>(
    config: &Configuration,
    env: &ProcEnv,
    rng: &mut R,
) -> Result<(bool, Configuration)> {
    let mut store = config.store.clone();
    match try_step(
        &config.agent,
        &mut store,
        env,
        rng,
        &mut Unfolding(Vec::new()),
    )? {
        Some((label, agent)) => Ok((
            true,
            config.advance(label, agent, store, config.formula.clone()),
        )),
        None => Ok((false, config.clone())),
    }
}

/// Mutates `store` only when a step is taken.
fn try_step<R: Rng + ?Sized>(
    agent: &Agent,
    store: &mut Store,
    env: &ProcEnv,
    rng: &mut R,
    unfolding: &mut Unfolding,
) -> Result<Option<(StepLabel, Agent)>> {
    Ok(match agent {
        Agent::Empty => None,
        Agent::Prim(kind, t) => {
            let enabled = match kind {
                Primitive::Tell => {
                    store.tell(t)?;
                    true
                }
                Primitive::Ask => store.ask(t)?,
                Primitive::Get => store.get(t)?,
                Primitive::Nask => store.nask(t)?,
            };
            enabled.then(|| {
                (
                    StepLabel {
                        kind: *kind,
                        term: t.clone(),
                    },
                    Agent::Empty,
                )
            })
        }
        Agent::Seq(a, b) => try_step(a, store, env, rng, unfolding)?
            .map(|(label, next)| (label, seq_normalized(next, (**b).clone()))),
        Agent::Par(a, b) => {
            if rng.gen::<bool>() {
                match try_step(a, store, env, rng, unfolding)? {
                    Some((label, next)) => Some((label, par_normalized(next, (**b).clone()))),
                    None => try_step(b, store, env, rng, unfolding)?
                        .map(|(label, next)| (label, par_normalized((**a).clone(), next))),
                }
            } else {
                match try_step(b, store, env, rng, unfolding)? {
                    Some((label, next)) => Some((label, par_normalized((**a).clone(), next))),
                    None => try_step(a, store, env, rng, unfolding)?
                        .map(|(label, next)| (label, par_normalized(next, (**b).clone()))),
                }
            }
        }
        Agent::Choice(a, b) => {
            let (first, second) = if rng.gen::<bool>() { (a, b) } else { (b, a) };
            match try_step(first, store, env, rng, unfolding)? {
                Some(step) => Some(step),
                None => try_step(second, store, env, rng, unfolding)?,
            }
        }
        Agent::Sum { .. } => {
            let expanded = agent.expand_gsum()?;
            try_step(&expanded, store, env, rng, unfolding)?
        }
        Agent::Call { name, args } => {
            let body = env.resolve_call(name, args)?;
            let depth = unfolding.0.len();
            unfolding.enter(name)?;
            let res = try_step(&body, store, env, rng, unfolding);
            unfolding.0.truncate(depth);
            res?
        }
    })
}

/// A constrained successor: agent step plus one residual derived on the new
/// store.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ConstrainedStep {
    pub label: StepLabel,
    pub agent: Agent,
    pub store: Store,
    pub formula: BslFormula,
}

/// Every `<A', f', σ'>` with `<A, σ> → <A', σ'>` and `σ' ⊢ f → f'`, in
/// transition order and then residual order.
pub fn constrained_successors(
    agent: &Agent,
    store: &Store,
    formula: &BslFormula,
    env: &ProcEnv,
    fenv: &FormulaEnv,
) -> Result<Vec<ConstrainedStep>> {
    let mut out = Vec::new();
    for tr in agent_transitions(agent, store, env)? {
        for residual in derive(&tr.store, formula, fenv)? {
            out.push(ConstrainedStep {
                label: tr.label.clone(),
                agent: tr.agent.clone(),
                store: tr.store.clone(),
                formula: residual,
            });
        }
    }
    Ok(out)
}

pub fn constrained_step(
    config: &Configuration,
    env: &ProcEnv,
    fenv: &FormulaEnv,
) -> Result<Vec<Configuration>> {
    Ok(
        constrained_successors(&config.agent, &config.store, &config.formula, env, fenv)?
            .into_iter()
            .map(|s| config.advance(s.label, s.agent, s.store, s.formula))
            .collect(),
    )
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    FormulaSatisfied,
    AgentTerminated,
    Stuck,
    StepLimit,
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunStatus::FormulaSatisfied => "formula satisfied",
            RunStatus::AgentTerminated => "agent terminated",
            RunStatus::Stuck => "stuck",
            RunStatus::StepLimit => "step limit",
        })
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub config: Configuration,
    /// Store and residual after each step, aligned with `config.trace`.
    pub steps: Vec<TraceStep>,
}

/// Randomized constrained execution from the empty store. Each step picks one
/// constrained successor uniformly; a committed step is never undone.
pub fn execute<R: Rng + ?Sized>(
    agent: &Agent,
    formula: &BslFormula,
    env: &ProcEnv,
    fenv: &FormulaEnv,
    rng: &mut R,
    max_steps: usize,
) -> Result<RunOutcome> {
    execute_from(
        Configuration::new(agent.clone(), formula.clone()),
        env,
        fenv,
        rng,
        max_steps,
    )
}

pub fn execute_from<R: Rng + ?Sized>(
    mut config: Configuration,
    env: &ProcEnv,
    fenv: &FormulaEnv,
    rng: &mut R,
    max_steps: usize,
) -> Result<RunOutcome> {
    let mut steps = Vec::new();
    let status = loop {
        if config.formula.is_satisfied() {
            break RunStatus::FormulaSatisfied;
        }
        if config.agent.is_empty() {
            break RunStatus::AgentTerminated;
        }
        if steps.len() >= max_steps {
            break RunStatus::StepLimit;
        }
        let mut successors =
            constrained_successors(&config.agent, &config.store, &config.formula, env, fenv)?;
        if successors.is_empty() {
            break RunStatus::Stuck;
        }
        let pick = successors.swap_remove(rng.gen_range(0..successors.len()));
        steps.push(TraceStep {
            label: pick.label.clone(),
            store: pick.store.clone(),
            formula: pick.formula.clone(),
        });
        config.trace.push(pick.label);
        config.agent = pick.agent;
        config.store = pick.store;
        config.formula = pick.formula;
    };
    Ok(RunOutcome {
        status,
        config,
        steps,
    })
}
