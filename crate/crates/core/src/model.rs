use std::sync::Arc;

use crate::agent::{Agent, ProcEnv};
use crate::error::{Error, Result};
use crate::logic::{BslFormula, FormulaEnv};

/// Procedure name used as entry point when no `run` directive is given.
pub const DEFAULT_ENTRY: &str = "Protocol";

/// A validated Bach program: procedures, named formulae and an optional run
/// directive.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Model {
    procs: ProcEnv,
    formulas: FormulaEnv,
    entry: Option<Arc<str>>,
    goal: Option<Arc<str>>,
}

impl Model {
    /// Checks call resolution, arities, guardedness of procedures and
    /// formulae, and the names used by the run directive.
    pub fn new(
        procs: ProcEnv,
        formulas: FormulaEnv,
        entry: Option<&str>,
        goal: Option<&str>,
    ) -> Result<Model> {
        let model = Model {
            procs,
            formulas,
            entry: entry.map(Arc::from),
            goal: goal.map(Arc::from),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        self.procs.validate()?;
        self.formulas.validate()?;
        if let Some(entry) = &self.entry {
            self.procs.check_calls([&Agent::call(entry, vec![])])?;
        }
        if let Some(goal) = &self.goal {
            if !self.formulas.contains(goal) {
                return Err(Error::UnknownFormulaVariable(goal.to_string()));
            }
        }
        Ok(())
    }

    pub fn procs(&self) -> &ProcEnv {
        &self.procs
    }

    pub fn formulas(&self) -> &FormulaEnv {
        &self.formulas
    }

    /// Entry procedure named by the `run` directive, if any.
    pub fn entry(&self) -> Option<&str> {
        self.entry.as_deref()
    }

    /// Goal formula named by `run ... with NAME`, if any.
    pub fn goal(&self) -> Option<&str> {
        self.goal.as_deref()
    }

    /// The agent to execute: the `run` directive's procedure, else `Protocol`.
    pub fn entry_agent(&self) -> Result<Agent> {
        let name = match &self.entry {
            Some(name) => name.as_ref(),
            None if self.procs.contains(DEFAULT_ENTRY) => DEFAULT_ENTRY,
            None => return Err(Error::NoEntry),
        };
        let agent = Agent::call(name, vec![]);
        self.procs.check_calls([&agent])?;
        Ok(agent)
    }

    /// The formula variable `name`, or the directive's goal when `None`.
    pub fn goal_formula(&self, name: Option<&str>) -> Result<Option<BslFormula>> {
        match name.or(self.goal.as_deref()) {
            None => Ok(None),
            Some(n) if self.formulas.contains(n) => Ok(Some(BslFormula::var(n))),
            Some(n) => Err(Error::UnknownFormulaVariable(n.to_string())),
        }
    }

    /// Canonical surface syntax; parsing it yields an equal model.
    pub fn pretty(&self) -> String {
        let mut out = String::new();
        for (name, def) in self.procs.iter() {
            out.push_str("proc ");
            out.push_str(name);
            if !def.params.is_empty() {
                let params: Vec<&str> = def.params.iter().map(|p| &**p).collect();
                out.push_str(&format!("({})", params.join(",")));
            }
            out.push_str(" = ");
            out.push_str(&def.body.pretty(0));
            out.push_str(" .\n");
        }
        for (name, f) in self.formulas.iter() {
            out.push_str(&format!("form {name} = {f} .\n"));
        }
        if let Some(entry) = &self.entry {
            match &self.goal {
                Some(goal) => out.push_str(&format!("run {entry} with {goal} .\n")),
                None => out.push_str(&format!("run {entry} .\n")),
            }
        }
        out
    }
}
