//! Generators and reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use bach_core::agent::{Agent, Primitive, ProcEnv};
use bach_core::interpreter::{agent_transitions, StepLabel};
use bach_core::logic::{derive, BasicFormula, BslFormula, FormulaEnv};
use bach_core::model::Model;
use bach_core::store::Store;
use bach_core::term::SiTerm;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

pub const TOKENS: [&str; 3] = ["a", "b", "c"];

/// A runner with a fixed seed so every run checks the same cases.
pub fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

pub fn token() -> impl Strategy<Value = SiTerm> {
    prop::sample::select(TOKENS.to_vec()).prop_map(|t| SiTerm::token(t).unwrap())
}

/// Ground terms: tokens, `f(x)` and `g(x,y)`.
pub fn ground_term() -> impl Strategy<Value = SiTerm> {
    token().prop_recursive(2, 6, 2, |inner| {
        prop_oneof![
            inner
                .clone()
                .prop_map(|t| SiTerm::compound("f", vec![t]).unwrap()),
            (inner.clone(), inner).prop_map(|(x, y)| SiTerm::compound("g", vec![x, y]).unwrap()),
        ]
    })
}

/// Terms over the tokens and the variables in `scope`.
pub fn scoped_term(scope: Vec<String>) -> BoxedStrategy<SiTerm> {
    let leaf = if scope.is_empty() {
        token().boxed()
    } else {
        let vars = prop::sample::select(scope).prop_map(|v| SiTerm::var(&v).unwrap());
        prop_oneof![2 => token(), 1 => vars].boxed()
    };
    leaf.prop_recursive(2, 6, 2, |inner| {
        prop_oneof![
            inner
                .clone()
                .prop_map(|t| SiTerm::compound("f", vec![t]).unwrap()),
            (inner.clone(), inner).prop_map(|(x, y)| SiTerm::compound("g", vec![x, y]).unwrap()),
        ]
    })
    .boxed()
}

pub fn primitive() -> impl Strategy<Value = Primitive> {
    prop::sample::select(vec![
        Primitive::Tell,
        Primitive::Ask,
        Primitive::Get,
        Primitive::Nask,
    ])
}

/// Tells are weighted up so that guards get enabled now and then.
fn weighted_primitive() -> impl Strategy<Value = Primitive> {
    prop_oneof![
        3 => Just(Primitive::Tell),
        1 => Just(Primitive::Ask),
        2 => Just(Primitive::Get),
        1 => Just(Primitive::Nask),
    ]
}

/// Procedures callable from generated agents.
#[derive(Clone, Debug)]
pub struct Callable {
    pub name: String,
    pub arity: usize,
}

/// Agent shapes allowed at a definition site.
#[derive(Clone, Debug, Default)]
pub struct AgentContext {
    pub vars: Vec<String>,
    /// Names that may be called anywhere.
    pub calls: Vec<Callable>,
    /// Name that may only be called after a primitive (guarded recursion).
    pub guarded_self: Option<Callable>,
    /// Binder used by generated sums; must not clash with `vars`.
    pub binder: Option<String>,
}

fn call_strategy(c: &Callable, vars: &[String]) -> BoxedStrategy<Agent> {
    let name = c.name.clone();
    prop::collection::vec(scoped_term(vars.to_vec()), c.arity)
        .prop_map(move |args| Agent::call(&name, args))
        .boxed()
}

fn prim_strategy(vars: &[String]) -> BoxedStrategy<Agent> {
    (weighted_primitive(), scoped_term(vars.to_vec()))
        .prop_map(|(k, t)| Agent::Prim(k, t))
        .boxed()
}

/// Agents of depth at most 4 in `ctx`.
pub fn agent_in(ctx: AgentContext) -> BoxedStrategy<Agent> {
    let mut leaves: Vec<(u32, BoxedStrategy<Agent>)> = vec![(6, prim_strategy(&ctx.vars))];
    for c in &ctx.calls {
        leaves.push((1, call_strategy(c, &ctx.vars)));
    }
    if let Some(c) = &ctx.guarded_self {
        let rec = (prim_strategy(&ctx.vars), call_strategy(c, &ctx.vars))
            .prop_map(|(p, call)| Agent::seq(p, call))
            .boxed();
        leaves.push((1, rec));
    }
    if let Some(binder) = &ctx.binder {
        let mut inner = ctx.vars.clone();
        inner.push(binder.clone());
        let binder = binder.clone();
        let body = prop::collection::vec(prim_strategy(&inner), 1..=2).prop_map(Agent::seq_all);
        let sum = (prop::collection::btree_set(ground_term(), 1..=3), body)
            .prop_map(move |(domain, body)| Agent::sum(&binder, domain.into_iter().collect(), body))
            .boxed();
        leaves.push((1, sum));
    }
    let leaf = prop::strategy::Union::new_weighted(leaves);
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Agent::seq(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Agent::par(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Agent::choice(a, b)),
        ]
    })
    .boxed()
}

/// A fixed environment for agents that call procedures.
pub fn small_env() -> ProcEnv {
    let mut env = ProcEnv::new();
    let x = SiTerm::var("X").unwrap();
    let a = SiTerm::token("a").unwrap();
    env.define(
        "P",
        &["X"],
        Agent::seq(
            Agent::tell(SiTerm::compound("f", vec![x.clone()]).unwrap()),
            Agent::ask(x),
        ),
    )
    .unwrap();
    env.define(
        "Q",
        &[],
        Agent::seq(Agent::get(a), Agent::call("Q", vec![])),
    )
    .unwrap();
    env
}

/// Closed agents over [`small_env`], with sums.
pub fn agent() -> BoxedStrategy<Agent> {
    agent_in(AgentContext {
        vars: vec![],
        calls: vec![
            Callable {
                name: "P".into(),
                arity: 1,
            },
            Callable {
                name: "Q".into(),
                arity: 0,
            },
        ],
        guarded_self: None,
        binder: Some("Y".into()),
    })
}

/// Closed agents without calls; every run terminates.
pub fn finite_agent() -> BoxedStrategy<Agent> {
    agent_in(AgentContext {
        binder: Some("Y".into()),
        ..AgentContext::default()
    })
}

pub fn store() -> impl Strategy<Value = Store> {
    prop::collection::vec(ground_term(), 0..5).prop_map(|ts| Store::from_terms(&ts).unwrap())
}

pub fn basic_formula() -> BoxedStrategy<BasicFormula> {
    ground_term()
        .prop_map(BasicFormula::bf)
        .prop_recursive(3, 12, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(BasicFormula::not),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| BasicFormula::and(a, b)),
                (inner.clone(), inner).prop_map(|(a, b)| BasicFormula::or(a, b)),
            ]
        })
        .boxed()
}

/// `G = (bf(a) ; G) + bf(b)` and `H = !bf(c) ; G`.
pub fn formula_env() -> FormulaEnv {
    let bf = |t: &str| BasicFormula::bf(SiTerm::token(t).unwrap());
    let mut env = FormulaEnv::new();
    env.define(
        "G",
        BslFormula::choice(
            BslFormula::seq(BslFormula::basic(bf("a")), BslFormula::var("G")),
            BslFormula::basic(bf("b")),
        ),
    )
    .unwrap();
    env.define(
        "H",
        BslFormula::seq(
            BslFormula::basic(BasicFormula::not(bf("c"))),
            BslFormula::var("G"),
        ),
    )
    .unwrap();
    env
}

/// Formulae over [`formula_env`].
pub fn formula() -> BoxedStrategy<BslFormula> {
    let leaf = prop_oneof![
        3 => basic_formula().prop_map(BslFormula::basic),
        1 => prop::sample::select(vec!["G", "H"]).prop_map(BslFormula::var),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| BslFormula::choice(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| BslFormula::seq(a, b)),
        ]
    })
    .boxed()
}

/// Formula bodies for a generated model, where `names` are defined earlier
/// and `own` may only appear after a `;`.
fn formula_in(names: Vec<String>, own: String) -> BoxedStrategy<BslFormula> {
    let basic = basic_formula().prop_map(BslFormula::basic).boxed();
    let leaf = if names.is_empty() {
        basic.clone()
    } else {
        prop_oneof![3 => basic.clone(), 1 => prop::sample::select(names).prop_map(|n| BslFormula::var(&n))].boxed()
    };
    let guarded = (basic, Just(own)).prop_map(|(b, n)| BslFormula::seq(b, BslFormula::var(&n)));
    prop_oneof![4 => leaf, 1 => guarded]
        .prop_recursive(3, 12, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| BslFormula::choice(a, b)),
                (inner.clone(), inner).prop_map(|(a, b)| BslFormula::seq(a, b)),
            ]
        })
        .boxed()
}

/// Well-formed models: procedures with parameters, sums, calls to earlier
/// procedures and guarded self-calls, formulae and an optional run directive.
pub fn model() -> BoxedStrategy<Model> {
    let arities = prop::collection::vec(0..=2usize, 1..=4);
    let formula_count = 0..=3usize;
    (arities, formula_count)
        .prop_flat_map(|(arities, nforms)| {
            let procs: Vec<BoxedStrategy<Agent>> = arities
                .iter()
                .enumerate()
                .map(|(i, &arity)| {
                    let calls = (0..i)
                        .map(|j| Callable {
                            name: format!("P{j}"),
                            arity: arities[j],
                        })
                        .collect();
                    agent_in(AgentContext {
                        vars: (0..arity).map(|k| format!("X{k}")).collect(),
                        calls,
                        guarded_self: Some(Callable {
                            name: format!("P{i}"),
                            arity,
                        }),
                        binder: Some("Y".into()),
                    })
                })
                .collect();
            let forms: Vec<BoxedStrategy<BslFormula>> = (0..nforms)
                .map(|i| formula_in((0..i).map(|j| format!("F{j}")).collect(), format!("F{i}")))
                .collect();
            let run = prop::option::of((0..arities.len(), prop::option::of(0..nforms.max(1))));
            (Just(arities), procs, forms, run)
        })
        .prop_map(|(arities, procs, forms, run)| {
            let mut env = ProcEnv::new();
            for (i, body) in procs.into_iter().enumerate() {
                let params: Vec<String> = (0..arities[i]).map(|k| format!("X{k}")).collect();
                let params: Vec<&str> = params.iter().map(String::as_str).collect();
                env.define(&format!("P{i}"), &params, body).unwrap();
            }
            let mut fenv = FormulaEnv::new();
            let nforms = forms.len();
            for (i, f) in forms.into_iter().enumerate() {
                fenv.define(&format!("F{i}"), f).unwrap();
            }
            // only parameterless procedures can be entry points
            let entry = run.and_then(|(p, g)| (arities[p] == 0).then(|| (format!("P{p}"), g)));
            let (entry, goal) = match &entry {
                Some((p, g)) => (
                    Some(p.as_str()),
                    g.filter(|&g| g < nforms).map(|g| format!("F{g}")),
                ),
                None => (None, None),
            };
            Model::new(env, fenv, entry, goal.as_deref()).unwrap()
        })
        .boxed()
}

/// Constrained successors composed from the unconstrained transitions and
/// `derive` on each new store.
pub fn constrained_oracle(
    agent: &Agent,
    store: &Store,
    formula: &BslFormula,
    procs: &ProcEnv,
    formulas: &FormulaEnv,
) -> BTreeSet<(String, Agent, Store, BslFormula)> {
    let mut out = BTreeSet::new();
    for tr in agent_transitions(agent, store, procs).unwrap() {
        for residual in derive(&tr.store, formula, formulas).unwrap() {
            out.insert((
                tr.label.to_string(),
                tr.agent.clone(),
                tr.store.clone(),
                residual,
            ));
        }
    }
    out
}

pub fn labels_of(trace: &[StepLabel]) -> Vec<String> {
    trace.iter().map(ToString::to_string).collect()
}
