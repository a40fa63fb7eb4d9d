//! The Needham-Schroeder public key protocol with an intruder.
//!
//! Alice and Bob each choose a partner, Mallory relays every message addressed
//! to him and re-encrypts those sent under his own key. The formula `F` forbids
//! a session between Alice and Bob from starting and stops once Bob commits
//! to Alice, so any witness is a man-in-the-middle run.

use std::fmt;

use crate::agent::{Agent, Primitive, ProcEnv};
use crate::error::{Error, Result};
use crate::interpreter::StepLabel;
use crate::logic::{BasicFormula, BslFormula, FormulaEnv};
use crate::model::Model;
use crate::term::{app, tok, var, SiTerm};

pub fn na() -> SiTerm {
    tok("na")
}
pub fn nb() -> SiTerm {
    tok("nb")
}
pub fn nm() -> SiTerm {
    tok("nm")
}
pub fn pka() -> SiTerm {
    tok("pka")
}
pub fn pkb() -> SiTerm {
    tok("pkb")
}
pub fn pkm() -> SiTerm {
    tok("pkm")
}
pub fn alice() -> SiTerm {
    tok("alice")
}
pub fn bob() -> SiTerm {
    tok("bob")
}
pub fn mallory() -> SiTerm {
    tok("mallory")
}

pub fn encrypt_i(nonce: SiTerm, agent: SiTerm, key: SiTerm) -> SiTerm {
    app("encrypt_i", vec![nonce, agent, key])
}

pub fn encrypt_ii(nonce: SiTerm, other: SiTerm, key: SiTerm) -> SiTerm {
    app("encrypt_ii", vec![nonce, other, key])
}

pub fn encrypt_iii(nonce: SiTerm, key: SiTerm) -> SiTerm {
    app("encrypt_iii", vec![nonce, key])
}

pub fn message(sender: SiTerm, receiver: SiTerm, body: SiTerm) -> SiTerm {
    app("message", vec![sender, receiver, body])
}

pub fn a_running(who: SiTerm) -> SiTerm {
    app("a_running", vec![who])
}
pub fn b_running(who: SiTerm) -> SiTerm {
    app("b_running", vec![who])
}
pub fn a_commit(who: SiTerm) -> SiTerm {
    app("a_commit", vec![who])
}
pub fn b_commit(who: SiTerm) -> SiTerm {
    app("b_commit", vec![who])
}

/// The public key of a principal.
pub fn public_key(principal: &SiTerm) -> Result<SiTerm> {
    match principal {
        SiTerm::Token(name) => match &**name {
            "alice" => Ok(pka()),
            "bob" => Ok(pkb()),
            "mallory" => Ok(pkm()),
            _ => Err(Error::UnknownPrincipal(principal.render())),
        },
        _ => Err(Error::UnknownPrincipal(principal.render())),
    }
}

fn key_of(principal: &SiTerm) -> SiTerm {
    public_key(principal).expect("principal domains are fixed")
}

fn nonces() -> Vec<SiTerm> {
    vec![na(), nb(), nm()]
}

fn keys() -> Vec<SiTerm> {
    vec![pka(), pkb(), pkm()]
}

/// Mallory can only read messages under his own key and re-encrypts them
/// for the intended recipient.
fn forwarded_key(key: &SiTerm, recipient_key: SiTerm) -> SiTerm {
    if *key == pkm() {
        recipient_key
    } else {
        key.clone()
    }
}

fn alice_agent(partners: &[SiTerm]) -> Agent {
    Agent::sum_cases(partners, |y| {
        let pk = key_of(y);
        Agent::seq_all([
            Agent::tell(a_running(y.clone())),
            Agent::tell(message(
                alice(),
                y.clone(),
                encrypt_i(na(), alice(), pk.clone()),
            )),
            Agent::sum(
                "WNonce",
                nonces(),
                Agent::seq_all([
                    Agent::get(message(
                        y.clone(),
                        alice(),
                        encrypt_ii(na(), var("WNonce"), pka()),
                    )),
                    Agent::tell(message(
                        alice(),
                        y.clone(),
                        encrypt_iii(var("WNonce"), pk.clone()),
                    )),
                    Agent::tell(a_commit(y.clone())),
                ]),
            ),
        ])
    })
}

fn bob_agent(partners: &[SiTerm], claimed: &[SiTerm]) -> Agent {
    let y = || var("Y");
    Agent::sum(
        "Y",
        partners.to_vec(),
        Agent::seq(
            Agent::tell(b_running(y())),
            Agent::sum_cases(claimed, |vag| {
                Agent::seq_all([
                    Agent::get(message(y(), bob(), encrypt_i(na(), vag.clone(), pkb()))),
                    Agent::tell(message(bob(), y(), encrypt_ii(na(), nb(), key_of(vag)))),
                    Agent::get(message(y(), bob(), encrypt_iii(nb(), pkb()))),
                    Agent::tell(b_commit(vag.clone())),
                ])
            }),
        ),
    )
}

fn mallory_agent() -> Agent {
    let again = || Agent::call("Mallory", vec![]);
    let first = Agent::sum(
        "VNonce",
        nonces(),
        Agent::sum(
            "VAg",
            vec![alice(), bob()],
            Agent::sum_cases(&keys(), |vpk| {
                Agent::seq_all([
                    Agent::get(message(
                        alice(),
                        mallory(),
                        encrypt_i(var("VNonce"), var("VAg"), vpk.clone()),
                    )),
                    Agent::tell(message(
                        mallory(),
                        bob(),
                        encrypt_i(var("VNonce"), var("VAg"), forwarded_key(vpk, pkb())),
                    )),
                    again(),
                ])
            }),
        ),
    );
    let second = Agent::sum(
        "VN1",
        nonces(),
        Agent::sum(
            "VN2",
            nonces(),
            Agent::sum_cases(&keys(), |vpk| {
                Agent::seq_all([
                    Agent::get(message(
                        bob(),
                        mallory(),
                        encrypt_ii(var("VN1"), var("VN2"), vpk.clone()),
                    )),
                    Agent::tell(message(
                        mallory(),
                        alice(),
                        encrypt_ii(var("VN1"), var("VN2"), forwarded_key(vpk, pka())),
                    )),
                    again(),
                ])
            }),
        ),
    );
    let third = Agent::sum(
        "VN",
        nonces(),
        Agent::sum_cases(&keys(), |vpk| {
            Agent::seq_all([
                Agent::get(message(
                    alice(),
                    mallory(),
                    encrypt_iii(var("VN"), vpk.clone()),
                )),
                Agent::tell(message(
                    mallory(),
                    bob(),
                    encrypt_iii(var("VN"), forwarded_key(vpk, pkb())),
                )),
                again(),
            ])
        }),
    );
    Agent::choice_all([first, second, third])
}

fn protocol_formulas() -> FormulaEnv {
    let mut formulas = FormulaEnv::new();
    let inproper_init = BasicFormula::not(BasicFormula::or(
        BasicFormula::bf(a_running(bob())),
        BasicFormula::bf(b_running(alice())),
    ));
    formulas
        .define("inproper_init", BslFormula::basic(inproper_init))
        .expect("fresh name");
    formulas
        .define(
            "end_session",
            BslFormula::basic(BasicFormula::bf(b_commit(alice()))),
        )
        .expect("fresh name");
    formulas
        .define(
            "F",
            BslFormula::choice(
                BslFormula::seq(BslFormula::var("inproper_init"), BslFormula::var("F")),
                BslFormula::var("end_session"),
            ),
        )
        .expect("fresh name");
    formulas
}

/// Alice, Bob and Mallory in parallel, constrained by `F`.
pub fn build_ns_model() -> Model {
    let mut procs = ProcEnv::new();
    procs
        .define("Alice", &[], alice_agent(&[bob(), mallory()]))
        .expect("Alice is well formed");
    procs
        .define(
            "Bob",
            &[],
            bob_agent(&[alice(), mallory()], &[alice(), mallory()]),
        )
        .expect("Bob is well formed");
    procs
        .define("Mallory", &[], mallory_agent())
        .expect("Mallory is well formed");
    let protocol = Agent::par_all(["Alice", "Bob", "Mallory"].map(|n| Agent::call(n, vec![])));
    procs
        .define("Protocol", &[], protocol)
        .expect("Protocol is well formed");
    Model::new(procs, protocol_formulas(), Some("Protocol"), Some("F")).expect("valid model")
}

/// Alice and Bob talking to each other with no intruder. The goal `Done`
/// holds once Bob commits to Alice.
pub fn build_honest_model() -> Model {
    let mut procs = ProcEnv::new();
    procs
        .define("Alice", &[], alice_agent(&[bob()]))
        .expect("Alice is well formed");
    procs
        .define("Bob", &[], bob_agent(&[alice()], &[alice()]))
        .expect("Bob is well formed");
    let protocol = Agent::par(Agent::call("Alice", vec![]), Agent::call("Bob", vec![]));
    procs
        .define("Protocol", &[], protocol)
        .expect("Protocol is well formed");

    let mut formulas = FormulaEnv::new();
    let done = BasicFormula::bf(b_commit(alice()));
    formulas
        .define(
            "Done",
            BslFormula::choice(
                BslFormula::seq(
                    BslFormula::basic(BasicFormula::not(done.clone())),
                    BslFormula::var("Done"),
                ),
                BslFormula::basic(done),
            ),
        )
        .expect("fresh name");
    Model::new(procs, formulas, Some("Protocol"), Some("Done")).expect("valid model")
}

/// One message travelling from `sender` to `receiver`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Exchange {
    pub sender: SiTerm,
    pub receiver: SiTerm,
    pub message: SiTerm,
}

impl fmt::Display for Exchange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {} : {}", self.sender, self.receiver, self.message)
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct AttackSummary {
    pub exchanges: Vec<Exchange>,
}

impl fmt::Display for AttackSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.exchanges.iter().enumerate() {
            writeln!(f, "{}. {e}", i + 1)?;
        }
        Ok(())
    }
}

fn exchange(sender: SiTerm, receiver: SiTerm, message: SiTerm) -> Exchange {
    Exchange {
        sender,
        receiver,
        message,
    }
}

/// Lowe's attack as a sequence of exchanges.
pub fn expected_attack_summary() -> AttackSummary {
    AttackSummary {
        exchanges: vec![
            exchange(alice(), mallory(), encrypt_i(na(), alice(), pkm())),
            exchange(mallory(), bob(), encrypt_i(na(), alice(), pkb())),
            exchange(bob(), mallory(), encrypt_ii(na(), nb(), pka())),
            exchange(mallory(), alice(), encrypt_ii(na(), nb(), pka())),
            exchange(alice(), mallory(), encrypt_iii(nb(), pkm())),
            exchange(mallory(), bob(), encrypt_iii(nb(), pkb())),
        ],
    }
}

/// Pairs each told `message(S,R,M)` with the first later get of the same
/// term and lists the matched pairs in telling order. Unmatched tells are
/// dropped.
pub fn exchange_projection(trace: &[StepLabel]) -> AttackSummary {
    let mut claimed = vec![false; trace.len()];
    let mut exchanges = Vec::new();
    for (i, step) in trace.iter().enumerate() {
        if step.kind != Primitive::Tell {
            continue;
        }
        let SiTerm::Compound { functor, args } = &step.term else {
            continue;
        };
        if &**functor != "message" || args.len() != 3 {
            continue;
        }
        let matched = (i + 1..trace.len()).find(|&j| {
            !claimed[j] && trace[j].kind == Primitive::Get && trace[j].term == step.term
        });
        if let Some(j) = matched {
            claimed[j] = true;
            exchanges.push(exchange(args[0].clone(), args[1].clone(), args[2].clone()));
        }
    }
    AttackSummary { exchanges }
}
