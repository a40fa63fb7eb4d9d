//! Surface syntax for Bach programs.
//!
//! ```text
//! program := { decl }
//! decl    := "proc" NAME [ "(" NAME {"," NAME} ")" ] "=" agent "."
//!          | "form" NAME "=" formula "."
//!          | "run" NAME [ "with" NAME ] "."
//! agent   := par {"+" par}
//! par     := seq {"||" seq}
//! seq     := atom {";" atom}
//! atom    := ("tell"|"ask"|"get"|"nask") "(" term ")"
//!          | NAME [ "(" term {"," term} ")" ]
//!          | "sum" UIDENT "in" "[" term {"," term} "]" "{" agent "}"
//!          | "(" agent ")"
//! term    := LIDENT [ "(" term {"," term} ")" ] | UIDENT
//! ```
//!
//! Formulae use `+` (choice) and `;` (sequence) over basic formulae, which
//! combine `bf(term)` with `!`, `&` and `|`. Propositional operators bind
//! tighter than `;`, and `&` tighter than `|`. `#` starts a comment.

use crate::agent::{Agent, Primitive, ProcEnv};
use crate::error::{Error, Result};
use crate::logic::{BasicFormula, BslFormula, FormulaEnv};
use crate::model::Model;
use crate::term::{classify_ident, IdentClass, SiTerm};

#[derive(Clone, PartialEq, Eq, Debug)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Semi,
    ParBar,
    Bar,
    Plus,
    Amp,
    Bang,
    Eq,
    Dot,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::ParBar => "`||`".into(),
            Tok::Bar => "`|`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Spanned>> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphanumeric() || c == '_' {
            let begin = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[begin..i].iter().collect();
            col += i - begin;
            if classify_ident(&word).is_none() {
                return Err(syntax(
                    start_line,
                    start_col,
                    format!("invalid identifier `{word}`"),
                ));
            }
            out.push(Spanned {
                tok: Tok::Ident(word),
                line: start_line,
                column: start_col,
            });
            continue;
        }
        let (tok, width) = match c {
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '[' => (Tok::LBracket, 1),
            ']' => (Tok::RBracket, 1),
            '{' => (Tok::LBrace, 1),
            '}' => (Tok::RBrace, 1),
            ',' => (Tok::Comma, 1),
            ';' => (Tok::Semi, 1),
            '+' => (Tok::Plus, 1),
            '&' => (Tok::Amp, 1),
            '!' => (Tok::Bang, 1),
            '=' => (Tok::Eq, 1),
            '.' => (Tok::Dot, 1),
            '|' if chars.get(i + 1) == Some(&'|') => (Tok::ParBar, 2),
            '|' => (Tok::Bar, 1),
            other => {
                return Err(syntax(line, col, format!("unexpected character `{other}`")));
            }
        };
        out.push(Spanned {
            tok,
            line: start_line,
            column: start_col,
        });
        i += width;
        col += width;
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

const AGENT_KEYWORDS: [&str; 5] = ["tell", "ask", "get", "nask", "sum"];
const DECL_KEYWORDS: [&str; 3] = ["proc", "form", "run"];

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Self> {
        Ok(Parser {
            toks: lex(text)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn advance(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: impl Into<String>) -> Error {
        let t = &self.toks[self.pos];
        syntax(t.line, t.column, message)
    }

    fn unexpected(&self, expected: &str) -> Error {
        self.error_here(format!(
            "expected {expected}, found {}",
            self.peek().describe()
        ))
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<()> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    fn peek_ident(&self) -> Option<&str> {
        match self.peek() {
            Tok::Ident(s) => Some(s),
            _ => None,
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        self.peek_ident() == Some(kw)
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<()> {
        if self.is_keyword(kw) {
            self.advance();
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    /// Any identifier that is not a number.
    fn name(&mut self, what: &str) -> Result<(String, usize, usize)> {
        let t = &self.toks[self.pos];
        match &t.tok {
            Tok::Ident(s) if !s.starts_with(|c: char| c.is_ascii_digit()) => {
                let out = (s.clone(), t.line, t.column);
                self.advance();
                Ok(out)
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn upper_name(&mut self, what: &str) -> Result<String> {
        match self.peek_ident() {
            Some(s) if classify_ident(s) == Some(IdentClass::Upper) => Ok(self.name(what)?.0),
            _ => Err(self.unexpected(what)),
        }
    }

    fn term(&mut self) -> Result<SiTerm> {
        let t = self.toks[self.pos].clone();
        let Tok::Ident(word) = &t.tok else {
            return Err(self.unexpected("a term"));
        };
        self.advance();
        match classify_ident(word) {
            Some(IdentClass::Upper) => SiTerm::var(word),
            _ if self.peek() == &Tok::LParen => {
                if word.starts_with(|c: char| c.is_ascii_digit()) {
                    return Err(syntax(
                        t.line,
                        t.column,
                        format!("`{word}` cannot be a functor"),
                    ));
                }
                self.advance();
                let args = self.term_list(Tok::RParen)?;
                SiTerm::compound(word, args)
            }
            _ => SiTerm::token(word),
        }
    }

    /// `term {"," term}` followed by `close`.
    fn term_list(&mut self, close: Tok) -> Result<Vec<SiTerm>> {
        let mut items = vec![self.term()?];
        while self.eat(&Tok::Comma) {
            items.push(self.term()?);
        }
        self.expect(close)?;
        Ok(items)
    }

    fn agent(&mut self) -> Result<Agent> {
        let mut acc = self.par()?;
        while self.eat(&Tok::Plus) {
            acc = Agent::choice(acc, self.par()?);
        }
        Ok(acc)
    }

    fn par(&mut self) -> Result<Agent> {
        let mut acc = self.seq()?;
        while self.eat(&Tok::ParBar) {
            acc = Agent::par(acc, self.seq()?);
        }
        Ok(acc)
    }

    fn seq(&mut self) -> Result<Agent> {
        let mut acc = self.atom()?;
        while self.eat(&Tok::Semi) {
            acc = Agent::seq(acc, self.atom()?);
        }
        Ok(acc)
    }

    fn atom(&mut self) -> Result<Agent> {
        if self.eat(&Tok::LParen) {
            let inner = self.agent()?;
            self.expect(Tok::RParen)?;
            return Ok(inner);
        }
        let Some(word) = self.peek_ident().map(str::to_string) else {
            return Err(self.unexpected("an agent"));
        };
        if let Some(kind) = Primitive::from_keyword(&word) {
            self.advance();
            self.expect(Tok::LParen)?;
            let t = self.term()?;
            self.expect(Tok::RParen)?;
            return Ok(Agent::Prim(kind, t));
        }
        if word == "sum" {
            self.advance();
            let binder = self.upper_name("a binder variable")?;
            self.expect_keyword("in")?;
            self.expect(Tok::LBracket)?;
            let domain = self.term_list(Tok::RBracket)?;
            self.expect(Tok::LBrace)?;
            let body = self.agent()?;
            self.expect(Tok::RBrace)?;
            return Ok(Agent::sum(&binder, domain, body));
        }
        if DECL_KEYWORDS.contains(&word.as_str()) {
            return Err(self.unexpected("an agent"));
        }
        let (name, _, _) = self.name("a procedure name")?;
        let args = if self.eat(&Tok::LParen) {
            self.term_list(Tok::RParen)?
        } else {
            Vec::new()
        };
        Ok(Agent::call(&name, args))
    }

    fn formula(&mut self) -> Result<BslFormula> {
        let mut acc = self.formula_seq()?;
        while self.eat(&Tok::Plus) {
            acc = BslFormula::choice(acc, self.formula_seq()?);
        }
        Ok(acc)
    }

    fn formula_seq(&mut self) -> Result<BslFormula> {
        let mut acc = self.formula_or()?;
        while self.eat(&Tok::Semi) {
            acc = BslFormula::seq(acc, self.formula_or()?);
        }
        Ok(acc)
    }

    fn as_basic(&self, f: BslFormula, op: &Spanned) -> Result<BasicFormula> {
        match f {
            BslFormula::Basic(b) => Ok(b),
            other => Err(syntax(
                op.line,
                op.column,
                format!(
                    "{} expects basic formulae, found `{other}`",
                    op.tok.describe()
                ),
            )),
        }
    }

    fn formula_or(&mut self) -> Result<BslFormula> {
        let mut acc = self.formula_and()?;
        while self.peek() == &Tok::Bar {
            let op = self.advance();
            let rhs = self.formula_and()?;
            let b = BasicFormula::or(self.as_basic(acc, &op)?, self.as_basic(rhs, &op)?);
            acc = BslFormula::Basic(b);
        }
        Ok(acc)
    }

    fn formula_and(&mut self) -> Result<BslFormula> {
        let mut acc = self.formula_not()?;
        while self.peek() == &Tok::Amp {
            let op = self.advance();
            let rhs = self.formula_not()?;
            let b = BasicFormula::and(self.as_basic(acc, &op)?, self.as_basic(rhs, &op)?);
            acc = BslFormula::Basic(b);
        }
        Ok(acc)
    }

    fn formula_not(&mut self) -> Result<BslFormula> {
        if self.peek() == &Tok::Bang {
            let op = self.advance();
            let inner = self.formula_not()?;
            return Ok(BslFormula::Basic(BasicFormula::not(
                self.as_basic(inner, &op)?,
            )));
        }
        self.formula_atom()
    }

    fn formula_atom(&mut self) -> Result<BslFormula> {
        if self.eat(&Tok::LParen) {
            let inner = self.formula()?;
            self.expect(Tok::RParen)?;
            return Ok(inner);
        }
        if self.is_keyword("bf") {
            self.advance();
            self.expect(Tok::LParen)?;
            let t = self.term()?;
            self.expect(Tok::RParen)?;
            return Ok(BslFormula::Basic(BasicFormula::bf(t)));
        }
        match self.peek_ident() {
            Some(w) if !DECL_KEYWORDS.contains(&w) => {
                let (name, _, _) = self.name("a formula name")?;
                Ok(BslFormula::var(&name))
            }
            _ => Err(self.unexpected("a formula")),
        }
    }

    fn program(&mut self) -> Result<Model> {
        let mut procs = ProcEnv::new();
        let mut formulas = FormulaEnv::new();
        let mut run: Option<(String, Option<String>)> = None;
        while self.peek() != &Tok::Eof {
            let kw = self.peek_ident().map(str::to_string);
            match kw.as_deref() {
                Some("proc") => {
                    self.advance();
                    let (name, line, column) = self.name("a procedure name")?;
                    if AGENT_KEYWORDS.contains(&name.as_str())
                        || DECL_KEYWORDS.contains(&name.as_str())
                    {
                        return Err(syntax(line, column, format!("`{name}` is a reserved word")));
                    }
                    let mut params = Vec::new();
                    if self.eat(&Tok::LParen) {
                        params.push(self.upper_name("a parameter")?);
                        while self.eat(&Tok::Comma) {
                            params.push(self.upper_name("a parameter")?);
                        }
                        self.expect(Tok::RParen)?;
                    }
                    self.expect(Tok::Eq)?;
                    let body = self.agent()?;
                    self.expect(Tok::Dot)?;
                    let params: Vec<&str> = params.iter().map(String::as_str).collect();
                    procs.define(&name, &params, body)?;
                }
                Some("form") => {
                    self.advance();
                    let (name, line, column) = self.name("a formula name")?;
                    if name == "bf" || DECL_KEYWORDS.contains(&name.as_str()) {
                        return Err(syntax(line, column, format!("`{name}` is a reserved word")));
                    }
                    self.expect(Tok::Eq)?;
                    let f = self.formula()?;
                    self.expect(Tok::Dot)?;
                    formulas.define(&name, f)?;
                }
                Some("run") => {
                    let start = self.advance();
                    let (entry, _, _) = self.name("a procedure name")?;
                    let goal = if self.is_keyword("with") {
                        self.advance();
                        Some(self.name("a formula name")?.0)
                    } else {
                        None
                    };
                    self.expect(Tok::Dot)?;
                    if run.is_some() {
                        return Err(syntax(
                            start.line,
                            start.column,
                            "duplicate `run` directive",
                        ));
                    }
                    run = Some((entry, goal));
                }
                _ => return Err(self.unexpected("`proc`, `form` or `run`")),
            }
        }
        let (entry, goal) = match &run {
            Some((e, g)) => (Some(e.as_str()), g.as_deref()),
            None => (None, None),
        };
        Model::new(procs, formulas, entry, goal)
    }

    fn finish(&mut self) -> Result<()> {
        if self.peek() == &Tok::Eof {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }
}

/// Parses and validates a whole program.
pub fn parse_program(text: &str) -> Result<Model> {
    Parser::new(text)?.program()
}

pub fn parse_term(text: &str) -> Result<SiTerm> {
    let mut p = Parser::new(text)?;
    let t = p.term()?;
    p.finish()?;
    Ok(t)
}

pub fn parse_agent(text: &str) -> Result<Agent> {
    let mut p = Parser::new(text)?;
    let a = p.agent()?;
    p.finish()?;
    Ok(a)
}

pub fn parse_formula(text: &str) -> Result<BslFormula> {
    let mut p = Parser::new(text)?;
    let f = p.formula()?;
    p.finish()?;
    Ok(f)
}

/// Canonical text of a model.
pub fn pretty(model: &Model) -> String {
    model.pretty()
}
