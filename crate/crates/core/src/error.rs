use thiserror::Error;

/// Errors raised while building, validating, parsing or running Bach models.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid identifier `{0}`")]
    InvalidIdentifier(String),

    #[error("compound term `{0}` needs at least one argument")]
    EmptyArguments(String),

    #[error("term `{0}` is not ground")]
    NonGround(String),

    #[error("generalized sum over `{0}` has an empty domain")]
    EmptyDomain(String),

    #[error("unknown procedure `{0}`")]
    UnknownProcedure(String),

    #[error("procedure `{name}` expects {expected} argument(s), got {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },

    #[error("unguarded recursion through procedure `{0}`")]
    UnguardedRecursion(String),

    #[error("unknown formula variable `{0}`")]
    UnknownFormulaVariable(String),

    #[error("unguarded recursion through formula `{0}`")]
    UnguardedFormula(String),

    #[error("the satisfied marker ε cannot appear in a user formula")]
    EpsilonInFormula,

    #[error("duplicate definition of `{0}`")]
    DuplicateDefinition(String),

    #[error("unbound variable `{var}` in `{context}`")]
    UnboundVariable { var: String, context: String },

    #[error("binder `{binder}` shadows an enclosing binder or parameter in `{context}`")]
    BinderClash { binder: String, context: String },

    #[error("unknown principal `{0}`")]
    UnknownPrincipal(String),

    #[error("model has no entry agent (add `run NAME .` or define `Protocol`)")]
    NoEntry,

    #[error("{line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
