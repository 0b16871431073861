use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong across the library. Parse errors carry byte
/// offsets into the input; sample-file errors carry line numbers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: expected {expected}")]
    SyntaxError { offset: usize, expected: String },

    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { name: String, offset: usize },

    #[error("`{function}` takes {expected} argument(s), found {found}")]
    ArityError {
        function: String,
        expected: usize,
        found: usize,
    },

    #[error("variable `{name}` is not bound")]
    UnboundVariable { name: String },

    #[error("domain error: {message}")]
    DomainError { message: String },

    #[error("derivative order {requested} exceeds the configured maximum {max}")]
    OrderTooLarge { requested: usize, max: usize },

    #[error("expression grew to {nodes} nodes, over the cap of {cap}")]
    ExpressionTooLarge { nodes: usize, cap: usize },

    #[error("remainder bound requires M >= 0, got {value}")]
    NegativeM { value: f64 },

    #[error("expression has unexpected free variable(s): {}", variables.join(", "))]
    UnexpectedVariables { variables: Vec<String> },

    #[error("no variables to classify over")]
    NoVariables,

    #[error("no closed-form derivative of order {order} is known for {form}")]
    NoClosedForm { form: String, order: usize },

    #[error("parse error on line {line}: {message}")]
    ParseError { line: usize, message: String },

    #[error("line {line}: {field} must be positive, got {value}")]
    NonPositiveValue {
        line: usize,
        field: String,
        value: f64,
    },

    #[error("need at least {required} samples, found {found}")]
    TooFewSamples { found: usize, required: usize },

    #[error("sample sizes span a {ratio:.2}x range; at least {required}x is required")]
    InsufficientRange { ratio: f64, required: f64 },

    #[error("invalid configuration: {message}")]
    InvalidConfig { message: String },
}

impl Error {
    pub fn domain(message: impl Into<String>) -> Self {
        Error::DomainError {
            message: message.into(),
        }
    }
}
