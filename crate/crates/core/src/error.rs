use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("parameter `{param}` = {value} is outside the domain of family `{family}`")]
    ParameterDomain {
        family: String,
        param: String,
        value: f64,
    },

    #[error("family `{family}` expects {expected} parameters, got {got}")]
    ParameterCount {
        family: String,
        expected: usize,
        got: usize,
    },

    #[error("probability {0} is outside (0, 1)")]
    ProbabilityDomain(f64),

    #[error("mean {mean} and variance {variance} are not attainable by family `{family}`")]
    MomentDomain {
        family: String,
        mean: f64,
        variance: f64,
    },

    #[error("invalid family specification: {0}")]
    InvalidFamily(String),

    #[error("improper or invalid prior: {0}")]
    InvalidPrior(String),

    #[error("degenerate fit for family `{family}`: {reason}")]
    DegenerateFit { family: String, reason: String },

    #[error("family `{0}` assigns zero density to the observed data")]
    ImpossibleFamily(String),

    #[error("posterior for family `{family}` was fitted to different data")]
    FingerprintMismatch { family: String },

    #[error("no family in the model admits the observed data")]
    NoAdmissibleFamily,

    #[error("invalid population space model: {0}")]
    InvalidModel(String),

    #[error("invalid ratio elicitation: {0}")]
    InvalidElicitation(String),

    #[error("incomplete ratio elicitation: no ratio for family `{0}`")]
    IncompleteElicitation(String),

    #[error("quantity `{quantity}` is undefined for family `{family}`")]
    UndefinedQuantity { family: String, quantity: String },

    #[error("test statistic `{statistic}` is undefined under family `{family}`: {reason}")]
    UndefinedStatistic {
        family: String,
        statistic: String,
        reason: String,
    },

    #[error("weights have zero total")]
    DegenerateWeight,

    #[error("unsupported comparison: {0}")]
    UnsupportedComparison(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
