use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("duplicate element `{0}`")]
    DuplicateElement(String),

    #[error("unknown element `{0}`")]
    UnknownElement(String),

    #[error("cover relation contains a cycle through `{0}`")]
    Cycle(String),

    #[error("tau is not a linear extension: {0}")]
    BadTau(String),

    #[error("poset has {0} elements, at most {max} are supported", max = crate::poset::MAX_ELEMENTS)]
    TooManyElements(usize),

    #[error("{0} is not an ideal")]
    NotIdeal(String),

    #[error("{lo} is not contained in {hi}")]
    NotSubset { lo: String, hi: String },

    #[error("node cap {cap} exceeded while expanding depth {depth}")]
    NodeCap { cap: usize, depth: usize },

    #[error("enumeration of size {size} exceeds cap {cap}")]
    EnumerationCap { size: usize, cap: usize },

    #[error("ideal {0} is not a node of the slice")]
    NotInSlice(String),

    #[error("edge field has no value for edge ({0})")]
    MissingEdge(String),

    #[error("diamond field has no value for diamond ({0})")]
    MissingDiamond(String),

    #[error("path is not admissible: {0}")]
    InadmissiblePath(String),

    #[error("paths do not share endpoints")]
    EndpointMismatch,

    #[error("rewrite step does not apply: {0}")]
    BadRewriteStep(String),

    #[error("non-zero curvature {kappa} on diamond ({diamond})")]
    NonZeroCurvature { diamond: String, kappa: f64 },

    #[error("cube ({cube}) violates cube consistency with defect {defect}")]
    CubeInconsistent { cube: String, defect: f64 },

    #[error("slice is not a full interval [base, top]")]
    NotInterval,

    #[error("ragged slice: parent of {0} is missing")]
    RaggedSlice(String),

    #[error("field domain does not match the slice: {0}")]
    FieldDomain(String),

    #[error("path is unsupported at stage {stage} in state {state}")]
    Unsupported { stage: usize, state: String },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("bad timestamp `{0}`")]
    Timestamp(String),

    #[error("{0}")]
    Format(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of a mathematical precondition (non-ideal input,
    /// inconsistent curvature, unsupported path) as opposed to malformed input.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::NotIdeal(_)
                | Error::NotSubset { .. }
                | Error::NonZeroCurvature { .. }
                | Error::CubeInconsistent { .. }
                | Error::NotInterval
                | Error::RaggedSlice(_)
                | Error::Unsupported { .. }
                | Error::Precondition(_)
                | Error::InadmissiblePath(_)
                | Error::EndpointMismatch
        )
    }
}
