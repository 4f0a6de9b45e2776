use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("moduli {0} and {1} share a common factor")]
    ModuliNotCoprime(String, String),

    #[error("modulus must be at least {min}, got {got}")]
    ModulusTooSmall { min: u64, got: String },

    #[error("residue and modulus lists differ in length ({residues} vs {moduli})")]
    LengthMismatch { residues: usize, moduli: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("{s} has no decomposition m^a * q with gcd(q, {m}) = 1")]
    NoDecomposition { s: String, m: u64 },

    #[error("zero is not allowed here: {0}")]
    Zero(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("depth mismatch: {0} vs {1}")]
    DepthMismatch(usize, usize),

    #[error("depth {got} is smaller than the required {need}")]
    DepthTooSmall { need: usize, got: usize },

    #[error("levels {0} and {1} are not coherent: f(z[{1}]) != z[{0}]")]
    Incoherent(usize, usize),

    #[error("winding {0} has a zero entry and no horizon was given")]
    NonperiodicWithoutHorizon(String),

    #[error("winding {0} is not admissible (zero entry)")]
    NotAdmissible(String),

    #[error("no level n <= {0} satisfies the hitting condition")]
    NotFoundWithin(u32),

    #[error("hitting condition fails at stage {0}")]
    ConditionFails(u32),

    #[error("size guard exceeded: {needed} > {limit}")]
    SizeGuardExceeded { needed: String, limit: u64 },

    #[error("loop {0} has a zero on its own coordinate")]
    BadInputFamily(usize),

    #[error("injected winding is zero on the new coordinate")]
    ZeroInjection,

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("point is not in level {0}")]
    MembershipFails(usize),

    #[error("no f-preimage of level {0} lies in level {1}")]
    NoPreimageInLevel(usize, usize),

    #[error("could not parse {what}: {input:?}")]
    Parse { what: &'static str, input: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
