use thiserror::Error;

/// Errors produced by distribution construction, mechanism evaluation and the
/// LP oracles.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("infinite monopoly revenue: {0}")]
    InfiniteRevenue(String),

    #[error("operation requires a discrete distribution; discretize first ({0})")]
    DiscretizeFirst(String),

    #[error("size guard exceeded for {what}: {count} > {limit}")]
    SizeGuard {
        what: &'static str,
        count: usize,
        limit: usize,
    },

    #[error("bid matrix is outside the discrete support of the instance")]
    OutOfSupport,

    #[error("conditioning on a zero-probability profile")]
    ZeroProbabilityCondition,

    #[error("bidders are correlated; Bayesian oracle requires independent bidders")]
    CorrelatedBidders,

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("empty grid")]
    EmptyGrid,

    #[error("no grid value u satisfies u*H(u) >= 4/5 r after {0} refinements")]
    SurchargeGridExhausted(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
