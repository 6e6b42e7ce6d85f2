use thiserror::Error;

/// Errors surfaced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    /// Mesh subdivision level outside the supported range.
    #[error("mesh level {0} out of range (0..=6)")]
    Level(u32),

    /// Shape map parameters rejected at construction or validation time.
    #[error("invalid shape: {0}")]
    Shape(String),

    /// Wave number outside the closed upper half plane.
    #[error("wave number {re}{im:+}i lies outside the closed upper half plane (Im k >= 0 required)")]
    WaveNumber { re: f64, im: f64 },

    /// Evaluation point inside or on the obstacle, or otherwise unusable.
    #[error("domain error: {0}")]
    Domain(String),

    /// Operands bound to different surfaces or wave numbers.
    #[error("binding mismatch: {0}")]
    Binding(String),

    /// LU factorization hit an exactly singular pivot.
    #[error("singular linear system")]
    Singular,

    /// Linear solve produced a residual above the refusal threshold.
    #[error("solve residual {residual:.3e} exceeds {limit:.3e}")]
    Residual { residual: f64, limit: f64 },

    /// Condition estimate beyond the refusal threshold (interior resonance
    /// diagnostic for the direct flux solve).
    #[error("operator condition estimate {cond:.3e} exceeds {limit:.3e}; \
             likely an interior resonance of the single-layer operator")]
    IllConditioned { cond: f64, limit: f64 },

    /// Invalid request or configuration value.
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
