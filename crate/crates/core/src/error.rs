use thiserror::Error;

/// Failure modes of the simulation pipeline.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// The Ikeda map produced a non-finite field.
    #[error("pump field diverged at round trip {round_trip}")]
    PumpDiverged { round_trip: usize },

    #[error(
        "round-trip integration inaccurate: symplectic defect {defect:.3e} with {z_steps} z-steps (increase z-steps)"
    )]
    IntegrationAccuracy { defect: f64, z_steps: usize },

    /// The loop matrix Q is (numerically) singular: the ring is at or above
    /// the parametric oscillation threshold.
    #[error("above threshold: |Q^-1| = {inverse_norm:.3e} at pump energy {energy_pj:.4} pJ")]
    AboveThreshold { inverse_norm: f64, energy_pj: f64 },

    #[error("decomposition failed: {0}")]
    Decomposition(String),

    #[error("numerical integrity: {0}")]
    NumericalIntegrity(String),

    #[error("unphysical state: symplectic eigenvalue {nu:.12} < 1")]
    Unphysical { nu: f64 },

    #[error("undefined: {0}")]
    Undefined(String),

    /// No usable maximum found in the coarse scan; the table holds
    /// `(detuning rad/s, objective)` pairs, `NaN` for failed points.
    #[error("no interior maximum in bracket; coarse scan: {table:?}")]
    Bracket { table: Vec<(f64, f64)> },
}

pub type Result<T> = std::result::Result<T, Error>;
