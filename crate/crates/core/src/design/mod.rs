//! Learned distribution over designs: a diagonal log-normal mixture trained
//! with score-function gradients and an annealed entropy bonus.

mod loss;
mod mixture;
mod schedule;

pub use loss::{design_loss, standardize_returns, update_design, DesignLoss};
pub use mixture::{
    init_mixture, quantile, DesignSummary, MixtureParams, Quartiles, DESIGN_DIMS,
    SUMMARY_SAMPLES,
};
pub use schedule::EntropySchedule;
