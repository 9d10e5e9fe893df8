//! Tabular datasets and simulated option-portfolio scenarios.

mod gbm;
mod portfolio;
mod tabular;

pub use gbm::{
    black_scholes_call, black_scholes_prices, payoff_labels, portfolio_rel_mae, simulate_gbm, GbmConfig,
    PortfolioDefaults,
};
pub use portfolio::{portfolio_samples, PortfolioData, PortfolioScenario};
pub use tabular::{
    load_csv, prepare, split_indices, PreparedData, Split, Standardizer, TabularDataset, TargetColumn,
    TargetScaler, Task, TARGET_MARGIN,
};
