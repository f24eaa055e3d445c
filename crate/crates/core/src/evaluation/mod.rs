//! Analytic oracles, ranking accuracy, and the experiment harness.

pub mod accuracy;
pub mod analytic;
pub mod experiment;

pub use accuracy::{accuracy_exact, accuracy_montecarlo, psi, MonteCarloEstimate};
pub use analytic::{erf, AnalyticCase, CaseSampler};
pub use experiment::{
    fit_rate, longest_chain_constant, node_errors, pde_rate_experiment,
    ranking_accuracy_experiment, solve_case, stochastic_rate_experiment, AccuracyRow,
    ExperimentKind, ExperimentReport, RankingSetup, RateFit,
};
