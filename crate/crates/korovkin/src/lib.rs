//! Executable Korovkin approximation with summability-matrix densities.
//!
//! Classical Korovkin theory says a sequence of positive linear operators
//! converges on a whole function class as soon as it converges on a small
//! test suite. This crate makes the *A-statistical* refinement of that
//! story computable: convergence is measured through a non-negative
//! summability matrix `A`, a sequence may keep spiking forever and still
//! converge as long as the matrix assigns its exceptional indices
//! vanishing mass, and the Korovkin conclusion survives with an explicit
//! quantitative bound.
//!
//! The pieces fit together like this:
//!
//! * [`summability`] — summability matrices (Cesàro `C1`, identity, a
//!   deliberately non-regular specimen), A-transforms, density tails of
//!   exceedance sets, regularity diagnostics, and trend classification.
//! * [`functions`] — the compactified coordinate transform
//!   `p = x/(1+x)`, separable and dense targets on `[0, inf)^m`, and a
//!   plain-text node-table format for tabulated targets.
//! * [`operators`] — Bleimann–Butzer–Hahn-type operators in `m`
//!   variables, a perturbed two-variable family driven by an arbitrary
//!   positive sequence, numerically stable binomial weights, and closed
//!   forms for the test suite.
//! * [`engine`] — evaluation grids, sup-norm errors, moduli of
//!   continuity on two metrics, the quantitative error bound, exceedance
//!   index sets, and the full theorem verification pipeline.
//! * [`report`] — experiment configs, deterministic CSV/JSON reports,
//!   and the commands behind the CLI.
//! * [`accum`] — the compensated summation every other module leans on.
//!
//! # Quick start
//!
//! A sequence that spikes to 2 on every perfect square never converges
//! classically, but the Cesàro matrix starves those spikes of density:
//!
//! ```
//! use korovkin::{SequenceSpec, SummabilityMatrix};
//!
//! let u = SequenceSpec::square_perturbation(2.0).unwrap();
//! let c1 = SummabilityMatrix::cesaro_c1();
//! // Mass of {n <= 100 : |u_n - 1| >= 1/2} under row 100: ten squares.
//! let tail = c1.density_tail(&u, 1.0, 0.5, 100, 100).unwrap();
//! assert!((tail - 0.10).abs() < 1e-12);
//! ```
//!
//! # Runnable examples
//!
//! Each major capability has a self-contained example:
//!
//! * `cargo run --example a_transforms` — A-transforms and statistical
//!   limit estimation for catalog sequences.
//! * `cargo run --example regularity_check` — regularity diagnostics for
//!   all built-in matrices, including the identity's max-entry failure.
//! * `cargo run --example density_tails` — density tails of a spiked
//!   sequence along a row schedule, with trend classification.
//! * `cargo run --example stable_weights` — binomial weights at extreme
//!   parameters, with normalization checks.
//! * `cargo run --example operator_closed_forms` — direct operator
//!   evaluation against the closed forms on the test suite.
//! * `cargo run --example modulus_of_continuity` — moduli on both
//!   metrics and the budget-to-delta inversion.
//! * `cargo run --example quantitative_bound` — the error bound, its
//!   inputs, and the exceedance index sets on a hand-sized run.
//! * `cargo run --example tabulated_target` — plain-text node tables as
//!   operator targets, round-tripped through the parser.
//! * `cargo run --example theorem_verification` — the full pipeline on a
//!   small config, printing every verdict.
//! * `cargo run --example counterexample` — statistical convergence
//!   where classical convergence fails, written as a report.
//!
//! # Command line
//!
//! The `korovkin` binary wraps the same commands:
//!
//! ```text
//! korovkin verify --matrix c1 --operator tn --m 2 --un squares:2 --f f1 --out reports
//! korovkin demo-counterexample --spike 2 --nmax 200 --out reports
//! korovkin transform --matrix c1 --sequence squares:2 --jschedule 10,100,1000,10000
//! korovkin regularity --matrix identity --jschedule 10,100,1000,10000
//! ```
//!
//! Exit codes: 0 all verdicts pass, 1 a verdict failed, 2 configuration
//! error, 3 computation or i/o failure.
//!
//! # Determinism
//!
//! Every run is reproducible bit for bit: random sampling is seeded,
//! reductions happen in fixed order with compensated summation, parallel
//! work is collected in input order, and report files are written with
//! 17-significant-digit floats. Rerunning a config — with any worker
//! count — reproduces identical bytes.

#![forbid(unsafe_code)]
// `!(x > 0.0)` and friends are used deliberately throughout: unlike the
// inverted comparison, the negated form also rejects NaN, which is the
// behavior every validation here wants.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accum;
pub mod engine;
pub mod functions;
pub mod operators;
pub mod report;
pub mod summability;

pub use accum::{compensated_sum, CompensatedSum};
pub use engine::{
    delta_for_epsilon, estimate_modulus, hw_membership_probe, index_sets, korovkin_bound,
    sup_norm, sup_norm_error, union_contains, verify_theorem, ConvergenceReport, EngineError,
    EvaluationGrid, KorovkinBoundInputs, Metric, ModulusEstimate, TestSuite, Verdicts,
    VerifySettings,
};
pub use functions::{
    axis_one, axis_ratio, axis_ratio_squared, p_inverse, p_transform, AxisFn, NodeTable,
    TableError, Target,
};
pub use operators::{
    bbh_eval, binomial_weights, closed_form_f0, closed_form_f1, closed_form_f2, closed_form_f3,
    node, tn_eval, BinomialWeights, ClosedFormCoefficients, OperatorError, OperatorFamily,
    MAX_POINT_P,
};
pub use report::{
    cmd_demo_counterexample, cmd_regularity, cmd_transform, cmd_verify, ExperimentConfig,
    ReportError, RunOutcome,
};
pub use summability::{
    classify_trend, is_perfect_square, RegularityReport, SequenceSpec, SummabilityError,
    SummabilityMatrix, TrendVerdict,
};
