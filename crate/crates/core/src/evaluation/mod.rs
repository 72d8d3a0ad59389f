//! Benchmark metrics, the cross-split protocol and report files.

mod benchmark;
mod metrics;
mod report;

pub use benchmark::{
    run_benchmark, BenchmarkConfig, BenchmarkReport, CurveRow, HypRl, RandomSearch, Smbo, Strategy, TimingRow,
};
pub use metrics::{adtm, average_rank, distance_curve, rank_with_ties, Adtm};
pub use report::{
    emit_report, plot_from_csv, read_curves, render_svg, ADTM_CSV, ADTM_SVG, CURVE_HEADER, RANK_CSV, RANK_SVG,
    TIMING_CSV, TIMING_HEADER, TRIALS_CSV,
};
