//! Entropy-based temporal feature selection for paired forced/counterfactual
//! ensembles.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`entropy`]: cross-fuzzy entropy between the forced and counterfactual
//!    ensemble means over sliding windows.
//! 2. [`changepoint`]: Bonferroni-corrected binary segmentation of the entropy
//!    series, mapped back onto the daily axis as [`FeatureInterval`]s.
//! 3. [`stats`]: per-interval ensemble mean difference, standard error,
//!    t confidence interval and t-score ([`ImpactRecord`]).
//! 4. [`pathway`]: full, impact and source-impact DAGs over significant
//!    records, with DOT/JSON export.
//!
//! [`synth`] generates paired ensembles with known injected impacts so the
//! whole chain can be exercised without model output.

pub mod changepoint;
pub mod entropy;
pub mod error;
pub mod io;
pub mod model;
pub mod pathway;
pub mod stats;
pub mod synth;

mod numeric;

pub use changepoint::{
    detect_changepoints, map_to_time, stability_histogram, two_sample_t, ChangepointConfig,
    FeatureInterval, StabilityHistogram, WelchTest,
};
pub use entropy::{cross_fuzzy_entropy, entropy_series, fuzzy_membership, EntropyParams, EntropySeries};
pub use error::{Error, Result};
pub use model::{
    align_pair, build_windows, regional_mean, zonal_adjacency, EnsemblePair, RegionMask,
    RegionalSeries, Scenario, Window, ZONAL_REGIONS,
};
pub use pathway::{
    build_full_dag, export_dot, export_json, impact_dag, source_impact_path, GraphKind, NodeId,
    PathwayConstraints, PathwayGraph,
};
pub use stats::{
    granularity_compare, impact_record, impacts_for_features, interval_mean_diff, t_quantile,
    Granularity, ImpactRecord,
};
pub use synth::{generate_pair, score_recovery, GroundTruth, SynthConfig, SynthOutput};
