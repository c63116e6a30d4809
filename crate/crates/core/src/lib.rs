//! Moment-based analysis of wearable heartbeat and accelerometer data.
//!
//! The pipeline reads RR-interval and tri-axial acceleration CSV files
//! ([`ingest`]), computes sliding-window moments and bootstrap clouds
//! ([`stats`]), places windows on the skewness²–kurtosis plane and measures
//! how far they stray from reference distributions ([`momentplane`]),
//! builds per-session feature vectors and correlations ([`features`]), and
//! fits activity predictors and intensity clusters ([`learn`]). [`synth`]
//! generates deterministic stand-in data for all of it.
//!
//! ```
//! use loadlens::{momentplane, stats};
//!
//! let m = stats::moments(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
//! let p = momentplane::to_plane(&m, 0).unwrap();
//! assert!((p.k - 1.7).abs() < 1e-12);
//! assert_eq!(
//!     momentplane::classify_zone(&p, Default::default()),
//!     momentplane::Zone::UniformVicinity,
//! );
//! ```

pub mod features;
pub mod ingest;
pub mod learn;
pub mod momentplane;
pub mod stats;
pub mod synth;

pub use features::{Feature, SessionFeatures};
pub use ingest::{AccelSample, Activity, RrSample, SessionMeta};
pub use momentplane::{PlanePoint, Zone};
pub use stats::Moments;

// The guide's listings run as doc-tests so the book stays in step with the API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/moments.md")]
    mod moments {}
    #[doc = include_str!("../../../book/src/plane.md")]
    mod plane {}
    #[doc = include_str!("../../../book/src/features.md")]
    mod features {}
    #[doc = include_str!("../../../book/src/learning.md")]
    mod learning {}
    #[doc = include_str!("../../../book/src/synthetic.md")]
    mod synthetic {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
