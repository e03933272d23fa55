//! RANSAC-style algorithms for recovering and clustering linear subspaces from
//! noiseless point clouds with outliers, together with closed-form iteration
//! counts, synthetic scene generation and evaluation metrics.
//!
//! Points are stored as the columns of a `p x n` matrix ([`PointCloud`]).
//! Every randomized routine takes its generator explicitly; [`RngStream`]
//! derives independent reproducible generators from a master seed.
//!
//! ```
//! use subspace_ransac::{make_scene, ransac_recover, recovery_angle, RansacConfig, RngStream, TheoryParams};
//!
//! // a 2-dimensional subspace of R^5 holding 30 of 50 points
//! let params = TheoryParams::recovery(2, 5, 30, 20)?;
//! let scene = make_scene(&params, RngStream::new(42, 0))?;
//! let mut rng = RngStream::new(42, 1).generator();
//! let fit = ransac_recover(&scene.points, 2, &RansacConfig::default(), &mut rng)?;
//! assert!(recovery_angle(&fit.subspace, &scene.subspaces[0])? <= 1e-8);
//! assert_eq!(fit.inlier_indices, scene.members(1));
//! # Ok::<(), subspace_ransac::Error>(())
//! ```

pub mod clustering;
pub mod datagen;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod recovery;
pub mod sampling;
pub mod theory;

pub use clustering::{hm_cluster, minimum_dependent_subset, ransac_cluster, scc_cluster, ClusteringResult};
pub use datagen::{make_scene, make_scene_with, AuditPolicy, Scene, SceneLayout};
pub use error::{Error, Result};
pub use linalg::{PointCloud, PointTuple, Subspace};
pub use metrics::{rand_index, recovery_angle, LabelVector};
pub use recovery::{hardt_moitra_recover, ransac_recover, ransac_recover_unknown_d, RansacConfig, RecoveryResult};
pub use sampling::{ReplacementMode, RngStream, TupleSampler};
pub use theory::TheoryParams;
