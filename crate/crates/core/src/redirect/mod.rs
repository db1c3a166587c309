//! Redirection geometry, motion gating, the adaptive offset controller and
//! pose-set sampling.

mod controller;
mod geometry;
mod hdbscan;
mod motion;
mod poses;

pub use controller::{controller_step, Controller, ControllerState, NoticeClass, RedirectionPolicy};
pub use geometry::{
    apply_offset, azimuth_deg, forearm_angle, offset_axis, redirect_progress, skeletal_distance, ArmPose, Pose,
};
pub use hdbscan::{
    cluster_poses, core_distances, hdbscan, mutual_reachability_mst, Clustering, DistanceMatrix, Edge, HdbscanParams,
};
pub use motion::{forearm_speed, motion_state, MotionGate, MotionParams};
pub use poses::{medoid, select_poses};
