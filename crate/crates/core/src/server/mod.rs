//! Read-only HTTP service over precomputed band artifacts.

pub mod api;
mod http;
mod store;

pub use api::{ApiError, ApiResult, WhatIfRequest};
pub use http::{router, serve, spawn, ServerHandle};
pub use store::{
    precompute, round_json, round_sig, write_artifacts, AlphaBands, ArtifactIndex, ArtifactStore,
    DayArtifact, GridSpec, ObservedDay, FORMAT_VERSION,
};
