//! trajkit: synthetic flight trajectories, ADS-B style degradation, a
//! fixed-precision digit codec for language-model prompts, and trajectory
//! reconstruction via linear interpolation, Kalman filtering/smoothing, or a
//! text-completion endpoint, plus evaluation and plotting.

pub mod codec;
pub mod dataset;
pub mod degrade;
pub mod eval;
pub mod figure;
pub mod geo;
pub mod jsonl;
pub mod kalman;
pub mod llm;
pub mod pipeline;
pub mod reconstruct;
pub mod sim;
