//! Adaptive frame-index planning for video inputs.
//!
//! Videos no longer than the frame budget (in seconds) are sampled at one
//! frame per second; longer videos are uniformly downsampled to exactly the
//! budget. Indices are `floor(k * step)` for `k = 0, 1, ...` while below the
//! frame count, deduplicated.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FramePlanError {
    #[error("total frame count must be at least 1")]
    NoFrames,
    #[error("frame rate must be positive and finite, got {0}")]
    BadFps(f64),
    #[error("frame budget must be at least 1")]
    NoBudget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// One frame per second of video.
    OnePerSecond,
    /// Budget-many frames spread uniformly.
    Downsample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSamplingPlan {
    pub total_frames: u64,
    pub fps: f64,
    pub budget: u64,
    /// Seconds, `total_frames / fps`.
    pub duration: f64,
    pub step: f64,
    pub mode: SamplingMode,
    pub indices: Vec<u64>,
}

pub fn plan_frames(total_frames: u64, fps: f64, budget: u64) -> Result<FrameSamplingPlan, FramePlanError> {
    if total_frames == 0 {
        return Err(FramePlanError::NoFrames);
    }
    if !(fps > 0.0 && fps.is_finite()) {
        return Err(FramePlanError::BadFps(fps));
    }
    if budget == 0 {
        return Err(FramePlanError::NoBudget);
    }

    let duration = total_frames as f64 / fps;
    let mut indices: Vec<u64> = Vec::new();
    let mut push = |idx: u64| {
        if indices.last() != Some(&idx) {
            indices.push(idx);
        }
    };

    let (mode, step) = if duration <= budget as f64 {
        for k in 0u64.. {
            let idx = (k as f64 * fps).floor();
            if idx >= total_frames as f64 {
                break;
            }
            push(idx as u64);
        }
        (SamplingMode::OnePerSecond, fps)
    } else {
        // floor(k * T / N) in exact integer arithmetic; it reaches T at k = N.
        let (t, n) = (u128::from(total_frames), u128::from(budget));
        for k in 0..n {
            push((k * t / n) as u64);
        }
        (SamplingMode::Downsample, total_frames as f64 / budget as f64)
    };

    Ok(FrameSamplingPlan {
        total_frames,
        fps,
        budget,
        duration,
        step,
        mode,
        indices,
    })
}
