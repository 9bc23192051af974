use serde::{Deserialize, Serialize};

use super::{Schedule, Stage, TransformSpec};

/// Training cost relative to full-resolution training, under the model that
/// per-epoch compute scales with the number of input pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub cost: f64,
    pub speedup: f64,
}

fn pixel_fraction(transform: &TransformSpec, base_resolution: u32) -> f64 {
    match *transform {
        TransformSpec::Crop { bandwidth } => {
            let side = bandwidth as f64 / base_resolution as f64;
            side * side
        }
        TransformSpec::Downsample { k, .. } => 1.0 / (k as f64 * k as f64),
        // filters keep the input size
        TransformSpec::Identity | TransformSpec::LowPass { .. } | TransformSpec::HighPass { .. } => 1.0,
    }
}

/// `sum (stage length / T) * (B / base)^2` over arbitrary stages.
///
/// Unlike [`relative_cost`] this does not require the stages to form a valid
/// curriculum, so fixed low-resolution runs can be costed too.
pub fn relative_cost_of_stages(stages: &[Stage], total_epochs: u32, base_resolution: u32) -> CostEstimate {
    let cost = stages
        .iter()
        .map(|s| s.len() as f64 / total_epochs as f64 * pixel_fraction(&s.transform, base_resolution))
        .sum::<f64>();
    CostEstimate {
        cost,
        speedup: 1.0 / cost,
    }
}

pub fn relative_cost(schedule: &Schedule) -> CostEstimate {
    relative_cost_of_stages(schedule.stages(), schedule.total_epochs(), schedule.base_resolution())
}
