//! The shipped steering-wheel and yaw-angle rule packs.

use super::{FatigueLevel, FatigueSource};

/// Input classes exactly as printed, including `MeanSWA_*` on the yaw rows.
pub const VERBATIM: &str = include_str!("../../../../rules/table1_verbatim.rules");
/// Yaw rows condition on `MeanYaw_*`.
pub const CORRECTED: &str = include_str!("../../../../rules/table1_corrected.rules");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Row {
    pub rule: &'static str,
    pub source: FatigueSource,
    pub inputs: [&'static str; 4],
    pub output: FatigueLevel,
}

impl Row {
    /// Inputs for the corrected pack.
    pub fn corrected_inputs(&self) -> [String; 4] {
        self.inputs.map(|c| match (self.source, c.strip_prefix("MeanSWA_")) {
            (FatigueSource::YawAngle, Some(band)) => format!("MeanYaw_{band}"),
            _ => c.to_string(),
        })
    }

    pub fn output_class(&self) -> String {
        self.source.level_class(self.output)
    }
}

/// Rows in printed order.
pub const ROWS: [Row; 6] = [
    Row {
        rule: "steering_low",
        source: FatigueSource::SteeringWheel,
        inputs: ["MeanSWA_Small", "AngularVelocity_Normal", "FrequencyCorrection_Low", "SWA_Small"],
        output: FatigueLevel::Low,
    },
    Row {
        rule: "steering_medium",
        source: FatigueSource::SteeringWheel,
        inputs: ["MeanSWA_Large", "AngularVelocity_High", "FrequencyCorrection_Normal", "SWA_Large"],
        output: FatigueLevel::Medium,
    },
    Row {
        rule: "steering_high",
        source: FatigueSource::SteeringWheel,
        inputs: ["MeanSWA_Extreme", "AngularVelocity_High", "FrequencyCorrection_High", "SWA_Extreme"],
        output: FatigueLevel::High,
    },
    Row {
        rule: "yaw_medium",
        source: FatigueSource::YawAngle,
        inputs: ["MeanSWA_Large", "VarYaw_Large", "AccelerationYawRate_Medium", "Yaw_Large"],
        output: FatigueLevel::Medium,
    },
    Row {
        rule: "yaw_low",
        source: FatigueSource::YawAngle,
        inputs: ["MeanSWA_Small", "VarYaw_Small", "AccelerationYawRate_Low", "Yaw_Small"],
        output: FatigueLevel::Low,
    },
    Row {
        rule: "yaw_high",
        source: FatigueSource::YawAngle,
        inputs: ["MeanSWA_Small", "VarYaw_Extreme", "AccelerationYawRate_High", "Yaw_Extreme"],
        output: FatigueLevel::High,
    },
];
