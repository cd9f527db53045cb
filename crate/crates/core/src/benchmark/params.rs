//! Per-instance parameter sampling for the eight benchmark stages.
//!
//! Every random variable of an instance is drawn here, in a fixed order, from
//! the instance's own stream. Stage capabilities are expressed as an additive
//! [`StageFeatures`] set: stage `k` restricted to stage `k-1`'s features
//! draws exactly the same parameters as stage `k-1`.

use serde::{Deserialize, Serialize};

use crate::rng::SeededRng;

use super::{GenError, SensorGroup};

/// Feature set a stage enables. Strictly additive across stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageFeatures {
    /// Frequency/amplitude shift at `t_change` (stage >= 2).
    pub speed_change: bool,
    /// Channel-specific phase offset (stage >= 3).
    pub phase_offset: bool,
    /// Piecewise noise level per channel (stage >= 4).
    pub noise_change: bool,
    /// Group-specific parameter ranges (stage >= 5).
    pub group_ranges: bool,
    /// Non-uniform anomaly channel allocation (stage >= 6).
    pub weighted_allocation: bool,
    /// Transient high-frequency burst (stage >= 7).
    pub hf_burst: bool,
    /// Periodic truncated Gaussian impulses (stage 8).
    pub impulse_train: bool,
}

impl StageFeatures {
    pub fn for_stage(stage: u8) -> Result<Self, GenError> {
        if !(1..=8).contains(&stage) {
            return Err(GenError::UnknownStage(stage));
        }
        Ok(StageFeatures {
            speed_change: stage >= 2,
            phase_offset: stage >= 3,
            noise_change: stage >= 4,
            group_ranges: stage >= 5,
            weighted_allocation: stage >= 6,
            hf_burst: stage >= 7,
            impulse_train: stage >= 8,
        })
    }
}

/// Frequency/amplitude shift keeping phase continuity at `t_change_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedChange {
    pub t_change_s: f64,
    pub freq_factor: f64,
    pub amp_factor: f64,
}

/// Noise level step: std goes from the base value to base + `delta_std`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseChange {
    pub t_change_s: f64,
    pub delta_std: f64,
}

/// Transient high-frequency sinusoid added inside a short window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HfBurst {
    pub t_start_s: f64,
    pub duration_s: f64,
    pub amplitude: f64,
    pub frequency_hz: f64,
    pub phase: f64,
}

impl HfBurst {
    pub fn t_end_s(&self) -> f64 {
        self.t_start_s + self.duration_s
    }
}

/// Periodic truncated Gaussian impulse train.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpulseTrain {
    pub period_s: f64,
    pub amplitude: f64,
    pub width_s: f64,
}

impl ImpulseTrain {
    /// Number of impulses fitting the window: `floor(duration / period)`.
    pub fn count(&self, duration_s: f64) -> usize {
        (duration_s / self.period_s).floor() as usize
    }
}

/// All sampled random variables of one channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub amplitude: f64,
    pub frequency_hz: f64,
    pub noise_std: f64,
    /// Zero unless the stage samples a phase offset.
    pub phase: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_change: Option<SpeedChange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_change: Option<NoiseChange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hf_burst: Option<HfBurst>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub impulse_train: Option<ImpulseTrain>,
}

/// Every sampled random variable of an instance, for full reproducibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceParams {
    pub channels: Vec<ChannelParams>,
}

// Baseline ranges (stage 1).
pub const AMPLITUDE_RANGE: (f64, f64) = (0.5, 2.0);
pub const FREQUENCY_RANGE_HZ: (f64, f64) = (1.0, 15.0);
pub const NOISE_STD_RANGE: (f64, f64) = (0.1, 0.5);

// Speed variation (stage 2).
pub const T_CHANGE_RANGE_S: (f64, f64) = (0.4, 1.6);
pub const FREQ_FACTOR_RANGE: (f64, f64) = (0.5, 1.5);
pub const AMP_FACTOR_RANGE: (f64, f64) = (0.5, 1.5);

// Noise variability (stage 4). The change time mirrors `t_change`.
pub const DELTA_STD_RANGE: (f64, f64) = (0.1, 0.5);
pub const T_NOISECHANGE_RANGE_S: (f64, f64) = (0.4, 1.6);

// HF burst timing (stage 7).
pub const HF_START_RANGE_S: (f64, f64) = (0.4, 1.6);
pub const HF_DURATION_RANGE_S: (f64, f64) = (0.05, 0.2);

// Impulse width (stage 8).
pub const IMPULSE_WIDTH_RANGE_S: (f64, f64) = (0.01, 0.1);

/// Group-specific base frequency range (stage >= 5).
pub fn group_frequency_range(group: SensorGroup) -> (f64, f64) {
    match group {
        SensorGroup::Axle => (1.0, 25.0),
        SensorGroup::Bogie => (1.0, 15.0),
        SensorGroup::Body => (1.0, 5.0),
    }
}

/// Group-specific HF burst (amplitude, frequency) ranges (stage >= 7).
pub fn group_hf_ranges(group: SensorGroup) -> ((f64, f64), (f64, f64)) {
    match group {
        SensorGroup::Axle => ((0.5, 2.0), (25.0, 50.0)),
        SensorGroup::Bogie => ((0.3, 1.5), (15.0, 40.0)),
        SensorGroup::Body => ((0.2, 1.0), (5.0, 30.0)),
    }
}

/// Group-specific impulse (period, amplitude) ranges (stage 8).
pub fn group_impulse_ranges(group: SensorGroup) -> ((f64, f64), (f64, f64)) {
    match group {
        SensorGroup::Axle => ((0.1, 0.3), (0.5, 2.0)),
        SensorGroup::Bogie => ((0.15, 0.3), (0.3, 1.5)),
        SensorGroup::Body => ((0.2, 0.5), (0.2, 1.0)),
    }
}

fn draw(rng: &mut SeededRng, range: (f64, f64)) -> Result<f64, GenError> {
    Ok(rng.next_uniform(range.0, range.1)?)
}

/// Sample one channel's parameters. Draw order is fixed per feature set.
fn sample_channel(
    features: StageFeatures,
    group: Option<SensorGroup>,
    rng: &mut SeededRng,
) -> Result<ChannelParams, GenError> {
    let freq_range = match (features.group_ranges, group) {
        (true, Some(g)) => group_frequency_range(g),
        _ => FREQUENCY_RANGE_HZ,
    };
    let amplitude = draw(rng, AMPLITUDE_RANGE)?;
    let frequency_hz = draw(rng, freq_range)?;
    let noise_std = draw(rng, NOISE_STD_RANGE)?;

    let speed_change = if features.speed_change {
        Some(SpeedChange {
            t_change_s: draw(rng, T_CHANGE_RANGE_S)?,
            freq_factor: draw(rng, FREQ_FACTOR_RANGE)?,
            amp_factor: draw(rng, AMP_FACTOR_RANGE)?,
        })
    } else {
        None
    };

    let phase = if features.phase_offset {
        draw(rng, (0.0, 2.0 * std::f64::consts::PI))?
    } else {
        0.0
    };

    let noise_change = if features.noise_change {
        Some(NoiseChange {
            t_change_s: draw(rng, T_NOISECHANGE_RANGE_S)?,
            delta_std: draw(rng, DELTA_STD_RANGE)?,
        })
    } else {
        None
    };

    let hf_burst = if features.hf_burst {
        let (amp_range, freq_range) = match group {
            Some(g) => group_hf_ranges(g),
            None => group_hf_ranges(SensorGroup::Axle),
        };
        Some(HfBurst {
            t_start_s: draw(rng, HF_START_RANGE_S)?,
            duration_s: draw(rng, HF_DURATION_RANGE_S)?,
            phase: draw(rng, (0.0, 2.0 * std::f64::consts::PI))?,
            amplitude: draw(rng, amp_range)?,
            frequency_hz: draw(rng, freq_range)?,
        })
    } else {
        None
    };

    let impulse_train = if features.impulse_train {
        let (period_range, amp_range) = match group {
            Some(g) => group_impulse_ranges(g),
            None => group_impulse_ranges(SensorGroup::Axle),
        };
        Some(ImpulseTrain {
            width_s: draw(rng, IMPULSE_WIDTH_RANGE_S)?,
            period_s: draw(rng, period_range)?,
            amplitude: draw(rng, amp_range)?,
        })
    } else {
        None
    };

    Ok(ChannelParams {
        amplitude,
        frequency_hz,
        noise_std,
        phase,
        speed_change,
        noise_change,
        hf_burst,
        impulse_train,
    })
}

/// Sample all per-channel parameters for the given feature set.
pub(super) fn sample_params_with_features(
    features: StageFeatures,
    groups: &[Option<SensorGroup>],
    rng: &mut SeededRng,
) -> Result<InstanceParams, GenError> {
    let channels = groups
        .iter()
        .map(|&g| sample_channel(features, g, rng))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(InstanceParams { channels })
}
