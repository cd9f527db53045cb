//! Anomaly selection and injection: instantaneous spikes and local constant
//! deviations, one per anomalous instance.

use serde::{Deserialize, Serialize};

use crate::rng::SeededRng;

use super::{GenConfig, GenError};

// Spike offset magnitude U[2, 4], local deviation offset magnitude U[1, 2].
pub const SPIKE_OFFSET_RANGE: (f64, f64) = (2.0, 4.0);
pub const LOCALDEV_OFFSET_RANGE: (f64, f64) = (1.0, 2.0);
pub const LOCALDEV_DURATION_RANGE_S: (f64, f64) = (0.05, 0.2);

/// Ground-truth descriptor of the injected anomaly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum AnomalySpec {
    /// Additive offset on a single sample.
    Spike { channel: usize, t_spike_s: f64, offset: f64 },
    /// Additive offset on every sample inside a short window.
    LocalDeviation { channel: usize, t_start_s: f64, duration_s: f64, offset: f64 },
}

impl AnomalySpec {
    pub fn channel(&self) -> usize {
        match *self {
            AnomalySpec::Spike { channel, .. } => channel,
            AnomalySpec::LocalDeviation { channel, .. } => channel,
        }
    }

    /// Same anomaly with the offset negated; injecting both is a no-op.
    pub fn negated(&self) -> AnomalySpec {
        let mut spec = *self;
        match &mut spec {
            AnomalySpec::Spike { offset, .. } => *offset = -*offset,
            AnomalySpec::LocalDeviation { offset, .. } => *offset = -*offset,
        }
        spec
    }
}

/// Pick the affected channel from a probability vector by inverse CDF.
fn weighted_channel(probs: &[f64], rng: &mut SeededRng) -> usize {
    let u = rng.next_f64();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Decide whether this instance is anomalous and, if so, what the anomaly is.
///
/// Occurrence is Bernoulli(`anomaly_rate`); spike vs local deviation are
/// equiprobable. The channel is uniform when all channels are equally likely
/// and drawn from the configured per-kind probability vectors otherwise.
pub fn choose_anomaly(cfg: &GenConfig, rng: &mut SeededRng) -> Result<Option<AnomalySpec>, GenError> {
    if !(0.0..=1.0).contains(&cfg.anomaly_rate) {
        return Err(GenError::InvalidConfig(format!(
            "anomaly rate {} outside [0, 1]",
            cfg.anomaly_rate
        )));
    }
    if !rng.next_bool(cfg.anomaly_rate) {
        return Ok(None);
    }
    let is_spike = rng.next_bool(0.5);

    let channel = if cfg.n_channels == 1 {
        0
    } else if cfg.features().weighted_allocation {
        let probs = if is_spike { cfg.spike_channel_probs() } else { cfg.localdev_channel_probs() };
        weighted_channel(probs, rng)
    } else {
        rng.next_index(cfg.n_channels)
    };

    let spec = if is_spike {
        let t_spike_s = rng.next_uniform(0.0, cfg.duration_s)?;
        let offset = rng.next_signed_uniform(SPIKE_OFFSET_RANGE.0, SPIKE_OFFSET_RANGE.1)?;
        AnomalySpec::Spike { channel, t_spike_s, offset }
    } else {
        let duration_s = rng.next_uniform(LOCALDEV_DURATION_RANGE_S.0, LOCALDEV_DURATION_RANGE_S.1)?;
        let t_start_s = rng.next_uniform(0.0, cfg.duration_s - duration_s)?;
        let offset = rng.next_signed_uniform(LOCALDEV_OFFSET_RANGE.0, LOCALDEV_OFFSET_RANGE.1)?;
        AnomalySpec::LocalDeviation { channel, t_start_s, duration_s, offset }
    };
    Ok(Some(spec))
}

/// Add the anomaly to the rendered signal in place. A spike edits the single
/// nearest sample; a local deviation offsets every sample whose time lies in
/// the closed window.
pub fn inject_anomaly(
    data: &mut [Vec<f64>],
    spec: &AnomalySpec,
    cfg: &GenConfig,
) -> Result<(), GenError> {
    let channel = spec.channel();
    if channel >= data.len() {
        return Err(GenError::ChannelOutOfRange { channel, n_channels: data.len() });
    }
    let last = cfg.n_samples() - 1;
    match *spec {
        AnomalySpec::Spike { t_spike_s, offset, .. } => {
            if !(0.0..=cfg.duration_s).contains(&t_spike_s) {
                return Err(GenError::InvalidParameter(format!(
                    "spike time {t_spike_s} outside [0, {}]",
                    cfg.duration_s
                )));
            }
            let idx = ((t_spike_s * cfg.sample_rate_hz).round() as usize).min(last);
            data[channel][idx] += offset;
        }
        AnomalySpec::LocalDeviation { t_start_s, duration_s, offset, .. } => {
            let t_end = t_start_s + duration_s;
            if t_start_s < 0.0 || t_end > cfg.duration_s {
                return Err(GenError::InvalidParameter(format!(
                    "local deviation window [{t_start_s}, {t_end}] outside [0, {}]",
                    cfg.duration_s
                )));
            }
            // 1e-9 guards float representation at the boundaries
            let start = ((t_start_s * cfg.sample_rate_hz - 1e-9).ceil().max(0.0)) as usize;
            let end = ((t_end * cfg.sample_rate_hz + 1e-9).floor() as usize).min(last);
            for sample in &mut data[channel][start..=end] {
                *sample += offset;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::GenConfig;

    #[test]
    fn spike_edits_exactly_one_sample() {
        let cfg = GenConfig::for_stage(1).unwrap();
        let mut data = vec![vec![0.0; 200]];
        let spec = AnomalySpec::Spike { channel: 0, t_spike_s: 1.0, offset: 3.0 };
        inject_anomaly(&mut data, &spec, &cfg).unwrap();
        for (i, v) in data[0].iter().enumerate() {
            if i == 100 {
                assert_eq!(*v, 3.0);
            } else {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn local_deviation_covers_closed_window() {
        let cfg = GenConfig::for_stage(1).unwrap();
        let mut data = vec![vec![0.0; 200]];
        let spec =
            AnomalySpec::LocalDeviation { channel: 0, t_start_s: 0.5, duration_s: 0.1, offset: -1.5 };
        inject_anomaly(&mut data, &spec, &cfg).unwrap();
        for (i, v) in data[0].iter().enumerate() {
            if (50..=60).contains(&i) {
                assert_eq!(*v, -1.5, "sample {i}");
            } else {
                assert_eq!(*v, 0.0, "sample {i}");
            }
        }
    }

    #[test]
    fn inject_then_negate_recovers_original() {
        let cfg = GenConfig::for_stage(1).unwrap();
        let original: Vec<Vec<f64>> = vec![(0..200).map(|i| (i as f64 * 0.37).sin()).collect()];
        let mut data = original.clone();
        let spec =
            AnomalySpec::LocalDeviation { channel: 0, t_start_s: 1.2, duration_s: 0.2, offset: 1.75 };
        inject_anomaly(&mut data, &spec, &cfg).unwrap();
        inject_anomaly(&mut data, &spec.negated(), &cfg).unwrap();
        assert_eq!(data, original);
    }

    #[test]
    fn out_of_range_channel_is_an_error() {
        let cfg = GenConfig::for_stage(1).unwrap();
        let mut data = vec![vec![0.0; 200]];
        let spec = AnomalySpec::Spike { channel: 3, t_spike_s: 1.0, offset: 3.0 };
        assert!(matches!(
            inject_anomaly(&mut data, &spec, &cfg),
            Err(GenError::ChannelOutOfRange { .. })
        ));
    }

    #[test]
    fn spike_at_window_end_clamps_to_last_sample() {
        let cfg = GenConfig::for_stage(1).unwrap();
        let mut data = vec![vec![0.0; 200]];
        let spec = AnomalySpec::Spike { channel: 0, t_spike_s: 2.0, offset: 2.5 };
        inject_anomaly(&mut data, &spec, &cfg).unwrap();
        assert_eq!(data[0][199], 2.5);
    }

    #[test]
    fn zero_rate_never_yields_anomaly() {
        let mut cfg = GenConfig::for_stage(1).unwrap();
        cfg.anomaly_rate = 0.0;
        let mut rng = crate::rng::SeededRng::new(5, 0);
        for _ in 0..1000 {
            assert!(choose_anomaly(&cfg, &mut rng).unwrap().is_none());
        }
    }

    #[test]
    fn degenerate_probs_pin_spikes_to_channel_one() {
        let mut cfg = GenConfig::for_stage(6).unwrap();
        cfg.spike_channel_probs = Some(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        cfg.localdev_channel_probs = Some(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        cfg.validate().unwrap();
        let mut rng = crate::rng::SeededRng::new(5, 0);
        let mut seen = 0;
        for _ in 0..2000 {
            if let Some(spec) = choose_anomaly(&cfg, &mut rng).unwrap() {
                assert_eq!(spec.channel(), 0);
                seen += 1;
            }
        }
        assert!(seen > 100);
    }
}
