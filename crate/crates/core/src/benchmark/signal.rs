//! Waveform rendering: the deterministic signal content of an instance plus
//! its per-sample noise draws.

use crate::rng::SeededRng;

use super::params::{ChannelParams, InstanceParams};
use super::{GenConfig, GenError};

use std::f64::consts::TAU;

/// Truncated Gaussian impulse kernel: `beta * exp(-(tau/omega)^2)` for
/// `0 <= tau <= 3*omega`, zero elsewhere.
pub fn impulse_kernel(tau_s: f64, beta: f64, omega_s: f64) -> Result<f64, GenError> {
    if !(omega_s.is_finite() && omega_s > 0.0) {
        return Err(GenError::InvalidParameter(format!(
            "impulse width must be positive, got {omega_s}"
        )));
    }
    if (0.0..=3.0 * omega_s).contains(&tau_s) {
        let r = tau_s / omega_s;
        Ok(beta * (-r * r).exp())
    } else {
        Ok(0.0)
    }
}

/// Noise-free waveform of one channel at time `t`: the piecewise sinusoid
/// (phase-continuous across `t_change`), plus HF burst and impulse train.
pub fn clean_value(ch: &ChannelParams, t: f64, duration_s: f64) -> f64 {
    let base = match ch.speed_change {
        Some(sc) if t >= sc.t_change_s => {
            ch.amplitude
                * sc.amp_factor
                * (TAU * (sc.freq_factor * ch.frequency_hz) * (t - sc.t_change_s)
                    + TAU * ch.frequency_hz * sc.t_change_s
                    + ch.phase)
                    .sin()
        }
        _ => ch.amplitude * (TAU * ch.frequency_hz * t + ch.phase).sin(),
    };

    let burst = match ch.hf_burst {
        Some(hf) if t >= hf.t_start_s && t <= hf.t_end_s().min(duration_s) => {
            hf.amplitude * (TAU * hf.frequency_hz * t + hf.phase).sin()
        }
        _ => 0.0,
    };

    let impulses = match ch.impulse_train {
        Some(tr) => {
            let k_count = tr.count(duration_s);
            (0..k_count)
                .map(|k| {
                    let tau = t - k as f64 * tr.period_s;
                    // kernel params validated at sampling time
                    impulse_kernel(tau, tr.amplitude, tr.width_s).unwrap_or(0.0)
                })
                .sum()
        }
        None => 0.0,
    };

    base + burst + impulses
}

/// Noise standard deviation of one channel at time `t`.
pub fn noise_std_at(ch: &ChannelParams, t: f64) -> f64 {
    match ch.noise_change {
        Some(nc) if t >= nc.t_change_s => ch.noise_std + nc.delta_std,
        _ => ch.noise_std,
    }
}

/// Render the anomaly-free signal matrix (`n_channels x n_samples`), noise
/// included. Noise draws come from the instance's own stream, one Gaussian
/// per sample per channel.
pub fn render_clean(
    params: &InstanceParams,
    cfg: &GenConfig,
    rng: &mut SeededRng,
) -> Result<Vec<Vec<f64>>, GenError> {
    if params.channels.len() != cfg.n_channels {
        return Err(GenError::InvalidParameter(format!(
            "params have {} channels, config expects {}",
            params.channels.len(),
            cfg.n_channels
        )));
    }
    let n = cfg.n_samples();
    let mut data = Vec::with_capacity(params.channels.len());
    for ch in &params.channels {
        let mut samples = Vec::with_capacity(n);
        for i in 0..n {
            let t = i as f64 / cfg.sample_rate_hz;
            let noise = rng.next_gaussian(0.0, noise_std_at(ch, t))?;
            samples.push(clean_value(ch, t, cfg.duration_s) + noise);
        }
        data.push(samples);
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::params::{ImpulseTrain, SpeedChange};

    fn bare_channel(amplitude: f64, frequency_hz: f64) -> ChannelParams {
        ChannelParams {
            amplitude,
            frequency_hz,
            noise_std: 0.0,
            phase: 0.0,
            speed_change: None,
            noise_change: None,
            hf_burst: None,
            impulse_train: None,
        }
    }

    #[test]
    fn stage1_closed_form_sinusoid() {
        let ch = bare_channel(1.0, 1.0);
        // t = 0.25 s -> sin(pi/2) = 1
        assert!((clean_value(&ch, 0.25, 2.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_at_zero_is_beta() {
        assert_eq!(impulse_kernel(0.0, 1.5, 0.05).unwrap(), 1.5);
    }

    #[test]
    fn kernel_at_one_width_is_exp_minus_one() {
        let v = impulse_kernel(0.05, 1.0, 0.05).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn kernel_truncates_beyond_three_widths() {
        assert_eq!(impulse_kernel(0.2, 2.0, 0.05).unwrap(), 0.0);
        // boundary itself is inside
        let at_edge = impulse_kernel(0.15, 2.0, 0.05).unwrap();
        assert!((at_edge - 2.0 * (-9.0f64).exp()).abs() < 1e-14);
        // negative tau is before the impulse
        assert_eq!(impulse_kernel(-0.01, 2.0, 0.05).unwrap(), 0.0);
    }

    #[test]
    fn kernel_rejects_nonpositive_width() {
        assert!(impulse_kernel(0.0, 1.0, 0.0).is_err());
        assert!(impulse_kernel(0.0, 1.0, -0.1).is_err());
    }

    #[test]
    fn phase_continuity_at_change_time() {
        // with amp_factor = 1 both branch formulas agree at t_change
        let mut ch = bare_channel(1.3, 7.0);
        ch.phase = 0.9;
        ch.speed_change = Some(SpeedChange { t_change_s: 0.77, freq_factor: 1.4, amp_factor: 1.0 });
        let sc = ch.speed_change.unwrap();
        let left = ch.amplitude * (TAU * ch.frequency_hz * sc.t_change_s + ch.phase).sin();
        let right = clean_value(&ch, sc.t_change_s, 2.0);
        assert!((left - right).abs() < 1e-9);
    }

    #[test]
    fn impulse_train_count() {
        let tr = ImpulseTrain { period_s: 0.3, amplitude: 1.0, width_s: 0.05 };
        assert_eq!(tr.count(2.0), 6);
        let tr = ImpulseTrain { period_s: 0.1, amplitude: 1.0, width_s: 0.05 };
        assert_eq!(tr.count(2.0), 20);
    }
}
