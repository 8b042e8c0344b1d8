//! Link-budget arithmetic: free-space path gain, SNR, TDMA-scaled Shannon
//! rate and the SNR reliability predicate used for offloaders.

use serde::{Deserialize, Serialize};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Distances below this are clamped so the free-space gain never exceeds the
/// near-field value at 1 m.
pub const MIN_DISTANCE_M: f64 = 1.0;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Free-space power gain `(c / (4 pi f d))^2`, with `d` clamped to
/// [`MIN_DISTANCE_M`].
pub fn path_gain(distance_m: f64, carrier_freq_hz: f64) -> f64 {
    let d = distance_m.max(MIN_DISTANCE_M);
    let a = SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * carrier_freq_hz * d);
    a * a
}

/// Linear SNR of a link with the whole bandwidth as the noise bandwidth.
pub fn snr(tx_power_w: f64, gain: f64, bandwidth_hz: f64, noise_psd_w_hz: f64) -> f64 {
    tx_power_w * gain / (noise_psd_w_hz * bandwidth_hz)
}

/// Shannon rate of a device holding fraction `tau` of a TDMA frame:
/// `tau * B * log2(1 + p g / (N0 B))` in bit/s.
pub fn achievable_rate(
    tx_power_w: f64,
    gain: f64,
    tau: f64,
    bandwidth_hz: f64,
    noise_psd_w_hz: f64,
) -> f64 {
    if tau <= 0.0 || gain <= 0.0 {
        return 0.0;
    }
    tau * spectral_rate(
        snr(tx_power_w, gain, bandwidth_hz, noise_psd_w_hz),
        bandwidth_hz,
    )
}

/// Rate at `tau = 1` for a given linear SNR.
pub fn spectral_rate(snr: f64, bandwidth_hz: f64) -> f64 {
    bandwidth_hz * (1.0 + snr).log2()
}

/// Boundary-inclusive SNR threshold check.
pub fn reliability_ok(snr: f64, min_snr: f64) -> bool {
    snr >= min_snr
}

/// Instantaneous state of one device-server link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkState {
    pub path_gain: f64,
    pub fading: f64,
    pub snr: f64,
}

impl LinkState {
    pub fn new(
        path_gain: f64,
        fading: f64,
        tx_power_w: f64,
        bandwidth_hz: f64,
        noise_psd_w_hz: f64,
    ) -> Self {
        Self {
            path_gain,
            fading,
            snr: snr(tx_power_w, path_gain * fading, bandwidth_hz, noise_psd_w_hz),
        }
    }

    /// Rate at a full frame.
    pub fn full_frame_rate(&self, bandwidth_hz: f64) -> f64 {
        spectral_rate(self.snr, bandwidth_hz)
    }
}

/// Instantaneous linear SNR from every device to every server.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    snr: Vec<Vec<f64>>,
    bandwidth_hz: f64,
}

impl Channel {
    pub fn new(snr: Vec<Vec<f64>>, bandwidth_hz: f64) -> Self {
        Self { snr, bandwidth_hz }
    }

    /// Channel from path gains scaled elementwise by `fading`.
    pub fn from_gains(
        gains: &[Vec<f64>],
        fading: &[Vec<f64>],
        tx_power_w: f64,
        bandwidth_hz: f64,
        noise_psd_w_hz: f64,
    ) -> Self {
        let snr = gains
            .iter()
            .zip(fading)
            .map(|(g, h)| {
                g.iter()
                    .zip(h)
                    .map(|(g, h)| snr(tx_power_w, g * h, bandwidth_hz, noise_psd_w_hz))
                    .collect()
            })
            .collect();
        Self { snr, bandwidth_hz }
    }

    pub fn snr(&self, device: usize, server: usize) -> f64 {
        self.snr[device][server]
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz
    }

    /// Rate of `device` towards `server` when holding the whole frame.
    pub fn full_frame_rate(&self, device: usize, server: usize) -> f64 {
        spectral_rate(self.snr[device][server], self.bandwidth_hz)
    }

    pub fn n_devices(&self) -> usize {
        self.snr.len()
    }
}
