//! Reference signals. Each channel is zero before `delay` and after
//! `stop`; step and pulse channels are piecewise constant and report their
//! jump instants so the simulator can split steps there.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    Zero,
    Step,
    PulseTrain,
    Sine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputChannel {
    pub kind: InputKind,
    #[serde(default)]
    pub amplitude: f64,
    /// Hz, for pulse trains and sines.
    #[serde(default)]
    pub frequency_hz: f64,
    /// High fraction of each pulse period.
    #[serde(default = "default_duty")]
    pub duty: f64,
    #[serde(default)]
    pub delay: f64,
    /// Signal is zero from this time on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
}

fn default_duty() -> f64 {
    0.5
}

impl InputChannel {
    pub fn zero() -> Self {
        InputChannel {
            kind: InputKind::Zero,
            amplitude: 0.0,
            frequency_hz: 0.0,
            duty: 0.5,
            delay: 0.0,
            stop: None,
        }
    }

    pub fn step(amplitude: f64) -> Self {
        InputChannel {
            kind: InputKind::Step,
            amplitude,
            ..Self::zero()
        }
    }

    pub fn pulse_train(amplitude: f64, frequency_hz: f64, duty: f64) -> Self {
        InputChannel {
            kind: InputKind::PulseTrain,
            amplitude,
            frequency_hz,
            duty,
            ..Self::zero()
        }
    }

    pub fn sine(amplitude: f64, frequency_hz: f64) -> Self {
        InputChannel {
            kind: InputKind::Sine,
            amplitude,
            frequency_hz,
            ..Self::zero()
        }
    }

    pub fn with_stop(mut self, stop: f64) -> Self {
        self.stop = Some(stop);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let periodic = matches!(self.kind, InputKind::PulseTrain | InputKind::Sine);
        if !self.amplitude.is_finite() || !self.delay.is_finite() || self.delay < 0.0 {
            return Err(Error::InvalidConfig("input amplitude/delay must be finite, delay >= 0".into()));
        }
        if periodic && !(self.frequency_hz > 0.0 && self.frequency_hz.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "periodic input needs frequency > 0, got {}",
                self.frequency_hz
            )));
        }
        if self.kind == InputKind::PulseTrain && !(self.duty > 0.0 && self.duty < 1.0) {
            return Err(Error::InvalidConfig(format!("pulse duty must lie in (0, 1), got {}", self.duty)));
        }
        if let Some(s) = self.stop {
            if !(s.is_finite() && s >= self.delay) {
                return Err(Error::InvalidConfig(format!("input stop {s} precedes its delay")));
            }
        }
        Ok(())
    }

    fn active(&self, t: f64) -> bool {
        t >= self.delay && self.stop.map_or(true, |s| t < s)
    }

    /// Value at `t` with the on/off and pulse level decided at `t_level`.
    /// Within a step segment that contains no jump, `t_level` is the
    /// segment midpoint, which picks the correct one-sided limit at either
    /// end.
    pub fn value_at(&self, t: f64, t_level: f64) -> f64 {
        if !self.active(t_level) {
            return 0.0;
        }
        match self.kind {
            InputKind::Zero => 0.0,
            InputKind::Step => self.amplitude,
            InputKind::PulseTrain => {
                let phase = ((t_level - self.delay) * self.frequency_hz).fract();
                if phase < self.duty {
                    self.amplitude
                } else {
                    0.0
                }
            }
            InputKind::Sine => self.amplitude * (2.0 * PI * self.frequency_hz * (t - self.delay)).sin(),
        }
    }

    /// Right-continuous value.
    pub fn value(&self, t: f64) -> f64 {
        self.value_at(t, t)
    }

    pub fn derivative_at(&self, t: f64, t_level: f64) -> f64 {
        if self.kind != InputKind::Sine || !self.active(t_level) {
            return 0.0;
        }
        let w = 2.0 * PI * self.frequency_hz;
        self.amplitude * w * (w * (t - self.delay)).cos()
    }

    /// Instants in the open interval `(t0, t1)` where the value jumps.
    pub fn jumps_in(&self, t0: f64, t1: f64, out: &mut Vec<f64>) {
        if self.kind == InputKind::Zero || self.amplitude == 0.0 {
            return;
        }
        let mut push = |t: f64| {
            if t > t0 && t < t1 && self.stop.map_or(true, |s| t <= s) && t >= self.delay {
                out.push(t);
            }
        };
        // A sine starts from zero but its slope still jumps at the delay.
        push(self.delay);
        if let Some(s) = self.stop {
            push(s);
        }
        if self.kind == InputKind::PulseTrain {
            let period = 1.0 / self.frequency_hz;
            let first = ((t0 - self.delay) / period).floor().max(0.0) as u64;
            let mut k = first;
            loop {
                let rise = self.delay + k as f64 * period;
                if rise >= t1 {
                    break;
                }
                push(rise);
                push(rise + self.duty * period);
                k += 1;
            }
        }
    }

    /// Latest instant at or before `t` where the value actually changes.
    pub fn last_jump_before(&self, t: f64) -> Option<f64> {
        let mut v = Vec::new();
        self.jumps_in(-1.0, t + f64::EPSILON * t.abs().max(1.0), &mut v);
        v.into_iter()
            .filter(|&s| {
                let d = 1e-9 * s.abs().max(1e-3);
                self.value_at(s, s - d) != self.value_at(s, s + d)
            })
            .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.max(x))))
    }
}

/// One channel per plant input (or controller input for a bare HIGS).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSignal {
    pub channels: Vec<InputChannel>,
}

impl InputSignal {
    pub fn zero(channels: usize) -> Self {
        InputSignal {
            channels: vec![InputChannel::zero(); channels],
        }
    }

    pub fn uniform(channel: InputChannel, channels: usize) -> Self {
        InputSignal {
            channels: vec![channel; channels],
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.channels.iter().try_for_each(InputChannel::validate)
    }

    pub fn eval(&self, t: f64, t_level: f64, r: &mut [f64], rdot: &mut [f64]) {
        for (i, ch) in self.channels.iter().enumerate() {
            r[i] = ch.value_at(t, t_level);
            rdot[i] = ch.derivative_at(t, t_level);
        }
    }

    /// Sorted, deduplicated jump instants in `(t0, t1)`.
    pub fn jumps_in(&self, t0: f64, t1: f64) -> Vec<f64> {
        let mut v = Vec::new();
        for ch in &self.channels {
            ch.jumps_in(t0, t1, &mut v);
        }
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// Latest jump of any channel at or before `t`.
    pub fn last_jump_before(&self, t: f64) -> Option<f64> {
        self.channels
            .iter()
            .filter_map(|c| c.last_jump_before(t))
            .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.max(x))))
    }
}
