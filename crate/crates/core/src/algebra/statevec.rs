//! Double-precision state vectors over the mode set.

use std::collections::BTreeMap;

use num_complex::Complex;

use super::scalar::C64;
use crate::model::{ModeClass, SpectralModel};

/// Truncated modal coordinates of a state, one complex entry per mode.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StateVector {
    entries: BTreeMap<i32, C64>,
}

impl StateVector {
    pub fn new() -> Self {
        StateVector::default()
    }

    pub fn from_entries<I: IntoIterator<Item = (i32, C64)>>(entries: I) -> Self {
        StateVector {
            entries: entries.into_iter().collect(),
        }
    }

    /// Zero state covering every mode of the model.
    pub fn zeros(model: &SpectralModel) -> Self {
        StateVector {
            entries: model
                .modes()
                .iter()
                .map(|&j| (j, Complex::new(0.0, 0.0)))
                .collect(),
        }
    }

    pub fn set(&mut self, mode: i32, value: C64) {
        self.entries.insert(mode, value);
    }

    pub fn get(&self, mode: i32) -> Option<C64> {
        self.entries.get(&mode).copied()
    }

    pub fn entry_or_zero(&self, mode: i32) -> C64 {
        self.get(mode).unwrap_or_else(|| Complex::new(0.0, 0.0))
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, C64)> + '_ {
        self.entries.iter().map(|(&m, &v)| (m, v))
    }

    pub fn modes(&self) -> impl Iterator<Item = i32> + '_ {
        self.entries.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Plain l2 norm of the modal coefficients.
    pub fn norm(&self) -> f64 {
        self.entries
            .values()
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// l2 norm of the components lying in one trichotomy class.
    pub fn class_norm(&self, model: &SpectralModel, class: ModeClass) -> f64 {
        self.entries
            .iter()
            .filter(|(&m, _)| model.classify(m).map_or(false, |c| c == class))
            .map(|(_, v)| v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&self, s: f64) -> StateVector {
        StateVector {
            entries: self.entries.iter().map(|(&m, &v)| (m, v * s)).collect(),
        }
    }

    pub fn add(&self, other: &StateVector) -> StateVector {
        let mut out = self.entries.clone();
        for (&m, &v) in &other.entries {
            *out.entry(m).or_insert_with(|| Complex::new(0.0, 0.0)) += v;
        }
        StateVector { entries: out }
    }

    pub fn sub(&self, other: &StateVector) -> StateVector {
        self.add(&other.scale(-1.0))
    }

    pub fn is_finite(&self) -> bool {
        self.entries
            .values()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }
}
