//! Synthetic multicomponent seismograms from the acoustic propagator.

use serde::{Deserialize, Serialize};
use uvot_core::{Grid2, SignedSignal2};
use uvot_fwi::model::two_layer;
use uvot_fwi::{forward, AcousticModel, Source, Sponge};

use crate::error::{ExperimentError, Result};

/// A line of receivers near the top of a layered medium, with the source
/// at the middle receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub receivers: usize,
    /// Time samples per trace; one per propagator step.
    pub samples: usize,
    pub nz: usize,
    pub h: f64,
    pub dt: f64,
    pub rho: f64,
    pub freq: f64,
    pub sponge: Sponge,
    /// Nodes between the sponge and the receiver line.
    pub depth: usize,
    pub c_top: f64,
    pub c_bottom: f64,
    pub interface: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            receivers: 64,
            samples: 512,
            nz: 64,
            h: 10.0,
            dt: 1.5e-3,
            rho: 1000.0,
            freq: 15.0,
            sponge: Sponge::default(),
            depth: 2,
            c_top: 2000.0,
            c_bottom: 2500.0,
            interface: 34,
        }
    }
}

impl SynthSpec {
    fn margin(&self) -> usize {
        self.sponge.width + self.depth
    }

    pub fn grid(&self) -> Result<Grid2> {
        Ok(Grid2::new(self.receivers + 2 * self.margin(), self.nz, self.h, self.h)?)
    }

    pub fn receiver_nodes(&self) -> Vec<(usize, usize)> {
        let m = self.margin();
        (0..self.receivers).map(|r| (m + r, m)).collect()
    }

    pub fn layered(&self) -> Result<Vec<f64>> {
        if self.interface >= self.nz {
            return Err(ExperimentError::InvalidSpec(format!("interface row {} outside the model", self.interface)));
        }
        Ok(two_layer(&self.grid()?, self.interface, self.c_top, self.c_bottom))
    }

    pub fn model(&self, velocity: Vec<f64>) -> Result<AcousticModel> {
        if self.receivers == 0 || self.samples < 2 {
            return Err(ExperimentError::InvalidSpec("need receivers and at least two samples".into()));
        }
        let receivers = self.receiver_nodes();
        let model = AcousticModel {
            grid: self.grid()?,
            velocity,
            rho: self.rho,
            dt: self.dt,
            nt: self.samples,
            source: Source::new(receivers[self.receivers / 2], self.freq),
            receivers,
            sponge: self.sponge,
        };
        model.validate()?;
        Ok(model)
    }

    /// Traces on the square trace grid: receivers along `x`, time along `y`.
    pub fn record(&self, velocity: Vec<f64>) -> Result<SignedSignal2> {
        Ok(forward(&self.model(velocity)?, false)?.traces)
    }

    /// Seismograms of the layered model and of a copy whose interface is
    /// `offset` rows deeper and whose lower layer is `contrast` m/s faster.
    pub fn pair(&self, offset: usize, contrast: f64) -> Result<(SignedSignal2, SignedSignal2)> {
        let other = SynthSpec {
            interface: self.interface + offset,
            c_bottom: self.c_bottom + contrast,
            ..self.clone()
        };
        Ok((self.record(self.layered()?)?, self.record(other.layered()?)?))
    }

    pub fn duration(&self) -> f64 {
        self.dt * (self.samples - 1) as f64
    }

    pub fn extent(&self) -> f64 {
        self.h * (self.receivers.max(2) - 1) as f64
    }
}

/// Both signals divided by their common largest sample magnitude.
pub fn normalize(a: &SignedSignal2, b: &SignedSignal2) -> (SignedSignal2, SignedSignal2) {
    let m = a.max_abs().max(b.max_abs());
    if m == 0.0 {
        return (a.clone(), b.clone());
    }
    (a.scaled(1.0 / m), b.scaled(1.0 / m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry() {
        let s = SynthSpec::default();
        let g = s.grid().unwrap();
        assert_eq!((g.nx(), g.ny()), (92, 64));
        let r = s.receiver_nodes();
        assert_eq!((r.len(), r[0], r[63]), (64, (14, 14), (77, 14)));
        assert!(s.model(s.layered().unwrap()).is_ok());
    }
}
