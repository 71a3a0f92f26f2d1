//! Hardware parameter sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::NoiseParams;
use crate::timing::{LinkParams, FIBER_LIGHT_SPEED};

pub const DEFAULT_NMUX: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardwareParams {
    pub p_cou: f64,
    pub eta_d: f64,
    pub alpha_db_km: f64,
    pub noise: NoiseParams,
    pub c_km_s: f64,
    pub nmux: usize,
}

impl HardwareParams {
    pub fn link(&self, l0_km: f64, ncode: usize) -> LinkParams {
        LinkParams {
            p_cou: self.p_cou,
            eta_d: self.eta_d,
            alpha_db_km: self.alpha_db_km,
            l0_km,
            c_km_s: self.c_km_s,
            nmux: self.nmux,
            ncode,
        }
    }

    /// Same optics and geometry with all error sources removed.
    pub fn noiseless(&self) -> Self {
        Self {
            noise: NoiseParams::noiseless(),
            ..*self
        }
    }
}

pub fn load_stage(n: u8) -> Result<HardwareParams> {
    let (p_cou, eta_d, alpha_db_km, f0, beta, delta, t_coh) = match n {
        1 => (0.2, 0.9, 0.2, 0.97, 0.005, 0.005, 0.25),
        2 => (0.4, 0.9, 0.15, 0.99, 0.001, 0.001, 1.0),
        3 => (0.5, 0.95, 0.1, 0.999, 0.0001, 0.0001, 2.5),
        other => return Err(Error::UnknownStage(other)),
    };
    Ok(HardwareParams {
        p_cou,
        eta_d,
        alpha_db_km,
        noise: NoiseParams {
            f0,
            beta,
            delta,
            t_coh,
        },
        c_km_s: FIBER_LIGHT_SPEED,
        nmux: DEFAULT_NMUX,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        assert_eq!(load_stage(2).unwrap().noise.f0, 0.99);
        assert_eq!(load_stage(3).unwrap().alpha_db_km, 0.1);
        assert_eq!(load_stage(1).unwrap().noise.t_coh, 0.25);
        for n in 1..=3 {
            let hw = load_stage(n).unwrap();
            assert_eq!(hw.nmux, 12);
            assert_eq!(hw.c_km_s, 200_000.0);
            hw.noise.validate().unwrap();
        }
        assert!(matches!(load_stage(4), Err(Error::UnknownStage(4))));
    }
}
