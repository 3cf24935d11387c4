use serde::{Deserialize, Serialize};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Named pathloss presets.
///
/// `UmaNlos` and `UmiNlos` follow the TR 38.901 urban macro and urban micro
/// (street canyon) NLoS formulas, including the LoS floor and breakpoint.
/// `LogDistance` is `reference_loss_db + 10 n log10(d / 1 m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathlossModel {
    UmaNlos,
    UmiNlos,
    LogDistance,
}

impl PathlossModel {
    pub fn default_shadowing_db(self) -> f64 {
        match self {
            PathlossModel::UmaNlos => 6.0,
            PathlossModel::UmiNlos => 7.82,
            PathlossModel::LogDistance => 8.0,
        }
    }

    pub fn default_bs_height_m(self) -> f64 {
        match self {
            PathlossModel::UmaNlos => 25.0,
            PathlossModel::UmiNlos => 10.0,
            PathlossModel::LogDistance => 25.0,
        }
    }
}

/// Resolved pathloss parameters (presets plus overrides).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathlossParams {
    pub model: PathlossModel,
    pub carrier_ghz: f64,
    pub bs_height_m: f64,
    pub ue_height_m: f64,
    pub shadowing_db: f64,
    pub exponent: f64,
    pub reference_loss_db: f64,
}

impl PathlossParams {
    /// Median pathloss in dB at horizontal distance `d2d` metres.
    pub fn loss_db(&self, d2d: f64) -> f64 {
        let dh = self.bs_height_m - self.ue_height_m;
        let d3d = (d2d * d2d + dh * dh).sqrt();
        let fc = self.carrier_ghz;
        match self.model {
            PathlossModel::UmaNlos => {
                let los = self.los_db(d2d, d3d, 28.0, 22.0, 9.0);
                let nlos = 13.54 + 39.08 * d3d.log10() + 20.0 * fc.log10()
                    - 0.6 * (self.ue_height_m - 1.5);
                los.max(nlos)
            }
            PathlossModel::UmiNlos => {
                let los = self.los_db(d2d, d3d, 32.4, 21.0, 9.5);
                let nlos = 35.3 * d3d.log10() + 22.4 + 21.3 * fc.log10()
                    - 0.3 * (self.ue_height_m - 1.5);
                los.max(nlos)
            }
            PathlossModel::LogDistance => {
                self.reference_loss_db + 10.0 * self.exponent * d3d.max(1.0).log10()
            }
        }
    }

    // LoS pathloss with the effective-height breakpoint (environment height 1 m).
    fn los_db(&self, d2d: f64, d3d: f64, intercept: f64, slope: f64, bp_coeff: f64) -> f64 {
        let fc = self.carrier_ghz;
        let h_bs = self.bs_height_m - 1.0;
        let h_ut = self.ue_height_m - 1.0;
        let d_bp = 4.0 * h_bs * h_ut * fc * 1e9 / SPEED_OF_LIGHT;
        if d2d <= d_bp {
            intercept + slope * d3d.log10() + 20.0 * fc.log10()
        } else {
            let dh = self.bs_height_m - self.ue_height_m;
            intercept + 40.0 * d3d.log10() + 20.0 * fc.log10()
                - bp_coeff * (d_bp * d_bp + dh * dh).log10()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(model: PathlossModel) -> PathlossParams {
        PathlossParams {
            model,
            carrier_ghz: 4.0,
            bs_height_m: model.default_bs_height_m(),
            ue_height_m: 1.5,
            shadowing_db: 0.0,
            exponent: 3.5,
            reference_loss_db: 30.0,
        }
    }

    #[test]
    fn uma_nlos_reference_value() {
        // 150 m ground distance, 23.5 m height difference, 4 GHz
        let d3d = (150f64.powi(2) + 23.5f64.powi(2)).sqrt();
        let expected = 13.54 + 39.08 * d3d.log10() + 20.0 * 4f64.log10();
        assert!((params(PathlossModel::UmaNlos).loss_db(150.0) - expected).abs() < 1e-12);
    }

    #[test]
    fn umi_nlos_reference_value() {
        let d3d = (100f64.powi(2) + 8.5f64.powi(2)).sqrt();
        let expected = 35.3 * d3d.log10() + 22.4 + 21.3 * 4f64.log10();
        assert!((params(PathlossModel::UmiNlos).loss_db(100.0) - expected).abs() < 1e-12);
    }

    #[test]
    fn loss_is_non_decreasing_in_distance() {
        for model in [PathlossModel::UmaNlos, PathlossModel::UmiNlos, PathlossModel::LogDistance] {
            let p = params(model);
            let mut prev = f64::NEG_INFINITY;
            for i in 1..5000 {
                let l = p.loss_db(i as f64);
                assert!(l >= prev - 1e-9, "{model:?} at {i} m");
                prev = l;
            }
        }
    }
}
