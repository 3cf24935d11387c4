use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};

use super::config::{dropped_count, PowerControl, Scenario};
use crate::linalg::db_to_linear;
use crate::{Error, Result};

/// Deployed UEs with their large-scale fading and power-control coefficients.
///
/// All per-UE vectors are indexed by deployed UE. `authorized` lists the
/// deployed indices of the UEs that hold a pilot, in pilot order.
#[derive(Debug, Clone, PartialEq)]
pub struct UePopulation {
    /// Horizontal distance from the BS in metres.
    pub radius_m: Vec<f64>,
    pub angle_rad: Vec<f64>,
    /// Large-scale fading as a linear power gain.
    pub beta: Vec<f64>,
    pub eta: Vec<f64>,
    pub retained: Vec<bool>,
    pub authorized: Vec<usize>,
}

impl UePopulation {
    pub fn deployed(&self) -> usize {
        self.beta.len()
    }

    pub fn authorized_beta(&self) -> Vec<f64> {
        self.authorized.iter().map(|&i| self.beta[i]).collect()
    }

    pub fn authorized_eta(&self) -> Vec<f64> {
        self.authorized.iter().map(|&i| self.eta[i]).collect()
    }

    /// Population built from explicit large-scale fading values; every UE is
    /// retained, authorized and at full power.
    pub fn from_beta(beta: Vec<f64>) -> Self {
        let n = beta.len();
        UePopulation {
            radius_m: vec![0.0; n],
            angle_rad: vec![0.0; n],
            eta: vec![1.0; n],
            retained: vec![true; n],
            authorized: (0..n).collect(),
            beta,
        }
    }

    /// Flags the `ceil(fraction * n)` UEs with the smallest beta as dropped.
    /// Ties are broken by index.
    pub fn apply_dropping(&mut self, fraction: f64) {
        let n = self.deployed();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| self.beta[a].total_cmp(&self.beta[b]).then(a.cmp(&b)));
        self.retained = vec![true; n];
        for &i in order.iter().take(dropped_count(fraction, n)) {
            self.retained[i] = false;
        }
    }
}

/// Draws UE positions uniformly over the cell area, their large-scale fading
/// and the dropping / authorization / power-control state.
pub fn build_population<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> Result<UePopulation> {
    scenario.validate()?;
    let pop = &scenario.population;
    let pathloss = scenario.pathloss();
    let n = pop.deployed_ues;
    let r_max2 = pop.cell_radius_m * pop.cell_radius_m;
    let r_min2 = pop.min_distance_m * pop.min_distance_m;
    let shadowing = Normal::new(0.0, pathloss.shadowing_db)
        .map_err(|e| Error::InvalidScenario(format!("shadowing: {e}")))?;

    let mut radius_m = Vec::with_capacity(n);
    let mut angle_rad = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random();
        let r = (r_min2 + u * (r_max2 - r_min2)).sqrt();
        let theta = rng.random::<f64>() * std::f64::consts::TAU;
        let sf = if pathloss.shadowing_db > 0.0 { shadowing.sample(rng) } else { 0.0 };
        radius_m.push(r);
        angle_rad.push(theta);
        beta.push(db_to_linear(-(pathloss.loss_db(r) + sf)));
    }

    let mut population = UePopulation {
        radius_m,
        angle_rad,
        eta: vec![1.0; n],
        retained: vec![true; n],
        authorized: Vec::new(),
        beta,
    };
    population.apply_dropping(pop.drop_fraction);

    let retained: Vec<usize> = (0..n).filter(|&i| population.retained[i]).collect();
    let k = scenario.system.authorized_ues;
    population.authorized = if retained.len() == k {
        retained
    } else {
        let mut picks: Vec<usize> = index::sample(rng, retained.len(), k)
            .into_iter()
            .map(|j| retained[j])
            .collect();
        picks.sort_unstable();
        picks
    };

    population.eta = match pop.power_control {
        PowerControl::FullPower => population
            .retained
            .iter()
            .map(|&r| if r { 1.0 } else { 0.0 })
            .collect(),
        PowerControl::OpenLoop => open_loop_power_control(&population)?,
    };
    Ok(population)
}

/// Indicator of which authorized UEs transmit in one interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivityPattern {
    pub indicator: Vec<bool>,
    /// Active authorized-UE indices, ascending.
    pub active: Vec<usize>,
}

impl ActivityPattern {
    pub fn from_active(ues: usize, active: &[usize]) -> Self {
        let mut indicator = vec![false; ues];
        for &k in active {
            indicator[k] = true;
        }
        let active = (0..ues).filter(|&k| indicator[k]).collect();
        ActivityPattern { indicator, active }
    }

    pub fn count(&self) -> usize {
        self.active.len()
    }
}

/// Draws the active count from Poisson(mean_active) clamped to K, then picks
/// that many distinct authorized UEs uniformly.
pub fn draw_activity<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> ActivityPattern {
    let k = scenario.system.authorized_ues;
    let lambda = scenario.system.mean_active;
    let n = if lambda > 0.0 {
        let count: f64 = Poisson::new(lambda).expect("validated mean").sample(rng);
        (count as usize).min(k)
    } else {
        0
    };
    let active: Vec<usize> = index::sample(rng, k, n).into_iter().collect();
    ActivityPattern::from_active(k, &active)
}

/// Open-loop power control: `eta_k = min_{j in R} beta_j / beta_k` over the
/// retained set `R`; dropped UEs get zero.
pub fn open_loop_power_control(population: &UePopulation) -> Result<Vec<f64>> {
    let weakest = population
        .beta
        .iter()
        .zip(&population.retained)
        .filter(|(_, &r)| r)
        .map(|(&b, _)| b)
        .fold(f64::INFINITY, f64::min);
    if !weakest.is_finite() {
        return Err(Error::EmptyRetainedSet);
    }
    Ok(population
        .beta
        .iter()
        .zip(&population.retained)
        .map(|(&b, &r)| if r { weakest / b } else { 0.0 })
        .collect())
}
