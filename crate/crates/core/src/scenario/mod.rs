//! Experiment configuration, UE population, activity draws and power control.

mod config;
mod pathloss;
mod population;

pub use config::{
    ChannelConfig, DetectionConfig, LinkBudget, PopulationConfig, PopulationPolicy, PowerControl,
    RunConfig, Scenario, SystemConfig,
};
pub use pathloss::{PathlossModel, PathlossParams};
pub use population::{
    build_population, draw_activity, open_loop_power_control, ActivityPattern, UePopulation,
};

pub(crate) use config::parse_kebab;
