use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::control::PidGains;
use crate::error::{config, Result};
use crate::estimator::FilterConfig;
use crate::pose_sources::{ImuConfig, ScriptedLoopClosure, SensorProfile};
use crate::reference::{HelixSpec, Plan, VerticalLimits};
use crate::vehicle::{PlantParams, MAX_DT};
use crate::{Axis, Vector3};

/// A built-in profile by name, or a full inline profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SensorSpec {
    Named(String),
    Inline(SensorProfile),
}

impl Default for SensorSpec {
    fn default() -> Self {
        SensorSpec::Named(SensorProfile::carto_like().name)
    }
}

impl SensorSpec {
    pub fn resolve(&self) -> Result<SensorProfile> {
        let profile = match self {
            SensorSpec::Named(name) => SensorProfile::builtin(name)
                .ok_or_else(|| config(format!("unknown sensor profile {name:?}")))?,
            SensorSpec::Inline(p) => p.clone(),
        };
        profile.validate()?;
        Ok(profile)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ReferenceSpec {
    Steps {
        #[serde(default = "default_hover")]
        hover: [f64; 3],
        #[serde(default = "default_axes")]
        axes: Vec<Axis>,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        #[serde(default = "default_hold_time")]
        hold_time: f64,
        #[serde(default = "default_repetitions")]
        repetitions: usize,
    },
    Helix {
        #[serde(default)]
        spec: HelixSpec,
    },
    Waypoints {
        waypoints: Vec<[f64; 3]>,
        #[serde(default)]
        dwell: f64,
        #[serde(default = "default_repetitions")]
        repeat: usize,
        #[serde(default = "default_cruise")]
        max_velocity: f64,
        #[serde(default = "default_cruise")]
        max_acceleration: f64,
    },
}

fn default_hover() -> [f64; 3] {
    [0.0, 0.0, 2.0]
}

fn default_axes() -> Vec<Axis> {
    Axis::ALL.to_vec()
}

fn default_amplitude() -> f64 {
    1.0
}

fn default_hold_time() -> f64 {
    15.0
}

fn default_repetitions() -> usize {
    2
}

fn default_cruise() -> f64 {
    0.5
}

impl Default for ReferenceSpec {
    fn default() -> Self {
        Self::steps()
    }
}

impl ReferenceSpec {
    /// Default step experiment on all three axes.
    pub fn steps() -> Self {
        ReferenceSpec::Steps {
            hover: default_hover(),
            axes: default_axes(),
            amplitude: default_amplitude(),
            hold_time: default_hold_time(),
            repetitions: default_repetitions(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ReferenceSpec::Steps { .. } => "steps",
            ReferenceSpec::Helix { .. } => "helix",
            ReferenceSpec::Waypoints { .. } => "waypoints",
        }
    }

    pub fn plan(&self, limits: &VerticalLimits) -> Result<Plan> {
        match self {
            ReferenceSpec::Steps { hover, axes, amplitude, hold_time, repetitions } => {
                if axes.is_empty() {
                    return Err(config("step reference needs at least one axis"));
                }
                Plan::step_mission(Vector3::from(*hover), axes, *amplitude, *hold_time, *repetitions, limits)
            }
            ReferenceSpec::Helix { spec } => Plan::helix_mission(spec.clone(), limits),
            ReferenceSpec::Waypoints { waypoints, dwell, repeat, max_velocity, max_acceleration } => {
                let wps: Vec<Vector3> = waypoints.iter().map(|w| Vector3::from(*w)).collect();
                Plan::waypoint_mission(&wps, *dwell, *repeat, *max_velocity, *max_acceleration, limits)
            }
        }
    }
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub seed: u64,
    /// Overrides the plan length; past the plan the last point is held.
    #[serde(default)]
    pub duration: Option<f64>,
    /// Master (plant) step, s.
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub sensor: SensorSpec,
    #[serde(default)]
    pub imu: ImuConfig,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub controller: PidGains,
    #[serde(default)]
    pub plant: PlantParams,
    #[serde(default)]
    pub reference: ReferenceSpec,
    #[serde(default)]
    pub vertical: VerticalLimits,
    /// Forced loop closures; when present they replace revisit detection.
    #[serde(default)]
    pub loop_closure_events: Vec<ScriptedLoopClosure>,
    /// Length of the immature-map window at the start, s.
    #[serde(default)]
    pub warmup: f64,
    /// Pose noise multiplier during the warmup window.
    #[serde(default = "default_warmup_noise_scale")]
    pub warmup_noise_scale: f64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_dt() -> f64 {
    0.005
}

fn default_warmup_noise_scale() -> f64 {
    1.0
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: None,
            seed: 0,
            duration: None,
            dt: default_dt(),
            sensor: SensorSpec::default(),
            imu: ImuConfig::default(),
            filter: FilterConfig::default(),
            controller: PidGains::default(),
            plant: PlantParams::default(),
            reference: ReferenceSpec::default(),
            vertical: VerticalLimits::default(),
            loop_closure_events: Vec::new(),
            warmup: 0.0,
            warmup_noise_scale: 1.0,
            output_dir: None,
        }
    }
}

/// A validated configuration with its references resolved.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    pub config: ScenarioConfig,
    pub profile: SensorProfile,
    pub plan: Plan,
    pub duration: f64,
    /// Master ticks per filter step.
    pub filter_ratio: u64,
}

impl ScenarioConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn with_sensor(mut self, profile: SensorProfile) -> Self {
        self.sensor = SensorSpec::Inline(profile);
        self
    }

    /// Scenario name, falling back to the sensor profile name.
    pub fn label(&self) -> String {
        if let Some(name) = &self.name {
            return name.clone();
        }
        match &self.sensor {
            SensorSpec::Named(n) => n.clone(),
            SensorSpec::Inline(p) => p.name.clone(),
        }
    }

    pub fn resolve(&self) -> Result<ResolvedScenario> {
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return Err(config(format!("dt must be in (0, {MAX_DT}], got {}", self.dt)));
        }
        let profile = self.sensor.resolve()?;
        self.imu.validate()?;
        self.filter.validate()?;
        self.controller.validate()?;
        self.plant.validate()?;
        let ratio = self.filter.ts / self.dt;
        if !(ratio >= 1.0 - 1e-9 && (ratio - ratio.round()).abs() < 1e-6) {
            return Err(config("filter period must be a whole multiple of dt"));
        }
        if !(self.warmup.is_finite() && self.warmup >= 0.0) {
            return Err(config("warmup must be non-negative"));
        }
        if !(self.warmup_noise_scale.is_finite() && self.warmup_noise_scale >= 0.0) {
            return Err(config("warmup noise scale must be non-negative"));
        }
        if self.loop_closure_events.iter().any(|e| !e.time.is_finite()) {
            return Err(config("loop-closure event times must be finite"));
        }
        let plan = self.reference.plan(&self.vertical)?;
        let duration = self.duration.unwrap_or_else(|| plan.duration());
        if !(duration.is_finite() && duration > 0.0) {
            return Err(config(format!("duration must be positive, got {duration}")));
        }
        Ok(ResolvedScenario {
            config: self.clone(),
            profile,
            plan,
            duration,
            filter_ratio: ratio.round() as u64,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_json_uses_defaults() {
        let cfg = ScenarioConfig::from_json_str(r#"{"seed": 3}"#).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.reference, ReferenceSpec::steps());
        assert_eq!(cfg.resolve().unwrap().profile, SensorProfile::carto_like());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ScenarioConfig::from_json_str(r#"{"sed": 3}"#).is_err());
        assert!(ScenarioConfig::from_json_str(r#"{"plant": {"mas": 3}}"#).is_err());
        assert!(ScenarioConfig::from_json_str(r#"{"reference": {"type": "helix", "foo": 1}}"#).is_err());
    }

    #[test]
    fn reference_variants_parse() {
        let cfg = ScenarioConfig::from_json_str(
            r#"{"reference": {"type": "helix", "spec": {"max_velocity": 2.0, "max_acceleration": 1.0}}}"#,
        )
        .unwrap();
        assert_eq!(cfg.reference, ReferenceSpec::Helix { spec: HelixSpec::fast() });
        let cfg = ScenarioConfig::from_json_str(
            r#"{"reference": {"type": "waypoints", "waypoints": [[0,0,2],[5,0,2]], "repeat": 3}}"#,
        )
        .unwrap();
        assert!(cfg.resolve().is_ok());
        let cfg = ScenarioConfig::from_json_str(r#"{"reference": {"type": "steps", "axes": ["x"]}}"#).unwrap();
        assert!(matches!(cfg.reference, ReferenceSpec::Steps { ref axes, .. } if axes == &[Axis::X]));
    }

    #[test]
    fn sensor_by_name_or_inline() {
        let cfg = ScenarioConfig::from_json_str(r#"{"sensor": "loam-like"}"#).unwrap();
        assert_eq!(cfg.resolve().unwrap().profile, SensorProfile::loam_like());
        let inline = serde_json::to_string(&SensorProfile::ideal(30.0)).unwrap();
        let cfg = ScenarioConfig::from_json_str(&format!(r#"{{"sensor": {inline}}}"#)).unwrap();
        assert_eq!(cfg.resolve().unwrap().profile.rate, 30.0);
        let cfg = ScenarioConfig::from_json_str(r#"{"sensor": "orb"}"#).unwrap();
        assert!(cfg.resolve().is_err());
    }

    #[test]
    fn invalid_values_fail_resolution() {
        let bad = [
            ScenarioConfig { duration: Some(0.0), ..Default::default() },
            ScenarioConfig { dt: 0.02, ..Default::default() },
            ScenarioConfig { dt: 0.003, ..Default::default() },
            ScenarioConfig { warmup: -1.0, ..Default::default() },
        ];
        for cfg in bad {
            assert!(cfg.resolve().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = ScenarioConfig { reference: ReferenceSpec::Helix { spec: HelixSpec::slow() }, ..Default::default() };
        let s = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ScenarioConfig::from_json_str(&s).unwrap(), cfg);
    }
}
