//! Traffic scenarios: configuration and the arrival stream they generate.
//!
//! Times are in ticks of one millisecond.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

use crate::batchverify::DEFAULT_SECURITY_BITS;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("line {line}: {reason}")]
    Line { line: usize, reason: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendChoice {
    Transparent,
    Curve,
}

impl FromStr for BackendChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "transparent" => Ok(Self::Transparent),
            "curve" => Ok(Self::Curve),
            other => Err(format!("unknown backend `{other}` (expected transparent or curve)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchSize {
    Auto,
    Fixed(usize),
}

impl FromStr for BatchSize {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(Self::Auto);
        }
        match s.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Self::Fixed(n)),
            _ => Err(format!("batch size `{s}` is neither `auto` nor a positive integer")),
        }
    }
}

/// A priority class: messages of this class carry `weight` and are due
/// `due_offset` ticks after arrival. `share` is the relative frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorityClass {
    pub name: String,
    pub weight: u64,
    pub due_offset: i64,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub vehicles: usize,
    pub groups: usize,
    /// Messages per second per vehicle.
    pub rate_per_vehicle: f64,
    pub horizon_ms: i64,
    /// Uniform extra delay in `[0, jitter_ms]` added to every arrival.
    pub jitter_ms: i64,
    pub seed: u64,
    pub forgery_rate: f64,
    pub backend: BackendChoice,
    pub security_bits: u32,
    pub batch_size: BatchSize,
    /// Upper bound for automatic batch sizes and for the calibration sweep.
    pub max_batch: usize,
    pub classes: Vec<PriorityClass>,
    /// Stage-one processing time per signature.
    pub processing_ticks: i64,
    /// Setup time `s_b` of a stage-two batch.
    pub setup_ticks: i64,
    /// Stage-two cost `fixed + per_item · b` used by the calibration sweep.
    pub batch_fixed_ticks: i64,
    pub batch_item_ticks: i64,
    /// `None` means unbounded.
    pub lateness_budget: Option<i64>,
}

impl Default for Scenario {
    /// Vehicles beacon every 100-300 ms; 5 messages per second sits in
    /// the middle of that range.
    fn default() -> Self {
        Self {
            vehicles: 20,
            groups: 1,
            rate_per_vehicle: 5.0,
            horizon_ms: 1000,
            jitter_ms: 0,
            seed: 1,
            forgery_rate: 0.0,
            backend: BackendChoice::Transparent,
            security_bits: DEFAULT_SECURITY_BITS,
            batch_size: BatchSize::Auto,
            max_batch: 16,
            classes: vec![PriorityClass {
                name: "normal".into(),
                weight: 1,
                due_offset: 100,
                share: 1.0,
            }],
            processing_ticks: 1,
            setup_ticks: 1,
            batch_fixed_ticks: 2,
            batch_item_ticks: 1,
            lateness_budget: None,
        }
    }
}

fn parse_value<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T, ScenarioError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ScenarioError::Line {
        line,
        reason: format!("{key}: {e}"),
    })
}

impl Scenario {
    /// Parses `key = value` lines on top of the defaults. `#` starts a
    /// comment. The first `class.*` line replaces the default class.
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let mut sc = Scenario::default();
        let mut custom_classes = false;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ScenarioError::Line {
                line,
                reason: format!("expected key = value, got `{content}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "vehicles" => sc.vehicles = parse_value(line, key, value)?,
                "groups" => sc.groups = parse_value(line, key, value)?,
                "rate_per_vehicle" => sc.rate_per_vehicle = parse_value(line, key, value)?,
                "horizon_ms" => sc.horizon_ms = parse_value(line, key, value)?,
                "jitter_ms" => sc.jitter_ms = parse_value(line, key, value)?,
                "seed" => sc.seed = parse_value(line, key, value)?,
                "forgery_rate" => sc.forgery_rate = parse_value(line, key, value)?,
                "backend" => sc.backend = parse_value(line, key, value)?,
                "l" => sc.security_bits = parse_value(line, key, value)?,
                "batch_size" => sc.batch_size = parse_value(line, key, value)?,
                "max_batch" => sc.max_batch = parse_value(line, key, value)?,
                "processing_ticks" => sc.processing_ticks = parse_value(line, key, value)?,
                "setup_ticks" => sc.setup_ticks = parse_value(line, key, value)?,
                "batch_fixed_ticks" => sc.batch_fixed_ticks = parse_value(line, key, value)?,
                "batch_item_ticks" => sc.batch_item_ticks = parse_value(line, key, value)?,
                "lateness_budget" => {
                    sc.lateness_budget = match value {
                        "none" | "inf" => None,
                        v => Some(parse_value(line, key, v)?),
                    }
                }
                _ if key.starts_with("class.") => {
                    let name = &key["class.".len()..];
                    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
                    let [w, due, share] = parts[..] else {
                        return Err(ScenarioError::Line {
                            line,
                            reason: format!("{key}: expected weight,due_offset_ms,share"),
                        });
                    };
                    if !custom_classes {
                        sc.classes.clear();
                        custom_classes = true;
                    }
                    sc.classes.push(PriorityClass {
                        name: name.to_string(),
                        weight: parse_value(line, key, w)?,
                        due_offset: parse_value(line, key, due)?,
                        share: parse_value(line, key, share)?,
                    });
                }
                _ => {
                    return Err(ScenarioError::Line {
                        line,
                        reason: format!("unknown key `{key}`"),
                    })
                }
            }
        }
        sc.validate()?;
        Ok(sc)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: &str| Err(ScenarioError::Invalid(m.to_string()));
        if self.groups == 0 {
            return bad("groups must be at least 1");
        }
        if self.rate_per_vehicle.is_nan() || self.rate_per_vehicle <= 0.0 || self.rate_per_vehicle.is_infinite() {
            return bad("rate_per_vehicle must be positive");
        }
        if self.horizon_ms < 0 || self.jitter_ms < 0 {
            return bad("horizon_ms and jitter_ms must be nonnegative");
        }
        if !(0.0..=1.0).contains(&self.forgery_rate) {
            return bad("forgery_rate must lie in [0, 1]");
        }
        if !(1..=64).contains(&self.security_bits) {
            return bad("l must lie in 1..=64");
        }
        if self.max_batch < 2 {
            return bad("max_batch must be at least 2");
        }
        if self.processing_ticks < 1 {
            return bad("processing_ticks must be at least 1");
        }
        if self.classes.is_empty() || self.classes.iter().any(|c| c.share.is_nan() || c.share <= 0.0 || c.due_offset < 0) {
            return bad("every class needs a positive share and a nonnegative due offset");
        }
        Ok(())
    }
}

/// One message to be signed and verified.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arrival {
    pub tick: i64,
    pub due: i64,
    pub weight: u64,
    pub vehicle: usize,
    pub group: usize,
    pub message: Vec<u8>,
    pub forged: bool,
}

/// Draws the arrival stream: an independent Poisson process per vehicle,
/// plus jitter, sorted by arrival tick. Deterministic in `scenario.seed`.
pub fn gen_arrivals(scenario: &Scenario) -> Vec<Arrival> {
    let mut rng = ChaCha20Rng::seed_from_u64(scenario.seed);
    let per_ms = scenario.rate_per_vehicle / 1000.0;
    let gap = Exp::new(per_ms).expect("rate validated positive");
    let total_share: f64 = scenario.classes.iter().map(|c| c.share).sum();
    let mut out = Vec::new();
    for vehicle in 0..scenario.vehicles {
        let mut t = 0.0f64;
        let mut seq = 0u32;
        loop {
            t += gap.sample(&mut rng);
            if t >= scenario.horizon_ms as f64 {
                break;
            }
            let jitter = if scenario.jitter_ms > 0 {
                rng.gen_range(0..=scenario.jitter_ms)
            } else {
                0
            };
            let tick = t.floor() as i64 + jitter;
            let mut pick = rng.gen::<f64>() * total_share;
            let class = scenario
                .classes
                .iter()
                .find(|c| {
                    pick -= c.share;
                    pick < 0.0
                })
                .unwrap_or(&scenario.classes[scenario.classes.len() - 1]);
            let forged = rng.gen::<f64>() < scenario.forgery_rate;
            out.push(Arrival {
                tick,
                due: tick + class.due_offset,
                weight: class.weight,
                vehicle,
                group: vehicle % scenario.groups,
                message: format!("veh={vehicle} seq={seq} t={tick} class={}", class.name).into_bytes(),
                forged,
            });
            seq += 1;
        }
    }
    out.sort_by_key(|a| (a.tick, a.vehicle));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let sc = Scenario::parse("vehicles = 3\n# comment\nbatch_size = auto\nl=8\nlateness_budget = 5\n").unwrap();
        assert_eq!(sc.vehicles, 3);
        assert_eq!(sc.security_bits, 8);
        assert_eq!(sc.lateness_budget, Some(5));
        assert_eq!(sc.rate_per_vehicle, 5.0);
        let sc = Scenario::parse("batch_size = 12\nclass.ambulance = 9, 20, 0.1\nclass.car = 1,100,0.9").unwrap();
        assert_eq!(sc.batch_size, BatchSize::Fixed(12));
        assert_eq!(sc.classes.len(), 2);
        assert_eq!(sc.classes[0].weight, 9);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = Scenario::parse("vehicles = 3\n\nrate_per_vehicle = fast\n").unwrap_err();
        assert!(matches!(err, ScenarioError::Line { line: 3, .. }), "{err}");
        assert!(matches!(Scenario::parse("wat = 1"), Err(ScenarioError::Line { line: 1, .. })));
        assert!(matches!(Scenario::parse("vehicles"), Err(ScenarioError::Line { line: 1, .. })));
        assert!(matches!(Scenario::parse("class.x = 1,2"), Err(ScenarioError::Line { line: 1, .. })));
        assert!(matches!(Scenario::parse("forgery_rate = 1.5"), Err(ScenarioError::Invalid(_))));
        assert!(matches!(Scenario::parse("rate_per_vehicle = 0"), Err(ScenarioError::Invalid(_))));
    }

    #[test]
    fn deterministic_in_seed() {
        let sc = Scenario {
            forgery_rate: 0.3,
            jitter_ms: 5,
            ..Scenario::default()
        };
        assert_eq!(gen_arrivals(&sc), gen_arrivals(&sc));
        let other = Scenario { seed: 2, ..sc.clone() };
        assert_ne!(gen_arrivals(&sc), gen_arrivals(&other));
    }

    #[test]
    fn no_forgeries_at_rate_zero() {
        assert!(gen_arrivals(&Scenario::default()).iter().all(|a| !a.forged));
    }

    #[test]
    fn arrival_count_within_three_sigma() {
        for seed in 0..5 {
            let sc = Scenario {
                vehicles: 50,
                horizon_ms: 4000,
                seed,
                ..Scenario::default()
            };
            let expected = sc.rate_per_vehicle * sc.horizon_ms as f64 / 1000.0 * sc.vehicles as f64;
            let got = gen_arrivals(&sc).len() as f64;
            assert!((got - expected).abs() <= 3.0 * expected.sqrt(), "seed {seed}: {got} vs {expected}");
        }
    }

    #[test]
    fn classes_set_due_and_weight() {
        let sc = Scenario::parse("class.ambulance = 9, 20, 1\nvehicles = 5").unwrap();
        let arrivals = gen_arrivals(&sc);
        assert!(!arrivals.is_empty());
        assert!(arrivals.iter().all(|a| a.weight == 9 && a.due == a.tick + 20));
        assert!(arrivals.windows(2).all(|w| w[0].tick <= w[1].tick));
    }
}
