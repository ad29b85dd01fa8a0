//! Instance data: generators, battery, per-interval loads, requirements and
//! price bids, plus synthesis from normalized price/load patterns.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::ScenarioError;

pub const SCHEMA: &str = "bessbid-scenario/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub id: String,
    #[serde(rename = "base_price_bid_usd_per_mwh")]
    pub base_price_bid: f64,
    #[serde(rename = "p_max_mw")]
    pub p_max: f64,
    #[serde(rename = "p_min_mw", default)]
    pub p_min: f64,
    #[serde(rename = "reserve_ramp_mw")]
    pub reserve_ramp: f64,
    #[serde(rename = "regulation_ramp_mw")]
    pub regulation_ramp: f64,
    #[serde(default = "default_mileage")]
    pub mileage_multiplier: f64,
}

fn default_mileage() -> f64 {
    10.0
}

impl GeneratorParams {
    pub fn new(
        id: impl Into<String>,
        base_price_bid: f64,
        p_max: f64,
        reserve_ramp: f64,
        regulation_ramp: f64,
    ) -> Self {
        GeneratorParams {
            id: id.into(),
            base_price_bid,
            p_max,
            p_min: 0.0,
            reserve_ramp,
            regulation_ramp,
            mileage_multiplier: default_mileage(),
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        GeneratorParams {
            p_max: self.p_max * k,
            p_min: self.p_min * k,
            reserve_ramp: self.reserve_ramp * k,
            regulation_ramp: self.regulation_ramp * k,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BessParams {
    #[serde(rename = "energy_capacity_mwh")]
    pub energy_capacity: f64,
    #[serde(rename = "power_rate_mw")]
    pub power_rate: f64,
    #[serde(rename = "soc_init_mwh")]
    pub soc_init: f64,
    #[serde(rename = "soc_min_mwh")]
    pub soc_min: f64,
    #[serde(rename = "soc_max_mwh")]
    pub soc_max: f64,
    #[serde(default = "default_mileage")]
    pub mileage_multiplier: f64,
}

impl BessParams {
    /// Empty battery with the full capacity usable.
    pub fn new(energy_capacity: f64, power_rate: f64) -> Self {
        BessParams {
            energy_capacity,
            power_rate,
            soc_init: 0.0,
            soc_min: 0.0,
            soc_max: energy_capacity,
            mileage_multiplier: default_mileage(),
        }
    }
}

/// Battery price bids for one interval, $/MWh.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BessPriceBids {
    #[serde(rename = "beta_s_usd_per_mwh")]
    pub supply: f64,
    #[serde(rename = "beta_d_usd_per_mwh")]
    pub demand: f64,
    #[serde(rename = "beta_rs_usd_per_mwh")]
    pub reserve: f64,
    #[serde(rename = "beta_rgc_usd_per_mwh")]
    pub regcap: f64,
    #[serde(rename = "beta_rgm_usd_per_mwh")]
    pub mileage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalData {
    /// 1-based label, e.g. the pattern interval this row was taken from.
    pub index: usize,
    #[serde(rename = "delta_t_h")]
    pub delta_t: f64,
    #[serde(rename = "load_mw")]
    pub load: f64,
    #[serde(rename = "reserve_req_mw")]
    pub reserve_req: f64,
    #[serde(rename = "regcap_req_mw")]
    pub regcap_req: f64,
    #[serde(rename = "mileage_req_mw")]
    pub mileage_req: f64,
    #[serde(rename = "alpha_s_usd_per_mwh")]
    pub alpha_s: Vec<f64>,
    #[serde(rename = "alpha_rs_usd_per_mwh")]
    pub alpha_rs: Vec<f64>,
    #[serde(rename = "alpha_rgc_usd_per_mwh")]
    pub alpha_rgc: Vec<f64>,
    #[serde(rename = "alpha_rgm_usd_per_mwh")]
    pub alpha_rgm: Vec<f64>,
    #[serde(flatten)]
    pub beta: BessPriceBids,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MarketMask {
    pub energy: bool,
    pub reserve: bool,
    pub regulation: bool,
}

impl MarketMask {
    pub const ENERGY: MarketMask = MarketMask { energy: true, reserve: false, regulation: false };
    pub const ENERGY_RESERVE: MarketMask = MarketMask { energy: true, reserve: true, regulation: false };
    pub const ENERGY_REGULATION: MarketMask = MarketMask { energy: true, reserve: false, regulation: true };
    pub const ALL: MarketMask = MarketMask { energy: true, reserve: true, regulation: true };
    pub const NONE: MarketMask = MarketMask { energy: false, reserve: false, regulation: false };

    /// Case numbering used throughout: 1 energy, 2 +reserve, 3 +regulation, 4 all.
    pub fn for_case(case: u8) -> Option<MarketMask> {
        match case {
            1 => Some(Self::ENERGY),
            2 => Some(Self::ENERGY_RESERVE),
            3 => Some(Self::ENERGY_REGULATION),
            4 => Some(Self::ALL),
            _ => None,
        }
    }

    pub fn case_number(self) -> Option<u8> {
        (1..=4).find(|&c| Self::for_case(c) == Some(self))
    }

    pub fn contains(self, other: MarketMask) -> bool {
        (self.energy || !other.energy) && (self.reserve || !other.reserve) && (self.regulation || !other.regulation)
    }

    pub fn parse(s: &str) -> Option<MarketMask> {
        if let Ok(c) = s.parse::<u8>() {
            return Self::for_case(c);
        }
        let mut m = MarketMask::NONE;
        for part in s.split(['+', ',']) {
            match part.trim() {
                "energy" | "e" => m.energy = true,
                "reserve" | "rs" => m.reserve = true,
                "regulation" | "rg" => m.regulation = true,
                "all" => m = MarketMask::ALL,
                "none" | "" => {}
                _ => return None,
            }
        }
        Some(m)
    }
}

impl fmt::Display for MarketMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.energy {
            parts.push("energy");
        }
        if self.reserve {
            parts.push("reserve");
        }
        if self.regulation {
            parts.push("regulation");
        }
        if parts.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&parts.join("+"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub schema: String,
    pub name: String,
    /// Forces the final state of charge back to its initial value.
    #[serde(default)]
    pub terminal_soc_equals_init: bool,
    pub market_mask: MarketMask,
    pub bess: BessParams,
    pub generators: Vec<GeneratorParams>,
    pub intervals: Vec<IntervalData>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl Scenario {
    pub fn num_intervals(&self) -> usize {
        self.intervals.len()
    }

    pub fn num_generators(&self) -> usize {
        self.generators.len()
    }

    pub fn with_mask(&self, mask: MarketMask) -> Scenario {
        Scenario { market_mask: mask, ..self.clone() }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn from_toml(text: &str) -> Result<Scenario, ScenarioError> {
        let s: Scenario = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        if s.schema != SCHEMA {
            return Err(ScenarioError::Schema(s.schema));
        }
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io(path.display().to_string(), e))?;
        Scenario::from_toml(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ScenarioError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml()).map_err(|e| ScenarioError::Io(path.display().to_string(), e))
    }

    /// SHA-256 of the serialized document, hex encoded.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Largest price coefficient of interval `t` across all generator and
    /// battery bids.
    pub fn max_price_coefficient(&self, t: usize) -> f64 {
        let iv = &self.intervals[t];
        let b = iv.beta;
        [&iv.alpha_s, &iv.alpha_rs, &iv.alpha_rgc, &iv.alpha_rgm]
            .iter()
            .flat_map(|v| v.iter())
            .chain([b.supply, b.demand, b.reserve, b.regcap, b.mileage].iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn max_mileage_multiplier(&self) -> f64 {
        self.generators.iter().map(|g| g.mileage_multiplier).fold(self.bess.mileage_multiplier, f64::max)
    }
}

/// Normalized price and load sequences, one value per interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Patterns {
    pub price: Vec<f64>,
    pub load: Vec<f64>,
}

const BUILTIN_LOAD: &str = include_str!("../data/load_pattern.csv");
const BUILTIN_PRICE: &str = include_str!("../data/price_pattern.csv");

fn parse_pattern(source: &str, text: &str) -> Result<Vec<f64>, ScenarioError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| ScenarioError::Csv(source.to_string(), e.to_string()))?;
        let field = rec.get(rec.len().saturating_sub(1)).unwrap_or("");
        let v: f64 = field
            .parse()
            .map_err(|_| ScenarioError::Csv(source.to_string(), format!("row {}: invalid value '{field}'", k + 1)))?;
        if !(0.0..=1.0).contains(&v) {
            return Err(ScenarioError::PatternValue { file: source.to_string(), interval: k + 1, value: v });
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(ScenarioError::Csv(source.to_string(), "no values".into()));
    }
    Ok(out)
}

impl Patterns {
    pub fn from_csv_text(price: &str, load: &str) -> Result<Patterns, ScenarioError> {
        let price = parse_pattern("price pattern", price)?;
        let load = parse_pattern("load pattern", load)?;
        Patterns::new(price, load)
    }

    pub fn new(price: Vec<f64>, load: Vec<f64>) -> Result<Patterns, ScenarioError> {
        if price.len() != load.len() {
            return Err(ScenarioError::PatternLength { price: price.len(), load: load.len() });
        }
        let peak = load.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if (peak - 1.0).abs() > 1e-9 {
            return Err(ScenarioError::LoadPeak(peak));
        }
        Ok(Patterns { price, load })
    }

    /// The 96-interval patterns shipped with the crate.
    pub fn builtin() -> Patterns {
        Patterns::from_csv_text(BUILTIN_PRICE, BUILTIN_LOAD).expect("bundled patterns are valid")
    }

    pub fn len(&self) -> usize {
        self.load.len()
    }

    pub fn is_empty(&self) -> bool {
        self.load.is_empty()
    }

    /// 1-based index of the load peak.
    pub fn peak_interval(&self) -> usize {
        let mut best = 0;
        for (k, &v) in self.load.iter().enumerate() {
            if v > self.load[best] {
                best = k;
            }
        }
        best + 1
    }

    /// Every `step`-th interval starting at 0-based `start`; keeps the
    /// original 1-based labels. The load is renormalized if the peak was
    /// skipped.
    pub fn subsample(&self, start: usize, step: usize) -> (Patterns, Vec<usize>) {
        let idx: Vec<usize> = (start..self.len()).step_by(step.max(1)).collect();
        let mut load: Vec<f64> = idx.iter().map(|&k| self.load[k]).collect();
        let peak = load.iter().cloned().fold(0.0, f64::max);
        if peak > 0.0 && peak != 1.0 {
            load.iter_mut().for_each(|v| *v /= peak);
        }
        let price = idx.iter().map(|&k| self.price[k]).collect();
        (Patterns { price, load }, idx.iter().map(|k| k + 1).collect())
    }
}

/// Reads price and load pattern files.
pub fn load_patterns(price_file: impl AsRef<Path>, load_file: impl AsRef<Path>) -> Result<Patterns, ScenarioError> {
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| ScenarioError::Io(p.display().to_string(), e));
    let price = parse_pattern(&price_file.as_ref().display().to_string(), &read(price_file.as_ref())?)?;
    let load = parse_pattern(&load_file.as_ref().display().to_string(), &read(load_file.as_ref())?)?;
    Patterns::new(price, load)
}

/// Ancillary price bids as multiples of the energy bid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceRatios {
    pub reserve: f64,
    pub regcap: f64,
    pub mileage: f64,
}

impl Default for PriceRatios {
    fn default() -> Self {
        PriceRatios { reserve: 0.15, regcap: 0.4, mileage: 0.07 }
    }
}

/// System requirements as fractions of load; mileage as a multiple of the
/// capacity requirement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RequirementFracs {
    pub reserve: f64,
    pub regcap: f64,
    pub mileage_mult: f64,
}

impl Default for RequirementFracs {
    fn default() -> Self {
        RequirementFracs { reserve: 0.10, regcap: 0.04, mileage_mult: 1.75 }
    }
}

/// How the battery's price bids are set when synthesizing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BetaPolicy {
    /// Zero for every product except the demand bid, which is twice the
    /// highest energy bid on the horizon so that buy bids always clear.
    PriceTaking,
    Fixed(BessPriceBids),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub name: String,
    pub peak_load_mw: f64,
    pub delta_t_h: f64,
    pub ratios: PriceRatios,
    pub reqs: RequirementFracs,
    pub mask: MarketMask,
    pub beta: BetaPolicy,
    /// 1-based labels for the intervals; defaults to 1..=T.
    pub labels: Option<Vec<usize>>,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            name: "scenario".into(),
            peak_load_mw: 1000.0,
            delta_t_h: 0.25,
            ratios: PriceRatios::default(),
            reqs: RequirementFracs::default(),
            mask: MarketMask::ALL,
            beta: BetaPolicy::PriceTaking,
            labels: None,
        }
    }
}

pub fn synthesize_scenario(
    patterns: &Patterns,
    generators: &[GeneratorParams],
    bess: &BessParams,
    params: &SynthParams,
) -> Result<Scenario, ScenarioError> {
    let r = params.ratios;
    let q = params.reqs;
    if [r.reserve, r.regcap, r.mileage, q.reserve, q.regcap, q.mileage_mult].iter().any(|&v| !(v > 0.0)) {
        return Err(ScenarioError::Parameter("ratios and requirement fractions must be positive".into()));
    }
    let max_alpha = generators.iter().map(|g| g.base_price_bid).fold(0.0, f64::max)
        * patterns.price.iter().cloned().fold(0.0, f64::max);
    let intervals = (0..patterns.len())
        .map(|t| {
            let load = params.peak_load_mw * patterns.load[t];
            let regcap_req = q.regcap * load;
            let alpha_s: Vec<f64> = generators.iter().map(|g| g.base_price_bid * patterns.price[t]).collect();
            let beta = match params.beta {
                BetaPolicy::PriceTaking => BessPriceBids { demand: 2.0 * max_alpha, ..Default::default() },
                BetaPolicy::Fixed(b) => b,
            };
            IntervalData {
                index: params.labels.as_ref().map_or(t + 1, |l| l[t]),
                delta_t: params.delta_t_h,
                load,
                reserve_req: q.reserve * load,
                regcap_req,
                mileage_req: q.mileage_mult * regcap_req,
                alpha_rs: alpha_s.iter().map(|a| r.reserve * a).collect(),
                alpha_rgc: alpha_s.iter().map(|a| r.regcap * a).collect(),
                alpha_rgm: alpha_s.iter().map(|a| r.mileage * a).collect(),
                alpha_s,
                beta,
            }
        })
        .collect();
    let s = Scenario {
        schema: SCHEMA.into(),
        name: params.name.clone(),
        terminal_soc_equals_init: false,
        market_mask: params.mask,
        bess: bess.clone(),
        generators: generators.to_vec(),
        intervals,
    };
    let v = validate_scenario(&s);
    if !v.is_empty() {
        return Err(ScenarioError::Invalid(v));
    }
    Ok(s)
}

pub fn validate_scenario(s: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut bad = |field: String, message: String| out.push(Violation { field, message });
    if s.schema != SCHEMA {
        bad("schema".into(), format!("expected {SCHEMA}, found {}", s.schema));
    }
    for (j, g) in s.generators.iter().enumerate() {
        let f = |n: &str| format!("generators[{j}].{n}");
        if !(g.p_min >= 0.0 && g.p_min <= g.p_max) {
            bad(f("p_min_mw"), format!("need 0 <= p_min <= p_max, got {} / {}", g.p_min, g.p_max));
        }
        if !(g.reserve_ramp >= 0.0) {
            bad(f("reserve_ramp_mw"), "must be nonnegative".into());
        }
        if !(g.regulation_ramp >= 0.0) {
            bad(f("regulation_ramp_mw"), "must be nonnegative".into());
        }
        if !(g.mileage_multiplier >= 1.0) {
            bad(f("mileage_multiplier"), "must be at least 1".into());
        }
    }
    let b = &s.bess;
    if !(b.soc_min >= 0.0) {
        bad("bess.soc_min_mwh".into(), "must be nonnegative".into());
    }
    if !(b.soc_init >= b.soc_min) {
        bad("bess.soc_init_mwh".into(), format!("{} is below soc_min {}", b.soc_init, b.soc_min));
    }
    if !(b.soc_init <= b.soc_max) {
        bad("bess.soc_init_mwh".into(), format!("{} exceeds soc_max {}", b.soc_init, b.soc_max));
    }
    if !(b.soc_max <= b.energy_capacity) {
        bad("bess.soc_max_mwh".into(), format!("{} exceeds energy capacity {}", b.soc_max, b.energy_capacity));
    }
    if !(b.power_rate > 0.0) {
        bad("bess.power_rate_mw".into(), "must be positive".into());
    }
    if !(b.mileage_multiplier >= 1.0) {
        bad("bess.mileage_multiplier".into(), "must be at least 1".into());
    }
    if s.intervals.is_empty() {
        bad("intervals".into(), "at least one interval is required".into());
    }
    let ng = s.generators.len();
    let cap: f64 = s.generators.iter().map(|g| g.p_max).sum();
    let rs_cap: f64 = s.generators.iter().map(|g| g.reserve_ramp.min(g.p_max)).sum();
    let rg_cap: f64 = s.generators.iter().map(|g| g.regulation_ramp.min(g.p_max)).sum();
    let rgm_cap: f64 = s.generators.iter().map(|g| g.mileage_multiplier * g.regulation_ramp.min(g.p_max)).sum();
    for (t, iv) in s.intervals.iter().enumerate() {
        let f = |n: &str| format!("intervals[{}].{n}", iv.index);
        if !(iv.delta_t > 0.0) {
            bad(f("delta_t_h"), "must be positive".into());
        }
        if !(iv.load > 0.0) {
            bad(f("load_mw"), "must be positive".into());
        }
        for (n, v) in
            [("reserve_req_mw", iv.reserve_req), ("regcap_req_mw", iv.regcap_req), ("mileage_req_mw", iv.mileage_req)]
        {
            if !(v >= 0.0) {
                bad(f(n), "must be nonnegative".into());
            }
        }
        for (n, v) in [
            ("alpha_s_usd_per_mwh", &iv.alpha_s),
            ("alpha_rs_usd_per_mwh", &iv.alpha_rs),
            ("alpha_rgc_usd_per_mwh", &iv.alpha_rgc),
            ("alpha_rgm_usd_per_mwh", &iv.alpha_rgm),
        ] {
            if v.len() != ng {
                bad(f(n), format!("{} entries for {ng} generators", v.len()));
            }
        }
        let min_gen: f64 = s.generators.iter().map(|g| g.p_min).sum();
        if cap < iv.load + iv.reserve_req + iv.regcap_req - 1e-9 {
            bad(
                f("load_mw"),
                format!(
                    "generation capacity {cap} MW cannot cover load plus reserve and regulation {} MW (interval {})",
                    iv.load + iv.reserve_req + iv.regcap_req,
                    t + 1
                ),
            );
        }
        if min_gen > iv.load + 1e-9 {
            bad(f("load_mw"), format!("load {} is below total minimum generation {min_gen}", iv.load));
        }
        if rs_cap < iv.reserve_req - 1e-9 {
            bad(f("reserve_req_mw"), format!("exceeds total reserve ramp {rs_cap}"));
        }
        if rg_cap < iv.regcap_req - 1e-9 {
            bad(f("regcap_req_mw"), format!("exceeds total regulation ramp {rg_cap}"));
        }
        if rgm_cap < iv.mileage_req - 1e-9 {
            bad(f("mileage_req_mw"), format!("exceeds total mileage capability {rgm_cap}"));
        }
    }
    out
}

/// The five-unit generator table of the reference test system.
pub fn reference_generators() -> Vec<GeneratorParams> {
    vec![
        GeneratorParams::new("G1", 10.0, 400.0, 80.0, 40.0),
        GeneratorParams::new("G2", 14.0, 300.0, 60.0, 30.0),
        GeneratorParams::new("G3", 15.0, 210.0, 42.0, 21.0),
        GeneratorParams::new("G4", 30.0, 350.0, 70.0, 35.0),
        GeneratorParams::new("G5", 40.0, 270.0, 54.0, 27.0),
    ]
}

/// Full-size instance: 96 quarter-hour intervals, 1000 MW peak, 400 MWh /
/// 40 MW battery.
pub fn reference_scenario(patterns: &Patterns, mask: MarketMask) -> Result<Scenario, ScenarioError> {
    let params = SynthParams { name: "reference".into(), mask, ..Default::default() };
    synthesize_scenario(patterns, &reference_generators(), &BessParams::new(400.0, 40.0), &params)
}

pub const DESK_GENERATOR_SCALE: f64 = 0.4;

/// Reduced instance for routine runs: 24 hourly intervals (every fourth
/// pattern point), generators 1, 2 and 4 scaled by 0.4, 100 MWh / 10 MW
/// battery, 250 MW peak.
pub fn desk_scenario(patterns: &Patterns, mask: MarketMask) -> Result<Scenario, ScenarioError> {
    let (sub, labels) = patterns.subsample(0, 4);
    let gens: Vec<GeneratorParams> =
        [0usize, 1, 3].iter().map(|&k| reference_generators()[k].scaled(DESK_GENERATOR_SCALE)).collect();
    let params = SynthParams {
        name: "desk".into(),
        peak_load_mw: 250.0,
        delta_t_h: 1.0,
        mask,
        labels: Some(labels),
        ..Default::default()
    };
    synthesize_scenario(&sub, &gens, &BessParams::new(100.0, 10.0), &params)
}

/// Hourly scenario with a price pattern that is `low` for the first half of
/// the horizon and `high` for the second.
pub fn two_level_scenario(intervals: usize, low: f64, high: f64, mask: MarketMask) -> Result<Scenario, ScenarioError> {
    let half = intervals / 2;
    let price: Vec<f64> = (0..intervals).map(|t| if t < half { low } else { high }).collect();
    let patterns = Patterns::new(price, vec![1.0; intervals])?;
    let gens: Vec<GeneratorParams> =
        [0usize, 1, 3].iter().map(|&k| reference_generators()[k].scaled(DESK_GENERATOR_SCALE)).collect();
    let params =
        SynthParams { name: "two-level".into(), peak_load_mw: 200.0, delta_t_h: 1.0, mask, ..Default::default() };
    synthesize_scenario(&patterns, &gens, &BessParams::new(40.0, 10.0), &params)
}

/// Two-interval, two-generator instance small enough for exhaustive search:
/// 10 MWh / 5 MW battery, hourly intervals, loads 80 and 150 MW.
pub fn tiny_scenario(mask: MarketMask) -> Scenario {
    let gens =
        vec![GeneratorParams::new("G1", 10.0, 100.0, 20.0, 10.0), GeneratorParams::new("G2", 30.0, 100.0, 20.0, 10.0)];
    let interval = |index: usize, load: f64, alpha_s: [f64; 2]| IntervalData {
        index,
        delta_t: 1.0,
        load,
        reserve_req: 5.0,
        regcap_req: 3.0,
        mileage_req: 5.0,
        alpha_s: alpha_s.to_vec(),
        alpha_rs: alpha_s.iter().map(|a| 0.15 * a).collect(),
        alpha_rgc: alpha_s.iter().map(|a| 0.4 * a).collect(),
        alpha_rgm: alpha_s.iter().map(|a| 0.07 * a).collect(),
        beta: BessPriceBids { demand: 100.0, ..BessPriceBids::default() },
    };
    Scenario {
        schema: SCHEMA.into(),
        name: "tiny".into(),
        terminal_soc_equals_init: false,
        market_mask: mask,
        bess: BessParams::new(10.0, 5.0),
        generators: gens,
        intervals: vec![interval(1, 80.0, [10.0, 30.0]), interval(2, 150.0, [12.0, 35.0])],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_patterns_peak_at_73() {
        let p = Patterns::builtin();
        assert_eq!(p.len(), 96);
        assert_eq!(p.peak_interval(), 73);
        assert_eq!(p.load[72], 1.0);
    }

    #[test]
    fn mask_parsing() {
        assert_eq!(MarketMask::parse("2"), Some(MarketMask::ENERGY_RESERVE));
        assert_eq!(MarketMask::parse("energy+regulation"), Some(MarketMask::ENERGY_REGULATION));
        assert_eq!(MarketMask::parse("bogus"), None);
        assert_eq!(MarketMask::ALL.to_string(), "energy+reserve+regulation");
        assert!(MarketMask::ALL.contains(MarketMask::ENERGY));
        assert!(!MarketMask::ENERGY_RESERVE.contains(MarketMask::ENERGY_REGULATION));
    }

    #[test]
    fn toml_round_trip() {
        let s = desk_scenario(&Patterns::builtin(), MarketMask::ALL).unwrap();
        let back = Scenario::from_toml(&s.to_toml()).unwrap();
        assert_eq!(back, s);
    }
}
