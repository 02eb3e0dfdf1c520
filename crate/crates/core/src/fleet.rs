//! Domain types for a calibrated fleet and the CES production technology.
//!
//! Production for one vessel on one target is
//!
//! ```text
//! y = alpha * (sum_j beta_j * x_j^rho)^(delta / rho)
//! ```
//!
//! with `rho = (sigma - 1) / sigma` and returns to scale `delta = eta / (1 + eta)`.
//! Input levels are in dollars with unit input prices unless a record carries
//! explicit prices (hook scaling, cost indexing).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{PmpError, Result};

/// Fishing target: one row of the catch-limit constraint set.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum TargetId {
    /// Bigeye tuna west of 150°W.
    Wcpo,
    /// Bigeye tuna east of 150°W.
    Epo,
    /// Swordfish.
    Swordfish,
    Other(String),
}

impl TargetId {
    pub const DEFAULTS: [TargetId; 3] = [TargetId::Wcpo, TargetId::Epo, TargetId::Swordfish];

    /// Bigeye targets share one vessel-specific price.
    pub fn is_bigeye(&self) -> bool {
        matches!(self, TargetId::Wcpo | TargetId::Epo)
    }
}

impl fmt::Display for TargetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetId::Wcpo => f.write_str("WCPO"),
            TargetId::Epo => f.write_str("EPO"),
            TargetId::Swordfish => f.write_str("SF"),
            TargetId::Other(label) => f.write_str(label),
        }
    }
}

impl FromStr for TargetId {
    type Err = PmpError;

    fn from_str(s: &str) -> Result<Self> {
        let label = s.trim();
        if label.is_empty() {
            return Err(PmpError::InvalidRecord("empty target label".into()));
        }
        Ok(match label.to_ascii_uppercase().as_str() {
            "WCPO" | "WCPO-BIGEYE" => TargetId::Wcpo,
            "EPO" | "EPO-BIGEYE" => TargetId::Epo,
            "SF" | "SWORDFISH" => TargetId::Swordfish,
            _ => TargetId::Other(label.to_string()),
        })
    }
}

impl From<TargetId> for String {
    fn from(t: TargetId) -> String {
        t.to_string()
    }
}

impl TryFrom<String> for TargetId {
    type Error = PmpError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Input category of the linear expenditure function.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum InputId {
    Fuel,
    CaptainPay,
    CrewPay,
    Bait,
    Other,
    Gear,
    Named(String),
}

impl InputId {
    pub fn defaults() -> Vec<InputId> {
        vec![
            InputId::Fuel,
            InputId::CaptainPay,
            InputId::CrewPay,
            InputId::Bait,
            InputId::Other,
            InputId::Gear,
        ]
    }
}

impl fmt::Display for InputId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputId::Fuel => f.write_str("fuel"),
            InputId::CaptainPay => f.write_str("captain-pay"),
            InputId::CrewPay => f.write_str("crew-pay"),
            InputId::Bait => f.write_str("bait"),
            InputId::Other => f.write_str("other"),
            InputId::Gear => f.write_str("gear"),
            InputId::Named(label) => f.write_str(label),
        }
    }
}

impl FromStr for InputId {
    type Err = PmpError;

    fn from_str(s: &str) -> Result<Self> {
        let label = s.trim();
        if label.is_empty() {
            return Err(PmpError::InvalidRecord("empty input label".into()));
        }
        Ok(
            match label.to_ascii_lowercase().replace('_', "-").as_str() {
                "fuel" => InputId::Fuel,
                "captain-pay" | "captain" => InputId::CaptainPay,
                "crew-pay" | "crew" => InputId::CrewPay,
                "bait" => InputId::Bait,
                "other" => InputId::Other,
                "gear" => InputId::Gear,
                _ => InputId::Named(label.to_string()),
            },
        )
    }
}

impl From<InputId> for String {
    fn from(i: InputId) -> String {
        i.to_string()
    }
}

impl TryFrom<String> for InputId {
    type Error = PmpError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Observed base-year data for one vessel fishing one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VesselTargetRecord {
    pub vessel_id: String,
    pub target: TargetId,
    /// Input levels, ordered like the fleet's input list.
    pub inputs: Vec<f64>,
    /// Unit price of each input level; all ones unless rescaled.
    pub input_prices: Vec<f64>,
    /// Observed catch, pounds.
    pub catch: f64,
    /// Fleet-wide average ex-vessel price, $/lb.
    pub price_base: f64,
    /// Vessel quality premium, $/lb. May be negative.
    pub price_premium: f64,
    /// Value added by non-target catch, $/lb.
    pub price_bycatch: f64,
    pub hooks: Option<f64>,
}

impl VesselTargetRecord {
    /// Record with unit input prices.
    pub fn new(
        vessel_id: impl Into<String>,
        target: TargetId,
        inputs: Vec<f64>,
        catch: f64,
        price_base: f64,
        price_premium: f64,
        price_bycatch: f64,
    ) -> Self {
        let input_prices = vec![1.0; inputs.len()];
        Self {
            vessel_id: vessel_id.into(),
            target,
            inputs,
            input_prices,
            catch,
            price_base,
            price_premium,
            price_bycatch,
            hooks: None,
        }
    }

    pub fn price(&self) -> Result<f64> {
        compose_price(self)
    }

    /// Total observed expenditure `sum_j c_j x_j`.
    pub fn expenditure(&self) -> f64 {
        self.inputs
            .iter()
            .zip(&self.input_prices)
            .map(|(x, c)| x * c)
            .sum()
    }

    /// Per-input expenditure `c_j x_j`.
    pub fn expenditures(&self) -> Vec<f64> {
        self.inputs
            .iter()
            .zip(&self.input_prices)
            .map(|(x, c)| x * c)
            .collect()
    }

    pub fn key(&self) -> (String, TargetId) {
        (self.vessel_id.clone(), self.target.clone())
    }

    /// Checks the invariants a record must meet before it can be calibrated.
    pub fn validate(&self) -> Result<()> {
        if self.inputs.len() != self.input_prices.len() {
            return Err(PmpError::InvalidRecord(format!(
                "{} input levels but {} input prices",
                self.inputs.len(),
                self.input_prices.len()
            )));
        }
        if !(self.catch.is_finite() && self.catch > 0.0) {
            return Err(PmpError::DegenerateRecord(format!(
                "catch must be positive, got {}",
                self.catch
            )));
        }
        if self.inputs.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(PmpError::InvalidRecord(
                "input levels must be finite and nonnegative".into(),
            ));
        }
        if !self.inputs.iter().any(|x| *x > 0.0) {
            return Err(PmpError::DegenerateRecord(
                "all input levels are zero".into(),
            ));
        }
        if self
            .input_prices
            .iter()
            .any(|c| !c.is_finite() || *c <= 0.0)
        {
            return Err(PmpError::InvalidRecord(
                "input prices must be finite and positive".into(),
            ));
        }
        self.price()?;
        Ok(())
    }
}

/// Elasticities assumed for the whole fleet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalAssumptions {
    /// Supply elasticity of catch.
    pub eta: f64,
    /// Elasticity of substitution between inputs.
    pub sigma: f64,
}

impl Default for GlobalAssumptions {
    fn default() -> Self {
        Self {
            eta: 0.5,
            sigma: 0.17,
        }
    }
}

impl GlobalAssumptions {
    pub fn new(eta: f64, sigma: f64) -> Result<Self> {
        delta_from_eta(eta)?;
        rho_from_sigma(sigma)?;
        Ok(Self { eta, sigma })
    }

    pub fn delta(&self) -> f64 {
        self.eta / (1.0 + self.eta)
    }

    pub fn rho(&self) -> f64 {
        (self.sigma - 1.0) / self.sigma
    }
}

/// Returns to scale tied to the supply elasticity: `delta = eta / (1 + eta)`.
pub fn delta_from_eta(eta: f64) -> Result<f64> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(PmpError::Domain(format!(
            "supply elasticity must be positive and finite, got {eta}"
        )));
    }
    Ok(eta / (1.0 + eta))
}

/// Transformed substitution elasticity `rho = (sigma - 1) / sigma`.
pub fn rho_from_sigma(sigma: f64) -> Result<f64> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(PmpError::Domain(format!(
            "elasticity of substitution must be positive and finite, got {sigma}"
        )));
    }
    Ok((sigma - 1.0) / sigma)
}

/// Vessel price per pound: base + quality premium + bycatch value.
pub fn compose_price(record: &VesselTargetRecord) -> Result<f64> {
    let parts = [
        record.price_base,
        record.price_premium,
        record.price_bycatch,
    ];
    if parts.iter().any(|p| !p.is_finite()) {
        return Err(PmpError::InvalidRecord(
            "price components must be finite".into(),
        ));
    }
    let price = parts.iter().sum::<f64>();
    if price <= 0.0 {
        return Err(PmpError::InvalidRecord(format!(
            "composed price {price} is not positive"
        )));
    }
    Ok(price)
}

/// Calibrated technology and valuation for one (vessel, target).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CesParams {
    pub alpha: f64,
    pub beta: Vec<f64>,
    pub delta: f64,
    pub rho: f64,
    /// Unobserved value of catch, $/lb.
    pub mu: f64,
}

impl CesParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(PmpError::Domain(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(PmpError::Domain(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if self.beta.iter().any(|b| !b.is_finite() || *b < 0.0) {
            return Err(PmpError::Domain(
                "share parameters must be nonnegative".into(),
            ));
        }
        let total: f64 = self.beta.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(PmpError::Domain(format!(
                "share parameters sum to {total}, not 1"
            )));
        }
        Ok(())
    }
}

/// CES aggregate, homogeneous of degree one in `x`, and the normalized
/// weights `beta_j x_j^rho / sum_k beta_k x_k^rho`. Inputs with zero share
/// are ignored. Evaluated relative to the largest input so extreme `rho`
/// does not overflow.
fn ces_aggregate(beta: &[f64], x: &[f64], rho: f64) -> Result<(f64, Vec<f64>)> {
    if beta.len() != x.len() {
        return Err(PmpError::Domain(format!(
            "{} shares but {} inputs",
            beta.len(),
            x.len()
        )));
    }
    if let Some(bad) = x.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(PmpError::Domain(format!(
            "input levels must be nonnegative, got {bad}"
        )));
    }

    let active = || beta.iter().zip(x).filter(|(b, _)| **b > 0.0);
    let mut weights = vec![0.0; x.len()];

    let has_zero = active().any(|(_, v)| *v == 0.0);
    if has_zero && rho <= 0.0 {
        return Ok((0.0, weights));
    }
    let scale = active().map(|(_, v)| *v).fold(0.0_f64, f64::max);
    if scale == 0.0 {
        return Ok((0.0, weights));
    }

    if rho == 0.0 {
        let log_agg: f64 = active().map(|(b, v)| b * v.ln()).sum();
        for (w, b) in weights.iter_mut().zip(beta) {
            *w = *b;
        }
        return Ok((log_agg.exp(), weights));
    }

    let mut total = 0.0;
    for (j, (b, v)) in beta.iter().zip(x).enumerate() {
        if *b > 0.0 && *v > 0.0 {
            let term = b * (v / scale).powf(rho);
            weights[j] = term;
            total += term;
        }
    }
    for w in weights.iter_mut() {
        *w /= total;
    }
    Ok((scale * total.powf(1.0 / rho), weights))
}

/// Catch produced by input bundle `x`.
///
/// With `rho < 0` any zero input carrying a positive share gives zero output.
pub fn production(params: &CesParams, x: &[f64]) -> Result<f64> {
    let (agg, _) = ces_aggregate(&params.beta, x, params.rho)?;
    Ok(params.alpha * agg.powf(params.delta))
}

/// Marginal products for every input, pounds per unit of input.
pub fn marginal_products(params: &CesParams, x: &[f64]) -> Result<Vec<f64>> {
    if let Some(index) = params
        .beta
        .iter()
        .zip(x)
        .position(|(b, v)| *b > 0.0 && *v == 0.0)
    {
        return Err(PmpError::Singular { index });
    }
    let (agg, weights) = ces_aggregate(&params.beta, x, params.rho)?;
    let y = params.alpha * agg.powf(params.delta);
    Ok(weights
        .iter()
        .zip(x)
        .map(|(w, v)| {
            if *w > 0.0 {
                params.delta * y * w / v
            } else {
                0.0
            }
        })
        .collect())
}

/// Marginal product of input `j`: `alpha delta S^(delta/rho - 1) beta_j x_j^(rho - 1)`.
pub fn marginal_product(params: &CesParams, x: &[f64], j: usize) -> Result<f64> {
    if j >= x.len() {
        return Err(PmpError::Domain(format!("input index {j} out of range")));
    }
    Ok(marginal_products(params, x)?[j])
}

fn check_prices(params: &CesParams, c: &[f64]) -> Result<()> {
    if c.len() != params.beta.len() {
        return Err(PmpError::Domain(format!(
            "{} input prices for {} inputs",
            c.len(),
            params.beta.len()
        )));
    }
    if let Some(bad) = c.iter().find(|p| !p.is_finite() || **p <= 0.0) {
        return Err(PmpError::Domain(format!(
            "input prices must be positive, got {bad}"
        )));
    }
    Ok(())
}

/// Cheapest bundle producing one pound.
fn unit_bundle(params: &CesParams, c: &[f64]) -> Result<Vec<f64>> {
    check_prices(params, c)?;
    // Cost minimization equates beta_j x_j^(rho-1) / c_j across inputs.
    let exponent = 1.0 / (params.rho - 1.0);
    let logs: Vec<Option<f64>> = params
        .beta
        .iter()
        .zip(c)
        .map(|(b, p)| (*b > 0.0).then(|| (p.ln() - b.ln()) * exponent))
        .collect();
    let peak = logs
        .iter()
        .flatten()
        .fold(f64::NEG_INFINITY, |a, b| a.max(*b));
    if !peak.is_finite() {
        return Err(PmpError::Domain("no input carries a positive share".into()));
    }
    let direction: Vec<f64> = logs
        .iter()
        .map(|l| l.map_or(0.0, |v| (v - peak).exp()))
        .collect();
    let y = production(params, &direction)?;
    let t = y.powf(-1.0 / params.delta);
    Ok(direction.into_iter().map(|u| u * t).collect())
}

/// Cost of one pound at minimum cost. Total cost is `unit_cost * y^(1/delta)`.
pub fn unit_cost(params: &CesParams, c: &[f64]) -> Result<f64> {
    let bundle = unit_bundle(params, c)?;
    Ok(bundle.iter().zip(c).map(|(x, p)| x * p).sum())
}

/// Cheapest input bundle achieving output `y`.
pub fn min_cost_inputs(params: &CesParams, y: f64, c: &[f64]) -> Result<Vec<f64>> {
    if !(y.is_finite() && y >= 0.0) {
        return Err(PmpError::Domain(format!(
            "target output must be nonnegative, got {y}"
        )));
    }
    if y == 0.0 {
        check_prices(params, c)?;
        return Ok(vec![0.0; params.beta.len()]);
    }
    let scale = y.powf(1.0 / params.delta);
    Ok(unit_bundle(params, c)?
        .into_iter()
        .map(|x| x * scale)
        .collect())
}

/// Profit-maximizing output when the marginal cost of `unit_cost * y^(1/delta)`
/// equals `price`: `y = (price * delta / unit_cost)^(delta / (1 - delta))`.
pub fn supply_from_unit_cost(price: f64, unit_cost: f64, delta: f64) -> f64 {
    if price <= 0.0 {
        return 0.0;
    }
    (price * delta / unit_cost).powf(delta / (1.0 - delta))
}

/// Optimal output and input bundle facing output price `effective_price`.
/// Non-positive prices shut the vessel down.
pub fn optimal_output(
    params: &CesParams,
    effective_price: f64,
    c: &[f64],
) -> Result<(f64, Vec<f64>)> {
    if !(params.delta > 0.0 && params.delta < 1.0) {
        return Err(PmpError::Domain(format!(
            "delta must lie in (0, 1), got {}",
            params.delta
        )));
    }
    let bundle = unit_bundle(params, c)?;
    if effective_price <= 0.0 {
        return Ok((0.0, vec![0.0; bundle.len()]));
    }
    let k: f64 = bundle.iter().zip(c).map(|(x, p)| x * p).sum();
    let y = supply_from_unit_cost(effective_price, k, params.delta);
    let scale = y.powf(1.0 / params.delta);
    Ok((y, bundle.into_iter().map(|x| x * scale).collect()))
}

/// A calibrated fleet: base-year records, their parameters, shadow values,
/// and the base-year catch limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetModel {
    pub input_ids: Vec<InputId>,
    pub records: Vec<VesselTargetRecord>,
    /// Parallel to `records`.
    pub params: Vec<CesParams>,
    /// Calibrated shadow value per target, $/lb.
    pub lambda: BTreeMap<TargetId, f64>,
    pub assumptions: GlobalAssumptions,
    pub base_acl: BTreeMap<TargetId, f64>,
}

impl FleetModel {
    pub fn targets(&self) -> impl Iterator<Item = &TargetId> {
        self.base_acl.keys()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&VesselTargetRecord, &CesParams)> {
        self.records.iter().zip(&self.params)
    }

    pub fn entries_for<'a>(
        &'a self,
        target: &'a TargetId,
    ) -> impl Iterator<Item = (&'a VesselTargetRecord, &'a CesParams)> + 'a {
        self.entries().filter(move |(r, _)| &r.target == target)
    }

    pub fn params_for(&self, vessel: &str, target: &TargetId) -> Option<&CesParams> {
        self.entries()
            .find(|(r, _)| r.vessel_id == vessel && &r.target == target)
            .map(|(_, p)| p)
    }

    pub fn vessels(&self) -> BTreeSet<&str> {
        self.records.iter().map(|r| r.vessel_id.as_str()).collect()
    }

    /// Every calibrated shadow value must be non-positive for the base-year
    /// limits to bind at the observed allocation.
    pub fn check_shadow_values(&self) -> Result<()> {
        for (target, lambda) in &self.lambda {
            if *lambda > 0.0 {
                return Err(PmpError::PositiveShadowValue {
                    target: target.clone(),
                    lambda: *lambda,
                });
            }
        }
        Ok(())
    }

    /// Keeps only the given vessels. Base limits are recomputed from the
    /// remaining observed catch.
    pub fn restrict_to_vessels(&self, vessels: &BTreeSet<String>) -> FleetModel {
        let (records, params): (Vec<_>, Vec<_>) = self
            .entries()
            .filter(|(r, _)| vessels.contains(&r.vessel_id))
            .map(|(r, p)| (r.clone(), p.clone()))
            .unzip();
        let mut base_acl: BTreeMap<TargetId, f64> =
            self.base_acl.keys().map(|t| (t.clone(), 0.0)).collect();
        for r in &records {
            *base_acl.entry(r.target.clone()).or_default() += r.catch;
        }
        base_acl.retain(|_, v| *v > 0.0);
        FleetModel {
            input_ids: self.input_ids.clone(),
            records,
            params,
            lambda: self.lambda.clone(),
            assumptions: self.assumptions,
            base_acl,
        }
    }

    /// Keeps only records and limits of the given targets.
    pub fn retain_targets(&self, targets: &BTreeSet<TargetId>) -> FleetModel {
        let (records, params): (Vec<_>, Vec<_>) = self
            .entries()
            .filter(|(r, _)| targets.contains(&r.target))
            .map(|(r, p)| (r.clone(), p.clone()))
            .unzip();
        FleetModel {
            input_ids: self.input_ids.clone(),
            records,
            params,
            lambda: self.lambda.clone(),
            assumptions: self.assumptions,
            base_acl: self
                .base_acl
                .iter()
                .filter(|(t, _)| targets.contains(*t))
                .map(|(t, v)| (t.clone(), *v))
                .collect(),
        }
    }

    /// Scales the price of each listed input; expenditures change by the same factor.
    pub fn with_input_cost_factors(&self, factors: &BTreeMap<InputId, f64>) -> Result<FleetModel> {
        let mut model = self.clone();
        for (input, factor) in factors {
            if !(factor.is_finite() && *factor > 0.0) {
                return Err(PmpError::Domain(format!(
                    "cost factor for {input} must be positive, got {factor}"
                )));
            }
            let Some(j) = self.input_ids.iter().position(|i| i == input) else {
                return Err(PmpError::Domain(format!("unknown input {input}")));
            };
            for record in &mut model.records {
                record.input_prices[j] *= factor;
            }
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(alpha: f64, delta: f64, rho: f64) -> CesParams {
        CesParams {
            alpha,
            beta: vec![1.0],
            delta,
            rho,
            mu: 0.0,
        }
    }

    fn two_input() -> CesParams {
        CesParams {
            alpha: 2.0,
            beta: vec![0.5, 0.5],
            delta: 1.0 / 3.0,
            rho: -4.882353,
            mu: 0.0,
        }
    }

    #[test]
    fn delta_examples() {
        assert!((delta_from_eta(0.5).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(delta_from_eta(1.0).unwrap(), 0.5);
        assert!(delta_from_eta(0.0).is_err());
        assert!(delta_from_eta(-1.0).is_err());
    }

    #[test]
    fn rho_examples() {
        assert!((rho_from_sigma(0.17).unwrap() + 4.882352941176471).abs() < 1e-12);
        assert_eq!(rho_from_sigma(1.0).unwrap(), 0.0);
        assert_eq!(rho_from_sigma(0.5).unwrap(), -1.0);
        assert!(rho_from_sigma(0.0).is_err());
    }

    #[test]
    fn price_composition() {
        let mut r =
            VesselTargetRecord::new("v", TargetId::Swordfish, vec![1.0], 1.0, 4.30, 0.50, 0.20);
        assert!((compose_price(&r).unwrap() - 5.00).abs() < 1e-12);
        r.price_base = 7.99;
        r.price_premium = 0.0;
        r.price_bycatch = 0.0;
        assert_eq!(compose_price(&r).unwrap(), 7.99);
        r.price_base = 4.30;
        r.price_premium = -5.0;
        assert!(matches!(compose_price(&r), Err(PmpError::InvalidRecord(_))));
    }

    #[test]
    fn production_examples() {
        let p = single(1.0, 1.0 / 3.0, -4.882353);
        assert!((production(&p, &[8.0]).unwrap() - 2.0).abs() < 1e-12);

        // Scalar evaluation of the closed form, computed independently.
        let y = production(&two_input(), &[1.0, 2.0]).unwrap();
        assert!((y - 2.092153777523228).abs() < 1e-12, "{y}");

        assert_eq!(production(&two_input(), &[0.0, 2.0]).unwrap(), 0.0);
        assert!(production(&two_input(), &[-1.0, 2.0]).is_err());
    }

    #[test]
    fn zero_share_input_is_ignored() {
        let p = CesParams {
            alpha: 2.0,
            beta: vec![0.5, 0.5, 0.0],
            ..two_input()
        };
        let a = production(&p, &[1.0, 2.0, 0.0]).unwrap();
        let b = production(&two_input(), &[1.0, 2.0]).unwrap();
        assert_eq!(a, b);
        let mp = marginal_products(&p, &[1.0, 2.0, 0.0]).unwrap();
        assert_eq!(mp[2], 0.0);
    }

    #[test]
    fn cobb_douglas_limit() {
        let p = CesParams {
            alpha: 1.5,
            beta: vec![0.25, 0.75],
            delta: 0.5,
            rho: 0.0,
            mu: 0.0,
        };
        let x = [4.0, 9.0];
        let expected = 1.5 * (4.0_f64.powf(0.25) * 9.0_f64.powf(0.75)).powf(0.5);
        assert!((production(&p, &x).unwrap() - expected).abs() < 1e-12);
        // Nearby rho converges to the same value.
        let near = CesParams {
            rho: 1e-7,
            ..p.clone()
        };
        assert!((production(&near, &x).unwrap() - expected).abs() < 1e-5);
    }

    #[test]
    fn marginal_product_examples() {
        let p = single(1.0, 1.0 / 3.0, -4.882353);
        let mp = marginal_product(&p, &[8.0], 0).unwrap();
        assert!((mp - 1.0 / 12.0).abs() < 1e-14);
        assert!(matches!(
            marginal_product(&two_input(), &[0.0, 1.0], 0),
            Err(PmpError::Singular { index: 0 })
        ));
    }

    #[test]
    fn marginal_product_matches_central_difference() {
        let p = two_input();
        let x = [1.0, 2.0];
        for j in 0..2 {
            let h = 1e-6 * x[j];
            let mut up = x;
            let mut dn = x;
            up[j] += h;
            dn[j] -= h;
            let fd = (production(&p, &up).unwrap() - production(&p, &dn).unwrap()) / (2.0 * h);
            let mp = marginal_product(&p, &x, j).unwrap();
            assert!(((mp - fd) / mp).abs() < 1e-5, "input {j}: {mp} vs {fd}");
        }
    }

    #[test]
    fn min_cost_examples() {
        let p = single(1.0, 1.0 / 3.0, -4.882353);
        assert_eq!(min_cost_inputs(&p, 0.0, &[1.0]).unwrap(), vec![0.0]);
        let x = min_cost_inputs(&p, 2.0, &[1.0]).unwrap();
        assert!((x[0] - 8.0).abs() < 1e-12);
        assert!(min_cost_inputs(&p, -1.0, &[1.0]).is_err());
        assert!(min_cost_inputs(&p, 1.0, &[0.0]).is_err());
    }

    #[test]
    fn min_cost_equates_price_ratios() {
        let p = CesParams {
            alpha: 1.0,
            beta: vec![0.6, 0.3, 0.1],
            delta: 0.4,
            rho: -2.0,
            mu: 0.0,
        };
        let c = [1.0, 2.5, 0.7];
        let x = min_cost_inputs(&p, 3.0, &c).unwrap();
        assert!((production(&p, &x).unwrap() - 3.0).abs() < 1e-12);
        let mp = marginal_products(&p, &x).unwrap();
        for j in 1..3 {
            assert!(((mp[j] / mp[0]) / (c[j] / c[0]) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn optimal_output_examples() {
        let p = single(1.0, 1.0 / 3.0, -4.882353);
        let (y, x) = optimal_output(&p, 3.0, &[1.0]).unwrap();
        assert!((y - 1.0).abs() < 1e-12);
        assert!((x[0] - 1.0).abs() < 1e-12);
        let (y4, _) = optimal_output(&p, 12.0, &[1.0]).unwrap();
        assert!((y4 / y - 2.0).abs() < 1e-12);
        assert_eq!(optimal_output(&p, 0.0, &[1.0]).unwrap(), (0.0, vec![0.0]));
        assert_eq!(optimal_output(&p, -2.0, &[1.0]).unwrap(), (0.0, vec![0.0]));
    }

    #[test]
    fn labels_round_trip() {
        for t in TargetId::DEFAULTS {
            assert_eq!(t.to_string().parse::<TargetId>().unwrap(), t);
        }
        assert_eq!("wcpo-bigeye".parse::<TargetId>().unwrap(), TargetId::Wcpo);
        assert_eq!(
            "albacore".parse::<TargetId>().unwrap(),
            TargetId::Other("albacore".into())
        );
        for i in InputId::defaults() {
            assert_eq!(i.to_string().parse::<InputId>().unwrap(), i);
        }
        assert_eq!(
            "captain_pay".parse::<InputId>().unwrap(),
            InputId::CaptainPay
        );
    }
}
