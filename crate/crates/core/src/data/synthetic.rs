//! Seeded synthetic fleet standing in for confidential survey data.
//!
//! Expenditure draws are log-normal and then moment-matched so that, among the
//! vessels fishing each target, every input's sample mean and standard
//! deviation equal the published survey values. Catch is set from a per-vessel
//! revenue-to-expenditure ratio, so about one vessel in twenty spends more than
//! it earns.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::dataset::{DatasetMetadata, FleetDataset, GeneratorInfo, SCHEMA_VERSION};
use crate::error::{PmpError, Result};
use crate::fleet::{GlobalAssumptions, InputId, TargetId, VesselTargetRecord};

/// Survey mean and standard deviation of annual expenditure ($) per input,
/// ordered like [`InputId::defaults`].
pub const INPUT_MOMENTS: [(TargetId, [(f64, f64); 6]); 3] = [
    (
        TargetId::Wcpo,
        [
            (154_045.0, 62_542.0),
            (75_700.0, 47_061.0),
            (47_255.0, 46_103.0),
            (48_722.0, 17_761.0),
            (31_477.0, 12_796.0),
            (19_346.0, 8_583.0),
        ],
    ),
    (
        TargetId::Epo,
        [
            (27_134.0, 31_917.0),
            (13_623.0, 18_167.0),
            (7_245.0, 12_246.0),
            (7_928.0, 8_635.0),
            (5_029.0, 5_652.0),
            (3_160.0, 3_479.0),
        ],
    ),
    (
        TargetId::Swordfish,
        [
            (16_318.0, 44_331.0),
            (6_962.0, 19_937.0),
            (1_978.0, 6_192.0),
            (4_013.0, 10_787.0),
            (3_195.0, 8_844.0),
            (2_062.0, 5_618.0),
        ],
    ),
];

pub const BASE_YEAR: i32 = 2012;

const BIGEYE_PRICE: f64 = 7.99;
const SWORDFISH_PRICE: f64 = 4.30;
/// Median and log-scale spread of revenue over expenditure.
const REVENUE_RATIO: (f64, f64) = (5.0, 0.978);
const DOLLARS_PER_HOOK: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub n_vessels: usize,
    /// Share of vessels fishing each target.
    pub participation: BTreeMap<TargetId, f64>,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            n_vessels: 128,
            participation: BTreeMap::from([
                (TargetId::Wcpo, 127.0 / 128.0),
                (TargetId::Epo, 94.0 / 128.0),
                (TargetId::Swordfish, 17.0 / 128.0),
            ]),
        }
    }
}

impl SyntheticConfig {
    pub fn new(seed: u64, n_vessels: usize) -> Self {
        Self {
            seed,
            n_vessels,
            ..Self::default()
        }
    }
}

fn moments_for(target: &TargetId) -> Option<&'static [(f64, f64); 6]> {
    INPUT_MOMENTS
        .iter()
        .find(|(t, _)| t == target)
        .map(|(_, m)| m)
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let ss = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Maps standard-normal draws to `a * exp(b z)` with sample mean `mean` and
/// sample standard deviation `sd`.
fn match_moments(z: &[f64], mean: f64, sd: f64) -> Vec<f64> {
    if z.len() < 2 || sd == 0.0 {
        return vec![mean; z.len()];
    }
    // Shifting by the largest draw keeps exp() finite; both moments scale out.
    let top = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let spread = |b: f64| -> Vec<f64> { z.iter().map(|zi| (b * (zi - top)).exp()).collect() };
    let cv_at = |b: f64| {
        let v = spread(b);
        let (m, s) = mean_sd(&v);
        s / m
    };
    let target = sd / mean;
    // The sample coefficient of variation cannot exceed sqrt(n); for very few
    // draws settle for a spread somewhat below that.
    let cap = 0.9 * (z.len() as f64).sqrt();
    let target = target.min(cap);
    let (mut lo, mut hi) = (0.0, 1.0);
    while cv_at(hi) < target && hi < 1e3 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cv_at(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    let v = spread(0.5 * (lo + hi));
    let (m, _) = mean_sd(&v);
    v.iter().map(|x| x * mean / m).collect()
}

fn truncated_normal(rng: &mut ChaCha8Rng, sd: f64, bound: f64) -> f64 {
    let normal = Normal::new(0.0, sd).expect("valid normal");
    loop {
        let x: f64 = normal.sample(rng);
        if x.abs() <= bound {
            return x;
        }
    }
}

fn round_to(x: f64, step: f64) -> f64 {
    (x / step).round() * step
}

struct Vessel {
    id: String,
    premium_bigeye: f64,
    premium_swordfish: f64,
    bycatch_bigeye: f64,
    bycatch_swordfish: f64,
    revenue_ratio: f64,
    hook_noise: f64,
}

/// Draws a fleet dataset and its metadata. Output depends only on `config`.
pub fn generate_synthetic_fleet(
    config: &SyntheticConfig,
) -> Result<(FleetDataset, DatasetMetadata)> {
    let n = config.n_vessels;
    if n == 0 {
        return Err(PmpError::Domain("need at least one vessel".into()));
    }
    if config.participation.is_empty() {
        return Err(PmpError::Domain(
            "no target participation rates given".into(),
        ));
    }
    for (target, rate) in &config.participation {
        if moments_for(target).is_none() {
            return Err(PmpError::Domain(format!(
                "no expenditure moments for target {target}"
            )));
        }
        if !(0.0..=1.0).contains(rate) {
            return Err(PmpError::Domain(format!(
                "participation rate for {target} must lie in [0, 1], got {rate}"
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let width = n.to_string().len().max(3);
    let ratio = LogNormal::new(REVENUE_RATIO.0.ln(), REVENUE_RATIO.1).expect("valid ratio");
    let bycatch_bigeye = LogNormal::new(0.6f64.ln(), 0.5).expect("valid bycatch");
    let bycatch_swordfish = LogNormal::new(1.2f64.ln(), 0.5).expect("valid bycatch");
    let hooks = LogNormal::new(0.0, 0.2).expect("valid hooks");

    let vessels: Vec<Vessel> = (0..n)
        .map(|i| Vessel {
            id: format!("V{:0width$}", i + 1),
            premium_bigeye: truncated_normal(&mut rng, 0.6, 2.0),
            premium_swordfish: truncated_normal(&mut rng, 0.4, 1.5),
            bycatch_bigeye: bycatch_bigeye.sample(&mut rng),
            bycatch_swordfish: bycatch_swordfish.sample(&mut rng),
            revenue_ratio: ratio.sample(&mut rng),
            hook_noise: hooks.sample(&mut rng),
        })
        .collect();

    let mut fishes = vec![Vec::<TargetId>::new(); n];
    for (target, rate) in &config.participation {
        let count = ((rate * n as f64).round() as usize).min(n);
        let mut chosen = sample(&mut rng, n, count).into_vec();
        chosen.sort_unstable();
        for i in chosen {
            fishes[i].push(target.clone());
        }
    }
    let fallback = config
        .participation
        .iter()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(t, _)| t.clone())
        .expect("non-empty participation");
    for f in fishes.iter_mut() {
        if f.is_empty() {
            f.push(fallback.clone());
        }
    }

    let input_ids = InputId::defaults();
    let mut records = Vec::new();
    for target in config.participation.keys() {
        let members: Vec<usize> = (0..n).filter(|i| fishes[*i].contains(target)).collect();
        if members.is_empty() {
            continue;
        }
        let moments = moments_for(target).expect("checked above");
        let mut columns = Vec::with_capacity(moments.len());
        for (mean, sd) in moments {
            let z: Vec<f64> = members.iter().map(|_| rng.sample(StandardNormal)).collect();
            columns.push(match_moments(&z, *mean, *sd));
        }
        for (k, &i) in members.iter().enumerate() {
            let v = &vessels[i];
            let spend: Vec<f64> = columns
                .iter()
                .map(|c| round_to(c[k], 0.01).max(0.01))
                .collect();
            let total: f64 = spend.iter().sum();
            let (base, premium, bycatch) = if target.is_bigeye() {
                (BIGEYE_PRICE, v.premium_bigeye, v.bycatch_bigeye)
            } else {
                (SWORDFISH_PRICE, v.premium_swordfish, v.bycatch_swordfish)
            };
            let premium = round_to(premium, 0.01);
            let bycatch = round_to(bycatch, 0.01);
            let price = base + premium + bycatch;
            let catch = round_to(v.revenue_ratio * total / price, 0.1).max(0.1);
            let mut record = VesselTargetRecord::new(
                v.id.clone(),
                target.clone(),
                spend,
                catch,
                base,
                premium,
                bycatch,
            );
            record.hooks = Some((total / DOLLARS_PER_HOOK * v.hook_noise).round().max(1.0));
            records.push(record);
        }
    }
    records.sort_by_key(|r| r.key());

    let distributions = BTreeMap::from([
        (
            "expenditure".to_string(),
            "log-normal, moment-matched per target and input".to_string(),
        ),
        (
            "revenue_ratio".to_string(),
            format!("log-normal(ln {}, {})", REVENUE_RATIO.0, REVENUE_RATIO.1),
        ),
        (
            "price_premium".to_string(),
            "truncated normal: bigeye N(0, 0.6) on [-2, 2], swordfish N(0, 0.4) on [-1.5, 1.5]"
                .to_string(),
        ),
        (
            "price_bycatch".to_string(),
            "log-normal: bigeye median 0.6, swordfish median 1.2, log sd 0.5".to_string(),
        ),
        (
            "hooks".to_string(),
            format!("expenditure / {DOLLARS_PER_HOOK} times log-normal(0, 0.2)"),
        ),
    ]);
    let metadata = DatasetMetadata {
        schema_version: SCHEMA_VERSION,
        base_year: BASE_YEAR,
        assumptions: GlobalAssumptions::default(),
        cost_index: None,
        generator: Some(GeneratorInfo {
            seed: config.seed,
            n_vessels: n,
            participation: config.participation.clone(),
            distributions,
        }),
    };
    Ok((FleetDataset { input_ids, records }, metadata))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moment_matching_is_exact_before_rounding() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let z: Vec<f64> = (0..50).map(|_| rng.sample(StandardNormal)).collect();
        let v = match_moments(&z, 154_045.0, 62_542.0);
        let (m, s) = mean_sd(&v);
        assert!((m / 154_045.0 - 1.0).abs() < 1e-12);
        assert!((s / 62_542.0 - 1.0).abs() < 1e-9);
        assert!(v.iter().all(|x| *x > 0.0));
    }

    #[test]
    fn participation_counts() {
        let (data, meta) = generate_synthetic_fleet(&SyntheticConfig::default()).unwrap();
        let count = |t: TargetId| data.records.iter().filter(|r| r.target == t).count();
        // A vessel drawn into no target is assigned to the most common one.
        assert!((127..=128).contains(&count(TargetId::Wcpo)));
        assert_eq!(count(TargetId::Epo), 94);
        assert_eq!(count(TargetId::Swordfish), 17);
        assert_eq!(meta.base_year, 2012);
        let vessels: std::collections::BTreeSet<_> =
            data.records.iter().map(|r| &r.vessel_id).collect();
        assert_eq!(vessels.len(), 128);
    }

    #[test]
    fn single_vessel_fleet() {
        let (data, _) = generate_synthetic_fleet(&SyntheticConfig::new(7, 1)).unwrap();
        assert!(!data.records.is_empty());
        for r in &data.records {
            r.validate().unwrap();
        }
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(generate_synthetic_fleet(&SyntheticConfig::new(1, 0)).is_err());
        let mut c = SyntheticConfig::default();
        c.participation
            .insert(TargetId::Other("albacore".into()), 0.5);
        assert!(generate_synthetic_fleet(&c).is_err());
        let mut c = SyntheticConfig::default();
        c.participation.insert(TargetId::Epo, 1.5);
        assert!(generate_synthetic_fleet(&c).is_err());
    }
}
