//! Synthetic catalogs with planted styles.
//!
//! Every item gets a latent style drawn uniformly from the unit cube. Its
//! features are a fixed lift of `style ⊕ one-hot(category)` plus Gaussian
//! noise, so category identity is visible in feature space while style is
//! only partly so. Co-occurrence edges join items of different categories
//! with probability proportional to `exp(-|s_a - s_b|^2 / sigma^2)`, scaled
//! so the expected mean degree hits the configured target. A fraction of items
//! is then relabeled to a wrong category without touching their features.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Catalog, Category, Item, ItemId};
use crate::seed;

const NAMES: [&str; 10] = [
    "shirts", "jeans", "shoes", "jackets", "bags", "hats", "dresses", "skirts", "belts", "scarves",
];

/// Name of the `i`-th synthetic category.
pub fn category_name(i: usize) -> Category {
    match NAMES.get(i) {
        Some(n) => Category::from(*n),
        None => Category::new(format!("category{i}")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lift {
    /// Gaussian matrix with entries of variance `1 / feature_dim`.
    Random,
    /// `style ⊕ one-hot` copied into the leading coordinates, zero padded.
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub num_categories: usize,
    pub items_per_category: usize,
    pub latent_dim: usize,
    pub feature_dim: usize,
    pub feature_noise: f64,
    pub edge_bandwidth: f64,
    pub edges_per_item: f64,
    pub label_noise_rate: f64,
    pub lift: Lift,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            num_categories: 5,
            items_per_category: 400,
            latent_dim: 2,
            feature_dim: 16,
            feature_noise: 0.05,
            edge_bandwidth: 0.1,
            edges_per_item: 10.0,
            label_noise_rate: 0.0,
            lift: Lift::Random,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Parameter(m.to_string()));
        if self.num_categories < 2 {
            return bad("need at least 2 categories");
        }
        if self.items_per_category < 2 {
            return bad("need at least 2 items per category");
        }
        if self.latent_dim == 0 || self.feature_dim < self.latent_dim {
            return bad("need 0 < latent_dim <= feature_dim");
        }
        if self.lift == Lift::Identity && self.feature_dim < self.latent_dim + self.num_categories {
            return bad("identity lift needs feature_dim >= latent_dim + num_categories");
        }
        if !(self.feature_noise.is_finite() && self.feature_noise >= 0.0) {
            return bad("feature_noise must be nonnegative");
        }
        if !(self.edge_bandwidth.is_finite() && self.edge_bandwidth > 0.0) {
            return bad("edge_bandwidth must be positive");
        }
        if !(self.edges_per_item.is_finite() && self.edges_per_item >= 0.0) {
            return bad("edges_per_item must be nonnegative");
        }
        if !(0.0..=1.0).contains(&self.label_noise_rate) {
            return bad("label_noise_rate must lie in [0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCatalog {
    pub catalog: Catalog,
    /// Category each item was generated in, before label noise.
    pub generation_category: BTreeMap<ItemId, Category>,
    /// Items whose label differs from their generation category.
    pub mislabeled: BTreeSet<ItemId>,
}

/// Scale `lambda` so that `sum(min(1, lambda * w)) == target`.
fn calibrate(weights: &[f64], target: f64) -> Result<f64> {
    if target == 0.0 {
        return Ok(0.0);
    }
    let reachable = weights.iter().filter(|w| **w > 0.0).count() as f64;
    if target > reachable {
        return Err(Error::Calibration(format!(
            "target of {target} edges exceeds the {reachable} cross-category pairs with nonzero weight"
        )));
    }
    let expected = |lambda: f64| weights.iter().map(|w| (lambda * w).min(1.0)).sum::<f64>();
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while expected(hi) < target {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Calibration(
                "edge weights too small to calibrate".into(),
            ));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if expected(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

pub fn generate_catalog(config: &SynthConfig) -> Result<SyntheticCatalog> {
    config.validate()?;
    let c = config.num_categories;
    let per = config.items_per_category;
    let total = c * per;
    let code_dim = config.latent_dim + c;
    let d = config.feature_dim;

    let mut style_rng = seed::rng(config.seed, "synth/style");
    let styles: Vec<Vec<f64>> = (0..total)
        .map(|_| {
            (0..config.latent_dim)
                .map(|_| style_rng.random::<f64>())
                .collect()
        })
        .collect();
    let gen_cat: Vec<usize> = (0..total).map(|i| i / per).collect();

    let lift: Vec<f64> = match config.lift {
        Lift::Identity => {
            let mut m = vec![0.0; d * code_dim];
            for j in 0..code_dim {
                m[j * code_dim + j] = 1.0;
            }
            m
        }
        Lift::Random => {
            let mut rng = seed::rng(config.seed, "synth/lift");
            let normal = Normal::new(0.0, 1.0 / (d as f64).sqrt()).expect("valid std");
            (0..d * code_dim).map(|_| normal.sample(&mut rng)).collect()
        }
    };
    let mut noise_rng = seed::rng(config.seed, "synth/noise");
    let noise = Normal::new(0.0, config.feature_noise.max(f64::MIN_POSITIVE)).expect("valid std");
    let features: Vec<Vec<f64>> = (0..total)
        .map(|i| {
            let mut code = styles[i].clone();
            code.extend((0..c).map(|k| if k == gen_cat[i] { 1.0 } else { 0.0 }));
            (0..d)
                .map(|r| {
                    let row = &lift[r * code_dim..(r + 1) * code_dim];
                    let v: f64 = row.iter().zip(&code).map(|(a, x)| a * x).sum();
                    if config.feature_noise > 0.0 {
                        v + noise.sample(&mut noise_rng)
                    } else {
                        v
                    }
                })
                .collect()
        })
        .collect();

    // Cross-category pairs in (i, j) order, i < j.
    let sigma2 = config.edge_bandwidth * config.edge_bandwidth;
    let mut pairs = Vec::new();
    let mut weights = Vec::new();
    for i in 0..total {
        for j in i + 1..total {
            if gen_cat[i] != gen_cat[j] {
                let d2: f64 = styles[i]
                    .iter()
                    .zip(&styles[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                pairs.push((i as u32, j as u32));
                weights.push((-d2 / sigma2).exp());
            }
        }
    }
    let target = (total as f64 * config.edges_per_item / 2.0).round();
    let lambda = calibrate(&weights, target)?;
    let mut edge_rng = seed::rng(config.seed, "synth/edges");
    let ids: Vec<ItemId> = (0..total)
        .map(|i| ItemId::new(format!("item{i:06}")))
        .collect();
    let mut edges = Vec::new();
    for (&(i, j), w) in pairs.iter().zip(&weights) {
        let p = (lambda * w).min(1.0);
        if edge_rng.random::<f64>() < p {
            edges.push((ids[i as usize].clone(), ids[j as usize].clone()));
        }
    }

    let mut labels = gen_cat.clone();
    let noisy = (config.label_noise_rate * total as f64).round() as usize;
    let mut label_rng = seed::rng(config.seed, "synth/labels");
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut label_rng);
    for &i in order.iter().take(noisy) {
        // Uniform over the other categories.
        let k = label_rng.random_range(0..c - 1);
        labels[i] = if k >= gen_cat[i] { k + 1 } else { k };
    }

    let items = (0..total).map(|i| Item {
        id: ids[i].clone(),
        category: category_name(labels[i]),
        features: features[i].clone(),
        planted_style: Some(styles[i].clone()),
    });
    let catalog = Catalog::new(d, items, edges)?;
    let generation_category = (0..total)
        .map(|i| (ids[i].clone(), category_name(gen_cat[i])))
        .collect();
    let mislabeled = (0..total)
        .filter(|&i| labels[i] != gen_cat[i])
        .map(|i| ids[i].clone())
        .collect();
    Ok(SyntheticCatalog {
        catalog,
        generation_category,
        mislabeled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::euclidean;

    fn small() -> SynthConfig {
        SynthConfig {
            num_categories: 3,
            items_per_category: 60,
            latent_dim: 2,
            feature_dim: 8,
            edges_per_item: 4.0,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn no_label_noise_keeps_labels() {
        let s = generate_catalog(&small()).unwrap();
        assert!(s.mislabeled.is_empty());
        for item in s.catalog.items() {
            assert_eq!(&item.category, &s.generation_category[&item.id]);
        }
    }

    #[test]
    fn identity_lift_without_noise() {
        let cfg = SynthConfig {
            feature_noise: 0.0,
            lift: Lift::Identity,
            feature_dim: 5,
            ..small()
        };
        let s = generate_catalog(&cfg).unwrap();
        for item in s.catalog.items() {
            let style = item.planted_style.as_ref().unwrap();
            let k = NAMES
                .iter()
                .position(|n| *n == item.category.as_str())
                .unwrap();
            let mut want = style.clone();
            want.extend((0..3).map(|j| if j == k { 1.0 } else { 0.0 }));
            assert_eq!(item.features, want);
        }
    }

    #[test]
    fn edges_are_cross_category_before_noise() {
        let cfg = SynthConfig {
            label_noise_rate: 0.2,
            ..small()
        };
        let s = generate_catalog(&cfg).unwrap();
        assert_eq!(s.mislabeled.len(), 36);
        assert!(s.catalog.edge_count() > 0);
        for e in s.catalog.edges() {
            assert_ne!(s.generation_category[e.a()], s.generation_category[e.b()]);
        }
        for id in &s.mislabeled {
            assert_ne!(
                s.catalog.category_of(id).unwrap(),
                &s.generation_category[id]
            );
        }
    }

    #[test]
    fn narrow_bandwidth_prefers_similar_styles() {
        let cfg = SynthConfig {
            edge_bandwidth: 0.05,
            ..small()
        };
        let s = generate_catalog(&cfg).unwrap();
        let style = |id: &ItemId| s.catalog.item(id).unwrap().planted_style.clone().unwrap();
        let edge_mean: f64 = s
            .catalog
            .edges()
            .map(|e| euclidean(&style(e.a()), &style(e.b())))
            .sum::<f64>()
            / s.catalog.edge_count() as f64;
        // Monte-Carlo mean over all cross-category non-edges.
        let items: Vec<&Item> = s.catalog.items().collect();
        let (mut sum, mut n) = (0.0, 0usize);
        for (i, a) in items.iter().enumerate() {
            for b in &items[i + 1..] {
                if a.category != b.category && !s.catalog.has_edge(&a.id, &b.id) {
                    sum += euclidean(&style(&a.id), &style(&b.id));
                    n += 1;
                }
            }
        }
        assert!(
            edge_mean < 0.5 * (sum / n as f64),
            "{edge_mean} vs {}",
            sum / n as f64
        );
    }

    #[test]
    fn mean_degree_near_target() {
        let s = generate_catalog(&small()).unwrap();
        let degree = 2.0 * s.catalog.edge_count() as f64 / s.catalog.len() as f64;
        assert!((degree - 4.0).abs() < 0.6, "{degree}");
    }

    #[test]
    fn infeasible_degree_rejected() {
        let cfg = SynthConfig {
            edges_per_item: 1000.0,
            ..small()
        };
        assert!(matches!(generate_catalog(&cfg), Err(Error::Calibration(_))));
    }

    #[test]
    fn deterministic() {
        assert_eq!(
            generate_catalog(&small()).unwrap(),
            generate_catalog(&small()).unwrap()
        );
    }
}
