//! Per-category style index and robust nearest-neighbor retrieval.
//!
//! A plain nearest-neighbor lookup inside a target category is fragile under
//! label noise: an item of the query's own kind that carries the target label
//! sits closer to the query than any genuine target item. The robust lookup
//! routes through the target category's k-means structure instead:
//!
//! 1. `c*` = the target centroid nearest to the query;
//! 2. candidates = the `n` target items nearest to `c*`;
//! 3. answer = the candidate nearest to the query.
//!
//! Outliers far from every target centroid never enter the candidate set.
//! All ties are broken toward the lowest index or item id.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::embed::{embed, euclidean, ProjectionModel};
use crate::error::{Error, Result};
use crate::graph::{Catalog, Category, Item, ItemId};
use crate::seed;

pub const DEFAULT_K: usize = 20;
pub const DEFAULT_N: usize = 5;
pub const DEFAULT_MAX_ITERS: usize = 100;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    /// Within-cluster sum of squares after every assignment step.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    /// Set when the requested `k` exceeded the number of points.
    pub clamped_from: Option<usize>,
}

impl KMeans {
    pub fn objective(&self) -> f64 {
        self.objective_trace.last().copied().unwrap_or(0.0)
    }
}

/// Index of the centroid nearest to `point`; ties go to the lowest index.
pub fn nearest_centroid(point: &[f64], centroids: &[Vec<f64>]) -> Result<usize> {
    if centroids.is_empty() {
        return Err(Error::EmptyInput("no centroids".into()));
    }
    Ok(nearest(point, centroids))
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let mut objective = 0.0;
    let assignments = points
        .iter()
        .map(|p| {
            let i = nearest(p, centroids);
            objective += sq_dist(p, &centroids[i]);
            i
        })
        .collect();
    (assignments, objective)
}

/// k-means++ seeding. Points at zero distance from every chosen center get
/// zero weight; once all weights vanish the remaining centers repeat the
/// first unchosen point in order.
fn plus_plus(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut chosen = vec![false; points.len()];
    let first = rng.random_range(0..points.len());
    chosen[first] = true;
    let mut centers = vec![points[first].clone()];
    let mut dist: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut pick = None;
            for (i, d) in dist.iter().enumerate() {
                if *d > 0.0 {
                    pick = Some(i);
                    if target < *d {
                        break;
                    }
                    target -= d;
                }
            }
            pick.expect("positive total weight")
        } else {
            chosen.iter().position(|c| !c).unwrap_or(0)
        };
        chosen[pick] = true;
        centers.push(points[pick].clone());
        for (d, p) in dist.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &points[pick]));
        }
    }
    centers
}

/// Lloyd's algorithm with seeded k-means++ initialization.
///
/// Stops when an assignment step changes nothing or after `max_iters`
/// updates. A cluster left empty by an update is re-seeded at the point
/// farthest from its own centroid. The returned assignments are always
/// nearest-centroid consistent with the returned centroids.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, max_iters: usize) -> Result<KMeans> {
    if k == 0 {
        return Err(Error::Parameter("k must be at least 1".into()));
    }
    if points.is_empty() {
        return Err(Error::EmptyInput("no points to cluster".into()));
    }
    let dim = points[0].len();
    for p in points {
        if p.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                actual: p.len(),
            });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("point has non-finite coordinates".into()));
        }
    }
    let clamped_from = (k > points.len()).then_some(k);
    if let Some(req) = clamped_from {
        log::warn!("k = {req} exceeds {} points; clamped", points.len());
    }
    let k = k.min(points.len());

    let mut rng = seed::rng(seed, "kmeans/init");
    let mut centroids = plus_plus(points, k, &mut rng);
    let (mut assignments, objective) = assign(points, &centroids);
    let mut trace = vec![objective];
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        update(points, &assignments, &mut centroids);
        let (next, objective) = assign(points, &centroids);
        trace.push(objective);
        let stable = next == assignments;
        assignments = next;
        if stable {
            break;
        }
    }
    Ok(KMeans {
        centroids,
        assignments,
        objective_trace: trace,
        iterations,
        clamped_from,
    })
}

fn update(points: &[Vec<f64>], assignments: &[usize], centroids: &mut [Vec<f64>]) {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; centroids.len()];
    let mut counts = vec![0usize; centroids.len()];
    for (p, &a) in points.iter().zip(assignments) {
        counts[a] += 1;
        for (s, v) in sums[a].iter_mut().zip(p) {
            *s += v;
        }
    }
    let mut taken = vec![false; points.len()];
    for c in 0..centroids.len() {
        if counts[c] > 0 {
            centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
        }
    }
    for c in 0..centroids.len() {
        if counts[c] == 0 {
            // Farthest from its own (already updated) centroid; ties to the
            // lowest point index.
            let mut far = None;
            let mut far_d = -1.0;
            for (i, (p, &a)) in points.iter().zip(assignments).enumerate() {
                let d = sq_dist(p, &centroids[a]);
                if !taken[i] && d > far_d {
                    far = Some(i);
                    far_d = d;
                }
            }
            if let Some(i) = far {
                taken[i] = true;
                centroids[c] = points[i].clone();
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexedItem {
    pub id: ItemId,
    pub style: Vec<f64>,
    pub cluster: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryIndex {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    /// Sorted by id.
    pub items: Vec<IndexedItem>,
}

/// Embedded items grouped by category label with their k-means structure.
/// Serialized as `index.json`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StyleIndex {
    pub categories: BTreeMap<Category, CategoryIndex>,
}

impl StyleIndex {
    /// Embeds every item in the catalog and clusters each category with
    /// `k` clamped to the category size.
    pub fn build(
        catalog: &Catalog,
        model: &ProjectionModel,
        k: usize,
        seed: u64,
        max_iters: usize,
    ) -> Result<Self> {
        let mut categories = BTreeMap::new();
        for (category, ids) in catalog.by_category() {
            let mut styles = Vec::with_capacity(ids.len());
            for id in &ids {
                let item = catalog.item(id).expect("id from catalog");
                styles.push(embed(model, &item.features)?);
            }
            let km = kmeans(
                &styles,
                k,
                seed::derive(seed, &format!("index/{category}")),
                max_iters,
            )?;
            let items = ids
                .into_iter()
                .zip(styles)
                .zip(&km.assignments)
                .map(|((id, style), &cluster)| IndexedItem { id, style, cluster })
                .collect();
            categories.insert(
                category,
                CategoryIndex {
                    k: km.centroids.len(),
                    centroids: km.centroids,
                    items,
                },
            );
        }
        Ok(StyleIndex { categories })
    }

    pub fn category(&self, category: &Category) -> Result<&CategoryIndex> {
        self.categories
            .get(category)
            .filter(|c| !c.items.is_empty() && !c.centroids.is_empty())
            .ok_or_else(|| Error::RetrievalDomain(category.clone()))
    }

    /// Indexed style vector and category of an item.
    pub fn lookup(&self, id: &ItemId) -> Option<(&Category, &[f64])> {
        self.categories.iter().find_map(|(cat, idx)| {
            idx.items
                .binary_search_by(|it| it.id.cmp(id))
                .ok()
                .map(|i| (cat, idx.items[i].style.as_slice()))
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let index: StyleIndex = serde_json::from_str(text)?;
        for (cat, ci) in &index.categories {
            if ci.centroids.len() != ci.k || ci.items.iter().any(|it| it.cluster >= ci.k) {
                return Err(Error::Parameter(format!(
                    "index for `{cat}` is inconsistent"
                )));
            }
            if ci.items.windows(2).any(|w| w[0].id >= w[1].id) {
                return Err(Error::Parameter(format!(
                    "index items for `{cat}` are not sorted by id"
                )));
            }
        }
        Ok(index)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Ranks items by distance to `anchor`, ties by id, keeping the first `n`.
fn closest<'a>(anchor: &[f64], items: &'a [IndexedItem], n: usize) -> Vec<&'a IndexedItem> {
    let mut scored: Vec<(f64, &IndexedItem)> = items
        .iter()
        .map(|it| (sq_dist(anchor, &it.style), it))
        .collect();
    scored.sort_by(|x, y| x.0.total_cmp(&y.0).then_with(|| x.1.id.cmp(&y.1.id)));
    scored.into_iter().take(n).map(|(_, it)| it).collect()
}

/// Candidate set of the robust lookup: the `n` target items nearest to the
/// target centroid closest to the query (`n` clamped to the category size).
pub fn robust_candidates<'a>(
    query_style: &[f64],
    index: &'a StyleIndex,
    target: &Category,
    n: usize,
) -> Result<Vec<&'a IndexedItem>> {
    if n == 0 {
        return Err(Error::Parameter("n must be at least 1".into()));
    }
    let ci = index.category(target)?;
    let c_star = nearest_centroid(query_style, &ci.centroids)?;
    Ok(closest(&ci.centroids[c_star], &ci.items, n))
}

/// Cluster-mediated nearest neighbor of `query_style` within `target`.
pub fn robust_retrieve(
    query_style: &[f64],
    index: &StyleIndex,
    target: &Category,
    n: usize,
) -> Result<ItemId> {
    let candidates = robust_candidates(query_style, index, target, n)?;
    let best = candidates
        .iter()
        .map(|it| (sq_dist(query_style, &it.style), *it))
        .min_by(|x, y| x.0.total_cmp(&y.0).then_with(|| x.1.id.cmp(&y.1.id)))
        .expect("non-empty category");
    Ok(best.1.id.clone())
}

/// Plain nearest neighbor within the target label, for comparison.
pub fn nearest_in_category(
    query_style: &[f64],
    index: &StyleIndex,
    target: &Category,
) -> Result<ItemId> {
    let ci = index.category(target)?;
    Ok(closest(query_style, &ci.items, 1)[0].id.clone())
}

/// An ordered set of at least two distinct categories forming one outfit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Category>", into = "Vec<Category>")]
pub struct OutfitSpec {
    categories: Vec<Category>,
}

impl OutfitSpec {
    pub fn new(categories: Vec<Category>) -> Result<Self> {
        if categories.len() < 2 {
            return Err(Error::Spec(
                "an outfit needs at least two categories".into(),
            ));
        }
        for (i, c) in categories.iter().enumerate() {
            if categories[..i].contains(c) {
                return Err(Error::Spec(format!("category `{c}` listed twice")));
            }
        }
        Ok(OutfitSpec { categories })
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }
}

impl TryFrom<Vec<Category>> for OutfitSpec {
    type Error = Error;

    fn try_from(v: Vec<Category>) -> Result<Self> {
        OutfitSpec::new(v)
    }
}

impl From<OutfitSpec> for Vec<Category> {
    fn from(s: OutfitSpec) -> Self {
        s.categories
    }
}

/// `{"outfits": [["shirts", "jeans", "shoes"], ...]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutfitConfig {
    pub outfits: Vec<OutfitSpec>,
}

impl OutfitConfig {
    /// First spec containing `category`.
    pub fn for_category(&self, category: &Category) -> Option<&OutfitSpec> {
        self.outfits
            .iter()
            .find(|s| s.categories.contains(category))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outfit {
    pub query: ItemId,
    pub members: BTreeMap<Category, ItemId>,
}

/// Embeds the query and runs the robust lookup for every other category in
/// the spec.
pub fn generate_outfit(
    query: &Item,
    spec: &OutfitSpec,
    index: &StyleIndex,
    model: &ProjectionModel,
    n: usize,
) -> Result<Outfit> {
    if !spec.categories.contains(&query.category) {
        return Err(Error::Spec(format!(
            "query category `{}` is not part of the outfit spec",
            query.category
        )));
    }
    let style = embed(model, &query.features)?;
    let mut members = BTreeMap::new();
    for cat in spec.categories.iter().filter(|c| **c != query.category) {
        members.insert(cat.clone(), robust_retrieve(&style, index, cat, n)?);
    }
    Ok(Outfit {
        query: query.id.clone(),
        members,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterPair {
    pub cluster_a: usize,
    pub cluster_b: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterAffinity {
    pub closest: ClusterPair,
    pub farthest: ClusterPair,
}

/// Closest and most distant centroid pairs between two categories.
pub fn cluster_pair_affinity(
    index: &StyleIndex,
    cat_a: &Category,
    cat_b: &Category,
) -> Result<ClusterAffinity> {
    let a = index.category(cat_a)?;
    let b = index.category(cat_b)?;
    let mut closest: Option<ClusterPair> = None;
    let mut farthest: Option<ClusterPair> = None;
    for (i, ca) in a.centroids.iter().enumerate() {
        for (j, cb) in b.centroids.iter().enumerate() {
            let pair = ClusterPair {
                cluster_a: i,
                cluster_b: j,
                distance: euclidean(ca, cb),
            };
            // Iteration is in lexicographic (i, j) order, so strict
            // comparisons keep the lowest pair on ties.
            if closest.is_none_or(|c| pair.distance < c.distance) {
                closest = Some(pair);
            }
            if farthest.is_none_or(|f| pair.distance > f.distance) {
                farthest = Some(pair);
            }
        }
    }
    Ok(ClusterAffinity {
        closest: closest.expect("both categories have centroids"),
        farthest: farthest.expect("both categories have centroids"),
    })
}
