//! Labeled pair datasets.
//!
//! Positives are co-occurrence edges, negatives are uniformly drawn non-edges.
//! Three regimes are supported:
//!
//! * naive: positives drawn uniformly from all edges in the pool;
//! * strategic: positives restricted to heterogeneous dyads (endpoints in
//!   different categories) and balanced across category pairs;
//! * holdout: strategic training with one category removed from the train
//!   pool, evaluated only on pairs touching that category.
//!
//! Negatives are drawn once; they are not regenerated per epoch.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Catalog, Category, Edge, ItemId, ItemSplit};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "pos")]
    Positive,
    #[serde(rename = "neg")]
    Negative,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }

    fn as_str(self) -> &'static str {
        match self {
            Label::Positive => "pos",
            Label::Negative => "neg",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pair {
    pub a: ItemId,
    pub b: ItemId,
    pub label: Label,
}

impl Pair {
    pub fn new(a: ItemId, b: ItemId, label: Label) -> Self {
        Pair { a, b, label }
    }

    fn from_edge(e: &Edge) -> Self {
        Pair::new(e.a().clone(), e.b().clone(), Label::Positive)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Naive,
    Strategic,
    Holdout,
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(Strategy::Naive),
            "strategic" => Ok(Strategy::Strategic),
            "holdout" => Ok(Strategy::Holdout),
            other => Err(Error::Parameter(format!("unknown strategy `{other}`"))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Naive => "naive",
            Strategy::Strategic => "strategic",
            Strategy::Holdout => "holdout",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub strategy: Strategy,
    pub holdout_category: Option<Category>,
    pub negatives_per_positive_train: usize,
    /// Negatives per positive in validation and test; 1.0 gives a 50:50 set.
    pub test_negative_ratio: f64,
    /// Number of train positives. Validation and test positive counts scale
    /// with their pool sizes relative to the train split.
    pub target_positive_count: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            strategy: Strategy::Strategic,
            holdout_category: None,
            negatives_per_positive_train: 16,
            test_negative_ratio: 1.0,
            target_positive_count: 1000,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.negatives_per_positive_train == 0 {
            return Err(Error::Parameter(
                "negatives_per_positive_train must be positive".into(),
            ));
        }
        if !(self.test_negative_ratio.is_finite() && self.test_negative_ratio > 0.0) {
            return Err(Error::Parameter(
                "test_negative_ratio must be positive".into(),
            ));
        }
        if self.target_positive_count == 0 {
            return Err(Error::Parameter(
                "target_positive_count must be positive".into(),
            ));
        }
        if self.strategy == Strategy::Holdout && self.holdout_category.is_none() {
            return Err(Error::Parameter(
                "holdout strategy requires a holdout category".into(),
            ));
        }
        Ok(())
    }
}

/// Pairs drawn by one sampler call, with availability bookkeeping.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Sample {
    pub pairs: Vec<Pair>,
    /// Positives drawn with replacement after the candidate edges ran out.
    pub resampled: usize,
    /// Requested pairs that could not be produced.
    pub shortfall: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairDataset {
    pub train: Vec<Pair>,
    pub validation: Vec<Pair>,
    pub test: Vec<Pair>,
    /// `None` when the dataset was read back from `pairs.csv`.
    pub config: Option<SamplerConfig>,
    /// Shortfalls and with-replacement fallbacks encountered while sampling.
    pub notes: Vec<String>,
}

fn pool_edges<'a>(
    catalog: &'a Catalog,
    pool: &'a BTreeSet<ItemId>,
) -> impl Iterator<Item = &'a Edge> + 'a {
    catalog
        .edges()
        .filter(move |e| pool.contains(e.a()) && pool.contains(e.b()))
}

fn check_pool(catalog: &Catalog, pool: &BTreeSet<ItemId>) -> Result<()> {
    match pool.iter().find(|id| !catalog.contains(id)) {
        Some(id) => Err(Error::UnknownItem(id.clone())),
        None => Ok(()),
    }
}

fn heterogeneous(catalog: &Catalog, e: &Edge) -> bool {
    catalog.category_of(e.a()) != catalog.category_of(e.b())
}

fn naive_from(candidates: Vec<&Edge>, count: usize, rng: &mut ChaCha8Rng) -> Sample {
    let mut order = candidates;
    order.shuffle(rng);
    let mut pairs: Vec<Pair> = order
        .iter()
        .take(count)
        .map(|e| Pair::from_edge(e))
        .collect();
    let resampled = count - pairs.len();
    for _ in 0..resampled {
        let e = order[rng.random_range(0..order.len())];
        pairs.push(Pair::from_edge(e));
    }
    Sample {
        pairs,
        resampled,
        shortfall: 0,
    }
}

/// Round-robin over category-pair groups, smallest group first, so each
/// group contributes as evenly as its size allows.
fn balanced_from(
    catalog: &Catalog,
    candidates: Vec<&Edge>,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Sample {
    let mut groups: BTreeMap<(&Category, &Category), Vec<&Edge>> = BTreeMap::new();
    for e in candidates {
        let ca = catalog.category_of(e.a()).expect("pool checked");
        let cb = catalog.category_of(e.b()).expect("pool checked");
        let key = if ca <= cb { (ca, cb) } else { (cb, ca) };
        groups.entry(key).or_default().push(e);
    }
    let mut groups: Vec<Vec<&Edge>> = groups.into_values().collect();
    for g in &mut groups {
        g.shuffle(rng);
    }
    // Stable sort keeps the category-pair order among equal sizes.
    groups.sort_by_key(|g| g.len());

    let mut pairs = Vec::with_capacity(count);
    let mut cursor = 0;
    'outer: loop {
        let mut progressed = false;
        for g in &groups {
            if pairs.len() == count {
                break 'outer;
            }
            if let Some(e) = g.get(cursor) {
                pairs.push(Pair::from_edge(e));
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
        cursor += 1;
    }
    let resampled = count - pairs.len();
    let mut g = 0;
    while pairs.len() < count {
        let group = &groups[g % groups.len()];
        pairs.push(Pair::from_edge(group[rng.random_range(0..group.len())]));
        g += 1;
    }
    Sample {
        pairs,
        resampled,
        shortfall: 0,
    }
}

fn positives_where<F>(
    catalog: &Catalog,
    pool: &BTreeSet<ItemId>,
    count: usize,
    seed: u64,
    strategic: bool,
    keep: F,
) -> Result<Sample>
where
    F: Fn(&Edge) -> bool,
{
    check_pool(catalog, pool)?;
    if count == 0 {
        return Ok(Sample::default());
    }
    let candidates: Vec<&Edge> = pool_edges(catalog, pool)
        .filter(|e| keep(e))
        .filter(|e| !strategic || heterogeneous(catalog, e))
        .collect();
    if candidates.is_empty() {
        return Err(Error::NoPositiveCandidates(format!(
            "{} edges within a pool of {} items",
            if strategic { "no heterogeneous" } else { "no" },
            pool.len()
        )));
    }
    let mut rng = seed::rng(
        seed,
        if strategic {
            "positives/strategic"
        } else {
            "positives/naive"
        },
    );
    Ok(if strategic {
        balanced_from(catalog, candidates, count, &mut rng)
    } else {
        naive_from(candidates, count, &mut rng)
    })
}

/// Heterogeneous-dyad positives, balanced over category pairs. Once every
/// candidate edge is used, further positives are drawn with replacement.
pub fn sample_positives_strategic(
    catalog: &Catalog,
    pool: &BTreeSet<ItemId>,
    count: usize,
    seed: u64,
) -> Result<Sample> {
    positives_where(catalog, pool, count, seed, true, |_| true)
}

/// Positives drawn uniformly from all edges inside the pool, same-category
/// edges included.
pub fn sample_positives_naive(
    catalog: &Catalog,
    pool: &BTreeSet<ItemId>,
    count: usize,
    seed: u64,
) -> Result<Sample> {
    positives_where(catalog, pool, count, seed, false, |_| true)
}

fn choose2(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

fn negatives_where(
    catalog: &Catalog,
    pool: &BTreeSet<ItemId>,
    count: usize,
    seed: u64,
    required: Option<&BTreeSet<ItemId>>,
) -> Result<Sample> {
    check_pool(catalog, pool)?;
    if count == 0 {
        return Ok(Sample::default());
    }
    if pool.len() < 2 {
        return Err(Error::Parameter(format!(
            "negative sampling needs at least 2 pool items, got {}",
            pool.len()
        )));
    }
    let ids: Vec<&ItemId> = pool.iter().collect();
    let index: HashMap<&ItemId, u32> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| (*id, i as u32))
        .collect();
    let marked: Vec<bool> = ids
        .iter()
        .map(|id| required.is_none_or(|r| r.contains(*id)))
        .collect();
    let qualifies = |i: u32, j: u32| marked[i as usize] || marked[j as usize];
    let edges: HashSet<(u32, u32)> = pool_edges(catalog, pool)
        .map(|e| (index[e.a()], index[e.b()]))
        .collect();
    let n = ids.len();
    let unmarked = marked.iter().filter(|m| !**m).count();
    let qualifying_edges = edges.iter().filter(|(i, j)| qualifies(*i, *j)).count();
    let available = choose2(n) - choose2(unmarked) - qualifying_edges;

    let mut rng = seed::rng(seed, "negatives");
    let to_pair = |(i, j): (u32, u32)| {
        Pair::new(
            ids[i as usize].clone(),
            ids[j as usize].clone(),
            Label::Negative,
        )
    };
    let take = count.min(available);
    let chosen: Vec<(u32, u32)> = if take.saturating_mul(2) >= available {
        let mut all = Vec::with_capacity(available);
        for i in 0..n as u32 {
            for j in i + 1..n as u32 {
                if qualifies(i, j) && !edges.contains(&(i, j)) {
                    all.push((i, j));
                }
            }
        }
        all.shuffle(&mut rng);
        all.truncate(take);
        all
    } else {
        let mut seen = HashSet::with_capacity(take);
        let mut out = Vec::with_capacity(take);
        while out.len() < take {
            let x = rng.random_range(0..n as u32);
            let y = rng.random_range(0..n as u32);
            if x == y {
                continue;
            }
            let key = (x.min(y), x.max(y));
            if qualifies(key.0, key.1) && !edges.contains(&key) && seen.insert(key) {
                out.push(key);
            }
        }
        out
    };
    Ok(Sample {
        pairs: chosen.into_iter().map(to_pair).collect(),
        resampled: 0,
        shortfall: count - take,
    })
}

/// Distinct non-edge pairs drawn uniformly from the pool. If fewer than
/// `count` exist, all of them are returned and the gap is reported as
/// `shortfall`.
pub fn sample_negatives(
    catalog: &Catalog,
    pool: &BTreeSet<ItemId>,
    count: usize,
    seed: u64,
) -> Result<Sample> {
    negatives_where(catalog, pool, count, seed, None)
}

fn scaled(count: usize, ratio: f64) -> usize {
    (count as f64 * ratio).round() as usize
}

/// Samples train, validation and test pairs from the item split.
///
/// Validation and test positives always follow the heterogeneous-dyad rule,
/// so models trained under different strategies are scored on the same kind
/// of links. A validation split without usable candidates is recorded in
/// `notes` and left empty; train and test failures are errors.
pub fn build_pair_dataset(
    catalog: &Catalog,
    split: &ItemSplit,
    config: &SamplerConfig,
) -> Result<PairDataset> {
    config.validate()?;
    let mut notes = Vec::new();

    let holdout: Option<BTreeSet<ItemId>> = match (&config.strategy, &config.holdout_category) {
        (Strategy::Holdout, Some(cat)) => {
            let members: BTreeSet<ItemId> = catalog
                .items()
                .filter(|i| &i.category == cat)
                .map(|i| i.id.clone())
                .collect();
            if members.is_empty() {
                return Err(Error::Parameter(format!(
                    "holdout category `{cat}` has no items"
                )));
            }
            Some(members)
        }
        _ => None,
    };

    let train_pool: BTreeSet<ItemId> = match &holdout {
        Some(h) => split.train.difference(h).cloned().collect(),
        None => split.train.clone(),
    };

    let target = config.target_positive_count;
    let train_seed = seed::derive(config.seed, "train");
    let train_pos = match config.strategy {
        Strategy::Naive => sample_positives_naive(catalog, &train_pool, target, train_seed)?,
        Strategy::Strategic | Strategy::Holdout => {
            sample_positives_strategic(catalog, &train_pool, target, train_seed)?
        }
    };
    if train_pos.resampled > 0 {
        notes.push(format!(
            "train: {} of {target} positives drawn with replacement",
            train_pos.resampled
        ));
    }
    let wanted_neg = train_pos.pairs.len() * config.negatives_per_positive_train;
    let train_neg = sample_negatives(catalog, &train_pool, wanted_neg, train_seed)?;
    if train_neg.shortfall > 0 {
        notes.push(format!(
            "train: negative shortfall of {} (wanted {wanted_neg})",
            train_neg.shortfall
        ));
    }

    let train_size = split.train.len().max(1) as f64;
    let mut eval_split = |name: &str, pool: &BTreeSet<ItemId>, fatal: bool| -> Result<Vec<Pair>> {
        let count = if pool.is_empty() {
            0
        } else {
            ((target as f64 * pool.len() as f64 / train_size).round() as usize).max(1)
        };
        let s = seed::derive(config.seed, name);
        let pos = match &holdout {
            Some(h) => positives_where(catalog, pool, count, s, true, |e| {
                h.contains(e.a()) || h.contains(e.b())
            }),
            None => sample_positives_strategic(catalog, pool, count, s),
        };
        let pos = match pos {
            Ok(p) => p,
            Err(e) if !fatal => {
                notes.push(format!("{name}: left empty ({e})"));
                return Ok(Vec::new());
            }
            Err(e) => return Err(e),
        };
        if pos.resampled > 0 {
            notes.push(format!(
                "{name}: {} of {count} positives drawn with replacement",
                pos.resampled
            ));
        }
        let wanted = scaled(pos.pairs.len(), config.test_negative_ratio);
        let neg = match negatives_where(catalog, pool, wanted, s, holdout.as_ref()) {
            Ok(n) => n,
            Err(e) if !fatal => {
                notes.push(format!("{name}: negatives left empty ({e})"));
                Sample::default()
            }
            Err(e) => return Err(e),
        };
        if neg.shortfall > 0 {
            notes.push(format!(
                "{name}: negative shortfall of {} (wanted {wanted})",
                neg.shortfall
            ));
        }
        let mut pairs = pos.pairs;
        pairs.extend(neg.pairs);
        Ok(pairs)
    };
    let validation = eval_split("validation", &split.validation, false)?;
    let test = eval_split("test", &split.test, true)?;

    let mut train = train_pos.pairs;
    train.extend(train_neg.pairs);
    for n in &notes {
        log::warn!("{n}");
    }
    Ok(PairDataset {
        train,
        validation,
        test,
        config: Some(config.clone()),
        notes,
    })
}

impl PairDataset {
    /// Writes `pairs.csv` with header `a,b,label,split`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let err = |e: csv::Error| Error::io("<pairs>", std::io::Error::other(e));
        wtr.write_record(["a", "b", "label", "split"])
            .map_err(err)?;
        for (name, pairs) in [
            ("train", &self.train),
            ("val", &self.validation),
            ("test", &self.test),
        ] {
            for p in pairs {
                wtr.write_record([p.a.as_str(), p.b.as_str(), p.label.as_str(), name])
                    .map_err(err)?;
            }
        }
        wtr.flush().map_err(|e| Error::io("<pairs>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(r);
        let mut ds = PairDataset {
            train: Vec::new(),
            validation: Vec::new(),
            test: Vec::new(),
            config: None,
            notes: Vec::new(),
        };
        for (idx, rec) in rdr.records().enumerate() {
            let line = idx + 2;
            let parse = |message: String| Error::Parse {
                path: "<pairs>".into(),
                line,
                message,
            };
            let rec = rec.map_err(|e| parse(e.to_string()))?;
            if rec.len() != 4 {
                return Err(parse(format!("expected 4 columns, found {}", rec.len())));
            }
            let label = match &rec[2] {
                "pos" => Label::Positive,
                "neg" => Label::Negative,
                other => return Err(parse(format!("unknown label `{other}`"))),
            };
            if rec[0] == rec[1] {
                return Err(parse(format!("pair joins `{}` to itself", &rec[0])));
            }
            let pair = Pair::new(ItemId::from(&rec[0]), ItemId::from(&rec[1]), label);
            match &rec[3] {
                "train" => ds.train.push(pair),
                "val" => ds.validation.push(pair),
                "test" => ds.test.push(pair),
                other => return Err(parse(format!("unknown split `{other}`"))),
            }
        }
        Ok(ds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Item;

    fn catalog(items: &[(&str, &str)], edges: &[(&str, &str)]) -> Catalog {
        Catalog::new(
            1,
            items
                .iter()
                .enumerate()
                .map(|(i, (id, c))| Item::new(*id, *c, vec![i as f64])),
            edges
                .iter()
                .map(|(a, b)| (ItemId::from(*a), ItemId::from(*b))),
        )
        .unwrap()
    }

    fn all(c: &Catalog) -> BTreeSet<ItemId> {
        c.items().map(|i| i.id.clone()).collect()
    }

    #[test]
    fn strategic_rejects_same_category_only() {
        let c = catalog(
            &[("a", "x"), ("b", "x"), ("c", "x")],
            &[("a", "b"), ("b", "c")],
        );
        assert!(matches!(
            sample_positives_strategic(&c, &all(&c), 1, 0),
            Err(Error::NoPositiveCandidates(_))
        ));
    }

    #[test]
    fn strategic_single_candidate() {
        let c = catalog(&[("x", "shirts"), ("y", "shoes")], &[("x", "y")]);
        let s = sample_positives_strategic(&c, &all(&c), 1, 3).unwrap();
        assert_eq!(
            s.pairs,
            vec![Pair::new("x".into(), "y".into(), Label::Positive)]
        );
    }

    #[test]
    fn strategic_balances_category_pairs() {
        // Three categories, ten edges per category pair.
        let mut items = Vec::new();
        for cat in ["p", "q", "r"] {
            for i in 0..10 {
                items.push((format!("{cat}{i}"), cat.to_string()));
            }
        }
        let mut edges = Vec::new();
        for (x, y) in [("p", "q"), ("p", "r"), ("q", "r")] {
            for i in 0..10 {
                edges.push((format!("{x}{i}"), format!("{y}{i}")));
            }
        }
        let items_ref: Vec<(&str, &str)> = items
            .iter()
            .map(|(a, b)| (a.as_str(), b.as_str()))
            .collect();
        let edges_ref: Vec<(&str, &str)> = edges
            .iter()
            .map(|(a, b)| (a.as_str(), b.as_str()))
            .collect();
        let c = catalog(&items_ref, &edges_ref);
        let s = sample_positives_strategic(&c, &all(&c), 9, 5).unwrap();
        let mut per_group: BTreeMap<(char, char), usize> = BTreeMap::new();
        for p in &s.pairs {
            let key = (p.a.0.chars().next().unwrap(), p.b.0.chars().next().unwrap());
            *per_group.entry(key).or_default() += 1;
        }
        assert_eq!(
            per_group.values().copied().collect::<Vec<_>>(),
            vec![3, 3, 3]
        );
        assert_eq!(s.resampled, 0);
    }

    #[test]
    fn strategic_falls_back_to_replacement() {
        let c = catalog(&[("x", "shirts"), ("y", "shoes")], &[("x", "y")]);
        let s = sample_positives_strategic(&c, &all(&c), 4, 0).unwrap();
        assert_eq!(s.pairs.len(), 4);
        assert_eq!(s.resampled, 3);
    }

    #[test]
    fn naive_accepts_same_category_edge() {
        let c = catalog(&[("x", "shoes"), ("y", "shoes")], &[("x", "y")]);
        let s = sample_positives_naive(&c, &all(&c), 1, 0).unwrap();
        assert_eq!(
            s.pairs,
            vec![Pair::new("x".into(), "y".into(), Label::Positive)]
        );
    }

    #[test]
    fn naive_zero_count() {
        let c = catalog(&[("x", "shoes"), ("y", "shoes")], &[("x", "y")]);
        assert!(sample_positives_naive(&c, &all(&c), 0, 0)
            .unwrap()
            .pairs
            .is_empty());
    }

    #[test]
    fn naive_exhausts_without_replacement() {
        let c = catalog(
            &[("a", "s"), ("b", "s"), ("c", "t"), ("d", "t"), ("e", "u")],
            &[("a", "b"), ("a", "c"), ("b", "d"), ("c", "e"), ("d", "e")],
        );
        let s = sample_positives_naive(&c, &all(&c), 5, 9).unwrap();
        let got: BTreeSet<(String, String)> = s
            .pairs
            .iter()
            .map(|p| (p.a.0.clone(), p.b.0.clone()))
            .collect();
        let want: BTreeSet<(String, String)> = c
            .edges()
            .map(|e| (e.a().0.clone(), e.b().0.clone()))
            .collect();
        assert_eq!(got, want);
        assert_eq!(s.resampled, 0);
        // Order depends on the seed but is reproducible.
        assert_eq!(sample_positives_naive(&c, &all(&c), 5, 9).unwrap(), s);
    }

    #[test]
    fn naive_no_edges_in_pool() {
        let c = catalog(&[("x", "shoes"), ("y", "shoes")], &[]);
        assert!(matches!(
            sample_positives_naive(&c, &all(&c), 1, 0),
            Err(Error::NoPositiveCandidates(_))
        ));
    }

    #[test]
    fn negatives_on_complete_graph_shortfall() {
        let c = catalog(
            &[("a", "s"), ("b", "t"), ("c", "u")],
            &[("a", "b"), ("a", "c"), ("b", "c")],
        );
        let s = sample_negatives(&c, &all(&c), 2, 0).unwrap();
        assert!(s.pairs.is_empty());
        assert_eq!(s.shortfall, 2);
    }

    #[test]
    fn negatives_two_items() {
        let c = catalog(&[("a", "s"), ("b", "t")], &[]);
        let s = sample_negatives(&c, &all(&c), 1, 0).unwrap();
        assert_eq!(
            s.pairs,
            vec![Pair::new("a".into(), "b".into(), Label::Negative)]
        );
    }

    #[test]
    fn negatives_enumerate_all_non_edges() {
        let c = catalog(
            &[("a", "s"), ("b", "s"), ("c", "t"), ("d", "t")],
            &[("a", "c")],
        );
        let s = sample_negatives(&c, &all(&c), 5, 1).unwrap();
        assert_eq!(s.shortfall, 0);
        let got: BTreeSet<(String, String)> = s
            .pairs
            .iter()
            .map(|p| (p.a.0.clone(), p.b.0.clone()))
            .collect();
        let mut want = BTreeSet::new();
        let ids = ["a", "b", "c", "d"];
        for i in 0..4 {
            for j in i + 1..4 {
                if (ids[i], ids[j]) != ("a", "c") {
                    want.insert((ids[i].to_string(), ids[j].to_string()));
                }
            }
        }
        assert_eq!(want.len(), 5);
        assert_eq!(got, want);
    }

    #[test]
    fn negatives_need_two_items() {
        let c = catalog(&[("a", "s")], &[]);
        assert!(sample_negatives(&c, &all(&c), 1, 0).is_err());
    }

    #[test]
    fn holdout_requires_category() {
        let cfg = SamplerConfig {
            strategy: Strategy::Holdout,
            ..SamplerConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn strategy_parses() {
        assert_eq!("holdout".parse::<Strategy>().unwrap(), Strategy::Holdout);
        assert!("random".parse::<Strategy>().is_err());
    }

    #[test]
    fn pairs_csv_roundtrip() {
        let ds = PairDataset {
            train: vec![Pair::new("a".into(), "b".into(), Label::Positive)],
            validation: vec![Pair::new("a".into(), "c".into(), Label::Negative)],
            test: vec![Pair::new("b".into(), "c".into(), Label::Positive)],
            config: None,
            notes: vec![],
        };
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("a,b,label,split\na,b,pos,train\n"));
        assert_eq!(PairDataset::read_csv(&buf[..]).unwrap(), ds);
    }
}
