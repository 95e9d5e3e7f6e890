//! Item catalog and co-occurrence relation.
//!
//! A [`Catalog`] holds items (id, category label, feature vector, optional
//! planted style) and a set of undirected co-occurrence edges. Both bought
//! together and also bought links collapse into the single relation stored
//! here.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemId(pub String);

impl ItemId {
    pub fn new(id: impl Into<String>) -> Self {
        ItemId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ItemId {
    fn from(s: &str) -> Self {
        ItemId(s.to_owned())
    }
}

/// High-level category label such as `shoes` or `shirts`.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Category(pub String);

impl Category {
    pub fn new(name: impl Into<String>) -> Self {
        Category(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Labels that are empty or whitespace only count as missing.
    pub fn is_missing(&self) -> bool {
        self.0.trim().is_empty()
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Category {
    fn from(s: &str) -> Self {
        Category(s.to_owned())
    }
}

/// One line of `items.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub id: ItemId,
    #[serde(default)]
    pub category: Category,
    pub features: Vec<f64>,
    /// Ground-truth latent coordinates; only synthetic catalogs carry them.
    #[serde(rename = "style", default, skip_serializing_if = "Option::is_none")]
    pub planted_style: Option<Vec<f64>>,
}

impl Item {
    pub fn new(id: impl Into<String>, category: impl Into<String>, features: Vec<f64>) -> Self {
        Item {
            id: ItemId(id.into()),
            category: Category(category.into()),
            features,
            planted_style: None,
        }
    }

    pub fn with_style(mut self, style: Vec<f64>) -> Self {
        self.planted_style = Some(style);
        self
    }
}

/// Undirected edge; `a < b` always holds.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    a: ItemId,
    b: ItemId,
}

impl Edge {
    /// Normalizes direction. Returns `None` for a self-loop.
    pub fn new(x: ItemId, y: ItemId) -> Option<Self> {
        match x.cmp(&y) {
            std::cmp::Ordering::Less => Some(Edge { a: x, b: y }),
            std::cmp::Ordering::Greater => Some(Edge { a: y, b: x }),
            std::cmp::Ordering::Equal => None,
        }
    }

    pub fn a(&self) -> &ItemId {
        &self.a
    }

    pub fn b(&self) -> &ItemId {
        &self.b
    }

    pub fn touches(&self, id: &ItemId) -> bool {
        &self.a == id || &self.b == id
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    feature_dim: usize,
    items: BTreeMap<ItemId, Item>,
    edges: BTreeSet<Edge>,
}

impl Catalog {
    /// Builds a catalog, checking dimensions, id uniqueness and referential
    /// integrity. Edge direction is normalized and duplicates collapse.
    pub fn new(
        feature_dim: usize,
        items: impl IntoIterator<Item = Item>,
        edges: impl IntoIterator<Item = (ItemId, ItemId)>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut styled = None;
        for item in items {
            if item.features.len() != feature_dim {
                return Err(Error::Dimension {
                    expected: feature_dim,
                    actual: item.features.len(),
                });
            }
            let has_style = item.planted_style.is_some();
            if *styled.get_or_insert(has_style) != has_style {
                return Err(Error::Parameter(format!(
                    "item `{}`: planted style must be present on all items or none",
                    item.id
                )));
            }
            if map.contains_key(&item.id) {
                return Err(Error::Parameter(format!("duplicate item id `{}`", item.id)));
            }
            map.insert(item.id.clone(), item);
        }
        let mut set = BTreeSet::new();
        for (x, y) in edges {
            for id in [&x, &y] {
                if !map.contains_key(id) {
                    return Err(Error::UnknownItem(id.clone()));
                }
            }
            let edge = Edge::new(x.clone(), y)
                .ok_or_else(|| Error::Parameter(format!("self-loop edge on `{x}`")))?;
            set.insert(edge);
        }
        Ok(Catalog {
            feature_dim,
            items: map,
            edges: set,
        })
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn items(&self) -> impl ExactSizeIterator<Item = &Item> {
        self.items.values()
    }

    pub fn item(&self, id: &ItemId) -> Option<&Item> {
        self.items.get(id)
    }

    pub fn contains(&self, id: &ItemId) -> bool {
        self.items.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn edges(&self) -> impl ExactSizeIterator<Item = &Edge> {
        self.edges.iter()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, x: &ItemId, y: &ItemId) -> bool {
        match Edge::new(x.clone(), y.clone()) {
            Some(e) => self.edges.contains(&e),
            None => false,
        }
    }

    pub fn category_of(&self, id: &ItemId) -> Option<&Category> {
        self.items.get(id).map(|i| &i.category)
    }

    pub fn has_planted_style(&self) -> bool {
        self.items
            .values()
            .next()
            .is_some_and(|i| i.planted_style.is_some())
    }

    /// Item ids grouped by category label, each list sorted.
    pub fn by_category(&self) -> BTreeMap<Category, Vec<ItemId>> {
        let mut out: BTreeMap<Category, Vec<ItemId>> = BTreeMap::new();
        for item in self.items.values() {
            out.entry(item.category.clone())
                .or_default()
                .push(item.id.clone());
        }
        out
    }

    /// Feature vectors keyed by id.
    pub fn features(&self) -> BTreeMap<ItemId, Vec<f64>> {
        self.items
            .values()
            .map(|i| (i.id.clone(), i.features.clone()))
            .collect()
    }

    /// Adds edges to an existing catalog under the same integrity rules.
    pub fn with_extra_edges(
        mut self,
        edges: impl IntoIterator<Item = (ItemId, ItemId)>,
    ) -> Result<Self> {
        for (x, y) in edges {
            for id in [&x, &y] {
                if !self.items.contains_key(id) {
                    return Err(Error::UnknownItem(id.clone()));
                }
            }
            let edge = Edge::new(x.clone(), y)
                .ok_or_else(|| Error::Parameter(format!("self-loop edge on `{x}`")))?;
            self.edges.insert(edge);
        }
        Ok(self)
    }

    pub fn write_items<W: Write>(&self, mut w: W) -> Result<()> {
        for item in self.items.values() {
            serde_json::to_writer(&mut w, item)?;
            w.write_all(b"\n").map_err(|e| Error::io("<items>", e))?;
        }
        Ok(())
    }

    pub fn write_edges<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let csv_err = |e: csv::Error| Error::io("<edges>", std::io::Error::other(e));
        wtr.write_record(["a", "b"]).map_err(csv_err)?;
        for e in &self.edges {
            wtr.write_record([e.a.as_str(), e.b.as_str()])
                .map_err(csv_err)?;
        }
        wtr.flush().map_err(|e| Error::io("<edges>", e))?;
        Ok(())
    }
}

/// Reads `items.jsonl` and `edges.csv` into a validated catalog.
///
/// The feature dimension is taken from the first item; blank lines are
/// skipped.
pub fn load_catalog(items_path: &Path, edges_path: &Path) -> Result<Catalog> {
    let file = File::open(items_path).map_err(|e| Error::io(items_path, e))?;
    let mut items = Vec::new();
    let mut dim = None;
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(items_path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item: Item = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: items_path.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        let d = *dim.get_or_insert(item.features.len());
        if item.features.len() != d {
            return Err(Error::Dimension {
                expected: d,
                actual: item.features.len(),
            });
        }
        items.push(item);
    }

    let file = File::open(edges_path).map_err(|e| Error::io(edges_path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut edges = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        // Header is line 1.
        let line = idx + 2;
        let rec = rec.map_err(|e| Error::Parse {
            path: edges_path.to_path_buf(),
            line,
            message: e.to_string(),
        })?;
        if rec.len() != 2 {
            return Err(Error::Parse {
                path: edges_path.to_path_buf(),
                line,
                message: format!("expected 2 columns, found {}", rec.len()),
            });
        }
        if rec[0] == rec[1] {
            return Err(Error::Parse {
                path: edges_path.to_path_buf(),
                line,
                message: format!("self-loop on `{}`", &rec[0]),
            });
        }
        edges.push((ItemId::from(&rec[0]), ItemId::from(&rec[1])));
    }
    Catalog::new(dim.unwrap_or(0), items, edges)
}

/// Drops items without a category label and repeated (features, category)
/// pairs beyond the first by id order, along with their incident edges.
pub fn clean(catalog: &Catalog) -> Catalog {
    let mut seen: HashSet<(Category, Vec<u64>)> = HashSet::new();
    let mut keep = BTreeMap::new();
    for item in catalog.items.values() {
        if item.category.is_missing() {
            continue;
        }
        let key = (
            item.category.clone(),
            item.features
                .iter()
                .map(|x| x.to_bits())
                .collect::<Vec<_>>(),
        );
        if seen.insert(key) {
            keep.insert(item.id.clone(), item.clone());
        }
    }
    let edges = catalog
        .edges
        .iter()
        .filter(|e| keep.contains_key(&e.a) && keep.contains_key(&e.b))
        .cloned()
        .collect();
    Catalog {
        feature_dim: catalog.feature_dim,
        items: keep,
        edges,
    }
}

/// Train/validation/test partition of item ids; serialized as `splits.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemSplit {
    pub train: BTreeSet<ItemId>,
    pub validation: BTreeSet<ItemId>,
    pub test: BTreeSet<ItemId>,
    pub seed: u64,
    pub ratios: [f64; 3],
    /// Categories with fewer than three items, placed wholly in train.
    #[serde(skip)]
    pub warnings: Vec<String>,
}

impl ItemSplit {
    pub fn pools(&self) -> [&BTreeSet<ItemId>; 3] {
        [&self.train, &self.validation, &self.test]
    }
}

/// Largest-remainder apportionment of `n` over `ratios`; ties favor the
/// earlier slot.
pub(crate) fn apportion(n: usize, ratios: &[f64]) -> Vec<usize> {
    let total: f64 = ratios.iter().sum();
    let quotas: Vec<f64> = ratios.iter().map(|r| n as f64 * r / total).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..ratios.len()).collect();
    order.sort_by(|&i, &j| {
        let fi = quotas[i] - quotas[i].floor();
        let fj = quotas[j] - quotas[j].floor();
        fj.total_cmp(&fi).then(i.cmp(&j))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Stratified split: each category is shuffled (seeded per category) and cut
/// by largest-remainder counts, so every split holds categories in the same
/// proportions.
pub fn split_items(catalog: &Catalog, ratios: [f64; 3], seed: u64) -> Result<ItemSplit> {
    if catalog.is_empty() {
        return Err(Error::EmptyInput("catalog has no items".into()));
    }
    if ratios.iter().any(|r| !r.is_finite() || *r < 0.0) || ratios.iter().sum::<f64>() <= 0.0 {
        return Err(Error::Parameter(format!(
            "split ratios must be nonnegative with a positive sum, got {ratios:?}"
        )));
    }
    let mut split = ItemSplit {
        train: BTreeSet::new(),
        validation: BTreeSet::new(),
        test: BTreeSet::new(),
        seed,
        ratios,
        warnings: Vec::new(),
    };
    for (category, mut ids) in catalog.by_category() {
        if ids.len() < 3 {
            let msg = format!(
                "category `{category}` has {} item(s); assigned wholly to train",
                ids.len()
            );
            log::warn!("{msg}");
            split.warnings.push(msg);
            split.train.extend(ids);
            continue;
        }
        let mut rng = seed::rng(seed, &format!("split/{category}"));
        ids.shuffle(&mut rng);
        let counts = apportion(ids.len(), &ratios);
        let mut it = ids.into_iter();
        split.train.extend(it.by_ref().take(counts[0]));
        split.validation.extend(it.by_ref().take(counts[1]));
        split.test.extend(it);
    }
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item(id: &str, cat: &str, f: &[f64]) -> Item {
        Item::new(id, cat, f.to_vec())
    }

    fn pair(x: &str, y: &str) -> (ItemId, ItemId) {
        (ItemId::from(x), ItemId::from(y))
    }

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn load_three_items_two_edges() {
        let dir = tempfile::tempdir().unwrap();
        let items = write(
            dir.path(),
            "items.jsonl",
            r#"{"id":"x","category":"shirts","features":[1.0,2.0]}
{"id":"y","category":"shoes","features":[0.0,1.0]}
{"id":"z","category":"jeans","features":[3.0,3.0]}
"#,
        );
        let edges = write(dir.path(), "edges.csv", "a,b\nx,y\ny,z\n");
        let c = load_catalog(&items, &edges).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.edge_count(), 2);
        assert_eq!(c.feature_dim(), 2);
    }

    #[test]
    fn reversed_edges_collapse() {
        let dir = tempfile::tempdir().unwrap();
        let items = write(
            dir.path(),
            "items.jsonl",
            "{\"id\":\"x\",\"category\":\"a\",\"features\":[1]}\n{\"id\":\"y\",\"category\":\"b\",\"features\":[2]}\n",
        );
        let edges = write(dir.path(), "edges.csv", "a,b\nx,y\ny,x\n");
        let c = load_catalog(&items, &edges).unwrap();
        assert_eq!(c.edge_count(), 1);
        let e = c.edges().next().unwrap();
        assert_eq!((e.a().as_str(), e.b().as_str()), ("x", "y"));
    }

    #[test]
    fn unknown_endpoint_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let items = write(
            dir.path(),
            "items.jsonl",
            "{\"id\":\"x\",\"category\":\"a\",\"features\":[1]}\n",
        );
        let edges = write(dir.path(), "edges.csv", "a,b\nx,z\n");
        match load_catalog(&items, &edges) {
            Err(Error::UnknownItem(id)) => assert_eq!(id.as_str(), "z"),
            other => panic!("expected unknown item, got {other:?}"),
        }
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let items = write(
            dir.path(),
            "items.jsonl",
            "{\"id\":\"x\",\"category\":\"a\",\"features\":[1]}\n{\"id\": oops}\n",
        );
        let edges = write(dir.path(), "edges.csv", "a,b\n");
        match load_catalog(&items, &edges) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn inconsistent_feature_length() {
        let dir = tempfile::tempdir().unwrap();
        let items = write(
            dir.path(),
            "items.jsonl",
            "{\"id\":\"x\",\"category\":\"a\",\"features\":[1]}\n{\"id\":\"y\",\"category\":\"a\",\"features\":[1,2]}\n",
        );
        let edges = write(dir.path(), "edges.csv", "a,b\n");
        assert!(matches!(
            load_catalog(&items, &edges),
            Err(Error::Dimension {
                expected: 1,
                actual: 2
            })
        ));
    }

    #[test]
    fn partial_planted_style_rejected() {
        let items = vec![
            item("x", "a", &[1.0]).with_style(vec![0.5]),
            item("y", "a", &[2.0]),
        ];
        assert!(matches!(
            Catalog::new(1, items, vec![]),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn clean_removes_unlabeled_item_and_edges() {
        let c = Catalog::new(
            1,
            vec![
                item("x", "", &[1.0]),
                item("y", "b", &[2.0]),
                item("z", "c", &[3.0]),
            ],
            vec![pair("x", "y"), pair("y", "z")],
        )
        .unwrap();
        let cleaned = clean(&c);
        assert_eq!(cleaned.len(), 2);
        assert!(!cleaned.contains(&"x".into()));
        assert_eq!(cleaned.edge_count(), 1);
    }

    #[test]
    fn clean_keeps_smaller_id_of_duplicates() {
        let c = Catalog::new(
            2,
            vec![
                item("q2", "shoes", &[1.0, 1.0]),
                item("q1", "shoes", &[1.0, 1.0]),
            ],
            vec![],
        )
        .unwrap();
        let cleaned = clean(&c);
        assert_eq!(cleaned.len(), 1);
        assert!(cleaned.contains(&"q1".into()));
    }

    #[test]
    fn clean_keeps_same_features_across_categories() {
        let c = Catalog::new(
            1,
            vec![item("a", "shoes", &[1.0]), item("b", "shirts", &[1.0])],
            vec![],
        )
        .unwrap();
        assert_eq!(clean(&c).len(), 2);
    }

    #[test]
    fn clean_on_clean_catalog_is_identity() {
        let c = Catalog::new(
            1,
            vec![item("a", "shoes", &[1.0]), item("b", "shirts", &[2.0])],
            vec![pair("a", "b")],
        )
        .unwrap();
        assert_eq!(clean(&c), c);
    }

    fn one_category(n: usize) -> Catalog {
        Catalog::new(
            1,
            (0..n).map(|i| item(&format!("i{i:03}"), "pants", &[i as f64])),
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn split_80_1_19_on_100_items() {
        let s = split_items(&one_category(100), [80.0, 1.0, 19.0], 7).unwrap();
        assert_eq!(
            (s.train.len(), s.validation.len(), s.test.len()),
            (80, 1, 19)
        );
    }

    #[test]
    fn degenerate_ratio_all_train() {
        let s = split_items(&one_category(10), [1.0, 0.0, 0.0], 1).unwrap();
        assert_eq!(
            (s.train.len(), s.validation.len(), s.test.len()),
            (10, 0, 0)
        );
    }

    #[test]
    fn two_categories_stratified_and_reproducible() {
        let items = (0..50)
            .map(|i| item(&format!("a{i:02}"), "shoes", &[i as f64]))
            .chain((0..50).map(|i| item(&format!("b{i:02}"), "shirts", &[i as f64])));
        let c = Catalog::new(1, items, vec![]).unwrap();
        let s = split_items(&c, [4.0, 1.0, 5.0], 11).unwrap();
        for prefix in ["a", "b"] {
            let count =
                |set: &BTreeSet<ItemId>| set.iter().filter(|i| i.0.starts_with(prefix)).count();
            assert_eq!(
                (count(&s.train), count(&s.validation), count(&s.test)),
                (20, 5, 25)
            );
        }
        assert_eq!(split_items(&c, [4.0, 1.0, 5.0], 11).unwrap(), s);
        assert_ne!(split_items(&c, [4.0, 1.0, 5.0], 12).unwrap().train, s.train);
    }

    #[test]
    fn small_category_goes_to_train_with_warning() {
        let c = Catalog::new(
            1,
            vec![item("a", "hats", &[1.0]), item("b", "hats", &[2.0])],
            vec![],
        )
        .unwrap();
        let s = split_items(&c, [1.0, 1.0, 1.0], 0).unwrap();
        assert_eq!(s.train.len(), 2);
        assert_eq!(s.warnings.len(), 1);
    }

    #[test]
    fn empty_catalog_rejected() {
        let c = Catalog::new(1, vec![], vec![]).unwrap();
        assert!(matches!(
            split_items(&c, [1.0, 1.0, 1.0], 0),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn apportion_examples() {
        assert_eq!(apportion(100, &[80.0, 1.0, 19.0]), vec![80, 1, 19]);
        assert_eq!(apportion(10, &[1.0, 1.0, 1.0]), vec![4, 3, 3]);
        assert_eq!(apportion(0, &[1.0, 1.0, 1.0]), vec![0, 0, 0]);
    }

    #[test]
    fn items_and_edges_roundtrip_through_files() {
        let c = Catalog::new(
            2,
            vec![
                item("a", "shoes", &[0.25, -1.5]).with_style(vec![0.1]),
                item("b", "shirts", &[1e-3, 2.0]).with_style(vec![0.9]),
            ],
            vec![pair("b", "a")],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let ip = dir.path().join("items.jsonl");
        let ep = dir.path().join("edges.csv");
        c.write_items(File::create(&ip).unwrap()).unwrap();
        c.write_edges(File::create(&ep).unwrap()).unwrap();
        assert_eq!(load_catalog(&ip, &ep).unwrap(), c);
    }
}
