mod args;

use std::fmt::Display;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use stylespace::embed::{gradient_check, train, FeaturePair, ProjectionModel, TrainConfig};
use stylespace::eval::{pair_distances, EvalReport};
use stylespace::graph::{clean, load_catalog, split_items, Catalog, Category, ItemId, ItemSplit};
use stylespace::retrieve::{
    cluster_pair_affinity, generate_outfit, nearest_in_category, robust_retrieve, OutfitConfig,
    StyleIndex,
};
use stylespace::sampler::{build_pair_dataset, PairDataset, SamplerConfig, Strategy};
use stylespace::synth::{generate_catalog, SynthConfig};
use stylespace::{seed, Error, Result};

use args::{CatalogArgs, Cli, Command, SplitName};

const DEFAULT_OUTFITS: &str = include_str!("../config/outfits.json");

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let stage = stage_name(&cli.command);
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: stage {stage} failed: {e}");
            ExitCode::from(1)
        }
    }
}

fn stage_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Synth(_) => "synth",
        Command::Clean(_) => "clean",
        Command::Split(_) => "split",
        Command::Sample(_) => "sample",
        Command::Train(_) => "train",
        Command::Eval(_) => "eval",
        Command::Index(_) => "index",
        Command::Retrieve(_) => "retrieve",
        Command::Outfit(_) => "outfit",
        Command::Affinity(_) => "affinity",
        Command::Gradcheck(_) => "gradcheck",
    }
}

/// Space-separated `key=value` pairs, starting with the stage.
struct Summary(Vec<(String, String)>);

impl Summary {
    fn new(stage: &str) -> Self {
        Summary(vec![("stage".into(), stage.into())])
    }

    fn kv(mut self, key: &str, value: impl Display) -> Self {
        self.0.push((key.into(), value.to_string()));
        self
    }
}

impl Display for Summary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(io_err(path))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io_err(path))?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        body(&mut w)?;
        w.flush().map_err(io_err(path))?;
    }
    tmp.persist(path).map_err(|e| io_err(path)(e.error))?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, |w| w.write_all(text.as_bytes()).map_err(io_err(path)))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

/// Library parse errors for in-memory readers carry a placeholder path.
fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Parse { line, message, .. } => Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        },
        Error::Io { source, .. } => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    }
}

fn load(c: &CatalogArgs) -> Result<Catalog> {
    load_catalog(&c.items, &c.edges)
}

fn load_pairs(path: &Path) -> Result<PairDataset> {
    let f = fs::File::open(path).map_err(io_err(path))?;
    PairDataset::read_csv(std::io::BufReader::new(f)).map_err(|e| with_path(e, path))
}

fn load_model(path: &Path) -> Result<ProjectionModel> {
    ProjectionModel::from_json(&read_text(path)?)
}

fn load_index(path: &Path) -> Result<StyleIndex> {
    StyleIndex::from_json(&read_text(path)?)
}

fn write_catalog(catalog: &Catalog, items: &Path, edges: &Path) -> Result<()> {
    write_atomic(items, |w| {
        catalog.write_items(w).map_err(|e| with_path(e, items))
    })?;
    write_atomic(edges, |w| {
        catalog.write_edges(w).map_err(|e| with_path(e, edges))
    })
}

fn run(cli: Cli) -> Result<Summary> {
    let global = cli.seed;
    let stage_seed = |stage: &str| seed::derive(global, stage);
    match cli.command {
        Command::Synth(a) => {
            let config = SynthConfig {
                num_categories: a.categories,
                items_per_category: a.items_per_category,
                latent_dim: a.latent_dim,
                feature_dim: a.feature_dim,
                feature_noise: a.feature_noise,
                edge_bandwidth: a.bandwidth,
                edges_per_item: a.degree,
                label_noise_rate: a.label_noise,
                lift: a.lift.into(),
                seed: stage_seed("synth"),
            };
            let s = generate_catalog(&config)?;
            write_catalog(&s.catalog, &a.items, &a.edges)?;
            Ok(Summary::new("synth")
                .kv("items", s.catalog.len())
                .kv("edges", s.catalog.edge_count())
                .kv("mislabeled", s.mislabeled.len())
                .kv("items_path", a.items.display())
                .kv("edges_path", a.edges.display()))
        }
        Command::Clean(a) => {
            let before = load(&a.catalog)?;
            let after = clean(&before);
            let items = a.out_items.as_deref().unwrap_or(&a.catalog.items);
            let edges = a.out_edges.as_deref().unwrap_or(&a.catalog.edges);
            write_catalog(&after, items, edges)?;
            Ok(Summary::new("clean")
                .kv("items", after.len())
                .kv("removed_items", before.len() - after.len())
                .kv("edges", after.edge_count())
                .kv("removed_edges", before.edge_count() - after.edge_count()))
        }
        Command::Split(a) => {
            let catalog = load(&a.catalog)?;
            let split = split_items(&catalog, a.ratios, stage_seed("split"))?;
            write_text(&a.splits, &serde_json::to_string_pretty(&split)?)?;
            Ok(Summary::new("split")
                .kv("train", split.train.len())
                .kv("validation", split.validation.len())
                .kv("test", split.test.len())
                .kv("warnings", split.warnings.len())
                .kv("path", a.splits.display()))
        }
        Command::Sample(a) => {
            let catalog = load(&a.catalog)?;
            let split: ItemSplit = serde_json::from_str(&read_text(&a.splits)?)?;
            if a.holdout_category.is_some() && a.strategy != Strategy::Holdout {
                return Err(Error::Parameter(
                    "--holdout-category requires --strategy holdout".into(),
                ));
            }
            let config = SamplerConfig {
                strategy: a.strategy,
                holdout_category: a.holdout_category.map(Category::new),
                negatives_per_positive_train: a.neg_ratio as usize,
                test_negative_ratio: a.test_neg_ratio,
                target_positive_count: a.positives,
                seed: stage_seed("sample"),
            };
            let ds = build_pair_dataset(&catalog, &split, &config)?;
            write_atomic(&a.pairs, |w| {
                ds.write_csv(w).map_err(|e| with_path(e, &a.pairs))
            })?;
            Ok(Summary::new("sample")
                .kv("strategy", a.strategy)
                .kv("train", ds.train.len())
                .kv("validation", ds.validation.len())
                .kv("test", ds.test.len())
                .kv("notes", ds.notes.len())
                .kv("path", a.pairs.display()))
        }
        Command::Train(a) => {
            let catalog = load(&a.catalog)?;
            let ds = load_pairs(&a.pairs)?;
            let config = TrainConfig {
                margin: a.margin,
                learning_rate: a.lr,
                momentum: a.momentum,
                epochs: a.epochs,
                batch_size: a.batch,
                seed: stage_seed("train"),
                hidden_dims: a.hidden,
                output_dim: a.output_dim,
            };
            config.validate()?;
            let init = config.init_model(catalog.feature_dim())?;
            let (model, trace) = train(&init, &catalog.features(), &ds, &config)?;
            write_text(&a.model, &model.to_json()?)?;
            let mut s = Summary::new("train")
                .kv("epochs", a.epochs)
                .kv("params", model.param_count())
                .kv("final_train_loss", trace.final_train_loss);
            if let Some(v) = trace.final_val_loss {
                s = s.kv("final_val_loss", v);
            }
            Ok(s.kv("path", a.model.display()))
        }
        Command::Eval(a) => {
            let catalog = load(&a.catalog)?;
            let ds = load_pairs(&a.pairs)?;
            let model = load_model(&a.model)?;
            let pairs = match a.split {
                SplitName::Train => &ds.train,
                SplitName::Val => &ds.validation,
                SplitName::Test => &ds.test,
            };
            let distances = pair_distances(&model, &catalog.features(), pairs)?;
            let report = EvalReport::from_distances(&distances, a.bins)?;
            write_text(&a.report, &report.to_json()?)?;
            let dir = a.report.parent().unwrap_or(Path::new(""));
            let (roc, hist) = (dir.join("roc.csv"), dir.join("hist.csv"));
            write_atomic(&roc, |w| {
                report.write_roc_csv(w).map_err(|e| with_path(e, &roc))
            })?;
            write_atomic(&hist, |w| {
                report.write_hist_csv(w).map_err(|e| with_path(e, &hist))
            })?;
            Ok(Summary::new("eval")
                .kv("auc", report.auc)
                .kv("positives", report.counts.positives)
                .kv("negatives", report.counts.negatives)
                .kv("path", a.report.display()))
        }
        Command::Index(a) => {
            let catalog = load(&a.catalog)?;
            let model = load_model(&a.model)?;
            let index = StyleIndex::build(
                &catalog,
                &model,
                a.k as usize,
                stage_seed("index"),
                a.max_iters,
            )?;
            write_text(&a.index, &index.to_json()?)?;
            let clusters: usize = index.categories.values().map(|c| c.k).sum();
            Ok(Summary::new("index")
                .kv("categories", index.categories.len())
                .kv("clusters", clusters)
                .kv("path", a.index.display()))
        }
        Command::Retrieve(a) => {
            let index = load_index(&a.index)?;
            let query = ItemId::new(a.query);
            let (_, style) = index
                .lookup(&query)
                .ok_or_else(|| Error::UnknownItem(query.clone()))?;
            let target = Category::new(a.target);
            let robust = robust_retrieve(style, &index, &target, a.n as usize)?;
            let plain = nearest_in_category(style, &index, &target)?;
            Ok(Summary::new("retrieve")
                .kv("query", &query)
                .kv("target", &target)
                .kv("result", robust)
                .kv("nearest", plain))
        }
        Command::Outfit(a) => {
            let catalog = load(&a.catalog)?;
            let model = load_model(&a.model)?;
            let index = load_index(&a.index)?;
            let text = match &a.outfit_spec {
                Some(p) => read_text(p)?,
                None => DEFAULT_OUTFITS.to_string(),
            };
            let config: OutfitConfig = serde_json::from_str(&text)?;
            let query = ItemId::new(a.query);
            let item = catalog
                .item(&query)
                .ok_or_else(|| Error::UnknownItem(query.clone()))?;
            let spec = config.for_category(&item.category).ok_or_else(|| {
                Error::Spec(format!(
                    "no outfit spec contains category `{}`",
                    item.category
                ))
            })?;
            let outfit = generate_outfit(item, spec, &index, &model, a.n as usize)?;
            let mut s = Summary::new("outfit")
                .kv("query", &outfit.query)
                .kv("category", &item.category);
            for (cat, id) in &outfit.members {
                s = s.kv(cat.as_str(), id);
            }
            Ok(s)
        }
        Command::Affinity(a) => {
            let index = load_index(&a.index)?;
            let r =
                cluster_pair_affinity(&index, &Category::new(a.cat_a), &Category::new(a.cat_b))?;
            Ok(Summary::new("affinity")
                .kv(
                    "closest",
                    format_args!("{},{}", r.closest.cluster_a, r.closest.cluster_b),
                )
                .kv("closest_distance", r.closest.distance)
                .kv(
                    "farthest",
                    format_args!("{},{}", r.farthest.cluster_a, r.farthest.cluster_b),
                )
                .kv("farthest_distance", r.farthest.distance))
        }
        Command::Gradcheck(a) => {
            let catalog = load(&a.catalog)?;
            let ds = load_pairs(&a.pairs)?;
            let model = load_model(&a.model)?;
            let features = catalog.features();
            let get = |id: &ItemId| {
                features
                    .get(id)
                    .cloned()
                    .ok_or_else(|| Error::MissingFeatures(id.clone()))
            };
            let pairs = ds
                .train
                .iter()
                .take(a.limit)
                .map(|p| {
                    Ok(FeaturePair {
                        a: get(&p.a)?,
                        b: get(&p.b)?,
                        label: p.label,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if pairs.is_empty() {
                return Err(Error::EmptyInput("no train pairs to check".into()));
            }
            let margin = a.margin.unwrap_or(model.margin);
            let err = gradient_check(&model, &pairs, margin, a.epsilon)?;
            if err.is_nan() || err >= a.tolerance {
                return Err(Error::Numeric(format!(
                    "max relative gradient error {err:e} exceeds tolerance {:e}",
                    a.tolerance
                )));
            }
            Ok(Summary::new("gradcheck")
                .kv("pairs", pairs.len())
                .kv("max_rel_error", format_args!("{err:e}")))
        }
    }
}
