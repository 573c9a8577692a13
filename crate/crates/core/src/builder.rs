//! Benchmark construction: similarity ranking of class descriptions,
//! tiered distractor selection, correct-position balancing and tier
//! statistics.
//!
//! Tiers are defined by rank windows over the same-domain similarity
//! ranking of each target class:
//!
//! * hard: the most similar same-domain classes (ranks 1–3 by default);
//! * medium: sampled from the middle third of the same-domain ranking;
//! * easy: sampled from classes of a different domain, or from the bottom
//!   third of the full ranking when the corpus has a single domain.
//!
//! One distractor set is drawn per (class, tier, variant) and reused for
//! every image of that class.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::Range;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl;
use crate::numeric::cosine_similarity;
use crate::ordering::IdentifierAlphabet;
use crate::seeding::{rng_for, sha256_hex};
use crate::types::{McqItem, McqOption, Tier, Variant, NUM_OPTIONS};

pub const QUESTION_TEXT: &str = "Which description matches this object?";

const DISTRACTORS: usize = NUM_OPTIONS - 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassRecord {
    pub class_id: String,
    pub class_name: String,
    pub domain_tag: String,
    pub description_plain: String,
    pub description_named: String,
    pub image_refs: Vec<String>,
}

impl ClassRecord {
    pub fn validate(&self) -> Result<()> {
        if self.class_id.is_empty() {
            return Err(Error::validation("class_id must be non-empty"));
        }
        if self.description_plain.trim().is_empty() || self.description_named.trim().is_empty() {
            return Err(Error::validation(format!(
                "class `{}`: both descriptions must be non-empty",
                self.class_id
            )));
        }
        if self.image_refs.is_empty() {
            return Err(Error::validation(format!(
                "class `{}`: at least one image_ref required",
                self.class_id
            )));
        }
        let unique: BTreeSet<_> = self.image_refs.iter().collect();
        if unique.len() != self.image_refs.len() {
            return Err(Error::validation(format!(
                "class `{}`: duplicate image_ref",
                self.class_id
            )));
        }
        Ok(())
    }

    pub fn description(&self, variant: Variant) -> &str {
        match variant {
            Variant::WithName => &self.description_named,
            Variant::WithoutName => &self.description_plain,
        }
    }
}

/// Checks every record and the uniqueness of class ids.
pub fn validate_corpus(corpus: &[ClassRecord]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for record in corpus {
        record.validate()?;
        if !seen.insert(record.class_id.as_str()) {
            return Err(Error::validation(format!(
                "duplicate class_id `{}`",
                record.class_id
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub class_id: String,
    pub variant: Variant,
    pub vector: Vec<f64>,
}

/// Description embeddings keyed by (class, variant).
#[derive(Debug, Clone, Default)]
pub struct EmbeddingSet {
    vectors: HashMap<(String, Variant), Vec<f64>>,
}

impl EmbeddingSet {
    pub fn from_records(records: impl IntoIterator<Item = EmbeddingRecord>) -> Result<Self> {
        let mut vectors = HashMap::new();
        for r in records {
            if r.vector.is_empty() || r.vector.iter().any(|x| !x.is_finite()) {
                return Err(Error::validation(format!(
                    "embedding for `{}` ({}) must be a non-empty finite vector",
                    r.class_id, r.variant
                )));
            }
            let key = (r.class_id, r.variant);
            if vectors.contains_key(&key) {
                return Err(Error::validation(format!(
                    "duplicate {} embedding for `{}`",
                    key.1, key.0
                )));
            }
            vectors.insert(key, r.vector);
        }
        Ok(EmbeddingSet { vectors })
    }

    pub fn get(&self, class_id: &str, variant: Variant) -> Option<&[f64]> {
        self.vectors
            .get(&(class_id.to_string(), variant))
            .map(Vec::as_slice)
    }

    pub fn insert(&mut self, class_id: &str, variant: Variant, vector: Vec<f64>) {
        self.vectors.insert((class_id.to_string(), variant), vector);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityEntry {
    pub class_id: String,
    pub domain_tag: String,
    pub similarity: f64,
}

/// All other classes ordered by descending similarity to one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetRanking {
    pub domain_tag: String,
    pub ranked: Vec<SimilarityEntry>,
}

impl TargetRanking {
    pub fn same_domain(&self) -> Vec<&SimilarityEntry> {
        self.ranked
            .iter()
            .filter(|e| e.domain_tag == self.domain_tag)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityTable {
    pub variant: Variant,
    pub targets: BTreeMap<String, TargetRanking>,
}

impl SimilarityTable {
    pub fn ranking(&self, target: &str) -> Option<&TargetRanking> {
        self.targets.get(target)
    }

    pub fn similarity(&self, target: &str, other: &str) -> Option<f64> {
        self.ranking(target)?
            .ranked
            .iter()
            .find(|e| e.class_id == other)
            .map(|e| e.similarity)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityTables {
    pub with_name: SimilarityTable,
    pub without_name: SimilarityTable,
}

impl SimilarityTables {
    pub fn get(&self, variant: Variant) -> &SimilarityTable {
        match variant {
            Variant::WithName => &self.with_name,
            Variant::WithoutName => &self.without_name,
        }
    }
}

/// Ranks every other class by cosine similarity of `variant` embeddings.
/// Ties are broken by ascending class id.
pub fn build_similarity_table(
    corpus: &[ClassRecord],
    embeddings: &EmbeddingSet,
    variant: Variant,
) -> Result<SimilarityTable> {
    let mut vectors = Vec::with_capacity(corpus.len());
    let mut dim = None;
    for record in corpus {
        let v =
            embeddings
                .get(&record.class_id, variant)
                .ok_or_else(|| Error::MissingEmbedding {
                    class_id: record.class_id.clone(),
                    variant: variant.to_string(),
                })?;
        match dim {
            None => dim = Some(v.len()),
            Some(d) if d != v.len() => {
                return Err(Error::validation(format!(
                    "embedding dimension mismatch: `{}` has {} entries, expected {d}",
                    record.class_id,
                    v.len()
                )))
            }
            Some(_) => {}
        }
        vectors.push(v);
    }

    let rankings = (0..corpus.len())
        .into_par_iter()
        .map(|t| {
            let target = &corpus[t];
            let mut ranked = Vec::with_capacity(corpus.len().saturating_sub(1));
            for (o, other) in corpus.iter().enumerate() {
                if o == t {
                    continue;
                }
                ranked.push(SimilarityEntry {
                    class_id: other.class_id.clone(),
                    domain_tag: other.domain_tag.clone(),
                    similarity: cosine_similarity(vectors[t], vectors[o])?,
                });
            }
            ranked.sort_by(|a, b| {
                b.similarity
                    .total_cmp(&a.similarity)
                    .then_with(|| a.class_id.cmp(&b.class_id))
            });
            Ok((
                target.class_id.clone(),
                TargetRanking {
                    domain_tag: target.domain_tag.clone(),
                    ranked,
                },
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SimilarityTable {
        variant,
        targets: rankings.into_iter().collect(),
    })
}

pub fn build_similarity_tables(
    corpus: &[ClassRecord],
    embeddings: &EmbeddingSet,
) -> Result<SimilarityTables> {
    Ok(SimilarityTables {
        with_name: build_similarity_table(corpus, embeddings, Variant::WithName)?,
        without_name: build_similarity_table(corpus, embeddings, Variant::WithoutName)?,
    })
}

/// A window over a ranking, resolved against the ranking length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RankWindow {
    /// 1-based inclusive ranks.
    Ranks {
        first: usize,
        last: usize,
    },
    MiddleThird,
    BottomThird,
}

impl RankWindow {
    /// 0-based index range into a ranking of `len` entries, clipped to `len`.
    pub fn resolve(self, len: usize) -> Range<usize> {
        let r = match self {
            RankWindow::Ranks { first, last } => first.saturating_sub(1)..last,
            RankWindow::MiddleThird => len / 3..2 * len / 3,
            RankWindow::BottomThird => 2 * len / 3..len,
        };
        r.start.min(len)..r.end.min(len)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EasySource {
    CrossDomain,
    BottomRanks,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositionBalancing {
    /// Correct positions cycle A, B, C, D within each (tier, variant).
    ExactRotation,
    /// Correct positions drawn independently and uniformly (seeded).
    RandomBalanced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildConfig {
    pub images_per_class: usize,
    pub hard_rank_window: RankWindow,
    pub medium_rank_window: RankWindow,
    pub easy_source: EasySource,
    pub position_balancing: PositionBalancing,
    pub seed: u64,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            images_per_class: 5,
            hard_rank_window: RankWindow::Ranks { first: 1, last: 3 },
            medium_rank_window: RankWindow::MiddleThird,
            easy_source: EasySource::CrossDomain,
            position_balancing: PositionBalancing::ExactRotation,
            seed: 0,
        }
    }
}

impl BuildConfig {
    pub fn validate(&self) -> Result<()> {
        if self.images_per_class == 0 {
            return Err(Error::validation("images_per_class must be at least 1"));
        }
        for w in [self.hard_rank_window, self.medium_rank_window] {
            if let RankWindow::Ranks { first, last } = w {
                if first == 0 || last < first {
                    return Err(Error::validation(format!(
                        "invalid rank window {first}..={last}"
                    )));
                }
            }
        }
        if let (RankWindow::Ranks { .. }, RankWindow::Ranks { .. }) =
            (self.hard_rank_window, self.medium_rank_window)
        {
            let big = usize::MAX / 4;
            if overlaps(
                &self.hard_rank_window.resolve(big),
                &self.medium_rank_window.resolve(big),
            ) {
                return Err(Error::validation("hard and medium rank windows overlap"));
            }
        }
        Ok(())
    }
}

fn overlaps(a: &Range<usize>, b: &Range<usize>) -> bool {
    !a.is_empty() && !b.is_empty() && a.start < b.end && b.start < a.end
}

fn sample_three<R: Rng + ?Sized>(
    rng: &mut R,
    pool: &[&SimilarityEntry],
    tier: Tier,
    target: &str,
) -> Result<[String; DISTRACTORS]> {
    if pool.len() < DISTRACTORS {
        return Err(Error::InsufficientCandidates {
            tier,
            target: target.to_string(),
            available: pool.len(),
        });
    }
    let picked = index::sample(rng, pool.len(), DISTRACTORS).into_vec();
    Ok(std::array::from_fn(|i| pool[picked[i]].class_id.clone()))
}

/// Picks the three distractor classes for `target` at `tier`.
pub fn select_distractors<R: Rng + ?Sized>(
    target: &str,
    tier: Tier,
    table: &SimilarityTable,
    config: &BuildConfig,
    rng: &mut R,
) -> Result<[String; DISTRACTORS]> {
    let ranking = table
        .ranking(target)
        .ok_or_else(|| Error::validation(format!("no similarity ranking for `{target}`")))?;
    let same = ranking.same_domain();
    match tier {
        Tier::Hard => {
            let window = config.hard_rank_window.resolve(same.len());
            if window.len() < DISTRACTORS {
                return Err(Error::InsufficientCandidates {
                    tier,
                    target: target.to_string(),
                    available: window.len(),
                });
            }
            Ok(std::array::from_fn(|i| {
                same[window.start + i].class_id.clone()
            }))
        }
        Tier::Medium => {
            let window = config.medium_rank_window.resolve(same.len());
            let hard = config.hard_rank_window.resolve(same.len());
            if window.len() < DISTRACTORS {
                return Err(Error::InsufficientCandidates {
                    tier,
                    target: target.to_string(),
                    available: window.len(),
                });
            }
            if overlaps(&window, &hard) {
                return Err(Error::validation(format!(
                    "medium window {window:?} overlaps hard window {hard:?} for `{target}`"
                )));
            }
            sample_three(rng, &same[window], tier, target)
        }
        Tier::Easy => match config.easy_source {
            EasySource::CrossDomain => {
                let pool: Vec<_> = ranking
                    .ranked
                    .iter()
                    .filter(|e| e.domain_tag != ranking.domain_tag)
                    .collect();
                sample_three(rng, &pool, tier, target)
            }
            EasySource::BottomRanks => {
                let all: Vec<_> = ranking.ranked.iter().collect();
                let window = RankWindow::BottomThird.resolve(all.len());
                sample_three(rng, &all[window], tier, target)
            }
        },
    }
}

/// Stable identifier of an item: hex SHA-256 prefix over its defining tuple.
pub fn item_id(class_id: &str, image_ref: &str, tier: Tier, variant: Variant) -> String {
    let key = format!(
        "{class_id}\u{1f}{image_ref}\u{1f}{}\u{1f}{}",
        tier.as_str(),
        variant.as_str()
    );
    sha256_hex(key.as_bytes())[..16].to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotEvaluable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierStat {
    /// `None` pools both variants.
    pub variant: Option<Variant>,
    pub tier: Tier,
    pub mean: f64,
    pub std: f64,
    pub n_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierReport {
    pub stats: Vec<TierStat>,
    /// Monotonicity easy < medium < hard over pooled means.
    pub verdict: Verdict,
    pub variant_verdicts: BTreeMap<Variant, Verdict>,
}

fn monotonic_verdict(means: &BTreeMap<Tier, f64>) -> Verdict {
    if means.len() < 2 {
        return Verdict::NotEvaluable;
    }
    // BTreeMap iterates tiers in easy < medium < hard order.
    let ordered: Vec<f64> = means.values().copied().collect();
    if ordered.windows(2).all(|w| w[0] < w[1]) {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// Mean and population standard deviation of correct↔distractor similarity
/// per tier, plus the easy < medium < hard verdict.
pub fn validate_tier_statistics(items: &[McqItem], tables: &SimilarityTables) -> TierReport {
    let mut groups: BTreeMap<(Option<Variant>, Tier), Vec<f64>> = BTreeMap::new();
    for item in items {
        let table = tables.get(item.variant);
        let target = &item.correct_option().class_id;
        for opt in &item.options {
            if opt.canonical_index == item.correct_canonical_index {
                continue;
            }
            if let Some(sim) = table.similarity(target, &opt.class_id) {
                groups.entry((None, item.tier)).or_default().push(sim);
                groups
                    .entry((Some(item.variant), item.tier))
                    .or_default()
                    .push(sim);
            }
        }
    }

    let mut stats = Vec::new();
    let mut means: BTreeMap<Option<Variant>, BTreeMap<Tier, f64>> = BTreeMap::new();
    for ((variant, tier), sims) in &groups {
        let n = sims.len() as f64;
        let mean = sims.iter().sum::<f64>() / n;
        let var = sims.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
        stats.push(TierStat {
            variant: *variant,
            tier: *tier,
            mean,
            std: var.sqrt(),
            n_pairs: sims.len(),
        });
        means.entry(*variant).or_default().insert(*tier, mean);
    }

    let verdict = means
        .get(&None)
        .map(monotonic_verdict)
        .unwrap_or(Verdict::NotEvaluable);
    let variant_verdicts = means
        .iter()
        .filter_map(|(v, m)| v.map(|v| (v, monotonic_verdict(m))))
        .collect();
    TierReport {
        stats,
        verdict,
        variant_verdicts,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionCount {
    pub tier: Tier,
    pub variant: Variant,
    /// Correct-answer counts keyed by canonical label A–D.
    pub counts: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub total_items: usize,
    pub position_counts: Vec<PositionCount>,
    pub tier_statistics: TierReport,
    pub config: BuildConfig,
    pub easy_source_effective: EasySource,
    pub notes: Vec<String>,
    pub warnings: Vec<String>,
    /// SHA-256 of the dataset JSON-lines bytes.
    pub content_hash: String,
}

#[derive(Debug, Clone)]
pub struct GeneratedDataset {
    pub items: Vec<McqItem>,
    pub manifest: DatasetManifest,
}

impl GeneratedDataset {
    pub fn dataset_bytes(&self) -> Result<Vec<u8>> {
        jsonl::to_jsonl_bytes(&self.items)
    }
}

struct Pending<'a> {
    class: &'a ClassRecord,
    image_ref: &'a str,
    tier: Tier,
    variant: Variant,
    distractors: &'a [String; DISTRACTORS],
}

/// Emits `images_per_class × 3 tiers × 2 variants` items per class, sorted by
/// item id, together with the dataset manifest.
pub fn generate_items(
    corpus: &[ClassRecord],
    tables: &SimilarityTables,
    config: &BuildConfig,
) -> Result<GeneratedDataset> {
    config.validate()?;
    validate_corpus(corpus)?;

    let mut warnings = Vec::new();
    let notes = vec![
        "tiers are rank-window based; the default medium window is the middle third of the same-domain ranking".to_string(),
        "one distractor set is drawn per (class, tier, variant) and reused across that class's images".to_string(),
    ];
    let domains: BTreeSet<&str> = corpus.iter().map(|c| c.domain_tag.as_str()).collect();
    let mut effective = config.clone();
    if config.easy_source == EasySource::CrossDomain && domains.len() < 2 {
        effective.easy_source = EasySource::BottomRanks;
        warnings.push(
            "single-domain corpus: easy distractors drawn from bottom-ranked classes".to_string(),
        );
    }

    let mut classes: Vec<&ClassRecord> = corpus.iter().collect();
    classes.sort_by(|a, b| a.class_id.cmp(&b.class_id));
    for c in &classes {
        if c.image_refs.len() < config.images_per_class {
            warnings.push(format!(
                "class `{}` has {} image(s), fewer than images_per_class = {}",
                c.class_id,
                c.image_refs.len(),
                config.images_per_class
            ));
        }
    }

    let keys: Vec<(usize, Tier, Variant)> = (0..classes.len())
        .flat_map(|c| {
            Tier::ALL
                .into_iter()
                .flat_map(move |t| Variant::ALL.into_iter().map(move |v| (c, t, v)))
        })
        .collect();
    let selections: Vec<Result<[String; DISTRACTORS]>> = keys
        .par_iter()
        .map(|&(c, tier, variant)| {
            let class_id = &classes[c].class_id;
            let mut rng = rng_for(
                config.seed,
                &[
                    b"distractors",
                    class_id.as_bytes(),
                    tier.as_str().as_bytes(),
                    variant.as_str().as_bytes(),
                ],
            );
            select_distractors(class_id, tier, tables.get(variant), &effective, &mut rng)
        })
        .collect();
    let selections = selections.into_iter().collect::<Result<Vec<_>>>()?;

    let mut pending = Vec::new();
    for (&(c, tier, variant), distractors) in keys.iter().zip(&selections) {
        let class = classes[c];
        for image_ref in class.image_refs.iter().take(config.images_per_class) {
            pending.push(Pending {
                class,
                image_ref,
                tier,
                variant,
                distractors,
            });
        }
    }
    // Rotation order within each (tier, variant): class id, then image order.
    pending.sort_by(|a, b| {
        (a.tier, a.variant, &a.class.class_id).cmp(&(b.tier, b.variant, &b.class.class_id))
    });

    let by_id: HashMap<&str, &ClassRecord> =
        corpus.iter().map(|c| (c.class_id.as_str(), c)).collect();
    let mut counters: BTreeMap<(Tier, Variant), usize> = BTreeMap::new();
    let mut items = Vec::with_capacity(pending.len());
    for p in &pending {
        let id = item_id(&p.class.class_id, p.image_ref, p.tier, p.variant);
        let counter = counters.entry((p.tier, p.variant)).or_default();
        let correct = match config.position_balancing {
            PositionBalancing::ExactRotation => *counter % NUM_OPTIONS,
            PositionBalancing::RandomBalanced => {
                rng_for(config.seed, &[b"position", id.as_bytes()]).random_range(0..NUM_OPTIONS)
            }
        };
        *counter += 1;

        let mut distractors = p.distractors.iter();
        let options = std::array::from_fn(|i| {
            let class = if i == correct {
                p.class
            } else {
                by_id[distractors.next().expect("three distractors").as_str()]
            };
            McqOption {
                canonical_index: i as u8,
                text: class.description(p.variant).to_string(),
                class_id: class.class_id.clone(),
            }
        });
        let item = McqItem {
            item_id: id,
            image_ref: p.image_ref.to_string(),
            question_text: QUESTION_TEXT.to_string(),
            options,
            correct_canonical_index: correct as u8,
            tier: p.tier,
            variant: p.variant,
            domain_tag: p.class.domain_tag.clone(),
        };
        item.validate()?;
        items.push(item);
    }

    items.sort_by(|a, b| a.item_id.cmp(&b.item_id));
    if let Some(w) = items.windows(2).find(|w| w[0].item_id == w[1].item_id) {
        return Err(Error::Internal(format!(
            "duplicate item_id {}",
            w[0].item_id
        )));
    }

    let labels = IdentifierAlphabet::Alphabetic.labels();
    let mut position_counts = Vec::new();
    for tier in Tier::ALL {
        for variant in Variant::ALL {
            let mut counts: BTreeMap<String, usize> =
                labels.iter().map(|l| (l.to_string(), 0)).collect();
            for item in items
                .iter()
                .filter(|i| i.tier == tier && i.variant == variant)
            {
                *counts
                    .get_mut(labels[item.correct_canonical_index as usize])
                    .expect("label present") += 1;
            }
            position_counts.push(PositionCount {
                tier,
                variant,
                counts,
            });
        }
    }

    let tier_statistics = validate_tier_statistics(&items, tables);
    let content_hash = sha256_hex(&jsonl::to_jsonl_bytes(&items)?);
    let manifest = DatasetManifest {
        total_items: items.len(),
        position_counts,
        tier_statistics,
        config: config.clone(),
        easy_source_effective: effective.easy_source,
        notes,
        warnings,
        content_hash,
    };
    Ok(GeneratedDataset { items, manifest })
}
