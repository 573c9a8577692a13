mod common;

use std::collections::{BTreeMap, HashMap};

use common::{clustered_corpus, cosine};
use mcqdebias::builder::{
    build_similarity_table, build_similarity_tables, generate_items, item_id, select_distractors,
    validate_tier_statistics, BuildConfig, ClassRecord, EasySource, EmbeddingRecord, EmbeddingSet,
    PositionBalancing, RankWindow, Verdict,
};
use mcqdebias::seeding::rng_for;
use mcqdebias::{Error, Tier, Variant};

fn class(id: &str, domain: &str, images: usize) -> ClassRecord {
    ClassRecord {
        class_id: id.into(),
        class_name: id.to_uppercase(),
        domain_tag: domain.into(),
        description_plain: format!("plain {id}"),
        description_named: format!("named {id}"),
        image_refs: (0..images).map(|i| format!("{id}/{i}.jpg")).collect(),
    }
}

fn emb(id: &str, v: Vec<f64>) -> Vec<EmbeddingRecord> {
    Variant::ALL
        .into_iter()
        .map(|variant| EmbeddingRecord {
            class_id: id.into(),
            variant,
            vector: v.clone(),
        })
        .collect()
}

#[test]
fn orthogonal_embeddings_tie_break_by_class_id() {
    let corpus = vec![class("c", "x", 1), class("a", "x", 1), class("b", "x", 1)];
    let set = EmbeddingSet::from_records(
        [
            emb("a", vec![1.0, 0.0, 0.0]),
            emb("b", vec![0.0, 1.0, 0.0]),
            emb("c", vec![0.0, 0.0, 1.0]),
        ]
        .concat(),
    )
    .unwrap();
    let table = build_similarity_table(&corpus, &set, Variant::WithoutName).unwrap();
    let ranked = &table.ranking("c").unwrap().ranked;
    assert_eq!(
        ranked
            .iter()
            .map(|e| e.class_id.as_str())
            .collect::<Vec<_>>(),
        ["a", "b"]
    );
    assert!(ranked.iter().all(|e| e.similarity == 0.0));
}

#[test]
fn identical_embedding_ranks_first() {
    let corpus = vec![class("a", "x", 1), class("b", "x", 1), class("z", "x", 1)];
    let set = EmbeddingSet::from_records(
        [
            emb("a", vec![1.0, 2.0]),
            emb("b", vec![0.0, 1.0]),
            emb("z", vec![2.0, 4.0]),
        ]
        .concat(),
    )
    .unwrap();
    let table = build_similarity_table(&corpus, &set, Variant::WithName).unwrap();
    let top = &table.ranking("a").unwrap().ranked[0];
    assert_eq!(top.class_id, "z");
    assert!((top.similarity - 1.0).abs() < 1e-12);
}

#[test]
fn missing_embedding_and_dimension_mismatch_are_errors() {
    let corpus = vec![class("a", "x", 1), class("b", "x", 1)];
    let set = EmbeddingSet::from_records(emb("a", vec![1.0, 0.0])).unwrap();
    match build_similarity_table(&corpus, &set, Variant::WithName) {
        Err(Error::MissingEmbedding { class_id, .. }) => assert_eq!(class_id, "b"),
        other => panic!("unexpected {other:?}"),
    }
    let set = EmbeddingSet::from_records([emb("a", vec![1.0, 0.0]), emb("b", vec![1.0])].concat())
        .unwrap();
    assert!(build_similarity_table(&corpus, &set, Variant::WithName).is_err());
}

#[test]
fn large_corpus_tables_match_brute_force() {
    let (corpus, records) = clustered_corpus(4, 50, 1, 5);
    let set = EmbeddingSet::from_records(records.clone()).unwrap();
    let table = build_similarity_table(&corpus, &set, Variant::WithoutName).unwrap();
    let vectors: HashMap<&str, &[f64]> = records
        .iter()
        .filter(|r| r.variant == Variant::WithoutName)
        .map(|r| (r.class_id.as_str(), r.vector.as_slice()))
        .collect();
    for target in &corpus {
        let ranking = table.ranking(&target.class_id).unwrap();
        assert_eq!(ranking.ranked.len(), 199);
        let best = corpus
            .iter()
            .filter(|c| c.class_id != target.class_id)
            .max_by(|a, b| {
                let sa = cosine(
                    vectors[target.class_id.as_str()],
                    vectors[a.class_id.as_str()],
                );
                let sb = cosine(
                    vectors[target.class_id.as_str()],
                    vectors[b.class_id.as_str()],
                );
                sa.total_cmp(&sb).then_with(|| b.class_id.cmp(&a.class_id))
            })
            .unwrap();
        assert_eq!(ranking.ranked[0].class_id, best.class_id);
        assert!(ranking
            .ranked
            .windows(2)
            .all(|w| w[0].similarity >= w[1].similarity));
    }
}

fn tables_for(
    domains: usize,
    per_domain: usize,
    images: usize,
) -> (Vec<ClassRecord>, mcqdebias::builder::SimilarityTables) {
    let (corpus, records) = clustered_corpus(domains, per_domain, images, 11);
    let set = EmbeddingSet::from_records(records).unwrap();
    let tables = build_similarity_tables(&corpus, &set).unwrap();
    (corpus, tables)
}

#[test]
fn distractor_windows() {
    let (corpus, tables) = tables_for(2, 30, 1);
    let table = tables.get(Variant::WithName);
    let config = BuildConfig::default();
    let domain_of: HashMap<&str, &str> = corpus
        .iter()
        .map(|c| (c.class_id.as_str(), c.domain_tag.as_str()))
        .collect();
    for target in corpus.iter().take(10) {
        let id = target.class_id.as_str();
        let same: Vec<String> = table
            .ranking(id)
            .unwrap()
            .same_domain()
            .iter()
            .map(|e| e.class_id.clone())
            .collect();

        let mut rng = rng_for(1, &[id.as_bytes()]);
        let hard = select_distractors(id, Tier::Hard, table, &config, &mut rng).unwrap();
        assert_eq!(hard.to_vec(), same[..3].to_vec());

        let easy = select_distractors(id, Tier::Easy, table, &config, &mut rng).unwrap();
        assert!(easy
            .iter()
            .all(|c| domain_of[c.as_str()] != target.domain_tag));

        // 29 same-domain classes: middle third is ranks 10..=19 (0-based 9..19)
        let window = &same[29 / 3..2 * 29 / 3];
        let pick = |seed| {
            select_distractors(
                id,
                Tier::Medium,
                table,
                &config,
                &mut rng_for(seed, &[b"m"]),
            )
            .unwrap()
        };
        assert_eq!(pick(3), pick(3));
        for seed in 0..20 {
            let m = pick(seed);
            assert!(
                m.iter().all(|c| window.contains(c)),
                "{m:?} outside {window:?}"
            );
            assert!(m[0] != m[1] && m[1] != m[2] && m[0] != m[2]);
            assert!(!m.contains(&target.class_id));
        }
    }
}

#[test]
fn insufficient_candidates_reported() {
    let (corpus, tables) = tables_for(2, 3, 1);
    let id = &corpus[0].class_id;
    let mut rng = rng_for(0, &[]);
    match select_distractors(
        id,
        Tier::Hard,
        tables.get(Variant::WithName),
        &BuildConfig::default(),
        &mut rng,
    ) {
        Err(Error::InsufficientCandidates {
            tier,
            target,
            available,
        }) => {
            assert_eq!(
                (tier, target.as_str(), available),
                (Tier::Hard, id.as_str(), 2)
            );
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(generate_items(&corpus, &tables, &BuildConfig::default()).is_err());
}

#[test]
fn full_build_counts_balance_and_invariants() {
    let (corpus, tables) = tables_for(4, 50, 1);
    let config = BuildConfig {
        images_per_class: 1,
        ..BuildConfig::default()
    };
    let ds = generate_items(&corpus, &tables, &config).unwrap();
    assert_eq!(ds.items.len(), 1200);
    assert_eq!(ds.manifest.total_items, 1200);
    let total: usize = ds
        .manifest
        .position_counts
        .iter()
        .flat_map(|p| p.counts.values())
        .sum();
    assert_eq!(total, 1200);
    for pc in &ds.manifest.position_counts {
        let max = pc.counts.values().max().unwrap();
        let min = pc.counts.values().min().unwrap();
        assert!(max - min <= 1, "{pc:?}");
    }
    assert_eq!(ds.manifest.tier_statistics.verdict, Verdict::Pass);

    let mut hard_min: HashMap<(&str, Variant), f64> = HashMap::new();
    let mut medium_max: HashMap<(&str, Variant), f64> = HashMap::new();
    for item in &ds.items {
        let texts: Vec<&str> = item.options.iter().map(|o| o.text.as_str()).collect();
        for i in 0..4 {
            for j in i + 1..4 {
                assert_ne!(texts[i], texts[j]);
            }
        }
        let target = item.correct_option().class_id.as_str();
        assert!(item.image_ref.starts_with(&format!("{target}/")));
        assert_eq!(
            item.item_id,
            item_id(target, &item.image_ref, item.tier, item.variant)
        );
        let table = tables.get(item.variant);
        for o in item.options.iter().filter(|o| o.class_id != target) {
            let s = table.similarity(target, &o.class_id).unwrap();
            match item.tier {
                Tier::Hard => {
                    let e = hard_min
                        .entry((target, item.variant))
                        .or_insert(f64::INFINITY);
                    *e = e.min(s);
                }
                Tier::Medium => {
                    let e = medium_max
                        .entry((target, item.variant))
                        .or_insert(f64::NEG_INFINITY);
                    *e = e.max(s);
                }
                Tier::Easy => {}
            }
        }
    }
    for (key, hard) in &hard_min {
        assert!(*hard >= medium_max[key], "{key:?}");
    }
}

#[test]
fn exact_rotation_fills_each_slot_equally() {
    let (corpus, tables) = tables_for(2, 8, 4);
    let one = BuildConfig {
        images_per_class: 1,
        hard_rank_window: RankWindow::Ranks { first: 1, last: 3 },
        medium_rank_window: RankWindow::Ranks { first: 4, last: 7 },
        ..BuildConfig::default()
    };
    let ds = generate_items(&corpus, &tables, &one).unwrap();
    for pc in &ds.manifest.position_counts {
        assert!(pc.counts.values().all(|&c| c == 4), "{pc:?}");
    }

    let four = BuildConfig {
        images_per_class: 4,
        ..one
    };
    let ds = generate_items(&corpus, &tables, &four).unwrap();
    let mut per_class: BTreeMap<(String, Tier, Variant), Vec<u8>> = BTreeMap::new();
    for item in &ds.items {
        per_class
            .entry((
                item.correct_option().class_id.clone(),
                item.tier,
                item.variant,
            ))
            .or_default()
            .push(item.correct_canonical_index);
    }
    for (key, mut slots) in per_class {
        slots.sort();
        assert_eq!(slots, [0, 1, 2, 3], "{key:?}");
    }
}

#[test]
fn determinism_and_seed_sensitivity() {
    let (corpus, tables) = tables_for(3, 20, 2);
    let config = BuildConfig {
        images_per_class: 2,
        seed: 9,
        ..BuildConfig::default()
    };
    let a = generate_items(&corpus, &tables, &config).unwrap();
    let b = generate_items(&corpus, &tables, &config).unwrap();
    assert_eq!(a.dataset_bytes().unwrap(), b.dataset_bytes().unwrap());
    assert_eq!(a.manifest, b.manifest);
    let c = generate_items(
        &corpus,
        &tables,
        &BuildConfig {
            seed: 10,
            ..config.clone()
        },
    )
    .unwrap();
    assert_ne!(a.manifest.content_hash, c.manifest.content_hash);
    let ids = |d: &mcqdebias::builder::GeneratedDataset| {
        d.items
            .iter()
            .map(|i| i.item_id.clone())
            .collect::<Vec<_>>()
    };
    assert_eq!(ids(&a), ids(&c));
}

#[test]
fn random_balanced_mode_is_seeded() {
    let (corpus, tables) = tables_for(2, 20, 3);
    let config = BuildConfig {
        images_per_class: 3,
        position_balancing: PositionBalancing::RandomBalanced,
        seed: 4,
        ..BuildConfig::default()
    };
    let a = generate_items(&corpus, &tables, &config).unwrap();
    let b = generate_items(&corpus, &tables, &config).unwrap();
    assert_eq!(a.dataset_bytes().unwrap(), b.dataset_bytes().unwrap());
    let used: std::collections::BTreeSet<u8> =
        a.items.iter().map(|i| i.correct_canonical_index).collect();
    assert_eq!(used.len(), 4);
}

#[test]
fn single_domain_falls_back_to_bottom_ranks() {
    let (corpus, tables) = tables_for(1, 30, 1);
    let ds = generate_items(
        &corpus,
        &tables,
        &BuildConfig {
            images_per_class: 1,
            ..BuildConfig::default()
        },
    )
    .unwrap();
    assert_eq!(ds.manifest.easy_source_effective, EasySource::BottomRanks);
    assert!(!ds.manifest.warnings.is_empty());
}

#[test]
fn single_tier_statistics_not_evaluable() {
    let (corpus, tables) = tables_for(2, 20, 1);
    let ds = generate_items(
        &corpus,
        &tables,
        &BuildConfig {
            images_per_class: 1,
            ..BuildConfig::default()
        },
    )
    .unwrap();
    let hard: Vec<_> = ds
        .items
        .into_iter()
        .filter(|i| i.tier == Tier::Hard)
        .collect();
    let report = validate_tier_statistics(&hard, &tables);
    assert_eq!(report.verdict, Verdict::NotEvaluable);
}

#[test]
fn separated_domains_give_extreme_tier_means() {
    // same-domain pairs have similarity >= 0.8, cross-domain <= 0.2
    let mut corpus = Vec::new();
    let mut records = Vec::new();
    for d in 0..2 {
        for c in 0..12 {
            let id = format!("d{d}-{c:02}");
            corpus.push(class(&id, &format!("dom{d}"), 1));
            let mut v = vec![0.0; 26];
            v[d] = 1.0;
            v[2 + d * 12 + c] = 0.3 + 0.01 * c as f64;
            records.extend(emb(&id, v));
        }
    }
    let set = EmbeddingSet::from_records(records).unwrap();
    let tables = build_similarity_tables(&corpus, &set).unwrap();
    for t in tables.get(Variant::WithName).targets.values() {
        for e in &t.ranked {
            if e.domain_tag == t.domain_tag {
                assert!(e.similarity >= 0.8);
            } else {
                assert!(e.similarity <= 0.2);
            }
        }
    }
    let ds = generate_items(
        &corpus,
        &tables,
        &BuildConfig {
            images_per_class: 1,
            ..BuildConfig::default()
        },
    )
    .unwrap();
    let pooled = |tier| {
        ds.manifest
            .tier_statistics
            .stats
            .iter()
            .find(|s| s.variant.is_none() && s.tier == tier)
            .unwrap()
            .mean
    };
    assert!(pooled(Tier::Easy) <= 0.2);
    assert!(pooled(Tier::Hard) >= 0.8);
}
