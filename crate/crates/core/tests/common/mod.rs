//! Test-side helpers. Random numbers here come from a local SplitMix64 and
//! Box–Muller so oracles never share a generator with the library.

#![allow(dead_code)]

pub mod adapter;

use mcqdebias::builder::{ClassRecord, EmbeddingRecord};
use mcqdebias::{McqItem, McqOption, Tier, Variant};

pub struct SplitMix64(u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.uniform() * n as f64) as usize
    }

    pub fn shuffle<T>(&mut self, v: &mut [T]) {
        for i in (1..v.len()).rev() {
            let j = self.below(i + 1);
            v.swap(i, j);
        }
    }
}

/// `n` items whose correct canonical index cycles 0,1,2,3.
pub fn balanced_items(n: usize) -> Vec<McqItem> {
    (0..n)
        .map(|i| McqItem {
            item_id: format!("item-{i:05}"),
            image_ref: format!("img/{i:05}.jpg"),
            question_text: "Which description matches this object?".into(),
            options: std::array::from_fn(|k| McqOption {
                canonical_index: k as u8,
                text: format!("description {k} of item {i}"),
                class_id: format!("class-{i}-{k}"),
            }),
            correct_canonical_index: (i % 4) as u8,
            tier: Tier::ALL[i % 3],
            variant: Variant::ALL[i % 2],
            domain_tag: "synthetic".into(),
        })
        .collect()
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

fn random_unit(rng: &mut SplitMix64, dim: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
    normalize(&mut v);
    v
}

/// Corpus of `domains × per_domain` classes. Each class embedding is a
/// domain direction plus a sub-cluster direction plus noise, so same-domain
/// similarities are high but graded and cross-domain ones are low.
pub fn clustered_corpus(
    domains: usize,
    per_domain: usize,
    images: usize,
    seed: u64,
) -> (Vec<ClassRecord>, Vec<EmbeddingRecord>) {
    let dim = 48;
    let mut rng = SplitMix64::new(seed);
    let mut corpus = Vec::new();
    let mut embeddings = Vec::new();
    for d in 0..domains {
        let domain_dir = random_unit(&mut rng, dim);
        let clusters: Vec<Vec<f64>> = (0..5).map(|_| random_unit(&mut rng, dim)).collect();
        for c in 0..per_domain {
            let class_id = format!("d{d}-c{c:03}");
            corpus.push(ClassRecord {
                class_id: class_id.clone(),
                class_name: format!("Class {d}/{c}"),
                domain_tag: format!("domain{d}"),
                description_plain: format!("a thing of kind {c} in domain {d}"),
                description_named: format!("Class {d}/{c}, a thing of kind {c} in domain {d}"),
                image_refs: (0..images).map(|i| format!("{class_id}/{i}.jpg")).collect(),
            });
            let cluster = &clusters[c % clusters.len()];
            for variant in Variant::ALL {
                let spread = if variant == Variant::WithName {
                    0.35
                } else {
                    0.45
                };
                let mut v: Vec<f64> = (0..dim)
                    .map(|k| {
                        1.0 * domain_dir[k]
                            + 0.6 * cluster[k]
                            + spread * rng.normal() / (dim as f64).sqrt() * 3.0
                    })
                    .collect();
                normalize(&mut v);
                embeddings.push(EmbeddingRecord {
                    class_id: class_id.clone(),
                    variant,
                    vector: v,
                });
            }
        }
    }
    (corpus, embeddings)
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

pub fn softmax(l: &[f64; 4]) -> [f64; 4] {
    let m = l.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e = l.map(|x| (x - m).exp());
    let s: f64 = e.iter().sum();
    e.map(|x| x / s)
}

pub fn first_argmax(l: &[f64; 4]) -> usize {
    let mut best = 0;
    for i in 1..4 {
        if l[i] > l[best] {
            best = i;
        }
    }
    best
}
