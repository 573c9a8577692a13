//! Ensemble logit debiasing.
//!
//! Two bias vectors are estimated by averaging softmaxed option logits: a
//! general one over content-free prompts with randomized option orders, and
//! a contextual one over a random fraction of the real items shown in
//! canonical order. Each is zero-centered, the two are averaged, and every
//! logit vector `L` is corrected as
//!
//! ```text
//! L' = L - α_adp · B,   α_adp = α / (1 + exp(conf - τ)),   conf = max(L) - mean(L)
//! ```
//!
//! with `conf` taken on the raw logits.

use std::collections::HashSet;

use rand::seq::{index, SliceRandom};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, ProviderError, Result};
use crate::numeric::{argmax4, softmax4, zero_center};
use crate::ordering::{apply_ordering, IdentifierAlphabet, OrderingScheme};
use crate::providers::{LogitProvider, LogitRecord, LogitRequest};
use crate::seeding::rng_for;
use crate::types::{
    BiasVector, EvalRecord, LogitVector, McqItem, PresentedItem, PresentedOption, NUM_OPTIONS,
};

/// Largest tolerated fraction of failed provider calls in an evaluation run.
pub const MAX_PROVIDER_ERROR_RATE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DebiasConfig {
    pub alpha: f64,
    pub tau: f64,
    /// Number of content-free prompts for the general bias vector.
    pub n_general: usize,
    /// Fraction of the dataset sampled for the contextual bias vector.
    pub contextual_fraction: f64,
    pub seed: u64,
    /// Exclude the contextual calibration items from evaluation.
    pub contextual_holdout: bool,
}

impl Default for DebiasConfig {
    fn default() -> Self {
        DebiasConfig {
            alpha: 1.0,
            tau: 2.0,
            n_general: 32,
            contextual_fraction: 0.10,
            seed: 0,
            contextual_holdout: false,
        }
    }
}

impl DebiasConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::validation(format!(
                "alpha must be > 0, got {}",
                self.alpha
            )));
        }
        if !self.tau.is_finite() {
            return Err(Error::validation("tau must be finite"));
        }
        if self.n_general == 0 {
            return Err(Error::validation("n_general must be at least 1"));
        }
        if !(self.contextual_fraction > 0.0 && self.contextual_fraction <= 1.0) {
            return Err(Error::validation(format!(
                "contextual_fraction must lie in (0, 1], got {}",
                self.contextual_fraction
            )));
        }
        Ok(())
    }
}

/// A semantically empty question used to probe structural preference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContentFreeTemplate {
    pub template_id: &'static str,
    pub question_text: &'static str,
    pub options: [&'static str; NUM_OPTIONS],
}

const TEMPLATE_QUESTION: &str = "Which description matches this object?";

pub fn builtin_templates() -> Vec<ContentFreeTemplate> {
    let numbered = |id, noun: &str| -> ContentFreeTemplate {
        let options = match noun {
            "Option" => ["Option one", "Option two", "Option three", "Option four"],
            "Choice" => ["Choice one", "Choice two", "Choice three", "Choice four"],
            "Description" => [
                "Description one",
                "Description two",
                "Description three",
                "Description four",
            ],
            _ => ["Answer one", "Answer two", "Answer three", "Answer four"],
        };
        ContentFreeTemplate {
            template_id: id,
            question_text: TEMPLATE_QUESTION,
            options,
        }
    };
    vec![
        numbered("option", "Option"),
        numbered("choice", "Choice"),
        numbered("description", "Description"),
        numbered("answer", "Answer"),
    ]
}

/// Lays out a template under `scheme`; the prompt has no image and no answer.
/// The item id names only the template, so a prompt is identified by
/// `(item_id, ordering_name)` like any dataset item.
pub fn present_template(template: &ContentFreeTemplate, scheme: &OrderingScheme) -> PresentedItem {
    let options = std::array::from_fn(|slot| {
        let slot = crate::types::OptionSlot::ALL[slot];
        let canonical = scheme.canonical_at(slot);
        PresentedOption {
            label: scheme.label_at(slot).to_string(),
            text: template.options[canonical].to_string(),
            canonical_index: canonical as u8,
        }
    });
    PresentedItem {
        item_id: format!("content-free/{}", template.template_id),
        ordering_name: scheme.name.clone(),
        question_text: template.question_text.to_string(),
        image_ref: String::new(),
        options,
        correct_slot: None,
    }
}

/// Every prompt general-bias estimation can issue for `alphabet`: each
/// template under each of the 24 option orders.
pub fn all_content_free_prompts(alphabet: IdentifierAlphabet) -> Vec<PresentedItem> {
    let mut out = Vec::new();
    for template in builtin_templates() {
        for code in 0..256u32 {
            let perm: [u8; NUM_OPTIONS] = std::array::from_fn(|i| ((code >> (2 * i)) & 3) as u8);
            if let Ok(scheme) = OrderingScheme::from_permutation(perm, alphabet) {
                out.push(present_template(&template, &scheme));
            }
        }
    }
    out
}

fn mean_softmax(sum: [f64; NUM_OPTIONS], count: usize) -> Result<BiasVector> {
    BiasVector::raw(sum.map(|s| s / count as f64))
}

/// Averaged softmax over `n` content-free prompts (templates cycled, option
/// order randomized per prompt), zero-centered.
pub fn estimate_general_bias(
    provider: &dyn LogitProvider,
    templates: &[ContentFreeTemplate],
    n: usize,
    alphabet: IdentifierAlphabet,
    seed: u64,
) -> Result<BiasVector> {
    if n == 0 {
        return Err(Error::validation("general bias needs at least one prompt"));
    }
    if templates.is_empty() {
        return Err(Error::validation(
            "general bias needs at least one template",
        ));
    }
    let mut rng = rng_for(seed, &[b"general", alphabet.as_str().as_bytes()]);
    let mut sum = [0.0; NUM_OPTIONS];
    for i in 0..n {
        let mut perm = [0u8, 1, 2, 3];
        perm.shuffle(&mut rng);
        let scheme = OrderingScheme::from_permutation(perm, alphabet)?;
        let presented = present_template(&templates[i % templates.len()], &scheme);
        let record = provider
            .fetch_logits(&LogitRequest::from(presented))
            .map_err(|source| Error::Calibration {
                stage: "general",
                completed: i,
                requested: n,
                source,
            })?;
        let p = softmax4(&record.logits);
        for (acc, v) in sum.iter_mut().zip(p.values()) {
            *acc += v;
        }
    }
    Ok(zero_center(&mean_softmax(sum, n)?))
}

/// `⌈fraction · len⌉`, ignoring floating-point residue just above an integer.
pub fn contextual_sample_size(len: usize, fraction: f64) -> usize {
    let exact = fraction * len as f64;
    let nearest = exact.round();
    let m = if (exact - nearest).abs() < 1e-9 {
        nearest
    } else {
        exact.ceil()
    };
    (m as usize).min(len)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContextualEstimate {
    pub bias: BiasVector,
    pub sampled_item_ids: Vec<String>,
}

/// Averaged softmax over a seeded sample of dataset items shown in the
/// alphabet's canonical order, zero-centered.
pub fn estimate_contextual_bias(
    provider: &dyn LogitProvider,
    dataset: &[McqItem],
    fraction: f64,
    alphabet: IdentifierAlphabet,
    seed: u64,
) -> Result<ContextualEstimate> {
    if dataset.is_empty() {
        return Err(Error::validation(
            "contextual bias needs a non-empty dataset",
        ));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::validation(format!(
            "contextual fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let m = contextual_sample_size(dataset.len(), fraction);
    if m == 0 {
        return Err(Error::validation("contextual sample is empty"));
    }
    let mut rng = rng_for(seed, &[b"contextual"]);
    let picked = index::sample(&mut rng, dataset.len(), m).into_vec();
    let scheme = OrderingScheme::identity(alphabet);
    let mut sum = [0.0; NUM_OPTIONS];
    let mut sampled_item_ids = Vec::with_capacity(m);
    for (done, &i) in picked.iter().enumerate() {
        let item = &dataset[i];
        let presented = apply_ordering(item, &scheme);
        let record = provider
            .fetch_logits(&LogitRequest::from(presented))
            .map_err(|source| Error::Calibration {
                stage: "contextual",
                completed: done,
                requested: m,
                source,
            })?;
        let p = softmax4(&record.logits);
        for (acc, v) in sum.iter_mut().zip(p.values()) {
            *acc += v;
        }
        sampled_item_ids.push(item.item_id.clone());
    }
    Ok(ContextualEstimate {
        bias: zero_center(&mean_softmax(sum, m)?),
        sampled_item_ids,
    })
}

/// Elementwise mean of two centered bias vectors.
pub fn ensemble(b_gen: &BiasVector, b_ctx: &BiasVector) -> Result<BiasVector> {
    b_gen.require_centered()?;
    b_ctx.require_centered()?;
    let g = b_gen.values();
    let c = b_ctx.values();
    BiasVector::centered(std::array::from_fn(|i| (g[i] + c[i]) / 2.0))
}

/// `max(L) - mean(L)`.
pub fn confidence(logits: &LogitVector) -> f64 {
    logits.max() - logits.mean()
}

/// `alpha / (1 + exp(conf - tau))`, evaluated without overflow.
pub fn adaptive_alpha(conf: f64, alpha: f64, tau: f64) -> f64 {
    let x = conf - tau;
    if x > 0.0 {
        let e = (-x).exp();
        alpha * e / (1.0 + e)
    } else {
        alpha / (1.0 + x.exp())
    }
}

/// `L - adaptive_alpha(confidence(L)) · B`.
pub fn correct_logits(
    logits: &LogitVector,
    bias: &BiasVector,
    alpha: f64,
    tau: f64,
) -> Result<LogitVector> {
    bias.require_centered()?;
    let a = adaptive_alpha(confidence(logits), alpha, tau);
    let l = logits.values();
    let b = bias.values();
    LogitVector::new(std::array::from_fn(|i| l[i] - a * b[i]))
}

/// Persisted result of calibration for one identifier alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasEstimate {
    pub alphabet: IdentifierAlphabet,
    pub b_general: BiasVector,
    pub b_contextual: BiasVector,
    pub b_ensemble: BiasVector,
    pub n_used: usize,
    pub m_used: usize,
    pub contextual_item_ids: Vec<String>,
    pub config: DebiasConfig,
    pub provider_tag: String,
}

impl BiasEstimate {
    pub fn check_invariants(&self) -> Result<()> {
        for (name, v) in [
            ("b_general", &self.b_general),
            ("b_contextual", &self.b_contextual),
            ("b_ensemble", &self.b_ensemble),
        ] {
            let sum: f64 = v.values().iter().sum();
            if !v.is_centered() || sum.abs() > 1e-9 {
                return Err(Error::validation(format!(
                    "{name} is not centered (sum {sum})"
                )));
            }
        }
        for i in 0..NUM_OPTIONS {
            let mean = (self.b_general.values()[i] + self.b_contextual.values()[i]) / 2.0;
            if (self.b_ensemble.values()[i] - mean).abs() > 1e-12 {
                return Err(Error::validation(
                    "b_ensemble is not the mean of b_general and b_contextual",
                ));
            }
        }
        Ok(())
    }

    pub fn correction(&self) -> Correction {
        Correction {
            bias: self.b_ensemble,
            alpha: self.config.alpha,
            tau: self.config.tau,
        }
    }
}

/// Estimates general, contextual and ensemble bias vectors for `alphabet`.
pub fn calibrate(
    provider: &dyn LogitProvider,
    dataset: &[McqItem],
    alphabet: IdentifierAlphabet,
    config: &DebiasConfig,
) -> Result<BiasEstimate> {
    config.validate()?;
    let b_general = estimate_general_bias(
        provider,
        &builtin_templates(),
        config.n_general,
        alphabet,
        config.seed,
    )?;
    let ctx = estimate_contextual_bias(
        provider,
        dataset,
        config.contextual_fraction,
        alphabet,
        config.seed,
    )?;
    let b_ensemble = ensemble(&b_general, &ctx.bias)?;
    Ok(BiasEstimate {
        alphabet,
        b_general,
        b_contextual: ctx.bias,
        b_ensemble,
        n_used: config.n_general,
        m_used: ctx.sampled_item_ids.len(),
        contextual_item_ids: ctx.sampled_item_ids,
        config: config.clone(),
        provider_tag: provider.tag().to_string(),
    })
}

/// Bias vector plus correction strength applied to every raw logit vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correction {
    pub bias: BiasVector,
    pub alpha: f64,
    pub tau: f64,
}

impl Correction {
    pub fn apply(&self, logits: &LogitVector) -> Result<LogitVector> {
        correct_logits(logits, &self.bias, self.alpha, self.tau)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalFailure {
    pub item_id: String,
    pub ordering_name: String,
    pub error: String,
}

/// Records, raw logits and failures of one or more evaluation passes.
#[derive(Debug, Clone, Default)]
pub struct EvalOutcome {
    pub records: Vec<EvalRecord>,
    pub logits: Vec<LogitRecord>,
    pub failures: Vec<EvalFailure>,
}

impl EvalOutcome {
    pub fn attempted(&self) -> usize {
        self.records.len() + self.failures.len()
    }

    pub fn error_rate(&self) -> f64 {
        match self.attempted() {
            0 => 0.0,
            n => self.failures.len() as f64 / n as f64,
        }
    }

    pub fn check_error_rate(&self) -> Result<()> {
        if self.error_rate() > MAX_PROVIDER_ERROR_RATE {
            return Err(Error::ProviderErrorRate {
                failed: self.failures.len(),
                total: self.attempted(),
                first_failures: self
                    .failures
                    .iter()
                    .take(20)
                    .map(|f| format!("{}/{}", f.item_id, f.ordering_name))
                    .collect(),
            });
        }
        Ok(())
    }

    pub fn merge(&mut self, other: EvalOutcome) {
        self.records.extend(other.records);
        self.logits.extend(other.logits);
        self.failures.extend(other.failures);
        self.sort();
    }

    fn sort(&mut self) {
        self.records
            .sort_by(|a, b| (&a.item_id, &a.ordering_name).cmp(&(&b.item_id, &b.ordering_name)));
        self.logits
            .sort_by(|a, b| (&a.item_id, &a.ordering_name).cmp(&(&b.item_id, &b.ordering_name)));
        self.failures
            .sort_by(|a, b| (&a.item_id, &a.ordering_name).cmp(&(&b.item_id, &b.ordering_name)));
    }
}

/// Fetches logits for every item under `ordering` (in parallel) and records
/// raw and, when `correction` is given, corrected choices. Without a
/// correction the corrected fields mirror the raw ones.
pub fn evaluate(
    provider: &dyn LogitProvider,
    items: &[McqItem],
    ordering: &OrderingScheme,
    correction: Option<&Correction>,
) -> Result<EvalOutcome> {
    let results: Vec<Result<(EvalRecord, LogitRecord), EvalFailure>> = items
        .par_iter()
        .map(|item| {
            let presented = apply_ordering(item, ordering);
            let correct_slot = presented
                .correct_slot
                .expect("dataset items have an answer");
            let fail = |e: ProviderError| EvalFailure {
                item_id: item.item_id.clone(),
                ordering_name: ordering.name.clone(),
                error: e.to_string(),
            };
            let logit_record = provider
                .fetch_logits(&LogitRequest::from(presented))
                .map_err(fail)?;
            let raw = logit_record.logits;
            let corrected = match correction {
                Some(c) => c.apply(&raw).map_err(|e| EvalFailure {
                    item_id: item.item_id.clone(),
                    ordering_name: ordering.name.clone(),
                    error: e.to_string(),
                })?,
                None => raw,
            };
            Ok((
                EvalRecord {
                    item_id: item.item_id.clone(),
                    ordering_name: ordering.name.clone(),
                    raw_logits: raw,
                    corrected_logits: corrected,
                    raw_choice: argmax4(raw.values()),
                    corrected_choice: argmax4(corrected.values()),
                    correct_slot,
                    tier: item.tier,
                    variant: item.variant,
                    domain_tag: item.domain_tag.clone(),
                },
                logit_record,
            ))
        })
        .collect();

    let mut outcome = EvalOutcome::default();
    for r in results {
        match r {
            Ok((record, logits)) => {
                outcome.records.push(record);
                outcome.logits.push(logits);
            }
            Err(f) => outcome.failures.push(f),
        }
    }
    outcome.sort();
    Ok(outcome)
}

#[derive(Debug, Clone)]
pub struct DebiasedEval {
    pub estimate: BiasEstimate,
    pub outcome: EvalOutcome,
    /// Items withheld from evaluation because they calibrated the contextual vector.
    pub held_out: Vec<String>,
}

/// Calibrates once on `dataset`, then evaluates every item under `ordering`
/// with both raw and corrected logits.
pub fn run_debiased_eval(
    provider: &dyn LogitProvider,
    dataset: &[McqItem],
    ordering: &OrderingScheme,
    config: &DebiasConfig,
) -> Result<DebiasedEval> {
    let estimate = calibrate(provider, dataset, ordering.alphabet, config)?;
    let (eval_items, held_out) = split_holdout(dataset, &estimate, config.contextual_holdout);
    let outcome = evaluate(
        provider,
        &eval_items,
        ordering,
        Some(&estimate.correction()),
    )?;
    outcome.check_error_rate()?;
    Ok(DebiasedEval {
        estimate,
        outcome,
        held_out,
    })
}

/// Returns the evaluation set and the withheld ids.
pub fn split_holdout(
    dataset: &[McqItem],
    estimate: &BiasEstimate,
    holdout: bool,
) -> (Vec<McqItem>, Vec<String>) {
    if !holdout {
        return (dataset.to_vec(), Vec::new());
    }
    let sampled: HashSet<&str> = estimate
        .contextual_item_ids
        .iter()
        .map(String::as_str)
        .collect();
    let kept = dataset
        .iter()
        .filter(|i| !sampled.contains(i.item_id.as_str()))
        .cloned()
        .collect();
    let mut held: Vec<String> = estimate.contextual_item_ids.clone();
    held.sort();
    (kept, held)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{McqOption, Tier, Variant};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    struct Constant(LogitVector);

    impl LogitProvider for Constant {
        fn tag(&self) -> &str {
            "constant"
        }

        fn fetch_logits(&self, request: &LogitRequest) -> Result<LogitRecord, ProviderError> {
            Ok(LogitRecord {
                item_id: request.item_id.clone(),
                ordering_name: request.ordering_name.clone(),
                logits: self.0,
                provider_tag: "constant".into(),
                latency_ms: None,
            })
        }
    }

    struct FailAfter(usize, std::sync::atomic::AtomicUsize);

    impl LogitProvider for FailAfter {
        fn tag(&self) -> &str {
            "fail-after"
        }

        fn fetch_logits(&self, request: &LogitRequest) -> Result<LogitRecord, ProviderError> {
            let n = self.1.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
            if n >= self.0 {
                return Err(ProviderError::Protocol("boom".into()));
            }
            Constant(lv([0.0; 4])).fetch_logits(request)
        }
    }

    fn lv(v: [f64; 4]) -> LogitVector {
        LogitVector::new(v).unwrap()
    }

    fn items(n: usize) -> Vec<McqItem> {
        (0..n)
            .map(|i| McqItem {
                item_id: format!("item{i:04}"),
                image_ref: String::new(),
                question_text: "q".into(),
                options: std::array::from_fn(|k| McqOption {
                    canonical_index: k as u8,
                    text: format!("t{k}"),
                    class_id: format!("c{k}"),
                }),
                correct_canonical_index: (i % 4) as u8,
                tier: Tier::Hard,
                variant: Variant::WithoutName,
                domain_tag: "d".into(),
            })
            .collect()
    }

    const ONE_HOT_CENTERED: [f64; 4] = [0.22536, -0.07512, -0.07512, -0.07512];

    #[test]
    fn uniform_provider_gives_zero_general_bias() {
        let b = estimate_general_bias(
            &Constant(lv([0.0; 4])),
            &builtin_templates(),
            32,
            IdentifierAlphabet::Alphabetic,
            0,
        )
        .unwrap();
        assert!(b.values().iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn constant_provider_general_bias() {
        let b = estimate_general_bias(
            &Constant(lv([1.0, 0.0, 0.0, 0.0])),
            &builtin_templates(),
            32,
            IdentifierAlphabet::Alphabetic,
            3,
        )
        .unwrap();
        for (a, e) in b.values().iter().zip(ONE_HOT_CENTERED) {
            assert_abs_diff_eq!(*a, e, epsilon = 1e-5);
        }
    }

    #[test]
    fn general_bias_failure_reports_progress() {
        let p = FailAfter(5, Default::default());
        let err =
            estimate_general_bias(&p, &builtin_templates(), 32, IdentifierAlphabet::Numeric, 0)
                .unwrap_err();
        match err {
            Error::Calibration {
                completed,
                requested,
                ..
            } => assert_eq!((completed, requested), (5, 32)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn contextual_sample_sizes() {
        assert_eq!(contextual_sample_size(10, 0.10), 1);
        assert_eq!(contextual_sample_size(1000, 0.10), 100);
        assert_eq!(contextual_sample_size(3, 0.10), 1);
        assert_eq!(contextual_sample_size(10_000, 0.10), 1000);
        assert_eq!(contextual_sample_size(7, 1.0), 7);
        let est = estimate_contextual_bias(
            &Constant(lv([0.0; 4])),
            &items(10),
            0.10,
            IdentifierAlphabet::Alphabetic,
            0,
        )
        .unwrap();
        assert_eq!(est.sampled_item_ids.len(), 1);
        assert!(est.bias.values().iter().all(|v| v.abs() < 1e-12));
        assert!(estimate_contextual_bias(
            &Constant(lv([0.0; 4])),
            &[],
            0.1,
            IdentifierAlphabet::Alphabetic,
            0
        )
        .is_err());
    }

    #[test]
    fn ensemble_examples() {
        let a = BiasVector::centered([0.15, 0.05, -0.05, -0.15]).unwrap();
        let b = BiasVector::centered([0.05, -0.05, 0.05, -0.05]).unwrap();
        let e = ensemble(&a, &b).unwrap();
        for (x, y) in e.values().iter().zip([0.10, 0.0, 0.0, -0.10]) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-12);
        }
        assert_eq!(ensemble(&a, &a).unwrap(), a);
        assert!(ensemble(&a, &a.neg())
            .unwrap()
            .values()
            .iter()
            .all(|v| *v == 0.0));
        let raw = BiasVector::raw([0.4, 0.3, 0.2, 0.1]).unwrap();
        assert!(ensemble(&raw, &a).is_err());
    }

    #[test]
    fn confidence_examples() {
        assert_eq!(confidence(&lv([2.0, 1.0, 1.0, 1.0])), 0.75);
        assert_eq!(confidence(&lv([3.0; 4])), 0.0);
        assert_eq!(confidence(&lv([3.0, 1.0, 1.0, 1.0])), 1.5);
    }

    #[test]
    fn adaptive_alpha_examples() {
        assert_eq!(adaptive_alpha(2.0, 1.0, 2.0), 0.5);
        assert_eq!(adaptive_alpha(3.5, 0.8, 3.5), 0.4);
        // 1 / (1 + e^-1.25)
        assert_abs_diff_eq!(adaptive_alpha(0.75, 1.0, 2.0), 0.77730, epsilon = 1e-5);
        let tiny = adaptive_alpha(1e3, 1.0, 2.0);
        assert!(tiny.is_finite() && (0.0..1e-300).contains(&tiny));
        assert_abs_diff_eq!(adaptive_alpha(-1e3, 1.0, 2.0), 1.0);
    }

    #[test]
    fn correction_examples() {
        let l = lv([2.0, 1.0, 1.0, 1.0]);
        assert_eq!(
            correct_logits(&l, &BiasVector::zero(), 1.0, 2.0).unwrap(),
            l
        );
        let b = BiasVector::centered([0.10, 0.0, 0.0, -0.10]).unwrap();
        let c = correct_logits(&l, &b, 1.0, 2.0).unwrap();
        for (x, y) in c.values().iter().zip([1.92227, 1.0, 1.0, 1.07773]) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-5);
        }
        let confident = lv([40.0, 0.0, 0.0, 0.0]);
        let c = correct_logits(
            &confident,
            &BiasVector::centered([1.0, -1.0, 0.5, -0.5]).unwrap(),
            1.0,
            2.0,
        )
        .unwrap();
        for (x, y) in c.values().iter().zip(confident.values()) {
            assert!((x - y).abs() < 1e-6);
        }
        let raw = BiasVector::raw([0.1, 0.0, 0.0, 0.0]).unwrap();
        assert!(correct_logits(&l, &raw, 1.0, 2.0).is_err());
    }

    #[test]
    fn calibrate_respects_invariants_and_is_reproducible() {
        let p = Constant(lv([1.0, 0.0, 0.0, 0.0]));
        let cfg = DebiasConfig::default();
        let a = calibrate(&p, &items(50), IdentifierAlphabet::Alphabetic, &cfg).unwrap();
        let b = calibrate(&p, &items(50), IdentifierAlphabet::Alphabetic, &cfg).unwrap();
        a.check_invariants().unwrap();
        assert_eq!(a, b);
        assert_eq!((a.n_used, a.m_used), (32, 5));
    }

    #[test]
    fn zero_bias_keeps_choices_and_holdout_excludes_sample() {
        let p = Constant(lv([0.0; 4]));
        let cfg = DebiasConfig {
            contextual_holdout: true,
            ..DebiasConfig::default()
        };
        let run = run_debiased_eval(&p, &items(40), &OrderingScheme::dcba(), &cfg).unwrap();
        assert_eq!(run.held_out.len(), 4);
        assert_eq!(run.outcome.records.len(), 36);
        for r in &run.outcome.records {
            assert_eq!(r.raw_choice, r.corrected_choice);
            assert!(!run.held_out.contains(&r.item_id));
        }
    }

    #[test]
    fn error_rate_gate() {
        let p = FailAfter(usize::MAX, Default::default());
        let ok = evaluate(&p, &items(10), &OrderingScheme::abcd(), None).unwrap();
        ok.check_error_rate().unwrap();
        let p = FailAfter(95, Default::default());
        let bad = evaluate(&p, &items(100), &OrderingScheme::abcd(), None).unwrap();
        assert_eq!(bad.failures.len(), 5);
        assert!(bad.check_error_rate().is_err());
        let p = FailAfter(199, Default::default());
        let edge = evaluate(&p, &items(200), &OrderingScheme::abcd(), None).unwrap();
        edge.check_error_rate().unwrap();
    }

    #[test]
    fn invalid_config_rejected() {
        for cfg in [
            DebiasConfig {
                alpha: 0.0,
                ..Default::default()
            },
            DebiasConfig {
                n_general: 0,
                ..Default::default()
            },
            DebiasConfig {
                contextual_fraction: 0.0,
                ..Default::default()
            },
            DebiasConfig {
                contextual_fraction: 1.5,
                ..Default::default()
            },
        ] {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    proptest! {
        #[test]
        fn adaptive_alpha_strictly_decreasing(c1 in -20.0..20.0f64, d in 1e-3..5.0f64) {
            prop_assert!(adaptive_alpha(c1, 1.0, 2.0) > adaptive_alpha(c1 + d, 1.0, 2.0));
        }

        #[test]
        fn correction_preserves_mean(
            l in prop::array::uniform4(-20.0..20.0f64),
            b in prop::array::uniform4(-1.0..1.0f64),
        ) {
            let bias = zero_center(&BiasVector::raw(b).unwrap());
            let logits = lv(l);
            let c = correct_logits(&logits, &bias, 1.0, 2.0).unwrap();
            prop_assert!((c.mean() - logits.mean()).abs() < 1e-12);
            let same = correct_logits(&logits, &BiasVector::zero(), 1.0, 2.0).unwrap();
            prop_assert_eq!(argmax4(same.values()), argmax4(logits.values()));
        }
    }
}
