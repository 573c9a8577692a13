//! Synthetic answering model with controllable competence, token bias and
//! position bias.
//!
//! The logit at slot `s` is
//!
//! ```text
//! competence·[s is correct] + token_bias[label index at s] + position_bias[s] + ε_s
//! ```
//!
//! where `ε_s ~ N(0, noise_sigma²)` comes from a generator keyed by
//! `(seed, item_id, ordering_name, s)`, so a logit never depends on how many
//! other logits were drawn before it.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::argmax4;
use crate::ordering::{apply_ordering, IdentifierAlphabet, OrderingScheme};
use crate::seeding::rng_for;
use crate::types::{LogitVector, McqItem, OptionSlot, PresentedItem, NUM_OPTIONS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticModelParams {
    pub competence: f64,
    /// Keyed by identifier label index (A/1 → 0, …, D/4 → 3).
    pub token_bias: [f64; NUM_OPTIONS],
    /// Keyed by presentation slot.
    pub position_bias: [f64; NUM_OPTIONS],
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SyntheticModelParams {
    fn default() -> Self {
        SyntheticModelParams {
            competence: 0.0,
            token_bias: [0.0; NUM_OPTIONS],
            position_bias: [0.0; NUM_OPTIONS],
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

impl SyntheticModelParams {
    pub fn validate(&self) -> Result<()> {
        let all = std::iter::once(self.competence)
            .chain(self.token_bias)
            .chain(self.position_bias)
            .chain(std::iter::once(self.noise_sigma));
        if all.into_iter().any(|x| !x.is_finite()) {
            return Err(Error::validation(
                "synthetic model parameters must be finite",
            ));
        }
        if self.competence < 0.0 {
            return Err(Error::validation("competence must be non-negative"));
        }
        if self.noise_sigma < 0.0 {
            return Err(Error::validation("noise_sigma must be non-negative"));
        }
        Ok(())
    }
}

fn noise(params: &SyntheticModelParams, item_id: &str, ordering_name: &str, slot: usize) -> f64 {
    if params.noise_sigma == 0.0 {
        return 0.0;
    }
    let mut rng = rng_for(
        params.seed,
        &[
            b"synth-noise",
            item_id.as_bytes(),
            ordering_name.as_bytes(),
            &[slot as u8],
        ],
    );
    let z: f64 = StandardNormal.sample(&mut rng);
    params.noise_sigma * z
}

/// Logits for a presented item. Labels that are not part of a known
/// alphabet contribute no token bias.
pub fn synth_logits(presented: &PresentedItem, params: &SyntheticModelParams) -> LogitVector {
    let values = std::array::from_fn(|s| {
        let label = &presented.options[s].label;
        let token = IdentifierAlphabet::ALL
            .iter()
            .find_map(|a| a.index_of(label))
            .map_or(0.0, |i| params.token_bias[i]);
        let competence = match presented.correct_slot {
            Some(c) if c.index() == s => params.competence,
            _ => 0.0,
        };
        competence
            + token
            + params.position_bias[s]
            + noise(params, &presented.item_id, &presented.ordering_name, s)
    });
    LogitVector::new(values).expect("finite parameters give finite logits")
}

/// Same as [`synth_logits`] without materializing option texts.
pub fn synth_logits_for(
    params: &SyntheticModelParams,
    item_id: &str,
    ordering: &OrderingScheme,
    correct_slot: Option<OptionSlot>,
) -> LogitVector {
    let values = std::array::from_fn(|s| {
        let slot = OptionSlot::ALL[s];
        let label_index = ordering
            .alphabet
            .index_of(ordering.label_at(slot))
            .expect("ordering labels come from its alphabet");
        let competence = if correct_slot == Some(slot) {
            params.competence
        } else {
            0.0
        };
        competence
            + params.token_bias[label_index]
            + params.position_bias[s]
            + noise(params, item_id, &ordering.name, s)
    });
    LogitVector::new(values).expect("finite parameters give finite logits")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRateEstimate {
    pub rates: [f64; NUM_OPTIONS],
    /// Binomial standard error per slot; zero when the model is noiseless.
    pub standard_errors: [f64; NUM_OPTIONS],
    pub n: usize,
}

/// Argmax frequency per slot over `items` under `ordering`, ties toward the
/// lowest slot. Exact for zero noise, a seeded Monte-Carlo estimate otherwise.
pub fn expected_selection_rates(
    params: &SyntheticModelParams,
    items: &[McqItem],
    ordering: &OrderingScheme,
) -> Result<SelectionRateEstimate> {
    if items.is_empty() {
        return Err(Error::validation(
            "selection rates need a non-empty dataset",
        ));
    }
    let mut counts = [0usize; NUM_OPTIONS];
    for item in items {
        let presented = apply_ordering(item, ordering);
        let logits = synth_logits(&presented, params);
        counts[argmax4(logits.values()).index()] += 1;
    }
    let n = items.len();
    let rates = counts.map(|c| c as f64 / n as f64);
    let standard_errors = if params.noise_sigma == 0.0 {
        [0.0; NUM_OPTIONS]
    } else {
        rates.map(|p| (p * (1.0 - p) / n as f64).sqrt())
    };
    Ok(SelectionRateEstimate {
        rates,
        standard_errors,
        n,
    })
}
