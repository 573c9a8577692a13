//! Domain values shared by every stage of the pipeline.
//!
//! Logit, probability and bias vectors are always indexed by presentation
//! slot (0 = first option shown), never by canonical option index.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NUM_OPTIONS: usize = 4;

/// Normalization tolerance for probability vectors and centered bias vectors.
pub const PROB_TOLERANCE: f64 = 1e-9;

/// A presentation position in `0..4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct OptionSlot(u8);

impl OptionSlot {
    pub const ALL: [OptionSlot; NUM_OPTIONS] =
        [OptionSlot(0), OptionSlot(1), OptionSlot(2), OptionSlot(3)];

    pub fn new(index: usize) -> Result<Self> {
        if index < NUM_OPTIONS {
            Ok(OptionSlot(index as u8))
        } else {
            Err(Error::validation(format!(
                "option slot {index} out of range 0..{NUM_OPTIONS}"
            )))
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl TryFrom<u8> for OptionSlot {
    type Error = Error;

    fn try_from(value: u8) -> Result<Self> {
        OptionSlot::new(value as usize)
    }
}

impl From<OptionSlot> for u8 {
    fn from(slot: OptionSlot) -> u8 {
        slot.0
    }
}

impl fmt::Display for OptionSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn check_finite(values: &[f64; NUM_OPTIONS], what: &str) -> Result<()> {
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::validation(format!(
            "{what} contains non-finite entry {bad}"
        )));
    }
    Ok(())
}

/// Four finite option logits in slot order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct LogitVector([f64; NUM_OPTIONS]);

impl LogitVector {
    pub fn new(values: [f64; NUM_OPTIONS]) -> Result<Self> {
        check_finite(&values, "logit vector")?;
        Ok(LogitVector(values))
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        let arr: [f64; NUM_OPTIONS] = values.try_into().map_err(|_| {
            Error::validation(format!(
                "logit vector must have {NUM_OPTIONS} entries, got {}",
                values.len()
            ))
        })?;
        Self::new(arr)
    }

    pub fn values(&self) -> &[f64; NUM_OPTIONS] {
        &self.0
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / NUM_OPTIONS as f64
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl TryFrom<[f64; 4]> for LogitVector {
    type Error = Error;

    fn try_from(values: [f64; 4]) -> Result<Self> {
        LogitVector::new(values)
    }
}

impl From<LogitVector> for [f64; 4] {
    fn from(v: LogitVector) -> Self {
        v.0
    }
}

/// Four non-negative reals summing to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct ProbabilityVector([f64; NUM_OPTIONS]);

impl ProbabilityVector {
    pub fn new(values: [f64; NUM_OPTIONS]) -> Result<Self> {
        check_finite(&values, "probability vector")?;
        if values.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::validation(format!(
                "probability vector entries must lie in [0, 1]: {values:?}"
            )));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > PROB_TOLERANCE {
            return Err(Error::validation(format!(
                "probability vector sums to {sum}, expected 1"
            )));
        }
        Ok(ProbabilityVector(values))
    }

    /// Builds a distribution from per-slot counts. Fails when all counts are zero.
    pub fn from_counts(counts: &[u64; NUM_OPTIONS]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::validation("cannot normalize empty counts"));
        }
        let mut values = [0.0; NUM_OPTIONS];
        for (v, &c) in values.iter_mut().zip(counts) {
            *v = c as f64 / total as f64;
        }
        Ok(ProbabilityVector(values))
    }

    pub fn uniform() -> Self {
        ProbabilityVector([0.25; NUM_OPTIONS])
    }

    pub(crate) fn from_raw_unchecked(values: [f64; NUM_OPTIONS]) -> Self {
        ProbabilityVector(values)
    }

    pub fn values(&self) -> &[f64; NUM_OPTIONS] {
        &self.0
    }
}

impl TryFrom<[f64; 4]> for ProbabilityVector {
    type Error = Error;

    fn try_from(values: [f64; 4]) -> Result<Self> {
        ProbabilityVector::new(values)
    }
}

impl From<ProbabilityVector> for [f64; 4] {
    fn from(v: ProbabilityVector) -> Self {
        v.0
    }
}

/// Estimated option preference in slot space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BiasVectorRepr")]
pub struct BiasVector {
    values: [f64; NUM_OPTIONS],
    centered: bool,
}

#[derive(Deserialize)]
struct BiasVectorRepr {
    values: [f64; NUM_OPTIONS],
    centered: bool,
}

impl TryFrom<BiasVectorRepr> for BiasVector {
    type Error = Error;

    fn try_from(repr: BiasVectorRepr) -> Result<Self> {
        if repr.centered {
            BiasVector::centered(repr.values)
        } else {
            BiasVector::raw(repr.values)
        }
    }
}

impl BiasVector {
    /// An uncentered vector, e.g. an averaged softmax before zero-centering.
    pub fn raw(values: [f64; NUM_OPTIONS]) -> Result<Self> {
        check_finite(&values, "bias vector")?;
        Ok(BiasVector {
            values,
            centered: false,
        })
    }

    /// A vector claimed to be zero-centered; the claim is checked.
    pub fn centered(values: [f64; NUM_OPTIONS]) -> Result<Self> {
        check_finite(&values, "bias vector")?;
        let sum: f64 = values.iter().sum();
        if sum.abs() > PROB_TOLERANCE {
            return Err(Error::validation(format!(
                "bias vector marked centered but sums to {sum}"
            )));
        }
        Ok(BiasVector {
            values,
            centered: true,
        })
    }

    pub fn zero() -> Self {
        BiasVector {
            values: [0.0; NUM_OPTIONS],
            centered: true,
        }
    }

    pub fn values(&self) -> &[f64; NUM_OPTIONS] {
        &self.values
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub(crate) fn require_centered(&self) -> Result<()> {
        if self.centered {
            Ok(())
        } else {
            Err(Error::validation("bias vector must be zero-centered"))
        }
    }

    pub fn neg(&self) -> Self {
        BiasVector {
            values: self.values.map(|v| -v),
            centered: self.centered,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Easy,
    Medium,
    Hard,
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::Easy, Tier::Medium, Tier::Hard];

    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Easy => "easy",
            Tier::Medium => "medium",
            Tier::Hard => "hard",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Whether option texts carry the class name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    WithName,
    WithoutName,
}

impl Variant {
    pub const ALL: [Variant; 2] = [Variant::WithName, Variant::WithoutName];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::WithName => "with_name",
            Variant::WithoutName => "without_name",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct McqOption {
    pub canonical_index: u8,
    pub text: String,
    pub class_id: String,
}

/// One four-option question in canonical option order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct McqItem {
    pub item_id: String,
    pub image_ref: String,
    pub question_text: String,
    pub options: [McqOption; NUM_OPTIONS],
    pub correct_canonical_index: u8,
    pub tier: Tier,
    pub variant: Variant,
    pub domain_tag: String,
}

impl McqItem {
    pub fn validate(&self) -> Result<()> {
        if self.correct_canonical_index as usize >= NUM_OPTIONS {
            return Err(Error::validation(format!(
                "item {}: correct_canonical_index {} out of range",
                self.item_id, self.correct_canonical_index
            )));
        }
        for (i, opt) in self.options.iter().enumerate() {
            if opt.canonical_index as usize != i {
                return Err(Error::validation(format!(
                    "item {}: option at position {i} has canonical_index {}",
                    self.item_id, opt.canonical_index
                )));
            }
            if self.options[..i].iter().any(|o| o.text == opt.text) {
                return Err(Error::validation(format!(
                    "item {}: duplicate option text {:?}",
                    self.item_id, opt.text
                )));
            }
        }
        Ok(())
    }

    pub fn correct_option(&self) -> &McqOption {
        &self.options[self.correct_canonical_index as usize]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresentedOption {
    pub label: String,
    pub text: String,
    pub canonical_index: u8,
}

/// An item as shown to a model: options in slot order with their labels.
///
/// `correct_slot` is `None` for content-free calibration prompts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresentedItem {
    pub item_id: String,
    pub ordering_name: String,
    pub question_text: String,
    pub image_ref: String,
    pub options: [PresentedOption; NUM_OPTIONS],
    pub correct_slot: Option<OptionSlot>,
}

/// Per-item outcome of an evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub item_id: String,
    pub ordering_name: String,
    pub raw_logits: LogitVector,
    pub corrected_logits: LogitVector,
    pub raw_choice: OptionSlot,
    pub corrected_choice: OptionSlot,
    pub correct_slot: OptionSlot,
    pub tier: Tier,
    pub variant: Variant,
    pub domain_tag: String,
}

impl EvalRecord {
    pub fn choice(&self, use_corrected: bool) -> OptionSlot {
        if use_corrected {
            self.corrected_choice
        } else {
            self.raw_choice
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slot_bounds() {
        assert!(OptionSlot::new(3).is_ok());
        assert!(OptionSlot::new(4).is_err());
        assert!(serde_json::from_str::<OptionSlot>("7").is_err());
        assert_eq!(serde_json::from_str::<OptionSlot>("2").unwrap().index(), 2);
    }

    #[test]
    fn logit_vector_rejects_non_finite() {
        assert!(LogitVector::new([0.0, f64::NAN, 0.0, 0.0]).is_err());
        assert!(LogitVector::new([0.0, f64::INFINITY, 0.0, 0.0]).is_err());
        assert!(LogitVector::from_slice(&[1.0, 2.0, 3.0]).is_err());
        assert!(serde_json::from_str::<LogitVector>("[1,2,3]").is_err());
    }

    #[test]
    fn probability_vector_checks_normalization() {
        assert!(ProbabilityVector::new([0.25; 4]).is_ok());
        assert!(ProbabilityVector::new([0.5, 0.5, 0.5, 0.0]).is_err());
        assert!(ProbabilityVector::new([1.5, -0.5, 0.0, 0.0]).is_err());
        assert!(ProbabilityVector::from_counts(&[0; 4]).is_err());
        let p = ProbabilityVector::from_counts(&[5, 3, 1, 1]).unwrap();
        assert_eq!(p.values(), &[0.5, 0.3, 0.1, 0.1]);
    }

    #[test]
    fn centered_claim_is_checked() {
        assert!(BiasVector::centered([0.1, 0.0, 0.0, -0.1]).is_ok());
        assert!(BiasVector::centered([0.1, 0.0, 0.0, 0.0]).is_err());
        let json = r#"{"values":[0.1,0.0,0.0,0.0],"centered":true}"#;
        assert!(serde_json::from_str::<BiasVector>(json).is_err());
    }

    #[test]
    fn tier_and_variant_wire_names() {
        assert_eq!(serde_json::to_string(&Tier::Hard).unwrap(), "\"hard\"");
        assert_eq!(
            serde_json::to_string(&Variant::WithoutName).unwrap(),
            "\"without_name\""
        );
    }
}
