//! Option orderings and identifier alphabets.
//!
//! An ordering is named by a permutation literal: the character at position
//! `s` is the identifier of the canonical option shown in slot `s`. Labels are
//! always displayed in reading order, so slot `s` carries label `s` of the
//! alphabet regardless of which content sits there.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{McqItem, OptionSlot, PresentedItem, PresentedOption, NUM_OPTIONS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IdentifierAlphabet {
    Alphabetic,
    Numeric,
}

impl IdentifierAlphabet {
    pub const ALL: [IdentifierAlphabet; 2] =
        [IdentifierAlphabet::Alphabetic, IdentifierAlphabet::Numeric];

    pub fn labels(self) -> [&'static str; NUM_OPTIONS] {
        match self {
            IdentifierAlphabet::Alphabetic => ["A", "B", "C", "D"],
            IdentifierAlphabet::Numeric => ["1", "2", "3", "4"],
        }
    }

    pub fn label(self, index: usize) -> &'static str {
        self.labels()[index]
    }

    pub fn index_of(self, label: &str) -> Option<usize> {
        self.labels().iter().position(|&l| l == label)
    }

    fn of_char(c: char) -> Option<(IdentifierAlphabet, usize)> {
        match c {
            'A'..='D' => Some((IdentifierAlphabet::Alphabetic, c as usize - 'A' as usize)),
            '1'..='4' => Some((IdentifierAlphabet::Numeric, c as usize - '1' as usize)),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            IdentifierAlphabet::Alphabetic => "alphabetic",
            IdentifierAlphabet::Numeric => "numeric",
        }
    }
}

impl fmt::Display for IdentifierAlphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A bijection from canonical option index to presentation slot, plus the
/// identifier alphabet used for labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OrderingScheme {
    pub name: String,
    permutation: [u8; NUM_OPTIONS],
    pub alphabet: IdentifierAlphabet,
}

impl OrderingScheme {
    pub fn abcd() -> Self {
        Self::identity(IdentifierAlphabet::Alphabetic)
    }

    pub fn dcba() -> Self {
        Self::reversed(IdentifierAlphabet::Alphabetic)
    }

    pub fn numeric_1234() -> Self {
        Self::identity(IdentifierAlphabet::Numeric)
    }

    pub fn numeric_4321() -> Self {
        Self::reversed(IdentifierAlphabet::Numeric)
    }

    pub fn builtin() -> [OrderingScheme; 4] {
        [
            Self::abcd(),
            Self::dcba(),
            Self::numeric_1234(),
            Self::numeric_4321(),
        ]
    }

    pub fn identity(alphabet: IdentifierAlphabet) -> Self {
        Self::from_permutation([0, 1, 2, 3], alphabet).expect("identity is a bijection")
    }

    pub fn reversed(alphabet: IdentifierAlphabet) -> Self {
        Self::from_permutation([3, 2, 1, 0], alphabet).expect("reversal is a bijection")
    }

    /// `permutation[i]` is the slot that shows canonical option `i`.
    pub fn from_permutation(
        permutation: [u8; NUM_OPTIONS],
        alphabet: IdentifierAlphabet,
    ) -> Result<Self> {
        let mut seen = [false; NUM_OPTIONS];
        for &slot in &permutation {
            let slot = slot as usize;
            if slot >= NUM_OPTIONS || seen[slot] {
                return Err(Error::validation(format!(
                    "ordering permutation {permutation:?} is not a bijection on 0..{NUM_OPTIONS}"
                )));
            }
            seen[slot] = true;
        }
        let mut name = String::with_capacity(NUM_OPTIONS);
        let mut shown = [0u8; NUM_OPTIONS];
        for (canonical, &slot) in permutation.iter().enumerate() {
            shown[slot as usize] = canonical as u8;
        }
        for canonical in shown {
            name.push_str(alphabet.label(canonical as usize));
        }
        Ok(OrderingScheme {
            name,
            permutation,
            alphabet,
        })
    }

    /// Parses a permutation literal such as `ABCD`, `DCBA`, `1234`, `4321` or `BADC`.
    pub fn parse(literal: &str) -> Result<Self> {
        let literal = literal.trim();
        let chars: Vec<char> = literal.chars().collect();
        if chars.len() != NUM_OPTIONS {
            return Err(Error::validation(format!(
                "ordering literal {literal:?} must have {NUM_OPTIONS} identifiers"
            )));
        }
        let mut alphabet = None;
        let mut permutation = [u8::MAX; NUM_OPTIONS];
        for (slot, c) in chars.into_iter().enumerate() {
            let (alpha, canonical) = IdentifierAlphabet::of_char(c).ok_or_else(|| {
                Error::validation(format!(
                    "ordering literal {literal:?}: unknown identifier {c:?}"
                ))
            })?;
            if *alphabet.get_or_insert(alpha) != alpha {
                return Err(Error::validation(format!(
                    "ordering literal {literal:?} mixes letters and digits"
                )));
            }
            if permutation[canonical] != u8::MAX {
                return Err(Error::validation(format!(
                    "ordering literal {literal:?} repeats identifier {c:?}"
                )));
            }
            permutation[canonical] = slot as u8;
        }
        Self::from_permutation(permutation, alphabet.expect("four identifiers parsed"))
    }

    /// Parses a comma-separated list of ordering literals.
    pub fn parse_list(list: &str) -> Result<Vec<Self>> {
        let schemes = list
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(Self::parse)
            .collect::<Result<Vec<_>>>()?;
        if schemes.is_empty() {
            return Err(Error::validation("no orderings given"));
        }
        Ok(schemes)
    }

    pub fn slot_of(&self, canonical_index: usize) -> OptionSlot {
        OptionSlot::ALL[self.permutation[canonical_index] as usize]
    }

    pub fn canonical_at(&self, slot: OptionSlot) -> usize {
        self.permutation
            .iter()
            .position(|&s| s as usize == slot.index())
            .expect("permutation is a bijection")
    }

    pub fn permutation(&self) -> [u8; NUM_OPTIONS] {
        self.permutation
    }

    pub fn is_identity(&self) -> bool {
        self.permutation == [0, 1, 2, 3]
    }

    /// Label shown at `slot`.
    pub fn label_at(&self, slot: OptionSlot) -> &'static str {
        self.alphabet.label(slot.index())
    }
}

impl fmt::Display for OrderingScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Lays out `item`'s options in presentation order under `scheme`.
pub fn apply_ordering(item: &McqItem, scheme: &OrderingScheme) -> PresentedItem {
    let options = std::array::from_fn(|slot| {
        let slot = OptionSlot::ALL[slot];
        let canonical = scheme.canonical_at(slot);
        PresentedOption {
            label: scheme.label_at(slot).to_string(),
            text: item.options[canonical].text.clone(),
            canonical_index: canonical as u8,
        }
    });
    PresentedItem {
        item_id: item.item_id.clone(),
        ordering_name: scheme.name.clone(),
        question_text: item.question_text.clone(),
        image_ref: item.image_ref.clone(),
        options,
        correct_slot: Some(scheme.slot_of(item.correct_canonical_index as usize)),
    }
}
