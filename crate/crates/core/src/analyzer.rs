//! Accuracy, selection distributions, bias score, reorder consistency and
//! report tables.
//!
//! Aggregation works on integer tallies that merge associatively; rates are
//! only formed at the end, so partitioned and sequential runs agree exactly.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl::{to_jsonl_bytes, write_bytes};
use crate::ordering::OrderingScheme;
use crate::types::{EvalRecord, ProbabilityVector, Tier, Variant, NUM_OPTIONS};

/// Raw accuracy at or above this is treated as saturated.
pub const SATURATION_THRESHOLD: f64 = 0.98;

/// Exact counts over a set of records.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub n: u64,
    pub correct_raw: u64,
    pub correct_corrected: u64,
    pub chosen_raw: [u64; NUM_OPTIONS],
    pub chosen_corrected: [u64; NUM_OPTIONS],
    pub truth: [u64; NUM_OPTIONS],
}

impl Tally {
    pub fn add(&mut self, r: &EvalRecord) {
        self.n += 1;
        self.correct_raw += u64::from(r.raw_choice == r.correct_slot);
        self.correct_corrected += u64::from(r.corrected_choice == r.correct_slot);
        self.chosen_raw[r.raw_choice.index()] += 1;
        self.chosen_corrected[r.corrected_choice.index()] += 1;
        self.truth[r.correct_slot.index()] += 1;
    }

    pub fn merge(mut self, other: Tally) -> Tally {
        self.n += other.n;
        self.correct_raw += other.correct_raw;
        self.correct_corrected += other.correct_corrected;
        for i in 0..NUM_OPTIONS {
            self.chosen_raw[i] += other.chosen_raw[i];
            self.chosen_corrected[i] += other.chosen_corrected[i];
            self.truth[i] += other.truth[i];
        }
        self
    }

    pub fn of(records: &[EvalRecord]) -> Tally {
        records
            .par_iter()
            .fold(Tally::default, |mut t, r| {
                t.add(r);
                t
            })
            .reduce(Tally::default, Tally::merge)
    }

    fn require_nonempty(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::validation("no evaluation records"));
        }
        Ok(())
    }

    pub fn accuracy(&self, use_corrected: bool) -> Result<f64> {
        self.require_nonempty()?;
        let hits = if use_corrected {
            self.correct_corrected
        } else {
            self.correct_raw
        };
        Ok(hits as f64 / self.n as f64)
    }

    pub fn selection(&self, use_corrected: bool) -> Result<ProbabilityVector> {
        self.require_nonempty()?;
        ProbabilityVector::from_counts(if use_corrected {
            &self.chosen_corrected
        } else {
            &self.chosen_raw
        })
    }

    pub fn truth(&self) -> Result<ProbabilityVector> {
        self.require_nonempty()?;
        ProbabilityVector::from_counts(&self.truth)
    }

    /// `raw ≥ 98%`, decided on counts.
    pub fn is_saturated(&self) -> bool {
        self.n > 0 && self.correct_raw * 50 >= self.n * 49
    }
}

/// Fraction of records whose chosen slot is the correct slot.
pub fn accuracy(records: &[EvalRecord], use_corrected: bool) -> Result<f64> {
    Tally::of(records).accuracy(use_corrected)
}

/// Choice frequencies per presentation slot and per displayed identifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionDistribution {
    pub slot: ProbabilityVector,
    pub label: ProbabilityVector,
    /// Identifier names for the label axis; `A/1` style when alphabets are mixed.
    pub labels: [String; NUM_OPTIONS],
}

pub fn selection_distribution(
    records: &[EvalRecord],
    use_corrected: bool,
) -> Result<SelectionDistribution> {
    if records.is_empty() {
        return Err(Error::validation("no evaluation records"));
    }
    let mut schemes: HashMap<&str, OrderingScheme> = HashMap::new();
    let mut slot_counts = [0u64; NUM_OPTIONS];
    let mut label_counts = [0u64; NUM_OPTIONS];
    let mut alphabets = BTreeSet::new();
    for r in records {
        let scheme = match schemes.get(r.ordering_name.as_str()) {
            Some(s) => s,
            None => {
                let s = OrderingScheme::parse(&r.ordering_name)?;
                schemes.entry(r.ordering_name.as_str()).or_insert(s)
            }
        };
        let slot = r.choice(use_corrected);
        let label = scheme.label_at(slot);
        let label_index = scheme
            .alphabet
            .index_of(label)
            .expect("label belongs to the ordering's alphabet");
        slot_counts[slot.index()] += 1;
        label_counts[label_index] += 1;
        alphabets.insert(scheme.alphabet);
    }
    let labels = std::array::from_fn(|i| {
        alphabets
            .iter()
            .map(|a| a.label(i))
            .collect::<Vec<_>>()
            .join("/")
    });
    Ok(SelectionDistribution {
        slot: ProbabilityVector::from_counts(&slot_counts)?,
        label: ProbabilityVector::from_counts(&label_counts)?,
        labels,
    })
}

/// Total-variation distance `0.5 · Σ|pred − truth|`.
pub fn bias_score(pred: &[f64; NUM_OPTIONS], truth: &[f64; NUM_OPTIONS]) -> Result<f64> {
    let p = ProbabilityVector::new(*pred)?;
    let t = ProbabilityVector::new(*truth)?;
    Ok(total_variation(&p, &t))
}

pub fn total_variation(p: &ProbabilityVector, q: &ProbabilityVector) -> f64 {
    let d: f64 = p
        .values()
        .iter()
        .zip(q.values())
        .map(|(a, b)| (a - b).abs())
        .sum();
    (0.5 * d).clamp(0.0, 1.0)
}

fn chosen_content(records: &[EvalRecord], use_corrected: bool) -> Result<BTreeMap<&str, usize>> {
    let mut schemes: HashMap<&str, OrderingScheme> = HashMap::new();
    let mut out = BTreeMap::new();
    for r in records {
        if !schemes.contains_key(r.ordering_name.as_str()) {
            schemes.insert(&r.ordering_name, OrderingScheme::parse(&r.ordering_name)?);
        }
        let canonical = schemes[r.ordering_name.as_str()].canonical_at(r.choice(use_corrected));
        if out.insert(r.item_id.as_str(), canonical).is_some() {
            return Err(Error::validation(format!(
                "item `{}` appears more than once in one record set",
                r.item_id
            )));
        }
    }
    Ok(out)
}

/// Fraction of items whose chosen canonical option is the same in both sets.
pub fn reorder_consistency(
    records_a: &[EvalRecord],
    records_b: &[EvalRecord],
    use_corrected: bool,
) -> Result<f64> {
    let a = chosen_content(records_a, use_corrected)?;
    let b = chosen_content(records_b, use_corrected)?;
    if a.is_empty() {
        return Err(Error::validation("no evaluation records"));
    }
    let only_a: Vec<&str> = a.keys().filter(|k| !b.contains_key(*k)).copied().collect();
    let only_b: Vec<&str> = b.keys().filter(|k| !a.contains_key(*k)).copied().collect();
    if !only_a.is_empty() || !only_b.is_empty() {
        let show = |v: &[&str]| v.iter().take(10).copied().collect::<Vec<_>>().join(", ");
        return Err(Error::validation(format!(
            "record sets cover different items: {} only in first [{}], {} only in second [{}]",
            only_a.len(),
            show(&only_a),
            only_b.len(),
            show(&only_b)
        )));
    }
    let same = a.iter().filter(|(k, v)| b[*k] == **v).count();
    Ok(same as f64 / a.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub dataset_tag: String,
    pub tier: Tier,
    pub variant: Variant,
    pub ordering: String,
    pub n_items: u64,
    pub accuracy_raw: f64,
    pub accuracy_corrected: f64,
    /// `corrected − raw` in percentage points.
    pub gain_pp: f64,
    pub saturated: bool,
    pub selection_rates_raw: ProbabilityVector,
    pub selection_rates_corrected: ProbabilityVector,
    pub label_rates_raw: ProbabilityVector,
    pub label_rates_corrected: ProbabilityVector,
    pub labels: [String; NUM_OPTIONS],
    pub true_rates: ProbabilityVector,
    pub bias_score_raw: f64,
    pub bias_score_corrected: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub consistency_with: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub consistency_raw: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub consistency_corrected: Option<f64>,
}

type GroupKey = (String, Tier, Variant, String);

/// One row per (dataset tag, tier, variant, ordering). Each ordering is paired
/// with the identity ordering of its alphabet for consistency; the identity
/// ordering itself is paired with the first other ordering of that alphabet.
pub fn aggregate_report(records: &[EvalRecord]) -> Result<Vec<ReportRow>> {
    let mut groups: BTreeMap<GroupKey, Vec<EvalRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((
                r.domain_tag.clone(),
                r.tier,
                r.variant,
                r.ordering_name.clone(),
            ))
            .or_default()
            .push(r.clone());
    }
    let mut schemes = BTreeMap::new();
    for (_, _, _, name) in groups.keys() {
        if !schemes.contains_key(name) {
            schemes.insert(name.clone(), OrderingScheme::parse(name)?);
        }
    }

    let mut rows = Vec::with_capacity(groups.len());
    for ((tag, tier, variant, ordering), recs) in &groups {
        let tally = Tally::of(recs);
        let raw = tally.accuracy(false)?;
        let corrected = tally.accuracy(true)?;
        let truth = tally.truth()?;
        let sel_raw = tally.selection(false)?;
        let sel_corr = tally.selection(true)?;
        let dist_raw = selection_distribution(recs, false)?;
        let dist_corr = selection_distribution(recs, true)?;

        let scheme = &schemes[ordering];
        let partner = schemes
            .values()
            .filter(|s| s.alphabet == scheme.alphabet && s.name != scheme.name)
            .filter(|s| groups.contains_key(&(tag.clone(), *tier, *variant, s.name.clone())))
            .find(|s| scheme.is_identity() || s.is_identity())
            .map(|s| s.name.clone());
        let (c_raw, c_corr) = match &partner {
            Some(p) => {
                let other = &groups[&(tag.clone(), *tier, *variant, p.clone())];
                (
                    Some(reorder_consistency(recs, other, false)?),
                    Some(reorder_consistency(recs, other, true)?),
                )
            }
            None => (None, None),
        };

        rows.push(ReportRow {
            dataset_tag: tag.clone(),
            tier: *tier,
            variant: *variant,
            ordering: ordering.clone(),
            n_items: tally.n,
            accuracy_raw: raw,
            accuracy_corrected: corrected,
            gain_pp: (corrected - raw) * 100.0,
            saturated: tally.is_saturated(),
            selection_rates_raw: sel_raw,
            selection_rates_corrected: sel_corr,
            label_rates_raw: dist_raw.label,
            label_rates_corrected: dist_corr.label,
            labels: dist_raw.labels,
            true_rates: truth,
            bias_score_raw: total_variation(&dist_raw.label, &truth),
            bias_score_corrected: total_variation(&dist_corr.label, &truth),
            consistency_with: partner,
            consistency_raw: c_raw,
            consistency_corrected: c_corr,
        });
    }
    Ok(rows)
}

/// Accuracy as a percentage with two decimals, e.g. `76.70`.
pub fn format_pct(x: f64) -> String {
    format!("{:.2}", x * 100.0)
}

/// Signed gain in percentage points, e.g. `+21.33` or `-1.10`.
pub fn format_gain(corrected: f64, raw: f64) -> String {
    let gain = (corrected - raw) * 100.0;
    let s = format!("{gain:+.2}");
    if s == "-0.00" {
        "+0.00".to_string()
    } else {
        s
    }
}

pub fn is_saturated(raw: f64) -> bool {
    raw >= SATURATION_THRESHOLD - 1e-12
}

/// `66.33 (+21.33)`, or `--` when the raw accuracy is saturated.
pub fn mitigation_cell(corrected: f64, raw: f64) -> String {
    if is_saturated(raw) {
        "--".to_string()
    } else {
        format!(
            "{} ({})",
            format_pct(corrected),
            format_gain(corrected, raw)
        )
    }
}

/// `76.70 (72.10)`: a primary-ordering value with its paired ordering in parentheses.
pub fn paired_cell(primary: f64, paired: f64) -> String {
    format!("{} ({})", format_pct(primary), format_pct(paired))
}

fn render_table(header: &[&str], body: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: Vec<&str>| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(header.to_vec());
    line(
        widths
            .iter()
            .map(|w| "-".repeat(*w))
            .collect::<Vec<_>>()
            .iter()
            .map(String::as_str)
            .collect(),
    );
    for row in body {
        line(row.iter().map(String::as_str).collect());
    }
    out
}

fn opt_pct(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), format_pct)
}

/// Column-aligned text rendering: one line per row, then paired-ordering
/// accuracy cells for every identity/reversed pair present.
pub fn render_text(rows: &[ReportRow]) -> String {
    let header = [
        "dataset",
        "tier",
        "variant",
        "ordering",
        "n",
        "raw",
        "mitigated",
        "bias_raw",
        "bias_corr",
        "consist_raw",
        "consist_corr",
        "pair",
    ];
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.dataset_tag.clone(),
                r.tier.to_string(),
                r.variant.to_string(),
                r.ordering.clone(),
                r.n_items.to_string(),
                format_pct(r.accuracy_raw),
                if r.saturated {
                    "--".to_string()
                } else {
                    mitigation_cell(r.accuracy_corrected, r.accuracy_raw)
                },
                format!("{:.4}", r.bias_score_raw),
                format!("{:.4}", r.bias_score_corrected),
                opt_pct(r.consistency_raw),
                opt_pct(r.consistency_corrected),
                r.consistency_with.clone().unwrap_or_else(|| "-".into()),
            ]
        })
        .collect();
    let mut out = render_table(&header, &body);

    let index: BTreeMap<(&str, Tier, Variant, &str), &ReportRow> = rows
        .iter()
        .map(|r| {
            (
                (
                    r.dataset_tag.as_str(),
                    r.tier,
                    r.variant,
                    r.ordering.as_str(),
                ),
                r,
            )
        })
        .collect();
    let mut paired = Vec::new();
    for r in rows {
        let Ok(scheme) = OrderingScheme::parse(&r.ordering) else {
            continue;
        };
        if !scheme.is_identity() {
            continue;
        }
        let rev = OrderingScheme::reversed(scheme.alphabet);
        if let Some(o) = index.get(&(r.dataset_tag.as_str(), r.tier, r.variant, rev.name.as_str()))
        {
            paired.push(vec![
                r.dataset_tag.clone(),
                r.tier.to_string(),
                r.variant.to_string(),
                format!("{} ({})", r.ordering, o.ordering),
                paired_cell(r.accuracy_raw, o.accuracy_raw),
                paired_cell(r.accuracy_corrected, o.accuracy_corrected),
            ]);
        }
    }
    if !paired.is_empty() {
        out.push('\n');
        out.push_str(&render_table(
            &[
                "dataset",
                "tier",
                "variant",
                "orderings",
                "raw",
                "corrected",
            ],
            &paired,
        ));
    }
    out
}

/// `group,axis,index,rate` rows for the slot and label axes of the raw,
/// corrected and true distributions of every report row.
pub fn distributions_csv(rows: &[ReportRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Internal(format!("csv encoding: {e}"));
    w.write_record(["group", "axis", "index", "rate"])
        .map_err(csv_err)?;
    for r in rows {
        let base = format!("{}/{}/{}/{}", r.dataset_tag, r.tier, r.variant, r.ordering);
        let sets = [
            ("raw", &r.selection_rates_raw, &r.label_rates_raw),
            (
                "corrected",
                &r.selection_rates_corrected,
                &r.label_rates_corrected,
            ),
            ("true", &r.true_rates, &r.true_rates),
        ];
        for (kind, slot, label) in sets {
            let group = format!("{base}/{kind}");
            for (i, rate) in slot.values().iter().enumerate() {
                w.write_record([group.as_str(), "slot", &i.to_string(), &rate.to_string()])
                    .map_err(csv_err)?;
            }
            for (i, rate) in label.values().iter().enumerate() {
                w.write_record([group.as_str(), "label", &r.labels[i], &rate.to_string()])
                    .map_err(csv_err)?;
            }
        }
    }
    w.into_inner()
        .map_err(|e| Error::Internal(format!("csv encoding: {e}")))
}

/// Writes `report.jsonl`, `report.txt` and `distributions.csv` into `out_dir`.
pub fn write_report(rows: &[ReportRow], out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let outputs = [
        ("report.jsonl", to_jsonl_bytes(rows)?),
        ("report.txt", render_text(rows).into_bytes()),
        ("distributions.csv", distributions_csv(rows)?),
    ];
    let mut paths = Vec::new();
    for (name, bytes) in outputs {
        let path = out_dir.join(name);
        write_bytes(&path, &bytes)?;
        paths.push(path);
    }
    Ok(paths)
}
