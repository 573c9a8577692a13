use crate::error::{Error, Result};
use crate::types::{BiasVector, LogitVector, OptionSlot, ProbabilityVector, NUM_OPTIONS};

/// Max-subtracted softmax over four logits.
pub fn softmax4(logits: &LogitVector) -> ProbabilityVector {
    let max = logits.max();
    let exps = logits.values().map(|v| (v - max).exp());
    let total: f64 = exps.iter().sum();
    ProbabilityVector::from_raw_unchecked(exps.map(|e| e / total))
}

/// Subtracts the mean from every entry and marks the result centered.
pub fn zero_center(v: &BiasVector) -> BiasVector {
    let values = v.values();
    let mean = values.iter().sum::<f64>() / NUM_OPTIONS as f64;
    let mut out = values.map(|x| x - mean);
    // Fold the rounding residue into the largest-magnitude entry so the
    // result sums to zero as tightly as f64 allows.
    let residue: f64 = out.iter().sum();
    if residue != 0.0 {
        let idx = (0..NUM_OPTIONS)
            .max_by(|&a, &b| out[a].abs().total_cmp(&out[b].abs()))
            .unwrap_or(0);
        out[idx] -= residue;
    }
    BiasVector::centered(out).expect("mean-subtracted finite vector is centered")
}

/// Cosine similarity clamped to `[-1, 1]`.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::validation(format!(
            "cosine similarity length mismatch: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    if u.is_empty() {
        return Err(Error::validation("cosine similarity of empty vectors"));
    }
    if u.iter().chain(v).any(|x| !x.is_finite()) {
        return Err(Error::validation("cosine similarity of non-finite vector"));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|b| b * b).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::validation("cosine similarity of zero-norm vector"));
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

/// Index of the largest entry; ties go to the lowest slot.
pub fn argmax4(values: &[f64; NUM_OPTIONS]) -> OptionSlot {
    let mut best = 0;
    for i in 1..NUM_OPTIONS {
        if values[i] > values[best] {
            best = i;
        }
    }
    OptionSlot::ALL[best]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn lv(v: [f64; 4]) -> LogitVector {
        LogitVector::new(v).unwrap()
    }

    #[test]
    fn softmax_uniform() {
        assert_eq!(softmax4(&lv([0.0; 4])).values(), &[0.25; 4]);
    }

    #[test]
    fn softmax_one_hot_logit() {
        // e / (e + 3) and 1 / (e + 3)
        let p = softmax4(&lv([2.0, 1.0, 1.0, 1.0]));
        let expected = [0.47536, 0.17488, 0.17488, 0.17488];
        for (a, b) in p.values().iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-5);
        }
    }

    #[test]
    fn softmax_large_inputs_do_not_overflow() {
        let p = softmax4(&lv([1000.0; 4]));
        assert_eq!(p.values(), &[0.25; 4]);
        let p = softmax4(&lv([1e4, -1e4, 0.0, 1e4]));
        assert_abs_diff_eq!(p.values()[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn zero_center_examples() {
        let c = zero_center(&BiasVector::raw([0.4, 0.3, 0.2, 0.1]).unwrap());
        for (a, b) in c.values().iter().zip([0.15, 0.05, -0.05, -0.15]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        assert!(c.is_centered());
        let u = zero_center(&BiasVector::raw([0.25; 4]).unwrap());
        assert_eq!(u.values(), &[0.0; 4]);
        let already = BiasVector::raw([0.1, 0.0, 0.0, -0.1]).unwrap();
        assert_eq!(zero_center(&already).values(), already.values());
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn cosine_examples() {
        assert_abs_diff_eq!(cosine_similarity(&[3.0, 4.0], &[3.0, 4.0]).unwrap(), 1.0);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(
            cosine_similarity(&[1.0, 0.0], &[1.0, 1.0]).unwrap(),
            0.70711,
            epsilon = 1e-5
        );
        assert!(cosine_similarity(&[0.0, 0.0], &[1.0, 1.0]).is_err());
        assert!(cosine_similarity(&[1.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn argmax_prefers_lowest_slot_on_ties() {
        assert_eq!(argmax4(&[0.0; 4]).index(), 0);
        assert_eq!(argmax4(&[0.0, 2.0, 2.0, 1.0]).index(), 1);
    }

    fn finite() -> impl Strategy<Value = f64> {
        -1e4..1e4f64
    }

    proptest! {
        #[test]
        fn softmax_normalized_and_shift_invariant(
            v in prop::array::uniform4(-50.0..50.0f64),
            shift in -100.0..100.0f64,
        ) {
            let p = softmax4(&lv(v));
            prop_assert!((p.values().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let q = softmax4(&lv(v.map(|x| x + shift)));
            for (a, b) in p.values().iter().zip(q.values()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn zero_center_idempotent(v in prop::array::uniform4(finite())) {
            let once = zero_center(&BiasVector::raw(v).unwrap());
            let twice = zero_center(&once);
            prop_assert!(once.values().iter().sum::<f64>().abs() < 1e-9);
            for (a, b) in once.values().iter().zip(twice.values()) {
                prop_assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()));
            }
        }

        #[test]
        fn cosine_symmetric_and_scale_free(
            u in prop::collection::vec(-10.0..10.0f64, 5),
            v in prop::collection::vec(-10.0..10.0f64, 5),
            k in 0.01..100.0f64,
        ) {
            prop_assume!(u.iter().any(|x| x.abs() > 1e-3) && v.iter().any(|x| x.abs() > 1e-3));
            let a = cosine_similarity(&u, &v).unwrap();
            let b = cosine_similarity(&v, &u).unwrap();
            prop_assert_eq!(a, b);
            let scaled: Vec<f64> = u.iter().map(|x| x * k).collect();
            let c = cosine_similarity(&scaled, &v).unwrap();
            prop_assert!((a - c).abs() < 1e-9);
            prop_assert!((-1.0..=1.0).contains(&a));
        }
    }
}
