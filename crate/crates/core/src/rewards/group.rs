use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::Label;

/// Majority verdict over a rollout group. Absent verdicts do not vote; an
/// exact tie (including no votes at all) yields no pseudo-label.
pub fn pseudo_label(verdicts: &[Option<Label>]) -> Option<Label> {
    let s = verdicts.iter().filter(|v| **v == Some(Label::Supported)).count();
    let r = verdicts.iter().filter(|v| **v == Some(Label::Refuted)).count();
    match s.cmp(&r) {
        std::cmp::Ordering::Greater => Some(Label::Supported),
        std::cmp::Ordering::Less => Some(Label::Refuted),
        std::cmp::Ordering::Equal => None,
    }
}

/// Fraction of the group whose verdict equals the pseudo-label (0 without one).
pub fn agreement_fraction(verdicts: &[Option<Label>]) -> f64 {
    match pseudo_label(verdicts) {
        Some(p) if !verdicts.is_empty() => {
            verdicts.iter().filter(|v| **v == Some(p)).count() as f64 / verdicts.len() as f64
        }
        _ => 0.0,
    }
}

/// Guard on the normalizing scale of [`group_advantages`].
pub const ADVANTAGE_EPS: f64 = 1e-6;

/// Group-relative advantages `(r - mean) / max(std, eps)` with population std.
/// A constant group maps to exact zeros.
pub fn group_advantages(totals: &[f64]) -> Vec<f64> {
    let n = totals.len();
    if n == 0 {
        return Vec::new();
    }
    if totals.iter().all(|&r| r == totals[0]) {
        return vec![0.0; n];
    }
    let nf = n as f64;
    let rough = totals.iter().sum::<f64>() / nf;
    // Center in the deviation domain: the residual mean of the deviations is
    // tiny relative to them, so it survives division by a small scale.
    let dev: Vec<f64> = totals.iter().map(|r| r - rough).collect();
    let shift = dev.iter().sum::<f64>() / nf;
    let centered: Vec<f64> = dev.iter().map(|d| d - shift).collect();
    let var = centered.iter().map(|d| d * d).sum::<f64>() / nf;
    let scale = var.sqrt().max(ADVANTAGE_EPS);
    centered.iter().map(|d| d / scale).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Labeled,
    Unlabeled,
}

/// Uniform draw in [0, 1) from `sha256(id || seed_le)`.
pub fn supervision_draw(id: &str, seed: u64) -> f64 {
    let mut h = Sha256::new();
    h.update(id.as_bytes());
    h.update(seed.to_le_bytes());
    let d = h.finalize();
    let x = u64::from_be_bytes(d[..8].try_into().expect("8 bytes"));
    (x >> 11) as f64 / (1u64 << 53) as f64
}

/// Per-claim supervision split at rate `s`: a claim is labeled iff its draw is
/// below `s`. Depends only on (id, seed), so it is stable across orderings.
pub fn partition_supervision<S: AsRef<str>>(ids: &[S], s: f64, seed: u64) -> BTreeMap<String, Partition> {
    ids.iter()
        .map(|id| {
            let p = if supervision_draw(id.as_ref(), seed) < s {
                Partition::Labeled
            } else {
                Partition::Unlabeled
            };
            (id.as_ref().to_string(), p)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Label::{Refuted as R, Supported as S};

    #[test]
    fn majority_examples() {
        let v: Vec<_> = [S, S, S, R, S, S, R, S].into_iter().map(Some).collect();
        assert_eq!(pseudo_label(&v), Some(S));
        let tie: Vec<_> = [S, R, S, R, S, R, S, R].into_iter().map(Some).collect();
        assert_eq!(pseudo_label(&tie), None);
        assert_eq!(pseudo_label(&[Some(R); 8]), Some(R));
        assert_eq!(pseudo_label(&[None, None, Some(R)]), Some(R));
        assert_eq!(pseudo_label(&[None, None]), None);
    }

    #[test]
    fn advantages_examples() {
        assert_eq!(group_advantages(&[1.0; 4]), vec![0.0; 4]);
        assert_eq!(group_advantages(&[0.1; 3]), vec![0.0; 3]);
        let a = group_advantages(&[0.0, 2.0]);
        assert!((a[0] + 1.0).abs() <= 2e-6 && (a[1] - 1.0).abs() <= 2e-6);
    }

    #[test]
    fn partition_extremes() {
        let ids: Vec<String> = (0..500).map(|i| format!("c{i}")).collect();
        assert!(partition_supervision(&ids, 1.0, 7)
            .values()
            .all(|p| *p == Partition::Labeled));
        assert!(partition_supervision(&ids, 0.0, 7)
            .values()
            .all(|p| *p == Partition::Unlabeled));
    }

    proptest! {
        #[test]
        fn pseudo_label_permutation_invariant(v in prop::collection::vec(prop::option::of(prop::bool::ANY), 1..12), rot in 0usize..12) {
            let labels: Vec<Option<Label>> = v.iter().map(|o| o.map(|b| if b { S } else { R })).collect();
            let mut shuffled = labels.clone();
            let k = rot % shuffled.len();
            shuffled.rotate_left(k);
            shuffled.reverse();
            prop_assert_eq!(pseudo_label(&labels), pseudo_label(&shuffled));
        }

        #[test]
        fn advantages_centered(v in prop::collection::vec(-3.0f64..7.0, 2..16)) {
            let a = group_advantages(&v);
            let mean = a.iter().sum::<f64>() / a.len() as f64;
            prop_assert!(mean.abs() <= 1e-12);
            prop_assert!(a.iter().all(|x| x.is_finite()));
        }

        #[test]
        fn advantages_centered_below_eps(base in -2.0f64..6.0, v in prop::collection::vec(-1.0f64..1.0, 2..16), exp in -9i32..-6) {
            let scale = 10f64.powi(exp);
            let totals: Vec<f64> = v.iter().map(|x| base + scale * x).collect();
            let a = group_advantages(&totals);
            let mean = a.iter().sum::<f64>() / a.len() as f64;
            prop_assert!(mean.abs() <= 1e-12, "mean {mean:e}");
        }

        #[test]
        fn partition_order_independent(n in 1usize..60, s in 0.0f64..1.0, seed in any::<u64>()) {
            let ids: Vec<String> = (0..n).map(|i| format!("id-{i}")).collect();
            let mut rev = ids.clone();
            rev.reverse();
            prop_assert_eq!(partition_supervision(&ids, s, seed), partition_supervision(&rev, s, seed));
        }
    }
}
