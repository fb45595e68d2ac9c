//! Localization and rank-agreement diagnostics for score vectors.

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Inverse participation ratio `Σ v_i⁴` of `x / ‖x‖₂`. Ranges from `1/n`
/// (uniform) to 1 (a single nonzero entry); larger means more localized.
pub fn ipr(x: &[f64]) -> Result<f64> {
    let peak = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if peak == 0.0 || !peak.is_finite() {
        return Err(Error::ZeroVector);
    }
    // Σ y⁴ / (Σ y²)² with y = x/peak; exact for uniform and basis vectors
    let (mut s2, mut s4) = (0.0, 0.0);
    for v in x {
        let y2 = (v / peak).powi(2);
        s2 += y2;
        s4 += y2 * y2;
    }
    Ok(s4 / (s2 * s2))
}

/// Node order and average ranks of a score vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    /// Node indices by descending score; equal scores keep index order.
    pub order: Vec<usize>,
    /// 1-based rank of each node (1 = highest score); tied nodes share the
    /// average of the ranks they span.
    pub ranks: Vec<f64>,
}

fn cmp_f64(a: f64, b: f64) -> Ordering {
    a.partial_cmp(&b)
        .expect("NaN scores are rejected before ranking")
}

pub fn rank_of(x: &[f64]) -> Ranking {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&i, &j| cmp_f64(x[j], x[i]).then(i.cmp(&j)));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] == x[order[start]] {
            end += 1;
        }
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    Ranking { order, ranks }
}

/// Merges values closer than `rel_tol · max|x|` into exact ties (each run
/// of near-equal sorted values takes the value of its smallest member).
pub fn snap_ties(x: &[f64], rel_tol: f64) -> Vec<f64> {
    let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let eps = rel_tol * scale;
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&i, &j| cmp_f64(x[i], x[j]));
    let mut out = x.to_vec();
    let mut anchor = None;
    for &i in &idx {
        match anchor {
            Some(a) if x[i] - a <= eps => out[i] = a,
            _ => anchor = Some(x[i]),
        }
    }
    out
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidParameter(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::UndefinedCorrelation(
            "need at least two observations".into(),
        ));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::InvalidParameter("NaN in score vector".into()));
    }
    Ok(())
}

fn tie_pairs(sorted: &[f64]) -> u64 {
    let mut total = 0;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// `τ_b = S / sqrt((n0 − n1)(n0 − n2))` from the pair counts.
fn tau_b(s: i64, n0: u64, n1: u64, n2: u64) -> Result<f64> {
    if n1 == n0 || n2 == n0 {
        return Err(Error::UndefinedCorrelation(
            "every pair is tied in one of the vectors".into(),
        ));
    }
    Ok(s as f64 / (((n0 - n1) as f64) * ((n0 - n2) as f64)).sqrt())
}

/// Tie-corrected Kendall tau (tau-b) in O(n log n): sort by `(x, y)`, then
/// count discordant pairs as inversions of `y` with a merge sort.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let n = x.len() as u64;
    let n0 = n * (n - 1) / 2;

    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&i, &j| cmp_f64(x[i], x[j]).then(cmp_f64(y[i], y[j])));

    let xs: Vec<f64> = idx.iter().map(|&i| x[i]).collect();
    let n1 = tie_pairs(&xs);
    let mut n3 = 0;
    let mut run = 1u64;
    for w in idx.windows(2) {
        if x[w[0]] == x[w[1]] && y[w[0]] == y[w[1]] {
            run += 1;
        } else {
            n3 += run * (run - 1) / 2;
            run = 1;
        }
    }
    n3 += run * (run - 1) / 2;

    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let mut buf = vec![0.0; ys.len()];
    let swaps = merge_count(&mut ys, &mut buf);
    let n2 = tie_pairs(&ys);

    let s = n0 as i64 - n1 as i64 - n2 as i64 + n3 as i64 - 2 * swaps as i64;
    tau_b(s, n0, n1, n2)
}

/// Sorts ascending, returning the number of strictly inverted pairs.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let len = v.len();
    if len < 2 {
        return 0;
    }
    let mid = len / 2;
    let mut swaps = {
        let (l, r) = v.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        merge_count(l, bl) + merge_count(r, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < len {
        if v[j] < v[i] {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + len - j].copy_from_slice(&v[j..len]);
    v.copy_from_slice(&buf[..len]);
    swaps
}

/// Tau-b by direct enumeration of all pairs. O(n²); the reference the fast
/// path is tested against.
pub fn kendall_tau_pairwise(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let n = x.len();
    let (mut s, mut n1, mut n2) = (0i64, 0u64, 0u64);
    for i in 0..n {
        for j in i + 1..n {
            let a = cmp_f64(x[i], x[j]) as i64;
            let b = cmp_f64(y[i], y[j]) as i64;
            s += a * b;
            n1 += u64::from(a == 0);
            n2 += u64::from(b == 0);
        }
    }
    let n0 = (n as u64) * (n as u64 - 1) / 2;
    tau_b(s, n0, n1, n2)
}

/// Spearman's rho: Pearson correlation of average-tie ranks.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let rx = rank_of(x).ranks;
    let ry = rank_of(y).ranks;
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("constant score vector".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ipr_reference_values() {
        for n in [1, 4, 7, 100] {
            assert_eq!(ipr(&vec![1.0; n]).unwrap(), 1.0 / n as f64);
        }
        assert_eq!(ipr(&[0.0, 0.0, 2.5, 0.0]).unwrap(), 1.0);
        assert!((ipr(&[3.0, 4.0]).unwrap() - 0.5392).abs() < 1e-15);
        assert!(matches!(ipr(&[0.0, 0.0]), Err(Error::ZeroVector)));
    }

    #[test]
    fn ranking_examples() {
        let r = rank_of(&[0.5, 0.9, 0.1]);
        assert_eq!(r.order, vec![1, 0, 2]);
        assert_eq!(r.ranks, vec![2.0, 1.0, 3.0]);
        let r = rank_of(&[2.0; 5]);
        assert_eq!(r.ranks, vec![3.0; 5]);
        assert_eq!(r.order, vec![0, 1, 2, 3, 4]);
        let r = rank_of(&[1.0, 3.0, 3.0, 0.0]);
        assert_eq!(r.ranks, vec![3.0, 1.5, 1.5, 4.0]);
    }

    #[test]
    fn kendall_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(kendall_tau(&x, &x).unwrap(), 1.0);
        assert_eq!(kendall_tau(&x, &[4.0, 3.0, 2.0, 1.0]).unwrap(), -1.0);
        let t = kendall_tau(&x, &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((t - 4.0 / 6.0).abs() < 1e-15);
        assert!(matches!(
            kendall_tau(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::UndefinedCorrelation(_))
        ));
        assert!(kendall_tau(&[1.0], &[1.0]).is_err());
        assert!(kendall_tau(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn kendall_with_ties_matches_hand_count() {
        // pairs: (0,1) tied in x; (0,2) C; (0,3) C; (1,2) C; (1,3) C; (2,3) tied in y
        let x = [1.0, 1.0, 2.0, 3.0];
        let y = [1.0, 2.0, 3.0, 3.0];
        let expected = 4.0 / (5.0f64 * 5.0).sqrt();
        assert!((kendall_tau(&x, &y).unwrap() - expected).abs() < 1e-15);
        assert_eq!(
            kendall_tau(&x, &y).unwrap(),
            kendall_tau_pairwise(&x, &y).unwrap()
        );
    }

    #[test]
    fn spearman_examples() {
        let x = [1.0, 2.0, 3.0];
        assert!((spearman_rho(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman_rho(&x, &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        assert!((spearman_rho(&x, &[2.0, 1.0, 3.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!(spearman_rho(&x, &[1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn snapping_merges_near_ties_only() {
        let x = [1.0, 1.0 + 1e-12, 2.0, 0.5];
        let s = snap_ties(&x, 1e-8);
        assert_eq!(s, vec![1.0, 1.0, 2.0, 0.5]);
        assert_eq!(snap_ties(&x, 0.0), x.to_vec());
    }

    fn tied_vec() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0..6i32, 2..40).prop_map(|v| v.into_iter().map(f64::from).collect())
    }

    proptest! {
        #[test]
        fn fast_kendall_equals_pairwise((x, y) in (2usize..60).prop_flat_map(|n| (
            prop::collection::vec(-5.0f64..5.0, n),
            prop::collection::vec(-5.0f64..5.0, n),
        ))) {
            prop_assert_eq!(kendall_tau(&x, &y).unwrap(), kendall_tau_pairwise(&x, &y).unwrap());
        }

        #[test]
        fn fast_kendall_equals_pairwise_with_ties(x in tied_vec(), seed in any::<u64>()) {
            let y: Vec<f64> = x.iter().enumerate()
                .map(|(i, _)| ((seed.wrapping_mul(i as u64 + 1) >> 7) % 5) as f64)
                .collect();
            let fast = kendall_tau(&x, &y);
            let slow = kendall_tau_pairwise(&x, &y);
            match (fast, slow) {
                (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "disagree: {:?} vs {:?}", a, b),
            }
        }

        #[test]
        fn ipr_scale_invariant(x in prop::collection::vec(0.01f64..10.0, 1..30), c in 0.01f64..100.0) {
            let y: Vec<f64> = x.iter().map(|v| v * c).collect();
            prop_assert!((ipr(&x).unwrap() - ipr(&y).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn correlations_invariant_under_monotone_maps(
            x in prop::collection::vec(0.1f64..10.0, 3..30),
            y in prop::collection::vec(0.1f64..10.0, 3..30),
        ) {
            let n = x.len().min(y.len());
            let (x, y) = (&x[..n], &y[..n]);
            let fx: Vec<f64> = x.iter().map(|v| v.ln() * 3.0 + 1.0).collect();
            let gy: Vec<f64> = y.iter().map(|v| v.powi(3)).collect();
            if let (Ok(a), Ok(b)) = (kendall_tau(x, y), kendall_tau(&fx, &gy)) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            if let (Ok(a), Ok(b)) = (spearman_rho(x, y), spearman_rho(&fx, &gy)) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
