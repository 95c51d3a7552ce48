//! Small statistics helpers for the benchmark harness: medians, ranks, and
//! an exact Spearman permutation test for short sweeps.

/// Arithmetic mean; 0 for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Median; 0 for an empty slice.
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite timings"));
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    }
}

/// Ranks starting at 1, ties getting their average rank.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("finite values"));
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        // Positions i..=j share a value; average their 1-based ranks.
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            out[idx] = avg;
        }
        i = j + 1;
    }
    out
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for (a, b) in x.iter().zip(y) {
        num += (a - mx) * (b - my);
        dx += (a - mx).powi(2);
        dy += (b - my).powi(2);
    }
    if dx == 0.0 || dy == 0.0 {
        return 0.0;
    }
    num / (dx * dy).sqrt()
}

/// Spearman rank correlation; handles ties via average ranks.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    pearson(&ranks(x), &ranks(y))
}

/// One-sided exact permutation p-value for Spearman correlation: the share
/// of y-permutations at least as extreme as the observed rho in the given
/// direction. Exact enumeration; sweeps here have at most 8 points.
pub fn spearman_one_sided_p(x: &[f64], y: &[f64], positive: bool) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    assert!(n >= 2 && n <= 8, "exact test covers 2..=8 points");
    let rx = ranks(x);
    let ry = ranks(y);
    let observed = pearson(&rx, &ry);

    let mut perm = ry.clone();
    let mut extreme = 0u64;
    let mut total = 0u64;
    // Heap's algorithm over y-rank arrangements.
    fn heaps(
        k: usize,
        perm: &mut [f64],
        rx: &[f64],
        observed: f64,
        positive: bool,
        extreme: &mut u64,
        total: &mut u64,
    ) {
        if k == 1 {
            *total += 1;
            let rho = pearson(rx, perm);
            let hit = if positive {
                rho >= observed - 1e-12
            } else {
                rho <= observed + 1e-12
            };
            if hit {
                *extreme += 1;
            }
            return;
        }
        for i in 0..k {
            heaps(k - 1, perm, rx, observed, positive, extreme, total);
            if k % 2 == 0 {
                perm.swap(i, k - 1);
            } else {
                perm.swap(0, k - 1);
            }
        }
    }
    heaps(n, &mut perm, &rx, observed, positive, &mut extreme, &mut total);
    extreme as f64 / total as f64
}
