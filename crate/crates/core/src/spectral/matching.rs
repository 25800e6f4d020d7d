//! Multiset comparison of spectra by bipartite matching.

use num_complex::Complex64;

fn try_augment(
    u: usize,
    adj: &[Vec<usize>],
    seen: &mut [bool],
    match_right: &mut [Option<usize>],
) -> bool {
    for &v in &adj[u] {
        if seen[v] {
            continue;
        }
        seen[v] = true;
        if match_right[v].is_none_or(|w| try_augment(w, adj, seen, match_right)) {
            match_right[v] = Some(u);
            return true;
        }
    }
    false
}

fn has_perfect_matching(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    let adj: Vec<Vec<usize>> = a
        .iter()
        .map(|x| b.iter().enumerate().filter(|(_, y)| (x - *y).norm() <= tol).map(|(j, _)| j).collect())
        .collect();
    let mut match_right = vec![None; b.len()];
    (0..a.len()).all(|u| {
        let mut seen = vec![false; b.len()];
        try_augment(u, &adj, &mut seen, &mut match_right)
    })
}

/// Whether some bijection pairs every element of `a` with one of `b` within
/// absolute distance `tol`.
pub fn multisets_match(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    a.len() == b.len() && has_perfect_matching(a, b, tol)
}

/// Smallest `d` such that the multisets match with tolerance `d`.
pub fn bottleneck_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len(), "multisets of different sizes");
    if a.is_empty() {
        return 0.0;
    }
    let mut candidates: Vec<f64> = a.iter().flat_map(|x| b.iter().map(move |y| (x - y).norm())).collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let (mut lo, mut hi) = (0, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if has_perfect_matching(a, b, candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    candidates[lo]
}
