use num_complex::Complex64;

/// Assignment `perm` minimizing `Σ_j |reference[j] − candidates[perm[j]]|`.
///
/// Exhaustive for up to 8 entries, greedy nearest-first beyond that.
pub fn match_eigenvalues(reference: &[Complex64], candidates: &[Complex64]) -> Vec<usize> {
    assert_eq!(reference.len(), candidates.len(), "matching needs equal lengths");
    let n = reference.len();
    if n > 8 {
        return greedy(reference, candidates);
    }
    let cost: Vec<Vec<f64>> = reference
        .iter()
        .map(|r| candidates.iter().map(|c| (r - c).norm()).collect())
        .collect();
    let mut best = (f64::INFINITY, (0..n).collect::<Vec<_>>());
    let mut perm: Vec<usize> = (0..n).collect();
    permute(&mut perm, 0, &cost, 0.0, &mut best);
    best.1
}

fn permute(perm: &mut Vec<usize>, k: usize, cost: &[Vec<f64>], acc: f64, best: &mut (f64, Vec<usize>)) {
    if acc >= best.0 {
        return;
    }
    if k == perm.len() {
        *best = (acc, perm.clone());
        return;
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        let c = cost[k][perm[k]];
        permute(perm, k + 1, cost, acc + c, best);
        perm.swap(k, i);
    }
}

fn greedy(reference: &[Complex64], candidates: &[Complex64]) -> Vec<usize> {
    let n = reference.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for (i, r) in reference.iter().enumerate() {
        for (j, c) in candidates.iter().enumerate() {
            pairs.push(((r - c).norm(), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut perm = vec![usize::MAX; n];
    let mut used = vec![false; n];
    for (_, i, j) in pairs {
        if perm[i] == usize::MAX && !used[j] {
            perm[i] = j;
            used[j] = true;
        }
    }
    perm
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn recovers_shuffled_order() {
        let a = [c(1.0, 0.0), c(-1.0, 0.5), c(0.0, 3.0), c(2.0, -2.0)];
        let b = [a[2] + 1e-3, a[0], a[3], a[1] - 1e-3];
        assert_eq!(match_eigenvalues(&a, &b), vec![1, 3, 0, 2]);
    }

    #[test]
    fn prefers_global_optimum_over_greedy() {
        // Greedy would pair 0 with 0 (distance 0.1) and force 1 onto 1 (distance 1.9).
        let a = [c(0.0, 0.0), c(1.0, 0.0)];
        let b = [c(0.1, 0.0), c(-0.9, 0.0)];
        let perm = match_eigenvalues(&a, &b);
        let cost: f64 = perm.iter().enumerate().map(|(i, &j)| (a[i] - b[j]).norm()).sum();
        assert!(cost <= 2.0 + 1e-12);
    }
}
