//! Reverse Cuthill-McKee ordering for bandwidth reduction.

use super::CsrMat;
use crate::Scalar;

/// Returns a permutation (new index -> original index) that keeps the band
/// of a structurally symmetric matrix narrow. Deterministic: ties are broken
/// by original index.
pub fn rcm_order<T: Scalar>(a: &CsrMat<T>) -> Vec<usize> {
    let n = a.nrows();
    // symmetrized adjacency without the diagonal
    let mut adj = vec![Vec::new(); n];
    for (r, c, _) in a.iter() {
        if r != c {
            adj[r].push(c);
            adj[c].push(r);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();

    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    let mut queue = std::collections::VecDeque::new();
    let mut nodes_by_degree: Vec<usize> = (0..n).collect();
    nodes_by_degree.sort_unstable_by_key(|&i| (degree[i], i));

    for &start in &nodes_by_degree {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&u| !visited[u]).collect();
            next.sort_unstable_by_key(|&u| (degree[u], u));
            for u in next {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn is_a_permutation_and_reduces_bandwidth() {
        // path graph with scrambled labels: natural bandwidth is large
        let n = 16;
        let lab = |i: usize| (5 * i) % n;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0));
        }
        for i in 0..n - 1 {
            t.push((lab(i), lab(i + 1), -1.0));
            t.push((lab(i + 1), lab(i), -1.0));
        }
        let a = CsrMat::from_triplets(n, n, t);
        let order = rcm_order(&a);
        let mut seen = vec![false; n];
        for &v in &order {
            assert!(!seen[v]);
            seen[v] = true;
        }
        let mut iperm = vec![0usize; n];
        for (new, &old) in order.iter().enumerate() {
            iperm[old] = new;
        }
        let bw = a
            .iter()
            .map(|(r, c, _)| iperm[r].abs_diff(iperm[c]))
            .max()
            .unwrap();
        assert!(bw <= 2, "rcm bandwidth {bw}");
    }
}
