//! Progressive edge-growth construction of regular parity-check matrices.
//!
//! Variables are connected one edge at a time. Each new edge goes to a check
//! that is as far as possible from the variable in the current Tanner graph
//! (unreachable checks first), restricted to checks below the row-degree cap,
//! preferring the lowest current degree and breaking remaining ties with a
//! seeded RNG.

use std::collections::VecDeque;

use rand::seq::IndexedRandom;

use super::{gf2, AlistMatrix};
use crate::rng;

/// Builds an `m x n` matrix with column weight `col_weight` and row degrees
/// capped at `ceil(n * col_weight / m)`.
pub fn construct(n: usize, m: usize, col_weight: usize, seed: u64) -> AlistMatrix {
    assert!(col_weight >= 1 && col_weight <= m);
    let cap = (n * col_weight).div_ceil(m);
    let mut rng = rng::seeded(seed);
    let mut check_adj: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut var_adj: Vec<Vec<usize>> = vec![Vec::new(); n];

    for v in 0..n {
        for _ in 0..col_weight {
            let depth = check_depths(v, &var_adj, &check_adj);
            let open: Vec<usize> = (0..m)
                .filter(|&c| check_adj[c].len() < cap && !var_adj[v].contains(&c))
                .collect();
            let pool: Vec<usize> = if open.is_empty() {
                (0..m).filter(|c| !var_adj[v].contains(c)).collect()
            } else {
                open
            };
            let far = pool.iter().map(|&c| depth[c]).max().expect("non-empty pool");
            let far_set: Vec<usize> = pool.into_iter().filter(|&c| depth[c] == far).collect();
            let min_deg = far_set
                .iter()
                .map(|&c| check_adj[c].len())
                .min()
                .expect("non-empty set");
            let best: Vec<usize> = far_set
                .into_iter()
                .filter(|&c| check_adj[c].len() == min_deg)
                .collect();
            let &c = best.choose(&mut rng).expect("non-empty candidates");
            check_adj[c].push(v);
            var_adj[v].push(c);
        }
    }
    for row in &mut check_adj {
        row.sort_unstable();
    }
    AlistMatrix::from_rows(n, check_adj)
}

/// BFS distance (in check levels) from variable `v` to every check;
/// unreachable checks get `usize::MAX`.
fn check_depths(v: usize, var_adj: &[Vec<usize>], check_adj: &[Vec<usize>]) -> Vec<usize> {
    let mut depth = vec![usize::MAX; check_adj.len()];
    let mut seen_var = vec![false; var_adj.len()];
    let mut queue = VecDeque::new();
    seen_var[v] = true;
    for &c in &var_adj[v] {
        depth[c] = 0;
        queue.push_back(c);
    }
    while let Some(c) = queue.pop_front() {
        for &u in &check_adj[c] {
            if seen_var[u] {
                continue;
            }
            seen_var[u] = true;
            for &c2 in &var_adj[u] {
                if depth[c2] == usize::MAX {
                    depth[c2] = depth[c] + 1;
                    queue.push_back(c2);
                }
            }
        }
    }
    depth
}

/// Tries seeds `start_seed, start_seed + 1, ..` until the construction has
/// full row rank over GF(2). Returns the seed used and the matrix.
pub fn construct_full_rank(
    n: usize,
    m: usize,
    col_weight: usize,
    start_seed: u64,
    attempts: u64,
) -> Option<(u64, AlistMatrix)> {
    (start_seed..start_seed + attempts).find_map(|seed| {
        let h = construct(n, m, col_weight, seed);
        let rows = h.rows.iter().map(|r| gf2::BitRow::from_ones(n, r)).collect();
        (gf2::reduce(rows, n).rank() == m).then_some((seed, h))
    })
}

/// Length of the shortest cycle in the Tanner graph (0 if acyclic).
pub fn girth(h: &AlistMatrix) -> usize {
    // Nodes: variables 0..n, checks n..n+m.
    let n = h.n_cols;
    let neighbours = |node: usize| -> Vec<usize> {
        if node < n {
            h.cols[node].iter().map(|&c| n + c).collect()
        } else {
            h.rows[node - n].clone()
        }
    };
    let total = n + h.n_rows;
    let mut best = usize::MAX;
    for start in 0..n {
        let mut dist = vec![usize::MAX; total];
        let mut parent = vec![usize::MAX; total];
        dist[start] = 0;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for w in neighbours(u) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    parent[w] = u;
                    queue.push_back(w);
                } else if parent[u] != w {
                    best = best.min(dist[u] + dist[w] + 1);
                }
            }
        }
    }
    if best == usize::MAX {
        0
    } else {
        best
    }
}
