//! Maximum bipartite matching restricted to edges at or below a length
//! threshold.

use std::collections::VecDeque;

const INF: usize = usize::MAX;

/// Adjacency of each left vertex as `(right vertex, edge length)`, sorted by
/// length so a threshold is a prefix.
pub type WeightedAdjacency = Vec<Vec<(usize, f64)>>;

#[derive(Clone, Debug)]
pub struct Matching {
    pub left: Vec<Option<usize>>,
    pub right: Vec<Option<usize>>,
    pub size: usize,
}

/// Hopcroft–Karp over the edges of length `<= threshold`.
pub fn max_matching(adj: &[Vec<(usize, f64)>], n_right: usize, threshold: f64) -> Matching {
    let n_left = adj.len();
    let cut: Vec<usize> = adj
        .iter()
        .map(|a| a.partition_point(|&(_, d)| d <= threshold))
        .collect();
    let mut ml: Vec<Option<usize>> = vec![None; n_left];
    let mut mr: Vec<Option<usize>> = vec![None; n_right];
    let mut layer = vec![INF; n_left];
    let mut it = vec![0usize; n_left];
    let mut size = 0;
    let mut queue = VecDeque::new();
    let mut stack = Vec::new();

    loop {
        // layered BFS from free left vertices
        queue.clear();
        for u in 0..n_left {
            if ml[u].is_none() {
                layer[u] = 0;
                queue.push_back(u);
            } else {
                layer[u] = INF;
            }
        }
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &adj[u][..cut[u]] {
                match mr[v] {
                    None => found = true,
                    Some(w) if layer[w] == INF => {
                        layer[w] = layer[u] + 1;
                        queue.push_back(w);
                    }
                    _ => {}
                }
            }
        }
        if !found {
            break;
        }

        it.iter_mut().for_each(|x| *x = 0);
        for root in 0..n_left {
            if ml[root].is_some() {
                continue;
            }
            stack.clear();
            stack.push(root);
            while let Some(&u) = stack.last() {
                if it[u] >= cut[u] {
                    layer[u] = INF;
                    stack.pop();
                    if let Some(&p) = stack.last() {
                        it[p] += 1;
                    }
                    continue;
                }
                let v = adj[u][it[u]].0;
                match mr[v] {
                    None => {
                        for &x in stack.iter() {
                            let y = adj[x][it[x]].0;
                            ml[x] = Some(y);
                            mr[y] = Some(x);
                        }
                        size += 1;
                        break;
                    }
                    Some(w) if layer[w] != INF && layer[w] == layer[u] + 1 => stack.push(w),
                    _ => it[u] += 1,
                }
            }
        }
    }
    Matching {
        left: ml,
        right: mr,
        size,
    }
}
