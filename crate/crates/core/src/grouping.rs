//! Partitioning helpers shared by attribute grouping (two-tier solver) and tag
//! grouping (approximation solver).

use std::cmp::Ordering;

/// Splits `0..len` into `groups` consecutive blocks whose sizes differ by at most one.
/// Earlier blocks get the extra element.
pub fn contiguous_blocks(len: usize, groups: usize) -> Vec<Vec<usize>> {
    assert!(
        groups >= 1 && groups <= len,
        "cannot split {len} items into {groups} blocks"
    );
    let base = len / groups;
    let extra = len % groups;
    let mut start = 0;
    (0..groups)
        .map(|g| {
            let size = base + usize::from(g < extra);
            let block = (start..start + size).collect();
            start += size;
            block
        })
        .collect()
}

/// Absolute Pearson correlation between every pair of boolean columns.
/// Constant columns correlate with nothing (weight 0). The diagonal is 1.
pub fn abs_pearson_matrix(columns: &[Vec<bool>]) -> Vec<Vec<f64>> {
    let k = columns.len();
    let n = columns.first().map_or(0, Vec::len) as f64;
    let means: Vec<f64> = columns
        .iter()
        .map(|c| c.iter().filter(|&&b| b).count() as f64 / n)
        .collect();
    let mut out = vec![vec![0.0; k]; k];
    for a in 0..k {
        out[a][a] = 1.0;
        for b in a + 1..k {
            let both = columns[a]
                .iter()
                .zip(&columns[b])
                .filter(|(&x, &y)| x && y)
                .count() as f64
                / n;
            let cov = both - means[a] * means[b];
            let var = means[a] * (1.0 - means[a]) * means[b] * (1.0 - means[b]);
            let r = if var > 0.0 {
                (cov / var.sqrt()).abs().min(1.0)
            } else {
                0.0
            };
            out[a][b] = r;
            out[b][a] = r;
        }
    }
    out
}

/// Greedy capacity-bounded graph partitioning.
///
/// Edges are visited by descending weight; both endpoints are placed together
/// whenever capacities allow, and an endpoint joins its partner's group when the
/// partner is already placed. Items left over are assigned to the group they are
/// most strongly connected to. A refinement pass then applies the best single
/// move or pairwise swap while it raises the total within-group weight. The
/// result always has exactly `groups` non-empty groups, members ascending,
/// groups ordered by their smallest member.
pub fn greedy_partition(weights: &[Vec<f64>], groups: usize, capacity: usize) -> Vec<Vec<usize>> {
    let n = weights.len();
    assert!(groups >= 1 && groups <= n, "need 1 ≤ groups ≤ {n}");
    assert!(
        groups * capacity >= n,
        "capacity {capacity} too small for {n} items"
    );

    let mut edges: Vec<(f64, usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .map(|(a, b)| (weights[a][b], a, b))
        .filter(|(w, _, _)| *w > 0.0)
        .collect();
    edges.sort_by(|x, y| {
        y.0.partial_cmp(&x.0)
            .unwrap_or(Ordering::Equal)
            .then((x.1, x.2).cmp(&(y.1, y.2)))
    });

    let mut assign: Vec<Option<usize>> = vec![None; n];
    let mut members: Vec<Vec<usize>> = Vec::with_capacity(groups);
    let mut unassigned = n;

    let affinity =
        |members: &[usize], x: usize| members.iter().map(|&y| weights[x][y]).sum::<f64>();

    for (_, a, b) in edges {
        let need = groups - members.len();
        match (assign[a], assign[b]) {
            (None, None) => {
                if capacity < 2 {
                    continue;
                }
                if need >= 1 && unassigned - 2 >= need - 1 {
                    assign[a] = Some(members.len());
                    assign[b] = Some(members.len());
                    members.push(vec![a, b]);
                    unassigned -= 2;
                } else if unassigned - 2 >= need {
                    let best = (0..members.len())
                        .filter(|&g| members[g].len() + 2 <= capacity)
                        .max_by(|&g, &h| {
                            let fg = affinity(&members[g], a) + affinity(&members[g], b);
                            let fh = affinity(&members[h], a) + affinity(&members[h], b);
                            fg.partial_cmp(&fh)
                                .unwrap_or(Ordering::Equal)
                                .then(h.cmp(&g))
                        });
                    if let Some(g) = best {
                        members[g].extend([a, b]);
                        assign[a] = Some(g);
                        assign[b] = Some(g);
                        unassigned -= 2;
                    }
                }
            }
            (Some(g), None) | (None, Some(g)) => {
                let x = if assign[a].is_none() { a } else { b };
                if members[g].len() < capacity && unassigned > need {
                    members[g].push(x);
                    assign[x] = Some(g);
                    unassigned -= 1;
                }
            }
            _ => {}
        }
    }

    #[allow(clippy::needless_range_loop)]
    for x in 0..n {
        if assign[x].is_some() {
            continue;
        }
        let g = if members.len() < groups {
            members.push(Vec::new());
            members.len() - 1
        } else {
            (0..members.len())
                .filter(|&g| members[g].len() < capacity)
                .max_by(|&g, &h| {
                    affinity(&members[g], x)
                        .partial_cmp(&affinity(&members[h], x))
                        .unwrap_or(Ordering::Equal)
                        .then(h.cmp(&g))
                })
                .expect("total capacity covers every item")
        };
        members[g].push(x);
        assign[x] = Some(g);
    }

    refine(weights, &mut members, capacity);
    for m in &mut members {
        m.sort_unstable();
    }
    members.sort_by_key(|m| m[0]);
    members
}

/// Best-improvement local search over moves and swaps.
fn refine(weights: &[Vec<f64>], members: &mut [Vec<usize>], capacity: usize) {
    const MIN_GAIN: f64 = 1e-12;
    let n = weights.len();
    // affinity of x to group g, excluding x itself
    let aff = |members: &[Vec<usize>], g: usize, x: usize| -> f64 {
        members[g]
            .iter()
            .filter(|&&y| y != x)
            .map(|&y| weights[x][y])
            .sum()
    };
    for _ in 0..4 * n * n {
        let mut best: Option<(f64, usize, usize, usize, Option<usize>)> = None;
        let mut consider = |gain: f64, cand: (usize, usize, usize, Option<usize>)| {
            if gain > MIN_GAIN && best.is_none_or(|b| gain > b.0) {
                best = Some((gain, cand.0, cand.1, cand.2, cand.3));
            }
        };
        for g in 0..members.len() {
            for (xi, &x) in members[g].iter().enumerate() {
                let stay = aff(members, g, x);
                for h in (0..members.len()).filter(|&h| h != g) {
                    let join = aff(members, h, x);
                    if members[g].len() > 1 && members[h].len() < capacity {
                        consider(join - stay, (g, xi, h, None));
                    }
                    if g < h {
                        for (yi, &y) in members[h].iter().enumerate() {
                            let gain = (join - weights[x][y])
                                + (aff(members, g, y) - weights[x][y])
                                - stay
                                - aff(members, h, y);
                            consider(gain, (g, xi, h, Some(yi)));
                        }
                    }
                }
            }
        }
        let Some((_, g, xi, h, swap)) = best else {
            return;
        };
        match swap {
            Some(yi) => {
                let x = members[g][xi];
                members[g][xi] = members[h][yi];
                members[h][yi] = x;
            }
            None => {
                let x = members[g].swap_remove(xi);
                members[h].push(x);
            }
        }
    }
}
