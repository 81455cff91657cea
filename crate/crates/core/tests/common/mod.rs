//! Naive reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::BTreeMap;

pub type Dense = Vec<Vec<bool>>;

pub fn dense_recurrence(points: &[Vec<f64>], eps: f64, maximum: bool) -> Dense {
    let n = points.len();
    let mut m = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            let d = if maximum {
                points[i]
                    .iter()
                    .zip(&points[j])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            } else {
                let mut s = 0.0;
                for (a, b) in points[i].iter().zip(&points[j]) {
                    s += (a - b) * (a - b);
                }
                s.sqrt()
            };
            m[i][j] = d <= eps;
        }
    }
    m
}

fn count_runs(cells: &[bool], hist: &mut BTreeMap<usize, u64>) {
    let mut k = 0;
    while k < cells.len() {
        if cells[k] {
            let start = k;
            while k < cells.len() && cells[k] {
                k += 1;
            }
            *hist.entry(k - start).or_insert(0) += 1;
        } else {
            k += 1;
        }
    }
}

/// Maximal runs along every diagonal offset of both triangles.
pub fn diagonal_runs(m: &Dense, include_loi: bool) -> BTreeMap<usize, u64> {
    let n = m.len() as isize;
    let mut hist = BTreeMap::new();
    for offset in -(n - 1)..n {
        if offset == 0 && !include_loi {
            continue;
        }
        let cells: Vec<bool> = (0..n)
            .filter_map(|i| {
                let j = i + offset;
                (0..n).contains(&j).then(|| m[i as usize][j as usize])
            })
            .collect();
        count_runs(&cells, &mut hist);
    }
    hist
}

pub fn vertical_runs(m: &Dense) -> BTreeMap<usize, u64> {
    let n = m.len();
    let mut hist = BTreeMap::new();
    for col in 0..n {
        let cells: Vec<bool> = (0..n).map(|row| m[row][col]).collect();
        count_runs(&cells, &mut hist);
    }
    hist
}

/// `(points in lines of length >= min, all points)`.
pub fn line_ratio(hist: &BTreeMap<usize, u64>, min: usize) -> (u64, u64) {
    let total = hist.iter().map(|(l, c)| *l as u64 * c).sum();
    let long = hist
        .iter()
        .filter(|(l, _)| **l >= min)
        .map(|(l, c)| *l as u64 * c)
        .sum();
    (long, total)
}

pub fn clustering_triples(adj: &Dense) -> f64 {
    let n = adj.len();
    let mut total = 0.0;
    for i in 0..n {
        let nb: Vec<usize> = (0..n).filter(|&j| adj[i][j]).collect();
        let k = nb.len();
        if k < 2 {
            continue;
        }
        let mut closed = 0u64;
        for a in 0..k {
            for b in a + 1..k {
                if adj[nb[a]][nb[b]] {
                    closed += 1;
                }
            }
        }
        total += 2.0 * closed as f64 / (k * (k - 1)) as f64;
    }
    total / n as f64
}

pub fn floyd_warshall(adj: &Dense) -> Vec<Vec<Option<u32>>> {
    let n = adj.len();
    let mut d: Vec<Vec<Option<u32>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        Some(0)
                    } else if adj[i][j] {
                        Some(1)
                    } else {
                        None
                    }
                })
                .collect()
        })
        .collect();
    for k in 0..n {
        for i in 0..n {
            let Some(ik) = d[i][k] else { continue };
            for j in 0..n {
                if let Some(kj) = d[k][j] {
                    if d[i][j].is_none_or(|cur| ik + kj < cur) {
                        d[i][j] = Some(ik + kj);
                    }
                }
            }
        }
    }
    d
}

/// `(distance sum, reachable ordered pairs)` over distinct nodes.
pub fn path_totals(d: &[Vec<Option<u32>>]) -> (u64, u64) {
    let mut sum = 0;
    let mut pairs = 0;
    for (i, row) in d.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if let (true, Some(v)) = (i != j, v) {
                sum += *v as u64;
                pairs += 1;
            }
        }
    }
    (sum, pairs)
}

/// Symmetric adjacency without self-loops, edges drawn with probability `density`.
pub fn random_graph(n: usize, density: f64, mut coin: impl FnMut() -> f64) -> (Dense, Vec<(usize, usize)>) {
    let mut adj = vec![vec![false; n]; n];
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if coin() < density {
                adj[i][j] = true;
                adj[j][i] = true;
                edges.push((i, j));
            }
        }
    }
    (adj, edges)
}

/// S = Σ_{i<j} sign(x_j − x_i) by direct pair enumeration.
pub fn mann_kendall_s(x: &[f64]) -> i64 {
    let mut s = 0;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            s += (x[j] - x[i]).partial_cmp(&0.0).map_or(0, |o| o as i64);
        }
    }
    s
}
