//! Meeting models: symmetric positive pairwise rate arrays, with explicit
//! constructors for every graph family the experiments use.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Geometric};

use crate::error::Error;
use crate::rng::Rng;
use crate::Result;

/// Dense zero-based agent index.
pub type AgentId = usize;

const MAX_VERTICES: usize = 10_000_000;

/// A symmetric nonnegative rate array, stored sparsely: only strictly
/// positive rates are kept, each unordered pair at most once with `i < j`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeetingModel {
    n: usize,
    edges: Vec<(AgentId, AgentId, f64)>,
}

impl MeetingModel {
    /// Build from an explicit positive-rate edge list, normalizing and
    /// sorting. Rejects anything breaking the type invariants.
    pub fn new(n: usize, edges: Vec<(AgentId, AgentId, f64)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("agent count must be at least 1"));
        }
        let mut normalized = Vec::with_capacity(edges.len());
        for (i, j, rate) in edges {
            if i >= n || j >= n {
                return Err(Error::invalid(format!(
                    "edge ({i},{j}) out of range for n={n}"
                )));
            }
            if i == j {
                return Err(Error::invalid(format!("self-pair ({i},{i}) forbidden")));
            }
            if !(rate > 0.0) || !rate.is_finite() {
                return Err(Error::invalid(format!(
                    "rate for ({i},{j}) must be strictly positive, got {rate}"
                )));
            }
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            normalized.push((a, b, rate));
        }
        normalized.sort_by_key(|e| (e.0, e.1));
        for w in normalized.windows(2) {
            if (w[0].0, w[0].1) == (w[1].0, w[1].1) {
                return Err(Error::invalid(format!(
                    "duplicate edge ({},{})",
                    w[0].0, w[0].1
                )));
            }
        }
        Ok(MeetingModel {
            n,
            edges: normalized,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges sorted by `(i, j)`, each with its positive rate.
    pub fn edges(&self) -> &[(AgentId, AgentId, f64)] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.n];
        for &(i, j, _) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    pub fn adjacency(&self) -> Vec<Vec<AgentId>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j, _) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        adj
    }

    /// Minimum rate over positive-rate pairs; `None` for an edgeless model.
    pub fn min_positive_rate(&self) -> Option<f64> {
        self.edges
            .iter()
            .map(|&(_, _, r)| r)
            .min_by(|a, b| a.total_cmp(b))
    }

    /// True iff every unordered pair has a strictly positive rate.
    pub fn all_pairs_positive(&self) -> bool {
        self.n == 1 || self.edges.len() == self.n * (self.n - 1) / 2
    }

    /// Plain-text edge list: header `n <count>`, then `i j rate` per edge in
    /// sorted order. Byte-stable for a fixed model.
    pub fn to_text(&self) -> String {
        let mut out = format!("n {}\n", self.n);
        for &(i, j, rate) in &self.edges {
            out.push_str(&format!("{i} {j} {rate}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty model file".into()))?;
        let n = header
            .strip_prefix("n ")
            .and_then(|s| s.trim().parse::<usize>().ok())
            .ok_or_else(|| Error::Parse(format!("bad header line: {header:?}")))?;
        let mut edges = Vec::new();
        for line in lines {
            let mut parts = line.split_whitespace();
            let (i, j, rate) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
                (Some(i), Some(j), Some(r), None) => (
                    i.parse::<usize>()
                        .map_err(|e| Error::Parse(e.to_string()))?,
                    j.parse::<usize>()
                        .map_err(|e| Error::Parse(e.to_string()))?,
                    r.parse::<f64>().map_err(|e| Error::Parse(e.to_string()))?,
                ),
                _ => return Err(Error::Parse(format!("bad edge line: {line:?}"))),
            };
            edges.push((i, j, rate));
        }
        MeetingModel::new(n, edges)
    }
}

/// Offspring distribution for Galton-Watson trees, as an explicit pmf on
/// `{0, ..., K}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GwOffspring {
    pmf: Vec<f64>,
}

impl GwOffspring {
    pub fn new(pmf: Vec<f64>) -> Result<Self> {
        if pmf.is_empty() {
            return Err(Error::invalid("offspring pmf must be non-empty"));
        }
        if pmf.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::invalid("offspring pmf entries must be nonnegative"));
        }
        let sum: f64 = pmf.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "offspring pmf sums to {sum}, expected 1 within 1e-12"
            )));
        }
        Ok(GwOffspring { pmf })
    }

    /// Poisson(c) truncated at the smallest K with tail mass below 1e-12,
    /// renormalized.
    pub fn poisson(c: f64) -> Result<Self> {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::invalid("Poisson mean must be nonnegative"));
        }
        let mut pmf = vec![(-c).exp()];
        let mut mass = pmf[0];
        let mut k = 0usize;
        while 1.0 - mass > 1e-12 {
            k += 1;
            let next = pmf[k - 1] * c / k as f64;
            pmf.push(next);
            mass += next;
        }
        let sum: f64 = pmf.iter().sum();
        for p in &mut pmf {
            *p /= sum;
        }
        GwOffspring::new(pmf)
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    fn sample(&self, rng: &mut Rng) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (k, &p) in self.pmf.iter().enumerate() {
            acc += p;
            if u < acc {
                return k;
            }
        }
        self.pmf.len() - 1
    }
}

/// All `n(n-1)/2` pairs at the given rate.
pub fn complete_graph(n: usize, rate: f64) -> Result<MeetingModel> {
    if n == 0 {
        return Err(Error::invalid("complete_graph requires n >= 1"));
    }
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            edges.push((i, j, rate));
        }
    }
    MeetingModel::new(n, edges)
}

/// Unit rate on each listed edge, zero elsewhere.
pub fn from_edge_list(n: usize, edges: &[(AgentId, AgentId)]) -> Result<MeetingModel> {
    MeetingModel::new(n, edges.iter().map(|&(i, j)| (i, j, 1.0)).collect())
}

/// k blocks, each K_r minus one edge (a_i, b_i), joined into a cycle by the
/// edges (b_i, a_{i+1}). Connected and (r-1)-regular on k*r vertices.
pub fn ring_of_near_cliques(r: usize, k: usize) -> Result<MeetingModel> {
    if r < 3 {
        return Err(Error::invalid("ring_of_near_cliques requires r >= 3"));
    }
    if k < 2 {
        return Err(Error::invalid(
            "ring_of_near_cliques requires k >= 2 blocks",
        ));
    }
    let n = k * r;
    let mut edges = Vec::new();
    // Block b occupies vertices [b*r, (b+1)*r); a_b is the first, b_b the last.
    for b in 0..k {
        let base = b * r;
        for u in 0..r {
            for v in (u + 1)..r {
                if u == 0 && v == r - 1 {
                    continue; // removed edge (a_b, b_b)
                }
                edges.push((base + u, base + v, 1.0));
            }
        }
        let next_a = ((b + 1) % k) * r;
        edges.push((base + r - 1, next_a, 1.0));
    }
    MeetingModel::new(n, edges)
}

fn pair_from_index(n: usize, k: u64) -> (usize, usize) {
    // Lexicographic index over pairs i < j: offset(i) = i*n - i(i+1)/2.
    let nf = n as f64;
    let mut i = (((2.0 * nf - 1.0) - ((2.0 * nf - 1.0).powi(2) - 8.0 * k as f64).sqrt()) / 2.0)
        .floor() as usize;
    let offset = |i: u64| i * n as u64 - i * (i + 1) / 2;
    while i > 0 && offset(i as u64) > k {
        i -= 1;
    }
    while offset(i as u64 + 1) <= k {
        i += 1;
    }
    let j = i + 1 + (k - offset(i as u64)) as usize;
    (i, j)
}

/// G(n, c/n): each pair independently with probability c/n, rate 1.
/// Geometric gap sampling, so sparse graphs cost O(edges) draws.
pub fn erdos_renyi(n: usize, c: f64, rng: &mut Rng) -> Result<MeetingModel> {
    if n == 0 {
        return Err(Error::invalid("erdos_renyi requires n >= 1"));
    }
    if !(c >= 0.0) {
        return Err(Error::invalid("erdos_renyi requires c >= 0"));
    }
    let p = c / n as f64;
    if p > 1.0 {
        return Err(Error::invalid(format!("c/n = {p} exceeds 1")));
    }
    let total = (n as u64) * (n as u64 - 1) / 2;
    let mut edges = Vec::new();
    if p >= 1.0 {
        for k in 0..total {
            let (i, j) = pair_from_index(n, k);
            edges.push((i, j, 1.0));
        }
        return MeetingModel::new(n, edges);
    }
    if p > 0.0 {
        let gap =
            Geometric::new(p).map_err(|e| Error::invalid(format!("geometric parameter: {e}")))?;
        let mut cursor: u64 = 0;
        loop {
            let skip = gap.sample(rng);
            cursor = match cursor.checked_add(skip) {
                Some(x) => x,
                None => break,
            };
            if cursor >= total {
                break;
            }
            let (i, j) = pair_from_index(n, cursor);
            edges.push((i, j, 1.0));
            cursor += 1;
        }
    }
    MeetingModel::new(n, edges)
}

/// All pairs on the discrete torus Z^d_m with rate dist^{-alpha}, where dist
/// is the Euclidean norm of the coordinate-wise shortest wraparound
/// displacement.
pub fn torus_power_law(m: usize, d: usize, alpha: f64) -> Result<MeetingModel> {
    if m < 2 {
        return Err(Error::invalid("torus_power_law requires m >= 2"));
    }
    if !(1..=3).contains(&d) {
        return Err(Error::invalid("torus_power_law requires d in {1,2,3}"));
    }
    if !(alpha > 0.0) {
        return Err(Error::invalid("torus_power_law requires alpha > 0"));
    }
    let n = m.pow(d as u32);
    if n > MAX_VERTICES {
        return Err(Error::invalid(format!("torus too large: {n} vertices")));
    }
    let coords = |mut v: usize| -> [usize; 3] {
        let mut c = [0usize; 3];
        for ci in c.iter_mut().take(d) {
            *ci = v % m;
            v /= m;
        }
        c
    };
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        let ci = coords(i);
        for j in (i + 1)..n {
            let cj = coords(j);
            let mut dist2 = 0.0f64;
            for axis in 0..d {
                let diff = ci[axis].abs_diff(cj[axis]);
                let wrap = diff.min(m - diff) as f64;
                dist2 += wrap * wrap;
            }
            edges.push((i, j, dist2.sqrt().powf(-alpha)));
        }
    }
    MeetingModel::new(n, edges)
}

fn tree_from_child_counts(
    counts: impl Fn(usize, usize) -> usize,
    depth: usize,
) -> Result<MeetingModel> {
    // Breadth-first numbering, root = 0; counts(vertex, level) children each.
    let mut edges = Vec::new();
    let mut level: Vec<usize> = vec![0];
    let mut next_id = 1usize;
    for lvl in 0..depth {
        let mut next_level = Vec::new();
        for &v in &level {
            for _ in 0..counts(v, lvl) {
                if next_id > MAX_VERTICES {
                    return Err(Error::invalid("tree exceeds 10^7 vertices"));
                }
                edges.push((v, next_id, 1.0));
                next_level.push(next_id);
                next_id += 1;
            }
        }
        level = next_level;
    }
    MeetingModel::new(next_id, edges)
}

/// d-ary tree truncated at `depth` levels below the root, unit rates.
pub fn dary_tree(d: usize, depth: usize) -> Result<MeetingModel> {
    if d == 0 {
        return Err(Error::invalid("dary_tree requires d >= 1"));
    }
    // Size guard before building: (d^(depth+1)-1)/(d-1) vertices.
    let mut size: usize = 1;
    let mut layer: usize = 1;
    for _ in 0..depth {
        layer = layer.saturating_mul(d);
        size = size.saturating_add(layer);
        if size > MAX_VERTICES {
            return Err(Error::invalid("dary_tree exceeds 10^7 vertices"));
        }
    }
    tree_from_child_counts(|_, _| d, depth)
}

/// Root with r subtrees, each (r-1)-ary, truncated at depth-1 below the
/// root's children.
pub fn regular_tree(r: usize, depth: usize) -> Result<MeetingModel> {
    if r < 2 {
        return Err(Error::invalid("regular_tree requires r >= 2"));
    }
    if depth < 1 {
        return Err(Error::invalid("regular_tree requires depth >= 1"));
    }
    let mut size: usize = 1 + r;
    let mut layer = r;
    for _ in 1..depth {
        layer = layer.saturating_mul(r - 1);
        size = size.saturating_add(layer);
        if size > MAX_VERTICES {
            return Err(Error::invalid("regular_tree exceeds 10^7 vertices"));
        }
    }
    tree_from_child_counts(move |_, lvl| if lvl == 0 { r } else { r - 1 }, depth)
}

/// Random Galton-Watson tree, sampled level by level and truncated at
/// `depth`; boundary vertices have no children.
pub fn galton_watson_tree(
    offspring: &GwOffspring,
    depth: usize,
    rng: &mut Rng,
) -> Result<MeetingModel> {
    let mut edges = Vec::new();
    let mut level: Vec<usize> = vec![0];
    let mut next_id = 1usize;
    for _ in 0..depth {
        let mut next_level = Vec::new();
        for &v in &level {
            let kids = offspring.sample(rng);
            for _ in 0..kids {
                if next_id > MAX_VERTICES {
                    return Err(Error::invalid("galton_watson_tree exceeds 10^7 vertices"));
                }
                edges.push((v, next_id, 1.0));
                next_level.push(next_id);
                next_id += 1;
            }
        }
        level = next_level;
    }
    MeetingModel::new(next_id, edges)
}

/// Simple r-regular graph from the configuration model. Non-simple pairings
/// are repaired by random double-edge swaps until no self-loops or
/// multi-edges remain.
pub fn random_regular_graph(n: usize, r: usize, rng: &mut Rng) -> Result<MeetingModel> {
    if r < 3 {
        return Err(Error::invalid("random_regular_graph requires r >= 3"));
    }
    if n <= r {
        return Err(Error::invalid("random_regular_graph requires n > r"));
    }
    if !(n * r).is_multiple_of(2) {
        return Err(Error::invalid("n*r must be even"));
    }
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, r)).collect();
    stubs.shuffle(rng);
    let mut edges: Vec<(usize, usize)> = stubs.chunks(2).map(|c| (c[0], c[1])).collect();
    let mut counts: HashMap<(usize, usize), u32> = HashMap::new();
    let norm = |u: usize, v: usize| if u < v { (u, v) } else { (v, u) };
    for &(u, v) in &edges {
        *counts.entry(norm(u, v)).or_insert(0) += 1;
    }
    let is_bad = |counts: &HashMap<(usize, usize), u32>, u: usize, v: usize| {
        u == v || counts[&norm(u, v)] > 1
    };
    loop {
        let bad: Vec<usize> = (0..edges.len())
            .filter(|&e| is_bad(&counts, edges[e].0, edges[e].1))
            .collect();
        if bad.is_empty() {
            break;
        }
        for &a in &bad {
            let (u, v) = edges[a];
            if !is_bad(&counts, u, v) {
                continue; // already repaired by an earlier swap this pass
            }
            loop {
                let b = rng.gen_range(0..edges.len());
                if b == a {
                    continue;
                }
                let (mut x, mut y) = edges[b];
                if rng.gen::<bool>() {
                    std::mem::swap(&mut x, &mut y);
                }
                // Propose (u,x), (v,y) replacing (u,v), (x,y).
                if u == x || v == y {
                    continue;
                }
                if counts.get(&norm(u, x)).copied().unwrap_or(0) > 0
                    || counts.get(&norm(v, y)).copied().unwrap_or(0) > 0
                {
                    continue;
                }
                *counts.get_mut(&norm(u, v)).unwrap() -= 1;
                *counts.get_mut(&norm(x, y)).unwrap() -= 1;
                *counts.entry(norm(u, x)).or_insert(0) += 1;
                *counts.entry(norm(v, y)).or_insert(0) += 1;
                edges[a] = (u, x);
                edges[b] = (v, y);
                break;
            }
        }
    }
    MeetingModel::new(n, edges.into_iter().map(|(u, v)| (u, v, 1.0)).collect())
}

/// True iff the positive-rate graph is connected (BFS).
pub fn is_connected(model: &MeetingModel) -> bool {
    let n = model.n();
    if n == 1 {
        return true;
    }
    let adj = model.adjacency();
    let mut seen = vec![false; n];
    let mut queue = std::collections::VecDeque::from([0usize]);
    seen[0] = true;
    let mut visited = 1usize;
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                visited += 1;
                queue.push_back(w);
            }
        }
    }
    visited == n
}

/// Acyclic and connected, i.e. a tree on all n vertices.
pub fn is_tree(model: &MeetingModel) -> bool {
    model.edges().len() == model.n() - 1 && is_connected(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn complete_graph_edge_counts() {
        assert_eq!(complete_graph(1, 1.0).unwrap().edges().len(), 0);
        assert_eq!(complete_graph(3, 1.0).unwrap().edges().len(), 3);
        let m = complete_graph(5, 2.0).unwrap();
        assert_eq!(m.edges().len(), 10); // C(5,2) by hand
        assert!(m.edges().iter().all(|&(_, _, r)| r == 2.0));
        assert!(complete_graph(0, 1.0).is_err());
    }

    #[test]
    fn from_edge_list_cases() {
        let m = from_edge_list(2, &[(0, 1)]).unwrap();
        assert_eq!(m.edges(), &[(0, 1, 1.0)]);
        let path = from_edge_list(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(path.edges().len(), 2);
        assert!(!path.edges().iter().any(|&(i, j, _)| (i, j) == (0, 2)));
        // (1,0) normalizes onto (0,1): duplicate
        assert!(from_edge_list(4, &[(0, 1), (1, 0)]).is_err());
        assert!(from_edge_list(2, &[(0, 2)]).is_err());
        assert!(from_edge_list(2, &[(1, 1)]).is_err());
    }

    #[test]
    fn ring_of_near_cliques_regular_connected() {
        // blocks K_3 minus an edge cycled: a 6-cycle, (r-1)-regular
        let m = ring_of_near_cliques(3, 2).unwrap();
        assert_eq!(m.n(), 6);
        assert!(m.degrees().iter().all(|&d| d == 2));
        assert!(is_connected(&m));

        let m = ring_of_near_cliques(4, 3).unwrap();
        assert_eq!(m.n(), 12);
        assert_eq!(m.edges().len(), 18); // k(C(r,2) - 1) + k
        assert!(m.degrees().iter().all(|&d| d == 3));
        assert!(is_connected(&m));

        assert!(ring_of_near_cliques(3, 1).is_err());
        assert!(ring_of_near_cliques(2, 2).is_err());
    }

    #[test]
    fn erdos_renyi_degenerate_cases() {
        let mut rng = stream(1, 0);
        assert_eq!(erdos_renyi(10, 0.0, &mut rng).unwrap().edges().len(), 0);
        // c/n = 1: the single pair is present with probability 1
        assert_eq!(erdos_renyi(2, 2.0, &mut rng).unwrap().edges().len(), 1);
        assert!(erdos_renyi(2, 3.0, &mut rng).is_err());
    }

    #[test]
    fn erdos_renyi_edge_count_binomial() {
        // n=10^4, c=1: mean C(n,2)/n ~ 4999.75, sd ~ 70.7
        let mut rng = stream(42, 0);
        let m = erdos_renyi(10_000, 1.0, &mut rng).unwrap();
        let mean = 4999.75;
        let sd = (4999.75f64 * (1.0 - 1e-4)).sqrt();
        let count = m.edges().len() as f64;
        assert!(
            (count - mean).abs() < 4.0 * sd,
            "edge count {count} too far from {mean}"
        );
    }

    #[test]
    fn pair_index_roundtrip() {
        let n = 57;
        let mut k = 0u64;
        for i in 0..n {
            for j in (i + 1)..n {
                assert_eq!(pair_from_index(n, k), (i, j));
                k += 1;
            }
        }
    }

    #[test]
    fn torus_rates() {
        let m = torus_power_law(2, 1, 2.0).unwrap();
        assert_eq!(m.edges(), &[(0, 1, 1.0)]);

        let m = torus_power_law(4, 1, 2.0).unwrap();
        let rate = |a: usize, b: usize| {
            m.edges()
                .iter()
                .find(|&&(i, j, _)| (i, j) == (a, b))
                .unwrap()
                .2
        };
        assert!((rate(0, 2) - 0.25).abs() < 1e-15); // wraparound distance 2

        let m = torus_power_law(3, 2, 3.0).unwrap();
        // diagonal neighbors at distance sqrt(2): rate 2^{-3/2}
        let r = m
            .edges()
            .iter()
            .find(|&&(i, j, _)| (i, j) == (0, 4))
            .unwrap()
            .2;
        assert!((r - 2f64.powf(-1.5)).abs() < 1e-15);

        assert!(torus_power_law(4, 1, 0.0).is_err());
        // alpha <= d is permitted
        assert!(torus_power_law(4, 2, 1.0).is_ok());
    }

    #[test]
    fn torus_translation_invariance() {
        let m = torus_power_law(5, 2, 2.5).unwrap();
        let side = 5;
        let rate_of = |a: usize, b: usize| {
            let (a, b) = if a < b { (a, b) } else { (b, a) };
            m.edges()
                .iter()
                .find(|&&(i, j, _)| (i, j) == (a, b))
                .unwrap()
                .2
        };
        let shift = |v: usize, dx: usize, dy: usize| {
            let (x, y) = (v % side, v / side);
            ((x + dx) % side) + ((y + dy) % side) * side
        };
        for &(i, j, r) in m.edges().iter().take(40) {
            for &(dx, dy) in &[(1, 0), (0, 2), (3, 4)] {
                assert!((rate_of(shift(i, dx, dy), shift(j, dx, dy)) - r).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn tree_generators() {
        let m = dary_tree(2, 0).unwrap();
        assert_eq!((m.n(), m.edges().len()), (1, 0));
        let m = dary_tree(2, 2).unwrap();
        assert_eq!((m.n(), m.edges().len()), (7, 6));
        let m = dary_tree(3, 3).unwrap();
        assert_eq!(m.n(), 40); // (3^4 - 1)/2
        assert!(is_tree(&m));

        let m = regular_tree(2, 1).unwrap();
        assert_eq!((m.n(), m.edges().len()), (3, 2)); // path of 3
        let m = regular_tree(3, 1).unwrap();
        assert_eq!(m.n(), 4); // star K_{1,3}
        assert_eq!(m.degrees()[0], 3);
        let m = regular_tree(3, 2).unwrap();
        assert_eq!(m.n(), 10); // root + 3 + 6
        assert!(is_tree(&m));

        assert!(dary_tree(10, 10).is_err()); // > 10^7 vertices
    }

    #[test]
    fn galton_watson_degenerate() {
        let mut rng = stream(3, 0);
        let dead = GwOffspring::new(vec![1.0]).unwrap();
        let m = galton_watson_tree(&dead, 5, &mut rng).unwrap();
        assert_eq!(m.n(), 1);

        let binary = GwOffspring::new(vec![0.0, 0.0, 1.0]).unwrap();
        let m = galton_watson_tree(&binary, 2, &mut rng).unwrap();
        assert_eq!(m.n(), 7);
        assert!(is_tree(&m));
    }

    #[test]
    fn galton_watson_poisson_mean_size() {
        // E size = depth+1 = 11 for unit-mean offspring
        let off = GwOffspring::poisson(1.0).unwrap();
        let reps = 4000;
        let mut total = 0usize;
        for rep in 0..reps {
            let mut rng = stream(17, rep);
            total += galton_watson_tree(&off, 10, &mut rng).unwrap().n();
        }
        let mean = total as f64 / reps as f64;
        assert!((mean - 11.0).abs() < 0.5, "mean tree size {mean}");
    }

    #[test]
    fn gw_offspring_validation() {
        assert!(GwOffspring::new(vec![0.5, 0.4]).is_err());
        assert!(GwOffspring::new(vec![1.1, -0.1]).is_err());
        assert!(GwOffspring::new(vec![0.25, 0.5, 0.25]).is_ok());
    }

    #[test]
    fn random_regular_cases() {
        let mut rng = stream(9, 0);
        let m = random_regular_graph(4, 3, &mut rng).unwrap();
        assert_eq!(m.edges().len(), 6); // K_4 is the unique simple 3-regular graph on 4 vertices
        assert!(m.degrees().iter().all(|&d| d == 3));

        let m = random_regular_graph(10, 3, &mut rng).unwrap();
        assert!(m.degrees().iter().all(|&d| d == 3));

        for s in 0..20 {
            let mut rng = stream(100, s);
            let m = random_regular_graph(6, 3, &mut rng).unwrap();
            assert_eq!(m.edges().len(), 9); // nr/2
            assert!(m.degrees().iter().all(|&d| d == 3));
        }

        assert!(random_regular_graph(5, 3, &mut stream(0, 0)).is_err()); // parity
        assert!(random_regular_graph(3, 3, &mut stream(0, 0)).is_err());
    }

    #[test]
    fn connectivity() {
        assert!(is_connected(&complete_graph(5, 1.0).unwrap()));
        assert!(!is_connected(&from_edge_list(3, &[(0, 1)]).unwrap()));
        let mut rng = stream(5, 0);
        assert!(!is_connected(&erdos_renyi(100, 0.0, &mut rng).unwrap()));
    }

    #[test]
    fn text_roundtrip() {
        let m = ring_of_near_cliques(3, 2).unwrap();
        let text = m.to_text();
        assert!(text.starts_with("n 6\n"));
        let back = MeetingModel::from_text(&text).unwrap();
        assert_eq!(m, back);
    }
}
