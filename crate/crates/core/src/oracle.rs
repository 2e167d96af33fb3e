//! Exact ground truth: brute-force tree containment, degree-hypothesis
//! checks, exhaustive small-order conjecture verification, and the
//! deterministic generators and enumerators backing the test suites.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rat::{ceil_usize, nat, rat, Rat};
use crate::tree::{RootedTree, Vertex};

// ───────────────────────── containment ─────────────────────────

/// Exhaustive search for an injective edge-preserving copy of the tree.
///
/// Tree vertices are placed in breadth-first order from the root, each at
/// the smallest feasible host vertex; a candidate is skipped when its host
/// degree cannot accommodate the tree vertex's neighbors.
pub fn contains_tree(g: &Graph, t: &RootedTree) -> Option<BTreeMap<Vertex, Vertex>> {
    if t.n() > g.n() {
        return None;
    }
    let mut order = Vec::with_capacity(t.n());
    let mut queue = std::collections::VecDeque::from([t.root()]);
    while let Some(v) = queue.pop_front() {
        order.push(v);
        queue.extend(t.children(v).iter().copied());
    }
    let cap = t.vertices().iter().max().unwrap() + 1;
    let mut phi: Vec<Option<Vertex>> = vec![None; cap];
    let mut used = vec![false; g.n()];
    if !place(g, t, &order, 0, &mut phi, &mut used) {
        return None;
    }
    let witness: BTreeMap<Vertex, Vertex> = t
        .vertices()
        .iter()
        .map(|&v| (v, phi[v].expect("complete embedding")))
        .collect();
    check_witness(g, t, &witness).expect("search produced an invalid witness");
    Some(witness)
}

fn place(
    g: &Graph,
    t: &RootedTree,
    order: &[Vertex],
    i: usize,
    phi: &mut Vec<Option<Vertex>>,
    used: &mut Vec<bool>,
) -> bool {
    if i == order.len() {
        return true;
    }
    let u = order[i];
    let need = t.degree(u);
    let try_host = |h: Vertex, phi: &mut Vec<Option<Vertex>>, used: &mut Vec<bool>| {
        if used[h] || g.deg(h) < need {
            return false;
        }
        phi[u] = Some(h);
        used[h] = true;
        if place(g, t, order, i + 1, phi, used) {
            return true;
        }
        phi[u] = None;
        used[h] = false;
        false
    };
    match t.parent(u) {
        None => (0..g.n()).any(|h| try_host(h, phi, used)),
        Some(p) => {
            let hp = phi[p].expect("parent placed before child");
            g.neighbors(hp).any(|h| try_host(h, phi, used))
        }
    }
}

/// Confirms a containment witness: total, injective, edge-preserving.
pub fn check_witness(g: &Graph, t: &RootedTree, w: &BTreeMap<Vertex, Vertex>) -> Result<()> {
    let mut images = BTreeSet::new();
    for &v in t.vertices() {
        let Some(&h) = w.get(&v) else {
            return Err(Error::contract(format!("tree vertex {v} is unmapped")));
        };
        if h >= g.n() {
            return Err(Error::contract(format!("image {h} outside the host")));
        }
        if !images.insert(h) {
            return Err(Error::contract(format!("image {h} used twice")));
        }
    }
    for &v in t.vertices() {
        if let Some(p) = t.parent(v) {
            if !g.has_edge(w[&v], w[&p]) {
                return Err(Error::contract(format!(
                    "tree edge ({p},{v}) maps to the non-edge ({},{})",
                    w[&p], w[&v]
                )));
            }
        }
    }
    Ok(())
}

// ───────────────────────── hypothesis checks ─────────────────────────

/// Do at least (1/2+α)n vertices have degree at least (1+α)k?
pub fn meets_degree_hypothesis(g: &Graph, k: usize, alpha: Rat) -> bool {
    let deg_threshold = (nat(1) + alpha) * nat(k);
    let count = (0..g.n())
        .filter(|&v| nat(g.deg(v)) >= deg_threshold)
        .count();
    nat(count) >= (rat(1, 2) + alpha) * nat(g.n())
}

/// Per-clause verdict on the degree-capped class membership.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmallClassReport {
    /// Neighbors of vertices of degree > ⌈(1+2η)k⌉ stay at degree ≤ that cap.
    pub high_cap_pass: bool,
    pub high_cap_witness: Option<(Vertex, Vertex)>,
    /// Neighbors of vertices of degree < (1+η)k have degree exactly ⌈(1+η)k⌉.
    pub low_exact_pass: bool,
    pub low_exact_witness: Option<(Vertex, Vertex)>,
    /// e(G) ≤ kn.
    pub edge_bound_pass: bool,
    pub edge_count: usize,
}

pub fn small_class_check(g: &Graph, k: usize, eta: Rat) -> SmallClassReport {
    let cap = ceil_usize((nat(1) + eta + eta) * nat(k));
    let low = (nat(1) + eta) * nat(k);
    let exact = ceil_usize(low);
    let mut high_cap_witness = None;
    let mut low_exact_witness = None;
    'outer: for v in 0..g.n() {
        if g.deg(v) <= cap {
            continue;
        }
        for u in g.neighbors(v) {
            if g.deg(u) > cap {
                high_cap_witness = Some((v, u));
                break 'outer;
            }
        }
    }
    'outer: for v in 0..g.n() {
        if nat(g.deg(v)) >= low {
            continue;
        }
        for u in g.neighbors(v) {
            if g.deg(u) != exact {
                low_exact_witness = Some((v, u));
                break 'outer;
            }
        }
    }
    let edge_count = g.edge_count();
    SmallClassReport {
        high_cap_pass: high_cap_witness.is_none(),
        high_cap_witness,
        low_exact_pass: low_exact_witness.is_none(),
        low_exact_witness,
        edge_bound_pass: edge_count <= k * g.n(),
        edge_count,
    }
}

// ───────────────────────── tree enumeration ─────────────────────────

/// Canonical parenthesis code: children codes sorted by (length, text).
fn wrap_children(mut codes: Vec<String>) -> String {
    codes.sort_by(|a, b| (a.len(), a.as_str()).cmp(&(b.len(), b.as_str())));
    let mut out = String::from("(");
    for c in &codes {
        out.push_str(c);
    }
    out.push(')');
    out
}

/// All canonical codes of rooted trees with exactly `n` vertices, for each
/// n up to the bound: children are chosen as a non-increasing sequence of
/// (size, code-rank) keys, so each multiset appears once.
fn rooted_codes(n_max: usize) -> Vec<Vec<String>> {
    let mut all: Vec<Vec<String>> = vec![Vec::new(); n_max + 1];
    if n_max >= 1 {
        all[1].push("()".to_string());
    }
    for n in 2..=n_max {
        let mut out = Vec::new();
        let mut chosen: Vec<(usize, usize)> = Vec::new();
        descend(&all, n - 1, (n - 1, usize::MAX), &mut chosen, &mut out);
        out.sort();
        all[n] = out;
    }
    all
}

fn descend(
    all: &[Vec<String>],
    budget: usize,
    max_key: (usize, usize),
    chosen: &mut Vec<(usize, usize)>,
    out: &mut Vec<String>,
) {
    if budget == 0 {
        let codes = chosen.iter().map(|&(s, i)| all[s][i].clone()).collect();
        out.push(wrap_children(codes));
        return;
    }
    for s in (1..=budget.min(max_key.0)).rev() {
        let top = if s == max_key.0 {
            max_key.1.min(all[s].len().saturating_sub(1))
        } else {
            all[s].len() - 1
        };
        for i in (0..=top).rev() {
            chosen.push((s, i));
            descend(all, budget - s, (s, i), chosen, out);
            chosen.pop();
        }
    }
}

/// Parses a canonical code into a child-list adjacency; returns the root.
fn code_to_tree(code: &str) -> (usize, Vec<Vec<usize>>) {
    let mut children: Vec<Vec<usize>> = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    let mut root = 0;
    for ch in code.chars() {
        match ch {
            '(' => {
                let id = children.len();
                children.push(Vec::new());
                if let Some(&p) = stack.last() {
                    children[p].push(id);
                } else {
                    root = id;
                }
                stack.push(id);
            }
            ')' => {
                stack.pop();
            }
            _ => unreachable!("codes contain only parentheses"),
        }
    }
    (root, children)
}

/// Canonical rooted code of the tree at `v`, over undirected adjacency.
fn code_at(adj: &[Vec<usize>], v: usize, parent: Option<usize>) -> String {
    let codes = adj[v]
        .iter()
        .filter(|&&u| Some(u) != parent)
        .map(|&u| code_at(adj, u, Some(v)))
        .collect();
    wrap_children(codes)
}

fn subtree_sizes(adj: &[Vec<usize>], v: usize, parent: Option<usize>, size: &mut [usize]) {
    size[v] = 1;
    for &u in &adj[v] {
        if Some(u) != parent {
            subtree_sizes(adj, u, Some(v), size);
            size[v] += size[u];
        }
    }
}

/// The one or two vertices minimizing the largest component after removal.
fn centroids(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut size = vec![0usize; n];
    subtree_sizes(adj, 0, None, &mut size);
    let weight = |v: usize| {
        let mut w = n - size[v];
        for &u in &adj[v] {
            if size[u] < size[v] {
                w = w.max(size[u]);
            }
        }
        w
    };
    let best = (0..n).map(weight).min().unwrap();
    (0..n).filter(|&v| weight(v) == best).collect()
}

/// One rooted tree per isomorphism class of trees on `n` vertices, each
/// rooted at a centroid, in ascending order of canonical code.
pub fn enumerate_trees(n: usize) -> Result<Vec<RootedTree>> {
    if n == 0 || n > 10 {
        return Err(Error::input(format!("enumerate_trees handles 1..=10, got {n}")));
    }
    let rooted = rooted_codes(n);
    let mut classes: BTreeSet<String> = BTreeSet::new();
    for code in &rooted[n] {
        let (root, children) = code_to_tree(code);
        let mut adj = vec![Vec::new(); n];
        for (p, ch) in children.iter().enumerate() {
            for &c in ch {
                adj[p].push(c);
                adj[c].push(p);
            }
        }
        debug_assert_eq!(code_at(&adj, root, None), *code);
        let canonical = centroids(&adj)
            .into_iter()
            .map(|c| code_at(&adj, c, None))
            .min()
            .unwrap();
        classes.insert(canonical);
    }
    let mut out = Vec::new();
    for code in &classes {
        let (root, children) = code_to_tree(code);
        let edges: Vec<(Vertex, Vertex)> = children
            .iter()
            .enumerate()
            .flat_map(|(p, ch)| ch.iter().map(move |&c| (p, c)))
            .collect();
        debug_assert_eq!(root, 0);
        out.push(RootedTree::from_edges(n, 0, &edges)?);
    }
    Ok(out)
}

// ───────────────────────── conjecture sweep ─────────────────────────

#[derive(Clone, Debug)]
pub struct Counterexample {
    pub graph: Graph,
    pub k: usize,
    pub tree: RootedTree,
}

/// Outcome of the exhaustive sweep; `counterexamples` is empty exactly
/// when the conjecture holds on the whole swept range.
#[derive(Clone, Debug)]
pub struct ConjectureReport {
    pub n_max: usize,
    pub graphs_swept: u64,
    pub instances_checked: u64,
    pub hypothesis_skipped: u64,
    pub counterexamples: Vec<Counterexample>,
}

#[derive(Default)]
struct SweepAcc {
    checked: u64,
    skipped: u64,
    ces: Vec<(Vec<u8>, usize, usize)>,
}

impl SweepAcc {
    fn merge(mut self, other: SweepAcc) -> SweepAcc {
        self.checked += other.checked;
        self.skipped += other.skipped;
        self.ces.extend(other.ces);
        self
    }
}

/// Checks, for every labeled graph on up to `n_max` vertices and every
/// k ≤ n: if at least n/2 vertices have degree more than k−2, then every
/// tree of order k embeds.
pub fn verify_conjecture_range(n_max: usize) -> Result<ConjectureReport> {
    if n_max == 0 || n_max > 7 {
        return Err(Error::input(format!("sweep handles n_max in 1..=7, got {n_max}")));
    }
    let trees_by_k: Vec<Vec<RootedTree>> = (0..=n_max)
        .map(|k| if k == 0 { Ok(Vec::new()) } else { enumerate_trees(k) })
        .collect::<Result<_>>()?;
    let mut report = ConjectureReport {
        n_max,
        graphs_swept: 0,
        instances_checked: 0,
        hypothesis_skipped: 0,
        counterexamples: Vec::new(),
    };
    for n in 1..=n_max {
        let pairs: Vec<(Vertex, Vertex)> =
            (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        let total: u64 = 1 << pairs.len();
        let acc = (0..total)
            .into_par_iter()
            .fold(SweepAcc::default, |mut acc, mask| {
                let edges: Vec<(Vertex, Vertex)> = pairs
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, &e)| e)
                    .collect();
                let g = Graph::new(n, &edges).expect("mask edges are well-formed");
                for k in 1..=n {
                    let high = (0..n).filter(|&v| g.deg(v) + 2 > k).count();
                    if 2 * high < n {
                        acc.skipped += 1;
                        continue;
                    }
                    for (ti, t) in trees_by_k[k].iter().enumerate() {
                        acc.checked += 1;
                        if contains_tree(&g, t).is_none() {
                            acc.ces.push((g.serialize().into_bytes(), k, ti));
                        }
                    }
                }
                acc
            })
            .reduce(SweepAcc::default, SweepAcc::merge);
        report.graphs_swept += total;
        report.instances_checked += acc.checked;
        report.hypothesis_skipped += acc.skipped;
        let mut ces = acc.ces;
        ces.sort();
        for (ser, k, ti) in ces {
            report.counterexamples.push(Counterexample {
                graph: Graph::parse(std::str::from_utf8(&ser).unwrap())?,
                k,
                tree: trees_by_k[k][ti].clone(),
            });
        }
    }
    Ok(report)
}

// ───────────────────────── generators ─────────────────────────

/// Uniform random labeled tree on n vertices, rooted at 0.
pub fn gen_random_tree(n: usize, seed: u64) -> Result<RootedTree> {
    if n == 0 {
        return Err(Error::input("a tree needs at least one vertex"));
    }
    if n == 1 {
        return RootedTree::from_edges(1, 0, &[]);
    }
    let mut rng = crate::rng::seeded(seed);
    let seq: Vec<usize> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
    let mut deg = vec![1usize; n];
    for &a in &seq {
        deg[a] += 1;
    }
    let mut leaves: BTreeSet<usize> = (0..n).filter(|&v| deg[v] == 1).collect();
    let mut edges = Vec::with_capacity(n - 1);
    for &a in &seq {
        let leaf = *leaves.iter().next().expect("a leaf always remains");
        leaves.remove(&leaf);
        edges.push((leaf, a));
        deg[a] -= 1;
        if deg[a] == 1 {
            leaves.insert(a);
        }
    }
    let rest: Vec<usize> = leaves.into_iter().collect();
    debug_assert_eq!(rest.len(), 2);
    edges.push((rest[0], rest[1]));
    RootedTree::from_edges(n, 0, &edges)
}

/// Random graph satisfying the degree hypothesis for (k, α): a planted
/// core of ⌈(1/2+α)n⌉ vertices raised to degree ⌈(1+α)k⌉, plus sprinkled
/// random edges.
pub fn gen_hypothesis_graph(n: usize, k: usize, alpha: Rat, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(Error::input("graph needs at least one vertex"));
    }
    if alpha < nat(0) {
        return Err(Error::input("alpha must be nonnegative"));
    }
    let d_star = ceil_usize((nat(1) + alpha) * nat(k));
    if d_star + 1 > n {
        return Err(Error::input(format!(
            "core degree {d_star} is unreachable on {n} vertices"
        )));
    }
    let core = ceil_usize((rat(1, 2) + alpha) * nat(n)).min(n);
    let mut rng = crate::rng::seeded(seed);
    let mut edges: BTreeSet<(Vertex, Vertex)> = BTreeSet::new();
    let mut deg = vec![0usize; n];
    let key = |u: Vertex, v: Vertex| (u.min(v), u.max(v));
    for v in 0..core {
        if deg[v] >= d_star {
            continue;
        }
        let mut cands: Vec<Vertex> =
            (0..n).filter(|&u| u != v && !edges.contains(&key(u, v))).collect();
        cands.shuffle(&mut rng);
        for u in cands {
            if deg[v] >= d_star {
                break;
            }
            edges.insert(key(u, v));
            deg[u] += 1;
            deg[v] += 1;
        }
    }
    for _ in 0..n {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u != v {
            edges.insert(key(u, v));
        }
    }
    let edge_list: Vec<(Vertex, Vertex)> = edges.into_iter().collect();
    let g = Graph::new(n, &edge_list)?;
    debug_assert!(meets_degree_hypothesis(&g, k, alpha));
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{complete_bipartite, random_graph};
    use itertools::Itertools;

    /// Second containment check: all injections, coded independently of
    /// the backtracking search.
    fn permutation_contains(g: &Graph, t: &RootedTree) -> bool {
        if t.n() > g.n() {
            return false;
        }
        let tv: Vec<Vertex> = t.vertices().to_vec();
        let tree_edges: Vec<(usize, usize)> = tv
            .iter()
            .enumerate()
            .filter_map(|(i, &v)| {
                t.parent(v).map(|p| (i, tv.iter().position(|&x| x == p).unwrap()))
            })
            .collect();
        (0..g.n()).permutations(t.n()).any(|img| {
            tree_edges.iter().all(|&(a, b)| g.has_edge(img[a], img[b]))
        })
    }

    fn complete(n: usize) -> Graph {
        let edges: Vec<(Vertex, Vertex)> =
            (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        Graph::new(n, &edges).unwrap()
    }

    fn cycle(n: usize) -> Graph {
        let edges: Vec<(Vertex, Vertex)> = (0..n).map(|v| (v.min((v + 1) % n), v.max((v + 1) % n))).collect();
        let edges: Vec<_> = edges.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        Graph::new(n, &edges).unwrap()
    }

    #[test]
    fn path_embeds_in_triangle() {
        let g = complete(3);
        let t = crate::tree::path(3);
        let w = contains_tree(&g, &t).unwrap();
        check_witness(&g, &t, &w).unwrap();
    }

    #[test]
    fn wide_star_misses_cycle() {
        let g = cycle(5);
        let t = crate::tree::star(4);
        assert!(contains_tree(&g, &t).is_none());
    }

    #[test]
    fn containment_matches_permutation_oracle_exhaustively() {
        // All graphs on up to 4 vertices against all tree shapes that fit.
        for n in 1..=4usize {
            let pairs: Vec<(Vertex, Vertex)> =
                (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
            for mask in 0u32..1 << pairs.len() {
                let edges: Vec<_> = pairs
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, &e)| e)
                    .collect();
                let g = Graph::new(n, &edges).unwrap();
                for k in 1..=n {
                    for t in enumerate_trees(k).unwrap() {
                        assert_eq!(
                            contains_tree(&g, &t).is_some(),
                            permutation_contains(&g, &t),
                            "disagreement at n={n} mask={mask} k={k}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn containment_matches_permutation_oracle_on_random_graphs() {
        for seed in 0..40u64 {
            let n = 5 + (seed as usize) % 2;
            let g = random_graph(n, rat(2, 5), seed);
            for k in 2..=n {
                for t in enumerate_trees(k).unwrap() {
                    assert_eq!(
                        contains_tree(&g, &t).is_some(),
                        permutation_contains(&g, &t),
                        "disagreement at seed={seed} k={k}"
                    );
                }
            }
        }
    }

    #[test]
    fn hypothesis_holds_in_complete_graphs() {
        let g = complete(8);
        assert!(meets_degree_hypothesis(&g, 6, rat(1, 10)));
        assert!(!meets_degree_hypothesis(&Graph::empty(8), 1, rat(1, 10)));
        // k = 0 asks for nonnegative degrees only.
        assert!(meets_degree_hypothesis(&Graph::empty(8), 0, rat(0, 1)));
    }

    #[test]
    fn hypothesis_matches_direct_recount() {
        for seed in 0..30u64 {
            let g = random_graph(18, rat(1, 3), seed + 900);
            for k in [2usize, 5, 9] {
                for alpha in [rat(0, 1), rat(1, 10), rat(1, 4)] {
                    let thresh = (nat(1) + alpha) * nat(k);
                    let count =
                        (0..g.n()).filter(|&v| nat(g.deg(v)) >= thresh).count();
                    let expect = nat(2 * count) >= (nat(1) + alpha + alpha) * nat(g.n());
                    assert_eq!(meets_degree_hypothesis(&g, k, alpha), expect);
                }
            }
        }
    }

    #[test]
    fn regular_bipartite_passes_low_degree_clause() {
        // K_{6,6} is 6-regular; with k=5, η=1/5: ⌈(1+η)k⌉ = 6 exactly.
        let g = complete_bipartite(6, 6);
        let rep = small_class_check(&g, 5, rat(1, 5));
        assert!(rep.low_exact_pass);
        assert!(rep.high_cap_pass);
        assert!(rep.edge_bound_pass);
    }

    #[test]
    fn dense_complete_graph_fails_edge_bound() {
        let g = complete(12);
        let rep = small_class_check(&g, 2, rat(1, 10));
        assert!(!rep.edge_bound_pass);
        assert_eq!(rep.edge_count, 66);
    }

    #[test]
    fn small_class_clauses_match_definition_sweep() {
        for seed in 0..25u64 {
            let g = random_graph(14, rat(1, 4), seed + 40);
            let (k, eta) = (3usize, rat(1, 6));
            let rep = small_class_check(&g, k, eta);
            let cap = ceil_usize((nat(1) + eta + eta) * nat(k));
            let exact = ceil_usize((nat(1) + eta) * nat(k));
            // Edge-by-edge sweep instead of vertex-neighborhood loops.
            let mut high_ok = true;
            let mut low_ok = true;
            for (u, v) in g.edges() {
                if g.deg(u) > cap && g.deg(v) > cap {
                    high_ok = false;
                }
                for (a, b) in [(u, v), (v, u)] {
                    if nat(g.deg(a)) < (nat(1) + eta) * nat(k) && g.deg(b) != exact {
                        low_ok = false;
                    }
                }
            }
            assert_eq!(rep.high_cap_pass, high_ok);
            assert_eq!(rep.low_exact_pass, low_ok);
            assert_eq!(rep.edge_bound_pass, g.edge_count() <= k * g.n());
        }
    }

    #[test]
    fn tree_class_counts_are_exact() {
        let expected = [1usize, 1, 1, 2, 3, 6, 11, 23, 47, 106];
        for (i, &want) in expected.iter().enumerate() {
            let n = i + 1;
            let trees = enumerate_trees(n).unwrap();
            assert_eq!(trees.len(), want, "class count at n={n}");
            for t in &trees {
                assert_eq!(t.n(), n);
                assert_eq!(t.root(), 0);
            }
        }
        assert!(enumerate_trees(0).is_err());
        assert!(enumerate_trees(11).is_err());
    }

    #[test]
    fn four_vertex_classes_are_path_and_star() {
        let trees = enumerate_trees(4).unwrap();
        let stats: Vec<usize> = trees.iter().map(|t| t.leaf_stats().leaves).collect();
        assert!(stats.contains(&2), "path present");
        assert!(stats.contains(&3), "star present");
    }

    /// |Aut| of the rooted tree at v: identical child subtrees commute.
    fn aut_rooted(adj: &[Vec<usize>], v: usize, parent: Option<usize>) -> u128 {
        let mut by_code: BTreeMap<String, (u128, u128)> = BTreeMap::new();
        for &u in &adj[v] {
            if Some(u) == parent {
                continue;
            }
            let entry = by_code.entry(code_at(adj, u, Some(v))).or_insert((0, 1));
            entry.0 += 1;
            entry.1 *= aut_rooted(adj, u, Some(v));
        }
        let mut aut = 1u128;
        for (count, inner) in by_code.values() {
            let mut fact = 1u128;
            for i in 1..=*count {
                fact *= i;
            }
            aut *= fact * inner;
        }
        aut
    }

    #[test]
    fn labeled_tree_totals_recovered_from_classes() {
        // Σ n!/|Aut(T)| over the classes equals the labeled count n^(n-2).
        for n in 1..=10usize {
            let mut total = 0u128;
            for t in enumerate_trees(n).unwrap() {
                let mut adj = vec![Vec::new(); n];
                for &v in t.vertices() {
                    if let Some(p) = t.parent(v) {
                        adj[v].push(p);
                        adj[p].push(v);
                    }
                }
                let cents = centroids(&adj);
                let aut = match cents.as_slice() {
                    [c] => aut_rooted(&adj, *c, None),
                    [c1, c2] => {
                        let a = aut_rooted(&adj, *c1, Some(*c2));
                        let b = aut_rooted(&adj, *c2, Some(*c1));
                        let swap =
                            code_at(&adj, *c1, Some(*c2)) == code_at(&adj, *c2, Some(*c1));
                        a * b * if swap { 2 } else { 1 }
                    }
                    _ => unreachable!("a tree has one or two centroids"),
                };
                let mut fact = 1u128;
                for i in 1..=n as u128 {
                    fact *= i;
                }
                assert_eq!(fact % aut, 0);
                total += fact / aut;
            }
            let labeled = if n <= 2 { 1 } else { (n as u128).pow(n as u32 - 2) };
            assert_eq!(total, labeled, "labeled total at n={n}");
        }
    }

    #[test]
    fn tiny_sweeps_have_no_counterexamples() {
        let rep = verify_conjecture_range(3).unwrap();
        assert_eq!(rep.n_max, 3);
        assert_eq!(rep.graphs_swept, 1 + 2 + 8);
        assert!(rep.counterexamples.is_empty());
        assert!(rep.instances_checked > 0);
        assert!(verify_conjecture_range(0).is_err());
        assert!(verify_conjecture_range(8).is_err());
    }

    #[test]
    fn five_vertex_sweep_is_clean() {
        let rep = verify_conjecture_range(5).unwrap();
        assert_eq!(rep.graphs_swept, 1 + 2 + 8 + 64 + 1024);
        assert!(rep.counterexamples.is_empty());
        // Hypothesis-violating pairs exist and are counted separately.
        assert!(rep.hypothesis_skipped > 0);
    }

    #[test]
    fn random_tree_generator_small_cases() {
        assert!(gen_random_tree(0, 0).is_err());
        let t1 = gen_random_tree(1, 5).unwrap();
        assert_eq!(t1.n(), 1);
        let t2 = gen_random_tree(2, 5).unwrap();
        assert_eq!(t2.n(), 2);
        assert_eq!(t2.degree(0), 1);
    }

    #[test]
    fn random_tree_generator_is_uniform_on_five_vertices() {
        // 125 labeled trees on 5 vertices; each should appear with
        // frequency 1/125 within 3σ over 10⁵ draws.
        let trials = 100_000usize;
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for seed in 0..trials {
            let t = gen_random_tree(5, seed as u64).unwrap();
            *counts.entry(t.serialize().unwrap()).or_default() += 1;
        }
        assert_eq!(counts.len(), 125);
        let mean = trials as f64 / 125.0;
        let sigma = (trials as f64 * (1.0 / 125.0) * (124.0 / 125.0)).sqrt();
        for (tree, &c) in &counts {
            assert!(
                (c as f64 - mean).abs() <= 3.0 * sigma,
                "tree {tree:?} appeared {c} times, expected {mean:.0} ± {:.0}",
                3.0 * sigma
            );
        }
    }

    #[test]
    fn hypothesis_graphs_pass_membership() {
        let g = gen_hypothesis_graph(40, 10, rat(1, 10), 3).unwrap();
        assert!(meets_degree_hypothesis(&g, 10, rat(1, 10)));
        for seed in 0..10u64 {
            let g = gen_hypothesis_graph(30, 7, rat(1, 8), seed).unwrap();
            assert!(meets_degree_hypothesis(&g, 7, rat(1, 8)));
        }
    }

    #[test]
    fn infeasible_generator_parameters_rejected() {
        // (1+α)k ≥ n: core degree cannot be reached.
        assert!(gen_hypothesis_graph(10, 10, rat(1, 10), 0).is_err());
        // k = 0, α = 0: anything qualifies.
        let g = gen_hypothesis_graph(6, 0, rat(0, 1), 0).unwrap();
        assert!(meets_degree_hypothesis(&g, 0, rat(0, 1)));
    }

    #[test]
    fn generator_is_deterministic() {
        let a = gen_hypothesis_graph(25, 6, rat(1, 5), 11).unwrap();
        let b = gen_hypothesis_graph(25, 6, rat(1, 5), 11).unwrap();
        assert_eq!(a.serialize(), b.serialize());
        let ta = gen_random_tree(50, 11).unwrap();
        let tb = gen_random_tree(50, 11).unwrap();
        assert_eq!(ta.serialize().unwrap(), tb.serialize().unwrap());
    }
}
