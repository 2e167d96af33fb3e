//! Elementary tree-embedding procedures.
//!
//! Every operation here takes locally checkable hypotheses (degrees,
//! densities, regularity-style conditions) and returns embeddings whose
//! postconditions are mechanically recheckable: injectivity, edge
//! preservation, and per-set placement constraints. Outputs are validated
//! before they are returned; a stalled greedy is surfaced as structured
//! evidence rather than a panic, because several hypotheses (regularity,
//! nowhere-density) can only be certified heuristically at this scale.

use std::collections::BTreeMap;

use crate::error::EmbedEvidence;
use crate::graph::{shadow_rat, DenseSpot, Graph, RegularizedMatching, matching_cover_check};
use crate::graph::{check_nowhere_dense, NowhereDenseVerdict, SearchBudget};
use crate::rat::{ceil_pow_3_4, nat, Rat};
use crate::rng::stream;
use crate::tree::{RootedTree, Vertex, VertexSet};
use crate::{Error, Result};
use rand::Rng;

// ───────────────────────── partial embeddings ─────────────────────────

/// A partial injective map from tree vertices to host vertices, together
/// with the placement constraints it is supposed to obey.
#[derive(Debug, Clone)]
pub struct PartialEmbedding<'a> {
    pub tree: &'a RootedTree,
    pub host: &'a Graph,
    pub map: BTreeMap<Vertex, Vertex>,
    /// Each entry (S, V) requires every mapped vertex of S to land in V.
    pub constraints: Vec<(VertexSet, VertexSet)>,
}

impl<'a> PartialEmbedding<'a> {
    pub fn new(tree: &'a RootedTree, host: &'a Graph) -> Self {
        PartialEmbedding { tree, host, map: BTreeMap::new(), constraints: Vec::new() }
    }

    pub fn image(&self, u: Vertex) -> Option<Vertex> {
        self.map.get(&u).copied()
    }

    /// Host vertices currently used as images.
    pub fn images(&self) -> VertexSet {
        self.map.values().copied().collect()
    }

    pub fn is_total(&self) -> bool {
        self.tree.vertices().iter().all(|&v| self.map.contains_key(&v))
    }

    /// Injectivity, edge preservation, and every placement constraint.
    pub fn validate(&self) -> Result<()> {
        let mut seen: BTreeMap<Vertex, Vertex> = BTreeMap::new();
        for (&u, &x) in &self.map {
            if !self.tree.has(u) {
                return Err(Error::contract(format!("mapped vertex {u} is not in the tree")));
            }
            if x >= self.host.n() {
                return Err(Error::contract(format!("image {x} of {u} is outside the host")));
            }
            if let Some(&prev) = seen.get(&x) {
                return Err(Error::contract(format!(
                    "not injective: {prev} and {u} both map to {x}"
                )));
            }
            seen.insert(x, u);
        }
        for (&u, &x) in &self.map {
            if let Some(p) = self.tree.parent(u) {
                if let Some(&px) = self.map.get(&p) {
                    if !self.host.has_edge(x, px) {
                        return Err(Error::contract(format!(
                            "edge {p}{u} maps to non-edge {px}{x}"
                        )));
                    }
                }
            }
        }
        for (i, (sub, target)) in self.constraints.iter().enumerate() {
            for u in sub.iter() {
                if let Some(x) = self.image(u) {
                    if !target.contains(x) {
                        return Err(Error::contract(format!(
                            "constraint {i}: vertex {u} maps to {x} outside its target"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Line format consumed by the CLI validator: one "u -> x" line per
    /// assignment, then one audit line per constraint.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (u, x) in &self.map {
            out.push_str(&format!("{u} -> {x}\n"));
        }
        for (sub, target) in &self.constraints {
            out.push_str(&format!(
                "constraint: {} -> {}\n",
                join(sub.as_slice()),
                join(target.as_slice())
            ));
        }
        out
    }
}

fn join(vs: &[Vertex]) -> String {
    if vs.is_empty() {
        return "-".into();
    }
    vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

/// Parses the serialization format back into a map and constraint list.
pub fn parse_embedding_text(
    text: &str,
) -> Result<(BTreeMap<Vertex, Vertex>, Vec<(VertexSet, VertexSet)>)> {
    let mut map = BTreeMap::new();
    let mut constraints = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = idx + 1;
        if line.is_empty() {
            continue;
        }
        let err = |msg: &str| Error::Parse { line: lineno, msg: msg.into() };
        if let Some(rest) = line.strip_prefix("constraint:") {
            let (lhs, rhs) = rest.split_once("->").ok_or_else(|| err("missing ->"))?;
            constraints.push((parse_set(lhs, lineno)?, parse_set(rhs, lineno)?));
        } else if !line.contains("->") && is_metadata(line) {
            // Report headers ("key: value") may share the file; skipped.
            continue;
        } else {
            let (lhs, rhs) = line.split_once("->").ok_or_else(|| err("missing ->"))?;
            let u: Vertex =
                lhs.trim().parse().map_err(|_| err("bad tree vertex"))?;
            let x: Vertex =
                rhs.trim().parse().map_err(|_| err("bad host vertex"))?;
            if map.insert(u, x).is_some() {
                return Err(err("duplicate assignment"));
            }
        }
    }
    Ok((map, constraints))
}

/// A "key: value" or "key=value" line whose key is a plain word.
fn is_metadata(line: &str) -> bool {
    line.split_once([':', '=']).is_some_and(|(key, _)| {
        !key.is_empty()
            && key
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == ' ')
    })
}

fn parse_set(text: &str, lineno: usize) -> Result<VertexSet> {
    let text = text.trim();
    if text == "-" {
        return Ok(VertexSet::new());
    }
    let mut out = VertexSet::new();
    for tok in text.split_whitespace() {
        let v: Vertex = tok
            .parse()
            .map_err(|_| Error::Parse { line: lineno, msg: format!("bad set entry '{tok}'") })?;
        out.insert(v);
    }
    Ok(out)
}

// ───────────────────────── greedy plumbing ─────────────────────────

/// Tree vertices in breadth-first order from the root, children ascending.
fn bfs_order(t: &RootedTree) -> Vec<Vertex> {
    let mut order = Vec::with_capacity(t.n());
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(t.root());
    while let Some(v) = queue.pop_front() {
        order.push(v);
        for &c in t.children(v) {
            queue.push_back(c);
        }
    }
    order
}

fn stuck(stage: &str, u: Vertex, pimg: Option<Vertex>, adjacent: usize, free: usize) -> Error {
    Error::Embed(EmbedEvidence {
        tree_vertex: u,
        parent_image: pimg,
        candidates_adjacent: adjacent,
        candidates_free: free,
        stage: stage.into(),
    })
}

/// Smallest unused neighbor of `pimg` inside `target`; evidence on failure.
fn greedy_child(
    host: &Graph,
    u: Vertex,
    pimg: Vertex,
    target: &[bool],
    used: &[bool],
    stage: &str,
) -> Result<Vertex> {
    let mut free = 0usize;
    let mut pick = None;
    for x in host.neighbors(pimg) {
        if target[x] && !used[x] {
            free += 1;
            if pick.is_none() {
                pick = Some(x);
            }
        }
    }
    pick.ok_or_else(|| stuck(stage, u, Some(pimg), host.deg(pimg), free))
}

fn check_in_host(g: &Graph, set: &VertexSet, name: &str) -> Result<()> {
    for v in set.iter() {
        if v >= g.n() {
            return Err(Error::input(format!("{name} contains {v}, host has {} vertices", g.n())));
        }
    }
    Ok(())
}

fn require(cond: bool, msg: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::precondition(msg))
    }
}

// ───────────────────────── greedy dense embedding ─────────────────────────

/// Embeds any k-vertex tree into a graph where A sees B in both directions
/// with degree at least k/2 and A has full degree at least k. The larger
/// colour class, its leaves removed, goes to B; the smaller class goes to
/// A; the leaves land on leftover neighbors anywhere in the host.
pub fn embed_greedy_dense<'a>(
    g: &'a Graph,
    a: &VertexSet,
    b: &VertexSet,
    t: &'a RootedTree,
    k: usize,
) -> Result<PartialEmbedding<'a>> {
    check_in_host(g, a, "A")?;
    check_in_host(g, b, "B")?;
    if !a.intersection(b).is_empty() {
        return Err(Error::input("A and B must be disjoint"));
    }
    require(k >= 1, "k must be positive")?;
    require(t.n() == k, format!("tree has {} vertices, expected k = {k}", t.n()))?;
    require(!a.is_empty(), "A is empty")?;
    let amask = g.mask_of(a);
    let bmask = g.mask_of(b);
    for v in a.iter() {
        require(2 * g.deg_into(v, &bmask) >= k, format!("vertex {v} of A has degree below k/2 into B"))?;
        require(g.deg(v) >= k, format!("vertex {v} of A has full degree below k"))?;
    }
    for v in b.iter() {
        require(2 * g.deg_into(v, &amask) >= k, format!("vertex {v} of B has degree below k/2 into A"))?;
    }

    let mut pe = PartialEmbedding::new(t, g);
    if k == 1 {
        let root_img = a.iter().next().unwrap();
        pe.constraints.push((VertexSet::from_iter([t.root()]), a.clone()));
        pe.map.insert(t.root(), root_img);
        pe.validate()?;
        return Ok(pe);
    }

    let (even, odd) = t.parity_classes();
    // X is the larger colour class, even on ties; W its leaves.
    let (x_class, y_class) = if even.len() >= odd.len() { (even, odd) } else { (odd, even) };
    let w: VertexSet = x_class.iter().filter(|&v| t.is_leaf(v)).collect();
    let x_rest = x_class.difference(&w);

    pe.constraints.push((y_class.clone(), a.clone()));
    pe.constraints.push((x_rest.clone(), b.clone()));
    let mut used = vec![false; g.n()];

    let as_contract = |e: Error| Error::contract(format!("greedy stalled despite hypotheses: {e}"));
    let order = bfs_order(t);
    let mut first_placed = false;
    for &u in &order {
        if w.contains(u) {
            continue;
        }
        let target = if y_class.contains(u) { &amask } else { &bmask };
        let img = if !first_placed {
            // Only the first interior vertex may have its parent among the
            // leaves W; it is placed freely in its class target.
            first_placed = true;
            (0..g.n())
                .find(|&x| target[x] && !used[x])
                .ok_or_else(|| stuck("greedy-dense root", u, None, 0, 0))
                .map_err(as_contract)?
        } else {
            let p = t.parent(u).unwrap();
            let pimg = pe.map[&p];
            greedy_child(g, u, pimg, target, &used, "greedy-dense").map_err(as_contract)?
        };
        used[img] = true;
        pe.map.insert(u, img);
    }
    // Leaves of the big class use the full degree of their images' hosts.
    let anywhere = vec![true; g.n()];
    for &u in &order {
        if !w.contains(u) {
            continue;
        }
        // A degree-one root is a leaf too; its unique child anchors it.
        let p = t.parent(u).unwrap_or_else(|| t.children(u)[0]);
        let pimg = pe.map[&p];
        let img = greedy_child(g, u, pimg, &anywhere, &used, "greedy-dense leaves")
            .map_err(as_contract)?;
        used[img] = true;
        pe.map.insert(u, img);
    }
    pe.validate()?;
    debug_assert!(pe.is_total());
    Ok(pe)
}

// ───────────────────────── regular pairs ─────────────────────────

/// Embeds a small tree into a dense regular pair, root inside X*, even
/// levels inside X, odd levels inside Y. The greedy walks only through
/// vertices of typical degree; running out of candidates is evidence
/// against the regularity of the supplied pair.
pub fn embed_in_regular_pair<'a>(
    g: &'a Graph,
    c: &VertexSet,
    d: &VertexSet,
    x: &VertexSet,
    y: &VertexSet,
    xstar: &VertexSet,
    t: &'a RootedTree,
    eps: Rat,
    beta: Rat,
) -> Result<PartialEmbedding<'a>> {
    check_in_host(g, c, "C")?;
    check_in_host(g, d, "D")?;
    if eps <= nat(0) || beta <= nat(0) {
        return Err(Error::input("eps and beta must be positive"));
    }
    require(c.intersection(d).is_empty(), "C and D must be disjoint")?;
    let ell = c.len();
    require(ell > 0 && d.len() == ell, "C and D must have equal positive size")?;
    require(beta > nat(2) * eps, "beta must exceed 2 eps")?;
    let dmask = g.mask_of(d);
    let mut exy: u64 = 0;
    for v in c.iter() {
        exy += g.deg_into(v, &dmask) as u64;
    }
    let density = Rat::new(exy as i64, (ell * ell) as i64);
    require(density >= nat(3) * beta, format!("pair density {density} below 3 beta"))?;
    require(sub_of(x, c), "X must be a subset of C")?;
    require(sub_of(y, d), "Y must be a subset of D")?;
    require(sub_of(xstar, x), "X* must be a subset of X")?;
    let side_min = nat(x.len().min(y.len()));
    require(side_min >= nat(4) * eps / beta * nat(ell), "min{|X|,|Y|} below 4(eps/beta)ell")?;
    require(nat(xstar.len()) > beta * nat(ell) / nat(2), "X* not larger than beta ell/2")?;
    require(nat(t.n()) <= eps * nat(ell), "tree larger than eps ell")?;

    // Typical vertices: degree at least (3/2)beta into the opposite side.
    let ymask = g.mask_of(y);
    let xmask = g.mask_of(x);
    let thresh_x = Rat::new(3, 2) * beta * nat(y.len());
    let thresh_y = Rat::new(3, 2) * beta * nat(x.len());
    let mut xprime = vec![false; g.n()];
    for v in x.iter() {
        xprime[v] = nat(g.deg_into(v, &ymask)) >= thresh_x;
    }
    let mut yprime = vec![false; g.n()];
    for v in y.iter() {
        yprime[v] = nat(g.deg_into(v, &xmask)) >= thresh_y;
    }

    let mut pe = PartialEmbedding::new(t, g);
    pe.constraints.push((VertexSet::from_iter([t.root()]), xstar.clone()));
    let (even, odd) = t.parity_classes();
    pe.constraints.push((even, x.clone()));
    pe.constraints.push((odd, y.clone()));

    let mut used = vec![false; g.n()];
    let root_img = xstar
        .iter()
        .find(|&v| xprime[v])
        .ok_or_else(|| stuck("regular-pair root", t.root(), None, xstar.len(), 0))?;
    used[root_img] = true;
    pe.map.insert(t.root(), root_img);
    for &u in bfs_order(t).iter().skip(1) {
        let target = if t.depth(u) % 2 == 0 { &xprime } else { &yprime };
        let pimg = pe.map[&t.parent(u).unwrap()];
        let img = greedy_child(g, u, pimg, target, &used, "regular-pair")?;
        used[img] = true;
        pe.map.insert(u, img);
    }
    pe.validate()?;
    Ok(pe)
}

fn sub_of(small: &VertexSet, big: &VertexSet) -> bool {
    small.iter().all(|v| big.contains(v))
}

// ───────────────────────── two-ratio splitting ─────────────────────────

/// Two families of rationals in [0, cap] and a prefix mass to hit.
#[derive(Debug, Clone)]
pub struct RatioSplitInput {
    pub xs: Vec<Rat>,
    pub ys: Vec<Rat>,
    pub cap: Rat,
    pub x_prime: Rat,
}

impl RatioSplitInput {
    fn validate(&self) -> Result<()> {
        if self.xs.len() != self.ys.len() {
            return Err(Error::input("xs and ys must have equal length"));
        }
        let zero = nat(0);
        for v in self.xs.iter().chain(self.ys.iter()) {
            if *v < zero || *v > self.cap {
                return Err(Error::input(format!("entry {v} outside [0, {}]", self.cap)));
            }
        }
        let total: Rat = self.xs.iter().sum();
        if total == zero {
            return Err(Error::input("sum of xs must be positive"));
        }
        if self.ys.iter().sum::<Rat>() > total {
            return Err(Error::input("sum of ys must not exceed sum of xs"));
        }
        if self.x_prime < zero || self.x_prime > total {
            return Err(Error::input("X' outside [0, sum xs]"));
        }
        Ok(())
    }
}

/// Picks an index set I with sum_I x <= X' <= sum_I x + cap whose y-mass
/// tracks gamma X' within [-cap, +2cap], gamma = sum y / sum x <= 1 (the
/// y family must not be heavier). Indices are added one at a time, always
/// correcting the sign of the running imbalance, so the intermediate
/// imbalance never leaves [-cap, cap].
pub fn split_by_ratio(input: &RatioSplitInput) -> Result<Vec<usize>> {
    input.validate()?;
    let s = input.xs.len();
    let total_x: Rat = input.xs.iter().sum();
    let total_y: Rat = input.ys.iter().sum();
    let gamma = total_y / total_x;

    let mut in_chain = vec![false; s];
    let mut chain = Vec::with_capacity(s);
    let mut sum_x = nat(0);
    let mut sum_y = nat(0);
    for _ in 0..s {
        let overshoot = gamma * sum_x >= sum_y;
        let j = (0..s)
            .find(|&j| {
                !in_chain[j]
                    && if overshoot {
                        gamma * input.xs[j] <= input.ys[j]
                    } else {
                        gamma * input.xs[j] > input.ys[j]
                    }
            })
            .expect("averaging guarantees a correcting index");
        in_chain[j] = true;
        chain.push(j);
        sum_x += input.xs[j];
        sum_y += input.ys[j];
        debug_assert!(sum_y - input.cap <= gamma * sum_x && gamma * sum_x <= sum_y + input.cap);
    }

    let mut prefix_x = nat(0);
    let mut taken = 0usize;
    for &j in &chain {
        if prefix_x + input.xs[j] <= input.x_prime {
            prefix_x += input.xs[j];
            taken += 1;
        } else {
            break;
        }
    }
    let mut out: Vec<usize> = chain[..taken].to_vec();
    out.sort_unstable();

    #[cfg(debug_assertions)]
    {
        let ix: Rat = out.iter().map(|&j| input.xs[j]).sum();
        let iy: Rat = out.iter().map(|&j| input.ys[j]).sum();
        debug_assert!(ix <= input.x_prime && input.x_prime <= ix + input.cap);
        debug_assert!(iy - input.cap <= gamma * input.x_prime);
        debug_assert!(gamma * input.x_prime <= iy + nat(2) * input.cap);
    }
    Ok(out)
}

// ───────────────────────── filling a regular pair ─────────────────────────

/// Index partition steering `fill_pair`: which trees go root-first into
/// the small side's mirror W, which go root-first into the small side, and
/// which stay on the leftover sides.
#[derive(Debug, Clone)]
pub struct FillPlan {
    pub i1: Vec<usize>,
    pub i2: Vec<usize>,
    pub rest: Vec<usize>,
    /// 1, 2 or 3: which size regime of the small side applied.
    pub case: u8,
    pub dummy: Option<(Rat, Rat)>,
}

/// Splits tree indices by the two-ratio lemma so that both sides of the
/// pair fill evenly. `a`/`b` are per-tree counts of even/odd vertices,
/// `big`/`small` the X* masses on the two sides (big >= small).
///
/// The balancing runs with the heavier of the two count families in the
/// x role, so the target prefix mass never drops below beta ell/4 except
/// in the tiny-margin corner, where the whole selected family fits on
/// one side anyway.
pub fn fill_partition(
    a: &[usize],
    b: &[usize],
    big: usize,
    small: usize,
    beta: Rat,
    ell: usize,
) -> Result<FillPlan> {
    if a.len() != b.len() {
        return Err(Error::input("a and b must have equal length"));
    }
    require(big >= small, "big side mass must be at least the small side mass")?;
    let s = a.len();
    let bl = beta * nat(ell);
    let sum_a: usize = a.iter().sum();
    let sum_b: usize = b.iter().sum();
    require(
        nat(sum_a + sum_b) + nat(50) * bl <= nat(big + small),
        "X* smaller than total tree order plus 50 beta ell",
    )?;
    let all: Vec<usize> = (0..s).collect();
    if s == 0 {
        return Ok(FillPlan { i1: vec![], i2: vec![], rest: all, case: 1, dummy: None });
    }
    if nat(small) <= nat(4) * bl {
        return Ok(FillPlan { i1: vec![], i2: vec![], rest: all, case: 1, dummy: None });
    }
    let margin = nat(small) - nat(4) * bl;
    let ab = nat(sum_a + sum_b);
    let case2 = nat(2) * margin >= ab;
    // Heavier family plays x; the output is unswapped at the end.
    let swapped = sum_b > sum_a;
    let (xa, xb): (Vec<Rat>, Vec<Rat>) = if swapped {
        (b.iter().map(|&v| nat(v)).collect(), a.iter().map(|&v| nat(v)).collect())
    } else {
        (a.iter().map(|&v| nat(v)).collect(), b.iter().map(|&v| nat(v)).collect())
    };
    let xa_sum: Rat = xa.iter().sum();
    let zero = nat(0);
    let half = bl / nat(2);

    // h1 collects the chain indices whose x mass tracks the prefix target;
    // h2 is the rest of the selected family; rest stays outside it.
    let (chosen, h1, dummy, case): (Vec<usize>, Vec<usize>, Option<(Rat, Rat)>, u8) = if case2 {
        if ab == zero || xa_sum == zero {
            (all.clone(), vec![], None, 2)
        } else {
            let raw = xa_sum / ab * margin;
            let second = RatioSplitInput {
                xs: xa.clone(),
                ys: xb.clone(),
                cap: half,
                x_prime: raw.min(xa_sum),
            };
            (all.clone(), split_by_ratio(&second)?, None, 2)
        }
    } else {
        let first = RatioSplitInput {
            xs: xa.clone(),
            ys: xb.clone(),
            cap: bl / nat(4),
            x_prime: nat(2) * xa_sum / ab * margin,
        };
        let i = split_by_ratio(&first)?;
        if nat(2) * margin < bl {
            // Tiny margin: the whole selected family fits on one side.
            (i, vec![], None, 3)
        } else {
            let gamma = (ab - xa_sum) / xa_sum;
            let sx: Rat = i.iter().map(|&j| xa[j]).sum();
            let sy: Rat = i.iter().map(|&j| xb[j]).sum();
            let drift = gamma * sx - sy;
            // Dummy pair restoring the exact ratio on I, both coordinates
            // in (0, beta ell/2]; when none exists gamma is at most 1/2
            // and the uncorrected ratio stays close enough.
            let dummy = if drift > zero {
                let a0 = half.min((half - drift) / (nat(2) * gamma));
                Some((a0, gamma * a0 + drift))
            } else if drift < zero {
                if gamma > zero && -drift < gamma * half {
                    let a0 = (-drift / gamma + half) / nat(2);
                    Some((a0, gamma * a0 + drift))
                } else {
                    None
                }
            } else if gamma > zero {
                Some((half, gamma * half))
            } else {
                None
            };
            let h1: Vec<usize> = if let Some((a0, b0)) = dummy {
                debug_assert!(a0 > zero && a0 <= half && b0 > zero && b0 <= half);
                debug_assert!(gamma * (sx + a0) == sy + b0);
                let mut xs: Vec<Rat> = Vec::with_capacity(i.len() + 1);
                let mut ys: Vec<Rat> = Vec::with_capacity(i.len() + 1);
                xs.push(a0);
                ys.push(b0);
                for &j in &i {
                    xs.push(xa[j]);
                    ys.push(xb[j]);
                }
                let total: Rat = xs.iter().sum();
                let raw = xa_sum / ab * margin;
                let second = RatioSplitInput { xs, ys, cap: half, x_prime: raw.min(total) };
                split_by_ratio(&second)?
                    .into_iter()
                    .filter(|&j| j >= 1)
                    .map(|j| i[j - 1])
                    .collect()
            } else {
                // No dummy restores the ratio exactly, so the selected
                // family is split by sign-correcting greedy instead: the
                // running occupancy difference never leaves [-cap, cap],
                // and the first call's prefix bounds keep both sides small.
                let mut diff = zero;
                let mut h1 = Vec::with_capacity(i.len());
                for &j in &i {
                    let delta = xa[j] - xb[j];
                    if (diff <= zero) == (delta >= zero) {
                        h1.push(j);
                        diff += delta;
                    } else {
                        diff -= delta;
                    }
                }
                h1
            };
            (i, h1, dummy, 3)
        }
    };

    let in_h1 = {
        let mut mask = vec![false; s];
        for &j in &h1 {
            mask[j] = true;
        }
        mask
    };
    let h2: Vec<usize> = chosen.iter().copied().filter(|&j| !in_h1[j]).collect();
    // h1 carries the x family; unswapping restores "i1 roots evens in W".
    let (i1, i2) = if swapped { (h2, h1) } else { (h1, h2) };
    let dummy = dummy.map(|(a0, b0)| if swapped { (b0, a0) } else { (a0, b0) });
    let in_chosen = {
        let mut mask = vec![false; s];
        for &j in &chosen {
            mask[j] = true;
        }
        mask
    };
    let rest: Vec<usize> = all.into_iter().filter(|&j| !in_chosen[j]).collect();

    let occ_w: usize = i1.iter().map(|&j| a[j]).sum::<usize>() + i2.iter().map(|&j| b[j]).sum::<usize>();
    let occ_d: usize = i1.iter().map(|&j| b[j]).sum::<usize>() + i2.iter().map(|&j| a[j]).sum::<usize>();
    assert!(nat(occ_w) <= nat(small) - nat(2) * bl, "W-side occupancy exceeds its slack");
    assert!(nat(occ_d) <= nat(small) - nat(2) * bl, "small-side occupancy exceeds its slack");
    if case != 2 {
        let ra: usize = rest.iter().map(|&j| a[j]).sum();
        let rb: usize = rest.iter().map(|&j| b[j]).sum();
        assert!(nat(ra) <= nat(big - small) - nat(40) * bl, "leftover even mass exceeds its slack");
        assert!(nat(rb) <= nat(big - small) - nat(40) * bl, "leftover odd mass exceeds its slack");
    }
    Ok(FillPlan { i1, i2, rest, case, dummy })
}

/// Packs a family of small trees into a dense regular pair, all roots
/// inside X*, all images inside (C u D) \ U, mutually disjoint. The index
/// partition from `fill_partition` decides which side each root takes.
pub fn fill_pair<'a>(
    g: &'a Graph,
    c: &VertexSet,
    d: &VertexSet,
    trees: &'a [RootedTree],
    u: &VertexSet,
    xstar: &VertexSet,
    eps: Rat,
    beta: Rat,
) -> Result<Vec<PartialEmbedding<'a>>> {
    check_in_host(g, c, "C")?;
    check_in_host(g, d, "D")?;
    check_in_host(g, u, "U")?;
    check_in_host(g, xstar, "X*")?;
    if eps <= nat(0) || beta <= nat(0) {
        return Err(Error::input("eps and beta must be positive"));
    }
    require(eps <= beta * beta / nat(8), "eps must be at most beta^2/8")?;
    require(c.intersection(d).is_empty(), "C and D must be disjoint")?;
    let ell = c.len();
    require(ell > 0 && d.len() == ell, "C and D must have equal positive size")?;
    let dmask = g.mask_of(d);
    let mut exy: u64 = 0;
    for v in c.iter() {
        exy += g.deg_into(v, &dmask) as u64;
    }
    require(
        Rat::new(exy as i64, (ell * ell) as i64) >= nat(3) * beta,
        "pair density below 3 beta",
    )?;
    let total: usize = trees.iter().map(|t| t.n()).sum();
    for (i, t) in trees.iter().enumerate() {
        require(nat(t.n()) <= eps * nat(ell), format!("tree {i} larger than eps ell"))?;
    }
    require(c.intersection(u).len() == d.intersection(u).len(), "U must meet C and D equally")?;
    let cd = c.union(d);
    require(
        sub_of(xstar, &cd) && xstar.intersection(u).is_empty(),
        "X* must lie in (C u D) \\ U",
    )?;
    require(
        nat(xstar.len()) >= nat(total) + nat(50) * beta * nat(ell),
        "X* smaller than total tree order plus 50 beta ell",
    )?;
    if trees.is_empty() {
        return Ok(vec![]);
    }

    // Side with the larger X* mass plays C; swap if needed.
    let mc = xstar.intersection(c).len();
    let md = xstar.intersection(d).len();
    let (cs, ds) = if mc >= md { (c, d) } else { (d, c) };
    let (big, small) = (mc.max(md), mc.min(md));

    let counts: Vec<(usize, usize)> = trees
        .iter()
        .map(|t| {
            let (e, o) = t.parity_classes();
            (e.len(), o.len())
        })
        .collect();
    let a: Vec<usize> = counts.iter().map(|&(e, _)| e).collect();
    let b: Vec<usize> = counts.iter().map(|&(_, o)| o).collect();
    let plan = fill_partition(&a, &b, big, small, beta, ell)?;

    let star_c = xstar.intersection(cs);
    let star_d = xstar.intersection(ds);
    // W mirrors the small side's X* mass inside the big side's.
    let w: VertexSet = star_c.iter().take(small).collect();
    let w_rest = star_c.difference(&w);
    let d_out: VertexSet = ds.difference(&star_d).difference(u);

    let mut used = vec![false; g.n()];
    let mut out: Vec<Option<PartialEmbedding<'a>>> = (0..trees.len()).map(|_| None).collect();
    let run = |idx: &[usize],
                   roots: &VertexSet,
                   other: &VertexSet,
                   root_side: &VertexSet,
                   other_side: &VertexSet,
                   used: &mut Vec<bool>,
                   out: &mut Vec<Option<PartialEmbedding<'a>>>|
     -> Result<()> {
        for &i in idx {
            let free_x: VertexSet = roots.iter().filter(|&v| !used[v]).collect();
            let free_y: VertexSet = other.iter().filter(|&v| !used[v]).collect();
            let inner = embed_in_regular_pair(
                g, root_side, other_side, &free_x, &free_y, &free_x, &trees[i], eps, beta,
            )?;
            for (&_, &x) in &inner.map {
                used[x] = true;
            }
            let mut pe = inner;
            pe.constraints = vec![
                (VertexSet::from_iter([trees[i].root()]), xstar.clone()),
                (trees[i].vertices().iter().copied().collect(), cd.difference(u)),
            ];
            pe.validate()?;
            out[i] = Some(pe);
        }
        Ok(())
    };
    run(&plan.i1, &w, &star_d, cs, ds, &mut used, &mut out)?;
    run(&plan.i2, &star_d, &w, ds, cs, &mut used, &mut out)?;
    run(&plan.rest, &w_rest, &d_out, cs, ds, &mut used, &mut out)?;
    Ok(out.into_iter().map(|o| o.expect("plan covers every tree")).collect())
}

// ───────────────────────── super-regular pairs ─────────────────────────

/// Embeds a small tree from a chosen root image into a super-regular
/// pair, avoiding the sets U_A and U_B.
pub fn embed_superregular<'a>(
    g: &'a Graph,
    a: &VertexSet,
    b: &VertexSet,
    u_a: &VertexSet,
    u_b: &VertexSet,
    t: &'a RootedTree,
    v0: Vertex,
    eps: Rat,
    d: Rat,
) -> Result<PartialEmbedding<'a>> {
    check_in_host(g, a, "A")?;
    check_in_host(g, b, "B")?;
    if eps <= nat(0) {
        return Err(Error::input("eps must be positive"));
    }
    require(d > nat(10) * eps, "d must exceed 10 eps")?;
    require(a.intersection(b).is_empty(), "A and B must be disjoint")?;
    require(sub_of(u_a, a), "U_A must be a subset of A")?;
    require(sub_of(u_b, b), "U_B must be a subset of B")?;
    require(2 * u_a.len() <= a.len(), "U_A larger than half of A")?;
    require(nat(u_b.len()) <= d * nat(b.len()) / nat(4), "U_B larger than d|B|/4")?;
    let ell = a.len().min(b.len());
    require(nat(t.n()) <= d * nat(ell) / nat(4), "tree larger than d ell/4")?;
    require(a.contains(v0) && !u_a.contains(v0), "v0 must lie in A \\ U_A")?;

    let fa = a.difference(u_a);
    let fb = b.difference(u_b);
    let amask = g.mask_of(&fa);
    let bmask = g.mask_of(&fb);
    let mut pe = PartialEmbedding::new(t, g);
    pe.constraints.push((VertexSet::from_iter([t.root()]), VertexSet::from_iter([v0])));
    let (even, odd) = t.parity_classes();
    pe.constraints.push((even, fa));
    pe.constraints.push((odd, fb));
    let mut used = vec![false; g.n()];
    used[v0] = true;
    pe.map.insert(t.root(), v0);
    for &u in bfs_order(t).iter().skip(1) {
        let target = if t.depth(u) % 2 == 0 { &amask } else { &bmask };
        let pimg = pe.map[&t.parent(u).unwrap()];
        let img = greedy_child(g, u, pimg, target, &used, "super-regular")?;
        used[img] = true;
        pe.map.insert(u, img);
    }
    pe.validate()?;
    Ok(pe)
}

// ───────────────────────── regularized matchings ─────────────────────────

fn matching_quota(m: &RegularizedMatching, tau: Rat, k: usize) -> Result<Rat> {
    let eps = m.eps();
    let d = m.d();
    require(d > nat(2) * eps, "matching has d <= 2 eps")?;
    require(m.ell() > 0, "matching has zero pair size")?;
    Ok(nat(4) * (eps + tau * nat(k) / nat(m.ell())) / (d - nat(2) * eps))
}

/// Components of T - r with their vertex lists, largest first.
fn root_components(t: &RootedTree) -> Vec<Vec<Vertex>> {
    let mut comps: Vec<Vec<Vertex>> = t
        .children(t.root())
        .iter()
        .map(|&c| {
            let mut acc = Vec::new();
            let mut stack = vec![c];
            while let Some(v) = stack.pop() {
                acc.push(v);
                stack.extend(t.children(v).iter().copied().rev());
            }
            acc
        })
        .collect();
    comps.sort_by_key(|cmp| (usize::MAX - cmp.len(), cmp[0]));
    comps
}

/// Backtracking search placing `verts` (a component in preorder, first
/// entry its root) with the root fixed at `root_img` and levels
/// alternating between the two masks. Mutates `used`/`map` on success.
fn place_component(
    g: &Graph,
    t: &RootedTree,
    verts: &[Vertex],
    root_img: Vertex,
    even_mask: &[bool],
    odd_mask: &[bool],
    used: &mut Vec<bool>,
    map: &mut BTreeMap<Vertex, Vertex>,
) -> bool {
    fn go(
        g: &Graph,
        t: &RootedTree,
        verts: &[Vertex],
        i: usize,
        base_depth: usize,
        even_mask: &[bool],
        odd_mask: &[bool],
        used: &mut Vec<bool>,
        map: &mut BTreeMap<Vertex, Vertex>,
    ) -> bool {
        if i == verts.len() {
            return true;
        }
        let u = verts[i];
        let mask = if (t.depth(u) - base_depth) % 2 == 0 { even_mask } else { odd_mask };
        let pimg = map[&t.parent(u).unwrap()];
        let cands: Vec<Vertex> =
            g.neighbors(pimg).filter(|&x| mask[x] && !used[x]).collect();
        for x in cands {
            used[x] = true;
            map.insert(u, x);
            if go(g, t, verts, i + 1, base_depth, even_mask, odd_mask, used, map) {
                return true;
            }
            used[x] = false;
            map.remove(&u);
        }
        false
    }
    let base_depth = t.depth(verts[0]);
    if !even_mask[root_img] || used[root_img] {
        return false;
    }
    used[root_img] = true;
    map.insert(verts[0], root_img);
    if go(g, t, verts, 1, base_depth, even_mask, odd_mask, used, map) {
        return true;
    }
    used[root_img] = false;
    map.remove(&verts[0]);
    false
}

/// Embeds a tree from v0 into the vertices of a regularized matching so
/// that every pair's image sizes stay balanced: each component of T - r
/// lands inside one pair, oriented to push the running discrepancy
/// |C n phi| + f_CD - |D n phi| towards zero; it never leaves [-tau k, tau k].
pub fn embed_balanced<'a>(
    g: &'a Graph,
    v0: Vertex,
    m: &RegularizedMatching,
    f: &[i64],
    t: &'a RootedTree,
    tau: Rat,
    k: usize,
) -> Result<PartialEmbedding<'a>> {
    if v0 >= g.n() {
        return Err(Error::input("v0 outside the host"));
    }
    if f.len() != m.pairs().len() {
        return Err(Error::input("one f value per matching pair required"));
    }
    require(k >= 1, "k must be positive")?;
    let tk = tau * nat(k);
    for (p, &fv) in f.iter().enumerate() {
        require(Rat::from_integer(fv.abs()) <= tk, format!("f[{p}] outside [-tau k, tau k]"))?;
    }
    let mverts = m.vertices();
    for v in mverts.iter() {
        require(g.has_edge(v0, v), format!("matching vertex {v} is not a neighbor of v0"))?;
    }
    let quota = matching_quota(m, tau, k)?;
    require(
        nat(t.n()) <= (nat(1) - quota) * nat(mverts.len()),
        "tree larger than (1 - quota)|V(M)|",
    )?;
    let comps = root_components(t);
    for cmp in &comps {
        require(nat(cmp.len()) <= tk, "a component of T - r exceeds tau k")?;
    }

    let mut pe = PartialEmbedding::new(t, g);
    pe.constraints.push((VertexSet::from_iter([t.root()]), VertexSet::from_iter([v0])));
    let vrest: VertexSet = t.vertices().iter().copied().filter(|&v| v != t.root()).collect();
    pe.constraints.push((vrest, mverts.clone()));

    let mut used = vec![false; g.n()];
    used[v0] = true;
    pe.map.insert(t.root(), v0);
    let pair_masks: Vec<(Vec<bool>, Vec<bool>)> = m
        .pairs()
        .iter()
        .map(|(cset, dset)| (g.mask_of(cset), g.mask_of(dset)))
        .collect();
    let mut disc: Vec<i64> = f.to_vec();

    for cmp in &comps {
        let base = t.depth(cmp[0]);
        let evens = cmp.iter().filter(|&&v| (t.depth(v) - base) % 2 == 0).count();
        let odds = cmp.len() - evens;
        let delta = evens as i64 - odds as i64;
        // Orientation 0 sends component-evens to the C side, 1 to D.
        let mut options: Vec<(i64, usize, u8)> = Vec::new();
        for (p, (cmask, dmask)) in pair_masks.iter().enumerate() {
            let free_c = cmask.iter().zip(&used).filter(|(&t, &u)| t && !u).count();
            let free_d = dmask.iter().zip(&used).filter(|(&t, &u)| t && !u).count();
            for o in 0..2u8 {
                let (need_c, need_d) = if o == 0 { (evens, odds) } else { (odds, evens) };
                let post = disc[p] + if o == 0 { delta } else { -delta };
                if free_c >= need_c
                    && free_d >= need_d
                    && Rat::from_integer(post.abs()) <= tk
                {
                    options.push((post.abs(), p, o));
                }
            }
        }
        options.sort_unstable();
        let mut placed = false;
        for &(_, p, o) in &options {
            let (cmask, dmask) = &pair_masks[p];
            let (em, om) = if o == 0 { (cmask, dmask) } else { (dmask, cmask) };
            let root_cands: Vec<Vertex> =
                (0..g.n()).filter(|&x| em[x] && !used[x]).collect();
            for r in root_cands {
                if place_component(g, t, cmp, r, em, om, &mut used, &mut pe.map) {
                    disc[p] += if o == 0 { delta } else { -delta };
                    placed = true;
                    break;
                }
            }
            if placed {
                break;
            }
        }
        if !placed {
            return Err(stuck("balanced", cmp[0], Some(v0), options.len(), 0));
        }
    }
    pe.validate()?;
    debug_assert!(pe.is_total());
    Ok(pe)
}

/// Embeds a tree from v0 into a regularized matching, component roots on
/// uncovered neighbors of v0, all images avoiding U.
pub fn embed_oneside<'a>(
    g: &'a Graph,
    v0: Vertex,
    m: &RegularizedMatching,
    cover: &[VertexSet],
    u: &VertexSet,
    t: &'a RootedTree,
    tau: Rat,
    k: usize,
) -> Result<PartialEmbedding<'a>> {
    if v0 >= g.n() {
        return Err(Error::input("v0 outside the host"));
    }
    check_in_host(g, u, "U")?;
    require(k >= 1, "k must be positive")?;
    if !matching_cover_check(m, cover)? {
        return Err(Error::precondition("the supplied family is not a matching cover"));
    }
    let tk = tau * nat(k);
    let comps = root_components(t);
    for cmp in &comps {
        require(nat(cmp.len()) <= tk, "a component of T - r exceeds tau k")?;
    }
    let mverts = m.vertices();
    let mut covered = VertexSet::new();
    for side in cover {
        covered = covered.union(side);
    }
    let uncovered = mverts.difference(&covered);
    let umask = g.mask_of(&uncovered);
    let deg_unc = g.deg_into(v0, &umask);
    let quota = matching_quota(m, tau, k)?;
    require(
        nat(t.n() + u.len()) <= nat(deg_unc) - quota * nat(mverts.len()),
        "v(T) + |U| exceeds deg(v0, uncovered) minus the quota",
    )?;

    let mut pe = PartialEmbedding::new(t, g);
    pe.constraints.push((VertexSet::from_iter([t.root()]), VertexSet::from_iter([v0])));
    let vrest: VertexSet = t.vertices().iter().copied().filter(|&v| v != t.root()).collect();
    pe.constraints.push((vrest, mverts.difference(u)));

    let mut used = vec![false; g.n()];
    used[v0] = true;
    for x in u.iter() {
        used[x] = true;
    }
    pe.map.insert(t.root(), v0);
    let pair_masks: Vec<(Vec<bool>, Vec<bool>)> = m
        .pairs()
        .iter()
        .map(|(cset, dset)| (g.mask_of(cset), g.mask_of(dset)))
        .collect();
    let side_of = |x: Vertex| -> Option<(usize, u8)> {
        pair_masks.iter().enumerate().find_map(|(p, (cm, dm))| {
            if cm[x] {
                Some((p, 0))
            } else if dm[x] {
                Some((p, 1))
            } else {
                None
            }
        })
    };

    for cmp in &comps {
        let root_cands: Vec<Vertex> = g
            .neighbors(v0)
            .filter(|&x| umask[x] && !used[x])
            .collect();
        let total_cands = root_cands.len();
        let mut placed = false;
        for r in root_cands {
            let (p, side) = side_of(r).expect("uncovered vertices lie in the matching");
            let (cm, dm) = &pair_masks[p];
            let (em, om) = if side == 0 { (cm, dm) } else { (dm, cm) };
            if place_component(g, t, cmp, r, em, om, &mut used, &mut pe.map) {
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(stuck("one-side", cmp[0], Some(v0), total_cands, 0));
        }
    }
    pe.validate()?;
    debug_assert!(pe.is_total());
    Ok(pe)
}

// ───────────────────────── avoiding and nowhere-dense hosts ─────────────────────────

/// Embeds a forest with roots in U* inside an avoiding set: each root
/// image has large degree into a dense spot barely touched by U, and the
/// whole tree unfolds inside that spot minus U.
pub fn embed_avoiding_forest<'a>(
    h: &'a Graph,
    spots: &[DenseSpot],
    e_set: &VertexSet,
    trees: &'a [RootedTree],
    u: &VertexSet,
    ustar: &VertexSet,
    lambda: Rat,
    eps: Rat,
    gamma: Rat,
    k: usize,
) -> Result<Vec<PartialEmbedding<'a>>> {
    check_in_host(h, e_set, "E")?;
    check_in_host(h, u, "U")?;
    for spot in spots {
        spot.validate(h)?;
    }
    require(gamma * gamma > eps, "gamma^2 must exceed eps")?;
    let total: usize = trees.iter().map(|t| t.n()).sum();
    let kr = nat(k);
    require(nat(total) <= gamma * kr / nat(2), "total tree order exceeds gamma k/2")?;
    require(nat(u.len()) <= lambda * kr, "U larger than lambda k")?;
    require(sub_of(ustar, e_set), "U* must be a subset of E")?;
    require(
        nat(ustar.len()) >= eps * kr + nat(trees.len()),
        "U* smaller than eps k plus the number of trees",
    )?;

    let spot_data: Vec<(Vec<bool>, bool)> = spots
        .iter()
        .map(|s| {
            let vs = s.vertex_set();
            let hits = vs.intersection(u).len();
            (h.mask_of(&vs), nat(hits) <= gamma * gamma * kr)
        })
        .collect();
    // A vertex is protected if it sends gamma k edges into a spot that U
    // barely meets; the witness spot hosts its whole tree.
    let witness = |v: Vertex| -> Option<usize> {
        spot_data.iter().enumerate().find_map(|(i, (mask, ok))| {
            if *ok && nat(h.deg_into(v, mask)) >= gamma * kr {
                Some(i)
            } else {
                None
            }
        })
    };
    let bad: VertexSet = e_set.iter().filter(|&v| witness(v).is_none()).collect();
    if nat(bad.len()) > eps * kr {
        return Err(Error::AvoidingViolation(format!(
            "{} vertices of E ({} allowed) have no protected dense spot",
            bad.len(),
            eps * kr
        )));
    }

    let free_host = h.n();
    let mut used = vec![false; free_host];
    let umask = h.mask_of(u);
    let mut out = Vec::with_capacity(trees.len());
    for t in trees {
        let root_img = ustar
            .iter()
            .find(|&v| !bad.contains(v) && !used[v])
            .ok_or_else(|| Error::contract("root slots exhausted despite |U*| bound".to_string()))?;
        let spot_idx = witness(root_img).expect("protected by construction");
        let target: Vec<bool> = spot_data[spot_idx]
            .0
            .iter()
            .zip(&umask)
            .map(|(&in_spot, &in_u)| in_spot && !in_u)
            .collect();
        used[root_img] = true;
        let mut pe = PartialEmbedding::new(t, h);
        pe.constraints.push((VertexSet::from_iter([t.root()]), ustar.clone()));
        let rest: VertexSet = t.vertices().iter().copied().filter(|&v| v != t.root()).collect();
        let host_minus_u: VertexSet = (0..h.n()).filter(|&v| !umask[v]).collect();
        pe.constraints.push((rest, host_minus_u));
        pe.map.insert(t.root(), root_img);
        for &tv in bfs_order(t).iter().skip(1) {
            let pimg = pe.map[&t.parent(tv).unwrap()];
            let img = greedy_child(h, tv, pimg, &target, &used, "avoiding-forest")?;
            used[img] = true;
            pe.map.insert(tv, img);
        }
        pe.validate()?;
        out.push(pe);
    }
    Ok(out)
}

/// Embeds a forest, roots in U*, into a host whose only guarantee is the
/// absence of dense spots: the shadow of U is small, and outside it every
/// vertex keeps half its minimum degree free.
pub fn embed_nowheredense_forest<'a>(
    h: &'a Graph,
    trees: &'a [RootedTree],
    v1: &VertexSet,
    v2: &VertexSet,
    u: &VertexSet,
    ustar: &VertexSet,
    q_bound: Rat,
    gamma: Rat,
    zeta: Rat,
    k: usize,
) -> Result<Vec<PartialEmbedding<'a>>> {
    check_in_host(h, v1, "V1")?;
    check_in_host(h, v2, "V2")?;
    check_in_host(h, u, "U")?;
    let kr = nat(k);
    require(q_bound >= nat(1), "Q must be at least 1")?;
    require(nat(128) * q_bound * gamma <= zeta * zeta, "128 Q gamma must be at most zeta^2")?;
    let total: usize = trees.iter().map(|t| t.n()).sum();
    require(nat(4) * nat(total) < zeta * kr, "total tree order must be below zeta k/4")?;
    require(sub_of(ustar, v1), "U* must be a subset of V1")?;
    require(nat(u.len()) < q_bound * kr, "U must be smaller than Q k")?;
    let shadow_cap = nat(32) * q_bound * q_bound * gamma / zeta * kr;
    require(
        nat(ustar.len()) > shadow_cap + nat(trees.len()),
        "U* not larger than the shadow bound plus the number of trees",
    )?;
    let m1 = h.mask_of(v1);
    let m2 = h.mask_of(v2);
    for v in v1.iter() {
        require(nat(h.deg_into(v, &m2)) >= zeta * kr, format!("vertex {v} of V1 has degree below zeta k into V2"))?;
    }
    for v in v2.iter() {
        require(nat(h.deg_into(v, &m1)) >= zeta * kr, format!("vertex {v} of V2 has degree below zeta k into V1"))?;
    }

    let b = shadow_rat(h, u, zeta * kr / nat(2), 1);
    if nat(b.len()) > shadow_cap {
        return Err(Error::NowhereDenseViolation(format!(
            "shadow of U has {} vertices, bound allows {}",
            b.len(),
            shadow_cap
        )));
    }
    let blocked = b.union(u);
    let t1: Vec<bool> = (0..h.n()).map(|v| m1[v] && !blocked.contains(v)).collect();
    let t2: Vec<bool> = (0..h.n()).map(|v| m2[v] && !blocked.contains(v)).collect();

    let mut used = vec![false; h.n()];
    let mut out = Vec::with_capacity(trees.len());
    for t in trees {
        let root_img = ustar
            .iter()
            .find(|&v| !blocked.contains(v) && !used[v])
            .ok_or_else(|| {
                stuck("nowhere-dense roots", t.root(), None, ustar.len(), 0)
            })?;
        used[root_img] = true;
        let mut pe = PartialEmbedding::new(t, h);
        pe.constraints.push((VertexSet::from_iter([t.root()]), ustar.clone()));
        let (even, odd) = t.parity_classes();
        pe.constraints.push((even, v1.difference(u)));
        pe.constraints.push((odd, v2.difference(u)));
        pe.map.insert(t.root(), root_img);
        for &tv in bfs_order(t).iter().skip(1) {
            let target = if t.depth(tv) % 2 == 0 { &t1 } else { &t2 };
            let pimg = pe.map[&t.parent(tv).unwrap()];
            let img = greedy_child(h, tv, pimg, target, &used, "nowhere-dense")?;
            used[img] = true;
            pe.map.insert(tv, img);
        }
        pe.validate()?;
        out.push(pe);
    }
    Ok(out)
}

// ───────────────────────── stochastic reservations ─────────────────────────

/// Disjoint embeddings plus a reserved set the same size as their images,
/// tracking every watched set P_j to within the k^(3/4) slack.
#[derive(Debug, Clone)]
pub struct ReservationResult<'a> {
    pub embeddings: Vec<PartialEmbedding<'a>>,
    pub reserved: VertexSet,
    /// The slack ceil(k^(3/4)) used in the P_j inequality.
    pub slack: usize,
    /// Sampling attempts consumed, successful one included.
    pub attempts: usize,
}

/// Embeds a forest by the paired-candidate process: every placement draws
/// two fresh candidates, a coin sends one into the image and the other
/// into the reserve C, so each watched set P_j is hit by images and
/// reserve about equally often. A run violating the slack inequality for
/// some P_j is resampled.
pub fn embed_shrubs_with_reservation<'a>(
    h: &'a Graph,
    xstar: &VertexSet,
    x1: &VertexSet,
    x2: &VertexSet,
    p_family: &[VertexSet],
    trees: &'a [RootedTree],
    k: usize,
    seed: u64,
    retries: usize,
) -> Result<ReservationResult<'a>> {
    check_in_host(h, xstar, "X*")?;
    check_in_host(h, x1, "X1")?;
    check_in_host(h, x2, "X2")?;
    if k == 0 {
        return Err(Error::input("k must be positive"));
    }
    require(p_family.len() <= k, "more watched sets than k")?;
    for (j, p) in p_family.iter().enumerate() {
        check_in_host(h, p, "P_j")?;
        require(p.len() <= k, format!("P_{j} larger than k"))?;
    }
    require(xstar.len() >= 2 * trees.len(), "X* smaller than twice the number of trees")?;
    let total: usize = trees.iter().map(|t| t.n()).sum();
    let m1 = h.mask_of(x1);
    let m2 = h.mask_of(x2);
    for v in x1.union(xstar).iter() {
        require(
            h.deg_into(v, &m2) >= 2 * total,
            format!("vertex {v} of X1 u X* has degree below 2 sum v(T_i) into X2"),
        )?;
    }
    for v in x2.iter() {
        require(
            h.deg_into(v, &m1) >= 2 * total,
            format!("vertex {v} of X2 has degree below 2 sum v(T_i) into X1"),
        )?;
    }
    let slack = ceil_pow_3_4(k);

    let attempts_max = retries + 1;
    let mut last_violation = String::new();
    for attempt in 0..attempts_max {
        let mut rng = stream(seed, attempt as u64);
        let mut used = vec![false; h.n()];
        let mut maps: Vec<BTreeMap<Vertex, Vertex>> =
            trees.iter().map(|_| BTreeMap::new()).collect();
        let mut reserve: Vec<Vertex> = Vec::with_capacity(total);
        let mut stalled = None;

        // Root candidate pairs come off X* up front, so no later pick can
        // double-book them.
        let mut star_iter = xstar.iter();
        let root_pairs: Vec<(Vertex, Vertex)> = trees
            .iter()
            .map(|_| {
                let a1 = star_iter.next().expect("size checked");
                let a2 = star_iter.next().expect("size checked");
                used[a1] = true;
                used[a2] = true;
                (a1, a2)
            })
            .collect();
        'outer: for (i, t) in trees.iter().enumerate() {
            let (a1, a2) = root_pairs[i];
            let (ximg, yres) = if rng.gen::<bool>() { (a1, a2) } else { (a2, a1) };
            maps[i].insert(t.root(), ximg);
            reserve.push(yres);
            for &tv in bfs_order(t).iter().skip(1) {
                let side = if t.depth(tv) % 2 == 0 { &m1 } else { &m2 };
                let pimg = maps[i][&t.parent(tv).unwrap()];
                let mut pair = Vec::with_capacity(2);
                for x in h.neighbors(pimg) {
                    if side[x] && !used[x] {
                        pair.push(x);
                        if pair.len() == 2 {
                            break;
                        }
                    }
                }
                if pair.len() < 2 {
                    stalled = Some(stuck("reservation", tv, Some(pimg), h.deg(pimg), pair.len()));
                    break 'outer;
                }
                let (ximg, yres) =
                    if rng.gen::<bool>() { (pair[0], pair[1]) } else { (pair[1], pair[0]) };
                used[pair[0]] = true;
                used[pair[1]] = true;
                maps[i].insert(tv, ximg);
                reserve.push(yres);
            }
        }
        if let Some(e) = stalled {
            // A deterministic shortage, not bad luck: no resample can help.
            return Err(e);
        }

        let reserved: VertexSet = reserve.iter().copied().collect();
        let images: VertexSet = maps.iter().flat_map(|m| m.values().copied()).collect();
        let mut ok = true;
        for (j, p) in p_family.iter().enumerate() {
            let hit_img = p.intersection(&images).len();
            let hit_res = p.intersection(&reserved).len();
            if hit_img > hit_res + slack {
                ok = false;
                last_violation = format!(
                    "P_{j}: {hit_img} image hits vs {hit_res} reserved + slack {slack}"
                );
                break;
            }
        }
        if !ok {
            continue;
        }

        let mut embeddings = Vec::with_capacity(trees.len());
        for (i, t) in trees.iter().enumerate() {
            let mut pe = PartialEmbedding::new(t, h);
            pe.map = maps[i].clone();
            pe.constraints.push((VertexSet::from_iter([t.root()]), xstar.clone()));
            let even_rest: VertexSet = t
                .vertices()
                .iter()
                .copied()
                .filter(|&v| v != t.root() && t.depth(v) % 2 == 0)
                .collect();
            let (_, odd) = t.parity_classes();
            pe.constraints.push((even_rest, x1.clone()));
            pe.constraints.push((odd, x2.clone()));
            pe.validate()?;
            embeddings.push(pe);
        }
        debug_assert_eq!(reserved.len(), total);
        debug_assert!(reserved.intersection(&images).is_empty());
        return Ok(ReservationResult { embeddings, reserved, slack, attempts: attempt + 1 });
    }
    Err(Error::Stochastic {
        attempts: attempts_max,
        msg: format!("slack inequality kept failing; last: {last_violation}"),
    })
}

/// Whether the expander host's nowhere-density is checked here or taken
/// on trust from the caller.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityCertificate {
    Certified,
    Trusted,
}

/// Embeds one shrub into an expander-like host with a reservation: the
/// shadow of U is discarded (its size is evidence against nowhere-density
/// if too large), and the paired-candidate process runs on what is left.
#[allow(clippy::too_many_arguments)]
pub fn embed_shrub_expander<'a>(
    h: &'a Graph,
    v2: &VertexSet,
    v3: &VertexSet,
    u: &VertexSet,
    ustar: &VertexSet,
    p_family: &[VertexSet],
    t: &'a RootedTree,
    delta: Rat,
    gamma: Rat,
    k: usize,
    seed: u64,
    retries: usize,
    cert: DensityCertificate,
) -> Result<ReservationResult<'a>> {
    check_in_host(h, v2, "V2")?;
    check_in_host(h, v3, "V3")?;
    check_in_host(h, u, "U")?;
    if k == 0 || gamma <= nat(0) {
        return Err(Error::input("k and gamma must be positive"));
    }
    let kr = nat(k);
    require(delta * kr > nat(300), "delta must exceed 300/k")?;
    // |U| <= delta k / (24 sqrt gamma), squared to stay rational.
    let usz = nat(u.len());
    require(
        nat(576) * gamma * usz * usz <= delta * delta * kr * kr,
        "U larger than delta k/(24 sqrt gamma)",
    )?;
    require(sub_of(ustar, v2), "U* must be a subset of V2")?;
    require(nat(4) * nat(ustar.len()) >= delta * kr, "U* smaller than delta k/4")?;
    require(nat(8) * nat(t.n()) <= delta * kr, "tree larger than delta k/8")?;

    if cert == DensityCertificate::Certified {
        let m_thresh = crate::rat::floor_usize(gamma * kr);
        let budget = SearchBudget::default();
        if let NowhereDenseVerdict::SpotWitness(spot) =
            check_nowhere_dense(h, m_thresh, gamma, &budget)?
        {
            return Err(Error::NowhereDenseViolation(format!(
                "dense spot on {} + {} vertices refutes the certificate",
                spot.u_side.len(),
                spot.w_side.len()
            )));
        }
    }

    let b = shadow_rat(h, u, delta * kr / nat(4), 1);
    if nat(9) * nat(b.len()) > delta * kr {
        return Err(Error::NowhereDenseViolation(format!(
            "shadow of U has {} vertices, nowhere-density allows delta k/9 = {}",
            b.len(),
            delta * kr / nat(9)
        )));
    }
    let blocked = b.union(u);
    let xstar = ustar.difference(&blocked);
    let x1 = v2.difference(&blocked);
    let x2 = v3.difference(&blocked);
    let res = embed_shrubs_with_reservation(
        h,
        &xstar,
        &x1,
        &x2,
        p_family,
        std::slice::from_ref(t),
        k,
        seed,
        retries,
    )?;
    let mut res = res;
    let pe = &mut res.embeddings[0];
    pe.constraints = vec![
        (VertexSet::from_iter([t.root()]), ustar.clone()),
        (
            t.vertices().iter().copied().filter(|&v| v != t.root() && t.depth(v) % 2 == 0).collect(),
            v2.difference(u),
        ),
        (t.parity_classes().1, v3.difference(u)),
    ];
    pe.validate()?;
    debug_assert!(res.reserved.intersection(u).is_empty());
    Ok(res)
}
