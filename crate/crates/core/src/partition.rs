//! Fine partitions of rooted trees.
//!
//! A fine partition splits a rooted tree into two sides of cut vertices and
//! a family of small shrubs, subject to twelve clauses: partition, rooted
//! cut set, size bound 336k/ℓ, distance parity between cut vertices, shrub
//! size ≤ ℓ, one-sided anchoring, seeds among cut vertices, at most two
//! anchors per shrub, anchor distance ≥ 6, separation of internal shrubs,
//! no internal shrubs on the B side, and the end-mass inequality. The
//! constructor builds one in six cut-set stages W₁ ⊆ … ⊆ W₅ ⊆ W, each
//! stage with a proven size bound, asserted here at runtime; the validator
//! re-checks every clause from scratch and reports all failures.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::tree::{RootedTree, Vertex, VertexSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShrubClass {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShrubKind {
    /// Up-closed: the whole residual subtree below its root.
    End,
    /// Has a cut vertex strictly below it.
    Internal,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shrub {
    pub vertices: VertexSet,
    pub class: ShrubClass,
    pub kind: ShrubKind,
    /// The cut vertex directly above: parent of `root`.
    pub seed: Vertex,
    /// The other adjacent cut vertex, for two-anchor shrubs.
    pub second_anchor: Option<Vertex>,
    /// Minimal vertex of the shrub in the tree order.
    pub root: Vertex,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinePartition {
    pub w_a: VertexSet,
    pub w_b: VertexSet,
    pub shrubs: Vec<Shrub>,
    pub ell: usize,
}

impl FinePartition {
    /// All cut vertices.
    pub fn w(&self) -> VertexSet {
        self.w_a.union(&self.w_b)
    }

    /// Line-oriented report, stable across runs.
    pub fn report(&self) -> String {
        let fmt_set = |s: &VertexSet| {
            if s.is_empty() {
                "-".to_string()
            } else {
                s.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
            }
        };
        let mut out = String::new();
        out.push_str(&format!("ell: {}\n", self.ell));
        out.push_str(&format!("w_a: {}\n", fmt_set(&self.w_a)));
        out.push_str(&format!("w_b: {}\n", fmt_set(&self.w_b)));
        out.push_str(&format!("shrubs: {}\n", self.shrubs.len()));
        for (i, s) in self.shrubs.iter().enumerate() {
            out.push_str(&format!(
                "shrub {i}: class={:?} kind={:?} root={} seed={} second_anchor={} vertices={}\n",
                s.class,
                s.kind,
                s.root,
                s.seed,
                s.second_anchor.map_or("-".into(), |v| v.to_string()),
                fmt_set(&s.vertices),
            ));
        }
        out
    }
}

/// The intermediate cut sets of the six-stage construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FineStages {
    pub w1: VertexSet,
    pub w2: VertexSet,
    pub w3: VertexSet,
    pub w4: VertexSet,
    pub w5: VertexSet,
    pub x: VertexSet,
}

/// A connected piece of T − W: its top vertex and all members.
struct Piece {
    root: Vertex,
    verts: VertexSet,
}

fn arena_cap(t: &RootedTree) -> usize {
    t.vertices().iter().max().map_or(0, |&v| v + 1)
}

/// Components of T − W, ascending by their top vertex.
fn pieces(t: &RootedTree, w: &BTreeSet<Vertex>) -> Vec<Piece> {
    let cap = arena_cap(t);
    let mut seen = vec![false; cap];
    let mut out = Vec::new();
    for &start in t.vertices() {
        if w.contains(&start) || seen[start] {
            continue;
        }
        let mut stack = vec![start];
        seen[start] = true;
        let mut members = Vec::new();
        while let Some(v) = stack.pop() {
            members.push(v);
            for u in t.neighbors(v) {
                if !w.contains(&u) && !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        let root = members.iter().copied().min_by_key(|&v| (t.depth(v), v)).unwrap();
        out.push(Piece { root, verts: members.into_iter().collect() });
    }
    out.sort_by_key(|p| p.root);
    out
}

/// Cut vertices adjacent to the piece.
fn anchors_of(t: &RootedTree, w: &BTreeSet<Vertex>, piece: &Piece) -> Vec<Vertex> {
    let mut anchors = BTreeSet::new();
    for v in piece.verts.iter() {
        for u in t.neighbors(v) {
            if w.contains(&u) {
                anchors.insert(u);
            }
        }
    }
    anchors.into_iter().collect()
}

/// Interior vertices of the tree path between two vertices.
fn path_interior(t: &RootedTree, a: Vertex, b: Vertex) -> Vec<Vertex> {
    let (mut x, mut y) = (a, b);
    let mut from_x = Vec::new();
    let mut from_y = Vec::new();
    while t.depth(x) > t.depth(y) {
        from_x.push(x);
        x = t.parent(x).unwrap();
    }
    while t.depth(y) > t.depth(x) {
        from_y.push(y);
        y = t.parent(y).unwrap();
    }
    while x != y {
        from_x.push(x);
        from_y.push(y);
        x = t.parent(x).unwrap();
        y = t.parent(y).unwrap();
    }
    let mut interior: Vec<Vertex> = from_x.into_iter().skip(1).collect();
    if x != a && x != b {
        interior.push(x);
    }
    interior.extend(from_y.into_iter().skip(1));
    interior
}

/// Builds a fine partition of (T,r), returning the stage cut sets as well.
pub fn fine_partition_with_stages(
    t: &RootedTree,
    ell: usize,
) -> Result<(FinePartition, FineStages)> {
    if ell == 0 {
        return Err(Error::input("ell must be at least 1"));
    }
    let n = t.n();
    let cap = arena_cap(t);
    let root = t.root();

    // Stage 1: repeatedly cut the deepest vertex whose residual subtree
    // still exceeds ell, keeping the vertex itself; finish at the root.
    let mut alive = vec![false; cap];
    for &v in t.vertices() {
        alive[v] = true;
    }
    let mut w1: BTreeSet<Vertex> = BTreeSet::new();
    loop {
        let mut order: Vec<Vertex> = t.vertices().iter().copied().filter(|&v| alive[v]).collect();
        order.sort_by_key(|&v| std::cmp::Reverse(t.depth(v)));
        let mut size = vec![0usize; cap];
        for &v in &order {
            size[v] = 1 + t
                .children(v)
                .iter()
                .filter(|&&c| alive[c])
                .map(|&c| size[c])
                .sum::<usize>();
        }
        let mut best: Option<Vertex> = None;
        for &v in t.vertices() {
            if !alive[v] || size[v] <= ell {
                continue;
            }
            if t.children(v).iter().any(|&c| alive[c] && size[c] > ell) {
                continue;
            }
            best = Some(match best {
                None => v,
                Some(b) if (t.depth(v), std::cmp::Reverse(v)) > (t.depth(b), std::cmp::Reverse(b)) => v,
                Some(b) => b,
            });
        }
        match best {
            Some(x) => {
                w1.insert(x);
                let mut stack: Vec<Vertex> =
                    t.children(x).iter().copied().filter(|&c| alive[c]).collect();
                while let Some(v) = stack.pop() {
                    alive[v] = false;
                    stack.extend(t.children(v).iter().copied().filter(|&c| alive[c]));
                }
            }
            None => {
                w1.insert(root);
                break;
            }
        }
    }
    assert!((w1.len() - 1) * ell <= n, "stage 1 exceeded its cut budget");

    // Stage 2: branch vertices of the tree spanned by paths inside W₁.
    // Every leaf of that spanned subtree is a W₁ vertex, so it has fewer
    // than |W₁| branch vertices.
    let mut down = vec![0usize; cap];
    let mut by_depth: Vec<Vertex> = t.vertices().to_vec();
    by_depth.sort_by_key(|&v| std::cmp::Reverse(t.depth(v)));
    for &v in &by_depth {
        down[v] = w1.contains(&v) as usize
            + t.children(v).iter().map(|&c| down[c]).sum::<usize>();
    }
    let total = w1.len();
    let in_spanned = |v: Vertex| {
        if w1.contains(&v) {
            return true;
        }
        let branches = t.children(v).iter().filter(|&&c| down[c] > 0).count()
            + (total > down[v]) as usize;
        branches >= 2
    };
    let spanned: Vec<bool> = (0..cap)
        .map(|v| t.has(v) && in_spanned(v))
        .collect();
    let mut w2 = w1.clone();
    for &v in t.vertices() {
        if !spanned[v] || w1.contains(&v) {
            continue;
        }
        let deg = t.neighbors(v).filter(|&u| spanned[u]).count();
        if deg >= 3 {
            w2.insert(v);
        }
    }
    assert!(w2.len() <= 2 * w1.len(), "stage 2 exceeded its cut budget");

    // Stage 3: parents of all cut vertices.
    let mut w3 = w2.clone();
    for &v in &w2 {
        if let Some(p) = t.parent(v) {
            w3.insert(p);
        }
    }
    assert!(w3.len() <= 4 * w1.len(), "stage 3 exceeded its cut budget");

    // Stage 4: roots of pieces whose anchors sit in both colour classes.
    let mut w4 = w3.clone();
    for piece in pieces(t, &w3) {
        let anchors = anchors_of(t, &w3, &piece);
        let has_even = anchors.iter().any(|&z| t.depth(z) % 2 == 0);
        let has_odd = anchors.iter().any(|&z| t.depth(z) % 2 == 1);
        if has_even && has_odd {
            w4.insert(piece.root);
        }
    }
    assert!(w4.len() <= 8 * w1.len(), "stage 4 exceeded its cut budget");

    // Stage 5: dissolve two-anchor pieces whose anchors are closer than 8
    // by cutting the whole connecting path; later stages shorten anchor
    // distances by at most two, so 8 here protects the final bound of 6.
    let mut w5 = w4.clone();
    for piece in pieces(t, &w4) {
        let anchors = anchors_of(t, &w4, &piece);
        if anchors.len() == 2 {
            let d = t.dist(anchors[0], anchors[1])?;
            if d < 8 {
                for z in path_interior(t, anchors[0], anchors[1]) {
                    w5.insert(z);
                }
            }
        }
    }
    assert!((w5.len() - 1) * ell <= 64 * n, "stage 5 exceeded its cut budget");

    // Final stage: orient the colour classes so that end mass favours the
    // side of the root's class, then absorb the boundary vertices of
    // internal pieces seeded on the B side.
    let current = pieces(t, &w5);
    let mut end_even = 0usize;
    let mut end_odd = 0usize;
    for piece in &current {
        let anchors = anchors_of(t, &w5, piece);
        let seed = t.parent(piece.root).expect("the tree root is always cut");
        let is_end = anchors.len() == 1;
        if is_end {
            if t.depth(seed) % 2 == 0 {
                end_even += piece.verts.len();
            } else {
                end_odd += piece.verts.len();
            }
        }
    }
    let swapped = end_even < end_odd;
    let side_a = |v: Vertex| (t.depth(v) % 2 == 0) != swapped;

    let mut x_set: BTreeSet<Vertex> = BTreeSet::new();
    for piece in &current {
        let anchors = anchors_of(t, &w5, piece);
        let seed = t.parent(piece.root).unwrap();
        if anchors.len() >= 2 && !side_a(seed) {
            for v in piece.verts.iter() {
                if t.neighbors(v).any(|u| w5.contains(&u)) {
                    x_set.insert(v);
                }
            }
        }
    }
    assert!(x_set.len() <= 2 * w5.len(), "final stage exceeded its cut budget");

    let mut w: BTreeSet<Vertex> = w5.clone();
    w.extend(x_set.iter().copied());
    assert!(w.len() * ell <= 336 * n, "final cut set exceeds 336k/ell");

    let mut w_a = VertexSet::new();
    let mut w_b = VertexSet::new();
    for &v in &w {
        if side_a(v) {
            w_a.insert(v);
        } else {
            w_b.insert(v);
        }
    }
    let mut shrubs = Vec::new();
    for piece in pieces(t, &w) {
        let anchors = anchors_of(t, &w, &piece);
        let seed = t.parent(piece.root).unwrap();
        let below: Vec<Vertex> = anchors.iter().copied().filter(|&z| z != seed).collect();
        assert!(below.len() <= 1, "piece with more than two anchors survived");
        shrubs.push(Shrub {
            vertices: piece.verts,
            class: if side_a(seed) { ShrubClass::A } else { ShrubClass::B },
            kind: if below.is_empty() { ShrubKind::End } else { ShrubKind::Internal },
            seed,
            second_anchor: below.first().copied(),
            root: piece.root,
        });
    }

    let to_set = |s: &BTreeSet<Vertex>| s.iter().copied().collect::<VertexSet>();
    let stages = FineStages {
        w1: to_set(&w1),
        w2: to_set(&w2),
        w3: to_set(&w3),
        w4: to_set(&w4),
        w5: to_set(&w5),
        x: x_set.iter().copied().collect(),
    };
    Ok((FinePartition { w_a, w_b, shrubs, ell }, stages))
}

/// Builds a fine partition of (T,r); see `fine_partition_with_stages`.
pub fn fine_partition(t: &RootedTree, ell: usize) -> Result<FinePartition> {
    fine_partition_with_stages(t, ell).map(|(p, _)| p)
}

// ───────────────────────── validation ─────────────────────────

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClauseResult {
    pub clause: char,
    pub pass: bool,
    pub detail: Option<String>,
}

/// Per-clause verdicts plus structural findings about the shrub records.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClauseReport {
    pub structure: Vec<String>,
    pub clauses: Vec<ClauseResult>,
}

impl ClauseReport {
    pub fn all_pass(&self) -> bool {
        self.structure.is_empty() && self.clauses.iter().all(|c| c.pass)
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for s in &self.structure {
            out.push_str(&format!("structure: FAIL ({s})\n"));
        }
        for c in &self.clauses {
            match (&c.pass, &c.detail) {
                (true, _) => out.push_str(&format!("clause {}: pass\n", c.clause)),
                (false, Some(d)) => out.push_str(&format!("clause {}: FAIL ({d})\n", c.clause)),
                (false, None) => out.push_str(&format!("clause {}: FAIL\n", c.clause)),
            }
        }
        out
    }
}

/// Is the shrub the whole residual subtree below its top vertex?
fn is_up_closed(t: &RootedTree, verts: &VertexSet) -> bool {
    verts
        .iter()
        .all(|v| t.children(v).iter().all(|&c| verts.contains(c)))
}

/// Checks every clause of the fine-partition definition, reporting all
/// failures with concrete counterexamples rather than stopping early.
pub fn validate_fine_partition(t: &RootedTree, ell: usize, p: &FinePartition) -> ClauseReport {
    let mut structure = Vec::new();
    let n = t.n();
    let cap = arena_cap(t);
    let w_all = p.w();

    for v in p.w_a.iter().chain(p.w_b.iter()) {
        if !t.has(v) {
            structure.push(format!("cut vertex {v} is not in the tree"));
        }
    }
    if !p.w_a.intersection(&p.w_b).is_empty() {
        structure.push("w_a and w_b intersect".into());
    }
    if p.ell != ell {
        structure.push(format!("partition records ell={}, validated at {ell}", p.ell));
    }
    for (i, s) in p.shrubs.iter().enumerate() {
        if s.vertices.is_empty() {
            structure.push(format!("shrub {i} is empty"));
            continue;
        }
        if let Some(v) = s.vertices.iter().find(|&v| !t.has(v)) {
            structure.push(format!("shrub {i} contains foreign vertex {v}"));
            continue;
        }
        if !s.vertices.contains(s.root) {
            structure.push(format!("shrub {i} does not contain its root {}", s.root));
        }
        match t.seed_of(&s.vertices) {
            Ok(seed) if seed == s.seed => {}
            Ok(seed) => structure.push(format!(
                "shrub {i} records seed {}, actual seed is {seed}",
                s.seed
            )),
            Err(e) => structure.push(format!("shrub {i} is not a rootable subtree: {e}")),
        }
        let end = is_up_closed(t, &s.vertices);
        if end != (s.kind == ShrubKind::End) {
            structure.push(format!("shrub {i} records kind {:?} but is_up_closed={end}", s.kind));
        }
        let seed_in_a = p.w_a.contains(s.seed);
        let seed_in_b = p.w_b.contains(s.seed);
        if (s.class == ShrubClass::A && seed_in_b) || (s.class == ShrubClass::B && seed_in_a) {
            structure.push(format!("shrub {i} class {:?} contradicts its seed's side", s.class));
        }
    }

    let mut clauses = Vec::new();
    let mut push = |clause: char, fail: Option<String>| match fail {
        None => clauses.push(ClauseResult { clause, pass: true, detail: None }),
        Some(d) => clauses.push(ClauseResult { clause, pass: false, detail: Some(d) }),
    };

    // (a) The cut sets and shrub vertex sets partition V(T).
    let mut count = vec![0usize; cap];
    for v in p.w_a.iter().chain(p.w_b.iter()) {
        if t.has(v) {
            count[v] += 1;
        }
    }
    for s in &p.shrubs {
        for v in s.vertices.iter() {
            if t.has(v) {
                count[v] += 1;
            }
        }
    }
    push(
        'a',
        t.vertices().iter().find_map(|&v| match count[v] {
            1 => None,
            0 => Some(format!("vertex {v} is uncovered")),
            c => Some(format!("vertex {v} appears {c} times")),
        }),
    );

    // (b) The root is a cut vertex.
    push(
        'b',
        (!w_all.contains(t.root())).then(|| format!("root {} is in no cut set", t.root())),
    );

    // (c) max{|W_A|,|W_B|} ≤ 336k/ℓ.
    let heavier = p.w_a.len().max(p.w_b.len());
    push(
        'c',
        (heavier * ell > 336 * n)
            .then(|| format!("side of size {heavier} exceeds 336·{n}/{ell}")),
    );

    // (d) Distances within a side are even, across sides odd; in a tree
    // this is exactly depth-parity homogeneity of each side.
    let parity_witness = |side: &VertexSet| -> Option<(Vertex, Vertex)> {
        let mut iter = side.iter().filter(|&v| t.has(v));
        let first = iter.next()?;
        iter.find(|&v| t.depth(v) % 2 != t.depth(first) % 2)
            .map(|v| (first, v))
    };
    let d_fail = if let Some((u, v)) = parity_witness(&p.w_a) {
        Some(format!("w_a pair ({u},{v}) at odd distance {}", t.dist(u, v).unwrap()))
    } else if let Some((u, v)) = parity_witness(&p.w_b) {
        Some(format!("w_b pair ({u},{v}) at odd distance {}", t.dist(u, v).unwrap()))
    } else {
        match (p.w_a.iter().find(|&v| t.has(v)), p.w_b.iter().find(|&v| t.has(v))) {
            (Some(u), Some(v)) if t.depth(u) % 2 == t.depth(v) % 2 => {
                Some(format!("cross pair ({u},{v}) at even distance {}", t.dist(u, v).unwrap()))
            }
            _ => None,
        }
    };
    push('d', d_fail);

    // (e) Every shrub has at most ℓ vertices.
    push(
        'e',
        p.shrubs
            .iter()
            .enumerate()
            .find(|(_, s)| s.vertices.len() > ell)
            .map(|(i, s)| format!("shrub {i} has {} > {ell} vertices", s.vertices.len())),
    );

    // (f) A-shrubs never touch W_B, and symmetrically.
    let mut f_fail = None;
    'f: for (i, s) in p.shrubs.iter().enumerate() {
        let opposite = match s.class {
            ShrubClass::A => &p.w_b,
            ShrubClass::B => &p.w_a,
        };
        for v in s.vertices.iter().filter(|&v| t.has(v)) {
            if let Some(u) = t.neighbors(v).find(|&u| opposite.contains(u)) {
                f_fail = Some(format!(
                    "shrub {i} ({:?}) vertex {v} is adjacent to opposite cut vertex {u}",
                    s.class
                ));
                break 'f;
            }
        }
    }
    push('f', f_fail);

    // (g) Seeds lie in W_A ∪ W_B.
    push(
        'g',
        p.shrubs.iter().enumerate().find_map(|(i, s)| match t.seed_of(&s.vertices) {
            Ok(seed) if !w_all.contains(seed) => {
                Some(format!("shrub {i} has seed {seed} outside the cut sets"))
            }
            _ => None,
        }),
    );

    // (h) At most two adjacent cut vertices per shrub.
    let shrub_anchors: Vec<Vec<Vertex>> = p
        .shrubs
        .iter()
        .map(|s| {
            let mut a = BTreeSet::new();
            for v in s.vertices.iter().filter(|&v| t.has(v)) {
                for u in t.neighbors(v) {
                    if w_all.contains(u) {
                        a.insert(u);
                    }
                }
            }
            a.into_iter().collect()
        })
        .collect();
    push(
        'h',
        shrub_anchors
            .iter()
            .enumerate()
            .find(|(_, a)| a.len() > 2)
            .map(|(i, a)| format!("shrub {i} has {} adjacent cut vertices", a.len())),
    );

    // (i) Anchor pairs are at distance ≥ 6.
    let mut i_fail = None;
    'i: for (i, anchors) in shrub_anchors.iter().enumerate() {
        for (j, &z1) in anchors.iter().enumerate() {
            for &z2 in &anchors[j + 1..] {
                let d = t.dist(z1, z2).unwrap();
                if d < 6 {
                    i_fail = Some(format!("shrub {i} anchors ({z1},{z2}) at distance {d}"));
                    break 'i;
                }
            }
        }
    }
    push('i', i_fail);

    // (j) Vertices of distinct internal shrubs, one preceding the other,
    // are at distance > 2: no vertex may find its parent or grandparent
    // in a different internal shrub.
    let internal_ids: Vec<Option<usize>> = {
        let mut owner = vec![None; cap];
        for (i, s) in p.shrubs.iter().enumerate() {
            if !is_up_closed(t, &s.vertices) {
                for v in s.vertices.iter().filter(|&v| t.has(v)) {
                    owner[v] = Some(i);
                }
            }
        }
        owner
    };
    let mut j_fail = None;
    'j: for &v in t.vertices() {
        let Some(mine) = internal_ids[v] else { continue };
        let mut up = t.parent(v);
        for _ in 0..2 {
            let Some(u) = up else { break };
            if let Some(theirs) = internal_ids[u] {
                if theirs != mine {
                    j_fail = Some(format!(
                        "vertex {u} of internal shrub {theirs} precedes vertex {v} of internal shrub {mine} at distance {}",
                        t.dist(u, v).unwrap()
                    ));
                    break 'j;
                }
            }
            up = t.parent(u);
        }
    }
    push('j', j_fail);

    // (k) No internal shrubs on the B side.
    push(
        'k',
        p.shrubs
            .iter()
            .enumerate()
            .find(|(_, s)| s.class == ShrubClass::B && !is_up_closed(t, &s.vertices))
            .map(|(i, _)| format!("shrub {i} is internal but lies on side B")),
    );

    // (l) End mass on side A covers all of side B.
    let end_a: usize = p
        .shrubs
        .iter()
        .filter(|s| s.class == ShrubClass::A && is_up_closed(t, &s.vertices))
        .map(|s| s.vertices.len())
        .sum();
    let all_b: usize = p
        .shrubs
        .iter()
        .filter(|s| s.class == ShrubClass::B)
        .map(|s| s.vertices.len())
        .sum();
    push(
        'l',
        (end_a < all_b).then(|| format!("A-side end mass {end_a} below B-side total {all_b}")),
    );

    ClauseReport { structure, clauses }
}

// ───────────────────────── ordered skeletons ─────────────────────────

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SkeletonKind {
    Hub,
    Shrub,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SkeletonItem {
    pub kind: SkeletonKind,
    pub vertices: VertexSet,
    pub index: usize,
}

/// Orders the hubs and shrubs so that the first item is the hub holding
/// the root and every prefix spans a connected subgraph of T: a depth-first
/// walk of the quotient structure, neighbors ascending.
pub fn ordered_skeleton(t: &RootedTree, p: &FinePartition) -> Result<Vec<SkeletonItem>> {
    let report = validate_fine_partition(t, p.ell, p);
    if !report.all_pass() {
        return Err(Error::input("partition fails validation"));
    }
    let cap = arena_cap(t);
    let w = p.w();

    // Hubs: components of the forest induced on the cut vertices.
    let mut hub_of = vec![usize::MAX; cap];
    let mut items: Vec<(SkeletonKind, VertexSet)> = Vec::new();
    for start in w.iter() {
        if hub_of[start] != usize::MAX {
            continue;
        }
        let id = items.len();
        let mut stack = vec![start];
        hub_of[start] = id;
        let mut members = Vec::new();
        while let Some(v) = stack.pop() {
            members.push(v);
            for u in t.neighbors(v) {
                if w.contains(u) && hub_of[u] == usize::MAX {
                    hub_of[u] = id;
                    stack.push(u);
                }
            }
        }
        items.push((SkeletonKind::Hub, members.into_iter().collect()));
    }
    for s in &p.shrubs {
        items.push((SkeletonKind::Shrub, s.vertices.clone()));
    }

    // Sort by minimal vertex, root hub first; then walk depth-first.
    let root_item = hub_of[t.root()];
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by_key(|&i| (i != root_item, items[i].1.iter().next().unwrap()));
    let rank: Vec<usize> = {
        let mut r = vec![0; items.len()];
        for (pos, &i) in order.iter().enumerate() {
            r[i] = pos;
        }
        r
    };
    let mut item_of = vec![usize::MAX; cap];
    for (i, (_, set)) in items.iter().enumerate() {
        for v in set.iter() {
            item_of[v] = rank[i];
        }
    }
    let sorted: Vec<(SkeletonKind, VertexSet)> =
        order.iter().map(|&i| items[i].clone()).collect();
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); sorted.len()];
    for &v in t.vertices() {
        if let Some(par) = t.parent(v) {
            let (a, b) = (item_of[v], item_of[par]);
            if a != b {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
    }
    let mut seen = vec![false; sorted.len()];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut out = Vec::new();
    while let Some(i) = stack.pop() {
        let index = out.len();
        let (kind, vertices) = sorted[i].clone();
        out.push(SkeletonItem { kind, vertices, index });
        for &nb in adj[i].iter().rev() {
            if !seen[nb] {
                seen[nb] = true;
                stack.push(nb);
            }
        }
    }
    Ok(out)
}

// ───────────────────────── subshrub classification ─────────────────────────

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubshrubSplit {
    /// The unique component of the shrub minus its root that touches the
    /// neighborhood of the shrub's own cut side.
    pub principal: VertexSet,
    pub peripherals: Vec<VertexSet>,
}

/// Splits an internal shrub minus its root into the principal component
/// and the peripheral ones.
pub fn classify_subshrubs(t: &RootedTree, p: &FinePartition, s: &Shrub) -> Result<SubshrubSplit> {
    if s.kind != ShrubKind::Internal {
        return Err(Error::input("only internal shrubs have subshrub splits"));
    }
    let own_side = match s.class {
        ShrubClass::A => &p.w_a,
        ShrubClass::B => &p.w_b,
    };
    let mut comps: Vec<VertexSet> = Vec::new();
    let mut seen: BTreeSet<Vertex> = BTreeSet::new();
    seen.insert(s.root);
    for start in s.vertices.iter() {
        if seen.contains(&start) {
            continue;
        }
        let mut stack = vec![start];
        seen.insert(start);
        let mut members = Vec::new();
        while let Some(v) = stack.pop() {
            members.push(v);
            for u in t.neighbors(v) {
                if s.vertices.contains(u) && !seen.contains(&u) {
                    seen.insert(u);
                    stack.push(u);
                }
            }
        }
        comps.push(members.into_iter().collect());
    }
    let touches: Vec<bool> = comps
        .iter()
        .map(|c| {
            c.iter()
                .any(|v| t.neighbors(v).any(|u| own_side.contains(u)))
        })
        .collect();
    let hits = touches.iter().filter(|&&b| b).count();
    if hits != 1 {
        return Err(Error::contract(format!(
            "expected one principal component, found {hits}"
        )));
    }
    let idx = touches.iter().position(|&b| b).unwrap();
    let principal = comps.remove(idx);
    Ok(SubshrubSplit { principal, peripherals: comps })
}
