//! Rooted trees and their order structure.
//!
//! A rooted tree carries the ancestor order (u precedes v when u lies on the
//! root-v path), depth parities, and the subtree vocabulary the partition
//! pipeline is built from: up-closed subtrees, seeds of connected pieces,
//! and fruits (even-depth vertices far from the root).
//!
//! Vertex ids are stable: a subtree view keeps the ids of the original tree.
//! Freshly parsed or generated trees use dense ids 0..n-1.

use crate::error::{Error, Result};

pub type Vertex = usize;

/// Largest vertex count the text parsers accept. Corrupt headers declaring
/// absurd counts must fail as parse errors before any allocation sized by
/// the count is attempted.
pub const PARSE_VERTEX_CAP: usize = 1 << 22;

/// Sorted, duplicate-free set of vertex ids.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VertexSet {
    ids: Vec<Vertex>,
}

impl VertexSet {
    pub fn new() -> Self {
        VertexSet { ids: Vec::new() }
    }

    /// Builds from arbitrary ids; sorts and deduplicates.
    pub fn from_iter(it: impl IntoIterator<Item = Vertex>) -> Self {
        let mut ids: Vec<Vertex> = it.into_iter().collect();
        ids.sort_unstable();
        ids.dedup();
        VertexSet { ids }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.ids.binary_search(&v).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.ids.iter().copied()
    }

    pub fn as_slice(&self) -> &[Vertex] {
        &self.ids
    }

    pub fn insert(&mut self, v: Vertex) -> bool {
        match self.ids.binary_search(&v) {
            Ok(_) => false,
            Err(i) => {
                self.ids.insert(i, v);
                true
            }
        }
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        VertexSet::from_iter(self.iter().chain(other.iter()))
    }

    pub fn difference(&self, other: &VertexSet) -> VertexSet {
        VertexSet::from_iter(self.iter().filter(|&v| !other.contains(v)))
    }

    pub fn intersection(&self, other: &VertexSet) -> VertexSet {
        VertexSet::from_iter(self.iter().filter(|&v| other.contains(v)))
    }
}

impl FromIterator<Vertex> for VertexSet {
    fn from_iter<I: IntoIterator<Item = Vertex>>(it: I) -> Self {
        VertexSet::from_iter(it)
    }
}

/// Leaf and branching statistics of a tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LeafStats {
    /// Vertices of undirected degree exactly 1.
    pub leaves: usize,
    /// Vertices of undirected degree at least 3.
    pub deg3plus: usize,
    /// Leaves split by depth parity: (even class, odd class).
    pub leaves_by_class: (usize, usize),
}

/// A tree with a distinguished root.
///
/// Internally arrays are indexed by raw vertex id up to an arena bound, so a
/// subtree view shares the id space of its parent tree. `vertices()` is the
/// authoritative member list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootedTree {
    root: Vertex,
    verts: Vec<Vertex>,
    member: Vec<bool>,
    parent: Vec<Option<Vertex>>,
    children: Vec<Vec<Vertex>>,
    depth: Vec<usize>,
}

impl RootedTree {
    /// Builds from an undirected edge list on dense ids 0..n-1.
    pub fn from_edges(n: usize, root: Vertex, edges: &[(Vertex, Vertex)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::input("tree must have at least one vertex"));
        }
        if root >= n {
            return Err(Error::input(format!("root {root} out of range for n={n}")));
        }
        if edges.len() != n - 1 {
            return Err(Error::input(format!(
                "tree on {n} vertices needs {} edges, got {}",
                n - 1,
                edges.len()
            )));
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::input(format!("edge ({u},{v}) out of range for n={n}")));
            }
            if u == v {
                return Err(Error::input(format!("loop at vertex {u}")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut parent = vec![None; n];
        let mut depth = vec![0usize; n];
        let mut seen = vec![false; n];
        let mut queue = std::collections::VecDeque::new();
        seen[root] = true;
        queue.push_back(root);
        let mut reached = 0usize;
        while let Some(v) = queue.pop_front() {
            reached += 1;
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(v);
                    depth[w] = depth[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        if reached != n {
            return Err(Error::input("edge list is disconnected or has a repeated edge"));
        }
        Self::from_parts(root, parent, depth)
    }

    /// Builds from an undirected edge list on arbitrary (sparse) ids.
    ///
    /// The vertex set is the root together with all edge endpoints.
    pub fn from_edges_sparse(root: Vertex, edges: &[(Vertex, Vertex)]) -> Result<Self> {
        let bound = edges
            .iter()
            .flat_map(|&(u, v)| [u, v])
            .chain([root])
            .max()
            .unwrap()
            + 1;
        let mut member = vec![false; bound];
        member[root] = true;
        let mut adj = vec![Vec::new(); bound];
        for &(u, v) in edges {
            if u == v {
                return Err(Error::input(format!("loop at vertex {u}")));
            }
            member[u] = true;
            member[v] = true;
            adj[u].push(v);
            adj[v].push(u);
        }
        let expected = member.iter().filter(|&&m| m).count();
        if edges.len() != expected - 1 {
            return Err(Error::input(format!(
                "tree on {expected} vertices needs {} edges, got {}",
                expected - 1,
                edges.len()
            )));
        }
        let mut parent = vec![None; bound];
        let mut depth = vec![0usize; bound];
        let mut children = vec![Vec::new(); bound];
        let mut seen = vec![false; bound];
        let mut queue = std::collections::VecDeque::new();
        seen[root] = true;
        queue.push_back(root);
        let mut verts = Vec::new();
        while let Some(v) = queue.pop_front() {
            verts.push(v);
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(v);
                    depth[w] = depth[v] + 1;
                    children[v].push(w);
                    queue.push_back(w);
                }
            }
        }
        if verts.len() != expected {
            return Err(Error::input("edge list is disconnected or has a repeated edge"));
        }
        verts.sort_unstable();
        for ch in &mut children {
            ch.sort_unstable();
        }
        Ok(RootedTree { root, verts, member, parent, children, depth })
    }

    /// Builds from a parent map; `parent[root]` must be `None`.
    pub fn from_parents(root: Vertex, parent: Vec<Option<Vertex>>) -> Result<Self> {
        let n = parent.len();
        if root >= n || parent[root].is_some() {
            return Err(Error::input("root must be in range with no parent entry"));
        }
        // Depth by walking up; 0=unvisited, 1=on stack, 2=done detects cycles.
        let mut depth = vec![0usize; n];
        let mut state = vec![0u8; n];
        state[root] = 2;
        for start in 0..n {
            if state[start] != 0 {
                continue;
            }
            let mut chain = Vec::new();
            let mut v = start;
            loop {
                match state[v] {
                    2 => break,
                    1 => return Err(Error::input("parent map contains a cycle")),
                    _ => {}
                }
                state[v] = 1;
                chain.push(v);
                match parent[v] {
                    Some(p) if p < n => v = p,
                    Some(p) => return Err(Error::input(format!("parent {p} out of range"))),
                    None => return Err(Error::input(format!("vertex {v} unreachable from root"))),
                }
            }
            let mut d = depth[v];
            for &u in chain.iter().rev() {
                d += 1;
                depth[u] = d;
                state[u] = 2;
            }
        }
        Self::from_parts(root, parent, depth)
    }

    fn from_parts(root: Vertex, parent: Vec<Option<Vertex>>, depth: Vec<usize>) -> Result<Self> {
        let n = parent.len();
        let mut children = vec![Vec::new(); n];
        for v in 0..n {
            if let Some(p) = parent[v] {
                children[p].push(v);
            }
        }
        for ch in &mut children {
            ch.sort_unstable();
        }
        Ok(RootedTree {
            root,
            verts: (0..n).collect(),
            member: vec![true; n],
            parent,
            children,
            depth,
        })
    }

    pub fn n(&self) -> usize {
        self.verts.len()
    }

    pub fn root(&self) -> Vertex {
        self.root
    }

    /// Member ids in ascending order.
    pub fn vertices(&self) -> &[Vertex] {
        &self.verts
    }

    pub fn has(&self, v: Vertex) -> bool {
        v < self.member.len() && self.member[v]
    }

    fn check(&self, v: Vertex) -> Result<()> {
        if self.has(v) {
            Ok(())
        } else {
            Err(Error::input(format!("vertex {v} is not in the tree")))
        }
    }

    /// Parent of v; `None` at the root.
    pub fn parent(&self, v: Vertex) -> Option<Vertex> {
        debug_assert!(self.has(v));
        self.parent[v]
    }

    /// Children of v in ascending id order.
    pub fn children(&self, v: Vertex) -> &[Vertex] {
        debug_assert!(self.has(v));
        &self.children[v]
    }

    /// Distance from the root.
    pub fn depth(&self, v: Vertex) -> usize {
        debug_assert!(self.has(v));
        self.depth[v]
    }

    /// Undirected degree inside the tree.
    pub fn degree(&self, v: Vertex) -> usize {
        debug_assert!(self.has(v));
        self.children[v].len() + usize::from(self.parent[v].is_some())
    }

    pub fn is_leaf(&self, v: Vertex) -> bool {
        self.degree(v) == 1
    }

    /// Tree neighbours: parent first (if any), then children ascending.
    pub fn neighbors(&self, v: Vertex) -> impl Iterator<Item = Vertex> + '_ {
        debug_assert!(self.has(v));
        self.parent[v].into_iter().chain(self.children[v].iter().copied())
    }

    /// Graph distance between u and v, via the deepest common ancestor.
    pub fn dist(&self, u: Vertex, v: Vertex) -> Result<usize> {
        self.check(u)?;
        self.check(v)?;
        let (mut a, mut b) = (u, v);
        let mut d = 0usize;
        while self.depth[a] > self.depth[b] {
            a = self.parent[a].expect("non-root has parent");
            d += 1;
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b].expect("non-root has parent");
            d += 1;
        }
        while a != b {
            a = self.parent[a].expect("non-root has parent");
            b = self.parent[b].expect("non-root has parent");
            d += 2;
        }
        Ok(d)
    }

    /// Whether u lies on the root-v path (reflexively).
    pub fn precedes(&self, u: Vertex, v: Vertex) -> Result<bool> {
        self.check(u)?;
        self.check(v)?;
        let mut b = v;
        while self.depth[b] > self.depth[u] {
            b = self.parent[b].expect("non-root has parent");
        }
        Ok(b == u)
    }

    /// Vertices at even and odd depth; the root is in the even class.
    pub fn parity_classes(&self) -> (VertexSet, VertexSet) {
        let even = self.verts.iter().copied().filter(|&v| self.depth[v] % 2 == 0).collect();
        let odd = self.verts.iter().copied().filter(|&v| self.depth[v] % 2 == 1).collect();
        (even, odd)
    }

    /// Vertex ids of the up-closure of x (x and all its descendants).
    pub fn descendants(&self, x: Vertex) -> Result<VertexSet> {
        self.check(x)?;
        let mut out = Vec::new();
        let mut stack = vec![x];
        while let Some(v) = stack.pop() {
            out.push(v);
            stack.extend_from_slice(&self.children[v]);
        }
        Ok(VertexSet::from_iter(out))
    }

    /// The subtree rooted at x induced on the up-closure of x.
    ///
    /// Ids are preserved; depths are re-based so that x has depth 0.
    pub fn subtree_at(&self, x: Vertex) -> Result<RootedTree> {
        let verts = self.descendants(x)?;
        let bound = self.member.len();
        let mut member = vec![false; bound];
        let mut parent = vec![None; bound];
        let mut children = vec![Vec::new(); bound];
        let mut depth = vec![0usize; bound];
        for v in verts.iter() {
            member[v] = true;
            depth[v] = self.depth[v] - self.depth[x];
            if v != x {
                parent[v] = self.parent[v];
            }
            children[v] = self.children[v].clone();
        }
        Ok(RootedTree {
            root: x,
            verts: verts.iter().collect(),
            member,
            parent,
            children,
            depth,
        })
    }

    /// The deepest vertex outside `sub` preceding all of `sub`.
    ///
    /// `sub` must induce a connected subtree not containing the root; the
    /// seed is then the parent of its unique shallowest vertex.
    pub fn seed_of(&self, sub: &VertexSet) -> Result<Vertex> {
        if sub.is_empty() {
            return Err(Error::input("seed of an empty set is undefined"));
        }
        for v in sub.iter() {
            self.check(v)?;
        }
        if sub.contains(self.root) {
            return Err(Error::input("set contains the root, so it has no seed"));
        }
        let top = sub.iter().min_by_key(|&v| self.depth[v]).expect("nonempty");
        for v in sub.iter() {
            if v != top && !sub.contains(self.parent[v].expect("non-root has parent")) {
                return Err(Error::input("set does not induce a connected subtree"));
            }
        }
        Ok(self.parent[top].expect("top is not the root"))
    }

    /// Vertices at even depth at least 4.
    pub fn fruits(&self) -> VertexSet {
        self.verts
            .iter()
            .copied()
            .filter(|&v| self.depth[v] >= 4 && self.depth[v] % 2 == 0)
            .collect()
    }

    /// Parents of the set's non-root members, minus the set itself.
    pub fn parent_set(&self, set: &VertexSet) -> Result<VertexSet> {
        for v in set.iter() {
            self.check(v)?;
        }
        Ok(set
            .iter()
            .filter_map(|v| self.parent[v])
            .filter(|&p| !set.contains(p))
            .collect())
    }

    /// Leaf and branching counts; see `LeafStats`.
    pub fn leaf_stats(&self) -> LeafStats {
        let mut leaves = 0;
        let mut deg3plus = 0;
        let mut by_class = (0, 0);
        for &v in &self.verts {
            let d = self.degree(v);
            if d == 1 {
                leaves += 1;
                if self.depth[v] % 2 == 0 {
                    by_class.0 += 1;
                } else {
                    by_class.1 += 1;
                }
            }
            if d >= 3 {
                deg3plus += 1;
            }
        }
        LeafStats { leaves, deg3plus, leaves_by_class: by_class }
    }

    /// Whether ids are exactly 0..n-1.
    pub fn is_dense(&self) -> bool {
        self.verts.last().map_or(true, |&m| m + 1 == self.verts.len())
    }

    /// Parses the text format: a line "n root", then n-1 lines "child parent".
    ///
    /// The declared count is capped at [`PARSE_VERTEX_CAP`] so a corrupt
    /// header yields an error, not an allocation failure.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or(Error::Parse { line: 1, msg: "empty input".into() })?;
        let mut it = header.split_whitespace();
        let n: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or(Error::Parse { line: 1, msg: "expected vertex count".into() })?;
        let root: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or(Error::Parse { line: 1, msg: "expected root id".into() })?;
        if it.next().is_some() {
            return Err(Error::Parse { line: 1, msg: "trailing tokens after header".into() });
        }
        if n == 0 {
            return Err(Error::Parse { line: 1, msg: "vertex count must be positive".into() });
        }
        if n > PARSE_VERTEX_CAP {
            return Err(Error::Parse {
                line: 1,
                msg: format!("vertex count {n} exceeds the parser cap {PARSE_VERTEX_CAP}"),
            });
        }
        if root >= n {
            return Err(Error::Parse { line: 1, msg: format!("root {root} out of range") });
        }
        let mut parent: Vec<Option<Vertex>> = vec![None; n];
        let mut given = 0usize;
        for (idx, raw) in lines {
            let line = idx + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let mut it = raw.split_whitespace();
            let c: usize = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or(Error::Parse { line, msg: "expected child id".into() })?;
            let p: usize = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or(Error::Parse { line, msg: "expected parent id".into() })?;
            if it.next().is_some() {
                return Err(Error::Parse { line, msg: "trailing tokens".into() });
            }
            if c >= n || p >= n {
                return Err(Error::Parse { line, msg: format!("ids ({c},{p}) out of range") });
            }
            if c == root {
                return Err(Error::Parse { line, msg: "root cannot have a parent".into() });
            }
            if parent[c].is_some() {
                return Err(Error::Parse { line, msg: format!("vertex {c} has two parents") });
            }
            parent[c] = Some(p);
            given += 1;
        }
        if given != n - 1 {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected {} parent lines, got {given}", n - 1),
            });
        }
        Self::from_parents(root, parent).map_err(|e| match e {
            Error::Input(msg) => Error::Parse { line: 1, msg },
            other => other,
        })
    }

    /// Canonical text form: header, then "child parent" ascending by child.
    ///
    /// Requires dense ids; parse-serialize is byte-stable.
    pub fn serialize(&self) -> Result<String> {
        if !self.is_dense() {
            return Err(Error::input("serialization requires dense ids 0..n-1"));
        }
        let mut out = format!("{} {}\n", self.n(), self.root);
        for &v in &self.verts {
            if let Some(p) = self.parent[v] {
                out.push_str(&format!("{v} {p}\n"));
            }
        }
        Ok(out)
    }
}

/// Path 0-1-...-(n-1) rooted at 0.
pub fn path(n: usize) -> RootedTree {
    let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    RootedTree::from_edges(n, 0, &edges).unwrap()
}

/// Star with the given number of leaves, rooted at the center 0.
pub fn star(leaves: usize) -> RootedTree {
    let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
    RootedTree::from_edges(leaves + 1, 0, &edges).unwrap()
}

/// Deterministic random recursive tree: parent(i) uniform in 0..i.
pub fn random_tree(n: usize, seed: u64) -> RootedTree {
    use rand::Rng;
    let mut rng = crate::rng::seeded(seed);
    let mut parent = vec![None; n];
    for v in 1..n {
        parent[v] = Some(rng.gen_range(0..v));
    }
    RootedTree::from_parents(0, parent).unwrap()
}
