//! Host graphs and their structural predicates.
//!
//! Simple undirected graphs with exact-rational density queries, iterated
//! shadows, dense-spot search, ε-regularity and super-regularity checks,
//! avoiding-set verification, and regularized matchings with their pairing
//! involution. All predicates compare exact rationals; verdicts from
//! sampled or budgeted searches are one-sided: a returned witness is always
//! sound, while absence of one is conclusive only in exact mode.

use std::collections::BTreeMap;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rat::{ceil_usize, nat, Rat};
use crate::tree::{Vertex, VertexSet, PARSE_VERTEX_CAP};

/// Largest n for which the O(n²)-bit adjacency matrix is kept.
const BITSET_MAX: usize = 4096;

/// Simple undirected graph on dense ids 0..n-1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adj: Vec<Vec<u32>>,
    bits: Option<Vec<u64>>,
    words: usize,
    m: usize,
}

impl Graph {
    pub fn new(n: usize, edges: &[(Vertex, Vertex)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::input(format!("edge ({u},{v}) out of range for n={n}")));
            }
            if u == v {
                return Err(Error::input(format!("self-loop at {u}")));
            }
            adj[u].push(v as u32);
            adj[v].push(u as u32);
        }
        for (v, row) in adj.iter_mut().enumerate() {
            row.sort_unstable();
            if row.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::input(format!("repeated edge at vertex {v}")));
            }
        }
        let words = n.div_ceil(64);
        let bits = (n <= BITSET_MAX).then(|| {
            let mut b = vec![0u64; n * words];
            for (v, row) in adj.iter().enumerate() {
                for &w in row {
                    b[v * words + (w as usize) / 64] |= 1 << (w % 64);
                }
            }
            b
        });
        Ok(Graph { n, adj, bits, words, m: edges.len() })
    }

    pub fn empty(n: usize) -> Self {
        Graph::new(n, &[]).expect("empty graph is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.m
    }

    pub fn deg(&self, v: Vertex) -> usize {
        self.adj[v].len()
    }

    pub fn max_deg(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn neighbors(&self, v: Vertex) -> impl Iterator<Item = Vertex> + '_ {
        self.adj[v].iter().map(|&w| w as usize)
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        if u >= self.n || v >= self.n {
            return false;
        }
        match &self.bits {
            Some(b) => b[u * self.words + v / 64] >> (v % 64) & 1 == 1,
            None => self.adj[u].binary_search(&(v as u32)).is_ok(),
        }
    }

    /// Degree of v into the set described by a membership mask.
    pub fn deg_into(&self, v: Vertex, mask: &[bool]) -> usize {
        self.adj[v].iter().filter(|&&w| mask[w as usize]).count()
    }

    /// All undirected edges, ascending (u,v) with u<v.
    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        (0..self.n).flat_map(move |u| {
            self.adj[u]
                .iter()
                .map(move |&w| (u, w as usize))
                .filter(|&(u, w)| u < w)
        })
    }

    /// Membership mask for a vertex set.
    pub fn mask_of(&self, set: &VertexSet) -> Vec<bool> {
        let mut mask = vec![false; self.n];
        for v in set.iter() {
            mask[v] = true;
        }
        mask
    }

    /// Parses the text format: a line "n", then one line "u v" per edge, u<v.
    ///
    /// The declared count is capped at [`PARSE_VERTEX_CAP`] so a corrupt
    /// header yields an error, not an allocation failure.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or(Error::Parse { line: 1, msg: "empty input".into() })?;
        let n: usize = header
            .trim()
            .parse()
            .map_err(|_| Error::Parse { line: 1, msg: "expected vertex count".into() })?;
        if n > PARSE_VERTEX_CAP {
            return Err(Error::Parse {
                line: 1,
                msg: format!("vertex count {n} exceeds the parser cap {PARSE_VERTEX_CAP}"),
            });
        }
        let mut edges = Vec::new();
        for (idx, raw) in lines {
            let line = idx + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let mut it = raw.split_whitespace();
            let u: usize = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or(Error::Parse { line, msg: "expected endpoint".into() })?;
            let v: usize = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or(Error::Parse { line, msg: "expected endpoint".into() })?;
            if it.next().is_some() {
                return Err(Error::Parse { line, msg: "trailing tokens".into() });
            }
            if u >= v {
                return Err(Error::Parse { line, msg: format!("edge must satisfy u<v, got {u} {v}") });
            }
            edges.push((u, v));
        }
        Graph::new(n, &edges).map_err(|e| match e {
            Error::Input(msg) => Error::Parse { line: 1, msg },
            other => other,
        })
    }

    /// Canonical text form: header, then edges ascending. Byte-stable.
    pub fn serialize(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for (u, v) in self.edges() {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    fn check_set(&self, set: &VertexSet, name: &str) -> Result<()> {
        if let Some(v) = set.iter().find(|&v| v >= self.n) {
            return Err(Error::input(format!("{name} contains out-of-range vertex {v}")));
        }
        Ok(())
    }
}

/// Ordered-pair edge count, density, and degree extremes of (X,Y).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairStats {
    /// Ordered pairs (x,y), x∈X, y∈Y, xy an edge; e(X,X) = 2·e(X).
    pub exy: u64,
    pub density: Rat,
    pub mindeg_xy: usize,
    pub maxdeg_xy: usize,
}

/// Degrees and density of the pair (X,Y); X and Y may overlap.
pub fn degree_and_density(g: &Graph, x: &VertexSet, y: &VertexSet) -> Result<PairStats> {
    g.check_set(x, "X")?;
    g.check_set(y, "Y")?;
    if x.is_empty() || y.is_empty() {
        return Err(Error::input("density of a pair with an empty side is undefined"));
    }
    let ymask = g.mask_of(y);
    let mut exy = 0u64;
    let mut mindeg = usize::MAX;
    let mut maxdeg = 0usize;
    for v in x.iter() {
        let d = g.deg_into(v, &ymask);
        exy += d as u64;
        mindeg = mindeg.min(d);
        maxdeg = maxdeg.max(d);
    }
    let density = Rat::new(exy as i64, (x.len() * y.len()) as i64);
    Ok(PairStats { exy, density, mindeg_xy: mindeg, maxdeg_xy: maxdeg })
}

/// Iterated shadow: vertices with more than `threshold` neighbors in the
/// previous iterate; exponent 0 returns U itself.
pub fn shadow(h: &Graph, u: &VertexSet, threshold: usize, exponent: usize) -> VertexSet {
    shadow_rat(h, u, Rat::from_integer(threshold as i64), exponent)
}

/// Shadow with an exact rational threshold (strict comparison).
pub fn shadow_rat(h: &Graph, u: &VertexSet, threshold: Rat, exponent: usize) -> VertexSet {
    let mut cur: VertexSet = u.iter().filter(|&v| v < h.n()).collect();
    debug_assert_eq!(cur.len(), u.len(), "shadow input contains out-of-range ids");
    for _ in 0..exponent {
        let mask = h.mask_of(&cur);
        cur = (0..h.n())
            .filter(|&v| nat(h.deg_into(v, &mask)) > threshold)
            .collect();
    }
    cur
}

// ───────────────────────── dense spots ─────────────────────────

/// Bipartite subgraph with density above `gamma` and spot degrees above `m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenseSpot {
    pub u_side: VertexSet,
    pub w_side: VertexSet,
    /// Edges as (u, w) with u in u_side, w in w_side.
    pub edges: Vec<(Vertex, Vertex)>,
    pub m: usize,
    pub gamma: Rat,
}

impl DenseSpot {
    /// Checks every invariant against the host; a passing spot is a proof.
    pub fn validate(&self, g: &Graph) -> Result<()> {
        if self.u_side.is_empty() || self.w_side.is_empty() {
            return Err(Error::input("spot sides must be nonempty"));
        }
        if !self.u_side.intersection(&self.w_side).is_empty() {
            return Err(Error::input("spot sides intersect"));
        }
        g.check_set(&self.u_side, "spot u_side")?;
        g.check_set(&self.w_side, "spot w_side")?;
        let mut deg: BTreeMap<Vertex, usize> = BTreeMap::new();
        let mut seen = std::collections::BTreeSet::new();
        for &(u, w) in &self.edges {
            if !self.u_side.contains(u) || !self.w_side.contains(w) {
                return Err(Error::input(format!("spot edge ({u},{w}) leaves the sides")));
            }
            if !g.has_edge(u, w) {
                return Err(Error::input(format!("spot edge ({u},{w}) not in host")));
            }
            if !seen.insert((u, w)) {
                return Err(Error::input(format!("spot edge ({u},{w}) repeated")));
            }
            *deg.entry(u).or_default() += 1;
            *deg.entry(w).or_default() += 1;
        }
        for v in self.u_side.iter().chain(self.w_side.iter()) {
            let d = deg.get(&v).copied().unwrap_or(0);
            if nat(d) <= nat(self.m) {
                return Err(Error::input(format!(
                    "spot degree of {v} is {d}, not above m={}",
                    self.m
                )));
            }
        }
        let density = Rat::new(
            self.edges.len() as i64,
            (self.u_side.len() * self.w_side.len()) as i64,
        );
        if density <= self.gamma {
            return Err(Error::input(format!(
                "spot density {density} not above gamma {}",
                self.gamma
            )));
        }
        Ok(())
    }

    pub fn vertex_set(&self) -> VertexSet {
        self.u_side.union(&self.w_side)
    }
}

/// Budget for spot searches; exact enumeration below `exact_n_bound`.
#[derive(Clone, Copy, Debug)]
pub struct SearchBudget {
    pub exact_n_bound: usize,
    pub bipartition_trials: usize,
    pub seed: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { exact_n_bound: 8, bipartition_trials: 64, seed: 0 }
    }
}

/// The spot on (U,W) with all host edges between them, if it qualifies.
fn full_spot(g: &Graph, u: &VertexSet, w: &VertexSet, m: usize, gamma: Rat) -> Option<DenseSpot> {
    if u.is_empty() || w.is_empty() {
        return None;
    }
    let wmask = g.mask_of(w);
    let mut edges = Vec::new();
    for a in u.iter() {
        for b in g.neighbors(a) {
            if wmask[b] {
                edges.push((a, b));
            }
        }
    }
    let spot = DenseSpot { u_side: u.clone(), w_side: w.clone(), edges, m, gamma };
    spot.validate(g).is_ok().then_some(spot)
}

/// Searches for an (m,gamma)-dense spot.
///
/// Below the exact bound every bipartition of every subset is enumerated, so
/// `None` is conclusive. Otherwise random bipartitions are peeled down to
/// spot-degree above m and kept if dense enough; `None` then only means the
/// search failed. A returned spot is always validated, hence sound.
pub fn find_dense_spot(g: &Graph, m: usize, gamma: Rat, budget: &SearchBudget) -> Result<Option<DenseSpot>> {
    if gamma <= Rat::new(0, 1) || gamma >= Rat::new(1, 1) {
        return Err(Error::input("gamma must lie in (0,1)"));
    }
    if g.n() <= budget.exact_n_bound {
        return Ok(find_dense_spot_exact(g, m, gamma));
    }
    let mut rng = crate::rng::seeded(budget.seed);
    for trial in 0..budget.bipartition_trials {
        let mut side = vec![false; g.n()];
        if trial == 0 {
            for v in 0..g.n() {
                side[v] = v % 2 == 1;
            }
        } else {
            for s in side.iter_mut() {
                *s = rng.gen();
            }
        }
        if let Some(spot) = peel_bipartition(g, &side, m, gamma) {
            return Ok(Some(spot));
        }
    }
    Ok(None)
}

/// Deletes vertices of cross-degree ≤ m to a fixpoint, then checks density.
fn peel_bipartition(g: &Graph, side: &[bool], m: usize, gamma: Rat) -> Option<DenseSpot> {
    let mut alive = vec![true; g.n()];
    loop {
        let mut changed = false;
        for v in 0..g.n() {
            if !alive[v] {
                continue;
            }
            let d = g
                .neighbors(v)
                .filter(|&w| alive[w] && side[w] != side[v])
                .count();
            if d <= m {
                alive[v] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let u: VertexSet = (0..g.n()).filter(|&v| alive[v] && !side[v]).collect();
    let w: VertexSet = (0..g.n()).filter(|&v| alive[v] && side[v]).collect();
    full_spot(g, &u, &w, m, gamma)
}

fn find_dense_spot_exact(g: &Graph, m: usize, gamma: Rat) -> Option<DenseSpot> {
    let n = g.n();
    // Subsets ascending; within a subset, assignments with its lowest
    // member on the u side. First qualifying spot wins.
    for subset in 1u32..(1 << n) {
        let members: Vec<Vertex> = (0..n).filter(|&v| subset >> v & 1 == 1).collect();
        if members.len() < 2 {
            continue;
        }
        let free = &members[1..];
        for assign in 0u32..(1 << free.len()) {
            let mut u = vec![members[0]];
            let mut w = Vec::new();
            for (i, &v) in free.iter().enumerate() {
                if assign >> i & 1 == 1 {
                    w.push(v);
                } else {
                    u.push(v);
                }
            }
            if w.is_empty() {
                continue;
            }
            let u = VertexSet::from_iter(u);
            let w = VertexSet::from_iter(w);
            if let Some(spot) = full_spot(g, &u, &w, m, gamma) {
                return Some(spot);
            }
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NowhereDenseVerdict {
    /// Exhaustive search found no spot; a proof at this size.
    NowhereDenseExact,
    /// Budgeted search found no spot; not a proof.
    NoSpotFoundHeuristic,
    /// A validated spot refuting nowhere-density.
    SpotWitness(DenseSpot),
}

/// Decides (m,gamma)-nowhere-density, exactly below the budget's size bound.
pub fn check_nowhere_dense(
    g: &Graph,
    m: usize,
    gamma: Rat,
    budget: &SearchBudget,
) -> Result<NowhereDenseVerdict> {
    let exact = g.n() <= budget.exact_n_bound;
    Ok(match find_dense_spot(g, m, gamma, budget)? {
        Some(spot) => NowhereDenseVerdict::SpotWitness(spot),
        None if exact => NowhereDenseVerdict::NowhereDenseExact,
        None => NowhereDenseVerdict::NoSpotFoundHeuristic,
    })
}

// ───────────────────────── regularity ─────────────────────────

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegularityMode {
    /// Enumerate every qualifying subpair; sides must have ≤ 12 vertices.
    Exact,
    /// Test `samples` random subpairs of the minimum qualifying sizes.
    Sampled { samples: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegularityStatus {
    RegularExact,
    RegularSampled,
    IrregularWitness,
    Unknown,
}

/// A vertex whose cross-degree breaks a super-regularity min-degree bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuperViolation {
    pub vertex: Vertex,
    pub cross_degree: usize,
    pub required: Rat,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegularityVerdict {
    pub status: RegularityStatus,
    /// For IrregularWitness: a qualifying subpair with density off by ≥ ε.
    pub witness: Option<(VertexSet, VertexSet)>,
    pub density: Rat,
    /// Populated only when a super-regularity check was requested and failed.
    pub super_violation: Option<SuperViolation>,
}

/// Maximum side size admitted in exact regularity mode.
pub const EXACT_REGULARITY_CAP: usize = 12;

/// Tests ε-regularity of the disjoint pair (U,W).
///
/// Exact mode enumerates all subpairs U′,W′ with |U′| ≥ ε|U|, |W′| ≥ ε|W|
/// and is a decision procedure. Sampled mode draws subpairs of the minimum
/// qualifying sizes; a witness is a proof of irregularity, while
/// `RegularSampled` is only statistical. With `super_check = Some(gamma)`,
/// both min-degree conditions (deg(u,W) ≥ gamma·|W| and deg(w,U) ≥ gamma·|U|)
/// are tested exactly and a failure is reported in `super_violation` without
/// changing the regularity status.
pub fn check_regularity(
    g: &Graph,
    u: &VertexSet,
    w: &VertexSet,
    eps: Rat,
    mode: RegularityMode,
    super_check: Option<Rat>,
) -> Result<RegularityVerdict> {
    g.check_set(u, "U")?;
    g.check_set(w, "W")?;
    if !u.intersection(w).is_empty() {
        return Err(Error::input("regularity requires disjoint sides"));
    }
    if u.is_empty() || w.is_empty() {
        return Err(Error::input("regularity of an empty side is undefined"));
    }
    if eps <= Rat::new(0, 1) {
        return Err(Error::input("eps must be positive"));
    }
    let stats = degree_and_density(g, u, w)?;
    let density = stats.density;

    let super_violation = super_check.and_then(|gamma| {
        let wmask = g.mask_of(w);
        let umask = g.mask_of(u);
        for v in u.iter() {
            let d = g.deg_into(v, &wmask);
            if nat(d) < gamma * nat(w.len()) {
                return Some(SuperViolation { vertex: v, cross_degree: d, required: gamma * nat(w.len()) });
            }
        }
        for v in w.iter() {
            let d = g.deg_into(v, &umask);
            if nat(d) < gamma * nat(u.len()) {
                return Some(SuperViolation { vertex: v, cross_degree: d, required: gamma * nat(u.len()) });
            }
        }
        None
    });

    let witness = match mode {
        RegularityMode::Exact => {
            if u.len() > EXACT_REGULARITY_CAP || w.len() > EXACT_REGULARITY_CAP {
                return Err(Error::input(format!(
                    "exact regularity mode is capped at side size {EXACT_REGULARITY_CAP}"
                )));
            }
            exact_regularity_witness(g, u, w, eps)
        }
        RegularityMode::Sampled { samples, seed } => {
            sampled_regularity_witness(g, u, w, eps, samples, seed)
        }
    };

    let status = match (&witness, mode) {
        (Some(_), _) => RegularityStatus::IrregularWitness,
        (None, RegularityMode::Exact) => RegularityStatus::RegularExact,
        (None, RegularityMode::Sampled { .. }) => RegularityStatus::RegularSampled,
    };
    Ok(RegularityVerdict { status, witness, density, super_violation })
}

/// |d(U,W) − e/(a′·b′)| ≥ ε, all in exact integers.
fn density_deviates(e_total: i64, ab: i64, e_sub: i64, ab_sub: i64, eps: Rat) -> bool {
    let lhs = (e_total as i128 * ab_sub as i128 - e_sub as i128 * ab as i128).abs()
        * *eps.denom() as i128;
    let rhs = *eps.numer() as i128 * ab as i128 * ab_sub as i128;
    lhs >= rhs
}

fn exact_regularity_witness(
    g: &Graph,
    u: &VertexSet,
    w: &VertexSet,
    eps: Rat,
) -> Option<(VertexSet, VertexSet)> {
    let uv: Vec<Vertex> = u.iter().collect();
    let wv: Vec<Vertex> = w.iter().collect();
    let (a, b) = (uv.len(), wv.len());
    let rows: Vec<u32> = uv
        .iter()
        .map(|&x| {
            let mut m = 0u32;
            for (j, &y) in wv.iter().enumerate() {
                if g.has_edge(x, y) {
                    m |= 1 << j;
                }
            }
            m
        })
        .collect();
    let e_total: i64 = rows.iter().map(|r| r.count_ones() as i64).sum();
    let ab = (a * b) as i64;
    let umin = ceil_usize(eps * nat(a)).max(1);
    let wmin = ceil_usize(eps * nat(b)).max(1);
    let mut subset_e = vec![0i64; 1 << a];
    for wmask in 1u32..(1u32 << b) {
        let wcount = wmask.count_ones() as usize;
        if wcount < wmin {
            continue;
        }
        let cnt: Vec<i64> = rows.iter().map(|r| (r & wmask).count_ones() as i64).collect();
        for umask in 1usize..(1 << a) {
            let low = umask.trailing_zeros() as usize;
            subset_e[umask] = subset_e[umask & (umask - 1)] + cnt[low];
            let ucount = umask.count_ones() as usize;
            if ucount < umin {
                continue;
            }
            if density_deviates(e_total, ab, subset_e[umask], (ucount * wcount) as i64, eps) {
                let usub = uv.iter().enumerate().filter(|(i, _)| umask >> i & 1 == 1);
                let wsub = wv.iter().enumerate().filter(|(j, _)| wmask >> j & 1 == 1);
                return Some((
                    usub.map(|(_, &x)| x).collect(),
                    wsub.map(|(_, &y)| y).collect(),
                ));
            }
        }
    }
    None
}

fn sampled_regularity_witness(
    g: &Graph,
    u: &VertexSet,
    w: &VertexSet,
    eps: Rat,
    samples: usize,
    seed: u64,
) -> Option<(VertexSet, VertexSet)> {
    let uv: Vec<Vertex> = u.iter().collect();
    let wv: Vec<Vertex> = w.iter().collect();
    let (a, b) = (uv.len(), wv.len());
    let umin = ceil_usize(eps * nat(a)).max(1);
    let wmin = ceil_usize(eps * nat(b)).max(1);
    let wmask_full = g.mask_of(w);
    let e_total: i64 = uv.iter().map(|&x| g.deg_into(x, &wmask_full) as i64).sum();
    let ab = (a * b) as i64;
    let mut rng = crate::rng::seeded(seed);
    let mut upool = uv.clone();
    let mut wpool = wv.clone();
    for _ in 0..samples {
        upool.shuffle(&mut rng);
        wpool.shuffle(&mut rng);
        let usub: VertexSet = upool[..umin].iter().copied().collect();
        let wsub: VertexSet = wpool[..wmin].iter().copied().collect();
        let wm = g.mask_of(&wsub);
        let e_sub: i64 = usub.iter().map(|x| g.deg_into(x, &wm) as i64).sum();
        if density_deviates(e_total, ab, e_sub, (umin * wmin) as i64, eps) {
            return Some((usub, wsub));
        }
    }
    None
}

// ───────────────────────── avoiding sets ─────────────────────────

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AvoidingMode {
    /// Quantify over every U with |U| ≤ Λk; family must stay ≤ 2^20 sets.
    Exact,
    /// Greedy worst-case candidates (spot unions) plus random U.
    Adversarial { trials: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AvoidingVerdict {
    AvoidingExact,
    AvoidingHeuristic,
    /// U together with the more than εk vertices of E left unprotected.
    ViolationWitness { u: VertexSet, bad: VertexSet },
}

/// Cap on the subset family size admitted by exact avoiding mode.
pub const AVOIDING_EXACT_CAP: u128 = 1 << 20;

/// Bad vertices of E for a fixed U: members of no spot whose vertex set
/// meets U in at most gamma²k vertices.
fn avoiding_bad_set(
    spot_masks: &[Vec<bool>],
    e: &VertexSet,
    u: &VertexSet,
    cap: Rat,
) -> VertexSet {
    let hits: Vec<usize> = spot_masks
        .iter()
        .map(|mask| u.iter().filter(|&v| mask[v]).count())
        .collect();
    e.iter()
        .filter(|&v| {
            !(0..spot_masks.len()).any(|i| spot_masks[i][v] && nat(hits[i]) <= cap)
        })
        .collect()
}

/// Tests whether E is (Λ,ε,γ,k)-avoiding with respect to the given spots.
///
/// For every U with |U| ≤ Λk, all but at most εk vertices of E must lie in
/// a spot D with |U ∩ V(D)| ≤ γ²k. The exceptional set may depend on U;
/// that is the reading implemented here. Exact mode is conclusive; the
/// adversarial mode reports only sound violations.
pub fn check_avoiding(
    g: &Graph,
    spots: &[DenseSpot],
    e: &VertexSet,
    lambda: Rat,
    eps: Rat,
    gamma: Rat,
    k: usize,
    mode: AvoidingMode,
) -> Result<AvoidingVerdict> {
    for spot in spots {
        spot.validate(g)?;
    }
    let spot_masks: Vec<Vec<bool>> = spots.iter().map(|s| g.mask_of(&s.vertex_set())).collect();
    let covered = |v: usize| spot_masks.iter().any(|m| m[v]);
    if let Some(v) = e.iter().find(|&v| v >= g.n() || !covered(v)) {
        return Err(Error::input(format!("E member {v} lies in no given spot")));
    }
    if lambda < Rat::new(0, 1) {
        return Err(Error::input("lambda must be nonnegative"));
    }
    let max_u = crate::rat::floor_usize(lambda * nat(k)).min(g.n());
    let cap = gamma * gamma * nat(k);
    let allowance = eps * nat(k);

    match mode {
        AvoidingMode::Exact => {
            let mut family: u128 = 0;
            let mut binom: u128 = 1;
            for i in 0..=max_u {
                family += binom;
                if family > AVOIDING_EXACT_CAP {
                    return Err(Error::input(format!(
                        "exact avoiding mode needs more than {AVOIDING_EXACT_CAP} candidate sets"
                    )));
                }
                binom = binom * (g.n() - i) as u128 / (i + 1) as u128;
            }
            for size in 0..=max_u {
                for combo in (0..g.n()).combinations(size) {
                    let u = VertexSet::from_iter(combo);
                    let bad = avoiding_bad_set(&spot_masks, e, &u, cap);
                    if nat(bad.len()) > allowance {
                        return Ok(AvoidingVerdict::ViolationWitness { u, bad });
                    }
                }
            }
            Ok(AvoidingVerdict::AvoidingExact)
        }
        AvoidingMode::Adversarial { trials, seed } => {
            let mut candidates: Vec<VertexSet> = Vec::new();
            for spot in spots {
                candidates.push(spot.vertex_set().iter().take(max_u).collect());
            }
            for (i, a) in spots.iter().enumerate() {
                for b in spots.iter().skip(i + 1) {
                    let union = a.vertex_set().union(&b.vertex_set());
                    candidates.push(union.iter().take(max_u).collect());
                }
            }
            let mut rng = crate::rng::seeded(seed);
            let all: Vec<Vertex> = (0..g.n()).collect();
            for _ in 0..trials {
                let mut pool = all.clone();
                pool.shuffle(&mut rng);
                candidates.push(pool[..max_u].iter().copied().collect());
            }
            for u in candidates {
                let bad = avoiding_bad_set(&spot_masks, e, &u, cap);
                if nat(bad.len()) > allowance {
                    return Ok(AvoidingVerdict::ViolationWitness { u, bad });
                }
            }
            Ok(AvoidingVerdict::AvoidingHeuristic)
        }
    }
}

// ───────────────────────── regularized matchings ─────────────────────────

/// Disjoint family of equal-sized vertex-set pairs, each expected to span an
/// ε-regular pair of density ≥ d in the host, with the positional pairing
/// involution used to build ghost sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegularizedMatching {
    pairs: Vec<(VertexSet, VertexSet)>,
    eps: Rat,
    d: Rat,
    ell: usize,
    involution: BTreeMap<Vertex, Vertex>,
}

impl RegularizedMatching {
    /// Validates sizes and disjointness; regularity of the pairs in a host
    /// is checked separately by `validate_regularized_matching`.
    pub fn new(pairs: Vec<(VertexSet, VertexSet)>, eps: Rat, d: Rat, ell: usize) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for (a, b) in &pairs {
            if a.len() != b.len() {
                return Err(Error::input("matching pair sides differ in size"));
            }
            if a.len() < ell {
                return Err(Error::input(format!("matching pair smaller than ell={ell}")));
            }
            for v in a.iter().chain(b.iter()) {
                if !seen.insert(v) {
                    return Err(Error::input(format!("vertex {v} appears in two matching sets")));
                }
            }
        }
        let mut involution = BTreeMap::new();
        for (a, b) in &pairs {
            for (x, y) in a.iter().zip(b.iter()) {
                involution.insert(x, y);
                involution.insert(y, x);
            }
        }
        Ok(RegularizedMatching { pairs, eps, d, ell, involution })
    }

    pub fn pairs(&self) -> &[(VertexSet, VertexSet)] {
        &self.pairs
    }

    pub fn eps(&self) -> Rat {
        self.eps
    }

    pub fn d(&self) -> Rat {
        self.d
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    /// All matched vertices.
    pub fn vertices(&self) -> VertexSet {
        self.pairs
            .iter()
            .flat_map(|(a, b)| a.iter().chain(b.iter()))
            .collect()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.involution.contains_key(&v)
    }

    /// The matched partner of v under the pairing involution.
    pub fn partner(&self, v: Vertex) -> Option<Vertex> {
        self.involution.get(&v).copied()
    }
}

/// Closes U under the pairing involution: U ∪ partner(U ∩ V(M)).
///
/// The result contains U, has at most 2|U| vertices, and meets the two
/// sides of each pair in matched positions, so its intersections with the
/// sides of any pair have equal size.
pub fn ghost(m: &RegularizedMatching, u: &VertexSet) -> Result<VertexSet> {
    let mut out = u.clone();
    for v in u.iter() {
        if m.contains(v) {
            let p = m
                .partner(v)
                .ok_or_else(|| Error::input(format!("involution undefined at {v}")))?;
            out.insert(p);
        }
    }
    Ok(out)
}

/// Validation report for a regularized matching in a host graph.
#[derive(Clone, Debug)]
pub struct MatchingReport {
    pub pair_verdicts: Vec<RegularityVerdict>,
    /// Human-readable violations; empty means the matching checks out.
    pub violations: Vec<String>,
}

impl MatchingReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks disjointness, sizes, per-pair regularity and density, and the
/// cluster-size bound |C| ≤ maxdeg/d (against `host_maxdeg_bound` when
/// given, else against the recomputed maximum degree).
pub fn validate_regularized_matching(
    g: &Graph,
    m: &RegularizedMatching,
    host_maxdeg_bound: Option<usize>,
) -> MatchingReport {
    let mut violations = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (i, (a, b)) in m.pairs().iter().enumerate() {
        if a.len() != b.len() {
            violations.push(format!("pair {i}: sides of unequal size"));
        }
        if a.len() < m.ell() {
            violations.push(format!("pair {i}: side smaller than ell={}", m.ell()));
        }
        for v in a.iter().chain(b.iter()) {
            if !seen.insert(v) {
                violations.push(format!("pair {i}: vertex {v} reused"));
            }
            if v >= g.n() {
                violations.push(format!("pair {i}: vertex {v} outside host"));
            }
        }
    }
    let mut pair_verdicts = Vec::new();
    if violations.is_empty() {
        for (i, (a, b)) in m.pairs().iter().enumerate() {
            let mode = if a.len() <= EXACT_REGULARITY_CAP && b.len() <= EXACT_REGULARITY_CAP {
                RegularityMode::Exact
            } else {
                RegularityMode::Sampled { samples: 200, seed: 0 }
            };
            match check_regularity(g, a, b, m.eps(), mode, None) {
                Ok(verdict) => {
                    if verdict.status == RegularityStatus::IrregularWitness {
                        violations.push(format!("pair {i}: irregular at eps={}", m.eps()));
                    }
                    if verdict.density < m.d() {
                        violations.push(format!(
                            "pair {i}: density {} below d={}",
                            verdict.density,
                            m.d()
                        ));
                    }
                    pair_verdicts.push(verdict);
                }
                Err(e) => violations.push(format!("pair {i}: {e}")),
            }
        }
    }
    let maxdeg = g.max_deg();
    if let Some(bound) = host_maxdeg_bound {
        if maxdeg > bound {
            violations.push(format!("host maxdeg {maxdeg} exceeds stated bound {bound}"));
        }
    }
    let cap = nat(host_maxdeg_bound.unwrap_or(maxdeg)) / m.d();
    for (i, (a, _)) in m.pairs().iter().enumerate() {
        if nat(a.len()) > cap {
            violations.push(format!(
                "pair {i}: cluster size {} exceeds maxdeg/d = {cap}",
                a.len()
            ));
        }
    }
    MatchingReport { pair_verdicts, violations }
}

/// True iff every pair of the matching has at least one side in F.
///
/// Every member of F must itself be a side of some pair.
pub fn matching_cover_check(m: &RegularizedMatching, f: &[VertexSet]) -> Result<bool> {
    for set in f {
        let is_side = m
            .pairs()
            .iter()
            .any(|(a, b)| a == set || b == set);
        if !is_side {
            return Err(Error::input("cover member is not a side of any pair"));
        }
    }
    Ok(m.pairs()
        .iter()
        .all(|(a, b)| f.iter().any(|s| s == a || s == b)))
}

/// Complete bipartite host on sides 0..a and a..a+b.
pub fn complete_bipartite(a: usize, b: usize) -> Graph {
    let edges: Vec<_> = (0..a).flat_map(|u| (a..a + b).map(move |w| (u, w))).collect();
    Graph::new(a + b, &edges).unwrap()
}

/// Binomial random graph with an exact-rational edge probability.
#[cfg(test)]
pub(crate) fn random_graph(n: usize, edge_prob: Rat, seed: u64) -> Graph {
    let mut rng = crate::rng::seeded(seed);
    let p: f64 = *edge_prob.numer() as f64 / *edge_prob.denom() as f64;
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::new(n, &edges).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    fn vs(ids: impl IntoIterator<Item = usize>) -> VertexSet {
        VertexSet::from_iter(ids)
    }

    #[test]
    fn density_of_complete_bipartite() {
        let g = complete_bipartite(3, 4);
        let s = degree_and_density(&g, &vs(0..3), &vs(3..7)).unwrap();
        assert_eq!(s.exy, 12);
        assert_eq!(s.density, rat(1, 1));
        assert_eq!((s.mindeg_xy, s.maxdeg_xy), (4, 4));
    }

    #[test]
    fn ordered_pairs_double_count_inside_one_set() {
        let g = Graph::new(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let all = vs(0..3);
        let s = degree_and_density(&g, &all, &all).unwrap();
        assert_eq!(s.exy, 6);
        assert_eq!(s.exy, 2 * g.edge_count() as u64);
        assert!(degree_and_density(&g, &vs([]), &all).is_err());
    }

    #[test]
    fn density_matches_double_loop_recount() {
        use rand::Rng;
        let g = random_graph(20, rat(3, 10), 5);
        let mut rng = crate::rng::stream(5, 1);
        for _ in 0..10 {
            let x: VertexSet = (0..20).filter(|_| rng.gen_bool(0.5)).collect();
            let y: VertexSet = (0..20).filter(|_| rng.gen_bool(0.5)).collect();
            if x.is_empty() || y.is_empty() {
                continue;
            }
            let mut count = 0u64;
            for a in x.iter() {
                for b in y.iter() {
                    if g.has_edge(a, b) {
                        count += 1;
                    }
                }
            }
            let s = degree_and_density(&g, &x, &y).unwrap();
            assert_eq!(s.exy, count);
            assert_eq!(s.density, Rat::new(count as i64, (x.len() * y.len()) as i64));
        }
    }

    #[test]
    fn shadow_base_cases() {
        let g = random_graph(15, rat(1, 2), 2);
        let u = vs([0, 3, 7]);
        assert_eq!(shadow(&g, &u, 5, 0), u);
        assert!(shadow(&g, &u, g.max_deg(), 1).is_empty());
    }

    #[test]
    fn shadow_growth_bound() {
        // |shadow^i(U,t)| ≤ (maxdeg/t)^i |U| whenever every vertex of the
        // graph has degree ≤ maxdeg.
        for seed in 0..6 {
            let g = random_graph(30, rat(1, 4), seed);
            let maxdeg = g.max_deg().max(1);
            let u = vs(0..10);
            for t in [1usize, 2, 3] {
                for i in 0..3usize {
                    let s = shadow(&g, &u, t, i);
                    let mut bound = nat(u.len());
                    for _ in 0..i {
                        bound *= rat(maxdeg as i64, t as i64);
                    }
                    assert!(nat(s.len()) <= bound, "shadow bound failed: {} > {}", s.len(), bound);
                }
            }
        }
    }

    #[test]
    fn spot_search_trivial_cases() {
        let budget = SearchBudget::default();
        let g = complete_bipartite(4, 4);
        let spot = find_dense_spot(&g, 2, rat(1, 2), &budget).unwrap().unwrap();
        spot.validate(&g).unwrap();
        let empty = Graph::empty(6);
        assert!(find_dense_spot(&empty, 1, rat(1, 2), &budget).unwrap().is_none());
        assert!(find_dense_spot(&g, 2, rat(3, 2), &budget).is_err());
    }

    #[test]
    fn nowhere_dense_verdicts() {
        let budget = SearchBudget::default();
        // A path is a forest: no spot can have both sides of degree ≥ 2.
        let path = Graph::new(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]).unwrap();
        assert_eq!(
            check_nowhere_dense(&path, 1, rat(3, 5), &budget).unwrap(),
            NowhereDenseVerdict::NowhereDenseExact
        );
        let g = complete_bipartite(3, 3);
        match check_nowhere_dense(&g, 2, rat(1, 2), &budget).unwrap() {
            NowhereDenseVerdict::SpotWitness(spot) => spot.validate(&g).unwrap(),
            other => panic!("expected a witness, got {other:?}"),
        }
    }

    /// Straightforward re-implementation: recursive subset/bipartition sweep.
    fn spot_exists_oracle(g: &Graph, m: usize, gamma: Rat) -> bool {
        let n = g.n();
        for subset in 1u32..(1 << n) {
            let members: Vec<usize> = (0..n).filter(|&v| subset >> v & 1 == 1).collect();
            for cut in 0u32..(1 << members.len()) {
                let u: Vec<usize> =
                    members.iter().enumerate().filter(|(i, _)| cut >> i & 1 == 0).map(|(_, &v)| v).collect();
                let w: Vec<usize> =
                    members.iter().enumerate().filter(|(i, _)| cut >> i & 1 == 1).map(|(_, &v)| v).collect();
                if u.is_empty() || w.is_empty() {
                    continue;
                }
                let mut ok = true;
                let mut edges = 0i64;
                for &x in &u {
                    let d = w.iter().filter(|&&y| g.has_edge(x, y)).count();
                    edges += d as i64;
                    ok &= d > m;
                }
                for &y in &w {
                    ok &= u.iter().filter(|&&x| g.has_edge(x, y)).count() > m;
                }
                if ok && Rat::new(edges, (u.len() * w.len()) as i64) > gamma {
                    return true;
                }
            }
        }
        false
    }

    #[test]
    fn exact_spot_search_matches_oracle_on_all_small_graphs() {
        let budget = SearchBudget::default();
        for n in 1..=5usize {
            let slots: Vec<(usize, usize)> =
                (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
            for mask in 0u32..(1 << slots.len()) {
                let edges: Vec<_> = slots
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, &e)| e)
                    .collect();
                let g = Graph::new(n, &edges).unwrap();
                for (m, gamma) in [(1usize, rat(1, 2)), (2, rat(1, 2)), (1, rat(2, 3))] {
                    let found = find_dense_spot(&g, m, gamma, &budget).unwrap();
                    if let Some(spot) = &found {
                        spot.validate(&g).unwrap();
                    }
                    assert_eq!(found.is_some(), spot_exists_oracle(&g, m, gamma));
                }
            }
        }
    }

    #[test]
    fn exact_spot_search_matches_oracle_at_search_boundary() {
        let budget = SearchBudget::default();
        for seed in 0..40 {
            let n = 7 + (seed % 2) as usize;
            let g = random_graph(n, rat(2, 5), seed);
            let found = find_dense_spot(&g, 2, rat(1, 2), &budget).unwrap();
            if let Some(spot) = &found {
                spot.validate(&g).unwrap();
            }
            assert_eq!(found.is_some(), spot_exists_oracle(&g, 2, rat(1, 2)));
        }
    }

    #[test]
    fn regularity_of_complete_pair() {
        let g = complete_bipartite(6, 6);
        let v = check_regularity(
            &g,
            &vs(0..6),
            &vs(6..12),
            rat(1, 4),
            RegularityMode::Exact,
            None,
        )
        .unwrap();
        assert_eq!(v.status, RegularityStatus::RegularExact);
        assert_eq!(v.density, rat(1, 1));
        assert!(v.witness.is_none());
    }

    #[test]
    fn half_empty_pair_is_irregular() {
        // Vertices 0..3 see all of W, vertices 3..6 see nothing.
        let edges: Vec<_> = (0..3).flat_map(|u| (6..12).map(move |w| (u, w))).collect();
        let g = Graph::new(12, &edges).unwrap();
        let v = check_regularity(
            &g,
            &vs(0..6),
            &vs(6..12),
            rat(1, 4),
            RegularityMode::Exact,
            None,
        )
        .unwrap();
        assert_eq!(v.status, RegularityStatus::IrregularWitness);
        let (usub, wsub) = v.witness.unwrap();
        // The witness must qualify and deviate by at least eps.
        assert!(nat(usub.len()) >= rat(1, 4) * nat(6));
        assert!(nat(wsub.len()) >= rat(1, 4) * nat(6));
        let sub = degree_and_density(&g, &usub, &wsub).unwrap();
        let dev = v.density - sub.density;
        assert!(dev >= rat(1, 4) || -dev >= rat(1, 4));
    }

    #[test]
    fn sampled_mode_finds_gross_irregularity() {
        let edges: Vec<_> = (0..5).flat_map(|u| (10..20).map(move |w| (u, w))).collect();
        let g = Graph::new(20, &edges).unwrap();
        let v = check_regularity(
            &g,
            &vs(0..10),
            &vs(10..20),
            rat(1, 5),
            RegularityMode::Sampled { samples: 200, seed: 3 },
            None,
        )
        .unwrap();
        assert_eq!(v.status, RegularityStatus::IrregularWitness);
        let g2 = complete_bipartite(10, 10);
        let v2 = check_regularity(
            &g2,
            &vs(0..10),
            &vs(10..20),
            rat(1, 5),
            RegularityMode::Sampled { samples: 50, seed: 3 },
            None,
        )
        .unwrap();
        assert_eq!(v2.status, RegularityStatus::RegularSampled);
    }

    #[test]
    fn super_check_reports_min_degree_failures() {
        let mut edges: Vec<(usize, usize)> =
            (0..4).flat_map(|u| (4..8).map(move |w| (u, w))).collect();
        edges.retain(|&e| e != (0, 4) && e != (0, 5) && e != (0, 6));
        let g = Graph::new(8, &edges).unwrap();
        let v = check_regularity(
            &g,
            &vs(0..4),
            &vs(4..8),
            rat(1, 2),
            RegularityMode::Exact,
            Some(rat(1, 2)),
        )
        .unwrap();
        let sv = v.super_violation.expect("vertex 0 has cross-degree 1 < 2");
        assert_eq!(sv.vertex, 0);
        assert_eq!(sv.cross_degree, 1);
        let ok = check_regularity(
            &complete_bipartite(4, 4),
            &vs(0..4),
            &vs(4..8),
            rat(1, 2),
            RegularityMode::Exact,
            Some(rat(1, 2)),
        )
        .unwrap();
        assert!(ok.super_violation.is_none());
    }

    #[test]
    fn exact_regular_pairs_satisfy_degree_spread() {
        // On an exactly-regular pair of density d, all but ≤ ε|U| vertices
        // of U have deg(v,W) ≥ (d−ε)|W|.
        for seed in 0..8 {
            let g = random_graph(16, rat(3, 5), seed);
            let u = vs(0..8);
            let w = vs(8..16);
            let eps = rat(1, 3);
            let v = check_regularity(&g, &u, &w, eps, RegularityMode::Exact, None).unwrap();
            if v.status != RegularityStatus::RegularExact {
                continue;
            }
            let wmask = g.mask_of(&w);
            let low = u
                .iter()
                .filter(|&x| nat(g.deg_into(x, &wmask)) < (v.density - eps) * nat(w.len()))
                .count();
            assert!(nat(low) <= eps * nat(u.len()));
        }
    }

    #[test]
    fn subpairs_of_regular_pairs_stay_regular() {
        // On a RegularExact pair of density d, subsets spanning an α-fraction
        // of each side form a 2ε/α-regular pair of density > d − ε.
        let g = random_graph(20, rat(7, 10), 11);
        let u = vs(0..10);
        let w = vs(10..20);
        let eps = rat(1, 5);
        let v = check_regularity(&g, &u, &w, eps, RegularityMode::Exact, None).unwrap();
        if v.status != RegularityStatus::RegularExact {
            return;
        }
        let alpha = rat(1, 2);
        let usub = vs(0..5);
        let wsub = vs(10..15);
        let sub = check_regularity(
            &g,
            &usub,
            &wsub,
            rat(2, 1) * eps / alpha,
            RegularityMode::Exact,
            None,
        )
        .unwrap();
        assert_eq!(sub.status, RegularityStatus::RegularExact);
        assert!(sub.density > v.density - eps);
    }

    #[test]
    fn avoiding_trivial_cases() {
        let g = complete_bipartite(3, 3);
        let spot = full_spot(&g, &vs(0..3), &vs(3..6), 2, rat(1, 2)).unwrap();
        let spots = vec![spot];
        // Empty E is avoiding vacuously.
        let verdict = check_avoiding(
            &g,
            &spots,
            &vs([]),
            rat(1, 1),
            rat(1, 10),
            rat(1, 2),
            3,
            AvoidingMode::Exact,
        )
        .unwrap();
        assert_eq!(verdict, AvoidingVerdict::AvoidingExact);
        // Λk = 0 admits only U=∅, and every E vertex lies in its spot.
        let verdict = check_avoiding(
            &g,
            &spots,
            &vs(0..6),
            rat(0, 1),
            rat(1, 10),
            rat(1, 2),
            3,
            AvoidingMode::Exact,
        )
        .unwrap();
        assert_eq!(verdict, AvoidingVerdict::AvoidingExact);
        // E must sit inside the spots.
        assert!(check_avoiding(
            &g,
            &[],
            &vs([0]),
            rat(1, 1),
            rat(1, 10),
            rat(1, 2),
            3,
            AvoidingMode::Exact,
        )
        .is_err());
    }

    #[test]
    fn avoiding_exact_matches_definition_sweep() {
        // K_{3,3} plus a pendant edge; E = the spot's vertices. With
        // gamma²k < 3 every 3-subset of a side meets the only spot too much.
        let mut edges: Vec<(usize, usize)> =
            (0..3).flat_map(|u| (3..6).map(move |w| (u, w))).collect();
        edges.push((5, 6));
        let g = Graph::new(7, &edges).unwrap();
        let spot = full_spot(&g, &vs(0..3), &vs(3..6), 2, rat(1, 2)).unwrap();
        let spots = vec![spot.clone()];
        let e = vs(0..6);
        let (lambda, eps, gamma, k) = (rat(3, 2), rat(1, 2), rat(1, 2), 2usize);
        let verdict =
            check_avoiding(&g, &spots, &e, lambda, eps, gamma, k, AvoidingMode::Exact).unwrap();
        // Definition-level sweep, written independently.
        let cap = gamma * gamma * nat(k);
        let max_u = crate::rat::floor_usize(lambda * nat(k));
        let mut violation = None;
        'outer: for size in 0..=max_u {
            for combo in (0..7usize).combinations(size) {
                let u = vs(combo);
                let bad: Vec<usize> = e
                    .iter()
                    .filter(|&v| {
                        !(spot.vertex_set().contains(v)
                            && nat(u.intersection(&spot.vertex_set()).len()) <= cap)
                    })
                    .collect();
                if nat(bad.len()) > eps * nat(k) {
                    violation = Some(u);
                    break 'outer;
                }
            }
        }
        match (&verdict, &violation) {
            (AvoidingVerdict::ViolationWitness { u, bad }, Some(_)) => {
                let recount = avoiding_bad_set(&[g.mask_of(&spot.vertex_set())], &e, u, cap);
                assert_eq!(*bad, recount);
                assert!(nat(bad.len()) > eps * nat(k));
            }
            (AvoidingVerdict::AvoidingExact, None) => {}
            other => panic!("checker and oracle disagree: {other:?}"),
        }
    }

    fn small_matching() -> (Graph, RegularizedMatching) {
        let g = {
            let mut edges: Vec<(usize, usize)> =
                (0..3).flat_map(|u| (3..6).map(move |w| (u, w))).collect();
            edges.extend((6..9).flat_map(|u| (9..12).map(move |w| (u, w))));
            Graph::new(12, &edges).unwrap()
        };
        let m = RegularizedMatching::new(
            vec![(vs(0..3), vs(3..6)), (vs(6..9), vs(9..12))],
            rat(1, 2),
            rat(1, 2),
            3,
        )
        .unwrap();
        (g, m)
    }

    #[test]
    fn ghost_closure_properties() {
        use rand::Rng;
        let (_, m) = small_matching();
        assert_eq!(ghost(&m, &vs([])).unwrap(), vs([]));
        // A full side closes to the whole pair.
        assert_eq!(ghost(&m, &vs(0..3)).unwrap(), vs(0..6));
        let mut rng = crate::rng::seeded(9);
        for _ in 0..50 {
            let u: VertexSet = (0..14usize).filter(|_| rng.gen_bool(0.4)).collect();
            let gu = ghost(&m, &u).unwrap();
            assert!(u.iter().all(|v| gu.contains(v)));
            assert!(gu.len() <= 2 * u.len());
            for (a, b) in m.pairs() {
                assert_eq!(gu.intersection(a).len(), gu.intersection(b).len());
            }
            assert_eq!(ghost(&m, &gu).unwrap(), gu);
        }
    }

    #[test]
    fn matching_validation_and_cluster_bound() {
        let (g, m) = small_matching();
        let report = validate_regularized_matching(&g, &m, None);
        assert!(report.is_valid(), "violations: {:?}", report.violations);
        // Cluster bound: 3 ≤ maxdeg/d = 3/(1/2) = 6; with a stated bound of
        // 1 the same matching must be flagged.
        let flagged = validate_regularized_matching(&g, &m, Some(1));
        assert!(!flagged.is_valid());
        // Fact-style recheck on random dense instances.
        for seed in 0..5 {
            let g = random_graph(12, rat(4, 5), seed);
            let m = RegularizedMatching::new(
                vec![(vs(0..3), vs(3..6))],
                rat(1, 1),
                rat(1, 10),
                2,
            )
            .unwrap();
            let report = validate_regularized_matching(&g, &m, None);
            if report.is_valid() {
                assert!(nat(3) <= nat(g.max_deg()) / rat(1, 10));
            }
        }
    }

    #[test]
    fn matching_rejects_overlap() {
        assert!(RegularizedMatching::new(
            vec![(vs(0..3), vs(2..5))],
            rat(1, 2),
            rat(1, 2),
            3
        )
        .is_err());
        assert!(RegularizedMatching::new(vec![(vs(0..3), vs(3..5))], rat(1, 2), rat(1, 2), 2).is_err());
    }

    #[test]
    fn cover_check() {
        let (_, m) = small_matching();
        let first_sides = vec![vs(0..3), vs(6..9)];
        assert!(matching_cover_check(&m, &first_sides).unwrap());
        assert!(!matching_cover_check(&m, &[vs(0..3)]).unwrap());
        assert!(!matching_cover_check(&m, &[]).unwrap());
        assert!(matching_cover_check(&m, &[vs(0..2)]).is_err());
    }

    #[test]
    fn graph_parse_serialize_round_trip() {
        let text = "5\n0 1\n0 4\n2 3\n";
        let g = Graph::parse(text).unwrap();
        assert_eq!(g.serialize(), text);
        assert!(Graph::parse("3\n1 0\n").is_err());
        assert!(Graph::parse("3\n0 0\n").is_err());
        assert!(Graph::parse("3\n0 5\n").is_err());
        assert!(Graph::parse("3\n0 1\n0 1\n").is_err());
        let huge = format!("{}\n", PARSE_VERTEX_CAP + 1);
        assert!(matches!(Graph::parse(&huge), Err(Error::Parse { line: 1, .. })));
        let g = random_graph(25, rat(1, 3), 8);
        assert_eq!(Graph::parse(&g.serialize()).unwrap(), g);
    }

    #[test]
    fn spot_size_and_multiplicity_bounds() {
        // In a host of maximum degree Δ, any (m,γ)-spot has sides of size
        // at most Δ/γ, and edge-disjoint spot families cover each vertex
        // fewer than Δ/γ times.
        for seed in 0..6 {
            let g = random_graph(14, rat(2, 5), seed);
            let budget = SearchBudget { exact_n_bound: 0, bipartition_trials: 32, seed };
            let gamma = rat(1, 3);
            let mut families: Vec<DenseSpot> = Vec::new();
            if let Some(spot) = find_dense_spot(&g, 1, gamma, &budget).unwrap() {
                let cap = nat(g.max_deg()) / gamma;
                assert!(nat(spot.u_side.len()) <= cap);
                assert!(nat(spot.w_side.len()) <= cap);
                families.push(spot);
            }
            // Edge-disjoint by construction: one spot only.
            let mut per_vertex = vec![0usize; g.n()];
            for spot in &families {
                for v in spot.vertex_set().iter() {
                    per_vertex[v] += 1;
                }
            }
            for v in 0..g.n() {
                assert!(nat(per_vertex[v]) < nat(g.max_deg().max(1)) / gamma + nat(1));
            }
        }
    }
}
