//! Acceptance gate: twelve criteria, one test and one printed verdict
//! line each (run with `--nocapture` to see the lines). Every tolerance,
//! budget, and instance count is pinned in this file; nothing is read
//! from the environment. A failure panics with the criterion number and
//! the first offending instance.

use std::collections::HashMap;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use treebed::duplicate::{empirical_tail, tail_bound, StepMode};
use treebed::embed::{
    embed_avoiding_forest, embed_balanced, embed_greedy_dense, embed_in_regular_pair,
    embed_nowheredense_forest, embed_oneside, embed_shrub_expander, embed_shrubs_with_reservation,
    embed_superregular, fill_pair, split_by_ratio, DensityCertificate, PartialEmbedding,
    RatioSplitInput,
};
use treebed::graph::{
    complete_bipartite, degree_and_density, ghost, shadow, DenseSpot, Graph, RegularizedMatching,
};
use treebed::oracle::{contains_tree, enumerate_trees, gen_random_tree, verify_conjecture_range};
use treebed::partition::{
    fine_partition, fine_partition_with_stages, validate_fine_partition, ShrubClass, ShrubKind,
};
use treebed::rat::{nat, rat, Rat};
use treebed::rng::seeded;
use treebed::tree::{path, random_tree, star, RootedTree, Vertex, VertexSet};

// ───────────────────────── verdict plumbing ─────────────────────────

fn check(crit: u32, cond: bool, detail: impl FnOnce() -> String) {
    if !cond {
        panic!("criterion {crit}: FAIL ({})", detail());
    }
}

fn pass(crit: u32) {
    println!("criterion {crit:02}: pass");
}

fn range(a: usize, b: usize) -> VertexSet {
    (a..b).collect()
}

fn set(vs: impl IntoIterator<Item = Vertex>) -> VertexSet {
    VertexSet::from_iter(vs)
}

// ───────────────────────── criterion 1 ─────────────────────────
// 1000 random trees with up to 2000 vertices, ell in {5, 20, ceil(n/10)}:
// the clause validator reports nothing, and the cut sets obey
// max{|W_A|, |W_B|} <= 336 n / ell exactly.

const C1_TREES: u64 = 1000;
const C1_TIME_SECS: u64 = 120;

fn c1_instances() -> impl Iterator<Item = (RootedTree, usize)> {
    (0..C1_TREES).flat_map(|i| {
        let mut rng = seeded(1000 + i);
        let n = rng.gen_range(2..=2000usize);
        let t = gen_random_tree(n, 5000 + i).expect("generator accepts 2 <= n");
        [5usize, 20, n.div_ceil(10)].into_iter().map(move |ell| (t.clone(), ell))
    })
}

#[test]
fn criterion_01_random_partitions_satisfy_every_clause() {
    let start = Instant::now();
    let mut instances = 0usize;
    for (t, ell) in c1_instances() {
        let n = t.n();
        let p = fine_partition(&t, ell).expect("partition exists for ell >= 1");
        let report = validate_fine_partition(&t, ell, &p);
        check(1, report.all_pass(), || {
            let bad: Vec<String> = report
                .structure
                .iter()
                .cloned()
                .chain(
                    report
                        .clauses
                        .iter()
                        .filter(|c| !c.pass)
                        .map(|c| format!("clause {}: {:?}", c.clause, c.detail)),
                )
                .collect();
            format!("n={n} ell={ell}: {}", bad.join("; "))
        });
        let worst = p.w_a.len().max(p.w_b.len());
        check(1, nat(worst) <= nat(336) * nat(n) / nat(ell), || {
            format!("n={n} ell={ell}: max cut set {worst} exceeds 336n/ell")
        });
        instances += 1;
    }
    check(1, instances == 3 * C1_TREES as usize, || format!("only {instances} instances ran"));
    let secs = start.elapsed().as_secs();
    check(1, secs <= C1_TIME_SECS, || format!("took {secs}s, budget {C1_TIME_SECS}s"));
    pass(1);
}

// ───────────────────────── criterion 2 ─────────────────────────
// The five stage cut sets and the fruit stage obey their proven size
// bounds on every criterion-1 instance:
//   |W1| <= n/ell + 1, |W2| <= 2|W1|, |W3| <= 4|W1|, |W4| <= 8|W1|,
//   |W5| <= 64 n/ell + 1, |X| <= 2|W5|.

#[test]
fn criterion_02_stage_cuts_obey_size_bounds() {
    for (t, ell) in c1_instances() {
        let n = t.n();
        let (_, st) = fine_partition_with_stages(&t, ell).expect("partition exists");
        let base = nat(n) / nat(ell);
        let fail = |stage: &str, got: usize| format!("n={n} ell={ell}: |{stage}| = {got}");
        check(2, nat(st.w1.len()) <= base + nat(1), || fail("W1", st.w1.len()));
        check(2, st.w2.len() <= 2 * st.w1.len(), || fail("W2", st.w2.len()));
        check(2, st.w3.len() <= 4 * st.w1.len(), || fail("W3", st.w3.len()));
        check(2, st.w4.len() <= 8 * st.w1.len(), || fail("W4", st.w4.len()));
        check(2, nat(st.w5.len()) <= nat(64) * base + nat(1), || fail("W5", st.w5.len()));
        check(2, st.x.len() <= 2 * st.w5.len(), || fail("X", st.x.len()));
    }
    pass(2);
}

// ───────────────────────── criterion 3 ─────────────────────────
// Stars: the k-vertex star always partitions into W_A = {root}, W_B
// empty, and exactly k-1 end shrubs of class A, for every ell.

#[test]
fn criterion_03_star_partition_is_pinned() {
    for k in 2..=120usize {
        for ell in [2usize, 3, 5, 20, 100] {
            let t = star(k - 1);
            let p = fine_partition(&t, ell).expect("star partitions");
            let fail = |what: &str| format!("k={k} ell={ell}: {what}");
            check(3, p.w_a == set([0]), || fail("W_A is not the root alone"));
            check(3, p.w_b.is_empty(), || fail("W_B is nonempty"));
            check(3, p.shrubs.len() == k - 1, || fail("shrub count is not k-1"));
            for s in &p.shrubs {
                check(3, s.class == ShrubClass::A, || fail("shrub outside class A"));
                check(3, s.kind == ShrubKind::End, || fail("shrub is not an end shrub"));
                check(3, s.vertices.len() == 1, || fail("shrub holds more than a leaf"));
            }
            let report = validate_fine_partition(&t, ell, &p);
            check(3, report.all_pass(), || fail("clause validator objects"));
        }
    }
    pass(3);
}

// ───────────────────────── criterion 4 ─────────────────────────
// Exhaustive leaf facts over every tree with at most 10 vertices:
// leaves >= (vertices of degree >= 3) + 2, and the larger parity class X
// holds at least |X| - |Y| + 1 leaves. Both need n >= 2.

#[test]
fn criterion_04_leaf_facts_hold_exhaustively() {
    let start = Instant::now();
    let expected = [1usize, 1, 1, 2, 3, 6, 11, 23, 47, 106];
    let mut total = 0usize;
    for n in 1..=10usize {
        let trees = enumerate_trees(n).expect("enumeration succeeds");
        check(4, trees.len() == expected[n - 1], || {
            format!("order {n}: {} classes, expected {}", trees.len(), expected[n - 1])
        });
        total += trees.len();
        if n < 2 {
            continue;
        }
        for (i, t) in trees.iter().enumerate() {
            let stats = t.leaf_stats();
            check(4, stats.leaves >= stats.deg3plus + 2, || {
                format!("order {n} tree {i}: {} leaves, {} branchers", stats.leaves, stats.deg3plus)
            });
            let (even, odd) = t.parity_classes();
            let (x_len, y_len, x_leaves) = if even.len() >= odd.len() {
                (even.len(), odd.len(), stats.leaves_by_class.0)
            } else {
                (odd.len(), even.len(), stats.leaves_by_class.1)
            };
            check(4, x_leaves >= x_len - y_len + 1, || {
                format!("order {n} tree {i}: {x_leaves} big-class leaves, |X|-|Y|+1 = {}",
                    x_len - y_len + 1)
            });
        }
    }
    check(4, total == 201, || format!("{total} trees enumerated, expected 201"));
    let secs = start.elapsed().as_secs();
    check(4, secs <= 10, || format!("took {secs}s, budget 10s"));
    pass(4);
}

// ───────────────────────── criterion 5 ─────────────────────────
// 10^4 random ratio-split inputs with s <= 12: the picked index set I
// satisfies sum_I x <= X' <= sum_I x + K and
// sum_I y - K <= gamma X' <= sum_I y + 2K with gamma = sum y / sum x,
// and a brute-force scan over all 2^s subsets independently confirms a
// conforming subset exists.

fn split_conforms(input: &RatioSplitInput, gamma: Rat, picked: &[usize]) -> bool {
    let ix: Rat = picked.iter().map(|&j| input.xs[j]).sum();
    let iy: Rat = picked.iter().map(|&j| input.ys[j]).sum();
    ix <= input.x_prime
        && input.x_prime <= ix + input.cap
        && iy - input.cap <= gamma * input.x_prime
        && gamma * input.x_prime <= iy + nat(2) * input.cap
}

#[test]
fn criterion_05_ratio_splits_match_brute_force() {
    let start = Instant::now();
    let mut rng = seeded(55);
    for case in 0..10_000u32 {
        let s = rng.gen_range(1..=12usize);
        let cap = rat(rng.gen_range(1..=12), rng.gen_range(1..=4));
        fn draw(rng: &mut impl Rng, s: usize, cap: Rat) -> Vec<Rat> {
            (0..s).map(|_| cap * rat(rng.gen_range(0..=16), 16)).collect()
        }
        let mut xs = draw(&mut rng, s, cap);
        let mut ys = draw(&mut rng, s, cap);
        let mut sx: Rat = xs.iter().sum();
        let mut sy: Rat = ys.iter().sum();
        if sx == nat(0) && sy == nat(0) {
            xs[0] = cap;
            sx = cap;
        }
        if sy > sx {
            std::mem::swap(&mut xs, &mut ys);
            std::mem::swap(&mut sx, &mut sy);
        }
        let x_prime = sx * rat(rng.gen_range(0..=16), 16);
        let input = RatioSplitInput { xs, ys, cap, x_prime };
        let gamma = sy / sx;
        let picked = split_by_ratio(&input).expect("valid input splits");
        check(5, split_conforms(&input, gamma, &picked), || {
            format!("case {case}: picked set {picked:?} misses a slack")
        });
        let mut found = false;
        'masks: for mask in 0u32..1 << s {
            let subset: Vec<usize> = (0..s).filter(|&j| mask >> j & 1 == 1).collect();
            if split_conforms(&input, gamma, &subset) {
                found = true;
                break 'masks;
            }
        }
        check(5, found, || format!("case {case}: brute force finds no conforming subset"));
    }
    let secs = start.elapsed().as_secs();
    check(5, secs <= 60, || format!("took {secs}s, budget 60s"));
    pass(5);
}

// ───────────────────────── criterion 6 ─────────────────────────
// Walk tails: on the all-flips plan of length ell, the empirical tail of
// {difference >= a} over 10^5 trials stays within exp(-a^2 / 2 ell) plus
// three binomial standard deviations, sigma = 1 / (2 sqrt(trials)).

#[test]
fn criterion_06_walk_tail_respects_closed_form() {
    let start = Instant::now();
    const TRIALS: usize = 100_000;
    let sigma = 0.5 / (TRIALS as f64).sqrt();
    let mut cell = 0u64;
    for (ell, root) in [(25usize, 5i64), (100, 10), (400, 20)] {
        let plan = vec![StepMode::CoinFlip; ell];
        for (cn, cd) in [(1i64, 10i64), (1, 2), (1, 1), (3, 2), (2, 1), (3, 1)] {
            let a = rat(cn * root, cd);
            let bound = tail_bound(a, ell).expect("a > 0");
            let emp = empirical_tail(&plan, ell, a, TRIALS, 0xD00D + cell).expect("trials run");
            let empf = *emp.numer() as f64 / *emp.denom() as f64;
            check(6, empf <= bound + 3.0 * sigma, || {
                format!("ell={ell} a={a}: empirical {empf:.6} over bound {bound:.6} + 3 sigma")
            });
            cell += 1;
        }
    }
    check(6, cell == 18, || format!("only {cell} grid cells ran"));
    let secs = start.elapsed().as_secs();
    check(6, secs <= 120, || format!("took {secs}s, budget 120s"));
    pass(6);
}

// ───────────────────────── criterion 7 ─────────────────────────
// Every embedding produced by the ten embedding operations passes the
// injective / edge-preserving / constraint validator. Families of
// embeddings must additionally be pairwise vertex-disjoint.

fn validated(crit: u32, tag: &str, pe: &PartialEmbedding) {
    check(crit, pe.validate().is_ok(), || format!("{tag}: validator rejects the embedding"));
    check(crit, pe.is_total(), || format!("{tag}: embedding is partial"));
}

fn validated_family(crit: u32, tag: &str, pes: &[PartialEmbedding]) -> usize {
    let mut images = VertexSet::new();
    for pe in pes {
        validated(crit, tag, pe);
        for (_, &x) in &pe.map {
            check(crit, images.insert(x), || format!("{tag}: image {x} reused across the family"));
        }
    }
    pes.len()
}

fn circulant_pair(ell: usize, deg: usize) -> Graph {
    let mut edges = Vec::with_capacity(ell * deg);
    for i in 0..ell {
        for j in 0..deg {
            edges.push((i, ell + (i + j) % ell));
        }
    }
    Graph::new(2 * ell, &edges).expect("circulant pair builds")
}

/// Star-of-pairs host: v0 sees every matched vertex; each pair is
/// internally complete bipartite.
fn star_host(ell: usize, pairs: usize) -> (Graph, RegularizedMatching, Vertex) {
    let v0 = 2 * ell * pairs;
    let mut edges = Vec::new();
    for p in 0..pairs {
        let base = 2 * ell * p;
        for i in 0..ell {
            for j in 0..ell {
                edges.push((base + i, base + ell + j));
            }
        }
    }
    for v in 0..v0 {
        edges.push((v0, v));
    }
    let g = Graph::new(v0 + 1, &edges).expect("star host builds");
    let m = RegularizedMatching::new(
        (0..pairs)
            .map(|p| {
                let base = 2 * ell * p;
                (range(base, base + ell), range(base + ell, base + 2 * ell))
            })
            .collect(),
        rat(1, 100),
        rat(1, 2),
        ell,
    )
    .expect("matching is well formed");
    (g, m, v0)
}

fn chains_tree(chains: usize, len: usize) -> RootedTree {
    let mut parent = vec![None; 1 + chains * len];
    for c in 0..chains {
        let base = 1 + len * c;
        parent[base] = Some(0);
        for i in 1..len {
            parent[base + i] = Some(base + i - 1);
        }
    }
    RootedTree::from_parents(0, parent).expect("chains build")
}

fn cherries_tree(count: usize) -> RootedTree {
    let mut parent = vec![None; 1 + 2 * count];
    for c in 0..count {
        parent[1 + 2 * c] = Some(0);
        parent[2 + 2 * c] = Some(1 + 2 * c);
    }
    RootedTree::from_parents(0, parent).expect("cherries build")
}

fn full_bipartite_spot(g: &Graph, a: usize, b: usize) -> DenseSpot {
    let edges: Vec<(Vertex, Vertex)> =
        (0..a).flat_map(|u| (a..a + b).map(move |w| (u, w))).collect();
    let spot = DenseSpot {
        u_side: range(0, a),
        w_side: range(a, a + b),
        edges,
        m: a.min(b) - 1,
        gamma: rat(1, 2),
    };
    spot.validate(g).expect("spot is genuine");
    spot
}

#[test]
fn criterion_07_every_embedding_passes_the_validator() {
    let start = Instant::now();
    let mut count = 0usize;

    // Greedy dense pairs: paths on K(k,k) plus every small tree on K(8,8).
    for k in [1usize, 2, 5, 8] {
        let g = complete_bipartite(k, k);
        let t = path(k);
        let pe = embed_greedy_dense(&g, &range(0, k), &range(k, 2 * k), &t, k)
            .expect("complete pair embeds a path");
        validated(7, "greedy-dense path", &pe);
        count += 1;
    }
    let k88 = complete_bipartite(8, 8);
    for k in 2..=6usize {
        for t in enumerate_trees(k).expect("enumeration succeeds") {
            let pe = embed_greedy_dense(&k88, &range(0, 8), &range(8, 16), &t, k)
                .expect("K(8,8) embeds small trees");
            validated(7, "greedy-dense class", &pe);
            count += 1;
        }
    }

    // Regular pairs: a random 4/5-dense pair, trees up to the eps ell cap.
    let reg = {
        let ell = 128;
        let mut rng = seeded(5);
        let mut edges = Vec::new();
        for u in 0..ell {
            for v in ell..2 * ell {
                if rng.gen_range(0..10) < 8 {
                    edges.push((u, v));
                }
            }
        }
        Graph::new(2 * ell, &edges).expect("random pair builds")
    };
    let (c, d) = (range(0, 128), range(128, 256));
    let stats = degree_and_density(&reg, &c, &d).expect("stats compute");
    assert!(stats.density >= nat(3) * rat(1, 4));
    for n in 1..=4usize {
        for s in 0..8u64 {
            let t = random_tree(n, 90 + s);
            let pe = embed_in_regular_pair(&reg, &c, &d, &c, &d, &range(0, 20), &t, rat(1, 32), rat(1, 4))
                .expect("regular pair embeds small trees");
            validated(7, "regular-pair", &pe);
            count += 1;
        }
    }

    // Filling a pair end to end at the smallest feasible scale.
    {
        let ell = 5408;
        let g = circulant_pair(ell, 624);
        let trees = vec![path(1), path(1), path(1)];
        let out = fill_pair(
            &g,
            &range(0, ell),
            &range(ell, 2 * ell),
            &trees,
            &VertexSet::new(),
            &range(0, 2 * ell),
            rat(1, 5408),
            rat(1, 26),
        )
        .expect("fill succeeds");
        count += validated_family(7, "fill-pair", &out);
    }

    // Super-regular pairs with forbidden holes: K(40,40) minus a matching.
    {
        let n = 40;
        let mut edges = Vec::new();
        for u in 0..n {
            for v in n..2 * n {
                if v - n != u {
                    edges.push((u, v));
                }
            }
        }
        let g = Graph::new(2 * n, &edges).expect("host builds");
        for s in 0..6u64 {
            let t = random_tree(8, s);
            let pe = embed_superregular(
                &g,
                &range(0, n),
                &range(n, 2 * n),
                &range(0, 10),
                &range(n, n + 5),
                &t,
                15,
                rat(1, 50),
                rat(9, 10),
            )
            .expect("super-regular pair embeds");
            validated(7, "super-regular", &pe);
            count += 1;
        }
    }

    // Balanced matchings: stars and chain bundles.
    {
        let (g, m, v0) = star_host(20, 1);
        for leaves in [4usize, 6, 8, 10] {
            let t = star(leaves);
            let pe = embed_balanced(&g, v0, &m, &[0], &t, rat(1, 10), 10)
                .expect("balanced star embeds");
            validated(7, "balanced star", &pe);
            count += 1;
        }
        let (g, m, v0) = star_host(160, 2);
        let t = chains_tree(8, 4);
        let pe = embed_balanced(&g, v0, &m, &[2, -3], &t, rat(1, 10), 40)
            .expect("balanced chains embed");
        validated(7, "balanced chains", &pe);
        count += 1;
    }

    // One-sided matchings: the cover forces roots onto the uncovered side.
    {
        let (g, m, v0) = star_host(100, 1);
        let cover = vec![range(0, 100)];
        for leaves in [10usize, 20] {
            let t = star(leaves);
            let pe = embed_oneside(&g, v0, &m, &cover, &range(100, 105), &t, rat(1, 10), 10)
                .expect("one-sided star embeds");
            validated(7, "one-sided star", &pe);
            count += 1;
        }
        for cherries in [5usize, 10, 15] {
            let t = cherries_tree(cherries);
            let pe = embed_oneside(&g, v0, &m, &cover, &VertexSet::new(), &t, rat(1, 5), 10)
                .expect("one-sided cherries embed");
            validated(7, "one-sided cherries", &pe);
            count += 1;
        }
    }

    // Avoiding hosts: forests rooted inside a protected dense spot.
    {
        let g = complete_bipartite(10, 10);
        let spot = full_bipartite_spot(&g, 10, 10);
        let e_set = range(0, 10);
        let cases: Vec<(Vec<RootedTree>, VertexSet, usize)> = vec![
            (vec![path(2), path(2)], set([18, 19]), 6),
            (vec![path(2)], VertexSet::new(), 6),
            (vec![path(2), path(2), path(1)], set([12, 19]), 7),
        ];
        for (trees, u, ustar_top) in cases {
            let out = embed_avoiding_forest(
                &g,
                std::slice::from_ref(&spot),
                &e_set,
                &trees,
                &u,
                &range(0, ustar_top),
                rat(1, 4),
                rat(1, 5),
                rat(1, 2),
                20,
            )
            .expect("avoiding forest embeds");
            for pe in &out {
                for (_, &x) in &pe.map {
                    check(7, !u.contains(x), || format!("avoiding: image {x} inside U"));
                }
            }
            count += validated_family(7, "avoiding", &out);
        }
    }

    // Nowhere-dense hosts with a discarded shadow.
    {
        let g = complete_bipartite(20, 20);
        let singles = [path(1), path(1), path(1)];
        for u in [VertexSet::new(), range(20, 24)] {
            let out = embed_nowheredense_forest(
                &g,
                &singles,
                &range(0, 20),
                &range(20, 40),
                &u,
                &range(0, 8),
                nat(1),
                rat(1, 800),
                rat(2, 5),
                40,
            )
            .expect("nowhere-dense forest embeds");
            count += validated_family(7, "nowhere-dense", &out);
        }
    }

    // Stochastic reservations and the expander front end.
    {
        let g = complete_bipartite(300, 300);
        let trees: Vec<RootedTree> = (0..10).map(|i| random_tree(15, 40 + i)).collect();
        for seed in [9u64, 10, 11] {
            let res = embed_shrubs_with_reservation(
                &g,
                &range(0, 20),
                &range(0, 300),
                &range(300, 600),
                &[],
                &trees,
                400,
                seed,
                16,
            )
            .expect("reservation succeeds");
            count += validated_family(7, "reservation", &res.embeddings);
        }
    }
    {
        let g = complete_bipartite(350, 350);
        for (tree_seed, run_seed) in [(77u64, 3u64), (78, 4)] {
            let t = random_tree(30, tree_seed);
            let res = embed_shrub_expander(
                &g,
                &range(0, 350),
                &range(350, 700),
                &VertexSet::new(),
                &range(0, 76),
                &[],
                &t,
                rat(1, 2),
                rat(1, 1_000_000),
                602,
                run_seed,
                16,
                DensityCertificate::Trusted,
            )
            .expect("expander shrub embeds");
            count += validated_family(7, "expander", &res.embeddings);
        }
    }

    check(7, count == 112, || format!("battery produced {count} embeddings, pinned count is 112"));
    let secs = start.elapsed().as_secs();
    check(7, secs <= 300, || format!("took {secs}s, budget 300s"));
    pass(7);
}

// ───────────────────────── criterion 8 ─────────────────────────
// Greedy-dense completeness: over every labeled graph on at most 7
// vertices and every ordered bipartition (A, B) of its vertices, for
// every k with mindeg(A) >= k in G and cross degrees at least k/2 both
// ways, the greedy embeds every rooted tree of order k (all rootings of
// every isomorphism class); each witness re-checks against the search
// oracle. The sweep is deterministic, so the embed count is pinned.

const C8_EMBEDS: u64 = 306_268_982;
const C8_TIME_SECS: u64 = 600;

#[test]
fn criterion_08_greedy_dense_is_complete_on_small_hosts() {
    let start = Instant::now();
    // All rootings of every isomorphism class, by tree order.
    let trees_by_k: Vec<Vec<RootedTree>> = (0..=6usize)
        .map(|k| {
            if k == 0 {
                return Vec::new();
            }
            let mut out = Vec::new();
            for t in enumerate_trees(k).expect("enumeration succeeds") {
                let edges: Vec<(Vertex, Vertex)> =
                    t.vertices().iter().filter_map(|&v| t.parent(v).map(|p| (p, v))).collect();
                for r in 0..k {
                    out.push(RootedTree::from_edges(k, r, &edges).expect("rerooting succeeds"));
                }
            }
            out
        })
        .collect();

    let mut embeds_total = 0u64;
    for n in 2..=7usize {
        let pairs: Vec<(usize, usize)> =
            (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        let trees_ref = &trees_by_k;
        let per_mask: u64 = (0u64..1 << pairs.len())
            .into_par_iter()
            .map(|mask| {
                let edges: Vec<(usize, usize)> = pairs
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, &e)| e)
                    .collect();
                let g = Graph::new(n, &edges).expect("graph builds");
                let mut adj = [0u32; 7];
                for &(u, v) in &edges {
                    adj[u] |= 1 << v;
                    adj[v] |= 1 << u;
                }
                let full = (1u32 << n) - 1;
                let mut embeds = 0u64;
                let mut oracle_memo: HashMap<(usize, usize), ()> = HashMap::new();
                for amask in 1u32..full {
                    let bmask = full ^ amask;
                    // Largest k the hypotheses allow for this split.
                    let mut kmax = n;
                    for v in 0..n {
                        if amask >> v & 1 == 1 {
                            kmax = kmax
                                .min(adj[v].count_ones() as usize)
                                .min(2 * (adj[v] & bmask).count_ones() as usize);
                        } else {
                            kmax = kmax.min(2 * (adj[v] & amask).count_ones() as usize);
                        }
                    }
                    if kmax == 0 {
                        continue;
                    }
                    let a: VertexSet = (0..n).filter(|&v| amask >> v & 1 == 1).collect();
                    let b: VertexSet = (0..n).filter(|&v| bmask >> v & 1 == 1).collect();
                    for k in 1..=kmax {
                        for (ti, t) in trees_ref[k].iter().enumerate() {
                            let pe = embed_greedy_dense(&g, &a, &b, t, k).unwrap_or_else(|e| {
                                panic!(
                                    "criterion 8: FAIL (n={n} mask={mask} A={amask:b} k={k}: {e})"
                                )
                            });
                            check(8, pe.validate().is_ok() && pe.is_total(), || {
                                format!("n={n} mask={mask} A={amask:b} k={k}: invalid witness")
                            });
                            if let std::collections::hash_map::Entry::Vacant(slot) =
                                oracle_memo.entry((k, ti))
                            {
                                check(8, contains_tree(&g, t).is_some(), || {
                                    format!("n={n} mask={mask} k={k}: oracle finds no copy")
                                });
                                slot.insert(());
                            }
                            embeds += 1;
                        }
                    }
                }
                embeds
            })
            .sum();
        embeds_total += per_mask;
    }
    check(8, embeds_total == C8_EMBEDS, || {
        format!("{embeds_total} embeds ran, pinned count is {C8_EMBEDS}")
    });
    let secs = start.elapsed().as_secs();
    check(8, secs <= C8_TIME_SECS, || format!("took {secs}s, budget {C8_TIME_SECS}s"));
    pass(8);
}

// ───────────────────────── criterion 9 ─────────────────────────
// The full sweep over labeled graphs on at most 7 vertices: wherever at
// least n/2 vertices have degree above k-2, every tree of order k
// embeds. Zero counterexamples, pinned sweep counts.

const C9_GRAPHS: u64 = 2_131_019;
const C9_TIME_SECS: u64 = 1800;

#[test]
fn criterion_09_conjecture_sweep_to_seven_is_clean() {
    let start = Instant::now();
    let report = verify_conjecture_range(7).expect("sweep runs");
    check(9, report.counterexamples.is_empty(), || {
        format!("{} counterexamples, first: {:?}", report.counterexamples.len(),
            report.counterexamples.first())
    });
    check(9, report.graphs_swept == C9_GRAPHS, || {
        format!("{} graphs swept, expected {C9_GRAPHS}", report.graphs_swept)
    });
    check(9, report.instances_checked > 0, || "no instances checked".into());
    let secs = start.elapsed().as_secs();
    check(9, secs <= C9_TIME_SECS, || format!("took {secs}s, budget {C9_TIME_SECS}s"));
    println!("criterion 09: swept {} graphs, {} instances in {secs}s",
        report.graphs_swept, report.instances_checked);
    pass(9);
}

// ───────────────────────── criterion 10 ─────────────────────────
// 1000 randomized reservation runs with fresh trees and watched sets:
// every accepted run satisfies |P_j ∩ images| <= |P_j ∩ reserved| +
// ceil(k^(3/4)) for every j (re-derived here from the returned pieces,
// not read from the run's own bookkeeping), and fewer than 1% of runs
// need a resample.

#[test]
fn criterion_10_reservation_inequality_holds() {
    let g = complete_bipartite(300, 300);
    let x1 = range(0, 300);
    let x2 = range(300, 600);
    let xstar = range(0, 20);
    let mut extra_attempts = 0usize;
    for run in 0..1000u64 {
        let trees: Vec<RootedTree> = (0..10).map(|i| random_tree(15, run * 101 + i)).collect();
        let p_family: Vec<VertexSet> = (0..20)
            .map(|j| {
                let mut rng = treebed::rng::stream(2000 + run, j);
                let size = rng.gen_range(150..=250usize);
                let mut p = VertexSet::new();
                while p.len() < size {
                    p.insert(rng.gen_range(0..600));
                }
                p
            })
            .collect();
        let res = embed_shrubs_with_reservation(&g, &xstar, &x1, &x2, &p_family, &trees, 400, run, 16)
            .unwrap_or_else(|e| panic!("criterion 10: FAIL (run {run}: {e})"));
        check(10, res.slack == 90, || format!("run {run}: slack {} != 90", res.slack));
        extra_attempts += res.attempts - 1;
        let images: VertexSet =
            res.embeddings.iter().flat_map(|pe| pe.map.values().copied()).collect();
        check(10, images.intersection(&res.reserved).is_empty(), || {
            format!("run {run}: reservation overlaps the images")
        });
        for (j, p) in p_family.iter().enumerate() {
            let hit_img = p.intersection(&images).len();
            let hit_res = p.intersection(&res.reserved).len();
            check(10, hit_img <= hit_res + res.slack, || {
                format!("run {run} watched set {j}: {hit_img} image hits vs {hit_res} reserved")
            });
        }
    }
    check(10, extra_attempts < 10, || {
        format!("{extra_attempts} resamples across 1000 runs is not below 1%")
    });
    pass(10);
}

// ───────────────────────── criterion 11 ─────────────────────────
// Shadow and ghost facts over 1000 instances in total.
//   (i)  Bounded hosts: |shadow^i(U, t)| <= (maxdeg/t)^i |U| for i <= 3.
//   (ii) Nowhere-dense hosts: star forests are (2, gamma)-nowhere-dense
//        outright (a bipartite subgraph with minimum degree 3 on both
//        sides holds a cycle, and forests have none), and with k = 100,
//        gamma = 1/50, Q = 1 the one-step shadow at threshold alpha k
//        has at most 16 Q^2 gamma k / alpha vertices.
//   (iii) Ghosts: contain U, at most 2|U|, per-pair balanced, idempotent.

fn random_graph(n: usize, edge_in_16: u32, seed: u64) -> Graph {
    let mut rng = seeded(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_range(0..16) < edge_in_16 {
                edges.push((u, v));
            }
        }
    }
    Graph::new(n, &edges).expect("random graph builds")
}

#[test]
fn criterion_11_shadow_and_ghost_facts_hold() {
    // (i) iterated shadow growth under a degree cap.
    for i in 0..400u64 {
        let mut rng = seeded(8000 + i);
        let n = rng.gen_range(30..=60usize);
        let g = random_graph(n, rng.gen_range(2..=7), 8400 + i);
        let usz = rng.gen_range(1..=n / 3);
        let u: VertexSet = (0..usz).map(|_| rng.gen_range(0..n)).collect();
        let t = rng.gen_range(1..=6usize);
        let maxdeg = g.max_deg();
        let mut bound = nat(u.len());
        for exp in 0..=3usize {
            let sh = shadow(&g, &u, t, exp);
            check(11, nat(sh.len()) <= bound, || {
                format!("growth instance {i}: |shadow^{exp}| = {} over bound {bound}", sh.len())
            });
            bound = bound * nat(maxdeg) / nat(t);
        }
    }

    // (ii) one-step shadow cap on nowhere-dense hosts.
    let k = 100usize;
    let gamma = rat(1, 50);
    let mut nonempty = 0usize;
    for i in 0..300u64 {
        let mut rng = seeded(8800 + i);
        let hubs = rng.gen_range(3..=8usize);
        let mut degs: Vec<usize> = (0..hubs).map(|_| rng.gen_range(20..=60)).collect();
        degs[0] = rng.gen_range(49..=60);
        let mut edges = Vec::new();
        let mut hub_ids = Vec::new();
        let mut next = 0usize;
        for &d in &degs {
            let hub = next;
            hub_ids.push(hub);
            for leaf in next + 1..=next + d {
                edges.push((hub, leaf));
            }
            next += d + 1;
        }
        let g = Graph::new(next, &edges).expect("star forest builds");
        // U: all leaves of the big hub, then random leaves up to |U| <= k.
        let mut u = VertexSet::new();
        for leaf in hub_ids[0] + 1..=hub_ids[0] + degs[0] {
            u.insert(leaf);
        }
        while u.len() < k {
            u.insert(rng.gen_range(0..next));
        }
        assert!(u.len() <= k);
        for (an, ad) in [(16i64, 50i64), (24, 50), (32, 50)] {
            let alpha = rat(an, ad);
            // Q = 1 needs alpha >= 16 gamma; threshold alpha k is integral.
            assert!(alpha >= nat(16) * gamma);
            let threshold = (alpha * nat(k)).to_integer() as usize;
            let sh = shadow(&g, &u, threshold, 1);
            let bound = nat(16) * gamma * nat(k) / alpha;
            check(11, nat(sh.len()) <= bound, || {
                format!("spot-free instance {i}: |shadow| = {} over {bound} at alpha {alpha}",
                    sh.len())
            });
            if threshold == 32 && !sh.is_empty() {
                nonempty += 1;
            }
        }
    }
    // The big hub sees at least 49 > 32 vertices of U, so the first
    // threshold's shadow is nonempty by construction.
    check(11, nonempty == 300, || format!("only {nonempty}/300 nonempty shadows"));

    // (iii) ghost closure.
    for i in 0..300u64 {
        let mut rng = seeded(9200 + i);
        let pairs = rng.gen_range(2..=5usize);
        let ell = rng.gen_range(3..=6usize);
        let m = RegularizedMatching::new(
            (0..pairs).map(|p| (range(2 * ell * p, 2 * ell * p + ell),
                range(2 * ell * p + ell, 2 * ell * (p + 1)))).collect(),
            rat(1, 100),
            rat(1, 2),
            ell,
        )
        .expect("matching builds");
        let top = 2 * ell * pairs + 4;
        let u: VertexSet = (0..top).filter(|_| rng.gen_bool(0.35)).collect();
        let gu = ghost(&m, &u).expect("ghost computes");
        let fail = |what: &str| format!("ghost instance {i}: {what}");
        check(11, u.iter().all(|v| gu.contains(v)), || fail("ghost drops a vertex of U"));
        check(11, gu.len() <= 2 * u.len(), || fail("ghost larger than 2|U|"));
        for (a, b) in m.pairs() {
            check(11, gu.intersection(a).len() == gu.intersection(b).len(), || {
                fail("ghost meets a pair unevenly")
            });
        }
        check(11, ghost(&m, &gu).expect("ghost computes") == gu, || fail("ghost not idempotent"));
    }
    pass(11);
}

// ───────────────────────── criterion 12 ─────────────────────────
// Determinism at the binary boundary: re-running seven subcommands with
// identical arguments (seeds included) yields byte-identical reports.
// The byte-level content of these reports is separately frozen by the
// golden tests in cli.rs.

#[test]
fn criterion_12_reports_are_byte_identical() {
    let dir = tempfile::tempdir().expect("tempdir");
    let write = |name: &str, content: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, content).expect("fixture writes");
        p
    };
    let star30 = {
        let mut s = String::from("31 0\n");
        for v in 1..31 {
            s.push_str(&format!("{v} 0\n"));
        }
        s
    };
    let k88 = {
        let mut s = String::from("16\n");
        for u in 0..8 {
            for v in 8..16 {
                s.push_str(&format!("{u} {v}\n"));
            }
        }
        s
    };
    let path6 = "6 0\n1 0\n2 1\n3 2\n4 3\n5 4\n";
    let tree_p = write("star30.txt", &star30);
    let graph_p = write("k88.txt", &k88);
    let path_p = write("path6.txt", path6);
    let tree = tree_p.to_str().unwrap();
    let graph = graph_p.to_str().unwrap();
    let path6 = path_p.to_str().unwrap();

    let runs: Vec<Vec<&str>> = vec![
        vec!["partition", "--tree", tree, "--ell", "5"],
        vec!["skeleton", "--tree", tree, "--ell", "5"],
        vec!["gen-tree", "--n", "40", "--seed", "7"],
        vec!["gen-lks", "--n", "24", "--k", "6", "--alpha", "1/10", "--seed", "5"],
        vec!["duplicate-sim", "--ell", "100", "--seed", "3", "--a", "10", "--trials", "2000"],
        vec![
            "check-regularity", "--graph", graph, "--side-a", "0,1,2,3,4,5,6,7",
            "--side-b", "8,9,10,11,12,13,14,15", "--eps", "1/4",
        ],
        vec![
            "embed-greedy", "--graph", graph, "--tree", path6, "--k", "6",
            "--side-a", "0,1,2,3,4,5,6,7", "--side-b", "8,9,10,11,12,13,14,15",
        ],
    ];
    for args in &runs {
        let once = std::process::Command::new(env!("CARGO_BIN_EXE_treebed"))
            .args(args)
            .output()
            .expect("binary runs");
        let twice = std::process::Command::new(env!("CARGO_BIN_EXE_treebed"))
            .args(args)
            .output()
            .expect("binary runs");
        check(12, once.status.code() == Some(0), || {
            format!("{args:?} exited {:?}: {}", once.status.code(),
                String::from_utf8_lossy(&once.stderr))
        });
        check(12, once.stdout == twice.stdout && once.status.code() == twice.status.code(), || {
            format!("{args:?} is not deterministic")
        });
        check(12, !once.stdout.is_empty(), || format!("{args:?} printed nothing"));
    }
    pass(12);
}
