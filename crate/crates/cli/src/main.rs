//! Batch interface over the embedding library: parse the text formats,
//! dispatch one subcommand, emit a line-oriented report.
//!
//! Exit codes: 0 success, 1 a property violation was found and reported,
//! 2 malformed input (bad flags, unreadable files, parse failures, unmet
//! preconditions). Reports are deterministic: the same configuration,
//! seed included, renders byte-identical output.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};
use treebed::duplicate::{self, StepMode};
use treebed::embed::{
    self, embed_avoiding_forest, embed_greedy_dense, embed_in_regular_pair, embed_shrub_expander,
    fill_pair, DensityCertificate, PartialEmbedding,
};
use treebed::error::Error;
use treebed::graph::{
    check_avoiding, check_nowhere_dense, check_regularity, degree_and_density, AvoidingMode,
    AvoidingVerdict, DenseSpot, Graph, NowhereDenseVerdict, RegularityMode, RegularityStatus,
    SearchBudget,
};
use treebed::oracle::{gen_hypothesis_graph, gen_random_tree, verify_conjecture_range};
use treebed::partition::{fine_partition, ordered_skeleton, validate_fine_partition, SkeletonKind};
use treebed::rat::{format_rat, parse_rat, Rat};
use treebed::tree::{RootedTree, Vertex, VertexSet};
use treebed::Result;

// ───────────────────────── command line ─────────────────────────

#[derive(Parser)]
#[command(name = "treebed", disable_help_subcommand = true)]
struct Cli {
    /// Render the report as "key=value" lines instead of "key: value".
    #[arg(long, global = true, action = ArgAction::SetTrue)]
    machine: bool,

    /// Write the report to this path instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Seed for every randomized subcommand.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Cut a rooted tree into hub sets and shrubs, then check every clause.
    Partition {
        #[arg(long, value_name = "PATH")]
        tree: PathBuf,
        #[arg(long)]
        ell: usize,
    },
    /// Order hubs and shrubs so every prefix spans a connected subtree.
    Skeleton {
        #[arg(long, value_name = "PATH")]
        tree: PathBuf,
        #[arg(long)]
        ell: usize,
    },
    /// Greedy embedding into a bipartition with a full-degree side A.
    EmbedGreedy {
        #[arg(long, value_name = "PATH")]
        graph: PathBuf,
        #[arg(long, value_name = "PATH")]
        tree: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, value_parser = vset_arg, value_name = "LIST")]
        side_a: VertexSet,
        #[arg(long, value_parser = vset_arg, value_name = "LIST")]
        side_b: VertexSet,
    },
    /// Embed a small tree into a regular pair, root on typical X* vertices.
    EmbedRegular {
        #[arg(long, value_name = "PATH")]
        graph: PathBuf,
        #[arg(long, value_name = "PATH")]
        tree: PathBuf,
        #[arg(long, value_parser = vset_arg, value_name = "LIST")]
        side_a: VertexSet,
        #[arg(long, value_parser = vset_arg, value_name = "LIST")]
        side_b: VertexSet,
        /// Free part of side A; defaults to all of it.
        #[arg(long, value_parser = vset_arg, value_name = "LIST")]
        x: Option<VertexSet>,
        /// Free part of side B; defaults to all of it.
        #[arg(long, value_parser = vset_arg, value_name = "LIST")]
        y: Option<VertexSet>,
        #[arg(long, value_parser = vset_arg, value_name = "LIST")]
        xstar: VertexSet,
        #[arg(long, value_parser = rat_arg, value_name = "P/Q")]
        eps: Rat,
        #[arg(long, value_parser = rat_arg, value_name = "P/Q")]
        beta: Rat,
    },
    /// Embed a forest of small trees into a regular pair, avoiding U.
    FillPair {
        #[arg(long, value_name = "PATH")]
        graph: PathBuf,
        /// Tree file; repeat once per component.
        #[arg(long, value_name = "PATH", required = true)]
        tree: Vec<PathBuf>,
        #[arg(long, value_parser = vset_arg, value_name = "LIST")]
        side_a: VertexSet,
        #[arg(long, value_parser = vset_arg, value_name = "LIST")]
        side_b: VertexSet,
        #[arg(long, value_parser = vset_arg, value_name = "LIST")]
        xstar: VertexSet,
        /// Vertices to avoid; defaults to none.
        #[arg(long, value_parser = vset_arg, value_name = "LIST")]
        u: Option<VertexSet>,
        #[arg(long, value_parser = rat_arg, value_name = "P/Q")]
        eps: Rat,
        #[arg(long, value_parser = rat_arg, value_name = "P/Q")]
        beta: Rat,
    },
    /// Embed a forest into an avoiding set, dodging U spot by spot.
    EmbedAvoiding {
        #[arg(long, value_name = "PATH")]
        graph: PathBuf,
        /// Dense-spot file describing the spot family.
        #[arg(long, value_name = "PATH")]
        spots: PathBuf,
        /// Tree file; repeat once per component.
        #[arg(long, value_name = "PATH", required = true)]
        tree: Vec<PathBuf>,
        /// The avoiding set E.
        #[arg(long, value_parser = vset_arg, value_name = "LIST")]
        eset: VertexSet,
        /// Vertices to avoid; defaults to none.
        #[arg(long, value_parser = vset_arg, value_name = "LIST")]
        u: Option<VertexSet>,
        /// Root candidates inside E.
        #[arg(long, value_parser = vset_arg, value_name = "LIST")]
        ustar: VertexSet,
        #[arg(long, value_parser = rat_arg, value_name = "P/Q")]
        lambda: Rat,
        #[arg(long, value_parser = rat_arg, value_name = "P/Q")]
        eps: Rat,
        #[arg(long, value_parser = rat_arg, value_name = "P/Q")]
        gamma: Rat,
        #[arg(long)]
        k: usize,
    },
    /// Embed one shrub into an expander-like host with a reservation.
    EmbedExpander {
        #[arg(long, value_name = "PATH")]
        graph: PathBuf,
        #[arg(long, value_name = "PATH")]
        tree: PathBuf,
        #[arg(long, value_parser = vset_arg, value_name = "LIST")]
        v2: VertexSet,
        #[arg(long, value_parser = vset_arg, value_name = "LIST")]
        v3: VertexSet,
        /// Vertices to avoid; defaults to none.
        #[arg(long, value_parser = vset_arg, value_name = "LIST")]
        u: Option<VertexSet>,
        /// Root candidates inside V2.
        #[arg(long, value_parser = vset_arg, value_name = "LIST")]
        ustar: VertexSet,
        /// Watched set P_j; repeat once per set.
        #[arg(long, value_parser = vset_arg, value_name = "LIST")]
        watch: Vec<VertexSet>,
        #[arg(long, value_parser = rat_arg, value_name = "P/Q")]
        delta: Rat,
        #[arg(long, value_parser = rat_arg, value_name = "P/Q")]
        gamma: Rat,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 16)]
        retries: usize,
        /// Search for a dense spot first instead of trusting nowhere-density.
        #[arg(long, action = ArgAction::SetTrue)]
        certified: bool,
    },
    /// Run the two-bit duplication game once and report the tallies.
    DuplicateSim {
        #[arg(long)]
        ell: usize,
        /// Coin-flip steps; defaults to ell.
        #[arg(long)]
        flips: Option<usize>,
        #[arg(long, default_value_t = 0)]
        both_one: usize,
        #[arg(long, default_value_t = 0)]
        both_zero: usize,
        /// Deviation threshold; adds the closed-form tail bound.
        #[arg(long, value_parser = rat_arg, value_name = "P/Q")]
        a: Option<Rat>,
        /// Monte Carlo trials; adds the empirical tail at threshold a.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Test a disjoint pair for eps-regularity, optionally min-degrees too.
    CheckRegularity {
        #[arg(long, value_name = "PATH")]
        graph: PathBuf,
        #[arg(long, value_parser = vset_arg, value_name = "LIST")]
        side_a: VertexSet,
        #[arg(long, value_parser = vset_arg, value_name = "LIST")]
        side_b: VertexSet,
        #[arg(long, value_parser = rat_arg, value_name = "P/Q")]
        eps: Rat,
        /// Random subpairs to draw; exhaustive below the size cap if absent.
        #[arg(long)]
        samples: Option<usize>,
        /// Also require cross-degrees of at least this fraction of the far side.
        #[arg(long = "super", value_parser = rat_arg, value_name = "P/Q")]
        super_gamma: Option<Rat>,
    },
    /// Test whether E avoids every small U through the given spot family.
    CheckAvoiding {
        #[arg(long, value_name = "PATH")]
        graph: PathBuf,
        #[arg(long, value_name = "PATH")]
        spots: PathBuf,
        /// The candidate avoiding set E.
        #[arg(long, value_parser = vset_arg, value_name = "LIST")]
        eset: VertexSet,
        #[arg(long, value_parser = rat_arg, value_name = "P/Q")]
        lambda: Rat,
        #[arg(long, value_parser = rat_arg, value_name = "P/Q")]
        eps: Rat,
        #[arg(long, value_parser = rat_arg, value_name = "P/Q")]
        gamma: Rat,
        #[arg(long)]
        k: usize,
        /// Adversarial trials; exhaustive below the family cap if absent.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Search for a dense spot; finding one refutes nowhere-density.
    FindSpot {
        #[arg(long, value_name = "PATH")]
        graph: PathBuf,
        #[arg(long)]
        m: usize,
        #[arg(long, value_parser = rat_arg, value_name = "P/Q")]
        gamma: Rat,
        /// Exhaustive search below this host size.
        #[arg(long, default_value_t = 8)]
        exact_n: usize,
        #[arg(long, default_value_t = 64)]
        trials: usize,
    },
    /// Sweep every labeled graph up to n-max against every small tree.
    VerifyConjecture {
        #[arg(long)]
        n_max: usize,
        /// Write counterexample graph and tree files into this directory.
        #[arg(long, value_name = "PATH")]
        dump_dir: Option<PathBuf>,
    },
    /// Check an embedding file against its graph and tree.
    ValidateEmbedding {
        #[arg(long, value_name = "PATH")]
        graph: PathBuf,
        #[arg(long, value_name = "PATH")]
        tree: PathBuf,
        #[arg(long, value_name = "PATH")]
        embedding: PathBuf,
    },
    /// Generate a uniform random labeled tree rooted at 0.
    GenTree {
        #[arg(long)]
        n: usize,
    },
    /// Generate a random graph meeting the degree hypothesis for k.
    GenLks {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, value_parser = rat_arg, value_name = "P/Q")]
        alpha: Rat,
    },
}

/// Rational flag value, "p/q" or a bare integer.
fn rat_arg(s: &str) -> std::result::Result<Rat, String> {
    parse_rat(s).map_err(|e| e.to_string())
}

/// Vertex-set flag value: comma-separated ids, or "-" for the empty set.
fn vset_arg(s: &str) -> std::result::Result<VertexSet, String> {
    let s = s.trim();
    if s == "-" || s.is_empty() {
        return Ok(VertexSet::default());
    }
    s.split(',')
        .map(|tok| tok.trim().parse::<Vertex>().map_err(|_| format!("bad vertex id {tok:?}")))
        .collect()
}

// ───────────────────────── reports ─────────────────────────

enum Line {
    Pair(String, String),
    Raw(String),
}

/// Ordered report body; pairs follow the machine flag, raw lines do not.
struct Report {
    lines: Vec<Line>,
}

impl Report {
    fn new(subcommand: &str) -> Self {
        let mut r = Report { lines: Vec::new() };
        r.pair("subcommand", subcommand);
        r
    }

    /// Verbatim artifact output: no subcommand header, raw lines only.
    fn artifact(text: &str) -> Self {
        let mut r = Report { lines: Vec::new() };
        for line in text.lines() {
            r.raw(line);
        }
        r
    }

    fn pair(&mut self, key: impl Into<String>, value: impl Display) {
        self.lines.push(Line::Pair(key.into(), value.to_string()));
    }

    fn raw(&mut self, line: impl Into<String>) {
        self.lines.push(Line::Raw(line.into()));
    }

    /// Splits a core-produced "key: value" block into report pairs.
    fn block(&mut self, text: &str) {
        for line in text.lines() {
            match line.split_once(": ") {
                Some((k, v)) => self.pair(k, v),
                None => self.raw(line),
            }
        }
    }

    /// An embedding is kept verbatim so the output feeds validate-embedding.
    fn embedding(&mut self, pe: &PartialEmbedding) {
        for line in pe.serialize().lines() {
            self.raw(line);
        }
    }

    fn render(&self, machine: bool) -> String {
        let mut out = String::new();
        for line in &self.lines {
            match line {
                Line::Pair(k, v) if machine => out.push_str(&format!("{k}={v}\n")),
                Line::Pair(k, v) => out.push_str(&format!("{k}: {v}\n")),
                Line::Raw(s) => {
                    out.push_str(s);
                    out.push('\n');
                }
            }
        }
        out
    }
}

fn fmt_set(s: &VertexSet) -> String {
    if s.is_empty() {
        return "-".into();
    }
    s.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

// ───────────────────────── file I/O ─────────────────────────

/// I/O failures surface as input errors naming the path, distinct from
/// parse errors, which carry a line number instead.
fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::input(format!("cannot read {}: {e}", path.display())))
}

fn load_graph(path: &Path) -> Result<Graph> {
    Graph::parse(&read_text(path)?)
}

fn load_tree(path: &Path) -> Result<RootedTree> {
    RootedTree::parse(&read_text(path)?)
}

fn load_trees(paths: &[PathBuf]) -> Result<Vec<RootedTree>> {
    paths.iter().map(|p| load_tree(p)).collect()
}

// ───────────────────────── spot files ─────────────────────────

/// Spot file format, also emitted by find-spot: one block per spot,
///
///   spot:
///   u_side: 0 1
///   w_side: 5 6
///   m: 1
///   gamma: 1/2
///   edges: 0-5 0-6 1-5 1-6
///
/// Keys accept ':' or '='. Every spot is validated against the host.
fn parse_spots(text: &str, g: &Graph) -> Result<Vec<DenseSpot>> {
    let mut spots: Vec<DenseSpot> = Vec::new();
    let mut open = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = idx + 1;
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line: lineno, msg };
        let (key, value) =
            line.split_once([':', '=']).ok_or_else(|| err("expected key: value".into()))?;
        let (key, value) = (key.trim(), value.trim());
        if key == "spot" {
            spots.push(DenseSpot {
                u_side: VertexSet::default(),
                w_side: VertexSet::default(),
                edges: Vec::new(),
                m: 0,
                gamma: Rat::new(0, 1),
            });
            open = true;
            continue;
        }
        let spot = match (open, spots.last_mut()) {
            (true, Some(s)) => s,
            _ => return Err(err(format!("key {key:?} before any spot: line"))),
        };
        match key {
            "u_side" => spot.u_side = parse_ws_set(value, lineno)?,
            "w_side" => spot.w_side = parse_ws_set(value, lineno)?,
            "m" => {
                spot.m = value
                    .parse()
                    .map_err(|_| err(format!("bad m value {value:?}")))?;
            }
            "gamma" => {
                spot.gamma = parse_rat(value).map_err(|e| err(e.to_string()))?;
            }
            "edges" => {
                spot.edges = value
                    .split_whitespace()
                    .map(|tok| {
                        let (u, w) = tok
                            .split_once('-')
                            .ok_or_else(|| err(format!("bad edge token {tok:?}")))?;
                        Ok((
                            u.parse().map_err(|_| err(format!("bad edge token {tok:?}")))?,
                            w.parse().map_err(|_| err(format!("bad edge token {tok:?}")))?,
                        ))
                    })
                    .collect::<Result<_>>()?;
            }
            _ => return Err(err(format!("unknown key {key:?}"))),
        }
    }
    if spots.is_empty() {
        return Err(Error::input("spot file holds no spots"));
    }
    for spot in &spots {
        spot.validate(g)?;
    }
    Ok(spots)
}

/// Space-separated vertex ids; "-" is the empty set.
fn parse_ws_set(s: &str, lineno: usize) -> Result<VertexSet> {
    if s == "-" {
        return Ok(VertexSet::default());
    }
    s.split_whitespace()
        .map(|tok| {
            tok.parse::<Vertex>().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad vertex id {tok:?}"),
            })
        })
        .collect()
}

fn spot_block(r: &mut Report, prefix: &str, spot: &DenseSpot) {
    r.pair(format!("{prefix}u_side"), fmt_set(&spot.u_side));
    r.pair(format!("{prefix}w_side"), fmt_set(&spot.w_side));
    r.pair(format!("{prefix}m"), spot.m);
    r.pair(format!("{prefix}gamma"), format_rat(spot.gamma));
    let edges =
        spot.edges.iter().map(|(u, w)| format!("{u}-{w}")).collect::<Vec<_>>().join(" ");
    r.pair(format!("{prefix}edges"), if edges.is_empty() { "-".into() } else { edges });
}

// ───────────────────────── violation rendering ─────────────────────────

/// Errors that report a found property violation (exit 1) rather than bad
/// input (exit 2).
fn is_violation(e: &Error) -> bool {
    !matches!(e, Error::Input(_) | Error::Parse { .. } | Error::Precondition(_))
}

/// Renders a violation-class error into the report and yields exit 1.
fn violation_lines(r: &mut Report, e: &Error) -> u8 {
    match e {
        Error::Embed(ev) => {
            r.pair("result", "stalled");
            r.pair("stage", &ev.stage);
            r.pair("tree_vertex", ev.tree_vertex);
            r.pair(
                "parent_image",
                ev.parent_image.map_or("-".into(), |v| v.to_string()),
            );
            r.pair("candidates_adjacent", ev.candidates_adjacent);
            r.pair("candidates_free", ev.candidates_free);
        }
        Error::Contract(msg) => {
            r.pair("result", "contract-violation");
            r.pair("detail", msg);
        }
        Error::AvoidingViolation(msg) => {
            r.pair("result", "avoiding-violation");
            r.pair("detail", msg);
        }
        Error::NowhereDenseViolation(msg) => {
            r.pair("result", "density-violation");
            r.pair("detail", msg);
        }
        Error::Stochastic { attempts, msg } => {
            r.pair("result", "stochastic-failure");
            r.pair("attempts", attempts);
            r.pair("detail", msg);
        }
        _ => unreachable!("input-class errors do not reach the report"),
    }
    1
}

/// Runs an embedding operation: a violation-class failure becomes report
/// lines and exit 1, input-class failures propagate to exit 2.
fn embed_outcome<'a>(
    r: &mut Report,
    res: Result<PartialEmbedding<'a>>,
) -> Result<(Option<PartialEmbedding<'a>>, u8)> {
    match res {
        Ok(pe) => {
            pe.validate()?;
            r.pair("result", "embedded");
            r.pair("mapped", pe.map.len());
            Ok((Some(pe), 0))
        }
        Err(e) if is_violation(&e) => {
            let code = violation_lines(r, &e);
            Ok((None, code))
        }
        Err(e) => Err(e),
    }
}

// ───────────────────────── subcommands ─────────────────────────

fn run_partition(tree: &Path, ell: usize) -> Result<(Report, u8)> {
    let t = load_tree(tree)?;
    let mut r = Report::new("partition");
    r.pair("n", t.n());
    let p = fine_partition(&t, ell)?;
    r.block(&p.report());
    let check = validate_fine_partition(&t, ell, &p);
    r.block(&check.summary());
    let pass = check.all_pass();
    r.pair("result", if pass { "pass" } else { "fail" });
    Ok((r, u8::from(!pass)))
}

fn run_skeleton(tree: &Path, ell: usize) -> Result<(Report, u8)> {
    let t = load_tree(tree)?;
    let mut r = Report::new("skeleton");
    r.pair("n", t.n());
    r.pair("ell", ell);
    let p = fine_partition(&t, ell)?;
    let items = ordered_skeleton(&t, &p)?;
    r.pair("items", items.len());
    for (i, item) in items.iter().enumerate() {
        let kind = match item.kind {
            SkeletonKind::Hub => "hub",
            SkeletonKind::Shrub => "shrub",
        };
        r.pair(
            format!("item {i}"),
            format!("kind={kind} index={} vertices={}", item.index, fmt_set(&item.vertices)),
        );
    }
    Ok((r, 0))
}

fn run_embed_greedy(
    graph: &Path,
    tree: &Path,
    k: usize,
    side_a: &VertexSet,
    side_b: &VertexSet,
) -> Result<(Report, u8)> {
    let g = load_graph(graph)?;
    let t = load_tree(tree)?;
    let mut r = Report::new("embed-greedy");
    r.pair("host", g.n());
    r.pair("tree", t.n());
    r.pair("k", k);
    let (pe, code) = embed_outcome(&mut r, embed_greedy_dense(&g, side_a, side_b, &t, k))?;
    if let Some(pe) = pe {
        r.embedding(&pe);
    }
    Ok((r, code))
}

#[allow(clippy::too_many_arguments)]
fn run_embed_regular(
    graph: &Path,
    tree: &Path,
    side_a: &VertexSet,
    side_b: &VertexSet,
    x: Option<&VertexSet>,
    y: Option<&VertexSet>,
    xstar: &VertexSet,
    eps: Rat,
    beta: Rat,
) -> Result<(Report, u8)> {
    let g = load_graph(graph)?;
    let t = load_tree(tree)?;
    let x = x.unwrap_or(side_a);
    let y = y.unwrap_or(side_b);
    let mut r = Report::new("embed-regular");
    r.pair("host", g.n());
    r.pair("tree", t.n());
    let stats = degree_and_density(&g, side_a, side_b)?;
    r.pair("density", format_rat(stats.density));
    let (pe, code) = embed_outcome(
        &mut r,
        embed_in_regular_pair(&g, side_a, side_b, x, y, xstar, &t, eps, beta),
    )?;
    if let Some(pe) = pe {
        r.embedding(&pe);
    }
    Ok((r, code))
}

#[allow(clippy::too_many_arguments)]
fn run_fill_pair(
    graph: &Path,
    trees: &[PathBuf],
    side_a: &VertexSet,
    side_b: &VertexSet,
    xstar: &VertexSet,
    u: Option<&VertexSet>,
    eps: Rat,
    beta: Rat,
) -> Result<(Report, u8)> {
    let g = load_graph(graph)?;
    let ts = load_trees(trees)?;
    let empty = VertexSet::default();
    let u = u.unwrap_or(&empty);
    let mut r = Report::new("fill-pair");
    r.pair("host", g.n());
    r.pair("trees", ts.len());
    match fill_pair(&g, side_a, side_b, &ts, u, xstar, eps, beta) {
        Ok(pes) => {
            for (i, pe) in pes.iter().enumerate() {
                pe.validate()?;
                r.pair(format!("tree {i}"), format!("order={} mapped={}", ts[i].n(), pe.map.len()));
                r.embedding(pe);
            }
            r.pair("result", "embedded");
            Ok((r, 0))
        }
        Err(e) if is_violation(&e) => {
            let code = violation_lines(&mut r, &e);
            Ok((r, code))
        }
        Err(e) => Err(e),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_embed_avoiding(
    graph: &Path,
    spots: &Path,
    trees: &[PathBuf],
    eset: &VertexSet,
    u: Option<&VertexSet>,
    ustar: &VertexSet,
    lambda: Rat,
    eps: Rat,
    gamma: Rat,
    k: usize,
) -> Result<(Report, u8)> {
    let g = load_graph(graph)?;
    let family = parse_spots(&read_text(spots)?, &g)?;
    let ts = load_trees(trees)?;
    let empty = VertexSet::default();
    let u = u.unwrap_or(&empty);
    let mut r = Report::new("embed-avoiding");
    r.pair("host", g.n());
    r.pair("spots", family.len());
    r.pair("trees", ts.len());
    match embed_avoiding_forest(&g, &family, eset, &ts, u, ustar, lambda, eps, gamma, k) {
        Ok(pes) => {
            for (i, pe) in pes.iter().enumerate() {
                pe.validate()?;
                r.pair(format!("tree {i}"), format!("order={} mapped={}", ts[i].n(), pe.map.len()));
                r.embedding(pe);
            }
            r.pair("result", "embedded");
            Ok((r, 0))
        }
        Err(e) if is_violation(&e) => {
            let code = violation_lines(&mut r, &e);
            Ok((r, code))
        }
        Err(e) => Err(e),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_embed_expander(
    graph: &Path,
    tree: &Path,
    v2: &VertexSet,
    v3: &VertexSet,
    u: Option<&VertexSet>,
    ustar: &VertexSet,
    watch: &[VertexSet],
    delta: Rat,
    gamma: Rat,
    k: usize,
    seed: u64,
    retries: usize,
    certified: bool,
) -> Result<(Report, u8)> {
    let g = load_graph(graph)?;
    let t = load_tree(tree)?;
    let empty = VertexSet::default();
    let u = u.unwrap_or(&empty);
    let cert = if certified { DensityCertificate::Certified } else { DensityCertificate::Trusted };
    let mut r = Report::new("embed-expander");
    r.pair("host", g.n());
    r.pair("tree", t.n());
    r.pair("watched", watch.len());
    match embed_shrub_expander(&g, v2, v3, u, ustar, watch, &t, delta, gamma, k, seed, retries, cert)
    {
        Ok(res) => {
            for pe in &res.embeddings {
                pe.validate()?;
            }
            r.pair("result", "embedded");
            r.pair("slack", res.slack);
            r.pair("attempts", res.attempts);
            r.pair("reserved", fmt_set(&res.reserved));
            for pe in &res.embeddings {
                r.embedding(pe);
            }
            Ok((r, 0))
        }
        Err(e) if is_violation(&e) => {
            let code = violation_lines(&mut r, &e);
            Ok((r, code))
        }
        Err(e) => Err(e),
    }
}

/// Largest duplication plan the CLI will materialize.
const PLAN_CAP: usize = 1 << 26;

fn run_duplicate_sim(
    ell: usize,
    flips: Option<usize>,
    both_one: usize,
    both_zero: usize,
    a: Option<Rat>,
    trials: Option<usize>,
    seed: u64,
) -> Result<(Report, u8)> {
    let flips = flips.unwrap_or(ell);
    let steps = both_zero
        .checked_add(flips)
        .and_then(|s| s.checked_add(both_one))
        .filter(|&s| s <= PLAN_CAP && ell <= PLAN_CAP)
        .ok_or_else(|| Error::input(format!("plan exceeds {PLAN_CAP} steps")))?;
    let mut plan = Vec::with_capacity(steps);
    plan.extend(std::iter::repeat(StepMode::BothZero).take(both_zero));
    plan.extend(std::iter::repeat(StepMode::CoinFlip).take(flips));
    plan.extend(std::iter::repeat(StepMode::BothOne).take(both_one));
    let trace = duplicate::simulate(&plan, ell, seed)?;
    trace.validate()?;
    let mut r = Report::new("duplicate-sim");
    r.pair("ell", ell);
    r.pair("plan", format!("zeros={both_zero} flips={flips} ones={both_one}"));
    r.pair("budget", trace.budget);
    r.pair("total", trace.total());
    r.pair("sum_x", trace.sum_x());
    r.pair("sum_y", trace.sum_y());
    r.pair("difference", trace.difference());
    if let Some(a) = a {
        r.pair("threshold", format_rat(a));
        r.pair("tail_bound", format!("{:.9e}", duplicate::tail_bound(a, ell)?));
        if let Some(trials) = trials {
            let emp = duplicate::empirical_tail(&plan, ell, a, trials, seed)?;
            r.pair("trials", trials);
            r.pair("empirical", format_rat(emp));
        }
    } else if trials.is_some() {
        return Err(Error::input("--trials requires --a"));
    }
    Ok((r, 0))
}

fn run_check_regularity(
    graph: &Path,
    side_a: &VertexSet,
    side_b: &VertexSet,
    eps: Rat,
    samples: Option<usize>,
    super_gamma: Option<Rat>,
    seed: u64,
) -> Result<(Report, u8)> {
    let g = load_graph(graph)?;
    let mode = match samples {
        Some(samples) => RegularityMode::Sampled { samples, seed },
        None => RegularityMode::Exact,
    };
    let verdict = check_regularity(&g, side_a, side_b, eps, mode, super_gamma)?;
    let mut r = Report::new("check-regularity");
    r.pair("host", g.n());
    r.pair("eps", format_rat(eps));
    r.pair("density", format_rat(verdict.density));
    let status = match verdict.status {
        RegularityStatus::RegularExact => "regular-exact",
        RegularityStatus::RegularSampled => "regular-sampled",
        RegularityStatus::IrregularWitness => "irregular-witness",
        RegularityStatus::Unknown => "unknown",
    };
    r.pair("status", status);
    let mut code = 0;
    if let Some((wu, ww)) = &verdict.witness {
        r.pair("witness_a", fmt_set(wu));
        r.pair("witness_b", fmt_set(ww));
        code = 1;
    }
    if let Some(sv) = &verdict.super_violation {
        r.pair(
            "super_violation",
            format!(
                "vertex={} cross_degree={} required={}",
                sv.vertex,
                sv.cross_degree,
                format_rat(sv.required)
            ),
        );
        code = 1;
    }
    r.pair("result", if code == 0 { "pass" } else { "violation" });
    Ok((r, code))
}

#[allow(clippy::too_many_arguments)]
fn run_check_avoiding(
    graph: &Path,
    spots: &Path,
    eset: &VertexSet,
    lambda: Rat,
    eps: Rat,
    gamma: Rat,
    k: usize,
    trials: Option<usize>,
    seed: u64,
) -> Result<(Report, u8)> {
    let g = load_graph(graph)?;
    let family = parse_spots(&read_text(spots)?, &g)?;
    let mode = match trials {
        Some(trials) => AvoidingMode::Adversarial { trials, seed },
        None => AvoidingMode::Exact,
    };
    let verdict = check_avoiding(&g, &family, eset, lambda, eps, gamma, k, mode)?;
    let mut r = Report::new("check-avoiding");
    r.pair("host", g.n());
    r.pair("spots", family.len());
    r.pair("e_size", eset.len());
    let code = match verdict {
        AvoidingVerdict::AvoidingExact => {
            r.pair("status", "avoiding-exact");
            0
        }
        AvoidingVerdict::AvoidingHeuristic => {
            r.pair("status", "avoiding-heuristic");
            0
        }
        AvoidingVerdict::ViolationWitness { u, bad } => {
            r.pair("status", "violation-witness");
            r.pair("witness_u", fmt_set(&u));
            r.pair("unprotected", fmt_set(&bad));
            1
        }
    };
    r.pair("result", if code == 0 { "pass" } else { "violation" });
    Ok((r, code))
}

fn run_find_spot(
    graph: &Path,
    m: usize,
    gamma: Rat,
    exact_n: usize,
    trials: usize,
    seed: u64,
) -> Result<(Report, u8)> {
    let g = load_graph(graph)?;
    let budget = SearchBudget { exact_n_bound: exact_n, bipartition_trials: trials, seed };
    let verdict = check_nowhere_dense(&g, m, gamma, &budget)?;
    let mut r = Report::new("find-spot");
    r.pair("host", g.n());
    r.pair("m", m);
    r.pair("gamma", format_rat(gamma));
    let code = match &verdict {
        NowhereDenseVerdict::NowhereDenseExact => {
            r.pair("verdict", "nowhere-dense-exact");
            0
        }
        NowhereDenseVerdict::NoSpotFoundHeuristic => {
            r.pair("verdict", "no-spot-found");
            0
        }
        NowhereDenseVerdict::SpotWitness(spot) => {
            r.pair("verdict", "spot-witness");
            spot_block(&mut r, "spot ", spot);
            1
        }
    };
    r.pair("result", if code == 0 { "pass" } else { "violation" });
    Ok((r, code))
}

fn run_verify_conjecture(n_max: usize, dump_dir: Option<&Path>) -> Result<(Report, u8)> {
    let report = verify_conjecture_range(n_max)?;
    let mut r = Report::new("verify-conjecture");
    r.pair("n_max", report.n_max);
    r.pair("graphs_swept", report.graphs_swept);
    r.pair("instances_checked", report.instances_checked);
    r.pair("hypothesis_skipped", report.hypothesis_skipped);
    r.pair("counterexamples", report.counterexamples.len());
    for (i, ce) in report.counterexamples.iter().enumerate() {
        let edges = ce
            .graph
            .edges()
            .map(|(u, v)| format!("{u}-{v}"))
            .collect::<Vec<_>>()
            .join(" ");
        r.pair(
            format!("counterexample {i}"),
            format!(
                "n={} k={} edges={}",
                ce.graph.n(),
                ce.k,
                if edges.is_empty() { "-".into() } else { edges }
            ),
        );
    }
    if let Some(dir) = dump_dir {
        if !report.counterexamples.is_empty() {
            std::fs::create_dir_all(dir)
                .map_err(|e| Error::input(format!("cannot create {}: {e}", dir.display())))?;
            for (i, ce) in report.counterexamples.iter().enumerate() {
                let gp = dir.join(format!("counterexample_{i}_graph.txt"));
                let tp = dir.join(format!("counterexample_{i}_tree.txt"));
                write_text(&gp, &ce.graph.serialize())?;
                write_text(&tp, &ce.tree.serialize()?)?;
            }
            r.pair("dumped", report.counterexamples.len());
        }
    }
    let code = u8::from(!report.counterexamples.is_empty());
    r.pair("result", if code == 0 { "pass" } else { "violation" });
    Ok((r, code))
}

fn run_validate_embedding(graph: &Path, tree: &Path, embedding: &Path) -> Result<(Report, u8)> {
    let g = load_graph(graph)?;
    let t = load_tree(tree)?;
    let (map, constraints) = embed::parse_embedding_text(&read_text(embedding)?)?;
    let mut pe = PartialEmbedding::new(&t, &g);
    pe.map = map;
    pe.constraints = constraints;
    let mut r = Report::new("validate-embedding");
    r.pair("host", g.n());
    r.pair("tree", t.n());
    r.pair("mapped", pe.map.len());
    r.pair("constraints", pe.constraints.len());
    r.pair("total", if pe.is_total() { "yes" } else { "no" });
    match pe.validate() {
        Ok(()) => {
            r.pair("result", "valid");
            Ok((r, 0))
        }
        Err(e) if is_violation(&e) => {
            let code = violation_lines(&mut r, &e);
            Ok((r, code))
        }
        Err(e) => Err(e),
    }
}

fn run_gen_tree(n: usize, seed: u64) -> Result<(Report, u8)> {
    check_gen_size(n)?;
    let t = gen_random_tree(n, seed)?;
    Ok((Report::artifact(&t.serialize()?), 0))
}

fn run_gen_lks(n: usize, k: usize, alpha: Rat, seed: u64) -> Result<(Report, u8)> {
    check_gen_size(n)?;
    let g = gen_hypothesis_graph(n, k, alpha, seed)?;
    Ok((Report::artifact(&g.serialize()), 0))
}

/// Generated artifacts must stay parseable, so the parser cap binds here too.
fn check_gen_size(n: usize) -> Result<()> {
    if n > treebed::tree::PARSE_VERTEX_CAP {
        return Err(Error::input(format!(
            "n exceeds the parser cap {}",
            treebed::tree::PARSE_VERTEX_CAP
        )));
    }
    Ok(())
}

// ───────────────────────── dispatch ─────────────────────────

fn run(cli: &Cli) -> Result<(Report, u8)> {
    match &cli.cmd {
        Cmd::Partition { tree, ell } => run_partition(tree, *ell),
        Cmd::Skeleton { tree, ell } => run_skeleton(tree, *ell),
        Cmd::EmbedGreedy { graph, tree, k, side_a, side_b } => {
            run_embed_greedy(graph, tree, *k, side_a, side_b)
        }
        Cmd::EmbedRegular { graph, tree, side_a, side_b, x, y, xstar, eps, beta } => {
            run_embed_regular(
                graph,
                tree,
                side_a,
                side_b,
                x.as_ref(),
                y.as_ref(),
                xstar,
                *eps,
                *beta,
            )
        }
        Cmd::FillPair { graph, tree, side_a, side_b, xstar, u, eps, beta } => {
            run_fill_pair(graph, tree, side_a, side_b, xstar, u.as_ref(), *eps, *beta)
        }
        Cmd::EmbedAvoiding { graph, spots, tree, eset, u, ustar, lambda, eps, gamma, k } => {
            run_embed_avoiding(
                graph,
                spots,
                tree,
                eset,
                u.as_ref(),
                ustar,
                *lambda,
                *eps,
                *gamma,
                *k,
            )
        }
        Cmd::EmbedExpander {
            graph,
            tree,
            v2,
            v3,
            u,
            ustar,
            watch,
            delta,
            gamma,
            k,
            retries,
            certified,
        } => run_embed_expander(
            graph,
            tree,
            v2,
            v3,
            u.as_ref(),
            ustar,
            watch,
            *delta,
            *gamma,
            *k,
            cli.seed,
            *retries,
            *certified,
        ),
        Cmd::DuplicateSim { ell, flips, both_one, both_zero, a, trials } => {
            run_duplicate_sim(*ell, *flips, *both_one, *both_zero, *a, *trials, cli.seed)
        }
        Cmd::CheckRegularity { graph, side_a, side_b, eps, samples, super_gamma } => {
            run_check_regularity(graph, side_a, side_b, *eps, *samples, *super_gamma, cli.seed)
        }
        Cmd::CheckAvoiding { graph, spots, eset, lambda, eps, gamma, k, trials } => {
            run_check_avoiding(
                graph, spots, eset, *lambda, *eps, *gamma, *k, *trials, cli.seed,
            )
        }
        Cmd::FindSpot { graph, m, gamma, exact_n, trials } => {
            run_find_spot(graph, *m, *gamma, *exact_n, *trials, cli.seed)
        }
        Cmd::VerifyConjecture { n_max, dump_dir } => {
            run_verify_conjecture(*n_max, dump_dir.as_deref())
        }
        Cmd::ValidateEmbedding { graph, tree, embedding } => {
            run_validate_embedding(graph, tree, embedding)
        }
        Cmd::GenTree { n } => run_gen_tree(*n, cli.seed),
        Cmd::GenLks { n, k, alpha } => run_gen_lks(*n, *k, *alpha, cli.seed),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)
        .map_err(|e| Error::input(format!("cannot write {}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // Help and version exit 0 here; genuine flag errors exit 2.
        Err(e) => e.exit(),
    };
    match run(&cli) {
        Ok((report, code)) => {
            let text = report.render(cli.machine);
            match &cli.out {
                Some(path) => {
                    if let Err(e) = write_text(path, &text) {
                        eprintln!("error: {e}");
                        return ExitCode::from(2);
                    }
                }
                None => print!("{text}"),
            }
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if is_violation(&e) { 1 } else { 2 })
        }
    }
}
