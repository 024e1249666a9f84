//! Corpus handling and the property checks run over it.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::abstract_machine::{concretization_of, sample_concretizations, AbstractRule, Signature};
use crate::graph::{build, BuildConfig, TerminationGraph};
use crate::interpreter::{run_quiet, run_state, step, Counters};
use crate::parser::{parse_source, Mode, QuerySpec};
use crate::program::Program;
use crate::state::{Element, State};
use crate::subst::Subst;
use crate::synth::{ren, synthesize};
use crate::term::{Term, Var};

/// One corpus program with its query and optional golden artifacts.
#[derive(Clone, Debug)]
pub struct Entry {
    pub name: String,
    pub program: Program,
    pub query: QuerySpec,
    /// Expected `to_json` output.
    pub golden_graph: Option<String>,
    /// Expected synthesized program text.
    pub golden_program: Option<String>,
}

#[derive(Clone, Debug, Default)]
pub struct Corpus {
    pub entries: Vec<Entry>,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Parse(#[from] crate::parser::ParseError),
    #[error("{0}: no %query: directive")]
    NoQuery(PathBuf),
    #[error("duplicate corpus entry {0}")]
    Duplicate(String),
}

fn read(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io { path: path.to_owned(), source })
}

fn read_optional(path: &Path) -> Result<Option<String>, CorpusError> {
    if path.exists() {
        read(path).map(Some)
    } else {
        Ok(None)
    }
}

impl Corpus {
    /// Loads `dir/<name>.pl` with goldens from `dir/<name>.golden/`
    /// (`graph.json`, `program.pl`), sorted by name.
    pub fn load(dir: &Path) -> Result<Corpus, CorpusError> {
        let rd = fs::read_dir(dir).map_err(|source| CorpusError::Io { path: dir.to_owned(), source })?;
        let mut paths: Vec<PathBuf> = rd
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "pl"))
            .collect();
        paths.sort();
        let mut corpus = Corpus::default();
        for path in paths {
            let name = path.file_stem().expect("file name").to_string_lossy().into_owned();
            let src = read(&path)?;
            let file = parse_source(&src, &path.to_string_lossy())?;
            let query = file.query.ok_or_else(|| CorpusError::NoQuery(path.clone()))?;
            let golden = dir.join(format!("{name}.golden"));
            corpus.push(Entry {
                name,
                program: file.program,
                query,
                golden_graph: read_optional(&golden.join("graph.json"))?,
                golden_program: read_optional(&golden.join("program.pl"))?,
            })?;
        }
        Ok(corpus)
    }

    pub fn push(&mut self, e: Entry) -> Result<(), CorpusError> {
        if self.entries.iter().any(|x| x.name == e.name) {
            return Err(CorpusError::Duplicate(e.name));
        }
        self.entries.push(e);
        self.entries.sort_by(|a, b| a.name.cmp(&b.name));
        Ok(())
    }
}

/// Seed for all sampling, from `CUT_SEED` (default 0).
pub fn seed_from_env() -> u64 {
    std::env::var("CUT_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(0)
}

#[derive(Clone, Debug)]
pub struct CheckConfig {
    pub build: BuildConfig,
    /// Concretizations per node, and queries per program.
    pub samples: usize,
    pub depth: usize,
    pub seed: u64,
    /// Step budget for the synthesized program.
    pub synth_budget: usize,
    /// Step budget for the original program.
    pub orig_budget: usize,
    /// Step budget when enumerating answers for Split.
    pub answer_budget: usize,
}

impl Default for CheckConfig {
    fn default() -> CheckConfig {
        CheckConfig {
            build: BuildConfig::default(),
            samples: 20,
            depth: 3,
            seed: 0,
            synth_budget: 10_000,
            orig_budget: 100_000,
            answer_budget: 2_000,
        }
    }
}

/// A concrete state that the graph fails to cover.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimulationViolation {
    pub node: String,
    pub concrete: String,
    pub successor: String,
}

impl fmt::Display for SimulationViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "node {}: `{}` steps to `{}`, which no child covers", self.node, self.concrete, self.successor)
    }
}

/// Drops markers at both ends, as abstract normalization does.
fn trim_markers(s: &State) -> State {
    let mut e = s.elements().to_vec();
    while matches!(e.first(), Some(Element::Marker(_))) {
        e.remove(0);
    }
    while matches!(e.last(), Some(Element::Marker(_))) {
        e.pop();
    }
    State::new(e)
}

fn covered(g: &TerminationGraph, node: usize, concrete: &State, sig: &Signature, hint: &Subst) -> bool {
    concretization_of(concrete, &g.node(node).state, sig, Some(hint)).is_some()
}

/// Checks one node against `count` sampled concretizations. Returns the
/// number of samples used and any violations.
pub fn simulate_node(
    g: &TerminationGraph,
    program: &Program,
    node: usize,
    sig: &Signature,
    rng: &mut ChaCha8Rng,
    cfg: &CheckConfig,
) -> (usize, Vec<SimulationViolation>) {
    let n = g.node(node);
    let Some(rule) = g.rule_at(node) else { return (0, Vec::new()) };
    let edges = g.out_edges(node);
    let samples = sample_concretizations(&n.state, sig, rng, cfg.samples, cfg.depth);
    let mut bad = Vec::new();
    for gamma in &samples {
        let concrete = n.state.state.apply(gamma);
        let mut fail = |succ: &State| {
            bad.push(SimulationViolation {
                node: n.label.clone(),
                concrete: concrete.to_string(),
                successor: succ.to_string(),
            })
        };
        match rule {
            AbstractRule::Instance => {
                if !covered(g, edges[0].to, &concrete, sig, gamma) {
                    fail(&concrete);
                }
            }
            AbstractRule::Parallel => {
                let k = g.node(edges[0].to).state.state.len();
                let (l, r) = concrete.elements().split_at(k);
                let (l, r) = (State::new(l.to_vec()), State::new(r.to_vec()));
                if !covered(g, edges[0].to, &l, sig, gamma) || !covered(g, edges[1].to, &r, sig, gamma) {
                    fail(&concrete);
                }
            }
            AbstractRule::Split => {
                let Some(Element::Goal(goal)) = concrete.first() else { continue };
                let t = &goal[..1];
                if !covered(g, edges[0].to, &State::goal(t.to_vec()), sig, gamma) {
                    fail(&State::goal(t.to_vec()));
                    continue;
                }
                let result = run_quiet(t, program, cfg.answer_budget);
                for theta in &result.derivation().answers {
                    let rest = State::goal(theta.apply_all(&goal[1..]));
                    if !covered(g, edges[1].to, &rest, sig, gamma) {
                        fail(&rest);
                    }
                }
            }
            _ => {
                let mut counters = Counters { next_mark: case_mark(g, node), next_var: 1 };
                let Some(s) = step(&concrete, program, &mut counters) else { continue };
                let succ = trim_markers(&s.state);
                if !edges.iter().any(|e| covered(g, e.to, &succ, sig, gamma)) {
                    fail(&succ);
                }
            }
        }
    }
    (samples.len(), bad)
}

/// The mark the abstract Case at `node` introduced, so the concrete step
/// uses the same one.
fn case_mark(g: &TerminationGraph, node: usize) -> u32 {
    if g.rule_at(node) == Some(AbstractRule::Case) {
        if let Some(e) = g.out_edges(node).first() {
            for el in g.node(e.to).state.state.elements() {
                if let Element::Labeled { mark, .. } = el {
                    return *mark;
                }
            }
        }
    }
    1
}

#[derive(Clone, Debug, Default)]
pub struct SimulationReport {
    pub nodes_checked: usize,
    pub min_samples: Option<usize>,
    pub violations: Vec<SimulationViolation>,
}

/// Runs [`simulate_node`] on every expanded node.
pub fn simulation_check(g: &TerminationGraph, program: &Program, cfg: &CheckConfig) -> SimulationReport {
    let sig = Signature::of(program);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = SimulationReport::default();
    for n in &g.nodes {
        if g.rule_at(n.id).is_none() {
            continue;
        }
        let (used, bad) = simulate_node(g, program, n.id, &sig, &mut rng, cfg);
        report.nodes_checked += 1;
        report.min_samples = Some(report.min_samples.map_or(used, |m| m.min(used)));
        report.violations.extend(bad);
    }
    report
}

/// A sampled query for which the synthesized program terminates but the
/// original does not.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SoundnessViolation {
    pub query: String,
}

#[derive(Clone, Debug, Default)]
pub struct SoundnessReport {
    pub sampled: usize,
    /// Queries on which the synthesized program terminated in budget.
    pub premise_held: usize,
    pub violations: Vec<SoundnessViolation>,
}

/// Random query arguments respecting the moding.
pub fn sample_query(q: &QuerySpec, sig: &Signature, rng: &mut ChaCha8Rng, depth: usize) -> Vec<Term> {
    q.moding.iter().map(|m| sig.random_term(rng, depth, *m == Mode::Ground)).collect()
}

/// If the synthesized query terminates, the original must as well.
pub fn soundness_check(
    g: &TerminationGraph,
    program: &Program,
    query: &QuerySpec,
    cfg: &CheckConfig,
) -> SoundnessReport {
    let mut report = SoundnessReport::default();
    let Ok(synth) = synthesize(g) else { return report };
    let sig = Signature::of(program);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let root = ren(g, g.root).expect("root atom");
    let root_vars: Vec<Var> = (1..=query.arity() as u32).map(Var::abstract_var).collect();
    for _ in 0..cfg.samples {
        let args = sample_query(query, &sig, &mut rng, cfg.depth);
        let gamma = Subst::from_pairs(root_vars.iter().cloned().zip(args.iter().cloned()));
        let synth_query = gamma.apply(&root);
        let orig_query = Term::app(&query.predicate, args);
        report.sampled += 1;
        if !run_quiet(&[synth_query], &synth.program, cfg.synth_budget).terminated() {
            continue;
        }
        report.premise_held += 1;
        let (state, counters) = crate::interpreter::initial_state(std::slice::from_ref(&orig_query));
        if !run_state(&state, counters, &[], program, cfg.orig_budget, false).terminated() {
            report.violations.push(SoundnessViolation { query: orig_query.to_string() });
        }
    }
    report
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default)]
pub struct EntryReport {
    pub name: String,
    pub checks: Vec<CheckResult>,
}

impl EntryReport {
    fn record(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(CheckResult { name: name.to_string(), passed, detail: detail.into() });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub entries: Vec<EntryReport>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(EntryReport::passed)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            for c in &e.checks {
                let status = if c.passed { "ok" } else { "FAIL" };
                writeln!(f, "{} {}: {} {}", status, e.name, c.name, c.detail)?;
            }
        }
        let failed = self.entries.iter().filter(|e| !e.passed()).count();
        writeln!(f, "{} entries, {} failed", self.entries.len(), failed)
    }
}

/// Runs every check on one entry.
pub fn check_entry(e: &Entry, cfg: &CheckConfig) -> EntryReport {
    let mut r = EntryReport { name: e.name.clone(), checks: Vec::new() };
    let g = match build(&e.program, &e.query, &cfg.build) {
        Ok(g) => g,
        Err(err) => {
            r.record("build", false, err.to_string());
            return r;
        }
    };
    r.record("build", true, format!("{} nodes", g.nodes.len()));
    let violations = g.validate(&e.program);
    let detail: Vec<String> = violations.iter().map(ToString::to_string).collect();
    r.record("validate", violations.is_empty(), detail.join("; "));
    if let Some(golden) = &e.golden_graph {
        r.record("golden graph", *golden == g.to_json(), "");
    }
    if g.proper {
        match synthesize(&g) {
            Ok(p) => {
                if let Some(golden) = &e.golden_program {
                    r.record("golden program", *golden == p.to_string(), "");
                }
            }
            Err(err) => r.record("synthesize", false, err.to_string()),
        }
    }
    check_graph(&mut r, &g, e, cfg);
    r
}

fn check_graph(r: &mut EntryReport, g: &TerminationGraph, e: &Entry, cfg: &CheckConfig) {
    if cfg.samples == 0 {
        r.record("simulation", true, "vacuous: samples = 0");
        return;
    }
    let sim = simulation_check(g, &e.program, cfg);
    let detail = match sim.violations.first() {
        Some(v) => format!("{} violations, first: {v}", sim.violations.len()),
        None => format!("{} nodes, >= {} samples each", sim.nodes_checked, sim.min_samples.unwrap_or(0)),
    };
    r.record("simulation", sim.violations.is_empty(), detail);
    if g.proper {
        let s = soundness_check(g, &e.program, &e.query, cfg);
        let detail = match s.violations.first() {
            Some(v) => format!("{} violations, first: {}", s.violations.len(), v.query),
            None => format!("{} queries, {} with terminating transformed query", s.sampled, s.premise_held),
        };
        r.record("soundness", s.violations.is_empty(), detail);
    }
}

/// Checks a graph that was built elsewhere (possibly modified).
pub fn check_given_graph(g: &TerminationGraph, e: &Entry, cfg: &CheckConfig) -> EntryReport {
    let mut r = EntryReport { name: e.name.clone(), checks: Vec::new() };
    let violations = g.validate(&e.program);
    r.record("validate", violations.is_empty(), "");
    check_graph(&mut r, g, e, cfg);
    r
}

/// Runs every entry; the report is sorted by entry name.
pub fn run_suite(c: &Corpus, cfg: &CheckConfig) -> Report {
    let mut by_name: BTreeMap<String, EntryReport> = BTreeMap::new();
    for e in &c.entries {
        by_name.insert(e.name.clone(), check_entry(e, cfg));
    }
    Report { entries: by_name.into_values().collect() }
}
