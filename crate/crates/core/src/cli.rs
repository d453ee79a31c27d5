//! Command-line surface. [`run`] is the testable entry point; `main` only
//! prints what it returns.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use log::warn;

use crate::ci::{closure, local_markov, CiStatement, Universe, VarKind, DEFAULT_CLOSURE_BOUND};
use crate::data::{Dataset, RegimeSource};
use crate::dynamic::{g_consequence, g_consequence_recursive, infer_stages, strategy_oracle, Stage};
use crate::error::{Error, Result};
use crate::estimate::{self, EmptyCellPolicy};
use crate::graph::{ancestral_subgraph, immoralities, markov_equivalent, moralize, separation, skeleton, var_set, VarSet, VariableId};
use crate::identify::{evaluate, identify, Query, DEFAULT_DEPTH};
use crate::io::{parse_graph, parse_model, parse_strategy, read_dataset, write_dataset, write_graph, GraphFile};
use crate::regimes::{check_iv_assumptions, check_no_confounding, check_sequential_ignorability, check_sufficient_covariate, strategy_diagram, InfluenceDiagram, RegimeAssignment};

#[derive(Debug, Parser)]
#[command(name = "dtcausal", version, about = "Causal graphs, regime indicators, identification and estimation")]
pub struct Cli {
    /// Output style.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Records,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test `A ⫫ B | C` by the moralisation criterion.
    Dsep {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        a: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        b: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        given: Vec<String>,
    },
    /// Moral graph, optionally of the ancestral subgraph of some nodes.
    Moralize {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_delimiter = ',')]
        ancestral_of: Vec<String>,
    },
    /// Markov equivalence of two graphs.
    Equiv {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        other: PathBuf,
    },
    /// Attach regime nodes to the given targets (default: every stochastic node).
    Augment {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_delimiter = ',')]
        targets: Vec<String>,
    },
    /// Search for an observational expression of a query such as `P(Y | do(X))`.
    Identify {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        query: String,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: usize,
        /// Evaluate the result on this model and compare with the truth.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Estimate a causal quantity from regime-tagged data.
    Estimate {
        #[arg(value_enum)]
        kind: EstimateKind,
        #[arg(long)]
        data: PathBuf,
        /// Diagram whose conditions are checked before estimating.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        treatment: String,
        #[arg(long)]
        outcome: Option<String>,
        #[arg(long, value_delimiter = ',')]
        adjust: Vec<String>,
        #[arg(long)]
        instrument: Option<String>,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        #[arg(long, default_value_t = estimate::WEAK_INSTRUMENT_FACTOR)]
        weak_factor: f64,
        /// Skip adjustment strata with an empty arm instead of failing.
        #[arg(long)]
        drop_empty: bool,
        /// Estimate even when a graphical condition fails.
        #[arg(long)]
        force: bool,
    },
    /// Sample a model under a regime; writes delimited data.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "idle")]
        regime: String,
    },
    /// Consequence of a dynamic strategy by g-computation.
    Gformula {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        strategy: PathBuf,
        #[arg(long)]
        outcome: String,
        /// Stage as `L1,L2:T` (covariates, then treatment); repeat in order.
        #[arg(long)]
        stage: Vec<String>,
        /// Use these observations instead of the model's exact joint.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Close a set of independence statements under the axioms.
    Axioms {
        #[arg(long)]
        premise: Vec<String>,
        /// Add the local Markov statements of this graph.
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Report whether this statement follows, with a derivation.
        #[arg(long)]
        query: Option<String>,
        /// Variables that are regime indicators.
        #[arg(long, value_delimiter = ',')]
        regime: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_CLOSURE_BOUND)]
        bound: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimateKind {
    Ace,
    Ett,
    Iv,
    Propensity,
    Sce,
    Twoarm,
}

/// Exit status and rendered streams of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Key-value results; free text is printed as is in text mode.
#[derive(Debug, Default)]
struct Report {
    fields: Vec<(String, String)>,
    body: Option<String>,
}

impl Report {
    fn push(&mut self, key: &str, value: impl ToString) {
        self.fields.push((key.to_string(), value.to_string()));
    }

    fn render(&self, format: Format) -> String {
        if let (Some(body), Format::Text) = (&self.body, format) {
            return body.clone();
        }
        let mut out = String::new();
        let width = self.fields.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in &self.fields {
            match format {
                Format::Text => out.push_str(&format!("{k:<width$}  {v}\n")),
                Format::Records => out.push_str(&format!("{k}={v}\n")),
            }
        }
        out
    }
}

/// Parses `args` (including the program name) and executes the command.
/// Exit codes: 0 success, 1 a failing assumption or non-identification,
/// 2 malformed input.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    match execute(&cli.command) {
        Ok(report) => Outcome {
            code: 0,
            stdout: report.render(cli.format),
            stderr: String::new(),
        },
        Err(e) => Outcome {
            code: if e.is_input_error() { 2 } else { 1 },
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn names(list: &[String]) -> Result<VarSet> {
    var_set(list.iter().map(String::as_str))
}

fn id(name: &str) -> Result<VariableId> {
    VariableId::new(name)
}

fn list(set: &VarSet) -> String {
    if set.is_empty() {
        "{}".into()
    } else {
        set.iter().map(VariableId::as_str).collect::<Vec<_>>().join(",")
    }
}

fn execute(cmd: &Command) -> Result<Report> {
    match cmd {
        Command::Dsep { graph, a, b, given } => dsep(graph, a, b, given),
        Command::Moralize { graph, ancestral_of } => {
            let g = parse_graph(&read(graph)?)?;
            let mut dag = g.diagram.dag().clone();
            if !ancestral_of.is_empty() {
                dag = ancestral_subgraph(&dag, &names(ancestral_of)?)?;
            }
            let moral = moralize(&dag);
            let mut r = Report::default();
            r.push("nodes", list(&dag.node_set()));
            for (x, y) in moral.edges() {
                r.push("edge", format!("{x} - {y}"));
            }
            Ok(r)
        }
        Command::Equiv { graph, other } => {
            let g1 = parse_graph(&read(graph)?)?.diagram.dag().clone();
            let g2 = parse_graph(&read(other)?)?.diagram.dag().clone();
            let equivalent = markov_equivalent(&g1, &g2)?;
            let mut r = Report::default();
            r.push("equivalent", equivalent);
            r.push("same_skeleton", skeleton(&g1) == skeleton(&g2));
            for (label, g) in [("immoralities_first", &g1), ("immoralities_second", &g2)] {
                let items: Vec<String> = immoralities(g).iter().map(|(a, b, c)| format!("{a}->{c}<-{b}")).collect();
                r.push(label, if items.is_empty() { "{}".into() } else { items.join(";") });
            }
            Ok(r)
        }
        Command::Augment { graph, targets } => {
            let g = parse_graph(&read(graph)?)?;
            let targets = if targets.is_empty() {
                g.diagram.stochastic_nodes().into_iter().filter(|v| g.diagram.regime_for(v.as_str()).is_none()).collect()
            } else {
                names(targets)?
            };
            let out = GraphFile {
                name: g.name.clone(),
                diagram: g.diagram.augmented(&targets)?,
            };
            let text = write_graph(&out);
            let mut r = Report::default();
            for line in text.lines() {
                let (k, v) = line.split_once(' ').unwrap_or((line, ""));
                r.push(k, v);
            }
            r.body = Some(text);
            Ok(r)
        }
        Command::Identify { graph, query, depth, model } => identify_cmd(graph, query, *depth, model.as_deref()),
        Command::Estimate {
            kind,
            data,
            graph,
            treatment,
            outcome,
            adjust,
            instrument,
            level,
            weak_factor,
            drop_empty,
            force,
        } => {
            let opts = EstimateOptions {
                kind: *kind,
                t: id(treatment)?,
                y: outcome.as_deref().map(id).transpose()?,
                adjust: names(adjust)?,
                instrument: instrument.as_deref().map(id).transpose()?,
                level: *level,
                weak_factor: *weak_factor,
                policy: if *drop_empty { EmptyCellPolicy::Drop } else { EmptyCellPolicy::Error },
                force: *force,
            };
            let d = read_dataset(&read(data)?)?;
            let diagram = graph.as_deref().map(|g| Ok::<_, Error>(parse_graph(&read(g)?)?.diagram)).transpose()?;
            estimate_cmd(&d, diagram.as_ref(), &opts)
        }
        Command::Simulate { model, n, seed, regime } => {
            let m = parse_model(&read(model)?)?;
            let regime = RegimeAssignment::parse(regime)?;
            for v in regime.intervened() {
                m.dag().parents(v.as_str())?;
            }
            let d = m.simulate(&regime, *n, *seed)?;
            let text = write_dataset(&d)?;
            Ok(Report {
                fields: vec![("data".into(), text.clone())],
                body: Some(text),
            })
        }
        Command::Gformula { model, strategy, outcome, stage, data, force } => {
            let m = parse_model(&read(model)?)?;
            let s = parse_strategy(&read(strategy)?)?;
            let y = id(outcome)?;
            let stages = if stage.is_empty() {
                let mut treatments: Vec<VariableId> = m.dag().topological_order().into_iter().filter(|v| s.rules.contains_key(v)).collect();
                if treatments.len() != s.rules.len() {
                    treatments = s.rules.keys().cloned().collect();
                }
                infer_stages(m.dag(), &treatments, &y, m.latent())?
            } else {
                stage.iter().map(|st| parse_stage(st)).collect::<Result<_>>()?
            };
            let diagram = strategy_diagram(m.dag(), "SIGMA", &stages.iter().map(|st| st.treatment.clone()).collect::<Vec<_>>())?;
            let covariates: Vec<VarSet> = stages.iter().map(|st| st.covariates.iter().cloned().collect()).collect();
            let treatments: Vec<VariableId> = stages.iter().map(|st| st.treatment.clone()).collect();
            let ignorable = check_sequential_ignorability(&diagram, &covariates, &treatments, &y)?;
            gate(ignorable, "sequential ignorability", *force)?;
            let observations = data.as_deref().map(|p| read(p).and_then(|t| read_dataset(&t))).transpose()?;
            let src: &dyn RegimeSource = match &observations {
                Some(d) => d,
                None => &m,
            };
            let c = g_consequence(src, &stages, &s, &y)?;
            let recursive = g_consequence_recursive(src, &stages, &s, &y)?;
            let mut r = Report::default();
            for st in &stages {
                r.push("stage", format!("{} : {}", list(&st.covariates.iter().cloned().collect()), st.treatment));
            }
            r.push("ignorable", ignorable);
            r.push("consequence", c.value);
            r.push("recursive", recursive);
            if observations.is_none() {
                r.push("oracle", strategy_oracle(&m, &s, &y)?);
            }
            for (labels, w) in &c.weights {
                let h: Vec<String> = c.variables.iter().zip(labels).map(|(v, l)| format!("{v}={l}")).collect();
                r.push("history", format!("{} weight={w}", h.join(" ")));
            }
            Ok(r)
        }
        Command::Axioms { premise, graph, query, regime, bound } => axioms_cmd(premise, graph.as_deref(), query.as_deref(), regime, *bound),
    }
}

fn parse_stage(text: &str) -> Result<Stage> {
    let (covs, t) = text
        .split_once(':')
        .ok_or_else(|| Error::InvalidArgument(format!("stage `{text}` should look like `L1,L2:T`")))?;
    let covariates = covs.split(',').filter(|s| !s.is_empty()).map(|s| id(s.trim())).collect::<Result<_>>()?;
    Ok(Stage::new(covariates, id(t.trim())?))
}

fn gate(holds: bool, what: &str, force: bool) -> Result<()> {
    if holds {
        return Ok(());
    }
    if force {
        warn!("{what} fails in the diagram; continuing because of --force");
        return Ok(());
    }
    Err(Error::Precondition(format!("{what} fails in the diagram (use --force to estimate anyway)")))
}

fn dsep(graph: &Path, a: &[String], b: &[String], given: &[String]) -> Result<Report> {
    let g = parse_graph(&read(graph)?)?;
    let (a, b, c) = (names(a)?, names(b)?, names(given)?);
    let sep = separation(g.diagram.dag(), &a, &b, &c)?;
    let mut r = Report::default();
    r.push("result", if sep.separated { "SEPARATED" } else { "CONNECTED" });
    r.push("statement", CiStatement::new(a, b, c));
    r.push("ancestral", list(&sep.ancestral));
    for (x, y) in sep.moral.edges() {
        r.push("moral_edge", format!("{x} - {y}"));
    }
    if let Some(path) = &sep.witness {
        r.push("path", path.iter().map(VariableId::as_str).collect::<Vec<_>>().join(" - "));
    }
    Ok(r)
}

fn identify_cmd(graph: &Path, query: &str, depth: usize, model: Option<&Path>) -> Result<Report> {
    let g = parse_graph(&read(graph)?)?;
    let q = Query::parse(query)?;
    let found = identify(&g.diagram, &q.term, depth)?;
    let mut r = Report::default();
    r.push("query", &q);
    r.push("estimand", &found.estimand);
    if !q.values.is_empty() {
        r.push("estimand_at", found.estimand.render(&q.values));
    }
    for (i, step) in found.steps.iter().enumerate() {
        r.push("step", format!("{} {}", i + 1, step.describe()));
    }
    r.push("explored", found.explored);
    if let Some(path) = model {
        let m = parse_model(&read(path)?)?;
        let observed = m.observed_joint(&RegimeAssignment::idle())?;
        r.push("value", evaluate(&found.estimand, &observed, &q.values)?);
        r.push("truth", evaluate(&q.estimand(), &m, &q.values)?);
    }
    Ok(r)
}

struct EstimateOptions {
    kind: EstimateKind,
    t: VariableId,
    y: Option<VariableId>,
    adjust: VarSet,
    instrument: Option<VariableId>,
    level: f64,
    weak_factor: f64,
    policy: EmptyCellPolicy,
    force: bool,
}

/// The diagram with a regime node on `t` added if it has none.
fn with_regime(g: &InfluenceDiagram, t: &VariableId) -> Result<InfluenceDiagram> {
    if g.regime_for(t.as_str()).is_some() {
        Ok(g.clone())
    } else {
        g.augmented(&[t.clone()].into())
    }
}

fn estimate_cmd(d: &Dataset, graph: Option<&InfluenceDiagram>, o: &EstimateOptions) -> Result<Report> {
    let t = &o.t;
    let outcome = || o.y.clone().ok_or_else(|| Error::InvalidArgument("--outcome is required".into()));
    let need_adjust = || {
        if o.adjust.is_empty() {
            Err(Error::InvalidArgument("--adjust is required".into()))
        } else {
            Ok(())
        }
    };
    let mut r = Report::default();
    match o.kind {
        EstimateKind::Ace => {
            let y = outcome()?;
            if let Some(g) = graph {
                let g = with_regime(g, t)?;
                let ok = if o.adjust.is_empty() {
                    check_no_confounding(&g, t, &y)?
                } else {
                    check_sufficient_covariate(&g, t, &y, &o.adjust)?
                };
                gate(ok, if o.adjust.is_empty() { "no confounding" } else { "sufficient covariate" }, o.force)?;
            }
            let ace = estimate::ace_backdoor(d, t, &y, &o.adjust, o.policy)?;
            r.push("estimand", "ACE");
            r.push("adjust", list(&o.adjust));
            r.push("value", ace);
        }
        EstimateKind::Sce => {
            let y = outcome()?;
            need_adjust()?;
            let effects = estimate::sce(d, t, &y, &o.adjust)?;
            r.push("estimand", "SCE");
            for (labels, w, e) in &effects.strata {
                let s: Vec<String> = effects.covariates.iter().zip(labels).map(|(v, l)| format!("{v}={l}")).collect();
                let e = e.map_or("undefined".to_string(), |e| e.to_string());
                r.push("stratum", format!("{} weight={w} effect={e}", s.join(" ")));
            }
            r.push("average", effects.average(o.policy)?);
        }
        EstimateKind::Ett => {
            let y = outcome()?;
            r.push("estimand", "ETT");
            r.push("value", estimate::ett(d, t, &y)?);
        }
        EstimateKind::Propensity => {
            need_adjust()?;
            let p = estimate::propensity(d, t, &o.adjust)?;
            r.push("estimand", "propensity");
            r.push("pi", p.pi);
            for s in &p.strata {
                let u: Vec<String> = p.covariates.iter().zip(&s.labels).map(|(v, l)| format!("{v}={l}")).collect();
                r.push("stratum", format!("{} lambda={} score={}", u.join(" "), s.likelihood_ratio, s.score));
            }
            r.push("balanced", p.balanced);
            if let Some(y) = &o.y {
                let scored = p.score_source(d, id("PI")?)?;
                r.push("ace_by_score", estimate::ace_backdoor(&scored, t, y, &[id("PI")?].into(), o.policy)?);
            }
        }
        EstimateKind::Iv => {
            let y = outcome()?;
            let z = o
                .instrument
                .clone()
                .ok_or_else(|| Error::InvalidArgument("--instrument is required".into()))?;
            if let Some(g) = graph {
                let g = with_regime(g, t)?;
                let u = if o.adjust.is_empty() { g.latent().clone() } else { o.adjust.clone() };
                let ok = check_iv_assumptions(&g, &z, t, &u, &y)?;
                gate(ok, "the instrument conditions", o.force)?;
            }
            let est = estimate::iv_beta(d, &z, t, &y, o.weak_factor)?;
            r.push("estimand", "IV");
            r.push("beta", est.beta);
            r.push("cov_yz", est.cov_yz);
            r.push("cov_xz", est.cov_xz);
            if let Some(se) = est.se {
                r.push("se", se);
            }
            r.push("n", est.n);
        }
        EstimateKind::Twoarm => {
            let y = outcome()?;
            let s = estimate::two_arm_contrast(d, t, &y, o.level)?;
            r.push("estimand", "two-arm");
            r.push("n0", s.n0);
            r.push("n1", s.n1);
            r.push("mean0", s.mean0);
            r.push("mean1", s.mean1);
            r.push("delta", s.delta);
            r.push("pooled_variance", s.pooled_variance);
            r.push("se", s.se);
            r.push("df", s.df);
            r.push("lower", s.lower);
            r.push("upper", s.upper);
        }
    }
    Ok(r)
}

fn axioms_cmd(premise: &[String], graph: Option<&Path>, query: Option<&str>, regime: &[String], bound: usize) -> Result<Report> {
    let mut premises: Vec<CiStatement> = premise.iter().map(|p| CiStatement::parse(p)).collect::<Result<_>>()?;
    let mut universe = Universe::new();
    if let Some(path) = graph {
        let g = parse_graph(&read(path)?)?;
        premises.extend(local_markov(g.diagram.dag())?);
        for v in g.diagram.dag().nodes() {
            let kind = if g.diagram.is_regime(v.as_str()) { VarKind::Regime } else { VarKind::Stochastic };
            universe.declare(v.clone(), kind);
        }
    }
    let query = query.map(CiStatement::parse).transpose()?;
    let regimes = names(regime)?;
    for s in premises.iter().chain(&query) {
        for v in s.variables() {
            let kind = if regimes.contains(v) { VarKind::Regime } else { VarKind::Stochastic };
            if universe.kind(v.as_str()).is_err() {
                universe.declare(v.clone(), kind);
            }
        }
    }
    for v in &regimes {
        universe.declare(v.clone(), VarKind::Regime);
    }
    let c = closure(&premises, &universe, bound)?;
    let mut r = Report::default();
    r.push("premises", premises.len());
    r.push("closure_size", c.len());
    r.push("truncated", c.truncated());
    match &query {
        Some(q) => {
            r.push("query", q);
            r.push("entailed", c.entails(q));
            if let Some(d) = c.derivation(q) {
                for line in d.to_string().lines() {
                    r.push("derivation", line);
                }
            }
        }
        None => {
            for s in c.statements() {
                r.push("statement", s);
            }
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bad_arguments_exit_with_two() {
        assert_eq!(run(["dtcausal", "dsep"]).code, 2);
        assert_eq!(run(["dtcausal", "frobnicate"]).code, 2);
        assert_eq!(run(["dtcausal", "--help"]).code, 0);
    }

    #[test]
    fn missing_file_is_an_input_error() {
        let out = run(["dtcausal", "dsep", "--graph", "/nonexistent/graph.txt", "--a", "A", "--b", "B"]);
        assert_eq!(out.code, 2);
        assert!(out.stderr.contains("nonexistent"));
    }

    #[test]
    fn records_render_as_key_value_lines() {
        let mut r = Report::default();
        r.push("alpha", 1);
        r.push("b", "x y");
        assert_eq!(r.render(Format::Records), "alpha=1\nb=x y\n");
        assert_eq!(r.render(Format::Text), "alpha  1\nb      x y\n");
    }
}
