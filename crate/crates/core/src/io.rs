//! Text formats: graphs, discrete models, strategies and regime-tagged data.
//!
//! Graph files are line oriented:
//!
//! ```text
//! dag example
//! node U latent
//! node X
//! node Y
//! node F_X regime target=X
//! edge U -> X
//! edge X -> Y
//! ```
//!
//! `node V fn=A,B` records that `V` is a deterministic function of `A` and
//! `B`. A regime node declared without `target=` takes its targets from its
//! outgoing edges. Model files declare states and conditional tables:
//!
//! ```text
//! var X { states = 0 1 }
//! cpt Y | X { row 0 : 0.9 0.1  row 1 : 0.2 0.8 }
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::data::Dataset;
use crate::dist::{advance, Cpt, StateSpace};
use crate::dynamic::{StageRule, Strategy};
use crate::error::{Error, Result};
use crate::graph::{Dag, VarSet, VariableId};
use crate::regimes::{InfluenceDiagram, RegimeAssignment};
use crate::scm::DiscreteScm;

/// Name of the optional regime column in data files.
pub const REGIME_COLUMN: &str = "__regime__";

/// A parsed graph file.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphFile {
    pub name: Option<String>,
    pub diagram: InfluenceDiagram,
}

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

fn name_at(line: usize, text: &str) -> Result<VariableId> {
    VariableId::new(text).map_err(|_| Error::parse(line, format!("invalid name `{text}`")))
}

pub fn parse_graph(text: &str) -> Result<GraphFile> {
    let mut name = None;
    let mut nodes: Vec<VariableId> = Vec::new();
    let mut declared: BTreeMap<VariableId, usize> = BTreeMap::new();
    let mut edges: Vec<(VariableId, VariableId)> = Vec::new();
    let mut edge_lines: BTreeMap<(VariableId, VariableId), usize> = BTreeMap::new();
    let mut regimes: BTreeMap<VariableId, (usize, Option<VarSet>)> = BTreeMap::new();
    let mut latent = VarSet::new();
    let mut functions = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = strip_comment(raw);
        if content.is_empty() {
            continue;
        }
        let mut words = content.split_whitespace();
        match words.next() {
            Some("dag") => {
                let n = words.next().ok_or_else(|| Error::parse(line, "`dag` needs a name"))?;
                if words.next().is_some() {
                    return Err(Error::parse(line, "unexpected text after the graph name"));
                }
                if name.replace(n.to_string()).is_some() {
                    return Err(Error::parse(line, "duplicate `dag` line"));
                }
            }
            Some("node") => {
                let id = name_at(line, words.next().ok_or_else(|| Error::parse(line, "`node` needs a name"))?)?;
                if let Some(first) = declared.insert(id.clone(), line) {
                    return Err(Error::parse(line, format!("node `{id}` already declared on line {first}")));
                }
                nodes.push(id.clone());
                let mut regime = false;
                let mut targets = None;
                for attr in words {
                    if attr == "regime" {
                        regime = true;
                    } else if attr == "latent" {
                        latent.insert(id.clone());
                    } else if let Some(list) = attr.strip_prefix("target=") {
                        targets = Some(name_list(line, list)?);
                    } else if let Some(list) = attr.strip_prefix("fn=") {
                        functions.insert(id.clone(), name_list(line, list)?);
                    } else {
                        return Err(Error::parse(line, format!("unknown node attribute `{attr}`")));
                    }
                }
                if targets.is_some() && !regime {
                    return Err(Error::parse(line, "`target=` is only allowed on regime nodes"));
                }
                if regime {
                    regimes.insert(id, (line, targets));
                }
            }
            Some("edge") => {
                let parts: Vec<&str> = words.collect();
                let [from, "->", to] = parts.as_slice() else {
                    return Err(Error::parse(line, "expected `edge A -> B`"));
                };
                let (from, to) = (name_at(line, from)?, name_at(line, to)?);
                for end in [&from, &to] {
                    if !declared.contains_key(end) {
                        return Err(Error::parse(line, format!("edge endpoint `{end}` is not a declared node")));
                    }
                }
                if from == to {
                    return Err(Error::parse(line, format!("self-loop on `{from}`")));
                }
                if let Some(first) = edge_lines.insert((from.clone(), to.clone()), line) {
                    return Err(Error::parse(line, format!("edge {from} -> {to} already declared on line {first}")));
                }
                edges.push((from, to));
            }
            Some(other) => return Err(Error::parse(line, format!("unknown directive `{other}`"))),
            None => unreachable!("empty lines are skipped"),
        }
    }
    let mut regime_targets = BTreeMap::new();
    for (r, (line, targets)) in regimes {
        let targets = match targets {
            Some(ts) => {
                for t in &ts {
                    if !declared.contains_key(t) {
                        return Err(Error::parse(line, format!("regime target `{t}` is not a declared node")));
                    }
                    if let Some(l) = edge_lines.get(&(r.clone(), t.clone())) {
                        return Err(Error::parse(*l, format!("edge {r} -> {t} is implied by `target=` on line {line}")));
                    }
                    edges.push((r.clone(), t.clone()));
                }
                ts
            }
            None => edges.iter().filter(|(a, _)| *a == r).map(|(_, b)| b.clone()).collect(),
        };
        regime_targets.insert(r, targets);
    }
    let dag = Dag::new(nodes, edges)?;
    Ok(GraphFile {
        name,
        diagram: InfluenceDiagram::new(dag, regime_targets, latent, functions)?,
    })
}

fn name_list(line: usize, list: &str) -> Result<VarSet> {
    list.split(',')
        .filter(|s| !s.is_empty())
        .map(|s| name_at(line, s))
        .collect()
}

fn join_names<'a>(names: impl IntoIterator<Item = &'a VariableId>) -> String {
    names.into_iter().map(VariableId::as_str).collect::<Vec<_>>().join(",")
}

pub fn write_graph(g: &GraphFile) -> String {
    let id = &g.diagram;
    let mut out = String::new();
    if let Some(n) = &g.name {
        writeln!(out, "dag {n}").unwrap();
    }
    for v in id.dag().nodes() {
        write!(out, "node {v}").unwrap();
        if id.is_regime(v.as_str()) {
            let targets = id.dag().children(v.as_str()).expect("declared");
            write!(out, " regime target={}", join_names(&targets)).unwrap();
        }
        if id.is_latent(v.as_str()) {
            out.push_str(" latent");
        }
        if let Some(args) = id.function_args(v.as_str()) {
            write!(out, " fn={}", join_names(args)).unwrap();
        }
        out.push('\n');
    }
    for (a, b) in id.dag().edges() {
        if !id.is_regime(a.as_str()) {
            writeln!(out, "edge {a} -> {b}").unwrap();
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
struct Token {
    text: String,
    line: usize,
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let mut current = String::new();
        for c in strip_comment(raw).chars() {
            if c.is_whitespace() || "{}|:=".contains(c) {
                if !current.is_empty() {
                    out.push(Token { text: std::mem::take(&mut current), line: i + 1 });
                }
                if !c.is_whitespace() {
                    out.push(Token { text: c.to_string(), line: i + 1 });
                }
            } else {
                current.push(c);
            }
        }
        if !current.is_empty() {
            out.push(Token { text: current, line: i + 1 });
        }
    }
    out
}

struct Tokens {
    items: Vec<Token>,
    pos: usize,
}

impl Tokens {
    fn peek(&self) -> Option<&str> {
        self.items.get(self.pos).map(|t| t.text.as_str())
    }

    fn line(&self) -> usize {
        self.items
            .get(self.pos)
            .or_else(|| self.items.last())
            .map_or(1, |t| t.line)
    }

    fn next(&mut self, what: &str) -> Result<String> {
        let t = self
            .items
            .get(self.pos)
            .ok_or_else(|| Error::parse(self.line(), format!("unexpected end of input, expected {what}")))?;
        self.pos += 1;
        Ok(t.text.clone())
    }

    fn expect(&mut self, text: &str) -> Result<()> {
        let line = self.line();
        let got = self.next(&format!("`{text}`"))?;
        if got != text {
            return Err(Error::parse(line, format!("expected `{text}`, found `{got}`")));
        }
        Ok(())
    }

    fn name(&mut self) -> Result<VariableId> {
        let line = self.line();
        let t = self.next("a name")?;
        name_at(line, &t)
    }
}

// Line, child, parents and rows of one `cpt` block, resolved after all `var` lines.
type TableBlock = (usize, VariableId, Vec<VariableId>, BTreeMap<Vec<String>, Vec<f64>>);

/// Parses a model file. `latent X` lines mark unobserved variables; the
/// graph is read off the tables' parent lists.
pub fn parse_model(text: &str) -> Result<DiscreteScm> {
    let mut tk = Tokens { items: tokenize(text), pos: 0 };
    let mut space = StateSpace::new();
    let mut var_lines: BTreeMap<VariableId, usize> = BTreeMap::new();
    let mut tables: Vec<TableBlock> = Vec::new();
    let mut latent = VarSet::new();
    while let Some(word) = tk.peek().map(str::to_string) {
        let line = tk.line();
        tk.pos += 1;
        match word.as_str() {
            "model" => {
                tk.next("a model name")?;
            }
            "latent" => {
                latent.insert(tk.name()?);
            }
            "var" => {
                let v = tk.name()?;
                tk.expect("{")?;
                tk.expect("states")?;
                tk.expect("=")?;
                let mut labels = Vec::new();
                while tk.peek() != Some("}") {
                    let l = tk.line();
                    let s = tk.next("a state or `}`")?;
                    if "{|:=".contains(s.as_str()) {
                        return Err(Error::parse(l, format!("unexpected `{s}` in state list")));
                    }
                    labels.push(s);
                }
                tk.expect("}")?;
                if let Some(first) = var_lines.insert(v.clone(), line) {
                    return Err(Error::parse(line, format!("variable `{v}` already declared on line {first}")));
                }
                space.insert(v, labels).map_err(|e| Error::parse(line, e.to_string()))?;
            }
            "cpt" => {
                let child = tk.name()?;
                let mut parents = Vec::new();
                if tk.peek() == Some("|") {
                    tk.pos += 1;
                    while tk.peek() != Some("{") {
                        parents.push(tk.name()?);
                    }
                }
                tk.expect("{")?;
                let mut rows = BTreeMap::new();
                while tk.peek() != Some("}") {
                    let row_line = tk.line();
                    tk.expect("row")?;
                    let mut labels = Vec::new();
                    while tk.peek() != Some(":") {
                        labels.push(tk.next("a parent state or `:`")?);
                    }
                    tk.expect(":")?;
                    let mut probs = Vec::new();
                    while let Some(p) = tk.peek() {
                        if p == "row" || p == "}" {
                            break;
                        }
                        let l = tk.line();
                        let p = tk.next("a probability")?;
                        probs.push(p.parse::<f64>().map_err(|_| Error::parse(l, format!("`{p}` is not a number")))?);
                    }
                    if rows.insert(labels.clone(), probs).is_some() {
                        return Err(Error::parse(row_line, format!("duplicate row ({}) for `{child}`", labels.join(" "))));
                    }
                }
                tk.expect("}")?;
                if tables.iter().any(|t| t.1 == child) {
                    return Err(Error::parse(line, format!("duplicate table for `{child}`")));
                }
                tables.push((line, child, parents, rows));
            }
            other => return Err(Error::parse(line, format!("unknown directive `{other}`"))),
        }
    }
    let mut cpts = BTreeMap::new();
    let mut edges = Vec::new();
    for (line, child, parents, rows) in tables {
        let at = |e: Error| match e {
            Error::Parse { .. } => e,
            other => Error::parse(line, other.to_string()),
        };
        for p in &parents {
            edges.push((p.clone(), child.clone()));
        }
        let cpt = build_cpt(&child, &parents, &rows, &space).map_err(at)?;
        cpts.insert(child, cpt);
    }
    for v in var_lines.keys() {
        if !cpts.contains_key(v) {
            return Err(Error::parse(var_lines[v], format!("no table for `{v}`")));
        }
    }
    for v in cpts.keys() {
        if !var_lines.contains_key(v) {
            return Err(Error::UnknownVariable(v.to_string()));
        }
    }
    let dag = Dag::new(var_lines.keys().cloned().collect::<Vec<_>>(), edges)?;
    DiscreteScm::from_cpts(dag, space, cpts)?.with_latent(latent)
}

fn build_cpt(child: &VariableId, parents: &[VariableId], rows: &BTreeMap<Vec<String>, Vec<f64>>, space: &StateSpace) -> Result<Cpt> {
    let labels: Vec<&[String]> = parents.iter().map(|p| space.states(p.as_str())).collect::<Result<_>>()?;
    let cards: Vec<usize> = labels.iter().map(|l| l.len()).collect();
    for key in rows.keys() {
        if key.len() != parents.len() {
            return Err(Error::Table(format!("row ({}) of `{child}` has the wrong number of parent states", key.join(" "))));
        }
        for (k, l) in key.iter().enumerate() {
            space.state_index(parents[k].as_str(), l)?;
        }
    }
    let mut table = Vec::new();
    let mut config = vec![0; parents.len()];
    loop {
        let key: Vec<String> = config.iter().enumerate().map(|(k, &s)| labels[k][s].clone()).collect();
        let row = rows
            .get(&key)
            .ok_or_else(|| Error::Table(format!("missing row ({}) for `{child}`", key.join(" "))))?;
        table.push(row.clone());
        if !advance(&mut config, &cards) {
            break;
        }
    }
    Cpt::new(child.clone(), parents.to_vec(), table, space)
}

/// Writes the model with the conditional tables its mechanisms induce.
pub fn write_model(m: &DiscreteScm) -> Result<String> {
    let mut out = String::new();
    for v in m.dag().nodes() {
        writeln!(out, "var {v} {{ states = {} }}", m.space().states(v.as_str())?.join(" ")).unwrap();
    }
    for v in m.latent() {
        writeln!(out, "latent {v}").unwrap();
    }
    for v in m.dag().nodes() {
        let cpt = m.induced_cpt(v.as_str())?;
        write!(out, "cpt {v}").unwrap();
        if !cpt.parents.is_empty() {
            write!(out, " | {}", cpt.parents.iter().map(VariableId::as_str).collect::<Vec<_>>().join(" ")).unwrap();
        }
        out.push_str(" {\n");
        let labels: Vec<&[String]> = cpt.parents.iter().map(|p| m.space().states(p.as_str())).collect::<Result<_>>()?;
        let cards: Vec<usize> = labels.iter().map(|l| l.len()).collect();
        let mut config = vec![0; cpt.parents.len()];
        for row in &cpt.rows {
            let key: Vec<&str> = config.iter().enumerate().map(|(k, &s)| labels[k][s].as_str()).collect();
            let probs: Vec<String> = row.iter().map(|p| p.to_string()).collect();
            let sep = if key.is_empty() { "" } else { " " };
            writeln!(out, "  row{sep}{} : {}", key.join(" "), probs.join(" ")).unwrap();
            advance(&mut config, &cards);
        }
        out.push_str("}\n");
    }
    Ok(out)
}

/// Parses `rule T | A=a B=b : T=t p=0.5 / T=u p=0.5` lines. The variables a
/// treatment's rule reads are fixed by its first line.
pub fn parse_strategy(text: &str) -> Result<Strategy> {
    let mut rules: Vec<StageRule> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = strip_comment(raw);
        if content.is_empty() {
            continue;
        }
        let rest = content
            .strip_prefix("rule")
            .filter(|r| r.starts_with(char::is_whitespace))
            .ok_or_else(|| Error::parse(line, "expected `rule`"))?;
        let (head, choice) = rest
            .split_once(':')
            .ok_or_else(|| Error::parse(line, "missing `:` before the treatment choice"))?;
        let (treatment, history) = match head.split_once('|') {
            Some((t, h)) => (t.trim(), h.trim()),
            None => (head.trim(), ""),
        };
        let treatment = name_at(line, treatment)?;
        let mut reads = Vec::new();
        let mut values = Vec::new();
        for item in history.split_whitespace() {
            let (v, s) = item
                .split_once('=')
                .ok_or_else(|| Error::parse(line, format!("history item `{item}` needs `=`")))?;
            let v = name_at(line, v)?;
            if reads.contains(&v) {
                return Err(Error::parse(line, format!("`{v}` appears twice in the history")));
            }
            reads.push(v);
            values.push(s.to_string());
        }
        let mut options = Vec::new();
        for option in choice.split('/') {
            let mut state = None;
            let mut p = None;
            for item in option.split_whitespace() {
                let (k, val) = item
                    .split_once('=')
                    .ok_or_else(|| Error::parse(line, format!("choice item `{item}` needs `=`")))?;
                if k == "p" {
                    p = Some(val.parse::<f64>().map_err(|_| Error::parse(line, format!("`{val}` is not a probability")))?);
                } else if k == treatment.as_str() {
                    state = Some(val.to_string());
                } else {
                    return Err(Error::parse(line, format!("choice sets `{k}`, expected `{treatment}`")));
                }
            }
            let state = state.ok_or_else(|| Error::parse(line, format!("choice does not set `{treatment}`")))?;
            options.push((state, p));
        }
        let single = options.len() == 1;
        let options: Vec<(String, f64)> = options
            .into_iter()
            .map(|(s, p)| match p {
                Some(p) => Ok((s, p)),
                None if single => Ok((s, 1.0)),
                None => Err(Error::parse(line, "randomised choices need `p=`")),
            })
            .collect::<Result<_>>()?;
        let rule = match rules.iter_mut().find(|r| r.treatment == treatment) {
            Some(r) => r,
            None => {
                rules.push(StageRule::new(treatment.clone(), reads.clone()).map_err(|e| Error::parse(line, e.to_string()))?);
                rules.last_mut().expect("just pushed")
            }
        };
        let mut ordered = Vec::with_capacity(values.len());
        for v in &rule.reads {
            let k = reads
                .iter()
                .position(|r| r == v)
                .ok_or_else(|| Error::parse(line, format!("rule for {treatment} must read the same variables on every line")))?;
            ordered.push(values[k].clone());
        }
        if reads.len() != rule.reads.len() {
            return Err(Error::parse(line, format!("rule for {treatment} must read the same variables on every line")));
        }
        rule.insert(ordered, options).map_err(|e| Error::parse(line, e.to_string()))?;
    }
    Strategy::new(rules)
}

pub fn write_strategy(s: &Strategy) -> String {
    let mut out = String::new();
    for rule in s.rules.values() {
        for (history, choice) in &rule.decisions {
            write!(out, "rule {}", rule.treatment).unwrap();
            if !rule.reads.is_empty() {
                let items: Vec<String> = rule.reads.iter().zip(history).map(|(v, s)| format!("{v}={s}")).collect();
                write!(out, " | {}", items.join(" ")).unwrap();
            }
            let options: Vec<String> = choice.iter().map(|(st, p)| format!("{}={st} p={p}", rule.treatment)).collect();
            writeln!(out, " : {}", options.join(" / ")).unwrap();
        }
    }
    out
}

/// Reads delimited data with a header row; a `__regime__` column, when
/// present, tags each row with its regime.
pub fn read_dataset(text: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::parse(1, e.to_string()))?.clone();
    let regime_at = header.iter().position(|h| h == REGIME_COLUMN);
    let columns = header
        .iter()
        .filter(|h| *h != REGIME_COLUMN)
        .map(|h| name_at(1, h))
        .collect::<Result<Vec<_>>>()?;
    let mut data = Dataset::new(columns)?;
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::parse(line, e.to_string()))?;
        let mut row = Vec::new();
        let mut regime = RegimeAssignment::idle();
        for (k, value) in record.iter().enumerate() {
            if Some(k) == regime_at {
                regime = RegimeAssignment::parse(value).map_err(|e| Error::parse(line, e.to_string()))?;
            } else {
                row.push(value.to_string());
            }
        }
        data.push(row, regime).map_err(|e| Error::parse(line, e.to_string()))?;
    }
    Ok(data)
}

/// Writes data with a `__regime__` column whenever a row is not idle.
pub fn write_dataset(d: &Dataset) -> Result<String> {
    let tagged = d.regimes().iter().any(|r| !r.is_idle());
    let mut writer = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut header: Vec<&str> = d.columns().iter().map(VariableId::as_str).collect();
    if tagged {
        header.push(REGIME_COLUMN);
    }
    writer.write_record(&header).map_err(io)?;
    for (row, r) in d.rows().iter().zip(d.regimes()) {
        let mut record = row.clone();
        if tagged {
            record.push(r.to_string());
        }
        writer.write_record(&record).map_err(io)?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_node_graph() {
        let g = parse_graph("dag g\nnode A\nnode B\nedge A -> B\n").unwrap();
        assert_eq!(g.name.as_deref(), Some("g"));
        assert!(g.diagram.dag().has_edge("A", "B"));
    }

    #[test]
    fn graph_errors_carry_lines() {
        let dup = parse_graph("node A\nnode A\n").unwrap_err();
        assert_eq!(dup, Error::parse(2, "node `A` already declared on line 1"));
        assert!(matches!(parse_graph("node A\nedge A -> B\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_graph("node A\nnode B\nedge A -> B\nedge A -> B"), Err(Error::Parse { line: 4, .. })));
        assert!(matches!(parse_graph("node A\nbogus\n"), Err(Error::Parse { line: 2, .. })));
        let cycle = parse_graph("node A\nnode B\nedge A -> B\nedge B -> A\n").unwrap_err();
        assert!(matches!(cycle, Error::Cycle(ref c) if c.len() >= 2), "{cycle}");
    }

    #[test]
    fn regime_nodes() {
        let g = parse_graph("node X\nnode Y\nnode F_X regime target=X\nedge X -> Y\n").unwrap();
        assert_eq!(g.diagram.regime_for("X").map(VariableId::as_str), Some("F_X"));
        let g2 = parse_graph("node X\nnode Y\nnode F_X regime\nedge X -> Y\nedge F_X -> X\n").unwrap();
        assert_eq!(g.diagram, g2.diagram);
        assert!(parse_graph("node X\nnode F_X regime target=X\nedge F_X -> X\n").is_err());
        assert!(parse_graph("node X\nnode F_X target=X\n").is_err());
    }

    #[test]
    fn graph_round_trip() {
        let text = "dag r\nnode U latent\nnode V fn=U\nnode T\nnode Y\nnode F_T regime target=T\nedge U -> V\nedge V -> T\nedge T -> Y\nedge U -> Y\n";
        let g = parse_graph(text).unwrap();
        let again = parse_graph(&write_graph(&g)).unwrap();
        assert_eq!(g, again);
    }

    #[test]
    fn model_round_trip() {
        let text = "var X { states = a b }\nvar Y { states = 0 1 2 }\ncpt X { row : 0.25 0.75 }\ncpt Y | X {\n  row a : 0.2 0.3 0.5\n  row b : 1 0 0\n}\n";
        let m = parse_model(text).unwrap();
        assert!(m.dag().has_edge("X", "Y"));
        assert_eq!(parse_model(&write_model(&m).unwrap()).unwrap(), m);
        assert!(matches!(parse_model("var X { states = a b }\ncpt X { row : 0.5 }"), Err(Error::Parse { line: 2, .. })));
        assert!(parse_model("var X { states = a b }\n").is_err());
        assert!(parse_model("var X { states = a b }\ncpt X | X { row a : 1 0 row b : 1 0 }").is_err());
    }

    #[test]
    fn strategy_round_trip() {
        let text = "rule T1 | L1=0 : T1=1\nrule T1 | L1=1 : T1=0\nrule T2 | L1=0 T1=1 : T2=1 p=0.5 / T2=0 p=0.5\n";
        let s = parse_strategy(text).unwrap();
        assert_eq!(s.rules.len(), 2);
        assert_eq!(s.rules[&VariableId::new("T2").unwrap()].probability(&["0".into(), "1".into()], "1"), Some(0.5));
        assert_eq!(parse_strategy(&write_strategy(&s)).unwrap(), s);
        assert!(matches!(parse_strategy("rule T | L=0 : T=1\nrule T | M=0 : T=1"), Err(Error::Parse { line: 2, .. })));
        assert!(parse_strategy("rule T : T=1 / T=0").is_err());
    }

    #[test]
    fn data_round_trip() {
        let text = "T,Y,__regime__\n0,1,idle\n1,1,F_T=1\n";
        let d = read_dataset(text).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.regimes()[1], RegimeAssignment::parse("F_T=1").unwrap());
        assert_eq!(read_dataset(&write_dataset(&d).unwrap()).unwrap(), d);
        let plain = read_dataset("A,B\nx,y\n").unwrap();
        assert_eq!(write_dataset(&plain).unwrap(), "A,B\nx,y\n");
        assert!(matches!(read_dataset("A,B\nx\n"), Err(Error::Parse { line: 2, .. })));
    }
}
