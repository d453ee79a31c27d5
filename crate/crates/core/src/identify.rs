//! Symbolic estimands and the do-calculus.
//!
//! A [`ProbTerm`] is `P(target | given, do(intervened))` over variables;
//! concrete values live in a separate environment so the same expression
//! can be printed generically or evaluated at a point. [`identify`] runs a
//! breadth-first search over sum-product forms, admitting a rewrite only
//! after its graphical precondition has been checked.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::ci::CiStatement;
use crate::data::RegimeSource;
use crate::dist::advance;
use crate::error::{Error, Result};
use crate::graph::{separation, VarSet, VariableId};
use crate::regimes::{surgery, InfluenceDiagram, RegimeAssignment};

/// Default depth bound for [`identify`].
pub const DEFAULT_DEPTH: usize = 6;
/// Hard cap on expressions visited by one search.
pub const MAX_EXPLORED: usize = 200_000;

/// Values for some variables, by label.
pub type Env = BTreeMap<VariableId, String>;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProbTerm {
    pub target: VarSet,
    pub given: VarSet,
    pub intervened: VarSet,
}

impl ProbTerm {
    pub fn new(target: VarSet, given: VarSet, intervened: VarSet) -> Result<Self> {
        if target.is_empty() {
            return Err(Error::EmptySet("probability target"));
        }
        for v in &target {
            if given.contains(v) || intervened.contains(v) {
                return Err(Error::Overlap(v.to_string()));
            }
        }
        if let Some(v) = given.intersection(&intervened).next() {
            return Err(Error::Overlap(v.to_string()));
        }
        Ok(ProbTerm {
            target,
            given,
            intervened,
        })
    }

    pub fn is_observational(&self) -> bool {
        self.intervened.is_empty()
    }

    pub fn variables(&self) -> impl Iterator<Item = &VariableId> {
        self.target.iter().chain(&self.given).chain(&self.intervened)
    }

    pub fn render(&self, env: &Env) -> String {
        let item = |v: &VariableId| match env.get(v) {
            Some(s) => format!("{v}={s}"),
            None => v.to_string(),
        };
        let list = |s: &VarSet| s.iter().map(item).collect::<Vec<_>>().join(",");
        let mut out = format!("P({}", list(&self.target));
        let mut cond = Vec::new();
        if !self.given.is_empty() {
            cond.push(list(&self.given));
        }
        if !self.intervened.is_empty() {
            cond.push(format!("do({})", list(&self.intervened)));
        }
        if !cond.is_empty() {
            out.push_str(" | ");
            out.push_str(&cond.join(", "));
        }
        out.push(')');
        out
    }
}

impl fmt::Display for ProbTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(&Env::new()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Estimand {
    Term(ProbTerm),
    Sum { over: VarSet, body: Box<Estimand> },
    Product(Vec<Estimand>),
    Quotient(Box<Estimand>, Box<Estimand>),
    Constant(f64),
}

impl Estimand {
    /// True iff no term has intervened conditioners.
    pub fn is_observational(&self) -> bool {
        match self {
            Estimand::Term(t) => t.is_observational(),
            Estimand::Sum { body, .. } => body.is_observational(),
            Estimand::Product(fs) => fs.iter().all(Estimand::is_observational),
            Estimand::Quotient(a, b) => a.is_observational() && b.is_observational(),
            Estimand::Constant(_) => true,
        }
    }

    pub fn terms(&self) -> Vec<&ProbTerm> {
        let mut out = Vec::new();
        self.collect_terms(&mut out);
        out
    }

    fn collect_terms<'a>(&'a self, out: &mut Vec<&'a ProbTerm>) {
        match self {
            Estimand::Term(t) => out.push(t),
            Estimand::Sum { body, .. } => body.collect_terms(out),
            Estimand::Product(fs) => fs.iter().for_each(|f| f.collect_terms(out)),
            Estimand::Quotient(a, b) => {
                a.collect_terms(out);
                b.collect_terms(out);
            }
            Estimand::Constant(_) => {}
        }
    }

    pub fn render(&self, env: &Env) -> String {
        match self {
            Estimand::Term(t) => t.render(env),
            Estimand::Sum { over, body } => {
                let names: Vec<&str> = over.iter().map(VariableId::as_str).collect();
                format!("sum_{{{}}} {}", names.join(","), body.render(env))
            }
            Estimand::Product(fs) if fs.is_empty() => "1".into(),
            Estimand::Product(fs) => fs
                .iter()
                .map(|f| match f {
                    Estimand::Sum { .. } | Estimand::Quotient(..) => format!("[{}]", f.render(env)),
                    _ => f.render(env),
                })
                .collect::<Vec<_>>()
                .join(" * "),
            Estimand::Quotient(a, b) => format!("({}) / ({})", a.render(env), b.render(env)),
            Estimand::Constant(c) => c.to_string(),
        }
    }
}

impl fmt::Display for Estimand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(&Env::new()))
    }
}

/// A parsed query such as `P(Y=1 | do(X=1))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub term: ProbTerm,
    pub values: Env,
}

impl Query {
    /// Accepts `P(Y | do(X), Z)`, `P(Y=1 | Z=0, do(X=1))` and the like;
    /// `do(...)` may appear anywhere among the conditioners.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::InvalidArgument(format!("query `{text}`: {m}"));
        let t = text.trim();
        let inner = t
            .strip_prefix("P(")
            .or_else(|| t.strip_prefix("p("))
            .and_then(|s| s.strip_suffix(')'))
            .ok_or_else(|| bad("expected P(...)"))?;
        let (lhs, rhs) = match inner.split_once('|') {
            Some((l, r)) => (l, r),
            None => (inner, ""),
        };
        let mut values = Env::new();
        let mut item = |raw: &str, set: &mut VarSet| -> Result<()> {
            let raw = raw.trim();
            let (name, value) = match raw.split_once('=') {
                Some((n, v)) => (n.trim(), Some(v.trim())),
                None => (raw, None),
            };
            let v = VariableId::new(name)?;
            if !set.insert(v.clone()) {
                return Err(Error::Duplicate(format!("query variable `{v}`")));
            }
            if let Some(value) = value {
                if value.is_empty() {
                    return Err(bad("empty value"));
                }
                values.insert(v, value.to_string());
            }
            Ok(())
        };
        let mut target = VarSet::new();
        for part in lhs.split(',') {
            item(part, &mut target)?;
        }
        let (mut given, mut intervened) = (VarSet::new(), VarSet::new());
        for part in split_top_level(rhs).map_err(|m| bad(&m))? {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            if let Some(list) = part.strip_prefix("do(").and_then(|s| s.strip_suffix(')')) {
                for x in list.split(',') {
                    item(x, &mut intervened)?;
                }
            } else {
                item(part, &mut given)?;
            }
        }
        Ok(Query {
            term: ProbTerm::new(target, given, intervened)?,
            values,
        })
    }

    pub fn estimand(&self) -> Estimand {
        Estimand::Term(self.term.clone())
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.term.render(&self.values))
    }
}

fn split_top_level(s: &str) -> std::result::Result<Vec<&str>, String> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err("unbalanced parentheses".into());
                }
            }
            ',' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err("unbalanced parentheses".into());
    }
    out.push(&s[start..]);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    /// Insertion or deletion of observations.
    One,
    /// Exchange of action and observation.
    Two,
    /// Insertion or deletion of actions.
    Three,
}

impl Rule {
    pub fn number(self) -> u8 {
        match self {
            Rule::One => 1,
            Rule::Two => 2,
            Rule::Three => 3,
        }
    }

    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Rule::One),
            2 => Ok(Rule::Two),
            3 => Ok(Rule::Three),
            _ => Err(Error::InvalidArgument(format!("no rule {n}"))),
        }
    }
}

/// A checked rule precondition.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleApplication {
    pub rule: Rule,
    pub x: VarSet,
    pub y: VarSet,
    pub z: VarSet,
    pub w: VarSet,
    /// The independence tested on the graph after surgery on `x`.
    pub precondition: CiStatement,
    pub holds: bool,
    /// A connecting path in the moral graph when the precondition fails.
    pub witness: Option<Vec<VariableId>>,
}

impl RuleApplication {
    pub fn trace(&self) -> String {
        let status = if self.holds { "holds" } else { "fails" };
        let mut out = format!(
            "rule {}: {} {status} after surgery on {{{}}}",
            self.rule.number(),
            self.precondition,
            join(&self.x)
        );
        if let Some(path) = &self.witness {
            let p: Vec<&str> = path.iter().map(VariableId::as_str).collect();
            out.push_str(&format!(" (path {})", p.join(" - ")));
        }
        out
    }
}

fn join(s: &VarSet) -> String {
    s.iter().map(VariableId::as_str).collect::<Vec<_>>().join(",")
}

fn regime_nodes(id: &InfluenceDiagram, set: &VarSet) -> Result<VarSet> {
    let mut out = VarSet::new();
    for v in set {
        let f = id
            .regime_for(v.as_str())
            .ok_or_else(|| Error::MissingRegime(v.to_string()))?;
        let targets = id.dag().children(f.as_str())?;
        if !targets.is_subset(set) {
            return Err(Error::Regime(format!(
                "regime node `{f}` also sets variables outside {{{}}}",
                join(set)
            )));
        }
        out.insert(f.clone());
    }
    Ok(out)
}

/// Evaluates the precondition of `rule` for the rewrite of
/// `p(y | do(x), [do](z), w)`:
/// rule 1 `Y ⫫ Z | X, F_X, W`; rule 2 `Y ⫫ F_Z | X, F_X, Z, W`;
/// rule 3 `Y ⫫ F_Z | X, F_X, W`, all on the graph after surgery on `x`.
pub fn rule_applicable(
    id: &InfluenceDiagram,
    rule: Rule,
    x: &VarSet,
    y: &VarSet,
    z: &VarSet,
    w: &VarSet,
) -> Result<RuleApplication> {
    if y.is_empty() {
        return Err(Error::EmptySet("rule target"));
    }
    if z.is_empty() {
        return Err(Error::EmptySet("rule subject"));
    }
    let sets = [x, y, z, w];
    for (i, a) in sets.iter().enumerate() {
        for b in &sets[i + 1..] {
            if let Some(v) = a.intersection(b).next() {
                return Err(Error::Overlap(v.to_string()));
            }
        }
    }
    for v in x.iter().chain(y).chain(z).chain(w) {
        if !id.dag().contains(v.as_str()) {
            return Err(Error::UnknownVariable(v.to_string()));
        }
    }
    let fx = regime_nodes(id, x)?;
    let cut = surgery(id, x)?;
    let mut given: VarSet = x.iter().chain(&fx).chain(w).cloned().collect();
    let right = match rule {
        Rule::One => z.clone(),
        Rule::Two => {
            given.extend(z.iter().cloned());
            regime_nodes(id, z)?
        }
        Rule::Three => regime_nodes(id, z)?,
    };
    let sep = separation(cut.dag(), y, &right, &given)?;
    Ok(RuleApplication {
        rule,
        x: x.clone(),
        y: y.clone(),
        z: z.clone(),
        w: w.clone(),
        precondition: CiStatement::new(y.clone(), right, given),
        holds: sep.separated,
        witness: sep.witness,
    })
}

/// `Σ_z p(y | z, x) p(z)` after checking `Z ⫫ F_X` and `Y ⫫ F_X | (X, Z)`.
pub fn backdoor_estimand(id: &InfluenceDiagram, x: &VarSet, y: &VarSet, z: &VarSet) -> Result<Estimand> {
    if x.is_empty() {
        return Err(Error::EmptySet("treatment"));
    }
    ProbTerm::new(y.clone(), z.iter().chain(x).cloned().collect(), VarSet::new())?;
    let fx = regime_nodes(id, x)?;
    if !z.is_empty() && !id.d_separated(z, &fx, &VarSet::new())? {
        return Err(Error::Precondition(format!(
            "{} does not hold",
            CiStatement::new(z.clone(), fx, VarSet::new())
        )));
    }
    let xz: VarSet = x.iter().chain(z).cloned().collect();
    if !id.d_separated(y, &fx, &xz)? {
        return Err(Error::Precondition(format!("{} does not hold", CiStatement::new(y.clone(), fx, xz))));
    }
    let outcome = Estimand::Term(ProbTerm::new(y.clone(), xz, VarSet::new())?);
    if z.is_empty() {
        return Ok(outcome);
    }
    let covariate = Estimand::Term(ProbTerm::new(z.clone(), VarSet::new(), VarSet::new())?);
    Ok(Estimand::Sum {
        over: z.clone(),
        body: Box::new(Estimand::Product(vec![covariate, outcome])),
    })
}

/// A sum over some variables of a product of terms; the search state.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct SumProduct {
    over: VarSet,
    factors: Vec<ProbTerm>,
}

impl SumProduct {
    fn variables(&self) -> VarSet {
        self.factors
            .iter()
            .flat_map(|f| f.variables().cloned())
            .chain(self.over.iter().cloned())
            .collect()
    }

    fn replace(&self, i: usize, with: Vec<ProbTerm>, sum: Option<&VariableId>) -> SumProduct {
        let mut factors: Vec<ProbTerm> = self.factors.clone();
        factors.remove(i);
        factors.extend(with);
        factors.sort();
        let mut over = self.over.clone();
        over.extend(sum.cloned());
        SumProduct { over, factors }
    }

    fn estimand(&self) -> Estimand {
        let body = match self.factors.as_slice() {
            [single] => Estimand::Term(single.clone()),
            fs => Estimand::Product(fs.iter().cloned().map(Estimand::Term).collect()),
        };
        if self.over.is_empty() {
            body
        } else {
            Estimand::Sum {
                over: self.over.clone(),
                body: Box::new(body),
            }
        }
    }
}

/// One admitted rewrite in an identification derivation.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivationStep {
    pub before: ProbTerm,
    pub after: Vec<ProbTerm>,
    /// `None` for extension of the conversation over `summed`.
    pub rule: Option<RuleApplication>,
    pub summed: Option<VariableId>,
    pub result: Estimand,
}

impl DerivationStep {
    pub fn describe(&self) -> String {
        let after: Vec<String> = self.after.iter().map(ToString::to_string).collect();
        let why = match (&self.rule, &self.summed) {
            (Some(r), _) => format!("rule {} since {}", r.rule.number(), r.precondition),
            (None, Some(v)) => format!("extend the conversation over {v}"),
            (None, None) => String::new(),
        };
        format!("{} => {}  [{why}]", self.before, after.join(" * "))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Identification {
    pub estimand: Estimand,
    pub steps: Vec<DerivationStep>,
    pub explored: usize,
}

#[derive(Default)]
struct RuleCache {
    seen: BTreeMap<(Rule, VarSet, VarSet, VarSet, VarSet), Option<RuleApplication>>,
}

impl RuleCache {
    fn check(&mut self, id: &InfluenceDiagram, rule: Rule, x: &VarSet, y: &VarSet, z: &VarSet, w: &VarSet) -> Option<RuleApplication> {
        let key = (rule, x.clone(), y.clone(), z.clone(), w.clone());
        self.seen
            .entry(key)
            .or_insert_with(|| match rule_applicable(id, rule, x, y, z, w) {
                Ok(app) if app.holds => Some(app),
                _ => None,
            })
            .clone()
    }
}

type Move = (SumProduct, ProbTerm, Vec<ProbTerm>, Option<RuleApplication>, Option<VariableId>);

fn moves(id: &InfluenceDiagram, state: &SumProduct, cache: &mut RuleCache) -> Vec<Move> {
    let mut out = Vec::new();
    let present = state.variables();
    let single = |v: &VariableId| -> VarSet { [v.clone()].into() };
    for (i, f) in state.factors.iter().enumerate() {
        let mut push = |after: Vec<ProbTerm>, rule: Option<RuleApplication>, summed: Option<VariableId>| {
            let next = state.replace(i, after.clone(), summed.as_ref());
            out.push((next, f.clone(), after, rule, summed));
        };
        for z in &f.intervened {
            let rest: VarSet = f.intervened.iter().filter(|v| *v != z).cloned().collect();
            if let Some(app) = cache.check(id, Rule::Two, &rest, &f.target, &single(z), &f.given) {
                let mut given = f.given.clone();
                given.insert(z.clone());
                push(vec![ProbTerm { target: f.target.clone(), given, intervened: rest.clone() }], Some(app), None);
            }
            if let Some(app) = cache.check(id, Rule::Three, &rest, &f.target, &single(z), &f.given) {
                push(vec![ProbTerm { target: f.target.clone(), given: f.given.clone(), intervened: rest }], Some(app), None);
            }
        }
        for z in &f.given {
            let rest: VarSet = f.given.iter().filter(|v| *v != z).cloned().collect();
            if let Some(app) = cache.check(id, Rule::One, &f.intervened, &f.target, &single(z), &rest) {
                push(vec![ProbTerm { target: f.target.clone(), given: rest.clone(), intervened: f.intervened.clone() }], Some(app), None);
            }
            if id.regime_for(z.as_str()).is_some() {
                if let Some(app) = cache.check(id, Rule::Two, &f.intervened, &f.target, &single(z), &rest) {
                    let mut intervened = f.intervened.clone();
                    intervened.insert(z.clone());
                    push(vec![ProbTerm { target: f.target.clone(), given: rest, intervened }], Some(app), None);
                }
            }
        }
        for z in id.observed_nodes() {
            if present.contains(&z) || id.is_regime(z.as_str()) {
                continue;
            }
            let mut given = f.given.clone();
            given.insert(z.clone());
            let outcome = ProbTerm { target: f.target.clone(), given, intervened: f.intervened.clone() };
            let weight = ProbTerm { target: single(&z), given: f.given.clone(), intervened: f.intervened.clone() };
            push(vec![outcome, weight], None, Some(z));
        }
    }
    out
}

fn is_goal(id: &InfluenceDiagram, s: &SumProduct) -> bool {
    s.factors
        .iter()
        .all(|f| f.is_observational() && f.variables().all(|v| !id.is_latent(v.as_str())))
}

/// Searches for an observational expression equal to `query` using rules
/// 1–3 and extension of the conversation over observed variables, up to
/// `depth` rewrites. The shallowest result wins; ties go to the
/// lexicographically smallest normal form. Failure means only that the
/// bounded search found nothing.
pub fn identify(id: &InfluenceDiagram, query: &ProbTerm, depth: usize) -> Result<Identification> {
    if depth == 0 {
        return Err(Error::InvalidArgument("search depth must be positive".into()));
    }
    for v in query.variables() {
        if !id.dag().contains(v.as_str()) {
            return Err(Error::UnknownVariable(v.to_string()));
        }
        if id.is_regime(v.as_str()) {
            return Err(Error::InvalidArgument(format!("`{v}` is a regime node")));
        }
    }
    regime_nodes(id, &query.intervened)?;
    let start = SumProduct {
        over: VarSet::new(),
        factors: vec![query.clone()],
    };
    let mut parent: BTreeMap<SumProduct, Option<(SumProduct, Move)>> = BTreeMap::new();
    parent.insert(start.clone(), None);
    let mut cache = RuleCache::default();
    let mut frontier: BTreeSet<SumProduct> = [start.clone()].into();
    let mut found = is_goal(id, &start).then_some(start);
    let mut level = 0;
    while found.is_none() && level < depth && !frontier.is_empty() {
        level += 1;
        let mut next = BTreeSet::new();
        for state in &frontier {
            for mv in moves(id, state, &mut cache) {
                if parent.contains_key(&mv.0) {
                    continue;
                }
                parent.insert(mv.0.clone(), Some((state.clone(), mv.clone())));
                next.insert(mv.0.clone());
                if parent.len() > MAX_EXPLORED {
                    return Err(Error::NotIdentified { depth: level, explored: parent.len() });
                }
            }
        }
        found = next
            .iter()
            .filter(|s| is_goal(id, s))
            .min_by_key(|s| s.estimand().to_string())
            .cloned();
        frontier = next;
    }
    let Some(goal) = found else {
        return Err(Error::NotIdentified { depth, explored: parent.len() });
    };
    let mut steps = Vec::new();
    let mut cur = goal.clone();
    while let Some(Some((prev, (state, before, after, rule, summed)))) = parent.get(&cur).cloned() {
        steps.push(DerivationStep {
            before,
            after,
            rule,
            summed,
            result: state.estimand(),
        });
        cur = prev;
    }
    steps.reverse();
    Ok(Identification {
        estimand: goal.estimand(),
        steps,
        explored: parent.len(),
    })
}

/// Evaluates `e` at `env` against `source`: each term is read from the table
/// of the regime it names, so interventional terms need an oracle. Summed
/// variables range over the states the idle table reports. A product with
/// an exactly zero factor is zero even if another factor conditions on a
/// null event.
pub fn evaluate<S: RegimeSource + ?Sized>(e: &Estimand, source: &S, env: &Env) -> Result<f64> {
    match e {
        Estimand::Constant(c) => Ok(*c),
        Estimand::Term(t) => evaluate_term(t, source, env),
        Estimand::Product(fs) => {
            let mut value = 1.0;
            let mut failure = None;
            for f in fs {
                match evaluate(f, source, env) {
                    Ok(0.0) => return Ok(0.0),
                    Ok(v) => value *= v,
                    Err(err) if failure.is_none() => failure = Some(err),
                    Err(_) => {}
                }
            }
            failure.map_or(Ok(value), Err)
        }
        Estimand::Quotient(a, b) => {
            let den = evaluate(b, source, env)?;
            if den == 0.0 {
                return Err(Error::ZeroProbability(format!("denominator {}", b.render(env))));
            }
            Ok(evaluate(a, source, env)? / den)
        }
        Estimand::Sum { over, body } => {
            let vars: Vec<VariableId> = over.iter().cloned().collect();
            let table = source.table(&vars, &RegimeAssignment::idle())?;
            let labels: Vec<Vec<String>> = vars
                .iter()
                .map(|v| table.states(v.as_str()).map(<[String]>::to_vec))
                .collect::<Result<_>>()?;
            let cards: Vec<usize> = labels.iter().map(Vec::len).collect();
            let mut config = vec![0; vars.len()];
            let mut inner = env.clone();
            let mut total = 0.0;
            loop {
                for (k, v) in vars.iter().enumerate() {
                    inner.insert(v.clone(), labels[k][config[k]].clone());
                }
                total += evaluate(body, source, &inner)?;
                if !advance(&mut config, &cards) {
                    break;
                }
            }
            Ok(total)
        }
    }
}

fn evaluate_term<S: RegimeSource + ?Sized>(t: &ProbTerm, source: &S, env: &Env) -> Result<f64> {
    let value = |v: &VariableId| {
        env.get(v)
            .ok_or_else(|| Error::InvalidArgument(format!("no value for `{v}` in {t}")))
    };
    let mut regime = RegimeAssignment::idle();
    for v in &t.intervened {
        regime = regime.set(v.clone(), value(v)?.clone());
    }
    let vars: Vec<VariableId> = t.target.iter().chain(&t.given).cloned().collect();
    let table = source.table(&vars, &regime)?;
    let pairs: Vec<(&str, &str)> = vars
        .iter()
        .map(|v| Ok((v.as_str(), value(v)?.as_str())))
        .collect::<Result<_>>()?;
    let (event, given) = pairs.split_at(t.target.len());
    let event = table.partial(event)?;
    let cond = table.partial(given)?;
    let joint = crate::dist::merge(&event, &cond)?;
    table.conditional(&joint, &cond).map_err(|e| match e {
        Error::ZeroProbability(_) => Error::ZeroProbability(t.render(env)),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{var_set, Dag};

    fn set(names: &[&str]) -> VarSet {
        var_set(names.iter().copied()).unwrap()
    }

    fn diagram(nodes: &[&str], edges: &[(&str, &str)], targets: &[&str]) -> InfluenceDiagram {
        crate::regimes::augment(&Dag::from_names(nodes, edges).unwrap(), &set(targets)).unwrap()
    }

    fn confounded() -> InfluenceDiagram {
        diagram(&["U", "T", "Y"], &[("U", "T"), ("U", "Y"), ("T", "Y")], &["T"])
    }

    #[test]
    fn query_parsing() {
        let q = Query::parse("P(Y=1 | do(X=1))").unwrap();
        assert_eq!(q.term.intervened, set(&["X"]));
        assert_eq!(q.values.get("Y").map(String::as_str), Some("1"));
        assert_eq!(q.to_string(), "P(Y=1 | do(X=1))");
        let q = Query::parse("P(Y | do(X), Z)").unwrap();
        assert_eq!(q.term.given, set(&["Z"]));
        assert_eq!(q.term.to_string(), "P(Y | Z, do(X))");
        assert!(Query::parse("P(Y | do(X)").is_err());
        assert!(Query::parse("Q(Y)").is_err());
        assert!(Query::parse("P(Y | Y)").is_err());
    }

    #[test]
    fn rule_examples() {
        let causes = diagram(&["X", "Y"], &[("X", "Y")], &["X"]);
        let e = VarSet::new();
        assert!(rule_applicable(&causes, Rule::Two, &e, &set(&["Y"]), &set(&["X"]), &e).unwrap().holds);
        let reverse = diagram(&["X", "Y"], &[("Y", "X")], &["X"]);
        assert!(rule_applicable(&reverse, Rule::Three, &e, &set(&["Y"]), &set(&["X"]), &e).unwrap().holds);
        let bow = diagram(&["U", "X", "Y"], &[("U", "X"), ("U", "Y"), ("X", "Y")], &["X"]);
        let app = rule_applicable(&bow, Rule::Two, &e, &set(&["Y"]), &set(&["X"]), &e).unwrap();
        assert!(!app.holds);
        assert!(app.witness.is_some());
        assert!(matches!(
            rule_applicable(&bow, Rule::Three, &e, &set(&["X"]), &set(&["Y"]), &e),
            Err(Error::MissingRegime(_))
        ));
        assert!(rule_applicable(&bow, Rule::One, &e, &set(&["Y"]), &set(&["Y"]), &e).is_err());
    }

    #[test]
    fn backdoor_examples() {
        let id = confounded();
        let e = backdoor_estimand(&id, &set(&["T"]), &set(&["Y"]), &set(&["U"])).unwrap();
        assert_eq!(e.to_string(), "sum_{U} P(U) * P(Y | T,U)");
        assert!(e.is_observational());
        let causes = diagram(&["X", "Y"], &[("X", "Y")], &["X"]);
        let e = backdoor_estimand(&causes, &set(&["X"]), &set(&["Y"]), &VarSet::new()).unwrap();
        assert_eq!(e.to_string(), "P(Y | X)");
        let mediated = diagram(&["X", "M", "Y"], &[("X", "M"), ("M", "Y")], &["X"]);
        assert!(matches!(
            backdoor_estimand(&mediated, &set(&["X"]), &set(&["Y"]), &set(&["M"])),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn identification_examples() {
        let causes = diagram(&["X", "Y"], &[("X", "Y")], &["X"]);
        let q = Query::parse("P(Y | do(X))").unwrap();
        let found = identify(&causes, &q.term, DEFAULT_DEPTH).unwrap();
        assert_eq!(found.estimand.to_string(), "P(Y | X)");
        assert_eq!(found.steps.len(), 1);

        let found = identify(&confounded(), &Query::parse("P(Y | do(T))").unwrap().term, DEFAULT_DEPTH).unwrap();
        assert_eq!(found.estimand.to_string(), "sum_{U} P(U) * P(Y | T,U)");
        assert_eq!(found.steps.len(), 3);

        let mut bow = diagram(&["U", "X", "Y"], &[("U", "X"), ("U", "Y"), ("X", "Y")], &["X"]);
        bow = InfluenceDiagram::new(bow.dag().clone(), [(VariableId::new("F_X").unwrap(), set(&["X"]))].into(), set(&["U"]), BTreeMap::new()).unwrap();
        assert!(matches!(
            identify(&bow, &Query::parse("P(Y | do(X))").unwrap().term, DEFAULT_DEPTH),
            Err(Error::NotIdentified { depth: 6, .. })
        ));
        assert!(identify(&causes, &q.term, 0).is_err());
    }

    #[test]
    fn evaluation_against_a_table() {
        use crate::dist::JointTable;
        let t = JointTable::new(
            vec![VariableId::new("X").unwrap(), VariableId::new("Y").unwrap()],
            vec![vec!["0".into(), "1".into()], vec!["0".into(), "1".into()]],
            vec![0.1, 0.2, 0.3, 0.4],
        )
        .unwrap();
        let env: Env = [(VariableId::new("X").unwrap(), "1".into()), (VariableId::new("Y").unwrap(), "1".into())].into();
        let term = Query::parse("P(Y | X)").unwrap().estimand();
        let direct = t.query(&[VariableId::new("Y").unwrap()], &[("X", "1")]).unwrap()[1];
        assert_eq!(evaluate(&term, &t, &env).unwrap(), direct);
        assert_eq!(evaluate(&Estimand::Constant(1.0), &t, &env).unwrap(), 1.0);
        let sum = Estimand::Sum { over: set(&["X"]), body: Box::new(Query::parse("P(X, Y)").unwrap().estimand()) };
        assert!((evaluate(&sum, &t, &env).unwrap() - 0.6).abs() < 1e-15);
        let interventional = Query::parse("P(Y | do(X))").unwrap().estimand();
        assert!(matches!(evaluate(&interventional, &t, &env), Err(Error::Positivity(_))));
    }
}
