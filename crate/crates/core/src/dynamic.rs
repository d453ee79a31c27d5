//! Dynamic treatment strategies and g-computation.
//!
//! A strategy chooses each treatment `T_k` from the history observed so far.
//! Its consequence `E(Y | σ = s)` is computed from the idle regime alone:
//! covariate and outcome terms come from observational conditionals, the
//! treatment terms from the strategy itself.

use std::collections::BTreeMap;
use std::fmt;

use log::warn;

use crate::data::RegimeSource;
use crate::dist::{advance, Cpt, JointTable, Partial, StateSpace};
use crate::error::{Error, Result};
use crate::graph::{Dag, VarSet, VariableId};
use crate::regimes::{check_sequential_ignorability, InfluenceDiagram, RegimeAssignment};
use crate::scm::DiscreteScm;

/// Upper bound on the number of strategies [`enumerate_strategies`] builds.
pub const MAX_STRATEGIES: u128 = 1_000_000;

/// Covariates observed just before a treatment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stage {
    pub covariates: Vec<VariableId>,
    pub treatment: VariableId,
}

impl Stage {
    pub fn new(covariates: Vec<VariableId>, treatment: VariableId) -> Self {
        Stage { covariates, treatment }
    }
}

/// Infers stages from a graph: each non-treatment variable other than the
/// outcome joins the stage after the last treatment among its ancestors;
/// variables downstream of every treatment are left out.
pub fn infer_stages(dag: &Dag, treatments: &[VariableId], outcome: &VariableId, exclude: &VarSet) -> Result<Vec<Stage>> {
    let mut stages: Vec<Stage> = treatments.iter().map(|t| Stage::new(Vec::new(), t.clone())).collect();
    for v in dag.topological_order() {
        if treatments.contains(&v) || &v == outcome || exclude.contains(&v) {
            continue;
        }
        let ancestors = dag.ancestors(&[v.clone()].into())?;
        let k = treatments.iter().filter(|t| ancestors.contains(*t)).count();
        if k < stages.len() {
            stages[k].covariates.push(v);
        }
    }
    Ok(stages)
}

/// The decision rule for one treatment: a distribution over its states for
/// each configuration of the variables it reads.
#[derive(Debug, Clone, PartialEq)]
pub struct StageRule {
    pub treatment: VariableId,
    pub reads: Vec<VariableId>,
    pub decisions: BTreeMap<Vec<String>, Vec<(String, f64)>>,
}

impl StageRule {
    pub fn new(treatment: VariableId, reads: Vec<VariableId>) -> Result<Self> {
        if reads.contains(&treatment) {
            return Err(Error::Overlap(treatment.to_string()));
        }
        Ok(StageRule {
            treatment,
            reads,
            decisions: BTreeMap::new(),
        })
    }

    /// A rule that ignores the history.
    pub fn fixed(treatment: VariableId, state: &str) -> Self {
        let mut rule = StageRule::new(treatment, Vec::new()).expect("no reads");
        rule.decisions.insert(Vec::new(), vec![(state.to_string(), 1.0)]);
        rule
    }

    pub fn insert(&mut self, history: Vec<String>, choice: Vec<(String, f64)>) -> Result<()> {
        if history.len() != self.reads.len() {
            return Err(Error::InvalidArgument(format!(
                "rule for {} reads {} variables, got {} values",
                self.treatment,
                self.reads.len(),
                history.len()
            )));
        }
        let total: f64 = choice.iter().map(|c| c.1).sum();
        if choice.is_empty() || choice.iter().any(|c| c.1 < 0.0) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("choice for {} is not a distribution", self.treatment)));
        }
        if self.decisions.insert(history.clone(), choice).is_some() {
            return Err(Error::Duplicate(format!("rule for {} at ({})", self.treatment, history.join(" "))));
        }
        Ok(())
    }

    /// Probability that the rule picks `state` after `history`.
    pub fn probability(&self, history: &[String], state: &str) -> Option<f64> {
        self.decisions
            .get(history)
            .map(|c| c.iter().filter(|(s, _)| s == state).map(|(_, p)| p).sum())
    }

    /// The rule as a conditional table; histories without a decision get a
    /// uniform row, which matters only if they are reachable.
    pub fn to_cpt(&self, space: &StateSpace) -> Result<Cpt> {
        let labels = space.states(self.treatment.as_str())?;
        let read_labels: Vec<&[String]> = self.reads.iter().map(|v| space.states(v.as_str())).collect::<Result<_>>()?;
        let cards: Vec<usize> = read_labels.iter().map(|l| l.len()).collect();
        for (h, choice) in &self.decisions {
            for (k, l) in h.iter().enumerate() {
                space.state_index(self.reads[k].as_str(), l)?;
            }
            for (s, _) in choice {
                space.state_index(self.treatment.as_str(), s)?;
            }
        }
        let mut rows = Vec::new();
        let mut config = vec![0; self.reads.len()];
        loop {
            let h: Vec<String> = config.iter().enumerate().map(|(k, &s)| read_labels[k][s].clone()).collect();
            let row = match self.decisions.get(&h) {
                Some(_) => labels.iter().map(|s| self.probability(&h, s).unwrap_or(0.0)).collect(),
                None => vec![1.0 / labels.len() as f64; labels.len()],
            };
            rows.push(row);
            if !advance(&mut config, &cards) {
                break;
            }
        }
        Cpt::new(self.treatment.clone(), self.reads.clone(), rows, space)
    }
}

/// One rule per treatment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Strategy {
    pub rules: BTreeMap<VariableId, StageRule>,
}

impl Strategy {
    pub fn new(rules: impl IntoIterator<Item = StageRule>) -> Result<Self> {
        let mut out = Strategy::default();
        for r in rules {
            if out.rules.contains_key(&r.treatment) {
                return Err(Error::Duplicate(format!("rule set for `{}`", r.treatment)));
            }
            out.rules.insert(r.treatment.clone(), r);
        }
        Ok(out)
    }

    /// Always `t_k` for treatment `T_k`, whatever happened before.
    pub fn fixed(settings: &[(VariableId, &str)]) -> Self {
        Strategy::new(settings.iter().map(|(t, s)| StageRule::fixed(t.clone(), s))).expect("distinct treatments")
    }

    fn rule(&self, t: &VariableId) -> Result<&StageRule> {
        self.rules
            .get(t)
            .ok_or_else(|| Error::InvalidArgument(format!("strategy has no rule for `{t}`")))
    }

    /// Checks that each rule reads only variables observed before its
    /// treatment.
    pub fn check_against(&self, stages: &[Stage]) -> Result<()> {
        let mut seen = VarSet::new();
        for stage in stages {
            seen.extend(stage.covariates.iter().cloned());
            let rule = self.rule(&stage.treatment)?;
            if let Some(v) = rule.reads.iter().find(|v| !seen.contains(*v)) {
                return Err(Error::InvalidArgument(format!(
                    "rule for {} reads `{v}`, which is not observed before it",
                    stage.treatment
                )));
            }
            seen.insert(stage.treatment.clone());
        }
        if let Some(t) = self.rules.keys().find(|t| !stages.iter().any(|s| &s.treatment == *t)) {
            return Err(Error::InvalidArgument(format!("`{t}` is not a treatment of any stage")));
        }
        Ok(())
    }
}

/// Expected response under a strategy, with the probability of each full
/// history of covariates and treatments.
#[derive(Debug, Clone, PartialEq)]
pub struct Consequence {
    pub value: f64,
    pub variables: Vec<VariableId>,
    /// `(labels, weight)` for histories of positive weight.
    pub weights: Vec<(Vec<String>, f64)>,
}

impl fmt::Display for Consequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

struct Setup {
    table: JointTable,
    order: Vec<VariableId>,
    /// Position in `order` of each treatment.
    treatment_at: Vec<usize>,
    outcome: VariableId,
}

fn setup<S: RegimeSource + ?Sized>(src: &S, stages: &[Stage], strategy: &Strategy, y: &VariableId) -> Result<Setup> {
    if stages.is_empty() {
        return Err(Error::EmptySet("stages"));
    }
    strategy.check_against(stages)?;
    let mut order = Vec::new();
    let mut treatment_at = Vec::new();
    for s in stages {
        order.extend(s.covariates.iter().cloned());
        treatment_at.push(order.len());
        order.push(s.treatment.clone());
    }
    if order.contains(y) {
        return Err(Error::Overlap(y.to_string()));
    }
    for (i, v) in order.iter().enumerate() {
        if order[..i].contains(v) {
            return Err(Error::Duplicate(format!("`{v}` in two stages")));
        }
    }
    let mut vars = order.clone();
    vars.push(y.clone());
    let table = src.table(&vars, &RegimeAssignment::idle())?;
    Ok(Setup {
        table,
        order,
        treatment_at,
        outcome: y.clone(),
    })
}

impl Setup {
    fn label(&self, pos: usize, state: usize) -> &str {
        &self.table.states(self.order[pos].as_str()).expect("in table")[state]
    }

    fn history_text(&self, partial: &Partial) -> String {
        let parts: Vec<String> = self
            .order
            .iter()
            .enumerate()
            .filter_map(|(i, v)| partial[i].map(|s| format!("{v}={}", self.label(i, s))))
            .collect();
        if parts.is_empty() {
            "(start)".into()
        } else {
            parts.join(" ")
        }
    }

    fn decision(&self, strategy: &Strategy, stage: usize, partial: &Partial, state: usize) -> Result<f64> {
        let pos = self.treatment_at[stage];
        let rule = strategy.rule(&self.order[pos])?;
        let history: Vec<String> = rule
            .reads
            .iter()
            .map(|v| {
                let i = self.order.iter().position(|o| o == v).expect("checked");
                self.label(i, partial[i].expect("observed before")).to_string()
            })
            .collect();
        rule.probability(&history, self.label(pos, state)).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "rule for {} has no decision after {}",
                self.order[pos],
                self.history_text(partial)
            ))
        })
    }

    fn is_treatment(&self, pos: usize) -> Option<usize> {
        self.treatment_at.iter().position(|&p| p == pos)
    }

    /// `P(v_pos | history, idle)`; positivity failure if the history itself
    /// has no observational mass.
    fn covariate_prob(&self, partial: &Partial, pos: usize, state: usize) -> Result<f64> {
        let mut event = partial.clone();
        event[pos] = Some(state);
        self.table.conditional(&event, partial).map_err(|_| {
            Error::Positivity(format!(
                "the strategy reaches {} but it has zero observational probability",
                self.history_text(partial)
            ))
        })
    }

    fn outcome_mean(&self, partial: &Partial) -> Result<f64> {
        self.table.expectation(self.outcome.as_str(), partial).map_err(|e| match e {
            Error::ZeroProbability(_) => Error::Positivity(format!(
                "the strategy reaches {} but it has zero observational probability",
                self.history_text(partial)
            )),
            other => other,
        })
    }

    fn blank(&self) -> Partial {
        // The table also holds the outcome, in the last position.
        vec![None; self.order.len() + 1]
    }
}

/// The g-formula as one sum over full histories.
pub fn g_consequence<S: RegimeSource + ?Sized>(src: &S, stages: &[Stage], strategy: &Strategy, y: &VariableId) -> Result<Consequence> {
    let s = setup(src, stages, strategy, y)?;
    let cards: Vec<usize> = s.table.cardinalities()[..s.order.len()].to_vec();
    let mut config = vec![0; s.order.len()];
    let mut value = 0.0;
    let mut weights = Vec::new();
    'histories: loop {
        let mut partial = s.blank();
        let mut weight = 1.0;
        for pos in 0..s.order.len() {
            let factor = match s.is_treatment(pos) {
                Some(stage) => s.decision(strategy, stage, &partial, config[pos])?,
                None => s.covariate_prob(&partial, pos, config[pos])?,
            };
            weight *= factor;
            partial[pos] = Some(config[pos]);
            if weight == 0.0 {
                if !advance(&mut config, &cards) {
                    break 'histories;
                }
                continue 'histories;
            }
        }
        value += weight * s.outcome_mean(&partial)?;
        weights.push(((0..s.order.len()).map(|i| s.label(i, config[i]).to_string()).collect(), weight));
        if !advance(&mut config, &cards) {
            break;
        }
    }
    Ok(Consequence {
        value,
        variables: s.order.clone(),
        weights,
    })
}

/// The same quantity by backward induction over the history.
pub fn g_consequence_recursive<S: RegimeSource + ?Sized>(src: &S, stages: &[Stage], strategy: &Strategy, y: &VariableId) -> Result<f64> {
    let s = setup(src, stages, strategy, y)?;
    let mut partial = s.blank();
    recurse(&s, strategy, &mut partial, 0)
}

fn recurse(s: &Setup, strategy: &Strategy, partial: &mut Partial, pos: usize) -> Result<f64> {
    if pos == s.order.len() {
        return s.outcome_mean(partial);
    }
    let k = s.table.cardinalities()[pos];
    let mut total = 0.0;
    for state in 0..k {
        let p = match s.is_treatment(pos) {
            Some(stage) => s.decision(strategy, stage, partial, state)?,
            None => s.covariate_prob(partial, pos, state)?,
        };
        if p == 0.0 {
            continue;
        }
        partial[pos] = Some(state);
        total += p * recurse(s, strategy, partial, pos + 1)?;
        partial[pos] = None;
    }
    Ok(total)
}

/// Runs the sequential-ignorability check on `id` first; with `force` a
/// failure is only logged.
pub fn g_consequence_checked<S: RegimeSource + ?Sized>(
    id: &InfluenceDiagram,
    src: &S,
    stages: &[Stage],
    strategy: &Strategy,
    y: &VariableId,
    force: bool,
) -> Result<Consequence> {
    let covariates: Vec<VarSet> = stages.iter().map(|s| s.covariates.iter().cloned().collect()).collect();
    let treatments: Vec<VariableId> = stages.iter().map(|s| s.treatment.clone()).collect();
    if !check_sequential_ignorability(id, &covariates, &treatments, y)? {
        if !force {
            return Err(Error::Precondition("sequential ignorability does not hold in the diagram".into()));
        }
        warn!("sequential ignorability does not hold; computing anyway");
    }
    g_consequence(src, stages, strategy, y)
}

/// Runs the strategy inside the model: each treatment's mechanism is
/// replaced by its rule, and `E(Y)` is read off the exact joint.
pub fn strategy_oracle(m: &DiscreteScm, strategy: &Strategy, y: &VariableId) -> Result<f64> {
    let replacements = strategy
        .rules
        .iter()
        .map(|(t, r)| Ok((t.clone(), r.to_cpt(m.space())?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let joint = m.exact_joint_with(&replacements)?;
    let y_table = joint.marginal(std::slice::from_ref(y))?;
    y_table.expectation(y.as_str(), &[None])
}

/// Every deterministic strategy in which the rule for each stage reads
/// the given variables; ordered with the last history of the last stage
/// varying fastest.
pub fn enumerate_strategies(stages: &[(VariableId, Vec<VariableId>)], space: &StateSpace) -> Result<Vec<Strategy>> {
    let mut slots: Vec<(usize, Vec<String>)> = Vec::new();
    let mut radices = Vec::new();
    let mut count: u128 = 1;
    for (k, (t, reads)) in stages.iter().enumerate() {
        let labels: Vec<&[String]> = reads.iter().map(|v| space.states(v.as_str())).collect::<Result<_>>()?;
        let cards: Vec<usize> = labels.iter().map(|l| l.len()).collect();
        let choices = space.cardinality(t.as_str())?;
        let mut config = vec![0; reads.len()];
        loop {
            slots.push((k, config.iter().enumerate().map(|(i, &s)| labels[i][s].clone()).collect()));
            radices.push(choices);
            count = count.saturating_mul(choices as u128);
            if count > MAX_STRATEGIES {
                return Err(Error::InvalidArgument(format!("more than {MAX_STRATEGIES} strategies")));
            }
            if !advance(&mut config, &cards) {
                break;
            }
        }
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut digits = vec![0; slots.len()];
    loop {
        let mut rules: Vec<StageRule> = stages
            .iter()
            .map(|(t, reads)| StageRule::new(t.clone(), reads.clone()))
            .collect::<Result<_>>()?;
        for ((k, history), &d) in slots.iter().zip(&digits) {
            let state = space.states(stages[*k].0.as_str())?[d].clone();
            rules[*k].insert(history.clone(), vec![(state, 1.0)])?;
        }
        out.push(Strategy::new(rules)?);
        if !advance(&mut digits, &radices) {
            break;
        }
    }
    Ok(out)
}
