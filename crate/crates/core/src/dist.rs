//! Exact finite joint distributions.
//!
//! A [`JointTable`] stores one probability per full configuration, in
//! lexicographic order of the variables' state indices (first variable
//! slowest). Everything else in the crate that needs ground truth goes
//! through these tables.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Dag, VariableId};

/// Largest number of cells a table may hold.
pub const MAX_CELLS: usize = 1 << 24;

const ROW_TOLERANCE: f64 = 1e-9;
const MASS_TOLERANCE: f64 = 1e-9;

/// Ordered state labels for every variable of a model.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StateSpace {
    states: BTreeMap<VariableId, Vec<String>>,
}

impl StateSpace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, var: VariableId, labels: Vec<String>) -> Result<()> {
        if labels.is_empty() {
            return Err(Error::Table(format!("`{var}` has no states")));
        }
        let mut sorted = labels.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != labels.len() {
            return Err(Error::Duplicate(format!("state label of `{var}`")));
        }
        if self.states.contains_key(&var) {
            return Err(Error::Duplicate(format!("variable `{var}`")));
        }
        self.states.insert(var, labels);
        Ok(())
    }

    /// Shorthand for variables whose states are `0..k`.
    pub fn with_cardinality(&mut self, var: VariableId, k: usize) -> Result<()> {
        self.insert(var, (0..k).map(|s| s.to_string()).collect())
    }

    pub fn states(&self, var: &str) -> Result<&[String]> {
        self.states
            .get(var)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownVariable(var.to_string()))
    }

    pub fn cardinality(&self, var: &str) -> Result<usize> {
        Ok(self.states(var)?.len())
    }

    pub fn state_index(&self, var: &str, label: &str) -> Result<usize> {
        self.states(var)?
            .iter()
            .position(|s| s == label)
            .ok_or_else(|| Error::UnknownState {
                var: var.to_string(),
                state: label.to_string(),
            })
    }

    pub fn contains(&self, var: &str) -> bool {
        self.states.contains_key(var)
    }

    pub fn variables(&self) -> impl Iterator<Item = &VariableId> {
        self.states.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VariableId, &Vec<String>)> {
        self.states.iter()
    }
}

/// Conditional probability table of `child` given an ordered parent list.
///
/// `rows[k]` is the distribution of `child` for the `k`-th parent
/// configuration in lexicographic order (first parent slowest).
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    pub child: VariableId,
    pub parents: Vec<VariableId>,
    pub rows: Vec<Vec<f64>>,
}

impl Cpt {
    /// Validates shapes against `space` and rescales rows to sum to one.
    pub fn new(
        child: VariableId,
        parents: Vec<VariableId>,
        rows: Vec<Vec<f64>>,
        space: &StateSpace,
    ) -> Result<Self> {
        let k = space.cardinality(child.as_str())?;
        let mut expected_rows = 1usize;
        for p in &parents {
            expected_rows = expected_rows.saturating_mul(space.cardinality(p.as_str())?);
        }
        if rows.len() != expected_rows {
            return Err(Error::Table(format!(
                "CPT of `{child}` has {} rows, expected {expected_rows}",
                rows.len()
            )));
        }
        let mut normalized = Vec::with_capacity(rows.len());
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != k {
                return Err(Error::Table(format!(
                    "CPT of `{child}` row {i} has {} entries, expected {k}",
                    row.len()
                )));
            }
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::Table(format!("CPT of `{child}` row {i} has a negative entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::Table(format!(
                    "CPT of `{child}` row {i} sums to {sum}, not 1"
                )));
            }
            normalized.push(row.into_iter().map(|p| p / sum).collect());
        }
        Ok(Cpt {
            child,
            parents,
            rows: normalized,
        })
    }

    /// A root distribution.
    pub fn root(child: VariableId, probs: Vec<f64>, space: &StateSpace) -> Result<Self> {
        Cpt::new(child, Vec::new(), vec![probs], space)
    }

    /// Index of the row for the given parent state indices.
    pub fn row_index(&self, parent_states: &[usize], space: &StateSpace) -> Result<usize> {
        let mut idx = 0;
        for (p, &s) in self.parents.iter().zip(parent_states) {
            idx = idx * space.cardinality(p.as_str())? + s;
        }
        Ok(idx)
    }
}

/// Partial assignment over the variables of one table: `Some(state)` fixes a
/// variable, `None` leaves it free.
pub type Partial = Vec<Option<usize>>;

#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    vars: Vec<VariableId>,
    states: Vec<Vec<String>>,
    probs: Vec<f64>,
}

impl JointTable {
    pub fn new(vars: Vec<VariableId>, states: Vec<Vec<String>>, probs: Vec<f64>) -> Result<Self> {
        if vars.len() != states.len() {
            return Err(Error::Table("variables and state lists differ in length".into()));
        }
        for (i, v) in vars.iter().enumerate() {
            if vars[..i].contains(v) {
                return Err(Error::Duplicate(format!("variable `{v}` in table")));
            }
            if states[i].is_empty() {
                return Err(Error::Table(format!("`{v}` has no states")));
            }
        }
        let cells = cell_count(states.iter().map(Vec::len))?;
        if probs.len() != cells {
            return Err(Error::Table(format!(
                "table has {} cells, expected {cells}",
                probs.len()
            )));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Table("negative or non-finite cell".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::Table(format!("total mass is {total}, not 1")));
        }
        Ok(JointTable { vars, states, probs })
    }

    /// The trivial table over no variables.
    pub fn unit() -> Self {
        JointTable {
            vars: Vec::new(),
            states: Vec::new(),
            probs: vec![1.0],
        }
    }

    pub fn variables(&self) -> &[VariableId] {
        &self.vars
    }

    pub fn states(&self, var: &str) -> Result<&[String]> {
        Ok(&self.states[self.var_index(var)?])
    }

    pub fn cells(&self) -> &[f64] {
        &self.probs
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.states.iter().map(Vec::len).collect()
    }

    pub fn var_index(&self, var: &str) -> Result<usize> {
        self.vars
            .iter()
            .position(|v| v.as_str() == var)
            .ok_or_else(|| Error::UnknownVariable(var.to_string()))
    }

    pub fn state_index(&self, var: &str, label: &str) -> Result<usize> {
        let i = self.var_index(var)?;
        self.states[i]
            .iter()
            .position(|s| s == label)
            .ok_or_else(|| Error::UnknownState {
                var: var.to_string(),
                state: label.to_string(),
            })
    }

    /// Builds a [`Partial`] from `(variable, state label)` pairs.
    pub fn partial(&self, assignment: &[(&str, &str)]) -> Result<Partial> {
        let mut out = vec![None; self.vars.len()];
        for (var, label) in assignment {
            let i = self.var_index(var)?;
            let s = self.state_index(var, label)?;
            if matches!(out[i], Some(prev) if prev != s) {
                return Err(Error::InvalidArgument(format!("conflicting values for `{var}`")));
            }
            out[i] = Some(s);
        }
        Ok(out)
    }

    /// Iterates `(configuration, probability)` over all cells.
    pub fn iter_cells(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        let cards = self.cardinalities();
        let mut config = vec![0usize; cards.len()];
        let mut first = true;
        self.probs.iter().map(move |&p| {
            if !first {
                advance(&mut config, &cards);
            }
            first = false;
            (config.clone(), p)
        })
    }

    /// Total probability of the cells matching `partial`.
    pub fn prob(&self, partial: &[Option<usize>]) -> f64 {
        if partial.iter().all(Option::is_none) {
            return self.probs.iter().sum();
        }
        self.iter_cells()
            .filter(|(c, _)| matches_partial(c, partial))
            .map(|(_, p)| p)
            .sum()
    }

    /// `P(event | given)`, with a distinct error when `given` has zero mass.
    pub fn conditional(&self, event: &[Option<usize>], given: &[Option<usize>]) -> Result<f64> {
        let joint = merge(event, given)?;
        let denom = self.prob(given);
        if denom <= 0.0 {
            return Err(Error::ZeroProbability(self.describe(given)));
        }
        Ok(self.prob(&joint) / denom)
    }

    /// Marginal table over `keep`, in the order given.
    pub fn marginal(&self, keep: &[VariableId]) -> Result<JointTable> {
        let idx = keep
            .iter()
            .map(|v| self.var_index(v.as_str()))
            .collect::<Result<Vec<_>>>()?;
        let states: Vec<Vec<String>> = idx.iter().map(|&i| self.states[i].clone()).collect();
        let cards: Vec<usize> = states.iter().map(Vec::len).collect();
        let mut probs = vec![0.0; cell_count(cards.iter().copied())?];
        for (config, p) in self.iter_cells() {
            let mut flat = 0;
            for (&i, &k) in idx.iter().zip(&cards) {
                flat = flat * k + config[i];
            }
            probs[flat] += p;
        }
        Ok(JointTable {
            vars: keep.to_vec(),
            states,
            probs,
        })
    }

    /// Exact conditional distribution of `target` (lexicographic over the
    /// target configurations) given a labelled assignment.
    pub fn query(&self, target: &[VariableId], given: &[(&str, &str)]) -> Result<Vec<f64>> {
        let given = self.partial(given)?;
        let denom = self.prob(&given);
        if denom <= 0.0 {
            return Err(Error::ZeroProbability(self.describe(&given)));
        }
        let idx = target
            .iter()
            .map(|v| self.var_index(v.as_str()))
            .collect::<Result<Vec<_>>>()?;
        let cards: Vec<usize> = idx.iter().map(|&i| self.states[i].len()).collect();
        let mut out = vec![0.0; cell_count(cards.iter().copied())?];
        for (config, p) in self.iter_cells() {
            if !matches_partial(&config, &given) {
                continue;
            }
            let mut flat = 0;
            for (&i, &k) in idx.iter().zip(&cards) {
                flat = flat * k + config[i];
            }
            out[flat] += p;
        }
        for v in &mut out {
            *v /= denom;
        }
        Ok(out)
    }

    /// `E(var | given)` with state labels read as numbers.
    pub fn expectation(&self, var: &str, given: &[Option<usize>]) -> Result<f64> {
        let i = self.var_index(var)?;
        let values = numeric_states(var, &self.states[i])?;
        let denom = self.prob(given);
        if denom <= 0.0 {
            return Err(Error::ZeroProbability(self.describe(given)));
        }
        let mut acc = 0.0;
        for (config, p) in self.iter_cells() {
            if matches_partial(&config, given) {
                acc += p * values[config[i]];
            }
        }
        Ok(acc / denom)
    }

    /// Adds a variable that is a deterministic function of the existing ones.
    pub fn with_derived<F>(&self, name: VariableId, labels: Vec<String>, f: F) -> Result<JointTable>
    where
        F: Fn(&[usize]) -> usize,
    {
        if self.vars.contains(&name) {
            return Err(Error::Duplicate(format!("variable `{name}` in table")));
        }
        let k = labels.len();
        let mut vars = self.vars.clone();
        vars.push(name);
        let mut states = self.states.clone();
        states.push(labels);
        let mut probs = vec![0.0; cell_count(states.iter().map(Vec::len))?];
        for (flat, (config, p)) in self.iter_cells().enumerate() {
            let s = f(&config);
            if s >= k {
                return Err(Error::Table("derived state out of range".into()));
            }
            probs[flat * k + s] = p;
        }
        Ok(JointTable { vars, states, probs })
    }

    /// Draws `n` i.i.d. configurations; deterministic for a given seed.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<Vec<usize>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cumulative = Vec::with_capacity(self.probs.len());
        let mut acc = 0.0;
        for &p in &self.probs {
            acc += p;
            cumulative.push(acc);
        }
        let cards = self.cardinalities();
        (0..n)
            .map(|_| {
                let u: f64 = rng.random::<f64>() * acc;
                // First cell whose cumulative mass exceeds u; never a zero cell.
                let flat = cumulative.partition_point(|&c| c <= u);
                decode(flat.min(self.probs.len() - 1), &cards)
            })
            .collect()
    }

    pub(crate) fn describe(&self, partial: &[Option<usize>]) -> String {
        let parts: Vec<String> = partial
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.map(|s| format!("{}={}", self.vars[i], self.states[i][s])))
            .collect();
        if parts.is_empty() {
            "(everything)".into()
        } else {
            parts.join(", ")
        }
    }
}

/// Parses every label of `var` as a number.
pub fn numeric_states(var: &str, labels: &[String]) -> Result<Vec<f64>> {
    labels
        .iter()
        .map(|l| {
            l.parse::<f64>().map_err(|_| Error::NonNumeric {
                var: var.to_string(),
                state: l.clone(),
            })
        })
        .collect()
}

pub(crate) fn matches_partial(config: &[usize], partial: &[Option<usize>]) -> bool {
    config
        .iter()
        .zip(partial)
        .all(|(c, p)| p.is_none_or(|s| s == *c))
}

pub(crate) fn merge(a: &[Option<usize>], b: &[Option<usize>]) -> Result<Partial> {
    a.iter()
        .zip(b)
        .map(|(x, y)| match (x, y) {
            (Some(x), Some(y)) if x != y => Err(Error::InvalidArgument("conflicting assignment".into())),
            (Some(x), _) => Ok(Some(*x)),
            (None, y) => Ok(*y),
        })
        .collect()
}

pub(crate) fn advance(config: &mut [usize], cards: &[usize]) -> bool {
    for i in (0..config.len()).rev() {
        config[i] += 1;
        if config[i] < cards[i] {
            return true;
        }
        config[i] = 0;
    }
    false
}

fn decode(mut flat: usize, cards: &[usize]) -> Vec<usize> {
    let mut config = vec![0; cards.len()];
    for i in (0..cards.len()).rev() {
        config[i] = flat % cards[i];
        flat /= cards[i];
    }
    config
}

pub(crate) fn cell_count<I: IntoIterator<Item = usize>>(cards: I) -> Result<usize> {
    let mut n: u128 = 1;
    for k in cards {
        n *= k as u128;
        if n > MAX_CELLS as u128 {
            return Err(Error::TableTooLarge(n));
        }
    }
    Ok(n as usize)
}

/// Multiplies the CPTs of every node of `g` into the exact joint. Variables
/// appear in the table in the graph's (sorted) node order.
pub fn joint_from_cpts(g: &Dag, space: &StateSpace, cpts: &BTreeMap<VariableId, Cpt>) -> Result<JointTable> {
    let vars: Vec<VariableId> = g.nodes().to_vec();
    for v in &vars {
        let cpt = cpts
            .get(v)
            .ok_or_else(|| Error::Table(format!("missing CPT for `{v}`")))?;
        let declared: std::collections::BTreeSet<_> = cpt.parents.iter().cloned().collect();
        if declared != g.parents(v.as_str())? || declared.len() != cpt.parents.len() {
            return Err(Error::Table(format!(
                "CPT parents of `{v}` do not match the graph"
            )));
        }
    }
    let states: Vec<Vec<String>> = vars
        .iter()
        .map(|v| space.states(v.as_str()).map(<[String]>::to_vec))
        .collect::<Result<_>>()?;
    let cards: Vec<usize> = states.iter().map(Vec::len).collect();
    let cells = cell_count(cards.iter().copied())?;
    let position: BTreeMap<&VariableId, usize> = vars.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let plan: Vec<(usize, Vec<usize>, &Cpt)> = vars
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let cpt = &cpts[v];
            let parents = cpt.parents.iter().map(|p| position[p]).collect();
            (i, parents, cpt)
        })
        .collect();
    let mut probs = Vec::with_capacity(cells);
    let mut config = vec![0usize; vars.len()];
    for flat in 0..cells {
        if flat > 0 {
            advance(&mut config, &cards);
        }
        let mut p = 1.0;
        for (i, parents, cpt) in &plan {
            let mut row = 0;
            for &q in parents {
                row = row * cards[q] + config[q];
            }
            p *= cpt.rows[row][config[*i]];
            if p == 0.0 {
                break;
            }
        }
        probs.push(p);
    }
    JointTable::new(vars, states, probs)
}
