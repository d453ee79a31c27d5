//! Regime-tagged datasets and the [`RegimeSource`] abstraction shared by the
//! estimators: anything that can produce a joint table of some variables
//! under a given regime, whether empirically or exactly.

use std::collections::{BTreeMap, BTreeSet};

use crate::dist::{JointTable, StateSpace};
use crate::error::{Error, Result};
use crate::graph::VariableId;
use crate::regimes::RegimeAssignment;

/// Joint distributions of chosen variables under chosen regimes.
pub trait RegimeSource {
    fn table(&self, vars: &[VariableId], regime: &RegimeAssignment) -> Result<JointTable>;
}

/// A single exact table stands for the idle regime only.
impl RegimeSource for JointTable {
    fn table(&self, vars: &[VariableId], regime: &RegimeAssignment) -> Result<JointTable> {
        if !regime.is_idle() {
            return Err(Error::Positivity(format!(
                "no table available for regime {regime}"
            )));
        }
        self.marginal(vars)
    }
}

/// Another source extended by a variable that is a deterministic function
/// of some of its variables, such as a propensity score of a covariate.
#[derive(Debug, Clone)]
pub struct DerivedSource<'a, S: ?Sized> {
    inner: &'a S,
    name: VariableId,
    inputs: Vec<VariableId>,
    labels: Vec<String>,
    map: BTreeMap<Vec<String>, usize>,
}

impl<'a, S: RegimeSource + ?Sized> DerivedSource<'a, S> {
    /// `map` sends each configuration of `inputs` (as labels) to an index
    /// into `labels`; configurations that occur must all be mapped.
    pub fn new(
        inner: &'a S,
        name: VariableId,
        inputs: Vec<VariableId>,
        labels: Vec<String>,
        map: BTreeMap<Vec<String>, usize>,
    ) -> Result<Self> {
        if inputs.contains(&name) {
            return Err(Error::Overlap(name.to_string()));
        }
        if map.values().any(|&i| i >= labels.len()) {
            return Err(Error::Table(format!("derived `{name}` maps outside its labels")));
        }
        Ok(DerivedSource {
            inner,
            name,
            inputs,
            labels,
            map,
        })
    }
}

impl<S: RegimeSource + ?Sized> RegimeSource for DerivedSource<'_, S> {
    fn table(&self, vars: &[VariableId], regime: &RegimeAssignment) -> Result<JointTable> {
        if !vars.contains(&self.name) {
            return self.inner.table(vars, regime);
        }
        let mut base: Vec<VariableId> = vars.iter().filter(|v| **v != self.name).cloned().collect();
        for v in &self.inputs {
            if !base.contains(v) {
                base.push(v.clone());
            }
        }
        let t = self.inner.table(&base, regime)?;
        let idx = self
            .inputs
            .iter()
            .map(|v| t.var_index(v.as_str()))
            .collect::<Result<Vec<_>>>()?;
        let states: Vec<&[String]> = t
            .variables()
            .iter()
            .map(|v| t.states(v.as_str()))
            .collect::<Result<_>>()?;
        let extended = t.with_derived(self.name.clone(), self.labels.clone(), |config| {
            let key: Vec<String> = idx.iter().map(|&i| states[i][config[i]].clone()).collect();
            self.map.get(&key).copied().unwrap_or(usize::MAX)
        })?;
        extended.marginal(vars)
    }
}

/// Rows of categorical (or numeric) values, each tagged with the regime
/// under which it was recorded.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    columns: Vec<VariableId>,
    rows: Vec<Vec<String>>,
    regimes: Vec<RegimeAssignment>,
    space: Option<StateSpace>,
}

impl Dataset {
    pub fn new(columns: Vec<VariableId>) -> Result<Self> {
        for (i, c) in columns.iter().enumerate() {
            if columns[..i].contains(c) {
                return Err(Error::Duplicate(format!("column `{c}`")));
            }
        }
        Ok(Dataset {
            columns,
            ..Default::default()
        })
    }

    /// Declares state sets; empirical tables then use them (so that empty
    /// cells are represented) and rows are validated against them.
    pub fn with_space(mut self, space: StateSpace) -> Result<Self> {
        for row in &self.rows {
            check_row(&self.columns, row, &space)?;
        }
        self.space = Some(space);
        Ok(self)
    }

    pub fn push(&mut self, row: Vec<String>, regime: RegimeAssignment) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::InvalidArgument(format!(
                "row has {} values, expected {}",
                row.len(),
                self.columns.len()
            )));
        }
        for (v, _) in regime.interventions() {
            if !self.columns.contains(v) {
                return Err(Error::UnknownVariable(v.to_string()));
            }
        }
        if let Some(space) = &self.space {
            check_row(&self.columns, &row, space)?;
        }
        self.rows.push(row);
        self.regimes.push(regime);
        Ok(())
    }

    /// Appends sampled configurations of `table` (state indices) under
    /// `regime`; the table's variables must all be columns.
    pub fn extend_from_samples(&mut self, table: &JointTable, samples: &[Vec<usize>], regime: &RegimeAssignment) -> Result<()> {
        let map = self
            .columns
            .iter()
            .map(|c| table.var_index(c.as_str()))
            .collect::<Result<Vec<_>>>()?;
        for s in samples {
            let row = map
                .iter()
                .map(|&i| table.states(table.variables()[i].as_str()).map(|st| st[s[i]].clone()))
                .collect::<Result<Vec<_>>>()?;
            self.push(row, regime.clone())?;
        }
        Ok(())
    }

    pub fn columns(&self) -> &[VariableId] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn regimes(&self) -> &[RegimeAssignment] {
        &self.regimes
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, var: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c.as_str() == var)
            .ok_or_else(|| Error::UnknownVariable(var.to_string()))
    }

    /// Distinct regimes in order of first appearance.
    pub fn regimes_present(&self) -> Vec<RegimeAssignment> {
        let mut seen = BTreeSet::new();
        self.regimes
            .iter()
            .filter(|r| seen.insert((*r).clone()))
            .cloned()
            .collect()
    }

    /// Values of `var` parsed as numbers, restricted to rows recorded under
    /// `regime`.
    pub fn numeric(&self, var: &str, regime: &RegimeAssignment) -> Result<Vec<f64>> {
        let i = self.column_index(var)?;
        self.rows
            .iter()
            .zip(&self.regimes)
            .filter(|(_, r)| *r == regime)
            .map(|(row, _)| {
                row[i].parse::<f64>().map_err(|_| Error::NonNumeric {
                    var: var.to_string(),
                    state: row[i].clone(),
                })
            })
            .collect()
    }

    /// State labels of `var`: the declared ones, or else the observed ones
    /// (numerically sorted when all are numbers).
    pub fn labels(&self, var: &str) -> Result<Vec<String>> {
        if let Some(space) = &self.space {
            return Ok(space.states(var)?.to_vec());
        }
        let i = self.column_index(var)?;
        let distinct: BTreeSet<&str> = self.rows.iter().map(|r| r[i].as_str()).collect();
        let mut labels: Vec<String> = distinct.into_iter().map(str::to_string).collect();
        let numeric: Option<Vec<f64>> = labels.iter().map(|l| l.parse().ok()).collect();
        if let Some(values) = numeric {
            let mut pairs: Vec<(f64, String)> = values.into_iter().zip(labels).collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            labels = pairs.into_iter().map(|(_, l)| l).collect();
        }
        Ok(labels)
    }
}

fn check_row(columns: &[VariableId], row: &[String], space: &StateSpace) -> Result<()> {
    for (c, value) in columns.iter().zip(row) {
        if space.contains(c.as_str()) {
            space.state_index(c.as_str(), value)?;
        }
    }
    Ok(())
}

impl RegimeSource for Dataset {
    /// Empirical joint (relative frequencies) of `vars` over the rows
    /// recorded under `regime`.
    fn table(&self, vars: &[VariableId], regime: &RegimeAssignment) -> Result<JointTable> {
        let idx = vars
            .iter()
            .map(|v| self.column_index(v.as_str()))
            .collect::<Result<Vec<_>>>()?;
        let labels = vars
            .iter()
            .map(|v| self.labels(v.as_str()))
            .collect::<Result<Vec<_>>>()?;
        let cards: Vec<usize> = labels.iter().map(Vec::len).collect();
        let mut counts = vec![0u64; crate::dist::cell_count(cards.iter().copied())?];
        let mut n = 0u64;
        for (row, r) in self.rows.iter().zip(&self.regimes) {
            if r != regime {
                continue;
            }
            let mut flat = 0;
            for (k, &i) in idx.iter().enumerate() {
                let s = labels[k]
                    .iter()
                    .position(|l| *l == row[i])
                    .ok_or_else(|| Error::UnknownState {
                        var: vars[k].to_string(),
                        state: row[i].clone(),
                    })?;
                flat = flat * cards[k] + s;
            }
            counts[flat] += 1;
            n += 1;
        }
        if n == 0 {
            return Err(Error::Positivity(format!("no rows recorded under regime {regime}")));
        }
        let probs = counts.into_iter().map(|c| c as f64 / n as f64).collect();
        JointTable::new(vars.to_vec(), labels, probs)
    }
}
