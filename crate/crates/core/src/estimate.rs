//! Estimators for causal contrasts.
//!
//! Discrete estimators read joint tables from a [`RegimeSource`], so the
//! same code runs on a sample (empirical frequencies) and on an exact model
//! (oracle mode). Treatments are binary with states `0` and `1`; responses
//! must have numeric state labels.

use std::collections::BTreeMap;

use log::warn;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::ci::{ci_holds_numeric, CiStatement};
use crate::data::{Dataset, DerivedSource, RegimeSource};
use crate::dist::{advance, JointTable};
use crate::error::{Error, Result};
use crate::graph::{VarSet, VariableId};
use crate::regimes::RegimeAssignment;

pub const CONTROL: &str = "0";
pub const TREATED: &str = "1";

/// Default factor for the weak-instrument threshold
/// `|cov(X,Z)| ≥ factor · sd(X) · sd(Z)`.
pub const WEAK_INSTRUMENT_FACTOR: f64 = 1e-6;

/// What to do when an adjustment stratum lacks one of the arms.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum EmptyCellPolicy {
    #[default]
    Error,
    /// Skip the stratum, renormalise the remaining weights, log a warning.
    Drop,
}

fn positivity(e: Error) -> Error {
    match e {
        Error::ZeroProbability(m) => Error::Positivity(m),
        other => other,
    }
}

/// `E(y | given, regime)`.
pub fn conditional_mean<S: RegimeSource + ?Sized>(
    src: &S,
    y: &VariableId,
    given: &[(&VariableId, &str)],
    regime: &RegimeAssignment,
) -> Result<f64> {
    let mut vars = vec![y.clone()];
    vars.extend(given.iter().map(|(v, _)| (*v).clone()));
    let t = src.table(&vars, regime)?;
    let pairs: Vec<(&str, &str)> = given.iter().map(|(v, s)| (v.as_str(), *s)).collect();
    let cond = t.partial(&pairs).map_err(positivity_label)?;
    t.expectation(y.as_str(), &cond).map_err(positivity)
}

// A label that never occurs in a sample is an empty cell, not a typo.
fn positivity_label(e: Error) -> Error {
    match e {
        Error::UnknownState { var, state } => Error::Positivity(format!("no observations with {var}={state}")),
        other => other,
    }
}

/// `E(Y | T=1, idle) − E(Y | T=0, idle)`: the average causal effect when
/// there is no confounding.
pub fn ace_no_confounding<S: RegimeSource + ?Sized>(src: &S, t: &VariableId, y: &VariableId) -> Result<f64> {
    let idle = RegimeAssignment::idle();
    Ok(conditional_mean(src, y, &[(t, TREATED)], &idle)? - conditional_mean(src, y, &[(t, CONTROL)], &idle)?)
}

/// `E(Y | F_T=1) − E(Y | F_T=0)` read from interventional tables.
pub fn ace_interventional<S: RegimeSource + ?Sized>(src: &S, t: &VariableId, y: &VariableId) -> Result<f64> {
    let mean = |arm: &str| conditional_mean(src, y, &[], &RegimeAssignment::idle().set(t.clone(), arm));
    Ok(mean(TREATED)? - mean(CONTROL)?)
}

/// Per-stratum effects of a covariate set.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecificEffects {
    pub covariates: Vec<VariableId>,
    /// `(labels, P(u | idle), effect)` for every stratum; the effect is
    /// `None` where an arm is missing.
    pub strata: Vec<(Vec<String>, f64, Option<f64>)>,
}

impl SpecificEffects {
    pub fn effect(&self, labels: &[&str]) -> Option<f64> {
        self.strata
            .iter()
            .find(|(l, _, _)| l.iter().map(String::as_str).eq(labels.iter().copied()))
            .and_then(|s| s.2)
    }

    /// `Σ_u P(u) SCE(u)` over strata with positive weight.
    pub fn average(&self, policy: EmptyCellPolicy) -> Result<f64> {
        let mut total = 0.0;
        let mut mass = 0.0;
        for (labels, w, effect) in &self.strata {
            if *w == 0.0 {
                continue;
            }
            match (effect, policy) {
                (Some(e), _) => {
                    total += w * e;
                    mass += w;
                }
                (None, EmptyCellPolicy::Error) => {
                    return Err(Error::Positivity(format!(
                        "an arm is empty in stratum {}",
                        describe(&self.covariates, labels)
                    )));
                }
                (None, EmptyCellPolicy::Drop) => {
                    warn!("dropping stratum {} with an empty arm", describe(&self.covariates, labels));
                }
            }
        }
        if mass == 0.0 {
            return Err(Error::Positivity("every stratum lacks an arm".into()));
        }
        Ok(total / mass)
    }
}

fn describe(vars: &[VariableId], labels: &[String]) -> String {
    vars.iter()
        .zip(labels)
        .map(|(v, l)| format!("{v}={l}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// `SCE(u) = E(Y | u, T=1, idle) − E(Y | u, T=0, idle)` for every
/// configuration `u` of the covariates, with its idle weight.
pub fn sce<S: RegimeSource + ?Sized>(src: &S, t: &VariableId, y: &VariableId, u: &VarSet) -> Result<SpecificEffects> {
    if u.contains(t) || u.contains(y) {
        return Err(Error::Overlap(if u.contains(t) { t } else { y }.to_string()));
    }
    let covariates: Vec<VariableId> = u.iter().cloned().collect();
    let idle = RegimeAssignment::idle();
    let mut vars = covariates.clone();
    vars.push(t.clone());
    vars.push(y.clone());
    let table = src.table(&vars, &idle)?;
    let labels: Vec<Vec<String>> = covariates
        .iter()
        .map(|v| table.states(v.as_str()).map(<[String]>::to_vec))
        .collect::<Result<_>>()?;
    let cards: Vec<usize> = labels.iter().map(Vec::len).collect();
    let mut config = vec![0; covariates.len()];
    let mut strata = Vec::new();
    loop {
        let stratum: Vec<String> = config.iter().enumerate().map(|(k, &s)| labels[k][s].clone()).collect();
        let pairs: Vec<(&str, &str)> = covariates.iter().map(VariableId::as_str).zip(stratum.iter().map(String::as_str)).collect();
        let cond = table.partial(&pairs)?;
        let weight = table.prob(&cond);
        let arm = |a: &str| -> Result<f64> {
            let mut p = pairs.clone();
            p.push((t.as_str(), a));
            let c = table.partial(&p).map_err(positivity_label)?;
            table.expectation(y.as_str(), &c).map_err(positivity)
        };
        let effect = match (arm(TREATED), arm(CONTROL)) {
            (Ok(a), Ok(b)) => Some(a - b),
            (Err(Error::Positivity(_)), _) | (_, Err(Error::Positivity(_))) => None,
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        strata.push((stratum, weight, effect));
        if !advance(&mut config, &cards) {
            break;
        }
    }
    Ok(SpecificEffects { covariates, strata })
}

/// Back-door adjusted ACE: `Σ_z P(z) [E(Y | z, T=1) − E(Y | z, T=0)]`.
pub fn ace_backdoor<S: RegimeSource + ?Sized>(
    src: &S,
    t: &VariableId,
    y: &VariableId,
    z: &VarSet,
    policy: EmptyCellPolicy,
) -> Result<f64> {
    if z.is_empty() {
        return ace_no_confounding(src, t, y);
    }
    sce(src, t, y, z)?.average(policy)
}

/// Effect of treatment on the treated without covariates:
/// `(E(Y | idle) − E(Y | F_T=0)) / P(T=1 | idle)`.
pub fn ett<S: RegimeSource + ?Sized>(src: &S, t: &VariableId, y: &VariableId) -> Result<f64> {
    let idle = RegimeAssignment::idle();
    let observed = conditional_mean(src, y, &[], &idle)?;
    let untreated = conditional_mean(src, y, &[], &RegimeAssignment::idle().set(t.clone(), CONTROL))?;
    let table = src.table(std::slice::from_ref(t), &idle)?;
    let treated = match table.partial(&[(t.as_str(), TREATED)]) {
        Ok(p) => table.prob(&p),
        Err(Error::UnknownState { .. }) => 0.0,
        Err(e) => return Err(e),
    };
    if treated == 0.0 {
        return Err(Error::Positivity(format!("P({t}={TREATED} | idle) is zero")));
    }
    Ok((observed - untreated) / treated)
}

/// `E(SCE_U | T=1, idle) = Σ_u P(u | T=1) SCE(u)`.
pub fn ett_given_covariate<S: RegimeSource + ?Sized>(src: &S, t: &VariableId, y: &VariableId, u: &VarSet) -> Result<f64> {
    let effects = sce(src, t, y, u)?;
    let mut vars = effects.covariates.clone();
    vars.push(t.clone());
    let table = src.table(&vars, &RegimeAssignment::idle())?;
    let treated = table.partial(&[(t.as_str(), TREATED)]).map_err(positivity_label)?;
    let mut total = 0.0;
    for (labels, _, effect) in &effects.strata {
        let mut pairs: Vec<(&str, &str)> = effects.covariates.iter().map(VariableId::as_str).zip(labels.iter().map(String::as_str)).collect();
        pairs.push((t.as_str(), TREATED));
        let weight = table.conditional(&table.partial(&pairs)?, &treated).map_err(positivity)?;
        if weight == 0.0 {
            continue;
        }
        let e = effect.ok_or_else(|| {
            Error::Positivity(format!("untreated arm empty in treated stratum {}", describe(&effects.covariates, labels)))
        })?;
        total += weight * e;
    }
    Ok(total)
}

/// One covariate configuration of a propensity report.
#[derive(Debug, Clone, PartialEq)]
pub struct PropensityStratum {
    pub labels: Vec<String>,
    /// `P(u | T=1) / P(u | T=0)`; infinite when `u` never occurs untreated.
    pub likelihood_ratio: f64,
    /// `P(T=1 | u) = πΛ / (1 − π + πΛ)`.
    pub score: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropensityReport {
    pub covariates: Vec<VariableId>,
    /// `P(T=1 | idle)`.
    pub pi: f64,
    pub strata: Vec<PropensityStratum>,
    /// Whether `U ⫫ T | Π` holds numerically in the idle table.
    pub balanced: bool,
}

/// Scores that agree to this tolerance share a stratum of `Π`.
pub const SCORE_TOLERANCE: f64 = 1e-12;

impl PropensityReport {
    /// Distinct score values (as labels) and the stratum index of each
    /// covariate configuration.
    pub fn score_levels(&self) -> (Vec<String>, BTreeMap<Vec<String>, usize>) {
        let mut levels: Vec<f64> = Vec::new();
        let mut sorted: Vec<f64> = self.strata.iter().map(|s| s.score).collect();
        sorted.sort_by(f64::total_cmp);
        for s in sorted {
            if levels.last().is_none_or(|l| (s - l).abs() > SCORE_TOLERANCE) {
                levels.push(s);
            }
        }
        let map = self
            .strata
            .iter()
            .map(|s| {
                let k = levels.iter().position(|l| (s.score - l).abs() <= SCORE_TOLERANCE).expect("level exists");
                (s.labels.clone(), k)
            })
            .collect();
        (levels.iter().enumerate().map(|(i, _)| i.to_string()).collect(), map)
    }

    /// `src` extended by the score as a discrete variable `name` whose
    /// states index the distinct score values.
    pub fn score_source<'a, S: RegimeSource + ?Sized>(&self, src: &'a S, name: VariableId) -> Result<DerivedSource<'a, S>> {
        let (labels, map) = self.score_levels();
        DerivedSource::new(src, name, self.covariates.clone(), labels, map)
    }
}

pub fn propensity<S: RegimeSource + ?Sized>(src: &S, t: &VariableId, u: &VarSet) -> Result<PropensityReport> {
    if u.is_empty() {
        return Err(Error::EmptySet("covariates"));
    }
    if u.contains(t) {
        return Err(Error::Overlap(t.to_string()));
    }
    let covariates: Vec<VariableId> = u.iter().cloned().collect();
    let mut vars = covariates.clone();
    vars.push(t.clone());
    let table = src.table(&vars, &RegimeAssignment::idle())?;
    let arm = |a: &str| -> Result<Vec<Option<usize>>> { table.partial(&[(t.as_str(), a)]) };
    let (treated, control) = match (arm(TREATED), arm(CONTROL)) {
        (Ok(a), Ok(b)) => (a, b),
        _ => return Err(Error::Degenerate(format!("{t} does not take both values 0 and 1"))),
    };
    let pi = table.prob(&treated);
    if pi == 0.0 || pi == 1.0 {
        return Err(Error::Degenerate(format!("P({t}=1) = {pi}")));
    }
    let labels: Vec<Vec<String>> = covariates
        .iter()
        .map(|v| table.states(v.as_str()).map(<[String]>::to_vec))
        .collect::<Result<_>>()?;
    let cards: Vec<usize> = labels.iter().map(Vec::len).collect();
    let mut config = vec![0; covariates.len()];
    let mut strata = Vec::new();
    loop {
        let stratum: Vec<String> = config.iter().enumerate().map(|(k, &s)| labels[k][s].clone()).collect();
        let pairs: Vec<(&str, &str)> = covariates.iter().map(VariableId::as_str).zip(stratum.iter().map(String::as_str)).collect();
        let cond = table.partial(&pairs)?;
        let q1 = table.conditional(&cond, &treated)?;
        let q0 = table.conditional(&cond, &control)?;
        let weight = table.prob(&cond);
        // Strata of zero weight get Λ = 1; they never enter any sum.
        let lambda = if weight == 0.0 {
            1.0
        } else if q0 == 0.0 {
            f64::INFINITY
        } else {
            q1 / q0
        };
        let score = if lambda.is_infinite() {
            1.0
        } else {
            pi * lambda / (1.0 - pi + pi * lambda)
        };
        strata.push(PropensityStratum {
            labels: stratum,
            likelihood_ratio: lambda,
            score,
            weight,
        });
        if !advance(&mut config, &cards) {
            break;
        }
    }
    let mut report = PropensityReport {
        covariates,
        pi,
        strata,
        balanced: false,
    };
    let name = fresh_name(&vars, "PI")?;
    let scored = report.score_source(&table, name.clone())?;
    let mut all = vars.clone();
    all.push(name.clone());
    let joint: JointTable = scored.table(&all, &RegimeAssignment::idle())?;
    let statement = CiStatement::new(u.clone(), [t.clone()].into(), [name].into());
    report.balanced = ci_holds_numeric(&joint, &statement, 1e-10)?;
    Ok(report)
}

fn fresh_name(taken: &[VariableId], base: &str) -> Result<VariableId> {
    let mut name = base.to_string();
    while taken.iter().any(|v| v.as_str() == name) {
        name.push('_');
    }
    VariableId::new(name)
}

/// Instrumental-variable slope and its ingredients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IvEstimate {
    pub beta: f64,
    pub cov_yz: f64,
    pub cov_xz: f64,
    /// Delta-method standard error; `None` for exact moments.
    pub se: Option<f64>,
    pub n: usize,
}

/// `β = cov(Y,Z) / cov(X,Z)` from known moments.
pub fn iv_from_moments(cov_yz: f64, cov_xz: f64, sd_x: f64, sd_z: f64, factor: f64) -> Result<IvEstimate> {
    let threshold = factor * sd_x * sd_z;
    // Written to reject NaN as well as small covariances.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(cov_xz.abs() >= threshold) || cov_xz == 0.0 {
        return Err(Error::WeakInstrument { cov_xz, threshold });
    }
    Ok(IvEstimate {
        beta: cov_yz / cov_xz,
        cov_yz,
        cov_xz,
        se: None,
        n: 0,
    })
}

fn covariance(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (n - 1.0)
}

/// Sample IV estimate from the idle rows of `d`.
pub fn iv_beta(d: &Dataset, z: &VariableId, x: &VariableId, y: &VariableId, factor: f64) -> Result<IvEstimate> {
    let idle = RegimeAssignment::idle();
    let (zs, xs, ys) = (d.numeric(z.as_str(), &idle)?, d.numeric(x.as_str(), &idle)?, d.numeric(y.as_str(), &idle)?);
    let n = zs.len();
    if n < 3 {
        return Err(Error::Degenerate(format!("{n} idle rows are too few for an instrumental estimate")));
    }
    let var_x = covariance(&xs, &xs);
    let var_z = covariance(&zs, &zs);
    let mut est = iv_from_moments(covariance(&ys, &zs), covariance(&xs, &zs), var_x.sqrt(), var_z.sqrt(), factor)?;
    let residuals: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - est.beta * x).collect();
    let var_e = covariance(&residuals, &residuals);
    est.se = Some((var_e * var_z / (n as f64 * est.cov_xz * est.cov_xz)).sqrt());
    est.n = n;
    Ok(est)
}

/// Two-arm normal comparison with a pooled-variance t interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoArmSummary {
    pub n0: usize,
    pub n1: usize,
    pub mean0: f64,
    pub mean1: f64,
    pub delta: f64,
    pub pooled_variance: f64,
    pub se: f64,
    pub df: f64,
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
}

/// `δ̂ = ȳ_1 − ȳ_0` with a `level` interval from Student's t on
/// `n0 + n1 − 2` degrees of freedom. Uses idle rows, arms `T=0` and `T=1`.
pub fn two_arm_contrast(d: &Dataset, t: &VariableId, y: &VariableId, level: f64) -> Result<TwoArmSummary> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("confidence level {level} is outside (0, 1)")));
    }
    let (ti, yi) = (d.column_index(t.as_str())?, d.column_index(y.as_str())?);
    let mut arms: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for (row, r) in d.rows().iter().zip(d.regimes()) {
        if !r.is_idle() {
            continue;
        }
        let arm = match row[ti].as_str() {
            CONTROL => 0,
            TREATED => 1,
            other => {
                return Err(Error::UnknownState {
                    var: t.to_string(),
                    state: other.to_string(),
                })
            }
        };
        let value = row[yi].parse::<f64>().map_err(|_| Error::NonNumeric {
            var: y.to_string(),
            state: row[yi].clone(),
        })?;
        arms[arm].push(value);
    }
    for (k, a) in arms.iter().enumerate() {
        if a.len() < 2 {
            return Err(Error::Positivity(format!("arm {t}={k} has {} observations, need 2", a.len())));
        }
    }
    let mean = |a: &[f64]| a.iter().sum::<f64>() / a.len() as f64;
    let ss = |a: &[f64], m: f64| a.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
    let (n0, n1) = (arms[0].len(), arms[1].len());
    let (m0, m1) = (mean(&arms[0]), mean(&arms[1]));
    let df = (n0 + n1 - 2) as f64;
    let pooled = (ss(&arms[0], m0) + ss(&arms[1], m1)) / df;
    let se = (pooled * (1.0 / n0 as f64 + 1.0 / n1 as f64)).sqrt();
    let quantile = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::Degenerate(e.to_string()))?
        .inverse_cdf(0.5 + level / 2.0);
    let delta = m1 - m0;
    Ok(TwoArmSummary {
        n0,
        n1,
        mean0: m0,
        mean1: m1,
        delta,
        pooled_variance: pooled,
        se,
        df,
        level,
        lower: delta - quantile * se,
        upper: delta + quantile * se,
    })
}
