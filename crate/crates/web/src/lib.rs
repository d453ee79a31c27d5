//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every entry point takes plain text and returns plain text so the page
//! needs no glue beyond the generated module.

use dtcausal::graph::{fmt_set, separation, var_set, VarSet};
use dtcausal::identify::{identify, ProbTerm, Query, DEFAULT_DEPTH};
use dtcausal::io::parse_graph;
use dtcausal::scm::GaussianTwoArmModel;
use wasm_bindgen::prelude::*;

fn names(text: &str) -> Result<VarSet, String> {
    let parts = text.split(',').map(str::trim).filter(|s| !s.is_empty());
    var_set(parts).map_err(|e| e.to_string())
}

/// Tests `a ⫫ b | given` in the graph and explains the verdict through the
/// moralised ancestral graph.
#[wasm_bindgen]
pub fn dsep(graph: &str, a: &str, b: &str, given: &str) -> Result<String, String> {
    let file = parse_graph(graph).map_err(|e| e.to_string())?;
    let (a, b, c) = (names(a)?, names(b)?, names(given)?);
    let sep = separation(file.diagram.dag(), &a, &b, &c).map_err(|e| e.to_string())?;
    let verdict = if sep.separated { "SEPARATED" } else { "CONNECTED" };
    let mut out = format!("{} _||_ {} | {}: {verdict}\n", fmt_set(&a), fmt_set(&b), fmt_set(&c));
    out.push_str(&format!("ancestral set: {}\nmoral graph edges:\n", fmt_set(&sep.ancestral)));
    for (x, y) in sep.moral.edges() {
        out.push_str(&format!("  {x} - {y}\n"));
    }
    if let Some(path) = sep.witness {
        let p: Vec<&str> = path.iter().map(|v| v.as_str()).collect();
        out.push_str(&format!("path avoiding the conditioning set: {}\n", p.join(" - ")));
    }
    Ok(out)
}

/// Reduces an interventional query such as `P(Y | do(X))` to an
/// observational estimand, listing each rewrite.
#[wasm_bindgen]
pub fn identify_query(graph: &str, query: &str) -> Result<String, String> {
    let file = parse_graph(graph).map_err(|e| e.to_string())?;
    let q = Query::parse(query).map_err(|e| e.to_string())?;
    let term: ProbTerm = q.term;
    let found = identify(&file.diagram, &term, DEFAULT_DEPTH).map_err(|e| e.to_string())?;
    let mut out = format!("{term} = {}\n", found.estimand);
    for (k, step) in found.steps.iter().enumerate() {
        out.push_str(&format!("{}. {}\n", k + 1, step.describe()));
    }
    Ok(out)
}

/// Variance of the individual effect at `points` evenly spaced values of
/// the error correlation in [-1, 1]; the observable arms never change.
#[wasm_bindgen]
pub fn rho_curve(mu0: f64, mu1: f64, sigma2: f64, points: usize) -> Result<Vec<f64>, String> {
    let points = points.max(2);
    (0..points)
        .map(|k| {
            let rho = -1.0 + 2.0 * k as f64 / (points - 1) as f64;
            GaussianTwoArmModel::new(mu0, mu1, sigma2, rho)
                .map(|m| m.induced_responses().ice_variance)
                .map_err(|e| e.to_string())
        })
        .collect()
}
