use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dag::{Blockage, Dag, Trail, UndirectedGraph};
use crate::error::{Error, Result};

pub const Y_STAR: &str = "y*";
pub const X_STAR: &str = "x*";
pub const PHI: &str = "phi";
pub const THETA: &str = "theta";
pub const HYPER: &str = "hyper";
pub const X_M: &str = "Xm";

/// Data-node names; anything else is a parameter or hyperparameter.
pub const DATA_NODES: [&str; 8] = ["y*", "x*", "Y", "X", "Xm", "Ym", "Xr", "Yr"];

/// Which data sources a sampling design supplies, and how the prior couples
/// the conditional parameters `phi` with the marginal parameters `theta`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignFlags {
    /// Complete pairs `(Y, X)`.
    pub labeled: bool,
    /// Covariates with missing responses.
    pub unlabeled_x: bool,
    /// Responses with missing covariates.
    pub unlabeled_y: bool,
    /// Response-selected pairs `(Yr, Xr)`.
    pub response_selected: bool,
    /// Adds a shared hyperparameter parent of `phi` and `theta`.
    pub prior_dependent: bool,
    /// Marks the shared hyperparameter as known (observed).
    pub hyper_known: bool,
    /// Merges `phi` and `theta` into one node `phi=theta`.
    pub shared_parameters: bool,
    /// Omits the edge `theta -> x*`, leaving `x*` uninformative about `theta`.
    pub isolate_x_star: bool,
}

/// A declared model factorization as a DAG, with observed nodes and a query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelSpecGraph {
    dag: Dag,
    observed: BTreeSet<String>,
    target: String,
    candidate: String,
}

/// File form of a [`ModelSpecGraph`]: either explicit nodes and edges, or a
/// `[design]` table expanded by [`build_standard_spec`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nodes: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edges: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub observed: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<DesignFlags>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<QuerySpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuerySpec {
    #[serde(default = "default_target")]
    pub target: String,
    #[serde(default = "default_candidate")]
    pub candidate: String,
}

fn default_target() -> String {
    Y_STAR.into()
}

fn default_candidate() -> String {
    X_M.into()
}

impl ModelSpecGraph {
    pub fn new<S: AsRef<str>>(nodes: &[S], edges: &[(S, S)], observed: &[S]) -> Result<Self> {
        let dag = Dag::new(nodes, edges)?;
        let observed: BTreeSet<String> = observed.iter().map(|s| s.as_ref().to_string()).collect();
        for o in &observed {
            if !dag.contains(o) {
                return Err(Error::data(format!("observed node '{o}' is not in the graph")));
            }
        }
        let spec = Self { dag, observed, target: Y_STAR.into(), candidate: X_M.into() };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_query(mut self, target: &str, candidate: &str) -> Result<Self> {
        self.target = target.into();
        self.candidate = candidate.into();
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if !self.dag.contains(&self.target) {
            return Err(Error::data(format!("target '{}' is not in the graph", self.target)));
        }
        if self.observed.contains(&self.target) {
            return Err(Error::data("the prediction target cannot be observed"));
        }
        if self.target == Y_STAR {
            for p in self.dag.parents_of(Y_STAR)? {
                if DATA_NODES.contains(&p) && p != X_STAR {
                    return Err(Error::data(format!("y* may depend only on x* and parameters, not '{p}'")));
                }
            }
        }
        Ok(())
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn observed(&self) -> impl Iterator<Item = &str> {
        self.observed.iter().map(String::as_str)
    }

    pub fn target(&self) -> &str {
        &self.target
    }

    pub fn candidate(&self) -> &str {
        &self.candidate
    }

    pub fn contains(&self, node: &str) -> bool {
        self.dag.contains(node)
    }

    pub fn moralize(&self) -> UndirectedGraph {
        self.dag.moralize()
    }

    pub fn d_separated(&self, a: &str, b: &str, conditioning: &[&str]) -> Result<bool> {
        self.dag.d_separated(a, b, conditioning)
    }

    /// Replaces nodes `a` and `b` by a single node `a=b` carrying the union
    /// of their edges.
    pub fn merge(&self, a: &str, b: &str) -> Result<Self> {
        self.dag.node(a)?;
        self.dag.node(b)?;
        let merged = format!("{a}={b}");
        let rename = |n: &str| if n == a || n == b { merged.clone() } else { n.to_string() };
        let mut nodes: Vec<String> = Vec::new();
        for n in self.dag.names() {
            let r = rename(n);
            if !nodes.contains(&r) {
                nodes.push(r);
            }
        }
        let mut edges: Vec<(String, String)> = Vec::new();
        for (f, t) in self.dag.edges() {
            let e = (rename(&f), rename(&t));
            if e.0 != e.1 && !edges.contains(&e) {
                edges.push(e);
            }
        }
        let observed: Vec<String> =
            self.observed.iter().map(|o| rename(o)).collect::<BTreeSet<_>>().into_iter().collect();
        ModelSpecGraph::new(&nodes, &edges, &observed)?.with_query(&self.target, &self.candidate)
    }

    /// Conditioning set for the relevance query: observed nodes plus `x*`,
    /// minus the query endpoints.
    pub fn query_conditioning(&self) -> Vec<&str> {
        let mut z: BTreeSet<&str> = self.observed().collect();
        if self.dag.contains(X_STAR) {
            z.insert(X_STAR);
        }
        z.remove(self.candidate.as_str());
        z.remove(self.target.as_str());
        z.into_iter().collect()
    }

    pub fn to_file(&self) -> SpecFile {
        SpecFile {
            nodes: self.dag.names().to_vec(),
            edges: self.dag.edges(),
            observed: self.observed.iter().cloned().collect(),
            design: None,
            query: Some(QuerySpec { target: self.target.clone(), candidate: self.candidate.clone() }),
        }
    }
}

impl SpecFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn build(&self) -> Result<ModelSpecGraph> {
        let spec = match &self.design {
            Some(flags) => {
                if !self.nodes.is_empty() || !self.edges.is_empty() || !self.observed.is_empty() {
                    return Err(Error::Config("give either [design] or explicit nodes/edges, not both".into()));
                }
                build_standard_spec(*flags)?
            }
            None => ModelSpecGraph::new(&self.nodes, &self.edges, &self.observed)?,
        };
        match &self.query {
            Some(q) => spec.with_query(&q.target, &q.candidate),
            None => Ok(spec),
        }
    }
}

/// Standard factorization for a sampling design.
///
/// `theta` generates `X`, `Xm` and `x*`; `phi` generates `Y` given `X` and
/// `y*` given `x*`; `Ym` and `Xr` (given `Yr`) depend on both parameters.
/// Every supplied data node is observed.
pub fn build_standard_spec(flags: DesignFlags) -> Result<ModelSpecGraph> {
    if !(flags.labeled || flags.unlabeled_x || flags.unlabeled_y || flags.response_selected) {
        return Err(Error::param("design needs at least one data source"));
    }
    let mut nodes = vec![Y_STAR, X_STAR, PHI, THETA];
    let mut edges = vec![(PHI, Y_STAR), (X_STAR, Y_STAR)];
    let mut observed = Vec::new();
    if !flags.isolate_x_star {
        edges.push((THETA, X_STAR));
    }
    if flags.labeled {
        nodes.extend(["Y", "X"]);
        edges.extend([(THETA, "X"), ("X", "Y"), (PHI, "Y")]);
        observed.extend(["Y", "X"]);
    }
    if flags.unlabeled_x {
        nodes.push(X_M);
        edges.push((THETA, X_M));
        observed.push(X_M);
    }
    if flags.unlabeled_y {
        nodes.push("Ym");
        edges.extend([(PHI, "Ym"), (THETA, "Ym")]);
        observed.push("Ym");
    }
    if flags.response_selected {
        nodes.extend(["Yr", "Xr"]);
        edges.extend([("Yr", "Xr"), (PHI, "Xr"), (THETA, "Xr")]);
        observed.extend(["Yr", "Xr"]);
    }
    if flags.prior_dependent {
        nodes.push(HYPER);
        edges.extend([(HYPER, PHI), (HYPER, THETA)]);
        if flags.hyper_known {
            observed.push(HYPER);
        }
    }
    let spec = ModelSpecGraph::new(&nodes, &edges, &observed)?;
    if flags.shared_parameters {
        spec.merge(PHI, THETA)
    } else {
        Ok(spec)
    }
}

/// Outcome of a relevance query.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelevanceVerdict {
    pub relevant: bool,
    pub candidate: String,
    pub target: String,
    pub conditioning: Vec<String>,
    /// Shortest active trail when relevant.
    pub witness: Option<Trail>,
    /// Where trails from the candidate stop when irrelevant.
    pub blockage: Option<Blockage>,
}

impl RelevanceVerdict {
    pub fn label(&self) -> &'static str {
        if self.relevant {
            "relevant"
        } else {
            "irrelevant"
        }
    }

    pub fn explanation(&self) -> String {
        match (&self.witness, &self.blockage) {
            (Some(t), _) => format!("active trail: {t}"),
            (None, Some(b)) => {
                let mut parts = Vec::new();
                if !b.conditioned.is_empty() {
                    parts.push(format!("blocked at conditioned nodes {{{}}}", b.conditioned.join(", ")));
                }
                if !b.colliders.is_empty() {
                    parts.push(format!("blocked at unconditioned colliders {{{}}}", b.colliders.join(", ")));
                }
                parts.push(format!("reachable from {}: {{{}}}", self.candidate, b.reachable.join(", ")));
                parts.join("; ")
            }
            (None, None) => String::new(),
        }
    }
}

/// Whether the candidate (unlabeled covariates by default) can change the
/// predictive distribution of the target, decided by d-separation given the
/// observed nodes and `x*`.
pub fn unlabeled_relevant(spec: &ModelSpecGraph) -> Result<RelevanceVerdict> {
    let (cand, target) = (spec.candidate(), spec.target());
    if !spec.contains(cand) {
        return Err(Error::InvalidQuery(format!("candidate '{cand}' is not in the graph")));
    }
    let z = spec.query_conditioning();
    let separated = spec.d_separated(cand, target, &z)?;
    let (witness, blockage) = if separated {
        (None, Some(spec.dag().blockage(cand, &z)?))
    } else {
        (spec.dag().active_trail(cand, target, &z)?, None)
    };
    Ok(RelevanceVerdict {
        relevant: !separated,
        candidate: cand.into(),
        target: target.into(),
        conditioning: z.iter().map(|s| s.to_string()).collect(),
        witness,
        blockage,
    })
}

/// A named model from the catalogue of analysed cases.
#[derive(Clone, Debug)]
pub struct CatalogueCase {
    pub name: &'static str,
    pub flags: DesignFlags,
    pub expected_relevant: bool,
}

impl CatalogueCase {
    pub fn spec(&self) -> Result<ModelSpecGraph> {
        build_standard_spec(self.flags)
    }
}

/// Catalogue of model classes with known verdicts, all under the design
/// with labeled pairs plus unlabeled covariates.
pub fn verdict_catalogue() -> Vec<CatalogueCase> {
    let base = DesignFlags { labeled: true, unlabeled_x: true, ..DesignFlags::default() };
    let dependent = DesignFlags { prior_dependent: true, ..base };
    let case = |name, flags, expected_relevant| CatalogueCase { name, flags, expected_relevant };
    vec![
        case("normal-mixture-direct-independent-prior", base, false),
        case("normal-mixture-normal-inverse-wishart", base, false),
        case("normal-mixture-other-covariance-prior", dependent, true),
        case("binary-cell-product-beta", base, false),
        case("binary-cell-single-dirichlet", base, false),
        case("binary-cell-dirichlet-mixture", dependent, true),
        case("factor-regression-known-loadings", DesignFlags { hyper_known: true, ..dependent }, false),
        case("factor-regression-uncertain-loadings", dependent, true),
        case("kernel-regression", DesignFlags { shared_parameters: true, ..base }, true),
    ]
}
