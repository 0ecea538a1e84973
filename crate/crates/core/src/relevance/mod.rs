//! Graph analysis of whether unlabeled covariates can affect prediction.
//!
//! A model factorization is declared as a DAG over data and parameter
//! nodes. Unlabeled covariates are relevant for predicting `y*` exactly when
//! they are d-connected to `y*` given the observed data and `x*`.

mod dag;
mod spec;

pub use dag::{Blockage, Dag, Trail, UndirectedGraph};
pub use spec::{
    build_standard_spec, unlabeled_relevant, verdict_catalogue, CatalogueCase, DesignFlags, ModelSpecGraph, QuerySpec,
    RelevanceVerdict, SpecFile, DATA_NODES, HYPER, PHI, THETA, X_M, X_STAR, Y_STAR,
};
