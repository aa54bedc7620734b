//! Demand matrix: an N x N CSV of Gbps plus a JSON sidecar assigning a
//! traffic model to every entry.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TrafficModel;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Sidecar JSON: named models, an optional default tag, and an optional
/// per-entry assignment (empty string = unassigned, allowed only where the
/// demand is zero or a default exists).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrafficModelsDoc<F> {
    pub models: BTreeMap<String, TrafficModel<F>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_tag: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assignment: Option<Vec<Vec<String>>>,
}

/// Validated demand matrix with per-entry model tags.
#[derive(Debug, Clone)]
pub struct TrafficMatrix<F> {
    demand_gbps: Vec<Vec<F>>,
    tags: Vec<Vec<Option<String>>>,
    models: BTreeMap<String, TrafficModel<F>>,
}

impl<F: Scalar> TrafficMatrix<F> {
    pub fn num_nodes(&self) -> usize {
        self.demand_gbps.len()
    }

    pub fn demand_gbps(&self, s: usize, d: usize) -> F {
        self.demand_gbps[s][d]
    }

    pub fn model_tag(&self, s: usize, d: usize) -> Option<&str> {
        self.tags[s][d].as_deref()
    }

    pub fn model(&self, tag: &str) -> Option<&TrafficModel<F>> {
        self.models.get(tag)
    }

    pub fn models(&self) -> &BTreeMap<String, TrafficModel<F>> {
        &self.models
    }

    /// Builds and validates a matrix from raw demands and a sidecar.
    pub fn from_parts(demand_gbps: Vec<Vec<F>>, doc: &TrafficModelsDoc<F>) -> Result<Self> {
        let n = demand_gbps.len();
        let bad = |msg: String| Err(Error::TrafficMatrix(msg));

        for (i, row) in demand_gbps.iter().enumerate() {
            if row.len() != n {
                return bad(format!("row {i} has {} entries, expected {n}", row.len()));
            }
            for (j, v) in row.iter().enumerate() {
                if !v.is_finite() || *v < F::zero() {
                    return bad(format!("entry ({i}, {j}) is not a non-negative finite rate"));
                }
            }
            if demand_gbps[i][i] != F::zero() {
                return bad(format!("diagonal entry ({i}, {i}) must be zero"));
            }
        }

        for (tag, model) in &doc.models {
            model.validate(tag)?;
            if model.mean_rate_gbps() <= F::zero() {
                return Err(Error::TrafficModel {
                    tag: tag.clone(),
                    reason: "mean rate must be positive".into(),
                });
            }
        }
        if let Some(default) = &doc.default_tag {
            if !doc.models.contains_key(default) {
                return bad(format!("default_tag `{default}` is not a defined model"));
            }
        }
        if let Some(assignment) = &doc.assignment {
            if assignment.len() != n || assignment.iter().any(|row| row.len() != n) {
                return bad(format!("assignment must be {n} x {n}"));
            }
        }

        let mut tags = vec![vec![None; n]; n];
        for s in 0..n {
            for d in 0..n {
                let assigned = doc
                    .assignment
                    .as_ref()
                    .map(|a| a[s][d].as_str())
                    .filter(|t| !t.is_empty());
                let tag = assigned.or(doc.default_tag.as_deref());
                match tag {
                    Some(t) if doc.models.contains_key(t) => {
                        tags[s][d] = Some(t.to_string());
                    }
                    Some(t) => {
                        return bad(format!("entry ({s}, {d}) uses unknown model tag `{t}`"));
                    }
                    None if demand_gbps[s][d] > F::zero() => {
                        return bad(format!("entry ({s}, {d}) has demand but no model tag"));
                    }
                    None => {}
                }
            }
        }

        Ok(Self {
            demand_gbps,
            tags,
            models: doc.models.clone(),
        })
    }
}

/// Loads the CSV matrix and its JSON sidecar. With `models_path` absent the
/// sidecar is looked up next to the CSV under `<stem>.models.json`.
pub fn load_traffic_matrix<F: Scalar + serde::de::DeserializeOwned>(
    csv_path: &Path,
    models_path: Option<&Path>,
) -> Result<TrafficMatrix<F>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(csv_path)?;
    let mut demand = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row: Vec<F> = record
            .iter()
            .map(|cell| {
                cell.parse::<f64>()
                    .map(F::from_f64_lossy)
                    .map_err(|e| Error::TrafficMatrix(format!("bad rate `{cell}`: {e}")))
            })
            .collect::<Result<_>>()?;
        demand.push(row);
    }

    let sidecar = match models_path {
        Some(p) => p.to_path_buf(),
        None => csv_path.with_extension("models.json"),
    };
    let text = std::fs::read_to_string(&sidecar)?;
    let doc: TrafficModelsDoc<F> = serde_json::from_str(&text)?;
    TrafficMatrix::from_parts(demand, &doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traffic::{MgInfParams, OnOffParams};

    fn models() -> TrafficModelsDoc<f64> {
        let mut models = BTreeMap::new();
        models.insert(
            "audio-unitary".to_string(),
            TrafficModel::OnOff(OnOffParams {
                peak_gbps: 0.064,
                mean_on_s: 1.0,
                mean_off_s: 1.5,
            }),
        );
        models.insert(
            "video".to_string(),
            TrafficModel::MgInf(MgInfParams {
                lambda_per_s: 2.0,
                pareto_alpha: 1.5,
                pareto_xmin_s: 1.0,
                unit_gbps: 0.1,
            }),
        );
        TrafficModelsDoc {
            models,
            default_tag: Some("audio-unitary".to_string()),
            assignment: None,
        }
    }

    #[test]
    fn valid_matrix_resolves_default_tags() {
        let m = TrafficMatrix::from_parts(
            vec![vec![0.0, 1.0], vec![0.5, 0.0]],
            &models(),
        )
        .unwrap();
        assert_eq!(m.model_tag(0, 1), Some("audio-unitary"));
        assert!(m.model("video").is_some());
    }

    #[test]
    fn nonzero_diagonal_rejected() {
        let err = TrafficMatrix::from_parts(vec![vec![1.0]], &models()).unwrap_err();
        assert!(matches!(err, Error::TrafficMatrix(_)));
    }

    #[test]
    fn unknown_tag_rejected() {
        let mut doc = models();
        doc.assignment = Some(vec![
            vec![String::new(), "bogus".to_string()],
            vec![String::new(), String::new()],
        ]);
        let err = TrafficMatrix::from_parts(vec![vec![0.0, 1.0], vec![0.0, 0.0]], &doc)
            .unwrap_err();
        assert!(matches!(err, Error::TrafficMatrix(_)));
    }

    #[test]
    fn demand_without_tag_rejected() {
        let mut doc = models();
        doc.default_tag = None;
        let err =
            TrafficMatrix::from_parts(vec![vec![0.0, 1.0], vec![0.0, 0.0]], &doc).unwrap_err();
        assert!(matches!(err, Error::TrafficMatrix(_)));
    }

    #[test]
    fn sidecar_round_trips_through_json() {
        let doc = models();
        let text = serde_json::to_string(&doc).unwrap();
        let back: TrafficModelsDoc<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(doc.models, back.models);
    }
}
