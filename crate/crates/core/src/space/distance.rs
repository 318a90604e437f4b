//! Weighted tree distance, ε-neighborhoods and the Hausdorff lift to bundles.

use serde::{Deserialize, Serialize};

use super::encoding::{component_discrepancy, encode_tree, Descriptor, EncodingError, EncodingSpec};
use crate::tree::model::ScenarioTree;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceSpec {
    pub encoding: EncodingSpec,
    /// One non-negative weight per component.
    pub weights: Vec<f64>,
}

impl DistanceSpec {
    pub fn new(encoding: EncodingSpec, weights: Vec<f64>) -> Result<Self, EncodingError> {
        let spec = DistanceSpec { encoding, weights };
        spec.check()?;
        Ok(spec)
    }

    /// Equal weights summing to one.
    pub fn uniform(encoding: EncodingSpec) -> Result<Self, EncodingError> {
        let n = encoding.components.len();
        Self::new(encoding, vec![1.0 / n.max(1) as f64; n])
    }

    pub fn check(&self) -> Result<(), EncodingError> {
        self.encoding.check()?;
        if self.weights.len() != self.encoding.components.len() {
            return Err(EncodingError::WeightCount { weights: self.weights.len(), components: self.encoding.components.len() });
        }
        if let Some(w) = self.weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(EncodingError::Weight(*w));
        }
        Ok(())
    }

    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self, EncodingError> {
        Self::new(self.encoding.clone(), weights)
    }
}

/// Per-component discrepancies between two descriptors.
pub fn component_distances(a: &Descriptor, b: &Descriptor, spec: &DistanceSpec) -> Result<Vec<f64>, EncodingError> {
    if a.stage != b.stage {
        return Err(EncodingError::StageMismatch(a.tree.clone(), b.tree.clone()));
    }
    Ok(spec
        .encoding
        .components
        .iter()
        .zip(a.components.iter().zip(&b.components))
        .map(|(c, (x, y))| component_discrepancy(c, x, y))
        .collect())
}

pub fn descriptor_distance(a: &Descriptor, b: &Descriptor, spec: &DistanceSpec) -> Result<f64, EncodingError> {
    let parts = component_distances(a, b, spec)?;
    Ok(parts.iter().zip(&spec.weights).map(|(d, w)| w * d).sum())
}

pub fn tree_distance(a: &ScenarioTree, b: &ScenarioTree, spec: &DistanceSpec) -> Result<f64, EncodingError> {
    spec.check()?;
    if a.stage != b.stage {
        return Err(EncodingError::StageMismatch(a.id.clone(), b.id.clone()));
    }
    descriptor_distance(&encode_tree(a, &spec.encoding)?, &encode_tree(b, &spec.encoding)?, spec)
}

/// Ids of the candidates strictly closer than `epsilon` to `center`.
pub fn epsilon_neighborhood(
    center: &ScenarioTree,
    epsilon: f64,
    candidates: &[ScenarioTree],
    spec: &DistanceSpec,
) -> Result<Vec<String>, EncodingError> {
    let c = encode_tree(center, &spec.encoding)?;
    let mut out = Vec::new();
    for t in candidates {
        if t.stage != center.stage {
            return Err(EncodingError::StageMismatch(center.id.clone(), t.id.clone()));
        }
        if descriptor_distance(&c, &encode_tree(t, &spec.encoding)?, spec)? < epsilon {
            out.push(t.id.clone());
        }
    }
    Ok(out)
}

/// Largest distance from a member of `from` to its nearest member of `to`.
pub fn directed_distance(from: &[Descriptor], to: &[Descriptor], spec: &DistanceSpec) -> Result<f64, EncodingError> {
    let mut worst: f64 = 0.0;
    for a in from {
        let mut nearest = f64::INFINITY;
        for b in to {
            nearest = nearest.min(descriptor_distance(a, b, spec)?);
        }
        worst = worst.max(nearest);
    }
    Ok(worst)
}

pub fn descriptor_bundle_distance(a: &[Descriptor], b: &[Descriptor], spec: &DistanceSpec) -> Result<f64, EncodingError> {
    if a.is_empty() || b.is_empty() {
        return Err(EncodingError::EmptyBundle);
    }
    Ok(directed_distance(a, b, spec)?.max(directed_distance(b, a, spec)?))
}

pub fn bundle_distance<'a, I, J>(a: I, b: J, spec: &DistanceSpec) -> Result<f64, EncodingError>
where
    I: IntoIterator<Item = &'a ScenarioTree>,
    J: IntoIterator<Item = &'a ScenarioTree>,
{
    spec.check()?;
    let enc = |trees: Vec<&ScenarioTree>| -> Result<Vec<Descriptor>, EncodingError> {
        trees.into_iter().map(|t| encode_tree(t, &spec.encoding)).collect()
    };
    let (a, b) = (enc(a.into_iter().collect())?, enc(b.into_iter().collect())?);
    descriptor_bundle_distance(&a, &b, spec)
}

/// Pairwise distance matrix over a tree list, in list order.
pub fn distance_matrix(trees: &[ScenarioTree], spec: &DistanceSpec) -> Result<Vec<Vec<f64>>, EncodingError> {
    let ds: Vec<Descriptor> = trees.iter().map(|t| encode_tree(t, &spec.encoding)).collect::<Result<_, _>>()?;
    ds.iter().map(|a| ds.iter().map(|b| descriptor_distance(a, b, spec)).collect()).collect()
}
