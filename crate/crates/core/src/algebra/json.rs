//! JSON algebra documents with 1-based indices:
//! `{ "n": 4, "unit_index": 1, "entries": [ {"k":1,"i":1,"j":1,"value":1}, … ] }`.

use serde::{Deserialize, Serialize};

use super::StructureConstants;
use crate::error::{Error, Result};
use crate::tensor::Tensor3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgebraEntry {
    pub k: usize,
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgebraDocument {
    pub n: usize,
    #[serde(default)]
    pub unit_index: Option<usize>,
    /// Unit in coordinates, for bases where no basis element is the unit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub entries: Vec<AlgebraEntry>,
}

impl AlgebraDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Invalid(format!("algebra document: {e}")))
    }

    pub fn build(&self) -> Result<StructureConstants> {
        let n = self.n;
        if n == 0 {
            return Err(Error::Invalid("algebra dimension must be positive".into()));
        }
        let mut p = Tensor3::zeros(n);
        for e in &self.entries {
            for (name, idx) in [("k", e.k), ("i", e.i), ("j", e.j)] {
                if idx == 0 || idx > n {
                    return Err(Error::Invalid(format!("entry index {name} = {idx} outside 1..={n}")));
                }
            }
            if !e.value.is_finite() {
                return Err(Error::Invalid("non-finite structure constant".into()));
            }
            p[(e.k - 1, e.i - 1, e.j - 1)] = e.value;
        }
        let tag = self.name.clone().unwrap_or_else(|| format!("user-{n}"));
        match (&self.unit, self.unit_index) {
            (Some(_), Some(_)) => Err(Error::Invalid("give either `unit` or `unit_index`, not both".into())),
            (Some(u), None) => StructureConstants::with_unit(tag.as_str(), p, Some(u.clone())),
            (None, Some(0)) => Err(Error::Invalid("unit_index is 1-based".into())),
            (None, ui) => StructureConstants::new(tag.as_str(), p, ui.map(|u| u - 1)),
        }
    }

    /// Lists every nonzero constant of `s`.
    pub fn from_constants(s: &StructureConstants) -> Self {
        let n = s.n();
        let mut entries = Vec::new();
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let v = s.p(k, i, j);
                    if v != 0.0 {
                        entries.push(AlgebraEntry { k: k + 1, i: i + 1, j: j + 1, value: v });
                    }
                }
            }
        }
        let unit_index = s.unit_index().map(|u| u + 1);
        let unit = match unit_index {
            Some(_) => None,
            None => s.unit().map(<[f64]>::to_vec),
        };
        Self { n, unit_index, unit, name: Some(s.tag().to_string()), entries }
    }
}
