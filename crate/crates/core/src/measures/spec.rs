//! JSON measure specifications, the input format of every `wq` command.
//!
//! ```json
//! {"type": "uniform_box", "bounds": [[0, 1], [0, 1]]}
//! {"type": "piecewise", "bounds": [[0, 1]], "resolution": [2], "values": [1, 8]}
//! {"type": "piecewise", "bounds": [[0, 1]], "resolution": [4096], "affine": {"offset": 0, "gradient": [2]}}
//! {"type": "cantor"}
//! {"type": "discrete", "points": [[0], [1]], "masses": [0.5, 0.5]}
//! {"type": "mixture", "components": [{"weight": 0.5, "measure": {"type": "cantor"}}, …]}
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CantorMeasure, DiscreteMeasure, GriddedDensity, Measure, Mixture};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MeasureSpec {
    UniformBox {
        bounds: Vec<[f64; 2]>,
    },
    Piecewise {
        bounds: Vec<[f64; 2]>,
        resolution: Vec<usize>,
        /// Row-major cell values, last axis fastest.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        values: Option<Vec<f64>>,
        /// Affine density sampled at cell centres, used when `values` is absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        affine: Option<AffineSpec>,
    },
    Cantor {},
    Discrete {
        points: Vec<Vec<f64>>,
        masses: Vec<f64>,
    },
    Mixture {
        components: Vec<ComponentSpec>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineSpec {
    pub offset: f64,
    pub gradient: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpec {
    pub weight: f64,
    pub measure: MeasureSpec,
}

impl MeasureSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn build(&self) -> Result<Measure> {
        Ok(match self {
            MeasureSpec::UniformBox { bounds } => GriddedDensity::uniform(bounds.clone())?.into(),
            MeasureSpec::Piecewise { bounds, resolution, values, affine } => match (values, affine) {
                (Some(v), None) => GriddedDensity::new(bounds.clone(), resolution.clone(), v.clone())?.into(),
                (None, Some(a)) => {
                    GriddedDensity::affine(bounds.clone(), resolution.clone(), a.offset, &a.gradient)?.into()
                }
                _ => return Err(invalid!("piecewise spec needs exactly one of `values` or `affine`")),
            },
            MeasureSpec::Cantor {} => CantorMeasure.into(),
            MeasureSpec::Discrete { points, masses } => {
                if points.len() != masses.len() {
                    return Err(invalid!("{} points but {} masses", points.len(), masses.len()));
                }
                DiscreteMeasure::new(points.clone(), masses.clone())?.into()
            }
            MeasureSpec::Mixture { components } => {
                let parts = components
                    .iter()
                    .map(|c| Ok((c.weight, c.measure.build()?)))
                    .collect::<Result<Vec<_>>>()?;
                Mixture::new(parts)?.into()
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_kind() {
        let texts = [
            r#"{"type":"uniform_box","bounds":[[0,1],[0,1]]}"#,
            r#"{"type":"piecewise","bounds":[[0,1]],"resolution":[2],"values":[1,8]}"#,
            r#"{"type":"piecewise","bounds":[[0,1]],"resolution":[64],"affine":{"offset":0,"gradient":[2]}}"#,
            r#"{"type":"cantor"}"#,
            r#"{"type":"discrete","points":[[0],[1]],"masses":[0.5,0.5]}"#,
            r#"{"type":"mixture","components":[{"weight":0.5,"measure":{"type":"cantor"}},
               {"weight":0.5,"measure":{"type":"uniform_box","bounds":[[2,3]]}}]}"#,
        ];
        for t in texts {
            let spec = MeasureSpec::from_json(t).unwrap();
            let m = spec.build().unwrap();
            assert!(m.total_mass() > 0.0);
            let again = MeasureSpec::from_json(&serde_json::to_string(&spec).unwrap()).unwrap();
            assert_eq!(again, spec);
        }
    }

    #[test]
    fn rejects_malformed() {
        assert!(MeasureSpec::from_json(r#"{"type":"sphere"}"#).is_err());
        let both = r#"{"type":"piecewise","bounds":[[0,1]],"resolution":[1],"values":[1],"affine":{"offset":1,"gradient":[0]}}"#;
        assert!(MeasureSpec::from_json(both).unwrap().build().is_err());
        let mismatch = r#"{"type":"discrete","points":[[0],[1]],"masses":[1]}"#;
        assert!(MeasureSpec::from_json(mismatch).unwrap().build().is_err());
    }
}
