//! JSON dump of a model for debugging. Infinite bounds are written as `null`.

use serde::{Deserialize, Serialize};

use super::{Column, Integrality, MilpModel, ModelError, Objective, Row};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpColumn {
    pub name: String,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub integrality: Integrality,
    pub priority: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDump {
    pub name: String,
    pub columns: Vec<DumpColumn>,
    pub rows: Vec<Row>,
    pub objective: Objective,
}

pub fn model_to_dump(model: &MilpModel) -> ModelDump {
    let finite = |x: f64| x.is_finite().then_some(x);
    ModelDump {
        name: model.name.clone(),
        columns: model
            .columns
            .iter()
            .map(|c| DumpColumn {
                name: c.name.clone(),
                lower: finite(c.lower),
                upper: finite(c.upper),
                integrality: c.integrality,
                priority: c.priority,
            })
            .collect(),
        rows: model.rows.clone(),
        objective: model.objective.clone(),
    }
}

/// Rebuild a model from its dump. The semantic variable index is not part of
/// the dump and comes back empty.
pub fn model_from_dump(dump: ModelDump) -> Result<MilpModel, ModelError> {
    let model = MilpModel {
        name: dump.name,
        columns: dump
            .columns
            .into_iter()
            .map(|c| Column {
                name: c.name,
                lower: c.lower.unwrap_or(f64::NEG_INFINITY),
                upper: c.upper.unwrap_or(f64::INFINITY),
                integrality: c.integrality,
                priority: c.priority,
            })
            .collect(),
        rows: dump.rows,
        objective: dump.objective,
        var_index: Default::default(),
    };
    model.check()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::builder::single;
    use crate::model::{build_model, BuildOptions};

    #[test]
    fn dump_roundtrip_keeps_columns_rows_objective() {
        let model = build_model(&single(2), BuildOptions::default()).unwrap();
        let text = serde_json::to_string(&model_to_dump(&model)).unwrap();
        let back = model_from_dump(serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back.columns, model.columns);
        assert_eq!(back.rows, model.rows);
        assert_eq!(back.objective, model.objective);
    }
}
