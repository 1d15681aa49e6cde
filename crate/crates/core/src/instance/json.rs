//! The JSON instance file format.
//!
//! Parameter tables are nested maps keyed by entity id and by 1-based period
//! strings. Every entry of every table must be present; unknown keys are
//! rejected as well so that typos do not silently fall back to zero.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::{Instance, InstanceError};

type ByKey<T> = BTreeMap<String, T>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub antigens: Vec<String>,
    pub vaccines: Vec<String>,
    pub producers: Vec<String>,
    pub num_periods: usize,
    /// vaccine -> antigens it contains
    pub vaccine_antigens: ByKey<Vec<String>>,
    /// vaccine -> producers making it
    pub producer_vaccines: ByKey<Vec<String>>,
    pub params: ParamsFile,
    pub scalars: ScalarsFile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    pub demand: ByKey<ByKey<f64>>,
    pub capacity: ByKey<ByKey<f64>>,
    pub roi: ByKey<ByKey<f64>>,
    pub setup_cost: ByKey<ByKey<ByKey<f64>>>,
    pub holding_rate: ByKey<f64>,
    pub reservation_price: ByKey<ByKey<ByKey<f64>>>,
    pub avg_price: ByKey<ByKey<f64>>,
    pub tender_setup_cost: ByKey<f64>,
    pub capacity_ext_cost: ByKey<f64>,
    pub initial_unvaccinated: ByKey<f64>,
    pub initial_inventory: ByKey<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarsFile {
    pub beta: f64,
    pub delta: f64,
    pub kappa: f64,
    #[serde(default = "default_tender_len")]
    pub max_tender_len: usize,
}

fn default_tender_len() -> usize {
    5
}

pub fn instance_from_json(text: &str) -> Result<Instance, InstanceError> {
    let file: InstanceFile = serde_json::from_str(text)?;
    file.into_instance()
}

pub fn instance_from_reader(reader: impl Read) -> Result<Instance, InstanceError> {
    let file: InstanceFile = serde_json::from_reader(reader)?;
    file.into_instance()
}

pub fn instance_to_json(inst: &Instance) -> InstanceFile {
    InstanceFile::from_instance(inst)
}

/// Resolves the string keys of a map against one index set.
struct Keys<'a> {
    what: &'a str,
    names: Vec<String>,
}

impl<'a> Keys<'a> {
    fn names(what: &'a str, names: &[String]) -> Self {
        Keys { what, names: names.to_vec() }
    }

    fn periods(n: usize) -> Self {
        Keys { what: "period", names: (1..=n).map(|t| t.to_string()).collect() }
    }

    /// Values of `map` in index order; any missing or unknown key is an error.
    fn dense<T: Clone>(&self, path: &str, map: &ByKey<T>) -> Result<Vec<T>, InstanceError> {
        if let Some(extra) = map.keys().find(|k| !self.names.contains(k)) {
            return Err(InstanceError::field(format!("{path}.{extra}"), format!("unknown {}", self.what)));
        }
        self.names
            .iter()
            .map(|k| map.get(k).cloned().ok_or_else(|| InstanceError::field(format!("{path}.{k}"), "missing entry")))
            .collect()
    }

    /// Like [`Keys::dense`] but only a subset of keys is required; the rest
    /// are filled with `fill` and must not appear in the map.
    fn subset<T: Clone>(
        &self,
        path: &str,
        map: &ByKey<T>,
        required: &[usize],
        fill: T,
    ) -> Result<Vec<T>, InstanceError> {
        let mut out = vec![fill; self.names.len()];
        for key in map.keys() {
            match self.names.iter().position(|n| n == key) {
                Some(i) if required.contains(&i) => {}
                Some(_) => {
                    return Err(InstanceError::field(
                        format!("{path}.{key}"),
                        format!("{} does not make this vaccine", self.what),
                    ))
                }
                None => return Err(InstanceError::field(format!("{path}.{key}"), format!("unknown {}", self.what))),
            }
        }
        for &i in required {
            let k = &self.names[i];
            out[i] = map.get(k).cloned().ok_or_else(|| InstanceError::field(format!("{path}.{k}"), "missing entry"))?;
        }
        Ok(out)
    }

    fn resolve(&self, path: &str, name: &str) -> Result<usize, InstanceError> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| InstanceError::field(path, format!("unknown {} {name:?}", self.what)))
    }
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<Instance, InstanceError> {
        let antigens = Keys::names("antigen", &self.antigens);
        let vaccines = Keys::names("vaccine", &self.vaccines);
        let producers = Keys::names("producer", &self.producers);
        let periods = Keys::periods(self.num_periods);
        let p = &self.params;

        let vaccine_antigens = vaccines
            .dense("vaccine_antigens", &self.vaccine_antigens)?
            .into_iter()
            .zip(&self.vaccines)
            .map(|(names, v)| resolve_all(&antigens, &format!("vaccine_antigens.{v}"), &names))
            .collect::<Result<Vec<_>, _>>()?;
        let vaccine_producers = vaccines
            .dense("producer_vaccines", &self.producer_vaccines)?
            .into_iter()
            .zip(&self.vaccines)
            .map(|(names, v)| resolve_all(&producers, &format!("producer_vaccines.{v}"), &names))
            .collect::<Result<Vec<_>, _>>()?;

        let per_period = |path: &str, keys: &Keys, map: &ByKey<ByKey<f64>>| -> Result<Vec<Vec<f64>>, InstanceError> {
            keys.dense(path, map)?
                .iter()
                .zip(&keys.names)
                .map(|(row, k)| periods.dense(&format!("{path}.{k}"), row))
                .collect()
        };

        let demand = per_period("params.demand", &antigens, &p.demand)?;
        let capacity = per_period("params.capacity", &producers, &p.capacity)?;
        let avg_price = per_period("params.avg_price", &vaccines, &p.avg_price)?;

        let roi = vaccines
            .dense("params.roi", &p.roi)?
            .iter()
            .enumerate()
            .map(|(v, row)| {
                let path = format!("params.roi.{}", self.vaccines[v]);
                producers.subset(&path, row, &vaccine_producers[v], 0.0)
            })
            .collect::<Result<Vec<_>, _>>()?;

        let cube = |name: &str, map: &ByKey<ByKey<ByKey<f64>>>| -> Result<Vec<Vec<Vec<f64>>>, InstanceError> {
            let path = format!("params.{name}");
            vaccines
                .dense(&path, map)?
                .iter()
                .enumerate()
                .map(|(v, by_producer)| {
                    let vpath = format!("{path}.{}", self.vaccines[v]);
                    let rows = producers.subset(&vpath, by_producer, &vaccine_producers[v], ByKey::new())?;
                    rows.iter()
                        .enumerate()
                        .map(|(pi, row)| {
                            if vaccine_producers[v].contains(&pi) {
                                periods.dense(&format!("{vpath}.{}", self.producers[pi]), row)
                            } else {
                                Ok(vec![0.0; self.num_periods])
                            }
                        })
                        .collect()
                })
                .collect()
        };
        let setup_cost = cube("setup_cost", &p.setup_cost)?;
        let reservation_price = cube("reservation_price", &p.reservation_price)?;

        Ok(Instance {
            name: self.name.unwrap_or_else(|| "instance".into()),
            num_periods: self.num_periods,
            vaccine_antigens,
            vaccine_producers,
            demand,
            capacity,
            roi,
            setup_cost,
            holding_rate: vaccines.dense("params.holding_rate", &p.holding_rate)?,
            reservation_price,
            avg_price,
            tender_setup_cost: periods.dense("params.tender_setup_cost", &p.tender_setup_cost)?,
            capacity_ext_cost: producers.dense("params.capacity_ext_cost", &p.capacity_ext_cost)?,
            capacity_ext_rate: self.scalars.kappa,
            initial_unvaccinated: antigens.dense("params.initial_unvaccinated", &p.initial_unvaccinated)?,
            initial_inventory: vaccines.dense("params.initial_inventory", &p.initial_inventory)?,
            shortage_penalty: self.scalars.beta,
            discount: self.scalars.delta,
            max_tender_len: self.scalars.max_tender_len,
            antigens: self.antigens,
            vaccines: self.vaccines,
            producers: self.producers,
        })
    }

    pub fn from_instance(inst: &Instance) -> Self {
        let period_map =
            |row: &[f64]| -> ByKey<f64> { row.iter().enumerate().map(|(i, &x)| ((i + 1).to_string(), x)).collect() };
        let by_name = |names: &[String], rows: &[Vec<f64>]| -> ByKey<ByKey<f64>> {
            names.iter().cloned().zip(rows.iter().map(|r| period_map(r))).collect()
        };
        let scalar_map = |names: &[String], values: &[f64]| -> ByKey<f64> {
            names.iter().cloned().zip(values.iter().copied()).collect()
        };
        let cube = |table: &[Vec<Vec<f64>>]| -> ByKey<ByKey<ByKey<f64>>> {
            inst.vaccines
                .iter()
                .enumerate()
                .map(|(v, name)| {
                    let inner = inst.vaccine_producers[v]
                        .iter()
                        .map(|&p| (inst.producers[p].clone(), period_map(&table[v][p])))
                        .collect();
                    (name.clone(), inner)
                })
                .collect()
        };
        let names_of = |all: &[String], idx: &[usize]| -> Vec<String> { idx.iter().map(|&i| all[i].clone()).collect() };

        InstanceFile {
            name: Some(inst.name.clone()),
            antigens: inst.antigens.clone(),
            vaccines: inst.vaccines.clone(),
            producers: inst.producers.clone(),
            num_periods: inst.num_periods,
            vaccine_antigens: inst
                .vaccines
                .iter()
                .cloned()
                .zip(inst.vaccine_antigens.iter().map(|s| names_of(&inst.antigens, s)))
                .collect(),
            producer_vaccines: inst
                .vaccines
                .iter()
                .cloned()
                .zip(inst.vaccine_producers.iter().map(|s| names_of(&inst.producers, s)))
                .collect(),
            params: ParamsFile {
                demand: by_name(&inst.antigens, &inst.demand),
                capacity: by_name(&inst.producers, &inst.capacity),
                roi: inst
                    .vaccines
                    .iter()
                    .enumerate()
                    .map(|(v, name)| {
                        let inner = inst.vaccine_producers[v]
                            .iter()
                            .map(|&p| (inst.producers[p].clone(), inst.roi[v][p]))
                            .collect();
                        (name.clone(), inner)
                    })
                    .collect(),
                setup_cost: cube(&inst.setup_cost),
                holding_rate: scalar_map(&inst.vaccines, &inst.holding_rate),
                reservation_price: cube(&inst.reservation_price),
                avg_price: by_name(&inst.vaccines, &inst.avg_price),
                tender_setup_cost: period_map(&inst.tender_setup_cost),
                capacity_ext_cost: scalar_map(&inst.producers, &inst.capacity_ext_cost),
                initial_unvaccinated: scalar_map(&inst.antigens, &inst.initial_unvaccinated),
                initial_inventory: scalar_map(&inst.vaccines, &inst.initial_inventory),
            },
            scalars: ScalarsFile {
                beta: inst.shortage_penalty,
                delta: inst.discount,
                kappa: inst.capacity_ext_rate,
                max_tender_len: inst.max_tender_len,
            },
        }
    }
}

fn resolve_all(keys: &Keys, path: &str, names: &[String]) -> Result<Vec<usize>, InstanceError> {
    let mut out = names.iter().map(|n| keys.resolve(path, n)).collect::<Result<Vec<_>, _>>()?;
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::builder::single;

    fn roundtrip_text(inst: &Instance) -> String {
        serde_json::to_string_pretty(&instance_to_json(inst)).unwrap()
    }

    #[test]
    fn file_roundtrip_preserves_instance() {
        let mut inst = single(4);
        inst.demand[0][2] = 17.5;
        inst.capacity_ext_rate = 0.2;
        let back = instance_from_json(&roundtrip_text(&inst)).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn missing_parameter_entry_is_an_error() {
        let text = roundtrip_text(&single(3));
        let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
        value["params"]["demand"]["A"].as_object_mut().unwrap().remove("2");
        let err = instance_from_json(&value.to_string()).unwrap_err();
        assert!(err.to_string().contains("params.demand.A.2: missing entry"), "{err}");
    }

    #[test]
    fn unknown_period_is_an_error() {
        let text = roundtrip_text(&single(3));
        let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
        value["params"]["tender_setup_cost"]["4"] = 1.0.into();
        let err = instance_from_json(&value.to_string()).unwrap_err();
        assert!(err.to_string().contains("unknown period"), "{err}");
    }

    #[test]
    fn unknown_top_level_key_is_an_error() {
        let text = roundtrip_text(&single(3));
        let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
        value["extra"] = 1.into();
        assert!(instance_from_json(&value.to_string()).is_err());
    }

    #[test]
    fn syntax_error_carries_location() {
        let err = instance_from_json("{\n  \"antigens\": [,]\n}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn max_tender_len_defaults_to_five() {
        let text = roundtrip_text(&single(3));
        let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
        value["scalars"].as_object_mut().unwrap().remove("max_tender_len");
        let inst = instance_from_json(&value.to_string()).unwrap();
        assert_eq!(inst.max_tender_len, 5);
    }
}
