//! Self-describing result records and their serialized forms.

use revmix_core::{Error, Result};
use serde::Serialize;
use serde_json::Value;
use std::collections::BTreeMap;
use std::io::Write;

/// One logical result. `params` echoes the resolved inputs, `values` holds
/// the outputs; both use sorted keys so serialization is stable.
#[derive(Clone, Debug, Serialize)]
pub struct ResultRecord {
    pub experiment: String,
    pub params: BTreeMap<String, Value>,
    pub values: BTreeMap<String, Value>,
    pub method: String,
    pub residual: Option<f64>,
    pub tolerance: Option<f64>,
    pub runtime_ms: u64,
    pub seed: u64,
    pub version: String,
}

impl ResultRecord {
    pub fn new(experiment: &str, seed: u64) -> Self {
        ResultRecord {
            experiment: experiment.to_string(),
            params: BTreeMap::new(),
            values: BTreeMap::new(),
            method: "exact".to_string(),
            residual: None,
            tolerance: None,
            runtime_ms: 0,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn param(mut self, key: &str, v: impl Serialize) -> Self {
        self.params.insert(key.to_string(), to_value(v));
        self
    }

    pub fn value(mut self, key: &str, v: impl Serialize) -> Self {
        self.values.insert(key.to_string(), to_value(v));
        self
    }

    pub fn method(mut self, m: &str) -> Self {
        self.method = m.to_string();
        self
    }

    pub fn residual(mut self, r: f64) -> Self {
        self.residual = Some(r);
        self
    }

    pub fn tolerance(mut self, t: f64) -> Self {
        self.tolerance = Some(t);
        self
    }
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("record fields are plain data")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutFormat {
    Jsonl,
    Csv,
}

/// Write records to `out`. CSV keeps one row per record with the nested
/// params/values maps embedded as JSON text, so rows stay self-describing.
pub fn write_records(records: &[ResultRecord], format: OutFormat, out: &mut dyn Write) -> Result<()> {
    match format {
        OutFormat::Jsonl => {
            for r in records {
                let line = serde_json::to_string(r).map_err(|e| Error::Parse(e.to_string()))?;
                writeln!(out, "{line}")?;
            }
        }
        OutFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record([
                "experiment",
                "params",
                "values",
                "method",
                "residual",
                "tolerance",
                "runtime_ms",
                "seed",
                "version",
            ])
            .map_err(|e| Error::Parse(e.to_string()))?;
            for r in records {
                let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
                w.write_record([
                    r.experiment.clone(),
                    serde_json::to_string(&r.params).map_err(|e| Error::Parse(e.to_string()))?,
                    serde_json::to_string(&r.values).map_err(|e| Error::Parse(e.to_string()))?,
                    r.method.clone(),
                    opt(r.residual),
                    opt(r.tolerance),
                    r.runtime_ms.to_string(),
                    r.seed.to_string(),
                    r.version.clone(),
                ])
                .map_err(|e| Error::Parse(e.to_string()))?;
            }
            w.flush()?;
        }
    }
    Ok(())
}
