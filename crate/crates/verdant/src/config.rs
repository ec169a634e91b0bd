//! TOML configuration: technology nodes, accelerator axes, accuracy model,
//! and custom workload files.
//!
//! Resolution order for the tech config: an explicit path, then the
//! `VERDANT_CONFIG` environment variable, then the built-in defaults
//! shipped in `config/tech.toml`.

use std::collections::BTreeMap;
use std::env;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::accuracy::AccuracyModel;
use crate::approxmul::netlist::GateAreaTable;
use crate::carbon::TechNodeParams;
use crate::error::{Error, Result};
use crate::optimizer::{AcceleratorBase, SearchSpace};
use crate::perf::workloads::builtin_workload;
use crate::perf::{AreaParams, LayerKind, LayerShape};

pub const CONFIG_ENV_VAR: &str = "VERDANT_CONFIG";

const BUILTIN_CONFIG: &str = include_str!("../config/tech.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub accelerator: AcceleratorSection,
    pub accuracy: AccuracySection,
    #[serde(default)]
    pub gate_area: GateAreaTable,
    #[serde(rename = "node")]
    pub nodes: Vec<NodeConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceleratorSection {
    pub pe_sizes: Vec<u64>,
    pub regfile_base_bytes_per_pe: u64,
    pub gbuf_base_bytes_per_pe: u64,
    pub rf_scales: Vec<f64>,
    pub gbuf_scales: Vec<f64>,
    pub max_aspect_ratio: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracySection {
    pub mode: String,
    #[serde(default)]
    pub proxy_c0: f64,
    #[serde(default = "default_proxy_c1")]
    pub proxy_c1: f64,
    #[serde(default)]
    pub table: Option<BTreeMap<String, BTreeMap<String, f64>>>,
}

fn default_proxy_c1() -> f64 {
    50.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeConfig {
    pub node_nm: u32,
    pub ci_fab: f64,
    pub epa: f64,
    pub c_gas: f64,
    pub c_material: f64,
    pub cfpa_si: f64,
    pub defect_density: f64,
    pub yield_alpha: f64,
    pub wafer_diameter: f64,
    #[serde(default)]
    pub edge_exclusion_mm: Option<f64>,
    pub area: AreaParams,
    pub perf: PerfSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerfSection {
    pub clock_hz: f64,
    pub dram_bw_bytes_per_cycle: u64,
}

impl NodeConfig {
    pub fn tech(&self) -> TechNodeParams<f64> {
        TechNodeParams {
            node_nm: self.node_nm,
            ci_fab: self.ci_fab,
            epa: self.epa,
            c_gas: self.c_gas,
            c_material: self.c_material,
            cfpa_si: self.cfpa_si,
            defect_density: self.defect_density,
            yield_alpha: self.yield_alpha,
            wafer_diameter: self.wafer_diameter,
            edge_exclusion_mm: self.edge_exclusion_mm,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Config =
            toml::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(Error::Io)?;
        Self::from_toml(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// The defaults compiled into the binary.
    pub fn builtin() -> Self {
        Self::from_toml(BUILTIN_CONFIG).expect("built-in config must be valid")
    }

    /// Explicit path > `VERDANT_CONFIG` > built-in. The environment
    /// variable names the config directory (holding `tech.toml`); a direct
    /// file path is also accepted. Returns the config and a human-readable
    /// description of where it came from.
    pub fn resolve(explicit: Option<&Path>) -> Result<(Self, String)> {
        if let Some(path) = explicit {
            return Ok((Self::load(path)?, path.display().to_string()));
        }
        if let Ok(env_value) = env::var(CONFIG_ENV_VAR) {
            if !env_value.is_empty() {
                let base = Path::new(&env_value);
                let path =
                    if base.is_dir() { base.join("tech.toml") } else { base.to_path_buf() };
                let source = format!("{} (from {CONFIG_ENV_VAR})", path.display());
                return Ok((Self::load(&path)?, source));
            }
        }
        Ok((Self::builtin(), "builtin".to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::Config("config declares no technology nodes".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for node in &self.nodes {
            if !seen.insert(node.node_nm) {
                return Err(Error::Config(format!("duplicate node {}nm", node.node_nm)));
            }
            node.tech().validate()?;
            node.area.validate()?;
            if node.perf.dram_bw_bytes_per_cycle == 0 {
                return Err(Error::Config(format!(
                    "{}nm: DRAM bandwidth must be >= 1 byte/cycle",
                    node.node_nm
                )));
            }
            if !(node.perf.clock_hz.is_finite() && node.perf.clock_hz > 0.0) {
                return Err(Error::Config(format!(
                    "{}nm: clock must be a positive frequency",
                    node.node_nm
                )));
            }
        }
        self.search_space().validate()?;
        if self.accelerator.regfile_base_bytes_per_pe == 0
            || self.accelerator.gbuf_base_bytes_per_pe == 0
        {
            return Err(Error::Config("base memory sizes must be >= 1 byte".into()));
        }
        self.accuracy_model()?;
        Ok(())
    }

    pub fn node(&self, node_nm: u32) -> Result<&NodeConfig> {
        self.nodes.iter().find(|n| n.node_nm == node_nm).ok_or_else(|| {
            let known: Vec<String> =
                self.nodes.iter().map(|n| format!("{}nm", n.node_nm)).collect();
            Error::Lookup(format!(
                "no {node_nm}nm node in config; available: {}",
                known.join(", ")
            ))
        })
    }

    pub fn search_space(&self) -> SearchSpace {
        SearchSpace {
            pe_sizes: self.accelerator.pe_sizes.clone(),
            rf_scales: self.accelerator.rf_scales.clone(),
            gbuf_scales: self.accelerator.gbuf_scales.clone(),
            max_aspect_ratio: self.accelerator.max_aspect_ratio,
        }
    }

    pub fn accelerator_base(&self, node: &NodeConfig) -> AcceleratorBase {
        AcceleratorBase {
            regfile_base_bytes_per_pe: self.accelerator.regfile_base_bytes_per_pe,
            gbuf_base_bytes_per_pe: self.accelerator.gbuf_base_bytes_per_pe,
            dram_bw_bytes_per_cycle: node.perf.dram_bw_bytes_per_cycle,
            clock_hz: node.perf.clock_hz,
        }
    }

    pub fn accuracy_model(&self) -> Result<AccuracyModel<f64>> {
        match self.accuracy.mode.as_str() {
            "proxy" => AccuracyModel::proxy(self.accuracy.proxy_c0, self.accuracy.proxy_c1),
            "table" => {
                let table = self.accuracy.table.clone().ok_or_else(|| {
                    Error::Config("accuracy mode \"table\" requires an [accuracy.table]".into())
                })?;
                AccuracyModel::table(table)
            }
            other => Err(Error::Config(format!(
                "unknown accuracy mode {other:?}; expected \"proxy\" or \"table\""
            ))),
        }
    }
}

/// Custom workload file: a `name` plus `[[layer]]` tables.
#[derive(Debug, Deserialize)]
struct WorkloadFile {
    name: String,
    #[serde(rename = "layer")]
    layers: Vec<WorkloadLayer>,
}

#[derive(Debug, Deserialize)]
struct WorkloadLayer {
    name: Option<String>,
    kind: LayerKind,
    c: u64,
    k: u64,
    #[serde(default = "one")]
    h: u64,
    #[serde(default = "one")]
    w: u64,
    #[serde(default = "one")]
    r: u64,
    #[serde(default = "one")]
    s: u64,
    #[serde(default = "one")]
    stride: u64,
    #[serde(default = "one")]
    bytes_per_element: u64,
}

fn one() -> u64 {
    1
}

pub fn load_workload_file(path: &Path) -> Result<(String, Vec<LayerShape>)> {
    let text = fs::read_to_string(path).map_err(Error::Io)?;
    let file: WorkloadFile = toml::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: workload parse: {e}", path.display())))?;
    if file.layers.is_empty() {
        return Err(Error::Config(format!("{}: workload has no layers", path.display())));
    }
    let mut layers = Vec::with_capacity(file.layers.len());
    for (i, l) in file.layers.into_iter().enumerate() {
        let layer = LayerShape {
            name: l.name.unwrap_or_else(|| format!("layer{}", i + 1)),
            kind: l.kind,
            c: l.c,
            k: l.k,
            h: l.h,
            w: l.w,
            r: l.r,
            s: l.s,
            stride: l.stride,
            bytes_per_element: l.bytes_per_element,
        };
        layer.validate()?;
        layers.push(layer);
    }
    Ok((file.name, layers))
}

/// A workload argument is a built-in name (`vgg16`, `vgg19`, `resnet50`,
/// `resnet152`) or a path to a workload TOML file.
pub fn resolve_workload(arg: &str) -> Result<(String, Vec<LayerShape>)> {
    if let Ok(layers) = builtin_workload(arg) {
        return Ok((arg.to_string(), layers));
    }
    let path = Path::new(arg);
    if path.exists() {
        return load_workload_file(path);
    }
    Err(Error::Lookup(format!(
        "workload {arg:?} is neither a built-in network nor an existing file"
    )))
}
