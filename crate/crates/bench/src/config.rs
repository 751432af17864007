//! Sweep specifications and their JSON config form.

use std::path::Path;

use allgather_core::netmodel::{HockneyParams, MappingKind, Topology, TopologySpec};
use allgather_core::AlgorithmId;
use serde::Deserialize;

use crate::ranges::{parse_procs, parse_sizes};
use crate::{read_file, BenchError, Result};

pub const DEFAULT_PROCS: &str = "8..256:8,5..253:8";
pub const DEFAULT_SIZES: &str = "1..1MiB*2";
/// Latency (µs) and time per byte (µs) of the default single-level topology.
pub const DEFAULT_UNIFORM: HockneyParams = HockneyParams {
    alpha: 2.0,
    beta: 0.000_5,
};

#[derive(Debug, Clone, PartialEq)]
pub enum TopologyChoice {
    /// A single node holding every rank; sized to the largest process count.
    Uniform(HockneyParams),
    Fixed(Topology),
}

impl TopologyChoice {
    /// A preset name (`uniform`, `yahoo`, `cervino`) or a path to a JSON topology.
    pub fn from_arg(arg: &str) -> Result<Self> {
        if arg.trim().eq_ignore_ascii_case("uniform") {
            return Ok(TopologyChoice::Uniform(DEFAULT_UNIFORM));
        }
        if let Some(t) = Topology::preset(arg) {
            return Ok(TopologyChoice::Fixed(t));
        }
        let path = Path::new(arg);
        let text = read_file(path)?;
        Topology::from_json(&text)
            .map(TopologyChoice::Fixed)
            .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))
    }

    pub fn resolve(&self, max_p: usize) -> Topology {
        match self {
            TopologyChoice::Uniform(params) => Topology::uniform(max_p, *params),
            TopologyChoice::Fixed(t) => t.clone(),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            TopologyChoice::Uniform(_) => "uniform",
            TopologyChoice::Fixed(t) => t.name(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub procs: Vec<usize>,
    /// Block sizes in bytes; each rank gathers `p * block_size` bytes.
    pub sizes: Vec<u64>,
    pub algorithms: Vec<AlgorithmId>,
    pub topology: TopologyChoice,
    pub mapping: MappingKind,
    pub seed: u64,
    pub force_no_ignore: bool,
    /// Run every schedule through the executor and check it against the oracle.
    pub check_correctness: bool,
    /// Payloads larger than this are verified at this size; schedules never look inside blocks.
    pub verify_block_cap: u64,
    /// Per-byte charge for Bruck's final rotation.
    pub local_copy_beta: f64,
    /// Repetitions for wall-clock timing of the concurrent executor; 0 disables it.
    pub repetitions: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            procs: parse_procs(DEFAULT_PROCS).expect("default list"),
            sizes: parse_sizes(DEFAULT_SIZES).expect("default list"),
            algorithms: AlgorithmId::ALLGATHER.to_vec(),
            topology: TopologyChoice::Uniform(DEFAULT_UNIFORM),
            mapping: MappingKind::Sequential,
            seed: 0,
            force_no_ignore: false,
            check_correctness: true,
            verify_block_cap: 8,
            local_copy_beta: 0.0,
            repetitions: 0,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.procs.is_empty() || self.sizes.is_empty() || self.algorithms.is_empty() {
            return Err(BenchError::Config(
                "process counts, sizes and algorithms must be non-empty".into(),
            ));
        }
        if self.procs.contains(&0) || self.sizes.contains(&0) {
            return Err(BenchError::Config(
                "process counts and sizes must be positive".into(),
            ));
        }
        if let Some(a) = self.algorithms.iter().find(|a| !a.is_allgather()) {
            return Err(BenchError::Config(format!("`{a}` is not an Allgather")));
        }
        if self.verify_block_cap == 0 {
            return Err(BenchError::Config(
                "verify_block_cap must be positive".into(),
            ));
        }
        HockneyParams::new(0.0, self.local_copy_beta)?;
        let max_p = self.max_p();
        let slots = self.topology.resolve(max_p).total_slots();
        if slots < max_p {
            return Err(allgather_core::Error::InsufficientSlots { slots, p: max_p }.into());
        }
        Ok(())
    }

    pub fn max_p(&self) -> usize {
        self.procs.iter().copied().max().unwrap_or(1)
    }

    /// Algorithms in name order, which is also the output order.
    pub fn sorted_algorithms(&self) -> Vec<AlgorithmId> {
        let mut algos = self.algorithms.clone();
        algos.sort_by_key(|a| a.name());
        algos.dedup();
        algos
    }

    /// Reads a JSON config on top of the defaults.
    pub fn from_config_file(path: &Path) -> Result<Self> {
        let text = read_file(path)?;
        let mut spec = Self::default();
        spec.apply_config(&text, path.parent())
            .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        Ok(spec)
    }

    /// Overlays the fields present in `text`. Topology paths are resolved against `base`.
    pub fn apply_config(&mut self, text: &str, base: Option<&Path>) -> Result<()> {
        let config: ConfigFile = serde_json::from_str(text).map_err(|e| {
            BenchError::Config(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        if let Some(procs) = config.procs {
            self.procs = match procs {
                ListOrText::List(list) => list.into_iter().map(|v| v as usize).collect(),
                ListOrText::Text(text) => parse_procs(&text)?,
            };
        }
        if let Some(sizes) = config.sizes {
            self.sizes = match sizes {
                ListOrText::List(list) => list,
                ListOrText::Text(text) => parse_sizes(&text)?,
            };
        }
        if let Some(algos) = config.algorithms {
            self.algorithms = parse_algorithms(&algos.join(","))?;
        }
        let params = match (config.alpha, config.beta) {
            (None, None) => None,
            (alpha, beta) => Some(HockneyParams::new(
                alpha.unwrap_or(DEFAULT_UNIFORM.alpha),
                beta.unwrap_or(DEFAULT_UNIFORM.beta),
            )?),
        };
        match config.topology {
            Some(TopologyConfig::Inline(spec)) => {
                self.topology = TopologyChoice::Fixed(Topology::from_spec(spec)?)
            }
            Some(TopologyConfig::Name(name)) => {
                let resolved = match base {
                    Some(dir)
                        if Topology::preset(&name).is_none()
                            && !name.eq_ignore_ascii_case("uniform") =>
                    {
                        dir.join(&name).to_string_lossy().into_owned()
                    }
                    _ => name,
                };
                self.topology = TopologyChoice::from_arg(&resolved)?;
            }
            None => {}
        }
        if let Some(params) = params {
            match self.topology {
                TopologyChoice::Uniform(_) => self.topology = TopologyChoice::Uniform(params),
                TopologyChoice::Fixed(_) => {
                    return Err(BenchError::Config(
                        "alpha/beta only apply to the uniform topology".into(),
                    ))
                }
            }
        }
        if let Some(mapping) = config.mapping {
            self.mapping = mapping.parse()?;
        }
        if let Some(seed) = config.seed {
            self.seed = seed;
        }
        if let Some(v) = config.force_no_ignore {
            self.force_no_ignore = v;
        }
        if let Some(v) = config.check_correctness {
            self.check_correctness = v;
        }
        if let Some(v) = config.verify_block_cap {
            self.verify_block_cap = v;
        }
        if let Some(v) = config.local_copy_beta {
            self.local_copy_beta = v;
        }
        if let Some(v) = config.repetitions {
            self.repetitions = v;
        }
        Ok(())
    }
}

/// Comma-separated algorithm names; `all` selects every Allgather.
pub fn parse_algorithms(text: &str) -> Result<Vec<AlgorithmId>> {
    let mut out = Vec::new();
    for name in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if name.eq_ignore_ascii_case("all") {
            out.extend(AlgorithmId::ALLGATHER);
        } else {
            out.push(name.parse::<AlgorithmId>()?);
        }
    }
    out.sort_by_key(|a| a.name());
    out.dedup();
    if out.is_empty() {
        return Err(BenchError::Config("no algorithms selected".into()));
    }
    Ok(out)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    procs: Option<ListOrText>,
    sizes: Option<ListOrText>,
    algorithms: Option<Vec<String>>,
    topology: Option<TopologyConfig>,
    alpha: Option<f64>,
    beta: Option<f64>,
    mapping: Option<String>,
    seed: Option<u64>,
    force_no_ignore: Option<bool>,
    check_correctness: Option<bool>,
    verify_block_cap: Option<u64>,
    local_copy_beta: Option<f64>,
    repetitions: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ListOrText {
    List(Vec<u64>),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum TopologyConfig {
    Name(String),
    Inline(TopologySpec),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let spec = SweepSpec::default();
        spec.validate().unwrap();
        assert_eq!(spec.procs.len() * spec.sizes.len(), 1344);
    }

    #[test]
    fn config_overlays_defaults() {
        let mut spec = SweepSpec::default();
        let text = r#"{"procs": [5, 8], "sizes": "1K..4K*2", "algorithms": ["sparbit", "ring"],
                       "topology": "yahoo", "mapping": "cyclic", "seed": 7}"#;
        spec.apply_config(text, None).unwrap();
        assert_eq!(spec.procs, vec![5, 8]);
        assert_eq!(spec.sizes, vec![1024, 2048, 4096]);
        assert_eq!(
            spec.algorithms,
            vec![AlgorithmId::Ring, AlgorithmId::Sparbit]
        );
        assert_eq!(spec.topology.name(), "yahoo");
        assert_eq!(spec.mapping, MappingKind::Cyclic);
        assert_eq!(spec.seed, 7);
    }

    #[test]
    fn config_errors_name_the_line() {
        let mut spec = SweepSpec::default();
        let err = spec
            .apply_config("{\n  \"procs\": [1],\n  \"colour\": 3\n}", None)
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 3"), "{err}");
        let err = spec
            .apply_config("{\n\n  \"seed\": -1\n}", None)
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn inline_topology_and_uniform_params() {
        let mut spec = SweepSpec::default();
        spec.apply_config(r#"{"alpha": 1.0, "beta": 0.0}"#, None)
            .unwrap();
        assert_eq!(
            spec.topology,
            TopologyChoice::Uniform(HockneyParams {
                alpha: 1.0,
                beta: 0.0
            })
        );
        let text = r#"{"topology": {"levels": [{"alpha": 1, "beta": 0}], "tree": {"slots": 300}}}"#;
        spec.apply_config(text, None).unwrap();
        assert_eq!(spec.topology.resolve(1).total_slots(), 300);
        assert!(spec.apply_config(r#"{"alpha": 1.0}"#, None).is_err());
    }

    #[test]
    fn validation() {
        let mut spec = SweepSpec {
            procs: vec![300],
            topology: TopologyChoice::from_arg("yahoo").unwrap(),
            ..Default::default()
        };
        assert!(spec.validate().is_err());
        spec.procs = vec![256];
        spec.validate().unwrap();
        spec.algorithms = vec![AlgorithmId::BinomialBroadcast];
        assert!(spec.validate().is_err());
        assert!(parse_algorithms("sparbit,bogus").is_err());
        assert_eq!(parse_algorithms("all").unwrap().len(), 5);
    }
}
