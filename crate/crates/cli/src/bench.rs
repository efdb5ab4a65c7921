//! The Trojan benchmark: every circuit x payload node x seed is injected,
//! scrambled, simulated, detected in both combine modes and scored.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use amscheck::detect::{detect, CombineMode, DetectConfig};
use amscheck::inject::{inject_trojan, scramble};
use amscheck::metrics::{present_pct, trojan_metrics, MetricsSummary, MetricsTable};
use amscheck::netlist::parse_netlist;
use amscheck::simlog::{gen_log, write_log, BehaviorModel, CircuitSpec, Sweep};
use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCircuit {
    pub name: String,
    /// Netlist file relative to the corpus directory; `<name>.sp` by default.
    pub file: Option<String>,
    pub trigger: String,
    pub payload_nodes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRunConfig {
    pub corpus_dir: PathBuf,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_spec")]
    pub spec: [f64; 2],
    #[serde(default = "default_true")]
    pub scramble: bool,
    /// Also write each case's netlist, logs and record.
    #[serde(default)]
    pub write_cases: bool,
    #[serde(default)]
    pub detect: DetectConfig,
    #[serde(default)]
    pub model: BehaviorModel,
    #[serde(default)]
    pub sweep: Sweep,
    #[serde(rename = "circuit", default)]
    pub circuits: Vec<BenchCircuit>,
}

fn default_seeds() -> Vec<u64> {
    vec![1]
}

fn default_spec() -> [f64; 2] {
    [0.6, 1.2]
}

fn default_true() -> bool {
    true
}

impl BenchRunConfig {
    /// Parse and resolve paths against the config file's directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: BenchRunConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.corpus_dir = base.join(&cfg.corpus_dir);
        if let Some(out) = &cfg.output_dir {
            cfg.output_dir = Some(base.join(out));
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if !self.corpus_dir.is_dir() {
            bail!("corpus directory {} does not exist", self.corpus_dir.display());
        }
        if self.seeds.is_empty() {
            bail!("no seeds given");
        }
        if self.circuits.is_empty() || self.circuits.iter().all(|c| c.payload_nodes.is_empty()) {
            bail!("corpus has no circuits or payload nodes");
        }
        CircuitSpec::new(self.spec[0], self.spec[1])?;
        self.detect.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub label: String,
    pub circuit: String,
    pub payload: String,
    pub seed: u64,
    pub union: Option<MetricsSummary>,
    pub intersection: Option<MetricsSummary>,
    /// Whether the detector stayed silent on the same netlist's Trojan-free log.
    pub clean_silent: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub cases: Vec<CaseResult>,
    pub union: MetricsTable,
    pub intersection: MetricsTable,
}

/// What one case produced, kept for `write_cases`.
struct CaseArtifacts {
    netlist: String,
    truth: String,
    trojan_log: String,
    clean_log: String,
}

fn run_case(
    cfg: &BenchRunConfig,
    spec: &CircuitSpec,
    host_text: &str,
    circuit: &BenchCircuit,
    payload: &str,
    seed: u64,
) -> anyhow::Result<(CaseResult, CaseArtifacts)> {
    let host = parse_netlist(host_text).0;
    let (mut text, mut rec) = inject_trojan(&host, &circuit.name, payload, &circuit.trigger, seed)?;
    if cfg.scramble {
        let (t, r, _) = scramble(&text, &rec, seed)?;
        text = t;
        rec = r;
    }
    let n = parse_netlist(&text).0;
    let model = BehaviorModel { seed: cfg.model.seed.wrapping_add(seed), ..cfg.model };
    let troj_log = gen_log(&n, Some(&rec), &model, &cfg.sweep, spec)?;
    let clean_log = gen_log(&n, None, &model, &cfg.sweep, spec)?;
    let mut scores = Vec::new();
    for mode in [CombineMode::Union, CombineMode::Intersection] {
        let dc = DetectConfig { combine_mode: mode, ..cfg.detect };
        let report = detect(&n, &troj_log, spec, &dc)?;
        scores.push(trojan_metrics(&rec, &report)?);
    }
    let clean = detect(&n, &clean_log, spec, &cfg.detect)?;
    let label = if cfg.seeds.len() > 1 {
        format!("{}_troj_{}_s{}", circuit.name, payload, seed)
    } else {
        format!("{}_troj_{}", circuit.name, payload)
    };
    let intersection = scores.pop();
    let union = scores.pop();
    Ok((
        CaseResult {
            label,
            circuit: circuit.name.clone(),
            payload: payload.to_string(),
            seed,
            union,
            intersection,
            clean_silent: Some(!clean.trojan_detected),
            error: None,
        },
        CaseArtifacts {
            netlist: text,
            truth: rec.to_json(),
            trojan_log: write_log(&troj_log),
            clean_log: write_log(&clean_log),
        },
    ))
}

/// Run every case in config order. A failing case is recorded with its
/// error and the sweep continues.
pub fn run_bench(cfg: &BenchRunConfig) -> anyhow::Result<BenchResult> {
    cfg.validate()?;
    let spec = CircuitSpec::new(cfg.spec[0], cfg.spec[1])?;
    let mut cases = Vec::new();
    for circuit in &cfg.circuits {
        let file = circuit.file.clone().unwrap_or_else(|| format!("{}.sp", circuit.name));
        let host = fs::read_to_string(cfg.corpus_dir.join(&file));
        for &seed in &cfg.seeds {
            for payload in &circuit.payload_nodes {
                let outcome = match &host {
                    Ok(text) => run_case(cfg, &spec, text, circuit, payload, seed),
                    Err(e) => Err(anyhow::anyhow!("reading {file}: {e}")),
                };
                match outcome {
                    Ok((row, art)) => {
                        if cfg.write_cases {
                            if let Some(dir) = &cfg.output_dir {
                                write_case(dir, &row.label, &art)?;
                            }
                        }
                        cases.push(row);
                    }
                    Err(e) => cases.push(CaseResult {
                        label: format!("{}_troj_{}", circuit.name, payload),
                        circuit: circuit.name.clone(),
                        payload: payload.clone(),
                        seed,
                        union: None,
                        intersection: None,
                        clean_silent: None,
                        error: Some(format!("{e:#}")),
                    }),
                }
            }
        }
    }
    let rows = |pick: fn(&CaseResult) -> Option<&MetricsSummary>| -> Vec<(String, MetricsSummary)> {
        cases.iter().filter_map(|c| pick(c).map(|m| (c.label.clone(), m.clone()))).collect()
    };
    let union = MetricsTable::new(rows(|c| c.union.as_ref())).context("no case completed")?;
    let intersection = MetricsTable::new(rows(|c| c.intersection.as_ref())).context("no case completed")?;
    Ok(BenchResult { cases, union, intersection })
}

fn write_case(dir: &Path, label: &str, art: &CaseArtifacts) -> anyhow::Result<()> {
    let d = dir.join("cases");
    fs::create_dir_all(&d)?;
    fs::write(d.join(format!("{label}.sp")), &art.netlist)?;
    fs::write(d.join(format!("{label}.json")), &art.truth)?;
    fs::write(d.join(format!("{label}.log")), &art.trojan_log)?;
    fs::write(d.join(format!("{label}_clean.log")), &art.clean_log)?;
    Ok(())
}

const HEADER: &str = "case,identified_union,coverage_union,precision_union,recall_union,identified_intersection,coverage_intersection,precision_intersection,recall_intersection,clean_silent,error";

fn cells(m: Option<&MetricsSummary>) -> [String; 4] {
    match m {
        None => std::array::from_fn(|_| "n/a".to_string()),
        Some(m) => [
            match m.trojan_identified {
                Some(true) => "yes".into(),
                Some(false) => "no".into(),
                None => "n/a".into(),
            },
            present_pct(m.trojan_coverage_pct, 2),
            present_pct(m.precision_pct, 2),
            present_pct(m.recall_pct, 2),
        ],
    }
}

impl BenchResult {
    /// One row per case plus an `Average` row, both modes side by side.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{HEADER}\n");
        for c in &self.cases {
            let silent = c.clean_silent.map_or("n/a", |s| if s { "yes" } else { "no" });
            let err = c.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                c.label,
                cells(c.union.as_ref()).join(","),
                cells(c.intersection.as_ref()).join(","),
                silent,
                err
            );
        }
        let all_silent = self.cases.iter().all(|c| c.clean_silent == Some(true));
        let _ = writeln!(
            out,
            "Average,{},{},{},",
            cells(Some(&self.union.average)).join(","),
            cells(Some(&self.intersection.average)).join(","),
            if all_silent { "yes" } else { "no" }
        );
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bench result always serializes")
    }

    pub fn write_to(&self, dir: &Path) -> anyhow::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("bench.csv"), self.to_csv())?;
        fs::write(dir.join("bench.json"), self.to_json())?;
        fs::write(dir.join("bench_union.csv"), self.union.to_csv())?;
        fs::write(dir.join("bench_intersection.csv"), self.intersection.to_csv())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(toml_text: &str) -> BenchRunConfig {
        toml::from_str(toml_text).unwrap()
    }

    #[test]
    fn defaults() {
        let c = config("corpus_dir = \".\"\n[[circuit]]\nname = \"a\"\ntrigger = \"1\"\npayload_nodes = [\"2\"]\n");
        assert_eq!(c.seeds, vec![1]);
        assert_eq!(c.spec, [0.6, 1.2]);
        assert!(c.scramble);
        assert_eq!(c.detect, DetectConfig::default());
        assert!(c.validate().is_ok());
    }

    #[test]
    fn invalid_configs() {
        assert!(config("corpus_dir = \".\"\n").validate().is_err());
        let base = "[[circuit]]\nname = \"a\"\ntrigger = \"1\"\npayload_nodes = [\"2\"]\n";
        assert!(config(&format!("corpus_dir = \"/no/such/dir\"\n{base}")).validate().is_err());
        assert!(config(&format!("corpus_dir = \".\"\nseeds = []\n{base}")).validate().is_err());
        assert!(config(&format!("corpus_dir = \".\"\nspec = [1.2, 0.6]\n{base}")).validate().is_err());
        let bad = format!("corpus_dir = \".\"\n[detect]\ndev_abs_floor = -1.0\n{base}");
        assert!(config(&bad).validate().is_err());
    }

    #[test]
    fn missing_host_is_a_case_error() {
        let dir = std::env::temp_dir();
        let c = BenchRunConfig {
            corpus_dir: dir,
            ..config("corpus_dir = \".\"\n[[circuit]]\nname = \"absent_host_xyz\"\ntrigger = \"1\"\npayload_nodes = [\"2\"]\n")
        };
        // Every case failed, so there is nothing to average.
        assert!(run_bench(&c).is_err());
    }
}
