//! Plain-text experiment configuration.
//!
//! One `key = value` pair per line; `#` starts a comment. Keys may be grouped
//! under a single level of `[section]` headers: `[synthetic]` for the
//! generated dataset and `[fedpsd]` for the component switches. Every key is
//! optional and falls back to [`ExperimentConfig::default`].
//!
//! ```text
//! dataset = synthetic
//! partition = sharding
//! S = 2
//! K = 20
//! algorithm = fedpsd
//!
//! [fedpsd]
//! cll = false
//! ```

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use fedpsd::config::{Algorithm, DatasetConfig, ExperimentConfig, PartitionConfig};
use fedpsd::data::TestSplitMode;
use fedpsd::fedpsd::{FirstEpochTeacher, PsdConfig, TeacherSource};

use crate::error::{Result, RunnerError};

const SYNTH_DEFAULT: DatasetConfig = DatasetConfig::Synthetic {
    classes: 10,
    dim: 32,
    train_per_class: 500,
    test_per_class: 100,
    spread: 0.5,
    data_seed: 0,
};

struct Draft {
    cfg: ExperimentConfig,
    dataset: String,
    mnist_dir: PathBuf,
    synthetic: DatasetConfig,
    partition: String,
    shards: usize,
    dirichlet_alpha: f64,
    algorithm: String,
    mu: f64,
    psd: PsdConfig,
}

fn parse_value<V: FromStr>(line: usize, key: &str, raw: &str) -> Result<V> {
    raw.parse().map_err(|_| RunnerError::Parse {
        line,
        message: format!("invalid value `{raw}` for `{key}`"),
    })
}

fn parse_bool(line: usize, key: &str, raw: &str) -> Result<bool> {
    match raw {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(RunnerError::Parse {
            line,
            message: format!("`{key}` expects true or false, got `{raw}`"),
        }),
    }
}

fn parse_choice<'a>(line: usize, key: &str, raw: &'a str, allowed: &[&str]) -> Result<&'a str> {
    if allowed.contains(&raw) {
        Ok(raw)
    } else {
        Err(RunnerError::Parse {
            line,
            message: format!("`{key}` must be one of {}, got `{raw}`", allowed.join(", ")),
        })
    }
}

fn parse_hidden(line: usize, raw: &str) -> Result<Vec<usize>> {
    if raw.is_empty() || raw == "none" {
        return Ok(Vec::new());
    }
    raw.split(',')
        .map(|w| parse_value(line, "hidden", w.trim()))
        .collect()
}

impl Draft {
    fn set(&mut self, line: usize, section: &str, key: &str, raw: &str) -> Result<()> {
        let cfg = &mut self.cfg;
        match (section, key) {
            ("", "dataset") => {
                self.dataset = parse_choice(line, key, raw, &["mnist", "synthetic"])?.to_string()
            }
            ("", "mnist_dir") => self.mnist_dir = PathBuf::from(raw),
            ("", "partition") => {
                self.partition =
                    parse_choice(line, key, raw, &["sharding", "dirichlet"])?.to_string()
            }
            ("", "S") => self.shards = parse_value(line, key, raw)?,
            ("", "dirichlet_alpha") => self.dirichlet_alpha = parse_value(line, key, raw)?,
            ("", "K") => cfg.clients = parse_value(line, key, raw)?,
            ("", "C") => cfg.fraction = parse_value(line, key, raw)?,
            ("", "t_total") => cfg.rounds = parse_value(line, key, raw)?,
            ("", "E") => cfg.epochs = parse_value(line, key, raw)?,
            ("", "batch_size") => cfg.batch_size = parse_value(line, key, raw)?,
            ("", "lr") => cfg.lr = parse_value(line, key, raw)?,
            ("", "lr_decay") => cfg.lr_decay = parse_value(line, key, raw)?,
            ("", "momentum") => cfg.momentum = parse_value(line, key, raw)?,
            ("", "weight_decay") => cfg.weight_decay = parse_value(line, key, raw)?,
            ("", "hidden") => cfg.hidden = parse_hidden(line, raw)?,
            ("", "algorithm") => {
                self.algorithm =
                    parse_choice(line, key, raw, &["fedavg", "fedprox", "fedpsd"])?.to_string()
            }
            ("", "mu") => self.mu = parse_value(line, key, raw)?,
            ("", "seed") => cfg.seed = parse_value(line, key, raw)?,
            ("", "prior_epsilon") => cfg.prior_epsilon = parse_value(line, key, raw)?,
            ("", "client_test") => {
                cfg.client_test = match parse_choice(line, key, raw, &["matched", "global"])? {
                    "matched" => TestSplitMode::Matched,
                    _ => TestSplitMode::Global,
                }
            }
            ("", "client_test_size") => cfg.client_test_size = parse_value(line, key, raw)?,
            ("", "sweep_every") => cfg.sweep_every = parse_value(line, key, raw)?,
            ("", "threads") => cfg.threads = parse_value(line, key, raw)?,
            ("synthetic", _) => {
                let DatasetConfig::Synthetic {
                    classes,
                    dim,
                    train_per_class,
                    test_per_class,
                    spread,
                    data_seed,
                } = &mut self.synthetic
                else {
                    unreachable!("synthetic draft is always synthetic")
                };
                match key {
                    "classes" => *classes = parse_value(line, key, raw)?,
                    "dim" => *dim = parse_value(line, key, raw)?,
                    "train_per_class" => *train_per_class = parse_value(line, key, raw)?,
                    "test_per_class" => *test_per_class = parse_value(line, key, raw)?,
                    "spread" => *spread = parse_value(line, key, raw)?,
                    "seed" => *data_seed = parse_value(line, key, raw)?,
                    _ => return Err(unknown(line, section, key)),
                }
            }
            ("fedpsd", "rhpk") => self.psd.rhpk = parse_bool(line, key, raw)?,
            ("fedpsd", "psd") => self.psd.psd = parse_bool(line, key, raw)?,
            ("fedpsd", "cll") => self.psd.cll = parse_bool(line, key, raw)?,
            ("fedpsd", "teacher_source") => {
                self.psd.teacher_source = match parse_choice(line, key, raw, &["cached", "sweep"])? {
                    "cached" => TeacherSource::Cached,
                    _ => TeacherSource::Sweep,
                }
            }
            ("fedpsd", "first_epoch_teacher") => {
                self.psd.first_epoch_teacher =
                    match parse_choice(line, key, raw, &["labels", "skip"])? {
                        "labels" => FirstEpochTeacher::Labels,
                        _ => FirstEpochTeacher::Skip,
                    }
            }
            _ => return Err(unknown(line, section, key)),
        }
        Ok(())
    }

    fn finish(self) -> ExperimentConfig {
        let mut cfg = self.cfg;
        cfg.dataset = match self.dataset.as_str() {
            "mnist" => DatasetConfig::Mnist {
                dir: self.mnist_dir,
            },
            _ => self.synthetic,
        };
        cfg.partition = match self.partition.as_str() {
            "sharding" => PartitionConfig::Sharding {
                shards_per_client: self.shards,
            },
            _ => PartitionConfig::Dirichlet {
                alpha: self.dirichlet_alpha,
            },
        };
        cfg.algorithm = match self.algorithm.as_str() {
            "fedavg" => Algorithm::FedAvg,
            "fedprox" => Algorithm::FedProx { mu: self.mu },
            _ => Algorithm::FedPsd(self.psd),
        };
        cfg
    }
}

fn unknown(line: usize, section: &str, key: &str) -> RunnerError {
    let full = if section.is_empty() {
        key.to_string()
    } else {
        format!("{section}.{key}")
    };
    RunnerError::Parse {
        line,
        message: format!("unknown key `{full}`"),
    }
}

/// Parses a configuration file. The result has been validated.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let defaults = ExperimentConfig::default();
    let (mnist_dir, dataset) = match &defaults.dataset {
        DatasetConfig::Mnist { dir } => (dir.clone(), "mnist"),
        DatasetConfig::Synthetic { .. } => (PathBuf::from("data/mnist"), "synthetic"),
    };
    let (partition, shards, dirichlet_alpha) = match defaults.partition {
        PartitionConfig::Sharding { shards_per_client } => ("sharding", shards_per_client, 0.5),
        PartitionConfig::Dirichlet { alpha } => ("dirichlet", 2, alpha),
    };
    let (mu, psd) = match defaults.algorithm {
        Algorithm::FedProx { mu } => (mu, PsdConfig::default()),
        Algorithm::FedPsd(psd) => (0.01, psd),
        Algorithm::FedAvg => (0.01, PsdConfig::default()),
    };
    let mut draft = Draft {
        algorithm: defaults.algorithm.name().to_string(),
        cfg: defaults,
        dataset: dataset.to_string(),
        mnist_dir,
        synthetic: SYNTH_DEFAULT,
        partition: partition.to_string(),
        shards,
        dirichlet_alpha,
        mu,
        psd,
    };
    let mut section = String::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| RunnerError::Parse {
                line,
                message: format!("malformed section header `{content}`"),
            })?;
            let name = name.trim();
            if !["synthetic", "fedpsd"].contains(&name) {
                return Err(RunnerError::Parse {
                    line,
                    message: format!("unknown section `[{name}]`"),
                });
            }
            section = name.to_string();
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| RunnerError::Parse {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let value = value.trim();
        let value = value
            .strip_prefix('"')
            .and_then(|v| v.strip_suffix('"'))
            .unwrap_or(value);
        draft.set(line, &section, key.trim(), value)?;
    }
    let cfg = draft.finish();
    cfg.validate()
        .map_err(|e| RunnerError::Invalid(e.to_string()))?;
    Ok(cfg)
}

fn on_off(flag: bool) -> &'static str {
    if flag {
        "true"
    } else {
        "false"
    }
}

/// Renders a configuration in the format accepted by [`parse_config`].
/// Every field is written out, so the text fully determines the run.
pub fn format_config(cfg: &ExperimentConfig) -> String {
    let mut out = String::new();
    let mut psd_section = None;
    let mut synth_section = None;
    match &cfg.dataset {
        DatasetConfig::Mnist { dir } => {
            let _ = writeln!(out, "dataset = mnist");
            let _ = writeln!(out, "mnist_dir = {}", dir.display());
        }
        synthetic @ DatasetConfig::Synthetic { .. } => {
            let _ = writeln!(out, "dataset = synthetic");
            synth_section = Some(synthetic.clone());
        }
    }
    match cfg.partition {
        PartitionConfig::Sharding { shards_per_client } => {
            let _ = writeln!(out, "partition = sharding\nS = {shards_per_client}");
        }
        PartitionConfig::Dirichlet { alpha } => {
            let _ = writeln!(out, "partition = dirichlet\ndirichlet_alpha = {alpha:?}");
        }
    }
    let _ = writeln!(out, "K = {}", cfg.clients);
    let _ = writeln!(out, "C = {:?}", cfg.fraction);
    let _ = writeln!(out, "t_total = {}", cfg.rounds);
    let _ = writeln!(out, "E = {}", cfg.epochs);
    let _ = writeln!(out, "batch_size = {}", cfg.batch_size);
    let _ = writeln!(out, "lr = {:?}", cfg.lr);
    let _ = writeln!(out, "lr_decay = {:?}", cfg.lr_decay);
    let _ = writeln!(out, "momentum = {:?}", cfg.momentum);
    let _ = writeln!(out, "weight_decay = {:?}", cfg.weight_decay);
    let hidden: Vec<String> = cfg.hidden.iter().map(|w| w.to_string()).collect();
    let hidden = if hidden.is_empty() { "none".to_string() } else { hidden.join(",") };
    let _ = writeln!(out, "hidden = {hidden}");
    let _ = writeln!(out, "algorithm = {}", cfg.algorithm.name());
    match cfg.algorithm {
        Algorithm::FedProx { mu } => {
            let _ = writeln!(out, "mu = {mu:?}");
        }
        Algorithm::FedPsd(psd) => psd_section = Some(psd),
        Algorithm::FedAvg => {}
    }
    let _ = writeln!(out, "seed = {}", cfg.seed);
    let _ = writeln!(out, "prior_epsilon = {:?}", cfg.prior_epsilon);
    let mode = match cfg.client_test {
        TestSplitMode::Matched => "matched",
        TestSplitMode::Global => "global",
    };
    let _ = writeln!(out, "client_test = {mode}");
    let _ = writeln!(out, "client_test_size = {}", cfg.client_test_size);
    let _ = writeln!(out, "sweep_every = {}", cfg.sweep_every);
    let _ = writeln!(out, "threads = {}", cfg.threads);
    if let Some(DatasetConfig::Synthetic {
        classes,
        dim,
        train_per_class,
        test_per_class,
        spread,
        data_seed,
    }) = synth_section
    {
        let _ = writeln!(
            out,
            "\n[synthetic]\nclasses = {classes}\ndim = {dim}\ntrain_per_class = {train_per_class}\n\
             test_per_class = {test_per_class}\nspread = {spread:?}\nseed = {data_seed}"
        );
    }
    if let Some(psd) = psd_section {
        let source = match psd.teacher_source {
            TeacherSource::Cached => "cached",
            TeacherSource::Sweep => "sweep",
        };
        let first = match psd.first_epoch_teacher {
            FirstEpochTeacher::Labels => "labels",
            FirstEpochTeacher::Skip => "skip",
        };
        let _ = writeln!(
            out,
            "\n[fedpsd]\nrhpk = {}\npsd = {}\ncll = {}\nteacher_source = {source}\nfirst_epoch_teacher = {first}",
            on_off(psd.rhpk),
            on_off(psd.psd),
            on_off(psd.cll)
        );
    }
    out
}
