//! Pipeline configuration: dataset paths, component configs, mode, seed,
//! worker count.

use anyhow::{bail, Context, Result};
use semfuse::augment::AugmentConfig;
use semfuse::encoders::GridConfig;
use semfuse::fusion::ClassMap;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Which semantic representation gets fused onto the points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FusionMode {
    /// One-hot of the mapped semantic label.
    Label,
    /// Softmax of per-point class scores.
    Score,
}

/// Top-level pipeline config (TOML). Relative paths resolve against the
/// config file's directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Root containing `velodyne/`, `semantic/`, `scores/`, `label_2/`,
    /// `calib/` as applicable.
    pub dataset_root: PathBuf,
    /// All command outputs land under here.
    pub output_root: PathBuf,
    pub class_map: Option<PathBuf>,
    pub grid_config: Option<PathBuf>,
    pub augment_config: Option<PathBuf>,
    pub train_split: Option<PathBuf>,
    pub val_split: Option<PathBuf>,
    pub mode: FusionMode,
    pub seed: u64,
    /// 0 = one worker per available core.
    pub workers: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            dataset_root: PathBuf::from("."),
            output_root: PathBuf::from("out"),
            class_map: None,
            grid_config: None,
            augment_config: None,
            train_split: None,
            val_split: None,
            mode: FusionMode::Label,
            seed: 0,
            workers: 0,
        }
    }
}

impl PipelineConfig {
    /// Load, resolve relative paths, and check that every referenced path
    /// exists.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading pipeline config {}", path.display()))?;
        let mut cfg: Self = toml::from_str(&text)
            .with_context(|| format!("parsing pipeline config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.dataset_root = resolve(base, &cfg.dataset_root);
        cfg.output_root = resolve(base, &cfg.output_root);
        for opt in [
            &mut cfg.class_map,
            &mut cfg.grid_config,
            &mut cfg.augment_config,
            &mut cfg.train_split,
            &mut cfg.val_split,
        ] {
            if let Some(p) = opt.take() {
                *opt = Some(resolve(base, &p));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.dataset_root.is_dir() {
            bail!("dataset_root {} is not a directory", self.dataset_root.display());
        }
        for (name, path) in [
            ("class_map", &self.class_map),
            ("grid_config", &self.grid_config),
            ("augment_config", &self.augment_config),
            ("train_split", &self.train_split),
            ("val_split", &self.val_split),
        ] {
            if let Some(p) = path {
                if !p.is_file() {
                    bail!("{name} {} does not exist", p.display());
                }
            }
        }
        Ok(())
    }

    pub fn load_class_map(&self) -> Result<ClassMap> {
        match &self.class_map {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading class map {}", path.display()))?;
                ClassMap::parse(&text).with_context(|| format!("parsing {}", path.display()))
            }
            None => Ok(ClassMap::semantic_kitti_default()),
        }
    }

    pub fn load_grid_config(&self) -> Result<GridConfig> {
        match &self.grid_config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading grid config {}", path.display()))?;
                GridConfig::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
            }
            None => Ok(GridConfig::default()),
        }
    }

    pub fn load_augment_config(&self) -> Result<AugmentConfig> {
        match &self.augment_config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading augment config {}", path.display()))?;
                AugmentConfig::from_toml(&text)
                    .with_context(|| format!("parsing {}", path.display()))
            }
            None => Ok(AugmentConfig::default()),
        }
    }

    /// The worker pool for corpus-level parallelism.
    pub fn thread_pool(&self, override_workers: Option<usize>) -> Result<rayon::ThreadPool> {
        let workers = override_workers.unwrap_or(self.workers);
        let mut builder = rayon::ThreadPoolBuilder::new();
        if workers > 0 {
            builder = builder.num_threads(workers);
        }
        builder.build().context("building worker pool")
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
