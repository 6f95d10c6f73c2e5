use crate::energy::{AnchorScore, ClassifierConfig, EnergyWeights};
use crate::nnkit::{DecodeMode, ModelConfig};
use crate::prompt::{Placement, PromptParts};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Model shape without the vocabulary size, which comes from the data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSpec {
    pub d_model: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    pub enc_layers: usize,
    pub dec_layers: usize,
    pub max_len: usize,
}

impl Default for ModelSpec {
    fn default() -> Self {
        let t = ModelConfig::toy(0);
        ModelSpec {
            d_model: t.d_model,
            n_heads: t.n_heads,
            d_ff: t.d_ff,
            enc_layers: t.enc_layers,
            dec_layers: t.dec_layers,
            max_len: t.max_len,
        }
    }
}

impl ModelSpec {
    pub fn with_vocab(&self, vocab_size: usize) -> ModelConfig {
        ModelConfig {
            vocab_size,
            d_model: self.d_model,
            n_heads: self.n_heads,
            d_ff: self.d_ff,
            enc_layers: self.enc_layers,
            dec_layers: self.dec_layers,
            max_len: self.max_len,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimSpec {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Stop after this many optimizer steps, if set.
    pub max_steps: Option<usize>,
    /// Rescale the gradient to at most this global L2 norm, if set.
    pub clip_norm: Option<f64>,
}

impl OptimSpec {
    fn with_lr(lr: f64) -> Self {
        OptimSpec {
            lr,
            epochs: 5,
            batch_size: 8,
            max_steps: None,
            clip_norm: None,
        }
    }
}

impl Default for OptimSpec {
    fn default() -> Self {
        Self::with_lr(1e-3)
    }
}

/// Where the perspective loss reads its soft summary from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpSource {
    /// Greedy free-running decode for the gold length, re-scored with grad.
    #[default]
    FreeRunning,
    /// The teacher-forced rows of the cross-entropy pass.
    TeacherForced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Corpus JSONL; when absent a synthetic corpus is generated.
    pub corpus: Option<PathBuf>,
    pub synthetic_threads: usize,
    pub synthetic_seed: u64,
    /// Split file; when absent the corpus is split with `split_ratios`.
    pub splits: Option<PathBuf>,
    pub split_ratios: (f64, f64, f64),
    pub split_seed: u64,
    /// Tone lexicon file; the bundled one when absent.
    pub lexicon: Option<PathBuf>,
    pub vocab_size: usize,
    pub model: ModelSpec,
    pub prefix_len: usize,
    pub prefix_init_std: f64,
    /// Adds the perspective loss to cross-entropy during prefix tuning.
    pub use_lp: bool,
    pub energy: EnergyWeights,
    pub anchor_score: AnchorScore,
    pub lp_source: LpSource,
    pub prompt_parts: PromptParts,
    pub placement: Placement,
    /// Prompt sections the base sees during pretraining.
    pub pretrain_parts: PromptParts,
    pub pretrain: OptimSpec,
    pub prefix_train: OptimSpec,
    pub classifier: ClassifierConfig,
    pub max_summary_len: usize,
    pub decode: DecodeMode,
    /// Cap on evaluated threads, taken in split order; all when absent.
    pub eval_limit: Option<usize>,
    pub seed: u64,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: None,
            synthetic_threads: 500,
            synthetic_seed: 0,
            splits: None,
            split_ratios: (0.8, 0.1, 0.1),
            split_seed: 0,
            lexicon: None,
            vocab_size: 4000,
            model: ModelSpec::default(),
            prefix_len: 16,
            prefix_init_std: 0.5,
            use_lp: true,
            energy: EnergyWeights::default(),
            anchor_score: AnchorScore::F1,
            lp_source: LpSource::FreeRunning,
            prompt_parts: PromptParts::FULL,
            placement: Placement::Before,
            pretrain_parts: PromptParts::NONE,
            pretrain: OptimSpec::with_lr(1e-3),
            prefix_train: OptimSpec::with_lr(3e-3),
            classifier: ClassifierConfig::default(),
            max_summary_len: 32,
            decode: DecodeMode::Greedy,
            eval_limit: None,
            seed: 1,
            seeds: vec![1, 2, 3],
            out_dir: PathBuf::from("runs/default"),
        }
    }
}

impl RunConfig {
    /// Reads a JSON config; relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.corpus, &mut cfg.splits, &mut cfg.lexicon].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if cfg.out_dir.is_relative() {
            cfg.out_dir = base.join(&cfg.out_dir);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for p in [&self.corpus, &self.splits, &self.lexicon].into_iter().flatten() {
            if !p.exists() {
                return Err(Error::InvalidArgument(format!("referenced file {} does not exist", p.display())));
            }
        }
        self.energy.validate()?;
        self.model.with_vocab(self.vocab_size.max(5)).validate()?;
        if self.prefix_len == 0 {
            return Err(Error::InvalidArgument("prefix_len must be at least 1".into()));
        }
        if self.max_summary_len == 0 {
            return Err(Error::InvalidArgument("max_summary_len must be at least 1".into()));
        }
        for o in [&self.pretrain, &self.prefix_train] {
            if o.batch_size == 0 || o.lr.is_nan() || o.lr <= 0.0 {
                return Err(Error::InvalidArgument("batch_size and lr must be positive".into()));
            }
        }
        Ok(())
    }

    /// Writes the fully resolved config, defaults included.
    pub fn write_resolved(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
        let path = dir.join("resolved_config.json");
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text + "\n").map_err(|e| Error::file(&path, e))?;
        Ok(path)
    }
}
