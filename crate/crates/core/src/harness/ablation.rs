use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::data::Prepared;
use super::eval::{evaluate, EvalReport, EvalRow, ModelSummarizer, TableEmbedder};
use super::train::{pretrain_base, train_prefix, StepRecord};
use crate::corpus::SplitName;
use crate::energy::{span_examples, train_classifier, EnergyComponent, EnergyScorer};
use crate::metrics::MetricReport;
use crate::prompt::{Placement, PromptParts};
use crate::{Error, Result};

/// One ablation variant. Ids combine with `&`, e.g. `no_lp&prompt:P+D+T`.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationSpec {
    id: String,
    pub use_lp: bool,
    pub dropped: Vec<EnergyComponent>,
    pub parts: Option<PromptParts>,
    pub placement: Option<Placement>,
}

impl AblationSpec {
    pub fn id(&self) -> &str {
        &self.id
    }

    /// The run configuration for this variant.
    pub fn apply(&self, config: &RunConfig) -> Result<RunConfig> {
        let mut c = config.clone();
        c.use_lp = self.use_lp;
        for &d in &self.dropped {
            c.energy = c.energy.without(d)?;
        }
        if let Some(p) = self.parts {
            c.prompt_parts = p;
        }
        if let Some(p) = self.placement {
            c.placement = p;
        }
        Ok(c)
    }
}

impl FromStr for AblationSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut spec = AblationSpec {
            id: s.trim().to_string(),
            use_lp: true,
            dropped: Vec::new(),
            parts: None,
            placement: None,
        };
        let unknown = || Error::UnknownVariant(s.to_string());
        for part in s.split('&').map(str::trim) {
            match part {
                "full" => {}
                "no_lp" => spec.use_lp = false,
                "no_Ep" => spec.dropped.push(EnergyComponent::Perspective),
                "no_Ea" => spec.dropped.push(EnergyComponent::Anchor),
                "no_Et" => spec.dropped.push(EnergyComponent::Tone),
                _ => {
                    if let Some(p) = part.strip_prefix("prompt:") {
                        spec.parts = Some(p.parse().map_err(|_| unknown())?);
                    } else if let Some(p) = part.strip_prefix("placement:") {
                        spec.placement = Some(p.parse().map_err(|_| unknown())?);
                    } else {
                        return Err(unknown());
                    }
                }
            }
        }
        Ok(spec)
    }
}

impl fmt::Display for AblationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id)
    }
}

/// The energy and prompt variants, in table order.
pub fn standard_matrix() -> Vec<AblationSpec> {
    [
        "full",
        "no_lp",
        "no_Ea",
        "no_Et",
        "no_Ep",
        "prompt:P",
        "prompt:D",
        "prompt:P+D",
        "prompt:P+D+B",
        "prompt:P+D+T",
        "placement:after",
    ]
    .iter()
    .map(|s| s.parse().expect("known variant"))
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub variant: String,
    pub seed: u64,
    pub base_hash: String,
    pub base_hash_after: String,
    pub alpha: [f64; 3],
    pub final_step: Option<StepRecord>,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Range {
    fn of(xs: impl IntoIterator<Item = f64>) -> Range {
        let xs: Vec<f64> = xs.into_iter().collect();
        let n = xs.len().max(1) as f64;
        Range {
            mean: xs.iter().sum::<f64>() / n,
            min: xs.iter().cloned().fold(f64::INFINITY, f64::min),
            max: xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub variant: String,
    pub seeds: Vec<u64>,
    pub rouge1_f1: Range,
    pub rouge1_recall: Range,
    pub rouge_l_f1: Range,
    pub rouge_l_recall: Range,
    pub classifier_accuracy: Range,
    pub anchor_hit_rate: Range,
    pub anchor_energy: Range,
    /// Seed means per scope, OVERALL last.
    pub rows: Vec<EvalRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub runs: Vec<RunResult>,
    pub summary: Vec<VariantSummary>,
}

impl AblationReport {
    pub fn variant(&self, id: &str) -> Option<&VariantSummary> {
        self.summary.iter().find(|v| v.variant == id)
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<24} {:>15} {:>15} {:>15} {:>15} {:>15} {:>15}",
            "variant", "R1-F1", "R1-R", "RL-F1", "ClfAcc", "AnchorHit", "AnchorE"
        );
        let cell = |r: &Range| format!("{:.4}±{:.4}", r.mean, (r.max - r.min) / 2.0);
        for v in &self.summary {
            let _ = writeln!(
                s,
                "{:<24} {:>15} {:>15} {:>15} {:>15} {:>15} {:>15}",
                v.variant,
                cell(&v.rouge1_f1),
                cell(&v.rouge1_recall),
                cell(&v.rouge_l_f1),
                cell(&v.classifier_accuracy),
                cell(&v.anchor_hit_rate),
                cell(&v.anchor_energy)
            );
        }
        s
    }
}

fn summarize(variant: &str, runs: &[&RunResult]) -> VariantSummary {
    let overall = |f: &dyn Fn(&EvalRow) -> f64| Range::of(runs.iter().map(|r| f(r.report.overall())));
    let mut rows = Vec::new();
    let scopes: Vec<String> = runs[0].report.rows.iter().map(|r| r.scope.clone()).collect();
    for scope in scopes {
        let found: Vec<&EvalRow> = runs.iter().filter_map(|r| r.report.row(&scope)).collect();
        let n = found.len() as f64;
        rows.push(EvalRow {
            scope,
            count: found.iter().map(|r| r.count).sum(),
            metrics: MetricReport::weighted_mean(found.iter().map(|r| (&r.metrics, 1.0))),
            classifier_accuracy: found.iter().map(|r| r.classifier_accuracy).sum::<f64>() / n,
            anchor_hit_rate: found.iter().map(|r| r.anchor_hit_rate).sum::<f64>() / n,
            anchor_energy: found.iter().map(|r| r.anchor_energy).sum::<f64>() / n,
        });
    }
    VariantSummary {
        variant: variant.to_string(),
        seeds: runs.iter().map(|r| r.seed).collect(),
        rouge1_f1: overall(&|r| r.metrics.rouge1.f1),
        rouge1_recall: overall(&|r| r.metrics.rouge1.recall),
        rouge_l_f1: overall(&|r| r.metrics.rouge_l.f1),
        rouge_l_recall: overall(&|r| r.metrics.rouge_l.recall),
        classifier_accuracy: overall(&|r| r.classifier_accuracy),
        anchor_hit_rate: overall(&|r| r.anchor_hit_rate),
        anchor_energy: overall(&|r| r.anchor_energy),
        rows,
    }
}

/// Per seed: pretrain a base and a classifier, then tune and evaluate one
/// prefix per variant on the test split.
pub fn run_ablation(matrix: &[AblationSpec], config: &RunConfig, seeds: &[u64], data: &Prepared) -> Result<AblationReport> {
    run_ablation_with(matrix, config, seeds, data, &mut |_| {})
}

/// As [`run_ablation`], calling `progress` after each run.
pub fn run_ablation_with(
    matrix: &[AblationSpec],
    config: &RunConfig,
    seeds: &[u64],
    data: &Prepared,
    progress: &mut dyn FnMut(&RunResult),
) -> Result<AblationReport> {
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("at least one seed is required".into()));
    }
    if matrix.is_empty() {
        return Err(Error::InvalidArgument("empty ablation matrix".into()));
    }
    let train = data.threads(SplitName::Train);
    let mut test = data.threads(SplitName::Test);
    if let Some(n) = config.eval_limit {
        test.truncate(n);
    }
    if test.is_empty() {
        return Err(Error::InvalidArgument("test split is empty".into()));
    }
    let spans = span_examples(&train, &data.vocab);
    let mut runs = Vec::new();
    for &seed in seeds {
        let base = pretrain_base(config, data, seed)?;
        let classifier = train_classifier(&spans, data.vocab.len(), &config.classifier, seed)?;
        let embed = base.model.get("embed")?;
        let embedder = TableEmbedder { vocab: &data.vocab, table: embed };
        for spec in matrix {
            let c = spec.apply(config)?;
            let scorer = if c.use_lp {
                Some(EnergyScorer::new(classifier.clone(), &data.lexicon, &data.vocab, c.energy, c.anchor_score)?)
            } else {
                None
            };
            let out = train_prefix(&c, data, &base.model, &base.hash, scorer.as_ref(), seed)?;
            let summarizer = ModelSummarizer {
                base: &base.model,
                prefix: Some(&out.prefix),
                vocab: &data.vocab,
                parts: c.prompt_parts,
                placement: c.placement,
                mode: c.decode,
                max_len: c.max_summary_len,
            };
            let report = evaluate(&summarizer, &test, SplitName::Test, &classifier, &data.vocab, Some(&embedder), c.anchor_score)?;
            let run = RunResult {
                variant: spec.id().to_string(),
                seed,
                base_hash: base.hash.clone(),
                base_hash_after: base.model.hash(),
                alpha: [c.energy.alpha1, c.energy.alpha2, c.energy.alpha3],
                final_step: out.log.last().cloned(),
                report,
            };
            progress(&run);
            runs.push(run);
        }
    }
    let summary = matrix
        .iter()
        .map(|spec| {
            let mine: Vec<&RunResult> = runs.iter().filter(|r| r.variant == spec.id()).collect();
            summarize(spec.id(), &mine)
        })
        .collect();
    Ok(AblationReport { runs, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::EnergyWeights;

    #[test]
    fn parses_every_standard_variant() {
        let m = standard_matrix();
        assert_eq!(m.len(), 11);
        assert!(!m[1].use_lp);
        assert_eq!(m[9].parts, Some("P+D+T".parse().unwrap()));
        assert_eq!(m[10].placement, Some(Placement::After));
    }

    #[test]
    fn rejects_unknown_ids() {
        for bad in ["", "no_lq", "prompt:X", "placement:middle", "full&nope"] {
            assert!(matches!(bad.parse::<AblationSpec>(), Err(Error::UnknownVariant(_))), "{bad}");
        }
    }

    #[test]
    fn no_ea_renormalizes() {
        let c = RunConfig::default();
        let w = "no_Ea".parse::<AblationSpec>().unwrap().apply(&c).unwrap().energy;
        assert!((w.alpha1 - 0.5).abs() < 1e-12 && w.alpha2 == 0.0 && (w.alpha3 - 0.5).abs() < 1e-12);
        let c = RunConfig { energy: EnergyWeights::new(0.2, 0.5, 0.3).unwrap(), ..c };
        let w = "no_Ea".parse::<AblationSpec>().unwrap().apply(&c).unwrap().energy;
        assert!((w.alpha1 + w.alpha3 - 1.0).abs() < 1e-12);
        assert!((w.alpha1 / w.alpha3 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn composites_combine() {
        let s: AblationSpec = "no_lp&prompt:P+D+T".parse().unwrap();
        let c = s.apply(&RunConfig::default()).unwrap();
        assert!(!c.use_lp);
        assert!(!c.prompt_parts.begin && c.prompt_parts.tone);
        assert_eq!(s.to_string(), "no_lp&prompt:P+D+T");
    }
}
