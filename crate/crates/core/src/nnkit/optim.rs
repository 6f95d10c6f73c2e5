use super::tensor::Tensor;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// The set of parameter groups that may be updated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainMask {
    trainable: BTreeSet<String>,
}

impl TrainMask {
    pub fn only<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        TrainMask {
            trainable: names.into_iter().map(Into::into).collect(),
        }
    }

    /// Every group of `groups`; used for the prefix store in prefix tuning
    /// and for the base store in pretraining.
    pub fn all_of(groups: &BTreeMap<String, Tensor>) -> Self {
        Self::only(groups.keys().cloned())
    }

    pub fn is_trainable(&self, name: &str) -> bool {
        self.trainable.contains(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.trainable.iter().map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    step: u64,
    m: BTreeMap<String, Vec<f64>>,
    v: BTreeMap<String, Vec<f64>>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Adam {
            config,
            step: 0,
            m: BTreeMap::new(),
            v: BTreeMap::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update of the masked groups in `params`.
    /// `grads` must cover exactly the masked groups.
    pub fn step(&mut self, params: &mut BTreeMap<String, Tensor>, mask: &TrainMask, grads: &BTreeMap<String, Tensor>) -> Result<()> {
        if let Some(name) = grads.keys().find(|k| !mask.is_trainable(k)) {
            return Err(Error::FrozenGradient(name.clone()));
        }
        for name in mask.names() {
            let p = params.get(name).ok_or_else(|| Error::UnknownGroup(name.into()))?;
            let g = grads.get(name).ok_or_else(|| Error::MissingGradient(name.into()))?;
            if p.shape() != g.shape() {
                return Err(Error::Shape(format!("gradient for `{name}` is {:?}, parameter is {:?}", g.shape(), p.shape())));
            }
            if !g.is_finite() {
                return Err(Error::NonFinite("gradient"));
            }
        }
        self.step += 1;
        let c = self.config;
        let bc1 = 1.0 - c.beta1.powi(self.step as i32);
        let bc2 = 1.0 - c.beta2.powi(self.step as i32);
        for name in mask.names() {
            let g = grads[name].data();
            let p = params.get_mut(name).expect("checked above").data_mut();
            let m = self.m.entry(name.to_string()).or_insert_with(|| vec![0.0; g.len()]);
            let v = self.v.entry(name.to_string()).or_insert_with(|| vec![0.0; g.len()]);
            for i in 0..g.len() {
                m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
                v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
                let mh = m[i] / bc1;
                let vh = v[i] / bc2;
                p[i] -= c.lr * mh / (vh.sqrt() + c.eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store(x: f64) -> BTreeMap<String, Tensor> {
        BTreeMap::from([("x".to_string(), Tensor::scalar(x)), ("frozen".to_string(), Tensor::scalar(7.0))])
    }

    #[test]
    fn quadratic_converges() {
        let mut p = store(5.0);
        let mask = TrainMask::only(["x"]);
        let mut opt = Adam::new(AdamConfig { lr: 0.1, ..Default::default() });
        for _ in 0..200 {
            let x = p["x"].item();
            let g = BTreeMap::from([("x".to_string(), Tensor::scalar(2.0 * (x - 1.5)))]);
            opt.step(&mut p, &mask, &g).unwrap();
        }
        assert!((p["x"].item() - 1.5).abs() < 1e-3, "{}", p["x"].item());
        assert_eq!(p["frozen"].item(), 7.0);
    }

    #[test]
    fn zero_gradient_only_counts() {
        let mut p = store(2.0);
        let mut opt = Adam::new(AdamConfig::default());
        let g = BTreeMap::from([("x".to_string(), Tensor::scalar(0.0))]);
        opt.step(&mut p, &TrainMask::only(["x"]), &g).unwrap();
        assert_eq!(p, store(2.0));
        assert_eq!(opt.step_count(), 1);
    }

    #[test]
    fn frozen_and_missing_gradients_are_errors() {
        let mut p = store(2.0);
        let mut opt = Adam::new(AdamConfig::default());
        let g = BTreeMap::from([
            ("x".to_string(), Tensor::scalar(1.0)),
            ("frozen".to_string(), Tensor::scalar(1.0)),
        ]);
        assert!(matches!(opt.step(&mut p, &TrainMask::only(["x"]), &g), Err(Error::FrozenGradient(n)) if n == "frozen"));
        assert!(matches!(
            opt.step(&mut p, &TrainMask::only(["x"]), &BTreeMap::new()),
            Err(Error::MissingGradient(_))
        ));
        assert_eq!(p, store(2.0));
        assert_eq!(opt.step_count(), 0);
    }
}
