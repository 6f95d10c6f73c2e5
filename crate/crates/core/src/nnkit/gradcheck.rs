//! Central finite-difference gradient checks.

use super::graph::{Graph, Var};
use super::tensor::Tensor;
use crate::{Error, Result};
use std::collections::BTreeMap;

/// Denominator floor for relative error, so gradients that are zero up to
/// rounding do not blow up the ratio.
pub const REL_FLOOR: f64 = 1e-5;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub checked: usize,
}

/// Checks every scalar of every input. `f` builds a scalar from leaves
/// bound to `inputs` in order.
pub fn check_gradients<F>(inputs: &[Tensor], h: f64, f: F) -> Result<GradCheckReport>
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var>,
{
    let eval = |xs: &[Tensor]| -> Result<f64> {
        let mut g = Graph::new();
        let vars: Vec<Var> = xs.iter().map(|t| g.param(t.clone())).collect();
        let out = f(&mut g, &vars)?;
        Ok(g.value(out).item())
    };
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.param(t.clone())).collect();
    let out = f(&mut g, &vars)?;
    let grads = g.backward(out)?;
    let mut report = GradCheckReport { max_rel_err: 0.0, checked: 0 };
    let mut xs = inputs.to_vec();
    for (k, &v) in vars.iter().enumerate() {
        let zero = Tensor::zeros(inputs[k].shape());
        let analytic = grads.get(v).unwrap_or(&zero).clone();
        for i in 0..inputs[k].numel() {
            let orig = inputs[k].data()[i];
            xs[k].data_mut()[i] = orig + h;
            let up = eval(&xs)?;
            xs[k].data_mut()[i] = orig - h;
            let down = eval(&xs)?;
            xs[k].data_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * h);
            report.max_rel_err = report.max_rel_err.max(relative_error(analytic.data()[i], numeric));
            report.checked += 1;
        }
    }
    Ok(report)
}

/// Checks named parameter groups. `f(params, want_grads)` returns the loss
/// and, when asked, analytic gradients for the groups.
pub fn check_named<F>(params: &BTreeMap<String, Tensor>, h: f64, mut f: F) -> Result<GradCheckReport>
where
    F: FnMut(&BTreeMap<String, Tensor>, bool) -> Result<(f64, BTreeMap<String, Tensor>)>,
{
    let (_, analytic) = f(params, true)?;
    let mut report = GradCheckReport { max_rel_err: 0.0, checked: 0 };
    let mut xs = params.clone();
    for (name, t) in params {
        let a = analytic.get(name).ok_or_else(|| Error::MissingGradient(name.clone()))?;
        for i in 0..t.numel() {
            let orig = t.data()[i];
            xs.get_mut(name).unwrap().data_mut()[i] = orig + h;
            let up = f(&xs, false)?.0;
            xs.get_mut(name).unwrap().data_mut()[i] = orig - h;
            let down = f(&xs, false)?.0;
            xs.get_mut(name).unwrap().data_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * h);
            report.max_rel_err = report.max_rel_err.max(relative_error(a.data()[i], numeric));
            report.checked += 1;
        }
    }
    Ok(report)
}
