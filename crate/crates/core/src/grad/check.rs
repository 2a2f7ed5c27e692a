//! Central finite-difference gradient checking.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Tape, Value, VarId};
use crate::error::{Error, Result};

/// Outcome of a finite-difference sweep.
#[derive(Debug, Clone, Copy)]
pub struct FdAnalysis {
    pub max_rel_err: f64,
    pub coords_checked: usize,
}

/// Compares analytic gradients against central differences.
///
/// For each checked real coordinate i of each parameter the error is
/// `|analytic_i - (f(p + h e_i) - f(p - h e_i)) / 2h| / max(1, |analytic_i|)`
/// and the maximum over coordinates is returned. `max_coords_per_param`
/// caps the sweep per tensor (coordinates drawn without replacement from
/// a seeded stream); `None` checks everything.
pub fn finite_difference_check(
    eval: impl Fn(&[Value]) -> Result<f64>,
    analytic: &[Value],
    params: &[Value],
    h: f64,
    max_coords_per_param: Option<usize>,
    seed: u64,
) -> Result<FdAnalysis> {
    if h <= 0.0 {
        return Err(Error::Contract("finite-difference step must be > 0".into()));
    }
    if analytic.len() != params.len() {
        return Err(Error::Contract(format!(
            "{} analytic gradients for {} parameters",
            analytic.len(),
            params.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut work: Vec<Value> = params.to_vec();
    let mut max_rel = 0.0f64;
    let mut checked = 0usize;
    for (pi, grad) in analytic.iter().enumerate() {
        let n = params[pi].real_coords();
        if grad.real_coords() != n {
            return Err(Error::Contract(format!(
                "gradient {pi} has {} coords, parameter has {n}",
                grad.real_coords()
            )));
        }
        let coords: Vec<usize> = match max_coords_per_param {
            Some(cap) if cap < n => sample(&mut rng, n, cap).into_vec(),
            _ => (0..n).collect(),
        };
        for ci in coords {
            let orig = work[pi].coord(ci);
            work[pi].set_coord(ci, orig + h);
            let f_plus = eval(&work)?;
            work[pi].set_coord(ci, orig - h);
            let f_minus = eval(&work)?;
            work[pi].set_coord(ci, orig);
            if !f_plus.is_finite() || !f_minus.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite loss near parameter {pi} coordinate {ci}"
                )));
            }
            let fd = (f_plus - f_minus) / (2.0 * h);
            let a = grad.coord(ci);
            let rel = (a - fd).abs() / a.abs().max(1.0);
            if rel > max_rel {
                max_rel = rel;
            }
            checked += 1;
        }
    }
    Ok(FdAnalysis {
        max_rel_err: max_rel,
        coords_checked: checked,
    })
}

/// Builds the graph once for analytic gradients, then sweeps finite
/// differences by rebuilding the forward pass per probe.
pub fn check_gradients<F>(
    build: F,
    params: &[Value],
    h: f64,
    max_coords_per_param: Option<usize>,
    seed: u64,
) -> Result<FdAnalysis>
where
    F: Fn(&mut Tape, &[VarId]) -> Result<VarId>,
{
    let eval = |vals: &[Value]| -> Result<f64> {
        let mut tape = Tape::new();
        let ids: Vec<VarId> = vals.iter().map(|v| tape.param(v.clone())).collect();
        let loss = build(&mut tape, &ids)?;
        Ok(tape.value(loss).as_real()?.data()[0])
    };

    let mut tape = Tape::new();
    let ids: Vec<VarId> = params.iter().map(|v| tape.param(v.clone())).collect();
    let loss = build(&mut tape, &ids)?;
    let grads = tape.backward(loss)?;
    let analytic: Vec<Value> = ids
        .iter()
        .map(|&id| grads.get(id).expect("registered parameter").clone())
        .collect();
    finite_difference_check(eval, &analytic, params, h, max_coords_per_param, seed)
}
