use alloc::vec::Vec;

use super::graph::{Graph, Var};
use super::tensor::Tensor;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub coords_checked: usize,
}

/// Denominator floor for the relative error; below it the comparison is
/// effectively absolute.
const REL_FLOOR: f64 = 1e-6;

/// Compares reverse-mode gradients of a scalar graph against central finite
/// differences with step `h`.
///
/// `build` receives a fresh graph and one leaf per entry of `params` and must
/// return the scalar root. `stride` > 1 checks every `stride`-th coordinate
/// of each parameter (always including the first).
pub fn grad_check<F>(mut build: F, params: &[Tensor<f64>], h: f64, stride: usize) -> Result<GradCheckReport>
where
    F: FnMut(&mut Graph<f64>, &[Var]) -> Result<Var>,
{
    let mut g = Graph::new();
    let vars: Vec<Var> = params.iter().map(|p| g.param(p)).collect();
    let root = build(&mut g, &vars)?;
    g.backward(root)?;
    let analytic: Vec<Tensor<f64>> = vars.iter().map(|&v| g.grad_tensor(v)).collect();

    let mut eval = |ps: &[Tensor<f64>]| -> Result<f64> {
        let mut g = Graph::new();
        let vars: Vec<Var> = ps.iter().map(|p| g.param(p)).collect();
        let root = build(&mut g, &vars)?;
        Ok(g.scalar(root))
    };

    let mut work: Vec<Tensor<f64>> = params.to_vec();
    let mut worst = 0.0f64;
    let mut checked = 0;
    let stride = stride.max(1);
    for pi in 0..work.len() {
        for c in (0..work[pi].numel()).step_by(stride) {
            let orig = work[pi].data()[c];
            work[pi].data_mut()[c] = orig + h;
            let up = eval(&work)?;
            work[pi].data_mut()[c] = orig - h;
            let down = eval(&work)?;
            work[pi].data_mut()[c] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic[pi].data()[c];
            let denom = a.abs().max(numeric.abs()).max(REL_FLOOR);
            worst = worst.max((a - numeric).abs() / denom);
            checked += 1;
        }
    }
    Ok(GradCheckReport {
        max_rel_error: worst,
        coords_checked: checked,
    })
}
