use rand::Rng;

use super::params::Module;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub checked: usize,
    pub max_rel_error: f64,
    /// Parameter name and flat index of the worst entry.
    pub worst: Option<(String, usize)>,
}

/// Compares `analytic` against central differences of `loss` at up to
/// `per_tensor` random entries of every tensor whose name passes `select`.
///
/// Relative error is `|a - n| / max(|a|, |n|, floor)`; the floor keeps
/// entries with vanishing gradient from dominating.
pub fn check_gradients<M, R>(
    model: &M,
    analytic: &M,
    loss: impl Fn(&M) -> f64,
    select: impl Fn(&str) -> bool,
    step: f64,
    floor: f64,
    per_tensor: usize,
    rng: &mut R,
) -> GradCheck
where
    M: Module,
    R: Rng + ?Sized,
{
    let mut probe = model.clone();
    let grads: Vec<(String, Vec<f64>)> = analytic
        .params()
        .into_iter()
        .map(|(n, a)| (n, a.iter().copied().collect()))
        .collect();
    let mut report = GradCheck {
        checked: 0,
        max_rel_error: 0.0,
        worst: None,
    };
    for (t, (name, grad)) in grads.iter().enumerate() {
        if !select(name) || grad.is_empty() {
            continue;
        }
        let picks: Vec<usize> = if grad.len() <= per_tensor {
            (0..grad.len()).collect()
        } else {
            (0..per_tensor).map(|_| rng.random_range(0..grad.len())).collect()
        };
        for i in picks {
            let original = nth(&mut probe, t, i, None);
            nth(&mut probe, t, i, Some(original + step));
            let up = loss(&probe);
            nth(&mut probe, t, i, Some(original - step));
            let down = loss(&probe);
            nth(&mut probe, t, i, Some(original));
            let numeric = (up - down) / (2.0 * step);
            let a = grad[i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
            report.checked += 1;
            if rel > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = report.max_rel_error.max(rel);
                report.worst = Some((name.clone(), i));
            }
        }
    }
    report
}

fn nth<M: Module>(model: &mut M, tensor: usize, index: usize, set: Option<f64>) -> f64 {
    let mut params = model.params_mut();
    let slot = params[tensor].1.iter_mut().nth(index).expect("index in range");
    if let Some(v) = set {
        *slot = v;
    }
    *slot
}
