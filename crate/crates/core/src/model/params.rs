use ndarray::{ArrayViewD, ArrayViewMutD, Zip};

pub type ParamView<'a> = (String, ArrayViewD<'a, f64>);
pub type ParamViewMut<'a> = (String, ArrayViewMutD<'a, f64>);

/// A set of named learnable tensors.
///
/// Gradients are stored in a value of the same type, so `zeros_like` doubles
/// as a gradient accumulator constructor. Both listings must return tensors
/// in the same order.
pub trait Module: Clone {
    fn params(&self) -> Vec<ParamView<'_>>;

    fn params_mut(&mut self) -> Vec<ParamViewMut<'_>>;

    /// Number of learnable scalars.
    fn num_params(&self) -> usize {
        self.params().iter().map(|(_, a)| a.len()).sum()
    }

    fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.params_mut().into_iter().for_each(|(_, mut a)| a.fill(0.0));
        z
    }

    /// `self += scale * other`, tensor by tensor.
    fn add_scaled(&mut self, other: &Self, scale: f64) {
        for ((_, mut a), (_, b)) in self.params_mut().into_iter().zip(other.params()) {
            Zip::from(&mut a).and(&b).for_each(|x, &y| *x += scale * y);
        }
    }

    fn scale(&mut self, factor: f64) {
        for (_, mut a) in self.params_mut() {
            a.mapv_inplace(|v| v * factor);
        }
    }

    fn sq_norm(&self) -> f64 {
        self.params()
            .iter()
            .map(|(_, a)| a.iter().map(|v| v * v).sum::<f64>())
            .sum()
    }
}

/// Prefixes every name in `views` with `prefix.`.
pub(crate) fn nest<'a>(prefix: &str, views: Vec<ParamView<'a>>) -> Vec<ParamView<'a>> {
    views
        .into_iter()
        .map(|(n, v)| (format!("{prefix}.{n}"), v))
        .collect()
}

pub(crate) fn nest_mut<'a>(prefix: &str, views: Vec<ParamViewMut<'a>>) -> Vec<ParamViewMut<'a>> {
    views
        .into_iter()
        .map(|(n, v)| (format!("{prefix}.{n}"), v))
        .collect()
}
