use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::Uniform;

use super::params::{nest, nest_mut, Module, ParamView, ParamViewMut};

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Single-direction LSTM with gate order input, forget, cell, output and one
/// combined bias vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Lstm {
    /// `(4H, I)`
    pub w_ih: Array2<f64>,
    /// `(4H, H)`
    pub w_hh: Array2<f64>,
    /// `(4H)`
    pub bias: Array1<f64>,
}

/// Activations kept for backpropagation through time, indexed by sequence
/// position.
#[derive(Debug, Clone)]
pub struct LstmCache {
    input: Array2<f64>,
    /// Post-activation gates `[i, f, g, o]`, `(T, 4H)`.
    gates: Array2<f64>,
    cell: Array2<f64>,
    hidden: Array2<f64>,
    reverse: bool,
}

impl Lstm {
    /// Uniform `±1/sqrt(H)` weights, forget-gate bias 1, other biases uniform.
    pub fn init<R: Rng + ?Sized>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (hidden as f64).sqrt();
        let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
        let mut bias = Array1::from_shape_simple_fn(4 * hidden, || rng.sample(dist));
        bias.slice_mut(s![hidden..2 * hidden]).fill(1.0);
        Self {
            w_ih: Array2::from_shape_simple_fn((4 * hidden, input), || rng.sample(dist)),
            w_hh: Array2::from_shape_simple_fn((4 * hidden, hidden), || rng.sample(dist)),
            bias,
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.w_hh.ncols()
    }

    pub fn input_size(&self) -> usize {
        self.w_ih.ncols()
    }

    /// Runs over `x` (`T x I`), right to left when `reverse`. Output rows are
    /// aligned with input rows in both directions.
    pub fn forward(&self, x: ArrayView2<f64>, reverse: bool) -> (Array2<f64>, LstmCache) {
        let steps = x.nrows();
        let h = self.hidden_size();
        let pre = x.dot(&self.w_ih.t()) + &self.bias;
        let mut gates = Array2::zeros((steps, 4 * h));
        let mut cell = Array2::zeros((steps, h));
        let mut hidden = Array2::zeros((steps, h));
        let mut h_prev = Array1::<f64>::zeros(h);
        let mut c_prev = Array1::<f64>::zeros(h);
        for step in 0..steps {
            let t = if reverse { steps - 1 - step } else { step };
            let z = &pre.row(t) + &self.w_hh.dot(&h_prev);
            let mut gate = gates.row_mut(t);
            for j in 0..h {
                let i = sigmoid(z[j]);
                let f = sigmoid(z[h + j]);
                let g = z[2 * h + j].tanh();
                let o = sigmoid(z[3 * h + j]);
                let c = f * c_prev[j] + i * g;
                gate[j] = i;
                gate[h + j] = f;
                gate[2 * h + j] = g;
                gate[3 * h + j] = o;
                cell[[t, j]] = c;
                hidden[[t, j]] = o * c.tanh();
            }
            h_prev.assign(&hidden.row(t));
            c_prev.assign(&cell.row(t));
        }
        let cache = LstmCache {
            input: x.to_owned(),
            gates,
            cell,
            hidden: hidden.clone(),
            reverse,
        };
        (hidden, cache)
    }

    /// Backpropagation through time. `d_hidden` is `dL/dh_t` from above for
    /// every position; returns `dL/dx`.
    pub fn backward(&self, cache: &LstmCache, d_hidden: ArrayView2<f64>, grad: &mut Lstm) -> Array2<f64> {
        let steps = cache.input.nrows();
        let h = self.hidden_size();
        let mut dz_all = Array2::<f64>::zeros((steps, 4 * h));
        let mut h_prev_all = Array2::<f64>::zeros((steps, h));
        let mut dh_next = Array1::<f64>::zeros(h);
        let mut dc_next = Array1::<f64>::zeros(h);
        let order = |step: usize| if cache.reverse { steps - 1 - step } else { step };
        for step in (0..steps).rev() {
            let t = order(step);
            let prev = (step > 0).then(|| order(step - 1));
            let gate = cache.gates.row(t);
            let mut dz = dz_all.row_mut(t);
            for j in 0..h {
                let (i, f, g, o) = (gate[j], gate[h + j], gate[2 * h + j], gate[3 * h + j]);
                let c = cache.cell[[t, j]];
                let c_prev = prev.map_or(0.0, |p| cache.cell[[p, j]]);
                let tc = c.tanh();
                let dh = d_hidden[[t, j]] + dh_next[j];
                let dc = dh * o * (1.0 - tc * tc) + dc_next[j];
                dz[j] = dc * g * i * (1.0 - i);
                dz[h + j] = dc * c_prev * f * (1.0 - f);
                dz[2 * h + j] = dc * i * (1.0 - g * g);
                dz[3 * h + j] = dh * tc * o * (1.0 - o);
                dc_next[j] = dc * f;
            }
            if let Some(p) = prev {
                h_prev_all.row_mut(t).assign(&cache.hidden.row(p));
            }
            dh_next = self.w_hh.t().dot(&dz_all.row(t));
        }
        ndarray::linalg::general_mat_mul(1.0, &dz_all.t(), &cache.input, 1.0, &mut grad.w_ih);
        ndarray::linalg::general_mat_mul(1.0, &dz_all.t(), &h_prev_all, 1.0, &mut grad.w_hh);
        grad.bias += &dz_all.sum_axis(Axis(0));
        dz_all.dot(&self.w_ih)
    }
}

impl Module for Lstm {
    fn params(&self) -> Vec<ParamView<'_>> {
        vec![
            ("w_ih".into(), self.w_ih.view().into_dyn()),
            ("w_hh".into(), self.w_hh.view().into_dyn()),
            ("bias".into(), self.bias.view().into_dyn()),
        ]
    }

    fn params_mut(&mut self) -> Vec<ParamViewMut<'_>> {
        vec![
            ("w_ih".into(), self.w_ih.view_mut().into_dyn()),
            ("w_hh".into(), self.w_hh.view_mut().into_dyn()),
            ("bias".into(), self.bias.view_mut().into_dyn()),
        ]
    }
}

/// Bidirectional LSTM; output rows are `[forward | backward]`, width `2H`.
#[derive(Debug, Clone, PartialEq)]
pub struct Blstm {
    pub fwd: Lstm,
    pub bwd: Lstm,
}

#[derive(Debug, Clone)]
pub struct BlstmCache {
    fwd: LstmCache,
    bwd: LstmCache,
}

impl Blstm {
    pub fn init<R: Rng + ?Sized>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let fwd = Lstm::init(input, hidden, rng);
        let bwd = Lstm::init(input, hidden, rng);
        Self { fwd, bwd }
    }

    pub fn output_size(&self) -> usize {
        2 * self.fwd.hidden_size()
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> (Array2<f64>, BlstmCache) {
        let (hf, fwd) = self.fwd.forward(x, false);
        let (hb, bwd) = self.bwd.forward(x, true);
        let out = concatenate(Axis(1), &[hf.view(), hb.view()]).expect("equal row counts");
        (out, BlstmCache { fwd, bwd })
    }

    pub fn backward(&self, cache: &BlstmCache, d_out: ArrayView2<f64>, grad: &mut Blstm) -> Array2<f64> {
        let h = self.fwd.hidden_size();
        let mut dx = self.fwd.backward(&cache.fwd, d_out.slice(s![.., ..h]), &mut grad.fwd);
        dx += &self.bwd.backward(&cache.bwd, d_out.slice(s![.., h..]), &mut grad.bwd);
        dx
    }
}

impl Module for Blstm {
    fn params(&self) -> Vec<ParamView<'_>> {
        let mut v = nest("fwd", self.fwd.params());
        v.extend(nest("bwd", self.bwd.params()));
        v
    }

    fn params_mut(&mut self) -> Vec<ParamViewMut<'_>> {
        let mut v = nest_mut("fwd", self.fwd.params_mut());
        v.extend(nest_mut("bwd", self.bwd.params_mut()));
        v
    }
}
