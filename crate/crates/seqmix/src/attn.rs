//! Multi-head softmax attention with learned projections.
//!
//! Scores are scaled by 1/√head_dim and softmaxed per query row; the head
//! outputs are concatenated and passed through an output projection. The
//! same core serves self-attention (queries, keys, values all from one
//! sequence) and cross-attention (queries from one sequence, keys/values
//! from another).

use ndarray::{s, Array2, ArrayView2, Axis};
use nnet::{Linear, Module, Prng, Real, Tensor};

pub struct AttnLayer<F> {
    pub wq: Linear<F>,
    pub wk: Linear<F>,
    pub wv: Linear<F>,
    pub wo: Linear<F>,
    pub heads: usize,
}

/// Everything the backward pass needs: projected tensors, per-head softmax
/// rows, and the pre-output-projection mix.
pub struct AttnCache<F> {
    x_q: Array2<F>,
    x_kv: Array2<F>,
    q: Array2<F>,
    k: Array2<F>,
    v: Array2<F>,
    /// Per head: (L_q, L_k) rows summing to 1.
    pub attn: Vec<Array2<F>>,
    /// (L_q, dim) concatenated head outputs, input of the output projection.
    pub mix: Array2<F>,
    shared_input: bool,
}

impl<F: Real> AttnLayer<F> {
    pub fn new(dim: usize, heads: usize, rng: &mut Prng) -> Self {
        assert!(heads > 0 && dim % heads == 0, "head count must divide width");
        Self {
            wq: Linear::new(dim, dim, true, rng),
            wk: Linear::new(dim, dim, true, rng),
            wv: Linear::new(dim, dim, true, rng),
            wo: Linear::new(dim, dim, true, rng),
            heads,
        }
    }

    pub fn dim(&self) -> usize {
        self.wq.w.v.shape()[1]
    }

    /// Self-attention. With `causal` each row attends to itself and earlier
    /// rows only.
    pub fn forward(
        &self,
        x: ArrayView2<F>,
        causal: bool,
        want_grad: bool,
    ) -> (Array2<F>, Option<AttnCache<F>>) {
        let x = x.to_owned();
        let (y, cache) = self.core(&x, &x, causal, want_grad, true);
        (y, cache)
    }

    /// Cross-attention: queries from `a`, keys and values from `b`.
    pub fn cross(
        &self,
        a: ArrayView2<F>,
        b: ArrayView2<F>,
        want_grad: bool,
    ) -> (Array2<F>, Option<AttnCache<F>>) {
        self.core(&a.to_owned(), &b.to_owned(), false, want_grad, false)
    }

    fn core(
        &self,
        x_q: &Array2<F>,
        x_kv: &Array2<F>,
        causal: bool,
        want_grad: bool,
        shared_input: bool,
    ) -> (Array2<F>, Option<AttnCache<F>>) {
        assert!(!causal || shared_input, "causal masking needs square scores");
        let dim = self.dim();
        assert_eq!(x_q.shape()[1], dim, "query width");
        assert_eq!(x_kv.shape()[1], dim, "key/value width");
        let hd = dim / self.heads;
        let scale = F::of_f64(1.0 / (hd as f64).sqrt());
        let (lq, lk) = (x_q.shape()[0], x_kv.shape()[0]);

        let q = self.wq.forward(x_q);
        let k = self.wk.forward(x_kv);
        let v = self.wv.forward(x_kv);

        let mut mix = Array2::<F>::zeros((lq, dim));
        let mut attn = Vec::with_capacity(self.heads);
        for h in 0..self.heads {
            let cols = s![.., h * hd..(h + 1) * hd];
            let qh = q.slice(cols);
            let kh = k.slice(cols);
            let vh = v.slice(cols);

            let mut scores = qh.dot(&kh.t());
            scores.mapv_inplace(|s| s * scale);
            if causal {
                for i in 0..lq {
                    for j in i + 1..lk {
                        scores[[i, j]] = F::neg_infinity();
                    }
                }
            }
            // Row softmax, shifted by the row max for stability.
            for mut row in scores.rows_mut() {
                let m = row.iter().cloned().fold(F::neg_infinity(), F::max);
                row.mapv_inplace(|s| (s - m).exp());
                let z = row.sum();
                row.mapv_inplace(|e| e / z);
            }
            mix.slice_mut(cols).assign(&scores.dot(&vh));
            if want_grad {
                attn.push(scores);
            }
        }

        let y = self.wo.forward(&mix);
        let cache = want_grad.then(|| AttnCache {
            x_q: x_q.clone(),
            x_kv: x_kv.clone(),
            q,
            k,
            v,
            attn,
            mix,
            shared_input,
        });
        (y, cache)
    }

    /// Backward for a self-attention cache; returns dx.
    pub fn backward(&mut self, cache: &AttnCache<F>, dy: &Array2<F>) -> Array2<F> {
        assert!(cache.shared_input, "cache came from cross()");
        let (da, db) = self.backward_core(cache, dy);
        da + db
    }

    /// Backward for a cross-attention cache; returns (da, db).
    pub fn backward_cross(&mut self, cache: &AttnCache<F>, dy: &Array2<F>) -> (Array2<F>, Array2<F>) {
        assert!(!cache.shared_input, "cache came from forward()");
        self.backward_core(cache, dy)
    }

    fn backward_core(&mut self, cache: &AttnCache<F>, dy: &Array2<F>) -> (Array2<F>, Array2<F>) {
        let dim = self.dim();
        let hd = dim / self.heads;
        let scale = F::of_f64(1.0 / (hd as f64).sqrt());
        let (lq, lk) = (cache.q.shape()[0], cache.k.shape()[0]);

        let d_mix = self.wo.backward(&cache.mix, dy);

        let mut dq = Array2::<F>::zeros((lq, dim));
        let mut dk = Array2::<F>::zeros((lk, dim));
        let mut dv = Array2::<F>::zeros((lk, dim));
        for h in 0..self.heads {
            let cols = s![.., h * hd..(h + 1) * hd];
            let a = &cache.attn[h];
            let vh = cache.v.slice(cols);
            let d_mix_h = d_mix.slice(cols);

            dv.slice_mut(cols).assign(&a.t().dot(&d_mix_h));

            // Softmax backward: dS = A ⊙ (dA - rowsum(dA ⊙ A)).
            let mut ds = d_mix_h.dot(&vh.t());
            let dots = (&ds * a).sum_axis(Axis(1));
            for ((mut ds_row, a_row), dot) in
                ds.rows_mut().into_iter().zip(a.rows()).zip(dots.iter())
            {
                ndarray::Zip::from(&mut ds_row).and(&a_row).for_each(|ds, a| {
                    *ds = *a * (*ds - *dot);
                });
            }
            ds.mapv_inplace(|v| v * scale);

            dq.slice_mut(cols).assign(&ds.dot(&cache.k.slice(cols)));
            dk.slice_mut(cols).assign(&ds.t().dot(&cache.q.slice(cols)));
        }

        let da = self.wq.backward(&cache.x_q, &dq);
        let mut db = self.wk.backward(&cache.x_kv, &dk);
        db += &self.wv.backward(&cache.x_kv, &dv);
        (da, db)
    }
}

impl<F: Real> Module<F> for AttnLayer<F> {
    fn for_each_param(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Tensor<F>)) {
        self.wq.for_each_param(&format!("{prefix}.wq"), f);
        self.wk.for_each_param(&format!("{prefix}.wk"), f);
        self.wv.for_each_param(&format!("{prefix}.wv"), f);
        self.wo.for_each_param(&format!("{prefix}.wo"), f);
    }
}
