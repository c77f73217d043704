//! The pluggable sequence-mixing layer.
//!
//! Four interchangeable families behind one enum: softmax self-attention,
//! a causal selective-scan layer, its bidirectional variant, and
//! parameter-free Fourier mixing. The two scan layers produce their
//! per-timestep weights from the input via learned projections (decay
//! through a sigmoid, so it stays in (0,1)) and gate the scan output with
//! silu before the output projection.

use ndarray::{concatenate, s, Array1, Array2, Array3, ArrayView1, ArrayView2, Axis};
use nnet::{sigmoid, sigmoid_bwd, silu, silu_bwd, Linear, Module, Prng, Real, Tensor};

use crate::attn::{AttnCache, AttnLayer};
use crate::fnet::fnet_forward;
use crate::hydra::{flip_rows, shift_down, shift_up};
use crate::ssd::{ssd_scan, ssd_scan_vjp};

/// Which mixing family a layer belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MixerKind {
    SelfAttention,
    Mamba2,
    Hydra,
    Fnet,
}

impl MixerKind {
    pub const ALL: [MixerKind; 4] = [
        MixerKind::SelfAttention,
        MixerKind::Mamba2,
        MixerKind::Hydra,
        MixerKind::Fnet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MixerKind::SelfAttention => "attention",
            MixerKind::Mamba2 => "mamba2",
            MixerKind::Hydra => "hydra",
            MixerKind::Fnet => "fnet",
        }
    }
}

/// Error for an unrecognized mixer name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownMixer(pub String);

impl std::fmt::Display for UnknownMixer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "unknown mixer {:?} (expected attention, mamba2, hydra, or fnet)",
            self.0
        )
    }
}

impl std::error::Error for UnknownMixer {}

impl std::str::FromStr for MixerKind {
    type Err = UnknownMixer;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MixerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| UnknownMixer(s.to_string()))
    }
}

/// Scan heads: one per 64 channels when that divides evenly, else a single
/// head spanning the full width.
pub fn scan_heads(dim: usize) -> usize {
    if dim % 64 == 0 {
        dim / 64
    } else {
        1
    }
}

/// State size of each scan head in the learned layers.
pub const SCAN_STATE_DIM: usize = 16;

/// Causal selective-scan layer: per-head scans over half of a doubled input
/// projection, gated by the other half.
pub struct SsdLayer<F> {
    pub in_proj: Linear<F>,
    pub a_proj: Linear<F>,
    pub b_proj: Linear<F>,
    pub c_proj: Linear<F>,
    pub out_proj: Linear<F>,
    pub heads: usize,
    pub state_dim: usize,
}

pub struct SsdLayerCache<F> {
    x: Array2<F>,
    u: Array2<F>,
    z: Array2<F>,
    /// (L, heads) post-sigmoid decays.
    pub alpha: Array2<F>,
    b: Array2<F>,
    c: Array2<F>,
    hists: Vec<Array3<F>>,
    core: Array2<F>,
    gated: Array2<F>,
}

impl<F: Real> SsdLayer<F> {
    pub fn new(dim: usize, rng: &mut Prng) -> Self {
        let heads = scan_heads(dim);
        let n = SCAN_STATE_DIM;
        let mut a_proj = Linear::new(dim, heads, true, rng);
        // Bias the decay toward remembering at init: sigmoid(1) ≈ 0.73.
        a_proj.b.as_mut().expect("bias enabled").v.fill(F::one());
        Self {
            in_proj: Linear::new(dim, 2 * dim, true, rng),
            a_proj,
            b_proj: Linear::new(dim, heads * n, true, rng),
            c_proj: Linear::new(dim, heads * n, true, rng),
            out_proj: Linear::new(dim, dim, true, rng),
            heads,
            state_dim: n,
        }
    }

    pub fn dim(&self) -> usize {
        self.in_proj.w.v.shape()[1]
    }

    pub fn forward(&self, x: ArrayView2<F>, want_grad: bool) -> (Array2<F>, Option<SsdLayerCache<F>>) {
        let dim = self.dim();
        let l = x.shape()[0];
        let hd = dim / self.heads;
        let n = self.state_dim;

        let x = x.to_owned();
        let uz = self.in_proj.forward(&x);
        let u = uz.slice(s![.., ..dim]).to_owned();
        let z = uz.slice(s![.., dim..]).to_owned();
        let alpha = sigmoid(&self.a_proj.forward(&x));
        let b = self.b_proj.forward(&x);
        let c = self.c_proj.forward(&x);

        let mut core = Array2::<F>::zeros((l, dim));
        let mut hists = Vec::new();
        for h in 0..self.heads {
            let (y_h, hist) = ssd_scan(
                u.slice(s![.., h * hd..(h + 1) * hd]),
                alpha.column(h),
                b.slice(s![.., h * n..(h + 1) * n]),
                c.slice(s![.., h * n..(h + 1) * n]),
                want_grad,
            );
            core.slice_mut(s![.., h * hd..(h + 1) * hd]).assign(&y_h);
            if let Some(hist) = hist {
                hists.push(hist);
            }
        }

        let gated = &core * &silu(&z);
        let y = self.out_proj.forward(&gated);
        let cache = want_grad.then(|| SsdLayerCache {
            x,
            u,
            z,
            alpha,
            b,
            c,
            hists,
            core,
            gated,
        });
        (y, cache)
    }

    pub fn backward(&mut self, cache: &SsdLayerCache<F>, dy: &Array2<F>) -> Array2<F> {
        let dim = self.dim();
        let l = cache.x.shape()[0];
        let hd = dim / self.heads;
        let n = self.state_dim;

        let d_gated = self.out_proj.backward(&cache.gated, dy);
        let d_core = &d_gated * &silu(&cache.z);
        let dz = silu_bwd(&cache.z, &(&d_gated * &cache.core));

        let mut du = Array2::<F>::zeros((l, dim));
        let mut d_alpha = Array2::<F>::zeros((l, self.heads));
        let mut db = Array2::<F>::zeros((l, self.heads * n));
        let mut dc = Array2::<F>::zeros((l, self.heads * n));
        for h in 0..self.heads {
            let (du_h, da_h, db_h, dc_h) = ssd_scan_vjp(
                cache.u.slice(s![.., h * hd..(h + 1) * hd]),
                cache.alpha.column(h),
                cache.b.slice(s![.., h * n..(h + 1) * n]),
                cache.c.slice(s![.., h * n..(h + 1) * n]),
                &cache.hists[h],
                &d_core.slice(s![.., h * hd..(h + 1) * hd]).to_owned(),
            );
            du.slice_mut(s![.., h * hd..(h + 1) * hd]).assign(&du_h);
            d_alpha.column_mut(h).assign(&da_h);
            db.slice_mut(s![.., h * n..(h + 1) * n]).assign(&db_h);
            dc.slice_mut(s![.., h * n..(h + 1) * n]).assign(&dc_h);
        }

        let da_pre = sigmoid_bwd(&cache.alpha, &d_alpha);
        let duz = concatenate(Axis(1), &[du.view(), dz.view()]).expect("matching rows");

        let mut dx = self.in_proj.backward(&cache.x, &duz);
        dx += &self.a_proj.backward(&cache.x, &da_pre);
        dx += &self.b_proj.backward(&cache.x, &db);
        dx += &self.c_proj.backward(&cache.x, &dc);
        dx
    }
}

impl<F: Real> Module<F> for SsdLayer<F> {
    fn for_each_param(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Tensor<F>)) {
        self.in_proj.for_each_param(&format!("{prefix}.in_proj"), f);
        self.a_proj.for_each_param(&format!("{prefix}.a_proj"), f);
        self.b_proj.for_each_param(&format!("{prefix}.b_proj"), f);
        self.c_proj.for_each_param(&format!("{prefix}.c_proj"), f);
        self.out_proj.for_each_param(&format!("{prefix}.out_proj"), f);
    }
}

fn rev1<F: Real>(v: ArrayView1<F>) -> Array1<F> {
    let mut r = v.to_owned();
    r.invert_axis(Axis(0));
    r
}

/// Bidirectional variant: a forward scan and a reversed scan (each with its
/// own input-dependent weights), both shifted off the diagonal, plus a
/// learned per-channel diagonal. Gating and projections as in [`SsdLayer`].
pub struct HydraLayer<F> {
    pub in_proj: Linear<F>,
    pub a_fwd: Linear<F>,
    pub b_fwd: Linear<F>,
    pub c_fwd: Linear<F>,
    pub a_bwd: Linear<F>,
    pub b_bwd: Linear<F>,
    pub c_bwd: Linear<F>,
    /// (dim) diagonal term, initialized to ones.
    pub d: Tensor<F>,
    pub out_proj: Linear<F>,
    pub heads: usize,
    pub state_dim: usize,
}

pub struct HydraLayerCache<F> {
    x: Array2<F>,
    u: Array2<F>,
    z: Array2<F>,
    af: Array2<F>,
    bf: Array2<F>,
    cf: Array2<F>,
    ab: Array2<F>,
    bb: Array2<F>,
    cb: Array2<F>,
    hist_f: Vec<Array3<F>>,
    /// Histories of the reversed-order scans.
    hist_b: Vec<Array3<F>>,
    core: Array2<F>,
    gated: Array2<F>,
}

impl<F: Real> HydraLayer<F> {
    pub fn new(dim: usize, rng: &mut Prng) -> Self {
        let heads = scan_heads(dim);
        let n = SCAN_STATE_DIM;
        let mut a_fwd = Linear::new(dim, heads, true, rng);
        a_fwd.b.as_mut().expect("bias enabled").v.fill(F::one());
        let mut a_bwd = Linear::new(dim, heads, true, rng);
        a_bwd.b.as_mut().expect("bias enabled").v.fill(F::one());
        Self {
            in_proj: Linear::new(dim, 2 * dim, true, rng),
            a_fwd,
            b_fwd: Linear::new(dim, heads * n, true, rng),
            c_fwd: Linear::new(dim, heads * n, true, rng),
            a_bwd,
            b_bwd: Linear::new(dim, heads * n, true, rng),
            c_bwd: Linear::new(dim, heads * n, true, rng),
            d: Tensor::filled(&[dim], 1.0),
            out_proj: Linear::new(dim, dim, true, rng),
            heads,
            state_dim: n,
        }
    }

    pub fn dim(&self) -> usize {
        self.in_proj.w.v.shape()[1]
    }

    pub fn forward(
        &self,
        x: ArrayView2<F>,
        want_grad: bool,
    ) -> (Array2<F>, Option<HydraLayerCache<F>>) {
        let dim = self.dim();
        let l = x.shape()[0];
        let hd = dim / self.heads;
        let n = self.state_dim;

        let x = x.to_owned();
        let uz = self.in_proj.forward(&x);
        let u = uz.slice(s![.., ..dim]).to_owned();
        let z = uz.slice(s![.., dim..]).to_owned();
        let af = sigmoid(&self.a_fwd.forward(&x));
        let bf = self.b_fwd.forward(&x);
        let cf = self.c_fwd.forward(&x);
        let ab = sigmoid(&self.a_bwd.forward(&x));
        let bb = self.b_bwd.forward(&x);
        let cb = self.c_bwd.forward(&x);
        let d = self.d.a1();

        let mut core = Array2::<F>::zeros((l, dim));
        let mut hist_f = Vec::new();
        let mut hist_b = Vec::new();
        for h in 0..self.heads {
            let ch = s![.., h * hd..(h + 1) * hd];
            let st = s![.., h * n..(h + 1) * n];
            let u_h = u.slice(ch);

            let (y_f, hf) = ssd_scan(u_h, af.column(h), bf.slice(st), cf.slice(st), want_grad);

            let u_rev = flip_rows(u_h);
            let a_rev = rev1(ab.column(h));
            let b_rev = flip_rows(bb.slice(st));
            let c_rev = flip_rows(cb.slice(st));
            let (y_b, hb) = ssd_scan(
                u_rev.view(),
                a_rev.view(),
                b_rev.view(),
                c_rev.view(),
                want_grad,
            );

            let mut core_h = shift_down(y_f.view());
            core_h += &flip_rows(shift_down(y_b.view()).view());
            let d_h = d.slice(s![h * hd..(h + 1) * hd]);
            for (mut row, u_row) in core_h.outer_iter_mut().zip(u_h.outer_iter()) {
                ndarray::Zip::from(&mut row).and(&u_row).and(&d_h).for_each(
                    |y, u, d| *y += *u * *d,
                );
            }
            core.slice_mut(ch).assign(&core_h);
            if let (Some(hf), Some(hb)) = (hf, hb) {
                hist_f.push(hf);
                hist_b.push(hb);
            }
        }

        let gated = &core * &silu(&z);
        let y = self.out_proj.forward(&gated);
        let cache = want_grad.then(|| HydraLayerCache {
            x,
            u,
            z,
            af,
            bf,
            cf,
            ab,
            bb,
            cb,
            hist_f,
            hist_b,
            core,
            gated,
        });
        (y, cache)
    }

    pub fn backward(&mut self, cache: &HydraLayerCache<F>, dy: &Array2<F>) -> Array2<F> {
        let dim = self.dim();
        let l = cache.x.shape()[0];
        let hd = dim / self.heads;
        let n = self.state_dim;

        let d_gated = self.out_proj.backward(&cache.gated, dy);
        let d_core = &d_gated * &silu(&cache.z);
        let dz = silu_bwd(&cache.z, &(&d_gated * &cache.core));

        let d = self.d.a1().to_owned();
        let mut du = Array2::<F>::zeros((l, dim));
        let mut daf = Array2::<F>::zeros((l, self.heads));
        let mut dbf = Array2::<F>::zeros((l, self.heads * n));
        let mut dcf = Array2::<F>::zeros((l, self.heads * n));
        let mut dab = Array2::<F>::zeros((l, self.heads));
        let mut dbb = Array2::<F>::zeros((l, self.heads * n));
        let mut dcb = Array2::<F>::zeros((l, self.heads * n));
        let mut dd = Array1::<F>::zeros(dim);

        for h in 0..self.heads {
            let ch = s![.., h * hd..(h + 1) * hd];
            let st = s![.., h * n..(h + 1) * n];
            let u_h = cache.u.slice(ch);
            let d_core_h = d_core.slice(ch).to_owned();

            // Diagonal term: core_h += u_h · diag(d_h).
            {
                let d_h = d.slice(s![h * hd..(h + 1) * hd]);
                let mut dd_h = dd.slice_mut(s![h * hd..(h + 1) * hd]);
                for (g_row, u_row) in d_core_h.outer_iter().zip(u_h.outer_iter()) {
                    ndarray::Zip::from(&mut dd_h).and(&g_row).and(&u_row).for_each(
                        |dd, g, u| *dd += *g * *u,
                    );
                }
                let mut du_h = du.slice_mut(ch);
                for (mut du_row, g_row) in du_h.outer_iter_mut().zip(d_core_h.outer_iter()) {
                    ndarray::Zip::from(&mut du_row).and(&g_row).and(&d_h).for_each(
                        |du, g, d| *du += *g * *d,
                    );
                }
            }

            // Forward branch: core_h += shift_down(scan), adjoint shift_up.
            let d_yf = shift_up(d_core_h.view());
            let (du1, da1, db1, dc1) = ssd_scan_vjp(
                u_h,
                cache.af.column(h),
                cache.bf.slice(st),
                cache.cf.slice(st),
                &cache.hist_f[h],
                &d_yf,
            );
            du.slice_mut(ch).zip_mut_with(&du1, |a, b| *a += *b);
            daf.column_mut(h).assign(&da1);
            dbf.slice_mut(st).assign(&db1);
            dcf.slice_mut(st).assign(&dc1);

            // Backward branch: core_h += flip(shift_down(scan over reversed
            // rows)); every piece flips back to original orientation.
            let u_rev = flip_rows(u_h);
            let a_rev = rev1(cache.ab.column(h));
            let b_rev = flip_rows(cache.bb.slice(st));
            let c_rev = flip_rows(cache.cb.slice(st));
            let d_yb = shift_up(flip_rows(d_core_h.view()).view());
            let (du2_rev, da2_rev, db2_rev, dc2_rev) = ssd_scan_vjp(
                u_rev.view(),
                a_rev.view(),
                b_rev.view(),
                c_rev.view(),
                &cache.hist_b[h],
                &d_yb,
            );
            du.slice_mut(ch)
                .zip_mut_with(&flip_rows(du2_rev.view()), |a, b| *a += *b);
            dab.column_mut(h).assign(&rev1(da2_rev.view()));
            dbb.slice_mut(st).assign(&flip_rows(db2_rev.view()));
            dcb.slice_mut(st).assign(&flip_rows(dc2_rev.view()));
        }

        self.d.g += &dd.into_dyn();

        let daf_pre = sigmoid_bwd(&cache.af, &daf);
        let dab_pre = sigmoid_bwd(&cache.ab, &dab);
        let duz = concatenate(Axis(1), &[du.view(), dz.view()]).expect("matching rows");

        let mut dx = self.in_proj.backward(&cache.x, &duz);
        dx += &self.a_fwd.backward(&cache.x, &daf_pre);
        dx += &self.b_fwd.backward(&cache.x, &dbf);
        dx += &self.c_fwd.backward(&cache.x, &dcf);
        dx += &self.a_bwd.backward(&cache.x, &dab_pre);
        dx += &self.b_bwd.backward(&cache.x, &dbb);
        dx += &self.c_bwd.backward(&cache.x, &dcb);
        dx
    }
}

impl<F: Real> Module<F> for HydraLayer<F> {
    fn for_each_param(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Tensor<F>)) {
        self.in_proj.for_each_param(&format!("{prefix}.in_proj"), f);
        self.a_fwd.for_each_param(&format!("{prefix}.a_fwd"), f);
        self.b_fwd.for_each_param(&format!("{prefix}.b_fwd"), f);
        self.c_fwd.for_each_param(&format!("{prefix}.c_fwd"), f);
        self.a_bwd.for_each_param(&format!("{prefix}.a_bwd"), f);
        self.b_bwd.for_each_param(&format!("{prefix}.b_bwd"), f);
        self.c_bwd.for_each_param(&format!("{prefix}.c_bwd"), f);
        f(&format!("{prefix}.d"), &mut self.d);
        self.out_proj.for_each_param(&format!("{prefix}.out_proj"), f);
    }
}

/// One sequence-mixing layer of any family.
pub enum Mixer<F> {
    SelfAttention(AttnLayer<F>),
    Mamba2(SsdLayer<F>),
    Hydra(HydraLayer<F>),
    Fnet,
}

pub enum MixerCache<F> {
    SelfAttention(AttnCache<F>),
    Mamba2(SsdLayerCache<F>),
    Hydra(HydraLayerCache<F>),
    Fnet,
}

impl<F: Real> Mixer<F> {
    pub fn new(kind: MixerKind, dim: usize, rng: &mut Prng) -> Self {
        match kind {
            MixerKind::SelfAttention => Mixer::SelfAttention(AttnLayer::new(dim, 2, rng)),
            MixerKind::Mamba2 => Mixer::Mamba2(SsdLayer::new(dim, rng)),
            MixerKind::Hydra => Mixer::Hydra(HydraLayer::new(dim, rng)),
            MixerKind::Fnet => Mixer::Fnet,
        }
    }

    pub fn kind(&self) -> MixerKind {
        match self {
            Mixer::SelfAttention(_) => MixerKind::SelfAttention,
            Mixer::Mamba2(_) => MixerKind::Mamba2,
            Mixer::Hydra(_) => MixerKind::Hydra,
            Mixer::Fnet => MixerKind::Fnet,
        }
    }

    pub fn forward(&self, x: ArrayView2<F>, want_grad: bool) -> (Array2<F>, Option<MixerCache<F>>) {
        match self {
            Mixer::SelfAttention(m) => {
                let (y, c) = m.forward(x, false, want_grad);
                (y, c.map(MixerCache::SelfAttention))
            }
            Mixer::Mamba2(m) => {
                let (y, c) = m.forward(x, want_grad);
                (y, c.map(MixerCache::Mamba2))
            }
            Mixer::Hydra(m) => {
                let (y, c) = m.forward(x, want_grad);
                (y, c.map(MixerCache::Hydra))
            }
            Mixer::Fnet => (fnet_forward(x), want_grad.then_some(MixerCache::Fnet)),
        }
    }

    pub fn backward(&mut self, cache: &MixerCache<F>, dy: &Array2<F>) -> Array2<F> {
        match (self, cache) {
            (Mixer::SelfAttention(m), MixerCache::SelfAttention(c)) => m.backward(c, dy),
            (Mixer::Mamba2(m), MixerCache::Mamba2(c)) => m.backward(c, dy),
            (Mixer::Hydra(m), MixerCache::Hydra(c)) => m.backward(c, dy),
            // Fourier mixing is linear and self-adjoint.
            (Mixer::Fnet, MixerCache::Fnet) => fnet_forward(dy.view()),
            _ => panic!("cache belongs to a different mixer kind"),
        }
    }
}

impl<F: Real> Module<F> for Mixer<F> {
    fn for_each_param(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Tensor<F>)) {
        match self {
            Mixer::SelfAttention(m) => m.for_each_param(prefix, f),
            Mixer::Mamba2(m) => m.for_each_param(prefix, f),
            Mixer::Hydra(m) => m.for_each_param(prefix, f),
            Mixer::Fnet => {}
        }
    }
}

enum CrossCacheInner<F> {
    Attn(AttnCache<F>),
    Concat {
        cache: MixerCache<F>,
        l_a: usize,
        l_full: usize,
    },
}

/// Cache of one [`cross_mix`] call.
pub struct CrossCache<F>(CrossCacheInner<F>);

/// Mix two sequences into outputs aligned with `a`. Attention uses `a` as
/// queries and `b` as keys/values; attention-free mixers run on the
/// time-concatenation [a; b] and keep the first rows.
pub fn cross_mix<F: Real>(
    mixer: &Mixer<F>,
    a: ArrayView2<F>,
    b: ArrayView2<F>,
    want_grad: bool,
) -> (Array2<F>, Option<CrossCache<F>>) {
    assert_eq!(a.shape()[1], b.shape()[1], "channel width mismatch");
    match mixer {
        Mixer::SelfAttention(m) => {
            let (y, c) = m.cross(a, b, want_grad);
            (y, c.map(|c| CrossCache(CrossCacheInner::Attn(c))))
        }
        _ => {
            let l_a = a.shape()[0];
            let cat = concatenate(Axis(0), &[a.view(), b.view()]).expect("same width");
            let l_full = cat.shape()[0];
            let (y_full, cache) = mixer.forward(cat.view(), want_grad);
            let y = y_full.slice(s![..l_a, ..]).to_owned();
            (
                y,
                cache.map(|cache| CrossCache(CrossCacheInner::Concat { cache, l_a, l_full })),
            )
        }
    }
}

/// Gradients of [`cross_mix`] with respect to both inputs.
pub fn cross_mix_backward<F: Real>(
    mixer: &mut Mixer<F>,
    cache: &CrossCache<F>,
    dy: &Array2<F>,
) -> (Array2<F>, Array2<F>) {
    match &cache.0 {
        CrossCacheInner::Attn(c) => match mixer {
            Mixer::SelfAttention(m) => m.backward_cross(c, dy),
            _ => panic!("cache belongs to a different mixer kind"),
        },
        CrossCacheInner::Concat { cache, l_a, l_full } => {
            let dim = dy.shape()[1];
            let mut d_full = Array2::<F>::zeros((*l_full, dim));
            d_full.slice_mut(s![..*l_a, ..]).assign(dy);
            let dx = mixer.backward(cache, &d_full);
            let da = dx.slice(s![..*l_a, ..]).to_owned();
            let db = dx.slice(s![*l_a.., ..]).to_owned();
            (da, db)
        }
    }
}
