use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::tensor::{col2im, conv_out, from_channel_major, im2col, to_channel_major, transpose, Float, Tensor};

/// A named array of weights and its accumulated gradient. Buffers such as
/// batch-norm running statistics are stored as non-trainable params.
#[derive(Clone, Debug, PartialEq)]
pub struct Param<T> {
    pub value: Vec<T>,
    pub grad: Vec<T>,
    pub shape: Vec<usize>,
    pub trainable: bool,
}

impl<T: Float> Param<T> {
    pub fn new(shape: &[usize], value: Vec<T>) -> Self {
        assert_eq!(shape.iter().product::<usize>(), value.len());
        Self {
            grad: vec![T::zero(); value.len()],
            value,
            shape: shape.to_vec(),
            trainable: true,
        }
    }

    pub fn filled(shape: &[usize], v: T) -> Self {
        Self::new(shape, vec![v; shape.iter().product()])
    }

    pub fn normal(shape: &[usize], std: f64, rng: &mut impl Rng) -> Self {
        let dist = Normal::new(0.0, std).expect("positive std");
        let n = shape.iter().product();
        Self::new(shape, (0..n).map(|_| T::of(dist.sample(rng))).collect())
    }

    pub fn buffer(shape: &[usize], v: T) -> Self {
        Self {
            trainable: false,
            ..Self::filled(shape, v)
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(T::zero());
    }
}

pub type Visitor<'a, T> = dyn FnMut(&str, &mut Param<T>) + 'a;

/// A differentiable layer. `backward` must follow the `forward` whose
/// activations it differentiates; parameter gradients accumulate.
pub trait Layer<T: Float>: Send {
    fn forward(&mut self, x: &Tensor<T>, train: bool) -> Tensor<T>;

    fn backward(&mut self, grad: &Tensor<T>) -> Tensor<T>;

    /// Visits every param (trainable or not) in a fixed order.
    fn visit(&mut self, _prefix: &str, _f: &mut Visitor<'_, T>) {}
}

pub(crate) fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

/// Weight initialization scheme.
#[derive(Clone, Copy, Debug)]
pub enum Init {
    /// Zero-mean normal with fixed standard deviation.
    Normal(f64),
    /// He normal: `std = sqrt(2 / fan_in)`.
    Kaiming,
}

impl Init {
    fn std(self, fan_in: usize) -> f64 {
        match self {
            Init::Normal(s) => s,
            Init::Kaiming => (2.0 / fan_in as f64).sqrt(),
        }
    }
}

/// Forward activations kept for the backward pass: the unfolded input
/// (or channel-major input for layers that need no unfolding).
struct ConvCache<T> {
    cols: Vec<T>,
    in_shape: [usize; 4],
}

pub struct Conv2d<T> {
    pub weight: Param<T>,
    pub bias: Option<Param<T>>,
    cin: usize,
    cout: usize,
    k: usize,
    stride: usize,
    pad: usize,
    cache: Option<ConvCache<T>>,
}

impl<T: Float> Conv2d<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        cin: usize,
        cout: usize,
        k: usize,
        stride: usize,
        pad: usize,
        bias: bool,
        init: Init,
        rng: &mut impl Rng,
    ) -> Self {
        Self {
            weight: Param::normal(&[cout, cin, k, k], init.std(cin * k * k), rng),
            bias: bias.then(|| Param::filled(&[cout], T::zero())),
            cin,
            cout,
            k,
            stride,
            pad,
            cache: None,
        }
    }

    pub fn output_size(&self, h: usize, w: usize) -> (usize, usize) {
        (
            conv_out(h, self.k, self.stride, self.pad),
            conv_out(w, self.k, self.stride, self.pad),
        )
    }

    fn is_pointwise(&self) -> bool {
        self.k == 1 && self.stride == 1 && self.pad == 0
    }
}

impl<T: Float> Layer<T> for Conv2d<T> {
    fn forward(&mut self, x: &Tensor<T>, _train: bool) -> Tensor<T> {
        let [n, c, h, w] = x.shape();
        assert_eq!(c, self.cin, "conv input channels");
        let (ho, wo) = self.output_size(h, w);
        let rows = self.cin * self.k * self.k;
        let hw = ho * wo;
        let ncols = n * hw;
        let cols = if self.is_pointwise() {
            to_channel_major(x)
        } else {
            let mut cols = vec![T::zero(); rows * ncols];
            for i in 0..n {
                im2col(x.item(i), c, h, w, self.k, self.stride, self.pad, &mut cols[i * hw..], ncols);
            }
            cols
        };
        let mut out = vec![T::zero(); self.cout * ncols];
        if let Some(b) = &self.bias {
            for (row, &bv) in out.chunks_mut(ncols).zip(&b.value) {
                row.fill(bv);
            }
        }
        let beta = if self.bias.is_some() { T::one() } else { T::zero() };
        T::gemm(
            self.cout,
            rows,
            ncols,
            T::one(),
            &self.weight.value,
            rows as isize,
            1,
            &cols,
            ncols as isize,
            1,
            beta,
            &mut out,
            ncols as isize,
            1,
        );
        self.cache = Some(ConvCache {
            cols,
            in_shape: x.shape(),
        });
        from_channel_major(&out, [n, self.cout, ho, wo])
    }

    fn backward(&mut self, grad: &Tensor<T>) -> Tensor<T> {
        let cache = self.cache.as_ref().expect("forward before backward");
        let [n, c, h, w] = cache.in_shape;
        let [_, _, ho, wo] = grad.shape();
        let rows = self.cin * self.k * self.k;
        let hw = ho * wo;
        let ncols = n * hw;
        let g = to_channel_major(grad);
        // dW += G · colsᵀ
        let cols_t = transpose(&cache.cols, rows, ncols);
        T::gemm(
            self.cout,
            ncols,
            rows,
            T::one(),
            &g,
            ncols as isize,
            1,
            &cols_t,
            rows as isize,
            1,
            T::one(),
            &mut self.weight.grad,
            rows as isize,
            1,
        );
        if let Some(b) = &mut self.bias {
            for (bg, row) in b.grad.iter_mut().zip(g.chunks(ncols)) {
                *bg += row.iter().copied().sum();
            }
        }
        // dcols = Wᵀ · G
        let mut dcols = vec![T::zero(); rows * ncols];
        T::gemm(
            rows,
            self.cout,
            ncols,
            T::one(),
            &self.weight.value,
            1,
            rows as isize,
            &g,
            ncols as isize,
            1,
            T::zero(),
            &mut dcols,
            ncols as isize,
            1,
        );
        if self.is_pointwise() {
            return from_channel_major(&dcols, cache.in_shape);
        }
        let mut dx = Tensor::zeros(cache.in_shape);
        for i in 0..n {
            col2im(&dcols[i * hw..], ncols, c, h, w, self.k, self.stride, self.pad, dx.item_mut(i));
        }
        dx
    }

    fn visit(&mut self, prefix: &str, f: &mut Visitor<'_, T>) {
        f(&join(prefix, "weight"), &mut self.weight);
        if let Some(b) = &mut self.bias {
            f(&join(prefix, "bias"), b);
        }
    }
}

/// Transposed convolution, the adjoint of [`Conv2d`] with the same geometry.
pub struct ConvTranspose2d<T> {
    /// Shape `[cin, cout, k, k]`.
    pub weight: Param<T>,
    pub bias: Option<Param<T>>,
    cin: usize,
    cout: usize,
    k: usize,
    stride: usize,
    pad: usize,
    cache: Option<ConvCache<T>>,
}

impl<T: Float> ConvTranspose2d<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        cin: usize,
        cout: usize,
        k: usize,
        stride: usize,
        pad: usize,
        bias: bool,
        init: Init,
        rng: &mut impl Rng,
    ) -> Self {
        Self {
            weight: Param::normal(&[cin, cout, k, k], init.std(cin * k * k), rng),
            bias: bias.then(|| Param::filled(&[cout], T::zero())),
            cin,
            cout,
            k,
            stride,
            pad,
            cache: None,
        }
    }

    pub fn output_size(&self, h: usize, w: usize) -> (usize, usize) {
        (
            (h - 1) * self.stride + self.k - 2 * self.pad,
            (w - 1) * self.stride + self.k - 2 * self.pad,
        )
    }
}

impl<T: Float> Layer<T> for ConvTranspose2d<T> {
    fn forward(&mut self, x: &Tensor<T>, _train: bool) -> Tensor<T> {
        let [n, c, h, w] = x.shape();
        assert_eq!(c, self.cin, "transposed conv input channels");
        let (ho, wo) = self.output_size(h, w);
        let rows = self.cout * self.k * self.k;
        let hw = h * w;
        let ncols = n * hw;
        let xm = to_channel_major(x);
        // cols = Wᵀ · X
        let mut cols = vec![T::zero(); rows * ncols];
        T::gemm(
            rows,
            self.cin,
            ncols,
            T::one(),
            &self.weight.value,
            1,
            rows as isize,
            &xm,
            ncols as isize,
            1,
            T::zero(),
            &mut cols,
            ncols as isize,
            1,
        );
        let mut out = Tensor::zeros([n, self.cout, ho, wo]);
        let plane = ho * wo;
        for i in 0..n {
            let dst = out.item_mut(i);
            if let Some(b) = &self.bias {
                for (o, &bv) in b.value.iter().enumerate() {
                    dst[o * plane..(o + 1) * plane].fill(bv);
                }
            }
            col2im(&cols[i * hw..], ncols, self.cout, ho, wo, self.k, self.stride, self.pad, dst);
        }
        self.cache = Some(ConvCache {
            cols: xm,
            in_shape: x.shape(),
        });
        out
    }

    fn backward(&mut self, grad: &Tensor<T>) -> Tensor<T> {
        let cache = self.cache.as_ref().expect("forward before backward");
        let [n, _, h, w] = cache.in_shape;
        let [_, _, ho, wo] = grad.shape();
        let rows = self.cout * self.k * self.k;
        let hw = h * w;
        let ncols = n * hw;
        let mut dcols = vec![T::zero(); rows * ncols];
        for i in 0..n {
            im2col(grad.item(i), self.cout, ho, wo, self.k, self.stride, self.pad, &mut dcols[i * hw..], ncols);
        }
        // dX = W · dcols
        let mut dx = vec![T::zero(); self.cin * ncols];
        T::gemm(
            self.cin,
            rows,
            ncols,
            T::one(),
            &self.weight.value,
            rows as isize,
            1,
            &dcols,
            ncols as isize,
            1,
            T::zero(),
            &mut dx,
            ncols as isize,
            1,
        );
        // dW += X · dcolsᵀ
        let dcols_t = transpose(&dcols, rows, ncols);
        T::gemm(
            self.cin,
            ncols,
            rows,
            T::one(),
            &cache.cols,
            ncols as isize,
            1,
            &dcols_t,
            rows as isize,
            1,
            T::one(),
            &mut self.weight.grad,
            rows as isize,
            1,
        );
        if let Some(b) = &mut self.bias {
            let plane = ho * wo;
            for i in 0..n {
                let g = grad.item(i);
                for (o, bg) in b.grad.iter_mut().enumerate() {
                    *bg += g[o * plane..(o + 1) * plane].iter().copied().sum();
                }
            }
        }
        from_channel_major(&dx, cache.in_shape)
    }

    fn visit(&mut self, prefix: &str, f: &mut Visitor<'_, T>) {
        f(&join(prefix, "weight"), &mut self.weight);
        if let Some(b) = &mut self.bias {
            f(&join(prefix, "bias"), b);
        }
    }
}

/// Per-channel batch normalization. Training uses batch statistics and
/// updates running averages; inference uses the running averages.
pub struct BatchNorm2d<T> {
    pub gamma: Param<T>,
    pub beta: Param<T>,
    pub running_mean: Param<T>,
    pub running_var: Param<T>,
    eps: f64,
    momentum: f64,
    cache: Option<BnCache<T>>,
}

struct BnCache<T> {
    xhat: Tensor<T>,
    inv_std: Vec<T>,
    train: bool,
}

impl<T: Float> BatchNorm2d<T> {
    pub fn new(channels: usize) -> Self {
        Self {
            gamma: Param::filled(&[channels], T::one()),
            beta: Param::filled(&[channels], T::zero()),
            running_mean: Param::buffer(&[channels], T::zero()),
            running_var: Param::buffer(&[channels], T::one()),
            eps: 1e-5,
            momentum: 0.1,
            cache: None,
        }
    }
}

impl<T: Float> Layer<T> for BatchNorm2d<T> {
    fn forward(&mut self, x: &Tensor<T>, train: bool) -> Tensor<T> {
        let [n, c, h, w] = x.shape();
        let hw = h * w;
        let count = (n * hw) as f64;
        let mut mean = vec![0.0f64; c];
        let mut var = vec![0.0f64; c];
        if train {
            for i in 0..n {
                let item = x.item(i);
                for ch in 0..c {
                    mean[ch] += item[ch * hw..(ch + 1) * hw].iter().map(|v| v.as_f64()).sum::<f64>();
                }
            }
            mean.iter_mut().for_each(|m| *m /= count);
            for i in 0..n {
                let item = x.item(i);
                for ch in 0..c {
                    var[ch] += item[ch * hw..(ch + 1) * hw]
                        .iter()
                        .map(|v| (v.as_f64() - mean[ch]).powi(2))
                        .sum::<f64>();
                }
            }
            var.iter_mut().for_each(|v| *v /= count);
            let unbiased = if count > 1.0 { count / (count - 1.0) } else { 1.0 };
            for ch in 0..c {
                let rm = &mut self.running_mean.value[ch];
                *rm = T::of((1.0 - self.momentum) * rm.as_f64() + self.momentum * mean[ch]);
                let rv = &mut self.running_var.value[ch];
                *rv = T::of((1.0 - self.momentum) * rv.as_f64() + self.momentum * var[ch] * unbiased);
            }
        } else {
            mean = self.running_mean.value.iter().map(|v| v.as_f64()).collect();
            var = self.running_var.value.iter().map(|v| v.as_f64()).collect();
        }
        let inv_std: Vec<T> = var.iter().map(|v| T::of(1.0 / (v + self.eps).sqrt())).collect();
        let mean: Vec<T> = mean.into_iter().map(T::of).collect();
        let mut xhat = Tensor::zeros(x.shape());
        let mut out = Tensor::zeros(x.shape());
        for i in 0..n {
            let src = x.item(i);
            let xh = xhat.item_mut(i);
            for ch in 0..c {
                for j in ch * hw..(ch + 1) * hw {
                    xh[j] = (src[j] - mean[ch]) * inv_std[ch];
                }
            }
            let dst = out.item_mut(i);
            let xh = xhat.item(i);
            for ch in 0..c {
                let (g, b) = (self.gamma.value[ch], self.beta.value[ch]);
                for j in ch * hw..(ch + 1) * hw {
                    dst[j] = g * xh[j] + b;
                }
            }
        }
        self.cache = Some(BnCache {
            xhat,
            inv_std,
            train,
        });
        out
    }

    fn backward(&mut self, grad: &Tensor<T>) -> Tensor<T> {
        let cache = self.cache.as_ref().expect("forward before backward");
        let [n, c, h, w] = grad.shape();
        let hw = h * w;
        let m = T::of((n * hw) as f64);
        let mut sum_g = vec![T::zero(); c];
        let mut sum_gx = vec![T::zero(); c];
        for i in 0..n {
            let g = grad.item(i);
            let xh = cache.xhat.item(i);
            for ch in 0..c {
                for j in ch * hw..(ch + 1) * hw {
                    sum_g[ch] += g[j];
                    sum_gx[ch] += g[j] * xh[j];
                }
            }
        }
        for ch in 0..c {
            self.beta.grad[ch] += sum_g[ch];
            self.gamma.grad[ch] += sum_gx[ch];
        }
        let mut dx = Tensor::zeros(grad.shape());
        for i in 0..n {
            let g = grad.item(i);
            let xh = cache.xhat.item(i);
            let d = dx.item_mut(i);
            for ch in 0..c {
                let scale = self.gamma.value[ch] * cache.inv_std[ch];
                for j in ch * hw..(ch + 1) * hw {
                    d[j] = if cache.train {
                        scale * (g[j] - (sum_g[ch] + xh[j] * sum_gx[ch]) / m)
                    } else {
                        scale * g[j]
                    };
                }
            }
        }
        dx
    }

    fn visit(&mut self, prefix: &str, f: &mut Visitor<'_, T>) {
        f(&join(prefix, "gamma"), &mut self.gamma);
        f(&join(prefix, "beta"), &mut self.beta);
        f(&join(prefix, "running_mean"), &mut self.running_mean);
        f(&join(prefix, "running_var"), &mut self.running_var);
    }
}

/// Leaky rectifier; slope 0 gives a plain ReLU.
pub struct LeakyRelu<T> {
    slope: T,
    input: Option<Tensor<T>>,
}

impl<T: Float> LeakyRelu<T> {
    pub fn new(slope: f64) -> Self {
        Self {
            slope: T::of(slope),
            input: None,
        }
    }

    pub fn relu() -> Self {
        Self::new(0.0)
    }
}

impl<T: Float> Layer<T> for LeakyRelu<T> {
    fn forward(&mut self, x: &Tensor<T>, _train: bool) -> Tensor<T> {
        let s = self.slope;
        self.input = Some(x.clone());
        x.map(|v| if v > T::zero() { v } else { v * s })
    }

    fn backward(&mut self, grad: &Tensor<T>) -> Tensor<T> {
        let x = self.input.as_ref().expect("forward before backward");
        let mut out = grad.clone();
        for (g, &v) in out.data_mut().iter_mut().zip(x.data()) {
            if v <= T::zero() {
                *g *= self.slope;
            }
        }
        out
    }
}

pub struct Tanh<T> {
    output: Option<Tensor<T>>,
}

impl<T: Float> Tanh<T> {
    pub fn new() -> Self {
        Self { output: None }
    }
}

impl<T: Float> Default for Tanh<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Float> Layer<T> for Tanh<T> {
    fn forward(&mut self, x: &Tensor<T>, _train: bool) -> Tensor<T> {
        let out = x.map(|v| v.tanh());
        self.output = Some(out.clone());
        out
    }

    fn backward(&mut self, grad: &Tensor<T>) -> Tensor<T> {
        let y = self.output.as_ref().expect("forward before backward");
        let mut out = grad.clone();
        for (g, &v) in out.data_mut().iter_mut().zip(y.data()) {
            *g *= T::one() - v * v;
        }
        out
    }
}

/// Non-overlapping `k×k` max pooling (floor mode).
pub struct MaxPool2d<T> {
    k: usize,
    argmax: Vec<usize>,
    in_shape: [usize; 4],
    _marker: std::marker::PhantomData<T>,
}

impl<T: Float> MaxPool2d<T> {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            argmax: Vec::new(),
            in_shape: [0; 4],
            _marker: std::marker::PhantomData,
        }
    }
}

impl<T: Float> Layer<T> for MaxPool2d<T> {
    fn forward(&mut self, x: &Tensor<T>, _train: bool) -> Tensor<T> {
        let [n, c, h, w] = x.shape();
        let (ho, wo) = (h / self.k, w / self.k);
        let mut out = Tensor::zeros([n, c, ho, wo]);
        self.argmax = Vec::with_capacity(n * c * ho * wo);
        self.in_shape = x.shape();
        let data = x.data();
        let mut o = 0;
        for plane in 0..n * c {
            let base = plane * h * w;
            for oy in 0..ho {
                for ox in 0..wo {
                    let mut best = base + oy * self.k * w + ox * self.k;
                    for ky in 0..self.k {
                        for kx in 0..self.k {
                            let idx = base + (oy * self.k + ky) * w + ox * self.k + kx;
                            if data[idx] > data[best] {
                                best = idx;
                            }
                        }
                    }
                    out.data_mut()[o] = data[best];
                    self.argmax.push(best);
                    o += 1;
                }
            }
        }
        out
    }

    fn backward(&mut self, grad: &Tensor<T>) -> Tensor<T> {
        let mut dx = Tensor::zeros(self.in_shape);
        for (&idx, &g) in self.argmax.iter().zip(grad.data()) {
            dx.data_mut()[idx] += g;
        }
        dx
    }
}

/// Averages each channel plane to a single value.
pub struct GlobalAvgPool<T> {
    in_shape: [usize; 4],
    _marker: std::marker::PhantomData<T>,
}

impl<T: Float> GlobalAvgPool<T> {
    pub fn new() -> Self {
        Self {
            in_shape: [0; 4],
            _marker: std::marker::PhantomData,
        }
    }
}

impl<T: Float> Default for GlobalAvgPool<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Float> Layer<T> for GlobalAvgPool<T> {
    fn forward(&mut self, x: &Tensor<T>, _train: bool) -> Tensor<T> {
        let [n, c, h, w] = x.shape();
        self.in_shape = x.shape();
        let hw = h * w;
        let inv = T::of(1.0 / hw as f64);
        let data = x
            .data()
            .chunks(hw)
            .map(|plane| plane.iter().copied().sum::<T>() * inv)
            .collect();
        Tensor::from_vec([n, c, 1, 1], data)
    }

    fn backward(&mut self, grad: &Tensor<T>) -> Tensor<T> {
        let [n, c, h, w] = self.in_shape;
        let hw = h * w;
        let inv = T::of(1.0 / hw as f64);
        let mut dx = Tensor::zeros([n, c, h, w]);
        for (plane, &g) in dx.data_mut().chunks_mut(hw).zip(grad.data()) {
            plane.fill(g * inv);
        }
        dx
    }
}

/// Layers applied in order.
pub struct Sequential<T> {
    layers: Vec<(String, Box<dyn Layer<T>>)>,
}

impl<T: Float> Sequential<T> {
    pub fn new() -> Self {
        Self { layers: Vec::new() }
    }

    pub fn push(mut self, name: &str, layer: impl Layer<T> + 'static) -> Self {
        self.layers.push((name.to_string(), Box::new(layer)));
        self
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }
}

impl<T: Float> Default for Sequential<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Float> Layer<T> for Sequential<T> {
    fn forward(&mut self, x: &Tensor<T>, train: bool) -> Tensor<T> {
        let mut iter = self.layers.iter_mut();
        let Some((_, first)) = iter.next() else {
            return x.clone();
        };
        let mut h = first.forward(x, train);
        for (_, layer) in iter {
            h = layer.forward(&h, train);
        }
        h
    }

    fn backward(&mut self, grad: &Tensor<T>) -> Tensor<T> {
        let mut g = grad.clone();
        for (_, layer) in self.layers.iter_mut().rev() {
            g = layer.backward(&g);
        }
        g
    }

    fn visit(&mut self, prefix: &str, f: &mut Visitor<'_, T>) {
        for (name, layer) in &mut self.layers {
            layer.visit(&join(prefix, name), f);
        }
    }
}
