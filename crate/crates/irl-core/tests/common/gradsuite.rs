//! Shared finite-difference gradient checks: analytic gradients from the
//! tape engine vs central differences of the 64-bit reference forward,
//! relative error < 1e-3.

use irl_core::tensor::{self, Shape, Tape, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{central_diff, concat_ref, conv2d_ref, grad_close, l1_ref, l2_ref, pixel_shuffle_ref, relu_ref, Dims};

const DELTA: f64 = 1e-3;
const TOL: f64 = 1e-3;
pub const SEEDS: u64 = 20;

fn rand_vec(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-scale..scale)).collect()
}

fn to_f32(v: &[f64]) -> Vec<f32> {
    v.iter().map(|&x| x as f32).collect()
}

fn check_all(analytic: &[f32], x: &[f64], f: &dyn Fn(&[f64]) -> f64, label: &str) {
    for i in 0..x.len() {
        let numeric = central_diff(f, x, i, DELTA);
        assert!(
            grad_close(analytic[i] as f64, numeric, TOL),
            "{label}[{i}]: analytic {} vs numeric {numeric}",
            analytic[i]
        );
    }
}

pub struct ConvCase {
    pub dims: Dims,
    pub co: usize,
    pub k: usize,
    pub pad: usize,
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub t: Vec<f64>,
}

pub fn conv_case(seed: u64) -> ConvCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=2);
    let ci = rng.gen_range(1..=4);
    let h = rng.gen_range(3..=6);
    let w = rng.gen_range(3..=6);
    let co = rng.gen_range(1..=4);
    let k = *[1, 3].get(rng.gen_range(0..2)).unwrap();
    let pad = rng.gen_range(0..=1);
    let dims = (n, ci, h, w);
    let (_, odims) = conv2d_ref(
        &vec![0.0; n * ci * h * w],
        dims,
        &vec![0.0; co * ci * k * k],
        co,
        k,
        &vec![0.0; co],
        pad,
    );
    ConvCase {
        dims,
        co,
        k,
        pad,
        x: rand_vec(&mut rng, n * ci * h * w, 1.0),
        w: rand_vec(&mut rng, co * ci * k * k, 1.0),
        b: rand_vec(&mut rng, co, 0.5),
        t: rand_vec(&mut rng, odims.0 * odims.1 * odims.2 * odims.3, 1.0),
    }
}

pub fn check_conv2d(seed: u64) {
    let c = conv_case(seed);
    let (n, ci, h, w) = c.dims;

    let tape = Tape::new();
    let x = Tensor::param(Shape::new(n, ci, h, w), to_f32(&c.x)).unwrap();
    let wt = Tensor::param(Shape::new(c.co, ci, c.k, c.k), to_f32(&c.w)).unwrap();
    let b = Tensor::param(Shape::new(1, c.co, 1, 1), to_f32(&c.b)).unwrap();
    let y = tensor::conv2d(&tape, &x, &wt, &b, c.pad).unwrap();
    let target = Tensor::from_vec(y.shape(), to_f32(&c.t)).unwrap();
    let loss = tensor::l2_loss(&tape, &y, &target).unwrap();
    tensor::backward(&tape, &loss).unwrap();

    // forward parity against the reference
    let (ref_out, _) = conv2d_ref(&c.x, c.dims, &c.w, c.co, c.k, &c.b, c.pad);
    for (a, r) in y.data().iter().zip(&ref_out) {
        assert!((*a as f64 - r).abs() < 1e-4, "forward parity");
    }

    let f_x = |xv: &[f64]| {
        let (o, _) = conv2d_ref(xv, c.dims, &c.w, c.co, c.k, &c.b, c.pad);
        l2_ref(&o, &c.t)
    };
    check_all(x.grad().as_ref().unwrap(), &c.x, &f_x, "conv.d_input");

    let f_w = |wv: &[f64]| {
        let (o, _) = conv2d_ref(&c.x, c.dims, wv, c.co, c.k, &c.b, c.pad);
        l2_ref(&o, &c.t)
    };
    check_all(wt.grad().as_ref().unwrap(), &c.w, &f_w, "conv.d_weight");

    let f_b = |bv: &[f64]| {
        let (o, _) = conv2d_ref(&c.x, c.dims, &c.w, c.co, c.k, bv, c.pad);
        l2_ref(&o, &c.t)
    };
    check_all(b.grad().as_ref().unwrap(), &c.b, &f_b, "conv.d_bias");
}

pub fn check_relu_net(seed: u64) {
    // resample until no pre-activation sits near the relu kink, where
    // central differences are invalid
    let mut sub = 0;
    let c = loop {
        let c = conv_case(seed * 1000 + sub);
        let (pre, _) = conv2d_ref(&c.x, c.dims, &c.w, c.co, c.k, &c.b, c.pad);
        if pre.iter().all(|v| v.abs() > 5.0 * DELTA) {
            break c;
        }
        sub += 1;
    };
    let (n, ci, h, w) = c.dims;

    let tape = Tape::new();
    let x = Tensor::param(Shape::new(n, ci, h, w), to_f32(&c.x)).unwrap();
    let wt = Tensor::param(Shape::new(c.co, ci, c.k, c.k), to_f32(&c.w)).unwrap();
    let b = Tensor::param(Shape::new(1, c.co, 1, 1), to_f32(&c.b)).unwrap();
    let y = tensor::conv2d(&tape, &x, &wt, &b, c.pad).unwrap();
    let y = tensor::relu(&tape, &y);
    let target = Tensor::from_vec(y.shape(), to_f32(&c.t)).unwrap();
    let loss = tensor::l2_loss(&tape, &y, &target).unwrap();
    tensor::backward(&tape, &loss).unwrap();

    let f_x = |xv: &[f64]| {
        let (o, _) = conv2d_ref(xv, c.dims, &c.w, c.co, c.k, &c.b, c.pad);
        l2_ref(&relu_ref(&o), &c.t)
    };
    check_all(x.grad().as_ref().unwrap(), &c.x, &f_x, "relu.d_input");

    let f_w = |wv: &[f64]| {
        let (o, _) = conv2d_ref(&c.x, c.dims, wv, c.co, c.k, &c.b, c.pad);
        l2_ref(&relu_ref(&o), &c.t)
    };
    check_all(wt.grad().as_ref().unwrap(), &c.w, &f_w, "relu.d_weight");
}

pub fn check_pixel_shuffle(seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=2);
    let r = 2usize;
    let c = r * r * rng.gen_range(1..=2);
    let h = rng.gen_range(2..=4);
    let w = rng.gen_range(2..=4);
    let dims = (n, c, h, w);
    let xv = rand_vec(&mut rng, n * c * h * w, 1.0);
    let tv = rand_vec(&mut rng, n * c * h * w, 1.0); // same numel after shuffle

    let tape = Tape::new();
    let x = Tensor::param(Shape::new(n, c, h, w), to_f32(&xv)).unwrap();
    let y = tensor::pixel_shuffle(&tape, &x, r).unwrap();
    let target = Tensor::from_vec(y.shape(), to_f32(&tv)).unwrap();
    let loss = tensor::l2_loss(&tape, &y, &target).unwrap();
    tensor::backward(&tape, &loss).unwrap();

    let f = |v: &[f64]| {
        let (o, _) = pixel_shuffle_ref(v, dims, r);
        l2_ref(&o, &tv)
    };
    check_all(x.grad().as_ref().unwrap(), &xv, &f, "pixel_shuffle.d_input");
}

pub fn check_concat(seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=2);
    let (c1, c2) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
    let h = rng.gen_range(2..=4);
    let w = rng.gen_range(2..=4);
    let d1 = (n, c1, h, w);
    let d2 = (n, c2, h, w);
    let a = rand_vec(&mut rng, n * c1 * h * w, 1.0);
    let b = rand_vec(&mut rng, n * c2 * h * w, 1.0);
    let t = rand_vec(&mut rng, n * (c1 + c2) * h * w, 1.0);

    let tape = Tape::new();
    let ta = Tensor::param(Shape::new(n, c1, h, w), to_f32(&a)).unwrap();
    let tb = Tensor::param(Shape::new(n, c2, h, w), to_f32(&b)).unwrap();
    let y = tensor::concat_channels(&tape, &[ta.clone(), tb.clone()]).unwrap();
    let target = Tensor::from_vec(y.shape(), to_f32(&t)).unwrap();
    let loss = tensor::l2_loss(&tape, &y, &target).unwrap();
    tensor::backward(&tape, &loss).unwrap();

    let f_a = |v: &[f64]| {
        let (o, _) = concat_ref(&[(v, d1), (&b, d2)]);
        l2_ref(&o, &t)
    };
    check_all(ta.grad().as_ref().unwrap(), &a, &f_a, "concat.d_a");
    let f_b = |v: &[f64]| {
        let (o, _) = concat_ref(&[(&a, d1), (v, d2)]);
        l2_ref(&o, &t)
    };
    check_all(tb.grad().as_ref().unwrap(), &b, &f_b, "concat.d_b");
}

pub fn check_losses(seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = rng.gen_range(4..=32);
    // keep |pred - target| away from the l1 kink
    let t: Vec<f64> = rand_vec(&mut rng, len, 1.0);
    let p: Vec<f64> = t
        .iter()
        .map(|&tv| tv + rng.gen_range(0.05..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
        .collect();

    for l2 in [false, true] {
        let tape = Tape::new();
        let pred = Tensor::param(Shape::new(1, 1, 1, len), to_f32(&p)).unwrap();
        let target = Tensor::from_vec(Shape::new(1, 1, 1, len), to_f32(&t)).unwrap();
        let loss = if l2 {
            tensor::l2_loss(&tape, &pred, &target).unwrap()
        } else {
            tensor::l1_loss(&tape, &pred, &target).unwrap()
        };
        tensor::backward(&tape, &loss).unwrap();
        let f = |v: &[f64]| if l2 { l2_ref(v, &t) } else { l1_ref(v, &t) };
        check_all(pred.grad().as_ref().unwrap(), &p, &f, if l2 { "l2" } else { "l1" });
    }
}

/// Runs every op family over its full seed range.
pub fn run_full_suite() {
    for seed in 0..SEEDS {
        check_conv2d(seed);
    }
    for seed in 100..100 + SEEDS {
        check_relu_net(seed);
    }
    for seed in 200..200 + SEEDS {
        check_pixel_shuffle(seed);
    }
    for seed in 300..300 + SEEDS {
        check_concat(seed);
    }
    for seed in 400..400 + SEEDS {
        check_losses(seed);
    }
}
