//! Dense NCHW tensors with reverse-mode automatic differentiation.
//!
//! Tensors are `f32`, row-major with `w` fastest. A [`Tape`] records every
//! differentiable op whose output needs a gradient; [`backward`] replays the
//! tape in reverse and accumulates gradients additively. Gradients are
//! zero-initialized per backward call; the caller clears them between steps.

mod adam;
mod ops;
mod tape;

pub use adam::{Adam, AdamHyperParams, AdamState};
pub use ops::{
    add, backward, concat_channels, l1_loss, l2_loss, mean, pixel_shuffle, relu, scale,
};
pub use ops::conv2d;
pub use tape::Tape;

use std::cell::{Cell, Ref, RefCell, RefMut};
use std::fmt;
use std::rc::Rc;

#[derive(Debug, thiserror::Error)]
pub enum TensorError {
    #[error("shape mismatch: {0} vs {1}")]
    ShapeMismatch(Shape, Shape),
    #[error("channel mismatch: input has {input} channels, weight expects {expected}")]
    ChannelMismatch { input: usize, expected: usize },
    #[error("kernel {k}x{k} larger than padded input {h}x{w} (padding {padding})")]
    KernelTooLarge { k: usize, h: usize, w: usize, padding: usize },
    #[error("channel count {c} not divisible by r^2 = {rsq}")]
    ChannelsNotDivisible { c: usize, rsq: usize },
    #[error("expected scalar loss, got {0} elements")]
    NonScalarLoss(usize),
    #[error("data length {len} does not match shape {shape} ({numel} elements)")]
    DataLength { len: usize, shape: Shape, numel: usize },
    #[error("empty tensor list")]
    EmptyList,
}

pub type Result<T> = std::result::Result<T, TensorError>;

/// (batch, channels, height, width)
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Shape {
    pub n: usize,
    pub c: usize,
    pub h: usize,
    pub w: usize,
}

impl Shape {
    pub fn new(n: usize, c: usize, h: usize, w: usize) -> Self {
        Shape { n, c, h, w }
    }

    pub fn numel(&self) -> usize {
        self.n * self.c * self.h * self.w
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}x{}", self.n, self.c, self.h, self.w)
    }
}

struct TensorData {
    shape: Shape,
    data: RefCell<Vec<f32>>,
    grad: RefCell<Option<Vec<f32>>>,
    requires_grad: Cell<bool>,
}

/// Shared handle to a tensor. Cloning is cheap; clones alias the same buffer.
#[derive(Clone)]
pub struct Tensor {
    inner: Rc<TensorData>,
}

impl Tensor {
    pub fn from_vec(shape: Shape, data: Vec<f32>) -> Result<Tensor> {
        if data.len() != shape.numel() {
            return Err(TensorError::DataLength {
                len: data.len(),
                shape,
                numel: shape.numel(),
            });
        }
        Ok(Tensor {
            inner: Rc::new(TensorData {
                shape,
                data: RefCell::new(data),
                grad: RefCell::new(None),
                requires_grad: Cell::new(false),
            }),
        })
    }

    pub fn zeros(shape: Shape) -> Tensor {
        Tensor::from_vec(shape, vec![0.0; shape.numel()]).unwrap()
    }

    pub fn full(shape: Shape, value: f32) -> Tensor {
        Tensor::from_vec(shape, vec![value; shape.numel()]).unwrap()
    }

    /// Trainable parameter: `requires_grad` set.
    pub fn param(shape: Shape, data: Vec<f32>) -> Result<Tensor> {
        let t = Tensor::from_vec(shape, data)?;
        t.set_requires_grad(true);
        Ok(t)
    }

    pub fn scalar(value: f32) -> Tensor {
        Tensor::from_vec(Shape::new(1, 1, 1, 1), vec![value]).unwrap()
    }

    pub fn shape(&self) -> Shape {
        self.inner.shape
    }

    pub fn numel(&self) -> usize {
        self.inner.shape.numel()
    }

    pub fn data(&self) -> Ref<'_, Vec<f32>> {
        self.inner.data.borrow()
    }

    pub fn data_mut(&self) -> RefMut<'_, Vec<f32>> {
        self.inner.data.borrow_mut()
    }

    /// Scalar value of a 1-element tensor.
    pub fn item(&self) -> f32 {
        debug_assert_eq!(self.numel(), 1);
        self.data()[0]
    }

    pub fn requires_grad(&self) -> bool {
        self.inner.requires_grad.get()
    }

    pub fn set_requires_grad(&self, flag: bool) {
        self.inner.requires_grad.set(flag);
    }

    pub fn grad(&self) -> Ref<'_, Option<Vec<f32>>> {
        self.inner.grad.borrow()
    }

    pub fn clear_grad(&self) {
        *self.inner.grad.borrow_mut() = None;
    }

    /// Detached copy: same data, fresh buffer, no grad tracking.
    pub fn detach(&self) -> Tensor {
        Tensor::from_vec(self.shape(), self.data().clone()).unwrap()
    }

    /// Adds `delta` into the grad buffer, zero-initializing it first if absent.
    pub(crate) fn accumulate_grad(&self, delta: &[f32]) {
        debug_assert_eq!(delta.len(), self.numel());
        let mut g = self.inner.grad.borrow_mut();
        let buf = g.get_or_insert_with(|| vec![0.0; self.numel()]);
        for (gi, di) in buf.iter_mut().zip(delta) {
            *gi += *di;
        }
    }

    /// Runs `f` over a zero-initialized (if absent) grad buffer.
    pub(crate) fn with_grad_buffer<R>(&self, f: impl FnOnce(&mut [f32]) -> R) -> R {
        let mut g = self.inner.grad.borrow_mut();
        let buf = g.get_or_insert_with(|| vec![0.0; self.numel()]);
        f(buf)
    }
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.inner.shape)
            .field("requires_grad", &self.requires_grad())
            .finish()
    }
}
