//! Reverse-mode automatic differentiation over f64 scalars, vectors, and
//! parameter matrices.
//!
//! One [`Tape`] is built per training step: forward values are computed
//! eagerly as the expression is assembled, then [`Tape::backward`] walks the
//! recorded operations in reverse and accumulates adjoints into a
//! [`GradientMap`] keyed by trainable parameter. Tapes are single-threaded;
//! independent tapes may run concurrently as long as they do not share a
//! mutable [`ParamStore`].

mod fd;
mod params;
mod tape;

pub use fd::{finite_difference_check, FdReport};
pub use params::{GradientMap, Param, ParamId, ParamKind, ParamStore};
pub use tape::{NodeId, Tape};

use thiserror::Error;

/// Shape of a tape value. Scalars are distinct from length-1 vectors;
/// matrices only enter the tape as parameter leaves of `matvec`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Scalar,
    Vector(usize),
    Matrix(usize, usize),
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::Scalar => 1,
            Shape::Vector(n) => n,
            Shape::Matrix(r, c) => r * c,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dims(&self) -> Vec<usize> {
        match *self {
            Shape::Scalar => vec![],
            Shape::Vector(n) => vec![n],
            Shape::Matrix(r, c) => vec![r, c],
        }
    }

    pub fn from_dims(dims: &[usize]) -> Option<Shape> {
        match dims {
            [] => Some(Shape::Scalar),
            [n] => Some(Shape::Vector(*n)),
            [r, c] => Some(Shape::Matrix(*r, *c)),
            _ => None,
        }
    }
}

/// A dense f64 value with its shape. Data is row-major for matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct Value {
    pub data: Vec<f64>,
    pub shape: Shape,
}

impl Value {
    pub fn scalar(x: f64) -> Value {
        Value { data: vec![x], shape: Shape::Scalar }
    }

    pub fn vector(data: Vec<f64>) -> Value {
        let n = data.len();
        Value { data, shape: Shape::Vector(n) }
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Value {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Value { data, shape: Shape::Matrix(rows, cols) }
    }

    pub fn zeros(shape: Shape) -> Value {
        Value { data: vec![0.0; shape.len()], shape }
    }

    pub fn as_scalar(&self) -> f64 {
        assert_eq!(self.shape, Shape::Scalar, "expected scalar value");
        self.data[0]
    }

    pub fn add_in_place(&mut self, other: &Value) {
        debug_assert_eq!(self.shape, other.shape, "shape mismatch in accumulation");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// Errors surfaced by tape construction, backward, or the FD oracle.
#[derive(Debug, Error)]
pub enum AutodiffError {
    #[error("numerical domain violation in `{op}`: {detail}")]
    NumericalDomain { op: &'static str, detail: String },
    #[error("backward root must be a scalar, found {shape:?}")]
    NonScalarRoot { shape: Shape },
    #[error("finite-difference oracle failure: {0}")]
    OracleFailure(String),
    #[error("usage error: {0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, AutodiffError>;
