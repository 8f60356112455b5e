use crate::error::{Error, Result};
use crate::nn::Real;

/// Dense `N×C×H×W` array, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4<T> {
    dims: [usize; 4],
    data: Vec<T>,
}

impl<T: Real> Tensor4<T> {
    pub fn zeros(dims: [usize; 4]) -> Self {
        Self {
            dims,
            data: vec![T::zero(); dims.iter().product()],
        }
    }

    pub fn filled(dims: [usize; 4], v: T) -> Self {
        Self {
            dims,
            data: vec![v; dims.iter().product()],
        }
    }

    pub fn from_vec(dims: [usize; 4], data: Vec<T>) -> Result<Self> {
        let want: usize = dims.iter().product();
        if want != data.len() {
            return Err(Error::Shape(format!("tensor {dims:?} needs {want} values, got {}", data.len())));
        }
        Ok(Self { dims, data })
    }

    pub fn from_fn(dims: [usize; 4], mut f: impl FnMut(usize) -> T) -> Self {
        let n = dims.iter().product();
        Self {
            dims,
            data: (0..n).map(&mut f).collect(),
        }
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    pub fn batch(&self) -> usize {
        self.dims[0]
    }

    pub fn channels(&self) -> usize {
        self.dims[1]
    }

    /// `H*W`.
    pub fn spatial(&self) -> usize {
        self.dims[2] * self.dims[3]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    /// Contiguous `C×H×W` slice of sample `n`.
    pub fn sample(&self, n: usize) -> &[T] {
        let s = self.dims[1] * self.spatial();
        &self.data[n * s..(n + 1) * s]
    }

    pub fn sample_mut(&mut self, n: usize) -> &mut [T] {
        let s = self.dims[1] * self.spatial();
        &mut self.data[n * s..(n + 1) * s]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Samples `range` of the batch as a new tensor.
    pub fn slice_batch(&self, range: std::ops::Range<usize>) -> Self {
        let s = self.dims[1] * self.spatial();
        Self {
            dims: [range.len(), self.dims[1], self.dims[2], self.dims[3]],
            data: self.data[range.start * s..range.end * s].to_vec(),
        }
    }

    pub fn cast<U: Real>(&self) -> Tensor4<U> {
        Tensor4 {
            dims: self.dims,
            data: self.data.iter().map(|v| U::of(v.f64())).collect(),
        }
    }
}
