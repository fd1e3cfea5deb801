use crate::error::{Error, Result};

/// Dense row-major `f32` array used for every activation and parameter.
///
/// Activations are laid out channels × frames, so `row(c)` is the time series
/// of channel `c`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameTensor {
    shape: Vec<usize>,
    data: Vec<f32>,
}

impl FrameTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::shape(
                "FrameTensor::new",
                format!("shape {:?} needs {} values, got {}", shape, expected, data.len()),
            ));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Self { shape: shape.to_vec(), data: vec![0.0; n] }
    }

    pub fn filled(shape: &[usize], value: f32) -> Self {
        let n = shape.iter().product();
        Self { shape: shape.to_vec(), data: vec![value; n] }
    }

    pub fn from_vec(data: Vec<f32>) -> Self {
        Self { shape: vec![data.len()], data }
    }

    /// Builds a `rows × cols` matrix from nested rows.
    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::shape("FrameTensor::from_rows", "ragged rows"));
        }
        let data = rows.iter().flatten().copied().collect();
        Ok(Self { shape: vec![rows.len(), cols], data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    /// Channel count of a rank-2 activation.
    pub fn channels(&self) -> usize {
        self.shape[0]
    }

    /// Frame count of a rank-2 activation.
    pub fn frames(&self) -> usize {
        self.shape[1]
    }

    pub fn row(&self, c: usize) -> &[f32] {
        let w = self.frames();
        &self.data[c * w..(c + 1) * w]
    }

    pub fn row_mut(&mut self, c: usize) -> &mut [f32] {
        let w = self.frames();
        &mut self.data[c * w..(c + 1) * w]
    }

    pub fn at(&self, c: usize, t: usize) -> f32 {
        self.data[c * self.shape[1] + t]
    }

    pub fn reshape(mut self, shape: Vec<usize>) -> Result<Self> {
        if shape.iter().product::<usize>() != self.data.len() {
            return Err(Error::shape(
                "FrameTensor::reshape",
                format!("{:?} -> {:?}", self.shape, shape),
            ));
        }
        self.shape = shape;
        Ok(self)
    }

    /// Requires a rank-2 tensor and returns `(channels, frames)`.
    pub fn dims2(&self, op: &'static str) -> Result<(usize, usize)> {
        match self.shape.as_slice() {
            [c, t] => Ok((*c, *t)),
            other => Err(Error::shape(op, format!("expected rank-2 tensor, got shape {other:?}"))),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Self {
        Self { shape: self.shape.clone(), data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn map_inplace(&mut self, f: impl Fn(f32) -> f32) {
        self.data.iter_mut().for_each(|v| *v = f(*v));
    }

    /// Element-wise `self + other`.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::shape(
                "FrameTensor::add",
                format!("{:?} vs {:?}", self.shape, other.shape),
            ));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self { shape: self.shape.clone(), data })
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::shape(
                "FrameTensor::add_assign",
                format!("{:?} vs {:?}", self.shape, other.shape),
            ));
        }
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += b);
        Ok(())
    }

    pub fn scale(&self, s: f32) -> Self {
        self.map(|v| v * s)
    }

    /// Rows `[start, end)` of a rank-2 tensor.
    pub fn slice_rows(&self, start: usize, end: usize) -> Self {
        let w = self.frames();
        Self { shape: vec![end - start, w], data: self.data[start * w..end * w].to_vec() }
    }

    /// Stacks rank-2 tensors with equal frame counts along the channel axis.
    pub fn concat_rows(parts: &[&Self]) -> Result<Self> {
        let w = parts.first().map_or(0, |p| p.frames());
        if parts.iter().any(|p| p.rank() != 2 || p.frames() != w) {
            return Err(Error::shape("FrameTensor::concat_rows", "frame counts differ"));
        }
        let rows = parts.iter().map(|p| p.channels()).sum();
        let mut data = Vec::with_capacity(rows * w);
        for p in parts {
            data.extend_from_slice(&p.data);
        }
        Ok(Self { shape: vec![rows, w], data })
    }

    /// Largest absolute element-wise difference; shapes must match.
    pub fn max_abs_diff(&self, other: &Self) -> f32 {
        assert_eq!(self.shape, other.shape, "max_abs_diff on different shapes");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f32::max)
    }
}
