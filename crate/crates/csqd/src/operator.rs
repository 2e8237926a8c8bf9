//! Matrix-free linear operator interface shared by the solver, the sensing
//! pipeline, and the attack harness.

use nalgebra::DMatrix;

use crate::srm::SensingOperator;
use crate::{Error, Result};

/// A real linear map with an explicit adjoint.
///
/// Implementations must satisfy the dot-product identity
/// `<forward(x), y> = <x, adjoint(y)>`; the test suites verify this for every
/// operator in the crate.
pub trait LinearOperator {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn forward(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn adjoint(&self, y: &[f64]) -> Result<Vec<f64>>;
}

impl LinearOperator for SensingOperator {
    fn rows(&self) -> usize {
        self.config().measurements()
    }

    fn cols(&self) -> usize {
        self.config().signal_len()
    }

    fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        SensingOperator::forward(self, x)
    }

    fn adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        SensingOperator::adjoint(self, y)
    }
}

/// Dense matrix operator; used for estimated sensing matrices and
/// desk-scale oracles.
pub struct DenseOperator {
    a: DMatrix<f64>,
}

impl DenseOperator {
    pub fn new(a: DMatrix<f64>) -> Self {
        DenseOperator { a }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }
}

impl LinearOperator for DenseOperator {
    fn rows(&self) -> usize {
        self.a.nrows()
    }

    fn cols(&self) -> usize {
        self.a.ncols()
    }

    fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.a.ncols() {
            return Err(Error::invalid("operator input length mismatch"));
        }
        let v = nalgebra::DVector::from_column_slice(x);
        Ok((&self.a * v).iter().copied().collect())
    }

    fn adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.a.nrows() {
            return Err(Error::invalid("operator input length mismatch"));
        }
        let v = nalgebra::DVector::from_column_slice(y);
        Ok((self.a.tr_mul(&v)).iter().copied().collect())
    }
}

/// Restriction of an operator to a subset of its rows, in order. This is the
/// saturation-rejected operator: the kept rows of the full sensing map.
pub struct RowSubsetOperator<'a> {
    inner: &'a dyn LinearOperator,
    kept: Vec<usize>,
}

impl<'a> RowSubsetOperator<'a> {
    pub fn new(inner: &'a dyn LinearOperator, kept: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = kept.iter().find(|&&i| i >= inner.rows()) {
            return Err(Error::invalid(format!(
                "kept row {bad} out of range for operator with {} rows",
                inner.rows()
            )));
        }
        Ok(RowSubsetOperator { inner, kept })
    }

    pub fn kept(&self) -> &[usize] {
        &self.kept
    }
}

impl LinearOperator for RowSubsetOperator<'_> {
    fn rows(&self) -> usize {
        self.kept.len()
    }

    fn cols(&self) -> usize {
        self.inner.cols()
    }

    fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let full = self.inner.forward(x)?;
        Ok(self.kept.iter().map(|&i| full[i]).collect())
    }

    fn adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.kept.len() {
            return Err(Error::invalid("operator input length mismatch"));
        }
        let mut full = vec![0.0; self.inner.rows()];
        for (&i, &v) in self.kept.iter().zip(y) {
            full[i] = v;
        }
        self.inner.adjoint(&full)
    }
}
