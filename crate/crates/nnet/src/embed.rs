//! Lookup-table embedding with scatter-add backward.

use ndarray::{Array2, ArrayView1};

use crate::real::Real;
use crate::rng::Prng;
use crate::tensor::{Module, Tensor};

pub struct Embedding<F> {
    /// (n, dim)
    pub table: Tensor<F>,
}

impl<F: Real> Embedding<F> {
    pub fn new(n: usize, dim: usize, rng: &mut Prng) -> Self {
        Self {
            table: Tensor::randn(&[n, dim], 1.0, rng),
        }
    }

    pub fn dim(&self) -> usize {
        self.table.v.shape()[1]
    }

    pub fn len(&self) -> usize {
        self.table.v.shape()[0]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, id: usize) -> ArrayView1<'_, F> {
        self.table
            .v
            .index_axis(ndarray::Axis(0), id)
            .into_dimensionality()
            .expect("2-d table")
    }

    pub fn forward(&self, ids: &[usize]) -> Array2<F> {
        let dim = self.dim();
        let mut y = Array2::zeros((ids.len(), dim));
        for (i, &id) in ids.iter().enumerate() {
            y.row_mut(i).assign(&self.table.a2().row(id));
        }
        y
    }

    pub fn backward(&mut self, ids: &[usize], dy: &Array2<F>) {
        let mut g = self.table.g2_mut();
        for (i, &id) in ids.iter().enumerate() {
            let mut row = g.row_mut(id);
            row += &dy.row(i);
        }
    }
}

impl<F: Real> Module<F> for Embedding<F> {
    fn for_each_param(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Tensor<F>)) {
        f(&format!("{prefix}.table"), &mut self.table);
    }
}
