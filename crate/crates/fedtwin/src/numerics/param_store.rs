//! Named, ordered parameter collection with paired gradient buffers.

use crate::error::{Error, Result};
use crate::numerics::tensor::Tensor;

/// Index of an entry in a [`ParamStore`]; stable for the store's lifetime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamId(usize);

#[derive(Debug, Clone)]
pub struct ParamEntry {
    name: String,
    tensor: Tensor,
    grad: Tensor,
}

impl ParamEntry {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn tensor(&self) -> &Tensor {
        &self.tensor
    }

    pub fn grad(&self) -> &Tensor {
        &self.grad
    }
}

/// Ordered collection of named tensors, each paired with a same-shape
/// gradient buffer. Entry order is fixed at construction time; two stores
/// built from the same model configuration iterate identically, which is
/// what the wire manifest and the aggregation step rely on.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    entries: Vec<ParamEntry>,
}

impl ParamStore {
    pub fn new() -> Self {
        ParamStore::default()
    }

    /// Appends a parameter. Names must be unique.
    pub fn push(&mut self, name: impl Into<String>, tensor: Tensor) -> Result<ParamId> {
        let name = name.into();
        if self.entries.iter().any(|e| e.name == name) {
            return Err(Error::config(format!("duplicate parameter name '{name}'")));
        }
        let grad = Tensor::zeros(tensor.rows(), tensor.cols());
        self.entries.push(ParamEntry { name, tensor, grad });
        Ok(ParamId(self.entries.len() - 1))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ParamEntry] {
        &self.entries
    }

    /// Id of the entry at `index` (entry order).
    pub fn id_at(&self, index: usize) -> ParamId {
        assert!(index < self.entries.len(), "param index out of range");
        ParamId(index)
    }

    pub fn tensor(&self, id: ParamId) -> &Tensor {
        &self.entries[id.0].tensor
    }

    pub fn tensor_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.entries[id.0].tensor
    }

    pub fn grad(&self, id: ParamId) -> &Tensor {
        &self.entries[id.0].grad
    }

    pub fn grad_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.entries[id.0].grad
    }

    pub fn zero_grads(&mut self) {
        for e in &mut self.entries {
            e.grad.fill(0.0);
        }
    }

    pub fn scale_grads(&mut self, c: f64) {
        for e in &mut self.entries {
            e.grad.scale(c);
        }
    }

    /// Total number of scalar parameter components.
    pub fn component_count(&self) -> usize {
        self.entries
            .iter()
            .map(|e| e.tensor.rows() * e.tensor.cols())
            .sum()
    }

    /// Snapshot of the parameter values (no gradients).
    pub fn values(&self) -> ParamValues {
        ParamValues {
            entries: self
                .entries
                .iter()
                .map(|e| (e.name.clone(), e.tensor.clone()))
                .collect(),
        }
    }

    /// Overwrites parameter values from a snapshot. Names, order, and shapes
    /// must match exactly. Gradients are untouched.
    pub fn load_values(&mut self, values: &ParamValues) -> Result<()> {
        if values.entries.len() != self.entries.len() {
            return Err(Error::shape(format!(
                "load_values: {} entries, store has {}",
                values.entries.len(),
                self.entries.len()
            )));
        }
        for (e, (name, tensor)) in self.entries.iter().zip(&values.entries) {
            if &e.name != name {
                return Err(Error::shape(format!(
                    "load_values: entry '{}' does not match store entry '{}'",
                    name, e.name
                )));
            }
            if e.tensor.shape() != tensor.shape() {
                return Err(Error::shape(format!(
                    "load_values: '{}' has shape {}x{}, store expects {}x{}",
                    name,
                    tensor.rows(),
                    tensor.cols(),
                    e.tensor.rows(),
                    e.tensor.cols()
                )));
            }
        }
        for (e, (_, tensor)) in self.entries.iter_mut().zip(&values.entries) {
            e.tensor = tensor.clone();
        }
        Ok(())
    }

    /// Copies parameter values from another store with identical layout.
    pub fn copy_values_from(&mut self, other: &ParamStore) -> Result<()> {
        if other.entries.len() != self.entries.len() {
            return Err(Error::shape("copy_values_from: entry count mismatch".to_string()));
        }
        for (dst, src) in self.entries.iter_mut().zip(&other.entries) {
            if dst.name != src.name || dst.tensor.shape() != src.tensor.shape() {
                return Err(Error::shape(format!(
                    "copy_values_from: entry '{}' does not match '{}'",
                    src.name, dst.name
                )));
            }
            dst.tensor = src.tensor.clone();
        }
        Ok(())
    }
}

/// Named parameter values detached from their gradients — the thing clients
/// upload and the server broadcasts.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamValues {
    pub entries: Vec<(String, Tensor)>,
}

impl ParamValues {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(name, rows, cols)` triple per entry, in order.
    pub fn layout(&self) -> Vec<(String, usize, usize)> {
        self.entries
            .iter()
            .map(|(n, t)| (n.clone(), t.rows(), t.cols()))
            .collect()
    }
}

/// Plain stochastic-gradient-descent update: `w <- w - lr * g`, then zeroes
/// the gradients. `lr == 0` is allowed and leaves the values unchanged;
/// negative or non-finite rates are rejected.
pub fn sgd_step(params: &mut ParamStore, lr: f64) -> Result<()> {
    if !lr.is_finite() || lr < 0.0 {
        return Err(Error::config(format!(
            "lr: learning rate must be finite and non-negative, got {lr}"
        )));
    }
    for e in &mut params.entries {
        for (w, g) in e.tensor.data_mut().iter_mut().zip(e.grad.data()) {
            *w -= lr * g;
        }
    }
    for e in &mut params.entries {
        e.grad.fill(0.0);
    }
    Ok(())
}
