use crate::error::{Error, Result};

/// Dense row-major tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != values.len() {
            return Err(Error::param(format!("shape {shape:?} needs {n} values, got {}", values.len())));
        }
        Ok(Tensor { shape, values })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape,
            values: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Named, ordered collection of learnable tensors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a tensor and returns its slot. Names must be unique.
    pub fn push(&mut self, name: impl Into<String>, tensor: Tensor) -> Result<usize> {
        let name = name.into();
        if self.names.contains(&name) {
            return Err(Error::param(format!("duplicate parameter name '{name}'")));
        }
        self.names.push(name);
        self.tensors.push(tensor);
        Ok(self.tensors.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn name(&self, slot: usize) -> &str {
        &self.names[slot]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn get(&self, slot: usize) -> &Tensor {
        &self.tensors[slot]
    }

    pub fn get_mut(&mut self, slot: usize) -> &mut Tensor {
        &mut self.tensors[slot]
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn slot(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Total number of scalar parameters.
    pub fn numel(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.tensors.iter().flat_map(|t| t.values.iter().copied()).collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.numel() {
            return Err(Error::param("flat parameter vector has the wrong length"));
        }
        let mut off = 0;
        for t in &mut self.tensors {
            let n = t.len();
            t.values.copy_from_slice(&flat[off..off + n]);
            off += n;
        }
        Ok(())
    }
}
