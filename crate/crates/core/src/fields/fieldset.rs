use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dynamics::Backend;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::trajectory::Clock;

/// Values and standard errors, laid out `[time][node][component]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub order: u8,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl Field {
    pub fn zeros(order: u8, nt: usize, nodes: usize) -> Self {
        let len = nt * nodes * ncomp(order);
        Field { order, values: vec![0.0; len], stderr: vec![0.0; len] }
    }

    pub fn ncomp(&self) -> usize {
        ncomp(self.order)
    }
}

pub fn ncomp(order: u8) -> usize {
    3usize.pow(order as u32)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSet {
    pub grid: GridSpec,
    pub times: Vec<f64>,
    pub clock: Clock,
    pub backend: Backend,
    pub samples: usize,
    /// `[time][node]`: false where the density is below the floor and `v` is undefined.
    pub v_defined: Vec<bool>,
    fields: BTreeMap<String, Field>,
}

impl FieldSet {
    pub fn new(grid: GridSpec, times: Vec<f64>, clock: Clock, backend: Backend, samples: usize) -> Self {
        let n = times.len() * grid.node_count();
        FieldSet { grid, times, clock, backend, samples, v_defined: vec![true; n], fields: BTreeMap::new() }
    }

    pub fn insert(&mut self, name: impl Into<String>, field: Field) {
        self.fields.insert(name.into(), field);
    }

    pub fn get(&self, name: &str) -> Result<&Field> {
        self.fields.get(name).ok_or_else(|| Error::MissingField(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.fields.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.fields.keys().map(|s| s.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Field)> {
        self.fields.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn nodes(&self) -> usize {
        self.grid.node_count()
    }

    /// Components of `name` at time index `t` and node `node`.
    pub fn at(&self, name: &str, t: usize, node: usize) -> Result<&[f64]> {
        let f = self.get(name)?;
        let c = f.ncomp();
        let off = (t * self.nodes() + node) * c;
        Ok(&f.values[off..off + c])
    }

    /// Grid quadrature `Σ value Δx³` per component at time index `t`.
    pub fn integral(&self, name: &str, t: usize) -> Result<Vec<f64>> {
        let f = self.get(name)?;
        let c = f.ncomp();
        let nodes = self.nodes();
        let mut out = vec![0.0; c];
        for node in 0..nodes {
            for (i, o) in out.iter_mut().enumerate() {
                *o += f.values[(t * nodes + node) * c + i];
            }
        }
        let dv = self.grid.cell_volume();
        Ok(out.into_iter().map(|x| x * dv).collect())
    }

    /// Copy restricted to the listed names.
    pub fn subset(&self, names: &[&str]) -> Result<FieldSet> {
        let mut out = FieldSet { fields: BTreeMap::new(), ..self.clone_meta() };
        for n in names {
            out.insert(*n, self.get(n)?.clone());
        }
        Ok(out)
    }

    fn clone_meta(&self) -> FieldSet {
        FieldSet {
            grid: self.grid.clone(),
            times: self.times.clone(),
            clock: self.clock,
            backend: self.backend,
            samples: self.samples,
            v_defined: self.v_defined.clone(),
            fields: BTreeMap::new(),
        }
    }
}
