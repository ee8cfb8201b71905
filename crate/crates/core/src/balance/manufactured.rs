use crate::dynamics::Backend;
use crate::fields::{ncomp, Field, FieldSet};
use crate::grid::GridSpec;
use crate::trajectory::Clock;
use crate::Vec3;

/// Builds a field set by sampling analytic closures on the grid, bypassing
/// particles. `f(name, r, t)` returns the components of `name` at `(r, t)`.
pub fn manufactured_fields<F>(grid: &GridSpec, backend: Backend, clock: Clock, names: &[(&str, u8)], f: F) -> FieldSet
where
    F: Fn(&str, &Vec3, f64) -> Vec<f64>,
{
    let times = grid.times();
    let nodes = grid.node_count();
    let mut set = FieldSet::new(grid.clone(), times.clone(), clock, backend, 1);
    for (name, order) in names {
        let c = ncomp(*order);
        let mut field = Field::zeros(*order, times.len(), nodes);
        for (ti, t) in times.iter().enumerate() {
            for node in 0..nodes {
                let vals = f(name, &grid.node(node), *t);
                let off = (ti * nodes + node) * c;
                field.values[off..off + c].copy_from_slice(&vals[..c]);
            }
        }
        set.insert(*name, field);
    }
    set
}
