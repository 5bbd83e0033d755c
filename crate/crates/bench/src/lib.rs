//! Fixed workloads shared by the benchmarks.

use cpop_core::generators::{generate, Family};
use cpop_core::{CpopInstance, Hierarchy};

pub struct Workload {
    pub name: &'static str,
    pub instance: CpopInstance,
    pub order: usize,
    pub hierarchy: Hierarchy,
}

/// Small instances that solve in well under a second.
pub fn small_workloads() -> Vec<Workload> {
    let make = |name, family, n, order, hierarchy| Workload {
        name,
        instance: generate(family, n, 0).expect("valid size"),
        order,
        hierarchy,
    };
    vec![
        make("unimodular-r1-real", Family::Unimodular, 3, 1, Hierarchy::Real),
        make("quadratic-n4-r1-real", Family::RandomQuadratic, 4, 1, Hierarchy::Real),
        make("quadratic-n4-r1-complex", Family::RandomQuadratic, 4, 1, Hierarchy::Complex),
        make("quartic-n3-r2-real", Family::RandomQuartic, 3, 2, Hierarchy::Real),
        make("quartic-n3-r2-rpop", Family::RandomQuartic, 3, 2, Hierarchy::Rpop),
        make("energy-n4-r3-real", Family::PolyphaseEnergy, 4, 3, Hierarchy::Real),
    ]
}
