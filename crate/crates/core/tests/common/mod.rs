#![allow(dead_code)]

use std::f64::consts::PI;

use mpet_core::meshfem::{
    apply_dirichlet, assemble_elasticity_p2, assemble_load_p1, assemble_load_p2_vector,
    assemble_stiffness_p1, build_unit_square_mesh, l2_error_p1, l2_error_p2_vector, DofMap, Space,
};
use mpet_core::solvers::factorize_spd;

/// L² error of the P1 solution of `-Δu = 2π² sin(πx) sin(πy)` with zero
/// boundary values.
pub fn poisson_p1_error(n: usize) -> f64 {
    let mesh = build_unit_square_mesh(n).unwrap();
    let exact = |x: f64, y: f64| (PI * x).sin() * (PI * y).sin();
    let a = assemble_stiffness_p1(&mesh, 1.0);
    let b = assemble_load_p1(&mesh, |x, y| 2.0 * PI * PI * exact(x, y));
    let dofs = DofMap::new(&mesh, Space::P1).with_full_dirichlet();
    let (a, b) = apply_dirichlet(&a, &b, &dofs.dirichlet, None).unwrap();
    let uh = factorize_spd(&a, "poisson").unwrap().solve(&b);
    l2_error_p1(&mesh, &uh, exact)
}

/// L² error of the clamped P2 solution of `-div 2ε(u) = f` with
/// `u = (sin πx sin πy, sin πx sin πy)`.
pub fn elasticity_p2_error(n: usize) -> f64 {
    let mesh = build_unit_square_mesh(n).unwrap();
    let s = |x: f64, y: f64| (PI * x).sin() * (PI * y).sin();
    let exact = |x: f64, y: f64| [s(x, y), s(x, y)];
    let force = |x: f64, y: f64| {
        let f = PI * PI * (3.0 * s(x, y) - (PI * x).cos() * (PI * y).cos());
        [f, f]
    };
    let a = assemble_elasticity_p2(&mesh, 1.0);
    let b = assemble_load_p2_vector(&mesh, force);
    let dofs = DofMap::new(&mesh, Space::P2Vector).with_full_dirichlet();
    let (a, b) = apply_dirichlet(&a, &b, &dofs.dirichlet, None).unwrap();
    let uh = factorize_spd(&a, "elasticity").unwrap().solve(&b);
    l2_error_p2_vector(&mesh, &uh, exact)
}

/// Observed orders `log2(e_k / e_{k+1})` for mesh sizes doubling.
pub fn orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Largest `|A r|` over the rigid motions of the unconstrained P2 elasticity
/// operator.
pub fn rigid_motion_residual(n: usize) -> f64 {
    let mesh = build_unit_square_mesh(n).unwrap();
    let a = assemble_elasticity_p2(&mesh, 1.0);
    let dofs = DofMap::new(&mesh, Space::P2Vector);
    let modes = [
        dofs.interpolate_vector(|_, _| [1.0, 0.0]),
        dofs.interpolate_vector(|_, _| [0.0, 1.0]),
        dofs.interpolate_vector(|x, y| [-y, x]),
    ];
    modes
        .iter()
        .flat_map(|r| a.mul_vec(r))
        .fold(0.0, |m, v| m.max(v.abs()))
}

pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    d / b.iter().map(|y| y * y).sum::<f64>().sqrt().max(f64::MIN_POSITIVE)
}
