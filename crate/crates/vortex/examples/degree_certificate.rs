//! The equivariant-degree machinery: isotypical decomposition, the linear
//! degree formula, the product rule, and the certificate that the disc pair
//! branch carries nonzero degree.

use nalgebra::{DMatrix, Vector2};
use std::f64::consts::PI;
use vortex::domains::DomainModel;
use vortex::equilibria::{solve_equilibrium, Normalization};
use vortex::model::Configuration;
use vortex::s1deg::{
    degree_certificate, linear_degree, multiply_degrees, DegreeVector, IsotypicalMap,
};
use vortex::VortexSystem;

fn main() {
    // linear degree of a map with a negative fixed-point block and one
    // inverted rotating plane
    let map = IsotypicalMap::new(vec![
        (0, -DMatrix::identity(1, 1)),
        (1, DMatrix::identity(2, 2)),
        (2, -DMatrix::identity(2, 2)),
    ])
    .unwrap();
    let d = linear_degree(&map).unwrap();
    println!("linear degree: {}", serde_json::to_string(&d).unwrap());

    let product = multiply_degrees(&d, &DegreeVector::from_entries([(0, 1), (1, 1)]));
    println!("after multiplication: {}", serde_json::to_string(&product).unwrap());

    // certificate for the pair concentrating at the disc center
    let sys = VortexSystem::in_domain(vec![1.0, 1.0], DomainModel::UnitDisc).unwrap();
    let rho = 1.0 / (2.0 * PI).sqrt();
    let eq = solve_equilibrium(
        &sys,
        &Configuration::from_points(&[(rho, 0.0), (-rho, 0.0)]),
        Normalization::FixOmega(1.0),
    )
    .unwrap();
    let cert = degree_certificate(&sys, Vector2::zeros(), &eq, 0.1, 8, None).unwrap();
    println!("disc-pair branch certificate: {cert} (nonzero: the branch is global)");
}
