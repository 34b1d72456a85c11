//! Critical points of the Robin function: grid-seeded Newton search on the
//! unit disc (one stable minimum at the center) and the half plane (none),
//! with the Brouwer index from a winding-number oracle.

use nalgebra::Vector2;
use vortex::domains::{brouwer_index, find_critical_points, DomainModel};

fn main() {
    let disc = DomainModel::UnitDisc;
    let found = find_critical_points(
        &disc,
        (Vector2::new(-0.95, -0.95), Vector2::new(0.95, 0.95)),
        24,
    );
    println!("unit disc: {} critical point(s)", found.len());
    for p in &found {
        println!(
            "  at ({:+.6}, {:+.6})  |∇h| = {:.2e}  index {}  stable: {}",
            p.location.0, p.location.1, p.gradient_norm, p.brouwer_index, p.stable
        );
    }
    // index is radius-independent for the isolated center
    for eps in [0.05, 0.1, 0.2] {
        let idx = brouwer_index(&disc, Vector2::zeros(), eps).unwrap();
        println!("  winding of ∇h on the circle of radius {eps}: {idx}");
    }

    let half = DomainModel::HalfPlane;
    let found = find_critical_points(
        &half,
        (Vector2::new(-3.0, 0.05), Vector2::new(3.0, 3.0)),
        24,
    );
    println!("half plane: {} critical point(s) (h is monotone in y)", found.len());
}
