//! Non-degeneracy of three-vortex relative equilibria: the equal-strength
//! equilateral triangle is degenerate (two extra purely imaginary eigenvalues
//! land on the resonance lattice iωZ), while Γ = (1, 2, 3) is non-degenerate.

use vortex::equilibria::{
    nondegeneracy, solve_equilibrium, stability_matrix, thomson_configuration, Normalization,
};
use vortex::model::Configuration;
use vortex::VortexSystem;

fn report(label: &str, sys: &VortexSystem, guess: &Configuration) {
    let eq = solve_equilibrium(sys, guess, Normalization::FixOmega(1.0)).unwrap();
    let rep = nondegeneracy(sys, &eq).unwrap();
    println!("{label}: ω = {:.6}", eq.omega);
    let a = stability_matrix(sys, &eq).unwrap();
    println!("  stability matrix norm {:.3}", a.norm());
    for (re, im) in &rep.eigenvalues {
        println!("  eigenvalue {re:+.8} {im:+.8}i");
    }
    println!(
        "  periodic dimension {} → {}",
        rep.periodic_dimension,
        if rep.nondegenerate { "non-degenerate" } else { "degenerate" }
    );
}

fn main() {
    let equal = VortexSystem::new(vec![1.0, 1.0, 1.0]).unwrap();
    report("Γ = (1,1,1) equilateral", &equal, &thomson_configuration(3, 1.0));

    // L = Σ_{j<k} Γ_j Γ_k = 11, nonzero and different from Σ Γ_k² = 14
    let unequal = VortexSystem::new(vec![1.0, 2.0, 3.0]).unwrap();
    report(
        "Γ = (1,2,3) triangle",
        &unequal,
        &thomson_configuration(3, 1.0),
    );
}
