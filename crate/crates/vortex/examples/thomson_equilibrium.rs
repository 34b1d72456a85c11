//! Solve for Thomson's regular N-gon relative equilibria from perturbed
//! guesses and verify the frequency law ω = (N − 1)/(2πρ²).

use vortex::equilibria::{solve_equilibrium, thomson_configuration, thomson_omega, Normalization};
use vortex::model::Configuration;
use vortex::VortexSystem;

fn main() {
    for n in 3..=6 {
        let sys = VortexSystem::new(vec![1.0; n]).unwrap();
        let rho = 1.0;
        // start from a 2%-distorted polygon and let Newton pull it back
        let exact = thomson_configuration(n, rho);
        let mut guess = exact.z.clone();
        for (i, v) in guess.iter_mut().enumerate() {
            *v += 0.02 * ((i * 7 + 3) as f64).sin();
        }
        let eq = solve_equilibrium(
            &sys,
            &Configuration::new(guess),
            Normalization::FixScale(rho),
        )
        .unwrap();

        let predicted = thomson_omega(n, rho);
        println!(
            "N = {n}: ω = {:.9} (closed form {:.9}), residual {:.2e}",
            eq.omega, predicted, eq.residual_norm
        );
        assert!((eq.omega - predicted).abs() < 1e-8 * predicted);
    }
}
