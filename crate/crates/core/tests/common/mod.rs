#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use subradiance::geometry::{Lattice, Vec3};

pub fn unit_vector(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v: Vec3 = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if (0.1..=1.0).contains(&n) {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// Either a random rectangular grid or scattered atoms at least 0.1λ apart.
pub fn random_lattice(rng: &mut ChaCha8Rng, n_atoms: usize) -> Lattice {
    let d_hat = unit_vector(rng);
    let k_hat = unit_vector(rng);
    if rng.random_bool(0.5) {
        let spacing = rng.random_range(0.08..1.2);
        let axis = rng.random_range(0..3);
        let mut dims = [1, 1, 1];
        dims[axis] = n_atoms;
        Lattice::build(dims, spacing, d_hat, k_hat).unwrap()
    } else {
        let side = rng.random_range(0.3..1.5) * (n_atoms as f64).cbrt();
        let mut positions: Vec<Vec3> = Vec::new();
        while positions.len() < n_atoms {
            let p: Vec3 = [
                rng.random_range(0.0..side),
                rng.random_range(0.0..side),
                rng.random_range(0.0..side),
            ];
            let far = positions.iter().all(|q| {
                ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt() >= 0.1
            });
            if far {
                positions.push(p);
            }
        }
        Lattice::from_positions(positions, d_hat, k_hat).unwrap()
    }
}
