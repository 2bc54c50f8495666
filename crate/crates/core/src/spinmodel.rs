//! The qubit-only gate model: Ising-coupled spins with a transverse drive on
//! the target ion, its excitation gaps, the resonance condition, and the
//! ideal gate unitary used as the fidelity reference.
//!
//! Basis conventions are fixed here for the whole crate: basis index `x` has
//! ion 0 as its most significant bit, and sigma_z|0> = +|0>, so the spin value
//! of ion i in state x is `s_i = +1` for bit 0 and `-1` for bit 1.

use crate::hilbert::{CMat, IM};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Parameters of the spin Hamiltonian
/// `H = -(nu/2) sum_i sz_i + sum_{i!=j} J_ij sz_i sz_j + (g/2) sx_target`.
#[derive(Debug, Clone)]
pub struct SpinModelParams {
    /// Qubit detuning nu, rad/s.
    pub nu: f64,
    /// Symmetric coupling matrix, rad/s; the diagonal is ignored.
    pub j: DMatrix<f64>,
    /// Drive amplitude, rad/s.
    pub g: f64,
    pub target: usize,
}

/// Spin value (+1 or -1) of ion `i` in basis state `x` of an `n`-ion register.
#[inline]
pub fn spin_of(x: usize, i: usize, n: usize) -> f64 {
    if (x >> (n - 1 - i)) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Total magnetization sum_i s_i of basis state `x`.
pub fn magnetization(x: usize, n: usize) -> f64 {
    (0..n).map(|i| spin_of(x, i, n)).sum()
}

/// sum_{i != j} J_ij s_i s_j (both orders, matching the Hamiltonian as written).
pub fn ising_energy(j: &DMatrix<f64>, x: usize) -> f64 {
    let n = j.nrows();
    let mut e = 0.0;
    for i in 0..n {
        for k in 0..n {
            if i != k {
                e += j[(i, k)] * spin_of(x, i, n) * spin_of(x, k, n);
            }
        }
    }
    e
}

/// Diagonal energy of a basis state under the g = 0 spin Hamiltonian.
pub fn energy_of_bitstring(nu: f64, j: &DMatrix<f64>, x: usize) -> f64 {
    let n = j.nrows();
    -0.5 * nu * magnetization(x, n) + ising_energy(j, x)
}

/// Dense 2^N spin Hamiltonian.
pub fn spin_hamiltonian(p: &SpinModelParams) -> CMat {
    let n = p.j.nrows();
    let dim = 1 << n;
    let mut h = CMat::zeros(dim, dim);
    for x in 0..dim {
        h[(x, x)] = Complex64::new(energy_of_bitstring(p.nu, &p.j, x), 0.0);
        let flipped = x ^ (1 << (n - 1 - p.target));
        h[(x, flipped)] += Complex64::new(0.5 * p.g, 0.0);
    }
    h
}

/// Drive-transition gap of control configuration `x` (target bit ignored),
/// excluding the nu contribution: `4 sum_{i != t} J_ti s_i`.
///
/// Flipping the target in state x costs `s_t (nu - energy_gap)`; the
/// resonance choice of nu zeroes it for the all-ones control string.
pub fn energy_gap(j: &DMatrix<f64>, target: usize, x: usize) -> f64 {
    let n = j.nrows();
    let mut s = 0.0;
    for i in 0..n {
        if i != target {
            // J is symmetric; both (t,i) and (i,t) orders contribute.
            s += (j[(target, i)] + j[(i, target)]) * spin_of(x, i, n);
        }
    }
    2.0 * s
}

/// nu putting the all-ones control string on resonance: `-4 sum_i J_ti`.
pub fn resonance_nu(j: &DMatrix<f64>, target: usize) -> f64 {
    let n = j.nrows();
    let all_ones = (1 << n) - 1;
    energy_gap(j, target, all_ones)
}

/// The two basis states the drive is meant to connect: all controls in
/// the flipped well, target clear and set.
pub fn driven_pair(n: usize, target: usize) -> (usize, usize) {
    let all = (1 << n) - 1;
    (all ^ (1 << (n - 1 - target)), all)
}

/// The reference gate: identity everywhere except the two states whose
/// controls are all |1>, which get the off-diagonal block +i sigma_x.
pub fn ideal_itoffoli(n: usize, target: usize) -> CMat {
    let dim = 1 << n;
    let mut u = CMat::identity(dim, dim);
    let all = dim - 1;
    let a = all;
    let b = all ^ (1 << (n - 1 - target));
    u[(a, a)] = Complex64::new(0.0, 0.0);
    u[(b, b)] = Complex64::new(0.0, 0.0);
    u[(a, b)] = IM;
    u[(b, a)] = IM;
    u
}

/// Per-basis-state dynamical phases exp(-i E_x t_eff), the bookkeeping used
/// for the timing criterion on echo-free gates.
pub fn dynamical_phases(nu: f64, j: &DMatrix<f64>, t_eff: f64) -> Vec<Complex64> {
    let n = j.nrows();
    (0..1usize << n)
        .map(|x| Complex64::from_polar(1.0, -energy_of_bitstring(nu, j, x) * t_eff))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::expm_hermitian;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(n, n);
        for i in 0..n {
            for k in i + 1..n {
                let v: f64 = rng.random_range(-1.0..1.0);
                j[(i, k)] = v;
                j[(k, i)] = v;
            }
        }
        j
    }

    #[test]
    fn gap_formula_matches_brute_force_diagonal() {
        // 200 random instances across N = 2..7: the gap of flipping the
        // target equals the diagonal-energy difference of the g = 0 model.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..200 {
            let n = 2 + trial % 6;
            let j = random_symmetric(n, &mut rng);
            let nu: f64 = rng.random_range(-2.0..2.0);
            let target = trial % n;
            for x in 0..1usize << n {
                let flipped = x ^ (1 << (n - 1 - target));
                let de = energy_of_bitstring(nu, &j, flipped) - energy_of_bitstring(nu, &j, x);
                // Flip cost is s_t (nu - gap): the gap term switches sign
                // with the direction of the flip, nu rides along with s_t.
                let sign = spin_of(x, target, n);
                let want = sign * (nu - energy_gap(&j, target, x));
                assert_relative_eq!(de, want, epsilon = 1e-10, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn gap_formula_matches_spin_hamiltonian_eigenvalues() {
        // Same check via the dense Hamiltonian diagonal to pin the matrix
        // builder itself.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..25 {
            let n = 3;
            let j = random_symmetric(n, &mut rng);
            let nu: f64 = rng.random_range(-2.0..2.0);
            let p = SpinModelParams { nu, j: j.clone(), g: 0.0, target: 1 };
            let h = spin_hamiltonian(&p);
            for x in 0..1usize << n {
                assert_relative_eq!(
                    h[(x, x)].re,
                    energy_of_bitstring(nu, &j, x),
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn homogeneous_three_ion_gaps() {
        // Homogeneous J, target = center: the all-ones controls sit at -8J,
        // the all-zeros controls at +8J.
        let jval = TAU * 2e3;
        let mut j = DMatrix::from_element(3, 3, jval);
        j.fill_diagonal(0.0);
        assert_relative_eq!(energy_gap(&j, 1, 0b101), -8.0 * jval, max_relative = 1e-12);
        assert_relative_eq!(energy_gap(&j, 1, 0b000), 8.0 * jval, max_relative = 1e-12);
        assert_relative_eq!(resonance_nu(&j, 1), -8.0 * jval, max_relative = 1e-12);
    }

    #[test]
    fn resonance_zeroes_the_driven_transition() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = 2 + (rng.random_range(0..5usize));
            let j = random_symmetric(n, &mut rng);
            let target = rng.random_range(0..n);
            let nu = resonance_nu(&j, target);
            let all = (1 << n) - 1;
            let flipped = all ^ (1 << (n - 1 - target));
            let de = energy_of_bitstring(nu, &j, all) - energy_of_bitstring(nu, &j, flipped);
            assert!(de.abs() < 1e-9, "residual gap {de}");
        }
    }

    #[test]
    fn resonant_drive_transfers_population_at_ratio_two() {
        // J/g = 2, homogeneous N = 3: driving for pi/g moves |111> to |011>
        // (center target) with population above 0.98, while phases elsewhere
        // stay population-free.
        let g = TAU * 1e3;
        let jval = 2.0 * g;
        let mut j = DMatrix::from_element(3, 3, jval);
        j.fill_diagonal(0.0);
        let p = SpinModelParams { nu: resonance_nu(&j, 1), j, g, target: 1 };
        let h = spin_hamiltonian(&p);
        let u = expm_hermitian(&h, std::f64::consts::PI / g);

        let from = 0b111;
        let to = 0b101;
        let pop = u[(to, from)].norm_sqr();
        assert!(pop > 0.98, "transfer population {pop}");

        // Off-resonant strings keep their population.
        for x in [0b000usize, 0b001, 0b100] {
            let stay = u[(x, x)].norm_sqr();
            assert!(stay > 0.99, "state {x:03b} kept {stay}");
        }
    }

    #[test]
    fn ideal_gate_structure() {
        let u = ideal_itoffoli(3, 1);
        assert_relative_eq!(u[(0b111, 0b101)].im, 1.0);
        assert_relative_eq!(u[(0b101, 0b111)].im, 1.0);
        assert_relative_eq!(u[(0b111, 0b111)].norm(), 0.0);
        for x in [0b000usize, 0b001, 0b010, 0b011, 0b100, 0b110] {
            assert_relative_eq!(u[(x, x)].re, 1.0);
        }
        // Unitary, and trace 6 (the identity block only).
        assert!((u.adjoint() * &u - CMat::identity(8, 8)).norm() < 1e-14);
        assert_relative_eq!(u.trace().re, 6.0);

        // Applied twice it squares to diag(1,...,1,-1,-1)-like block:
        // (i sx)^2 = -1 on the target pair.
        let sq = &u * &u;
        assert_relative_eq!(sq[(0b101, 0b101)].re, -1.0);
        assert_relative_eq!(sq[(0b111, 0b111)].re, -1.0);
    }

    #[test]
    fn dynamical_phase_bookkeeping() {
        let jval = TAU * 2e3;
        let mut j = DMatrix::from_element(3, 3, jval);
        j.fill_diagonal(0.0);
        let nu = resonance_nu(&j, 1);
        // At t_eff = tau_g + t_a with J t_eff = 2k pi the quoted timing
        // criterion holds: all phases relative to |000> are trivial for the
        // even-magnetization sector driven here.
        let t_eff = 1e-3;
        assert_relative_eq!((jval * t_eff).rem_euclid(TAU), 0.0, epsilon = 1e-9);
        let ph = dynamical_phases(nu, &j, t_eff);
        // Differences of diagonal energies are multiples of 8J and 2 nu here;
        // both wind by full turns at this t_eff.
        for x in 0..8 {
            let rel = ph[x] * ph[0].conj();
            assert_relative_eq!(rel.im.abs(), 0.0, epsilon = 1e-6);
        }
    }
}
