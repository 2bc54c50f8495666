//! Equilibrium structure and axial normal modes of a linear ion chain in a
//! harmonic trap, plus the phonon-mediated Ising coupling matrix.
//!
//! Positions are dimensionless (length unit `(e^2 / 4 pi eps0 M w_z^2)^{1/3}`)
//! and mode frequencies are ratios to the axial trap frequency, so everything
//! here stays parameter-free until laser and trap numbers enter via
//! [`select_modes`].

use crate::error::{ModelError, Result};
use nalgebra::{DMatrix, DVector};

/// Equilibrium positions and axial normal modes of an N-ion chain.
#[derive(Debug, Clone)]
pub struct CrystalModel {
    pub n_ions: usize,
    /// Dimensionless equilibrium positions, ascending, symmetric about 0.
    pub positions: Vec<f64>,
    /// Mode frequencies over the trap frequency, ascending; entry 0 is the
    /// center-of-mass mode and is exactly 1.
    pub mode_ratios: Vec<f64>,
    /// Orthonormal mode vectors, one per mode, same order as `mode_ratios`.
    pub mode_vectors: Vec<Vec<f64>>,
}

impl CrystalModel {
    /// Solve the chain equilibrium by Newton iteration and diagonalize the
    /// potential Hessian for the axial modes.
    pub fn axial(n_ions: usize) -> Result<Self> {
        if n_ions < 2 {
            return Err(ModelError::Config(format!(
                "need at least 2 ions, got {n_ions}"
            )));
        }
        let positions = equilibrium_positions(n_ions)?;
        let hessian = hessian(&positions);
        let eig = nalgebra::SymmetricEigen::new(hessian);

        let mut order: Vec<usize> = (0..n_ions).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

        let lambda_min = eig.eigenvalues[order[0]];
        if lambda_min <= 0.0 {
            return Err(ModelError::UnstableCrystal(lambda_min));
        }

        let mut mode_ratios = Vec::with_capacity(n_ions);
        let mut mode_vectors = Vec::with_capacity(n_ions);
        for (rank, &k) in order.iter().enumerate() {
            let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
            // Deterministic sign: first component of noticeable size positive.
            if let Some(lead) = v.iter().find(|c| c.abs() > 1e-8) {
                if *lead < 0.0 {
                    v.iter_mut().for_each(|c| *c = -*c);
                }
            }
            let ratio = eig.eigenvalues[k].sqrt();
            if rank == 0 {
                // The uniform translation mode always sits at the trap
                // frequency; snap away the eigensolver noise.
                if (ratio - 1.0).abs() > 1e-9 {
                    return Err(ModelError::Numerics(format!(
                        "center-of-mass ratio {ratio} deviates from 1"
                    )));
                }
                mode_ratios.push(1.0);
            } else {
                mode_ratios.push(ratio);
            }
            mode_vectors.push(v);
        }

        Ok(CrystalModel {
            n_ions,
            positions,
            mode_ratios,
            mode_vectors,
        })
    }
}

fn potential_gradient(u: &[f64]) -> DVector<f64> {
    let n = u.len();
    DVector::from_fn(n, |i, _| {
        let mut f = u[i];
        for j in 0..n {
            if j != i {
                let d = u[i] - u[j];
                f -= d.signum() / (d * d);
            }
        }
        f
    })
}

fn hessian(u: &[f64]) -> DMatrix<f64> {
    let n = u.len();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = 1.0;
        for j in 0..n {
            if j != i {
                let d = (u[i] - u[j]).abs();
                let c = 2.0 / (d * d * d);
                a[(i, i)] += c;
                a[(i, j)] = -c;
            }
        }
    }
    a
}

fn equilibrium_positions(n: usize) -> Result<Vec<f64>> {
    // Spread the seed wide enough that Newton never collapses two ions.
    let half = 0.5 * (n as f64).powf(0.9);
    let mut u: Vec<f64> = (0..n)
        .map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64)
        .collect();

    let max_iters = 100;
    for iter in 0..max_iters {
        let grad = potential_gradient(&u);
        let residual = grad.amax();
        if residual < 1e-13 {
            // Enforce the exact reflection symmetry of the solution.
            let sym: Vec<f64> = (0..n).map(|i| 0.5 * (u[i] - u[n - 1 - i])).collect();
            return Ok(sym);
        }
        let h = hessian(&u);
        let step = h.lu().solve(&grad).ok_or_else(|| {
            ModelError::Numerics("singular Hessian in equilibrium solve".into())
        })?;
        for i in 0..n {
            u[i] -= step[i];
        }
        u.sort_by(f64::total_cmp);
        if iter == max_iters - 1 {
            return Err(ModelError::EquilibriumNoConverge {
                iters: max_iters,
                residual,
            });
        }
    }
    unreachable!()
}

/// Which phonon modes mediate the interaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeSet {
    #[default]
    CmOnly,
    AllAxial,
}

/// One selected mode as seen by the bichromatic drive: absolute frequency,
/// detuning of the beatnote from it, and per-ion Lamb-Dicke factors.
#[derive(Debug, Clone)]
pub struct ModeSpec {
    /// Mode frequency, rad/s.
    pub omega: f64,
    /// delta_m = mu - omega_m, rad/s (mu = omega_cm + delta_cm).
    pub delta: f64,
    /// Per-ion Lamb-Dicke factors eta_m^(i), dimensionless, signed.
    pub eta: Vec<f64>,
}

/// Build the per-mode drive data for a crystal.
///
/// `eta_cm_per_ion` is the Lamb-Dicke factor of a single ion on the CM mode;
/// other modes scale by their eigenvector components and by
/// `sqrt(omega_cm/omega_m)` from the mode ground-state widths.
pub fn select_modes(
    crystal: &CrystalModel,
    omega_cm: f64,
    delta_cm: f64,
    eta_cm_per_ion: f64,
    set: ModeSet,
) -> Vec<ModeSpec> {
    let n = crystal.n_ions;
    let mu = omega_cm + delta_cm;
    let eta0 = eta_cm_per_ion * (n as f64).sqrt();
    let count = match set {
        ModeSet::CmOnly => 1,
        ModeSet::AllAxial => n,
    };
    (0..count)
        .map(|m| {
            let omega = omega_cm * crystal.mode_ratios[m];
            let scale = eta0 * (omega_cm / omega).sqrt();
            ModeSpec {
                omega,
                delta: mu - omega,
                eta: crystal.mode_vectors[m].iter().map(|b| b * scale).collect(),
            }
        })
        .collect()
}

/// Phonon-mediated Ising couplings J_ij = Omega^2 sum_m eta_m^i eta_m^j / (4 delta_m).
///
/// The matrix is kept in full, including the diagonal self-energy entries;
/// qubit-qubit physics only reads the off-diagonal part.
#[derive(Debug, Clone)]
pub struct IsingMatrix {
    /// rad/s, symmetric.
    pub mat: DMatrix<f64>,
}

impl IsingMatrix {
    pub fn from_modes(modes: &[ModeSpec], omega_rabi: f64) -> Self {
        let n = modes[0].eta.len();
        let mut mat = DMatrix::zeros(n, n);
        for m in modes {
            let w = omega_rabi * omega_rabi / (4.0 * m.delta);
            for i in 0..n {
                for j in 0..n {
                    mat[(i, j)] += w * m.eta[i] * m.eta[j];
                }
            }
        }
        IsingMatrix { mat }
    }

    pub fn n_ions(&self) -> usize {
        self.mat.nrows()
    }

    /// Frobenius norm of the off-diagonal part; used for echo-target checks.
    pub fn off_diagonal_norm(&self) -> f64 {
        let n = self.n_ions();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += self.mat[(i, j)] * self.mat[(i, j)];
                }
            }
        }
        s.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::TAU;

    // Reference positions/ratios below were frozen from an independent
    // solver (high-precision Newton + eigh in double precision).

    #[test]
    fn two_ion_closed_form() {
        // Equilibrium at +/- (1/4)^(1/3); stretch mode at sqrt(3).
        let c = CrystalModel::axial(2).unwrap();
        let x = 0.25f64.powf(1.0 / 3.0);
        assert_relative_eq!(c.positions[0], -x, epsilon = 1e-12);
        assert_relative_eq!(c.positions[1], x, epsilon = 1e-12);
        assert_relative_eq!(c.mode_ratios[0], 1.0);
        assert_relative_eq!(c.mode_ratios[1], 3f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn three_ion_closed_form() {
        // Outer ions at +/- (5/4)^(1/3); ratios (1, sqrt 3, sqrt 5.8).
        let c = CrystalModel::axial(3).unwrap();
        let x = 1.25f64.powf(1.0 / 3.0);
        assert_relative_eq!(c.positions[0], -x, epsilon = 1e-12);
        assert_relative_eq!(c.positions[1], 0.0, epsilon = 1e-12);
        assert_relative_eq!(c.positions[2], x, epsilon = 1e-12);
        assert_relative_eq!(c.mode_ratios[1], 3f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(c.mode_ratios[2], 5.8f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn frozen_reference_chains() {
        let c5 = CrystalModel::axial(5).unwrap();
        let pos5 = [
            -1.742903211874,
            -0.822100756568,
            0.0,
            0.822100756568,
            1.742903211874,
        ];
        let ratio5 = [
            1.0,
            1.732050807569,
            2.411990080083,
            3.054857335256,
            3.670808796227,
        ];
        for i in 0..5 {
            assert_relative_eq!(c5.positions[i], pos5[i], epsilon = 1e-9);
            assert_relative_eq!(c5.mode_ratios[i], ratio5[i], epsilon = 1e-9);
        }

        let c7 = CrystalModel::axial(7).unwrap();
        let ratio7 = [
            1.0,
            1.732050807569,
            2.414388068731,
            3.060842041248,
            3.680697588591,
            4.280253131107,
            4.863725979909,
        ];
        for i in 0..7 {
            assert_relative_eq!(c7.mode_ratios[i], ratio7[i], epsilon = 1e-9);
        }
    }

    #[test]
    fn modes_are_orthonormal_and_cm_uniform() {
        for n in 2..=7 {
            let c = CrystalModel::axial(n).unwrap();
            for a in 0..n {
                for b in 0..n {
                    let dot: f64 = (0..n).map(|i| c.mode_vectors[a][i] * c.mode_vectors[b][i]).sum();
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert_relative_eq!(dot, want, epsilon = 1e-10);
                }
            }
            let u = 1.0 / (n as f64).sqrt();
            for i in 0..n {
                assert_relative_eq!(c.mode_vectors[0][i], u, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn equilibrium_forces_vanish() {
        for n in 2..=8 {
            let c = CrystalModel::axial(n).unwrap();
            let g = potential_gradient(&c.positions);
            assert!(g.amax() < 1e-11, "n={n}: residual {}", g.amax());
        }
    }

    #[test]
    fn cm_lamb_dicke_matches_per_ion_value() {
        let c = CrystalModel::axial(3).unwrap();
        let modes = select_modes(&c, TAU * 1e6, -TAU * 2e5, 0.1, ModeSet::AllAxial);
        for i in 0..3 {
            assert_relative_eq!(modes[0].eta[i], 0.1, epsilon = 1e-12);
        }
        // Higher modes shrink by sqrt(omega_cm/omega_m) on top of the
        // eigenvector weights.
        let want = 3f64.sqrt() * 0.1 * (1.0 / 3f64.sqrt()).sqrt() / 2f64.sqrt();
        assert_relative_eq!(modes[1].eta[0].abs(), want, epsilon = 1e-12);
        assert_relative_eq!(modes[1].eta[1].abs(), 0.0, epsilon = 1e-12);
        // Detunings: mu - omega_m with mu = 0.8 MHz.
        assert_relative_eq!(modes[0].delta, -TAU * 2e5, epsilon = 1e-3);
        assert_relative_eq!(modes[1].delta, TAU * (8e5 - 3f64.sqrt() * 1e6), epsilon = 1e-3);
    }

    #[test]
    fn ising_matrix_reproduces_quoted_coupling() {
        // delta/2pi = 20 kHz, eta = 0.1, Omega/2pi = 126.491 kHz gives
        // J/2pi = 2.0001 kHz on the CM-only model.
        let c = CrystalModel::axial(3).unwrap();
        let modes = select_modes(&c, TAU * 1e6, TAU * 2e4, 0.1, ModeSet::CmOnly);
        let j = IsingMatrix::from_modes(&modes, TAU * 126.491e3);
        let j01 = j.mat[(0, 1)] / TAU;
        assert_relative_eq!(j01, 2000.12, epsilon = 0.5);
        // Homogeneous across pairs for the CM mode.
        assert_relative_eq!(j.mat[(0, 1)], j.mat[(1, 2)], epsilon = 1e-9);
        assert_relative_eq!(j.mat[(0, 2)], j.mat[(1, 2)], epsilon = 1e-9);
    }

    #[test]
    fn ising_sign_follows_detuning() {
        let c = CrystalModel::axial(3).unwrap();
        let below = select_modes(&c, TAU * 1e6, -TAU * 2e5, 0.1, ModeSet::CmOnly);
        let jb = IsingMatrix::from_modes(&below, TAU * 4e5);
        assert!(jb.mat[(0, 1)] < 0.0);
        let above = select_modes(&c, TAU * 1e6, TAU * 2e5, 0.1, ModeSet::CmOnly);
        let ja = IsingMatrix::from_modes(&above, TAU * 4e5);
        assert!(ja.mat[(0, 1)] > 0.0);
    }
}
