//! Dense operators and states on a composite qubit x multi-mode Fock space.
//!
//! Index layout: qubit basis index slowest (ion 0 = most significant bit),
//! then one Fock index per mode in declaration order, last mode fastest.
//! These dense tools serve reference dynamics and oracle tests; the
//! production evolution engine in [`crate::evolution`] never builds full
//! composite matrices.

use crate::error::{ModelError, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const IM: Complex64 = Complex64::new(0.0, 1.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Shape of the composite Hilbert space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositeSpace {
    pub n_qubits: usize,
    /// Fock-space dimension (n_max + 1) per selected mode.
    pub fock_dims: Vec<usize>,
}

impl CompositeSpace {
    pub fn new(n_qubits: usize, fock_dims: Vec<usize>) -> Self {
        CompositeSpace { n_qubits, fock_dims }
    }

    pub fn qubit_dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn fock_dim(&self) -> usize {
        self.fock_dims.iter().product()
    }

    pub fn dim(&self) -> usize {
        self.qubit_dim() * self.fock_dim()
    }

    /// Stride of mode `m` inside the flattened Fock index.
    pub fn mode_stride(&self, m: usize) -> usize {
        self.fock_dims[m + 1..].iter().product()
    }

    /// Flat index of |x> |n_0 n_1 ...>.
    pub fn index(&self, x: usize, ns: &[usize]) -> usize {
        debug_assert_eq!(ns.len(), self.fock_dims.len());
        let mut fock = 0;
        for (m, &n) in ns.iter().enumerate() {
            debug_assert!(n < self.fock_dims[m]);
            fock = fock * self.fock_dims[m] + n;
        }
        x * self.fock_dim() + fock
    }
}

pub fn identity(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

pub fn pauli(p: Pauli) -> CMat {
    let z = Complex64::new(0.0, 0.0);
    match p {
        Pauli::X => CMat::from_row_slice(2, 2, &[z, ONE, ONE, z]),
        Pauli::Y => CMat::from_row_slice(2, 2, &[z, -IM, IM, z]),
        Pauli::Z => CMat::from_row_slice(2, 2, &[ONE, z, z, -ONE]),
    }
}

/// sigma acting on one ion of the full composite space.
pub fn pauli_embed(space: &CompositeSpace, p: Pauli, ion: usize) -> CMat {
    let mut op = identity(1 << ion);
    op = op.kronecker(&pauli(p));
    let rest = 1 << (space.n_qubits - ion - 1);
    op = op.kronecker(&identity(rest));
    op.kronecker(&identity(space.fock_dim()))
}

/// Truncated annihilation operator on a single mode of dimension `d`.
pub fn ladder(d: usize) -> CMat {
    let mut a = CMat::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

pub fn number(d: usize) -> CMat {
    CMat::from_fn(d, d, |r, c| {
        if r == c {
            Complex64::new(r as f64, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Annihilation operator of mode `m` embedded in the composite space.
pub fn ladder_embed(space: &CompositeSpace, m: usize) -> CMat {
    mode_embed(space, m, &ladder(space.fock_dims[m]))
}

pub fn number_embed(space: &CompositeSpace, m: usize) -> CMat {
    mode_embed(space, m, &number(space.fock_dims[m]))
}

/// Any single-mode operator embedded in the composite space.
pub fn mode_embed(space: &CompositeSpace, m: usize, op: &CMat) -> CMat {
    let before: usize = space.fock_dims[..m].iter().product();
    let after: usize = space.fock_dims[m + 1..].iter().product();
    identity(space.qubit_dim() * before)
        .kronecker(op)
        .kronecker(&identity(after))
}

/// e^{-i H t} for Hermitian H, by eigendecomposition. Exactly unitary up to
/// eigensolver roundoff, which keeps long products norm-stable.
pub fn expm_hermitian(h: &CMat, t: f64) -> CMat {
    let d = h.nrows();
    let eig = nalgebra::SymmetricEigen::new(h.clone());
    let mut scaled = eig.eigenvectors.clone();
    for k in 0..d {
        let phase = Complex64::from_polar(1.0, -eig.eigenvalues[k] * t);
        scaled.column_mut(k).iter_mut().for_each(|e| *e *= phase);
    }
    &scaled * eig.eigenvectors.adjoint()
}

/// e^{G} for anti-Hermitian G (unitary result).
pub fn expm_antihermitian(g: &CMat) -> CMat {
    // iG is Hermitian; e^G = e^{-i(iG)}.
    expm_hermitian(&(g * IM), 1.0)
}

/// Single-mode displacement D(alpha) = exp(alpha a† - alpha* a) on dimension `d`.
pub fn displacement(d: usize, alpha: Complex64) -> CMat {
    let a = ladder(d);
    let g = a.adjoint() * Complex64::from(alpha) - &a * Complex64::from(alpha.conj());
    expm_antihermitian(&g)
}

/// |x> |n_0 n_1 ...> as a dense state vector.
pub fn basis_state(space: &CompositeSpace, x: usize, ns: &[usize]) -> CVec {
    let mut v = CVec::zeros(space.dim());
    v[space.index(x, ns)] = ONE;
    v
}

/// Projector onto the all-modes-vacuum subspace (qubits untouched).
pub fn ground_projector(space: &CompositeSpace) -> CMat {
    let l = space.fock_dim();
    let mut p = CMat::zeros(space.dim(), space.dim());
    for x in 0..space.qubit_dim() {
        let i = x * l;
        p[(i, i)] = ONE;
    }
    p
}

/// <x, vac| U |y, vac> as a qubit-space matrix.
pub fn vacuum_block(space: &CompositeSpace, u: &CMat) -> CMat {
    let d = space.qubit_dim();
    let l = space.fock_dim();
    CMat::from_fn(d, d, |r, c| u[(r * l, c * l)])
}

/// Trace out all Fock factors of a composite density matrix.
pub fn partial_trace_fock(space: &CompositeSpace, rho: &CMat) -> Result<CMat> {
    let d = space.qubit_dim();
    let l = space.fock_dim();
    if rho.nrows() != d * l || rho.ncols() != d * l {
        return Err(ModelError::Dimension(format!(
            "density matrix is {}x{}, space wants {}",
            rho.nrows(),
            rho.ncols(),
            d * l
        )));
    }
    let mut out = CMat::zeros(d, d);
    for x in 0..d {
        for y in 0..d {
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..l {
                s += rho[(x * l + k, y * l + k)];
            }
            out[(x, y)] = s;
        }
    }
    Ok(out)
}

/// Occupation distribution of one mode, tracing everything else.
pub fn fock_populations(space: &CompositeSpace, psi: &CVec, mode: usize) -> Vec<f64> {
    let d_m = space.fock_dims[mode];
    let stride = space.mode_stride(mode);
    let mut pops = vec![0.0; d_m];
    for (idx, amp) in psi.iter().enumerate() {
        let fock = idx % space.fock_dim();
        let n = (fock / stride) % d_m;
        pops[n] += amp.norm_sqr();
    }
    pops
}

/// <a_m> on a pure state, without building the embedded operator.
pub fn expect_ladder(space: &CompositeSpace, psi: &CVec, mode: usize) -> Complex64 {
    let d_m = space.fock_dims[mode];
    let stride = space.mode_stride(mode);
    let mut acc = Complex64::new(0.0, 0.0);
    for (idx, amp) in psi.iter().enumerate() {
        let fock = idx % space.fock_dim();
        let n = (fock / stride) % d_m;
        if n > 0 {
            // <psi| (…,n-1,…)><(…,n,…) |psi> sqrt(n)
            let partner = idx - stride;
            acc += psi[partner].conj() * amp * (n as f64).sqrt();
        }
    }
    acc
}

pub fn expect_number(space: &CompositeSpace, psi: &CVec, mode: usize) -> f64 {
    fock_populations(space, psi, mode)
        .iter()
        .enumerate()
        .map(|(n, p)| n as f64 * p)
        .sum()
}
