// Copyright 2026 The sapa-sim Authors
// SPDX-License-Identifier: Apache-2.0

//! Dense complex operator algebra for the small-scale quantum oracle.
//!
//! Operators act on truncated Fock spaces and two-level systems. Hamiltonians
//! are expressed in angular-frequency units (`H/ħ`, rad/s), so the Lindblad
//! generator reads
//!
//! ```text
//! L(ρ) = −i[H, ρ] + Σ_k r_k (C_k ρ C_k† − ½{C_k†C_k, ρ})
//! ```
//!
//! Density matrices are vectorized by column stacking, for which
//! `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result, C64};

/// Largest operator dimension accepted by [`tensor`].
pub const DEFAULT_MAX_DIM: usize = 4096;

/// Relative tolerance for the Hermiticity check.
pub const HERMITIAN_TOL: f64 = 1e-12;

const I: C64 = C64::new(0.0, 1.0);

/// A square complex matrix acting on a finite-dimensional Hilbert space.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    entries: DMatrix<C64>,
    hermitian: bool,
}

impl OperatorMatrix {
    /// Wraps a square matrix with finite entries.
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "operator must be square and non-empty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::param("entries", "operator entries must be finite"));
        }
        Ok(Self {
            entries,
            hermitian: false,
        })
    }

    /// Wraps a matrix and flags it Hermitian, verifying `M = M†`.
    pub fn new_hermitian(entries: DMatrix<C64>) -> Result<Self> {
        let mut op = Self::new(entries)?;
        let deviation = op.hermiticity_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        op.hermitian = true;
        Ok(op)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            entries: DMatrix::identity(dim, dim),
            hermitian: true,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: DMatrix::zeros(dim, dim),
            hermitian: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<C64> {
        self.entries
    }

    /// Whether the operator carries the verified-Hermitian flag.
    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// `‖M − M†‖_max / max(1, ‖M‖_max)`.
    pub fn hermiticity_deviation(&self) -> f64 {
        let scale = self.entries.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let dag = self.entries.adjoint();
        let diff = (&self.entries - dag)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        diff / scale
    }

    /// Re-checks Hermiticity and sets the flag when it holds.
    pub fn into_hermitian(self) -> Result<Self> {
        Self::new_hermitian(self.entries)
    }

    pub fn dagger(&self) -> Self {
        Self {
            entries: self.entries.adjoint(),
            hermitian: self.hermitian,
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            entries: &self.entries * factor,
            hermitian: self.hermitian && factor.im == 0.0,
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(C64::new(factor, 0.0))
    }

    pub fn commutator(&self, other: &Self) -> Self {
        Self {
            entries: &self.entries * &other.entries - &other.entries * &self.entries,
            hermitian: false,
        }
    }

    /// `tr(ρ M)`.
    pub fn expectation(&self, rho: &DMatrix<C64>) -> C64 {
        // tr(ρM) = Σ_ij ρ_ij M_ji
        let n = self.dim();
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..n {
            for i in 0..n {
                acc += rho[(i, j)] * self.entries[(j, i)];
            }
        }
        acc
    }

    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        &self.entries * v
    }
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: Self) -> OperatorMatrix {
        OperatorMatrix {
            entries: &self.entries + &rhs.entries,
            hermitian: self.hermitian && rhs.hermitian,
        }
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: Self) -> OperatorMatrix {
        OperatorMatrix {
            entries: &self.entries - &rhs.entries,
            hermitian: self.hermitian && rhs.hermitian,
        }
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: Self) -> OperatorMatrix {
        OperatorMatrix {
            entries: &self.entries * &rhs.entries,
            hermitian: false,
        }
    }
}

/// Cavity annihilation operator on the Fock space `{|0⟩, …, |n_max⟩}`.
pub fn fock_annihilation(n_max: usize) -> Result<OperatorMatrix> {
    if n_max == 0 {
        return Err(Error::param("n_max", "Fock cutoff must be at least 1"));
    }
    let dim = n_max + 1;
    let mut m = DMatrix::zeros(dim, dim);
    for k in 1..dim {
        m[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    OperatorMatrix::new(m)
}

/// Number operator `a†a` on the same truncated space.
pub fn fock_number(n_max: usize) -> Result<OperatorMatrix> {
    let a = fock_annihilation(n_max)?;
    (&a.dagger() * &a).into_hermitian()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    X,
    Y,
    Z,
    /// `σ₊ = (σx + iσy)/2 = |0⟩⟨1|`.
    Plus,
    /// `σ₋ = (σx − iσy)/2 = |1⟩⟨0|`.
    Minus,
}

/// Two-level operators in the ordered basis `{|0⟩, |1⟩}` with `σz|0⟩ = +|0⟩`.
///
/// For a charge qubit the basis is `{|R⟩, |L⟩}`; in a qubit eigenbasis it is
/// `{|e⟩, |g⟩}`.
pub fn pauli(kind: Pauli) -> OperatorMatrix {
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let (m, hermitian) = match kind {
        Pauli::X => ([z, one, one, z], true),
        Pauli::Y => ([z, -I, I, z], true),
        Pauli::Z => ([one, z, z, -one], true),
        Pauli::Plus => ([z, one, z, z], false),
        Pauli::Minus => ([z, z, one, z], false),
    };
    OperatorMatrix {
        entries: DMatrix::from_row_slice(2, 2, &m),
        hermitian,
    }
}

/// Kronecker product `A ⊗ B` (dimension limited to [`DEFAULT_MAX_DIM`]).
pub fn tensor(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<OperatorMatrix> {
    tensor_with_max(a, b, DEFAULT_MAX_DIM)
}

pub fn tensor_with_max(
    a: &OperatorMatrix,
    b: &OperatorMatrix,
    max_dim: usize,
) -> Result<OperatorMatrix> {
    let dim = a
        .dim()
        .checked_mul(b.dim())
        .ok_or(Error::DimensionOverflow {
            dim: usize::MAX,
            max: max_dim,
        })?;
    if dim > max_dim {
        return Err(Error::DimensionOverflow { dim, max: max_dim });
    }
    Ok(OperatorMatrix {
        entries: a.entries.kronecker(&b.entries),
        hermitian: a.hermitian && b.hermitian,
    })
}

/// Tensor product of a list of factors, left to right.
pub fn tensor_all(factors: &[&OperatorMatrix]) -> Result<OperatorMatrix> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| Error::param("factors", "empty tensor product"))?;
    rest.iter()
        .try_fold((*first).clone(), |acc, f| tensor(&acc, f))
}

/// A dissipation channel `rate · D[op]`.
#[derive(Clone, Debug)]
pub struct CollapseOp {
    pub rate: f64,
    pub op: OperatorMatrix,
}

impl CollapseOp {
    pub fn new(rate: f64, op: OperatorMatrix) -> Result<Self> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::param("rate", format!("collapse rate must be >= 0, got {rate}")));
        }
        Ok(Self { rate, op })
    }
}

/// Linear map on column-stacked density matrices.
#[derive(Clone, Debug)]
pub struct Superoperator {
    entries: DMatrix<C64>,
}

impl Superoperator {
    /// Dimension of the vectorized space (`dim²`).
    pub fn dim_sq(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    /// Applies the map to a density matrix and returns the matrix result.
    pub fn apply(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let d = rho.nrows();
        unvectorize(&(&self.entries * vectorize(rho)), d)
    }
}

/// Column-stacking vectorization.
pub fn vectorize(rho: &DMatrix<C64>) -> DVector<C64> {
    // nalgebra storage is column-major, which is exactly column stacking
    DVector::from_column_slice(rho.as_slice())
}

pub fn unvectorize(v: &DVector<C64>, dim: usize) -> DMatrix<C64> {
    DMatrix::from_column_slice(dim, dim, v.as_slice())
}

fn check_generator_inputs(h: &OperatorMatrix, collapse_ops: &[CollapseOp]) -> Result<()> {
    let deviation = h.hermiticity_deviation();
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    for c in collapse_ops {
        if c.op.dim() != h.dim() {
            return Err(Error::DimensionMismatch(format!(
                "collapse operator has dim {}, Hamiltonian has dim {}",
                c.op.dim(),
                h.dim()
            )));
        }
    }
    Ok(())
}

/// Dense Lindblad superoperator for `H` (rad/s) and weighted collapse operators.
///
/// The vectorized space has `dim²` entries; operators with `dim² >`
/// [`DEFAULT_MAX_DIM`] are rejected, use [`LindbladGenerator`] instead.
pub fn lindblad_superoperator(
    h: &OperatorMatrix,
    collapse_ops: &[CollapseOp],
) -> Result<Superoperator> {
    check_generator_inputs(h, collapse_ops)?;
    let d = h.dim();
    let d2 = d * d;
    if d2 > DEFAULT_MAX_DIM {
        return Err(Error::DimensionOverflow {
            dim: d2,
            max: DEFAULT_MAX_DIM,
        });
    }
    let id = DMatrix::<C64>::identity(d, d);
    let hm = h.entries();
    let mut l = (id.kronecker(hm) - hm.transpose().kronecker(&id)) * (-I);
    for c in collapse_ops {
        if c.rate == 0.0 {
            continue;
        }
        let cm = c.op.entries();
        let cdc = cm.adjoint() * cm;
        let term = cm.conjugate().kronecker(cm)
            - (id.kronecker(&cdc) + cdc.transpose().kronecker(&id)) * C64::new(0.5, 0.0);
        l += term * C64::new(c.rate, 0.0);
    }
    Ok(Superoperator { entries: l })
}

/// Matrix-free Lindblad generator, `L(ρ) = −i(H_eff ρ − ρ H_eff†) + Σ r C ρ C†`
/// with `H_eff = H − (i/2) Σ r C†C`.
#[derive(Clone, Debug)]
pub struct LindbladGenerator {
    h_eff: DMatrix<C64>,
    jumps: Vec<(f64, DMatrix<C64>, DMatrix<C64>)>,
}

impl LindbladGenerator {
    pub fn new(h: &OperatorMatrix, collapse_ops: &[CollapseOp]) -> Result<Self> {
        check_generator_inputs(h, collapse_ops)?;
        let mut h_eff = h.entries().clone();
        let mut jumps = Vec::new();
        for c in collapse_ops.iter().filter(|c| c.rate > 0.0) {
            let cm = c.op.entries().clone();
            let cd = cm.adjoint();
            h_eff -= (&cd * &cm) * C64::new(0.0, 0.5 * c.rate);
            jumps.push((c.rate, cm, cd));
        }
        Ok(Self { h_eff, jumps })
    }

    pub fn dim(&self) -> usize {
        self.h_eff.nrows()
    }

    /// Non-Hermitian effective Hamiltonian (static part).
    pub fn h_eff(&self) -> &DMatrix<C64> {
        &self.h_eff
    }

    /// Evaluates `L(ρ)` with an additional Hermitian term `extra` added to H.
    pub fn apply_with(&self, extra: Option<&DMatrix<C64>>, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let hr = match extra {
            Some(e) => (&self.h_eff + e) * rho,
            None => &self.h_eff * rho,
        };
        // ρ H_eff† = (H_eff ρ)† for Hermitian ρ; computed explicitly to stay
        // exact for non-Hermitian arguments
        let rh = match extra {
            Some(e) => rho * (&self.h_eff + e).adjoint(),
            None => rho * self.h_eff.adjoint(),
        };
        let mut out = (hr - rh) * (-I);
        for (rate, c, cd) in &self.jumps {
            out += (c * rho * cd) * C64::new(*rate, 0.0);
        }
        out
    }

    pub fn apply(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        self.apply_with(None, rho)
    }
}

/// Tensor-product layout `qubit₁ ⊗ … ⊗ qubit_n ⊗ cavity` used by the oracle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CompositeSpace {
    pub n_qubits: usize,
    pub n_max: usize,
}

impl CompositeSpace {
    pub fn new(n_qubits: usize, n_max: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::param("n_max", "Fock cutoff must be at least 1"));
        }
        let space = Self { n_qubits, n_max };
        let dim = space.dim();
        if dim > DEFAULT_MAX_DIM {
            return Err(Error::DimensionOverflow { dim, max: DEFAULT_MAX_DIM });
        }
        Ok(space)
    }

    pub fn dim(&self) -> usize {
        (1usize << self.n_qubits) * (self.n_max + 1)
    }

    fn embed(&self, slot: Option<usize>, op: &OperatorMatrix) -> Result<OperatorMatrix> {
        let mut factors = Vec::with_capacity(self.n_qubits + 1);
        let id2 = OperatorMatrix::identity(2);
        let id_cav = OperatorMatrix::identity(self.n_max + 1);
        for j in 0..self.n_qubits {
            factors.push(if slot == Some(j) { op.clone() } else { id2.clone() });
        }
        factors.push(if slot.is_none() { op.clone() } else { id_cav });
        let refs: Vec<&OperatorMatrix> = factors.iter().collect();
        tensor_all(&refs)
    }

    /// Embeds a cavity operator.
    pub fn cavity(&self, op: &OperatorMatrix) -> Result<OperatorMatrix> {
        if op.dim() != self.n_max + 1 {
            return Err(Error::DimensionMismatch(format!(
                "cavity operator dim {} != {}",
                op.dim(),
                self.n_max + 1
            )));
        }
        self.embed(None, op)
    }

    /// Embeds a two-level operator acting on qubit `j`.
    pub fn qubit(&self, j: usize, op: &OperatorMatrix) -> Result<OperatorMatrix> {
        if j >= self.n_qubits || op.dim() != 2 {
            return Err(Error::DimensionMismatch(format!(
                "qubit slot {j} with operator dim {} in a {}-qubit space",
                op.dim(),
                self.n_qubits
            )));
        }
        self.embed(Some(j), op)
    }

    pub fn annihilation(&self) -> Result<OperatorMatrix> {
        self.cavity(&fock_annihilation(self.n_max)?)
    }

    /// Projector onto the top Fock level, used to monitor truncation.
    pub fn top_fock_projector(&self) -> Result<OperatorMatrix> {
        let d = self.n_max + 1;
        let mut p = DMatrix::zeros(d, d);
        p[(d - 1, d - 1)] = C64::new(1.0, 0.0);
        self.cavity(&OperatorMatrix::new_hermitian(p)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn max_abs(m: &DMatrix<C64>) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn annihilation_single_excitation() {
        let a = fock_annihilation(1).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
        assert_eq!(a.entries(), &expected);
    }

    #[test]
    fn annihilation_superdiagonal() {
        let a = fock_annihilation(3).unwrap();
        for k in 1..=3 {
            assert!((a.entries()[(k - 1, k)].re - (k as f64).sqrt()).abs() < 1e-15);
        }
        let nonzero = a.entries().iter().filter(|z| z.norm() > 0.0).count();
        assert_eq!(nonzero, 3);
    }

    #[test]
    fn number_operator_eigenvalue() {
        let n = fock_number(4).unwrap();
        let mut v = DVector::zeros(5);
        v[2] = c(1.0);
        let nv = n.apply(&v);
        assert!((nv[2].re - 2.0).abs() < 1e-14);
        assert!(nv.iter().enumerate().all(|(k, z)| k == 2 || z.norm() < 1e-14));
    }

    #[test]
    fn zero_cutoff_rejected() {
        assert!(fock_annihilation(0).is_err());
    }

    #[test]
    fn pauli_algebra() {
        let z = pauli(Pauli::Z);
        assert_eq!(z.entries()[(0, 0)], c(1.0));
        assert_eq!(z.entries()[(1, 1)], c(-1.0));
        let x = pauli(Pauli::X);
        assert_eq!((&x * &x).entries(), OperatorMatrix::identity(2).entries());
        let plus = (&x + &pauli(Pauli::Y).scale(I)).scale_real(0.5);
        assert_eq!(plus.entries(), pauli(Pauli::Plus).entries());
        let minus = (&x - &pauli(Pauli::Y).scale(I)).scale_real(0.5);
        assert_eq!(minus.entries(), pauli(Pauli::Minus).entries());
    }

    #[test]
    fn tensor_identities() {
        let i6 = tensor(&OperatorMatrix::identity(2), &OperatorMatrix::identity(3)).unwrap();
        assert_eq!(i6.entries(), OperatorMatrix::identity(6).entries());

        let sz = tensor(&pauli(Pauli::Z), &OperatorMatrix::identity(5)).unwrap();
        let n = tensor(&OperatorMatrix::identity(2), &fock_number(4).unwrap()).unwrap();
        assert!(max_abs(sz.commutator(&n).entries()) == 0.0);

        let big = tensor(&OperatorMatrix::identity(2), &OperatorMatrix::identity(21)).unwrap();
        assert_eq!(big.dim(), 42);
    }

    #[test]
    fn tensor_overflow_rejected() {
        let a = OperatorMatrix::identity(65);
        let err = tensor(&a, &a).unwrap_err();
        assert!(matches!(err, Error::DimensionOverflow { dim: 4225, .. }));
    }

    #[test]
    fn non_hermitian_hamiltonian_rejected() {
        let a = fock_annihilation(2).unwrap();
        let err = lindblad_superoperator(&a, &[]).unwrap_err();
        assert!(matches!(err, Error::NotHermitian { .. }));
    }

    #[test]
    fn cavity_decay_law() {
        let kappa = 2.5;
        let a = fock_annihilation(3).unwrap();
        let l = lindblad_superoperator(
            &OperatorMatrix::zeros(4),
            &[CollapseOp::new(kappa, a.clone()).unwrap()],
        )
        .unwrap();
        let mut rho = DMatrix::zeros(4, 4);
        rho[(1, 1)] = c(1.0);
        let drho = l.apply(&rho);
        let dn = fock_number(3).unwrap().expectation(&drho);
        assert!((dn.re + kappa).abs() < 1e-12 && dn.im.abs() < 1e-12);
    }

    #[test]
    fn free_rotation_of_field() {
        // For H = ω a†a the generator gives d⟨a⟩/dt = −iω⟨a⟩.
        let omega = 1.7;
        let h = fock_number(4).unwrap().scale_real(omega);
        let l = lindblad_superoperator(&h, &[]).unwrap();
        // coherent-like superposition (|0⟩ + |1⟩)/√2
        let mut rho = DMatrix::from_element(5, 5, c(0.0));
        for i in 0..2 {
            for j in 0..2 {
                rho[(i, j)] = c(0.5);
            }
        }
        let a = fock_annihilation(4).unwrap();
        let a0 = a.expectation(&rho);
        let da = a.expectation(&l.apply(&rho));
        assert!((da - (-I * omega * a0)).norm() < 1e-12);
    }

    #[test]
    fn matrix_free_generator_matches_dense() {
        let a = fock_annihilation(2).unwrap();
        let sm = pauli(Pauli::Minus);
        let a_full = tensor(&OperatorMatrix::identity(2), &a).unwrap();
        let sm_full = tensor(&sm, &OperatorMatrix::identity(3)).unwrap();
        let h = (&(&(&a_full.dagger() * &sm_full) + &(&sm_full.dagger() * &a_full)).scale_real(0.3)
            + &tensor(&pauli(Pauli::Z), &OperatorMatrix::identity(3)).unwrap().scale_real(0.2))
            .into_hermitian()
            .unwrap();
        let ops = [
            CollapseOp::new(0.4, a_full).unwrap(),
            CollapseOp::new(0.9, sm_full).unwrap(),
        ];
        let dense = lindblad_superoperator(&h, &ops).unwrap();
        let free = LindbladGenerator::new(&h, &ops).unwrap();
        let rho = random_density(6, 7);
        let diff = dense.apply(&rho) - free.apply(&rho);
        assert!(max_abs(&diff) < 1e-13);
    }

    fn random_density(dim: usize, seed: u64) -> DMatrix<C64> {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let m = DMatrix::from_fn(dim, dim, |_, _| C64::new(next(), next()));
        let rho = &m * m.adjoint();
        let tr = rho.trace();
        rho / tr
    }

    fn random_hermitian(dim: usize, vals: &[f64]) -> OperatorMatrix {
        let mut k = 0;
        let mut next = || {
            let v = vals[k % vals.len()] * (1.0 + 0.1 * k as f64).sin();
            k += 1;
            v
        };
        let m = DMatrix::from_fn(dim, dim, |_, _| C64::new(next(), next()));
        OperatorMatrix::new_hermitian((&m + m.adjoint()) * c(0.5)).unwrap()
    }

    proptest! {
        #[test]
        fn trace_preservation(vals in prop::collection::vec(-1.0f64..1.0, 8), seed in 0u64..1000,
                              r1 in 0.0f64..2.0, r2 in 0.0f64..2.0) {
            let a = fock_annihilation(2).unwrap();
            let a_full = tensor(&OperatorMatrix::identity(2), &a).unwrap();
            let sz = tensor(&pauli(Pauli::Z), &OperatorMatrix::identity(3)).unwrap();
            let h = random_hermitian(6, &vals);
            let l = lindblad_superoperator(&h, &[
                CollapseOp::new(r1, a_full).unwrap(),
                CollapseOp::new(r2, sz).unwrap(),
            ]).unwrap();
            let rho = random_density(6, seed);
            prop_assert!(l.apply(&rho).trace().norm() < 1e-12);
        }

        #[test]
        fn short_time_positivity(vals in prop::collection::vec(-1.0f64..1.0, 8), seed in 0u64..1000,
                                 r in 0.0f64..2.0) {
            let sm = tensor(&pauli(Pauli::Minus), &OperatorMatrix::identity(2)).unwrap();
            let h = random_hermitian(4, &vals);
            let gen = LindbladGenerator::new(&h, &[CollapseOp::new(r, sm).unwrap()]).unwrap();
            let mut rho = random_density(4, seed);
            let dt = 1e-3;
            for _ in 0..200 {
                // midpoint step
                let k1 = gen.apply(&rho);
                let mid = &rho + &k1 * c(0.5 * dt);
                rho += gen.apply(&mid) * c(dt);
            }
            let herm = (&rho + rho.adjoint()) * c(0.5);
            let eig = herm.symmetric_eigenvalues();
            prop_assert!(eig.iter().all(|&e| e >= -1e-9));
        }

        #[test]
        fn tensor_associative(x in prop::collection::vec(-8i32..8, 24)) {
            // integer entries keep every product exact, so equality is bitwise
            let e = |k: usize| C64::new(f64::from(x[k % 24]), f64::from(x[(k + 7) % 24]));
            let a = OperatorMatrix::new(DMatrix::from_fn(2, 2, |i, j| e(i * 2 + j))).unwrap();
            let b = OperatorMatrix::new(DMatrix::from_fn(2, 2, |i, j| e(4 + i * 2 + j))).unwrap();
            let cc = OperatorMatrix::new(DMatrix::from_fn(3, 3, |i, j| e(8 + i * 3 + j))).unwrap();
            let left = tensor(&tensor(&a, &b).unwrap(), &cc).unwrap();
            let right = tensor(&a, &tensor(&b, &cc).unwrap()).unwrap();
            prop_assert_eq!(left.entries(), right.entries());
        }
    }
}
