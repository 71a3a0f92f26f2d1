//! GHZ-diagonal basis calculus.
//!
//! A state that is diagonal in a product of GHZ-class and computational bases
//! is stored as its weight vector. Channels acting on such states are sparse,
//! column-substochastic [`TransferOperator`]s. Pauli operators permute basis
//! states, so every Pauli action reduces to an XOR mask on the basis index.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance for stochasticity and normalization checks.
pub const EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Factor {
    /// n-qubit GHZ-class basis `(±|s⟩ + |s̄⟩)/√2`.
    Ghz(usize),
    /// n-qubit computational basis.
    Comp(usize),
}

impl Factor {
    pub fn qubits(self) -> usize {
        match self {
            Factor::Ghz(n) | Factor::Comp(n) => n,
        }
    }

    pub fn dim(self) -> usize {
        1 << self.qubits()
    }

    /// Index mask of Pauli X on local qubit `q`.
    pub fn x_mask(self, q: usize) -> usize {
        match self {
            Factor::Ghz(n) if q == 0 => (1 << (n - 1)) - 1,
            Factor::Ghz(n) | Factor::Comp(n) => 1 << (n - 1 - q),
        }
    }

    /// Index mask of Pauli Z on local qubit `q`.
    pub fn z_mask(self, _q: usize) -> usize {
        match self {
            Factor::Ghz(n) => (1 << n) - 1,
            Factor::Comp(_) => 0,
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factor::Ghz(n) => write!(f, "GHZ({n})"),
            Factor::Comp(n) => write!(f, "COMP({n})"),
        }
    }
}

/// Ordered product of basis factors. Qubits are numbered globally in
/// declaration order; the first factor is the most significant part of the
/// composite index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BasisLabel {
    factors: Vec<Factor>,
}

impl BasisLabel {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        if factors.is_empty() || factors.iter().any(|f| f.qubits() == 0) {
            return Err(Error::Config("basis factors must be non-empty".into()));
        }
        let total: usize = factors.iter().map(|f| f.qubits()).sum();
        if total > 24 {
            return Err(Error::TooManyQubits {
                qubits: total,
                max: 24,
            });
        }
        Ok(Self { factors })
    }

    pub fn ghz(n: usize) -> Self {
        Self::new(vec![Factor::Ghz(n)]).expect("valid GHZ basis")
    }

    pub fn comp(n: usize) -> Self {
        Self::new(vec![Factor::Comp(n)]).expect("valid computational basis")
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn num_qubits(&self) -> usize {
        self.factors.iter().map(|f| f.qubits()).sum()
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits()
    }

    pub fn kron(&self, other: &BasisLabel) -> BasisLabel {
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&other.factors);
        BasisLabel { factors }
    }

    /// Factor containing global `qubit`, its local qubit index and the bit
    /// offset of that factor inside the composite index.
    pub fn locate(&self, qubit: usize) -> Result<(Factor, usize, usize)> {
        let total = self.num_qubits();
        if qubit >= total {
            return Err(Error::QubitOutOfRange {
                qubit,
                qubits: total,
            });
        }
        let mut start = 0;
        let mut remaining = total;
        for &f in &self.factors {
            remaining -= f.qubits();
            if qubit < start + f.qubits() {
                return Ok((f, qubit - start, remaining));
            }
            start += f.qubits();
        }
        unreachable!("qubit index checked against total")
    }

    pub fn x_mask(&self, qubit: usize) -> Result<usize> {
        let (f, q, shift) = self.locate(qubit)?;
        Ok(f.x_mask(q) << shift)
    }

    pub fn z_mask(&self, qubit: usize) -> Result<usize> {
        let (f, q, shift) = self.locate(qubit)?;
        Ok(f.z_mask(q) << shift)
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, factor) in self.factors.iter().enumerate() {
            if i > 0 {
                f.write_str("⊗")?;
            }
            write!(f, "{factor}")?;
        }
        Ok(())
    }
}

fn mismatch(expected: &BasisLabel, found: &BasisLabel) -> Error {
    Error::BasisMismatch {
        expected: expected.to_string(),
        found: found.to_string(),
    }
}

/// Computational-basis amplitudes of `|G_s^n⟩`, qubit 0 being the most
/// significant bit.
pub fn ghz_amplitudes(s: usize, n: usize) -> Result<Vec<Complex64>> {
    if n == 0 || n > 24 {
        return Err(Error::TooManyQubits { qubits: n, max: 24 });
    }
    let dim = 1usize << n;
    if s >= dim {
        return Err(Error::IndexOutOfRange { index: s, dim });
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let sign = if (s >> (n - 1)) & 1 == 1 { -h } else { h };
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    amps[s] += sign;
    amps[!s & (dim - 1)] += h;
    Ok(amps)
}

/// Probability vector over a labeled basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalState {
    basis: BasisLabel,
    weights: Vec<f64>,
}

impl DiagonalState {
    pub fn new(basis: BasisLabel, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != basis.dim() {
            return Err(Error::InvalidState(format!(
                "{} weights for basis {basis} of dimension {}",
                weights.len(),
                basis.dim()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
            return Err(Error::InvalidState(format!("negative or NaN weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if total > 1.0 + EPS {
            return Err(Error::InvalidState(format!(
                "total weight {total} exceeds 1"
            )));
        }
        Ok(Self { basis, weights })
    }

    pub fn basis_state(basis: BasisLabel, index: usize) -> Result<Self> {
        let dim = basis.dim();
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, dim });
        }
        let mut weights = vec![0.0; dim];
        weights[index] = 1.0;
        Ok(Self { basis, weights })
    }

    pub fn uniform(basis: BasisLabel) -> Self {
        let dim = basis.dim();
        Self {
            basis,
            weights: vec![1.0 / dim as f64; dim],
        }
    }

    pub fn basis(&self) -> &BasisLabel {
        &self.basis
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, index: usize) -> f64 {
        self.weights[index]
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    /// Rescales to unit total weight.
    pub fn normalized(&self) -> Result<Self> {
        let total = self.total();
        if total <= 0.0 {
            return Err(Error::InvalidState("cannot normalize a zero state".into()));
        }
        Ok(Self {
            basis: self.basis.clone(),
            weights: self.weights.iter().map(|w| w / total).collect(),
        })
    }

    pub fn kron(&self, other: &DiagonalState) -> DiagonalState {
        let weights = self
            .weights
            .iter()
            .flat_map(|&a| other.weights.iter().map(move |&b| a * b))
            .collect();
        DiagonalState {
            basis: self.basis.kron(&other.basis),
            weights,
        }
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.total() - 1.0).abs() <= tol
    }
}

/// Sparse nonnegative linear map between diagonal states, stored by column.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferOperator {
    in_basis: BasisLabel,
    out_basis: BasisLabel,
    col_ptr: Vec<usize>,
    rows: Vec<usize>,
    vals: Vec<f64>,
}

impl TransferOperator {
    /// Builds an operator column by column. Duplicate row entries within a
    /// column are summed and zeros dropped.
    pub fn from_columns<I>(in_basis: BasisLabel, out_basis: BasisLabel, columns: I) -> Result<Self>
    where
        I: IntoIterator<Item = Vec<(usize, f64)>>,
    {
        let in_dim = in_basis.dim();
        let out_dim = out_basis.dim();
        let mut col_ptr = Vec::with_capacity(in_dim + 1);
        let mut rows = Vec::new();
        let mut vals = Vec::new();
        col_ptr.push(0);
        for (c, mut col) in columns.into_iter().enumerate() {
            if c >= in_dim {
                return Err(Error::IndexOutOfRange {
                    index: c,
                    dim: in_dim,
                });
            }
            col.sort_unstable_by_key(|&(r, _)| r);
            let mut sum = 0.0;
            let start = rows.len();
            for (r, v) in col {
                if r >= out_dim {
                    return Err(Error::IndexOutOfRange {
                        index: r,
                        dim: out_dim,
                    });
                }
                if !(v >= 0.0) {
                    return Err(Error::NotSubStochastic { column: c, sum: v });
                }
                sum += v;
                if v == 0.0 {
                    continue;
                }
                if rows.len() > start && rows[rows.len() - 1] == r {
                    *vals.last_mut().unwrap() += v;
                } else {
                    rows.push(r);
                    vals.push(v);
                }
            }
            if sum > 1.0 + EPS {
                return Err(Error::NotSubStochastic { column: c, sum });
            }
            col_ptr.push(rows.len());
        }
        if col_ptr.len() != in_dim + 1 {
            return Err(Error::InvalidState(format!(
                "{} columns supplied for input dimension {in_dim}",
                col_ptr.len() - 1
            )));
        }
        Ok(Self {
            in_basis,
            out_basis,
            col_ptr,
            rows,
            vals,
        })
    }

    pub fn identity(basis: &BasisLabel) -> Self {
        Self::permutation(basis, |i| i)
    }

    /// Permutation `e_i -> e_{f(i)}`; `f` must be a bijection.
    pub fn permutation(basis: &BasisLabel, f: impl Fn(usize) -> usize) -> Self {
        let dim = basis.dim();
        Self {
            in_basis: basis.clone(),
            out_basis: basis.clone(),
            col_ptr: (0..=dim).collect(),
            rows: (0..dim).map(f).collect(),
            vals: vec![1.0; dim],
        }
    }

    pub fn mask_permutation(basis: &BasisLabel, mask: usize) -> Self {
        Self::permutation(basis, |i| i ^ mask)
    }

    pub fn in_basis(&self) -> &BasisLabel {
        &self.in_basis
    }

    pub fn out_basis(&self) -> &BasisLabel {
        &self.out_basis
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn column(&self, c: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.col_ptr[c]..self.col_ptr[c + 1];
        self.rows[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.column(col)
            .find(|&(r, _)| r == row)
            .map_or(0.0, |(_, v)| v)
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.in_basis.dim())
            .map(|c| self.column(c).map(|(_, v)| v).sum())
            .collect()
    }

    pub fn is_column_stochastic(&self, tol: f64) -> bool {
        self.column_sums().iter().all(|s| (s - 1.0).abs() <= tol)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.in_basis.dim()]; self.out_basis.dim()];
        for (r, c, v) in
            (0..self.in_basis.dim()).flat_map(|c| self.column(c).map(move |(r, v)| (r, c, v)))
        {
            m[r][c] += v;
        }
        m
    }

    /// `a·self + b·other` for operators of identical shape.
    pub fn mix(&self, a: f64, other: &TransferOperator, b: f64) -> Result<Self> {
        if self.in_basis != other.in_basis {
            return Err(mismatch(&self.in_basis, &other.in_basis));
        }
        if self.out_basis != other.out_basis {
            return Err(mismatch(&self.out_basis, &other.out_basis));
        }
        let columns = (0..self.in_basis.dim()).map(|c| {
            self.column(c)
                .map(|(r, v)| (r, a * v))
                .chain(other.column(c).map(|(r, v)| (r, b * v)))
                .collect::<Vec<_>>()
        });
        Self::from_columns(self.in_basis.clone(), self.out_basis.clone(), columns)
    }

    /// Convex combination `(1-p)·I + p·self`.
    pub fn blend_with_identity(&self, p: f64) -> Result<Self> {
        crate::error::check_probability("p", p)?;
        Self::identity(&self.in_basis).mix(1.0 - p, self, p)
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn compose(&self, first: &TransferOperator) -> Result<Self> {
        if first.out_basis != self.in_basis {
            return Err(mismatch(&self.in_basis, &first.out_basis));
        }
        let mut acc = vec![0.0; self.out_basis.dim()];
        let mut touched = Vec::new();
        let mut columns = Vec::with_capacity(first.in_basis.dim());
        for c in 0..first.in_basis.dim() {
            for (mid, a) in first.column(c) {
                for (r, b) in self.column(mid) {
                    if acc[r] == 0.0 {
                        touched.push(r);
                    }
                    acc[r] += a * b;
                }
            }
            let col: Vec<(usize, f64)> = touched.iter().map(|&r| (r, acc[r])).collect();
            for &r in &touched {
                acc[r] = 0.0;
            }
            touched.clear();
            columns.push(col);
        }
        Self::from_columns(first.in_basis.clone(), self.out_basis.clone(), columns)
    }

    pub fn kron(&self, other: &TransferOperator) -> TransferOperator {
        let od = other.out_basis.dim();
        let mut col_ptr = vec![0];
        let mut rows = Vec::with_capacity(self.nnz() * other.nnz());
        let mut vals = Vec::with_capacity(self.nnz() * other.nnz());
        for ca in 0..self.in_basis.dim() {
            for cb in 0..other.in_basis.dim() {
                for (ra, va) in self.column(ca) {
                    for (rb, vb) in other.column(cb) {
                        rows.push(ra * od + rb);
                        vals.push(va * vb);
                    }
                }
                col_ptr.push(rows.len());
            }
        }
        TransferOperator {
            in_basis: self.in_basis.kron(&other.in_basis),
            out_basis: self.out_basis.kron(&other.out_basis),
            col_ptr,
            rows,
            vals,
        }
    }

    /// Matrix-vector product on a raw weight slice of the input dimension.
    pub fn apply_weights(&self, weights: &[f64]) -> Vec<f64> {
        assert_eq!(weights.len(), self.in_basis.dim(), "weight length");
        let mut out = vec![0.0; self.out_basis.dim()];
        for (c, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (r, v) in self.column(c) {
                out[r] += v * w;
            }
        }
        out
    }

    pub fn apply(&self, state: &DiagonalState) -> Result<DiagonalState> {
        if state.basis != self.in_basis {
            return Err(mismatch(&self.in_basis, &state.basis));
        }
        Ok(DiagonalState {
            basis: self.out_basis.clone(),
            weights: self.apply_weights(&state.weights),
        })
    }
}

pub fn pauli_x_op(basis: &BasisLabel, qubit: usize) -> Result<TransferOperator> {
    Ok(TransferOperator::mask_permutation(
        basis,
        basis.x_mask(qubit)?,
    ))
}

pub fn pauli_z_op(basis: &BasisLabel, qubit: usize) -> Result<TransferOperator> {
    Ok(TransferOperator::mask_permutation(
        basis,
        basis.z_mask(qubit)?,
    ))
}

/// Full single-qubit depolarization `(I + X)(I + Z)/4`.
pub fn depol_op(basis: &BasisLabel, qubit: usize) -> Result<TransferOperator> {
    let id = TransferOperator::identity(basis);
    let with_x = id.mix(0.5, &pauli_x_op(basis, qubit)?, 0.5)?;
    let with_z = id.mix(0.5, &pauli_z_op(basis, qubit)?, 0.5)?;
    with_x.compose(&with_z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn composite_masks_follow_factor_offsets() {
        let b = BasisLabel::new(vec![Factor::Ghz(3), Factor::Comp(3), Factor::Ghz(2)]).unwrap();
        assert_eq!(b.dim(), 256);
        assert_eq!(b.x_mask(0).unwrap(), 0b011 << 5);
        assert_eq!(b.z_mask(2).unwrap(), 0b111 << 5);
        assert_eq!(b.x_mask(4).unwrap(), 0b010 << 2);
        assert_eq!(b.z_mask(4).unwrap(), 0);
        assert_eq!(b.x_mask(7).unwrap(), 0b01);
        assert!(matches!(b.x_mask(8), Err(Error::QubitOutOfRange { .. })));
    }

    #[test]
    fn ghz_amplitude_examples() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let a = ghz_amplitudes(0, 1).unwrap();
        assert_abs_diff_eq!(a[0].re, h);
        assert_abs_diff_eq!(a[1].re, h);
        let a = ghz_amplitudes(1, 1).unwrap();
        assert_abs_diff_eq!(a[0].re, h);
        assert_abs_diff_eq!(a[1].re, -h);
        let a = ghz_amplitudes(0, 2).unwrap();
        let re: Vec<f64> = a.iter().map(|c| c.re).collect();
        assert_eq!(re, vec![h, 0.0, 0.0, h]);
        assert!(ghz_amplitudes(4, 2).is_err());
    }

    #[test]
    fn comp_bit_flip_and_trivial_z() {
        let b = BasisLabel::comp(1);
        let x = pauli_x_op(&b, 0).unwrap();
        let s = x
            .apply(&DiagonalState::new(b.clone(), vec![0.3, 0.7]).unwrap())
            .unwrap();
        assert_eq!(s.weights(), &[0.7, 0.3]);
        assert_eq!(pauli_z_op(&b, 0).unwrap(), TransferOperator::identity(&b));
    }

    #[test]
    fn ghz2_paulis_act_on_bell_labels() {
        let b = BasisLabel::ghz(2);
        let phi = DiagonalState::basis_state(b.clone(), 0).unwrap();
        let x = pauli_x_op(&b, 0).unwrap().apply(&phi).unwrap();
        assert_eq!(x.weights(), &[0.0, 1.0, 0.0, 0.0]);
        let z = pauli_z_op(&b, 0).unwrap().apply(&phi).unwrap();
        assert_eq!(z.weights(), &[0.0, 0.0, 0.0, 1.0]);
        let mixed = DiagonalState::new(b.clone(), vec![0.7, 0.1, 0.1, 0.1]).unwrap();
        let out = pauli_x_op(&b, 0).unwrap().apply(&mixed).unwrap();
        assert_eq!(out.weights(), &[0.1, 0.7, 0.1, 0.1]);
    }

    #[test]
    fn depolarization_mixes_bell_pair() {
        let b = BasisLabel::ghz(2);
        let d = depol_op(&b, 0).unwrap();
        let out = d
            .apply(&DiagonalState::basis_state(b.clone(), 0).unwrap())
            .unwrap();
        for w in out.weights() {
            assert_abs_diff_eq!(*w, 0.25, epsilon = EPS);
        }
        let c = BasisLabel::comp(1);
        let out = depol_op(&c, 0)
            .unwrap()
            .apply(&DiagonalState::basis_state(c, 0).unwrap())
            .unwrap();
        assert_eq!(out.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn depolarization_is_idempotent() {
        let b = BasisLabel::new(vec![Factor::Ghz(3), Factor::Comp(2)]).unwrap();
        for q in 0..5 {
            let d = depol_op(&b, q).unwrap();
            let dd = d.compose(&d).unwrap();
            let (a, bb) = (d.to_dense(), dd.to_dense());
            for (ra, rb) in a.iter().zip(&bb) {
                for (x, y) in ra.iter().zip(rb) {
                    assert_abs_diff_eq!(x, y, epsilon = EPS);
                }
            }
            assert!(d.is_column_stochastic(EPS));
        }
    }

    #[test]
    fn kron_of_states_and_identities() {
        let a = DiagonalState::new(BasisLabel::comp(1), vec![1.0, 0.0]).unwrap();
        let b = DiagonalState::new(BasisLabel::comp(1), vec![0.0, 1.0]).unwrap();
        assert_eq!(a.kron(&b).weights(), &[0.0, 1.0, 0.0, 0.0]);
        let i1 = TransferOperator::identity(&BasisLabel::ghz(2));
        let i2 = TransferOperator::identity(&BasisLabel::comp(1));
        assert_eq!(
            i1.kron(&i2),
            TransferOperator::identity(&BasisLabel::ghz(2).kron(&BasisLabel::comp(1)))
        );
    }

    #[test]
    fn apply_rejects_wrong_basis() {
        let op = TransferOperator::identity(&BasisLabel::ghz(2));
        let s = DiagonalState::uniform(BasisLabel::comp(2));
        assert!(matches!(op.apply(&s), Err(Error::BasisMismatch { .. })));
    }

    #[test]
    fn from_columns_rejects_superstochastic_column() {
        let b = BasisLabel::comp(1);
        let r = TransferOperator::from_columns(
            b.clone(),
            b,
            vec![vec![(0, 0.7), (1, 0.7)], vec![(1, 1.0)]],
        );
        assert!(matches!(r, Err(Error::NotSubStochastic { column: 0, .. })));
    }

    #[test]
    fn state_validation() {
        let b = BasisLabel::comp(1);
        assert!(DiagonalState::new(b.clone(), vec![-0.1, 1.0]).is_err());
        assert!(DiagonalState::new(b.clone(), vec![0.6, 0.6]).is_err());
        assert!(DiagonalState::new(b, vec![0.2, 0.3]).is_ok());
    }
}
