//! Dense density matrices with in-place channel application.
//!
//! Qubit 0 is the most significant bit of the computational index, matching
//! [`ghz_amplitudes`](crate::ghz::ghz_amplitudes).

use num_complex::Complex64;

use crate::error::{check_probability, Error, Result};
use crate::ghz::{ghz_amplitudes, BasisLabel, DiagonalState, Factor};

pub const MAX_QUBITS: usize = 12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub type Gate1 = [[Complex64; 2]; 2];

pub fn hadamard() -> Gate1 {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

/// Where the gate depolarization of a noisy CNOT is placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoisyCnotForm {
    /// `(1-β)·CNOT ρ CNOT + β·Tr_ct(ρ) ⊗ I/4`.
    Mixture,
    DepolarizeThenGate,
    GateThenDepolarize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    fn check_size(n: usize) -> Result<()> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::TooManyQubits {
                qubits: n,
                max: MAX_QUBITS,
            });
        }
        Ok(())
    }

    pub fn zero_state(n: usize) -> Result<Self> {
        Self::check_size(n)?;
        let dim = 1 << n;
        let mut data = vec![ZERO; dim * dim];
        data[0] = ONE;
        Ok(Self { n, data })
    }

    pub fn maximally_mixed(n: usize) -> Result<Self> {
        Self::check_size(n)?;
        let dim = 1 << n;
        let mut data = vec![ZERO; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = Complex64::new(1.0 / dim as f64, 0.0);
        }
        Ok(Self { n, data })
    }

    pub fn from_pure(amps: &[Complex64]) -> Result<Self> {
        let n = amps.len().trailing_zeros() as usize;
        if 1 << n != amps.len() {
            return Err(Error::InvalidState(
                "amplitude length is not a power of two".into(),
            ));
        }
        Self::check_size(n)?;
        let dim = amps.len();
        let mut data = vec![ZERO; dim * dim];
        for (r, a) in amps.iter().enumerate() {
            if *a == ZERO {
                continue;
            }
            for (c, b) in amps.iter().enumerate() {
                data[r * dim + c] = a * b.conj();
            }
        }
        Ok(Self { n, data })
    }

    /// `Σ_s w_s |b_s⟩⟨b_s|` for the basis vectors `b_s` of `state`'s basis.
    pub fn from_diagonal(state: &DiagonalState) -> Result<Self> {
        let basis = state.basis();
        let n = basis.num_qubits();
        Self::check_size(n)?;
        let dim = 1 << n;
        let mut data = vec![ZERO; dim * dim];
        for (s, &w) in state.weights().iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let v = basis_vector(basis, s)?;
            for &(r, a) in &v {
                for &(c, b) in &v {
                    data[r * dim + c] += w * a * b.conj();
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn from_matrix(n: usize, data: Vec<Complex64>) -> Result<Self> {
        Self::check_size(n)?;
        if data.len() != 1 << (2 * n) {
            return Err(Error::InvalidState(
                "matrix size does not match qubit count".into(),
            ));
        }
        Ok(Self { n, data })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.dim() + c]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    fn bit(&self, q: usize) -> Result<usize> {
        if q >= self.n {
            return Err(Error::QubitOutOfRange {
                qubit: q,
                qubits: self.n,
            });
        }
        Ok(1 << (self.n - 1 - q))
    }

    fn scale(&mut self, f: f64) {
        self.data.iter_mut().for_each(|x| *x *= f);
    }

    pub fn kron(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        let n = self.n + other.n;
        Self::check_size(n)?;
        let (da, db) = (self.dim(), other.dim());
        let dim = da * db;
        let mut data = vec![ZERO; dim * dim];
        for ra in 0..da {
            for ca in 0..da {
                let a = self.get(ra, ca);
                if a == ZERO {
                    continue;
                }
                for rb in 0..db {
                    let row = (ra * db + rb) * dim + ca * db;
                    for cb in 0..db {
                        data[row + cb] = a * other.get(rb, cb);
                    }
                }
            }
        }
        Ok(DensityMatrix { n, data })
    }

    /// `ρ -> U ρ U†` for a single-qubit unitary.
    pub fn apply_1q(&mut self, u: &Gate1, q: usize) -> Result<()> {
        let bit = self.bit(q)?;
        let dim = self.dim();
        for r0 in (0..dim).filter(|r| r & bit == 0) {
            let r1 = r0 | bit;
            let (lo, hi) = self.data.split_at_mut(r1 * dim);
            let row0 = &mut lo[r0 * dim..r0 * dim + dim];
            let row1 = &mut hi[..dim];
            for (a, b) in row0.iter_mut().zip(row1.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = u[0][0] * x + u[0][1] * y;
                *b = u[1][0] * x + u[1][1] * y;
            }
        }
        let ud = [
            [u[0][0].conj(), u[0][1].conj()],
            [u[1][0].conj(), u[1][1].conj()],
        ];
        for row in self.data.chunks_exact_mut(dim) {
            for c0 in (0..dim).filter(|c| c & bit == 0) {
                let c1 = c0 | bit;
                let (x, y) = (row[c0], row[c1]);
                row[c0] = x * ud[0][0] + y * ud[0][1];
                row[c1] = x * ud[1][0] + y * ud[1][1];
            }
        }
        Ok(())
    }

    pub fn hadamard(&mut self, q: usize) -> Result<()> {
        self.apply_1q(&hadamard(), q)
    }

    /// Conjugation by a permutation that is its own inverse.
    fn permute_involution(&mut self, pi: impl Fn(usize) -> usize) {
        let dim = self.dim();
        for r in 0..dim {
            let pr = pi(r);
            if pr > r {
                let (lo, hi) = self.data.split_at_mut(pr * dim);
                lo[r * dim..r * dim + dim].swap_with_slice(&mut hi[..dim]);
            }
        }
        for row in self.data.chunks_exact_mut(dim) {
            for c in 0..dim {
                let pc = pi(c);
                if pc > c {
                    row.swap(c, pc);
                }
            }
        }
    }

    /// Conjugation by a diagonal ±1 unitary.
    fn apply_signs(&mut self, negative: impl Fn(usize) -> bool) {
        let dim = self.dim();
        let signs: Vec<bool> = (0..dim).map(negative).collect();
        for (r, row) in self.data.chunks_exact_mut(dim).enumerate() {
            for (c, x) in row.iter_mut().enumerate() {
                if signs[r] != signs[c] {
                    *x = -*x;
                }
            }
        }
    }

    pub fn pauli(&mut self, p: Pauli, q: usize) -> Result<()> {
        let bit = self.bit(q)?;
        match p {
            Pauli::X => self.permute_involution(|i| i ^ bit),
            Pauli::Z => self.apply_signs(|i| i & bit != 0),
            Pauli::Y => {
                self.permute_involution(|i| i ^ bit);
                self.apply_signs(|i| i & bit != 0);
            }
        }
        Ok(())
    }

    pub fn cnot(&mut self, control: usize, target: usize) -> Result<()> {
        let (cb, tb) = (self.bit(control)?, self.bit(target)?);
        if cb == tb {
            return Err(Error::Config("CNOT control equals target".into()));
        }
        self.permute_involution(|i| if i & cb != 0 { i ^ tb } else { i });
        Ok(())
    }

    pub fn cz(&mut self, a: usize, b: usize) -> Result<()> {
        let mask = self.bit(a)? | self.bit(b)?;
        self.apply_signs(|i| i & mask == mask);
        Ok(())
    }

    /// `(1-p)ρ + p·Tr_Q(ρ) ⊗ I_Q/2^k`.
    pub fn depolarize(&mut self, p: f64, qubits: &[usize]) -> Result<()> {
        check_probability("p", p)?;
        if qubits.is_empty() {
            return Err(Error::Config(
                "depolarization needs at least one qubit".into(),
            ));
        }
        let mut mask = 0;
        for &q in qubits {
            mask |= self.bit(q)?;
        }
        if p == 0.0 {
            return Ok(());
        }
        let dim = self.dim();
        let subs = submasks(mask);
        let norm = p / subs.len() as f64;
        for r in (0..dim).filter(|r| r & mask == 0) {
            for c in (0..dim).filter(|c| c & mask == 0) {
                let tr: Complex64 = subs
                    .iter()
                    .map(|&a| self.data[(r | a) * dim + (c | a)])
                    .sum();
                for &a in &subs {
                    let x = &mut self.data[(r | a) * dim + (c | a)];
                    *x = (1.0 - p) * *x + norm * tr;
                }
            }
        }
        for (r, row) in self.data.chunks_exact_mut(dim).enumerate() {
            for (c, x) in row.iter_mut().enumerate() {
                if (r ^ c) & mask != 0 {
                    *x *= 1.0 - p;
                }
            }
        }
        Ok(())
    }

    /// `(1-p)ρ + p·PρP` for `P` in {X, Y, Z}.
    pub fn flip(&mut self, pauli: Pauli, p: f64, q: usize) -> Result<()> {
        check_probability("p", p)?;
        let bit = self.bit(q)?;
        if p == 0.0 {
            return Ok(());
        }
        let dim = self.dim();
        if pauli != Pauli::Z {
            let sign = if pauli == Pauli::Y { -1.0 } else { 1.0 };
            for r in (0..dim).filter(|r| r & bit == 0) {
                let r1 = r | bit;
                let (lo, hi) = self.data.split_at_mut(r1 * dim);
                let row0 = &mut lo[r * dim..r * dim + dim];
                let row1 = &mut hi[..dim];
                #[allow(clippy::needless_range_loop)]
                for c in 0..dim {
                    let c1 = c ^ bit;
                    // Y conjugation picks up a sign when row and column bits differ.
                    let s = if c & bit != 0 { sign } else { 1.0 };
                    let (a, b) = (row0[c], row1[c1]);
                    row0[c] = (1.0 - p) * a + p * s * b;
                    row1[c1] = (1.0 - p) * b + p * s * a;
                }
            }
        }
        if pauli == Pauli::Z {
            for (r, row) in self.data.chunks_exact_mut(dim).enumerate() {
                for (c, x) in row.iter_mut().enumerate() {
                    if (r ^ c) & bit != 0 {
                        *x *= 1.0 - 2.0 * p;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn noisy_cnot(
        &mut self,
        beta: f64,
        control: usize,
        target: usize,
        form: NoisyCnotForm,
    ) -> Result<()> {
        check_probability("beta", beta)?;
        match form {
            NoisyCnotForm::DepolarizeThenGate => {
                self.depolarize(beta, &[control, target])?;
                self.cnot(control, target)
            }
            NoisyCnotForm::GateThenDepolarize => {
                self.cnot(control, target)?;
                self.depolarize(beta, &[control, target])
            }
            NoisyCnotForm::Mixture => {
                let rest: Vec<usize> = (0..self.n)
                    .filter(|&q| q != control && q != target)
                    .collect();
                let mixed = if rest.is_empty() {
                    None
                } else {
                    Some(self.partial_trace(&rest)?)
                };
                self.cnot(control, target)?;
                self.scale(1.0 - beta);
                let dim = self.dim();
                let (cb, tb) = (self.bit(control)?, self.bit(target)?);
                let pair = cb | tb;
                let scatter = scatter_table(self.n, &rest);
                for r in 0..dim {
                    for c in 0..dim {
                        if (r & pair) != (c & pair) {
                            continue;
                        }
                        let v = match &mixed {
                            Some(m) => m.get(scatter[r], scatter[c]),
                            None => ONE,
                        };
                        self.data[r * dim + c] += beta / 4.0 * v;
                    }
                }
                Ok(())
            }
        }
    }

    /// Reduced state on `keep`, in the listed order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let mut kept_mask = 0;
        let mut keep_bits = Vec::with_capacity(keep.len());
        for &q in keep {
            let b = self.bit(q)?;
            if kept_mask & b != 0 {
                return Err(Error::Config(format!("qubit {q} listed twice")));
            }
            kept_mask |= b;
            keep_bits.push(b);
        }
        let traced_mask = (self.dim() - 1) & !kept_mask;
        let k_full = spread(&keep_bits);
        let t_full = submasks(traced_mask);
        let m = keep.len();
        let kd = 1 << m;
        let dim = self.dim();
        let mut data = vec![ZERO; kd * kd];
        for rk in 0..kd {
            for ck in 0..kd {
                data[rk * kd + ck] = t_full
                    .iter()
                    .map(|&t| self.data[(k_full[rk] | t) * dim + (k_full[ck] | t)])
                    .sum();
            }
        }
        Ok(DensityMatrix { n: m, data })
    }

    /// Probabilities of every computational outcome on `qubits`, outcome
    /// bits ordered as listed (first qubit most significant).
    pub fn outcome_distribution(&self, qubits: &[usize]) -> Result<Vec<f64>> {
        let bits = qubits
            .iter()
            .map(|&q| self.bit(q))
            .collect::<Result<Vec<_>>>()?;
        let mut probs = vec![0.0; 1 << qubits.len()];
        for i in 0..self.dim() {
            let o = bits
                .iter()
                .fold(0, |acc, &b| (acc << 1) | usize::from(i & b != 0));
            probs[o] += self.get(i, i).re;
        }
        Ok(probs)
    }

    /// Unnormalized post-measurement state of the unmeasured qubits (in
    /// ascending order) for the given outcome on `qubits`, and its probability.
    pub fn project(&self, qubits: &[usize], outcome: usize) -> Result<(DensityMatrix, f64)> {
        let bits = qubits
            .iter()
            .map(|&q| self.bit(q))
            .collect::<Result<Vec<_>>>()?;
        let measured: usize = bits.iter().sum();
        let fixed: usize = bits
            .iter()
            .enumerate()
            .filter(|&(i, _)| (outcome >> (bits.len() - 1 - i)) & 1 == 1)
            .map(|(_, &b)| b)
            .sum();
        let rest: Vec<usize> = (0..self.n).filter(|q| !qubits.contains(q)).collect();
        let rest_bits: Vec<usize> = rest.iter().map(|&q| 1 << (self.n - 1 - q)).collect();
        debug_assert_eq!(rest_bits.iter().sum::<usize>() & measured, 0);
        let full = spread(&rest_bits);
        let kd = full.len();
        let dim = self.dim();
        let mut data = vec![ZERO; kd * kd];
        for (rk, &r) in full.iter().enumerate() {
            for (ck, &c) in full.iter().enumerate() {
                data[rk * kd + ck] = self.data[(r | fixed) * dim + (c | fixed)];
            }
        }
        let prob = (0..kd).map(|i| data[i * kd + i].re).sum();
        Ok((
            DensityMatrix {
                n: rest.len(),
                data,
            },
            prob,
        ))
    }

    /// Probability that a Z readout with error `delta` reports 0.
    pub fn noisy_z_readout_zero(&self, q: usize, delta: f64) -> Result<f64> {
        check_probability("delta", delta)?;
        let p = self.outcome_distribution(&[q])?;
        Ok((1.0 - delta) * p[0] + delta * p[1])
    }

    pub fn normalized(mut self) -> Result<Self> {
        let t = self.trace().re;
        if !(t > 0.0) {
            return Err(Error::InvalidState("zero-trace state".into()));
        }
        self.scale(1.0 / t);
        Ok(self)
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_error(&self) -> f64 {
        let dim = self.dim();
        let mut worst: f64 = 0.0;
        for r in 0..dim {
            for c in r..dim {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    /// Cholesky test of `ρ + tol·I`.
    pub fn is_positive_semidefinite(&self, tol: f64) -> bool {
        let dim = self.dim();
        let mut l = vec![ZERO; dim * dim];
        for j in 0..dim {
            let mut d = self.get(j, j) + tol;
            for k in 0..j {
                d -= l[j * dim + k] * l[j * dim + k].conj();
            }
            if d.re <= 0.0 {
                return false;
            }
            let dj = d.re.sqrt();
            l[j * dim + j] = Complex64::new(dj, 0.0);
            for i in j + 1..dim {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * dim + k] * l[j * dim + k].conj();
                }
                l[i * dim + j] = s / dj;
            }
        }
        true
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn expectation(&self, psi: &[Complex64]) -> f64 {
        let dim = self.dim();
        let mut total = ZERO;
        for (r, a) in psi.iter().enumerate() {
            if *a == ZERO {
                continue;
            }
            for (c, b) in psi.iter().enumerate() {
                total += a.conj() * self.data[r * dim + c] * b;
            }
        }
        total.re
    }
}

/// All submasks of `mask`, starting from 0.
fn submasks(mask: usize) -> Vec<usize> {
    let mut out = vec![0];
    let mut s = mask;
    while s != 0 {
        out.push(s);
        s = (s - 1) & mask;
    }
    out.sort_unstable();
    out
}

/// Full-index bit patterns for every compact index over `bits`, first bit
/// most significant.
fn spread(bits: &[usize]) -> Vec<usize> {
    let m = bits.len();
    (0..1usize << m)
        .map(|k| {
            bits.iter()
                .enumerate()
                .filter(|&(i, _)| (k >> (m - 1 - i)) & 1 == 1)
                .map(|(_, &b)| b)
                .sum()
        })
        .collect()
}

/// Maps a full index to its compact index over `keep` qubits.
fn scatter_table(n: usize, keep: &[usize]) -> Vec<usize> {
    (0..1usize << n)
        .map(|i| {
            keep.iter()
                .fold(0, |acc, &q| (acc << 1) | ((i >> (n - 1 - q)) & 1))
        })
        .collect()
}

/// Sparse computational-basis amplitudes of basis vector `s` of `basis`.
pub fn basis_vector(basis: &BasisLabel, s: usize) -> Result<Vec<(usize, Complex64)>> {
    let dim = basis.dim();
    if s >= dim {
        return Err(Error::IndexOutOfRange { index: s, dim });
    }
    let mut shift = basis.num_qubits();
    let mut out = vec![(0usize, ONE)];
    for &f in basis.factors() {
        shift -= f.qubits();
        let local = (s >> shift) & (f.dim() - 1);
        let amps: Vec<(usize, Complex64)> = match f {
            Factor::Comp(_) => vec![(local, ONE)],
            Factor::Ghz(n) => ghz_amplitudes(local, n)?
                .into_iter()
                .enumerate()
                .filter(|(_, a)| *a != ZERO)
                .collect(),
        };
        out = out
            .iter()
            .flat_map(|&(i, a)| amps.iter().map(move |&(j, b)| (i | (j << shift), a * b)))
            .collect();
    }
    Ok(out)
}

/// Weights `⟨b_s|ρ|b_s⟩` and the Frobenius norm of everything off the
/// diagonal of `ρ` in `basis`.
pub fn project_to_diagonal(
    rho: &DensityMatrix,
    basis: &BasisLabel,
) -> Result<(DiagonalState, f64)> {
    if basis.num_qubits() != rho.num_qubits() {
        return Err(Error::BasisMismatch {
            expected: format!("{} qubits", rho.num_qubits()),
            found: basis.to_string(),
        });
    }
    let dim = rho.dim();
    let vectors = (0..dim)
        .map(|s| basis_vector(basis, s))
        .collect::<Result<Vec<_>>>()?;
    let mut weights = vec![0.0; dim];
    let mut off = 0.0;
    let mut row = vec![ZERO; dim];
    for (s, vs) in vectors.iter().enumerate() {
        row.iter_mut().for_each(|x| *x = ZERO);
        for &(i, a) in vs {
            let a = a.conj();
            for (x, y) in row.iter_mut().zip(&rho.data[i * dim..(i + 1) * dim]) {
                *x += a * y;
            }
        }
        for (t, vt) in vectors.iter().enumerate() {
            let v: Complex64 = vt.iter().map(|&(j, b)| row[j] * b).sum();
            if s == t {
                weights[s] = v.re;
                off += v.im * v.im;
            } else {
                off += v.norm_sqr();
            }
        }
    }
    // Rounding can leave tiny negative weights.
    for w in &mut weights {
        if *w < 0.0 && *w > -1e-12 {
            *w = 0.0;
        }
    }
    let total: f64 = weights.iter().sum();
    if total > 1.0 && total < 1.0 + 1e-9 {
        weights.iter_mut().for_each(|w| *w /= total);
    }
    Ok((DiagonalState::new(basis.clone(), weights)?, off.sqrt()))
}
