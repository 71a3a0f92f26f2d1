//! Error channels reduced to the diagonal level.

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::ghz::{depol_op, pauli_x_op, pauli_z_op, BasisLabel, DiagonalState, TransferOperator};

/// Hardware error parameters shared by all nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Fidelity of a freshly heralded link pair.
    pub f0: f64,
    /// Two-qubit gate depolarization probability.
    pub beta: f64,
    /// Measurement error probability.
    pub delta: f64,
    /// Memory coherence time in seconds; `f64::INFINITY` disables decoherence.
    pub t_coh: f64,
}

impl NoiseParams {
    pub fn noiseless() -> Self {
        Self {
            f0: 1.0,
            beta: 0.0,
            delta: 0.0,
            t_coh: f64::INFINITY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f0 > 0.25 && self.f0 <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "F0",
                value: self.f0,
            });
        }
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::InvalidParameter {
                name: "beta",
                value: self.beta,
            });
        }
        if !(0.0..0.5).contains(&self.delta) {
            return Err(Error::InvalidParameter {
                name: "delta",
                value: self.delta,
            });
        }
        if !(self.t_coh > 0.0) {
            return Err(Error::InvalidParameter {
                name: "Tcoh",
                value: self.t_coh,
            });
        }
        Ok(())
    }
}

/// Bell-diagonal weights of a Werner pair, `[F, (1-F)/3, (1-F)/3, (1-F)/3]`.
pub fn werner_vector(f: f64) -> Result<DiagonalState> {
    if !(0.25..=1.0).contains(&f) {
        return Err(Error::InvalidParameter {
            name: "F",
            value: f,
        });
    }
    let r = (1.0 - f) / 3.0;
    DiagonalState::new(BasisLabel::ghz(2), vec![f, r, r, r])
}

/// Probability that a stored qubit has depolarized after `tau` seconds.
pub fn decoherence_prob(tau: f64, t_coh: f64) -> Result<f64> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "tau",
            value: tau,
        });
    }
    if !(t_coh > 0.0) {
        return Err(Error::InvalidParameter {
            name: "Tcoh",
            value: t_coh,
        });
    }
    Ok(-(-tau / t_coh).exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlipKind {
    Bit,
    Phase,
}

/// `(1-p)·I + p·P` with `P` the X (bit) or Z (phase) action on `qubit`.
///
/// A noisy measurement with error probability δ is equivalent to a flip of
/// strength δ in the conjugate Pauli followed by an ideal measurement.
pub fn flip_channel_op(
    kind: FlipKind,
    p: f64,
    basis: &BasisLabel,
    qubit: usize,
) -> Result<TransferOperator> {
    check_probability("p", p)?;
    let pauli = match kind {
        FlipKind::Bit => pauli_x_op(basis, qubit)?,
        FlipKind::Phase => pauli_z_op(basis, qubit)?,
    };
    pauli.blend_with_identity(p)
}

/// Joint depolarization `(1-p)·I + p·Π_i D_i` over `qubits`.
pub fn multi_depol_op(p: f64, basis: &BasisLabel, qubits: &[usize]) -> Result<TransferOperator> {
    check_probability("p", p)?;
    let (&first, rest) = qubits
        .split_first()
        .ok_or_else(|| Error::Config("joint depolarization needs at least one qubit".into()))?;
    let mut d = depol_op(basis, first)?;
    for &q in rest {
        d = depol_op(basis, q)?.compose(&d)?;
    }
    d.blend_with_identity(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ghz::EPS;
    use approx::assert_abs_diff_eq;

    #[test]
    fn werner_examples() {
        assert_eq!(werner_vector(1.0).unwrap().weights(), &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(werner_vector(0.25).unwrap().weights(), &[0.25; 4]);
        let w = werner_vector(0.97).unwrap();
        assert_abs_diff_eq!(w.weight(0), 0.97);
        for i in 1..4 {
            assert_abs_diff_eq!(w.weight(i), 0.01, epsilon = 1e-15);
        }
        assert!(werner_vector(0.2).is_err());
        assert!(werner_vector(1.01).is_err());
    }

    #[test]
    fn decoherence_examples() {
        assert_eq!(decoherence_prob(0.0, 1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            decoherence_prob(0.25, 1.0).unwrap(),
            0.221199,
            epsilon = 1e-6
        );
        assert_abs_diff_eq!(decoherence_prob(1e6, 1.0).unwrap(), 1.0);
        assert_eq!(decoherence_prob(5.0, f64::INFINITY).unwrap(), 0.0);
        assert!(decoherence_prob(-1.0, 1.0).is_err());
        let mut last = 0.0;
        for k in 1..20 {
            let g = decoherence_prob(k as f64 * 0.1, 1.0).unwrap();
            assert!(g > last);
            last = g;
        }
    }

    #[test]
    fn flip_endpoints() {
        let b = BasisLabel::comp(1);
        assert_eq!(
            flip_channel_op(FlipKind::Bit, 0.0, &b, 0).unwrap(),
            TransferOperator::identity(&b)
        );
        let full = flip_channel_op(FlipKind::Bit, 1.0, &b, 0).unwrap();
        assert_eq!(full.to_dense(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!(flip_channel_op(FlipKind::Phase, 1.5, &b, 0).is_err());
    }

    #[test]
    fn joint_depolarization_of_bell_pair() {
        let b = BasisLabel::ghz(2);
        assert_eq!(
            multi_depol_op(0.0, &b, &[0, 1]).unwrap(),
            TransferOperator::identity(&b)
        );
        let out = multi_depol_op(1.0, &b, &[0, 1])
            .unwrap()
            .apply(&DiagonalState::basis_state(b.clone(), 0).unwrap())
            .unwrap();
        for w in out.weights() {
            assert_abs_diff_eq!(*w, 0.25, epsilon = EPS);
        }
        assert!(multi_depol_op(0.5, &b, &[]).is_err());
    }

    #[test]
    fn joint_depolarization_matches_product_form() {
        let b = BasisLabel::new(vec![
            crate::ghz::Factor::Ghz(3),
            crate::ghz::Factor::Comp(2),
        ])
        .unwrap();
        let p = 0.37;
        let got = multi_depol_op(p, &b, &[1, 4]).unwrap().to_dense();
        let dd = depol_op(&b, 1)
            .unwrap()
            .compose(&depol_op(&b, 4).unwrap())
            .unwrap()
            .to_dense();
        for (r, row) in got.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                let id = if r == c { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(*v, (1.0 - p) * id + p * dd[r][c], epsilon = EPS);
            }
        }
    }

    #[test]
    fn single_qubit_decoherence_keeps_werner_shape() {
        let f = 0.93;
        let g = decoherence_prob(0.3, 1.0).unwrap();
        let b = BasisLabel::ghz(2);
        let op = depol_op(&b, 1).unwrap().blend_with_identity(g).unwrap();
        let out = op.apply(&werner_vector(f).unwrap()).unwrap();
        let expect = werner_vector((1.0 - g) * f + g / 4.0).unwrap();
        for (a, e) in out.weights().iter().zip(expect.weights()) {
            assert_abs_diff_eq!(a, e, epsilon = EPS);
        }
    }
}
