use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::pauli::PauliString;
use crate::error::{Error, Result};
use crate::models::PauliAxis;

const NORM_TOL: f64 = 1e-12;

/// Normalized pure state on `n` qubits (site 0 = least significant bit).
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n: usize,
    amps: Vec<Complex64>,
}

impl PureState {
    /// Wrap amplitudes that are already normalized.
    pub fn from_amplitudes(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1 << n {
            return Err(Error::invalid(format!(
                "expected {} amplitudes, got {}",
                1usize << n,
                amps.len()
            )));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::invalid(format!("state norm² {norm} is not 1")));
        }
        Ok(PureState { n, amps })
    }

    /// Normalize arbitrary nonzero amplitudes.
    pub fn normalized(n: usize, mut amps: Vec<Complex64>) -> Result<Self> {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::invalid("cannot normalize a zero vector"));
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Self::from_amplitudes(n, amps)
    }

    pub fn from_real(n: usize, amps: &[f64]) -> Result<Self> {
        Self::normalized(n, amps.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    pub fn basis(n: usize, index: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[index] = Complex64::new(1.0, 0.0);
        PureState { n, amps }
    }

    /// Haar-random state from normalized complex Gaussian amplitudes.
    pub fn haar_random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        loop {
            let amps: Vec<Complex64> = (0..1usize << n)
                .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            if let Ok(s) = Self::normalized(n, amps) {
                return s;
            }
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn to_dvector(&self) -> DVector<Complex64> {
        DVector::from_column_slice(&self.amps)
    }

    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `⟨ψ| A_{s1} A_{s2} ... |ψ⟩` for a product of single-site Paulis.
    pub fn expectation(&self, term: &[(usize, PauliAxis)]) -> Result<f64> {
        if let Some(&(s, _)) = term.iter().find(|(s, _)| *s >= self.n) {
            return Err(Error::invalid(format!("site {s} outside {} qubits", self.n)));
        }
        Ok(PauliString::new(term)?.expectation(&self.amps))
    }

    /// Bloch vector `(⟨X⟩, ⟨Y⟩, ⟨Z⟩)` of one qubit.
    pub fn bloch(&self, site: usize) -> Result<[f64; 3]> {
        Ok([
            self.expectation(&[(site, PauliAxis::X)])?,
            self.expectation(&[(site, PauliAxis::Y)])?,
            self.expectation(&[(site, PauliAxis::Z)])?,
        ])
    }

    /// Apply a unitary product of single-qubit Paulis.
    pub fn apply_pauli(&self, p: &PauliString) -> PureState {
        let mut amps = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (i, a) in self.amps.iter().enumerate() {
            let (j, ph) = p.act(i);
            amps[j] += ph * a;
        }
        PureState { n: self.n, amps }
    }

    /// Complex conjugate in the computational basis (transposes `|ψ⟩⟨ψ|`).
    pub fn conjugate(&self) -> PureState {
        PureState {
            n: self.n,
            amps: self.amps.iter().map(|a| a.conj()).collect(),
        }
    }

    /// Relabel qubits: qubit `q` of `self` becomes qubit `perm[q]`.
    pub fn permute_qubits(&self, perm: &[usize]) -> Result<PureState> {
        let mut seen = vec![false; self.n];
        if perm.len() != self.n || perm.iter().any(|&p| p >= self.n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::invalid("not a permutation of the register"));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (i, a) in self.amps.iter().enumerate() {
            let j = (0..self.n).fold(0, |acc, q| acc | ((i >> q) & 1) << perm[q]);
            amps[j] = *a;
        }
        Ok(PureState { n: self.n, amps })
    }

    /// Apply a 2×2 unitary `[[a, b], [c, d]]` to one qubit.
    pub fn apply_single(&self, site: usize, u: [[Complex64; 2]; 2]) -> PureState {
        let mut amps = self.amps.clone();
        let bit = 1 << site;
        for i in 0..amps.len() {
            if i & bit == 0 {
                let (a0, a1) = (self.amps[i], self.amps[i | bit]);
                amps[i] = u[0][0] * a0 + u[0][1] * a1;
                amps[i | bit] = u[1][0] * a0 + u[1][1] * a1;
            }
        }
        PureState { n: self.n, amps }
    }

    /// Tensor product of block states placed on the given qubits of an
    /// `n`-qubit register. Blocks must cover every qubit exactly once.
    pub fn tensor_product(n: usize, blocks: &[(Vec<usize>, &PureState)]) -> Result<PureState> {
        let mut owner = vec![None; n];
        for (b, (sites, state)) in blocks.iter().enumerate() {
            if sites.len() != state.n {
                return Err(Error::invalid("block site count does not match its state"));
            }
            for &s in sites {
                if s >= n || owner[s].replace(b).is_some() {
                    return Err(Error::invalid("blocks must partition the register"));
                }
            }
        }
        if owner.iter().any(Option::is_none) {
            return Err(Error::invalid("blocks must partition the register"));
        }
        let amps = (0..1usize << n)
            .map(|i| {
                blocks
                    .iter()
                    .map(|(sites, state)| {
                        let local = sites
                            .iter()
                            .enumerate()
                            .fold(0, |acc, (q, &s)| acc | ((i >> s) & 1) << q);
                        state.amps[local]
                    })
                    .product()
            })
            .collect();
        Self::normalized(n, amps)
    }
}
