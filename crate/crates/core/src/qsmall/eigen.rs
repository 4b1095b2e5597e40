//! Ground states by restarted Lanczos, full spectra by sector-wise dense
//! diagonalization, and Boltzmann averages.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::pauli::PauliSum;
use super::state::PureState;
use crate::error::{Error, Result};

pub const MAX_ITERATIVE_QUBITS: usize = 16;
pub const MAX_DENSE_QUBITS: usize = 12;

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    pub krylov_dim: usize,
    pub max_restarts: usize,
    /// Stop when `‖Hv − θv‖ ≤ tol · max(1, |θ|)`.
    pub tol: f64,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            krylov_dim: 60,
            max_restarts: 200,
            tol: 1e-9,
            seed: 0x5eed,
        }
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Lowest eigenpair of a Pauli sum by explicitly restarted Lanczos with
/// full reorthogonalization.
pub fn lowest_eigenpair(op: &PauliSum, opts: &LanczosOptions) -> Result<(f64, PureState)> {
    let dim = op.dim();
    let n = op.n_qubits();
    if dim <= 64 {
        let eig = SymmetricEigen::new(op.to_dense());
        let (k, &e) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty spectrum");
        let v = eig.eigenvectors.column(k).iter().copied().collect();
        return Ok((e, PureState::normalized(n, v)?));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, 0.0))
        .collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let m = opts.krylov_dim.min(dim);
    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_restarts {
        let mut basis: Vec<Vec<Complex64>> = vec![v.clone()];
        let mut alpha = Vec::with_capacity(m);
        let mut beta: Vec<f64> = Vec::with_capacity(m);
        for j in 0..m {
            op.apply(&basis[j], &mut w);
            let a = dot(&basis[j], &w).re;
            alpha.push(a);
            // two passes of classical Gram-Schmidt
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(q, &w);
                    w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
                }
            }
            let b = norm(&w);
            if j + 1 == m || b < 1e-12 {
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
        }
        let k = alpha.len();
        let mut t = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alpha[i];
            if i + 1 < k {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let (idx, &theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty tridiagonal");
        let y = eig.eigenvectors.column(idx);
        let mut ritz = vec![Complex64::new(0.0, 0.0); dim];
        for (c, q) in y.iter().zip(&basis) {
            ritz.iter_mut().zip(q).for_each(|(r, x)| *r += x * *c);
        }
        let nr = norm(&ritz);
        ritz.iter_mut().for_each(|x| *x /= nr);
        op.apply(&ritz, &mut w);
        residual = w
            .iter()
            .zip(&ritz)
            .map(|(hx, x)| (hx - x * theta).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if residual <= opts.tol * theta.abs().max(1.0) {
            let energy = dot(&ritz, &w).re;
            return Ok((energy, PureState::normalized(n, ritz)?));
        }
        v = ritz;
    }
    Err(Error::NotConverged {
        what: "lanczos",
        iterations: opts.max_restarts,
        residual,
    })
}

/// Ground energy and a ground vector of `op` (n ≤ 16).
pub fn ground_state_of(op: &PauliSum) -> Result<(f64, PureState)> {
    if op.n_qubits() > MAX_ITERATIVE_QUBITS {
        return Err(Error::invalid(format!(
            "{} qubits exceeds iterative cap {MAX_ITERATIVE_QUBITS}",
            op.n_qubits()
        )));
    }
    lowest_eigenpair(op, &LanczosOptions::default())
}

/// Sorted eigenvalues of a Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
}

impl Spectrum {
    pub fn new(mut eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() || eigenvalues.iter().any(|e| !e.is_finite()) {
            return Err(Error::invalid("spectrum must be nonempty and finite"));
        }
        eigenvalues.sort_by(f64::total_cmp);
        Ok(Spectrum { eigenvalues })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    /// Boltzmann average `Σ E e^{-E/T} / Σ e^{-E/T}` with a shifted
    /// exponent; `k_B = 1`.
    pub fn thermal_energy(&self, temperature: f64) -> Result<f64> {
        if !(temperature > 0.0) {
            return Err(Error::invalid(
                "temperature must be positive; use the ground energy at T = 0",
            ));
        }
        let e0 = self.ground_energy();
        let (mut num, mut den) = (0.0, 0.0);
        for &e in &self.eigenvalues {
            let w = (-(e - e0) / temperature).exp();
            num += (e - e0) * w;
            den += w;
        }
        Ok(e0 + num / den)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "index,energy")?;
        for (i, e) in self.eigenvalues.iter().enumerate() {
            writeln!(out, "{i},{e:.12e}")?;
        }
        Ok(())
    }
}

pub fn thermal_energy(spectrum: &Spectrum, temperature: f64) -> Result<f64> {
    spectrum.thermal_energy(temperature)
}

fn sector_eigenvalues(m: DMatrix<Complex64>) -> Vec<f64> {
    if m.iter().all(|z| z.im == 0.0) {
        let re = m.map(|z| z.re);
        re.symmetric_eigenvalues().iter().copied().collect()
    } else {
        m.symmetric_eigenvalues().iter().copied().collect()
    }
}

/// All `2^n` eigenvalues (n ≤ 12), diagonalizing each basis sector
/// separately.
pub fn spectrum_of(op: &PauliSum) -> Result<Spectrum> {
    if op.n_qubits() > MAX_DENSE_QUBITS {
        return Err(Error::invalid(format!(
            "{} qubits exceeds dense cap {MAX_DENSE_QUBITS}",
            op.n_qubits()
        )));
    }
    let values: Vec<f64> = op
        .basis_sectors()
        .par_iter()
        .map(|sector| sector_eigenvalues(op.sector_matrix(sector)))
        .collect::<Vec<_>>()
        .concat();
    Spectrum::new(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeSpec;
    use crate::models::{instantiate, PauliAxis, SpinModel, TermList};
    use crate::qsmall::pauli::PauliString;

    fn dense_eigenvalues(op: &PauliSum) -> Vec<f64> {
        let mut v: Vec<f64> = op.to_dense().symmetric_eigenvalues().iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn single_qubit_field() {
        let mut op = PauliSum::new(1);
        op.push(0.7, PauliString::single(0, PauliAxis::Z)).unwrap();
        assert_eq!(spectrum_of(&op).unwrap().eigenvalues(), &[-0.7, 0.7]);
    }

    #[test]
    fn two_site_ring_spectra() {
        // Ising N=2 ring: both bonds join sites 0 and 1.
        let b = 0.6f64;
        let mut t = TermList::new(2, 2);
        t.push_pair(0, 1, PauliAxis::X, 2.0);
        t.push_field(0, PauliAxis::Z, b);
        t.push_field(1, PauliAxis::Z, b);
        let s = spectrum_of(&PauliSum::from_terms(&t).unwrap()).unwrap();
        let r = 2.0 * (1.0 + b * b).sqrt();
        let expect = [-r, -2.0, 2.0, r];
        for (a, e) in s.eigenvalues().iter().zip(expect) {
            assert!((a - e).abs() < 1e-12);
        }
        let mut h = TermList::new(2, 2);
        for a in PauliAxis::ALL {
            h.push_pair(0, 1, a, 2.0);
        }
        let s = spectrum_of(&PauliSum::from_terms(&h).unwrap()).unwrap();
        for (a, e) in s.eigenvalues().iter().zip([-6.0, 2.0, 2.0, 2.0]) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn sector_spectrum_matches_dense() {
        for model in [SpinModel::heisenberg(), SpinModel::ising(0.8), SpinModel::xx(0.3)] {
            let op = PauliSum::from_terms(&instantiate(&model, &LatticeSpec::chain(7).unwrap())).unwrap();
            let s = spectrum_of(&op).unwrap();
            let d = dense_eigenvalues(&op);
            for (a, b) in s.eigenvalues().iter().zip(&d) {
                assert!((a - b).abs() < 1e-10);
            }
            assert!(s.trace().abs() < 1e-8 * 128.0);
        }
    }

    #[test]
    fn heisenberg_ring_of_four() {
        // oracle: dense diagonalization; -8 = 4 × (-2) in S·S units
        let op = PauliSum::from_terms(&instantiate(&SpinModel::heisenberg(), &LatticeSpec::chain(4).unwrap()))
            .unwrap();
        let d = dense_eigenvalues(&op);
        assert!((d[0] + 8.0).abs() < 1e-12);
        let (e, _) = ground_state_of(&op).unwrap();
        assert!((e - d[0]).abs() < 1e-10);
    }

    #[test]
    fn lanczos_matches_dense_and_returns_eigenvector() {
        for model in [SpinModel::heisenberg(), SpinModel::ising(1.0), SpinModel::xx(0.5)] {
            let op = PauliSum::from_terms(&instantiate(&model, &LatticeSpec::chain(10).unwrap())).unwrap();
            let exact = spectrum_of(&op).unwrap().ground_energy();
            let (e, psi) = ground_state_of(&op).unwrap();
            assert!((e - exact).abs() <= 1e-10 * exact.abs(), "{model:?}: {e} vs {exact}");
            assert!((op.expectation(psi.amplitudes()) - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn ising_zero_field_ground() {
        let op = PauliSum::from_terms(&instantiate(&SpinModel::ising(0.0), &LatticeSpec::chain(6).unwrap()))
            .unwrap();
        let (e, _) = ground_state_of(&op).unwrap();
        assert!((e / 6.0 + 1.0).abs() < 1e-10);
    }

    #[test]
    fn thermal_limits() {
        let s = Spectrum::new(vec![-1.0, 1.0]).unwrap();
        assert!((s.thermal_energy(1.0).unwrap() + 1f64.tanh()).abs() < 1e-15);
        assert!((s.thermal_energy(1e-3).unwrap() + 1.0).abs() < 1e-12);
        assert!(s.thermal_energy(1e9).unwrap().abs() < 1e-8);
        assert!(s.thermal_energy(0.0).is_err());
        assert!(s.thermal_energy(-1.0).is_err());
    }

    #[test]
    fn size_guards() {
        let op = PauliSum::new(13);
        assert!(spectrum_of(&op).is_err());
        assert!(ground_state_of(&PauliSum::new(17)).is_err());
    }
}
