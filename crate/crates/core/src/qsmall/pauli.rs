//! Pauli strings on up to 64 qubits and real-weighted sums of them.
//!
//! Basis ordering: site 0 is the least significant bit of the basis index.
//! A string is stored as X/Z bit masks; `Y = i X Z`, so acting on `|i⟩`
//! gives `i^{#Y} (-1)^{popcount(i & z)} |i ^ x⟩`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::{PauliAxis, TermList};

const PARALLEL_DIM: usize = 1 << 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    x_mask: u64,
    z_mask: u64,
}

impl PauliString {
    pub fn identity() -> Self {
        PauliString {
            x_mask: 0,
            z_mask: 0,
        }
    }

    /// Product of single-site factors; a site may appear only once.
    pub fn new(factors: &[(usize, PauliAxis)]) -> Result<Self> {
        let mut s = PauliString::identity();
        for &(site, axis) in factors {
            if site >= 64 {
                return Err(Error::invalid(format!("site {site} out of range")));
            }
            let bit = 1u64 << site;
            if (s.x_mask | s.z_mask) & bit != 0 {
                return Err(Error::invalid(format!("site {site} repeated in one term")));
            }
            match axis {
                PauliAxis::X => s.x_mask |= bit,
                PauliAxis::Y => {
                    s.x_mask |= bit;
                    s.z_mask |= bit;
                }
                PauliAxis::Z => s.z_mask |= bit,
            }
        }
        Ok(s)
    }

    pub fn single(site: usize, axis: PauliAxis) -> Self {
        PauliString::new(&[(site, axis)]).expect("single factor is always valid")
    }

    pub fn x_mask(&self) -> u64 {
        self.x_mask
    }

    pub fn z_mask(&self) -> u64 {
        self.z_mask
    }

    pub fn support(&self) -> u64 {
        self.x_mask | self.z_mask
    }

    fn y_count(&self) -> u32 {
        (self.x_mask & self.z_mask).count_ones()
    }

    /// True when every matrix element is real (even number of Y factors).
    pub fn is_real(&self) -> bool {
        self.y_count() % 2 == 0
    }

    /// `P|i⟩ = phase |j⟩`; returns `(j, phase)`.
    #[inline]
    pub fn act(&self, i: usize) -> (usize, Complex64) {
        let sign = if ((i as u64) & self.z_mask).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        let phase = match self.y_count() % 4 {
            0 => Complex64::new(sign, 0.0),
            1 => Complex64::new(0.0, sign),
            2 => Complex64::new(-sign, 0.0),
            _ => Complex64::new(0.0, -sign),
        };
        (i ^ self.x_mask as usize, phase)
    }

    /// `⟨ψ|P|ψ⟩` for a normalized amplitude vector.
    pub fn expectation(&self, amps: &[Complex64]) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, a) in amps.iter().enumerate() {
            let (j, ph) = self.act(i);
            acc += amps[j].conj() * ph * a;
        }
        acc.re
    }

    pub fn to_dense(&self, n: usize) -> DMatrix<Complex64> {
        let dim = 1usize << n;
        let mut m = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            let (j, ph) = self.act(i);
            m[(j, i)] = ph;
        }
        m
    }
}

/// `Σ_t w_t P_t` with real weights, applied matrix-free.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n: usize,
    terms: Vec<(f64, PauliString)>,
}

impl PauliSum {
    pub fn new(n: usize) -> Self {
        PauliSum {
            n,
            terms: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn push(&mut self, weight: f64, p: PauliString) -> Result<()> {
        if p.support() >> self.n != 0 {
            return Err(Error::invalid("Pauli string acts outside the register"));
        }
        self.terms.push((weight, p));
        Ok(())
    }

    pub fn from_terms(terms: &TermList) -> Result<Self> {
        let mut op = PauliSum::new(terms.n_sites);
        for t in &terms.pair_terms {
            let p = PauliString::new(&[(t.sites.0, t.axis), (t.sites.1, t.axis)])?;
            op.push(t.weight, p)?;
        }
        for t in &terms.field_terms {
            op.push(t.weight, PauliString::new(&[(t.site, t.axis)])?)?;
        }
        Ok(op)
    }

    pub fn is_real(&self) -> bool {
        self.terms.iter().all(|(_, p)| p.is_real())
    }

    /// Terms grouped by X mask; each group moves `|i⟩` to `|i ^ x⟩`.
    fn groups(&self) -> Vec<(u64, Vec<(f64, PauliString)>)> {
        let mut map: BTreeMap<u64, Vec<(f64, PauliString)>> = BTreeMap::new();
        for &(w, p) in &self.terms {
            map.entry(p.x_mask).or_default().push((w, p));
        }
        map.into_iter().collect()
    }

    /// Matrix element `⟨i ^ x|H|i⟩` summed over a group.
    #[inline]
    fn group_element(group: &[(f64, PauliString)], i: usize) -> Complex64 {
        group
            .iter()
            .map(|(w, p)| p.act(i).1 * *w)
            .fold(Complex64::new(0.0, 0.0), |a, b| a + b)
    }

    /// `out = H input`.
    pub fn apply(&self, input: &[Complex64], out: &mut [Complex64]) {
        assert_eq!(input.len(), self.dim());
        assert_eq!(out.len(), self.dim());
        let groups = self.groups();
        // Gather form: out[j] = Σ_groups ⟨j|H|j^x⟩ input[j^x].
        let row = |j: usize| -> Complex64 {
            let mut acc = Complex64::new(0.0, 0.0);
            for (x, group) in &groups {
                let i = j ^ *x as usize;
                acc += Self::group_element(group, i) * input[i];
            }
            acc
        };
        if self.dim() >= PARALLEL_DIM {
            out.par_iter_mut().enumerate().for_each(|(j, o)| *o = row(j));
        } else {
            out.iter_mut().enumerate().for_each(|(j, o)| *o = row(j));
        }
    }

    pub fn expectation(&self, amps: &[Complex64]) -> f64 {
        self.terms
            .iter()
            .map(|(w, p)| w * p.expectation(amps))
            .sum()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for &(w, p) in &self.terms {
            for i in 0..dim {
                let (j, ph) = p.act(i);
                m[(j, i)] += ph * w;
            }
        }
        m
    }

    /// Connected components of the basis graph induced by nonzero
    /// off-diagonal matrix elements; `H` is block diagonal over them.
    pub fn basis_sectors(&self) -> Vec<Vec<usize>> {
        let dim = self.dim();
        let mut parent: Vec<usize> = (0..dim).collect();
        fn find(parent: &mut [usize], mut a: usize) -> usize {
            while parent[a] != a {
                parent[a] = parent[parent[a]];
                a = parent[a];
            }
            a
        }
        for (x, group) in self.groups() {
            if x == 0 {
                continue;
            }
            for i in 0..dim {
                if Self::group_element(&group, i).norm() > 1e-14 {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, i ^ x as usize));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let mut sectors: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..dim {
            let r = find(&mut parent, i);
            sectors.entry(r).or_default().push(i);
        }
        sectors.into_values().collect()
    }

    /// Dense block of `H` restricted to the given basis states.
    pub fn sector_matrix(&self, basis: &[usize]) -> DMatrix<Complex64> {
        let pos: BTreeMap<usize, usize> = basis.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let mut m = DMatrix::zeros(basis.len(), basis.len());
        for &(w, p) in &self.terms {
            for (col, &i) in basis.iter().enumerate() {
                let (j, ph) = p.act(i);
                if let Some(&row) = pos.get(&j) {
                    m[(row, col)] += ph * w;
                }
            }
        }
        m
    }
}
