//! Per-block constants: maximize `⟨L⟩ + Σ_j w_j (c_j + ⟨A_j⟩)²` over pure
//! states of a small register.
//!
//! The maximizer is a minorize-maximize eigen-iteration. Because
//! `(c + a)² ≥ (c + a₀)² + 2(c + a₀)(a − a₀)`, the top eigenvector of the
//! linearized operator `L + Σ_j 2 w_j (c_j + a_j) A_j` never lowers the
//! objective. Each run is seeded from structured states and Haar-random
//! states, and a projected-gradient ascent from the same starts serves as
//! an independent cross-check.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{triangle_incidence, BlockShape, LatticeKind};
use crate::models::{PauliAxis, SpinModel};
use crate::qsmall::{PauliString, PureState};

/// Largest register handled by the block optimizer.
pub const MAX_BLOCK_QUBITS: usize = 6;

type Factors = Vec<(usize, PauliAxis)>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearTerm {
    pub factors: Factors,
    pub coeff: f64,
}

/// `weight · (offset + ⟨factors⟩)²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadTerm {
    pub factors: Factors,
    pub offset: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockFunctional {
    pub n: usize,
    pub linear: Vec<LinearTerm>,
    pub quad: Vec<QuadTerm>,
}

impl BlockFunctional {
    pub fn new(n: usize) -> Self {
        BlockFunctional {
            n,
            linear: Vec::new(),
            quad: Vec::new(),
        }
    }

    pub fn add_linear(&mut self, factors: &[(usize, PauliAxis)], coeff: f64) {
        self.linear.push(LinearTerm {
            factors: factors.to_vec(),
            coeff,
        });
    }

    pub fn add_quad(&mut self, factors: &[(usize, PauliAxis)], offset: f64, weight: f64) {
        self.quad.push(QuadTerm {
            factors: factors.to_vec(),
            offset,
            weight,
        });
    }

    /// Total quad weight carried by `(site, axis)` as a single-site term.
    pub fn site_weight(&self, site: usize, axis: PauliAxis) -> f64 {
        self.quad
            .iter()
            .filter(|q| q.factors == [(site, axis)])
            .map(|q| q.weight)
            .sum()
    }

    pub fn value(&self, state: &PureState) -> Result<f64> {
        let mut v = 0.0;
        for t in &self.linear {
            v += t.coeff * state.expectation(&t.factors)?;
        }
        for q in &self.quad {
            let a = state.expectation(&q.factors)?;
            v += q.weight * (q.offset + a).powi(2);
        }
        Ok(v)
    }

    /// Same functional with block site `s` renamed to `perm[s]`.
    pub fn relabeled(&self, perm: &[usize]) -> BlockFunctional {
        let map = |f: &Factors| f.iter().map(|&(s, a)| (perm[s], a)).collect();
        BlockFunctional {
            n: self.n,
            linear: self
                .linear
                .iter()
                .map(|t| LinearTerm {
                    factors: map(&t.factors),
                    coeff: t.coeff,
                })
                .collect(),
            quad: self
                .quad
                .iter()
                .map(|q| QuadTerm {
                    factors: map(&q.factors),
                    offset: q.offset,
                    weight: q.weight,
                })
                .collect(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > MAX_BLOCK_QUBITS {
            return Err(Error::invalid(format!(
                "block of {} qubits outside 1..={MAX_BLOCK_QUBITS}",
                self.n
            )));
        }
        if let Some(q) = self.quad.iter().find(|q| !(q.weight >= 0.0)) {
            return Err(Error::invalid(format!("negative quad weight {}", q.weight)));
        }
        let sites = self
            .linear
            .iter()
            .flat_map(|t| &t.factors)
            .chain(self.quad.iter().flat_map(|q| &q.factors));
        if sites.clone().any(|&(s, _)| s >= self.n) {
            return Err(Error::invalid("term acts outside the block"));
        }
        Ok(())
    }
}

/// Functional of a block shape: internal pair terms and field terms enter
/// negated; each external bond adds weight 1/2 to the squared single-site
/// expectation of every pair axis at its site.
pub fn build_block_functional(model: &SpinModel, shape: &BlockShape) -> BlockFunctional {
    let mut f = BlockFunctional::new(shape.size());
    for &(i, j) in &shape.internal_bonds {
        for &a in model.pair_axes() {
            f.add_linear(&[(i, a), (j, a)], -1.0);
        }
    }
    if let Some(axis) = model.field_axis() {
        if model.field != 0.0 {
            for s in 0..shape.size() {
                f.add_linear(&[(s, axis)], -model.field);
            }
        }
    }
    for s in 0..shape.size() {
        let external = shape.boundary_total(s);
        if external > 0 {
            for &a in model.pair_axes() {
                f.add_quad(&[(s, a)], 0.0, external as f64 / 2.0);
            }
        }
    }
    f
}

/// Heisenberg functional for one- and two-site blocks of the triangular
/// lattice, with boundary bonds grouped by triangles.
///
/// A triangle touching only one block site contributes `a²/4` per axis to
/// that site; a triangle holding both sites of a pair contributes
/// `(1 + ⟨A_k A_l⟩)²/4` per axis.
pub fn triangular_block_functional(shape: &BlockShape) -> Result<BlockFunctional> {
    let inc = triangle_incidence(shape)?;
    let mut f = BlockFunctional::new(shape.size());
    for &(i, j) in &shape.internal_bonds {
        for a in PauliAxis::ALL {
            f.add_linear(&[(i, a), (j, a)], -1.0);
        }
    }
    if shape.size() == 2 && inc.shared > 0 {
        for a in PauliAxis::ALL {
            f.add_quad(&[(0, a), (1, a)], 1.0, inc.shared as f64 / 4.0);
        }
    }
    for (s, &count) in inc.exclusive_per_site.iter().enumerate() {
        for a in PauliAxis::ALL {
            f.add_quad(&[(s, a)], 0.0, count as f64 / 4.0);
        }
    }
    Ok(f)
}

/// `-XX - YY - ZZ + γ Σ (x² + y² + z²)` on two qubits.
pub fn heisenberg_pair_functional(gamma: f64) -> BlockFunctional {
    pair_functional(&PauliAxis::ALL, gamma)
}

/// `-XX - YY + γ Σ (x² + y²)` on two qubits.
pub fn xx_pair_functional(gamma: f64) -> BlockFunctional {
    pair_functional(&[PauliAxis::X, PauliAxis::Y], gamma)
}

fn pair_functional(axes: &[PauliAxis], gamma: f64) -> BlockFunctional {
    let mut f = BlockFunctional::new(2);
    for &a in axes {
        f.add_linear(&[(0, a), (1, a)], -1.0);
    }
    for s in 0..2 {
        for &a in axes {
            f.add_quad(&[(s, a)], 0.0, gamma);
        }
    }
    f
}

/// `-XX - YY - ZZ + ½ Σ_a (1 + ⟨A A⟩)² + Σ (single-site squares)`, the
/// two-site triangular functional.
pub fn lemma2b_functional() -> BlockFunctional {
    let mut f = BlockFunctional::new(2);
    for a in PauliAxis::ALL {
        f.add_linear(&[(0, a), (1, a)], -1.0);
        f.add_quad(&[(0, a), (1, a)], 1.0, 0.5);
    }
    for s in 0..2 {
        for a in PauliAxis::ALL {
            f.add_quad(&[(s, a)], 0.0, 1.0);
        }
    }
    f
}

/// Closed-form maximum `1 + 2γ + 1/(2γ)` of the Heisenberg pair functional
/// and the maximizing `α²` of `α|00⟩ + β|11⟩` (up to local unitaries).
pub fn lemma1_bound(gamma: f64) -> Result<(f64, f64)> {
    if !(gamma >= 0.5) {
        return Err(Error::invalid(format!("γ = {gamma} < 1/2")));
    }
    let c = 1.0 + 2.0 * gamma + 1.0 / (2.0 * gamma);
    let alpha_sq = (2.0 - (4.0 * gamma * gamma - 1.0).sqrt() / gamma) / 4.0;
    Ok((c, alpha_sq))
}

/// Closed-form maximum `1 + 2γ + 1/(8γ)` of the XX pair functional.
pub fn lemma2a_bound(gamma: f64) -> Result<f64> {
    if !(gamma >= 0.5) {
        return Err(Error::invalid(format!("γ = {gamma} < 1/2")));
    }
    Ok(1.0 + 2.0 * gamma + 1.0 / (8.0 * gamma))
}

pub const LEMMA2B_BOUND: f64 = 4.0;

#[derive(Debug, Clone, Serialize)]
pub struct LemmaCheck {
    pub analytic: f64,
    pub numeric: f64,
    /// Smallest single-site Bloch vector length of the numeric maximizer.
    pub min_bloch_length: f64,
}

/// Verify the two-site triangular bound of 4 numerically; fails when the
/// optimizer disagrees by more than `1e-6`.
pub fn lemma2b_check(opts: &MaximizeOptions) -> Result<LemmaCheck> {
    let res = maximize_functional(&lemma2b_functional(), opts)?;
    let min_bloch_length = (0..2)
        .map(|s| {
            res.argmax_state
                .bloch(s)
                .map(|b| b.iter().map(|x| x * x).sum::<f64>().sqrt())
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if (res.c - LEMMA2B_BOUND).abs() > 1e-6 {
        return Err(Error::invalid(format!(
            "numeric maximum {} disagrees with the bound {LEMMA2B_BOUND}",
            res.c
        )));
    }
    Ok(LemmaCheck {
        analytic: LEMMA2B_BOUND,
        numeric: res.c,
        min_bloch_length,
    })
}

/// One row of the analytic-versus-numeric lemma table.
#[derive(Debug, Clone, Serialize)]
pub struct LemmaRow {
    pub lemma: &'static str,
    pub gamma: Option<f64>,
    pub analytic: f64,
    pub numeric: f64,
}

pub fn verify_lemmas(gammas: &[f64], opts: &MaximizeOptions) -> Result<Vec<LemmaRow>> {
    let mut rows = Vec::new();
    for &g in gammas {
        let (c, _) = lemma1_bound(g)?;
        rows.push(LemmaRow {
            lemma: "1",
            gamma: Some(g),
            analytic: c,
            numeric: maximize_functional(&heisenberg_pair_functional(g), opts)?.c,
        });
    }
    for &g in gammas {
        rows.push(LemmaRow {
            lemma: "2a",
            gamma: Some(g),
            analytic: lemma2a_bound(g)?,
            numeric: maximize_functional(&xx_pair_functional(g), opts)?.c,
        });
    }
    let check = lemma2b_check(opts)?;
    rows.push(LemmaRow {
        lemma: "2b",
        gamma: None,
        analytic: check.analytic,
        numeric: check.numeric,
    });
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct MaximizeOptions {
    /// Haar-random starts in addition to the structured ones.
    pub restarts: usize,
    /// Stop a run once the objective gains less than this per step.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Run projected-gradient ascent from the same starts.
    pub cross_check: bool,
    /// Extra starting states, e.g. maximizers from a neighboring field value.
    pub warm_starts: Vec<PureState>,
}

impl Default for MaximizeOptions {
    fn default() -> Self {
        MaximizeOptions {
            restarts: 50,
            tol: 1e-10,
            max_iter: 20_000,
            seed: 2007,
            cross_check: true,
            warm_starts: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BlockMaxResult {
    /// Best objective found.
    pub c: f64,
    pub argmax_state: PureState,
    pub restarts_used: usize,
    pub converged: bool,
    /// Best value from projected-gradient ascent, when requested.
    pub cross_check: Option<f64>,
    /// False if any eigen-iteration step lowered the objective.
    pub monotone: bool,
}

/// Dense form of a functional for repeated evaluation.
struct Compiled {
    n: usize,
    linear: DMatrix<Complex64>,
    quad: Vec<(PauliString, f64, f64)>,
    real: bool,
}

impl Compiled {
    fn new(f: &BlockFunctional) -> Result<Self> {
        f.validate()?;
        let dim = 1usize << f.n;
        let mut linear = DMatrix::zeros(dim, dim);
        let mut real = true;
        for t in &f.linear {
            let p = PauliString::new(&t.factors)?;
            real &= p.is_real();
            linear += p.to_dense(f.n) * Complex64::new(t.coeff, 0.0);
        }
        let quad = f
            .quad
            .iter()
            .map(|q| {
                let p = PauliString::new(&q.factors)?;
                real &= p.is_real();
                Ok((p, q.offset, q.weight))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Compiled {
            n: f.n,
            linear,
            quad,
            real,
        })
    }

    fn dim(&self) -> usize {
        1 << self.n
    }

    fn quad_expectations(&self, psi: &[Complex64]) -> Vec<f64> {
        self.quad.iter().map(|(p, _, _)| p.expectation(psi)).collect()
    }

    fn value(&self, psi: &DVector<Complex64>) -> f64 {
        let lin = psi.dotc(&(&self.linear * psi)).re;
        let a = self.quad_expectations(psi.as_slice());
        lin + self
            .quad
            .iter()
            .zip(&a)
            .map(|((_, c, w), a)| w * (c + a).powi(2))
            .sum::<f64>()
    }

    /// `L + Σ_j 2 w_j (c_j + a_j) A_j` at the current expectations.
    fn linearized(&self, psi: &DVector<Complex64>) -> DMatrix<Complex64> {
        let a = self.quad_expectations(psi.as_slice());
        let mut m = self.linear.clone();
        for ((p, c, w), a) in self.quad.iter().zip(&a) {
            let coeff = 2.0 * w * (c + a);
            if coeff == 0.0 {
                continue;
            }
            for i in 0..self.dim() {
                let (j, ph) = p.act(i);
                m[(j, i)] += ph * coeff;
            }
        }
        m
    }

    fn top_eigenvector(&self, m: DMatrix<Complex64>) -> DVector<Complex64> {
        if self.real {
            let eig = SymmetricEigen::new(m.map(|z| z.re));
            let k = eig.eigenvalues.imax();
            eig.eigenvectors.column(k).map(|x| Complex64::new(x, 0.0))
        } else {
            let eig = SymmetricEigen::new(m);
            let k = eig.eigenvalues.imax();
            eig.eigenvectors.column(k).into_owned()
        }
    }
}

struct Run {
    value: f64,
    state: DVector<Complex64>,
    converged: bool,
    monotone: bool,
}

fn mm_run(c: &Compiled, start: DVector<Complex64>, tol: f64, max_iter: usize) -> Run {
    let mut psi = start;
    let mut f = c.value(&psi);
    let mut monotone = true;
    for _ in 0..max_iter {
        let next = c.top_eigenvector(c.linearized(&psi));
        let f_next = c.value(&next);
        if f_next < f - 1e-12 * (1.0 + f.abs()) {
            monotone = false;
        }
        let gain = f_next - f;
        if f_next >= f {
            psi = next;
            f = f_next;
        }
        if gain < tol {
            return Run {
                value: f,
                state: psi,
                converged: true,
                monotone,
            };
        }
    }
    Run {
        value: f,
        state: psi,
        converged: false,
        monotone,
    }
}

/// Riemannian gradient ascent on the unit sphere with backtracking.
fn gradient_run(c: &Compiled, start: DVector<Complex64>, max_iter: usize) -> f64 {
    let mut psi = start;
    let mut f = c.value(&psi);
    let mut step = 0.1;
    for _ in 0..max_iter {
        let m = c.linearized(&psi);
        let mpsi = &m * &psi;
        let mean = psi.dotc(&mpsi);
        let grad = mpsi - &psi * mean;
        if grad.norm() < 1e-9 {
            break;
        }
        loop {
            let cand = (&psi + &grad * Complex64::new(step, 0.0)).normalize();
            let fc = c.value(&cand);
            if fc > f {
                psi = cand;
                f = fc;
                step *= 1.5;
                break;
            }
            step *= 0.5;
            if step < 1e-14 {
                return f;
            }
        }
    }
    f
}

fn structured_starts(n: usize) -> Vec<PureState> {
    let dim = 1usize << n;
    let mut starts: Vec<PureState> = if dim <= 16 {
        (0..dim).map(|i| PureState::basis(n, i)).collect()
    } else {
        let alt = (0..n).filter(|q| q % 2 == 1).fold(0, |acc, q| acc | 1 << q);
        vec![
            PureState::basis(n, 0),
            PureState::basis(n, dim - 1),
            PureState::basis(n, alt),
            PureState::basis(n, (dim - 1) ^ alt),
        ]
    };
    // singlets on consecutive pairs; a leftover qubit stays in |0⟩
    let singlet = PureState::from_real(2, &[0.0, 1.0, -1.0, 0.0]).expect("valid");
    let zero = PureState::basis(1, 0);
    let mut blocks: Vec<(Vec<usize>, &PureState)> =
        (0..n / 2).map(|p| (vec![2 * p, 2 * p + 1], &singlet)).collect();
    if n % 2 == 1 {
        blocks.push((vec![n - 1], &zero));
    }
    if n >= 2 {
        starts.push(PureState::tensor_product(n, &blocks).expect("valid partition"));
    }
    starts
}

/// Maximize a block functional over pure states.
pub fn maximize_functional(f: &BlockFunctional, opts: &MaximizeOptions) -> Result<BlockMaxResult> {
    let compiled = Compiled::new(f)?;
    let n = f.n;
    let mut starts = structured_starts(n);
    if f.linear.iter().any(|t| t.coeff != 0.0) {
        starts.push(PureState::normalized(n, compiled.top_eigenvector(compiled.linear.clone()).iter().copied().collect())?);
    }
    for w in &opts.warm_starts {
        if w.n_qubits() != n {
            return Err(Error::invalid("warm start has the wrong qubit count"));
        }
        starts.push(w.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    starts.extend((0..opts.restarts).map(|_| PureState::haar_random(n, &mut rng)));
    let starts: Vec<DVector<Complex64>> = starts.iter().map(PureState::to_dvector).collect();

    let runs: Vec<Run> = starts
        .par_iter()
        .map(|s| mm_run(&compiled, s.clone(), opts.tol, opts.max_iter))
        .collect();
    let cross_check = opts.cross_check.then(|| {
        starts
            .par_iter()
            .map(|s| gradient_run(&compiled, s.clone(), 2000))
            .reduce(|| f64::NEG_INFINITY, f64::max)
    });
    let best = runs
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| a.value.total_cmp(&b.value).then(j.cmp(i)))
        .map(|(_, r)| r)
        .expect("at least one start");
    Ok(BlockMaxResult {
        c: best.value,
        argmax_state: PureState::normalized(n, best.state.iter().copied().collect())?,
        restarts_used: starts.len(),
        converged: runs.iter().all(|r| r.converged),
        cross_check,
        monotone: runs.iter().all(|r| r.monotone),
    })
}

/// Objective trace of a single eigen-iteration run (for diagnostics).
pub fn mm_trace(f: &BlockFunctional, start: &PureState, steps: usize) -> Result<Vec<f64>> {
    let c = Compiled::new(f)?;
    let mut psi = start.to_dvector();
    let mut trace = vec![c.value(&psi)];
    for _ in 0..steps {
        psi = c.top_eigenvector(c.linearized(&psi));
        trace.push(c.value(&psi));
    }
    Ok(trace)
}

/// Convenience: the block constant of a shape under a model.
pub fn block_constant(model: &SpinModel, shape: &BlockShape, opts: &MaximizeOptions) -> Result<BlockMaxResult> {
    let f = if shape.lattice == LatticeKind::Triangular2d && model.kind == crate::models::ModelKind::Heisenberg {
        triangular_block_functional(shape)?
    } else {
        build_block_functional(model, shape)
    };
    maximize_functional(&f, opts)
}
