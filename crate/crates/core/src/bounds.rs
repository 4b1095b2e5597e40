//! Per-bond energy thresholds `E_kp` assembled from block constants, the
//! triangular-lattice estimator, product-state energies and the chain
//! saturation witness.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::blockopt::{
    build_block_functional, lemma1_bound, maximize_functional, triangular_block_functional,
    BlockFunctional, MaximizeOptions, LEMMA2B_BOUND,
};
use crate::error::{Error, Result};
use crate::lattice::{enumerate_block_shapes, BlockShape, LatticeKind, LatticeSpec, Offset, MAX_BLOCK_SIZE};
use crate::models::{ModelKind, PauliAxis, SpinModel, TermList};
use crate::qsmall::PureState;

/// How a block constant was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantSource {
    /// Closed form for a two-site block with equal isotropic weights.
    PairClosedForm,
    /// Closed form for a single site with squares only.
    SiteClosedForm,
    Numeric,
}

#[derive(Debug, Clone, Serialize)]
pub struct ShapeConstant {
    pub shape: String,
    pub size: usize,
    pub c: f64,
    pub ratio: f64,
    pub source: ConstantSource,
    pub converged: bool,
    #[serde(skip)]
    pub argmax: Option<PureState>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdResult {
    pub model: ModelKind,
    pub lattice: LatticeKind,
    pub k: usize,
    pub field: Option<f64>,
    pub e_kp: f64,
    pub best_shape: String,
    pub per_shape_ratios: BTreeMap<String, f64>,
    pub shapes: Vec<ShapeConstant>,
    /// False when some shape's optimizer hit its iteration cap.
    pub converged: bool,
}

fn check_k(k: usize) -> Result<()> {
    if k > MAX_BLOCK_SIZE {
        return Err(Error::BlockSizeCap(k));
    }
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    Ok(())
}

fn field_of(model: &SpinModel) -> Option<f64> {
    model.field_axis().map(|_| model.field)
}

/// Closed forms that avoid the optimizer: a lone site whose functional is
/// a sum of squares, and a two-site isotropic Heisenberg block.
fn closed_form(model: &SpinModel, f: &BlockFunctional) -> Option<(f64, ConstantSource)> {
    if f.n == 1 && f.linear.is_empty() && f.quad.iter().all(|q| q.offset == 0.0) {
        let best = PauliAxis::ALL
            .iter()
            .map(|&a| f.site_weight(0, a))
            .fold(0.0, f64::max);
        return Some((best, ConstantSource::SiteClosedForm));
    }
    if f.n == 2 && model.kind == ModelKind::Heisenberg && f.quad.iter().all(|q| q.offset == 0.0) {
        let gamma = f.site_weight(0, PauliAxis::X);
        let uniform = (0..2).all(|s| PauliAxis::ALL.iter().all(|&a| f.site_weight(s, a) == gamma));
        if uniform && f.quad.iter().all(|q| q.factors.len() == 1) {
            if let Ok((c, _)) = lemma1_bound(gamma) {
                return Some((c, ConstantSource::PairClosedForm));
            }
        }
    }
    None
}

fn shape_constant(
    model: &SpinModel,
    shape: &BlockShape,
    opts: &MaximizeOptions,
    warm: Option<&PureState>,
) -> Result<ShapeConstant> {
    let f = build_block_functional(model, shape);
    let (c, source, converged, argmax) = match closed_form(model, &f) {
        Some((c, source)) => (c, source, true, None),
        None => {
            let mut o = opts.clone();
            o.warm_starts.extend(warm.cloned());
            let r = maximize_functional(&f, &o)?;
            (r.c, ConstantSource::Numeric, r.converged, Some(r.argmax_state))
        }
    };
    Ok(ShapeConstant {
        shape: shape.canonical_id.clone(),
        size: shape.size(),
        c,
        ratio: c / shape.size() as f64,
        source,
        converged,
        argmax,
    })
}

/// `E_kp = −(2/z) · max_shape C_shape / |shape|` over connected shapes of
/// at most `k` sites. On the triangular lattice the triangle estimator is
/// used instead, which covers `k ≤ 2`.
pub fn energy_threshold(model: &SpinModel, lattice: LatticeKind, k: usize, opts: &MaximizeOptions) -> Result<ThresholdResult> {
    threshold_with_warm_start(model, lattice, k, opts, None)
}

/// As [`energy_threshold`], seeding each shape's optimizer with the
/// maximizer stored in `previous` (e.g. from a neighboring field value).
pub fn threshold_with_warm_start(
    model: &SpinModel,
    lattice: LatticeKind,
    k: usize,
    opts: &MaximizeOptions,
    previous: Option<&ThresholdResult>,
) -> Result<ThresholdResult> {
    check_k(k)?;
    if lattice == LatticeKind::Triangular2d {
        return triangular_threshold(model, k, opts);
    }
    let shapes = enumerate_block_shapes(lattice, k)?;
    let warm: BTreeMap<&str, &PureState> = previous
        .map(|p| {
            p.shapes
                .iter()
                .filter_map(|s| s.argmax.as_ref().map(|a| (s.shape.as_str(), a)))
                .collect()
        })
        .unwrap_or_default();
    let constants = shapes
        .par_iter()
        .map(|s| shape_constant(model, s, opts, warm.get(s.canonical_id.as_str()).copied()))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(model, lattice, k, 2.0 / lattice.coordination() as f64, constants))
}

fn assemble(model: &SpinModel, lattice: LatticeKind, k: usize, scale: f64, shapes: Vec<ShapeConstant>) -> ThresholdResult {
    // first shape wins ties, so the smallest block is reported
    let best = shapes
        .iter()
        .fold(None::<&ShapeConstant>, |acc, s| match acc {
            Some(b) if b.ratio >= s.ratio => Some(b),
            _ => Some(s),
        })
        .expect("at least one shape");
    ThresholdResult {
        model: model.kind,
        lattice,
        k,
        field: field_of(model),
        e_kp: -scale * best.ratio,
        best_shape: best.shape.clone(),
        per_shape_ratios: shapes.iter().map(|s| (s.shape.clone(), s.ratio)).collect(),
        converged: shapes.iter().all(|s| s.converged),
        shapes,
    }
}

fn triangular_threshold(model: &SpinModel, k: usize, opts: &MaximizeOptions) -> Result<ThresholdResult> {
    if model.kind != ModelKind::Heisenberg {
        return Err(Error::unsupported("the triangular estimator covers the Heisenberg model only"));
    }
    if k > 2 {
        return Err(Error::unsupported("triangular thresholds are available for k ≤ 2 only"));
    }
    let shapes = enumerate_block_shapes(LatticeKind::Triangular2d, k)?;
    let constants = shapes
        .iter()
        .map(|shape| {
            let f = triangular_block_functional(shape)?;
            let r = maximize_functional(&f, opts)?;
            let exact = if shape.size() == 1 {
                f.site_weight(0, PauliAxis::X)
            } else {
                LEMMA2B_BOUND
            };
            if (r.c - exact).abs() > 1e-6 {
                return Err(Error::NotConverged {
                    what: "triangular block constant",
                    iterations: r.restarts_used,
                    residual: (r.c - exact).abs(),
                });
            }
            Ok(ShapeConstant {
                shape: shape.canonical_id.clone(),
                size: shape.size(),
                c: exact,
                ratio: exact / shape.size() as f64,
                source: ConstantSource::Numeric,
                converged: r.converged,
                argmax: Some(r.argmax_state),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    // every triangle carries 3 bonds and each bond lies on 2 triangles: 3N bonds
    Ok(assemble(model, LatticeKind::Triangular2d, k, 1.0 / 3.0, constants))
}

/// Two-producible threshold of the triangular Heisenberg antiferromagnet.
pub fn triangular_threshold_2p(opts: &MaximizeOptions) -> Result<ThresholdResult> {
    triangular_threshold(&SpinModel::heisenberg(), 2, opts)
}

/// A product of block states covering a register.
#[derive(Debug, Clone)]
pub struct ProductState {
    n: usize,
    blocks: Vec<(Vec<usize>, PureState)>,
}

impl ProductState {
    pub fn new(n: usize, blocks: Vec<(Vec<usize>, PureState)>) -> Result<Self> {
        let mut seen = vec![false; n];
        for (sites, state) in &blocks {
            if sites.len() != state.n_qubits() {
                return Err(Error::invalid("block site count does not match its state"));
            }
            for &s in sites {
                if s >= n || std::mem::replace(&mut seen[s], true) {
                    return Err(Error::invalid("blocks must partition the sites"));
                }
            }
        }
        if seen.contains(&false) {
            return Err(Error::invalid("blocks must partition the sites"));
        }
        Ok(ProductState { n, blocks })
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[(Vec<usize>, PureState)] {
        &self.blocks
    }

    pub fn max_block_size(&self) -> usize {
        self.blocks.iter().map(|(s, _)| s.len()).max().unwrap_or(0)
    }

    /// `⟨H⟩` evaluated blockwise: pair terms inside a block use the block
    /// state, pair terms across blocks factorize into Bloch components.
    pub fn energy(&self, terms: &TermList) -> Result<f64> {
        if terms.n_sites != self.n {
            return Err(Error::invalid("term list and product state sizes differ"));
        }
        let mut place = vec![(0, 0); self.n];
        for (b, (sites, _)) in self.blocks.iter().enumerate() {
            for (l, &s) in sites.iter().enumerate() {
                place[s] = (b, l);
            }
        }
        let bloch = (0..self.n)
            .map(|s| {
                let (b, l) = place[s];
                self.blocks[b].1.bloch(l)
            })
            .collect::<Result<Vec<_>>>()?;
        let comp = |s: usize, a: PauliAxis| bloch[s][a as usize];
        let mut e = 0.0;
        for t in &terms.pair_terms {
            let (i, j) = t.sites;
            let ((bi, li), (bj, lj)) = (place[i], place[j]);
            e += t.weight
                * if bi == bj {
                    self.blocks[bi].1.expectation(&[(li, t.axis), (lj, t.axis)])?
                } else {
                    comp(i, t.axis) * comp(j, t.axis)
                };
        }
        for t in &terms.field_terms {
            e += t.weight * comp(t.site, t.axis);
        }
        Ok(e)
    }

    pub fn energy_per_bond(&self, terms: &TermList) -> Result<f64> {
        Ok(self.energy(terms)? / terms.bond_count as f64)
    }

    pub fn to_state(&self) -> Result<PureState> {
        let refs: Vec<(Vec<usize>, &PureState)> = self.blocks.iter().map(|(s, p)| (s.clone(), p)).collect();
        PureState::tensor_product(self.n, &refs)
    }
}

/// Random partition of a torus into connected blocks of at most `k` sites.
///
/// Blocks are grown on unwrapped coordinates; a block whose image on the
/// torus gains bonds it does not have on the infinite lattice is shrunk
/// back, so every block is a translate of an infinite-lattice shape.
pub fn random_partition<R: Rng + ?Sized>(lattice: &LatticeSpec, k: usize, rng: &mut R) -> Result<Vec<Vec<usize>>> {
    check_k(k)?;
    let n = lattice.num_sites();
    let dirs: Vec<Offset> = lattice.kind.directions().iter().map(|(d, _)| *d).collect();
    let mut free: BTreeSet<usize> = (0..n).collect();
    let mut order: Vec<usize> = (0..n).collect();
    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), rng);
    let mut blocks = Vec::new();
    for &seed in &order {
        if !free.contains(&seed) {
            continue;
        }
        let target = rng.random_range(1..=k);
        let origin = lattice.coords(seed);
        let mut cells: Vec<Offset> = vec![origin];
        let mut sites = vec![seed];
        free.remove(&seed);
        let mut attempts = 0;
        while cells.len() < target && attempts < 8 * k {
            attempts += 1;
            let from = *cells.choose(rng).expect("nonempty");
            let d = *dirs.choose(rng).expect("nonempty");
            let cell = [from[0] + d[0], from[1] + d[1], from[2] + d[2]];
            let site = lattice.index(cell);
            if !free.contains(&site) || cells.contains(&cell) {
                continue;
            }
            if !faithful(lattice, &cells, &sites, cell, site) {
                continue;
            }
            cells.push(cell);
            sites.push(site);
            free.remove(&site);
        }
        blocks.push(sites);
    }
    Ok(blocks)
}

/// True if adding `cell` keeps torus adjacency equal to lattice adjacency.
fn faithful(lattice: &LatticeSpec, cells: &[Offset], sites: &[usize], cell: Offset, site: usize) -> bool {
    let torus: BTreeSet<usize> = lattice.neighbors(site).into_iter().collect();
    cells.iter().zip(sites).all(|(c, s)| {
        let d = [c[0] - cell[0], c[1] - cell[1], c[2] - cell[2]];
        lattice.kind.is_neighbor_vector(d) == torus.contains(s)
    })
}

/// Haar-random block states on a random partition.
pub fn random_product_state<R: Rng + ?Sized>(lattice: &LatticeSpec, k: usize, rng: &mut R) -> Result<ProductState> {
    let blocks = random_partition(lattice, k, rng)?
        .into_iter()
        .map(|sites| {
            let state = PureState::haar_random(sites.len(), rng);
            (sites, state)
        })
        .collect();
    ProductState::new(lattice.num_sites(), blocks)
}

#[derive(Debug, Clone, Serialize)]
pub struct SaturationWitness {
    pub n: usize,
    /// Amplitudes of each two-qubit block, real and imaginary parts.
    pub block_states: Vec<Vec<(f64, f64)>>,
    pub energy_per_bond: f64,
    pub bound: f64,
    pub saturated: bool,
}

/// Two-producible Heisenberg chain state whose energy equals `E_2p`.
///
/// Blocks alternate between the pair maximizer `φ` and
/// `φ'' = conj((Y⊗Y) · swap φ)`, which keeps the boundary cross terms at
/// their extreme value.
pub fn chain_saturation_witness(n: usize) -> Result<SaturationWitness> {
    if n % 2 == 1 || n < 4 {
        return Err(Error::invalid(format!("witness needs an even chain of at least 4 sites, got {n}")));
    }
    let (c, alpha_sq) = lemma1_bound(0.5)?;
    let phi = PureState::from_real(2, &[0.0, alpha_sq.sqrt(), -(1.0 - alpha_sq).sqrt(), 0.0])?;
    let yy = crate::qsmall::PauliString::new(&[(0, PauliAxis::Y), (1, PauliAxis::Y)])?;
    let phi2 = phi.permute_qubits(&[1, 0])?.apply_pauli(&yy).conjugate();
    let blocks: Vec<(Vec<usize>, PureState)> = (0..n / 2)
        .map(|b| {
            let state = if b % 2 == 0 { phi.clone() } else { phi2.clone() };
            (vec![2 * b, 2 * b + 1], state)
        })
        .collect();
    let product = ProductState::new(n, blocks)?;
    let terms = crate::models::instantiate(&SpinModel::heisenberg(), &LatticeSpec::chain(n)?);
    let energy_per_bond = product.energy_per_bond(&terms)?;
    let bound = -c / 2.0;
    Ok(SaturationWitness {
        n,
        block_states: product
            .blocks()
            .iter()
            .map(|(_, s)| s.amplitudes().iter().map(|z: &Complex64| (z.re, z.im)).collect())
            .collect(),
        energy_per_bond,
        bound,
        saturated: (energy_per_bond - bound).abs() < 1e-9,
    })
}
