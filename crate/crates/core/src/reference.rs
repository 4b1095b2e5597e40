//! Reference energies: literature constants for the Heisenberg lattices,
//! Jordan–Wigner free fermions for the Ising and XX chains, and ring
//! diagonalization with `1/N²` extrapolation.
//!
//! Conventions (Pauli units, periodic chain of `N` sites):
//! `H_ising = Σ X_j X_{j+1} + B Σ Z_j`, `H_xx = Σ (X_j X_{j+1} + Y_j Y_{j+1}) + B Σ Z_j`.
//! With `Z = 1 − 2n` the even fermion-parity sector uses antiperiodic
//! momenta `π(2m+1)/N` and the odd sector periodic momenta `2πm/N`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{LatticeKind, LatticeSpec};
use crate::models::{instantiate, ModelKind, SpinModel};
use crate::qsmall::{lowest_eigenpair, spectrum_of, LanczosOptions, PauliSum, Spectrum, MAX_DENSE_QUBITS};
use crate::quad::integrate;

const QUAD_TOL: f64 = 1e-10;
/// Allowed gap between the momentum integral and extrapolated rings.
pub const EXTRAPOLATION_TOL: f64 = 1e-4;
/// Ring sizes used for `1/N²` extrapolation.
pub const EXTRAPOLATION_SIZES: [usize; 3] = [8, 10, 12];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceSource {
    Literature,
    FreeFermion,
    ExactDiagExtrapolated,
}

impl ReferenceSource {
    pub fn name(self) -> &'static str {
        match self {
            ReferenceSource::Literature => "literature",
            ReferenceSource::FreeFermion => "free_fermion",
            ReferenceSource::ExactDiagExtrapolated => "exact_diag_extrapolated",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReferenceEnergy {
    pub model: ModelKind,
    pub lattice: LatticeKind,
    pub field: Option<f64>,
    pub energy_per_bond: f64,
    pub source: ReferenceSource,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThermalReference {
    pub model: ModelKind,
    pub field: Option<f64>,
    pub temperature: f64,
    pub energy_per_bond: f64,
    /// Ring or torus size; `None` for the infinite chain.
    pub sites: Option<usize>,
}

/// Heisenberg ground energies per bond from the literature.
fn heisenberg_constant(kind: LatticeKind) -> f64 {
    match kind {
        LatticeKind::Chain1d => -(4.0 * 2f64.ln() - 1.0),
        LatticeKind::Square2d => -1.338,
        LatticeKind::Cubic3d => -1.194,
        LatticeKind::Triangular2d => -0.726,
    }
}

fn check_free_fermion(model: &SpinModel) -> Result<()> {
    match model.kind {
        ModelKind::Ising | ModelKind::Xx => Ok(()),
        ModelKind::Heisenberg => Err(Error::unsupported("free fermions cover the ising and xx chains only")),
    }
}

/// Ground energy per bond. Ising/XX chains are answered by the momentum
/// integral, which is checked against extrapolated ring diagonalization.
pub fn ground_reference(model: &SpinModel, lattice: LatticeKind) -> Result<ReferenceEnergy> {
    let (energy_per_bond, source) = match (model.kind, lattice) {
        (ModelKind::Heisenberg, kind) => (heisenberg_constant(kind), ReferenceSource::Literature),
        (ModelKind::Ising | ModelKind::Xx, LatticeKind::Chain1d) => {
            let ff = free_fermion_energy(model, 0.0)?;
            if model.kind == ModelKind::Ising {
                let ed = extrapolate_ring_ground(model, &EXTRAPOLATION_SIZES)?;
                if (ff - ed.energy_per_bond).abs() > EXTRAPOLATION_TOL {
                    return Err(Error::ConventionMismatch(format!(
                        "B = {}: integral {ff} vs extrapolated rings {}",
                        model.field, ed.energy_per_bond
                    )));
                }
            }
            (ff, ReferenceSource::FreeFermion)
        }
        (kind, lattice) => return Err(Error::NoReference(format!("{kind} on {lattice}"))),
    };
    Ok(ReferenceEnergy {
        model: model.kind,
        lattice,
        field: model.field_axis().map(|_| model.field),
        energy_per_bond,
        source,
    })
}

/// Infinite-chain energy per bond at temperature `t` (`t = 0` for the
/// ground state).
pub fn free_fermion_energy(model: &SpinModel, t: f64) -> Result<f64> {
    check_free_fermion(model)?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::invalid(format!("temperature {t} must be finite and ≥ 0")));
    }
    let b = model.field;
    match model.kind {
        ModelKind::Ising => {
            // −(1/π) ∫_0^π ε(k) tanh(ε(k)/T) dk with ε = √(1 + B² − 2B cos k)
            let eps = move |k: f64| (1.0 + b * b - 2.0 * b * k.cos()).max(0.0).sqrt();
            let f = move |k: f64| {
                let e = eps(k);
                if t == 0.0 {
                    e
                } else {
                    e * (e / t).tanh()
                }
            };
            Ok(-integrate(f, 0.0, PI, QUAD_TOL, &[])? / PI)
        }
        ModelKind::Xx => {
            // B + (1/π) ∫_0^π a(k) f(a(k)) dk with a = 4 cos k − 2B
            let a = move |k: f64| 4.0 * k.cos() - 2.0 * b;
            let fermi_point = (b / 2.0).clamp(-1.0, 1.0).acos();
            let f = move |k: f64| {
                let x = a(k);
                if t == 0.0 {
                    x.min(0.0)
                } else {
                    x * fermi(x, t)
                }
            };
            Ok(b + integrate(f, 0.0, PI, QUAD_TOL, &[fermi_point])? / PI)
        }
        ModelKind::Heisenberg => unreachable!(),
    }
}

fn fermi(x: f64, t: f64) -> f64 {
    let y = x / t;
    if y > 0.0 {
        let e = (-y).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + y.exp())
    }
}

/// Closed form of the XX ground energy per bond on the infinite chain.
pub fn xx_ground_closed_form(b: f64) -> f64 {
    let b = b.abs();
    if b >= 2.0 {
        return -b;
    }
    let kf = (b / 2.0).acos();
    -b + (2.0 * b * kf - 4.0 * (1.0 - b * b / 4.0).sqrt()) / PI
}

/// One fermionic factor: its levels as `(energy, odd parity)`.
type Factor = Vec<(f64, bool)>;

fn sector_factors(model: &SpinModel, n: usize, odd: bool) -> Vec<Factor> {
    let b = model.field;
    let momenta: Vec<f64> = (0..n)
        .map(|m| if odd { 2.0 * PI * m as f64 / n as f64 } else { PI * (2 * m + 1) as f64 / n as f64 })
        .collect();
    match model.kind {
        ModelKind::Xx => momenta
            .iter()
            .map(|k| vec![(0.0, false), (4.0 * k.cos() - 2.0 * b, true)])
            .collect(),
        _ => {
            let mut factors = Vec::new();
            for (m, &k) in momenta.iter().enumerate() {
                let a = 2.0 * k.cos() - 2.0 * b;
                // index of −k in the same sector
                let partner = if odd { (n - m) % n } else { n - 1 - m };
                if partner == m {
                    // k = 0 or π: no pairing partner
                    factors.push(vec![(0.0, false), (a, true)]);
                } else if m < partner {
                    let e = 2.0 * (1.0 + b * b - 2.0 * b * k.cos()).sqrt();
                    factors.push(vec![(a - e, false), (a, true), (a, true), (a + e, false)]);
                }
            }
            factors
        }
    }
}

/// Many-body levels of the sector whose total fermion parity is `odd`.
fn sector_levels(model: &SpinModel, n: usize, odd: bool) -> Vec<f64> {
    let mut even_lv = vec![0.0];
    let mut odd_lv: Vec<f64> = Vec::new();
    for factor in sector_factors(model, n, odd) {
        let (mut ne, mut no) = (Vec::new(), Vec::new());
        for &(e, p) in &factor {
            for &x in &even_lv {
                if p { no.push(x + e) } else { ne.push(x + e) }
            }
            for &x in &odd_lv {
                if p { ne.push(x + e) } else { no.push(x + e) }
            }
        }
        even_lv = ne;
        odd_lv = no;
    }
    let shift = model.field * n as f64;
    let kept = if odd { odd_lv } else { even_lv };
    kept.into_iter().map(|e| e + shift).collect()
}

/// Full spectrum of an `N`-site ring from free fermions, with each momentum
/// sector projected on its own fermion parity.
pub fn free_fermion_ring_spectrum(model: &SpinModel, n: usize) -> Result<Spectrum> {
    check_free_fermion(model)?;
    if n < 3 || n % 2 == 1 || n > 20 {
        return Err(Error::invalid(format!("ring size {n} must be even and within 4..=20")));
    }
    let mut levels = sector_levels(model, n, false);
    levels.extend(sector_levels(model, n, true));
    Spectrum::new(levels)
}

/// Dense spectrum of a ring or torus of at most 12 sites.
pub fn dense_spectrum(model: &SpinModel, lattice: &LatticeSpec) -> Result<Spectrum> {
    if lattice.num_sites() > MAX_DENSE_QUBITS {
        return Err(Error::invalid(format!(
            "{} sites exceed the dense limit {MAX_DENSE_QUBITS}",
            lattice.num_sites()
        )));
    }
    spectrum_of(&PauliSum::from_terms(&instantiate(model, lattice))?)
}

/// Least-squares fit `e(N) = a + b/N²`.
pub fn fit_inverse_square(points: &[(usize, f64)]) -> Result<(f64, f64)> {
    if points.len() < 2 {
        return Err(Error::invalid("need at least two sizes to extrapolate"));
    }
    let xs: Vec<f64> = points.iter().map(|(n, _)| 1.0 / (*n as f64).powi(2)).collect();
    let m = xs.len() as f64;
    let (sx, sy) = (xs.iter().sum::<f64>(), points.iter().map(|p| p.1).sum::<f64>());
    let sxx = xs.iter().map(|x| x * x).sum::<f64>();
    let sxy = xs.iter().zip(points).map(|(x, p)| x * p.1).sum::<f64>();
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    Ok(((sy - slope * sx) / m, slope))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtrapolationModel {
    /// `a + b/N²`, least squares over all sizes.
    InverseSquare,
    /// Aitken Δ² on the three largest sizes.
    Geometric,
}

/// Ratio of successive differences below which convergence is treated as
/// geometric. A `1/N^p` tail with `p ≤ 4` gives at least 0.35 on 8, 10, 12.
pub const GEOMETRIC_RATIO: f64 = 0.3;

#[derive(Debug, Clone, Serialize)]
pub struct Extrapolation {
    pub sizes: Vec<(usize, f64)>,
    pub energy_per_bond: f64,
    pub model: ExtrapolationModel,
    /// `(e₃ − e₂)/(e₂ − e₁)` over the three largest sizes.
    pub difference_ratio: Option<f64>,
}

/// Extrapolate `(N, e(N))` to infinite size: `a + b/N²` for power-law
/// convergence, Aitken Δ² when the differences shrink geometrically (a
/// gapped chain, where a `1/N²` fit overshoots).
pub fn extrapolate(points: &[(usize, f64)]) -> Result<Extrapolation> {
    let mut sizes = points.to_vec();
    sizes.sort_by_key(|p| p.0);
    let (a, _) = fit_inverse_square(&sizes)?;
    let mut out = Extrapolation {
        energy_per_bond: a,
        model: ExtrapolationModel::InverseSquare,
        difference_ratio: None,
        sizes: sizes.clone(),
    };
    if let [.., (_, e1), (_, e2), (_, e3)] = sizes[..] {
        let (d1, d2) = (e2 - e1, e3 - e2);
        if d1.abs() > 1e-12 {
            let r = d2 / d1;
            out.difference_ratio = Some(r);
            if (0.0..GEOMETRIC_RATIO).contains(&r) {
                out.energy_per_bond = e3 - d2 * d2 / (d2 - d1);
                out.model = ExtrapolationModel::Geometric;
            }
        }
    }
    Ok(out)
}

/// Ground energy per bond of periodic chains, extrapolated in `N`.
pub fn extrapolate_ring_ground(model: &SpinModel, sizes: &[usize]) -> Result<Extrapolation> {
    let sizes = sizes
        .par_iter()
        .map(|&n| {
            let terms = instantiate(model, &LatticeSpec::chain(n)?);
            let opts = LanczosOptions {
                tol: 1e-11,
                ..Default::default()
            };
            let (e, _) = lowest_eigenpair(&PauliSum::from_terms(&terms)?, &opts)?;
            Ok((n, e / terms.bond_count as f64))
        })
        .collect::<Result<Vec<_>>>()?;
    extrapolate(&sizes)
}

/// Check the free-fermion conventions against exact diagonalization: the
/// finite-ring spectra must equal dense spectra level by level, and the
/// Ising momentum integral must match extrapolated rings.
pub fn validate_free_fermion_conventions(model: &SpinModel) -> Result<()> {
    check_free_fermion(model)?;
    for n in [6, 8] {
        let ff = free_fermion_ring_spectrum(model, n)?;
        let dense = dense_spectrum(model, &LatticeSpec::chain(n)?)?;
        let worst = ff
            .eigenvalues()
            .iter()
            .zip(dense.eigenvalues())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if worst > 1e-8 {
            return Err(Error::ConventionMismatch(format!(
                "{} ring N = {n}, B = {}: levels differ by {worst:.3e}",
                model.kind, model.field
            )));
        }
    }
    if model.kind == ModelKind::Ising {
        ground_reference(model, LatticeKind::Chain1d)?;
    }
    Ok(())
}

/// Thermal energy per bond. Ising/XX chains without `sites` use the
/// momentum integral; otherwise the dense spectrum of the given ring or
/// torus is used, which carries finite-size error.
pub fn thermal_reference(model: &SpinModel, lattice: Option<&LatticeSpec>, t: f64) -> Result<ThermalReference> {
    let (energy_per_bond, sites) = match lattice {
        None => (free_fermion_energy(model, t)?, None),
        Some(l) => {
            let bonds = instantiate(model, l).bond_count as f64;
            let spec = dense_spectrum(model, l)?;
            let e = if t == 0.0 { spec.ground_energy() } else { spec.thermal_energy(t)? };
            (e / bonds, Some(l.num_sites()))
        }
    };
    Ok(ThermalReference {
        model: model.kind,
        field: model.field_axis().map(|_| model.field),
        temperature: t,
        energy_per_bond,
        sites,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literature_constants() {
        let h = SpinModel::heisenberg();
        let r = ground_reference(&h, LatticeKind::Chain1d).unwrap();
        assert!((r.energy_per_bond + 1.7726).abs() < 1e-4);
        assert_eq!(ground_reference(&h, LatticeKind::Square2d).unwrap().energy_per_bond, -1.338);
        assert!(matches!(
            ground_reference(&SpinModel::ising(1.0), LatticeKind::Square2d),
            Err(Error::NoReference(_))
        ));
    }

    #[test]
    fn closed_forms() {
        let ising0 = free_fermion_energy(&SpinModel::ising(0.0), 0.0).unwrap();
        assert!((ising0 + 1.0).abs() < 1e-10);
        let ising1 = free_fermion_energy(&SpinModel::ising(1.0), 0.0).unwrap();
        assert!((ising1 + 4.0 / PI).abs() < 1e-10);
        for b in [0.0, 0.5, 1.0, 1.9, 2.0, 3.0] {
            let xx = free_fermion_energy(&SpinModel::xx(b), 0.0).unwrap();
            assert!((xx - xx_ground_closed_form(b)).abs() < 1e-10, "B={b}");
        }
        assert!((xx_ground_closed_form(0.0) + 4.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn large_field_ising() {
        let b = 40.0;
        let e = free_fermion_energy(&SpinModel::ising(b), 0.0).unwrap();
        // second order: −B − 1/(4B)
        assert!((e + b + 1.0 / (4.0 * b)).abs() < 1e-4);
    }

    #[test]
    fn ring_spectra_match_dense() {
        for b in [0.0, 0.5, 1.0, 2.0] {
            validate_free_fermion_conventions(&SpinModel::xx(b)).unwrap();
            for n in [6, 8] {
                let ff = free_fermion_ring_spectrum(&SpinModel::ising(b), n).unwrap();
                let dense = dense_spectrum(&SpinModel::ising(b), &LatticeSpec::chain(n).unwrap()).unwrap();
                for (a, d) in ff.eigenvalues().iter().zip(dense.eigenvalues()) {
                    assert!((a - d).abs() < 1e-9, "B={b} N={n}");
                }
            }
        }
    }

    #[test]
    fn thermal_limits() {
        let xx = SpinModel::xx(0.0);
        let hot = thermal_reference(&xx, None, 1e6).unwrap().energy_per_bond;
        assert!(hot.abs() < 1e-5);
        let cold = thermal_reference(&xx, None, 1e-3).unwrap().energy_per_bond;
        assert!((cold + 4.0 / PI).abs() < 1e-5);
        let ring = LatticeSpec::chain(10).unwrap();
        let h = SpinModel::heisenberg();
        let low = thermal_reference(&h, Some(&ring), 0.1).unwrap().energy_per_bond;
        let ground = thermal_reference(&h, Some(&ring), 0.0).unwrap().energy_per_bond;
        assert!((low - ground).abs() < 1e-6);
        assert!(thermal_reference(&h, None, 1.0).is_err());
        assert!(free_fermion_energy(&xx, -1.0).is_err());
    }

    #[test]
    fn geometric_tail_uses_aitken() {
        let pts: Vec<(usize, f64)> = [8, 10, 12].iter().map(|&n| (n, -2.0 - 0.3 * (-(n as f64)).exp())).collect();
        let ex = extrapolate(&pts).unwrap();
        assert_eq!(ex.model, ExtrapolationModel::Geometric);
        assert!((ex.energy_per_bond + 2.0).abs() < 1e-12);
        let pts: Vec<(usize, f64)> = [8, 10, 12].iter().map(|&n| (n, -1.0 - 1.0 / (n * n) as f64)).collect();
        assert_eq!(extrapolate(&pts).unwrap().model, ExtrapolationModel::InverseSquare);
    }

    #[test]
    fn fit_recovers_exact_law() {
        let pts: Vec<(usize, f64)> = [8, 10, 12].iter().map(|&n| (n, -1.5 + 2.0 / (n * n) as f64)).collect();
        let (a, b) = fit_inverse_square(&pts).unwrap();
        assert!((a + 1.5).abs() < 1e-12 && (b - 2.0).abs() < 1e-10);
    }
}
