//! Field sweeps of the entanglement gap `E_g = E_kp − E_0`, kink detection
//! on its derivative, temperature–field detection maps and Schmidt-measure
//! caps.

use rayon::prelude::*;
use serde::Serialize;

use crate::blockopt::MaximizeOptions;
use crate::bounds::{threshold_with_warm_start, ThresholdResult};
use crate::error::{Error, Result};
use crate::lattice::LatticeKind;
use crate::models::{ModelKind, SpinModel};
use crate::reference::free_fermion_energy;

/// Grid points per independently continued chunk of a sweep.
const SWEEP_CHUNK: usize = 25;
/// Largest field step accepted by [`kink_scan`].
pub const MAX_KINK_STEP: f64 = 1e-2;
/// Thermal energy must lie this far below `E_kp` to count as detected.
pub const DETECTION_MARGIN: f64 = 1e-9;

/// Uniform grid `start, start + h, …` up to `end` (inclusive within `h/2`).
pub fn uniform_grid(start: f64, end: f64, h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0) || !(end >= start) || !start.is_finite() || !end.is_finite() {
        return Err(Error::invalid(format!("bad grid [{start}, {end}] step {h}")));
    }
    let steps = ((end - start) / h + 0.5).floor() as usize;
    if steps > 1_000_000 {
        return Err(Error::invalid("grid too large"));
    }
    Ok((0..=steps).map(|i| start + i as f64 * h).collect())
}

/// Optimizer settings for sweeps: fewer random restarts, since every point
/// is also seeded with the maximizers of its neighbor.
pub fn sweep_options(seed: u64) -> MaximizeOptions {
    MaximizeOptions {
        restarts: 6,
        tol: 1e-13,
        cross_check: false,
        seed,
        ..Default::default()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GapCurve {
    pub model: ModelKind,
    pub k: usize,
    pub h: f64,
    pub fields: Vec<f64>,
    pub e_kp: Vec<f64>,
    pub e_0: Vec<f64>,
    pub e_g: Vec<f64>,
    /// Central difference of `E_g`; `None` at the ends and next to masked points.
    pub f: Vec<Option<f64>>,
    /// Points where the threshold optimizer failed.
    pub masked: Vec<bool>,
    pub best_shapes: Vec<String>,
    pub converged: Vec<bool>,
}

fn check_chain_model(kind: ModelKind) -> Result<()> {
    match kind {
        ModelKind::Ising | ModelKind::Xx => Ok(()),
        ModelKind::Heisenberg => Err(Error::unsupported("sweeps need a field model (ising or xx)")),
    }
}

/// `E_kp(B)`, `E_0(B)` and the gap on a uniform field grid of the chain.
///
/// The grid is cut into fixed chunks; within a chunk each point is warm
/// started from the previous one, chunks run in parallel.
pub fn gap_sweep(model: ModelKind, k: usize, fields: &[f64], opts: &MaximizeOptions) -> Result<GapCurve> {
    check_chain_model(model)?;
    if fields.len() < 3 {
        return Err(Error::invalid("a sweep needs at least three field values"));
    }
    let h = fields[1] - fields[0];
    if !(h > 0.0) || fields.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0)) {
        return Err(Error::invalid("field grid must be uniform and increasing"));
    }
    if k > crate::lattice::MAX_BLOCK_SIZE {
        return Err(Error::BlockSizeCap(k));
    }
    let chunks: Vec<&[f64]> = fields.chunks(SWEEP_CHUNK).collect();
    let points: Vec<Vec<(Option<ThresholdResult>, f64)>> = chunks
        .par_iter()
        .map(|chunk| {
            let mut prev: Option<ThresholdResult> = None;
            chunk
                .iter()
                .map(|&b| {
                    let m = SpinModel::new(model, b)?;
                    let t = threshold_with_warm_start(&m, LatticeKind::Chain1d, k, opts, prev.as_ref()).ok();
                    if t.is_some() {
                        prev = t.clone();
                    }
                    Ok((t, free_fermion_energy(&m, 0.0)?))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<_> = points.into_iter().flatten().collect();
    let masked: Vec<bool> = points.iter().map(|(t, _)| t.is_none()).collect();
    let e_kp: Vec<f64> = points.iter().map(|(t, _)| t.as_ref().map_or(f64::NAN, |t| t.e_kp)).collect();
    let e_0: Vec<f64> = points.iter().map(|(_, e)| *e).collect();
    let e_g: Vec<f64> = e_kp.iter().zip(&e_0).map(|(a, b)| a - b).collect();
    let f = (0..fields.len())
        .map(|i| {
            if i == 0 || i + 1 == fields.len() || masked[i - 1] || masked[i + 1] {
                None
            } else {
                Some((e_g[i + 1] - e_g[i - 1]) / (2.0 * h))
            }
        })
        .collect();
    Ok(GapCurve {
        model,
        k,
        h,
        fields: fields.to_vec(),
        e_kp,
        e_0,
        e_g,
        f,
        best_shapes: points
            .iter()
            .map(|(t, _)| t.as_ref().map_or(String::new(), |t| t.best_shape.clone()))
            .collect(),
        converged: points.iter().map(|(t, _)| t.as_ref().is_some_and(|t| t.converged)).collect(),
        masked,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Kink {
    pub field: f64,
    /// Estimated jump in the slope of `F`.
    pub slope_jump: f64,
    /// Second difference of `F` over the median absolute second difference.
    pub score: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KinkReport {
    pub k: usize,
    /// Grid step; also the location error bar.
    pub h: f64,
    pub threshold: f64,
    pub kinks: Vec<Kink>,
}

impl KinkReport {
    /// Strongest kink strictly above `b_min`.
    pub fn strongest_above(&self, b_min: f64) -> Option<Kink> {
        self.kinks
            .iter()
            .filter(|k| k.field > b_min)
            .copied()
            .max_by(|a, b| a.score.total_cmp(&b.score))
    }

    pub fn has_kink_near(&self, b: f64, tol: f64) -> bool {
        self.kinks.iter().any(|k| (k.field - b).abs() <= tol)
    }
}

/// Flag slope discontinuities of `F` from spikes of its second difference.
///
/// A point is flagged when `|Δ²F|` exceeds `factor` times the median of
/// `|Δ²F|`; flagged local maxima closer than three grid steps are merged.
pub fn kink_scan(curve: &GapCurve, factor: f64) -> Result<KinkReport> {
    if curve.h > MAX_KINK_STEP * (1.0 + 1e-9) {
        return Err(Error::invalid(format!(
            "grid step {} is coarser than {MAX_KINK_STEP}; kinks would not be resolved",
            curve.h
        )));
    }
    kink_scan_samples(curve.k, &curve.fields, &curve.f, factor)
}

/// [`kink_scan`] on raw `F` samples.
pub fn kink_scan_samples(k: usize, fields: &[f64], f: &[Option<f64>], factor: f64) -> Result<KinkReport> {
    if fields.len() != f.len() || fields.len() < 5 {
        return Err(Error::invalid("need at least five aligned samples"));
    }
    let h = fields[1] - fields[0];
    let d2: Vec<Option<f64>> = (0..f.len())
        .map(|i| {
            if i == 0 || i + 1 == f.len() {
                return None;
            }
            Some(f[i + 1]? - 2.0 * f[i]? + f[i - 1]?)
        })
        .collect();
    let mut mags: Vec<f64> = d2.iter().flatten().map(|x| x.abs()).collect();
    if mags.is_empty() {
        return Err(Error::invalid("no interior samples"));
    }
    mags.sort_by(f64::total_cmp);
    let median = mags[mags.len() / 2].max(f64::MIN_POSITIVE);
    let threshold = factor * median;
    let mag = |i: usize| d2[i].map_or(0.0, f64::abs);
    let mut peaks: Vec<usize> = (1..f.len() - 1)
        .filter(|&i| mag(i) > threshold && mag(i) >= mag(i - 1) && mag(i) >= mag(i + 1))
        .collect();
    // merge peaks within three steps, keeping the larger
    let mut merged: Vec<usize> = Vec::new();
    for p in peaks.drain(..) {
        match merged.last_mut() {
            Some(q) if p - *q <= 3 => {
                if mag(p) > mag(*q) {
                    *q = p;
                }
            }
            _ => merged.push(p),
        }
    }
    Ok(KinkReport {
        k,
        h,
        threshold,
        kinks: merged
            .into_iter()
            .map(|i| Kink {
                field: fields[i],
                slope_jump: d2[i].unwrap_or(0.0) / h,
                score: mag(i) / median,
            })
            .collect(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RegionMap {
    pub model: ModelKind,
    pub k: usize,
    pub temperatures: Vec<f64>,
    pub fields: Vec<f64>,
    pub e_kp: Vec<f64>,
    /// `thermal[t][b]`: thermal energy per bond.
    pub thermal: Vec<Vec<f64>>,
    /// `detect[t][b]`: thermal energy below `E_kp(B) − margin`.
    pub detect: Vec<Vec<bool>>,
    /// Per field: largest detected grid temperature, 0 if none.
    pub t_star: Vec<f64>,
}

impl RegionMap {
    /// Detection at a lower temperature whenever detected at a higher one.
    pub fn is_downward_closed(&self) -> bool {
        let order = sorted_order(&self.temperatures);
        (0..self.fields.len()).all(|b| {
            order
                .windows(2)
                .all(|w| !self.detect[w[1]][b] || self.detect[w[0]][b])
        })
    }

    pub fn any_detected(&self) -> bool {
        self.detect.iter().flatten().any(|&d| d)
    }
}

fn sorted_order(xs: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    idx
}

/// Detection matrix for thermal states of the infinite chain.
pub fn region_map(
    model: ModelKind,
    k: usize,
    temperatures: &[f64],
    fields: &[f64],
    opts: &MaximizeOptions,
) -> Result<RegionMap> {
    check_chain_model(model)?;
    if temperatures.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::invalid("temperatures must be positive"));
    }
    let e_kp = fields
        .par_iter()
        .map(|&b| Ok(threshold_with_warm_start(&SpinModel::new(model, b)?, LatticeKind::Chain1d, k, opts, None)?.e_kp))
        .collect::<Result<Vec<f64>>>()?;
    let thermal = temperatures
        .par_iter()
        .map(|&t| {
            fields
                .iter()
                .map(|&b| free_fermion_energy(&SpinModel::new(model, b)?, t))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let detect: Vec<Vec<bool>> = thermal
        .iter()
        .map(|row| row.iter().zip(&e_kp).map(|(e, th)| *e < th - DETECTION_MARGIN).collect())
        .collect();
    let t_star = (0..fields.len())
        .map(|b| {
            temperatures
                .iter()
                .zip(&detect)
                .filter(|(_, d)| d[b])
                .map(|(t, _)| *t)
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(RegionMap {
        model,
        k,
        temperatures: temperatures.to_vec(),
        fields: fields.to_vec(),
        e_kp,
        thermal,
        detect,
        t_star,
    })
}

/// Upper bound on `log₂` of the Schmidt measure of a `k`-producible pure
/// state of `n` qubits.
pub fn schmidt_cap(k: usize, n: usize) -> Result<f64> {
    match k {
        1 => Ok(0.0),
        2 => Ok(n as f64 / 2.0),
        3 => Ok(n as f64 * 3f64.log2() / 3.0),
        _ => Err(Error::unsupported(format!("Schmidt cap for k = {k}; only k ≤ 3 is available"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let g = uniform_grid(0.0, 4.0, 0.01).unwrap();
        assert_eq!(g.len(), 401);
        assert!((g[400] - 4.0).abs() < 1e-12);
        assert!(uniform_grid(0.0, 1.0, 0.0).is_err());
        assert!(uniform_grid(1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn smooth_curve_has_no_kinks() {
        let fields = uniform_grid(0.0, 4.0, 0.01).unwrap();
        let f: Vec<Option<f64>> = fields.iter().map(|b| Some(0.3 * b * b - b)).collect();
        let r = kink_scan_samples(1, &fields, &f, 10.0).unwrap();
        assert!(r.kinks.is_empty(), "{:?}", r.kinks);
    }

    #[test]
    fn synthetic_kink_is_located() {
        let fields = uniform_grid(0.0, 4.0, 0.01).unwrap();
        let f: Vec<Option<f64>> = fields
            .iter()
            .map(|&b| Some((b - 2.7).max(0.0) * 0.5 + 0.1 * b.sin()))
            .collect();
        let r = kink_scan_samples(1, &fields, &f, 10.0).unwrap();
        assert_eq!(r.kinks.len(), 1);
        assert!((r.kinks[0].field - 2.7).abs() <= 0.01 + 1e-12);
        assert!((r.kinks[0].slope_jump - 0.5).abs() < 0.05);
    }

    #[test]
    fn coarse_grid_refused() {
        let fields = uniform_grid(0.0, 4.0, 0.05).unwrap();
        let curve = GapCurve {
            model: ModelKind::Ising,
            k: 1,
            h: 0.05,
            f: vec![Some(0.0); fields.len()],
            e_kp: vec![0.0; fields.len()],
            e_0: vec![0.0; fields.len()],
            e_g: vec![0.0; fields.len()],
            masked: vec![false; fields.len()],
            best_shapes: vec![String::new(); fields.len()],
            converged: vec![true; fields.len()],
            fields,
        };
        assert!(kink_scan(&curve, 10.0).is_err());
    }

    #[test]
    fn ising_gap_vanishes_at_zero_field() {
        let fields = uniform_grid(0.0, 0.04, 0.01).unwrap();
        let c = gap_sweep(ModelKind::Ising, 1, &fields, &sweep_options(1)).unwrap();
        assert!(c.e_g[0].abs() < 1e-9);
        assert!(c.e_g.iter().all(|g| *g >= -1e-12));
        assert!(c.f[0].is_none() && c.f[2].is_some());
        assert!(gap_sweep(ModelKind::Heisenberg, 1, &fields, &sweep_options(1)).is_err());
    }

    #[test]
    fn schmidt_caps() {
        assert_eq!(schmidt_cap(1, 17).unwrap(), 0.0);
        assert_eq!(schmidt_cap(2, 10).unwrap(), 5.0);
        assert!((schmidt_cap(3, 3).unwrap() - 3f64.log2()).abs() < 1e-15);
        assert!(schmidt_cap(4, 8).is_err());
    }

    #[test]
    fn xx_zero_field_detected_at_low_temperature() {
        let m = region_map(ModelKind::Xx, 1, &[0.05, 0.5, 20.0], &[0.0, 1.9, 2.5], &sweep_options(1)).unwrap();
        assert!(m.detect[0][0] && m.detect[0][1]);
        assert!(!m.detect[2].iter().any(|&d| d));
        assert!(m.t_star[0] > 0.0);
        assert!(m.is_downward_closed());
    }
}
