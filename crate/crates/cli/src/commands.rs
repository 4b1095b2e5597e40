use std::time::Instant;

use kprod_core::analysis::{gap_sweep, kink_scan, region_map, sweep_options, uniform_grid};
use kprod_core::blockopt::{verify_lemmas, MaximizeOptions};
use kprod_core::bounds::{chain_saturation_witness, energy_threshold};
use kprod_core::lattice::{enumerate_block_shapes, LatticeKind, LatticeSpec, MAX_BLOCK_SIZE};
use kprod_core::models::{ModelKind, SpinModel};
use kprod_core::reference::{ground_reference, thermal_reference, ThermalReference};
use kprod_core::Error;
use serde::Serialize;
use serde_json::{json, Value};

use crate::output::{emit, num, opt_num, pretty, sibling, Format, Table};
use crate::{Cli, Command, Failure};

struct Rendered {
    body: String,
    /// Extra files written next to `--out`, as (suffix, contents).
    extras: Vec<(&'static str, String)>,
    summary: Value,
}

impl Rendered {
    fn plain(body: String) -> Self {
        Rendered {
            body,
            extras: Vec::new(),
            summary: Value::Null,
        }
    }
}

fn check_k(k: usize) -> Result<(), Failure> {
    if k > MAX_BLOCK_SIZE {
        return Err(Error::BlockSizeCap(k).into());
    }
    if k == 0 {
        return Err(Failure::Invalid("k must be at least 1".into()));
    }
    Ok(())
}

fn optimizer(cli: &Cli) -> MaximizeOptions {
    MaximizeOptions {
        restarts: cli.common.restarts,
        seed: cli.common.seed,
        ..Default::default()
    }
}

#[derive(Serialize)]
struct Meta<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a Cli,
    output: String,
    elapsed_seconds: f64,
    summary: &'a Value,
}

pub fn run(cli: &Cli, start: Instant) -> Result<(), Failure> {
    if cli.common.restarts == 0 {
        return Err(Failure::Invalid("--restarts must be at least 1".into()));
    }
    let rendered = match &cli.command {
        Command::Bound { model, lattice, k, field } => bound(cli, *model, *lattice, *k, *field)?,
        Command::Sweep {
            model,
            k,
            bmin,
            bmax,
            step,
            kink_factor,
        } => sweep(cli, *model, *k, (*bmin, *bmax, *step), *kink_factor)?,
        Command::Regions {
            model,
            k,
            tmin,
            tmax,
            tstep,
            bmin,
            bmax,
            bstep,
        } => regions(cli, *model, *k, (*tmin, *tmax, *tstep), (*bmin, *bmax, *bstep))?,
        Command::Reference {
            model,
            lattice,
            field,
            temp,
            sites,
        } => reference(cli, *model, *lattice, *field, *temp, *sites)?,
        Command::Shapes { lattice, k } => {
            check_k(*k)?;
            let shapes = enumerate_block_shapes(*lattice, *k)?;
            let records: Vec<_> = shapes.iter().map(|s| s.to_record()).collect();
            Rendered::plain(pretty(&records))
        }
        Command::VerifyLemmas { gammas } => {
            let rows = verify_lemmas(gammas, &optimizer(cli))?;
            let mut t = Table::new(&["lemma", "gamma", "analytic", "numeric", "abs_diff"]);
            for r in &rows {
                t.push(vec![
                    r.lemma.to_string(),
                    opt_num(r.gamma),
                    num(r.analytic),
                    num(r.numeric),
                    num((r.analytic - r.numeric).abs()),
                ]);
            }
            Rendered::plain(t.render(cli.common.format.unwrap_or(Format::Csv)))
        }
        Command::Witness { n } => {
            let w = chain_saturation_witness(*n)?;
            Rendered::plain(pretty(&w))
        }
    };
    emit(cli.common.out.as_deref(), &rendered.body)?;
    if let Some(out) = &cli.common.out {
        for (suffix, body) in &rendered.extras {
            emit(Some(&sibling(out, suffix)), body)?;
        }
        let meta = Meta {
            tool: "kprod",
            version: env!("CARGO_PKG_VERSION"),
            config: cli,
            output: out.display().to_string(),
            elapsed_seconds: start.elapsed().as_secs_f64(),
            summary: &rendered.summary,
        };
        emit(Some(&sibling(out, "meta.json")), &pretty(&meta))?;
    }
    Ok(())
}

fn bound(cli: &Cli, model: ModelKind, lattice: LatticeKind, k: usize, field: f64) -> Result<Rendered, Failure> {
    check_k(k)?;
    let m = SpinModel::new(model, field)?;
    let r = energy_threshold(&m, lattice, k, &optimizer(cli))?;
    let body = match cli.common.format.unwrap_or(Format::Json) {
        Format::Json => pretty(&r),
        Format::Csv => {
            let mut t = Table::new(&["model", "lattice", "k", "B", "E_kp", "best_shape"]);
            t.push(vec![
                model.to_string(),
                lattice.to_string(),
                k.to_string(),
                opt_num(r.field),
                num(r.e_kp),
                r.best_shape.clone(),
            ]);
            t.to_csv()
        }
    };
    Ok(Rendered::plain(body))
}

fn sweep(cli: &Cli, model: ModelKind, k: usize, grid: (f64, f64, f64), factor: f64) -> Result<Rendered, Failure> {
    check_k(k)?;
    let fields = uniform_grid(grid.0, grid.1, grid.2)?;
    let curve = gap_sweep(model, k, &fields, &sweep_options(cli.common.seed))?;
    let kinks = kink_scan(&curve, factor).ok();
    let mut t = Table::new(&["B", "E_kp", "E_0", "E_g", "F"]);
    for i in 0..fields.len() {
        t.push(vec![
            num(fields[i]),
            num(curve.e_kp[i]),
            num(curve.e_0[i]),
            num(curve.e_g[i]),
            opt_num(curve.f[i]),
        ]);
    }
    let masked: Vec<f64> = fields.iter().zip(&curve.masked).filter(|(_, m)| **m).map(|(b, _)| *b).collect();
    Ok(Rendered {
        body: t.render(cli.common.format.unwrap_or(Format::Csv)),
        extras: Vec::new(),
        summary: json!({ "kinks": kinks, "masked_fields": masked }),
    })
}

fn regions(cli: &Cli, model: ModelKind, k: usize, tgrid: (f64, f64, f64), bgrid: (f64, f64, f64)) -> Result<Rendered, Failure> {
    check_k(k)?;
    let temps = uniform_grid(tgrid.0, tgrid.1, tgrid.2)?;
    let fields = uniform_grid(bgrid.0, bgrid.1, bgrid.2)?;
    let map = region_map(model, k, &temps, &fields, &optimizer(cli))?;
    let format = cli.common.format.unwrap_or(Format::Csv);
    let mut t = Table::new(&["T", "B", "detected"]);
    for (ti, temp) in temps.iter().enumerate() {
        for (bi, b) in fields.iter().enumerate() {
            t.push(vec![num(*temp), num(*b), u8::from(map.detect[ti][bi]).to_string()]);
        }
    }
    let mut s = Table::new(&["B", "E_kp", "T_star"]);
    for (bi, b) in fields.iter().enumerate() {
        s.push(vec![num(*b), num(map.e_kp[bi]), num(map.t_star[bi])]);
    }
    let ext = if format == Format::Csv { "tstar.csv" } else { "tstar.json" };
    Ok(Rendered {
        body: t.render(format),
        extras: vec![(ext, s.render(format))],
        summary: json!({ "downward_closed": map.is_downward_closed(), "any_detected": map.any_detected() }),
    })
}

fn reference(
    cli: &Cli,
    model: ModelKind,
    lattice: LatticeKind,
    field: f64,
    temp: f64,
    sites: Option<usize>,
) -> Result<Rendered, Failure> {
    let m = SpinModel::new(model, field)?;
    let (energy, source, sites) = match sites {
        Some(n) => {
            if lattice != LatticeKind::Chain1d {
                return Err(Failure::Unsupported("--sites applies to chain1d rings only".into()));
            }
            let ring = LatticeSpec::chain(n)?;
            let r: ThermalReference = thermal_reference(&m, Some(&ring), temp)?;
            (r.energy_per_bond, "exact_diag".to_string(), Some(n))
        }
        None if temp > 0.0 => {
            if lattice != LatticeKind::Chain1d {
                return Err(Error::NoReference(format!("thermal {model} on {lattice}; pass --sites for a ring")).into());
            }
            let r = thermal_reference(&m, None, temp)?;
            (r.energy_per_bond, "free_fermion".to_string(), None)
        }
        None => {
            if temp < 0.0 {
                return Err(Failure::Invalid(format!("temperature {temp} is negative")));
            }
            let r = ground_reference(&m, lattice)?;
            (r.energy_per_bond, r.source.name().to_string(), None)
        }
    };
    let mut t = Table::new(&["B", "T", "energy_per_bond", "source", "sites"]);
    t.push(vec![
        num(field),
        num(temp),
        num(energy),
        source,
        sites.map(|n| n.to_string()).unwrap_or_else(|| "inf".into()),
    ]);
    Ok(Rendered::plain(t.render(cli.common.format.unwrap_or(Format::Csv))))
}
