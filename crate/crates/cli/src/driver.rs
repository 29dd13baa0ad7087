//! Experiment drivers: each turns a validated [`Config`] into solver runs
//! and CSV-ready rows. Levels run in parallel (capped by `threads`) and the
//! output order never depends on completion order.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use biot_split_core::analytic::{
    convergence_rate, displacement_energy_error, pressure_l2_error, BarryMercer, Manufactured,
};
use biot_split_core::fespace::{eval_scalar, eval_vector};
use biot_split_core::mesh::RectMesh;
use biot_split_core::schemes::{
    run_simulation, Discretization, InitMode, RunOptions, SchemeConfig, SchemeKind, State,
};
use biot_split_core::Error;

use crate::config::{Config, Level};
use crate::csv::fmt_sci;

/// Quadrature degree for all reported error norms.
const ERROR_QUAD: usize = 5;

/// Sampling line for the point-source benchmark plots.
const LINE_X: f64 = 0.25;

/// Runs `f(0..n)` on up to `threads` worker threads, returning results in
/// index order.
fn parallel_map<T, F>(n: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = threads.max(1).min(n.max(1));
    if workers == 1 {
        return (0..n).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<T>>> = (0..n).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let value = f(i);
                *slots[i].lock().unwrap() = Some(value);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("worker filled the slot"))
        .collect()
}

/// Final-time errors of one convergence level, for the decoupled scheme and
/// the monolithic reference on the same discretization.
#[derive(Debug, Clone, Copy)]
pub struct LevelErrors {
    pub p_fully: f64,
    pub p_dec: f64,
    pub u_fully: f64,
    pub u_dec: f64,
}

#[derive(Debug)]
pub struct LevelResult {
    pub nx: usize,
    pub tau: f64,
    pub outcome: Result<LevelErrors, Error>,
}

fn solve_level(cfg: &Config, level: Level) -> Result<LevelErrors, Error> {
    let mesh = RectMesh::unit(level.nx, level.nx)?;
    let disc = Discretization::new(mesh, cfg.element, cfg.params, cfg.dirichlet_mode())?;
    let problem = Manufactured::new(cfg.params);
    let opts = RunOptions {
        tau: level.tau,
        n_steps: level.n_steps,
        t0: 0.0,
        init: InitMode::Interpolate,
        keep_all: false,
    };
    let dec = run_simulation(&disc, &problem, &cfg.scheme, &opts)?;
    let mono_cfg = SchemeConfig {
        kind: SchemeKind::Monolithic,
        ..cfg.scheme
    };
    let mono = run_simulation(&disc, &problem, &mono_cfg, &opts)?;
    let t = cfg.t_final;
    let errors_of = |state: &State| -> Result<(f64, f64), Error> {
        let p_err = pressure_l2_error(
            &disc.mesh,
            &disc.pspace,
            &state.p,
            &|x, y| problem.pressure(x, y, t),
            ERROR_QUAD,
        )?;
        let u_err = displacement_energy_error(
            &disc.mesh,
            &disc.uspace,
            &state.u,
            &|x, y| problem.displacement_gradient(x, y, t),
            cfg.params.mu,
            cfg.params.lambda,
            ERROR_QUAD,
        )?;
        Ok((p_err, u_err))
    };
    let (p_dec, u_dec) = errors_of(&dec.final_state)?;
    let (p_fully, u_fully) = errors_of(&mono.final_state)?;
    Ok(LevelErrors {
        p_fully,
        p_dec,
        u_fully,
        u_dec,
    })
}

pub fn run_converge(cfg: &Config, threads: usize) -> Vec<LevelResult> {
    parallel_map(cfg.levels.len(), threads, |i| {
        let level = cfg.levels[i];
        LevelResult {
            nx: level.nx,
            tau: level.tau,
            outcome: solve_level(cfg, level),
        }
    })
}

pub const CONVERGE_HEADER: [&str; 8] = [
    "h",
    "tau",
    "p_err_fully",
    "p_err_dec",
    "p_rate",
    "u_err_fully",
    "u_err_dec",
    "u_rate",
];

/// Renders convergence results as CSV rows. Rates compare the decoupled
/// error against the previous level and stay empty where undefined; failed
/// levels keep their h and tau cells and carry a tag instead of numbers.
pub fn converge_csv_rows(results: &[LevelResult]) -> Vec<Vec<String>> {
    let mut rows = Vec::with_capacity(results.len());
    for (i, r) in results.iter().enumerate() {
        let h = fmt_sci(1.0 / r.nx as f64);
        let tau = fmt_sci(r.tau);
        match &r.outcome {
            Ok(e) => {
                let prev = i
                    .checked_sub(1)
                    .and_then(|j| results[j].outcome.as_ref().ok());
                let rate = |get: fn(&LevelErrors) -> f64| -> String {
                    match prev {
                        Some(pe) if get(pe) > 0.0 && get(e) > 0.0 => {
                            fmt_sci(convergence_rate(get(pe), get(e)))
                        }
                        _ => String::new(),
                    }
                };
                rows.push(vec![
                    h,
                    tau,
                    fmt_sci(e.p_fully),
                    fmt_sci(e.p_dec),
                    rate(|e| e.p_dec),
                    fmt_sci(e.u_fully),
                    fmt_sci(e.u_dec),
                    rate(|e| e.u_dec),
                ]);
            }
            Err(err) => {
                let tag = match err {
                    Error::Instability { step } => format!("unstable(step={step})"),
                    _ => "failed".into(),
                };
                rows.push(vec![
                    h,
                    tau,
                    tag.clone(),
                    tag.clone(),
                    String::new(),
                    tag.clone(),
                    tag,
                    String::new(),
                ]);
            }
        }
    }
    rows
}

/// Exit-code classification of a batch of level outcomes: instability wins
/// over other solver failures.
pub fn classify_failures(results: &[LevelResult]) -> Option<i32> {
    let mut code = None;
    for r in results {
        match &r.outcome {
            Ok(_) => {}
            Err(Error::Instability { .. }) => return Some(4),
            Err(_) => code = Some(3),
        }
    }
    code
}

/// Line samples of the point-source benchmark at the final time: exact
/// series values next to the decoupled and monolithic FE solutions.
#[derive(Debug)]
pub struct BmOutput {
    pub ys: Vec<f64>,
    pub p_exact: Vec<f64>,
    pub p_dec: Vec<f64>,
    pub p_fully: Vec<f64>,
    pub u_exact: Vec<f64>,
    pub u_dec: Vec<f64>,
    pub u_fully: Vec<f64>,
    pub v_exact: Vec<f64>,
    pub v_dec: Vec<f64>,
    pub v_fully: Vec<f64>,
}

pub fn run_barry_mercer(cfg: &Config, threads: usize) -> Result<BmOutput, Error> {
    let level = cfg.levels[0];
    let set = cfg
        .barry_mercer
        .expect("validated barry_mercer config has a settings section");
    let bm = BarryMercer::new(cfg.params, set.x0, set.y0, set.n_modes)?;
    let mesh = RectMesh::unit(level.nx, level.nx)?;
    let disc = Discretization::new(mesh, cfg.element, cfg.params, cfg.dirichlet_mode())?;
    let opts = RunOptions {
        tau: level.tau,
        n_steps: level.n_steps,
        t0: 0.0,
        init: InitMode::Interpolate,
        keep_all: false,
    };
    let mono_cfg = SchemeConfig {
        kind: SchemeKind::Monolithic,
        ..cfg.scheme
    };
    let runs = parallel_map(2, threads, |i| {
        let scheme = if i == 0 { &cfg.scheme } else { &mono_cfg };
        run_simulation(&disc, &bm, scheme, &opts)
    });
    let mut runs = runs.into_iter();
    let dec = runs.next().unwrap()?;
    let mono = runs.next().unwrap()?;

    let t = cfg.t_final;
    let ny = level.nx;
    let n = ny + 1;
    let mut out = BmOutput {
        ys: Vec::with_capacity(n),
        p_exact: Vec::with_capacity(n),
        p_dec: Vec::with_capacity(n),
        p_fully: Vec::with_capacity(n),
        u_exact: Vec::with_capacity(n),
        u_dec: Vec::with_capacity(n),
        u_fully: Vec::with_capacity(n),
        v_exact: Vec::with_capacity(n),
        v_dec: Vec::with_capacity(n),
        v_fully: Vec::with_capacity(n),
    };
    for j in 0..=ny {
        let y = j as f64 / ny as f64;
        let (tri, lambda) = disc.mesh.locate_point(LINE_X, y)?;
        out.ys.push(y);
        out.p_exact.push(bm.pressure(LINE_X, y, t));
        out.p_dec
            .push(eval_scalar(&disc.pspace, &dec.final_state.p, tri, lambda));
        out.p_fully
            .push(eval_scalar(&disc.pspace, &mono.final_state.p, tri, lambda));
        let [ue, ve] = bm.displacement(LINE_X, y, t);
        let [ud, vd] = eval_vector(&disc.uspace, &dec.final_state.u, tri, lambda);
        let [uf, vf] = eval_vector(&disc.uspace, &mono.final_state.u, tri, lambda);
        out.u_exact.push(ue);
        out.u_dec.push(ud);
        out.u_fully.push(uf);
        out.v_exact.push(ve);
        out.v_dec.push(vd);
        out.v_fully.push(vf);
    }
    Ok(out)
}

pub const BARRY_MERCER_HEADER: [&str; 10] = [
    "y", "p_exact", "p_dec", "p_fully", "u_exact", "u_dec", "u_fully", "v_exact", "v_dec",
    "v_fully",
];

pub fn barry_mercer_csv_rows(out: &BmOutput) -> Vec<Vec<String>> {
    (0..out.ys.len())
        .map(|j| {
            vec![
                fmt_sci(out.ys[j]),
                fmt_sci(out.p_exact[j]),
                fmt_sci(out.p_dec[j]),
                fmt_sci(out.p_fully[j]),
                fmt_sci(out.u_exact[j]),
                fmt_sci(out.u_dec[j]),
                fmt_sci(out.u_fully[j]),
                fmt_sci(out.v_exact[j]),
                fmt_sci(out.v_dec[j]),
                fmt_sci(out.v_fully[j]),
            ]
        })
        .collect()
}

pub const SNAPSHOT_HEADER: [&str; 5] = ["step", "time", "dof", "index", "value"];

/// Runs a single simulation and dumps every state: one row per degree of
/// freedom per time level.
pub fn run_single_dump(cfg: &Config) -> Result<Vec<Vec<String>>, Error> {
    let level = cfg.levels[0];
    let mesh = RectMesh::unit(level.nx, level.nx)?;
    let disc = Discretization::new(mesh, cfg.element, cfg.params, cfg.dirichlet_mode())?;
    let problem = Manufactured::new(cfg.params);
    let opts = RunOptions {
        tau: level.tau,
        n_steps: level.n_steps,
        t0: 0.0,
        init: InitMode::Interpolate,
        keep_all: true,
    };
    let sim = run_simulation(&disc, &problem, &cfg.scheme, &opts)?;
    let states = sim.states.expect("keep_all retains the trajectory");
    let mut rows =
        Vec::with_capacity(states.len() * (disc.uspace.n_dofs + disc.pspace.n_dofs));
    for (step, s) in states.iter().enumerate() {
        let time = fmt_sci(s.t);
        for (i, &v) in s.u.iter().enumerate() {
            rows.push(vec![
                step.to_string(),
                time.clone(),
                "u".into(),
                i.to_string(),
                fmt_sci(v),
            ]);
        }
        for (i, &v) in s.p.iter().enumerate() {
            rows.push(vec![
                step.to_string(),
                time.clone(),
                "p".into(),
                i.to_string(),
                fmt_sci(v),
            ]);
        }
    }
    Ok(rows)
}
