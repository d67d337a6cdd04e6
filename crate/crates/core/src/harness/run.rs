use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::{dissipation_terms, evaluate, DiagnosticsRecord, Snapshot, CSV_HEADER};
use crate::error::{QslError, Result};
use crate::geometry::{AnalyticInterface, Shape};
use crate::grid::write_snapshot;
use crate::harness::config::RunConfig;
use crate::solver::{build_initial, total_energy, SimState, Solver};

/// Per-run aggregates used by the sweep and the acceptance checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub eps: f64,
    pub h: f64,
    pub n: usize,
    pub dt: f64,
    pub steps: usize,
    pub t_final: f64,
    pub e0: f64,
    pub e_vol0: f64,
    pub e_final: f64,
    pub e_vol_final: f64,
    pub diss_parallel: f64,
    pub diss_transport: f64,
    pub sup_kinetic: f64,
    pub r_measured: Option<f64>,
    pub r_exact: Option<f64>,
    pub c0: f64,
    pub max_q: f64,
    /// Largest per-step `(E_{n+1} − E_n)/|E_n|` of kinetic + GL energy.
    pub max_energy_increase: f64,
    pub min_e: f64,
    pub min_e_vol: f64,
    pub max_lipschitz_excess: f64,
    /// Smallest coercivity quantity over all snapshots.
    pub min_coercivity: f64,
    /// Per quantity, the largest ratio to E over all snapshots.
    pub max_coercivity_ratio: [f64; 6],
    pub snapshots: usize,
    pub warnings: Vec<String>,
}

/// Machine-readable failure report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureReport {
    pub eps: f64,
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
    pub t: Option<f64>,
    pub step: usize,
}

impl FailureReport {
    pub fn new(eps: f64, step: usize, e: &QslError) -> Self {
        let (kind, t) = match e {
            QslError::Invariant { t, .. } => ("invariant", Some(*t)),
            QslError::NonConvergence { .. } => ("non_convergence", None),
            QslError::Config(_) | QslError::InvalidInput(_) | QslError::Json(_) => ("config", None),
            QslError::Io(_) => ("io", None),
        };
        Self {
            eps,
            kind: kind.into(),
            message: e.to_string(),
            exit_code: e.exit_code(),
            t,
            step,
        }
    }
}

/// A single ε run: solver, diagnostics accumulators and run-wide checks.
pub struct Simulation {
    pub config: RunConfig,
    pub eps: f64,
    pub interface: AnalyticInterface,
    pub solver: Solver,
    pub state: SimState,
    pub total_steps: usize,
    diss_parallel: f64,
    diss_transport: f64,
    prev_energy: f64,
    summary: RunSummary,
}

impl Simulation {
    pub fn new(config: &RunConfig, eps: f64) -> Result<Self> {
        let mut config = config.clone();
        config.eps_list = vec![eps];
        let warnings = config.validate()?;
        let grid = config.grid(eps)?;
        let mut opts = config.solver_options(eps, &grid);
        let dt_rule = opts.dt.expect("config sets dt");
        let total_steps = (config.t_final / dt_rule - 1e-9).ceil().max(1.0) as usize;
        let dt = config.t_final / total_steps as f64;
        opts.dt = Some(dt);
        let q0 = build_initial(grid, &config.interface, eps, config.director, &config.bulk)?;
        let sup = q0.data.iter().fold(0.0f64, |m, q| m.max(q.norm()));
        let solver = Solver::new(grid, config.bulk, eps, opts, sup)?;
        let state = solver.initial_state(q0)?;
        let e = total_energy(&state).total();
        let r_exact = config
            .interface
            .radius(config.t_final)
            .filter(|_| matches!(config.interface.shape, Shape::Circle { .. }));
        let summary = RunSummary {
            eps,
            h: grid.h,
            n: grid.nx,
            dt,
            steps: 0,
            t_final: config.t_final,
            e0: f64::NAN,
            e_vol0: f64::NAN,
            e_final: f64::NAN,
            e_vol_final: f64::NAN,
            diss_parallel: 0.0,
            diss_transport: 0.0,
            sup_kinetic: 0.0,
            r_measured: None,
            r_exact,
            c0: solver.c0,
            max_q: sup,
            max_energy_increase: f64::NEG_INFINITY,
            min_e: f64::INFINITY,
            min_e_vol: f64::INFINITY,
            max_lipschitz_excess: f64::NEG_INFINITY,
            min_coercivity: f64::INFINITY,
            max_coercivity_ratio: [f64::NEG_INFINITY; 6],
            snapshots: 0,
            warnings,
        };
        Ok(Self {
            interface: config.interface,
            config,
            eps,
            solver,
            state,
            total_steps,
            diss_parallel: 0.0,
            diss_transport: 0.0,
            prev_energy: e,
            summary,
        })
    }

    pub fn finished(&self) -> bool {
        self.state.step >= self.total_steps
    }

    /// One solver step plus the dissipation increments over it.
    pub fn step(&mut self) -> Result<()> {
        let q_prev = self.state.q.clone();
        let v_prev = (!self.config.frozen_velocity).then(|| self.state.v.to_centers());
        let t_prev = self.state.t;
        let report = self.solver.step(&mut self.state)?;
        let (dp, dtr) = dissipation_terms(
            &q_prev,
            &self.state.q,
            v_prev.as_ref(),
            &self.state.params,
            self.eps,
            &self.interface,
            t_prev,
            self.solver.dt,
        );
        self.diss_parallel += dp;
        self.diss_transport += dtr;
        let e = report.energy.total();
        let s = &mut self.summary;
        s.max_energy_increase = s.max_energy_increase.max((e - self.prev_energy) / self.prev_energy.abs());
        self.prev_energy = e;
        s.max_q = s.max_q.max(report.max_q);
        s.sup_kinetic = s.sup_kinetic.max(report.energy.kinetic);
        s.steps = self.state.step;
        s.diss_parallel = self.diss_parallel;
        s.diss_transport = self.diss_transport;
        Ok(())
    }

    /// Evaluate the diagnostics on the current state, fold them into the
    /// run checks, and fail on a negative E or E_vol or a broken Lipschitz
    /// bound.
    pub fn snapshot(&mut self) -> Result<(Snapshot, DiagnosticsRecord)> {
        let snap = evaluate(&self.state, &self.interface);
        let rec = snap.record(self.diss_parallel, self.diss_transport);
        let t = snap.t;
        if !rec.is_finite() {
            return Err(QslError::Invariant {
                t,
                what: "non-finite diagnostics".into(),
            });
        }
        if snap.e < 0.0 || snap.e_vol < 0.0 {
            return Err(QslError::Invariant {
                t,
                what: format!("negative relative entropy or bulk error: E = {}, E_vol = {}", snap.e, snap.e_vol),
            });
        }
        if snap.lipschitz_excess > 1e-10 {
            return Err(QslError::Invariant {
                t,
                what: format!("|Dd^F| exceeds sqrt(2 F_eps) by {:e}", snap.lipschitz_excess),
            });
        }
        let s = &mut self.summary;
        if s.snapshots == 0 {
            s.e0 = snap.e;
            s.e_vol0 = snap.e_vol;
        }
        s.snapshots += 1;
        s.e_final = snap.e;
        s.e_vol_final = snap.e_vol;
        s.r_measured = snap.r_measured;
        s.min_e = s.min_e.min(snap.e);
        s.min_e_vol = s.min_e_vol.min(snap.e_vol);
        s.max_lipschitz_excess = s.max_lipschitz_excess.max(snap.lipschitz_excess);
        s.max_q = s.max_q.max(snap.max_q);
        s.sup_kinetic = s.sup_kinetic.max(snap.kinetic);
        for (k, c) in snap.coercivity.iter().enumerate() {
            s.min_coercivity = s.min_coercivity.min(*c);
            s.max_coercivity_ratio[k] = s.max_coercivity_ratio[k].max(c / snap.e);
        }
        Ok((snap, rec))
    }

    pub fn summary(&self) -> &RunSummary {
        &self.summary
    }

    pub fn diss_cumulative(&self) -> (f64, f64) {
        (self.diss_parallel, self.diss_transport)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<DiagnosticsRecord>,
    pub summary: RunSummary,
    pub state: SimState,
}

/// Directory name for one ε.
pub fn run_dir(out: &Path, eps: f64) -> PathBuf {
    out.join(format!("eps_{eps:.4}"))
}

/// Step from the initial data to `t_final`, recording diagnostics every
/// `snapshot_every` steps. With `out` set, writes `diagnostics.csv`,
/// `config.json` and `run_summary.json`; on failure the CSV ends with a
/// `FAILED` row and `failure.json` describes the error.
pub fn run_single(config: &RunConfig, eps: f64, out: Option<&Path>) -> Result<RunOutput> {
    let mut csv = None;
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        let mut materialized = config.clone();
        materialized.eps_list = vec![eps];
        fs::write(dir.join("config.json"), materialized.to_json())?;
        let mut w = BufWriter::new(File::create(dir.join("diagnostics.csv"))?);
        writeln!(w, "{CSV_HEADER}")?;
        csv = Some(w);
    }
    let mut records = Vec::new();
    let mut sim = match Simulation::new(config, eps) {
        Ok(s) => s,
        Err(e) => {
            fail(out, &mut csv, &FailureReport::new(eps, 0, &e))?;
            return Err(e);
        }
    };
    let result = drive(&mut sim, &mut records, &mut csv, out);
    match result {
        Ok(()) => {
            if let Some(mut w) = csv {
                w.flush()?;
            }
            if let Some(dir) = out {
                fs::write(
                    dir.join("run_summary.json"),
                    serde_json::to_string_pretty(sim.summary())?,
                )?;
            }
            Ok(RunOutput {
                records,
                summary: sim.summary().clone(),
                state: sim.state,
            })
        }
        Err(e) => {
            fail(out, &mut csv, &FailureReport::new(eps, sim.state.step, &e))?;
            Err(e)
        }
    }
}

fn drive(
    sim: &mut Simulation,
    records: &mut Vec<DiagnosticsRecord>,
    csv: &mut Option<BufWriter<File>>,
    out: Option<&Path>,
) -> Result<()> {
    let every = sim.config.snapshot_every;
    let field_every = sim.config.field_snapshot_every;
    let mut emit = |sim: &mut Simulation, records: &mut Vec<DiagnosticsRecord>| -> Result<()> {
        let (_, rec) = sim.snapshot()?;
        if let Some(w) = csv.as_mut() {
            writeln!(w, "{}", rec.csv_row())?;
        }
        records.push(rec);
        Ok(())
    };
    emit(sim, records)?;
    while !sim.finished() {
        sim.step()?;
        let k = sim.state.step;
        if k % every == 0 || sim.finished() {
            emit(sim, records)?;
        }
        if let (Some(dir), true) = (out, field_every > 0 && k % field_every == 0) {
            write_snapshot(&sim.state.q, BufWriter::new(File::create(dir.join(format!("q_{k:07}.qslf")))?))?;
        }
    }
    Ok(())
}

fn fail(out: Option<&Path>, csv: &mut Option<BufWriter<File>>, report: &FailureReport) -> Result<()> {
    if let Some(w) = csv.as_mut() {
        writeln!(w, "FAILED,{}", report.message.replace([',', '\n'], ";"))?;
        w.flush()?;
    }
    if let Some(dir) = out {
        fs::write(dir.join("failure.json"), serde_json::to_string_pretty(report)?)?;
    }
    Ok(())
}
