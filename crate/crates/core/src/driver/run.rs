use std::fmt::Write as _;
use std::path::PathBuf;

use crate::driver::config::SimulationConfig;
use crate::driver::scenario::{build_scenario, Scenario};
use crate::driver::snapshot::{write_snapshot, write_vtk};
use crate::error::{Error, Result};
use crate::flow::{FluxFunction, RockFluidModel};
use crate::grid::{total_mass, CellField, FaceVelocityField, VertexVelocityField};
use crate::integrator::{rk2_step, CflPolicy};
use crate::pressure::{assemble, solve_pressure_with, vertex_velocities, CgOptions};
use crate::scheme::Transport;

/// Pressure and the velocity fields derived from it.
#[derive(Clone, Debug)]
pub struct VelocityState {
    pub pressure: CellField,
    pub faces: FaceVelocityField,
    pub vertex: VertexVelocityField,
    pub cg_iterations: usize,
}

/// Solves for pressure with the current saturation and interpolates the
/// resulting face velocities to vertices.
pub fn solve_velocity(
    scenario: &Scenario,
    s: &CellField,
    model: &RockFluidModel,
    warm_start: Option<&CellField>,
) -> Result<VelocityState> {
    let system = assemble(s, &scenario.permeability, model, &scenario.wells, &scenario.boundary_velocity)?;
    let sol = solve_pressure_with(&system, warm_start, CgOptions::default())?;
    let faces = system.face_velocities(&sol.pressure);
    let vertex = vertex_velocities(&faces);
    Ok(VelocityState {
        pressure: sol.pressure,
        faces,
        vertex,
        cg_iterations: sol.iterations,
    })
}

/// Convection operator for one frozen velocity field.
pub fn make_transport(cfg: &SimulationConfig, scenario: &Scenario, model: &RockFluidModel, vel: &VelocityState) -> Transport<RockFluidModel> {
    Transport::new(
        model.clone(),
        cfg.scheme,
        cfg.theta,
        scenario.boundary,
        vel.vertex.clone(),
        vel.faces.clone(),
    )
}

/// Initial CG iterate: linear extrapolation in time from the last two
/// pressure solutions, or the last one alone.
pub fn pressure_guess(history: &[(f64, CellField)], t: f64) -> Option<CellField> {
    match history {
        [] => None,
        [(_, p)] => Some(p.clone()),
        [.., (t0, p0), (t1, p1)] => {
            let w = (t - t1) / (t1 - t0);
            let values = p1.values().iter().zip(p0.values()).map(|(a, b)| a + w * (a - b)).collect();
            Some(CellField::from_values(*p1.grid(), values).expect("same grid"))
        }
    }
}

/// CFL step for a transport operator and state: `max|f'|` over the current
/// saturation range (including injected water) times the largest transport
/// velocity per direction.
pub fn transport_dt<F: FluxFunction>(transport: &Transport<F>, s: &CellField, policy: &CflPolicy) -> f64 {
    let (mx, my) = transport.max_velocity();
    let fmax = transport.wave_speed(s);
    policy.dt_from_speeds(transport.grid(), mx * fmax, my * fmax)
}

/// State after one convection micro-step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub time: f64,
    pub dt: f64,
    /// `Σ S̄·|cell|` after the step.
    pub mass: f64,
    /// Net water volume that has entered since `t = 0`.
    pub net_water_in: f64,
    /// Water fraction of the produced stream.
    pub water_cut: f64,
    pub min_saturation: f64,
    pub max_saturation: f64,
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub time: f64,
    pub state: CellField,
}

#[derive(Clone, Debug)]
pub struct SimulationRecord {
    pub initial_mass: f64,
    pub history: Vec<StepRecord>,
    pub snapshot_times: Vec<f64>,
    pub final_state: CellField,
    pub final_time: f64,
    pub micro_steps: usize,
    pub pressure_solves: usize,
    /// Conjugate-gradient iterations summed over all pressure solves.
    pub cg_iterations: usize,
}

impl SimulationRecord {
    /// Largest `|mass(t) - mass(0) - net inflow(t)| / mass(t)` over the run.
    pub fn max_mass_balance_error(&self) -> f64 {
        self.history
            .iter()
            .map(|h| ((h.mass - self.initial_mass) - h.net_water_in).abs() / h.mass.abs())
            .fold(0.0, f64::max)
    }

    pub fn saturation_range(&self) -> (f64, f64) {
        self.history
            .iter()
            .fold((self.final_state.min(), self.final_state.max()), |(lo, hi), h| {
                (lo.min(h.min_saturation), hi.max(h.max_saturation))
            })
    }

    /// First time the produced water cut exceeds `threshold`.
    pub fn breakthrough_time(&self, threshold: f64) -> Option<f64> {
        self.history.iter().find(|h| h.water_cut > threshold).map(|h| h.time)
    }

    pub fn history_csv(&self) -> String {
        let mut out = String::from("time,dt,mass,net_water_in,water_cut,min_saturation,max_saturation\n");
        for h in &self.history {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                h.time, h.dt, h.mass, h.net_water_in, h.water_cut, h.min_saturation, h.max_saturation
            );
        }
        out
    }
}

fn at(time: f64) -> impl Fn(Error) -> Error {
    move |e| Error::AtTime {
        time,
        source: Box::new(e),
    }
}

/// Runs the splitting loop, handing each snapshot to `sink`.
///
/// Pressure is solved with the current saturation, then the saturation is
/// advanced by CFL-limited Heun micro-steps until the pressure interval (days
/// or step count) is used up. The step size is recomputed from the current
/// state before every micro-step, and micro-steps are clipped to land exactly on
/// snapshot times and on `total_time`. A final snapshot is emitted when the
/// end state was not already one.
pub fn run_with(
    cfg: &SimulationConfig,
    scenario: &Scenario,
    mut sink: impl FnMut(&Snapshot) -> Result<()>,
) -> Result<SimulationRecord> {
    cfg.validate()?;
    let model = cfg.model()?;
    let policy = cfg.cfl_policy()?;
    let mut times: Vec<f64> = cfg.snapshot_times.iter().copied().filter(|&t| t <= cfg.total_time).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();

    let mut s = scenario.initial.clone();
    let mut t = 0.0;
    let mut rec = SimulationRecord {
        initial_mass: total_mass(&s),
        history: Vec::new(),
        snapshot_times: Vec::new(),
        final_state: s.clone(),
        final_time: 0.0,
        micro_steps: 0,
        pressure_solves: 0,
        cg_iterations: 0,
    };
    let mut next_snap = 0;
    let mut emit = |state: &CellField, time: f64, rec: &mut SimulationRecord| -> Result<()> {
        sink(&Snapshot {
            time,
            state: state.clone(),
        })?;
        rec.snapshot_times.push(time);
        Ok(())
    };
    while next_snap < times.len() && times[next_snap] <= t {
        emit(&s, t, &mut rec)?;
        next_snap += 1;
    }

    let mut net_in = 0.0;
    // The last two pressure solutions with their times, for the warm start.
    let mut history: Vec<(f64, CellField)> = Vec::with_capacity(2);
    let stop_after = cfg.stop_after_micro_steps.unwrap_or(usize::MAX);
    'outer: while t < cfg.total_time && rec.micro_steps < stop_after {
        let guess = pressure_guess(&history, t);
        let vel = solve_velocity(scenario, &s, &model, guess.as_ref()).map_err(at(t))?;
        rec.pressure_solves += 1;
        rec.cg_iterations += vel.cg_iterations;
        let transport = make_transport(cfg, scenario, &model, &vel);
        if history.len() == 2 {
            history.remove(0);
        }
        history.push((t, vel.pressure));
        let t_end = (t + cfg.pressure_interval_days).min(cfg.total_time);

        let mut local = 0;
        while t < t_end && local < cfg.pressure_interval_steps {
            if rec.micro_steps >= cfg.max_micro_steps {
                return Err(at(t)(Error::StepLimit {
                    limit: cfg.max_micro_steps,
                }));
            }
            let stop = times.get(next_snap).map_or(t_end, |&ts| ts.min(t_end));
            let dt_c = transport_dt(&transport, &s, &policy);
            let (dt, t_next) = if t + dt_c >= stop { (stop - t, stop) } else { (dt_c, t + dt_c) };
            let step = rk2_step(&s, dt, |x| transport.rhs(x)).map_err(at(t))?;
            s = step.state;
            net_in += step.water_in;
            t = t_next;
            rec.micro_steps += 1;
            local += 1;
            rec.history.push(StepRecord {
                time: t,
                dt,
                mass: total_mass(&s),
                net_water_in: net_in,
                water_cut: transport.production(&s).water_fraction(),
                min_saturation: s.min(),
                max_saturation: s.max(),
            });
            while next_snap < times.len() && times[next_snap] <= t {
                emit(&s, t, &mut rec)?;
                next_snap += 1;
            }
            if rec.micro_steps >= stop_after {
                break 'outer;
            }
        }
    }

    if rec.snapshot_times.last() != Some(&t) {
        emit(&s, t, &mut rec)?;
    }
    rec.final_state = s;
    rec.final_time = t;
    Ok(rec)
}

/// File name of the saturation snapshot at time `t`.
pub fn snapshot_file_name(t: f64, extension: &str) -> String {
    format!("saturation_t{t}.{extension}")
}

/// Builds the scenario and runs it, writing `permeability.csv`, saturation
/// snapshots (CSV, plus VTK when enabled) and `history.csv` into
/// `output_dir`.
pub fn run(cfg: &SimulationConfig) -> Result<(SimulationRecord, Vec<PathBuf>)> {
    let scenario = build_scenario(cfg)?;
    let dir = cfg.output_dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let perm_path = dir.join("permeability.csv");
    write_snapshot(&scenario.permeability, 0.0, &perm_path)?;
    let mut written = vec![perm_path];
    let record = run_with(cfg, &scenario, |snap| {
        let csv = dir.join(snapshot_file_name(snap.time, "csv"));
        write_snapshot(&snap.state, snap.time, &csv)?;
        written.push(csv);
        if cfg.write_vtk {
            let vtk = dir.join(snapshot_file_name(snap.time, "vtk"));
            write_vtk(&snap.state, snap.time, "saturation", &vtk)?;
            written.push(vtk);
        }
        Ok(())
    })?;
    if cfg.write_history {
        let path = dir.join("history.csv");
        std::fs::write(&path, record.history_csv()).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok((record, written))
}
