//! Built-in verification cases and the measurements derived from their runs:
//! a drained soil column under a surface step load (wave propagation and
//! consolidation), a half soil block with a partially loaded surface
//! (conductivity-dependent damping) and a cantilever bracket at very low
//! conductivity (pressure checkerboarding of unstable pairs).

use crate::assembly::{
    assemble, BcRegion, BcSpec, DofMap, ElementKind, FluidBc, LoadHistory, LoadSet, MassMode,
    MaterialParams, SkeletonBc, SystemMatrices,
};
use crate::basis::eval_rt0;
use crate::linalg::norm2;
use crate::mesh::{generate, Mesh, MeshPattern, MeshSpec, Side};
use crate::timestep::{EnergyLedger, State, Stepper};
use crate::{Error, Result, Scalar};

/// What a probe samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeKind {
    DisplacementX,
    DisplacementY,
    VelocityX,
    VelocityY,
    /// Elemental pressure of the triangle nearest the point.
    Pressure,
    /// Interpolated Darcy velocity at the centroid of the nearest triangle.
    DarcyX,
    DarcyY,
    /// Raw edge-normal flux dof of the nearest edge.
    EdgeFlux,
}

#[derive(Debug, Clone)]
pub struct Probe<T> {
    pub label: String,
    pub kind: ProbeKind,
    pub at: [T; 2],
}

impl<T: Scalar> Probe<T> {
    pub fn new(label: &str, kind: ProbeKind, at: [T; 2]) -> Self {
        Self {
            label: label.to_string(),
            kind,
            at,
        }
    }
}

/// Records the vertical displacement along a vertical grid line, for wave
/// front tracking.
#[derive(Debug, Clone)]
pub struct ProfileSpec<T> {
    /// x coordinate of the grid line.
    pub x: T,
    /// record every `stride` steps.
    pub stride: usize,
}

/// A reproducible simulation setup.
#[derive(Debug, Clone)]
pub struct BenchmarkCase<T> {
    pub name: String,
    pub mesh_spec: MeshSpec<T>,
    pub material: MaterialParams<T>,
    pub bc: BcSpec<T>,
    pub dt: T,
    pub duration: T,
    pub probes: Vec<Probe<T>>,
    pub snapshot_times: Vec<T>,
    pub profile: Option<ProfileSpec<T>>,
}

fn roller_impermeable<T: Scalar>(side: Side) -> BcRegion<T> {
    BcSpec::side(side, SkeletonBc::NormalFixed, FluidBc::Impermeable)
}

/// Soil column 0.1 m x 10 m under a 3 kPa step on the drained top surface;
/// sides and bottom are rollers and impermeable. 400 crisscross triangles,
/// dt = 1e-4 s.
pub fn column_ex1<T: Scalar>() -> BenchmarkCase<T> {
    let traction = [T::zero(), T::of(-3000.0)];
    BenchmarkCase {
        name: "column_ex1".into(),
        mesh_spec: MeshSpec::new(T::of(0.1), T::of(10.0), 1, 100, MeshPattern::Crisscross),
        material: MaterialParams::new(
            T::of(14.516e6),
            T::of(0.3),
            T::of(2000.0),
            T::of(1000.0),
            T::of(0.33),
            T::of(1e-2),
        )
        .expect("material"),
        bc: BcSpec::new(vec![
            roller_impermeable(Side::Left),
            roller_impermeable(Side::Right),
            roller_impermeable(Side::Bottom),
            BcSpec::side(
                Side::Top,
                SkeletonBc::Traction {
                    traction,
                    history: LoadHistory::Step,
                },
                FluidBc::Drained {
                    pressure: T::zero(),
                    history: LoadHistory::Step,
                },
            ),
        ]),
        dt: T::of(1e-4),
        duration: T::of(7.0),
        probes: vec![
            Probe::new("top_uy", ProbeKind::DisplacementY, [T::zero(), T::of(10.0)]),
            Probe::new("vy_z9", ProbeKind::VelocityY, [T::zero(), T::of(9.0)]),
            Probe::new("p_z9_95", ProbeKind::Pressure, [T::of(0.05), T::of(9.95)]),
            Probe::new("p_z5", ProbeKind::Pressure, [T::of(0.05), T::of(5.0)]),
        ],
        snapshot_times: vec![T::of(0.025), T::of(0.075), T::of(0.15)],
        profile: Some(ProfileSpec {
            x: T::zero(),
            stride: 5,
        }),
    }
}

/// Half soil block 2 m x 1 m, 15 kPa step on the left half of the top
/// surface; only the unloaded top part drains. `cells_per_meter` controls
/// refinement (4 = the default coarse level, 16 = fine).
pub fn block_ex2_custom<T: Scalar>(
    hydraulic_conductivity: T,
    pattern: MeshPattern,
    cells_per_meter: usize,
) -> BenchmarkCase<T> {
    let traction = [T::zero(), T::of(-15000.0)];
    let kh = hydraulic_conductivity;
    BenchmarkCase {
        name: format!("block_ex2_kh{:.0e}", kh.to_f64_lossy()),
        mesh_spec: MeshSpec::new(
            T::of(2.0),
            T::one(),
            2 * cells_per_meter,
            cells_per_meter,
            pattern,
        ),
        material: MaterialParams::new(
            T::of(14.516e6),
            T::of(0.3),
            T::of(2700.0),
            T::of(1000.0),
            T::of(0.42),
            kh,
        )
        .expect("material"),
        bc: BcSpec::new(vec![
            roller_impermeable(Side::Left),
            roller_impermeable(Side::Right),
            roller_impermeable(Side::Bottom),
            BcRegion {
                side: Side::Top,
                span: Some((T::zero(), T::one())),
                skeleton: SkeletonBc::Traction {
                    traction,
                    history: LoadHistory::Step,
                },
                fluid: FluidBc::Impermeable,
            },
            BcRegion {
                side: Side::Top,
                span: Some((T::one(), T::of(2.0))),
                skeleton: SkeletonBc::Free,
                fluid: FluidBc::Drained {
                    pressure: T::zero(),
                    history: LoadHistory::Step,
                },
            },
        ]),
        dt: T::of(5e-3),
        duration: T::of(2.0),
        probes: vec![
            Probe::new(
                "corner1_uy",
                ProbeKind::DisplacementY,
                [T::zero(), T::one()],
            ),
            Probe::new(
                "corner2_uy",
                ProbeKind::DisplacementY,
                [T::of(2.0), T::one()],
            ),
            Probe::new("corner1_vy", ProbeKind::VelocityY, [T::zero(), T::one()]),
            Probe::new("corner1_wy", ProbeKind::DarcyY, [T::of(0.05), T::of(0.95)]),
            Probe::new("corner1_p", ProbeKind::Pressure, [T::of(0.05), T::of(0.95)]),
        ],
        snapshot_times: vec![T::of(0.1), T::of(0.9)],
        profile: None,
    }
}

/// Default soil block configuration (crisscross, coarse level).
pub fn block_ex2<T: Scalar>(hydraulic_conductivity: T) -> BenchmarkCase<T> {
    block_ex2_custom(hydraulic_conductivity, MeshPattern::Crisscross, 4)
}

/// Cantilever square bracket 1 m x 1 m, left edge fully fixed, every side
/// impermeable, 1 kPa step on top; very low conductivity. The criss pattern
/// shows the pressure checkerboard of the unstable linear pair most clearly.
pub fn bracket_ex3_refined<T: Scalar>(cells_per_side: usize) -> BenchmarkCase<T> {
    let traction = [T::zero(), T::of(-1000.0)];
    BenchmarkCase {
        name: "bracket_ex3".into(),
        mesh_spec: MeshSpec::new(
            T::one(),
            T::one(),
            cells_per_side,
            cells_per_side,
            MeshPattern::Criss,
        ),
        material: MaterialParams::new(
            T::of(1e4),
            T::of(0.4),
            T::of(2667.0),
            T::of(1000.0),
            T::of(0.4),
            T::of(1e-7),
        )
        .expect("material"),
        bc: BcSpec::new(vec![
            BcSpec::side(Side::Left, SkeletonBc::FullyFixed, FluidBc::Impermeable),
            BcSpec::side(Side::Right, SkeletonBc::Free, FluidBc::Impermeable),
            BcSpec::side(Side::Bottom, SkeletonBc::Free, FluidBc::Impermeable),
            BcSpec::side(
                Side::Top,
                SkeletonBc::Traction {
                    traction,
                    history: LoadHistory::Step,
                },
                FluidBc::Impermeable,
            ),
        ]),
        dt: T::of(5e-3),
        duration: T::of(4.2),
        probes: vec![
            Probe::new("tip_uy", ProbeKind::DisplacementY, [T::one(), T::one()]),
            Probe::new("p_mid", ProbeKind::Pressure, [T::of(0.25), T::of(0.5)]),
        ],
        snapshot_times: vec![T::of(0.3), T::of(2.5), T::of(4.1)],
        profile: None,
    }
}

pub fn bracket_ex3<T: Scalar>() -> BenchmarkCase<T> {
    bracket_ex3_refined(8)
}

/// Case lookup for the command-line interface.
pub fn case_by_name<T: Scalar>(name: &str) -> Result<BenchmarkCase<T>> {
    match name {
        "column_ex1" => Ok(column_ex1()),
        "block_ex2_k1" => Ok(block_ex2(T::of(1e-1))),
        "block_ex2_k4" => Ok(block_ex2(T::of(1e-4))),
        "bracket_ex3" => Ok(bracket_ex3()),
        other => Err(Error::InvalidParameter(format!(
            "unknown benchmark case `{other}`"
        ))),
    }
}

/// Algebraic initialization of the first state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IcMode {
    /// Solve the full system plus the differentiated constraint.
    Consistent,
    /// `p0 = 0` with accelerations from the momentum rows alone
    /// (demonstrates the pressure oscillation artifact).
    NaiveZero,
    /// Every field zero, no solve. The only option when the lumped mass is
    /// singular (Lobatto-lumped quadratic elements).
    Rest,
}

/// Per-run knobs that are not part of the case definition.
#[derive(Debug, Clone)]
pub struct RunOptions<T> {
    pub element: ElementKind,
    pub mass: MassMode,
    pub ic: IcMode,
    /// Abort the run (flagging `stopped_early`) once the skeleton velocity
    /// norm exceeds this; used by the instability sentinels.
    pub velocity_blowup_stop: Option<T>,
    pub duration_override: Option<T>,
}

impl<T: Scalar> RunOptions<T> {
    pub fn new(element: ElementKind, mass: MassMode) -> Self {
        Self {
            element,
            mass,
            ic: IcMode::Consistent,
            velocity_blowup_stop: None,
            duration_override: None,
        }
    }
}

/// One energy row of the time history.
#[derive(Debug, Clone, Copy)]
pub struct EnergySample<T> {
    pub kinetic_skeleton: T,
    pub kinetic_fluid: T,
    pub strain: T,
    pub damping: T,
    pub input: T,
    pub constraint: T,
    pub balance_error: T,
}

#[derive(Debug, Clone)]
pub struct Snapshot<T> {
    pub t: T,
    pub pressure: Vec<T>,
    /// Darcy velocity interpolated at each element centroid.
    pub velocity: Vec<[T; 2]>,
}

#[derive(Debug, Clone)]
pub struct ProfileSeries<T> {
    /// Sample positions along the line, ascending.
    pub positions: Vec<T>,
    pub times: Vec<T>,
    /// `values[k]` is the displacement profile at `times[k]`.
    pub values: Vec<Vec<T>>,
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunArtifacts<T> {
    pub name: String,
    pub element: ElementKind,
    pub mass: MassMode,
    pub mesh: Mesh<T>,
    pub dofs: DofMap<T>,
    pub dt: T,
    pub times: Vec<T>,
    pub probe_labels: Vec<String>,
    /// `probes[i][k]` = probe `i` at `times[k]`.
    pub probes: Vec<Vec<T>>,
    pub energy: Vec<EnergySample<T>>,
    pub snapshots: Vec<Snapshot<T>>,
    pub profile: Option<ProfileSeries<T>>,
    pub initial_pressure: Vec<T>,
    pub final_state: State<T>,
    pub ledger: EnergyLedger<T>,
    pub max_velocity_norm: T,
    pub max_constraint_rel: T,
    pub max_balance_error: T,
    /// Sum of step-to-step pressure changes over the first 50 steps.
    pub early_pressure_total_variation: T,
    pub stopped_early: bool,
}

enum ResolvedProbe<T> {
    Disp(usize),
    Vel(usize),
    Pressure(usize),
    /// (element, per-edge dof and centroid basis value for one component)
    Darcy(Vec<(usize, T)>),
    EdgeFlux(usize),
}

fn resolve_probe<T: Scalar>(
    mesh: &Mesh<T>,
    dofs: &DofMap<T>,
    probe: &Probe<T>,
) -> Result<ResolvedProbe<T>> {
    let unresolved = || Error::ProbeUnresolved(probe.label.clone());
    match probe.kind {
        ProbeKind::DisplacementX
        | ProbeKind::DisplacementY
        | ProbeKind::VelocityX
        | ProbeKind::VelocityY => {
            let node = mesh.nearest_node(probe.at);
            let comp = match probe.kind {
                ProbeKind::DisplacementX | ProbeKind::VelocityX => 0,
                _ => 1,
            };
            let dof = dofs.disp_dof[node][comp].ok_or_else(unresolved)?;
            match probe.kind {
                ProbeKind::DisplacementX | ProbeKind::DisplacementY => Ok(ResolvedProbe::Disp(dof)),
                _ => Ok(ResolvedProbe::Vel(dof)),
            }
        }
        ProbeKind::Pressure => Ok(ResolvedProbe::Pressure(mesh.nearest_triangle(probe.at))),
        ProbeKind::DarcyX | ProbeKind::DarcyY => {
            let m = mesh.nearest_triangle(probe.at);
            let comp = if probe.kind == ProbeKind::DarcyX {
                0
            } else {
                1
            };
            let verts = mesh.tri_coords(m);
            let (w, _) = eval_rt0(&verts, mesh.tri_signs(m), mesh.tri_centroid(m))?;
            let mut terms = Vec::new();
            for (j, &e) in mesh.tri_to_edge[m].iter().enumerate() {
                if let Some(dof) = dofs.vel_dof[e] {
                    terms.push((dof, w[j][comp]));
                }
            }
            Ok(ResolvedProbe::Darcy(terms))
        }
        ProbeKind::EdgeFlux => {
            let e = mesh.nearest_edge(probe.at);
            Ok(ResolvedProbe::EdgeFlux(
                dofs.vel_dof[e].ok_or_else(unresolved)?,
            ))
        }
    }
}

fn probe_value<T: Scalar>(p: &ResolvedProbe<T>, s: &State<T>) -> T {
    match p {
        ResolvedProbe::Disp(d) => s.u[*d],
        ResolvedProbe::Vel(d) => s.v[*d],
        ResolvedProbe::Pressure(m) => s.p[*m],
        ResolvedProbe::Darcy(terms) => terms.iter().map(|&(dof, w)| s.q[dof] * w).sum(),
        ResolvedProbe::EdgeFlux(d) => s.q[*d],
    }
}

/// Darcy velocity at all element centroids.
pub fn centroid_velocities<T: Scalar>(
    mesh: &Mesh<T>,
    dofs: &DofMap<T>,
    q: &[T],
) -> Result<Vec<[T; 2]>> {
    let mut out = Vec::with_capacity(mesh.n_triangles());
    for m in 0..mesh.n_triangles() {
        let verts = mesh.tri_coords(m);
        let (w, _) = eval_rt0(&verts, mesh.tri_signs(m), mesh.tri_centroid(m))?;
        let mut v = [T::zero(); 2];
        for (j, &e) in mesh.tri_to_edge[m].iter().enumerate() {
            if let Some(dof) = dofs.vel_dof[e] {
                v[0] += q[dof] * w[j][0];
                v[1] += q[dof] * w[j][1];
            }
        }
        out.push(v);
    }
    Ok(out)
}

fn run_error<'a>(case: &'a str, stage: &'static str) -> impl FnOnce(Error) -> Error + 'a {
    move |source| Error::Run {
        case: case.to_string(),
        stage,
        source: Box::new(source),
    }
}

/// Executes a case end to end: assemble, factor once, initialize
/// consistently, step, audit energy and record probes/snapshots/profiles.
pub fn run<T: Scalar>(case: &BenchmarkCase<T>, opts: &RunOptions<T>) -> Result<RunArtifacts<T>> {
    let name = case.name.as_str();
    let mesh = generate(case.mesh_spec).map_err(run_error(name, "mesh"))?;
    let (sys, dofs): (SystemMatrices<T>, DofMap<T>) =
        assemble(&mesh, opts.element, &case.material, &case.bc, opts.mass)
            .map_err(run_error(name, "assembly"))?;
    let loads = LoadSet::build(&mesh, &dofs, &case.bc).map_err(run_error(name, "assembly"))?;
    let stepper = Stepper::new(sys, loads, case.dt).map_err(run_error(name, "factorization"))?;
    let mut state = match opts.ic {
        IcMode::Consistent => stepper.consistent_initial_state(),
        IcMode::NaiveZero => stepper.naive_initial_state(),
        IcMode::Rest => Ok(State::zeros(dofs.n_disp, dofs.n_vel, dofs.n_pres)),
    }
    .map_err(run_error(name, "initial conditions"))?;
    let initial_pressure = state.p.clone();

    let resolved: Vec<ResolvedProbe<T>> = case
        .probes
        .iter()
        .map(|p| resolve_probe(&mesh, &dofs, p))
        .collect::<Result<_>>()
        .map_err(run_error(name, "probes"))?;

    // profile line nodes (vertical grid line at x = spec.x), ordered by height
    let profile_nodes: Option<(Vec<usize>, Vec<T>)> = case.profile.as_ref().map(|spec| {
        let tol = T::of(1e-9) * mesh.spec.height.max(mesh.spec.width);
        let mut nodes: Vec<(usize, T)> = (0..mesh.n_nodes())
            .filter(|&n| (mesh.nodes[n][0] - spec.x).abs() <= tol)
            .map(|n| (n, mesh.nodes[n][1]))
            .collect();
        nodes.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite coordinates"));
        let ids: Vec<usize> = nodes.iter().map(|&(n, _)| n).collect();
        let ys: Vec<T> = nodes.iter().map(|&(_, y)| y).collect();
        (ids, ys)
    });
    let profile_value = |nodes: &[usize], s: &State<T>| -> Vec<T> {
        nodes
            .iter()
            .map(|&n| dofs.disp_dof[n][1].map_or(T::zero(), |d| s.u[d]))
            .collect()
    };

    let duration = opts.duration_override.unwrap_or(case.duration);
    let n_steps = (duration / case.dt).round().to_f64_lossy() as usize;
    let snap_steps: Vec<usize> = case
        .snapshot_times
        .iter()
        .map(|&ts| (ts / case.dt).round().to_f64_lossy() as usize)
        .collect();

    let mut times = Vec::with_capacity(n_steps + 1);
    let mut probes: Vec<Vec<T>> = vec![Vec::with_capacity(n_steps + 1); resolved.len()];
    let mut energy = Vec::with_capacity(n_steps + 1);
    let mut snapshots = Vec::new();
    let mut profile_series = profile_nodes.as_ref().map(|(_, ys)| ProfileSeries {
        positions: ys.clone(),
        times: Vec::new(),
        values: Vec::new(),
    });
    let mut ledger = EnergyLedger::new();
    let mut max_velocity_norm = T::zero();
    let mut max_constraint_rel = T::zero();
    let mut early_tv = T::zero();
    let mut stopped_early = false;

    let record = |s: &State<T>,
                  ledger: &EnergyLedger<T>,
                  times: &mut Vec<T>,
                  probes: &mut Vec<Vec<T>>,
                  energy: &mut Vec<EnergySample<T>>| {
        times.push(s.t);
        for (series, rp) in probes.iter_mut().zip(&resolved) {
            series.push(probe_value(rp, s));
        }
        energy.push(EnergySample {
            kinetic_skeleton: ledger.kinetic_skeleton,
            kinetic_fluid: ledger.kinetic_fluid,
            strain: ledger.strain,
            damping: ledger.damping,
            input: ledger.input,
            constraint: ledger.constraint,
            balance_error: ledger.balance_error,
        });
    };

    record(&state, &ledger, &mut times, &mut probes, &mut energy);
    if let (Some((ids, _)), Some(series)) = (&profile_nodes, &mut profile_series) {
        series.times.push(state.t);
        series.values.push(profile_value(ids, &state));
    }
    if snap_steps.contains(&0) {
        snapshots.push(Snapshot {
            t: state.t,
            pressure: state.p.clone(),
            velocity: centroid_velocities(&mesh, &dofs, &state.q)
                .map_err(run_error(name, "snapshots"))?,
        });
    }

    for step in 1..=n_steps {
        let s1 = stepper.step(&state).map_err(run_error(name, "solve"))?;
        stepper
            .energy_update(&mut ledger, &state, &s1)
            .map_err(run_error(name, "solve"))?;
        let (cr, cscale) = stepper.constraint_residual(&s1);
        max_constraint_rel = max_constraint_rel.max(cr / cscale);
        if step <= 50 {
            let dp: Vec<T> = s1.p.iter().zip(&state.p).map(|(&a, &b)| a - b).collect();
            early_tv += norm2(&dp);
        }
        state = s1;
        let vn = norm2(&state.v);
        max_velocity_norm = max_velocity_norm.max(vn);

        record(&state, &ledger, &mut times, &mut probes, &mut energy);
        if let (Some((ids, _)), Some(series)) = (&profile_nodes, &mut profile_series) {
            let stride = case.profile.as_ref().map_or(1, |p| p.stride.max(1));
            if step % stride == 0 {
                series.times.push(state.t);
                series.values.push(profile_value(ids, &state));
            }
        }
        if snap_steps.contains(&step) {
            snapshots.push(Snapshot {
                t: state.t,
                pressure: state.p.clone(),
                velocity: centroid_velocities(&mesh, &dofs, &state.q)
                    .map_err(run_error(name, "snapshots"))?,
            });
        }
        if !vn.is_finite() {
            stopped_early = true;
            break;
        }
        if let Some(stop) = opts.velocity_blowup_stop {
            if vn > stop {
                stopped_early = true;
                break;
            }
        }
    }

    Ok(RunArtifacts {
        name: case.name.clone(),
        element: opts.element,
        mass: opts.mass,
        mesh,
        dofs,
        dt: case.dt,
        times,
        probe_labels: case.probes.iter().map(|p| p.label.clone()).collect(),
        probes,
        energy,
        snapshots,
        profile: profile_series,
        initial_pressure,
        final_state: state,
        max_balance_error: ledger.max_balance_error,
        ledger,
        max_velocity_norm,
        max_constraint_rel,
        early_pressure_total_variation: early_tv,
        stopped_early,
    })
}

/// Wave front arrival measurement on a displacement profile time series.
#[derive(Debug, Clone)]
pub struct WavefrontReport<T> {
    pub window_times: Vec<T>,
    /// Deepest position the front has reached by each window time.
    pub front_positions: Vec<T>,
    /// `(source - front) / t` per window.
    pub speeds: Vec<T>,
    /// First arrival time per profile position (None = never).
    pub arrivals: Vec<Option<T>>,
}

/// Detects first threshold crossings of `|u|` per position and converts front
/// positions at the window times into propagation speeds. The source sits at
/// `source_position` (the loaded boundary); the threshold is a fraction of
/// `reference` (a static displacement scale).
pub fn measure_wavefront<T: Scalar>(
    profile: &ProfileSeries<T>,
    reference: T,
    threshold: T,
    source_position: T,
    window_times: &[T],
) -> Result<WavefrontReport<T>> {
    let level = threshold * reference.abs();
    let npos = profile.positions.len();
    let mut arrivals: Vec<Option<T>> = vec![None; npos];
    for (k, t) in profile.times.iter().enumerate() {
        for i in 0..npos {
            if arrivals[i].is_none() && profile.values[k][i].abs() >= level {
                arrivals[i] = Some(*t);
            }
        }
    }
    let mut front_positions = Vec::with_capacity(window_times.len());
    let mut speeds = Vec::with_capacity(window_times.len());
    for &tw in window_times {
        let mut front = None;
        for i in 0..npos {
            if let Some(ta) = arrivals[i] {
                if ta <= tw {
                    front = Some(profile.positions[i]);
                    break; // positions ascend; the first arrived one is deepest
                }
            }
        }
        let front = front.ok_or(Error::WavefrontNotDetected {
            depth: source_position.to_f64_lossy(),
        })?;
        if front >= source_position {
            return Err(Error::WavefrontNotDetected {
                depth: source_position.to_f64_lossy(),
            });
        }
        front_positions.push(front);
        speeds.push((source_position - front) / tw);
    }
    Ok(WavefrontReport {
        window_times: window_times.to_vec(),
        front_positions,
        speeds,
        arrivals,
    })
}

/// Least-squares removal of a linear trend.
pub fn linear_detrend<T: Scalar>(times: &[T], values: &[T]) -> Vec<T> {
    let n = T::of(times.len() as f64);
    let mean_t = times.iter().copied().sum::<T>() / n;
    let mean_v = values.iter().copied().sum::<T>() / n;
    let mut cov = T::zero();
    let mut var = T::zero();
    for (&t, &v) in times.iter().zip(values) {
        cov += (t - mean_t) * (v - mean_v);
        var += (t - mean_t) * (t - mean_t);
    }
    let slope = if var > T::zero() {
        cov / var
    } else {
        T::zero()
    };
    times
        .iter()
        .zip(values)
        .map(|(&t, &v)| v - mean_v - slope * (t - mean_t))
        .collect()
}

/// Counts sign changes, ignoring wiggles inside the hysteresis band.
pub fn zero_crossings<T: Scalar>(values: &[T], band: T) -> usize {
    let mut count = 0;
    let mut sign = 0i8;
    for &v in values {
        let s = if v > band {
            1
        } else if v < -band {
            -1
        } else {
            0
        };
        if s != 0 {
            if sign != 0 && s != sign {
                count += 1;
            }
            sign = s;
        }
    }
    count
}

/// Centered moving-average high-pass: removes drift slower than the window
/// while keeping the phase of faster oscillations.
pub fn highpass_detrend<T: Scalar>(values: &[T], window: usize) -> Vec<T> {
    let n = values.len();
    let w = window.max(1);
    (0..n)
        .map(|k| {
            let lo = k.saturating_sub(w / 2);
            let hi = (k + w / 2).min(n - 1);
            let mean = values[lo..=hi].iter().copied().sum::<T>() / T::of((hi - lo + 1) as f64);
            values[k] - mean
        })
        .collect()
}

/// Dominant oscillation period by zero-crossing counting: the signal is
/// high-passed over `window_seconds` (to strip the consolidation drift),
/// crossings outside a hysteresis band of `band_frac` of the peak are
/// located by linear interpolation, and the mean crossing gap is doubled.
pub fn dominant_period<T: Scalar>(
    times: &[T],
    values: &[T],
    window_seconds: T,
    band_frac: T,
) -> Option<T> {
    if times.len() < 3 {
        return None;
    }
    let dt = times[1] - times[0];
    let w = (window_seconds / dt).round().to_f64_lossy() as usize;
    let detrended = highpass_detrend(values, w.max(3) | 1);
    let amp = detrended.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    if amp == T::zero() {
        return None;
    }
    let band = band_frac * amp;
    let mut crossing_times = Vec::new();
    let mut sign = 0i8;
    let mut last_signed = 0usize;
    for (k, &v) in detrended.iter().enumerate() {
        let s = if v > band {
            1
        } else if v < -band {
            -1
        } else {
            0
        };
        if s != 0 {
            if sign != 0 && s != sign {
                // interpolate the crossing between the last sample that
                // carried the old sign and this one
                let (t0, t1) = (times[last_signed], times[k]);
                let (v0, v1) = (detrended[last_signed], detrended[k]);
                crossing_times.push(t0 + (t1 - t0) * v0 / (v0 - v1));
            }
            sign = s;
            last_signed = k;
        }
    }
    if crossing_times.len() < 2 {
        return None;
    }
    let span = *crossing_times.last().unwrap() - crossing_times[0];
    Some(T::of(2.0) * span / T::of((crossing_times.len() - 1) as f64))
}

/// Pearson correlation of two equally long series.
pub fn pearson_correlation<T: Scalar>(a: &[T], b: &[T]) -> T {
    assert_eq!(a.len(), b.len());
    let n = T::of(a.len() as f64);
    let ma = a.iter().copied().sum::<T>() / n;
    let mb = b.iter().copied().sum::<T>() / n;
    let mut cab = T::zero();
    let mut caa = T::zero();
    let mut cbb = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        cab += (x - ma) * (y - mb);
        caa += (x - ma) * (x - ma);
        cbb += (y - mb) * (y - mb);
    }
    cab / (caa * cbb).sqrt().max(T::min_positive_value())
}
