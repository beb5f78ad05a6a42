//! Run configuration files: one `key = value` pair per line, `#` comments,
//! and an explicit unit on every physical quantity (the examples in the
//! literature mix kN and SI; spelling the unit out removes that entire class
//! of error). Everything is converted to SI on the spot.

use poroflow::assembly::{
    BcRegion, BcSpec, ElementKind, FluidBc, LoadHistory, MassMode, MaterialParams, SkeletonBc,
};
use poroflow::benchmarks::{BenchmarkCase, Probe, ProbeKind, ProfileSpec};
use poroflow::mesh::{MeshPattern, MeshSpec, Side};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

fn err<T>(msg: impl Into<String>) -> Result<T> {
    Err(ConfigError(msg.into()))
}

/// Time step selection.
#[derive(Debug, Clone, Copy)]
pub enum DtSpec {
    Fixed(f64),
    /// `safety * dx_min / C0`, safety in (0, 1].
    AutoCfl {
        safety: f64,
    },
}

/// A fully parsed run configuration.
#[derive(Debug)]
pub struct RunConfig {
    pub case: BenchmarkCase<f64>,
    pub element: ElementKind,
    pub mass: MassMode,
    pub dt_spec: DtSpec,
    pub out_dir: Option<PathBuf>,
}

/// Physical dimension a value must carry in the file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dim {
    Pressure,
    Speed,
    Density,
    Length,
    Time,
    Acceleration,
}

fn unit_factor(dim: Dim, unit: &str) -> Option<f64> {
    match (dim, unit) {
        (Dim::Pressure, "Pa" | "N/m2") => Some(1.0),
        (Dim::Pressure, "kPa" | "kN/m2") => Some(1e3),
        (Dim::Pressure, "MPa" | "MN/m2") => Some(1e6),
        (Dim::Speed, "m/s") => Some(1.0),
        (Dim::Speed, "cm/s") => Some(1e-2),
        (Dim::Speed, "mm/s") => Some(1e-3),
        (Dim::Density, "kg/m3") => Some(1.0),
        (Dim::Length, "m") => Some(1.0),
        (Dim::Length, "cm") => Some(1e-2),
        (Dim::Length, "mm") => Some(1e-3),
        (Dim::Time, "s") => Some(1.0),
        (Dim::Time, "ms") => Some(1e-3),
        (Dim::Acceleration, "m/s2") => Some(1.0),
        _ => None,
    }
}

/// `"<number> <unit>"` -> SI value.
fn quantity(key: &str, raw: &str, dim: Dim) -> Result<f64> {
    let mut it = raw.split_whitespace();
    let (num, unit) = (it.next(), it.next());
    if it.next().is_some() {
        return err(format!("{key}: expected `<value> <unit>`, got `{raw}`"));
    }
    let (Some(num), Some(unit)) = (num, unit) else {
        return err(format!(
            "{key}: missing value or unit in `{raw}` (physical quantities need an explicit unit)"
        ));
    };
    let v: f64 = num
        .parse()
        .map_err(|_| ConfigError(format!("{key}: bad number `{num}`")))?;
    match unit_factor(dim, unit) {
        Some(f) => Ok(v * f),
        None => err(format!(
            "{key}: unit `{unit}` is not valid for this quantity"
        )),
    }
}

fn bare_number(key: &str, raw: &str) -> Result<f64> {
    raw.trim()
        .parse()
        .map_err(|_| ConfigError(format!("{key}: bad number `{raw}`")))
}

struct Lines {
    entries: BTreeMap<String, String>,
    order: Vec<String>,
}

impl Lines {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut order = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return err(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    ln + 1
                ));
            };
            let key = key.trim().to_string();
            if entries
                .insert(key.clone(), value.trim().to_string())
                .is_some()
            {
                return err(format!("line {}: duplicate key `{key}`", ln + 1));
            }
            order.push(key);
        }
        Ok(Self { entries, order })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    fn require(&mut self, key: &str) -> Result<String> {
        self.take(key)
            .ok_or_else(|| ConfigError(format!("missing required key `{key}`")))
    }
}

fn parse_history(key: &str, tokens: &[&str]) -> Result<LoadHistory<f64>> {
    match tokens {
        ["step"] => Ok(LoadHistory::Step),
        ["ramp", rise, "s"] => {
            let r = bare_number(key, rise)?;
            if r <= 0.0 {
                return err(format!("{key}: ramp rise time must be positive"));
            }
            Ok(LoadHistory::Ramp { rise: r })
        }
        ["table", rows] => {
            let mut table = Vec::new();
            for pair in rows.split(',') {
                let Some((t, v)) = pair.split_once(':') else {
                    return err(format!("{key}: table entries are `t:value`, got `{pair}`"));
                };
                table.push((bare_number(key, t)?, bare_number(key, v)?));
            }
            Ok(LoadHistory::Table(table))
        }
        other => err(format!("{key}: unknown load history `{}`", other.join(" "))),
    }
}

fn parse_skeleton(key: &str, raw: &str) -> Result<SkeletonBc<f64>> {
    let tokens: Vec<&str> = raw.split_whitespace().collect();
    match tokens.as_slice() {
        ["free"] => Ok(SkeletonBc::Free),
        ["normal_fixed"] => Ok(SkeletonBc::NormalFixed),
        ["fully_fixed"] => Ok(SkeletonBc::FullyFixed),
        ["traction", tx, ty, unit, rest @ ..] => {
            let f = unit_factor(Dim::Pressure, unit)
                .ok_or_else(|| ConfigError(format!("{key}: bad traction unit `{unit}`")))?;
            Ok(SkeletonBc::Traction {
                traction: [bare_number(key, tx)? * f, bare_number(key, ty)? * f],
                history: parse_history(key, rest)?,
            })
        }
        _ => err(format!("{key}: unknown skeleton condition `{raw}`")),
    }
}

fn parse_fluid(key: &str, raw: &str) -> Result<FluidBc<f64>> {
    let tokens: Vec<&str> = raw.split_whitespace().collect();
    match tokens.as_slice() {
        ["impermeable"] => Ok(FluidBc::Impermeable),
        ["drained", p, unit, rest @ ..] => {
            let f = unit_factor(Dim::Pressure, unit)
                .ok_or_else(|| ConfigError(format!("{key}: bad pressure unit `{unit}`")))?;
            Ok(FluidBc::Drained {
                pressure: bare_number(key, p)? * f,
                history: parse_history(key, rest)?,
            })
        }
        _ => err(format!("{key}: unknown fluid condition `{raw}`")),
    }
}

fn parse_probe(key: &str, raw: &str) -> Result<Probe<f64>> {
    let tokens: Vec<&str> = raw.split_whitespace().collect();
    let ["at", x, y, "m"] = &tokens[1..] else {
        return err(format!(
            "{key}: expected `<kind> at <x> <y> m`, got `{raw}`"
        ));
    };
    let kind = match tokens[0] {
        "ux" => ProbeKind::DisplacementX,
        "uy" => ProbeKind::DisplacementY,
        "vx" => ProbeKind::VelocityX,
        "vy" => ProbeKind::VelocityY,
        "pressure" => ProbeKind::Pressure,
        "wx" => ProbeKind::DarcyX,
        "wy" => ProbeKind::DarcyY,
        "flux" => ProbeKind::EdgeFlux,
        other => return err(format!("{key}: unknown probe kind `{other}`")),
    };
    let label = key.strip_prefix("probe.").unwrap_or(key).to_string();
    Ok(Probe {
        label,
        kind,
        at: [bare_number(key, x)?, bare_number(key, y)?],
    })
}

/// `bc.<side>[<lo>:<hi>].<field>` or `bc.<side>.<field>`.
fn parse_bc_key(key: &str) -> Result<(Side, Option<(f64, f64)>, &str)> {
    let rest = key.strip_prefix("bc.").expect("bc key");
    let Some((target, field)) = rest.rsplit_once('.') else {
        return err(format!("{key}: expected `bc.<side>.skeleton|fluid`"));
    };
    let (side_str, span) = match target.split_once('[') {
        None => (target, None),
        Some((s, span_str)) => {
            let Some(span_str) = span_str.strip_suffix(']') else {
                return err(format!("{key}: unterminated span"));
            };
            let Some((lo, hi)) = span_str.split_once(':') else {
                return err(format!("{key}: span must be `lo:hi` in meters"));
            };
            (s, Some((bare_number(key, lo)?, bare_number(key, hi)?)))
        }
    };
    let side: Side = side_str
        .parse()
        .map_err(|e| ConfigError(format!("{key}: {e}")))?;
    Ok((side, span, field))
}

pub fn parse_str(text: &str, name: &str) -> Result<RunConfig> {
    let mut lines = Lines::parse(text)?;

    let width = quantity("mesh.width", &lines.require("mesh.width")?, Dim::Length)?;
    let height = quantity("mesh.height", &lines.require("mesh.height")?, Dim::Length)?;
    let nx = bare_number("mesh.nx", &lines.require("mesh.nx")?)? as usize;
    let ny = bare_number("mesh.ny", &lines.require("mesh.ny")?)? as usize;
    let pattern: MeshPattern = lines
        .require("mesh.pattern")?
        .parse()
        .map_err(|e| ConfigError(format!("mesh.pattern: {e}")))?;
    let mesh_spec = MeshSpec::new(width, height, nx, ny, pattern);

    let element: ElementKind = lines
        .require("element")?
        .parse()
        .map_err(|e| ConfigError(format!("element: {e}")))?;
    let mass: MassMode = lines
        .require("mass")?
        .parse()
        .map_err(|e| ConfigError(format!("mass: {e}")))?;

    let mut material = MaterialParams::new(
        quantity(
            "material.youngs_modulus",
            &lines.require("material.youngs_modulus")?,
            Dim::Pressure,
        )?,
        bare_number(
            "material.poisson_ratio",
            &lines.require("material.poisson_ratio")?,
        )?,
        quantity(
            "material.solid_density",
            &lines.require("material.solid_density")?,
            Dim::Density,
        )?,
        quantity(
            "material.fluid_density",
            &lines.require("material.fluid_density")?,
            Dim::Density,
        )?,
        bare_number("material.porosity", &lines.require("material.porosity")?)?,
        quantity(
            "material.hydraulic_conductivity",
            &lines.require("material.hydraulic_conductivity")?,
            Dim::Speed,
        )?,
    )
    .map_err(|e| ConfigError(format!("material: {e}")))?;
    if let Some(g) = lines.take("material.gravity") {
        material.gravity = quantity("material.gravity", &g, Dim::Acceleration)?;
        material
            .validate()
            .map_err(|e| ConfigError(format!("material: {e}")))?;
    }

    // boundary regions in file order
    let bc_keys: Vec<String> = lines
        .order
        .iter()
        .filter(|k| k.starts_with("bc."))
        .cloned()
        .collect();
    let mut regions: Vec<BcRegion<f64>> = Vec::new();
    let mut seen: Vec<(Side, Option<(f64, f64)>)> = Vec::new();
    for key in &bc_keys {
        let Some(raw) = lines.take(key) else { continue };
        let (side, span, field) = parse_bc_key(key)?;
        let slot = match seen.iter().position(|&(s, sp)| s == side && sp == span) {
            Some(i) => i,
            None => {
                seen.push((side, span));
                regions.push(BcRegion {
                    side,
                    span,
                    skeleton: SkeletonBc::Free,
                    fluid: FluidBc::Impermeable,
                });
                regions.len() - 1
            }
        };
        match field {
            "skeleton" => regions[slot].skeleton = parse_skeleton(key, &raw)?,
            "fluid" => regions[slot].fluid = parse_fluid(key, &raw)?,
            other => return err(format!("{key}: unknown field `{other}`")),
        }
    }
    if regions.is_empty() {
        return err("no boundary conditions given (bc.<side>.skeleton / bc.<side>.fluid)");
    }

    let dt_raw = lines.require("time.dt")?;
    let dt_spec = if let Some(rest) = dt_raw.strip_prefix("auto_cfl") {
        let safety = bare_number("time.dt", rest.trim())?;
        if !(safety > 0.0 && safety <= 1.0) {
            return err(format!(
                "time.dt: auto_cfl safety {safety} must be in (0, 1]"
            ));
        }
        DtSpec::AutoCfl { safety }
    } else {
        let dt = quantity("time.dt", &dt_raw, Dim::Time)?;
        if dt <= 0.0 {
            return err("time.dt must be positive".to_string());
        }
        DtSpec::Fixed(dt)
    };
    let duration = quantity("time.duration", &lines.require("time.duration")?, Dim::Time)?;
    if duration <= 0.0 {
        return err("time.duration must be positive".to_string());
    }

    let probe_keys: Vec<String> = lines
        .order
        .iter()
        .filter(|k| k.starts_with("probe."))
        .cloned()
        .collect();
    let mut probes = Vec::new();
    for key in &probe_keys {
        if let Some(raw) = lines.take(key) {
            probes.push(parse_probe(key, &raw)?);
        }
    }

    let snapshot_times = match lines.take("snapshot.times") {
        None => Vec::new(),
        Some(raw) => {
            let tokens: Vec<&str> = raw.split_whitespace().collect();
            let Some(("s", times)) = tokens.split_last().map(|(l, r)| (*l, r)) else {
                return err("snapshot.times: expected `t1 t2 ... s`".to_string());
            };
            times
                .iter()
                .map(|t| bare_number("snapshot.times", t))
                .collect::<Result<Vec<_>>>()?
        }
    };

    let profile = match lines.take("profile.x") {
        None => None,
        Some(raw) => {
            let x = quantity("profile.x", &raw, Dim::Length)?;
            let stride = match lines.take("profile.stride") {
                None => 1,
                Some(s) => bare_number("profile.stride", &s)? as usize,
            };
            Some(ProfileSpec {
                x,
                stride: stride.max(1),
            })
        }
    };

    let out_dir = lines.take("output.dir").map(PathBuf::from);

    if let Some(stray) = lines.entries.keys().next() {
        return err(format!("unknown key `{stray}`"));
    }

    let case = BenchmarkCase {
        name: name.to_string(),
        mesh_spec,
        material,
        bc: BcSpec::new(regions),
        dt: match dt_spec {
            DtSpec::Fixed(dt) => dt,
            DtSpec::AutoCfl { .. } => 0.0, // resolved against the mesh later
        },
        duration,
        probes,
        snapshot_times,
        profile,
    };
    Ok(RunConfig {
        case,
        element,
        mass,
        dt_spec,
        out_dir,
    })
}

pub fn parse_file(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("run")
        .to_string();
    parse_str(&text, &name)
}
