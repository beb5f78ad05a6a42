//! CSV and manifest writers. Numbers go out with 12 fractional digits of
//! scientific notation so reruns byte-compare clean.

use poroflow::benchmarks::RunArtifacts;
use std::fmt::Write as _;
use std::io;
use std::path::Path;

pub fn fmt_num(x: f64) -> String {
    format!("{x:.12e}")
}

pub fn write_time_history(path: &Path, art: &RunArtifacts<f64>) -> io::Result<()> {
    let mut s = String::new();
    let mut header = vec!["t".to_string()];
    header.extend(art.probe_labels.iter().cloned());
    header.extend(["E_Ks", "E_Kf", "E_S", "E_D", "E_In", "E_C", "balance_error"].map(String::from));
    writeln!(s, "{}", header.join(",")).unwrap();
    for (k, &t) in art.times.iter().enumerate() {
        let mut row = vec![fmt_num(t)];
        for series in &art.probes {
            row.push(fmt_num(series[k]));
        }
        let e = &art.energy[k];
        for v in [
            e.kinetic_skeleton,
            e.kinetic_fluid,
            e.strain,
            e.damping,
            e.input,
            e.constraint,
            e.balance_error,
        ] {
            row.push(fmt_num(v));
        }
        writeln!(s, "{}", row.join(",")).unwrap();
    }
    std::fs::write(path, s)
}

/// One file per snapshot: elemental pressure and the Darcy velocity
/// interpolated at the element centroid.
pub fn write_snapshots(dir: &Path, art: &RunArtifacts<f64>) -> io::Result<Vec<String>> {
    let mut names = Vec::new();
    for snap in &art.snapshots {
        let name = format!("snapshot_{:.6}.csv", snap.t);
        let mut s = String::new();
        writeln!(s, "element,x,y,p,wx,wy").unwrap();
        for m in 0..art.mesh.n_triangles() {
            let c = art.mesh.tri_centroid(m);
            writeln!(
                s,
                "{},{},{},{},{},{}",
                m,
                fmt_num(c[0]),
                fmt_num(c[1]),
                fmt_num(snap.pressure[m]),
                fmt_num(snap.velocity[m][0]),
                fmt_num(snap.velocity[m][1]),
            )
            .unwrap();
        }
        std::fs::write(dir.join(&name), s)?;
        names.push(name);
    }
    Ok(names)
}

pub fn write_manifest(
    path: &Path,
    art: &RunArtifacts<f64>,
    extra: &[(String, String)],
) -> io::Result<()> {
    let mut s = String::new();
    let spec = art.mesh.spec;
    writeln!(s, "case = {}", art.name).unwrap();
    writeln!(s, "element = {}", art.element).unwrap();
    writeln!(s, "mass = {}", art.mass).unwrap();
    writeln!(s, "mesh.width = {} m", spec.width).unwrap();
    writeln!(s, "mesh.height = {} m", spec.height).unwrap();
    writeln!(s, "mesh.nx = {}", spec.nx).unwrap();
    writeln!(s, "mesh.ny = {}", spec.ny).unwrap();
    writeln!(s, "mesh.pattern = {}", spec.pattern).unwrap();
    writeln!(s, "mesh.nodes = {}", art.mesh.n_nodes()).unwrap();
    writeln!(s, "mesh.triangles = {}", art.mesh.n_triangles()).unwrap();
    writeln!(s, "mesh.edges = {}", art.mesh.n_edges()).unwrap();
    writeln!(s, "dofs.displacement = {}", art.dofs.n_disp).unwrap();
    writeln!(s, "dofs.flux = {}", art.dofs.n_vel).unwrap();
    writeln!(s, "dofs.pressure = {}", art.dofs.n_pres).unwrap();
    writeln!(s, "time.dt = {} s", fmt_num(art.dt)).unwrap();
    writeln!(s, "time.steps = {}", art.times.len() - 1).unwrap();
    writeln!(s, "max_balance_error = {}", fmt_num(art.max_balance_error)).unwrap();
    writeln!(
        s,
        "max_constraint_rel = {}",
        fmt_num(art.max_constraint_rel)
    )
    .unwrap();
    for (k, v) in extra {
        writeln!(s, "{k} = {v}").unwrap();
    }
    std::fs::write(path, s)
}
