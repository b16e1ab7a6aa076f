//! Turns a problem description into meshes, materials, loads and
//! measurements.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};

use mece::fem::{
    load_mesh, traction_load, uniform_body_load, BoundaryTag, Discretization, MaterialField, Mesh, NodeClass, Side,
};
use mece::inversion::{synthesize_experiment, SynthesisSpec};
use mece::measurement::{load_measurements, random_points_1d, sample_field, Flavor, MeasurementSet, Region};
use mece::problem::Problem;
use mece::Execution;

use crate::config::{
    BoundarySpec, BoxSpec, DataSpec, ExecutionSpec, FlavorSpec, LoadSpec, MaterialSpec, MeasurementSpec, MeshSpec,
    PointsSpec, ProblemSpec, SideSpec, TagSpec, ZoneSpec,
};
use crate::error::CliError;

pub fn execution(spec: ExecutionSpec) -> Execution {
    match spec {
        ExecutionSpec::Sequential => Execution::Sequential,
        ExecutionSpec::Parallel => Execution::Parallel,
    }
}

fn side(s: SideSpec) -> Side {
    match s {
        SideSpec::Left => Side::Left,
        SideSpec::Right => Side::Right,
        SideSpec::Bottom => Side::Bottom,
        SideSpec::Top => Side::Top,
    }
}

fn tag(t: TagSpec) -> BoundaryTag {
    match t {
        TagSpec::Dirichlet => BoundaryTag::Dirichlet,
        TagSpec::Neumann => BoundaryTag::Neumann,
        TagSpec::FreeUnknown => BoundaryTag::FreeUnknown,
    }
}

pub fn flavor(f: FlavorSpec) -> Flavor {
    match f {
        FlavorSpec::Pointwise => Flavor::Pointwise,
        FlavorSpec::L2Region => Flavor::L2Region,
        FlavorSpec::H1Region => Flavor::H1Region,
    }
}

pub fn mesh(spec: &MeshSpec, boundary: &BoundarySpec) -> Result<Mesh, CliError> {
    let mut mesh = match spec {
        MeshSpec::Bar { elements, length } => {
            if *elements == 0 {
                return Err(CliError::Config("mesh has no elements".into()));
            }
            Mesh::bar(*elements, *length)?
        }
        MeshSpec::Rectangle { nx, ny, origin, size } => {
            if *nx == 0 || *ny == 0 {
                return Err(CliError::Config("mesh has no elements".into()));
            }
            Mesh::rectangle(*nx, *ny, *origin, *size)?
        }
        MeshSpec::File { path } => load_mesh(path)?,
    };
    if mesh.n_elements() == 0 {
        return Err(CliError::Config("mesh has no elements".into()));
    }
    let sides = [
        (SideSpec::Left, boundary.left),
        (SideSpec::Right, boundary.right),
        (SideSpec::Bottom, boundary.bottom),
        (SideSpec::Top, boundary.top),
    ];
    for (s, t) in sides {
        if let Some(t) = t {
            if mesh.dim() == 1 && matches!(s, SideSpec::Bottom | SideSpec::Top) {
                return Err(CliError::Config("a bar has only left and right ends".into()));
            }
            mesh.tag_side(side(s), tag(t))?;
        }
    }
    Ok(mesh)
}

fn in_range(v: f64, r: Option<[f64; 2]>) -> bool {
    r.is_none_or(|[lo, hi]| v >= lo && v <= hi)
}

fn zone_contains(z: &ZoneSpec, c: [f64; 2]) -> Result<bool, CliError> {
    match (z.centre, z.radius, z.x.is_some() || z.y.is_some()) {
        (Some(o), Some(r), false) => Ok((c[0] - o[0]).powi(2) + (c[1] - o[1]).powi(2) <= r * r),
        (None, None, true) => Ok(in_range(c[0], z.x) && in_range(c[1], z.y)),
        _ => Err(CliError::Config("a zone needs either x/y ranges or centre and radius".into())),
    }
}

/// Material field with zone overrides, and the elements of each zone (an
/// element belongs to the last zone containing its centroid).
pub fn material(spec: &MaterialSpec, mesh: &Mesh) -> Result<(MaterialField, Vec<Vec<usize>>), CliError> {
    let ne = mesh.n_elements();
    let mut owner: Vec<Option<usize>> = vec![None; ne];
    for (k, z) in spec.zones.iter().enumerate() {
        for (e, o) in owner.iter_mut().enumerate() {
            if zone_contains(z, mesh.centroid(e))? {
                *o = Some(k);
            }
        }
    }
    let pick = |e: usize, base: Option<f64>, of: fn(&ZoneSpec) -> Option<f64>, name: &str| {
        owner[e]
            .and_then(|k| of(&spec.zones[k]))
            .or(base)
            .ok_or_else(|| CliError::Config(format!("material needs `{name}` for element {e}")))
    };
    let density = vec![spec.density; ne];
    let field = if mesh.dim() == 1 {
        if spec.bulk.is_some() || spec.shear.is_some() {
            return Err(CliError::Config("bars take `young`, not `bulk`/`shear`".into()));
        }
        let young = (0..ne).map(|e| pick(e, spec.young, |z| z.young, "young")).collect::<Result<_, _>>()?;
        MaterialField::young(young, density)?
    } else {
        if spec.young.is_some() {
            return Err(CliError::Config("plane strain takes `bulk` and `shear`, not `young`".into()));
        }
        let bulk: Vec<f64> = (0..ne).map(|e| pick(e, spec.bulk, |z| z.bulk, "bulk")).collect::<Result<_, _>>()?;
        let shear: Vec<f64> = (0..ne).map(|e| pick(e, spec.shear, |z| z.shear, "shear")).collect::<Result<_, _>>()?;
        MaterialField::bulk_shear(&bulk, &shear, density)?
    };
    let mut zones = vec![Vec::new(); spec.zones.len()];
    for (e, o) in owner.iter().enumerate() {
        if let Some(k) = o {
            zones[*k].push(e);
        }
    }
    if let Some(k) = zones.iter().position(Vec::is_empty) {
        return Err(CliError::Config(format!("material zone {} contains no element", k + 1)));
    }
    Ok((field, zones))
}

pub fn load(spec: &LoadSpec, disc: &Discretization) -> Result<Vec<f64>, CliError> {
    let mesh = disc.mesh();
    let mut f = match &spec.body {
        Some(b) => uniform_body_load(disc, b)?,
        None => vec![0.0; disc.n_dofs()],
    };
    for t in &spec.traction {
        let facets = mesh.side_facets(side(t.side));
        for (fi, ti) in f.iter_mut().zip(traction_load(mesh, &facets, &t.value)?) {
            *fi += ti;
        }
    }
    Ok(f)
}

/// Elements whose centroid lies in the box, all of them without one.
pub fn region_elements(mesh: &Mesh, region: Option<&BoxSpec>) -> Vec<usize> {
    (0..mesh.n_elements())
        .filter(|&e| {
            let c = mesh.centroid(e);
            region.is_none_or(|b| in_range(c[0], b.x) && in_range(c[1], b.y))
        })
        .collect()
}

fn omega(spec: &ProblemSpec) -> Result<f64, CliError> {
    match spec.frequency_hz {
        Some(f) if f >= 0.0 && f.is_finite() => Ok(2.0 * PI * f),
        Some(f) => Err(CliError::Config(format!("frequency must be nonnegative, got {f}"))),
        None => Err(CliError::Config("problem needs `frequency_hz`".into())),
    }
}

/// A problem ready for the solvers, with its model material and zones.
#[derive(Debug)]
pub struct Built {
    pub problem: Problem,
    pub material: MaterialField,
    pub zones: Vec<Vec<usize>>,
    /// elements carrying region data
    pub measured: Option<Vec<usize>>,
    pub warnings: Vec<String>,
}

pub fn problem(spec: &ProblemSpec, seed: u64, exec: Execution) -> Result<Built, CliError> {
    let mesh = mesh(&spec.mesh, &spec.boundary)?;
    let (material, zones) = material(&spec.material, &mesh)?;
    let disc = Discretization::new(mesh, exec);
    let f = load(&spec.load, &disc)?;
    let problem = Problem::new(disc, omega(spec)?, f)?.with_execution(exec);
    let mut warnings = Vec::new();
    let (problem, measured) = match &spec.measurement {
        None => (problem, None),
        Some(m) => {
            let (set, measured) = measurements(m, &problem, seed, exec, &mut warnings)?;
            if m.flavor == FlavorSpec::L2Region && !problem.has_complete_bcs() {
                warnings.push(
                    "L2 region data with unknown boundary conditions: an H1 region form is needed to control \
                     boundary traces"
                        .into(),
                );
            }
            (problem.with_measurements(&set)?, measured)
        }
    };
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(Built { problem, material, zones, measured, warnings })
}

fn measurements(
    m: &MeasurementSpec,
    problem: &Problem,
    seed: u64,
    exec: Execution,
    warnings: &mut Vec<String>,
) -> Result<(MeasurementSet, Option<Vec<usize>>), CliError> {
    let mesh = problem.disc().mesh();
    let fl = flavor(m.flavor);
    let (truth, forward, noise, allow_inverse_crime) = match &m.data {
        DataSpec::File { path } => return file_measurements(path, m, mesh),
        DataSpec::Synthetic { truth, forward, noise, allow_inverse_crime } => {
            (truth, forward.as_ref(), *noise, *allow_inverse_crime)
        }
    };
    let points = match (fl, &m.points, &m.region) {
        (Flavor::Pointwise, Some(p), None) => Some(points(p, mesh, seed)?),
        (Flavor::Pointwise, None, _) => return Err(CliError::Config("pointwise data need `points`".into())),
        (Flavor::Pointwise, _, Some(_)) => {
            return Err(CliError::Config("pointwise data take `points`, not `region`".into()))
        }
        (_, Some(_), _) => return Err(CliError::Config("region data take `region`, not `points`".into())),
        _ => None,
    };
    let region = region_elements(mesh, m.region.as_ref());
    if points.is_none() && region.is_empty() {
        return Err(CliError::Config("measurement region contains no element".into()));
    }
    let (fwd, truth_field) = match forward {
        Some(g) => {
            let fm = self::mesh(&g.mesh, &g.boundary)?;
            let (t, _) = material(truth, &fm)?;
            let disc = Discretization::new(fm, exec);
            let f = load(&g.load, &disc)?;
            (Problem::new(disc, problem.omega(), f)?.with_execution(exec), t)
        }
        None => {
            let (t, _) = material(truth, mesh)?;
            let same =
                Problem::new(problem.disc().clone(), problem.omega(), problem.load().to_vec())?.with_execution(exec);
            (same, t)
        }
    };
    if !fwd.has_complete_bcs() {
        return Err(CliError::Config(
            "synthetic data need complete boundary conditions; give `data.forward` with every side tagged".into(),
        ));
    }
    let mut set = match &points {
        Some(pts) => {
            if forward.is_none() {
                if !allow_inverse_crime {
                    return Err(CliError::Config(
                        "data generated on the inversion mesh (inverse crime); set allow_inverse_crime or give a \
                         finer `data.forward` mesh"
                            .into(),
                    ));
                }
                warnings.push("inverse crime: data generated on the inversion mesh".into());
            }
            let sol = fwd.forward(&truth_field)?;
            if sol.near_singular {
                return Err(mece::Error::Assumption(format!(
                    "forward operator is near-resonant at {} Hz (rcond {:e}); move the frequency",
                    fwd.omega() / (2.0 * PI),
                    sol.rcond
                ))
                .into());
            }
            let values = sample_field(fwd.disc().mesh(), &sol.u, pts)
                .map_err(|p| CliError::Config(format!("point {p:?} lies outside the data-generating mesh")))?;
            MeasurementSet::pointwise(pts.clone(), values)
        }
        None => {
            let syn = synthesize_experiment(&SynthesisSpec {
                forward: &fwd,
                truth: &truth_field,
                target: mesh,
                region: region.clone(),
                flavor: fl,
                length_scale: m.length_scale,
                allow_inverse_crime,
            })?;
            warnings.extend(syn.warnings);
            syn.measurements
        }
    };
    if noise != 0.0 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x6e6f_6973);
        for v in set.values.iter_mut() {
            *v *= 1.0 + noise * rng.gen_range(-1.0..1.0);
        }
    }
    apply_settings(&mut set, m);
    Ok((set, points.is_none().then_some(region)))
}

fn apply_settings(set: &mut MeasurementSet, m: &MeasurementSpec) {
    set.weight = m.weight;
    if m.length_scale.is_some() {
        set.length_scale = m.length_scale;
    }
}

fn file_measurements(
    path: &std::path::Path,
    m: &MeasurementSpec,
    mesh: &Mesh,
) -> Result<(MeasurementSet, Option<Vec<usize>>), CliError> {
    if m.points.is_some() || m.region.is_some() {
        return Err(CliError::Config("file data carry their own points or region".into()));
    }
    let mut set = load_measurements(path, mesh)?;
    let fl = flavor(m.flavor);
    if set.flavor != fl {
        return Err(CliError::Config(format!(
            "{} holds {} data, config says {}",
            path.display(),
            set.flavor.name(),
            fl.name()
        )));
    }
    apply_settings(&mut set, m);
    let measured = match &set.region {
        Region::Elements(els) => Some(els.clone()),
        Region::Points(_) => None,
    };
    Ok((set, measured))
}

fn points(spec: &PointsSpec, mesh: &Mesh, seed: u64) -> Result<Vec<[f64; 2]>, CliError> {
    let pts = match spec {
        PointsSpec::Nodes => {
            let class = mesh.node_classes();
            (0..mesh.n_nodes()).filter(|&n| class[n] != NodeClass::Dirichlet).map(|n| mesh.node(n)).collect()
        }
        PointsSpec::Random { count } => {
            if mesh.dim() != 1 {
                return Err(CliError::Config("random points are supported on bars only".into()));
            }
            let b = mesh.bounding_box();
            random_points_1d(seed, *count, b[0], b[2])
        }
        PointsSpec::List { at } => at.clone(),
    };
    if pts.is_empty() {
        return Err(CliError::Config("no measurement points".into()));
    }
    Ok(pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(text: &str) -> ProblemSpec {
        toml::from_str(text).unwrap()
    }

    #[test]
    fn zones_override_by_centroid() {
        let p = spec(
            "frequency_hz = 1.0\n[mesh]\nkind = \"bar\"\nelements = 4\n[material]\nyoung = 1.0\n\
             [[material.zones]]\nx = [0.5, 1.0]\nyoung = 3.0\n",
        );
        let m = mesh(&p.mesh, &p.boundary).unwrap();
        let (field, zones) = material(&p.material, &m).unwrap();
        assert_eq!(field.params(), &[1.0, 1.0, 3.0, 3.0]);
        assert_eq!(zones, vec![vec![2, 3]]);
    }

    #[test]
    fn missing_moduli_are_config_errors() {
        let p = spec("[mesh]\nkind = \"rectangle\"\nnx = 2\nny = 2\nsize = [1.0, 1.0]\n[material]\nbulk = 1.0\n");
        let m = mesh(&p.mesh, &p.boundary).unwrap();
        assert!(matches!(material(&p.material, &m), Err(CliError::Config(_))));
    }

    #[test]
    fn empty_mesh_is_rejected() {
        let p = spec("[mesh]\nkind = \"bar\"\nelements = 0\n");
        assert!(matches!(mesh(&p.mesh, &p.boundary), Err(CliError::Config(_))));
    }

    #[test]
    fn nodes_skip_dirichlet_ends() {
        let p = spec("[mesh]\nkind = \"bar\"\nelements = 4\n[boundary]\nleft = \"dirichlet\"\nright = \"neumann\"\n");
        let m = mesh(&p.mesh, &p.boundary).unwrap();
        let pts = points(&PointsSpec::Nodes, &m, 0).unwrap();
        assert_eq!(pts.len(), 4);
        assert_eq!(pts[0], [0.25, 0.0]);
    }
}
