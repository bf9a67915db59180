//! Declarative scenario files: a JSON document naming the mesh, fractures,
//! permeability, boundary conditions, source, solver settings and outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use ndfm_core::mesh::build_rect_tri_mesh;
use ndfm_core::{
    build_rect_mesh, parse_expr, validate_problem, AssemblyOptions, BoundaryCondition, CgOptions, FractureNetwork,
    LinearSystem, MatrixPermeability, Mesh, Point2, PressureField, Problem, SlicePoint, SolveReport, Tensor2,
};
use serde::{Deserialize, Serialize};

use crate::io;
use crate::par::assemble_par;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub mesh: MeshSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fractures: Option<FractureSpec>,
    #[serde(default)]
    pub permeability: PermeabilitySpec,
    /// Boundary tag (as a string key) to condition.
    pub bc: BTreeMap<String, BcSpec>,
    #[serde(default = "zero_expr")]
    pub source: String,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub output: OutputSpec,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn zero_expr() -> String {
    "0".into()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshKind {
    Quad4,
    Tri3,
}

/// Either a mesh file (`path`) or a uniform grid (`nx`, `ny`, `bbox`).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<MeshKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nx: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ny: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

/// A fracture file or its lines given inline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FractureSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inline: Option<Vec<String>>,
}

/// Tensors are `[xx, xy, yy]`. A cell whose centroid lies in a region's box
/// takes that region's tensor; later regions win.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PermeabilitySpec {
    #[serde(default = "identity")]
    pub tensor: [f64; 3],
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub regions: Vec<RegionSpec>,
}

fn identity() -> [f64; 3] {
    [1.0, 0.0, 1.0]
}

impl Default for PermeabilitySpec {
    fn default() -> Self {
        Self { tensor: identity(), regions: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    #[serde(rename = "box")]
    pub bbox: [f64; 4],
    pub tensor: [f64; 3],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcKind {
    Dirichlet,
    Neumann,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcSpec {
    pub kind: BcKind,
    pub expr: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maxit: Option<usize>,
}

fn default_tol() -> f64 {
    1e-12
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self { tol: default_tol(), maxit: None }
    }
}

impl SolverSpec {
    pub fn cg_options(&self) -> CgOptions {
        CgOptions { tol: self.tol, maxit: self.maxit }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldFormat {
    Csv,
    Vtk,
}

/// `field` is the output file stem; the pressure is written once per entry
/// of `formats` and each slice goes to `<field>_slice<k>.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_stem")]
    pub field: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub slices: Vec<SliceSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub formats: Vec<FieldFormat>,
}

fn default_stem() -> String {
    "pressure".into()
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { field: default_stem(), slices: Vec::new(), formats: Vec::new() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceSpec {
    pub from: [f64; 2],
    pub to: [f64; 2],
    pub n: usize,
}

impl SliceSpec {
    pub fn endpoints(&self) -> (Point2, Point2) {
        (Point2::new(self.from[0], self.from[1]), Point2::new(self.to[0], self.to[1]))
    }
}

fn tensor(t: [f64; 3]) -> Tensor2 {
    Tensor2 { xx: t[0], xy: t[1], yy: t[2] }
}

impl ScenarioConfig {
    pub fn from_json(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut cfg: ScenarioConfig = serde_json::from_str(text).context("parsing scenario")?;
        cfg.base_dir = base_dir.into();
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&text, dir).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn resolve(&self, rel: &str) -> PathBuf {
        self.base_dir.join(rel)
    }

    pub fn build_mesh(&self) -> Result<Mesh> {
        let m = &self.mesh;
        match (&m.path, m.nx, m.ny) {
            (Some(path), None, None) => {
                if m.bbox.is_some() {
                    bail!("mesh: `bbox` only applies to generated meshes");
                }
                let file = self.resolve(path);
                let text = fs::read_to_string(&file).with_context(|| format!("reading mesh {}", file.display()))?;
                let mesh = io::parse_mesh(&text).with_context(|| format!("in mesh {}", file.display()))?;
                if m.kind.is_some_and(|k| (k == MeshKind::Tri3) != (mesh.kind() == ndfm_core::CellKind::Tri3)) {
                    bail!(
                        "mesh: file {} holds {} cells, config says {:?}",
                        file.display(),
                        mesh.kind().name(),
                        m.kind.unwrap()
                    );
                }
                Ok(mesh)
            }
            (None, Some(nx), Some(ny)) => {
                let bbox = m.bbox.unwrap_or([0.0, 0.0, 1.0, 1.0]);
                Ok(match m.kind.unwrap_or(MeshKind::Quad4) {
                    MeshKind::Quad4 => build_rect_mesh(nx, ny, bbox)?,
                    MeshKind::Tri3 => build_rect_tri_mesh(nx, ny, bbox)?,
                })
            }
            _ => bail!("mesh: give either `path` or both `nx` and `ny`"),
        }
    }

    pub fn build_network(&self) -> Result<FractureNetwork> {
        let Some(f) = &self.fractures else { return Ok(FractureNetwork::new(Vec::new())) };
        match (&f.path, &f.inline) {
            (Some(path), None) => {
                let file = self.resolve(path);
                let text =
                    fs::read_to_string(&file).with_context(|| format!("reading fractures {}", file.display()))?;
                io::parse_fractures(&text).with_context(|| format!("in fractures {}", file.display()))
            }
            (None, Some(lines)) => io::parse_fractures(&lines.join("\n")).context("in inline fractures"),
            _ => bail!("fractures: give exactly one of `path` and `inline`"),
        }
    }

    pub fn build_permeability(&self, mesh: &Mesh) -> MatrixPermeability {
        let p = &self.permeability;
        if p.regions.is_empty() {
            return MatrixPermeability::Constant(tensor(p.tensor));
        }
        let table = (0..mesh.n_cells())
            .map(|c| {
                let q = mesh.cell_polygon(c).centroid();
                p.regions
                    .iter()
                    .rev()
                    .find(|r| r.bbox[0] <= q.x && q.x <= r.bbox[2] && r.bbox[1] <= q.y && q.y <= r.bbox[3])
                    .map_or(tensor(p.tensor), |r| tensor(r.tensor))
            })
            .collect();
        MatrixPermeability::PerCell(table)
    }

    pub fn build_bcs(&self) -> Result<ndfm_core::BoundarySpec> {
        self.bc
            .iter()
            .map(|(tag, b)| {
                let t: u32 = tag.trim().parse().map_err(|_| anyhow!("bc: `{tag}` is not a boundary tag"))?;
                let e = parse_expr(&b.expr).with_context(|| format!("bc {tag}"))?;
                Ok((
                    t,
                    if b.kind == BcKind::Dirichlet {
                        BoundaryCondition::Dirichlet(e)
                    } else {
                        BoundaryCondition::Neumann(e)
                    },
                ))
            })
            .collect()
    }

    /// Builds and validates the problem.
    pub fn materialize(&self) -> Result<Problem> {
        let mesh = self.build_mesh()?;
        let perm = self.build_permeability(&mesh);
        let pb = Problem {
            mesh: Arc::new(mesh),
            perm,
            network: self.build_network()?,
            bcs: self.build_bcs()?,
            source: parse_expr(&self.source).context("source")?,
        };
        let report = validate_problem(&pb);
        if !report.is_ok() {
            bail!("{report}");
        }
        Ok(pb)
    }
}

/// Everything a scenario run produces.
#[derive(Clone, Debug)]
pub struct ScenarioRun {
    pub problem: Problem,
    pub system: LinearSystem,
    pub field: PressureField,
    pub report: SolveReport,
    pub slices: Vec<Vec<SlicePoint>>,
}

/// Solves a materialized problem with the given solver settings.
pub fn solve_problem(pb: &Problem, solver: &SolverSpec) -> Result<(LinearSystem, PressureField, SolveReport)> {
    let system = assemble_par(pb, &AssemblyOptions::default())?;
    let t0 = Instant::now();
    let (values, mut report) = system.solve(&solver.cg_options())?;
    report.wall_time = Some(t0.elapsed());
    let field = PressureField::new(pb.mesh.clone(), values)?;
    Ok((system, field, report))
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioRun> {
    let problem = cfg.materialize()?;
    let (system, field, report) = solve_problem(&problem, &cfg.solver)?;
    let slices = cfg
        .output
        .slices
        .iter()
        .map(|s| {
            let (a, b) = s.endpoints();
            Ok(field.slice_profile(a, b, s.n)?)
        })
        .collect::<Result<_>>()?;
    Ok(ScenarioRun { problem, system, field, report, slices })
}

/// Writes the requested files under `dir` and returns their paths.
pub fn write_outputs(cfg: &ScenarioConfig, run: &ScenarioRun, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let stem = &cfg.output.field;
    let mut written = Vec::new();
    let mut put = |name: String, body: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
        Ok(())
    };
    for f in &cfg.output.formats {
        match f {
            FieldFormat::Csv => put(format!("{stem}.csv"), io::field_csv(&run.field))?,
            FieldFormat::Vtk => put(format!("{stem}.vtk"), io::field_vtk(&run.field))?,
        }
    }
    for (k, s) in run.slices.iter().enumerate() {
        put(format!("{stem}_slice{k}.csv"), io::slice_csv(s))?;
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EX1: &str = r#"{
        "mesh": {"kind": "quad4", "nx": 10, "ny": 10, "bbox": [0, 0, 1, 1]},
        "fractures": {"inline": ["SEG 0.25 0.5 0.75 0.5 1e-3 1e8", "SEG 0.5 0.25 0.5 0.75 1e-3 1e8"]},
        "bc": {"1": {"kind": "dirichlet", "expr": "1"}, "2": {"kind": "dirichlet", "expr": "0"},
               "3": {"kind": "neumann", "expr": "0"}, "4": {"kind": "neumann", "expr": "0"}},
        "output": {"slices": [{"from": [0, 0.45], "to": [1, 0.45], "n": 11}]}
    }"#;

    #[test]
    fn parses_and_runs() {
        let cfg = ScenarioConfig::from_json(EX1, ".").unwrap();
        assert_eq!(cfg.solver.tol, 1e-12);
        let run = run_scenario(&cfg).unwrap();
        assert!(run.report.converged);
        assert_eq!(run.slices[0].len(), 11);
        assert!((run.slices[0][0].value.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = EX1.replace("\"bc\"", "\"sauce\": \"1\", \"bc\"");
        assert!(ScenarioConfig::from_json(&bad, ".").is_err());
    }

    #[test]
    fn missing_boundary_condition_fails_validation() {
        let bad = EX1.replace(r#", "4": {"kind": "neumann", "expr": "0"}"#, "");
        let e = ScenarioConfig::from_json(&bad, ".").unwrap().materialize().unwrap_err();
        assert!(e.to_string().contains('4'), "{e}");
    }

    #[test]
    fn json_round_trip() {
        let cfg = ScenarioConfig::from_json(EX1, ".").unwrap();
        assert_eq!(ScenarioConfig::from_json(&cfg.to_json(), ".").unwrap(), cfg);
    }

    #[test]
    fn regions_set_cell_tensors() {
        let text = EX1.replace(
            r#""bc""#,
            r#""permeability": {"tensor": [1, 0, 1], "regions": [{"box": [0, 0, 0.5, 1], "tensor": [2, 0, 3]}]}, "bc""#,
        );
        let cfg = ScenarioConfig::from_json(&text, ".").unwrap();
        let pb = cfg.materialize().unwrap();
        assert_eq!(pb.perm.at(0), Tensor2 { xx: 2.0, xy: 0.0, yy: 3.0 });
        assert_eq!(pb.perm.at(9), Tensor2::IDENTITY);
    }
}
