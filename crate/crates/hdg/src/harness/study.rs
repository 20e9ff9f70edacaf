//! Convergence studies: solve a manufactured problem on a refinement family
//! of the unit square and tabulate L2 errors with observed orders.

use crate::error::{HdgError, Result};
use crate::fespace::{quad_triangle, FeSpaceTables};
use crate::harness::problem::ManufacturedProblem;
use crate::harness::table::{ConvergenceRow, ConvergenceTable};
use crate::hdg_core::{solve_hdg, HDGSolution, HdgConfig};
use crate::mesh::{build_crisscross_mesh, build_structured_mesh, Mesh};
use crate::postprocess::{postprocess_flux, PostprocessedFlux};

/// Triangulation family on the unit square, indexed by subdivision count n.
///
/// `Crisscross` splits each of the n x n cells into four triangles about the
/// cell center (the default for studies); `Diagonal` splits each cell into
/// two triangles along one diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFamily {
    Crisscross,
    Diagonal,
}

impl MeshFamily {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "crisscross" => Ok(MeshFamily::Crisscross),
            "diagonal" => Ok(MeshFamily::Diagonal),
            other => Err(HdgError::Config(format!("unknown mesh family `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MeshFamily::Crisscross => "crisscross",
            MeshFamily::Diagonal => "diagonal",
        }
    }

    pub fn build(&self, n: usize) -> Result<Mesh> {
        match self {
            MeshFamily::Crisscross => build_crisscross_mesh(n),
            MeshFamily::Diagonal => build_structured_mesh(n),
        }
    }
}

/// Parameters of one study: degrees, number of refinement levels (level j
/// uses n = 2 * 2^j), problem, and mesh family.
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub ks: Vec<usize>,
    pub levels: usize,
    pub problem: ManufacturedProblem,
    pub family: MeshFamily,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            ks: vec![0],
            levels: 5,
            problem: ManufacturedProblem::SineDiffusion,
            family: MeshFamily::Crisscross,
        }
    }
}

/// Subdivision count of a family mesh on the unit square (4n boundary faces).
fn subdivision_count(mesh: &Mesh) -> usize {
    let boundary = (0..mesh.n_faces())
        .filter(|&f| mesh.is_boundary_face(f))
        .count();
    assert!(boundary % 4 == 0, "family meshes have 4n boundary faces");
    boundary / 4
}

/// L2 errors of one solve against the exact solution, by element-wise
/// quadrature of the given exactness: potential, flux, postprocessed flux,
/// and divergence of the postprocessed flux against the analytic divergence.
pub fn compute_errors_with_exactness(
    sol: &HDGSolution,
    star: &PostprocessedFlux,
    problem: &ManufacturedProblem,
    mesh: &Mesh,
    k: usize,
    exactness: usize,
) -> Result<ConvergenceRow> {
    assert!(sol.k == k && star.k == k);
    let tables = FeSpaceTables::new(k)?;
    let rule = quad_triangle(exactness)?;
    let vu = tables.potential.eval(&rule.points);
    let vs = tables.flux.eval(&rule.points);
    let nk = tables.flux.dim;
    let (mut eu, mut es, mut estar, mut ediv) = (0.0, 0.0, 0.0, 0.0);
    for e in 0..mesh.n_elements() {
        let geom = mesh.element_geometry(e)?;
        let det = geom.det.abs();
        let (star_vals, star_divs) = star.eval(mesh, e, &rule.points)?;
        for (q, p) in rule.points.iter().enumerate() {
            let x = geom.to_physical(*p);
            let w = det * rule.weights[q];
            let uh: f64 = (0..vu.ncols()).map(|i| sol.u[e][i] * vu[(q, i)]).sum();
            let shx: f64 = (0..nk).map(|i| sol.sigma[e][i] * vs[(q, i)]).sum();
            let shy: f64 = (0..nk).map(|i| sol.sigma[e][nk + i] * vs[(q, i)]).sum();
            let uex = problem.u(x[0], x[1]);
            let sex = problem.sigma(x[0], x[1]);
            eu += w * (uex - uh) * (uex - uh);
            es += w * ((sex[0] - shx) * (sex[0] - shx) + (sex[1] - shy) * (sex[1] - shy));
            let sv = star_vals[q];
            estar += w
                * ((sex[0] - sv[0]) * (sex[0] - sv[0]) + (sex[1] - sv[1]) * (sex[1] - sv[1]));
            let dex = problem.div_sigma(x[0], x[1]);
            ediv += w * (dex - star_divs[q]) * (dex - star_divs[q]);
        }
    }
    Ok(ConvergenceRow {
        k,
        h_inv: subdivision_count(mesh),
        err_u: eu.sqrt(),
        ord_u: None,
        err_sigma: es.sqrt(),
        ord_sigma: None,
        err_sigma_star: estar.sqrt(),
        ord_sigma_star: None,
        err_div: ediv.sqrt(),
        ord_div: None,
    })
}

/// [`compute_errors_with_exactness`] at the default error exactness
/// 2(k + 2) + 6.
pub fn compute_errors(
    sol: &HDGSolution,
    star: &PostprocessedFlux,
    problem: &ManufacturedProblem,
    mesh: &Mesh,
    k: usize,
) -> Result<ConvergenceRow> {
    compute_errors_with_exactness(sol, star, problem, mesh, k, 2 * (k + 2) + 6)
}

/// Runs the full study: for each degree, solve on levels n = 2, 4, 8, ...,
/// postprocess, tabulate errors, and fill orders between consecutive levels
/// of the same degree.
pub fn run_convergence_study(config: &StudyConfig) -> Result<ConvergenceTable> {
    if config.levels == 0 {
        return Err(HdgError::Config("levels must be positive".into()));
    }
    if config.ks.is_empty() {
        return Err(HdgError::Config("at least one degree required".into()));
    }
    let mut table = ConvergenceTable::default();
    for &k in &config.ks {
        let hdg = HdgConfig::new(k)?;
        let mut prev: Option<ConvergenceRow> = None;
        for j in 0..config.levels {
            let n = 2usize << j;
            let mesh = config.family.build(n)?;
            let sol = solve_hdg(&mesh, &hdg, &config.problem)?;
            let star = postprocess_flux(&mesh, &sol)?;
            let mut row = compute_errors(&sol, &star, &config.problem, &mesh, k)?;
            if let Some(p) = &prev {
                row.set_orders_from(p);
            }
            prev = Some(row.clone());
            table.rows.push(row);
        }
    }
    Ok(table)
}
