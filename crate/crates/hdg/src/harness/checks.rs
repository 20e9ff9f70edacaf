//! Invariant suite behind `hdg check`: structural and numerical self-tests
//! that must hold for any correct build at a given degree.

use crate::error::Result;
use crate::fespace::{quad_edge, quad_triangle, EdgeBasis, FeSpaceTables, MAX_EXACTNESS};
use crate::harness::problem::ManufacturedProblem;
use crate::harness::study::{compute_errors, MeshFamily};
use crate::hdg_core::{
    apply_dirichlet, assemble_condensed, assemble_local, condense, factor_skyline, solve_hdg,
    HdgConfig, ProblemData,
};
use crate::mesh::{build_crisscross_mesh, build_structured_mesh, Mesh};
use crate::postprocess::{postprocess_flux, PostprocessedFlux};
use crate::verify::{p_m, pi0, pi_h, PiecewiseField};

/// Result of one named invariant check.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub ok: bool,
    pub detail: String,
}

type CheckResult = std::result::Result<(), String>;

/// Maps setup errors into check-failure details.
fn ok<T>(r: Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn check(name: &'static str, body: impl FnOnce() -> CheckResult) -> CheckOutcome {
    match body() {
        Ok(()) => CheckOutcome {
            name,
            ok: true,
            detail: String::new(),
        },
        Err(detail) => CheckOutcome {
            name,
            ok: false,
            detail,
        },
    }
}

/// Runs every invariant check for degree `k`. An `Err` means the request
/// itself was invalid (unsupported degree); individual failures are reported
/// through the outcomes.
pub fn run_checks(k: usize) -> Result<Vec<CheckOutcome>> {
    let config = HdgConfig::new(k)?;
    Ok(vec![
        check("local-symmetry", || local_symmetry(&config)),
        check("condensed-spd", || condensed_spd(&config)),
        check("linear-exactness", || linear_exactness(&config)),
        check("trace-projection", || trace_projection(k)),
        check("vertex-averaging", vertex_averaging),
        check("projection-moments", || projection_moments(k)),
        check("flux-conformity", || flux_conformity(&config)),
        check("local-conservation", || local_conservation(&config)),
    ])
}

/// Every local saddle-point matrix is symmetric in its symmetrized form.
fn local_symmetry(config: &HdgConfig) -> CheckResult {
    let mesh = ok(build_crisscross_mesh(2))?;
    let tables = ok(FeSpaceTables::new(config.k))?;
    let problem = ManufacturedProblem::SineDiffusion;
    for e in 0..mesh.n_elements() {
        let ls = ok(assemble_local(&mesh, e, config, &problem, &tables))?;
        let m = ls.full_symmetric();
        let scale = m.amax().max(1.0);
        let defect = (&m - m.transpose()).amax();
        if defect > 1e-12 * scale {
            return Err(format!("element {e}: symmetry defect {defect:.2e}"));
        }
    }
    Ok(())
}

/// The condensed global matrix is symmetric and admits a Cholesky factor.
fn condensed_spd(config: &HdgConfig) -> CheckResult {
    let mesh = ok(build_crisscross_mesh(4))?;
    let tables = ok(FeSpaceTables::new(config.k))?;
    let problem = ManufacturedProblem::SineDiffusion;
    let mut locals = Vec::new();
    let mut condensed = Vec::new();
    for e in 0..mesh.n_elements() {
        let ls = ok(assemble_local(&mesh, e, config, &problem, &tables))?;
        condensed.push(ok(condense(&ls))?);
        locals.push(ls);
    }
    let boundary = ok(apply_dirichlet(&mesh, &problem, config.k))?;
    let system = ok(assemble_condensed(&mesh, config, &locals, &condensed, &boundary))?;
    let defect = system.matrix.symmetry_defect();
    let scale = system.matrix.max_abs().max(1.0);
    if defect > 1e-12 * scale {
        return Err(format!("symmetry defect {defect:.2e} vs scale {scale:.2e}"));
    }
    ok(factor_skyline(&system.matrix).map(|_| ()))
}

/// A solution in the discrete space is reproduced to roundoff.
fn linear_exactness(config: &HdgConfig) -> CheckResult {
    let problem = ManufacturedProblem::Linear;
    for family in [MeshFamily::Crisscross, MeshFamily::Diagonal] {
        let mesh = ok(family.build(2))?;
        let sol = ok(solve_hdg(&mesh, config, &problem))?;
        let star = ok(postprocess_flux(&mesh, &sol))?;
        let row = ok(compute_errors(&sol, &star, &problem, &mesh, config.k))?;
        for (label, err) in [
            ("err_u", row.err_u),
            ("err_sigma", row.err_sigma),
            ("err_sigma_star", row.err_sigma_star),
            ("err_div", row.err_div),
        ] {
            if err >= 1e-11 {
                return Err(format!("{} {label} = {err:.2e}", family.name()));
            }
        }
    }
    Ok(())
}

/// Face projection reproduces polynomial traces of matching degree.
fn trace_projection(k: usize) -> CheckResult {
    let mesh = ok(build_crisscross_mesh(2))?;
    let w = |x: f64, y: f64| (0.4 + x - 0.5 * y).powi(k as i32);
    let basis = EdgeBasis::new(k);
    for face in 0..mesh.n_faces() {
        let coeffs = ok(p_m(&mesh, face, k, &w))?;
        for t in [0.2, 0.7] {
            let psi = basis.eval(&[t]);
            let val: f64 = (0..basis.dim).map(|r| coeffs[r] * psi[(0, r)]).sum();
            let x = mesh.face_point(face, t);
            if (val - w(x[0], x[1])).abs() > 1e-12 {
                return Err(format!("face {face}: {val} vs {}", w(x[0], x[1])));
            }
        }
    }
    Ok(())
}

/// The vertex-averaging operator maps the constant 1 to 1 at interior
/// vertices and to 0 at boundary vertices.
fn vertex_averaging() -> CheckResult {
    let mesh = ok(build_structured_mesh(2))?;
    let field = ok(pi0(&mesh, &|_face: usize, _t: f64| 1.0))?;
    let mut on_boundary = vec![false; mesh.n_vertices()];
    for f in 0..mesh.n_faces() {
        if mesh.is_boundary_face(f) {
            for v in mesh.faces[f] {
                on_boundary[v] = true;
            }
        }
    }
    for (v, &b) in on_boundary.iter().enumerate() {
        let value = field.values[v];
        if b && value != 0.0 {
            return Err(format!("boundary vertex {v} maps to {value}"));
        }
        if !b && (value - 1.0).abs() > 1e-13 {
            return Err(format!("interior vertex {v} maps to {value}"));
        }
    }
    Ok(())
}

/// The enriched projection matches element moments of the input function and
/// face moments of the input trace, and is continuous for single-valued
/// trace data.
fn projection_moments(k: usize) -> CheckResult {
    let mesh = ok(build_structured_mesh(2))?;
    let w = |x: [f64; 2]| x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]);
    let geoms: Vec<_> = (0..mesh.n_elements())
        .map(|e| mesh.element_geometry(e).unwrap())
        .collect();
    // Piecewise input in physical coordinates (here globally smooth).
    let v = |_e: usize, x: [f64; 2]| w(x);
    let mu = |face: usize, t: f64| w(mesh.face_point(face, t));
    let field = ok(pi_h(&mesh, k, &v, &mu))?;

    let tables = ok(FeSpaceTables::new(k))?;
    let rule = ok(quad_triangle((2 * k + 10).min(MAX_EXACTNESS)))?;
    let phi = tables.flux.eval(&rule.points);
    for (e, geom) in geoms.iter().enumerate() {
        for i in 0..tables.flux.dim {
            let moment: f64 = rule
                .points
                .iter()
                .enumerate()
                .map(|(q, &r)| {
                    geom.det.abs()
                        * rule.weights[q]
                        * (field.value(&mesh, e, r) - v(e, geom.to_physical(r)))
                        * phi[(q, i)]
                })
                .sum();
            if moment.abs() > 1e-12 {
                return Err(format!("element {e} moment {i}: {moment:.2e}"));
            }
        }
    }

    let edge_rule = ok(quad_edge((2 * k + 10).min(MAX_EXACTNESS)))?;
    let basis = EdgeBasis::new(k);
    let psi = basis.eval(&edge_rule.points);
    for face in 0..mesh.n_faces() {
        let left = mesh.face_to_elements[face].left;
        for r in 0..basis.dim {
            let moment: f64 = edge_rule
                .points
                .iter()
                .enumerate()
                .map(|(q, &t)| {
                    let rp = geoms[left].to_reference(mesh.face_point(face, t));
                    edge_rule.weights[q] * (field.value(&mesh, left, rp) - mu(face, t)) * psi[(q, r)]
                })
                .sum();
            if moment.abs() > 1e-12 {
                return Err(format!("face {face} moment {r}: {moment:.2e}"));
            }
        }
    }

    for face in 0..mesh.n_faces() {
        let inc = &mesh.face_to_elements[face];
        if let Some((right, _)) = inc.right {
            for t in [0.25, 0.6] {
                let x = mesh.face_point(face, t);
                let a = field.value(&mesh, inc.left, geoms[inc.left].to_reference(x));
                let b = field.value(&mesh, right, geoms[right].to_reference(x));
                if (a - b).abs() > 1e-10 {
                    return Err(format!("face {face} jump {:.2e}", a - b));
                }
            }
        }
    }
    Ok(())
}

fn solve_sine(config: &HdgConfig) -> std::result::Result<(Mesh, PostprocessedFlux), String> {
    let mesh = ok(build_crisscross_mesh(4))?;
    let sol = ok(solve_hdg(&mesh, config, &ManufacturedProblem::SineDiffusion))?;
    let star = ok(postprocess_flux(&mesh, &sol))?;
    Ok((mesh, star))
}

/// The postprocessed flux has a single-valued normal component.
fn flux_conformity(config: &HdgConfig) -> CheckResult {
    let (mesh, star) = solve_sine(config)?;
    let mut max_jump = 0.0_f64;
    let mut max_mag = 0.0_f64;
    for face in 0..mesh.n_faces() {
        let inc = &mesh.face_to_elements[face];
        let Some((right, _)) = inc.right else { continue };
        let [a, b] = mesh.faces[face];
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        let len = mesh.face_length(face);
        let normal = [(pb[1] - pa[1]) / len, -(pb[0] - pa[0]) / len];
        for t in [0.15, 0.5, 0.85] {
            let x = mesh.face_point(face, t);
            let gl = ok(mesh.element_geometry(inc.left))?;
            let gr = ok(mesh.element_geometry(right))?;
            let (vl, _) = ok(star.eval(&mesh, inc.left, &[gl.to_reference(x)]))?;
            let (vr, _) = ok(star.eval(&mesh, right, &[gr.to_reference(x)]))?;
            let nl = vl[0][0] * normal[0] + vl[0][1] * normal[1];
            let nr = vr[0][0] * normal[0] + vr[0][1] * normal[1];
            max_jump = max_jump.max((nl - nr).abs());
            max_mag = max_mag.max(nl.abs()).max(nr.abs());
        }
    }
    if max_jump > 1e-9 * max_mag.max(1e-300) {
        return Err(format!(
            "normal jump {max_jump:.2e} vs magnitude {max_mag:.2e}"
        ));
    }
    Ok(())
}

/// The divergence of the postprocessed flux balances the load in every
/// element: its moments against the potential space equal the assembled
/// load moments.
fn local_conservation(config: &HdgConfig) -> CheckResult {
    let (mesh, star) = solve_sine(config)?;
    let problem = ManufacturedProblem::SineDiffusion;
    let tables = ok(FeSpaceTables::new(config.k))?;
    let rule = &tables.assembly_rule;
    let phi = tables.potential.eval(&rule.points);
    let mut max_res = 0.0_f64;
    let mut scale = 0.0_f64;
    for e in 0..mesh.n_elements() {
        let geom = ok(mesh.element_geometry(e))?;
        let det = geom.det.abs();
        let (_, divs) = ok(star.eval(&mesh, e, &rule.points))?;
        let f_at: Vec<f64> = rule
            .points
            .iter()
            .map(|&p| {
                let x = geom.to_physical(p);
                problem.f(x[0], x[1])
            })
            .collect();
        let norm = |g: &dyn Fn(usize) -> f64| -> f64 {
            rule.weights
                .iter()
                .enumerate()
                .map(|(q, w)| det * w * g(q) * g(q))
                .sum::<f64>()
                .sqrt()
        };
        scale = scale.max(det.sqrt() * (norm(&|q| f_at[q]) + norm(&|q| divs[q])));
        for i in 0..tables.potential.dim {
            let res: f64 = rule
                .weights
                .iter()
                .enumerate()
                .map(|(q, w)| det * w * (divs[q] + f_at[q]) * phi[(q, i)])
                .sum();
            max_res = max_res.max(res.abs());
        }
    }
    if max_res > 1e-10 * scale {
        return Err(format!("residual {max_res:.2e} vs scale {scale:.2e}"));
    }
    Ok(())
}
