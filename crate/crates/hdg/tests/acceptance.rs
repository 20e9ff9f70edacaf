//! Acceptance suite: one test per release criterion, each printing a single
//! pass/fail line. Failures are reported honestly with the measured values.

mod common;

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use common::{monolithic_solve, rel_close};
use hdg::fespace::{eval_scalar, quad_edge, quad_triangle, EdgeBasis, FeSpaceTables, MAX_EXACTNESS};
use hdg::harness::{
    compute_errors, ConvergenceRow, ConvergenceTable, ManufacturedProblem, MeshFamily,
};
use hdg::hdg_core::{
    apply_dirichlet, assemble_condensed, assemble_local, condense, factor_skyline, solve_hdg,
    HdgConfig, ProblemData,
};
use hdg::mesh::{build_structured_mesh, Mesh};
use hdg::postprocess::postprocess_flux;
use hdg::verify::{error_triple, pi_h, triple_norm, PiecewiseField};
use nalgebra::DVector;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const ORDER_TOL: f64 = 0.1;

struct StudyData {
    table: ConvergenceTable,
    /// Triple-seminorm error per level, as (n, value).
    triples: Vec<(usize, f64)>,
    elapsed: Duration,
}

/// Sine-diffusion study on the crisscross family; k=0 runs n up to 32,
/// k=1 up to 16. Computed once and shared across criteria.
fn study(k: usize) -> &'static StudyData {
    static K0: OnceLock<StudyData> = OnceLock::new();
    static K1: OnceLock<StudyData> = OnceLock::new();
    assert!(k <= 1);
    let cell = if k == 0 { &K0 } else { &K1 };
    cell.get_or_init(|| {
        let levels = if k == 0 { 5 } else { 4 };
        let problem = ManufacturedProblem::SineDiffusion;
        let config = HdgConfig::new(k).unwrap();
        let started = Instant::now();
        let mut rows: Vec<ConvergenceRow> = Vec::new();
        let mut triples = Vec::new();
        for j in 0..levels {
            let n = 2usize << j;
            let mesh = MeshFamily::Crisscross.build(n).unwrap();
            let sol = solve_hdg(&mesh, &config, &problem).unwrap();
            let star = postprocess_flux(&mesh, &sol).unwrap();
            let mut row = compute_errors(&sol, &star, &problem, &mesh, k).unwrap();
            if let Some(prev) = rows.last() {
                row.set_orders_from(prev);
            }
            let eu = |x: f64, y: f64| problem.u(x, y);
            let es = |x: f64, y: f64| problem.sigma(x, y);
            let et = error_triple(&mesh, &sol, &eu, &es).unwrap();
            triples.push((n, triple_norm(&et, &mesh, &problem, k).unwrap()));
            rows.push(row);
        }
        StudyData {
            table: ConvergenceTable { rows },
            triples,
            elapsed: started.elapsed(),
        }
    })
}

fn report(num: usize, name: &str, pass: bool, detail: String) {
    let status = if pass { "pass" } else { "FAIL" };
    let suffix = if detail.is_empty() {
        String::new()
    } else {
        format!(" — {detail}")
    };
    println!("criterion {num} ({name}): {status}{suffix}");
    assert!(pass, "criterion {num} ({name}) failed{suffix}");
}

#[test]
fn criterion_1_convergence_orders() {
    // Finest-pair orders: u at k+2, flux at k+1, within 0.1.
    let mut detail = Vec::new();
    let mut pass = true;
    let mut total = Duration::ZERO;
    for k in 0..=1 {
        let data = study(k);
        total += data.elapsed;
        let last = data.table.rows.last().unwrap();
        let ord_u = last.ord_u.unwrap();
        let ord_sigma = last.ord_sigma.unwrap();
        pass &= (ord_u - (k as f64 + 2.0)).abs() <= ORDER_TOL;
        pass &= (ord_sigma - (k as f64 + 1.0)).abs() <= ORDER_TOL;
        detail.push(format!("k={k}: ord_u={ord_u:.3}, ord_sigma={ord_sigma:.3}"));
    }
    pass &= total < Duration::from_secs(120);
    detail.push(format!("runtime {:.1}s", total.as_secs_f64()));
    report(1, "convergence orders", pass, detail.join("; "));
}

#[test]
fn criterion_2_postprocessed_orders() {
    let mut detail = Vec::new();
    let mut pass = true;
    for k in 0..=1 {
        let last = study(k).table.rows.last().unwrap();
        let ord_star = last.ord_sigma_star.unwrap();
        let ord_div = last.ord_div.unwrap();
        pass &= (ord_star - (k as f64 + 1.0)).abs() <= ORDER_TOL;
        pass &= (ord_div - (k as f64 + 2.0)).abs() <= ORDER_TOL;
        detail.push(format!("k={k}: ord_star={ord_star:.3}, ord_div={ord_div:.3}"));
    }
    report(2, "postprocessed orders", pass, detail.join("; "));
}

/// Reference error magnitudes for the sine-diffusion study at matching
/// (k, n), from an independent computation on a comparable (but not
/// identical) initial mesh; the check is therefore a loose factor of 2.
/// Columns: k, n, err_u, err_sigma.
const REFERENCE_PRIMARY: [(usize, usize, f64, f64); 9] = [
    (0, 2, 3.052e-1, 1.230),
    (0, 4, 7.828e-2, 6.443e-1),
    (0, 8, 1.968e-2, 3.250e-1),
    (0, 16, 4.927e-3, 1.629e-1),
    (0, 32, 1.232e-3, 8.147e-2),
    (1, 2, 3.431e-2, 2.524e-1),
    (1, 4, 4.376e-3, 6.211e-2),
    (1, 8, 5.510e-4, 1.552e-2),
    (1, 16, 6.900e-5, 3.882e-3),
];
/// Columns: k, n, err_sigma_star, err_div.
const REFERENCE_POSTPROCESSED: [(usize, usize, f64, f64); 9] = [
    (0, 2, 1.080, 0.7003),
    (0, 4, 5.616e-1, 0.1861),
    (0, 8, 2.826e-1, 0.0470),
    (0, 16, 1.415e-1, 0.0118),
    (0, 32, 7.078e-2, 0.0029),
    (1, 2, 2.278e-1, 0.0114),
    (1, 4, 5.514e-2, 0.0014),
    (1, 8, 1.373e-2, 1.7919e-4),
    (1, 16, 3.429e-3, 2.2405e-5),
];

#[test]
fn criterion_3_error_magnitudes() {
    let row_for = |k: usize, n: usize| -> &'static ConvergenceRow {
        study(k)
            .table
            .rows
            .iter()
            .find(|r| r.h_inv == n)
            .expect("level present")
    };
    let mut violations = Vec::new();
    let mut cells = 0;
    let mut check = |label: &str, k: usize, n: usize, ours: f64, reference: f64| {
        cells += 1;
        let ratio = ours / reference;
        if !(0.5..=2.0).contains(&ratio) {
            violations.push(format!("k={k} n={n} {label} ratio {ratio:.2}"));
        }
    };
    for (k, n, err_u, err_sigma) in REFERENCE_PRIMARY {
        let row = row_for(k, n);
        check("err_u", k, n, row.err_u, err_u);
        check("err_sigma", k, n, row.err_sigma, err_sigma);
    }
    for (k, n, err_star, err_div) in REFERENCE_POSTPROCESSED {
        let row = row_for(k, n);
        check("err_sigma_star", k, n, row.err_sigma_star, err_star);
        check("err_div", k, n, row.err_div, err_div);
    }
    let pass = violations.is_empty();
    let detail = if pass {
        format!("all {cells} cells within factor 2")
    } else {
        format!(
            "{} of {cells} cells outside factor 2: {}",
            violations.len(),
            violations.join(", ")
        )
    };
    report(3, "error magnitudes", pass, detail);
}

#[test]
fn criterion_4_polynomial_exactness() {
    let problem = ManufacturedProblem::Linear;
    let mut worst = 0.0_f64;
    let mut pass = true;
    for k in 0..=1 {
        let levels = if k == 0 { 5 } else { 4 };
        let config = HdgConfig::new(k).unwrap();
        for j in 0..levels {
            let n = 2usize << j;
            let mesh = MeshFamily::Crisscross.build(n).unwrap();
            let sol = solve_hdg(&mesh, &config, &problem).unwrap();
            let star = postprocess_flux(&mesh, &sol).unwrap();
            let row = compute_errors(&sol, &star, &problem, &mesh, k).unwrap();
            for err in [row.err_u, row.err_sigma, row.err_sigma_star] {
                worst = worst.max(err);
                pass &= err < 1e-11;
            }
        }
    }
    report(4, "polynomial exactness", pass, format!("max error {worst:.2e}"));
}

#[test]
fn criterion_5_condensation_equivalence() {
    let problem = ManufacturedProblem::SineDiffusion;
    let cases: Vec<(Mesh, usize)> = vec![
        (MeshFamily::Diagonal.build(1).unwrap(), 0),
        (MeshFamily::Diagonal.build(2).unwrap(), 1),
        (MeshFamily::Crisscross.build(2).unwrap(), 0),
        (MeshFamily::Crisscross.build(2).unwrap(), 2),
        (MeshFamily::Diagonal.build(4).unwrap(), 3),
    ];
    let mut worst = 0.0_f64;
    for (mesh, k) in &cases {
        assert!(mesh.n_elements() <= 32);
        let sol = solve_hdg(mesh, &HdgConfig::new(*k).unwrap(), &problem).unwrap();
        let reference = monolithic_solve(mesh, *k, &problem);
        let mut scale = 0.0_f64;
        for e in 0..mesh.n_elements() {
            scale = scale.max(reference.sigma[e].amax()).max(reference.u[e].amax());
        }
        let mut max_dev = 0.0_f64;
        for e in 0..mesh.n_elements() {
            max_dev = max_dev.max((&sol.sigma[e] - &reference.sigma[e]).amax());
            max_dev = max_dev.max((&sol.u[e] - &reference.u[e]).amax());
        }
        for f in 0..mesh.n_faces() {
            for r in 0..sol.lambda[f].len() {
                max_dev = max_dev.max((sol.lambda[f][r] - reference.lambda[f][r]).abs());
            }
        }
        worst = worst.max(max_dev / scale);
    }
    report(
        5,
        "condensation equivalence",
        worst <= 1e-10,
        format!("max relative deviation {worst:.2e} over {} meshes", cases.len()),
    );
}

#[test]
fn criterion_6_structural_invariants() {
    let problem = ManufacturedProblem::SineDiffusion;
    let mut worst_defect = 0.0_f64;
    let mut pass = true;
    for k in 0..=3 {
        let config = HdgConfig::new(k).unwrap();
        let tables = FeSpaceTables::new(k).unwrap();
        for family in [MeshFamily::Crisscross, MeshFamily::Diagonal] {
            for n in [2, 4] {
                let mesh = family.build(n).unwrap();
                let mut locals = Vec::new();
                let mut condensed = Vec::new();
                for e in 0..mesh.n_elements() {
                    let ls = assemble_local(&mesh, e, &config, &problem, &tables).unwrap();
                    condensed.push(condense(&ls).unwrap());
                    locals.push(ls);
                }
                let boundary = apply_dirichlet(&mesh, &problem, k).unwrap();
                let system =
                    assemble_condensed(&mesh, &config, &locals, &condensed, &boundary).unwrap();
                let defect = system.matrix.symmetry_defect() / system.matrix.max_abs().max(1.0);
                worst_defect = worst_defect.max(defect);
                pass &= defect <= 1e-12;
                pass &= factor_skyline(&system.matrix).is_ok();
            }
        }
    }
    let mut check_runs = Vec::new();
    for k in 0..=3 {
        let out = std::process::Command::new(env!("CARGO_BIN_EXE_hdg"))
            .args(["check", "--k", &k.to_string()])
            .output()
            .expect("binary runs");
        pass &= out.status.code() == Some(0);
        check_runs.push(out.status.code().unwrap_or(-1));
    }
    report(
        6,
        "structural invariants",
        pass,
        format!("max symmetry defect {worst_defect:.2e}; check exit codes {check_runs:?}"),
    );
}

#[test]
fn criterion_7_flux_identities() {
    let k = 0;
    let problem = ManufacturedProblem::SineDiffusion;
    let mesh = MeshFamily::Crisscross.build(8).unwrap();
    let sol = solve_hdg(&mesh, &HdgConfig::new(k).unwrap(), &problem).unwrap();
    let star = postprocess_flux(&mesh, &sol).unwrap();
    let tables = FeSpaceTables::new(k).unwrap();

    // Normal-trace continuity at interior-face quadrature points.
    let mut max_jump = 0.0_f64;
    let mut max_mag = 0.0_f64;
    for face in 0..mesh.n_faces() {
        let inc = &mesh.face_to_elements[face];
        let Some((right, _)) = inc.right else { continue };
        let [a, b] = mesh.faces[face];
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        let len = mesh.face_length(face);
        let normal = [(pb[1] - pa[1]) / len, -(pb[0] - pa[0]) / len];
        let gl = mesh.element_geometry(inc.left).unwrap();
        let gr = mesh.element_geometry(right).unwrap();
        for &t in &tables.error_edge_rule.points {
            let x = mesh.face_point(face, t);
            let (vl, _) = star.eval(&mesh, inc.left, &[gl.to_reference(x)]).unwrap();
            let (vr, _) = star.eval(&mesh, right, &[gr.to_reference(x)]).unwrap();
            let nl = vl[0][0] * normal[0] + vl[0][1] * normal[1];
            let nr = vr[0][0] * normal[0] + vr[0][1] * normal[1];
            max_jump = max_jump.max((nl - nr).abs());
            max_mag = max_mag.max(nl.abs()).max(nr.abs());
        }
    }
    let jump_rel = max_jump / max_mag;

    // Weak divergence residual against every q in the potential space, with
    // the same quadrature that assembled the load.
    let rule = &tables.assembly_rule;
    let phi = tables.potential.eval(&rule.points);
    let mut max_res = 0.0_f64;
    let mut scale = 0.0_f64;
    for e in 0..mesh.n_elements() {
        let geom = mesh.element_geometry(e).unwrap();
        let det = geom.det.abs();
        let (_, divs) = star.eval(&mesh, e, &rule.points).unwrap();
        let f_at: Vec<f64> = rule
            .points
            .iter()
            .map(|&p| {
                let x = geom.to_physical(p);
                problem.f(x[0], x[1])
            })
            .collect();
        let l2 = |g: &dyn Fn(usize) -> f64| -> f64 {
            rule.weights
                .iter()
                .enumerate()
                .map(|(q, w)| det * w * g(q) * g(q))
                .sum::<f64>()
                .sqrt()
        };
        scale = scale.max(det.sqrt() * (l2(&|q| f_at[q]) + l2(&|q| divs[q])));
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
    let res_rel = max_res / scale;
    let pass = jump_rel < 1e-9 && res_rel < 1e-10;
    report(
        7,
        "flux identities",
        pass,
        format!("normal-jump {jump_rel:.2e} rel; weak residual {res_rel:.2e} rel"),
    );
}

#[test]
fn criterion_8_projection_moment_identities() {
    let mesh = build_structured_mesh(2).unwrap();
    let mut rng = StdRng::seed_from_u64(987);
    let mut worst = 0.0_f64;
    let mut pass = true;
    for k in 0..=2 {
        let vol_basis = hdg::fespace::TriangleBasis::new(k + 1);
        let edge_basis = EdgeBasis::new(k + 1);
        let test_basis = hdg::fespace::TriangleBasis::new(k);
        let test_edge = EdgeBasis::new(k);
        let rule = quad_triangle((2 * k + 10).min(MAX_EXACTNESS)).unwrap();
        let erule = quad_edge((2 * k + 10).min(MAX_EXACTNESS)).unwrap();
        let phi = test_basis.eval(&rule.points);
        let psi = test_edge.eval(&erule.points);
        let geoms: Vec<_> = (0..mesh.n_elements())
            .map(|e| mesh.element_geometry(e).unwrap())
            .collect();
        for _ in 0..100 {
            let vc: Vec<DVector<f64>> = (0..mesh.n_elements())
                .map(|_| DVector::from_fn(vol_basis.dim, |_, _| rng.gen_range(-1.0..1.0)))
                .collect();
            let mc: Vec<DVector<f64>> = (0..mesh.n_faces())
                .map(|_| DVector::from_fn(edge_basis.dim, |_, _| rng.gen_range(-1.0..1.0)))
                .collect();
            let v = |e: usize, x: [f64; 2]| -> f64 {
                let r = geoms[e].to_reference(x);
                eval_scalar(&vol_basis, vc[e].as_slice(), &[r])[0]
            };
            let mu = |face: usize, t: f64| -> f64 {
                let row = edge_basis.eval(&[t]);
                (0..edge_basis.dim).map(|i| mc[face][i] * row[(0, i)]).sum()
            };
            let field = pi_h(&mesh, k, &v, &mu).unwrap();

            for (e, geom) in geoms.iter().enumerate() {
                for i in 0..test_basis.dim {
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
                    worst = worst.max(moment.abs());
                    pass &= moment.abs() <= 1e-12;
                }
            }
            for face in 0..mesh.n_faces() {
                let left = mesh.face_to_elements[face].left;
                for r in 0..test_edge.dim {
                    let moment: f64 = erule
                        .points
                        .iter()
                        .enumerate()
                        .map(|(q, &t)| {
                            let rp = geoms[left].to_reference(mesh.face_point(face, t));
                            erule.weights[q]
                                * (field.value(&mesh, left, rp) - mu(face, t))
                                * psi[(q, r)]
                        })
                        .sum();
                    worst = worst.max(moment.abs());
                    pass &= moment.abs() <= 1e-12;
                }
            }
        }
    }
    report(
        8,
        "projection moment identities",
        pass,
        format!("100 random inputs per degree; max moment defect {worst:.2e}"),
    );
}

#[test]
fn criterion_9_triple_norm_rate() {
    let mut detail = Vec::new();
    let mut pass = true;
    for k in 0..=1 {
        let triples = &study(k).triples;
        let (_, prev) = triples[triples.len() - 2];
        let (_, last) = triples[triples.len() - 1];
        let order = (prev / last).log2();
        pass &= order >= k as f64 + 1.0 - ORDER_TOL;
        detail.push(format!("k={k}: order {order:.3}"));
    }
    report(9, "triple-norm rate", pass, detail.join("; "));
}

/// The computed errors do not depend on the quadrature resolution beyond
/// roundoff-level tail terms.
#[test]
fn quadrature_doubling_stability() {
    let k = 1;
    let problem = ManufacturedProblem::SineDiffusion;
    let mesh = MeshFamily::Crisscross.build(4).unwrap();
    let sol = solve_hdg(&mesh, &HdgConfig::new(k).unwrap(), &problem).unwrap();
    let star = postprocess_flux(&mesh, &sol).unwrap();
    let base = compute_errors(&sol, &star, &problem, &mesh, k).unwrap();
    let fine = hdg::harness::compute_errors_with_exactness(
        &sol, &star, &problem, &mesh, k, MAX_EXACTNESS,
    )
    .unwrap();
    for (a, b) in [
        (base.err_u, fine.err_u),
        (base.err_sigma, fine.err_sigma),
        (base.err_sigma_star, fine.err_sigma_star),
        (base.err_div, fine.err_div),
    ] {
        assert!(rel_close(a, b, 1e-3), "{a} vs {b}");
    }
}
