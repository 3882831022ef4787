use crate::config::RunConfig;
use crate::output::write_csv;
use serde_json::{json, Value};
use std::path::Path;
use subshock::bifurc::{
    equilibria_and_spectra, normal_form_coefficients, small_shock_profile, sotomayor_check, SmallShockOptions,
    SmallShockSystem,
};
use subshock::hetero::{
    assemble_singular_orbit, solve_heteroclinic, sweep_epsilon, HeteroOptions, HeteroclinicSolution, InitialGuess,
};
use subshock::layer::{adjoint_growth_check, transversality_determinant};
use subshock::model::{check_lax, subshock_expected};
use subshock::par::Exec;
use subshock::pdecheck::{measure_front, Grid1D, PdeSolver, Reconstruction};
use subshock::slowdyn::sandwich_holds;
use subshock::spectral::{fast_jacobian_spectrum, reduced_eigenvalues, reduced_ordering};
use subshock::{Branch, Error, WaveProblem};

/// Failure of a subcommand: bad input (exit 2) or a solver failure (exit 3).
#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Solver(String),
    Io(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::EqualStates(_) | Error::LaxViolated { .. } | Error::NotImplemented(_) => {
                Failure::Validation(e.to_string())
            }
            _ => Failure::Solver(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

pub type Outcome = Result<Value, Failure>;

pub fn admissibility(problem: &WaveProblem) -> Value {
    let lax = check_lax(problem);
    json!({
        "lax_ok": lax.lax_ok,
        "laxbis_ok": lax.laxbis_ok,
        "subshock_expected": subshock_expected(problem),
        "speed": problem.c,
        "sonic_point": problem.u_star,
    })
}

fn hetero_options(cfg: &RunConfig, exec: Exec) -> HeteroOptions {
    let mut o = HeteroOptions { half_length: cfg.domain.half_length, ..HeteroOptions::default() };
    o.newton.exec = exec;
    if let Some(n) = cfg.domain.mesh_size {
        o.mesh_size = n;
    }
    o
}

fn profile_rows(sol: &HeteroclinicSolution) -> Vec<[f64; 4]> {
    sol.mesh.iter().zip(&sol.values).map(|(&x, y)| [x, y[0], y[1], y[2]]).collect()
}

fn write_profile(path: &Path, sol: &HeteroclinicSolution) -> std::io::Result<()> {
    write_csv(path, None, &["x", "u", "v", "w"], profile_rows(sol))
}

pub fn spectrum(cfg: &RunConfig, problem: &WaveProblem, out: &Path) -> Outcome {
    let eps: Vec<f64> = match (&cfg.eps_list, cfg.epsilon) {
        (Some(_), _) => cfg.eps_list()?,
        (None, Some(e)) => vec![e],
        (None, None) => vec![1e-4, 1e-3, 1e-2, 1e-1, 1.0],
    };
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for &e in &eps {
        for b in [Branch::Minus, Branch::Plus] {
            let r = fast_jacobian_spectrum(problem, problem.end_point(b), e);
            let mut row = vec![e, problem.end_state(b)];
            for z in &r.eigenvalues {
                row.extend([z.re, z.im]);
            }
            row.extend([r.n_stable as f64, r.n_unstable as f64]);
            rows.push(row);
            reports.push(json!({ "branch": b.name(), "report": r }));
        }
    }
    write_csv(
        &out.join("spectrum.csv"),
        None,
        &["epsilon", "u", "re1", "im1", "re2", "im2", "re3", "im3", "n_stable", "n_unstable"],
        &rows,
    )?;
    let reduced = match (reduced_eigenvalues(problem, Branch::Minus), reduced_eigenvalues(problem, Branch::Plus)) {
        (Ok(m), Ok(p)) => json!({
            "minus": [m.0, m.1],
            "plus": [p.0, p.1],
            "ordering_ok": reduced_ordering(problem).is_ok(),
        }),
        (Err(e), _) | (_, Err(e)) => json!({ "error": e.to_string() }),
    };
    Ok(json!({ "spectra": reports, "reduced": reduced }))
}

pub fn singular(problem: &WaveProblem, out: &Path, exec: Exec) -> Outcome {
    let orbit = assemble_singular_orbit(problem, exec)?;
    let m = orbit.matching;
    let det = transversality_determinant(problem, &m)?;
    let adjoint = adjoint_growth_check(&orbit.layer)?;
    let mut rows: Vec<[f64; 4]> = Vec::new();
    for s in orbit.left.samples.iter().filter(|s| s.x <= m.x_on_minus) {
        rows.push([s.x - m.x_on_minus, s.u, s.v, s.w]);
    }
    rows.push([0.0, m.u_left, m.v_star, m.w_star]);
    rows.push([0.0, m.u_right, m.v_star, m.w_star]);
    for s in orbit.right.samples.iter().filter(|s| s.x >= m.x_on_plus) {
        rows.push([s.x - m.x_on_plus, s.u, s.v, s.w]);
    }
    write_csv(&out.join("singular_orbit.csv"), None, &["x", "u", "v", "w"], &rows)?;
    let layer: Vec<[f64; 2]> = orbit.layer.samples.iter().map(|s| [s.y, s.u]).collect();
    write_csv(&out.join("layer.csv"), None, &["y", "u"], &layer)?;
    Ok(json!({
        "matching": m,
        "w_star": m.w_star,
        "v_star": m.v_star,
        "u_left": m.u_left,
        "u_right": m.u_right,
        "sandwich_holds": sandwich_holds(problem, &m, 1e-12),
        "transversality_det": det,
        "adjoint": adjoint,
        "layer_width_80": orbit.layer.width_80,
    }))
}

pub fn hetero(cfg: &RunConfig, problem: &WaveProblem, out: &Path, exec: Exec) -> Outcome {
    let eps = cfg.epsilon()?;
    let orbit = assemble_singular_orbit(problem, exec)?;
    let mut sol = solve_heteroclinic(problem, eps, &hetero_options(cfg, exec), InitialGuess::Singular(&orbit))?;
    sol.hausdorff_to_singular = Some(sol.hausdorff_to(&orbit, exec));
    write_profile(&out.join("profile.csv"), &sol)?;
    Ok(json!({ "diagnostics": sol.diagnostics(), "sup_vw_distance": sol.sup_vw_distance(&orbit) }))
}

fn eps_tag(e: f64) -> String {
    format!("{e:?}").replace('.', "p")
}

pub fn sweep(cfg: &RunConfig, problem: &WaveProblem, out: &Path, exec: Exec) -> Outcome {
    let list = cfg.eps_list()?;
    let sols = sweep_epsilon(problem, &list, &hetero_options(cfg, exec), exec)?;
    let mut table = Vec::new();
    for s in &sols {
        write_profile(&out.join(format!("profile_eps_{}.csv", eps_tag(s.epsilon))), s)?;
        table.push([
            s.epsilon,
            s.residual_norm,
            s.boundary_defect,
            s.layer_width_80,
            s.hausdorff_to_singular.unwrap_or(f64::NAN),
            s.iterations as f64,
        ]);
    }
    write_csv(
        &out.join("convergence.csv"),
        None,
        &["epsilon", "residual_norm", "boundary_defect", "layer_width_80", "hausdorff_to_singular", "iterations"],
        &table,
    )?;
    let diags: Vec<_> = sols.iter().map(|s| s.diagnostics()).collect();
    Ok(json!({ "diagnostics": diags }))
}

pub fn bifurcate(cfg: &RunConfig, problem: &WaveProblem, out: &Path, exec: Exec) -> Outcome {
    let delta = cfg.bifurc.delta.unwrap_or(problem.u_plus - problem.u_minus);
    if !problem.model.is_hamer() {
        return Err(Error::NotImplemented("small-shock analysis covers the Hamer model only").into());
    }
    let sys = SmallShockSystem::new(delta, problem.u_plus)?;
    let soto = sotomayor_check()?;
    // The fit is only defined for small |delta|.
    let nf = if delta >= -0.2 { Some(normal_form_coefficients(delta)?) } else { None };
    let (s1, s2) = equilibria_and_spectra(&sys)?;
    let mut opts = SmallShockOptions::default();
    opts.newton.exec = exec;
    if let Some(n) = cfg.bifurc.mesh_size {
        opts.mesh_size = n;
    }
    let sol = small_shock_profile(&sys, &opts)?;
    write_profile(&out.join("small_shock_profile.csv"), &sol)?;
    Ok(json!({
        "delta": delta,
        "speed": sys.speed(),
        "sotomayor": soto,
        "normal_form": nf,
        "spectrum_p1": s1,
        "spectrum_p2": s2,
        "diagnostics": sol.diagnostics(),
    }))
}

/// ε values halving from 0.2 down to the target.
fn continuation_chain(target: f64) -> Vec<f64> {
    let mut v = Vec::new();
    let mut e = 0.2;
    while e > 1.5 * target {
        v.push(e);
        e *= 0.5;
    }
    v.push(target);
    v
}

pub fn pde(cfg: &RunConfig, problem: &WaveProblem, out: &Path, exec: Exec) -> Outcome {
    let eps = cfg.epsilon()?;
    let opts = hetero_options(cfg, exec);
    let sols = sweep_epsilon(problem, &continuation_chain(eps), &opts, exec)?;
    let prof = sols.last().expect("non-empty sweep").clone();
    let pc = &cfg.pde;
    let half = opts.half_length_for(eps) + 10.0;
    let travel = problem.c * pc.t_final;
    let x_min = pc.x_min.unwrap_or(-half + travel.min(0.0));
    let x_max = pc.x_max.unwrap_or(half + travel.max(0.0));
    let mut solver = PdeSolver::new(*problem, eps, Grid1D::new(x_min, x_max, pc.n_cells)?)?;
    solver.exec = exec;
    if pc.second_order {
        solver.reconstruction = Reconstruction::Minmod;
    }
    let (lo, hi) = (prof.mesh[0], prof.mesh[prof.mesh.len() - 1]);
    let (um, up) = (problem.u_minus, problem.u_plus);
    let reference = move |x: f64| {
        if x <= lo {
            um
        } else if x >= hi {
            up
        } else {
            prof.at(x)[0]
        }
    };
    let initial = solver.state_from_profile(&reference)?;
    let snaps = solver.evolve(initial, pc.t_final, pc.snapshot_every)?;
    for (k, s) in snaps.iter().enumerate() {
        let rows: Vec<[f64; 3]> = (0..s.u.len()).map(|i| [solver.grid.x(i), s.u[i], s.v[i]]).collect();
        write_csv(&out.join(format!("snapshot_{k:04}.csv")), Some(&format!("t={:?}", s.t)), &["x", "u", "v"], &rows)?;
    }
    let report = measure_front(&solver, &snaps, Some(&reference))?;
    Ok(json!({
        "speed_estimate": report.speed_estimate,
        "rh_speed": report.rh_speed,
        "shape_error_series": report.shape_error_series,
        "shape_error": report.shape_error(),
        "snapshots": snaps.len(),
        "grid": solver.grid,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_ends_at_target() {
        assert_eq!(continuation_chain(0.05), vec![0.2, 0.1, 0.05]);
        assert_eq!(continuation_chain(0.5), vec![0.5]);
        assert_eq!(continuation_chain(0.2), vec![0.2]);
        assert_eq!(eps_tag(0.05), "0p05");
    }
}
