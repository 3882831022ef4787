use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use subshock::hetero::singular::hausdorff;
use subshock::hetero::{assemble_singular_orbit, solve_heteroclinic, HeteroOptions, InitialGuess};
use subshock::par::Exec;
use subshock::pdecheck::{Grid1D, PdeSolver};
use subshock::slowdyn::{phase_curves, PhaseCurveOptions};
use subshock::WaveProblem;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn bench_hausdorff(c: &mut Criterion) {
    let p = WaveProblem::hamer(1.0, -1.0).unwrap();
    let orbit = assemble_singular_orbit(&p, Exec::default()).unwrap();
    let sol = solve_heteroclinic(&p, 0.05, &HeteroOptions::default(), InitialGuess::Singular(&orbit)).unwrap();
    let (a, b) = (sol.trace(2e-3), orbit.trace(2e-3));
    let mut g = c.benchmark_group("hausdorff");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |bch, &e| {
            bch.iter(|| hausdorff(black_box(&a), black_box(&b), e))
        });
    }
    g.finish();
}

fn bench_pde_steps(c: &mut Criterion) {
    let p = WaveProblem::hamer(1.5, -0.9).unwrap();
    let mut g = c.benchmark_group("pde_20_steps");
    for (name, exec) in MODES {
        let mut s = PdeSolver::new(p, 0.05, Grid1D::new(-50.0, 60.0, 16384).unwrap()).unwrap();
        s.exec = exec;
        let init = s.state_from_profile(|x| 0.3 - 1.2 * (x / 0.2).tanh()).unwrap();
        let dt = s.max_dt(&init.u);
        g.bench_function(name, |bch| {
            bch.iter(|| {
                let mut st = init.clone();
                for _ in 0..20 {
                    st = s.step(&st, dt).unwrap();
                }
                st
            })
        });
    }
    g.finish();
}

fn bench_newton(c: &mut Criterion) {
    let p = WaveProblem::hamer(1.0, -1.0).unwrap();
    let orbit = assemble_singular_orbit(&p, Exec::default()).unwrap();
    let mut g = c.benchmark_group("collocation_solve");
    g.sample_size(10);
    for (name, exec) in MODES {
        let mut opts = HeteroOptions { mesh_size: 6400, ..HeteroOptions::default() };
        opts.newton.exec = exec;
        g.bench_function(name, |bch| {
            bch.iter(|| solve_heteroclinic(&p, 0.05, &opts, InitialGuess::Singular(&orbit)).unwrap())
        });
    }
    g.finish();
}

fn bench_phase_curves(c: &mut Criterion) {
    let p = WaveProblem::hamer(1.5, -0.9).unwrap();
    let mut g = c.benchmark_group("phase_curves");
    for (name, exec) in MODES {
        g.bench_function(name, |bch| bch.iter(|| phase_curves(&p, &PhaseCurveOptions::default(), exec).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, bench_hausdorff, bench_pde_steps, bench_newton, bench_phase_curves);
criterion_main!(benches);
