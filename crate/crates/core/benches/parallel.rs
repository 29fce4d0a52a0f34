use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use ceig::instances;
use ceig::oracle::{enumerate_all, OracleConfig};
use ceig::par::Exec;
use ceig::poly::build_cop_system;
use ceig::sdp::{assemble_schur, build_relaxation, solve, SdpProblem, SdpSettings, Sense};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn relaxation(pair: &ceig::TensorPair, k: usize) -> SdpProblem {
    let sys = build_cop_system(pair);
    build_relaxation(&sys.f0, &sys.p, &sys.q, k, Sense::Minimize).unwrap()
}

/// A well-conditioned random SPD matrix per block, standing in for `W⁻¹`.
fn scalings(problem: &SdpProblem) -> Vec<DMatrix<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    problem
        .psd_blocks
        .iter()
        .map(|op| {
            let s = op.side();
            let g = DMatrix::<f64>::from_fn(s, s, |_, _| StandardNormal.sample(&mut rng));
            &g * g.transpose() / s as f64 + DMatrix::identity(s, s)
        })
        .collect()
}

fn schur(c: &mut Criterion) {
    let mut group = c.benchmark_group("schur");
    group.sample_size(10);
    for (name, pair, k) in [("ling3x4_k5", instances::ling_3x4(), 5), ("exp4_k5", instances::exp_pair(4), 5)] {
        let problem = relaxation(&pair, k);
        let winv = scalings(&problem);
        for (mode, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(mode, name), &exec, |b, &exec| {
                b.iter(|| assemble_schur(&problem.psd_blocks, &winv, problem.nvar(), exec))
            });
        }
    }
    group.finish();
}

fn sdp_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("sdp_solve");
    group.sample_size(10);
    let problem = relaxation(&instances::ling_3x4(), 5);
    for (mode, exec) in MODES {
        let settings = SdpSettings { exec, ..Default::default() };
        group.bench_function(BenchmarkId::new(mode, "ling3x4_k5"), |b| b.iter(|| solve(&problem, &settings)));
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("oracle");
    group.sample_size(10);
    let pair = instances::random_positive_pair(3, 4, 11);
    for (mode, exec) in MODES {
        let cfg = OracleConfig { exec, ..Default::default() };
        group.bench_function(BenchmarkId::new(mode, "random_n4_m3"), |b| b.iter(|| enumerate_all(&pair, &cfg).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, schur, sdp_solve, oracle);
criterion_main!(benches);
