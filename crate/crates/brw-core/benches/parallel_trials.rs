//! Parallel vs sequential trial execution on a representative Monte Carlo
//! workload (persistence trials on a fiber quotient), plus the deep diagonal
//! DP sweep the spectral estimators run on.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use brw_core::kernel::FullGraph;
use brw_core::law::OffspringLaw;
use brw_core::product::ProductSpec;
use brw_core::rng::{run_trials, run_trials_seq};
use brw_core::vertex::{FactorIndex, VertexId};
use brw_core::{dp, simulate_induced};

fn persistence_workload(c: &mut Criterion) {
    let spec = ProductSpec::srw(3, 100).unwrap();
    let radial = spec.fiber_radial_restricted(FactorIndex::Two);
    let full = FullGraph::new(VertexId::tree_root());
    let law = OffspringLaw::from_mean(1.2875).unwrap();
    let o = VertexId::tree_root();
    let trials = 400u64;

    let mut group = c.benchmark_group("persistence_trials");
    group.sample_size(10);
    group.bench_function("sequential", |b| {
        b.iter_batched(
            || (),
            |_| {
                run_trials_seq(trials, 7, |_, rng| {
                    simulate_induced(&radial, &full, &law, &o, 200, 1_000_000, rng).unwrap()
                })
            },
            BatchSize::SmallInput,
        )
    });
    group.bench_function("parallel", |b| {
        b.iter_batched(
            || (),
            |_| {
                run_trials(trials, 7, |_, rng| {
                    simulate_induced(&radial, &full, &law, &o, 200, 1_000_000, rng).unwrap()
                })
            },
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

fn diagonal_dp(c: &mut Criterion) {
    let spec = brw_core::tree::TreeSpec::regular(3).unwrap();
    let radial = spec.radial_kernel();
    let o = VertexId::tree_root();
    c.bench_function("diag_ln_series_t3_depth_1000", |b| {
        b.iter(|| dp::diag_ln_series(&radial, &o, 1000).unwrap())
    });
}

criterion_group!(benches, persistence_workload, diagonal_dp);
criterion_main!(benches);
