//! Benchmarks for the data-parallel kernels.
//!
//! Built with the default `parallel` feature this compares the rayon path
//! at several worker counts (1 worker ≈ the sequential fallback, plus the
//! chunking overhead). Build with `--no-default-features` to measure the
//! true sequential code path:
//!
//! ```text
//! cargo bench -p startail-core
//! cargo bench -p startail-core --no-default-features
//! ```

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use startail_core::bounds::Constants;
use startail_core::montecarlo::{mc_tail, sweep, Estimator, GridSpec};
use startail_core::oracles::exact_star_distribution;
use startail_core::prob::EdgeProb;

fn bench_kernel<F: Fn() + Sync>(c: &mut Criterion, name: &str, f: F) {
    let mut group = c.benchmark_group(name);
    #[cfg(feature = "parallel")]
    {
        for workers in [1usize, 2, 4, 8] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .expect("pool");
            group.bench_with_input(BenchmarkId::new("workers", workers), &workers, |b, _| {
                b.iter(|| pool.install(&f));
            });
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        group.bench_function(BenchmarkId::new("sequential", 0), |b| {
            b.iter(&f);
        });
    }
    group.finish();
}

fn enumeration(c: &mut Criterion) {
    let p = EdgeProb::from_fraction(1, 2).unwrap();
    bench_kernel(c, "exact_star_distribution_n7", || {
        exact_star_distribution(7, &p, 2).unwrap();
    });
}

fn monte_carlo(c: &mut Criterion) {
    bench_kernel(c, "mc_tail_n40", || {
        mc_tail(40, 0.1, 2, 400.0, 4_000, 7).unwrap();
    });
}

fn sweep_rows(c: &mut Criterion) {
    let grid = GridSpec {
        n: vec![20, 40, 60, 80],
        p: vec![
            EdgeProb::from_fraction(1, 10).unwrap(),
            EdgeProb::from_fraction(3, 10).unwrap(),
        ],
        r: vec![2],
        eps: vec![0.5, 1.0],
    };
    let est = Estimator::Mc {
        replicates: 500,
        seed: 3,
    };
    bench_kernel(c, "sweep_16_rows", || {
        sweep(&grid, &est, &Constants::default()).unwrap();
    });
}

criterion_group!(benches, enumeration, monte_carlo, sweep_rows);
criterion_main!(benches);
