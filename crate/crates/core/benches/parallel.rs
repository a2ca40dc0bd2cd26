//! Sequential vs rayon execution of a grid fit and a mixture pushforward.
//!
//! Run with `cargo bench -p openpop-core`; set `RAYON_NUM_THREADS` to vary the pool.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use openpop_core::inference::default_engine;
use openpop_core::{
    analyze, ComponentPrior, Execution, FamilySpec, FitSettings, ModelEntry, PopulationSpaceModel, PriorSpec,
    QuantitySpec,
};

fn model() -> PopulationSpaceModel {
    let weak = |a: &str, b: &str| {
        PriorSpec::new([
            (a, ComponentPrior::Normal { mean: 0.0, sd: 10.0 }),
            (b, ComponentPrior::LogNormal { meanlog: 0.0, sdlog: 1.5 }),
        ])
    };
    PopulationSpaceModel::new(vec![
        ModelEntry::new(FamilySpec::normal(), 0.5, weak("mu", "sigma")),
        ModelEntry::new(FamilySpec::student_t(4.0).unwrap(), 0.5, weak("location", "scale")),
    ])
    .unwrap()
}

fn bench(c: &mut Criterion) {
    let model = model();
    let f = FamilySpec::normal();
    let data = f.sample(&f.params(&[1.0, 2.0]).unwrap(), 100, 0).unwrap();
    let mut group = c.benchmark_group("analyze");
    group.sample_size(10);
    for (label, execution) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        let settings = FitSettings { execution, ..FitSettings::default() };
        group.bench_with_input(BenchmarkId::new("fit+weights", label), &settings, |b, s| {
            b.iter(|| analyze(default_engine(), &model, &data, s).unwrap())
        });
        let analysis = analyze(default_engine(), &model, &data, &settings).unwrap();
        group.bench_with_input(BenchmarkId::new("quantile-pushforward", label), &analysis, |b, a| {
            b.iter(|| a.mixture(&model, QuantitySpec::Quantile(0.9)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
