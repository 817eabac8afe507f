use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lie_reduce::exec::{self, Mode};
use lie_reduce::linearize::{default_grid, linearizability_scan};
use lie_reduce::reduction::{run_instance, CaseSpec, Catalog};
use std::collections::BTreeMap;
use std::hint::black_box;

fn modes() -> Vec<(&'static str, Mode)> {
    let mut m = vec![("sequential", Mode::Sequential)];
    if cfg!(feature = "parallel") {
        m.push(("parallel", Mode::Parallel));
    }
    m
}

fn catalog_jobs(cat: &Catalog) -> Vec<(&CaseSpec, BTreeMap<String, lie_reduce::expr::Q>)> {
    let mut jobs = Vec::new();
    for c in &cat.cases {
        if c.name.starts_with("L2.2") {
            continue;
        }
        if c.samples.is_empty() {
            jobs.push((c, BTreeMap::new()));
        } else {
            jobs.extend(c.samples.iter().map(|s| (c, s.clone())));
        }
    }
    jobs
}

fn catalog(c: &mut Criterion) {
    let cat = Catalog::embedded();
    let jobs = catalog_jobs(&cat);
    let mut g = c.benchmark_group("catalog");
    g.sample_size(10);
    for (name, mode) in modes() {
        g.bench_with_input(BenchmarkId::new("run", name), &mode, |b, &mode| {
            b.iter(|| {
                exec::map(mode, &jobs, |(c, v)| {
                    run_instance(&c.instantiate(v).unwrap()).unwrap().passed
                })
            })
        });
    }
    g.finish();
}

fn scans(c: &mut Criterion) {
    let cat = Catalog::embedded();
    let grid = default_grid();
    let mut g = c.benchmark_group("scan");
    g.sample_size(10);
    for (case, param) in [("L2.8a", "k0"), ("L2.12a", "k0")] {
        for (name, mode) in modes() {
            g.bench_with_input(BenchmarkId::new(case, name), &mode, |b, &mode| {
                b.iter(|| {
                    black_box(
                        linearizability_scan(cat.get(case).unwrap(), param, &grid, mode).unwrap(),
                    )
                })
            });
        }
    }
    g.finish();
}

criterion_group!(benches, catalog, scans);
criterion_main!(benches);
