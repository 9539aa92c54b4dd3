use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use routerq::{ge_sample, Engine, Event, EventKind, GeParams, Rng, StopRule};

fn variates(c: &mut Criterion) {
    let params = GeParams::new(17e5, 4.0).unwrap();
    let mut group = c.benchmark_group("variates");
    group.throughput(Throughput::Elements(1));
    group.bench_function("ge_sample", |b| {
        let mut rng = Rng::new(1);
        b.iter(|| black_box(ge_sample(&params, &mut rng)))
    });
    group.finish();
}

fn engine(c: &mut Criterion) {
    const EVENTS: u64 = 100_000;
    let mut group = c.benchmark_group("engine");
    group.throughput(Throughput::Elements(EVENTS));
    group.bench_function("self_rescheduling_arrivals", |b| {
        b.iter_batched(
            || {
                let mut engine = Engine::new();
                for stream in 0..8 {
                    engine.schedule(stream as f64 * 1e-3, EventKind::ExternalArrival { stream }).unwrap();
                }
                (engine, Rng::new(2))
            },
            |(mut engine, mut rng)| {
                let mut handler = |event: Event, engine: &mut Engine| {
                    let gap = -rng.uniform_open().ln();
                    engine.schedule(event.time + gap, event.kind)?;
                    Ok(())
                };
                engine.run(&mut handler, StopRule::Arrivals(EVENTS)).unwrap();
                black_box(engine.clock())
            },
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

fn replication(c: &mut Criterion) {
    let spec = routerq::builtin_scenario("D").unwrap();
    let mut group = c.benchmark_group("replication");
    group.sample_size(10);
    for arm in spec.arms() {
        let config = spec.router_config(&arm).unwrap();
        let streams = spec.streams(&arm, 10e5).unwrap();
        let mut options = spec.run_options(3);
        options.arrivals = 100_000;
        group.throughput(Throughput::Elements(options.arrivals));
        group.bench_function(format!("1e5_arrivals/{}", arm.label), |b| {
            b.iter(|| black_box(routerq::run_replication(&config, &streams, &options).unwrap().network.window))
        });
    }
    group.finish();
}

criterion_group!(benches, variates, engine, replication);
criterion_main!(benches);
