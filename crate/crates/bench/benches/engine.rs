use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use gambler_core::engine::{run_direct, sample_schedule, ClockKind, MoneyState};
use gambler_core::models;
use gambler_core::rng::stream;

fn bench_engine(c: &mut Criterion) {
    let mut group = c.benchmark_group("engine");

    let complete = models::complete_graph(100, 1.0).unwrap();
    let init = MoneyState::simple(100);
    group.bench_function("schedule_complete_n100", |b| {
        let mut rng = stream(1, 0);
        b.iter(|| sample_schedule(&complete, ClockKind::Exponential, &mut rng).unwrap());
    });
    group.bench_function("run_complete_n100", |b| {
        let mut rng = stream(1, 1);
        b.iter_batched(
            || sample_schedule(&complete, ClockKind::Exponential, &mut rng).unwrap(),
            |schedule| {
                let mut game_rng = stream(1, 2);
                run_direct(&schedule, &init, &mut game_rng).unwrap()
            },
            BatchSize::SmallInput,
        );
    });

    let er = models::erdos_renyi(10_000, 2.0, &mut stream(2, 0)).unwrap();
    let er_init = MoneyState::simple(10_000);
    group.sample_size(20);
    group.bench_function("full_run_er_n10000_c2", |b| {
        let mut rng = stream(2, 1);
        b.iter(|| {
            let schedule = sample_schedule(&er, ClockKind::Exponential, &mut rng).unwrap();
            run_direct(&schedule, &er_init, &mut rng).unwrap()
        });
    });

    group.finish();
}

criterion_group!(benches, bench_engine);
criterion_main!(benches);
