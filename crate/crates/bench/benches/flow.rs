use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use cusp_core::cusp::{localize, LocalizeOptions, Rect};
use cusp_core::flow::{integrate_loop, monodromy, FlowOptions, MonodromyOptions};
use cusp_core::model::{Builtin, LoopSpec, ParamMatrixFn, Point};

fn loops(c: &mut Criterion) {
    let gamma = LoopSpec::circle(Point::new(0.0, 0.0), 1.0).unwrap();
    let opts = FlowOptions::default();
    for (name, b) in [("sqrt", Builtin::Sqrt), ("block_n5", Builtin::BlockN5 { eps: 0.5 })] {
        let f = ParamMatrixFn::builtin(b);
        c.bench_function(&format!("loop_monodromy/{name}"), |bench| {
            bench.iter(|| {
                let path = integrate_loop(&f, black_box(&gamma), 0.0, 1, &opts).unwrap();
                monodromy(&path, &MonodromyOptions::default()).unwrap()
            })
        });
    }
}

fn localization(c: &mut Criterion) {
    let f = ParamMatrixFn::builtin(Builtin::PhasePi { eps: 0.1 });
    let rect = Rect::new((-2.0, 2.0), (-2.0, 2.0)).unwrap();
    let mut group = c.benchmark_group("localize");
    group.sample_size(10);
    group.bench_function("phase_pi", |b| b.iter(|| localize(&f, rect, &LocalizeOptions::default()).unwrap()));
    group.finish();
}

criterion_group!(benches, loops, localization);
criterion_main!(benches);
