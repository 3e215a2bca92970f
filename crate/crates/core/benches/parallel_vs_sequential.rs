use criterion::{black_box, criterion_group, criterion_main, Criterion};

use layerlab::allencahn2d::{two_layer_initial, LayerBox};
use layerlab::exec;
use layerlab::interaction::interaction_integral_plus;
use layerlab::potential::make_quartic;
use layerlab::profile1d::solve_profile;

fn interaction(c: &mut Criterion) {
    let pr = solve_profile(&make_quartic(), 40.0, 8001).unwrap();
    let ts: Vec<f64> = (0..49).map(|k| 8.0 + 0.25 * k as f64).collect();
    let mut g = c.benchmark_group("interaction_curve");
    g.bench_function("parallel", |b| b.iter(|| exec::map(black_box(&ts), |&t| interaction_integral_plus(&pr, t).unwrap())));
    g.bench_function("sequential", |b| b.iter(|| exec::seq::map(black_box(&ts), |&t| interaction_integral_plus(&pr, t).unwrap())));
    g.finish();
}

fn resampling(c: &mut Criterion) {
    let pr = solve_profile(&make_quartic(), 40.0, 8001).unwrap();
    let u = two_layer_initial(&pr, 12.0, LayerBox::default());
    // shifted resampling of every grid row, the inner loop of the reduction
    let row = |j: usize| -> f64 { (0..u.nx).filter_map(|i| u.sample(u.x(i) + 0.05, u.y(j) - 0.03)).sum() };
    let mut g = c.benchmark_group("field_resampling");
    g.bench_function("parallel", |b| b.iter(|| exec::map_range(black_box(u.ny), row)));
    g.bench_function("sequential", |b| b.iter(|| exec::seq::map_range(black_box(u.ny), row)));
    g.finish();
}

criterion_group!(benches, interaction, resampling);
criterion_main!(benches);
