use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use perceptkit::analysis::kruskal_wallis;
use perceptkit::geometry::{regular_polygon, sat_signed_separation};
use perceptkit::rng::SplitMix64;
use perceptkit::scene::{place_shapes, ShapeSpec, ShapeStyle, DEFAULT_CANVAS};
use perceptkit::svg::render_scene;
use perceptkit::{Point, ShapeKind};

fn separation(c: &mut Criterion) {
    let a = regular_polygon(8, Point::new(0.0, 0.0), 20.0, 0.0).unwrap();
    let b = regular_polygon(6, Point::new(35.0, 10.0), 18.0, 12.0).unwrap();
    c.bench_function("sat_signed_separation", |bench| {
        bench.iter(|| sat_signed_separation(black_box(&a), black_box(&b)))
    });
}

fn specs() -> Vec<ShapeSpec> {
    let kinds = [ShapeKind::Triangle, ShapeKind::Rectangle, ShapeKind::Hexagon, ShapeKind::Star, ShapeKind::Cross];
    (0..10)
        .map(|i| ShapeSpec::new(kinds[i % kinds.len()], 28.0, ShapeStyle::outline()).rotated(i as f64 * 17.0))
        .collect()
}

fn placement(c: &mut Criterion) {
    let specs = specs();
    let mut seed = 0u64;
    c.bench_function("place_shapes_10", |bench| {
        bench.iter(|| {
            seed += 1;
            place_shapes(black_box(&specs), 5.0, DEFAULT_CANVAS, seed)
        })
    });
}

fn render(c: &mut Criterion) {
    let scene = place_shapes(&specs(), 5.0, DEFAULT_CANVAS, 1).unwrap();
    c.bench_function("render_scene_10", |bench| bench.iter(|| render_scene(black_box(&scene))));
}

fn kruskal(c: &mut Criterion) {
    let mut rng = SplitMix64::new(7);
    let groups: Vec<Vec<f64>> = (0..5)
        .map(|_| (0..200).map(|_| f64::from(u8::from(rng.bernoulli(0.5)))).collect())
        .collect();
    c.bench_function("kruskal_wallis_5x200", |bench| bench.iter(|| kruskal_wallis(black_box(&groups))));
}

criterion_group!(benches, separation, placement, render, kruskal);
criterion_main!(benches);
