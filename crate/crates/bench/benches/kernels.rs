use criterion::{black_box, criterion_group, criterion_main, Criterion};

use crowdgame::solver::{GameState, Objective, PlayerObjective};
use crowdgame::{build_demo_scenario, CostModel, TimeGrid};

fn kernel(c: &mut Criterion) {
    let model = CostModel::default();
    c.bench_function("eval_h near pair", |b| {
        b.iter(|| {
            model.eval_h(
                black_box(&[0.40, 0.50]),
                black_box(&[0.52, 0.47]),
                black_box(&[1.0, 0.1]),
                black_box(&[-0.9, 0.0]),
            )
        })
    });
}

fn demo_state(n: usize, steps: usize) -> GameState {
    let spec = build_demo_scenario(n, TimeGrid::new(3.0, steps).unwrap());
    GameState::initialize(&spec).unwrap()
}

fn game(c: &mut Criterion) {
    let state = demo_state(6, 50);
    c.bench_function("potential 6+6 Nt=50", |b| {
        b.iter(|| black_box(&state).potential())
    });

    let objective = PlayerObjective::new(&state, 0);
    let x = state.players[0].trajectory.free_coords().to_vec();
    let steps = vec![1e-6; x.len()];
    let mut grad = vec![0.0; x.len()];
    c.bench_function("player gradient 6+6 Nt=50", |b| {
        b.iter(|| objective.gradient(black_box(&x), &steps, &mut grad))
    });
    c.bench_function("player value 6+6 Nt=50", |b| {
        b.iter(|| objective.value(black_box(&x)))
    });
}

criterion_group!(benches, kernel, game);
criterion_main!(benches);
