use mdp_env::Action;
use qlearn::*;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn main() {
    let mut net = QNetwork::seeded(1);
    let target = net.clone();
    let mut pools = ReplayPools::new(20000);
    let probe = ProbeBatch::random(7, 4);
    for i in 0..600 {
        let g: Vec<f64> = probe.grids[..GRID_CELLS].to_vec();
        pools.push(Experience {
            grid: g.clone(),
            aux: [0.5, 1.0, 0.0],
            action: Action::ALL[i % 3],
            reward: 0.3,
            next_grid: g,
            next_aux: [0.5, 1.0, 0.0],
            done: false,
        });
    }
    let mut trainer = Trainer::new(TrainConfig::default(), ChaCha8Rng::seed_from_u64(2));
    // warm
    for _ in 0..5 { trainer.train_step(&mut net, &target, &pools).unwrap(); }
    let n = 100;
    let t0 = Instant::now();
    for _ in 0..n { trainer.train_step(&mut net, &target, &pools).unwrap(); }
    let dt = t0.elapsed().as_secs_f64();
    println!("train_step: {:.3} ms  ({:.2} GFLOP/s at 236 MFLOP/step)", dt / n as f64 * 1e3, 0.236 * n as f64 / dt);

    let mut ws = Workspace::new();
    let t0 = Instant::now();
    let m = 2000;
    for _ in 0..m { net.forward(&probe.grids[..GRID_CELLS], &probe.auxs[..3], &mut ws).unwrap(); }
    let dt = t0.elapsed().as_secs_f64();
    println!("single forward: {:.3} ms", dt / m as f64 * 1e3);
}
