use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vaxtender::instance::builder::single;
use vaxtender::instance::{instance_from_json, Instance};

/// `(antigens, producers, periods, max tender length)` shapes whose binary
/// count stays at or below 20.
pub const TINY_SHAPES: [(usize, usize, usize, usize); 7] =
    [(1, 1, 3, 3), (2, 2, 2, 2), (1, 2, 2, 2), (1, 1, 5, 1), (1, 1, 4, 1), (2, 1, 2, 2), (1, 1, 3, 2)];

fn quarter(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo..hi) * 4.0).round() / 4.0
}

/// Random instance of the given shape. Values are multiples of 1/4 so the
/// reference and tested solvers see exactly representable data.
pub fn random_instance(seed: u64, shape: (usize, usize, usize, usize)) -> Instance {
    let (na, np, nt, len) = shape;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let antigens: Vec<String> = (0..na).map(|a| format!("A{a}")).collect();
    let producers: Vec<String> = (0..np).map(|p| format!("P{p}")).collect();

    // A combination vaccine when there are two antigens, plus monovalents
    // for a random subset.
    let mut vaccine_antigens: Vec<Vec<usize>> = Vec::new();
    if na > 1 {
        vaccine_antigens.push((0..na).collect());
    }
    for a in 0..na {
        if na == 1 || rng.gen_bool(0.5) {
            vaccine_antigens.push(vec![a]);
        }
    }
    let nv = vaccine_antigens.len();
    let mut vaccine_producers: Vec<Vec<usize>> = (0..nv)
        .map(|_| {
            let mut ps: Vec<usize> = (0..np).filter(|_| rng.gen_bool(0.6)).collect();
            if ps.is_empty() {
                ps.push(rng.gen_range(0..np));
            }
            ps
        })
        .collect();
    // Every producer makes something.
    for p in 0..np {
        if !vaccine_producers.iter().any(|ps| ps.contains(&p)) {
            let v = *(0..nv).collect::<Vec<_>>().choose(&mut rng).unwrap();
            vaccine_producers[v].push(p);
            vaccine_producers[v].sort_unstable();
        }
    }

    let demand: Vec<Vec<f64>> = (0..na).map(|_| (0..nt).map(|_| quarter(&mut rng, 4.0, 20.0)).collect()).collect();
    let peak = demand.iter().flatten().fold(0.0f64, |m, &d| m.max(d));
    let capacity: Vec<Vec<f64>> =
        (0..np).map(|_| (0..nt).map(|_| quarter(&mut rng, 0.4 * peak, 1.6 * peak)).collect()).collect();
    let prices: Vec<Vec<Vec<f64>>> =
        (0..nv).map(|_| (0..np).map(|_| (0..nt).map(|_| quarter(&mut rng, 1.0, 3.0)).collect()).collect()).collect();
    let avg_price = prices
        .iter()
        .map(|by_p| (0..nt).map(|t| by_p.iter().map(|row| row[t]).sum::<f64>() / np as f64).collect())
        .collect();

    Instance {
        name: format!("random-{seed}"),
        antigens,
        vaccines: (0..nv).map(|v| format!("V{v}")).collect(),
        producers,
        num_periods: nt,
        vaccine_antigens,
        vaccine_producers,
        demand,
        capacity,
        roi: (0..nv).map(|_| (0..np).map(|_| quarter(&mut rng, 0.0, 0.5)).collect()).collect(),
        setup_cost: (0..nv)
            .map(|_| (0..np).map(|_| (0..nt).map(|_| quarter(&mut rng, 0.0, 6.0)).collect()).collect())
            .collect(),
        holding_rate: (0..nv).map(|_| quarter(&mut rng, 0.0, 0.5)).collect(),
        reservation_price: prices,
        avg_price,
        tender_setup_cost: (0..nt).map(|_| quarter(&mut rng, 0.0, 20.0)).collect(),
        capacity_ext_cost: (0..np).map(|_| quarter(&mut rng, 1.0, 40.0)).collect(),
        capacity_ext_rate: [0.0, 0.25, 0.5][rng.gen_range(0..3)],
        initial_unvaccinated: (0..na).map(|_| quarter(&mut rng, 0.0, 4.0)).collect(),
        initial_inventory: (0..nv).map(|_| quarter(&mut rng, 0.0, 4.0)).collect(),
        shortage_penalty: quarter(&mut rng, 1.0, 10.0),
        discount: [1.0, 0.95, 0.9][rng.gen_range(0..3)],
        max_tender_len: len,
    }
}

/// Tiny instance number `i`, cycling through [`TINY_SHAPES`].
pub fn random_tiny(i: u64) -> Instance {
    random_instance(1_000 + i, TINY_SHAPES[i as usize % TINY_SHAPES.len()])
}

/// Five structurally different instances: one antigen, capacity extension
/// with short tenders, two random multi-producer shapes and the bundled
/// 10-year instance.
pub fn varied_shapes() -> Vec<Instance> {
    let mut extended = single(6);
    extended.name = "extended".into();
    extended.capacity_ext_rate = 0.2;
    extended.max_tender_len = 3;
    vec![
        single(3),
        extended,
        random_tiny(1),
        random_instance(7, (2, 2, 4, 3)),
        instance_from_json(include_str!("../../core/data/synthetic10.json")).expect("bundled instance"),
    ]
}
