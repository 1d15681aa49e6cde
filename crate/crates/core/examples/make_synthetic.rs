//! Regenerate the bundled synthetic instances under `data/`.
//!
//! Ten years of birth-cohort observations are drawn from a seeded RNG,
//! extended with simple exponential smoothing, and producer capacities are
//! set by market share. All figures are invented; none come from real
//! market data.
//!
//! Run with `cargo run -p vaxtender --example make_synthetic`.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vaxtender::forecast::{fit_alpha, ses_forecast, synth_capacity, write_series_csv};
use vaxtender::instance::{builder, instance_to_json, Instance};

const OBSERVED_YEARS: usize = 10;

struct Spec {
    name: &'static str,
    years: usize,
    kappa: f64,
    coverage: f64,
    beta: f64,
}

fn observed_cohort(seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut level = 2.0e6;
    (0..OBSERVED_YEARS)
        .map(|_| {
            level *= 1.0 + rng.gen_range(-0.01..0.03);
            (level / 1000.0_f64).round() * 1000.0
        })
        .collect()
}

fn build(spec: &Spec, observed: &[f64]) -> Instance {
    let alpha = fit_alpha(observed, None).expect("non-empty series");
    let horizon = spec.years.saturating_sub(observed.len());
    let fc = ses_forecast(observed, alpha, horizon, None).expect("valid series");
    let cohort: Vec<f64> = observed.iter().chain(&fc.forecast).take(spec.years).map(|v| v.round()).collect();
    let t = spec.years;

    // Rotavirus coverage trails the MMR series.
    let rota: Vec<f64> = cohort.iter().map(|d| (0.8 * d).round()).collect();
    let plan = synth_capacity(&cohort, &[0.6, 0.4], spec.coverage).expect("valid shares");
    let capacity: Vec<Vec<f64>> = plan.capacity.iter().map(|r| r.iter().map(|v| v.round()).collect()).collect();

    // [vaccine][producer][t]
    let price = |v: usize, p: usize| match (v, p) {
        (0, 0) => 1.20,
        (0, 1) => 0.95,
        (1, 0) => 2.00,
        _ => 0.0,
    };
    let reservation_price: Vec<Vec<Vec<f64>>> =
        (0..2).map(|v| (0..2).map(|p| vec![price(v, p); t]).collect()).collect();
    let setup = |v: usize, p: usize| if v == 1 && p == 1 { 0.0 } else { 50_000.0 };
    let setup_cost: Vec<Vec<Vec<f64>>> = (0..2).map(|v| (0..2).map(|p| vec![setup(v, p); t]).collect()).collect();
    let avg_price = vec![vec![(1.20 + 0.95) / 2.0; t], vec![2.00; t]];

    Instance {
        name: spec.name.into(),
        antigens: ["Measles", "Mumps", "Rubella", "Rotavirus"].map(String::from).to_vec(),
        vaccines: ["MMR", "Rotavirus"].map(String::from).to_vec(),
        producers: ["P1", "P2"].map(String::from).to_vec(),
        num_periods: t,
        vaccine_antigens: vec![vec![0, 1, 2], vec![3]],
        vaccine_producers: vec![vec![0, 1], vec![0]],
        demand: vec![cohort.clone(), cohort.clone(), cohort, rota],
        capacity,
        roi: vec![vec![0.10, 0.12], vec![0.10, 0.0]],
        setup_cost,
        holding_rate: vec![0.10, 0.10],
        reservation_price,
        avg_price,
        tender_setup_cost: vec![1.0e6; t],
        capacity_ext_cost: vec![2.0e6, 2.0e6],
        capacity_ext_rate: spec.kappa,
        initial_unvaccinated: vec![0.0; 4],
        initial_inventory: vec![0.0; 2],
        shortage_penalty: spec.beta,
        discount: 0.97,
        max_tender_len: 5,
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    fs::create_dir_all(&dir)?;
    let observed = observed_cohort(2024);
    let rows: Vec<(usize, f64)> = observed.iter().enumerate().map(|(i, &v)| (i + 1, v)).collect();
    write_series_csv(fs::File::create(dir.join("observed_cohort.csv"))?, &rows)?;

    let specs = [
        Spec { name: "synthetic30", years: 30, kappa: 0.0, coverage: 2.0, beta: 1.5 },
        Spec { name: "synthetic10", years: 10, kappa: 0.1, coverage: 1.0, beta: 1.5 },
    ];
    let mut tiny = builder::single(3);
    tiny.name = "tiny".into();
    let instances = std::iter::once(tiny).chain(specs.iter().map(|s| build(s, &observed)));
    for inst in instances {
        let text = serde_json::to_string_pretty(&instance_to_json(&inst))?;
        let path = dir.join(format!("{}.json", inst.name));
        fs::write(&path, text + "\n")?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
