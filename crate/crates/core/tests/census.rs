//! Column and row counts against closed-form formulas over the index sets.

use vaxtender::instance::builder::single;
use vaxtender::instance::{instance_from_json, Instance};
use vaxtender::model::{build_model, BuildOptions, VarKind};
use vaxtender_oracles::instances::random_instance;

struct Expected {
    columns: Vec<(VarKind, usize)>,
    rows: Vec<(&'static str, usize)>,
}

fn formulas(inst: &Instance) -> Expected {
    let (na, nv, np, nt, len) =
        (inst.antigens.len(), inst.vaccines.len(), inst.producers.len(), inst.num_periods, inst.max_tender_len);
    let ends = |t: usize| len.min(nt - t + 1);
    let nw: usize = (1..=nt).map(ends).sum();
    let pairs: usize = (1..=nt).map(|t| ends(t) * (ends(t) - 1) / 2).sum();
    let offers: usize = inst.vaccine_producers.iter().map(Vec::len).sum();
    // W·L products need k ≤ τ, Y·L products need l ≤ t, both only where κ·s_pk > 0.
    let live = |p: usize, k: usize| inst.capacity_ext_rate * inst.capacity[p][k - 1] > 0.0;
    let zw: usize = (0..np)
        .map(|p| {
            (1..=nt)
                .flat_map(|t| (t..t + ends(t)).map(move |tau| (t, tau)))
                .map(|(_, tau)| (1..=tau).filter(|&k| live(p, k)).count())
                .sum::<usize>()
        })
        .sum();
    let zy: usize = (0..np).map(|p| (1..=nt).map(|t| (1..=t).filter(|&l| live(p, l)).count()).sum::<usize>()).sum();
    Expected {
        columns: vec![
            (VarKind::Tender, na * nw),
            (VarKind::Commitment, offers * nw),
            (VarKind::Delivery, offers * nt),
            (VarKind::Produce, np * nt),
            (VarKind::Grant, np * nw),
            (VarKind::Extend, np * nt),
            (VarKind::Inventory, nv * nt),
            (VarKind::Vaccinated, nv * nt),
            (VarKind::Unvaccinated, na * nt),
            (VarKind::DeliverySum, offers * nw),
            (VarKind::Envelope, offers * nw),
            (VarKind::GrantExtend, zw),
            (VarKind::ProduceExtend, zy),
        ],
        rows: vec![
            ("tender_supply", na * nw),
            ("tender_overlap", na * pairs),
            ("coverage", na * nt),
            ("grant_lb", np * nw),
            ("grant_ub", np * nw),
            ("commit_cap", np * nw),
            ("xsum_def", offers * nw),
            ("commit_cover", offers * nw),
            ("mc_ge_lower", offers * nw),
            ("mc_ge_upper", offers * nw),
            ("mc_le_lower", offers * nw),
            ("mc_le_upper", offers * nw),
            ("deliver_cap", np * nt),
            ("inventory", nv * nt),
            ("unvaccinated", na * nt),
            ("roi", np * nt),
            ("prod_le_a", zw + zy),
            ("prod_le_b", zw + zy),
            ("prod_ge", zw + zy),
        ],
    }
}

fn check(inst: &Instance) {
    let model = build_model(inst, BuildOptions::default()).unwrap();
    let census = model.census();
    let want = formulas(inst);
    let mut total_cols = 0;
    for (kind, n) in want.columns {
        assert_eq!(census.get(&kind).copied().unwrap_or(0), n, "{}: {kind:?}", inst.name);
        total_cols += n;
    }
    assert_eq!(model.num_columns(), total_cols);
    let mut total_rows = 0;
    for (family, n) in want.rows {
        assert_eq!(model.row_family_count(family), n, "{}: {family}", inst.name);
        total_rows += n;
    }
    assert_eq!(model.num_rows(), total_rows, "{}", inst.name);
}

#[test]
fn tiny_has_48_columns() {
    let model = build_model(&single(3), BuildOptions::default()).unwrap();
    assert_eq!(model.num_columns(), 48);
    check(&single(3));
}

#[test]
fn counts_match_formulas() {
    let mut extended = single(7);
    extended.capacity_ext_rate = 0.1;
    extended.capacity[0][2] = 0.0;
    check(&extended);
    check(&random_instance(3, (2, 2, 6, 4)));
    check(&random_instance(4, (3, 2, 8, 5)));
    check(&instance_from_json(include_str!("../data/synthetic10.json")).unwrap());
    check(&instance_from_json(include_str!("../data/synthetic30.json")).unwrap());
}
