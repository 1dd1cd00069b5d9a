use fadr_core::allocation::{
    allocate, fadr_power_allocation, fadr_sf_allocation, optimal_sf_distribution, reynders_allocation, sf_counts,
    sn5_allocation,
};
use fadr_core::{AllocationParams, AllocatorKind, CirMatrix, NodeSnapshot, PowerLevelSet, RadioConfig, SfOrder};
use proptest::prelude::*;

fn snapshots(gains: &[f64]) -> Vec<NodeSnapshot> {
    gains
        .iter()
        .enumerate()
        .map(|(i, &g)| NodeSnapshot::new(i as u32, g + 14.0, 14.0))
        .collect()
}

fn level_set() -> impl Strategy<Value = PowerLevelSet> {
    prop::collection::btree_set(0i32..=20, 2..=13)
        .prop_map(|s| PowerLevelSet::new(s.into_iter().map(f64::from).collect()).unwrap())
}

fn gains() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-140.0f64..-60.0, 1..200)
}

/// `(gain, tp)` strongest first.
fn by_strength(gains: &[f64], tp: &[(u32, f64)]) -> Vec<(f64, f64)> {
    tp.iter().map(|&(id, p)| (gains[id as usize], p)).collect()
}

proptest! {
    #[test]
    fn power_within_level_set(g in gains(), levels in level_set(), c in 1.0f64..12.0) {
        let p = fadr_power_allocation(&snapshots(&g), &levels, &CirMatrix::uniform(c).unwrap()).unwrap();
        prop_assert_eq!(p.tp_dbm.len(), g.len());
        prop_assert!(p.tp_dbm.iter().all(|&(_, tp)| levels.contains(tp)));
    }

    #[test]
    fn weaker_nodes_never_get_less_power(g in gains(), levels in level_set(), c in 1.0f64..12.0) {
        let p = fadr_power_allocation(&snapshots(&g), &levels, &CirMatrix::uniform(c).unwrap()).unwrap();
        let ranked = by_strength(&g, &p.tp_dbm);
        prop_assert!(ranked.windows(2).all(|w| w[0].0 >= w[1].0), "not strongest first");
        prop_assert!(ranked.windows(2).all(|w| w[0].1 <= w[1].1), "{:?}", ranked);
    }

    #[test]
    fn feasible_means_spread_within_margin(g in gains(), levels in level_set(), c in 1.0f64..12.0) {
        let p = fadr_power_allocation(&snapshots(&g), &levels, &CirMatrix::uniform(c).unwrap()).unwrap();
        let rx: Vec<f64> = by_strength(&g, &p.tp_dbm).iter().map(|(g, p)| g + p).collect();
        let spread = rx.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - rx.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert!((spread - p.spread_db).abs() < 1e-9);
        if p.feasible {
            prop_assert!(spread <= c + 1e-9);
        }
    }

    #[test]
    fn allocation_independent_of_input_order(g in gains(), seed in any::<u64>()) {
        let params = AllocationParams::default();
        let snaps = snapshots(&g);
        let mut shuffled = snaps.clone();
        let k = shuffled.len();
        shuffled.rotate_left((seed as usize) % k);
        for kind in [AllocatorKind::Fadr, AllocatorKind::Reynders, AllocatorKind::Sn5] {
            let a = allocate(kind, &snaps, &params).unwrap();
            prop_assert_eq!(&a, &allocate(kind, &shuffled, &params).unwrap());
            prop_assert_eq!(&a, &allocate(kind, &snaps, &params).unwrap());
        }
    }

    #[test]
    fn each_group_follows_the_distribution(g in gains(), group in 1usize..80) {
        let out = fadr_sf_allocation(&snapshots(&g), group, SfOrder::StrongestFirst).unwrap();
        let dist = optimal_sf_distribution();
        for chunk in out.chunks(group) {
            let mut counts = [0usize; 6];
            for (_, sf) in chunk {
                counts[sf.index()] += 1;
            }
            prop_assert_eq!(counts, sf_counts(chunk.len(), &dist, true));
            prop_assert!(chunk.windows(2).all(|w| w[0].1 <= w[1].1));
        }
    }

    #[test]
    fn baselines_stay_in_level_set(g in gains(), levels in level_set()) {
        let radio = RadioConfig::default();
        let r = reynders_allocation(&snapshots(&g), &levels, &CirMatrix::default()).unwrap();
        prop_assert!(r.assignments.iter().all(|a| levels.contains(a.tp_dbm)));
        let s = sn5_allocation(&snapshots(&g), &levels, &radio).unwrap();
        for a in &s.assignments {
            prop_assert!(levels.contains(a.tp_dbm));
            if a.feasible {
                prop_assert!(g[a.node_id as usize] + a.tp_dbm >= radio.sensitivity(a.sf));
            }
        }
    }
}

#[test]
fn fixed_is_not_rssi_driven() {
    let err = allocate(AllocatorKind::Fixed, &snapshots(&[-100.0]), &AllocationParams::default());
    assert!(err.is_err());
    assert!(!AllocatorKind::Fixed.needs_rssi());
}

#[test]
fn empty_and_duplicate_inputs_rejected() {
    let params = AllocationParams::default();
    assert!(allocate(AllocatorKind::Fadr, &[], &params).is_err());
    let dup = vec![NodeSnapshot::new(1, -90.0, 14.0), NodeSnapshot::new(1, -95.0, 14.0)];
    assert!(allocate(AllocatorKind::Fadr, &dup, &params).is_err());
}
