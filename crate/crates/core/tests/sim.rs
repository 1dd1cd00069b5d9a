use fadr_core::harness::write_log;
use fadr_core::sim::{adjudicate, bootstrap_rssi, place_nodes, run, stream_rng};
use fadr_core::{AllocatorKind, CirMatrix, Fate, RadioConfig, Regime, SimConfig, SpreadingFactor, Transmission};

fn config(allocator: AllocatorKind, nodes: usize, seed: u64) -> SimConfig {
    SimConfig {
        node_count: nodes,
        sim_time_s: 3600.0,
        allocator,
        seed,
        ..SimConfig::default()
    }
}

fn log_bytes(cfg: &SimConfig) -> Vec<u8> {
    let mut buf = Vec::new();
    write_log(&mut buf, &run(cfg).unwrap().log).unwrap();
    buf
}

#[test]
fn identical_seeds_identical_logs() {
    for kind in AllocatorKind::ALL {
        let cfg = config(kind, 200, 11);
        assert_eq!(log_bytes(&cfg), log_bytes(&cfg), "{kind}");
    }
    assert_ne!(log_bytes(&config(AllocatorKind::Fadr, 200, 11)), log_bytes(&config(AllocatorKind::Fadr, 200, 12)));
}

#[test]
fn every_frame_is_accounted_for() {
    for kind in AllocatorKind::ALL {
        let out = run(&config(kind, 300, 3)).unwrap();
        let mut total = 0;
        for n in &out.nodes {
            assert_eq!(n.sent, n.received + n.lost_collision + n.lost_sensitivity, "node {}", n.node_id);
            total += n.sent;
        }
        assert_eq!(total as usize, out.log.len());
        assert!(out.log.iter().all(|t| t.fate != Fate::Pending));
        assert!(out.log.windows(2).all(|w| (w[0].start_s, w[0].node_id) <= (w[1].start_s, w[1].node_id)));
    }
}

#[test]
fn poisson_rate_over_a_day() {
    let cfg = SimConfig {
        node_count: 50,
        allocator: AllocatorKind::Sn5,
        ..SimConfig::default()
    };
    let out = run(&cfg).unwrap();
    let expected = cfg.sim_time_s / cfg.mean_interval_s;
    let mean = out.nodes.iter().map(|n| n.sent as f64).sum::<f64>() / out.nodes.len() as f64;
    let tolerance = 3.0 * expected.sqrt() / (out.nodes.len() as f64).sqrt();
    assert!((mean - expected).abs() < tolerance, "mean {mean}, expected {expected}±{tolerance}");
    for n in &out.nodes {
        assert!((n.sent as f64 - expected).abs() < 5.0 * expected.sqrt(), "node {} sent {}", n.node_id, n.sent);
    }
}

#[test]
fn placement_is_uniform_over_the_disk() {
    let cfg = SimConfig {
        node_count: 10_000,
        ..SimConfig::default()
    };
    let nodes = place_nodes(&cfg, &mut stream_rng(5, 1)).unwrap();
    let r2 = cfg.cell_radius_m * cfg.cell_radius_m;
    let mean_sq = nodes.iter().map(|n| n.x_m * n.x_m + n.y_m * n.y_m).sum::<f64>() / nodes.len() as f64;
    assert!((mean_sq / (r2 / 2.0) - 1.0).abs() < 0.02, "mean squared distance {mean_sq}");
    assert!(nodes.iter().all(|n| n.distance_m >= 1.0 && n.distance_m <= cfg.cell_radius_m));
}

#[test]
fn bootstrap_averages_shadowing() {
    let (sigma, k) = (8.0, 16u32);
    let cfg = SimConfig {
        node_count: 2000,
        bootstrap_packets_per_node: k,
        radio: RadioConfig {
            shadowing_sigma_db: sigma,
            ..RadioConfig::default()
        },
        ..SimConfig::default()
    };
    let nodes = place_nodes(&cfg, &mut stream_rng(9, 1)).unwrap();
    let snaps = bootstrap_rssi(&nodes, &cfg, &mut stream_rng(9, 4)).unwrap();
    let errors: Vec<f64> = nodes
        .iter()
        .zip(&snaps)
        .map(|(n, s)| s.measured_rssi_dbm - (cfg.bootstrap_tp() + n.gain.db()))
        .collect();
    let m = errors.len() as f64;
    let mean = errors.iter().sum::<f64>() / m;
    let sd = (errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
    let expected_sd = sigma / f64::from(k).sqrt();
    assert!(mean.abs() < 3.0 * expected_sd / m.sqrt(), "mean error {mean}");
    assert!((sd / expected_sd - 1.0).abs() < 0.1, "sd {sd} vs {expected_sd}");
}

fn frame(node_id: u32, sf: u8, start: f64, rssi: f64) -> Transmission {
    Transmission {
        node_id,
        sf: SpreadingFactor::new(sf).unwrap(),
        channel: 0,
        start_s: start,
        end_s: start + 0.2,
        tp_dbm: 14.0,
        rssi_dbm: rssi,
        fate: Fate::Pending,
    }
}

#[test]
fn simultaneous_same_sf_within_threshold_both_lost() {
    let mut log = vec![frame(0, 9, 1.0, -100.0), frame(1, 9, 1.0, -103.0), frame(2, 9, 5.0, -120.0)];
    adjudicate(&mut log, &CirMatrix::default(), &RadioConfig::default());
    let fates: Vec<Fate> = log.iter().map(|t| t.fate).collect();
    assert_eq!(fates, [Fate::LostCollision, Fate::LostCollision, Fate::Received]);
}

#[test]
fn long_frame_hits_late_starter() {
    // the SF12 frame starts first and lasts long enough to overlap a frame
    // that begins after several shorter ones
    let mut long = frame(0, 12, 0.0, -100.0);
    long.end_s = 2.0;
    let mut log = vec![long, frame(1, 7, 0.5, -130.0), frame(2, 7, 1.0, -130.0), frame(3, 12, 1.5, -101.0)];
    adjudicate(&mut log, &CirMatrix::default(), &RadioConfig::default());
    assert_eq!(log[0].fate, Fate::LostCollision);
    assert_eq!(log[3].fate, Fate::LostCollision);
    assert_eq!(log[1].fate, Fate::LostCollision);
}

#[test]
fn regimes_are_nested() {
    let base = SimConfig {
        node_count: 400,
        sim_time_s: 3600.0,
        allocator: AllocatorKind::Fixed,
        seed: 21,
        ..SimConfig::default()
    };
    let received = |regime: Regime| -> Vec<bool> {
        let cfg = SimConfig {
            cir: regime.apply(&base.cir),
            ..base.clone()
        };
        run(&cfg).unwrap().log.iter().map(|t| t.fate == Fate::Received).collect()
    };
    let (aloha, capture, full) = (received(Regime::Aloha), received(Regime::Capture), received(Regime::Full));
    assert_eq!(aloha.len(), full.len());
    for i in 0..full.len() {
        assert!(!full[i] || capture[i], "frame {i} survives full but not capture");
        assert!(!aloha[i] || capture[i], "frame {i} survives aloha but not capture");
    }
    let count = |v: &[bool]| v.iter().filter(|&&b| b).count();
    assert!(count(&full) < count(&capture));
}
