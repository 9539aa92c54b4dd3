use proptest::prelude::*;
use routerq::router::{FullForwardingPolicy, FORWARDING_NODE};
use routerq::validation::{preemption_trace, worst_ledger_error, worst_littles_residual};
use routerq::variates::replication_seed;
use routerq::*;

fn router(security: Security, servers: usize, capacity: usize, discipline: Discipline, service: GeParams) -> RouterConfig {
    RouterConfig {
        security,
        acl: NodeConfig::new(servers, capacity, discipline, GeParams::new(2.0 * service.rate(), 4.0).unwrap()).unwrap(),
        forwarding: NodeConfig::new(servers, capacity, discipline, service).unwrap(),
        accept_prob: 1.0,
        full_forwarding_policy: FullForwardingPolicy::Drop,
    }
}

fn replicate(config: &RouterConfig, streams: &[ArrivalStream], reps: usize, arrivals: u64, seed: u64) -> Vec<ReplicationResult> {
    (0..reps)
        .map(|i| run_replication(config, streams, &RunOptions::new(replication_seed(seed, i as u64), arrivals)).unwrap())
        .collect()
}

#[test]
fn mm1_mean_response_matches_closed_form() {
    let (lambda, mu) = (5e5, 1e6);
    let config = router(Security::Off, 1, 50, Discipline::Fcfs, GeParams::exponential(mu).unwrap());
    let streams = [ArrivalStream::new(0, lambda, 1.0).unwrap()];
    let reps = replicate(&config, &streams, 20, 200_000, 1);
    let w: Vec<f64> = reps.iter().map(|r| r.forwarding.total.mean_response).collect();
    let est = Estimate::from_samples(&w);
    let oracle = mm1n_solve(lambda, mu, 50).unwrap().mean_response;
    let infinite = 1.0 / (mu - lambda);
    assert!((oracle / infinite - 1.0).abs() < 1e-9);
    assert!(est.contains(oracle), "W {est:?} vs {oracle:e}");
    assert!((est.mean / infinite - 1.0).abs() < 0.01);
}

#[test]
fn single_fcfs_server_departs_in_arrival_order() {
    let config = router(Security::Off, 1, 50, Discipline::Fcfs, GeParams::new(17e5, 4.0).unwrap());
    let streams = [ArrivalStream::new(0, 8e5, 4.0).unwrap(), ArrivalStream::new(1, 7e5, 4.0).unwrap()];
    let options = RunOptions {
        trace: true,
        ..RunOptions::new(3, 50_000)
    };
    let rep = run_replication(&config, &streams, &options).unwrap();
    let arrivals: Vec<f64> = rep.trace.iter().map(|r| r.node_arrival).collect();
    assert!(arrivals.windows(2).all(|w| w[0] <= w[1]));
    // packet ids are issued in arrival order as well
    assert!(rep.trace.windows(2).all(|w| w[0].packet < w[1].packet));
    assert!(rep.trace.iter().all(|r| r.preemptions == 0));
}

#[test]
fn hol_ledger_preserves_service_demand() {
    for security in [Security::Off, Security::On] {
        let rep = preemption_trace(17, 100_000, security).unwrap();
        let preempted = rep.trace.iter().filter(|r| r.preemptions > 0).count();
        assert!(preempted > 1000, "only {preempted} preemptions");
        assert!(worst_ledger_error(&rep) <= 1e-9);
        // only low-priority packets are ever interrupted
        assert!(rep.trace.iter().filter(|r| r.preemptions > 0).all(|r| r.class == 1));
    }
}

#[test]
fn preempted_packet_response_covers_interruption() {
    let rep = preemption_trace(5, 20_000, Security::Off).unwrap();
    for r in rep.trace.iter().filter(|r| r.preemptions > 0) {
        assert!(r.departure - r.node_arrival >= r.served - 1e-12);
        assert_eq!(r.node, FORWARDING_NODE);
    }
}

#[test]
fn identical_seed_identical_replication() {
    let config = router(Security::On, 4, 50, Discipline::Hol, GeParams::new(17e5, 4.0).unwrap());
    let streams = [ArrivalStream::new(0, 9e5, 4.0).unwrap(), ArrivalStream::new(1, 5e5, 4.0).unwrap()];
    let options = RunOptions {
        trace: true,
        ..RunOptions::new(77, 30_000)
    };
    let a = run_replication(&config, &streams, &options).unwrap();
    let b = run_replication(&config, &streams, &options).unwrap();
    assert_eq!(a, b);
    let c = run_replication(&config, &streams, &RunOptions { seed: 78, ..options }).unwrap();
    assert_ne!(a.network, c.network);
}

#[test]
fn instantaneous_acl_is_equivalent_to_security_off() {
    let service = GeParams::new(17e5, 4.0).unwrap();
    let off = router(Security::Off, 4, 50, Discipline::Hol, service);
    let mut on = router(Security::On, 4, 50, Discipline::Hol, service);
    on.acl.service = GeParams::new(1e15, 1.0).unwrap();
    let streams = [ArrivalStream::new(0, 8e5, 4.0).unwrap(), ArrivalStream::new(1, 5e5, 4.0).unwrap()];
    let a = replicate(&off, &streams, 20, 100_000, 11);
    let b = replicate(&on, &streams, 20, 100_000, 11);
    for pick in [
        (|r: &ReplicationResult| r.forwarding.total.mean_response) as fn(&ReplicationResult) -> f64,
        |r| r.forwarding.total.mean_in_system,
        |r| r.forwarding.total.utilization,
        |r| r.network.classes[0].mean_response,
    ] {
        let ea = Estimate::from_samples(&a.iter().map(pick).collect::<Vec<_>>());
        let eb = Estimate::from_samples(&b.iter().map(pick).collect::<Vec<_>>());
        assert!(ea.overlaps(&eb), "{ea:?} vs {eb:?}");
        assert!((ea.mean / eb.mean - 1.0).abs() < 0.02);
    }
}

#[test]
fn hol_favours_high_priority_class() {
    let service = GeParams::new(17e5, 4.0).unwrap();
    let streams = [ArrivalStream::new(0, 5e5, 4.0).unwrap(), ArrivalStream::new(1, 5e5, 4.0).unwrap()];
    let w1 = |d| {
        let reps = replicate(&router(Security::Off, 1, 50, d, service), &streams, 20, 100_000, 21);
        Estimate::from_samples(&reps.iter().map(|r| r.network.classes[0].mean_response).collect::<Vec<_>>())
    };
    let hol = w1(Discipline::Hol);
    let fcfs = w1(Discipline::Fcfs);
    assert!(hol.mean <= fcfs.mean && hol.strictly_below(&fcfs), "{hol:?} vs {fcfs:?}");
}

#[test]
fn littles_law_holds_per_node() {
    let config = router(Security::On, 2, 50, Discipline::Hol, GeParams::new(17e5, 4.0).unwrap());
    let streams = [ArrivalStream::new(0, 9e5, 5.0).unwrap(), ArrivalStream::new(1, 9e5, 5.0).unwrap()];
    for rep in replicate(&config, &streams, 5, 300_000, 8) {
        let worst = worst_littles_residual(&rep);
        assert!(worst < 0.01, "residual {worst}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn accounting_invariants(
        seed: u64,
        servers in 1usize..5,
        extra in 0usize..12,
        hol: bool,
        sec: bool,
        p in 0.0f64..=1.0,
        l1 in 0.0f64..3e6,
        l2 in 0.0f64..3e6,
        scv in 1.0f64..12.0,
    ) {
        let discipline = if hol { Discipline::Hol } else { Discipline::Fcfs };
        let security = if sec { Security::On } else { Security::Off };
        let mut config = router(security, servers, servers + extra, discipline, GeParams::new(17e5, scv).unwrap());
        config.accept_prob = p;
        let streams = [ArrivalStream::new(0, l1, scv).unwrap(), ArrivalStream::new(1, l2, 4.0).unwrap()];
        let rep = run_replication(&config, &streams, &RunOptions::new(seed, 3_000)).unwrap();
        prop_assert!(rep.conservation.holds());
        prop_assert!(rep.node_conservation);
        prop_assert!(rep.conservation.in_flight <= 2 * (servers + extra) as u64);
        let t = &rep.network.total;
        prop_assert!((0.0..=1.0).contains(&t.loss_probability));
        prop_assert!((0.0..=1.0 + 1e-12).contains(&t.utilization));
        prop_assert!(rep.forwarding.total.mean_in_system <= (servers + extra) as f64 + 1e-9);
        prop_assert!(rep.forwarding.server_utilization.iter().all(|u| *u <= 1.0 + 1e-12));
    }
}
