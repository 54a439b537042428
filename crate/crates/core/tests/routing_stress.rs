//! Router stress: random chorded rings always admit a closed edge-simple
//! walk through any member set (the ring itself), so every instance must
//! route and validate. Member sets are drawn at quorum-realistic densities
//! (quorum sizes grow as sqrt(R*N), at most about half the nodes).

use std::collections::BTreeSet;

use qcp::rng;
use qcp::routing::{route_cycle, validate_route};
use qcp::topology::Topology;

#[test]
fn chorded_rings_always_route() {
    let mut failures = 0;
    for instance in 0..400u64 {
        let mut stream = rng::rng_from(rng::derive_seed(99, "stress", instance));
        let n = 5 + rng::uniform_index(&mut stream, 26);
        let mut edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        let chords = rng::uniform_index(&mut stream, n);
        let mut seen: BTreeSet<(usize, usize)> = edges.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
        let mut added = 0;
        while added < chords {
            let u = rng::uniform_index(&mut stream, n);
            let v = rng::uniform_index(&mut stream, n);
            let e = (u.min(v), u.max(v));
            if u != v && seen.insert(e) {
                edges.push(e);
                added += 1;
            }
        }
        let t = Topology::new(n, edges, "stress").unwrap();
        let mut picks: Vec<usize> = (0..n).collect();
        rng::shuffle(&mut stream, &mut picks);
        let cap = (3 * n / 5).max(3);
        let size = 2 + rng::uniform_index(&mut stream, cap - 1);
        let members: BTreeSet<usize> = picks[..size].iter().copied().collect();
        let hub = *members.iter().next().unwrap();
        match route_cycle(&t, &members, hub) {
            Ok(route) => {
                if let Err(v) = validate_route(&t, &route, &members) {
                    println!("instance {instance}: INVALID {v:?}");
                    failures += 1;
                }
            }
            Err(e) => {
                println!("instance {instance}: n={n} members={members:?} hub={hub}: {e}");
                failures += 1;
            }
        }
    }
    assert_eq!(failures, 0, "{failures}/400 feasible instances failed to route");
}
