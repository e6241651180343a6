use std::collections::hash_map::Entry;
use std::collections::{HashMap, VecDeque};

use super::{NodeId, Topology};
use crate::error::RouteError;

/// Minimum-hop directed route from `origin` to `destination`, as link
/// indices. Among equal-length paths the one with the lexicographically
/// smallest node sequence wins.
pub fn shortest_path(topology: &Topology, origin: NodeId, destination: NodeId) -> Result<Vec<usize>, RouteError> {
    for n in [origin, destination] {
        if !topology.contains_node(n) {
            return Err(RouteError::UnknownNode(n));
        }
    }
    if origin == destination {
        return Err(RouteError::SameEndpoints(origin));
    }

    // hop distance to the destination over reversed links
    let mut dist: HashMap<NodeId, usize> = HashMap::new();
    dist.insert(destination, 0);
    let mut queue = VecDeque::from([destination]);
    while let Some(v) = queue.pop_front() {
        let d = dist[&v];
        for l in topology.links().iter().filter(|l| l.target == v) {
            if let Entry::Vacant(e) = dist.entry(l.source) {
                e.insert(d + 1);
                queue.push_back(l.source);
            }
        }
    }
    let Some(&hops) = dist.get(&origin) else {
        return Err(RouteError::NoPath { origin, destination });
    };

    let mut route = Vec::with_capacity(hops);
    let mut at = origin;
    for remaining in (0..hops).rev() {
        let (idx, next) = topology
            .links()
            .iter()
            .enumerate()
            .filter(|(_, l)| l.source == at && dist.get(&l.target) == Some(&remaining))
            .min_by_key(|(_, l)| l.target)
            .map(|(i, l)| (i, l.target))
            .expect("distance labels guarantee a successor");
        route.push(idx);
        at = next;
    }
    Ok(route)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Link;

    fn bidirectional_ring(n: u32) -> Topology {
        let mut links = Vec::new();
        for i in 1..=n {
            let j = i % n + 1;
            links.push(Link { source: i, target: j });
            links.push(Link { source: j, target: i });
        }
        Topology::new((1..=n).collect(), links, 10).unwrap()
    }

    fn nodes_of(t: &Topology, origin: NodeId, route: &[usize]) -> Vec<NodeId> {
        let mut out = vec![origin];
        for &l in route {
            out.push(t.links()[l].target);
        }
        out
    }

    #[test]
    fn chain_routes() {
        let t = Topology::new(vec![1, 2, 3], vec![Link { source: 1, target: 2 }, Link { source: 2, target: 3 }], 10)
            .unwrap();
        assert_eq!(shortest_path(&t, 1, 3).unwrap(), vec![0, 1]);
        assert_eq!(shortest_path(&t, 1, 2).unwrap(), vec![0]);
        assert_eq!(shortest_path(&t, 3, 1), Err(RouteError::NoPath { origin: 3, destination: 1 }));
        assert_eq!(shortest_path(&t, 2, 2), Err(RouteError::SameEndpoints(2)));
        assert_eq!(shortest_path(&t, 1, 9), Err(RouteError::UnknownNode(9)));
    }

    #[test]
    fn ring_tie_break_is_lexicographic() {
        let t = bidirectional_ring(6);
        // both 1-2-3-4 and 1-6-5-4 have three hops
        let route = shortest_path(&t, 1, 4).unwrap();
        assert_eq!(nodes_of(&t, 1, &route), vec![1, 2, 3, 4]);
        let route = shortest_path(&t, 4, 1).unwrap();
        assert_eq!(nodes_of(&t, 4, &route), vec![4, 3, 2, 1]);
        let route = shortest_path(&t, 2, 5).unwrap();
        assert_eq!(nodes_of(&t, 2, &route), vec![2, 1, 6, 5]);
    }

    #[test]
    fn consecutive_links_share_nodes() {
        let t = bidirectional_ring(6);
        for o in 1..=6 {
            for d in 1..=6 {
                if o == d {
                    continue;
                }
                let r = shortest_path(&t, o, d).unwrap();
                assert_eq!(t.links()[r[0]].source, o);
                assert_eq!(t.links()[*r.last().unwrap()].target, d);
                for w in r.windows(2) {
                    assert_eq!(t.links()[w[0]].target, t.links()[w[1]].source);
                }
            }
        }
    }
}
