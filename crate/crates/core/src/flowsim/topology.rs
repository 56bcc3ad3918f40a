use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical interconnect in force during one step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Topology {
    /// Bidirectional ring: position `j` is wired to `j - 1` and `j + 1` (mod n).
    StaticRing { n: usize },
    /// Circuit-switched perfect matching; each pair gets its own link.
    Matching {
        n: usize,
        pairs: Vec<(usize, usize)>,
    },
}

/// A directed link. Ring links are indexed by the lower clockwise position so
/// the two parallel cables of a 2-node ring stay distinct.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Link {
    /// `k -> k + 1 (mod n)`
    Clockwise(usize),
    /// `k + 1 (mod n) -> k`
    CounterClockwise(usize),
    /// Dedicated circuit `from -> to`.
    Circuit { from: usize, to: usize },
}

impl Topology {
    pub fn n(&self) -> usize {
        match self {
            Topology::StaticRing { n } | Topology::Matching { n, .. } => *n,
        }
    }

    pub fn is_switched(&self) -> bool {
        matches!(self, Topology::Matching { .. })
    }

    /// Builds a matching and checks it covers every node exactly once.
    pub fn matching(n: usize, pairs: Vec<(usize, usize)>) -> Result<Topology> {
        let mut seen = vec![false; n];
        for &(a, b) in &pairs {
            if a >= n || b >= n {
                return Err(Error::NodeOutOfRange { src: a, dst: b, n });
            }
            for v in [a, b] {
                if std::mem::replace(&mut seen[v], true) {
                    return Err(Error::InvalidParam {
                        name: "matching",
                        reason: format!("node {v} appears in more than one pair"),
                    });
                }
            }
            if a == b {
                return Err(Error::InvalidParam {
                    name: "matching",
                    reason: format!("self pair ({a}, {a})"),
                });
            }
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidParam {
                name: "matching",
                reason: format!("node {v} is unmatched"),
            });
        }
        Ok(Topology::Matching { n, pairs })
    }

    /// All directed links of the topology.
    pub fn links(&self) -> Vec<Link> {
        match self {
            Topology::StaticRing { n } => (0..*n)
                .map(Link::Clockwise)
                .chain((0..*n).map(Link::CounterClockwise))
                .collect(),
            Topology::Matching { pairs, .. } => pairs
                .iter()
                .flat_map(|&(a, b)| {
                    [
                        Link::Circuit { from: a, to: b },
                        Link::Circuit { from: b, to: a },
                    ]
                })
                .collect(),
        }
    }

    /// Path of links from `src` to `dst`.
    ///
    /// On the ring the shorter arc is taken. At distance exactly `n / 2` the
    /// flow leaving the lower position goes clockwise and its partner takes
    /// the opposite arc, which is also clockwise from its own position.
    pub fn route(&self, src: usize, dst: usize) -> Result<Vec<Link>> {
        self.route_with(src, dst, None)
    }

    /// Partner of every node under a matching.
    pub(crate) fn partners(&self) -> Option<Vec<usize>> {
        match self {
            Topology::StaticRing { .. } => None,
            Topology::Matching { n, pairs } => {
                let mut partner = vec![usize::MAX; *n];
                for &(a, b) in pairs {
                    partner[a] = b;
                    partner[b] = a;
                }
                Some(partner)
            }
        }
    }

    pub(crate) fn route_with(
        &self,
        src: usize,
        dst: usize,
        partners: Option<&[usize]>,
    ) -> Result<Vec<Link>> {
        let n = self.n();
        if src >= n || dst >= n || src == dst {
            return Err(Error::NodeOutOfRange { src, dst, n });
        }
        match self {
            Topology::StaticRing { .. } => {
                let cw = (dst + n - src) % n;
                let ccw = n - cw;
                if cw <= ccw {
                    Ok((0..cw).map(|h| Link::Clockwise((src + h) % n)).collect())
                } else {
                    // walking src -> src-1 -> ... uses CounterClockwise(src-1), ...
                    Ok((1..=ccw)
                        .map(|h| Link::CounterClockwise((src + n - h) % n))
                        .collect())
                }
            }
            Topology::Matching { pairs, .. } => {
                let connected = match partners {
                    Some(partner) => partner[src] == dst,
                    None => pairs
                        .iter()
                        .any(|&(a, b)| (a, b) == (src, dst) || (b, a) == (src, dst)),
                };
                if connected {
                    Ok(vec![Link::Circuit { from: src, to: dst }])
                } else {
                    Err(Error::NotConnected { src, dst })
                }
            }
        }
    }

    /// Dense index of a link of this topology, below `2 n`.
    pub(crate) fn link_index(&self, link: &Link) -> usize {
        match *link {
            Link::Clockwise(k) => k,
            Link::CounterClockwise(k) => self.n() + k,
            // a matching gives each node exactly one outgoing circuit
            Link::Circuit { from, .. } => from,
        }
    }
}

/// Per-flow paths plus the number of flows crossing each directed link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Routing {
    pub paths: Vec<Vec<Link>>,
    pub loads: BTreeMap<Link, u32>,
    /// Occupancy of the busiest link on each path.
    pub path_loads: Vec<u32>,
}

impl Routing {
    pub fn max_load(&self) -> u32 {
        self.loads.values().copied().max().unwrap_or(0)
    }

    /// Occupancy of the busiest link on path `idx`.
    pub fn path_load(&self, idx: usize) -> u32 {
        self.path_loads[idx]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_has_two_links_per_position() {
        let ring = Topology::StaticRing { n: 5 };
        assert_eq!(ring.links().len(), 10);
        let ring2 = Topology::StaticRing { n: 2 };
        assert_eq!(ring2.links().len(), 4);
    }

    #[test]
    fn shortest_arc_routing() {
        let ring = Topology::StaticRing { n: 8 };
        assert_eq!(
            ring.route(6, 1).unwrap(),
            vec![Link::Clockwise(6), Link::Clockwise(7), Link::Clockwise(0)]
        );
        assert_eq!(
            ring.route(1, 6).unwrap(),
            vec![
                Link::CounterClockwise(0),
                Link::CounterClockwise(7),
                Link::CounterClockwise(6)
            ]
        );
        // tie: both directions of the 2 <-> 6 exchange go clockwise on disjoint arcs
        let fwd = ring.route(2, 6).unwrap();
        let back = ring.route(6, 2).unwrap();
        assert_eq!(fwd, (2..6).map(Link::Clockwise).collect::<Vec<_>>());
        assert_eq!(back, [6, 7, 0, 1].map(Link::Clockwise).to_vec());
    }

    #[test]
    fn matching_validation_and_routing() {
        assert!(Topology::matching(4, vec![(0, 1), (1, 2)]).is_err());
        assert!(Topology::matching(4, vec![(0, 1)]).is_err());
        assert!(Topology::matching(4, vec![(0, 4), (1, 2)]).is_err());
        let m = Topology::matching(4, vec![(0, 2), (1, 3)]).unwrap();
        assert_eq!(
            m.route(2, 0).unwrap(),
            vec![Link::Circuit { from: 2, to: 0 }]
        );
        assert_eq!(m.route(0, 1), Err(Error::NotConnected { src: 0, dst: 1 }));
        assert_eq!(m.links().len(), 4);
    }

    #[test]
    fn route_rejects_bad_endpoints() {
        let ring = Topology::StaticRing { n: 4 };
        assert!(ring.route(0, 4).is_err());
        assert!(ring.route(2, 2).is_err());
    }
}
