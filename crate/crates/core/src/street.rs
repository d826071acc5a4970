//! All-pairs shortest paths over the street blocks of a [`City`].
//!
//! Edges join 4-adjacent street blocks with unit weight. Distances are
//! computed once with Dijkstra from every street block; paths are rebuilt on
//! demand by walking down the distance field, always stepping to the
//! lexicographically smallest `(x, y)` neighbour, which yields the
//! lexicographically smallest shortest path.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use crate::city::{Block, City};
use crate::error::{Error, Result};

pub const UNREACHABLE: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct StreetGraph {
    nodes: Vec<Block>,
    index: HashMap<Block, usize>,
    adjacency: Vec<Vec<usize>>,
    /// Row-major `n x n` matrix; `UNREACHABLE` marks disconnected pairs.
    dist: Vec<u32>,
    connected: bool,
}

impl StreetGraph {
    pub fn build(city: &City) -> Result<Self> {
        let nodes: Vec<Block> = city.street_blocks().collect();
        if nodes.is_empty() {
            return Err(Error::invalid("city has no street blocks"));
        }
        let index: HashMap<Block, usize> = nodes.iter().enumerate().map(|(i, b)| (*b, i)).collect();
        let adjacency: Vec<Vec<usize>> = nodes
            .iter()
            .map(|b| {
                b.neighbors()
                    .into_iter()
                    .filter_map(|n| index.get(&n).copied())
                    .collect()
            })
            .collect();

        let n = nodes.len();
        let mut dist = vec![UNREACHABLE; n * n];
        for source in 0..n {
            dijkstra(&nodes, &adjacency, source, &mut dist[source * n..(source + 1) * n]);
        }
        let connected = dist[..n].iter().all(|&d| d != UNREACHABLE);
        Ok(StreetGraph {
            nodes,
            index,
            adjacency,
            dist,
            connected,
        })
    }

    pub fn nodes(&self) -> &[Block] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Whether every street block can reach every other one.
    pub fn is_connected(&self) -> bool {
        self.connected
    }

    pub fn node(&self, block: Block) -> Option<usize> {
        self.index.get(&block).copied()
    }

    fn require_node(&self, block: Block) -> Result<usize> {
        self.node(block)
            .ok_or_else(|| Error::invalid(format!("{block} is not a street block")))
    }

    /// Street distance in blocks, `None` when unreachable.
    pub fn distance(&self, from: Block, to: Block) -> Result<Option<u32>> {
        let a = self.require_node(from)?;
        let b = self.require_node(to)?;
        Ok(self.distance_idx(a, b))
    }

    pub fn distance_idx(&self, a: usize, b: usize) -> Option<u32> {
        let d = self.dist[a * self.nodes.len() + b];
        (d != UNREACHABLE).then_some(d)
    }

    /// First step from `from` towards `to` on the canonical shortest path.
    pub fn next_hop(&self, from: Block, to: Block) -> Result<Option<Block>> {
        let a = self.require_node(from)?;
        let b = self.require_node(to)?;
        if self.distance_idx(a, b).is_none() {
            return Err(Error::NoPath(format!("{from} cannot reach {to}")));
        }
        Ok(self.next_hop_idx(a, b).map(|i| self.nodes[i]))
    }

    fn next_hop_idx(&self, current: usize, target: usize) -> Option<usize> {
        let n = self.nodes.len();
        let d = self.dist[target * n + current];
        if d == 0 {
            return None;
        }
        self.adjacency[current]
            .iter()
            .copied()
            .filter(|&nb| self.dist[target * n + nb] == d - 1)
            .min_by_key(|&nb| self.nodes[nb])
    }

    /// Ordered street blocks from `from` to `to`, both inclusive.
    pub fn shortest_path(&self, from: Block, to: Block) -> Result<Vec<Block>> {
        let a = self.require_node(from)?;
        let b = self.require_node(to)?;
        if self.distance_idx(a, b).is_none() {
            return Err(Error::NoPath(format!("{from} cannot reach {to}")));
        }
        let mut path = vec![self.nodes[a]];
        let mut current = a;
        while let Some(next) = self.next_hop_idx(current, b) {
            path.push(self.nodes[next]);
            current = next;
        }
        Ok(path)
    }
}

fn dijkstra(nodes: &[Block], adjacency: &[Vec<usize>], source: usize, dist: &mut [u32]) {
    // Heap keyed by (distance, block) so equal distances pop in (x, y) order.
    let mut heap = BinaryHeap::new();
    dist[source] = 0;
    heap.push(Reverse((0u32, nodes[source], source)));
    while let Some(Reverse((d, _, u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &v in &adjacency[u] {
            let nd = d + 1;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Reverse((nd, nodes[v], v)));
            }
        }
    }
}

/// Street distances between building doors, the `r(k, l)` of the
/// exploration gravity law.
#[derive(Debug, Clone)]
pub struct DoorDistances {
    n: usize,
    dist: Vec<Option<u32>>,
}

impl DoorDistances {
    pub fn new(city: &City, graph: &StreetGraph) -> Result<Self> {
        let doors: Vec<usize> = city
            .buildings()
            .iter()
            .map(|b| graph.require_node(b.door))
            .collect::<Result<_>>()?;
        let n = doors.len();
        let mut dist = Vec::with_capacity(n * n);
        for &a in &doors {
            for &b in &doors {
                dist.push(graph.distance_idx(a, b));
            }
        }
        Ok(DoorDistances { n, dist })
    }

    pub fn get(&self, k: usize, l: usize) -> Option<u32> {
        self.dist[k * self.n + l]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::city::{BuildingSpec, BuildingType, Footprint};

    #[test]
    fn strip_distance() {
        let city = City::new(3, 1).unwrap();
        let g = StreetGraph::build(&city).unwrap();
        assert_eq!(g.distance(Block::new(0, 0), Block::new(2, 0)).unwrap(), Some(2));
        assert!(g.is_connected());
    }

    #[test]
    fn enclosed_street_is_unreachable() {
        let mut city = City::new(5, 5).unwrap();
        // Ring around (2, 2); its door faces outward.
        let ring: Vec<Block> = Footprint::bbox(1, 1, 4, 4)
            .blocks()
            .into_iter()
            .filter(|b| *b != Block::new(2, 2))
            .collect();
        city.add_building(BuildingSpec::new(BuildingType::Work, (0, 2), Footprint::Blocks(ring)))
            .unwrap();
        let g = StreetGraph::build(&city).unwrap();
        assert!(!g.is_connected());
        for other in g.nodes().to_vec() {
            if other != Block::new(2, 2) {
                assert_eq!(g.distance(Block::new(2, 2), other).unwrap(), None);
            }
        }
        let err = g.shortest_path(Block::new(2, 2), Block::new(0, 0)).unwrap_err();
        assert!(matches!(err, Error::NoPath(_)));
    }

    #[test]
    fn trivial_and_corridor_paths() {
        let city = City::new(4, 4).unwrap();
        let g = StreetGraph::build(&city).unwrap();
        assert_eq!(g.shortest_path(Block::new(1, 1), Block::new(1, 1)).unwrap(), vec![Block::new(1, 1)]);

        // L-shaped corridor: x = 0 column and y = 3 row are the only streets.
        let mut city = City::new(4, 4).unwrap();
        city.add_building(BuildingSpec::new(BuildingType::Work, (0, 1), Footprint::bbox(1, 0, 4, 3)))
            .unwrap();
        let g = StreetGraph::build(&city).unwrap();
        let path = g.shortest_path(Block::new(0, 0), Block::new(3, 3)).unwrap();
        let expected: Vec<Block> = [(0, 0), (0, 1), (0, 2), (0, 3), (1, 3), (2, 3), (3, 3)]
            .into_iter()
            .map(Block::from)
            .collect();
        assert_eq!(path, expected);
    }

    #[test]
    fn non_street_endpoint_rejected() {
        let mut city = City::new(4, 4).unwrap();
        city.add_building(BuildingSpec::new(BuildingType::Home, (0, 0), Footprint::bbox(1, 0, 2, 1)))
            .unwrap();
        let g = StreetGraph::build(&city).unwrap();
        assert!(matches!(
            g.shortest_path(Block::new(1, 0), Block::new(3, 3)),
            Err(Error::InvalidArgument(_))
        ));
    }

    fn all_shortest_paths(from: Block, to: Block, size: i32) -> Vec<Vec<Block>> {
        // Brute force over monotone lattice paths in an open grid.
        fn rec(cur: Block, to: Block, size: i32, acc: &mut Vec<Block>, out: &mut Vec<Vec<Block>>) {
            if cur == to {
                out.push(acc.clone());
                return;
            }
            let d = (to.x - cur.x).abs() + (to.y - cur.y).abs();
            for n in cur.neighbors() {
                if n.x < 0 || n.y < 0 || n.x >= size || n.y >= size {
                    continue;
                }
                if (to.x - n.x).abs() + (to.y - n.y).abs() == d - 1 {
                    acc.push(n);
                    rec(n, to, size, acc, out);
                    acc.pop();
                }
            }
        }
        let mut out = Vec::new();
        rec(from, to, size, &mut vec![from], &mut out);
        out
    }

    #[test]
    fn open_grid_tie_break_is_lexicographic_minimum() {
        let city = City::new(5, 5).unwrap();
        let g = StreetGraph::build(&city).unwrap();
        let path = g.shortest_path(Block::new(0, 0), Block::new(4, 4)).unwrap();
        assert_eq!(path.len(), 9);
        let candidates = all_shortest_paths(Block::new(0, 0), Block::new(4, 4), 5);
        assert_eq!(candidates.len(), 70);
        assert_eq!(&path, candidates.iter().min().unwrap());
        assert_eq!(g.next_hop(Block::new(0, 0), Block::new(4, 4)).unwrap(), Some(Block::new(0, 1)));
    }
}
