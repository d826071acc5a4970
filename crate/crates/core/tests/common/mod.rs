//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use std::collections::VecDeque;

use rand::Rng;
use trajsim::city::{Block, Building, BuildingSpec, BuildingType, City, Footprint};
use trajsim::detect::{ClusterLabeling, DbscanParams, LachesisParams, Stop, NOISE};
use trajsim::pings::Ping;

pub fn minutes(a: &Ping, b: &Ping) -> f64 {
    (b.unix_timestamp - a.unix_timestamp) as f64 / 60.0
}

fn dist(a: &Ping, b: &Ping) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

fn order_key(p: &[Ping], a: usize, b: usize) -> std::cmp::Ordering {
    (p[a].unix_timestamp, p[a].x, p[a].y)
        .partial_cmp(&(p[b].unix_timestamp, p[b].x, p[b].y))
        .unwrap()
        .then(a.cmp(&b))
}

/// Dense-matrix temporal DBSCAN with a transitive closure over core points.
pub fn dbscan_oracle(pings: &[Ping], params: &DbscanParams) -> Vec<i32> {
    let n = pings.len();
    let adj: Vec<Vec<bool>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    i != j
                        && minutes(&pings[i], &pings[j]).abs() <= params.time_thresh
                        && dist(&pings[i], &pings[j]) <= params.dist_thresh
                })
                .collect()
        })
        .collect();
    let core: Vec<bool> = adj.iter().map(|r| r.iter().filter(|&&b| b).count() >= params.min_pts).collect();

    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            reach[i][j] = core[i] && core[j] && (i == j || adj[i][j]);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    // Representative of a core point: the first core point of its component.
    let rep = |i: usize| -> usize {
        (0..n).filter(|&j| reach[i][j]).min_by(|&a, &b| order_key(pings, a, b)).unwrap()
    };
    let mut assigned: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        if core[i] {
            assigned[i] = Some(rep(i));
        } else {
            assigned[i] = (0..n)
                .filter(|&j| adj[i][j] && core[j])
                .map(rep)
                .min_by(|&a, &b| order_key(pings, a, b));
        }
    }
    let raw: Vec<i32> = assigned.iter().map(|a| a.map_or(NOISE, |r| r as i32)).collect();
    canonical(pings, &raw)
}

/// Relabel clusters 0.. by first appearance in (time, x, y, index) order.
pub fn canonical(pings: &[Ping], labels: &[i32]) -> Vec<i32> {
    let mut order: Vec<usize> = (0..pings.len()).collect();
    order.sort_by(|&a, &b| order_key(pings, a, b));
    let mut map = std::collections::HashMap::new();
    let mut out = vec![NOISE; labels.len()];
    for i in order {
        if labels[i] != NOISE {
            let next = map.len() as i32;
            out[i] = *map.entry(labels[i]).or_insert(next);
        }
    }
    out
}

pub fn canonical_labeling(pings: &[Ping], labels: &ClusterLabeling) -> Vec<i32> {
    canonical(pings, &labels.labels)
}

/// Greedy sequential stays, re-checking every candidate window from scratch.
pub fn lachesis_oracle(pings: &[Ping], params: &LachesisParams) -> Vec<(usize, usize)> {
    let feasible = |i: usize, j: usize| -> bool {
        (i + 1..=j).all(|k| minutes(&pings[k - 1], &pings[k]) <= params.dt_max)
            && (i..=j).all(|a| (i..=j).all(|b| dist(&pings[a], &pings[b]) <= params.delta_roam))
    };
    let mut out = Vec::new();
    let mut i = 0;
    while i < pings.len() {
        let mut j = i;
        while j + 1 < pings.len() && feasible(i, j + 1) {
            j += 1;
        }
        let span = minutes(&pings[i], &pings[j]);
        if span >= params.dur_min && span > 0.0 {
            out.push((i, j));
        }
        i = j + 1;
    }
    out
}

pub fn stop_ranges(stops: &[Stop]) -> Vec<(usize, usize)> {
    stops.iter().map(|s| (s.members[0], *s.members.last().unwrap())).collect()
}

/// Small random instance: increasing integer minutes, coordinates on a
/// half-block lattice so distance ties are common.
pub fn random_pings<R: Rng>(rng: &mut R, max_len: usize) -> Vec<Ping> {
    let n = rng.random_range(0..=max_len);
    let mut t = 0i64;
    (0..n)
        .map(|_| {
            t += rng.random_range(0..=40);
            Ping {
                unix_timestamp: 1_700_000_000 + t * 60,
                x: rng.random_range(0..=8) as f64 * 0.5,
                y: rng.random_range(0..=8) as f64 * 0.5,
                ha: 0.0,
            }
        })
        .collect()
}

pub fn random_dbscan<R: Rng>(rng: &mut R) -> DbscanParams {
    let d = [0.5, 1.0, 1.5, 2.25][rng.random_range(0..4)];
    let t = [10.0, 30.0, 45.0, 120.0][rng.random_range(0..4)];
    DbscanParams::new(d, t, rng.random_range(1..=4))
}

pub fn random_lachesis<R: Rng>(rng: &mut R) -> LachesisParams {
    let dur = [0.0, 5.0, 15.0, 30.0][rng.random_range(0..4)];
    let gap = [5.0, 10.0, 30.0][rng.random_range(0..3)];
    let roam = [0.5, 1.0, 3.0][rng.random_range(0..3)];
    LachesisParams::new(dur, gap, roam)
}

/// Random buildings dropped onto a grid; placements the city rejects are skipped.
pub fn random_city<R: Rng>(rng: &mut R, width: i32, height: i32, attempts: usize) -> City {
    let mut city = City::new(width, height).unwrap();
    let types = [BuildingType::Home, BuildingType::Work, BuildingType::Retail, BuildingType::Park];
    for _ in 0..attempts {
        let w = rng.random_range(1..=3);
        let h = rng.random_range(1..=3);
        let x0 = rng.random_range(0..width - w + 1);
        let y0 = rng.random_range(0..height - h + 1);
        let fp = Footprint::bbox(x0, y0, x0 + w, y0 + h);
        let perimeter: Vec<Block> = fp
            .blocks()
            .iter()
            .flat_map(|b| b.neighbors())
            .filter(|n| !(x0..x0 + w).contains(&n.x) || !(y0..y0 + h).contains(&n.y))
            .collect();
        let door = perimeter[rng.random_range(0..perimeter.len())];
        let t = types[rng.random_range(0..4)];
        let _ = city.add_building(BuildingSpec::new(t, door, fp));
    }
    city
}

/// Unit-step BFS distances from `from` over street blocks.
pub fn bfs(city: &City, from: Block) -> std::collections::HashMap<Block, u32> {
    let mut dist = std::collections::HashMap::new();
    let mut queue = VecDeque::new();
    dist.insert(from, 0);
    queue.push_back(from);
    while let Some(b) = queue.pop_front() {
        let d = dist[&b];
        for n in [
            Block::new(b.x + 1, b.y),
            Block::new(b.x - 1, b.y),
            Block::new(b.x, b.y + 1),
            Block::new(b.x, b.y - 1),
        ] {
            if n.x >= 0 && n.y >= 0 && n.x < city.width() && n.y < city.height() && city.is_street(n) && !dist.contains_key(&n) {
                dist.insert(n, d + 1);
                queue.push_back(n);
            }
        }
    }
    dist
}

fn on_segment(px: f64, py: f64, a: (i32, i32), b: (i32, i32)) -> bool {
    let (ax, ay, bx, by) = (a.0 as f64, a.1 as f64, b.0 as f64, b.1 as f64);
    let cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax);
    cross.abs() < 1e-12
        && px >= ax.min(bx) - 1e-12
        && px <= ax.max(bx) + 1e-12
        && py >= ay.min(by) - 1e-12
        && py <= ay.max(by) + 1e-12
}

/// Closed point-in-polygon by crossing parity over the building's rings.
pub fn inside_polygon(building: &Building, x: f64, y: f64) -> bool {
    let rings = building.geometry();
    let mut inside = false;
    for ring in &rings {
        for w in ring.windows(2) {
            let (a, b) = (w[0], w[1]);
            if on_segment(x, y, a, b) {
                return true;
            }
            let (ay, by) = (a.1 as f64, b.1 as f64);
            if (ay > y) != (by > y) {
                let xc = a.0 as f64 + (y - ay) / (by - ay) * (b.0 - a.0) as f64;
                if x < xc {
                    inside = !inside;
                }
            }
        }
    }
    inside
}

/// Two-sided one-sample Kolmogorov-Smirnov test; returns `(D, p)` using the
/// asymptotic Kolmogorov distribution with the usual small-sample correction.
pub fn ks_test(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let sn = n.sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp();
        p += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    (d, p.clamp(0.0, 1.0))
}

/// Pearson goodness of fit; cells with expected count below 5 are pooled.
pub fn chi_square_p(observed: &[f64], expected: &[f64]) -> (f64, f64, usize) {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut po, mut pe) = (0.0, 0.0);
    for (&o, &e) in observed.iter().zip(expected) {
        if e < 5.0 {
            po += o;
            pe += e;
        } else {
            cells.push((o, e));
        }
    }
    if pe > 0.0 {
        cells.push((po, pe));
    }
    let stat: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let df = cells.len() - 1;
    let p = 1.0 - ChiSquared::new(df as f64).unwrap().cdf(stat);
    (stat, p, df)
}
