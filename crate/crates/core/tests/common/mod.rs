//! Independent oracles shared by the integration tests.

use petgraph::algo::dijkstra;
use petgraph::graph::{DiGraph, NodeIndex};
use qcontrol::hjb::PolarGrid;

/// Multi-source shortest times on reversed edges `(b, a, τ)`: a super-source
/// joins every source at zero cost.
fn shortest_times(nodes: usize, reversed: Vec<(usize, usize, f64)>, sources: &[usize]) -> Vec<f64> {
    let mut g = DiGraph::<(), f64>::with_capacity(nodes + 1, reversed.len() + sources.len());
    for _ in 0..=nodes {
        g.add_node(());
    }
    let root = NodeIndex::new(nodes);
    for &s in sources {
        g.add_edge(root, NodeIndex::new(s), 0.0);
    }
    for (b, a, tau) in reversed {
        g.add_edge(NodeIndex::new(b), NodeIndex::new(a), tau);
    }
    let dist = dijkstra(&g, root, None, |e| *e.weight());
    (0..nodes).map(|k| dist.get(&NodeIndex::new(k)).copied().unwrap_or(f64::INFINITY)).collect()
}

/// Shortest time on the graph whose edges follow the exact flow under each
/// constant control `u ∈ {−1, 0, 1}` from a node until it has moved a
/// great-circle distance `exit` away, landing on the nearest node; the edge
/// weight is the elapsed time.
pub fn dijkstra_flow_graph(grid: &PolarGrid, omega: f64, sources: &[usize], exits: &[f64]) -> Vec<f64> {
    use qcontrol::hjb::angular_distance;
    use qcontrol::hybrid::{closed_bloch_rhs, rk4_step};
    let h = 0.01 * grid.d_theta();
    let mut edges = Vec::new();
    for a in 0..grid.len() {
        let (i, j) = grid.coords(a);
        let p = grid.point(i, j);
        for u in [-1.0, 0.0, 1.0] {
            let mut r = p;
            let mut t = 0.0;
            for &exit in exits {
                while angular_distance(r, p) < exit && t < 20.0 {
                    r = rk4_step(t, r, h, |_, s| closed_bloch_rhs(s, u, omega));
                    r = r.scale(1.0 / r.norm());
                    t += h;
                }
                if t >= 20.0 {
                    break;
                }
                let (bi, bj) = grid.nearest_to(r);
                let b = grid.index(bi, bj);
                if b != a {
                    edges.push((b, a, t));
                }
            }
        }
    }
    shortest_times(grid.len(), edges, sources)
}
