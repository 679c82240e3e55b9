use super::{EdgeBinding, NodeKind, TopoEdge, TopoNode, TopologyError, TopologyGraph};
use crate::ingest::ProductRecord;
use crate::spatial::{line_of_sight, OccupancyGrid, Side, WorldPoint};

/// Foot of the perpendicular from `p` onto segment `a`-`b`, clamped to the
/// segment, with its fractional position `t` in [0, 1].
pub fn project_onto_segment(p: WorldPoint, a: WorldPoint, b: WorldPoint) -> (WorldPoint, f64) {
    let d = b.sub(a);
    let len2 = d.dot(d);
    if len2 == 0.0 {
        return (a, 0.0);
    }
    let t = (p.sub(a).dot(d) / len2).clamp(0.0, 1.0);
    (a.add(d.scale(t)), t)
}

fn binding_for(graph: &TopologyGraph, e: &TopoEdge, product_id: &str, position: WorldPoint) -> EdgeBinding {
    let (pa, pb) = (graph.nodes[e.a].position(), graph.nodes[e.b].position());
    let (proj, t) = project_onto_segment(position, pa, pb);
    EdgeBinding {
        product_id: product_id.to_owned(),
        edge: [e.a, e.b],
        px: proj.x,
        py: proj.y,
        side: Side::of(pb.sub(pa), position.sub(proj)),
        offset: position.distance(proj),
        t,
        visible: true,
    }
}

/// Binds a product to the nearest edge whose projection point can see it.
/// With no visible edge the nearest edge overall is used and the binding
/// is returned with `visible = false`.
pub fn bind_product(
    graph: &TopologyGraph,
    grid: &OccupancyGrid,
    product_id: &str,
    position: WorldPoint,
) -> Result<EdgeBinding, TopologyError> {
    if graph.edges.is_empty() {
        return Err(TopologyError::NoEdges);
    }
    if !position.is_finite() {
        return Err(TopologyError::InvalidParameter(format!("product {product_id} has a non-finite position")));
    }
    let target = grid.cell_of(position);
    let mut best_visible: Option<EdgeBinding> = None;
    let mut best_any: Option<EdgeBinding> = None;
    for e in &graph.edges {
        let b = binding_for(graph, e, product_id, position);
        if best_any.as_ref().is_none_or(|x| b.offset < x.offset) {
            best_any = Some(b.clone());
        }
        if best_visible.as_ref().is_none_or(|x| b.offset < x.offset)
            && line_of_sight(grid, grid.cell_of(b.projection()), target)
        {
            best_visible = Some(b);
        }
    }
    Ok(best_visible.unwrap_or_else(|| EdgeBinding { visible: false, ..best_any.expect("edges non-empty") }))
}

/// Binds every product, replacing any existing bindings.
pub fn bind_all(graph: &mut TopologyGraph, grid: &OccupancyGrid, products: &[ProductRecord]) -> Result<(), TopologyError> {
    graph.bindings.clear();
    for p in products {
        let b = bind_product(graph, grid, &p.product_id, p.position())?;
        graph.bindings.insert(p.product_id.clone(), b);
    }
    Ok(())
}

/// Splits the bound edge at the projection point and returns the new graph
/// together with the id of the node sitting there. The input graph is left
/// untouched. When the projection coincides with an edge endpoint no split
/// happens and that endpoint's id is returned.
pub fn insert_virtual_node(graph: &TopologyGraph, binding: &EdgeBinding) -> Result<(TopologyGraph, usize), TopologyError> {
    let (a, b) = binding.edge_key();
    let edge = *graph.edge(a, b).filter(|e| e.key() == (a, b)).ok_or(TopologyError::StaleBinding(a, b))?;
    let (pa, pb) = (graph.nodes[a].position(), graph.nodes[b].position());
    let proj = binding.projection();
    const SNAP: f64 = 1e-9;
    if proj.distance(pa) <= SNAP {
        return Ok((graph.clone(), a));
    }
    if proj.distance(pb) <= SNAP {
        return Ok((graph.clone(), b));
    }
    let mut out = graph.clone();
    let v = out.nodes.len();
    out.nodes.push(TopoNode { id: v, x: proj.x, y: proj.y, kind: NodeKind::Virtual });
    out.edges.retain(|e| e.key() != edge.key());
    out.edges.push(TopoEdge { a, b: v, length: pa.distance(proj) });
    out.edges.push(TopoEdge { a: b, b: v, length: pb.distance(proj) });
    out.edges.sort_by_key(|e| e.key());

    let tv = project_onto_segment(proj, pa, pb).1;
    for other in out.bindings.values_mut() {
        if other.edge_key() != (a, b) {
            continue;
        }
        if other.t <= tv {
            other.edge = [a, v];
            other.t = if tv > 0.0 { other.t / tv } else { 0.0 };
        } else {
            other.edge = [b, v];
            other.t = (1.0 - other.t) / (1.0 - tv);
            if other.offset > 0.0 {
                other.side = other.side.flipped();
            }
        }
    }
    Ok((out, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::CellState;
    use proptest::prelude::*;

    fn open_grid() -> OccupancyGrid {
        OccupancyGrid::new(100, 100, 0.05, WorldPoint::new(-2.5, -2.5), CellState::Free).unwrap()
    }

    fn segment(a: WorldPoint, b: WorldPoint) -> TopologyGraph {
        TopologyGraph::from_parts(vec![(a, NodeKind::Endpoint), (b, NodeKind::Endpoint)], &[(0, 1)]).unwrap()
    }

    #[test]
    fn on_edge_product_has_zero_offset() {
        let g = segment(WorldPoint::new(0.0, 0.0), WorldPoint::new(2.0, 0.0));
        let b = bind_product(&g, &open_grid(), "p", WorldPoint::new(0.7, 0.0)).unwrap();
        assert_eq!(b.offset, 0.0);
        assert_eq!(b.projection(), WorldPoint::new(0.7, 0.0));
    }

    #[test]
    fn side_under_y_up() {
        let g = segment(WorldPoint::new(0.0, 0.0), WorldPoint::new(2.0, 0.0));
        let grid = open_grid();
        assert_eq!(bind_product(&g, &grid, "p", WorldPoint::new(1.0, 0.5)).unwrap().side, Side::Left);
        assert_eq!(bind_product(&g, &grid, "p", WorldPoint::new(1.0, -0.5)).unwrap().side, Side::Right);
    }

    #[test]
    fn beyond_end_clamps() {
        let g = segment(WorldPoint::new(0.0, 0.0), WorldPoint::new(2.0, 0.0));
        let b = bind_product(&g, &open_grid(), "p", WorldPoint::new(2.3, 0.4)).unwrap();
        assert_eq!(b.projection(), WorldPoint::new(2.0, 0.0));
        assert!((b.offset - 0.5).abs() < 1e-12);
        assert_eq!(b.t, 1.0);
    }

    #[test]
    fn prefers_visible_edge() {
        // two parallel edges; a wall hides the nearer one
        let mut grid = open_grid();
        for col in 0..100 {
            let p = grid.cell_of(WorldPoint::new(-2.5 + col as f64 * 0.05, 0.3));
            grid.set(p, CellState::Occupied);
        }
        let g = TopologyGraph::from_parts(
            vec![
                (WorldPoint::new(-1.0, 0.0), NodeKind::Endpoint),
                (WorldPoint::new(1.0, 0.0), NodeKind::Endpoint),
                (WorldPoint::new(-1.0, 1.0), NodeKind::Endpoint),
                (WorldPoint::new(1.0, 1.0), NodeKind::Endpoint),
            ],
            &[(0, 1), (2, 3)],
        )
        .unwrap();
        let b = bind_product(&g, &grid, "p", WorldPoint::new(0.0, 0.45)).unwrap();
        assert_eq!(b.edge, [2, 3]);
        assert!(b.visible);

        // fully enclosed product falls back to the nearest edge, flagged
        let mut boxed = open_grid();
        let c = boxed.cell_of(WorldPoint::new(0.0, 0.45));
        for (dc, dr) in crate::spatial::NEIGHBORS_8 {
            boxed.set(crate::spatial::GridPoint::new(c.col + dc, c.row + dr), CellState::Occupied);
        }
        let b = bind_product(&g, &boxed, "p", WorldPoint::new(0.0, 0.45)).unwrap();
        assert_eq!(b.edge, [0, 1]);
        assert!(!b.visible);
    }

    #[test]
    fn no_edges() {
        let g = TopologyGraph::from_parts(vec![(WorldPoint::new(0.0, 0.0), NodeKind::Endpoint)], &[]).unwrap();
        assert!(matches!(bind_product(&g, &open_grid(), "p", WorldPoint::new(0.0, 0.0)), Err(TopologyError::NoEdges)));
    }

    #[test]
    fn split_lengths() {
        let g = segment(WorldPoint::new(0.0, 0.0), WorldPoint::new(2.0, 0.0));
        let grid = open_grid();
        for (x, left) in [(1.0, 1.0), (0.6, 0.6)] {
            let b = bind_product(&g, &grid, "p", WorldPoint::new(x, 0.3)).unwrap();
            let (h, v) = insert_virtual_node(&g, &b).unwrap();
            assert_eq!(v, 2);
            assert_eq!(h.nodes[v].kind, NodeKind::Virtual);
            assert!((h.edge(0, v).unwrap().length - left).abs() < 1e-12);
            assert!((h.edge(1, v).unwrap().length - (2.0 - left)).abs() < 1e-12);
            assert!(h.edge(0, 1).is_none());
            assert_eq!(g.edges.len(), 1, "original untouched");
        }
    }

    #[test]
    fn split_at_endpoint_is_a_no_op() {
        let g = segment(WorldPoint::new(0.0, 0.0), WorldPoint::new(2.0, 0.0));
        let b = bind_product(&g, &open_grid(), "p", WorldPoint::new(-0.5, 0.2)).unwrap();
        let (h, v) = insert_virtual_node(&g, &b).unwrap();
        assert_eq!(v, 0);
        assert_eq!(h, g);
    }

    #[test]
    fn stale_binding() {
        let g = segment(WorldPoint::new(0.0, 0.0), WorldPoint::new(2.0, 0.0));
        let mut b = bind_product(&g, &open_grid(), "p", WorldPoint::new(1.0, 0.2)).unwrap();
        b.edge = [0, 7];
        assert!(matches!(insert_virtual_node(&g, &b), Err(TopologyError::StaleBinding(0, 7))));
    }

    #[test]
    fn sibling_bindings_follow_the_split() {
        let mut g = segment(WorldPoint::new(0.0, 0.0), WorldPoint::new(2.0, 0.0));
        let grid = open_grid();
        let near = bind_product(&g, &grid, "near", WorldPoint::new(0.5, 0.2)).unwrap();
        let far = bind_product(&g, &grid, "far", WorldPoint::new(1.5, 0.2)).unwrap();
        g.bindings.insert("near".into(), near.clone());
        g.bindings.insert("far".into(), far);
        let mid = bind_product(&g, &grid, "mid", WorldPoint::new(1.0, 0.2)).unwrap();
        let (h, v) = insert_virtual_node(&g, &mid).unwrap();
        assert!(h.violations(None).is_empty(), "{:?}", h.violations(None));
        assert_eq!(h.bindings["near"].edge, [0, v]);
        assert_eq!(h.bindings["near"].side, Side::Left);
        assert_eq!(h.bindings["far"].edge, [1, v]);
        // edge 1 -> v runs in -x, so the +y product is now on its right
        assert_eq!(h.bindings["far"].side, Side::Right);
        assert!((h.bindings["far"].t - 0.5).abs() < 1e-12);
    }

    fn dijkstra(g: &TopologyGraph, src: usize) -> Vec<f64> {
        let adj = g.adjacency();
        let mut dist = vec![f64::INFINITY; g.nodes.len()];
        let mut done = vec![false; g.nodes.len()];
        dist[src] = 0.0;
        for _ in 0..g.nodes.len() {
            let Some(u) = (0..g.nodes.len()).filter(|&i| !done[i] && dist[i].is_finite()).min_by(|&a, &b| dist[a].total_cmp(&dist[b])) else {
                break;
            };
            done[u] = true;
            for &(v, w) in &adj[u] {
                dist[v] = dist[v].min(dist[u] + w);
            }
        }
        dist
    }

    proptest! {
        #[test]
        fn side_flips_under_mirroring(ax in -2.0f64..2.0, ay in -2.0f64..2.0, bx in -2.0f64..2.0, by in -2.0f64..2.0,
                                      s in 0.05f64..0.95, off in 0.05f64..1.0) {
            let (a, b) = (WorldPoint::new(ax, ay), WorldPoint::new(bx, by));
            prop_assume!(a.distance(b) > 0.1);
            let g = segment(a, b);
            let grid = open_grid();
            let d = b.sub(a);
            let n = WorldPoint::new(-d.y, d.x).scale(1.0 / d.norm());
            let foot = a.add(d.scale(s));
            let p = foot.add(n.scale(off));
            let q = foot.sub(n.scale(off));
            let bp = bind_product(&g, &grid, "p", p).unwrap();
            let bq = bind_product(&g, &grid, "q", q).unwrap();
            prop_assert_eq!(bp.side, Side::Left);
            prop_assert_eq!(bq.side, bp.side.flipped());
            prop_assert!((bp.offset - off).abs() < 1e-9 && (bq.offset - off).abs() < 1e-9);
        }

        #[test]
        fn virtual_insertion_keeps_distances(seed in 0u64..5000, which in 0usize..100, t in 0.0f64..1.0) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = rng.random_range(3..12);
            let nodes: Vec<_> = (0..n)
                .map(|_| (WorldPoint::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)), NodeKind::Turn))
                .collect();
            let mut edges = Vec::new();
            for i in 1..n {
                edges.push((rng.random_range(0..i), i));
            }
            for _ in 0..n {
                let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
                if a != b {
                    edges.push((a, b));
                }
            }
            let g = TopologyGraph::from_parts(nodes, &edges).unwrap();
            let e = g.edges[which % g.edges.len()];
            let (pa, pb) = (g.nodes[e.a].position(), g.nodes[e.b].position());
            let p = pa.add(pb.sub(pa).scale(t));
            let b = EdgeBinding { product_id: "x".into(), edge: [e.a, e.b], px: p.x, py: p.y, side: Side::Left, offset: 0.0, t, visible: true };
            let (h, _) = insert_virtual_node(&g, &b).unwrap();
            prop_assert!(h.violations(None).is_empty());
            for src in 0..n {
                let before = dijkstra(&g, src);
                let after = dijkstra(&h, src);
                for k in 0..n {
                    prop_assert!((before[k] - after[k]).abs() < 1e-6);
                }
            }
        }
    }
}
