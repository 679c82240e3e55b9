use super::{CellState, GridPoint, OccupancyGrid, SpatialError};
use std::collections::VecDeque;

/// 8-neighborhood offsets, clockwise starting north (row + 1 is north).
pub const NEIGHBORS_8: [(i32, i32); 8] =
    [(0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1)];

/// Integer error-accumulator Bresenham. Includes both endpoints; every
/// consecutive pair is 8-connected.
///
/// The trace always runs from the smaller endpoint (row-major), so
/// `bresenham_line(b, a)` is exactly `bresenham_line(a, b)` reversed.
pub fn bresenham_line(a: GridPoint, b: GridPoint) -> Vec<GridPoint> {
    if b.row_major() < a.row_major() {
        let mut line = trace(b, a);
        line.reverse();
        return line;
    }
    trace(a, b)
}

fn trace(a: GridPoint, b: GridPoint) -> Vec<GridPoint> {
    let dx = (b.col - a.col).abs();
    let dy = -(b.row - a.row).abs();
    let sx = if a.col < b.col { 1 } else { -1 };
    let sy = if a.row < b.row { 1 } else { -1 };
    let mut err = dx + dy;
    let (mut x, mut y) = (a.col, a.row);
    let mut out = Vec::with_capacity((dx.max(-dy) + 1) as usize);
    loop {
        out.push(GridPoint::new(x, y));
        if x == b.col && y == b.row {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    out
}

/// True iff every cell strictly between `a` and `b` is Free. Unknown and
/// out-of-grid cells block, endpoints are never tested.
pub fn line_of_sight(grid: &OccupancyGrid, a: GridPoint, b: GridPoint) -> bool {
    let line = bresenham_line(a, b);
    if line.len() <= 2 {
        return true;
    }
    line[1..line.len() - 1].iter().all(|&c| grid.is_free(c))
}

/// 8-connected components of the cells selected by `keep` (called with the
/// flat row-major index). Members are in row-major order; components are
/// sorted by size descending, then by their smallest member.
pub fn components_where(width: usize, height: usize, keep: impl Fn(usize) -> bool) -> Vec<Vec<GridPoint>> {
    let mut seen = vec![false; width * height];
    let mut comps = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..width * height {
        if seen[start] || !keep(start) {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut members = Vec::new();
        while let Some(i) = queue.pop_front() {
            let (col, row) = ((i % width) as i32, (i / width) as i32);
            members.push(GridPoint::new(col, row));
            for (dc, dr) in NEIGHBORS_8 {
                let (nc, nr) = (col + dc, row + dr);
                if nc < 0 || nr < 0 || nc as usize >= width || nr as usize >= height {
                    continue;
                }
                let j = nr as usize * width + nc as usize;
                if !seen[j] && keep(j) {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        members.sort_by_key(|p| p.row_major());
        comps.push(members);
    }
    comps.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].row_major().cmp(&b[0].row_major())));
    comps
}

pub fn connected_components(grid: &OccupancyGrid, state: CellState) -> Vec<Vec<GridPoint>> {
    let cells = grid.cells();
    components_where(grid.width(), grid.height(), |i| cells[i] == state)
}

/// Component-wise lower median, snapped to the nearest member so the
/// result always lies inside the point set.
pub fn spatial_median(points: &[GridPoint]) -> Result<GridPoint, SpatialError> {
    if points.is_empty() {
        return Err(SpatialError::EmptyInput);
    }
    let mut cols: Vec<i32> = points.iter().map(|p| p.col).collect();
    let mut rows: Vec<i32> = points.iter().map(|p| p.row).collect();
    cols.sort_unstable();
    rows.sort_unstable();
    let mid = (points.len() - 1) / 2;
    let target = GridPoint::new(cols[mid], rows[mid]);
    let best = points
        .iter()
        .copied()
        .min_by_key(|p| (p.dist2(target), p.row_major()))
        .expect("non-empty");
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::WorldPoint;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn gp(c: i32, r: i32) -> GridPoint {
        GridPoint::new(c, r)
    }

    #[test]
    fn bresenham_examples() {
        assert_eq!(bresenham_line(gp(0, 0), gp(3, 0)), vec![gp(0, 0), gp(1, 0), gp(2, 0), gp(3, 0)]);
        assert_eq!(bresenham_line(gp(0, 0), gp(3, 3)), vec![gp(0, 0), gp(1, 1), gp(2, 2), gp(3, 3)]);
        assert_eq!(bresenham_line(gp(0, 0), gp(0, 0)), vec![gp(0, 0)]);
    }

    fn open(w: usize, h: usize) -> OccupancyGrid {
        OccupancyGrid::new(w, h, 0.05, WorldPoint::default(), CellState::Free).unwrap()
    }

    #[test]
    fn line_of_sight_examples() {
        let mut g = open(8, 8);
        assert!(line_of_sight(&g, gp(0, 0), gp(5, 5)));
        g.set(gp(2, 2), CellState::Occupied);
        assert!(!line_of_sight(&g, gp(0, 0), gp(4, 4)));

        let mut g = open(8, 8);
        g.set(gp(2, 2), CellState::Occupied);
        assert!(line_of_sight(&g, gp(0, 0), gp(2, 2)), "endpoints are excluded");
        g.set(gp(1, 1), CellState::Unknown);
        assert!(!line_of_sight(&g, gp(0, 0), gp(2, 2)), "unknown blocks");
    }

    #[test]
    fn components_examples() {
        let all = open(3, 3);
        let comps = connected_components(&all, CellState::Free);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].len(), 9);

        let g = OccupancyGrid::from_ascii(&[".##", "###", "##."], 1.0, WorldPoint::default()).unwrap();
        let comps = connected_components(&g, CellState::Free);
        assert_eq!(comps, vec![vec![gp(2, 0)], vec![gp(0, 2)]]);

        // L shape: the corner joins both legs
        let l = OccupancyGrid::from_ascii(&[".##", ".##", "..."], 1.0, WorldPoint::default()).unwrap();
        let comps = connected_components(&l, CellState::Free);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].len(), 5);
    }

    #[test]
    fn diagonal_touch_is_connected() {
        let g = OccupancyGrid::from_ascii(&[".#", "#."], 1.0, WorldPoint::default()).unwrap();
        assert_eq!(connected_components(&g, CellState::Free).len(), 1);
    }

    #[test]
    fn median_examples() {
        assert_eq!(spatial_median(&[gp(1, 1)]).unwrap(), gp(1, 1));
        assert_eq!(spatial_median(&[gp(0, 0), gp(0, 2), gp(0, 4)]).unwrap(), gp(0, 2));
        assert!(matches!(spatial_median(&[]), Err(SpatialError::EmptyInput)));
    }

    #[test]
    fn median_of_ring_snaps_to_nearest_member() {
        let mut ring = Vec::new();
        for c in 0..5 {
            for r in 0..5 {
                if c == 0 || r == 0 || c == 4 || r == 4 {
                    ring.push(gp(c, r));
                }
            }
        }
        let m = spatial_median(&ring).unwrap();
        assert!(ring.contains(&m));
        // exhaustive oracle: the componentwise median is (2, 2)
        let best = ring.iter().map(|p| p.dist2(gp(2, 2))).min().unwrap();
        assert_eq!(m.dist2(gp(2, 2)), best);
        assert_eq!(m, gp(2, 0));
    }

    proptest! {
        #[test]
        fn bresenham_is_connected_and_symmetric(a in (-30i32..30, -30i32..30), b in (-30i32..30, -30i32..30)) {
            let (a, b) = (gp(a.0, a.1), gp(b.0, b.1));
            let fwd = bresenham_line(a, b);
            prop_assert_eq!(fwd[0], a);
            prop_assert_eq!(*fwd.last().unwrap(), b);
            for w in fwd.windows(2) {
                prop_assert_eq!(w[0].chebyshev(w[1]), 1);
            }
            prop_assert_eq!(fwd.len() as i32, a.chebyshev(b) + 1);
            let rev = bresenham_line(b, a);
            let fs: BTreeSet<_> = fwd.iter().collect();
            let rs: BTreeSet<_> = rev.iter().collect();
            prop_assert_eq!(fs, rs);
            prop_assert_eq!(fwd.clone(), bresenham_line(a, b));
        }

        #[test]
        fn line_of_sight_is_monotone(blocks in proptest::collection::vec((0i32..12, 0i32..12), 0..20),
                                      extra in (0i32..12, 0i32..12),
                                      a in (0i32..12, 0i32..12), b in (0i32..12, 0i32..12)) {
            let mut g = open(12, 12);
            for (c, r) in blocks {
                g.set(gp(c, r), CellState::Occupied);
            }
            let before = line_of_sight(&g, gp(a.0, a.1), gp(b.0, b.1));
            g.set(gp(extra.0, extra.1), CellState::Occupied);
            let after = line_of_sight(&g, gp(a.0, a.1), gp(b.0, b.1));
            prop_assert!(!(after && !before));
        }

        #[test]
        fn components_partition_matching_cells(bits in proptest::collection::vec(any::<bool>(), 100)) {
            let cells: Vec<CellState> = bits.iter().map(|&b| if b { CellState::Free } else { CellState::Occupied }).collect();
            let g = OccupancyGrid::from_cells(10, 10, 1.0, WorldPoint::default(), cells).unwrap();
            let comps = connected_components(&g, CellState::Free);
            let mut seen = BTreeSet::new();
            for comp in &comps {
                for p in comp {
                    prop_assert!(g.is_free(*p));
                    prop_assert!(seen.insert(*p));
                }
            }
            prop_assert_eq!(seen.len(), g.count(CellState::Free));
            for w in comps.windows(2) {
                prop_assert!(w[0].len() >= w[1].len());
            }
        }
    }
}
