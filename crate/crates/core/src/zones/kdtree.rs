/// Static 2-d tree over points for exact k-nearest queries.
///
/// Results are ordered by (squared distance, point index), so equidistant
/// points resolve by index and the answer never depends on build order.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<[f64; 2]>,
    /// Implicit tree: the median of `order[lo..hi]` is at `(lo + hi) / 2`.
    order: Vec<usize>,
}

impl KdTree {
    pub fn new(points: Vec<[f64; 2]>) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        build(&points, &mut order, 0);
        Self { points, order }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Up to `k` nearest points as `(index, squared distance)`.
    pub fn nearest(&self, q: [f64; 2], k: usize) -> Vec<(usize, f64)> {
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        if k > 0 {
            self.search(q, k, 0, self.order.len(), 0, &mut best);
        }
        best.into_iter().map(|(d, i)| (i, d)).collect()
    }

    fn search(&self, q: [f64; 2], k: usize, lo: usize, hi: usize, depth: usize, best: &mut Vec<(f64, usize)>) {
        if lo >= hi {
            return;
        }
        let mid = (lo + hi) / 2;
        let idx = self.order[mid];
        let p = self.points[idx];
        let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
        let key = (d2, idx);
        if best.len() < k || key < *best.last().expect("non-empty when full") {
            let at = best.partition_point(|e| *e < key);
            best.insert(at, key);
            best.truncate(k);
        }
        let axis = depth % 2;
        let diff = q[axis] - p[axis];
        let (near, far) = if diff < 0.0 { ((lo, mid), (mid + 1, hi)) } else { ((mid + 1, hi), (lo, mid)) };
        self.search(q, k, near.0, near.1, depth + 1, best);
        if best.len() < k || diff * diff <= best.last().expect("full").0 {
            self.search(q, k, far.0, far.1, depth + 1, best);
        }
    }
}

fn build(points: &[[f64; 2]], order: &mut [usize], depth: usize) {
    if order.len() <= 1 {
        return;
    }
    let axis = depth % 2;
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| points[a][axis].total_cmp(&points[b][axis]).then(a.cmp(&b)));
    let (left, right) = order.split_at_mut(mid);
    build(points, left, depth + 1);
    build(points, &mut right[1..], depth + 1);
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(points: &[[f64; 2]], q: [f64; 2], k: usize) -> Vec<(usize, f64)> {
        let mut all: Vec<(f64, usize)> = points
            .iter()
            .enumerate()
            .map(|(i, p)| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2), i))
            .collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        all.into_iter().take(k).map(|(d, i)| (i, d)).collect()
    }

    #[test]
    fn empty_and_small() {
        let t = KdTree::new(vec![]);
        assert!(t.nearest([0.0, 0.0], 3).is_empty());
        let t = KdTree::new(vec![[1.0, 1.0], [0.0, 0.0]]);
        assert_eq!(t.nearest([0.1, 0.1], 5).iter().map(|x| x.0).collect::<Vec<_>>(), vec![1, 0]);
    }

    #[test]
    fn equidistant_resolves_by_index() {
        let t = KdTree::new(vec![[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]);
        assert_eq!(t.nearest([0.0, 0.0], 2).iter().map(|x| x.0).collect::<Vec<_>>(), vec![0, 1]);
    }

    proptest! {
        #[test]
        fn matches_brute_force(pts in prop::collection::vec((0i32..20, 0i32..20), 1..80), q in (0i32..20, 0i32..20), k in 1usize..8) {
            // integer lattice makes ties common
            let points: Vec<[f64; 2]> = pts.iter().map(|&(x, y)| [x as f64 * 0.5, y as f64 * 0.5]).collect();
            let qq = [q.0 as f64 * 0.5 + 0.25, q.1 as f64 * 0.5];
            let t = KdTree::new(points.clone());
            prop_assert_eq!(t.nearest(qq, k), brute(&points, qq, k));
        }
    }
}
