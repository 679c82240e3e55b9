use super::RoutingError;
use crate::spatial::{normalize_angle, Side, WorldPoint};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RouteSegment {
    Forward {
        /// Meters, exact.
        distance: f64,
    },
    Turn {
        direction: Side,
        /// Absolute heading change in degrees, exact.
        angle: f64,
    },
}

impl RouteSegment {
    pub fn distance(&self) -> f64 {
        match self {
            RouteSegment::Forward { distance } => *distance,
            RouteSegment::Turn { .. } => 0.0,
        }
    }

    pub fn is_turn(&self) -> bool {
        matches!(self, RouteSegment::Turn { .. })
    }
}

/// Rounds a heading change to the nearest 5 degrees for display.
pub fn display_angle(angle: f64) -> f64 {
    (angle / 5.0).round() * 5.0
}

/// Rounds a distance to 0.1 m and drops a trailing ".0".
pub fn display_distance(d: f64) -> String {
    let r = (d * 10.0).round() / 10.0;
    if (r - r.round()).abs() < 1e-9 {
        format!("{}", r.round() as i64)
    } else {
        format!("{r:.1}")
    }
}

/// Splits a polyline into forward runs and turns. Heading changes at or
/// below `turn_threshold` degrees are absorbed into the surrounding run.
pub fn chunk_path(points: &[WorldPoint], turn_threshold: f64) -> Result<Vec<RouteSegment>, RoutingError> {
    let mut pts: Vec<WorldPoint> = Vec::with_capacity(points.len());
    for &p in points {
        if pts.last().is_none_or(|q: &WorldPoint| q.distance(p) > 0.0) {
            pts.push(p);
        }
    }
    if pts.len() < 2 {
        return Err(RoutingError::DegeneratePath);
    }
    let mut out = Vec::new();
    let mut run = 0.0;
    for i in 0..pts.len() - 1 {
        run += pts[i].distance(pts[i + 1]);
        if i + 2 == pts.len() {
            break;
        }
        let d0 = pts[i + 1].sub(pts[i]);
        let d1 = pts[i + 2].sub(pts[i + 1]);
        let change = normalize_angle(d1.y.atan2(d1.x) - d0.y.atan2(d0.x)).to_degrees();
        if change.abs() > turn_threshold {
            out.push(RouteSegment::Forward { distance: run });
            run = 0.0;
            let direction = if change > 0.0 { Side::Left } else { Side::Right };
            out.push(RouteSegment::Turn { direction, angle: change.abs() });
        }
    }
    out.push(RouteSegment::Forward { distance: run });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(x: f64, y: f64) -> WorldPoint {
        WorldPoint::new(x, y)
    }

    #[test]
    fn collinear_merges() {
        let s = chunk_path(&[w(0.0, 0.0), w(2.0, 0.0), w(5.0, 0.0)], 30.0).unwrap();
        assert_eq!(s, vec![RouteSegment::Forward { distance: 5.0 }]);
    }

    #[test]
    fn right_angle() {
        let s = chunk_path(&[w(0.0, 0.0), w(3.0, 0.0), w(3.0, 2.0)], 30.0).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s[0], RouteSegment::Forward { distance: 3.0 });
        match s[1] {
            RouteSegment::Turn { direction, angle } => {
                assert_eq!(direction, Side::Left);
                assert!((angle - 90.0).abs() < 1e-9);
            }
            _ => panic!(),
        }
        assert_eq!(s[2], RouteSegment::Forward { distance: 2.0 });
        let r = chunk_path(&[w(0.0, 0.0), w(3.0, 0.0), w(3.0, -2.0)], 30.0).unwrap();
        assert!(matches!(r[1], RouteSegment::Turn { direction: Side::Right, .. }));
    }

    #[test]
    fn shallow_bend_is_one_forward() {
        let b = w(2.0, 0.0);
        let c = b.add(w(20f64.to_radians().cos(), 20f64.to_radians().sin()).scale(3.0));
        let s = chunk_path(&[w(0.0, 0.0), b, c], 30.0).unwrap();
        assert_eq!(s.len(), 1);
        assert!((s[0].distance() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate() {
        assert!(matches!(chunk_path(&[w(1.0, 1.0)], 30.0), Err(RoutingError::DegeneratePath)));
        assert!(matches!(chunk_path(&[w(1.0, 1.0), w(1.0, 1.0)], 30.0), Err(RoutingError::DegeneratePath)));
    }

    #[test]
    fn display_rounding() {
        assert_eq!(display_distance(3.0), "3");
        assert_eq!(display_distance(2.96), "3");
        assert_eq!(display_distance(12.34), "12.3");
        assert_eq!(display_angle(88.0), 90.0);
        assert_eq!(display_angle(42.4), 40.0);
    }

    proptest! {
        #[test]
        fn lengths_sum_and_segments_alternate(pts in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 2..12)) {
            let pts: Vec<WorldPoint> = pts.into_iter().map(|(x, y)| w(x, y)).collect();
            let total: f64 = pts.windows(2).map(|p| p[0].distance(p[1])).sum();
            prop_assume!(total > 0.0);
            let s = chunk_path(&pts, 30.0).unwrap();
            let sum: f64 = s.iter().map(RouteSegment::distance).sum();
            prop_assert!((sum - total).abs() < 1e-6);
            prop_assert!(!s[0].is_turn() && !s.last().unwrap().is_turn());
            for pair in s.windows(2) {
                prop_assert!(pair[0].is_turn() != pair[1].is_turn());
            }
            for seg in &s {
                match *seg {
                    RouteSegment::Forward { distance } => prop_assert!(distance > 0.0),
                    RouteSegment::Turn { angle, .. } => prop_assert!(angle > 30.0 && angle <= 180.0),
                }
            }
        }
    }
}
