use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radar::AperturePath;
use crate::Point3;

/// A timestamped sensor position from an external tracker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedPose {
    pub timestamp: f64,
    pub position: Point3,
}

impl TimedPose {
    pub fn new(timestamp: f64, position: Point3) -> Self {
        Self { timestamp, position }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterpolatedTrajectory {
    /// Positions at the in-range query times, timestamped with those times.
    pub path: AperturePath,
    /// Indices into the query list that fell outside the pose time range.
    pub dropped: Vec<usize>,
}

/// Per-axis linear interpolation of `poses` at `query_times`. Queries that
/// hit a pose timestamp exactly return that pose's position unchanged.
pub fn interpolate_trajectory(poses: &[TimedPose], query_times: &[f64]) -> Result<InterpolatedTrajectory> {
    if poses.len() < 2 {
        return Err(Error::domain(format!("need at least 2 poses, got {}", poses.len())));
    }
    if poses
        .iter()
        .any(|p| !p.timestamp.is_finite() || !p.position.iter().all(|c| c.is_finite()))
    {
        return Err(Error::domain("poses must be finite"));
    }
    if poses.windows(2).any(|w| w[1].timestamp <= w[0].timestamp) {
        return Err(Error::domain("pose timestamps must be strictly increasing"));
    }
    let first = poses[0].timestamp;
    let last = poses[poses.len() - 1].timestamp;

    let mut positions = Vec::with_capacity(query_times.len());
    let mut times = Vec::with_capacity(query_times.len());
    let mut dropped = Vec::new();
    for (qi, &t) in query_times.iter().enumerate() {
        if !(first..=last).contains(&t) {
            dropped.push(qi);
            continue;
        }
        // first pose strictly after t
        let hi = poses.partition_point(|p| p.timestamp <= t);
        let before = &poses[hi - 1];
        let pos = if before.timestamp == t || hi == poses.len() {
            before.position
        } else {
            let after = &poses[hi];
            let f = (t - before.timestamp) / (after.timestamp - before.timestamp);
            before.position + (after.position - before.position) * f
        };
        positions.push(pos);
        times.push(t);
    }
    if positions.is_empty() {
        return Err(Error::domain("no query time falls inside the pose time range"));
    }
    Ok(InterpolatedTrajectory {
        path: AperturePath::with_timestamps(positions, times)?,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poses() -> Vec<TimedPose> {
        vec![
            TimedPose::new(0.0, Point3::new(0.0, 0.0, 0.0)),
            TimedPose::new(1.0, Point3::new(1.0, 0.0, 0.0)),
            TimedPose::new(3.0, Point3::new(1.0, 2.0, 0.3)),
        ]
    }

    #[test]
    fn midpoint() {
        let r = interpolate_trajectory(&poses(), &[0.5]).unwrap();
        assert_eq!(r.path.positions()[0], Point3::new(0.5, 0.0, 0.0));
        assert!(r.dropped.is_empty());
    }

    #[test]
    fn knots_are_exact() {
        let p = poses();
        let r = interpolate_trajectory(&p, &[0.0, 1.0, 3.0]).unwrap();
        for (got, want) in r.path.positions().iter().zip(&p) {
            assert_eq!(*got, want.position);
        }
        assert_eq!(r.path.timestamps().unwrap(), &[0.0, 1.0, 3.0]);
    }

    #[test]
    fn out_of_range_dropped_and_reported() {
        let r = interpolate_trajectory(&poses(), &[-1.0, 2.0, 3.5]).unwrap();
        assert_eq!(r.dropped, vec![0, 2]);
        assert_eq!(r.path.len(), 1);
        assert!((r.path.positions()[0] - Point3::new(1.0, 1.0, 0.15)).norm() < 1e-15);
    }

    #[test]
    fn errors() {
        assert!(interpolate_trajectory(&poses()[..1], &[0.0]).is_err());
        let mut bad = poses();
        bad[1].timestamp = 0.0;
        assert!(interpolate_trajectory(&bad, &[0.0]).is_err());
        assert!(interpolate_trajectory(&poses(), &[9.0]).is_err());
    }
}
