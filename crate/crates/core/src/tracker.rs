//! Tracking-by-detection with velocity back-projection.
//!
//! Each detection is moved back to the previous frame with its own predicted
//! velocity and matched to existing tracks by closest center distance.
//! Tracks that miss a frame coast forward with their last velocity and retire
//! after more than `max_misses` consecutive misses.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::assignment::{hungarian, CostMatrix};
use crate::camera::EgoPose;
use crate::error::{Error, Result};
use crate::geometry::{PolarBox, PolarVelocity};
use crate::simulator::{Detection, DetectionSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MatchStrategy {
    /// Pairs consumed in ascending distance order.
    #[default]
    Greedy,
    /// Minimum total distance among gated pairs.
    Hungarian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    /// Meters.
    pub distance_threshold: f64,
    pub max_misses: u32,
    pub strategy: MatchStrategy,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self { distance_threshold: 2.0, max_misses: 2, strategy: MatchStrategy::Greedy }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.distance_threshold.is_finite() && self.distance_threshold > 0.0) {
            return Err(Error::InvalidConfig("distance threshold must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: u64,
    pub polar: PolarBox,
    /// Ego-frame center of the most recent frame processed.
    pub center: [f64; 2],
    pub velocity: PolarVelocity,
    /// Cartesian velocity in the same frame as `center`.
    pub velocity_xy: [f64; 2],
    pub class: usize,
    pub age: u32,
    pub misses: u32,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatchResult {
    /// `(detection index, track index, distance)`.
    pub matches: Vec<(usize, usize, f64)>,
    pub unmatched_detections: Vec<usize>,
    pub unmatched_tracks: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerState {
    pub tracks: Vec<Track>,
    pub next_id: u64,
    pub config: TrackerConfig,
}

fn polar_velocity_xy(polar: &PolarBox, v: &PolarVelocity) -> [f64; 2] {
    let (s, c) = (polar.sin_azimuth, polar.cos_azimuth);
    [v.radial * c - v.tangential * s, v.radial * s + v.tangential * c]
}

/// Center of `polar` moved back by `dt` seconds along `velocity`.
pub fn back_project(polar: &PolarBox, velocity: &PolarVelocity, dt: f64) -> [f64; 2] {
    let [x, y] = polar.center_xy();
    let [vx, vy] = polar_velocity_xy(polar, velocity);
    [x - dt * vx, y - dt * vy]
}

fn apply_xy(pose: Option<&EgoPose>, p: [f64; 2]) -> [f64; 2] {
    match pose {
        Some(pose) => {
            let q = pose.transform.apply(&Vector3::new(p[0], p[1], 0.0));
            [q.x, q.y]
        }
        None => p,
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl TrackerState {
    pub fn new(config: TrackerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { tracks: Vec::new(), next_id: 0, config })
    }

    /// Associates detections with current tracks. `ego_motion` maps the
    /// detections' frame into the tracks' frame; `None` means the ego is static.
    pub fn match_tracks(&self, dets: &[Detection], dt: f64, ego_motion: Option<&EgoPose>) -> Result<MatchResult> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")));
        }
        let projected: Vec<[f64; 2]> =
            dets.iter().map(|d| apply_xy(ego_motion, back_project(&d.polar, &d.velocity, dt))).collect();
        let threshold = self.config.distance_threshold;

        let mut candidates = Vec::new();
        for (di, d) in dets.iter().enumerate() {
            for (ti, t) in self.tracks.iter().enumerate() {
                if t.class != d.class {
                    continue;
                }
                let dd = dist(projected[di], t.center);
                if dd <= threshold {
                    candidates.push((dd, di, ti));
                }
            }
        }

        let mut det_used = vec![false; dets.len()];
        let mut trk_used = vec![false; self.tracks.len()];
        let mut matches = Vec::new();
        match self.config.strategy {
            MatchStrategy::Greedy => {
                candidates.sort_by(|a, b| {
                    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(self.tracks[a.2].id.cmp(&self.tracks[b.2].id))
                });
                for (dd, di, ti) in candidates {
                    if !det_used[di] && !trk_used[ti] {
                        det_used[di] = true;
                        trk_used[ti] = true;
                        matches.push((di, ti, dd));
                    }
                }
            }
            MatchStrategy::Hungarian => {
                if !dets.is_empty() && !self.tracks.is_empty() {
                    let blocked = threshold * 1e6;
                    let mut data = vec![blocked; dets.len() * self.tracks.len()];
                    for &(dd, di, ti) in &candidates {
                        data[di * self.tracks.len() + ti] = dd;
                    }
                    let m = CostMatrix::new(dets.len(), self.tracks.len(), data)?;
                    for (di, ti) in hungarian(&m)?.pairs {
                        let dd = m.get(di, ti);
                        if dd <= threshold {
                            det_used[di] = true;
                            trk_used[ti] = true;
                            matches.push((di, ti, dd));
                        }
                    }
                }
            }
        }
        matches.sort_by_key(|m| m.0);
        Ok(MatchResult {
            matches,
            unmatched_detections: (0..dets.len()).filter(|&i| !det_used[i]).collect(),
            unmatched_tracks: (0..self.tracks.len()).filter(|&i| !trk_used[i]).collect(),
        })
    }

    /// Advances the tracker by one frame and returns the track id given to
    /// each detection, in detection order.
    pub fn step(&mut self, dets: &[Detection], dt: f64, ego_motion: Option<&EgoPose>) -> Result<Vec<u64>> {
        let result = self.match_tracks(dets, dt, ego_motion)?;
        let to_current = ego_motion.map(|p| EgoPose { transform: p.transform.inverse(), dt: p.dt });

        let mut ids = vec![0u64; dets.len()];
        for &(di, ti, _) in &result.matches {
            let d = &dets[di];
            let t = &mut self.tracks[ti];
            t.polar = d.polar;
            t.center = d.polar.center_xy();
            t.velocity = d.velocity;
            t.velocity_xy = polar_velocity_xy(&d.polar, &d.velocity);
            t.score = d.score;
            t.misses = 0;
            t.age += 1;
            ids[di] = t.id;
        }
        for &ti in &result.unmatched_tracks {
            let t = &mut self.tracks[ti];
            let coasted = [t.center[0] + dt * t.velocity_xy[0], t.center[1] + dt * t.velocity_xy[1]];
            t.center = apply_xy(to_current.as_ref(), coasted);
            if let Some(p) = &to_current {
                let v = p.transform.apply_vector(&Vector3::new(t.velocity_xy[0], t.velocity_xy[1], 0.0));
                t.velocity_xy = [v.x, v.y];
            }
            t.misses += 1;
            t.age += 1;
        }
        let max_misses = self.config.max_misses;
        self.tracks.retain(|t| t.misses <= max_misses);

        for &di in &result.unmatched_detections {
            let d = &dets[di];
            let id = self.next_id;
            self.next_id += 1;
            self.tracks.push(Track {
                id,
                polar: d.polar,
                center: d.polar.center_xy(),
                velocity: d.velocity,
                velocity_xy: polar_velocity_xy(&d.polar, &d.velocity),
                class: d.class,
                age: 1,
                misses: 0,
                score: d.score,
            });
            ids[di] = id;
        }
        Ok(ids)
    }
}

/// One tracked detection in one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackedObject {
    pub track_id: u64,
    pub center: [f64; 2],
    pub class: usize,
}

/// One ground-truth object in one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GtRef {
    pub id: u64,
    pub center: [f64; 2],
    pub class: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrackingRun {
    pub frames: Vec<Vec<TrackedObject>>,
    pub tracks_created: u64,
}

/// Runs a fresh tracker over every frame of `dets`, using the stored ego
/// poses for motion compensation.
pub fn run_tracker(config: TrackerConfig, dets: &DetectionSet) -> Result<TrackingRun> {
    let mut state = TrackerState::new(config)?;
    let mut frames = Vec::with_capacity(dets.frames.len());
    for (n, frame) in dets.frames.iter().enumerate() {
        let motion = dets.motion_to_previous(n);
        // the first frame has nothing to match against; any positive dt works
        let dt = motion.map_or(1.0, |m| m.dt);
        let ids = state.step(&frame.detections, dt, motion.as_ref())?;
        frames.push(
            frame
                .detections
                .iter()
                .zip(ids)
                .map(|(d, track_id)| TrackedObject { track_id, center: d.polar.center_xy(), class: d.class })
                .collect(),
        );
    }
    Ok(TrackingRun { frames, tracks_created: state.next_id })
}

/// Counts identity switches: frames where a ground-truth object is matched
/// to a different track than in its previous matched frame. Per frame, GT
/// objects and tracked detections are paired greedily by ascending center
/// distance (same class, within `match_threshold`).
pub fn count_id_switches(outputs: &[Vec<TrackedObject>], gt: &[Vec<GtRef>], match_threshold: f64) -> usize {
    let mut last: Vec<(u64, u64)> = Vec::new();
    let mut switches = 0;
    for (objs, gts) in outputs.iter().zip(gt) {
        let mut cands = Vec::new();
        for (gi, g) in gts.iter().enumerate() {
            for (oi, o) in objs.iter().enumerate() {
                let d = dist(g.center, o.center);
                if g.class == o.class && d <= match_threshold {
                    cands.push((d, gi, oi));
                }
            }
        }
        cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut g_used = vec![false; gts.len()];
        let mut o_used = vec![false; objs.len()];
        for (_, gi, oi) in cands {
            if g_used[gi] || o_used[oi] {
                continue;
            }
            g_used[gi] = true;
            o_used[oi] = true;
            let (gid, tid) = (gts[gi].id, objs[oi].track_id);
            match last.iter_mut().find(|(g, _)| *g == gid) {
                Some(entry) => {
                    if entry.1 != tid {
                        switches += 1;
                        entry.1 = tid;
                    }
                }
                None => last.push((gid, tid)),
            }
        }
    }
    switches
}
