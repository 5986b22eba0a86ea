use rayon::prelude::*;

use super::{IngestConfig, IngestError, Track, TrackPoint, TrackSet, VehicleId};
use crate::geometry::wrap_angle;

/// Resamples every track onto the uniform `cfg.dt` grid and smooths it.
///
/// Positions and velocities are interpolated linearly, headings on the
/// circle. Dropouts up to `cfg.max_gap_fill` seconds are bridged; longer ones
/// split the track into pieces suffixed `_1`, `_2`, ... Smoothing is a
/// centered moving average whose radius shrinks near the ends, so the first
/// and last sample of each track pass through unchanged.
pub fn resample_and_smooth(ts: &TrackSet, cfg: &IngestConfig) -> Result<TrackSet, IngestError> {
    cfg.check()?;
    let pieces: Vec<Vec<Track>> = ts
        .tracks
        .par_iter()
        .map(|(_, track)| resample_track(track, ts.dt, cfg))
        .collect::<Result<_, _>>()?;
    let mut out = TrackSet::new(cfg.dt);
    for track in pieces.into_iter().flatten() {
        out.insert(track);
    }
    Ok(out)
}

fn resample_track(track: &Track, src_dt: f64, cfg: &IngestConfig) -> Result<Vec<Track>, IngestError> {
    if track.points.len() < 2 {
        return Err(IngestError::TrackTooShort(track.vehicle_id.clone()));
    }
    let max_missing = (cfg.max_gap_fill / src_dt + 1e-9).floor() as i64;
    let mut runs: Vec<&[TrackPoint]> = Vec::new();
    let mut start = 0;
    for i in 1..track.points.len() {
        let missing = track.points[i].frame - track.points[i - 1].frame - 1;
        if missing > max_missing {
            runs.push(&track.points[start..i]);
            start = i;
        }
    }
    runs.push(&track.points[start..]);

    let mut out = Vec::new();
    for (k, run) in runs.iter().enumerate() {
        if run.len() < 2 {
            log::warn!(
                "dropping single-sample piece of track {} after gap split",
                track.vehicle_id
            );
            continue;
        }
        let vehicle_id = if k == 0 {
            track.vehicle_id.clone()
        } else {
            VehicleId::new(format!("{}_{k}", track.vehicle_id))
        };
        let mut points = interpolate(run, src_dt, cfg.dt);
        smooth(&mut points, cfg.smoothing_window);
        out.push(Track {
            vehicle_id,
            length: track.length,
            width: track.width,
            points,
        });
    }
    Ok(out)
}

/// Source frame coordinate of target frame `k`, snapped to integers when
/// within rounding noise so that equal periods reproduce samples exactly.
fn source_position(k: i64, src_dt: f64, dt: f64) -> f64 {
    let pos = k as f64 * dt / src_dt;
    let r = pos.round();
    if (pos - r).abs() < 1e-9 {
        r
    } else {
        pos
    }
}

fn lerp(a: f64, b: f64, u: f64) -> f64 {
    if u == 0.0 {
        a
    } else {
        a + (b - a) * u
    }
}

fn interpolate(run: &[TrackPoint], src_dt: f64, dt: f64) -> Vec<TrackPoint> {
    let first = run[0].frame as f64 * src_dt;
    let last = run[run.len() - 1].frame as f64 * src_dt;
    let k0 = (first / dt - 1e-9).ceil() as i64;
    let k1 = (last / dt + 1e-9).floor() as i64;
    let mut out = Vec::with_capacity((k1 - k0 + 1).max(0) as usize);
    let mut seg = 0;
    for k in k0..=k1 {
        let pos = source_position(k, src_dt, dt);
        while seg + 1 < run.len() - 1 && (run[seg + 1].frame as f64) <= pos {
            seg += 1;
        }
        let a = &run[seg];
        let b = &run[seg + 1];
        let (a, b, u) = if pos >= b.frame as f64 {
            (b, b, 0.0)
        } else {
            let u = ((pos - a.frame as f64) / (b.frame - a.frame) as f64).clamp(0.0, 1.0);
            (a, b, u)
        };
        let heading = if u == 0.0 {
            a.heading
        } else {
            wrap_angle(a.heading + wrap_angle(b.heading - a.heading) * u)
        };
        let lane_id = if u <= 0.5 { a.lane_id.clone() } else { b.lane_id.clone() };
        out.push(TrackPoint {
            frame: k,
            t: k as f64 * dt,
            x: lerp(a.x, b.x, u),
            y: lerp(a.y, b.y, u),
            vx: lerp(a.vx, b.vx, u),
            vy: lerp(a.vy, b.vy, u),
            heading,
            lane_id,
        });
    }
    out
}

fn smooth(points: &mut [TrackPoint], window: usize) {
    let half = window / 2;
    if half == 0 || points.len() < 3 {
        return;
    }
    let n = points.len();
    let raw: Vec<[f64; 4]> = points.iter().map(|p| [p.x, p.y, p.vx, p.vy]).collect();
    for (i, p) in points.iter_mut().enumerate() {
        let r = half.min(i).min(n - 1 - i);
        if r == 0 {
            continue;
        }
        let mut acc = [0.0; 4];
        for row in &raw[i - r..=i + r] {
            for (a, v) in acc.iter_mut().zip(row) {
                *a += v;
            }
        }
        let m = (2 * r + 1) as f64;
        p.x = acc[0] / m;
        p.y = acc[1] / m;
        p.vx = acc[2] / m;
        p.vy = acc[3] / m;
    }
}
