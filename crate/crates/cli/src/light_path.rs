//! Light paths for animations: positions interpolate linearly, directions
//! spherically, piecewise over the given key points.

use anyhow::{bail, Result};
use dynpaint::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    Directional,
    Point,
}

pub fn parse_point(s: &str) -> Result<Vec3> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| anyhow::anyhow!("bad light path point {s:?}: {e}"))?;
    match parts.as_slice() {
        &[x, y, z] => Ok(Vec3::new(x, y, z)),
        _ => bail!("bad light path point {s:?}: expected x,y,z"),
    }
}

pub fn slerp(a: Vec3, b: Vec3, t: f64) -> Result<Vec3> {
    let (Some(ua), Some(ub)) = (a.try_normalize(1e-12), b.try_normalize(1e-12)) else {
        bail!("light directions must be nonzero");
    };
    let cos = ua.dot(ub).clamp(-1.0, 1.0);
    if cos < -1.0 + 1e-9 {
        bail!("opposite light directions have no unique interpolation");
    }
    let angle = cos.acos();
    if angle < 1e-9 {
        return Ok(ua);
    }
    let s = angle.sin();
    Ok(ua * (((1.0 - t) * angle).sin() / s) + ub * ((t * angle).sin() / s))
}

/// Light vector of frame `i` of `frames` along `keys`. The first and last
/// frames reproduce the first and last key exactly.
pub fn frame_vector(keys: &[Vec3], kind: PathKind, i: usize, frames: usize) -> Result<Vec3> {
    if keys.is_empty() {
        bail!("the light path needs at least one point");
    }
    if frames < 2 {
        bail!("frames must be at least 2");
    }
    if keys.len() == 1 || i == 0 {
        return Ok(keys[0]);
    }
    if i + 1 >= frames {
        return Ok(keys[keys.len() - 1]);
    }
    let u = i as f64 / (frames - 1) as f64 * (keys.len() - 1) as f64;
    let seg = (u.floor() as usize).min(keys.len() - 2);
    let t = u - seg as f64;
    let (a, b) = (keys[seg], keys[seg + 1]);
    match kind {
        PathKind::Point => Ok(a * (1.0 - t) + b * t),
        PathKind::Directional => slerp(a, b, t),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slerp_keeps_unit_length_and_constant_speed() {
        let a = Vec3::Z;
        let b = Vec3::new(1.0, 0.0, 0.0);
        let mid = slerp(a, b, 0.5).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((mid - Vec3::new(h, 0.0, h)).length() < 1e-12);
        let q = slerp(a, b, 0.25).unwrap();
        assert!((q.length() - 1.0).abs() < 1e-12);
        assert!((q.dot(a).acos() - std::f64::consts::PI / 8.0).abs() < 1e-12);
        assert!(slerp(a, -a, 0.5).is_err());
    }

    #[test]
    fn endpoints_are_exact() {
        let keys = [Vec3::new(0.0, 0.0, 2.0), Vec3::new(0.3, 0.1, 0.7)];
        assert_eq!(frame_vector(&keys, PathKind::Directional, 0, 5).unwrap(), keys[0]);
        assert_eq!(frame_vector(&keys, PathKind::Directional, 4, 5).unwrap(), keys[1]);
        assert!(frame_vector(&keys, PathKind::Directional, 0, 1).is_err());
    }

    #[test]
    fn positions_interpolate_linearly_over_segments() {
        let keys = [Vec3::new(0.0, 0.0, 1.0), Vec3::new(1.0, 0.0, 1.0), Vec3::new(1.0, 1.0, 1.0)];
        let p = frame_vector(&keys, PathKind::Point, 1, 5).unwrap();
        assert!((p - Vec3::new(0.5, 0.0, 1.0)).length() < 1e-12);
        let p = frame_vector(&keys, PathKind::Point, 3, 5).unwrap();
        assert!((p - Vec3::new(1.0, 0.5, 1.0)).length() < 1e-12);
    }

    #[test]
    fn parses_points() {
        assert_eq!(parse_point("0.5, -1,2").unwrap(), Vec3::new(0.5, -1.0, 2.0));
        assert!(parse_point("1,2").is_err());
        assert!(parse_point("a,b,c").is_err());
    }
}
