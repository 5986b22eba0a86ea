//! Planar geometry used across the pipeline: points, polylines with arc-length
//! projection, and simple polygons.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Vec2 {
    fn from(a: [f64; 2]) -> Self {
        Vec2 { x: a[0], y: a[1] }
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn scale(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }

    /// Unit vector, or zero for a zero-length input.
    pub fn unit(self) -> Vec2 {
        let n = self.norm();
        if n > 0.0 {
            self.scale(1.0 / n)
        } else {
            Vec2::default()
        }
    }

    /// Left-hand normal.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn lerp(self, o: Vec2, t: f64) -> Vec2 {
        self + (o - self).scale(t)
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

/// Wrap an angle to (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut r = a % two_pi;
    if r <= -std::f64::consts::PI {
        r += two_pi;
    } else if r > std::f64::consts::PI {
        r -= two_pi;
    }
    r
}

/// Absolute heading difference in [0, pi].
pub fn heading_diff(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

/// Closest-point projection onto a polyline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Arc length of the foot point from the polyline start.
    pub s: f64,
    /// Signed lateral offset, positive to the left of travel direction.
    pub d: f64,
    /// Unit tangent of the segment holding the foot point.
    pub tangent: Vec2,
    pub foot: Vec2,
    /// Euclidean distance to the foot point.
    pub dist: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pts: Vec<Vec2>,
    cum: Vec<f64>,
}

impl Polyline {
    /// Builds a polyline; callers guarantee at least two points.
    pub fn new(pts: Vec<Vec2>) -> Self {
        let mut cum = Vec::with_capacity(pts.len());
        let mut acc = 0.0;
        for (i, p) in pts.iter().enumerate() {
            if i > 0 {
                acc += p.dist(pts[i - 1]);
            }
            cum.push(acc);
        }
        Polyline { pts, cum }
    }

    pub fn points(&self) -> &[Vec2] {
        &self.pts
    }

    pub fn length(&self) -> f64 {
        self.cum.last().copied().unwrap_or(0.0)
    }

    /// Point and unit tangent at arc length `s`, clamped to the ends.
    pub fn at(&self, s: f64) -> (Vec2, Vec2) {
        let n = self.pts.len();
        if n == 1 {
            return (self.pts[0], Vec2::new(1.0, 0.0));
        }
        let s = s.clamp(0.0, self.length());
        let i = match self.cum.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        };
        let seg = self.pts[i + 1] - self.pts[i];
        let len = self.cum[i + 1] - self.cum[i];
        let t = if len > 0.0 { (s - self.cum[i]) / len } else { 0.0 };
        (self.pts[i].lerp(self.pts[i + 1], t), seg.unit())
    }

    pub fn project(&self, p: Vec2) -> Projection {
        let mut best = Projection {
            s: 0.0,
            d: 0.0,
            tangent: Vec2::new(1.0, 0.0),
            foot: self.pts[0],
            dist: f64::INFINITY,
        };
        for i in 0..self.pts.len().saturating_sub(1) {
            let a = self.pts[i];
            let seg = self.pts[i + 1] - a;
            let len2 = seg.dot(seg);
            let t = if len2 > 0.0 {
                ((p - a).dot(seg) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let foot = a + seg.scale(t);
            let dist = p.dist(foot);
            if dist < best.dist {
                let tangent = seg.unit();
                best = Projection {
                    s: self.cum[i] + t * len2.sqrt(),
                    d: tangent.cross(p - foot),
                    tangent,
                    foot,
                    dist,
                };
            }
        }
        best
    }

    pub fn distance_to(&self, p: Vec2) -> f64 {
        self.project(p).dist
    }
}

/// Closed polygon given by its vertices (last vertex is not repeated).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polygon(pub Vec<Vec2>);

impl Polygon {
    pub fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.0.len();
        (0..n).map(move |i| (self.0[i], self.0[(i + 1) % n]))
    }

    /// Even-odd point containment; boundary points count as inside.
    pub fn contains(&self, p: Vec2) -> bool {
        if self.boundary_distance(p) < 1e-9 {
            return true;
        }
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn boundary_distance(&self, p: Vec2) -> f64 {
        self.edges()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Distance to the polygon, zero inside.
    pub fn distance(&self, p: Vec2) -> f64 {
        if self.contains(p) {
            0.0
        } else {
            self.boundary_distance(p)
        }
    }

    /// Nearest boundary point.
    pub fn nearest_boundary_point(&self, p: Vec2) -> Vec2 {
        let mut best = (f64::INFINITY, p);
        for (a, b) in self.edges() {
            let q = closest_on_segment(p, a, b);
            let d = p.dist(q);
            if d < best.0 {
                best = (d, q);
            }
        }
        best.1
    }

    pub fn centroid(&self) -> Vec2 {
        let n = self.0.len().max(1) as f64;
        let sum = self.0.iter().fold(Vec2::default(), |acc, &p| acc + p);
        sum.scale(1.0 / n)
    }

    /// True when no two non-adjacent edges intersect and there are at least
    /// three vertices.
    pub fn is_simple(&self) -> bool {
        let n = self.0.len();
        if n < 3 {
            return false;
        }
        let edges: Vec<_> = self.edges().collect();
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                if segments_intersect(edges[i].0, edges[i].1, edges[j].0, edges[j].1) {
                    return false;
                }
            }
        }
        true
    }
}

pub fn closest_on_segment(p: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let seg = b - a;
    let len2 = seg.dot(seg);
    if len2 == 0.0 {
        return a;
    }
    let t = ((p - a).dot(seg) / len2).clamp(0.0, 1.0);
    a + seg.scale(t)
}

pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    p.dist(closest_on_segment(p, a, b))
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

/// Closed-segment intersection test, including touching and collinear overlap.
pub fn segments_intersect(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: Vec2, b: Vec2, c: Vec2, o: f64| {
        o == 0.0
            && c.x >= a.x.min(b.x)
            && c.x <= a.x.max(b.x)
            && c.y >= a.y.min(b.y)
            && c.y <= a.y.max(b.y)
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}
