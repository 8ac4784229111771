//! Exact (2D) and adaptive (3D) intersection measures used for ball and box
//! masses of measures.

use serde::{Deserialize, Serialize};

/// A region of space: the intersection of an optional closed box and an
/// optional open ball. `Region::default()` is the whole space.
#[derive(Debug, Clone, Default)]
pub struct Region {
    pub bbox: Option<(Vec<f64>, Vec<f64>)>,
    pub ball: Option<(Vec<f64>, f64)>,
}

impl Region {
    pub fn ball(center: &[f64], r: f64) -> Self {
        Self {
            bbox: None,
            ball: Some((center.to_vec(), r)),
        }
    }

    pub fn cuboid(lo: &[f64], hi: &[f64]) -> Self {
        Self {
            bbox: Some((lo.to_vec(), hi.to_vec())),
            ball: None,
        }
    }

    pub fn with_ball(mut self, center: &[f64], r: f64) -> Self {
        self.ball = Some((center.to_vec(), r));
        self
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        if let Some((lo, hi)) = &self.bbox {
            if p.iter().zip(lo.iter().zip(hi)).any(|(x, (l, h))| x < l || x > h) {
                return false;
            }
        }
        if let Some((c, r)) = &self.ball {
            if dist_sq(p, c) >= r * r {
                return false;
            }
        }
        true
    }

    /// Intersect an axis-aligned rectangle with the box part, returning the
    /// clipped rectangle or `None` when empty.
    fn clip_rect(&self, lo: &[f64], hi: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let mut l = lo.to_vec();
        let mut h = hi.to_vec();
        if let Some((bl, bh)) = &self.bbox {
            for k in 0..l.len() {
                l[k] = l[k].max(bl[k]);
                h[k] = h[k].min(bh[k]);
                if h[k] <= l[k] {
                    return None;
                }
            }
        }
        Some((l, h))
    }

    /// Lebesgue measure of `[lo, hi] ∩ region`.
    pub fn rect_measure(&self, lo: &[f64], hi: &[f64]) -> f64 {
        let Some((l, h)) = self.clip_rect(lo, hi) else {
            return 0.0;
        };
        match &self.ball {
            None => l.iter().zip(&h).map(|(a, b)| b - a).product(),
            Some((c, r)) => match l.len() {
                2 => rect_disk_area(l[0] - c[0], h[0] - c[0], l[1] - c[1], h[1] - c[1], *r),
                3 => box_ball_volume(&l, &h, c, *r, 0),
                _ => panic!("rect_measure supports dimensions 2 and 3"),
            },
        }
    }

    /// `H¹` measure of the segment `[p, q]` inside the region.
    pub fn segment_measure(&self, p: &[f64], q: &[f64]) -> f64 {
        let len = dist_sq(p, q).sqrt();
        if len == 0.0 {
            return 0.0;
        }
        let (mut t0, mut t1) = (0.0_f64, 1.0_f64);
        if let Some((lo, hi)) = &self.bbox {
            match clip_param_box(p, q, lo, hi) {
                Some((a, b)) => {
                    t0 = a;
                    t1 = b;
                }
                None => return 0.0,
            }
        }
        if let Some((c, r)) = &self.ball {
            match param_in_ball(p, q, c, *r) {
                Some((a, b)) => {
                    t0 = t0.max(a);
                    t1 = t1.min(b);
                }
                None => return 0.0,
            }
        }
        if t1 > t0 {
            (t1 - t0) * len
        } else {
            0.0
        }
    }

    /// `H²` measure of a planar polygon in 3D inside the region. Box clipping is
    /// exact; ball clipping uses adaptive triangle refinement.
    pub fn polygon_measure(&self, verts: &[[f64; 3]]) -> f64 {
        let mut poly: Vec<[f64; 3]> = verts.to_vec();
        if let Some((lo, hi)) = &self.bbox {
            poly = clip_polygon_box(&poly, lo, hi);
            if poly.len() < 3 {
                return 0.0;
            }
        }
        match &self.ball {
            None => polygon_area(&poly),
            Some((c, r)) => {
                let c = [c[0], c[1], c[2]];
                let mut total = 0.0;
                for k in 1..poly.len() - 1 {
                    total += triangle_ball_area(poly[0], poly[k], poly[k + 1], c, *r, 0);
                }
                total
            }
        }
    }
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Liang-Barsky clipping of `p + t(q − p)`, `t ∈ [0,1]`, against a box.
pub fn clip_param_box(p: &[f64], q: &[f64], lo: &[f64], hi: &[f64]) -> Option<(f64, f64)> {
    let (mut t0, mut t1) = (0.0_f64, 1.0_f64);
    for k in 0..p.len() {
        let d = q[k] - p[k];
        if d == 0.0 {
            if p[k] < lo[k] || p[k] > hi[k] {
                return None;
            }
            continue;
        }
        let (mut a, mut b) = ((lo[k] - p[k]) / d, (hi[k] - p[k]) / d);
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        t0 = t0.max(a);
        t1 = t1.min(b);
        if t0 > t1 {
            return None;
        }
    }
    Some((t0, t1))
}

fn param_in_ball(p: &[f64], q: &[f64], c: &[f64], r: f64) -> Option<(f64, f64)> {
    // |p − c + t d|² < r²
    let d: Vec<f64> = q.iter().zip(p).map(|(a, b)| a - b).collect();
    let w: Vec<f64> = p.iter().zip(c).map(|(a, b)| a - b).collect();
    let a: f64 = d.iter().map(|v| v * v).sum();
    let b: f64 = d.iter().zip(&w).map(|(x, y)| x * y).sum();
    let cc: f64 = w.iter().map(|v| v * v).sum::<f64>() - r * r;
    // closest approach parameter and squared distance there
    let tc = -b / a;
    let dmin2 = cc + r * r - b * b / a;
    let h2 = r * r - dmin2;
    if h2 <= 0.0 {
        return None;
    }
    let half = (h2 / a).sqrt();
    let (lo, hi) = (tc - half, tc + half);
    let (lo, hi) = (lo.max(0.0), hi.min(1.0));
    (hi > lo).then_some((lo, hi))
}

/// `∫₀ˣ √(r² − t²) dt` for `|x| ≤ r`. The factored radicand and `atan2` keep
/// full precision near `|x| = r`.
fn half_disk_primitive(x: f64, r: f64) -> f64 {
    let x = x.clamp(-r, r);
    let s = ((r - x) * (r + x)).max(0.0).sqrt();
    0.5 * (x * s + r * r * x.atan2(s))
}

/// Exact area of `[x0,x1]×[y0,y1] ∩ B(0, r)`.
pub fn rect_disk_area(x0: f64, x1: f64, y0: f64, y1: f64, r: f64) -> f64 {
    let a = x0.max(-r);
    let b = x1.min(r);
    if b <= a || y1 <= y0 {
        return 0.0;
    }
    let mut cuts = vec![a, b];
    for y in [y0, y1] {
        if y.abs() < r {
            let s = (r * r - y * y).sqrt();
            for c in [-s, s] {
                if c > a && c < b {
                    cuts.push(c);
                }
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    let mut area = 0.0;
    for w in cuts.windows(2) {
        let (u, v) = (w[0], w[1]);
        if v <= u {
            continue;
        }
        let m = 0.5 * (u + v);
        let s = (r * r - m * m).max(0.0).sqrt();
        let top_is_circle = s < y1;
        let bottom_is_circle = -s > y0;
        if s.min(y1) <= (-s).max(y0) {
            continue;
        }
        let circ = half_disk_primitive(v, r) - half_disk_primitive(u, r);
        let width = v - u;
        let top = if top_is_circle { circ } else { y1 * width };
        let bottom = if bottom_is_circle { -circ } else { y0 * width };
        area += top - bottom;
    }
    area
}

fn box_ball_volume(lo: &[f64], hi: &[f64], c: &[f64], r: f64, depth: u32) -> f64 {
    let vol: f64 = lo.iter().zip(hi).map(|(a, b)| b - a).product();
    let mut far2 = 0.0;
    let mut near2 = 0.0;
    for k in 0..3 {
        let dl = (c[k] - lo[k]).abs();
        let dh = (c[k] - hi[k]).abs();
        far2 += dl.max(dh).powi(2);
        let nk = if c[k] < lo[k] {
            lo[k] - c[k]
        } else if c[k] > hi[k] {
            c[k] - hi[k]
        } else {
            0.0
        };
        near2 += nk * nk;
    }
    if far2 <= r * r {
        return vol;
    }
    if near2 >= r * r {
        return 0.0;
    }
    if depth >= 7 {
        // locally planar sphere: fraction of the box extent inside along the radius
        let mid: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let rho = dist_sq(&mid, c).sqrt();
        if rho == 0.0 {
            return vol;
        }
        let extent: f64 = (0..3).map(|k| ((mid[k] - c[k]) / rho).abs() * (hi[k] - lo[k])).sum();
        return vol * (0.5 + (r - rho) / extent).clamp(0.0, 1.0);
    }
    let mid: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let mut total = 0.0;
    for corner in 0..8 {
        let mut l = [0.0; 3];
        let mut h = [0.0; 3];
        for k in 0..3 {
            if corner >> k & 1 == 0 {
                l[k] = lo[k];
                h[k] = mid[k];
            } else {
                l[k] = mid[k];
                h[k] = hi[k];
            }
        }
        total += box_ball_volume(&l, &h, c, r, depth + 1);
    }
    total
}

fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm3(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

/// Newell normal (not normalized) of a planar polygon; its length is twice the area.
pub fn newell_normal(verts: &[[f64; 3]]) -> [f64; 3] {
    let mut n = [0.0; 3];
    for i in 0..verts.len() {
        let a = verts[i];
        let b = verts[(i + 1) % verts.len()];
        n[0] += (a[1] - b[1]) * (a[2] + b[2]);
        n[1] += (a[2] - b[2]) * (a[0] + b[0]);
        n[2] += (a[0] - b[0]) * (a[1] + b[1]);
    }
    n
}

pub fn polygon_area(verts: &[[f64; 3]]) -> f64 {
    if verts.len() < 3 {
        return 0.0;
    }
    0.5 * norm3(newell_normal(verts))
}

fn triangle_ball_area(a: [f64; 3], b: [f64; 3], c: [f64; 3], ctr: [f64; 3], r: f64, depth: u32) -> f64 {
    let area = 0.5 * norm3(cross3(sub3(b, a), sub3(c, a)));
    if area == 0.0 {
        return 0.0;
    }
    let inside = |p: [f64; 3]| dist_sq(&p, &ctr) < r * r;
    if inside(a) && inside(b) && inside(c) {
        return area;
    }
    let g = [
        (a[0] + b[0] + c[0]) / 3.0,
        (a[1] + b[1] + c[1]) / 3.0,
        (a[2] + b[2] + c[2]) / 3.0,
    ];
    let rad = [a, b, c]
        .iter()
        .map(|p| dist_sq(p, &g).sqrt())
        .fold(0.0_f64, f64::max);
    if dist_sq(&g, &ctr).sqrt() - rad >= r {
        return 0.0;
    }
    if depth >= 8 {
        return if inside(g) { area } else { 0.0 };
    }
    let mid = |p: [f64; 3], q: [f64; 3]| [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0, (p[2] + q[2]) / 2.0];
    let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
    triangle_ball_area(a, ab, ca, ctr, r, depth + 1)
        + triangle_ball_area(ab, b, bc, ctr, r, depth + 1)
        + triangle_ball_area(ca, bc, c, ctr, r, depth + 1)
        + triangle_ball_area(ab, bc, ca, ctr, r, depth + 1)
}

/// Sutherland-Hodgman clipping of a 3D polygon against an axis-aligned box.
pub fn clip_polygon_box(verts: &[[f64; 3]], lo: &[f64], hi: &[f64]) -> Vec<[f64; 3]> {
    let mut poly = verts.to_vec();
    for k in 0..3 {
        for (bound, keep_above) in [(lo[k], true), (hi[k], false)] {
            if poly.is_empty() {
                return poly;
            }
            let inside = |p: &[f64; 3]| {
                if keep_above {
                    p[k] >= bound
                } else {
                    p[k] <= bound
                }
            };
            let mut out = Vec::with_capacity(poly.len() + 2);
            for i in 0..poly.len() {
                let cur = poly[i];
                let prev = poly[(i + poly.len() - 1) % poly.len()];
                let (ci, pi) = (inside(&cur), inside(&prev));
                if ci != pi {
                    let t = (bound - prev[k]) / (cur[k] - prev[k]);
                    out.push([
                        prev[0] + t * (cur[0] - prev[0]),
                        prev[1] + t * (cur[1] - prev[1]),
                        prev[2] + t * (cur[2] - prev[2]),
                    ]);
                }
                if ci {
                    out.push(cur);
                }
            }
            poly = out;
        }
    }
    poly
}

/// Whether two 2D segments share a piece of positive length. Transversal
/// crossings and touching endpoints do not count.
pub fn segments_overlap(p1: [f64; 2], q1: [f64; 2], p2: [f64; 2], q2: [f64; 2], eps: f64) -> bool {
    let orient = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    let l1 = ((q1[0] - p1[0]).powi(2) + (q1[1] - p1[1]).powi(2)).sqrt();
    let tol = eps * l1.max(1.0);
    if orient(p1, q1, p2).abs() > tol || orient(p1, q1, q2).abs() > tol {
        return false;
    }
    let dir = [(q1[0] - p1[0]) / l1, (q1[1] - p1[1]) / l1];
    let proj = |p: [f64; 2]| (p[0] - p1[0]) * dir[0] + (p[1] - p1[1]) * dir[1];
    let (a, b) = (proj(p2).min(proj(q2)), proj(p2).max(proj(q2)));
    b.min(l1) - a.max(0.0) > eps
}

/// Serializable axis-aligned box `[[lo, hi], ...]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds(pub Vec<[f64; 2]>);

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rect_disk_area_cases() {
        // disk fully inside
        let a = rect_disk_area(-2.0, 2.0, -2.0, 2.0, 1.0);
        assert!((a - PI).abs() < 1e-14);
        // quarter
        let a = rect_disk_area(0.0, 2.0, 0.0, 2.0, 1.0);
        assert!((a - PI / 4.0).abs() < 1e-14);
        // rectangle fully inside
        let a = rect_disk_area(-0.1, 0.2, -0.3, 0.1, 1.0);
        assert!((a - 0.3 * 0.4).abs() < 1e-15);
        // half plane strip
        let a = rect_disk_area(-2.0, 2.0, 0.0, 3.0, 2.0);
        assert!((a - 2.0 * PI).abs() < 1e-13);
        // disjoint
        assert_eq!(rect_disk_area(1.5, 2.0, 0.0, 1.0, 1.0), 0.0);
    }

    #[test]
    fn rect_disk_area_matches_sampling() {
        // brute-force midpoint count on a fine lattice
        let (x0, x1, y0, y1, r) = (-0.3, 0.9, 0.2, 1.4, 1.0);
        let n = 2000;
        let mut cnt = 0usize;
        for i in 0..n {
            for j in 0..n {
                let x = x0 + (x1 - x0) * (i as f64 + 0.5) / n as f64;
                let y = y0 + (y1 - y0) * (j as f64 + 0.5) / n as f64;
                if x * x + y * y < r * r {
                    cnt += 1;
                }
            }
        }
        let est = cnt as f64 / (n * n) as f64 * (x1 - x0) * (y1 - y0);
        assert!((rect_disk_area(x0, x1, y0, y1, r) - est).abs() < 2e-3);
    }

    #[test]
    fn segment_measures() {
        let reg = Region::ball(&[0.0, 0.0], 0.5);
        assert!((reg.segment_measure(&[-1.0, 0.0], &[1.0, 0.0]) - 1.0).abs() < 1e-15);
        let reg = Region::cuboid(&[0.0, -1.0], &[1.0, 1.0]);
        assert!((reg.segment_measure(&[-1.0, 0.0], &[1.0, 0.0]) - 1.0).abs() < 1e-15);
        assert_eq!(reg.segment_measure(&[-1.0, 2.0], &[1.0, 2.0]), 0.0);
    }

    #[test]
    fn polygon_clip_and_ball() {
        let sq = [[-1.0, -1.0, 0.0], [1.0, -1.0, 0.0], [1.0, 1.0, 0.0], [-1.0, 1.0, 0.0]];
        assert!((polygon_area(&sq) - 4.0).abs() < 1e-15);
        let reg = Region::cuboid(&[0.0, 0.0, -1.0], &[2.0, 2.0, 1.0]);
        assert!((reg.polygon_measure(&sq) - 1.0).abs() < 1e-14);
        let reg = Region::ball(&[0.0, 0.0, 0.0], 0.5);
        assert!((reg.polygon_measure(&sq) - PI * 0.25).abs() < 5e-3);
    }

    #[test]
    fn ball_box_volume_3d() {
        let reg = Region::ball(&[0.0, 0.0, 0.0], 0.5);
        let v = reg.rect_measure(&[-1.0, -1.0, -1.0], &[1.0, 1.0, 1.0]);
        assert!((v - 4.0 / 3.0 * PI * 0.125).abs() < 2e-3);
    }

    #[test]
    fn overlap_detection() {
        assert!(!segments_overlap([0.0, -1.0], [0.0, 1.0], [-1.0, 0.0], [1.0, 0.0], 1e-12));
        assert!(!segments_overlap([0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [1.0, 1.0], 1e-12));
        assert!(segments_overlap([0.0, 0.0], [2.0, 0.0], [1.0, 0.0], [3.0, 0.0], 1e-12));
        assert!(!segments_overlap([0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], 1e-12));
    }
}
