//! Incremental 3D convex hull with outward-oriented triangular faces.
//!
//! Used to build shell connectivity: nodes projected to the unit sphere
//! are in convex position, so their hull is a closed genus-0
//! triangulation. The implementation is the textbook incremental
//! algorithm with BFS visibility and horizon stitching; neighbor links
//! are maintained so each insertion touches only the visible region
//! plus one seed scan.

use crate::error::{Error, Result};
use crate::vec3::Vec3;

#[derive(Clone)]
struct Face {
    v: [usize; 3],
    /// neighbor[i] is the face across the edge (v[i], v[(i+1)%3]).
    neighbor: [usize; 3],
    alive: bool,
}

fn orient(a: Vec3, b: Vec3, c: Vec3, p: Vec3) -> f64 {
    (b - a).cross(c - a).dot(p - a)
}

/// Convex hull of `points`, returned as CCW-outward triangles of input
/// indices. Points must span 3D; coincident or collinear inputs within
/// the seed search fail with a triangulation error.
pub fn convex_hull(points: &[Vec3]) -> Result<Vec<[usize; 3]>> {
    let n = points.len();
    if n < 4 {
        return Err(Error::Triangulation(format!("need at least 4 points, got {n}")));
    }
    let scale = points.iter().fold(0.0_f64, |a, p| a.max(p.max_abs())).max(1e-300);
    let eps = 1e-12 * scale * scale * scale;

    // Seed tetrahedron: two extreme points, then max-area, then max-volume.
    let (mut i0, mut i1) = (0, 1);
    let mut best = -1.0;
    for d in 0..3 {
        let key = |p: Vec3| [p.x, p.y, p.z][d];
        let lo = (0..n).min_by(|&a, &b| key(points[a]).total_cmp(&key(points[b]))).unwrap();
        let hi = (0..n).max_by(|&a, &b| key(points[a]).total_cmp(&key(points[b]))).unwrap();
        let dist = (points[hi] - points[lo]).norm_sq();
        if dist > best {
            best = dist;
            (i0, i1) = (lo, hi);
        }
    }
    if best <= eps {
        return Err(Error::Triangulation("all points coincide".into()));
    }
    let i2 = (0..n)
        .max_by(|&a, &b| {
            let ca = (points[a] - points[i0]).cross(points[i1] - points[i0]).norm_sq();
            let cb = (points[b] - points[i0]).cross(points[i1] - points[i0]).norm_sq();
            ca.total_cmp(&cb)
        })
        .unwrap();
    let i3 = (0..n)
        .max_by(|&a, &b| {
            let va = orient(points[i0], points[i1], points[i2], points[a]).abs();
            let vb = orient(points[i0], points[i1], points[i2], points[b]).abs();
            va.total_cmp(&vb)
        })
        .unwrap();
    if orient(points[i0], points[i1], points[i2], points[i3]).abs() <= eps {
        return Err(Error::Triangulation("input points are coplanar".into()));
    }

    // Orient the seed so all faces point away from the fourth vertex.
    let (a, b, c, d) = if orient(points[i0], points[i1], points[i2], points[i3]) < 0.0 {
        (i0, i1, i2, i3)
    } else {
        (i1, i0, i2, i3)
    };
    let mut faces = vec![
        Face { v: [a, b, c], neighbor: [0; 3], alive: true },
        Face { v: [a, d, b], neighbor: [0; 3], alive: true },
        Face { v: [b, d, c], neighbor: [0; 3], alive: true },
        Face { v: [c, d, a], neighbor: [0; 3], alive: true },
    ];
    // Stitch seed neighbors by brute force over directed edges.
    stitch_all(&mut faces)?;

    let mut order: Vec<usize> = (0..n).filter(|&i| i != a && i != b && i != c && i != d).collect();
    // Deterministic shuffle to avoid adversarial insertion orders from
    // structured inputs (spiral seeds are highly structured).
    let mut state = 0x9e3779b97f4a7c15_u64;
    for i in (1..order.len()).rev() {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let j = (state >> 33) as usize % (i + 1);
        order.swap(i, j);
    }

    for &p_idx in &order {
        let p = points[p_idx];
        // Seed scan for any visible face.
        let seed = faces
            .iter()
            .position(|f| f.alive && orient(points[f.v[0]], points[f.v[1]], points[f.v[2]], p) > eps);
        let Some(seed) = seed else {
            continue; // inside current hull
        };
        // BFS over visible faces.
        let mut visible = vec![seed];
        let mut mark = vec![false; faces.len()];
        mark[seed] = true;
        let mut queue = vec![seed];
        while let Some(f) = queue.pop() {
            for &nb in &faces[f].neighbor {
                if !mark[nb] && faces[nb].alive {
                    let fv = faces[nb].v;
                    if orient(points[fv[0]], points[fv[1]], points[fv[2]], p) > eps {
                        mark[nb] = true;
                        visible.push(nb);
                        queue.push(nb);
                    }
                }
            }
        }
        // Horizon: directed edges of visible faces whose neighbor is hidden.
        let mut horizon: Vec<(usize, usize, usize)> = Vec::new(); // (u, v, hidden face)
        for &f in &visible {
            for e in 0..3 {
                let nb = faces[f].neighbor[e];
                if !mark[nb] {
                    horizon.push((faces[f].v[e], faces[f].v[(e + 1) % 3], nb));
                }
            }
        }
        if horizon.is_empty() {
            return Err(Error::Triangulation(format!(
                "point {p_idx} sees every face; input degenerate"
            )));
        }
        for &f in &visible {
            faces[f].alive = false;
        }
        // Fan of new faces (u, v, p); stitch across horizon and between
        // consecutive fan members.
        let base = faces.len();
        let mut start_of = std::collections::HashMap::new();
        for (k, &(u, _, _)) in horizon.iter().enumerate() {
            if start_of.insert(u, base + k).is_some() {
                return Err(Error::Triangulation("pinched horizon loop".into()));
            }
        }
        for (k, &(u, v, hidden)) in horizon.iter().enumerate() {
            let id = base + k;
            let next = *start_of
                .get(&v)
                .ok_or_else(|| Error::Triangulation("horizon loop is not closed".into()))?;
            let prev_face = horizon
                .iter()
                .position(|&(_, pv, _)| pv == u)
                .map(|k2| base + k2)
                .ok_or_else(|| Error::Triangulation("horizon loop is not closed".into()))?;
            faces.push(Face { v: [u, v, p_idx], neighbor: [hidden, next, prev_face], alive: true });
            // Repoint the hidden face's link from the dead face to us.
            for e in 0..3 {
                let hf = &mut faces[hidden];
                if hf.v[e] == v && hf.v[(e + 1) % 3] == u {
                    hf.neighbor[e] = id;
                }
            }
        }
    }

    let out: Vec<[usize; 3]> = faces.iter().filter(|f| f.alive).map(|f| f.v).collect();
    // Closed triangulated 2-sphere: V − E + F = 2 with E = 3F/2, so F = 2V − 4.
    let verts: std::collections::HashSet<usize> = out.iter().flatten().copied().collect();
    if out.len() + 4 != 2 * verts.len() {
        return Err(Error::Triangulation(format!(
            "hull is not a closed surface: {} faces over {} vertices",
            out.len(),
            verts.len()
        )));
    }
    Ok(out)
}

/// Brute-force neighbor stitching for a small face set.
fn stitch_all(faces: &mut [Face]) -> Result<()> {
    let m = faces.len();
    for i in 0..m {
        for e in 0..3 {
            let (u, v) = (faces[i].v[e], faces[i].v[(e + 1) % 3]);
            let mut found = None;
            for (j, g) in faces.iter().enumerate() {
                if j == i || !g.alive {
                    continue;
                }
                for e2 in 0..3 {
                    if g.v[e2] == v && g.v[(e2 + 1) % 3] == u {
                        found = Some(j);
                    }
                }
            }
            faces[i].neighbor[e] =
                found.ok_or_else(|| Error::Triangulation("open edge in seed hull".into()))?;
        }
    }
    Ok(())
}
