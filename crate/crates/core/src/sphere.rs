//! Meshes and vertex quadrature on the circle S¹ and the 2-sphere S².
//!
//! Orientation is fixed here and consumed downstream: S¹ vertices run
//! counterclockwise, S² triangles are wound so their normals point outward.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{KakeyaError, Result};
use crate::geom::{cross3, det3, dot3, norm3, sub3};

/// Cell complex of a [`SphereMesh`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Cells {
    /// Closed cycle of segments `i -> i+1`, last one wrapping to vertex 0.
    Cycle(usize),
    /// Outward-oriented triangles.
    Triangles(Vec<[usize; 3]>),
}

#[derive(Clone, Debug, Serialize)]
pub struct SphereMesh {
    dim: usize,
    coords: Vec<f64>,
    cells: Cells,
    weights: Vec<f64>,
    spacing: f64,
    min_chord: f64,
}

impl SphereMesh {
    /// Sphere dimension: 1 for the circle, 2 for the 2-sphere.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim + 1
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        let a = self.ambient_dim();
        &self.coords[i * a..(i + 1) * a]
    }

    pub fn vertices(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.ambient_dim())
    }

    pub fn cells(&self) -> &Cells {
        &self.cells
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        match &self.cells {
            Cells::Triangles(t) => t,
            Cells::Cycle(_) => &[],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Longest edge, measured along the sphere.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Shortest edge, measured as a chord.
    pub fn min_chord(&self) -> f64 {
        self.min_chord
    }

    /// Surface measure of the sphere: 2π or 4π.
    pub fn total_measure(&self) -> f64 {
        if self.dim == 1 {
            2.0 * PI
        } else {
            4.0 * PI
        }
    }

    /// Mesh neighbours of every vertex (cycle neighbours on S¹, edge neighbours on S²).
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        match &self.cells {
            Cells::Cycle(n) => (0..*n)
                .map(|i| vec![(i + n - 1) % n, (i + 1) % n])
                .collect(),
            Cells::Triangles(tris) => {
                let mut nb = vec![Vec::new(); self.len()];
                for t in tris {
                    for k in 0..3 {
                        let (a, b) = (t[k], t[(k + 1) % 3]);
                        if !nb[a].contains(&b) {
                            nb[a].push(b);
                        }
                        if !nb[b].contains(&a) {
                            nb[b].push(a);
                        }
                    }
                }
                for list in &mut nb {
                    list.sort_unstable();
                }
                nb
            }
        }
    }

    /// Checks the closed-complex invariant: every directed triangle edge has
    /// exactly one oppositely directed partner.
    pub fn is_closed(&self) -> bool {
        match &self.cells {
            Cells::Cycle(n) => *n >= 3,
            Cells::Triangles(tris) => triangles_closed(tris),
        }
    }
}

pub(crate) fn triangles_closed(tris: &[[usize; 3]]) -> bool {
    let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
    for t in tris {
        for k in 0..3 {
            *directed.entry((t[k], t[(k + 1) % 3])).or_default() += 1;
        }
    }
    directed
        .iter()
        .all(|(&(a, b), &count)| count == 1 && directed.get(&(b, a)) == Some(&1))
}

/// Builds a quadrature mesh on S^dim.
///
/// For the circle `resolution` is the exact vertex count (equally spaced,
/// counterclockwise, starting at angle 0). For the 2-sphere the smallest
/// icosahedral subdivision with at least `resolution` vertices is used
/// (12, 42, 162, 642, 2562, ...).
pub fn sample_sphere(dim: usize, resolution: usize) -> Result<SphereMesh> {
    match dim {
        1 => {
            if resolution < 3 {
                return Err(KakeyaError::param("resolution", "circle mesh needs at least 3 vertices"));
            }
            let n = resolution;
            let mut coords = Vec::with_capacity(2 * n);
            for i in 0..n {
                let a = 2.0 * PI * i as f64 / n as f64;
                coords.push(a.cos());
                coords.push(a.sin());
            }
            let w = 2.0 * PI / n as f64;
            Ok(SphereMesh {
                dim: 1,
                coords,
                cells: Cells::Cycle(n),
                weights: vec![w; n],
                spacing: w,
                min_chord: 2.0 * (PI / n as f64).sin(),
            })
        }
        2 => {
            if resolution < 8 {
                return Err(KakeyaError::param("resolution", "sphere mesh needs resolution >= 8"));
            }
            let mut level = 0;
            while 10 * 4usize.pow(level) + 2 < resolution {
                level += 1;
            }
            Ok(icosphere(level))
        }
        _ => Err(KakeyaError::Dimension {
            dim,
            context: "sphere meshes exist for dim 1 and 2 only",
        }),
    }
}

fn icosphere(level: u32) -> SphereMesh {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<[f64; 3]> = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ]
    .iter()
    .map(|v| normalize3(*v))
    .collect();
    let mut tris: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(tris.len() * 4);
        let mut mid = |a: usize, b: usize, verts: &mut Vec<[f64; 3]>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoint.entry(key).or_insert_with(|| {
                let (p, q) = (verts[a], verts[b]);
                verts.push(normalize3([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                verts.len() - 1
            })
        };
        for &[a, b, c] in &tris {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        tris = next;
    }
    // Enforce outward winding.
    for t in &mut tris {
        let (a, b, c) = (verts[t[0]], verts[t[1]], verts[t[2]]);
        if det3(a, b, c) < 0.0 {
            t.swap(1, 2);
        }
    }
    let mut weights = vec![0.0; verts.len()];
    let mut spacing: f64 = 0.0;
    let mut min_chord = f64::INFINITY;
    for t in &tris {
        let area = spherical_triangle_area(verts[t[0]], verts[t[1]], verts[t[2]]);
        for &i in t {
            weights[i] += area / 3.0;
        }
        for k in 0..3 {
            let (p, q) = (verts[t[k]], verts[t[(k + 1) % 3]]);
            spacing = spacing.max(dot3(p, q).clamp(-1.0, 1.0).acos());
            min_chord = min_chord.min(norm3(sub3(p, q)));
        }
    }
    SphereMesh {
        dim: 2,
        coords: verts.iter().flat_map(|v| v.iter().copied()).collect(),
        cells: Cells::Triangles(tris),
        weights,
        spacing,
        min_chord,
    }
}

fn normalize3(v: [f64; 3]) -> [f64; 3] {
    let n = norm3(v);
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Area of the spherical triangle with unit-vector corners (Van Oosterom–Strackee).
pub fn spherical_triangle_area(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let num = dot3(a, cross3(b, c)).abs();
    let den = 1.0 + dot3(a, b) + dot3(b, c) + dot3(c, a);
    2.0 * num.atan2(den)
}

fn check_unit(u: &[f64]) -> Result<()> {
    let n = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (n - 1.0).abs() > 1e-9 {
        return Err(KakeyaError::NonUnit { norm: n });
    }
    Ok(())
}

/// Great-circle distance between unit vectors, in `[0, π]`.
pub fn geodesic_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(KakeyaError::LengthMismatch {
            expected: u.len(),
            actual: v.len(),
        });
    }
    check_unit(u)?;
    check_unit(v)?;
    let d: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok(d.clamp(-1.0, 1.0).acos())
}

/// Vertex-weight quadrature `Σ field(v)·weight(v)`.
pub fn integrate_over_sphere(field: &[f64], mesh: &SphereMesh) -> Result<f64> {
    if field.len() != mesh.len() {
        return Err(KakeyaError::LengthMismatch {
            expected: mesh.len(),
            actual: field.len(),
        });
    }
    Ok(field.iter().zip(mesh.weights()).map(|(f, w)| f * w).sum())
}

/// Spherical Fibonacci lattice: `count` nearly uniform unit vectors in R³.
pub fn fibonacci_sphere(count: usize) -> Vec<[f64; 3]> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let a = golden * i as f64;
            [r * a.cos(), r * a.sin(), z]
        })
        .collect()
}
