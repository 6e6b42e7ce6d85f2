//! Icosphere reference meshes on the unit sphere.

use std::collections::HashMap;

use crate::vec3::{add, cross, dot, norm, normalize, scale, sub, Vec3};
use crate::{Error, Result};

/// Largest supported subdivision level (20·4⁶ = 81920 panels).
pub const MAX_LEVEL: u32 = 6;

/// A subdivided icosahedron with vertices projected to the unit sphere.
///
/// Panels are consistently outward-oriented: the flat normal of every panel
/// has positive dot product with its centroid direction.
#[derive(Debug, Clone)]
pub struct ReferenceMesh {
    pub level: u32,
    /// Unit-sphere node positions.
    pub nodes: Vec<Vec3>,
    /// Node index triples, counter-clockwise seen from outside.
    pub panels: Vec<[usize; 3]>,
    /// Panel centroids projected onto the unit sphere (collocation points).
    pub centroids: Vec<Vec3>,
    /// Flat triangle areas (the reference quadrature weights).
    pub flat_areas: Vec<f64>,
    /// Unit normals of the flat triangles.
    pub flat_normals: Vec<Vec3>,
}

impl ReferenceMesh {
    /// Builds the level-`level` icosphere; `level` must be at most
    /// [`MAX_LEVEL`].
    pub fn build(level: u32) -> Result<Self> {
        if level > MAX_LEVEL {
            return Err(Error::Level(level));
        }
        let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
        let raw: [Vec3; 12] = [
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
        ];
        let mut nodes: Vec<Vec3> = raw.iter().map(|&v| normalize(v)).collect();
        let mut panels: Vec<[usize; 3]> = vec![
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
            let mut next = Vec::with_capacity(panels.len() * 4);
            for &[a, b, c] in &panels {
                let mut mid = |i: usize, j: usize| -> usize {
                    let key = (i.min(j), i.max(j));
                    *midpoint.entry(key).or_insert_with(|| {
                        nodes.push(normalize(add(nodes[i], nodes[j])));
                        nodes.len() - 1
                    })
                };
                let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
                next.push([a, ab, ca]);
                next.push([b, bc, ab]);
                next.push([c, ca, bc]);
                next.push([ab, bc, ca]);
            }
            panels = next;
        }

        let mut centroids = Vec::with_capacity(panels.len());
        let mut flat_areas = Vec::with_capacity(panels.len());
        let mut flat_normals = Vec::with_capacity(panels.len());
        for &[a, b, c] in &panels {
            let flat = scale(
                1.0 / 3.0,
                add(add(nodes[a], nodes[b]), nodes[c]),
            );
            centroids.push(normalize(flat));
            let n = cross(sub(nodes[b], nodes[a]), sub(nodes[c], nodes[a]));
            let len = norm(n);
            flat_areas.push(0.5 * len);
            let unit = scale(1.0 / len, n);
            debug_assert!(
                dot(unit, flat) > 0.0,
                "icosphere panels must be outward-oriented"
            );
            flat_normals.push(unit);
        }

        Ok(ReferenceMesh {
            level,
            nodes,
            panels,
            centroids,
            flat_areas,
            flat_normals,
        })
    }

    pub fn panel_count(&self) -> usize {
        self.panels.len()
    }

    /// Corner positions of panel `p` on the unit sphere.
    pub fn panel_corners(&self, p: usize) -> [Vec3; 3] {
        let [a, b, c] = self.panels[p];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    /// True if the two panels share at least one node.
    pub fn panels_adjacent(&self, p: usize, q: usize) -> bool {
        self.panels[p]
            .iter()
            .any(|i| self.panels[q].contains(i))
    }

    /// Exact spherical (geodesic) areas of the panels, which partition the
    /// sphere: they sum to 4π up to rounding.
    pub fn spherical_areas(&self) -> Vec<f64> {
        self.panels
            .iter()
            .map(|&[a, b, c]| spherical_triangle_area(self.nodes[a], self.nodes[b], self.nodes[c]))
            .collect()
    }
}

/// Area of the spherical triangle spanned by three unit vectors, via the
/// solid-angle arctangent formula (numerically stable for small triangles).
pub fn spherical_triangle_area(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    let num = dot(a, cross(b, c));
    let den = 1.0 + dot(a, b) + dot(b, c) + dot(c, a);
    2.0 * num.atan2(den).abs()
}
