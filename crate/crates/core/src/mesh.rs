//! Conforming triangulations of a rectangle with edge and vertex adjacency.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::scalar::{lit, norm, orient, sub, Point, Real};

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect<T> {
    pub x0: T,
    pub x1: T,
    pub y0: T,
    pub y1: T,
}

impl<T: Real> Rect<T> {
    pub fn new(x0: T, x1: T, y0: T, y1: T) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    pub fn area(&self) -> T {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    /// True if `p` lies on the boundary within `tol`.
    pub fn on_boundary(&self, p: Point<T>, tol: T) -> bool {
        (p[0] - self.x0).abs() <= tol
            || (p[0] - self.x1).abs() <= tol
            || (p[1] - self.y0).abs() <= tol
            || (p[1] - self.y1).abs() <= tol
    }
}

/// Mesh edge with its incident elements (one on the boundary, two inside).
#[derive(Clone, Debug)]
pub struct Edge {
    pub vertices: [usize; 2],
    pub elements: Vec<usize>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.elements.len() == 1
    }
}

/// Elements sharing at least one vertex with `element`, itself included.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ElementNeighborhood {
    pub element: usize,
    pub members: Vec<usize>,
}

impl ElementNeighborhood {
    pub fn contains(&self, k: usize) -> bool {
        self.members.binary_search(&k).is_ok()
    }
}

#[derive(Clone, Debug)]
pub struct Mesh<T> {
    pub vertices: Vec<Point<T>>,
    /// Counterclockwise vertex triples.
    pub elements: Vec<[usize; 3]>,
    pub edges: Vec<Edge>,
    /// Local edge `i` of an element is opposite its local vertex `i`.
    pub element_edges: Vec<[usize; 3]>,
    pub h: T,
    pub domain: Rect<T>,
    vertex_elements: Vec<Vec<usize>>,
}

impl<T: Real> Mesh<T> {
    /// `n x n` squares, each split along the diagonal from lower left to upper right.
    pub fn build_uniform(domain: Rect<T>, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!(
                "uniform mesh needs n >= 2, got {n}"
            )));
        }
        let nf: T = lit(n as f64);
        let dx = (domain.x1 - domain.x0) / nf;
        let dy = (domain.y1 - domain.y0) / nf;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                let x = if i == n {
                    domain.x1
                } else {
                    domain.x0 + dx * lit(i as f64)
                };
                let y = if j == n {
                    domain.y1
                } else {
                    domain.y0 + dy * lit(j as f64)
                };
                vertices.push([x, y]);
            }
        }
        let id = |i: usize, j: usize| j * (n + 1) + i;
        let mut elements = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (p00, p10, p11, p01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                elements.push([p00, p10, p11]);
                elements.push([p00, p11, p01]);
            }
        }
        Self::from_triangles(vertices, elements, domain)
    }

    /// Builds adjacency for a conforming triangulation; checks orientation and conformity.
    pub fn from_triangles(
        vertices: Vec<Point<T>>,
        elements: Vec<[usize; 3]>,
        domain: Rect<T>,
    ) -> Result<Self> {
        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut element_edges = Vec::with_capacity(elements.len());
        let mut vertex_elements = vec![Vec::new(); vertices.len()];
        let mut h = T::zero();
        for (k, tri) in elements.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidInput(format!("element {k} references a missing vertex")));
            }
            let [a, b, c] = tri.map(|v| vertices[v]);
            if orient(a, b, c) <= T::zero() {
                return Err(Error::InvalidInput(format!("element {k} is not counterclockwise")));
            }
            let mut local = [0; 3];
            for i in 0..3 {
                let (u, v) = (tri[(i + 1) % 3], tri[(i + 2) % 3]);
                let key = (u.min(v), u.max(v));
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push(Edge {
                        vertices: [key.0, key.1],
                        elements: Vec::new(),
                    });
                    edges.len() - 1
                });
                edges[e].elements.push(k);
                if edges[e].elements.len() > 2 {
                    return Err(Error::InvalidInput(format!("edge {key:?} has more than two elements")));
                }
                local[i] = e;
                h = h.max(norm(sub(vertices[u], vertices[v])));
            }
            element_edges.push(local);
            for &v in tri {
                vertex_elements[v].push(k);
            }
        }
        Ok(Mesh {
            vertices,
            elements,
            edges,
            element_edges,
            h,
            domain,
            vertex_elements,
        })
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn corners(&self, k: usize) -> [Point<T>; 3] {
        self.elements[k].map(|v| self.vertices[v])
    }

    pub fn area(&self, k: usize) -> T {
        let [a, b, c] = self.corners(k);
        orient(a, b, c) * lit(0.5)
    }

    pub fn diameter(&self, k: usize) -> T {
        let [a, b, c] = self.corners(k);
        norm(sub(a, b)).max(norm(sub(b, c))).max(norm(sub(c, a)))
    }

    pub fn centroid(&self, k: usize) -> Point<T> {
        let [a, b, c] = self.corners(k);
        let third: T = lit(1.0 / 3.0);
        [(a[0] + b[0] + c[0]) * third, (a[1] + b[1] + c[1]) * third]
    }

    pub fn elements_at_vertex(&self, v: usize) -> &[usize] {
        &self.vertex_elements[v]
    }

    /// Elements sharing an edge with `k`.
    pub fn face_neighbors(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        self.element_edges[k]
            .iter()
            .flat_map(move |&e| self.edges[e].elements.iter().copied().filter(move |&j| j != k))
    }

    pub fn delta_neighborhood(&self, k: usize) -> Result<ElementNeighborhood> {
        if k >= self.elements.len() {
            return Err(Error::InvalidInput(format!("element id {k} out of range")));
        }
        let mut members: Vec<usize> = self.elements[k]
            .iter()
            .flat_map(|&v| self.vertex_elements[v].iter().copied())
            .collect();
        members.sort_unstable();
        members.dedup();
        Ok(ElementNeighborhood { element: k, members })
    }

    /// Vertices lying on the boundary of the domain.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut flag = vec![false; self.vertices.len()];
        for e in self.edges.iter().filter(|e| e.is_boundary()) {
            flag[e.vertices[0]] = true;
            flag[e.vertices[1]] = true;
        }
        flag
    }
}
