//! Element classification against the interface, anchor maps, and cut-cell quadrature.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::interface::Interface;
use crate::mesh::Mesh;
use crate::quadrature::QuadratureRule;
use crate::scalar::{cross, dot, lerp, lit, norm, orient, sub, Point, Real};

/// Default number of polyline pieces approximating a curved interface inside one element.
pub const DEFAULT_N_SUB: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElementKind {
    Interior0,
    Interior1,
    Cut,
}

#[derive(Clone, Debug)]
pub struct CutClassification {
    pub kind: Vec<ElementKind>,
    pub interior0: Vec<usize>,
    pub interior1: Vec<usize>,
    pub cut: Vec<usize>,
    pub covered0: Vec<usize>,
    pub covered1: Vec<usize>,
    /// `anchor[i][k]` is the interior element of side `i` used for the cut element `k`.
    anchor: [Vec<Option<usize>>; 2],
    /// Assumption failures tolerated under the relaxed policy.
    pub notes: Vec<AssumptionNote>,
}

impl CutClassification {
    pub fn interior(&self, side: usize) -> &[usize] {
        if side == 0 {
            &self.interior0
        } else {
            &self.interior1
        }
    }

    pub fn covered(&self, side: usize) -> &[usize] {
        if side == 0 {
            &self.covered0
        } else {
            &self.covered1
        }
    }

    pub fn is_cut(&self, k: usize) -> bool {
        self.kind[k] == ElementKind::Cut
    }

    pub fn is_covered(&self, side: usize, k: usize) -> bool {
        match self.kind[k] {
            ElementKind::Cut => true,
            ElementKind::Interior0 => side == 0,
            ElementKind::Interior1 => side == 1,
        }
    }

    /// Anchor `M^side(k)` of a cut element.
    pub fn anchor(&self, side: usize, k: usize) -> Option<usize> {
        self.anchor[side][k]
    }
}

/// What to do when a mesh assumption fails.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AssumptionPolicy {
    /// Refuse the mesh with [`Error::AssumptionViolation`].
    #[default]
    Strict,
    /// Record the violation and continue: multiply crossed edges are kept as cut,
    /// and missing anchors are searched one ring further out.
    Relaxed,
}

/// A mesh assumption that failed under [`AssumptionPolicy::Relaxed`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssumptionNote {
    pub assumption: u8,
    pub element: usize,
    pub detail: String,
}

/// Classifies every element and verifies the mesh assumptions.
pub fn classify<T: Real>(mesh: &Mesh<T>, iface: &Interface<T>) -> Result<CutClassification> {
    classify_with(mesh, iface, AssumptionPolicy::Strict)
}

pub fn classify_with<T: Real>(
    mesh: &Mesh<T>,
    iface: &Interface<T>,
    policy: AssumptionPolicy,
) -> Result<CutClassification> {
    let mut notes = Vec::new();
    let mut report = |note: AssumptionNote| -> Result<()> {
        match policy {
            AssumptionPolicy::Strict => Err(Error::AssumptionViolation {
                assumption: note.assumption,
                element: note.element,
                detail: note.detail,
            }),
            AssumptionPolicy::Relaxed => {
                notes.push(note);
                Ok(())
            }
        }
    };
    let member: Vec<bool> = mesh.vertices.iter().map(|&x| iface.in_omega0(x)).collect();
    let mut edge_has_root = vec![false; mesh.edges.len()];
    for (e, edge) in mesh.edges.iter().enumerate() {
        let [a, b] = edge.vertices.map(|v| mesh.vertices[v]);
        let roots = iface.edge_roots(a, b);
        if roots.len() >= 2 {
            report(AssumptionNote {
                assumption: 1,
                element: edge.elements[0],
                detail: format!("edge {e} is crossed {} times by the interface", roots.len()),
            })?;
        }
        edge_has_root[e] = !roots.is_empty();
    }
    let nel = mesh.num_elements();
    let mut kind = Vec::with_capacity(nel);
    for k in 0..nel {
        let vs = mesh.elements[k];
        let mixed = vs.iter().any(|&v| member[v] != member[vs[0]]);
        let mut cut = mixed || mesh.element_edges[k].iter().any(|&e| edge_has_root[e]);
        if !cut {
            if let Some(p) = iface.polygon() {
                let tri = mesh.corners(k);
                cut = (0..p.len()).any(|j| {
                    let [a, b] = p.side(j);
                    match clip_segment(a, b, &tri) {
                        Some((s, t)) => {
                            let mid = lerp(s, t, lit(0.5));
                            norm(sub(t, s)) > T::zero() && strictly_inside(mid, &tri)
                        }
                        None => false,
                    }
                });
            }
        }
        kind.push(if cut {
            ElementKind::Cut
        } else if member[vs[0]] {
            ElementKind::Interior0
        } else {
            ElementKind::Interior1
        });
    }
    let pick = |want: ElementKind| -> Vec<usize> { (0..nel).filter(|&k| kind[k] == want).collect() };
    let interior0 = pick(ElementKind::Interior0);
    let interior1 = pick(ElementKind::Interior1);
    let cut = pick(ElementKind::Cut);
    let covered = |side: usize| -> Vec<usize> {
        (0..nel)
            .filter(|&k| kind[k] == ElementKind::Cut || kind[k] == [ElementKind::Interior0, ElementKind::Interior1][side])
            .collect()
    };
    let mut anchor = [vec![None; nel], vec![None; nel]];
    for &k in &cut {
        for side in 0..2 {
            let want = [ElementKind::Interior0, ElementKind::Interior1][side];
            let face = mesh.face_neighbors(k).filter(|&j| kind[j] == want).min();
            let delta = mesh.delta_neighborhood(k)?;
            let mut chosen = face.or_else(|| delta.members.iter().copied().find(|&j| kind[j] == want));
            if chosen.is_none() {
                report(AssumptionNote {
                    assumption: 2,
                    element: k,
                    detail: format!("no interior element of side {side} touches this cut element"),
                })?;
                let mut ring: Vec<usize> = delta
                    .members
                    .iter()
                    .flat_map(|&j| mesh.elements[j].iter().flat_map(|&v| mesh.elements_at_vertex(v).iter().copied()))
                    .collect();
                ring.sort_unstable();
                ring.dedup();
                chosen = ring.into_iter().find(|&j| kind[j] == want);
            }
            match chosen {
                Some(j) => anchor[side][k] = Some(j),
                None => {
                    return Err(Error::AssumptionViolation {
                        assumption: 2,
                        element: k,
                        detail: format!("no interior element of side {side} within two rings of this cut element"),
                    })
                }
            }
        }
    }
    Ok(CutClassification {
        covered0: covered(0),
        covered1: covered(1),
        kind,
        interior0,
        interior1,
        cut,
        anchor,
        notes,
    })
}

/// A straight piece of the approximate interface inside one element.
#[derive(Clone, Copy, Debug)]
pub struct GammaPiece<T> {
    pub a: Point<T>,
    pub b: Point<T>,
    pub side: usize,
}

/// Exact or polyline-approximated geometry of one cut element.
#[derive(Clone, Debug)]
pub struct CutCell<T> {
    /// Triangles covering `K ∩ Omega_i`.
    pub triangles: [Vec<[Point<T>; 3]>; 2],
    pub gamma: Vec<GammaPiece<T>>,
}

impl<T: Real> CutCell<T> {
    pub fn area(&self, side: usize) -> T {
        self.triangles[side]
            .iter()
            .fold(T::zero(), |s, t| s + orient(t[0], t[1], t[2]).abs() * lit(0.5))
    }

    pub fn gamma_length(&self) -> T {
        self.gamma.iter().fold(T::zero(), |s, g| s + norm(sub(g.b, g.a)))
    }
}

/// Builds the cut-cell geometry of element `k`.
pub fn cut_cell<T: Real>(mesh: &Mesh<T>, iface: &Interface<T>, k: usize, n_sub: usize) -> CutCell<T> {
    let tri = mesh.corners(k);
    match iface {
        Interface::Polygon(p) => polygon_cut_cell(&tri, p, iface),
        _ => levelset_cut_cell(&tri, iface, n_sub.max(1)),
    }
}

fn levelset_cut_cell<T: Real>(tri: &[Point<T>; 3], iface: &Interface<T>, n_sub: usize) -> CutCell<T> {
    // boundary of K walked counterclockwise: vertices and membership changes
    let mut nodes: Vec<(Point<T>, bool)> = Vec::new();
    for i in 0..3 {
        let (a, b) = (tri[i], tri[(i + 1) % 3]);
        nodes.push((a, false));
        for t in iface.edge_roots(a, b) {
            nodes.push((lerp(a, b, t), true));
        }
    }
    let roots: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i].1).collect();
    let start_side = if iface.in_omega0(tri[0]) { 0 } else { 1 };
    if roots.len() < 2 || roots.len() % 2 == 1 {
        let mut triangles = [Vec::new(), Vec::new()];
        triangles[start_side].push(*tri);
        return CutCell {
            triangles,
            gamma: Vec::new(),
        };
    }
    // side entered at each root when walking forward
    let mut after = vec![0usize; nodes.len()];
    let mut s = start_side;
    for (i, n) in nodes.iter().enumerate() {
        if n.1 {
            s = 1 - s;
        }
        after[i] = s;
    }
    // pair consecutive roots into interface arcs; with several arcs take the shorter chords
    let nr = roots.len();
    let chords = |off: usize| -> T {
        (0..nr / 2).fold(T::zero(), |acc, j| {
            let (p, q) = (roots[(2 * j + off) % nr], roots[(2 * j + off + 1) % nr]);
            acc + norm(sub(nodes[q].0, nodes[p].0))
        })
    };
    let off = if nr > 2 && chords(1) < chords(0) { 1 } else { 0 };
    let mut partner = vec![usize::MAX; nodes.len()];
    let mut arcs = Vec::with_capacity(nr / 2);
    for j in 0..nr / 2 {
        let (p, q) = (roots[(2 * j + off) % nr], roots[(2 * j + off + 1) % nr]);
        partner[p] = q;
        partner[q] = p;
        arcs.push((p, q));
    }
    let arc_points = |p: Point<T>, q: Point<T>| -> Vec<Point<T>> {
        let chord = sub(q, p);
        let dir = [-chord[1], chord[0]];
        (1..n_sub)
            .map(|s| {
                let mk = lerp(p, q, lit(s as f64 / n_sub as f64));
                project_to_curve(mk, dir, tri, iface).unwrap_or(mk)
            })
            .collect()
    };
    let polylines: HashMap<(usize, usize), Vec<Point<T>>> = arcs
        .iter()
        .map(|&(p, q)| ((p, q), arc_points(nodes[p].0, nodes[q].0)))
        .collect();
    let arc_between = |from: usize, to: usize| -> Vec<Point<T>> {
        match polylines.get(&(from, to)) {
            Some(v) => v.clone(),
            None => polylines[&(to, from)].iter().rev().copied().collect(),
        }
    };
    let nn = nodes.len();
    let mut triangles = [Vec::new(), Vec::new()];
    for side in 0..2 {
        let mut used = vec![false; nn];
        for &r in &roots {
            if after[r] != side || used[r] {
                continue;
            }
            let mut poly = Vec::new();
            let mut cur = r;
            for _ in 0..nr {
                used[cur] = true;
                poly.push(nodes[cur].0);
                let mut i = (cur + 1) % nn;
                while !nodes[i].1 {
                    poly.push(nodes[i].0);
                    i = (i + 1) % nn;
                }
                poly.push(nodes[i].0);
                let next = partner[i];
                poly.extend(arc_between(i, next));
                cur = next;
                if cur == r || after[cur] != side {
                    break;
                }
            }
            triangles[side].extend(ear_clip(&poly));
        }
    }
    let mut gamma = Vec::new();
    for &(p, q) in &arcs {
        let mut line = vec![nodes[p].0];
        line.extend(polylines[&(p, q)].iter().copied());
        line.push(nodes[q].0);
        gamma.extend(
            line.windows(2)
                .filter(|w| norm(sub(w[1], w[0])) > T::zero())
                .map(|w| GammaPiece { a: w[0], b: w[1], side: 0 }),
        );
    }
    CutCell { triangles, gamma }
}

/// Root of the level set on the line `x + s d` inside the triangle nearest to `x`.
fn project_to_curve<T: Real>(x: Point<T>, d: Point<T>, tri: &[Point<T>; 3], iface: &Interface<T>) -> Option<Point<T>> {
    let dn = norm(d);
    if !(dn > T::zero()) {
        return None;
    }
    let d = [d[0] / dn, d[1] / dn];
    let big: T = lit(1e3);
    let far_a = [x[0] - big * d[0], x[1] - big * d[1]];
    let far_b = [x[0] + big * d[0], x[1] + big * d[1]];
    let (s0, s1) = clip_segment(far_a, far_b, tri)?;
    let len = norm(sub(s1, s0));
    if !(len > T::zero()) {
        return None;
    }
    let roots = iface.edge_roots(s0, s1);
    roots
        .into_iter()
        .map(|t| lerp(s0, s1, t))
        .min_by(|u, v| norm(sub(*u, x)).partial_cmp(&norm(sub(*v, x))).unwrap())
}

fn polygon_cut_cell<T: Real>(tri: &[Point<T>; 3], p: &crate::interface::Polygon<T>, iface: &Interface<T>) -> CutCell<T> {
    let inner = polygon_triangles(p);
    let mut tri0 = Vec::new();
    let mut outside: Vec<Vec<Point<T>>> = vec![tri.to_vec()];
    for t in inner.iter() {
        let piece = clip_convex(tri, t);
        if convex_area(&piece) > T::zero() {
            tri0.extend(fan(&piece));
            let mut next = Vec::new();
            for o in &outside {
                next.extend(convex_difference(o, t));
            }
            outside = next;
        }
    }
    let tri1 = outside.iter().flat_map(|o| fan(o)).collect();
    let centroid = [
        (tri[0][0] + tri[1][0] + tri[2][0]) / lit(3.0),
        (tri[0][1] + tri[1][1] + tri[2][1]) / lit(3.0),
    ];
    let mut gamma = Vec::new();
    for j in 0..p.len() {
        let [a, b] = p.side(j);
        if let Some((s, t)) = clip_segment(a, b, tri) {
            if !(norm(sub(t, s)) > T::zero()) {
                continue;
            }
            let mid = lerp(s, t, lit(0.5));
            if !strictly_inside(mid, tri) && dot(sub(centroid, a), p.side_normal(j)) <= T::zero() {
                continue;
            }
            gamma.push(GammaPiece { a: s, b: t, side: j });
        }
    }
    let _ = iface;
    CutCell {
        triangles: [tri0, tri1],
        gamma,
    }
}

fn polygon_triangles<T: Real>(p: &crate::interface::Polygon<T>) -> Vec<[Point<T>; 3]> {
    ear_clip(p.vertices())
}

/// True if `x` is inside the triangle and away from its edges.
fn strictly_inside<T: Real>(x: Point<T>, tri: &[Point<T>; 3]) -> bool {
    let area = orient(tri[0], tri[1], tri[2]);
    let tol = lit::<T>(1e-12) * area;
    (0..3).all(|i| orient(tri[i], tri[(i + 1) % 3], x) > tol)
}

/// Cyrus-Beck clipping of `[a, b]` against a counterclockwise triangle.
pub fn clip_segment<T: Real>(a: Point<T>, b: Point<T>, tri: &[Point<T>; 3]) -> Option<(Point<T>, Point<T>)> {
    let d = sub(b, a);
    let (mut t0, mut t1) = (T::zero(), T::one());
    let scale = tri
        .iter()
        .fold(T::one(), |s, p| s.max(p[0].abs()).max(p[1].abs()));
    let dist_tol = lit::<T>(1e-12) * scale;
    for i in 0..3 {
        let (p, q) = (tri[i], tri[(i + 1) % 3]);
        let e = sub(q, p);
        // inside: cross(e, x - p) >= 0
        let num = cross(e, sub(a, p));
        let den = cross(e, d);
        if den.abs() <= lit::<T>(1e-12) * norm(e) * norm(d) {
            if num < -dist_tol * norm(e) {
                return None;
            }
            continue;
        }
        let t = -num / den;
        if den > T::zero() {
            t0 = t0.max(t);
        } else {
            t1 = t1.min(t);
        }
        if t0 > t1 {
            return None;
        }
    }
    Some((lerp(a, b, t0), lerp(a, b, t1)))
}

/// Sutherland-Hodgman clipping of a convex polygon by a half plane `cross(b - a, x - a) >= 0`.
fn clip_half_plane<T: Real>(poly: &[Point<T>], a: Point<T>, b: Point<T>, keep_left: bool) -> Vec<Point<T>> {
    let side = |x: Point<T>| {
        let s = orient(a, b, x);
        if keep_left {
            s
        } else {
            -s
        }
    };
    let mut out = Vec::with_capacity(poly.len() + 2);
    let n = poly.len();
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        let (sp, sq) = (side(p), side(q));
        if sp >= T::zero() {
            out.push(p);
        }
        if (sp > T::zero() && sq < T::zero()) || (sp < T::zero() && sq > T::zero()) {
            out.push(lerp(p, q, sp / (sp - sq)));
        }
    }
    out
}

/// Intersection of a convex polygon with a counterclockwise triangle.
fn clip_convex<T: Real>(poly: &[Point<T>], tri: &[Point<T>; 3]) -> Vec<Point<T>> {
    let mut out = poly.to_vec();
    for i in 0..3 {
        if out.is_empty() {
            break;
        }
        out = clip_half_plane(&out, tri[i], tri[(i + 1) % 3], true);
    }
    out
}

/// Convex pieces of `poly \ tri`.
fn convex_difference<T: Real>(poly: &[Point<T>], tri: &[Point<T>; 3]) -> Vec<Vec<Point<T>>> {
    let mut pieces = Vec::new();
    let mut rest = poly.to_vec();
    for i in 0..3 {
        if rest.is_empty() {
            break;
        }
        let (a, b) = (tri[i], tri[(i + 1) % 3]);
        let outside = clip_half_plane(&rest, a, b, false);
        if convex_area(&outside) > T::zero() {
            pieces.push(outside);
        }
        rest = clip_half_plane(&rest, a, b, true);
    }
    pieces
}

fn convex_area<T: Real>(poly: &[Point<T>]) -> T {
    if poly.len() < 3 {
        return T::zero();
    }
    let n = poly.len();
    (0..n).fold(T::zero(), |s, i| s + cross(poly[i], poly[(i + 1) % n])) * lit(0.5)
}

fn fan<T: Real>(poly: &[Point<T>]) -> Vec<[Point<T>; 3]> {
    (1..poly.len().saturating_sub(1))
        .map(|i| [poly[0], poly[i], poly[i + 1]])
        .filter(|t| orient(t[0], t[1], t[2]) > T::zero())
        .collect()
}

/// Ear-clipping triangulation of a simple counterclockwise polygon; zero-area ears are dropped.
pub fn ear_clip<T: Real>(poly: &[Point<T>]) -> Vec<[Point<T>; 3]> {
    let mut v: Vec<Point<T>> = Vec::with_capacity(poly.len());
    for &p in poly {
        if v.last().map_or(true, |&q| q != p) {
            v.push(p);
        }
    }
    while v.len() > 1 && v[0] == v[v.len() - 1] {
        v.pop();
    }
    let mut out = Vec::new();
    let scale = v
        .iter()
        .fold(T::zero(), |s, p| s.max(p[0].abs()).max(p[1].abs()))
        .max(T::one());
    let tol = T::epsilon() * scale * scale * lit(16.0);
    while v.len() >= 3 {
        let n = v.len();
        let mut clipped = false;
        for i in 0..n {
            let (p, c, q) = (v[(i + n - 1) % n], v[i], v[(i + 1) % n]);
            let o = orient(p, c, q);
            if o.abs() <= tol {
                v.remove(i);
                clipped = true;
                break;
            }
            if o < T::zero() {
                continue;
            }
            let blocked = v.iter().enumerate().any(|(j, &x)| {
                j != i
                    && j != (i + n - 1) % n
                    && j != (i + 1) % n
                    && x != p
                    && x != c
                    && x != q
                    && orient(p, c, x) >= T::zero()
                    && orient(c, q, x) >= T::zero()
                    && orient(q, p, x) >= T::zero()
            });
            if !blocked {
                out.push([p, c, q]);
                v.remove(i);
                clipped = true;
                break;
            }
        }
        if !clipped {
            out.extend(fan(&v));
            break;
        }
    }
    out
}

/// Classification plus cached cut-cell geometry.
#[derive(Clone, Debug)]
pub struct CutGeometry<T> {
    pub classification: CutClassification,
    pub n_sub: usize,
    cells: HashMap<usize, CutCell<T>>,
}

impl<T: Real> CutGeometry<T> {
    pub fn new(mesh: &Mesh<T>, iface: &Interface<T>, n_sub: usize) -> Result<Self> {
        Self::with_policy(mesh, iface, n_sub, AssumptionPolicy::Strict)
    }

    pub fn with_policy(mesh: &Mesh<T>, iface: &Interface<T>, n_sub: usize, policy: AssumptionPolicy) -> Result<Self> {
        let classification = classify_with(mesh, iface, policy)?;
        let cells = classification
            .cut
            .iter()
            .map(|&k| (k, cut_cell(mesh, iface, k, n_sub)))
            .collect();
        Ok(CutGeometry {
            classification,
            n_sub,
            cells,
        })
    }

    pub fn cell(&self, k: usize) -> Option<&CutCell<T>> {
        self.cells.get(&k)
    }

    /// Rule on `K ∩ Omega_side`; empty when `K` does not meet that side.
    pub fn bulk_quadrature(&self, mesh: &Mesh<T>, k: usize, side: usize, degree: usize) -> QuadratureRule<T> {
        match self.classification.kind[k] {
            ElementKind::Cut => {
                let mut r = QuadratureRule::new();
                for t in &self.cells[&k].triangles[side] {
                    r.add_triangle(t[0], t[1], t[2], degree);
                }
                r
            }
            kind => {
                if (kind == ElementKind::Interior0) == (side == 0) {
                    let [a, b, c] = mesh.corners(k);
                    QuadratureRule::triangle(a, b, c, degree)
                } else {
                    QuadratureRule::new()
                }
            }
        }
    }

    /// Rule on the interface inside a cut element, with normals and side indices.
    pub fn interface_quadrature(&self, iface: &Interface<T>, k: usize, degree: usize) -> Result<QuadratureRule<T>> {
        match self.cells.get(&k) {
            Some(cell) => gamma_rule(cell, iface, degree),
            None => Ok(QuadratureRule::new()),
        }
    }
}

fn gamma_rule<T: Real>(cell: &CutCell<T>, iface: &Interface<T>, degree: usize) -> Result<QuadratureRule<T>> {
    let mut r = QuadratureRule::new();
    for g in &cell.gamma {
        let mut seg = QuadratureRule::new();
        seg.add_segment(g.a, g.b, degree);
        for &x in &seg.points {
            let n = match iface.polygon() {
                Some(p) => p.side_normal(g.side),
                None => iface.interface_normal(x)?,
            };
            seg.normals.push(n);
            seg.sides.push(g.side);
        }
        r.extend(seg);
    }
    Ok(r)
}

/// Rule on `K ∩ Omega_side` for a single element, computed from scratch.
pub fn bulk_cut_quadrature<T: Real>(
    mesh: &Mesh<T>,
    iface: &Interface<T>,
    k: usize,
    side: usize,
    degree: usize,
) -> QuadratureRule<T> {
    let cell = cut_cell(mesh, iface, k, DEFAULT_N_SUB);
    let mut r = QuadratureRule::new();
    for t in &cell.triangles[side] {
        r.add_triangle(t[0], t[1], t[2], degree);
    }
    r
}

/// Interface rule for a single element, computed from scratch.
pub fn interface_quadrature<T: Real>(
    mesh: &Mesh<T>,
    iface: &Interface<T>,
    k: usize,
    degree: usize,
) -> Result<QuadratureRule<T>> {
    gamma_rule(&cut_cell(mesh, iface, k, DEFAULT_N_SUB), iface, degree)
}
