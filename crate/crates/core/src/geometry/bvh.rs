use super::{Facet, FacetId, Vec3};

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Aabb {
    lo: Vec3,
    hi: Vec3,
}

impl Aabb {
    fn empty() -> Aabb {
        Aabb { lo: Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY), hi: Vec3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY) }
    }

    fn grow(&mut self, lo: Vec3, hi: Vec3) {
        self.lo = self.lo.min_components(lo);
        self.hi = self.hi.max_components(hi);
    }

    /// Slab test against the ray segment `[0, t_max]`.
    fn hit(&self, origin: Vec3, inv_dir: Vec3, t_max: f64) -> bool {
        let mut t0 = 0.0f64;
        let mut t1 = t_max;
        for i in 0..3 {
            let o = origin.axis(i);
            let inv = inv_dir.axis(i);
            // Pad slightly so flat (zero-thickness) boxes still register hits.
            let (lo, hi) = (self.lo.axis(i) - 1e-9, self.hi.axis(i) + 1e-9);
            let (mut a, mut b) = ((lo - o) * inv, (hi - o) * inv);
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            // NaN from 0 * inf: the ray is parallel and inside the slab.
            if a.is_nan() || b.is_nan() {
                if o < lo || o > hi {
                    return false;
                }
                continue;
            }
            t0 = t0.max(a);
            t1 = t1.min(b);
            if t0 > t1 {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf { bounds: Aabb, start: usize, end: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

/// Bounding volume hierarchy over scene facets (median split on the widest
/// centroid axis). Construction is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Bvh {
    nodes: Vec<Node>,
    order: Vec<FacetId>,
}

impl Bvh {
    pub(crate) fn build(facets: &[Facet]) -> Bvh {
        let mut bvh = Bvh { nodes: Vec::new(), order: (0..facets.len()).collect() };
        let bounds: Vec<(Vec3, Vec3)> = facets.iter().map(Facet::bounds).collect();
        if !facets.is_empty() {
            bvh.build_node(facets, &bounds, 0, facets.len());
        }
        bvh
    }

    fn build_node(&mut self, facets: &[Facet], bounds: &[(Vec3, Vec3)], start: usize, end: usize) -> usize {
        let mut aabb = Aabb::empty();
        let mut centroids = Aabb::empty();
        for &id in &self.order[start..end] {
            aabb.grow(bounds[id].0, bounds[id].1);
            let c = facets[id].centroid();
            centroids.grow(c, c);
        }
        let idx = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { bounds: aabb, start, end });
            return idx;
        }
        let extent = centroids.hi - centroids.lo;
        let axis = if extent.x >= extent.y && extent.x >= extent.z {
            0
        } else if extent.y >= extent.z {
            1
        } else {
            2
        };
        self.order[start..end].sort_by(|&a, &b| {
            facets[a].centroid().axis(axis).total_cmp(&facets[b].centroid().axis(axis)).then(a.cmp(&b))
        });
        let mid = (start + end) / 2;
        self.nodes.push(Node::Leaf { bounds: aabb, start, end });
        let left = self.build_node(facets, bounds, start, mid);
        let right = self.build_node(facets, bounds, mid, end);
        self.nodes[idx] = Node::Inner { bounds: aabb, left, right };
        idx
    }

    /// Visit every facet whose bounds the segment `origin + t·dir, t ∈ [0, t_max]`
    /// may touch. The visitor returns `false` to stop early.
    pub(crate) fn visit(&self, origin: Vec3, dir: Vec3, t_max: f64, mut visitor: impl FnMut(FacetId) -> bool) {
        if self.nodes.is_empty() {
            return;
        }
        let inv = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            match &self.nodes[i] {
                Node::Leaf { bounds, start, end } => {
                    if bounds.hit(origin, inv, t_max) {
                        for &id in &self.order[*start..*end] {
                            if !visitor(id) {
                                return;
                            }
                        }
                    }
                }
                Node::Inner { bounds, left, right } => {
                    if bounds.hit(origin, inv, t_max) {
                        stack.push(*right);
                        stack.push(*left);
                    }
                }
            }
        }
    }
}
