//! Johnson graph combinatorics.
//!
//! Vertices of `J(n, k)` are the k-element subsets of `{1, ..., n}`, identified
//! by their rank in lexicographic order of sorted tuples. Two vertices are
//! adjacent when their subsets differ in exactly one element.
//!
//! Arcs are addressed as `(vertex, slot)`. Slots `0..d` point at the neighbors
//! in ascending rank order; slot `d` is the self-loop, present only in the
//! lackadaisical layout.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("binomial coefficient C({0}, {1}) overflows u64")]
    Overflow(u64, u64),
    #[error("invalid Johnson graph J({n},{k}): {reason}")]
    InvalidGraph { n: usize, k: usize, reason: String },
    #[error("malformed subset {subset:?}: {reason}")]
    MalformedSubset { subset: Vec<u32>, reason: String },
    #[error("vertex rank {rank} out of range for a graph with {vertex_count} vertices")]
    RankOutOfRange { rank: usize, vertex_count: usize },
    #[error("slot {slot} out of range for degree {degree}")]
    SlotOutOfRange { slot: usize, degree: usize },
    #[error("arc ({vertex}, {slot}) is a self-loop and has no reverse arc")]
    SelfLoopArc { vertex: usize, slot: usize },
}

/// Exact binomial coefficient `C(a, b)`; zero when `b > a`.
pub fn binomial(a: u64, b: u64) -> Result<u64, GraphError> {
    if b > a {
        return Ok(0);
    }
    let b_small = b.min(a - b);
    let mut acc: u128 = 1;
    for i in 0..b_small {
        // acc * (a - i) is divisible by (i + 1) since acc = C(a, i).
        acc = acc
            .checked_mul(u128::from(a - i))
            .ok_or(GraphError::Overflow(a, b))?
            / u128::from(i + 1);
        if acc > u128::from(u64::MAX) {
            return Err(GraphError::Overflow(a, b));
        }
    }
    Ok(acc as u64)
}

/// Lexicographic rank of a sorted k-subset. Newtype over the rank so vertex
/// ids do not get mixed up with slots or ground-set elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub usize);

impl VertexId {
    pub fn rank(self) -> usize {
        self.0
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A directed coin direction at a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Arc {
    pub vertex: VertexId,
    pub slot: usize,
}

impl Arc {
    pub fn new(vertex: VertexId, slot: usize) -> Self {
        Self { vertex, slot }
    }
}

/// Parameters of `J(n, k)` with `n >= 2k >= 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GraphSpec {
    n: usize,
    k: usize,
    vertex_count: usize,
    degree: usize,
}

impl GraphSpec {
    pub fn new(n: usize, k: usize) -> Result<Self, GraphError> {
        let invalid = |reason: &str| GraphError::InvalidGraph {
            n,
            k,
            reason: reason.to_string(),
        };
        if k == 0 {
            return Err(invalid("k must be at least 1"));
        }
        if n < 2 * k {
            return Err(invalid("n must be at least 2k"));
        }
        if n > u32::MAX as usize {
            return Err(invalid("n does not fit in 32 bits"));
        }
        let vertex_count = binomial(n as u64, k as u64)?;
        let vertex_count =
            usize::try_from(vertex_count).map_err(|_| invalid("vertex count exceeds usize"))?;
        let degree = k
            .checked_mul(n - k)
            .ok_or_else(|| invalid("degree overflows usize"))?;
        Ok(Self {
            n,
            k,
            vertex_count,
            degree,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `N = C(n, k)`.
    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    /// `d = k (n - k)`.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        (0..self.vertex_count).map(VertexId)
    }

    // C(a, b) for a < n, b < k is bounded by C(n, k), which fits by construction.
    fn choose(&self, a: usize, b: usize) -> usize {
        binomial(a as u64, b as u64).expect("bounded by C(n, k)") as usize
    }

    fn validate_subset(&self, subset: &[u32]) -> Result<(), GraphError> {
        let malformed = |reason: String| GraphError::MalformedSubset {
            subset: subset.to_vec(),
            reason,
        };
        if subset.len() != self.k {
            return Err(malformed(format!(
                "expected {} elements, got {}",
                self.k,
                subset.len()
            )));
        }
        if let Some(&e) = subset.iter().find(|&&e| e == 0 || e as usize > self.n) {
            return Err(malformed(format!("element {e} outside 1..={}", self.n)));
        }
        if subset.windows(2).any(|w| w[0] >= w[1]) {
            return Err(malformed("elements must be strictly increasing".into()));
        }
        Ok(())
    }

    /// Lexicographic rank of a strictly increasing subset of `1..=n`.
    pub fn rank_subset(&self, subset: &[u32]) -> Result<VertexId, GraphError> {
        self.validate_subset(subset)?;
        Ok(VertexId(self.rank_unchecked(subset)))
    }

    fn rank_unchecked(&self, subset: &[u32]) -> usize {
        let (n, k) = (self.n, self.k);
        let mut rank = 0;
        let mut next = 0usize; // smallest zero-based element allowed at position i
        for (i, &e) in subset.iter().enumerate() {
            let e = e as usize - 1;
            // Count all tuples that agree on the prefix and put a smaller
            // element at position i.
            for j in next..e {
                rank += self.choose(n - 1 - j, k - 1 - i);
            }
            next = e + 1;
        }
        rank
    }

    /// Inverse of [`GraphSpec::rank_subset`].
    pub fn unrank_subset(&self, id: VertexId) -> Result<Vec<u32>, GraphError> {
        if id.0 >= self.vertex_count {
            return Err(GraphError::RankOutOfRange {
                rank: id.0,
                vertex_count: self.vertex_count,
            });
        }
        let (n, k) = (self.n, self.k);
        let mut remaining = id.0;
        let mut subset = Vec::with_capacity(k);
        let mut candidate = 0usize;
        for i in 0..k {
            loop {
                let block = self.choose(n - 1 - candidate, k - 1 - i);
                if remaining < block {
                    break;
                }
                remaining -= block;
                candidate += 1;
            }
            subset.push(candidate as u32 + 1);
            candidate += 1;
        }
        Ok(subset)
    }

    /// The `d` neighbors of `id`, ascending by rank. Slot `s` of the vertex
    /// addresses `neighbors(id)[s]`.
    pub fn neighbors(&self, id: VertexId) -> Result<Vec<VertexId>, GraphError> {
        let subset = self.unrank_subset(id)?;
        let mut out = Vec::with_capacity(self.degree);
        let mut scratch = Vec::with_capacity(self.k);
        for drop_pos in 0..self.k {
            for add in 1..=self.n as u32 {
                if subset.binary_search(&add).is_ok() {
                    continue;
                }
                scratch.clear();
                scratch.extend(
                    subset
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != drop_pos)
                        .map(|(_, &e)| e),
                );
                let at = scratch.partition_point(|&e| e < add);
                scratch.insert(at, add);
                out.push(VertexId(self.rank_unchecked(&scratch)));
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// Flip-flop partner of a non-self-loop arc: `(m, slot of n)` maps to
    /// `(n, slot of m)`.
    pub fn reverse_arc(&self, arc: Arc) -> Result<Arc, GraphError> {
        if arc.slot == self.degree {
            return Err(GraphError::SelfLoopArc {
                vertex: arc.vertex.0,
                slot: arc.slot,
            });
        }
        if arc.slot > self.degree {
            return Err(GraphError::SlotOutOfRange {
                slot: arc.slot,
                degree: self.degree,
            });
        }
        let target = self.neighbors(arc.vertex)?[arc.slot];
        let back = self.neighbors(target)?;
        let slot = back
            .binary_search(&arc.vertex)
            .expect("Johnson graph adjacency is symmetric");
        Ok(Arc::new(target, slot))
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "J({},{})", self.n, self.k)
    }
}

/// Precomputed adjacency and reverse-slot tables, `N * d` entries each.
///
/// `neighbor(v, s)` is the vertex addressed by slot `s` of `v` and
/// `reverse_slot(v, s)` is the slot of `v` in that neighbor's list.
#[derive(Debug, Clone)]
pub struct ArcTable {
    spec: GraphSpec,
    neighbor: Vec<u32>,
    reverse_slot: Vec<u32>,
}

impl ArcTable {
    pub fn build(spec: GraphSpec) -> Result<Self, GraphError> {
        let (count, degree) = (spec.vertex_count(), spec.degree());
        let arcs = count
            .checked_mul(degree)
            .filter(|&a| a <= u32::MAX as usize)
            .ok_or_else(|| GraphError::InvalidGraph {
                n: spec.n(),
                k: spec.k(),
                reason: "arc count does not fit in 32 bits".into(),
            })?;
        let mut neighbor = Vec::with_capacity(arcs);
        for v in spec.vertices() {
            neighbor.extend(spec.neighbors(v)?.into_iter().map(|u| u.0 as u32));
        }
        let mut reverse_slot = vec![0u32; arcs];
        for v in 0..count {
            for s in 0..degree {
                let u = neighbor[v * degree + s] as usize;
                let row = &neighbor[u * degree..(u + 1) * degree];
                let back = row
                    .binary_search(&(v as u32))
                    .expect("Johnson graph adjacency is symmetric");
                reverse_slot[v * degree + s] = back as u32;
            }
        }
        Ok(Self {
            spec,
            neighbor,
            reverse_slot,
        })
    }

    pub fn spec(&self) -> GraphSpec {
        self.spec
    }

    pub fn neighbor(&self, vertex: usize, slot: usize) -> usize {
        self.neighbor[vertex * self.spec.degree() + slot] as usize
    }

    pub fn reverse_slot(&self, vertex: usize, slot: usize) -> usize {
        self.reverse_slot[vertex * self.spec.degree() + slot] as usize
    }

    pub fn neighbors_of(&self, vertex: usize) -> &[u32] {
        let d = self.spec.degree();
        &self.neighbor[vertex * d..(vertex + 1) * d]
    }

    pub fn reverse_slots_of(&self, vertex: usize) -> &[u32] {
        let d = self.spec.degree();
        &self.reverse_slot[vertex * d..(vertex + 1) * d]
    }
}
