use crate::operator::SparseOperator;

/// Partition of the computational basis into sectors left invariant by a set
/// of operators: the connected components of their joint nonzero pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorPartition {
    sector_of: Vec<usize>,
    position: Vec<usize>,
    sectors: Vec<Vec<usize>>,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller root wins, keeping roots canonical
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

impl SectorPartition {
    /// Sectors are ordered by their smallest basis index; states within a
    /// sector ascend.
    pub fn from_operators(dim: usize, ops: &[&SparseOperator], perms: &[&[usize]]) -> Self {
        let mut uf = UnionFind::new(dim);
        for op in ops {
            assert_eq!(op.dim(), dim);
            for (i, j, _) in op.triplets() {
                uf.union(i, j);
            }
        }
        for perm in perms {
            assert_eq!(perm.len(), dim);
            for (i, &p) in perm.iter().enumerate() {
                uf.union(i, p);
            }
        }
        let mut sector_of = vec![usize::MAX; dim];
        let mut position = vec![0; dim];
        let mut sectors: Vec<Vec<usize>> = Vec::new();
        let mut root_sector = vec![usize::MAX; dim];
        for g in 0..dim {
            let r = uf.find(g);
            if root_sector[r] == usize::MAX {
                root_sector[r] = sectors.len();
                sectors.push(Vec::new());
            }
            let s = root_sector[r];
            sector_of[g] = s;
            position[g] = sectors[s].len();
            sectors[s].push(g);
        }
        Self {
            sector_of,
            position,
            sectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.sector_of.len()
    }

    pub fn len(&self) -> usize {
        self.sectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sectors.is_empty()
    }

    pub fn sector(&self, s: usize) -> &[usize] {
        &self.sectors[s]
    }

    pub fn sector_of(&self, g: usize) -> usize {
        self.sector_of[g]
    }

    pub fn position(&self, g: usize) -> usize {
        self.position[g]
    }

    pub fn largest(&self) -> usize {
        self.sectors.iter().map(Vec::len).max().unwrap_or(0)
    }
}
