use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// All multi-indices in `d` variables with total degree `<= order`, graded
/// (by degree, then reverse lexicographic so that `e_0` comes first).
pub fn multi_indices(d: usize, order: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    for deg in 0..=order {
        let mut cur = vec![0u8; d];
        fill(&mut out, &mut cur, 0, deg);
    }
    out
}

fn fill(out: &mut Vec<Vec<u8>>, cur: &mut Vec<u8>, slot: usize, left: usize) {
    if cur.is_empty() {
        if left == 0 {
            out.push(cur.clone());
        }
        return;
    }
    if slot == cur.len() - 1 {
        cur[slot] = left as u8;
        out.push(cur.clone());
        cur[slot] = 0;
        return;
    }
    for k in (0..=left).rev() {
        cur[slot] = k as u8;
        fill(out, cur, slot + 1, left - k);
    }
    cur[slot] = 0;
}

/// Shared index bookkeeping for jets of a given shape.
#[derive(Debug)]
pub struct IndexTable {
    d: usize,
    order: usize,
    indices: Vec<Vec<u8>>,
    degrees: Vec<usize>,
    lookup: HashMap<Vec<u8>, usize>,
    products: Vec<Vec<(u32, u32)>>,
}

impl IndexTable {
    fn build(d: usize, order: usize) -> IndexTable {
        let indices = multi_indices(d, order);
        let lookup: HashMap<Vec<u8>, usize> =
            indices.iter().enumerate().map(|(p, i)| (i.clone(), p)).collect();
        let degs: Vec<usize> = indices.iter().map(|i| i.iter().map(|&k| k as usize).sum()).collect();
        // indices are graded, so degree <= r is a prefix
        let prefix: Vec<usize> = (0..=order).map(|r| degs.iter().filter(|&&g| g <= r).count()).collect();
        let mut products = vec![Vec::new(); indices.len()];
        let mut sum = vec![0u8; d];
        for (a, ia) in indices.iter().enumerate() {
            for (b, ib) in indices[..prefix[order - degs[a]]].iter().enumerate() {
                for s in 0..d {
                    sum[s] = ia[s] + ib[s];
                }
                products[lookup[&sum]].push((a as u32, b as u32));
            }
        }
        IndexTable { d, order, indices, degrees: degs, lookup, products }
    }

    /// Cached table for `d` variables at `order`.
    pub fn get(d: usize, order: usize) -> Arc<IndexTable> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<IndexTable>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        guard.entry((d, order)).or_insert_with(|| Arc::new(IndexTable::build(d, order))).clone()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn index(&self, pos: usize) -> &[u8] {
        &self.indices[pos]
    }

    pub fn degree(&self, pos: usize) -> usize {
        self.degrees[pos]
    }

    pub fn position(&self, idx: &[u8]) -> Option<usize> {
        self.lookup.get(idx).copied()
    }

    pub fn unit(&self, slot: usize) -> usize {
        let mut idx = vec![0u8; self.d];
        idx[slot] = 1;
        self.lookup[&idx]
    }

    pub(crate) fn products(&self) -> &[Vec<(u32, u32)>] {
        &self.products
    }
}
