//! Per-peer message buffers: the `k` newest message ids, kept sorted.

/// Sorted, duplicate-free list of at most `k` message ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Buffer {
    ids: Vec<u64>,
}

impl Buffer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a buffer from arbitrary ids, keeping the `k` newest.
    pub fn from_ids(ids: impl IntoIterator<Item = u64>, k: usize) -> Self {
        let mut ids: Vec<u64> = ids.into_iter().collect();
        ids.sort_unstable();
        ids.dedup();
        let skip = ids.len().saturating_sub(k);
        ids.drain(..skip);
        Self { ids }
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: u64) -> bool {
        self.ids.binary_search(&id).is_ok()
    }

    /// Adds `id`, evicting the oldest entries beyond `k`. An id older than
    /// everything in a full buffer is rejected. Returns whether `id` is held
    /// afterwards.
    pub fn insert(&mut self, id: u64, k: usize) -> bool {
        match self.ids.binary_search(&id) {
            Ok(_) => return true,
            Err(pos) => self.ids.insert(pos, id),
        }
        if self.ids.len() > k {
            let excess = self.ids.len() - k;
            self.ids.drain(..excess);
        }
        self.contains(id)
    }
}

/// The `k` largest ids of the union of `a` and `b`, ascending.
pub fn merge_buffers(a: &Buffer, b: &Buffer, k: usize) -> Buffer {
    let (x, y) = (a.ids(), b.ids());
    let mut out = Vec::with_capacity(k.min(x.len() + y.len()));
    // walk both from the newest end
    let (mut i, mut j) = (x.len(), y.len());
    while out.len() < k && (i > 0 || j > 0) {
        let next = match (i.checked_sub(1).map(|p| x[p]), j.checked_sub(1).map(|p| y[p])) {
            (Some(u), Some(v)) if u == v => {
                i -= 1;
                j -= 1;
                u
            }
            (Some(u), Some(v)) if u > v => {
                i -= 1;
                u
            }
            (Some(u), None) => {
                i -= 1;
                u
            }
            (_, Some(v)) => {
                j -= 1;
                v
            }
            (None, None) => unreachable!(),
        };
        out.push(next);
    }
    out.reverse();
    Buffer { ids: out }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn buf(ids: &[u64]) -> Buffer {
        Buffer::from_ids(ids.iter().copied(), usize::MAX)
    }

    #[test]
    fn merge_examples() {
        assert_eq!(merge_buffers(&buf(&[3, 5]), &buf(&[4, 6]), 2).ids(), &[5, 6]);
        assert_eq!(merge_buffers(&buf(&[1]), &buf(&[]), 1).ids(), &[1]);
        assert_eq!(merge_buffers(&buf(&[2, 7]), &buf(&[7, 9]), 3).ids(), &[2, 7, 9]);
    }

    #[test]
    fn insert_evicts_oldest() {
        let mut b = Buffer::new();
        for id in 0..5 {
            assert!(b.insert(id, 3));
        }
        assert_eq!(b.ids(), &[2, 3, 4]);
        assert!(!b.insert(1, 3));
        assert_eq!(b.ids(), &[2, 3, 4]);
        assert!(b.insert(3, 3));
    }

    #[test]
    fn from_ids_keeps_newest() {
        assert_eq!(Buffer::from_ids([9, 1, 4, 4, 7], 2).ids(), &[7, 9]);
    }
}
