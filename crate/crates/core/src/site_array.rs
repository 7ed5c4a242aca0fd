//! Growable array indexed by a signed integer, used for per-site data on a
//! contiguous window of the lattice.

#[derive(Debug, Clone, PartialEq)]
pub struct SiteArray<T> {
    /// Site stored at `data[0]`.
    first: i64,
    data: Vec<T>,
}

impl<T: Clone + Default> Default for SiteArray<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Clone + Default> SiteArray<T> {
    pub fn new() -> Self {
        Self {
            first: 0,
            data: Vec::new(),
        }
    }

    pub fn first_site(&self) -> i64 {
        self.first
    }

    /// One past the last stored site.
    pub fn end_site(&self) -> i64 {
        self.first + self.data.len() as i64
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn contains(&self, site: i64) -> bool {
        site >= self.first && site < self.end_site()
    }

    pub fn get(&self, site: i64) -> Option<&T> {
        if self.contains(site) {
            Some(&self.data[(site - self.first) as usize])
        } else {
            None
        }
    }

    /// Mutable access, growing the window (with default values) if needed.
    pub fn get_mut(&mut self, site: i64) -> &mut T {
        self.reserve_site(site);
        let idx = (site - self.first) as usize;
        &mut self.data[idx]
    }

    /// Make sure `site` is inside the window. Growth at either end at least
    /// doubles the window so that walk-driven access is amortized O(1).
    pub fn reserve_site(&mut self, site: i64) {
        if self.data.is_empty() {
            self.first = site;
            self.data.push(T::default());
            return;
        }
        if site < self.first {
            let need = (self.first - site) as usize;
            let grow = need.max(self.data.len());
            let mut fresh = vec![T::default(); grow];
            fresh.extend(self.data.drain(..));
            self.data = fresh;
            self.first -= grow as i64;
        } else if site >= self.end_site() {
            let need = (site - self.end_site() + 1) as usize;
            let grow = need.max(self.data.len());
            self.data.resize(self.data.len() + grow, T::default());
        }
    }

    /// Iterate over `(site, value)` pairs in increasing site order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, &T)> + '_ {
        let first = self.first;
        self.data
            .iter()
            .enumerate()
            .map(move |(i, v)| (first + i as i64, v))
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }
}

impl SiteArray<f64> {
    /// Value at `site`, zero outside the window.
    pub fn value(&self, site: i64) -> f64 {
        self.get(site).copied().unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grows_in_both_directions() {
        let mut a: SiteArray<f64> = SiteArray::new();
        *a.get_mut(0) += 1.0;
        *a.get_mut(-5) += 2.0;
        *a.get_mut(7) += 3.0;
        assert_eq!(a.value(0), 1.0);
        assert_eq!(a.value(-5), 2.0);
        assert_eq!(a.value(7), 3.0);
        assert_eq!(a.value(100), 0.0);
        assert!(a.first_site() <= -5 && a.end_site() > 7);
        let total: f64 = a.iter().map(|(_, v)| *v).sum();
        assert_eq!(total, 6.0);
    }
}
