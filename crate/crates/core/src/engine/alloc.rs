use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::store::{LocSet, Location, Store};

/// Chooses the location a `mod` allocates.
pub trait Allocator {
    /// Returns a location outside `forbidden`.
    fn next(&mut self, store: &Store, forbidden: &LocSet) -> Location;
}

/// Hands out locations that are unbound in the store and were never handed
/// out before by this allocator.
#[derive(Clone, Debug, Default)]
pub struct FreshAllocator {
    next: u64,
}

impl FreshAllocator {
    pub fn new() -> Self {
        Self::default()
    }

    /// An allocator whose first location is `l{start}` or later.
    pub fn starting_at(start: u64) -> Self {
        FreshAllocator { next: start }
    }

    pub fn issued_below(&self) -> u64 {
        self.next
    }
}

impl Allocator for FreshAllocator {
    fn next(&mut self, store: &Store, forbidden: &LocSet) -> Location {
        if let Some(max) = store.max_location() {
            self.next = self.next.max(max.0 + 1);
        }
        while forbidden.contains(&Location(self.next)) {
            self.next += 1;
        }
        let l = Location(self.next);
        self.next += 1;
        l
    }
}

/// Picks locations outside `forbidden`, often reusing locations that are
/// already bound in the store. Deterministic for a given seed.
#[derive(Clone, Debug)]
pub struct RecyclingAllocator {
    rng: ChaCha8Rng,
}

impl RecyclingAllocator {
    pub fn new(seed: u64) -> Self {
        RecyclingAllocator { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

/// Probes per allocation when looking for a bound location to reuse.
const REUSE_PROBES: u32 = 8;

impl Allocator for RecyclingAllocator {
    fn next(&mut self, store: &Store, forbidden: &LocSet) -> Location {
        let top = store.max_location().map_or(0, |l| l.0 + 1);
        if top > 0 && self.rng.gen_bool(0.6) {
            for _ in 0..REUSE_PROBES {
                let l = Location(self.rng.gen_range(0..top));
                if store.contains(l) && !forbidden.contains(&l) {
                    return l;
                }
            }
        }
        // otherwise an unbound, unforbidden location just above the store
        let mut skip = self.rng.gen_range(0..3u32);
        let mut n = top;
        loop {
            let l = Location(n);
            if !forbidden.contains(&l) {
                if skip == 0 {
                    return l;
                }
                skip -= 1;
            }
            n += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Value;

    #[test]
    fn fresh_skips_bound_and_forbidden() {
        let store: Store = [(Location(0), Value::Unit), (Location(3), Value::Unit)].into_iter().collect();
        let mut a = FreshAllocator::new();
        let forbidden: LocSet = [Location(4)].into_iter().collect();
        assert_eq!(a.next(&store, &forbidden), Location(5));
        assert_eq!(a.next(&store, &forbidden), Location(6));
        // never reissues, even against an empty store
        assert_eq!(a.next(&Store::new(), &LocSet::new()), Location(7));
    }

    #[test]
    fn recycling_respects_forbidden_and_is_seeded() {
        let store: Store = (0..6).map(|n| (Location(n), Value::Unit)).collect();
        let forbidden: LocSet = [0, 2, 4].into_iter().map(Location).collect();
        let draw = |seed| {
            let mut a = RecyclingAllocator::new(seed);
            (0..50).map(|_| a.next(&store, &forbidden)).collect::<Vec<_>>()
        };
        let xs = draw(7);
        assert!(xs.iter().all(|l| !forbidden.contains(l)));
        assert!(xs.iter().any(|l| store.contains(*l)), "expected some reuse");
        assert_eq!(xs, draw(7));
    }
}
