//! Per-node cache state for the dynamic replacement policies.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplacementPolicy {
    Lru,
    Lfu,
    Random,
}

impl ReplacementPolicy {
    pub fn name(self) -> &'static str {
        match self {
            ReplacementPolicy::Lru => "LRU",
            ReplacementPolicy::Lfu => "LFU",
            ReplacementPolicy::Random => "RANDOM",
        }
    }
}

/// What happened to a request at one cache.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CacheEvent {
    /// The cache held the content and served the request.
    Hit,
    /// The cache missed and forwarded the request.
    MissPassThrough,
    /// The content travelled back through this cache.
    Delivered,
}

/// Bounded cache of one node under a dynamic replacement policy.
#[derive(Clone, Debug)]
pub struct NodeCache {
    capacity: usize,
    state: State,
}

#[derive(Clone, Debug)]
enum State {
    Lru {
        clock: u64,
        stamp_of: HashMap<u32, u64>,
        by_stamp: BTreeMap<u64, u32>,
    },
    Lfu {
        counts: HashMap<u32, u64>,
        /// Residents ordered so the first element is the eviction victim:
        /// lowest count, then highest content index.
        residents: BTreeSet<(u64, Reverse<u32>)>,
    },
    Random {
        slots: Vec<u32>,
        position: HashMap<u32, usize>,
    },
}

impl NodeCache {
    pub fn new(policy: ReplacementPolicy, capacity: usize) -> Self {
        let state = match policy {
            ReplacementPolicy::Lru => State::Lru {
                clock: 0,
                stamp_of: HashMap::new(),
                by_stamp: BTreeMap::new(),
            },
            ReplacementPolicy::Lfu => State::Lfu {
                counts: HashMap::new(),
                residents: BTreeSet::new(),
            },
            ReplacementPolicy::Random => State::Random {
                slots: Vec::new(),
                position: HashMap::new(),
            },
        };
        NodeCache { capacity, state }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        match &self.state {
            State::Lru { stamp_of, .. } => stamp_of.len(),
            State::Lfu { residents, .. } => residents.len(),
            State::Random { slots, .. } => slots.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn contains(&self, content: u32) -> bool {
        match &self.state {
            State::Lru { stamp_of, .. } => stamp_of.contains_key(&content),
            State::Lfu { counts, residents } => counts
                .get(&content)
                .is_some_and(|&k| residents.contains(&(k, Reverse(content)))),
            State::Random { position, .. } => position.contains_key(&content),
        }
    }

    /// Resident contents in ascending index order.
    pub fn residents(&self) -> Vec<u32> {
        let mut out: Vec<u32> = match &self.state {
            State::Lru { stamp_of, .. } => stamp_of.keys().copied().collect(),
            State::Lfu { residents, .. } => residents.iter().map(|&(_, Reverse(c))| c).collect(),
            State::Random { slots, .. } => slots.clone(),
        };
        out.sort_unstable();
        out
    }

    /// LFU request counter of a content at this node (0 for other policies).
    pub fn frequency(&self, content: u32) -> u64 {
        match &self.state {
            State::Lfu { counts, .. } => counts.get(&content).copied().unwrap_or(0),
            _ => 0,
        }
    }

    /// Applies one event. `rng` is only consulted by random replacement.
    pub fn step<R: Rng + ?Sized>(&mut self, content: u32, event: CacheEvent, rng: &mut R) {
        if self.capacity == 0 {
            return;
        }
        let cap = self.capacity;
        match &mut self.state {
            State::Lru {
                clock,
                stamp_of,
                by_stamp,
            } => match event {
                CacheEvent::MissPassThrough => {}
                CacheEvent::Hit | CacheEvent::Delivered => {
                    *clock += 1;
                    if let Some(old) = stamp_of.insert(content, *clock) {
                        by_stamp.remove(&old);
                    } else if stamp_of.len() > cap {
                        let (_, victim) =
                            by_stamp.pop_first().expect("non-empty when over capacity");
                        stamp_of.remove(&victim);
                    }
                    by_stamp.insert(*clock, content);
                }
            },
            State::Lfu { counts, residents } => match event {
                CacheEvent::Hit | CacheEvent::MissPassThrough => {
                    let count = counts.entry(content).or_insert(0);
                    if residents.remove(&(*count, Reverse(content))) {
                        *count += 1;
                        residents.insert((*count, Reverse(content)));
                    } else {
                        *count += 1;
                    }
                }
                CacheEvent::Delivered => {
                    let count = counts.get(&content).copied().unwrap_or(0);
                    let key = (count, Reverse(content));
                    if residents.contains(&key) {
                        return;
                    }
                    if residents.len() < cap {
                        residents.insert(key);
                    } else if let Some(&victim) = residents.first() {
                        if key > victim {
                            residents.pop_first();
                            residents.insert(key);
                        }
                    }
                }
            },
            State::Random { slots, position } => {
                if event != CacheEvent::Delivered || position.contains_key(&content) {
                    return;
                }
                if slots.len() < cap {
                    position.insert(content, slots.len());
                    slots.push(content);
                } else {
                    let at = rng.random_range(0..slots.len());
                    position.remove(&slots[at]);
                    slots[at] = content;
                    position.insert(content, at);
                }
            }
        }
        debug_assert!(self.len() <= self.capacity);
    }
}

/// Free-function form of [`NodeCache::step`].
pub fn replacement_step<R: Rng + ?Sized>(
    cache: &mut NodeCache,
    content: u32,
    event: CacheEvent,
    rng: &mut R,
) {
    cache.step(content, event, rng);
}
