/// Fixed-capacity FIFO ring. Pushing into a full ring overwrites the oldest
/// element.
#[derive(Clone, Debug)]
pub struct FifoRing<T> {
    buf: Vec<T>,
    capacity: usize,
    /// Slot the next push writes to once the ring is full.
    head: usize,
}

impl<T: Copy> FifoRing<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "ring capacity must be positive");
        Self {
            buf: Vec::with_capacity(capacity),
            capacity,
            head: 0,
        }
    }

    /// Appends `item`, returning the evicted element when the ring was full.
    #[inline]
    pub fn push(&mut self, item: T) -> Option<T> {
        if self.buf.len() < self.capacity {
            self.buf.push(item);
            None
        } else {
            let old = std::mem::replace(&mut self.buf[self.head], item);
            self.head += 1;
            if self.head == self.capacity {
                self.head = 0;
            }
            Some(old)
        }
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn clear(&mut self) {
        self.buf.clear();
        self.head = 0;
    }

    /// Oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &T> + '_ {
        let (newer, older) = self.buf.split_at(self.head);
        older.iter().chain(newer.iter())
    }
}
