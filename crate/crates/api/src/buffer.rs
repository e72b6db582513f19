use chrono::{DateTime, Utc};
use std::collections::VecDeque;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::Instant;

struct Chunk {
    bytes: Vec<u8>,
    pos: usize,
    produced_at: DateTime<Utc>,
}

impl Chunk {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

/// Bytes handed out by [`ByteBuffer::try_take`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Draw {
    pub bytes: Vec<u8>,
    /// Generation time of the newest byte in the draw.
    pub generated_at: DateTime<Utc>,
}

/// Bounded single-consumer byte queue. Every byte leaves the buffer at most
/// once. Fill level and throughput are atomics so they can be read without
/// touching the lock.
pub struct ByteBuffer {
    chunks: Mutex<VecDeque<Chunk>>,
    space: Condvar,
    capacity: usize,
    fill: AtomicUsize,
    produced: AtomicU64,
    served: AtomicU64,
    closed: AtomicBool,
    started: Instant,
}

impl ByteBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            chunks: Mutex::new(VecDeque::new()),
            space: Condvar::new(),
            capacity: capacity.max(1),
            fill: AtomicUsize::new(0),
            produced: AtomicU64::new(0),
            served: AtomicU64::new(0),
            closed: AtomicBool::new(false),
            started: Instant::now(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn fill(&self) -> usize {
        self.fill.load(Ordering::Acquire)
    }

    pub fn bytes_served(&self) -> u64 {
        self.served.load(Ordering::Relaxed)
    }

    /// Average production rate since the buffer was created.
    pub fn throughput_bits_per_sec(&self) -> f64 {
        let secs = self.started.elapsed().as_secs_f64();
        if secs > 0.0 {
            self.produced.load(Ordering::Relaxed) as f64 * 8.0 / secs
        } else {
            0.0
        }
    }

    /// Appends bytes, waiting while the buffer is full. Returns `false`
    /// without storing anything once the buffer is closed.
    pub fn push(&self, bytes: Vec<u8>) -> bool {
        if bytes.is_empty() {
            return !self.is_closed();
        }
        let need = bytes.len().min(self.capacity);
        let mut chunks = self.chunks.lock().expect("buffer lock poisoned");
        while self.fill() + need > self.capacity && !self.is_closed() {
            chunks = self.space.wait(chunks).expect("buffer lock poisoned");
        }
        if self.is_closed() {
            return false;
        }
        let len = bytes.len();
        chunks.push_back(Chunk {
            bytes,
            pos: 0,
            produced_at: Utc::now(),
        });
        self.fill.fetch_add(len, Ordering::AcqRel);
        self.produced.fetch_add(len as u64, Ordering::Relaxed);
        true
    }

    /// Removes exactly `n` bytes, or nothing if fewer are buffered.
    pub fn try_take(&self, n: usize) -> Option<Draw> {
        let mut chunks = self.chunks.lock().expect("buffer lock poisoned");
        if self.fill() < n {
            return None;
        }
        let mut bytes = Vec::with_capacity(n);
        let mut generated_at = None;
        while bytes.len() < n {
            let front = chunks.front_mut().expect("fill level matches queued chunks");
            let k = front.remaining().min(n - bytes.len());
            bytes.extend_from_slice(&front.bytes[front.pos..front.pos + k]);
            front.pos += k;
            generated_at = Some(front.produced_at);
            if front.remaining() == 0 {
                chunks.pop_front();
            }
        }
        self.fill.fetch_sub(n, Ordering::AcqRel);
        self.served.fetch_add(n as u64, Ordering::Relaxed);
        drop(chunks);
        self.space.notify_all();
        Some(Draw {
            bytes,
            generated_at: generated_at.unwrap_or_else(Utc::now),
        })
    }

    /// Wakes and stops any blocked producer.
    pub fn close(&self) {
        self.closed.store(true, Ordering::Release);
        let _guard = self.chunks.lock().expect("buffer lock poisoned");
        self.space.notify_all();
    }

    pub fn is_closed(&self) -> bool {
        self.closed.load(Ordering::Acquire)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn bytes_leave_once_in_order() {
        let b = ByteBuffer::new(16);
        assert!(b.push(vec![1, 2, 3]));
        assert!(b.push(vec![4, 5]));
        assert_eq!(b.fill(), 5);
        assert_eq!(b.try_take(4).unwrap().bytes, vec![1, 2, 3, 4]);
        assert!(b.try_take(2).is_none());
        assert_eq!(b.try_take(1).unwrap().bytes, vec![5]);
        assert_eq!(b.fill(), 0);
        assert_eq!(b.bytes_served(), 5);
    }

    #[test]
    fn full_buffer_blocks_producer_until_drained() {
        let b = Arc::new(ByteBuffer::new(4));
        assert!(b.push(vec![0; 4]));
        let producer = {
            let b = Arc::clone(&b);
            std::thread::spawn(move || b.push(vec![9, 9]))
        };
        std::thread::sleep(std::time::Duration::from_millis(50));
        assert_eq!(b.fill(), 4);
        b.try_take(2).unwrap();
        assert!(producer.join().unwrap());
        assert_eq!(b.fill(), 4);
    }

    #[test]
    fn close_releases_blocked_producer() {
        let b = Arc::new(ByteBuffer::new(2));
        assert!(b.push(vec![0; 2]));
        let producer = {
            let b = Arc::clone(&b);
            std::thread::spawn(move || b.push(vec![1]))
        };
        b.close();
        assert!(!producer.join().unwrap());
    }
}
