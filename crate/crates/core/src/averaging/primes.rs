//! Streaming segmented sieve of Eratosthenes.

const SEGMENT: u64 = 1 << 16;

/// Yields `2, 3, 5, 7, …` without bound, sieving one segment at a time.
#[derive(Clone, Debug)]
pub struct PrimeStream {
    /// Primes up to `base_limit`, enough to sieve below `base_limit²`.
    base: Vec<u64>,
    base_limit: u64,
    segment_lo: u64,
    pending: Vec<u64>,
    cursor: usize,
}

impl Default for PrimeStream {
    fn default() -> Self {
        Self::new()
    }
}

impl PrimeStream {
    pub fn new() -> Self {
        Self {
            base: Vec::new(),
            base_limit: 1,
            segment_lo: 0,
            pending: Vec::new(),
            cursor: 0,
        }
    }

    /// Every prime below this value has been yielded or is buffered.
    pub fn frontier(&self) -> u64 {
        self.segment_lo
    }

    fn grow_base(&mut self, needed: u64) {
        if self.base_limit >= needed {
            return;
        }
        let limit = needed.max(self.base_limit * 2);
        self.base = simple_sieve(limit);
        self.base_limit = limit;
    }

    fn sieve_next_segment(&mut self) {
        let lo = self.segment_lo;
        let hi = lo + SEGMENT;
        self.grow_base(hi.isqrt() + 1);
        let mut composite = vec![false; SEGMENT as usize];
        for &p in &self.base {
            if p * p >= hi {
                break;
            }
            let start = (p * p).max(lo.div_ceil(p) * p);
            let mut k = start;
            while k < hi {
                composite[(k - lo) as usize] = true;
                k += p;
            }
        }
        self.pending.clear();
        self.cursor = 0;
        for (i, &c) in composite.iter().enumerate() {
            let n = lo + i as u64;
            if n >= 2 && !c {
                self.pending.push(n);
            }
        }
        self.segment_lo = hi;
    }
}

impl Iterator for PrimeStream {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        while self.cursor == self.pending.len() {
            self.sieve_next_segment();
        }
        let p = self.pending[self.cursor];
        self.cursor += 1;
        Some(p)
    }
}

fn simple_sieve(limit: u64) -> Vec<u64> {
    let mut composite = vec![false; limit as usize + 1];
    let mut out = Vec::new();
    for n in 2..=limit {
        if !composite[n as usize] {
            out.push(n);
            let mut k = n * n;
            while k <= limit {
                composite[k as usize] = true;
                k += n;
            }
        }
    }
    out
}

/// Primality by trial division; the sieve's oracle.
pub fn is_prime_trial(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}
