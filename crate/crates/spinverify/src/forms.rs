//! Index bookkeeping for antisymmetric coefficients on strictly increasing tuples.
//!
//! A p-form value on an n-dimensional chart is stored as a `Vec` of length
//! C(n, p), ordered lexicographically over increasing index tuples.

/// Binomial coefficient C(n, p).
pub fn comb_count(n: usize, p: usize) -> usize {
    if p > n {
        return 0;
    }
    let mut acc = 1usize;
    for i in 0..p {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// All strictly increasing p-tuples over 0..n, in lexicographic order.
pub fn combinations(n: usize, p: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(comb_count(n, p));
    let mut cur = Vec::with_capacity(p);
    fn rec(n: usize, p: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == p {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(n, p, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(n, p, 0, &mut cur, &mut out);
    out
}

/// Lexicographic rank of an increasing tuple among all p-tuples over 0..n.
pub fn comb_rank(n: usize, tuple: &[usize]) -> usize {
    let p = tuple.len();
    let mut rank = 0usize;
    let mut prev = 0usize;
    for (k, &t) in tuple.iter().enumerate() {
        for j in prev..t {
            rank += comb_count(n - j - 1, p - k - 1);
        }
        prev = t + 1;
    }
    rank
}

/// Sorts `indices` in place; returns the permutation sign, or 0 on a repeat.
pub fn sort_sign(indices: &mut [usize]) -> i32 {
    let mut sign = 1i32;
    for i in 1..indices.len() {
        let mut j = i;
        while j > 0 && indices[j - 1] > indices[j] {
            indices.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    for w in indices.windows(2) {
        if w[0] == w[1] {
            return 0;
        }
    }
    sign
}
