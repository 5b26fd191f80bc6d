//! Deterministic reductions.
//!
//! Every sum follows a fixed-shape binary tree over the index range: the
//! range splits at its midpoint until a small leaf is reached, leaves are
//! summed left to right, siblings combine bottom-up. The tree shape depends
//! only on the range, never on thread scheduling, so totals are bitwise
//! reproducible for any worker count. Ranges above a pivot are evaluated in
//! parallel with `rayon::join`, which preserves the tree shape.

const LEAF: usize = 1024;
const PAR_PIVOT: usize = 1 << 15;

/// Sum `f(i)` for `i` in `lo..hi` over the fixed-shape tree.
pub fn det_sum_by<F>(lo: usize, hi: usize, f: &F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let n = hi.saturating_sub(lo);
    if n <= LEAF {
        let mut acc = 0.0;
        for i in lo..hi {
            acc += f(i);
        }
        return acc;
    }
    let mid = lo + n / 2;
    if n >= PAR_PIVOT {
        let (a, b) = rayon::join(|| det_sum_by(lo, mid, f), || det_sum_by(mid, hi, f));
        a + b
    } else {
        det_sum_by(lo, mid, f) + det_sum_by(mid, hi, f)
    }
}

/// Sum of a slice over the fixed-shape tree.
pub fn det_sum(xs: &[f64]) -> f64 {
    det_sum_by(0, xs.len(), &|i| xs[i])
}

/// Maximum of `f(i)` for `i` in `lo..hi` (same tree; max is order-insensitive
/// but the fixed shape keeps NaN propagation reproducible too).
pub fn det_max_by<F>(lo: usize, hi: usize, f: &F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let n = hi.saturating_sub(lo);
    if n == 0 {
        return f64::NEG_INFINITY;
    }
    if n <= LEAF {
        let mut acc = f64::NEG_INFINITY;
        for i in lo..hi {
            let x = f(i);
            if !(x <= acc) {
                acc = x;
            }
        }
        return acc;
    }
    let mid = lo + n / 2;
    let (a, b) = if n >= PAR_PIVOT {
        rayon::join(|| det_max_by(lo, mid, f), || det_max_by(mid, hi, f))
    } else {
        (det_max_by(lo, mid, f), det_max_by(mid, hi, f))
    };
    if !(b <= a) {
        b
    } else {
        a
    }
}
