use crate::error::InputError;

/// Williams design: row `r` is the zig-zag `0, 1, n-1, 2, n-2, ...` shifted by `r`.
/// Every condition appears once per row and per column, and every ordered pair of
/// neighbours appears exactly once across the rows.
pub fn balanced_latin_square(n: usize) -> Result<Vec<Vec<usize>>, InputError> {
    if n < 2 || n % 2 == 1 {
        return Err(InputError::UnsupportedLatinSquare(n));
    }
    let mut first = vec![0];
    let (mut lo, mut hi) = (1, n);
    for j in 1..n {
        if j % 2 == 1 {
            first.push(lo);
            lo += 1;
        } else {
            hi -= 1;
            first.push(hi);
        }
    }
    Ok((0..n).map(|r| first.iter().map(|&c| (c + r) % n).collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn check(square: &[Vec<usize>]) {
        let n = square.len();
        let all: BTreeSet<usize> = (0..n).collect();
        for row in square {
            assert_eq!(row.iter().copied().collect::<BTreeSet<_>>(), all);
        }
        for c in 0..n {
            assert_eq!(square.iter().map(|r| r[c]).collect::<BTreeSet<_>>(), all);
        }
        let pairs: Vec<(usize, usize)> = square.iter().flat_map(|r| r.windows(2).map(|w| (w[0], w[1]))).collect();
        let distinct: BTreeSet<_> = pairs.iter().copied().collect();
        assert_eq!(pairs.len(), n * (n - 1));
        assert_eq!(distinct.len(), n * (n - 1));
    }

    #[test]
    fn n_two_and_four() {
        assert_eq!(balanced_latin_square(2).unwrap(), vec![vec![0, 1], vec![1, 0]]);
        let sq = balanced_latin_square(4).unwrap();
        assert_eq!(sq[0], [0, 1, 3, 2]);
        check(&sq);
    }

    #[test]
    fn larger_even_sizes_balance() {
        for n in (2..=16).step_by(2) {
            check(&balanced_latin_square(n).unwrap());
        }
    }

    #[test]
    fn odd_sizes_are_rejected() {
        for n in [0, 1, 3, 5] {
            assert_eq!(balanced_latin_square(n), Err(InputError::UnsupportedLatinSquare(n)));
        }
    }
}
