use serde::Serialize;

use super::{euclidean, MetricsError};
use crate::dsp::MfccSequence;

/// Optimal monotone alignment between two frame sequences.
///
/// `path` holds 0-based `(i, j)` cells from `(0, 0)` to `(m - 1, n - 1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignmentResult {
    /// Minimum cumulative frame distance `γ(M, N)`.
    pub cost: f64,
    pub path: Vec<(usize, usize)>,
    pub m: usize,
    pub n: usize,
}

impl AlignmentResult {
    /// Number of cells on the path (`R`).
    pub fn path_len(&self) -> usize {
        self.path.len()
    }

    /// Re-sums the frame distances along the path.
    pub fn path_cost(&self, a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
        self.path
            .iter()
            .map(|&(i, j)| euclidean(&a[i], &b[j]))
            .sum()
    }
}

pub fn dtw_align(a: &MfccSequence, b: &MfccSequence) -> Result<AlignmentResult, MetricsError> {
    if a.k() != b.k() {
        return Err(MetricsError::DimensionMismatch {
            left: a.k(),
            right: b.k(),
        });
    }
    dtw_align_frames(a.frames(), b.frames())
}

/// Full-matrix DTW with steps (1,1), (1,0), (0,1).
///
/// Backtracking picks the smallest predecessor; on ties the diagonal wins, then
/// the vertical step (i - 1, j), then the horizontal step (i, j - 1).
pub fn dtw_align_frames(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<AlignmentResult, MetricsError> {
    let (m, n) = (a.len(), b.len());
    if m == 0 || n == 0 {
        return Err(MetricsError::EmptySequence);
    }
    let k = a[0].len();
    if let Some(bad) = a.iter().chain(b).find(|r| r.len() != k) {
        return Err(MetricsError::DimensionMismatch {
            left: k,
            right: bad.len(),
        });
    }

    let mut gamma = vec![0.0f64; m * n];
    let at = |i: usize, j: usize| i * n + j;
    for i in 0..m {
        for j in 0..n {
            let d = euclidean(&a[i], &b[j]);
            let best = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => gamma[at(0, j - 1)],
                (_, 0) => gamma[at(i - 1, 0)],
                _ => gamma[at(i - 1, j - 1)]
                    .min(gamma[at(i - 1, j)])
                    .min(gamma[at(i, j - 1)]),
            };
            gamma[at(i, j)] = d + best;
        }
    }

    let mut path = Vec::with_capacity(m + n - 1);
    let (mut i, mut j) = (m - 1, n - 1);
    path.push((i, j));
    while (i, j) != (0, 0) {
        (i, j) = match (i, j) {
            (0, _) => (0, j - 1),
            (_, 0) => (i - 1, 0),
            _ => {
                let mut step = (i - 1, j - 1);
                if gamma[at(i - 1, j)] < gamma[at(step.0, step.1)] {
                    step = (i - 1, j);
                }
                if gamma[at(i, j - 1)] < gamma[at(step.0, step.1)] {
                    step = (i, j - 1);
                }
                step
            }
        };
        path.push((i, j));
    }
    path.reverse();

    Ok(AlignmentResult {
        cost: gamma[at(m - 1, n - 1)],
        path,
        m,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{mcd, mcd_dtw, mcd_dtw_sl, McdScale};
    use proptest::prelude::*;

    /// Minimum path cost by enumerating every monotone path.
    fn brute_force(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
        fn walk(a: &[Vec<f64>], b: &[Vec<f64>], i: usize, j: usize, acc: f64, best: &mut f64) {
            let acc = acc + euclidean(&a[i], &b[j]);
            if i + 1 == a.len() && j + 1 == b.len() {
                *best = best.min(acc);
                return;
            }
            if i + 1 < a.len() && j + 1 < b.len() {
                walk(a, b, i + 1, j + 1, acc, best);
            }
            if i + 1 < a.len() {
                walk(a, b, i + 1, j, acc, best);
            }
            if j + 1 < b.len() {
                walk(a, b, i, j + 1, acc, best);
            }
        }
        let mut best = f64::INFINITY;
        walk(a, b, 0, 0, 0.0, &mut best);
        best
    }

    fn rows(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|&x| vec![x]).collect()
    }

    fn check_path(r: &AlignmentResult) {
        assert_eq!(r.path[0], (0, 0));
        assert_eq!(*r.path.last().unwrap(), (r.m - 1, r.n - 1));
        for w in r.path.windows(2) {
            let step = (w[1].0 - w[0].0, w[1].1 - w[0].1);
            assert!(matches!(step, (1, 1) | (1, 0) | (0, 1)), "{step:?}");
        }
        assert!(r.path_len() >= r.m.max(r.n));
        assert!(r.path_len() < r.m + r.n);
    }

    #[test]
    fn worked_example() {
        let a = rows(&[0.0, 1.0, 2.0]);
        let b = rows(&[0.0, 2.0]);
        assert_eq!(brute_force(&a, &b), 1.0);
        let r = dtw_align_frames(&a, &b).unwrap();
        check_path(&r);
        assert_eq!(r.cost, 1.0);
        assert_eq!(r.path_len(), 3);
        assert!((mcd_dtw(&r) - 1.0 / 3.0).abs() < 1e-15);
        let sl = mcd_dtw_sl(&r).unwrap();
        assert_eq!(sl.eta, 1.5);
        assert!((sl.score - 0.5).abs() < 1e-15);
    }

    #[test]
    fn identity_is_diagonal() {
        let a = vec![
            vec![1.0, 2.0],
            vec![-3.0, 0.5],
            vec![4.0, 4.0],
            vec![0.0, 0.0],
        ];
        let r = dtw_align_frames(&a, &a).unwrap();
        assert_eq!(r.cost, 0.0);
        assert_eq!(r.path, vec![(0, 0), (1, 1), (2, 2), (3, 3)]);
        assert_eq!(mcd_dtw(&r), 0.0);
    }

    #[test]
    fn l_shaped_path_reaches_upper_bound() {
        // One frame against many: every path is a straight line of M + N - 1 cells.
        let r = dtw_align_frames(&rows(&[0.0]), &rows(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(r.path_len(), 3);
        assert_eq!(r.path_len(), r.m + r.n - 1);
        assert_eq!(r.cost, 6.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            dtw_align_frames(&[], &rows(&[1.0])),
            Err(MetricsError::EmptySequence)
        ));
        assert!(matches!(
            dtw_align_frames(&[vec![0.0, 1.0]], &rows(&[1.0])),
            Err(MetricsError::DimensionMismatch { .. })
        ));
        let a = MfccSequence::from_rows(vec![vec![0.0, 1.0]]).unwrap();
        let b = MfccSequence::from_rows(vec![vec![0.0]]).unwrap();
        assert!(dtw_align(&a, &b).is_err());
    }

    fn instance() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        (1usize..=3, 1usize..=6, 1usize..=6).prop_flat_map(|(k, m, n)| {
            (
                proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, k), m),
                proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, k), n),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn matches_enumeration((a, b) in instance()) {
            let r = dtw_align_frames(&a, &b).unwrap();
            prop_assert!((r.cost - brute_force(&a, &b)).abs() <= 1e-9);
            check_path(&r);
            prop_assert!((r.path_cost(&a, &b) - r.cost).abs() <= 1e-9);
        }

        #[test]
        fn symmetric_cost((a, b) in instance()) {
            let ab = dtw_align_frames(&a, &b).unwrap();
            let ba = dtw_align_frames(&b, &a).unwrap();
            prop_assert!((ab.cost - ba.cost).abs() <= 1e-9);
            let transposed: f64 = ab.path.iter().map(|&(i, j)| euclidean(&b[j], &a[i])).sum();
            prop_assert!((transposed - ba.cost).abs() <= 1e-9);
        }

        #[test]
        fn duplicate_frame_is_absorbed((a, b) in instance(), pick in any::<prop::sample::Index>()) {
            // Collapsing the duplicate maps any path back onto the original
            // grid, so duplication never lowers the cost; when the optimal path
            // already spends two or more cells on that frame, the copy takes
            // one of them over at no extra cost.
            let base = dtw_align_frames(&a, &b).unwrap();
            let at = pick.index(a.len());
            let mut dup = a.clone();
            dup.insert(at, a[at].clone());
            let r = dtw_align_frames(&dup, &b).unwrap();
            prop_assert!(r.cost >= base.cost - 1e-9);
            let cells_on_row = base.path.iter().filter(|&&(i, _)| i == at).count();
            if cells_on_row >= 2 {
                prop_assert!((r.cost - base.cost).abs() <= 1e-9);
            }
        }

        #[test]
        fn never_worse_than_diagonal(rows in proptest::collection::vec(
            (proptest::collection::vec(-5.0f64..5.0, 2), proptest::collection::vec(-5.0f64..5.0, 2)),
            1..12,
        )) {
            let (a, b): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
            let r = dtw_align_frames(&a, &b).unwrap();
            let sa = MfccSequence::from_rows(a.clone()).unwrap();
            let sb = MfccSequence::from_rows(b.clone()).unwrap();
            let plain = mcd(&sa, &sb, McdScale::Paper).unwrap();
            prop_assert!(r.cost <= a.len() as f64 * plain + 1e-9);
            let sl = mcd_dtw_sl(&r).unwrap();
            prop_assert_eq!(sl.eta, 1.0);
            prop_assert_eq!(sl.score, mcd_dtw(&r));
        }
    }
}
