use crate::num::Scalar;

/// Maximum-weight one-to-one assignment between rows and columns of a
/// rectangular weight matrix (Hungarian method with potentials, O(n²m)).
///
/// Returns the column chosen for each row (`None` when there are more rows
/// than columns) and the total weight, summed from the original entries.
pub fn max_weight_assignment<T: Scalar>(weights: &[Vec<T>]) -> (Vec<Option<usize>>, T) {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return (vec![None; rows], T::zero());
    }
    debug_assert!(weights.iter().all(|r| r.len() == cols), "ragged weight matrix");

    let assignment = if rows <= cols {
        min_cost_rows(rows, cols, |i, j| weights[i][j])
            .into_iter()
            .map(Some)
            .collect::<Vec<_>>()
    } else {
        let by_col = min_cost_rows(cols, rows, |j, i| weights[i][j]);
        let mut out = vec![None; rows];
        for (j, i) in by_col.into_iter().enumerate() {
            out[i] = Some(j);
        }
        out
    };

    let total = assignment
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| weights[i][j]))
        .fold(T::zero(), |acc, w| acc + w);
    (assignment, total)
}

/// Assigns every one of `n` rows to a distinct column among `m >= n`,
/// maximizing total weight. Costs are `max - w` so they stay non-negative.
fn min_cost_rows<T: Scalar, W: Fn(usize, usize) -> T>(n: usize, m: usize, weight: W) -> Vec<usize> {
    let mut max = weight(0, 0);
    for i in 0..n {
        for j in 0..m {
            let w = weight(i, j);
            if w > max {
                max = w;
            }
        }
    }
    let cost = |i: usize, j: usize| max - weight(i, j);

    // 1-based potentials; column 0 is the virtual source.
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0usize;
        let mut minv: Vec<Option<T>> = vec![None; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta: Option<T> = None;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if minv[j].is_none_or(|mv| cur < mv) {
                    minv[j] = Some(cur);
                    way[j] = j0;
                }
                let mj = minv[j].expect("set above");
                if delta.is_none_or(|d| mj < d) {
                    delta = Some(mj);
                    j1 = j;
                }
            }
            let delta = delta.expect("an unused column remains while rows <= cols");
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] = u[owner[j]] + delta;
                    v[j] = v[j] - delta;
                } else if let Some(mv) = minv[j] {
                    minv[j] = Some(mv - delta);
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![0usize; n];
    for j in 1..=m {
        if owner[j] != 0 {
            row_to_col[owner[j] - 1] = j - 1;
        }
    }
    row_to_col
}
