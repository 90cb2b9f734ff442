//! Optimal subcarrier allocation as min-cost bipartite matching.
//!
//! Once selections are fixed, each directed link with traffic needs exactly
//! one subcarrier and every subcarrier serves at most one link, so the
//! allocation is an assignment problem: the edge weight of (link, subcarrier)
//! is `P0 * s / r`, the energy of pushing the link's `s` bits at that
//! subcarrier's rate. [`solve_assignment`] runs an augmenting-path Hungarian
//! solver in O(M^3) and then refines ties over the zero-reduced-cost edge
//! graph so that equal-cost optima resolve to the lexicographically smallest
//! assignment vector. [`solve_assignment_bruteforce`] enumerates injective
//! maps as the oracle.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sysmodel::{ChannelRealization, SystemConfig, TrafficMatrix};

/// Weighted link-to-subcarrier problem. Rows follow the active links in
/// row-major `(source, target)` order; entries are joules, with infinity
/// marking unusable zero-rate pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentProblem<T> {
    pub links: Vec<(usize, usize)>,
    /// `weights[row][m]`, one row per active link.
    pub weights: Vec<Vec<T>>,
    pub num_subcarriers: usize,
}

/// A complete matching: one subcarrier per active link.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentResult<T> {
    /// Chosen subcarrier per link, parallel to the problem's link list.
    pub assigned: Vec<usize>,
    /// Sum of the chosen edge weights, joules.
    pub total_cost: T,
}

/// Builds the assignment problem for every link with nonzero traffic.
/// Zero-traffic links need no subcarrier and are omitted.
pub fn build_assignment<T: Scalar>(
    traffic: &TrafficMatrix<T>,
    channel: &ChannelRealization<T>,
    cfg: &SystemConfig<T>,
) -> Result<AssignmentProblem<T>> {
    let links = traffic.active_links();
    let m = cfg.num_subcarriers;
    if links.len() > m {
        return Err(Error::CapacityExceeded { links: links.len(), subcarriers: m });
    }
    let mut weights = Vec::with_capacity(links.len());
    for &(i, j) in &links {
        let bits = traffic.bits_at(i, j);
        let row: Vec<T> = (0..m)
            .map(|s| {
                let rate = channel.rate(i, j, s);
                if rate > T::zero() {
                    cfg.tx_power_per_subcarrier * bits / rate
                } else {
                    T::infinity()
                }
            })
            .collect();
        weights.push(row);
    }
    Ok(AssignmentProblem { links, weights, num_subcarriers: m })
}

/// Augmenting-path Hungarian solver on a square matrix. Returns the matched
/// column per row and the dual potentials `(u, v)`.
fn hungarian_square<T: Scalar>(w: &[Vec<T>]) -> (Vec<usize>, Vec<T>, Vec<T>) {
    let n = w.len();
    // 1-indexed internals with column 0 as the virtual start.
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); n + 1];
    let mut matched_row = vec![0usize; n + 1]; // column -> row (1-indexed, 0 = free)
    let mut way = vec![0usize; n + 1];

    for row in 1..=n {
        matched_row[0] = row;
        let mut j0 = 0usize;
        let mut min_slack = vec![T::infinity(); n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = T::infinity();
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = w[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < min_slack[j] {
                    min_slack[j] = cur;
                    way[j] = j0;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![0usize; n];
    for j in 1..=n {
        row_to_col[matched_row[j] - 1] = j - 1;
    }
    let u_out = u[1..].to_vec();
    let v_out = v[1..].to_vec();
    (row_to_col, u_out, v_out)
}

/// Augmenting step of Kuhn's matching over the tight-edge graph, skipping
/// pinned columns.
fn try_augment(
    row: usize,
    tight: &[Vec<usize>],
    pinned_col: &[bool],
    visited: &mut [bool],
    row_to_col: &mut [Option<usize>],
    col_to_row: &mut [Option<usize>],
) -> bool {
    for &col in &tight[row] {
        if pinned_col[col] || visited[col] {
            continue;
        }
        visited[col] = true;
        let occupant = col_to_row[col];
        let free = match occupant {
            None => true,
            Some(other) => try_augment(other, tight, pinned_col, visited, row_to_col, col_to_row),
        };
        if free {
            row_to_col[row] = Some(col);
            col_to_row[col] = Some(row);
            return true;
        }
    }
    false
}

/// Globally optimal matching of active links to subcarriers.
///
/// Among equal-cost optima the lexicographically smallest assignment vector
/// is returned: after the Hungarian pass the duals are tightened so matched
/// edges have reduced cost exactly zero, and links are then pinned in order
/// to their smallest zero-reduced-cost subcarrier that still extends to a
/// complete matching of tight edges.
pub fn solve_assignment<T: Scalar>(problem: &AssignmentProblem<T>) -> Result<AssignmentResult<T>> {
    let n_links = problem.links.len();
    let m = problem.num_subcarriers;
    if n_links == 0 {
        return Ok(AssignmentResult { assigned: Vec::new(), total_cost: T::zero() });
    }
    if n_links > m {
        return Err(Error::CapacityExceeded { links: n_links, subcarriers: m });
    }
    for row in &problem.weights {
        debug_assert_eq!(row.len(), m);
        if row.iter().all(|&w| !w.is_finite()) {
            return Err(Error::InfeasibleAssignment);
        }
    }

    // Replace the infinite sentinels by a finite value larger than any
    // all-finite matching, and pad with zero-weight dummy rows to square.
    let mut finite_sum = T::zero();
    for row in &problem.weights {
        for &w in row {
            if w.is_finite() {
                finite_sum += w;
            }
        }
    }
    let big = finite_sum + T::one();
    let mut padded = vec![vec![T::zero(); m]; m];
    for (r, row) in problem.weights.iter().enumerate() {
        for (c, &w) in row.iter().enumerate() {
            padded[r][c] = if w.is_finite() { w } else { big };
        }
    }

    let (hungarian_cols, u, mut v) = hungarian_square(&padded);

    // Tighten the duals: recompute v so matched edges have reduced cost
    // exactly 0.0, making the tight-edge test robust for genuine ties.
    for (r, &c) in hungarian_cols.iter().enumerate() {
        v[c] = padded[r][c] - u[r];
    }
    let mut tight = vec![Vec::new(); m];
    for r in 0..m {
        for c in 0..m {
            if padded[r][c] - u[r] - v[c] <= T::zero() {
                tight[r].push(c);
            }
        }
    }

    // Lexicographic refinement over the tight graph. The Hungarian matching
    // itself is all-tight, so every pin attempt has a fallback.
    let mut row_to_col: Vec<Option<usize>> = hungarian_cols.iter().map(|&c| Some(c)).collect();
    let mut col_to_row: Vec<Option<usize>> = vec![None; m];
    for (r, &c) in hungarian_cols.iter().enumerate() {
        col_to_row[c] = Some(r);
    }
    let mut pinned_col = vec![false; m];
    for link in 0..n_links {
        let current = row_to_col[link].expect("matching is perfect");
        for &cand in &tight[link] {
            if cand >= current {
                break;
            }
            if pinned_col[cand] {
                continue;
            }
            // Tentatively free the candidate column and rematch its occupant.
            let occupant = col_to_row[cand].expect("square matching covers all columns");
            let saved_rows = row_to_col.clone();
            let saved_cols = col_to_row.clone();
            row_to_col[link] = Some(cand);
            col_to_row[cand] = Some(link);
            row_to_col[occupant] = None;
            col_to_row[current] = None;
            let mut visited = vec![false; m];
            visited[cand] = true;
            if try_augment(occupant, &tight, &pinned_col, &mut visited, &mut row_to_col, &mut col_to_row) {
                break;
            }
            row_to_col = saved_rows;
            col_to_row = saved_cols;
        }
        pinned_col[row_to_col[link].unwrap()] = true;
    }

    let assigned: Vec<usize> = (0..n_links).map(|r| row_to_col[r].unwrap()).collect();
    let mut total = T::zero();
    for (r, &c) in assigned.iter().enumerate() {
        let w = problem.weights[r][c];
        if !w.is_finite() {
            return Err(Error::InfeasibleAssignment);
        }
        total += w;
    }
    Ok(AssignmentResult { assigned, total_cost: total })
}

/// Exhaustive oracle: enumerates every injective link-to-subcarrier map in
/// lexicographic order and keeps the strictly cheapest, so equal-cost optima
/// resolve to the lexicographically smallest vector. Guarded to 7 links and
/// 8 subcarriers.
pub fn solve_assignment_bruteforce<T: Scalar>(
    problem: &AssignmentProblem<T>,
) -> Result<AssignmentResult<T>> {
    let n_links = problem.links.len();
    let m = problem.num_subcarriers;
    if n_links > 7 || m > 8 {
        return Err(Error::EnumerationGuard(format!(
            "brute-force assignment supports up to 7 links and 8 subcarriers, got {n_links} x {m}"
        )));
    }
    if n_links == 0 {
        return Ok(AssignmentResult { assigned: Vec::new(), total_cost: T::zero() });
    }
    if n_links > m {
        return Err(Error::CapacityExceeded { links: n_links, subcarriers: m });
    }

    let mut best: Option<(T, Vec<usize>)> = None;
    let mut chosen = vec![0usize; n_links];
    let mut used = vec![false; m];

    fn recurse<T: Scalar>(
        row: usize,
        problem: &AssignmentProblem<T>,
        chosen: &mut Vec<usize>,
        used: &mut Vec<bool>,
        best: &mut Option<(T, Vec<usize>)>,
    ) {
        let n_links = problem.links.len();
        if row == n_links {
            let mut total = T::zero();
            for (r, &c) in chosen.iter().enumerate() {
                total += problem.weights[r][c];
            }
            if !total.is_finite() {
                return;
            }
            let better = match best {
                None => true,
                Some((cost, _)) => total < *cost,
            };
            if better {
                *best = Some((total, chosen.clone()));
            }
            return;
        }
        for c in 0..problem.num_subcarriers {
            if used[c] || !problem.weights[row][c].is_finite() {
                continue;
            }
            used[c] = true;
            chosen[row] = c;
            recurse(row + 1, problem, chosen, used, best);
            used[c] = false;
        }
    }

    recurse(0, problem, &mut chosen, &mut used, &mut best);
    match best {
        Some((total_cost, assigned)) => Ok(AssignmentResult { assigned, total_cost }),
        None => Err(Error::InfeasibleAssignment),
    }
}
