//! Bandit scores and widening / refinement predicates.

/// UCB score `q + c sqrt(ln N(h) / N(ha))`; unvisited actions score `+inf`.
pub fn ucb(q: f64, n_ha: u64, parent_n: u64, c: f64) -> f64 {
    if n_ha == 0 {
        return f64::INFINITY;
    }
    q + exploration(n_ha, parent_n, c)
}

#[inline]
pub fn exploration(n_ha: u64, parent_n: u64, c: f64) -> f64 {
    if c == 0.0 {
        return 0.0;
    }
    c * ((parent_n as f64).ln() / n_ha as f64).sqrt()
}

/// Lower and upper UCB from `Q^x + lambda * [LB, UB]`.
pub fn ucb_bounds(q_x: f64, lb: f64, ub: f64, n_ha: u64, parent_n: u64, c: f64, lambda: f64) -> (f64, f64) {
    if n_ha == 0 {
        return (f64::INFINITY, f64::INFINITY);
    }
    let e = exploration(n_ha, parent_n, c);
    if lambda == 0.0 {
        let v = q_x + e;
        return (v, v);
    }
    (q_x + lambda * lb + e, q_x + lambda * ub + e)
}

/// Observation progressive widening: may `ha` open another observation branch?
pub fn dpw_allows_new_child(n_ha: u64, n_children: usize, k_o: f64, alpha_o: f64) -> bool {
    (n_children as f64) <= k_o * (n_ha as f64).powf(alpha_o)
}

/// Refinement test for a belief node at depth `d_node` inside the subtree of
/// a belief-action node at depth `d` whose bound gap `g` triggered resimplification:
/// `gamma^(d - d_node) * (upper - lower) > g / d`.
pub fn refine_condition(upper: f64, lower: f64, d: usize, d_node: usize, g: f64, gamma: f64) -> bool {
    debug_assert!(d >= 1 && d_node <= d);
    gamma.powi((d - d_node) as i32) * (upper - lower) > g / d as f64
}
