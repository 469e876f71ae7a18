//! Linear-programming optimum of small l1-analysis problems.

use minilp::{ComparisonOp, OptimizationDirection, Problem};

/// Optimum of `min sum_m ||A_m x_m||_1` subject to `x_1 + .. + x_N = y` on the
/// pixels flagged in `known`. Each `A_m` is row-major `rows_m x len` and real;
/// the l1 norm is split as `|A x| <= t`.
pub fn l1_analysis_value(dicts: &[(usize, Vec<f64>)], len: usize, y: &[f64], known: &[bool]) -> f64 {
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let xs: Vec<Vec<_>> = dicts
        .iter()
        .map(|_| (0..len).map(|_| lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY))).collect())
        .collect();
    for ((rows, a), x) in dicts.iter().zip(&xs) {
        for i in 0..*rows {
            let t = lp.add_var(1.0, (0.0, f64::INFINITY));
            let row = &a[i * len..(i + 1) * len];
            let mut plus: Vec<_> = x.iter().zip(row).filter(|(_, v)| **v != 0.0).map(|(&v, &c)| (v, c)).collect();
            let mut minus: Vec<_> = plus.iter().map(|&(v, c)| (v, -c)).collect();
            plus.push((t, -1.0));
            minus.push((t, -1.0));
            lp.add_constraint(&plus[..], ComparisonOp::Le, 0.0);
            lp.add_constraint(&minus[..], ComparisonOp::Le, 0.0);
        }
    }
    for p in (0..len).filter(|&p| known[p]) {
        let terms: Vec<_> = xs.iter().map(|x| (x[p], 1.0)).collect();
        lp.add_constraint(&terms[..], ComparisonOp::Eq, y[p]);
    }
    lp.solve().expect("l1 analysis LP is feasible and bounded").objective()
}
