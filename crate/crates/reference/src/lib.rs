//! Published figures for the AttoNet family and the tolerances the
//! acceptance suite holds the implementation to.

/// Variant order used by every table here: A, B, C, D.
pub const VARIANTS: [&str; 4] = ["attonet-a", "attonet-b", "attonet-c", "attonet-d"];

/// Total parameters, millions.
pub const PARAMS_M: [f64; 4] = [2.97, 1.87, 1.06, 0.32];

/// Total mult-adds, millions.
pub const MULT_ADDS_M: [f64; 4] = [424.8, 277.5, 139.9, 57.5];

/// Top-1 accuracy, percent.
pub const TOP1: [f64; 4] = [73.00, 71.10, 69.60, 66.30];

/// One row of the results table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResultRow {
    pub model: &'static str,
    pub top1: f64,
    pub mult_adds_m: f64,
    pub params_m: f64,
    pub netscore: f64,
}

pub const RESULTS: [ResultRow; 7] = [
    row("MobileNet-V1", 64.52, 567.5, 3.26, 69.71),
    row("MobileNet-V2", 68.68, 299.7, 2.29, 75.11),
    row("ShuffleNet-V2", 65.00, 140.1, 1.32, 79.85),
    row("AttoNet-A", 73.00, 424.8, 2.97, 73.53),
    row("AttoNet-B", 71.10, 277.5, 1.87, 76.93),
    row("AttoNet-C", 69.60, 139.9, 1.06, 81.99),
    row("AttoNet-D", 66.30, 57.5, 0.32, 90.21),
];

const fn row(model: &'static str, top1: f64, mult_adds_m: f64, params_m: f64, netscore: f64) -> ResultRow {
    ResultRow {
        model,
        top1,
        mult_adds_m,
        params_m,
        netscore,
    }
}

/// Output-size column: stem conv, stem pool, after each of the 16 modules,
/// after the head pool.
pub const OUTPUT_EXTENTS: [usize; 19] = [112, 56, 56, 56, 56, 28, 28, 28, 28, 14, 14, 14, 14, 14, 14, 7, 7, 7, 1];

/// Relative tolerance on parameter and mult-add totals.
pub const COUNT_TOLERANCE: f64 = 0.05;
/// Absolute tolerance on NetScore points.
pub const NETSCORE_TOLERANCE: f64 = 0.05;
/// Max absolute difference between engine and oracle convolutions.
pub const CONV_TOLERANCE: f32 = 1e-5;
/// Allowed deviation of a class distribution's sum from 1.
pub const SUM_TOLERANCE: f64 = 1e-5;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_agree() {
        for (i, r) in RESULTS[3..].iter().enumerate() {
            assert_eq!(r.params_m, PARAMS_M[i]);
            assert_eq!(r.mult_adds_m, MULT_ADDS_M[i]);
            assert_eq!(r.top1, TOP1[i]);
        }
    }
}
