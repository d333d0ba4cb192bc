/// Relative slack admitted by every certified energy inequality.
pub const INEQUALITY_REL_TOL: f64 = 1e-8;

/// Outcome of checking `lhs ≤ rhs` up to [`INEQUALITY_REL_TOL`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`; negative values inside the tolerance still pass.
    pub slack: f64,
    pub pass: bool,
}

impl InequalityCheck {
    pub fn evaluate(lhs: f64, rhs: f64) -> Self {
        let slack = rhs - lhs;
        Self {
            lhs,
            rhs,
            slack,
            pass: lhs <= rhs + INEQUALITY_REL_TOL * rhs.abs().max(1.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_is_relative_above_one() {
        assert!(InequalityCheck::evaluate(0.0, 0.0).pass);
        assert!(InequalityCheck::evaluate(1e-9, 0.0).pass);
        assert!(!InequalityCheck::evaluate(1e-7, 0.0).pass);
        assert!(InequalityCheck::evaluate(100.0 + 5e-7, 100.0).pass);
        assert!(!InequalityCheck::evaluate(100.0 + 5e-6, 100.0).pass);
    }
}
