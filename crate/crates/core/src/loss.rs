//! Convex margin losses.

/// A margin loss `ℓ(y·f(x))` with its subgradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Loss {
    /// `max(0, 1 − m)`, Lipschitz constant 1.
    #[default]
    Hinge,
}

impl Loss {
    pub fn value(&self, margin: f64) -> f64 {
        match self {
            Loss::Hinge => (1.0 - margin).max(0.0),
        }
    }

    /// Subgradient at `margin`. At the hinge kink (`margin == 1`) this is 0.
    pub fn derivative(&self, margin: f64) -> f64 {
        match self {
            Loss::Hinge => {
                if margin < 1.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            Loss::Hinge => 1.0,
        }
    }
}
