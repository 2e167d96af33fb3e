//! The budgeted pair process and its subgaussian tail bound.
//!
//! Each step emits a bit pair (x,y): both zero, both one, or a fair coin
//! deciding which single coordinate is one. The total Σ(x+y) is capped by a
//! budget ℓ, and the difference ΣX − ΣY then satisfies
//! P[ΣX − ΣY ≥ a] ≤ exp(−a²/2ℓ). The exponential here is the only
//! floating-point computation in the crate; comparisons against it carry
//! 1e−12 absolute slack.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rat::Rat;

/// Absolute slack for comparisons against the floating-point tail bound.
pub const TAIL_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepMode {
    BothZero,
    BothOne,
    CoinFlip,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DuplicateTrace {
    pub steps: Vec<(u8, u8, StepMode)>,
    pub budget: usize,
}

impl DuplicateTrace {
    /// Checks each step against its mode and the total against the budget.
    pub fn validate(&self) -> Result<()> {
        for (i, &(x, y, mode)) in self.steps.iter().enumerate() {
            let ok = match mode {
                StepMode::BothZero => (x, y) == (0, 0),
                StepMode::BothOne => (x, y) == (1, 1),
                StepMode::CoinFlip => x + y == 1,
            };
            if !ok {
                return Err(Error::input(format!("step {i}: bits ({x},{y}) break {mode:?}")));
            }
        }
        let total = self.total();
        if total > self.budget {
            return Err(Error::input(format!(
                "trace total {total} exceeds budget {}",
                self.budget
            )));
        }
        Ok(())
    }

    /// Σ(x+y) over all steps.
    pub fn total(&self) -> usize {
        self.steps.iter().map(|&(x, y, _)| (x + y) as usize).sum()
    }

    pub fn sum_x(&self) -> usize {
        self.steps.iter().map(|&(x, _, _)| x as usize).sum()
    }

    pub fn sum_y(&self) -> usize {
        self.steps.iter().map(|&(_, y, _)| y as usize).sum()
    }

    /// ΣX − ΣY.
    pub fn difference(&self) -> i64 {
        self.sum_x() as i64 - self.sum_y() as i64
    }
}

/// Σ(x+y) forced by a plan: 2 per BothOne, 1 per CoinFlip.
fn plan_total(plan: &[StepMode]) -> usize {
    plan.iter()
        .map(|mode| match mode {
            StepMode::BothZero => 0,
            StepMode::BothOne => 2,
            StepMode::CoinFlip => 1,
        })
        .sum()
}

fn check_plan(plan: &[StepMode], ell: usize) -> Result<()> {
    let total = plan_total(plan);
    if total > ell {
        return Err(Error::input(format!("plan total {total} exceeds budget {ell}")));
    }
    Ok(())
}

fn simulate_with_rng(plan: &[StepMode], ell: usize, rng: &mut impl Rng) -> DuplicateTrace {
    let steps = plan
        .iter()
        .map(|&mode| match mode {
            StepMode::BothZero => (0, 0, mode),
            StepMode::BothOne => (1, 1, mode),
            StepMode::CoinFlip => {
                if rng.gen_bool(0.5) {
                    (1, 0, mode)
                } else {
                    (0, 1, mode)
                }
            }
        })
        .collect();
    DuplicateTrace { steps, budget: ell }
}

/// Runs the plan once; coin flips are fair and independent per seed.
pub fn simulate(plan: &[StepMode], ell: usize, seed: u64) -> Result<DuplicateTrace> {
    check_plan(plan, ell)?;
    Ok(simulate_with_rng(plan, ell, &mut crate::rng::seeded(seed)))
}

/// The closed-form tail bound exp(−a²/(2ℓ)) on P[ΣX − ΣY ≥ a].
pub fn tail_bound(a: Rat, ell: usize) -> Result<f64> {
    if ell == 0 {
        return Err(Error::input("tail bound needs a positive budget"));
    }
    if a <= Rat::new(0, 1) {
        return Err(Error::input("tail bound needs a > 0"));
    }
    let af = *a.numer() as f64 / *a.denom() as f64;
    Ok((-af * af / (2.0 * ell as f64)).exp())
}

/// Fraction of traces with ΣX − ΣY ≥ a, as an exact rational.
///
/// Trial t draws from RNG stream t of `seed`, so results are independent of
/// the parallel schedule.
pub fn empirical_tail(
    plan: &[StepMode],
    ell: usize,
    a: Rat,
    trials: usize,
    seed: u64,
) -> Result<Rat> {
    if trials == 0 {
        return Err(Error::input("at least one trial required"));
    }
    check_plan(plan, ell)?;
    let hits = (0..trials as u64)
        .into_par_iter()
        .filter(|&t| {
            let mut rng = crate::rng::stream(seed, t);
            let trace = simulate_with_rng(plan, ell, &mut rng);
            Rat::from_integer(trace.difference()) >= a
        })
        .count();
    Ok(Rat::new(hits as i64, trials as i64))
}
