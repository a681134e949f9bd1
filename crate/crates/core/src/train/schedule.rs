use crate::error::{Error, Result};

/// Per-epoch log-linear decay from `lr_start` (epoch 0) to `lr_end` (epoch `total_epochs`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrSchedule {
    pub lr_start: f64,
    pub lr_end: f64,
    pub total_epochs: usize,
}

impl LrSchedule {
    pub fn new(lr_start: f64, lr_end: f64, total_epochs: usize) -> Result<Self> {
        if !(lr_end > 0.0 && lr_end <= lr_start && lr_start.is_finite()) {
            return Err(Error::Config(format!(
                "learning rates must satisfy 0 < lr_end <= lr_start (got {lr_end}, {lr_start})"
            )));
        }
        if total_epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        Ok(Self {
            lr_start,
            lr_end,
            total_epochs,
        })
    }
}

/// `lr_start * (lr_end / lr_start)^(epoch / total_epochs)`; both endpoints are exact.
pub fn lr_at(schedule: &LrSchedule, epoch: usize) -> Result<f64> {
    let t = schedule.total_epochs;
    if epoch > t {
        return Err(Error::Argument(format!("epoch {epoch} outside [0, {t}]")));
    }
    if epoch == t {
        return Ok(schedule.lr_end);
    }
    let frac = epoch as f64 / t as f64;
    Ok(schedule.lr_start * (schedule.lr_end / schedule.lr_start).powf(frac))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_endpoints_and_midpoint() {
        let s = LrSchedule::new(1e-1, 1e-4, 50).unwrap();
        assert_eq!(lr_at(&s, 0).unwrap(), 0.1);
        assert_eq!(lr_at(&s, 50).unwrap(), 1e-4);
        let mid = lr_at(&s, 25).unwrap();
        assert!((mid - 0.1 * 1e-3f64.sqrt()).abs() < 1e-15);
        assert!((mid - 3.16228e-3).abs() < 1e-8);
        assert!(matches!(lr_at(&s, 51), Err(Error::Argument(_))));
    }

    #[test]
    fn invalid_schedules() {
        assert!(LrSchedule::new(1e-4, 1e-1, 10).is_err());
        assert!(LrSchedule::new(0.1, 0.0, 10).is_err());
        assert!(LrSchedule::new(0.1, 0.01, 0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn strictly_decreasing_with_exact_endpoints(
            start_exp in -4.0f64..0.0,
            ratio_exp in 0.1f64..4.0,
            total in 1usize..200,
        ) {
            let start = 10f64.powf(start_exp);
            let end = start * 10f64.powf(-ratio_exp);
            let s = LrSchedule::new(start, end, total).unwrap();
            prop_assert_eq!(lr_at(&s, 0).unwrap(), start);
            prop_assert_eq!(lr_at(&s, total).unwrap(), end);
            for e in 0..total {
                prop_assert!(lr_at(&s, e + 1).unwrap() < lr_at(&s, e).unwrap());
            }
        }
    }
}
