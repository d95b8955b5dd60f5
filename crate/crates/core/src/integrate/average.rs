use super::Trajectory;
use crate::error::{Error, Result};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }

    fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.carry);
    }
}

/// Trapezoidal time integral of a sampled signal, with compensated summation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AverageAccumulator {
    integral: CompensatedSum,
    first: Option<f64>,
    last: Option<(f64, f64)>,
    samples: usize,
}

impl AverageAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds the sample `value` at time `t`; times must increase.
    pub fn push(&mut self, t: f64, value: f64) {
        if let Some((t0, v0)) = self.last {
            self.integral.add(0.5 * (v0 + value) * (t - t0));
        } else {
            self.first = Some(t);
        }
        self.last = Some((t, value));
        self.samples += 1;
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn elapsed(&self) -> f64 {
        match (self.first, self.last) {
            (Some(a), Some((b, _))) => b - a,
            _ => 0.0,
        }
    }

    pub fn integral(&self) -> f64 {
        self.integral.value()
    }

    /// `(1/T) ∫ f dt`; `None` until two samples span a positive interval.
    pub fn average(&self) -> Option<f64> {
        let elapsed = self.elapsed();
        (elapsed > 0.0).then(|| self.integral() / elapsed)
    }

    /// Concatenates a segment that starts where `self` ends.
    pub fn merge(&mut self, other: &AverageAccumulator) {
        match (self.last, other.first) {
            (None, _) => *self = other.clone(),
            (_, None) => {}
            (Some(_), Some(_)) => {
                self.integral.merge(&other.integral);
                self.last = other.last;
                self.samples += other.samples.saturating_sub(1);
            }
        }
    }
}

/// Running mean and variance with Chan's parallel merge.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, v: f64) {
        self.count += 1;
        let delta = v - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (v - self.mean);
    }

    pub fn merge(&mut self, other: &Welford) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_err(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// `(1/T) ∫₀ᵀ f(x(t)) dt` by the trapezoidal rule over the recorded samples.
pub fn time_average(traj: &Trajectory, f: impl Fn(&[f64]) -> f64) -> Result<f64> {
    time_average_window(traj, f, f64::NEG_INFINITY)
}

/// Time average over samples with `t >= t_start`, normalized by the span of
/// those samples.
pub fn time_average_window(
    traj: &Trajectory,
    f: impl Fn(&[f64]) -> f64,
    t_start: f64,
) -> Result<f64> {
    if let Some(reason) = &traj.abort {
        return Err(Error::Aborted(reason.to_string()));
    }
    let mut acc = AverageAccumulator::new();
    for (t, x) in traj.times.iter().zip(&traj.states) {
        if *t >= t_start {
            acc.push(*t, f(x));
        }
    }
    acc.average().ok_or(Error::EmptyTrajectory)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::RunMetadata;

    #[test]
    fn constant_average_is_exact() {
        let mut acc = AverageAccumulator::new();
        let mut t = 0.0;
        for k in 0..10_000 {
            acc.push(t, 0.7);
            t += 0.001 * (1.0 + (k % 7) as f64);
        }
        let avg = acc.average().unwrap();
        assert!(((avg - 0.7) / 0.7).abs() < 1e-14, "{avg}");
    }

    #[test]
    fn linear_signal_is_integrated_exactly() {
        let mut acc = AverageAccumulator::new();
        for k in 0..=100 {
            let t = k as f64 * 0.1;
            acc.push(t, 3.0 * t);
        }
        assert!((acc.average().unwrap() - 15.0).abs() < 1e-12);
    }

    #[test]
    fn merge_of_segments_equals_whole() {
        let samples: Vec<(f64, f64)> = (0..=200).map(|k| (k as f64 * 0.05, (k as f64).sin())).collect();
        let mut whole = AverageAccumulator::new();
        samples.iter().for_each(|(t, v)| whole.push(*t, *v));
        let mut left = AverageAccumulator::new();
        let mut right = AverageAccumulator::new();
        samples[..=100].iter().for_each(|(t, v)| left.push(*t, *v));
        samples[100..].iter().for_each(|(t, v)| right.push(*t, *v));
        left.merge(&right);
        assert!((left.average().unwrap() - whole.average().unwrap()).abs() < 1e-15);
        assert_eq!(left.samples(), whole.samples());
    }

    #[test]
    fn welford_merge_matches_sequential() {
        let data: Vec<f64> = (0..50).map(|k| (k as f64 * 0.37).cos() * 3.0).collect();
        let mut all = Welford::default();
        data.iter().for_each(|v| all.push(*v));
        let mut a = Welford::default();
        let mut b = Welford::default();
        data[..17].iter().for_each(|v| a.push(*v));
        data[17..].iter().for_each(|v| b.push(*v));
        a.merge(&b);
        assert_eq!(a.count, 50);
        assert!((a.mean - all.mean).abs() < 1e-14);
        assert!((a.variance() - all.variance()).abs() < 1e-12);
    }

    #[test]
    fn aborted_and_empty_trajectories_are_rejected() {
        let mut traj = Trajectory::new(vec!["x".into()], RunMetadata::default());
        assert_eq!(time_average(&traj, |x| x[0]), Err(Error::EmptyTrajectory));
        traj.push(0.0, &[1.0]);
        assert_eq!(time_average(&traj, |x| x[0]), Err(Error::EmptyTrajectory));
        traj.push(1.0, &[1.0]);
        assert_eq!(time_average(&traj, |x| x[0]), Ok(1.0));
        traj.abort = Some(crate::integrate::AbortReason::NonFinite { time: 1.0, component: 0 });
        assert!(matches!(time_average(&traj, |x| x[0]), Err(Error::Aborted(_))));
    }
}
