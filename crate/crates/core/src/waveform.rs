//! Piecewise-linear bias schedules Δ(t).

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment<T> {
    pub duration: T,
    pub delta_start: T,
    pub delta_end: T,
}

impl<T: Real> Segment<T> {
    pub fn ramp(duration: T, delta_start: T, delta_end: T) -> Self {
        Self {
            duration,
            delta_start,
            delta_end,
        }
    }

    pub fn hold(duration: T, delta: T) -> Self {
        Self::ramp(duration, delta, delta)
    }

    pub fn slope(&self) -> T {
        (self.delta_end - self.delta_start) / self.duration
    }
}

/// Continuous piecewise-linear Δ(t) on `[0, total_duration]`, time measured
/// from the start of the protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasWaveform<T> {
    segments: Vec<Segment<T>>,
    /// Start time of each segment.
    starts: Vec<T>,
    total_duration: T,
}

impl<T: Real> BiasWaveform<T> {
    /// Builds a waveform; every segment must have positive duration and start
    /// where the previous one ended. Zero-length segments are dropped.
    pub fn new(segments: Vec<Segment<T>>) -> Result<Self> {
        let segments: Vec<_> = segments
            .into_iter()
            .filter(|s| s.duration != T::zero())
            .collect();
        if segments.is_empty() {
            return Err(Error::Domain("waveform has no segments".into()));
        }
        let mut starts = Vec::with_capacity(segments.len());
        let mut t = T::zero();
        for (i, s) in segments.iter().enumerate() {
            if !(s.duration > T::zero()) || !s.duration.is_finite() {
                return Err(Error::Domain(format!(
                    "segment {i} has non-positive duration {}",
                    s.duration
                )));
            }
            if i > 0 && segments[i - 1].delta_end != s.delta_start {
                return Err(Error::Domain(format!(
                    "segment {i} starts at {} but previous ends at {}",
                    s.delta_start,
                    segments[i - 1].delta_end
                )));
            }
            starts.push(t);
            t += s.duration;
        }
        Ok(Self {
            segments,
            starts,
            total_duration: t,
        })
    }

    /// Single linear ramp.
    pub fn ramp(duration: T, delta_start: T, delta_end: T) -> Result<Self> {
        Self::new(vec![Segment::ramp(duration, delta_start, delta_end)])
    }

    /// Constant bias.
    pub fn constant(duration: T, delta: T) -> Result<Self> {
        Self::new(vec![Segment::hold(duration, delta)])
    }

    pub fn segments(&self) -> &[Segment<T>] {
        &self.segments
    }

    /// Start time of every segment, plus the end time.
    pub fn boundaries(&self) -> Vec<T> {
        let mut b = self.starts.clone();
        b.push(self.total_duration);
        b
    }

    pub fn total_duration(&self) -> T {
        self.total_duration
    }

    pub fn delta_initial(&self) -> T {
        self.segments[0].delta_start
    }

    pub fn delta_final(&self) -> T {
        self.segments[self.segments.len() - 1].delta_end
    }

    /// Index of the segment containing `t`; at a boundary the later segment.
    fn locate(&self, t: T) -> usize {
        let i = self.starts.partition_point(|&s| s <= t);
        i.saturating_sub(1)
    }

    /// `(Δ(t), dΔ/dt)`. At a segment boundary the right-hand slope is
    /// returned (the last segment's slope at the final instant).
    pub fn eval(&self, t: T) -> Result<(T, T)> {
        if !(t >= T::zero() && t <= self.total_duration) {
            return Err(Error::Domain(format!(
                "t = {t} outside waveform domain [0, {}]",
                self.total_duration
            )));
        }
        Ok(self.eval_unchecked(t))
    }

    /// [`eval`](Self::eval) with `t` clamped to the domain.
    pub fn eval_unchecked(&self, t: T) -> (T, T) {
        let t = t.max(T::zero()).min(self.total_duration);
        let i = self.locate(t);
        let s = &self.segments[i];
        let tau = t - self.starts[i];
        if tau >= s.duration {
            return (s.delta_end, s.slope());
        }
        let frac = tau / s.duration;
        (
            s.delta_start + (s.delta_end - s.delta_start) * frac,
            s.slope(),
        )
    }
}

/// Ramp `delta_min → delta_max` over `t_s`, hold at `delta_max` for
/// `t_hold`, ramp back over `t_s`.
pub fn hysteresis_protocol<T: Real>(
    delta_min: T,
    delta_max: T,
    t_s: T,
    t_hold: T,
) -> Result<BiasWaveform<T>> {
    if !(t_s > T::zero()) || !(t_hold >= T::zero()) {
        return Err(Error::Domain(
            "hysteresis protocol needs t_s > 0 and t_hold >= 0".into(),
        ));
    }
    BiasWaveform::new(vec![
        Segment::ramp(t_s, delta_min, delta_max),
        Segment::hold(t_hold, delta_max),
        Segment::ramp(t_s, delta_max, delta_min),
    ])
}

/// Region labels of the memory protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MemoryRegion {
    /// Write: 0 → +Δ, hold, +Δ → 0.
    I,
    /// Hold at zero bias.
    II,
    /// Write: 0 → −Δ, hold, −Δ → 0.
    III,
    /// Hold at zero bias.
    IV,
}

impl MemoryRegion {
    pub const ALL: [MemoryRegion; 4] = [Self::I, Self::II, Self::III, Self::IV];

    pub fn label(self) -> &'static str {
        match self {
            Self::I => "I",
            Self::II => "II",
            Self::III => "III",
            Self::IV => "IV",
        }
    }
}

/// Write/hold protocol for a '1' then a '0' bit, plus region boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryProtocol<T> {
    pub waveform: BiasWaveform<T>,
    /// `[start, end)` of each region, in [`MemoryRegion::ALL`] order.
    pub regions: [(T, T); 4],
}

impl<T: Real> MemoryProtocol<T> {
    pub fn region_at(&self, t: T) -> MemoryRegion {
        for (k, &(_, end)) in self.regions.iter().enumerate() {
            if t < end {
                return MemoryRegion::ALL[k];
            }
        }
        MemoryRegion::IV
    }
}

/// Memory protocol with ramps of `t_s`, a write hold of `t_write` at each
/// extreme, and zero-bias holds of `t_hold` in regions II and IV.
pub fn memory_protocol<T: Real>(
    delta_amp: T,
    t_s: T,
    t_write: T,
    t_hold: T,
) -> Result<MemoryProtocol<T>> {
    if !(delta_amp >= T::zero()) || !(t_s > T::zero()) || !(t_hold > T::zero()) {
        return Err(Error::Domain(
            "memory protocol needs delta_amp >= 0, t_s > 0, t_hold > 0".into(),
        ));
    }
    if !(t_write >= T::zero()) {
        return Err(Error::Domain("write hold must be non-negative".into()));
    }
    let z = T::zero();
    let a = delta_amp;
    let waveform = BiasWaveform::new(vec![
        Segment::ramp(t_s, z, a),
        Segment::hold(t_write, a),
        Segment::ramp(t_s, a, z),
        Segment::hold(t_hold, z),
        Segment::ramp(t_s, z, -a),
        Segment::hold(t_write, -a),
        Segment::ramp(t_s, -a, z),
        Segment::hold(t_hold, z),
    ])?;
    let write = t_s + t_write + t_s;
    let e1 = write;
    let e2 = e1 + t_hold;
    let e3 = e2 + write;
    let e4 = e3 + t_hold;
    Ok(MemoryProtocol {
        waveform,
        regions: [(z, e1), (e1, e2), (e2, e3), (e3, e4)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ramp_midpoint_and_start() {
        let ts = 1000.0;
        let w = BiasWaveform::ramp(ts, -25.0, 25.0).unwrap();
        assert_eq!(w.eval(ts / 2.0).unwrap(), (0.0, 50.0 / ts));
        assert_eq!(w.eval(0.0).unwrap(), (-25.0, 50.0 / ts));
        assert_eq!(w.eval(ts).unwrap(), (25.0, 50.0 / ts));
    }

    #[test]
    fn hold_has_zero_slope() {
        let w = BiasWaveform::constant(10.0, 3.0).unwrap();
        assert_eq!(w.eval(4.0).unwrap(), (3.0, 0.0));
    }

    #[test]
    fn out_of_range_time_is_domain_error() {
        let w = BiasWaveform::ramp(1.0, 0.0, 1.0).unwrap();
        assert!(matches!(w.eval(-1e-9), Err(Error::Domain(_))));
        assert!(matches!(w.eval(1.0 + 1e-9), Err(Error::Domain(_))));
        assert!(w.eval(f64::NAN).is_err());
    }

    #[test]
    fn discontinuous_or_empty_rejected() {
        assert!(BiasWaveform::<f64>::new(vec![]).is_err());
        assert!(BiasWaveform::new(vec![
            Segment::ramp(1.0, 0.0, 1.0),
            Segment::ramp(1.0, 2.0, 3.0)
        ])
        .is_err());
        assert!(BiasWaveform::new(vec![Segment::ramp(-1.0, 0.0, 1.0)]).is_err());
    }

    #[test]
    fn boundary_returns_right_hand_slope() {
        let w = hysteresis_protocol(-25.0, 25.0, 100.0, 50.0).unwrap();
        assert_eq!(w.eval(100.0).unwrap(), (25.0, 0.0));
        assert_eq!(w.eval(150.0).unwrap(), (25.0, -0.5));
    }

    #[test]
    fn hysteresis_default_parameters() {
        let td = 10.0;
        let w = hysteresis_protocol(-25.0, 25.0, 1000.0, 10.0 * td).unwrap();
        assert_eq!(w.segments().len(), 3);
        assert_eq!(w.total_duration(), 2000.0 + 10.0 * td);
        // Without a hold the protocol is a triangle wave.
        let tri = hysteresis_protocol(-25.0, 25.0, 1000.0, 0.0).unwrap();
        assert_eq!(tri.segments().len(), 2);
        assert_eq!(tri.eval(1000.0).unwrap().0, 25.0);
    }

    #[test]
    fn memory_regions() {
        let m = memory_protocol(25.0, 1000.0, 100.0, 100.0).unwrap();
        let w = &m.waveform;
        assert_eq!(w.segments().len(), 8);
        assert_eq!(w.eval(m.regions[1].0).unwrap().0, 0.0);
        assert_eq!(w.eval(m.regions[3].0).unwrap().0, 0.0);
        assert_eq!(w.eval(1000.0).unwrap().0, 25.0);
        assert_eq!(w.eval(m.regions[2].0 + 1000.0).unwrap().0, -25.0);
        assert_eq!(m.regions[3].1, w.total_duration());
        assert_eq!(m.region_at(0.0), MemoryRegion::I);
        assert_eq!(m.region_at(m.regions[1].0), MemoryRegion::II);
        assert_eq!(m.region_at(w.total_duration()), MemoryRegion::IV);

        let flat = memory_protocol(0.0, 1000.0, 100.0, 100.0).unwrap();
        for k in 0..=100 {
            let t = flat.waveform.total_duration() * k as f64 / 100.0;
            assert_eq!(flat.waveform.eval(t).unwrap(), (0.0, 0.0));
        }
    }

    proptest! {
        #[test]
        fn continuity_and_slope_integral(
            deltas in prop::collection::vec(-30.0..30.0f64, 2..8),
            durs in prop::collection::vec(0.1..100.0f64, 7),
        ) {
            let segs: Vec<_> = deltas
                .windows(2)
                .zip(&durs)
                .map(|(d, &t)| Segment::ramp(t, d[0], d[1]))
                .collect();
            let w = BiasWaveform::new(segs).unwrap();
            let b = w.boundaries();
            for (i, s) in w.segments().iter().enumerate() {
                let (t0, t1) = (b[i], b[i + 1]);
                let left = s.delta_start + s.slope() * (t1 - t0);
                prop_assert!((left - s.delta_end).abs() < 1e-9);
                if i + 1 < w.segments().len() {
                    let right = w.eval(t1).unwrap().0;
                    prop_assert!((right - s.delta_end).abs() < 1e-12);
                    let just_before = w.eval(t1 - 1e-9 * s.duration).unwrap().0;
                    prop_assert!((just_before - right).abs() < 1e-6);
                }
                prop_assert_eq!(
                    s.slope() * s.duration,
                    (s.delta_end - s.delta_start) / s.duration * s.duration
                );
            }
        }

        #[test]
        fn triangle_is_time_symmetric(ts in 1.0..1000.0f64, frac in 0.0..1.0f64, a in 1.0..30.0f64) {
            let w = hysteresis_protocol(-a, a, ts, 0.0).unwrap();
            let total = w.total_duration();
            let t = frac * total;
            let fwd = w.eval(t).unwrap().0;
            let rev = w.eval(total - t).unwrap().0;
            prop_assert!((fwd - rev).abs() < 1e-9 * a);
        }
    }
}
