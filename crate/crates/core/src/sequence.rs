//! The confidence sequence `mu_hat_t +/- sigma_hat_t * c * b_t(m)` and the
//! sequential tests obtained by inverting it.
//!
//! Intervals are open and tests reject on the boundary, so for every `t` and
//! `mu0` exactly one of "`mu0` is covered" and "the test rejects" holds.

use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryShape;
use crate::error::{Error, Result};
use crate::estimators::StreamState;
use crate::quantiles::{CriticalValue, Sided};

/// One time step of the confidence sequence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalRecord {
    pub t: u64,
    pub mean: f64,
    pub sigma: f64,
    pub half_width: f64,
    pub lower: f64,
    pub upper: f64,
}

impl IntervalRecord {
    /// Whether `mu` lies in the open interval `(lower, upper)`.
    pub fn contains(&self, mu: f64) -> bool {
        self.lower < mu && mu < self.upper
    }

    pub fn is_trivial(&self) -> bool {
        self.half_width == f64::INFINITY
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    TwoSided,
    /// Alternative `mu_X > mu0`.
    Right,
    /// Alternative `mu_X < mu0`.
    Left,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestVerdict {
    pub t: u64,
    pub mu0: f64,
    pub direction: Direction,
    pub reject: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BatteryMode {
    RightOnly,
    LeftOnly,
    /// Right- and left-sided tests at every grid point, using the two-sided
    /// critical value.
    Both,
}

/// `sigma * c * b_t(m)`, or `+inf` during suppression or whenever a factor is
/// infinite.
fn half_width(state: &StreamState, shape: &BoundaryShape, c: f64) -> f64 {
    let t = state.t();
    if t <= state.l_m() {
        return f64::INFINITY;
    }
    let sigma = state.sigma_hat();
    let b = shape.width(state.m(), t);
    if sigma.is_infinite() || b.is_infinite() {
        f64::INFINITY
    } else {
        sigma * c * b
    }
}

fn require(c: &CriticalValue, sided: Sided) -> Result<()> {
    if c.sided != sided {
        return Err(Error::Usage(format!(
            "expected a {sided} critical value, got a {} one",
            c.sided
        )));
    }
    Ok(())
}

fn require_data(state: &StreamState) -> Result<()> {
    if state.t() == 0 {
        return Err(Error::Input("no observations yet".into()));
    }
    Ok(())
}

/// The interval at the current time of `state`.
pub fn interval(state: &StreamState, shape: &BoundaryShape, c: &CriticalValue) -> Result<IntervalRecord> {
    require(c, Sided::TwoSided)?;
    require_data(state)?;
    let hw = half_width(state, shape, c.value);
    let mean = state.mean();
    Ok(IntervalRecord {
        t: state.t(),
        mean,
        sigma: state.sigma_hat(),
        half_width: hw,
        lower: mean - hw,
        upper: mean + hw,
    })
}

/// Two-sided test of `mu_X = mu0`: rejects iff `|mu_hat - mu0| >= half_width`,
/// evaluated as `mu0` not in the open interval so the duality is exact in
/// floating point.
pub fn test_two_sided(state: &StreamState, shape: &BoundaryShape, c: &CriticalValue, mu0: f64) -> Result<TestVerdict> {
    let rec = interval(state, shape, c)?;
    Ok(TestVerdict {
        t: rec.t,
        mu0,
        direction: Direction::TwoSided,
        reject: !rec.contains(mu0),
    })
}

fn one_sided_reject(mean: f64, hw: f64, mu0: f64, direction: Direction) -> bool {
    match direction {
        Direction::Right => mean - mu0 >= hw,
        Direction::Left => mean - mu0 <= -hw,
        Direction::TwoSided => unreachable!("one-sided helper"),
    }
}

/// One-sided test against `mu_X > mu0` (`Right`) or `mu_X < mu0` (`Left`)
/// with a one-sided critical value.
pub fn test_one_sided(
    state: &StreamState,
    shape: &BoundaryShape,
    c_o: &CriticalValue,
    mu0: f64,
    direction: Direction,
) -> Result<TestVerdict> {
    require(c_o, Sided::OneSided)?;
    require_data(state)?;
    if direction == Direction::TwoSided {
        return Err(Error::Usage("one-sided test needs direction Right or Left".into()));
    }
    let hw = half_width(state, shape, c_o.value);
    Ok(TestVerdict {
        t: state.t(),
        mu0,
        direction,
        reject: one_sided_reject(state.mean(), hw, mu0, direction),
    })
}

/// Simultaneous one-sided tests over an ordered grid `mu_1 < ... < mu_k`.
///
/// `RightOnly`/`LeftOnly` take the one-sided critical value; `Both` takes the
/// two-sided one and returns, per grid point, the right verdict followed by
/// the left verdict. Right rejections always form a prefix of the grid and
/// left rejections a suffix.
pub fn hierarchical_battery(
    state: &StreamState,
    shape: &BoundaryShape,
    c: &CriticalValue,
    mus: &[f64],
    mode: BatteryMode,
) -> Result<Vec<TestVerdict>> {
    if mus.iter().any(|m| !m.is_finite()) || mus.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Input(
            "battery grid must be finite and strictly increasing".into(),
        ));
    }
    require(
        c,
        match mode {
            BatteryMode::Both => Sided::TwoSided,
            _ => Sided::OneSided,
        },
    )?;
    require_data(state)?;
    let hw = half_width(state, shape, c.value);
    let mean = state.mean();
    let t = state.t();
    let verdict = |mu0: f64, direction| TestVerdict {
        t,
        mu0,
        direction,
        reject: one_sided_reject(mean, hw, mu0, direction),
    };
    Ok(match mode {
        BatteryMode::RightOnly => mus.iter().map(|&mu| verdict(mu, Direction::Right)).collect(),
        BatteryMode::LeftOnly => mus.iter().map(|&mu| verdict(mu, Direction::Left)).collect(),
        BatteryMode::Both => mus
            .iter()
            .flat_map(|&mu| [verdict(mu, Direction::Right), verdict(mu, Direction::Left)])
            .collect(),
    })
}

/// A monitoring session: owns the stream state and produces one record per
/// observation, plus verdicts for a fixed set of hypotheses.
#[derive(Clone, Debug)]
pub struct Monitor {
    state: StreamState,
    shape: BoundaryShape,
    two_sided: CriticalValue,
    one_sided: Option<CriticalValue>,
    hypotheses: Vec<(f64, Direction)>,
}

/// Output of [`Monitor::push`].
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub record: IntervalRecord,
    pub verdicts: Vec<TestVerdict>,
}

impl Monitor {
    pub fn new(state: StreamState, shape: BoundaryShape, two_sided: CriticalValue) -> Result<Self> {
        require(&two_sided, Sided::TwoSided)?;
        Ok(Self {
            state,
            shape,
            two_sided,
            one_sided: None,
            hypotheses: Vec::new(),
        })
    }

    /// Adds a hypothesis tested at every step. One-sided directions need
    /// [`Monitor::with_one_sided`] first.
    pub fn with_hypothesis(mut self, mu0: f64, direction: Direction) -> Result<Self> {
        if direction != Direction::TwoSided && self.one_sided.is_none() {
            return Err(Error::Usage(
                "one-sided hypothesis without a one-sided critical value".into(),
            ));
        }
        self.hypotheses.push((mu0, direction));
        Ok(self)
    }

    pub fn with_one_sided(mut self, c_o: CriticalValue) -> Result<Self> {
        require(&c_o, Sided::OneSided)?;
        self.one_sided = Some(c_o);
        Ok(self)
    }

    pub fn state(&self) -> &StreamState {
        &self.state
    }

    pub fn push(&mut self, x: f64) -> Result<Step> {
        self.state.update(x)?;
        let record = interval(&self.state, &self.shape, &self.two_sided)?;
        let verdicts = self
            .hypotheses
            .iter()
            .map(|&(mu0, direction)| match direction {
                Direction::TwoSided => Ok(TestVerdict {
                    t: record.t,
                    mu0,
                    direction,
                    reject: !record.contains(mu0),
                }),
                _ => test_one_sided(
                    &self.state,
                    &self.shape,
                    self.one_sided.as_ref().expect("checked in with_hypothesis"),
                    mu0,
                    direction,
                ),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Step { record, verdicts })
    }
}
