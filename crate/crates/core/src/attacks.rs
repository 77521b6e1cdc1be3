//! Cheating strategies and how often B catches them.
//!
//! A-side strategies change what is launched into each channel; the B-side
//! `EarlyMeasure` strategy keeps A honest and moves B's measurement before
//! `T_open`.

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::exec::Execution;
use crate::measurement::{Outcome, OutcomeDist, PovmFamily};
use crate::protocol::{
    binomial_sigma, guess_success, ident_prob_collective, ident_prob_individual, AgreedPair, Apparatus, CommitConfig,
    Simulation, Transmitted,
};
use crate::spectra::{make_amplitude, GridPlan, Shape, SpectralAmplitude};
use crate::window::detect_prob_for;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Strategy {
    Honest,
    /// A emits late by `tau0`, i.e. sends `e^{ik tau0} psi`.
    Delayed {
        tau0: f64,
    },
    /// A sends the even mixture of both agreed states on every channel.
    Mixed,
    /// A sends an arbitrary state in place of the agreed one.
    WrongState {
        amplitude: SpectralAmplitude,
    },
    /// B measures at `t_probe < T_open`.
    EarlyMeasure {
        t_probe: f64,
    },
}

impl Strategy {
    pub fn validate(&self, config: &CommitConfig) -> Result<()> {
        match self {
            Strategy::Delayed { tau0 } if !(tau0.is_finite() && *tau0 >= 0.0) => {
                Err(Error::Config(format!("delay must be finite and >= 0, got {tau0}")))
            }
            Strategy::EarlyMeasure { t_probe } if !(*t_probe >= 0.0 && *t_probe < config.t_open) => {
                Err(Error::Config(format!("need 0 <= t_probe < t_open = {}, got {t_probe}", config.t_open)))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Honest => "honest",
            Strategy::Delayed { .. } => "delayed",
            Strategy::Mixed => "mixed",
            Strategy::WrongState { .. } => "wrong-state",
            Strategy::EarlyMeasure { .. } => "early-measure",
        }
    }

    /// The strategy's scalar parameter, if it has one.
    pub fn param(&self) -> Option<f64> {
        match self {
            Strategy::Delayed { tau0 } => Some(*tau0),
            Strategy::EarlyMeasure { t_probe } => Some(*t_probe),
            Strategy::WrongState { amplitude } => Some(amplitude.center()),
            _ => None,
        }
    }

    /// Whether A deviates from the protocol.
    pub fn is_sender_attack(&self) -> bool {
        !matches!(self, Strategy::Honest | Strategy::EarlyMeasure { .. })
    }
}

/// What A launches into a channel whose claimed bit is `bit`.
pub fn transmitted_state(strategy: &Strategy, pair: &AgreedPair, bit: u8) -> Result<Transmitted> {
    if bit > 1 {
        return Err(Error::Config(format!("channel bit must be 0 or 1, got {bit}")));
    }
    Ok(match strategy {
        Strategy::Honest | Strategy::EarlyMeasure { .. } => Transmitted::Pure { amplitude: pair.state(bit).clone() },
        Strategy::Delayed { tau0 } => Transmitted::Pure { amplitude: pair.state(bit).with_delay(*tau0)? },
        Strategy::Mixed => {
            Transmitted::Mixture { components: vec![(0.5, pair.state(0).clone()), (0.5, pair.state(1).clone())] }
        }
        Strategy::WrongState { amplitude } => Transmitted::Pure { amplitude: amplitude.clone() },
    })
}

/// Probability that a channel claimed as `bit` contradicts the opening.
///
/// Support family: the wrong definite outcome. State family: anything but the
/// claimed outcome, since the projector is tuned to the exact agreed state.
pub fn flag_prob(dist: &OutcomeDist, bit: u8, family: PovmFamily) -> f64 {
    match family {
        PovmFamily::Support => dist.prob(Outcome::for_bit(1 - bit)),
        PovmFamily::State => 1.0 - dist.prob(Outcome::for_bit(bit)),
    }
}

/// Outcome distributions of both claim bits under `strategy`, measured with
/// window half-width `half_width`.
pub fn channel_distributions(
    config: &CommitConfig,
    strategy: &Strategy,
    family: PovmFamily,
    half_width: f64,
) -> Result<[OutcomeDist; 2]> {
    let pair = config.validate()?;
    strategy.validate(config)?;
    let sent = [transmitted_state(strategy, &pair, 0)?, transmitted_state(strategy, &pair, 1)?];
    let app = Apparatus::new(&pair, family, half_width, &config.grid, &[&sent[0], &sent[1]])?;
    Ok([app.distribution(&sent[0])?, app.distribution(&sent[1])?])
}

/// Per-channel flag probability `q`, averaged over the (uniform) claim bit.
pub fn per_channel_flag_prob(
    config: &CommitConfig,
    strategy: &Strategy,
    family: PovmFamily,
    half_width: f64,
) -> Result<f64> {
    let d = channel_distributions(config, strategy, family, half_width)?;
    check_probability(0.5 * (flag_prob(&d[0], 0, family) + flag_prob(&d[1], 1, family)))
}

/// `1 - (1 - q)^N`. Channel bits are i.i.d. uniform, so this is exact.
pub fn cheat_detection_prob(q: f64, channels: usize) -> Result<f64> {
    Ok(1.0 - (1.0 - check_probability(q)?).powi(channels as i32))
}

/// Monte Carlo estimate of a cheat's detection probability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DetectionEstimate {
    pub runs: u64,
    pub flagged: u64,
    pub rate: f64,
    pub sigma: f64,
}

/// Plays `runs` full protocol rounds with B verifying at `T_open` using
/// `config.family`, and counts the flagged ones.
pub fn cheat_detection_mc(
    config: &CommitConfig,
    strategy: &Strategy,
    runs: u64,
    exec: Execution,
) -> Result<DetectionEstimate> {
    if !strategy.is_sender_attack() && *strategy != Strategy::Honest {
        return Err(Error::Config(format!("{} is not a sender strategy", strategy.name())));
    }
    let stats = Simulation::new(config, strategy)?.summarize(runs, exec);
    let rate = stats.rate(stats.flagged);
    Ok(DetectionEstimate {
        runs,
        flagged: stats.flagged,
        rate,
        sigma: if runs == 0 { 0.0 } else { binomial_sigma(rate, runs) },
    })
}

/// What an early-measuring B can learn about the parity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EarlyBinding {
    /// Per-channel detection probability at `t_probe`.
    pub p: f64,
    pub individual: f64,
    pub collective: f64,
    pub guess: f64,
}

pub fn early_binding_advantage(config: &CommitConfig, t_probe: f64) -> Result<EarlyBinding> {
    let pair = config.validate()?;
    Strategy::EarlyMeasure { t_probe }.validate(config)?;
    let p = detect_prob_for(pair.state(0), config.window_at(t_probe), &config.grid)?;
    Ok(EarlyBinding {
        p,
        individual: ident_prob_individual(p, config.channels)?,
        collective: ident_prob_collective(p, config.channels)?,
        guess: guess_success(p, config.channels)?,
    })
}

/// Largest bandwidth keeping the collective identification probability at
/// time `t_c` below `2 eps`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SecurityHorizon {
    pub bandwidth: f64,
    pub detect_prob: f64,
    pub collective: f64,
    pub bound: f64,
}

/// Detection probability at `t_c` for a packet of bandwidth `delta`; the
/// centre only needs to keep the support at positive wavenumbers.
fn detect_at(shape: Shape, delta: f64, t_c: f64, plan: &GridPlan) -> Result<f64> {
    let amp = make_amplitude(shape, 2.0 * delta, delta, 0.0)?;
    detect_prob_for(&amp, t_c, plan)
}

/// Solves `p(t_c; Delta)^{N/2} <= 2 eps` for the largest `Delta` by bisection
/// on `log Delta`. The returned bandwidth is the inner end of the final bracket,
/// so the bound holds at it by construction.
pub fn security_horizon(eps: f64, t_c: f64, channels: usize, shape: Shape, plan: &GridPlan) -> Result<SecurityHorizon> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::Config(format!("eps must lie in (0, 0.5), got {eps}")));
    }
    if !(t_c > 0.0 && t_c.is_finite()) || channels == 0 {
        return Err(Error::Config("need t_c > 0 and at least one channel".into()));
    }
    let bound = 2.0 * eps;
    let ok = |delta: f64| -> Result<bool> {
        Ok(ident_prob_collective(detect_at(shape, delta, t_c, plan)?, channels)? <= bound)
    };

    let mut lo = 1.0 / t_c;
    while !ok(lo)? {
        lo *= 0.5;
        if lo * t_c < 1e-12 {
            return Err(Error::Config("no bandwidth satisfies the bound".into()));
        }
    }
    let mut hi = 2.0 * lo;
    while ok(hi)? {
        lo = hi;
        hi *= 2.0;
        if hi * t_c > 1e4 {
            return Err(Error::Config("bound holds at every resolvable bandwidth".into()));
        }
    }
    while (hi / lo).ln() > 1e-10 {
        let mid = (lo * hi).sqrt();
        if ok(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p = detect_at(shape, lo, t_c, plan)?;
    Ok(SecurityHorizon { bandwidth: lo, detect_prob: p, collective: ident_prob_collective(p, channels)?, bound })
}

/// Flag probability of a delayed sender as a function of the delay.
pub fn delay_curve(
    config: &CommitConfig,
    family: PovmFamily,
    half_width: f64,
    delays: &[f64],
    exec: Execution,
) -> Result<Vec<(f64, f64)>> {
    exec.try_map(delays.len(), |i| {
        let q = per_channel_flag_prob(config, &Strategy::Delayed { tau0: delays[i] }, family, half_width)?;
        Ok((delays[i], q))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::disjoint_pair;
    use approx::assert_abs_diff_eq;

    fn sinc(x: f64) -> f64 {
        x.sin() / x
    }

    fn config(n: usize, family: PovmFamily) -> CommitConfig {
        let (a, b) = disjoint_pair(12.0, 10.0, 1.0, Shape::Rectangular).unwrap();
        let mut c = CommitConfig::new(n, a, b, 1000.0, 1.0);
        c.family = family;
        c.seed = 5;
        c
    }

    #[test]
    fn honest_support_never_flags() {
        let c = config(3, PovmFamily::Support);
        for t in [0.0, 0.3, 3.0, 300.0] {
            assert_eq!(per_channel_flag_prob(&c, &Strategy::Honest, PovmFamily::Support, t).unwrap(), 0.0);
        }
        assert_eq!(cheat_detection_prob(0.0, 50).unwrap(), 0.0);
    }

    #[test]
    fn delayed_state_has_same_magnitude() {
        let c = config(1, PovmFamily::State);
        let pair = c.validate().unwrap();
        let Transmitted::Pure { amplitude } = transmitted_state(&Strategy::Delayed { tau0: 2.0 }, &pair, 0).unwrap()
        else {
            panic!("pure state expected")
        };
        for k in [11.6, 12.0, 12.4] {
            assert_eq!(amplitude.magnitude(k), pair.state(0).magnitude(k));
        }
    }

    #[test]
    fn mixture_is_even_and_bit_independent() {
        let c = config(1, PovmFamily::Support);
        let pair = c.validate().unwrap();
        let a = transmitted_state(&Strategy::Mixed, &pair, 0).unwrap();
        assert_eq!(a, transmitted_state(&Strategy::Mixed, &pair, 1).unwrap());
        let d = channel_distributions(&c, &Strategy::Mixed, PovmFamily::Support, 1000.0).unwrap();
        assert_abs_diff_eq!(d[0].p1, d[0].p2, epsilon = 1e-12);
        let q = per_channel_flag_prob(&c, &Strategy::Mixed, PovmFamily::Support, 1000.0).unwrap();
        assert!((q - 0.5).abs() < 1e-3, "q = {q}");
    }

    #[test]
    fn full_period_delay_is_caught_by_state_family() {
        let c = config(1, PovmFamily::State);
        let tau0 = 2.0 * std::f64::consts::PI;
        let q = per_channel_flag_prob(&c, &Strategy::Delayed { tau0 }, PovmFamily::State, 1000.0).unwrap();
        assert!(q > 0.99, "q = {q}");
        // half a period: p1 ~ sinc(pi/2)^2, the squared overlap with the delayed copy
        let d = channel_distributions(&c, &Strategy::Delayed { tau0: 0.5 * tau0 }, PovmFamily::State, 1000.0).unwrap();
        assert_abs_diff_eq!(d[0].p1, sinc(std::f64::consts::FRAC_PI_2).powi(2), epsilon = 2e-3);
    }

    #[test]
    fn delay_curve_rises_over_first_period() {
        let c = config(1, PovmFamily::State);
        let delays: Vec<f64> = (1..=10).map(|i| 0.6 * i as f64).collect();
        let curve = delay_curve(&c, PovmFamily::State, 1000.0, &delays, Execution::Parallel).unwrap();
        assert!(curve.iter().all(|&(_, q)| q > 0.0));
        assert!(curve.windows(2).all(|w| w[1].1 > w[0].1));
    }

    #[test]
    fn mixed_detection_grows_with_channels() {
        let q = 0.5;
        assert_abs_diff_eq!(cheat_detection_prob(q, 20).unwrap(), 1.0 - 2f64.powi(-20), epsilon = 1e-15);
        let seq: Vec<f64> = (1..30).map(|n| cheat_detection_prob(0.01, n).unwrap()).collect();
        assert!(seq.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn monte_carlo_matches_closed_form() {
        let mut c = config(4, PovmFamily::Support);
        c.t_open = 3.0;
        let q = per_channel_flag_prob(&c, &Strategy::Mixed, PovmFamily::Support, 3.0).unwrap();
        let exact = cheat_detection_prob(q, 4).unwrap();
        let est = cheat_detection_mc(&c, &Strategy::Mixed, 10_000, Execution::Parallel).unwrap();
        assert!((est.rate - exact).abs() < 3.0 * binomial_sigma(exact, 10_000), "{est:?} vs {exact}");
    }

    #[test]
    fn early_binding_limits() {
        let c = config(10, PovmFamily::Support);
        let e = early_binding_advantage(&c, 0.0).unwrap();
        assert_eq!((e.individual, e.collective, e.guess), (0.0, 0.0, 0.5));
        let e = early_binding_advantage(&c, 0.01).unwrap();
        assert!((e.p - 0.01 / std::f64::consts::PI).abs() < 1e-6);
        assert!(e.individual < 1e-24);
        assert!(early_binding_advantage(&c, 1000.0).is_err());
    }

    #[test]
    fn horizon_satisfies_bound() {
        let plan = GridPlan::default();
        let h = security_horizon(1e-3, 2.0, 10, Shape::Rectangular, &plan).unwrap();
        assert!(h.collective <= h.bound);
        // a little more bandwidth breaks it
        let p = detect_at(Shape::Rectangular, h.bandwidth * 1.001, 2.0, &plan).unwrap();
        assert!(ident_prob_collective(p, 10).unwrap() > h.bound);
    }

    #[test]
    fn strategy_validation_and_serde() {
        let c = config(2, PovmFamily::State);
        assert!(Strategy::Delayed { tau0: -1.0 }.validate(&c).is_err());
        assert!(Strategy::EarlyMeasure { t_probe: 2000.0 }.validate(&c).is_err());
        let s: Strategy = serde_json::from_str(r#"{"kind":"delayed","tau0":1.5}"#).unwrap();
        assert_eq!(s, Strategy::Delayed { tau0: 1.5 });
        let s: Strategy = serde_json::from_str(r#"{"kind":"mixed"}"#).unwrap();
        assert_eq!(s.name(), "mixed");
    }
}
