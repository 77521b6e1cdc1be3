//! The N-channel parity-bit commitment.
//!
//! A commits to `a = a_1 xor ... xor a_N` by launching, at `t = 0`, one photon
//! per channel in the agreed state `psi_{a_i + 1}`. B measures every channel
//! with a windowed three-outcome POVM. After `T_open`, A announces the channel
//! bits and B checks them against the outcomes.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::attacks::{transmitted_state, Strategy};
use crate::error::{check_probability, Error, Result};
use crate::exec::Execution;
use crate::measurement::{
    outcome_dist, sample_outcome, state_povm, support_povm, DensityMatrix, Outcome, OutcomeDist, Povm, PovmFamily,
    QuantumInput,
};
use crate::spectra::{sample, GridPlan, Interval, KGrid, SpectralAmplitude};
use crate::window::detect_prob_for;

/// The two orthogonal states agreed on in advance; `psi1` encodes 0.
#[derive(Clone, Debug, PartialEq)]
pub struct AgreedPair {
    psi1: SpectralAmplitude,
    psi2: SpectralAmplitude,
}

impl AgreedPair {
    pub fn new(psi1: SpectralAmplitude, psi2: SpectralAmplitude) -> Result<Self> {
        if psi1.bandwidth() != psi2.bandwidth() {
            return Err(Error::Config(format!(
                "agreed states must share a bandwidth, got {} and {}",
                psi1.bandwidth(),
                psi2.bandwidth()
            )));
        }
        if psi1.support().overlaps(&psi2.support()) {
            return Err(Error::OverlappingSupports { k1: psi1.center(), k2: psi2.center(), delta: psi1.bandwidth() });
        }
        Ok(AgreedPair { psi1, psi2 })
    }

    pub fn state(&self, bit: u8) -> &SpectralAmplitude {
        if bit == 0 {
            &self.psi1
        } else {
            &self.psi2
        }
    }

    pub fn bandwidth(&self) -> f64 {
        self.psi1.bandwidth()
    }

    pub fn supports(&self) -> [Interval; 2] {
        [self.psi1.support(), self.psi2.support()]
    }
}

fn default_family() -> PovmFamily {
    PovmFamily::State
}

/// Parameters shared by both parties before the protocol starts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommitConfig {
    /// Number of channels `N`.
    pub channels: usize,
    pub psi1: SpectralAmplitude,
    pub psi2: SpectralAmplitude,
    /// Earliest time A may open.
    pub t_open: f64,
    /// Time at which a curious B looks early.
    pub t_probe: f64,
    #[serde(default = "default_family")]
    pub family: PovmFamily,
    #[serde(default)]
    pub seed: u64,
    /// Constant propagation offset; the window at time `t` is `(-(t - L), t - L)`.
    #[serde(default)]
    pub channel_length: f64,
    #[serde(default)]
    pub grid: GridPlan,
}

impl CommitConfig {
    /// Rectangular-free convenience constructor with defaults for the optional fields.
    pub fn new(channels: usize, psi1: SpectralAmplitude, psi2: SpectralAmplitude, t_open: f64, t_probe: f64) -> Self {
        CommitConfig {
            channels,
            psi1,
            psi2,
            t_open,
            t_probe,
            family: default_family(),
            seed: 0,
            channel_length: 0.0,
            grid: GridPlan::default(),
        }
    }

    pub fn validate(&self) -> Result<AgreedPair> {
        if self.channels == 0 {
            return Err(Error::Config("at least one channel required".into()));
        }
        if !(self.t_probe >= 0.0 && self.t_probe < self.t_open) || !self.t_open.is_finite() {
            return Err(Error::Config(format!(
                "need 0 <= t_probe < t_open, got t_probe = {}, t_open = {}",
                self.t_probe, self.t_open
            )));
        }
        if !(self.channel_length >= 0.0) || !self.channel_length.is_finite() {
            return Err(Error::Config("channel_length must be finite and >= 0".into()));
        }
        AgreedPair::new(self.psi1.clone(), self.psi2.clone())
    }

    pub fn bandwidth(&self) -> f64 {
        self.psi1.bandwidth()
    }

    /// Half-width of B's accessible window at time `t`.
    pub fn window_at(&self, t: f64) -> f64 {
        (t - self.channel_length).max(0.0)
    }
}

/// What A keeps after committing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRecord {
    bit: u8,
    channel_bits: Vec<u8>,
}

impl CommitRecord {
    pub fn new(bit: u8, channel_bits: Vec<u8>) -> Result<Self> {
        if bit > 1 || channel_bits.iter().any(|&b| b > 1) || channel_bits.is_empty() {
            return Err(Error::Config("bits must be 0 or 1 and at least one channel".into()));
        }
        if parity(&channel_bits) != bit {
            return Err(Error::Invariant("channel bits do not XOR to the committed bit".into()));
        }
        Ok(CommitRecord { bit, channel_bits })
    }

    pub fn bit(&self) -> u8 {
        self.bit
    }

    pub fn channel_bits(&self) -> &[u8] {
        &self.channel_bits
    }

    /// The opening A announces when it is honest about its record.
    pub fn opening(&self) -> Opening {
        Opening { bit: self.bit, channel_bits: self.channel_bits.clone() }
    }
}

pub fn parity(bits: &[u8]) -> u8 {
    bits.iter().fold(0, |acc, b| acc ^ b)
}

/// Channel bits uniformly distributed subject to `xor = bit`.
pub fn draw_channel_bits<R: Rng + ?Sized>(channels: usize, bit: u8, rng: &mut R) -> Vec<u8> {
    let mut bits: Vec<u8> = (0..channels.saturating_sub(1)).map(|_| rng.random_range(0..2u8)).collect();
    let last = parity(&bits) ^ bit;
    bits.push(last);
    bits
}

/// A state launched into one channel, described independently of any grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Transmitted {
    Pure { amplitude: SpectralAmplitude },
    Mixture { components: Vec<(f64, SpectralAmplitude)> },
}

impl Transmitted {
    pub fn supports(&self) -> Vec<Interval> {
        match self {
            Transmitted::Pure { amplitude } => vec![amplitude.support()],
            Transmitted::Mixture { components } => components.iter().map(|(_, a)| a.support()).collect(),
        }
    }

    pub fn realize(&self, grid: &Arc<KGrid>) -> Result<QuantumInput> {
        match self {
            Transmitted::Pure { amplitude } => Ok(QuantumInput::Pure(sample(amplitude, grid)?)),
            Transmitted::Mixture { components } => {
                let states = components.iter().map(|(p, a)| Ok((*p, sample(a, grid)?))).collect::<Result<Vec<_>>>()?;
                let refs: Vec<_> = states.iter().map(|(p, s)| (*p, s)).collect();
                Ok(QuantumInput::Mixed(DensityMatrix::mixture(&refs)?))
            }
        }
    }
}

/// A commits to `bit`: draws channel bits and prepares one honest state per channel.
pub fn commit<R: Rng + ?Sized>(
    config: &CommitConfig,
    bit: u8,
    rng: &mut R,
) -> Result<(CommitRecord, Vec<Transmitted>)> {
    let pair = config.validate()?;
    if bit > 1 {
        return Err(Error::Config(format!("committed bit must be 0 or 1, got {bit}")));
    }
    let bits = draw_channel_bits(config.channels, bit, rng);
    let states = bits.iter().map(|&b| transmitted_state(&Strategy::Honest, &pair, b)).collect::<Result<Vec<_>>>()?;
    Ok((CommitRecord::new(bit, bits)?, states))
}

/// B's measuring device for a given window, tuned to the agreed pair.
#[derive(Clone, Debug)]
pub struct Apparatus {
    half_width: f64,
    grid: Arc<KGrid>,
    povm: Povm,
}

impl Apparatus {
    /// `states` lists everything that may arrive, so the grid covers their supports.
    pub fn new(
        pair: &AgreedPair,
        family: PovmFamily,
        half_width: f64,
        plan: &GridPlan,
        states: &[&Transmitted],
    ) -> Result<Self> {
        let mut supports = pair.supports().to_vec();
        for s in states {
            supports.extend(s.supports());
        }
        let grid = Arc::new(plan.build(&supports, half_width)?);
        let [e1, e2] = pair.supports();
        let povm = match family {
            PovmFamily::Support => support_povm(&grid, e1, e2, half_width)?,
            PovmFamily::State => {
                let psi1 = sample(pair.state(0), &grid)?;
                let psi2 = sample(pair.state(1), &grid)?;
                state_povm(&psi1, &psi2, half_width)?
            }
        };
        Ok(Apparatus { half_width, grid, povm })
    }

    pub fn family(&self) -> PovmFamily {
        self.povm.family()
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn povm(&self) -> &Povm {
        &self.povm
    }

    pub fn distribution(&self, state: &Transmitted) -> Result<OutcomeDist> {
        outcome_dist(&self.povm, &state.realize(&self.grid)?)
    }

    /// Measures each channel independently.
    pub fn measure<R: Rng + ?Sized>(&self, states: &[Transmitted], rng: &mut R) -> Result<Vec<Outcome>> {
        let mut seen: Vec<(&Transmitted, OutcomeDist)> = Vec::new();
        let mut out = Vec::with_capacity(states.len());
        for s in states {
            let dist = match seen.iter().find(|(t, _)| *t == s) {
                Some((_, d)) => *d,
                None => {
                    let d = self.distribution(s)?;
                    seen.push((s, d));
                    d
                }
            };
            out.push(sample_outcome(&dist, rng));
        }
        Ok(out)
    }
}

/// Outcomes of B's per-channel measurements at time `time`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub time: f64,
    pub outcomes: Vec<Outcome>,
}

/// B measures every channel at time `t` with the configured family.
pub fn measure_all<R: Rng + ?Sized>(
    config: &CommitConfig,
    states: &[Transmitted],
    t: f64,
    rng: &mut R,
) -> Result<MeasurementRecord> {
    if !(t >= 0.0) {
        return Err(Error::NegativeWindow(t));
    }
    let pair = config.validate()?;
    let refs: Vec<&Transmitted> = states.iter().collect();
    let app = Apparatus::new(&pair, config.family, config.window_at(t), &config.grid, &refs)?;
    Ok(MeasurementRecord { time: t, outcomes: app.measure(states, rng)? })
}

/// What A announces at opening time.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Opening {
    pub bit: u8,
    pub channel_bits: Vec<u8>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    /// Every channel gave the definite outcome the opening announces.
    Accept,
    /// Some definite outcome contradicts the opening, or the opening is
    /// internally inconsistent.
    Abort,
    /// No contradiction, but at least one channel never fired.
    Inconclusive,
}

/// B's check of A's opening against its own outcomes.
pub fn open_and_verify(
    config: &CommitConfig,
    measured: &MeasurementRecord,
    opening: &Opening,
    opening_time: f64,
) -> Result<Verdict> {
    if !(opening_time >= config.t_open) {
        return Err(Error::ProtocolOrder(format!("opening at t = {opening_time} precedes t_open = {}", config.t_open)));
    }
    if opening.channel_bits.len() != measured.outcomes.len() {
        return Err(Error::Config(format!(
            "opening announces {} channels, {} were measured",
            opening.channel_bits.len(),
            measured.outcomes.len()
        )));
    }
    Ok(verify(measured, opening))
}

fn verify(measured: &MeasurementRecord, opening: &Opening) -> Verdict {
    if opening.bit > 1 || opening.channel_bits.iter().any(|&b| b > 1) || parity(&opening.channel_bits) != opening.bit {
        return Verdict::Abort;
    }
    let mut all_definite = true;
    for (o, &b) in measured.outcomes.iter().zip(&opening.channel_bits) {
        match o.bit() {
            Some(seen) if seen != b => return Verdict::Abort,
            Some(_) => {}
            None => all_definite = false,
        }
    }
    if all_definite {
        Verdict::Accept
    } else {
        Verdict::Inconclusive
    }
}

/// Whether a verdict counts as catching A under the given measurement family.
///
/// With support projectors a silent channel only means "not yet detected".
/// State projectors are tuned to the exact agreed states, so after `T_open`
/// a silent channel is itself evidence against the opening.
pub fn flags_cheat(family: PovmFamily, verdict: Verdict) -> bool {
    match family {
        PovmFamily::Support => verdict == Verdict::Abort,
        PovmFamily::State => verdict != Verdict::Accept,
    }
}

/// `p^N`: B identifies every channel with individual measurements.
pub fn ident_prob_individual(p: f64, channels: usize) -> Result<f64> {
    Ok(check_probability(p)?.powi(channels as i32))
}

/// `sqrt(p^N)`: credited success of a collective measurement on all channels.
pub fn ident_prob_collective(p: f64, channels: usize) -> Result<f64> {
    Ok(check_probability(p)?.powf(0.5 * channels as f64))
}

/// `p^N + (1 - p^N)/2`: read the parity when every channel fired, else guess.
pub fn guess_success(p: f64, channels: usize) -> Result<f64> {
    let all = ident_prob_individual(p, channels)?;
    Ok(all + 0.5 * (1.0 - all))
}

/// Security of the stored bit given per-channel detection probability `p`:
/// 1 when B can do no better than a coin, 0 when B reads the bit for sure.
pub fn storage_security(p: f64, channels: usize) -> Result<f64> {
    let best = ident_prob_collective(p, channels)?.max(guess_success(p, channels)?);
    Ok((1.0 - 2.0 * (best - 0.5)).clamp(0.0, 1.0))
}

/// `(t, P_store(t))` for each time in `[0, T_open]`.
pub fn storage_security_curve(config: &CommitConfig, times: &[f64], exec: Execution) -> Result<Vec<(f64, f64)>> {
    let pair = config.validate()?;
    if let Some(t) = times.iter().find(|&&t| !(0.0..=config.t_open).contains(&t)) {
        return Err(Error::Config(format!("time {t} outside [0, t_open]")));
    }
    exec.try_map(times.len(), |i| {
        let t = times[i];
        let p = detect_prob_for(pair.state(0), config.window_at(t), &config.grid)?;
        Ok((t, storage_security(p, config.channels)?))
    })
}

/// One complete protocol execution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommitTranscript {
    pub config: CommitConfig,
    pub strategy: Strategy,
    pub run: u64,
    pub run_seed: u64,
    pub record: CommitRecord,
    pub measurement: MeasurementRecord,
    pub opening: Opening,
    pub opening_time: f64,
    pub verdict: Verdict,
    /// B's parity estimate from the measured outcomes (coin flip when any channel is silent).
    pub parity_guess: u8,
    /// Whether the run counts as a success for the acting party: acceptance
    /// for A-side strategies, a correct parity guess for an early-measuring B.
    pub success: bool,
    /// Whether the verdict catches A under the configured family.
    pub flagged: bool,
}

impl CommitTranscript {
    pub fn aborted(&self) -> bool {
        self.verdict == Verdict::Abort
    }

    pub fn all_definite(&self) -> bool {
        self.measurement.outcomes.iter().all(|o| o.is_definite())
    }
}

/// Seed of run `index` derived from the master seed (SplitMix64 finalizer).
pub fn run_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Repeated protocol runs under one strategy. Outcome distributions are
/// computed once; each run draws from its own RNG stream.
#[derive(Clone, Debug)]
pub struct Simulation {
    config: CommitConfig,
    strategy: Strategy,
    measurement_time: f64,
    transmitted: [Transmitted; 2],
    dists: [OutcomeDist; 2],
}

impl Simulation {
    pub fn new(config: &CommitConfig, strategy: &Strategy) -> Result<Self> {
        let pair = config.validate()?;
        strategy.validate(config)?;
        let measurement_time = match strategy {
            Strategy::EarlyMeasure { t_probe } => *t_probe,
            _ => config.t_open,
        };
        let transmitted = [transmitted_state(strategy, &pair, 0)?, transmitted_state(strategy, &pair, 1)?];
        let app = Apparatus::new(
            &pair,
            config.family,
            config.window_at(measurement_time),
            &config.grid,
            &[&transmitted[0], &transmitted[1]],
        )?;
        let dists = [app.distribution(&transmitted[0])?, app.distribution(&transmitted[1])?];
        Ok(Simulation { config: config.clone(), strategy: strategy.clone(), measurement_time, transmitted, dists })
    }

    pub fn config(&self) -> &CommitConfig {
        &self.config
    }

    pub fn strategy(&self) -> &Strategy {
        &self.strategy
    }

    pub fn measurement_time(&self) -> f64 {
        self.measurement_time
    }

    /// Outcome distribution of a channel carrying bit `b`.
    pub fn distribution(&self, bit: u8) -> OutcomeDist {
        self.dists[bit as usize]
    }

    pub fn transmitted(&self, bit: u8) -> &Transmitted {
        &self.transmitted[bit as usize]
    }

    pub fn run(&self, index: u64) -> CommitTranscript {
        let seed = run_seed(self.config.seed, index);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bit = rng.random_range(0..2u8);
        let bits = draw_channel_bits(self.config.channels, bit, &mut rng);
        let outcomes: Vec<Outcome> = bits.iter().map(|&b| sample_outcome(&self.dists[b as usize], &mut rng)).collect();
        let decoded: Option<Vec<u8>> = outcomes.iter().map(|o| o.bit()).collect();
        let parity_guess = match decoded {
            Some(bits) => parity(&bits),
            None => rng.random_range(0..2u8),
        };
        let record = CommitRecord { bit, channel_bits: bits };
        let opening = record.opening();
        let measurement = MeasurementRecord { time: self.measurement_time, outcomes };
        let verdict = verify(&measurement, &opening);
        let success = match self.strategy {
            Strategy::EarlyMeasure { .. } => parity_guess == bit,
            _ => verdict == Verdict::Accept,
        };
        CommitTranscript {
            config: self.config.clone(),
            strategy: self.strategy.clone(),
            run: index,
            run_seed: seed,
            record,
            measurement,
            opening,
            opening_time: self.config.t_open,
            verdict,
            parity_guess,
            success,
            flagged: flags_cheat(self.config.family, verdict),
        }
    }

    pub fn run_many(&self, runs: u64, exec: Execution) -> Vec<CommitTranscript> {
        exec.map(runs as usize, |i| self.run(i as u64))
    }

    pub fn summarize(&self, runs: u64, exec: Execution) -> RunStats {
        let per_run = exec.map(runs as usize, |i| RunStats::of(&self.run(i as u64)));
        per_run.into_iter().fold(RunStats::default(), RunStats::merge)
    }
}

/// Counts over a batch of runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RunStats {
    pub runs: u64,
    pub accepted: u64,
    pub aborted: u64,
    pub inconclusive: u64,
    pub flagged: u64,
    pub all_definite: u64,
    pub successes: u64,
}

impl RunStats {
    fn of(t: &CommitTranscript) -> Self {
        RunStats {
            runs: 1,
            accepted: (t.verdict == Verdict::Accept) as u64,
            aborted: (t.verdict == Verdict::Abort) as u64,
            inconclusive: (t.verdict == Verdict::Inconclusive) as u64,
            flagged: t.flagged as u64,
            all_definite: t.all_definite() as u64,
            successes: t.success as u64,
        }
    }

    fn merge(self, o: Self) -> Self {
        RunStats {
            runs: self.runs + o.runs,
            accepted: self.accepted + o.accepted,
            aborted: self.aborted + o.aborted,
            inconclusive: self.inconclusive + o.inconclusive,
            flagged: self.flagged + o.flagged,
            all_definite: self.all_definite + o.all_definite,
            successes: self.successes + o.successes,
        }
    }

    pub fn rate(&self, count: u64) -> f64 {
        if self.runs == 0 {
            0.0
        } else {
            count as f64 / self.runs as f64
        }
    }
}

/// Binomial standard error of a frequency estimate of `p` from `n` trials.
pub fn binomial_sigma(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}
