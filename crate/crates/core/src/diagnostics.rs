//! Pulse metrics and physics checks on simulation records.
//!
//! The time-reversal and phase-conjugation scores are correlation
//! constructs for comparing shapes; they are not fidelity measures.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::propagate::SimulationRecord;
use crate::signal::{cross_correlate, interp_uniform, pearson, unwrap_phase};

/// Maxima below this fraction of the global peak are ignored.
const MAXIMUM_FLOOR: f64 = 0.01;
/// Minimum prominence, relative to the global peak, of a reported maximum.
const MAXIMUM_PROMINENCE: f64 = 0.05;
/// Samples below this fraction of the peak carry no usable phase.
const PHASE_SUPPORT: f64 = 0.01;
/// Support threshold for the phase-conjugation comparison.
const CONJUGATION_SUPPORT: f64 = 0.1;
pub const DILATION_MIN: f64 = 0.2;
pub const DILATION_MAX: f64 = 5.0;
pub const DILATION_STEPS: usize = 41;
/// Tail-slope threshold separating the three retrieval regimes (γ).
pub const REGIME_THRESHOLD: f64 = 1e-3;
pub const REGIME_MIN_SAMPLES: usize = 20;

/// Uniformly sampled complex time series.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub taus: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl TimeSeries {
    pub fn new(taus: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if taus.len() != values.len() {
            return Err(Error::diagnostic("time and value arrays differ in length"));
        }
        if taus.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::diagnostic("sample times must be strictly increasing"));
        }
        Ok(TimeSeries { taus, values })
    }

    pub fn sample(taus: &[f64], f: impl Fn(f64) -> Complex64) -> Self {
        TimeSeries {
            taus: taus.to_vec(),
            values: taus.iter().map(|t| f(*t)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    /// Samples with `start ≤ τ < end`.
    pub fn window(&self, start: f64, end: f64) -> TimeSeries {
        let lo = self.taus.partition_point(|t| *t < start);
        let hi = self.taus.partition_point(|t| *t < end).max(lo);
        TimeSeries {
            taus: self.taus[lo..hi].to_vec(),
            values: self.values[lo..hi].to_vec(),
        }
    }

    /// Mean sample spacing.
    pub fn dt(&self) -> f64 {
        match self.taus.len() {
            0 | 1 => 0.0,
            n => (self.taus[n - 1] - self.taus[0]) / (n - 1) as f64,
        }
    }

    pub fn amplitudes(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm()).collect()
    }

    /// `∫|Ω|² dτ` by the trapezoid rule.
    pub fn energy(&self) -> f64 {
        trapezoid(&self.taus, |i| self.values[i].norm_sqr())
    }

    pub fn scaled(&self, k: Complex64) -> TimeSeries {
        TimeSeries {
            taus: self.taus.clone(),
            values: self.values.iter().map(|z| z * k).collect(),
        }
    }
}

fn trapezoid(taus: &[f64], f: impl Fn(usize) -> f64) -> f64 {
    (1..taus.len())
        .map(|i| 0.5 * (taus[i] - taus[i - 1]) * (f(i) + f(i - 1)))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PulseMetrics {
    pub peak_amp: f64,
    pub peak_time: f64,
    /// `None` when the half-maximum level is not crossed on both sides of
    /// the peak inside the window.
    pub fwhm: Option<f64>,
    /// `None` for a zero-energy window.
    pub centroid: Option<f64>,
    pub energy: f64,
    /// `(time, amplitude)` of maxima with at least 5 % prominence.
    pub local_maxima: Vec<(f64, f64)>,
    /// Max − min of the unwrapped phase where the amplitude exceeds 1 % of
    /// the peak.
    pub phase_excursion: f64,
}

/// Metrics of `series` restricted to `window = (start, end)`, or of the
/// whole series.
pub fn pulse_metrics(series: &TimeSeries, window: Option<(f64, f64)>) -> Result<PulseMetrics> {
    let owned;
    let s = match window {
        Some((a, b)) => {
            owned = series.window(a, b);
            &owned
        }
        None => series,
    };
    if s.is_empty() {
        return Err(Error::diagnostic("empty window"));
    }
    let amp = s.amplitudes();
    let (ipk, &peak_amp) = amp
        .iter()
        .enumerate()
        .fold((0, &f64::NEG_INFINITY), |best, (i, a)| if *a > *best.1 { (i, a) } else { best });
    let energy = s.energy();
    let weighted = trapezoid(&s.taus, |i| s.taus[i] * amp[i] * amp[i]);
    let centroid = (energy > 0.0).then(|| weighted / energy);

    let phase_excursion = {
        let floor = PHASE_SUPPORT * peak_amp;
        let phases: Vec<f64> = s
            .values
            .iter()
            .zip(&amp)
            .filter(|(_, a)| peak_amp > 0.0 && **a >= floor)
            .map(|(z, _)| z.arg())
            .collect();
        let u = unwrap_phase(&phases);
        let (lo, hi) = u
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(*p), h.max(*p)));
        if u.is_empty() { 0.0 } else { hi - lo }
    };

    Ok(PulseMetrics {
        peak_amp,
        peak_time: s.taus[ipk],
        fwhm: fwhm(&s.taus, &amp, ipk),
        centroid,
        energy,
        local_maxima: local_maxima(&amp)
            .into_iter()
            .map(|i| (s.taus[i], amp[i]))
            .collect(),
        phase_excursion,
    })
}

fn fwhm(taus: &[f64], amp: &[f64], ipk: usize) -> Option<f64> {
    let half = 0.5 * amp[ipk];
    if !(half > 0.0) {
        return None;
    }
    let cross = |i: usize, j: usize| {
        // amp[i] ≥ half > amp[j], adjacent samples
        let f = (amp[i] - half) / (amp[i] - amp[j]);
        taus[i] + f * (taus[j] - taus[i])
    };
    let left = (1..=ipk).rev().find(|&i| amp[i - 1] < half).map(|i| cross(i, i - 1))?;
    let right = (ipk..amp.len() - 1).find(|&i| amp[i + 1] < half).map(|i| cross(i, i + 1))?;
    Some(right - left)
}

/// Indices of interior maxima passing the height and prominence filters;
/// flat tops report their middle sample.
fn local_maxima(amp: &[f64]) -> Vec<usize> {
    let peak = amp.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < amp.len() {
        if amp[i] > amp[i - 1] {
            let mut j = i;
            while j + 1 < amp.len() && amp[j + 1] == amp[i] {
                j += 1;
            }
            if j + 1 < amp.len() && amp[j + 1] < amp[i] {
                let k = (i + j) / 2;
                if amp[k] >= MAXIMUM_FLOOR * peak && prominence(amp, i, j) >= MAXIMUM_PROMINENCE * peak {
                    out.push(k);
                }
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

fn prominence(amp: &[f64], first: usize, last: usize) -> f64 {
    let h = amp[first];
    let mut left_min = h;
    for &a in amp[..first].iter().rev() {
        if a > h {
            break;
        }
        left_min = left_min.min(a);
    }
    let mut right_min = h;
    for &a in &amp[last + 1..] {
        if a > h {
            break;
        }
        right_min = right_min.min(a);
    }
    h - left_min.max(right_min)
}

/// Measured against predicted group velocity (units of `c`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupDelay {
    pub measured_vg: f64,
    pub predicted_vg: f64,
    pub relative_error: f64,
    /// Retarded-frame centroid delay between entry and exit (γ⁻¹).
    pub delay: f64,
    pub warning: Option<String>,
}

/// Predicted EIT group velocity `1/(1 + A_p/|Ω_c|²)`.
pub fn predicted_group_velocity(alpha_p: f64, omega_c: f64) -> f64 {
    if alpha_p == 0.0 {
        1.0
    } else {
        1.0 / (1.0 + alpha_p / (omega_c * omega_c))
    }
}

/// Group velocity from the centroid delay of the signal through the cell
/// while the writing beam is on.
pub fn group_delay_check(record: &SimulationRecord) -> Result<GroupDelay> {
    let spec = &record.spec;
    let end = (spec.t_on - 2.0 * spec.t_switch).min(spec.t_off - 2.0 * spec.t_switch);
    let strip = |i: usize, z: Complex64| z - spec.retrieval_drive(record.taus[i]);
    let entry = TimeSeries {
        taus: record.taus.clone(),
        values: record
            .boundary_series
            .iter()
            .enumerate()
            .map(|(i, f)| strip(i, f.omega_p))
            .collect(),
    }
    .window(f64::NEG_INFINITY, end);
    let exit = TimeSeries {
        taus: record.taus.clone(),
        values: record
            .exit_series
            .iter()
            .enumerate()
            .map(|(i, f)| strip(i, f.omega_p))
            .collect(),
    }
    .window(f64::NEG_INFINITY, end);

    let m_in = pulse_metrics(&entry, None)?;
    let m_out = pulse_metrics(&exit, None)?;
    let c_in = m_in
        .centroid
        .ok_or_else(|| Error::diagnostic("no signal energy at the entry"))?;
    let mut warning = None;
    let c_out = match m_out.centroid {
        Some(c) => c,
        None => return Err(Error::diagnostic("no signal energy at the exit")),
    };
    if m_out.energy < 0.5 * m_in.energy {
        warning = Some(format!(
            "pulse not fully transmitted: exit energy is {:.3} of the input",
            m_out.energy / m_in.energy
        ));
    }
    let l = record.params.cell_length;
    let delay = c_out - c_in;
    let measured_vg = l / (l + delay);
    let predicted_vg = predicted_group_velocity(record.params.alpha_p, spec.omega_c0);
    Ok(GroupDelay {
        measured_vg,
        predicted_vg,
        relative_error: (measured_vg - predicted_vg).abs() / predicted_vg,
        delay,
        warning,
    })
}

/// Best alignment of the output amplitude with the reversed, dilated input
/// amplitude.
///
/// The alignment reads `|out(t)| ≈ k·|in(t_in_end − (t − offset)/dilation)|`,
/// where `t_in_end` is the last input sample time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReversalMatch {
    pub score: f64,
    pub dilation: f64,
    pub offset: f64,
}

/// The fixed dilation grid: log-spaced over `[0.2, 5]`.
pub fn dilation_grid() -> Vec<f64> {
    let (a, b) = (DILATION_MIN.ln(), DILATION_MAX.ln());
    (0..DILATION_STEPS)
        .map(|k| (a + (b - a) * k as f64 / (DILATION_STEPS - 1) as f64).exp())
        .collect()
}

/// Time-reversal alignment; the score is the zero-padded cosine similarity
/// maximized over shift and dilation.
pub fn time_reversal_match(input: &TimeSeries, output: &TimeSeries) -> Result<ReversalMatch> {
    if input.len() < 2 || output.len() < 2 {
        return Err(Error::diagnostic("time-reversal comparison needs non-empty windows"));
    }
    let a_in = input.amplitudes();
    let a_out = output.amplitudes();
    let n_out = norm(&a_out);
    if norm(&a_in) == 0.0 || n_out == 0.0 {
        return Err(Error::diagnostic("zero-energy window"));
    }
    let (dt_in, dt) = (input.dt(), output.dt());
    let t_in_end = input.taus[input.len() - 1];
    let span = t_in_end - input.taus[0];
    let mut best = ReversalMatch {
        score: f64::NEG_INFINITY,
        dilation: 1.0,
        offset: 0.0,
    };
    for d in dilation_grid() {
        let m = ((span * d / dt).floor() as usize + 1).max(1);
        // template g[k] = |in|(t_in_end − k·dt/d)
        let g: Vec<f64> = (0..m)
            .map(|k| interp_uniform(input.taus[0], dt_in, &a_in, t_in_end - k as f64 * dt / d).unwrap_or(0.0))
            .collect();
        let ng = norm(&g);
        if ng == 0.0 {
            continue;
        }
        let c = cross_correlate(&a_out, &g);
        for (i, x) in c.iter().enumerate() {
            let score = x / (n_out * ng);
            if score > best.score {
                let lag = i as f64 - (m as f64 - 1.0);
                best = ReversalMatch {
                    score,
                    dilation: d,
                    offset: output.taus[0] + lag * dt,
                };
            }
        }
    }
    if !best.score.is_finite() {
        return Err(Error::diagnostic("zero-energy window"));
    }
    best.score = best.score.clamp(-1.0, 1.0);
    Ok(best)
}

pub fn time_reversal_score(input: &TimeSeries, output: &TimeSeries) -> Result<f64> {
    time_reversal_match(input, output).map(|m| m.score)
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Pearson correlation between the unwrapped output phase and minus the
/// input phase at the time-reversed, dilated instants of `alignment`, over
/// samples where both amplitudes exceed 10 % of their peaks.
pub fn phase_conjugation_with(
    input: &TimeSeries,
    output: &TimeSeries,
    alignment: &ReversalMatch,
) -> Result<f64> {
    let a_in = input.amplitudes();
    let peak_in = a_in.iter().cloned().fold(0.0, f64::max);
    let peak_out = output.amplitudes().into_iter().fold(0.0, f64::max);
    if !(peak_in > 0.0 && peak_out > 0.0) {
        return Err(Error::diagnostic("zero-energy window"));
    }
    let t_in_end = input.taus[input.len() - 1];
    let mut out_phase = Vec::new();
    let mut in_phase = Vec::new();
    for (t, z) in output.taus.iter().zip(&output.values) {
        if z.norm() < CONJUGATION_SUPPORT * peak_out {
            continue;
        }
        let u = t_in_end - (t - alignment.offset) / alignment.dilation;
        let Some(w) = interp_uniform(input.taus[0], input.dt(), &input.values, u) else {
            continue;
        };
        if w.norm() < CONJUGATION_SUPPORT * peak_in {
            continue;
        }
        out_phase.push(z.arg());
        in_phase.push(w.arg());
    }
    if out_phase.len() < 3 {
        return Err(Error::diagnostic("pulse supports do not overlap after alignment"));
    }
    let out_u = unwrap_phase(&out_phase);
    let neg_in: Vec<f64> = unwrap_phase(&in_phase).into_iter().map(|p| -p).collect();
    pearson(&out_u, &neg_in).ok_or_else(|| Error::diagnostic("phase is constant over the pulse support"))
}

pub fn phase_conjugation_score(input: &TimeSeries, output: &TimeSeries) -> Result<f64> {
    let m = time_reversal_match(input, output)?;
    phase_conjugation_with(input, output, &m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegimeKind {
    Decaying,
    Plateau,
    Growing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Regime {
    pub kind: RegimeKind,
    /// Least-squares slope of `ln|Ω|` (γ).
    pub slope: f64,
}

/// Classifies a retrieval tail by the fitted slope of `ln|Ω|`.
pub fn classify_regime(tail: &TimeSeries) -> Result<Regime> {
    if tail.len() < REGIME_MIN_SAMPLES {
        return Err(Error::diagnostic(format!(
            "tail window too short: {} samples, need {REGIME_MIN_SAMPLES}",
            tail.len()
        )));
    }
    let y: Vec<f64> = tail.values.iter().map(|z| z.norm().max(f64::MIN_POSITIVE).ln()).collect();
    let n = y.len() as f64;
    let mt = tail.taus.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sty, mut stt) = (0.0, 0.0);
    for (t, v) in tail.taus.iter().zip(&y) {
        sty += (t - mt) * (v - my);
        stt += (t - mt) * (t - mt);
    }
    let slope = sty / stt;
    let kind = if slope < -REGIME_THRESHOLD {
        RegimeKind::Decaying
    } else if slope > REGIME_THRESHOLD {
        RegimeKind::Growing
    } else {
        RegimeKind::Plateau
    };
    Ok(Regime { kind, slope })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Amplification {
    pub peak_ratio: f64,
    /// Ratio of `∫|Ω|²dτ`, a photon-number proxy.
    pub energy_ratio: f64,
}

pub fn amplification_and_count(input: &TimeSeries, output: &TimeSeries) -> Result<Amplification> {
    let i = pulse_metrics(input, None)?;
    let o = pulse_metrics(output, None)?;
    if !(i.energy > 0.0) {
        return Err(Error::diagnostic("zero input energy"));
    }
    Ok(Amplification {
        peak_ratio: o.peak_amp / i.peak_amp,
        energy_ratio: o.energy / i.energy,
    })
}

/// Signal part of the probe boundary value, before the retrieval epoch.
pub fn input_series(record: &SimulationRecord) -> TimeSeries {
    let spec = &record.spec;
    TimeSeries::sample(&record.taus, |t| spec.signal(t)).window(f64::NEG_INFINITY, spec.t_on - 2.0 * spec.t_switch)
}

/// First time at or after `t_on` the retrieval beam exceeds half its
/// amplitude at the exit.
pub fn front_arrival(record: &SimulationRecord) -> Option<f64> {
    let spec = &record.spec;
    if !(spec.omega_r0 > 0.0) {
        return None;
    }
    let start = record.index_at(spec.t_on);
    (start..record.taus.len())
        .find(|&i| record.exit_series[i].omega_p.norm() > 0.5 * spec.omega_r0)
        .map(|i| record.taus[i])
}

/// `[t_on − 2 t_switch, front arrival)`, closed by the end of the record when
/// the front never arrives.
pub fn retrieval_window(record: &SimulationRecord) -> (f64, f64) {
    let spec = &record.spec;
    let end = front_arrival(record)
        .unwrap_or_else(|| record.taus.last().copied().unwrap_or(0.0) + record.params.d_tau);
    (spec.t_on - 2.0 * spec.t_switch, end)
}

/// Exit `Ω_c` over the retrieval window.
pub fn output_series(record: &SimulationRecord) -> TimeSeries {
    let (a, b) = retrieval_window(record);
    TimeSeries {
        taus: record.taus.clone(),
        values: record.exit_c(),
    }
    .window(a, b)
}

/// Late part of the retrieval window used for regime classification: the
/// last quarter of `[t_on, front)`, ending `2 t_switch` before the front to
/// exclude the cutoff.
pub fn tail_window(record: &SimulationRecord) -> (f64, f64) {
    let spec = &record.spec;
    let (_, front) = retrieval_window(record);
    let end = front - 2.0 * spec.t_switch;
    (end - 0.25 * (front - spec.t_on), end)
}

/// Everything the metrics file reports about the retrieval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetrievalReport {
    pub retrieval_window: (f64, f64),
    pub front_arrival: Option<f64>,
    pub input: Option<PulseMetrics>,
    pub output: Option<PulseMetrics>,
    pub time_reversal: Option<ReversalMatch>,
    pub time_reversal_score: Option<f64>,
    pub phase_conjugation_score: Option<f64>,
    pub amplification: Option<Amplification>,
    pub regime: Option<Regime>,
    /// Reasons for any missing entry.
    pub notes: Vec<String>,
}

fn keep<T>(notes: &mut Vec<String>, name: &str, r: Result<T>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            notes.push(format!("{name}: {e}"));
            None
        }
    }
}

pub fn analyze_retrieval(record: &SimulationRecord) -> RetrievalReport {
    let mut notes = vec!["correlation scores are shape-comparison constructs, not fidelities".to_string()];
    let input = input_series(record);
    let output = output_series(record);
    let reversal = keep(&mut notes, "time_reversal", time_reversal_match(&input, &output));
    let conj = match &reversal {
        Some(m) => keep(&mut notes, "phase_conjugation", phase_conjugation_with(&input, &output, m)),
        None => None,
    };
    let (ta, tb) = tail_window(record);
    let tail = TimeSeries {
        taus: record.taus.clone(),
        values: record.exit_c(),
    }
    .window(ta, tb);
    let input_metrics = keep(&mut notes, "input", pulse_metrics(&input, None));
    let output_metrics = keep(&mut notes, "output", pulse_metrics(&output, None));
    let amplification = keep(&mut notes, "amplification", amplification_and_count(&input, &output));
    let regime = keep(&mut notes, "regime", classify_regime(&tail));
    RetrievalReport {
        retrieval_window: retrieval_window(record),
        front_arrival: front_arrival(record),
        input: input_metrics,
        output: output_metrics,
        time_reversal_score: reversal.map(|m| m.score),
        time_reversal: reversal,
        phase_conjugation_score: conj,
        amplification,
        regime,
        notes,
    }
}
