//! Monte Carlo estimation over the forward trajectory distribution.
//!
//! Trajectories are drawn ancestrally — initial joint/reservoir pair, then
//! local outcomes, then the two-point transition, then final local outcomes —
//! each stage by inverse-CDF lookup in a precomputed cumulative table.
//! Samples are organized in fixed-size blocks, each driven by its own
//! counter-seeded generator, and block partials are merged in block order;
//! estimates are therefore bitwise identical for a given seed no matter how
//! many worker threads run the blocks.

use std::collections::BTreeSet;

use rand::distr::{Distribution, StandardUniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::fluctuation::{
    analyze_process, increments, EnsembleReport, FluctuationError, ReportMode, SampledErrors,
    StochasticIncrements,
};
use crate::protocol::{MeasurementFrame, Time, Trajectory, TrajectoryIndices};
use crate::scalar::Scalar;

/// Samples per block; the unit of deterministic work distribution.
const BLOCK: usize = 4096;

/// Number of jointly estimated per-trajectory functionals.
const CHANNELS: usize = 7;

/// A trajectory functional the sampler can estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    /// `e^{-σ}`; its mean is the exponential average.
    ExponentialAverage,
    DeltaSA,
    DeltaSB,
    DeltaI,
    DeltaJ,
    BetaQ,
    /// `σ = ln(p/p̃)`; its mean is the forward-reverse divergence.
    LogRatio,
}

impl Quantity {
    fn channel(self) -> usize {
        match self {
            Quantity::ExponentialAverage => 0,
            Quantity::DeltaSA => 1,
            Quantity::DeltaSB => 2,
            Quantity::DeltaI => 3,
            Quantity::DeltaJ => 4,
            Quantity::BetaQ => 5,
            Quantity::LogRatio => 6,
        }
    }
}

/// A sampled mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SampleEstimate<T> {
    pub mean: T,
    pub std_error: T,
    pub samples: usize,
}

/// Means and standard errors of all estimated functionals, plus how much of
/// the support the sample actually visited.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSummary<T> {
    pub samples: usize,
    pub seed: u64,
    pub workers: usize,
    pub means: [T; CHANNELS],
    pub std_errors: [T; CHANNELS],
    /// Distinct outcome tuples seen across all samples.
    pub distinct_tuples: usize,
}

impl<T: Scalar> SampledSummary<T> {
    pub fn estimate(&self, quantity: Quantity) -> SampleEstimate<T> {
        let ch = quantity.channel();
        SampleEstimate {
            mean: self.means[ch],
            std_error: self.std_errors[ch],
            samples: self.samples,
        }
    }

    fn averages(&self) -> StochasticIncrements<T> {
        StochasticIncrements {
            delta_s_a: self.means[1],
            delta_s_b: self.means[2],
            delta_i: self.means[3],
            delta_j: self.means[4],
            beta_q: self.means[5],
        }
    }

    fn average_errors(&self) -> StochasticIncrements<T> {
        StochasticIncrements {
            delta_s_a: self.std_errors[1],
            delta_s_b: self.std_errors[2],
            delta_i: self.std_errors[3],
            delta_j: self.std_errors[4],
            beta_q: self.std_errors[5],
        }
    }
}

/// Cumulative lookup tables for the four ancestral stages; build once per
/// frame, draw any number of trajectories.
pub struct TrajectorySampler<T> {
    d_b: usize,
    d_r: usize,
    d_ab: usize,
    /// Cumulative `p_m p_r` over `(m, r)`, layout `m*d_r + r`.
    joint_initial: Vec<T>,
    /// Per-`m` cumulative rows of the initial overlap table.
    outcome_initial: Vec<T>,
    /// Per-`(m, r)` cumulative rows of the transition kernel.
    transition: Vec<T>,
    /// Per-`m'` cumulative rows of the final overlap table.
    outcome_final: Vec<T>,
}

impl<T: Scalar> TrajectorySampler<T> {
    pub fn new(frame: &MeasurementFrame<T>) -> Self {
        let (d_ab, d_r, d_tot) = (frame.d_ab(), frame.d_r(), frame.d_total());
        let p_m = frame.endpoint(Time::Initial).state.joint().probabilities();
        let p_r = frame.reservoir().density().probabilities();

        let mut joint_initial = Vec::with_capacity(d_tot);
        let mut acc = T::zero();
        for m in 0..d_ab {
            for r in 0..d_r {
                acc += p_m[m] * p_r[r];
                joint_initial.push(acc);
            }
        }

        let row_cumsum = |flat: &[T], width: usize| -> Vec<T> {
            let mut out = Vec::with_capacity(flat.len());
            for row in flat.chunks(width) {
                let mut acc = T::zero();
                for &w in row {
                    acc += w;
                    out.push(acc);
                }
            }
            out
        };

        let mut transition = Vec::with_capacity(d_tot * d_tot);
        for m in 0..d_ab {
            for r in 0..d_r {
                let mut acc = T::zero();
                for mf in 0..d_ab {
                    for rf in 0..d_r {
                        acc += frame.kernel(m, r, mf, rf);
                        transition.push(acc);
                    }
                }
            }
        }

        TrajectorySampler {
            d_b: frame.d_b(),
            d_r,
            d_ab,
            joint_initial,
            outcome_initial: row_cumsum(&frame.endpoint(Time::Initial).overlap, d_ab),
            transition,
            outcome_final: row_cumsum(&frame.endpoint(Time::Final).overlap, d_ab),
        }
    }

    /// Draws one outcome tuple from the forward distribution.
    pub fn draw_indices<R: Rng + ?Sized>(&self, rng: &mut R) -> TrajectoryIndices
    where
        StandardUniform: Distribution<T>,
    {
        let ir = draw(&self.joint_initial, rng.random::<T>());
        let (m, r) = (ir / self.d_r, ir % self.d_r);
        let row = &self.outcome_initial[m * self.d_ab..(m + 1) * self.d_ab];
        let ab = draw(row, rng.random::<T>());
        let d_tot = self.d_ab * self.d_r;
        let row = &self.transition[ir * d_tot..(ir + 1) * d_tot];
        let fr = draw(row, rng.random::<T>());
        let (mf, rf) = (fr / self.d_r, fr % self.d_r);
        let row = &self.outcome_final[mf * self.d_ab..(mf + 1) * self.d_ab];
        let abf = draw(row, rng.random::<T>());
        TrajectoryIndices {
            m,
            a: ab / self.d_b,
            b: ab % self.d_b,
            r,
            mf,
            af: abf / self.d_b,
            bf: abf % self.d_b,
            rf,
        }
    }

    /// Draws one trajectory with its forward and reverse weights filled in.
    pub fn sample<R: Rng + ?Sized>(&self, frame: &MeasurementFrame<T>, rng: &mut R) -> Trajectory<T>
    where
        StandardUniform: Distribution<T>,
    {
        let idx = self.draw_indices(rng);
        Trajectory {
            idx,
            forward: frame.forward_probability(idx),
            reverse: frame.reverse_probability(idx),
        }
    }
}

/// First index whose cumulative weight exceeds `u`, never landing on a
/// zero-mass cell (equal neighbouring cumulative values).
fn draw<T: Scalar>(cumulative: &[T], u: T) -> usize {
    let mut idx = cumulative.partition_point(|&c| c <= u);
    if idx >= cumulative.len() {
        // u at or above the final cumulative value (roundoff): clamp, then
        // back off any trailing zero-mass cells.
        idx = cumulative.len() - 1;
        while idx > 0 && cumulative[idx] == cumulative[idx - 1] {
            idx -= 1;
        }
    }
    idx
}

/// SplitMix64-style mix of the user seed and a block counter; also used to
/// derive per-instance seeds in sweeps.
pub(crate) fn block_seed(seed: u64, block: u64) -> u64 {
    let mut z = seed.wrapping_add(block.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct BlockPartial<T> {
    sums: [T; CHANNELS],
    square_sums: [T; CHANNELS],
    tuples: BTreeSet<TrajectoryIndices>,
}

fn run_block<T: Scalar>(
    frame: &MeasurementFrame<T>,
    tables: &TrajectorySampler<T>,
    seed: u64,
    block: usize,
    samples: usize,
) -> Result<BlockPartial<T>, FluctuationError>
where
    StandardUniform: Distribution<T>,
{
    let mut rng = ChaCha12Rng::seed_from_u64(block_seed(seed, block as u64));
    let mut partial = BlockPartial {
        sums: [T::zero(); CHANNELS],
        square_sums: [T::zero(); CHANNELS],
        tuples: BTreeSet::new(),
    };
    for _ in 0..samples {
        let idx = tables.draw_indices(&mut rng);
        let inc = increments(frame, idx)?;
        let sigma = inc.delta_s_a + inc.delta_s_b - inc.delta_i - inc.beta_q;
        let values = [
            (-sigma).exp(),
            inc.delta_s_a,
            inc.delta_s_b,
            inc.delta_i,
            inc.delta_j,
            inc.beta_q,
            sigma,
        ];
        for (ch, v) in values.into_iter().enumerate() {
            partial.sums[ch] += v;
            partial.square_sums[ch] += v * v;
        }
        partial.tuples.insert(idx);
    }
    Ok(partial)
}

/// Draws `samples` trajectories and estimates all functionals at once.
///
/// `samples` must be at least two and `workers` at least one; the estimate is
/// a pure function of `(frame, samples, seed)` — `workers` only distributes
/// blocks over threads.
pub fn sample_summary<T: Scalar>(
    frame: &MeasurementFrame<T>,
    samples: usize,
    seed: u64,
    workers: usize,
) -> Result<SampledSummary<T>, FluctuationError>
where
    StandardUniform: Distribution<T>,
{
    assert!(samples >= 2, "need at least two samples");
    assert!(workers >= 1, "need at least one worker");
    let tables = TrajectorySampler::new(frame);
    let blocks = samples.div_ceil(BLOCK);
    let block_len = |b: usize| -> usize {
        if b + 1 == blocks && samples % BLOCK != 0 {
            samples % BLOCK
        } else {
            BLOCK
        }
    };

    // Each worker takes blocks round-robin; partials are merged in block
    // order below, so the thread layout never affects the result.
    let mut partials: Vec<(usize, BlockPartial<T>)> = if workers == 1 || blocks == 1 {
        (0..blocks)
            .map(|b| Ok((b, run_block(frame, &tables, seed, b, block_len(b))?)))
            .collect::<Result<_, FluctuationError>>()?
    } else {
        let threads = workers.min(blocks);
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..threads)
                .map(|w| {
                    let tables = &tables;
                    scope.spawn(move || {
                        (w..blocks)
                            .step_by(threads)
                            .map(|b| Ok((b, run_block(frame, tables, seed, b, block_len(b))?)))
                            .collect::<Result<Vec<_>, FluctuationError>>()
                    })
                })
                .collect();
            let mut all = Vec::with_capacity(blocks);
            for handle in handles {
                all.extend(handle.join().expect("sampler worker panicked")?);
            }
            Ok::<_, FluctuationError>(all)
        })?
    };
    partials.sort_by_key(|(b, _)| *b);

    let mut sums = [T::zero(); CHANNELS];
    let mut square_sums = [T::zero(); CHANNELS];
    let mut tuples = BTreeSet::new();
    for (_, partial) in partials {
        for ch in 0..CHANNELS {
            sums[ch] += partial.sums[ch];
            square_sums[ch] += partial.square_sums[ch];
        }
        tuples.extend(partial.tuples);
    }

    let n = T::cst(samples as f64);
    let mut means = [T::zero(); CHANNELS];
    let mut std_errors = [T::zero(); CHANNELS];
    for ch in 0..CHANNELS {
        means[ch] = sums[ch] / n;
        let variance =
            ((square_sums[ch] - n * means[ch] * means[ch]) / (n - T::one())).max(T::zero());
        std_errors[ch] = (variance / n).sqrt();
    }
    Ok(SampledSummary {
        samples,
        seed,
        workers,
        means,
        std_errors,
        distinct_tuples: tuples.len(),
    })
}

/// Estimates a single trajectory functional.
pub fn estimate<T: Scalar>(
    frame: &MeasurementFrame<T>,
    quantity: Quantity,
    samples: usize,
    seed: u64,
    workers: usize,
) -> Result<SampleEstimate<T>, FluctuationError>
where
    StandardUniform: Distribution<T>,
{
    Ok(sample_summary(frame, samples, seed, workers)?.estimate(quantity))
}

/// Full report in sampled mode: the exponential average, the increment
/// averages, and the divergence are Monte Carlo estimates with standard
/// errors, while the structural fields (support size, masses, the detailed
/// ratio residual, and the density-functional entropy changes) come from the
/// exact enumeration, which stays cheap at enumerable sizes.
pub fn sampled_report<T: Scalar>(
    frame: &MeasurementFrame<T>,
    samples: usize,
    seed: u64,
    workers: usize,
) -> Result<EnsembleReport<T>, FluctuationError>
where
    StandardUniform: Distribution<T>,
{
    let exact = analyze_process(frame)?;
    let summary = sample_summary(frame, samples, seed, workers)?;
    Ok(EnsembleReport {
        mode: ReportMode::Sampled {
            samples,
            seed,
            workers: summary.workers,
        },
        ift_value: summary.means[0],
        averages: summary.averages(),
        kl_divergence: summary.means[6],
        inequality_slack: {
            let a = summary.averages();
            crate::fluctuation::inequality_slack(&a)
        },
        standard_errors: Some(SampledErrors {
            ift: summary.std_errors[0],
            kl: summary.std_errors[6],
            averages: summary.average_errors(),
        }),
        ..exact
    })
}
