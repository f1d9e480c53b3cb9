//! Integrated-gradients attribution over token embeddings.
//!
//! For a scalar anomaly score `F` (here the detection margin, distance to
//! origin minus radius) and token inputs `E` with baseline `E'`, the
//! attribution of coordinate `(t, j)` is
//!
//! ```text
//! a_tj = (E_tj - E'_tj) * (1/m) * sum_{k=1..m} dF/dE_tj (E' + alpha_k (E - E'))
//! ```
//!
//! with midpoints `alpha_k = (k - 1/2) / m`. Token scores sum coordinates,
//! word scores sum token scores across each word's span in input order (no
//! re-association, so word totals are bit-identical to the per-span sums).
//! The completeness gap `|sum_t a_t - (F(E) - F(E'))|` is reported so callers
//! can judge quadrature quality.
//!
//! Gradients are only evaluated at path midpoints, never at the endpoints,
//! so a baseline sitting exactly at the pooled origin (where the margin's
//! gradient is undefined) is fine: only its value is used. The toy tokenizer
//! never emits padding tokens; every scored token is a content token.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoder::{
    pool, pool_vjp, token_inputs, EncoderError, TokenizedPrompt, ToyEncoderParams, WordSpan,
    ORIGIN_GRAD_TOL,
};
use crate::geometry::euclidean_norm;
use crate::hsvdd::HsvddModel;

/// Default number of quadrature steps.
pub const DEFAULT_IG_STEPS: usize = 64;

#[derive(Debug, Error)]
pub enum AttributionError {
    #[error("integration needs at least one step")]
    NoSteps,
    #[error("encoder error: {0}")]
    Encoder(#[from] EncoderError),
    #[error("model curvature/dimension differs from encoder parameters")]
    CurvatureMismatch,
    #[error(
        "integration path passes within {norm:.3e} of the origin at step {step}; \
         the margin gradient is undefined there — retry with the pad-token baseline"
    )]
    SingularPath { step: usize, norm: f64 },
    #[error("objective gradient is singular at the evaluated point (pooled norm {0:.3e})")]
    SingularPoint(f64),
    #[error("word span {index} is out of range or overlaps another span")]
    BadSpan { index: usize },
}

/// Path start for the integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    /// All-zero token inputs; the canonical choice, starts at the origin.
    ZeroEmbedding,
    /// Every token replaced by the padding token's embedding.
    PadToken,
}

/// Attribution settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IgConfig {
    pub steps: usize,
    pub baseline: Baseline,
}

impl Default for IgConfig {
    fn default() -> Self {
        Self {
            steps: DEFAULT_IG_STEPS,
            baseline: Baseline::ZeroEmbedding,
        }
    }
}

/// Attribution output at token and word granularity.
#[derive(Debug, Clone)]
pub struct AttributionVector {
    pub token_scores: Vec<f64>,
    pub word_scores: Vec<f64>,
    pub completeness_gap: f64,
    /// Objective value at the input (the detection margin).
    pub value: f64,
    /// Objective value at the baseline.
    pub baseline_value: f64,
}

/// Raw output of the generic quadrature loop.
#[derive(Debug, Clone)]
pub struct IgRaw {
    pub token_scores: Vec<f64>,
    pub completeness_gap: f64,
    pub value: f64,
    pub baseline_value: f64,
}

/// Midpoint-rule integrated gradients over arbitrary token inputs.
///
/// `grad_fn` maps a token-input matrix to its per-token gradient matrix and
/// is only called at path midpoints; `value_fn` maps a matrix to the scalar
/// objective and is only called at the two endpoints, so it must be total
/// even where the gradient is not. A [`AttributionError::SingularPoint`]
/// from `grad_fn` is re-tagged with the offending quadrature step as
/// [`AttributionError::SingularPath`].
pub fn ig_over_inputs<G, V>(
    inputs: &[Vec<f64>],
    baseline: &[Vec<f64>],
    steps: usize,
    mut grad_fn: G,
    value_fn: V,
) -> Result<IgRaw, AttributionError>
where
    G: FnMut(&[Vec<f64>]) -> Result<Vec<Vec<f64>>, AttributionError>,
    V: Fn(&[Vec<f64>]) -> f64,
{
    if steps == 0 {
        return Err(AttributionError::NoSteps);
    }
    assert_eq!(inputs.len(), baseline.len(), "baseline must match token count");
    let tokens = inputs.len();
    let dim = if tokens > 0 { inputs[0].len() } else { 0 };

    let mut grad_sum = vec![vec![0.0; dim]; tokens];
    let mut interp = vec![vec![0.0; dim]; tokens];
    for k in 1..=steps {
        let alpha = (k as f64 - 0.5) / steps as f64;
        for t in 0..tokens {
            for j in 0..dim {
                interp[t][j] = baseline[t][j] + alpha * (inputs[t][j] - baseline[t][j]);
            }
        }
        let grads = grad_fn(&interp).map_err(|e| match e {
            AttributionError::SingularPoint(norm) => {
                AttributionError::SingularPath { step: k, norm }
            }
            other => other,
        })?;
        for t in 0..tokens {
            for j in 0..dim {
                grad_sum[t][j] += grads[t][j];
            }
        }
    }

    let token_scores: Vec<f64> = (0..tokens)
        .map(|t| {
            (0..dim)
                .map(|j| (inputs[t][j] - baseline[t][j]) * grad_sum[t][j] / steps as f64)
                .sum()
        })
        .collect();

    let value = value_fn(inputs);
    let baseline_value = value_fn(baseline);
    let total: f64 = token_scores.iter().sum();
    let completeness_gap = (total - (value - baseline_value)).abs();

    Ok(IgRaw {
        token_scores,
        completeness_gap,
        value,
        baseline_value,
    })
}

/// The per-token gradient of the detection margin `||u|| - R`. Errors with
/// [`AttributionError::SingularPoint`] when the pooled vector sits at the
/// origin. Exposed for reuse by the sanitizer and attack search.
pub fn margin_gradients(
    inputs: &[Vec<f64>],
    gamma: f64,
) -> Result<Vec<Vec<f64>>, AttributionError> {
    let u = pool(inputs, gamma);
    let norm = euclidean_norm(&u);
    if norm < ORIGIN_GRAD_TOL {
        return Err(AttributionError::SingularPoint(norm));
    }
    let grad_u: Vec<f64> = u.iter().map(|uj| uj / norm).collect();
    Ok(pool_vjp(inputs, gamma, &grad_u))
}

/// Margin value alone; defined everywhere (the origin scores `-radius`).
pub fn margin_value(inputs: &[Vec<f64>], gamma: f64, radius: f64) -> f64 {
    euclidean_norm(&pool(inputs, gamma)) - radius
}

/// Integrated gradients of the detection margin for a tokenized prompt.
pub fn integrated_gradients(
    tp: &TokenizedPrompt,
    model: &HsvddModel,
    params: &ToyEncoderParams,
    cfg: &IgConfig,
) -> Result<AttributionVector, AttributionError> {
    if model.curvature() != &params.curvature {
        return Err(AttributionError::CurvatureMismatch);
    }
    let inputs = token_inputs(tp, params)?;
    let dim = params.dim();
    let baseline: Vec<Vec<f64>> = match cfg.baseline {
        Baseline::ZeroEmbedding => vec![vec![0.0; dim]; inputs.len()],
        Baseline::PadToken => vec![params.pad_token_input(); inputs.len()],
    };

    let gamma = params.gamma;
    let radius = model.radius();
    let raw = ig_over_inputs(
        &inputs,
        &baseline,
        cfg.steps,
        |m| margin_gradients(m, gamma),
        |m| margin_value(m, gamma, radius),
    )?;

    let word_scores = aggregate_to_words(&raw.token_scores, tp.word_spans())?;
    Ok(AttributionVector {
        token_scores: raw.token_scores,
        word_scores,
        completeness_gap: raw.completeness_gap,
        value: raw.value,
        baseline_value: raw.baseline_value,
    })
}

/// Sums token scores over each word's span, in input order. Spans must
/// partition the token list.
pub fn aggregate_to_words(
    token_scores: &[f64],
    spans: &[WordSpan],
) -> Result<Vec<f64>, AttributionError> {
    let mut covered = vec![false; token_scores.len()];
    let mut scores = vec![0.0; spans.len()];
    for (index, span) in spans.iter().enumerate() {
        if span.token_end >= token_scores.len()
            || span.token_start > span.token_end
            || span.word_index >= spans.len()
        {
            return Err(AttributionError::BadSpan { index });
        }
        let mut sum = 0.0;
        for t in span.token_start..=span.token_end {
            if covered[t] {
                return Err(AttributionError::BadSpan { index });
            }
            covered[t] = true;
            sum += token_scores[t];
        }
        scores[span.word_index] = sum;
    }
    if covered.iter().any(|c| !c) {
        return Err(AttributionError::BadSpan { index: spans.len() });
    }
    Ok(scores)
}

/// The `k` highest-scoring words, ties broken toward earlier positions.
pub fn top_k_words(av: &AttributionVector, words: &[String], k: usize) -> Vec<(String, f64)> {
    let mut order: Vec<usize> = (0..av.word_scores.len().min(words.len())).collect();
    order.sort_by(|&a, &b| {
        av.word_scores[b]
            .partial_cmp(&av.word_scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
        .into_iter()
        .take(k)
        .map(|i| (words[i].clone(), av.word_scores[i]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::tokenize;
    use crate::geometry::CurvatureParams;
    use crate::hsvdd::HsvddModel;

    fn lexicon_params(words: &[&str]) -> ToyEncoderParams {
        ToyEncoderParams {
            harmful_lexicon: words.iter().map(|w| w.to_string()).collect(),
            ..Default::default()
        }
    }

    fn model_for(params: &ToyEncoderParams, radius: f64) -> HsvddModel {
        HsvddModel::new(params.curvature.clone(), radius, 0.1, 100).unwrap()
    }

    #[test]
    fn linear_objective_is_attributed_exactly_with_two_steps() {
        // f(E) = sum w_tj E_tj: the gradient is constant, so the midpoint rule
        // is exact for any step count >= 1 and the completeness gap vanishes.
        let weights = vec![vec![0.5, -1.0, 2.0], vec![1.5, 0.25, -0.75]];
        let inputs = vec![vec![0.2, 0.4, -0.1], vec![-0.3, 0.8, 0.6]];
        let baseline = vec![vec![0.0; 3]; 2];
        let w = weights.clone();
        let wv = weights.clone();
        let raw = ig_over_inputs(
            &inputs,
            &baseline,
            2,
            move |_| Ok(w.clone()),
            move |m| {
                m.iter()
                    .zip(&wv)
                    .map(|(row, wrow)| row.iter().zip(wrow).map(|(a, b)| a * b).sum::<f64>())
                    .sum()
            },
        )
        .unwrap();
        for t in 0..2 {
            let expected: f64 = inputs[t].iter().zip(&weights[t]).map(|(a, b)| a * b).sum();
            assert!((raw.token_scores[t] - expected).abs() <= 1e-12);
        }
        assert!(raw.completeness_gap <= 1e-12);
    }

    #[test]
    fn completeness_gap_is_small_and_shrinks_with_more_steps() {
        let params = lexicon_params(&["bloodfeast"]);
        let model = model_for(&params, 0.8);
        let tp = tokenize("the bloodfeast near a quiet harbor town", params.max_len).unwrap();
        let mut previous = f64::INFINITY;
        for steps in [8, 16, 32, 64, 128, 256] {
            let cfg = IgConfig { steps, baseline: Baseline::ZeroEmbedding };
            let av = integrated_gradients(&tp, &model, &params, &cfg).unwrap();
            let scale = (av.value - av.baseline_value).abs().max(1e-12);
            assert!(
                av.completeness_gap / scale <= 0.05,
                "gap {} too large at {} steps",
                av.completeness_gap,
                steps
            );
            assert!(
                av.completeness_gap <= 1.1 * previous + 1e-12,
                "gap did not shrink: {} -> {}",
                previous,
                av.completeness_gap
            );
            previous = av.completeness_gap;
        }
    }

    #[test]
    fn offset_word_dominates_and_matches_leave_one_out() {
        let params = lexicon_params(&["slaughterpit"]);
        let model = model_for(&params, 0.8);
        let text = "green meadow near the slaughterpit by dawn";
        let tp = tokenize(text, params.max_len).unwrap();
        let cfg = IgConfig::default();
        let av = integrated_gradients(&tp, &model, &params, &cfg).unwrap();
        let top = top_k_words(&av, tp.words(), 1);
        assert_eq!(top[0].0, "slaughterpit");

        // Leave-one-word-out oracle: removing which word drops the margin most?
        let full_inputs = token_inputs(&tp, &params).unwrap();
        let full_margin = margin_value(&full_inputs, params.gamma, model.radius());
        let mut best = (String::new(), f64::NEG_INFINITY);
        for word in tp.words() {
            let without: Vec<&str> = tp
                .words()
                .iter()
                .filter(|w| w != &word)
                .map(|s| s.as_str())
                .collect();
            let reduced = tokenize(&without.join(" "), params.max_len).unwrap();
            let reduced_inputs = token_inputs(&reduced, &params).unwrap();
            let drop = full_margin - margin_value(&reduced_inputs, params.gamma, model.radius());
            if drop > best.1 {
                best = (word.clone(), drop);
            }
        }
        assert_eq!(best.0, "slaughterpit");
    }

    #[test]
    fn word_scores_are_exact_span_sums() {
        let params = ToyEncoderParams::default();
        let model = model_for(&params, 0.5);
        let tp = tokenize("remarkable weather permitting excursions", params.max_len).unwrap();
        let av = integrated_gradients(&tp, &model, &params, &IgConfig::default()).unwrap();
        for span in tp.word_spans() {
            let mut manual = 0.0;
            for t in span.token_start..=span.token_end {
                manual += av.token_scores[t];
            }
            // Same summation order means bitwise equality.
            assert_eq!(av.word_scores[span.word_index], manual);
        }
    }

    #[test]
    fn singular_path_is_reported_with_pad_token_advice() {
        // Token inputs {v, -v} pool to the origin at every path point.
        let v = vec![0.4; 4];
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        let inputs = vec![v, neg];
        let baseline = vec![vec![0.0; 4]; 2];
        let err = ig_over_inputs(
            &inputs,
            &baseline,
            8,
            |m| margin_gradients(m, 1.0),
            |m| margin_value(m, 1.0, 0.5),
        )
        .unwrap_err();
        match &err {
            AttributionError::SingularPath { step: 1, .. } => {
                assert!(err.to_string().contains("pad-token baseline"));
            }
            other => panic!("expected SingularPath at step 1, got {other:?}"),
        }
    }

    #[test]
    fn pad_baseline_avoids_the_origin_start() {
        let params = lexicon_params(&["warmachine"]);
        let model = model_for(&params, 0.8);
        let tp = tokenize("a warmachine in the field", params.max_len).unwrap();
        let cfg = IgConfig { steps: 64, baseline: Baseline::PadToken };
        let av = integrated_gradients(&tp, &model, &params, &cfg).unwrap();
        // The pad baseline has its own nonzero margin value.
        assert!(av.baseline_value > -model.radius());
        assert_eq!(av.token_scores.len(), tp.token_count());
    }

    #[test]
    fn bad_spans_are_rejected() {
        let scores = [1.0, 2.0, 3.0];
        let overlapping = [
            WordSpan { word_index: 0, token_start: 0, token_end: 1 },
            WordSpan { word_index: 1, token_start: 1, token_end: 2 },
        ];
        assert!(matches!(
            aggregate_to_words(&scores, &overlapping),
            Err(AttributionError::BadSpan { .. })
        ));
        let gap = [WordSpan { word_index: 0, token_start: 0, token_end: 0 }];
        assert!(matches!(
            aggregate_to_words(&scores, &gap),
            Err(AttributionError::BadSpan { .. })
        ));
    }

    #[test]
    fn top_k_breaks_ties_toward_earlier_words() {
        let av = AttributionVector {
            token_scores: vec![],
            word_scores: vec![0.5, 0.7, 0.7, 0.1],
            completeness_gap: 0.0,
            value: 0.0,
            baseline_value: 0.0,
        };
        let words: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let top = top_k_words(&av, &words, 2);
        assert_eq!(top[0].0, "b");
        assert_eq!(top[1].0, "c");
        // k beyond the vocabulary returns everything.
        assert_eq!(top_k_words(&av, &words, 10).len(), 4);
    }

    #[test]
    fn zero_steps_is_an_error() {
        let params = ToyEncoderParams::default();
        let model = model_for(&params, 0.5);
        let tp = tokenize("some words", params.max_len).unwrap();
        let cfg = IgConfig { steps: 0, baseline: Baseline::ZeroEmbedding };
        assert!(matches!(
            integrated_gradients(&tp, &model, &params, &cfg),
            Err(AttributionError::NoSteps)
        ));
    }

    #[test]
    fn mismatched_curvature_is_rejected() {
        let params = ToyEncoderParams::default();
        let other = CurvatureParams::new(1.0, 8).unwrap();
        let model = HsvddModel::new(other, 0.5, 0.1, 10).unwrap();
        let tp = tokenize("some words", params.max_len).unwrap();
        assert!(matches!(
            integrated_gradients(&tp, &model, &params, &IgConfig::default()),
            Err(AttributionError::CurvatureMismatch)
        ));
    }
}
