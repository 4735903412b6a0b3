//! Forward pass, exact backward pass and prediction.
//!
//! Shapes: `T` marked tokens, `d` embedding width, `g` GAT width, `D = d + g`
//! entity width, `L` labels. Activations are row-major `T × d` / `T × g`.

use std::ops::Range;

use rand::Rng;

use super::config::ModelConfig;
use super::params::{Component, ModelParameters};
use crate::data::{build_marked_graph, insert_typed_markers, DependencyGraph, Instance, MarkedSequence};
use crate::error::{Error, Result};
use crate::rng::fnv1a64;

/// Embedding row of a token string.
pub fn bucket_of(token: &str, buckets: usize) -> usize {
    (fnv1a64(token.as_bytes()) % buckets as u64) as usize
}

/// Everything the network reads from one marked instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelInput {
    pub token_ids: Vec<usize>,
    pub neighbors: Vec<Vec<usize>>,
    pub subj_anchor: usize,
    pub obj_anchor: usize,
    pub subj_tokens: Range<usize>,
    pub obj_tokens: Range<usize>,
}

impl ModelInput {
    pub fn new(marked: &MarkedSequence, graph: &DependencyGraph, config: &ModelConfig) -> Self {
        assert_eq!(marked.len(), graph.num_nodes(), "marked sequence and graph disagree");
        Self {
            token_ids: marked.tokens.iter().map(|t| bucket_of(t, config.vocab_hash_buckets)).collect(),
            neighbors: graph.neighbors.clone(),
            subj_anchor: marked.subj_anchor,
            obj_anchor: marked.obj_anchor,
            subj_tokens: marked.subj_tokens.0..marked.subj_tokens.1 + 1,
            obj_tokens: marked.obj_tokens.0..marked.obj_tokens.1 + 1,
        }
    }

    /// Marks the instance and builds its graph.
    pub fn from_instance(inst: &Instance, config: &ModelConfig) -> Result<Self> {
        let marked = insert_typed_markers(inst);
        let graph = build_marked_graph(inst, &marked)?;
        Ok(Self::new(&marked, &graph, config))
    }

    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }
}

/// Inverted-dropout multipliers (0 or `1/(1-p)`) for embeddings and GAT
/// outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMasks {
    pub embed: Vec<f64>,
    pub gat: Vec<f64>,
}

impl DropoutMasks {
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, tokens: usize, config: &ModelConfig) -> Self {
        let p = config.dropout_rate;
        let keep = 1.0 / (1.0 - p);
        let mut draw =
            |n: usize| -> Vec<f64> { (0..n).map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep }).collect() };
        let embed = draw(tokens * config.embed_dim);
        let gat = draw(tokens * config.gat_dim);
        Self { embed, gat }
    }
}

/// Cached activations of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace<'a> {
    pub input: &'a ModelInput,
    pub masks: Option<DropoutMasks>,
    /// Token embeddings after dropout, `T × d`.
    pub embeddings: Vec<f64>,
    /// `x · W`, `T × g`.
    pub projected: Vec<f64>,
    /// Pre-LeakyReLU attention logits, aligned with `input.neighbors`.
    pub attention_preact: Vec<Vec<f64>>,
    /// Attention coefficients, aligned with `input.neighbors`.
    pub attention: Vec<Vec<f64>>,
    /// GAT outputs after dropout, `T × g`.
    pub gat_out: Vec<f64>,
    pub subj_repr: Vec<f64>,
    pub obj_repr: Vec<f64>,
    pub scores: Vec<f64>,
    pub probs: Vec<f64>,
}

fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Index of the largest score; the smallest index wins ties.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Forward pass. Passing an RNG enables training mode (fresh dropout masks).
pub fn forward<'a, R: Rng + ?Sized>(
    params: &ModelParameters,
    input: &'a ModelInput,
    config: &ModelConfig,
    dropout_rng: Option<&mut R>,
) -> ForwardTrace<'a> {
    let masks = dropout_rng.map(|rng| DropoutMasks::sample(rng, input.len(), config));
    forward_with_masks(params, input, config, masks)
}

/// Forward pass with explicit dropout masks (`None` = inference).
pub fn forward_with_masks<'a>(
    params: &ModelParameters,
    input: &'a ModelInput,
    config: &ModelConfig,
    masks: Option<DropoutMasks>,
) -> ForwardTrace<'a> {
    let layout = params.layout();
    let (d, g, labels) = (layout.embed_dim, layout.gat_dim, layout.num_labels);
    assert_eq!((d, g, labels), (config.embed_dim, config.gat_dim, config.num_labels), "config/parameter mismatch");
    let t_len = input.len();
    assert_eq!(input.neighbors.len(), t_len, "graph size mismatch");
    if let Some(m) = &masks {
        assert_eq!((m.embed.len(), m.gat.len()), (t_len * d, t_len * g), "dropout mask size mismatch");
    }
    let emb_table = params.get(Component::Embeddings);
    let w = params.get(Component::GatWeight);
    let a = params.get(Component::GatAttention);
    let (a_src, a_dst) = a.split_at(g);

    let mut embeddings = vec![0.0; t_len * d];
    for (t, &b) in input.token_ids.iter().enumerate() {
        let row = &emb_table[b * d..(b + 1) * d];
        let out = &mut embeddings[t * d..(t + 1) * d];
        out.copy_from_slice(row);
        if let Some(m) = &masks {
            for (o, k) in out.iter_mut().zip(&m.embed[t * d..(t + 1) * d]) {
                *o *= k;
            }
        }
    }

    let mut projected = vec![0.0; t_len * g];
    for t in 0..t_len {
        let x = &embeddings[t * d..(t + 1) * d];
        let z = &mut projected[t * g..(t + 1) * g];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (zk, wk) in z.iter_mut().zip(&w[i * g..(i + 1) * g]) {
                *zk += xi * wk;
            }
        }
    }
    let src: Vec<f64> = (0..t_len).map(|t| dot(a_src, &projected[t * g..(t + 1) * g])).collect();
    let dst: Vec<f64> = (0..t_len).map(|t| dot(a_dst, &projected[t * g..(t + 1) * g])).collect();

    let slope = config.leaky_relu_slope;
    let mut attention_preact = Vec::with_capacity(t_len);
    let mut attention = Vec::with_capacity(t_len);
    let mut gat_out = vec![0.0; t_len * g];
    for (i, nbrs) in input.neighbors.iter().enumerate() {
        let pre: Vec<f64> = nbrs.iter().map(|&j| src[i] + dst[j]).collect();
        let mut alpha: Vec<f64> = pre.iter().map(|&u| if u > 0.0 { u } else { slope * u }).collect();
        softmax_in_place(&mut alpha);
        let out = &mut gat_out[i * g..(i + 1) * g];
        for (&j, &al) in nbrs.iter().zip(&alpha) {
            for (o, z) in out.iter_mut().zip(&projected[j * g..(j + 1) * g]) {
                *o += al * z;
            }
        }
        attention_preact.push(pre);
        attention.push(alpha);
    }
    if let Some(m) = &masks {
        for (o, k) in gat_out.iter_mut().zip(&m.gat) {
            *o *= k;
        }
    }

    let entity = |anchor: usize, span: &Range<usize>| -> Vec<f64> {
        let mut e = Vec::with_capacity(d + g);
        e.extend_from_slice(&embeddings[anchor * d..(anchor + 1) * d]);
        let mut pooled = vec![0.0; g];
        for t in span.clone() {
            for (p, o) in pooled.iter_mut().zip(&gat_out[t * g..(t + 1) * g]) {
                *p += o;
            }
        }
        let n = span.len() as f64;
        e.extend(pooled.into_iter().map(|p| p / n));
        e
    };
    let subj_repr = entity(input.subj_anchor, &input.subj_tokens);
    let obj_repr = entity(input.obj_anchor, &input.obj_tokens);

    let scores = label_scores(params, &subj_repr, &obj_repr);
    let mut probs = scores.clone();
    softmax_in_place(&mut probs);

    ForwardTrace {
        input,
        masks,
        embeddings,
        projected,
        attention_preact,
        attention,
        gat_out,
        subj_repr,
        obj_repr,
        scores,
        probs,
    }
}

/// `e_s · M_r · e_o + lin_r · [e_s ‖ e_o] + b_r` for every label r.
pub(crate) fn label_scores(params: &ModelParameters, es: &[f64], eo: &[f64]) -> Vec<f64> {
    let dim = params.layout().entity_dim();
    let m = params.get(Component::Bilinear);
    let b = params.get(Component::BilinearBias);
    let lin = params.get(Component::Linear);
    (0..params.layout().num_labels)
        .map(|r| {
            let mr = &m[r * dim * dim..(r + 1) * dim * dim];
            let bilinear: f64 = es.iter().enumerate().map(|(p, &sp)| sp * dot(&mr[p * dim..(p + 1) * dim], eo)).sum();
            let lr = &lin[r * 2 * dim..(r + 1) * 2 * dim];
            bilinear + dot(&lr[..dim], es) + dot(&lr[dim..], eo) + b[r]
        })
        .collect()
}

/// Softmax cross-entropy of the gold label and its exact gradient with
/// respect to every parameter, as a flat vector aligned with `params`.
pub fn loss_and_backward(
    params: &ModelParameters,
    trace: &ForwardTrace<'_>,
    config: &ModelConfig,
    gold: usize,
) -> Result<(f64, Vec<f64>)> {
    let mut grad = vec![0.0; params.len()];
    let loss = loss_and_backward_into(params, trace, config, gold, &mut grad)?;
    Ok((loss, grad))
}

/// As [`loss_and_backward`], writing into a caller-owned, zeroed gradient
/// buffer. Only the embedding rows of the input's tokens are written.
pub fn loss_and_backward_into(
    params: &ModelParameters,
    trace: &ForwardTrace<'_>,
    config: &ModelConfig,
    gold: usize,
    grad: &mut [f64],
) -> Result<f64> {
    let layout = params.layout();
    let (d, g, labels) = (layout.embed_dim, layout.gat_dim, layout.num_labels);
    let dim = d + g;
    if gold >= labels {
        return Err(Error::LabelOutOfRange { index: gold, num_labels: labels });
    }
    if grad.len() != layout.len() {
        return Err(Error::LengthMismatch {
            what: "gradient buffer vs parameters",
            left: grad.len(),
            right: layout.len(),
        });
    }
    let input = trace.input;
    let t_len = input.len();
    let loss = log_sum_exp(&trace.scores) - trace.scores[gold];

    let mut dscore = trace.probs.clone();
    dscore[gold] -= 1.0;

    // Head.
    let (es, eo) = (&trace.subj_repr, &trace.obj_repr);
    let m = params.get(Component::Bilinear);
    let lin = params.get(Component::Linear);
    let mut d_es = vec![0.0; dim];
    let mut d_eo = vec![0.0; dim];
    {
        let bil_range = layout.range(Component::Bilinear);
        let lin_range = layout.range(Component::Linear);
        let bias_range = layout.range(Component::BilinearBias);
        for r in 0..labels {
            let ds = dscore[r];
            grad[bias_range.start + r] = ds;
            let mr = &m[r * dim * dim..(r + 1) * dim * dim];
            let dmr = &mut grad[bil_range.start + r * dim * dim..bil_range.start + (r + 1) * dim * dim];
            for p in 0..dim {
                let row = &mr[p * dim..(p + 1) * dim];
                d_es[p] += ds * dot(row, eo);
                let coef = ds * es[p];
                for q in 0..dim {
                    d_eo[q] += coef * row[q];
                    dmr[p * dim + q] += coef * eo[q];
                }
            }
            let lr = &lin[r * 2 * dim..(r + 1) * 2 * dim];
            let dlr = &mut grad[lin_range.start + r * 2 * dim..lin_range.start + (r + 1) * 2 * dim];
            for p in 0..dim {
                d_es[p] += ds * lr[p];
                d_eo[p] += ds * lr[dim + p];
                dlr[p] += ds * es[p];
                dlr[dim + p] += ds * eo[p];
            }
        }
    }

    // Entity representations back to embeddings and GAT outputs.
    let mut dx = vec![0.0; t_len * d];
    let mut dout = vec![0.0; t_len * g];
    for (anchor, span, de) in
        [(input.subj_anchor, &input.subj_tokens, &d_es), (input.obj_anchor, &input.obj_tokens, &d_eo)]
    {
        for k in 0..d {
            dx[anchor * d + k] += de[k];
        }
        let n = span.len() as f64;
        for t in span.clone() {
            for k in 0..g {
                dout[t * g + k] += de[d + k] / n;
            }
        }
    }
    if let Some(masks) = &trace.masks {
        for (o, k) in dout.iter_mut().zip(&masks.gat) {
            *o *= k;
        }
    }

    // Attention layer.
    let a = params.get(Component::GatAttention);
    let (a_src, a_dst) = a.split_at(g);
    let z = &trace.projected;
    let mut dz = vec![0.0; t_len * g];
    let mut d_src = vec![0.0; t_len];
    let mut d_dst = vec![0.0; t_len];
    let slope = config.leaky_relu_slope;
    for (i, nbrs) in input.neighbors.iter().enumerate() {
        let doi = &dout[i * g..(i + 1) * g];
        if doi.iter().all(|&v| v == 0.0) {
            continue;
        }
        let alpha = &trace.attention[i];
        let dalpha: Vec<f64> = nbrs.iter().map(|&j| dot(doi, &z[j * g..(j + 1) * g])).collect();
        let mean: f64 = alpha.iter().zip(&dalpha).map(|(a, da)| a * da).sum();
        for (idx, &j) in nbrs.iter().enumerate() {
            let al = alpha[idx];
            for k in 0..g {
                dz[j * g + k] += al * doi[k];
            }
            let u = trace.attention_preact[i][idx];
            let du = al * (dalpha[idx] - mean) * if u > 0.0 { 1.0 } else { slope };
            d_src[i] += du;
            d_dst[j] += du;
        }
    }
    {
        let a_range = layout.range(Component::GatAttention);
        let (ga_src, ga_dst) = grad[a_range].split_at_mut(g);
        for t in 0..t_len {
            let zt = &z[t * g..(t + 1) * g];
            for k in 0..g {
                ga_src[k] += d_src[t] * zt[k];
                ga_dst[k] += d_dst[t] * zt[k];
                dz[t * g + k] += d_src[t] * a_src[k] + d_dst[t] * a_dst[k];
            }
        }
    }

    // Projection.
    let w = params.get(Component::GatWeight);
    {
        let w_range = layout.range(Component::GatWeight);
        let gw = &mut grad[w_range];
        for t in 0..t_len {
            let dzt = &dz[t * g..(t + 1) * g];
            if dzt.iter().all(|&v| v == 0.0) {
                continue;
            }
            let xt = &trace.embeddings[t * d..(t + 1) * d];
            for i in 0..d {
                let wi = &w[i * g..(i + 1) * g];
                let gwi = &mut gw[i * g..(i + 1) * g];
                for k in 0..g {
                    gwi[k] += xt[i] * dzt[k];
                }
                dx[t * d + i] += dot(wi, dzt);
            }
        }
    }

    // Embedding lookup through the dropout mask.
    if let Some(masks) = &trace.masks {
        for (v, k) in dx.iter_mut().zip(&masks.embed) {
            *v *= k;
        }
    }
    let emb_start = layout.range(Component::Embeddings).start;
    for (t, &b) in input.token_ids.iter().enumerate() {
        for k in 0..d {
            grad[emb_start + b * d + k] += dx[t * d + k];
        }
    }

    Ok(loss)
}

/// Most probable label without dropout.
pub fn predict(params: &ModelParameters, input: &ModelInput, config: &ModelConfig) -> usize {
    argmax(&forward_with_masks(params, input, config, None).scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::instance::fixtures::bill_founded_acme;
    use crate::model::params::init_params;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_config() -> ModelConfig {
        ModelConfig { embed_dim: 4, gat_dim: 4, vocab_hash_buckets: 16, num_labels: 3, ..ModelConfig::default() }
    }

    #[test]
    fn argmax_rules() {
        assert_eq!(argmax(&[0.1, 0.9, 0.3]), 1);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        let shifted: Vec<f64> = [0.1, 0.9, 0.3].iter().map(|s| s + 7.5).collect();
        assert_eq!(argmax(&shifted), 1);
    }

    #[test]
    fn self_loop_only_node_attends_fully() {
        let config = small_config();
        let params = init_params(&config, 1);
        let input = ModelInput {
            token_ids: vec![3, 5],
            neighbors: vec![vec![0], vec![1]],
            subj_anchor: 0,
            obj_anchor: 1,
            subj_tokens: 0..1,
            obj_tokens: 1..2,
        };
        let trace = forward_with_masks(&params, &input, &config, None);
        assert_eq!(trace.attention, vec![vec![1.0], vec![1.0]]);
    }

    #[test]
    fn equal_logits_split_evenly() {
        let config = small_config();
        let mut params = init_params(&config, 1);
        params.get_mut(Component::GatAttention).fill(0.0);
        let input = ModelInput::from_instance(&bill_founded_acme(), &config).unwrap();
        let trace = forward_with_masks(&params, &input, &config, None);
        let founded = 6;
        assert_eq!(input.neighbors[founded].len(), 3);
        for &a in &trace.attention[input.subj_anchor] {
            assert!((a - 0.5).abs() < 1e-15);
        }
        for &a in &trace.attention[founded] {
            assert!((a - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_bilinear_scores_one() {
        let config = ModelConfig { num_labels: 1, ..small_config() };
        let mut params = ModelParameters::zeros(&config);
        let dim = config.entity_dim();
        let m = params.get_mut(Component::Bilinear);
        for p in 0..dim {
            m[p * dim + p] = 1.0;
        }
        let mut e = vec![0.0; dim];
        e[2] = 1.0;
        assert_eq!(label_scores(&params, &e, &e), vec![1.0]);
    }

    #[test]
    fn uniform_scores_give_ln_k() {
        let config = small_config();
        let params = ModelParameters::zeros(&config);
        let input = ModelInput::from_instance(&bill_founded_acme(), &config).unwrap();
        let trace = forward_with_masks(&params, &input, &config, None);
        let (loss, _) = loss_and_backward(&params, &trace, &config, 1).unwrap();
        assert!((loss - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn loss_rises_as_gold_bias_falls() {
        let config = small_config();
        let mut params = init_params(&config, 4);
        let input = ModelInput::from_instance(&bill_founded_acme(), &config).unwrap();
        let mut last = f64::NEG_INFINITY;
        for step in 0..20 {
            params.get_mut(Component::BilinearBias)[2] = 5.0 - step as f64;
            let trace = forward_with_masks(&params, &input, &config, None);
            let (loss, _) = loss_and_backward(&params, &trace, &config, 2).unwrap();
            assert!(loss > last);
            last = loss;
        }
    }

    #[test]
    fn gold_out_of_range() {
        let config = small_config();
        let params = init_params(&config, 0);
        let input = ModelInput::from_instance(&bill_founded_acme(), &config).unwrap();
        let trace = forward_with_masks(&params, &input, &config, None);
        assert!(matches!(
            loss_and_backward(&params, &trace, &config, 3),
            Err(Error::LabelOutOfRange { index: 3, num_labels: 3 })
        ));
    }

    #[test]
    fn normalization_and_determinism() {
        let config = small_config();
        let params = init_params(&config, 9);
        let input = ModelInput::from_instance(&bill_founded_acme(), &config).unwrap();
        let a = forward_with_masks(&params, &input, &config, None);
        let b = forward_with_masks(&params, &input, &config, None);
        assert_eq!(a.scores, b.scores);
        assert!((a.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for row in &a.attention {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = forward(&params, &input, &ModelConfig { dropout_rate: 0.5, ..config.clone() }, Some(&mut rng));
        assert!(c.masks.is_some());
    }
}
