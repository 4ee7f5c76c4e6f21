// Copyright 2026 The streamctr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "streamctr/models.h"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>

#include "streamctr/errors.h"

namespace streamctr::models {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kLr: return "lr";
    case ModelKind::kFm: return "fm";
    case ModelKind::kDnn: return "dnn";
    case ModelKind::kDeepFm: return "deepfm";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "lr") return ModelKind::kLr;
  if (name == "fm") return ModelKind::kFm;
  if (name == "dnn") return ModelKind::kDnn;
  if (name == "deepfm") return ModelKind::kDeepFm;
  throw ConfigError("unknown model kind '" + name + "' (expected lr|fm|dnn|deepfm)");
}

void ModelSpec::validate() const {
  if (has_embedding() && embed_dim < 1) throw ConfigError("model.embed_dim must be >= 1");
  if (has_mlp() && mlp_widths.empty()) throw ConfigError("model.mlp_widths must be nonempty for dnn/deepfm");
  for (std::size_t w : mlp_widths) {
    if (w < 1) throw ConfigError("model.mlp_widths entries must be >= 1");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("model.dropout must lie in [0, 1)");
  if (!(l2_embed >= 0.0) || !(l2_mlp >= 0.0)) throw ConfigError("model L2 strengths must be >= 0");
  if (!(embed_init_scale >= 0.0)) throw ConfigError("model.embed_init_scale must be >= 0");
  norm_embed.validate();
  norm_mlp.validate();
}

namespace {

void add_norm_tensors(std::vector<TensorRef>& out, const std::string& prefix, nn::NormState& s) {
  if (s.alpha.size() != 0) out.push_back({prefix + ".alpha", &s.alpha, true});
  if (s.beta.size() != 0) out.push_back({prefix + ".beta", &s.beta, true});
  if (s.running_mean.size() != 0) out.push_back({prefix + ".running_mean", &s.running_mean, false});
  if (s.running_var.size() != 0) out.push_back({prefix + ".running_var", &s.running_var, false});
}

std::string hidden_name(std::size_t i) { return "mlp." + std::to_string(i); }

bool is_output_layer(const ModelState& s, std::size_t i) { return i + 1 == s.layers.size(); }

std::string layer_name(const ModelState& s, std::size_t i) {
  return is_output_layer(s, i) ? std::string("out") : hidden_name(i);
}

}  // namespace

std::vector<TensorRef> ModelState::tensors() {
  std::vector<TensorRef> out;
  if (bias.size() != 0) out.push_back({"bias", &bias, true});
  if (first_order.size() != 0) out.push_back({"first_order", &first_order, true});
  if (embedding.size() != 0) out.push_back({"embedding", &embedding, true});
  add_norm_tensors(out, "embed_norm", embed_norm);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string name = layer_name(*this, i);
    out.push_back({name + ".weight", &layers[i].weight, true});
    out.push_back({name + ".bias", &layers[i].bias, true});
    if (i < hidden_norms.size()) add_norm_tensors(out, name + ".norm", hidden_norms[i]);
  }
  return out;
}

std::vector<nn::TensorView> ModelState::views() const {
  std::vector<nn::TensorView> out;
  for (const TensorRef& t : const_cast<ModelState*>(this)->tensors()) out.push_back({t.name, t.value});
  return out;
}

Matrix* ModelState::find(const std::string& name) {
  for (const TensorRef& t : tensors()) {
    if (t.name == name) return t.value;
  }
  return nullptr;
}

std::uint64_t ModelState::hash() const {
  const auto v = views();
  return nn::tensors_hash(v);
}

ModelState init_model(const ModelSpec& spec, std::span<const std::int32_t> field_sizes,
                      std::uint64_t seed) {
  spec.validate();
  if (field_sizes.empty()) throw ConfigError("model needs at least one field");
  ModelState s;
  s.field_offsets.assign(1, 0);
  for (std::int32_t size : field_sizes) {
    if (size < 1) throw ConfigError("field vocabulary size must be >= 1");
    s.field_offsets.push_back(s.field_offsets.back() + size);
  }
  const auto vocab = static_cast<Eigen::Index>(s.vocab_size());
  const auto fields = static_cast<Eigen::Index>(field_sizes.size());

  if (spec.has_first_order()) {
    s.bias = Matrix::Zero(1, 1);
    s.first_order = Matrix::Zero(vocab, 1);
  }
  if (spec.has_embedding()) {
    Rng rng = derive_rng(seed, {1});
    std::uniform_real_distribution<double> u(-spec.embed_init_scale, spec.embed_init_scale);
    s.embedding.resize(vocab, static_cast<Eigen::Index>(spec.embed_dim));
    for (Eigen::Index i = 0; i < s.embedding.size(); ++i) s.embedding.data()[i] = u(rng);
  }
  if (spec.has_mlp()) {
    Eigen::Index in = fields * static_cast<Eigen::Index>(spec.embed_dim);
    s.embed_norm = nn::NormState::init(spec.norm_embed, in);
    std::vector<Eigen::Index> widths(spec.mlp_widths.begin(), spec.mlp_widths.end());
    widths.push_back(1);
    for (std::size_t i = 0; i < widths.size(); ++i) {
      Rng rng = derive_rng(seed, {2, i});
      const double bound = std::sqrt(1.0 / static_cast<double>(in));
      std::uniform_real_distribution<double> u(-bound, bound);
      AffineParams p;
      p.weight.resize(in, widths[i]);
      for (Eigen::Index k = 0; k < p.weight.size(); ++k) p.weight.data()[k] = u(rng);
      p.bias = Matrix::Zero(1, widths[i]);
      s.layers.push_back(std::move(p));
      if (i + 1 < widths.size()) s.hidden_norms.push_back(nn::NormState::init(spec.norm_mlp, widths[i]));
      in = widths[i];
    }
  }
  return s;
}

std::size_t parameter_count(const ModelState& state) {
  std::size_t n = 0;
  for (const TensorRef& t : const_cast<ModelState&>(state).tensors()) {
    if (t.trainable) n += static_cast<std::size_t>(t.value->size());
  }
  return n;
}

void save_model(std::ostream& out, const ModelState& state) {
  const auto v = state.views();
  nn::write_checkpoint(out, v);
}

void load_model(std::istream& in, ModelState& state) {
  nn::NamedTensors loaded = nn::read_checkpoint(in);
  std::vector<TensorRef> refs = state.tensors();
  if (loaded.size() != refs.size()) {
    throw DataError("checkpoint has " + std::to_string(loaded.size()) + " tensors, model expects " +
                    std::to_string(refs.size()));
  }
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto& [name, value] = loaded[i];
    if (name != refs[i].name) throw DataError("checkpoint tensor '" + name + "' where '" + refs[i].name + "' expected");
    if (value.rows() != refs[i].value->rows() || value.cols() != refs[i].value->cols()) {
      throw DataError("checkpoint tensor '" + name + "' has the wrong shape");
    }
    *refs[i].value = value;
  }
}

Batch make_batch(std::span<const data::EncodedSample> samples, std::span<const std::size_t> indices,
                 std::span<const std::int64_t> field_offsets) {
  Batch batch;
  batch.size = indices.size();
  batch.fields = field_offsets.size() - 1;
  batch.rows.resize(batch.size * batch.fields);
  batch.labels.resize(batch.size);
  for (std::size_t b = 0; b < batch.size; ++b) {
    const data::EncodedSample& s = samples[indices[b]];
    if (s.field_indices.size() != batch.fields) {
      throw DataError("sample has " + std::to_string(s.field_indices.size()) + " fields, model expects " +
                      std::to_string(batch.fields));
    }
    for (std::size_t f = 0; f < batch.fields; ++f) {
      const std::int64_t idx = s.field_indices[f];
      if (idx < 0 || idx >= field_offsets[f + 1] - field_offsets[f]) {
        throw DataError("field " + std::to_string(f) + " index " + std::to_string(idx) + " outside vocabulary");
      }
      batch.rows[b * batch.fields + f] = field_offsets[f] + idx;
    }
    batch.labels[b] = s.label;
  }
  return batch;
}

Batch make_batch(std::span<const data::EncodedSample> samples,
                 std::span<const std::int64_t> field_offsets) {
  std::vector<std::size_t> all(samples.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return make_batch(samples, all, field_offsets);
}

namespace {

void check_batch(const ModelState& state, const Batch& batch) {
  if (batch.fields != state.num_fields() || batch.rows.size() != batch.size * batch.fields) {
    throw std::invalid_argument("batch layout does not match the model");
  }
  if (batch.size == 0) throw std::invalid_argument("empty batch");
}

Vector linear_logits(const ModelState& state, const Batch& batch) {
  Vector z = Vector::Constant(static_cast<Eigen::Index>(batch.size), state.bias(0, 0));
  for (std::size_t b = 0; b < batch.size; ++b) {
    for (std::size_t f = 0; f < batch.fields; ++f) z[static_cast<Eigen::Index>(b)] += state.first_order(batch.rows[b * batch.fields + f], 0);
  }
  return z;
}

// 1/2 sum_k [(sum_f v_fk)^2 - sum_f v_fk^2] per row of the gathered matrix.
Vector pairwise_logits(const Matrix& gathered, std::size_t fields, Eigen::Index dim) {
  Vector out(gathered.rows());
  for (Eigen::Index b = 0; b < gathered.rows(); ++b) {
    double total = 0.0;
    for (Eigen::Index k = 0; k < dim; ++k) {
      double sum = 0.0;
      double sq = 0.0;
      for (std::size_t f = 0; f < fields; ++f) {
        const double v = gathered(b, static_cast<Eigen::Index>(f) * dim + k);
        sum += v;
        sq += v * v;
      }
      total += sum * sum - sq;
    }
    out[b] = 0.5 * total;
  }
  return out;
}

// Shared body of forward and predict_logits. `mutable_state` is non-null only
// for train mode; caches are skipped when `cache` is null.
Vector run_forward(const ModelState& state, ModelState* mutable_state, const ModelSpec& spec,
                   const Batch& batch, Mode mode, Rng* rng, ForwardCache* cache, Vector* linear,
                   Vector* fm, Vector* dnn) {
  check_batch(state, batch);
  const auto n = static_cast<Eigen::Index>(batch.size);
  Vector lin;
  Vector fm_logit;
  Vector dnn_logit;
  Matrix gathered;
  if (spec.has_first_order()) lin = linear_logits(state, batch);
  if (spec.has_embedding()) gathered = nn::embed_forward(state.embedding, batch.rows, batch.fields);
  if (spec.kind == ModelKind::kFm || spec.kind == ModelKind::kDeepFm) {
    fm_logit = lin + pairwise_logits(gathered, batch.fields, state.embedding.cols());
  }
  if (spec.has_mlp()) {
    if (mode == Mode::kTrain && spec.dropout > 0.0 && rng == nullptr) {
      throw std::invalid_argument("train-mode dropout needs an rng");
    }
    if (cache != nullptr) cache->hidden.resize(spec.mlp_widths.size());
    auto norm = [&](const Matrix& x, const nn::NormConfig& cfg, const nn::NormState& s,
                    nn::NormState* ms, nn::NormCache* c) {
      if (mode == Mode::kTrain) return nn::norm_forward(x, cfg, *ms, Mode::kTrain, c);
      return nn::norm_forward_eval(x, cfg, s, c);
    };
    Matrix h = norm(gathered, spec.norm_embed, state.embed_norm,
                    mutable_state != nullptr ? &mutable_state->embed_norm : nullptr,
                    cache != nullptr ? &cache->embed_norm : nullptr);
    Rng unused(0);
    for (std::size_t i = 0; i < spec.mlp_widths.size(); ++i) {
      HiddenCache* hc = cache != nullptr ? &cache->hidden[i] : nullptr;
      h = nn::affine_forward(h, state.layers[i].weight, state.layers[i].bias, hc ? &hc->affine : nullptr);
      h = norm(h, spec.norm_mlp, state.hidden_norms[i],
               mutable_state != nullptr ? &mutable_state->hidden_norms[i] : nullptr,
               hc ? &hc->norm : nullptr);
      h = nn::relu_forward(h, hc ? &hc->relu : nullptr);
      h = nn::dropout_forward(h, spec.dropout, mode, rng != nullptr ? *rng : unused,
                              hc ? &hc->dropout : nullptr);
    }
    const AffineParams& out = state.layers.back();
    dnn_logit = nn::affine_forward(h, out.weight, out.bias, cache != nullptr ? &cache->output : nullptr).col(0);
  }

  Vector z;
  switch (spec.kind) {
    case ModelKind::kLr: z = lin; break;
    case ModelKind::kFm: z = fm_logit; break;
    case ModelKind::kDnn: z = dnn_logit; break;
    case ModelKind::kDeepFm: z = fm_logit + dnn_logit; break;
  }
  if (z.size() != n) throw std::logic_error("forward produced the wrong number of logits");
  if (cache != nullptr) {
    cache->rows = batch.rows;
    cache->fields = batch.fields;
    cache->gathered = std::move(gathered);
    cache->logits = z;
    cache->consumed = false;
  }
  if (linear != nullptr) *linear = std::move(lin);
  if (fm != nullptr) *fm = std::move(fm_logit);
  if (dnn != nullptr) *dnn = std::move(dnn_logit);
  return z;
}

std::vector<std::int64_t> unique_rows(std::span<const std::int64_t> rows) {
  std::vector<std::int64_t> out(rows.begin(), rows.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double mean_bce(const Vector& z, std::span<const double> labels, Vector* dz) {
  const auto n = z.size();
  if (static_cast<std::size_t>(n) != labels.size()) throw std::invalid_argument("label count does not match logits");
  double loss = 0.0;
  if (dz != nullptr) dz->resize(n);
  for (Eigen::Index b = 0; b < n; ++b) {
    const nn::LossGrad lg = nn::bce_with_logits(z[b], labels[static_cast<std::size_t>(b)]);
    loss += lg.loss;
    if (dz != nullptr) (*dz)[b] = lg.grad / static_cast<double>(n);
  }
  return loss / static_cast<double>(n);
}

double l2_penalty(const ModelState& state, const ModelSpec& spec, std::span<const std::int64_t> rows) {
  double penalty = 0.0;
  if (spec.l2_embed > 0.0) {
    double sq = 0.0;
    for (std::int64_t r : unique_rows(rows)) {
      if (state.first_order.size() != 0) sq += state.first_order(r, 0) * state.first_order(r, 0);
      if (state.embedding.size() != 0) sq += state.embedding.row(r).squaredNorm();
    }
    penalty += 0.5 * spec.l2_embed * sq;
  }
  if (spec.l2_mlp > 0.0) {
    double sq = 0.0;
    for (const AffineParams& p : state.layers) sq += p.weight.squaredNorm();
    penalty += 0.5 * spec.l2_mlp * sq;
  }
  return penalty;
}

void add_norm_grads(Gradients& g, const std::string& prefix, nn::NormGrads& ng) {
  if (ng.alpha.size() != 0) g.dense.push_back({prefix + ".alpha", std::move(ng.alpha)});
  if (ng.beta.size() != 0) g.dense.push_back({prefix + ".beta", std::move(ng.beta)});
}

}  // namespace

ForwardOutput forward(ModelState& state, const ModelSpec& spec, const Batch& batch, Mode mode,
                      Rng* rng) {
  ForwardOutput out;
  out.logits = run_forward(state, mode == Mode::kTrain ? &state : nullptr, spec, batch, mode, rng,
                           &out.cache, &out.linear_part, &out.fm_part, &out.dnn_part);
  return out;
}

Vector predict_logits(const ModelState& state, const ModelSpec& spec, const Batch& batch) {
  return run_forward(state, nullptr, spec, batch, Mode::kEval, nullptr, nullptr, nullptr, nullptr, nullptr);
}

const DenseGrad* Gradients::find_dense(const std::string& name) const {
  for (const DenseGrad& g : dense) {
    if (g.name == name) return &g;
  }
  return nullptr;
}

const SparseGrad* Gradients::find_sparse(const std::string& name) const {
  for (const SparseGrad& g : sparse) {
    if (g.name == name) return &g;
  }
  return nullptr;
}

Gradients backward(const ModelState& state, const ModelSpec& spec, ForwardCache& cache,
                   std::span<const double> labels) {
  if (cache.consumed) throw std::logic_error("model forward cache already consumed");
  cache.consumed = true;
  Gradients g;
  Vector dz;
  g.data_loss = mean_bce(cache.logits, labels, &dz);
  g.loss = g.data_loss + l2_penalty(state, spec, cache.rows);

  const std::size_t fields = cache.fields;
  const auto batch = static_cast<Eigen::Index>(labels.size());

  if (spec.has_first_order()) {
    g.dense.push_back({"bias", Matrix::Constant(1, 1, dz.sum())});
    nn::SparseRows fo;
    fo.rows = unique_rows(cache.rows);
    fo.values = Matrix::Zero(static_cast<Eigen::Index>(fo.rows.size()), 1);
    for (Eigen::Index b = 0; b < batch; ++b) {
      for (std::size_t f = 0; f < fields; ++f) {
        const std::int64_t r = cache.rows[static_cast<std::size_t>(b) * fields + f];
        const auto slot = std::lower_bound(fo.rows.begin(), fo.rows.end(), r) - fo.rows.begin();
        fo.values(slot, 0) += dz[b];
      }
    }
    if (spec.l2_embed > 0.0) {
      for (std::size_t i = 0; i < fo.rows.size(); ++i) {
        fo.values(static_cast<Eigen::Index>(i), 0) += spec.l2_embed * state.first_order(fo.rows[i], 0);
      }
    }
    g.sparse.push_back({"first_order", std::move(fo)});
  }

  if (spec.has_embedding()) {
    const Eigen::Index dim = state.embedding.cols();
    Matrix grad_gathered = Matrix::Zero(batch, static_cast<Eigen::Index>(fields) * dim);
    if (spec.kind == ModelKind::kFm || spec.kind == ModelKind::kDeepFm) {
      for (Eigen::Index b = 0; b < batch; ++b) {
        for (Eigen::Index k = 0; k < dim; ++k) {
          double sum = 0.0;
          for (std::size_t f = 0; f < fields; ++f) sum += cache.gathered(b, static_cast<Eigen::Index>(f) * dim + k);
          for (std::size_t f = 0; f < fields; ++f) {
            const Eigen::Index c = static_cast<Eigen::Index>(f) * dim + k;
            grad_gathered(b, c) += dz[b] * (sum - cache.gathered(b, c));
          }
        }
      }
    }
    if (spec.has_mlp()) {
      const std::size_t hidden = spec.mlp_widths.size();
      nn::AffineGrads out = nn::affine_backward(cache.output, Matrix(dz));
      Matrix grad_h = std::move(out.input);
      std::vector<DenseGrad> layer_grads;
      if (spec.l2_mlp > 0.0) out.weight += spec.l2_mlp * state.layers.back().weight;
      layer_grads.push_back({"out.bias", std::move(out.bias)});
      layer_grads.push_back({"out.weight", std::move(out.weight)});
      for (std::size_t j = hidden; j-- > 0;) {
        HiddenCache& hc = cache.hidden[j];
        const std::string name = hidden_name(j);
        grad_h = nn::dropout_backward(hc.dropout, grad_h);
        grad_h = nn::relu_backward(hc.relu, grad_h);
        nn::NormGrads ng = nn::norm_backward(hc.norm, spec.norm_mlp, state.hidden_norms[j], grad_h);
        grad_h = std::move(ng.input);
        if (ng.beta.size() != 0) layer_grads.push_back({name + ".norm.beta", std::move(ng.beta)});
        if (ng.alpha.size() != 0) layer_grads.push_back({name + ".norm.alpha", std::move(ng.alpha)});
        nn::AffineGrads ag = nn::affine_backward(hc.affine, grad_h);
        grad_h = std::move(ag.input);
        if (spec.l2_mlp > 0.0) ag.weight += spec.l2_mlp * state.layers[j].weight;
        layer_grads.push_back({name + ".bias", std::move(ag.bias)});
        layer_grads.push_back({name + ".weight", std::move(ag.weight)});
      }
      nn::NormGrads eg = nn::norm_backward(cache.embed_norm, spec.norm_embed, state.embed_norm, grad_h);
      grad_gathered += eg.input;
      add_norm_grads(g, "embed_norm", eg);
      // Collected output-first; store in parameter order.
      std::reverse(layer_grads.begin(), layer_grads.end());
      for (DenseGrad& d : layer_grads) g.dense.push_back(std::move(d));
    }
    nn::SparseRows emb = nn::embed_backward(grad_gathered, cache.rows, fields, static_cast<std::size_t>(dim));
    if (spec.l2_embed > 0.0) {
      for (std::size_t i = 0; i < emb.rows.size(); ++i) {
        emb.values.row(static_cast<Eigen::Index>(i)) += spec.l2_embed * state.embedding.row(emb.rows[i]);
      }
    }
    g.sparse.push_back({"embedding", std::move(emb)});
  }
  return g;
}

double objective(ModelState& state, const ModelSpec& spec, const Batch& batch) {
  if (spec.has_mlp() && spec.dropout > 0.0) throw std::invalid_argument("objective is defined without dropout");
  const Vector z = run_forward(state, &state, spec, batch, Mode::kTrain, nullptr, nullptr, nullptr, nullptr, nullptr);
  return mean_bce(z, batch.labels, nullptr) + l2_penalty(state, spec, batch.rows);
}

}  // namespace streamctr::models
