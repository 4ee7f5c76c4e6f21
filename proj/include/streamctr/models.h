// Copyright 2026 The streamctr Authors.
// SPDX-License-Identifier: Apache-2.0
//
// CTR predictors built from nn primitives:
//   lr     z = b0 + sum_f w[x_f]
//   fm     z = lr + 1/2 sum_k [(sum_f v_fk)^2 - sum_f v_fk^2]
//   dnn    z = MLP(norm_embed(concat_f v_f)), hidden blocks affine -> norm -> relu -> dropout
//   deepfm z = fm + dnn over one shared embedding table
//
// Every field owns a contiguous slice of the global vocabulary, starting with
// its OOV row.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "streamctr/checkpoint.h"
#include "streamctr/data_pipeline.h"
#include "streamctr/layers.h"
#include "streamctr/normalization.h"
#include "streamctr/random.h"
#include "streamctr/tensor.h"

namespace streamctr::models {

using nn::Matrix;
using nn::Mode;
using nn::Vector;

enum class ModelKind { kLr, kFm, kDnn, kDeepFm };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

struct ModelSpec {
  ModelKind kind = ModelKind::kDnn;
  std::size_t embed_dim = 16;
  std::vector<std::size_t> mlp_widths = {400, 400, 400};
  double dropout = 0.0;
  nn::NormConfig norm_embed;
  nn::NormConfig norm_mlp;
  double l2_embed = 0.0;
  double l2_mlp = 0.0;
  double embed_init_scale = 0.01;

  bool has_first_order() const { return kind != ModelKind::kDnn; }
  bool has_embedding() const { return kind != ModelKind::kLr; }
  bool has_mlp() const { return kind == ModelKind::kDnn || kind == ModelKind::kDeepFm; }
  void validate() const;
};

struct AffineParams {
  Matrix weight;  // in x out
  Matrix bias;    // 1 x out
};

struct TensorRef {
  std::string name;
  Matrix* value = nullptr;
  bool trainable = true;
};

struct ModelState {
  std::vector<std::int64_t> field_offsets;  // F + 1 entries; last is the vocabulary size
  Matrix bias;                              // 1 x 1
  Matrix first_order;                       // V x 1
  Matrix embedding;                         // V x d
  nn::NormState embed_norm;
  std::vector<AffineParams> layers;  // hidden layers then the 1-wide output layer
  std::vector<nn::NormState> hidden_norms;

  std::size_t num_fields() const { return field_offsets.empty() ? 0 : field_offsets.size() - 1; }
  std::int64_t vocab_size() const { return field_offsets.empty() ? 0 : field_offsets.back(); }

  // Every allocated tensor in a fixed order. Running statistics are
  // non-trainable.
  std::vector<TensorRef> tensors();
  std::vector<nn::TensorView> views() const;
  Matrix* find(const std::string& name);
  std::uint64_t hash() const;
};

ModelState init_model(const ModelSpec& spec, std::span<const std::int32_t> field_sizes,
                      std::uint64_t seed);

// Number of trainable scalars.
std::size_t parameter_count(const ModelState& state);

void save_model(std::ostream& out, const ModelState& state);
// Restores tensors into a state initialized from the same spec and vocabulary.
void load_model(std::istream& in, ModelState& state);

struct Batch {
  std::size_t size = 0;
  std::size_t fields = 0;
  std::vector<std::int64_t> rows;  // size * fields global table rows
  std::vector<double> labels;
};

Batch make_batch(std::span<const data::EncodedSample> samples, std::span<const std::size_t> indices,
                 std::span<const std::int64_t> field_offsets);
Batch make_batch(std::span<const data::EncodedSample> samples,
                 std::span<const std::int64_t> field_offsets);

struct HiddenCache {
  nn::AffineCache affine;
  nn::NormCache norm;
  nn::ReluCache relu;
  nn::DropoutCache dropout;
};

struct ForwardCache {
  std::vector<std::int64_t> rows;
  std::size_t fields = 0;
  Matrix gathered;  // B x F*d raw embeddings (fm/dnn/deepfm)
  nn::NormCache embed_norm;
  std::vector<HiddenCache> hidden;
  nn::AffineCache output;
  Vector logits;
  bool consumed = false;
};

struct ForwardOutput {
  Vector logits;
  Vector linear_part;  // b0 + first-order sum (lr/fm/deepfm)
  Vector fm_part;      // fm logit incl. linear part (fm/deepfm)
  Vector dnn_part;     // MLP output (dnn/deepfm)
  ForwardCache cache;
};

// Train mode may update batch-norm running statistics in `state` and needs
// `rng` when dropout is active.
ForwardOutput forward(ModelState& state, const ModelSpec& spec, const Batch& batch, Mode mode,
                      Rng* rng);
// Eval-mode logits on a frozen state.
Vector predict_logits(const ModelState& state, const ModelSpec& spec, const Batch& batch);

struct DenseGrad {
  std::string name;
  Matrix value;
};

struct SparseGrad {
  std::string name;
  nn::SparseRows value;
};

struct Gradients {
  std::vector<DenseGrad> dense;
  std::vector<SparseGrad> sparse;
  double loss = 0.0;       // mean BCE plus L2 penalties
  double data_loss = 0.0;  // mean BCE only

  const DenseGrad* find_dense(const std::string& name) const;
  const SparseGrad* find_sparse(const std::string& name) const;
};

// Gradients of mean BCE + l2_embed/2 * (|touched embedding rows|^2 + |touched
// first-order weights|^2) + l2_mlp/2 * |MLP weights|^2.
Gradients backward(const ModelState& state, const ModelSpec& spec, ForwardCache& cache,
                   std::span<const double> labels);

// The objective `backward` differentiates, evaluated with a train-mode pass.
double objective(ModelState& state, const ModelSpec& spec, const Batch& batch);

}  // namespace streamctr::models
