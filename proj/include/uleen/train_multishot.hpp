#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "uleen/dataset.hpp"
#include "uleen/matrix.hpp"
#include "uleen/model.hpp"
#include "uleen/rng.hpp"

namespace uleen::multishot {

struct TrainConfig {
  uint32_t epochs = 10;
  uint32_t batch_size = 100;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double dropout_p = 0.5;     // inverted dropout, train-time scale 1/(1-p)
  double prune_ratio = 0.30;
  bool augment = false;       // MNIST 3x3 shift augmentation before encoding
  uint64_t seed = 0;
};

/// Throws std::invalid_argument when a field is out of range.
void validate(const TrainConfig& config);

/// Training samples encoded once up front, packed LSB-first.
struct EncodedDataset {
  size_t width = 0;
  size_t words_per_sample = 0;
  std::vector<uint64_t> bits;
  std::vector<uint32_t> labels;

  size_t size() const { return labels.size(); }
  const uint64_t* sample(size_t i) const {
    return bits.data() + i * words_per_sample;
  }
};

EncodedDataset encode_all(const ThermometerEncoder& encoder,
                          const Dataset& data,
                          std::span<const size_t> indices);

/// Flat slot arithmetic shared by the gradient buffer and the Adam moments:
/// one contiguous block per submodel, ordered class-major then filter then
/// entry. Node slots (one per class/filter pair) index dropout masks and
/// argmin sets the same way.
struct TableLayout {
  struct Sub {
    size_t probe_base = 0;  // into a per-sample probe row
    size_t node_base = 0;   // into a per-sample node row
    size_t entry_base = 0;  // into the flat entry space
    size_t num_filters = 0;
    size_t entries = 0;
    uint32_t hash_count = 0;
  };
  std::vector<Sub> subs;
  size_t classes = 0;
  size_t probe_stride = 0;  // per-sample probe count
  size_t node_stride = 0;   // per-sample (class, filter) pairs
  size_t entry_total = 0;

  static TableLayout of(const ContinuousEnsemble& model);

  size_t entry_slot(size_t sub, size_t cls, size_t filter,
                    size_t entry) const {
    const Sub& s = subs[sub];
    return s.entry_base + (cls * s.num_filters + filter) * s.entries + entry;
  }
  size_t node_slot(size_t sub, size_t cls, size_t filter) const {
    return subs[sub].node_base + cls * subs[sub].num_filters + filter;
  }
};

/// Per-node keep flags for one batch, sample-major; kept outputs are scaled
/// by 1/(1-p). Flags are drawn for every node slot in a fixed order so the
/// stream does not depend on pruning state.
struct DropoutMask {
  std::vector<uint8_t> keep;
  double scale = 1.0;
  size_t node_stride = 0;

  bool kept(size_t sample, size_t node) const {
    return keep[sample * node_stride + node] != 0;
  }
};

void make_dropout_mask(const TableLayout& layout, size_t batch_size, double p,
                       SplitMix64& rng, DropoutMask& mask);

/// Everything backward needs: hashed probe indices, argmin position masks,
/// and the step-forward logits (bias plus masked filter outputs, summed over
/// submodels).
struct ForwardCache {
  size_t batch = 0;
  std::vector<uint32_t> probes;  // batch x probe_stride
  std::vector<uint32_t> argmin;  // batch x node_stride, bitmask over probes
  Matrix logits;                 // batch x classes
};

void forward_train(const ContinuousEnsemble& model, const TableLayout& layout,
                   const EncodedDataset& data,
                   std::span<const size_t> batch_indices,
                   const DropoutMask& mask, ForwardCache& cache);

/// Softmax cross-entropy gradients routed through the dropout scaling, the
/// step function as identity, and the min-reduction to every distinct entry
/// in each argmin set. `grads` is resized/zeroed here; unprobed entries stay
/// exactly 0. Returns the batch-mean loss.
double backward(const ContinuousEnsemble& model, const TableLayout& layout,
                const Matrix& logits, std::span<const uint32_t> labels,
                const ForwardCache& cache, const DropoutMask& mask,
                std::vector<double>& grads);

struct GradState {
  std::vector<double> m;
  std::vector<double> v;
  uint64_t step_count = 0;
};

/// Bias-corrected Adam over the kept filters' entries, then clip to [-1, 1].
void adam_step(ContinuousEnsemble& model, const TableLayout& layout,
               std::span<const double> grads, GradState& state,
               const TrainConfig& config);

/// 9 copies of every selected image, shifted by (dy, dx) in {-1,0,1}^2 with
/// vacated pixels zero-filled. Requires image datasets (load_idx sources).
Dataset augment_mnist(const Dataset& data, std::span<const size_t> indices);

struct EpochLog {
  uint32_t epoch = 0;
  double loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> epochs;
};

/// Step-forward accuracy at dropout 0 (biases included).
double evaluate_accuracy(const ContinuousEnsemble& model,
                         const EncodedDataset& data);

/// config.epochs of shuffled mini-batch Adam training. Logs one
/// "epoch=... loss=... val_accuracy=..." line per epoch when log is given.
TrainResult train(ContinuousEnsemble& model, const EncodedDataset& train_set,
                  const EncodedDataset& val_set, const TrainConfig& config,
                  std::ostream* log = nullptr);

/// Marks floor(ratio * N) filters per discriminator as pruned, lowest
/// Pearson correlation (filter output vs class indicator over the training
/// set) first, and sets each bias to the rounded mean summed response of
/// the pruned filters.
void prune(ContinuousEnsemble& model, const EncodedDataset& train_set,
           double ratio);

/// Multi-shot epochs over the kept filters only; pruned tables and biases
/// are untouched. Fresh optimizer state and fresh shuffle/dropout streams.
TrainResult fine_tune(ContinuousEnsemble& model,
                      const EncodedDataset& train_set,
                      const EncodedDataset& val_set, const TrainConfig& config,
                      std::ostream* log = nullptr);

/// Unit-step binarization of every kept filter; biases retained.
BinaryEnsemble finalize(const ContinuousEnsemble& model);

}  // namespace uleen::multishot
