#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <type_traits>
#include <vector>

namespace npe {

enum class Activation : std::uint8_t { Linear = 0, Relu = 1 };

template <typename Scalar>
using MatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Affine map followed by an activation. A tied layer owns no weight matrix;
/// it applies the transpose of the matrix owned by `tied_to`.
template <typename Scalar>
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation activation = Activation::Linear;
  std::optional<std::size_t> tied_to;
  MatrixT<Scalar> weights;  // out x in, empty when tied
  VectorT<Scalar> bias;     // out
};

/// Dense stack. Samples are columns: a batch is an (in x B) matrix.
template <typename Scalar>
class Mlp {
 public:
  using Matrix = MatrixT<Scalar>;
  using Vector = VectorT<Scalar>;

  /// Appends an untied layer; `in` must match the previous layer's output.
  std::size_t add_dense(std::size_t in, std::size_t out, Activation activation);
  /// Appends a layer reusing the transpose of `source`'s matrix with its own bias.
  std::size_t add_tied(std::size_t source, Activation activation);

  const std::vector<DenseLayer<Scalar>>& layers() const { return layers_; }
  const DenseLayer<Scalar>& layer(std::size_t i) const { return layers_.at(i); }
  /// Mutable access invalidates outstanding forward caches.
  DenseLayer<Scalar>& mutable_layer(std::size_t i);

  /// The matrix actually applied by layer i (transpose of the owner for tied layers).
  Matrix effective_weights(std::size_t i) const;

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t parameter_count() const;
  bool empty() const { return layers_.empty(); }

  std::uint64_t version() const { return version_; }
  void touch() { ++version_; }

  /// Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases.
  void initialize(std::mt19937_64& rng);

  /// Checks dimension chaining and tie references; throws ShapeMismatch.
  void validate() const;

  template <typename Other>
  Mlp<Other> cast() const {
    Mlp<Other> out;
    for (const auto& l : layers_) {
      if (l.tied_to) {
        out.add_tied(*l.tied_to, l.activation);
      } else {
        out.add_dense(l.in, l.out, l.activation);
        out.mutable_layer(out.layers().size() - 1).weights = l.weights.template cast<Other>();
      }
      out.mutable_layer(out.layers().size() - 1).bias = l.bias.template cast<Other>();
    }
    return out;
  }

  friend bool operator==(const Mlp& a, const Mlp& b) {
    if (a.layers_.size() != b.layers_.size()) return false;
    for (std::size_t i = 0; i < a.layers_.size(); ++i) {
      const auto& x = a.layers_[i];
      const auto& y = b.layers_[i];
      if (x.in != y.in || x.out != y.out || x.activation != y.activation || x.tied_to != y.tied_to) return false;
      if (x.weights != y.weights || x.bias != y.bias) return false;
    }
    return true;
  }

 private:
  std::vector<DenseLayer<Scalar>> layers_;
  std::uint64_t version_ = 0;
};

/// Per-layer inputs and pre-activations retained for backward.
template <typename Scalar>
struct ForwardCache {
  const void* model = nullptr;
  std::uint64_t version = 0;
  std::size_t first_layer = 0;
  std::vector<MatrixT<Scalar>> inputs;
  std::vector<MatrixT<Scalar>> pre_activations;
};

/// Gradients laid out like the model. Tied layers have empty weight entries;
/// their contribution is accumulated into the owning layer.
template <typename Scalar>
struct MlpGradients {
  std::vector<MatrixT<Scalar>> weights;
  std::vector<VectorT<Scalar>> bias;

  static MlpGradients zeros_like(const Mlp<Scalar>& model);
};

inline constexpr std::size_t kAllLayers = static_cast<std::size_t>(-1);

/// Runs layers [first, last) on the input. `last` defaults to the full stack.
template <typename Scalar>
MatrixT<Scalar> forward(const Mlp<Scalar>& model, const MatrixT<Scalar>& input,
                        std::type_identity_t<ForwardCache<Scalar>>* cache = nullptr,
                        std::size_t first = 0, std::size_t last = kAllLayers);

/// Reverse-mode pass over the layer range recorded in the cache. Writes
/// parameter gradients into `grads` when non-null (overwriting) and returns
/// the gradient with respect to the input.
template <typename Scalar>
MatrixT<Scalar> backward(const Mlp<Scalar>& model, const ForwardCache<Scalar>& cache,
                         const MatrixT<Scalar>& output_gradient,
                         std::type_identity_t<MlpGradients<Scalar>>* grads);

/// Mean over every element of (p - t)^2, accumulated in double. The gradient
/// with respect to p, 2(p - t)/N, is written when requested.
template <typename Scalar>
double mse(const MatrixT<Scalar>& prediction, const MatrixT<Scalar>& target, MatrixT<Scalar>* gradient = nullptr);

template <typename Scalar>
struct AdamState {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step_count = 0;
  std::vector<MatrixT<Scalar>> m_weights, v_weights;
  std::vector<VectorT<Scalar>> m_bias, v_bias;

  static AdamState for_model(const Mlp<Scalar>& model, double learning_rate = 1e-4);
};

/// Bias-corrected Adam update in place; increments step_count.
template <typename Scalar>
void adam_step(Mlp<Scalar>& model, const MlpGradients<Scalar>& grads, AdamState<Scalar>& state);

/// "NPW1" little-endian: magic, u16 layer count, per layer {u32 in, u32 out,
/// u8 activation, u8 tie ref (0xFF = none)}, then per layer the f32 weight
/// matrix row-major (untied layers only) followed by the f32 bias.
std::vector<std::uint8_t> save_weights(const Mlp<float>& model);
Mlp<float> load_weights(std::span<const std::uint8_t> bytes);
void save_weights_file(const Mlp<float>& model, const std::filesystem::path& path);
Mlp<float> load_weights_file(const std::filesystem::path& path);

extern template class Mlp<float>;
extern template class Mlp<double>;

}  // namespace npe
