#include "npe/nn.hpp"

#include "binary_io.hpp"
#include "npe/error.hpp"

#include <cmath>

namespace npe {

template <typename Scalar>
std::size_t Mlp<Scalar>::add_dense(std::size_t in, std::size_t out, Activation activation) {
  if (in == 0 || out == 0) throw Error(ErrorCode::ShapeMismatch, "layer dimensions must be positive");
  if (!layers_.empty() && layers_.back().out != in) {
    throw Error(ErrorCode::ShapeMismatch, "layer input " + std::to_string(in) + " does not chain with previous output " +
                                              std::to_string(layers_.back().out));
  }
  DenseLayer<Scalar> layer;
  layer.in = in;
  layer.out = out;
  layer.activation = activation;
  layer.weights = Matrix::Zero(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
  layer.bias = Vector::Zero(static_cast<Eigen::Index>(out));
  layers_.push_back(std::move(layer));
  ++version_;
  return layers_.size() - 1;
}

template <typename Scalar>
std::size_t Mlp<Scalar>::add_tied(std::size_t source, Activation activation) {
  if (source >= layers_.size() || layers_[source].tied_to) {
    throw Error(ErrorCode::ShapeMismatch, "tie source must be an existing untied layer");
  }
  const DenseLayer<Scalar>& src = layers_[source];
  if (!layers_.empty() && layers_.back().out != src.out) {
    throw Error(ErrorCode::ShapeMismatch, "tied layer input does not chain with previous output");
  }
  DenseLayer<Scalar> layer;
  layer.in = src.out;
  layer.out = src.in;
  layer.activation = activation;
  layer.tied_to = source;
  layer.bias = Vector::Zero(static_cast<Eigen::Index>(layer.out));
  layers_.push_back(std::move(layer));
  ++version_;
  return layers_.size() - 1;
}

template <typename Scalar>
DenseLayer<Scalar>& Mlp<Scalar>::mutable_layer(std::size_t i) {
  ++version_;
  return layers_.at(i);
}

template <typename Scalar>
typename Mlp<Scalar>::Matrix Mlp<Scalar>::effective_weights(std::size_t i) const {
  const auto& l = layers_.at(i);
  if (l.tied_to) return layers_[*l.tied_to].weights.transpose();
  return l.weights;
}

template <typename Scalar>
std::size_t Mlp<Scalar>::input_dim() const {
  return layers_.empty() ? 0 : layers_.front().in;
}

template <typename Scalar>
std::size_t Mlp<Scalar>::output_dim() const {
  return layers_.empty() ? 0 : layers_.back().out;
}

template <typename Scalar>
std::size_t Mlp<Scalar>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += (l.tied_to ? 0 : l.in * l.out) + l.out;
  return n;
}

template <typename Scalar>
void Mlp<Scalar>::initialize(std::mt19937_64& rng) {
  for (auto& l : layers_) {
    if (!l.tied_to) {
      const double limit = std::sqrt(6.0 / static_cast<double>(l.in + l.out));
      std::uniform_real_distribution<double> dist(-limit, limit);
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) {
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r) l.weights(r, c) = static_cast<Scalar>(dist(rng));
      }
    }
    l.bias.setZero();
  }
  ++version_;
}

template <typename Scalar>
void Mlp<Scalar>::validate() const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (i > 0 && layers_[i - 1].out != l.in) throw Error(ErrorCode::ShapeMismatch, "layer dimensions do not chain");
    if (static_cast<std::size_t>(l.bias.size()) != l.out) throw Error(ErrorCode::ShapeMismatch, "bias size mismatch");
    if (l.tied_to) {
      const std::size_t s = *l.tied_to;
      if (s >= i || layers_[s].tied_to || layers_[s].in != l.out || layers_[s].out != l.in) {
        throw Error(ErrorCode::ShapeMismatch, "invalid tie reference on layer " + std::to_string(i));
      }
    } else if (static_cast<std::size_t>(l.weights.rows()) != l.out ||
               static_cast<std::size_t>(l.weights.cols()) != l.in) {
      throw Error(ErrorCode::ShapeMismatch, "weight shape mismatch on layer " + std::to_string(i));
    }
  }
}

template <typename Scalar>
MlpGradients<Scalar> MlpGradients<Scalar>::zeros_like(const Mlp<Scalar>& model) {
  MlpGradients g;
  for (const auto& l : model.layers()) {
    g.weights.push_back(l.tied_to ? MatrixT<Scalar>() : MatrixT<Scalar>::Zero(l.weights.rows(), l.weights.cols()));
    g.bias.push_back(VectorT<Scalar>::Zero(l.bias.size()));
  }
  return g;
}

template <typename Scalar>
MatrixT<Scalar> forward(const Mlp<Scalar>& model, const MatrixT<Scalar>& input,
                        std::type_identity_t<ForwardCache<Scalar>>* cache,
                        std::size_t first, std::size_t last) {
  if (last == kAllLayers) last = model.layers().size();
  if (first >= last || last > model.layers().size()) throw Error(ErrorCode::ShapeMismatch, "empty layer range");
  if (static_cast<std::size_t>(input.rows()) != model.layer(first).in) {
    throw Error(ErrorCode::DimensionMismatch, "input width " + std::to_string(input.rows()) + " != layer input " +
                                                  std::to_string(model.layer(first).in));
  }
  if (cache) {
    cache->model = &model;
    cache->version = model.version();
    cache->first_layer = first;
    cache->inputs.clear();
    cache->pre_activations.clear();
  }
  MatrixT<Scalar> x = input;
  for (std::size_t i = first; i < last; ++i) {
    const auto& l = model.layer(i);
    MatrixT<Scalar> z;
    if (l.tied_to) {
      z.noalias() = model.layer(*l.tied_to).weights.transpose() * x;
    } else {
      z.noalias() = l.weights * x;
    }
    z.colwise() += l.bias;
    if (cache) {
      cache->inputs.push_back(std::move(x));
      cache->pre_activations.push_back(z);
    }
    x = l.activation == Activation::Relu ? MatrixT<Scalar>(z.cwiseMax(Scalar(0))) : std::move(z);
  }
  return x;
}

template <typename Scalar>
MatrixT<Scalar> backward(const Mlp<Scalar>& model, const ForwardCache<Scalar>& cache,
                         const MatrixT<Scalar>& output_gradient,
                         std::type_identity_t<MlpGradients<Scalar>>* grads) {
  const std::size_t first = cache.first_layer;
  const std::size_t used = cache.inputs.size();
  if (cache.model != &model || cache.version != model.version() || used == 0 ||
      cache.pre_activations.size() != used || first + used > model.layers().size()) {
    throw Error(ErrorCode::StaleCache, "forward cache does not belong to the current model state");
  }
  if (output_gradient.rows() != cache.pre_activations.back().rows() ||
      output_gradient.cols() != cache.pre_activations.back().cols()) {
    throw Error(ErrorCode::DimensionMismatch, "output gradient shape does not match forward output");
  }
  if (grads) *grads = MlpGradients<Scalar>::zeros_like(model);

  MatrixT<Scalar> g = output_gradient;
  for (std::size_t j = used; j-- > 0;) {
    const std::size_t k = first + j;
    const auto& l = model.layer(k);
    if (l.activation == Activation::Relu) {
      g = (cache.pre_activations[j].array() > Scalar(0)).select(g, Scalar(0));
    }
    if (grads) {
      grads->bias[k] = g.rowwise().sum();
      if (l.tied_to) {
        grads->weights[*l.tied_to].noalias() += cache.inputs[j] * g.transpose();
      } else {
        grads->weights[k].noalias() += g * cache.inputs[j].transpose();
      }
    }
    MatrixT<Scalar> next;
    if (l.tied_to) {
      next.noalias() = model.layer(*l.tied_to).weights * g;
    } else {
      next.noalias() = l.weights.transpose() * g;
    }
    g = std::move(next);
  }
  return g;
}

template <typename Scalar>
double mse(const MatrixT<Scalar>& prediction, const MatrixT<Scalar>& target, MatrixT<Scalar>* gradient) {
  if (prediction.rows() != target.rows() || prediction.cols() != target.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "mse operands differ in shape");
  }
  const double count = static_cast<double>(prediction.size());
  if (count == 0) throw Error(ErrorCode::DimensionMismatch, "mse of empty operands");
  const MatrixT<Scalar> diff = prediction - target;
  const double loss = diff.template cast<double>().squaredNorm() / count;
  if (gradient) *gradient = diff * static_cast<Scalar>(2.0 / count);
  return loss;
}

template <typename Scalar>
AdamState<Scalar> AdamState<Scalar>::for_model(const Mlp<Scalar>& model, double learning_rate) {
  AdamState s;
  s.learning_rate = learning_rate;
  const auto zeros = MlpGradients<Scalar>::zeros_like(model);
  s.m_weights = zeros.weights;
  s.v_weights = zeros.weights;
  s.m_bias = zeros.bias;
  s.v_bias = zeros.bias;
  return s;
}

namespace {

template <typename Param, typename Grad>
void adam_update(Param& p, const Grad& g, Param& m, Param& v, double b1, double b2, double lr_t, double eps_t) {
  using Scalar = typename Param::Scalar;
  m = Scalar(b1) * m + Scalar(1.0 - b1) * g;
  v = Scalar(b2) * v + Scalar(1.0 - b2) * g.cwiseProduct(g);
  p.array() -= Scalar(lr_t) * m.array() / (v.array().sqrt() + Scalar(eps_t));
}

}  // namespace

template <typename Scalar>
void adam_step(Mlp<Scalar>& model, const MlpGradients<Scalar>& grads, AdamState<Scalar>& state) {
  const std::size_t n = model.layers().size();
  if (grads.weights.size() != n || grads.bias.size() != n || state.m_weights.size() != n ||
      state.m_bias.size() != n) {
    throw Error(ErrorCode::ShapeMismatch, "gradient/state layout does not match model");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& l = model.layer(i);
    if (grads.weights[i].rows() != l.weights.rows() || grads.weights[i].cols() != l.weights.cols() ||
        grads.bias[i].size() != l.bias.size() || state.m_weights[i].rows() != l.weights.rows() ||
        state.m_weights[i].cols() != l.weights.cols()) {
      throw Error(ErrorCode::ShapeMismatch, "gradient shape mismatch on layer " + std::to_string(i));
    }
  }
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  // lr * mhat / (sqrt(vhat) + eps) == lr_t * m / (sqrt(v) + eps_t)
  const double lr_t = state.learning_rate * std::sqrt(bc2) / bc1;
  const double eps_t = state.epsilon * std::sqrt(bc2);
  for (std::size_t i = 0; i < n; ++i) {
    auto& l = model.mutable_layer(i);
    if (!l.tied_to) {
      adam_update(l.weights, grads.weights[i], state.m_weights[i], state.v_weights[i], state.beta1, state.beta2, lr_t,
                  eps_t);
    }
    adam_update(l.bias, grads.bias[i], state.m_bias[i], state.v_bias[i], state.beta1, state.beta2, lr_t, eps_t);
  }
}

namespace {
constexpr std::uint8_t kNoTie = 0xFF;
}

std::vector<std::uint8_t> save_weights(const Mlp<float>& model) {
  model.validate();
  if (model.layers().size() > 0xFFFF) throw Error(ErrorCode::ShapeMismatch, "too many layers");
  detail::ByteWriter w;
  w.bytes("NPW1");
  w.u16(static_cast<std::uint16_t>(model.layers().size()));
  for (const auto& l : model.layers()) {
    w.u32(static_cast<std::uint32_t>(l.in));
    w.u32(static_cast<std::uint32_t>(l.out));
    w.u8(static_cast<std::uint8_t>(l.activation));
    w.u8(l.tied_to ? static_cast<std::uint8_t>(*l.tied_to) : kNoTie);
  }
  for (const auto& l : model.layers()) {
    if (!l.tied_to) {
      for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
        for (Eigen::Index c = 0; c < l.weights.cols(); ++c) w.f32(l.weights(r, c));
      }
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) w.f32(l.bias[r]);
  }
  return std::move(w.data());
}

Mlp<float> load_weights(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, ErrorCode::CorruptHeader);
  if (r.bytes(4) != "NPW1") throw Error(ErrorCode::CorruptHeader, "not an NPW1 weight file");
  const std::uint16_t count = r.u16();
  if (count == 0) throw Error(ErrorCode::CorruptHeader, "weight file declares no layers");
  struct Header {
    std::uint32_t in, out;
    std::uint8_t activation, tie;
  };
  std::vector<Header> headers(count);
  std::size_t expected = 0;
  for (auto& h : headers) {
    h = {r.u32(), r.u32(), r.u8(), r.u8()};
    if (h.activation > static_cast<std::uint8_t>(Activation::Relu)) {
      throw Error(ErrorCode::CorruptHeader, "unknown activation tag");
    }
    expected += (h.tie == kNoTie ? static_cast<std::size_t>(h.in) * h.out : 0) + h.out;
  }
  if (r.remaining() < expected * 4) throw Error(ErrorCode::CorruptHeader, "weight file is truncated");
  if (r.remaining() != expected * 4) throw Error(ErrorCode::SizeMismatch, "trailing bytes after parameter blocks");

  Mlp<float> model;
  try {
    for (const auto& h : headers) {
      if (h.tie == kNoTie) {
        model.add_dense(h.in, h.out, static_cast<Activation>(h.activation));
      } else {
        model.add_tied(h.tie, static_cast<Activation>(h.activation));
        if (model.layers().back().in != h.in || model.layers().back().out != h.out) {
          throw Error(ErrorCode::ShapeMismatch, "tied layer shape disagrees with its source");
        }
      }
    }
  } catch (const Error& e) {
    throw Error(ErrorCode::CorruptHeader, std::string("inconsistent layer table: ") + e.what());
  }
  for (std::size_t i = 0; i < headers.size(); ++i) {
    auto& l = model.mutable_layer(i);
    if (!l.tied_to) {
      for (Eigen::Index rr = 0; rr < l.weights.rows(); ++rr) {
        for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(rr, c) = r.f32();
      }
    }
    for (Eigen::Index rr = 0; rr < l.bias.size(); ++rr) l.bias[rr] = r.f32();
  }
  return model;
}

void save_weights_file(const Mlp<float>& model, const std::filesystem::path& path) {
  detail::write_binary_file(path, save_weights(model));
}

Mlp<float> load_weights_file(const std::filesystem::path& path) {
  return load_weights(detail::read_binary_file(path));
}

template class Mlp<float>;
template class Mlp<double>;

#define NPE_INSTANTIATE(S)                                                                          \
  template struct MlpGradients<S>;                                                                  \
  template struct AdamState<S>;                                                                     \
  template MatrixT<S> forward<S>(const Mlp<S>&, const MatrixT<S>&, ForwardCache<S>*, std::size_t,      \
                                 std::size_t);                                                      \
  template MatrixT<S> backward<S>(const Mlp<S>&, const ForwardCache<S>&, const MatrixT<S>&,         \
                                  MlpGradients<S>*);                                                \
  template double mse<S>(const MatrixT<S>&, const MatrixT<S>&, MatrixT<S>*);                        \
  template void adam_step<S>(Mlp<S>&, const MlpGradients<S>&, AdamState<S>&);

NPE_INSTANTIATE(float)
NPE_INSTANTIATE(double)

#undef NPE_INSTANTIATE

}  // namespace npe
