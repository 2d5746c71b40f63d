#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "cvfp/core/error.hpp"

namespace cvfp {

enum class Activation { None, ModReLU, CReLU };

constexpr std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::None: return "none";
    case Activation::ModReLU: return "modrelu";
    case Activation::CReLU: return "crelu";
  }
  return "none";
}

inline Activation activation_from_string(std::string_view s) {
  if (s == "none") return Activation::None;
  if (s == "modrelu") return Activation::ModReLU;
  if (s == "crelu") return Activation::CReLU;
  throw Error(ErrorCode::InvalidArchitecture, "unknown activation '" + std::string(s) + "'");
}

/// Complex weights, no additive bias. ModReLU adds one learned real radius per filter.
struct ComplexConv1D {
  std::size_t filters = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  Activation activation = Activation::ModReLU;
};
struct SquaredModulus {};
struct TemporalAverage {};
/// Real weights with per-filter bias, followed by ReLU.
struct RealConv1D {
  std::size_t filters = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
};
/// Fully connected, per-unit bias, ReLU.
struct RealDense {
  std::size_t units = 0;
};
/// Class scores; softmax lives in the loss.
struct OutputDense {
  std::size_t classes = 0;
};

using LayerSpec =
    std::variant<ComplexConv1D, SquaredModulus, TemporalAverage, RealConv1D, RealDense, OutputDense>;

enum class NetworkMode { Complex, Real2Ch };

struct NetworkSpec {
  std::vector<LayerSpec> layers;
  std::size_t input_length = 0;
  /// Complex channels of the incoming batch. Real2Ch networks see twice this many real channels.
  std::size_t input_channels = 1;
  NetworkMode mode = NetworkMode::Complex;
};

/// Activation geometry after a layer.
struct LayerShape {
  std::size_t channels = 0;
  std::size_t length = 0;
  bool complex = false;
};

constexpr std::size_t conv_output_length(std::size_t length, std::size_t kernel, std::size_t stride) {
  return (length - kernel) / stride + 1;
}

/// Shapes entering layer 0 (index 0) and leaving every layer (index i+1). Throws on any
/// ordering or geometry violation.
inline std::vector<LayerShape> infer_shapes(const NetworkSpec& net) {
  auto fail = [](std::size_t i, const std::string& what) {
    throw Error(ErrorCode::InvalidArchitecture, "layer " + std::to_string(i) + ": " + what);
  };
  require(net.input_length >= 1, ErrorCode::InvalidArchitecture, "input_length must be >= 1");
  require(net.input_channels >= 1, ErrorCode::InvalidArchitecture, "input_channels must be >= 1");
  require(!net.layers.empty(), ErrorCode::InvalidArchitecture, "network has no layers");

  const bool complex_mode = net.mode == NetworkMode::Complex;
  std::vector<LayerShape> shapes;
  shapes.reserve(net.layers.size() + 1);
  shapes.push_back(complex_mode ? LayerShape{net.input_channels, net.input_length, true}
                                : LayerShape{2 * net.input_channels, net.input_length, false});

  // Stages: 0 complex convs, 1 real convs, 2 dense, 3 done.
  int stage = complex_mode ? 0 : 1;
  bool seen_modulus = false;
  bool seen_average = false;

  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    LayerShape cur = shapes.back();
    LayerShape next = cur;
    const auto& layer = net.layers[i];
    if (stage == 3) fail(i, "no layer may follow OutputDense");

    if (const auto* c = std::get_if<ComplexConv1D>(&layer)) {
      if (!complex_mode) fail(i, "complex convolution in a real2ch network");
      if (stage != 0) fail(i, "complex convolution after the complex-to-real boundary");
      if (c->filters < 1 || c->stride < 1 || c->kernel < 1) fail(i, "filters, kernel and stride must be >= 1");
      if (c->kernel > cur.length)
        fail(i, "kernel " + std::to_string(c->kernel) + " exceeds input length " + std::to_string(cur.length));
      next = {c->filters, conv_output_length(cur.length, c->kernel, c->stride), true};
    } else if (std::holds_alternative<SquaredModulus>(layer)) {
      if (!complex_mode) fail(i, "squared modulus in a real2ch network");
      if (seen_modulus) fail(i, "more than one squared modulus layer");
      seen_modulus = true;
      stage = 1;
      next.complex = false;
    } else if (const auto* r = std::get_if<RealConv1D>(&layer)) {
      if (stage != 1) fail(i, "real convolution must sit between the complex-to-real boundary and the average");
      if (r->filters < 1 || r->stride < 1 || r->kernel < 1) fail(i, "filters, kernel and stride must be >= 1");
      if (r->kernel > cur.length)
        fail(i, "kernel " + std::to_string(r->kernel) + " exceeds input length " + std::to_string(cur.length));
      next = {r->filters, conv_output_length(cur.length, r->kernel, r->stride), false};
    } else if (std::holds_alternative<TemporalAverage>(layer)) {
      if (stage != 1) fail(i, "temporal average must follow the complex-to-real boundary");
      seen_average = true;
      stage = 2;
      next.length = 1;
    } else if (const auto* d = std::get_if<RealDense>(&layer)) {
      if (stage != 2) fail(i, "dense layer before the temporal average");
      if (d->units < 1) fail(i, "units must be >= 1");
      next = {d->units, 1, false};
    } else if (const auto* o = std::get_if<OutputDense>(&layer)) {
      if (stage != 2) fail(i, "output layer before the temporal average");
      if (o->classes < 1) fail(i, "classes must be >= 1");
      next = {o->classes, 1, false};
      stage = 3;
    }
    shapes.push_back(next);
  }
  if (complex_mode && !seen_modulus)
    throw Error(ErrorCode::InvalidArchitecture, "complex network lacks a squared modulus layer");
  if (!seen_average) throw Error(ErrorCode::InvalidArchitecture, "network lacks a temporal average layer");
  if (stage != 3) throw Error(ErrorCode::InvalidArchitecture, "network must end in OutputDense");
  return shapes;
}

inline void validate(const NetworkSpec& net) { (void)infer_shapes(net); }

inline std::size_t num_classes(const NetworkSpec& net) {
  validate(net);
  return std::get<OutputDense>(net.layers.back()).classes;
}

/// Real scalars per layer, in declaration order.
inline std::vector<std::size_t> layer_parameter_counts(const NetworkSpec& net) {
  const auto shapes = infer_shapes(net);
  std::vector<std::size_t> counts;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const std::size_t in_ch = shapes[i].channels;
    counts.push_back(std::visit(
        [&](const auto& l) -> std::size_t {
          using L = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<L, ComplexConv1D>) {
            return 2 * l.filters * in_ch * l.kernel + (l.activation == Activation::ModReLU ? l.filters : 0);
          } else if constexpr (std::is_same_v<L, RealConv1D>) {
            return l.filters * in_ch * l.kernel + l.filters;
          } else if constexpr (std::is_same_v<L, RealDense>) {
            return in_ch * l.units + l.units;
          } else if constexpr (std::is_same_v<L, OutputDense>) {
            return in_ch * l.classes + l.classes;
          } else {
            return 0;
          }
        },
        net.layers[i]));
  }
  return counts;
}

inline std::size_t count_parameters(const NetworkSpec& net) {
  std::size_t total = 0;
  for (auto c : layer_parameter_counts(net)) total += c;
  return total;
}

/// Input samples seen by one output position of the given convolution layer.
inline std::size_t receptive_field(const NetworkSpec& net, std::size_t layer_index) {
  validate(net);
  require(layer_index < net.layers.size(), ErrorCode::InvalidArgument, "layer index out of range");
  std::size_t field = 1;
  std::size_t jump = 1;
  for (std::size_t i = 0; i <= layer_index; ++i) {
    std::size_t kernel = 1, stride = 1;
    if (const auto* c = std::get_if<ComplexConv1D>(&net.layers[i])) {
      kernel = c->kernel;
      stride = c->stride;
    } else if (const auto* r = std::get_if<RealConv1D>(&net.layers[i])) {
      kernel = r->kernel;
      stride = r->stride;
    } else if (i == layer_index) {
      throw Error(ErrorCode::InvalidArgument, "layer " + std::to_string(i) + " is not a convolution");
    }
    field += (kernel - 1) * jump;
    jump *= stride;
  }
  return field;
}

/// Compact notation, e.g. "100C40x20-100C5x1-|.|^2-Avg-100D-20out".
inline std::string describe(const NetworkSpec& net) {
  std::string out = net.mode == NetworkMode::Real2Ch ? "real2ch:" : "";
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    if (i) out += "-";
    std::visit(
        [&](const auto& l) {
          using L = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<L, ComplexConv1D>) {
            out += std::to_string(l.filters) + "C" + std::to_string(l.kernel) + "x" + std::to_string(l.stride);
            if (l.activation != Activation::ModReLU) out += "(" + std::string(to_string(l.activation)) + ")";
          } else if constexpr (std::is_same_v<L, RealConv1D>) {
            out += std::to_string(l.filters) + "R" + std::to_string(l.kernel) + "x" + std::to_string(l.stride);
          } else if constexpr (std::is_same_v<L, SquaredModulus>) {
            out += "|.|^2";
          } else if constexpr (std::is_same_v<L, TemporalAverage>) {
            out += "Avg";
          } else if constexpr (std::is_same_v<L, RealDense>) {
            out += std::to_string(l.units) + "D";
          } else {
            out += std::to_string(l.classes) + "out";
          }
        },
        net.layers[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON form used by checkpoints and custom architectures in run configs.

inline nlohmann::json to_json(const LayerSpec& layer) {
  return std::visit(
      [](const auto& l) -> nlohmann::json {
        using L = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<L, ComplexConv1D>) {
          return {{"type", "complex_conv1d"}, {"filters", l.filters}, {"kernel", l.kernel},
                  {"stride", l.stride}, {"activation", std::string(to_string(l.activation))}};
        } else if constexpr (std::is_same_v<L, SquaredModulus>) {
          return {{"type", "squared_modulus"}};
        } else if constexpr (std::is_same_v<L, TemporalAverage>) {
          return {{"type", "temporal_average"}};
        } else if constexpr (std::is_same_v<L, RealConv1D>) {
          return {{"type", "real_conv1d"}, {"filters", l.filters}, {"kernel", l.kernel}, {"stride", l.stride}};
        } else if constexpr (std::is_same_v<L, RealDense>) {
          return {{"type", "real_dense"}, {"units", l.units}};
        } else {
          return {{"type", "output_dense"}, {"classes", l.classes}};
        }
      },
      layer);
}

inline nlohmann::json to_json(const NetworkSpec& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net.layers) layers.push_back(to_json(l));
  return {{"mode", net.mode == NetworkMode::Complex ? "complex" : "real2ch"},
          {"input_length", net.input_length},
          {"input_channels", net.input_channels},
          {"layers", layers}};
}

namespace detail {
inline std::size_t json_count(const nlohmann::json& j, const char* key) {
  require(j.contains(key) && j.at(key).is_number_unsigned(), ErrorCode::InvalidArchitecture,
          std::string("missing or non-positive integer '") + key + "'");
  return j.at(key).get<std::size_t>();
}

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    require(ok, ErrorCode::InvalidArchitecture, "unknown layer key '" + key + "'");
  }
}
}  // namespace detail

inline LayerSpec layer_from_json(const nlohmann::json& j) {
  require(j.is_object() && j.contains("type") && j.at("type").is_string(), ErrorCode::InvalidArchitecture,
          "layer entry needs a string 'type'");
  const auto type = j.at("type").get<std::string>();
  if (type == "complex_conv1d") {
    detail::reject_unknown(j, {"type", "filters", "kernel", "stride", "activation"});
    ComplexConv1D c{detail::json_count(j, "filters"), detail::json_count(j, "kernel"),
                    j.contains("stride") ? detail::json_count(j, "stride") : 1, Activation::ModReLU};
    if (j.contains("activation")) c.activation = activation_from_string(j.at("activation").get<std::string>());
    return c;
  }
  if (type == "squared_modulus") {
    detail::reject_unknown(j, {"type"});
    return SquaredModulus{};
  }
  if (type == "temporal_average") {
    detail::reject_unknown(j, {"type"});
    return TemporalAverage{};
  }
  if (type == "real_conv1d") {
    detail::reject_unknown(j, {"type", "filters", "kernel", "stride"});
    return RealConv1D{detail::json_count(j, "filters"), detail::json_count(j, "kernel"),
                      j.contains("stride") ? detail::json_count(j, "stride") : 1};
  }
  if (type == "real_dense") {
    detail::reject_unknown(j, {"type", "units"});
    return RealDense{detail::json_count(j, "units")};
  }
  if (type == "output_dense") {
    detail::reject_unknown(j, {"type", "classes"});
    return OutputDense{detail::json_count(j, "classes")};
  }
  throw Error(ErrorCode::InvalidArchitecture, "unknown layer type '" + type + "'");
}

inline NetworkSpec network_from_json(const nlohmann::json& j) {
  require(j.is_object(), ErrorCode::InvalidArchitecture, "network description must be an object");
  detail::reject_unknown(j, {"mode", "input_length", "input_channels", "layers"});
  NetworkSpec net;
  const auto mode = j.value("mode", std::string("complex"));
  if (mode == "complex") {
    net.mode = NetworkMode::Complex;
  } else if (mode == "real2ch") {
    net.mode = NetworkMode::Real2Ch;
  } else {
    throw Error(ErrorCode::InvalidArchitecture, "unknown network mode '" + mode + "'");
  }
  net.input_length = detail::json_count(j, "input_length");
  net.input_channels = j.contains("input_channels") ? detail::json_count(j, "input_channels") : 1;
  require(j.contains("layers") && j.at("layers").is_array(), ErrorCode::InvalidArchitecture,
          "network needs a 'layers' array");
  for (const auto& l : j.at("layers")) net.layers.push_back(layer_from_json(l));
  validate(net);
  return net;
}

// ---------------------------------------------------------------------------
// Named architectures.

namespace arch {

inline NetworkSpec complex_preamble(std::size_t k1, std::size_t s1, std::size_t k2, std::size_t classes,
                                    Activation act) {
  NetworkSpec net;
  net.input_length = 320;
  net.layers = {ComplexConv1D{100, k1, s1, act}, ComplexConv1D{100, k2, 1, act}, SquaredModulus{},
                TemporalAverage{}, RealDense{100}, OutputDense{classes}};
  return net;
}

inline NetworkSpec real_preamble(std::size_t k1, std::size_t s1, std::size_t k2, double scale,
                                 std::size_t classes) {
  const auto filters = static_cast<std::size_t>(std::lround(100.0 * scale));
  NetworkSpec net;
  net.mode = NetworkMode::Real2Ch;
  net.input_length = 320;
  net.layers = {RealConv1D{filters, k1, s1}, RealConv1D{filters, k2, 1}, TemporalAverage{}, RealDense{100},
                OutputDense{classes}};
  return net;
}

/// 100C40x20 - 100C5x1 - |.|^2 - Avg - 100D
inline NetworkSpec adsb_complex(std::size_t classes = 100, Activation act = Activation::ModReLU) {
  return complex_preamble(40, 20, 5, classes, act);
}

/// 100C20x10 - 100C10x1 - |.|^2 - Avg - 100D
inline NetworkSpec wifi_complex(std::size_t classes = 19, Activation act = Activation::ModReLU) {
  return complex_preamble(20, 10, 10, classes, act);
}

inline NetworkSpec adsb_real(double scale = 1.0, std::size_t classes = 100) {
  return real_preamble(40, 20, 5, scale, classes);
}

inline NetworkSpec wifi_real(double scale = 1.0, std::size_t classes = 19) {
  return real_preamble(20, 10, 10, scale, classes);
}

/// 100C100x50 - |.|^2 - 100C10x2 - Avg - 100D over a 64-symbol window.
inline NetworkSpec post_preamble(std::size_t classes = 100, std::size_t input_length = 1280,
                                 std::size_t first_kernel = 100, std::size_t first_stride = 50,
                                 Activation act = Activation::ModReLU) {
  NetworkSpec net;
  net.input_length = input_length;
  net.layers = {ComplexConv1D{100, first_kernel, first_stride, act}, SquaredModulus{}, RealConv1D{100, 10, 2},
                TemporalAverage{}, RealDense{100}, OutputDense{classes}};
  return net;
}

/// The post-preamble network with a first-layer kernel of two symbols.
inline NetworkSpec post_preamble_two_symbol(std::size_t classes = 100, std::size_t input_length = 1280,
                                            Activation act = Activation::ModReLU) {
  return post_preamble(classes, input_length, 40, 20, act);
}

/// Default class count for a named architecture.
inline std::size_t default_classes(std::string_view name) {
  return name.starts_with("wifi") ? 19 : 100;
}

inline const std::vector<std::string>& names() {
  static const std::vector<std::string> all = {
      "adsb-complex", "adsb-real", "adsb-real-1.4x", "adsb-real-2x", "wifi-complex", "wifi-real",
      "wifi-real-1.4x", "wifi-real-2x", "postpreamble", "postpreamble-k2"};
  return all;
}

inline NetworkSpec by_name(std::string_view name, std::size_t classes,
                           Activation act = Activation::ModReLU, std::size_t input_length = 0) {
  auto with_length = [&](NetworkSpec net) {
    if (input_length) net.input_length = input_length;
    validate(net);
    return net;
  };
  if (name == "adsb-complex") return with_length(adsb_complex(classes, act));
  if (name == "wifi-complex") return with_length(wifi_complex(classes, act));
  if (name == "adsb-real") return with_length(adsb_real(1.0, classes));
  if (name == "adsb-real-1.4x") return with_length(adsb_real(1.4, classes));
  if (name == "adsb-real-2x") return with_length(adsb_real(2.0, classes));
  if (name == "wifi-real") return with_length(wifi_real(1.0, classes));
  if (name == "wifi-real-1.4x") return with_length(wifi_real(1.4, classes));
  if (name == "wifi-real-2x") return with_length(wifi_real(2.0, classes));
  if (name == "postpreamble") return with_length(post_preamble(classes, 1280, 100, 50, act));
  if (name == "postpreamble-k2") return with_length(post_preamble_two_symbol(classes, 1280, act));
  throw Error(ErrorCode::InvalidArchitecture, "unknown architecture '" + std::string(name) + "'");
}

}  // namespace arch
}  // namespace cvfp
