#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "cvfp/core/activations.hpp"
#include "cvfp/core/architecture.hpp"
#include "cvfp/core/conv.hpp"
#include "cvfp/core/network.hpp"
#include "test_support.hpp"

using namespace cvfp;
using cvfp::testing::random_complex;
using cvfp::testing::random_parameters;

namespace {

ComplexTensor<double> scalar(std::complex<double> z, std::size_t channels = 1) {
  ComplexTensor<double> t(Shape3{1, channels, 1});
  for (std::size_t c = 0; c < channels; ++c) t.set(0, c, 0, z);
  return t;
}

std::vector<double> radii(std::initializer_list<double> v) { return v; }

}  // namespace

TEST(Tensor, RejectsZeroDimensions) {
  EXPECT_THROW(ComplexTensor<double>(Shape3{1, 0, 4}), Error);
  EXPECT_THROW(RealTensor<float>(Shape3{1, 1, 0}), Error);
  ComplexTensor<float> ok(Shape3{2, 3, 4});
  EXPECT_EQ(ok.real_plane().size(), ok.imag_plane().size());
}

TEST(ModRelu, Examples) {
  auto b = radii({1.0});
  auto y = modrelu(scalar({3, 4}), std::span<const double>(b));
  EXPECT_DOUBLE_EQ(y.re(0, 0, 0), 2.4);
  EXPECT_DOUBLE_EQ(y.im(0, 0, 0), 3.2);

  auto half = radii({0.5});
  y = modrelu(scalar({0.3, 0}), std::span<const double>(half));
  EXPECT_EQ(y.at(0, 0, 0), std::complex<double>(0, 0));

  auto zero = radii({0.0});
  y = modrelu(scalar({-2, 0}), std::span<const double>(zero));
  EXPECT_EQ(y.at(0, 0, 0), std::complex<double>(-2, 0));
}

TEST(ModRelu, PhasePreservedOutsideDiscAndZeroInside) {
  auto z = random_complex<double>(Shape3{4, 3, 50}, 7);
  auto b = radii({0.5, 1.0, 1.5});
  auto y = modrelu(z, std::span<const double>(b));
  for (std::size_t n = 0; n < 4; ++n)
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t l = 0; l < 50; ++l) {
        const auto in = z.at(n, c, l);
        const auto out = y.at(n, c, l);
        if (std::abs(in) > b[c]) {
          EXPECT_NEAR(std::remainder(std::arg(out) - std::arg(in), 2 * std::numbers::pi), 0.0, 1e-12);
          EXPECT_NEAR(std::abs(out), std::abs(in) - b[c], 1e-12);
        } else {
          EXPECT_EQ(out, std::complex<double>(0, 0));
        }
      }
}

TEST(ModRelu, ZeroRadiusIsIdentity) {
  auto z = random_complex<double>(Shape3{2, 2, 33}, 11);
  auto b = radii({0.0, 0.0});
  auto y = modrelu(z, std::span<const double>(b));
  for (std::size_t i = 0; i < z.size(); ++i) {
    EXPECT_NEAR(y.real_plane()[i], z.real_plane()[i], 1e-15);
    EXPECT_NEAR(y.imag_plane()[i], z.imag_plane()[i], 1e-15);
  }
}

TEST(ModRelu, BiasShapeMismatchIsError) {
  auto z = random_complex<double>(Shape3{1, 3, 4}, 1);
  auto b = radii({0.1, 0.2});
  try {
    modrelu(z, std::span<const double>(b));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
}

TEST(ModRelu, DeadZoneBlocksUpstreamGradient) {
  NetworkSpec net;
  net.input_length = 8;
  net.layers = {ComplexConv1D{2, 3, 1, Activation::ModReLU}, SquaredModulus{}, TemporalAverage{}, OutputDense{3}};
  auto p = random_parameters<double>(net, 5);
  // Channel 1's radius exceeds every possible response, channel 0 stays live.
  p.layers[0].at("modrelu_bias").values = {0.0, 1e6};
  p.touch();
  auto x = random_complex<double>(Shape3{3, 1, 8}, 9);
  auto fwd = forward(net, p, x);
  std::vector<std::size_t> labels{0, 1, 2};
  auto loss = cross_entropy_loss(fwd.scores, labels);
  auto g = backward(net, p, fwd.cache, loss.grad);
  const auto& w = g.layers[0].at("weight");
  const std::size_t per_filter = 3;
  for (std::size_t k = 0; k < per_filter; ++k) {
    EXPECT_EQ(w.real_plane()[per_filter + k], 0.0);
    EXPECT_EQ(w.imag_plane()[per_filter + k], 0.0);
  }
  EXPECT_EQ(g.layers[0].at("modrelu_bias").values[1], 0.0);
  double live = 0;
  for (std::size_t k = 0; k < per_filter; ++k) live += std::abs(w.real_plane()[k]) + std::abs(w.imag_plane()[k]);
  EXPECT_GT(live, 0.0);
}

TEST(CRelu, QuadrantExamples) {
  EXPECT_EQ(crelu(scalar({-1, 2})).at(0, 0, 0), std::complex<double>(0, 2));
  EXPECT_EQ(crelu(scalar({2, 3})).at(0, 0, 0), std::complex<double>(2, 3));
  EXPECT_EQ(crelu(scalar({-1, -1})).at(0, 0, 0), std::complex<double>(0, 0));
}

TEST(CRelu, NonNegativeAndIdempotent) {
  auto z = random_complex<double>(Shape3{3, 2, 40}, 3);
  auto once = crelu(z);
  auto twice = crelu(once);
  for (std::size_t i = 0; i < z.size(); ++i) {
    EXPECT_GE(once.real_plane()[i], 0.0);
    EXPECT_GE(once.imag_plane()[i], 0.0);
    EXPECT_EQ(once.real_plane()[i], twice.real_plane()[i]);
    EXPECT_EQ(once.imag_plane()[i], twice.imag_plane()[i]);
  }
}

TEST(SquaredModulus, Examples) {
  EXPECT_DOUBLE_EQ(squared_modulus(scalar({3, 4})).data()[0], 25.0);
  EXPECT_DOUBLE_EQ(squared_modulus(scalar({0, 0})).data()[0], 0.0);
  EXPECT_DOUBLE_EQ(squared_modulus(scalar({-1, -1})).data()[0], 2.0);
}

TEST(SquaredModulus, GlobalPhaseInvariant) {
  auto z = random_complex<double>(Shape3{2, 3, 17}, 21);
  const auto base = squared_modulus(z);
  for (double theta : {std::numbers::pi / 7, std::numbers::pi / 3, 1.0}) {
    auto r = z;
    const std::complex<double> rot = std::polar(1.0, theta);
    for (std::size_t i = 0; i < z.size(); ++i) {
      const auto v = rot * std::complex<double>(z.real_plane()[i], z.imag_plane()[i]);
      r.real_plane()[i] = v.real();
      r.imag_plane()[i] = v.imag();
    }
    const auto rotated = squared_modulus(r);
    for (std::size_t i = 0; i < z.size(); ++i) {
      EXPECT_GE(rotated.data()[i], 0.0);
      EXPECT_NEAR(rotated.data()[i], base.data()[i], 1e-12);
    }
  }
}

TEST(TemporalAverage, Examples) {
  RealTensor<double> x(Shape3{1, 2, 3});
  x(0, 0, 0) = 1;
  x(0, 0, 1) = 2;
  x(0, 0, 2) = 3;
  for (std::size_t l = 0; l < 3; ++l) x(0, 1, l) = 4.5;
  auto y = temporal_average(x);
  EXPECT_EQ(y.shape(), (Shape3{1, 2, 1}));
  EXPECT_DOUBLE_EQ(y(0, 0, 0), 2.0);
  EXPECT_DOUBLE_EQ(y(0, 1, 0), 4.5);
  RealTensor<double> single(Shape3{1, 1, 1}, -7.25);
  EXPECT_DOUBLE_EQ(temporal_average(single)(0, 0, 0), -7.25);
}

TEST(ComplexConv, SingleProductExample) {
  auto x = scalar({1, 1});
  std::vector<double> wr{1.0}, wi{-1.0};
  auto y = complex_conv1d(x, std::span<const double>(wr), std::span<const double>(wi), 1, 1, 1);
  EXPECT_EQ(y.at(0, 0, 0), std::complex<double>(2, 0));
}

TEST(ComplexConv, OutputLengths) {
  EXPECT_EQ(conv_output_length(320, 40, 20), 15u);
  EXPECT_EQ(conv_output_length(320, 20, 10), 31u);
  EXPECT_EQ(conv_output_length(15, 5, 1), 11u);
  EXPECT_EQ(conv_output_length(31, 10, 1), 22u);
  EXPECT_EQ(conv_output_length(1280, 100, 50), 24u);

  const auto adsb = infer_shapes(arch::adsb_complex());
  EXPECT_EQ(adsb[0].length, 320u);
  EXPECT_EQ(adsb[1].length, 15u);
  EXPECT_EQ(adsb[2].length, 11u);
  const auto wifi = infer_shapes(arch::wifi_complex());
  EXPECT_EQ(wifi[1].length, 31u);
  EXPECT_EQ(wifi[2].length, 22u);
}

TEST(ComplexConv, KernelLongerThanInputIsError) {
  auto x = random_complex<double>(Shape3{1, 1, 4}, 2);
  std::vector<double> w(5, 0.1);
  EXPECT_THROW(complex_conv1d(x, std::span<const double>(w), std::span<const double>(w), 1, 5, 1), Error);
  NetworkSpec net;
  net.input_length = 4;
  net.layers = {ComplexConv1D{1, 5, 1}, SquaredModulus{}, TemporalAverage{}, OutputDense{2}};
  EXPECT_THROW(validate(net), Error);
}

TEST(ComplexConv, MatchesDirectComplexSum) {
  const std::size_t f = 3, c = 2, k = 4, s = 3;
  auto x = random_complex<double>(Shape3{2, c, 19}, 4);
  const auto w = random_complex<double>(Shape3{f, c, k}, 5);
  auto y = complex_conv1d(x, w.real_plane(), w.imag_plane(), f, k, s);
  ASSERT_EQ(y.shape(), (Shape3{2, f, conv_output_length(19, k, s)}));
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t o = 0; o < f; ++o)
      for (std::size_t t = 0; t < y.shape().length; ++t) {
        std::complex<double> acc = 0;
        for (std::size_t ci = 0; ci < c; ++ci)
          for (std::size_t j = 0; j < k; ++j) acc += w.at(o, ci, j) * x.at(b, ci, t * s + j);
        EXPECT_NEAR(std::abs(acc - y.at(b, o, t)), 0.0, 1e-12);
      }
}

TEST(ComplexConv, GlobalPhaseEquivariant) {
  auto x = random_complex<double>(Shape3{1, 1, 40}, 8);
  const auto w = random_complex<double>(Shape3{4, 1, 6}, 9);
  const auto base = complex_conv1d(x, w.real_plane(), w.imag_plane(), 4, 6, 2);
  const std::complex<double> rot = std::polar(1.0, 0.7);
  auto r = x;
  for (std::size_t l = 0; l < 40; ++l) r.set(0, 0, l, rot * x.at(0, 0, l));
  const auto rotated = complex_conv1d(r, w.real_plane(), w.imag_plane(), 4, 6, 2);
  for (std::size_t o = 0; o < 4; ++o)
    for (std::size_t t = 0; t < base.shape().length; ++t)
      EXPECT_NEAR(std::abs(rotated.at(0, o, t) - rot * base.at(0, o, t)), 0.0, 1e-12);
}

TEST(ParameterCount, TableRows) {
  EXPECT_EQ(count_parameters(arch::adsb_complex()), 128400u);
  EXPECT_EQ(count_parameters(arch::adsb_real(1.0)), 78400u);
  EXPECT_EQ(count_parameters(arch::adsb_real(1.4)), 133680u);
  EXPECT_EQ(count_parameters(arch::adsb_real(2.0)), 246600u);
  EXPECT_EQ(count_parameters(arch::wifi_complex()), 216219u);
  EXPECT_EQ(count_parameters(arch::wifi_real(1.0)), 116219u);
  EXPECT_EQ(count_parameters(arch::wifi_real(1.4)), 217899u);
  EXPECT_EQ(count_parameters(arch::wifi_real(2.0)), 430419u);
}

TEST(ParameterCount, MatchesParameterSet) {
  for (const auto& name : arch::names()) {
    const auto net = arch::by_name(name, arch::default_classes(name));
    EXPECT_EQ(make_parameters<float>(net).scalar_count(), count_parameters(net)) << name;
  }
}

TEST(Architecture, ReceptiveField) {
  const auto net = arch::adsb_complex();
  EXPECT_EQ(receptive_field(net, 0), 40u);
  EXPECT_EQ(receptive_field(net, 1), 120u);
}

TEST(Architecture, OrderingRules) {
  NetworkSpec net;
  net.input_length = 16;
  net.layers = {ComplexConv1D{2, 4, 2}, TemporalAverage{}, OutputDense{2}};
  EXPECT_THROW(validate(net), Error);
  net.layers = {ComplexConv1D{2, 4, 2}, SquaredModulus{}, RealDense{3}, TemporalAverage{}, OutputDense{2}};
  EXPECT_THROW(validate(net), Error);
  net.layers = {ComplexConv1D{2, 4, 2}, SquaredModulus{}, TemporalAverage{}, OutputDense{2}, RealDense{3}};
  EXPECT_THROW(validate(net), Error);
  net.mode = NetworkMode::Real2Ch;
  net.layers = {ComplexConv1D{2, 4, 2}, SquaredModulus{}, TemporalAverage{}, OutputDense{2}};
  EXPECT_THROW(validate(net), Error);
  net.layers = {RealConv1D{2, 4, 2}, TemporalAverage{}, OutputDense{2}};
  EXPECT_NO_THROW(validate(net));
}

TEST(Architecture, JsonRoundTripAndUnknownKeys) {
  for (const auto& name : arch::names()) {
    const auto net = arch::by_name(name, 7);
    const auto back = network_from_json(to_json(net));
    EXPECT_EQ(describe(back), describe(net));
    EXPECT_EQ(count_parameters(back), count_parameters(net));
  }
  auto j = to_json(arch::adsb_complex());
  j["layers"][0]["dilation"] = 2;
  EXPECT_THROW(network_from_json(j), Error);
}

TEST(Network, EndToEndPhaseInvariance) {
  const auto net = arch::adsb_complex(3);
  const auto p = random_parameters<double>(net, 31, 0.05);
  auto x = random_complex<double>(Shape3{2, 1, 320}, 32);
  const auto base = predict(net, p, x);
  for (double theta : {std::numbers::pi / 7, std::numbers::pi / 3, 1.0}) {
    auto r = x;
    const std::complex<double> rot = std::polar(1.0, theta);
    for (std::size_t b = 0; b < 2; ++b)
      for (std::size_t l = 0; l < 320; ++l) r.set(b, 0, l, rot * x.at(b, 0, l));
    const auto scores = predict(net, p, r);
    for (std::size_t i = 0; i < base.size(); ++i) EXPECT_NEAR(scores.data()[i], base.data()[i], 1e-9);
  }
}

TEST(Network, ZeroScoreGradientGivesZeroParameterGradient) {
  const auto net = cvfp::testing::toy_complex(Activation::ModReLU);
  const auto p = random_parameters<double>(net, 3);
  auto fwd = forward(net, p, random_complex<double>(Shape3{3, 1, 8}, 4));
  RealTensor<double> zero(fwd.scores.shape());
  const auto g = backward(net, p, fwd.cache, zero);
  g.for_each_array([](std::size_t, const ParamArray<double>& a) {
    for (double v : a.values) EXPECT_EQ(v, 0.0);
  });
}

TEST(Network, StaleAndMismatchedCacheRejected) {
  const auto net = cvfp::testing::toy_complex(Activation::ModReLU);
  auto p = random_parameters<double>(net, 3);
  auto fwd = forward(net, p, random_complex<double>(Shape3{3, 1, 8}, 4));
  RealTensor<double> g(fwd.scores.shape(), 0.1);

  auto copy = p;
  EXPECT_THROW(backward(net, copy, fwd.cache, g), Error);

  p.layers[0].at("weight").values[0] += 0.5;
  p.touch();
  try {
    backward(net, p, fwd.cache, g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::StaleCache);
  }

  auto no_cache = forward(net, p, random_complex<double>(Shape3{3, 1, 8}, 4), false);
  EXPECT_THROW(backward(net, p, no_cache.cache, g), Error);
  auto good = forward(net, p, random_complex<double>(Shape3{3, 1, 8}, 4));
  RealTensor<double> wrong(Shape3{2, 3, 1});
  EXPECT_THROW(backward(net, p, good.cache, wrong), Error);
}

TEST(Network, ParamMismatchRejected) {
  const auto net = cvfp::testing::toy_complex(Activation::ModReLU);
  const auto other = cvfp::testing::toy_complex(Activation::CReLU);
  const auto p = random_parameters<double>(other, 3);
  EXPECT_THROW(forward(net, p, random_complex<double>(Shape3{1, 1, 8}, 4)), Error);
  const auto q = random_parameters<double>(net, 3);
  EXPECT_THROW(forward(net, q, random_complex<double>(Shape3{1, 1, 9}, 4)), Error);
}

class GradientCheck : public ::testing::TestWithParam<int> {};

TEST_P(GradientCheck, MatchesCentralDifferences) {
  NetworkSpec net;
  switch (GetParam()) {
    case 0: net = cvfp::testing::toy_complex(Activation::ModReLU); break;
    case 1: net = cvfp::testing::toy_complex(Activation::CReLU); break;
    case 2: net = cvfp::testing::toy_complex(Activation::None); break;
    default: net = cvfp::testing::toy_real2ch(); break;
  }
  const auto p = random_parameters<double>(net, 100 + GetParam());
  const auto x = random_complex<double>(Shape3{3, 1, 8}, 200 + GetParam());
  const auto r = cvfp::testing::gradient_check(net, p, x, {0, 1, 2});
  EXPECT_EQ(r.checked, count_parameters(net));
  EXPECT_GT(r.nonzero, r.checked / 2);
  EXPECT_LE(r.max_rel_error, 1e-5) << describe(net);
}

INSTANTIATE_TEST_SUITE_P(LayerTypes, GradientCheck, ::testing::Values(0, 1, 2, 3));

TEST(Network, InputGradientMatchesFiniteDifference) {
  const auto net = cvfp::testing::toy_complex(Activation::ModReLU);
  const auto p = random_parameters<double>(net, 41);
  auto x = random_complex<double>(Shape3{1, 1, 8}, 42);
  auto [out, cache] = forward_prefix(net, p, x, 1, false);
  auto& z = std::get<ComplexTensor<double>>(out);
  // Objective: sum of |pre-activation|^2 of filter 0.
  ComplexTensor<double> g(z.shape());
  for (std::size_t l = 0; l < z.shape().length; ++l) {
    g.re(0, 0, l) = 2 * z.re(0, 0, l);
    g.im(0, 0, l) = 2 * z.im(0, 0, l);
  }
  auto back = backward_prefix<double>(net, p, cache, g, true);
  ASSERT_TRUE(back.input_grad.has_value());
  auto objective = [&](const ComplexTensor<double>& in) {
    auto o = std::get<ComplexTensor<double>>(forward_prefix(net, p, in, 1, false, false).first);
    double s = 0;
    for (std::size_t l = 0; l < o.shape().length; ++l) s += std::norm(o.at(0, 0, l));
    return s;
  };
  for (std::size_t l = 0; l < 8; ++l) {
    for (int part = 0; part < 2; ++part) {
      auto up = x, down = x;
      (part ? up.im(0, 0, l) : up.re(0, 0, l)) += 1e-6;
      (part ? down.im(0, 0, l) : down.re(0, 0, l)) -= 1e-6;
      const double numeric = (objective(up) - objective(down)) / 2e-6;
      const double analytic = part ? back.input_grad->im(0, 0, l) : back.input_grad->re(0, 0, l);
      EXPECT_NEAR(analytic, numeric, 1e-6 * std::max(1.0, std::abs(numeric)));
    }
  }
}
