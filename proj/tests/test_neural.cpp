#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include "support/oracles.hpp"
#include "tomsyn/error.hpp"
#include "tomsyn/neural/checkpoint.hpp"
#include "tomsyn/neural/layers.hpp"
#include "tomsyn/neural/losses.hpp"
#include "tomsyn/neural/optim.hpp"
#include "tomsyn/neural/tensor_ops.hpp"
#include "tomsyn/random.hpp"

using namespace tomsyn;
using namespace tomsyn::neural;
namespace fs = std::filesystem;

namespace {

std::vector<double> random_vec(std::size_t size, std::mt19937_64& rng,
                               double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  std::vector<double> v(size);
  for (double& x : v) x = dist(rng);
  return v;
}

// Naive triple-loop products the tuned kernels are checked against.
void naive_nn(const std::vector<double>& a, const std::vector<double>& b,
              std::vector<double>& c, int m, int k, int n, bool acc) {
  if (!acc) c.assign(static_cast<std::size_t>(m) * n, 0.0);
  for (int i = 0; i < m; ++i) {
    for (int p = 0; p < k; ++p) {
      for (int j = 0; j < n; ++j) {
        c[static_cast<std::size_t>(i) * n + j] +=
            a[static_cast<std::size_t>(i) * k + p] *
            b[static_cast<std::size_t>(p) * n + j];
      }
    }
  }
}

void naive_tn(const std::vector<double>& a, const std::vector<double>& b,
              std::vector<double>& c, int m, int k, int n, bool acc) {
  if (!acc) c.assign(static_cast<std::size_t>(m) * n, 0.0);
  for (int p = 0; p < k; ++p) {
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) {
        c[static_cast<std::size_t>(i) * n + j] +=
            a[static_cast<std::size_t>(p) * m + i] *
            b[static_cast<std::size_t>(p) * n + j];
      }
    }
  }
}

void naive_nt(const std::vector<double>& a, const std::vector<double>& b,
              std::vector<double>& c, int m, int k, int n, bool acc) {
  if (!acc) c.assign(static_cast<std::size_t>(m) * n, 0.0);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int p = 0; p < k; ++p) {
        c[static_cast<std::size_t>(i) * n + j] +=
            a[static_cast<std::size_t>(i) * k + p] *
            b[static_cast<std::size_t>(j) * k + p];
      }
    }
  }
}

double worst_rel(const std::vector<double>& got,
                 const std::vector<double>& want) {
  return testing::max_rel_error(got, want);
}

// Scalar probe loss L = sum_i coeff_i * y_i turns any layer output into one
// number whose analytic input/parameter gradients the layer must reproduce.
struct Probe {
  std::vector<double> coeff;
  explicit Probe(std::size_t size, std::mt19937_64& rng)
      : coeff(random_vec(size, rng)) {}
  double loss(const std::vector<double>& y) const {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += coeff[i] * y[i];
    return s;
  }
};

constexpr double kFdStep = 1e-3;
constexpr double kFdTol = 1e-3;

}  // namespace

TEST_SUITE_BEGIN("neural");

TEST_CASE("gemm variants agree with naive triple loops on odd shapes") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dim(1, 70);
  for (int trial = 0; trial < 60; ++trial) {
    const int m = dim(rng);
    const int k = dim(rng);
    const int n = dim(rng);
    const bool acc = trial % 2 == 1;
    const auto a_nn = random_vec(static_cast<std::size_t>(m) * k, rng);
    const auto b_nn = random_vec(static_cast<std::size_t>(k) * n, rng);
    auto seedc = random_vec(static_cast<std::size_t>(m) * n, rng);

    std::vector<double> got = seedc;
    gemm_nn(a_nn.data(), b_nn.data(), got.data(), m, k, n, acc);
    std::vector<double> want = seedc;
    naive_nn(a_nn, b_nn, want, m, k, n, acc);
    CHECK(worst_rel(got, want) < 1e-11);

    const auto a_tn = random_vec(static_cast<std::size_t>(k) * m, rng);
    got = seedc;
    gemm_tn(a_tn.data(), b_nn.data(), got.data(), m, k, n, acc);
    want = seedc;
    naive_tn(a_tn, b_nn, want, m, k, n, acc);
    CHECK(worst_rel(got, want) < 1e-11);

    const auto b_nt = random_vec(static_cast<std::size_t>(n) * k, rng);
    got = seedc;
    gemm_nt(a_nn.data(), b_nt.data(), got.data(), m, k, n, acc);
    want = seedc;
    naive_nt(a_nn, b_nt, want, m, k, n, acc);
    CHECK(worst_rel(got, want) < 1e-11);
  }
  // The shapes the model actually runs, including the tall-C short-k form
  // of a dense layer's weight gradient.
  for (auto [m, k, n] : {std::array<int, 3>{3872, 180, 32},
                         std::array<int, 3>{1936, 32, 121},
                         std::array<int, 3>{32, 1936, 121},
                         std::array<int, 3>{121, 141, 16}}) {
    const auto a = random_vec(static_cast<std::size_t>(m) * k, rng);
    const auto b = random_vec(static_cast<std::size_t>(k) * n, rng);
    std::vector<double> got, want;
    got.assign(static_cast<std::size_t>(m) * n, 0.0);
    gemm_nn(a.data(), b.data(), got.data(), m, k, n, false);
    naive_nn(a, b, want, m, k, n, false);
    CHECK(worst_rel(got, want) < 1e-10);

    const auto at = random_vec(static_cast<std::size_t>(k) * m, rng);
    got.assign(static_cast<std::size_t>(m) * n, 0.0);
    gemm_tn(at.data(), b.data(), got.data(), m, k, n, false);
    naive_tn(at, b, want, m, k, n, false);
    CHECK(worst_rel(got, want) < 1e-10);
  }
}

TEST_CASE("conv2d: one-by-one identity kernel copies the input") {
  const int c = 7;
  Conv2d<double> conv("id", 1, c, c);
  auto params = conv.params();
  std::fill(params[0]->w.begin(), params[0]->w.end(), 0.0);
  for (int i = 0; i < c; ++i) params[0]->w[i * c + i] = 1.0;

  std::mt19937_64 rng(5);
  const auto x = random_vec(2 * 11 * 11 * c, rng);
  std::vector<double> y(x.size(), 0.0);
  conv.forward(x.data(), y.data(), 2, 11, 11);
  CHECK(worst_rel(y, x) == 0.0);
}

TEST_CASE("conv2d: zero kernels produce the bias everywhere") {
  Conv2d<double> conv("z", 3, 4, 3);
  auto params = conv.params();
  std::fill(params[0]->w.begin(), params[0]->w.end(), 0.0);
  params[1]->w = {0.5, -1.0, 2.0};
  std::mt19937_64 rng(6);
  const auto x = random_vec(1 * 5 * 6 * 4, rng);
  std::vector<double> y(1 * 5 * 6 * 3, 1e9);
  conv.forward(x.data(), y.data(), 1, 5, 6);
  for (int pix = 0; pix < 5 * 6; ++pix) {
    CHECK(y[pix * 3 + 0] == 0.5);
    CHECK(y[pix * 3 + 1] == -1.0);
    CHECK(y[pix * 3 + 2] == 2.0);
  }
}

TEST_CASE("conv2d: forward equals the quintuple-loop reference") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> geom(1, 12);
  std::uniform_int_distribution<int> chan(1, 33);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 1 + trial % 4;
    const int h = geom(rng);
    const int w = geom(rng);
    const int cin = chan(rng);
    const int cout = chan(rng);
    Conv2d<double> conv("r", 3, cin, cout);
    Rng init(trial + 1);
    conv.init(init);
    auto params = conv.params();
    params[1]->w = random_vec(static_cast<std::size_t>(cout), rng, 0.1);

    const auto x = random_vec(static_cast<std::size_t>(n) * h * w * cin, rng);
    std::vector<double> y(static_cast<std::size_t>(n) * h * w * cout, 0.0);
    conv.forward(x.data(), y.data(), n, h, w);

    std::vector<double> want;
    testing::conv3x3_reference(x, params[0]->w, params[1]->w, want, n, h, w,
                               cin, cout);
    CHECK(worst_rel(y, want) < 1e-12);
  }
}

TEST_CASE("conv2d: analytic gradients match central differences") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 6; ++trial) {
    const int n = 2;
    const int h = 4 + trial % 3;
    const int w = 3 + trial % 4;
    const int cin = 2 + trial % 3;
    const int cout = 3;
    const int ksize = trial % 2 == 0 ? 3 : 1;
    Conv2d<double> conv("g", ksize, cin, cout);
    Rng init(100 + trial);
    conv.init(init);

    auto x = random_vec(static_cast<std::size_t>(n) * h * w * cin, rng);
    std::vector<double> y(static_cast<std::size_t>(n) * h * w * cout, 0.0);
    const Probe probe(y.size(), rng);

    auto run = [&] {
      conv.forward(x.data(), y.data(), n, h, w);
      return probe.loss(y);
    };
    run();
    std::vector<double> dx(x.size(), 0.0);
    for (Param<double>* p : conv.params()) p->zero_grad();
    conv.backward(x.data(), probe.coeff.data(), dx.data(), n, h, w);

    // Parameter gradients.
    for (Param<double>* p : conv.params()) {
      for (std::size_t i = 0; i < p->w.size(); i += std::max<std::size_t>(1, p->w.size() / 17)) {
        const double save = p->w[i];
        const double fd = testing::central_difference(
            [&](double v) {
              p->w[i] = v;
              const double l = run();
              return l;
            },
            save, kFdStep);
        p->w[i] = save;
        const double scale = std::max({1.0, std::abs(fd), std::abs(p->g[i])});
        CHECK(std::abs(fd - p->g[i]) / scale < kFdTol);
      }
    }
    // Input gradients.
    for (std::size_t i = 0; i < x.size(); i += std::max<std::size_t>(1, x.size() / 23)) {
      const double save = x[i];
      const double fd = testing::central_difference(
          [&](double v) {
            x[i] = v;
            return run();
          },
          save, kFdStep);
      x[i] = save;
      const double scale = std::max({1.0, std::abs(fd), std::abs(dx[i])});
      CHECK(std::abs(fd - dx[i]) / scale < kFdTol);
    }
  }
}

TEST_CASE("batchnorm: constant channels return beta, unit data passes through") {
  BatchNorm<double> bn("b", 3);
  auto params = bn.params();
  params[1]->w = {0.25, -0.5, 3.0};  // beta
  std::vector<double> x(2 * 10 * 3);
  for (int i = 0; i < 2 * 10; ++i) {
    x[i * 3 + 0] = 7.0;
    x[i * 3 + 1] = -2.0;
    x[i * 3 + 2] = 0.0;
  }
  std::vector<double> y(x.size(), 0.0);
  bn.forward(x.data(), y.data(), 2, 10, Mode::Train, false);
  for (int i = 0; i < 2 * 10; ++i) {
    CHECK(y[i * 3 + 0] == doctest::Approx(0.25).epsilon(1e-6));
    CHECK(y[i * 3 + 1] == doctest::Approx(-0.5).epsilon(1e-6));
    CHECK(y[i * 3 + 2] == doctest::Approx(3.0).epsilon(1e-6));
  }

  // Zero-mean unit-variance input with default gamma/beta is preserved.
  BatchNorm<double> bn2("b2", 1);
  std::vector<double> x2 = {-1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0};
  std::vector<double> y2(x2.size(), 0.0);
  bn2.forward(x2.data(), y2.data(), 4, 2, Mode::Train, false);
  for (std::size_t i = 0; i < x2.size(); ++i) {
    // Variance is computed over the batch, so the scale is sqrt(n/(n-1))
    // away from exactly 1; allow that bias.
    CHECK(y2[i] == doctest::Approx(x2[i]).epsilon(0.01));
  }
}

TEST_CASE("batchnorm: train-mode batches of one are rejected") {
  BatchNorm<double> bn("b", 2);
  std::vector<double> x(2, 1.0);
  std::vector<double> y(2, 0.0);
  CHECK_THROWS_AS(bn.forward(x.data(), y.data(), 1, 1, Mode::Train, true),
                  NumericalError);
}

TEST_CASE("batchnorm: gradients match central differences") {
  std::mt19937_64 rng(9);
  const int n = 3;
  const int spatial = 7;
  const int c = 4;
  BatchNorm<double> bn("g", c);
  auto params = bn.params();
  params[0]->w = random_vec(c, rng, 0.5);
  for (double& g : params[0]->w) g += 1.0;
  params[1]->w = random_vec(c, rng, 0.5);

  auto x = random_vec(static_cast<std::size_t>(n) * spatial * c, rng);
  std::vector<double> y(x.size(), 0.0);
  const Probe probe(y.size(), rng);
  auto run = [&] {
    bn.forward(x.data(), y.data(), n, spatial, Mode::Train, false);
    return probe.loss(y);
  };
  run();
  std::vector<double> dx(x.size(), 0.0);
  for (Param<double>* p : bn.params()) p->zero_grad();
  bn.backward(probe.coeff.data(), dx.data(), n, spatial);

  for (Param<double>* p : bn.params()) {
    for (std::size_t i = 0; i < p->w.size(); ++i) {
      const double save = p->w[i];
      const double fd = testing::central_difference(
          [&](double v) {
            p->w[i] = v;
            return run();
          },
          save, kFdStep);
      p->w[i] = save;
      const double scale = std::max({1.0, std::abs(fd), std::abs(p->g[i])});
      CHECK(std::abs(fd - p->g[i]) / scale < kFdTol);
    }
  }
  for (std::size_t i = 0; i < x.size(); i += 3) {
    const double save = x[i];
    const double fd = testing::central_difference(
        [&](double v) {
          x[i] = v;
          return run();
        },
        save, kFdStep);
    x[i] = save;
    const double scale = std::max({1.0, std::abs(fd), std::abs(dx[i])});
    CHECK(std::abs(fd - dx[i]) / scale < kFdTol);
  }
}

TEST_CASE("batchnorm: eval uses running stats, is deterministic") {
  std::mt19937_64 rng(10);
  BatchNorm<float> bn("e", 3);
  std::vector<float> x(5 * 4 * 3);
  for (float& v : x) v = static_cast<float>(random_vec(1, rng)[0]);
  std::vector<float> y(x.size(), 0.0f);
  // A few training passes to move the running stats.
  for (int i = 0; i < 3; ++i) bn.forward(x.data(), y.data(), 5, 4, Mode::Train, true);
  std::vector<float> e1(x.size(), 0.0f), e2(x.size(), 0.0f);
  bn.forward(x.data(), e1.data(), 5, 4, Mode::Eval);
  bn.forward(x.data(), e2.data(), 5, 4, Mode::Eval);
  CHECK(e1 == e2);
  // A single-row batch is fine in eval mode.
  std::vector<float> one(3, 0.5f), out(3, 0.0f);
  bn.forward(one.data(), out.data(), 1, 1, Mode::Eval);
  CHECK(std::isfinite(out[0]));
}

TEST_CASE("leaky relu: values and derivative branches") {
  std::vector<double> x = {0.0, -1.0, 2.5, -0.3};
  std::vector<double> y(x.size(), 9.0);
  leaky_relu_forward(x.data(), y.data(), x.size());
  CHECK(y[0] == 0.0);
  CHECK(y[1] == doctest::Approx(-0.01));
  CHECK(y[2] == 2.5);
  CHECK(y[3] == doctest::Approx(-0.003));

  std::vector<double> dy = {1.0, 1.0, 1.0, 1.0};
  std::vector<double> dx(x.size(), 0.0);
  leaky_relu_backward(y.data(), dy.data(), dx.data(), x.size());
  CHECK(dx[0] == 1.0);  // zero output counts as the non-negative branch
  CHECK(dx[1] == doctest::Approx(kLeakySlope));
  CHECK(dx[2] == 1.0);
  CHECK(dx[3] == doctest::Approx(kLeakySlope));
}

TEST_CASE("linear and pooling: gradients match central differences") {
  std::mt19937_64 rng(11);
  Linear<double> lin("l", 10, 6);
  Rng init(3);
  lin.init(init);
  const int n = 4;
  auto x = random_vec(static_cast<std::size_t>(n) * 10, rng);
  std::vector<double> y(static_cast<std::size_t>(n) * 6, 0.0);
  const Probe probe(y.size(), rng);
  auto run = [&] {
    lin.forward(x.data(), y.data(), n);
    return probe.loss(y);
  };
  run();
  std::vector<double> dx(x.size(), 0.0);
  for (Param<double>* p : lin.params()) p->zero_grad();
  lin.backward(x.data(), probe.coeff.data(), dx.data(), n);
  for (Param<double>* p : lin.params()) {
    for (std::size_t i = 0; i < p->w.size(); i += 5) {
      const double save = p->w[i];
      const double fd = testing::central_difference(
          [&](double v) {
            p->w[i] = v;
            return run();
          },
          save, kFdStep);
      p->w[i] = save;
      CHECK(std::abs(fd - p->g[i]) / std::max(1.0, std::abs(fd)) < kFdTol);
    }
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double save = x[i];
    const double fd = testing::central_difference(
        [&](double v) {
          x[i] = v;
          return run();
        },
        save, kFdStep);
    x[i] = save;
    CHECK(std::abs(fd - dx[i]) / std::max(1.0, std::abs(fd)) < kFdTol);
  }

  // Global average pooling is linear: forward/backward close over sums.
  const int spatial = 5;
  const int c = 3;
  auto px = random_vec(static_cast<std::size_t>(n) * spatial * c, rng);
  std::vector<double> pooled(static_cast<std::size_t>(n) * c, 0.0);
  global_avg_pool_forward(px.data(), pooled.data(), n, spatial, c);
  for (int img = 0; img < n; ++img) {
    for (int ch = 0; ch < c; ++ch) {
      double mean = 0.0;
      for (int s = 0; s < spatial; ++s) mean += px[(img * spatial + s) * c + ch];
      mean /= spatial;
      CHECK(pooled[img * c + ch] == doctest::Approx(mean).epsilon(1e-12));
    }
  }
  std::vector<double> dpool = random_vec(pooled.size(), rng);
  std::vector<double> dpx(px.size(), 0.0);
  global_avg_pool_backward(dpool.data(), dpx.data(), n, spatial, c);
  for (int img = 0; img < n; ++img) {
    for (int s = 0; s < spatial; ++s) {
      for (int ch = 0; ch < c; ++ch) {
        CHECK(dpx[(img * spatial + s) * c + ch] ==
              doctest::Approx(dpool[img * c + ch] / spatial).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("softmax and losses: normalization, bounds, direct-summation oracle") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const int k = 2 + trial % 9;
    const auto logits = random_vec(k, rng, 3.0);
    std::vector<double> soft(k, 0.0);
    softmax_row(logits.data(), soft.data(), k);
    double sum = 0.0;
    for (double p : soft) {
      CHECK(p >= 0.0);
      sum += p;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));

    const std::int32_t label = static_cast<std::int32_t>(trial % k);
    const double ce =
        softmax_cross_entropy(logits.data(), &label, 1, k, static_cast<double*>(nullptr));
    CHECK(ce >= 0.0);
    CHECK(ce == doctest::Approx(testing::ce_direct(logits, label)).epsilon(1e-6));

    // KL of the softmax against itself is zero; against a random p it
    // matches the oracle and stays nonnegative.
    auto p = random_vec(k, rng);
    double mass = 0.0;
    for (double& v : p) {
      v = std::abs(v) + 1e-6;
      mass += v;
    }
    for (double& v : p) v /= mass;
    const double kl =
        kl_divergence(logits.data(), p.data(), 1, k, static_cast<double*>(nullptr));
    CHECK(kl >= -1e-12);
    CHECK(kl == doctest::Approx(testing::kl_direct(p, logits)).epsilon(1e-6));
    const double self =
        kl_divergence(logits.data(), soft.data(), 1, k, static_cast<double*>(nullptr));
    CHECK(std::abs(self) < 1e-9);
  }
}

TEST_CASE("losses: cross-entropy vanishes with a dominant true logit") {
  std::vector<double> logits = {0.0, 0.0, 0.0};
  const std::int32_t label = 1;
  double prev = softmax_cross_entropy(logits.data(), &label, 1, 3,
                                      static_cast<double*>(nullptr));
  for (double margin : {5.0, 15.0, 40.0}) {
    logits[1] = margin;
    const double ce = softmax_cross_entropy(logits.data(), &label, 1, 3,
                                            static_cast<double*>(nullptr));
    CHECK(ce < prev);
    prev = ce;
  }
  CHECK(prev < 1e-10);
}

TEST_CASE("losses: analytic logit gradients match central differences") {
  std::mt19937_64 rng(13);
  const int n = 3;
  const int k = 7;
  auto logits = random_vec(static_cast<std::size_t>(n) * k, rng, 2.0);
  std::vector<std::int32_t> labels = {2, 0, 6};

  std::vector<double> dl(logits.size(), 0.0);
  softmax_cross_entropy(logits.data(), labels.data(), n, k, dl.data(), 1.7);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double save = logits[i];
    const double fd = testing::central_difference(
        [&](double v) {
          logits[i] = v;
          return 1.7 * softmax_cross_entropy(logits.data(), labels.data(), n,
                                             k, static_cast<double*>(nullptr));
        },
        save, kFdStep);
    logits[i] = save;
    CHECK(std::abs(fd - dl[i]) / std::max(1.0, std::abs(fd)) < kFdTol);
  }

  auto p = random_vec(static_cast<std::size_t>(n) * k, rng);
  for (int row = 0; row < n; ++row) {
    double mass = 0.0;
    for (int j = 0; j < k; ++j) mass += (p[row * k + j] = std::abs(p[row * k + j]) + 1e-3);
    for (int j = 0; j < k; ++j) p[row * k + j] /= mass;
  }
  std::fill(dl.begin(), dl.end(), 0.0);
  kl_divergence(logits.data(), p.data(), n, k, dl.data(), 0.9);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double save = logits[i];
    const double fd = testing::central_difference(
        [&](double v) {
          logits[i] = v;
          return 0.9 * kl_divergence(logits.data(), p.data(), n, k,
                                     static_cast<double*>(nullptr));
        },
        save, kFdStep);
    logits[i] = save;
    CHECK(std::abs(fd - dl[i]) / std::max(1.0, std::abs(fd)) < kFdTol);
  }
}

TEST_CASE("adam: no-op on zero gradients, converges on a quadratic") {
  Param<double> w("w", 3, false);
  w.w = {1.0, -2.0, 0.5};
  AdamConfig cfg;
  cfg.l1 = 0.0;
  cfg.l2 = 0.0;
  Adam<double> opt({&w}, cfg);
  opt.step(0.1);
  CHECK(w.w == std::vector<double>{1.0, -2.0, 0.5});

  Param<double> q("q", 1, false);
  q.w = {3.0};
  Adam<double> opt2({&q}, cfg);
  for (int i = 0; i < 800; ++i) {
    q.g[0] = 2.0 * q.w[0];
    opt2.step(0.05);
  }
  CHECK(std::abs(q.w[0]) < 1e-3);
  CHECK(opt2.steps_taken() == 800);
}

TEST_CASE("adam: decay-flagged parameters feel the penalty gradient") {
  // One positive weight, zero loss gradient: the expected first step
  // direction is downhill on lambda1*|w| + lambda2*w^2.
  Param<double> w("w", 1, true);
  w.w = {0.8};
  AdamConfig cfg;  // defaults carry l1 = 0.005, l2 = 0.001
  Adam<double> opt({&w}, cfg);
  opt.step(0.01);
  CHECK(w.w[0] < 0.8);

  Param<double> frozen("b", 1, false);
  frozen.w = {0.8};
  Adam<double> opt2({&frozen}, cfg);
  opt2.step(0.01);
  CHECK(frozen.w[0] == 0.8);
}

TEST_CASE("add_l1_l2: the documented gradient form") {
  Param<double> p("p", 3, true);
  p.w = {2.0, -3.0, 0.0};
  p.g = {0.1, 0.1, 0.1};
  add_l1_l2(p, 0.005, 0.001);
  CHECK(p.g[0] == doctest::Approx(0.1 + 0.005 + 2.0 * 0.001 * 2.0).epsilon(1e-12));
  CHECK(p.g[1] == doctest::Approx(0.1 - 0.005 + 2.0 * 0.001 * -3.0).epsilon(1e-12));
  CHECK(p.g[2] == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("lr schedule: halves after each milestone") {
  LrSchedule sched;
  sched.base_lr = 5e-4;
  CHECK(sched.at(1) == doctest::Approx(5e-4));
  CHECK(sched.at(30) == doctest::Approx(5e-4));
  CHECK(sched.at(31) == doctest::Approx(2.5e-4));
  CHECK(sched.at(60) == doctest::Approx(2.5e-4));
  CHECK(sched.at(61) == doctest::Approx(1.25e-4));
  CHECK(sched.at(100) == doctest::Approx(6.25e-5));  // three milestones passed
  CHECK(sched.at(161) == doctest::Approx(3.125e-5));
}

TEST_CASE("checkpoint: byte-identical round-trip, corruption detected") {
  CheckpointData data;
  data.architecture = "probe-v1";
  std::mt19937_64 rng(14);
  for (int i = 0; i < 5; ++i) {
    std::vector<float> arr(17 * (i + 1));
    for (float& v : arr) v = static_cast<float>(random_vec(1, rng)[0]);
    data.arrays.emplace_back("arr" + std::to_string(i), std::move(arr));
  }

  const fs::path path = fs::temp_directory_path() / "tomsyn-ckpt-test.bin";
  save_checkpoint(path.string(), data);
  const CheckpointData back = load_checkpoint(path.string());
  CHECK(back.architecture == data.architecture);
  REQUIRE(back.arrays.size() == data.arrays.size());
  for (std::size_t i = 0; i < data.arrays.size(); ++i) {
    CHECK(back.arrays[i].first == data.arrays[i].first);
    CHECK(back.arrays[i].second == data.arrays[i].second);
  }

  const fs::path path2 = fs::temp_directory_path() / "tomsyn-ckpt-test2.bin";
  save_checkpoint(path2.string(), back);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), {});
  std::string b2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(b1 == b2);

  // Flip one payload byte: the checksum must catch it.
  b1[b1.size() / 2] = static_cast<char>(b1[b1.size() / 2] ^ 0x40);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(b1.data(), static_cast<std::streamsize>(b1.size()));
  out.close();
  CHECK_THROWS_AS(load_checkpoint(path.string()), IntegrityError);
  fs::remove(path);
  fs::remove(path2);
}

TEST_SUITE_END();
