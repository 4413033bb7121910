#include <cmath>

#include "doctest.h"
#include "ldrift/align.hpp"
#include "ldrift/errors.hpp"
#include "support/oracles.hpp"

using namespace ldrift;
using numkit::Tensor;

namespace {

align::GaussianMoments random_moments(std::size_t d, numkit::Rng& rng) {
  align::GaussianMoments m;
  for (std::size_t j = 0; j < d; ++j) {
    m.mean.push_back(rng.uniform(-5, 5));
    m.stddev.push_back(rng.uniform(0, 5));
  }
  return m;
}

double align_gradient_error(const Tensor& z, const align::GaussianMoments& target, align::AlignParams params) {
  const auto analytic = align::align_loss_gradient(z, target, params);
  return testing::param_gradient_error(params.named_tensors(), analytic,
                                       [&] { return align::align_loss(z, target, params); }, 1e-6);
}

Tensor gaussian_cloud(std::size_t n, std::size_t d, double shift, double spread, numkit::Rng& rng) {
  Tensor z(n, d);
  for (auto& v : z.data()) v = shift + spread * rng.normal();
  return z;
}

}  // namespace

TEST_CASE("moments") {
  const auto m = align::moments(Tensor::from_rows({{0, 0}, {2, 2}}));
  CHECK(m.mean == std::vector<double>{1, 1});
  CHECK(m.stddev == std::vector<double>{1, 1});
  const auto same = align::moments(Tensor::from_rows({{3, -1}, {3, -1}, {3, -1}}));
  CHECK(same.stddev == std::vector<double>{0, 0});
  CHECK_THROWS_AS(align::moments(Tensor(1, 4)), DimensionError);
}

TEST_CASE("W_d examples and properties") {
  align::GaussianMoments a{{0, 0}, {1, 2}}, b{{3, 4}, {1, 2}};
  CHECK(align::wasserstein_distance(a, b) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(align::wasserstein_distance(a, a) == 0.0);
  CHECK_THROWS_AS(align::wasserstein_distance(a, align::GaussianMoments{{0}, {1}}), DimensionError);

  numkit::Rng rng(31);
  for (int trial = 0; trial < 100000; ++trial) {
    const std::size_t d = 1 + rng.below(8);
    const auto p = random_moments(d, rng), q = random_moments(d, rng);
    const double pq = align::wasserstein_distance(p, q);
    REQUIRE(pq >= 0.0);
    REQUIRE(std::abs(pq - align::wasserstein_distance(q, p)) <= 1e-12);
    REQUIRE(align::wasserstein_distance(p, p) == 0.0);
  }
}

TEST_CASE("on-tape W_d agrees with the closed form") {
  numkit::Rng rng(4);
  const Tensor z = testing::random_tensor(50, 3, rng);
  const auto target = random_moments(3, rng);
  numkit::Tape tape;
  const double taped = align::wasserstein_to(tape.constant(z), target).value()[0];
  CHECK(taped == doctest::Approx(align::wasserstein_distance(align::moments(z), target)).epsilon(1e-9));
}

TEST_CASE("W_d gradient through moments and the MLP") {
  numkit::Rng rng(55);
  for (int trial = 0; trial < 100; ++trial) {
    align::AlignConfig cfg;
    cfg.latent_dim = 1 + rng.below(4);
    cfg.hidden = {1 + rng.below(5), 1 + rng.below(5)};
    cfg.seed = 500 + trial;
    auto params = align::init_align(cfg);
    // Move away from the near-identity start so the MLP path carries weight.
    for (auto& [name, t] : params.named_tensors())
      for (auto& v : t->data()) v += rng.uniform(-0.5, 0.5);
    const Tensor z = testing::random_tensor(3 + rng.below(10), cfg.latent_dim, rng, -2, 2);
    CHECK(align_gradient_error(z, random_moments(cfg.latent_dim, rng), params) < 1e-4);
  }
}

TEST_CASE("fresh aligner is close to the identity") {
  align::AlignConfig cfg;
  numkit::Rng rng(6);
  const Tensor z = gaussian_cloud(500, 8, 0.0, 1.0, rng);
  const Tensor y = align::apply_align(z, align::init_align(cfg));
  CHECK(y.shape() == z.shape());
  CHECK(align::apply_align(z, align::init_align(cfg)) == y);
  double max_diff = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) max_diff = std::max(max_diff, std::abs(y[i] - z[i]));
  CHECK(max_diff < 0.2);
}

TEST_CASE("training") {
  numkit::Rng rng(12);
  const Tensor target_cloud = gaussian_cloud(2000, 8, 0.0, 1.0, rng);
  const auto target = align::moments(target_cloud);
  align::AlignConfig cfg;
  cfg.epochs = 60;

  SUBCASE("already aligned stays aligned") {
    const Tensor z = gaussian_cloud(2000, 8, 0.0, 1.0, rng);
    const double before = align::wasserstein_distance(target, align::moments(z));
    const auto r = align::train_align(z, target, cfg);
    const double after = align::wasserstein_distance(target, align::moments(align::apply_align(z, r.params)));
    CHECK(before < 0.2);
    CHECK(after < 0.2);
  }
  SUBCASE("translated and scaled cloud is pulled back") {
    const Tensor z = gaussian_cloud(2000, 8, 2.0, 1.5, rng);
    const double before = align::wasserstein_distance(target, align::moments(z));
    const auto r = align::train_align(z, target, cfg);
    const double after = align::wasserstein_distance(target, align::moments(align::apply_align(z, r.params)));
    CHECK(after < 0.1 * before);
    CHECK(r.history.size() == cfg.epochs);
    const auto again = align::train_align(z, target, cfg);
    CHECK(apply_align(z, again.params) == apply_align(z, r.params));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(align::train_align(Tensor(10, 5), target, cfg), DimensionError);
    CHECK_THROWS_AS(align::apply_align(Tensor(10, 5), align::init_align(cfg)), DimensionError);
    cfg.hidden = {8, 0};
    CHECK_THROWS_AS(align::init_align(cfg), ConfigError);
    CHECK_THROWS_AS(align::moment_scope_from_string("batchwise"), ConfigError);
    CHECK(align::moment_scope_from_string(align::to_string(align::MomentScope::kGlobal)) ==
          align::MomentScope::kGlobal);
  }
}
