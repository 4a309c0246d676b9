#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "npnf/field.hpp"
#include "npnf/rng.hpp"

using namespace npnf;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("positional encoding layout and values") {
  Vec3 v{0.5, -0.25, 1.0};
  auto enc = positional_encode(v, 2);
  REQUIRE(enc.size() == 3 + 6 * 2);
  CHECK(enc[0] == 0.5);
  CHECK(enc[1] == -0.25);
  CHECK(enc[2] == 1.0);
  // first band is sin/cos of 2^0 * pi * v
  CHECK(enc[3] == doctest::Approx(std::sin(kPi * 0.5)));
  CHECK(enc[4] == doctest::Approx(std::sin(kPi * -0.25)));
  CHECK(enc[5] == doctest::Approx(std::sin(kPi * 1.0)));
  CHECK(enc[6] == doctest::Approx(std::cos(kPi * 0.5)));
  CHECK(enc[8] == doctest::Approx(std::cos(kPi * 1.0)));
  // second band doubles the frequency
  CHECK(enc[9] == doctest::Approx(std::sin(2.0 * kPi * 0.5)));
  CHECK(enc[12] == doctest::Approx(std::cos(2.0 * kPi * 0.5)));
}

TEST_CASE("encoding of zero is zeros, sines zero, cosines one") {
  auto enc = positional_encode({0, 0, 0}, 3);
  for (int b = 0; b < 3; ++b) {
    for (int i = 0; i < 3; ++i) {
      CHECK(enc[3 + 6 * b + i] == 0.0);        // sin
      CHECK(enc[3 + 6 * b + 3 + i] == 1.0);    // cos
    }
  }
}

TEST_CASE("parameter count matches the initialized vector") {
  for (FieldConfig cfg : {FieldConfig{}, FieldConfig{2, 16, 4, 2},
                          FieldConfig{1, 8, 1, 1}}) {
    FieldParams theta = init_field(cfg, 9);
    CHECK(theta.values.size() == cfg.param_count());
  }
}

TEST_CASE("initialization is seeded and bounded, biases zero") {
  FieldConfig cfg{2, 16, 4, 2};
  FieldParams a = init_field(cfg, 1), b = init_field(cfg, 1),
              c = init_field(cfg, 2);
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
  double max_abs = 0;
  for (double v : a.values) max_abs = std::max(max_abs, std::fabs(v));
  CHECK(max_abs < 1.0);  // all fan sums here give bounds well below 1
  CHECK(max_abs > 0.0);
}

TEST_CASE("density is nonnegative and ignores the view direction") {
  FieldConfig cfg{2, 16, 4, 2};
  FieldParams theta = init_field(cfg, 21);
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    Vec3 x{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    Vec3 d1 = normalized3({rng.uniform(-1, 1), rng.uniform(-1, 1), 1.0});
    Vec3 d2 = normalized3({rng.uniform(-1, 1), rng.uniform(-1, 1), -1.0});
    FieldSample s1 = eval_field(theta, x, d1);
    FieldSample s2 = eval_field(theta, x, d2);
    CHECK(s1.sigma >= 0.0);
    CHECK(s1.sigma == s2.sigma);
    for (double ch : {s1.color.x, s1.color.y, s1.color.z}) {
      CHECK(ch > 0.0);
      CHECK(ch < 1.0);
    }
  }
}

TEST_CASE("color does respond to the view direction") {
  FieldConfig cfg{2, 16, 4, 2};
  FieldParams theta = init_field(cfg, 21);
  Vec3 x{0.3, -0.2, 0.5};
  FieldSample s1 = eval_field(theta, x, {0, 0, 1});
  FieldSample s2 = eval_field(theta, x, {1, 0, 0});
  CHECK(s1.color.x != s2.color.x);
}

TEST_CASE("tape evaluation reproduces the plain evaluation") {
  FieldConfig cfg{2, 12, 3, 1};
  FieldParams theta = init_field(cfg, 33);
  Rng rng(6);
  for (int i = 0; i < 10; ++i) {
    Vec3 x{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    Vec3 d = normalized3({rng.uniform(-1, 1), rng.uniform(-1, 1), 1.0});
    FieldSample plain = eval_field(theta, x, d);
    Tape tape;
    uint32_t base = tape.leaf_block(theta.values);
    Vec3T<Var> xv{tape.constant(x.x), tape.constant(x.y), tape.constant(x.z)};
    Vec3T<Var> dv{tape.constant(d.x), tape.constant(d.y), tape.constant(d.z)};
    FieldSampleVar s = eval_field_var(tape, cfg, base, xv, dv);
    CHECK(s.sigma.val() == doctest::Approx(plain.sigma).epsilon(1e-13));
    CHECK(s.color.x.val() == doctest::Approx(plain.color.x).epsilon(1e-13));
    CHECK(s.color.y.val() == doctest::Approx(plain.color.y).epsilon(1e-13));
    CHECK(s.color.z.val() == doctest::Approx(plain.color.z).epsilon(1e-13));
  }
}

TEST_CASE("field parameter gradients agree with finite differences") {
  FieldConfig cfg{1, 6, 1, 1};
  FieldParams theta = init_field(cfg, 44);
  Vec3 x{0.4, -0.3, 0.8};
  Vec3 d = normalized3({0.2, 0.1, 1.0});

  Tape tape;
  uint32_t base = tape.leaf_block(theta.values);
  Vec3T<Var> xv{tape.constant(x.x), tape.constant(x.y), tape.constant(x.z)};
  Vec3T<Var> dv{tape.constant(d.x), tape.constant(d.y), tape.constant(d.z)};
  FieldSampleVar s = eval_field_var(tape, cfg, base, xv, dv);
  Var f = s.sigma + s.color.x * 2.0 + s.color.y - s.color.z * 0.5;
  tape.backward(f);

  auto eval = [&](size_t i, double eps) {
    FieldParams th = theta;
    th.values[i] += eps;
    FieldSample p = eval_field(th, x, d);
    return p.sigma + 2.0 * p.color.x + p.color.y - 0.5 * p.color.z;
  };
  double h = 1e-6;
  Rng rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    size_t i = rng.uniform_int(theta.values.size());
    double fd = (eval(i, h) - eval(i, -h)) / (2 * h);
    double g = tape.grad(base + uint32_t(i));
    double rel =
        std::fabs(g - fd) / std::max({std::fabs(g), std::fabs(fd), 1e-6});
    CHECK(rel < 1e-6);
  }
}
