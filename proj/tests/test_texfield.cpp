#include <algorithm>
#include <fstream>
#include <limits>
#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "tactex/texfield.hpp"

using namespace tactex;
using namespace tactex::testing;

namespace {

std::vector<double> to_double(const std::vector<float>& v) {
  return std::vector<double>(v.begin(), v.end());
}

// Scalar objective used by the finite-difference oracle: dot the field
// outputs with fixed upstream weights.
struct Upstream {
  std::vector<double> d_albedo, d_ntac, d_logits;
};

double objective(const FieldConfig& config, const ParamLayout& layout,
                 const std::vector<double>& params, const std::vector<Vec3d>& points,
                 const Upstream& up) {
  FieldActivations<double> acts;
  field_forward<double>(config, layout, params.data(), points.data(), points.size(), acts);
  double acc = 0;
  for (size_t k = 0; k < points.size() * 3; k++) {
    acc += up.d_albedo[k] * acts.albedo[k];
    acc += up.d_ntac[k] * acts.n_tac[k];
  }
  for (size_t k = 0; k < points.size() * size_t(config.n_labels); k++)
    acc += up.d_logits[k] * acts.logits[k];
  return acc;
}

struct Group {
  const char* name;
  size_t begin, end;
};

std::vector<Group> param_groups(const FieldConfig& config, const ParamLayout& layout) {
  std::vector<Group> groups;
  for (int l = 0; l < config.grid.levels; l++) {
    size_t begin = layout.level_offset[l];
    size_t end = begin + size_t(layout.level_entries[l]) * config.grid.features_per_level;
    groups.push_back({"table", begin, end});
  }
  groups.push_back({"w1", layout.w1, layout.b1});
  groups.push_back({"b1", layout.b1, layout.w2});
  groups.push_back({"w2", layout.w2, layout.b2});
  groups.push_back({"b2", layout.b2, layout.wa});
  groups.push_back({"wa", layout.wa, layout.ba});
  groups.push_back({"ba", layout.ba, layout.wt});
  groups.push_back({"wt", layout.wt, layout.bt});
  groups.push_back({"bt", layout.bt, layout.wl});
  if (config.n_labels > 0) {
    groups.push_back({"wl", layout.wl, layout.bl});
    groups.push_back({"bl", layout.bl, layout.total});
  }
  return groups;
}

}  // namespace

TEST_SUITE_BEGIN("texfield");

TEST_CASE("zero-initialized heads output exactly albedo 0.5 and n_T (0,0,1)") {
  FieldConfig config = small_field_config();
  TextureField field = TextureField::create(config, 7);
  std::vector<Vec3f> points = {{0.1f, -0.4f, 0.7f}, {0, 0, 0}, {-0.9f, 0.9f, 0.2f}};
  FieldActivations<float> acts;
  field_forward(field, points.data(), points.size(), acts);
  for (size_t p = 0; p < points.size(); p++) {
    CHECK(acts.albedo[p * 3 + 0] == 0.5f);
    CHECK(acts.albedo[p * 3 + 1] == 0.5f);
    CHECK(acts.albedo[p * 3 + 2] == 0.5f);
    CHECK(acts.n_tac[p * 3 + 0] == 0.0f);
    CHECK(acts.n_tac[p * 3 + 1] == 0.0f);
    CHECK(acts.n_tac[p * 3 + 2] == 1.0f);
    CHECK(acts.clamped[p] == 0);
  }
}

TEST_CASE("out-of-box points are clamped and flagged") {
  TextureField field = TextureField::create(small_field_config(), 7);
  std::vector<Vec3f> points = {{1.5f, 0, 0}, {0, -2, 0}};
  FieldActivations<float> acts;
  field_forward(field, points.data(), points.size(), acts);
  CHECK(acts.clamped[0] == 1);
  CHECK(acts.clamped[1] == 1);
  CHECK(acts.unit_points[0] == 1.0f);
  CHECK(acts.unit_points[4] == 0.0f);
}

TEST_CASE("single-level grid: corner query returns the stored feature") {
  FieldConfig config;
  config.grid.levels = 1;
  config.grid.features_per_level = 2;
  config.grid.table_size_log2 = 10;
  config.grid.base_resolution = 2;
  config.grid.max_resolution = 2;
  config.hidden_width = 8;
  TextureField field = TextureField::create(config, 1);
  REQUIRE(field.layout.level_dense[0] == 1);  // 27 entries fit in 1024

  // grid corner (1, 2, 0) of the 2^3-cell grid: unit coords (0.5, 1.0, 0.0)
  int64_t idx = 1 + 3 * (2 + 3 * 0);
  field.params[size_t(idx) * 2] = 0.25f;
  field.params[size_t(idx) * 2 + 1] = -0.75f;

  std::vector<Vec3f> points = {{0.0f, 1.0f, -1.0f}};  // maps to (0.5, 1, 0)
  FieldActivations<float> acts;
  field_forward(field, points.data(), 1, acts);
  CHECK(acts.encoding[0] == 0.25f);
  CHECK(acts.encoding[1] == -0.75f);
}

TEST_CASE("encoding matches a dense trilinear oracle at random points") {
  FieldConfig config;
  config.grid.levels = 1;
  config.grid.features_per_level = 1;
  config.grid.table_size_log2 = 12;
  config.grid.base_resolution = 5;
  config.grid.max_resolution = 5;
  config.hidden_width = 8;
  TextureField field = TextureField::create(config, 3);
  REQUIRE(field.layout.level_dense[0] == 1);

  std::mt19937_64 rng(5);
  for (size_t i = 0; i < size_t(field.layout.level_entries[0]); i++)
    field.params[i] = runif(rng, -1, 1);

  auto table = [&](int x, int y, int z) { return field.params[x + 6 * (y + 6 * z)]; };
  for (int trial = 0; trial < 200; trial++) {
    Vec3f p{runif(rng, -1, 1), runif(rng, -1, 1), runif(rng, -1, 1)};
    FieldActivations<float> acts;
    field_forward(field, &p, 1, acts);

    // independent trilinear interpolation
    double u[3];
    for (int k = 0; k < 3; k++) u[k] = (double(p[k]) + 1) * 0.5 * 5;
    int c[3];
    double f[3];
    for (int k = 0; k < 3; k++) {
      c[k] = std::min(int(u[k]), 4);
      f[k] = u[k] - c[k];
    }
    double expect = 0;
    for (int corner = 0; corner < 8; corner++) {
      int dx = corner & 1, dy = (corner >> 1) & 1, dz = (corner >> 2) & 1;
      double w = (dx ? f[0] : 1 - f[0]) * (dy ? f[1] : 1 - f[1]) * (dz ? f[2] : 1 - f[2]);
      expect += w * table(c[0] + dx, c[1] + dy, c[2] + dz);
    }
    CHECK(acts.encoding[0] == doctest::Approx(expect).epsilon(1e-5));
  }

  // cell center average check
  Vec3f center{-1 + 2 * (0.5f / 5 + 0.0f), -1 + 2 * (0.5f / 5), -1 + 2 * (0.5f / 5)};
  FieldActivations<float> acts;
  field_forward(field, &center, 1, acts);
  double mean = 0;
  for (int corner = 0; corner < 8; corner++)
    mean += table(corner & 1, (corner >> 1) & 1, (corner >> 2) & 1) / 8.0;
  CHECK(acts.encoding[0] == doctest::Approx(mean).epsilon(1e-5));
}

TEST_CASE("gradients match central finite differences in double precision") {
  FieldConfig config = small_field_config(/*n_labels=*/3);
  TextureField field = randomized_field(config, 11);
  const ParamLayout& layout = field.layout;

  std::mt19937_64 rng(23);
  std::vector<Vec3d> points;
  for (int i = 0; i < 10; i++)
    points.push_back({runif(rng, -0.95f, 0.95f), runif(rng, -0.95f, 0.95f),
                      runif(rng, -0.95f, 0.95f)});

  Upstream up;
  for (size_t i = 0; i < points.size() * 3; i++) {
    up.d_albedo.push_back(runif(rng, -1, 1));
    up.d_ntac.push_back(runif(rng, -1, 1));
  }
  for (size_t i = 0; i < points.size() * 3; i++) up.d_logits.push_back(runif(rng, -1, 1));

  std::vector<double> params = to_double(field.params);
  FieldActivations<double> acts;
  field_forward<double>(config, layout, params.data(), points.data(), points.size(), acts);
  std::vector<double> grad(layout.total, 0.0);
  field_backward<double>(config, layout, params.data(), acts, up.d_albedo.data(),
                         up.d_ntac.data(), up.d_logits.data(), grad.data());

  // FD over sampled parameters from every group, plus every touched table
  // entry of the first level.
  const double h = 1e-4;
  double max_rel = 0;
  int n_checked = 0;
  auto check_param = [&](size_t idx) {
    std::vector<double> p_plus = params, p_minus = params;
    p_plus[idx] += h;
    p_minus[idx] -= h;
    double fd = (objective(config, layout, p_plus, points, up) -
                 objective(config, layout, p_minus, points, up)) /
                (2 * h);
    double rel = std::fabs(grad[idx] - fd) / std::max({std::fabs(fd), std::fabs(grad[idx]), 1e-6});
    max_rel = std::max(max_rel, rel);
    n_checked++;
  };

  std::mt19937_64 pick(99);
  for (const Group& g : param_groups(config, layout)) {
    size_t span = g.end - g.begin;
    REQUIRE(span > 0);
    for (int s = 0; s < 20; s++) check_param(g.begin + pick() % span);
  }
  // touched entries have nonzero gradients; make sure they are covered
  int touched = 0;
  for (size_t i = layout.level_offset[0];
       i < layout.level_offset[0] + size_t(layout.level_entries[0]) * 2 && touched < 30; i++)
    if (grad[i] != 0) {
      check_param(i);
      touched++;
    }
  REQUIRE(touched > 5);
  CHECK(n_checked > 200);
  CHECK(max_rel < 1e-4);
}

TEST_CASE("backward: zero upstream gives zero gradients; batch equals sum of points") {
  FieldConfig config = small_field_config();
  TextureField field = randomized_field(config, 3);
  std::vector<Vec3f> points = {{0.2f, 0.3f, -0.1f}, {-0.5f, 0.8f, 0.4f}, {0.9f, -0.9f, 0.0f}};

  FieldActivations<float> acts;
  field_forward(field, points.data(), points.size(), acts);
  std::vector<float> zeros(points.size() * 3, 0.0f);
  std::vector<float> grad(field.params.size(), 0.0f);
  field_backward(field, acts, zeros.data(), zeros.data(), nullptr, grad);
  for (float g : grad) CHECK(g == 0.0f);

  // linearity: batch gradient equals the sum of single-point gradients
  std::mt19937_64 rng(8);
  std::vector<float> da(points.size() * 3), dn(points.size() * 3);
  for (auto& v : da) v = runif(rng, -1, 1);
  for (auto& v : dn) v = runif(rng, -1, 1);

  std::vector<float> batch_grad(field.params.size(), 0.0f);
  field_backward(field, acts, da.data(), dn.data(), nullptr, batch_grad);

  std::vector<float> sum_grad(field.params.size(), 0.0f);
  for (size_t p = 0; p < points.size(); p++) {
    FieldActivations<float> one;
    field_forward(field, &points[p], 1, one);
    field_backward(field, one, da.data() + p * 3, dn.data() + p * 3, nullptr, sum_grad);
  }
  for (size_t i = 0; i < batch_grad.size(); i++)
    CHECK(batch_grad[i] == doctest::Approx(sum_grad[i]).epsilon(1e-5).scale(1.0));
}

TEST_CASE("backward rejects mismatched activations") {
  FieldConfig config = small_field_config();
  TextureField field = TextureField::create(config, 1);
  FieldConfig other = small_field_config(2);
  TextureField field2 = TextureField::create(other, 1);

  Vec3f p{0, 0, 0};
  FieldActivations<float> acts;
  field_forward(field, &p, 1, acts);
  std::vector<float> grad(field2.params.size(), 0.0f);
  std::vector<float> zeros(3, 0.0f);
  CHECK_THROWS(field_backward(field2, acts, zeros.data(), zeros.data(), nullptr, grad));
}

TEST_CASE("hemisphere mapping: unit output with positive z for random heads") {
  FieldConfig config = small_field_config();
  TextureField field = randomized_field(config, 17);
  std::mt19937_64 rng(4);
  std::vector<Vec3f> points(500);
  for (auto& p : points) p = {runif(rng, -1, 1), runif(rng, -1, 1), runif(rng, -1, 1)};
  FieldActivations<float> acts;
  field_forward(field, points.data(), points.size(), acts);
  const float z_floor = detail::kNormalEps / std::sqrt(3.0f);
  for (size_t p = 0; p < points.size(); p++) {
    Vec3f n{acts.n_tac[p * 3], acts.n_tac[p * 3 + 1], acts.n_tac[p * 3 + 2]};
    CHECK(length(n) == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(n.z >= z_floor);
    Vec3f a{acts.albedo[p * 3], acts.albedo[p * 3 + 1], acts.albedo[p * 3 + 2]};
    CHECK(a.x > 0.0f);
    CHECK(a.x < 1.0f);
  }
}

TEST_CASE("forward is deterministic") {
  FieldConfig config = small_field_config(2);
  TextureField field = randomized_field(config, 29);
  std::mt19937_64 rng(6);
  std::vector<Vec3f> points(64);
  for (auto& p : points) p = {runif(rng, -1, 1), runif(rng, -1, 1), runif(rng, -1, 1)};
  FieldActivations<float> a, b;
  field_forward(field, points.data(), points.size(), a);
  field_forward(field, points.data(), points.size(), b);
  CHECK(a.albedo == b.albedo);
  CHECK(a.n_tac == b.n_tac);
  CHECK(a.logits == b.logits);
}

TEST_CASE("encoding locality: a table entry only affects its cell neighborhood") {
  FieldConfig config;
  config.grid.levels = 1;
  config.grid.features_per_level = 1;
  config.grid.table_size_log2 = 12;  // dense, collision free
  config.grid.base_resolution = 4;
  config.grid.max_resolution = 4;
  config.hidden_width = 8;
  TextureField field = randomized_field(config, 21);
  REQUIRE(field.layout.level_dense[0] == 1);

  std::mt19937_64 rng(13);
  std::vector<Vec3f> points(400);
  for (auto& p : points) p = {runif(rng, -1, 1), runif(rng, -1, 1), runif(rng, -1, 1)};
  FieldActivations<float> before;
  field_forward(field, points.data(), points.size(), before);

  const int gx = 2, gy = 1, gz = 3;  // perturbed grid corner
  field.params[gx + 5 * (gy + 5 * gz)] += 0.5f;
  FieldActivations<float> after;
  field_forward(field, points.data(), points.size(), after);

  for (size_t p = 0; p < points.size(); p++) {
    // corner (gx,gy,gz) participates iff the point's cell touches it
    float u[3];
    for (int k = 0; k < 3; k++) u[k] = (points[p][k] + 1) * 0.5f * 4;
    int cx = std::min(int(u[0]), 3), cy = std::min(int(u[1]), 3), cz = std::min(int(u[2]), 3);
    bool touches = (gx == cx || gx == cx + 1) && (gy == cy || gy == cy + 1) &&
                   (gz == cz || gz == cz + 1);
    bool changed = before.encoding[p] != after.encoding[p];
    if (!touches) CHECK(!changed);
  }
}

TEST_CASE("adam: first step moves by lr in the gradient sign direction") {
  FieldConfig config = small_field_config();
  TextureField field = TextureField::create(config, 2);
  std::vector<float> before = field.params;
  std::vector<float> grad(field.params.size(), 0.0f);
  std::mt19937_64 rng(9);
  for (auto& g : grad) g = (rng() % 2 ? 1.0f : -1.0f) * runif(rng, 0.5f, 2.0f);

  AdamParams params;
  params.lr = 0.01f;
  adam_step(field, grad, params);
  for (size_t i = 0; i < field.params.size(); i++) {
    float delta = field.params[i] - before[i];
    float expect = -params.lr * (grad[i] > 0 ? 1.0f : -1.0f);
    CHECK(delta == doctest::Approx(expect).epsilon(1e-6));
  }
  CHECK(field.adam.step == 1);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  FieldConfig config = small_field_config();
  TextureField field = randomized_field(config, 5);
  std::vector<float> before = field.params;
  std::vector<float> zeros(field.params.size(), 0.0f);
  adam_step(field, zeros, AdamParams{});
  CHECK(field.params == before);

  // non-finite gradients abort
  std::vector<float> bad(field.params.size(), 0.0f);
  bad[3] = std::numeric_limits<float>::infinity();
  CHECK_THROWS(adam_step(field, bad, AdamParams{}));
}

TEST_CASE("adam: 200 steps on a quadratic bowl shrink the norm 100x") {
  FieldConfig config = small_field_config();
  TextureField field = TextureField::create(config, 2);
  std::mt19937_64 rng(77);
  for (auto& p : field.params) p = runif(rng, 0.3f, 1.0f) * (rng() % 2 ? 1.0f : -1.0f);

  auto norm = [&] {
    double acc = 0;
    for (float v : field.params) acc += double(v) * v;
    return std::sqrt(acc);
  };
  double initial = norm();
  std::vector<float> grad(field.params.size());
  AdamParams params;
  params.lr = 0.01f;
  for (int step = 0; step < 200; step++) {
    for (size_t i = 0; i < grad.size(); i++) grad[i] = 2.0f * field.params[i];
    adam_step(field, grad, params);
  }
  CHECK(norm() < initial / 100.0);
}

TEST_CASE("checkpoint round trip is bit-exact") {
  FieldConfig config = small_field_config(2);
  TextureField field = randomized_field(config, 41);
  field.adam.step = 37;
  std::string path = tmp_dir() + "/field.tfc";
  save_checkpoint(path, field);
  TextureField back = load_checkpoint(path);
  CHECK(back.params == field.params);
  CHECK(back.adam.step == 37);
  CHECK(back.config.n_labels == 2);
  CHECK(back.config.grid.levels == config.grid.levels);

  std::ofstream junk(path, std::ios::trunc);
  junk << "{\"magic\":\"nope\"}\n";
  junk.close();
  CHECK_THROWS(load_checkpoint(path));
}

TEST_SUITE_END();
