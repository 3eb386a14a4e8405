#include "tactex/texfield.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "json.hpp"

namespace tactex {

using nlohmann::json;

ParamLayout make_layout(const FieldConfig& config) {
  const HashGridConfig& g = config.grid;
  if (g.levels < 1) throw std::runtime_error("hash grid needs at least one level");
  if (g.features_per_level < 1) throw std::runtime_error("features_per_level must be >= 1");
  if (g.base_resolution < 1 || g.max_resolution < g.base_resolution)
    throw std::runtime_error("bad hash grid resolutions");

  ParamLayout layout;
  layout.input_dim = g.levels * g.features_per_level;
  const int64_t table_size = int64_t(1) << g.table_size_log2;
  double growth = g.levels > 1
                      ? std::exp((std::log(double(g.max_resolution)) -
                                  std::log(double(g.base_resolution))) /
                                 double(g.levels - 1))
                      : 1.0;

  size_t offset = 0;
  for (int level = 0; level < g.levels; level++) {
    int res = int(std::lround(double(g.base_resolution) * std::pow(growth, level)));
    res = std::max(1, res);
    int64_t dense_entries = int64_t(res + 1) * (res + 1) * (res + 1);
    bool dense = dense_entries <= table_size;
    int64_t entries = dense ? dense_entries : table_size;
    layout.level_resolution.push_back(res);
    layout.level_dense.push_back(dense ? 1 : 0);
    layout.level_entries.push_back(entries);
    layout.level_offset.push_back(offset);
    offset += size_t(entries) * g.features_per_level;
  }

  const int hidden = config.hidden_width;
  layout.w1 = offset;
  offset += size_t(hidden) * layout.input_dim;
  layout.b1 = offset;
  offset += size_t(hidden);
  layout.w2 = offset;
  offset += size_t(hidden) * hidden;
  layout.b2 = offset;
  offset += size_t(hidden);
  layout.wa = offset;
  offset += size_t(3) * hidden;
  layout.ba = offset;
  offset += 3;
  layout.wt = offset;
  offset += size_t(3) * hidden;
  layout.bt = offset;
  offset += 3;
  layout.wl = offset;
  offset += size_t(config.n_labels) * hidden;
  layout.bl = offset;
  offset += size_t(config.n_labels);
  layout.total = offset;
  return layout;
}

TextureField TextureField::create(const FieldConfig& config, uint64_t seed) {
  TextureField field;
  field.config = config;
  field.layout = make_layout(config);
  field.params.assign(field.layout.total, 0.0f);
  field.adam.m.assign(field.layout.total, 0.0f);
  field.adam.v.assign(field.layout.total, 0.0f);
  field.adam.step = 0;

  std::mt19937_64 rng(seed);
  auto uniform = [&](float lo, float hi) {
    float u = float(rng() >> 40) * 0x1.0p-24f;
    return lo + (hi - lo) * u;
  };

  for (size_t i = 0; i < field.layout.w1; i++) field.params[i] = uniform(-1e-4f, 1e-4f);

  const int hidden = config.hidden_width;
  float s1 = std::sqrt(6.0f / float(field.layout.input_dim));
  for (size_t i = 0; i < size_t(hidden) * field.layout.input_dim; i++)
    field.params[field.layout.w1 + i] = uniform(-s1, s1);
  float s2 = std::sqrt(6.0f / float(hidden));
  for (size_t i = 0; i < size_t(hidden) * hidden; i++)
    field.params[field.layout.w2 + i] = uniform(-s2, s2);
  // biases and all head weights stay zero
  return field;
}

void adam_step(TextureField& field, const std::vector<float>& grad, const AdamParams& p) {
  if (grad.size() != field.params.size())
    throw std::runtime_error("adam_step: gradient size mismatch");
  AdamState& st = field.adam;
  st.step += 1;
  const double bc1 = 1.0 - std::pow(double(p.beta1), double(st.step));
  const double bc2 = 1.0 - std::pow(double(p.beta2), double(st.step));

  const size_t n = grad.size();
  float* m = st.m.data();
  float* v = st.v.data();
  float* theta = field.params.data();
  const float* g = grad.data();
  bool bad = false;
#pragma omp parallel for schedule(static) reduction(||: bad)
  for (long long i = 0; i < (long long)n; i++) {
    float gi = g[i];
    if (!std::isfinite(gi)) {
      bad = true;
      continue;
    }
    if (gi == 0.0f && m[i] == 0.0f && v[i] == 0.0f) continue;  // exact no-op
    m[i] = p.beta1 * m[i] + (1.0f - p.beta1) * gi;
    v[i] = p.beta2 * v[i] + (1.0f - p.beta2) * gi * gi;
    float mhat = float(m[i] / bc1);
    float vhat = float(v[i] / bc2);
    theta[i] -= p.lr * mhat / (std::sqrt(vhat) + p.eps);
  }
  if (bad) throw std::runtime_error("adam_step: non-finite gradient (diverged)");
}

void save_checkpoint(const std::string& path, const TextureField& field) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
  json j;
  j["magic"] = "tactex-field";
  j["version"] = 1;
  j["config"] = {{"levels", field.config.grid.levels},
                 {"features_per_level", field.config.grid.features_per_level},
                 {"table_size_log2", field.config.grid.table_size_log2},
                 {"base_resolution", field.config.grid.base_resolution},
                 {"max_resolution", field.config.grid.max_resolution},
                 {"hidden_width", field.config.hidden_width},
                 {"n_labels", field.config.n_labels}};
  j["step"] = field.adam.step;
  j["param_count"] = field.params.size();
  f << j.dump() << "\n";
  f.write(reinterpret_cast<const char*>(field.params.data()),
          std::streamsize(field.params.size() * sizeof(float)));
  if (!f) throw std::runtime_error("short write on checkpoint: " + path);
}

TextureField load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  std::string header;
  if (!std::getline(f, header)) throw std::runtime_error("missing checkpoint header: " + path);
  json j = json::parse(header);
  if (j.value("magic", "") != "tactex-field")
    throw std::runtime_error("not a texture field checkpoint: " + path);

  FieldConfig config;
  const json& c = j.at("config");
  config.grid.levels = c.at("levels");
  config.grid.features_per_level = c.at("features_per_level");
  config.grid.table_size_log2 = c.at("table_size_log2");
  config.grid.base_resolution = c.at("base_resolution");
  config.grid.max_resolution = c.at("max_resolution");
  config.hidden_width = c.at("hidden_width");
  config.n_labels = c.at("n_labels");

  TextureField field;
  field.config = config;
  field.layout = make_layout(config);
  field.params.resize(field.layout.total);
  field.adam.m.assign(field.layout.total, 0.0f);
  field.adam.v.assign(field.layout.total, 0.0f);
  field.adam.step = j.value("step", 0);

  size_t expect = j.at("param_count");
  if (expect != field.params.size())
    throw std::runtime_error("checkpoint parameter count does not match its config");
  f.read(reinterpret_cast<char*>(field.params.data()),
         std::streamsize(field.params.size() * sizeof(float)));
  if (size_t(f.gcount()) != field.params.size() * sizeof(float))
    throw std::runtime_error("truncated checkpoint blob: " + path);
  return field;
}

void field_forward(const TextureField& field, const Vec3f* points, size_t count,
                   FieldActivations<float>& acts) {
  field_forward<float>(field.config, field.layout, field.params.data(), points, count, acts);
}

void field_backward(const TextureField& field, const FieldActivations<float>& acts,
                    const float* d_albedo, const float* d_ntac, const float* d_logits,
                    std::vector<float>& grad) {
  if (grad.size() != field.params.size())
    throw std::runtime_error("field_backward: gradient buffer size mismatch");
  field_backward<float>(field.config, field.layout, field.params.data(), acts, d_albedo, d_ntac,
                        d_logits, grad.data());
}

}  // namespace tactex
