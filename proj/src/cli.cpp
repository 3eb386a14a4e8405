#include "tactex/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "tactex/bake.hpp"
#include "tactex/fit.hpp"
#include "tactex/guidance.hpp"
#include "tactex/quilt.hpp"
#include "tactex/tactile.hpp"

namespace tactex {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Flag > config file > built-in default. Options register a config key and
// pick up the config value only when the flag was not passed.
struct ConfigBinder {
  json cfg;
  std::vector<std::pair<CLI::Option*, std::function<void()>>> bindings;

  void load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config: " + path);
    cfg = json::parse(f);
  }

  template <typename T>
  void bind(CLI::Option* opt, const std::string& key, T* value) {
    bindings.emplace_back(opt, [this, key, value] {
      if (cfg.contains(key)) *value = cfg.at(key).get<T>();
    });
  }

  void apply() {
    for (auto& [opt, setter] : bindings)
      if (opt == nullptr || opt->count() == 0) setter();
  }
};

// -1 keeps going; anything else is the exit code (help prints and exits 0,
// parse errors exit 2).
int parse_cli(CLI::App& app, std::vector<std::string>& args) {
  try {
    app.parse(args);
    return -1;
  } catch (const CLI::CallForHelp& e) {
    app.exit(e);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
}

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void write_manifest(const std::string& primary_output, const std::string& command,
                    const json& inputs, const json& outputs, const json& config,
                    uint64_t seed) {
  fs::path dir = fs::path(primary_output).parent_path();
  if (dir.empty()) dir = ".";
  json m;
  m["command"] = command;
  m["inputs"] = inputs;
  m["outputs"] = outputs;
  m["config"] = config;
  m["seed"] = seed;
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                (unsigned long long)fnv1a(config.dump() + std::to_string(seed)));
  m["config_hash"] = hash;
  std::ofstream f((dir / "manifest.json").string(), std::ios::trunc);
  f << m.dump(2) << "\n";
}

ImageF load_color_png(const std::string& path) {
  PngImage png = read_png(path);
  if (png.channels != 3) throw std::runtime_error("expected a 3-channel image: " + path);
  float vmax = png.bit_depth == 16 ? 65535.0f : 255.0f;
  ImageF img(png.width, png.height, 3);
  for (int y = 0; y < png.height; y++)
    for (int x = 0; x < png.width; x++)
      img.set_pixel3(x, y,
                     {png.at(x, y, 0) / vmax, png.at(x, y, 1) / vmax, png.at(x, y, 2) / vmax});
  return img;
}

ImageF load_normal_png(const std::string& path, float pitch_mm = kDefaultPitchMm) {
  NormalMap n = decode_normal_image(read_png(path), pitch_mm);
  return normal_map_to_image(n);
}

int run_ingest(std::vector<std::string>& args) {
  CLI::App app{"tactile normal image -> high-pass height + normal patch"};
  std::string in_path, mask_path, config_path, out_height, out_normal;
  IngestParams params;
  app.add_option("--in", in_path, "input normal PNG")->required();
  app.add_option("--mask", mask_path, "optional validity mask PNG");
  app.add_option("--pitch-mm", params.pitch_mm, "mm per pixel");
  app.add_option("--hp-sigma-mm", params.hp_sigma_mm, "high-pass sigma in mm");
  app.add_option("--out-height", out_height, "output height tensor (.f32t)")->required();
  app.add_option("--out-normal", out_normal, "output 16-bit normal PNG")->required();
  app.add_option("--config", config_path, "JSON config");

  ConfigBinder binder;
  binder.bind(app.get_option("--pitch-mm"), "pitch_mm", &params.pitch_mm);
  binder.bind(app.get_option("--hp-sigma-mm"), "hp_sigma_mm", &params.hp_sigma_mm);
  if (int rc = parse_cli(app, args); rc >= 0) return rc;
  if (!config_path.empty()) binder.load(config_path);
  binder.apply();

  PngImage png = read_png(in_path);
  std::optional<Mask> mask;
  if (!mask_path.empty()) mask = read_mask_png(mask_path);
  IngestResult result = ingest_normal_image(png, mask ? &*mask : nullptr, params);

  write_tensor(out_height, height_to_tensor(result.height));
  write_normal_png16(out_normal, normal_map_to_image(result.normals));
  std::printf("ingest: %dx%d patch (pitch %.4f mm)\n", result.height.width, result.height.height,
              result.height.pitch_mm);
  write_manifest(out_height, "ingest", {{"in", in_path}, {"mask", mask_path}},
                 {{"height", out_height}, {"normal", out_normal}},
                 {{"pitch_mm", params.pitch_mm}, {"hp_sigma_mm", params.hp_sigma_mm}}, 0);
  return 0;
}

int run_quilt(std::vector<std::string>& args) {
  CLI::App app{"expand height patches into a seamless texture"};
  std::vector<std::string> inputs;
  std::string config_path, out_height, out_normal;
  QuiltParams params;
  float pitch_mm = kDefaultPitchMm;
  int size = 1024;
  app.add_option("--in", inputs, "input height tensors (.f32t)")->required();
  app.add_option("--block", params.block_px, "block size in px");
  app.add_option("--overlap", params.overlap_px, "overlap in px");
  app.add_option("--tol", params.tolerance, "candidate SSD tolerance");
  app.add_option("--size", size, "square output size");
  app.add_option("--width", params.out_width, "output width (overrides --size)");
  app.add_option("--height", params.out_height, "output height (overrides --size)");
  app.add_option("--seed", params.seed, "RNG seed");
  app.add_option("--pitch-mm", pitch_mm, "mm per pixel of the inputs");
  app.add_option("--out-height", out_height, "output height tensor")->required();
  app.add_option("--out-normal", out_normal, "output 16-bit normal PNG")->required();
  app.add_option("--config", config_path, "JSON config");

  ConfigBinder binder;
  binder.bind(app.get_option("--block"), "block_px", &params.block_px);
  binder.bind(app.get_option("--overlap"), "overlap_px", &params.overlap_px);
  binder.bind(app.get_option("--tol"), "tolerance", &params.tolerance);
  binder.bind(app.get_option("--seed"), "seed", &params.seed);
  if (int rc = parse_cli(app, args); rc >= 0) return rc;
  if (!config_path.empty()) binder.load(config_path);
  binder.apply();

  if (app.get_option("--width")->count() == 0) params.out_width = size;
  if (app.get_option("--height")->count() == 0) params.out_height = size;

  std::vector<HeightMap> exemplars;
  for (const std::string& path : inputs)
    exemplars.push_back(height_from_tensor(read_tensor(path), pitch_mm));

  HeightMap quilted = quilt_height(exemplars, params);
  write_tensor(out_height, height_to_tensor(quilted));
  write_normal_png16(out_normal, normal_map_to_image(height_to_normals(quilted)));
  std::printf("quilt: %dx%d from %zu exemplar(s), seed %llu\n", quilted.width, quilted.height,
              exemplars.size(), (unsigned long long)params.seed);
  write_manifest(out_height, "quilt", {{"in", inputs}},
                 {{"height", out_height}, {"normal", out_normal}},
                 {{"block_px", params.block_px},
                  {"overlap_px", params.overlap_px},
                  {"tolerance", params.tolerance},
                  {"out_width", params.out_width},
                  {"out_height", params.out_height}},
                 params.seed);
  return 0;
}

std::vector<LabeledView> load_labeled_views(const std::string& dir) {
  std::ifstream f(dir + "/views.json");
  if (!f) throw std::runtime_error("labels dir needs views.json: " + dir);
  json views = json::parse(f);
  std::vector<LabeledView> out;
  for (const json& v : views) {
    VisualCameraParams params;
    params.resolution = v.value("resolution", 256);
    params.radius = v.value("radius", params.radius);
    params.fov_deg = v.value("fov_deg", params.fov_deg);
    LabeledView lv;
    lv.camera = make_orbit_camera(v.at("azimuth"), v.at("elevation"), params);
    lv.labels = load_label_png(dir + "/" + v.at("label").get<std::string>());
    out.push_back(std::move(lv));
  }
  return out;
}

int run_fit(std::vector<std::string>& args) {
  CLI::App app{"fit the texture field on a mesh"};
  std::string mesh_path, albedo_path, tactile_path, tactile2_path, labels_dir;
  std::string provider_spec = "identity", config_path, out_path, history_path;
  TrainConfig config;
  int visual_res = 512, tactile_res = 256;
  app.add_option("--mesh", mesh_path, "OBJ or PLY mesh")->required();
  app.add_option("--albedo", albedo_path, "albedo UV map PNG")->required();
  app.add_option("--tactile", tactile_path, "tactile normal UV map PNG")->required();
  app.add_option("--tactile2", tactile2_path, "second part's tactile map PNG");
  app.add_option("--labels", labels_dir, "directory with views.json + label PNGs");
  app.add_option("--provider", provider_spec, "identity | file:<dir> | blur");
  app.add_option("--config", config_path, "JSON config");
  app.add_option("--out", out_path, "output checkpoint")->required();
  app.add_option("--history", history_path, "loss history CSV");
  app.add_option("--seed", config.seed, "RNG seed");

  ConfigBinder binder;
  binder.bind(app.get_option("--seed"), "seed", &config.seed);
  binder.bind(nullptr, "phase1_iters", &config.phase1_iters);
  binder.bind(nullptr, "phase2_iters", &config.phase2_iters);
  binder.bind(nullptr, "lr", &config.adam.lr);
  binder.bind(nullptr, "lambda_vm", &config.lambda_vm);
  binder.bind(nullptr, "lambda_tm_phase1", &config.lambda_tm_phase1);
  binder.bind(nullptr, "lambda_tm_phase2", &config.lambda_tm_phase2);
  binder.bind(nullptr, "lambda_vg", &config.lambda_vg);
  binder.bind(nullptr, "lambda_tg", &config.lambda_tg);
  binder.bind(nullptr, "lambda_label", &config.lambda_label);
  binder.bind(nullptr, "views_per_iter", &config.views_per_iter);
  binder.bind(nullptr, "visual_resolution", &visual_res);
  binder.bind(nullptr, "tactile_resolution", &tactile_res);
  binder.bind(nullptr, "orbit_radius", &config.visual.radius);
  binder.bind(nullptr, "fov_deg", &config.visual.fov_deg);
  binder.bind(nullptr, "tactile_distance", &config.tactile.distance);
  binder.bind(nullptr, "texel_scale", &config.tactile.texel_scale);
  binder.bind(nullptr, "levels", &config.field.grid.levels);
  binder.bind(nullptr, "features_per_level", &config.field.grid.features_per_level);
  binder.bind(nullptr, "table_size_log2", &config.field.grid.table_size_log2);
  binder.bind(nullptr, "base_resolution", &config.field.grid.base_resolution);
  binder.bind(nullptr, "max_resolution", &config.field.grid.max_resolution);
  if (int rc = parse_cli(app, args); rc >= 0) return rc;
  if (!config_path.empty()) binder.load(config_path);
  binder.apply();
  config.visual.resolution = visual_res;
  config.tactile.resolution = tactile_res;
  config.schedule.phase2_iters = config.phase2_iters;
  if (binder.cfg.contains("prompt")) config.prompt = binder.cfg["prompt"];
  if (binder.cfg.contains("hidden_width")) config.field.hidden_width = binder.cfg["hidden_width"];

  Mesh mesh = load_mesh(mesh_path);
  FitInputs inputs;
  inputs.mesh = &mesh;
  inputs.albedo_uv = load_color_png(albedo_path);
  inputs.tactile_uv.push_back(load_normal_png(tactile_path));
  if (!tactile2_path.empty()) inputs.tactile_uv.push_back(load_normal_png(tactile2_path));
  if (inputs.tactile_uv.size() > 1) config.field.n_labels = int(inputs.tactile_uv.size());
  if (!labels_dir.empty()) {
    inputs.labeled_views = load_labeled_views(labels_dir);
    if (config.field.n_labels == 0) config.field.n_labels = 1;
  }
  std::unique_ptr<GuidanceProvider> provider = make_provider(provider_spec);
  inputs.provider = provider.get();

  FitResult result = fit(inputs, config);
  save_checkpoint(out_path, result.field);
  if (!history_path.empty()) write_history_csv(history_path, result.history);
  std::printf("fit: %d iterations, final total loss %.6g -> %s\n",
              int(result.history.size()),
              result.history.empty() ? 0.0 : result.history.back().total, out_path.c_str());
  write_manifest(out_path, "fit",
                 {{"mesh", mesh_path},
                  {"albedo", albedo_path},
                  {"tactile", tactile_path},
                  {"tactile2", tactile2_path},
                  {"labels", labels_dir},
                  {"provider", provider_spec}},
                 {{"checkpoint", out_path}, {"history", history_path}},
                 {{"phase1_iters", config.phase1_iters},
                  {"phase2_iters", config.phase2_iters},
                  {"lr", config.adam.lr},
                  {"lambda_vm", config.lambda_vm},
                  {"lambda_tm_phase1", config.lambda_tm_phase1},
                  {"lambda_tm_phase2", config.lambda_tm_phase2},
                  {"lambda_vg", config.lambda_vg},
                  {"lambda_tg", config.lambda_tg}},
                 config.seed);
  return 0;
}

int run_assign_labels(std::vector<std::string>& args) {
  CLI::App app{"merge attention maps into a part label map"};
  std::string self_path, cross_path, out_path, map_path;
  app.add_option("--self", self_path, "clustered self-attention tensor [K,H,W]")->required();
  app.add_option("--cross", cross_path, "per-part cross-attention tensor [N,H,W]")->required();
  app.add_option("--out", out_path, "output indexed label PNG")->required();
  app.add_option("--map", map_path, "optional cluster->part mapping JSON");
  if (int rc = parse_cli(app, args); rc >= 0) return rc;

  AttentionMaps maps = attention_from_tensors(read_tensor(self_path), read_tensor(cross_path));
  KlAssignment assignment = kl_assign(maps);
  save_label_png(out_path, assignment.labels);
  if (!map_path.empty()) {
    json j;
    j["cluster_to_part"] = assignment.cluster_to_part;
    j["kl_divergence"] = assignment.divergence;
    std::ofstream f(map_path, std::ios::trunc);
    f << j.dump(2) << "\n";
  }
  std::printf("assign-labels: %d clusters -> %d parts\n", maps.num_clusters, maps.num_parts);
  write_manifest(out_path, "assign-labels", {{"self", self_path}, {"cross", cross_path}},
                 {{"labels", out_path}, {"map", map_path}}, json::object(), 0);
  return 0;
}

int run_bake(std::vector<std::string>& args) {
  CLI::App app{"bake a trained field to UV maps"};
  std::string ckpt_path, mesh_path, out_prefix;
  int resolution = 1024;
  app.add_option("--ckpt", ckpt_path, "field checkpoint")->required();
  app.add_option("--mesh", mesh_path, "OBJ or PLY mesh")->required();
  app.add_option("--resolution", resolution, "UV map resolution");
  app.add_option("--out-prefix", out_prefix, "output path prefix")->required();
  if (int rc = parse_cli(app, args); rc >= 0) return rc;

  TextureField field = load_checkpoint(ckpt_path);
  Mesh mesh = load_mesh(mesh_path);
  BakeResult result = bake(field, mesh, resolution);

  std::string albedo_path = out_prefix + "_albedo.png";
  std::string normal_path = out_prefix + "_normal.png";
  std::string mask_path = out_prefix + "_mask.png";
  write_png8(albedo_path, result.albedo_uv);
  write_normal_png16(normal_path, result.normal_uv);
  write_mask_png(mask_path, result.coverage);
  json outputs = {{"albedo", albedo_path}, {"normal", normal_path}, {"mask", mask_path}};
  if (field.config.n_labels > 0) {
    std::string label_path = out_prefix + "_label.png";
    save_label_png(label_path, result.label_uv);
    outputs["label"] = label_path;
  }
  std::printf("bake: %dx%d maps -> %s_*\n", resolution, resolution, out_prefix.c_str());
  write_manifest(albedo_path, "bake", {{"ckpt", ckpt_path}, {"mesh", mesh_path}}, outputs,
                 {{"resolution", resolution}}, 0);
  return 0;
}

int run_render(std::vector<std::string>& args) {
  CLI::App app{"render turntable frames"};
  std::string mesh_path, ckpt_path, albedo_path, normal_path, out_dir;
  int frames = 8, resolution = 512;
  app.add_option("--mesh", mesh_path, "OBJ or PLY mesh")->required();
  app.add_option("--ckpt", ckpt_path, "field checkpoint");
  app.add_option("--albedo", albedo_path, "baked albedo UV map PNG");
  app.add_option("--normal", normal_path, "baked tactile normal UV map PNG");
  app.add_option("--frames", frames, "frame count");
  app.add_option("--resolution", resolution, "render resolution");
  app.add_option("--out-dir", out_dir, "output directory")->required();
  if (int rc = parse_cli(app, args); rc >= 0) return rc;

  Mesh mesh = load_mesh(mesh_path);
  TurntableSource src;
  TextureField field;
  ImageF albedo_uv, tactile_uv;
  if (!ckpt_path.empty()) {
    field = load_checkpoint(ckpt_path);
    src.field = &field;
  } else {
    if (albedo_path.empty() && normal_path.empty())
      throw std::runtime_error("render: need --ckpt or baked --albedo/--normal maps");
    if (!albedo_path.empty()) {
      albedo_uv = load_color_png(albedo_path);
      src.albedo_uv = &albedo_uv;
    }
    if (!normal_path.empty()) {
      tactile_uv = load_normal_png(normal_path);
      src.tactile_uv = &tactile_uv;
    }
  }
  int n = turntable(mesh, src, frames, out_dir, resolution);
  std::printf("render: %d frame(s) -> %s\n", n, out_dir.c_str());
  write_manifest(out_dir + "/manifest_anchor", "render",
                 {{"mesh", mesh_path}, {"ckpt", ckpt_path}}, {{"dir", out_dir}},
                 {{"frames", frames}, {"resolution", resolution}}, 0);
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (args.empty() || args[0] == "--help" || args[0] == "-h") {
    std::printf(
        "tactex -- tactile texture fields\n"
        "usage: tactex <subcommand> [options]\n\n"
        "subcommands:\n"
        "  ingest         tactile normal PNG -> height + normal patch\n"
        "  quilt          height patches -> seamless texture map\n"
        "  fit            optimize the 3D texture field on a mesh\n"
        "  assign-labels  KL-merge attention maps into part labels\n"
        "  bake           field checkpoint -> UV maps\n"
        "  render         turntable renders from a field or baked maps\n\n"
        "run 'tactex <subcommand> --help' for options\n");
    return 0;
  }

  std::string cmd = args[0];
  std::vector<std::string> rest(args.begin() + 1, args.end());
  std::reverse(rest.begin(), rest.end());  // CLI11 parses reversed vectors

  try {
    if (cmd == "ingest") return run_ingest(rest);
    if (cmd == "quilt") return run_quilt(rest);
    if (cmd == "fit") return run_fit(rest);
    if (cmd == "assign-labels") return run_assign_labels(rest);
    if (cmd == "bake") return run_bake(rest);
    if (cmd == "render") return run_render(rest);
    std::fprintf(stderr, "tactex: unknown subcommand '%s'\n", cmd.c_str());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "tactex %s: %s\n", cmd.c_str(), e.what());
    return 1;
  }
}

}  // namespace tactex
