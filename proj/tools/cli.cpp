#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cenic/archspec.hpp"
#include "cenic/bench.hpp"
#include "cenic/codec.hpp"
#include "cenic/gdn.hpp"
#include "cenic/image.hpp"
#include "cenic/metrics.hpp"
#include "cenic/shrink.hpp"
#include "cenic/trainer.hpp"
#include "cenic/two_phase.hpp"
#include "json.hpp"

namespace cenic {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Bad invocation detected after CLI11 parsing (missing inputs, bad config keys).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) fail(ErrorKind::IoError, "cannot write " + p.string());
}

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
  const std::string s = slurp(p);
  return {s.begin(), s.end()};
}

// Fills every option of `sub` that was not given on the command line from the
// JSON object in `path`. Keys use underscores or dashes for the long name.
void apply_config(CLI::App& sub, const std::string& path) {
  json j;
  try {
    j = json::parse(slurp(path));
  } catch (const json::parse_error& e) {
    throw UsageError("config " + path + ": " + e.what());
  }
  if (!j.is_object()) throw UsageError("config " + path + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    std::string name = key;
    std::replace(name.begin(), name.end(), '_', '-');
    CLI::Option* opt = sub.get_option_no_throw("--" + name);
    if (opt == nullptr || name == "config") throw UsageError("config " + path + ": unknown key '" + key + "'");
    if (opt->count() > 0) continue;
    std::vector<std::string> items;
    auto text = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    if (value.is_array())
      for (const auto& v : value) items.push_back(text(v));
    else
      items.push_back(text(value));
    opt->clear();
    opt->add_result(items);
    opt->run_callback();
  }
}

// CENIC_SEED replaces a seed that did not come from the command line.
void apply_seed_env(std::uint64_t& seed) {
  const char* env = std::getenv("CENIC_SEED");
  if (env == nullptr || *env == '\0') return;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (*end != '\0') throw UsageError(std::string("CENIC_SEED is not an integer: ") + env);
  seed = v;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string("missing required option ") + flag);
}

FlopScope parse_scope(const std::string& s) {
  if (s == "decode" || s == "decode_side") return FlopScope::decode_side;
  if (s == "all") return FlopScope::all;
  throw UsageError("--scope must be decode or all");
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

void print_quality(std::ostream& out, const QualityScore& q) {
  out << "psnr_db " << fixed(q.psnr_db, 4) << "\n";
  out << "msssim " << fixed(q.ms_ssim, 6) << " (" << q.ms_ssim_scales << " scales)\n";
  out << "msssim_db_paper " << fixed(q.ms_ssim_db_paper, 4) << "   -10 log10(m)\n";
  out << "msssim_db_conv " << fixed(q.ms_ssim_db_conv, 4) << "   -10 log10(1 - m)\n";
}

struct Common {
  std::string config;
  CLI::App* app = nullptr;
  void add(CLI::App* sub) {
    app = sub;
    sub->add_option("--config", config, "JSON object of option values; explicit flags override it");
  }
  void load() {
    if (!config.empty()) apply_config(*app, config);
  }
};

// ---------------------------------------------------------------- parse-arch

struct ParseArchCmd {
  Common common;
  std::string arch;
  bool corrections = false;

  void add(CLI::App& app) {
    CLI::App* s = app.add_subcommand("parse-arch", "Parse and validate an architecture, print it");
    common.add(s);
    s->add_option("--arch,arch", arch, "preset name, \"tiny\" or .arch file");
    s->add_flag("--corrections", corrections, "list the corrections applied to a preset");
  }

  int run(std::ostream& out) {
    common.load();
    require(arch, "--arch");
    const NetworkSpec spec = resolve_arch(arch);
    out << render_network(spec);
    if (corrections) {
      const PresetInfo info = preset_info(parse_preset(arch));
      for (const auto& c : info.corrections) out << "# correction: " << c << "\n";
    }
    return 0;
  }
};

// --------------------------------------------------------------------- flops

struct FlopsCmd {
  Common common;
  std::string arch, reference, scope = "decode";
  int height = 256, width = 256;
  bool per_layer = false;

  void add(CLI::App& app) {
    CLI::App* s = app.add_subcommand("flops", "Count FLOPs, optionally as a ratio to a reference");
    common.add(s);
    s->add_option("--arch,arch", arch, "architecture to count");
    s->add_option("--reference", reference, "architecture for the ratio");
    s->add_option("--scope", scope, "decode or all");
    s->add_option("--height", height, "input height (multiple of 64)");
    s->add_option("--width", width, "input width (multiple of 64)");
    s->add_flag("--layers", per_layer, "print every layer");
  }

  int run(std::ostream& out) {
    common.load();
    require(arch, "--arch");
    const NetworkSpec spec = resolve_arch(arch);
    std::optional<NetworkSpec> ref;
    if (!reference.empty()) ref = resolve_arch(reference);
    const FlopReport r = flops_network(spec, height, width, parse_scope(scope), ref ? &*ref : nullptr);
    out << "arch " << arch << "  input " << height << "x" << width << "  scope "
        << (r.scope == FlopScope::all ? "all" : "decode") << "\n";
    if (per_layer)
      for (const LayerFlops& l : r.layers)
        out << "  " << to_string(l.section) << "." << l.index << "  " << render(l.layer) << "  in " << l.in_channels
            << "x" << l.in_h << "x" << l.in_w << "  " << l.flops << "\n";
    for (Section s : kSections)
      if (r.section_total(s) > 0) out << to_string(s) << " " << r.section_total(s) << "\n";
    out << "total " << r.total << " (" << fixed(r.total / 1e9, 3) << " GFLOPs)\n";
    if (r.ratio) out << "reference " << reference << "\nratio " << fixed(*r.ratio, 4) << "\n";
    return 0;
  }
};

// --------------------------------------------------------------------- train

struct TrainCmd {
  Common common;
  std::string arch = "tiny", init, data, out_dir, metric = "mse", regularizer = "uniform";
  int synthetic_count = 8, synthetic_size = 64;
  TrainConfig cfg;
  CLI::Option* seed_opt = nullptr;

  void add(CLI::App& app) {
    CLI::App* s = app.add_subcommand("train", "Train a model on L = D lambda + R + F alpha");
    common.add(s);
    s->add_option("--arch", arch, "architecture for a fresh init");
    s->add_option("--init", init, "start from these weights instead");
    s->add_option("--data", data, "directory of .ppm images (synthetic when absent)");
    s->add_option("--synthetic-count", synthetic_count);
    s->add_option("--synthetic-size", synthetic_size);
    s->add_option("--metric", metric, "mse or msssim");
    s->add_option("--lambda", cfg.lambda);
    s->add_option("--alpha", cfg.alpha);
    s->add_option("--regularizer", regularizer, "uniform or flop_weighted");
    s->add_option("--msssim-scales", cfg.msssim_scales);
    s->add_option("--steps", cfg.steps);
    s->add_option("--batch", cfg.batch);
    s->add_option("--crop", cfg.crop);
    s->add_option("--lr", cfg.lr);
    s->add_option("--log-every", cfg.log_every);
    seed_opt = s->add_option("--seed", cfg.seed);
    s->add_option("--out", out_dir, "directory for model.weights and curve.csv");
  }

  int run(std::ostream& out) {
    const bool explicit_seed = seed_opt->count() > 0;
    common.load();
    if (!explicit_seed) apply_seed_env(cfg.seed);
    require(out_dir, "--out");
    cfg.metric = parse_metric(metric);
    cfg.regularizer = parse_regularizer_mode(regularizer);
    const Dataset ds = data.empty() ? Dataset::synthetic(synthetic_count, synthetic_size, synthetic_size, cfg.seed)
                                    : Dataset::from_dir(data);
    CodecModel m = init.empty() ? init_model(resolve_arch(arch), cfg.seed) : load_weights(init);
    const TrainResult r = train_loop(std::move(m), ds, cfg);
    fs::create_directories(out_dir);
    save_weights(fs::path(out_dir) / "model.weights", r.model);
    spit(fs::path(out_dir) / "curve.csv", curve_csv(r.curve));
    if (!r.curve.empty()) {
      const auto& a = r.curve.front().loss;
      const auto& b = r.curve.back().loss;
      out << "initial L " << a.L << "  final L " << b.L << "  (D " << b.D << ", R " << b.R << " bpp, F " << b.F
          << ")\n";
    }
    out << "wrote " << (fs::path(out_dir) / "model.weights").string() << "\n";
    return 0;
  }
};

// --------------------------------------------------------------------- sweep

struct SweepCmd {
  std::string config, out_dir, arch, data, metric, regularizer;
  std::vector<double> lambdas, alphas;
  std::vector<std::uint64_t> seeds;
  int phase1 = 0, phase2 = 0, batch = 0, crop = 0, log_every = 0;
  double lr = 0, threshold = 0;
  bool print_only = false;
  CLI::App* app = nullptr;

  void add(CLI::App& a) {
    app = a.add_subcommand("sweep", "Two-phase runs over a lambda x alpha grid");
    app->add_option("--config", config, "sweep JSON (grids default to the standard ones)");
    app->add_option("--out", out_dir, "output directory, one subdirectory per cell");
    app->add_option("--arch", arch);
    app->add_option("--data", data);
    app->add_option("--metric", metric);
    app->add_option("--regularizer", regularizer);
    app->add_option("--lambdas", lambdas)->delimiter(',');
    app->add_option("--alphas", alphas)->delimiter(',');
    app->add_option("--seeds", seeds)->delimiter(',');
    app->add_option("--phase1-steps", phase1);
    app->add_option("--phase2-steps", phase2);
    app->add_option("--batch", batch);
    app->add_option("--crop", crop);
    app->add_option("--lr", lr);
    app->add_option("--log-every", log_every);
    app->add_option("--threshold", threshold);
    app->add_flag("--print-config", print_only, "print the resolved configuration and exit");
  }

  bool given(const char* flag) const { return app->get_option(flag)->count() > 0; }

  int run(std::ostream& out) {
    SweepConfig c;
    try {
      c = SweepConfig::from_json(config.empty() ? std::string("{}") : slurp(config));
    } catch (const ParseError& e) {
      throw UsageError(std::string("config: ") + e.what());
    }
    if (given("--metric")) {
      c.metric = parse_metric(metric);
      if (!given("--lambdas") && config.empty()) c.lambdas = sweep_grids(c.metric).lambdas;
    }
    if (given("--arch")) c.arch = arch;
    if (given("--data")) c.dataset = data;
    if (given("--regularizer")) c.regularizer = parse_regularizer_mode(regularizer);
    if (given("--lambdas")) c.lambdas = lambdas;
    if (given("--alphas")) c.alphas = alphas;
    if (given("--seeds")) c.seeds = seeds;
    if (given("--phase1-steps")) c.phase1_steps = phase1;
    if (given("--phase2-steps")) c.phase2_steps = phase2;
    if (given("--batch")) c.batch = batch;
    if (given("--crop")) c.crop = crop;
    if (given("--lr")) c.lr = lr;
    if (given("--log-every")) c.log_every = log_every;
    if (given("--threshold")) c.threshold = threshold;
    if (!given("--seeds") && std::getenv("CENIC_SEED") != nullptr) {
      std::uint64_t s = 0;
      apply_seed_env(s);
      c.seeds = {s};
    }
    c.validate();
    if (print_only) {
      out << c.to_json() << "\n";
      return 0;
    }
    require(out_dir, "--out");
    const auto cells = run_sweep(c, out_dir);
    for (const SweepCell& cell : cells)
      out << cell.dir.filename().string() << "  flops " << cell.flops_before << " -> " << cell.flops_after
          << "  final L " << cell.final_loss << "\n";
    out << "wrote " << (fs::path(out_dir) / "sweep.csv").string() << "\n";
    return 0;
  }
};

// -------------------------------------------------------------------- shrink

struct ShrinkCmd {
  Common common;
  std::string model, arch, report, out_arch, out_report;
  double threshold = kActivityThreshold;

  void add(CLI::App& app) {
    CLI::App* s = app.add_subcommand(
        "shrink", "Read active widths off trained weights, or apply a structure report to an architecture");
    common.add(s);
    s->add_option("--model", model, "trained weights to read the structure from");
    s->add_option("--arch", arch, "architecture to shrink with --report");
    s->add_option("--report", report, "structure report to apply");
    s->add_option("--threshold", threshold);
    s->add_option("--out", out_arch, "write the shrunk .arch here");
    s->add_option("--report-out", out_report, "write the structure report here");
  }

  int run(std::ostream& out) {
    common.load();
    NetworkSpec spec;
    StructureReport r;
    if (!model.empty()) {
      const CodecModel m = load_weights(model);
      spec = m.spec;
      r = extract_structure(m, threshold);
    } else {
      require(arch, "--model or --arch");
      require(report, "--report");
      spec = resolve_arch(arch);
      r = StructureReport::from_text(slurp(report));
    }
    const NetworkSpec shrunk = shrink_network(spec, r);
    for (const auto& w : r.warnings) out << "warning: " << w << "\n";
    for (const LayerActivity& a : r.layers)
      out << to_string(a.section) << "." << a.index << "  " << a.original << " -> " << a.active
          << (a.pinned ? "  (pinned)" : "") << (a.clamped ? "  (clamped)" : "") << "\n";
    const auto before = flops_network(spec, 256, 256, FlopScope::decode_side).total;
    const auto after = flops_network(shrunk, 256, 256, FlopScope::decode_side).total;
    out << "decode flops @256x256 " << before << " -> " << after << "\n";
    if (!out_report.empty()) spit(out_report, r.to_text());
    if (!out_arch.empty())
      spit(out_arch, render_network(shrunk));
    else
      out << render_network(shrunk);
    return 0;
  }
};

// ------------------------------------------------------------ encode, decode

struct EncodeCmd {
  Common common;
  std::string in, model, out_path, precision = "f64";

  void add(CLI::App& app) {
    CLI::App* s = app.add_subcommand("encode", "Compress a PPM image");
    common.add(s);
    s->add_option("--in", in, "input .ppm");
    s->add_option("--model", model, "weights file");
    s->add_option("--out", out_path, "output .cenc");
    s->add_option("--precision", precision, "f32 or f64 (decode must match)");
  }

  template <typename T>
  std::pair<Bitstream, double> encode_with(const CodecModel& m, const Tensor& img) {
    const BasicCodec<T> codec(m.cast<T>());
    const auto e = codec.encode_analyze(img);
    return {e.bitstream, e.estimated_hyper_bits + e.estimated_latent_bits};
  }

  int run(std::ostream& out) {
    common.load();
    require(in, "--in");
    require(model, "--model");
    require(out_path, "--out");
    const Tensor img = read_ppm(in);
    const CodecModel m = load_weights(model);
    if (precision != "f32" && precision != "f64") throw UsageError("--precision must be f32 or f64");
    auto [bs, est] = precision == "f32" ? encode_with<float>(m, img) : encode_with<double>(m, img);
    const auto bytes = serialize(bs);
    spit(out_path, std::string(bytes.begin(), bytes.end()));
    const double pixels = static_cast<double>(img.h()) * img.w();
    out << "bytes " << bytes.size() << "  payload " << bs.payload_bytes() << "  bpp "
        << fixed(8.0 * bs.payload_bytes() / pixels, 4) << "  estimated bpp " << fixed(est / pixels, 4) << "\n";
    return 0;
  }
};

struct DecodeCmd {
  Common common;
  std::string in, model, out_path, reference, precision = "f64";

  void add(CLI::App& app) {
    CLI::App* s = app.add_subcommand("decode", "Decompress a .cenc stream to PPM");
    common.add(s);
    s->add_option("--in", in, "input .cenc");
    s->add_option("--model", model, "weights file");
    s->add_option("--out", out_path, "output .ppm");
    s->add_option("--reference", reference, "original .ppm to score against");
    s->add_option("--precision", precision, "f32 or f64 (must match encode)");
  }

  int run(std::ostream& out) {
    common.load();
    require(in, "--in");
    require(model, "--model");
    require(out_path, "--out");
    const Bitstream bs = deserialize(read_bytes(in));
    const CodecModel m = load_weights(model);
    if (precision != "f32" && precision != "f64") throw UsageError("--precision must be f32 or f64");
    Tensor img;
    TimingBreakdown t;
    if (precision == "f32") {
      auto d = CodecF(m.cast<float>()).decode(bs);
      img = std::move(d.image);
      t = d.timing;
    } else {
      auto d = Codec(m).decode(bs);
      img = std::move(d.image);
      t = d.timing;
    }
    write_ppm(out_path, img);
    out << "decoded " << img.w() << "x" << img.h() << " in " << fixed(t.total_ms, 2) << " ms (hyper rc "
        << fixed(t.hyper_range_decode_ms, 2) << ", hyper net " << fixed(t.hyper_decoder_net_ms, 2) << ", latent rc "
        << fixed(t.latent_range_decode_ms, 2) << ", decoder net " << fixed(t.decoder_net_ms, 2) << ")\n";
    if (!reference.empty()) print_quality(out, score_quality(read_ppm(reference), img));
    return 0;
  }
};

// --------------------------------------------------------------------- bench

struct BenchCmd {
  Common common;
  std::vector<std::string> models, archs, formats = {"csv", "json", "svg", "dat"};
  std::string images, out_stem = "bench", precision = "f32", gdn_mode = "model";
  int synthetic = 2, height = 512, width = 768;
  BenchOptions opts;
  bool no_pin = false;
  std::uint64_t seed = 1;
  CLI::Option* seed_opt = nullptr;

  void add(CLI::App& app) {
    CLI::App* s = app.add_subcommand("bench", "Decode-time benchmark with quality, written as CSV/JSON/SVG/dat");
    common.add(s);
    s->add_option("--model", models, "weights files, one series each");
    s->add_option("--arch", archs, "architectures benchmarked with fresh weights");
    s->add_option("--images", images, "directory of .ppm images (synthetic when absent)");
    s->add_option("--synthetic", synthetic, "number of synthetic images");
    s->add_option("--height", height);
    s->add_option("--width", width);
    s->add_option("--reps", opts.reps);
    s->add_option("--warmup", opts.warmup);
    s->add_option("--precision", precision, "f32 or f64");
    s->add_option("--gdn-mode", gdn_mode, "model, classic, simplified or both");
    s->add_flag("--no-pin", no_pin, "do not pin the thread to one CPU");
    seed_opt = s->add_option("--seed", seed);
    s->add_option("--out", out_stem, "output path stem");
    s->add_option("--formats", formats, "csv, json, svg, dat")->delimiter(',');
  }

  std::vector<BenchImage> load_images() const {
    std::vector<BenchImage> out;
    if (images.empty()) {
      const auto imgs = synthetic_images(synthetic, height, width, seed);
      for (std::size_t i = 0; i < imgs.size(); ++i) out.push_back({"synthetic" + std::to_string(i), imgs[i]});
      return out;
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(images))
      if (e.path().extension() == ".ppm") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) out.push_back({f.stem().string(), read_ppm(f)});
    if (out.empty()) fail(ErrorKind::DataError, "no .ppm images in " + images);
    return out;
  }

  std::vector<BenchRecord> bench_one(const CodecModel& m, const std::vector<BenchImage>& imgs,
                                     const std::string& label) {
    BenchOptions o = opts;
    o.label = label;
    o.pin_thread = !no_pin;
    if (precision == "f32") return bench_decode(CodecF(m.cast<float>()), imgs, o);
    return bench_decode(Codec(m), imgs, o);
  }

  int run(std::ostream& out) {
    const bool explicit_seed = seed_opt->count() > 0;
    common.load();
    if (!explicit_seed) apply_seed_env(seed);
    if (precision != "f32" && precision != "f64") throw UsageError("--precision must be f32 or f64");
    std::vector<ReportFormat> fmts;
    for (const auto& f : formats) {
      if (f == "csv") fmts.push_back(ReportFormat::csv);
      else if (f == "json") fmts.push_back(ReportFormat::json);
      else if (f == "svg") fmts.push_back(ReportFormat::svg);
      else if (f == "dat") fmts.push_back(ReportFormat::dat);
      else throw UsageError("unknown report format '" + f + "'");
    }
    std::vector<std::pair<std::string, CodecModel>> todo;
    for (const auto& p : models) todo.emplace_back(fs::path(p).stem().string(), load_weights(p));
    for (const auto& a : archs) todo.emplace_back(a, init_model(resolve_arch(a), seed));
    if (todo.empty()) throw UsageError("give at least one --model or --arch");
    const auto imgs = load_images();

    std::vector<BenchRecord> all;
    for (const auto& [name, m] : todo) {
      std::vector<std::pair<std::string, CodecModel>> variants;
      if (gdn_mode == "model") variants.emplace_back(name, m);
      else if (gdn_mode == "both") {
        variants.emplace_back(name + "/classic", with_gdn_mode(m, GdnMode::classic));
        variants.emplace_back(name + "/simplified", with_gdn_mode(m, GdnMode::simplified));
      } else if (gdn_mode == "classic" || gdn_mode == "simplified") {
        variants.emplace_back(name + "/" + gdn_mode, with_gdn_mode(m, parse_gdn_mode(gdn_mode)));
      } else {
        throw UsageError("--gdn-mode must be model, classic, simplified or both");
      }
      for (const auto& [label, model] : variants) {
        auto recs = bench_one(model, imgs, label);
        for (const auto& r : recs)
          out << label << "  " << r.image << "  " << fixed(r.bpp, 4) << " bpp  psnr " << fixed(r.psnr_db, 2)
              << "  median " << fixed(r.median.total_ms, 2) << " ms (iqr " << fixed(r.iqr.total_ms, 2) << ")\n";
        all.insert(all.end(), recs.begin(), recs.end());
      }
    }
    for (const auto& p : emit_report(all, out_stem, fmts)) out << "wrote " << p.string() << "\n";
    out << "host " << all.front().host << "  precision " << precision << (all.front().pinned ? "  pinned" : "")
        << "\n";
    return 0;
  }
};

// ----------------------------------------------------------------- gdn-bench

struct GdnBenchCmd {
  Common common;
  GdnBenchConfig cfg;
  std::string direction = "multiply", csv_out;
  bool no_pin = false;
  CLI::Option* seed_opt = nullptr;

  void add(CLI::App& app) {
    CLI::App* s = app.add_subcommand("gdn-bench", "Classic vs simplified GDN microbenchmark (f32)");
    common.add(s);
    s->add_option("--channels", cfg.channels);
    s->add_option("--height", cfg.height);
    s->add_option("--width", cfg.width);
    s->add_option("--reps", cfg.reps);
    s->add_option("--warmup", cfg.warmup);
    s->add_option("--direction", direction, "divide or multiply");
    seed_opt = s->add_option("--seed", cfg.seed);
    s->add_flag("--no-pin", no_pin);
    s->add_option("--out", csv_out, "write the per-stage CSV here");
  }

  int run(std::ostream& out) {
    const bool explicit_seed = seed_opt->count() > 0;
    common.load();
    if (!explicit_seed) apply_seed_env(cfg.seed);
    if (direction == "divide") cfg.direction = GdnDirection::divide;
    else if (direction == "multiply") cfg.direction = GdnDirection::multiply;
    else throw UsageError("--direction must be divide or multiply");
    cfg.pin_thread = !no_pin;
    const GdnBenchReport r = gdn_microbench(cfg);
    out << r.to_csv();
    out << "classic median " << fixed(r.classic_median_ms, 3) << " ms (iqr " << fixed(r.classic_iqr_ms, 3) << ")\n";
    out << "simplified median " << fixed(r.simplified_median_ms, 3) << " ms (iqr "
        << fixed(r.simplified_iqr_ms, 3) << ")\n";
    out << "speedup " << fixed(100 * r.speedup(), 1) << "%\n";
    out << "host " << r.host << (r.pinned ? "  pinned" : "") << "\n";
    if (!csv_out.empty()) spit(csv_out, r.to_csv());
    return 0;
  }
};

// ------------------------------------------------------------------- metrics

struct MetricsCmd {
  Common common;
  std::string reference, test;

  void add(CLI::App& app) {
    CLI::App* s = app.add_subcommand("metrics", "PSNR and MS-SSIM between two PPM images");
    common.add(s);
    s->add_option("--reference", reference, "original .ppm");
    s->add_option("--test", test, "reconstruction .ppm");
  }

  int run(std::ostream& out) {
    common.load();
    require(reference, "--reference");
    require(test, "--test");
    print_quality(out, score_quality(read_ppm(reference), read_ppm(test)));
    return 0;
  }
};

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app("cenic: learned image codec with FLOP-regularized decoders", "cenic");
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.fallthrough(false);

  ParseArchCmd parse_arch;
  FlopsCmd flops;
  TrainCmd train;
  SweepCmd sweep;
  ShrinkCmd shrink;
  EncodeCmd encode;
  DecodeCmd decode;
  BenchCmd bench;
  GdnBenchCmd gdn_bench;
  MetricsCmd metrics;
  parse_arch.add(app);
  flops.add(app);
  train.add(app);
  sweep.add(app);
  shrink.add(app);
  encode.add(app);
  decode.add(app);
  bench.add(app);
  gdn_bench.add(app);
  metrics.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  auto* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  try {
    if (name == "parse-arch") return parse_arch.run(out);
    if (name == "flops") return flops.run(out);
    if (name == "train") return train.run(out);
    if (name == "sweep") return sweep.run(out);
    if (name == "shrink") return shrink.run(out);
    if (name == "encode") return encode.run(out);
    if (name == "decode") return decode.run(out);
    if (name == "bench") return bench.run(out);
    if (name == "gdn-bench") return gdn_bench.run(out);
    if (name == "metrics") return metrics.run(out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << sub->help();
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  err << app.help();
  return 1;
}

}  // namespace cenic
