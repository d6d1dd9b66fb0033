#include "cenic/trainer.hpp"

#include <cmath>
#include <algorithm>
#include <fstream>
#include <sstream>

#include "cenic/image.hpp"
#include "cenic/metrics.hpp"
#include "cenic/optim.hpp"
#include "json.hpp"

namespace cenic {

std::string_view to_string(Metric m) { return m == Metric::mse ? "mse" : "msssim"; }

Metric parse_metric(std::string_view s) {
  if (s == "mse") return Metric::mse;
  if (s == "msssim" || s == "ms-ssim" || s == "ms_ssim") return Metric::msssim;
  fail(ErrorKind::DomainError, "unknown metric '" + std::string(s) + "'");
}

namespace {

double distortion_value(const Tensor& rec, const Tensor& orig, Metric metric, int scales, MsSsimForm form) {
  if (metric == Metric::mse) return mse_psnr(rec, orig, 1.0).mse;
  const double m = ms_ssim(rec, orig, scales);
  return form == MsSsimForm::one_minus ? 1.0 - m : -m;
}

LossBreakdown assemble(double d, double r, double f, double lambda, double alpha) {
  LossBreakdown b;
  b.D = d;
  b.R = r;
  b.F = f;
  b.lambda = lambda;
  b.alpha = alpha;
  b.L = d * lambda + r + f * alpha;
  return b;
}

}  // namespace

LossBreakdown rd_loss(const Tensor& reconstruction, const Tensor& original, double rate_bits, double pixel_count,
                      double lambda, double alpha, double flop_reg, Metric metric, int msssim_scales,
                      MsSsimForm form) {
  if (!(lambda > 0)) fail(ErrorKind::DomainError, "lambda must be > 0");
  if (!(alpha >= 0)) fail(ErrorKind::DomainError, "alpha must be >= 0");
  if (!(pixel_count > 0)) fail(ErrorKind::DomainError, "pixel count must be > 0");
  const double d = distortion_value(reconstruction, original, metric, msssim_scales, form);
  return assemble(d, rate_bits / pixel_count, flop_reg, lambda, alpha);
}

SweepGrids sweep_grids(Metric metric) {
  SweepGrids g;
  for (int t = 0; t <= 7; ++t)
    g.lambdas.push_back(metric == Metric::mse ? 0.1 * std::ldexp(1.0, t - 6) : std::ldexp(1.0, t - 1));
  for (int t = 0; t <= 11; ++t) g.alphas.push_back(0.001 * std::pow(0.2, t));
  return g;
}

Dataset Dataset::from_dir(const std::filesystem::path& dir) { return {load_image_dir(dir)}; }

Dataset Dataset::synthetic(int count, int height, int width, std::uint64_t seed) {
  return {synthetic_images(count, height, width, seed)};
}

std::string curve_csv(const LossCurve& curve) {
  std::ostringstream o;
  o.precision(10);
  o << "step,D,R,F,L\n";
  for (const CurvePoint& p : curve)
    o << p.step << "," << p.loss.D << "," << p.loss.R << "," << p.loss.F << "," << p.loss.L << "\n";
  return o.str();
}

double smoothed_final(const LossCurve& curve, int window) {
  if (curve.empty()) fail(ErrorKind::DomainError, "empty loss curve");
  const std::size_t n = std::min<std::size_t>(curve.size(), static_cast<std::size_t>(std::max(window, 1)));
  double s = 0;
  for (std::size_t i = curve.size() - n; i < curve.size(); ++i) s += curve[i].loss.L;
  return s / static_cast<double>(n);
}

Tensor sample_batch(const Dataset& data, int batch, int crop, std::mt19937_64& rng) {
  if (data.images.empty()) fail(ErrorKind::DataError, "dataset is empty");
  Tensor out({batch, 3, crop, crop});
  for (int b = 0; b < batch; ++b) {
    const Tensor& img = data.images[rng() % data.images.size()];
    if (img.h() < crop || img.w() < crop)
      fail(ErrorKind::DataError, "image " + img.shape().str() + " is smaller than the " + std::to_string(crop) + " crop");
    const int y0 = static_cast<int>(rng() % static_cast<unsigned>(img.h() - crop + 1));
    const int x0 = static_cast<int>(rng() % static_cast<unsigned>(img.w() - crop + 1));
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < crop; ++y)
        for (int x = 0; x < crop; ++x) out.at(b, c, y, x) = img.at(0, c, y0 + y, x0 + x);
  }
  return out;
}

Objective rd_objective(Tape& tape, const CodecModel& model, std::span<const Var> params, const Tensor& batch,
                       const TrainConfig& config, std::mt19937_64& noise_rng) {
  if (!(config.lambda > 0)) fail(ErrorKind::DomainError, "lambda must be > 0");
  if (!(config.alpha >= 0)) fail(ErrorKind::DomainError, "alpha must be >= 0");
  Var x = tape.constant(batch);
  const TrainForward fw = forward_train(tape, model, params, x, QuantMode::noise, noise_rng);
  const double pixels = static_cast<double>(batch.n()) * batch.h() * batch.w();
  Var rate = ad::scale(ad::add(ad::rate_bits(fw.y_likelihood), ad::rate_bits(fw.z_likelihood)), 1.0 / pixels);
  Var dist;
  if (config.metric == Metric::mse) {
    dist = ad::mse(fw.x_hat, x);
  } else {
    Var m = ad::ms_ssim(fw.x_hat, x, config.msssim_scales);
    dist = config.msssim_form == MsSsimForm::one_minus ? ad::add_scalar(ad::scale(m, -1.0), 1.0) : ad::scale(m, -1.0);
  }
  Var loss = ad::add(ad::scale(dist, config.lambda), rate);
  double f = 0;
  if (config.alpha > 0) {
    Var reg = ad::flop_reg_total(model, params, config.regularizer);
    f = reg.value()[0];
    loss = ad::add(loss, ad::scale(reg, config.alpha));
  } else {
    f = flop_reg_total(model, config.regularizer);
  }
  Objective o;
  o.L = loss;
  o.parts = assemble(dist.value()[0], rate.value()[0], f, config.lambda, config.alpha);
  return o;
}

TrainResult train_loop(CodecModel model, const Dataset& data, const TrainConfig& config) {
  if (config.steps < 0 || config.batch < 1 || config.crop < 1 || config.log_every < 1)
    fail(ErrorKind::DomainError, "invalid training configuration");
  TrainResult result;
  if (config.steps == 0) {
    result.model = std::move(model);
    return result;
  }
  if (data.images.empty()) fail(ErrorKind::DataError, "dataset is empty");
  std::mt19937_64 crop_rng(config.seed);
  std::mt19937_64 noise_rng(config.seed ^ 0x9E3779B97F4A7C15ull);

  auto named = model.parameters();
  std::vector<Tensor*> ptrs;
  for (auto& p : named) ptrs.push_back(p.tensor);
  AdamConfig ac;
  ac.lr = config.lr;
  AdamState adam = AdamState::init(std::span<const Tensor* const>(ptrs.data(), ptrs.size()), ac);

  for (int step = 0; step < config.steps; ++step) {
    const Tensor batch = sample_batch(data, config.batch, config.crop, crop_rng);
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(ptrs.size());
    for (Tensor* t : ptrs) vars.push_back(tape.leaf(*t));
    const Objective obj = rd_objective(tape, model, vars, batch, config, noise_rng);
    if (!std::isfinite(obj.parts.L)) fail(ErrorKind::DomainError, "loss became non-finite at step " + std::to_string(step));
    if (step % config.log_every == 0) result.curve.push_back({step, obj.parts});
    tape.backward(obj.L);
    std::vector<Tensor> grads;
    grads.reserve(vars.size());
    for (Var v : vars) grads.push_back(tape.grad(v));
    adam_step(ptrs, grads, adam);
    for (Section s : kSections)
      for (auto& l : model.layers(s))
        if (l.gdn) *l.gdn = gdn_project(*l.gdn);
  }
  // Loss at the final parameters, on a fresh batch.
  {
    const Tensor batch = sample_batch(data, config.batch, config.crop, crop_rng);
    Tape tape;
    std::vector<Var> vars;
    for (Tensor* t : ptrs) vars.push_back(tape.constant(*t));
    result.curve.push_back({config.steps, rd_objective(tape, model, vars, batch, config, noise_rng).parts});
  }
  result.model = std::move(model);
  return result;
}

namespace {

using nlohmann::json;

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

SweepConfig SweepConfig::from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.byte, std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ParseError(0, "config must be a JSON object");
  static const char* known[] = {"metric",       "msssim_form", "msssim_scales", "lambdas",     "alphas",
                                "seeds",        "phase1_steps", "phase2_steps", "crop",        "batch",
                                "lr",           "log_every",   "threshold",     "regularizer", "arch",
                                "dataset",      "synthetic_count", "synthetic_size"};
  for (const auto& [k, v] : j.items()) {
    (void)v;
    if (std::find_if(std::begin(known), std::end(known), [&](const char* n) { return k == n; }) == std::end(known))
      throw ParseError(0, "config: unknown key '" + k + "'");
  }
  SweepConfig c;
  try {
    if (j.contains("metric")) c.metric = parse_metric(j.at("metric").get<std::string>());
    if (j.contains("msssim_form")) {
      const auto f = j.at("msssim_form").get<std::string>();
      if (f == "one_minus") c.msssim_form = MsSsimForm::one_minus;
      else if (f == "negative") c.msssim_form = MsSsimForm::negative;
      else fail(ErrorKind::DomainError, "unknown msssim_form '" + f + "'");
    }
    if (j.contains("regularizer")) c.regularizer = parse_regularizer_mode(j.at("regularizer").get<std::string>());
    read_opt(j, "msssim_scales", c.msssim_scales);
    read_opt(j, "lambdas", c.lambdas);
    read_opt(j, "alphas", c.alphas);
    read_opt(j, "seeds", c.seeds);
    read_opt(j, "phase1_steps", c.phase1_steps);
    read_opt(j, "phase2_steps", c.phase2_steps);
    read_opt(j, "crop", c.crop);
    read_opt(j, "batch", c.batch);
    read_opt(j, "lr", c.lr);
    read_opt(j, "log_every", c.log_every);
    read_opt(j, "threshold", c.threshold);
    read_opt(j, "arch", c.arch);
    read_opt(j, "dataset", c.dataset);
    read_opt(j, "synthetic_count", c.synthetic_count);
    read_opt(j, "synthetic_size", c.synthetic_size);
  } catch (const json::exception& e) {
    throw ParseError(0, std::string("config: ") + e.what());
  }
  const SweepGrids g = sweep_grids(c.metric);
  if (!j.contains("lambdas")) c.lambdas = g.lambdas;
  if (!j.contains("alphas")) c.alphas = g.alphas;
  c.validate();
  return c;
}

std::string SweepConfig::to_json() const {
  json j;
  j["metric"] = std::string(to_string(metric));
  j["msssim_form"] = msssim_form == MsSsimForm::one_minus ? "one_minus" : "negative";
  j["msssim_scales"] = msssim_scales;
  j["lambdas"] = lambdas;
  j["alphas"] = alphas;
  j["seeds"] = seeds;
  j["phase1_steps"] = phase1_steps;
  j["phase2_steps"] = phase2_steps;
  j["crop"] = crop;
  j["batch"] = batch;
  j["lr"] = lr;
  j["log_every"] = log_every;
  j["threshold"] = threshold;
  j["regularizer"] = std::string(to_string(regularizer));
  j["arch"] = arch;
  j["dataset"] = dataset;
  j["synthetic_count"] = synthetic_count;
  j["synthetic_size"] = synthetic_size;
  return j.dump(2);
}

void SweepConfig::validate() const {
  auto positive = [](const std::vector<double>& v, const char* what) {
    if (v.empty()) fail(ErrorKind::DomainError, std::string(what) + " grid is empty");
    for (double x : v)
      if (!(x > 0) || !std::isfinite(x)) fail(ErrorKind::DomainError, std::string(what) + " grid values must be > 0");
  };
  positive(lambdas, "lambda");
  positive(alphas, "alpha");
  if (seeds.empty()) fail(ErrorKind::DomainError, "at least one seed is required");
  if (phase1_steps < 0 || phase2_steps < 0) fail(ErrorKind::DomainError, "step counts must be >= 0");
  if (crop < 1 || batch < 1 || log_every < 1) fail(ErrorKind::DomainError, "crop, batch and log_every must be >= 1");
  if (!(lr > 0)) fail(ErrorKind::DomainError, "lr must be > 0");
  if (!(threshold > 0)) fail(ErrorKind::DomainError, "threshold must be > 0");
  if (msssim_scales < 1 || msssim_scales > 5) fail(ErrorKind::DomainError, "msssim_scales must be in 1..5");
  if (synthetic_count < 1 || synthetic_size < crop)
    fail(ErrorKind::DomainError, "synthetic images must be at least crop-sized");
}

NetworkSpec SweepConfig::resolve_arch() const { return cenic::resolve_arch(arch); }

Dataset SweepConfig::load_dataset(std::uint64_t seed) const {
  if (dataset.empty()) return Dataset::synthetic(synthetic_count, synthetic_size, synthetic_size, seed);
  return Dataset::from_dir(dataset);
}

}  // namespace cenic
