#include "cenic/shrink.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <sstream>

namespace cenic {

namespace {

constexpr std::array<Section, 3> kRegularized = {Section::hyper_decoder_mean, Section::hyper_decoder_scale,
                                                 Section::decoder};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

Section parse_section(const std::string& s) {
  for (Section sec : kSections)
    if (to_string(sec) == s) return sec;
  fail(ErrorKind::ReportMismatch, "unknown section '" + s + "' in structure report");
}

}  // namespace

namespace {

GroupLasso group_lasso_impl(const Tensor& kernel, const Tensor* bias) {
  const int f = kernel.n();
  const std::size_t per = kernel.size() / f;
  const double rd = 1.0 / std::sqrt(static_cast<double>(per + (bias ? 1 : 0)));
  GroupLasso g;
  g.norms.values.resize(f);
  for (int j = 0; j < f; ++j) {
    const double* k = kernel.ptr() + j * per;
    double sq = bias ? (*bias)[j] * (*bias)[j] : 0.0;
    for (std::size_t i = 0; i < per; ++i) sq += k[i] * k[i];
    g.norms.values[j] = std::sqrt(sq) * rd;
    g.total += g.norms.values[j];
  }
  return g;
}

}  // namespace

GroupLasso group_lasso_layer(const ConvWeights& w) { return group_lasso_impl(w.kernel, &w.bias); }

GroupLasso group_lasso_layer(const Tensor& kernel) { return group_lasso_impl(kernel, nullptr); }

std::string_view to_string(RegularizerMode m) { return m == RegularizerMode::uniform ? "uniform" : "flop_weighted"; }

RegularizerMode parse_regularizer_mode(std::string_view s) {
  if (s == "uniform") return RegularizerMode::uniform;
  if (s == "flop_weighted") return RegularizerMode::flop_weighted;
  fail(ErrorKind::DomainError, "unknown regularizer mode '" + std::string(s) + "'");
}

bool is_pinned(const NetworkSpec& spec, Section s, std::size_t index) {
  if (!is_decode_side(s)) return false;
  return index + 1 == spec.layers(s).size();
}

bool is_prunable(const NetworkSpec& spec, Section s, std::size_t index) {
  return is_decode_side(s) && index < spec.layers(s).size() && !is_pinned(spec, s, index);
}

std::vector<double> regularizer_layer_weights(const NetworkSpec& spec, RegularizerMode mode) {
  std::vector<double> w;
  if (mode == RegularizerMode::uniform) {
    for (Section s : kRegularized)
      for (std::size_t i = 0; i < spec.layers(s).size(); ++i)
        if (is_prunable(spec, s, i)) w.push_back(1.0);
    return w;
  }
  const FlopReport r = flops_network(spec, 256, 256, FlopScope::decode_side);
  for (Section s : kRegularized)
    for (const LayerFlops& lf : r.layers)
      if (lf.section == s && is_prunable(spec, s, lf.index))
        w.push_back(static_cast<double>(lf.flops) / lf.layer.out_channels);
  double mean = 0;
  for (double v : w) mean += v;
  mean /= std::max<std::size_t>(w.size(), 1);
  for (double& v : w) v /= mean;
  return w;
}

double flop_reg_total(const CodecModel& model, RegularizerMode mode) {
  const auto weights = regularizer_layer_weights(model.spec, mode);
  double total = 0;
  std::size_t k = 0;
  for (Section s : kRegularized)
    for (std::size_t i = 0; i < model.layers(s).size(); ++i)
      if (is_prunable(model.spec, s, i)) total += weights[k++] * group_lasso_layer(model.layers(s)[i].weights).total;
  return total;
}

namespace ad {

Var group_lasso(Var kernel, Var bias) {
  const Tensor& kv = kernel.value();
  const Tensor& bv = bias.value();
  if (bv.shape() != Shape{kv.n(), 1, 1, 1})
    fail(ErrorKind::ShapeError, "group_lasso: bias " + bv.shape().str() + " for kernel " + kv.shape().str());
  const GroupLasso g = group_lasso_layer(ConvWeights{kv, bv});
  return kernel.tape()->record(
      "group_lasso", Tensor::scalar(g.total), {kernel, bias}, [kernel, bias, g](Tape& tp, const Tensor& up) {
        const Tensor& k = tp.value(kernel);
        const Tensor& b = tp.value(bias);
        const std::size_t per = k.size() / k.n();
        const double rd = 1.0 / std::sqrt(static_cast<double>(per + 1));
        Tensor gk(k.shape());
        Tensor gb(b.shape());
        for (int j = 0; j < k.n(); ++j) {
          const double norm = g.norms.values[j] / rd;
          if (norm == 0) continue;
          const double f = up[0] * rd / norm;
          for (std::size_t i = 0; i < per; ++i) gk[j * per + i] = f * k[j * per + i];
          gb[j] = f * b[j];
        }
        tp.accumulate(kernel, gk);
        tp.accumulate(bias, gb);
      });
}

Var flop_reg_total(const CodecModel& model, std::span<const Var> params, RegularizerMode mode) {
  const auto named = model.parameters();
  if (params.size() != named.size())
    fail(ErrorKind::ShapeError, "flop_reg_total: expected " + std::to_string(named.size()) + " parameter Vars");
  const auto weights = regularizer_layer_weights(model.spec, mode);
  Var total;
  std::size_t k = 0;
  for (Section s : kRegularized)
    for (std::size_t i = 0; i < model.layers(s).size(); ++i) {
      if (!is_prunable(model.spec, s, i)) continue;
      const std::string prefix = std::string(to_string(s)) + "." + std::to_string(i) + ".";
      std::size_t at = 0;
      while (named[at].name != prefix + "kernel") ++at;
      Var term = scale(group_lasso(params[at], params[at + 1]), weights[k++]);
      total = total.valid() ? add(total, term) : term;
    }
  if (!total.valid()) {
    Tape* tp = params.empty() ? nullptr : params[0].tape();
    if (!tp) fail(ErrorKind::ShapeError, "flop_reg_total: no parameters");
    return tp->constant(Tensor::scalar(0.0));
  }
  return total;
}

}  // namespace ad

StructureReport extract_structure(const CodecModel& model, double threshold) {
  if (!(threshold > 0)) fail(ErrorKind::DomainError, "activity threshold must be > 0");
  StructureReport r;
  r.spec_name = model.spec.name;
  r.threshold = threshold;
  for (Section s : kSections) {
    if (!is_decode_side(s)) continue;
    for (std::size_t i = 0; i < model.layers(s).size(); ++i) {
      LayerActivity a;
      a.section = s;
      a.index = i;
      a.original = model.spec.layers(s)[i].out_channels;
      a.pinned = is_pinned(model.spec, s, i);
      a.norms = group_lasso_layer(model.layers(s)[i].weights).norms.values;
      for (int j = 0; j < a.original; ++j)
        if (a.pinned || a.norms[j] > threshold) a.kept.push_back(j);
      if (a.kept.empty()) {
        a.clamped = true;
        a.kept.push_back(static_cast<int>(std::max_element(a.norms.begin(), a.norms.end()) - a.norms.begin()));
        r.warnings.push_back(std::string(to_string(s)) + "." + std::to_string(i) +
                             ": no output above threshold, keeping the largest");
      }
      a.active = static_cast<int>(a.kept.size());
      r.layers.push_back(std::move(a));
    }
  }
  r.flops_before = flops_network(model.spec, r.flop_height, r.flop_width, FlopScope::decode_side).total;
  r.flops_after = flops_network(shrink_network(model.spec, r), r.flop_height, r.flop_width, FlopScope::decode_side).total;
  return r;
}

NetworkSpec shrink_network(const NetworkSpec& spec, const StructureReport& report) {
  NetworkSpec out = spec;
  std::size_t expected = 0;
  for (Section s : kSections)
    if (is_decode_side(s)) expected += spec.layers(s).size();
  if (report.layers.size() != expected)
    fail(ErrorKind::ReportMismatch, "report lists " + std::to_string(report.layers.size()) +
                                        " decode-side layers, spec has " + std::to_string(expected));
  for (const LayerActivity& a : report.layers) {
    if (!is_decode_side(a.section) || a.index >= spec.layers(a.section).size())
      fail(ErrorKind::ReportMismatch, "report layer outside the decode side of the spec");
    LayerSpec& l = out.layers(a.section)[a.index];
    const std::string where = std::string(to_string(a.section)) + "." + std::to_string(a.index);
    if (a.original != l.out_channels)
      fail(ErrorKind::ReportMismatch, where + ": report width " + std::to_string(a.original) + ", spec width " +
                                          std::to_string(l.out_channels));
    if (a.active < 1 || a.active > a.original)
      fail(ErrorKind::ReportMismatch, where + ": active count " + std::to_string(a.active) + " out of range");
    if (is_pinned(spec, a.section, a.index)) {
      if (a.active != a.original) fail(ErrorKind::ReportMismatch, where + ": pinned layer reported narrower");
      continue;
    }
    l.out_channels = a.active;
  }
  validate(out);
  return out;
}

std::string StructureReport::to_text() const {
  std::ostringstream o;
  o.precision(17);
  o << "spec = " << spec_name << "\n";
  o << "threshold = " << threshold << "\n";
  o << "lambda = " << lambda << "\n";
  o << "alpha = " << alpha << "\n";
  o << "flop_input = " << flop_height << "x" << flop_width << "\n";
  o << "flops_before = " << flops_before << "\n";
  o << "flops_after = " << flops_after << "\n";
  for (const auto& w : warnings) o << "warning = " << w << "\n";
  for (const LayerActivity& a : layers) {
    o << "layer = " << to_string(a.section) << " " << a.index << " " << a.original << " " << a.active << " "
      << (a.pinned ? "pinned" : "prunable") << " " << (a.clamped ? "clamped" : "ok") << " ";
    for (std::size_t i = 0; i < a.kept.size(); ++i) o << (i ? "," : "") << a.kept[i];
    o << "\n";
  }
  return o.str();
}

StructureReport StructureReport::from_text(std::string_view text) {
  StructureReport r;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) fail(ErrorKind::ReportMismatch, "malformed report line: " + t);
    const std::string key = trim(t.substr(0, eq));
    const std::string val = trim(t.substr(eq + 1));
    if (key == "spec") {
      r.spec_name = val;
    } else if (key == "threshold") {
      r.threshold = std::stod(val);
    } else if (key == "lambda") {
      r.lambda = std::stod(val);
    } else if (key == "alpha") {
      r.alpha = std::stod(val);
    } else if (key == "flop_input") {
      if (std::sscanf(val.c_str(), "%dx%d", &r.flop_height, &r.flop_width) != 2)
        fail(ErrorKind::ReportMismatch, "malformed flop_input: " + val);
    } else if (key == "flops_before") {
      r.flops_before = std::stoull(val);
    } else if (key == "flops_after") {
      r.flops_after = std::stoull(val);
    } else if (key == "warning") {
      r.warnings.push_back(val);
    } else if (key == "layer") {
      std::istringstream ls(val);
      std::string section, pinned, clamped, kept;
      LayerActivity a;
      if (!(ls >> section >> a.index >> a.original >> a.active >> pinned >> clamped))
        fail(ErrorKind::ReportMismatch, "malformed layer line: " + val);
      ls >> kept;
      a.section = parse_section(section);
      a.pinned = pinned == "pinned";
      a.clamped = clamped == "clamped";
      std::istringstream ks(kept);
      std::string tok;
      while (std::getline(ks, tok, ',')) a.kept.push_back(std::stoi(tok));
      r.layers.push_back(std::move(a));
    } else {
      fail(ErrorKind::ReportMismatch, "unknown report key '" + key + "'");
    }
  }
  return r;
}

}  // namespace cenic
