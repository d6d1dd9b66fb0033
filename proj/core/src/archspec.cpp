#include "cenic/archspec.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace cenic {

std::string_view to_string(LayerKind k) { return k == LayerKind::conv ? "conv" : "deconv"; }

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::gdn: return "gdn";
    case Activation::igdn: return "igdn";
    case Activation::relu: return "relu";
    case Activation::none: return "none";
  }
  return "none";
}

std::string_view to_string(Section s) {
  switch (s) {
    case Section::encoder: return "encoder";
    case Section::hyper_encoder: return "hyper_encoder";
    case Section::hyper_decoder_mean: return "hyper_decoder_mean";
    case Section::hyper_decoder_scale: return "hyper_decoder_scale";
    case Section::decoder: return "decoder";
  }
  return "?";
}

bool is_decode_side(Section s) {
  return s == Section::hyper_decoder_mean || s == Section::hyper_decoder_scale ||
         s == Section::decoder;
}

namespace {

class Cursor {
 public:
  Cursor(std::string_view text, std::size_t base) : s_(text), base_(base) {}

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r')) ++pos_;
  }
  bool done() const { return pos_ >= s_.size(); }
  std::size_t offset() const { return base_ + pos_; }

  [[noreturn]] void error(const std::string& what) const {
    throw ParseError(offset(), what + " at byte " + std::to_string(offset()));
  }

  int integer(const char* what) {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_) {
      pos_ = start;
      error(std::string("expected ") + what);
    }
    if (pos_ - start > 7) {
      pos_ = start;
      error(std::string(what) + " out of range");
    }
    int v = 0;
    std::from_chars(s_.data() + start, s_.data() + pos_, v);
    return v;
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= s_.size() || s_[pos_] != c) error(std::string("expected '") + c + "'");
    ++pos_;
  }

  bool accept_word(std::string_view w) {
    if (s_.substr(pos_, w.size()) == w) {
      pos_ += w.size();
      return true;
    }
    return false;
  }

  std::string_view word() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    return s_.substr(start, pos_ - start);
  }

 private:
  std::string_view s_;
  std::size_t base_;
  std::size_t pos_ = 0;
};

LayerSpec parse_layer_at(std::string_view text, std::size_t base) {
  Cursor c(text, base);
  LayerSpec l;
  const int k1 = c.integer("kernel size");
  c.skip_ws();
  if (!c.accept_word("x")) c.error("expected 'x' between kernel dimensions");
  const std::size_t k2_at = c.offset();
  const int k2 = c.integer("kernel size");
  if (k1 != k2)
    throw ParseError(k2_at, "non-square kernel " + std::to_string(k1) + "x" + std::to_string(k2) +
                                " at byte " + std::to_string(k2_at));
  l.kernel = k1;
  c.skip_ws();
  if (c.accept_word("deconv"))
    l.kind = LayerKind::deconv;
  else if (c.accept_word("conv"))
    l.kind = LayerKind::conv;
  else
    c.error("expected 'conv' or 'deconv'");
  c.expect(',');
  l.stride = c.integer("stride");
  if (l.stride < 1) fail(ErrorKind::InvalidStride, "stride must be >= 1 in '" + std::string(text) + "'");
  c.expect(',');
  const std::size_t f_at = c.offset();
  l.out_channels = c.integer("output channels");
  if (l.out_channels < 1) throw ParseError(f_at, "output channels must be >= 1");
  if (l.kernel < 1 || l.kernel % 2 == 0)
    throw ParseError(base, "kernel size must be odd and >= 1, got " + std::to_string(l.kernel));
  c.skip_ws();
  if (!c.done()) {
    c.expect('@');
    const std::size_t act_at = c.offset();
    const std::string_view w = c.word();
    if (w == "gdn") l.activation = Activation::gdn;
    else if (w == "igdn") l.activation = Activation::igdn;
    else if (w == "relu") l.activation = Activation::relu;
    else if (w == "none") l.activation = Activation::none;
    else throw ParseError(act_at, "unknown activation '" + std::string(w) + "'");
    c.skip_ws();
    if (!c.done()) c.error("trailing characters");
  }
  return l;
}

}  // namespace

LayerSpec parse_layer(std::string_view text) { return parse_layer_at(text, 0); }

std::string render(const LayerSpec& l) {
  std::string s = std::to_string(l.kernel) + "x" + std::to_string(l.kernel) +
                  std::string(to_string(l.kind)) + "," + std::to_string(l.stride) + "," +
                  std::to_string(l.out_channels);
  if (l.activation) s += "@" + std::string(to_string(*l.activation));
  return s;
}

std::vector<LayerSpec>& NetworkSpec::layers(Section s) {
  switch (s) {
    case Section::encoder: return encoder;
    case Section::hyper_encoder: return hyper_encoder;
    case Section::hyper_decoder_mean: return hyper_decoder_mean;
    case Section::hyper_decoder_scale: return hyper_decoder_scale;
    case Section::decoder: return decoder;
  }
  return decoder;
}

const std::vector<LayerSpec>& NetworkSpec::layers(Section s) const {
  return const_cast<NetworkSpec*>(this)->layers(s);
}

Activation NetworkSpec::activation(Section s, std::size_t index) const {
  const auto& ls = layers(s);
  if (ls.at(index).activation) return *ls[index].activation;
  if (index + 1 == ls.size()) return Activation::none;
  switch (s) {
    case Section::encoder: return Activation::gdn;
    case Section::decoder: return Activation::igdn;
    default: return Activation::relu;
  }
}

int NetworkSpec::in_channels(Section s, std::size_t index) const {
  if (index > 0) return layers(s).at(index - 1).out_channels;
  switch (s) {
    case Section::encoder: return 3;
    case Section::hyper_encoder: return latent_channels;
    case Section::hyper_decoder_mean:
    case Section::hyper_decoder_scale: return hyper_latent_channels;
    case Section::decoder: return latent_channels;
  }
  return 0;
}

bool NetworkSpec::same_structure(const NetworkSpec& o) const {
  return encoder == o.encoder && hyper_encoder == o.hyper_encoder &&
         hyper_decoder_mean == o.hyper_decoder_mean &&
         hyper_decoder_scale == o.hyper_decoder_scale && decoder == o.decoder &&
         latent_channels == o.latent_channels && hyper_latent_channels == o.hyper_latent_channels;
}

namespace {

struct Scale {
  std::uint64_t num = 1;
  std::uint64_t den = 1;
};

Scale scale_of(const std::vector<LayerSpec>& ls) {
  Scale s;
  for (const auto& l : ls) {
    if (l.kind == LayerKind::conv)
      s.den *= static_cast<std::uint64_t>(l.stride);
    else
      s.num *= static_cast<std::uint64_t>(l.stride);
  }
  return s;
}

bool closes(Scale a, Scale b) { return a.num * b.num == a.den * b.den; }

std::string factor_str(Scale s) {
  return std::to_string(s.num) + "/" + std::to_string(s.den);
}

}  // namespace

void validate(const NetworkSpec& spec) {
  for (Section s : kSections) {
    if (spec.layers(s).empty())
      fail(ErrorKind::MissingSection, "network has no [" + std::string(to_string(s)) + "] layers");
    for (const auto& l : spec.layers(s)) {
      if (l.stride < 1) fail(ErrorKind::InvalidStride, "stride < 1 in " + std::string(to_string(s)));
      if (l.kernel < 1 || l.kernel % 2 == 0 || l.out_channels < 1)
        fail(ErrorKind::ShapeError, "invalid layer " + render(l) + " in " + std::string(to_string(s)));
    }
  }
  if (spec.encoder.back().out_channels != spec.latent_channels)
    fail(ErrorKind::TopologyError, "encoder ends with " +
                                       std::to_string(spec.encoder.back().out_channels) +
                                       " channels but latent_channels = " +
                                       std::to_string(spec.latent_channels));
  if (spec.hyper_encoder.back().out_channels != spec.hyper_latent_channels)
    fail(ErrorKind::TopologyError, "hyper encoder ends with " +
                                       std::to_string(spec.hyper_encoder.back().out_channels) +
                                       " channels but hyper_latent_channels = " +
                                       std::to_string(spec.hyper_latent_channels));
  if (spec.decoder.back().out_channels != 3)
    fail(ErrorKind::TopologyError, "decoder must end with 3 output channels, got " +
                                       std::to_string(spec.decoder.back().out_channels));
  if (spec.hyper_decoder_mean.back().out_channels != spec.hyper_decoder_scale.back().out_channels)
    fail(ErrorKind::TopologyError,
         "mean and scale towers end with different widths (" +
             std::to_string(spec.hyper_decoder_mean.back().out_channels) + " vs " +
             std::to_string(spec.hyper_decoder_scale.back().out_channels) + ")");
  const Scale enc = scale_of(spec.encoder);
  const Scale dec = scale_of(spec.decoder);
  if (!closes(enc, dec))
    fail(ErrorKind::TopologyError, "encoder scales by " + factor_str(enc) + " but decoder by " +
                                       factor_str(dec) + "; reconstruction shape does not close");
  const Scale henc = scale_of(spec.hyper_encoder);
  for (Section t : {Section::hyper_decoder_mean, Section::hyper_decoder_scale}) {
    const Scale tw = scale_of(spec.layers(t));
    if (!closes(henc, tw))
      fail(ErrorKind::TopologyError, std::string(to_string(t)) + " scales by " + factor_str(tw) +
                                         " but hyper encoder by " + factor_str(henc));
  }
}

NetworkSpec parse_network(std::string_view doc) {
  NetworkSpec spec;
  std::optional<int> latent;
  std::optional<int> hyper;
  std::array<bool, 5> seen{};
  std::optional<Section> current;
  std::size_t pos = 0;
  while (pos <= doc.size()) {
    std::size_t end = doc.find('\n', pos);
    if (end == std::string_view::npos) end = doc.size();
    std::string_view line = doc.substr(pos, end - pos);
    std::size_t base = pos;
    pos = end + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front()))) {
      line.remove_prefix(1);
      ++base;
    }
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.remove_suffix(1);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(base, "unterminated section header");
      const std::string_view name = line.substr(1, line.size() - 2);
      current.reset();
      for (Section s : kSections)
        if (name == to_string(s)) current = s;
      if (!current) throw ParseError(base, "unknown section [" + std::string(name) + "]");
      if (seen[static_cast<int>(*current)])
        throw ParseError(base, "duplicate section [" + std::string(name) + "]");
      seen[static_cast<int>(*current)] = true;
      continue;
    }
    if (const auto eq = line.find('='); eq != std::string_view::npos) {
      if (current) throw ParseError(base, "key/value lines must precede the first section");
      auto trim = [](std::string_view v) {
        while (!v.empty() && std::isspace(static_cast<unsigned char>(v.front()))) v.remove_prefix(1);
        while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back()))) v.remove_suffix(1);
        return v;
      };
      const std::string_view key = trim(line.substr(0, eq));
      const std::string_view value = trim(line.substr(eq + 1));
      auto as_int = [&](std::string_view v) {
        int out = 0;
        const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
        if (r.ec != std::errc() || r.ptr != v.data() + v.size() || out < 1)
          throw ParseError(base + eq + 1, "expected a positive integer for " + std::string(key));
        return out;
      };
      if (key == "name") spec.name = std::string(value);
      else if (key == "gdn_mode") {
        if (value == "classic") spec.gdn_mode = GdnMode::classic;
        else if (value == "simplified") spec.gdn_mode = GdnMode::simplified;
        else throw ParseError(base + eq + 1, "gdn_mode must be classic or simplified");
      } else if (key == "latent_channels") latent = as_int(value);
      else if (key == "hyper_latent_channels") hyper = as_int(value);
      else throw ParseError(base, "unknown key '" + std::string(key) + "'");
      continue;
    }
    if (!current) throw ParseError(base, "layer outside of any section");
    spec.layers(*current).push_back(parse_layer_at(line, base));
  }
  for (Section s : kSections)
    if (!seen[static_cast<int>(s)])
      fail(ErrorKind::MissingSection, "missing section [" + std::string(to_string(s)) + "]");
  for (Section s : kSections)
    if (spec.layers(s).empty())
      fail(ErrorKind::MissingSection, "section [" + std::string(to_string(s)) + "] is empty");
  spec.latent_channels = latent.value_or(spec.encoder.back().out_channels);
  spec.hyper_latent_channels = hyper.value_or(spec.hyper_encoder.back().out_channels);
  validate(spec);
  return spec;
}

std::string render_network(const NetworkSpec& spec) {
  std::ostringstream os;
  if (!spec.name.empty()) os << "name = " << spec.name << '\n';
  os << "gdn_mode = " << to_string(spec.gdn_mode) << '\n';
  os << "latent_channels = " << spec.latent_channels << '\n';
  os << "hyper_latent_channels = " << spec.hyper_latent_channels << '\n';
  for (Section s : kSections) {
    os << '\n' << '[' << to_string(s) << "]\n";
    for (const auto& l : spec.layers(s)) os << render(l) << '\n';
  }
  return os.str();
}

namespace {

void out_dims(const LayerSpec& l, int h, int w, int& oh, int& ow) {
  if (l.kind == LayerKind::conv) {
    oh = (h + l.stride - 1) / l.stride;
    ow = (w + l.stride - 1) / l.stride;
  } else {
    oh = h * l.stride;
    ow = w * l.stride;
  }
}

}  // namespace

std::uint64_t flops_layer(const LayerSpec& l, int in_channels, int in_h, int in_w) {
  int oh = 0;
  int ow = 0;
  out_dims(l, in_h, in_w, oh, ow);
  const std::uint64_t outs = static_cast<std::uint64_t>(l.out_channels) * oh * ow;
  return 2ull * l.kernel * l.kernel * static_cast<std::uint64_t>(in_channels) * outs + outs;
}

FlopReport flops_network(const NetworkSpec& spec, int input_h, int input_w, FlopScope scope,
                         const NetworkSpec* reference) {
  if (input_h < 1 || input_w < 1 || input_h % 64 != 0 || input_w % 64 != 0)
    fail(ErrorKind::DomainError, "FLOP reference resolution must be a positive multiple of 64");
  FlopReport rep;
  rep.scope = scope;
  rep.input_h = input_h;
  rep.input_w = input_w;

  auto walk = [&](Section s, int h, int w, int& oh, int& ow) {
    const auto& ls = spec.layers(s);
    for (std::size_t i = 0; i < ls.size(); ++i) {
      LayerFlops lf;
      lf.section = s;
      lf.index = i;
      lf.layer = ls[i];
      lf.in_channels = spec.in_channels(s, i);
      lf.in_h = h;
      lf.in_w = w;
      out_dims(ls[i], h, w, lf.out_h, lf.out_w);
      lf.flops = flops_layer(ls[i], lf.in_channels, h, w);
      h = lf.out_h;
      w = lf.out_w;
      if (scope == FlopScope::all || is_decode_side(s)) {
        rep.subtotal[static_cast<int>(s)] += lf.flops;
        rep.total += lf.flops;
        rep.layers.push_back(lf);
      }
    }
    oh = h;
    ow = w;
  };
  int lh = 0, lw = 0, zh = 0, zw = 0, dh = 0, dw = 0;
  walk(Section::encoder, input_h, input_w, lh, lw);
  walk(Section::hyper_encoder, lh, lw, zh, zw);
  walk(Section::hyper_decoder_mean, zh, zw, dh, dw);
  walk(Section::hyper_decoder_scale, zh, zw, dh, dw);
  walk(Section::decoder, lh, lw, dh, dw);

  if (reference) {
    const FlopReport ref = flops_network(*reference, input_h, input_w, scope);
    rep.reference = reference->name;
    rep.ratio = ref.total == 0 ? 0.0 : static_cast<double>(rep.total) / static_cast<double>(ref.total);
  }
  return rep;
}

std::string_view to_string(Preset p) {
  switch (p) {
    case Preset::mean_scale: return "mean_scale";
    case Preset::larger_mean_scale: return "larger_mean_scale";
    case Preset::cenic_1: return "cenic_1";
    case Preset::cenic_2_t3: return "cenic_2_t3";
    case Preset::cenic_5: return "cenic_5";
    case Preset::cenic_2_t5: return "cenic_2_t5";
    case Preset::cenic_10: return "cenic_10";
    case Preset::cenic_32: return "cenic_32";
    case Preset::cenic_37: return "cenic_37";
  }
  return "?";
}

Preset parse_preset(std::string_view name) {
  for (Preset p : kPresets)
    if (to_string(p) == name) return p;
  if (name == "cenic_2") return Preset::cenic_2_t3;
  fail(ErrorKind::UnknownPreset, "unknown preset '" + std::string(name) + "'");
}

namespace {

struct Fix {
  Section section;
  std::size_t index;
  const char* replacement;
  const char* note;
};

struct PresetTable {
  const char* name;
  std::vector<const char*> encoder;
  std::vector<const char*> hyper_encoder;
  std::vector<const char*> hyper_decoder;  // as printed; the CENIC tables list one tower
  std::vector<const char*> decoder;
  bool printed_tower_is_mean_only;
  std::vector<Fix> fixes;
};

const std::vector<const char*> kLargerEncoder(4, "5x5conv,2,320");
const std::vector<const char*> kLargerHyperEncoder = {"3x3conv,1,640", "5x5conv,2,640",
                                                      "5x5conv,2,320"};
const std::vector<const char*> kLargerTower = {"5x5deconv,2,640", "5x5deconv,2,640",
                                               "3x3deconv,1,320"};

constexpr const char* kConvAsDeconv =
    "printed as conv in a decoder (upsampling) position; read as deconv";

PresetTable table_for(Preset p) {
  switch (p) {
    case Preset::mean_scale:
      return {"mean_scale",
              std::vector<const char*>(4, "5x5conv,2,192"),
              {"3x3conv,1,320", "5x5conv,2,320", "5x5conv,2,320"},
              {"5x5deconv,2,320", "5x5deconv,2,320", "3x3deconv,1,320"},
              {"5x5deconv,2,192", "5x5deconv,2,192", "5x5deconv,2,192", "5x5deconv,1,3"},
              false,
              {{Section::decoder, 3, "5x5deconv,2,3",
                "last decoder stride printed as 1 (total upsampling 8 vs encoder 16); set to 2"}}};
    case Preset::larger_mean_scale:
      return {"larger_mean_scale",
              kLargerEncoder,
              kLargerHyperEncoder,
              kLargerTower,
              {"5x5deconv,2,320", "5x5deconv,2,320", "5x5deconv,2,320", "5x5deconv,1,3"},
              false,
              {{Section::decoder, 3, "5x5deconv,2,3",
                "last decoder stride printed as 1 (total upsampling 8 vs encoder 16); set to 2"}}};
    case Preset::cenic_1:
      return {"cenic_1", kLargerEncoder, kLargerHyperEncoder,
              {"5x5deconv,2,76", "5x5deconv,2,107", "3x3deconv,1,320"},
              {"5x5deconv,2,150", "5x5deconv,2,89", "5x5deconv,2,81", "5x5deconv,2,3"}, true, {}};
    case Preset::cenic_2_t3:
      return {"cenic_2_t3", kLargerEncoder, kLargerHyperEncoder,
              {"5x5deconv,2,10", "5x5deconv,2,10", "3x3deconv,1,320"},
              {"5x5deconv,2,25", "5x5deconv,2,21", "5x5deconv,2,19", "5x5deconv,2,3"}, true, {}};
    case Preset::cenic_5:
      return {"cenic_5", kLargerEncoder, kLargerHyperEncoder,
              {"5x5deconv,2,76", "5x5deconv,2,107", "3x3deconv,1,320"},
              {"5x5conv,2,79", "5x5conv,2,22", "5x5conv,2,43", "5x5conv,2,3"}, true,
              {{Section::decoder, 0, "5x5deconv,2,79", kConvAsDeconv},
               {Section::decoder, 1, "5x5deconv,2,22", kConvAsDeconv},
               {Section::decoder, 2, "5x5deconv,2,43", kConvAsDeconv},
               {Section::decoder, 3, "5x5deconv,2,3", kConvAsDeconv}}};
    case Preset::cenic_2_t5:
      return {"cenic_2_t5", kLargerEncoder, kLargerHyperEncoder,
              {"5x5deconv,2,40", "5x5deconv,2,67", "3x3deconv,1,320"},
              {"5x5deconv,2,149", "5x5deconv,2,35", "5x5deconv,2,39", "5x5deconv,2,3"}, true, {}};
    case Preset::cenic_10:
      return {"cenic_10", kLargerEncoder, kLargerHyperEncoder,
              {"5x5deconv,2,66", "5x5deconv,2,95", "3x3deconv,1,320"},
              {"5x5deconv,2,180", "5x5deconv,2,58", "5x5deconv2,73", "5x5deconv2"}, true,
              {{Section::decoder, 2, "5x5deconv,2,73", "printed '5x5deconv2,73'; missing comma restored"},
               {Section::decoder, 3, "5x5deconv,2,3",
                "printed '5x5deconv2'; comma and the pinned 3 output channels restored"}}};
    case Preset::cenic_32:
      return {"cenic_32", kLargerEncoder, kLargerHyperEncoder,
              {"5x5deconv,2,246", "5x5deconv,2,170", "3x3deconv,1,320"},
              {"5x5conv,2,100", "5x5conv,2,126", "5x5conv,2,52", "5x5conv,2,3"}, true,
              {{Section::decoder, 0, "5x5deconv,2,100", kConvAsDeconv},
               {Section::decoder, 1, "5x5deconv,2,126", kConvAsDeconv},
               {Section::decoder, 2, "5x5deconv,2,52", kConvAsDeconv},
               {Section::decoder, 3, "5x5deconv,2,3", kConvAsDeconv}}};
    case Preset::cenic_37:
      return {"cenic_37", kLargerEncoder, kLargerHyperEncoder,
              {"5x5deconv,2,110", "5x5deconv,2,91", "3x3deconv,1,320"},
              {"5x5deconv,2,52", "5x5deconv,2,99", "5x5deconv,2,14", "5x5deconv,2,3"}, true, {}};
  }
  fail(ErrorKind::UnknownPreset, "unknown preset");
}

std::vector<LayerSpec> parse_list(const std::vector<const char*>& cells) {
  std::vector<LayerSpec> out;
  for (const char* c : cells) out.push_back(parse_layer(c));
  return out;
}

}  // namespace

PresetInfo preset_info(Preset p) {
  const PresetTable t = table_for(p);
  PresetInfo info;

  std::ostringstream printed;
  auto dump = [&](const char* title, const std::vector<const char*>& cells) {
    printed << '[' << title << "]\n";
    for (const char* c : cells) printed << c << '\n';
  };
  if (!t.printed_tower_is_mean_only) {
    dump("encoder", t.encoder);
    dump("hyper_encoder", t.hyper_encoder);
  }
  dump("hyper_decoder", t.hyper_decoder);
  dump("decoder", t.decoder);
  info.printed = printed.str();

  std::vector<const char*> decoder = t.decoder;
  for (const Fix& f : t.fixes) {
    decoder.at(f.index) = f.replacement;
    info.corrections.push_back(std::string(to_string(f.section)) + "[" + std::to_string(f.index) +
                               "]: " + f.note);
  }

  NetworkSpec& s = info.spec;
  s.name = t.name;
  s.encoder = parse_list(t.encoder);
  s.hyper_encoder = parse_list(t.hyper_encoder);
  s.hyper_decoder_mean = parse_list(t.hyper_decoder);
  s.hyper_decoder_scale = t.printed_tower_is_mean_only ? parse_list(kLargerTower) : s.hyper_decoder_mean;
  s.decoder = parse_list(decoder);
  s.latent_channels = s.encoder.back().out_channels;
  s.hyper_latent_channels = s.hyper_encoder.back().out_channels;

  if (t.printed_tower_is_mean_only) {
    info.corrections.push_back(
        "encoder, hyper_encoder: not printed for CENIC models; inherited from larger_mean_scale");
    info.corrections.push_back(
        "hyper_decoder: the single printed tower is used as the mean tower; the scale tower keeps "
        "the larger_mean_scale widths (640, 640, 320)");
  }
  if (s.hyper_decoder_mean.back().out_channels != s.latent_channels)
    info.corrections.push_back("hyper_decoder: towers end with " +
                               std::to_string(s.hyper_decoder_mean.back().out_channels) +
                               " channels but latents have " + std::to_string(s.latent_channels) +
                               "; the codec adds a 1x1 projection per tower");
  validate(s);
  return info;
}

NetworkSpec preset(Preset p) { return preset_info(p).spec; }

NetworkSpec preset(std::string_view name) { return preset(parse_preset(name)); }

NetworkSpec tiny_spec(int width, int latent, int hyper, int hyper_width) {
  auto conv = [](int k, int s, int f) { return LayerSpec{LayerKind::conv, k, s, f, std::nullopt}; };
  auto deconv = [](int k, int s, int f) {
    return LayerSpec{LayerKind::deconv, k, s, f, std::nullopt};
  };
  NetworkSpec s;
  s.name = "tiny";
  s.encoder = {conv(5, 2, width), conv(5, 2, width), conv(5, 2, width), conv(5, 2, latent)};
  s.hyper_encoder = {conv(3, 1, hyper_width), conv(5, 2, hyper_width), conv(5, 2, hyper)};
  s.hyper_decoder_mean = {deconv(5, 2, hyper_width), deconv(5, 2, hyper_width), deconv(3, 1, latent)};
  s.hyper_decoder_scale = s.hyper_decoder_mean;
  s.decoder = {deconv(5, 2, width), deconv(5, 2, width), deconv(5, 2, width), deconv(5, 2, 3)};
  s.latent_channels = latent;
  s.hyper_latent_channels = hyper;
  validate(s);
  return s;
}

NetworkSpec resolve_arch(const std::string& name) {
  if (std::filesystem::is_regular_file(name)) {
    std::ifstream in(name);
    std::stringstream ss;
    ss << in.rdbuf();
    NetworkSpec s = parse_network(ss.str());
    validate(s);
    return s;
  }
  if (name == "tiny") return tiny_spec();
  return preset(name);
}

}  // namespace cenic
