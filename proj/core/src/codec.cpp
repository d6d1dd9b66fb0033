#include "cenic/codec.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "cenic/conv.hpp"
#include "cenic/timing.hpp"

namespace cenic {

namespace {

constexpr char kWeightsMagic[4] = {'C', 'E', 'N', 'W'};
constexpr char kStreamMagic[4] = {'C', 'E', 'N', 'C'};
constexpr std::uint32_t kWeightsVersion = 1;

bool has_gdn(Activation a) { return a == Activation::gdn || a == Activation::igdn; }

template <typename Model, typename Fn>
void visit_params(Model& m, Fn&& fn) {
  for (Section s : kSections) {
    auto& ls = m.layers(s);
    for (std::size_t i = 0; i < ls.size(); ++i) {
      const std::string p = std::string(to_string(s)) + "." + std::to_string(i) + ".";
      fn(p + "kernel", ls[i].weights.kernel);
      fn(p + "bias", ls[i].weights.bias);
      if (ls[i].gdn) {
        fn(p + "gdn.beta", ls[i].gdn->beta);
        fn(p + "gdn.gamma", ls[i].gdn->gamma);
      }
    }
  }
  fn(std::string("mean_proj.kernel"), m.mean_proj.kernel);
  fn(std::string("mean_proj.bias"), m.mean_proj.bias);
  fn(std::string("scale_proj.kernel"), m.scale_proj.kernel);
  fn(std::string("scale_proj.bias"), m.scale_proj.bias);
  fn(std::string("prior.location"), m.prior_location);
  fn(std::string("prior.log_scale"), m.prior_log_scale);
}

void expect_shape(const std::string& name, const Shape& got, const Shape& want) {
  if (got != want) fail(ErrorKind::ShapeError, name + ": expected " + want.str() + ", got " + got.str());
}

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out.push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void i32(std::int32_t v) { le(static_cast<std::uint32_t>(v), 4); }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    le(bits, 8);
  }
  void bytes(std::span<const std::uint8_t> b) { out.insert(out.end(), b.begin(), b.end()); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
  }
  std::vector<std::uint8_t> out;

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> in, ErrorKind kind) : in_(in), kind_(kind) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() {
    const std::uint64_t bits = le(8);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::span<const std::uint8_t> bytes(std::size_t n) {
    need(n);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::string str() {
    const auto b = bytes(u32());
    return std::string(b.begin(), b.end());
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(std::size_t n) {
    if (in_.size() - pos_ < n) fail(kind_, "unexpected end of data at byte " + std::to_string(pos_));
  }
  std::uint64_t le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
  ErrorKind kind_;
};

template <typename T>
BasicTensor<T> apply_activation(BasicTensor<T> x, Activation a, const std::optional<BasicGdnParams<T>>& gdn) {
  switch (a) {
    case Activation::gdn:
    case Activation::igdn:
      return gdn_eval(x, *gdn);
    case Activation::relu:
      for (T& v : x.data()) v = v > T(0) ? v : T(0);
      return x;
    case Activation::none:
      break;
  }
  return x;
}

template <typename T>
BasicTensor<T> run_layer(const LayerSpec& spec, const BasicConvWeights<T>& w, const BasicTensor<T>& x) {
  return spec.kind == LayerKind::conv ? conv2d(x, w, spec.stride) : deconv2d(x, w, spec.stride);
}

void section_dims(const NetworkSpec& spec, Section s, int& h, int& w) {
  for (const LayerSpec& l : spec.layers(s)) {
    if (l.kind == LayerKind::conv) {
      h = (h + l.stride - 1) / l.stride;
      w = (w + l.stride - 1) / l.stride;
    } else {
      h *= l.stride;
      w *= l.stride;
    }
  }
}

std::vector<CdfTable> hyper_tables(const Tensor& location, const Tensor& log_scale) {
  std::vector<CdfTable> t;
  for (int c = 0; c < location.n(); ++c) t.push_back(build_logistic_cdf(location[c], std::exp(log_scale[c])));
  return t;
}

}  // namespace

template <typename T>
std::vector<NamedParam<T>> BasicCodecModel<T>::parameters() {
  std::vector<NamedParam<T>> out;
  visit_params(*this, [&](const std::string& n, BasicTensor<T>& t) { out.push_back({n, &t}); });
  return out;
}

template <typename T>
std::vector<ConstNamedParam<T>> BasicCodecModel<T>::parameters() const {
  std::vector<ConstNamedParam<T>> out;
  visit_params(*this, [&](const std::string& n, const BasicTensor<T>& t) { out.push_back({n, &t}); });
  return out;
}

template <typename T>
std::size_t BasicCodecModel<T>::parameter_count() const {
  std::size_t n = 0;
  visit_params(*this, [&](const std::string&, const BasicTensor<T>& t) { n += t.size(); });
  return n;
}

template <typename T>
void BasicCodecModel<T>::validate() const {
  cenic::validate(spec);
  for (Section s : kSections) {
    const auto& specs = spec.layers(s);
    const auto& ls = layers(s);
    if (ls.size() != specs.size())
      fail(ErrorKind::ShapeError, std::string(to_string(s)) + ": " + std::to_string(ls.size()) + " weight sets for " +
                                      std::to_string(specs.size()) + " layers");
    for (std::size_t i = 0; i < ls.size(); ++i) {
      const std::string name = std::string(to_string(s)) + "." + std::to_string(i);
      const LayerSpec& l = specs[i];
      expect_shape(name + ".kernel", ls[i].weights.kernel.shape(),
                   {l.out_channels, spec.in_channels(s, i), l.kernel, l.kernel});
      expect_shape(name + ".bias", ls[i].weights.bias.shape(), {l.out_channels, 1, 1, 1});
      const Activation a = spec.activation(s, i);
      if (has_gdn(a) != ls[i].gdn.has_value())
        fail(ErrorKind::ShapeError, name + ": GDN parameters do not match the activation");
      if (ls[i].gdn) {
        if (ls[i].gdn->channels() != l.out_channels)
          fail(ErrorKind::ChannelMismatch, name + ": GDN over " + std::to_string(ls[i].gdn->channels()) +
                                               " channels, layer has " + std::to_string(l.out_channels));
        ls[i].gdn->validate();
      }
    }
  }
  const int tw = spec.hyper_decoder_mean.back().out_channels;
  expect_shape("mean_proj.kernel", mean_proj.kernel.shape(), {spec.latent_channels, tw, 1, 1});
  expect_shape("mean_proj.bias", mean_proj.bias.shape(), {spec.latent_channels, 1, 1, 1});
  expect_shape("scale_proj.kernel", scale_proj.kernel.shape(), {spec.latent_channels, tw, 1, 1});
  expect_shape("scale_proj.bias", scale_proj.bias.shape(), {spec.latent_channels, 1, 1, 1});
  expect_shape("prior.location", prior_location.shape(), {spec.hyper_latent_channels, 1, 1, 1});
  expect_shape("prior.log_scale", prior_log_scale.shape(), {spec.hyper_latent_channels, 1, 1, 1});
}

template struct BasicCodecModel<double>;
template struct BasicCodecModel<float>;

CodecModel init_model(const NetworkSpec& spec, std::uint64_t seed) {
  validate(spec);
  std::mt19937_64 rng(seed);
  auto glorot = [&](int out, int in, int k) {
    const double b = std::sqrt(6.0 / (static_cast<double>(in + out) * k * k));
    std::uniform_real_distribution<double> u(-b, b);
    ConvWeights w{Tensor({out, in, k, k}), Tensor({out, 1, 1, 1})};
    for (double& v : w.kernel.data()) v = u(rng);
    return w;
  };
  CodecModel m;
  m.spec = spec;
  for (Section s : kSections) {
    const auto& specs = spec.layers(s);
    for (std::size_t i = 0; i < specs.size(); ++i) {
      BasicCodecLayer<double> l{glorot(specs[i].out_channels, spec.in_channels(s, i), specs[i].kernel), std::nullopt};
      const Activation a = spec.activation(s, i);
      if (has_gdn(a))
        l.gdn = gdn_init(specs[i].out_channels, spec.gdn_mode,
                         a == Activation::gdn ? GdnDirection::divide : GdnDirection::multiply);
      m.layers(s).push_back(std::move(l));
    }
  }
  const int tw = spec.hyper_decoder_mean.back().out_channels;
  m.mean_proj = glorot(spec.latent_channels, tw, 1);
  m.scale_proj = glorot(spec.latent_channels, tw, 1);
  m.prior_location = Tensor({spec.hyper_latent_channels, 1, 1, 1});
  m.prior_log_scale = Tensor({spec.hyper_latent_channels, 1, 1, 1});
  m.validate();
  return m;
}

template <typename T>
std::uint64_t model_hash(const BasicCodecModel<T>& model) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ull;
    }
  };
  const std::string text = render_network(model.spec);
  mix(text.data(), text.size());
  const std::uint8_t width = sizeof(T);
  mix(&width, 1);
  visit_params(model, [&](const std::string&, const BasicTensor<T>& t) { mix(t.ptr(), t.size() * sizeof(T)); });
  return h;
}

template std::uint64_t model_hash(const BasicCodecModel<double>&);
template std::uint64_t model_hash(const BasicCodecModel<float>&);

std::vector<std::uint8_t> serialize_weights(const CodecModel& model) {
  ByteWriter w;
  w.bytes({reinterpret_cast<const std::uint8_t*>(kWeightsMagic), 4});
  w.u32(kWeightsVersion);
  w.str(render_network(model.spec));
  const auto params = model.parameters();
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    w.str(p.name);
    const Shape& s = p.tensor->shape();
    for (int d : {s.n, s.c, s.h, s.w}) w.i32(d);
    for (double v : p.tensor->data()) w.f64(v);
  }
  return std::move(w.out);
}

CodecModel deserialize_weights(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, ErrorKind::InputError);
  const auto magic = r.bytes(4);
  if (!std::equal(magic.begin(), magic.end(), kWeightsMagic)) fail(ErrorKind::InputError, "not a CENW weights file");
  const std::uint32_t version = r.u32();
  if (version != kWeightsVersion)
    fail(ErrorKind::VersionError, "unsupported weights version " + std::to_string(version));
  const NetworkSpec spec = parse_network(r.str());
  CodecModel m = init_model(spec, 0);
  auto params = m.parameters();
  const std::uint32_t count = r.u32();
  if (count != params.size())
    fail(ErrorKind::ModelMismatch, "weights file has " + std::to_string(count) + " tensors, spec needs " +
                                       std::to_string(params.size()));
  for (auto& p : params) {
    const std::string name = r.str();
    if (name != p.name) fail(ErrorKind::ModelMismatch, "expected tensor " + p.name + ", found " + name);
    Shape s;
    s.n = r.i32();
    s.c = r.i32();
    s.h = r.i32();
    s.w = r.i32();
    expect_shape(name, s, p.tensor->shape());
    for (double& v : p.tensor->data()) v = r.f64();
  }
  if (r.remaining() != 0) fail(ErrorKind::InputError, "trailing bytes after weights");
  m.validate();
  return m;
}

void save_weights(const std::filesystem::path& path, const CodecModel& model) {
  const auto bytes = serialize_weights(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::IoError, "failed writing " + path.string());
}

namespace {
std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}
}  // namespace

CodecModel load_weights(const std::filesystem::path& path) { return deserialize_weights(read_file(path)); }

template <typename T>
BasicTensor<T> run_section(const BasicCodecModel<T>& model, Section s, BasicTensor<T> x) {
  const auto& specs = model.spec.layers(s);
  const auto& ls = model.layers(s);
  for (std::size_t i = 0; i < specs.size(); ++i)
    x = apply_activation(run_layer(specs[i], ls[i].weights, x), model.spec.activation(s, i), ls[i].gdn);
  return x;
}

template TensorF run_section(const CodecModelF&, Section, TensorF);
template Tensor run_section(const CodecModel&, Section, Tensor);

template <typename T>
EntropyParams<T> predict_entropy_params(const BasicCodecModel<T>& model, const BasicTensor<T>& z_hat) {
  EntropyParams<T> p;
  p.means = conv2d(run_section(model, Section::hyper_decoder_mean, z_hat), model.mean_proj, 1);
  p.scales = conv2d(run_section(model, Section::hyper_decoder_scale, z_hat), model.scale_proj, 1);
  for (T& v : p.scales.data()) v = std::exp(v);
  return p;
}

template EntropyParams<float> predict_entropy_params(const CodecModelF&, const TensorF&);
template EntropyParams<double> predict_entropy_params(const CodecModel&, const Tensor&);

std::uint32_t Bitstream::payload_crc() const {
  uLong c = crc32(0L, Z_NULL, 0);
  if (!hyper.empty()) c = crc32(c, hyper.data(), static_cast<uInt>(hyper.size()));
  if (!latent.empty()) c = crc32(c, latent.data(), static_cast<uInt>(latent.size()));
  return static_cast<std::uint32_t>(c);
}

std::vector<std::uint8_t> serialize(const Bitstream& bs) {
  ByteWriter w;
  w.bytes({reinterpret_cast<const std::uint8_t*>(kStreamMagic), 4});
  w.u8(bs.version);
  w.u16(bs.width);
  w.u16(bs.height);
  w.u16(bs.latent_channels);
  w.u16(bs.hyper_latent_channels);
  w.u64(bs.model_hash);
  w.u32(bs.crc);
  w.u32(static_cast<std::uint32_t>(bs.hyper.size()));
  w.u32(static_cast<std::uint32_t>(bs.latent.size()));
  w.bytes(bs.hyper);
  w.bytes(bs.latent);
  return std::move(w.out);
}

Bitstream deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || !std::equal(bytes.begin(), bytes.begin() + 4, kStreamMagic))
    fail(ErrorKind::NotACencStream, "missing CENC magic");
  ByteReader r(bytes.subspan(4), ErrorKind::DecodeError);
  Bitstream bs;
  bs.version = r.u8();
  if (bs.version != kBitstreamVersion)
    fail(ErrorKind::VersionError, "unsupported bitstream version " + std::to_string(bs.version));
  bs.width = r.u16();
  bs.height = r.u16();
  bs.latent_channels = r.u16();
  bs.hyper_latent_channels = r.u16();
  bs.model_hash = r.u64();
  bs.crc = r.u32();
  const std::uint32_t hyper_len = r.u32();
  const std::uint32_t latent_len = r.u32();
  const auto hyper = r.bytes(hyper_len);
  bs.hyper.assign(hyper.begin(), hyper.end());
  const auto latent = r.bytes(latent_len);
  bs.latent.assign(latent.begin(), latent.end());
  if (r.remaining() != 0) fail(ErrorKind::DecodeError, "trailing bytes after latent payload");
  return bs;
}

template <typename T>
BasicCodec<T>::BasicCodec(BasicCodecModel<T> model) : model_(std::move(model)) {
  model_.validate();
  hash_ = model_hash(model_);
}

template <typename T>
EncodeResult<T> BasicCodec<T>::encode_analyze(const Tensor& img) const {
  if (img.n() != 1 || img.c() != 3)
    fail(ErrorKind::InputError, "expected a (1, 3, H, W) image, got " + img.shape().str());
  if (img.h() > 65535 || img.w() > 65535) fail(ErrorKind::InputError, "image dimensions exceed 65535");
  const NetworkSpec& spec = model_.spec;
  const Padded<double> padded = pad_to_multiple(img, 64);
  const BasicTensor<T> x = padded.tensor.template cast<T>();

  const BasicTensor<T> y = run_section(model_, Section::encoder, x);
  const BasicTensor<T> z = run_section(model_, Section::hyper_encoder, y);

  EncodeResult<T> r;
  r.z_hat = BasicTensor<T>(z.shape());
  std::vector<int> z_sym(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const T q = std::round(z[i]);
    r.z_hat[i] = q;
    z_sym[i] = static_cast<int>(q);
  }
  const Tensor loc = model_.prior_location.template cast<double>();
  const Tensor log_scale = model_.prior_log_scale.template cast<double>();
  const std::vector<CdfTable> per_channel = hyper_tables(loc, log_scale);
  std::vector<CdfTable> z_tables;
  z_tables.reserve(z.size());
  for (int c = 0; c < z.c(); ++c)
    for (std::size_t i = 0; i < z.shape().plane(); ++i) z_tables.push_back(per_channel[c]);

  const EntropyParams<T> ep = predict_entropy_params(model_, r.z_hat);
  r.y_hat = BasicTensor<T>(y.shape());
  std::vector<int> y_sym(y.size());
  const ScaleTables& scale_tables = ScaleTables::instance();
  std::vector<const CdfTable*> y_tables(y.size());
  Tensor y_q(y.shape()), y_mu(y.shape()), y_sigma(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const T k = std::round(y[i] - ep.means[i]);
    r.y_hat[i] = k + ep.means[i];
    y_sym[i] = static_cast<int>(k);
    const double sigma = std::max(static_cast<double>(ep.scales[i]), kScaleFloor);
    y_tables[i] = &scale_tables.for_scale(sigma);
    y_q[i] = static_cast<double>(r.y_hat[i]);
    y_mu[i] = static_cast<double>(ep.means[i]);
    y_sigma[i] = sigma;
  }

  Bitstream& bs = r.bitstream;
  bs.width = static_cast<std::uint16_t>(img.w());
  bs.height = static_cast<std::uint16_t>(img.h());
  bs.latent_channels = static_cast<std::uint16_t>(spec.latent_channels);
  bs.hyper_latent_channels = static_cast<std::uint16_t>(spec.hyper_latent_channels);
  bs.model_hash = hash_;
  bs.hyper = rc_encode(z_sym, z_tables);
  if (!y_sym.empty()) {
    RangeEncoder enc;
    for (std::size_t i = 0; i < y_sym.size(); ++i) enc.encode(y_sym[i], *y_tables[i]);
    bs.latent = enc.finish();
  }
  bs.crc = bs.payload_crc();

  r.estimated_hyper_bits =
      rate_bits(factorized_likelihood(r.z_hat.template cast<double>(), FactorizedPrior{loc, log_scale}));
  r.estimated_latent_bits = rate_bits(gaussian_likelihood(y_q, GaussianCond{y_mu, y_sigma, kScaleFloor}));
  return r;
}

template <typename T>
DecodeResult<T> BasicCodec<T>::decode(const Bitstream& bs) const {
  Stopwatch total;
  if (bs.version != kBitstreamVersion)
    fail(ErrorKind::VersionError, "unsupported bitstream version " + std::to_string(bs.version));
  if (bs.payload_crc() != bs.crc) fail(ErrorKind::CorruptStream, "payload CRC mismatch");
  if (bs.model_hash != hash_) fail(ErrorKind::ModelMismatch, "bitstream was produced by a different model");
  const NetworkSpec& spec = model_.spec;
  if (bs.latent_channels != spec.latent_channels || bs.hyper_latent_channels != spec.hyper_latent_channels)
    fail(ErrorKind::ModelMismatch, "bitstream channel counts do not match the model");
  if (bs.width == 0 || bs.height == 0) fail(ErrorKind::DecodeError, "bitstream declares an empty image");
  const int ph = (bs.height + 63) / 64 * 64;
  const int pw = (bs.width + 63) / 64 * 64;
  int yh = ph, yw = pw;
  section_dims(spec, Section::encoder, yh, yw);
  int zh = yh, zw = yw;
  section_dims(spec, Section::hyper_encoder, zh, zw);
  const Shape y_shape{1, spec.latent_channels, yh, yw};
  const Shape z_shape{1, spec.hyper_latent_channels, zh, zw};

  DecodeResult<T> r;
  Stopwatch sw;
  const Tensor loc = model_.prior_location.template cast<double>();
  const Tensor log_scale = model_.prior_log_scale.template cast<double>();
  const std::vector<CdfTable> per_channel = hyper_tables(loc, log_scale);
  r.z_hat = BasicTensor<T>(z_shape);
  {
    RangeDecoder dec(bs.hyper);
    std::size_t i = 0;
    for (int c = 0; c < z_shape.c; ++c)
      for (std::size_t j = 0; j < z_shape.plane(); ++j) r.z_hat[i++] = static_cast<T>(dec.decode(per_channel[c]));
  }
  r.timing.hyper_range_decode_ms = sw.elapsed_ms();

  sw.reset();
  const EntropyParams<T> ep = predict_entropy_params(model_, r.z_hat);
  r.timing.hyper_decoder_net_ms = sw.elapsed_ms();
  if (ep.means.shape() != y_shape) fail(ErrorKind::ModelMismatch, "hyper decoder output does not match the latent shape");

  sw.reset();
  r.y_hat = BasicTensor<T>(y_shape);
  {
    RangeDecoder dec(bs.latent);
    const ScaleTables& scale_tables = ScaleTables::instance();
    for (std::size_t i = 0; i < r.y_hat.size(); ++i) {
      const double sigma = std::max(static_cast<double>(ep.scales[i]), kScaleFloor);
      const T k = static_cast<T>(dec.decode(scale_tables.for_scale(sigma)));
      r.y_hat[i] = k + ep.means[i];
    }
  }
  r.timing.latent_range_decode_ms = sw.elapsed_ms();

  sw.reset();
  const BasicTensor<T> x_hat = run_section(model_, Section::decoder, r.y_hat);
  Tensor img = crop(x_hat.template cast<double>(), bs.height, bs.width);
  for (double& v : img.data()) v = std::clamp(v, 0.0, 1.0);
  r.image = std::move(img);
  r.timing.decoder_net_ms = sw.elapsed_ms();
  r.timing.total_ms = total.elapsed_ms();
  return r;
}

template class BasicCodec<double>;
template class BasicCodec<float>;

Bitstream encode_image(const Tensor& img, const CodecModel& model) { return Codec(model).encode(img); }

DecodeResult<double> decode_image(const Bitstream& bs, const CodecModel& model) { return Codec(model).decode(bs); }

namespace {

struct ParamCursor {
  std::span<const Var> params;
  std::size_t next = 0;
  Var take() {
    if (next >= params.size()) fail(ErrorKind::ShapeError, "forward_train: too few parameter Vars");
    return params[next++];
  }
};

Var ad_section(const CodecModel& m, Section s, Var x, ParamCursor& pc) {
  const auto& specs = m.spec.layers(s);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    Var k = pc.take();
    Var b = pc.take();
    x = specs[i].kind == LayerKind::conv ? ad::conv2d(x, k, b, specs[i].stride)
                                         : ad::deconv2d(x, k, b, specs[i].stride);
    const Activation a = m.spec.activation(s, i);
    if (has_gdn(a)) {
      Var beta = pc.take();
      Var gamma = pc.take();
      x = ad::gdn(x, beta, gamma, m.spec.gdn_mode, a == Activation::gdn ? GdnDirection::divide : GdnDirection::multiply);
    } else if (a == Activation::relu) {
      x = ad::relu(x);
    }
  }
  return x;
}

}  // namespace

TrainForward forward_train(Tape& tape, const CodecModel& model, std::span<const Var> params, Var x,
                           QuantMode mode, std::mt19937_64& rng) {
  if (params.size() != model.parameters().size())
    fail(ErrorKind::ShapeError, "forward_train: expected " + std::to_string(model.parameters().size()) +
                                    " parameter Vars, got " + std::to_string(params.size()));
  ParamCursor pc{params};
  // Parameters are laid out section by section; locate each section's slice.
  std::array<std::size_t, 5> offset{};
  std::size_t at = 0;
  for (Section s : kSections) {
    offset[static_cast<int>(s)] = at;
    for (std::size_t i = 0; i < model.layers(s).size(); ++i) at += model.layers(s)[i].gdn ? 4 : 2;
  }
  auto section = [&](Section s, Var in) {
    ParamCursor c{params, offset[static_cast<int>(s)]};
    return ad_section(model, s, in, c);
  };
  pc.next = at;
  Var mean_k = pc.take(), mean_b = pc.take(), scale_k = pc.take(), scale_b = pc.take();
  Var loc = pc.take(), log_scale = pc.take();

  TrainForward out;
  out.y = section(Section::encoder, x);
  Var z = section(Section::hyper_encoder, out.y);
  Var z_tilde;
  if (mode == QuantMode::noise) {
    z_tilde = ad::add_noise(z, uniform_noise(z.shape(), rng));
  } else {
    Tensor zq = z.value();
    for (double& v : zq.data()) v = std::round(v);
    z_tilde = tape.constant(std::move(zq));
  }
  Var mu = ad::conv2d(section(Section::hyper_decoder_mean, z_tilde), mean_k, mean_b, 1);
  Var sigma = ad::exp(ad::conv2d(section(Section::hyper_decoder_scale, z_tilde), scale_k, scale_b, 1));
  Var y_tilde;
  if (mode == QuantMode::noise) {
    y_tilde = ad::add_noise(out.y, uniform_noise(out.y.shape(), rng));
  } else {
    y_tilde = tape.constant(quantize(out.y.value(), mu.value(), QuantMode::round));
  }
  out.y_likelihood = ad::gaussian_likelihood(y_tilde, mu, sigma, kScaleFloor);
  out.z_likelihood = ad::factorized_likelihood(z_tilde, loc, log_scale);
  out.x_hat = section(Section::decoder, y_tilde);
  return out;
}

}  // namespace cenic
