#include "cenic/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "cenic/timing.hpp"
#include "json.hpp"

namespace cenic {

namespace {

template <typename T>
constexpr const char* precision_name() {
  return sizeof(T) == 4 ? "f32" : "f64";
}

TimingBreakdown stat_of(const std::vector<TimingBreakdown>& samples, double (*pick)(const Stats&)) {
  auto field = [&](double TimingBreakdown::*m) {
    std::vector<double> v;
    v.reserve(samples.size());
    for (const auto& s : samples) v.push_back(s.*m);
    return pick(summarize(std::move(v)));
  };
  TimingBreakdown t;
  t.hyper_range_decode_ms = field(&TimingBreakdown::hyper_range_decode_ms);
  t.hyper_decoder_net_ms = field(&TimingBreakdown::hyper_decoder_net_ms);
  t.latent_range_decode_ms = field(&TimingBreakdown::latent_range_decode_ms);
  t.decoder_net_ms = field(&TimingBreakdown::decoder_net_ms);
  t.total_ms = field(&TimingBreakdown::total_ms);
  return t;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void require_records(const std::vector<BenchRecord>& records) {
  if (records.empty()) fail(ErrorKind::EmptyReport, "no benchmark records to report");
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_num(const std::string& s, std::size_t offset) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw ParseError(offset, "bad number '" + s + "'");
  return v;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void fill_stats(BenchRecord& r) {
  r.median = stat_of(r.samples, [](const Stats& s) { return s.median; });
  r.iqr = stat_of(r.samples, [](const Stats& s) { return s.iqr(); });
  r.mean = stat_of(r.samples, [](const Stats& s) { return s.mean; });
  r.deserialize_median_ms = summarize(r.deserialize_samples).median;
}

std::string series_of(const BenchRecord& r) { return r.label.empty() ? std::string("model") : r.label; }

}  // namespace

template <typename T>
std::vector<BenchRecord> bench_decode(const BasicCodec<T>& codec, const std::vector<BenchImage>& images,
                                      const BenchOptions& options) {
  if (options.reps < 5) fail(ErrorKind::DomainError, "bench_decode needs reps >= 5");
  if (options.warmup < 1) fail(ErrorKind::DomainError, "bench_decode needs warmup >= 1");
  const bool pinned = options.pin_thread && pin_to_single_cpu();
  const std::string host = host_descriptor();

  std::vector<BenchRecord> out;
  for (const BenchImage& item : images) {
    const Bitstream encoded = codec.encode(item.image);
    const std::vector<std::uint8_t> bytes = serialize(encoded);

    BenchRecord r;
    r.label = options.label;
    r.image = item.id;
    r.bytes = bytes.size();
    r.payload_bytes = encoded.payload_bytes();
    r.pixels = static_cast<std::size_t>(item.image.h()) * item.image.w();
    r.bpp = 8.0 * static_cast<double>(r.payload_bytes) / static_cast<double>(r.pixels);
    r.reps = options.reps;
    r.warmup = options.warmup;
    r.pinned = pinned;
    r.host = host;
    r.precision = precision_name<T>();

    std::vector<TimingBreakdown> timings;
    std::vector<double> deser;
    Tensor first;
    for (int i = 0; i < options.warmup + options.reps; ++i) {
      Stopwatch sw;
      const Bitstream bs = deserialize(bytes);
      const double d_ms = sw.elapsed_ms();
      DecodeResult<T> dec = codec.decode(bs);
      if (i == 0)
        first = std::move(dec.image);
      else
        r.deterministic = r.deterministic && dec.image == first;
      if (i < options.warmup) continue;
      timings.push_back(dec.timing);
      deser.push_back(d_ms);
    }
    r.samples = std::move(timings);
    r.deserialize_samples = std::move(deser);
    fill_stats(r);

    const QualityScore q = score_quality(item.image, first);
    r.psnr_db = q.psnr_db;
    r.ms_ssim = q.ms_ssim;
    r.ms_ssim_db_paper = q.ms_ssim_db_paper;
    r.ms_ssim_db_conv = q.ms_ssim_db_conv;
    r.ms_ssim_scales = q.ms_ssim_scales;
    out.push_back(std::move(r));
  }
  return out;
}

template std::vector<BenchRecord> bench_decode<float>(const BasicCodec<float>&, const std::vector<BenchImage>&,
                                                      const BenchOptions&);
template std::vector<BenchRecord> bench_decode<double>(const BasicCodec<double>&, const std::vector<BenchImage>&,
                                                       const BenchOptions&);

BenchRecord pool_records(const std::vector<BenchRecord>& runs) {
  if (runs.empty()) fail(ErrorKind::DomainError, "pool_records needs at least one record");
  BenchRecord out = runs.front();
  for (std::size_t i = 1; i < runs.size(); ++i) {
    const BenchRecord& r = runs[i];
    if (r.label != out.label || r.image != out.image || r.bytes != out.bytes || r.payload_bytes != out.payload_bytes ||
        r.psnr_db != out.psnr_db || r.ms_ssim != out.ms_ssim || r.precision != out.precision)
      fail(ErrorKind::DomainError, "pool_records: runs of " + r.label + "/" + r.image + " disagree");
    out.samples.insert(out.samples.end(), r.samples.begin(), r.samples.end());
    out.deserialize_samples.insert(out.deserialize_samples.end(), r.deserialize_samples.begin(),
                                   r.deserialize_samples.end());
    out.deterministic = out.deterministic && r.deterministic;
    out.pinned = out.pinned && r.pinned;
    out.reps += r.reps;
  }
  fill_stats(out);
  return out;
}

std::string bench_csv(const std::vector<BenchRecord>& records) {
  require_records(records);
  const BenchRecord& f = records.front();
  std::ostringstream os;
  os << "# host: " << f.host << "\n";
  os << "# precision: " << f.precision << "\n";
  os << "# reps: " << f.reps << " warmup: " << f.warmup << " pinned: " << (f.pinned ? "yes" : "no") << "\n";
  os << "# timings: median ms per stage\n";
  os << "# msssim_db_paper: -10 log10(m)  msssim_db_conv: -10 log10(1 - m)\n";
  os << kBenchCsvHeader << "\n";
  for (const BenchRecord& r : records) {
    os << (r.label.empty() ? r.image : r.label + '/' + r.image) << ',' << r.bytes << ',' << num(r.bpp) << ',' << num(r.psnr_db) << ',' << num(r.ms_ssim) << ','
       << num(r.ms_ssim_db_paper) << ',' << num(r.ms_ssim_db_conv) << ',' << num(r.median.hyper_range_decode_ms)
       << ',' << num(r.median.hyper_decoder_net_ms) << ',' << num(r.median.latent_range_decode_ms) << ','
       << num(r.median.decoder_net_ms) << ',' << num(r.median.total_ms) << "\n";
  }
  return os.str();
}

std::vector<BenchRecord> parse_bench_csv(std::string_view text) {
  std::vector<BenchRecord> out;
  bool header = false;
  std::size_t offset = 0;
  while (offset < text.size()) {
    auto end = text.find('\n', offset);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(offset, end - offset);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::size_t at = offset;
    offset = end + 1;
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      if (line != kBenchCsvHeader) throw ParseError(at, "unexpected benchmark CSV header");
      header = true;
      continue;
    }
    const auto cells = split(line, ',');
    if (cells.size() != 12) throw ParseError(at, "benchmark CSV row needs 12 fields");
    BenchRecord r;
    const auto slash = cells[0].rfind('/');
    if (slash != std::string::npos) {
      r.label = cells[0].substr(0, slash);
      r.image = cells[0].substr(slash + 1);
    } else {
      r.image = cells[0];
    }
    r.bytes = static_cast<std::size_t>(parse_num(cells[1], at));
    r.bpp = parse_num(cells[2], at);
    r.psnr_db = parse_num(cells[3], at);
    r.ms_ssim = parse_num(cells[4], at);
    r.ms_ssim_db_paper = parse_num(cells[5], at);
    r.ms_ssim_db_conv = parse_num(cells[6], at);
    r.median.hyper_range_decode_ms = parse_num(cells[7], at);
    r.median.hyper_decoder_net_ms = parse_num(cells[8], at);
    r.median.latent_range_decode_ms = parse_num(cells[9], at);
    r.median.decoder_net_ms = parse_num(cells[10], at);
    r.median.total_ms = parse_num(cells[11], at);
    out.push_back(std::move(r));
  }
  if (!header) throw ParseError(text.size(), "benchmark CSV has no header row");
  return out;
}

std::string bench_json(const std::vector<BenchRecord>& records) {
  require_records(records);
  using nlohmann::json;
  auto timing = [](const TimingBreakdown& t) {
    return json{{"hyper_rc_ms", t.hyper_range_decode_ms},
                {"hyper_net_ms", t.hyper_decoder_net_ms},
                {"latent_rc_ms", t.latent_range_decode_ms},
                {"decoder_net_ms", t.decoder_net_ms},
                {"total_ms", t.total_ms}};
  };
  auto finite = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json rows = json::array();
  for (const BenchRecord& r : records)
    rows.push_back({{"label", r.label},
                    {"image", r.image},
                    {"bytes", r.bytes},
                    {"payload_bytes", r.payload_bytes},
                    {"pixels", r.pixels},
                    {"bpp", r.bpp},
                    {"psnr_db", finite(r.psnr_db)},
                    {"msssim", r.ms_ssim},
                    {"msssim_db_paper", finite(r.ms_ssim_db_paper)},
                    {"msssim_db_conv", finite(r.ms_ssim_db_conv)},
                    {"msssim_scales", r.ms_ssim_scales},
                    {"median", timing(r.median)},
                    {"iqr", timing(r.iqr)},
                    {"mean", timing(r.mean)},
                    {"deserialize_median_ms", r.deserialize_median_ms},
                    {"deterministic", r.deterministic},
                    {"reps", r.reps},
                    {"warmup", r.warmup},
                    {"pinned", r.pinned},
                    {"host", r.host},
                    {"precision", r.precision}});
  const json doc{{"host", records.front().host},
                 {"precision", records.front().precision},
                 {"statistic", "median"},
                 {"db_conventions",
                  {{"msssim_db_paper", "-10 log10(m)"}, {"msssim_db_conv", "-10 log10(1 - m)"}}},
                 {"records", rows}};
  return doc.dump(2) + "\n";
}

std::string bench_svg(const std::vector<BenchRecord>& records, DbConvention convention) {
  require_records(records);
  auto y_of = [&](const BenchRecord& r) {
    return convention == DbConvention::one_minus ? r.ms_ssim_db_conv : r.ms_ssim_db_paper;
  };
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& r : records) {
    x0 = std::min(x0, r.median.total_ms);
    x1 = std::max(x1, r.median.total_ms);
    if (std::isfinite(y_of(r))) {
      y0 = std::min(y0, y_of(r));
      y1 = std::max(y1, y_of(r));
    }
  }
  if (!std::isfinite(y0)) y0 = y1 = 0;
  auto widen = [](double& lo, double& hi) {
    const double pad = hi > lo ? 0.08 * (hi - lo) : std::max(1.0, std::abs(lo) * 0.1);
    lo -= pad;
    hi += pad;
  };
  widen(x0, x1);
  widen(y0, y1);

  constexpr double W = 640, H = 420, L = 70, R = 160, T = 30, B = 60;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  std::map<std::string, std::size_t> series;
  for (const auto& r : records) series.emplace(series_of(r), series.size());

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<title>decode time vs MS-SSIM (" << xml_escape(records.front().host) << ", "
     << records.front().precision << ")</title>\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4, yv = y0 + (y1 - y0) * i / 4;
    os << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 16 << "\" font-size=\"11\" text-anchor=\"middle\">"
       << num(std::round(xv * 100) / 100) << "</text>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" font-size=\"11\" text-anchor=\"end\">"
       << num(std::round(yv * 100) / 100) << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 18
     << "\" font-size=\"13\" text-anchor=\"middle\">median decode time (ms)</text>\n";
  os << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << (T + H - B) / 2 << ")\">MS-SSIM (dB, "
     << (convention == DbConvention::one_minus ? "-10 log10(1 - m)" : "-10 log10(m)") << ")</text>\n";
  for (const auto& r : records) {
    const double y = std::isfinite(y_of(r)) ? y_of(r) : y1;
    os << "<circle class=\"marker\" cx=\"" << px(r.median.total_ms) << "\" cy=\"" << py(y) << "\" r=\"4\" fill=\""
       << colors[series[series_of(r)] % 6] << "\"><title>" << xml_escape(series_of(r)) << " "
       << xml_escape(r.image) << "</title></circle>\n";
  }
  for (const auto& [name, idx] : series) {
    const double ly = T + 10 + 18.0 * static_cast<double>(idx);
    os << "<rect x=\"" << W - R + 14 << "\" y=\"" << ly - 8 << "\" width=\"10\" height=\"10\" fill=\""
       << colors[idx % 6] << "\"/>\n";
    os << "<text x=\"" << W - R + 30 << "\" y=\"" << ly + 1 << "\" font-size=\"12\">" << xml_escape(name)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string bench_dat(const std::vector<BenchRecord>& records) {
  require_records(records);
  std::map<std::string, std::vector<const BenchRecord*>> series;
  for (const auto& r : records) series[series_of(r)].push_back(&r);
  std::ostringstream os;
  os << "# host: " << records.front().host << "  precision: " << records.front().precision << "\n";
  bool first = true;
  for (const auto& [name, rows] : series) {
    if (!first) os << "\n\n";
    first = false;
    os << "# series " << name << "\n# total_ms bpp psnr_db msssim_db_conv msssim_db_paper image\n";
    for (const BenchRecord* r : rows)
      os << num(r->median.total_ms) << ' ' << num(r->bpp) << ' ' << num(r->psnr_db) << ' '
         << num(r->ms_ssim_db_conv) << ' ' << num(r->ms_ssim_db_paper) << ' ' << r->image << "\n";
  }
  return os.str();
}

std::vector<std::filesystem::path> emit_report(const std::vector<BenchRecord>& records,
                                               const std::filesystem::path& stem,
                                               const std::vector<ReportFormat>& formats) {
  require_records(records);
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
  std::vector<std::filesystem::path> written;
  for (ReportFormat f : formats) {
    std::filesystem::path p = stem;
    std::string body;
    switch (f) {
      case ReportFormat::csv: p += ".csv"; body = bench_csv(records); break;
      case ReportFormat::json: p += ".json"; body = bench_json(records); break;
      case ReportFormat::svg: p += ".svg"; body = bench_svg(records); break;
      case ReportFormat::dat: p += ".dat"; body = bench_dat(records); break;
    }
    std::ofstream out(p, std::ios::binary);
    out << body;
    if (!out) fail(ErrorKind::IoError, "cannot write " + p.string());
    written.push_back(p);
  }
  return written;
}

}  // namespace cenic
