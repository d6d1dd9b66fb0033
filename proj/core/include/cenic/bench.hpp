#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cenic/codec.hpp"
#include "cenic/metrics.hpp"

namespace cenic {

struct BenchImage {
  std::string id;
  Tensor image;  // (1, 3, H, W) in [0, 1]
};

struct BenchOptions {
  int reps = 10;
  int warmup = 2;
  bool pin_thread = true;
  std::string label;  // series name in reports, usually the model
};

struct BenchRecord {
  std::string label;
  std::string image;
  std::size_t bytes = 0;          // serialized bitstream, header included
  std::size_t payload_bytes = 0;  // range-coded hyper + latent payload
  std::size_t pixels = 0;
  double bpp = 0;  // payload bits / pixels
  double psnr_db = 0;
  double ms_ssim = 0;
  double ms_ssim_db_paper = 0;
  double ms_ssim_db_conv = 0;
  int ms_ssim_scales = 0;
  TimingBreakdown median;  // per field, over reps
  TimingBreakdown iqr;
  TimingBreakdown mean;
  double deserialize_median_ms = 0;  // outside the decode timing
  std::vector<TimingBreakdown> samples;  // one per timed rep
  std::vector<double> deserialize_samples;
  bool deterministic = true;         // every rep decoded the same image
  int reps = 0;
  int warmup = 0;
  bool pinned = false;
  std::string host;
  std::string precision;  // "f32" or "f64"
};

// Encodes each image once, then deserializes and decodes it warmup + reps
// times on the calling thread. DomainError unless reps >= 5 and warmup >= 1.
template <typename T>
std::vector<BenchRecord> bench_decode(const BasicCodec<T>& codec, const std::vector<BenchImage>& images,
                                      const BenchOptions& options);

// One record from several runs of the same label and image, with the timing
// statistics recomputed over every sample. Lets two models be measured in
// alternating short runs. DomainError on an empty list or records that
// disagree on label, image, stream or decoded quality.
BenchRecord pool_records(const std::vector<BenchRecord>& runs);

// Fixed column order, one row per record.
inline constexpr std::string_view kBenchCsvHeader =
    "image,bytes,bpp,psnr_db,msssim,msssim_db_paper,msssim_db_conv,hyper_rc_ms,hyper_net_ms,latent_rc_ms,"
    "decoder_net_ms,total_ms";

// "# key: value" lines (host, precision, reps, dB conventions) precede the
// header row. The image column reads "<label>/<image>" for labelled records.
// EmptyReport on no records.
std::string bench_csv(const std::vector<BenchRecord>& records);
// Reads the CSV columns back; comment lines are skipped. ParseError on a
// malformed header or row.
std::vector<BenchRecord> parse_bench_csv(std::string_view text);

std::string bench_json(const std::vector<BenchRecord>& records);

// Decode time (x) against distortion (y), one series per label. The y axis
// is MS-SSIM in dB under `convention`.
std::string bench_svg(const std::vector<BenchRecord>& records,
                      DbConvention convention = DbConvention::one_minus);
// gnuplot data blocks, one per label.
std::string bench_dat(const std::vector<BenchRecord>& records);

enum class ReportFormat { csv, json, svg, dat };

// Writes <stem>.<ext> for each format and returns the paths written.
// EmptyReport on no records.
std::vector<std::filesystem::path> emit_report(const std::vector<BenchRecord>& records,
                                               const std::filesystem::path& stem,
                                               const std::vector<ReportFormat>& formats);

}  // namespace cenic
