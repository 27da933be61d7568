#include "maf/core.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace maf {
namespace fs = std::filesystem;

namespace {

constexpr float kFlowMagic = 202021.25f;

std::vector<uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Err::ArtifactMissing, "cannot open " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) raise(Err::ArtifactMissing, "read failed on " + path.string());
  return bytes;
}

void write_file(const fs::path& path, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(Err::ArtifactMissing, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) raise(Err::ArtifactMissing, "write failed on " + path.string());
}

uint32_t load_u32le(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
         static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}

float load_f32(const uint8_t* p, bool little_endian) {
  uint32_t u = little_endian ? load_u32le(p)
                             : (static_cast<uint32_t>(p[3]) | static_cast<uint32_t>(p[2]) << 8 |
                                static_cast<uint32_t>(p[1]) << 16 | static_cast<uint32_t>(p[0]) << 24);
  return std::bit_cast<float>(u);
}

void store_u32le(std::vector<uint8_t>& out, uint32_t u) {
  out.push_back(static_cast<uint8_t>(u));
  out.push_back(static_cast<uint8_t>(u >> 8));
  out.push_back(static_cast<uint8_t>(u >> 16));
  out.push_back(static_cast<uint8_t>(u >> 24));
}

void store_f32le(std::vector<uint8_t>& out, float f) { store_u32le(out, std::bit_cast<uint32_t>(f)); }

bool flow_sample_valid(double v) { return std::isfinite(v) && std::fabs(v) <= flow_invalid_magnitude; }

}  // namespace

void FlowField::validate() const {
  if (width < 1 || height < 1) raise(Err::NonPositiveDims, "flow field dimensions must be positive");
  const size_t n = static_cast<size_t>(width) * static_cast<size_t>(height);
  if (fx.size() != n || fy.size() != n || valid.size() != n)
    raise(Err::InvalidArgument, "flow field buffers do not match width*height");
  for (size_t i = 0; i < n; ++i)
    if (valid[i] && (!std::isfinite(fx[i]) || !std::isfinite(fy[i])))
      raise(Err::InvalidArgument, "non-finite flow on a valid pixel");
}

void DepthMap::validate() const {
  if (width < 1 || height < 1) raise(Err::NonPositiveDims, "depth map dimensions must be positive");
  const size_t n = static_cast<size_t>(width) * static_cast<size_t>(height);
  if (z.size() != n || valid.size() != n)
    raise(Err::InvalidArgument, "depth buffers do not match width*height");
  for (size_t i = 0; i < n; ++i)
    if (valid[i] && (!std::isfinite(z[i]) || z[i] <= 0.0))
      raise(Err::InvalidArgument, "non-positive depth on a valid pixel");
}

void Embedding::validate() const {
  if (values.empty()) raise(Err::InvalidArgument, "embedding has zero dimension");
  for (double v : values)
    if (!std::isfinite(v)) raise(Err::InvalidArgument, "non-finite embedding entry");
}

void ScoreSource::validate() const {
  if (scores.empty()) raise(Err::InvalidArgument, "score source has no scores");
  for (double s : scores)
    if (!std::isfinite(s) || s < 0.0) raise(Err::InvalidArgument, "scores must be finite and >= 0");
  if (!std::isfinite(lambda_trust) || lambda_trust < 0.0)
    raise(Err::InvalidArgument, "lambda_trust must be finite and >= 0");
  if (!std::isfinite(alpha_mask) || alpha_mask < 0.0 || alpha_mask > 1.0)
    raise(Err::InvalidArgument, "alpha_mask must lie in [0, 1]");
}

const char* err_name(Err code) {
  switch (code) {
    case Err::BadMagic: return "BadMagic";
    case Err::BadHeader: return "BadHeader";
    case Err::TruncatedFile: return "TruncatedFile";
    case Err::NonPositiveDims: return "NonPositiveDims";
    case Err::RunSumMismatch: return "RunSumMismatch";
    case Err::ParseError: return "ParseError";
    case Err::ArtifactMissing: return "ArtifactMissing";
    case Err::DimensionMismatch: return "DimensionMismatch";
    case Err::NoValidPixels: return "NoValidPixels";
    case Err::EmptySequence: return "EmptySequence";
    case Err::OutOfRange: return "OutOfRange";
    case Err::WindowCountMismatch: return "WindowCountMismatch";
    case Err::TooFewCandidates: return "TooFewCandidates";
    case Err::NoCandidateEmbeddings: return "NoCandidateEmbeddings";
    case Err::UnorderedVideo: return "UnorderedVideo";
    case Err::InfeasiblePartition: return "InfeasiblePartition";
    case Err::EmptySide: return "EmptySide";
    case Err::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

FlowField read_flow(const fs::path& path) {
  const auto bytes = read_file(path);
  if (bytes.size() < 12) raise(Err::TruncatedFile, path.string() + ": shorter than the .flo header");
  const float magic = load_f32(bytes.data(), true);
  if (magic != kFlowMagic) raise(Err::BadMagic, path.string() + ": bad .flo magic");
  const int32_t w = static_cast<int32_t>(load_u32le(bytes.data() + 4));
  const int32_t h = static_cast<int32_t>(load_u32le(bytes.data() + 8));
  if (w <= 0 || h <= 0) raise(Err::NonPositiveDims, path.string() + ": non-positive dimensions");
  const uint64_t expected = 12ull + 8ull * static_cast<uint64_t>(w) * static_cast<uint64_t>(h);
  if (bytes.size() != expected)
    raise(Err::TruncatedFile, path.string() + ": payload size does not match header dimensions");

  FlowField field;
  field.width = w;
  field.height = h;
  const size_t n = static_cast<size_t>(w) * static_cast<size_t>(h);
  field.fx.resize(n);
  field.fy.resize(n);
  field.valid.resize(n);
  const uint8_t* p = bytes.data() + 12;
  for (size_t i = 0; i < n; ++i, p += 8) {
    const double x = load_f32(p, true);
    const double y = load_f32(p + 4, true);
    field.fx[i] = x;
    field.fy[i] = y;
    field.valid[i] = flow_sample_valid(x) && flow_sample_valid(y);
  }
  return field;
}

void write_flow(const fs::path& path, const FlowField& field) {
  field.validate();
  std::vector<uint8_t> bytes;
  bytes.reserve(12 + field.size() * 8);
  store_f32le(bytes, kFlowMagic);
  store_u32le(bytes, static_cast<uint32_t>(field.width));
  store_u32le(bytes, static_cast<uint32_t>(field.height));
  for (size_t i = 0; i < field.size(); ++i) {
    store_f32le(bytes, static_cast<float>(field.fx[i]));
    store_f32le(bytes, static_cast<float>(field.fy[i]));
  }
  write_file(path, bytes);
}

namespace {

// One PFM header token; tokens are separated by runs of ASCII whitespace.
std::string next_token(const std::vector<uint8_t>& bytes, size_t& pos, const fs::path& path) {
  while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
  const size_t start = pos;
  while (pos < bytes.size() && !std::isspace(bytes[pos])) ++pos;
  if (start == pos) raise(Err::BadHeader, path.string() + ": truncated PFM header");
  return std::string(bytes.begin() + static_cast<ptrdiff_t>(start), bytes.begin() + static_cast<ptrdiff_t>(pos));
}

}  // namespace

DepthMap read_depth(const fs::path& path) {
  const auto bytes = read_file(path);
  size_t pos = 0;
  const std::string magic = next_token(bytes, pos, path);
  if (magic != "Pf") {
    if (magic == "PF") raise(Err::BadHeader, path.string() + ": color PFM is not supported");
    raise(Err::BadHeader, path.string() + ": not a PFM file");
  }
  int w = 0, h = 0;
  double scale = 0.0;
  try {
    w = std::stoi(next_token(bytes, pos, path));
    h = std::stoi(next_token(bytes, pos, path));
    scale = std::stod(next_token(bytes, pos, path));
  } catch (const std::exception&) {
    raise(Err::BadHeader, path.string() + ": malformed PFM header numbers");
  }
  if (w <= 0 || h <= 0) raise(Err::BadHeader, path.string() + ": non-positive PFM dimensions");
  if (scale == 0.0 || !std::isfinite(scale)) raise(Err::BadHeader, path.string() + ": bad PFM scale");
  // exactly one whitespace byte separates the header from the raster
  if (pos >= bytes.size() || !std::isspace(bytes[pos]))
    raise(Err::BadHeader, path.string() + ": missing separator after the PFM scale");
  ++pos;
  const bool little_endian = scale < 0.0;
  const uint64_t expected = 4ull * static_cast<uint64_t>(w) * static_cast<uint64_t>(h);
  if (bytes.size() - pos != expected)
    raise(Err::TruncatedFile, path.string() + ": raster size does not match header dimensions");

  DepthMap map;
  map.width = w;
  map.height = h;
  const size_t n = static_cast<size_t>(w) * static_cast<size_t>(h);
  map.z.resize(n);
  map.valid.resize(n);
  // PFM rows are stored bottom-to-top
  for (int row = h - 1; row >= 0; --row) {
    for (int col = 0; col < w; ++col) {
      const double v = load_f32(bytes.data() + pos, little_endian);
      pos += 4;
      const size_t i = static_cast<size_t>(row) * static_cast<size_t>(w) + static_cast<size_t>(col);
      map.z[i] = v;
      map.valid[i] = std::isfinite(v) && v > 0.0;
    }
  }
  return map;
}

void write_depth(const fs::path& path, const DepthMap& map) {
  map.validate();
  std::string header = "Pf\n" + std::to_string(map.width) + " " + std::to_string(map.height) + "\n-1\n";
  std::vector<uint8_t> bytes(header.begin(), header.end());
  bytes.reserve(bytes.size() + map.size() * 4);
  for (int row = map.height - 1; row >= 0; --row)
    for (int col = 0; col < map.width; ++col)
      store_f32le(bytes, static_cast<float>(map.z[static_cast<size_t>(row) * map.width + col]));
  write_file(path, bytes);
}

Mask decode_rle(const std::vector<int64_t>& runs, int width, int height) {
  if (width < 1 || height < 1) raise(Err::NonPositiveDims, "mask dimensions must be positive");
  const int64_t total = static_cast<int64_t>(width) * height;
  int64_t sum = 0;
  for (int64_t r : runs) {
    if (r < 0) raise(Err::RunSumMismatch, "negative run length");
    sum += r;
  }
  if (sum != total)
    raise(Err::RunSumMismatch, "runs sum to " + std::to_string(sum) + ", expected " + std::to_string(total));

  Mask mask;
  mask.width = width;
  mask.height = height;
  mask.data.assign(static_cast<size_t>(total), 0);
  int64_t pos = 0;
  uint8_t value = 0;
  for (int64_t run : runs) {
    for (int64_t k = 0; k < run; ++k, ++pos) {
      const int64_t col = pos / height;
      const int64_t row = pos % height;
      mask.data[static_cast<size_t>(row) * width + static_cast<size_t>(col)] = value;
    }
    value ^= 1;
  }
  return mask;
}

std::vector<int64_t> encode_rle(const Mask& mask) {
  if (mask.width < 1 || mask.height < 1) raise(Err::NonPositiveDims, "mask dimensions must be positive");
  const int64_t total = static_cast<int64_t>(mask.width) * mask.height;
  if (static_cast<int64_t>(mask.data.size()) != total)
    raise(Err::InvalidArgument, "mask buffer does not match width*height");

  std::vector<int64_t> runs;
  uint8_t current = 0;  // leading run counts background, possibly zero-length
  int64_t count = 0;
  for (int64_t pos = 0; pos < total; ++pos) {
    const int64_t col = pos / mask.height;
    const int64_t row = pos % mask.height;
    const uint8_t v = mask.data[static_cast<size_t>(row) * mask.width + static_cast<size_t>(col)] ? 1 : 0;
    if (v == current) {
      ++count;
    } else {
      runs.push_back(count);
      current = v;
      count = 1;
    }
  }
  runs.push_back(count);
  return runs;
}

}  // namespace maf
