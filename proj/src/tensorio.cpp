#include "balent/tensorio.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>
#include <tuple>

#include "balent/errors.hpp"
#include "csv.hpp"

namespace balent {

namespace {

constexpr std::array<char, 8> kCubeMagic = {'B', 'A', 'L', 'C', 'U', 'B', 'E', '1'};
constexpr std::size_t kCubeHeaderBytes = kCubeMagic.size() + 4 * sizeof(std::uint32_t);
constexpr double kSoftmaxTolerance = 1e-4;

constexpr std::array<AcquisitionKind, 6> kAllKinds = {AcquisitionKind::balent_acq, AcquisitionKind::bald,
                                                      AcquisitionKind::power_bald, AcquisitionKind::margin,
                                                      AcquisitionKind::entropy,    AcquisitionKind::random};

void put_u32(std::string& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<char>((v >> shift) & 0xFFu));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::ofstream open_for_write(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing", path.string());
  return out;
}

void finish_write(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed", path.string());
}

}  // namespace

std::string_view to_string(AcquisitionKind kind) {
  switch (kind) {
    case AcquisitionKind::balent_acq: return "balent_acq";
    case AcquisitionKind::bald: return "bald";
    case AcquisitionKind::power_bald: return "power_bald";
    case AcquisitionKind::margin: return "margin";
    case AcquisitionKind::entropy: return "entropy";
    case AcquisitionKind::random: return "random";
  }
  return "unknown";
}

AcquisitionKind parse_acquisition_kind(std::string_view name) {
  for (const auto kind : kAllKinds) {
    if (to_string(kind) == name) return kind;
  }
  throw ValidationError("unknown acquisition kind '" + std::string(name) +
                        "' (expected balent_acq, bald, power_bald, margin, entropy or random)");
}

std::span<const AcquisitionKind> all_acquisition_kinds() { return kAllKinds; }

PredictionCube::PredictionCube(Index height, Index width, Index num_classes, Index num_samples)
    : height_(height), width_(width), classes_(num_classes), samples_(num_samples) {
  if (height < 0 || width < 0 || num_classes < 0 || num_samples < 0) {
    throw ValidationError("cube dimensions must be non-negative");
  }
  values_.assign(static_cast<std::size_t>(height * width * num_classes * num_samples), 0.0f);
}

void PredictionCube::validate() const {
  if (height_ <= 0 || width_ <= 0 || classes_ <= 0) throw ValidationError("cube dimensions must be positive");
  if (samples_ < 2) throw ValidationError("cube num_samples m must be >= 2, got " + std::to_string(samples_));
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const float v = values_[i];
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw ValidationError("cube value " + std::to_string(v) + " at flat index " + std::to_string(i) +
                            " is outside [0, 1]");
    }
  }
  for (Index r = 0; r < height_; ++r) {
    for (Index c = 0; c < width_; ++c) {
      const auto sums = pixel(r, c).cast<double>().colwise().sum();
      for (Index j = 0; j < samples_; ++j) {
        if (std::abs(sums(j) - 1.0) > kSoftmaxTolerance) {
          throw ValidationError("cube pixel (" + std::to_string(r) + "," + std::to_string(c) + ") sample " +
                                std::to_string(j) + " sums to " + std::to_string(sums(j)) + ", not 1");
        }
      }
    }
  }
}

void ScoreMap::validate() const {
  if (scores.array().isNaN().any()) throw ValidationError("score map contains NaN");
}

LabelMap LabelMap::unlabeled(Index height, Index width, Index num_classes) {
  LabelMap map;
  map.num_classes = num_classes;
  map.labels = RowMajorMatrix<std::int32_t>::Constant(height, width, static_cast<std::int32_t>(num_classes));
  return map;
}

Index LabelMap::labeled_count() const { return (labels.array() != ignore_value()).count(); }

void LabelMap::validate() const {
  if (num_classes < 1) throw ValidationError("label map needs at least one class");
  if ((labels.array() < 0).any() || (labels.array() > ignore_value()).any()) {
    throw ValidationError("label map value outside [0, " + std::to_string(num_classes) + "]");
  }
}

void validate_unique(const SelectionList& selections) {
  std::set<std::tuple<std::size_t, Index, Index>> seen;
  for (const auto& e : selections) {
    if (!seen.emplace(e.image_id, e.row, e.col).second) {
      throw ValidationError("duplicate selection of image " + std::to_string(e.image_id) + " pixel (" +
                            std::to_string(e.row) + "," + std::to_string(e.col) + ")");
    }
  }
}

void write_cube(const PredictionCube& cube, const std::filesystem::path& path) {
  cube.validate();
  std::string bytes(kCubeMagic.begin(), kCubeMagic.end());
  bytes.reserve(kCubeHeaderBytes + cube.values().size() * sizeof(float));
  put_u32(bytes, static_cast<std::uint32_t>(cube.height()));
  put_u32(bytes, static_cast<std::uint32_t>(cube.width()));
  put_u32(bytes, static_cast<std::uint32_t>(cube.num_classes()));
  put_u32(bytes, static_cast<std::uint32_t>(cube.num_samples()));
  for (const float v : cube.values()) put_u32(bytes, std::bit_cast<std::uint32_t>(v));

  auto out = open_for_write(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  finish_write(out, path);
}

PredictionCube read_cube(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading", path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed", path.string());

  if (bytes.size() < kCubeHeaderBytes) throw FormatError(path.string() + ": truncated cube header");
  if (!std::equal(kCubeMagic.begin(), kCubeMagic.end(), bytes.begin())) {
    throw FormatError(path.string() + ": bad magic, expected BALCUBE1");
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + kCubeMagic.size();
  const std::uint64_t h = get_u32(p), w = get_u32(p + 4), c = get_u32(p + 8), m = get_u32(p + 12);
  if (h == 0 || w == 0 || c == 0 || m == 0) throw FormatError(path.string() + ": cube dimensions must be positive");

  // Each dimension fits in 32 bits; check the product stepwise against the payload.
  const std::uint64_t payload = bytes.size() - kCubeHeaderBytes;
  const std::uint64_t max_count = payload / sizeof(float);
  std::uint64_t count = 1;
  for (const std::uint64_t d : {h, w, c, m}) {
    if (count > max_count / d + 1) throw FormatError(path.string() + ": declared dimensions exceed payload");
    count *= d;
  }
  if (count * sizeof(float) != payload) {
    throw FormatError(path.string() + ": payload has " + std::to_string(payload) + " bytes, dimensions need " +
                      std::to_string(count * sizeof(float)));
  }

  PredictionCube cube(static_cast<Index>(h), static_cast<Index>(w), static_cast<Index>(c), static_cast<Index>(m));
  auto values = cube.values();
  const auto* q = p + 16;
  for (std::size_t i = 0; i < values.size(); ++i, q += 4) values[i] = std::bit_cast<float>(get_u32(q));
  cube.validate();
  return cube;
}

std::string format_real(double value) {
  if (std::isnan(value)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

void write_scores(const ScoreMap& map, const std::filesystem::path& path) {
  map.validate();
  auto out = open_for_write(path);
  out << "row,col,score\n";
  for (Index r = 0; r < map.height(); ++r) {
    for (Index c = 0; c < map.width(); ++c) out << r << ',' << c << ',' << format_real(map.scores(r, c)) << '\n';
  }
  finish_write(out, path);
}

ScoreMap read_scores(const std::filesystem::path& path, AcquisitionKind kind) {
  const auto table = csv::read(path);
  if (table.header != std::vector<std::string>{"row", "col", "score"}) {
    throw FormatError(path.string() + ": expected header row,col,score");
  }
  ScoreMap map;
  map.kind = kind;
  if (table.rows.empty()) return map;

  Index height = 0, width = 0;
  for (const auto& row : table.rows) {
    height = std::max<Index>(height, csv::parse_integer(row.fields[0], path, row.line) + 1);
    width = std::max<Index>(width, csv::parse_integer(row.fields[1], path, row.line) + 1);
  }
  if (static_cast<std::size_t>(height * width) != table.rows.size()) {
    throw FormatError(path.string() + ": " + std::to_string(table.rows.size()) + " rows do not cover a " +
                      std::to_string(height) + "x" + std::to_string(width) + " grid");
  }
  map.scores.resize(height, width);
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const auto r = csv::parse_integer(row.fields[0], path, row.line);
    const auto c = csv::parse_integer(row.fields[1], path, row.line);
    if (r * width + c != static_cast<long long>(i)) {
      throw FormatError(path.string() + ":" + std::to_string(row.line) + ": rows are not in row-major order");
    }
    const double score = csv::parse_real(row.fields[2], path, row.line);
    if (std::isnan(score)) throw FormatError(path.string() + ":" + std::to_string(row.line) + ": score is NaN");
    map.scores(r, c) = score;
  }
  return map;
}

void write_selections(const SelectionList& selections, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "image_id,row,col,cycle\n";
  for (const auto& e : selections) out << e.image_id << ',' << e.row << ',' << e.col << ',' << e.cycle << '\n';
  finish_write(out, path);
}

SelectionList read_selections(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  if (table.header != std::vector<std::string>{"image_id", "row", "col", "cycle"}) {
    throw FormatError(path.string() + ": expected header image_id,row,col,cycle");
  }
  SelectionList out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    SelectionEntry e;
    e.image_id = static_cast<std::size_t>(csv::parse_integer(row.fields[0], path, row.line));
    e.row = csv::parse_integer(row.fields[1], path, row.line);
    e.col = csv::parse_integer(row.fields[2], path, row.line);
    e.cycle = static_cast<std::size_t>(csv::parse_integer(row.fields[3], path, row.line));
    out.push_back(e);
  }
  return out;
}

LabelMap read_labeled_pixels(const std::filesystem::path& path, Index height, Index width, Index num_classes) {
  const auto table = csv::read(path);
  const int row_col = table.column("row");
  const int col_col = table.column("col");
  const int label_col = table.column("label");
  if (row_col < 0 || col_col < 0) throw FormatError(path.string() + ": header must name row and col columns");

  auto map = LabelMap::unlabeled(height, width, num_classes);
  for (const auto& row : table.rows) {
    const auto r = csv::parse_integer(row.fields[static_cast<std::size_t>(row_col)], path, row.line);
    const auto c = csv::parse_integer(row.fields[static_cast<std::size_t>(col_col)], path, row.line);
    if (r < 0 || r >= height || c < 0 || c >= width) {
      throw ValidationError(path.string() + ":" + std::to_string(row.line) + ": pixel (" + std::to_string(r) + "," +
                            std::to_string(c) + ") outside " + std::to_string(height) + "x" + std::to_string(width));
    }
    long long label = 0;
    if (label_col >= 0) label = csv::parse_integer(row.fields[static_cast<std::size_t>(label_col)], path, row.line);
    if (label < 0 || label >= num_classes) {
      throw ValidationError(path.string() + ":" + std::to_string(row.line) + ": label " + std::to_string(label) +
                            " outside [0, " + std::to_string(num_classes) + ")");
    }
    map.labels(r, c) = static_cast<std::int32_t>(label);
  }
  return map;
}

}  // namespace balent
