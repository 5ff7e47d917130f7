#include "qpgp/data.hpp"

#include <zlib.h>

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string_view>

#include <unistd.h>

#include "qpgp/rng.hpp"

#ifndef QPGP_DEFAULT_DATA_ROOT
#define QPGP_DEFAULT_DATA_ROOT "data"
#endif

namespace qpgp {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;
constexpr std::uint64_t kValidationTag = 0x56414cULL;  // "VAL"

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  if (offset + 4 > bytes.size()) throw std::runtime_error("IDX: truncated header");
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

/// Reads a whole file, inflating it if gzip-compressed.
std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::unique_ptr<gzFile_s, decltype(&gzclose)> file(gzopen(path.string().c_str(), "rb"), &gzclose);
  if (!file) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::uint8_t> out;
  std::uint8_t buf[1 << 16];
  int got = 0;
  while ((got = gzread(file.get(), buf, sizeof(buf))) > 0) out.insert(out.end(), buf, buf + got);
  if (got < 0) throw std::runtime_error("read error in " + path.string());
  return out;
}

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

/// Front `train_count` positions train; `val_count` positions sampled without
/// replacement from the remainder, returned in ascending order.
Split split_front_and_sample(std::size_t pool, const DatasetSpec& spec) {
  if (pool < spec.train_count + spec.val_count)
    throw std::runtime_error(std::string(task_name(spec.name)) + ": need " +
                             std::to_string(spec.train_count + spec.val_count) +
                             " samples after class filtering, have " + std::to_string(pool));
  Split s;
  s.train.resize(spec.train_count);
  std::iota(s.train.begin(), s.train.end(), std::size_t{0});
  std::vector<std::size_t> rest(pool - spec.train_count);
  std::iota(rest.begin(), rest.end(), spec.train_count);
  Rng rng(stream_key(spec.seed, {kValidationTag}));
  for (std::size_t i = 0; i < spec.val_count; ++i) {
    const std::size_t j = i + rng.below(rest.size() - i);
    std::swap(rest[i], rest[j]);
  }
  s.val.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(spec.val_count));
  std::sort(s.val.begin(), s.val.end());
  return s;
}

std::size_t class_position(const std::vector<int>& classes, int raw) {
  const auto it = std::find(classes.begin(), classes.end(), raw);
  return it == classes.end() ? classes.size() : static_cast<std::size_t>(it - classes.begin());
}

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 24)};
  out.write(b, 4);
}

void put_f64(std::ostream& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  put_u32(out, static_cast<std::uint32_t>(v));
  put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("dataset cache truncated");
  return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) |
         (std::uint32_t{b[3]} << 24);
}

double get_f64(std::istream& in) {
  const std::uint64_t lo = get_u32(in);
  const std::uint64_t hi = get_u32(in);
  return std::bit_cast<double>(lo | (hi << 32));
}

}  // namespace

std::string_view task_name(TaskName task) {
  switch (task) {
    case TaskName::Mnist2: return "mnist2";
    case TaskName::Mnist4: return "mnist4";
    case TaskName::Fashion2: return "fashion2";
    case TaskName::Fashion4: return "fashion4";
    case TaskName::Vowel4: return "vowel4";
  }
  return "?";
}

TaskName parse_task(std::string_view name) {
  for (TaskName t : {TaskName::Mnist2, TaskName::Mnist4, TaskName::Fashion2, TaskName::Fashion4,
                     TaskName::Vowel4})
    if (task_name(t) == name) return t;
  throw std::invalid_argument("unknown task '" + std::string(name) + "'");
}

DatasetSpec dataset_spec_for(TaskName task, std::uint64_t seed) {
  DatasetSpec s;
  s.name = task;
  s.seed = seed;
  s.val_count = 300;
  switch (task) {
    case TaskName::Mnist2:
      s.source = DataSource::Mnist;
      s.classes = {3, 6};
      s.train_count = 500;
      break;
    case TaskName::Mnist4:
      s.source = DataSource::Mnist;
      s.classes = {0, 1, 2, 3};
      s.train_count = 100;
      break;
    case TaskName::Fashion2:
      s.source = DataSource::Fashion;
      s.classes = {3, 6};  // dress, shirt
      s.train_count = 500;
      break;
    case TaskName::Fashion4:
      s.source = DataSource::Fashion;
      s.classes = {0, 1, 2, 3};  // t-shirt/top, trouser, pullover, dress
      s.train_count = 100;
      break;
    case TaskName::Vowel4:
      s.source = DataSource::Vowel;
      s.classes = {0, 1, 5, 6};  // hid, hId, had, hOd
      s.train_count = 100;
      // 360 rows belong to these classes; 260 remain after the training front.
      s.val_count = 260;
      break;
  }
  return s;
}

IdxImages parse_idx_images(std::span<const std::uint8_t> bytes) {
  if (read_be32(bytes, 0) != kImageMagic) throw std::runtime_error("IDX: bad image magic");
  IdxImages img;
  img.count = read_be32(bytes, 4);
  img.rows = read_be32(bytes, 8);
  img.cols = read_be32(bytes, 12);
  const std::size_t need = img.count * img.rows * img.cols;
  if (bytes.size() - 16 != need) throw std::runtime_error("IDX: image payload size mismatch");
  img.pixels.assign(bytes.begin() + 16, bytes.end());
  return img;
}

std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes) {
  if (read_be32(bytes, 0) != kLabelMagic) throw std::runtime_error("IDX: bad label magic");
  const std::size_t count = read_be32(bytes, 4);
  if (bytes.size() - 8 != count) throw std::runtime_error("IDX: label payload size mismatch");
  return {bytes.begin() + 8, bytes.end()};
}

IdxImages read_idx_images(const std::filesystem::path& path) { return parse_idx_images(slurp(path)); }

std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path) {
  return parse_idx_labels(slurp(path));
}

std::vector<double> preprocess_image(std::span<const std::uint8_t> pixels, std::size_t rows,
                                     std::size_t cols) {
  constexpr std::size_t kCrop = 24, kOffset = 2, kBlock = 6, kOut = 4;
  if (rows != 28 || cols != 28 || pixels.size() != rows * cols)
    throw std::invalid_argument("expected a 28x28 image");
  std::vector<double> out(kOut * kOut, 0.0);
  for (std::size_t r = 0; r < kCrop; ++r)
    for (std::size_t c = 0; c < kCrop; ++c)
      out[(r / kBlock) * kOut + c / kBlock] += pixels[(r + kOffset) * cols + c + kOffset];
  for (double& v : out) v /= 255.0 * kBlock * kBlock;
  return out;
}

Dataset load_image_dataset(const IdxImages& images, std::span<const std::uint8_t> labels,
                           const DatasetSpec& spec) {
  if (images.count != labels.size()) throw std::runtime_error("image and label counts differ");
  std::vector<Sample> pool;
  for (std::size_t i = 0; i < images.count; ++i) {
    const std::size_t cls = class_position(spec.classes, labels[i]);
    if (cls == spec.classes.size()) continue;
    pool.push_back({preprocess_image(images.image(i), images.rows, images.cols), cls});
  }
  const Split split = split_front_and_sample(pool.size(), spec);
  Dataset d;
  d.num_features = 16;
  d.num_classes = spec.classes.size();
  for (std::size_t i : split.train) d.train.push_back(pool[i]);
  for (std::size_t i : split.val) d.val.push_back(pool[i]);
  return d;
}

VowelTable parse_vowel_table(std::string_view text, std::size_t skip_columns) {
  VowelTable t;
  std::size_t width = 0;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (line.empty() || line.front() == '#' || line.find_first_not_of(" \t\r,") == std::string_view::npos)
      continue;
    std::vector<double> values;
    std::size_t pos = 0;
    while (pos < line.size()) {
      pos = line.find_first_not_of(" \t\r,", pos);
      if (pos == std::string_view::npos) break;
      const std::size_t end = std::min(line.find_first_of(" \t\r,", pos), line.size());
      const std::string token(line.substr(pos, end - pos));
      char* stop = nullptr;
      const double v = std::strtod(token.c_str(), &stop);
      if (stop == token.c_str() || *stop != '\0' || !std::isfinite(v))
        throw std::runtime_error("vowel table line " + std::to_string(line_no) + ": bad value '" + token + "'");
      values.push_back(v);
      pos = end;
    }
    if (values.size() < skip_columns + 2)
      throw std::runtime_error("vowel table line " + std::to_string(line_no) + ": too few columns");
    if (width == 0) width = values.size();
    if (values.size() != width)
      throw std::runtime_error("vowel table line " + std::to_string(line_no) + ": ragged row");
    t.labels.push_back(static_cast<int>(values.back()));
    t.features.emplace_back(values.begin() + static_cast<std::ptrdiff_t>(skip_columns), values.end() - 1);
  }
  if (t.labels.empty()) throw std::runtime_error("vowel table is empty");
  return t;
}

VowelTable read_vowel_table(const std::filesystem::path& path, std::size_t skip_columns) {
  const std::vector<std::uint8_t> bytes = slurp(path);
  return parse_vowel_table({reinterpret_cast<const char*>(bytes.data()), bytes.size()}, skip_columns);
}

Pca Pca::fit(const std::vector<std::vector<double>>& rows, std::size_t dims) {
  if (rows.size() < 2) throw std::runtime_error("PCA needs at least two rows");
  const std::size_t n = rows.size();
  const std::size_t f = rows.front().size();
  if (dims == 0 || dims > f) throw std::invalid_argument("PCA dimension out of range");

  Pca pca;
  pca.mean.assign(f, 0.0);
  pca.scale.assign(f, 0.0);
  for (const auto& r : rows) {
    if (r.size() != f) throw std::invalid_argument("PCA rows differ in length");
    for (std::size_t j = 0; j < f; ++j) pca.mean[j] += r[j];
  }
  for (double& m : pca.mean) m /= static_cast<double>(n);
  for (const auto& r : rows)
    for (std::size_t j = 0; j < f; ++j) pca.scale[j] += (r[j] - pca.mean[j]) * (r[j] - pca.mean[j]);
  for (double& s : pca.scale) {
    s = std::sqrt(s / static_cast<double>(n - 1));
    if (s == 0.0) s = 1.0;
  }

  Eigen::MatrixXd z(n, f);
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double> s = pca.standardize(rows[i]);
    for (std::size_t j = 0; j < f; ++j) z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s[j];
  }
  const Eigen::MatrixXd cov = (z.transpose() * z) / static_cast<double>(n - 1);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw std::runtime_error("PCA eigendecomposition failed");

  // Eigen returns ascending eigenvalues.
  const Eigen::VectorXd values = solver.eigenvalues();
  const double tol = 1e-12 * std::max(1.0, values.cwiseAbs().maxCoeff());
  std::size_t nonzero = 0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    pca.all_eigenvalues.push_back(values(values.size() - 1 - i));
    nonzero += values(i) > tol;
  }
  if (nonzero < dims)
    throw std::runtime_error("PCA rank deficiency: " + std::to_string(nonzero) + " nonzero eigenvalues, need " +
                             std::to_string(dims));
  for (std::size_t c = 0; c < dims; ++c) {
    const Eigen::Index col = values.size() - 1 - static_cast<Eigen::Index>(c);
    std::vector<double> v(f);
    std::size_t peak = 0;
    for (std::size_t j = 0; j < f; ++j) {
      v[j] = solver.eigenvectors()(static_cast<Eigen::Index>(j), col);
      if (std::abs(v[j]) > std::abs(v[peak])) peak = j;
    }
    if (v[peak] < 0.0)
      for (double& x : v) x = -x;
    pca.eigenvalues.push_back(values(col));
    pca.components.push_back(std::move(v));
  }
  return pca;
}

std::vector<double> Pca::standardize(std::span<const double> row) const {
  if (row.size() != mean.size()) throw std::invalid_argument("row length mismatch");
  std::vector<double> out(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) out[j] = (row[j] - mean[j]) / scale[j];
  return out;
}

std::vector<double> Pca::project(std::span<const double> row) const {
  const std::vector<double> z = standardize(row);
  std::vector<double> out(components.size(), 0.0);
  for (std::size_t c = 0; c < components.size(); ++c)
    for (std::size_t j = 0; j < z.size(); ++j) out[c] += components[c][j] * z[j];
  return out;
}

double Pca::explained_variance_ratio() const {
  const double kept = std::accumulate(eigenvalues.begin(), eigenvalues.end(), 0.0);
  const double total = std::accumulate(all_eigenvalues.begin(), all_eigenvalues.end(), 0.0);
  return kept / total;
}

Dataset load_vowel_dataset(const VowelTable& table, const DatasetSpec& spec, std::size_t dims) {
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < table.labels.size(); ++i) {
    const std::size_t cls = class_position(spec.classes, table.labels[i]);
    if (cls == spec.classes.size()) continue;
    rows.push_back(table.features[i]);
    labels.push_back(cls);
  }
  const Split split = split_front_and_sample(rows.size(), spec);
  std::vector<std::vector<double>> train_rows;
  for (std::size_t i : split.train) train_rows.push_back(rows[i]);
  const Pca pca = Pca::fit(train_rows, dims);

  Dataset d;
  d.num_features = dims;
  d.num_classes = spec.classes.size();
  for (std::size_t i : split.train) d.train.push_back({pca.project(rows[i]), labels[i]});
  for (std::size_t i : split.val) d.val.push_back({pca.project(rows[i]), labels[i]});
  return d;
}

std::filesystem::path data_root() {
  if (const char* env = std::getenv("QPGP_DATA_ROOT"); env != nullptr && *env != '\0') return env;
  return QPGP_DEFAULT_DATA_ROOT;
}

namespace {

Dataset build_task_dataset(const DatasetSpec& spec, const std::filesystem::path& root) {
  switch (spec.source) {
    case DataSource::Mnist:
    case DataSource::Fashion: {
      const auto dir = root / (spec.source == DataSource::Mnist ? "mnist" : "fashion");
      const IdxImages images = read_idx_images(dir / "train-images-idx3-ubyte.gz");
      const std::vector<std::uint8_t> labels = read_idx_labels(dir / "train-labels-idx1-ubyte.gz");
      return load_image_dataset(images, labels, spec);
    }
    case DataSource::Vowel:
      return load_vowel_dataset(read_vowel_table(root / "vowel" / "vowel.data"), spec);
  }
  throw std::logic_error("unreachable");
}

bool cache_enabled() {
  const char* env = std::getenv("QPGP_DATA_CACHE");
  return env == nullptr || std::string_view(env) != "0";
}

}  // namespace

std::filesystem::path dataset_cache_path(const DatasetSpec& spec, const std::filesystem::path& root) {
  std::string name(task_name(spec.name));
  name += "-c";
  for (std::size_t i = 0; i < spec.classes.size(); ++i) name += (i ? "." : "") + std::to_string(spec.classes[i]);
  name += "-n" + std::to_string(spec.train_count) + "-" + std::to_string(spec.val_count);
  name += "-s" + std::to_string(spec.seed) + ".qpgd";
  return root / "cache" / name;
}

Dataset load_task_dataset(const DatasetSpec& spec, const std::filesystem::path& root) {
  if (!cache_enabled()) return build_task_dataset(spec, root);
  const auto path = dataset_cache_path(spec, root);
  std::error_code ec;
  if (std::filesystem::is_regular_file(path, ec)) {
    try {
      Dataset d = load_dataset_cache(path);
      if (d.num_classes == spec.classes.size()) return d;
    } catch (const std::runtime_error&) {
      // Unreadable cache: rebuild below.
    }
  }
  Dataset d = build_task_dataset(spec, root);
  auto tmp = path;
  tmp += ".tmp" + std::to_string(stream_key(spec.seed, {static_cast<std::uint64_t>(::getpid())}));
  try {
    std::filesystem::create_directories(path.parent_path(), ec);
    save_dataset_cache(d, tmp);
    std::filesystem::rename(tmp, path, ec);
  } catch (const std::exception&) {
    // Read-only data roots stay uncached.
  }
  std::filesystem::remove(tmp, ec);
  return d;
}

void save_dataset_cache(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write("QPGD", 4);
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(dataset.num_features));
  put_u32(out, static_cast<std::uint32_t>(dataset.num_classes));
  put_u32(out, static_cast<std::uint32_t>(dataset.train.size()));
  put_u32(out, static_cast<std::uint32_t>(dataset.val.size()));
  for (const auto* part : {&dataset.train, &dataset.val}) {
    for (const Sample& s : *part) {
      if (s.features.size() != dataset.num_features) throw std::invalid_argument("sample width mismatch");
      put_u32(out, static_cast<std::uint32_t>(s.label));
      for (double v : s.features) put_f64(out, v);
    }
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Dataset load_dataset_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::string_view(magic, 4) != "QPGD")
    throw std::runtime_error("not a dataset cache: " + path.string());
  if (get_u32(in) != 1) throw std::runtime_error("unsupported dataset cache version");
  Dataset d;
  d.num_features = get_u32(in);
  d.num_classes = get_u32(in);
  const std::size_t train = get_u32(in);
  const std::size_t val = get_u32(in);
  auto read_part = [&](std::vector<Sample>& part, std::size_t count) {
    part.resize(count);
    for (Sample& s : part) {
      s.label = get_u32(in);
      s.features.resize(d.num_features);
      for (double& v : s.features) v = get_f64(in);
    }
  };
  read_part(d.train, train);
  read_part(d.val, val);
  return d;
}

}  // namespace qpgp
