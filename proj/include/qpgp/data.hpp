#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qpgp {

struct Sample {
  std::vector<double> features;
  std::size_t label = 0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

enum class TaskName { Mnist2, Mnist4, Fashion2, Fashion4, Vowel4 };

std::string_view task_name(TaskName task);
TaskName parse_task(std::string_view name);

enum class DataSource { Mnist, Fashion, Vowel };

struct DatasetSpec {
  TaskName name = TaskName::Mnist2;
  DataSource source = DataSource::Mnist;
  std::vector<int> classes;  ///< raw labels, in the order they are relabelled 0..k-1
  std::size_t train_count = 0;
  std::size_t val_count = 0;
  std::uint64_t seed = 0;  ///< validation sampling seed
};

/// Task presets: class lists and split sizes.
DatasetSpec dataset_spec_for(TaskName task, std::uint64_t seed = 0);

struct Dataset {
  std::vector<Sample> train;
  std::vector<Sample> val;
  std::size_t num_features = 0;
  std::size_t num_classes = 0;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct IdxImages {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;  ///< count * rows * cols, row-major per image

  std::span<const std::uint8_t> image(std::size_t i) const {
    return {pixels.data() + i * rows * cols, rows * cols};
  }
};

/// IDX readers (big-endian magic 0x00000803 / 0x00000801). Files may be
/// gzip-compressed. Throw std::runtime_error on malformed input.
IdxImages parse_idx_images(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes);
IdxImages read_idx_images(const std::filesystem::path& path);
std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path);

/// 28x28 uint8 image -> 16 features in [0, 1]: scale by 1/255, center-crop to
/// 24x24 (rows/cols 2..25), average-pool 6x6 blocks, flatten row-major.
std::vector<double> preprocess_image(std::span<const std::uint8_t> pixels, std::size_t rows = 28,
                                     std::size_t cols = 28);

/// Filters to the DatasetSpec classes (original order), relabels, takes the front
/// train_count samples for training and draws val_count validation samples
/// uniformly without replacement from the rest using spec.seed.
Dataset load_image_dataset(const IdxImages& images, std::span<const std::uint8_t> labels,
                           const DatasetSpec& spec);

struct VowelTable {
  std::vector<std::vector<double>> features;
  std::vector<int> labels;
};

/// Comma- or whitespace-delimited rows; `skip_columns` leading columns are
/// ignored and the last column is the integer class label.
VowelTable parse_vowel_table(std::string_view text, std::size_t skip_columns = 3);
VowelTable read_vowel_table(const std::filesystem::path& path, std::size_t skip_columns = 3);

/// Principal components of row-major data.
struct Pca {
  std::vector<double> mean;
  std::vector<double> scale;        ///< per-feature standard deviation used for standardization
  std::vector<double> eigenvalues;  ///< descending
  std::vector<std::vector<double>> components;  ///< components[c] is a unit loading vector
  std::vector<double> all_eigenvalues;          ///< full spectrum, descending

  /// Standardizes, then fits on `rows`. Throws std::runtime_error when fewer
  /// than `dims` eigenvalues are nonzero.
  static Pca fit(const std::vector<std::vector<double>>& rows, std::size_t dims);

  std::vector<double> standardize(std::span<const double> row) const;
  std::vector<double> project(std::span<const double> row) const;
  double explained_variance_ratio() const;
};

/// Filters to the DatasetSpec classes, fits standardization + PCA on the front
/// train_count rows, projects every row onto the top 10 components.
Dataset load_vowel_dataset(const VowelTable& table, const DatasetSpec& spec, std::size_t dims = 10);

/// Directory holding mnist/, fashion/ and vowel/. QPGP_DATA_ROOT overrides the
/// compiled-in default.
std::filesystem::path data_root();

/// Loads the task's dataset from `root`. Processed datasets are cached under
/// `root`/cache/ (see dataset_cache_path) and reused on later loads; set
/// QPGP_DATA_CACHE=0 to bypass the cache. Cache write failures are ignored.
Dataset load_task_dataset(const DatasetSpec& spec, const std::filesystem::path& root = data_root());

/// Cache file for a spec: cache/<task>-c<classes>-n<train>-<val>-s<seed>.qpgd
std::filesystem::path dataset_cache_path(const DatasetSpec& spec, const std::filesystem::path& root);

// Processed-dataset cache, little-endian:
//   char[4] "QPGD", u32 version (1), u32 num_features, u32 num_classes,
//   u32 train_count, u32 val_count, then train samples followed by val
//   samples, each as u32 label + num_features f64 values.
void save_dataset_cache(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset_cache(const std::filesystem::path& path);

}  // namespace qpgp
