#include "ecoval/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "ecoval/error.hpp"

namespace ecoval {
namespace {

using nlohmann::json;

float from_little_endian(std::uint32_t bits) {
  if constexpr (std::endian::native == std::endian::big) {
    bits = ((bits & 0xFFu) << 24) | ((bits & 0xFF00u) << 8) | ((bits >> 8) & 0xFF00u) | (bits >> 24);
  }
  return std::bit_cast<float>(bits);
}

std::uint32_t to_little_endian(float value) {
  auto bits = std::bit_cast<std::uint32_t>(value);
  if constexpr (std::endian::native == std::endian::big) {
    bits = ((bits & 0xFFu) << 24) | ((bits & 0xFF00u) << 8) | ((bits >> 8) & 0xFF00u) | (bits >> 24);
  }
  return bits;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformed, path.string() + ": " + e.what());
  }
}

}  // namespace

EmbeddingDataset::EmbeddingDataset(Matrix points, std::vector<int> labels,
                                   std::vector<std::string> ids,
                                   std::vector<std::string> class_names)
    : points_(std::move(points)),
      labels_(std::move(labels)),
      ids_(std::move(ids)),
      class_names_(std::move(class_names)) {
  const auto m = size();
  if (labels_.size() != m || ids_.size() != m) {
    throw Error(ErrorCode::kShapeMismatch,
                "points have " + std::to_string(m) + " rows but " + std::to_string(labels_.size()) +
                    " labels and " + std::to_string(ids_.size()) + " ids");
  }
  if (class_names_.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "a dataset needs at least 2 classes");
  }
  if (!points_.allFinite()) {
    for (Eigen::Index r = 0; r < points_.rows(); ++r) {
      if (!points_.row(r).allFinite()) {
        throw Error(ErrorCode::kNonFinite, "row " + std::to_string(r) + " has a non-finite entry");
      }
    }
  }
  const int k = static_cast<int>(class_names_.size());
  for (std::size_t i = 0; i < m; ++i) {
    if (labels_[i] < 0 || labels_[i] >= k) {
      throw Error(ErrorCode::kUnknownClass,
                  "row " + std::to_string(i) + " has label " + std::to_string(labels_[i]) +
                      " outside [0, " + std::to_string(k) + ")");
    }
    if (!by_id_.emplace(ids_[i], i).second) {
      throw Error(ErrorCode::kDuplicateId, "id '" + ids_[i] + "' appears more than once");
    }
  }
}

Index EmbeddingDataset::index_of(const std::string& id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) throw Error(ErrorCode::kInvalidArgument, "unknown id '" + id + "'");
  return it->second;
}

EmbeddingDataset load_dataset(const std::filesystem::path& embeddings_path,
                              const std::filesystem::path& meta_path) {
  const json meta = read_json(meta_path);
  std::size_t m = 0;
  std::size_t d = 0;
  std::vector<int> labels;
  std::vector<std::string> ids;
  std::vector<std::string> classes;
  try {
    m = meta.at("m").get<std::size_t>();
    d = meta.at("d").get<std::size_t>();
    labels = meta.at("labels").get<std::vector<int>>();
    ids = meta.at("ids").get<std::vector<std::string>>();
    const auto& cls = meta.at("classes");
    if (cls.is_number_integer()) {
      for (int c = 0; c < cls.get<int>(); ++c) classes.push_back(std::to_string(c));
    } else {
      classes = cls.get<std::vector<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformed, meta_path.string() + ": " + e.what());
  }
  if (d == 0) throw Error(ErrorCode::kShapeMismatch, "metadata declares d = 0");
  if (labels.size() != m || ids.size() != m) {
    throw Error(ErrorCode::kShapeMismatch, "metadata declares m = " + std::to_string(m) +
                                               " but lists " + std::to_string(labels.size()) +
                                               " labels and " + std::to_string(ids.size()) + " ids");
  }

  std::ifstream in(embeddings_path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + embeddings_path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t expected = m * d * sizeof(float);
  if (bytes.size() != expected) {
    throw Error(ErrorCode::kShapeMismatch,
                embeddings_path.string() + " holds " + std::to_string(bytes.size()) +
                    " bytes; metadata (m = " + std::to_string(m) + ", d = " + std::to_string(d) +
                    ") requires " + std::to_string(expected));
  }
  Matrix points(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < m * d; ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, bytes.data() + i * sizeof(float), sizeof(float));
    points.data()[i] = static_cast<double>(from_little_endian(bits));
  }
  return EmbeddingDataset(std::move(points), std::move(labels), std::move(ids), std::move(classes));
}

void save_dataset(const EmbeddingDataset& ds, const std::filesystem::path& embeddings_path,
                  const std::filesystem::path& meta_path) {
  std::ofstream out(embeddings_path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + embeddings_path.string());
  const Matrix& p = ds.points();
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const auto bits = to_little_endian(static_cast<float>(p.data()[i]));
    out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
  if (!out) throw Error(ErrorCode::kIo, "short write to " + embeddings_path.string());

  json meta;
  meta["m"] = ds.size();
  meta["d"] = ds.dim();
  meta["classes"] = ds.class_names();
  meta["labels"] = ds.labels();
  meta["ids"] = ds.ids();
  std::ofstream mout(meta_path, std::ios::trunc);
  if (!mout) throw Error(ErrorCode::kIo, "cannot write " + meta_path.string());
  mout << meta.dump() << '\n';
  if (!mout) throw Error(ErrorCode::kIo, "short write to " + meta_path.string());
}

void SplitSpec::validate(std::size_t m) const {
  std::vector<char> seen(m, 0);
  for (const IndexSet* set : {&train, &test, &distribution_pool, &oos}) {
    for (Index i : *set) {
      if (i >= m) {
        throw Error(ErrorCode::kInvalidArgument,
                    "split index " + std::to_string(i) + " out of range for m = " + std::to_string(m));
      }
      if (seen[i]) {
        throw Error(ErrorCode::kInvalidArgument,
                    "index " + std::to_string(i) + " appears in more than one split");
      }
      seen[i] = 1;
    }
  }
}

SplitSpec make_splits(const EmbeddingDataset& ds, const std::array<double, 4>& fractions,
                      std::uint64_t seed) {
  double total = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "split fractions must be nonnegative");
    total += f;
  }
  if (total > 1.0 + 1e-9) {
    throw Error(ErrorCode::kInvalidArgument,
                "split fractions sum to " + std::to_string(total) + " > 1");
  }

  const std::size_t m = ds.size();
  const std::size_t k = ds.num_classes();
  std::array<std::size_t, 4> split_size{};
  for (std::size_t s = 0; s < 4; ++s) {
    split_size[s] = static_cast<std::size_t>(std::floor(fractions[s] * static_cast<double>(m) + 1e-9));
    if (fractions[s] > 0.0 && split_size[s] == 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "split " + std::to_string(s) + " would be empty with m = " + std::to_string(m));
    }
  }

  std::vector<IndexSet> by_class(k);
  for (Index i = 0; i < m; ++i) by_class[static_cast<std::size_t>(ds.label(i))].push_back(i);
  std::mt19937_64 rng(seed);
  for (auto& members : by_class) std::shuffle(members.begin(), members.end(), rng);

  // Class x split counts. Every cell is its proportional quota rounded down or
  // up, with row sums equal to the class sizes and column sums equal to the
  // split sizes (the fifth column is the unassigned rest). The round-up cells
  // are chosen by a unit-capacity max flow, which always saturates.
  constexpr std::size_t kCols = 5;
  std::array<std::size_t, kCols> col_size{};
  std::copy(split_size.begin(), split_size.end(), col_size.begin());
  col_size[4] = m - (split_size[0] + split_size[1] + split_size[2] + split_size[3]);
  std::vector<std::array<std::size_t, kCols>> count(k);
  std::vector<std::array<bool, kCols>> fractional(k);
  std::vector<std::size_t> row_extra(k, 0);
  std::array<std::size_t, kCols> col_extra = col_size;
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t floors = 0;
    for (std::size_t s = 0; s < kCols; ++s) {
      const std::size_t num = by_class[c].size() * col_size[s];
      count[c][s] = num / m;
      fractional[c][s] = num % m != 0;
      floors += count[c][s];
      col_extra[s] -= count[c][s];
    }
    row_extra[c] = by_class[c].size() - floors;
  }
  std::vector<std::array<bool, kCols>> used(k);
  for (auto& u : used) u.fill(false);
  for (bool grew = true; grew;) {
    grew = false;
    for (std::size_t c0 = 0; c0 < k; ++c0) {
      if (row_extra[c0] == 0) continue;
      // Breadth-first search for an augmenting path: class -> split along a
      // round-up candidate, split -> class back along a chosen cell, ending at
      // a split that still has spare seats.
      std::array<std::size_t, kCols> row_of_col;
      row_of_col.fill(k);
      std::vector<std::size_t> col_of_row(k, kCols);
      std::vector<bool> seen_row(k, false);
      std::vector<std::size_t> queue{c0};
      seen_row[c0] = true;
      std::size_t end_col = kCols;
      for (std::size_t head = 0; head < queue.size() && end_col == kCols; ++head) {
        const std::size_t c = queue[head];
        for (std::size_t s = 0; s < kCols; ++s) {
          if (!fractional[c][s] || used[c][s] || row_of_col[s] != k) continue;
          row_of_col[s] = c;
          if (col_extra[s] > 0) {
            end_col = s;
            break;
          }
          for (std::size_t c2 = 0; c2 < k; ++c2) {
            if (used[c2][s] && !seen_row[c2]) {
              seen_row[c2] = true;
              col_of_row[c2] = s;
              queue.push_back(c2);
            }
          }
        }
      }
      if (end_col == kCols) continue;
      --col_extra[end_col];
      for (std::size_t s = end_col;;) {
        const std::size_t c = row_of_col[s];
        used[c][s] = true;
        if (c == c0) break;
        s = col_of_row[c];
        used[c][s] = false;
      }
      --row_extra[c0];
      grew = true;
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (row_extra[c] != 0) throw Error(ErrorCode::kInvalidArgument, "stratified allocation failed");
    for (std::size_t s = 0; s < kCols; ++s) count[c][s] += used[c][s] ? 1 : 0;
  }

  SplitSpec spec;
  const std::array<IndexSet*, 4> outputs = {&spec.train, &spec.test, &spec.distribution_pool,
                                            &spec.oos};
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t cursor = 0;
    for (std::size_t s = 0; s < 4; ++s) {
      for (std::size_t j = 0; j < count[c][s]; ++j) outputs[s]->push_back(by_class[c][cursor++]);
    }
  }
  for (auto* out : outputs) std::sort(out->begin(), out->end());
  return spec;
}

}  // namespace ecoval
