#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "ecoval/dataset.hpp"
#include "ecoval/error.hpp"
#include "ecoval/report.hpp"
#include "ecoval/synth.hpp"

namespace fs = std::filesystem;
using namespace ecoval;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "ecoval_data_test";
  fs::create_directories(dir);
  return dir / name;
}

void write_floats(const fs::path& path, const std::vector<float>& values) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(float)));
}

void write_meta(const fs::path& path, const nlohmann::json& meta) { std::ofstream(path) << meta.dump(); }

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an ecoval::Error";
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST(Dataset, LoadsDeclaredShape) {
  const auto emb = scratch("shape.f32");
  const auto meta = scratch("shape.json");
  write_floats(emb, {0, 1, 2, 3, 4, 5, 6, 7});
  write_meta(meta, {{"m", 4}, {"d", 2}, {"classes", 2}, {"labels", {0, 1, 0, 1}}, {"ids", {"a", "b", "c", "d"}}});
  const auto ds = load_dataset(emb, meta);
  EXPECT_EQ(ds.size(), 4u);
  EXPECT_EQ(ds.dim(), 2u);
  EXPECT_EQ(ds.num_classes(), 2u);
  EXPECT_DOUBLE_EQ(ds.point(3)(1), 7.0);
  EXPECT_EQ(ds.index_of("c"), 2u);
}

TEST(Dataset, ClassNamesMayBeListed) {
  const auto emb = scratch("names.f32");
  const auto meta = scratch("names.json");
  write_floats(emb, {0, 1, 2, 3});
  write_meta(meta, {{"m", 2}, {"d", 2}, {"classes", {"cat", "dog", "eel"}}, {"labels", {2, 0}}, {"ids", {"x", "y"}}});
  const auto ds = load_dataset(emb, meta);
  EXPECT_EQ(ds.num_classes(), 3u);
  EXPECT_EQ(ds.class_names()[2], "eel");
}

TEST(Dataset, RowCountMismatchIsShapeError) {
  const auto emb = scratch("short.f32");
  const auto meta = scratch("short.json");
  write_floats(emb, {0, 1, 2, 3, 4, 5, 6, 7});
  write_meta(meta, {{"m", 5}, {"d", 2}, {"classes", 2}, {"labels", {0, 1, 0, 1, 0}}, {"ids", {"a", "b", "c", "d", "e"}}});
  EXPECT_EQ(code_of([&] { load_dataset(emb, meta); }), ErrorCode::kShapeMismatch);
}

TEST(Dataset, NanIsNonFiniteError) {
  const auto emb = scratch("nan.f32");
  const auto meta = scratch("nan.json");
  write_floats(emb, {0, 1, std::numeric_limits<float>::quiet_NaN(), 3});
  write_meta(meta, {{"m", 2}, {"d", 2}, {"classes", 2}, {"labels", {0, 1}}, {"ids", {"a", "b"}}});
  EXPECT_EQ(code_of([&] { load_dataset(emb, meta); }), ErrorCode::kNonFinite);
}

TEST(Dataset, EachInvariantHasItsOwnDiagnostic) {
  Matrix p(2, 1);
  p << 0, 1;
  EXPECT_EQ(code_of([&] { EmbeddingDataset(p, {0, 1}, {"a", "a"}, {"n", "p"}); }), ErrorCode::kDuplicateId);
  EXPECT_EQ(code_of([&] { EmbeddingDataset(p, {0, 2}, {"a", "b"}, {"n", "p"}); }), ErrorCode::kUnknownClass);
  EXPECT_EQ(code_of([&] { EmbeddingDataset(p, {0, 1, 0}, {"a", "b"}, {"n", "p"}); }), ErrorCode::kShapeMismatch);
  EXPECT_EQ(code_of([&] { EmbeddingDataset(p, {0, 0}, {"a", "b"}, {"n"}); }), ErrorCode::kInvalidArgument);
  Matrix inf(2, 1);
  inf << 0, std::numeric_limits<double>::infinity();
  EXPECT_EQ(code_of([&] { EmbeddingDataset(inf, {0, 1}, {"a", "b"}, {"n", "p"}); }), ErrorCode::kNonFinite);
}

TEST(Dataset, MissingFileIsIoError) {
  EXPECT_EQ(code_of([&] { load_dataset(scratch("none.f32"), scratch("none.json")); }), ErrorCode::kIo);
}

TEST(Dataset, SaveLoadRoundTrip) {
  BlobOptions opt;
  opt.m = 30;
  opt.dim = 3;
  opt.label_noise = 0.2;
  const auto ds = make_blobs(opt);
  save_dataset(ds, scratch("rt.f32"), scratch("rt.json"));
  const auto back = load_dataset(scratch("rt.f32"), scratch("rt.json"));
  EXPECT_EQ(back.points(), ds.points());
  EXPECT_EQ(back.labels(), ds.labels());
  EXPECT_EQ(back.ids(), ds.ids());
  EXPECT_EQ(back.class_names(), ds.class_names());
  EXPECT_EQ(fs::file_size(scratch("rt.f32")), 30u * 3u * sizeof(float));
}

TEST(Splits, SizesFollowFractions) {
  BlobOptions opt;
  opt.m = 100;
  const auto ds = make_blobs(opt);
  const auto s = make_splits(ds, {0.2, 0.2, 0.4, 0.2}, 7);
  EXPECT_EQ(s.train.size(), 20u);
  EXPECT_EQ(s.test.size(), 20u);
  EXPECT_EQ(s.distribution_pool.size(), 40u);
  EXPECT_EQ(s.oos.size(), 20u);
  EXPECT_NO_THROW(s.validate(ds.size()));
}

TEST(Splits, DeterministicUnderSeed) {
  BlobOptions opt;
  opt.m = 100;
  const auto ds = make_blobs(opt);
  EXPECT_EQ(make_splits(ds, {0.2, 0.2, 0.4, 0.2}, 7), make_splits(ds, {0.2, 0.2, 0.4, 0.2}, 7));
  EXPECT_NE(make_splits(ds, {0.2, 0.2, 0.4, 0.2}, 7), make_splits(ds, {0.2, 0.2, 0.4, 0.2}, 8));
}

TEST(Splits, RejectsOverfullFractions) {
  BlobOptions opt;
  opt.m = 100;
  const auto ds = make_blobs(opt);
  EXPECT_EQ(code_of([&] { make_splits(ds, {0.4, 0.4, 0.4, 0.0}, 1); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { make_splits(ds, {-0.1, 0.4, 0.4, 0.0}, 1); }), ErrorCode::kInvalidArgument);
}

TEST(Splits, TooSmallForPositiveFraction) {
  BlobOptions opt;
  opt.m = 10;
  const auto ds = make_blobs(opt);
  EXPECT_EQ(code_of([&] { make_splits(ds, {0.5, 0.45, 0.05, 0.0}, 1); }), ErrorCode::kInvalidArgument);
}

TEST(Splits, DisjointAndStratified) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const std::size_t k = 2 + seed % 4;
    BlobOptions opt;
    opt.m = 150 + seed * 7;
    opt.classes = k;
    opt.label_noise = 0.3;
    opt.seed = seed;
    const auto ds = make_blobs(opt);
    const auto s = make_splits(ds, {0.3, 0.3, 0.25, 0.15}, seed);
    s.validate(ds.size());
    EXPECT_EQ(s.train.size(), static_cast<std::size_t>(0.3 * opt.m + 1e-9));
    std::vector<double> global(k, 0.0);
    for (int l : ds.labels()) global[static_cast<std::size_t>(l)] += 1.0 / static_cast<double>(ds.size());
    for (const IndexSet* part : {&s.train, &s.test, &s.distribution_pool, &s.oos}) {
      ASSERT_TRUE(std::is_sorted(part->begin(), part->end()));
      if (part->size() < 10 * k) continue;
      std::vector<double> counts(k, 0.0);
      for (Index i : *part) counts[static_cast<std::size_t>(ds.label(i))] += 1.0;
      for (std::size_t c = 0; c < k; ++c) {
        EXPECT_LE(std::abs(counts[c] - global[c] * static_cast<double>(part->size())), 1.0)
            << "seed " << seed << " class " << c;
      }
    }
  }
}

TEST(SplitSpec, ValidateCatchesOverlapAndRange) {
  SplitSpec s{{0, 1}, {1, 2}, {}, {}};
  EXPECT_THROW(s.validate(5), Error);
  SplitSpec r{{0, 9}, {}, {}, {}};
  EXPECT_THROW(r.validate(5), Error);
}

namespace {

ValueReport sample_report() {
  ValueReport r;
  r.method = Method::kEcoVal;
  r.seed = 42;
  r.ledger = {17, 3};
  r.notes["oos_rule"] = "frozen-cluster";
  const double gammas[3][2] = {{1.0588235294117647, 0.9411764705882353}, {1.0, 1.0}, {0.1 + 0.2, 0.7}};
  for (int i = 0; i < 3; ++i) {
    PointRecord p;
    p.id = "p" + std::to_string(i);
    p.cluster_id = i;
    p.cluster_value = 0.4 / 3.0 * (i + 1);
    p.cluster_size = 3;
    p.initial_value = p.cluster_value / 3.0;
    p.predicted = i == 1 ? std::numeric_limits<double>::quiet_NaN() : 1e-17 * (i + 1);
    p.distance = std::sqrt(2.0) * i;
    p.gamma_alpha = gammas[i][0];
    p.gamma_beta = gammas[i][1];
    p.value = p.initial_value * (p.gamma_alpha + p.gamma_beta - 1.0);
    r.records.push_back(p);
  }
  return r;
}

bool same(double a, double b) { return (std::isnan(a) && std::isnan(b)) || std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); }

}  // namespace

TEST(Report, WritesHeaderColumnsAndOneRowPerRecord) {
  const auto path = scratch("report.csv");
  write_report(sample_report(), path);
  std::ifstream in(path);
  std::string header, columns, line;
  std::getline(in, header);
  std::getline(in, columns);
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(header.front(), '#');
  const auto h = nlohmann::json::parse(header.substr(1));
  EXPECT_EQ(h.at("method"), "ecoval");
  EXPECT_EQ(h.at("seed"), 42);
  EXPECT_EQ(h.at("ledger").at("training_runs"), 17);
  EXPECT_EQ(columns, kReportColumns);
  EXPECT_EQ(rows, 3u);
}

TEST(Report, RoundTripIsIdentity) {
  const auto original = sample_report();
  const auto path = scratch("roundtrip.csv");
  write_report(original, path);
  const auto back = read_report(path);
  EXPECT_EQ(back.method, original.method);
  EXPECT_EQ(back.seed, original.seed);
  EXPECT_EQ(back.ledger, original.ledger);
  EXPECT_EQ(back.notes, original.notes);
  ASSERT_EQ(back.records.size(), original.records.size());
  for (std::size_t i = 0; i < back.records.size(); ++i) {
    const auto& a = original.records[i];
    const auto& b = back.records[i];
    EXPECT_EQ(a.id, b.id);
    EXPECT_EQ(a.cluster_id, b.cluster_id);
    EXPECT_EQ(a.cluster_size, b.cluster_size);
    for (auto [x, y] : {std::pair{a.cluster_value, b.cluster_value}, {a.initial_value, b.initial_value},
                        {a.predicted, b.predicted}, {a.distance, b.distance}, {a.gamma_alpha, b.gamma_alpha},
                        {a.gamma_beta, b.gamma_beta}, {a.value, b.value}}) {
      EXPECT_TRUE(same(x, y)) << x << " vs " << y;
    }
  }
}

TEST(Report, BaselineRoundTrip) {
  ValueReport r;
  r.method = Method::kTmc;
  r.records = {baseline_record("a", -0.25), baseline_record("b", 1e-300)};
  const auto path = scratch("baseline.csv");
  write_report(r, path);
  const auto back = read_report(path);
  EXPECT_EQ(back.method, Method::kTmc);
  EXPECT_EQ(back.records[1].value, 1e-300);
  EXPECT_EQ(back.records[0].cluster_id, -1);
  EXPECT_TRUE(std::isnan(back.records[0].gamma_alpha));
}

TEST(Report, MissingValueColumnIsMalformed) {
  const auto path = scratch("novalue.csv");
  std::ofstream(path) << "#{\"method\":\"loo\",\"seed\":0,\"ledger\":{\"training_runs\":0,\"cache_hits\":0}}\n"
                      << "id,cluster_id,V_c,n_c,V_i,Q_i,d_i,gamma_alpha,gamma_beta\n"
                      << "a,-1,nan,0,nan,nan,nan,nan,nan\n";
  EXPECT_EQ(code_of([&] { read_report(path); }), ErrorCode::kMalformed);
}

TEST(Report, MalformedInputs) {
  const auto header = std::string("#{\"method\":\"loo\",\"seed\":0,\"ledger\":{\"training_runs\":0,\"cache_hits\":0}}\n");
  const auto cols = std::string(kReportColumns) + "\n";
  const std::vector<std::string> bad = {
      "",
      cols + "a,-1,nan,0,nan,nan,nan,nan,nan,0.5\n",
      "#{not json}\n" + cols,
      "#{\"method\":\"nope\",\"seed\":0,\"ledger\":{\"training_runs\":0,\"cache_hits\":0}}\n" + cols,
      header + cols + "a,-1,nan,0,nan\n",
      header + cols + "a,-1,nan,0,nan,nan,nan,nan,nan,zero\n",
  };
  for (std::size_t i = 0; i < bad.size(); ++i) {
    const auto path = scratch("bad" + std::to_string(i) + ".csv");
    std::ofstream(path) << bad[i];
    EXPECT_EQ(code_of([&] { read_report(path); }), ErrorCode::kMalformed) << "case " << i;
  }
  EXPECT_EQ(code_of([&] { read_report(scratch("absent.csv")); }), ErrorCode::kIo);
}

TEST(Report, ValidateEnforcesInvariants) {
  auto r = sample_report();
  EXPECT_NO_THROW(r.validate());
  r.records[0].value *= 1.0 + 1e-9;
  EXPECT_THROW(r.validate(), Error);
  auto d = sample_report();
  d.records[1].id = d.records[0].id;
  EXPECT_THROW(d.validate(), Error);
  EXPECT_THROW(write_report(d, scratch("dup.csv")), Error);
}

TEST(Report, DoubleFormatting) {
  for (double v : {0.1, -2.5e-300, 1.0 / 3.0, 123456789.0, 0.0}) EXPECT_EQ(parse_double(format_double(v)), v);
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_TRUE(std::isnan(parse_double("nan")));
  EXPECT_THROW(parse_double("1.5x"), Error);
}

TEST(Report, MethodTags) {
  for (Method m : {Method::kEcoVal, Method::kEcoValNoAlpha, Method::kEcoValNoBeta, Method::kEcoValNoAdjustment,
                   Method::kTmc, Method::kLoo, Method::kExact}) {
    EXPECT_EQ(parse_method(to_string(m)), m);
  }
  EXPECT_FALSE(parse_method("ecoval-no-alpha").has_value());
  EXPECT_TRUE(is_ecoval(Method::kEcoValNoBeta));
  EXPECT_FALSE(is_ecoval(Method::kLoo));
}

TEST(Synth, BlobsAreDeterministicAndLabelled) {
  BlobOptions opt;
  opt.m = 50;
  opt.seed = 3;
  const auto a = make_blobs(opt);
  const auto b = make_blobs(opt);
  EXPECT_EQ(a.points(), b.points());
  EXPECT_EQ(a.labels(), b.labels());
  EXPECT_EQ(a.id(7), "p07");
  std::set<int> seen(a.labels().begin(), a.labels().end());
  EXPECT_EQ(seen.size(), 2u);
}
