#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>

#include "emohead/errors.hpp"
#include "emohead/manifest.hpp"
#include "emohead/synthetic.hpp"
#include "emohead/tensor_file.hpp"

namespace emohead {
namespace {

namespace fs = std::filesystem;

class TempDir : public ::testing::Test {
 protected:
  fs::path dir_;
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("emohead_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  void write_text(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }
  std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
  }
};

TEST(TensorFile, SequentialRoundTrip) {
  std::vector<float> v(24);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(i);
  const Tensor t({2, 3, 4}, v);
  const auto back = decode_tensor(encode_tensor(t));
  EXPECT_EQ(back.shape(), t.shape());
  EXPECT_TRUE(std::equal(back.data().begin(), back.data().end(), t.data().begin()));
}

TEST(TensorFile, HeaderLayoutIsLittleEndian) {
  const auto bytes = encode_tensor(Tensor::vector({1.0f}));
  ASSERT_EQ(bytes.size(), 4u + 3 + 4 + 4);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "SERT");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5], 1);
  EXPECT_EQ(bytes[6], 1);
  EXPECT_EQ(bytes[7], 1);  // dim 1, low byte first
  EXPECT_EQ(bytes[14], 0x3f);
  EXPECT_EQ(bytes[13], 0x80);
}

TEST(TensorFile, BitExactSpecialValues) {
  const Tensor t({3}, {-0.0f, 1e-40f, std::numeric_limits<float>::max()});
  const auto back = decode_tensor(encode_tensor(t));
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(std::bit_cast<std::uint32_t>(back[i]), std::bit_cast<std::uint32_t>(t[i]));
  }
}

TEST(TensorFile, FormatErrors) {
  auto bytes = encode_tensor(Tensor::vector({1, 2}));
  auto bad = bytes;
  std::copy_n("XXXX", 4, bad.begin());
  EXPECT_THROW(decode_tensor(bad), FormatError);
  bad = bytes;
  bad[4] = 2;
  EXPECT_THROW(decode_tensor(bad), FormatError);
  bad = bytes;
  bad[5] = 7;
  EXPECT_THROW(decode_tensor(bad), FormatError);
  bad = bytes;
  bad[6] = 4;
  EXPECT_THROW(decode_tensor(bad), FormatError);
  EXPECT_THROW(encode_tensor(Tensor::zeros({1, 1, 1, 1})), DimensionError);
}

TEST(TensorFile, CorruptionErrors) {
  // Header declares [2,2] (16 payload bytes) but only 12 follow.
  auto bytes = encode_tensor(Tensor::zeros({2, 2}));
  bytes.resize(bytes.size() - 4);
  EXPECT_THROW(decode_tensor(bytes), CorruptionError);
  auto longer = encode_tensor(Tensor::zeros({2, 2}));
  longer.push_back(0);
  EXPECT_THROW(decode_tensor(longer), CorruptionError);
  EXPECT_THROW(decode_tensor(std::vector<std::uint8_t>{'S', 'E', 'R'}), CorruptionError);
  const auto header_only = encode_tensor(Tensor::zeros({2, 2}));
  EXPECT_THROW(decode_tensor(std::span(header_only).first(9)), CorruptionError);
}

TEST_F(TempDir, TensorFileOnDisk) {
  const Tensor t({2, 2}, {1, 2, 3, 4});
  write_tensor(t, dir_ / "t.sert");
  const auto back = read_tensor(dir_ / "t.sert");
  EXPECT_EQ(back.shape(), t.shape());
  EXPECT_FLOAT_EQ(back[3], 4.0f);
  write_text(dir_ / "bad.sert", "XXXX");
  EXPECT_THROW(read_tensor(dir_ / "bad.sert"), Error);
  EXPECT_THROW(read_tensor(dir_ / "missing.sert"), IoError);
}

const char* kLine =
    R"({"id":"a","feature_path":"f/a.sert","gender_id":0,"label_id":%d,"text_embedding_path":"t/a.sert"})";

std::string line(int label) {
  char buf[256];
  std::snprintf(buf, sizeof buf, kLine, label);
  return buf;
}

TEST_F(TempDir, ManifestHistogram) {
  write_text(dir_ / "m.jsonl", line(1) + "\n" + line(1) + "\n\n" + line(7) + "\n");
  const auto m = load_manifest(dir_ / "m.jsonl");
  EXPECT_EQ(m.records.size(), 3u);
  EXPECT_EQ(m.histogram[1], 2u);
  EXPECT_EQ(m.histogram[7], 1u);
  EXPECT_EQ(m.resolve("f/a.sert"), dir_ / "f/a.sert");
}

TEST_F(TempDir, ManifestListsOffendingLines) {
  const std::string unknown =
      R"({"id":"b","feature_path":"x","gender_id":0,"label_id":0,"text_embedding_path":"y","extra":1})";
  const std::string bad_gender =
      R"({"id":"c","feature_path":"x","gender_id":2,"label_id":0,"text_embedding_path":"y"})";
  write_text(dir_ / "m.jsonl", line(0) + "\n" + line(9) + "\n" + unknown + "\n" + bad_gender + "\n{oops\n");
  try {
    load_manifest(dir_ / "m.jsonl");
    FAIL();
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    for (const char* want : {"line 2", "line 3", "line 4", "line 5"}) {
      EXPECT_NE(msg.find(want), std::string::npos) << want;
    }
    EXPECT_EQ(msg.find("line 1:"), std::string::npos);
  }
}

TEST_F(TempDir, EmptyManifestIsEmpty) {
  write_text(dir_ / "m.jsonl", "");
  EXPECT_TRUE(load_manifest(dir_ / "m.jsonl").records.empty());
}

TEST_F(TempDir, ManifestSaveLoad) {
  Manifest m;
  m.records.push_back({"u", "f.sert", 1, 3, "t.sert"});
  save_manifest(m, dir_ / "m.jsonl");
  const auto back = load_manifest(dir_ / "m.jsonl");
  ASSERT_EQ(back.records.size(), 1u);
  EXPECT_EQ(back.records[0].label_id, 3);
  EXPECT_EQ(back.records[0].gender_id, 1);
  EXPECT_EQ(back.records[0].text_embedding_path, "t.sert");
}

TEST_F(TempDir, SyntheticIsDeterministicAndMatchesCounts) {
  SyntheticSpec spec;
  spec.class_counts = {10, 5};
  spec.seed = 7;
  spec.frames_min = 5;
  spec.frames_max = 9;
  const auto a = generate_synthetic_dataset(spec, dir_ / "a");
  generate_synthetic_dataset(spec, dir_ / "b");
  EXPECT_EQ(a.train.records.size(), 15u);
  EXPECT_EQ(a.train.histogram[0], 10u);
  EXPECT_EQ(a.train.histogram[1], 5u);
  EXPECT_EQ(read_bytes(dir_ / "a/train.jsonl"), read_bytes(dir_ / "b/train.jsonl"));
  for (const auto& u : a.train.records) {
    EXPECT_EQ(read_bytes(dir_ / "a" / u.feature_path), read_bytes(dir_ / "b" / u.feature_path));
    EXPECT_EQ(read_bytes(dir_ / "a" / u.text_embedding_path), read_bytes(dir_ / "b" / u.text_embedding_path));
  }
  const auto loaded = load_dataset(load_manifest(dir_ / "a/train.jsonl"), 4, 32);
  ASSERT_EQ(loaded.size(), 15u);
  for (const auto& lu : loaded) {
    EXPECT_EQ(lu.features.dim(0), 4u);
    EXPECT_GE(lu.features.dim(1), 5u);
    EXPECT_LE(lu.features.dim(1), 9u);
    EXPECT_EQ(lu.text.numel(), kTextDim);
  }
  EXPECT_THROW(load_dataset(a.train, 4, 16), ValidationError);
}

TEST_F(TempDir, SyntheticSeedChangesOutput) {
  SyntheticSpec spec;
  spec.class_counts = {3, 3};
  spec.frames_min = spec.frames_max = 4;
  spec.seed = 1;
  generate_synthetic_dataset(spec, dir_ / "a");
  spec.seed = 2;
  generate_synthetic_dataset(spec, dir_ / "b");
  EXPECT_NE(read_bytes(dir_ / "a/features/train_00000.sert"), read_bytes(dir_ / "b/features/train_00000.sert"));
}

TEST_F(TempDir, SyntheticDevSplitAndSignal) {
  SyntheticSpec spec;
  spec.class_counts = {20, 20};
  spec.dev_class_counts = {4, 4};
  spec.frames_min = spec.frames_max = 10;
  spec.separation = 5.0;
  const auto ds = generate_synthetic_dataset(spec, dir_);
  EXPECT_EQ(ds.dev.records.size(), 8u);
  // The class means of the text embeddings differ by about separation * sqrt(2).
  const auto loaded = load_dataset(ds.train);
  std::vector<double> mean0(kTextDim), mean1(kTextDim);
  for (const auto& lu : loaded) {
    auto& m = lu.meta.label_id == 0 ? mean0 : mean1;
    for (std::size_t k = 0; k < kTextDim; ++k) m[k] += lu.text[k] / 20.0;
  }
  double dist = 0.0;
  for (std::size_t k = 0; k < kTextDim; ++k) dist += (mean0[k] - mean1[k]) * (mean0[k] - mean1[k]);
  EXPECT_NEAR(std::sqrt(dist), 5.0 * std::sqrt(2.0), 2.0);
}

TEST(SyntheticSpecValidate, RejectsBadFields) {
  SyntheticSpec spec;
  EXPECT_THROW(spec.validate(), ValidationError);  // no classes
  spec.class_counts = {1, 0};
  EXPECT_THROW(spec.validate(), ValidationError);
  spec.class_counts = std::vector<std::size_t>(9, 1);
  EXPECT_THROW(spec.validate(), ValidationError);
  spec.class_counts = {1};
  spec.noise = 0.0;
  EXPECT_THROW(spec.validate(), ValidationError);
  spec.noise = 1.0;
  spec.frames_min = 10;
  spec.frames_max = 5;
  EXPECT_THROW(spec.validate(), ValidationError);
}

TEST(SyntheticOutput, UnwritableDirectoryIsIoError) {
  SyntheticSpec spec;
  spec.class_counts = {1};
  EXPECT_THROW(generate_synthetic_dataset(spec, "/proc/emohead_cannot_write"), IoError);
}

}  // namespace
}  // namespace emohead
