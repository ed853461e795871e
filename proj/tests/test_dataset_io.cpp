#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "dcom/io.hpp"
#include "support.hpp"

using namespace dcom;

namespace {

std::vector<unsigned char> header(const char* magic, std::uint32_t n, std::uint32_t d) {
  std::vector<unsigned char> b(magic, magic + 4);
  io::detail::store_u32(b, n);
  io::detail::store_u32(b, d);
  return b;
}

void push_float(std::vector<unsigned char>& b, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  io::detail::store_u32(b, bits);
}

Errc code_of(const std::vector<unsigned char>& bytes) {
  try {
    io::decode_embeddings(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "decode did not throw";
  return Errc::Io;
}

}  // namespace

TEST(DatasetIo, DecodesTwoByTwo) {
  auto b = header("DCM1", 2, 2);
  for (float f : {0.f, 0.f, 3.f, 4.f}) push_float(b, f);
  const auto set = io::decode_embeddings(b);
  EXPECT_EQ(set.size(), 2u);
  EXPECT_EQ(set.dim(), 2u);
  EXPECT_EQ(set.row(1)[0], 3.f);
  EXPECT_EQ(set.row(1)[1], 4.f);
  EXPECT_EQ(io::encode_embeddings(set), b);
}

TEST(DatasetIo, ErrorsNameByteOffsets) {
  auto bad = header("XXXX", 1, 1);
  push_float(bad, 1.f);
  EXPECT_EQ(code_of(bad), Errc::BadMagic);

  auto trunc = header("DCM1", 2, 2);
  push_float(trunc, 1.f);
  EXPECT_EQ(code_of(trunc), Errc::Truncated);
  try {
    io::decode_embeddings(trunc);
  } catch (const Error& e) {
    ASSERT_TRUE(e.offset().has_value());
    EXPECT_EQ(*e.offset(), trunc.size());
  }

  EXPECT_EQ(code_of(header("DCM1", 0xFFFFFFFFu, 0xFFFFFFFFu)), Errc::Overflow);

  auto nan = header("DCM1", 1, 2);
  push_float(nan, 1.f);
  push_float(nan, std::numeric_limits<float>::quiet_NaN());
  EXPECT_EQ(code_of(nan), Errc::NonFinite);
  try {
    io::decode_embeddings(nan);
  } catch (const Error& e) {
    EXPECT_EQ(*e.offset(), 16u);
  }

  auto extra = header("DCM1", 1, 1);
  push_float(extra, 1.f);
  extra.push_back(0);
  EXPECT_EQ(code_of(extra), Errc::TrailingData);

  EXPECT_EQ(code_of({'D', 'C'}), Errc::Truncated);
}

TEST(DatasetIo, MixtureRoundTripIsBitIdentical) {
  MixtureSpec spec;
  spec.num_classes = 4;
  spec.points_per_class = 25;
  spec.dim = 16;
  spec.seed = 11;
  const auto set = gen_gaussian_mixture(spec);
  ASSERT_EQ(set.size(), 100u);
  const auto dir = test::scratch_dir("io_roundtrip");
  io::write_embedding_file(set, dir / "x.dcm");
  io::write_label_file(set.labels(), dir / "y.dcl");
  const auto back = io::load_dataset(dir / "x.dcm", dir / "y.dcl");
  EXPECT_EQ(back, set);
  EXPECT_EQ(io::encode_embeddings(back), io::encode_embeddings(set));
  EXPECT_EQ(std::memcmp(back.values().data(), set.values().data(), set.values().size() * 4), 0);
}

TEST(DatasetIo, SingleValueFileIsSixteenBytes) {
  const EmbeddingSet one(1, 1, {0.0f});
  const auto bytes = io::encode_embeddings(one);
  EXPECT_EQ(bytes.size(), 16u);
  EXPECT_EQ(io::encode_embeddings(one), bytes);
}

TEST(DatasetIo, RejectsNonFiniteInMemory) {
  EXPECT_THROW(EmbeddingSet(1, 2, {1.0f, std::numeric_limits<float>::quiet_NaN()}), Error);
  try {
    EmbeddingSet(1, 2, {1.0f, std::numeric_limits<float>::infinity()});
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NonFinite);
  }
}

TEST(DatasetIo, LabelsCodec) {
  const std::vector<Label> labels{0, 3, -1, 2};
  const auto bytes = io::encode_labels(labels);
  EXPECT_EQ(bytes.size(), 8u + 16u);
  EXPECT_EQ(io::decode_labels(bytes), labels);
  auto bad = bytes;
  bad[3] = 'X';
  EXPECT_THROW(io::decode_labels(bad), Error);
}

TEST(DatasetIo, CsvRoundTrip) {
  const auto set = test::uniform_cloud(7, 3, 5);
  const auto dir = test::scratch_dir("io_csv");
  io::write_embedding_file(set, dir / "x.csv");
  EXPECT_EQ(io::read_embedding_file(dir / "x.csv"), set);
  const std::vector<Label> labels{0, 1, 1, 0, 2, -1, 1};
  io::write_label_file(labels, dir / "y.csv");
  EXPECT_EQ(io::read_label_file(dir / "y.csv"), labels);
}

TEST(DatasetIo, MissingFileIsIoError) {
  try {
    io::read_embedding_file("/nonexistent/x.dcm");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::Io);
    EXPECT_NE(std::string(e.what()).find("dataset-io"), std::string::npos);
  }
}

TEST(Normalize, Examples) {
  const auto n = l2_normalize(EmbeddingSet(2, 2, {3.f, 4.f, 1.f, 0.f}));
  EXPECT_NEAR(n.row(0)[0], 0.6f, 1e-7);
  EXPECT_NEAR(n.row(0)[1], 0.8f, 1e-7);
  EXPECT_EQ(n.row(1)[0], 1.f);
  EXPECT_EQ(n.row(1)[1], 0.f);
  try {
    l2_normalize(EmbeddingSet(2, 2, {1.f, 1.f, 0.f, 0.f}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ZeroVector);
  }
}

TEST(Normalize, UnitNormAndNearlyIdempotent) {
  const auto set = l2_normalize(test::uniform_cloud(50, 8, 3));
  const auto twice = l2_normalize(set);
  for (std::size_t i = 0; i < set.size(); ++i) {
    double s = 0;
    for (float x : set.row(i)) s += double(x) * x;
    EXPECT_NEAR(std::sqrt(s), 1.0, 1e-6);
    for (std::size_t j = 0; j < set.dim(); ++j) EXPECT_NEAR(twice.row(i)[j], set.row(i)[j], 1e-7);
  }
}

TEST(Distance, Examples) {
  const EmbeddingSet s(3, 2, {0.f, 0.f, 3.f, 4.f, 1.f, 0.f});
  EXPECT_EQ(distance(s, 0, 1), 5.0);
  EXPECT_EQ(distance(s, 1, 1), 0.0);
  const EmbeddingSet u(2, 2, {1.f, 0.f, 0.f, 1.f});
  EXPECT_NEAR(distance(u, 0, 1), 1.41421, 1e-5);
  const std::vector<float> a{1.f, 2.f}, b{1.f};
  EXPECT_THROW(euclidean_distance(a, b), Error);
}

TEST(Distance, MetricProperties) {
  const auto s = test::uniform_cloud(30, 5, 9);
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      EXPECT_EQ(distance(s, i, j), distance(s, j, i));
      for (std::size_t k = 0; k < s.size(); k += 7) {
        EXPECT_LE(distance(s, i, k), distance(s, i, j) + distance(s, j, k) + 1e-12);
      }
    }
  }
}

TEST(Distance, BoundedAgreesWithExact) {
  const auto s = test::uniform_cloud(60, 40, 21);
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      for (double r : {0.5, 1.5, 2.0, 2.5, 3.0}) {
        EXPECT_EQ(within_radius(s.row(i), s.row(j), r), distance(s, i, j) <= r);
      }
    }
  }
}

TEST(Mixture, DeterministicAndBalanced) {
  MixtureSpec spec;
  spec.num_classes = 3;
  spec.points_per_class = 10;
  spec.seed = 7;
  const auto a = gen_gaussian_mixture(spec);
  const auto b = gen_gaussian_mixture(spec);
  EXPECT_EQ(io::encode_embeddings(a), io::encode_embeddings(b));
  ASSERT_EQ(a.size(), 30u);
  std::vector<int> counts(3, 0);
  for (Label l : a.labels()) ++counts[l];
  EXPECT_EQ(counts, (std::vector<int>{10, 10, 10}));
}

TEST(Mixture, MeansSitAtTheRequestedSeparation) {
  MixtureSpec spec;
  spec.num_classes = 8;
  spec.dim = 16;
  spec.class_separation = 6.0;
  auto gap = [&](std::size_t a, std::size_t b) {
    const auto ma = mixture_mean(spec, a), mb = mixture_mean(spec, b);
    double s = 0;
    for (std::size_t j = 0; j < spec.dim; ++j) s += (ma[j] - mb[j]) * (ma[j] - mb[j]);
    return std::sqrt(s);
  };
  for (std::size_t c = 0; c + 1 < 8; ++c) EXPECT_NEAR(gap(c, c + 1), 6.0, 1e-12);
  spec.num_classes = 40;
  for (std::size_t a = 0; a < 40; ++a) {
    for (std::size_t b = a + 1; b < 40; ++b) EXPECT_GE(gap(a, b), 6.0 - 1e-12);
  }
  spec.dim = 1;
  EXPECT_NEAR(gap(2, 3), 6.0, 1e-12);
}

TEST(Mixture, RejectsNonPositiveFields) {
  MixtureSpec spec;
  spec.within_std = 0.0;
  EXPECT_THROW(gen_gaussian_mixture(spec), Error);
  spec = {};
  spec.dim = 0;
  EXPECT_THROW(gen_gaussian_mixture(spec), Error);
}
