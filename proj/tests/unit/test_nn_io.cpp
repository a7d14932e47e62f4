#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "edgeav/errors.hpp"
#include "edgeav/nn_io.hpp"
#include "edgeav/quantize.hpp"

using namespace edgeav;
using namespace edgeav::nn;

namespace {

ModelSnapshot sample_snapshot() {
  Rng rng(21);
  const std::size_t q_sizes[] = {8, 12, 5};
  const Activation q_acts[] = {Activation::ReLU, Activation::Linear};
  const std::size_t p_sizes[] = {9, 6, 1};
  const Activation p_acts[] = {Activation::ReLU, Activation::Sigmoid};
  ModelSnapshot s;
  s.qnet = Mlp::create(q_sizes, q_acts, rng);
  s.perception = prune_by_magnitude(Mlp::create(p_sizes, p_acts, rng), 0.3).model;
  s.qnet.layers[0].b[3] = 1.0 / 3.0;
  return s;
}

}  // namespace

TEST(ModelFile, RoundTripIsBitExact) {
  const ModelSnapshot s = sample_snapshot();
  const std::string text = serialize_snapshot(s);
  EXPECT_EQ(text.rfind("edgeav-model 1\n", 0), 0u);
  const ModelSnapshot back = parse_snapshot(text);
  EXPECT_EQ(back, s);
  EXPECT_EQ(serialize_snapshot(back), text);
}

TEST(ModelFile, MasksSurvive) {
  const ModelSnapshot back = parse_snapshot(serialize_snapshot(sample_snapshot()));
  EXPECT_FALSE(back.perception.layers[0].mask.empty());
  EXPECT_TRUE(back.qnet.layers[0].mask.empty());
}

TEST(ModelFile, SectionNameChecked) {
  std::stringstream ss;
  write_mlp(ss, "alpha", sample_snapshot().qnet);
  EXPECT_THROW(read_mlp(ss, "beta"), FormatError);
}

TEST(ModelFile, MalformedContentRejected) {
  const std::string good = serialize_snapshot(sample_snapshot());
  EXPECT_THROW(parse_snapshot(""), FormatError);
  EXPECT_THROW(parse_snapshot("edgeav-model 2\n" + good.substr(good.find('\n') + 1)), FormatError);
  EXPECT_THROW(parse_snapshot(good.substr(0, good.size() / 2)), FormatError);
  std::string bad = good;
  bad.replace(bad.find("relu"), 4, "tanh");
  EXPECT_THROW(parse_snapshot(bad), FormatError);
}

TEST(ModelFile, FileErrorsAreIoErrors) {
  EXPECT_THROW(load_snapshot("/nonexistent/dir/model.txt"), IoError);
  EXPECT_THROW(save_snapshot("/nonexistent/dir/model.txt", sample_snapshot()), IoError);
  const auto path = std::filesystem::temp_directory_path() / "edgeav_test_model.txt";
  save_snapshot(path, sample_snapshot());
  EXPECT_EQ(load_snapshot(path), sample_snapshot());
  std::filesystem::remove(path);
}
